//! SplitMix64 with rejection sampling. The output stream is part of the
//! file-format contract: golden spacer files depend on it bit for bit.

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_CONST1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_CONST2: u64 = 0x94D0_49BB_1331_11EB;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_CONST1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_CONST2);
        z ^ (z >> 31)
    }

    /// Uniform draw on `{0, ..., max}`.
    ///
    /// Rejects raw outputs at or above the largest multiple of `max + 1`
    /// that fits below 2^64.
    pub fn uniform_inclusive(&mut self, max: u64) -> u64 {
        let span = max as u128 + 1;
        let limit = (1u128 << 64) - ((1u128 << 64) % span);
        loop {
            let z = self.next_u64() as u128;
            if z < limit {
                return (z % span) as u64;
            }
        }
    }
}

/// Seed for stage `stage` of a construction driven by `master`.
pub fn stage_seed(master: u64, stage: usize) -> u64 {
    master ^ (stage as u64).wrapping_mul(GOLDEN_GAMMA)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_vectors() {
        // Reference outputs of the canonical splitmix64.c for seed 0 and 1234567.
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);

        let mut rng = SplitMix64::new(1_234_567);
        assert_eq!(rng.next_u64(), 6_457_827_717_110_365_317);
        assert_eq!(rng.next_u64(), 3_203_168_211_198_807_973);
        assert_eq!(rng.next_u64(), 9_817_491_932_198_370_423);
    }

    #[test]
    fn uniform_stays_in_range_and_hits_every_value() {
        let mut rng = SplitMix64::new(7);
        let mut seen = [false; 6];
        for _ in 0..1000 {
            let v = rng.uniform_inclusive(5);
            assert!(v <= 5);
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(SplitMix64::new(3).uniform_inclusive(0), 0);
    }

    #[test]
    fn full_range_draw_never_rejects() {
        let mut a = SplitMix64::new(99);
        let mut b = SplitMix64::new(99);
        assert_eq!(a.uniform_inclusive(u64::MAX), b.next_u64());
    }

    #[test]
    fn stage_seeds_differ() {
        assert_eq!(stage_seed(42, 0), 42);
        assert_ne!(stage_seed(42, 1), stage_seed(42, 2));
        assert_eq!(stage_seed(42, 1), 42 ^ GOLDEN_GAMMA);
    }
}
