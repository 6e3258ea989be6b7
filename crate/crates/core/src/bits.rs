//! Packed bit vector used for rank-one words and level-set indicators.

/// Bits stored little-endian within `u64` words; bits past `len` are zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitWord {
    words: Vec<u64>,
    len: usize,
}

impl BitWord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitWord {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        BitWord {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut w = Self::with_capacity(len);
        w.push_run(true, len);
        w
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Append `n` copies of `bit`.
    pub fn push_run(&mut self, bit: bool, n: usize) {
        if n == 0 {
            return;
        }
        let new_len = self.len + n;
        self.words.resize(new_len.div_ceil(64), 0);
        if bit {
            let mut i = self.len;
            while i < new_len {
                let offset = i % 64;
                let take = (64 - offset).min(new_len - i);
                let mask = if take == 64 { u64::MAX } else { ((1u64 << take) - 1) << offset };
                self.words[i / 64] |= mask;
                i += take;
            }
        }
        self.len = new_len;
    }

    /// Append all bits of `other`.
    pub fn extend_from(&mut self, other: &BitWord) {
        if other.len == 0 {
            return;
        }
        let shift = self.len % 64;
        let new_len = self.len + other.len;
        if shift == 0 {
            self.words.truncate(self.len / 64);
            self.words.extend_from_slice(&other.words);
        } else {
            for (idx, &w) in (self.len / 64..).zip(&other.words) {
                self.words[idx] |= w << shift;
                self.words.push(w >> (64 - shift));
            }
        }
        self.words.truncate(new_len.div_ceil(64));
        self.len = new_len;
    }

    /// The 64 bits starting at `start`, zero-filled past the end.
    #[inline]
    fn window(&self, start: usize) -> u64 {
        let idx = start / 64;
        let shift = start % 64;
        let lo = self.words.get(idx).copied().unwrap_or(0);
        if shift == 0 {
            lo
        } else {
            let hi = self.words.get(idx + 1).copied().unwrap_or(0);
            (lo >> shift) | (hi << (64 - shift))
        }
    }

    /// `|{t < len - shift : self[t] && other[t + shift]}|`.
    pub fn shifted_and_count(&self, other: &BitWord, shift: usize) -> u64 {
        assert_eq!(self.len, other.len, "bit words differ in length");
        if shift >= self.len {
            return 0;
        }
        let valid = self.len - shift;
        let full = valid / 64;
        let mut count = 0u64;
        for k in 0..full {
            count += (self.words[k] & other.window(64 * k + shift)).count_ones() as u64;
        }
        let rest = valid % 64;
        if rest > 0 {
            let mask = (1u64 << rest) - 1;
            count += (self.words[full] & other.window(64 * full + shift) & mask).count_ones() as u64;
        }
        count
    }

    /// Little-endian bytes of the packed words, `ceil(len / 8)` of them.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.truncate(self.len.div_ceil(8));
        bytes
    }
}

impl FromIterator<bool> for BitWord {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut w = BitWord::new();
        for b in iter {
            w.push_run(b, 1);
        }
        w
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}
