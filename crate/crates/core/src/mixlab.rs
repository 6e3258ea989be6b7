//! Statistics over spacer sequences and rank-one words: the triangular law
//! of uniform differences, correlation decay of level sets, and the parity
//! structure of consecutive residues.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitWord;
use crate::numtheory::ResidueSequence;
use crate::spacergen::{DiffHistogram, PartialSumTable};
use crate::tower::{self, RankOneWord, TowerError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MixError {
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("shift {shift} out of range [0, {max}]")]
    ShiftOutOfRange { shift: u64, max: u64 },
    #[error("stride must be positive")]
    ZeroStride,
    #[error("indicator length {actual} differs from word length {expected}")]
    LengthMismatch { expected: u64, actual: u64 },
    #[error("expected a window-1 table, got window {0}")]
    WindowNotOne(usize),
}

pub(crate) fn ratio_text<T: std::fmt::Display + Clone + num_integer::Integer>(r: &Ratio<T>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn ser_ratio<S: Serializer, T>(r: &Ratio<T>, s: S) -> Result<S::Ok, S::Error>
where
    T: std::fmt::Display + Clone + num_integer::Integer,
{
    s.serialize_str(&ratio_text(r))
}

/// `c(n) = (H + 1 - |n|) / (H + 1)^2` on `[-H, H]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TriangularLaw {
    #[serde(rename = "H")]
    pub height: u64,
}

impl TriangularLaw {
    pub fn new(height: u64) -> Self {
        TriangularLaw { height }
    }

    pub fn mass(&self, n: i64) -> Ratio<u64> {
        triangular_mass(self.height, n)
    }

    pub fn support(&self) -> impl Iterator<Item = i64> {
        let h = self.height as i64;
        -h..=h
    }
}

/// Mass of the difference of two independent uniforms on `{0..H}` at `n`;
/// zero outside `[-H, H]`.
pub fn triangular_mass(height: u64, n: i64) -> Ratio<u64> {
    let side = height + 1;
    let dist = n.unsigned_abs();
    if dist > height {
        return Ratio::zero();
    }
    Ratio::new(side - dist, side * side)
}

/// `½ Σ_n |hist(n)/total - c(n)|` over the union of supports, exact.
pub fn tv_distance(hist: &DiffHistogram, law: &TriangularLaw) -> Result<Ratio<u128>, MixError> {
    let total = hist.total() as i128;
    if total == 0 {
        return Err(MixError::EmptyHistogram);
    }
    let side = law.height as i128 + 1;
    let scale = side * side;
    // |count·(H+1)^2 - (H+1-|n|)·total| summed over every value seen by either side.
    let mut numer: u128 = 0;
    for (v, count) in hist.iter() {
        let mass = (side - v.unsigned_abs() as i128).max(0);
        numer += (count as i128 * scale - mass * total).unsigned_abs();
    }
    for n in law.support() {
        if hist.count(n) == 0 {
            numer += ((side - n.unsigned_abs() as i128) * total) as u128;
        }
    }
    Ok(Ratio::new(numer, 2 * (total * scale) as u128))
}

/// Stage plus a set of its levels; names a measurable set of the final word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSet {
    pub stage: usize,
    pub levels: BTreeSet<u64>,
}

impl LevelSet {
    pub fn new(stage: usize, levels: impl IntoIterator<Item = u64>) -> Self {
        LevelSet {
            stage,
            levels: levels.into_iter().collect(),
        }
    }
}

/// `|{t < len - m : A(t) and B(t + m)}| / (len - m)`, an estimate of
/// `μ(A ∩ T^{-m} B)` whose boundary bias is at most `m / len`.
pub fn correlation(word: &RankOneWord, a: &BitWord, b: &BitWord, m: u64) -> Result<Ratio<u64>, MixError> {
    let len = word.len();
    for ind in [a, b] {
        if ind.len() as u64 != len {
            return Err(MixError::LengthMismatch {
                expected: len,
                actual: ind.len() as u64,
            });
        }
    }
    if m >= len {
        return Err(MixError::ShiftOutOfRange { shift: m, max: len - 1 });
    }
    let hits = a.shifted_and_count(b, m as usize);
    Ok(Ratio::new(hits, len - m))
}

/// Inclusive shift range `start, start + stride, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftRange {
    pub start: u64,
    pub end: u64,
    pub stride: u64,
}

impl ShiftRange {
    pub fn shifts(&self) -> impl Iterator<Item = u64> {
        let stride = self.stride.max(1);
        (self.start..=self.end).step_by(stride as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixPoint {
    pub m: u64,
    pub estimate: f64,
    #[serde(serialize_with = "ser_ratio")]
    pub estimate_exact: Ratio<u64>,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixReport {
    pub a: LevelSet,
    pub b: LevelSet,
    pub word_length: u64,
    pub shifts: ShiftRange,
    #[serde(serialize_with = "ser_ratio")]
    pub measure_a: Ratio<u64>,
    #[serde(serialize_with = "ser_ratio")]
    pub measure_b: Ratio<u64>,
    /// `μ(A)·μ(B)`.
    #[serde(serialize_with = "ser_ratio")]
    pub baseline: Ratio<u128>,
    pub baseline_value: f64,
    pub points: Vec<MixPoint>,
    #[serde(serialize_with = "ser_ratio")]
    pub max_deviation: Ratio<i128>,
    pub max_deviation_value: f64,
    pub max_deviation_shift: u64,
    /// `m_max / (h_J + 1)`.
    pub boundary_bias_bound: f64,
}

impl MixReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,estimate,baseline,deviation\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.m, p.estimate, self.baseline_value, p.deviation);
        }
        out
    }
}

fn to_f64<T: ToPrimitive + Clone + num_integer::Integer>(r: &Ratio<T>) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Correlations of two level sets over a range of shifts, against the
/// product baseline. Shifts are limited to `m <= h_J / 2`.
pub fn correlation_sweep(
    word: &RankOneWord,
    a: &LevelSet,
    b: &LevelSet,
    shifts: ShiftRange,
) -> Result<MixReport, MixError> {
    if shifts.stride == 0 {
        return Err(MixError::ZeroStride);
    }
    let height = word.len() - 1;
    let max = height / 2;
    if shifts.end > max || shifts.start > shifts.end {
        return Err(MixError::ShiftOutOfRange {
            shift: shifts.end.max(shifts.start),
            max,
        });
    }
    let ind_a = word.level_set_indicator(a.stage, &a.levels)?;
    let ind_b = word.level_set_indicator(b.stage, &b.levels)?;
    let measure_a = tower::level_measure(word.summaries(), a.stage, &a.levels)?;
    let measure_b = tower::level_measure(word.summaries(), b.stage, &b.levels)?;
    let baseline = Ratio::new(
        *measure_a.numer() as u128 * *measure_b.numer() as u128,
        *measure_a.denom() as u128 * *measure_b.denom() as u128,
    );
    let baseline_signed = Ratio::new(*baseline.numer() as i128, *baseline.denom() as i128);

    let ms: Vec<u64> = shifts.shifts().collect();
    let exact: Vec<(u64, Ratio<u64>, Ratio<i128>)> = ms
        .par_iter()
        .map(|&m| {
            let est = correlation(word, &ind_a, &ind_b, m)?;
            let signed = Ratio::new(*est.numer() as i128, *est.denom() as i128);
            Ok((m, est, (signed - baseline_signed).abs()))
        })
        .collect::<Result<_, MixError>>()?;

    let mut max_deviation = Ratio::zero();
    let mut max_deviation_shift = shifts.start;
    for (m, _, dev) in &exact {
        if *dev > max_deviation {
            max_deviation = *dev;
            max_deviation_shift = *m;
        }
    }
    let points = exact
        .into_iter()
        .map(|(m, est, dev)| MixPoint {
            m,
            estimate: to_f64(&est),
            estimate_exact: est,
            deviation: to_f64(&dev),
        })
        .collect();
    Ok(MixReport {
        a: a.clone(),
        b: b.clone(),
        word_length: word.len(),
        shifts,
        measure_a,
        measure_b,
        baseline_value: to_f64(&baseline),
        baseline,
        points,
        max_deviation_value: to_f64(&max_deviation),
        max_deviation,
        max_deviation_shift,
        boundary_bias_bound: shifts.end as f64 / word.len() as f64,
    })
}

/// Parity statistics of `sigma_i = (rho[i] - rho[i+1]) mod 2`, `i = 1..r-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityReport {
    pub r: u64,
    pub q: u64,
    pub sigma: Vec<u8>,
    pub m0: u64,
    pub m1: u64,
    /// `r/q + q - 1` for odd `q`, `q - 1` for even `q`.
    #[serde(serialize_with = "ser_ratio")]
    pub bound: Ratio<u64>,
    pub bound_ok: bool,
    /// Indices where the interval prediction of `sigma_i` matches.
    pub interval_agreement: u64,
}

impl ParityReport {
    pub fn imbalance(&self) -> u64 {
        self.m0.abs_diff(self.m1)
    }
}

fn parity_bound(r: u64, q: u64) -> Ratio<u64> {
    if q % 2 == 1 {
        Ratio::new(r + q * (q - 1), q)
    } else {
        Ratio::from_integer(q - 1)
    }
}

pub fn parity_counts(rs: &ResidueSequence) -> ParityReport {
    let r = rs.modulus().get();
    let q = rs.generator();
    let rho = rs.as_slice();
    let mut sigma = Vec::with_capacity(rho.len() - 1);
    let mut agreement = 0;
    for w in rho.windows(2) {
        let s = ((w[0] ^ w[1]) & 1) as u8;
        sigma.push(s);
        // rho[i] lies in I_k = [k r/q, (k+1) r/q) exactly for this k.
        let k = ((w[0] as u128 * q as u128) / r as u128) as u64;
        let predicted = if q % 2 == 1 { k & 1 } else { (w[0] ^ k) & 1 } as u8;
        if predicted == s {
            agreement += 1;
        }
    }
    let m1 = sigma.iter().filter(|&&s| s == 1).count() as u64;
    let m0 = sigma.len() as u64 - m1;
    let mut report = ParityReport {
        r,
        q,
        sigma,
        m0,
        m1,
        bound: parity_bound(r, q),
        bound_ok: false,
        interval_agreement: agreement,
    };
    report.bound_ok = parity_bound_check(&report);
    report
}

/// `||M0| - |M1|| <= bound`, compared as rationals.
pub fn parity_bound_check(report: &ParityReport) -> bool {
    Ratio::from_integer(report.imbalance()) <= parity_bound(report.r, report.q)
}

/// `|{distinct S(i, 1)}| / (2r + 1)`.
pub fn s1_distinct_density(table: &PartialSumTable, r: u64) -> Result<Ratio<u64>, MixError> {
    if table.window() != 1 {
        return Err(MixError::WindowNotOne(table.window()));
    }
    let distinct: HashSet<i64> = table.values().iter().copied().collect();
    Ok(Ratio::new(distinct.len() as u64, 2 * r + 1))
}

/// Fraction of `i` with `(-1)^{S(i,1)} = (-1)^h`. Values near one mean the
/// eigenvalue `-1` obstruction is present at that stage.
pub fn parity_obstruction(table: &PartialSumTable, h: u64) -> Result<Ratio<u64>, MixError> {
    if table.window() != 1 {
        return Err(MixError::WindowNotOne(table.window()));
    }
    if table.is_empty() {
        return Ok(Ratio::zero());
    }
    let same = table
        .values()
        .iter()
        .filter(|&&v| v.rem_euclid(2) as u64 == h % 2)
        .count() as u64;
    Ok(Ratio::new(same, table.len() as u64))
}
