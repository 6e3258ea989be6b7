//! Cutting and stacking.
//!
//! Stage `j` is a tower of `h_j + 1` levels, encoded as the word `B_j`.
//! Cutting it into `r_j` columns and stacking each column with its
//! `s_j(i)` spacers on top gives
//!
//! ```text
//! B_{j+1} = B_j 0^{s_j(1)} B_j 0^{s_j(2)} ... B_j 0^{s_j(r_j)}
//! ```
//!
//! where `1` marks a level inherited from the first tower and `0` a spacer.
//! Building `J` stages yields `B_{J+1}`; all measures are taken in that
//! finite system, normalised to total mass one.

use std::collections::BTreeSet;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{fnv1a64, BitWord};
use crate::numtheory::PrimeModulus;
use crate::rng::stage_seed;
use crate::spacergen::{self, SpacerError, SpacerSequence};

pub const DEFAULT_GUARD: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TowerError {
    #[error(transparent)]
    Spacer(#[from] SpacerError),
    #[error("stage {stage}: cut count must be at least 2, got {cuts}")]
    TooFewCuts { stage: usize, cuts: u64 },
    #[error("stage {stage}: expected {expected} spacers, got {actual}")]
    SpacerCountMismatch { stage: usize, expected: u64, actual: usize },
    #[error("construction too large: projected {projected} levels exceeds guard {guard}")]
    GuardExceeded { projected: u128, guard: u64 },
    #[error("height arithmetic overflowed")]
    Overflow,
    #[error("position {position} out of range for word of length {len}")]
    PositionOutOfRange { position: u64, len: u64 },
    #[error("stage {stage} out of range [1, {max}]")]
    StageOutOfRange { stage: usize, max: usize },
    #[error("level {level} out of range [0, {max}]")]
    LevelOutOfRange { level: u64, max: u64 },
    #[error("invalid address: {0}")]
    InvalidAddress(String),
}

/// How one stage picks its cut count and spacers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase", deny_unknown_fields)]
pub enum StagePlan {
    /// `r` columns, `r` prime, spacers from the residues of `q`.
    Algebraic {
        r: PrimeModulus,
        q: u64,
        #[serde(rename = "H")]
        height: u64,
    },
    /// `r` columns, spacers from uniform draws seeded by the stage index.
    Stochastic {
        r: u64,
        #[serde(rename = "H")]
        height: u64,
    },
    /// Spacers given verbatim; the cut count is their number.
    Explicit { s: Vec<u64> },
}

impl StagePlan {
    pub fn cuts(&self) -> u64 {
        match self {
            StagePlan::Algebraic { r, .. } => r.get(),
            StagePlan::Stochastic { r, .. } => *r,
            StagePlan::Explicit { s } => s.len() as u64,
        }
    }

    /// Upper bound on the stage's spacer total, known without generating it.
    fn spacer_bound(&self) -> u128 {
        match self {
            StagePlan::Algebraic { r, height, .. } => r.get() as u128 * *height as u128,
            StagePlan::Stochastic { r, height } => (*r as u128 + 1) * *height as u128,
            StagePlan::Explicit { s } => s.iter().map(|&x| x as u128).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionParams {
    /// The first tower has `h1 + 1` levels.
    pub h1: u64,
    pub stages: Vec<StagePlan>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_guard")]
    pub guard: u64,
}

fn default_guard() -> u64 {
    DEFAULT_GUARD
}

impl ConstructionParams {
    pub fn new(h1: u64, stages: Vec<StagePlan>) -> Self {
        ConstructionParams {
            h1,
            stages,
            master_seed: 0,
            guard: DEFAULT_GUARD,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_guard(mut self, guard: u64) -> Self {
        self.guard = guard;
        self
    }

    /// Upper bound on the final word length, computed without generating
    /// any spacers. Exact unless a stage is stochastic.
    pub fn projected_length(&self) -> Result<u128, TowerError> {
        let mut levels = self.h1 as u128 + 1;
        for plan in &self.stages {
            levels = levels
                .checked_mul(plan.cuts() as u128)
                .and_then(|x| x.checked_add(plan.spacer_bound()))
                .ok_or(TowerError::Overflow)?;
        }
        Ok(levels)
    }
}

/// Height bookkeeping for one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageSummary {
    /// 1-based stage index `j`.
    pub stage: usize,
    /// `h_j`.
    pub height: u64,
    /// `h_j + 1`.
    pub levels: u64,
    /// `r_j`, zero for the final stage.
    pub cuts: u64,
    /// `Σ s_j(i)`, zero for the final stage.
    pub spacer_total: u64,
}

impl StageSummary {
    pub fn initial(h1: u64) -> Result<Self, TowerError> {
        Ok(StageSummary {
            stage: 1,
            height: h1,
            levels: h1.checked_add(1).ok_or(TowerError::Overflow)?,
            cuts: 0,
            spacer_total: 0,
        })
    }

    /// Width of one level relative to this stage's tower.
    pub fn measure_unit(&self) -> Ratio<u64> {
        Ratio::new(1, self.levels)
    }
}

/// `h_{j+1} + 1 = (h_j + 1) r_j + Σ s_j(i)`.
///
/// Records `r` and the spacer total on `summary` and returns the next stage.
pub fn advance_stage(
    summary: &mut StageSummary,
    r: u64,
    spacers: &SpacerSequence,
    guard: u64,
) -> Result<StageSummary, TowerError> {
    if r < 2 {
        return Err(TowerError::TooFewCuts { stage: summary.stage, cuts: r });
    }
    if spacers.columns() as u64 != r {
        return Err(TowerError::SpacerCountMismatch {
            stage: summary.stage,
            expected: r,
            actual: spacers.columns(),
        });
    }
    let total = spacers.total();
    let levels = (summary.levels as u128)
        .checked_mul(r as u128)
        .and_then(|x| x.checked_add(total))
        .ok_or(TowerError::Overflow)?;
    if levels > guard as u128 {
        return Err(TowerError::GuardExceeded { projected: levels, guard });
    }
    summary.cuts = r;
    summary.spacer_total = u64::try_from(total).map_err(|_| TowerError::Overflow)?;
    let levels = levels as u64;
    Ok(StageSummary {
        stage: summary.stage + 1,
        height: levels - 1,
        levels,
        cuts: 0,
        spacer_total: 0,
    })
}

/// The materialised word `B_{J+1}` plus the tables needed to decode it.
#[derive(Debug, Clone)]
pub struct RankOneWord {
    params: ConstructionParams,
    bits: BitWord,
    summaries: Vec<StageSummary>,
    spacers: Vec<SpacerSequence>,
    /// `column_starts[j-1][i]`: offset of column `i + 1` inside `B_{j+1}`.
    column_starts: Vec<Vec<u64>>,
}

/// Where a position of the final word sits relative to a reference stage.
///
/// `path` lists 1-based column indices from the outermost stage inward.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionAddress {
    /// Level `level` of the reference tower.
    Level { level: u64, path: Vec<usize> },
    /// The `offset`-th spacer stacked on column `column` at stage `stage`.
    Spacer {
        stage: usize,
        column: usize,
        offset: u64,
        path: Vec<usize>,
    },
}

fn stage_spacers(plan: &StagePlan, stage: usize, master_seed: u64) -> Result<SpacerSequence, SpacerError> {
    match plan {
        StagePlan::Algebraic { r, q, height } => spacergen::algebraic_spacers(*r, *q, *height),
        StagePlan::Stochastic { r, height } => {
            let cols = usize::try_from(*r).map_err(|_| SpacerError::TooFewColumns(usize::MAX))?;
            spacergen::stochastic_spacers(*height, stage_seed(master_seed, stage), cols)
        }
        StagePlan::Explicit { s } => SpacerSequence::explicit(s.clone(), 0),
    }
}

/// Build `B_{J+1}` stage by stage. The guard is checked against the
/// projected length before any spacer or word storage is allocated.
pub fn build_word(params: &ConstructionParams) -> Result<RankOneWord, TowerError> {
    let projected = params.projected_length()?;
    if projected > params.guard as u128 {
        return Err(TowerError::GuardExceeded {
            projected,
            guard: params.guard,
        });
    }
    for (idx, plan) in params.stages.iter().enumerate() {
        if plan.cuts() < 2 {
            return Err(TowerError::TooFewCuts { stage: idx + 1, cuts: plan.cuts() });
        }
    }

    let mut summaries = vec![StageSummary::initial(params.h1)?];
    let mut spacers = Vec::with_capacity(params.stages.len());
    let mut column_starts = Vec::with_capacity(params.stages.len());
    let mut word = BitWord::ones(params.h1 as usize + 1);

    for (idx, plan) in params.stages.iter().enumerate() {
        let stage = idx + 1;
        let seq = stage_spacers(plan, stage, params.master_seed)?;
        let current = summaries.last_mut().expect("initial summary present");
        let next = advance_stage(current, plan.cuts(), &seq, params.guard)?;

        let mut stacked = BitWord::with_capacity(next.levels as usize);
        let mut starts = Vec::with_capacity(seq.columns());
        for &s in seq.spacers() {
            starts.push(stacked.len() as u64);
            stacked.extend_from(&word);
            stacked.push_run(false, s as usize);
        }
        assert_eq!(stacked.len() as u64, next.levels, "word length diverged from height recurrence");

        word = stacked;
        summaries.push(next);
        spacers.push(seq);
        column_starts.push(starts);
    }

    Ok(RankOneWord {
        params: params.clone(),
        bits: word,
        summaries,
        spacers,
        column_starts,
    })
}

impl RankOneWord {
    pub fn bits(&self) -> &BitWord {
        &self.bits
    }

    pub fn len(&self) -> u64 {
        self.bits.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of cutting stages `J`.
    pub fn stages(&self) -> usize {
        self.spacers.len()
    }

    /// Summaries for stages `1..=J+1`.
    pub fn summaries(&self) -> &[StageSummary] {
        &self.summaries
    }

    pub fn summary(&self, stage: usize) -> &StageSummary {
        &self.summaries[stage - 1]
    }

    /// Spacers used at stage `j` (1-based).
    pub fn spacers(&self, stage: usize) -> &SpacerSequence {
        &self.spacers[stage - 1]
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    /// Positions holding a level of the first tower.
    pub fn tower_symbols(&self) -> u64 {
        self.bits.count_ones()
    }

    pub fn checksum(&self) -> u64 {
        fnv1a64(&self.bits.to_bytes())
    }

    fn check_stage(&self, stage: usize) -> Result<(), TowerError> {
        let max = self.summaries.len();
        if stage == 0 || stage > max {
            return Err(TowerError::StageOutOfRange { stage, max });
        }
        Ok(())
    }

    /// Locate position `t` relative to the stage-`j0` tower; `O(J log r)`.
    pub fn decode_position(&self, t: u64, j0: usize) -> Result<PositionAddress, TowerError> {
        self.check_stage(j0)?;
        if t >= self.len() {
            return Err(TowerError::PositionOutOfRange { position: t, len: self.len() });
        }
        let mut pos = t;
        let mut path = Vec::new();
        for stage in (j0..=self.stages()).rev() {
            let starts = &self.column_starts[stage - 1];
            let inner = self.summaries[stage - 1].levels;
            let col = starts.partition_point(|&s| s <= pos) - 1;
            let offset = pos - starts[col];
            if offset < inner {
                path.push(col + 1);
                pos = offset;
            } else {
                return Ok(PositionAddress::Spacer {
                    stage,
                    column: col + 1,
                    offset: offset - inner,
                    path,
                });
            }
        }
        Ok(PositionAddress::Level { level: pos, path })
    }

    /// Inverse of [`decode_position`](Self::decode_position).
    pub fn encode_position(&self, address: &PositionAddress) -> Result<u64, TowerError> {
        let invalid = |msg: &str| TowerError::InvalidAddress(msg.to_owned());
        let (mut pos, path) = match address {
            PositionAddress::Level { level, path } => {
                let stage = self
                    .stages()
                    .checked_add(1)
                    .and_then(|s| s.checked_sub(path.len()))
                    .filter(|&s| s >= 1)
                    .ok_or_else(|| invalid("path longer than the construction"))?;
                let levels = self.summaries[stage - 1].levels;
                if *level >= levels {
                    return Err(TowerError::LevelOutOfRange { level: *level, max: levels - 1 });
                }
                (*level, path)
            }
            PositionAddress::Spacer { stage, column, offset, path } => {
                if *stage == 0 || *stage > self.stages() {
                    return Err(TowerError::StageOutOfRange { stage: *stage, max: self.stages() });
                }
                if path.len() != self.stages() - stage {
                    return Err(invalid("path length does not match spacer stage"));
                }
                let seq = &self.spacers[stage - 1];
                if *column == 0 || *column > seq.columns() {
                    return Err(invalid("column out of range"));
                }
                if *offset >= seq.spacer(*column) {
                    return Err(invalid("spacer offset out of range"));
                }
                let start = self.column_starts[stage - 1][column - 1];
                (start + self.summaries[stage - 1].levels + offset, path)
            }
        };
        for (k, &col) in path.iter().enumerate() {
            let stage = self.stages() - k;
            let starts = &self.column_starts[stage - 1];
            if col == 0 || col > starts.len() {
                return Err(invalid("column out of range"));
            }
            pos += starts[col - 1];
        }
        Ok(pos)
    }

    /// Copies of the stage-`j0` tower inside the final word: `Π_{j>=j0} r_j`.
    pub fn copies(&self, j0: usize) -> u64 {
        self.summaries[j0 - 1..].iter().filter(|s| s.cuts > 0).map(|s| s.cuts).product()
    }

    /// Indicator of the union of the given stage-`j0` levels, built by
    /// stacking the stage-`j0` pattern forward in one pass.
    pub fn level_set_indicator(&self, j0: usize, levels: &BTreeSet<u64>) -> Result<BitWord, TowerError> {
        self.check_stage(j0)?;
        let base_len = self.summaries[j0 - 1].levels;
        if let Some(&top) = levels.iter().next_back() {
            if top >= base_len {
                return Err(TowerError::LevelOutOfRange { level: top, max: base_len - 1 });
            }
        }
        let mut pattern = BitWord::zeros(base_len as usize);
        for &level in levels {
            pattern.set(level as usize, true);
        }
        for stage in j0..=self.stages() {
            let mut stacked = BitWord::with_capacity(self.summaries[stage].levels as usize);
            for &s in self.spacers[stage - 1].spacers() {
                stacked.extend_from(&pattern);
                stacked.push_run(false, s as usize);
            }
            pattern = stacked;
        }
        Ok(pattern)
    }

    /// Build manifest for regression pinning.
    pub fn manifest(&self) -> BuildManifest {
        let stages = self
            .params
            .stages
            .iter()
            .zip(&self.summaries)
            .enumerate()
            .map(|(idx, (plan, summary))| {
                let (scheme, height, q, seed) = match plan {
                    StagePlan::Algebraic { q, height, .. } => ("algebraic", Some(*height), Some(*q), None),
                    StagePlan::Stochastic { height, .. } => (
                        "stochastic",
                        Some(*height),
                        None,
                        Some(stage_seed(self.params.master_seed, idx + 1)),
                    ),
                    StagePlan::Explicit { .. } => ("explicit", None, None, None),
                };
                StageManifest {
                    stage: summary.stage,
                    h: summary.height,
                    r: summary.cuts,
                    scheme,
                    height,
                    q,
                    seed,
                    spacer_total: summary.spacer_total,
                }
            })
            .collect();
        let last = self.summaries.last().expect("summaries are never empty");
        BuildManifest {
            h1: self.params.h1,
            stages,
            final_height: last.height,
            word_length: self.len(),
            tower_symbols: self.tower_symbols(),
            checksum: format!("{:016x}", self.checksum()),
        }
    }
}

/// `|levels| · copies(j0) / (h_{J+1} + 1)`, exact.
pub fn level_measure(summaries: &[StageSummary], j0: usize, levels: &BTreeSet<u64>) -> Result<Ratio<u64>, TowerError> {
    let max = summaries.len();
    if j0 == 0 || j0 > max {
        return Err(TowerError::StageOutOfRange { stage: j0, max });
    }
    let base = summaries[j0 - 1].levels;
    if let Some(&top) = levels.iter().next_back() {
        if top >= base {
            return Err(TowerError::LevelOutOfRange { level: top, max: base - 1 });
        }
    }
    let copies: u64 = summaries[j0 - 1..].iter().filter(|s| s.cuts > 0).map(|s| s.cuts).product();
    let total = summaries[max - 1].levels;
    Ok(Ratio::new(levels.len() as u64 * copies, total))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageManifest {
    pub stage: usize,
    pub h: u64,
    pub r: u64,
    pub scheme: &'static str,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub height: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub spacer_total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildManifest {
    pub h1: u64,
    pub stages: Vec<StageManifest>,
    pub final_height: u64,
    pub word_length: u64,
    pub tower_symbols: u64,
    /// FNV-1a 64 over the little-endian packed bits, hex.
    pub checksum: String,
}
