//! JSON run configuration: parsing, defaults and semantic validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mixlab::{LevelSet, ShiftRange};
use crate::numtheory::{self, PrimeModulus};
use crate::tower::{ConstructionParams, StagePlan, DEFAULT_GUARD};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Semantic { field: String, message: String },
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
}

fn semantic(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Semantic {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootPolicy {
    Minimal,
}

/// Generator choice: an explicit value or `"minimal"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RootChoice {
    Value(u64),
    Policy(RootPolicy),
}

impl Default for RootChoice {
    fn default() -> Self {
        RootChoice::Policy(RootPolicy::Minimal)
    }
}

impl RootChoice {
    /// The concrete root; only valid after [`RunConfig::validate`].
    pub fn value(self) -> u64 {
        match self {
            RootChoice::Value(q) => q,
            RootChoice::Policy(_) => panic!("root choice not resolved"),
        }
    }
}

/// Resolve `choice` against prime `r`, checking explicit values.
fn resolve_root(choice: &mut RootChoice, r: PrimeModulus, field: &str) -> Result<u64, ConfigError> {
    let q = match *choice {
        RootChoice::Value(q) => {
            if !numtheory::is_primitive_root(q, r) || q >= r.get() {
                return Err(semantic(field, format!("{q} is not a primitive root modulo {r}")));
            }
            q
        }
        RootChoice::Policy(RootPolicy::Minimal) => numtheory::minimal_primitive_root(r),
    };
    *choice = RootChoice::Value(q);
    Ok(q)
}

fn prime_field(r: u64, field: &str) -> Result<PrimeModulus, ConfigError> {
    PrimeModulus::new(r).map_err(|_| semantic(field, "r must be prime"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase", deny_unknown_fields)]
pub enum StageConfig {
    Algebraic {
        r: u64,
        #[serde(default)]
        q: RootChoice,
        #[serde(rename = "H", default)]
        height: Option<u64>,
    },
    Stochastic {
        r: u64,
        #[serde(rename = "H", default)]
        height: Option<u64>,
    },
    Explicit {
        s: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionConfig {
    pub h1: u64,
    pub stages: Vec<StageConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub lo: u64,
    pub hi: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpacerKind {
    #[default]
    Algebraic,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacersConfig {
    #[serde(default)]
    pub scheme: SpacerKind,
    pub r: u64,
    #[serde(default)]
    pub q: RootChoice,
    #[serde(rename = "H", default)]
    pub height: Option<u64>,
    #[serde(default)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistConfig {
    pub r: usize,
    #[serde(rename = "H")]
    pub height: u64,
    #[serde(default = "default_window")]
    pub n: usize,
}

fn default_window() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixConfig {
    pub a: LevelSet,
    #[serde(default)]
    pub b: Option<LevelSet>,
    pub shifts: ShiftRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub primes: Vec<u64>,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            primes: vec![7, 101, 1009, 10007, 100_003],
        }
    }
}

/// Everything a run depends on. Sections are optional; each subcommand
/// requires its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_guard")]
    pub guard: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primroot: Option<RangeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacers: Option<SpacersConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mix: Option<MixConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<RangeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
}

fn default_guard() -> u64 {
    DEFAULT_GUARD
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

fn check_range(range: &RangeConfig, field: &str) -> Result<(), ConfigError> {
    if range.lo < 3 {
        return Err(semantic(format!("{field}.lo"), "must be at least 3"));
    }
    if range.lo > range.hi {
        return Err(semantic(format!("{field}.hi"), "must not be below lo"));
    }
    Ok(())
}

impl RunConfig {
    /// Check every section and resolve defaults in place: `H` defaults to
    /// `r` and `"minimal"` roots become concrete values.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        if self.guard == 0 {
            return Err(semantic("guard", "must be positive"));
        }
        if let Some(construction) = &mut self.construction {
            for (idx, stage) in construction.stages.iter_mut().enumerate() {
                let field = format!("construction.stages[{idx}]");
                match stage {
                    StageConfig::Algebraic { r, q, height } => {
                        let modulus = prime_field(*r, &format!("{field}.r"))?;
                        resolve_root(q, modulus, &format!("{field}.q"))?;
                        let h = *height.get_or_insert(*r);
                        if h < *r {
                            return Err(semantic(format!("{field}.H"), "must be at least r"));
                        }
                    }
                    StageConfig::Stochastic { r, height } => {
                        if *r < 2 {
                            return Err(semantic(format!("{field}.r"), "must be at least 2"));
                        }
                        if *height.get_or_insert(*r) == 0 {
                            return Err(semantic(format!("{field}.H"), "must be at least 1"));
                        }
                    }
                    StageConfig::Explicit { s } => {
                        if s.len() < 2 {
                            return Err(semantic(format!("{field}.s"), "needs at least 2 spacers"));
                        }
                    }
                }
            }
        }
        if let Some(range) = &self.primroot {
            check_range(range, "primroot")?;
        }
        if let Some(sp) = &mut self.spacers {
            match sp.scheme {
                SpacerKind::Algebraic => {
                    let modulus = prime_field(sp.r, "spacers.r")?;
                    resolve_root(&mut sp.q, modulus, "spacers.q")?;
                    if *sp.height.get_or_insert(sp.r) < sp.r {
                        return Err(semantic("spacers.H", "must be at least r"));
                    }
                }
                SpacerKind::Stochastic => {
                    if sp.r < 3 {
                        return Err(semantic("spacers.r", "must be at least 3"));
                    }
                    if *sp.height.get_or_insert(sp.r) == 0 {
                        return Err(semantic("spacers.H", "must be at least 1"));
                    }
                }
            }
            let max = (sp.r - 2).min(200) as usize;
            let n_max = *sp.n_max.get_or_insert(max);
            if n_max == 0 || n_max as u64 > sp.r - 2 {
                return Err(semantic("spacers.n_max", format!("must lie in [1, {}]", sp.r - 2)));
            }
        }
        if let Some(dist) = &self.dist {
            if dist.r < 3 {
                return Err(semantic("dist.r", "must be at least 3"));
            }
            if dist.height == 0 {
                return Err(semantic("dist.H", "must be at least 1"));
            }
            if dist.n == 0 || dist.n > dist.r - 2 {
                return Err(semantic("dist.n", format!("must lie in [1, {}]", dist.r - 2)));
            }
        }
        if let Some(mix) = &self.mix {
            if mix.shifts.stride == 0 {
                return Err(semantic("mix.shifts.stride", "must be positive"));
            }
            if mix.shifts.start > mix.shifts.end {
                return Err(semantic("mix.shifts.end", "must not be below start"));
            }
            if self.construction.is_none() {
                return Err(semantic("construction", "required by the mix section"));
            }
        }
        if let Some(range) = &self.parity {
            check_range(range, "parity")?;
        }
        if let Some(density) = &self.density {
            if density.primes.is_empty() {
                return Err(semantic("density.primes", "must not be empty"));
            }
            for (idx, &p) in density.primes.iter().enumerate() {
                prime_field(p, &format!("density.primes[{idx}]"))?;
            }
        }
        Ok(())
    }

    /// Construction parameters for a validated config.
    pub fn construction_params(&self) -> Option<ConstructionParams> {
        let c = self.construction.as_ref()?;
        let stages = c
            .stages
            .iter()
            .map(|stage| match stage {
                StageConfig::Algebraic { r, q, height } => StagePlan::Algebraic {
                    r: PrimeModulus::new(*r).expect("validated prime"),
                    q: q.value(),
                    height: height.unwrap_or(*r),
                },
                StageConfig::Stochastic { r, height } => StagePlan::Stochastic {
                    r: *r,
                    height: height.unwrap_or(*r),
                },
                StageConfig::Explicit { s } => StagePlan::Explicit { s: s.clone() },
            })
            .collect();
        Some(ConstructionParams {
            h1: c.h1,
            stages,
            master_seed: self.seed,
            guard: self.guard,
        })
    }
}
