//! Subcommand dispatch and report serialization.

use std::fmt::Write as _;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, RunConfig, SpacerKind};
use crate::bits::fnv1a64;
use crate::mixlab::{self, ratio_text, MixError, MixReport, TriangularLaw};
use crate::numtheory::{self, BurgessReport, NumberTheoryError, PrimeModulus};
use crate::spacergen::{self, Provenance, SpacerError};
use crate::tower::{self, BuildManifest, TowerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Primroot,
    Spacers,
    Dist,
    Build,
    Mix,
    Parity,
    Density,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Primroot => "primroot",
            Command::Spacers => "spacers",
            Command::Dist => "dist",
            Command::Build => "build",
            Command::Mix => "mix",
            Command::Parity => "parity",
            Command::Density => "density",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("config has no `{0}` section")]
    MissingSection(&'static str),
    #[error(transparent)]
    NumberTheory(#[from] NumberTheoryError),
    #[error(transparent)]
    Spacer(#[from] SpacerError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Serialize)]
pub struct SpacerRow {
    pub n: usize,
    pub max_abs_s: u64,
    pub range_ok: bool,
    pub injective: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_collision: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpacersPayload {
    pub scheme: SpacerKind,
    pub r: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(rename = "H")]
    pub height: u64,
    /// Exact value of `Σ_{i<r} s(i) - (r-1)H`; zero for algebraic sequences.
    pub telescoping_residual: i128,
    pub rows: Vec<SpacerRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistRow {
    pub n_value: i64,
    pub count: u64,
    pub empirical: f64,
    pub theoretical: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistPayload {
    pub r: usize,
    #[serde(rename = "H")]
    pub height: u64,
    pub n: usize,
    pub seed: u64,
    pub total: u64,
    pub tv_distance: String,
    pub tv_value: f64,
    pub rows: Vec<DistRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionRow {
    pub stage: usize,
    pub h: u64,
    pub fraction: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildPayload {
    pub manifest: BuildManifest,
    /// Fraction of `i` with `S(i,1)` of the same parity as `h_j`.
    pub parity_obstruction: Vec<ObstructionRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MixPayload {
    pub word_length: u64,
    pub checksum: String,
    pub report: MixReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityRow {
    pub r: u64,
    pub q: u64,
    pub m0: u64,
    pub m1: u64,
    pub bound: String,
    pub ok: bool,
    pub interval_agreement: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityPayload {
    pub lo: u64,
    pub hi: u64,
    pub primes: usize,
    pub bound_violations: usize,
    pub interval_mismatches: usize,
    pub rows: Vec<ParityRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub r: u64,
    pub q: u64,
    pub distinct: u64,
    pub density: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityPayload {
    pub monotone: bool,
    pub rows: Vec<DensityRow>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Primroot(BurgessReport),
    Spacers(SpacersPayload),
    Dist(DistPayload),
    Build(BuildPayload),
    Mix(MixPayload),
    Parity(ParityPayload),
    Density(DensityPayload),
}

/// Output of one subcommand. Contains nothing that varies between runs of
/// the same config.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Command,
    pub version: &'static str,
    pub config: RunConfig,
    pub payload: Payload,
    /// Witness of the first failed property check, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub property_failure: Option<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.property_failure.is_some() {
            EXIT_PROPERTY
        } else {
            EXIT_OK
        }
    }

    /// FNV-1a 64 of the compact payload JSON, hex.
    pub fn checksum(&self) -> String {
        let bytes = serde_json::to_vec(&self.payload).expect("payload serializes");
        format!("{:016x}", fnv1a64(&bytes))
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Envelope<'a> {
            #[serde(flatten)]
            report: &'a Report,
            checksum: String,
        }
        let mut text = serde_json::to_string_pretty(&Envelope {
            report: self,
            checksum: self.checksum(),
        })
        .expect("report serializes");
        text.push('\n');
        text
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.payload {
            Payload::Primroot(rep) => out = rep.to_csv(),
            Payload::Spacers(p) => {
                out.push_str("r,q,H,n,max_abs_S,injective\n");
                let q = p.q.map(|q| q.to_string()).unwrap_or_default();
                for row in &p.rows {
                    let _ = writeln!(out, "{},{},{},{},{},{}", p.r, q, p.height, row.n, row.max_abs_s, row.injective);
                }
            }
            Payload::Dist(p) => {
                out.push_str("n_value,count,empirical,theoretical\n");
                for row in &p.rows {
                    let _ = writeln!(out, "{},{},{},{}", row.n_value, row.count, row.empirical, row.theoretical);
                }
            }
            Payload::Build(p) => {
                out.push_str("stage,h,r,scheme,spacer_total\n");
                for s in &p.manifest.stages {
                    let _ = writeln!(out, "{},{},{},{},{}", s.stage, s.h, s.r, s.scheme, s.spacer_total);
                }
            }
            Payload::Mix(p) => out = p.report.to_csv(),
            Payload::Parity(p) => {
                out.push_str("r,q,m0,m1,bound,ok\n");
                for row in &p.rows {
                    let _ = writeln!(out, "{},{},{},{},{},{}", row.r, row.q, row.m0, row.m1, row.bound, row.ok);
                }
            }
            Payload::Density(p) => {
                out.push_str("r,density\n");
                for row in &p.rows {
                    let _ = writeln!(out, "{},{}", row.r, row.value);
                }
            }
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}

/// Write `report` to `path`, or stdout when `path` is `None`.
pub fn emit_report(report: &Report, format: Format, path: Option<&std::path::Path>) -> Result<(), RunError> {
    let text = report.render(format);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| RunError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(|source| RunError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn to_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn run_command(command: Command, config: &RunConfig) -> Result<Report, RunError> {
    let (payload, property_failure) = match command {
        Command::Primroot => run_primroot(config)?,
        Command::Spacers => run_spacers(config)?,
        Command::Dist => run_dist(config)?,
        Command::Build => run_build(config)?,
        Command::Mix => run_mix(config)?,
        Command::Parity => run_parity(config)?,
        Command::Density => run_density(config)?,
    };
    Ok(Report {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        payload,
        property_failure,
    })
}

type Outcome = (Payload, Option<String>);

fn run_primroot(config: &RunConfig) -> Result<Outcome, RunError> {
    let range = config.primroot.ok_or(RunError::MissingSection("primroot"))?;
    Ok((Payload::Primroot(numtheory::burgess_scan(range.lo, range.hi)?), None))
}

fn run_spacers(config: &RunConfig) -> Result<Outcome, RunError> {
    let sp = config.spacers.as_ref().ok_or(RunError::MissingSection("spacers"))?;
    let height = sp.height.unwrap_or(sp.r);
    let n_max = sp.n_max.unwrap_or(1);
    let (seq, q) = match sp.scheme {
        SpacerKind::Algebraic => {
            let q = sp.q.value();
            (spacergen::algebraic_spacers(PrimeModulus::new(sp.r)?, q, height)?, Some(q))
        }
        SpacerKind::Stochastic => (spacergen::stochastic_spacers(height, config.seed, sp.r as usize)?, None),
    };
    let body: i128 = seq.spacers()[..seq.columns() - 1].iter().map(|&s| s as i128).sum();
    let telescoping_residual = body - (sp.r as i128 - 1) * height as i128;
    // Stochastic window sums are differences of draws, so |S| <= H.
    let bound = match sp.scheme {
        SpacerKind::Algebraic => sp.r,
        SpacerKind::Stochastic => height,
    };
    let rows: Vec<SpacerRow> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let table = spacergen::partial_sums(&seq, n)?;
            let range = spacergen::verify_range_property(&table, bound);
            let inj = spacergen::verify_injectivity(&table);
            Ok(SpacerRow {
                n,
                max_abs_s: range.max_abs,
                range_ok: range.holds,
                injective: inj.injective,
                first_collision: inj.first_collision,
            })
        })
        .collect::<Result<_, SpacerError>>()?;

    let mut failure = None;
    if sp.scheme == SpacerKind::Algebraic {
        if telescoping_residual != 0 {
            failure = Some(format!("telescoping residual {telescoping_residual}"));
        } else if let Some(row) = rows.iter().find(|row| !row.range_ok) {
            failure = Some(format!("range property fails at n = {}: max |S| = {}", row.n, row.max_abs_s));
        } else if let Some(row) = rows.iter().find(|row| !row.injective) {
            let (i, j) = row.first_collision.expect("collision recorded");
            failure = Some(format!("injectivity fails at n = {}: S({i}) = S({j})", row.n));
        }
    } else if let Some(row) = rows.iter().find(|row| !row.range_ok) {
        failure = Some(format!("stochastic window sum exceeds H at n = {}", row.n));
    }
    let payload = SpacersPayload {
        scheme: sp.scheme,
        r: sp.r,
        q,
        height,
        telescoping_residual: if sp.scheme == SpacerKind::Algebraic { telescoping_residual } else { 0 },
        rows,
    };
    Ok((Payload::Spacers(payload), failure))
}

fn run_dist(config: &RunConfig) -> Result<Outcome, RunError> {
    let d = config.dist.as_ref().ok_or(RunError::MissingSection("dist"))?;
    let seq = spacergen::stochastic_spacers(d.height, config.seed, d.r)?;
    let hist = spacergen::difference_histogram(&seq, d.n)?;
    let law = TriangularLaw::new(d.height);
    let tv = mixlab::tv_distance(&hist, &law)?;
    let mut values: Vec<i64> = law.support().collect();
    values.extend(hist.iter().map(|(v, _)| v));
    values.sort_unstable();
    values.dedup();
    let rows = values
        .into_iter()
        .map(|v| DistRow {
            n_value: v,
            count: hist.count(v),
            empirical: hist.count(v) as f64 / hist.total() as f64,
            theoretical: to_f64(&law.mass(v)),
        })
        .collect();
    let payload = DistPayload {
        r: d.r,
        height: d.height,
        n: d.n,
        seed: config.seed,
        total: hist.total(),
        tv_distance: ratio_text(&tv),
        tv_value: *tv.numer() as f64 / *tv.denom() as f64,
        rows,
    };
    Ok((Payload::Dist(payload), None))
}

fn build(config: &RunConfig) -> Result<tower::RankOneWord, RunError> {
    let params = config
        .construction_params()
        .ok_or(RunError::MissingSection("construction"))?;
    Ok(tower::build_word(&params)?)
}

fn run_build(config: &RunConfig) -> Result<Outcome, RunError> {
    let word = build(config)?;
    let mut parity_obstruction = Vec::new();
    for stage in 1..=word.stages() {
        let seq = word.spacers(stage);
        if seq.columns() < 3 || matches!(seq.provenance(), Provenance::Explicit) {
            continue;
        }
        let h = word.summary(stage).height;
        let fraction = mixlab::parity_obstruction(&spacergen::partial_sums(seq, 1)?, h)?;
        parity_obstruction.push(ObstructionRow {
            stage,
            h,
            fraction: ratio_text(&fraction),
            value: to_f64(&fraction),
        });
    }
    let payload = BuildPayload {
        manifest: word.manifest(),
        parity_obstruction,
    };
    Ok((Payload::Build(payload), None))
}

fn run_mix(config: &RunConfig) -> Result<Outcome, RunError> {
    let mix = config.mix.as_ref().ok_or(RunError::MissingSection("mix"))?;
    let word = build(config)?;
    let b = mix.b.as_ref().unwrap_or(&mix.a);
    let report = mixlab::correlation_sweep(&word, &mix.a, b, mix.shifts)?;
    let payload = MixPayload {
        word_length: word.len(),
        checksum: format!("{:016x}", word.checksum()),
        report,
    };
    Ok((Payload::Mix(payload), None))
}

fn run_parity(config: &RunConfig) -> Result<Outcome, RunError> {
    let range = config.parity.ok_or(RunError::MissingSection("parity"))?;
    let rows: Vec<ParityRow> = numtheory::primes_in(range.lo, range.hi)
        .into_par_iter()
        .map(|p| {
            let modulus = PrimeModulus::new(p)?;
            let q = numtheory::minimal_primitive_root(modulus);
            let rep = mixlab::parity_counts(&numtheory::residue_sequence(q, modulus)?);
            Ok(ParityRow {
                r: p,
                q,
                m0: rep.m0,
                m1: rep.m1,
                bound: ratio_text(&rep.bound),
                ok: rep.bound_ok,
                interval_agreement: rep.interval_agreement,
            })
        })
        .collect::<Result<_, NumberTheoryError>>()?;
    let bound_violations = rows.iter().filter(|row| !row.ok).count();
    let interval_mismatches = rows.iter().filter(|row| row.interval_agreement != row.r - 1).count();
    let failure = rows
        .iter()
        .find(|row| !row.ok || row.interval_agreement != row.r - 1)
        .map(|row| {
            format!(
                "parity check fails at r = {}, q = {}: |M0| = {}, |M1| = {}, bound {}, interval agreement {}/{}",
                row.r,
                row.q,
                row.m0,
                row.m1,
                row.bound,
                row.interval_agreement,
                row.r - 1
            )
        });
    let payload = ParityPayload {
        lo: range.lo,
        hi: range.hi,
        primes: rows.len(),
        bound_violations,
        interval_mismatches,
        rows,
    };
    Ok((Payload::Parity(payload), failure))
}

fn run_density(config: &RunConfig) -> Result<Outcome, RunError> {
    let density = config.density.clone().unwrap_or_default();
    let mut primes = density.primes;
    primes.sort_unstable();
    primes.dedup();
    let rows: Vec<DensityRow> = primes
        .into_par_iter()
        .map(|p| {
            let modulus = PrimeModulus::new(p)?;
            let q = numtheory::minimal_primitive_root(modulus);
            let seq = spacergen::algebraic_spacers(modulus, q, p)?;
            let d = mixlab::s1_distinct_density(&spacergen::partial_sums(&seq, 1)?, p)?;
            Ok(DensityRow {
                r: p,
                q,
                distinct: *d.numer() * ((2 * p + 1) / *d.denom()),
                density: ratio_text(&d),
                value: to_f64(&d),
            })
        })
        .collect::<Result<_, RunError>>()?;
    let monotone = rows.windows(2).all(|w| w[0].value < w[1].value);
    Ok((Payload::Density(DensityPayload { monotone, rows }), None))
}
