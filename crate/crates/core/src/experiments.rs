//! Seeded Monte Carlo harnesses: recovery frequencies against the over- and
//! under-estimation bounds, the inclusion property between the two
//! estimators, and empirical deviation tails against the self-normalized deviation bounds.
//!
//! Every run is a pure function of its inputs. Replicate `r` at grid point
//! `n` draws from the stream [`derive_seed`]`(seed, n, r)`, replicates run
//! in parallel, and results are collected in replicate order.

use crate::alphabet::Alphabet;
use crate::bounds::{self, BoundError, BoundReport, ModelCoefficients, INPUT_COLUMNS};
use crate::counts::{CountError, CountTrie, Sample};
use crate::estimators::{context_estimator, ctm_estimator, EstimateError, EstimatorConfig, Schedule};
use crate::format::tree_to_text;
use crate::infodiv::binary_kl;
use crate::model::VlmcModel;
use crate::simulate::{derive_seed, Init, SimConfig, SimError, Simulator};
use crate::tree::{tree_includes, ContextTree, TruncationLevel};
use crate::word::Word;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("line {line}: {message}")]
    Spec { line: usize, message: String },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Count(#[from] CountError),
}

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Shortest decimal rendering with at most 12 significant digits; plain
/// notation for exponents in `-4..12`, scientific otherwise.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if x < 0.0 { "-" } else { "" };
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..12).contains(&exp) {
        let body = if exp >= 0 {
            let split = exp as usize + 1;
            format!("{}.{}", &digits[..split], &digits[split..])
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        format!("{sign}{}", trim(body))
    } else {
        format!("{sign}{}e{exp}", trim(format!("{}.{}", &digits[..1], &digits[1..])))
    }
}

/// A header plus string rows, written as UTF-8 CSV with LF line endings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Writes `table` to `path`.
pub fn emit_csv(table: &CsvTable, path: &Path) -> Result<(), ExperimentError> {
    std::fs::write(path, table.to_bytes()).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per report; inputs spread over [`INPUT_COLUMNS`].
pub fn bound_reports_csv(reports: &[BoundReport]) -> CsvTable {
    let mut header = vec!["name"];
    header.extend(INPUT_COLUMNS);
    header.extend(["raw", "clamped", "valid", "reason"]);
    let mut table = CsvTable::new(&header);
    for r in reports {
        let mut row = vec![r.name.to_string()];
        row.extend(INPUT_COLUMNS.iter().map(|c| r.input(c).map(fmt_sig).unwrap_or_default()));
        row.extend([
            fmt_sig(r.raw),
            fmt_sig(r.clamped),
            r.valid.to_string(),
            r.reason.clone().unwrap_or_default(),
        ]);
        table.rows.push(row);
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Context,
    Pml,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Context => "context",
            EstimatorKind::Pml => "pml",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Context,
    Pml,
    #[default]
    Both,
}

impl EstimatorChoice {
    pub fn kinds(self) -> &'static [EstimatorKind] {
        match self {
            EstimatorChoice::Context => &[EstimatorKind::Context],
            EstimatorChoice::Pml => &[EstimatorKind::Pml],
            EstimatorChoice::Both => &[EstimatorKind::Context, EstimatorKind::Pml],
        }
    }
}

impl FromStr for EstimatorChoice {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "context" => Ok(Self::Context),
            "pml" => Ok(Self::Pml),
            "both" => Ok(Self::Both),
            _ => Err(ExperimentError::Invalid(format!("unknown estimator {s:?}: expected context, pml or both"))),
        }
    }
}

fn serialize_schedule<S: serde::Serializer>(s: &Schedule, ser: S) -> Result<S::Ok, S::Error> {
    ser.collect_str(s)
}

fn serialize_opt_schedule<S: serde::Serializer>(s: &Option<Schedule>, ser: S) -> Result<S::Ok, S::Error> {
    match s {
        Some(s) => ser.collect_str(s),
        None => ser.serialize_none(),
    }
}

/// Recovery experiment parameters.
///
/// Text form, one `key = value` per line, `#` comments:
///
/// ```text
/// model = fixture.model
/// n = 1000, 10000
/// replicates = 200
/// estimator = both
/// penalty = bic
/// threshold = bic
/// k = 3
/// d = 4
/// seed = 1
/// ```
///
/// `threshold` defaults to `penalty`, `past` to `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub model: Option<PathBuf>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub estimator: EstimatorChoice,
    #[serde(serialize_with = "serialize_schedule")]
    pub penalty: Schedule,
    #[serde(serialize_with = "serialize_opt_schedule")]
    pub threshold: Option<Schedule>,
    pub k: usize,
    pub d: usize,
    pub past: Option<usize>,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            model: None,
            n_grid: vec![1000],
            replicates: 100,
            estimator: EstimatorChoice::Both,
            penalty: Schedule::Bic,
            threshold: None,
            k: 1,
            d: 1,
            past: None,
            seed: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut spec = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| ExperimentError::Spec { line, message };
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key = value, got {content:?}")))?;
            let int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("{key}: not an integer: {v:?}")));
            match key {
                "model" => spec.model = Some(PathBuf::from(value)),
                "n" => spec.n_grid = value.split(',').map(|v| int(v.trim())).collect::<Result<_, _>>()?,
                "replicates" => spec.replicates = int(value)?,
                "estimator" => spec.estimator = value.parse().map_err(|e: ExperimentError| err(e.to_string()))?,
                "penalty" => spec.penalty = value.parse().map_err(|e: EstimateError| err(e.to_string()))?,
                "threshold" => spec.threshold = Some(value.parse().map_err(|e: EstimateError| err(e.to_string()))?),
                "k" => spec.k = int(value)?,
                "d" => spec.d = int(value)?,
                "past" => spec.past = Some(int(value)?),
                "seed" => spec.seed = value.parse().map_err(|_| err(format!("seed: not a u64: {value:?}")))?,
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Invalid(m.to_string()));
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("n grid must be nonempty with positive entries");
        }
        if self.k == 0 || self.d == 0 {
            return bad("k and d must be at least 1");
        }
        if self.past() < self.d {
            return bad("past must be at least d");
        }
        Ok(())
    }

    pub fn past(&self) -> usize {
        self.past.unwrap_or(self.d)
    }

    pub fn threshold(&self) -> Schedule {
        self.threshold.unwrap_or(self.penalty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Outcome {
    over: bool,
    under: bool,
    exact: bool,
}

fn classify(estimate: &ContextTree, truth: &ContextTree, k: TruncationLevel) -> Outcome {
    let (est_k, truth_k) = (estimate.truncate(k), truth.truncate(k));
    Outcome {
        over: !tree_includes(estimate, truth),
        under: !tree_includes(&truth_k, &est_k),
        exact: est_k == truth_k,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub n: usize,
    pub estimator: EstimatorKind,
    pub replicates: usize,
    pub over: u64,
    pub under: u64,
    pub exact: u64,
    /// Parameter the bounds are evaluated at: `δ` for Context, `f` for PML.
    pub parameter: f64,
    pub over_bound: f64,
    pub under_bound: f64,
    pub under_bound_valid: bool,
}

impl FrequencyRow {
    fn freq(&self, k: u64) -> f64 {
        k as f64 / self.replicates as f64
    }

    pub fn freq_over(&self) -> f64 {
        self.freq(self.over)
    }

    pub fn freq_under(&self) -> f64 {
        self.freq(self.under)
    }

    pub fn freq_exact(&self) -> f64 {
        self.freq(self.exact)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
}

impl FrequencyTable {
    pub fn row(&self, n: usize, estimator: EstimatorKind) -> Option<&FrequencyRow> {
        self.rows.iter().find(|r| r.n == n && r.estimator == estimator)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "n",
            "estimator",
            "replicates",
            "parameter",
            "freq_over",
            "over_lo",
            "over_hi",
            "freq_under",
            "under_lo",
            "under_hi",
            "freq_exact",
            "exact_lo",
            "exact_hi",
            "over_bound_raw",
            "over_bound",
            "under_bound_raw",
            "under_bound",
            "under_bound_valid",
        ]);
        for r in &self.rows {
            let reps = r.replicates as u64;
            let mut row = vec![r.n.to_string(), r.estimator.name().to_string(), reps.to_string(), fmt_sig(r.parameter)];
            for k in [r.over, r.under, r.exact] {
                let (lo, hi) = wilson_interval(k, reps);
                row.extend([fmt_sig(k as f64 / reps as f64), fmt_sig(lo), fmt_sig(hi)]);
            }
            row.extend([
                fmt_sig(r.over_bound),
                fmt_sig(r.over_bound.clamp(0.0, 1.0)),
                fmt_sig(r.under_bound),
                fmt_sig(r.under_bound.clamp(0.0, 1.0)),
                r.under_bound_valid.to_string(),
            ]);
            t.rows.push(row);
        }
        t
    }
}

/// Recovery frequencies of the estimators on samples from `model`, with
/// the over- and under-estimation bounds at the same parameters.
pub fn run_recovery(model: &VlmcModel, spec: &ExperimentSpec) -> Result<FrequencyTable, ExperimentError> {
    spec.validate()?;
    let k = TruncationLevel::new(spec.k).map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    let coeffs = ModelCoefficients::compute(model, k, spec.d)?;
    let sim = Simulator::new(model)?;
    let truth = model.tree();
    let a = model.alphabet_size();
    let kinds = spec.estimator.kinds();
    let mut table = FrequencyTable::default();
    for &n in &spec.n_grid {
        let config = EstimatorConfig::from_schedules(spec.d, spec.threshold(), spec.penalty, n, a)?;
        let outcomes = (0..spec.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let sample = sim.sample(&SimConfig {
                    n,
                    past: spec.past(),
                    seed: derive_seed(spec.seed, n as u64, r),
                    init: Init::Stationary,
                })?;
                let trie = CountTrie::build(&sample, spec.d)?;
                kinds
                    .iter()
                    .map(|kind| {
                        let est = match kind {
                            EstimatorKind::Context => context_estimator(&trie, &config)?,
                            EstimatorKind::Pml => ctm_estimator(&trie, &config)?,
                        };
                        Ok(classify(&est.tree, truth, k))
                    })
                    .collect::<Result<Vec<_>, ExperimentError>>()
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        for (i, &kind) in kinds.iter().enumerate() {
            let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(&o[i])).count() as u64;
            let parameter = match kind {
                EstimatorKind::Context => config.threshold,
                EstimatorKind::Pml => config.penalty,
            };
            let over = bounds::over_bound(n as u64, parameter, a)?;
            let under = bounds::under_bound(&coeffs.constants(), n as u64, parameter, a, spec.k, spec.d)?;
            table.rows.push(FrequencyRow {
                n,
                estimator: kind,
                replicates: spec.replicates,
                over: count(|o| o.over),
                under: count(|o| o.under),
                exact: count(|o| o.exact),
                parameter,
                over_bound: over.raw,
                under_bound: under.raw,
                under_bound_valid: under.valid,
            });
        }
    }
    Ok(table)
}

/// Inputs and provenance of a run, written next to its CSV output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub prng: &'static str,
    pub seed_derivation: &'static str,
    pub spec: T,
    pub notes: Vec<String>,
}

impl<T: Serialize> RunManifest<T> {
    pub fn new(spec: T) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            prng: "ChaCha8 seeded with splitmix64(stream seed)",
            seed_derivation: "stream seed = splitmix64(splitmix64(splitmix64(base) ^ n) ^ replicate)",
            spec,
            notes: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// Inclusion check `T̂_PML ⪯ T̂_C` on random samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuzzSpec {
    /// Cases with `δ ≤ f`; a fifth of them sit on the boundary `δ = f`.
    pub cases: usize,
    /// Additional cases with `δ > f`, reported but not judged.
    pub outside_cases: usize,
    pub max_n: usize,
    pub max_depth: usize,
    pub alphabet_size: usize,
    pub seed: u64,
}

impl Default for FuzzSpec {
    fn default() -> Self {
        Self {
            cases: 1000,
            outside_cases: 100,
            max_n: 60,
            max_depth: 3,
            alphabet_size: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzCase {
    pub sample: String,
    pub past: usize,
    pub depth: usize,
    pub threshold: f64,
    pub penalty: f64,
    pub pml_tree: String,
    pub context_tree: String,
}

impl fmt::Display for FuzzCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sample: {} (past {})", self.sample, self.past)?;
        writeln!(f, "depth {}, threshold {}, penalty {}", self.depth, self.threshold, self.penalty)?;
        writeln!(f, "pml tree:\n{}", self.pml_tree)?;
        write!(f, "context tree:\n{}", self.context_tree)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FuzzReport {
    pub checked: usize,
    pub boundary: usize,
    pub violations: Vec<FuzzCase>,
    pub outside_checked: usize,
    pub outside_violations: usize,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Random sample from a random order-`d` chain, so that deep contexts
/// carry signal.
fn random_sample(rng: &mut ChaCha8Rng, spec: &FuzzSpec) -> Result<(Sample, usize), ExperimentError> {
    let a = spec.alphabet_size;
    let depth = rng.random_range(1..=spec.max_depth);
    let order = rng.random_range(0..=depth);
    let n = rng.random_range(1..=spec.max_n);
    let rows = a.pow(order as u32);
    let table: Vec<Vec<f64>> = (0..rows)
        .map(|_| {
            let raw: Vec<f64> = (0..a).map(|_| rng.random::<f64>().powi(2)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let mut symbols: Vec<u8> = (0..depth).map(|_| rng.random_range(0..a) as u8).collect();
    while symbols.len() < depth + n {
        let ctx = symbols[symbols.len() - order..].iter().fold(0, |acc, &s| acc * a + s as usize);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = a - 1;
        for (x, p) in table[ctx].iter().enumerate() {
            acc += p;
            if u < acc {
                next = x;
                break;
            }
        }
        symbols.push(next as u8);
    }
    let alphabet = Alphabet::new((0..a).map(|i| char::from_digit(i as u32, 36).expect("small alphabet")))
        .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    Ok((Sample::new(alphabet, symbols, depth)?, depth))
}

pub fn run_prop1_fuzz(spec: &FuzzSpec) -> Result<FuzzReport, ExperimentError> {
    if !(2..=36).contains(&spec.alphabet_size) || spec.max_depth == 0 || spec.max_n == 0 {
        return Err(ExperimentError::Invalid(format!("bad fuzz spec {spec:?}")));
    }
    let total = spec.cases + spec.outside_cases;
    let results = (0..total as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 0, i));
            let (sample, depth) = random_sample(&mut rng, spec)?;
            let penalty = rng.random_range(0.1..=5.0);
            let inside = (i as usize) < spec.cases;
            let boundary = inside && i % 5 == 0;
            let threshold = if boundary {
                penalty
            } else if inside {
                rng.random_range(0.05..penalty)
            } else {
                rng.random_range(penalty..penalty + 5.0) + 1e-9
            };
            let trie = CountTrie::build(&sample, depth)?;
            let config = EstimatorConfig::new(depth, threshold, penalty)?;
            let pml = ctm_estimator(&trie, &config)?.tree;
            let ctx = context_estimator(&trie, &config)?.tree;
            let case = (!tree_includes(&pml, &ctx)).then(|| FuzzCase {
                sample: sample.alphabet().decode(sample.raw()),
                past: sample.past_len(),
                depth,
                threshold,
                penalty,
                pml_tree: tree_to_text(&pml),
                context_tree: tree_to_text(&ctx),
            });
            Ok((inside, boundary, case))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let mut report = FuzzReport::default();
    for (inside, boundary, case) in results {
        if inside {
            report.checked += 1;
            report.boundary += boundary as usize;
            report.violations.extend(case);
        } else {
            report.outside_checked += 1;
            report.outside_violations += case.is_some() as usize;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRow {
    pub delta: f64,
    /// Replicates that entered the frequency (those with `N > 0`).
    pub trials: u64,
    pub exceed: u64,
    pub bound_raw: f64,
    pub bound: f64,
    pub bound_valid: bool,
    /// Allowed excess `3 sqrt(b(1−b)/R) + 1/R` over the clamped bound `b`.
    pub slack: f64,
    pub pass: bool,
}

impl DeviationRow {
    pub fn empirical(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.exceed as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct DeviationTable {
    pub case: String,
    pub n: usize,
    pub rows: Vec<DeviationRow>,
}

impl DeviationTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Empirical tail frequencies are nonincreasing along the (sorted) grid.
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|p| p[1].exceed <= p[0].exceed)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "case", "n", "delta", "trials", "exceed", "empirical", "bound_raw", "bound", "bound_valid", "slack", "pass",
        ]);
        for r in &self.rows {
            t.rows.push(vec![
                self.case.clone(),
                self.n.to_string(),
                fmt_sig(r.delta),
                r.trials.to_string(),
                r.exceed.to_string(),
                fmt_sig(r.empirical()),
                fmt_sig(r.bound_raw),
                fmt_sig(r.bound),
                r.bound_valid.to_string(),
                fmt_sig(r.slack),
                r.pass.to_string(),
            ]);
        }
        t
    }
}

fn tail_table(case: String, n: usize, deltas: &[f64], stats: &[f64]) -> Result<DeviationTable, ExperimentError> {
    let trials = stats.len() as u64;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let exceed = stats.iter().filter(|&&s| s > delta).count() as u64;
        let report = bounds::dev_bound_binary(delta, n as u64)?;
        let b = report.clamped;
        let r = trials.max(1) as f64;
        let slack = 3.0 * (b * (1.0 - b) / r).sqrt() + 1.0 / r;
        let empirical = if trials == 0 { 0.0 } else { exceed as f64 / r };
        let pass = !report.valid || empirical <= b + slack;
        rows.push(DeviationRow {
            delta,
            trials,
            exceed,
            bound_raw: report.raw,
            bound: b,
            bound_valid: report.valid,
            slack,
            pass,
        });
    }
    Ok(DeviationTable { case, n, rows })
}

fn sorted_grid(deltas: &[f64]) -> Result<Vec<f64>, ExperimentError> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(ExperimentError::Invalid("delta grid must be nonempty and positive".into()));
    }
    let mut grid = deltas.to_vec();
    grid.sort_by(f64::total_cmp);
    Ok(grid)
}

fn scaled_kl(count: u64, hits: u64, p: f64) -> f64 {
    let phat = hits as f64 / count as f64;
    count as f64 * binary_kl(phat, p).expect("p in (0, 1)").to_f64()
}

/// Tail of `n d(p̂; p)` for `n` i.i.d. Bernoulli(`p`) draws.
pub fn run_deviation_tail(p: f64, n: usize, deltas: &[f64], replicates: usize, seed: u64) -> Result<DeviationTable, ExperimentError> {
    if !(p > 0.0 && p < 1.0) || n < 2 || replicates == 0 {
        return Err(ExperimentError::Invalid(format!("need 0 < p < 1, n >= 2, R >= 1 (p = {p}, n = {n}, R = {replicates})")));
    }
    let grid = sorted_grid(deltas)?;
    let binomial = Binomial::new(n as u64, p).map_err(|e| ExperimentError::Invalid(e.to_string()))?;
    let stats: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, n as u64, r));
            scaled_kl(n as u64, binomial.sample(&mut rng), p)
        })
        .collect();
    tail_table(format!("iid p={}", fmt_sig(p)), n, &grid, &stats)
}

/// Markov deviation case: tail of `N(w) d(p̂(b|w); p(b|w))` given `N(w) > 0`
/// on stationary samples of effective length `n`.
pub struct MarkovDeviationSpec<'a> {
    pub model: &'a VlmcModel,
    /// Must have a context of the model as suffix, so that `p(b|w)` is a
    /// model probability.
    pub w: Word,
    pub b: u8,
    pub n: usize,
    pub deltas: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
}

pub fn run_markov_deviation_tail(spec: &MarkovDeviationSpec<'_>) -> Result<DeviationTable, ExperimentError> {
    let grid = sorted_grid(&spec.deltas)?;
    if spec.n < 2 || spec.replicates == 0 || spec.w.is_empty() {
        return Err(ExperimentError::Invalid("need n >= 2, R >= 1 and a nonempty w".into()));
    }
    let leaf = spec
        .model
        .resolver()
        .resolve(spec.w.symbols())
        .ok_or_else(|| ExperimentError::Invalid("w must have a context as suffix".into()))?;
    let p = spec.model.dist_at(leaf)[spec.b as usize];
    if !(p > 0.0 && p < 1.0) {
        return Err(ExperimentError::Invalid(format!("p(b|w) = {p} must lie in (0, 1)")));
    }
    let sim = Simulator::new(spec.model)?;
    let depth = spec.w.len();
    let stats = (0..spec.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let sample = sim.sample(&SimConfig {
                n: spec.n,
                past: depth,
                seed: derive_seed(spec.seed, spec.n as u64, r),
                init: Init::Stationary,
            })?;
            let counts = CountTrie::build(&sample, depth)?.query(&spec.w)?;
            Ok((counts.total > 0).then(|| scaled_kl(counts.total, counts.next[spec.b as usize], p)))
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let stats: Vec<f64> = stats.into_iter().flatten().collect();
    let alphabet = spec.model.alphabet();
    let case = format!(
        "markov w={} b={}",
        spec.w.render(alphabet),
        alphabet.token(spec.b)
    );
    tail_table(case, spec.n, &grid, &stats)
}
