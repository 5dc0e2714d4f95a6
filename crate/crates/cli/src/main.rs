//! `vlmc`: estimate, simulate and check variable-length Markov chains.
//!
//! Exit codes: 0 success, 1 a check or experiment failed, 2 usage or input
//! error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vlmc::bounds::{self, BoundReport, ModelCoefficients};
use vlmc::counts::default_depth;
use vlmc::estimators::{context_estimator, ctm_estimator, EstimationResult};
use vlmc::experiments::{
    bound_reports_csv, emit_csv, fmt_sig, run_deviation_tail, run_markov_deviation_tail, run_prop1_fuzz, run_recovery,
    CsvTable, ExperimentSpec, FuzzSpec, MarkovDeviationSpec, RunManifest,
};
use vlmc::format::{parse_model_text, parse_sample, parse_tree_text, read_model, read_sample, sample_to_text, tree_to_text, SampleFormat};
use vlmc::model::check_distribution;
use vlmc::simulate::{Init, SimConfig};
use vlmc::{Alphabet, ContextTree, CountTrie, EstimatorConfig, Sample, Schedule, TruncationLevel, Word};

#[derive(Debug, Parser)]
#[command(name = "vlmc", version, about = "Context tree estimation for variable-length Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a context tree from a sample file.
    Estimate(EstimateArgs),
    /// Draw a sample path from a model file.
    Simulate(SimulateArgs),
    /// Evaluate the finite-sample bounds as CSV.
    Bounds(BoundsArgs),
    /// Run a Monte Carlo experiment.
    Experiment(ExperimentArgs),
    /// Validate a model, tree or sample file.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Context,
    Pml,
    Both,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Alphabet symbols, e.g. "a b" or "ab"; inferred from the sample when omitted.
    #[arg(long)]
    alphabet: Option<String>,
    /// Sample layout: contiguous characters or whitespace-separated tokens.
    #[arg(long, default_value = "contiguous")]
    format: SampleFormat,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Sample file; its first `--past` symbols are the observed past.
    sample: PathBuf,
    #[command(flatten)]
    sample_args: SampleArgs,
    /// Estimator to run.
    #[arg(long, value_enum, default_value = "both")]
    algo: Algo,
    /// Maximal tree depth d [default: largest d with |A|^d <= m - d].
    #[arg(long)]
    depth: Option<usize>,
    /// Length of the observed past [default: depth].
    #[arg(long)]
    past: Option<usize>,
    /// PML penalty f(n): bic, const:<v>, clogn:<c> or cloglogn:<c>.
    #[arg(long, default_value = "bic")]
    penalty: Schedule,
    /// Context threshold, same syntax [default: the penalty].
    #[arg(long)]
    threshold: Option<Schedule>,
    /// Tree output file [default: stdout]; with --algo both, `.context`
    /// and `.pml` are inserted before the extension.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Per-node diagnostics CSV, named like --output.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Model file.
    model: PathBuf,
    /// Number of effective symbols n.
    #[arg(long)]
    n: usize,
    /// Past length d emitted before the n symbols [default: tree height, at least 1].
    #[arg(long)]
    past: Option<usize>,
    /// Base seed of the random stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from a fixed block and discard this many steps instead of
    /// drawing the start from the stationary law.
    #[arg(long)]
    burn_in: Option<usize>,
    /// Emit the past symbols before the sample.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    emit_past: bool,
    /// Sample layout: contiguous characters or whitespace-separated tokens.
    #[arg(long, default_value = "contiguous")]
    format: SampleFormat,
    /// Output file [default: stdout].
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Model file; enables the under-estimation bound and model coefficients.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Sample size.
    #[arg(long)]
    n: u64,
    /// Alphabet size when no model is given.
    #[arg(long, default_value_t = 2)]
    alphabet_size: usize,
    /// Penalty f(n), also the threshold when --delta is absent.
    #[arg(long, default_value = "bic")]
    penalty: Schedule,
    /// Threshold δ for the over-estimation and deviation bounds [default: f(n)].
    #[arg(long)]
    delta: Option<f64>,
    /// Truncation level K.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Maximal depth d; also sets k(n) = |A|^d for the restricted bound.
    #[arg(long)]
    depth: Option<usize>,
    /// Print the consistency diagnostic of --penalty up to this n instead.
    #[arg(long)]
    schedule_check: Option<u64>,
    /// CSV output file [default: stdout].
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentKind {
    Recovery,
    Prop1,
    Deviation,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Recovery frequencies, inclusion fuzzing between the estimators, or deviation tails.
    #[arg(long, value_enum, default_value = "recovery")]
    kind: ExperimentKind,
    /// Recovery spec file (key = value lines); model paths are relative to it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Model file for recovery without a spec, or for the Markov deviation case.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Comma-separated sample sizes (recovery) or the single n (deviation).
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    n: Vec<usize>,
    /// Replicates per sample size or per deviation case.
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    /// Base seed; replicate streams are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Penalty and threshold schedule for recovery without a spec.
    #[arg(long, default_value = "bic")]
    penalty: Schedule,
    /// Truncation level K for recovery without a spec.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Maximal depth d for recovery without a spec.
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Number of fuzz cases with δ ≤ f.
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    /// Bernoulli parameter of the i.i.d. deviation case.
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Comma-separated δ grid for the deviation case.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
    deltas: Vec<f64>,
    /// Context w and symbol b of the Markov deviation case.
    #[arg(long, default_value = "10")]
    word: String,
    /// Symbol b of the Markov deviation case.
    #[arg(long, default_value = "1")]
    symbol: char,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckKind {
    Model,
    Tree,
    Sample,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// File to validate.
    file: PathBuf,
    /// What the file holds.
    #[arg(long, value_enum, default_value = "model")]
    kind: CheckKind,
    #[command(flatten)]
    sample_args: SampleArgs,
}

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Simulate(a) => simulate(a),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Experiment(a) => experiment(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_out(path: Option<&Path>, content: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(content).map_err(|e| format!("stdout: {e}"))
        }
    }
}

/// `out.tree` -> `out.context.tree`.
fn tagged(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn load_alphabet(args: &SampleArgs, text: &str) -> CliResult<Alphabet> {
    match &args.alphabet {
        Some(decl) => Alphabet::parse(decl).map_err(|e| format!("--alphabet: {e}")),
        None => Alphabet::infer(text).map_err(|e| format!("cannot infer the alphabet: {e}; pass --alphabet")),
    }
}

fn diagnostics_csv(result: &EstimationResult, algo: Algo, tree: &ContextTree) -> CsvTable {
    let header = match algo {
        Algo::Context => ["word", "count", "delta", "c"],
        _ => ["word", "count", "log_v", "chi"],
    };
    let mut t = CsvTable::new(&header);
    for (w, d) in &result.diagnostics {
        t.rows.push(vec![
            w.render(tree.alphabet()),
            d.count.to_string(),
            fmt_sig(d.statistic),
            u8::from(d.indicator).to_string(),
        ]);
    }
    t
}

fn estimate(args: EstimateArgs) -> CliResult<ExitCode> {
    let text = read_text(&args.sample)?;
    let alphabet = load_alphabet(&args.sample_args, &text)?;
    let symbols = read_sample(&args.sample, &alphabet, args.sample_args.format).map_err(|e| e.to_string())?;
    let depth = args.depth.unwrap_or_else(|| default_depth(symbols.len(), alphabet.size()));
    let past = args.past.unwrap_or(depth);
    let sample = Sample::new(alphabet.clone(), symbols, past).map_err(|e| format!("{}: {e}", args.sample.display()))?;
    let trie = CountTrie::build(&sample, depth).map_err(|e| e.to_string())?;
    let threshold = args.threshold.unwrap_or(args.penalty);
    let config = EstimatorConfig::from_schedules(depth, threshold, args.penalty, sample.n(), alphabet.size())
        .map_err(|e| e.to_string())?;
    let runs: Vec<(Algo, &str)> = match args.algo {
        Algo::Both => vec![(Algo::Context, "context"), (Algo::Pml, "pml")],
        a => vec![(a, if a == Algo::Context { "context" } else { "pml" })],
    };
    let mut stdout = String::new();
    for (algo, tag) in runs {
        let result = match algo {
            Algo::Context => context_estimator(&trie, &config),
            _ => ctm_estimator(&trie, &config),
        }
        .map_err(|e| e.to_string())?;
        let tree_text = tree_to_text(&result.tree);
        let name = |p: &Path| if args.algo == Algo::Both { tagged(p, tag) } else { p.to_path_buf() };
        match &args.output {
            Some(p) => write_out(Some(&name(p)), tree_text.as_bytes())?,
            None => {
                if args.algo == Algo::Both {
                    let _ = writeln!(stdout, "# {tag}");
                }
                stdout.push_str(&tree_text);
            }
        }
        if let Some(p) = &args.diagnostics {
            emit_csv(&diagnostics_csv(&result, algo, &result.tree), &name(p)).map_err(|e| e.to_string())?;
        }
    }
    if !stdout.is_empty() {
        write_out(None, stdout.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: SimulateArgs) -> CliResult<ExitCode> {
    let model = read_model(&args.model).map_err(|e| e.to_string())?;
    let past = args.past.unwrap_or(model.height().max(1));
    let config = SimConfig {
        n: args.n,
        past,
        seed: args.seed,
        init: args.burn_in.map_or(Init::Stationary, Init::BurnIn),
    };
    let sample = vlmc::simulate::sample_path(&model, &config).map_err(|e| e.to_string())?;
    let symbols = if args.emit_past { sample.raw() } else { sample.effective() };
    write_out(args.output.as_deref(), sample_to_text(symbols, model.alphabet(), args.format).as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn bounds_cmd(args: BoundsArgs) -> CliResult<ExitCode> {
    let model = args.model.as_deref().map(read_model).transpose().map_err(|e| e.to_string())?;
    let a = model.as_ref().map_or(args.alphabet_size, |m| m.alphabet_size());
    if let Some(n_max) = args.schedule_check {
        let r = bounds::consistency_schedule_check(args.penalty, a, n_max).map_err(|e| e.to_string())?;
        let mut out = format!(
            "schedule: {}\nalphabet_size: {a}\nn_max: {}\npartial_sum: {}\ntail_exponent: {}\neventually_decreasing: {}\nsummable_looking: {}\nskipped: {}\n",
            args.penalty,
            r.n_max,
            fmt_sig(r.partial_sum),
            fmt_sig(r.tail_exponent),
            r.eventually_decreasing,
            r.summable_looking(),
            r.skipped
        );
        for (n, t) in &r.checkpoints {
            let _ = writeln!(out, "term[{n}]: {}", fmt_sig(*t));
        }
        write_out(args.output.as_deref(), out.as_bytes())?;
        return Ok(ExitCode::SUCCESS);
    }
    let f_n = args.penalty.eval(args.n as usize, a);
    let delta = args.delta.unwrap_or(f_n);
    let err = |e: bounds::BoundError| e.to_string();
    let mut reports: Vec<BoundReport> = vec![bounds::over_bound(args.n, delta, a).map_err(err)?];
    if let Some(d) = args.depth {
        let k_n = (a as f64).powi(d as i32);
        reports.push(bounds::over_bound_restricted(args.n, delta, a, k_n).map_err(err)?);
    }
    reports.push(bounds::dev_bound_binary(delta, args.n).map_err(err)?);
    reports.push(bounds::dev_bound_multi(delta, args.n, a).map_err(err)?);
    reports.push(bounds::dev_bound_multi_conditional(delta, args.n, a).map_err(err)?);
    if let Some(model) = &model {
        let d = args.depth.ok_or("--depth is required with --model")?;
        let k = TruncationLevel::new(args.k).map_err(|e| e.to_string())?;
        let coeffs = ModelCoefficients::compute(model, k, d).map_err(err)?;
        reports.push(bounds::under_bound(&coeffs.constants(), args.n, f_n, a, args.k, d).map_err(err)?);
    }
    write_out(args.output.as_deref(), &bound_reports_csv(&reports).to_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: ExperimentArgs) -> CliResult<ExitCode> {
    std::fs::create_dir_all(&args.out_dir).map_err(|e| format!("{}: {e}", args.out_dir.display()))?;
    let out = |name: &str| args.out_dir.join(name);
    let write_manifest = |manifest: String| write_out(Some(&out("manifest.json")), manifest.as_bytes());
    match args.kind {
        ExperimentKind::Recovery => {
            let (spec, model_path) = match &args.spec {
                Some(p) => {
                    let spec = ExperimentSpec::parse(&read_text(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
                    let model = spec
                        .model
                        .clone()
                        .or_else(|| args.model.clone())
                        .ok_or("the spec names no model and --model is absent")?;
                    let base = p.parent().unwrap_or(Path::new("."));
                    (spec, base.join(model))
                }
                None => {
                    let model = args.model.clone().ok_or("recovery needs --spec or --model")?;
                    let spec = ExperimentSpec {
                        model: Some(model.clone()),
                        n_grid: args.n.clone(),
                        replicates: args.replicates,
                        penalty: args.penalty,
                        k: args.k,
                        d: args.depth,
                        seed: args.seed,
                        ..Default::default()
                    };
                    (spec, model)
                }
            };
            let model = read_model(&model_path).map_err(|e| e.to_string())?;
            let table = run_recovery(&model, &spec).map_err(|e| e.to_string())?;
            emit_csv(&table.to_csv(), &out("recovery.csv")).map_err(|e| e.to_string())?;
            write_manifest(RunManifest::new(&spec).to_json())?;
            Ok(ExitCode::SUCCESS)
        }
        ExperimentKind::Prop1 => {
            let spec = FuzzSpec {
                cases: args.cases,
                outside_cases: args.cases / 10,
                seed: args.seed,
                ..Default::default()
            };
            let report = run_prop1_fuzz(&spec).map_err(|e| e.to_string())?;
            let mut text = format!(
                "checked: {}\nboundary: {}\nviolations: {}\noutside_checked: {}\noutside_violations: {}\n",
                report.checked,
                report.boundary,
                report.violations.len(),
                report.outside_checked,
                report.outside_violations
            );
            for (i, v) in report.violations.iter().enumerate() {
                let _ = write!(text, "\n## counterexample {}\n{v}\n", i + 1);
            }
            write_out(Some(&out("prop1.txt")), text.as_bytes())?;
            write_manifest(RunManifest::new(&spec).to_json())?;
            print!("{text}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        ExperimentKind::Deviation => {
            let n = *args.n.first().ok_or("--n is empty")?;
            let mut tables = vec![run_deviation_tail(args.p, n, &args.deltas, args.replicates, args.seed)
                .map_err(|e| e.to_string())?];
            if let Some(path) = &args.model {
                let model = read_model(path).map_err(|e| e.to_string())?;
                let w = Word::parse(&args.word, model.alphabet()).map_err(|e| format!("--word: {e}"))?;
                let b = model
                    .alphabet()
                    .index_of(args.symbol)
                    .ok_or_else(|| format!("--symbol {:?} is not in the model alphabet", args.symbol))?;
                tables.push(
                    run_markov_deviation_tail(&MarkovDeviationSpec {
                        model: &model,
                        w,
                        b,
                        n,
                        deltas: args.deltas.clone(),
                        replicates: args.replicates,
                        seed: args.seed,
                    })
                    .map_err(|e| e.to_string())?,
                );
            }
            let mut csv = tables[0].to_csv();
            for t in &tables[1..] {
                csv.rows.extend(t.to_csv().rows);
            }
            emit_csv(&csv, &out("deviation.csv")).map_err(|e| e.to_string())?;
            let mut manifest = RunManifest::new(deviation_inputs(&args));
            manifest.notes.push("pass: empirical <= bound + 3 sqrt(bound (1 - bound) / R) + 1 / R".into());
            write_manifest(manifest.to_json())?;
            let ok = tables.iter().all(|t| t.passed() && t.monotone());
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn deviation_inputs(args: &ExperimentArgs) -> Vec<(String, String)> {
    vec![
        ("p".into(), args.p.to_string()),
        ("n".into(), format!("{:?}", args.n)),
        ("deltas".into(), format!("{:?}", args.deltas)),
        ("replicates".into(), args.replicates.to_string()),
        ("seed".into(), args.seed.to_string()),
        ("model".into(), args.model.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
        ("word".into(), args.word.clone()),
        ("symbol".into(), args.symbol.to_string()),
    ]
}

struct CheckTable {
    rows: Vec<(String, bool, String)>,
}

impl CheckTable {
    fn push(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.rows.push((name.to_string(), ok, detail.into()));
    }

    fn finish(self) -> ExitCode {
        let width = self.rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        for (name, ok, detail) in &self.rows {
            println!("{name:width$}  {}  {detail}", if *ok { "PASS" } else { "FAIL" });
        }
        if self.rows.iter().all(|r| r.1) {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        }
    }
}

fn check(args: CheckArgs) -> CliResult<ExitCode> {
    let text = read_text(&args.file)?;
    let mut table = CheckTable { rows: Vec::new() };
    match args.kind {
        CheckKind::Model | CheckKind::Tree => {
            let raw = match parse_leaf_file(&text, args.kind) {
                Ok(raw) => raw,
                Err(e) => {
                    table.push("format", false, e);
                    return Ok(table.finish());
                }
            };
            table.push("format", true, format!("{} leaves", raw.1.len()));
            let alphabet = raw.0;
            let words: Vec<Word> = raw.1.iter().map(|(w, _)| w.clone()).collect();
            match ContextTree::new(alphabet.clone(), words) {
                Ok(tree) => {
                    table.push("suffix-free", true, "");
                    if args.kind == CheckKind::Model {
                        match tree.missing_branch() {
                            None => table.push("complete", true, ""),
                            Some(w) => table.push("complete", false, format!("no leaf covers pasts ending in {}", w.render(&alphabet))),
                        }
                    }
                }
                Err(e) => table.push("suffix-free", false, e.to_string()),
            }
            if args.kind == CheckKind::Model {
                let failures: Vec<String> = raw
                    .1
                    .iter()
                    .filter_map(|(w, p)| check_distribution(&w.render(&alphabet), p, alphabet.size()).err())
                    .map(|e| e.to_string())
                    .collect();
                table.push("distributions", failures.is_empty(), failures.join("; "));
            }
        }
        CheckKind::Sample => {
            let alphabet = match load_alphabet(&args.sample_args, &text) {
                Ok(a) => a,
                Err(e) => {
                    table.push("alphabet", false, e);
                    return Ok(table.finish());
                }
            };
            table.push("alphabet", true, alphabet.to_string());
            match parse_sample(&text, &alphabet, args.sample_args.format) {
                Ok(symbols) => table.push(
                    "symbols",
                    true,
                    format!("{} symbols, default depth {}", symbols.len(), default_depth(symbols.len(), alphabet.size())),
                ),
                Err(e) => table.push("symbols", false, e.to_string()),
            }
        }
    }
    Ok(table.finish())
}

type RawEntries = (Alphabet, Vec<(Word, Vec<f64>)>);

fn parse_leaf_file(text: &str, kind: CheckKind) -> Result<RawEntries, String> {
    if kind == CheckKind::Model {
        let raw = parse_model_text(text).map_err(|e| e.to_string())?;
        return Ok((raw.alphabet, raw.entries.into_iter().map(|e| (e.word, e.probs)).collect()));
    }
    let (alphabet, leaves) = parse_tree_text(text).map_err(|e| e.to_string())?;
    Ok((alphabet, leaves.into_iter().map(|w| (w, Vec::new())).collect()))
}
