//! `ivord` command-line front end.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 numerical or fit failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use ivord::ensemble::WeightKernel;
use ivord::experiment::{gen_synthetic, run_mc, DataSource, McConfig, SyntheticDesign};
use ivord::io::{read_table_path, write_ivd, write_predictions};
use ivord::methods::{Method, MethodConfig, ModelRecord};
use ivord::metrics::{pairwise, DistanceKind, PairwiseKind};
use ivord::numeric::RngStream;
use ivord::par::with_threads;

#[derive(Parser)]
#[command(name = "ivord", version, about = "Ordinal classification of interval-valued data")]
struct Cli {
    /// Worker threads; defaults to one per core. Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic interval dataset as CSV.
    Gen(GenArgs),
    /// Fit one method and save the model as JSON.
    Fit(FitArgs),
    /// Predict labels for a CSV with a saved model.
    Predict(PredictArgs),
    /// Monte Carlo comparison of methods over repeated train/test splits.
    Bench(BenchArgs),
    /// Pairwise distance or kernel matrix as CSV.
    Pairwise(PairwiseArgs),
}

/// Settings shared by the commands that fit models.
#[derive(Args, Clone, Default)]
struct Tuning {
    /// TOML file with flag names as keys; flags on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// RBF kernel spread for KPCA+POLR and KIOF.
    #[arg(long)]
    gamma: Option<f64>,
    /// Neighbours for DI+wkNN.
    #[arg(long)]
    k: Option<usize>,
    /// Keep every n-th grid point when a vector method sees curves.
    #[arg(long)]
    subsample_step: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    /// three_class or four_class.
    #[arg(long)]
    design: String,
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path; standard output when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    method: String,
    /// Labeled CSV in the wide (interval vector) or long (curve) layout.
    #[arg(long)]
    data: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with the same layout as the training data; labels are optional.
    #[arg(long)]
    data: PathBuf,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Synthetic design regenerated for every replicate.
    #[arg(long, conflicts_with = "data")]
    design: Option<String>,
    /// Fixed labeled dataset, re-split for every replicate.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    train_frac: Option<f64>,
    /// Comma-separated method names, `all` or `curve`.
    #[arg(long)]
    methods: Option<String>,
    /// Writes `<OUT>.json` and `<OUT>.csv`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixKind {
    H,
    Eh,
    Fh,
    Feh,
    Kernel,
}

#[derive(Args)]
struct PairwiseArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "eh")]
    kind: MatrixKind,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

/// Keys accepted in `--config` files.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    reps: Option<usize>,
    train_frac: Option<f64>,
    methods: Option<String>,
    gamma: Option<f64>,
    k: Option<usize>,
    weight: Option<String>,
    subsample_step: Option<usize>,
    jobs: Option<usize>,
    design: Option<String>,
    n_per_class: Option<usize>,
    of_sets: Option<usize>,
    of_trees_per_set: Option<usize>,
    of_best: Option<usize>,
    of_trees_final: Option<usize>,
    of_min_leaf: Option<usize>,
    kpca_variance: Option<f64>,
    kpca_max_dim: Option<usize>,
}

enum Failure {
    Usage(String),
    Core(ivord::Error),
}

impl From<ivord::Error> for Failure {
    fn from(e: ivord::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Outcome<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Defaults, then the config file, then flags.
fn method_config(file: &FileConfig, tuning: &Tuning) -> Outcome<MethodConfig> {
    let mut c = MethodConfig::default();
    if let Some(v) = tuning.gamma.or(file.gamma) {
        c.gamma = v;
    }
    if let Some(v) = tuning.k.or(file.k) {
        c.k = v;
    }
    if let Some(v) = &file.weight {
        c.weight = v.parse::<WeightKernel>()?;
    }
    c.subsample_step = tuning.subsample_step.or(file.subsample_step);
    let of = &mut c.of;
    of.n_sets = file.of_sets.unwrap_or(of.n_sets);
    of.trees_per_set = file.of_trees_per_set.unwrap_or(of.trees_per_set);
    of.n_best = file.of_best.unwrap_or(of.n_best);
    of.trees_final = file.of_trees_final.unwrap_or(of.trees_final);
    of.min_leaf = file.of_min_leaf.unwrap_or(of.min_leaf);
    c.kpca_variance = file.kpca_variance.unwrap_or(c.kpca_variance);
    c.kpca_max_dim = file.kpca_max_dim.unwrap_or(c.kpca_max_dim);
    if !(c.gamma > 0.0 && c.gamma.is_finite()) {
        return Err(Failure::Usage(format!("--gamma must be > 0, got {}", c.gamma)));
    }
    Ok(c)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Outcome<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| io_failure(path, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Usage(format!("standard output: {e}"))),
    }
}

fn cmd_gen(args: GenArgs) -> Outcome<()> {
    let mut design = SyntheticDesign::by_name(&args.design)?;
    if let Some(n) = args.n_per_class {
        design = design.with_per_class(n);
    }
    let data = gen_synthetic(&design, RngStream::new(args.seed))?;
    let mut buf = Vec::new();
    write_ivd(&data, &mut buf)?;
    write_output(args.out.as_deref(), &buf)
}

fn cmd_fit(args: FitArgs) -> Outcome<()> {
    let file = load_config(args.tuning.config.as_deref())?;
    let config = method_config(&file, &args.tuning)?;
    let method: Method = args.method.parse()?;
    let data = read_table_path(&args.data)?.into_labeled(None)?;
    let seed = args.tuning.seed.or(file.seed).unwrap_or(1);
    let record = ModelRecord::fit(method, &data, &config, RngStream::new(seed).derive_named("fit"))?;
    write_output(Some(&args.out), record.to_json()?.as_bytes())
}

fn cmd_predict(args: PredictArgs) -> Outcome<()> {
    let text = fs::read_to_string(&args.model).map_err(|e| io_failure(&args.model, e))?;
    let record = ModelRecord::from_json(&text)?;
    let table = read_table_path(&args.data)?;
    let mut predicted = Vec::with_capacity(table.len());
    let mut probabilities = Vec::new();
    for obs in &table.observations {
        match record.predict_proba(obs)? {
            Some(p) => {
                predicted.push(ivord::linear::argmax_low(&p));
                probabilities.push(p);
            }
            None => predicted.push(record.predict(obs)?),
        }
    }
    let probs = (!probabilities.is_empty()).then_some(probabilities.as_slice());
    let mut buf = Vec::new();
    write_predictions(&table.ids, &predicted, probs, &mut buf)?;
    write_output(args.out.as_deref(), &buf)
}

fn cmd_bench(args: BenchArgs) -> Outcome<()> {
    let file = load_config(args.tuning.config.as_deref())?;
    let method_config = method_config(&file, &args.tuning)?;
    let source = match (&args.data, args.design.as_ref().or(file.design.as_ref())) {
        (Some(path), _) => DataSource::Fixed(read_table_path(path)?.into_labeled(None)?),
        (None, Some(name)) => {
            let mut design = SyntheticDesign::by_name(name)?;
            if let Some(n) = args.n_per_class.or(file.n_per_class) {
                design = design.with_per_class(n);
            }
            DataSource::Synthetic(design)
        }
        (None, None) => return Err(Failure::Usage("bench needs --design or --data".into())),
    };
    let methods = match args.methods.as_ref().or(file.methods.as_ref()) {
        Some(list) => Method::parse_list(list)?,
        None => Method::ALL.to_vec(),
    };
    let defaults = McConfig::default();
    let config = McConfig {
        seed: args.tuning.seed.or(file.seed).unwrap_or(defaults.seed),
        reps: args.reps.or(file.reps).unwrap_or(defaults.reps),
        train_frac: args.train_frac.or(file.train_frac).unwrap_or(defaults.train_frac),
        methods,
        method_config,
    };
    let report = run_mc(&source, &config)?;
    if let Some(prefix) = &args.out {
        let json = prefix.with_extension("json");
        fs::write(&json, report.to_json()?).map_err(|e| io_failure(&json, e))?;
        let csv = prefix.with_extension("csv");
        let f = fs::File::create(&csv).map_err(|e| io_failure(&csv, e))?;
        report.write_csv(f)?;
    }
    print!("{}", report.table());
    Ok(())
}

fn cmd_pairwise(args: PairwiseArgs) -> Outcome<()> {
    let table = read_table_path(&args.data)?;
    let kind = match args.kind {
        MatrixKind::H => PairwiseKind::Distance { distance: DistanceKind::H },
        MatrixKind::Eh => PairwiseKind::Distance { distance: DistanceKind::EH },
        MatrixKind::Fh => PairwiseKind::Distance { distance: DistanceKind::FH },
        MatrixKind::Feh => PairwiseKind::Distance { distance: DistanceKind::FEH },
        MatrixKind::Kernel => PairwiseKind::Kernel { gamma: args.gamma },
    };
    let matrix = pairwise(&table.observations, kind)?;
    let mut buf = Vec::new();
    matrix.write_csv(&table.ids, &mut buf)?;
    write_output(args.out.as_deref(), &buf)
}

fn run(cli: Cli) -> Outcome<()> {
    let config_jobs = match &cli.command {
        Command::Fit(a) => load_config(a.tuning.config.as_deref())?.jobs,
        Command::Bench(a) => load_config(a.tuning.config.as_deref())?.jobs,
        _ => None,
    };
    let jobs = cli.jobs.or(config_jobs);
    let command = cli.command;
    let work = move || match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Pairwise(a) => cmd_pairwise(a),
    };
    match jobs {
        Some(n) => with_threads(n, work)?,
        None => work(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
