use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use depwatch_core::classify::{
    feature_importance, kmeans_features, pca_features, train_classifier_strict, Classifier, ClusteringConfig,
    ForestParams,
};
use depwatch_core::forecast::{backtest, parse_series, Horizon, Method};
use depwatch_core::metrics::LabeledDataset;
use depwatch_core::report::{
    evaluate, generate_synthetic_ecosystem, render_report, run_scan, scan_single, to_canonical_json, OutputFormat,
    Report, ScanConfig, SynthConfig,
};

/// Exit status for operational errors; 0 and 1 are the scan verdicts.
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "depwatch", version, about = "Monitor the maintenance activity of your dependencies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan every library reachable from the snapshot's roots.
    Scan(ScanArgs),
    /// Scan selected libraries (and what they depend on).
    Lib(LibArgs),
    /// Train a random forest on a labeled dataset.
    Train(TrainArgs),
    /// Generate a synthetic ecosystem with ground truth.
    Synth(SynthArgs),
    /// Score a scan of a generated ecosystem against its ground truth.
    Eval(EvalArgs),
    /// Feature importance, k-means and PCA summaries of a dataset.
    Analyze(AnalyzeArgs),
    /// Rolling-origin backtest of one forecasting method on a series file.
    Backtest(BacktestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
    Markdown,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Text => OutputFormat::Text,
            Format::Markdown => OutputFormat::Markdown,
        }
    }
}

#[derive(Args)]
struct ScanArgs {
    /// Dependency snapshot JSON.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Offline activity store directory.
    #[arg(long, conflicts_with = "api")]
    store: Option<PathBuf>,
    /// Base URL of a live forge API (token from DEPWATCH_TOKEN).
    #[arg(long)]
    api: Option<String>,
    /// Reference date (YYYY-MM-DD); defaults to today.
    #[arg(long)]
    as_of: Option<NaiveDate>,
    /// Trained forest model; the rule table is used otherwise.
    #[arg(long, conflicts_with = "rules_only")]
    model: Option<PathBuf>,
    /// Label with the rule table even if the config names a model.
    #[arg(long)]
    rules_only: bool,
    /// Comma-separated forecast horizons in months.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<u32>>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hours one manual review costs; adds review_hours_saved to the summary.
    #[arg(long)]
    cost_per_review_hours: Option<f64>,
    /// Concurrent activity fetches.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct LibArgs {
    /// Library ids (`ecosystem:name[@version]`).
    ids: Vec<String>,
    /// File with one library id per line.
    #[arg(long)]
    file: Option<PathBuf>,
    #[command(flatten)]
    scan: ScanArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 16)]
    max_depth: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    density: f64,
    /// Share of libraries drawn for a neighboring label.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Label mix as four comma-separated shares (active, feature complete, dormant, inactive).
    #[arg(long, value_delimiter = ',')]
    label_mix: Option<Vec<f64>>,
    #[arg(long)]
    as_of: Option<NaiveDate>,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory written by `depwatch synth`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Print only the suspicious-vs-not scores.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 11)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    components: usize,
}

#[derive(Args)]
struct BacktestArgs {
    /// JSON array of {week_start, value}.
    #[arg(long)]
    series: PathBuf,
    #[arg(long, default_value = "linear_trend")]
    method: String,
    /// Horizon in months.
    #[arg(long, default_value_t = 3)]
    horizon: u32,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let json_errors = match &cli.command {
        Command::Scan(a) | Command::Lib(LibArgs { scan: a, .. }) => matches!(a.format, Some(Format::Json) | None),
        _ => false,
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("depwatch: error: {err:#}");
            if json_errors {
                let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
                print!("{}", to_canonical_json(&json!({"error": {"message": format!("{err:#}"), "causes": chain}})));
            }
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Scan(args) => {
            let config = scan_config(&args)?;
            let report = run_scan(&config).context("scan failed")?;
            emit_report(&report, &config, args.out.as_deref())
        }
        Command::Lib(args) => {
            let mut ids = args.ids.clone();
            if let Some(file) = &args.file {
                let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
                ids.extend(
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .map(String::from),
                );
            }
            if ids.is_empty() {
                bail!("give library ids or --file");
            }
            let config = scan_config(&args.scan)?;
            let report = scan_single(&ids, &config).context("scan failed")?;
            emit_report(&report, &config, args.scan.out.as_deref())
        }
        Command::Train(args) => train(&args).map(|_| 0),
        Command::Synth(args) => synth(&args).map(|_| 0),
        Command::Eval(args) => {
            let eval = evaluate(&args.truth, args.model.clone()).context("evaluation failed")?;
            let out = if args.binary {
                to_canonical_json(&eval.binary)
            } else {
                to_canonical_json(&eval)
            };
            print!("{out}");
            Ok(0)
        }
        Command::Analyze(args) => analyze(&args).map(|_| 0),
        Command::Backtest(args) => {
            let bytes = std::fs::read(&args.series).with_context(|| format!("reading {}", args.series.display()))?;
            let values: Vec<f64> = parse_series(&bytes)?.into_iter().map(|p| p.value).collect();
            let method: Method = args.method.parse()?;
            let horizon = Horizon::new(args.horizon)?;
            let metrics = backtest(&values, method, horizon.steps())?;
            print!(
                "{}",
                to_canonical_json(&json!({
                    "method": method,
                    "horizon_months": horizon.months(),
                    "steps": horizon.steps(),
                    "metrics": metrics,
                }))
            );
            Ok(0)
        }
    }
}

/// Layers command-line flags over the optional config file.
fn scan_config(args: &ScanArgs) -> Result<ScanConfig> {
    let mut doc: Map<String, Value> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            match serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))? {
                Value::Object(map) => map,
                _ => bail!("{} must contain a JSON object", path.display()),
            }
        }
        None => Map::new(),
    };
    let mut set = |key: &str, value: Value| {
        doc.insert(key.to_string(), value);
    };
    if let Some(p) = &args.snapshot {
        set("snapshot", json!(p));
    }
    match (&args.store, &args.api) {
        (Some(dir), None) => set("source", json!({ "store": dir })),
        (None, Some(url)) => set("source", json!({ "api": url })),
        _ => {}
    }
    if let Some(d) = args.as_of {
        set("as_of", json!(d));
    }
    if let Some(m) = &args.model {
        set("model", json!(m));
    }
    if args.rules_only {
        set("model", Value::Null);
    }
    if let Some(h) = &args.horizons {
        set("horizons", json!(h));
    }
    if let Some(f) = args.format {
        set("format", json!(OutputFormat::from(f)));
    }
    if let Some(c) = args.cost_per_review_hours {
        set("cost_per_review_hours", json!(c));
    }
    if let Some(p) = args.parallelism {
        set("parallelism", json!(p));
    }
    if !doc.contains_key("snapshot") {
        bail!("no snapshot given (--snapshot or the config file)");
    }
    if !doc.contains_key("source") {
        bail!("no activity source given (--store, --api or the config file)");
    }
    let config: ScanConfig = serde_json::from_value(Value::Object(doc)).context("invalid scan configuration")?;
    config.validate()?;
    Ok(config)
}

fn emit_report(report: &Report, config: &ScanConfig, out: Option<&Path>) -> Result<u8> {
    let bytes = render_report(report, config.format);
    match out {
        Some(path) => std::fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(report.exit_code() as u8)
}

fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(LabeledDataset::from_json(&bytes)?)
}

fn train(args: &TrainArgs) -> Result<()> {
    let data = read_dataset(&args.dataset)?;
    let params = ForestParams {
        n_trees: args.trees,
        max_depth: args.max_depth,
        seed: args.seed,
        ..ForestParams::default()
    };
    let model = train_classifier_strict(&data, &params)?;
    std::fs::write(&args.out, model.to_json()).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(oob) = &model.oob {
        eprintln!(
            "trained {} trees; out-of-bag accuracy {:.3}, macro-F1 {:.3} over {} rows",
            model.n_trees(),
            oob.accuracy,
            oob.macro_f1,
            oob.rows_scored
        );
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut config = SynthConfig {
        seed: args.seed,
        n_libraries: args.n,
        edge_density: args.density,
        label_noise: args.noise,
        ..SynthConfig::default()
    };
    if let Some(mix) = &args.label_mix {
        config.label_mix = mix
            .as_slice()
            .try_into()
            .map_err(|_| anyhow::anyhow!("--label-mix needs exactly four shares"))?;
    }
    if let Some(d) = args.as_of {
        config.as_of = d;
    }
    let eco = generate_synthetic_ecosystem(&config)?;
    let paths = eco.write_to(&args.out)?;
    eprintln!(
        "wrote {} libraries to {} (snapshot {}, truth {})",
        eco.snapshot.libraries.len(),
        args.out.display(),
        paths.snapshot.display(),
        paths.truth.display()
    );
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let data = read_dataset(&args.dataset)?;
    let features: Vec<_> = data.rows.iter().map(|r| r.features.clone()).collect();
    let clusters = kmeans_features(
        &features,
        &ClusteringConfig {
            k: args.k,
            seed: args.seed,
            ..ClusteringConfig::default()
        },
    )?;
    let mut sizes = vec![0usize; args.k];
    for &a in &clusters.assignments {
        sizes[a] += 1;
    }
    let pca = pca_features(&features, args.components)?;
    let mut out = json!({
        "rows": data.rows.len(),
        "label_histogram": data.histogram(),
        "kmeans": {
            "k": args.k,
            "cluster_sizes": sizes,
            "inertia": clusters.inertia,
            "iterations": clusters.iterations,
            "converged": clusters.converged,
        },
        "pca": {
            "explained_variance_ratio": pca.explained_variance_ratio,
            "components": pca.components,
        },
    });
    if let Some(path) = &args.model {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let model = Classifier::from_json(&bytes)?;
        let importance: Map<String, Value> = feature_importance(&model)
            .into_iter()
            .map(|(name, v)| (name, json!(v)))
            .collect();
        out["feature_importance"] = Value::Object(importance);
    }
    print!("{}", to_canonical_json(&out));
    Ok(())
}
