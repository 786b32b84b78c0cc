//! Command-line front end. [`run`] takes the full argv and returns the
//! process exit code, so it can be driven from tests.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytics::{centrality_scores, magnitude_correlations, write_correlations_csv, Magnitude};
use crate::dataset::{
    citation_paths, load_citation, load_edgelist, synthetic_citation, CitationOrientation, Dataset, SyntheticSpec,
};
use crate::error::{Error, ErrorClass, Result};
use crate::graph::{add_self_loops, build_operator};
use crate::linkpred::{
    evaluate, grid_search, make_split_with, run_experiment, write_heatmap_csv, write_results_csv,
    write_timing_csv, DigaeGrid, ExperimentReport, ModelSpec, SplitOptions,
};
use crate::model::{encode, write_embeddings_csv, write_params, EncodingPair};
use crate::spectral::{spectrum_study, write_spectrum_csv, SvdMethod};
use crate::train::{train, write_loss_trace, TrainConfig};
use crate::wl::{reduction_report, wl_refine_directed};

pub const DATA_ENV: &str = "DIGAE_DATA";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Parser, Debug)]
#[command(name = "digae", version, about = "Directed graph auto-encoders and link-prediction benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model on one split and report test AUC/AP.
    Train(TrainArgs),
    /// Repeated-split protocol: mean and std of AUC/AP over fresh splits.
    Benchmark(BenchmarkArgs),
    /// Grid search by mean validation AUC; writes the full table and an α×β heatmap.
    Grid(GridArgs),
    /// Directed pair coloring and the bipartite reduction check.
    Wl(WlArgs),
    /// Truncated SVD of the train adjacency, repeated-split protocol.
    SvdBaseline(SvdArgs),
    /// Truncated SVD of the Katz proximity (HOPE), repeated-split protocol.
    HopeBaseline(HopeArgs),
    /// Correlate encoding magnitudes with HITS, PageRank and degrees.
    Analytics(AnalyticsArgs),
    /// Singular values of the propagation operator per (α, β).
    Spectrum(SpectrumArgs),
    /// Train on the full graph and write source/target encodings as CSV.
    ExportEmbeddings(ExportArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
enum Orientation {
    CitingToCited,
    CitedToCiting,
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// Dataset name, read from <root>/<name>/<name>.content and .cites.
    #[arg(long)]
    dataset: Option<String>,
    /// Dataset root directory [default: $DIGAE_DATA, else ./data].
    #[arg(long)]
    data_root: Option<PathBuf>,
    /// Content file (id, 0/1 features, label; TAB separated).
    #[arg(long, requires = "cites")]
    content: Option<PathBuf>,
    /// Cites file, one "cited citing" pair per line.
    #[arg(long, requires = "content")]
    cites: Option<PathBuf>,
    /// Edge list, one "source target" pair per line; one-hot features.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Node count for --edges (defaults to largest id + 1).
    #[arg(long)]
    nodes: Option<usize>,
    /// Generate a synthetic citation-like graph with this many nodes.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Seed for --synthetic.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Edge direction for cites files.
    #[arg(long, value_enum, default_value = "citing-to-cited")]
    orientation: Orientation,
    /// Replace node features with one-hot encodings.
    #[arg(long)]
    featureless: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum ModelKind {
    Digae,
    #[value(name = "digae-1l")]
    Digae1l,
    Svd,
    Randsvd,
    HopeKatz,
}

#[derive(Args, Debug, Clone)]
struct TrainingArgs {
    /// In-degree exponent α.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Out-degree exponent β.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Hidden width d; the latent width is d/2.
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// Adam learning rate η.
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Use W_S = W_T.
    #[arg(long)]
    shared_weights: bool,
    /// Draw training negatives once instead of every epoch.
    #[arg(long)]
    fixed_negatives: bool,
    /// Training negatives per positive.
    #[arg(long, default_value_t = 1.0)]
    negative_ratio: f64,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Base seed; repeat r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct SplitArgs {
    /// Reject (i, j) as a negative when (j, i) is an edge.
    #[arg(long)]
    exclude_reciprocal: bool,
}

#[derive(Args, Debug, Clone)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, value_enum, default_value = "digae")]
    model: ModelKind,
}

#[derive(Args, Debug, Clone)]
struct BenchmarkArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, value_enum, default_value = "digae")]
    model: ModelKind,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// Embedding rank for SVD and HOPE.
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// Katz decay for HOPE.
    #[arg(long, default_value_t = 0.02)]
    katz_decay: f64,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, value_enum, default_value = "digae")]
    model: ModelKind,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.005, 0.01])]
    lrs: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [32, 64])]
    hiddens: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8])]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.4, 0.6, 0.8])]
    betas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8, 16, 32, 64, 128])]
    ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.02])]
    katz_decays: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
struct WlArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SvdArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, value_enum, default_value = "randomized")]
    method: Method,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
}

#[derive(Args, Debug, Clone)]
struct HopeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 32)]
    k: usize,
    #[arg(long, default_value_t = 0.02)]
    katz_decay: f64,
    #[arg(long, value_enum, default_value = "randomized")]
    method: Method,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Lanczos,
    Randomized,
}

impl From<Method> for SvdMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Lanczos => SvdMethod::Lanczos,
            Method::Randomized => SvdMethod::Randomized,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Norm {
    L1,
    L2,
    Max,
}

#[derive(Args, Debug, Clone)]
struct AnalyticsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, value_enum, default_value = "digae-1l")]
    model: ModelKind,
    /// Row norm that defines an encoding's magnitude.
    #[arg(long, value_enum, default_value = "l2")]
    magnitude: Norm,
}

#[derive(Args, Debug, Clone)]
struct SpectrumArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Exponent pairs as alpha:beta, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = ["0:0".to_string(), "0.3:0.3".into(), "0.5:0.5".into(), "0.8:0.8".into()])]
    pairs: Vec<String>,
    /// Only the leading singular values.
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ExportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, value_enum, default_value = "digae")]
    model: ModelKind,
}

#[derive(Args, Debug, Clone)]
struct ReplayArgs {
    /// Manifest written by an earlier run.
    manifest: PathBuf,
    /// Output directory for the replay.
    #[arg(long)]
    out: PathBuf,
}

/// Written next to every result set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub dataset: String,
    pub model: Option<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli.command, &args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    }
}

fn dispatch(cmd: Command, args: &[String]) -> Result<()> {
    match cmd {
        Command::Train(a) => with_jobs(a.common.jobs, || cmd_train(&a, args)),
        Command::Benchmark(a) => with_jobs(a.common.jobs, || cmd_benchmark(&a, args)),
        Command::Grid(a) => with_jobs(a.common.jobs, || cmd_grid(&a, args)),
        Command::Wl(a) => cmd_wl(&a, args),
        Command::SvdBaseline(a) => with_jobs(a.common.jobs, || {
            let spec = ModelSpec::Svd {
                k: a.k,
                method: a.method.into(),
            };
            repeated(&a.data, &a.common, &a.split, spec, a.repeats, "svd-baseline", args)
        }),
        Command::HopeBaseline(a) => with_jobs(a.common.jobs, || {
            let spec = ModelSpec::HopeKatz {
                k: a.k,
                katz_decay: a.katz_decay,
                method: a.method.into(),
            };
            repeated(&a.data, &a.common, &a.split, spec, a.repeats, "hope-baseline", args)
        }),
        Command::Analytics(a) => with_jobs(a.common.jobs, || cmd_analytics(&a, args)),
        Command::Spectrum(a) => with_jobs(a.common.jobs, || cmd_spectrum(&a, args)),
        Command::ExportEmbeddings(a) => with_jobs(a.common.jobs, || cmd_export(&a, args)),
        Command::Replay(a) => cmd_replay(&a),
    }
}

fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    match jobs {
        None => f(),
        Some(0) => Err(Error::InvalidConfig("--jobs must be positive".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(f),
    }
}

fn load_data(d: &DataArgs) -> Result<Dataset> {
    let orientation = match d.orientation {
        Orientation::CitingToCited => CitationOrientation::CitingToCited,
        Orientation::CitedToCiting => CitationOrientation::CitedToCiting,
    };
    let sources = [d.dataset.is_some(), d.content.is_some(), d.edges.is_some(), d.synthetic.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(Error::InvalidConfig(
            "give exactly one of --dataset, --content/--cites, --edges, --synthetic".into(),
        ));
    }
    let ds = if let Some(name) = &d.dataset {
        let root = d
            .data_root
            .clone()
            .or_else(|| std::env::var_os(DATA_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data"));
        let (content, cites) = citation_paths(&root, name);
        let mut ds = load_citation(&content, &cites, orientation)?;
        ds.name = name.clone();
        ds
    } else if let (Some(content), Some(cites)) = (&d.content, &d.cites) {
        load_citation(content, cites, orientation)?
    } else if let Some(edges) = &d.edges {
        load_edgelist(edges, d.nodes)?
    } else {
        synthetic_citation(&SyntheticSpec {
            nodes: d.synthetic.unwrap_or_default(),
            seed: d.data_seed,
            ..SyntheticSpec::default()
        })?
    };
    log::info!(
        "{}: {} nodes, {} edges, {} features",
        ds.name,
        ds.node_count(),
        ds.edge_count(),
        ds.feature_dim()
    );
    Ok(if d.featureless { ds.featureless() } else { ds })
}

fn train_config(t: &TrainingArgs, model: ModelKind, seed: u64) -> Result<TrainConfig> {
    let depth = match model {
        ModelKind::Digae => 2,
        ModelKind::Digae1l => 1,
        other => {
            return Err(Error::InvalidConfig(format!("{other:?} is not a trainable model")));
        }
    };
    let cfg = TrainConfig {
        learning_rate: t.lr,
        epochs: t.epochs,
        alpha: t.alpha,
        beta: t.beta,
        depth,
        seed,
        negative_ratio: t.negative_ratio,
        resample_negatives: !t.fixed_negatives,
        shared_weights: t.shared_weights,
        ..TrainConfig::default()
    }
    .with_hidden(t.hidden);
    cfg.validate()?;
    Ok(cfg)
}

fn model_spec(model: ModelKind, t: &TrainingArgs, k: usize, katz_decay: f64) -> Result<ModelSpec> {
    Ok(match model {
        ModelKind::Digae | ModelKind::Digae1l => ModelSpec::Digae(train_config(t, model, 0)?),
        ModelKind::Svd => ModelSpec::Svd {
            k,
            method: SvdMethod::Lanczos,
        },
        ModelKind::Randsvd => ModelSpec::Svd {
            k,
            method: SvdMethod::Randomized,
        },
        ModelKind::HopeKatz => ModelSpec::HopeKatz {
            k,
            katz_decay,
            method: SvdMethod::Randomized,
        },
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_manifest(
    dir: &Path,
    command: &str,
    ds: &Dataset,
    model: Option<&str>,
    config: serde_json::Value,
    seeds: Vec<u64>,
    args: &[String],
) -> Result<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        dataset: ds.name.clone(),
        model: model.map(str::to_string),
        config,
        seeds,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        args: args.to_vec(),
    };
    serde_json::to_writer_pretty(create(dir, MANIFEST_FILE)?, &manifest)?;
    Ok(())
}

fn split_options(s: &SplitArgs) -> SplitOptions {
    SplitOptions {
        exclude_reciprocal: s.exclude_reciprocal,
    }
}

fn cmd_train(a: &TrainArgs, args: &[String]) -> Result<()> {
    let ds = load_data(&a.data)?;
    let cfg = train_config(&a.training, a.model, a.common.seed)?;
    let split = make_split_with(&ds.graph, a.common.seed, split_options(&a.split))?;
    let g_train = split.train_graph()?;
    let out = train(&g_train, &ds.features, &cfg)?;
    let op = build_operator(&add_self_loops(&g_train), cfg.alpha, cfg.beta)?;
    let z = encode(&out.params, &op, &ds.features, &ds.features)?;
    let test = evaluate(&z, &split.test_pos, &split.test_neg)?;
    let val = evaluate(&z, &split.val_pos, &split.val_neg)?;

    let dir = &a.common.out;
    write_loss_trace(&out.loss_trace, create(dir, "loss.csv")?)?;
    write_params(&out.params, &mut create(dir, "model.bin")?)?;
    let mut w = csv::Writer::from_writer(create(dir, "metrics.csv")?);
    w.write_record(["dataset", "model", "seed", "auc", "ap", "val_auc", "val_ap"])?;
    w.write_record([
        ds.name.clone(),
        a.model.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default(),
        a.common.seed.to_string(),
        format!("{:.6}", test.auc),
        format!("{:.6}", test.ap),
        format!("{:.6}", val.auc),
        format!("{:.6}", val.ap),
    ])?;
    w.flush()?;
    println!("test auc {:.4} ap {:.4}", test.auc, test.ap);
    write_manifest(
        dir,
        "train",
        &ds,
        Some(ModelSpec::Digae(cfg.clone()).name()),
        serde_json::to_value(&cfg)?,
        vec![a.common.seed],
        args,
    )
}

fn emit_reports(dir: &Path, stem: &str, reports: &[ExperimentReport]) -> Result<()> {
    write_results_csv(reports, create(dir, &format!("{stem}.csv"))?)?;
    write_timing_csv(reports, create(dir, &format!("{stem}.timing.csv"))?)?;
    serde_json::to_writer_pretty(create(dir, &format!("{stem}.json"))?, reports)?;
    Ok(())
}

fn print_report(r: &ExperimentReport) {
    println!(
        "{} {}: auc {:.2} ± {:.2}  ap {:.2} ± {:.2}  ({} splits)",
        r.dataset,
        r.model,
        100.0 * r.auc.mean,
        100.0 * r.auc.std,
        100.0 * r.ap.mean,
        100.0 * r.ap.std,
        r.trials.len()
    );
}

fn repeated(
    data: &DataArgs,
    common: &CommonArgs,
    split: &SplitArgs,
    spec: ModelSpec,
    repeats: usize,
    command: &str,
    args: &[String],
) -> Result<()> {
    let ds = load_data(data)?;
    let report = run_experiment(&ds, &spec, repeats, common.seed, split_options(split))?;
    print_report(&report);
    emit_reports(&common.out, "results", std::slice::from_ref(&report))?;
    write_manifest(
        &common.out,
        command,
        &ds,
        Some(spec.name()),
        serde_json::to_value(&spec)?,
        (0..repeats as u64).map(|r| common.seed + r).collect(),
        args,
    )
}

fn cmd_benchmark(a: &BenchmarkArgs, args: &[String]) -> Result<()> {
    let spec = model_spec(a.model, &a.training, a.k, a.katz_decay)?;
    repeated(&a.data, &a.common, &a.split, spec, a.repeats, "benchmark", args)
}

fn cmd_grid(a: &GridArgs, args: &[String]) -> Result<()> {
    let ds = load_data(&a.data)?;
    let cells: Vec<ModelSpec> = match a.model {
        ModelKind::Digae | ModelKind::Digae1l => {
            let base = train_config(&a.training, a.model, 0)?;
            DigaeGrid {
                learning_rates: a.lrs.clone(),
                hidden_dims: a.hiddens.clone(),
                alphas: a.alphas.clone(),
                betas: a.betas.clone(),
            }
            .cells(&base)
        }
        ModelKind::Svd | ModelKind::Randsvd => a
            .ks
            .iter()
            .map(|&k| model_spec(a.model, &a.training, k, 0.0))
            .collect::<Result<_>>()?,
        ModelKind::HopeKatz => a
            .ks
            .iter()
            .flat_map(|&k| a.katz_decays.iter().map(move |&d| (k, d)))
            .map(|(k, d)| model_spec(a.model, &a.training, k, d))
            .collect::<Result<_>>()?,
    };
    let grid = grid_search(&ds, &cells, a.repeats, a.common.seed, split_options(&a.split))?;
    let dir = &a.common.out;
    emit_reports(dir, "grid", &grid.cells)?;
    if matches!(grid.best_cell().spec, ModelSpec::Digae(_)) {
        write_heatmap_csv(&grid, create(dir, "heatmap.csv")?)?;
    }
    serde_json::to_writer_pretty(create(dir, "best.json")?, grid.best_cell())?;
    print!("best by validation AUC: ");
    print_report(grid.best_cell());
    println!("validation AUC spread {:.2} points", 100.0 * grid.val_auc_spread());
    write_manifest(
        dir,
        "grid",
        &ds,
        Some(grid.best_cell().model.as_str()),
        serde_json::to_value(&cells)?,
        (0..a.repeats as u64).map(|r| a.common.seed + r).collect(),
        args,
    )
}

fn cmd_wl(a: &WlArgs, args: &[String]) -> Result<()> {
    let ds = load_data(&a.data)?;
    let g = &ds.graph;
    let coloring = wl_refine_directed(g, 2 * g.node_count().max(1));
    let report = reduction_report(g);
    let mut w = csv::Writer::from_writer(create(&a.out, "wl.csv")?);
    w.write_record(["node", "source_color", "target_color"])?;
    for i in 0..g.node_count() {
        w.write_record([
            i.to_string(),
            coloring.source_colors[i].to_string(),
            coloring.target_colors[i].to_string(),
        ])?;
    }
    w.flush()?;
    serde_json::to_writer_pretty(create(&a.out, "wl.json")?, &report)?;
    println!(
        "iterations {}  source classes {}  target classes {}  reduction check = {}",
        coloring.iteration,
        coloring.source_class_count(),
        coloring.target_class_count(),
        report.holds
    );
    write_manifest(&a.out, "wl", &ds, None, serde_json::Value::Null, vec![], args)
}

/// Trains on every edge of the graph (no held-out split).
fn train_full(ds: &Dataset, cfg: &TrainConfig) -> Result<EncodingPair> {
    let out = train(&ds.graph, &ds.features, cfg)?;
    let op = build_operator(&add_self_loops(&ds.graph), cfg.alpha, cfg.beta)?;
    encode(&out.params, &op, &ds.features, &ds.features)
}

fn cmd_analytics(a: &AnalyticsArgs, args: &[String]) -> Result<()> {
    let ds = load_data(&a.data)?;
    let cfg = train_config(&a.training, a.model, a.common.seed)?;
    let z = train_full(&ds, &cfg)?;
    let scores = centrality_scores(&ds.graph)?;
    let norm = match a.magnitude {
        Norm::L1 => Magnitude::L1,
        Norm::L2 => Magnitude::L2,
        Norm::Max => Magnitude::Max,
    };
    let table = magnitude_correlations(&z, &scores, norm)?;
    write_correlations_csv(&table, create(&a.common.out, "correlations.csv")?)?;
    write_correlations_csv(&table, std::io::stdout().lock())?;
    write_manifest(
        &a.common.out,
        "analytics",
        &ds,
        Some(ModelSpec::Digae(cfg.clone()).name()),
        serde_json::to_value(&cfg)?,
        vec![a.common.seed],
        args,
    )
}

fn parse_pairs(pairs: &[String]) -> Result<Vec<(f64, f64)>> {
    pairs
        .iter()
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| Error::InvalidConfig(format!("expected alpha:beta, got {p:?}")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad exponent {s:?}")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

fn cmd_spectrum(a: &SpectrumArgs, args: &[String]) -> Result<()> {
    let ds = load_data(&a.data)?;
    let pairs = parse_pairs(&a.pairs)?;
    let spectra = spectrum_study(&add_self_loops(&ds.graph), &pairs, a.top)?;
    write_spectrum_csv(&spectra, create(&a.common.out, "spectrum.csv")?)?;
    for s in &spectra {
        println!(
            "alpha {} beta {}: largest singular value {:.6}",
            s.alpha,
            s.beta,
            s.singular_values.first().copied().unwrap_or(0.0)
        );
    }
    write_manifest(
        &a.common.out,
        "spectrum",
        &ds,
        None,
        serde_json::json!({ "pairs": pairs, "top": a.top }),
        vec![],
        args,
    )
}

fn cmd_export(a: &ExportArgs, args: &[String]) -> Result<()> {
    let ds = load_data(&a.data)?;
    let cfg = train_config(&a.training, a.model, a.common.seed)?;
    let z = train_full(&ds, &cfg)?;
    write_embeddings_csv(&z, create(&a.common.out, "embeddings.csv")?)?;
    write_manifest(
        &a.common.out,
        "export-embeddings",
        &ds,
        Some(ModelSpec::Digae(cfg.clone()).name()),
        serde_json::to_value(&cfg)?,
        vec![a.common.seed],
        args,
    )
}

/// Replaces the value of `--out` (or appends one) in a recorded argv.
fn with_out(args: &[String], out: &Path) -> Vec<String> {
    let mut res = Vec::with_capacity(args.len() + 2);
    let mut it = args.iter();
    let mut replaced = false;
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
            res.push(a.clone());
            res.push(out.to_string_lossy().into_owned());
            replaced = true;
        } else if a.starts_with("--out=") {
            res.push(format!("--out={}", out.to_string_lossy()));
            replaced = true;
        } else {
            res.push(a.clone());
        }
    }
    if !replaced {
        res.push("--out".into());
        res.push(out.to_string_lossy().into_owned());
    }
    res
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let manifest: RunManifest = serde_json::from_reader(File::open(&a.manifest)?)?;
    if manifest.args.first().map(String::as_str) == Some("replay") {
        return Err(Error::InvalidConfig("a replay manifest cannot be replayed".into()));
    }
    let args = with_out(&manifest.args, &a.out);
    let mut argv = vec!["digae".to_string()];
    argv.extend(args.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    dispatch(cli.command, &args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["digae", "train", "--bogus"]), 1);
        assert_eq!(run(["digae"]), 1);
        assert_eq!(run(["digae", "--help"]), 0);
    }

    #[test]
    fn missing_dataset_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let code = run([
            "digae",
            "svd-baseline",
            "--dataset",
            "nope",
            "--data-root",
            dir.path().to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn out_flag_is_rewritten() {
        let args: Vec<String> = ["train", "--out", "a", "--seed", "1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(with_out(&args, Path::new("b")), ["train", "--out", "b", "--seed", "1"]);
        let bare: Vec<String> = vec!["wl".into()];
        assert_eq!(with_out(&bare, Path::new("b")), ["wl", "--out", "b"]);
    }

    #[test]
    fn pairs_parse() {
        assert_eq!(parse_pairs(&["0.3:0.5".to_string()]).unwrap(), vec![(0.3, 0.5)]);
        assert!(parse_pairs(&["0.3".to_string()]).is_err());
    }
}
