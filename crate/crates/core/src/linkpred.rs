//! Directed link-prediction benchmark: splits, metrics, repeated-split
//! experiments and grid search.

use std::collections::HashSet;
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{add_self_loops, build_operator, DirectedGraph};
use crate::model::{decode_logits, encode, EncodingPair};
use crate::spectral::{hope_embeddings, svd_link_embeddings, SvdMethod};
use crate::train::{train, TrainConfig};

pub const TEST_FRACTION: f64 = 0.10;
pub const VAL_FRACTION: f64 = 0.05;
pub const MIN_EDGES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Also reject `(i, j)` as a negative when `(j, i)` is an edge.
    pub exclude_reciprocal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub node_count: usize,
    pub train_edges: Vec<(usize, usize)>,
    pub val_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
    pub seed: u64,
}

impl SplitSpec {
    /// Graph on the training edges only.
    pub fn train_graph(&self) -> Result<DirectedGraph> {
        DirectedGraph::from_pairs(self.node_count, self.train_edges.iter().copied())
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// `(test, validation)` positive counts for `m` edges.
pub fn split_sizes(m: usize) -> (usize, usize) {
    (
        round_half_up(TEST_FRACTION * m as f64),
        round_half_up(VAL_FRACTION * m as f64),
    )
}

pub fn make_split(g: &DirectedGraph, seed: u64) -> Result<SplitSpec> {
    make_split_with(g, seed, SplitOptions::default())
}

/// Uniformly removes 10% of the edges for testing and 5% for validation,
/// and pairs each held-out set with as many sampled non-edges.
pub fn make_split_with(g: &DirectedGraph, seed: u64, opts: SplitOptions) -> Result<SplitSpec> {
    let mut edges: Vec<(usize, usize)> = g.edge_pairs().filter(|(i, j)| i != j).collect();
    let m = edges.len();
    if m < MIN_EDGES {
        return Err(Error::GraphTooSmall(format!(
            "{m} edges, at least {MIN_EDGES} needed for a split"
        )));
    }
    let n = g.node_count();
    let (n_test, n_val) = split_sizes(m);
    let edge_set: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let forbidden = |i: usize, j: usize| {
        i == j || edge_set.contains(&(i, j)) || (opts.exclude_reciprocal && edge_set.contains(&(j, i)))
    };
    let candidates = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !forbidden(i, j))
        .take(n_test + n_val)
        .count();
    if candidates < n_test + n_val {
        return Err(Error::GraphTooSmall(format!(
            "only {candidates} non-edges for {} negatives",
            n_test + n_val
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);
    let test_pos = edges[..n_test].to_vec();
    let val_pos = edges[n_test..n_test + n_val].to_vec();
    let mut train_edges = edges[n_test + n_val..].to_vec();
    train_edges.sort_unstable();

    let mut taken: HashSet<(usize, usize)> = HashSet::new();
    let mut draw = |count: usize, rng: &mut ChaCha8Rng| {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if !forbidden(i, j) && taken.insert((i, j)) {
                out.push((i, j));
            }
        }
        out
    };
    let test_neg = draw(n_test, &mut rng);
    let val_neg = draw(n_val, &mut rng);
    Ok(SplitSpec {
        node_count: n,
        train_edges,
        val_pos,
        val_neg,
        test_pos,
        test_neg,
        seed,
    })
}

fn check_sides(pos: &[f64], neg: &[f64]) -> Result<()> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptyInput("ranking metric needs positive and negative scores"));
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(Error::InvalidConfig("NaN score".into()));
    }
    Ok(())
}

/// Mann–Whitney AUC: `P(pos > neg) + ½ P(pos = neg)`, via midranks.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_sides(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * all[i..=j].iter().filter(|x| x.1).count() as f64;
        i = j + 1;
    }
    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Average precision over the descending ranking; negatives go first among ties.
pub fn average_precision(pos: &[f64], neg: &[f64]) -> Result<f64> {
    check_sides(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (k, &(_, is_pos)) in all.iter().enumerate() {
        if is_pos {
            hits += 1;
            total += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(total / pos.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub auc: f64,
    pub ap: f64,
}

/// Scores pairs by their decoder logits; σ is monotone so rankings match
/// the probabilities while avoiding saturation ties.
pub fn evaluate(z: &EncodingPair, pos: &[(usize, usize)], neg: &[(usize, usize)]) -> Result<Scores> {
    let sp = decode_logits(z, pos)?;
    let sn = decode_logits(z, neg)?;
    Ok(Scores {
        auc: auc(&sp, &sn)?,
        ap: average_precision(&sp, &sn)?,
    })
}

/// What to fit on each split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Digae(TrainConfig),
    Svd { k: usize, method: SvdMethod },
    HopeKatz { k: usize, katz_decay: f64, method: SvdMethod },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Digae(cfg) if cfg.depth == 1 => "digae-1l",
            ModelSpec::Digae(_) => "digae",
            ModelSpec::Svd {
                method: SvdMethod::Randomized,
                ..
            } => "randsvd",
            ModelSpec::Svd { .. } => "svd",
            ModelSpec::HopeKatz { .. } => "hope-katz",
        }
    }

    /// Fits on `g_train` and returns the embeddings used for scoring.
    pub fn fit(&self, ds: &Dataset, g_train: &DirectedGraph, seed: u64) -> Result<EncodingPair> {
        match self {
            ModelSpec::Digae(cfg) => {
                let cfg = TrainConfig {
                    seed: cfg.seed.wrapping_add(seed),
                    ..cfg.clone()
                };
                let out = train(g_train, &ds.features, &cfg)?;
                let op = build_operator(&add_self_loops(g_train), cfg.alpha, cfg.beta)?;
                encode(&out.params, &op, &ds.features, &ds.features)
            }
            ModelSpec::Svd { k, method } => svd_link_embeddings(g_train, *k, *method, seed),
            ModelSpec::HopeKatz { k, katz_decay, method } => {
                hope_embeddings(g_train, *k, *katz_decay, *method, seed)
            }
        }
    }

    /// `(name, value)` columns describing the configuration, fixed order.
    pub fn config_columns(&self) -> Vec<(&'static str, String)> {
        let (mut lr, mut hidden, mut latent, mut epochs, mut alpha, mut beta) =
            (String::new(), String::new(), String::new(), String::new(), String::new(), String::new());
        let (mut k, mut decay) = (String::new(), String::new());
        match self {
            ModelSpec::Digae(cfg) => {
                lr = cfg.learning_rate.to_string();
                hidden = cfg.hidden_dim.to_string();
                latent = cfg.latent_dim.to_string();
                epochs = cfg.epochs.to_string();
                alpha = cfg.alpha.to_string();
                beta = cfg.beta.to_string();
            }
            ModelSpec::Svd { k: kk, .. } => k = kk.to_string(),
            ModelSpec::HopeKatz { k: kk, katz_decay, .. } => {
                k = kk.to_string();
                decay = katz_decay.to_string();
            }
        }
        vec![
            ("alpha", alpha),
            ("beta", beta),
            ("lr", lr),
            ("hidden", hidden),
            ("latent", latent),
            ("epochs", epochs),
            ("k", k),
            ("katz_decay", decay),
        ]
    }
}

/// One split's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub seed: u64,
    pub auc: f64,
    pub ap: f64,
    pub val_auc: f64,
    pub val_ap: f64,
    /// Training plus evaluation, excluding data loading.
    pub wall_time_seconds: f64,
}

/// Splits with `seed`, fits, and scores validation and test pairs.
pub fn run_trial(ds: &Dataset, spec: &ModelSpec, seed: u64, opts: SplitOptions) -> Result<MetricReport> {
    let split = make_split_with(&ds.graph, seed, opts)?;
    let g_train = split.train_graph()?;
    let start = Instant::now();
    let z = spec.fit(ds, &g_train, seed)?;
    let test = evaluate(&z, &split.test_pos, &split.test_neg)?;
    let val = evaluate(&z, &split.val_pos, &split.val_neg)?;
    Ok(MetricReport {
        seed,
        auc: test.auc,
        ap: test.ap,
        val_auc: val.auc,
        val_ap: val.ap,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mean and sample standard deviation; a single value has deviation 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn of(xs: &[f64]) -> Self {
        let (mean, std) = mean_std(xs);
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub model: String,
    pub spec: ModelSpec,
    pub split_options: SplitOptions,
    pub trials: Vec<MetricReport>,
    pub auc: Summary,
    pub ap: Summary,
    pub val_auc: Summary,
    pub val_ap: Summary,
    pub wall_time_seconds: Summary,
}

impl ExperimentReport {
    fn from_trials(ds: &Dataset, spec: &ModelSpec, opts: SplitOptions, trials: Vec<MetricReport>) -> Self {
        let col = |f: fn(&MetricReport) -> f64| trials.iter().map(f).collect::<Vec<f64>>();
        Self {
            dataset: ds.name.clone(),
            model: spec.name().to_string(),
            spec: spec.clone(),
            split_options: opts,
            auc: Summary::of(&col(|t| t.auc)),
            ap: Summary::of(&col(|t| t.ap)),
            val_auc: Summary::of(&col(|t| t.val_auc)),
            val_ap: Summary::of(&col(|t| t.val_ap)),
            wall_time_seconds: Summary::of(&col(|t| t.wall_time_seconds)),
            trials,
        }
    }
}

/// Repeats [`run_trial`] with seeds `base_seed + r`, `r < n_repeats`, in parallel.
pub fn run_experiment(
    ds: &Dataset,
    spec: &ModelSpec,
    n_repeats: usize,
    base_seed: u64,
    opts: SplitOptions,
) -> Result<ExperimentReport> {
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("at least one repeat is needed".into()));
    }
    let trials = (0..n_repeats as u64)
        .into_par_iter()
        .map(|r| run_trial(ds, spec, base_seed + r, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::from_trials(ds, spec, opts, trials))
}

/// Axes of a DiGAE grid; every combination becomes one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigaeGrid {
    pub learning_rates: Vec<f64>,
    pub hidden_dims: Vec<usize>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl Default for DigaeGrid {
    fn default() -> Self {
        let exps = vec![0.0, 0.2, 0.4, 0.6, 0.8];
        Self {
            learning_rates: vec![0.005, 0.01],
            hidden_dims: vec![32, 64],
            alphas: exps.clone(),
            betas: exps,
        }
    }
}

impl DigaeGrid {
    pub fn cells(&self, base: &TrainConfig) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for &lr in &self.learning_rates {
            for &d in &self.hidden_dims {
                for &alpha in &self.alphas {
                    for &beta in &self.betas {
                        out.push(ModelSpec::Digae(TrainConfig {
                            learning_rate: lr,
                            alpha,
                            beta,
                            ..base.clone().with_hidden(d)
                        }));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<ExperimentReport>,
    /// Index of the cell with the highest mean validation AUC (first on ties).
    pub best: usize,
}

impl GridReport {
    pub fn best_cell(&self) -> &ExperimentReport {
        &self.cells[self.best]
    }

    /// Largest minus smallest mean validation AUC.
    pub fn val_auc_spread(&self) -> f64 {
        let vals = self.cells.iter().map(|c| c.val_auc.mean);
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

/// Evaluates every cell on the same `n_repeats` splits and selects by mean
/// validation AUC. Cells and repeats run in parallel.
pub fn grid_search(
    ds: &Dataset,
    cells: &[ModelSpec],
    n_repeats: usize,
    base_seed: u64,
    opts: SplitOptions,
) -> Result<GridReport> {
    if cells.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("at least one repeat is needed".into()));
    }
    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..n_repeats as u64).map(move |r| (c, r)))
        .collect();
    let results = tasks
        .par_iter()
        .map(|&(c, r)| run_trial(ds, &cells[c], base_seed + r, opts))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<ExperimentReport> = results
        .chunks(n_repeats)
        .zip(cells)
        .map(|(trials, spec)| ExperimentReport::from_trials(ds, spec, opts, trials.to_vec()))
        .collect();
    let mut best = 0;
    for (i, r) in reports.iter().enumerate() {
        if r.val_auc.mean > reports[best].val_auc.mean {
            best = i;
        }
    }
    Ok(GridReport { cells: reports, best })
}

const METRIC_COLUMNS: [&str; 9] = [
    "repeats",
    "auc_mean",
    "auc_std",
    "ap_mean",
    "ap_std",
    "val_auc_mean",
    "val_auc_std",
    "val_ap_mean",
    "val_ap_std",
];

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

/// Result rows: `dataset,model,<config columns>,repeats,<metrics>`.
///
/// Metrics are fractions in `[0, 1]`. Timings live in
/// [`write_timing_csv`] so this file is reproducible byte for byte.
pub fn write_results_csv(reports: &[ExperimentReport], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = reports.first() else {
        out.flush()?;
        return Ok(());
    };
    let mut header: Vec<String> = vec!["dataset".into(), "model".into()];
    header.extend(first.spec.config_columns().into_iter().map(|(k, _)| k.to_string()));
    header.extend(METRIC_COLUMNS.iter().map(|s| s.to_string()));
    out.write_record(&header)?;
    for r in reports {
        let mut row = vec![r.dataset.clone(), r.model.clone()];
        row.extend(r.spec.config_columns().into_iter().map(|(_, v)| v));
        row.push(r.trials.len().to_string());
        for s in [r.auc, r.ap, r.val_auc, r.val_ap] {
            row.push(fmt(s.mean));
            row.push(fmt(s.std));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// `dataset,model,<config columns>,time_mean,time_std` in seconds.
pub fn write_timing_csv(reports: &[ExperimentReport], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = reports.first() else {
        out.flush()?;
        return Ok(());
    };
    let mut header: Vec<String> = vec!["dataset".into(), "model".into()];
    header.extend(first.spec.config_columns().into_iter().map(|(k, _)| k.to_string()));
    header.extend(["time_mean".to_string(), "time_std".to_string()]);
    out.write_record(&header)?;
    for r in reports {
        let mut row = vec![r.dataset.clone(), r.model.clone()];
        row.extend(r.spec.config_columns().into_iter().map(|(_, v)| v));
        row.push(fmt(r.wall_time_seconds.mean));
        row.push(fmt(r.wall_time_seconds.std));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// α × β matrix of mean validation AUC for DiGAE cells sharing the best
/// cell's learning rate and hidden width. First row and column hold the
/// β and α values.
pub fn write_heatmap_csv(grid: &GridReport, w: impl Write) -> Result<()> {
    let ModelSpec::Digae(best) = &grid.best_cell().spec else {
        return Err(Error::InvalidConfig("heatmap needs a DiGAE grid".into()));
    };
    let cells: Vec<(&TrainConfig, f64)> = grid
        .cells
        .iter()
        .filter_map(|c| match &c.spec {
            ModelSpec::Digae(cfg)
                if cfg.learning_rate == best.learning_rate && cfg.hidden_dim == best.hidden_dim =>
            {
                Some((cfg, c.val_auc.mean))
            }
            _ => None,
        })
        .collect();
    let mut alphas: Vec<f64> = cells.iter().map(|(c, _)| c.alpha).collect();
    let mut betas: Vec<f64> = cells.iter().map(|(c, _)| c.beta).collect();
    for v in [&mut alphas, &mut betas] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["alpha\\beta".to_string()];
    header.extend(betas.iter().map(|b| b.to_string()));
    out.write_record(&header)?;
    for &a in &alphas {
        let mut row = vec![a.to_string()];
        for &b in &betas {
            let v = cells
                .iter()
                .find(|(c, _)| c.alpha == a && c.beta == b)
                .map(|(_, v)| fmt(*v))
                .unwrap_or_default();
            row.push(v);
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(auc(&[0.7, 0.3], &[0.5, 0.1]).unwrap(), 0.75);
        assert!(auc(&[], &[0.1]).is_err());
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8], &[0.1, 0.2]).unwrap(), 1.0);
        let alt = average_precision(&[0.9, 0.7], &[0.8, 0.6]).unwrap();
        assert!((alt - (0.5 + 2.0 / 3.0 * 0.5)).abs() < 1e-15);
        // Both positives ranked last among four: (1/3 + 2/4) / 2.
        let last = average_precision(&[0.1, 0.2], &[0.8, 0.9]).unwrap();
        assert!((last - 5.0 / 12.0).abs() < 1e-15);
        // Ties count against the positives.
        let tied = average_precision(&[0.5], &[0.5]).unwrap();
        assert_eq!(tied, 0.5);
        assert!(average_precision(&[0.1], &[]).is_err());
    }

    #[test]
    fn split_counts_follow_rounding() {
        assert_eq!(split_sizes(8416), (842, 421));
        assert_eq!(split_sizes(4715), (472, 236));
        assert_eq!(split_sizes(25), (3, 1));
    }

    #[test]
    fn split_partitions_edges() {
        let g = crate::dataset::random_digraph(30, 0.1, 5).unwrap();
        let s = make_split(&g, 3).unwrap();
        let mut all: Vec<(usize, usize)> = s
            .train_edges
            .iter()
            .chain(&s.val_pos)
            .chain(&s.test_pos)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, g.edge_pairs().collect::<Vec<_>>());
        assert_eq!(s.test_neg.len(), s.test_pos.len());
        assert_eq!(s.val_neg.len(), s.val_pos.len());
        assert!(s.test_neg.iter().chain(&s.val_neg).all(|&(i, j)| i != j && !g.has_edge(i, j)));
        assert_eq!(make_split(&g, 3).unwrap(), s);
    }

    #[test]
    fn tiny_graph_is_rejected() {
        let g = crate::fixtures::bowtie_graph();
        assert!(matches!(make_split(&g, 0), Err(Error::GraphTooSmall(_))));
    }

    #[test]
    fn single_repeat_has_zero_std() {
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn default_grid_has_one_hundred_cells() {
        let grid = DigaeGrid::default();
        assert_eq!(grid.cells(&TrainConfig::default()).len(), 100);
        let one = DigaeGrid {
            learning_rates: vec![0.01],
            hidden_dims: vec![32],
            ..DigaeGrid::default()
        };
        assert_eq!(one.cells(&TrainConfig::default()).len(), 25);
    }
}
