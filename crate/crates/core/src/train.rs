//! Full-batch training: BCE reconstruction loss, Adam, Glorot init.

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{add_self_loops, build_operator, DirectedGraph, PropagationOperator};
use crate::linalg::kernels::bce_with_logits;
use crate::linalg::{FeatureMatrix, Matrix, Tape};
use crate::model::{record_encode, Dims, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub alpha: f64,
    pub beta: f64,
    pub depth: usize,
    pub seed: u64,
    /// Negatives per positive in each epoch.
    pub negative_ratio: f64,
    /// Draw fresh negatives every epoch; otherwise draw once up front.
    pub resample_negatives: bool,
    pub shared_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 200,
            hidden_dim: 64,
            latent_dim: 32,
            alpha: 0.5,
            beta: 0.5,
            depth: 2,
            seed: 0,
            negative_ratio: 1.0,
            resample_negatives: true,
            shared_weights: false,
        }
    }
}

impl TrainConfig {
    /// Hidden width `d` with latent `d/2`.
    pub fn with_hidden(mut self, d: usize) -> Self {
        self.hidden_dim = d;
        self.latent_dim = (d / 2).max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be a non-negative number, got {}",
                self.learning_rate
            )));
        }
        if self.hidden_dim == 0 || self.latent_dim == 0 {
            return Err(Error::InvalidConfig("dimensions must be positive".into()));
        }
        if self.depth != 1 && self.depth != 2 {
            return Err(Error::InvalidConfig(format!("depth must be 1 or 2, got {}", self.depth)));
        }
        if !(self.negative_ratio > 0.0) || !self.negative_ratio.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "negative ratio must be positive, got {}",
                self.negative_ratio
            )));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::NonFiniteExponent {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        Ok(())
    }

    pub fn dims(&self, input: usize) -> Dims {
        Dims {
            input,
            hidden: self.hidden_dim,
            latent: self.latent_dim,
        }
    }
}

/// Adam moments for a fixed list of parameter shapes.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(shapes: &[(usize, usize)]) -> Self {
        let zeros: Vec<Matrix> = shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One bias-corrected update of every parameter in place.
    pub fn update(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                op: "AdamState::update",
                detail: format!(
                    "{} moments, {} params, {} grads",
                    self.m.len(),
                    params.len(),
                    grads.len()
                ),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for k in 0..self.m.len() {
            let p = &mut *params[k];
            let g = grads[k];
            p.check_same_shape("AdamState::update", g)?;
            p.check_same_shape("AdamState::update", &self.m[k])?;
            let m = self.m[k].as_mut_slice();
            let v = self.v[k].as_mut_slice();
            for (((w, &gi), mi), vi) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Mean binary cross-entropy of probabilities against 0/1 labels.
///
/// Probabilities are mapped back to logits (clamped away from 0 and 1) and
/// evaluated in the stable logit form.
pub fn bce_loss(predicted: &[f64], labels: &[f64]) -> Result<f64> {
    const CLAMP: f64 = 1e-15;
    let logits: Vec<f64> = predicted
        .iter()
        .map(|&p| {
            let p = p.clamp(CLAMP, 1.0 - CLAMP);
            (p / (1.0 - p)).ln()
        })
        .collect();
    bce_with_logits(&logits, labels)
}

/// Glorot-uniform matrix with bound `sqrt(6 / (rows + cols))`.
pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

pub fn init_params(cfg: &TrainConfig, input_dim: usize, seed: u64) -> Result<ModelParams> {
    let dims = cfg.dims(input_dim);
    let shapes = ModelParams::layer_shapes(cfg.depth, dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_s: Vec<Matrix> = shapes.iter().map(|&(r, c)| glorot_uniform(r, c, &mut rng)).collect();
    let w_t: Vec<Matrix> = if cfg.shared_weights {
        w_s.clone()
    } else {
        shapes.iter().map(|&(r, c)| glorot_uniform(r, c, &mut rng)).collect()
    };
    Ok(ModelParams {
        w_s,
        w_t,
        alpha: cfg.alpha,
        beta: cfg.beta,
        depth: cfg.depth,
        dims,
        shared_weights: cfg.shared_weights,
    })
}

/// `count` uniform pairs `(i, j)`, `i ≠ j`, with `(i, j) ∉ exclude`.
pub fn sample_negatives(
    n: usize,
    count: usize,
    exclude: &HashSet<(usize, usize)>,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, usize)>> {
    let available = (n * n.saturating_sub(1)).saturating_sub(exclude.iter().filter(|(i, j)| i != j).count());
    if count > 0 && available == 0 {
        return Err(Error::GraphTooSmall(format!(
            "no non-edges left to sample among {n} nodes"
        )));
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j && !exclude.contains(&(i, j)) {
            out.push((i, j));
        }
    }
    Ok(out)
}

/// Loss of `params` on fixed positive and negative pairs, with gradients
/// ordered as [`ModelParams::trainable`].
pub fn loss_and_gradients(
    params: &ModelParams,
    op: &PropagationOperator,
    features: &FeatureMatrix,
    positives: &[(usize, usize)],
    negatives: &[(usize, usize)],
) -> Result<(f64, Vec<Matrix>)> {
    let mut tape = Tape::new();
    let (vars, zs, zt) = record_encode(&mut tape, params, op, features, features)?;
    let mut pairs = Vec::with_capacity(positives.len() + negatives.len());
    pairs.extend_from_slice(positives);
    pairs.extend_from_slice(negatives);
    let mut labels = vec![1.0; positives.len()];
    labels.resize(pairs.len(), 0.0);
    let logits = tape.rowdot(zs, zt, pairs)?;
    let loss = tape.bce_with_logits(logits, labels)?;
    let value = tape.value(loss).get(0, 0);
    let grads = tape.backward(loss, 1.0)?;
    let out = vars
        .trainable(params.shared_weights)
        .into_iter()
        .map(|v| {
            grads
                .get(v)
                .cloned()
                .ok_or_else(|| Error::Tape(format!("no gradient for parameter {}", v.index())))
        })
        .collect::<Result<Vec<Matrix>>>()?;
    Ok((value, out))
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: ModelParams,
    /// Loss before each epoch's update, one entry per epoch.
    pub loss_trace: Vec<f64>,
}

/// Trains on the raw training graph; self-loops are added for propagation
/// and the original edges are the positive pairs.
pub fn train(g_train: &DirectedGraph, features: &FeatureMatrix, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let positives: Vec<(usize, usize)> = g_train.edge_pairs().filter(|(i, j)| i != j).collect();
    if positives.is_empty() {
        return Err(Error::EmptyInput("training edges"));
    }
    let n = g_train.node_count();
    if features.rows() != n {
        return Err(Error::DimensionMismatch {
            op: "train",
            detail: format!("{} feature rows for {n} nodes", features.rows()),
        });
    }
    let op = build_operator(&add_self_loops(g_train), cfg.alpha, cfg.beta)?;
    let mut params = init_params(cfg, features.cols(), cfg.seed)?;
    let exclude: HashSet<(usize, usize)> = positives.iter().copied().collect();
    let n_neg = ((positives.len() as f64) * cfg.negative_ratio).round().max(1.0) as usize;
    // Separate stream from initialization so the two stay independent.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);

    let shapes: Vec<(usize, usize)> = params.trainable().iter().map(|m| m.shape()).collect();
    let mut adam = AdamState::new(&shapes);
    let mut negatives = sample_negatives(n, n_neg, &exclude, &mut rng)?;
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if cfg.resample_negatives && epoch > 0 {
            negatives = sample_negatives(n, n_neg, &exclude, &mut rng)?;
        }
        let (loss, grads) = loss_and_gradients(&params, &op, features, &positives, &negatives)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(loss));
        }
        loss_trace.push(loss);
        let grad_refs: Vec<&Matrix> = grads.iter().collect();
        adam.update(&mut params.trainable_mut(), &grad_refs, cfg.learning_rate)?;
        params.sync_shared();
        log::debug!("epoch {epoch}: loss {loss:.6}");
    }
    Ok(TrainOutput { params, loss_trace })
}

/// CSV with header `epoch,loss`.
pub fn write_loss_trace(trace: &[f64], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epoch", "loss"])?;
    for (e, l) in trace.iter().enumerate() {
        out.write_record([e.to_string(), format!("{l:e}")])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bowtie_graph;

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            hidden_dim: 4,
            latent_dim: 2,
            epochs: 200,
            learning_rate: 0.01,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn bce_loss_examples() {
        assert!((bce_loss(&[0.5, 0.5], &[1.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(bce_loss(&[1.0, 0.0], &[1.0, 0.0]).unwrap() < 1e-12);
        let l = bce_loss(&[0.9, 0.2], &[1.0, 0.0]).unwrap();
        assert!((l + (0.9f64.ln() + 0.8f64.ln()) / 2.0).abs() < 1e-12);
        assert!(bce_loss(&[], &[]).is_err());
    }

    #[test]
    fn glorot_bound_and_determinism() {
        let cfg = TrainConfig {
            depth: 1,
            latent_dim: 4,
            ..small_cfg()
        };
        let a = init_params(&cfg, 4, 7).unwrap();
        let b = init_params(&cfg, 4, 7).unwrap();
        assert_eq!(a, b);
        let bound = (6.0f64 / 8.0).sqrt();
        assert!(a.w_s[0].as_slice().iter().all(|v| v.abs() <= bound));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let big = glorot_uniform(100, 100, &mut rng);
        assert!((big.sum() / 1e4).abs() < 0.01);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        // With bias correction the first step is lr·g/(|g| + ε).
        let mut adam = AdamState::new(&[(1, 2)]);
        let mut w = Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let g = Matrix::from_rows(&[vec![0.5, -2.0]]).unwrap();
        adam.update(&mut [&mut w], &[&g], 0.1).unwrap();
        let expect0 = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
        let expect1 = -1.0 + 0.1 * 2.0 / (2.0 + 1e-8);
        assert!((w.get(0, 0) - expect0).abs() < 1e-12);
        assert!((w.get(0, 1) - expect1).abs() < 1e-12);
    }

    #[test]
    fn bowtie_loss_decreases() {
        let g = bowtie_graph();
        let out = train(&g, &FeatureMatrix::identity(6), &small_cfg()).unwrap();
        assert_eq!(out.loss_trace.len(), 200);
        assert!(out.loss_trace.last().unwrap() < &out.loss_trace[0]);
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let g = bowtie_graph();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 5,
            resample_negatives: false,
            ..small_cfg()
        };
        let out = train(&g, &FeatureMatrix::identity(6), &cfg).unwrap();
        assert_eq!(out.params, init_params(&cfg, 6, cfg.seed).unwrap());
        assert!(out.loss_trace.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn equal_seeds_give_identical_runs() {
        let g = bowtie_graph();
        let cfg = TrainConfig {
            epochs: 20,
            ..small_cfg()
        };
        let a = train(&g, &FeatureMatrix::identity(6), &cfg).unwrap();
        let b = train(&g, &FeatureMatrix::identity(6), &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn edgeless_graph_is_rejected() {
        let g = DirectedGraph::from_pairs(3, []).unwrap();
        assert!(train(&g, &FeatureMatrix::identity(3), &small_cfg()).is_err());
    }

    #[test]
    fn loss_trace_csv() {
        let mut buf = Vec::new();
        write_loss_trace(&[0.5, 0.25], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,loss\n0,5e-1\n1,2.5e-1\n");
    }
}
