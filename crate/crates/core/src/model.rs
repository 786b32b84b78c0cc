//! The directed graph auto-encoder.
//!
//! Each node carries a source encoding `s_i` and a target encoding `t_i`.
//! One directed convolution maps `(S, T)` to `(Â·T·W_T, Âᵀ·S·W_S)`. The
//! two-layer model stacks two of them with a ReLU in between:
//!
//! ```text
//! Z_S = Â · ReLU(Âᵀ · S⁰ · W_S⁰) · W_T¹
//! Z_T = Âᵀ · ReLU(Â · T⁰ · W_T⁰) · W_S¹
//! ```
//!
//! and the single-layer model uses `Z_S = Â·T⁰·W_T⁰`, `Z_T = Âᵀ·S⁰·W_S⁰`.
//! The decoder scores a directed pair `(i, j)` as `σ(z_s,i · z_t,j)`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, DirectedGraph, PropagationOperator};
use crate::linalg::kernels::{pairwise_rowdot, relu, sigmoid_scalar};
use crate::linalg::{dot, FeatureMatrix, Matrix, Tape, Var};

/// Source and target encodings, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingPair {
    pub s: Matrix,
    pub t: Matrix,
}

impl EncodingPair {
    pub fn new(s: Matrix, t: Matrix) -> Result<Self> {
        if s.shape() != t.shape() {
            return Err(Error::DimensionMismatch {
                op: "EncodingPair::new",
                detail: format!(
                    "source {}x{} vs target {}x{}",
                    s.rows(),
                    s.cols(),
                    t.rows(),
                    t.cols()
                ),
            });
        }
        Ok(Self { s, t })
    }

    pub fn node_count(&self) -> usize {
        self.s.rows()
    }

    pub fn dim(&self) -> usize {
        self.s.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub input: usize,
    pub hidden: usize,
    pub latent: usize,
}

/// Learnable weights plus the degree exponents.
///
/// `w_s[l]` and `w_t[l]` are the layer-`l` transforms applied to source and
/// target encodings before propagation. With `shared_weights` the target
/// list mirrors the source list.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w_s: Vec<Matrix>,
    pub w_t: Vec<Matrix>,
    pub alpha: f64,
    pub beta: f64,
    pub depth: usize,
    pub dims: Dims,
    pub shared_weights: bool,
}

impl ModelParams {
    /// Expected `(rows, cols)` of each layer's weights.
    pub fn layer_shapes(depth: usize, dims: Dims) -> Result<Vec<(usize, usize)>> {
        if dims.input == 0 || dims.hidden == 0 || dims.latent == 0 {
            return Err(Error::InvalidConfig(format!("dimensions must be positive: {dims:?}")));
        }
        match depth {
            1 => Ok(vec![(dims.input, dims.latent)]),
            2 => Ok(vec![(dims.input, dims.hidden), (dims.hidden, dims.latent)]),
            d => Err(Error::InvalidConfig(format!("depth must be 1 or 2, got {d}"))),
        }
    }

    pub fn zeros(depth: usize, dims: Dims, alpha: f64, beta: f64) -> Result<Self> {
        let shapes = Self::layer_shapes(depth, dims)?;
        let w: Vec<Matrix> = shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect();
        Ok(Self {
            w_s: w.clone(),
            w_t: w,
            alpha,
            beta,
            depth,
            dims,
            shared_weights: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let shapes = Self::layer_shapes(self.depth, self.dims)?;
        if self.w_s.len() != shapes.len() || self.w_t.len() != shapes.len() {
            return Err(Error::InvalidConfig(format!(
                "depth {} needs {} weight matrices per role",
                self.depth,
                shapes.len()
            )));
        }
        for (l, &(r, c)) in shapes.iter().enumerate() {
            for w in [&self.w_s[l], &self.w_t[l]] {
                if w.shape() != (r, c) {
                    return Err(Error::DimensionMismatch {
                        op: "ModelParams",
                        detail: format!(
                            "layer {l} weight is {}x{}, expected {r}x{c}",
                            w.rows(),
                            w.cols()
                        ),
                    });
                }
            }
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::NonFiniteExponent {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        Ok(())
    }

    /// Flattened view used by the optimizer: source weights, then target
    /// weights unless shared.
    pub fn trainable(&self) -> Vec<&Matrix> {
        let mut out: Vec<&Matrix> = self.w_s.iter().collect();
        if !self.shared_weights {
            out.extend(self.w_t.iter());
        }
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut Matrix> {
        let shared = self.shared_weights;
        let mut out: Vec<&mut Matrix> = self.w_s.iter_mut().collect();
        if !shared {
            out.extend(self.w_t.iter_mut());
        }
        out
    }

    /// Re-establishes `w_t == w_s` after an update when weights are shared.
    pub fn sync_shared(&mut self) {
        if self.shared_weights {
            self.w_t = self.w_s.clone();
        }
    }
}

fn check_inputs(params: &ModelParams, op: &PropagationOperator, s0: &FeatureMatrix, t0: &FeatureMatrix) -> Result<()> {
    params.validate()?;
    for x in [s0, t0] {
        if x.rows() != op.node_count() || x.cols() != params.dims.input {
            return Err(Error::DimensionMismatch {
                op: "encode",
                detail: format!(
                    "input is {}x{}, expected {}x{}",
                    x.rows(),
                    x.cols(),
                    op.node_count(),
                    params.dims.input
                ),
            });
        }
    }
    Ok(())
}

/// Encoder forward pass.
pub fn encode(
    params: &ModelParams,
    op: &PropagationOperator,
    s0: &FeatureMatrix,
    t0: &FeatureMatrix,
) -> Result<EncodingPair> {
    check_inputs(params, op, s0, t0)?;
    match params.depth {
        1 => {
            let zs = op.apply(&t0.mul(&params.w_t[0])?)?;
            let zt = op.apply_transpose(&s0.mul(&params.w_s[0])?)?;
            EncodingPair::new(zs, zt)
        }
        _ => {
            let t1 = relu(&op.apply_transpose(&s0.mul(&params.w_s[0])?)?);
            let s1 = relu(&op.apply(&t0.mul(&params.w_t[0])?)?);
            let zs = op.apply(&t1.matmul(&params.w_t[1])?)?;
            let zt = op.apply_transpose(&s1.matmul(&params.w_s[1])?)?;
            EncodingPair::new(zs, zt)
        }
    }
}

/// Tape handles for the weights of one forward recording.
#[derive(Debug, Clone)]
pub struct ParamVars {
    pub w_s: Vec<Var>,
    pub w_t: Vec<Var>,
}

impl ParamVars {
    /// Handles in the same order as [`ModelParams::trainable`].
    pub fn trainable(&self, shared: bool) -> Vec<Var> {
        let mut out = self.w_s.clone();
        if !shared {
            out.extend(self.w_t.iter().copied());
        }
        out
    }
}

/// Records the encoder on `tape`; returns the weight handles and `(Z_S, Z_T)`.
pub fn record_encode<'a>(
    tape: &mut Tape<'a>,
    params: &ModelParams,
    op: &'a PropagationOperator,
    s0: &'a FeatureMatrix,
    t0: &'a FeatureMatrix,
) -> Result<(ParamVars, Var, Var)> {
    check_inputs(params, op, s0, t0)?;
    let w_s: Vec<Var> = params.w_s.iter().map(|w| tape.param(w.clone())).collect();
    let w_t: Vec<Var> = if params.shared_weights {
        w_s.clone()
    } else {
        params.w_t.iter().map(|w| tape.param(w.clone())).collect()
    };
    let (zs, zt) = match params.depth {
        1 => {
            let xt = tape.feature_mul(t0, w_t[0])?;
            let zs = tape.propagate(op, false, xt)?;
            let xs = tape.feature_mul(s0, w_s[0])?;
            let zt = tape.propagate(op, true, xs)?;
            (zs, zt)
        }
        _ => {
            let xs = tape.feature_mul(s0, w_s[0])?;
            let t1 = tape.propagate(op, true, xs)?;
            let t1 = tape.relu(t1)?;
            let xt = tape.feature_mul(t0, w_t[0])?;
            let s1 = tape.propagate(op, false, xt)?;
            let s1 = tape.relu(s1)?;
            let h_t = tape.matmul(t1, w_t[1])?;
            let zs = tape.propagate(op, false, h_t)?;
            let h_s = tape.matmul(s1, w_s[1])?;
            let zt = tape.propagate(op, true, h_s)?;
            (zs, zt)
        }
    };
    Ok((ParamVars { w_s, w_t }, zs, zt))
}

/// Logits `z_s,i · z_t,j`.
pub fn decode_logits(z: &EncodingPair, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    pairwise_rowdot(&z.s, &z.t, pairs)
}

/// Edge probabilities `σ(z_s,i · z_t,j)`; not symmetric in `(i, j)`.
pub fn decode_pairs(z: &EncodingPair, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    Ok(decode_logits(z, pairs)?
        .into_iter()
        .map(sigmoid_scalar)
        .collect())
}

// ---------------------------------------------------------------------------
// Node-local formulation

/// What node `i` sends after transforming and pre-scaling its encodings.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    /// Scaled `W_Sᵀ s_i`, delivered along out-edges.
    pub source_msg: Vec<f64>,
    /// Scaled `W_Tᵀ t_i`, delivered along in-edges.
    pub target_msg: Vec<f64>,
}

/// Layer constants shared by every node.
#[derive(Debug, Clone, Copy)]
pub struct LayerWeights<'a> {
    pub w_s: &'a Matrix,
    pub w_t: &'a Matrix,
    pub alpha: f64,
    pub beta: f64,
}

fn vec_mat(v: &[f64], w: &Matrix) -> Vec<f64> {
    (0..w.cols())
        .map(|c| v.iter().enumerate().map(|(r, &x)| x * w.get(r, c)).sum())
        .collect()
}

/// Transform and scale: `s ← W_Sᵀ s / deg⁺(i)^β`, `t ← W_Tᵀ t / deg⁻(i)^α`.
pub fn prepare_messages(
    s_i: &[f64],
    t_i: &[f64],
    deg_out: usize,
    deg_in: usize,
    layer: LayerWeights<'_>,
) -> Outgoing {
    let so = (deg_out as f64).powf(-layer.beta);
    let si = (deg_in as f64).powf(-layer.alpha);
    Outgoing {
        source_msg: vec_mat(s_i, layer.w_s).into_iter().map(|x| x * so).collect(),
        target_msg: vec_mat(t_i, layer.w_t).into_iter().map(|x| x * si).collect(),
    }
}

/// Sum the received messages and scale again.
///
/// `from_out` holds `(edge weight, target message)` from every `j ∈ Ñ⁺(i)`,
/// `from_in` holds `(edge weight, source message)` from every `j ∈ Ñ⁻(i)`.
pub fn aggregate_messages<'m>(
    deg_out: usize,
    deg_in: usize,
    width: usize,
    from_out: impl IntoIterator<Item = (f64, &'m [f64])>,
    from_in: impl IntoIterator<Item = (f64, &'m [f64])>,
    layer: LayerWeights<'_>,
) -> (Vec<f64>, Vec<f64>) {
    let mut s = vec![0.0; width];
    for (w, msg) in from_out {
        for (acc, &m) in s.iter_mut().zip(msg) {
            *acc += w * m;
        }
    }
    let mut t = vec![0.0; width];
    for (w, msg) in from_in {
        for (acc, &m) in t.iter_mut().zip(msg) {
            *acc += w * m;
        }
    }
    let so = (deg_out as f64).powf(-layer.beta);
    let si = (deg_in as f64).powf(-layer.alpha);
    s.iter_mut().for_each(|x| *x *= so);
    t.iter_mut().for_each(|x| *x *= si);
    (s, t)
}

/// `Ñ(i)` as `(neighbor, weight)`: the given list plus `(i, 1.0)` unless present.
fn with_self(i: usize, nbrs: &[usize], weights: &[f64]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = nbrs.iter().copied().zip(weights.iter().copied()).collect();
    if nbrs.binary_search(&i).is_err() {
        out.push((i, 1.0));
    }
    out
}

/// One directed convolution evaluated node by node with explicit mailboxes.
///
/// `g` is the raw graph; each node adds itself to its neighborhoods. Summed
/// over all nodes this equals `(Â·T·W_T, Âᵀ·S·W_S)`.
pub fn message_passing_layer(
    g: &DirectedGraph,
    enc: &EncodingPair,
    layer: LayerWeights<'_>,
) -> Result<EncodingPair> {
    let n = g.node_count();
    if enc.node_count() != n || layer.w_s.rows() != enc.s.cols() || layer.w_t.rows() != enc.t.cols() {
        return Err(Error::DimensionMismatch {
            op: "message_passing_layer",
            detail: format!(
                "{} nodes, encodings {}x{}, weights {}x{} / {}x{}",
                n,
                enc.s.rows(),
                enc.s.cols(),
                layer.w_s.rows(),
                layer.w_s.cols(),
                layer.w_t.rows(),
                layer.w_t.cols()
            ),
        });
    }
    let out_nbrs: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| with_self(i, g.out_neighbors(i), g.out_weights(i)))
        .collect();
    let in_nbrs: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| with_self(i, g.in_neighbors(i), g.in_weights(i)))
        .collect();

    let outgoing: Vec<Outgoing> = (0..n)
        .map(|i| prepare_messages(enc.s.row(i), enc.t.row(i), out_nbrs[i].len(), in_nbrs[i].len(), layer))
        .collect();

    // Deliver: source messages travel along out-edges, target messages
    // along in-edges (i.e. against the edge direction).
    let mut source_inbox: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
    let mut target_inbox: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
    for i in 0..n {
        for &(j, w) in &out_nbrs[i] {
            source_inbox[j].push((w, i));
        }
        for &(j, w) in &in_nbrs[i] {
            target_inbox[j].push((w, i));
        }
    }

    let width = layer.w_s.cols().max(layer.w_t.cols());
    let mut s = Matrix::zeros(n, layer.w_t.cols());
    let mut t = Matrix::zeros(n, layer.w_s.cols());
    for i in 0..n {
        let (si, ti) = aggregate_messages(
            out_nbrs[i].len(),
            in_nbrs[i].len(),
            width,
            target_inbox[i]
                .iter()
                .map(|&(w, from)| (w, outgoing[from].target_msg.as_slice())),
            source_inbox[i]
                .iter()
                .map(|&(w, from)| (w, outgoing[from].source_msg.as_slice())),
            layer,
        );
        s.row_mut(i).copy_from_slice(&si[..layer.w_t.cols()]);
        t.row_mut(i).copy_from_slice(&ti[..layer.w_s.cols()]);
    }
    EncodingPair::new(s, t)
}

/// Full encoder through [`message_passing_layer`], on the raw graph.
pub fn message_passing_encode(
    params: &ModelParams,
    g: &DirectedGraph,
    x0: &EncodingPair,
) -> Result<EncodingPair> {
    params.validate()?;
    let layer = |l: usize| LayerWeights {
        w_s: &params.w_s[l],
        w_t: &params.w_t[l],
        alpha: params.alpha,
        beta: params.beta,
    };
    let first = message_passing_layer(g, x0, layer(0))?;
    if params.depth == 1 {
        return Ok(first);
    }
    let hidden = EncodingPair::new(relu(&first.s), relu(&first.t))?;
    message_passing_layer(g, &hidden, layer(1))
}

// ---------------------------------------------------------------------------
// Block-structured 1-GNN on the bipartite representation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
        }
    }
}

/// The four `e × e` blocks of `W1 = diag(W1S, W1T)` and
/// `W2 = [[0, W2S], [W2T, 0]]`.
#[derive(Debug, Clone)]
pub struct BlockWeights {
    pub w1s: Matrix,
    pub w1t: Matrix,
    pub w2s: Matrix,
    pub w2t: Matrix,
}

impl BlockWeights {
    pub fn width(&self) -> usize {
        self.w1s.rows()
    }

    /// Assembles the full `2e × 2e` matrices.
    pub fn assemble(&self) -> Result<(Matrix, Matrix)> {
        let e = self.width();
        for w in [&self.w1s, &self.w1t, &self.w2s, &self.w2t] {
            if w.shape() != (e, e) {
                return Err(Error::DimensionMismatch {
                    op: "BlockWeights",
                    detail: format!("block is {}x{}, expected {e}x{e}", w.rows(), w.cols()),
                });
            }
        }
        let w1 = Matrix::from_fn(2 * e, 2 * e, |r, c| match (r < e, c < e) {
            (true, true) => self.w1s.get(r, c),
            (false, false) => self.w1t.get(r - e, c - e),
            _ => 0.0,
        });
        let w2 = Matrix::from_fn(2 * e, 2 * e, |r, c| match (r < e, c < e) {
            (true, false) => self.w2s.get(r, c - e),
            (false, true) => self.w2t.get(r - e, c),
            _ => 0.0,
        });
        Ok((w1, w2))
    }
}

/// One 1-GNN update `f'(v) = σ(f(v)·W1 + Σ_{w ∈ N(v)} f(w)·W2)` on the
/// bipartite graph, with the block-structured weights.
pub fn block_gnn_step(
    bipartite: &BipartiteGraph,
    f: &Matrix,
    weights: &BlockWeights,
    activation: Activation,
) -> Result<Matrix> {
    let (w1, w2) = weights.assemble()?;
    let g = bipartite.graph();
    if f.rows() != g.node_count() || f.cols() != w1.rows() {
        return Err(Error::DimensionMismatch {
            op: "block_gnn_step",
            detail: format!(
                "features {}x{} for {} nodes and width {}",
                f.rows(),
                f.cols(),
                g.node_count(),
                w1.rows()
            ),
        });
    }
    let own = f.matmul(&w1)?;
    let msgs = f.matmul(&w2)?;
    let mut out = own;
    for v in 0..g.node_count() {
        for &w in g.neighbors(v) {
            let src: Vec<f64> = msgs.row(w).to_vec();
            for (o, m) in out.row_mut(v).iter_mut().zip(src) {
                *o += m;
            }
        }
    }
    Ok(out.map(|x| activation.apply(x)))
}

/// Stacks `[s_i, 0]` for source copies and `[0, t_i]` for target copies.
pub fn bipartite_features(enc: &EncodingPair) -> Matrix {
    let (n, e) = enc.s.shape();
    Matrix::from_fn(2 * n, 2 * e, |v, c| match (v < n, c < e) {
        (true, true) => enc.s.get(v, c),
        (false, false) => enc.t.get(v - n, c - e),
        _ => 0.0,
    })
}

// ---------------------------------------------------------------------------
// Persistence

const MAGIC: &[u8; 8] = b"DIGAEPRM";
const FORMAT_VERSION: u64 = 1;

fn put_u64(w: &mut impl Write, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64(w: &mut impl Write, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Binary layout, all fields little-endian:
///
/// ```text
/// magic "DIGAEPRM" | version u64 | depth u64 | input u64 | hidden u64 |
/// latent u64 | shared u64 | alpha f64 | beta f64 |
/// per layer l: W_S^l, W_T^l, each as rows u64 | cols u64 | row-major f64s
/// ```
pub fn write_params(params: &ModelParams, w: &mut impl Write) -> Result<()> {
    params.validate()?;
    w.write_all(MAGIC)?;
    put_u64(w, FORMAT_VERSION)?;
    put_u64(w, params.depth as u64)?;
    put_u64(w, params.dims.input as u64)?;
    put_u64(w, params.dims.hidden as u64)?;
    put_u64(w, params.dims.latent as u64)?;
    put_u64(w, params.shared_weights as u64)?;
    put_f64(w, params.alpha)?;
    put_f64(w, params.beta)?;
    for l in 0..params.depth {
        for m in [&params.w_s[l], &params.w_t[l]] {
            put_u64(w, m.rows() as u64)?;
            put_u64(w, m.cols() as u64)?;
            for &v in m.as_slice() {
                put_f64(w, v)?;
            }
        }
    }
    Ok(())
}

pub fn read_params(r: &mut impl Read) -> Result<ModelParams> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let version = get_u64(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version}")));
    }
    let depth = get_u64(r)? as usize;
    let dims = Dims {
        input: get_u64(r)? as usize,
        hidden: get_u64(r)? as usize,
        latent: get_u64(r)? as usize,
    };
    let shared_weights = get_u64(r)? != 0;
    let alpha = get_f64(r)?;
    let beta = get_f64(r)?;
    let shapes = ModelParams::layer_shapes(depth, dims)?;
    let mut w_s = Vec::new();
    let mut w_t = Vec::new();
    for &(er, ec) in &shapes {
        for target in [&mut w_s, &mut w_t] {
            let rows = get_u64(r)? as usize;
            let cols = get_u64(r)? as usize;
            if (rows, cols) != (er, ec) {
                return Err(Error::ModelFormat(format!(
                    "matrix is {rows}x{cols}, header implies {er}x{ec}"
                )));
            }
            let data = (0..rows * cols)
                .map(|_| get_f64(r))
                .collect::<Result<Vec<f64>>>()?;
            target.push(Matrix::new(rows, cols, data)?);
        }
    }
    let params = ModelParams {
        w_s,
        w_t,
        alpha,
        beta,
        depth,
        dims,
        shared_weights,
    };
    params.validate()?;
    Ok(params)
}

/// CSV rows `node_id,role,c0,c1,...`, sources first.
pub fn write_embeddings_csv(z: &EncodingPair, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["node_id".to_string(), "role".to_string()];
    header.extend((0..z.dim()).map(|c| format!("c{c}")));
    out.write_record(&header)?;
    for (role, m) in [("source", &z.s), ("target", &z.t)] {
        for i in 0..m.rows() {
            let mut rec = vec![i.to_string(), role.to_string()];
            rec.extend(m.row(i).iter().map(|v| format!("{v:e}")));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Convenience: probability of the single pair `(i, j)`.
pub fn edge_probability(z: &EncodingPair, i: usize, j: usize) -> Result<f64> {
    if i >= z.node_count() || j >= z.node_count() {
        return Err(Error::PairOutOfRange(i, j));
    }
    Ok(sigmoid_scalar(dot(z.s.row(i), z.t.row(j))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bowtie_graph;
    use crate::graph::{add_self_loops, build_operator};

    fn dims(input: usize, hidden: usize, latent: usize) -> Dims {
        Dims {
            input,
            hidden,
            latent,
        }
    }

    fn patterned(depth: usize, d: Dims) -> ModelParams {
        let mut p = ModelParams::zeros(depth, d, 0.3, 0.6).unwrap();
        let mut k = 0.0;
        for w in p.w_s.iter_mut().chain(p.w_t.iter_mut()) {
            *w = Matrix::from_fn(w.rows(), w.cols(), |i, j| {
                k += 1.0;
                ((i * 7 + j * 3) as f64 + k).sin()
            });
        }
        p
    }

    #[test]
    fn zero_weights_give_zero_encodings() {
        let op = build_operator(&add_self_loops(&bowtie_graph()), 0.5, 0.5).unwrap();
        let x = FeatureMatrix::identity(6);
        for depth in [1, 2] {
            let p = ModelParams::zeros(depth, dims(6, 4, 2), 0.5, 0.5).unwrap();
            let z = encode(&p, &op, &x, &x).unwrap();
            assert_eq!(z.s.max_abs(), 0.0);
            assert_eq!(z.t.max_abs(), 0.0);
        }
    }

    #[test]
    fn edgeless_single_layer_is_plain_transform() {
        let g = add_self_loops(&DirectedGraph::from_pairs(3, []).unwrap());
        let op = build_operator(&g, 0.0, 0.0).unwrap();
        let p = patterned(1, dims(3, 4, 2));
        let s0 = Matrix::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
        let t0 = Matrix::from_fn(3, 3, |i, j| (2 * i) as f64 - j as f64);
        let z = encode(&p, &op, &s0.clone().into(), &t0.clone().into()).unwrap();
        assert_eq!(z.s, t0.matmul(&p.w_t[0]).unwrap());
        assert_eq!(z.t, s0.matmul(&p.w_s[0]).unwrap());
    }

    #[test]
    fn decoder_is_asymmetric() {
        // z_s,0 · z_t,1 = 2 and z_s,1 · z_t,0 = −2.
        let s = Matrix::from_rows(&[vec![1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
        let t = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let z = EncodingPair::new(s, t).unwrap();
        let p = decode_pairs(&z, &[(0, 1), (1, 0)]).unwrap();
        assert!((p[0] - 0.8808).abs() < 1e-4);
        assert!((p[1] - 0.1192).abs() < 1e-4);
        assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
        assert!(decode_pairs(&z, &[(0, 2)]).is_err());
    }

    #[test]
    fn isolated_node_keeps_only_its_own_message() {
        let g = DirectedGraph::from_pairs(1, []).unwrap();
        let w_s = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let w_t = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let enc = EncodingPair::new(
            Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(),
            Matrix::from_rows(&[vec![4.0, 5.0]]).unwrap(),
        )
        .unwrap();
        let layer = LayerWeights {
            w_s: &w_s,
            w_t: &w_t,
            alpha: 0.7,
            beta: 0.2,
        };
        let out = message_passing_layer(&g, &enc, layer).unwrap();
        assert_eq!(out.s.row(0), &[5.0, 4.0]);
        assert_eq!(out.t.row(0), &[2.0, 3.0]);
    }

    #[test]
    fn unscaled_messages_are_plain_sums() {
        let g = bowtie_graph();
        let w = Matrix::identity(1);
        let enc = EncodingPair::new(
            Matrix::column_vector((0..6).map(|i| i as f64).collect()),
            Matrix::column_vector((0..6).map(|i| 10.0 * i as f64).collect()),
        )
        .unwrap();
        let layer = LayerWeights {
            w_s: &w,
            w_t: &w,
            alpha: 0.0,
            beta: 0.0,
        };
        let out = message_passing_layer(&g, &enc, layer).unwrap();
        // s_3 sums target values over {3, 4, 5}; t_3 sums sources over {0, 1, 2, 3}.
        assert_eq!(out.s.get(3, 0), 30.0 + 40.0 + 50.0);
        assert_eq!(out.t.get(3, 0), 0.0 + 1.0 + 2.0 + 3.0);
    }

    #[test]
    fn params_round_trip_through_binary() {
        for depth in [1, 2] {
            let mut p = patterned(depth, dims(5, 4, 2));
            p.shared_weights = depth == 2;
            p.sync_shared();
            let mut buf = Vec::new();
            write_params(&p, &mut buf).unwrap();
            assert_eq!(read_params(&mut buf.as_slice()).unwrap(), p);
        }
    }

    #[test]
    fn binary_header_layout() {
        let p = patterned(1, dims(2, 2, 1));
        let mut buf = Vec::new();
        write_params(&p, &mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(buf[56..64].try_into().unwrap()), 0.3);
        // header + two 2x1 matrices with their shapes
        assert_eq!(buf.len(), 72 + 2 * (16 + 16));
        assert!(read_params(&mut &buf[..40]).is_err());
    }

    #[test]
    fn embeddings_csv_layout() {
        let z = EncodingPair::new(Matrix::filled(2, 2, 0.5), Matrix::filled(2, 2, -1.0)).unwrap();
        let mut buf = Vec::new();
        write_embeddings_csv(&z, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "node_id,role,c0,c1");
        assert_eq!(lines[1], "0,source,5e-1,5e-1");
        assert_eq!(lines[4], "1,target,-1e0,-1e0");
    }
}
