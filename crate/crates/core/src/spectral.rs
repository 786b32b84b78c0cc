//! Truncated SVD, the SVD and HOPE/Katz link predictors, and singular value
//! spectra of the propagation operator.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_operator, DirectedGraph, PropagationOperator};
use crate::linalg::{dot, CsrMatrix, Matrix};
use crate::model::EncodingPair;

/// Anything that can multiply a block of vectors from either side.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A · x`
    fn apply(&self, x: &Matrix) -> Result<Matrix>;
    /// `Aᵀ · x`
    fn apply_t(&self, x: &Matrix) -> Result<Matrix>;
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.matmul(x)
    }
    fn apply_t(&self, x: &Matrix) -> Result<Matrix> {
        self.t_matmul(x)
    }
}

/// Sparse matrix with its transpose cached.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    a: CsrMatrix,
    at: CsrMatrix,
}

impl SparseOperator {
    pub fn new(a: CsrMatrix) -> Self {
        let at = a.transpose();
        Self { a, at }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.a
    }
}

impl LinearOperator for SparseOperator {
    fn nrows(&self) -> usize {
        self.a.rows()
    }
    fn ncols(&self) -> usize {
        self.a.cols()
    }
    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.a.mul_dense(x)
    }
    fn apply_t(&self, x: &Matrix) -> Result<Matrix> {
        self.at.mul_dense(x)
    }
}

impl LinearOperator for PropagationOperator {
    fn nrows(&self) -> usize {
        self.node_count()
    }
    fn ncols(&self) -> usize {
        self.node_count()
    }
    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        PropagationOperator::apply(self, x)
    }
    fn apply_t(&self, x: &Matrix) -> Result<Matrix> {
        self.apply_transpose(x)
    }
}

/// Raw adjacency matrix of `g` (edge weights, no self-loops added).
pub fn adjacency_operator(g: &DirectedGraph) -> SparseOperator {
    let n = g.node_count();
    let a = CsrMatrix::from_triplets(n, n, g.edges().iter().map(|e| (e.source, e.target, e.weight)))
        .expect("edge endpoints are in range");
    SparseOperator::new(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvdMethod {
    Lanczos,
    Randomized,
}

impl std::str::FromStr for SvdMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lanczos" => Ok(SvdMethod::Lanczos),
            "randomized" | "randsvd" => Ok(SvdMethod::Randomized),
            other => Err(Error::InvalidConfig(format!("unknown SVD method {other:?}"))),
        }
    }
}

/// Leading singular triplets, `sigma` descending.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U Σ Vᵀ`
    pub fn reconstruct(&self) -> Result<Matrix> {
        self.u.scale_columns(&self.sigma)?.matmul_t(&self.v)
    }

    /// `(U Σ^½, V Σ^½)` as source and target encodings.
    pub fn embeddings(&self) -> Result<EncodingPair> {
        let root: Vec<f64> = self.sigma.iter().map(|s| s.sqrt()).collect();
        EncodingPair::new(self.u.scale_columns(&root)?, self.v.scale_columns(&root)?)
    }
}

const OVERSAMPLING: usize = 10;
const POWER_ITERATIONS: usize = 2;

/// Top-`k` singular triplets of `a`.
pub fn truncated_svd(a: &dyn LinearOperator, k: usize, method: SvdMethod, seed: u64) -> Result<SvdFactors> {
    let min_dim = a.nrows().min(a.ncols());
    if k == 0 || k > min_dim {
        return Err(Error::InvalidConfig(format!(
            "rank {k} outside 1..={min_dim}"
        )));
    }
    match method {
        SvdMethod::Randomized => randomized_svd(a, k, seed),
        SvdMethod::Lanczos => lanczos_svd(a, k, seed),
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Thin QR, keeping `Q`.
fn orthonormalize(y: &Matrix) -> Matrix {
    let q = y.to_nalgebra().qr().q();
    Matrix::from_nalgebra(&q)
}

/// Dense SVD of a small matrix; singular values sorted descending.
fn small_svd(b: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let svd = b.to_nalgebra().svd(true, true);
    let u = svd.u.ok_or(Error::NoConvergence { what: "dense SVD", iters: 0 })?;
    let vt = svd.v_t.ok_or(Error::NoConvergence { what: "dense SVD", iters: 0 })?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = Matrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = Matrix::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
    Ok((u, sigma, v))
}

/// Makes each `u` column's largest-magnitude entry positive, flipping `v` to match.
fn fix_signs(u: &mut Matrix, v: &mut Matrix) {
    for c in 0..u.cols() {
        let col = u.column(c);
        let pivot = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if pivot < 0.0 {
            for r in 0..u.rows() {
                u.set(r, c, -u.get(r, c));
            }
            for r in 0..v.rows() {
                v.set(r, c, -v.get(r, c));
            }
        }
    }
}

fn randomized_svd(a: &dyn LinearOperator, k: usize, seed: u64) -> Result<SvdFactors> {
    let min_dim = a.nrows().min(a.ncols());
    let l = (k + OVERSAMPLING).min(min_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = gaussian(a.ncols(), l, &mut rng);
    let mut q = orthonormalize(&a.apply(&omega)?);
    for _ in 0..POWER_ITERATIONS {
        let z = orthonormalize(&a.apply_t(&q)?);
        q = orthonormalize(&a.apply(&z)?);
    }
    // B = Qᵀ A, stored transposed as Aᵀ Q.
    let bt = a.apply_t(&q)?;
    let (vb, sigma, ub) = small_svd(&bt)?;
    let mut u = q.matmul(&ub.leading_columns(k))?;
    let mut v = vb.leading_columns(k);
    fix_signs(&mut u, &mut v);
    Ok(SvdFactors {
        u,
        sigma: sigma[..k].to_vec(),
        v,
    })
}

/// Orthogonalizes `x` against every vector of `basis` (twice).
fn reorthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(x, b);
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= c * bi;
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// A unit vector orthogonal to `basis`, or `None` if the basis spans the space.
fn fresh_direction(dim: usize, basis: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    if basis.len() >= dim {
        return None;
    }
    for _ in 0..8 {
        let mut x: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        reorthogonalize(&mut x, basis);
        let nx = norm(&x);
        if nx > 1e-8 {
            x.iter_mut().for_each(|v| *v /= nx);
            return Some(x);
        }
    }
    None
}

fn apply_vec(a: &dyn LinearOperator, x: &[f64], transpose: bool) -> Result<Vec<f64>> {
    let m = Matrix::column_vector(x.to_vec());
    let y = if transpose { a.apply_t(&m)? } else { a.apply(&m)? };
    Ok(y.into_vec())
}

/// Golub–Kahan bidiagonalization with full reorthogonalization.
///
/// The Krylov dimension grows until the residual bound of every wanted
/// triplet is below `1e-10 · σ₁`, or the subspace is exhausted.
fn lanczos_svd(a: &dyn LinearOperator, k: usize, seed: u64) -> Result<SvdFactors> {
    const TOL: f64 = 1e-10;
    let (m_rows, n_cols) = (a.nrows(), a.ncols());
    let max_steps = m_rows.min(n_cols);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut us: Vec<Vec<f64>> = Vec::new();
    let mut vs: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut v = fresh_direction(n_cols, &[], &mut rng).ok_or(Error::EmptyInput("truncated_svd"))?;
    let mut target = (2 * k + 10).min(max_steps);
    let mut rounds = 0;
    loop {
        while vs.len() < target {
            let mut u = apply_vec(a, &v, false)?;
            if let Some(&b) = betas.last() {
                let prev = us.last().expect("previous left vector");
                for (ui, pi) in u.iter_mut().zip(prev) {
                    *ui -= b * pi;
                }
            }
            reorthogonalize(&mut u, &us);
            let mut alpha = norm(&u);
            if alpha > 1e-12 {
                u.iter_mut().for_each(|x| *x /= alpha);
            } else {
                alpha = 0.0;
                u = match fresh_direction(m_rows, &us, &mut rng) {
                    Some(x) => x,
                    None => break,
                };
            }
            vs.push(v.clone());
            us.push(u.clone());
            alphas.push(alpha);

            let mut next = apply_vec(a, &u, true)?;
            for (ni, vi) in next.iter_mut().zip(&v) {
                *ni -= alpha * vi;
            }
            reorthogonalize(&mut next, &vs);
            let mut beta = norm(&next);
            if beta > 1e-12 {
                next.iter_mut().for_each(|x| *x /= beta);
            } else {
                beta = 0.0;
                next = match fresh_direction(n_cols, &vs, &mut rng) {
                    Some(x) => x,
                    None => {
                        betas.push(0.0);
                        break;
                    }
                };
            }
            betas.push(beta);
            v = next;
        }

        let steps = alphas.len();
        let b = Matrix::from_fn(steps, steps, |r, c| {
            if r == c {
                alphas[r]
            } else if c == r + 1 {
                betas[r]
            } else {
                0.0
            }
        });
        let (xb, sigma, yb) = small_svd(&b)?;
        let residual = betas.get(steps - 1).copied().unwrap_or(0.0);
        let scale = sigma.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let converged = steps >= k
            && (0..k).all(|i| (residual * xb.get(steps - 1, i)).abs() <= TOL * scale);
        let exhausted = steps >= max_steps || steps < target;
        if converged || exhausted {
            if steps < k {
                return Err(Error::NoConvergence {
                    what: "Lanczos bidiagonalization",
                    iters: steps,
                });
            }
            let ubasis = Matrix::from_fn(m_rows, steps, |r, c| us[c][r]);
            let vbasis = Matrix::from_fn(n_cols, steps, |r, c| vs[c][r]);
            let mut u = ubasis.matmul(&xb.leading_columns(k))?;
            let mut vv = vbasis.matmul(&yb.leading_columns(k))?;
            fix_signs(&mut u, &mut vv);
            return Ok(SvdFactors {
                u,
                sigma: sigma[..k].to_vec(),
                v: vv,
            });
        }
        rounds += 1;
        if rounds > 64 {
            return Err(Error::NoConvergence {
                what: "Lanczos bidiagonalization",
                iters: steps,
            });
        }
        target = (target * 2).min(max_steps);
    }
}

/// `(U Σ^½, V Σ^½)` from the top-`k` triplets of `a`.
pub fn svd_embeddings(a: &dyn LinearOperator, k: usize, method: SvdMethod, seed: u64) -> Result<EncodingPair> {
    truncated_svd(a, k, method, seed)?.embeddings()
}

/// Embeds the raw train adjacency.
pub fn svd_link_embeddings(g_train: &DirectedGraph, k: usize, method: SvdMethod, seed: u64) -> Result<EncodingPair> {
    svd_embeddings(&adjacency_operator(g_train), k, method, seed)
}

/// Spectral radius estimate `‖A^p 1‖_∞^{1/p}` for a non-negative matrix.
///
/// Exact in the limit; for finite `p` it bounds ρ from above.
pub fn spectral_radius_estimate(a: &SparseOperator, iters: usize) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut x = Matrix::filled(n, 1, 1.0);
    let mut log_norm = 0.0;
    for _ in 0..iters {
        x = a.apply(&x)?;
        let m = x.max_abs();
        if m == 0.0 {
            return Ok(0.0);
        }
        log_norm += m.ln();
        x = x.scale(1.0 / m);
    }
    Ok((log_norm / iters as f64).exp())
}

/// Katz proximity `Σ_{p≥1} (βA)^p = (I − βA)⁻¹ βA` as a dense matrix.
///
/// Solved by the fixed-point iteration `P ← βA + βA·P`.
pub fn katz_proximity(g_train: &DirectedGraph, katz_decay: f64) -> Result<Matrix> {
    const MAX_ITERS: usize = 10_000;
    if !(katz_decay >= 0.0) || !katz_decay.is_finite() {
        return Err(Error::InvalidConfig(format!("katz decay {katz_decay} must be non-negative")));
    }
    let n = g_train.node_count();
    if katz_decay == 0.0 {
        return Ok(Matrix::zeros(n, n));
    }
    let a = adjacency_operator(g_train);
    let rho = katz_decay * spectral_radius_estimate(&a, 200)?;
    if rho >= 1.0 {
        return Err(Error::Divergence(rho));
    }
    let ba = a.matrix().to_dense().scale(katz_decay);
    let mut p = ba.clone();
    for it in 0..MAX_ITERS {
        let mut next = a.apply(&p)?.scale(katz_decay);
        next.axpy(1.0, &ba)?;
        let delta = next.sub(&p)?.max_abs();
        let size = next.max_abs().max(1.0);
        p = next;
        if !p.is_finite() {
            return Err(Error::Divergence(f64::INFINITY));
        }
        if delta <= 1e-14 * size {
            log::debug!("katz converged after {} iterations", it + 1);
            return Ok(p);
        }
    }
    Err(Error::NoConvergence {
        what: "Katz iteration",
        iters: MAX_ITERS,
    })
}

pub fn hope_embeddings(
    g_train: &DirectedGraph,
    k: usize,
    katz_decay: f64,
    method: SvdMethod,
    seed: u64,
) -> Result<EncodingPair> {
    let p = katz_proximity(g_train, katz_decay)?;
    svd_embeddings(&p, k, method, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub alpha: f64,
    pub beta: f64,
    pub singular_values: Vec<f64>,
}

/// Singular values of `Â` for every `(α, β)`; `top` limits to the leading ones.
///
/// `g` must carry self-loops.
pub fn spectrum_study(g: &DirectedGraph, exponent_pairs: &[(f64, f64)], top: Option<usize>) -> Result<Vec<Spectrum>> {
    use rayon::prelude::*;
    exponent_pairs
        .par_iter()
        .map(|&(alpha, beta)| {
            let op = build_operator(g, alpha, beta)?;
            let n = op.node_count();
            let singular_values = match top {
                Some(k) if k < n => truncated_svd(&op, k, SvdMethod::Lanczos, 0)?.sigma,
                _ => {
                    let mut s: Vec<f64> = op.to_dense().to_nalgebra().singular_values().iter().copied().collect();
                    s.sort_by(|a, b| b.total_cmp(a));
                    s
                }
            };
            Ok(Spectrum {
                alpha,
                beta,
                singular_values,
            })
        })
        .collect()
}

/// CSV `alpha,beta,index,singular_value`.
pub fn write_spectrum_csv(spectra: &[Spectrum], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["alpha", "beta", "index", "singular_value"])?;
    for s in spectra {
        for (i, v) in s.singular_values.iter().enumerate() {
            out.write_record([s.alpha.to_string(), s.beta.to_string(), i.to_string(), format!("{v:e}")])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::add_self_loops;

    fn diag(values: &[f64]) -> Matrix {
        Matrix::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[test]
    fn diagonal_top_two() {
        for method in [SvdMethod::Lanczos, SvdMethod::Randomized] {
            let f = truncated_svd(&diag(&[3.0, 2.0, 1.0]), 2, method, 1).unwrap();
            assert!((f.sigma[0] - 3.0).abs() < 1e-10);
            assert!((f.sigma[1] - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_bounds() {
        let a = diag(&[1.0, 1.0]);
        assert!(truncated_svd(&a, 0, SvdMethod::Lanczos, 0).is_err());
        assert!(truncated_svd(&a, 3, SvdMethod::Randomized, 0).is_err());
    }

    #[test]
    fn rank_one_closed_form() {
        let u = [1.0, 2.0, 2.0];
        let v = [3.0, 4.0];
        let a = Matrix::from_fn(3, 2, |i, j| u[i] * v[j]);
        for method in [SvdMethod::Lanczos, SvdMethod::Randomized] {
            let f = truncated_svd(&a, 1, method, 4).unwrap();
            assert!((f.sigma[0] - 15.0).abs() < 1e-10);
            assert!(f.reconstruct().unwrap().sub(&a).unwrap().frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn katz_small_cases() {
        let g = DirectedGraph::from_pairs(2, [(0, 1)]).unwrap();
        let p = katz_proximity(&g, 0.5).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.5, 0.0, 0.0]);
        assert_eq!(katz_proximity(&g, 0.0).unwrap().max_abs(), 0.0);
        let path = DirectedGraph::from_pairs(3, [(0, 1), (1, 2)]).unwrap();
        assert!((katz_proximity(&path, 0.5).unwrap().get(0, 2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn katz_diverges_past_spectral_radius() {
        let cycle = DirectedGraph::from_pairs(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(matches!(katz_proximity(&cycle, 1.0), Err(Error::Divergence(_))));
        assert!(katz_proximity(&cycle, 0.5).is_ok());
    }

    #[test]
    fn single_node_spectrum_is_one() {
        let g = add_self_loops(&DirectedGraph::from_pairs(1, []).unwrap());
        let s = spectrum_study(&g, &[(0.5, 0.5)], None).unwrap();
        assert_eq!(s[0].singular_values, vec![1.0]);
    }

    #[test]
    fn spectrum_csv_layout() {
        let spectra = vec![Spectrum {
            alpha: 0.5,
            beta: 0.3,
            singular_values: vec![2.0, 1.0],
        }];
        let mut buf = Vec::new();
        write_spectrum_csv(&spectra, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "alpha,beta,index,singular_value\n0.5,0.3,0,2e0\n0.5,0.3,1,1e0\n"
        );
    }
}
