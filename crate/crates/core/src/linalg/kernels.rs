//! Forward kernels and their vector-Jacobian products.

use super::{dot, CsrMatrix, Matrix};
use crate::error::{Error, Result};
use crate::graph::PropagationOperator;

/// `Â·x`, or `Âᵀ·x` when `transpose`.
pub fn spmm(op: &PropagationOperator, transpose: bool, x: &Matrix) -> Result<Matrix> {
    if transpose {
        op.apply_transpose(x)
    } else {
        op.apply(x)
    }
}

/// Gradient of `spmm` with respect to `x`: the product with the other orientation.
pub fn spmm_backward(op: &PropagationOperator, transpose: bool, grad: &Matrix) -> Result<Matrix> {
    spmm(op, !transpose, grad)
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.matmul(b)
}

/// Gradients of `a·b` with respect to `a` and `b`.
pub fn matmul_backward(a: &Matrix, b: &Matrix, grad: &Matrix) -> Result<(Matrix, Matrix)> {
    Ok((grad.matmul_t(b)?, a.t_matmul(grad)?))
}

pub fn relu(x: &Matrix) -> Matrix {
    x.map(|v| v.max(0.0))
}

/// Passes `grad` where the forward input was positive.
pub fn relu_backward(x: &Matrix, grad: &Matrix) -> Result<Matrix> {
    x.check_same_shape("relu_backward", grad)?;
    let data = x
        .as_slice()
        .iter()
        .zip(grad.as_slice())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Matrix::new(x.rows(), x.cols(), data)
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Matrix) -> Matrix {
    x.map(sigmoid_scalar)
}

/// `σ'(x) = σ(x)(1 − σ(x))`, applied to the upstream gradient.
pub fn sigmoid_backward(x: &Matrix, grad: &Matrix) -> Result<Matrix> {
    x.check_same_shape("sigmoid_backward", grad)?;
    let data = x
        .as_slice()
        .iter()
        .zip(grad.as_slice())
        .map(|(&v, &g)| {
            let s = sigmoid_scalar(v);
            g * s * (1.0 - s)
        })
        .collect();
    Matrix::new(x.rows(), x.cols(), data)
}

fn check_pairs(zs: &Matrix, zt: &Matrix, pairs: &[(usize, usize)]) -> Result<()> {
    if zs.cols() != zt.cols() {
        return Err(Error::DimensionMismatch {
            op: "pairwise_rowdot",
            detail: format!("{} source columns vs {} target columns", zs.cols(), zt.cols()),
        });
    }
    if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i >= zs.rows() || j >= zt.rows()) {
        return Err(Error::PairOutOfRange(i, j));
    }
    Ok(())
}

/// `zs[i] · zt[j]` for each requested pair; never forms `zs · ztᵀ`.
pub fn pairwise_rowdot(zs: &Matrix, zt: &Matrix, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    check_pairs(zs, zt, pairs)?;
    Ok(pairs
        .iter()
        .map(|&(i, j)| dot(zs.row(i), zt.row(j)))
        .collect())
}

/// Scatters per-pair gradients back into both row sets.
pub fn pairwise_rowdot_backward(
    zs: &Matrix,
    zt: &Matrix,
    pairs: &[(usize, usize)],
    grad: &[f64],
) -> Result<(Matrix, Matrix)> {
    check_pairs(zs, zt, pairs)?;
    if grad.len() != pairs.len() {
        return Err(Error::DimensionMismatch {
            op: "pairwise_rowdot_backward",
            detail: format!("{} gradients for {} pairs", grad.len(), pairs.len()),
        });
    }
    let mut gzs = Matrix::zeros(zs.rows(), zs.cols());
    let mut gzt = Matrix::zeros(zt.rows(), zt.cols());
    for (&(i, j), &g) in pairs.iter().zip(grad) {
        for (o, &v) in gzs.row_mut(i).iter_mut().zip(zt.row(j)) {
            *o += g * v;
        }
        for (o, &v) in gzt.row_mut(j).iter_mut().zip(zs.row(i)) {
            *o += g * v;
        }
    }
    Ok((gzs, gzt))
}

/// Mean binary cross-entropy on logits, in the overflow-free form
/// `max(x, 0) − x·y + ln(1 + e^{−|x|})`.
pub fn bce_with_logits(logits: &[f64], labels: &[f64]) -> Result<f64> {
    if logits.is_empty() {
        return Err(Error::EmptyInput("bce_with_logits"));
    }
    if logits.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            op: "bce_with_logits",
            detail: format!("{} logits for {} labels", logits.len(), labels.len()),
        });
    }
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(&x, &y)| x.max(0.0) - x * y + (-x.abs()).exp().ln_1p())
        .sum();
    Ok(total / logits.len() as f64)
}

/// `∂loss/∂logit = (σ(x) − y) / N`.
pub fn bce_with_logits_backward(logits: &[f64], labels: &[f64]) -> Vec<f64> {
    let n = logits.len() as f64;
    logits
        .iter()
        .zip(labels)
        .map(|(&x, &y)| (sigmoid_scalar(x) - y) / n)
        .collect()
}

/// Node-feature input: dense, or sparse with a cached transpose.
#[derive(Debug, Clone)]
pub enum FeatureMatrix {
    Dense(Matrix),
    Sparse { matrix: CsrMatrix, transpose: CsrMatrix },
}

impl FeatureMatrix {
    pub fn sparse(matrix: CsrMatrix) -> Self {
        let transpose = matrix.transpose();
        FeatureMatrix::Sparse { matrix, transpose }
    }

    /// One-hot node encodings.
    pub fn identity(n: usize) -> Self {
        Self::sparse(CsrMatrix::identity(n))
    }

    pub fn rows(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.rows(),
            FeatureMatrix::Sparse { matrix, .. } => matrix.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            FeatureMatrix::Dense(m) => m.cols(),
            FeatureMatrix::Sparse { matrix, .. } => matrix.cols(),
        }
    }

    /// `X · w`
    pub fn mul(&self, w: &Matrix) -> Result<Matrix> {
        match self {
            FeatureMatrix::Dense(m) => m.matmul(w),
            FeatureMatrix::Sparse { matrix, .. } => matrix.mul_dense(w),
        }
    }

    /// `Xᵀ · g`
    pub fn t_mul(&self, g: &Matrix) -> Result<Matrix> {
        match self {
            FeatureMatrix::Dense(m) => m.t_matmul(g),
            FeatureMatrix::Sparse { transpose, .. } => transpose.mul_dense(g),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            FeatureMatrix::Dense(m) => m.clone(),
            FeatureMatrix::Sparse { matrix, .. } => matrix.to_dense(),
        }
    }
}

impl From<Matrix> for FeatureMatrix {
    fn from(m: Matrix) -> Self {
        FeatureMatrix::Dense(m)
    }
}

impl From<CsrMatrix> for FeatureMatrix {
    fn from(m: CsrMatrix) -> Self {
        FeatureMatrix::sparse(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bowtie_graph;
    use crate::graph::{add_self_loops, build_operator, DirectedGraph};

    #[test]
    fn loop_only_graph_propagates_identity() {
        let g = add_self_loops(&DirectedGraph::from_pairs(4, []).unwrap());
        let op = build_operator(&g, 0.7, 0.3).unwrap();
        let x = Matrix::from_fn(4, 2, |i, j| i as f64 - j as f64);
        assert_eq!(spmm(&op, false, &x).unwrap(), x);
        assert_eq!(spmm(&op, true, &x).unwrap(), x);
    }

    #[test]
    fn unnormalized_row_sums_are_out_degrees() {
        let op = build_operator(&add_self_loops(&bowtie_graph()), 0.0, 0.0).unwrap();
        let y = spmm(&op, false, &Matrix::filled(6, 1, 1.0)).unwrap();
        assert_eq!(y.column(0), vec![2.0, 2.0, 2.0, 3.0, 1.0, 1.0]);
    }

    #[test]
    fn spmm_rejects_wrong_row_count() {
        let op = build_operator(&add_self_loops(&bowtie_graph()), 0.0, 0.0).unwrap();
        assert!(spmm(&op, false, &Matrix::zeros(5, 1)).is_err());
    }

    #[test]
    fn zero_sources_decode_to_one_half() {
        let zs = Matrix::zeros(3, 2);
        let zt = Matrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let dots = pairwise_rowdot(&zs, &zt, &[(0, 1), (2, 0)]).unwrap();
        assert!(dots.iter().all(|&d| sigmoid_scalar(d) == 0.5));
    }

    #[test]
    fn unit_rows_dot_to_two() {
        let z = Matrix::filled(2, 2, 1.0);
        let d = pairwise_rowdot(&z, &z, &[(0, 1)]).unwrap()[0];
        assert_eq!(d, 2.0);
        assert!((sigmoid_scalar(d) - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn rowdot_rejects_bad_index() {
        let z = Matrix::zeros(2, 2);
        assert!(matches!(
            pairwise_rowdot(&z, &z, &[(0, 2)]),
            Err(Error::PairOutOfRange(0, 2))
        ));
    }

    #[test]
    fn relu_gradient_is_zero_for_negative_input() {
        let x = Matrix::column_vector(vec![-1.0, 2.0]);
        let g = relu_backward(&x, &Matrix::filled(2, 1, 1.0)).unwrap();
        assert_eq!(g.column(0), vec![0.0, 1.0]);
    }

    #[test]
    fn bce_closed_forms() {
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let l = bce_with_logits(&[logit(0.9), logit(0.2)], &[1.0, 0.0]).unwrap();
        assert!((l - (-(0.9f64.ln() + 0.8f64.ln()) / 2.0)).abs() < 1e-12);
        assert!((l - 0.1643).abs() < 1e-4);
        let half = bce_with_logits(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((half - 2f64.ln()).abs() < 1e-15);
        assert!(bce_with_logits(&[], &[]).is_err());
    }
}
