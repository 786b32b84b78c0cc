//! Define-by-run tape over the kernels in [`super::kernels`].
//!
//! Every recorded operation stores its output; [`Tape::backward`] walks the
//! records in reverse and accumulates vector-Jacobian products into the
//! parameter leaves.

use super::kernels::{self, FeatureMatrix};
use super::Matrix;
use crate::error::{Error, Result};
use crate::graph::PropagationOperator;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<'a> {
    Constant,
    Param,
    FeatureMul {
        x: &'a FeatureMatrix,
        w: Var,
    },
    Propagate {
        op: &'a PropagationOperator,
        transpose: bool,
        x: Var,
    },
    MatMul {
        a: Var,
        b: Var,
    },
    Relu(Var),
    Sigmoid(Var),
    RowDot {
        zs: Var,
        zt: Var,
        pairs: Vec<(usize, usize)>,
    },
    BceWithLogits {
        logits: Var,
        labels: Vec<f64>,
    },
    Sum(Var),
}

impl Op<'_> {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Constant | Op::Param => vec![],
            Op::FeatureMul { w, .. } => vec![*w],
            Op::Propagate { x, .. } => vec![*x],
            Op::MatMul { a, b } => vec![*a, *b],
            Op::Relu(x) | Op::Sigmoid(x) | Op::Sum(x) => vec![*x],
            Op::RowDot { zs, zt, .. } => vec![*zs, *zt],
            Op::BceWithLogits { logits, .. } => vec![*logits],
        }
    }
}

struct Record<'a> {
    op: Op<'a>,
    value: Matrix,
}

#[derive(Default)]
pub struct Tape<'a> {
    records: Vec<Record<'a>>,
}

/// Gradients of a scalar output with respect to every parameter leaf.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn push(&mut self, op: Op<'a>, value: Matrix) -> Var {
        self.records.push(Record { op, value });
        Var(self.records.len() - 1)
    }

    fn check(&self, v: Var) -> Result<()> {
        if v.0 >= self.records.len() {
            return Err(Error::Tape(format!("unknown value {}", v.0)));
        }
        Ok(())
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.records[v.0].value
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(Op::Constant, value)
    }

    /// Registers a trainable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(Op::Param, value)
    }

    /// `X · w` for a fixed feature matrix `X`.
    pub fn feature_mul(&mut self, x: &'a FeatureMatrix, w: Var) -> Result<Var> {
        self.check(w)?;
        let value = x.mul(self.value(w))?;
        Ok(self.push(Op::FeatureMul { x, w }, value))
    }

    pub fn propagate(&mut self, op: &'a PropagationOperator, transpose: bool, x: Var) -> Result<Var> {
        self.check(x)?;
        let value = kernels::spmm(op, transpose, self.value(x))?;
        Ok(self.push(Op::Propagate { op, transpose, x }, value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check(a)?;
        self.check(b)?;
        let value = kernels::matmul(self.value(a), self.value(b))?;
        Ok(self.push(Op::MatMul { a, b }, value))
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.check(x)?;
        let value = kernels::relu(self.value(x));
        Ok(self.push(Op::Relu(x), value))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.check(x)?;
        let value = kernels::sigmoid(self.value(x));
        Ok(self.push(Op::Sigmoid(x), value))
    }

    /// Column vector of `zs[i] · zt[j]` per pair.
    pub fn rowdot(&mut self, zs: Var, zt: Var, pairs: Vec<(usize, usize)>) -> Result<Var> {
        self.check(zs)?;
        self.check(zt)?;
        let dots = kernels::pairwise_rowdot(self.value(zs), self.value(zt), &pairs)?;
        Ok(self.push(Op::RowDot { zs, zt, pairs }, Matrix::column_vector(dots)))
    }

    /// Mean BCE of a column of logits against 0/1 labels; a 1×1 value.
    pub fn bce_with_logits(&mut self, logits: Var, labels: Vec<f64>) -> Result<Var> {
        self.check(logits)?;
        let loss = kernels::bce_with_logits(self.value(logits).as_slice(), &labels)?;
        Ok(self.push(Op::BceWithLogits { logits, labels }, Matrix::filled(1, 1, loss)))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        self.check(x)?;
        let total = self.value(x).sum();
        Ok(self.push(Op::Sum(x), Matrix::filled(1, 1, total)))
    }

    /// Reverse pass from the scalar `output`, seeded with `seed`.
    ///
    /// Every recorded value other than `output` must feed a later operation.
    pub fn backward(&self, output: Var, seed: f64) -> Result<Gradients> {
        self.check(output)?;
        if self.value(output).shape() != (1, 1) {
            return Err(Error::Tape(format!(
                "output {} is not a scalar",
                output.0
            )));
        }
        let mut consumed = vec![false; self.records.len()];
        for (id, rec) in self.records.iter().enumerate() {
            for input in rec.op.inputs() {
                if input.0 >= id {
                    return Err(Error::Tape(format!("value {id} reads a later value")));
                }
                consumed[input.0] = true;
            }
        }
        if let Some(id) = (0..self.records.len()).find(|&id| id != output.0 && !consumed[id]) {
            return Err(Error::UnconsumedOutput(id));
        }

        let mut grads: Vec<Option<Matrix>> = vec![None; self.records.len()];
        grads[output.0] = Some(Matrix::filled(1, 1, seed));

        fn accumulate(slot: &mut Option<Matrix>, g: Matrix) -> Result<()> {
            match slot {
                Some(existing) => existing.axpy(1.0, &g),
                None => {
                    *slot = Some(g);
                    Ok(())
                }
            }
        }

        for id in (0..=output.0).rev() {
            let Some(grad) = grads[id].take() else {
                continue;
            };
            let rec = &self.records[id];
            match &rec.op {
                Op::Constant => {}
                Op::Param => {
                    grads[id] = Some(grad);
                }
                Op::FeatureMul { x, w } => {
                    accumulate(&mut grads[w.0], x.t_mul(&grad)?)?;
                }
                Op::Propagate { op, transpose, x } => {
                    accumulate(
                        &mut grads[x.0],
                        kernels::spmm_backward(op, *transpose, &grad)?,
                    )?;
                }
                Op::MatMul { a, b } => {
                    let (ga, gb) = kernels::matmul_backward(self.value(*a), self.value(*b), &grad)?;
                    accumulate(&mut grads[a.0], ga)?;
                    accumulate(&mut grads[b.0], gb)?;
                }
                Op::Relu(x) => {
                    accumulate(&mut grads[x.0], kernels::relu_backward(self.value(*x), &grad)?)?;
                }
                Op::Sigmoid(x) => {
                    accumulate(
                        &mut grads[x.0],
                        kernels::sigmoid_backward(self.value(*x), &grad)?,
                    )?;
                }
                Op::RowDot { zs, zt, pairs } => {
                    let (gs, gt) = kernels::pairwise_rowdot_backward(
                        self.value(*zs),
                        self.value(*zt),
                        pairs,
                        grad.as_slice(),
                    )?;
                    accumulate(&mut grads[zs.0], gs)?;
                    accumulate(&mut grads[zt.0], gt)?;
                }
                Op::BceWithLogits { logits, labels } => {
                    let upstream = grad.get(0, 0);
                    let local = kernels::bce_with_logits_backward(
                        self.value(*logits).as_slice(),
                        labels,
                    );
                    let g = Matrix::column_vector(local.into_iter().map(|v| v * upstream).collect());
                    accumulate(&mut grads[logits.0], g)?;
                }
                Op::Sum(x) => {
                    let shape = self.value(*x).shape();
                    accumulate(
                        &mut grads[x.0],
                        Matrix::filled(shape.0, shape.1, grad.get(0, 0)),
                    )?;
                }
            }
        }

        for (id, rec) in self.records.iter().enumerate() {
            if matches!(rec.op, Op::Param) && grads[id].is_none() {
                let (r, c) = rec.value.shape();
                grads[id] = Some(Matrix::zeros(r, c));
            }
            if !matches!(rec.op, Op::Param) {
                grads[id] = None;
            }
        }
        Ok(Gradients { grads })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconsumed_value_is_rejected() {
        let mut tape = Tape::new();
        let w = tape.param(Matrix::filled(2, 2, 1.0));
        let _dangling = tape.relu(w).unwrap();
        let s = tape.sum(w).unwrap();
        assert!(matches!(tape.backward(s, 1.0), Err(Error::UnconsumedOutput(1))));
    }

    #[test]
    fn non_scalar_output_is_rejected() {
        let mut tape = Tape::new();
        let w = tape.param(Matrix::filled(2, 2, 1.0));
        assert!(matches!(tape.backward(w, 1.0), Err(Error::Tape(_))));
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let mut tape = Tape::new();
        let w = tape.param(Matrix::from_fn(3, 2, |i, j| (i + j) as f64));
        let zero = tape.constant(Matrix::zeros(2, 4));
        let prod = tape.matmul(w, zero).unwrap();
        let s = tape.sum(prod).unwrap();
        let grads = tape.backward(s, 1.0).unwrap();
        assert_eq!(grads.get(w).unwrap(), &Matrix::zeros(3, 2));
    }

    #[test]
    fn linear_sum_gradient_is_column_sums() {
        let mut tape = Tape::new();
        let x = tape.constant(Matrix::from_fn(2, 3, |i, j| (i * 3 + j) as f64));
        let w = tape.param(Matrix::filled(3, 1, 0.5));
        let y = tape.matmul(x, w).unwrap();
        let s = tape.sum(y).unwrap();
        let g = tape.backward(s, 2.0).unwrap();
        // d/dw sum(Xw) = Xᵀ·1, times the seed.
        assert_eq!(g.get(w).unwrap().column(0), vec![6.0, 10.0, 14.0]);
    }
}
