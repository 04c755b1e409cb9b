//! Objective zoo: synthetic p-norm regression, logistic and hinge
//! classification over sparse rows, the matching data generator and
//! loaders, and reference-optimum estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Ball, DenseMatrix, DenseVector, RowMatrix, SparseVector};
use crate::oracles::{FiniteSum, Objective};

pub mod analytic;
mod container;
mod libsvm;
mod reference;

pub use container::{decode_problem, encode_problem, read_problem, write_problem};
pub use libsvm::{load_libsvm, load_libsvm_with_dim, parse_libsvm, parse_libsvm_with_dim};
pub use reference::{reference_optimum, reference_optimum_search, ReferenceOptimum};

/// Residual exponent of the regression objective `||Ax - b||_p^p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PNorm {
    /// Non-smooth absolute-residual objective.
    One,
    /// Smooth squared-residual objective.
    Two,
}

impl PNorm {
    pub fn from_exponent(p: u64) -> Result<PNorm> {
        match p {
            1 => Ok(PNorm::One),
            2 => Ok(PNorm::Two),
            other => Err(Error::InvalidArgument(format!(
                "unsupported residual exponent {other}; expected 1 or 2"
            ))),
        }
    }

    pub fn exponent(self) -> u64 {
        match self {
            PNorm::One => 1,
            PNorm::Two => 2,
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Finite-sum regression objective `F(x) = sum_i |a_i . x - b_i|^p`.
#[derive(Clone, Debug)]
pub struct RegressionProblem {
    a: RowMatrix,
    b: Vec<f64>,
    p: PNorm,
    x_natural: Option<DenseVector>,
}

impl RegressionProblem {
    pub fn new(a: RowMatrix, b: Vec<f64>, p: PNorm) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.len(),
            });
        }
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "regression problem needs at least one row and one column".into(),
            ));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("regression targets".into()));
        }
        Ok(RegressionProblem {
            a,
            b,
            p,
            x_natural: None,
        })
    }

    pub fn with_planted_point(mut self, x_natural: DenseVector) -> Result<Self> {
        if x_natural.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x_natural.dim(),
            });
        }
        self.x_natural = Some(x_natural);
        Ok(self)
    }

    /// Synthetic instance: `A` and the planted point have i.i.d. standard
    /// normal entries, targets are `A x_nat + noise` with noise variance
    /// `sigma2`. Deterministic for a fixed seed.
    pub fn generate(n: usize, d: usize, sigma2: f64, p: PNorm, seed: u64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(
                "generated instance needs n >= 1 and d >= 1".into(),
            ));
        }
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be nonnegative, got {sigma2}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            data.push(rng.sample::<f64, _>(StandardNormal));
        }
        let a = DenseMatrix::new(n, d, data)?;
        let x_natural = DenseVector::from_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
        let noise_scale = sigma2.sqrt();
        let mut b = Vec::with_capacity(n);
        for i in 0..n {
            let clean: f64 = a
                .row(i)
                .iter()
                .zip(x_natural.iter())
                .map(|(aij, xj)| aij * xj)
                .sum();
            b.push(clean + noise_scale * rng.sample::<f64, _>(StandardNormal));
        }
        Ok(RegressionProblem {
            a: RowMatrix::Dense(a),
            b,
            p,
            x_natural: Some(x_natural),
        })
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn p(&self) -> PNorm {
        self.p
    }

    pub fn matrix(&self) -> &RowMatrix {
        &self.a
    }

    pub fn targets(&self) -> &[f64] {
        &self.b
    }

    pub fn planted_point(&self) -> Option<&DenseVector> {
        self.x_natural.as_ref()
    }

    fn residual(&self, i: usize, x: &DenseVector) -> f64 {
        self.a.row_dot(i, x) - self.b[i]
    }

    /// `A^T (A v)`, used by the normal-equation solver and the largest
    /// eigenvalue estimator.
    pub fn normal_matvec(&self, v: &DenseVector) -> DenseVector {
        let mut out = DenseVector::zeros(self.dim());
        for i in 0..self.nrows() {
            let r = self.a.row_dot(i, v);
            self.a.row_add_scaled(i, r, &mut out);
        }
        out
    }

    /// `A^T b`
    pub fn normal_rhs(&self) -> DenseVector {
        let mut out = DenseVector::zeros(self.dim());
        for i in 0..self.nrows() {
            self.a.row_add_scaled(i, self.b[i], &mut out);
        }
        out
    }

    fn accumulate(&self, x: &DenseVector, subset: &[usize], scale: f64) -> (f64, DenseVector) {
        let mut value = 0.0;
        let mut grad = DenseVector::zeros(self.dim());
        for &i in subset {
            let r = self.residual(i, x);
            match self.p {
                PNorm::Two => {
                    value += r * r;
                    self.a.row_add_scaled(i, 2.0 * scale * r, &mut grad);
                }
                PNorm::One => {
                    value += r.abs();
                    let s = sign(r);
                    if s != 0.0 {
                        self.a.row_add_scaled(i, scale * s, &mut grad);
                    }
                }
            }
        }
        (scale * value, grad)
    }
}

impl Objective for RegressionProblem {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let mut value = 0.0;
        for i in 0..self.nrows() {
            let r = self.residual(i, x);
            value += match self.p {
                PNorm::Two => r * r,
                PNorm::One => r.abs(),
            };
        }
        value
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        self.value_and_subgradient(x).1
    }

    fn value_and_subgradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        let all: Vec<usize> = (0..self.nrows()).collect();
        self.accumulate(x, &all, 1.0)
    }

    fn full_eval_cost(&self) -> u64 {
        self.nrows() as u64
    }
}

impl FiniteSum for RegressionProblem {
    fn num_terms(&self) -> usize {
        self.nrows()
    }

    fn subset_value_and_subgradient(
        &self,
        x: &DenseVector,
        subset: &[usize],
    ) -> Result<(f64, DenseVector)> {
        if subset.is_empty() {
            return Err(Error::InvalidArgument("empty minibatch subset".into()));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.nrows()) {
            return Err(Error::InvalidArgument(format!(
                "subset index {bad} out of bounds for {} rows",
                self.nrows()
            )));
        }
        let scale = self.nrows() as f64 / subset.len() as f64;
        Ok(self.accumulate(x, subset, scale))
    }
}

/// Loss applied to the classification margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// `log(1 + exp(-y m))`, smooth.
    Logistic,
    /// `max(0, 1 - y m)`, non-smooth.
    Hinge,
}

/// `log(1 + exp(u))` without overflow.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// Sparse-row binary classification dataset with +-1 labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub rows: Vec<SparseVector>,
    pub labels: Vec<f64>,
    pub dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Finite-sum classification objective
/// `F(x) = sum_i loss(y_i, a_i . x) + (l2/2) ||x||^2`.
#[derive(Clone, Debug)]
pub struct ClassificationProblem {
    rows: Vec<SparseVector>,
    labels: Vec<f64>,
    loss: LossKind,
    l2: f64,
    dim: usize,
}

impl ClassificationProblem {
    pub fn new(rows: Vec<SparseVector>, labels: Vec<f64>, loss: LossKind, l2: f64) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument(
                "classification problem needs at least one row".into(),
            ));
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument(
                "classification labels must be +1 or -1".into(),
            ));
        }
        if !(l2.is_finite() && l2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "l2 regularization must be nonnegative, got {l2}"
            )));
        }
        let dim = rows[0].dim();
        if rows.iter().any(|r| r.dim() != dim) {
            return Err(Error::InvalidArgument(
                "classification rows have inconsistent dimension".into(),
            ));
        }
        Ok(ClassificationProblem {
            rows,
            labels,
            loss,
            l2,
            dim,
        })
    }

    pub fn from_dataset(dataset: Dataset, loss: LossKind, l2: f64) -> Result<Self> {
        ClassificationProblem::new(dataset.rows, dataset.labels, loss, l2)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// `a_i . x`
    pub fn margin(&self, i: usize, x: &DenseVector) -> f64 {
        self.rows[i].dot(x)
    }

    /// Loss value and the margin-derivative coefficient for one row.
    fn term(&self, i: usize, x: &DenseVector) -> (f64, f64) {
        let margin = self.rows[i].dot(x);
        let y = self.labels[i];
        match self.loss {
            LossKind::Logistic => {
                let value = softplus(-y * margin);
                // d/dm log(1 + exp(-y m)) = -y / (1 + exp(y m))
                let coef = -y / (1.0 + (y * margin).exp());
                (value, coef)
            }
            LossKind::Hinge => {
                let slack = 1.0 - y * margin;
                if slack > 0.0 {
                    (slack, -y)
                } else {
                    // At and past the kink the chosen subgradient is 0.
                    (0.0, 0.0)
                }
            }
        }
    }

    fn accumulate(&self, x: &DenseVector, subset: &[usize], scale: f64) -> (f64, DenseVector) {
        let mut value = 0.0;
        let mut grad = DenseVector::zeros(self.dim);
        for &i in subset {
            let (v, coef) = self.term(i, x);
            value += v;
            if coef != 0.0 {
                self.rows[i].axpy_into(scale * coef, &mut grad);
            }
        }
        value *= scale;
        if self.l2 > 0.0 {
            value += 0.5 * self.l2 * x.norm2_sq();
            grad.add_scaled(self.l2, x);
        }
        (value, grad)
    }
}

impl Objective for ClassificationProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DenseVector) -> f64 {
        self.value_and_subgradient(x).0
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        self.value_and_subgradient(x).1
    }

    fn value_and_subgradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        let all: Vec<usize> = (0..self.nrows()).collect();
        self.accumulate(x, &all, 1.0)
    }

    fn full_eval_cost(&self) -> u64 {
        self.nrows() as u64
    }

    fn gradient_bound(&self, ball: &Ball) -> Option<f64> {
        // Margin-derivative magnitude is at most 1 for both losses.
        let rows_bound: f64 = self.rows.iter().map(|r| r.norm2()).sum();
        let reg_bound = self.l2 * (ball.center().norm2() + ball.radius());
        Some(rows_bound + reg_bound)
    }
}

impl FiniteSum for ClassificationProblem {
    fn num_terms(&self) -> usize {
        self.nrows()
    }

    fn subset_value_and_subgradient(
        &self,
        x: &DenseVector,
        subset: &[usize],
    ) -> Result<(f64, DenseVector)> {
        if subset.is_empty() {
            return Err(Error::InvalidArgument("empty minibatch subset".into()));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= self.nrows()) {
            return Err(Error::InvalidArgument(format!(
                "subset index {bad} out of bounds for {} rows",
                self.nrows()
            )));
        }
        let scale = self.nrows() as f64 / subset.len() as f64;
        Ok(self.accumulate(x, subset, scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pairwise_sum;
    use proptest::prelude::*;

    fn identity_regression(p: PNorm, b: Vec<f64>) -> RegressionProblem {
        let d = b.len();
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        let a = DenseMatrix::new(d, d, data).unwrap();
        RegressionProblem::new(RowMatrix::Dense(a), b, p).unwrap()
    }

    #[test]
    fn squared_loss_on_identity() {
        let prob = identity_regression(PNorm::Two, vec![0.0, 0.0]);
        let x = DenseVector::new(vec![1.0, 1.0]).unwrap();
        let (v, g) = prob.value_and_subgradient(&x);
        assert_eq!(v, 2.0);
        assert_eq!(g.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn absolute_loss_kink_gives_zero_subgradient() {
        let prob = identity_regression(PNorm::One, vec![0.0]);
        let x = DenseVector::zeros(1);
        let (v, g) = prob.value_and_subgradient(&x);
        assert_eq!(v, 0.0);
        assert_eq!(g.as_slice(), &[0.0]);
    }

    #[test]
    fn generation_is_deterministic_and_planted() {
        let a = RegressionProblem::generate(8, 3, 1e-2, PNorm::Two, 42).unwrap();
        let b = RegressionProblem::generate(8, 3, 1e-2, PNorm::Two, 42).unwrap();
        match (a.matrix(), b.matrix()) {
            (RowMatrix::Dense(ma), RowMatrix::Dense(mb)) => assert_eq!(ma, mb),
            _ => panic!("generated matrices should be dense"),
        }
        assert_eq!(a.targets(), b.targets());
        assert_eq!(a.planted_point(), b.planted_point());

        let c = RegressionProblem::generate(8, 3, 1e-2, PNorm::Two, 43).unwrap();
        assert_ne!(a.targets(), c.targets());
    }

    #[test]
    fn benchmark_scale_generation_has_expected_shape() {
        let prob = RegressionProblem::generate(2000, 500, 1e-2, PNorm::Two, 7).unwrap();
        assert_eq!(prob.nrows(), 2000);
        assert_eq!(prob.dim(), 500);
        assert_eq!(prob.planted_point().unwrap().dim(), 500);
    }

    #[test]
    fn noiseless_instance_is_exact_at_planted_point() {
        for p in [PNorm::One, PNorm::Two] {
            let prob = RegressionProblem::generate(10, 4, 0.0, p, 7).unwrap();
            let x = prob.planted_point().unwrap().clone();
            assert!(prob.value(&x).abs() < 1e-18);
        }
    }

    #[test]
    fn full_subset_matches_exact_evaluation() {
        let prob = RegressionProblem::generate(12, 5, 1e-2, PNorm::Two, 3).unwrap();
        let x = DenseVector::from_fn(5, |i| 0.3 * i as f64 - 0.7);
        let all: Vec<usize> = (0..12).collect();
        let (v_sub, g_sub) = prob.subset_value_and_subgradient(&x, &all).unwrap();
        let (v_full, g_full) = prob.value_and_subgradient(&x);
        assert_eq!(v_sub, v_full);
        assert_eq!(g_sub, g_full);
    }

    #[test]
    fn empty_subset_is_rejected() {
        let prob = RegressionProblem::generate(4, 2, 0.0, PNorm::Two, 0).unwrap();
        let x = DenseVector::zeros(2);
        assert!(prob.subset_value_and_subgradient(&x, &[]).is_err());
        assert!(prob.subset_value_and_subgradient(&x, &[9]).is_err());
    }

    fn tiny_classification(loss: LossKind, l2: f64) -> ClassificationProblem {
        let rows = vec![
            SparseVector::new([(0, 1.0), (2, -2.0)], 3).unwrap(),
            SparseVector::new([(1, 0.5)], 3).unwrap(),
            SparseVector::new([(0, -1.5), (1, 1.0), (2, 0.25)], 3).unwrap(),
        ];
        ClassificationProblem::new(rows, vec![1.0, -1.0, 1.0], loss, l2).unwrap()
    }

    #[test]
    fn logistic_value_at_origin() {
        let prob = tiny_classification(LossKind::Logistic, 0.0);
        let x = DenseVector::zeros(3);
        let expected = 3.0 * (2.0f64).ln();
        assert!((prob.value(&x) - expected).abs() < 1e-14);
    }

    #[test]
    fn hinge_kink_uses_zero_subgradient() {
        // Row with margin exactly 1: slack = 0, the kink.
        let rows = vec![SparseVector::new([(0, 1.0)], 1).unwrap()];
        let prob = ClassificationProblem::new(rows, vec![1.0], LossKind::Hinge, 0.0).unwrap();
        let x = DenseVector::new(vec![1.0]).unwrap();
        let (v, g) = prob.value_and_subgradient(&x);
        assert_eq!(v, 0.0);
        assert_eq!(g.as_slice(), &[0.0]);
    }

    #[test]
    fn classification_rejects_bad_labels() {
        let rows = vec![SparseVector::new([(0, 1.0)], 1).unwrap()];
        assert!(ClassificationProblem::new(rows, vec![2.0], LossKind::Hinge, 0.0).is_err());
    }

    #[test]
    fn gradient_norms_respect_certified_bound() {
        let prob = tiny_classification(LossKind::Logistic, 0.1);
        let ball = Ball::new(DenseVector::zeros(3), 2.0).unwrap();
        let bound = prob.gradient_bound(&ball).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut x = DenseVector::from_fn(3, |_| rng.sample::<f64, _>(StandardNormal));
            let norm = x.norm2();
            if norm > 0.0 {
                let r: f64 = rng.random_range(0.0..2.0);
                x.scale(r / norm);
            }
            assert!(prob.subgradient(&x).norm2() <= bound * (1.0 + 1e-12));
        }
    }

    use crate::analysis::finite_difference_gradient;

    #[test]
    fn smooth_gradients_match_finite_differences() {
        let prob = RegressionProblem::generate(5, 3, 1e-2, PNorm::Two, 17).unwrap();
        let x = DenseVector::new(vec![0.3, -1.1, 0.8]).unwrap();
        let g = prob.subgradient(&x);
        let fd = finite_difference_gradient(&prob, &x, 1e-6);
        for j in 0..3 {
            let rel = (g[j] - fd[j]).abs() / (1.0 + g[j].abs());
            assert!(rel < 1e-6, "coordinate {j}: {} vs {}", g[j], fd[j]);
        }

        let cls = tiny_classification(LossKind::Logistic, 0.05);
        let x = DenseVector::new(vec![0.2, -0.4, 0.9]).unwrap();
        let g = cls.subgradient(&x);
        let fd = finite_difference_gradient(&cls, &x, 1e-6);
        for j in 0..3 {
            let rel = (g[j] - fd[j]).abs() / (1.0 + g[j].abs());
            assert!(rel < 1e-6);
        }
    }

    #[test]
    fn nonsmooth_gradients_match_away_from_kinks() {
        let prob = RegressionProblem::generate(5, 3, 1e-2, PNorm::One, 23).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut checked = 0;
        while checked < 20 {
            let x = DenseVector::from_fn(3, |_| rng.sample::<f64, _>(StandardNormal));
            let margin = (0..prob.nrows())
                .map(|i| (prob.a.row_dot(i, &x) - prob.targets()[i]).abs())
                .fold(f64::INFINITY, f64::min);
            if margin < 1e-3 {
                continue;
            }
            let g = prob.subgradient(&x);
            let fd = finite_difference_gradient(&prob, &x, 1e-7);
            for j in 0..3 {
                let rel = (g[j] - fd[j]).abs() / (1.0 + g[j].abs());
                assert!(rel < 1e-6);
            }
            checked += 1;
        }
    }

    #[test]
    fn minibatch_scaling_reduces_to_mean_of_scaled_terms() {
        let prob = RegressionProblem::generate(6, 2, 1e-2, PNorm::Two, 2).unwrap();
        let x = DenseVector::new(vec![0.4, -0.2]).unwrap();
        let (v, _) = prob.subset_value_and_subgradient(&x, &[1, 4]).unwrap();
        let terms: Vec<f64> = [1usize, 4]
            .iter()
            .map(|&i| {
                let r = prob.a.row_dot(i, &x) - prob.targets()[i];
                r * r
            })
            .collect();
        let expected = 3.0 * pairwise_sum(&terms);
        assert!((v - expected).abs() < 1e-12 * (1.0 + expected.abs()));
    }

    proptest! {
        #[test]
        fn objective_is_convex_along_segments(
            seed in 0u64..50,
            xs in proptest::collection::vec(-2.0..2.0f64, 4),
            ys in proptest::collection::vec(-2.0..2.0f64, 4),
            lambda in 0.0..1.0f64,
        ) {
            for p in [PNorm::One, PNorm::Two] {
                let prob = RegressionProblem::generate(6, 4, 1e-2, p, seed).unwrap();
                let x = DenseVector::new(xs.clone()).unwrap();
                let y = DenseVector::new(ys.clone()).unwrap();
                let mut mid = x.scaled(lambda);
                mid.add_scaled(1.0 - lambda, &y);
                let lhs = prob.value(&mid);
                let rhs = lambda * prob.value(&x) + (1.0 - lambda) * prob.value(&y);
                prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()));
            }
        }
    }
}
