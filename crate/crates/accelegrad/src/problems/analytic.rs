//! Small closed-form objectives used for calibration and testing.

use crate::linalg::{Ball, DenseVector};
use crate::oracles::Objective;

/// `f(x) = 0.5 ||x||^2`
#[derive(Clone, Debug)]
pub struct HalfSquaredNorm {
    dim: usize,
}

impl HalfSquaredNorm {
    pub fn new(dim: usize) -> Self {
        HalfSquaredNorm { dim }
    }
}

impl Objective for HalfSquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DenseVector) -> f64 {
        0.5 * x.norm2_sq()
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        x.clone()
    }

    fn gradient_bound(&self, ball: &Ball) -> Option<f64> {
        Some(ball.center().norm2() + ball.radius())
    }
}

/// `f(x) = sum_i |x_i|`, with subgradient 0 at each kink.
#[derive(Clone, Debug)]
pub struct AbsSum {
    dim: usize,
}

impl AbsSum {
    pub fn new(dim: usize) -> Self {
        AbsSum { dim }
    }
}

impl Objective for AbsSum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DenseVector) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        DenseVector::from_fn(self.dim, |i| {
            let v = x[i];
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
    }

    fn gradient_bound(&self, _ball: &Ball) -> Option<f64> {
        Some((self.dim as f64).sqrt())
    }
}

/// `f(x) = c . x`
#[derive(Clone, Debug)]
pub struct Linear {
    coefficients: DenseVector,
}

impl Linear {
    pub fn new(coefficients: DenseVector) -> Self {
        Linear { coefficients }
    }
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.coefficients.dim()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        self.coefficients.dot(x)
    }

    fn subgradient(&self, _x: &DenseVector) -> DenseVector {
        self.coefficients.clone()
    }

    fn gradient_bound(&self, _ball: &Ball) -> Option<f64> {
        Some(self.coefficients.norm2())
    }
}
