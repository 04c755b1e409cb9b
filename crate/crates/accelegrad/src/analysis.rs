//! Numeric oracles for the scalar inequalities behind the step-size
//! analysis, and empirical convergence-rate estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::oracles::Objective;

/// Suboptimality values at or below this are treated as numerical noise
/// and excluded from rate fits.
pub const SUBOPT_NOISE_FLOOR: f64 = 1e-13;

/// Minimum usable records for a rate fit.
pub const MIN_FIT_POINTS: usize = 10;

/// Additive floating-point slack for asserting proved inequalities.
pub fn inequality_slack(rhs: f64) -> f64 {
    1e-12 * (1.0 + rhs.abs())
}

/// For nonnegative `a_i`, returns
/// `(sqrt(sum a), sum a_i / sqrt(prefix_i), 2 sqrt(sum a))`.
///
/// The middle sum sandwiches between the outer terms; prefix sums that are
/// still zero contribute 0.
pub fn sqrt_sum_sandwich(a: &[f64]) -> Result<(f64, f64, f64)> {
    validate_nonnegative(a)?;
    let total: f64 = a.iter().sum();
    let mut prefix = 0.0;
    let mut mid = 0.0;
    for &v in a {
        prefix += v;
        if prefix > 0.0 {
            mid += v / prefix.sqrt();
        }
    }
    Ok((total.sqrt(), mid, 2.0 * total.sqrt()))
}

/// For nonnegative `a_i`, returns
/// `(sum a_i / (1 + prefix_i), 1 + ln(1 + sum a))`; the left side never
/// exceeds the right.
pub fn log_sum_bound(a: &[f64]) -> Result<(f64, f64)> {
    validate_nonnegative(a)?;
    let total: f64 = a.iter().sum();
    let mut prefix = 0.0;
    let mut lhs = 0.0;
    for &v in a {
        prefix += v;
        lhs += v / (1.0 + prefix);
    }
    Ok((lhs, 1.0 + total.ln_1p()))
}

fn validate_nonnegative(a: &[f64]) -> Result<()> {
    if let Some(v) = a.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "sequence entries must be nonnegative and finite, found {v}"
        )));
    }
    Ok(())
}

/// Gradient-norm bound for smooth functions:
/// returns `(||grad F(x)||^2, 2 beta (F(x) - f_star))`; for a convex
/// `beta`-smooth `F` with minimum `f_star` the left side never exceeds
/// the right.
pub fn smooth_grad_bound_check(
    objective: &dyn Objective,
    x: &DenseVector,
    f_star: f64,
    beta: f64,
) -> (f64, f64) {
    let (value, grad) = objective.value_and_subgradient(x);
    (grad.norm2_sq(), 2.0 * beta * (value - f_star))
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
pub fn power_iteration_lambda_max(
    apply: &dyn Fn(&DenseVector) -> DenseVector,
    dim: usize,
    max_iters: usize,
    rel_tol: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DenseVector::from_fn(dim, |_| rng.sample::<f64, _>(StandardNormal));
    let norm = v.norm2();
    if norm == 0.0 {
        return 0.0;
    }
    v.scale(1.0 / norm);
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = apply(&v);
        let next = v.dot(&w);
        let w_norm = w.norm2();
        if w_norm == 0.0 {
            return 0.0;
        }
        v = w.scaled(1.0 / w_norm);
        if (next - lambda).abs() <= rel_tol * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Central-difference gradient estimate with per-coordinate step
/// `h * (1 + |x_j|)`. Independent of the analytic subgradient path.
pub fn finite_difference_gradient(
    objective: &dyn Objective,
    x: &DenseVector,
    h: f64,
) -> DenseVector {
    DenseVector::from_fn(objective.dim(), |j| {
        let step = h * (1.0 + x[j].abs());
        let bump = DenseVector::from_fn(objective.dim(), |k| if k == j { step } else { 0.0 });
        let mut xp = x.clone();
        xp.add_scaled(1.0, &bump);
        let mut xm = x.clone();
        xm.add_scaled(-1.0, &bump);
        (objective.value(&xp) - objective.value(&xm)) / (2.0 * step)
    })
}

/// Least-squares line through `(log t, log suboptimality)`.
#[derive(Clone, Copy, Debug)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Goodness of fit in `[0, 1]`.
    pub r2: f64,
    pub window: (f64, f64),
}

/// Fits a log-log rate line to `(iteration, suboptimality)` points inside
/// the window, excluding noise-floor values. Errors when fewer than
/// [`MIN_FIT_POINTS`] usable points remain.
pub fn fit_rate_slope(points: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (t_min, t_max) = window;
    if t_min.is_nan() || t_max.is_nan() || t_min >= t_max {
        return Err(Error::InvalidArgument(format!(
            "invalid window [{t_min}, {t_max}]"
        )));
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(t, s)| *t >= t_min && *t <= t_max && *s >= SUBOPT_NOISE_FLOOR)
        .map(|(t, s)| (t.ln(), s.ln()))
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs at least {MIN_FIT_POINTS} usable records in the window, found {}",
            usable.len()
        )));
    }

    let n = usable.len() as f64;
    let mean_x = usable.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = usable.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = usable
        .iter()
        .map(|(x, _)| (x - mean_x) * (x - mean_x))
        .sum();
    let sxy: f64 = usable
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "rate fit window has no spread in iteration counts".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = usable
        .iter()
        .map(|(_, y)| (y - mean_y) * (y - mean_y))
        .sum();
    let ss_res: f64 = usable
        .iter()
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        window,
    })
}
