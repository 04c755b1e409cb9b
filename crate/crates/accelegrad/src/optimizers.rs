//! The two optimizer state machines and the run driver.
//!
//! Both methods consume only the feasible-ball diameter `D`; neither sees
//! a smoothness constant. AcceleGrad linearly couples a projected
//! mirror-descent-like sequence `z` with a gradient-step sequence `y`,
//! queries the coupled point, and adapts its step size from importance-
//! weighted squared gradient norms:
//!
//! ```text
//! eta_t = 2 D / sqrt(G^2 + sum_{tau<=t} alpha_tau^2 ||g_tau||^2)
//! ```
//!
//! AdaGrad is the scalar-step variant: `eta_t = D / sqrt(2 sum ||g||^2)`
//! with uniform averaging of the queried points.

use crate::error::{Error, Result};
use crate::linalg::{Ball, DenseVector};
use crate::oracles::Oracle;
use crate::trace::{Cadence, Trace, TraceRecord};

/// Importance weight `alpha_t`: 1 for `t <= 2`, then `(t + 1) / 4`.
pub fn importance_weight(t: u64) -> f64 {
    if t <= 2 {
        1.0
    } else {
        (t + 1) as f64 / 4.0
    }
}

/// AcceleGrad step-size schedule and variant flags.
#[derive(Clone, Copy, Debug)]
pub struct AccelSchedule {
    diameter: f64,
    grad_bound: f64,
    project_y: bool,
    skip_projection: bool,
}

impl AccelSchedule {
    /// Schedule with gradient bound 0 (the smooth-case default) and the
    /// standard projected-`z` update.
    pub fn new(diameter: f64) -> Result<Self> {
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diameter must be positive and finite, got {diameter}"
            )));
        }
        Ok(AccelSchedule {
            diameter,
            grad_bound: 0.0,
            project_y: false,
            skip_projection: false,
        })
    }

    /// Seeds the step-size denominator with `G^2`; needed only for
    /// non-smooth objectives where a Lipschitz bound is available.
    pub fn with_grad_bound(mut self, grad_bound: f64) -> Result<Self> {
        if !(grad_bound.is_finite() && grad_bound >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gradient bound must be nonnegative, got {grad_bound}"
            )));
        }
        self.grad_bound = grad_bound;
        Ok(self)
    }

    /// Constrained variant: also project the `y` sequence onto the ball.
    pub fn with_project_y(mut self, project_y: bool) -> Result<Self> {
        self.project_y = project_y;
        self.check_flags()?;
        Ok(self)
    }

    /// Projection-free variant: leave the `z` sequence unprojected.
    pub fn with_skip_projection(mut self, skip_projection: bool) -> Result<Self> {
        self.skip_projection = skip_projection;
        self.check_flags()?;
        Ok(self)
    }

    fn check_flags(&self) -> Result<()> {
        if self.project_y && self.skip_projection {
            return Err(Error::InvalidArgument(
                "project_y and skip_projection are mutually exclusive".into(),
            ));
        }
        Ok(())
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    pub fn project_y(&self) -> bool {
        self.project_y
    }

    pub fn skip_projection(&self) -> bool {
        self.skip_projection
    }

    /// Step size `2 D / sqrt(s)` where `s` already includes the current
    /// step's weighted squared gradient norm. `None` signals the
    /// zero-denominator case (possible only with `G = 0` and all
    /// gradients so far zero), which the step handler turns into a
    /// no-movement step.
    pub fn learning_rate(&self, weighted_sq_sum: f64) -> Option<f64> {
        if weighted_sq_sum <= 0.0 {
            None
        } else {
            Some(2.0 * self.diameter / weighted_sq_sum.sqrt())
        }
    }
}

/// Uniform interface the run driver uses to advance either method.
pub trait Optimizer {
    fn step(&mut self, oracle: &mut dyn Oracle) -> Result<()>;

    /// Completed steps.
    fn steps(&self) -> u64;

    /// The averaged output covered by the error guarantees.
    fn averaged_output(&self) -> Result<DenseVector>;

    /// The latest non-averaged iterate (`y_t` for AcceleGrad, `x_t` for
    /// AdaGrad).
    fn last_iterate(&self) -> &DenseVector;

    /// Step size used by the most recent step; 0 before the first step
    /// and on degenerate zero-gradient steps.
    fn last_learning_rate(&self) -> f64;

    /// Running squared-gradient statistic (the trace `S` column).
    fn grad_stat(&self) -> f64;
}

/// Adaptive accelerated method with linear coupling.
#[derive(Clone, Debug)]
pub struct AcceleGrad {
    schedule: AccelSchedule,
    ball: Ball,
    t: u64,
    x: DenseVector,
    y: DenseVector,
    z: DenseVector,
    /// `G^2 + sum alpha_tau^2 ||g_tau||^2`; nondecreasing.
    sq_sum: f64,
    /// `sum alpha_tau`
    weight_sum: f64,
    /// `sum alpha_tau * y_{tau+1}`, the unnormalized averaged output.
    y_avg_acc: DenseVector,
    last_eta: f64,
}

impl AcceleGrad {
    pub fn new(x0: DenseVector, ball: Ball, schedule: AccelSchedule) -> Result<Self> {
        schedule.check_flags()?;
        if x0.dim() != ball.dim() {
            return Err(Error::DimensionMismatch {
                expected: ball.dim(),
                found: x0.dim(),
            });
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite("initial point".into()));
        }
        if !ball.contains(&x0, 1e-12) {
            return Err(Error::InvalidArgument(
                "initial point must lie in the feasible ball".into(),
            ));
        }
        let dim = x0.dim();
        Ok(AcceleGrad {
            schedule,
            ball,
            t: 0,
            y: x0.clone(),
            z: x0.clone(),
            x: x0,
            sq_sum: schedule.grad_bound * schedule.grad_bound,
            weight_sum: 0.0,
            y_avg_acc: DenseVector::zeros(dim),
            last_eta: 0.0,
        })
    }

    pub fn x(&self) -> &DenseVector {
        &self.x
    }

    pub fn y(&self) -> &DenseVector {
        &self.y
    }

    pub fn z(&self) -> &DenseVector {
        &self.z
    }

    pub fn weighted_sq_sum(&self) -> f64 {
        self.sq_sum
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn schedule(&self) -> &AccelSchedule {
        &self.schedule
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }
}

impl Optimizer for AcceleGrad {
    fn step(&mut self, oracle: &mut dyn Oracle) -> Result<()> {
        let alpha = importance_weight(self.t);
        let tau = 1.0 / alpha;
        debug_assert!(tau > 0.0 && tau <= 1.0);

        // x_{t+1} = tau z_t + (1 - tau) y_t; exactly z_t while alpha = 1.
        let x_next = if tau == 1.0 {
            self.z.clone()
        } else {
            let mut x = self.z.scaled(tau);
            x.add_scaled(1.0 - tau, &self.y);
            x
        };

        let answer = oracle.query(&x_next)?;
        let g = answer.subgradient;
        if g.dim() != x_next.dim() {
            return Err(Error::DimensionMismatch {
                expected: x_next.dim(),
                found: g.dim(),
            });
        }

        self.sq_sum += alpha * alpha * g.norm2_sq();
        match self.schedule.learning_rate(self.sq_sum) {
            None => {
                // Zero gradient so far: any step size moves nowhere, so
                // carry the state forward rather than fault.
                self.x = x_next;
                self.last_eta = 0.0;
                self.y_avg_acc.add_scaled(alpha, &self.y);
                self.weight_sum += alpha;
                self.t += 1;
                Ok(())
            }
            Some(eta) => {
                let mut z_next = self.z.clone();
                z_next.add_scaled(-alpha * eta, &g);
                if !self.schedule.skip_projection {
                    z_next = self.ball.project(&z_next);
                }

                let mut y_next = x_next.clone();
                y_next.add_scaled(-eta, &g);
                if self.schedule.project_y {
                    y_next = self.ball.project(&y_next);
                } else {
                    debug_assert!({
                        let lhs = y_next.distance(&x_next);
                        let rhs = eta * g.norm2();
                        (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs)
                    });
                }
                if !(y_next.is_finite() && z_next.is_finite()) {
                    return Err(Error::NonFinite("optimizer state after step".into()));
                }
                debug_assert!(self.schedule.skip_projection || self.ball.contains(&z_next, 1e-12));

                self.y_avg_acc.add_scaled(alpha, &y_next);
                self.weight_sum += alpha;
                self.x = x_next;
                self.y = y_next;
                self.z = z_next;
                self.last_eta = eta;
                self.t += 1;
                Ok(())
            }
        }
    }

    fn steps(&self) -> u64 {
        self.t
    }

    fn averaged_output(&self) -> Result<DenseVector> {
        if self.weight_sum <= 0.0 {
            return Err(Error::NoSteps);
        }
        Ok(self.y_avg_acc.scaled(1.0 / self.weight_sum))
    }

    fn last_iterate(&self) -> &DenseVector {
        &self.y
    }

    fn last_learning_rate(&self) -> f64 {
        self.last_eta
    }

    fn grad_stat(&self) -> f64 {
        self.sq_sum
    }
}

/// Scalar-step adaptive gradient method with uniform iterate averaging.
#[derive(Clone, Debug)]
pub struct AdaGrad {
    ball: Ball,
    /// Scale of the step-size rule; the ball diameter unless decoupled.
    diameter: f64,
    t: u64,
    x: DenseVector,
    /// `sum ||g_tau||^2`; nondecreasing.
    sq_sum: f64,
    /// `sum x_tau` over queried points.
    x_avg_acc: DenseVector,
    last_eta: f64,
}

impl AdaGrad {
    pub fn new(x0: DenseVector, ball: Ball) -> Result<Self> {
        if x0.dim() != ball.dim() {
            return Err(Error::DimensionMismatch {
                expected: ball.dim(),
                found: x0.dim(),
            });
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite("initial point".into()));
        }
        if !ball.contains(&x0, 1e-12) {
            return Err(Error::InvalidArgument(
                "initial point must lie in the feasible ball".into(),
            ));
        }
        let dim = x0.dim();
        let diameter = ball.diameter();
        Ok(AdaGrad {
            ball,
            diameter,
            t: 0,
            x: x0,
            sq_sum: 0.0,
            x_avg_acc: DenseVector::zeros(dim),
            last_eta: 0.0,
        })
    }

    /// Overrides the step-size scale independently of the projection set.
    pub fn with_step_diameter(mut self, diameter: f64) -> Result<Self> {
        if !(diameter.is_finite() && diameter > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diameter must be positive and finite, got {diameter}"
            )));
        }
        self.diameter = diameter;
        Ok(self)
    }

    pub fn x(&self) -> &DenseVector {
        &self.x
    }

    pub fn grad_sq_sum(&self) -> f64 {
        self.sq_sum
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }
}

impl Optimizer for AdaGrad {
    fn step(&mut self, oracle: &mut dyn Oracle) -> Result<()> {
        let answer = oracle.query(&self.x)?;
        let g = answer.subgradient;
        if g.dim() != self.x.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.x.dim(),
                found: g.dim(),
            });
        }

        // The averaged output is over the queried points x_1..x_T, so
        // accumulate before moving.
        self.x_avg_acc.add_scaled(1.0, &self.x);
        self.sq_sum += g.norm2_sq();
        if self.sq_sum <= 0.0 {
            self.last_eta = 0.0;
            self.t += 1;
            return Ok(());
        }

        let eta = self.diameter / (2.0 * self.sq_sum).sqrt();
        let mut x_next = self.x.clone();
        x_next.add_scaled(-eta, &g);
        let x_next = self.ball.project(&x_next);
        if !x_next.is_finite() {
            return Err(Error::NonFinite("optimizer state after step".into()));
        }
        debug_assert!(self.ball.contains(&x_next, 1e-12));
        self.x = x_next;
        self.last_eta = eta;
        self.t += 1;
        Ok(())
    }

    fn steps(&self) -> u64 {
        self.t
    }

    fn averaged_output(&self) -> Result<DenseVector> {
        if self.t == 0 {
            return Err(Error::NoSteps);
        }
        Ok(self.x_avg_acc.scaled(1.0 / self.t as f64))
    }

    fn last_iterate(&self) -> &DenseVector {
        &self.x
    }

    fn last_learning_rate(&self) -> f64 {
        self.last_eta
    }

    fn grad_stat(&self) -> f64 {
        self.sq_sum
    }
}

/// Executes `iterations` steps, recording at the cadence plus the final
/// iterate. `objective_value` is a diagnostic evaluator outside the
/// oracle's evaluation budget.
pub fn run(
    optimizer: &mut dyn Optimizer,
    oracle: &mut dyn Oracle,
    objective_value: &dyn Fn(&DenseVector) -> f64,
    iterations: u64,
    cadence: Cadence,
) -> Result<Trace> {
    if iterations == 0 {
        return Err(Error::InvalidArgument(
            "iteration count must be >= 1".into(),
        ));
    }
    let schedule = cadence.schedule(iterations)?;
    let mut trace = Trace::new();
    let mut prev_eta: Option<f64> = None;

    for step_index in 0..iterations {
        optimizer.step(oracle)?;
        let eta = optimizer.last_learning_rate();
        if eta > 0.0 {
            if let Some(prev) = prev_eta {
                debug_assert!(eta <= prev * (1.0 + 1e-12), "step size must not increase");
            }
            prev_eta = Some(eta);
        }

        let iter = step_index + 1;
        if schedule.should_record(iter, iterations) {
            let averaged = optimizer.averaged_output()?;
            let f_avg = objective_value(&averaged);
            let f_last = objective_value(optimizer.last_iterate());
            if !(f_avg.is_finite() && f_last.is_finite()) {
                return Err(Error::NonFinite("recorded objective value".into()));
            }
            trace.push(TraceRecord {
                iter,
                evals: oracle.evals_consumed(),
                f_avg,
                f_last,
                eta,
                s: optimizer.grad_stat(),
            })?;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pairwise_sum;
    use crate::oracles::Objective;
    use crate::oracles::{ExactOracle, MinibatchOracle, OracleAnswer};
    use crate::problems::analytic::Linear;
    use crate::problems::{PNorm, RegressionProblem};

    #[test]
    fn states_are_sendable_and_problems_shareable() {
        fn assert_send<T: Send>() {}
        fn assert_sync<T: Sync>() {}
        assert_send::<AcceleGrad>();
        assert_send::<AdaGrad>();
        assert_sync::<RegressionProblem>();
        assert_sync::<crate::linalg::Ball>();
    }

    #[test]
    fn importance_weights_match_schedule() {
        assert_eq!(importance_weight(0), 1.0);
        assert_eq!(importance_weight(1), 1.0);
        assert_eq!(importance_weight(2), 1.0);
        assert_eq!(importance_weight(3), 1.0); // (3 + 1) / 4
        assert_eq!(importance_weight(7), 2.0);
        assert_eq!(importance_weight(4), 1.25);
    }

    #[test]
    fn learning_rate_follows_denominator() {
        let schedule = AccelSchedule::new(1.0).unwrap();
        assert_eq!(schedule.learning_rate(1.0), Some(2.0));
        let with_g = AccelSchedule::new(1.0)
            .unwrap()
            .with_grad_bound(1.0)
            .unwrap();
        let eta = with_g.learning_rate(2.0).unwrap();
        assert!((eta - 2.0f64 / 2.0f64.sqrt()).abs() < 1e-12);
        assert!((eta - 1.41421).abs() < 1e-5);
        assert_eq!(schedule.learning_rate(0.0), None);
    }

    #[test]
    fn schedule_rejects_conflicting_flags() {
        let s = AccelSchedule::new(1.0)
            .unwrap()
            .with_project_y(true)
            .unwrap();
        assert!(s.with_skip_projection(true).is_err());
        assert!(AccelSchedule::new(0.0).is_err());
        assert!(AccelSchedule::new(1.0)
            .unwrap()
            .with_grad_bound(-1.0)
            .is_err());
    }

    /// Straight-line scripted trace of the update rule in one dimension,
    /// kept independent of the optimizer implementation.
    fn scripted_constant_gradient_trace(
        diameter: f64,
        gradient: f64,
        steps: usize,
        skip_projection: bool,
    ) -> (Vec<f64>, Vec<f64>, f64, f64) {
        let radius = diameter / 2.0;
        let (mut y, mut z) = (0.0f64, 0.0f64);
        let mut s = 0.0f64;
        let mut acc = 0.0f64;
        let mut w = 0.0f64;
        let mut ys = Vec::new();
        let mut zs = Vec::new();
        for t in 0..steps {
            let alpha = if t <= 2 { 1.0 } else { (t as f64 + 1.0) / 4.0 };
            let tau = 1.0 / alpha;
            let x = tau * z + (1.0 - tau) * y;
            let g = gradient;
            s += alpha * alpha * g * g;
            let eta = 2.0 * diameter / s.sqrt();
            z -= alpha * eta * g;
            if !skip_projection {
                z = z.clamp(-radius, radius);
            }
            y = x - eta * g;
            acc += alpha * y;
            w += alpha;
            ys.push(y);
            zs.push(z);
        }
        (ys, zs, acc, w)
    }

    #[test]
    fn first_step_matches_scripted_trace() {
        // f(x) = x on K = [-1, 1]: constant gradient 1.
        let c = DenseVector::new(vec![1.0]).unwrap();
        let problem = Linear::new(c);
        let ball = Ball::with_diameter(DenseVector::zeros(1), 2.0).unwrap();
        let schedule = AccelSchedule::new(2.0).unwrap();
        let mut opt = AcceleGrad::new(DenseVector::zeros(1), ball, schedule).unwrap();
        let mut oracle = ExactOracle::new(&problem);

        opt.step(&mut oracle).unwrap();
        assert_eq!(opt.x().as_slice(), &[0.0]);
        assert_eq!(opt.weighted_sq_sum(), 1.0);
        assert_eq!(opt.last_learning_rate(), 4.0); // 2 * 2 / sqrt(1)
        assert_eq!(opt.z().as_slice(), &[-1.0]); // projected from -4
        assert_eq!(opt.y().as_slice(), &[-4.0]);
        assert_eq!(opt.weight_sum(), 1.0);
        assert_eq!(opt.averaged_output().unwrap().as_slice(), &[-4.0]);

        // And the next several steps agree with the scripted recurrence.
        let (ys, zs, acc, w) = scripted_constant_gradient_trace(2.0, 1.0, 6, false);
        for t in 1..6 {
            opt.step(&mut oracle).unwrap();
            assert!((opt.y()[0] - ys[t]).abs() < 1e-12, "y at step {t}");
            assert!((opt.z()[0] - zs[t]).abs() < 1e-12, "z at step {t}");
        }
        let out = opt.averaged_output().unwrap();
        assert!((out[0] - acc / w).abs() < 1e-12);
    }

    #[test]
    fn skip_projection_leaves_z_unprojected() {
        let c = DenseVector::new(vec![1.0]).unwrap();
        let problem = Linear::new(c);
        let ball = Ball::with_diameter(DenseVector::zeros(1), 2.0).unwrap();
        let schedule = AccelSchedule::new(2.0)
            .unwrap()
            .with_skip_projection(true)
            .unwrap();
        let mut opt = AcceleGrad::new(DenseVector::zeros(1), ball, schedule).unwrap();
        let mut oracle = ExactOracle::new(&problem);
        opt.step(&mut oracle).unwrap();
        assert_eq!(opt.z().as_slice(), &[-4.0]);
    }

    struct ZeroGradient {
        dim: usize,
    }

    impl Objective for ZeroGradient {
        fn dim(&self) -> usize {
            self.dim
        }
        fn value(&self, _x: &DenseVector) -> f64 {
            0.0
        }
        fn subgradient(&self, _x: &DenseVector) -> DenseVector {
            DenseVector::zeros(self.dim)
        }
    }

    #[test]
    fn zero_gradients_are_a_fixed_point() {
        let ball = Ball::with_diameter(DenseVector::zeros(2), 2.0).unwrap();
        let schedule = AccelSchedule::new(2.0).unwrap();
        let x0 = DenseVector::new(vec![0.25, -0.5]).unwrap();
        let mut opt = AcceleGrad::new(x0.clone(), ball.clone(), schedule).unwrap();
        let mut oracle = ExactOracle::new(ZeroGradient { dim: 2 });
        for _ in 0..5 {
            opt.step(&mut oracle).unwrap();
            assert_eq!(opt.last_learning_rate(), 0.0);
        }
        assert_eq!(opt.averaged_output().unwrap(), x0);
        assert_eq!(opt.steps(), 5);

        let mut ada = AdaGrad::new(x0.clone(), ball).unwrap();
        let mut oracle = ExactOracle::new(ZeroGradient { dim: 2 });
        for _ in 0..5 {
            ada.step(&mut oracle).unwrap();
        }
        assert_eq!(ada.x(), &x0);
        assert_eq!(ada.averaged_output().unwrap(), x0);
    }

    #[test]
    fn output_requires_at_least_one_step() {
        let ball = Ball::with_diameter(DenseVector::zeros(1), 2.0).unwrap();
        let opt = AcceleGrad::new(
            DenseVector::zeros(1),
            ball.clone(),
            AccelSchedule::new(2.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(opt.averaged_output(), Err(Error::NoSteps)));
        let ada = AdaGrad::new(DenseVector::zeros(1), ball).unwrap();
        assert!(matches!(ada.averaged_output(), Err(Error::NoSteps)));
    }

    #[test]
    fn adagrad_first_step_follows_schedule() {
        // Step scale D = 1 inside a large ball, so no projection interferes.
        let ball = Ball::with_diameter(DenseVector::zeros(2), 1000.0).unwrap();
        let mut ada = AdaGrad::new(DenseVector::zeros(2), ball)
            .unwrap()
            .with_step_diameter(1.0)
            .unwrap();
        let c = DenseVector::new(vec![1.0, 0.0]).unwrap();
        let mut oracle = ExactOracle::new(Linear::new(c));
        ada.step(&mut oracle).unwrap();
        assert!((ada.last_learning_rate() - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
        assert!((ada.x()[0] - (-0.70711)).abs() < 1e-5);
        assert_eq!(ada.x()[1], 0.0);
    }

    #[test]
    fn adagrad_step_size_with_norm_five_gradient() {
        let ball = Ball::with_diameter(DenseVector::zeros(2), 1000.0).unwrap();
        let mut ada = AdaGrad::new(DenseVector::zeros(2), ball)
            .unwrap()
            .with_step_diameter(1.0)
            .unwrap();
        let c = DenseVector::new(vec![3.0, 4.0]).unwrap();
        let mut oracle = ExactOracle::new(Linear::new(c));
        ada.step(&mut oracle).unwrap();
        assert!((ada.last_learning_rate() - 1.0 / (2.0f64.sqrt() * 5.0)).abs() < 1e-12);
        assert!((ada.last_learning_rate() - 0.14142).abs() < 1e-5);
    }

    #[test]
    fn averaged_outputs_match_independent_summation() {
        let problem = RegressionProblem::generate(12, 4, 1e-2, PNorm::Two, 5).unwrap();
        let d = 2.0;
        let ball = Ball::with_diameter(DenseVector::zeros(4), d).unwrap();
        let mut opt = AcceleGrad::new(
            DenseVector::zeros(4),
            ball.clone(),
            AccelSchedule::new(d).unwrap(),
        )
        .unwrap();
        let mut oracle = ExactOracle::new(&problem);
        let mut weights = Vec::new();
        let mut ys: Vec<Vec<f64>> = Vec::new();
        for t in 0..5u64 {
            weights.push(importance_weight(t));
            opt.step(&mut oracle).unwrap();
            ys.push(opt.y().as_slice().to_vec());
        }
        assert_eq!(weights, vec![1.0, 1.0, 1.0, 1.0, 1.25]);
        let w_total: f64 = weights.iter().sum();
        let out = opt.averaged_output().unwrap();
        for j in 0..4 {
            let terms: Vec<f64> = ys.iter().zip(&weights).map(|(y, w)| w * y[j]).collect();
            let expected = pairwise_sum(&terms) / w_total;
            assert!((out[j] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }

        // AdaGrad: mean of 100 queried points against pairwise summation.
        let mut ada = AdaGrad::new(DenseVector::zeros(4), ball).unwrap();
        let mut oracle = ExactOracle::new(&problem);
        let mut xs: Vec<Vec<f64>> = Vec::new();
        for _ in 0..100 {
            xs.push(ada.x().as_slice().to_vec());
            ada.step(&mut oracle).unwrap();
        }
        let out = ada.averaged_output().unwrap();
        for j in 0..4 {
            let col: Vec<f64> = xs.iter().map(|x| x[j]).collect();
            let expected = pairwise_sum(&col) / 100.0;
            assert!((out[j] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn coupling_keeps_x_on_segment_and_z_in_ball() {
        let problem = RegressionProblem::generate(20, 6, 1e-2, PNorm::One, 8).unwrap();
        let d = 3.0;
        let ball = Ball::with_diameter(DenseVector::zeros(6), d).unwrap();
        let mut opt = AcceleGrad::new(
            DenseVector::zeros(6),
            ball.clone(),
            AccelSchedule::new(d).unwrap(),
        )
        .unwrap();
        let mut oracle = ExactOracle::new(&problem);
        let mut prev_eta = f64::INFINITY;
        for t in 0..50u64 {
            let z_before = opt.z().clone();
            let y_before = opt.y().clone();
            opt.step(&mut oracle).unwrap();

            // x_{t+1} = tau z_t + (1 - tau) y_t with tau in (0, 1].
            let tau = 1.0 / importance_weight(t);
            let mut expected = z_before.scaled(tau);
            expected.add_scaled(1.0 - tau, &y_before);
            for j in 0..6 {
                assert!((opt.x()[j] - expected[j]).abs() <= 1e-12 * (1.0 + expected[j].abs()));
            }
            if t <= 2 {
                assert_eq!(opt.x(), &z_before);
            }

            assert!(ball.contains(opt.z(), 1e-12));
            let eta = opt.last_learning_rate();
            assert!(eta > 0.0);
            assert!(eta <= prev_eta * (1.0 + 1e-12), "eta must be nonincreasing");
            prev_eta = eta;
        }
    }

    #[test]
    fn project_y_keeps_y_in_ball() {
        let problem = RegressionProblem::generate(20, 6, 1e-2, PNorm::One, 8).unwrap();
        let d = 3.0;
        let ball = Ball::with_diameter(DenseVector::zeros(6), d).unwrap();
        let schedule = AccelSchedule::new(d).unwrap().with_project_y(true).unwrap();
        let mut opt = AcceleGrad::new(DenseVector::zeros(6), ball.clone(), schedule).unwrap();
        let mut oracle = ExactOracle::new(&problem);
        for _ in 0..50 {
            opt.step(&mut oracle).unwrap();
            assert!(ball.contains(opt.y(), 1e-12));
        }
    }

    #[test]
    fn run_records_expected_counts_and_evals() {
        let problem = RegressionProblem::generate(10, 3, 1e-2, PNorm::Two, 4).unwrap();
        let ball = Ball::with_diameter(DenseVector::zeros(3), 4.0).unwrap();
        let value = |x: &DenseVector| problem.value(x);

        let mut opt = AcceleGrad::new(
            DenseVector::zeros(3),
            ball.clone(),
            AccelSchedule::new(4.0).unwrap(),
        )
        .unwrap();
        let mut oracle = ExactOracle::new(&problem);
        let trace = run(&mut opt, &mut oracle, &value, 1, Cadence::Every(1)).unwrap();
        assert_eq!(trace.len(), 1);

        let mut opt = AdaGrad::new(DenseVector::zeros(3), ball.clone()).unwrap();
        let mut oracle = ExactOracle::new(&problem);
        let trace = run(&mut opt, &mut oracle, &value, 100, Cadence::Every(10)).unwrap();
        assert_eq!(trace.len(), 10);
        // Exact oracle on a 10-row dataset problem: n evals per iteration.
        assert_eq!(trace.records().last().unwrap().evals, 1000);

        let mut opt = AdaGrad::new(DenseVector::zeros(3), ball).unwrap();
        let mut oracle = MinibatchOracle::new(&problem, 2, 3).unwrap();
        let trace = run(&mut opt, &mut oracle, &value, 50, Cadence::Every(1)).unwrap();
        assert_eq!(trace.records().last().unwrap().evals, 100); // b * T
    }

    #[test]
    fn identical_seeds_replay_identical_traces() {
        let problem = RegressionProblem::generate(10, 3, 1e-2, PNorm::Two, 4).unwrap();
        let ball = Ball::with_diameter(DenseVector::zeros(3), 4.0).unwrap();
        let value = |x: &DenseVector| problem.value(x);
        let mut csvs = Vec::new();
        for _ in 0..2 {
            let mut opt = AdaGrad::new(DenseVector::zeros(3), ball.clone()).unwrap();
            let mut oracle = MinibatchOracle::new(&problem, 3, 77).unwrap();
            let trace = run(&mut opt, &mut oracle, &value, 40, Cadence::Every(1)).unwrap();
            csvs.push(trace.to_csv_string());
        }
        assert_eq!(csvs[0], csvs[1]);
    }

    #[test]
    fn adagrad_average_respects_error_bound_on_noiseless_instance() {
        // f(x_bar_T) - f* <= sqrt(2 D^2 sum ||g||^2) / T on a planted
        // noiseless instance where f* = 0 and the minimizer is in the ball.
        let problem = RegressionProblem::generate(30, 5, 0.0, PNorm::Two, 21).unwrap();
        let x_nat = problem.planted_point().unwrap().clone();
        let diameter = 2.0 * x_nat.norm2();
        let ball = Ball::with_diameter(DenseVector::zeros(5), diameter).unwrap();
        let mut ada = AdaGrad::new(DenseVector::zeros(5), ball).unwrap();
        let mut oracle = ExactOracle::new(&problem);
        let t = 200u64;
        for _ in 0..t {
            ada.step(&mut oracle).unwrap();
        }
        let bound = (2.0 * diameter * diameter * ada.grad_sq_sum()).sqrt() / t as f64;
        let gap = problem.value(&ada.averaged_output().unwrap());
        assert!(
            gap <= bound * (1.0 + 1e-9),
            "error {gap} exceeds guarantee {bound}"
        );
    }

    struct CountingOracle {
        inner_dim: usize,
    }

    impl Oracle for CountingOracle {
        fn dim(&self) -> usize {
            self.inner_dim
        }
        fn query(&mut self, _x: &DenseVector) -> Result<OracleAnswer> {
            Ok(OracleAnswer {
                value: None,
                subgradient: DenseVector::zeros(self.inner_dim + 1),
                evals: 1,
            })
        }
        fn evals_consumed(&self) -> u64 {
            0
        }
    }

    #[test]
    fn mismatched_subgradient_dimension_is_an_error() {
        let ball = Ball::with_diameter(DenseVector::zeros(2), 2.0).unwrap();
        let mut opt = AcceleGrad::new(
            DenseVector::zeros(2),
            ball,
            AccelSchedule::new(2.0).unwrap(),
        )
        .unwrap();
        let mut oracle = CountingOracle { inner_dim: 2 };
        assert!(matches!(
            opt.step(&mut oracle),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
