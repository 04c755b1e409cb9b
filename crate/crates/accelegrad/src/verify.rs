//! Headless verification suite.
//!
//! Each check reruns a desk-scale benchmark or property battery with
//! pinned seeds and tolerances and reports pass/fail. The `acceptance`
//! integration tests and the CLI `verify` subcommand both execute these.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::analysis::{
    finite_difference_gradient, fit_rate_slope, inequality_slack, log_sum_bound,
    power_iteration_lambda_max, smooth_grad_bound_check, sqrt_sum_sandwich, RateFit,
    SUBOPT_NOISE_FLOOR,
};
use crate::config::RawConfig;
use crate::error::Result;
use crate::harness;
use crate::linalg::{Ball, DenseVector};
use crate::optimizers::{importance_weight, run, AccelSchedule, AcceleGrad, AdaGrad};
use crate::oracles::{ExactOracle, FiniteSum, MinibatchOracle, Objective, Oracle};
use crate::problems::{
    reference_optimum, ClassificationProblem, LossKind, PNorm, RegressionProblem,
};
use crate::trace::{suboptimality_series, Cadence, OutputSeries, Trace};

/// Outcome of one verification check.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub id: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

impl CheckReport {
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.1}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.seconds,
            self.details
        )
    }
}

type CheckFn = fn() -> CheckReport;

/// All checks in execution order.
pub fn registry() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("rate-smooth-accelegrad", check_smooth_acceleration),
        ("rate-nonsmooth-accelegrad", check_nonsmooth_rate),
        ("rate-adagrad", check_adagrad_rates),
        ("deterministic-ordering", check_deterministic_ordering),
        ("stochastic-minibatch", check_stochastic_robustness),
        ("projection-free", check_projection_free_variant),
        ("lemma-oracles", check_lemma_oracles),
        (
            "oracle-unbiasedness-replay",
            check_oracle_unbiasedness_and_replay,
        ),
        ("gradient-correctness", check_gradient_correctness),
    ]
}

/// Runs every check whose id contains `filter` (all when `None`).
pub fn run_checks(filter: Option<&str>) -> Vec<CheckReport> {
    registry()
        .into_iter()
        .filter(|(id, _)| filter.is_none_or(|f| id.contains(f)))
        .map(|(_, f)| f())
        .collect()
}

fn report(id: &'static str, started: Instant, passed: bool, details: String) -> CheckReport {
    CheckReport {
        id,
        passed,
        details,
        seconds: started.elapsed().as_secs_f64(),
    }
}

fn fail(id: &'static str, started: Instant, details: String) -> CheckReport {
    report(id, started, false, details)
}

// ---------------------------------------------------------------------------
// Shared run helpers.
//
// The smooth benchmark instance is noiseless, so its optimum value is 0
// exactly and the planted point is the minimizer. The non-smooth
// instances carry the standard 1e-2 target noise: a noiseless
// absolute-loss objective has a sharp polyhedral minimum that adaptive
// methods exploit at far better than the generic non-smooth rate, which
// would defeat the purpose of a baseline-rate check. Their optima are
// estimated once by high-budget reference solves and cached.
// ---------------------------------------------------------------------------

const SMOOTH_SEED: u64 = 7;
const NONSMOOTH_SEED: u64 = 7;
const NONSMOOTH_SIGMA2: f64 = 1e-2;

fn smooth_instance() -> Result<RegressionProblem> {
    RegressionProblem::generate(200, 50, 0.0, PNorm::Two, SMOOTH_SEED)
}

fn nonsmooth_instance() -> Result<RegressionProblem> {
    RegressionProblem::generate(200, 50, NONSMOOTH_SIGMA2, PNorm::One, NONSMOOTH_SEED)
}

type CachedReference = std::result::Result<(f64, DenseVector), String>;

fn cached_reference(
    cell: &'static OnceLock<CachedReference>,
    problem: &RegressionProblem,
    budget: u64,
) -> CachedReference {
    cell.get_or_init(|| {
        reference_optimum(problem, budget)
            .map(|r| (r.value, r.point))
            .map_err(|e| e.to_string())
    })
    .clone()
}

static NONSMOOTH_REF: OnceLock<CachedReference> = OnceLock::new();

fn nonsmooth_reference(problem: &RegressionProblem) -> CachedReference {
    cached_reference(&NONSMOOTH_REF, problem, 200_000)
}

/// Ball of diameter `2 rho ||x0 - x_star||` centered at the origin.
fn reference_ball(x_star: &DenseVector, rho: f64) -> Result<Ball> {
    let x0 = DenseVector::zeros(x_star.dim());
    let diameter = 2.0 * rho * x_star.norm2();
    Ball::with_diameter(x0, diameter)
}

/// For the noiseless smooth instance the planted point is the optimum.
fn planted_ball(problem: &RegressionProblem, rho: f64) -> Result<Ball> {
    reference_ball(problem.planted_point().expect("generated instance"), rho)
}

fn run_accelegrad(
    problem: &RegressionProblem,
    ball: Ball,
    iterations: u64,
    skip_projection: bool,
) -> Result<Trace> {
    let schedule = AccelSchedule::new(ball.diameter())?.with_skip_projection(skip_projection)?;
    let mut opt = AcceleGrad::new(DenseVector::zeros(problem.dim()), ball, schedule)?;
    let mut oracle = ExactOracle::new(problem);
    let value = |x: &DenseVector| problem.value(x);
    let trace = run(
        &mut opt,
        &mut oracle,
        &value,
        iterations,
        Cadence::Logarithmic { target: 200 },
    )?;
    Ok(trace)
}

fn run_adagrad(problem: &RegressionProblem, ball: Ball, iterations: u64) -> Result<Trace> {
    let mut opt = AdaGrad::new(DenseVector::zeros(problem.dim()), ball)?;
    let mut oracle = ExactOracle::new(problem);
    let value = |x: &DenseVector| problem.value(x);
    let trace = run(
        &mut opt,
        &mut oracle,
        &value,
        iterations,
        Cadence::Logarithmic { target: 200 },
    )?;
    Ok(trace)
}

fn averaged_slope(trace: &Trace, f_star: f64, window: (f64, f64)) -> Result<RateFit> {
    let points = suboptimality_series(trace, OutputSeries::Averaged, f_star);
    fit_rate_slope(&points, window)
}

/// Trend check over the fit window: consecutive recorded last-iterate
/// values above the noise floor may not grow by more than 5%.
fn last_iterate_trend_ok(trace: &Trace, window: (f64, f64)) -> (bool, f64) {
    let mut worst: f64 = 0.0;
    let mut prev: Option<f64> = None;
    for (t, s) in suboptimality_series(trace, OutputSeries::Last, 0.0) {
        if t < window.0 || t > window.1 || s < SUBOPT_NOISE_FLOOR {
            continue;
        }
        if let Some(p) = prev {
            worst = worst.max(s / p);
        }
        prev = Some(s);
    }
    (worst <= 1.05, worst)
}

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

/// Smooth acceleration: averaged-output log-log slope at most -1.8 on a
/// noiseless smooth instance, with a non-increasing last-iterate trend.
fn check_smooth_acceleration() -> CheckReport {
    let id = "rate-smooth-accelegrad";
    let started = Instant::now();
    let window = (1e2, 1e4);
    let problem = match smooth_instance() {
        Ok(p) => p,
        Err(e) => return fail(id, started, e.to_string()),
    };
    // The product reference path must agree that the optimum is 0.
    match reference_optimum(&problem, 2000) {
        Ok(r) if r.value.abs() <= 1e-12 => {}
        Ok(r) => return fail(id, started, format!("reference optimum {} not ~0", r.value)),
        Err(e) => return fail(id, started, e.to_string()),
    }
    let ball = match planted_ball(&problem, 1.0) {
        Ok(b) => b,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let trace = match run_accelegrad(&problem, ball, 10_000, false) {
        Ok(b) => b,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let fit = match averaged_slope(&trace, 0.0, window) {
        Ok(f) => f,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let (trend_ok, worst_ratio) = last_iterate_trend_ok(&trace, window);
    let seconds = started.elapsed().as_secs_f64();
    let passed = fit.slope <= -1.8 && trend_ok && seconds < 30.0;
    report(
        id,
        started,
        passed,
        format!(
            "slope {:.3} (need <= -1.8, r2 {:.4}), worst last-iterate ratio {:.3} (need <= 1.05)",
            fit.slope, fit.r2, worst_ratio
        ),
    )
}

/// Non-smooth rate: averaged-output slope within [-0.8, -0.35] on a
/// noisy absolute-loss instance, measured against the estimated optimum.
fn check_nonsmooth_rate() -> CheckReport {
    let id = "rate-nonsmooth-accelegrad";
    let started = Instant::now();
    let window = (1e2, 1e5);
    let problem = match nonsmooth_instance() {
        Ok(p) => p,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let (f_star, x_star) = match nonsmooth_reference(&problem) {
        Ok(r) => r,
        Err(e) => return fail(id, started, e),
    };
    let ball = match reference_ball(&x_star, 1.0) {
        Ok(b) => b,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let trace = match run_accelegrad(&problem, ball, 100_000, false) {
        Ok(b) => b,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let fit = match averaged_slope(&trace, f_star, window) {
        Ok(f) => f,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let seconds = started.elapsed().as_secs_f64();
    let passed = (-0.8..=-0.35).contains(&fit.slope) && seconds < 60.0;
    report(
        id,
        started,
        passed,
        format!(
            "slope {:.3} (need in [-0.8, -0.35], r2 {:.4}, f* estimate {f_star:.6e})",
            fit.slope, fit.r2
        ),
    )
}

/// AdaGrad baseline rates on the same two instances.
fn check_adagrad_rates() -> CheckReport {
    let id = "rate-adagrad";
    let started = Instant::now();

    let nonsmooth_fit = (|| -> std::result::Result<RateFit, String> {
        let problem = nonsmooth_instance().map_err(|e| e.to_string())?;
        let (f_star, x_star) = nonsmooth_reference(&problem)?;
        let ball = reference_ball(&x_star, 1.0).map_err(|e| e.to_string())?;
        let trace = run_adagrad(&problem, ball, 100_000).map_err(|e| e.to_string())?;
        averaged_slope(&trace, f_star, (1e2, 1e5)).map_err(|e| e.to_string())
    })();
    let fit_nonsmooth = match nonsmooth_fit {
        Ok(f) => f,
        Err(e) => return fail(id, started, e),
    };

    let smooth_fit = (|| -> std::result::Result<RateFit, String> {
        let problem = smooth_instance().map_err(|e| e.to_string())?;
        let ball = planted_ball(&problem, 1.0).map_err(|e| e.to_string())?;
        let trace = run_adagrad(&problem, ball, 10_000).map_err(|e| e.to_string())?;
        averaged_slope(&trace, 0.0, (1e2, 1e4)).map_err(|e| e.to_string())
    })();
    let fit_smooth = match smooth_fit {
        Ok(f) => f,
        Err(e) => return fail(id, started, e),
    };

    let passed =
        (-0.8..=-0.35).contains(&fit_nonsmooth.slope) && (-1.4..=-0.6).contains(&fit_smooth.slope);
    report(
        id,
        started,
        passed,
        format!(
            "non-smooth slope {:.3} (need in [-0.8, -0.35]), smooth slope {:.3} (need in [-1.4, -0.6])",
            fit_nonsmooth.slope, fit_smooth.slope
        ),
    )
}

/// With exact gradients at a matched evaluation budget, the accelerated
/// method reaches lower suboptimality than the AdaGrad average.
fn check_deterministic_ordering() -> CheckReport {
    let id = "deterministic-ordering";
    let started = Instant::now();
    let evals_budget = 10_000u64;
    let mut details = Vec::new();
    let mut passed = true;
    for seed in [7u64, 8, 9] {
        let problem = match RegressionProblem::generate(200, 50, 0.0, PNorm::Two, seed) {
            Ok(p) => p,
            Err(e) => return fail(id, started, e.to_string()),
        };
        let ball = match planted_ball(&problem, 1.0) {
            Ok(b) => b,
            Err(e) => return fail(id, started, e.to_string()),
        };
        let iterations = evals_budget / problem.nrows() as u64;
        let accel = match run_accelegrad(&problem, ball.clone(), iterations, false) {
            Ok(b) => b,
            Err(e) => return fail(id, started, e.to_string()),
        };
        let ada = match run_adagrad(&problem, ball, iterations) {
            Ok(b) => b,
            Err(e) => return fail(id, started, e.to_string()),
        };
        let last = |t: &Trace| *t.records().last().expect("nonempty trace");
        let accel_best = last(&accel).f_avg.min(last(&accel).f_last);
        let ada_avg = last(&ada).f_avg;
        if accel_best >= ada_avg {
            passed = false;
        }
        details.push(format!(
            "seed {seed}: accelegrad {accel_best:.3e} vs adagrad {ada_avg:.3e}"
        ));
    }
    report(id, started, passed, details.join("; "))
}

/// Single-sample minibatch runs: mean suboptimality over seeds halves
/// between epoch 1 and epoch 25 and never blows past 3x epoch 1.
fn check_stochastic_robustness() -> CheckReport {
    let id = "stochastic-minibatch";
    let started = Instant::now();
    let epochs = 40u64;
    let problem = match RegressionProblem::generate(500, 50, NONSMOOTH_SIGMA2, PNorm::One, 42) {
        Ok(p) => p,
        Err(e) => return fail(id, started, e.to_string()),
    };
    static STOCH_REF: OnceLock<CachedReference> = OnceLock::new();
    let (f_star, x_star) = match cached_reference(&STOCH_REF, &problem, 50_000) {
        Ok(r) => r,
        Err(e) => return fail(id, started, e),
    };
    let ball = match reference_ball(&x_star, 1.0) {
        Ok(b) => b,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let n = problem.nrows() as u64;
    let mut per_epoch = vec![0.0f64; epochs as usize];
    let seeds = [1001u64, 1002, 1003, 1004, 1005];
    for &oracle_seed in &seeds {
        let schedule = match AccelSchedule::new(ball.diameter()) {
            Ok(s) => s,
            Err(e) => return fail(id, started, e.to_string()),
        };
        let mut opt =
            match AcceleGrad::new(DenseVector::zeros(problem.dim()), ball.clone(), schedule) {
                Ok(o) => o,
                Err(e) => return fail(id, started, e.to_string()),
            };
        let mut oracle = match MinibatchOracle::new(&problem, 1, oracle_seed) {
            Ok(o) => o,
            Err(e) => return fail(id, started, e.to_string()),
        };
        let value = |x: &DenseVector| problem.value(x);
        // One epoch is n atomic evaluations, i.e. n iterations at b = 1.
        let trace = match run(&mut opt, &mut oracle, &value, epochs * n, Cadence::Every(n)) {
            Ok(t) => t,
            Err(e) => return fail(id, started, e.to_string()),
        };
        for (e, r) in trace.records().iter().enumerate() {
            per_epoch[e] += (r.f_avg - f_star) / seeds.len() as f64;
        }
    }
    let first = per_epoch[0];
    let at_25 = per_epoch[24];
    let worst_after = per_epoch[1..]
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v / first));
    let passed = at_25 <= first / 2.0 && worst_after <= 3.0;
    report(
        id,
        started,
        passed,
        format!(
            "epoch1 {first:.4e}, epoch25 {at_25:.4e} (need <= {:.4e}), worst ratio {worst_after:.2} (need <= 3)",
            first / 2.0
        ),
    )
}

/// Projection-free variant: the smooth and non-smooth slope bands hold
/// with the `z` projection disabled.
fn check_projection_free_variant() -> CheckReport {
    let id = "projection-free";
    let started = Instant::now();

    let smooth_fit = (|| -> std::result::Result<RateFit, String> {
        let problem = smooth_instance().map_err(|e| e.to_string())?;
        let ball = planted_ball(&problem, 1.0).map_err(|e| e.to_string())?;
        let trace = run_accelegrad(&problem, ball, 10_000, true).map_err(|e| e.to_string())?;
        averaged_slope(&trace, 0.0, (1e2, 1e4)).map_err(|e| e.to_string())
    })();
    let fit_smooth = match smooth_fit {
        Ok(f) => f,
        Err(e) => return fail(id, started, e),
    };

    let nonsmooth_fit = (|| -> std::result::Result<RateFit, String> {
        let problem = nonsmooth_instance().map_err(|e| e.to_string())?;
        let (f_star, x_star) = nonsmooth_reference(&problem)?;
        let ball = reference_ball(&x_star, 1.0).map_err(|e| e.to_string())?;
        let trace = run_accelegrad(&problem, ball, 100_000, true).map_err(|e| e.to_string())?;
        averaged_slope(&trace, f_star, (1e2, 1e5)).map_err(|e| e.to_string())
    })();
    let fit_nonsmooth = match nonsmooth_fit {
        Ok(f) => f,
        Err(e) => return fail(id, started, e),
    };

    let smooth_ok = fit_smooth.slope <= -1.8;
    let nonsmooth_ok = (-0.8..=-0.35).contains(&fit_nonsmooth.slope);
    report(
        id,
        started,
        smooth_ok && nonsmooth_ok,
        format!(
            "smooth slope {:.3} <= -1.8: {}; non-smooth slope {:.3} in [-0.8, -0.35]: {}",
            fit_smooth.slope,
            if smooth_ok { "ok" } else { "VIOLATED" },
            fit_nonsmooth.slope,
            if nonsmooth_ok { "ok" } else { "VIOLATED" }
        ),
    )
}

/// First `t` where the weight recurrence margin is violated.
pub(crate) fn weight_property_violation(weight: &dyn Fn(u64) -> f64, max_t: u64) -> Option<u64> {
    let mut prev_gap = weight(0) * weight(0) - weight(0);
    for t in 1..=max_t {
        let a = weight(t);
        let gap = a * a - a;
        if gap - prev_gap > weight(t - 1) / 2.0 {
            return Some(t);
        }
        prev_gap = gap;
    }
    None
}

/// First `T` where the cumulative weight mass drops below `T^2 / 32`, or
/// a single weight exceeds `t + 1`.
pub(crate) fn weight_mass_violation(weight: &dyn Fn(u64) -> f64, max_t: u64) -> Option<u64> {
    let mut mass = 0.0f64;
    for t in 0..max_t {
        let a = weight(t);
        if a > (t + 1) as f64 {
            return Some(t);
        }
        mass += a;
        let big_t = (t + 1) as f64;
        if mass < big_t * big_t / 32.0 {
            return Some(t + 1);
        }
    }
    None
}

/// Scalar-inequality oracles under 1000 randomized trials each, plus the
/// weight-sequence properties enumerated to 1e6.
fn check_lemma_oracles() -> CheckReport {
    let id = "lemma-oracles";
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();

    for trial in 0..1000 {
        let len = rng.random_range(1..=100);
        let a: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random_range(0..8) == 0 {
                    0.0
                } else {
                    rng.random_range(0.0..10.0f64)
                }
            })
            .collect();
        match sqrt_sum_sandwich(&a) {
            Ok((lhs, mid, rhs)) => {
                if !(lhs <= mid + inequality_slack(mid) && mid <= rhs + inequality_slack(rhs)) {
                    failures.push(format!("sqrt-sum sandwich violated on trial {trial}"));
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
        match log_sum_bound(&a) {
            Ok((lhs, rhs)) => {
                if lhs > rhs + inequality_slack(rhs) {
                    failures.push(format!("log-sum bound violated on trial {trial}"));
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
    }

    // Smooth gradient bound on random smooth instances with a
    // power-iteration smoothness constant and a solved reference value.
    for instance_seed in 0..4u64 {
        let problem = match RegressionProblem::generate(12, 4, 1e-2, PNorm::Two, 90 + instance_seed)
        {
            Ok(p) => p,
            Err(e) => return fail(id, started, e.to_string()),
        };
        let beta = 2.0
            * power_iteration_lambda_max(
                &|v| problem.normal_matvec(v),
                problem.dim(),
                50,
                1e-9,
                instance_seed,
            );
        let f_star = match reference_optimum(&problem, 1000) {
            Ok(r) => r.value,
            Err(e) => return fail(id, started, e.to_string()),
        };
        for _ in 0..250 {
            let x = DenseVector::from_fn(4, |_| 2.0 * rng.sample::<f64, _>(StandardNormal));
            let (lhs, rhs) = smooth_grad_bound_check(&problem, &x, f_star, beta);
            if lhs > rhs + 1e-9 * (1.0 + rhs.abs()) {
                failures.push(format!(
                    "smooth gradient bound violated: {lhs} > {rhs} (instance {instance_seed})"
                ));
            }
        }
    }

    if let Some(t) = weight_property_violation(&importance_weight, 1_000_000) {
        failures.push(format!("weight recurrence margin violated at t = {t}"));
    }
    if let Some(t) = weight_mass_violation(&importance_weight, 1_000_000) {
        failures.push(format!("weight mass bound violated at T = {t}"));
    }

    let seconds = started.elapsed().as_secs_f64();
    let passed = failures.is_empty() && seconds < 10.0;
    let details = if failures.is_empty() {
        "3000 inequality trials and 1e6-term weight enumerations clean".to_string()
    } else {
        failures.truncate(3);
        failures.join("; ")
    };
    report(id, started, passed, details)
}

/// Monte-Carlo unbiasedness of the single-sample minibatch estimator and
/// byte-identical replay of a seeded run through the product path.
fn check_oracle_unbiasedness_and_replay() -> CheckReport {
    let id = "oracle-unbiasedness-replay";
    let started = Instant::now();

    let problem = match RegressionProblem::generate(4, 3, 1e-2, PNorm::Two, 3) {
        Ok(p) => p,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let x = DenseVector::from_fn(3, |i| 0.5 - 0.25 * i as f64);
    let exact = problem.subgradient(&x);
    let mut oracle = match MinibatchOracle::new(&problem, 1, 12) {
        Ok(o) => o,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let samples = 100_000u64;
    let dim = problem.dim();
    let mut mean = vec![0.0f64; dim];
    let mut m2 = vec![0.0f64; dim];
    for k in 0..samples {
        let g = match oracle.query(&x) {
            Ok(a) => a.subgradient,
            Err(e) => return fail(id, started, e.to_string()),
        };
        // Welford accumulation per coordinate.
        let count = (k + 1) as f64;
        for j in 0..dim {
            let delta = g[j] - mean[j];
            mean[j] += delta / count;
            m2[j] += delta * (g[j] - mean[j]);
        }
    }
    let mut unbiased = true;
    let mut worst = 0.0f64;
    for j in 0..dim {
        let se = (m2[j] / (samples as f64 - 1.0)).sqrt() / (samples as f64).sqrt();
        // Tiny absolute slack absorbs pure summation roundoff when the
        // sample variance is zero.
        let tol = 3.0 * se + 1e-12 * (1.0 + exact[j].abs());
        let dev = (mean[j] - exact[j]).abs();
        worst = worst.max(if se > 0.0 { dev / se } else { 0.0 });
        if dev > tol {
            unbiased = false;
        }
    }

    let raw = "problem = reg\nn = 30\nd = 5\np = 1\nsigma2 = 0\nseed = 31\nT = 200\nD = 6\n\
               oracle = minibatch\nb = 3\ncadence = 1\n";
    let config = match RawConfig::parse_str(raw).and_then(|r| r.resolve(None)) {
        Ok(c) => c,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let csv_a = match harness::execute(&config) {
        Ok(t) => t.to_csv_string(),
        Err(e) => return fail(id, started, e.to_string()),
    };
    let csv_b = match harness::execute(&config) {
        Ok(t) => t.to_csv_string(),
        Err(e) => return fail(id, started, e.to_string()),
    };
    let replay_ok = csv_a == csv_b;

    report(
        id,
        started,
        unbiased && replay_ok,
        format!(
            "minibatch mean within 3 standard errors (worst {worst:.2} SE over {samples} samples); replay {}",
            if replay_ok { "byte-identical" } else { "DIVERGED" }
        ),
    )
}

/// Analytic subgradients agree with central finite differences; the
/// non-smooth losses are checked away from their kinks.
fn check_gradient_correctness() -> CheckReport {
    let id = "gradient-correctness";
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst_smooth = 0.0f64;
    let mut worst_kinked = 0.0f64;

    let rel_err = |g: &DenseVector, fd: &DenseVector| {
        let mut worst = 0.0f64;
        for j in 0..g.dim() {
            worst = worst.max((g[j] - fd[j]).abs() / (1.0 + g[j].abs()));
        }
        worst
    };

    // Smooth cases: squared-residual regression and logistic loss.
    for seed in 0..5u64 {
        let problem = match RegressionProblem::generate(6, 4, 1e-2, PNorm::Two, 60 + seed) {
            Ok(p) => p,
            Err(e) => return fail(id, started, e.to_string()),
        };
        let x = DenseVector::from_fn(4, |_| rng.sample::<f64, _>(StandardNormal));
        let g = problem.subgradient(&x);
        let fd = finite_difference_gradient(&problem, &x, 1e-6);
        worst_smooth = worst_smooth.max(rel_err(&g, &fd));
    }
    let dataset = match crate::problems::parse_libsvm(
        "1 1:0.8 3:-1.2\n-1 2:0.4\n1 1:-0.3 2:1.1 3:0.7\n-1 1:0.9 3:0.2\n",
    ) {
        Ok(d) => d,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let logistic =
        match ClassificationProblem::from_dataset(dataset.clone(), LossKind::Logistic, 0.05) {
            Ok(p) => p,
            Err(e) => return fail(id, started, e.to_string()),
        };
    for _ in 0..5 {
        let x = DenseVector::from_fn(3, |_| rng.sample::<f64, _>(StandardNormal));
        let g = logistic.subgradient(&x);
        let fd = finite_difference_gradient(&logistic, &x, 1e-6);
        worst_smooth = worst_smooth.max(rel_err(&g, &fd));
    }

    // Non-smooth cases, sampling points clear of every kink.
    let abs_problem = match RegressionProblem::generate(6, 4, 1e-2, PNorm::One, 77) {
        Ok(p) => p,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let mut checked = 0;
    while checked < 5 {
        let x = DenseVector::from_fn(4, |_| rng.sample::<f64, _>(StandardNormal));
        let margin = (0..abs_problem.nrows())
            .map(|i| {
                let r = abs_problem.matrix().row_dot(i, &x) - abs_problem.targets()[i];
                r.abs()
            })
            .fold(f64::INFINITY, f64::min);
        if margin < 1e-3 {
            continue;
        }
        let g = abs_problem.subgradient(&x);
        let fd = finite_difference_gradient(&abs_problem, &x, 1e-7);
        worst_kinked = worst_kinked.max(rel_err(&g, &fd));
        checked += 1;
    }
    let hinge = match ClassificationProblem::from_dataset(dataset, LossKind::Hinge, 0.0) {
        Ok(p) => p,
        Err(e) => return fail(id, started, e.to_string()),
    };
    let mut checked = 0;
    while checked < 5 {
        let x = DenseVector::from_fn(3, |_| rng.sample::<f64, _>(StandardNormal));
        // Distance to the nearest hinge kink: |1 - y_i a_i . x| per row.
        let min_margin = (0..hinge.num_terms())
            .map(|i| (1.0 - hinge.label(i) * hinge.margin(i, &x)).abs())
            .fold(f64::INFINITY, f64::min);
        if min_margin < 1e-3 {
            continue;
        }
        let g = hinge.subgradient(&x);
        let fd = finite_difference_gradient(&hinge, &x, 1e-7);
        worst_kinked = worst_kinked.max(rel_err(&g, &fd));
        checked += 1;
    }

    let passed = worst_smooth < 1e-6 && worst_kinked < 1e-6;
    report(
        id,
        started,
        passed,
        format!(
            "worst smooth relative error {worst_smooth:.2e}, worst kink-avoiding relative error {worst_kinked:.2e} (need < 1e-6)"
        ),
    )
}
