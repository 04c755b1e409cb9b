//! Turns validated run configurations into executed traces, and merges
//! traces from several runs (or externally produced CSV files) into a
//! single comparison table aligned on the evaluation axis.

use crate::config::{Method, OracleSpec, ProblemSpec, RunConfig, SizeSpec};
use crate::error::{Error, Result};
use crate::linalg::{Ball, DenseVector};
use crate::optimizers::{self, AccelSchedule, AcceleGrad, AdaGrad};
use crate::oracles::{
    ExactOracle, FiniteSum, GaussianNoiseOracle, MinibatchOracle, Objective, Oracle,
};
use crate::problems::{
    load_libsvm_with_dim, read_problem, reference_optimum, ClassificationProblem, RegressionProblem,
};
use crate::trace::Trace;

/// A constructed problem, either flavor.
pub enum ProblemInstance {
    Regression(RegressionProblem),
    Classification(ClassificationProblem),
}

impl Objective for ProblemInstance {
    fn dim(&self) -> usize {
        match self {
            ProblemInstance::Regression(p) => p.dim(),
            ProblemInstance::Classification(p) => p.dim(),
        }
    }

    fn value(&self, x: &DenseVector) -> f64 {
        match self {
            ProblemInstance::Regression(p) => p.value(x),
            ProblemInstance::Classification(p) => p.value(x),
        }
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        match self {
            ProblemInstance::Regression(p) => p.subgradient(x),
            ProblemInstance::Classification(p) => p.subgradient(x),
        }
    }

    fn value_and_subgradient(&self, x: &DenseVector) -> (f64, DenseVector) {
        match self {
            ProblemInstance::Regression(p) => p.value_and_subgradient(x),
            ProblemInstance::Classification(p) => p.value_and_subgradient(x),
        }
    }

    fn full_eval_cost(&self) -> u64 {
        match self {
            ProblemInstance::Regression(p) => p.full_eval_cost(),
            ProblemInstance::Classification(p) => p.full_eval_cost(),
        }
    }

    fn gradient_bound(&self, ball: &Ball) -> Option<f64> {
        match self {
            ProblemInstance::Regression(p) => p.gradient_bound(ball),
            ProblemInstance::Classification(p) => p.gradient_bound(ball),
        }
    }
}

impl FiniteSum for ProblemInstance {
    fn num_terms(&self) -> usize {
        match self {
            ProblemInstance::Regression(p) => p.num_terms(),
            ProblemInstance::Classification(p) => p.num_terms(),
        }
    }

    fn subset_value_and_subgradient(
        &self,
        x: &DenseVector,
        subset: &[usize],
    ) -> Result<(f64, DenseVector)> {
        match self {
            ProblemInstance::Regression(p) => p.subset_value_and_subgradient(x, subset),
            ProblemInstance::Classification(p) => p.subset_value_and_subgradient(x, subset),
        }
    }
}

pub fn build_problem(spec: &ProblemSpec) -> Result<ProblemInstance> {
    match spec {
        ProblemSpec::Generated {
            n,
            d,
            p,
            sigma2,
            seed,
        } => Ok(ProblemInstance::Regression(RegressionProblem::generate(
            *n, *d, *sigma2, *p, *seed,
        )?)),
        ProblemSpec::Libsvm {
            path,
            dim,
            loss,
            l2,
        } => {
            let dataset = load_libsvm_with_dim(path, *dim)?;
            Ok(ProblemInstance::Classification(
                ClassificationProblem::from_dataset(dataset, *loss, *l2)?,
            ))
        }
        ProblemSpec::Container { path } => Ok(ProblemInstance::Regression(read_problem(path)?)),
    }
}

/// Resolves the feasible-set diameter for a problem, turning a `rho`
/// specification into `2 * rho * ||x0 - x_ref||` via a reference solve.
pub fn resolve_diameter(
    spec: SizeSpec,
    problem: &ProblemInstance,
    x0: &DenseVector,
) -> Result<f64> {
    match spec {
        SizeSpec::Diameter(d) => Ok(d),
        SizeSpec::Rho { rho, ref_budget } => match problem {
            ProblemInstance::Regression(p) => {
                let reference = reference_optimum(p, ref_budget)?;
                let dist = x0.distance(&reference.point);
                if dist == 0.0 {
                    return Err(Error::InvalidArgument(
                        "initial point coincides with the reference solution; give D directly"
                            .into(),
                    ));
                }
                Ok(2.0 * rho * dist)
            }
            ProblemInstance::Classification(_) => Err(Error::InvalidArgument(
                "rho needs a reference solve, which is only available for regression \
                 problems; give D directly"
                    .into(),
            )),
        },
    }
}

fn build_oracle<'a>(
    spec: &OracleSpec,
    problem: &'a ProblemInstance,
) -> Result<Box<dyn Oracle + 'a>> {
    Ok(match spec {
        OracleSpec::Exact => Box::new(ExactOracle::new(problem)),
        OracleSpec::Minibatch { batch, seed } => {
            Box::new(MinibatchOracle::new(problem, *batch, *seed)?)
        }
        OracleSpec::Noise { sigma, seed } => {
            Box::new(GaussianNoiseOracle::new(problem, *sigma, *seed)?)
        }
    })
}

/// Executes a run end to end. The initial point is the origin and the
/// feasible ball is centered there. Writes the trace CSV when the config
/// names an output path.
pub fn execute(config: &RunConfig) -> Result<Trace> {
    let problem = build_problem(&config.problem)?;
    let x0 = DenseVector::zeros(problem.dim());
    let diameter = resolve_diameter(config.optimizer.size, &problem, &x0)?;
    let ball = Ball::with_diameter(x0.clone(), diameter)?;
    let mut oracle = build_oracle(&config.oracle, &problem)?;
    let value = |x: &DenseVector| problem.value(x);

    let trace = match config.optimizer.method {
        Method::AcceleGrad => {
            let schedule = AccelSchedule::new(diameter)?
                .with_grad_bound(config.optimizer.grad_bound)?
                .with_project_y(config.optimizer.project_y)?
                .with_skip_projection(config.optimizer.skip_projection)?;
            let mut opt = AcceleGrad::new(x0, ball, schedule)?;
            optimizers::run(
                &mut opt,
                oracle.as_mut(),
                &value,
                config.iterations,
                config.cadence,
            )?
        }
        Method::AdaGrad => {
            let mut opt = AdaGrad::new(x0, ball)?;
            optimizers::run(
                &mut opt,
                oracle.as_mut(),
                &value,
                config.iterations,
                config.cadence,
            )?
        }
    };

    if let Some(path) = &config.out {
        trace.write_csv(path)?;
    }
    Ok(trace)
}

/// A named trace for comparison output.
pub struct Series {
    pub name: String,
    pub trace: Trace,
}

/// Executes several configurations, one thread each, preserving order.
pub fn execute_all(configs: Vec<(String, RunConfig)>) -> Result<Vec<Series>> {
    let handles: Vec<_> = std::thread::scope(|scope| {
        configs
            .into_iter()
            .map(|(name, config)| {
                let handle = scope.spawn(move || execute(&config));
                (name, handle)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .map(|(name, handle)| (name, handle.join()))
            .collect()
    });
    let mut series = Vec::new();
    for (name, joined) in handles {
        let trace =
            joined.map_err(|_| Error::InvalidArgument(format!("run `{name}` panicked")))??;
        series.push(Series { name, trace });
    }
    Ok(series)
}

fn sanitize_name(name: &str) -> String {
    name.replace([',', '\n', '\r'], "_")
}

/// Merges series into a CSV table aligned on the `evals` axis: one row per
/// distinct evaluation count, one `f_avg`/`f_last` column pair per series.
/// Cells are left blank where a series has no record at that count;
/// nothing is interpolated.
pub fn merge_on_evals(series: &[Series]) -> Result<String> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument(
            "comparison needs at least two series".into(),
        ));
    }
    use std::collections::BTreeMap;
    let mut axis: std::collections::BTreeSet<u64> = std::collections::BTreeSet::new();
    let mut maps: Vec<BTreeMap<u64, (f64, f64)>> = Vec::new();
    for s in series {
        let mut map = BTreeMap::new();
        for r in s.trace.records() {
            axis.insert(r.evals);
            map.insert(r.evals, (r.f_avg, r.f_last));
        }
        maps.push(map);
    }

    let mut out = String::from("evals");
    for s in series {
        let name = sanitize_name(&s.name);
        out.push_str(&format!(",{name}.f_avg,{name}.f_last"));
    }
    out.push('\n');
    for evals in axis {
        out.push_str(&evals.to_string());
        for map in &maps {
            match map.get(&evals) {
                Some((f_avg, f_last)) => {
                    out.push_str(&format!(",{f_avg:.16e},{f_last:.16e}"));
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    Ok(out)
}
