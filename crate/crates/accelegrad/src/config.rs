//! Run configuration: a flat `key = value` file format mirroring the CLI
//! flags, merge semantics (flags win over file values), and validation
//! into an executable [`RunConfig`].

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::problems::{LossKind, PNorm};
use crate::trace::Cadence;

/// Partially specified configuration; `None` means "not provided".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub problem: Option<String>,
    pub n: Option<u64>,
    pub d: Option<u64>,
    pub p: Option<u64>,
    pub sigma2: Option<f64>,
    pub seed: Option<u64>,
    pub dataset: Option<String>,
    pub dim: Option<u64>,
    pub loss: Option<String>,
    pub l2: Option<f64>,
    pub opt: Option<String>,
    pub diameter: Option<f64>,
    pub rho: Option<f64>,
    pub grad_bound: Option<f64>,
    pub project_y: Option<bool>,
    pub skip_projection: Option<bool>,
    pub oracle: Option<String>,
    pub batch: Option<u64>,
    pub noise_sigma: Option<f64>,
    pub oracle_seed: Option<u64>,
    pub iterations: Option<u64>,
    pub cadence: Option<String>,
    pub ref_budget: Option<u64>,
    pub out: Option<String>,
}

impl RawConfig {
    /// Parses the `key = value` file format. `#` starts a comment, blank
    /// lines are ignored, keys may appear at most once.
    pub fn parse_str(text: &str) -> Result<RawConfig> {
        let mut cfg = RawConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw_line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = match raw_line.split_once('#') {
                Some((before, _)) => before,
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(lineno, format!("expected `key = value`, found `{line}`"))
            })?;
            let key = key.trim();
            let value = value.trim().trim_matches('"');
            if value.is_empty() {
                return Err(Error::parse(lineno, format!("empty value for `{key}`")));
            }
            if seen.iter().any(|k| k == key) {
                return Err(Error::parse(lineno, format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());
            cfg.set(key, value, lineno)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RawConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RawConfig::parse_str(&text)
    }

    fn set(&mut self, key: &str, value: &str, lineno: usize) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str, lineno: usize) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid value `{value}` for `{key}`")))
        }
        fn finite(key: &str, value: &str, lineno: usize) -> Result<f64> {
            let v: f64 = num(key, value, lineno)?;
            if !v.is_finite() {
                return Err(Error::parse(
                    lineno,
                    format!("non-finite value `{value}` for `{key}`"),
                ));
            }
            Ok(v)
        }
        fn boolean(key: &str, value: &str, lineno: usize) -> Result<bool> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::parse(
                    lineno,
                    format!("invalid boolean `{value}` for `{key}` (expected true/false)"),
                )),
            }
        }

        match key {
            "problem" => self.problem = Some(value.to_string()),
            "n" => self.n = Some(num(key, value, lineno)?),
            "d" => self.d = Some(num(key, value, lineno)?),
            "p" => self.p = Some(num(key, value, lineno)?),
            "sigma2" => self.sigma2 = Some(finite(key, value, lineno)?),
            "seed" => self.seed = Some(num(key, value, lineno)?),
            "dataset" => self.dataset = Some(value.to_string()),
            "dim" => self.dim = Some(num(key, value, lineno)?),
            "loss" => self.loss = Some(value.to_string()),
            "l2" => self.l2 = Some(finite(key, value, lineno)?),
            "opt" => self.opt = Some(value.to_string()),
            "D" => self.diameter = Some(finite(key, value, lineno)?),
            "rho" => self.rho = Some(finite(key, value, lineno)?),
            "G" => self.grad_bound = Some(finite(key, value, lineno)?),
            "project_y" => self.project_y = Some(boolean(key, value, lineno)?),
            "skip_projection" => self.skip_projection = Some(boolean(key, value, lineno)?),
            "oracle" => self.oracle = Some(value.to_string()),
            "b" => self.batch = Some(num(key, value, lineno)?),
            "noise_sigma" => self.noise_sigma = Some(finite(key, value, lineno)?),
            "oracle_seed" => self.oracle_seed = Some(num(key, value, lineno)?),
            "T" => self.iterations = Some(num(key, value, lineno)?),
            "cadence" => self.cadence = Some(value.to_string()),
            "ref_budget" => self.ref_budget = Some(num(key, value, lineno)?),
            "out" => self.out = Some(value.to_string()),
            _ => return Err(Error::parse(lineno, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Overlays `other` on top of `self`; provided fields in `other` win.
    pub fn overlay(mut self, other: RawConfig) -> RawConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            problem,
            n,
            d,
            p,
            sigma2,
            seed,
            dataset,
            dim,
            loss,
            l2,
            opt,
            diameter,
            rho,
            grad_bound,
            project_y,
            skip_projection,
            oracle,
            batch,
            noise_sigma,
            oracle_seed,
            iterations,
            cadence,
            ref_budget,
            out
        );
        self
    }

    /// Validates and resolves defaults. `fallback_seed` is the
    /// environment-provided global seed, used when the config gives none.
    pub fn resolve(&self, fallback_seed: Option<u64>) -> Result<RunConfig> {
        let seed = self.seed.or(fallback_seed).unwrap_or(0);

        let problem = match self.problem.as_deref().unwrap_or("reg") {
            "reg" => {
                let n = self.n.ok_or_else(|| {
                    Error::InvalidArgument("`n` is required for problem=reg".into())
                })?;
                let d = self.d.ok_or_else(|| {
                    Error::InvalidArgument("`d` is required for problem=reg".into())
                })?;
                let p = PNorm::from_exponent(self.p.ok_or_else(|| {
                    Error::InvalidArgument("`p` is required for problem=reg".into())
                })?)?;
                if n == 0 || d == 0 {
                    return Err(Error::InvalidArgument("n and d must be >= 1".into()));
                }
                ProblemSpec::Generated {
                    n: n as usize,
                    d: d as usize,
                    p,
                    sigma2: self.sigma2.unwrap_or(0.0),
                    seed,
                }
            }
            "libsvm" => ProblemSpec::Libsvm {
                path: PathBuf::from(self.dataset.clone().ok_or_else(|| {
                    Error::InvalidArgument("`dataset` is required for problem=libsvm".into())
                })?),
                dim: self.dim.map(|d| d as usize),
                loss: match self.loss.as_deref().unwrap_or("logistic") {
                    "logistic" => LossKind::Logistic,
                    "hinge" => LossKind::Hinge,
                    other => {
                        return Err(Error::InvalidArgument(format!(
                            "unknown loss `{other}` (expected logistic or hinge)"
                        )))
                    }
                },
                l2: self.l2.unwrap_or(0.0),
            },
            "container" => ProblemSpec::Container {
                path: PathBuf::from(self.dataset.clone().ok_or_else(|| {
                    Error::InvalidArgument("`dataset` is required for problem=container".into())
                })?),
            },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown problem kind `{other}` (expected reg, libsvm, or container)"
                )))
            }
        };

        let method = match self.opt.as_deref().unwrap_or("accelegrad") {
            "accelegrad" => Method::AcceleGrad,
            "adagrad" => Method::AdaGrad,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown optimizer `{other}` (expected accelegrad or adagrad)"
                )))
            }
        };
        let size = match (self.diameter, self.rho) {
            (Some(d), None) => {
                if !d.is_finite() || d <= 0.0 {
                    return Err(Error::InvalidArgument("D must be positive".into()));
                }
                SizeSpec::Diameter(d)
            }
            (None, Some(r)) => {
                if !r.is_finite() || r <= 0.0 {
                    return Err(Error::InvalidArgument("rho must be positive".into()));
                }
                SizeSpec::Rho {
                    rho: r,
                    ref_budget: self.ref_budget.unwrap_or(10_000),
                }
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidArgument(
                    "exactly one of D and rho must be given, found both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "exactly one of D and rho must be given, found neither".into(),
                ))
            }
        };
        let grad_bound = self.grad_bound.unwrap_or(0.0);
        if grad_bound < 0.0 {
            return Err(Error::InvalidArgument("G must be nonnegative".into()));
        }
        let project_y = self.project_y.unwrap_or(false);
        let skip_projection = self.skip_projection.unwrap_or(false);
        if project_y && skip_projection {
            return Err(Error::InvalidArgument(
                "project_y and skip_projection are mutually exclusive".into(),
            ));
        }
        if method == Method::AdaGrad && (project_y || skip_projection || grad_bound != 0.0) {
            return Err(Error::InvalidArgument(
                "G, project_y, and skip_projection apply to accelegrad only".into(),
            ));
        }

        let oracle_seed = self.oracle_seed.unwrap_or_else(|| seed.wrapping_add(1));
        let oracle = match self.oracle.as_deref().unwrap_or("exact") {
            "exact" => OracleSpec::Exact,
            "minibatch" => {
                let batch = self.batch.ok_or_else(|| {
                    Error::InvalidArgument("`b` is required for oracle=minibatch".into())
                })?;
                if batch == 0 {
                    return Err(Error::InvalidArgument("b must be >= 1".into()));
                }
                OracleSpec::Minibatch {
                    batch: batch as usize,
                    seed: oracle_seed,
                }
            }
            "noise" => {
                let sigma = self.noise_sigma.ok_or_else(|| {
                    Error::InvalidArgument("`noise_sigma` is required for oracle=noise".into())
                })?;
                if sigma < 0.0 {
                    return Err(Error::InvalidArgument("noise_sigma must be >= 0".into()));
                }
                OracleSpec::Noise {
                    sigma,
                    seed: oracle_seed,
                }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown oracle `{other}` (expected exact, minibatch, or noise)"
                )))
            }
        };

        let iterations = self
            .iterations
            .ok_or_else(|| Error::InvalidArgument("`T` is required".into()))?;
        if iterations == 0 {
            return Err(Error::InvalidArgument("T must be >= 1".into()));
        }

        let cadence = match self.cadence.as_deref() {
            None | Some("auto") => Cadence::default_for(iterations),
            Some("log") => Cadence::Logarithmic { target: 200 },
            Some(other) => {
                let every: u64 = other.parse().map_err(|_| {
                    Error::InvalidArgument(format!(
                        "invalid cadence `{other}` (expected a positive integer, `log`, or `auto`)"
                    ))
                })?;
                if every == 0 {
                    return Err(Error::InvalidArgument("cadence must be >= 1".into()));
                }
                Cadence::Every(every)
            }
        };

        Ok(RunConfig {
            problem,
            optimizer: OptimizerSpec {
                method,
                size,
                grad_bound,
                project_y,
                skip_projection,
            },
            oracle,
            iterations,
            cadence,
            out: self.out.as_ref().map(PathBuf::from),
        })
    }
}

/// Fully validated run description.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub oracle: OracleSpec,
    pub iterations: u64,
    pub cadence: Cadence,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub enum ProblemSpec {
    Generated {
        n: usize,
        d: usize,
        p: PNorm,
        sigma2: f64,
        seed: u64,
    },
    Libsvm {
        path: PathBuf,
        dim: Option<usize>,
        loss: LossKind,
        l2: f64,
    },
    Container {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    AcceleGrad,
    AdaGrad,
}

/// Feasible-set size: an explicit diameter, or a multiple of the distance
/// from the initial point to a reference solution.
#[derive(Clone, Copy, Debug)]
pub enum SizeSpec {
    Diameter(f64),
    Rho { rho: f64, ref_budget: u64 },
}

#[derive(Clone, Copy, Debug)]
pub struct OptimizerSpec {
    pub method: Method,
    pub size: SizeSpec,
    pub grad_bound: f64,
    pub project_y: bool,
    pub skip_projection: bool,
}

#[derive(Clone, Copy, Debug)]
pub enum OracleSpec {
    Exact,
    Minibatch { batch: usize, seed: u64 },
    Noise { sigma: f64, seed: u64 },
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "problem = reg\nn = 100\nd = 10\np = 2\nT = 50\nrho = 1\n";

    #[test]
    fn parses_and_resolves_a_basic_file() {
        let raw = RawConfig::parse_str(BASE).unwrap();
        let cfg = raw.resolve(None).unwrap();
        assert_eq!(cfg.iterations, 50);
        assert!(matches!(cfg.optimizer.method, Method::AcceleGrad));
        assert!(matches!(cfg.optimizer.size, SizeSpec::Rho { rho, .. } if rho == 1.0));
        assert!(matches!(cfg.oracle, OracleSpec::Exact));
        assert!(matches!(
            cfg.problem,
            ProblemSpec::Generated { n: 100, d: 10, .. }
        ));
    }

    #[test]
    fn comments_quotes_and_spacing_are_tolerated() {
        let text = "# a comment\nproblem = reg\nn=4\nd = 2 # inline\np = 1\nT = 1\nD = \"2.5\"\n";
        let raw = RawConfig::parse_str(text).unwrap();
        let cfg = raw.resolve(None).unwrap();
        assert!(matches!(cfg.optimizer.size, SizeSpec::Diameter(d) if d == 2.5));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected_with_line_numbers() {
        let err = RawConfig::parse_str("bogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = RawConfig::parse_str("n = 1\nn = 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = RawConfig::parse_str("T = not_a_number\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn exactly_one_of_diameter_and_rho() {
        let both = format!("{BASE}D = 1\n");
        assert!(RawConfig::parse_str(&both).unwrap().resolve(None).is_err());
        let neither = "problem = reg\nn = 1\nd = 1\np = 2\nT = 1\n";
        assert!(RawConfig::parse_str(neither)
            .unwrap()
            .resolve(None)
            .is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let file = RawConfig::parse_str(BASE).unwrap();
        let flags = RawConfig {
            iterations: Some(99),
            ..RawConfig::default()
        };
        let cfg = file.overlay(flags).resolve(None).unwrap();
        assert_eq!(cfg.iterations, 99);
    }

    #[test]
    fn environment_seed_is_a_fallback_only() {
        let cfg = RawConfig::parse_str(BASE)
            .unwrap()
            .resolve(Some(7))
            .unwrap();
        assert!(matches!(
            cfg.problem,
            ProblemSpec::Generated { seed: 7, .. }
        ));
        let with_seed = format!("{BASE}seed = 3\n");
        let cfg = RawConfig::parse_str(&with_seed)
            .unwrap()
            .resolve(Some(7))
            .unwrap();
        assert!(matches!(
            cfg.problem,
            ProblemSpec::Generated { seed: 3, .. }
        ));
    }

    #[test]
    fn adagrad_rejects_accelegrad_only_flags() {
        let text = format!("{BASE}opt = adagrad\nskip_projection = true\n");
        assert!(RawConfig::parse_str(&text).unwrap().resolve(None).is_err());
    }

    #[test]
    fn minibatch_oracle_requires_batch_size() {
        let text = format!("{BASE}oracle = minibatch\n");
        assert!(RawConfig::parse_str(&text).unwrap().resolve(None).is_err());
        let text = format!("{BASE}oracle = minibatch\nb = 4\n");
        let cfg = RawConfig::parse_str(&text).unwrap().resolve(None).unwrap();
        assert!(matches!(cfg.oracle, OracleSpec::Minibatch { batch: 4, .. }));
    }

    #[test]
    fn cadence_strings_resolve() {
        let text = format!("{BASE}cadence = log\n");
        let cfg = RawConfig::parse_str(&text).unwrap().resolve(None).unwrap();
        assert!(matches!(cfg.cadence, Cadence::Logarithmic { .. }));
        let text = format!("{BASE}cadence = 10\n");
        let cfg = RawConfig::parse_str(&text).unwrap().resolve(None).unwrap();
        assert!(matches!(cfg.cadence, Cadence::Every(10)));
        let text = format!("{BASE}cadence = sometimes\n");
        assert!(RawConfig::parse_str(&text).unwrap().resolve(None).is_err());
    }
}
