//! Config-driven runs and comparison suites over the benchmark families.

mod bench;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::{solve_with, Diagnostics, Mode, Relaxation, RunSummary, RunTrace, SolverConfig};
use crate::operators::OperatorTriple;
use crate::presets::{certified_preset, crfb_default_scaled, preset_bounds, preset_design, LaplacianScale, PresetKind};
use crate::problems::{
    huber_objective, make_game_problem, make_huber_problem, primal_dual_gap, GameDistribution, GameProblem,
    HuberProblem, Scaling,
};
use crate::selection::SelectionOptions;
use crate::structure::{validate_assumption, DesignFile, SplittingDesign};

pub use bench::{run_suite, BenchSuite, BenchTable, CellResult, THREADS_ENV};

/// Gap solves inside traces use this residual tolerance.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Huber,
    Game,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `f(x̄)` for the Huber family.
    Objective,
    /// Primal–dual gap at the block mean for the game family.
    Gap,
    None,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_gamma() -> f64 {
    0.5
}
fn default_max_iter() -> usize {
    10_000
}
fn default_tol() -> f64 {
    1e-8
}
fn default_every() -> usize {
    10
}
fn default_selection_iters() -> usize {
    SelectionOptions::default().iters
}

/// Flat run description. Paths are resolved against the config file's
/// directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<GameDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
    #[serde(default = "one")]
    pub delta1: f64,
    #[serde(default = "two")]
    pub delta2: f64,
    /// `crfb`, `crfb-scaled`, `dfbr`, `pdyr`, `sdyr` or `file`.
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<PathBuf>,
    /// Preset stepsize; certified default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default = "default_selection_iters")]
    pub selection_iters: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default = "default_every")]
    pub metric_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

fn default_metric() -> Metric {
    Metric::None
}

pub(crate) fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("field {}", field),
        message: message.into(),
    }
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
}

/// A generated benchmark instance.
#[derive(Clone, Debug)]
pub enum Instance {
    Huber(HuberProblem),
    Game(GameProblem),
}

impl Instance {
    pub fn metric_value(&self, x: &[f64]) -> f64 {
        match self {
            Instance::Huber(p) => huber_objective(p, x),
            Instance::Game(g) => {
                let (u, v) = g.split(x);
                primal_dual_gap(g, u, v, GAP_TOL).map_or(f64::NAN, |gap| gap.gap)
            }
        }
    }
}

/// How a method resolved: the design, its mode and the parameters used.
#[derive(Clone, Debug)]
pub struct ResolvedMethod {
    pub design: SplittingDesign,
    pub mode: Mode,
    pub step: Option<f64>,
    pub lambda: Option<f64>,
}

/// Builds the design for `method` and certifies it against `ops`.
pub fn resolve_method(
    method: &str,
    ops: &OperatorTriple,
    step: Option<f64>,
    lambda: Option<f64>,
    design_path: Option<&Path>,
    selection_iters: usize,
) -> Result<ResolvedMethod> {
    let (sigma, lip) = (ops.sigmas(), ops.lips());
    let resolved = match method {
        "crfb" | "crfb-scaled" => {
            let opts = SelectionOptions {
                iters: selection_iters,
                ..SelectionOptions::default()
            };
            let scale = if method == "crfb" {
                LaplacianScale::Unit
            } else {
                LaplacianScale::Coupling
            };
            ResolvedMethod {
                design: crfb_default_scaled(ops.n(), &sigma, &lip, &opts, scale)?.design,
                mode: Mode::Lifted,
                step: None,
                lambda: None,
            }
        }
        "file" => {
            let path = design_path.ok_or_else(|| field_err("design", "method 'file' needs a design path"))?;
            let loaded = DesignFile::read(path)?.into_design()?;
            let mode = if loaded.design.governor().is_none() {
                Mode::Lifted
            } else {
                Mode::Base
            };
            ResolvedMethod {
                design: loaded.design,
                mode,
                step: None,
                lambda: None,
            }
        }
        name => {
            let kind: PresetKind = name.parse().map_err(|e: Error| field_err("method", e.to_string()))?;
            let (design, d, lam) = match step {
                None => certified_preset(kind, &sigma, &lip)?,
                Some(d) => {
                    let lam = match lambda {
                        Some(l) => l,
                        None => preset_bounds(kind, &sigma, &lip)?.default_lambda(d)?,
                    };
                    (preset_design(kind, &sigma, &lip, d, lam)?, d, lam)
                }
            };
            ResolvedMethod {
                design,
                mode: Mode::Base,
                step: Some(d),
                lambda: Some(lam),
            }
        }
    };
    let cert = validate_assumption(&resolved.design, &sigma, &lip)?;
    if !cert.passed() {
        return Err(Error::Design(format!("design fails certification:\n{}", cert)));
    }
    Ok(resolved)
}

/// Outcome of [`run_experiment`]; `error` is set when the run failed after
/// the design was accepted.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub family: Family,
    pub method: String,
    pub seed: u64,
    pub step: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub final_consensus: f64,
    pub final_metric: Option<f64>,
    pub wall_time_secs: f64,
    pub converged: bool,
    pub error: Option<String>,
    pub solution: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub trace: RunTrace,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = parse_json(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut config = Self::parse(&read_text(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.design, &mut config.trace, &mut config.summary]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    fn check(&self) -> Result<()> {
        match (self.family, self.metric) {
            (Family::Huber, Metric::Gap) => return Err(field_err("metric", "gap is defined for the game family")),
            (Family::Game, Metric::Objective) => {
                return Err(field_err("metric", "objective is defined for the huber family"))
            }
            _ => {}
        }
        if self.family == Family::Game && self.distribution.is_none() {
            return Err(field_err("distribution", "game runs need a distribution"));
        }
        if self.method == "file" && self.design.is_none() {
            return Err(field_err("design", "method 'file' needs a design path"));
        }
        Ok(())
    }

    pub fn instance(&self) -> Result<(Instance, OperatorTriple)> {
        match self.family {
            Family::Huber => {
                let (p, ops) = make_huber_problem(
                    self.n,
                    self.m,
                    self.l,
                    self.d,
                    self.delta1,
                    self.delta2,
                    self.scaling.unwrap_or(Scaling::None),
                    self.seed,
                )?;
                Ok((Instance::Huber(p), ops))
            }
            Family::Game => {
                let dist = self.distribution.expect("checked");
                let (g, ops) = make_game_problem(self.n, self.m, self.l, self.d, dist, self.seed)?;
                Ok((Instance::Game(g), ops))
            }
        }
    }

    fn solver_config(&self, mode: Mode) -> SolverConfig {
        SolverConfig {
            gamma: Relaxation::Constant(self.gamma),
            max_iter: self.max_iter,
            tol: self.tol,
            mode: self.mode.unwrap_or(mode),
            seed: self.seed,
            metric_every: self.metric_every,
        }
    }
}

/// Generates the instance, resolves and certifies the design, then solves.
/// Input and certification problems are returned as errors; a failure of
/// the iteration itself is reported inside the summary.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let (instance, ops) = config.instance()?;
    let method = resolve_method(
        &config.method,
        &ops,
        config.step,
        config.lambda,
        config.design.as_deref(),
        config.selection_iters,
    )?;
    let solver = config.solver_config(method.mode);
    solver.validate().map_err(|e| field_err("gamma", e.to_string()))?;
    let metric_fn = |x: &[f64]| instance.metric_value(x);
    let diagnostics = Diagnostics {
        metric: (config.metric != Metric::None).then_some(&metric_fn as &dyn Fn(&[f64]) -> f64),
        fixed_point: None,
    };
    let mut summary = ExperimentSummary {
        family: config.family,
        method: config.method.clone(),
        seed: config.seed,
        step: method.step,
        lambda: method.lambda,
        gamma: config.gamma,
        iterations: 0,
        final_residual: f64::NAN,
        final_consensus: f64::NAN,
        final_metric: None,
        wall_time_secs: 0.0,
        converged: false,
        error: None,
        solution: Vec::new(),
    };
    match solve_with(&ops, &method.design, &solver, diagnostics) {
        Ok(sol) => {
            let RunSummary {
                iterations,
                final_residual,
                final_consensus,
                wall_time_secs,
                converged,
            } = sol.summary;
            summary.iterations = iterations;
            summary.final_residual = final_residual;
            summary.final_consensus = final_consensus;
            summary.wall_time_secs = wall_time_secs;
            summary.converged = converged;
            summary.final_metric = (config.metric != Metric::None).then(|| instance.metric_value(&sol.x));
            summary.solution = sol.x;
            Ok(ExperimentOutcome {
                summary,
                trace: sol.trace,
            })
        }
        Err(e @ Error::Divergence { .. }) => {
            if let Error::Divergence { iteration, .. } = &e {
                summary.iterations = *iteration;
            }
            summary.error = Some(e.to_string());
            Ok(ExperimentOutcome {
                summary,
                trace: RunTrace::default(),
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAME: &str = r#"{"family": "game", "n": 4, "m": 3, "l": 2, "d": 3,
        "distribution": "uniform", "seed": 3, "method": "crfb",
        "selection_iters": 500, "tol": 1e-7, "max_iter": 50000, "metric": "gap"}"#;

    #[test]
    fn game_run_converges_with_small_gap() {
        let config = ExperimentConfig::parse(GAME).unwrap();
        let out = run_experiment(&config).unwrap();
        assert!(out.summary.converged, "{:?}", out.summary);
        assert!(out.summary.final_metric.unwrap() < 1e-5);
        let again = run_experiment(&config).unwrap();
        assert_eq!(out.trace.to_csv(), again.trace.to_csv());
    }

    #[test]
    fn presets_resolve_with_certified_defaults() {
        for method in ["dfbr", "pdyr", "sdyr"] {
            let text = GAME.replace("\"crfb\"", &format!("\"{}\"", method));
            let config = ExperimentConfig::parse(&text).unwrap();
            let (_, ops) = config.instance().unwrap();
            let r = resolve_method(method, &ops, None, None, None, 10).unwrap();
            assert_eq!(r.mode, Mode::Base);
            assert!(r.step.unwrap() > 0.0);
        }
    }

    #[test]
    fn config_errors_are_located() {
        let bad = GAME.replace("\"gap\"", "\"objective\"");
        match ExperimentConfig::parse(&bad) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "field metric"),
            other => panic!("unexpected {:?}", other),
        }
        let bad = GAME.replace("\"crfb\"", "\"nope\"");
        let config = ExperimentConfig::parse(&bad).unwrap();
        assert!(matches!(run_experiment(&config), Err(Error::Parse { .. })));
    }
}
