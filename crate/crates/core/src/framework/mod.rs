//! The reflected forward-backward iteration in base (`z`, `n−1` blocks) and
//! lifted (`w`, `n` blocks) form, the solver loop and its diagnostics.

mod sweep;
mod trace;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use trace::{ergodic_residual_rate, log_log_slope, RunSummary, RunTrace, TraceRecord};

use crate::blockspace::{block_apply_into, block_apply_transpose_into, BlockVector, DenseMatrix};
use crate::error::{shape_err, Error, Result};
use crate::operators::OperatorTriple;
use crate::structure::SplittingDesign;

use sweep::SweepPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Base,
    Lifted,
}

/// Relaxation weights `γ_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relaxation {
    Constant(f64),
    /// Cycled in order; every entry must lie in `(0, 1)`.
    Periodic(Vec<f64>),
}

impl Relaxation {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Relaxation::Constant(g) => *g,
            Relaxation::Periodic(gs) => gs[k % gs.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            Relaxation::Constant(g) => std::slice::from_ref(g),
            Relaxation::Periodic(gs) if gs.is_empty() => {
                return Err(Error::Domain("periodic relaxation schedule is empty".into()))
            }
            Relaxation::Periodic(gs) => gs,
        };
        match values.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            Some(g) => Err(Error::Domain(format!("relaxation γ = {} must lie in (0, 1)", g))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub gamma: Relaxation,
    pub max_iter: usize,
    /// Threshold on `‖Mᵀx‖`; consensus must also fall below `10·tol`.
    pub tol: f64,
    pub mode: Mode,
    pub seed: u64,
    /// Evaluate the metric every this many iterations (and at the last one).
    pub metric_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: Relaxation::Constant(0.5),
            max_iter: 10_000,
            tol: 1e-8,
            mode: Mode::Base,
            seed: 0,
            metric_every: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.gamma.validate()?;
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        if self.metric_every == 0 {
            return Err(Error::Domain("metric_every must be at least 1".into()));
        }
        Ok(())
    }
}

/// Governor state (`z` or `w`) and the last sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationState {
    pub mode: Mode,
    /// `z` with `n−1` blocks in base form, `w` with `n` blocks in lifted form.
    pub governor: BlockVector,
    pub x: BlockVector,
    pub k: usize,
}

/// Reusable stepping engine for one (problem, design, mode).
#[derive(Clone, Debug)]
pub struct Iteration<'a> {
    problem: &'a OperatorTriple,
    plan: SweepPlan,
    mode: Mode,
    /// `M` in base form, `𝓛` in lifted form.
    governor: DenseMatrix,
    drive: BlockVector,
    image: BlockVector,
}

impl<'a> Iteration<'a> {
    pub fn new(problem: &'a OperatorTriple, design: &SplittingDesign, mode: Mode) -> Result<Self> {
        let plan = SweepPlan::new(problem, design)?;
        let (n, dim) = (plan.n, plan.dim);
        let (governor, image_blocks) = match mode {
            Mode::Base => (design.base_governor()?, n - 1),
            Mode::Lifted => match design.laplacian() {
                Some(lap) => (lap.clone(), n),
                None => return Err(Error::Design("lifted mode requires a Laplacian".into())),
            },
        };
        Ok(Self {
            problem,
            plan,
            mode,
            governor,
            drive: BlockVector::zeros(n, dim),
            image: BlockVector::zeros(image_blocks, dim),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Stepsizes `d_i = 2/K_ii`.
    pub fn stepsizes(&self) -> &[f64] {
        &self.plan.d
    }

    pub fn governor_blocks(&self) -> usize {
        match self.mode {
            Mode::Base => self.plan.n - 1,
            Mode::Lifted => self.plan.n,
        }
    }

    /// Zero governor, as the lifted equivalence requires.
    pub fn initial_state(&self) -> IterationState {
        self.state_from(BlockVector::zeros(self.governor_blocks(), self.plan.dim))
            .expect("zero state has the right shape")
    }

    pub fn state_from(&self, governor: BlockVector) -> Result<IterationState> {
        if governor.num_blocks() != self.governor_blocks() || governor.dim() != self.plan.dim {
            return shape_err(format!(
                "governor state must have {} blocks of dimension {}, got {}x{}",
                self.governor_blocks(),
                self.plan.dim,
                governor.num_blocks(),
                governor.dim()
            ));
        }
        Ok(IterationState {
            mode: self.mode,
            governor,
            x: BlockVector::zeros(self.plan.n, self.plan.dim),
            k: 0,
        })
    }

    /// Computes `x` from the governor state without updating it.
    pub fn sweep(&mut self, governor: &BlockVector, x: &mut BlockVector) {
        match self.mode {
            Mode::Base => block_apply_into(&self.governor, governor, &mut self.drive),
            Mode::Lifted => self.drive.as_flat_mut().copy_from_slice(governor.as_flat()),
        }
        self.plan.sweep(self.problem, &self.drive, x);
    }

    /// `Mᵀx` (base) or `𝓛x` (lifted) into the internal buffer, returning
    /// `‖Mᵀx‖` in both cases.
    fn apply_governor(&mut self, x: &BlockVector) -> f64 {
        match self.mode {
            Mode::Base => {
                block_apply_transpose_into(&self.governor, x, &mut self.image);
                self.image.norm()
            }
            Mode::Lifted => {
                block_apply_into(&self.governor, x, &mut self.image);
                x.dot(&self.image).max(0.0).sqrt()
            }
        }
    }

    /// One full iteration; returns `‖Mᵀx^k‖`.
    pub fn step(&mut self, state: &mut IterationState, gamma: f64) -> f64 {
        let mut x = std::mem::replace(&mut state.x, BlockVector::zeros(0, 1));
        self.sweep(&state.governor, &mut x);
        let residual = self.apply_governor(&x);
        state.governor.axpy(-gamma, &self.image);
        state.x = x;
        state.k += 1;
        residual
    }

    /// `‖Mᵀv‖` for an arbitrary block vector.
    pub fn residual_of(&mut self, v: &BlockVector) -> f64 {
        self.apply_governor(v)
    }
}

/// `x` from one sweep at governor `z` (base form).
pub fn inner_sweep(problem: &OperatorTriple, design: &SplittingDesign, z: &BlockVector) -> Result<BlockVector> {
    let mut it = Iteration::new(problem, design, Mode::Base)?;
    let state = it.state_from(z.clone())?;
    let mut x = state.x;
    it.sweep(&state.governor, &mut x);
    Ok(x)
}

/// `z − γ·(Mᵀ ⊗ Id)x`.
pub fn governor_update(z: &BlockVector, x: &BlockVector, gamma: f64, m: &DenseMatrix) -> Result<BlockVector> {
    if m.rows() != x.num_blocks() || m.cols() != z.num_blocks() || x.dim() != z.dim() {
        return shape_err(format!(
            "M is {}x{} but x has {} blocks and z has {}",
            m.rows(),
            m.cols(),
            x.num_blocks(),
            z.num_blocks()
        ));
    }
    let mut image = BlockVector::zeros(m.cols(), x.dim());
    block_apply_transpose_into(m, x, &mut image);
    let mut out = z.clone();
    out.axpy(-gamma, &image);
    Ok(out)
}

/// One lifted iteration: the sweep driven by `d_i·w_i`, then `w − γ𝓛x`.
pub fn lifted_step(
    problem: &OperatorTriple,
    design: &SplittingDesign,
    w: &BlockVector,
    gamma: f64,
) -> Result<(BlockVector, BlockVector)> {
    let mut it = Iteration::new(problem, design, Mode::Lifted)?;
    let mut state = it.state_from(w.clone())?;
    it.step(&mut state, gamma);
    Ok((state.x, state.governor))
}

/// Problem metric evaluated at the block mean of a sweep.
pub type MetricFn<'a> = &'a dyn Fn(&[f64]) -> f64;

/// Optional per-iteration diagnostics.
#[derive(Clone, Copy, Default)]
pub struct Diagnostics<'a> {
    /// Problem metric evaluated at the block mean.
    pub metric: Option<MetricFn<'a>>,
    /// Known fixed point of the governor for Fejér tracking.
    pub fixed_point: Option<&'a BlockVector>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Block mean of the returned sweep.
    pub x: Vec<f64>,
    /// Final state when converged, otherwise the lowest-residual one.
    pub state: IterationState,
    pub trace: RunTrace,
    pub converged: bool,
    pub summary: RunSummary,
}

const DIVERGENCE_FACTOR: f64 = 1e8;

pub fn solve(problem: &OperatorTriple, design: &SplittingDesign, config: &SolverConfig) -> Result<Solution> {
    solve_with(problem, design, config, Diagnostics::default())
}

/// Iterates until `‖Mᵀx‖ ≤ tol` and consensus `≤ 10·tol`, or `max_iter`.
pub fn solve_with(
    problem: &OperatorTriple,
    design: &SplittingDesign,
    config: &SolverConfig,
    diagnostics: Diagnostics<'_>,
) -> Result<Solution> {
    config.validate()?;
    let start = Instant::now();
    let mut it = Iteration::new(problem, design, config.mode)?;
    let mut state = it.initial_state();
    if let Some(fp) = diagnostics.fixed_point {
        it.state_from(fp.clone())?;
    }
    let (n, dim) = (design.n(), problem.dim());
    let mut x_sum = BlockVector::zeros(n, dim);
    let mut trace = RunTrace::default();
    let mut best: Option<(f64, IterationState)> = None;
    let mut first_residual = None;
    let mut converged = false;
    for k in 0..config.max_iter {
        let residual = it.step(&mut state, config.gamma.at(k));
        let iter = k + 1;
        if !state.x.is_finite() || !residual.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                reason: "non-finite iterate".into(),
            });
        }
        let reference = *first_residual.get_or_insert(residual);
        if residual > DIVERGENCE_FACTOR * reference.max(config.tol) {
            return Err(Error::Divergence {
                iteration: iter,
                reason: format!(
                    "residual {:.3e} exceeds 1e8 times its initial value {:.3e}",
                    residual, reference
                ),
            });
        }
        x_sum.axpy(1.0, &state.x);
        let consensus = state.x.consensus_error();
        converged = residual <= config.tol && consensus <= 10.0 * config.tol;
        let last = converged || iter == config.max_iter;
        let metric = diagnostics
            .metric
            .filter(|_| last || iter % config.metric_every == 0)
            .map(|f| f(&state.x.mean_block()));
        let fejer = diagnostics
            .fixed_point
            .map(|fp| state.governor.sub(fp).expect("shape checked").norm());
        let ergodic = it.residual_of(&x_sum) / iter as f64;
        trace.records.push(TraceRecord {
            iter,
            residual,
            consensus,
            ergodic,
            metric,
            fejer,
        });
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, state.clone()));
        }
        if converged {
            break;
        }
    }
    let state = if converged {
        state
    } else {
        best.map(|(_, s)| s).expect("at least one iteration")
    };
    let last = trace.last().expect("at least one iteration");
    let summary = RunSummary {
        iterations: trace.len(),
        final_residual: last.residual,
        final_consensus: last.consensus,
        wall_time_secs: start.elapsed().as_secs_f64(),
        converged,
    };
    Ok(Solution {
        x: state.x.mean_block(),
        state,
        trace,
        converged,
        summary,
    })
}
