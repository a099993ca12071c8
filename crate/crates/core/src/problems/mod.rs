//! Benchmark instances and their metrics.

mod game;
mod huber;
mod linear;
mod qp;

pub use game::{
    grid_gap_2x2, make_game_problem, primal_dual_gap, primal_dual_gap_fw, GameDistribution, GameProblem, GapValue,
};
pub use huber::{
    fermat_residual, huber_objective, make_huber_problem, reference_optimum, HuberProblem, ReferenceOptimum, Scaling,
};
pub use linear::{make_affine_problem, AffineProblem};
pub use qp::{simplex_qp_apg, simplex_qp_away_fw, SimplexQpSolution, MAX_QP_ITERS};
