//! Operator oracles: resolvents of maximally monotone operators, cocoercive
//! maps and monotone Lipschitz maps, plus the concrete operators used by the
//! benchmark problems.

mod library;
mod oracle;

pub(crate) use library::simplex_project_into;
pub use library::{
    huber_derivative, huber_grad_component, huber_value, linear_monotone, prox_norm_distance, simplex_project,
};
pub use oracle::{
    check_cocoercive, check_firmly_nonexpansive, check_lipschitz_monotone, CocoerciveOracle, LipschitzMonotoneOracle,
    OperatorTriple, ResolventOracle, DEFAULT_SAMPLES, SAMPLE_TOL,
};
