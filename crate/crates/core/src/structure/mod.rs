//! Staircase patterns, causality checks, construction of `K`, `N` and the
//! stepsizes, and certification of a design.

mod certificate;
mod design;
mod file;
mod staircase;

pub use certificate::{
    restricted_min_eigenvalue, validate_assumption, Certificate, PsdVerdict, Verdict, PSD_TOL, RANK_TOL, SUM_TOL,
};
pub use design::{build_k, coupling_matrix, default_k, upsilon, DesignParts, KernelMatrices, SplittingDesign};
pub use file::{DesignFile, LoadedDesign};
pub use staircase::{
    in_staircase, validate_causal_pair, validate_relatively_causal, CausalityReport, PatternSet, StaircaseVector,
    Violation,
};

use crate::blockspace::{block_apply, BlockVector};
use crate::error::{shape_err, Result};
use crate::operators::OperatorTriple;

/// Eager evaluation of the forward part
/// `H·B(Gx) + (P−Q)·C(Rx) + Q·C(Pᵀx)` at a full block vector `x`.
///
/// For a causal design, block `i` of the result only depends on blocks
/// `0..i` of `x`; this is what makes the sweep explicit.
pub fn forward_terms(design: &SplittingDesign, problem: &OperatorTriple, x: &BlockVector) -> Result<BlockVector> {
    if problem.m() != design.m() || problem.l() != design.l() || x.num_blocks() != design.n() {
        return shape_err("problem, design and point sizes disagree");
    }
    let b = problem.apply_b(&block_apply(design.g(), x)?)?;
    let mut out = block_apply(design.h(), &b)?;
    let c_r = problem.apply_c(&block_apply(design.r(), x)?)?;
    let c_p = problem.apply_c(&block_apply(&design.p().transpose(), x)?)?;
    out.axpy(1.0, &block_apply(&design.p().sub(design.q())?, &c_r)?);
    out.axpy(1.0, &block_apply(design.q(), &c_p)?);
    Ok(out)
}
