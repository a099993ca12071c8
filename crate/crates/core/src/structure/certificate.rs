use std::fmt;

use serde::Serialize;

use crate::blockspace::{singular_values, sum_zero_basis, symmetric_eigen, DenseMatrix};
use crate::error::Result;

use super::design::check_constants;
use super::{build_k, coupling_matrix, validate_causal_pair, validate_relatively_causal, SplittingDesign};

/// Absolute tolerance on sum constraints.
pub const SUM_TOL: f64 = 1e-10;
/// Relative singular-value cutoff for rank decisions.
pub const RANK_TOL: f64 = 1e-9;
/// Relative slack for PSD decisions.
pub const PSD_TOL: f64 = 1e-9;

/// One verdict of a [`Certificate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub details: Vec<String>,
}

impl Verdict {
    fn from_failures(details: Vec<String>) -> Self {
        Self {
            passed: details.is_empty(),
            details,
        }
    }
}

/// The PSD verdict together with the numbers behind it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsdVerdict {
    pub passed: bool,
    pub details: Vec<String>,
    /// Smallest eigenvalue of `K − MMᵀ − W`.
    pub min_eigenvalue: f64,
    /// Acceptance slack `1e-9·(1 + ‖S‖₂)`.
    pub slack: f64,
    /// Smallest eigenvalue of `K − MMᵀ − W` restricted to `{Σ x_i = 0}`.
    /// The full matrix always annihilates `e` in the quadratic form, so this is
    /// the meaningful distance from the boundary.
    pub margin: f64,
}

/// Three-part certificate: governor kernel, sums and causality, PSD.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub kernel: Verdict,
    pub sums: Verdict,
    pub psd: PsdVerdict,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.kernel.passed && self.sums.passed && self.psd.passed
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |ok: bool| if ok { "PASS" } else { "FAIL" };
        writeln!(f, "(a) kernel:            {}", tag(self.kernel.passed))?;
        for d in &self.kernel.details {
            writeln!(f, "      {}", d)?;
        }
        writeln!(f, "(b) sums + causality:  {}", tag(self.sums.passed))?;
        for d in &self.sums.details {
            writeln!(f, "      {}", d)?;
        }
        writeln!(
            f,
            "(c) psd:               {} (min eigenvalue {:.6e}, slack {:.1e}, margin {:.6e})",
            tag(self.psd.passed),
            self.psd.min_eigenvalue,
            self.psd.slack,
            self.psd.margin
        )?;
        for d in &self.psd.details {
            writeln!(f, "      {}", d)?;
        }
        Ok(())
    }
}

fn check_kernel(design: &SplittingDesign) -> Result<Verdict> {
    let n = design.n();
    let mut fails = Vec::new();
    if let Some(m) = design.governor() {
        let scale = 1.0 + m.max_abs();
        for (j, s) in m.col_sums().iter().enumerate() {
            if s.abs() > SUM_TOL * scale {
                fails.push(format!("column {} of M sums to {:.3e}, not 0", j + 1, s));
            }
        }
        let sv = singular_values(m);
        let top = sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|s| **s > RANK_TOL * top).count();
        if rank != n - 1 {
            fails.push(format!("M has rank {}, expected {}", rank, n - 1));
        }
    }
    if let Some(lap) = design.laplacian() {
        let scale = 1.0 + lap.max_abs();
        if lap.asymmetry() > SUM_TOL * scale {
            fails.push("Laplacian is not symmetric".into());
        }
        for (i, s) in lap.row_sums().iter().enumerate() {
            if s.abs() > SUM_TOL * scale {
                fails.push(format!("row {} of the Laplacian sums to {:.3e}, not 0", i + 1, s));
            }
        }
        if fails.is_empty() {
            let eig = symmetric_eigen(lap)?;
            let top = eig.max().abs();
            let small = eig.values.iter().filter(|v| v.abs() <= RANK_TOL * top).count();
            if eig.min() < -RANK_TOL * top {
                fails.push(format!("Laplacian has negative eigenvalue {:.3e}", eig.min()));
            }
            if small != 1 && n > 1 {
                fails.push(format!(
                    "Laplacian has {} near-zero eigenvalues, expected exactly 1",
                    small
                ));
            }
        }
        if let Some(m) = design.governor() {
            let diff = m.gram_rows().sub(lap)?.max_abs();
            if diff > SUM_TOL * scale {
                fails.push(format!("Laplacian differs from MMᵀ by {:.3e}", diff));
            }
        }
    }
    Ok(Verdict::from_failures(fails))
}

fn sum_failures(name: &str, what: &str, sums: &[f64], target: f64, fails: &mut Vec<String>) {
    for (j, s) in sums.iter().enumerate() {
        if (s - target).abs() > SUM_TOL {
            fails.push(format!(
                "{} {} of {} sums to {:.12}, expected {}",
                what,
                j + 1,
                name,
                s,
                target
            ));
        }
    }
}

fn check_sums(design: &SplittingDesign) -> Verdict {
    let mut fails = Vec::new();
    sum_failures("H", "column", &design.h().col_sums(), 1.0, &mut fails);
    sum_failures("G", "row", &design.g().row_sums(), 1.0, &mut fails);
    sum_failures("P", "column", &design.p().col_sums(), 1.0, &mut fails);
    sum_failures("Q", "column", &design.q().col_sums(), 1.0, &mut fails);
    sum_failures("R", "row", &design.r().row_sums(), 1.0, &mut fails);
    if let Some(u) = design.u() {
        sum_failures("U", "column", &u.col_sums(), 0.0, &mut fails);
    }
    let pair = validate_causal_pair(design.h(), design.g(), design.pattern_hg());
    if !pair.passed() {
        fails.push(format!("causality (H, G): {}", pair));
    }
    let triple = validate_relatively_causal(
        design.p(),
        design.q(),
        design.r(),
        design.pattern_e(),
        design.pattern_f(),
    );
    if !triple.passed() {
        fails.push(format!("relative causality (P, Q, R): {}", triple));
    }
    Verdict::from_failures(fails)
}

fn check_psd(design: &SplittingDesign, sigma: &[f64], lip: &[f64]) -> Result<PsdVerdict> {
    let mut fails = Vec::new();
    // Constant mismatches were rejected by the caller, so a build failure here
    // is a degenerate diagonal.
    let km = match build_k(design, sigma, lip) {
        Ok(km) => Some(km),
        Err(e) => {
            fails.push(e.to_string());
            None
        }
    };
    let k = match (&km, design.k()) {
        (Some(km), _) => km.k.clone(),
        (None, Some(k)) => k.clone(),
        (None, None) => {
            return Ok(PsdVerdict {
                passed: false,
                details: fails,
                min_eigenvalue: f64::NAN,
                slack: f64::NAN,
                margin: f64::NAN,
            })
        }
    };
    let scale = 1.0 + k.max_abs();
    if k.asymmetry() > SUM_TOL * scale {
        fails.push(format!("K is not symmetric (asymmetry {:.3e})", k.asymmetry()));
    }
    let total: f64 = k.row_sums().iter().sum();
    if total.abs() > SUM_TOL * scale * k.rows() as f64 {
        fails.push(format!("eᵀKe = {:.3e}, expected 0", total));
    }
    let w = coupling_matrix(design.h(), design.g(), design.p(), design.q(), design.r(), sigma, lip)?;
    let s = k.symmetrize().sub(&design.gram())?.sub(&w)?;
    let eig = symmetric_eigen(&s)?;
    let slack = PSD_TOL * (1.0 + eig.norm());
    if eig.min() < -slack {
        fails.push(format!(
            "K − MMᵀ − W has eigenvalue {:.6e} below −{:.1e}",
            eig.min(),
            slack
        ));
    }
    Ok(PsdVerdict {
        passed: fails.is_empty(),
        details: fails,
        min_eigenvalue: eig.min(),
        slack,
        margin: restricted_min_eigenvalue(&s)?,
    })
}

/// Smallest eigenvalue of `BᵀSB` with `B` an orthonormal basis of `e⊥`.
pub fn restricted_min_eigenvalue(s: &DenseMatrix) -> Result<f64> {
    let n = s.rows();
    if n < 2 {
        return Ok(f64::INFINITY);
    }
    let b = sum_zero_basis(n);
    let reduced = b.transpose().matmul(&s.symmetrize())?.matmul(&b)?;
    Ok(symmetric_eigen(&reduced.symmetrize())?.min())
}

/// Checks the three structural conditions a design must meet for the
/// iteration to converge.
///
/// Only constant mismatches are reported as errors; every analytic failure is
/// recorded in the certificate.
pub fn validate_assumption(design: &SplittingDesign, sigma: &[f64], lip: &[f64]) -> Result<Certificate> {
    check_constants(design, sigma, lip)?;
    Ok(Certificate {
        kernel: check_kernel(design)?,
        sums: check_sums(design),
        psd: check_psd(design, sigma, lip)?,
    })
}
