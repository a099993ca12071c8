//! Ready-made designs: the ring, star and path realizations with their
//! stepsize bounds, and the complete-graph lifted design built from
//! selection.

use std::fmt;

use serde::Serialize;

use crate::blockspace::{generalized_min_eigenvalue, sum_zero_basis, DenseMatrix};
use crate::error::{Error, Result};
use crate::selection::{laplacian, minimize_upsilon, LaplacianKind, SelectionOptions, SelectionResult};
use crate::structure::{coupling_matrix, DesignParts, PatternSet, SplittingDesign};

/// The three fixed-size realizations. Each uses `m = n−1` cocoercive and
/// `l = n−2` Lipschitz operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PresetKind {
    /// Distributed forward-backward with reflections: ring `K`.
    Dfbr,
    /// Parallel Davis–Yin with reflections: star `K` centred on row 0.
    Pdyr,
    /// Sequential Davis–Yin with reflections: path `K`.
    Sdyr,
}

impl PresetKind {
    pub const ALL: [PresetKind; 3] = [PresetKind::Dfbr, PresetKind::Pdyr, PresetKind::Sdyr];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Dfbr => "dfbr",
            PresetKind::Pdyr => "pdyr",
            PresetKind::Sdyr => "sdyr",
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dfbr" => Ok(PresetKind::Dfbr),
            "pdyr" => Ok(PresetKind::Pdyr),
            "sdyr" => Ok(PresetKind::Sdyr),
            other => Err(Error::Domain(format!("unknown preset '{}'", other))),
        }
    }
}

/// Row-wise stepsize conditions `k_i − d·x_i ≥ c_i·λ²d`.
///
/// `k = diag(d·K)`, `c = diag(MMᵀ)/λ²` and `x = diag(W)`; all three are
/// independent of `d` and `λ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PresetBounds {
    pub kind: PresetKind,
    pub k: Vec<f64>,
    pub c: Vec<f64>,
    pub x: Vec<f64>,
    /// `min_i k_i/x_i`.
    pub d_bar: f64,
    /// Row attaining `d_bar`.
    pub active: usize,
}

impl PresetBounds {
    pub fn n(&self) -> usize {
        self.k.len()
    }

    /// Upper bound on `λ²d` (equivalently on the relaxed step `λ²dγ`) at
    /// stepsize `d`; negative once `d > d_bar`.
    pub fn gamma_cap(&self, d: f64) -> f64 {
        self.slack_rows(d).fold(f64::INFINITY, |acc, (_, s)| acc.min(s))
    }

    fn slack_rows(&self, d: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n()).map(move |i| (i, (self.k[i] - d * self.x[i]) / self.c[i]))
    }

    fn binding_row(&self, d: f64) -> usize {
        self.slack_rows(d)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map_or(0, |(i, _)| i)
    }

    /// The inequality of row `i` in readable form.
    pub fn describe_row(&self, i: usize) -> String {
        format!("row {}: {} − d·{:.6} ≥ {}·λ²d", i + 1, self.k[i], self.x[i], self.c[i])
    }

    pub fn notes(&self) -> String {
        format!("d̄ = {:.12} set by {}", self.d_bar, self.describe_row(self.active))
    }

    fn check_d(&self, d: f64) -> Result<()> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("stepsize d must be positive, got {}", d)));
        }
        if d >= self.d_bar {
            return Err(Error::Bound(format!(
                "d = {} is not below d̄ = {}; violates {}",
                d,
                self.d_bar,
                self.describe_row(self.active)
            )));
        }
        Ok(())
    }

    /// `λ` with `λ²d` at half of [`gamma_cap`](Self::gamma_cap).
    pub fn default_lambda(&self, d: f64) -> Result<f64> {
        self.check_d(d)?;
        Ok((0.5 * self.gamma_cap(d) / d).sqrt())
    }

    /// Checks `0 < d < d̄` and `λ²d ≤ gamma_cap(d)`.
    pub fn check(&self, d: f64, lambda: f64) -> Result<()> {
        self.check_d(d)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("λ must be positive, got {}", lambda)));
        }
        let cap = self.gamma_cap(d);
        if lambda * lambda * d > cap * (1.0 + 1e-12) {
            return Err(Error::Bound(format!(
                "λ²d = {} exceeds the slack {}; violates {}",
                lambda * lambda * d,
                cap,
                self.describe_row(self.binding_row(d))
            )));
        }
        Ok(())
    }
}

fn check_constants(sigma: &[f64], lip: &[f64]) -> Result<usize> {
    let n = sigma.len() + 1;
    if n < 3 {
        return Err(Error::Shape(format!(
            "presets need n ≥ 3, i.e. at least 2 cocoercive constants, got {}",
            sigma.len()
        )));
    }
    if lip.len() != n - 2 {
        return Err(Error::Shape(format!(
            "{} cocoercive constants require {} Lipschitz constants, got {}",
            n - 1,
            n - 2,
            lip.len()
        )));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!("cocoercivity constant {} is not positive", s)));
    }
    if let Some(v) = lip.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("Lipschitz constant {} is negative", v)));
    }
    Ok(n)
}

/// Closed-form row conditions.
pub fn preset_bounds(kind: PresetKind, sigma: &[f64], lip: &[f64]) -> Result<PresetBounds> {
    let n = check_constants(sigma, lip)?;
    let s = |i: isize| {
        if (0..n as isize - 1).contains(&i) {
            1.0 / sigma[i as usize]
        } else {
            0.0
        }
    };
    let lz = |i: isize| {
        if (0..n as isize - 2).contains(&i) {
            lip[i as usize]
        } else {
            0.0
        }
    };
    let end = |i: usize| i == 0 || i == n - 1;
    let (mut k, mut c, mut x) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let r = i as isize;
        let chain = 0.5 * (s(r - 1) + s(r)) + lz(r - 2) + 2.0 * lz(r - 1) + lz(r);
        let (ki, ci, xi) = match kind {
            PresetKind::Dfbr => (2.0, if end(i) { 1.0 } else { 2.0 }, chain),
            PresetKind::Sdyr => {
                if end(i) {
                    (2.0, 1.0, chain)
                } else {
                    (4.0, 2.0, chain)
                }
            }
            PresetKind::Pdyr => {
                if i == 0 {
                    let total = 0.5 * sigma.iter().map(|v| 1.0 / v).sum::<f64>() + lip.iter().sum::<f64>();
                    (2.0 * (n - 1) as f64, (n - 1) as f64, total)
                } else {
                    (2.0, 1.0, 0.5 * s(r - 1) + lz(r - 2) + 2.0 * lz(r - 1))
                }
            }
        };
        k.push(ki);
        c.push(ci);
        x.push(xi);
    }
    let (active, d_bar) = (0..n)
        .map(|i| (i, k[i] / x[i]))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n ≥ 3");
    Ok(PresetBounds {
        kind,
        k,
        c,
        x,
        d_bar,
        active,
    })
}

/// Staircase vectors shared by every preset: `Ē = (0, 1, …, n−1)`,
/// `Ẽ = (0, 1, …, n−2, n−2)` and `F = (0, 0, 1, …, n−2)`.
pub fn preset_patterns(n: usize) -> Result<PatternSet> {
    PatternSet::default_for(n, n - 1, n - 2)
}

/// The realization's matrices at `(d, λ)` without any bound checks.
pub fn preset_matrices(kind: PresetKind, n: usize, d: f64, lambda: f64) -> Result<SplittingDesign> {
    if n < 3 {
        return Err(Error::Shape(format!("presets need n ≥ 3, got {}", n)));
    }
    let unit = |cond: bool| if cond { 1.0 } else { 0.0 };
    let star = kind == PresetKind::Pdyr;
    let governor = DenseMatrix::from_fn(n, n - 1, |i, j| {
        if star && i == 0 {
            lambda
        } else if i == j + 1 {
            -lambda
        } else if !star && i == j {
            lambda
        } else {
            0.0
        }
    });
    let k = match kind {
        PresetKind::Dfbr => DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 / d
            } else if (i + 1) % n == j || (j + 1) % n == i {
                -1.0 / d
            } else {
                0.0
            }
        }),
        PresetKind::Pdyr => DenseMatrix::from_fn(n, n, |i, j| match (i, j) {
            (0, 0) => 2.0 * (n - 1) as f64 / d,
            (0, _) | (_, 0) => -2.0 / d,
            _ if i == j => 2.0 / d,
            _ => 0.0,
        }),
        PresetKind::Sdyr => DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let degree = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
                2.0 * degree / d
            } else if i + 1 == j || j + 1 == i {
                -2.0 / d
            } else {
                0.0
            }
        }),
    };
    let h = DenseMatrix::from_fn(n, n - 1, |i, j| unit(i == j + 1));
    let g = DenseMatrix::from_fn(n - 1, n, |j, i| unit(if star { i == 0 } else { i == j }));
    let p = DenseMatrix::from_fn(n, n - 2, |i, j| unit(i == j + 1));
    let q = DenseMatrix::from_fn(n, n - 2, |i, j| unit(i == j + 2));
    let r = DenseMatrix::from_fn(n - 2, n, |j, i| unit(if star { i == 0 } else { i == j }));
    let patterns = preset_patterns(n)?;
    SplittingDesign::new(DesignParts {
        governor: Some(governor),
        laplacian: None,
        u: None,
        h,
        g,
        p,
        q,
        r,
        pattern_hg: patterns.hg,
        pattern_e: patterns.e,
        pattern_f: patterns.f,
        k: Some(k),
    })
}

/// Preset at `(d, λ)` after checking the row conditions.
pub fn preset_design(kind: PresetKind, sigma: &[f64], lip: &[f64], d: f64, lambda: f64) -> Result<SplittingDesign> {
    let bounds = preset_bounds(kind, sigma, lip)?;
    bounds.check(d, lambda)?;
    preset_matrices(kind, bounds.n(), d, lambda)
}

pub fn dfbr_design(sigma: &[f64], lip: &[f64], d: f64, lambda: f64) -> Result<SplittingDesign> {
    preset_design(PresetKind::Dfbr, sigma, lip, d, lambda)
}

pub fn pdyr_design(sigma: &[f64], lip: &[f64], d: f64, lambda: f64) -> Result<SplittingDesign> {
    preset_design(PresetKind::Pdyr, sigma, lip, d, lambda)
}

pub fn sdyr_design(sigma: &[f64], lip: &[f64], d: f64, lambda: f64) -> Result<SplittingDesign> {
    preset_design(PresetKind::Sdyr, sigma, lip, d, lambda)
}

/// Spectral counterpart of [`PresetBounds`]: exact limits for
/// `K − MMᵀ − W ⪰ 0` rather than its diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedBounds {
    /// Supremum of `d` with `d·K − d·W ⪰ 0` on `e⊥` (λ → 0).
    pub d_bar: f64,
    k1: DenseMatrix,
    m1: DenseMatrix,
    w: DenseMatrix,
}

fn reduce(basis: &DenseMatrix, s: &DenseMatrix) -> DenseMatrix {
    basis
        .transpose()
        .matmul(s)
        .and_then(|t| t.matmul(basis))
        .expect("conforming")
        .symmetrize()
}

impl CertifiedBounds {
    /// Largest `λ²` keeping `K − MMᵀ − W ⪰ 0` at stepsize `d`; negative when
    /// `d ≥ d_bar`.
    pub fn lambda_sq_max(&self, d: f64) -> Result<f64> {
        let a = self.k1.scale(1.0 / d).sub(&self.w)?;
        generalized_min_eigenvalue(&a, &self.m1)
    }

    /// `d = 0.9·min(d̄_rows, d̄_certified)` and `λ² = ½·λ²_max(d)`.
    pub fn parameters(&self, rows: &PresetBounds) -> Result<(f64, f64)> {
        let d = 0.9 * rows.d_bar.min(self.d_bar);
        let lam_sq = self.lambda_sq_max(d)?;
        if !(lam_sq > 0.0) {
            return Err(Error::Bound(format!("no admissible λ at d = {}", d)));
        }
        Ok((d, (0.5 * lam_sq).sqrt()))
    }
}

/// Eigenvalue-based limits restricted to the sum-zero subspace, where every
/// preset `K` and `MMᵀ` is positive definite.
pub fn certified_bounds(kind: PresetKind, sigma: &[f64], lip: &[f64]) -> Result<CertifiedBounds> {
    let n = check_constants(sigma, lip)?;
    let unit = preset_matrices(kind, n, 1.0, 1.0)?;
    let w = coupling_matrix(unit.h(), unit.g(), unit.p(), unit.q(), unit.r(), sigma, lip)?;
    let basis = sum_zero_basis(n);
    let k1 = reduce(&basis, unit.k().expect("presets store K"));
    let m1 = reduce(&basis, &unit.gram());
    let w = reduce(&basis, &w);
    let top = -generalized_min_eigenvalue(&w.scale(-1.0), &k1)?;
    let d_bar = if top > 0.0 { 1.0 / top } else { f64::INFINITY };
    Ok(CertifiedBounds { d_bar, k1, m1, w })
}

/// Preset at the certified default `(d, λ)`, returned with those values.
pub fn certified_preset(kind: PresetKind, sigma: &[f64], lip: &[f64]) -> Result<(SplittingDesign, f64, f64)> {
    let rows = preset_bounds(kind, sigma, lip)?;
    let (d, lambda) = certified_bounds(kind, sigma, lip)?.parameters(&rows)?;
    Ok((preset_design(kind, sigma, lip, d, lambda)?, d, lambda))
}

/// Lifted design on the normalized complete-graph Laplacian with couplings
/// minimizing `‖Υ‖₂`.
#[derive(Clone, Debug)]
pub struct CrfbDesign {
    pub design: SplittingDesign,
    pub selection: SelectionResult,
}

/// Scale of the complete-graph Laplacian in a CRFB design.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum LaplacianScale {
    /// `‖𝓛‖₂ = 1`.
    #[default]
    Unit,
    /// `‖𝓛‖₂ = ‖W‖₂`, so the governor is commensurate with the couplings.
    /// `K − 𝓛 − W` stays zero, so certification is unaffected.
    Coupling,
}

pub fn crfb_design(patterns: &PatternSet, sigma: &[f64], lip: &[f64], opts: &SelectionOptions) -> Result<CrfbDesign> {
    crfb_design_scaled(patterns, sigma, lip, opts, LaplacianScale::Unit)
}

pub fn crfb_design_scaled(
    patterns: &PatternSet,
    sigma: &[f64],
    lip: &[f64],
    opts: &SelectionOptions,
    scale: LaplacianScale,
) -> Result<CrfbDesign> {
    let selection = minimize_upsilon(patterns, sigma, lip, opts)?;
    let n = patterns.n();
    let mut lap = laplacian(LaplacianKind::Complete, n)?;
    if scale == LaplacianScale::Coupling {
        let w = selection.upsilon_norm * selection.upsilon_norm;
        if w > 0.0 {
            lap = lap.scale(w);
        }
    }
    let c = selection.couplings.clone();
    let design = SplittingDesign::new(DesignParts {
        governor: None,
        laplacian: Some(lap),
        u: None,
        h: c.h,
        g: c.g,
        p: c.p,
        q: c.q,
        r: c.r,
        pattern_hg: patterns.hg.clone(),
        pattern_e: patterns.e.clone(),
        pattern_f: patterns.f.clone(),
        k: None,
    })?;
    Ok(CrfbDesign { design, selection })
}

/// CRFB on the default patterns for `(n, m, l)`.
pub fn crfb_default(n: usize, sigma: &[f64], lip: &[f64], opts: &SelectionOptions) -> Result<CrfbDesign> {
    crfb_default_scaled(n, sigma, lip, opts, LaplacianScale::Unit)
}

pub fn crfb_default_scaled(
    n: usize,
    sigma: &[f64],
    lip: &[f64],
    opts: &SelectionOptions,
    scale: LaplacianScale,
) -> Result<CrfbDesign> {
    let patterns = PatternSet::default_for(n, sigma.len(), lip.len())?;
    crfb_design_scaled(&patterns, sigma, lip, opts, scale)
}

#[cfg(test)]
mod tests;
