use crate::blockspace::{symmetric_eigen, top_singular_triple, DenseMatrix};
use crate::error::{shape_err, Error, Result};
use crate::structure::{coupling_matrix, upsilon, PatternSet};

use super::{layouts, Couplings, Layout};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionOptions {
    /// Step scale `a` in `a/√(k+1)`.
    pub step: f64,
    pub iters: usize,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self { step: 1.0, iters: 5000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub couplings: Couplings,
    /// `‖Υ‖₂` at the returned matrices.
    pub upsilon_norm: f64,
    pub iterations: usize,
    /// Relative decrease of the best objective over the final tenth of the
    /// run stayed below `1e-6`.
    pub converged: bool,
    /// Largest sum or pattern violation of the best iterate before snapping.
    pub max_violation: f64,
    /// Best objective so far after each iteration, starting with the initial
    /// point.
    pub history: Vec<f64>,
}

fn violation(layout: &Layout, data: &[f64]) -> f64 {
    let pattern = data
        .iter()
        .zip(&layout.free)
        .filter(|(_, free)| !**free)
        .fold(0.0_f64, |acc, (v, _)| acc.max(v.abs()));
    layout.lines().iter().fold(pattern, |acc, line| {
        acc.max((line.iter().map(|&k| data[k]).sum::<f64>() - 1.0).abs())
    })
}

struct Point {
    mats: [DenseMatrix; 5],
}

impl Point {
    fn couplings(&self) -> Couplings {
        let [h, g, p, q, r] = self.mats.clone();
        Couplings { h, g, p, q, r }
    }
}

/// Minimizes `‖Υ‖₂` over matrices obeying the patterns and sum constraints by
/// projected subgradient descent with steps `a/√(k+1)`.
pub fn minimize_upsilon(
    patterns: &PatternSet,
    sigma: &[f64],
    lip: &[f64],
    opts: &SelectionOptions,
) -> Result<SelectionResult> {
    let all = layouts(patterns)?;
    let (m, l) = (patterns.m(), patterns.l());
    if sigma.len() != m || lip.len() != l {
        return shape_err(format!(
            "patterns need {} cocoercive and {} Lipschitz constants, got {} and {}",
            m,
            l,
            sigma.len(),
            lip.len()
        ));
    }
    if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) || lip.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Selection("constants must be finite with σ > 0 and L ≥ 0".into()));
    }
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::Domain(format!("step scale must be positive, got {}", opts.step)));
    }
    let c1: Vec<f64> = sigma.iter().map(|s| (0.5 / s).sqrt()).collect();
    let c2: Vec<f64> = lip.iter().map(|v| v.sqrt()).collect();

    let mut data: Vec<Vec<f64>> = all
        .iter()
        .map(|layout| {
            let mut d = vec![0.0; layout.rows * layout.cols];
            layout.project(&mut d);
            d
        })
        .collect();
    let point = |data: &[Vec<f64>]| -> Result<Point> {
        let mut mats = Vec::with_capacity(5);
        for (layout, d) in all.iter().zip(data) {
            mats.push(DenseMatrix::new(layout.rows, layout.cols, d.clone())?);
        }
        let mats: [DenseMatrix; 5] = mats.try_into().expect("five layouts");
        Ok(Point { mats })
    };
    let objective = |pt: &Point| -> Result<DenseMatrix> {
        let [h, g, p, q, r] = &pt.mats;
        upsilon(h, g, p, q, r, sigma, lip)
    };

    let mut best = data.clone();
    let first = top_singular_triple(&objective(&point(&data)?)?).value;
    if !first.is_finite() {
        return Err(Error::Selection("objective is not finite".into()));
    }
    let mut best_value = first;
    let mut history = Vec::with_capacity(opts.iters + 1);
    history.push(best_value);
    let n = patterns.n();

    let mut iterations = 0;
    for k in 0..opts.iters {
        if best_value == 0.0 {
            break;
        }
        iterations = k + 1;
        let ups = objective(&point(&data)?)?;
        let triple = top_singular_triple(&ups);
        let (u, v) = (&triple.u, &triple.v);
        let alpha = opts.step / ((k + 1) as f64).sqrt();
        // ∂‖Υ‖ = u vᵀ split into the three column blocks of Υ.
        let a1 = |j: usize| v[j] * c1[j];
        let a2 = |j: usize| v[m + j] * c2[j];
        let a3 = |j: usize| v[m + l + j] * c2[j];
        let [dh, dg, dp, dq, dr] = &mut data[..] else {
            unreachable!("five layouts")
        };
        for i in 0..n {
            for j in 0..m {
                let s = alpha * u[i] * a1(j);
                dh[i * m + j] -= s;
                dg[j * n + i] += s;
            }
            for j in 0..l {
                let (s2, s3) = (alpha * u[i] * a2(j), alpha * u[i] * a3(j));
                dp[i * l + j] -= s2 + s3;
                dq[i * l + j] += s2;
                dr[j * n + i] += s3;
            }
        }
        for (layout, d) in all.iter().zip(data.iter_mut()) {
            layout.project(d);
        }
        let value = top_singular_triple(&objective(&point(&data)?)?).value;
        if !value.is_finite() {
            return Err(Error::Selection(format!(
                "objective became non-finite at iteration {}",
                k + 1
            )));
        }
        if value < best_value {
            best_value = value;
            best.clone_from(&data);
        }
        assert!(history.last().is_none_or(|&prev| best_value <= prev));
        history.push(best_value);
    }

    let max_violation = all
        .iter()
        .zip(&best)
        .fold(0.0_f64, |acc, (layout, d)| acc.max(violation(layout, d)));
    for (layout, d) in all.iter().zip(best.iter_mut()) {
        layout.project(d);
    }
    let snapped = point(&best)?;
    let upsilon_norm = top_singular_triple(&objective(&snapped)?).value;
    let tail = history.len() / 10;
    let reference = history[history.len() - 1 - tail];
    let converged = best_value == 0.0 || (reference - best_value) <= 1e-6 * reference;
    Ok(SelectionResult {
        couplings: snapped.couplings(),
        upsilon_norm,
        iterations,
        converged,
        max_violation,
        history,
    })
}

/// `W = ΥΥᵀ` and `‖W‖₂`, checked against `‖Υ‖₂²`.
pub fn w_matrix(c: &Couplings, sigma: &[f64], lip: &[f64]) -> Result<(DenseMatrix, f64)> {
    let w = coupling_matrix(&c.h, &c.g, &c.p, &c.q, &c.r, sigma, lip)?;
    let norm = symmetric_eigen(&w)?.norm();
    let ups = top_singular_triple(&upsilon(&c.h, &c.g, &c.p, &c.q, &c.r, sigma, lip)?).value;
    if (norm - ups * ups).abs() > 1e-8 * (1.0 + norm) {
        return Err(Error::Selection(format!(
            "‖W‖₂ = {} disagrees with ‖Υ‖₂² = {}",
            norm,
            ups * ups
        )));
    }
    Ok((w, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{random_design, Intervals};
    use crate::structure::StaircaseVector;

    #[test]
    fn forced_layout_is_returned_unchanged() {
        let patterns = PatternSet {
            hg: StaircaseVector::new(vec![0, 1], 1).unwrap(),
            e: StaircaseVector::new(vec![0, 0], 0).unwrap(),
            f: StaircaseVector::new(vec![0, 0], 0).unwrap(),
        };
        let res = minimize_upsilon(&patterns, &[0.5], &[], &SelectionOptions::default()).unwrap();
        assert_eq!(res.couplings.h.to_rows(), vec![vec![0.0], vec![1.0]]);
        assert_eq!(res.couplings.g.to_rows(), vec![vec![1.0, 0.0]]);
        // ‖(H − Gᵀ)/√(2σ)‖ = √2.
        assert!((res.upsilon_norm - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn beats_random_designs() {
        let patterns = PatternSet::default_for(5, 4, 3).unwrap();
        let sigma = [1.0, 0.5, 2.0, 1.0];
        let lip = [1.0, 0.3, 2.0];
        let opts = SelectionOptions { step: 1.0, iters: 1500 };
        let res = minimize_upsilon(&patterns, &sigma, &lip, &opts).unwrap();
        assert!(res.max_violation < 1e-8);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        for seed in 0..30 {
            let c = random_design(&patterns, &Intervals::default(), seed).unwrap();
            let (_, norm) = w_matrix(&c, &sigma, &lip).unwrap();
            assert!(res.upsilon_norm <= norm.sqrt() + 1e-12);
        }
    }

    #[test]
    fn w_vanishes_without_differences() {
        let n = 3;
        let id = DenseMatrix::identity(n);
        let c = Couplings {
            h: id.clone(),
            g: id.clone(),
            p: id.clone(),
            q: id.clone(),
            r: id,
        };
        let (w, norm) = w_matrix(&c, &[1.0; 3], &[2.0; 3]).unwrap();
        assert_eq!(w.max_abs(), 0.0);
        assert_eq!(norm, 0.0);
    }
}
