//! Choosing `H, G, P, Q, R` and the governor Laplacian.

mod graph;
mod upsilon;

pub use graph::{algebraic_connectivity, laplacian, LaplacianKind};
pub use upsilon::{minimize_upsilon, w_matrix, SelectionOptions, SelectionResult};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockspace::DenseMatrix;
use crate::error::{Error, Result};
use crate::structure::PatternSet;

/// The five coupling matrices of a design.
#[derive(Clone, Debug, PartialEq)]
pub struct Couplings {
    pub h: DenseMatrix,
    pub g: DenseMatrix,
    pub p: DenseMatrix,
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

/// Sampling intervals for the free entries of each matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intervals {
    pub h: (f64, f64),
    pub g: (f64, f64),
    pub p: (f64, f64),
    pub q: (f64, f64),
    pub r: (f64, f64),
}

impl Default for Intervals {
    fn default() -> Self {
        Self {
            h: (0.0, 1.0),
            g: (0.0, 1.0),
            p: (0.0, 1.0),
            q: (0.0, 1.0),
            r: (0.0, 1.0),
        }
    }
}

/// Which entries of a matrix are free and which lines must sum to one.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub free: Vec<bool>,
    /// `true`: columns sum to one; `false`: rows do.
    pub by_columns: bool,
}

impl Layout {
    fn new(
        name: &'static str,
        rows: usize,
        cols: usize,
        by_columns: bool,
        free: impl Fn(usize, usize) -> bool,
    ) -> Self {
        let free = (0..rows * cols).map(|k| free(k / cols, k % cols)).collect();
        Self {
            name,
            rows,
            cols,
            free,
            by_columns,
        }
    }

    /// Flat indices of each constrained line.
    pub fn lines(&self) -> Vec<Vec<usize>> {
        let (outer, inner) = if self.by_columns {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        };
        (0..outer)
            .map(|a| {
                (0..inner)
                    .map(|b| {
                        if self.by_columns {
                            b * self.cols + a
                        } else {
                            a * self.cols + b
                        }
                    })
                    .filter(|&k| self.free[k])
                    .collect()
            })
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        if let Some(a) = self.lines().iter().position(Vec::is_empty) {
            let what = if self.by_columns { "column" } else { "row" };
            return Err(Error::InfeasiblePattern(format!(
                "{} {} of {} has no free entry",
                what,
                a + 1,
                self.name
            )));
        }
        Ok(())
    }

    /// Euclidean projection onto the pattern and sum constraints.
    pub fn project(&self, data: &mut [f64]) {
        for (k, v) in data.iter_mut().enumerate() {
            if !self.free[k] {
                *v = 0.0;
            }
        }
        for line in self.lines() {
            let shift = (1.0 - line.iter().map(|&k| data[k]).sum::<f64>()) / line.len() as f64;
            for k in line {
                data[k] += shift;
            }
        }
    }
}

/// Layouts of `H, G, P, Q, R` in that order.
pub(crate) fn layouts(patterns: &PatternSet) -> Result<[Layout; 5]> {
    patterns.check()?;
    let (n, m, l) = (patterns.n(), patterns.m(), patterns.l());
    let (hg, e, f) = (&patterns.hg, &patterns.e, &patterns.f);
    let all = [
        Layout::new("H", n, m, true, |i, j| !hg.forbids(i, j, false)),
        Layout::new("G", m, n, false, |j, i| !hg.forbids(i, j, true)),
        Layout::new("P", n, l, true, |i, j| {
            !f.forbids(i, j, true) && !e.forbids(i, j, false)
        }),
        Layout::new("Q", n, l, true, |i, j| !f.forbids(i, j, false)),
        Layout::new("R", l, n, false, |j, i| !e.forbids(i, j, true)),
    ];
    for layout in &all {
        layout.check()?;
    }
    Ok(all)
}

/// Uniform feasible draw: free entries sampled on the given intervals, the
/// rest zeroed, each constrained line scaled to sum to one.
pub fn random_design(patterns: &PatternSet, intervals: &Intervals, seed: u64) -> Result<Couplings> {
    let all = layouts(patterns)?;
    let ranges = [intervals.h, intervals.g, intervals.p, intervals.q, intervals.r];
    for (layout, (lo, hi)) in all.iter().zip(ranges) {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Domain(format!(
                "interval for {} must satisfy 0 ≤ lo < hi, got [{}, {}]",
                layout.name, lo, hi
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(5);
    for (layout, (lo, hi)) in all.iter().zip(ranges) {
        let mut data: Vec<f64> = layout
            .free
            .iter()
            .map(|&free| {
                let v = rng.random_range(lo..hi);
                if free {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        for line in layout.lines() {
            let total: f64 = line.iter().map(|&k| data[k]).sum();
            if total > 0.0 {
                line.iter().for_each(|&k| data[k] /= total);
            } else {
                // Every free draw hit the lower bound zero.
                line.iter().for_each(|&k| data[k] = 1.0 / line.len() as f64);
            }
        }
        out.push(DenseMatrix::new(layout.rows, layout.cols, data)?);
    }
    let mut it = out.into_iter();
    let mut next = || it.next().expect("five layouts");
    Ok(Couplings {
        h: next(),
        g: next(),
        p: next(),
        q: next(),
        r: next(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{validate_causal_pair, validate_relatively_causal, StaircaseVector};

    #[test]
    fn random_design_is_causal_and_normalized() {
        let patterns = PatternSet::default_for(6, 4, 3).unwrap();
        for seed in 0..20 {
            let c = random_design(&patterns, &Intervals::default(), seed).unwrap();
            assert!(validate_causal_pair(&c.h, &c.g, &patterns.hg).passed());
            assert!(validate_relatively_causal(&c.p, &c.q, &c.r, &patterns.e, &patterns.f).passed());
            for s in c.h.col_sums().iter().chain(&c.p.col_sums()).chain(&c.q.col_sums()) {
                assert!((s - 1.0).abs() < 1e-14);
            }
            for s in c.g.row_sums().iter().chain(&c.r.row_sums()) {
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_free_entry_becomes_one() {
        let patterns = PatternSet {
            hg: StaircaseVector::new(vec![0, 1], 1).unwrap(),
            e: StaircaseVector::new(vec![0, 0], 0).unwrap(),
            f: StaircaseVector::new(vec![0, 0], 0).unwrap(),
        };
        let c = random_design(&patterns, &Intervals::default(), 3).unwrap();
        assert_eq!(c.h.to_rows(), vec![vec![0.0], vec![1.0]]);
        assert_eq!(c.g.to_rows(), vec![vec![1.0, 0.0]]);
    }

    #[test]
    fn deterministic_per_seed() {
        let patterns = PatternSet::default_for(5, 4, 3).unwrap();
        let a = random_design(&patterns, &Intervals::default(), 11).unwrap();
        let b = random_design(&patterns, &Intervals::default(), 11).unwrap();
        let c = random_design(&patterns, &Intervals::default(), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn broken_ordering_is_infeasible() {
        // Ẽ_1 = 0 < F_2 = 1 leaves column 0 of P without a free entry.
        let patterns = PatternSet {
            hg: StaircaseVector::spread(3, 2).unwrap(),
            e: StaircaseVector::new(vec![0, 0, 1], 1).unwrap(),
            f: StaircaseVector::new(vec![0, 1, 1], 1).unwrap(),
        };
        assert!(matches!(
            random_design(&patterns, &Intervals::default(), 0),
            Err(Error::InfeasiblePattern(_))
        ));
    }
}
