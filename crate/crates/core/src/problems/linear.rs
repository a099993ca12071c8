//! Strongly monotone affine instances with a closed-form zero, used to check
//! solvers against a direct linear solve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blockspace::DenseMatrix;
use crate::error::Result;
use crate::operators::{CocoerciveOracle, LipschitzMonotoneOracle, OperatorTriple, ResolventOracle};

/// `A_i x = α_i(x − a_i)`, `B_j = S_j` (PSD) and `C_j = Θ_j` (skew plus a
/// small PSD part).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineProblem {
    pub dim: usize,
    pub alpha: Vec<f64>,
    pub anchors: Vec<Vec<f64>>,
    pub s: Vec<DenseMatrix>,
    pub theta: Vec<DenseMatrix>,
}

impl AffineProblem {
    pub fn generate(n: usize, m: usize, l: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let anchors = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let s = (0..m)
            .map(|_| {
                let f = DenseMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
                f.transpose().matmul(&f).expect("square")
            })
            .collect();
        let theta = (0..l)
            .map(|_| {
                let raw = DenseMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
                let skew = raw.sub(&raw.transpose()).expect("square");
                skew.add(&DenseMatrix::identity(dim).scale(0.1)).expect("square")
            })
            .collect();
        Self {
            dim,
            alpha,
            anchors,
            s,
            theta,
        }
    }

    pub fn operators(&self) -> Result<OperatorTriple> {
        let a = self
            .alpha
            .iter()
            .zip(&self.anchors)
            .map(|(&al, an)| {
                let an = an.clone();
                // (v + τα a)/(1 + τα)
                ResolventOracle::new("affine", move |tau, v, out| {
                    let w = tau * al;
                    for ((o, vk), ak) in out.iter_mut().zip(v).zip(&an) {
                        *o = (vk + w * ak) / (1.0 + w);
                    }
                })
            })
            .collect();
        let b = self
            .s
            .iter()
            .map(|s| CocoerciveOracle::linear_psd(s.clone()))
            .collect::<Result<_>>()?;
        let c = self
            .theta
            .iter()
            .map(|t| LipschitzMonotoneOracle::linear(t.clone()))
            .collect::<Result<_>>()?;
        OperatorTriple::new(self.dim, a, b, c)
    }

    /// The unique zero of `ΣA_i + ΣB_j + ΣC_j`.
    pub fn solution(&self) -> Result<Vec<f64>> {
        let d = self.dim;
        let total: f64 = self.alpha.iter().sum();
        let mut sys = DenseMatrix::identity(d).scale(total);
        for m in self.s.iter().chain(&self.theta) {
            sys = sys.add(m)?;
        }
        let mut rhs = vec![0.0; d];
        for (al, an) in self.alpha.iter().zip(&self.anchors) {
            for (r, a) in rhs.iter_mut().zip(an) {
                *r += al * a;
            }
        }
        sys.solve(&rhs)
    }
}

pub fn make_affine_problem(
    n: usize,
    m: usize,
    l: usize,
    dim: usize,
    seed: u64,
) -> Result<(AffineProblem, OperatorTriple)> {
    let p = AffineProblem::generate(n, m, l, dim, seed);
    let ops = p.operators()?;
    Ok((p, ops))
}
