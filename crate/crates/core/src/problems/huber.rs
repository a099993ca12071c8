//! Geometric median plus Huber-type data fidelity plus PSD quadratics:
//! `f(x) = Σ‖x − ξ_i‖ + Σ h(Ψ_j x − y_j) + Σ ½xᵀΘ_k x`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::blockspace::DenseMatrix;
use crate::error::{shape_err, Error, Result};
use crate::framework::{solve, SolverConfig};
use crate::operators::{
    huber_derivative, huber_value, CocoerciveOracle, LipschitzMonotoneOracle, OperatorTriple, ResolventOracle,
};
use crate::presets::crfb_default;
use crate::selection::SelectionOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    None,
    /// Two random rows of `Ψ` and two random `Θ_k` are multiplied by 5.
    Heterogeneous,
}

const HETERO_FACTOR: f64 = 5.0;
const HETERO_COUNT: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HuberProblem {
    pub dim: usize,
    pub xi: Vec<Vec<f64>>,
    pub psi: DenseMatrix,
    pub y: Vec<f64>,
    pub delta1: f64,
    pub delta2: f64,
    pub theta: Vec<DenseMatrix>,
    pub scaling: Scaling,
    pub seed: u64,
}

impl HuberProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        n: usize,
        m: usize,
        l: usize,
        d: usize,
        delta1: f64,
        delta2: f64,
        scaling: Scaling,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return shape_err(format!("need n ≥ 1 and d ≥ 1, got n = {} and d = {}", n, d));
        }
        if !(0.0 <= delta1 && delta1 <= delta2) {
            return Err(Error::Domain(format!(
                "Huber thresholds must satisfy 0 <= delta1 <= delta2, got {} and {}",
                delta1, delta2
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = DenseMatrix::from_fn(m, d, |_, _| rng.random_range(-2.5..2.5));
        let y = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let normal = Normal::new(0.0, 5.0).expect("valid normal");
        let xi = (0..n)
            .map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let mut theta: Vec<DenseMatrix> = (0..l)
            .map(|_| {
                let bar = DenseMatrix::from_fn(d, d, |_, _| rng.random_range(0.0..1.0));
                bar.transpose().matmul(&bar).expect("square").symmetrize()
            })
            .collect();
        if scaling == Scaling::Heterogeneous {
            for j in sample(&mut rng, m, HETERO_COUNT.min(m)) {
                for k in 0..d {
                    psi[(j, k)] *= HETERO_FACTOR;
                }
            }
            for k in sample(&mut rng, l, HETERO_COUNT.min(l)) {
                theta[k] = theta[k].scale(HETERO_FACTOR);
            }
        }
        Ok(Self {
            dim: d,
            xi,
            psi,
            y,
            delta1,
            delta2,
            theta,
            scaling,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn m(&self) -> usize {
        self.psi.rows()
    }

    pub fn l(&self) -> usize {
        self.theta.len()
    }

    pub fn operators(&self) -> Result<OperatorTriple> {
        let a = self
            .xi
            .iter()
            .map(|xi| ResolventOracle::norm_distance(xi.clone()))
            .collect();
        let b = (0..self.m())
            .map(|j| CocoerciveOracle::huber(self.psi.row(j).to_vec(), self.y[j], self.delta1, self.delta2))
            .collect::<Result<_>>()?;
        let c = self
            .theta
            .iter()
            .map(|t| LipschitzMonotoneOracle::linear(t.clone()))
            .collect::<Result<_>>()?;
        OperatorTriple::new(self.dim, a, b, c)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        huber_objective(self, x)
    }

    /// Gradient of the smooth part plus the unit vectors toward every `ξ_i`
    /// farther than `radius` from `x`, and the number of nearby `ξ_i`.
    fn fermat_parts(&self, x: &[f64], radius: f64) -> (Vec<f64>, usize) {
        let d = self.dim;
        let mut g = vec![0.0; d];
        let mut near = 0;
        for xi in &self.xi {
            let dist = x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist <= radius {
                near += 1;
                continue;
            }
            for ((gk, a), b) in g.iter_mut().zip(x).zip(xi) {
                *gk += (a - b) / dist;
            }
        }
        for j in 0..self.m() {
            let row = self.psi.row(j);
            let z: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - self.y[j];
            let h = huber_derivative(z, self.delta1, self.delta2);
            g.iter_mut().zip(row).for_each(|(gk, p)| *gk += h * p);
        }
        for t in &self.theta {
            let tx = t.mat_vec(x).expect("dims match");
            g.iter_mut().zip(tx).for_each(|(gk, v)| *gk += v);
        }
        (g, near)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn make_huber_problem(
    n: usize,
    m: usize,
    l: usize,
    d: usize,
    delta1: f64,
    delta2: f64,
    scaling: Scaling,
    seed: u64,
) -> Result<(HuberProblem, OperatorTriple)> {
    let p = HuberProblem::generate(n, m, l, d, delta1, delta2, scaling, seed)?;
    let ops = p.operators()?;
    Ok((p, ops))
}

pub fn huber_objective(p: &HuberProblem, x: &[f64]) -> f64 {
    let dist: f64 =
        p.xi.iter()
            .map(|xi| x.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .sum();
    let fit: f64 = (0..p.m())
        .map(|j| {
            let z: f64 = p.psi.row(j).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - p.y[j];
            huber_value(z, p.delta1, p.delta2)
        })
        .sum();
    let quad: f64 = p
        .theta
        .iter()
        .map(|t| {
            let tx = t.mat_vec(x).expect("dims match");
            0.5 * tx.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum();
    dist + fit + quad
}

/// Distance from `0` to `∂f(x)`, treating every `ξ_i` within `radius` of
/// `x` as a kink whose subdifferential is the unit ball.
pub fn fermat_residual(p: &HuberProblem, x: &[f64], radius: f64) -> f64 {
    let (g, near) = p.fermat_parts(x, radius);
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm - near as f64).max(0.0)
}

/// Minimizer estimate from a long CRFB run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

pub fn reference_optimum(p: &HuberProblem, max_iter: usize, tol: f64) -> Result<ReferenceOptimum> {
    let ops = p.operators()?;
    let crfb = crfb_default(p.n(), &ops.sigmas(), &ops.lips(), &SelectionOptions::default())?;
    let config = SolverConfig {
        max_iter,
        tol,
        mode: crate::framework::Mode::Lifted,
        ..SolverConfig::default()
    };
    let sol = solve(&ops, &crfb.design, &config)?;
    Ok(ReferenceOptimum {
        value: huber_objective(p, &sol.x),
        x: sol.x,
        iterations: sol.summary.iterations,
        residual: sol.summary.final_residual,
        converged: sol.converged,
    })
}
