//! Regularized zero-sum matrix game on `Δ^{d1} × Δ^{d2}`:
//! `F(u, v) = Σ⟨Θ_k u, v⟩ + ½Σ‖V_j u‖² − ½Σ‖J_j v‖²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::blockspace::{spectral_norm, DenseMatrix};
use crate::error::{shape_err, Error, Result};
use crate::operators::{simplex_project, CocoerciveOracle, LipschitzMonotoneOracle, OperatorTriple, ResolventOracle};

use super::qp::{simplex_qp_apg, simplex_qp_away_fw, SimplexQpSolution, MAX_QP_ITERS};

/// Sampling law of the entries of `Ω_j` and `Θ_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameDistribution {
    /// `U(−1, 1)` and `U(−10, 10)`.
    Uniform,
    /// `N(0, 1)` and `N(0, 10)`, second argument a variance.
    Normal,
    /// Rates 0.2 and 2.
    Exponential,
    /// Means 0.2 and 2.
    Poisson,
}

impl GameDistribution {
    pub const ALL: [GameDistribution; 4] = [
        GameDistribution::Uniform,
        GameDistribution::Normal,
        GameDistribution::Exponential,
        GameDistribution::Poisson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GameDistribution::Uniform => "uniform",
            GameDistribution::Normal => "normal",
            GameDistribution::Exponential => "exponential",
            GameDistribution::Poisson => "poisson",
        }
    }

    fn draw(self, rng: &mut ChaCha8Rng, payoff: bool) -> f64 {
        match (self, payoff) {
            (GameDistribution::Uniform, false) => rng.random_range(-1.0..1.0),
            (GameDistribution::Uniform, true) => rng.random_range(-10.0..10.0),
            (GameDistribution::Normal, false) => Normal::new(0.0, 1.0).expect("valid").sample(rng),
            (GameDistribution::Normal, true) => Normal::new(0.0, 10f64.sqrt()).expect("valid").sample(rng),
            (GameDistribution::Exponential, false) => Exp::new(0.2).expect("valid").sample(rng),
            (GameDistribution::Exponential, true) => Exp::new(2.0).expect("valid").sample(rng),
            (GameDistribution::Poisson, false) => Poisson::new(0.2).expect("valid").sample(rng),
            (GameDistribution::Poisson, true) => Poisson::new(2.0).expect("valid").sample(rng),
        }
    }
}

impl std::fmt::Display for GameDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GameDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Domain(format!("unknown distribution {:?}", s)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameProblem {
    pub d1: usize,
    pub d2: usize,
    /// `d2 × d1` payoff blocks.
    pub theta: Vec<DenseMatrix>,
    /// `V_j` (rows × d1) and `J_j` (rows × d2).
    pub v: Vec<DenseMatrix>,
    pub j: Vec<DenseMatrix>,
    /// Number of resolvent copies of `N_Δ × N_Δ`.
    pub n: usize,
    pub distribution: Option<GameDistribution>,
    pub seed: Option<u64>,
}

/// Primal–dual gap; `gap` is `raw` clamped at zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapValue {
    pub gap: f64,
    pub raw: f64,
    /// `max_v̄ F(u, v̄)` and `min_ū F(ū, v)`.
    pub upper: f64,
    pub lower: f64,
    pub best_response_v: Vec<f64>,
    pub best_response_u: Vec<f64>,
}

impl GameProblem {
    pub fn new(n: usize, theta: Vec<DenseMatrix>, v: Vec<DenseMatrix>, j: Vec<DenseMatrix>) -> Result<Self> {
        let (d2, d1) = match theta.first() {
            Some(t) => t.shape(),
            None => match (v.first(), j.first()) {
                (Some(a), Some(b)) => (b.cols(), a.cols()),
                _ => return shape_err("a game needs a payoff block or a regularizer"),
            },
        };
        if n == 0 || d1 == 0 || d2 == 0 {
            return shape_err(format!("need n, d1, d2 ≥ 1, got {}, {}, {}", n, d1, d2));
        }
        if theta.iter().any(|t| t.shape() != (d2, d1))
            || v.len() != j.len()
            || v.iter().any(|a| a.cols() != d1)
            || j.iter().any(|b| b.cols() != d2)
        {
            return shape_err("game blocks have inconsistent shapes");
        }
        Ok(Self {
            d1,
            d2,
            theta,
            v,
            j,
            n,
            distribution: None,
            seed: None,
        })
    }

    /// Square game with `V_j = J_j = Ω_j` (`d × d`).
    pub fn generate(n: usize, m: usize, l: usize, d: usize, distribution: GameDistribution, seed: u64) -> Result<Self> {
        if m + l == 0 || d == 0 {
            return shape_err(format!("need m + l ≥ 1 and d ≥ 1, got m + l = {} and d = {}", m + l, d));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega: Vec<DenseMatrix> = (0..m)
            .map(|_| DenseMatrix::from_fn(d, d, |_, _| distribution.draw(&mut rng, false)))
            .collect();
        let theta = (0..l)
            .map(|_| DenseMatrix::from_fn(d, d, |_, _| distribution.draw(&mut rng, true)))
            .collect();
        let mut game = Self::new(n, theta, omega.clone(), omega)?;
        game.distribution = Some(distribution);
        game.seed = Some(seed);
        Ok(game)
    }

    pub fn dim(&self) -> usize {
        self.d1 + self.d2
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.d1)
    }

    pub fn operators(&self) -> Result<OperatorTriple> {
        let d1 = self.d1;
        let a = (0..self.n).map(|_| ResolventOracle::simplex_product(d1)).collect();
        let b = self
            .v
            .iter()
            .zip(&self.j)
            .map(|(v, j)| {
                let (sv, sj) = (v.transpose().matmul(v)?, j.transpose().matmul(j)?);
                let top = spectral_norm(v).value.powi(2).max(spectral_norm(j).value.powi(2));
                let sigma = if top > 0.0 { 1.0 / top } else { 1.0 };
                CocoerciveOracle::new("game_regularizer", sigma, move |x, out| {
                    let (xu, xv) = x.split_at(d1);
                    let (ou, ov) = out.split_at_mut(d1);
                    sv.mat_vec_into(xu, ou);
                    sj.mat_vec_into(xv, ov);
                })
            })
            .collect::<Result<_>>()?;
        let c = self
            .theta
            .iter()
            .map(|t| {
                let t = t.clone();
                let tt = t.transpose();
                LipschitzMonotoneOracle::new("game_payoff", spectral_norm(&t).value, move |x, out| {
                    let (xu, xv) = x.split_at(d1);
                    let (ou, ov) = out.split_at_mut(d1);
                    tt.mat_vec_into(xv, ou);
                    t.mat_vec_into(xu, ov);
                    ov.iter_mut().for_each(|o| *o = -*o);
                })
            })
            .collect::<Result<_>>()?;
        OperatorTriple::new(self.dim(), a, b, c)
    }

    fn payoff_sum(&self) -> DenseMatrix {
        self.theta.iter().fold(DenseMatrix::zeros(self.d2, self.d1), |acc, t| {
            acc.add(t).expect("same shape")
        })
    }

    fn gram_sum(mats: &[DenseMatrix], dim: usize) -> DenseMatrix {
        mats.iter().fold(DenseMatrix::zeros(dim, dim), |acc, a| {
            acc.add(&a.transpose().matmul(a).expect("shapes")).expect("same shape")
        })
    }

    pub fn payoff(&self, u: &[f64], v: &[f64]) -> f64 {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut f = 0.0;
        for t in &self.theta {
            f += dot(&t.mat_vec(u).expect("dims"), v);
        }
        for a in &self.v {
            let au = a.mat_vec(u).expect("dims");
            f += 0.5 * dot(&au, &au);
        }
        for b in &self.j {
            let bv = b.mat_vec(v).expect("dims");
            f -= 0.5 * dot(&bv, &bv);
        }
        f
    }

    fn gap_with(
        &self,
        u: &[f64],
        v: &[f64],
        solver: impl Fn(&DenseMatrix, &[f64]) -> Result<SimplexQpSolution>,
    ) -> Result<GapValue> {
        if u.len() != self.d1 || v.len() != self.d2 {
            return shape_err(format!(
                "strategies of length {} and {} for a {}x{} game",
                u.len(),
                v.len(),
                self.d1,
                self.d2
            ));
        }
        for (name, s) in [("u", u), ("v", v)] {
            let total: f64 = s.iter().sum();
            if (total - 1.0).abs() > 1e-8 || s.iter().any(|x| *x < -1e-8) {
                return Err(Error::Domain(format!("{} is not on the simplex (sum {})", name, total)));
            }
        }
        let (u, v) = (simplex_project(u), simplex_project(v));
        let theta = self.payoff_sum();
        let sv = Self::gram_sum(&self.v, self.d1);
        let sj = Self::gram_sum(&self.j, self.d2);
        // max_v̄ ⟨Θu, v̄⟩ − ½v̄ᵀS_J v̄ = −min_v̄ ½v̄ᵀS_J v̄ − ⟨Θu, v̄⟩.
        let tu: Vec<f64> = theta.mat_vec(&u)?.iter().map(|x| -x).collect();
        let best_v = solver(&sj, &tu)?;
        let tv = theta.transpose().mat_vec(&v)?;
        let best_u = solver(&sv, &tv)?;
        let quad = |s: &DenseMatrix, x: &[f64]| {
            0.5 * s
                .mat_vec(x)
                .expect("dims")
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        let upper = -best_v.value + quad(&sv, &u);
        let lower = best_u.value - quad(&sj, &v);
        let raw = upper - lower;
        Ok(GapValue {
            gap: raw.max(0.0),
            raw,
            upper,
            lower,
            best_response_v: best_v.y,
            best_response_u: best_u.y,
        })
    }
}

pub fn make_game_problem(
    n: usize,
    m: usize,
    l: usize,
    d: usize,
    distribution: GameDistribution,
    seed: u64,
) -> Result<(GameProblem, OperatorTriple)> {
    let game = GameProblem::generate(n, m, l, d, distribution, seed)?;
    let ops = game.operators()?;
    Ok((game, ops))
}

/// `max_v̄ F(u, v̄) − min_ū F(ū, v)` with both best responses computed by
/// accelerated projected gradient to gradient-mapping residual `tol`.
pub fn primal_dual_gap(p: &GameProblem, u: &[f64], v: &[f64], tol: f64) -> Result<GapValue> {
    p.gap_with(u, v, |s, c| simplex_qp_apg(s, c, tol, MAX_QP_ITERS))
}

/// The same gap with Frank–Wolfe (away steps) best responses.
pub fn primal_dual_gap_fw(p: &GameProblem, u: &[f64], v: &[f64], tol: f64) -> Result<GapValue> {
    p.gap_with(u, v, |s, c| simplex_qp_away_fw(s, c, tol, MAX_QP_ITERS))
}

/// Gap by exhaustive search for `d1 = d2 = 2`: each simplex is the segment
/// `(t, 1 − t)`, searched on a grid and refined by golden section.
pub fn grid_gap_2x2(p: &GameProblem, u: &[f64], v: &[f64]) -> Result<f64> {
    if p.d1 != 2 || p.d2 != 2 {
        return shape_err("grid oracle needs a 2x2 game");
    }
    let point = |t: f64| [t, 1.0 - t];
    let upper = maximize_segment(|t| p.payoff(u, &point(t)));
    let lower = -maximize_segment(|t| -p.payoff(&point(t), v));
    Ok(upper - lower)
}

fn maximize_segment(f: impl Fn(f64) -> f64) -> f64 {
    const GRID: usize = 2000;
    let (mut best_t, mut best) = (0.0, f(0.0));
    for k in 1..=GRID {
        let t = k as f64 / GRID as f64;
        let val = f(t);
        if val > best {
            best = val;
            best_t = t;
        }
    }
    let h = 1.0 / GRID as f64;
    let (mut a, mut b) = ((best_t - h).max(0.0), (best_t + h).min(1.0));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (c, d) = (b - phi * (b - a), a + phi * (b - a));
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_simplex(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    }

    #[test]
    fn payoff_operator_is_skew() {
        let (_, ops) = make_game_problem(3, 2, 2, 4, GameDistribution::Normal, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for c in ops.lipschitz() {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
            let cx = c.apply(&x);
            let ip: f64 = cx.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(ip.abs() < 1e-10, "{}", ip);
        }
    }

    #[test]
    fn sigma_follows_regularizer_norms() {
        for dist in GameDistribution::ALL {
            let (g, ops) = make_game_problem(3, 2, 1, 3, dist, 7).unwrap();
            for (j, s) in ops.sigmas().iter().enumerate() {
                let top = spectral_norm(&g.v[j])
                    .value
                    .powi(2)
                    .max(spectral_norm(&g.j[j]).value.powi(2));
                if top > 0.0 {
                    assert!((s * top - 1.0).abs() < 1e-12);
                }
            }
            ops.validate_sampled(10, 3).unwrap();
        }
    }

    #[test]
    fn matching_pennies_equilibrium_has_zero_gap() {
        let theta = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let g = GameProblem::new(3, vec![theta], vec![], vec![]).unwrap();
        let gap = primal_dual_gap(&g, &[0.5, 0.5], &[0.5, 0.5], 1e-9).unwrap();
        assert!(gap.raw.abs() < 1e-7);
        let off = primal_dual_gap(&g, &[1.0, 0.0], &[0.5, 0.5], 1e-9).unwrap();
        assert!((off.gap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gap_matches_grid_oracle_on_2x2() {
        let (g, _) = make_game_problem(3, 2, 1, 2, GameDistribution::Uniform, 13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let (u, v) = (random_simplex(&mut rng, 2), random_simplex(&mut rng, 2));
            let apg = primal_dual_gap(&g, &u, &v, 1e-10).unwrap();
            let grid = grid_gap_2x2(&g, &u, &v).unwrap();
            assert!((apg.raw - grid).abs() < 1e-4, "{} vs {}", apg.raw, grid);
        }
    }

    #[test]
    fn gap_is_nonnegative_and_cross_checked() {
        let (g, _) = make_game_problem(3, 2, 2, 5, GameDistribution::Exponential, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let (u, v) = (random_simplex(&mut rng, 5), random_simplex(&mut rng, 5));
            let apg = primal_dual_gap(&g, &u, &v, 1e-9).unwrap();
            assert!(apg.raw >= -1e-8, "{}", apg.raw);
            let fw = primal_dual_gap_fw(&g, &u, &v, 1e-9).unwrap();
            assert!((apg.raw - fw.raw).abs() < 1e-6 * (1.0 + apg.raw.abs()));
        }
    }

    #[test]
    fn off_simplex_input_rejected() {
        let (g, _) = make_game_problem(3, 1, 1, 2, GameDistribution::Poisson, 1).unwrap();
        assert!(matches!(
            primal_dual_gap(&g, &[0.7, 0.7], &[0.5, 0.5], 1e-9),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn distributions_round_trip_and_serialize() {
        for d in GameDistribution::ALL {
            assert_eq!(d.name().parse::<GameDistribution>().unwrap(), d);
        }
        let (g, _) = make_game_problem(3, 1, 1, 2, GameDistribution::Normal, 4).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<GameProblem>(&text).unwrap(), g);
    }
}
