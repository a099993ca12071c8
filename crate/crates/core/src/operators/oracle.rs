use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockspace::BlockVector;
use crate::error::{shape_err, Error, Result};

type ResolveFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Tolerance used by all sampled property checks.
pub const SAMPLE_TOL: f64 = 1e-9;

/// Default number of random pairs drawn by the sampled checks.
pub const DEFAULT_SAMPLES: usize = 100;

/// Resolvent `J_{τA}` of a maximally monotone operator `A`.
#[derive(Clone)]
pub struct ResolventOracle {
    name: String,
    f: Arc<ResolveFn>,
}

impl ResolventOracle {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Resolvent of the zero operator.
    pub fn identity() -> Self {
        Self::new("identity", |_, v, out| out.copy_from_slice(v))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn resolve_into(&self, tau: f64, v: &[f64], out: &mut [f64]) {
        (self.f)(tau, v, out)
    }

    pub fn resolve(&self, tau: f64, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.resolve_into(tau, v, &mut out);
        out
    }
}

impl fmt::Debug for ResolventOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ResolventOracle({})", self.name)
    }
}

/// Single-valued `σ`-cocoercive operator.
#[derive(Clone)]
pub struct CocoerciveOracle {
    name: String,
    sigma: f64,
    f: Arc<ApplyFn>,
}

impl CocoerciveOracle {
    pub fn new(
        name: impl Into<String>,
        sigma: f64,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        let name = name.into();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!(
                "cocoercivity constant of {} must be positive and finite, got {}",
                name, sigma
            )));
        }
        Ok(Self {
            name,
            sigma,
            f: Arc::new(f),
        })
    }

    /// The zero map, cocoercive for every constant; `σ = 1` is reported.
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            sigma: 1.0,
            f: Arc::new(|_, out: &mut [f64]| out.iter_mut().for_each(|o| *o = 0.0)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }
}

impl fmt::Debug for CocoerciveOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CocoerciveOracle({}, sigma={})", self.name, self.sigma)
    }
}

/// Single-valued monotone `L`-Lipschitz operator.
#[derive(Clone)]
pub struct LipschitzMonotoneOracle {
    name: String,
    lip: f64,
    f: Arc<ApplyFn>,
}

impl LipschitzMonotoneOracle {
    pub fn new(
        name: impl Into<String>,
        lip: f64,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        let name = name.into();
        if !(lip >= 0.0 && lip.is_finite()) {
            return Err(Error::Domain(format!(
                "Lipschitz constant of {} must be finite and nonnegative, got {}",
                name, lip
            )));
        }
        Ok(Self {
            name,
            lip,
            f: Arc::new(f),
        })
    }

    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            lip: 0.0,
            f: Arc::new(|_, out: &mut [f64]| out.iter_mut().for_each(|o| *o = 0.0)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }
}

impl fmt::Debug for LipschitzMonotoneOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LipschitzMonotoneOracle({}, lip={})", self.name, self.lip)
    }
}

/// A problem instance: `n ≥ 1` resolvents, `m` cocoercive and `l` Lipschitz
/// monotone operators on `R^dim`.
#[derive(Clone, Debug)]
pub struct OperatorTriple {
    dim: usize,
    a: Vec<ResolventOracle>,
    b: Vec<CocoerciveOracle>,
    c: Vec<LipschitzMonotoneOracle>,
}

impl OperatorTriple {
    pub fn new(
        dim: usize,
        a: Vec<ResolventOracle>,
        b: Vec<CocoerciveOracle>,
        c: Vec<LipschitzMonotoneOracle>,
    ) -> Result<Self> {
        if dim == 0 {
            return shape_err("operator dimension must be at least 1");
        }
        if a.is_empty() {
            return shape_err("at least one resolvent operator is required");
        }
        Ok(Self { dim, a, b, c })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn l(&self) -> usize {
        self.c.len()
    }

    pub fn resolvents(&self) -> &[ResolventOracle] {
        &self.a
    }

    pub fn cocoercive(&self) -> &[CocoerciveOracle] {
        &self.b
    }

    pub fn lipschitz(&self) -> &[LipschitzMonotoneOracle] {
        &self.c
    }

    /// Diagonal of `Σ`.
    pub fn sigmas(&self) -> Vec<f64> {
        self.b.iter().map(CocoerciveOracle::sigma).collect()
    }

    /// Diagonal of `L`.
    pub fn lips(&self) -> Vec<f64> {
        self.c.iter().map(LipschitzMonotoneOracle::lip).collect()
    }

    /// Blockwise application `(B_1 x_1, …, B_m x_m)`.
    pub fn apply_b(&self, x: &BlockVector) -> Result<BlockVector> {
        self.stacked(x, self.b.len(), |j, xi, out| self.b[j].apply_into(xi, out))
    }

    /// Blockwise application `(C_1 x_1, …, C_l x_l)`.
    pub fn apply_c(&self, x: &BlockVector) -> Result<BlockVector> {
        self.stacked(x, self.c.len(), |j, xi, out| self.c[j].apply_into(xi, out))
    }

    fn stacked(&self, x: &BlockVector, count: usize, f: impl Fn(usize, &[f64], &mut [f64])) -> Result<BlockVector> {
        if x.num_blocks() != count || x.dim() != self.dim {
            return shape_err(format!(
                "expected {} blocks of dimension {}, got {}x{}",
                count,
                self.dim,
                x.num_blocks(),
                x.dim()
            ));
        }
        let mut out = BlockVector::zeros(count, self.dim);
        for j in 0..count {
            f(j, x.block(j), out.block_mut(j));
        }
        Ok(out)
    }

    /// Runs every sampled property check on every oracle.
    pub fn validate_sampled(&self, samples: usize, seed: u64) -> Result<()> {
        for (i, a) in self.a.iter().enumerate() {
            check_firmly_nonexpansive(a, self.dim, samples, seed.wrapping_add(i as u64))?;
        }
        for (j, b) in self.b.iter().enumerate() {
            check_cocoercive(b, self.dim, samples, seed.wrapping_add(1000 + j as u64))?;
        }
        for (j, c) in self.c.iter().enumerate() {
            check_lipschitz_monotone(c, self.dim, samples, seed.wrapping_add(2000 + j as u64))?;
        }
        Ok(())
    }
}

fn sample_pair(rng: &mut ChaCha8Rng, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut draw = || -> Vec<f64> { (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect() };
    (draw(), draw())
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Samples `‖Jv − Ju‖² ≤ ⟨Jv − Ju, v − u⟩ + tol` with `τ` drawn from `[0.1, 10]`.
pub fn check_firmly_nonexpansive(oracle: &ResolventOracle, dim: usize, samples: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let tau = rng.random_range(0.1..10.0);
        let (u, v) = sample_pair(&mut rng, dim);
        let dj = diff(&oracle.resolve(tau, &v), &oracle.resolve(tau, &u));
        let lhs = dot(&dj, &dj);
        let rhs = dot(&dj, &diff(&v, &u));
        if lhs > rhs + SAMPLE_TOL {
            return Err(Error::NotMonotone(format!(
                "resolvent {} is not firmly nonexpansive: {:.6e} > {:.6e}",
                oracle.name(),
                lhs,
                rhs
            )));
        }
    }
    Ok(())
}

/// Samples `⟨Bx − By, x − y⟩ ≥ σ‖Bx − By‖² − tol`.
pub fn check_cocoercive(oracle: &CocoerciveOracle, dim: usize, samples: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let (x, y) = sample_pair(&mut rng, dim);
        let db = diff(&oracle.apply(&x), &oracle.apply(&y));
        let lhs = dot(&db, &diff(&x, &y));
        let rhs = oracle.sigma() * dot(&db, &db);
        if lhs < rhs - SAMPLE_TOL {
            return Err(Error::NotMonotone(format!(
                "{} is not {}-cocoercive: {:.6e} < {:.6e}",
                oracle.name(),
                oracle.sigma(),
                lhs,
                rhs
            )));
        }
    }
    Ok(())
}

/// Samples monotonicity and the Lipschitz bound.
pub fn check_lipschitz_monotone(oracle: &LipschitzMonotoneOracle, dim: usize, samples: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let (x, y) = sample_pair(&mut rng, dim);
        let dx = diff(&x, &y);
        let dc = diff(&oracle.apply(&x), &oracle.apply(&y));
        let mono = dot(&dc, &dx);
        if mono < -SAMPLE_TOL {
            return Err(Error::NotMonotone(format!(
                "{} is not monotone: <Cx-Cy, x-y> = {:.6e}",
                oracle.name(),
                mono
            )));
        }
        let (nc, nx) = (dot(&dc, &dc).sqrt(), dot(&dx, &dx).sqrt());
        if nc > oracle.lip() * nx + SAMPLE_TOL {
            return Err(Error::NotMonotone(format!(
                "{} violates its Lipschitz constant {}: {:.6e} > {:.6e}",
                oracle.name(),
                oracle.lip(),
                nc,
                oracle.lip() * nx
            )));
        }
    }
    Ok(())
}
