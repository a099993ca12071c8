use std::fmt;

use serde::{Deserialize, Serialize};

use crate::blockspace::DenseMatrix;
use crate::error::{Error, Result};

/// Nondecreasing integer vector `E ∈ [0, m]^n` with `E_1 = 0` and `E_n = m`.
///
/// Entry `i` (zero-based) bounds which columns row `i` may touch: a plain
/// staircase keeps columns `j < E_i` (zero-based) and a complement staircase
/// keeps columns `j ≥ E_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct StaircaseVector(Vec<usize>);

impl From<StaircaseVector> for Vec<usize> {
    fn from(v: StaircaseVector) -> Self {
        v.0
    }
}

/// Deserialized vectors end wherever they end; only monotonicity and the
/// zero start are checked.
impl TryFrom<Vec<usize>> for StaircaseVector {
    type Error = Error;

    fn try_from(entries: Vec<usize>) -> Result<Self> {
        let end = entries.last().copied().unwrap_or(0);
        Self::new(entries, end)
    }
}

impl StaircaseVector {
    pub fn new(entries: Vec<usize>, m: usize) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(Error::InfeasiblePattern("staircase vector is empty".into()));
        }
        if entries[0] != 0 {
            return Err(Error::InfeasiblePattern(format!(
                "staircase must start at 0, starts at {}",
                entries[0]
            )));
        }
        if entries[n - 1] != m {
            return Err(Error::InfeasiblePattern(format!(
                "staircase must end at {}, ends at {}",
                m,
                entries[n - 1]
            )));
        }
        if let Some(i) = (1..n).find(|&i| entries[i] < entries[i - 1]) {
            return Err(Error::InfeasiblePattern(format!(
                "staircase decreases at position {}",
                i
            )));
        }
        Ok(Self(entries))
    }

    /// Evenly spread steps, `E_i = ⌊i·m/(n−1)⌋` (zero-based `i`).
    pub fn spread(n: usize, m: usize) -> Result<Self> {
        if n == 1 {
            return Self::new(vec![0], m);
        }
        Self::new((0..n).map(|i| i * m / (n - 1)).collect(), m)
    }

    /// Default pair `(Ẽ, F)` for `l` Lipschitz operators over `n` rows:
    /// `Ẽ` reaches `l` at row `n−2` and `F` is `Ẽ` shifted down by one row.
    pub fn default_relative(n: usize, l: usize) -> Result<(Self, Self)> {
        if n <= 2 {
            if l > 0 {
                return Err(Error::InfeasiblePattern(format!(
                    "{} Lipschitz operators need at least 3 resolvents, got {}",
                    l, n
                )));
            }
            return Ok((Self(vec![0; n]), Self(vec![0; n])));
        }
        let mut e: Vec<usize> = (0..n - 1)
            .map(|i| ((i * l) as f64 / (n - 2) as f64).round() as usize)
            .collect();
        e.push(l);
        let mut f = vec![0];
        f.extend_from_slice(&e[..n - 1]);
        Ok((Self::new(e, l)?, Self::new(f, l)?))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    /// Whether entry `(i, j)` (zero-based) is forced to zero.
    pub fn forbids(&self, i: usize, j: usize, complement: bool) -> bool {
        if complement {
            j < self.0[i]
        } else {
            j >= self.0[i]
        }
    }
}

/// The three staircase vectors of a design: `Ē` for `(H, G)` and `(Ẽ, F)`
/// for `(P, Q, R)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSet {
    pub hg: StaircaseVector,
    pub e: StaircaseVector,
    pub f: StaircaseVector,
}

impl PatternSet {
    /// Evenly spread `Ē` with the default `(Ẽ, F)` pair.
    pub fn default_for(n: usize, m: usize, l: usize) -> Result<Self> {
        let (e, f) = StaircaseVector::default_relative(n, l)?;
        Ok(Self {
            hg: StaircaseVector::spread(n, m)?,
            e,
            f,
        })
    }

    pub fn n(&self) -> usize {
        self.hg.len()
    }

    pub fn m(&self) -> usize {
        self.hg.get(self.hg.len() - 1)
    }

    pub fn l(&self) -> usize {
        self.e.get(self.e.len() - 1)
    }

    /// Checks that all three vectors have the same length and that `Ẽ`
    /// dominates the shifted `F`.
    pub fn check(&self) -> Result<()> {
        let n = self.hg.len();
        if self.e.len() != n || self.f.len() != n {
            return Err(Error::InfeasiblePattern(format!(
                "pattern lengths differ: {}, {}, {}",
                n,
                self.e.len(),
                self.f.len()
            )));
        }
        if self.f.get(n - 1) != self.l() {
            return Err(Error::InfeasiblePattern("Ẽ and F must end at the same value".into()));
        }
        if let Some(i) = (1..n).find(|&i| self.e.get(i - 1) < self.f.get(i)) {
            return Err(Error::InfeasiblePattern(format!(
                "Ẽ[{}] = {} is below F[{}] = {}",
                i,
                self.e.get(i - 1),
                i + 1,
                self.f.get(i)
            )));
        }
        Ok(())
    }
}

/// First nonzero entry found where a pattern requires zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub matrix: String,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Outcome of a causality check.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalityReport {
    pub violations: Vec<Violation>,
    pub ordering: Option<String>,
}

impl CausalityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.ordering.is_none()
    }
}

impl fmt::Display for CausalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "ok");
        }
        let mut parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{}[{},{}] = {} must be zero", v.matrix, v.row + 1, v.col + 1, v.value))
            .collect();
        parts.extend(self.ordering.clone());
        write!(f, "{}", parts.join("; "))
    }
}

fn first_violation(a: &DenseMatrix, e: &StaircaseVector, complement: bool) -> Option<(usize, usize)> {
    if a.rows() != e.len() {
        return Some((0, 0));
    }
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if a[(i, j)] != 0.0 && e.forbids(i, j, complement) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Whether `a` (n×m) lies in `S(E)` (or `S^c(E)` with `complement`).
/// Uses exact zero tests; a row count different from `E` never conforms.
pub fn in_staircase(a: &DenseMatrix, e: &StaircaseVector, complement: bool) -> bool {
    first_violation(a, e, complement).is_none()
}

fn check(
    name: &str,
    a: &DenseMatrix,
    transposed: bool,
    e: &StaircaseVector,
    complement: bool,
    out: &mut Vec<Violation>,
) {
    if a.rows() != e.len() {
        out.push(Violation {
            matrix: format!("{} (has {} rows, pattern has {})", name, a.rows(), e.len()),
            row: 0,
            col: 0,
            value: f64::NAN,
        });
        return;
    }
    if let Some((i, j)) = first_violation(a, e, complement) {
        let (row, col) = if transposed { (j, i) } else { (i, j) };
        out.push(Violation {
            matrix: name.trim_end_matches('ᵀ').to_string(),
            row,
            col,
            value: a[(i, j)],
        });
    }
}

/// `H ∈ S(Ē)` and `Gᵀ ∈ S^c(Ē)`. Violations are located in `H` and `G`
/// coordinates.
pub fn validate_causal_pair(h: &DenseMatrix, g: &DenseMatrix, e: &StaircaseVector) -> CausalityReport {
    let mut violations = Vec::new();
    check("H", h, false, e, false, &mut violations);
    check("Gᵀ", &g.transpose(), true, e, true, &mut violations);
    CausalityReport {
        violations,
        ordering: None,
    }
}

/// `Q ∈ S(F)`, `Rᵀ ∈ S^c(Ẽ)`, `P ∈ S^c(F) ∩ S(Ẽ)` and `Ẽ_{i−1} ≥ F_i`.
pub fn validate_relatively_causal(
    p: &DenseMatrix,
    q: &DenseMatrix,
    r: &DenseMatrix,
    e_tilde: &StaircaseVector,
    f: &StaircaseVector,
) -> CausalityReport {
    let mut violations = Vec::new();
    check("Q", q, false, f, false, &mut violations);
    check("Rᵀ", &r.transpose(), true, e_tilde, true, &mut violations);
    check("P", p, false, f, true, &mut violations);
    check("P", p, false, e_tilde, false, &mut violations);
    let ordering = if e_tilde.len() != f.len() {
        Some(format!("pattern lengths differ ({} vs {})", e_tilde.len(), f.len()))
    } else {
        (1..f.len())
            .find(|&i| e_tilde.get(i - 1) < f.get(i))
            .map(|i| format!("Ẽ[{}] = {} is below F[{}] = {}", i, e_tilde.get(i - 1), i + 1, f.get(i)))
    };
    CausalityReport { violations, ordering }
}
