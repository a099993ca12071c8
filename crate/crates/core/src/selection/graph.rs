use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blockspace::{symmetric_eigen, DenseMatrix};
use crate::error::{Error, Result};

/// Laplacian families for the lifted governor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LaplacianKind {
    Complete,
    /// Ring lattice of the given degree with each edge rewired with
    /// probability `rewire_p`. The degree is rounded up to even and capped at
    /// `n − 1`.
    WattsStrogatz {
        degree: usize,
        rewire_p: f64,
        seed: u64,
    },
    /// `MMᵀ` with `M = (I − eeᵀ/n)M̃` and `M̃` uniform on `[0,1]^{n×(n−1)}`.
    RandomFactor {
        seed: u64,
    },
}

const MAX_RESAMPLES: u64 = 100;

/// Laplacian of the requested kind normalized to unit spectral norm.
pub fn laplacian(kind: LaplacianKind, n: usize) -> Result<DenseMatrix> {
    if n < 2 {
        return Err(Error::Graph(format!("a Laplacian needs n ≥ 2, got {}", n)));
    }
    let raw = match kind {
        LaplacianKind::Complete => complete(n),
        LaplacianKind::WattsStrogatz { degree, rewire_p, seed } => watts_strogatz(n, degree, rewire_p, seed)?,
        LaplacianKind::RandomFactor { seed } => random_factor(n, seed),
    };
    let top = symmetric_eigen(&raw)?.max();
    if !(top > 0.0) {
        return Err(Error::Graph("Laplacian is zero".into()));
    }
    Ok(raw.scale(1.0 / top).symmetrize())
}

/// Second-smallest eigenvalue.
pub fn algebraic_connectivity(lap: &DenseMatrix) -> Result<f64> {
    let eig = symmetric_eigen(lap)?;
    Ok(eig.values.get(1).copied().unwrap_or(0.0))
}

fn complete(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| if i == j { n as f64 - 1.0 } else { -1.0 })
}

fn from_edges(n: usize, adj: &[BTreeSet<usize>]) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            adj[i].len() as f64
        } else if adj[i].contains(&j) {
            -1.0
        } else {
            0.0
        }
    })
}

fn connected(adj: &[BTreeSet<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn watts_strogatz(n: usize, degree: usize, rewire_p: f64, seed: u64) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&rewire_p) {
        return Err(Error::Graph(format!(
            "rewiring probability {} outside [0, 1]",
            rewire_p
        )));
    }
    if degree == 0 {
        return Err(Error::Graph("Watts–Strogatz degree must be positive".into()));
    }
    let k = (2 * degree.div_ceil(2)).min(n - 1);
    let half = k / 2;
    for attempt in 0..MAX_RESAMPLES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let mut adj = vec![BTreeSet::new(); n];
        let link = |adj: &mut Vec<BTreeSet<usize>>, a: usize, b: usize| {
            adj[a].insert(b);
            adj[b].insert(a);
        };
        for i in 0..n {
            for s in 1..=half {
                link(&mut adj, i, (i + s) % n);
            }
            if k % 2 == 1 {
                // Odd k only arises as k = n − 1 with n even: join antipodes.
                link(&mut adj, i, (i + n / 2) % n);
            }
        }
        for s in 1..=half {
            for i in 0..n {
                let j = (i + s) % n;
                if !adj[i].contains(&j) || rng.random::<f64>() >= rewire_p {
                    continue;
                }
                let choices: Vec<usize> = (0..n).filter(|&t| t != i && !adj[i].contains(&t)).collect();
                if choices.is_empty() {
                    continue;
                }
                let t = choices[rng.random_range(0..choices.len())];
                adj[i].remove(&j);
                adj[j].remove(&i);
                link(&mut adj, i, t);
            }
        }
        if connected(&adj) {
            return Ok(from_edges(n, &adj));
        }
    }
    Err(Error::Graph(format!(
        "Watts–Strogatz graph stayed disconnected after {} draws",
        MAX_RESAMPLES
    )))
}

fn random_factor(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DenseMatrix::from_fn(n, n - 1, |_, _| rng.random::<f64>());
    let centering = DenseMatrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - 1.0 / n as f64);
    centering.matmul(&raw).expect("conforming").gram_rows()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_laplacian(lap: &DenseMatrix) {
        assert!(lap.asymmetry() <= 1e-12);
        assert!(lap.row_sums().iter().all(|s| s.abs() <= 1e-12));
        let eig = symmetric_eigen(lap).unwrap();
        assert!(eig.min() >= -1e-12);
        assert!((eig.max() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn complete_three() {
        let lap = laplacian(LaplacianKind::Complete, 3).unwrap();
        let expected = DenseMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 / 3.0 } else { -1.0 / 3.0 });
        assert!(lap.sub(&expected).unwrap().max_abs() < 1e-15);
        assert!((algebraic_connectivity(&lap).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_family_is_a_laplacian() {
        for n in [2, 3, 6, 9] {
            assert_laplacian(&laplacian(LaplacianKind::Complete, n).unwrap());
            assert_laplacian(&laplacian(LaplacianKind::RandomFactor { seed: n as u64 }, n).unwrap());
            for degree in 1..=n {
                let kind = LaplacianKind::WattsStrogatz {
                    degree,
                    rewire_p: 0.3,
                    seed: 7,
                };
                let lap = laplacian(kind, n).unwrap();
                assert_laplacian(&lap);
                assert!(algebraic_connectivity(&lap).unwrap() > 1e-9);
            }
        }
    }

    #[test]
    fn ring_without_rewiring() {
        let kind = LaplacianKind::WattsStrogatz {
            degree: 2,
            rewire_p: 0.0,
            seed: 0,
        };
        let lap = laplacian(kind, 6).unwrap();
        // The 6-cycle has spectral norm 4.
        assert!((lap[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((lap[(0, 1)] + 0.25).abs() < 1e-12);
        assert_eq!(lap[(0, 2)], 0.0);
    }

    #[test]
    fn rejects_tiny_graphs() {
        assert!(matches!(laplacian(LaplacianKind::Complete, 1), Err(Error::Graph(_))));
    }
}
