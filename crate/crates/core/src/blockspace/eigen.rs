//! Dense symmetric eigen-solvers and singular-value utilities.
//!
//! Everything here targets the small matrices a splitting design produces
//! (n up to a few dozen), so cyclic Jacobi is both accurate and fast enough.

use crate::error::{shape_err, Error, Result};

use super::DenseMatrix;

const JACOBI_MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix.
///
/// `values` are ascending; column `k` of `vectors` is the unit eigenvector
/// for `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude, which is `‖S‖₂` for symmetric `S`.
    pub fn norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

fn check_symmetric(s: &DenseMatrix) -> Result<DenseMatrix> {
    if !s.is_square() {
        return shape_err(format!(
            "eigenvalues need a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        ));
    }
    let scale = 1.0 + s.max_abs();
    if s.asymmetry() > SYMMETRY_TOL * scale {
        return Err(Error::Domain(format!(
            "matrix is not symmetric (asymmetry {:.3e})",
            s.asymmetry()
        )));
    }
    Ok(s.symmetrize())
}

/// Cyclic Jacobi eigen-solver for symmetric input.
pub fn symmetric_eigen(s: &DenseMatrix) -> Result<SymmetricEigen> {
    let mut a = check_symmetric(s)?;
    let n = a.rows();
    let mut v = DenseMatrix::identity(n);
    let total = a.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| a[(i, i)]).collect(),
        vectors: DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]),
    })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(s: &DenseMatrix) -> Result<f64> {
    Ok(symmetric_eigen(s)?.min())
}

/// PSD test with scale-aware slack: `λ_min ≥ −1e-9·(1 + ‖S‖₂)`.
///
/// Returns `(passes, λ_min, slack)`.
pub fn psd_check(s: &DenseMatrix) -> Result<(bool, f64, f64)> {
    let eig = symmetric_eigen(s)?;
    let slack = 1e-9 * (1.0 + eig.norm());
    Ok((eig.min() >= -slack, eig.min(), slack))
}

/// Largest singular value with its singular pair, `A v = σ u`.
#[derive(Clone, Debug)]
pub struct SingularTriple {
    pub value: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Largest singular value and top singular pair by power iteration on the
/// smaller Gram matrix (relative tolerance 1e-10, at most 10000 iterations).
///
/// When the top singular value is nearly repeated power iteration stalls; in
/// that case the result is refined by a Jacobi solve of the same Gram matrix.
pub fn spectral_norm(a: &DenseMatrix) -> SingularTriple {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 || a.max_abs() == 0.0 {
        return zero_triple(rows, cols);
    }
    let wide = rows < cols;
    let gram = if wide { a.gram_rows() } else { a.transpose().gram_rows() };
    let k = gram.rows();
    // Start from the heaviest Gram column; it is never orthogonal to the top
    // eigenvector unless that column is zero.
    let start = (0..k)
        .max_by(|&i, &j| gram[(i, i)].total_cmp(&gram[(j, j)]))
        .unwrap_or(0);
    let mut x = gram.column(start);
    normalize(&mut x);
    let mut y = vec![0.0; k];
    let mut lambda = 0.0;
    let mut converged = false;
    for _ in 0..10_000 {
        gram.mat_vec_into(&x, &mut y);
        lambda = dot(&x, &y);
        // Residual of the eigen-equation bounds the eigenvalue error.
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - lambda * a) * (b - lambda * a))
            .sum::<f64>()
            .sqrt();
        if residual <= 1e-10 * lambda.abs() {
            converged = true;
            break;
        }
        if normalize(&mut y) == 0.0 {
            break;
        }
        std::mem::swap(&mut x, &mut y);
    }
    if !converged {
        if let Ok(eig) = symmetric_eigen(&gram) {
            lambda = eig.max();
            x = eig.vectors.column(k - 1);
        }
    }
    triple_from_gram_vector(a, wide, lambda, x)
}

/// Exact top singular triple via Jacobi on the smaller Gram matrix.
///
/// Used inside iterative selection where repeated top singular values are
/// the norm rather than the exception.
pub fn top_singular_triple(a: &DenseMatrix) -> SingularTriple {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 || a.max_abs() == 0.0 {
        return zero_triple(rows, cols);
    }
    let wide = rows < cols;
    let gram = if wide { a.gram_rows() } else { a.transpose().gram_rows() };
    let eig = symmetric_eigen(&gram).expect("Gram matrices are symmetric");
    let k = gram.rows();
    triple_from_gram_vector(a, wide, eig.max(), eig.vectors.column(k - 1))
}

fn triple_from_gram_vector(a: &DenseMatrix, wide: bool, lambda: f64, x: Vec<f64>) -> SingularTriple {
    let sigma = lambda.max(0.0).sqrt();
    let (rows, cols) = a.shape();
    if wide {
        // x is a left vector: v = Aᵀu / σ.
        let mut v = vec![0.0; cols];
        a.tr_mat_vec_into(&x, &mut v);
        normalize(&mut v);
        SingularTriple { value: sigma, u: x, v }
    } else {
        let mut u = vec![0.0; rows];
        a.mat_vec_into(&x, &mut u);
        normalize(&mut u);
        SingularTriple { value: sigma, u, v: x }
    }
}

fn zero_triple(rows: usize, cols: usize) -> SingularTriple {
    let unit = |len: usize| {
        let mut e = vec![0.0; len];
        if let Some(first) = e.first_mut() {
            *first = 1.0;
        }
        e
    };
    SingularTriple {
        value: 0.0,
        u: unit(rows),
        v: unit(cols),
    }
}

/// Singular values in descending order by one-sided Jacobi (Hestenes).
///
/// Returns `min(rows, cols)` values. Small singular values are computed to
/// high relative accuracy, which the rank checks on `M` depend on.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let work = if a.rows() >= a.cols() { a.clone() } else { a.transpose() };
    let (m, n) = work.shape();
    // Columns stored contiguously for the rotations.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| work.column(j)).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let xp = cols[p][k];
                    let xq = cols[q][k];
                    cols[p][k] = c * xp - s * xq;
                    cols[q][k] = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(s: &DenseMatrix) -> Result<DenseMatrix> {
    let a = check_symmetric(s)?;
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(Error::Domain(format!(
                "matrix is not positive definite (pivot {} is {:.3e})",
                j, diag
            )));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower triangular `L`, column by column of `b`.
pub(crate) fn forward_substitute(l: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = l.rows();
    let mut y = DenseMatrix::zeros(n, b.cols());
    for c in 0..b.cols() {
        for i in 0..n {
            let mut v = b[(i, c)];
            for k in 0..i {
                v -= l[(i, k)] * y[(k, c)];
            }
            y[(i, c)] = v / l[(i, i)];
        }
    }
    y
}

/// Orthonormal basis of `{x ∈ R^n : Σ x_i = 0}` as an `n × (n−1)` matrix
/// (Helmert contrasts).
pub fn sum_zero_basis(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n.saturating_sub(1), |i, j| {
        let k = (j + 1) as f64;
        let scale = 1.0 / (k * (k + 1.0)).sqrt();
        if i <= j {
            scale
        } else if i == j + 1 {
            -k * scale
        } else {
            0.0
        }
    })
}

/// Largest `μ` with `A − μ B ⪰ 0`, for symmetric `A` and positive definite `B`.
///
/// Equals the smallest eigenvalue of `C⁻¹ A C⁻ᵀ` with `B = C Cᵀ`.
pub fn generalized_min_eigenvalue(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    let c = cholesky(b)?;
    let y = forward_substitute(&c, &check_symmetric(a)?);
    let z = forward_substitute(&c, &y.transpose());
    min_eigenvalue(&z.symmetrize())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}
