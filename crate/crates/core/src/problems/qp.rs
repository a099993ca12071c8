//! `min ½yᵀSy + cᵀy` over the unit simplex, `S` symmetric PSD.

use crate::blockspace::{spectral_norm, DenseMatrix};
use crate::error::{shape_err, Error, Result};
use crate::operators::simplex_project_into;

pub const MAX_QP_ITERS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexQpSolution {
    pub y: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Gradient-mapping norm (APG) or Frank–Wolfe gap at `y`.
    pub residual: f64,
}

fn objective(s: &DenseMatrix, c: &[f64], y: &[f64], grad: &mut [f64]) -> f64 {
    s.mat_vec_into(y, grad);
    let quad: f64 = grad.iter().zip(y).map(|(g, v)| g * v).sum();
    let lin: f64 = c.iter().zip(y).map(|(a, v)| a * v).sum();
    for (g, a) in grad.iter_mut().zip(c) {
        *g += a;
    }
    0.5 * quad + lin
}

fn check(s: &DenseMatrix, c: &[f64]) -> Result<()> {
    if !s.is_square() || s.rows() != c.len() || c.is_empty() {
        return shape_err(format!(
            "quadratic is {}x{} with a linear term of length {}",
            s.rows(),
            s.cols(),
            c.len()
        ));
    }
    Ok(())
}

fn vertex(c: &[f64], s: &DenseMatrix) -> SimplexQpSolution {
    let (i, _) = c
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut y = vec![0.0; c.len()];
    y[i] = 1.0;
    let mut g = vec![0.0; c.len()];
    let value = objective(s, c, &y, &mut g);
    SimplexQpSolution {
        y,
        value,
        iterations: 0,
        residual: 0.0,
    }
}

/// Accelerated projected gradient with adaptive restart and step `1/‖S‖₂`.
/// Stops when `‖y − P(y − ∇φ(y)/Λ)‖·Λ ≤ tol`. A zero quadratic is solved
/// exactly at the best vertex.
pub fn simplex_qp_apg(s: &DenseMatrix, c: &[f64], tol: f64, max_iter: usize) -> Result<SimplexQpSolution> {
    check(s, c)?;
    let lambda = spectral_norm(s).value;
    if lambda <= 0.0 {
        return Ok(vertex(c, s));
    }
    let d = c.len();
    let step = 1.0 / lambda;
    let mut y = vec![1.0 / d as f64; d];
    let mut z = y.clone();
    let mut t = 1.0_f64;
    let (mut grad, mut trial, mut next) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    for k in 0..max_iter {
        objective(s, c, &z, &mut grad);
        for ((tv, zv), g) in trial.iter_mut().zip(&z).zip(&grad) {
            *tv = zv - step * g;
        }
        simplex_project_into(&trial, &mut next);
        // Residual at the new point.
        let value = objective(s, c, &next, &mut grad);
        for ((tv, nv), g) in trial.iter_mut().zip(&next).zip(&grad) {
            *tv = nv - step * g;
        }
        let mut mapped = vec![0.0; d];
        simplex_project_into(&trial, &mut mapped);
        let residual = lambda
            * mapped
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        if residual <= tol {
            return Ok(SimplexQpSolution {
                y: next,
                value,
                iterations: k + 1,
                residual,
            });
        }
        let restart: f64 = z
            .iter()
            .zip(&next)
            .zip(&y)
            .map(|((zv, nv), yv)| (zv - nv) * (nv - yv))
            .sum();
        if restart > 0.0 {
            t = 1.0;
            z.copy_from_slice(&next);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for ((zv, nv), yv) in z.iter_mut().zip(&next).zip(&y) {
                *zv = nv + beta * (nv - yv);
            }
            t = t_next;
        }
        y.copy_from_slice(&next);
    }
    Err(Error::SubproblemNonConvergence(max_iter))
}

/// Frank–Wolfe with away steps and exact line search. Stops when the
/// Frank–Wolfe gap `∇φ(y)ᵀ(y − s)`, an upper bound on suboptimality, is
/// at most `tol`.
pub fn simplex_qp_away_fw(s: &DenseMatrix, c: &[f64], tol: f64, max_iter: usize) -> Result<SimplexQpSolution> {
    check(s, c)?;
    let d = c.len();
    let mut y = vertex(c, s).y;
    let mut grad = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut sd = vec![0.0; d];
    for k in 0..max_iter {
        let value = objective(s, c, &y, &mut grad);
        let gy: f64 = grad.iter().zip(&y).map(|(g, v)| g * v).sum();
        let (fw, gfw) = grad
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, g)| (i, *g))
            .expect("nonempty");
        let gap = gy - gfw;
        if gap <= tol {
            return Ok(SimplexQpSolution {
                y,
                value,
                iterations: k,
                residual: gap.max(0.0),
            });
        }
        let (away, gaway) = grad
            .iter()
            .enumerate()
            .filter(|(i, _)| y[*i] > 0.0)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, g)| (i, *g))
            .expect("iterate lies on the simplex");
        let toward = gap >= gaway - gy;
        let max_step = if toward {
            dir.iter_mut().zip(&y).for_each(|(dv, yv)| *dv = -yv);
            dir[fw] += 1.0;
            1.0
        } else {
            dir.iter_mut().zip(&y).for_each(|(dv, yv)| *dv = *yv);
            dir[away] -= 1.0;
            let ya = y[away];
            if ya < 1.0 {
                ya / (1.0 - ya)
            } else {
                f64::INFINITY
            }
        };
        let slope: f64 = grad.iter().zip(&dir).map(|(g, v)| g * v).sum();
        s.mat_vec_into(&dir, &mut sd);
        let curv: f64 = sd.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let step = if curv > 0.0 {
            (-slope / curv).min(max_step)
        } else {
            max_step
        };
        if !step.is_finite() {
            return Err(Error::SubproblemNonConvergence(k));
        }
        for (yv, dv) in y.iter_mut().zip(&dir) {
            *yv = (*yv + step * dv).max(0.0);
        }
        if step == max_step && !toward {
            y[away] = 0.0;
        }
        let total: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= total);
    }
    Err(Error::SubproblemNonConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_case_picks_vertex() {
        let s = DenseMatrix::zeros(3, 3);
        let sol = simplex_qp_apg(&s, &[0.5, -2.0, 1.0], 1e-12, 10).unwrap();
        assert_eq!(sol.y, vec![0.0, 1.0, 0.0]);
        assert_eq!(sol.value, -2.0);
    }

    #[test]
    fn interior_minimizer_of_identity() {
        // ½‖y‖² over the simplex is minimized at the barycenter.
        let s = DenseMatrix::identity(4);
        let a = simplex_qp_apg(&s, &[0.0; 4], 1e-12, 10_000).unwrap();
        let b = simplex_qp_away_fw(&s, &[0.0; 4], 1e-12, 10_000).unwrap();
        for v in a.y.iter().chain(&b.y) {
            assert!((v - 0.25).abs() < 1e-10);
        }
        assert!((a.value - 0.125).abs() < 1e-12);
    }

    #[test]
    fn solvers_agree_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = DenseMatrix::from_fn(5, 5, |_, _| rng.random_range(-1.0..1.0));
            let s = f.transpose().matmul(&f).unwrap();
            let c: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = simplex_qp_apg(&s, &c, 1e-10, MAX_QP_ITERS).unwrap();
            let b = simplex_qp_away_fw(&s, &c, 1e-10, MAX_QP_ITERS).unwrap();
            assert!((a.value - b.value).abs() < 1e-8, "{} vs {}", a.value, b.value);
        }
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let s = DenseMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 2.0]]).unwrap();
        assert!(matches!(
            simplex_qp_apg(&s, &[0.1, -0.2], 1e-300, 3),
            Err(Error::SubproblemNonConvergence(3))
        ));
    }
}
