use crate::blockspace::{psd_check, spectral_norm, DenseMatrix};
use crate::error::{shape_err, Error, Result};

use super::{CocoerciveOracle, LipschitzMonotoneOracle, ResolventOracle};

/// Proximal map of `τ‖· − ξ‖`: shrinks `v` toward `ξ` by `τ` along the ray.
pub fn prox_norm_distance(xi: &[f64], tau: f64, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    prox_norm_distance_into(xi, tau, v, &mut out);
    out
}

fn prox_norm_distance_into(xi: &[f64], tau: f64, v: &[f64], out: &mut [f64]) {
    let dist = v.iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let keep = if dist <= tau { 0.0 } else { 1.0 - tau / dist };
    for ((o, a), b) in out.iter_mut().zip(v).zip(xi) {
        *o = b + keep * (a - b);
    }
}

/// Euclidean projection onto the unit simplex (sort and threshold).
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    simplex_project_into(v, &mut out);
    out
}

pub(crate) fn simplex_project_into(v: &[f64], out: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = (x - theta).max(0.0);
    }
    // Absorb rounding so the output sums to one.
    let total: f64 = out.iter().sum();
    if total > 0.0 && (total - 1.0).abs() > 0.0 {
        let support = out.iter().filter(|&&o| o > 0.0).count() as f64;
        let shift = (1.0 - total) / support;
        for o in out.iter_mut().filter(|o| **o > 0.0) {
            *o = (*o + shift).max(0.0);
        }
    }
}

/// Derivative of the Huber-like penalty: flat on `[−δ₁, δ₁]`, linear up to
/// `δ₂`, then saturated.
pub fn huber_derivative(z: f64, delta1: f64, delta2: f64) -> f64 {
    let a = z.abs();
    if a <= delta1 {
        0.0
    } else if a <= delta2 {
        z.signum() * (a - delta1)
    } else {
        z.signum() * (delta2 - delta1)
    }
}

/// The penalty itself, `h(0) = 0`.
pub fn huber_value(z: f64, delta1: f64, delta2: f64) -> f64 {
    let a = z.abs();
    if a <= delta1 {
        0.0
    } else if a <= delta2 {
        0.5 * (a - delta1) * (a - delta1)
    } else {
        let w = delta2 - delta1;
        0.5 * w * w + w * (a - delta2)
    }
}

fn check_thresholds(delta1: f64, delta2: f64) -> Result<()> {
    if !(0.0 <= delta1 && delta1 <= delta2) {
        return Err(Error::Domain(format!(
            "Huber thresholds must satisfy 0 <= delta1 <= delta2, got {} and {}",
            delta1, delta2
        )));
    }
    Ok(())
}

/// `h′(Ψ_i·x − y_i)·Ψ_iᵀ`.
pub fn huber_grad_component(psi_row: &[f64], y_i: f64, delta1: f64, delta2: f64, x: &[f64]) -> Result<Vec<f64>> {
    check_thresholds(delta1, delta2)?;
    if psi_row.len() != x.len() {
        return shape_err(format!(
            "row of length {} against point of length {}",
            psi_row.len(),
            x.len()
        ));
    }
    let z: f64 = psi_row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - y_i;
    let g = huber_derivative(z, delta1, delta2);
    Ok(psi_row.iter().map(|p| g * p).collect())
}

/// `Θx`.
pub fn linear_monotone(theta: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if !theta.is_square() {
        return shape_err(format!(
            "linear operator must be square, got {}x{}",
            theta.rows(),
            theta.cols()
        ));
    }
    theta.mat_vec(x)
}

impl ResolventOracle {
    /// Resolvent of `∂‖· − ξ‖`.
    pub fn norm_distance(xi: Vec<f64>) -> Self {
        Self::new("norm_distance", move |tau, v, out| {
            prox_norm_distance_into(&xi, tau, v, out)
        })
    }

    /// Resolvent of the normal cone of the unit simplex in `R^d`.
    pub fn simplex() -> Self {
        Self::new("simplex", |_, v, out| simplex_project_into(v, out))
    }

    /// Resolvent of `N_Δ × N_Δ` on `R^{d1} × R^{d2}`.
    pub fn simplex_product(d1: usize) -> Self {
        Self::new("simplex_product", move |_, v, out| {
            let (vu, vv) = v.split_at(d1);
            let (ou, ov) = out.split_at_mut(d1);
            simplex_project_into(vu, ou);
            simplex_project_into(vv, ov);
        })
    }
}

impl CocoerciveOracle {
    /// `x ↦ h′(ψ·x − y)ψ` with `σ = 1/‖ψ‖²`.
    pub fn huber(psi_row: Vec<f64>, y: f64, delta1: f64, delta2: f64) -> Result<Self> {
        check_thresholds(delta1, delta2)?;
        let norm_sq: f64 = psi_row.iter().map(|p| p * p).sum();
        if norm_sq == 0.0 {
            return Err(Error::Domain("Huber row must be nonzero".into()));
        }
        Self::new("huber", 1.0 / norm_sq, move |x, out| {
            let z: f64 = psi_row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - y;
            let g = huber_derivative(z, delta1, delta2);
            for (o, p) in out.iter_mut().zip(&psi_row) {
                *o = g * p;
            }
        })
    }

    /// `x ↦ Sx` for symmetric PSD `S`, with `σ = 1/λ_max(S)`.
    pub fn linear_psd(s: DenseMatrix) -> Result<Self> {
        let (ok, min, _) = psd_check(&s)?;
        if !ok {
            return Err(Error::NotMonotone(format!(
                "cocoercive linear map must be PSD (min eigenvalue {:.3e})",
                min
            )));
        }
        let top = spectral_norm(&s).value;
        let sigma = if top > 0.0 { 1.0 / top } else { 1.0 };
        Self::new("linear_psd", sigma, move |x, out| s.mat_vec_into(x, out))
    }
}

impl LipschitzMonotoneOracle {
    /// `x ↦ Θx` with `L = ‖Θ‖₂`; requires `Θ + Θᵀ ⪰ 0`.
    pub fn linear(theta: DenseMatrix) -> Result<Self> {
        if !theta.is_square() {
            return shape_err(format!(
                "linear operator must be square, got {}x{}",
                theta.rows(),
                theta.cols()
            ));
        }
        let sym = theta.add(&theta.transpose())?;
        let (ok, min, _) = psd_check(&sym)?;
        if !ok {
            return Err(Error::NotMonotone(format!("Θ + Θᵀ has eigenvalue {:.3e}", min)));
        }
        let lip = spectral_norm(&theta).value;
        Self::new("linear", lip, move |x, out| theta.mat_vec_into(x, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prox_fixes_anchor_and_shrinks() {
        assert_eq!(prox_norm_distance(&[1.0, -2.0], 0.7, &[1.0, -2.0]), vec![1.0, -2.0]);
        assert_eq!(prox_norm_distance(&[0.0, 0.0], 1.0, &[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(prox_norm_distance(&[0.0, 0.0], 3.0, &[2.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(simplex_project(&[0.25, 0.75]), vec![0.25, 0.75]);
        assert_eq!(simplex_project(&[10.0, 0.0]), vec![1.0, 0.0]);
        let p = simplex_project(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn huber_regions() {
        let g = huber_grad_component(&[1.0, 0.0], 0.0, 1.0, 2.0, &[0.5, 3.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let g = huber_grad_component(&[1.0, 0.0], 0.0, 1.0, 2.0, &[1.5, 0.0]).unwrap();
        assert_eq!(g, vec![0.5, 0.0]);
        let g = huber_grad_component(&[1.0, 0.0], 0.0, 1.0, 2.0, &[-7.0, 0.0]).unwrap();
        assert_eq!(g, vec![-1.0, 0.0]);
        assert!(matches!(
            huber_grad_component(&[1.0], 0.0, 2.0, 1.0, &[0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn skew_linear_operator() {
        let theta = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(linear_monotone(&theta, &[1.0, 0.0]).unwrap(), vec![0.0, -1.0]);
        let c = LipschitzMonotoneOracle::linear(theta).unwrap();
        assert!((c.lip() - 1.0).abs() < 1e-12);
        let zero = LipschitzMonotoneOracle::linear(DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(zero.lip(), 0.0);
    }

    #[test]
    fn indefinite_linear_operator_rejected() {
        let theta = DenseMatrix::from_diag(&[1.0, -0.5]);
        assert!(matches!(
            LipschitzMonotoneOracle::linear(theta),
            Err(Error::NotMonotone(_))
        ));
    }

    #[test]
    fn huber_oracle_sigma_is_inverse_row_norm() {
        let b = CocoerciveOracle::huber(vec![3.0, 4.0], 0.1, 0.5, 1.0).unwrap();
        assert_eq!(b.sigma(), 1.0 / 25.0);
    }
}
