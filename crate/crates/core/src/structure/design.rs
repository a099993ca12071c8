use crate::blockspace::{symmetric_eigen, DenseMatrix};
use crate::error::{shape_err, Error, Result};

use super::StaircaseVector;

/// The matrix family driving one instance of the reflected forward-backward
/// scheme.
///
/// The governor enters either as `M` (n×(n−1), base form), as a Laplacian
/// `𝓛 = MMᵀ` (lifted form), or both. `K` is optional: when absent it is
/// assembled from the operator constants by [`build_k`].
#[derive(Clone, Debug, PartialEq)]
pub struct SplittingDesign {
    n: usize,
    m: usize,
    l: usize,
    governor: Option<DenseMatrix>,
    laplacian: Option<DenseMatrix>,
    u: Option<DenseMatrix>,
    h: DenseMatrix,
    g: DenseMatrix,
    p: DenseMatrix,
    q: DenseMatrix,
    r: DenseMatrix,
    pattern_hg: StaircaseVector,
    pattern_e: StaircaseVector,
    pattern_f: StaircaseVector,
    k: Option<DenseMatrix>,
}

/// Plain-data input to [`SplittingDesign::new`].
#[derive(Clone, Debug)]
pub struct DesignParts {
    pub governor: Option<DenseMatrix>,
    pub laplacian: Option<DenseMatrix>,
    pub u: Option<DenseMatrix>,
    pub h: DenseMatrix,
    pub g: DenseMatrix,
    pub p: DenseMatrix,
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub pattern_hg: StaircaseVector,
    pub pattern_e: StaircaseVector,
    pub pattern_f: StaircaseVector,
    pub k: Option<DenseMatrix>,
}

fn expect_shape(name: &str, a: &DenseMatrix, rows: usize, cols: usize) -> Result<()> {
    if a.shape() != (rows, cols) {
        return shape_err(format!(
            "{} must be {}x{}, got {}x{}",
            name,
            rows,
            cols,
            a.rows(),
            a.cols()
        ));
    }
    Ok(())
}

impl SplittingDesign {
    /// Checks shapes only; the analytic conditions are the job of
    /// [`validate_assumption`](super::validate_assumption).
    pub fn new(parts: DesignParts) -> Result<Self> {
        let n = parts.h.rows();
        let m = parts.h.cols();
        let l = parts.p.cols();
        if n == 0 {
            return shape_err("a design needs at least one row");
        }
        if parts.governor.is_none() && parts.laplacian.is_none() {
            return Err(Error::Design("either M or a Laplacian must be given".into()));
        }
        if let Some(gov) = &parts.governor {
            expect_shape("M", gov, n, n - 1)?;
        }
        if let Some(lap) = &parts.laplacian {
            expect_shape("Laplacian", lap, n, n)?;
        }
        if let Some(u) = &parts.u {
            if u.rows() != n {
                return shape_err(format!("U must have {} rows, got {}", n, u.rows()));
            }
        }
        expect_shape("G", &parts.g, m, n)?;
        expect_shape("P", &parts.p, n, l)?;
        expect_shape("Q", &parts.q, n, l)?;
        expect_shape("R", &parts.r, l, n)?;
        if let Some(k) = &parts.k {
            expect_shape("K", k, n, n)?;
        }
        for (name, pat, end) in [
            ("Ē", &parts.pattern_hg, m),
            ("Ẽ", &parts.pattern_e, l),
            ("F", &parts.pattern_f, l),
        ] {
            if pat.len() != n || pat.get(n - 1) != end {
                return Err(Error::InfeasiblePattern(format!(
                    "pattern {} must have length {} and end at {}",
                    name, n, end
                )));
            }
        }
        Ok(Self {
            n,
            m,
            l,
            governor: parts.governor,
            laplacian: parts.laplacian,
            u: parts.u,
            h: parts.h,
            g: parts.g,
            p: parts.p,
            q: parts.q,
            r: parts.r,
            pattern_hg: parts.pattern_hg,
            pattern_e: parts.pattern_e,
            pattern_f: parts.pattern_f,
            k: parts.k,
        })
    }

    pub fn into_parts(self) -> DesignParts {
        DesignParts {
            governor: self.governor,
            laplacian: self.laplacian,
            u: self.u,
            h: self.h,
            g: self.g,
            p: self.p,
            q: self.q,
            r: self.r,
            pattern_hg: self.pattern_hg,
            pattern_e: self.pattern_e,
            pattern_f: self.pattern_f,
            k: self.k,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// `M`, if given explicitly.
    pub fn governor(&self) -> Option<&DenseMatrix> {
        self.governor.as_ref()
    }

    pub fn laplacian(&self) -> Option<&DenseMatrix> {
        self.laplacian.as_ref()
    }

    pub fn u(&self) -> Option<&DenseMatrix> {
        self.u.as_ref()
    }

    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn g(&self) -> &DenseMatrix {
        &self.g
    }

    pub fn p(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn pattern_hg(&self) -> &StaircaseVector {
        &self.pattern_hg
    }

    pub fn pattern_e(&self) -> &StaircaseVector {
        &self.pattern_e
    }

    pub fn pattern_f(&self) -> &StaircaseVector {
        &self.pattern_f
    }

    /// The explicitly stored `K`, if any.
    pub fn k(&self) -> Option<&DenseMatrix> {
        self.k.as_ref()
    }

    pub fn set_k(&mut self, k: DenseMatrix) -> Result<()> {
        expect_shape("K", &k, self.n, self.n)?;
        self.k = Some(k);
        Ok(())
    }

    pub fn set_laplacian(&mut self, lap: DenseMatrix) -> Result<()> {
        expect_shape("Laplacian", &lap, self.n, self.n)?;
        self.laplacian = Some(lap);
        Ok(())
    }

    /// `MMᵀ`, taken from the Laplacian when one is stored.
    pub fn gram(&self) -> DenseMatrix {
        match (&self.laplacian, &self.governor) {
            (Some(lap), _) => lap.clone(),
            (None, Some(m)) => m.gram_rows(),
            (None, None) => unreachable!("constructor requires a governor"),
        }
    }

    /// `M` for the base iteration. When only a Laplacian is stored, `M` is the
    /// eigen-factor `V·diag(√λ)` over the `n−1` largest eigenpairs, so that
    /// `MMᵀ = 𝓛` whenever `𝓛` has a one-dimensional kernel.
    pub fn base_governor(&self) -> Result<DenseMatrix> {
        if let Some(m) = &self.governor {
            return Ok(m.clone());
        }
        let lap = self.laplacian.as_ref().expect("constructor requires a governor");
        let eig = symmetric_eigen(lap)?;
        let n = self.n;
        Ok(DenseMatrix::from_fn(n, n - 1, |i, j| {
            eig.vectors[(i, j + 1)] * eig.values[j + 1].max(0.0).sqrt()
        }))
    }
}

pub(crate) fn check_constants(design: &SplittingDesign, sigma: &[f64], lip: &[f64]) -> Result<()> {
    if sigma.len() != design.m || lip.len() != design.l {
        return shape_err(format!(
            "design expects {} cocoercive and {} Lipschitz constants, got {} and {}",
            design.m,
            design.l,
            sigma.len(),
            lip.len()
        ));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!("cocoercivity constant {} is not positive", s)));
    }
    if let Some(v) = lip.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("Lipschitz constant {} is negative", v)));
    }
    Ok(())
}

/// `Υ = [ (H−Gᵀ)Σ^{−1/2}/√2, (P−Q)L^{1/2}, (P−Rᵀ)L^{1/2} ]`, so that `W = ΥΥᵀ`.
pub fn upsilon(
    h: &DenseMatrix,
    g: &DenseMatrix,
    p: &DenseMatrix,
    q: &DenseMatrix,
    r: &DenseMatrix,
    sigma: &[f64],
    lip: &[f64],
) -> Result<DenseMatrix> {
    let inv_sqrt: Vec<f64> = sigma.iter().map(|s| (0.5 / s).sqrt()).collect();
    let sqrt_l: Vec<f64> = lip.iter().map(|v| v.sqrt()).collect();
    let w1 = h.sub(&g.transpose())?.scale_columns(&inv_sqrt)?;
    let w2 = p.sub(q)?.scale_columns(&sqrt_l)?;
    let w3 = p.sub(&r.transpose())?.scale_columns(&sqrt_l)?;
    DenseMatrix::hcat(&[&w1, &w2, &w3])
}

/// `W = ½(H−Gᵀ)Σ⁻¹(Hᵀ−G) + (P−Q)L(Pᵀ−Qᵀ) + (P−Rᵀ)L(Pᵀ−R)`.
pub fn coupling_matrix(
    h: &DenseMatrix,
    g: &DenseMatrix,
    p: &DenseMatrix,
    q: &DenseMatrix,
    r: &DenseMatrix,
    sigma: &[f64],
    lip: &[f64],
) -> Result<DenseMatrix> {
    Ok(upsilon(h, g, p, q, r, sigma, lip)?.gram_rows())
}

/// `K` with its derived `N = −slt(K)` and stepsizes `d_i = 2/K_ii`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrices {
    pub k: DenseMatrix,
    pub n: DenseMatrix,
    pub d: Vec<f64>,
}

impl KernelMatrices {
    pub fn from_k(k: DenseMatrix) -> Result<Self> {
        if let Some((i, v)) = k.diag().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::Design(format!(
                "degenerate diagonal: K[{},{}] = {}",
                i + 1,
                i + 1,
                v
            )));
        }
        let d = k.diag().iter().map(|v| 2.0 / v).collect();
        let n = k.strict_lower().scale(-1.0);
        Ok(Self { k, n, d })
    }
}

/// The default `K = MMᵀ + UUᵀ + W`, or the stored `K` when the design carries
/// one.
pub fn build_k(design: &SplittingDesign, sigma: &[f64], lip: &[f64]) -> Result<KernelMatrices> {
    check_constants(design, sigma, lip)?;
    if let Some(k) = &design.k {
        return KernelMatrices::from_k(k.clone());
    }
    KernelMatrices::from_k(default_k(design, sigma, lip)?)
}

/// `MMᵀ + UUᵀ + W`, ignoring any stored `K`.
pub fn default_k(design: &SplittingDesign, sigma: &[f64], lip: &[f64]) -> Result<DenseMatrix> {
    check_constants(design, sigma, lip)?;
    let mut k = design.gram();
    if let Some(u) = &design.u {
        k = k.add(&u.gram_rows())?;
    }
    let w = coupling_matrix(&design.h, &design.g, &design.p, &design.q, &design.r, sigma, lip)?;
    k.add(&w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_incidence(n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, n - 1, |i, j| {
            if i == j {
                1.0
            } else if i == j + 1 {
                -1.0
            } else {
                0.0
            }
        })
    }

    fn bare(n: usize) -> SplittingDesign {
        SplittingDesign::new(DesignParts {
            governor: Some(path_incidence(n)),
            laplacian: None,
            u: None,
            h: DenseMatrix::zeros(n, 0),
            g: DenseMatrix::zeros(0, n),
            p: DenseMatrix::zeros(n, 0),
            q: DenseMatrix::zeros(n, 0),
            r: DenseMatrix::zeros(0, n),
            pattern_hg: StaircaseVector::spread(n, 0).unwrap(),
            pattern_e: StaircaseVector::spread(n, 0).unwrap(),
            pattern_f: StaircaseVector::spread(n, 0).unwrap(),
            k: None,
        })
        .unwrap()
    }

    #[test]
    fn operator_free_k_is_gram_and_trace_free() {
        let d = bare(4);
        let km = build_k(&d, &[], &[]).unwrap();
        assert_eq!(km.k, path_incidence(4).gram_rows());
        let e = vec![1.0; 4];
        let ke = km.k.mat_vec(&e).unwrap();
        assert!(ke.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(km.d, vec![2.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn stepsizes_and_n_reconstruct_k() {
        let km = build_k(&bare(5), &[], &[]).unwrap();
        let two_dinv = DenseMatrix::from_diag(&km.d.iter().map(|d| 2.0 / d).collect::<Vec<_>>());
        let rebuilt = two_dinv.sub(&km.n).unwrap().sub(&km.n.transpose()).unwrap();
        assert!(rebuilt.sub(&km.k).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn degenerate_diagonal_is_rejected() {
        let mut k = DenseMatrix::identity(3);
        k[(1, 1)] = 0.0;
        assert!(matches!(KernelMatrices::from_k(k), Err(Error::Design(_))));
    }

    #[test]
    fn lifted_design_factorizes_laplacian() {
        let n = 4;
        let lap = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - 0.25 } else { -0.25 });
        let mut parts = bare(n).into_parts();
        parts.governor = None;
        parts.laplacian = Some(lap.clone());
        let d = SplittingDesign::new(parts).unwrap();
        let m = d.base_governor().unwrap();
        assert_eq!(m.shape(), (4, 3));
        assert!(m.gram_rows().sub(&lap).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn constants_are_checked() {
        assert!(build_k(&bare(3), &[1.0], &[]).is_err());
    }
}
