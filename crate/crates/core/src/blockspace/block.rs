use crate::error::{shape_err, Error, Result};

use super::DenseMatrix;

/// An element of `(R^dim)^n`: `n` stacked points of common dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let n = blocks.len();
        if n == 0 {
            return shape_err("a block vector needs at least one block");
        }
        let dim = blocks[0].len();
        if dim == 0 {
            return shape_err("block dimension must be at least 1");
        }
        if let Some(i) = blocks.iter().position(|b| b.len() != dim) {
            return shape_err(format!(
                "block {} has dimension {}, expected {}",
                i,
                blocks[i].len(),
                dim
            ));
        }
        Ok(Self {
            n,
            dim,
            data: blocks.into_iter().flatten().collect(),
        })
    }

    /// Zero block vector. `n = 0` is permitted here so that an empty governor
    /// state (a single resolvent, `n - 1 = 0`) can be represented.
    pub fn zeros(n: usize, dim: usize) -> Self {
        Self {
            n,
            dim,
            data: vec![0.0; n * dim],
        }
    }

    pub fn from_flat(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * dim {
            return shape_err(format!("{} values for {} blocks of dimension {}", data.len(), n, dim));
        }
        Ok(Self { n, dim, data })
    }

    /// `n` copies of the same point.
    pub fn replicate(point: &[f64], n: usize) -> Self {
        let mut data = Vec::with_capacity(n * point.len());
        for _ in 0..n {
            data.extend_from_slice(point);
        }
        Self {
            n,
            dim: point.len(),
            data,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim.max(1)).take(self.n)
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            n: self.n,
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn mean_block(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for b in self.blocks() {
            for (m, v) in mean.iter_mut().zip(b) {
                *m += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        mean
    }

    /// `max_i ‖x_i − x̄‖` with `x̄` the block mean.
    pub fn consensus_error(&self) -> f64 {
        let mean = self.mean_block();
        self.blocks()
            .map(|b| b.iter().zip(&mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.dim != other.dim {
            return shape_err(format!(
                "block vectors of shape {}x{} and {}x{}",
                self.n, self.dim, other.n, other.dim
            ));
        }
        Ok(())
    }
}

/// Applies `P ⊗ Id` to `v`: block `i` of the output is `Σ_j P_ij v_j`.
pub fn block_apply(p: &DenseMatrix, v: &BlockVector) -> Result<BlockVector> {
    if p.cols() != v.num_blocks() {
        return shape_err(format!(
            "matrix with {} columns applied to {} blocks",
            p.cols(),
            v.num_blocks()
        ));
    }
    let mut out = BlockVector::zeros(p.rows(), v.dim());
    block_apply_into(p, v, &mut out);
    Ok(out)
}

/// Unchecked variant of [`block_apply`] writing into `out`.
pub(crate) fn block_apply_into(p: &DenseMatrix, v: &BlockVector, out: &mut BlockVector) {
    debug_assert_eq!(p.cols(), v.num_blocks());
    debug_assert_eq!(p.rows(), out.num_blocks());
    out.as_flat_mut().iter_mut().for_each(|o| *o = 0.0);
    for i in 0..p.rows() {
        for (j, &pij) in p.row(i).iter().enumerate() {
            if pij == 0.0 {
                continue;
            }
            let src = j * v.dim..(j + 1) * v.dim;
            let (dst_start, dim) = (i * v.dim, v.dim);
            for k in 0..dim {
                out.data[dst_start + k] += pij * v.data[src.start + k];
            }
        }
    }
}

/// Applies `Pᵀ ⊗ Id` to `v` without forming the transpose.
pub(crate) fn block_apply_transpose_into(p: &DenseMatrix, v: &BlockVector, out: &mut BlockVector) {
    debug_assert_eq!(p.rows(), v.num_blocks());
    debug_assert_eq!(p.cols(), out.num_blocks());
    let dim = v.dim;
    out.as_flat_mut().iter_mut().for_each(|o| *o = 0.0);
    for i in 0..p.rows() {
        let src = v.block(i);
        for (j, &pij) in p.row(i).iter().enumerate() {
            if pij == 0.0 {
                continue;
            }
            for k in 0..dim {
                out.data[j * dim + k] += pij * src[k];
            }
        }
    }
}

/// `Σ_i w_i ‖v_i‖²` for strictly positive weights.
pub fn weighted_norm_sq(v: &BlockVector, weights: &[f64]) -> Result<f64> {
    if weights.len() != v.num_blocks() {
        return shape_err(format!("{} weights for {} blocks", weights.len(), v.num_blocks()));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(Error::Domain(format!("weight {} is {}, must be positive", i, w)));
    }
    Ok(v.blocks()
        .zip(weights)
        .map(|(b, w)| w * b.iter().map(|x| x * x).sum::<f64>())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(BlockVector::new(vec![]).is_err());
        assert!(BlockVector::new(vec![vec![]]).is_err());
        assert!(BlockVector::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn identity_apply_is_noop() {
        let v = BlockVector::new(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(block_apply(&DenseMatrix::identity(3), &v).unwrap(), v);
    }

    #[test]
    fn row_sum_apply() {
        let p = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let v = BlockVector::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let out = block_apply(&p, &v).unwrap();
        assert_eq!(out.block(0), &[1.0, 1.0]);
    }

    #[test]
    fn apply_rejects_mismatch() {
        let v = BlockVector::zeros(3, 2);
        assert!(block_apply(&DenseMatrix::identity(2), &v).is_err());
    }

    #[test]
    fn weighted_norm_cases() {
        let v = BlockVector::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(weighted_norm_sq(&v, &[1.0, 1.0]).unwrap(), v.norm_sq());
        assert_eq!(weighted_norm_sq(&v, &[7.0, 2.0]).unwrap(), 50.0);
        assert!(matches!(weighted_norm_sq(&v, &[1.0, 0.0]), Err(Error::Domain(_))));
        assert!(weighted_norm_sq(&v, &[1.0]).is_err());
    }

    #[test]
    fn consensus_of_replicated_point_is_zero() {
        let v = BlockVector::replicate(&[1.5, -2.0], 4);
        assert_eq!(v.consensus_error(), 0.0);
        assert_eq!(v.mean_block(), vec![1.5, -2.0]);
    }

    #[test]
    fn transpose_apply_matches_explicit_transpose() {
        let p = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        let v = BlockVector::new(vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]]).unwrap();
        let mut out = BlockVector::zeros(2, 2);
        block_apply_transpose_into(&p, &v, &mut out);
        assert_eq!(out, block_apply(&p.transpose(), &v).unwrap());
    }
}
