//! Exact application of `(mu*I + H'H)^{-1}` through per-block
//! eigendecompositions.
//!
//! Under Cartesian vertical subsampling H'H is block diagonal with one
//! `n_v x n_v` Hermitian PSD block per (column, frame). Eigendecomposing
//! every block once turns the regularized inverse into two small dense
//! matrix-vector products per column: `U diag(1/(e_k + mu)) U' x`. The
//! decomposition is computed per block in parallel and the resulting cache
//! is immutable, so solves are embarrassingly parallel over columns and
//! bit-identical for any worker count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{Dims, ImageSequence};

/// Per-(column, frame) Hermitian PSD blocks of H'H, indexed `i + n_h * t`.
pub struct NormalBlocks {
    dims: Dims,
    blocks: Vec<DMatrix<Complex64>>,
}

impl NormalBlocks {
    pub(crate) fn new_unchecked(dims: Dims, blocks: Vec<DMatrix<Complex64>>) -> Self {
        debug_assert_eq!(blocks.len(), dims.n_columns());
        NormalBlocks { dims, blocks }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Block for column `i`, frame `t`.
    pub fn block(&self, i: usize, t: usize) -> &DMatrix<Complex64> {
        &self.blocks[i + self.dims.n_h * t]
    }

    /// Largest eigenvalue of H'H over all blocks (the exact Lipschitz
    /// scale of the data-fidelity gradient is twice this).
    pub fn max_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                b.symmetric_eigenvalues()
                    .iter()
                    .fold(0.0f64, |m, &e| m.max(e))
            })
            .fold(0.0, f64::max)
    }
}

struct SpectralBlock {
    /// Unitary eigenvector matrix U.
    u: DMatrix<Complex64>,
    /// Eigenvalues of the block, ascending, clamped to `>= 0`.
    e: Vec<f64>,
}

/// Precomputed eigendecompositions `{U, e_k}` of every normal-operator
/// block. Memory is `O(n_h * n_t * n_v^2)` complex numbers; the cache is
/// deliberately held fully in memory.
pub struct SpectralCache {
    dims: Dims,
    blocks: Vec<SpectralBlock>,
}

/// Eigendecomposes every block of H'H (Hermitian eigendecomposition,
/// which coincides with the SVD for Hermitian PSD matrices).
///
/// Eigenvalues are clamped at zero: subsampling guarantees exact zero
/// eigenvalues that rounding can push slightly negative, and the clamp
/// keeps `1/(e_k + mu)` well behaved.
pub fn precompute_cache(blocks: &NormalBlocks) -> Result<SpectralCache> {
    let dims = blocks.dims();
    let decomposed: Vec<Result<SpectralBlock>> = blocks
        .blocks
        .par_iter()
        .enumerate()
        .map(|(idx, b)| {
            let eig = b
                .clone()
                .try_symmetric_eigen(f64::EPSILON, 0)
                .ok_or(Error::EigenFailure {
                    col: idx % dims.n_h,
                    frame: idx / dims.n_h,
                })?;
            // sort ascending, clamp negatives from rounding
            let n = eig.eigenvalues.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                eig.eigenvalues[a]
                    .partial_cmp(&eig.eigenvalues[b])
                    .expect("eigenvalues are finite")
            });
            let e: Vec<f64> = order
                .iter()
                .map(|&k| eig.eigenvalues[k].max(0.0))
                .collect();
            let mut u = DMatrix::zeros(n, n);
            for (dst, &src) in order.iter().enumerate() {
                u.set_column(dst, &eig.eigenvectors.column(src));
            }
            Ok(SpectralBlock { u, e })
        })
        .collect();
    let mut out = Vec::with_capacity(decomposed.len());
    for b in decomposed {
        out.push(b?);
    }
    Ok(SpectralCache { dims, blocks: out })
}

impl SpectralCache {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Eigenvalues of block (i, t), ascending.
    pub fn eigenvalues(&self, i: usize, t: usize) -> &[f64] {
        &self.blocks[i + self.dims.n_h * t].e
    }

    /// Eigenvector matrix of block (i, t).
    pub fn eigenvectors(&self, i: usize, t: usize) -> &DMatrix<Complex64> {
        &self.blocks[i + self.dims.n_h * t].u
    }

    /// Largest cached eigenvalue over all blocks.
    pub fn max_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.e.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// `out_col = B * x_col` for one block, accumulating column-major.
fn block_matvec(b: &DMatrix<Complex64>, x: &[Complex64], out: &mut [Complex64]) {
    let n = x.len();
    out.fill(Complex64::ZERO);
    let data = b.as_slice();
    for k in 0..n {
        let xk = x[k];
        let col = &data[k * n..(k + 1) * n];
        for j in 0..n {
            out[j] += col[j] * xk;
        }
    }
}

/// `out_col = B' * x_col` (conjugate transpose), reading columns of B.
fn block_matvec_adjoint(b: &DMatrix<Complex64>, x: &[Complex64], out: &mut [Complex64]) {
    let n = x.len();
    let data = b.as_slice();
    for j in 0..n {
        let col = &data[j * n..(j + 1) * n];
        let mut acc = Complex64::ZERO;
        for k in 0..n {
            acc += col[k].conj() * x[k];
        }
        out[j] = acc;
    }
}

fn check_dims(expected: Dims, got: Dims) -> Result<()> {
    for (axis, e, g) in [
        ("n_v", expected.n_v, got.n_v),
        ("n_h", expected.n_h, got.n_h),
        ("n_t", expected.n_t, got.n_t),
    ] {
        if e != g {
            return Err(Error::DimMismatch {
                axis,
                expected: e,
                got: g,
            });
        }
    }
    Ok(())
}

/// Applies `(mu*I + H'H)^{-1}` exactly: per column,
/// `U diag(1/(e_k + mu)) U' x`.
pub fn apply_regularized_inverse(
    cache: &SpectralCache,
    mu: f64,
    x: &ImageSequence,
) -> Result<ImageSequence> {
    if !(mu > 0.0) {
        return Err(Error::invalid(
            "mu",
            format!("must be positive (H'H is singular under subsampling), got {mu}"),
        ));
    }
    check_dims(cache.dims, x.dims())?;
    let n_v = cache.dims.n_v;
    let mut out = ImageSequence::zeros(x.dims());
    out.data_mut()
        .par_chunks_mut(n_v)
        .enumerate()
        .for_each(|(idx, out_col)| {
            let block = &cache.blocks[idx];
            let x_col = &x.data()[idx * n_v..(idx + 1) * n_v];
            let mut tmp = vec![Complex64::ZERO; n_v];
            block_matvec_adjoint(&block.u, x_col, &mut tmp);
            for (w, &e) in tmp.iter_mut().zip(&block.e) {
                *w /= e + mu;
            }
            block_matvec(&block.u, &tmp, out_col);
        });
    Ok(out)
}

/// Applies H'H block-wise (one small dense matvec per column), equal to
/// `H'(H x)` without touching k-space.
pub fn apply_normal(blocks: &NormalBlocks, x: &ImageSequence) -> Result<ImageSequence> {
    check_dims(blocks.dims, x.dims())?;
    let n_v = blocks.dims.n_v;
    let mut out = ImageSequence::zeros(x.dims());
    out.data_mut()
        .par_chunks_mut(n_v)
        .enumerate()
        .for_each(|(idx, out_col)| {
            let x_col = &x.data()[idx * n_v..(idx + 1) * n_v];
            block_matvec(&blocks.blocks[idx], x_col, out_col);
        });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_normal_blocks, TransferOperator};
    use crate::types::{CoilSensitivities, SamplingMask};

    fn identity_operator(n_v: usize, n_h: usize, n_t: usize) -> TransferOperator {
        let dims = Dims::new(n_v, n_h, n_t, 1).unwrap();
        TransferOperator::new(
            CoilSensitivities::uniform(dims),
            SamplingMask::full(n_v, n_t),
        )
        .unwrap()
    }

    #[test]
    fn full_sampling_blocks_are_identity() {
        let op = identity_operator(4, 2, 2);
        let blocks = build_normal_blocks(&op);
        for t in 0..2 {
            for i in 0..2 {
                let b = blocks.block(i, t);
                for j in 0..4 {
                    for k in 0..4 {
                        let expect = if j == k { 1.0 } else { 0.0 };
                        assert!((b[(j, k)] - Complex64::new(expect, 0.0)).norm() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn subsampled_single_coil_eigenvalues_are_zero_one() {
        // 2 of 4 lines kept, s = 1: block is a rank-2 projection similar
        // to F'PF, eigenvalues {0, 0, 1, 1}
        let dims = Dims::new(4, 2, 2, 1).unwrap();
        let mask = SamplingMask::new(
            4,
            2,
            vec![true, false, true, false, false, true, true, false],
        )
        .unwrap();
        let op = TransferOperator::new(CoilSensitivities::uniform(dims), mask).unwrap();
        let cache = precompute_cache(&build_normal_blocks(&op)).unwrap();
        for t in 0..2 {
            for i in 0..2 {
                let e = cache.eigenvalues(i, t);
                assert!((e[0]).abs() <= 1e-12 && (e[1]).abs() <= 1e-12);
                assert!((e[2] - 1.0).abs() <= 1e-12 && (e[3] - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identity_cache_halves_under_mu_one() {
        let op = identity_operator(4, 3, 2);
        let cache = precompute_cache(&build_normal_blocks(&op)).unwrap();
        let mut x = ImageSequence::zeros(op.dims());
        for (i, z) in x.data_mut().iter_mut().enumerate() {
            *z = Complex64::new(i as f64, -(i as f64) * 0.5);
        }
        let z = apply_regularized_inverse(&cache, 1.0, &x).unwrap();
        for (a, b) in z.data().iter().zip(x.data()) {
            assert!((a - b * 0.5).norm() <= 1e-12);
        }
    }

    #[test]
    fn mu_must_be_positive() {
        let op = identity_operator(2, 2, 1);
        let cache = precompute_cache(&build_normal_blocks(&op)).unwrap();
        let x = ImageSequence::zeros(op.dims());
        assert!(apply_regularized_inverse(&cache, 0.0, &x).is_err());
        assert!(apply_regularized_inverse(&cache, -0.1, &x).is_err());
    }

    #[test]
    fn apply_normal_is_identity_under_full_sampling() {
        let op = identity_operator(3, 2, 2);
        let blocks = build_normal_blocks(&op);
        let mut x = ImageSequence::zeros(op.dims());
        for (i, z) in x.data_mut().iter_mut().enumerate() {
            *z = Complex64::new((i % 5) as f64, (i % 3) as f64);
        }
        let nx = apply_normal(&blocks, &x).unwrap();
        for (a, b) in nx.data().iter().zip(x.data()) {
            assert!((a - b).norm() <= 1e-12);
        }
        let zero = ImageSequence::zeros(op.dims());
        let nz = apply_normal(&blocks, &zero).unwrap();
        assert!(nz.data().iter().all(|&z| z == Complex64::ZERO));
    }
}
