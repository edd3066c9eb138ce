//! Slice-level complex vector helpers used by the solvers.
//!
//! Reductions here are always sequential: bit-identical results across
//! thread counts are part of the solver contracts, so summation order must
//! not depend on the worker pool.

use num_complex::Complex64;

/// Standard complex inner product `sum conj(a_i) * b_i`.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn norm_l1(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm()).sum()
}

/// `out = a - b`.
pub(crate) fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a += s * b` in place.
pub(crate) fn axpy(a: &mut [Complex64], s: f64, b: &[Complex64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

