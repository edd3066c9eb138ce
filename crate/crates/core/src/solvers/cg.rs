//! Conjugate gradient on Hermitian PSD image-domain operators.

use num_complex::Complex64;

use crate::error::Result;
use crate::types::ImageSequence;
use crate::vecops;

/// Runs exactly `iters` CG steps for `A x = b` from `x0` (no tolerance
/// exit; P1's fixed-n inner solve relies on the fixed count). The only
/// early return is breakdown: an exactly zero residual or a vanishing
/// `p' A p` curvature, in which case the current iterate is returned.
pub fn conjugate_gradient<F>(
    apply_a: F,
    b: &ImageSequence,
    x0: &ImageSequence,
    iters: usize,
) -> Result<ImageSequence>
where
    F: Fn(&ImageSequence) -> Result<ImageSequence>,
{
    let mut x = x0.clone();
    let ax0 = apply_a(&x)?;
    let mut r: Vec<Complex64> = vecops::sub(b.data(), ax0.data());
    let mut p = ImageSequence::from_vec(b.dims(), r.clone()).expect("shape matches b");
    let mut rs_old = vecops::norm_sq(&r);

    for _ in 0..iters {
        if rs_old == 0.0 {
            break;
        }
        let ap = apply_a(&p)?;
        // Hermitian A: curvature is real
        let curvature = vecops::dot(p.data(), ap.data()).re;
        if curvature <= 0.0 {
            break;
        }
        let alpha = rs_old / curvature;
        vecops::axpy(x.data_mut(), alpha, p.data());
        vecops::axpy(&mut r, -alpha, ap.data());
        let rs_new = vecops::norm_sq(&r);
        let beta = rs_new / rs_old;
        for (pi, &ri) in p.data_mut().iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rs_old = rs_new;
    }
    Ok(x)
}
