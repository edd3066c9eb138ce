//! Temporal regularizers: the orthonormal temporal-DFT frame, the
//! temporal finite-difference operator behind total variation, the exact
//! tridiagonal solve of `(c*I + D'D)`, and complex soft thresholding.
//!
//! Everything here is a pure per-pixel transform along the time axis.
//! The heavy operators work on a series-major scratch layout (each
//! pixel's time series contiguous) and parallelize over pixels with
//! disjoint writes, so outputs are bit-identical for any worker count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::UnitaryFft;
use crate::types::{CoefficientField, Dims, ImageSequence};

/// Which regularizer plays the transform role in a solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    /// Orthonormal DFT along the time axis (a tight frame: psi'psi = I).
    TemporalDft,
    /// First differences along the time axis (total-variation penalty).
    TemporalTv,
}

impl RegularizerKind {
    pub fn is_tight_frame(self) -> bool {
        matches!(self, RegularizerKind::TemporalDft)
    }

    /// Frames in the coefficient domain for an `n_t`-frame image.
    pub fn coeff_frames(self, n_t: usize) -> usize {
        match self {
            RegularizerKind::TemporalDft => n_t,
            RegularizerKind::TemporalTv => n_t - 1,
        }
    }

    pub fn validate(self, n_t: usize) -> Result<()> {
        if self == RegularizerKind::TemporalTv && n_t < 2 {
            return Err(Error::invalid(
                "regularizer",
                format!("temporal TV requires n_t >= 2, got {n_t}"),
            ));
        }
        Ok(())
    }

    /// Applies the operator: psi x (DFT) or D_t x (TV).
    pub fn forward(self, x: &ImageSequence) -> Result<CoefficientField> {
        match self {
            RegularizerKind::TemporalDft => Ok(temporal_dft_forward(x)),
            RegularizerKind::TemporalTv => temporal_diff(x),
        }
    }

    /// Applies the exact adjoint: psi' w or D'_t v.
    pub fn adjoint(self, w: &CoefficientField) -> ImageSequence {
        match self {
            RegularizerKind::TemporalDft => temporal_dft_adjoint(w),
            RegularizerKind::TemporalTv => temporal_diff_adjoint(w),
        }
    }

    /// Exact solve of `(c*I + R'R) z = b`.
    pub fn solve_normal(self, c: f64, b: &ImageSequence) -> Result<ImageSequence> {
        match self {
            // R'R = I for the orthonormal DFT
            RegularizerKind::TemporalDft => {
                if !(c > 0.0) {
                    return Err(Error::invalid("c", format!("must be positive, got {c}")));
                }
                let mut out = b.clone();
                let s = 1.0 / (c + 1.0);
                for z in out.data_mut() {
                    *z *= s;
                }
                Ok(out)
            }
            RegularizerKind::TemporalTv => solve_tv_normal(c, b),
        }
    }
}

/// Element-wise soft threshold: `0` if `|a| <= tau`, else
/// `(|a| - tau) * a/|a|` (magnitude shrink, phase preserved).
pub fn soft_threshold(a: Complex64, tau: f64) -> Complex64 {
    let mag = a.norm();
    if mag <= tau {
        Complex64::ZERO
    } else {
        a * ((mag - tau) / mag)
    }
}

/// Soft threshold applied to every coefficient.
pub fn soft_threshold_field(a: &CoefficientField, tau: f64) -> CoefficientField {
    let mut out = CoefficientField::zeros(a.n_v(), a.n_h(), a.n_frames());
    for (dst, &src) in out.data_mut().iter_mut().zip(a.data()) {
        *dst = soft_threshold(src, tau);
    }
    out
}

/// Pixel index inside a frame plane; image frames are stored
/// plane-by-plane so element (p, t) of the image is `data[p + n_pix * t]`.
#[inline]
fn image_at(data: &[Complex64], p: usize, t: usize, n_pix: usize) -> Complex64 {
    data[p + n_pix * t]
}

/// Temporal difference D_t: output frame k = x_{k+1} - x_k.
pub fn temporal_diff(x: &ImageSequence) -> Result<CoefficientField> {
    let d = x.dims();
    if d.n_t < 2 {
        return Err(Error::invalid(
            "n_t",
            format!("temporal differences need n_t >= 2, got {}", d.n_t),
        ));
    }
    let n_pix = d.n_pixels();
    let nf = d.n_t - 1;
    let mut out = CoefficientField::zeros(d.n_v, d.n_h, nf);
    let src = x.data();
    out.data_mut()
        .par_chunks_mut(nf)
        .enumerate()
        .for_each(|(p, series)| {
            for (k, s) in series.iter_mut().enumerate() {
                *s = image_at(src, p, k + 1, n_pix) - image_at(src, p, k, n_pix);
            }
        });
    Ok(out)
}

/// Exact adjoint D'_t: negated first difference with boundary rows
/// `out_0 = -v_0`, `out_t = v_{t-1} - v_t`, `out_{n_t-1} = v_{n_t-2}`.
pub fn temporal_diff_adjoint(v: &CoefficientField) -> ImageSequence {
    let nf = v.n_frames();
    let n_t = nf + 1;
    let n_pix = v.n_pixels();
    let dims = Dims {
        n_v: v.n_v(),
        n_h: v.n_h(),
        n_t,
        n_c: 1,
    };
    let mut out = ImageSequence::zeros(dims);
    let src = v.data();
    out.data_mut()
        .par_chunks_mut(n_pix)
        .enumerate()
        .for_each(|(t, frame)| {
            for (p, z) in frame.iter_mut().enumerate() {
                let prev = if t > 0 {
                    src[p * nf + (t - 1)]
                } else {
                    Complex64::ZERO
                };
                let next = if t < nf { src[p * nf + t] } else { Complex64::ZERO };
                *z = prev - next;
            }
        });
    out
}

/// Exact solve of `(c*I + D'_t D_t) z = b` per pixel time series.
///
/// `D'D` is the tridiagonal second-difference matrix with free ends
/// (diagonal `[1, 2, ..., 2, 1]`, off-diagonals -1); the solve is a direct
/// tridiagonal elimination, O(n_t) per pixel. Constant-in-time inputs are
/// null vectors of `D'D`, so `c > 0` is required.
pub fn solve_tv_normal(c: f64, b: &ImageSequence) -> Result<ImageSequence> {
    if !(c > 0.0) {
        return Err(Error::invalid(
            "c",
            format!("must be positive (D'D is singular), got {c}"),
        ));
    }
    let d = b.dims();
    let n_t = d.n_t;
    if n_t == 1 {
        // D_t is empty, D'D = 0
        let mut out = b.clone();
        for z in out.data_mut() {
            *z /= c;
        }
        return Ok(out);
    }

    // Elimination coefficients depend only on (c, n_t): precompute once.
    let diag = |i: usize| -> f64 {
        if i == 0 || i == n_t - 1 {
            c + 1.0
        } else {
            c + 2.0
        }
    };
    let mut denom = vec![0.0f64; n_t];
    let mut cp = vec![0.0f64; n_t];
    denom[0] = diag(0);
    cp[0] = -1.0 / denom[0];
    for i in 1..n_t {
        denom[i] = diag(i) + cp[i - 1];
        cp[i] = -1.0 / denom[i];
    }

    let mut series = image_to_series(b);
    series.par_chunks_mut(n_t).for_each(|s| {
        s[0] /= denom[0];
        for i in 1..n_t {
            s[i] = (s[i] + s[i - 1]) / denom[i];
        }
        for i in (0..n_t - 1).rev() {
            let next = s[i + 1];
            s[i] -= cp[i] * next;
        }
    });
    Ok(series_to_image(&series, d))
}

/// Unitary DFT along the time axis per pixel (the tight frame psi).
pub fn temporal_dft_forward(x: &ImageSequence) -> CoefficientField {
    let d = x.dims();
    let n_pix = d.n_pixels();
    let fft = UnitaryFft::new(d.n_t);
    let mut out = CoefficientField::zeros(d.n_v, d.n_h, d.n_t);
    let src = x.data();
    out.data_mut()
        .par_chunks_mut(d.n_t)
        .enumerate()
        .for_each(|(p, series)| {
            for (k, s) in series.iter_mut().enumerate() {
                *s = image_at(src, p, k, n_pix);
            }
            fft.forward(series);
        });
    out
}

/// Adjoint (= inverse) of the unitary temporal DFT.
pub fn temporal_dft_adjoint(w: &CoefficientField) -> ImageSequence {
    let n_t = w.n_frames();
    let dims = Dims {
        n_v: w.n_v(),
        n_h: w.n_h(),
        n_t,
        n_c: 1,
    };
    let fft = UnitaryFft::new(n_t);
    let mut series = w.data().to_vec();
    series
        .par_chunks_mut(n_t)
        .for_each(|s| fft.inverse(s));
    series_to_image(&series, dims)
}

/// Repacks an image (frame-major planes) into series-major scratch.
fn image_to_series(x: &ImageSequence) -> Vec<Complex64> {
    let d = x.dims();
    let n_pix = d.n_pixels();
    let src = x.data();
    let mut buf = vec![Complex64::ZERO; src.len()];
    buf.par_chunks_mut(d.n_t).enumerate().for_each(|(p, s)| {
        for (t, z) in s.iter_mut().enumerate() {
            *z = image_at(src, p, t, n_pix);
        }
    });
    buf
}

/// Repacks series-major scratch back into an image sequence. `dims.n_t`
/// must equal the series length.
fn series_to_image(series: &[Complex64], dims: Dims) -> ImageSequence {
    let n_pix = dims.n_pixels();
    let n_t = dims.n_t;
    let mut out = ImageSequence::zeros(dims);
    out.data_mut()
        .par_chunks_mut(n_pix)
        .enumerate()
        .for_each(|(t, frame)| {
            for (p, z) in frame.iter_mut().enumerate() {
                *z = series[p * n_t + t];
            }
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_from_series(n_v: usize, n_h: usize, series: &[Vec<Complex64>]) -> ImageSequence {
        let n_t = series[0].len();
        let dims = Dims::new(n_v, n_h, n_t, 1).unwrap();
        let mut x = ImageSequence::zeros(dims);
        for (p, s) in series.iter().enumerate() {
            let (v, h) = (p % n_v, p / n_v);
            for (t, &z) in s.iter().enumerate() {
                *x.at_mut(v, h, t) = z;
            }
        }
        x
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn soft_threshold_matches_formula() {
        assert_eq!(soft_threshold(re(3.0), 1.0), re(2.0));
        assert_eq!(soft_threshold(re(-3.0), 1.0), re(-2.0));
        assert_eq!(soft_threshold(re(0.5), 1.0), Complex64::ZERO);
        // magnitude 5 shrinks to 4, direction preserved
        let z = soft_threshold(Complex64::new(-3.0, 4.0), 1.0);
        assert!((z - Complex64::new(-2.4, 3.2)).norm() <= 1e-14);
        // tau = 0 is the identity
        let a = Complex64::new(0.3, -0.7);
        assert_eq!(soft_threshold(a, 0.0), a);
    }

    #[test]
    fn temporal_diff_basic() {
        let x = image_from_series(1, 1, &[vec![re(1.0), re(2.0), re(4.0)]]);
        let d = temporal_diff(&x).unwrap();
        assert_eq!(d.series(0), &[re(1.0), re(2.0)]);

        // constant in time -> zero differences
        let c = image_from_series(1, 1, &[vec![re(5.0); 4]]);
        let dc = temporal_diff(&c).unwrap();
        assert!(dc.data().iter().all(|&z| z == Complex64::ZERO));

        let single = image_from_series(1, 1, &[vec![re(1.0)]]);
        assert!(temporal_diff(&single).is_err());
    }

    #[test]
    fn temporal_diff_adjoint_boundary() {
        // v = [1] with n_t = 2 -> output [-1, 1]
        let mut v = CoefficientField::zeros(1, 1, 1);
        v.data_mut()[0] = re(1.0);
        let x = temporal_diff_adjoint(&v);
        assert_eq!(x.at(0, 0, 0), re(-1.0));
        assert_eq!(x.at(0, 0, 1), re(1.0));
    }

    #[test]
    fn solve_tv_normal_two_frames() {
        // (I + D'D) = [[2,-1],[-1,2]], rhs [1, 0] -> [2/3, 1/3]
        let b = image_from_series(1, 1, &[vec![re(1.0), re(0.0)]]);
        let z = solve_tv_normal(1.0, &b).unwrap();
        assert!((z.at(0, 0, 0) - re(2.0 / 3.0)).norm() <= 1e-14);
        assert!((z.at(0, 0, 1) - re(1.0 / 3.0)).norm() <= 1e-14);
    }

    #[test]
    fn solve_tv_normal_constant_series() {
        // constants are in the null space of D'D -> z = b / c
        let b = image_from_series(2, 1, &[vec![re(3.0); 5], vec![re(-1.0); 5]]);
        let z = solve_tv_normal(0.5, &b).unwrap();
        for p in 0..2 {
            for t in 0..5 {
                let expect = b.at(p, 0, t) / 0.5;
                assert!((z.at(p, 0, t) - expect).norm() <= 1e-12);
            }
        }
        assert!(solve_tv_normal(0.0, &b).is_err());
    }

    #[test]
    fn temporal_dft_two_frame_example() {
        let x = image_from_series(1, 1, &[vec![re(1.0), re(1.0)]]);
        let w = temporal_dft_forward(&x);
        assert!((w.series(0)[0] - re(std::f64::consts::SQRT_2)).norm() <= 1e-14);
        assert!(w.series(0)[1].norm() <= 1e-14);
    }

    #[test]
    fn temporal_dft_round_trip_and_parseval() {
        let series: Vec<Vec<Complex64>> = (0..6)
            .map(|p| {
                (0..5)
                    .map(|t| Complex64::new((p * t) as f64 * 0.3 - 1.0, t as f64 * 0.7))
                    .collect()
            })
            .collect();
        let x = image_from_series(3, 2, &series);
        let w = temporal_dft_forward(&x);
        let e_x: f64 = x.data().iter().map(|z| z.norm_sqr()).sum();
        let e_w: f64 = w.data().iter().map(|z| z.norm_sqr()).sum();
        assert!((e_x - e_w).abs() <= 1e-13 * e_x.max(1.0));
        let back = temporal_dft_adjoint(&w);
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).norm() <= 1e-13);
        }
    }
}
