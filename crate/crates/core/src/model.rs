//! Forward model of Cartesian-sampled dynamic parallel MRI.
//!
//! The measurement of frame t by coil c is
//! `y_{t,c} = F_h M_{v,t} F_v (s_c .* x_t)`: coil weighting, unitary column
//! DFT, line subsampling, unitary row DFT. [`TransferOperator`] bundles the
//! sensitivities and mask and applies H, its exact adjoint H', and
//! assembles the per-(column, frame) blocks of the normal operator H'H.
//!
//! All heavy loops parallelize over disjoint output slabs, so results are
//! bit-identical for any worker count.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::UnitaryFft;
use crate::spectral::NormalBlocks;
use crate::types::{CoilSensitivities, Dims, ImageSequence, KSpaceData, SamplingMask};

/// The transfer operator H of the acquisition model, immutable after
/// construction and safe to share across threads.
pub struct TransferOperator {
    dims: Dims,
    sens: CoilSensitivities,
    mask: SamplingMask,
    fft_v: UnitaryFft,
    fft_h: UnitaryFft,
}

impl TransferOperator {
    /// Builds the operator from per-coil sensitivities and a sampling mask.
    ///
    /// The frame count comes from the mask (the sensitivities' `n_t` field
    /// is ignored by convention).
    pub fn new(sens: CoilSensitivities, mask: SamplingMask) -> Result<Self> {
        let sd = sens.dims();
        if sd.n_v != mask.n_v() {
            return Err(Error::DimMismatch {
                axis: "n_v",
                expected: sd.n_v,
                got: mask.n_v(),
            });
        }
        let dims = Dims::new(sd.n_v, sd.n_h, mask.n_t(), sd.n_c)?;
        for z in sens.data() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::invalid("sensitivities", "non-finite entry"));
            }
        }
        for h in 0..dims.n_h {
            for v in 0..dims.n_v {
                if sens.coil_energy(v, h) <= 0.0 {
                    return Err(Error::invalid(
                        "sensitivities",
                        format!("zero coil energy at pixel (v={v}, h={h})"),
                    ));
                }
            }
        }
        Ok(TransferOperator {
            dims,
            sens,
            mask,
            fft_v: UnitaryFft::new(dims.n_v),
            fft_h: UnitaryFft::new(dims.n_h),
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn sensitivities(&self) -> &CoilSensitivities {
        &self.sens
    }

    fn check_image_dims(&self, got: Dims) -> Result<()> {
        let d = self.dims;
        for (axis, e, g) in [
            ("n_v", d.n_v, got.n_v),
            ("n_h", d.n_h, got.n_h),
            ("n_t", d.n_t, got.n_t),
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

    /// Applies H: image sequence to zero-filled multi-coil k-space.
    pub fn apply_h(&self, x: &ImageSequence) -> Result<KSpaceData> {
        self.check_image_dims(x.dims())?;
        let d = self.dims;
        let n_pix = d.n_pixels();
        let mut y = KSpaceData::zeros(d, self.mask.clone())?;

        y.data_mut()
            .par_chunks_mut(n_pix)
            .enumerate()
            .for_each(|(slab_idx, slab)| {
                let t = slab_idx / d.n_c;
                let c = slab_idx % d.n_c;
                let xt = x.frame(t);
                let sc = self.sens.coil(c);
                for i in 0..n_pix {
                    slab[i] = sc[i] * xt[i];
                }
                // F_v: all columns are contiguous in the slab
                self.fft_v.forward(slab);
                // M_{v,t}: zero unsampled lines
                for v in 0..d.n_v {
                    if !self.mask.kept(v, t) {
                        for h in 0..d.n_h {
                            slab[v + d.n_v * h] = Complex64::ZERO;
                        }
                    }
                }
                // F_h on each kept line (unsampled lines stay zero)
                let mut row = vec![Complex64::ZERO; d.n_h];
                for v in 0..d.n_v {
                    if !self.mask.kept(v, t) {
                        continue;
                    }
                    for h in 0..d.n_h {
                        row[h] = slab[v + d.n_v * h];
                    }
                    self.fft_h.forward(&mut row);
                    for h in 0..d.n_h {
                        slab[v + d.n_v * h] = row[h];
                    }
                }
            });
        Ok(y)
    }

    /// Applies the exact adjoint H': k-space back to the image domain,
    /// summing coil contributions.
    pub fn apply_h_adjoint(&self, y: &KSpaceData) -> Result<ImageSequence> {
        if y.dims() != self.dims {
            return self.check_image_dims(y.dims()).and_then(|()| {
                Err(Error::DimMismatch {
                    axis: "n_c",
                    expected: self.dims.n_c,
                    got: y.dims().n_c,
                })
            });
        }
        let d = self.dims;
        let n_pix = d.n_pixels();
        let mut x = ImageSequence::zeros(d);

        x.data_mut()
            .par_chunks_mut(n_pix)
            .enumerate()
            .for_each(|(t, xt)| {
                let mut scratch = vec![Complex64::ZERO; n_pix];
                let mut row = vec![Complex64::ZERO; d.n_h];
                for c in 0..d.n_c {
                    scratch.copy_from_slice(y.slab(t, c));
                    // M' F_h': inverse row DFT on kept lines, unsampled
                    // lines forced to zero (exact adjoint even if the
                    // input violates the zero-fill convention)
                    for v in 0..d.n_v {
                        if self.mask.kept(v, t) {
                            for h in 0..d.n_h {
                                row[h] = scratch[v + d.n_v * h];
                            }
                            self.fft_h.inverse(&mut row);
                            for h in 0..d.n_h {
                                scratch[v + d.n_v * h] = row[h];
                            }
                        } else {
                            for h in 0..d.n_h {
                                scratch[v + d.n_v * h] = Complex64::ZERO;
                            }
                        }
                    }
                    // F_v'
                    self.fft_v.inverse(&mut scratch);
                    // conj(s_c) .* , accumulated over coils in fixed order
                    let sc = self.sens.coil(c);
                    for i in 0..n_pix {
                        xt[i] += sc[i].conj() * scratch[i];
                    }
                }
            });
        Ok(x)
    }
}

/// Assembles the per-(column, frame) `n_v x n_v` Hermitian PSD blocks of
/// H'H.
///
/// Block (i, t) is the Hadamard product of the subsampled-DFT Gram matrix
/// `F'_v M'M F_v` (a function of the frame's kept lines only) with the
/// coil factor of column i: `S_c' G S_c` for diagonal `S_c` has entries
/// `conj(s_j) G_jk s_k`, so the factor is `sum_c conj(s_c) s_c^T`. Each
/// block is symmetrized to `(B + B')/2` after assembly, which is exact in
/// IEEE arithmetic, so blocks are Hermitian to the bit.
pub fn build_normal_blocks(op: &TransferOperator) -> NormalBlocks {
    let d = op.dims();
    let n_v = d.n_v;

    // Gram entries depend only on (j - k) mod n_v:
    // g_t[d] = (1/n_v) * sum_{m kept} exp(+2*pi*i*m*d / n_v)
    let gram_rows: Vec<Vec<Complex64>> = (0..d.n_t)
        .map(|t| {
            let kept = op.mask().kept_lines(t);
            (0..n_v)
                .map(|diff| {
                    let mut acc = Complex64::ZERO;
                    for &m in &kept {
                        let angle = TAU * ((m * diff) % n_v) as f64 / n_v as f64;
                        acc += Complex64::new(angle.cos(), angle.sin());
                    }
                    acc / n_v as f64
                })
                .collect()
        })
        .collect();

    let blocks: Vec<DMatrix<Complex64>> = (0..d.n_columns())
        .into_par_iter()
        .map(|idx| {
            let i = idx % d.n_h;
            let t = idx / d.n_h;
            let g = &gram_rows[t];
            let sens = op.sensitivities();
            let b = DMatrix::from_fn(n_v, n_v, |j, k| {
                let coil: Complex64 = (0..d.n_c)
                    .map(|c| sens.at(j, i, c).conj() * sens.at(k, i, c))
                    .sum();
                g[(j + n_v - k) % n_v] * coil
            });
            // kill rounding asymmetry before eigendecomposition
            (&b + b.adjoint()).map(|z| z * 0.5)
        })
        .collect();

    NormalBlocks::new_unchecked(d, blocks)
}
