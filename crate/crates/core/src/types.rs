//! Core tensors of the dynamic parallel-MRI problem.
//!
//! Memory layout is fixed once here and relied on everywhere else:
//! image-domain data is stored vertical-fastest, then horizontal, then
//! (coil,) then frame. This makes every per-(column, frame) vertical line
//! a contiguous `n_v` run, which is what the separable normal-operator
//! machinery in [`crate::spectral`] indexes into. Transform-domain
//! coefficients ([`CoefficientField`]) instead store each pixel's time
//! series contiguously; they never touch disk, so the layout is free to
//! serve the temporal operators.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Problem dimensions: vertical pixels / k-space lines, horizontal pixels,
/// frames, coils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_v: usize,
    pub n_h: usize,
    pub n_t: usize,
    pub n_c: usize,
}

impl Dims {
    pub fn new(n_v: usize, n_h: usize, n_t: usize, n_c: usize) -> Result<Self> {
        let d = Dims { n_v, n_h, n_t, n_c };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, n) in [
            ("n_v", self.n_v),
            ("n_h", self.n_h),
            ("n_t", self.n_t),
            ("n_c", self.n_c),
        ] {
            if n == 0 {
                return Err(Error::DimMismatch {
                    axis,
                    expected: 1,
                    got: 0,
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn image_index(&self, v: usize, h: usize, t: usize) -> usize {
        v + self.n_v * (h + self.n_h * t)
    }

    #[inline]
    pub fn kspace_index(&self, v: usize, h: usize, t: usize, c: usize) -> usize {
        v + self.n_v * (h + self.n_h * (c + self.n_c * t))
    }

    #[inline]
    pub fn sens_index(&self, v: usize, h: usize, c: usize) -> usize {
        v + self.n_v * (h + self.n_h * c)
    }

    pub fn image_len(&self) -> usize {
        self.n_v * self.n_h * self.n_t
    }

    pub fn kspace_len(&self) -> usize {
        self.n_v * self.n_h * self.n_t * self.n_c
    }

    pub fn sens_len(&self) -> usize {
        self.n_v * self.n_h * self.n_c
    }

    /// Number of (column, frame) pairs, i.e. of normal-operator blocks.
    pub fn n_columns(&self) -> usize {
        self.n_h * self.n_t
    }

    pub fn n_pixels(&self) -> usize {
        self.n_v * self.n_h
    }
}

/// Complex dynamic image x with shape `(n_v, n_h, n_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSequence {
    dims: Dims,
    data: Vec<Complex64>,
}

impl ImageSequence {
    pub fn zeros(dims: Dims) -> Self {
        ImageSequence {
            dims,
            data: vec![Complex64::ZERO; dims.image_len()],
        }
    }

    pub fn from_vec(dims: Dims, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dims.image_len() {
            return Err(Error::DimMismatch {
                axis: "image data length",
                expected: dims.image_len(),
                got: data.len(),
            });
        }
        Ok(ImageSequence { dims, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn at(&self, v: usize, h: usize, t: usize) -> Complex64 {
        self.data[self.dims.image_index(v, h, t)]
    }

    #[inline]
    pub fn at_mut(&mut self, v: usize, h: usize, t: usize) -> &mut Complex64 {
        let i = self.dims.image_index(v, h, t);
        &mut self.data[i]
    }

    /// Contiguous vertical line at horizontal position `h`, frame `t`.
    pub fn column(&self, h: usize, t: usize) -> &[Complex64] {
        let start = self.dims.image_index(0, h, t);
        &self.data[start..start + self.dims.n_v]
    }

    /// Contiguous `(n_v * n_h)` plane of frame `t`.
    pub fn frame(&self, t: usize) -> &[Complex64] {
        let len = self.dims.n_pixels();
        &self.data[t * len..(t + 1) * len]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Complex per-coil sensitivity weights with shape `(n_v, n_h, n_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilSensitivities {
    dims: Dims,
    data: Vec<Complex64>,
}

impl CoilSensitivities {
    pub fn zeros(dims: Dims) -> Self {
        CoilSensitivities {
            dims,
            data: vec![Complex64::ZERO; dims.sens_len()],
        }
    }

    pub fn from_vec(dims: Dims, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dims.sens_len() {
            return Err(Error::DimMismatch {
                axis: "sensitivity data length",
                expected: dims.sens_len(),
                got: data.len(),
            });
        }
        Ok(CoilSensitivities { dims, data })
    }

    /// Uniform all-ones single-coil profile (handy for unit cases).
    pub fn uniform(dims: Dims) -> Self {
        CoilSensitivities {
            dims,
            data: vec![Complex64::ONE; dims.sens_len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn at(&self, v: usize, h: usize, c: usize) -> Complex64 {
        self.data[self.dims.sens_index(v, h, c)]
    }

    #[inline]
    pub fn at_mut(&mut self, v: usize, h: usize, c: usize) -> &mut Complex64 {
        let i = self.dims.sens_index(v, h, c);
        &mut self.data[i]
    }

    /// Contiguous `(n_v * n_h)` plane of coil `c`.
    pub fn coil(&self, c: usize) -> &[Complex64] {
        let len = self.dims.n_pixels();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Pixelwise coil energy sum over c of `|s_c|^2`.
    pub fn coil_energy(&self, v: usize, h: usize) -> f64 {
        (0..self.dims.n_c)
            .map(|c| self.at(v, h, c).norm_sqr())
            .sum()
    }
}

/// Cartesian sampling pattern: which vertical k-space lines were measured
/// at each frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    n_v: usize,
    n_t: usize,
    kept: Vec<bool>,
}

impl SamplingMask {
    pub fn new(n_v: usize, n_t: usize, kept: Vec<bool>) -> Result<Self> {
        if kept.len() != n_v * n_t {
            return Err(Error::DimMismatch {
                axis: "mask length",
                expected: n_v * n_t,
                got: kept.len(),
            });
        }
        let m = SamplingMask { n_v, n_t, kept };
        for t in 0..n_t {
            if m.kept_count(t) == 0 {
                return Err(Error::InfeasibleMask(format!(
                    "frame {t} keeps no lines"
                )));
            }
        }
        Ok(m)
    }

    /// Fully sampled mask (every line kept at every frame).
    pub fn full(n_v: usize, n_t: usize) -> Self {
        SamplingMask {
            n_v,
            n_t,
            kept: vec![true; n_v * n_t],
        }
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    #[inline]
    pub fn kept(&self, v: usize, t: usize) -> bool {
        self.kept[v + self.n_v * t]
    }

    pub fn kept_count(&self, t: usize) -> usize {
        self.frame(t).iter().filter(|&&k| k).count()
    }

    /// Kept flags of frame `t`, indexed by line.
    pub fn frame(&self, t: usize) -> &[bool] {
        &self.kept[t * self.n_v..(t + 1) * self.n_v]
    }

    pub fn kept_lines(&self, t: usize) -> Vec<usize> {
        self.frame(t)
            .iter()
            .enumerate()
            .filter_map(|(v, &k)| k.then_some(v))
            .collect()
    }

    pub fn as_flags(&self) -> &[bool] {
        &self.kept
    }
}

/// Zero-filled measured k-space samples with shape `(n_v, n_h, n_t, n_c)`.
///
/// Data is stored on the full grid; rows with `mask.kept(v, t) == false`
/// are exactly zero. The mask is authoritative: a zero at a sampled
/// position is legal data.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceData {
    dims: Dims,
    data: Vec<Complex64>,
    mask: SamplingMask,
}

impl KSpaceData {
    pub fn zeros(dims: Dims, mask: SamplingMask) -> Result<Self> {
        Self::check_mask(&dims, &mask)?;
        Ok(KSpaceData {
            dims,
            data: vec![Complex64::ZERO; dims.kspace_len()],
            mask,
        })
    }

    pub fn from_vec(dims: Dims, data: Vec<Complex64>, mask: SamplingMask) -> Result<Self> {
        Self::check_mask(&dims, &mask)?;
        if data.len() != dims.kspace_len() {
            return Err(Error::DimMismatch {
                axis: "k-space data length",
                expected: dims.kspace_len(),
                got: data.len(),
            });
        }
        let y = KSpaceData { dims, data, mask };
        y.validate_zero_fill()?;
        Ok(y)
    }

    fn check_mask(dims: &Dims, mask: &SamplingMask) -> Result<()> {
        if mask.n_v() != dims.n_v {
            return Err(Error::DimMismatch {
                axis: "mask n_v",
                expected: dims.n_v,
                got: mask.n_v(),
            });
        }
        if mask.n_t() != dims.n_t {
            return Err(Error::DimMismatch {
                axis: "mask n_t",
                expected: dims.n_t,
                got: mask.n_t(),
            });
        }
        Ok(())
    }

    /// Checks the zero-filled storage convention, naming the first
    /// offending (v, t) position.
    pub fn validate_zero_fill(&self) -> Result<()> {
        let d = self.dims;
        for t in 0..d.n_t {
            for v in 0..d.n_v {
                if self.mask.kept(v, t) {
                    continue;
                }
                for c in 0..d.n_c {
                    for h in 0..d.n_h {
                        let z = self.data[d.kspace_index(v, h, t, c)];
                        if z != Complex64::ZERO {
                            return Err(Error::invalid(
                                "kspace",
                                format!("nonzero entry at unsampled line (v={v}, t={t})"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    #[inline]
    pub fn at(&self, v: usize, h: usize, t: usize, c: usize) -> Complex64 {
        self.data[self.dims.kspace_index(v, h, t, c)]
    }

    /// Contiguous `(n_v * n_h)` slab for frame `t`, coil `c`.
    pub fn slab(&self, t: usize, c: usize) -> &[Complex64] {
        let len = self.dims.n_pixels();
        let start = self.dims.kspace_index(0, 0, t, c);
        &self.data[start..start + len]
    }

    pub fn slab_mut(&mut self, t: usize, c: usize) -> &mut [Complex64] {
        let len = self.dims.n_pixels();
        let start = self.dims.kspace_index(0, 0, t, c);
        &mut self.data[start..start + len]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

/// Transform-domain coefficients (synthesis coefficients w, TV differences
/// v, and their ADMM duals).
///
/// Stored series-major: the `n_frames` samples of one pixel's time series
/// are contiguous, pixels ordered v-fastest then h. `n_frames` is `n_t`
/// for the temporal DFT and `n_t - 1` for temporal differences.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    n_v: usize,
    n_h: usize,
    n_frames: usize,
    data: Vec<Complex64>,
}

impl CoefficientField {
    pub fn zeros(n_v: usize, n_h: usize, n_frames: usize) -> Self {
        CoefficientField {
            n_v,
            n_h,
            n_frames,
            data: vec![Complex64::ZERO; n_v * n_h * n_frames],
        }
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_pixels(&self) -> usize {
        self.n_v * self.n_h
    }

    pub fn same_shape(&self, other: &CoefficientField) -> bool {
        self.n_v == other.n_v && self.n_h == other.n_h && self.n_frames == other.n_frames
    }

    /// Time series of pixel `p` (p = v + n_v * h), contiguous.
    pub fn series(&self, p: usize) -> &[Complex64] {
        &self.data[p * self.n_frames..(p + 1) * self.n_frames]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}
