//! Deterministic synthetic data: a dynamic cardiac-like phantom, smooth
//! coil-sensitivity profiles, variable-density Cartesian masks, and noisy
//! retrospective undersampling.
//!
//! Every generator is a pure function of its spec. Randomness is
//! counter-based (one ChaCha stream per frame or coil slab), so parallel
//! generation is order-independent and outputs are bit-identical across
//! runs and worker counts.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::TransferOperator;
use crate::types::{CoilSensitivities, Dims, ImageSequence, KSpaceData, SamplingMask};

/// Parameters of the synthetic dynamic phantom.
#[derive(Debug, Clone, Copy)]
pub struct PhantomSpec {
    pub dims: Dims,
    /// Pulsation period in frames; the phantom satisfies
    /// `x(t) = x(t + motion_period)` exactly.
    pub motion_period: usize,
    /// Acquisition noise level used downstream by
    /// [`simulate_acquisition`]; the phantom itself is noise-free.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhantomSpec {
    fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if self.motion_period == 0 {
            return Err(Error::invalid("motion_period", "must be >= 1"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma", "must be >= 0"));
        }
        Ok(())
    }
}

/// Parameters of the variable-density Cartesian mask generator.
#[derive(Debug, Clone, Copy)]
pub struct MaskSpec {
    pub n_v: usize,
    pub n_t: usize,
    /// Acceleration / undersampling factor (> 1); `ceil(n_v / accel)`
    /// lines are kept per frame.
    pub accel: f64,
    /// Central lines (nearest DC under circular wrap) kept at every frame.
    pub n_center: usize,
    pub seed: u64,
}

impl MaskSpec {
    pub fn kept_per_frame(&self) -> usize {
        (self.n_v as f64 / self.accel).ceil() as usize
    }
}

struct Ellipse {
    cu: f64,
    cw: f64,
    ru: f64,
    rw: f64,
}

impl Ellipse {
    fn contains(&self, u: f64, w: f64) -> bool {
        let du = (u - self.cu) / self.ru;
        let dw = (w - self.cw) / self.rw;
        du * du + dw * dw <= 1.0
    }
}

/// Generates the dynamic phantom: a static elliptical torso with a darker
/// inset, a pulsating ellipse, a small blob orbiting with the same period,
/// and a smooth static phase ramp. The magnitude is normalized so its
/// maximum is 1.
pub fn generate_phantom(spec: &PhantomSpec) -> ImageSequence {
    spec.validate().expect("caller-validated spec");
    let d = spec.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut jitter = |scale: f64| (rng.gen::<f64>() * 2.0 - 1.0) * scale;

    let torso = Ellipse {
        cu: 0.5 + jitter(0.02),
        cw: 0.5 + jitter(0.02),
        ru: 0.40 + jitter(0.02),
        rw: 0.34 + jitter(0.02),
    };
    let inset = Ellipse {
        cu: 0.38 + jitter(0.015),
        cw: 0.36 + jitter(0.015),
        ru: 0.13 + jitter(0.01),
        rw: 0.16 + jitter(0.01),
    };
    let heart_center = (0.58 + jitter(0.015), 0.56 + jitter(0.015));
    let heart_base = 0.11 + jitter(0.01);
    let pulse_depth = 0.30 + jitter(0.05);
    let blob_orbit_center = (0.42 + jitter(0.01), 0.70 + jitter(0.01));
    let blob_orbit_radius = 0.06 + jitter(0.01);
    let blob_sigma = 0.045 + jitter(0.005);
    let phase_ramp = (0.9 + jitter(0.3), 1.4 + jitter(0.3));

    let n_pix = d.n_pixels();
    let period = spec.motion_period;
    let mut x = ImageSequence::zeros(d);
    x.data_mut()
        .par_chunks_mut(n_pix)
        .enumerate()
        .for_each(|(t, frame)| {
            // exact periodicity: everything depends on t only through
            // (t mod period)
            let tau_t = (t % period) as f64 / period as f64;
            let pulse = 1.0 + pulse_depth * (TAU * tau_t).sin();
            let heart = Ellipse {
                cu: heart_center.0,
                cw: heart_center.1,
                ru: heart_base * pulse,
                rw: heart_base * pulse,
            };
            let blob_cu = blob_orbit_center.0 + blob_orbit_radius * (TAU * tau_t).cos();
            let blob_cw = blob_orbit_center.1 + blob_orbit_radius * (TAU * tau_t).sin();
            let two_sig_sq = 2.0 * blob_sigma * blob_sigma;

            for h in 0..d.n_h {
                let w = (h as f64 + 0.5) / d.n_h as f64;
                for v in 0..d.n_v {
                    let u = (v as f64 + 0.5) / d.n_v as f64;
                    let mut mag = 0.0;
                    if torso.contains(u, w) {
                        mag += 0.55;
                        if inset.contains(u, w) {
                            mag -= 0.18;
                        }
                    }
                    if heart.contains(u, w) {
                        mag += 0.45;
                    }
                    let du = u - blob_cu;
                    let dw = w - blob_cw;
                    mag += 0.30 * (-(du * du + dw * dw) / two_sig_sq).exp();

                    let phase = phase_ramp.0 * u + phase_ramp.1 * w;
                    frame[v + d.n_v * h] =
                        Complex64::new(mag * phase.cos(), mag * phase.sin());
                }
            }
        });

    let max = x.max_abs();
    debug_assert!(max > 0.0);
    let inv = 1.0 / max;
    for z in x.data_mut() {
        *z *= inv;
    }
    x
}

/// Generates `n_c` smooth complex coil profiles (Gaussian bumps centered
/// at equally spaced angles around the field of view, with smooth phase),
/// normalized pixelwise so the coil energy `sum_c |s_c|^2` is 1.
pub fn generate_sensitivities(dims: Dims, seed: u64) -> CoilSensitivities {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_c = dims.n_c;
    let angles: Vec<f64> = (0..n_c)
        .map(|c| TAU * c as f64 / n_c as f64 + (rng.gen::<f64>() - 0.5) * 0.2)
        .collect();
    let phase_offsets: Vec<f64> = (0..n_c).map(|_| rng.gen::<f64>() * TAU).collect();

    let mut s = CoilSensitivities::zeros(dims);
    for c in 0..n_c {
        let (cu, cw) = (
            0.5 + 0.55 * angles[c].cos(),
            0.5 + 0.55 * angles[c].sin(),
        );
        for h in 0..dims.n_h {
            let w = (h as f64 + 0.5) / dims.n_h as f64;
            for v in 0..dims.n_v {
                let u = (v as f64 + 0.5) / dims.n_v as f64;
                let dist_sq = (u - cu) * (u - cu) + (w - cw) * (w - cw);
                let mag = 0.1 + (-dist_sq / (2.0 * 0.45 * 0.45)).exp();
                let phase = phase_offsets[c] + 0.7 * (u - cu) + 0.9 * (w - cw);
                *s.at_mut(v, h, c) = Complex64::new(mag * phase.cos(), mag * phase.sin());
            }
        }
    }
    // pixelwise partition: sum_c |s_c|^2 = 1
    for h in 0..dims.n_h {
        for v in 0..dims.n_v {
            let energy = s.coil_energy(v, h);
            let inv = 1.0 / energy.sqrt();
            for c in 0..n_c {
                *s.at_mut(v, h, c) *= inv;
            }
        }
    }
    s
}

/// Lines ordered by circular distance from DC (ties broken by index).
fn lines_by_center_distance(n_v: usize) -> Vec<usize> {
    let mut lines: Vec<usize> = (0..n_v).collect();
    lines.sort_by_key(|&f| (f.min(n_v - f), f));
    lines
}

/// Generates a variable-density Cartesian mask: per frame, the `n_center`
/// lines nearest DC are always kept and the remaining lines are drawn
/// without replacement with probability proportional to
/// `1 / (1 + circular distance from DC)`, independently per frame.
pub fn generate_mask(spec: &MaskSpec) -> Result<SamplingMask> {
    if spec.n_v == 0 || spec.n_t == 0 {
        return Err(Error::invalid("mask dims", "n_v and n_t must be >= 1"));
    }
    if !(spec.accel > 1.0) || !spec.accel.is_finite() {
        return Err(Error::InfeasibleMask(format!(
            "acceleration must be a finite factor > 1, got {}",
            spec.accel
        )));
    }
    let kept_target = spec.kept_per_frame();
    if kept_target > spec.n_v {
        return Err(Error::InfeasibleMask(format!(
            "kept count {kept_target} exceeds n_v {}",
            spec.n_v
        )));
    }
    if kept_target < spec.n_center {
        return Err(Error::InfeasibleMask(format!(
            "kept count {kept_target} cannot cover {} center lines",
            spec.n_center
        )));
    }
    if kept_target == 0 {
        return Err(Error::InfeasibleMask("zero lines per frame".into()));
    }

    let by_distance = lines_by_center_distance(spec.n_v);
    let center: Vec<usize> = by_distance[..spec.n_center].to_vec();
    let circ_dist = |f: usize| f.min(spec.n_v - f);

    let frames: Vec<Vec<bool>> = (0..spec.n_t)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(t as u64 + 1);
            let mut kept = vec![false; spec.n_v];
            for &f in &center {
                kept[f] = true;
            }
            let mut candidates: Vec<usize> =
                (0..spec.n_v).filter(|&f| !kept[f]).collect();
            for _ in spec.n_center..kept_target {
                let weights: Vec<f64> = candidates
                    .iter()
                    .map(|&f| 1.0 / (1.0 + circ_dist(f) as f64))
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.gen::<f64>() * total;
                let mut chosen = candidates.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w {
                        chosen = i;
                        break;
                    }
                    u -= w;
                }
                kept[candidates.swap_remove(chosen)] = true;
            }
            kept
        })
        .collect();

    let mut flags = Vec::with_capacity(spec.n_v * spec.n_t);
    for frame in frames {
        flags.extend(frame);
    }
    SamplingMask::new(spec.n_v, spec.n_t, flags)
}

/// Simulates acquisition: `y = H x + n` with i.i.d. complex Gaussian
/// noise (total variance `noise_sigma^2`, split evenly between real and
/// imaginary parts) added at sampled positions only.
pub fn simulate_acquisition(
    x: &ImageSequence,
    sens: &CoilSensitivities,
    mask: &SamplingMask,
    noise_sigma: f64,
    seed: u64,
) -> Result<KSpaceData> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::invalid("noise_sigma", "must be >= 0"));
    }
    let op = TransferOperator::new(sens.clone(), mask.clone())?;
    let mut y = op.apply_h(x)?;
    if noise_sigma == 0.0 {
        return Ok(y);
    }

    let d = y.dims();
    let n_pix = d.n_pixels();
    let part_sigma = noise_sigma / std::f64::consts::SQRT_2;
    let mask = y.mask().clone();
    y.data_mut()
        .par_chunks_mut(n_pix)
        .enumerate()
        .for_each(|(slab_idx, slab)| {
            let t = slab_idx / d.n_c;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(slab_idx as u64 + 1);
            for v in 0..d.n_v {
                if !mask.kept(v, t) {
                    continue;
                }
                for h in 0..d.n_h {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    slab[v + d.n_v * h] += Complex64::new(part_sigma * re, part_sigma * im);
                }
            }
        });
    Ok(y)
}
