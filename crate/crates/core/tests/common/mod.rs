//! Shared test oracles: dense matrices assembled from first principles,
//! independent of the FFT/block implementation paths they check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ktrecon::model::TransferOperator;
use ktrecon::types::{
    CoefficientField, CoilSensitivities, Dims, ImageSequence, KSpaceData, SamplingMask,
};

pub const ZERO: Complex64 = Complex64::ZERO;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
}

pub fn random_image(dims: Dims, rng: &mut ChaCha8Rng) -> ImageSequence {
    let mut x = ImageSequence::zeros(dims);
    for z in x.data_mut() {
        *z = random_complex(rng);
    }
    x
}

/// Random coil profiles with guaranteed nonzero pixel energy.
pub fn random_sens(dims: Dims, rng: &mut ChaCha8Rng) -> CoilSensitivities {
    let mut s = CoilSensitivities::zeros(dims);
    for z in s.data_mut() {
        let raw = random_complex(rng);
        *z = raw + Complex64::new(0.3 * raw.re.signum() + 0.4, 0.0);
    }
    s
}

/// Random mask keeping each line with probability ~1/2, at least one per
/// frame.
pub fn random_mask(n_v: usize, n_t: usize, rng: &mut ChaCha8Rng) -> SamplingMask {
    loop {
        let kept: Vec<bool> = (0..n_v * n_t).map(|_| rng.gen::<bool>()).collect();
        if (0..n_t).all(|t| kept[t * n_v..(t + 1) * n_v].iter().any(|&k| k)) {
            return SamplingMask::new(n_v, n_t, kept).unwrap();
        }
    }
}

pub fn random_operator(dims: Dims, rng: &mut ChaCha8Rng) -> TransferOperator {
    let sens = random_sens(dims, rng);
    let mask = random_mask(dims.n_v, dims.n_t, rng);
    TransferOperator::new(sens, mask).unwrap()
}

/// Zero-filled k-space with random values at sampled positions.
pub fn random_kspace(op: &TransferOperator, rng: &mut ChaCha8Rng) -> KSpaceData {
    let d = op.dims();
    let mut y = KSpaceData::zeros(d, op.mask().clone()).unwrap();
    for t in 0..d.n_t {
        for c in 0..d.n_c {
            for h in 0..d.n_h {
                for v in 0..d.n_v {
                    if op.mask().kept(v, t) {
                        let val = random_complex(rng);
                        y.data_mut()[d.kspace_index(v, h, t, c)] = val;
                    }
                }
            }
        }
    }
    y
}

/// Unitary DFT matrix built from the definition:
/// `F[m, j] = exp(-2 pi i m j / n) / sqrt(n)`.
pub fn unitary_dft(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |m, j| {
        let angle = -std::f64::consts::TAU * ((m * j) % n) as f64 / n as f64;
        Complex64::new(angle.cos(), angle.sin()) * scale
    })
}

/// Dense transfer matrix assembled from the definition
/// `H_{t,c} = F_h M_{v,t} F_v S_c` using Kronecker products over the
/// v-fastest pixel layout. Rows cover the zero-filled full grid.
pub fn dense_h(op: &TransferOperator) -> DMatrix<Complex64> {
    let d = op.dims();
    let n_pix = d.n_pixels();
    let fv = unitary_dft(d.n_v);
    let fh = unitary_dft(d.n_h);
    let i_nv = DMatrix::<Complex64>::identity(d.n_v, d.n_v);
    let i_nh = DMatrix::<Complex64>::identity(d.n_h, d.n_h);
    let fh_big = fh.kronecker(&i_nv); // transform along h
    let fv_big = i_nh.kronecker(&fv); // transform along v

    let mut h = DMatrix::zeros(d.kspace_len(), d.image_len());
    for t in 0..d.n_t {
        let m_diag = DMatrix::from_fn(n_pix, n_pix, |i, j| {
            if i == j && op.mask().kept(i % d.n_v, t) {
                Complex64::ONE
            } else {
                ZERO
            }
        });
        let masked_fft = &fh_big * &m_diag * &fv_big;
        for c in 0..d.n_c {
            let s_diag = DMatrix::from_fn(n_pix, n_pix, |i, j| {
                if i == j {
                    op.sensitivities().at(i % d.n_v, i / d.n_v, c)
                } else {
                    ZERO
                }
            });
            let block = &masked_fft * &s_diag;
            let row0 = (t * d.n_c + c) * n_pix;
            let col0 = t * n_pix;
            h.view_mut((row0, col0), (n_pix, n_pix)).copy_from(&block);
        }
    }
    h
}

/// Dense unitary temporal-DFT synthesis frame over the stacked image
/// layout (frames are the slow axis).
pub fn dense_temporal_dft(dims: Dims) -> DMatrix<Complex64> {
    let ft = unitary_dft(dims.n_t);
    let i_pix = DMatrix::<Complex64>::identity(dims.n_pixels(), dims.n_pixels());
    ft.kronecker(&i_pix)
}

/// Dense temporal first-difference matrix over the stacked image layout.
pub fn dense_temporal_diff(dims: Dims) -> DMatrix<Complex64> {
    let n_t = dims.n_t;
    let dt = DMatrix::from_fn(n_t - 1, n_t, |k, j| {
        if j == k {
            -Complex64::ONE
        } else if j == k + 1 {
            Complex64::ONE
        } else {
            ZERO
        }
    });
    let i_pix = DMatrix::<Complex64>::identity(dims.n_pixels(), dims.n_pixels());
    dt.kronecker(&i_pix)
}

pub fn img_to_vec(x: &ImageSequence) -> DVector<Complex64> {
    DVector::from_column_slice(x.data())
}

pub fn vec_to_img(dims: Dims, v: &DVector<Complex64>) -> ImageSequence {
    ImageSequence::from_vec(dims, v.as_slice().to_vec()).unwrap()
}

pub fn kspace_to_vec(y: &KSpaceData) -> DVector<Complex64> {
    DVector::from_column_slice(y.data())
}

/// Stacks a coefficient field frame-major (matching the dense temporal
/// operator layouts above).
pub fn cf_to_vec(cf: &CoefficientField) -> DVector<Complex64> {
    let n_pix = cf.n_pixels();
    let nf = cf.n_frames();
    let mut v = DVector::zeros(n_pix * nf);
    for p in 0..n_pix {
        for (k, &z) in cf.series(p).iter().enumerate() {
            v[p + n_pix * k] = z;
        }
    }
    v
}

pub fn dot(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    a.dotc(b)
}

pub fn rel_err_vec(got: &DVector<Complex64>, want: &DVector<Complex64>) -> f64 {
    let denom = want.norm().max(1e-300);
    (got - want).norm() / denom
}

pub fn rel_err_slices(got: &[Complex64], want: &[Complex64]) -> f64 {
    let num: f64 = got
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = want.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Runs a closure inside a dedicated rayon pool of `n` threads.
pub fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}
