//! Unitary 1-D FFT wrapper.
//!
//! rustfft computes unnormalized transforms; everything in this crate uses
//! the unitary convention (1/sqrt(n) both directions) so that F'F = I holds
//! literally and the normal-operator eigenvalue formulas need no rescaling.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct UnitaryFft {
    n: usize,
    scale: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl UnitaryFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        UnitaryFft {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// In-place unitary forward DFT on each length-`n` chunk of `buf`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        self.fwd.process(buf);
        for z in buf.iter_mut() {
            *z *= self.scale;
        }
    }

    /// In-place unitary inverse DFT on each length-`n` chunk of `buf`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        self.inv.process(buf);
        for z in buf.iter_mut() {
            *z *= self.scale;
        }
    }
}
