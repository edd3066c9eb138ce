//! FISTA baseline on the synthesis formulation.
//!
//! Accelerated proximal gradient over the coefficients w: gradient of
//! `||y - H psi' w||_2^2` through the block-wise normal operator, exact
//! step size `1/L` with `L = 2 * max_k e_k` read off the spectral cache,
//! and the standard `t_{k+1} = (1 + sqrt(1 + 4 t_k^2))/2` momentum.

use crate::error::{Error, Result};
use crate::metrics;
use crate::model::TransferOperator;
use crate::regularizers::{soft_threshold_field, RegularizerKind};
use crate::spectral::{apply_normal, NormalBlocks, SpectralCache};
use crate::types::{CoefficientField, ImageSequence, KSpaceData};

use super::{cf_zip, drive, IterativeSolver, SolveResult, SolverConfig};

pub struct FistaState<'a> {
    y: &'a KSpaceData,
    op: &'a TransferOperator,
    blocks: &'a NormalBlocks,
    psi: RegularizerKind,
    lambda: f64,
    /// Gradient step 1/L.
    step: f64,
    /// Prox threshold lambda/L.
    tau: f64,
    /// psi H'y, the constant gradient term.
    w0: CoefficientField,
    pub w: CoefficientField,
    w_prev: CoefficientField,
    /// Extrapolation point.
    z: CoefficientField,
    t_k: f64,
}

impl<'a> FistaState<'a> {
    pub fn new(
        y: &'a KSpaceData,
        op: &'a TransferOperator,
        blocks: &'a NormalBlocks,
        cache: &'a SpectralCache,
        psi: RegularizerKind,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if !psi.is_tight_frame() {
            return Err(Error::Incompatible(format!(
                "fista solves the synthesis formulation and requires a tight frame, got {psi:?}"
            )));
        }
        let lip = 2.0 * cache.max_eigenvalue();
        if !(lip > 0.0) {
            return Err(Error::invalid("cache", "zero spectral radius"));
        }
        let hy = op.apply_h_adjoint(y)?;
        let w0 = psi.forward(&hy)?;
        Ok(FistaState {
            y,
            op,
            blocks,
            psi,
            lambda: cfg.lambda,
            step: 1.0 / lip,
            tau: cfg.lambda / lip,
            w: w0.clone(),
            w_prev: w0.clone(),
            z: w0.clone(),
            w0,
            t_k: 1.0,
        })
    }
}

impl IterativeSolver for FistaState<'_> {
    fn step(&mut self) -> Result<()> {
        // grad(z) = 2 (psi H'H psi' z - psi H'y)
        let img = self.psi.adjoint(&self.z);
        let normal = apply_normal(self.blocks, &img)?;
        let gz = self.psi.forward(&normal)?;
        let two_step = 2.0 * self.step;
        let mut u = cf_zip(&self.z, &gz, |z, g| z - two_step * g);
        for (ui, &w0i) in u.data_mut().iter_mut().zip(self.w0.data()) {
            *ui += two_step * w0i;
        }
        let w_next = soft_threshold_field(&u, self.tau);

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * self.t_k * self.t_k).sqrt());
        let beta = (self.t_k - 1.0) / t_next;
        self.w_prev = std::mem::replace(&mut self.w, w_next);
        self.z = cf_zip(&self.w, &self.w_prev, |a, b| a + beta * (a - b));
        self.t_k = t_next;
        Ok(())
    }

    fn objective(&self) -> f64 {
        metrics::objective_synthesis(self.y, self.op, self.psi, &self.w, self.lambda)
            .expect("dims validated at construction")
    }

    fn current_image(&self) -> ImageSequence {
        self.psi.adjoint(&self.w)
    }
}

/// FISTA with the exact Lipschitz constant from the spectral cache.
pub fn fista(
    y: &KSpaceData,
    op: &TransferOperator,
    blocks: &NormalBlocks,
    cache: &SpectralCache,
    psi: RegularizerKind,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let mut state = FistaState::new(y, op, blocks, cache, psi, cfg)?;
    drive(&mut state, cfg)
}
