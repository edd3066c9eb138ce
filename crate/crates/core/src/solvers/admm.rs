//! The two ADMM solvers built on the exact spectral inverse.
//!
//! Synthesis prior, over transform coefficients w (x = psi'w):
//! minimize `lambda ||v||_1 + ||y - H psi' w||_2^2` subject to `w = v`.
//! The w-subproblem needs `(mu I + psi H'H psi')^{-1}`, which for a tight
//! frame (`psi'psi = I`) reduces by the matrix inversion lemma to
//! `(1/mu)(I - psi psi') + psi (mu I + H'H)^{-1} psi'` -- one exact
//! spectral solve per iteration, no inner loop.
//!
//! Analysis prior, over the image x with penalty operator R:
//! minimize `lambda ||v||_1 + ||y - H x||_2^2` subject to
//! `v = R m, m = x`. The extra variable m decouples regularization from
//! data fidelity; both subproblem inverses `(mu2/mu1 I + R'R)^{-1}` and
//! `(mu2 I + H'H)^{-1}` are applied exactly.

use crate::error::{Error, Result};
use crate::metrics;
use crate::model::TransferOperator;
use crate::regularizers::{soft_threshold_field, RegularizerKind};
use crate::spectral::{apply_regularized_inverse, SpectralCache};
use crate::types::{CoefficientField, ImageSequence, KSpaceData};
use crate::vecops;

use super::{cf_zip, drive, img_zip, IterativeSolver, SolveResult, SolverConfig};

fn check_cache_dims(op: &TransferOperator, cache: &SpectralCache) -> Result<()> {
    let (a, b) = (op.dims(), cache.dims());
    for (axis, e, g) in [
        ("n_v", a.n_v, b.n_v),
        ("n_h", a.n_h, b.n_h),
        ("n_t", a.n_t, b.n_t),
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

/// One w-update of the synthesis solver:
/// `(1/mu)(I - psi psi')[psi H'y + mu (v+d)]
///  + psi (mu I + H'H)^{-1} [H'y + mu psi'(v+d)]`.
///
/// `hy` is H'y and `w0 = psi H'y`; `vd = v + d`. The `(I - psi psi')`
/// branch vanishes for an orthonormal psi but is always computed, so the
/// update is valid for any tight frame.
pub fn synthesis_w_update(
    cache: &SpectralCache,
    psi: RegularizerKind,
    hy: &ImageSequence,
    w0: &CoefficientField,
    vd: &CoefficientField,
    mu: f64,
) -> Result<CoefficientField> {
    let psi_vd = psi.adjoint(vd);
    let rhs = img_zip(hy, &psi_vd, |a, b| a + mu * b);
    let term2 = psi.forward(&apply_regularized_inverse(cache, mu, &rhs)?)?;

    let a = cf_zip(w0, vd, |x, y| x + mu * y);
    let pa = psi.forward(&psi.adjoint(&a))?;
    let inv_mu = 1.0 / mu;
    let term1 = cf_zip(&a, &pa, |x, y| (x - y) * inv_mu);
    Ok(cf_zip(&term1, &term2, |x, y| x + y))
}

/// Iteration state of the synthesis-prior ADMM solver.
pub struct SynthesisState<'a> {
    y: &'a KSpaceData,
    op: &'a TransferOperator,
    cache: &'a SpectralCache,
    psi: RegularizerKind,
    lambda: f64,
    mu: f64,
    hy: ImageSequence,
    w0: CoefficientField,
    pub w: CoefficientField,
    pub v: CoefficientField,
    pub d: CoefficientField,
}

impl<'a> SynthesisState<'a> {
    pub fn new(
        y: &'a KSpaceData,
        op: &'a TransferOperator,
        cache: &'a SpectralCache,
        psi: RegularizerKind,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        check_cache_dims(op, cache)?;
        if !psi.is_tight_frame() {
            return Err(Error::Incompatible(format!(
                "synthesis solver requires a tight frame, got {psi:?}"
            )));
        }
        let hy = op.apply_h_adjoint(y)?;
        let w0 = psi.forward(&hy)?;
        let zero = CoefficientField::zeros(w0.n_v(), w0.n_h(), w0.n_frames());
        Ok(SynthesisState {
            y,
            op,
            cache,
            psi,
            lambda: cfg.lambda,
            mu: cfg.mu,
            hy,
            w: w0.clone(),
            // v carries the l1 term of J(0); it is overwritten before
            // any use in the first step
            v: w0.clone(),
            d: zero,
            w0,
        })
    }
}

impl IterativeSolver for SynthesisState<'_> {
    fn step(&mut self) -> Result<()> {
        let tau = self.lambda / (2.0 * self.mu);
        let wd = cf_zip(&self.w, &self.d, |w, d| w - d);
        self.v = soft_threshold_field(&wd, tau);
        let vd = cf_zip(&self.v, &self.d, |v, d| v + d);
        self.w = synthesis_w_update(self.cache, self.psi, &self.hy, &self.w0, &vd, self.mu)?;
        let wv = cf_zip(&self.w, &self.v, |w, v| w - v);
        self.d = cf_zip(&self.d, &wv, |d, s| d - s);
        Ok(())
    }

    fn objective(&self) -> f64 {
        let x = self.psi.adjoint(&self.w);
        let res = metrics::residual_norm_sq(self.y, self.op, &x)
            .expect("dims validated at construction");
        self.lambda * vecops::norm_l1(self.v.data()) + res
    }

    fn current_image(&self) -> ImageSequence {
        self.psi.adjoint(&self.w)
    }
}

/// Synthesis-prior ADMM (tight-frame psi, exact spectral inverse).
pub fn admm_synthesis(
    y: &KSpaceData,
    op: &TransferOperator,
    cache: &SpectralCache,
    psi: RegularizerKind,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let mut state = SynthesisState::new(y, op, cache, psi, cfg)?;
    drive(&mut state, cfg)
}

/// Iteration state of the analysis-prior ADMM solver.
pub struct AnalysisState<'a> {
    y: &'a KSpaceData,
    op: &'a TransferOperator,
    cache: &'a SpectralCache,
    r: RegularizerKind,
    lambda: f64,
    mu1: f64,
    mu2: f64,
    ratio: f64,
    hy: ImageSequence,
    pub x: ImageSequence,
    pub m: ImageSequence,
    pub v: CoefficientField,
    pub d1: CoefficientField,
    pub d2: ImageSequence,
    /// R m, cached between iterations.
    rm: CoefficientField,
}

impl<'a> AnalysisState<'a> {
    pub fn new(
        y: &'a KSpaceData,
        op: &'a TransferOperator,
        cache: &'a SpectralCache,
        r: RegularizerKind,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        check_cache_dims(op, cache)?;
        r.validate(op.dims().n_t)?;
        let mu2 = cfg.mu;
        let ratio = cfg.mu_ratio;
        let hy = op.apply_h_adjoint(y)?;
        let x = hy.clone();
        let m = x.clone();
        let rm = r.forward(&m)?;
        let zero_c = CoefficientField::zeros(rm.n_v(), rm.n_h(), rm.n_frames());
        Ok(AnalysisState {
            y,
            op,
            cache,
            r,
            lambda: cfg.lambda,
            mu1: mu2 / ratio,
            mu2,
            ratio,
            hy,
            x,
            m,
            v: zero_c.clone(),
            d1: zero_c,
            d2: ImageSequence::zeros(op.dims()),
            rm,
        })
    }
}

impl IterativeSolver for AnalysisState<'_> {
    fn step(&mut self) -> Result<()> {
        let tau = self.lambda / (2.0 * self.mu1);
        let arg = cf_zip(&self.rm, &self.d1, |a, b| a + b);
        self.v = soft_threshold_field(&arg, tau);

        // m <- (ratio I + R'R)^{-1} [R'(v - d1) + ratio (x + d2)]
        let vd1 = cf_zip(&self.v, &self.d1, |a, b| a - b);
        let rt = self.r.adjoint(&vd1);
        let xd2 = img_zip(&self.x, &self.d2, |a, b| a + b);
        let ratio = self.ratio;
        let rhs_m = img_zip(&rt, &xd2, |a, b| a + ratio * b);
        self.m = self.r.solve_normal(self.ratio, &rhs_m)?;

        // x <- (mu2 I + H'H)^{-1} [H'y + mu2 (m - d2)]
        let md2 = img_zip(&self.m, &self.d2, |a, b| a - b);
        let mu2 = self.mu2;
        let rhs_x = img_zip(&self.hy, &md2, |a, b| a + mu2 * b);
        self.x = apply_regularized_inverse(self.cache, self.mu2, &rhs_x)?;

        // duals, with the freshly updated m and x
        self.rm = self.r.forward(&self.m)?;
        let vrm = cf_zip(&self.v, &self.rm, |a, b| a - b);
        self.d1 = cf_zip(&self.d1, &vrm, |d, s| d - s);
        let mx = img_zip(&self.m, &self.x, |a, b| a - b);
        self.d2 = img_zip(&self.d2, &mx, |d, s| d - s);
        Ok(())
    }

    fn objective(&self) -> f64 {
        metrics::objective_analysis(self.y, self.op, self.r, &self.x, self.lambda)
            .expect("dims validated at construction")
    }

    fn current_image(&self) -> ImageSequence {
        self.x.clone()
    }
}

/// Analysis-prior ADMM (Algorithm 2): decoupled regularization and data
/// fidelity, both subproblems solved exactly.
pub fn admm_analysis(
    y: &KSpaceData,
    op: &TransferOperator,
    cache: &SpectralCache,
    r: RegularizerKind,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let mut state = AnalysisState::new(y, op, cache, r, cfg)?;
    drive(&mut state, cfg)
}
