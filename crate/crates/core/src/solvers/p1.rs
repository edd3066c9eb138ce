//! Split-Bregman baseline P1: the x-subproblem
//! `(mu R'R + H'H) x = H'y + mu R'(v + d)` is solved by a fixed number of
//! warm-started conjugate-gradient steps instead of an exact inverse,
//! which is exactly what makes it slow on ill-conditioned problems.

use crate::error::Result;
use crate::metrics;
use crate::model::TransferOperator;
use crate::regularizers::{soft_threshold_field, RegularizerKind};
use crate::spectral::{apply_normal, NormalBlocks};
use crate::types::{CoefficientField, ImageSequence, KSpaceData};
use crate::vecops;

use super::{cf_zip, conjugate_gradient, drive, img_zip, IterativeSolver, SolveResult, SolverConfig};

pub struct P1State<'a> {
    y: &'a KSpaceData,
    op: &'a TransferOperator,
    blocks: &'a NormalBlocks,
    r: RegularizerKind,
    lambda: f64,
    mu: f64,
    cg_iters: usize,
    hy: ImageSequence,
    pub x: ImageSequence,
    pub v: CoefficientField,
    pub d: CoefficientField,
    /// R x, cached between iterations.
    rx: CoefficientField,
}

impl<'a> P1State<'a> {
    pub fn new(
        y: &'a KSpaceData,
        op: &'a TransferOperator,
        blocks: &'a NormalBlocks,
        r: RegularizerKind,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        r.validate(op.dims().n_t)?;
        let hy = op.apply_h_adjoint(y)?;
        let x = hy.clone();
        let rx = r.forward(&x)?;
        let zero = CoefficientField::zeros(rx.n_v(), rx.n_h(), rx.n_frames());
        Ok(P1State {
            y,
            op,
            blocks,
            r,
            lambda: cfg.lambda,
            mu: cfg.mu,
            cg_iters: cfg.cg_iters,
            hy,
            x,
            v: zero.clone(),
            d: zero,
            rx,
        })
    }
}

impl IterativeSolver for P1State<'_> {
    fn step(&mut self) -> Result<()> {
        let tau = self.lambda / (2.0 * self.mu);
        let arg = cf_zip(&self.rx, &self.d, |a, b| a - b);
        self.v = soft_threshold_field(&arg, tau);

        let vd = cf_zip(&self.v, &self.d, |a, b| a + b);
        let rvd = self.r.adjoint(&vd);
        let mu = self.mu;
        let rhs = img_zip(&self.hy, &rvd, |a, b| a + mu * b);
        let (blocks, r) = (self.blocks, self.r);
        self.x = conjugate_gradient(
            |z| {
                let normal = apply_normal(blocks, z)?;
                let rrz = r.adjoint(&r.forward(z)?);
                Ok(img_zip(&normal, &rrz, |a, b| a + mu * b))
            },
            &rhs,
            &self.x,
            self.cg_iters,
        )?;

        self.rx = self.r.forward(&self.x)?;
        let rxv = cf_zip(&self.rx, &self.v, |a, b| a - b);
        self.d = cf_zip(&self.d, &rxv, |d, s| d - s);
        Ok(())
    }

    fn objective(&self) -> f64 {
        let res = metrics::residual_norm_sq(self.y, self.op, &self.x)
            .expect("dims validated at construction");
        self.lambda * vecops::norm_l1(self.rx.data()) + res
    }

    fn current_image(&self) -> ImageSequence {
        self.x.clone()
    }
}

/// Split-Bregman P1 with `cfg.cg_iters` inner CG steps per iteration.
pub fn p1_split_bregman(
    y: &KSpaceData,
    op: &TransferOperator,
    blocks: &NormalBlocks,
    r: RegularizerKind,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let mut state = P1State::new(y, op, blocks, r, cfg)?;
    drive(&mut state, cfg)
}
