//! Reconstruction solvers: ADMM for the synthesis and analysis priors,
//! FISTA, and the split-Bregman P1 baseline with inner conjugate
//! gradient. All four share the trace/stopping plumbing here.
//!
//! The solvers are deterministic: identical inputs and config produce
//! bit-identical iterates and traces regardless of worker count
//! (elapsed-time fields excepted).

mod admm;
mod cg;
mod fista;
mod p1;

pub use admm::{admm_analysis, admm_synthesis, synthesis_w_update, AnalysisState, SynthesisState};
pub use cg::conjugate_gradient;
pub use fista::{fista, FistaState};
pub use p1::{p1_split_bregman, P1State};

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::{CoefficientField, ImageSequence};

/// Hyperparameters shared by every solver. Defaults are the operating
/// point used throughout the experiments: lambda = 0.002, mu = 0.06,
/// mu2/mu1 = 0.5, 200 iterations, delta tolerance 0.001.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Regularization weight lambda; 0 is permitted for least-squares
    /// sanity runs.
    pub lambda: f64,
    /// Penalty mu (Algorithm 1), mu2 (Algorithm 2), or P1's mu.
    pub mu: f64,
    /// mu2/mu1 ratio of the analysis solver.
    pub mu_ratio: f64,
    /// Inner CG steps of P1.
    pub cg_iters: usize,
    pub max_iters: usize,
    /// Stop when `0 <= delta(k) < tol` (an objective increase never
    /// stops the solver).
    pub tol: f64,
    /// Objective is evaluated every `log_interval` iterations (always at
    /// the last); raise above 1 to keep objective evaluation out of
    /// timed benchmark loops.
    pub log_interval: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 0.002,
            mu: 0.06,
            mu_ratio: 0.5,
            cg_iters: 10,
            max_iters: 200,
            tol: 0.001,
            log_interval: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::invalid("lambda", "must be >= 0"));
        }
        if !(self.mu > 0.0) {
            return Err(Error::invalid("mu", "must be > 0"));
        }
        if !(self.mu_ratio > 0.0) {
            return Err(Error::invalid("mu_ratio", "must be > 0"));
        }
        if self.cg_iters == 0 {
            return Err(Error::invalid("cg_iters", "must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters", "must be >= 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol", "must be >= 0"));
        }
        if self.log_interval == 0 {
            return Err(Error::invalid("log_interval", "must be >= 1"));
        }
        Ok(())
    }
}

/// One logged iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub objective: f64,
    /// Relative reduction vs the previously logged objective; 0 by
    /// convention when the objective is exactly zero.
    pub delta: f64,
    pub elapsed_ms: f64,
}

/// Per-iteration convergence record of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    /// Objective of the initial iterate, before the first iteration.
    pub initial_objective: f64,
    pub entries: Vec<TraceEntry>,
}

impl SolverTrace {
    pub fn new(initial_objective: f64) -> Self {
        SolverTrace {
            initial_objective,
            entries: Vec::new(),
        }
    }

    /// Records iteration `iter` and returns its delta.
    pub fn push(&mut self, iter: usize, objective: f64, elapsed_ms: f64) -> f64 {
        let prev = self
            .entries
            .last()
            .map_or(self.initial_objective, |e| e.objective);
        let delta = if objective == 0.0 {
            0.0
        } else {
            (prev - objective) / objective
        };
        self.entries.push(TraceEntry {
            iter,
            objective,
            delta,
            elapsed_ms,
        });
        delta
    }

    pub fn final_objective(&self) -> f64 {
        self.entries
            .last()
            .map_or(self.initial_objective, |e| e.objective)
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: ImageSequence,
    pub trace: SolverTrace,
    /// True iff the delta stopping rule fired within the iteration budget.
    pub converged: bool,
    pub iterations: usize,
}

/// One outer iteration of a solver, separable from the driver loop so
/// tests can replay individual steps and inspect iterates.
pub trait IterativeSolver {
    fn step(&mut self) -> Result<()>;
    /// Objective J(k) of the current iterate.
    fn objective(&self) -> f64;
    /// Current image-domain iterate.
    fn current_image(&self) -> ImageSequence;
}

/// Shared outer loop: steps the solver, logs the objective every
/// `log_interval` iterations, and stops on `0 <= delta < tol`.
pub(crate) fn drive(solver: &mut dyn IterativeSolver, cfg: &SolverConfig) -> Result<SolveResult> {
    let start = Instant::now();
    let mut trace = SolverTrace::new(solver.objective());
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=cfg.max_iters {
        solver.step()?;
        iterations = k;
        if k % cfg.log_interval == 0 || k == cfg.max_iters {
            let delta = trace.push(k, solver.objective(), start.elapsed().as_secs_f64() * 1e3);
            if delta >= 0.0 && delta < cfg.tol {
                converged = true;
                break;
            }
        }
    }
    Ok(SolveResult {
        x: solver.current_image(),
        trace,
        converged,
        iterations,
    })
}

// Small elementwise helpers for the coefficient-domain ADMM state.

pub(crate) fn cf_zip(
    a: &CoefficientField,
    b: &CoefficientField,
    f: impl Fn(Complex64, Complex64) -> Complex64,
) -> CoefficientField {
    debug_assert!(a.same_shape(b));
    let mut out = CoefficientField::zeros(a.n_v(), a.n_h(), a.n_frames());
    for ((dst, &x), &y) in out.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        *dst = f(x, y);
    }
    out
}

pub(crate) fn img_zip(
    a: &ImageSequence,
    b: &ImageSequence,
    f: impl Fn(Complex64, Complex64) -> Complex64,
) -> ImageSequence {
    // n_c is not a property of an image; only the spatial/temporal shape
    // must agree
    debug_assert_eq!(
        (a.dims().n_v, a.dims().n_h, a.dims().n_t),
        (b.dims().n_v, b.dims().n_h, b.dims().n_t)
    );
    let mut out = ImageSequence::zeros(a.dims());
    for ((dst, &x), &y) in out.data_mut().iter_mut().zip(a.data()).zip(b.data()) {
        *dst = f(x, y);
    }
    out
}
