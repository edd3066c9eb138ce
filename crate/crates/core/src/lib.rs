//! Compressed-sensing reconstruction for dynamic parallel MRI.
//!
//! Dynamic parallel-MRI measurements are heavily subsampled k-space lines
//! seen through many receive coils. This crate reconstructs the image
//! sequence with augmented-Lagrangian (ADMM) solvers for both the
//! synthesis-prior and analysis-prior formulations, plus FISTA and a
//! split-Bregman baseline for comparison. The distinguishing machinery is
//! an exact, embarrassingly parallel application of the regularized
//! inverse normal operator `(mu*I + H'H)^{-1}`: under Cartesian vertical
//! subsampling H'H decouples into one small Hermitian block per image
//! column and frame, and a one-time eigendecomposition of those blocks
//! turns every inverse application into two small dense products per
//! column.
//!
//! The crate also ships a deterministic synthetic data pipeline (dynamic
//! phantom, coil profiles, variable-density masks, noisy acquisition), the
//! convergence/benchmark instrumentation used to compare the solvers, and
//! bit-exact file formats behind the `ktrecon` command-line tool.

pub mod error;
mod fft;
pub mod io;
pub mod metrics;
pub mod model;
pub mod phantom;
pub mod regularizers;
pub mod solvers;
pub mod spectral;
pub mod types;
mod vecops;

pub use error::{Error, Result};
pub use types::{CoefficientField, CoilSensitivities, Dims, ImageSequence, KSpaceData, SamplingMask};
