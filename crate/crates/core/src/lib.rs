//! Pseudo-spectral simulation and modulus-of-continuity certification for the
//! generalized quasi-geostrophic equation
//!
//! ```text
//! ∂ₜθ + u·∇θ + νΛ^{2α}θ = 0,    u = Λ^{1-2β} R^⊥ θ
//! ```
//!
//! on the torus `[0, 2π)²`. The crate is split along the lines of the
//! computation:
//!
//! * [`spectral`] – grids, fields, FFT transforms and Fourier multipliers.
//! * [`galerkin`] – the truncated quadratic nonlinearity, with a direct
//!   convolution oracle and a dealiased pseudo-spectral fast path.
//! * [`integrator`] – integrating-factor RK4 time stepping and run loops.
//! * [`diagnostics`] – Sobolev / sup norms, analyticity radius, run records.
//! * [`moc`] – explicit moduli of continuity and their numerical certification.
//! * [`harness`] – configuration, initial data, file formats and experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks

pub mod diagnostics;
pub mod galerkin;
pub mod harness;
pub mod integrator;
pub mod moc;
pub mod reduce;
pub mod spectral;

pub use diagnostics::RunRecord;
pub use galerkin::{EvaluatorMode, NonlinearEvaluator};
pub use integrator::{IntegratingFactorState, StepperConfig};
pub use moc::{Moc, MocRegime};
pub use spectral::{Grid, ModelParams, PhysicalField, Regime, SpectralField};

/// Version string embedded in every artifact.
pub const CODE_VERSION: &str = concat!("gqg-core ", env!("CARGO_PKG_VERSION"));
