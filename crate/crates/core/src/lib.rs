//! Pseudospectral Galerkin solver for `u_tt - Δu + |u_t|^{m-1} u_t = |u|^{p-1} u`
//! on the periodic torus, with the diagnostics used to check it.
//!
//! The numerics are generic over [`scalar::Real`] (`f32`, `f64`); exponent
//! classification also runs on exact rationals. The aliases below fix `f64`,
//! which is what the command-line tool uses.

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod config;
pub mod energy;
pub mod experiments;
pub mod error;
pub mod fourier;
pub mod galerkin;
pub mod integrator;
pub mod nonlinearity;
pub mod output;
pub mod regime;
pub mod scalar;

pub use error::{Error, Result};
pub use fourier::TorusGrid;
pub use scalar::Real;

pub type SpectralField64 = fourier::SpectralField<f64>;
pub type SpectralField32 = fourier::SpectralField<f32>;
pub type GridField64 = fourier::GridField<f64>;
pub type GridField32 = fourier::GridField<f32>;
pub type SolverState64 = galerkin::SolverState<f64>;
pub type SolverState32 = galerkin::SolverState<f32>;
pub type Params64 = nonlinearity::NonlinearityParams<f64>;
pub type RunConfig64 = config::RunConfig<f64>;
pub type Trajectory64 = integrator::Trajectory<f64>;
