//! Finite-difference simulator for the stochastic hydrostatic primitive
//! equations of the ocean, with a direct Euler-Maruyama integrator, an
//! Ornstein-Uhlenbeck splitting integrator, and a battery of numerical checks
//! for the identities and inequalities behind the global existence theory.
//!
//! Every kernel is generic over the scalar type ([`Real`]); the aliases
//! below fix it to `f64`, which the verification suites use.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod lab;
pub mod modes;
pub mod noise;
pub mod operators;
pub mod pressure;
pub mod real;
pub mod snapshot;
pub mod spectral;
pub mod stepping;

pub use error::{Error, Result};
pub use real::Real;

pub type Grid64 = grid::Grid<f64>;
pub type GridSpec64 = grid::GridSpec<f64>;
pub type Field64 = grid::ScalarField<f64>;
pub type Fields64 = grid::Fields<f64>;
pub type State64 = grid::State<f64>;
pub type Params64 = operators::PhysParams<f64>;
pub type Stepper64 = stepping::Stepper<f64>;
pub type RunConfig64 = stepping::RunConfig<f64>;

pub type Grid32 = grid::Grid<f32>;
pub type State32 = grid::State<f32>;
pub type Stepper32 = stepping::Stepper<f32>;
