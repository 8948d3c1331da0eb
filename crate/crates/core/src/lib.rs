//! Indirect descent for optimal control of nonlocal continuity equations on
//! the circle.
//!
//! The pipeline is spectral end to end: densities are truncated Fourier
//! series ([`spectral`]), the continuity equation is advanced forward and the
//! adjoint balance law backward with RK4 ([`forward`], [`adjoint`]), and the
//! descent loop in [`optimizer`] maximizes the Hamiltonian pointwise and
//! takes Armijo steps towards the maximizer. [`validation`] holds the
//! independent oracles.

pub mod adjoint;
pub mod error;
pub mod exec;
pub mod forward;
pub mod models;
pub mod optimizer;
pub mod presets;
pub mod spectral;
pub mod time;
pub mod validation;

pub use error::{Error, Result};
pub use exec::Execution;
pub use spectral::{FourierField, RealGridField};
pub use time::{ControlSignal, TimeGrid};
