//! The synchronization benchmark: initial density, initial control, model.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::error::Result;
use crate::models::KuramotoModel;
use crate::spectral::FourierField;
use crate::time::{ControlSignal, TimeGrid};

pub const HORIZON: f64 = 6.0;
pub const TARGET: f64 = PI;
pub const RADIUS: f64 = SQRT_2;

/// `ρ₀(x) = (2 + sin x + 0.8 cos 2x - 0.2 sin 2x) / 4π`.
pub fn initial_density(n_modes: usize) -> Result<FourierField> {
    let s = 1.0 / (4.0 * PI);
    FourierField::from_nonnegative(
        n_modes,
        &[
            Complex64::new(2.0 * s, 0.0),
            // sin x = (e^{ix} - e^{-ix}) / 2i
            Complex64::new(0.0, -0.5 * s),
            // 0.8 cos 2x - 0.2 sin 2x
            Complex64::new(0.4 * s, 0.1 * s),
        ],
    )
}

/// `u(t) = √2 (sin 2πt, cos 2πt)`.
pub fn initial_control(grid: TimeGrid) -> Result<ControlSignal> {
    ControlSignal::from_fn(grid, |t| {
        vec![SQRT_2 * (2.0 * PI * t).sin(), SQRT_2 * (2.0 * PI * t).cos()]
    })
}

/// Kuramoto model with `α = 0`, target `π`, ball of radius `√2`.
pub fn model() -> Result<KuramotoModel> {
    KuramotoModel::synchronization(0.0, TARGET, RADIUS)
}
