//! Controlled nonlocal vector fields and terminal costs.
//!
//! A model describes a control-affine field
//!
//! ```text
//! V(x, μ, u) = V⁰(x, μ) + Σ_j u_j V^j(x, μ)
//! ```
//!
//! entirely through Fourier coefficients, so the solvers never leave
//! spectral space unless a model asks for a pointwise product.

mod admissible;
mod convolution;
mod cost;
mod kuramoto;

use num_complex::Complex64;

pub use admissible::{AdmissibleSet, ControlVector, FEASIBILITY_TOLERANCE, ZERO_SWITCHING};
pub use convolution::ConvolutionModel;
pub use cost::{check_normalized, ScaledCost, SyncCost, TerminalCost, NORMALIZATION_TOLERANCE};
pub use kuramoto::{kuramoto_vf_coeffs, KuramotoModel};

use crate::error::Result;
use crate::spectral::FourierField;

/// A control-affine nonlocal vector field on the circle with its terminal cost.
///
/// Implementors supply the field components and the two derivatives that
/// enter the adjoint equation; the right-hand sides have generic
/// pseudospectral defaults which fast paths may override.
pub trait ControlledModel: Send + Sync {
    fn admissible(&self) -> &AdmissibleSet;

    fn cost(&self) -> &dyn TerminalCost;

    fn control_dim(&self) -> usize {
        self.admissible().dim()
    }

    /// Coefficients of the control-free part `V⁰(·, μ)`, if any.
    fn drift(&self, t: f64, mu: &FourierField) -> Result<Option<FourierField>>;

    /// Coefficients of `V^j(·, μ)`, `j = 0..m` (zero-based).
    fn component(&self, t: f64, mu: &FourierField, j: usize) -> Result<FourierField>;

    /// Coefficients of `V(·, μ, u)`.
    fn vf_coeffs(&self, t: f64, mu: &FourierField, u: &ControlVector) -> Result<FourierField> {
        let mut v = match self.drift(t, mu)? {
            Some(d) => d,
            None => FourierField::zeros(mu.n_modes())?,
        };
        for j in 0..self.control_dim() {
            if u[j] != 0.0 {
                v = v.axpy(u[j], &self.component(t, mu, j)?)?;
            }
        }
        Ok(v)
    }

    /// Coefficients of `x ↦ D_xV(x, μ, u)`.
    fn dx_field(&self, t: f64, mu: &FourierField, u: &ControlVector) -> Result<FourierField> {
        Ok(self.vf_coeffs(t, mu, u)?.derivative())
    }

    /// Coefficients of `x ↦ ∫ D_μV(y, μ, u, x) ζ(y) dy`.
    fn dmu_apply(
        &self,
        t: f64,
        mu: &FourierField,
        u: &ControlVector,
        zeta: &FourierField,
    ) -> Result<FourierField>;

    /// `dρ̂_n/dt = -in (V̂ρ)_n`.
    fn continuity_rhs(&self, t: f64, a: &FourierField, u: &ControlVector) -> Result<FourierField> {
        let v = self.vf_coeffs(t, a, u)?;
        let flux = FourierField::product(&v, a)?;
        Ok(flux.map(|n, c| c * Complex64::new(0.0, -(n as f64))))
    }

    /// Right-hand side of the adjoint balance law
    /// `∂_tζ + ∂_x(vζ) = -(∂_x v) ζ - (∫ D_μV(y, μ, x) ζ(y) dy) ρ`.
    fn adjoint_rhs(
        &self,
        t: f64,
        b: &FourierField,
        a: &FourierField,
        u: &ControlVector,
    ) -> Result<FourierField> {
        let v = self.vf_coeffs(t, a, u)?;
        let transport =
            FourierField::product(&v, b)?.map(|n, c| c * Complex64::new(0.0, -(n as f64)));
        let stretch = FourierField::product(&self.dx_field(t, a, u)?, b)?;
        let nonlocal = FourierField::product(&self.dmu_apply(t, a, u, b)?, a)?;
        transport.sub(&stretch)?.sub(&nonlocal)
    }

    /// Switching vector `d_j = ∫ V^j(x, μ) ζ(x) dx`.
    fn switching(&self, t: f64, a: &FourierField, b: &FourierField) -> Result<Vec<f64>> {
        (0..self.control_dim())
            .map(|j| FourierField::pairing(&self.component(t, a, j)?, b))
            .collect()
    }
}
