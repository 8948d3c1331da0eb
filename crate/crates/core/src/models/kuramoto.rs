use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{AdmissibleSet, ControlVector, ControlledModel, SyncCost, TerminalCost};
use crate::error::{Error, Result};
use crate::spectral::FourierField;

/// Mean-field Kuramoto oscillators with controlled rotation and coupling:
///
/// ```text
/// V(x, μ, u) = u₁ + u₂ ∫ sin(y - x - α) dμ(y).
/// ```
///
/// Only the harmonics `n = 0, ±1` of the field are nonzero, so both the
/// continuity and the adjoint right-hand sides are evaluated directly on
/// the coefficient sequences.
#[derive(Clone)]
pub struct KuramotoModel {
    alpha: f64,
    set: AdmissibleSet,
    cost: Arc<dyn TerminalCost>,
}

impl KuramotoModel {
    pub fn new(alpha: f64, set: AdmissibleSet, cost: Arc<dyn TerminalCost>) -> Result<Self> {
        set.validate()?;
        if set.dim() != 2 {
            return Err(Error::InvalidParameter(format!(
                "Kuramoto controls are two-dimensional, admissible set has dim {}",
                set.dim()
            )));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter("phase lag must be finite".into()));
        }
        Ok(Self { alpha, set, cost })
    }

    /// Synchronization towards `target` under `u₁² + u₂² ≤ radius²`.
    pub fn synchronization(alpha: f64, target: f64, radius: f64) -> Result<Self> {
        Self::new(
            alpha,
            AdmissibleSet::ball(2, radius)?,
            Arc::new(SyncCost::new(target)),
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same dynamics with a different terminal cost.
    pub fn with_cost(&self, cost: Arc<dyn TerminalCost>) -> Self {
        Self {
            alpha: self.alpha,
            set: self.set.clone(),
            cost,
        }
    }

    /// `V̂²_1 = iπ μ̂_1 e^{iα}`.
    fn coupling_coeff(&self, mu: &FourierField) -> Complex64 {
        Complex64::new(0.0, PI) * mu.get(1) * Complex64::from_polar(1.0, self.alpha)
    }
}

/// Fourier coefficients of the Kuramoto field: `V̂_0 = u₁`,
/// `V̂_{±1} = iπ u₂ μ̂_1 e^{iα}` and its conjugate.
pub fn kuramoto_vf_coeffs(
    model: &KuramotoModel,
    t: f64,
    mu: &FourierField,
    u: &ControlVector,
) -> Result<FourierField> {
    model.set.check(u)?;
    model.vf_coeffs(t, mu, u)
}

impl ControlledModel for KuramotoModel {
    fn admissible(&self) -> &AdmissibleSet {
        &self.set
    }

    fn cost(&self) -> &dyn TerminalCost {
        self.cost.as_ref()
    }

    fn drift(&self, _t: f64, _mu: &FourierField) -> Result<Option<FourierField>> {
        Ok(None)
    }

    fn component(&self, _t: f64, mu: &FourierField, j: usize) -> Result<FourierField> {
        let mut v = FourierField::zeros(mu.n_modes())?;
        match j {
            0 => v.set(0, Complex64::new(1.0, 0.0)),
            1 => {
                let c = self.coupling_coeff(mu);
                v.set(1, c);
                v.set(-1, c.conj());
            }
            _ => return Err(Error::InvalidParameter(format!("no control component {j}"))),
        }
        Ok(v)
    }

    fn vf_coeffs(&self, _t: f64, mu: &FourierField, u: &ControlVector) -> Result<FourierField> {
        let mut v = FourierField::zeros(mu.n_modes())?;
        let c = self.coupling_coeff(mu) * u[1];
        v.set(0, Complex64::new(u[0], 0.0));
        v.set(1, c);
        v.set(-1, c.conj());
        Ok(v)
    }

    fn dx_field(&self, _t: f64, mu: &FourierField, u: &ControlVector) -> Result<FourierField> {
        // -u₂ (K₂ * μ) with K₂(z) = cos(z + α)
        let mut out = FourierField::zeros(mu.n_modes())?;
        let c = -PI * u[1] * Complex64::from_polar(1.0, self.alpha) * mu.get(1);
        out.set(1, c);
        out.set(-1, c.conj());
        Ok(out)
    }

    fn dmu_apply(
        &self,
        _t: f64,
        mu: &FourierField,
        u: &ControlVector,
        zeta: &FourierField,
    ) -> Result<FourierField> {
        // u₂ (K₁ * ζ) with K₁(z) = cos(-z + α)
        let mut out = FourierField::zeros(mu.n_modes())?;
        let c = PI * u[1] * Complex64::from_polar(1.0, -self.alpha) * zeta.get(1);
        out.set(1, c);
        out.set(-1, c.conj());
        Ok(out)
    }

    fn continuity_rhs(&self, _t: f64, a: &FourierField, u: &ControlVector) -> Result<FourierField> {
        let half = a.max_index();
        let e_plus = Complex64::from_polar(1.0, self.alpha);
        let e_minus = e_plus.conj();
        let a1 = a.get(1) * e_plus;
        let am1 = a.get(-1) * e_minus;
        let (u1, u2) = (u[0], u[1]);
        let mut out = FourierField::zeros(a.n_modes())?;
        for (i, slot) in out.coeffs_mut().iter_mut().enumerate() {
            let n = i as i64 - half;
            let nf = n as f64;
            let local = Complex64::new(0.0, -nf * u1) * a.get(n);
            let mean_field = (a1 * a.get(n - 1) - am1 * a.get(n + 1)) * (PI * nf * u2);
            *slot = local + mean_field;
        }
        Ok(out)
    }

    fn adjoint_rhs(
        &self,
        _t: f64,
        b: &FourierField,
        a: &FourierField,
        u: &ControlVector,
    ) -> Result<FourierField> {
        let half = b.max_index();
        let e_plus = Complex64::from_polar(1.0, self.alpha);
        let e_minus = e_plus.conj();
        let (u1, u2) = (u[0], u[1]);
        let a1 = a.get(1) * e_plus;
        let am1 = a.get(-1) * e_minus;
        let b1 = b.get(1) * e_minus;
        let bm1 = b.get(-1) * e_plus;
        let mut out = FourierField::zeros(b.n_modes())?;
        for (i, slot) in out.coeffs_mut().iter_mut().enumerate() {
            let n = i as i64 - half;
            let nf = n as f64;
            let (bl, br) = (b.get(n - 1), b.get(n + 1));
            let (al, ar) = (a.get(n - 1), a.get(n + 1));
            let transport =
                Complex64::new(0.0, -nf * u1) * b.get(n) + (a1 * bl - am1 * br) * (PI * nf * u2);
            // -(∂_x v) ζ
            let stretch = (a1 * bl + am1 * br) * (PI * u2);
            // -(u₂ K₁ * ζ) ρ
            let nonlocal = (bm1 * ar + b1 * al) * (PI * u2);
            *slot = transport + stretch - nonlocal;
        }
        Ok(out)
    }

    fn switching(&self, _t: f64, a: &FourierField, b: &FourierField) -> Result<Vec<f64>> {
        let d1 = 2.0 * PI * b.get(0).re;
        let d2 = 4.0 * PI * (self.coupling_coeff(a) * b.get(-1)).re;
        Ok(vec![d1, d2])
    }
}
