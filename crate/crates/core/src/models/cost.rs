use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::FourierField;

/// Tolerance on `μ̂_0 = 1/(2π)` for probability densities.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// Fails unless `mu` has unit mass.
pub fn check_normalized(mu: &FourierField) -> Result<()> {
    let found = mu.get(0).re;
    let expected = 1.0 / (2.0 * PI);
    if (found - expected).abs() > NORMALIZATION_TOLERANCE
        || mu.get(0).im.abs() > NORMALIZATION_TOLERANCE
    {
        return Err(Error::Normalization { found, expected });
    }
    Ok(())
}

/// Terminal cost `ℓ(μ)` together with its derivatives in the measure.
pub trait TerminalCost: Send + Sync {
    fn eval(&self, mu: &FourierField) -> Result<f64>;

    /// Coefficients of the intrinsic derivative `x ↦ D_μℓ(μ; x)`.
    fn dmu(&self, mu: &FourierField) -> Result<FourierField>;

    /// Coefficients of the flat derivative `δℓ/δμ(μ, ·)`, normalized to have
    /// zero mean under `μ`.
    fn flat(&self, mu: &FourierField) -> Result<FourierField>;

    /// Density of the terminal co-state, `ζ_T = -D_μℓ(μ_T) ρ_T`.
    fn terminal_adjoint(&self, mu_t: &FourierField) -> Result<FourierField> {
        Ok(FourierField::product(&self.dmu(mu_t)?, mu_t)?.scaled(-1.0))
    }
}

/// Synchronization cost `ℓ(μ) = ∫ (1 - cos(x - x₀)) dμ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncCost {
    pub target: f64,
}

impl SyncCost {
    pub fn new(target: f64) -> Self {
        Self { target }
    }

    /// Coefficient at `n = 1` of `e^{i(x - x₀)}`, i.e. `e^{-ix₀}`.
    fn phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, -self.target)
    }
}

impl TerminalCost for SyncCost {
    fn eval(&self, mu: &FourierField) -> Result<f64> {
        check_normalized(mu)?;
        Ok(1.0 - 2.0 * PI * (self.phase() * mu.get(-1)).re)
    }

    fn dmu(&self, mu: &FourierField) -> Result<FourierField> {
        // sin(x - x₀): c_1 = -i e^{-ix₀}/2
        let c1 = Complex64::new(0.0, -0.5) * self.phase();
        FourierField::from_nonnegative(mu.n_modes(), &[Complex64::new(0.0, 0.0), c1])
    }

    fn flat(&self, mu: &FourierField) -> Result<FourierField> {
        let value = self.eval(mu)?;
        let c1 = -0.5 * self.phase();
        FourierField::from_nonnegative(mu.n_modes(), &[Complex64::new(1.0 - value, 0.0), c1])
    }

    fn terminal_adjoint(&self, mu_t: &FourierField) -> Result<FourierField> {
        let half = mu_t.max_index();
        let e_minus = self.phase();
        let e_plus = e_minus.conj();
        let mut b = FourierField::zeros(mu_t.n_modes())?;
        for n in -half..=half {
            let v =
                Complex64::new(0.0, 0.5) * (mu_t.get(n - 1) * e_minus - mu_t.get(n + 1) * e_plus);
            b.set(n, v);
        }
        Ok(b)
    }
}

/// `κ ℓ` for a constant `κ`.
pub struct ScaledCost<C> {
    pub inner: C,
    pub factor: f64,
}

impl<C: TerminalCost> TerminalCost for ScaledCost<C> {
    fn eval(&self, mu: &FourierField) -> Result<f64> {
        Ok(self.factor * self.inner.eval(mu)?)
    }

    fn dmu(&self, mu: &FourierField) -> Result<FourierField> {
        Ok(self.inner.dmu(mu)?.scaled(self.factor))
    }

    fn flat(&self, mu: &FourierField) -> Result<FourierField> {
        Ok(self.inner.flat(mu)?.scaled(self.factor))
    }

    fn terminal_adjoint(&self, mu_t: &FourierField) -> Result<FourierField> {
        Ok(self.inner.terminal_adjoint(mu_t)?.scaled(self.factor))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{grid_points, RealGridField};
    use approx::assert_abs_diff_eq;

    const TWO_PI: f64 = 2.0 * PI;

    fn fig1(n_modes: usize) -> FourierField {
        FourierField::to_spectral(
            &RealGridField::from_fn(n_modes, |x| {
                (2.0 + x.sin() + 0.8 * (2.0 * x).cos() - 0.2 * (2.0 * x).sin()) / (4.0 * PI)
            })
            .unwrap(),
        )
        .unwrap()
    }

    fn quad_cost(mu: &FourierField, x0: f64) -> f64 {
        let points = 2048;
        grid_points(points)
            .map(|x| (1.0 - (x - x0).cos()) * mu.evaluate(x))
            .sum::<f64>()
            * TWO_PI
            / points as f64
    }

    fn bump(n_modes: usize, center: f64, width: f64) -> FourierField {
        let coeffs: Vec<Complex64> = (0..=n_modes / 2)
            .map(|n| {
                Complex64::from_polar(
                    (-(n as f64).powi(2) * width).exp() / TWO_PI,
                    -(n as f64) * center,
                )
            })
            .collect();
        FourierField::from_nonnegative(n_modes, &coeffs).unwrap()
    }

    #[test]
    fn uniform_density_costs_one() {
        let mu = FourierField::uniform_density(16).unwrap();
        for x0 in [0.0, 1.0, PI] {
            assert_abs_diff_eq!(SyncCost::new(x0).eval(&mu).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cost_matches_quadrature() {
        let rho0 = fig1(32);
        let value = SyncCost::new(PI).eval(&rho0).unwrap();
        assert_abs_diff_eq!(value, quad_cost(&rho0, PI), epsilon = 1e-12);
        // ρ̂_{-1} = i/(4π): ℓ = 1 - 2π Re(-i/(4π)) = 1
        assert_abs_diff_eq!(value, 1.0, epsilon = 1e-14);

        let concentrated = bump(64, 2.0, 0.02);
        let value = SyncCost::new(2.0).eval(&concentrated).unwrap();
        assert!(value < 0.05, "{value}");
        assert_abs_diff_eq!(value, quad_cost(&concentrated, 2.0), epsilon = 1e-8);
    }

    #[test]
    fn non_normalized_measure_rejected() {
        let mu = FourierField::uniform_density(8).unwrap().scaled(2.0);
        assert!(matches!(
            SyncCost::new(0.0).eval(&mu),
            Err(Error::Normalization { .. })
        ));
    }

    #[test]
    fn intrinsic_derivative_coefficients() {
        let mu = FourierField::uniform_density(16).unwrap();
        let d0 = SyncCost::new(0.0).dmu(&mu).unwrap();
        let sine =
            FourierField::to_spectral(&RealGridField::from_fn(16, f64::sin).unwrap()).unwrap();
        assert!(d0.max_diff(&sine).unwrap() < 1e-15);
        let dpi = SyncCost::new(PI).dmu(&mu).unwrap();
        assert!(dpi.max_diff(&sine.scaled(-1.0)).unwrap() < 1e-15);
    }

    #[test]
    fn intrinsic_derivative_is_gradient_of_flat_derivative() {
        let mu = fig1(16);
        for x0 in [0.0, 0.4, PI, 5.0] {
            let cost = SyncCost::new(x0);
            let flat = cost.flat(&mu).unwrap();
            assert!(flat.derivative().max_diff(&cost.dmu(&mu).unwrap()).unwrap() < 1e-10);
            // zero mean under μ
            assert_abs_diff_eq!(
                FourierField::pairing(&flat, &mu).unwrap(),
                0.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn terminal_adjoint_examples() {
        let x0 = 0.8;
        let cost = SyncCost::new(x0);
        let uniform = FourierField::uniform_density(16).unwrap();
        let b = cost.terminal_adjoint(&uniform).unwrap();
        let want = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, -x0) / (4.0 * PI);
        assert!((b.get(1) - want).norm() < 1e-16);
        assert!((b.get(-1) - want.conj()).norm() < 1e-16);
        assert!(b.get(0).norm() < 1e-16 && b.get(2).norm() < 1e-16);

        let shifted = SyncCost::new(x0 + PI).terminal_adjoint(&uniform).unwrap();
        assert!(shifted.add(&b).unwrap().max_abs() < 1e-16);

        let mut mu = FourierField::zeros(16).unwrap();
        mu.set(1, Complex64::new(0.02, -0.03));
        mu.set(-1, Complex64::new(0.02, 0.03));
        let b = cost.terminal_adjoint(&mu).unwrap();
        let want0 = Complex64::new(0.0, 0.5)
            * (mu.get(-1) * Complex64::from_polar(1.0, -x0)
                - mu.get(1) * Complex64::from_polar(1.0, x0));
        assert!((b.get(0) - want0).norm() < 1e-16);
        assert!(b.get(0).im.abs() < 1e-17);
    }

    #[test]
    fn fast_terminal_adjoint_matches_generic_product() {
        let mu = fig1(32);
        let cost = SyncCost::new(2.2);
        let fast = cost.terminal_adjoint(&mu).unwrap();
        let generic = FourierField::product(&cost.dmu(&mu).unwrap(), &mu)
            .unwrap()
            .scaled(-1.0);
        assert!(fast.max_diff(&generic).unwrap() < 1e-15);
    }

    #[test]
    fn cost_is_rotation_invariant() {
        let mu = fig1(32);
        for phi in [0.3, 2.0] {
            let a = SyncCost::new(1.0).eval(&mu).unwrap();
            let b = SyncCost::new(1.0 + phi).eval(&mu.rotated(phi)).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }
}
