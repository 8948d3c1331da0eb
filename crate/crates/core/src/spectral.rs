//! Truncated Fourier representation of real periodic fields on the circle.
//!
//! A [`FourierField`] with `n_modes = N` stores the coefficients `c_n` for
//! `n = -N/2 ..= N/2` under the convention
//!
//! ```text
//! c_n = (1 / 2π) ∫₀^{2π} c(x) e^{-inx} dx,      c(x) = Σ_n c_n e^{inx}.
//! ```
//!
//! The full symmetric index range is kept (no real-to-complex compression),
//! so index arithmetic in the coefficient ODEs reads literally.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the imaginary residue when reconstructing physical values.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

const TWO_PI: f64 = 2.0 * PI;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(len)
        } else {
            p.plan_fft_inverse(len)
        }
    })
}

/// Samples of a real periodic field on `x_j = 2πj/N`, `j = 0..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealGridField {
    values: Vec<f64>,
}

impl RealGridField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite sample {v}")));
        }
        Ok(Self { values })
    }

    /// Samples `f` on `n_points` equispaced nodes.
    pub fn from_fn(n_points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid_points(n_points).map(f).collect())
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Grid node coordinates.
    pub fn points(&self) -> impl Iterator<Item = f64> {
        grid_points(self.values.len())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Equispaced nodes `2πj/n`, `j = 0..n`.
pub fn grid_points(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| TWO_PI * j as f64 / n as f64)
}

/// Complex Fourier coefficients of a real periodic field, indices `-N/2 ..= N/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierField {
    n_modes: usize,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(n_modes: usize) -> Result<Self> {
        check_modes(n_modes)?;
        Ok(Self {
            n_modes,
            coeffs: vec![Complex64::new(0.0, 0.0); n_modes + 1],
        })
    }

    /// Builds a field from the full coefficient array ordered `-N/2 ..= N/2`.
    pub fn from_coeffs(n_modes: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_modes(n_modes)?;
        if coeffs.len() != n_modes + 1 {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                n_modes + 1,
                coeffs.len()
            )));
        }
        Ok(Self { n_modes, coeffs })
    }

    /// Builds a real field from `c_0, c_1, ..., c_K`; negative indices are
    /// filled by conjugation and `c_0` is taken as real. Harmonics beyond
    /// `N/2` are dropped.
    pub fn from_nonnegative(n_modes: usize, nonneg: &[Complex64]) -> Result<Self> {
        let mut f = Self::zeros(n_modes)?;
        let half = f.max_index();
        for (n, c) in nonneg.iter().enumerate().take(half as usize + 1) {
            let n = n as i64;
            if n == 0 {
                f.set(0, Complex64::new(c.re, 0.0));
            } else {
                f.set(n, *c);
                f.set(-n, c.conj());
            }
        }
        Ok(f)
    }

    /// Uniform probability density `1/(2π)`.
    pub fn uniform_density(n_modes: usize) -> Result<Self> {
        let mut f = Self::zeros(n_modes)?;
        f.set(0, Complex64::new(1.0 / TWO_PI, 0.0));
        Ok(f)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Largest retained harmonic `N/2`.
    pub fn max_index(&self) -> i64 {
        (self.n_modes / 2) as i64
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient `c_n`; zero outside the retained range.
    #[inline]
    pub fn get(&self, n: i64) -> Complex64 {
        let half = self.max_index();
        if n < -half || n > half {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + half) as usize]
        }
    }

    /// Sets `c_n`. Panics if `n` is outside `-N/2 ..= N/2`.
    #[inline]
    pub fn set(&mut self, n: i64, value: Complex64) {
        let half = self.max_index();
        assert!(n.abs() <= half, "harmonic {n} outside ±{half}");
        self.coeffs[(n + half) as usize] = value;
    }

    /// Iterator over `(n, c_n)`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let half = self.max_index();
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - half, *c))
    }

    /// `max_n |c_{-n} - conj(c_n)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let half = self.max_index();
        (0..=half)
            .map(|n| (self.get(-n) - self.get(n).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max coefficient-wise distance to `other`.
    pub fn max_diff(&self, other: &FourierField) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn check_same(&self, other: &FourierField) -> Result<()> {
        if self.n_modes != other.n_modes {
            return Err(Error::ModeMismatch {
                left: self.n_modes,
                right: other.n_modes,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> FourierField {
        self.map(|_, c| c * factor)
    }

    /// Coefficient-wise map `(n, c_n) -> c'_n`.
    pub fn map(&self, f: impl Fn(i64, Complex64) -> Complex64) -> FourierField {
        let half = self.max_index();
        FourierField {
            n_modes: self.n_modes,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| f(i as i64 - half, *c))
                .collect(),
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &FourierField) -> Result<FourierField> {
        self.check_same(other)?;
        Ok(FourierField {
            n_modes: self.n_modes,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * factor)
                .collect(),
        })
    }

    pub fn add(&self, other: &FourierField) -> Result<FourierField> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &FourierField) -> Result<FourierField> {
        self.axpy(-1.0, other)
    }

    /// Coefficients of `x ↦ c(x - shift)`.
    pub fn rotated(&self, shift: f64) -> FourierField {
        self.map(|n, c| c * Complex64::from_polar(1.0, -(n as f64) * shift))
    }

    /// Coefficients of `x ↦ c(-x)`.
    pub fn reflected(&self) -> FourierField {
        let half = self.max_index();
        let mut out = self.clone();
        for n in -half..=half {
            out.set(n, self.get(-n));
        }
        out
    }

    /// Spatial derivative: `c_n ↦ i n c_n`.
    pub fn derivative(&self) -> FourierField {
        self.map(|n, c| c * Complex64::new(0.0, n as f64))
    }

    /// Convolution on the circle `(K * ρ)(x) = ∫ K(x - y) ρ(y) dy`,
    /// coefficients `2π K_n ρ_n`.
    pub fn convolve(kernel: &FourierField, density: &FourierField) -> Result<FourierField> {
        kernel.check_same(density)?;
        Ok(FourierField {
            n_modes: kernel.n_modes,
            coeffs: kernel
                .coeffs
                .iter()
                .zip(&density.coeffs)
                .map(|(k, r)| k * r * TWO_PI)
                .collect(),
        })
    }

    /// `∫₀^{2π} f g dx = 2π Σ_n f_n g_{-n}`.
    pub fn pairing(f: &FourierField, g: &FourierField) -> Result<f64> {
        f.check_same(g)?;
        Ok(TWO_PI * f.iter().map(|(n, c)| c * g.get(-n)).sum::<Complex64>().re)
    }

    /// Truncated coefficients of the pointwise product `f g`, computed exactly
    /// on a padded grid (no aliasing into the retained band).
    pub fn product(f: &FourierField, g: &FourierField) -> Result<FourierField> {
        f.check_same(g)?;
        let padded = 2 * f.n_modes;
        let fv = f.to_physical_on(padded)?;
        let gv = g.to_physical_on(padded)?;
        let values: Vec<f64> = fv
            .values
            .iter()
            .zip(&gv.values)
            .map(|(a, b)| a * b)
            .collect();
        project(&values, f.n_modes)
    }

    /// Point evaluation `Σ_n c_n e^{inx}` (real part).
    pub fn evaluate(&self, x: f64) -> f64 {
        self.iter()
            .map(|(n, c)| (c * Complex64::from_polar(1.0, n as f64 * x)).re)
            .sum()
    }

    /// Physical samples on the native `N`-point grid.
    pub fn to_physical(&self) -> Result<RealGridField> {
        self.to_physical_on(self.n_modes)
    }

    /// Physical samples on an `m`-point grid, `m ≥ N` even.
    pub fn to_physical_on(&self, m: usize) -> Result<RealGridField> {
        if m < self.n_modes || !m.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "cannot sample {} modes on {m} points",
                self.n_modes
            )));
        }
        let defect = self.hermitian_defect();
        if defect > SYMMETRY_TOLERANCE {
            return Err(Error::Symmetry {
                defect,
                tolerance: SYMMETRY_TOLERANCE,
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (n, c) in self.iter() {
            buf[n.rem_euclid(m as i64) as usize] += c;
        }
        plan(m, false).process(&mut buf);
        let scale = buf.iter().map(|z| z.re.abs()).fold(1.0, f64::max);
        let residue = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if residue > SYMMETRY_TOLERANCE * scale {
            return Err(Error::Symmetry {
                defect: residue,
                tolerance: SYMMETRY_TOLERANCE,
            });
        }
        Ok(RealGridField {
            values: buf.into_iter().map(|z| z.re).collect(),
        })
    }

    /// Trapezoid (discrete Fourier) coefficients of grid samples, `N` = number of
    /// points. The Nyquist bin is split evenly between `±N/2`.
    pub fn to_spectral(field: &RealGridField) -> Result<FourierField> {
        project(&field.values, field.n_points())
    }
}

/// Discrete Fourier coefficients of `values` truncated to `n_modes` harmonics.
/// When `n_modes` equals the number of samples the Nyquist bin is split.
pub fn project(values: &[f64], n_modes: usize) -> Result<FourierField> {
    let m = values.len();
    if !m.is_multiple_of(2) || m < 4 {
        return Err(Error::InvalidGrid(format!(
            "need an even number of at least 4 points, got {m}"
        )));
    }
    if n_modes > m {
        return Err(Error::InvalidGrid(format!(
            "{m} samples cannot resolve {n_modes} modes"
        )));
    }
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(m, true).process(&mut buf);
    let inv = 1.0 / m as f64;
    let mut out = FourierField::zeros(n_modes)?;
    let half = out.max_index();
    for n in -half..=half {
        let mut c = buf[n.rem_euclid(m as i64) as usize] * inv;
        if n_modes == m && n.abs() == half {
            c *= 0.5;
        }
        if n == 0 {
            c.im = 0.0;
        }
        out.set(n, c);
    }
    Ok(out)
}

fn check_modes(n_modes: usize) -> Result<()> {
    if n_modes < 2 || !n_modes.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "mode count must be even and at least 2, got {n_modes}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Direct quadrature of the coefficient integral on a dense grid.
    fn quad_coeff(f: impl Fn(f64) -> f64, n: i64, points: usize) -> Complex64 {
        let h = TWO_PI / points as f64;
        grid_points(points)
            .map(|x| f(x) * Complex64::from_polar(1.0, -(n as f64) * x))
            .sum::<Complex64>()
            * h
            / TWO_PI
    }

    fn fig1_density(x: f64) -> f64 {
        (2.0 + x.sin() + 0.8 * (2.0 * x).cos() - 0.2 * (2.0 * x).sin()) / (4.0 * PI)
    }

    #[test]
    fn rejects_odd_or_tiny_grids() {
        assert!(FourierField::to_spectral(&RealGridField::new(vec![1.0; 7]).unwrap()).is_err());
        assert!(FourierField::to_spectral(&RealGridField::new(vec![1.0; 2]).unwrap()).is_err());
        assert!(FourierField::zeros(3).is_err());
    }

    #[test]
    fn constant_field_coefficients() {
        let g = RealGridField::from_fn(16, |_| 1.0 / TWO_PI).unwrap();
        let f = FourierField::to_spectral(&g).unwrap();
        for (n, cn) in f.iter() {
            let want = if n == 0 { 1.0 / TWO_PI } else { 0.0 };
            assert_abs_diff_eq!(cn.re, want, epsilon = 1e-15);
            assert_abs_diff_eq!(cn.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn sine_coefficients() {
        let g = RealGridField::from_fn(32, f64::sin).unwrap();
        let f = FourierField::to_spectral(&g).unwrap();
        assert_abs_diff_eq!((f.get(1) - c(0.0, -0.5)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((f.get(-1) - c(0.0, 0.5)).norm(), 0.0, epsilon = 1e-15);
        for (n, cn) in f.iter().filter(|(n, _)| n.abs() != 1) {
            assert!(cn.norm() < 1e-15, "c_{n} = {cn}");
        }
        let back = FourierField::from_nonnegative(32, &[c(0.0, 0.0), c(0.0, -0.5)])
            .unwrap()
            .to_physical()
            .unwrap();
        for (x, v) in back.points().zip(back.values()) {
            assert_abs_diff_eq!(*v, x.sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn fig1_density_coefficients_match_quadrature() {
        let f =
            FourierField::to_spectral(&RealGridField::from_fn(64, fig1_density).unwrap()).unwrap();
        let hand = [
            (0, c(1.0 / TWO_PI, 0.0)),
            (1, c(0.0, -1.0 / (8.0 * PI))),
            (2, c(0.4, 0.1) / (4.0 * PI)),
        ];
        for (n, want) in hand {
            assert!((f.get(n) - want).norm() < 1e-15, "n = {n}");
            let quad = quad_coeff(fig1_density, n, 4096);
            assert!((f.get(n) - quad).norm() < 1e-14, "n = {n}");
        }
        assert!(f.get(3).norm() < 1e-16);
    }

    #[test]
    fn nyquist_mode_round_trips() {
        let g = RealGridField::from_fn(8, |x| (4.0 * x).cos()).unwrap();
        let f = FourierField::to_spectral(&g).unwrap();
        assert_abs_diff_eq!(f.get(4).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.get(-4).re, 0.5, epsilon = 1e-15);
        let back = f.to_physical().unwrap();
        for (a, b) in back.values().iter().zip(g.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn to_physical_rejects_asymmetric_coefficients() {
        let mut f = FourierField::zeros(8).unwrap();
        f.set(1, c(1.0, 0.0));
        assert!(matches!(f.to_physical(), Err(Error::Symmetry { .. })));
    }

    #[test]
    fn pairing_examples() {
        let s = FourierField::to_spectral(&RealGridField::from_fn(16, f64::sin).unwrap()).unwrap();
        assert_abs_diff_eq!(FourierField::pairing(&s, &s).unwrap(), PI, epsilon = 1e-14);

        let unit = FourierField::uniform_density(16).unwrap();
        let rho =
            FourierField::to_spectral(&RealGridField::from_fn(16, fig1_density).unwrap()).unwrap();
        assert_abs_diff_eq!(
            FourierField::pairing(&unit, &rho).unwrap(),
            1.0 / TWO_PI,
            epsilon = 1e-15
        );

        let x0 = 0.7;
        let k = FourierField::to_spectral(&RealGridField::from_fn(16, |x| (x - x0).cos()).unwrap())
            .unwrap();
        let closed = TWO_PI * (Complex64::from_polar(1.0, -x0) * rho.get(-1)).re;
        let grid = RealGridField::from_fn(16, |x| (x - x0).cos() * fig1_density(x)).unwrap();
        let quad: f64 = grid.values().iter().sum::<f64>() * TWO_PI / 16.0;
        let paired = FourierField::pairing(&k, &rho).unwrap();
        assert_abs_diff_eq!(paired, closed, epsilon = 1e-14);
        assert_abs_diff_eq!(paired, quad, epsilon = 1e-14);

        assert!(FourierField::pairing(&k, &FourierField::zeros(8).unwrap()).is_err());
    }

    #[test]
    fn convolution_examples() {
        let n_modes = 16;
        let alpha: f64 = 0.3;
        let sin_kernel = FourierField::to_spectral(
            &RealGridField::from_fn(n_modes, |z| (-z - alpha).sin()).unwrap(),
        )
        .unwrap();
        let uniform = FourierField::uniform_density(n_modes).unwrap();
        let out = FourierField::convolve(&sin_kernel, &uniform).unwrap();
        assert!(out.max_abs() < 1e-16);

        let cos_kernel =
            FourierField::to_spectral(&RealGridField::from_fn(n_modes, f64::cos).unwrap()).unwrap();
        let a = c(0.03, -0.05);
        let rho = FourierField::from_nonnegative(n_modes, &[c(1.0 / TWO_PI, 0.0), a]).unwrap();
        let out = FourierField::convolve(&cos_kernel, &rho).unwrap();
        assert!((out.get(1) - a * PI).norm() < 1e-15);
        assert!((out.get(-1) - (a * PI).conj()).norm() < 1e-15);

        assert!(FourierField::convolve(&cos_kernel, &FourierField::zeros(8).unwrap()).is_err());
    }

    #[test]
    fn convolution_with_narrow_density_matches_quadrature() {
        // band-limited bump: truncated von Mises-like coefficients
        let n_modes = 32;
        let y0 = 1.1;
        let rho = FourierField::from_nonnegative(
            n_modes,
            &(0..=16)
                .map(|n| {
                    Complex64::from_polar(
                        (-(n as f64).powi(2) / 20.0).exp() / TWO_PI,
                        -(n as f64) * y0,
                    )
                })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let kernel_fn = |z: f64| (z + 0.2).sin() + 0.5 * (2.0 * z).cos();
        let kernel =
            FourierField::to_spectral(&RealGridField::from_fn(n_modes, kernel_fn).unwrap())
                .unwrap();
        let conv = FourierField::convolve(&kernel, &rho).unwrap();
        let points = 512;
        let h = TWO_PI / points as f64;
        for x in [0.0, 0.5, 2.0, 4.4] {
            let quad: f64 = grid_points(points)
                .map(|y| kernel_fn(x - y) * rho.evaluate(y))
                .sum::<f64>()
                * h;
            assert_abs_diff_eq!(conv.evaluate(x), quad, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_examples() {
        let constant = FourierField::uniform_density(8).unwrap();
        assert_eq!(constant.derivative().max_abs(), 0.0);

        let s = FourierField::to_spectral(&RealGridField::from_fn(8, f64::sin).unwrap()).unwrap();
        let cosine =
            FourierField::to_spectral(&RealGridField::from_fn(8, f64::cos).unwrap()).unwrap();
        assert!(s.derivative().max_diff(&cosine).unwrap() < 1e-15);
    }

    #[test]
    fn derivative_matches_centered_differences() {
        let f = FourierField::from_nonnegative(
            16,
            &[c(0.2, 0.0), c(0.1, -0.3), c(-0.05, 0.02), c(0.01, 0.04)],
        )
        .unwrap();
        let df = f.derivative();
        let mut errors = Vec::new();
        for h in [1e-2, 5e-3] {
            let err = [0.1, 1.3, 2.9, 5.0]
                .iter()
                .map(|&x| {
                    ((f.evaluate(x + h) - f.evaluate(x - h)) / (2.0 * h) - df.evaluate(x)).abs()
                })
                .fold(0.0, f64::max);
            errors.push(err);
        }
        // second-order finite differences: halving h quarters the error
        let ratio = errors[0] / errors[1];
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn product_matches_pointwise_multiplication() {
        let f =
            FourierField::from_nonnegative(16, &[c(0.3, 0.0), c(0.1, 0.2), c(0.0, -0.1)]).unwrap();
        let g = FourierField::from_nonnegative(16, &[c(-0.1, 0.0), c(0.0, 0.4), c(0.05, 0.05)])
            .unwrap();
        let p = FourierField::product(&f, &g).unwrap();
        for x in [0.0, 0.7, 3.0, 5.5] {
            assert_abs_diff_eq!(
                p.evaluate(x),
                f.evaluate(x) * g.evaluate(x),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn rotation_shifts_the_field() {
        let f =
            FourierField::from_nonnegative(16, &[c(0.3, 0.0), c(0.1, 0.2), c(0.0, -0.1)]).unwrap();
        let r = f.rotated(0.9);
        for x in [0.0, 1.0, 4.0] {
            assert_abs_diff_eq!(r.evaluate(x), f.evaluate(x - 0.9), epsilon = 1e-14);
        }
        let m = f.reflected();
        assert_abs_diff_eq!(m.evaluate(1.2), f.evaluate(-1.2), epsilon = 1e-14);
    }
}
