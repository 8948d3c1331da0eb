//! Finite-difference check of the first-order cost increment along a weak
//! control variation `u^λ = u + λ(ū - u)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::evaluate_cost;
use crate::models::ControlledModel;
use crate::optimizer::{linearize, non_extremality, CellQuadrature};
use crate::spectral::FourierField;
use crate::time::ControlSignal;

/// Default variation sizes.
pub const DEFAULT_LAMBDAS: [f64; 4] = [1e-3, 2e-3, 4e-3, 8e-3];

#[derive(Debug, Clone, Serialize)]
pub struct SlopeSample {
    pub lambda: f64,
    /// `-λ ⟨ū - u, d[u]⟩` from the adjoint.
    pub predicted: f64,
    /// `𝓘[u^λ] - 𝓘[u]` from forward solves.
    pub actual: f64,
    pub ratio: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    pub cost: f64,
    /// `⟨ū - u, d[u]⟩`.
    pub pairing: f64,
    pub samples: Vec<SlopeSample>,
    /// Least-squares slope of `log|residual|` against `log λ`; `None` when
    /// every residual vanishes.
    pub residual_order: Option<f64>,
    pub max_ratio_deviation: f64,
}

/// Slope of the least-squares line through `(x_i, y_i)`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Compares the adjoint prediction of `𝓘[u^λ] - 𝓘[u]` with the actual
/// increment for each `λ`.
pub fn increment_slope_check(
    rho0: &FourierField,
    u: &ControlSignal,
    ubar: &ControlSignal,
    model: &dyn ControlledModel,
    lambdas: &[f64],
    quadrature: CellQuadrature,
) -> Result<SlopeReport> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > 0.0 && *l <= 0.1)) {
        return Err(Error::InvalidParameter(
            "variation sizes must lie in (0, 0.1]".into(),
        ));
    }
    ubar.check_feasible(model.admissible())?;
    let lin = linearize(rho0, u, model, quadrature)?;
    let pairing = non_extremality(u, ubar, &lin.switching)?;
    let mut samples = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let varied = u.towards(ubar, lambda)?;
        let actual = evaluate_cost(rho0, &varied, model)? - lin.cost;
        let predicted = -lambda * pairing;
        let ratio = if predicted == 0.0 && actual == 0.0 {
            1.0
        } else {
            actual / predicted
        };
        samples.push(SlopeSample {
            lambda,
            predicted,
            actual,
            ratio,
            residual: actual - predicted,
        });
    }
    let logs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.residual != 0.0)
        .map(|s| (s.lambda.ln(), s.residual.abs().ln()))
        .collect();
    let residual_order = (logs.len() >= 2).then(|| fit_slope(&logs));
    let max_ratio_deviation = samples
        .iter()
        .map(|s| (s.ratio - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(SlopeReport {
        cost: lin.cost,
        pairing,
        samples,
        residual_order,
        max_ratio_deviation,
    })
}
