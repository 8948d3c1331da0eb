//! Analytic co-state for μ-independent fields.
//!
//! With `u₂ ≡ 0` the Kuramoto field is a pure rotation `V = u₁(t)`, the
//! adjoint reduces to a transport equation for `ψ`, and the co-state density
//! is `ζ_t = ∂_xψ_t ρ_t` with `ψ_t(x) = -(δℓ/δμ)(μ_T, x + ∫_t^T u₁)`.

use serde::Serialize;

use crate::adjoint::integrate_backward;
use crate::error::{Error, Result};
use crate::forward::integrate_forward;
use crate::models::{ControlledModel, KuramotoModel};
use crate::spectral::FourierField;
use crate::time::ControlSignal;

#[derive(Debug, Clone, Serialize)]
pub struct LocalAdjointReport {
    /// Max over the checked nodes and grid points of `|ζ_t - ∂_xψ_t ρ_t|`.
    pub max_error: f64,
    /// Max of `|∂_xψ_t ρ_t|` over the same points.
    pub max_reference: f64,
    pub nodes_checked: usize,
    pub points: usize,
}

/// Compares the adjoint solver with the analytic local-case co-state at
/// every full-step node, on `points` grid points.
pub fn local_adjoint_check(
    rho0: &FourierField,
    u: &ControlSignal,
    model: &KuramotoModel,
    points: usize,
) -> Result<LocalAdjointReport> {
    if u.values().iter().any(|v| v[1] != 0.0) {
        return Err(Error::InvalidParameter(
            "local-case check needs a vanishing coupling control".into(),
        ));
    }
    let grid = *u.grid();
    let traj = integrate_forward(rho0, u, model)?;
    let cot = integrate_backward(&traj, u, model)?;
    let slope = model.cost().dmu(traj.last())?;

    let n = grid.n_steps();
    // s_k = ∫_{t_k}^T u₁, exact for piecewise-constant controls
    let mut shift = vec![0.0; n + 1];
    for k in (0..n).rev() {
        shift[k] = shift[k + 1] + grid.step() * u.at(k)[0];
    }

    let mut max_error: f64 = 0.0;
    let mut max_reference: f64 = 0.0;
    for (k, s) in shift.iter().enumerate() {
        // ∂_xψ_t(x) = -D_μℓ(μ_T; x + s)
        let grad_psi = slope.rotated(-s).to_physical_on(points)?;
        let rho = traj
            .at_node(k)
            .expect("full storage")
            .to_physical_on(points)?;
        let zeta = cot
            .at_node(k)
            .expect("nodes stored")
            .to_physical_on(points)?;
        for ((g, r), z) in grad_psi
            .values()
            .iter()
            .zip(rho.values())
            .zip(zeta.values())
        {
            let reference = -g * r;
            max_reference = max_reference.max(reference.abs());
            max_error = max_error.max((z - reference).abs());
        }
    }
    Ok(LocalAdjointReport {
        max_error,
        max_reference,
        nodes_checked: n + 1,
        points,
    })
}
