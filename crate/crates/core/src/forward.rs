//! Forward integration of the nonlocal continuity equation in Fourier space.
//!
//! The dynamics are advanced with classical RK4 at step `τ/2`, so the state
//! is available at every half-step node `jτ/2`. The backward sweep reads its
//! RK4 midpoints from these nodes without interpolation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{check_normalized, ControlVector, ControlledModel};
use crate::spectral::FourierField;
use crate::time::{ControlSignal, TimeGrid};

/// Coefficient magnitude above which a solve is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

/// How many half-step states a forward solve keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Storage {
    /// Every half-step node.
    #[default]
    Full,
    /// Only every `every`-th full-step node; windows in between are
    /// recomputed on demand.
    Checkpoint { every: usize },
}

/// Snapshots of a spectral state along a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    /// Distance between stored snapshots, in half steps.
    stride: usize,
    snapshots: Vec<FourierField>,
}

impl Trajectory {
    pub(crate) fn new(grid: TimeGrid, stride: usize, snapshots: Vec<FourierField>) -> Self {
        debug_assert_eq!(snapshots.len(), 2 * grid.n_steps() / stride + 1);
        Self {
            grid,
            stride,
            snapshots,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Half steps between consecutive snapshots: 1 for a full forward
    /// trajectory, 2 for a co-trajectory stored at full-step nodes.
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn snapshots(&self) -> &[FourierField] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Time of snapshot `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.grid.half_node(i * self.stride)
    }

    pub fn first(&self) -> &FourierField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &FourierField {
        self.snapshots.last().expect("trajectories are never empty")
    }

    /// State at half-step node `j`, if stored.
    pub fn at_half(&self, j: usize) -> Option<&FourierField> {
        j.is_multiple_of(self.stride)
            .then(|| self.snapshots.get(j / self.stride))
            .flatten()
    }

    /// State at full-step node `k`, if stored.
    pub fn at_node(&self, k: usize) -> Option<&FourierField> {
        self.at_half(2 * k)
    }

    /// Snapshot nearest to time `t`.
    pub fn nearest(&self, t: f64) -> (f64, &FourierField) {
        let h = 0.5 * self.grid.step() * self.stride as f64;
        let i = ((t / h).round().max(0.0) as usize).min(self.snapshots.len() - 1);
        (self.time(i), &self.snapshots[i])
    }

    /// Max Hermitian defect over all snapshots.
    pub fn hermitian_defect(&self) -> f64 {
        self.snapshots
            .iter()
            .map(FourierField::hermitian_defect)
            .fold(0.0, f64::max)
    }
}

/// One classical RK4 step `y(t) → y(t + h)`.
pub fn rk4_step(
    t: f64,
    y: &FourierField,
    h: f64,
    rhs: impl Fn(f64, &FourierField) -> Result<FourierField>,
) -> Result<FourierField> {
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + 0.5 * h, &y.axpy(0.5 * h, &k1)?)?;
    let k3 = rhs(t + 0.5 * h, &y.axpy(0.5 * h, &k2)?)?;
    let k4 = rhs(t + h, &y.axpy(h, &k3)?)?;
    let mut out = y.clone();
    let w = h / 6.0;
    for (i, slot) in out.coeffs_mut().iter_mut().enumerate() {
        let incr = k1.coeffs()[i] + (k2.coeffs()[i] + k3.coeffs()[i]) * 2.0 + k4.coeffs()[i];
        *slot += incr * w;
    }
    Ok(out)
}

pub(crate) fn check_divergence(state: &FourierField, time: f64) -> Result<()> {
    let magnitude = state.max_abs();
    if !magnitude.is_finite() || magnitude > DIVERGENCE_THRESHOLD {
        return Err(Error::Divergence { time, magnitude });
    }
    Ok(())
}

/// `dâ/dt` of the continuity equation, after checking `u ∈ U`.
pub fn rhs_continuity(
    model: &dyn ControlledModel,
    t: f64,
    a: &FourierField,
    u: &ControlVector,
) -> Result<FourierField> {
    model.admissible().check(u)?;
    model.continuity_rhs(t, a, u)
}

fn check_inputs(rho0: &FourierField, u: &ControlSignal, model: &dyn ControlledModel) -> Result<()> {
    check_normalized(rho0)?;
    if u.dim() != model.control_dim() {
        return Err(Error::InvalidParameter(format!(
            "control has dimension {}, model expects {}",
            u.dim(),
            model.control_dim()
        )));
    }
    u.check_feasible(model.admissible())
}

/// Advances `state` through half steps `from..to` (absolute half-step indices),
/// calling `visit(j, state)` after each.
fn march(
    state: &mut FourierField,
    from: usize,
    to: usize,
    u: &ControlSignal,
    model: &dyn ControlledModel,
    mut visit: impl FnMut(usize, &FourierField),
) -> Result<()> {
    let grid = u.grid();
    let h = 0.5 * grid.step();
    for j in from..to {
        let t = grid.half_node(j);
        let control = u.at(j / 2);
        *state = rk4_step(t, state, h, |s, y| model.continuity_rhs(s, y, control))?;
        let t_next = grid.half_node(j + 1);
        check_divergence(state, t_next)?;
        visit(j + 1, state);
    }
    Ok(())
}

/// Solves the continuity equation from `rho0` under control `u`, storing the
/// state at every half-step node.
pub fn integrate_forward(
    rho0: &FourierField,
    u: &ControlSignal,
    model: &dyn ControlledModel,
) -> Result<Trajectory> {
    integrate_forward_with(rho0, u, model, Storage::Full)
}

pub fn integrate_forward_with(
    rho0: &FourierField,
    u: &ControlSignal,
    model: &dyn ControlledModel,
    storage: Storage,
) -> Result<Trajectory> {
    check_inputs(rho0, u, model)?;
    let grid = *u.grid();
    let stride = match storage {
        Storage::Full => 1,
        Storage::Checkpoint { every } => {
            if every == 0 || !grid.n_steps().is_multiple_of(every) {
                return Err(Error::InvalidParameter(format!(
                    "checkpoint interval {every} does not divide {} steps",
                    grid.n_steps()
                )));
            }
            2 * every
        }
    };
    let total = 2 * grid.n_steps();
    let mut snapshots = Vec::with_capacity(total / stride + 1);
    snapshots.push(rho0.clone());
    let mut state = rho0.clone();
    march(&mut state, 0, total, u, model, |j, s| {
        if j % stride == 0 {
            snapshots.push(s.clone());
        }
    })?;
    Ok(Trajectory::new(grid, stride, snapshots))
}

/// Terminal state only; no intermediate storage.
pub fn terminal_state(
    rho0: &FourierField,
    u: &ControlSignal,
    model: &dyn ControlledModel,
) -> Result<FourierField> {
    check_inputs(rho0, u, model)?;
    let mut state = rho0.clone();
    march(&mut state, 0, 2 * u.grid().n_steps(), u, model, |_, _| {})?;
    Ok(state)
}

/// Cost `ℓ(μ_T)` of a control.
pub fn evaluate_cost(
    rho0: &FourierField,
    u: &ControlSignal,
    model: &dyn ControlledModel,
) -> Result<f64> {
    model.cost().eval(&terminal_state(rho0, u, model)?)
}

/// Half-step states of full steps `k0..=k1`, recomputed from the stored
/// snapshot at node `k0`. Element `i` is the state at half node `2 k0 + i`.
pub fn recompute_window(
    traj: &Trajectory,
    k0: usize,
    k1: usize,
    u: &ControlSignal,
    model: &dyn ControlledModel,
) -> Result<Vec<FourierField>> {
    let start = traj
        .at_node(k0)
        .ok_or_else(|| Error::GridMismatch(format!("node {k0} is not a stored checkpoint")))?;
    let mut out = Vec::with_capacity(2 * (k1 - k0) + 1);
    out.push(start.clone());
    let mut state = start.clone();
    march(&mut state, 2 * k0, 2 * k1, u, model, |_, s| {
        out.push(s.clone())
    })?;
    Ok(out)
}

/// Minimum of the reconstructed physical density over every snapshot,
/// sampled on `points` nodes. Negative values are reported, never clipped.
pub fn density_min(traj: &Trajectory, points: usize) -> Result<f64> {
    traj.snapshots()
        .iter()
        .map(|s| s.to_physical_on(points).map(|g| g.min()))
        .try_fold(f64::INFINITY, |acc, m| m.map(|m| acc.min(m)))
}
