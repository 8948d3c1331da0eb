//! Backward integration of the adjoint balance law.
//!
//! The co-state density `ζ_t` is a signed density with no mass constraint.
//! It is integrated from `ζ_T = -D_μℓ(μ_T) ρ_T` back to `t = 0` with RK4 at
//! step `τ`, reading the forward state at `t_k`, `t_k + τ/2` and `t_{k+1}`
//! from the stored trajectory.

use crate::error::{Error, Result};
use crate::forward::{check_divergence, recompute_window, rk4_step, Trajectory};
use crate::models::{ControlVector, ControlledModel};
use crate::spectral::FourierField;
use crate::time::ControlSignal;

/// `ζ_T` for the model's terminal cost.
pub fn terminal_adjoint(mu_t: &FourierField, model: &dyn ControlledModel) -> Result<FourierField> {
    model.cost().terminal_adjoint(mu_t)
}

/// `dζ̂/dt` of the adjoint equation, after checking `u ∈ U`.
pub fn rhs_adjoint(
    model: &dyn ControlledModel,
    t: f64,
    b: &FourierField,
    a: &FourierField,
    u: &ControlVector,
) -> Result<FourierField> {
    model.admissible().check(u)?;
    model.adjoint_rhs(t, b, a, u)
}

/// Read access to forward states at half-step nodes, recomputing
/// checkpoint windows when the trajectory is decimated.
pub(crate) struct ForwardReader<'a> {
    traj: &'a Trajectory,
    u: &'a ControlSignal,
    model: &'a dyn ControlledModel,
    window: Option<(usize, Vec<FourierField>)>,
}

impl<'a> ForwardReader<'a> {
    pub(crate) fn new(
        traj: &'a Trajectory,
        u: &'a ControlSignal,
        model: &'a dyn ControlledModel,
    ) -> Result<Self> {
        if traj.grid() != u.grid() {
            return Err(Error::GridMismatch(
                "trajectory and control grids differ".into(),
            ));
        }
        Ok(Self {
            traj,
            u,
            model,
            window: None,
        })
    }

    /// States at half nodes `2k`, `2k + 1`, `2k + 2`.
    pub(crate) fn step_states(&mut self, k: usize) -> Result<[FourierField; 3]> {
        if self.traj.stride() == 1 {
            let get = |j: usize| self.traj.at_half(j).cloned().expect("stored");
            return Ok([get(2 * k), get(2 * k + 1), get(2 * k + 2)]);
        }
        let every = self.traj.stride() / 2;
        let k0 = (k / every) * every;
        if self.window.as_ref().map(|(w, _)| *w) != Some(k0) {
            let states = recompute_window(self.traj, k0, k0 + every, self.u, self.model)?;
            self.window = Some((k0, states));
        }
        let (_, states) = self.window.as_ref().expect("window loaded");
        let i = 2 * (k - k0);
        Ok([
            states[i].clone(),
            states[i + 1].clone(),
            states[i + 2].clone(),
        ])
    }
}

/// Solves the adjoint system backward along `traj`, returning `ζ` at every
/// full-step node.
pub fn integrate_backward(
    traj: &Trajectory,
    u: &ControlSignal,
    model: &dyn ControlledModel,
) -> Result<Trajectory> {
    let terminal = terminal_adjoint(traj.last(), model)?;
    integrate_backward_from(traj, u, model, terminal)
}

/// As [`integrate_backward`] with an explicit terminal density.
pub fn integrate_backward_from(
    traj: &Trajectory,
    u: &ControlSignal,
    model: &dyn ControlledModel,
    terminal: FourierField,
) -> Result<Trajectory> {
    u.check_feasible(model.admissible())?;
    terminal.check_same(traj.last())?;
    let grid = *u.grid();
    let n = grid.n_steps();
    let mut reader = ForwardReader::new(traj, u, model)?;
    let mut out = vec![terminal.clone(); n + 1];
    let mut state = terminal;
    let h = -grid.step();
    for k in (0..n).rev() {
        let [a_left, a_mid, a_right] = reader.step_states(k)?;
        let control = u.at(k);
        let t_right = grid.node(k + 1);
        let t_mid = t_right + 0.5 * h;
        state = rk4_step(t_right, &state, h, |s, b| {
            let a = if s == t_right {
                &a_right
            } else if s == t_mid {
                &a_mid
            } else {
                &a_left
            };
            model.adjoint_rhs(s, b, a, control)
        })?;
        check_divergence(&state, grid.node(k))?;
        out[k] = state.clone();
    }
    Ok(Trajectory::new(grid, 2, out))
}
