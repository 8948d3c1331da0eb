//! Uniform time grids and piecewise-constant control signals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{AdmissibleSet, ControlVector};

/// Uniform grid on `[0, T]` with step `τ`. States are additionally stored at
/// the half-step nodes `t = jτ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    step: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, step: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon and step must be positive, got T = {horizon}, tau = {step}"
            )));
        }
        let ratio = horizon / step;
        let n_steps = ratio.round();
        if n_steps < 1.0 || (ratio - n_steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "T/tau = {ratio} is not an integer"
            )));
        }
        Ok(Self {
            horizon,
            step,
            n_steps: n_steps as usize,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of full steps `T/τ`.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Full-step node `t_k = kτ`.
    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// Half-step node `jτ/2`.
    pub fn half_node(&self, j: usize) -> f64 {
        j as f64 * 0.5 * self.step
    }

    /// Index of the full step containing `t` (right-continuous, clamped).
    pub fn step_index(&self, t: f64) -> usize {
        let k = (t / self.step + 1e-9).floor();
        (k.max(0.0) as usize).min(self.n_steps - 1)
    }

    /// Nearest full-step node index to `t`.
    pub fn nearest_node(&self, t: f64) -> usize {
        ((t / self.step).round().max(0.0) as usize).min(self.n_steps)
    }
}

/// Control values `u_k` held constant on `[t_k, t_{k+1})`, `k = 0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    grid: TimeGrid,
    values: Vec<ControlVector>,
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, values: Vec<ControlVector>) -> Result<Self> {
        if values.len() != grid.n_steps() {
            return Err(Error::GridMismatch(format!(
                "{} control values for {} steps",
                values.len(),
                grid.n_steps()
            )));
        }
        let dim = values.first().map(|v| v.dim()).unwrap_or(0);
        if dim == 0 || values.iter().any(|v| v.dim() != dim) {
            return Err(Error::InvalidParameter(
                "inconsistent control dimension".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the left node of every step.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let values = (0..grid.n_steps())
            .map(|k| ControlVector(f(grid.node(k))))
            .collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: TimeGrid, value: &[f64]) -> Result<Self> {
        Self::from_fn(grid, |_| value.to_vec())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values[0].dim()
    }

    pub fn values(&self) -> &[ControlVector] {
        &self.values
    }

    /// Value on step `k`.
    pub fn at(&self, k: usize) -> &ControlVector {
        &self.values[k]
    }

    /// Value in force at time `t`.
    pub fn at_time(&self, t: f64) -> &ControlVector {
        &self.values[self.grid.step_index(t)]
    }

    pub fn check_grid(&self, other: &ControlSignal) -> Result<()> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::GridMismatch(
                "control signals live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// Node-wise membership in `set`.
    pub fn check_feasible(&self, set: &AdmissibleSet) -> Result<()> {
        self.values.iter().try_for_each(|v| set.check(v))
    }

    /// Convex combination `self + lambda (target - self)`.
    pub fn towards(&self, target: &ControlSignal, lambda: f64) -> Result<ControlSignal> {
        self.check_grid(target)?;
        Ok(ControlSignal {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&target.values)
                .map(|(a, b)| a.towards(b, lambda))
                .collect(),
        })
    }

    /// Max node-wise Euclidean distance.
    pub fn max_distance(&self, other: &ControlSignal) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                a.0.iter()
                    .zip(&b.0)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max))
    }

    /// Change of all values to `f(t, u)`.
    pub fn map(&self, f: impl Fn(f64, &ControlVector) -> Vec<f64>) -> Result<ControlSignal> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, v)| ControlVector(f(self.grid.node(k), v)))
            .collect();
        ControlSignal::new(self.grid, values)
    }
}
