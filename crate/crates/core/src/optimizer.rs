//! Indirect descent with backtracking.
//!
//! Each outer iteration solves the state forward and the co-state backward,
//! forms the switching function `d_j(t) = ∫ V^j(x, μ_t) dν_t(x)`, maximizes
//! the Hamiltonian pointwise to get a target control `ū`, and moves along
//! `ū - u` with an Armijo backtracking rule. The non-extremality
//! `ℰ[u] = ⟨ū - u, d⟩_{L²}` is nonnegative and vanishes exactly at controls
//! satisfying the maximum condition.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adjoint::{integrate_backward, ForwardReader};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forward::{evaluate_cost, integrate_forward, Trajectory};
use crate::models::{AdmissibleSet, ControlVector, ControlledModel};
use crate::spectral::FourierField;
use crate::time::{ControlSignal, TimeGrid};

/// How the switching function is averaged over a control step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellQuadrature {
    /// Value at the left node `t_k`.
    LeftNode,
    /// Simpson average over `[t_k, t_{k+1}]`; the co-state midpoint comes from
    /// cubic Hermite interpolation with the adjoint right-hand side as slope.
    #[default]
    Simpson,
}

/// Switching function on the full-step nodes and its per-step averages.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingFunction {
    grid: TimeGrid,
    nodes: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
}

impl SwitchingFunction {
    pub fn new(grid: TimeGrid, nodes: Vec<Vec<f64>>, cells: Vec<Vec<f64>>) -> Result<Self> {
        if nodes.len() != grid.n_steps() + 1 || cells.len() != grid.n_steps() {
            return Err(Error::GridMismatch(
                "switching function length mismatch".into(),
            ));
        }
        if nodes.iter().chain(&cells).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite switching function".into(),
            ));
        }
        Ok(Self { grid, nodes, cells })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `d(t_k)`, `k = 0..=n`.
    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    /// Value used on step `k`.
    pub fn cells(&self) -> &[Vec<f64>] {
        &self.cells
    }
}

fn add_scaled(acc: &mut [f64], w: f64, v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
}

/// Evaluates `d` from a forward trajectory and its co-trajectory.
pub fn switching_function(
    traj: &Trajectory,
    cotraj: &Trajectory,
    u: &ControlSignal,
    model: &dyn ControlledModel,
    quadrature: CellQuadrature,
) -> Result<SwitchingFunction> {
    let grid = *u.grid();
    if cotraj.grid() != &grid || cotraj.len() != grid.n_steps() + 1 {
        return Err(Error::GridMismatch(
            "co-trajectory does not match the control grid".into(),
        ));
    }
    let mut reader = ForwardReader::new(traj, u, model)?;
    let n = grid.n_steps();
    let mut nodes = Vec::with_capacity(n + 1);
    let mut cells = Vec::with_capacity(n);
    for k in 0..n {
        let [a_left, a_mid, a_right] = reader.step_states(k)?;
        let b_left = cotraj.at_node(k).expect("co-state stored at nodes");
        let t_left = grid.node(k);
        let d_left = model.switching(t_left, &a_left, b_left)?;
        let cell = match quadrature {
            CellQuadrature::LeftNode => d_left.clone(),
            CellQuadrature::Simpson => {
                let b_right = cotraj.at_node(k + 1).expect("co-state stored at nodes");
                let t_right = grid.node(k + 1);
                let control = u.at(k);
                let slope_left = model.adjoint_rhs(t_left, b_left, &a_left, control)?;
                let slope_right = model.adjoint_rhs(t_right, b_right, &a_right, control)?;
                let tau = grid.step();
                let b_mid = b_left
                    .add(b_right)?
                    .scaled(0.5)
                    .axpy(tau / 8.0, &slope_left.sub(&slope_right)?)?;
                let d_mid = model.switching(t_left + 0.5 * tau, &a_mid, &b_mid)?;
                let d_right = model.switching(t_right, &a_right, b_right)?;
                let mut avg = vec![0.0; d_left.len()];
                add_scaled(&mut avg, 1.0 / 6.0, &d_left);
                add_scaled(&mut avg, 4.0 / 6.0, &d_mid);
                add_scaled(&mut avg, 1.0 / 6.0, &d_right);
                avg
            }
        };
        nodes.push(d_left);
        cells.push(cell);
    }
    let last = model.switching(
        grid.node(n),
        traj.last(),
        cotraj.at_node(n).expect("co-state stored at nodes"),
    )?;
    nodes.push(last);
    SwitchingFunction::new(grid, nodes, cells)
}

/// Pointwise maximizer of `υ ↦ υ·d(t)` over `U`; where `d` gives no
/// preference the value of `current` is kept.
pub fn target_control(
    d: &SwitchingFunction,
    set: &AdmissibleSet,
    current: &ControlSignal,
) -> Result<ControlSignal> {
    if d.grid() != current.grid() {
        return Err(Error::GridMismatch(
            "switching function and control grids differ".into(),
        ));
    }
    let values: Vec<ControlVector> = d
        .cells
        .iter()
        .zip(current.values())
        .map(|(dk, uk)| set.maximize_linear(dk, uk))
        .collect();
    ControlSignal::new(*current.grid(), values)
}

/// `⟨ū - u, d⟩_{L²}` by the rectangle rule on the step values of `d`.
pub fn non_extremality(
    u: &ControlSignal,
    ubar: &ControlSignal,
    d: &SwitchingFunction,
) -> Result<f64> {
    u.check_grid(ubar)?;
    if d.grid() != u.grid() {
        return Err(Error::GridMismatch(
            "switching function and control grids differ".into(),
        ));
    }
    let tau = u.grid().step();
    Ok(tau
        * u.values()
            .iter()
            .zip(ubar.values())
            .zip(&d.cells)
            .map(|((a, b), dk)| {
                b.0.iter()
                    .zip(&a.0)
                    .zip(dk)
                    .map(|((x, y), w)| (x - y) * w)
                    .sum::<f64>()
            })
            .sum::<f64>())
}

/// Parameters of the descent loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentConfig {
    /// Armijo constant `c ∈ (0, 1)`.
    pub c: f64,
    /// Backtracking ratio `θ ∈ (0, 1)`.
    pub theta: f64,
    /// Stop once an accepted step is shorter than this.
    pub lambda_tol: f64,
    /// Largest backtracking exponent tried.
    pub j_max: u32,
    /// Maximum number of control updates.
    pub k_max: usize,
    /// Stop once `ℰ` falls below this.
    pub eps_tol: f64,
    pub quadrature: CellQuadrature,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            c: 0.01,
            theta: 0.5,
            lambda_tol: 1e-2,
            j_max: 40,
            k_max: 500,
            eps_tol: 1e-8,
            quadrature: CellQuadrature::default(),
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.c) {
            return Err(Error::InvalidParameter(format!(
                "c = {} is not in (0, 1)",
                self.c
            )));
        }
        if !open_unit(self.theta) {
            return Err(Error::InvalidParameter(format!(
                "theta = {} is not in (0, 1)",
                self.theta
            )));
        }
        if !(self.lambda_tol >= 0.0 && self.lambda_tol <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda_tol = {} is not in [0, 1]",
                self.lambda_tol
            )));
        }
        if !(self.eps_tol >= 0.0 && self.eps_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps_tol = {} is negative",
                self.eps_tol
            )));
        }
        Ok(())
    }
}

/// Result of one backtracking line search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineSearch {
    /// Accepted `θ^j`, or 0 when no exponent up to `j_max` passed.
    pub lambda: f64,
    /// Cost at the accepted point (the current cost on failure).
    pub new_cost: f64,
    /// Exponent `j` of the accepted step (`j_max + 1` on failure).
    pub backtracks: u32,
    pub accepted: bool,
}

/// Largest `θ^j`, `j ≤ j_max`, with
/// `𝓘[u + θ^j(ū - u)] - 𝓘[u] ≤ c θ^j ⟨u - ū, d⟩`.
///
/// Probes are evaluated in speculative batches of `execution.workers()`
/// exponents; the accepted exponent is always the smallest passing one.
pub fn backtracking_step(
    u: &ControlSignal,
    ubar: &ControlSignal,
    d: &SwitchingFunction,
    cost_u: f64,
    cfg: &DescentConfig,
    execution: Execution,
    evaluator: &(dyn Fn(&ControlSignal) -> Result<f64> + Sync),
) -> Result<LineSearch> {
    cfg.validate()?;
    let e = non_extremality(u, ubar, d)?;
    let failure = LineSearch {
        lambda: 0.0,
        new_cost: cost_u,
        backtracks: cfg.j_max + 1,
        accepted: false,
    };
    if e <= 0.0 {
        return Ok(failure);
    }
    let batch = execution.workers().max(1) as u32;
    let mut j = 0;
    while j <= cfg.j_max {
        let exponents: Vec<u32> = (j..=cfg.j_max.min(j + batch - 1)).collect();
        let probes = execution.map(&exponents, |&jj| {
            let lambda = cfg.theta.powi(jj as i32);
            u.towards(ubar, lambda)
                .and_then(|candidate| evaluator(&candidate))
        });
        for (&jj, probe) in exponents.iter().zip(probes) {
            let lambda = cfg.theta.powi(jj as i32);
            let cost = probe?;
            if cost - cost_u <= -cfg.c * lambda * e {
                return Ok(LineSearch {
                    lambda,
                    new_cost: cost,
                    backtracks: jj,
                    accepted: true,
                });
            }
        }
        j += batch;
    }
    Ok(failure)
}

/// One line of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `𝓘[u^k]`.
    pub cost: f64,
    /// `ℰ[u^k]`.
    pub non_extremality: f64,
    /// Accepted step `λ^k` (0 on the final record).
    pub lambda: f64,
    pub backtrack_count: u32,
    /// Seconds since the start of the run.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentStatus {
    /// `ℰ` fell below `eps_tol`.
    Extremal,
    /// An accepted step was shorter than `lambda_tol`.
    StepTolerance,
    MaxIterations,
    /// No exponent up to `j_max` satisfied the Armijo test.
    LineSearchFailed,
}

/// Everything a descent run produces.
#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub control: ControlSignal,
    pub history: Vec<IterationRecord>,
    pub status: DescentStatus,
    pub final_cost: f64,
    pub final_non_extremality: f64,
    /// Worst Hermitian defect seen in any forward or backward solve.
    pub max_hermitian_defect: f64,
    pub trajectory: Trajectory,
    pub cotrajectory: Trajectory,
}

/// Forward solve, backward solve, switching function and target control for `u`.
pub struct Linearization {
    pub trajectory: Trajectory,
    pub cotrajectory: Trajectory,
    pub cost: f64,
    pub switching: SwitchingFunction,
    pub target: ControlSignal,
    pub non_extremality: f64,
}

pub fn linearize(
    rho0: &FourierField,
    u: &ControlSignal,
    model: &dyn ControlledModel,
    quadrature: CellQuadrature,
) -> Result<Linearization> {
    let trajectory = integrate_forward(rho0, u, model)?;
    let cost = model.cost().eval(trajectory.last())?;
    let cotrajectory = integrate_backward(&trajectory, u, model)?;
    let switching = switching_function(&trajectory, &cotrajectory, u, model, quadrature)?;
    let target = target_control(&switching, model.admissible(), u)?;
    let non_extremality = non_extremality(u, &target, &switching)?;
    Ok(Linearization {
        trajectory,
        cotrajectory,
        cost,
        switching,
        target,
        non_extremality,
    })
}

/// Runs the descent loop from `u0`.
pub fn run_descent(
    rho0: &FourierField,
    u0: &ControlSignal,
    model: &dyn ControlledModel,
    cfg: &DescentConfig,
    execution: Execution,
) -> Result<DescentOutcome> {
    run_descent_with(rho0, u0, model, cfg, execution, |_| {})
}

/// As [`run_descent`], calling `observe` after every record.
pub fn run_descent_with(
    rho0: &FourierField,
    u0: &ControlSignal,
    model: &dyn ControlledModel,
    cfg: &DescentConfig,
    execution: Execution,
    mut observe: impl FnMut(&IterationRecord),
) -> Result<DescentOutcome> {
    cfg.validate()?;
    u0.check_feasible(model.admissible())?;
    let start = Instant::now();
    let evaluator = |v: &ControlSignal| evaluate_cost(rho0, v, model);

    let mut u = u0.clone();
    let mut history = Vec::new();
    let mut max_defect: f64 = 0.0;
    let mut pending: Option<DescentStatus> = None;
    let mut k = 0;
    loop {
        let lin = linearize(rho0, &u, model, cfg.quadrature)?;
        max_defect = max_defect
            .max(lin.trajectory.hermitian_defect())
            .max(lin.cotrajectory.hermitian_defect());
        let mut record = IterationRecord {
            k,
            cost: lin.cost,
            non_extremality: lin.non_extremality,
            lambda: 0.0,
            backtrack_count: 0,
            wall_time: 0.0,
        };
        let stop = pending.or(if lin.non_extremality < cfg.eps_tol {
            Some(DescentStatus::Extremal)
        } else if k >= cfg.k_max {
            Some(DescentStatus::MaxIterations)
        } else {
            None
        });
        if let Some(status) = stop {
            record.wall_time = start.elapsed().as_secs_f64();
            observe(&record);
            history.push(record);
            return Ok(DescentOutcome {
                control: u,
                history,
                status,
                final_cost: lin.cost,
                final_non_extremality: lin.non_extremality,
                max_hermitian_defect: max_defect,
                trajectory: lin.trajectory,
                cotrajectory: lin.cotrajectory,
            });
        }

        let step = backtracking_step(
            &u,
            &lin.target,
            &lin.switching,
            lin.cost,
            cfg,
            execution,
            &evaluator,
        )?;
        record.lambda = step.lambda;
        record.backtrack_count = step.backtracks;
        record.wall_time = start.elapsed().as_secs_f64();
        observe(&record);
        history.push(record);
        if !step.accepted {
            return Ok(DescentOutcome {
                control: u,
                history,
                status: DescentStatus::LineSearchFailed,
                final_cost: lin.cost,
                final_non_extremality: lin.non_extremality,
                max_hermitian_defect: max_defect,
                trajectory: lin.trajectory,
                cotrajectory: lin.cotrajectory,
            });
        }
        u = u.towards(&lin.target, step.lambda)?;
        u.check_feasible(model.admissible())?;
        if step.lambda < cfg.lambda_tol {
            pending = Some(DescentStatus::StepTolerance);
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::KuramotoModel;
    use crate::spectral::RealGridField;
    use std::f64::consts::PI;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 0.1).unwrap()
    }

    fn sw(cells: Vec<Vec<f64>>) -> SwitchingFunction {
        let mut nodes = cells.clone();
        nodes.push(cells.last().unwrap().clone());
        SwitchingFunction::new(grid(), nodes, cells).unwrap()
    }

    #[test]
    fn target_control_examples() {
        let ball = AdmissibleSet::ball(2, 2f64.sqrt()).unwrap();
        let u = ControlSignal::constant(grid(), &[0.1, 0.2]).unwrap();
        let d = sw(vec![vec![3.0, 4.0]; 10]);
        let ubar = target_control(&d, &ball, &u).unwrap();
        assert!((ubar.at(3)[0] - 3.0 * 2f64.sqrt() / 5.0).abs() < 1e-15);
        let zero = sw(vec![vec![0.0, 0.0]; 10]);
        assert_eq!(target_control(&zero, &ball, &u).unwrap(), u);
        let cube = AdmissibleSet::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let d = sw(vec![vec![0.5, -2.0]; 10]);
        assert_eq!(
            target_control(&d, &cube, &u).unwrap().at(0).0,
            vec![1.0, -1.0]
        );
    }

    #[test]
    fn non_extremality_examples() {
        let ball = AdmissibleSet::ball(2, 1.0).unwrap();
        let u = ControlSignal::constant(grid(), &[0.1, 0.2]).unwrap();
        let d = sw((0..10).map(|k| vec![(k as f64).sin(), 1.0]).collect());
        assert_eq!(non_extremality(&u, &u, &d).unwrap(), 0.0);
        let ubar = target_control(&d, &ball, &u).unwrap();
        assert!(
            non_extremality(&ubar, &target_control(&d, &ball, &ubar).unwrap(), &d)
                .unwrap()
                .abs()
                < 1e-15
        );
        let e = non_extremality(&u, &ubar, &d).unwrap();
        let manual: f64 = (0..10)
            .map(|k| {
                let dk = [(k as f64).sin(), 1.0];
                let norm = (dk[0] * dk[0] + dk[1] * dk[1]).sqrt();
                0.1 * (norm - 0.1 * dk[0] - 0.2 * dk[1])
            })
            .sum();
        assert!((e - manual).abs() < 1e-14);
    }

    fn toy_problem() -> (ControlSignal, ControlSignal, SwitchingFunction) {
        // ⟨ū - u, d⟩ = τ Σ 1·1 = 1
        let u = ControlSignal::constant(grid(), &[0.0]).unwrap();
        let ubar = ControlSignal::constant(grid(), &[1.0]).unwrap();
        (u, ubar, sw(vec![vec![1.0]; 10]))
    }

    #[test]
    fn backtracking_on_a_quadratic() {
        // 𝓘(λ) = -λ + 2λ²: Armijo with c = 0.5 needs -λ + 2λ² ≤ -0.5λ, i.e. λ ≤ 1/4
        let (u, ubar, d) = toy_problem();
        let eval = |v: &ControlSignal| {
            let l = v.at(0)[0];
            Ok(-l + 2.0 * l * l)
        };
        let cfg = DescentConfig {
            c: 0.5,
            ..DescentConfig::default()
        };
        for exec in [Execution::Sequential, Execution::Parallel] {
            let ls = backtracking_step(&u, &ubar, &d, 0.0, &cfg, exec, &eval).unwrap();
            assert!(ls.accepted);
            assert_eq!(ls.lambda, 0.25);
            assert_eq!(ls.backtracks, 2);
            assert_eq!(ls.new_cost, -0.25 + 2.0 * 0.0625);
        }
    }

    #[test]
    fn flat_landscape_fails() {
        let (u, ubar, d) = toy_problem();
        let cfg = DescentConfig {
            j_max: 10,
            ..DescentConfig::default()
        };
        let ls = backtracking_step(&u, &ubar, &d, 3.0, &cfg, Execution::default(), &|_| Ok(3.0))
            .unwrap();
        assert!(!ls.accepted);
        assert_eq!(ls.lambda, 0.0);
        assert_eq!(ls.new_cost, 3.0);
    }

    #[test]
    fn full_step_accepted_when_decrease_suffices() {
        let (u, ubar, d) = toy_problem();
        let cfg = DescentConfig::default();
        let ls = backtracking_step(&u, &ubar, &d, 0.0, &cfg, Execution::default(), &|v| {
            Ok(-v.at(0)[0])
        })
        .unwrap();
        assert_eq!((ls.lambda, ls.backtracks), (1.0, 0));
    }

    #[test]
    fn errors_beyond_the_accepted_probe_are_ignored() {
        let (u, ubar, d) = toy_problem();
        let cfg = DescentConfig::default();
        let eval = |v: &ControlSignal| {
            let l = v.at(0)[0];
            if l < 0.3 {
                Err(Error::Divergence {
                    time: 0.0,
                    magnitude: 1e9,
                })
            } else {
                Ok(-l + l * l)
            }
        };
        let ls = backtracking_step(&u, &ubar, &d, 0.0, &cfg, Execution::Parallel, &eval).unwrap();
        assert_eq!(ls.lambda, 0.5);
    }

    #[test]
    fn config_validation() {
        let bad = DescentConfig {
            theta: -0.5,
            ..DescentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = DescentConfig {
            c: 1.0,
            ..DescentConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn switching_function_matches_quadrature() {
        let model = KuramotoModel::synchronization(0.0, PI, 2f64.sqrt()).unwrap();
        let g = TimeGrid::new(0.5, 0.01).unwrap();
        let u = ControlSignal::from_fn(g, |t| vec![t.sin(), t.cos()]).unwrap();
        let rho0 = FourierField::to_spectral(
            &RealGridField::from_fn(32, |x| {
                (1.0 + 0.5 * x.sin() + 0.3 * (2.0 * x).cos()) / (2.0 * PI)
            })
            .unwrap(),
        )
        .unwrap();
        let traj = integrate_forward(&rho0, &u, &model).unwrap();
        let cot = integrate_backward(&traj, &u, &model).unwrap();
        let d = switching_function(&traj, &cot, &u, &model, CellQuadrature::LeftNode).unwrap();
        for k in [0, 17, 50] {
            let zeta = cot.at_node(k).unwrap().to_physical().unwrap();
            let quad: f64 = zeta.values().iter().sum::<f64>() * 2.0 * PI / 32.0;
            assert!((d.nodes()[k][0] - quad).abs() < 1e-10);
        }

        let uniform = FourierField::uniform_density(32).unwrap();
        let traj = integrate_forward(&uniform, &u, &model).unwrap();
        let cot = integrate_backward(&traj, &u, &model).unwrap();
        let d = switching_function(&traj, &cot, &u, &model, CellQuadrature::Simpson).unwrap();
        assert!(d.nodes().iter().chain(d.cells()).all(|v| v[1] == 0.0));
    }

    #[test]
    fn extremal_start_returns_immediately() {
        let model = KuramotoModel::synchronization(0.0, PI, 2f64.sqrt()).unwrap();
        let g = TimeGrid::new(0.5, 0.01).unwrap();
        // uniform state: d₂ ≡ 0 and d₁ ≡ 0, so every control is extremal
        let rho0 = FourierField::uniform_density(16).unwrap();
        let u0 = ControlSignal::constant(g, &[0.3, 0.4]).unwrap();
        let out = run_descent(
            &rho0,
            &u0,
            &model,
            &DescentConfig::default(),
            Execution::default(),
        )
        .unwrap();
        assert_eq!(out.status, DescentStatus::Extremal);
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.control, u0);
    }
}
