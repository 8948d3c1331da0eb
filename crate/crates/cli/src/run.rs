use std::f64::consts::PI;
use std::time::Instant;

use mfpmp_core::forward::{density_min, integrate_forward, Trajectory};
use mfpmp_core::models::ControlledModel;
use mfpmp_core::optimizer::{linearize, run_descent, DescentStatus};
use mfpmp_core::validation::{
    increment_slope_check, local_adjoint_check, meanfield_vs_particles, LocalAdjointReport,
    ParticleReport, SlopeReport,
};
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, ExitStatus};
use crate::output::{control_csv, snapshot_rows, ConvergenceRow, OutputDir};

pub const SUMMARY: &str = "summary.json";
pub const CONFIG_ECHO: &str = "config.json";
pub const CONVERGENCE: &str = "convergence.csv";
pub const CONTROL_FINAL: &str = "control_final.csv";
pub const DENSITY_SNAPSHOTS: &str = "density_snapshots.csv";
pub const ADJOINT_SNAPSHOTS: &str = "adjoint_snapshots.csv";
pub const SWITCHING: &str = "switching.csv";
pub const VALIDATION: &str = "validation.json";

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: Command,
    pub status: String,
    pub modes: usize,
    pub steps: usize,
    /// Cost of the returned control.
    pub cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub non_extremality: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Smallest value of the density on the spatial grid over all stored times.
    pub density_min: f64,
    /// Largest `|ĉ₀(t) - 1/2π|`.
    pub mass_defect: f64,
    pub max_hermitian_defect: f64,
    pub timings: Timings,
}

#[derive(Debug, Serialize)]
pub struct ValidationSummary {
    pub passed: bool,
    pub particles_passed: bool,
    pub increment_passed: bool,
    pub local_adjoint_passed: bool,
    pub particles: ParticleReport,
    pub increment: SlopeReport,
    pub local_adjoint: LocalAdjointReport,
}

fn mass_defect(traj: &Trajectory) -> f64 {
    traj.snapshots()
        .iter()
        .map(|s| (s.get(0).re - 1.0 / (2.0 * PI)).abs())
        .fold(0.0, f64::max)
}

/// Executes `command` and writes its artifacts under `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &OutputDir) -> Result<ExitStatus, CliError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Config(format!(
                "config is for `{}` but `{}` was requested",
                serde_json::to_value(c).expect("serializable"),
                serde_json::to_value(command).expect("serializable"),
            )));
        }
    }
    let mut echo = cfg.clone();
    echo.command = Some(command);
    out.write_json(CONFIG_ECHO, &echo)?;

    let start = Instant::now();
    let rho0 = cfg.density()?;
    let u0 = cfg.control()?;
    let model = cfg.model()?;
    let grid = cfg.time_grid()?;
    let times = &cfg.snapshot_times;
    let points = cfg.grid.modes;

    let mut summary = Summary {
        command,
        status: "success".into(),
        modes: cfg.grid.modes,
        steps: grid.n_steps(),
        cost: 0.0,
        initial_cost: None,
        non_extremality: None,
        iterations: None,
        density_min: 0.0,
        mass_defect: 0.0,
        max_hermitian_defect: 0.0,
        timings: Timings::default(),
    };
    let mut exit = ExitStatus::Success;

    match command {
        Command::SolveForward => {
            let traj = integrate_forward(&rho0, &u0, &model)?;
            summary.cost = model.cost().eval(traj.last())?;
            summary.density_min = density_min(&traj, points)?;
            summary.mass_defect = mass_defect(&traj);
            summary.max_hermitian_defect = traj.hermitian_defect();
            out.write_csv(DENSITY_SNAPSHOTS, snapshot_rows(&traj, times)?)?;
        }
        Command::SolveAdjoint => {
            let lin = linearize(&rho0, &u0, &model, cfg.descent.quadrature)?;
            let (traj, cot, d) = (&lin.trajectory, &lin.cotrajectory, &lin.switching);
            summary.cost = lin.cost;
            summary.non_extremality = Some(lin.non_extremality);
            summary.density_min = density_min(traj, points)?;
            summary.mass_defect = mass_defect(traj);
            summary.max_hermitian_defect = traj.hermitian_defect().max(cot.hermitian_defect());
            out.write_csv(DENSITY_SNAPSHOTS, snapshot_rows(traj, times)?)?;
            out.write_csv(ADJOINT_SNAPSHOTS, snapshot_rows(cot, times)?)?;
            let rows: Vec<Vec<f64>> = d
                .nodes()
                .iter()
                .enumerate()
                .map(|(k, dk)| {
                    std::iter::once(grid.node(k))
                        .chain(dk.iter().copied())
                        .collect()
                })
                .collect();
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["t".to_string()];
            header.extend((1..=u0.dim()).map(|j| format!("d{j}")));
            w.write_record(&header).expect("in-memory write");
            for r in rows {
                w.write_record(r.iter().map(|x| x.to_string()))
                    .expect("in-memory write");
            }
            out.write_bytes(SWITCHING, &w.into_inner().expect("in-memory write"))?;
        }
        Command::Optimize => {
            let outcome = run_descent(&rho0, &u0, &model, &cfg.descent, cfg.execution)?;
            summary.status = serde_json::to_value(outcome.status)
                .expect("serializable")
                .as_str()
                .expect("unit variant")
                .to_string();
            summary.cost = outcome.final_cost;
            summary.initial_cost = outcome.history.first().map(|r| r.cost);
            summary.non_extremality = Some(outcome.final_non_extremality);
            summary.iterations = Some(outcome.history.len() - 1);
            summary.density_min = density_min(&outcome.trajectory, points)?;
            summary.mass_defect = mass_defect(&outcome.trajectory);
            summary.max_hermitian_defect = outcome.max_hermitian_defect;
            out.write_csv(
                CONVERGENCE,
                outcome.history.iter().map(ConvergenceRow::from),
            )?;
            out.write_bytes(CONTROL_FINAL, &control_csv(&outcome.control))?;
            out.write_csv(
                DENSITY_SNAPSHOTS,
                snapshot_rows(&outcome.trajectory, times)?,
            )?;
            out.write_csv(
                ADJOINT_SNAPSHOTS,
                snapshot_rows(&outcome.cotrajectory, times)?,
            )?;
            if outcome.status == DescentStatus::LineSearchFailed {
                exit = ExitStatus::LineSearchFailure;
            }
        }
        Command::Validate => {
            let v = &cfg.validation;
            let traj = integrate_forward(&rho0, &u0, &model)?;
            summary.cost = model.cost().eval(traj.last())?;
            summary.density_min = density_min(&traj, points)?;
            summary.mass_defect = mass_defect(&traj);
            summary.max_hermitian_defect = traj.hermitian_defect();

            let particles = meanfield_vs_particles(
                &rho0,
                &u0,
                &model,
                cfg.model.target,
                v.particles,
                cfg.execution,
            )?;
            let lin = linearize(&rho0, &u0, &model, cfg.descent.quadrature)?;
            let increment = increment_slope_check(
                &rho0,
                &u0,
                &lin.target,
                &model,
                &v.lambdas,
                cfg.descent.quadrature,
            )?;
            let rotation_only = u0.map(|_, uk| vec![uk[0], 0.0])?;
            let local_adjoint = local_adjoint_check(&rho0, &rotation_only, &model, points)?;

            let particles_passed = particles.cost_gap <= v.particle_tolerance;
            let increment_passed = increment.max_ratio_deviation <= v.ratio_tolerance
                && increment.residual_order.is_some_and(|p| p >= v.min_order);
            let local_adjoint_passed = local_adjoint.max_error < v.local_tolerance;
            let report = ValidationSummary {
                passed: particles_passed && increment_passed && local_adjoint_passed,
                particles_passed,
                increment_passed,
                local_adjoint_passed,
                particles,
                increment,
                local_adjoint,
            };
            out.write_json(VALIDATION, &report)?;
            if !report.passed {
                summary.status = "validation-failed".into();
                exit = ExitStatus::ValidationFailure;
            }
        }
    }
    summary.timings.total_seconds = start.elapsed().as_secs_f64();
    out.write_json(SUMMARY, &summary)?;
    Ok(exit)
}
