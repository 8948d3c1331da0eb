//! Finite Kuramoto ensembles as an oracle for the mean-field solver.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forward::integrate_forward;
use crate::models::{check_normalized, ControlledModel, KuramotoModel};
use crate::spectral::FourierField;
use crate::time::ControlSignal;

const TWO_PI: f64 = 2.0 * PI;
/// Particles per partial sum of the order parameter; fixed so the summation
/// order (and the result) does not depend on the thread count.
const CHUNK: usize = 4096;

/// Phases of `N` identical oscillators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleEnsemble {
    phases: Vec<f64>,
}

impl ParticleEnsemble {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidParameter(
                "an ensemble needs at least one particle".into(),
            ));
        }
        if phases.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite phase".into()));
        }
        Ok(Self { phases })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Raw (unreduced) phases.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Phases reduced to `[0, 2π)`.
    pub fn reduced(&self) -> Vec<f64> {
        self.phases.iter().map(|x| x.rem_euclid(TWO_PI)).collect()
    }

    /// Every phase shifted by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        Self {
            phases: self.phases.iter().map(|x| x + phi).collect(),
        }
    }
}

/// `(1/N) Σ_i e^{i n x_i}`.
pub fn empirical_moment(ensemble: &ParticleEnsemble, n: i64) -> Complex64 {
    let sum: Complex64 = ensemble
        .phases
        .iter()
        .map(|x| Complex64::from_polar(1.0, n as f64 * x))
        .sum();
    sum / ensemble.len() as f64
}

/// `(1/N) Σ_i (1 - cos(x_i - x₀))`.
pub fn particle_cost(ensemble: &ParticleEnsemble, target: f64) -> f64 {
    ensemble
        .phases
        .iter()
        .map(|x| 1.0 - (x - target).cos())
        .sum::<f64>()
        / ensemble.len() as f64
}

/// Deterministic stratified sample: particle `i` sits at the `(i - 1/2)/N`
/// quantile of the density `rho0`.
pub fn stratified_sample(
    rho0: &FourierField,
    n: usize,
    execution: Execution,
) -> Result<ParticleEnsemble> {
    check_normalized(rho0)?;
    if n == 0 {
        return Err(Error::InvalidParameter(
            "an ensemble needs at least one particle".into(),
        ));
    }
    let modes: Vec<(f64, Complex64)> = rho0
        .iter()
        .filter(|(k, c)| *k > 0 && c.norm() > 0.0)
        .map(|(k, c)| (k as f64, c))
        .collect();
    let c0 = rho0.get(0).re;
    // F(x) = c₀x + Σ_{k>0} 2 Re(c_k (e^{ikx} - 1)/(ik))
    let cdf = |x: f64| {
        c0 * x
            + modes
                .iter()
                .map(|(k, c)| {
                    2.0 * (c * (Complex64::from_polar(1.0, k * x) - 1.0) / Complex64::new(0.0, *k))
                        .re
                })
                .sum::<f64>()
    };
    let quantiles: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let phases = execution.map(&quantiles, |&q| {
        let (mut lo, mut hi) = (0.0, TWO_PI);
        let mut x = q * TWO_PI;
        for _ in 0..200 {
            let f = cdf(x) - q;
            if f.abs() < 1e-15 {
                break;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let density = rho0.evaluate(x);
            let newton = x - f / density;
            x = if density > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        x
    });
    ParticleEnsemble::new(phases)
}

struct Velocity {
    u1: f64,
    u2: f64,
    /// `e^{-iα}`.
    lag: Complex64,
}

fn velocities(phases: &[f64], v: &Velocity, execution: Execution) -> Vec<f64> {
    let trig = execution.map(phases, |x| x.sin_cos());
    let chunks: Vec<&[(f64, f64)]> = trig.chunks(CHUNK).collect();
    let partials = execution.map(&chunks, |c| {
        c.iter().fold(Complex64::new(0.0, 0.0), |acc, (s, co)| {
            acc + Complex64::new(*co, *s)
        })
    });
    let order: Complex64 = partials.into_iter().sum();
    // Σ_j sin(x_j - x_i - α) = Im(e^{-i(x_i + α)} Σ_j e^{i x_j})
    let w = v.lag * order / phases.len() as f64;
    execution.map(&trig, |(s, c)| v.u1 + v.u2 * (c * w.im - s * w.re))
}

/// Integrates `ẋ_i = u₁ + u₂ (1/N) Σ_j sin(x_j - x_i - α)` (self-interaction
/// included) with RK4 at step `τ`, returning the ensemble at each requested
/// full-step node (ascending).
pub fn simulate_particles_recording(
    initial: &ParticleEnsemble,
    u: &ControlSignal,
    alpha: f64,
    nodes: &[usize],
    execution: Execution,
) -> Result<Vec<ParticleEnsemble>> {
    if u.dim() != 2 {
        return Err(Error::InvalidParameter(
            "Kuramoto controls are two-dimensional".into(),
        ));
    }
    let grid = *u.grid();
    let h = grid.step();
    let lag = Complex64::from_polar(1.0, -alpha);
    let mut x = initial.phases.clone();
    let mut out = Vec::with_capacity(nodes.len());
    let mut wanted = nodes.iter().peekable();
    while wanted.peek() == Some(&&0) {
        out.push(initial.clone());
        wanted.next();
    }
    let bound = u
        .values()
        .iter()
        .map(|v| v[0].abs() + v[1].abs())
        .fold(0.0, f64::max)
        * h
        + 1e-9;
    for k in 0..grid.n_steps() {
        let vel = Velocity {
            u1: u.at(k)[0],
            u2: u.at(k)[1],
            lag,
        };
        let stage = |base: &[f64], slope: &[f64], w: f64| -> Vec<f64> {
            let mut y = base.to_vec();
            execution.update(&mut y, |i, yi| *yi += w * slope[i]);
            y
        };
        let k1 = velocities(&x, &vel, execution);
        let k2 = velocities(&stage(&x, &k1, 0.5 * h), &vel, execution);
        let k3 = velocities(&stage(&x, &k2, 0.5 * h), &vel, execution);
        let k4 = velocities(&stage(&x, &k3, h), &vel, execution);
        let before = x.clone();
        execution.update(&mut x, |i, xi| {
            *xi += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        });
        if let Some(i) =
            (0..x.len()).find(|&i| !x[i].is_finite() || (x[i] - before[i]).abs() > bound)
        {
            return Err(Error::Divergence {
                time: grid.node(k + 1),
                magnitude: x[i].abs(),
            });
        }
        while wanted.peek() == Some(&&(k + 1)) {
            out.push(ParticleEnsemble { phases: x.clone() });
            wanted.next();
        }
    }
    if out.len() != nodes.len() {
        return Err(Error::GridMismatch(
            "requested nodes must be ascending and on the grid".into(),
        ));
    }
    Ok(out)
}

/// Terminal ensemble of [`simulate_particles_recording`].
pub fn simulate_particles(
    initial: &ParticleEnsemble,
    u: &ControlSignal,
    alpha: f64,
    execution: Execution,
) -> Result<ParticleEnsemble> {
    let n = u.grid().n_steps();
    Ok(simulate_particles_recording(initial, u, alpha, &[n], execution)?.remove(0))
}

/// Moment discrepancy at one time.
#[derive(Debug, Clone, Serialize)]
pub struct MomentSample {
    pub time: f64,
    pub harmonic: i64,
    pub particle: [f64; 2],
    pub mean_field: [f64; 2],
    pub discrepancy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParticleReport {
    pub n_particles: usize,
    pub samples: Vec<MomentSample>,
    /// Max over `t ∈ {0, T/2, T}`, `n ∈ {1, 2}` of the moment discrepancy.
    pub max_moment_discrepancy: f64,
    pub initial_moment_discrepancy: f64,
    pub mean_field_cost: f64,
    pub particle_cost: f64,
    pub cost_gap: f64,
}

/// Runs the mean-field solver and an `N`-particle ensemble sampled from
/// `rho0` under the same control and compares moments and terminal cost.
pub fn meanfield_vs_particles(
    rho0: &FourierField,
    u: &ControlSignal,
    model: &KuramotoModel,
    target: f64,
    n_particles: usize,
    execution: Execution,
) -> Result<ParticleReport> {
    let grid = *u.grid();
    let traj = integrate_forward(rho0, u, model)?;
    let initial = stratified_sample(rho0, n_particles, execution)?;
    let nodes = [0, grid.n_steps() / 2, grid.n_steps()];
    let ensembles = simulate_particles_recording(&initial, u, model.alpha(), &nodes, execution)?;
    let mut samples = Vec::new();
    for (&k, ens) in nodes.iter().zip(&ensembles) {
        let state = traj.at_node(k).expect("full storage");
        for n in [1, 2] {
            let particle = empirical_moment(ens, n);
            let mean_field = state.get(n).conj() * TWO_PI;
            samples.push(MomentSample {
                time: grid.node(k),
                harmonic: n,
                particle: [particle.re, particle.im],
                mean_field: [mean_field.re, mean_field.im],
                discrepancy: (particle - mean_field).norm(),
            });
        }
    }
    let max_moment_discrepancy = samples.iter().map(|s| s.discrepancy).fold(0.0, f64::max);
    let initial_moment_discrepancy = samples
        .iter()
        .filter(|s| s.time == 0.0)
        .map(|s| s.discrepancy)
        .fold(0.0, f64::max);
    let mean_field_cost = model.cost().eval(traj.last())?;
    let particle_cost = particle_cost(ensembles.last().expect("terminal ensemble"), target);
    Ok(ParticleReport {
        n_particles,
        samples,
        max_moment_discrepancy,
        initial_moment_discrepancy,
        mean_field_cost,
        particle_cost,
        cost_gap: (mean_field_cost - particle_cost).abs(),
    })
}
