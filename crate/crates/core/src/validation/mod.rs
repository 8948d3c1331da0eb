//! Independent oracles for the solvers: a finite particle system, a
//! finite-difference check of the cost increment, and the analytic co-state
//! of the local (μ-independent) case.

mod increment;
mod local;
mod particles;

pub use increment::{fit_slope, increment_slope_check, SlopeReport, SlopeSample, DEFAULT_LAMBDAS};
pub use local::{local_adjoint_check, LocalAdjointReport};
pub use particles::{
    empirical_moment, meanfield_vs_particles, particle_cost, simulate_particles,
    simulate_particles_recording, stratified_sample, MomentSample, ParticleEnsemble,
    ParticleReport,
};
