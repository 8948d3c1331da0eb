//! Run configuration: strict JSON, named presets and `key=value` overrides.
//!
//! A config document may name a `preset`; its keys are merged over the
//! preset's, then overrides are applied, then the result is parsed with
//! unknown keys rejected. Named densities and controls are expanded to
//! explicit values before anything is solved, so the echoed config is
//! self-contained.

use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};

use mfpmp_core::models::{ControlVector, ControlledModel, KuramotoModel};
use mfpmp_core::optimizer::DescentConfig;
use mfpmp_core::validation::DEFAULT_LAMBDAS;
use mfpmp_core::{presets, ControlSignal, Execution, FourierField, TimeGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveForward,
    SolveAdjoint,
    Optimize,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Phase lag `α`.
    pub alpha: f64,
    /// Synchronization target `x₀`.
    pub target: f64,
    /// Radius of the control ball.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: f64,
    pub step: f64,
    /// Number of Fourier modes (even).
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    Preset {
        name: String,
    },
    Uniform,
    /// Coefficients `c_0, c_1, …` as `[re, im]`; negative indices follow by
    /// conjugation.
    Coefficients {
        values: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlSpec {
    Preset {
        name: String,
    },
    Constant {
        value: Vec<f64>,
    },
    /// `u_j(t) = sine_j sin(ωt) + cosine_j cos(ωt)`.
    Harmonic {
        angular_frequency: f64,
        sine: Vec<f64>,
        cosine: Vec<f64>,
    },
    /// One row per time step.
    Table {
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Ensemble size for the particle comparison.
    pub particles: usize,
    /// Largest accepted terminal-cost gap between particles and mean field.
    pub particle_tolerance: f64,
    pub lambdas: Vec<f64>,
    /// Accepted `|ratio - 1|` in the increment check.
    pub ratio_tolerance: f64,
    /// Smallest accepted residual order in the increment check.
    pub min_order: f64,
    /// Accepted max error of the local-case co-state.
    pub local_tolerance: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            particles: 10_000,
            particle_tolerance: 0.02,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            ratio_tolerance: 0.05,
            min_order: 1.8,
            local_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub initial_density: DensitySpec,
    pub initial_control: ControlSpec,
    #[serde(default)]
    pub descent: DescentConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Times of the density and co-state snapshots; the nearest grid node
    /// is used. Defaults to the two ends of the horizon.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default)]
    pub validation: ValidationConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("mfpmp-out")
}

/// Names accepted by the top-level `preset` key.
pub const PRESETS: [&str; 2] = ["fig1", "fig1-full"];

/// Config document of a named preset.
pub fn preset(name: &str) -> Result<Value, CliError> {
    let (step, modes) = match name {
        "fig1" => (5e-3, 256),
        "fig1-full" => (1e-3, 2048),
        other => {
            return Err(CliError::Config(format!(
                "unknown preset `{other}`; expected one of {PRESETS:?}"
            )))
        }
    };
    Ok(json!({
        "model": { "alpha": 0.0, "target": PI, "radius": SQRT_2 },
        "grid": { "horizon": presets::HORIZON, "step": step, "modes": modes },
        "initial_density": { "kind": "preset", "name": "fig1" },
        "initial_control": { "kind": "preset", "name": "fig1" },
        "descent": serde_json::to_value(DescentConfig::default()).expect("serializable"),
    }))
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    // a tagged object of another kind replaces the old one
                    Some(slot) if slot.is_object() && v.is_object() && same_kind(slot, &v) => {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn same_kind(a: &Value, b: &Value) -> bool {
    match (a.get("kind"), b.get("kind")) {
        (Some(x), Some(y)) => x == y,
        _ => true,
    }
}

/// Applies `a.b.c=value`; the value is read as JSON and falls back to a
/// plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Config(format!(
            "override `{assignment}` is not of the form key=value"
        ))
    })?;
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "override key `{key}` has an empty segment"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = doc;
    for segment in &path[..path.len() - 1] {
        let obj = slot.as_object_mut().ok_or_else(|| {
            CliError::Config(format!(
                "override `{key}`: `{segment}` is not inside an object"
            ))
        })?;
        slot = obj
            .entry(segment.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = slot.as_object_mut().ok_or_else(|| {
        CliError::Config(format!("override `{key}` does not address an object field"))
    })?;
    obj.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

/// Builds the document: preset, then the file's keys, then overrides.
pub fn compose(file: Value, overrides: &[String]) -> Result<Value, CliError> {
    let Value::Object(mut top) = file else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    let mut doc = match top.remove("preset") {
        Some(Value::String(name)) => preset(&name)?,
        Some(other) => {
            return Err(CliError::Config(format!(
                "`preset` must be a string, got {other}"
            )))
        }
        None => Value::Object(Map::new()),
    };
    merge(&mut doc, Value::Object(top));
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    Ok(doc)
}

impl RunConfig {
    /// Parses a composed document, expands named inputs and validates.
    pub fn from_value(doc: Value) -> Result<Self, CliError> {
        let mut cfg: RunConfig = serde_json::from_value(doc)
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.expand()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_value(compose(file, overrides)?)
    }

    fn expand(&mut self) -> Result<(), CliError> {
        if self.snapshot_times.is_empty() {
            self.snapshot_times = vec![0.0, self.grid.horizon];
        }
        if let DensitySpec::Preset { name } = &self.initial_density {
            if name != "fig1" {
                return Err(CliError::Config(format!(
                    "initial_density: unknown preset `{name}`"
                )));
            }
            let rho = presets::initial_density(4)?;
            self.initial_density = DensitySpec::Coefficients {
                values: (0..=2).map(|n| [rho.get(n).re, rho.get(n).im]).collect(),
            };
        }
        if let ControlSpec::Preset { name } = &self.initial_control {
            if name != "fig1" {
                return Err(CliError::Config(format!(
                    "initial_control: unknown preset `{name}`"
                )));
            }
            self.initial_control = ControlSpec::Harmonic {
                angular_frequency: 2.0 * PI,
                sine: vec![SQRT_2, 0.0],
                cosine: vec![0.0, SQRT_2],
            };
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, e: mfpmp_core::Error| CliError::Config(format!("{name}: {e}"));
        self.time_grid().map_err(|e| field("grid", e))?;
        self.density().map_err(|e| field("initial_density", e))?;
        self.model().map_err(|e| field("model", e))?;
        self.control().map_err(|e| field("initial_control", e))?;
        self.descent.validate().map_err(|e| field("descent", e))?;
        if self.descent.k_max == 0 {
            return Err(CliError::Config("descent: k_max must be positive".into()));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.grid.horizon))
        {
            return Err(CliError::Config(format!(
                "snapshot_times: {t} is outside [0, {}]",
                self.grid.horizon
            )));
        }
        let v = &self.validation;
        if v.particles == 0 {
            return Err(CliError::Config(
                "validation: particles must be positive".into(),
            ));
        }
        if v.lambdas.is_empty() || v.lambdas.iter().any(|l| !(*l > 0.0 && *l <= 0.1)) {
            return Err(CliError::Config(
                "validation: lambdas must lie in (0, 0.1]".into(),
            ));
        }
        for (name, value) in [
            ("particle_tolerance", v.particle_tolerance),
            ("ratio_tolerance", v.ratio_tolerance),
            ("min_order", v.min_order),
            ("local_tolerance", v.local_tolerance),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CliError::Config(format!(
                    "validation: {name} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn time_grid(&self) -> mfpmp_core::Result<TimeGrid> {
        TimeGrid::new(self.grid.horizon, self.grid.step)
    }

    pub fn model(&self) -> mfpmp_core::Result<KuramotoModel> {
        KuramotoModel::synchronization(self.model.alpha, self.model.target, self.model.radius)
    }

    pub fn density(&self) -> mfpmp_core::Result<FourierField> {
        let n = self.grid.modes;
        let rho = match &self.initial_density {
            DensitySpec::Uniform => FourierField::uniform_density(n)?,
            DensitySpec::Coefficients { values } => {
                let coeffs: Vec<Complex64> = values
                    .iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect();
                if coeffs.len() > n / 2 + 1 {
                    return Err(mfpmp_core::Error::InvalidParameter(format!(
                        "{} coefficients exceed the {n}-mode grid",
                        coeffs.len()
                    )));
                }
                FourierField::from_nonnegative(n, &coeffs)?
            }
            DensitySpec::Preset { .. } => presets::initial_density(n)?,
        };
        mfpmp_core::models::check_normalized(&rho)?;
        Ok(rho)
    }

    pub fn control(&self) -> mfpmp_core::Result<ControlSignal> {
        let grid = self.time_grid()?;
        let u = match &self.initial_control {
            ControlSpec::Preset { .. } => presets::initial_control(grid)?,
            ControlSpec::Constant { value } => ControlSignal::constant(grid, value)?,
            ControlSpec::Harmonic {
                angular_frequency,
                sine,
                cosine,
            } => {
                if sine.len() != cosine.len() {
                    return Err(mfpmp_core::Error::InvalidParameter(
                        "sine and cosine amplitudes differ in length".into(),
                    ));
                }
                ControlSignal::from_fn(grid, |t| {
                    let (s, c) = (angular_frequency * t).sin_cos();
                    sine.iter()
                        .zip(cosine)
                        .map(|(a, b)| a * s + b * c)
                        .collect()
                })?
            }
            ControlSpec::Table { values } => {
                ControlSignal::new(grid, values.iter().cloned().map(ControlVector).collect())?
            }
        };
        u.check_feasible(self.model()?.admissible())?;
        Ok(u)
    }
}
