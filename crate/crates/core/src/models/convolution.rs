use std::sync::Arc;

use super::{AdmissibleSet, ControlVector, ControlledModel, TerminalCost};
use crate::error::{Error, Result};
use crate::spectral::{FourierField, RealGridField};

/// One field component `f(x) + (K * μ)(x)`.
#[derive(Debug, Clone)]
struct Component {
    local: FourierField,
    kernel: Option<FourierField>,
    /// Coefficients of `z ↦ K'(-z)`, cached for the measure derivative.
    reflected_kernel_slope: Option<FourierField>,
}

impl Component {
    fn new(local: FourierField, kernel: Option<FourierField>) -> Self {
        let reflected_kernel_slope = kernel.as_ref().map(|k| k.derivative().reflected());
        Self {
            local,
            kernel,
            reflected_kernel_slope,
        }
    }

    fn field(&self, mu: &FourierField) -> Result<FourierField> {
        match &self.kernel {
            Some(k) => self.local.add(&FourierField::convolve(k, mu)?),
            None => Ok(self.local.clone()),
        }
    }
}

/// Pointwise function of one angle.
pub type AngleFn = Box<dyn Fn(f64) -> f64>;

/// Generic control-affine field built from local terms and interaction kernels:
///
/// ```text
/// V^j(x, μ) = f_j(x) + ∫ K_j(x - y) dμ(y).
/// ```
///
/// The continuity and adjoint right-hand sides use the pseudospectral
/// defaults of [`ControlledModel`] (products on a padded grid).
pub struct ConvolutionModel {
    set: AdmissibleSet,
    cost: Arc<dyn TerminalCost>,
    drift: Option<Component>,
    components: Vec<Component>,
}

impl ConvolutionModel {
    /// Builds a model from Fourier data. Each entry is `(f_j, K_j)`.
    pub fn new(
        set: AdmissibleSet,
        cost: Arc<dyn TerminalCost>,
        drift: Option<(FourierField, Option<FourierField>)>,
        components: Vec<(FourierField, Option<FourierField>)>,
    ) -> Result<Self> {
        set.validate()?;
        if components.len() != set.dim() {
            return Err(Error::InvalidParameter(format!(
                "{} field components for a {}-dimensional control",
                components.len(),
                set.dim()
            )));
        }
        let n_modes = components[0].0.n_modes();
        let all = drift.iter().chain(components.iter());
        for (f, k) in all {
            if f.n_modes() != n_modes || k.as_ref().is_some_and(|k| k.n_modes() != n_modes) {
                return Err(Error::ModeMismatch {
                    left: n_modes,
                    right: f.n_modes(),
                });
            }
        }
        Ok(Self {
            set,
            cost,
            drift: drift.map(|(f, k)| Component::new(f, k)),
            components: components
                .into_iter()
                .map(|(f, k)| Component::new(f, k))
                .collect(),
        })
    }

    /// Grid-evaluates pointwise local terms and kernels on `n_modes` nodes and
    /// transforms them.
    pub fn from_pointwise(
        n_modes: usize,
        set: AdmissibleSet,
        cost: Arc<dyn TerminalCost>,
        drift: Option<(AngleFn, Option<AngleFn>)>,
        components: Vec<(AngleFn, Option<AngleFn>)>,
    ) -> Result<Self> {
        let transform = |f: &AngleFn| -> Result<FourierField> {
            FourierField::to_spectral(&RealGridField::from_fn(n_modes, f)?)
        };
        let convert =
            |(f, k): (AngleFn, Option<AngleFn>)| -> Result<(FourierField, Option<FourierField>)> {
                Ok((transform(&f)?, k.as_ref().map(transform).transpose()?))
            };
        let drift = drift.map(convert).transpose()?;
        let components = components
            .into_iter()
            .map(convert)
            .collect::<Result<Vec<_>>>()?;
        Self::new(set, cost, drift, components)
    }
}

impl ControlledModel for ConvolutionModel {
    fn admissible(&self) -> &AdmissibleSet {
        &self.set
    }

    fn cost(&self) -> &dyn TerminalCost {
        self.cost.as_ref()
    }

    fn drift(&self, _t: f64, mu: &FourierField) -> Result<Option<FourierField>> {
        self.drift.as_ref().map(|c| c.field(mu)).transpose()
    }

    fn component(&self, _t: f64, mu: &FourierField, j: usize) -> Result<FourierField> {
        self.components
            .get(j)
            .ok_or_else(|| Error::InvalidParameter(format!("no control component {j}")))?
            .field(mu)
    }

    fn dmu_apply(
        &self,
        _t: f64,
        mu: &FourierField,
        u: &ControlVector,
        zeta: &FourierField,
    ) -> Result<FourierField> {
        // D_μV(y, μ, x) = -Σ_j u_j K_j'(y - x), so the action on ζ is
        // -Σ_j u_j (R_j * ζ) with R_j(z) = K_j'(-z).
        let mut out = FourierField::zeros(mu.n_modes())?;
        let weighted = self
            .drift
            .iter()
            .map(|c| (1.0, c))
            .chain(self.components.iter().enumerate().map(|(j, c)| (u[j], c)));
        for (w, c) in weighted {
            if let (Some(r), true) = (&c.reflected_kernel_slope, w != 0.0) {
                out = out.axpy(-w, &FourierField::convolve(r, zeta)?)?;
            }
        }
        Ok(out)
    }
}
