use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when testing membership of a control value.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;

/// Below this norm the switching vector is treated as zero by the ball maximizer.
pub const ZERO_SWITCHING: f64 = 1e-14;

/// A point of the control space `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlVector(pub Vec<f64>);

impl ControlVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(&self.0).sqrt()
    }

    /// `self + lambda (target - self)`.
    pub fn towards(&self, target: &ControlVector, lambda: f64) -> ControlVector {
        ControlVector(
            self.0
                .iter()
                .zip(&target.0)
                .map(|(a, b)| a + lambda * (b - a))
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for ControlVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for ControlVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Compact convex set of admissible control values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AdmissibleSet {
    /// Closed Euclidean ball centred at the origin.
    Ball { dim: usize, radius: f64 },
    /// Product of closed intervals.
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl AdmissibleSet {
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        let set = AdmissibleSet::Ball { dim, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn cube(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = AdmissibleSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AdmissibleSet::Ball { dim, radius } => {
                if *dim == 0 || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "ball needs dim > 0 and a finite positive radius, got dim {dim}, radius {radius}"
                    )));
                }
            }
            AdmissibleSet::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::InvalidParameter(
                        "box bounds must be non-empty and of equal length".into(),
                    ));
                }
                if lower
                    .iter()
                    .zip(upper)
                    .any(|(l, u)| !l.is_finite() || !u.is_finite() || l > u)
                {
                    return Err(Error::InvalidParameter(
                        "box bounds must be finite with lower <= upper".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            AdmissibleSet::Ball { dim, .. } => *dim,
            AdmissibleSet::Box { lower, .. } => lower.len(),
        }
    }

    pub fn contains(&self, u: &ControlVector) -> bool {
        if u.dim() != self.dim() || u.0.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            AdmissibleSet::Ball { radius, .. } => u.norm() <= radius + FEASIBILITY_TOLERANCE,
            AdmissibleSet::Box { lower, upper } => {
                u.0.iter().zip(lower.iter().zip(upper)).all(|(v, (l, h))| {
                    *v >= l - FEASIBILITY_TOLERANCE && *v <= h + FEASIBILITY_TOLERANCE
                })
            }
        }
    }

    pub fn check(&self, u: &ControlVector) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::Constraint {
                values: u.0.clone(),
            })
        }
    }

    /// Euclidean projection (radial for the ball, clamp for the box).
    pub fn project(&self, u: &ControlVector) -> ControlVector {
        match self {
            AdmissibleSet::Ball { radius, .. } => {
                let norm = u.norm();
                if norm <= *radius {
                    u.clone()
                } else {
                    ControlVector(u.0.iter().map(|v| v * radius / norm).collect())
                }
            }
            AdmissibleSet::Box { lower, upper } => ControlVector(
                u.0.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(v, (l, h))| v.clamp(*l, *h))
                    .collect(),
            ),
        }
    }

    /// A maximizer of `v ↦ v·d` over the set. Where `d` gives no preference
    /// (zero vector for the ball, zero component for the box) the current
    /// value is kept.
    pub fn maximize_linear(&self, d: &[f64], current: &ControlVector) -> ControlVector {
        match self {
            AdmissibleSet::Ball { radius, .. } => {
                let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm < ZERO_SWITCHING {
                    current.clone()
                } else {
                    ControlVector(d.iter().map(|v| radius * v / norm).collect())
                }
            }
            AdmissibleSet::Box { lower, upper } => ControlVector(
                d.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        if *v > 0.0 {
                            upper[j]
                        } else if *v < 0.0 {
                            lower[j]
                        } else {
                            current[j]
                        }
                    })
                    .collect(),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cv(v: &[f64]) -> ControlVector {
        ControlVector(v.to_vec())
    }

    #[test]
    fn ball_projection() {
        let ball = AdmissibleSet::ball(2, 2f64.sqrt()).unwrap();
        let p = ball.project(&cv(&[2.0, 0.0]));
        assert_abs_diff_eq!(p[0], 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(p[1], 0.0);
        assert_eq!(ball.project(&cv(&[1.0, 0.0])), cv(&[1.0, 0.0]));
        let q = ball.project(&cv(&[3.0, -4.0]));
        assert_eq!(ball.project(&q), q);
    }

    #[test]
    fn box_projection() {
        let b = AdmissibleSet::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.project(&cv(&[3.0, -0.5])), cv(&[1.0, -0.5]));
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(AdmissibleSet::ball(2, 0.0).is_err());
        assert!(AdmissibleSet::ball(0, 1.0).is_err());
        assert!(AdmissibleSet::cube(vec![1.0], vec![0.0]).is_err());
        assert!(AdmissibleSet::cube(vec![f64::NEG_INFINITY], vec![0.0]).is_err());
        assert!(AdmissibleSet::cube(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn linear_maximizers() {
        let ball = AdmissibleSet::ball(2, 2f64.sqrt()).unwrap();
        let u = ball.maximize_linear(&[3.0, 4.0], &cv(&[0.0, 0.0]));
        assert_abs_diff_eq!(u[0], 3.0 * 2f64.sqrt() / 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u[1], 4.0 * 2f64.sqrt() / 5.0, epsilon = 1e-15);

        let current = cv(&[0.3, -0.2]);
        assert_eq!(ball.maximize_linear(&[0.0, 0.0], &current), current);

        let b = AdmissibleSet::cube(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.maximize_linear(&[0.5, -2.0], &current), cv(&[1.0, -1.0]));
        assert_eq!(b.maximize_linear(&[0.0, -2.0], &current), cv(&[0.3, -1.0]));
    }

    #[test]
    fn membership() {
        let ball = AdmissibleSet::ball(2, 1.0).unwrap();
        assert!(ball.contains(&cv(&[0.6, 0.8])));
        assert!(!ball.contains(&cv(&[0.6, 0.9])));
        assert!(!ball.contains(&cv(&[0.1])));
        assert!(ball.check(&cv(&[f64::NAN, 0.0])).is_err());
    }
}
