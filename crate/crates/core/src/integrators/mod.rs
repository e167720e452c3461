//! Time-stepping schemes.
//!
//! The split schemes (`EmMean`, `EmWeighted`, `MilMean`) advance each
//! component with a lower-anchored flow `Y^L > L` and an upper-anchored flow
//! `Y^R < R`, then pick one of them or a convex mix so the iterate stays in
//! `D`. The projected schemes clamp a classical update into `[L, R]` and are
//! kept as baselines.

mod combine;
mod flows;
mod path;
mod positivity;
mod projected;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::domain::BoundedSdeModel;
use crate::error::{Result, SdeError};

pub use combine::{combine_step, select_flow, theta_weight, StepResult};
pub use flows::{euler_left_flow, euler_right_flow, milstein_left_flow, milstein_right_flow};
pub use path::{simulate_path, simulate_with, step, Stepper, Trajectory};
pub use positivity::{exp_euler_positive_step, exp_milstein_positive_step};
pub use projected::{projected_euler_step, projected_milstein_step};

/// `|gbar_i(y_i)|` below which the weighted theta falls back to `theta_fixed`.
pub const WEIGHTED_THETA_MIN_FACTOR: f64 = 1e-14;

/// `|f_i(Pi y)|` below which the drift shift folds the boundary drift into the quotient.
pub const DRIFT_SHIFT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    EmMean,
    EmWeighted,
    MilMean,
    ProjEm,
    ProjMil,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::EmMean,
        Scheme::EmWeighted,
        Scheme::MilMean,
        Scheme::ProjEm,
        Scheme::ProjMil,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EmMean => "em-mean",
            Scheme::EmWeighted => "em-weighted",
            Scheme::MilMean => "mil-mean",
            Scheme::ProjEm => "proj-em",
            Scheme::ProjMil => "proj-mil",
        }
    }

    pub fn is_projected(self) -> bool {
        matches!(self, Scheme::ProjEm | Scheme::ProjMil)
    }

    pub fn is_milstein(self) -> bool {
        matches!(self, Scheme::MilMean | Scheme::ProjMil)
    }

    /// Whether the scheme evaluates `gbar_i'`.
    pub fn needs_derivative(self) -> bool {
        matches!(self, Scheme::EmWeighted | Scheme::MilMean | Scheme::ProjMil)
    }

    pub fn names() -> String {
        Scheme::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = SdeError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == key)
            .ok_or_else(|| SdeError::InvalidConfig(format!("unknown scheme `{s}`; available: {}", Scheme::names())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaPolicy {
    Fixed(f64),
    /// Local-error cancelling weight, clamped to `clamp`, with `fallback`
    /// used where the noise factor vanishes.
    Weighted {
        fallback: f64,
        clamp: (f64, f64),
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// Mixing weight of the mean schemes, in `(0, 1)`.
    pub theta_fixed: f64,
    /// Interval the weighted theta is clamped to; a subset of `[0, 1]`.
    pub theta_clamp: (f64, f64),
    /// Fold numerically negligible boundary drift values into the Newton quotient.
    pub drift_shift: bool,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            theta_fixed: 0.5,
            theta_clamp: (0.0, 1.0),
            drift_shift: false,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta_fixed = theta;
        self
    }

    pub fn with_theta_clamp(mut self, lo: f64, hi: f64) -> Self {
        self.theta_clamp = (lo, hi);
        self
    }

    pub fn with_drift_shift(mut self, on: bool) -> Self {
        self.drift_shift = on;
        self
    }

    pub fn theta_policy(&self) -> ThetaPolicy {
        match self.scheme {
            Scheme::EmWeighted => ThetaPolicy::Weighted {
                fallback: self.theta_fixed,
                clamp: self.theta_clamp,
            },
            _ => ThetaPolicy::Fixed(self.theta_fixed),
        }
    }

    /// Checks the parameter ranges and, when a model is given, that it
    /// provides what the scheme needs.
    pub fn validate(&self, model: Option<&BoundedSdeModel>) -> Result<()> {
        if !(self.theta_fixed > 0.0 && self.theta_fixed < 1.0) {
            return Err(SdeError::InvalidConfig(format!(
                "theta must lie in (0, 1), got {}",
                self.theta_fixed
            )));
        }
        let (lo, hi) = self.theta_clamp;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(SdeError::InvalidConfig(format!(
                "theta clamp [{lo}, {hi}] must be an interval inside [0, 1]"
            )));
        }
        if let Some(model) = model {
            if self.scheme.needs_derivative() && !model.has_diffusion_derivative() {
                return Err(SdeError::MissingDerivative {
                    scheme: self.scheme.name(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("EM_Weighted".parse::<Scheme>().unwrap(), Scheme::EmWeighted);
    }

    #[test]
    fn unknown_scheme_lists_names() {
        let msg = "rk4".parse::<Scheme>().unwrap_err().to_string();
        for s in Scheme::ALL {
            assert!(msg.contains(s.name()), "{msg}");
        }
    }

    #[test]
    fn config_ranges() {
        assert!(SchemeConfig::new(Scheme::EmMean).validate(None).is_ok());
        assert!(SchemeConfig::new(Scheme::EmMean)
            .with_theta(1.0)
            .validate(None)
            .is_err());
        assert!(SchemeConfig::new(Scheme::EmMean)
            .with_theta(0.0)
            .validate(None)
            .is_err());
        assert!(SchemeConfig::new(Scheme::EmWeighted)
            .with_theta_clamp(0.2, 1.1)
            .validate(None)
            .is_err());
        assert!(SchemeConfig::new(Scheme::EmWeighted)
            .with_theta_clamp(0.6, 0.4)
            .validate(None)
            .is_err());
    }

    #[test]
    fn milstein_requires_derivative() {
        let m = BoundedSdeModel::new("m", vec![0.0], vec![1.0], |_, _| 0.0, |_, _| 1.0).unwrap();
        for scheme in [Scheme::MilMean, Scheme::EmWeighted, Scheme::ProjMil] {
            assert_eq!(
                SchemeConfig::new(scheme).validate(Some(&m)),
                Err(SdeError::MissingDerivative { scheme: scheme.name() })
            );
        }
        assert!(SchemeConfig::new(Scheme::ProjEm).validate(Some(&m)).is_ok());
    }
}
