use crate::domain::{BoundedSdeModel, FlowTag, State};
use crate::error::Result;

use super::path::Stepper;
use super::{SchemeConfig, ThetaPolicy, WEIGHTED_THETA_MIN_FACTOR};

/// Output of one step. For projected schemes `y_left` and `y_right` both hold
/// the unclamped classical update.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub y_next: Vec<f64>,
    pub tags: Vec<FlowTag>,
    /// Mixing weight per component; NaN where the tag is not `Theta`.
    pub theta_used: Vec<f64>,
    pub y_left: Vec<f64>,
    pub y_right: Vec<f64>,
    /// Components whose weighted theta left the clamp interval.
    pub theta_clamps: usize,
    /// Components whose exact value was inside `D` but rounded onto a bound
    /// and were moved to the nearest representable interior value.
    pub rounding_guards: usize,
}

impl StepResult {
    pub fn with_dim(d: usize) -> Self {
        Self {
            y_next: vec![0.0; d],
            tags: vec![FlowTag::Theta; d],
            theta_used: vec![f64::NAN; d],
            y_left: vec![0.0; d],
            y_right: vec![0.0; d],
            theta_clamps: 0,
            rounding_guards: 0,
        }
    }
}

/// Theta for component `i` plus whether clamping was applied.
pub(crate) fn theta_for(policy: ThetaPolicy, model: &BoundedSdeModel, y: &[f64], i: usize) -> (f64, bool) {
    match policy {
        ThetaPolicy::Fixed(theta) => (theta, false),
        ThetaPolicy::Weighted { fallback, clamp } => {
            let g = model.diffusion_factor(y, i);
            let dg = match model.diffusion_factor_deriv(y, i) {
                Some(dg) => dg,
                None => return (fallback, false),
            };
            if !(g.abs() >= WEIGHTED_THETA_MIN_FACTOR) {
                return (fallback, false);
            }
            let (l, r) = (model.lower()[i], model.upper()[i]);
            let theta = (y[i] - l) / (r - l) * (1.0 - dg / g * (r - y[i]));
            if !theta.is_finite() {
                return (fallback, false);
            }
            let clamped = theta.clamp(clamp.0, clamp.1);
            (clamped, clamped != theta)
        }
    }
}

/// Mixing weight for component `i` under `policy`.
///
/// The weighted policy uses
/// `theta = (y_i - L_i) / (R_i - L_i) * (1 - gbar'(y_i) / gbar(y_i) * (R_i - y_i))`,
/// the weight that cancels the leading one-step error term for diagonal noise.
pub fn theta_weight(policy: ThetaPolicy, model: &BoundedSdeModel, y: &[f64], i: usize) -> f64 {
    theta_for(policy, model, y, i).0
}

/// Indicator rule: `Y^R <= L` selects `Y^L`, `Y^L >= R` selects `Y^R`,
/// otherwise the convex mix.
pub fn select_flow(y_left: f64, y_right: f64, lower: f64, upper: f64, theta: f64) -> (f64, FlowTag) {
    if y_right <= lower {
        (y_left, FlowTag::Left)
    } else if y_left >= upper {
        (y_right, FlowTag::Right)
    } else {
        ((1.0 - theta) * y_left + theta * y_right, FlowTag::Theta)
    }
}

/// One split step with the flow family and theta policy of `config`.
pub fn combine_step(
    model: &BoundedSdeModel,
    config: &SchemeConfig,
    y_n: &State,
    dt: f64,
    dw: &[f64],
) -> Result<StepResult> {
    let mut stepper = Stepper::new(model, *config)?;
    let mut out = StepResult::with_dim(model.dim());
    stepper.step_into(&y_n.y, dt, dw, &mut out)?;
    Ok(out)
}
