//! Lower- and upper-anchored flows.
//!
//! Relative to `L_i` the drift splits as `f_i(Pi^L y) + F^L_i(y) (y_i - L_i)`.
//! The first part is an explicit Euler push (non-negative at the bound), the
//! second is linear in `y_i - L_i` together with the noise, so the exponential
//! integrator keeps `Y^L_i - L_i > 0`. The upper flow mirrors this around `R_i`.

use crate::domain::{finite, gamma_pair, BoundedSdeModel, SplitTerms, State, BOUNDARY_GUARD};
use crate::error::{Result, SdeError};

use super::DRIFT_SHIFT_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FlowFamily {
    Euler,
    Milstein,
}

/// `(Y^L_i, Y^R_i)` for component `i`; `scratch` holds `y_n` and is restored.
pub(crate) fn component_flows(
    model: &BoundedSdeModel,
    scratch: &mut [f64],
    i: usize,
    dt: f64,
    dw: f64,
    family: FlowFamily,
    drift_shift: bool,
) -> Result<(f64, f64)> {
    let terms = SplitTerms::evaluate(model, scratch, i)?;
    let (l, r) = (model.lower()[i], model.upper()[i]);
    let y = scratch[i];
    let (u, v) = (y - l, r - y);
    let g = terms.factor;

    let mut push_lower = terms.drift_lower;
    let mut push_upper = terms.drift_upper;
    let mut rate_lower = terms.quotient_lower;
    let mut rate_upper = terms.quotient_upper;
    if drift_shift {
        // Move a negligible boundary drift out of the explicit push and into
        // the multiplicative rate; the split still sums to f_i(y).
        let h = BOUNDARY_GUARD * (r - l);
        if push_lower.abs() < DRIFT_SHIFT_THRESHOLD {
            rate_lower += push_lower / u.max(h);
            push_lower = 0.0;
        }
        if push_upper.abs() < DRIFT_SHIFT_THRESHOLD {
            rate_upper -= push_upper / v.max(h);
            push_upper = 0.0;
        }
    }

    let beta_lower = g * v;
    let beta_upper = -g * u;
    let mut exp_lower = (rate_lower - 0.5 * beta_lower * beta_lower) * dt + beta_lower * dw;
    let mut exp_upper = (rate_upper - 0.5 * beta_upper * beta_upper) * dt + beta_upper * dw;

    if family == FlowFamily::Milstein {
        let dg = model
            .diffusion_factor_deriv(scratch, i)
            .ok_or(SdeError::MissingDerivative { scheme: "mil-mean" })?;
        let dg = finite(dg, "diffusion factor derivative", i, scratch)?;
        let (gamma_lower, gamma_upper) = gamma_pair(g, dg, u, v);
        let q = dw * dw - dt;
        exp_lower += gamma_lower * q;
        exp_upper += gamma_upper * q;
    }

    let exp_lower = finite(exp_lower, "lower flow exponent", i, scratch)?;
    let exp_upper = finite(exp_upper, "upper flow exponent", i, scratch)?;

    let y_left = l + exp_lower.exp() * (u + push_lower * dt);
    let y_right = r - exp_upper.exp() * (v - push_upper * dt);
    Ok((y_left, y_right))
}

fn whole_flow(
    model: &BoundedSdeModel,
    y_n: &State,
    dt: f64,
    dw: &[f64],
    family: FlowFamily,
    pick_right: bool,
) -> Result<Vec<f64>> {
    model.check_interior(&y_n.y)?;
    if dw.len() != model.dim() {
        return Err(SdeError::DimensionMismatch {
            expected: model.dim(),
            got: dw.len(),
        });
    }
    let mut scratch = y_n.y.clone();
    (0..model.dim())
        .map(|i| {
            let (left, right) = component_flows(model, &mut scratch, i, dt, dw[i], family, false)?;
            Ok(if pick_right { right } else { left })
        })
        .collect()
}

/// `Y^L_i = L_i + exp(alpha^L_i dt + beta^L_i dW_i) (Y_i + f_i(Pi^L Y) dt - L_i)`.
pub fn euler_left_flow(model: &BoundedSdeModel, y_n: &State, dt: f64, dw: &[f64]) -> Result<Vec<f64>> {
    whole_flow(model, y_n, dt, dw, FlowFamily::Euler, false)
}

/// `Y^R_i = R_i - exp(alpha^R_i dt + beta^R_i dW_i) (R_i - Y_i - f_i(Pi^R Y) dt)`.
pub fn euler_right_flow(model: &BoundedSdeModel, y_n: &State, dt: f64, dw: &[f64]) -> Result<Vec<f64>> {
    whole_flow(model, y_n, dt, dw, FlowFamily::Euler, true)
}

/// Lower flow with the exponent augmented by `gamma^L_i (dW_i^2 - dt)`.
pub fn milstein_left_flow(model: &BoundedSdeModel, y_n: &State, dt: f64, dw: &[f64]) -> Result<Vec<f64>> {
    whole_flow(model, y_n, dt, dw, FlowFamily::Milstein, false)
}

/// Upper flow with the exponent augmented by `gamma^R_i (dW_i^2 - dt)`.
pub fn milstein_right_flow(model: &BoundedSdeModel, y_n: &State, dt: f64, dw: &[f64]) -> Result<Vec<f64>> {
    whole_flow(model, y_n, dt, dw, FlowFamily::Milstein, true)
}
