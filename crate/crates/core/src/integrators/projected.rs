//! Classical Euler-Maruyama and Milstein updates clamped into `[L, R]`.

use crate::domain::{finite, BoundedSdeModel, State};
use crate::error::{Result, SdeError};

/// Unclamped classical update of component `i`.
pub(crate) fn classical_component(
    model: &BoundedSdeModel,
    y: &[f64],
    i: usize,
    dt: f64,
    dw: f64,
    milstein: bool,
) -> Result<f64> {
    let f = finite(model.drift(y, i), "drift", i, y)?;
    let g = finite(model.diffusion(y, i), "diffusion", i, y)?;
    let mut next = y[i] + f * dt + g * dw;
    if milstein {
        let dg = model
            .diffusion_deriv(y, i)
            .ok_or(SdeError::MissingDerivative { scheme: "proj-mil" })?;
        let dg = finite(dg, "diffusion derivative", i, y)?;
        next += 0.5 * g * dg * (dw * dw - dt);
    }
    Ok(next)
}

fn projected(model: &BoundedSdeModel, y_n: &State, dt: f64, dw: &[f64], milstein: bool) -> Result<Vec<f64>> {
    if dw.len() != model.dim() || y_n.y.len() != model.dim() {
        return Err(SdeError::DimensionMismatch {
            expected: model.dim(),
            got: dw.len().min(y_n.y.len()),
        });
    }
    (0..model.dim())
        .map(|i| {
            let tilde = classical_component(model, &y_n.y, i, dt, dw[i], milstein)?;
            Ok(tilde.clamp(model.lower()[i], model.upper()[i]))
        })
        .collect()
}

/// `max(min(R_i, X_i + f_i dt + G_i dW_i), L_i)`.
pub fn projected_euler_step(model: &BoundedSdeModel, y_n: &State, dt: f64, dw: &[f64]) -> Result<Vec<f64>> {
    projected(model, y_n, dt, dw, false)
}

/// Milstein variant: adds `G_i G_i' (dW_i^2 - dt) / 2` before clamping.
pub fn projected_milstein_step(model: &BoundedSdeModel, y_n: &State, dt: f64, dw: &[f64]) -> Result<Vec<f64>> {
    projected(model, y_n, dt, dw, true)
}
