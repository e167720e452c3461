//! Model definition, domain geometry and the scalar building blocks shared by
//! every scheme: component projections, boundary Newton quotients and the
//! exponent coefficients of the left and right flows.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SdeError};

/// Relative distance to a boundary below which the Newton quotient switches to
/// a one-sided difference of step `BOUNDARY_GUARD * (R_i - L_i)`.
pub const BOUNDARY_GUARD: f64 = 1e-10;

/// A per-component model function: `(state, i) -> value of component i`.
///
/// Evaluating one component at a time keeps the boundary projections cheap for
/// large systems where `f_i` only touches a few neighbours.
pub type ComponentFn = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

/// SDE system `dX_i = f_i(X) dt + g_i(X) (X_i - L_i) (R_i - X_i) dW_i`.
#[derive(Clone)]
pub struct BoundedSdeModel {
    label: String,
    lower: Vec<f64>,
    upper: Vec<f64>,
    drift: ComponentFn,
    diffusion_factor: ComponentFn,
    diffusion_factor_deriv: Option<ComponentFn>,
}

impl BoundedSdeModel {
    pub fn new<F, G>(
        label: impl Into<String>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        drift: F,
        diffusion_factor: G,
    ) -> Result<Self>
    where
        F: Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
    {
        if lower.is_empty() {
            return Err(SdeError::InvalidModel("dimension must be positive".into()));
        }
        if lower.len() != upper.len() {
            return Err(SdeError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&l, &r)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && r.is_finite() && r > l) {
                return Err(SdeError::InvalidModel(format!(
                    "component {i}: need finite bounds with R > L, got L = {l}, R = {r}"
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            lower,
            upper,
            drift: Arc::new(drift),
            diffusion_factor: Arc::new(diffusion_factor),
            diffusion_factor_deriv: None,
        })
    }

    /// Attach `d/dy_i gbar_i(y_i)`. Supplying it asserts the noise factor of
    /// component `i` depends on `y_i` alone, which the Milstein flows and the
    /// weighted theta policy rely on.
    pub fn with_diffusion_derivative<H>(mut self, deriv: H) -> Self
    where
        H: Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
    {
        self.diffusion_factor_deriv = Some(Arc::new(deriv));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn has_diffusion_derivative(&self) -> bool {
        self.diffusion_factor_deriv.is_some()
    }

    pub fn drift(&self, y: &[f64], i: usize) -> f64 {
        (self.drift)(y, i)
    }

    pub fn diffusion_factor(&self, y: &[f64], i: usize) -> f64 {
        (self.diffusion_factor)(y, i)
    }

    pub fn diffusion_factor_deriv(&self, y: &[f64], i: usize) -> Option<f64> {
        self.diffusion_factor_deriv.as_ref().map(|d| d(y, i))
    }

    /// Full diffusion coefficient `G_i(y)`.
    pub fn diffusion(&self, y: &[f64], i: usize) -> f64 {
        self.diffusion_factor(y, i) * (y[i] - self.lower[i]) * (self.upper[i] - y[i])
    }

    /// `d/dy_i G_i(y)` for diagonal noise, when the derivative of the factor is known.
    pub fn diffusion_deriv(&self, y: &[f64], i: usize) -> Option<f64> {
        let dg = self.diffusion_factor_deriv(y, i)?;
        let g = self.diffusion_factor(y, i);
        let (u, v) = (y[i] - self.lower[i], self.upper[i] - y[i]);
        Some(dg * u * v + g * (v - u))
    }

    /// Strict membership in the open box `D`.
    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.dim()
            && y.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &r))| l < v && v < r)
    }

    /// Membership in the closed box.
    pub fn contains_closed(&self, y: &[f64]) -> bool {
        y.len() == self.dim()
            && y.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &r))| l <= v && v <= r)
    }

    /// Returns the first component of `y` outside the open box, as an error.
    pub fn check_interior(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(SdeError::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        for (i, &v) in y.iter().enumerate() {
            let (l, r) = (self.lower[i], self.upper[i]);
            if !(l < v && v < r) {
                return Err(SdeError::OutsideDomain {
                    component: i,
                    value: v,
                    lower: l,
                    upper: r,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.dim() {
            Ok(())
        } else {
            Err(SdeError::IndexOutOfRange {
                index: i,
                dim: self.dim(),
            })
        }
    }
}

impl fmt::Debug for BoundedSdeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedSdeModel")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("diffusion_factor_deriv", &self.has_diffusion_derivative())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub y: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(y: Vec<f64>, t: f64) -> Self {
        Self { y, t }
    }
}

/// Uniform partition of `[0, T]` into `N` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(SdeError::InvalidGrid(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        let dt = if steps == 0 { t_final } else { t_final / steps as f64 };
        Ok(Self { t_final, steps, dt })
    }

    /// Grid with step `dt`, which must divide `t_final` into an integer number of steps.
    pub fn from_step(t_final: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SdeError::InvalidGrid(format!("step must be positive, got {dt}")));
        }
        let ratio = t_final / dt;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(SdeError::InvalidGrid(format!(
                "dt = {dt} does not divide T = {t_final} into whole steps"
            )));
        }
        Self::new(t_final, steps as usize)
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Which flow produced a component of an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum FlowTag {
    /// The lower-anchored flow `Y^L`, used when `Y^R <= L`.
    Left,
    /// The upper-anchored flow `Y^R`, used when `Y^L >= R`.
    Right,
    /// The convex mix `(1 - theta) Y^L + theta Y^R`.
    Theta,
    /// Classical update clamped into `[L, R]`; no split flows involved.
    Projected,
}

impl FlowTag {
    pub fn code(self) -> &'static str {
        match self {
            FlowTag::Left => "L",
            FlowTag::Right => "R",
            FlowTag::Theta => "T",
            FlowTag::Projected => "P",
        }
    }
}

/// `Pi_i^s(y)`: copy of `y` with component `i` replaced by `s`.
pub fn project_component(y: &[f64], i: usize, s: f64) -> Result<Vec<f64>> {
    if i >= y.len() {
        return Err(SdeError::IndexOutOfRange { index: i, dim: y.len() });
    }
    let mut out = y.to_vec();
    out[i] = s;
    Ok(out)
}

/// `f_i(Pi_i^s(y))` evaluated in place: `scratch` must hold `y` and is restored.
pub(crate) fn drift_projected(model: &BoundedSdeModel, scratch: &mut [f64], i: usize, s: f64) -> f64 {
    let saved = scratch[i];
    scratch[i] = s;
    let value = model.drift(scratch, i);
    scratch[i] = saved;
    value
}

pub(crate) fn finite(value: f64, quantity: &'static str, component: usize, state: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(SdeError::NonFinite {
            quantity,
            component,
            state: state.to_vec(),
        })
    }
}

/// Drift and noise values component `i` needs to build both flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitTerms {
    /// `f_i(Pi_i^{L_i} y)`
    pub drift_lower: f64,
    /// `f_i(Pi_i^{R_i} y)`
    pub drift_upper: f64,
    /// `F^L_i(y)`
    pub quotient_lower: f64,
    /// `F^R_i(y)`
    pub quotient_upper: f64,
    /// `g_i(y)`
    pub factor: f64,
}

impl SplitTerms {
    /// `scratch` holds the current state and is left unchanged.
    pub(crate) fn evaluate(model: &BoundedSdeModel, scratch: &mut [f64], i: usize) -> Result<Self> {
        let f_y = finite(model.drift(scratch, i), "drift", i, scratch)?;
        let drift_lower = finite(
            drift_projected(model, scratch, i, model.lower[i]),
            "drift at lower bound",
            i,
            scratch,
        )?;
        let drift_upper = finite(
            drift_projected(model, scratch, i, model.upper[i]),
            "drift at upper bound",
            i,
            scratch,
        )?;
        let quotient_lower = quotient_lower(model, scratch, i, f_y, drift_lower)?;
        let quotient_upper = quotient_upper(model, scratch, i, f_y, drift_upper)?;
        let factor = finite(model.diffusion_factor(scratch, i), "diffusion factor", i, scratch)?;
        Ok(Self {
            drift_lower,
            drift_upper,
            quotient_lower,
            quotient_upper,
            factor,
        })
    }
}

fn quotient_lower(model: &BoundedSdeModel, scratch: &mut [f64], i: usize, f_y: f64, drift_lower: f64) -> Result<f64> {
    let (l, r) = (model.lower[i], model.upper[i]);
    let h = BOUNDARY_GUARD * (r - l);
    let dist = scratch[i] - l;
    let q = if dist.abs() < h {
        let f_h = finite(drift_projected(model, scratch, i, l + h), "drift", i, scratch)?;
        (f_h - drift_lower) / h
    } else {
        (f_y - drift_lower) / dist
    };
    finite(q, "lower Newton quotient", i, scratch)
}

fn quotient_upper(model: &BoundedSdeModel, scratch: &mut [f64], i: usize, f_y: f64, drift_upper: f64) -> Result<f64> {
    let (l, r) = (model.lower[i], model.upper[i]);
    let h = BOUNDARY_GUARD * (r - l);
    let dist = scratch[i] - r;
    let q = if dist.abs() < h {
        let f_h = finite(drift_projected(model, scratch, i, r - h), "drift", i, scratch)?;
        (f_h - drift_upper) / -h
    } else {
        (f_y - drift_upper) / dist
    };
    finite(q, "upper Newton quotient", i, scratch)
}

/// `F^L_i(y) = (f_i(y) - f_i(Pi_i^{L_i} y)) / (y_i - L_i)`.
///
/// Within `BOUNDARY_GUARD * (R_i - L_i)` of `L_i` the quotient is replaced by
/// a one-sided difference of the same width, approximating `d_i f_i` at the bound.
pub fn newton_quotient_left(model: &BoundedSdeModel, y: &[f64], i: usize) -> Result<f64> {
    model.check_index(i)?;
    let mut scratch = y.to_vec();
    let f_y = finite(model.drift(&scratch, i), "drift", i, y)?;
    let f_l = finite(
        drift_projected(model, &mut scratch, i, model.lower[i]),
        "drift at lower bound",
        i,
        y,
    )?;
    quotient_lower(model, &mut scratch, i, f_y, f_l)
}

/// `F^R_i(y) = (f_i(y) - f_i(Pi_i^{R_i} y)) / (y_i - R_i)`, guarded like
/// [`newton_quotient_left`].
pub fn newton_quotient_right(model: &BoundedSdeModel, y: &[f64], i: usize) -> Result<f64> {
    model.check_index(i)?;
    let mut scratch = y.to_vec();
    let f_y = finite(model.drift(&scratch, i), "drift", i, y)?;
    let f_r = finite(
        drift_projected(model, &mut scratch, i, model.upper[i]),
        "drift at upper bound",
        i,
        y,
    )?;
    quotient_upper(model, &mut scratch, i, f_y, f_r)
}

/// `(alpha^L_i, beta^L_i)` of the lower-anchored flow.
pub fn coefficients_left(model: &BoundedSdeModel, y: &[f64], i: usize) -> Result<(f64, f64)> {
    let q = newton_quotient_left(model, y, i)?;
    let beta = finite(model.diffusion_factor(y, i), "diffusion factor", i, y)? * (model.upper[i] - y[i]);
    Ok((q - 0.5 * beta * beta, beta))
}

/// `(alpha^R_i, beta^R_i)` of the upper-anchored flow.
pub fn coefficients_right(model: &BoundedSdeModel, y: &[f64], i: usize) -> Result<(f64, f64)> {
    let q = newton_quotient_right(model, y, i)?;
    let scale = finite(model.diffusion_factor(y, i), "diffusion factor", i, y)? * (y[i] - model.lower[i]);
    Ok((q - 0.5 * scale * scale, -scale))
}

fn factor_and_deriv(model: &BoundedSdeModel, y: &[f64], i: usize, scheme: &'static str) -> Result<(f64, f64)> {
    model.check_index(i)?;
    let dg = model
        .diffusion_factor_deriv(y, i)
        .ok_or(SdeError::MissingDerivative { scheme })?;
    let g = finite(model.diffusion_factor(y, i), "diffusion factor", i, y)?;
    Ok((g, finite(dg, "diffusion factor derivative", i, y)?))
}

pub(crate) fn gamma_pair(g: f64, dg: f64, u: f64, v: f64) -> (f64, f64) {
    let common = 0.5 * g * v * u;
    (common * (dg * v - g), -common * (dg * u + g))
}

/// Milstein correction `gamma^L_i` for diagonal noise.
pub fn gamma_left(model: &BoundedSdeModel, y: &[f64], i: usize) -> Result<f64> {
    let (g, dg) = factor_and_deriv(model, y, i, "mil-mean")?;
    Ok(gamma_pair(g, dg, y[i] - model.lower[i], model.upper[i] - y[i]).0)
}

/// Milstein correction `gamma^R_i` for diagonal noise.
pub fn gamma_right(model: &BoundedSdeModel, y: &[f64], i: usize) -> Result<f64> {
    let (g, dg) = factor_and_deriv(model, y, i, "mil-mean")?;
    Ok(gamma_pair(g, dg, y[i] - model.lower[i], model.upper[i] - y[i]).1)
}
