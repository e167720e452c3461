use serde::Serialize;

use crate::domain::{BoundedSdeModel, FlowTag, State, TimeGrid};
use crate::error::{Result, SdeError};

use super::combine::{select_flow, theta_for, StepResult};
use super::flows::{component_flows, FlowFamily};
use super::projected::classical_component;
use super::{Scheme, SchemeConfig};

/// Reusable single-step driver; owns the scratch buffer so repeated steps do
/// not allocate.
pub struct Stepper<'a> {
    model: &'a BoundedSdeModel,
    config: SchemeConfig,
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a BoundedSdeModel, config: SchemeConfig) -> Result<Self> {
        config.validate(Some(model))?;
        Ok(Self {
            model,
            config,
            scratch: vec![0.0; model.dim()],
        })
    }

    pub fn model(&self) -> &BoundedSdeModel {
        self.model
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    /// Advances `y` by `dt` with Wiener increments `dw`, writing into `out`.
    pub fn step_into(&mut self, y: &[f64], dt: f64, dw: &[f64], out: &mut StepResult) -> Result<()> {
        let d = self.model.dim();
        if y.len() != d || dw.len() != d {
            return Err(SdeError::DimensionMismatch {
                expected: d,
                got: if y.len() != d { y.len() } else { dw.len() },
            });
        }
        if out.y_next.len() != d {
            *out = StepResult::with_dim(d);
        }
        out.theta_clamps = 0;
        out.rounding_guards = 0;

        if self.config.scheme.is_projected() {
            let milstein = self.config.scheme == Scheme::ProjMil;
            for i in 0..d {
                let tilde = classical_component(self.model, y, i, dt, dw[i], milstein)?;
                out.y_left[i] = tilde;
                out.y_right[i] = tilde;
                out.y_next[i] = tilde.clamp(self.model.lower()[i], self.model.upper()[i]);
                out.tags[i] = FlowTag::Projected;
                out.theta_used[i] = f64::NAN;
            }
            return Ok(());
        }

        let family = if self.config.scheme.is_milstein() {
            FlowFamily::Milstein
        } else {
            FlowFamily::Euler
        };
        let policy = self.config.theta_policy();
        self.scratch.copy_from_slice(y);
        for i in 0..d {
            let (l, r) = (self.model.lower()[i], self.model.upper()[i]);
            let (y_left, y_right) = component_flows(
                self.model,
                &mut self.scratch,
                i,
                dt,
                dw[i],
                family,
                self.config.drift_shift,
            )?;
            let (theta, clamped) = theta_for(policy, self.model, y, i);
            let (mut value, tag) = select_flow(y_left, y_right, l, r, theta);
            // The selected value is strictly inside (L, R) in exact arithmetic;
            // rounding can land it on a bound, so step back inside by one ulp.
            if !(value > l) {
                value = l.next_up();
                out.rounding_guards += 1;
            } else if !(value < r) {
                value = r.next_down();
                out.rounding_guards += 1;
            }
            out.y_next[i] = value;
            out.y_left[i] = y_left;
            out.y_right[i] = y_right;
            out.tags[i] = tag;
            if tag == FlowTag::Theta {
                out.theta_used[i] = theta;
                out.theta_clamps += usize::from(clamped);
            } else {
                out.theta_used[i] = f64::NAN;
            }
        }
        Ok(())
    }
}

/// Single step of the configured scheme from `state`.
pub fn step(model: &BoundedSdeModel, config: &SchemeConfig, state: &State, dt: f64, dw: &[f64]) -> Result<StepResult> {
    let mut stepper = Stepper::new(model, *config)?;
    let mut out = StepResult::with_dim(model.dim());
    stepper.step_into(&state.y, dt, dw, &mut out)?;
    Ok(out)
}

fn check_increments(model: &BoundedSdeModel, grid: &TimeGrid, increments: &[f64]) -> Result<()> {
    let needed = grid.steps * model.dim();
    if increments.len() != needed {
        return Err(SdeError::InvalidGrid(format!(
            "expected {needed} increments ({} steps x {} components), got {}",
            grid.steps,
            model.dim(),
            increments.len()
        )));
    }
    Ok(())
}

/// Runs the scheme over `grid`, calling `visit(n, t_n, result)` after every
/// step `n = 1..=N`. `increments` is step-major: step `n` uses
/// `increments[(n - 1) * d .. n * d]`. Returns the final state.
pub fn simulate_with<F>(
    model: &BoundedSdeModel,
    config: &SchemeConfig,
    y0: &[f64],
    grid: &TimeGrid,
    increments: &[f64],
    mut visit: F,
) -> Result<Vec<f64>>
where
    F: FnMut(usize, f64, &StepResult),
{
    model.check_interior(y0)?;
    check_increments(model, grid, increments)?;
    let d = model.dim();
    let mut stepper = Stepper::new(model, *config)?;
    let mut y = y0.to_vec();
    let mut out = StepResult::with_dim(d);
    for (n, dw) in increments.chunks_exact(d).enumerate() {
        stepper.step_into(&y, grid.dt, dw, &mut out)?;
        y.copy_from_slice(&out.y_next);
        visit(n + 1, grid.time(n + 1), &out);
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    /// `states[n]` is `Y_n`; `states[0]` is the initial value.
    pub states: Vec<Vec<f64>>,
    /// `tags[n - 1]` are the flow tags of `Y_n`.
    pub tags: Vec<Vec<FlowTag>>,
    pub theta_used: Vec<Vec<f64>>,
    pub theta_clamps: usize,
    pub rounding_guards: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Full path over `grid`, recording states, tags and theta weights.
pub fn simulate_path(
    model: &BoundedSdeModel,
    config: &SchemeConfig,
    y0: &[f64],
    grid: &TimeGrid,
    increments: &[f64],
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        dim: model.dim(),
        times: Vec::with_capacity(grid.steps + 1),
        states: Vec::with_capacity(grid.steps + 1),
        tags: Vec::with_capacity(grid.steps),
        theta_used: Vec::with_capacity(grid.steps),
        theta_clamps: 0,
        rounding_guards: 0,
    };
    traj.times.push(0.0);
    traj.states.push(y0.to_vec());
    simulate_with(model, config, y0, grid, increments, |_, t, res| {
        traj.times.push(t);
        traj.states.push(res.y_next.clone());
        traj.tags.push(res.tags.clone());
        traj.theta_used.push(res.theta_used.clone());
        traj.theta_clamps += res.theta_clamps;
        traj.rounding_guards += res.rounding_guards;
    })?;
    Ok(traj)
}
