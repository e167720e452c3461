use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{BoundedSdeModel, TimeGrid};
use crate::error::{Result, SdeError};
use crate::integrators::{simulate_with, Scheme, SchemeConfig, StepResult, Stepper};

use super::brownian::generate_lattice;
use super::fit::{fit_order, mean_with_stderr};

pub const DEFAULT_SUBSTEPS: usize = 1000;

/// Inputs of a one-step error probe.
#[derive(Debug, Clone)]
pub struct Probe<'a> {
    pub model: &'a BoundedSdeModel,
    pub config: SchemeConfig,
    pub y0: Vec<f64>,
    pub dt_list: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    /// Substeps of the reference solution over one step.
    pub substeps: usize,
    /// Scheme of the reference; `None` picks Mil-Mean when the model
    /// supplies `gbar'` and Em-Mean otherwise.
    pub reference: Option<SchemeConfig>,
}

impl<'a> Probe<'a> {
    pub fn new(model: &'a BoundedSdeModel, config: SchemeConfig, y0: Vec<f64>, dt_list: Vec<f64>) -> Self {
        Self {
            model,
            config,
            y0,
            dt_list,
            realizations: 2000,
            seed: 0,
            substeps: DEFAULT_SUBSTEPS,
            reference: None,
        }
    }

    fn reference_config(&self) -> SchemeConfig {
        self.reference.unwrap_or_else(|| {
            let scheme = if self.model.has_diffusion_derivative() {
                Scheme::MilMean
            } else {
                Scheme::EmMean
            };
            SchemeConfig::new(scheme).with_drift_shift(self.config.drift_shift)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub dt: f64,
    /// `E |Y_1 - X(dt)|^2` over the realizations.
    pub mse: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub model: String,
    pub scheme: Scheme,
    pub config: SchemeConfig,
    pub y0: Vec<f64>,
    pub rows: Vec<ProbeRow>,
    /// Slope of `log2 mse` against `log2 dt`.
    pub exponent: f64,
    pub intercept: f64,
    pub realizations: usize,
    pub seed: u64,
    pub substeps: usize,
    pub reference: String,
}

/// Mean-square one-step error against a fine reference driven by the same
/// Brownian path: the single step uses the sum of the substep increments.
pub fn local_error_probe(probe: &Probe) -> Result<ProbeReport> {
    if probe.realizations == 0 || probe.substeps == 0 {
        return Err(SdeError::InvalidConfig(
            "probe needs realizations >= 1 and substeps >= 1".into(),
        ));
    }
    probe.config.validate(Some(probe.model))?;
    let ref_config = probe.reference_config();
    ref_config.validate(Some(probe.model))?;
    probe.model.check_interior(&probe.y0)?;
    if probe.dt_list.len() < 2 {
        return Err(SdeError::InvalidConfig("probe needs at least two step sizes".into()));
    }
    let mut dt_list = probe.dt_list.clone();
    if let Some(dt) = dt_list.iter().find(|dt| !(dt.is_finite() && **dt > 0.0)) {
        return Err(SdeError::InvalidConfig(format!(
            "step sizes must be positive, got {dt}"
        )));
    }
    dt_list.sort_by(|a, b| b.total_cmp(a));
    dt_list.dedup();
    let grids = dt_list
        .iter()
        .map(|&dt| TimeGrid::new(dt, probe.substeps))
        .collect::<Result<Vec<_>>>()?;

    let d = probe.model.dim();
    let results: Vec<Result<Vec<f64>>> = (0..probe.realizations)
        .into_par_iter()
        .map(|r| {
            let mut stepper = Stepper::new(probe.model, probe.config)?;
            let mut out = StepResult::with_dim(d);
            grids
                .iter()
                .map(|grid| {
                    let lattice = generate_lattice(d, grid, probe.seed, r as u64);
                    let reference = simulate_with(
                        probe.model,
                        &ref_config,
                        &probe.y0,
                        grid,
                        lattice.as_slice(),
                        |_, _, _| {},
                    )?;
                    stepper.step_into(&probe.y0, grid.t_final, &lattice.totals(), &mut out)?;
                    Ok(out.y_next.iter().zip(&reference).map(|(a, b)| (a - b) * (a - b)).sum())
                })
                .collect()
        })
        .collect();

    let mut per_level = vec![Vec::with_capacity(probe.realizations); dt_list.len()];
    for (r, res) in results.into_iter().enumerate() {
        let errors = res.map_err(|e| SdeError::Realization {
            realization: r as u64,
            seed: probe.seed,
            source: Box::new(e),
        })?;
        for (level, e) in per_level.iter_mut().zip(errors) {
            level.push(e);
        }
    }
    let rows: Vec<ProbeRow> = dt_list
        .iter()
        .zip(&per_level)
        .map(|(&dt, errs)| {
            let (mse, stderr) = mean_with_stderr(errs);
            ProbeRow { dt, mse, stderr }
        })
        .collect();
    let mse: Vec<f64> = rows.iter().map(|r| r.mse).collect();
    let fit = fit_order(&dt_list, &mse)?;

    Ok(ProbeReport {
        model: probe.model.label().to_string(),
        scheme: probe.config.scheme,
        config: probe.config,
        y0: probe.y0.clone(),
        rows,
        exponent: fit.order,
        intercept: fit.intercept,
        realizations: probe.realizations,
        seed: probe.seed,
        substeps: probe.substeps,
        reference: format!("{} x{}", ref_config.scheme.name(), probe.substeps),
    })
}
