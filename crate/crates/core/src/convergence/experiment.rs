use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{BoundedSdeModel, TimeGrid};
use crate::error::{Result, SdeError};
use crate::integrators::{simulate_with, Scheme, SchemeConfig};
use crate::models::{ExactSolution, ModelInstance};

use super::brownian::{generate_lattice, BrownianLattice};
use super::fit::{fit_order, rmse_with_stderr};

/// Reference step used when no closed form is available.
pub const DEFAULT_REFERENCE_DT: f64 = 1.0 / 16384.0;

/// Points whose RMSE is below this multiple of the reference floor are left
/// out of the order fit.
pub const FLOOR_EXCLUSION_FACTOR: f64 = 10.0;

#[derive(Clone)]
pub enum Reference {
    /// Closed-form `X(T)` as a function of `(y0, T, W(T))`.
    Exact(ExactSolution),
    /// The given scheme on the finest lattice with step `dt`.
    FineScheme { config: SchemeConfig, dt: f64 },
}

impl Reference {
    pub fn mil_mean(dt: f64) -> Self {
        Reference::FineScheme {
            config: SchemeConfig::new(Scheme::MilMean),
            dt,
        }
    }

    /// Exact solution when the instance has one, otherwise Mil-Mean at
    /// [`DEFAULT_REFERENCE_DT`].
    pub fn default_for(instance: &ModelInstance) -> Self {
        match &instance.exact {
            Some(exact) => Reference::Exact(exact.clone()),
            None => Reference::mil_mean(DEFAULT_REFERENCE_DT),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Reference::Exact(_) => "exact".to_string(),
            Reference::FineScheme { config, dt } => format!("{}@{dt:e}", config.scheme.name()),
        }
    }
}

impl fmt::Debug for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorNorm {
    /// `|X(T) - Y_N|`.
    #[default]
    EndTime,
    /// `max_n |X(t_n) - Y_n|` over the coarse grid.
    MaxOverGrid,
}

/// Inputs of a strong-error experiment.
#[derive(Debug, Clone)]
pub struct Experiment<'a> {
    pub model: &'a BoundedSdeModel,
    pub config: SchemeConfig,
    pub y0: Vec<f64>,
    pub t_final: f64,
    pub dt_list: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub reference: Reference,
    pub norm: ErrorNorm,
}

impl<'a> Experiment<'a> {
    /// Experiment with the defaults of `instance`: its `y0`, `T`,
    /// realization count and reference.
    pub fn for_instance(instance: &'a ModelInstance, config: SchemeConfig, dt_list: Vec<f64>, seed: u64) -> Self {
        Self {
            model: &instance.model,
            config,
            y0: instance.y0.clone(),
            t_final: instance.t_final,
            dt_list,
            realizations: instance.realizations,
            seed,
            reference: Reference::default_for(instance),
            norm: ErrorNorm::EndTime,
        }
    }
}

/// Per-level squared errors, indexed `[level][realization]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredErrors {
    /// Step sizes, decreasing.
    pub dt_list: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
    /// Squared distance between the reference at `dt_ref` and at `2 dt_ref`,
    /// per realization. Empty for exact references.
    pub floor: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub model: String,
    pub scheme: Scheme,
    pub config: SchemeConfig,
    pub y0: Vec<f64>,
    pub t_final: f64,
    pub dt_list: Vec<f64>,
    pub rmse_list: Vec<f64>,
    pub stderr_list: Vec<f64>,
    pub fitted_order: f64,
    pub fit_intercept: f64,
    /// Step sizes left out of the fit because their RMSE is within
    /// [`FLOOR_EXCLUSION_FACTOR`] of the reference floor.
    pub fit_excluded: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    pub reference: String,
    /// RMSE between the reference at `dt_ref` and at `2 dt_ref`.
    pub reference_floor: Option<f64>,
    pub norm: ErrorNorm,
}

/// Reference at `T`, along the fine grid (max norm only), and the squared floor distance.
type ReferenceValues = (Vec<f64>, Vec<Vec<f64>>, Option<f64>);

struct Plan {
    dt_list: Vec<f64>,
    fine: TimeGrid,
    /// Fine steps per coarse step, per level.
    factors: Vec<usize>,
    levels: Vec<TimeGrid>,
}

fn sorted_steps(dt_list: &[f64]) -> Result<Vec<f64>> {
    if dt_list.is_empty() {
        return Err(SdeError::InvalidConfig("dt list is empty".into()));
    }
    if let Some(dt) = dt_list.iter().find(|dt| !(dt.is_finite() && **dt > 0.0)) {
        return Err(SdeError::InvalidConfig(format!(
            "step sizes must be positive, got {dt}"
        )));
    }
    let mut sorted = dt_list.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted.dedup();
    Ok(sorted)
}

fn whole_ratio(coarse: f64, fine: f64) -> Option<usize> {
    let ratio = coarse / fine;
    let k = ratio.round();
    (k >= 1.0 && (ratio - k).abs() <= 1e-9 * k).then_some(k as usize)
}

impl Experiment<'_> {
    fn plan(&self) -> Result<Plan> {
        if self.realizations == 0 {
            return Err(SdeError::InvalidConfig("need at least one realization".into()));
        }
        self.config.validate(Some(self.model))?;
        self.model.check_interior(&self.y0)?;
        let dt_list = sorted_steps(&self.dt_list)?;
        let levels = dt_list
            .iter()
            .map(|&dt| TimeGrid::from_step(self.t_final, dt))
            .collect::<Result<Vec<_>>>()?;
        let finest = *dt_list.last().expect("non-empty");
        let fine_dt = match &self.reference {
            Reference::Exact(_) => finest,
            Reference::FineScheme { config, dt } => {
                config.validate(Some(self.model))?;
                if !(*dt < finest) {
                    return Err(SdeError::InvalidConfig(format!(
                        "reference step {dt} must be smaller than every tested step (smallest {finest})"
                    )));
                }
                *dt
            }
        };
        let fine = TimeGrid::from_step(self.t_final, fine_dt)?;
        let factors = dt_list
            .iter()
            .map(|&dt| {
                whole_ratio(dt, fine.dt).ok_or_else(|| {
                    SdeError::InvalidGrid(format!(
                        "dt = {dt} is not a whole multiple of the finest step {}",
                        fine.dt
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Plan {
            dt_list,
            fine,
            factors,
            levels,
        })
    }

    /// Reference values at every fine grid point (only built for the max norm)
    /// and at `T`, plus the squared floor distance.
    fn reference_values(&self, plan: &Plan, lattice: &BrownianLattice) -> Result<ReferenceValues> {
        let keep_path = self.norm == ErrorNorm::MaxOverGrid;
        match &self.reference {
            Reference::Exact(exact) => {
                let end = exact(&self.y0, self.t_final, &lattice.totals());
                let path = if keep_path {
                    lattice
                        .path_values(1)
                        .iter()
                        .enumerate()
                        .map(|(m, w)| exact(&self.y0, plan.fine.time(m), w))
                        .collect()
                } else {
                    Vec::new()
                };
                Ok((end, path, None))
            }
            Reference::FineScheme { config, .. } => {
                let mut path = Vec::new();
                if keep_path {
                    path.reserve(plan.fine.steps + 1);
                    path.push(self.y0.clone());
                }
                let end = simulate_with(
                    self.model,
                    config,
                    &self.y0,
                    &plan.fine,
                    lattice.as_slice(),
                    |_, _, res| {
                        if keep_path {
                            path.push(res.y_next.clone());
                        }
                    },
                )?;
                let floor = if plan.fine.steps.is_multiple_of(2) {
                    let half = TimeGrid::new(self.t_final, plan.fine.steps / 2)?;
                    let coarse = lattice.coarsen(2)?;
                    let y = simulate_with(self.model, config, &self.y0, &half, coarse.as_slice(), |_, _, _| {})?;
                    Some(squared_distance(&end, &y))
                } else {
                    None
                };
                Ok((end, path, floor))
            }
        }
    }

    fn realization(&self, plan: &Plan, r: usize) -> Result<(Vec<f64>, Option<f64>)> {
        let lattice = generate_lattice(self.model.dim(), &plan.fine, self.seed, r as u64);
        let (end, path, floor) = self.reference_values(plan, &lattice)?;
        let mut errors = Vec::with_capacity(plan.levels.len());
        for (grid, &factor) in plan.levels.iter().zip(&plan.factors) {
            let coarse = lattice.coarsen(factor)?;
            let mut worst: f64 = 0.0;
            let y = simulate_with(
                self.model,
                &self.config,
                &self.y0,
                grid,
                coarse.as_slice(),
                |n, _, res| {
                    if !path.is_empty() {
                        worst = worst.max(squared_distance(&path[n * factor], &res.y_next));
                    }
                },
            )?;
            errors.push(match self.norm {
                ErrorNorm::EndTime => squared_distance(&end, &y),
                ErrorNorm::MaxOverGrid => worst,
            });
        }
        Ok((errors, floor))
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs every realization and returns the squared errors in realization
/// order. Work is spread over the rayon pool; the result does not depend on
/// the number of workers.
pub fn squared_errors(exp: &Experiment) -> Result<SquaredErrors> {
    let plan = exp.plan()?;
    let results: Vec<Result<(Vec<f64>, Option<f64>)>> = (0..exp.realizations)
        .into_par_iter()
        .map(|r| exp.realization(&plan, r))
        .collect();
    let mut levels = vec![Vec::with_capacity(exp.realizations); plan.dt_list.len()];
    let mut floor = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        let (errors, f) = res.map_err(|e| SdeError::Realization {
            realization: r as u64,
            seed: exp.seed,
            source: Box::new(e),
        })?;
        for (level, e) in levels.iter_mut().zip(errors) {
            level.push(e);
        }
        floor.extend(f);
    }
    Ok(SquaredErrors {
        dt_list: plan.dt_list,
        levels,
        floor,
    })
}

/// Monte Carlo strong-error experiment: RMSE per step size and the fitted order.
pub fn rmse_experiment(exp: &Experiment) -> Result<ConvergenceReport> {
    let sq = squared_errors(exp)?;
    let (rmse_list, stderr_list): (Vec<f64>, Vec<f64>) = sq.levels.iter().map(|l| rmse_with_stderr(l)).unzip();
    let reference_floor = (!sq.floor.is_empty()).then(|| rmse_with_stderr(&sq.floor).0);

    let threshold = reference_floor.map_or(0.0, |f| FLOOR_EXCLUSION_FACTOR * f);
    let keep: Vec<usize> = (0..rmse_list.len()).filter(|&k| rmse_list[k] >= threshold).collect();
    let keep = if keep.len() >= 2 {
        keep
    } else {
        (0..rmse_list.len()).collect()
    };
    let fit_excluded = (0..rmse_list.len())
        .filter(|k| !keep.contains(k))
        .map(|k| sq.dt_list[k])
        .collect();
    let fit = if rmse_list.len() >= 2 {
        let dts: Vec<f64> = keep.iter().map(|&k| sq.dt_list[k]).collect();
        let errs: Vec<f64> = keep.iter().map(|&k| rmse_list[k]).collect();
        fit_order(&dts, &errs)?
    } else {
        return Err(SdeError::InvalidConfig(
            "an order fit needs at least two step sizes".into(),
        ));
    };

    Ok(ConvergenceReport {
        model: exp.model.label().to_string(),
        scheme: exp.config.scheme,
        config: exp.config,
        y0: exp.y0.clone(),
        t_final: exp.t_final,
        dt_list: sq.dt_list,
        rmse_list,
        stderr_list,
        fitted_order: fit.order,
        fit_intercept: fit.intercept,
        fit_excluded,
        realizations: exp.realizations,
        seed: exp.seed,
        reference: exp.reference.describe(),
        reference_floor,
        norm: exp.norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelName;
    use std::sync::Arc;

    fn still() -> BoundedSdeModel {
        BoundedSdeModel::new("still", vec![0.0], vec![1.0], |_, _| 0.0, |_, _| 0.0)
            .unwrap()
            .with_diffusion_derivative(|_, _| 0.0)
    }

    fn exp_for(model: &BoundedSdeModel, reference: Reference) -> Experiment<'_> {
        Experiment {
            model,
            config: SchemeConfig::new(Scheme::EmMean),
            y0: vec![0.4],
            t_final: 1.0,
            dt_list: vec![0.125, 0.25, 0.0625],
            realizations: 5,
            seed: 3,
            reference,
            norm: ErrorNorm::EndTime,
        }
    }

    #[test]
    fn still_model_has_zero_error_at_every_level() {
        let m = still();
        let exact: ExactSolution = Arc::new(|y0: &[f64], _, _: &[f64]| y0.to_vec());
        let sq = squared_errors(&exp_for(&m, Reference::Exact(exact))).unwrap();
        assert_eq!(sq.dt_list, vec![0.25, 0.125, 0.0625]);
        assert!(sq.levels.iter().flatten().all(|&e| e == 0.0));
        assert!(sq.floor.is_empty());

        let sq = squared_errors(&exp_for(&m, Reference::mil_mean(1.0 / 256.0))).unwrap();
        assert!(sq.levels.iter().flatten().all(|&e| e == 0.0));
        assert_eq!(sq.floor, vec![0.0; 5]);
    }

    #[test]
    fn grid_checks() {
        let m = still();
        let mut e = exp_for(&m, Reference::mil_mean(0.0625));
        assert!(matches!(squared_errors(&e), Err(SdeError::InvalidConfig(_))));
        e.reference = Reference::mil_mean(0.01);
        assert!(matches!(squared_errors(&e), Err(SdeError::InvalidGrid(_))));
        e.reference = Reference::mil_mean(1.0 / 1024.0);
        e.dt_list = vec![0.3];
        assert!(matches!(squared_errors(&e), Err(SdeError::InvalidGrid(_))));
        e.dt_list = vec![];
        assert!(squared_errors(&e).is_err());
        e.dt_list = vec![0.25];
        e.realizations = 0;
        assert!(squared_errors(&e).is_err());
    }

    #[test]
    fn path_failure_names_realization_and_seed() {
        let m = BoundedSdeModel::new(
            "bad",
            vec![0.0],
            vec![1.0],
            |y, _| if y[0] > 0.0 { f64::NAN } else { 0.0 },
            |_, _| 1.0,
        )
        .unwrap();
        let exact: ExactSolution = Arc::new(|y0: &[f64], _, _: &[f64]| y0.to_vec());
        let err = squared_errors(&exp_for(&m, Reference::Exact(exact))).unwrap_err();
        assert!(
            matches!(
                err,
                SdeError::Realization {
                    realization: 0,
                    seed: 3,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn max_norm_dominates_end_time() {
        let inst = ModelInstance::get(ModelName::Exact1);
        let mut e = Experiment::for_instance(&inst, SchemeConfig::new(Scheme::EmMean), vec![0.25, 0.125], 11);
        e.realizations = 50;
        let end = squared_errors(&e).unwrap();
        e.norm = ErrorNorm::MaxOverGrid;
        let sup = squared_errors(&e).unwrap();
        for (a, b) in end.levels.iter().flatten().zip(sup.levels.iter().flatten()) {
            assert!(b >= a);
        }
    }

    #[test]
    fn report_shape() {
        let inst = ModelInstance::get(ModelName::Exact1);
        let mut e = Experiment::for_instance(
            &inst,
            SchemeConfig::new(Scheme::EmWeighted),
            vec![0.0625, 0.25, 0.125],
            1,
        );
        e.realizations = 64;
        let report = rmse_experiment(&e).unwrap();
        assert_eq!(report.dt_list, vec![0.25, 0.125, 0.0625]);
        assert_eq!(report.rmse_list.len(), 3);
        assert_eq!(report.stderr_list.len(), 3);
        assert!(report.fitted_order.is_finite());
        assert_eq!(report.reference, "exact");
        assert_eq!(report.reference_floor, None);
        assert!(report.fit_excluded.is_empty());
    }
}
