//! Randomized falsification of the boundary sign conditions
//! `f_i(Pi_i^{L_i} y) >= 0` and `f_i(Pi_i^{R_i} y) <= 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{drift_projected, BoundedSdeModel};

/// Slack admitted on the boundary inequalities, so models that satisfy them
/// with equality pass despite rounding.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// `f_i(Pi_i^{L_i} y) < 0`
    LowerBoundDrift,
    /// `f_i(Pi_i^{R_i} y) > 0`
    UpperBoundDrift,
    NonFiniteDrift,
    NonFiniteDiffusion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub component: usize,
    pub state: Vec<f64>,
    /// Offending value (the drift at the bound, or the non-finite evaluation).
    pub value: f64,
    /// How far past the tolerance the value lies; infinite for non-finite values.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub model: String,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
    pub violations: usize,
    pub worst: Option<Violation>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "model {}: {} ({} samples, seed {}, {} violations)",
            self.model,
            if self.passed { "PASS" } else { "FAIL" },
            self.samples,
            self.seed,
            self.violations
        )?;
        if let Some(w) = &self.worst {
            write!(
                f,
                "worst: {:?} in component {} value {:e} at {:?}",
                w.kind, w.component, w.value, w.state
            )?;
        }
        Ok(())
    }
}

/// Draws `samples` uniform points of `D` and checks, per component, the
/// boundary drift signs and finiteness of `f` and `g`. Failures are reported,
/// never raised.
pub fn validate_model(model: &BoundedSdeModel, samples: usize, seed: u64) -> ValidationReport {
    let samples = samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = model.dim();
    let mut y = vec![0.0; d];
    let mut violations = 0usize;
    let mut worst: Option<Violation> = None;

    let mut record = |v: Violation| {
        violations += 1;
        if worst.as_ref().is_none_or(|w| v.excess > w.excess) {
            worst = Some(v);
        }
    };

    for _ in 0..samples {
        for (i, slot) in y.iter_mut().enumerate() {
            let (l, r) = (model.lower()[i], model.upper()[i]);
            // open interval: reject the (measure zero) endpoints
            let mut s = l + (r - l) * rng.random::<f64>();
            while s <= l || s >= r {
                s = l + (r - l) * rng.random::<f64>();
            }
            *slot = s;
        }
        for i in 0..d {
            let f = model.drift(&y, i);
            if !f.is_finite() {
                record(Violation {
                    kind: ViolationKind::NonFiniteDrift,
                    component: i,
                    state: y.clone(),
                    value: f,
                    excess: f64::INFINITY,
                });
            }
            let g = model.diffusion_factor(&y, i);
            if !g.is_finite() {
                record(Violation {
                    kind: ViolationKind::NonFiniteDiffusion,
                    component: i,
                    state: y.clone(),
                    value: g,
                    excess: f64::INFINITY,
                });
            }
            let f_l = drift_projected(model, &mut y, i, model.lower()[i]);
            if !(f_l >= -BOUNDARY_TOLERANCE) {
                let mut state = y.clone();
                state[i] = model.lower()[i];
                record(Violation {
                    kind: if f_l.is_finite() {
                        ViolationKind::LowerBoundDrift
                    } else {
                        ViolationKind::NonFiniteDrift
                    },
                    component: i,
                    state,
                    value: f_l,
                    excess: if f_l.is_finite() {
                        -f_l - BOUNDARY_TOLERANCE
                    } else {
                        f64::INFINITY
                    },
                });
            }
            let f_r = drift_projected(model, &mut y, i, model.upper()[i]);
            if !(f_r <= BOUNDARY_TOLERANCE) {
                let mut state = y.clone();
                state[i] = model.upper()[i];
                record(Violation {
                    kind: if f_r.is_finite() {
                        ViolationKind::UpperBoundDrift
                    } else {
                        ViolationKind::NonFiniteDrift
                    },
                    component: i,
                    state,
                    value: f_r,
                    excess: if f_r.is_finite() {
                        f_r - BOUNDARY_TOLERANCE
                    } else {
                        f64::INFINITY
                    },
                });
            }
        }
    }

    ValidationReport {
        model: model.label().to_string(),
        samples,
        seed,
        passed: violations == 0,
        violations,
        worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_positive_drift_fails_at_upper_bound() {
        let m = BoundedSdeModel::new("push", vec![0.0, 0.0], vec![1.0, 2.0], |_, _| 1.0, |_, _| 1.0).unwrap();
        let report = validate_model(&m, 50, 3);
        assert!(!report.passed);
        let worst = report.worst.unwrap();
        assert_eq!(worst.kind, ViolationKind::UpperBoundDrift);
        assert_eq!(worst.state[worst.component], m.upper()[worst.component]);
    }

    #[test]
    fn non_finite_diffusion_is_flagged() {
        let m = BoundedSdeModel::new("inf", vec![0.0], vec![1.0], |_, _| 0.0, |y, _| 1.0 / (y[0] - y[0])).unwrap();
        let report = validate_model(&m, 5, 0);
        assert!(!report.passed);
        assert_eq!(report.worst.unwrap().kind, ViolationKind::NonFiniteDiffusion);
    }

    #[test]
    fn equality_at_bounds_passes() {
        let m = BoundedSdeModel::new(
            "cubic",
            vec![-1.0],
            vec![1.0],
            |y, _| -4.0 * y[0] * (1.0 - y[0] * y[0]),
            |_, _| 2.0,
        )
        .unwrap();
        let report = validate_model(&m, 1000, 9);
        assert!(report.passed, "{report}");
        assert_eq!(report.samples, 1000);
    }

    #[test]
    fn deterministic_in_seed() {
        let m = BoundedSdeModel::new("push", vec![0.0], vec![1.0], |y, _| 0.5 - y[0] * 2.0, |_, _| 1.0).unwrap();
        assert_eq!(validate_model(&m, 100, 11), validate_model(&m, 100, 11));
    }
}
