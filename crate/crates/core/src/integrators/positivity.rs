//! Exponential (multiplicative) steppers for `dU_i = a_i(U) U_i dt + b_i(U) U_i dW_i`.
//! A positive input stays positive because each component is scaled by an
//! exponential.

use crate::domain::finite;
use crate::error::{Result, SdeError};

fn check_lengths(v: &[f64], dw: &[f64]) -> Result<()> {
    if v.len() != dw.len() {
        return Err(SdeError::DimensionMismatch {
            expected: v.len(),
            got: dw.len(),
        });
    }
    Ok(())
}

/// `v_i exp((a_i(v) - b_i(v)^2 / 2) dt + b_i(v) dW_i)`.
pub fn exp_euler_positive_step<A, B>(a: A, b: B, v: &[f64], dt: f64, dw: &[f64]) -> Result<Vec<f64>>
where
    A: Fn(&[f64], usize) -> f64,
    B: Fn(&[f64], usize) -> f64,
{
    check_lengths(v, dw)?;
    v.iter()
        .enumerate()
        .map(|(i, &vi)| {
            let (ai, bi) = (a(v, i), b(v, i));
            let exponent = finite((ai - 0.5 * bi * bi) * dt + bi * dw[i], "exponent", i, v)?;
            Ok(vi * exponent.exp())
        })
        .collect()
}

/// Exponential Milstein step for diagonal noise (`b_i` depends on `v_i` only):
/// the Euler exponent plus `b_i(v) v_i d_i b_i(v) (dW_i^2 - dt) / 2`.
pub fn exp_milstein_positive_step<A, B, DB>(a: A, b: B, b_deriv: DB, v: &[f64], dt: f64, dw: &[f64]) -> Result<Vec<f64>>
where
    A: Fn(&[f64], usize) -> f64,
    B: Fn(&[f64], usize) -> f64,
    DB: Fn(&[f64], usize) -> f64,
{
    check_lengths(v, dw)?;
    v.iter()
        .enumerate()
        .map(|(i, &vi)| {
            let (ai, bi, dbi) = (a(v, i), b(v, i), b_deriv(v, i));
            let exponent = (ai - 0.5 * bi * bi) * dt + bi * dw[i] + 0.5 * bi * vi * dbi * (dw[i] * dw[i] - dt);
            let exponent = finite(exponent, "exponent", i, v)?;
            Ok(vi * exponent.exp())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_coefficients_are_identity() {
        let out = exp_euler_positive_step(|_, _| 0.0, |_, _| 0.0, &[2.0, 3.0], 0.7, &[0.3, -1.1]).unwrap();
        assert_eq!(out, vec![2.0, 3.0]);
    }

    #[test]
    fn ito_correction_cancels_drift() {
        let b = |_: &[f64], _| 0.8;
        let out = exp_euler_positive_step(|_, _| 0.32, b, &[1.5], 0.25, &[0.0]).unwrap();
        assert_eq!(out, vec![1.5]);
    }

    #[test]
    fn pure_growth() {
        let out = exp_euler_positive_step(|_, _| 1.0, |_, _| 0.0, &[1.0], 0.1, &[0.4]).unwrap();
        assert_relative_eq!(out[0], 1.1051709180756477, max_relative = 1e-15);
    }

    #[test]
    fn milstein_linear_noise() {
        // b(v) = v, b' = 1 at v = 1: exponent -0.05 + 0.5 * (0 - 0.1) = -0.1
        let out = exp_milstein_positive_step(|_, _| 0.0, |v, i| v[i], |_, _| 1.0, &[1.0], 0.1, &[0.0]).unwrap();
        assert_relative_eq!(out[0], 0.9048374180359595, max_relative = 1e-15);
    }

    #[test]
    fn milstein_reduces_to_euler() {
        let a = |v: &[f64], i: usize| 0.3 - v[i];
        let b = |_: &[f64], _| 0.7;
        let v = [0.4, 2.0];
        let dw = [0.2, -0.5];
        let euler = exp_euler_positive_step(a, b, &v, 0.05, &dw).unwrap();
        let mil = exp_milstein_positive_step(a, b, |_, _| 0.0, &v, 0.05, &dw).unwrap();
        assert_eq!(euler, mil);

        let b = |v: &[f64], i: usize| 0.5 * v[i];
        let dt = 0.04;
        let dw = [0.2, -0.2];
        let euler = exp_euler_positive_step(a, b, &v, dt, &dw).unwrap();
        let mil = exp_milstein_positive_step(a, b, |_, _| 0.5, &v, dt, &dw).unwrap();
        for (e, m) in euler.iter().zip(&mil) {
            assert_relative_eq!(e, m, max_relative = 1e-15);
        }
    }

    #[test]
    fn nan_exponent_is_an_error() {
        let err = exp_euler_positive_step(|_, _| f64::NAN, |_, _| 0.0, &[1.0], 0.1, &[0.0]);
        assert!(matches!(err, Err(SdeError::NonFinite { component: 0, .. })));
    }

    proptest! {
        #[test]
        fn stays_positive(
            v in prop::collection::vec(1e-6f64..10.0, 1..5),
            a in -20.0f64..20.0,
            b in -5.0f64..5.0,
            dt in 1e-4f64..0.5,
            z in -10.0f64..10.0,
        ) {
            let dw = vec![z * dt.sqrt(); v.len()];
            let out = exp_euler_positive_step(|_, _| a, |_, _| b, &v, dt, &dw).unwrap();
            prop_assert!(out.iter().all(|&x| x > 0.0));
            let out = exp_milstein_positive_step(|_, _| a, |_, _| b, |_, _| 0.3, &v, dt, &dw).unwrap();
            prop_assert!(out.iter().all(|&x| x > 0.0));
        }
    }
}
