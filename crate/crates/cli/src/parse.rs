use anyhow::{bail, Context, Result};
use bounded_sde::convergence::Reference;
use bounded_sde::{Scheme, SchemeConfig};

/// Accepts `2^-k`, `2^k` or a plain decimal.
pub fn parse_step(s: &str) -> Result<f64> {
    let s = s.trim();
    let value = match s.split_once('^') {
        Some((base, exp)) => {
            let base: f64 = base.trim().parse().with_context(|| format!("bad base in `{s}`"))?;
            let exp: i32 = exp.trim().parse().with_context(|| format!("bad exponent in `{s}`"))?;
            base.powi(exp)
        }
        None => s.parse().with_context(|| format!("bad step size `{s}`"))?,
    };
    if !(value.is_finite() && value > 0.0) {
        bail!("step size must be positive, got `{s}`");
    }
    Ok(value)
}

fn power_of_two_exponent(s: &str) -> Result<i32> {
    let (base, exp) = s
        .trim()
        .split_once('^')
        .with_context(|| format!("range endpoints must look like 2^-k, got `{s}`"))?;
    if base.trim() != "2" {
        bail!("range endpoints must be powers of two, got `{s}`");
    }
    exp.trim().parse().with_context(|| format!("bad exponent in `{s}`"))
}

/// `2^-4..2^-9` (every power of two in between, inclusive) or a comma list.
pub fn parse_dt_list(s: &str) -> Result<Vec<f64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (power_of_two_exponent(a)?, power_of_two_exponent(b)?);
        let (hi, lo) = (a.max(b), a.min(b));
        return Ok((lo..=hi).rev().map(|k| 2f64.powi(k)).collect());
    }
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_step).collect()
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number `{p}` in `{s}`"))
        })
        .collect()
}

pub fn parse_clamp(s: &str) -> Result<(f64, f64)> {
    match parse_vector(s)?.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        _ => bail!("theta clamp needs two numbers `lo,hi`, got `{s}`"),
    }
}

/// `exact` or `<scheme>@<dt>`, for example `mil-mean@2^-14`.
pub fn parse_reference(s: &str, drift_shift: bool) -> Result<Option<Reference>> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("exact") {
        return Ok(None);
    }
    let (scheme, dt) = s
        .split_once('@')
        .with_context(|| format!("reference must be `exact` or `<scheme>@<dt>`, got `{s}`"))?;
    let scheme: Scheme = scheme.parse()?;
    Ok(Some(Reference::FineScheme {
        config: SchemeConfig::new(scheme).with_drift_shift(drift_shift),
        dt: parse_step(dt)?,
    }))
}
