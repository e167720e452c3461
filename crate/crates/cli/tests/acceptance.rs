//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

#![allow(clippy::needless_range_loop)]

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bounded_sde::convergence::{
    generate_lattice, local_error_probe, realization_rng, rmse_experiment, ConvergenceReport, Experiment, Probe,
};
use bounded_sde::integrators::{
    combine_step, euler_left_flow, euler_right_flow, milstein_left_flow, milstein_right_flow, simulate_with,
    StepResult, Stepper,
};
use bounded_sde::models::{ModelInstance, ModelName, EXAMPLE1_BETA};
use bounded_sde::{BoundedSdeModel, Scheme, SchemeConfig, State, TimeGrid};
use rand::Rng;
use rayon::prelude::*;

const SPLIT: [Scheme; 3] = [Scheme::EmMean, Scheme::EmWeighted, Scheme::MilMean];
const SEED: u64 = 0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

fn domain_preservation() -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::new(1e4 / 32.0, 10_000).unwrap();
    let mut violations = 0usize;
    let mut guards = 0usize;
    let mut closed_violations = 0usize;
    for name in ModelName::ALL {
        let inst = ModelInstance::get(name);
        let d = inst.model.dim();
        for scheme in Scheme::ALL {
            let cfg = SchemeConfig::new(scheme);
            let counts: Vec<(usize, usize)> = (0..100u64)
                .into_par_iter()
                .map(|r| {
                    let lat = generate_lattice(d, &grid, SEED, r);
                    let mut bad = 0;
                    let mut g = 0;
                    simulate_with(&inst.model, &cfg, &inst.y0, &grid, lat.as_slice(), |_, _, res| {
                        let ok = if scheme.is_projected() {
                            inst.model.contains_closed(&res.y_next)
                        } else {
                            inst.model.contains(&res.y_next)
                        };
                        bad += usize::from(!ok);
                        g += res.rounding_guards;
                    })
                    .unwrap();
                    (bad, g)
                })
                .collect();
            let bad: usize = counts.iter().map(|c| c.0).sum();
            if scheme.is_projected() {
                closed_violations += bad;
            } else {
                violations += bad;
                guards += counts.iter().map(|c| c.1).sum::<usize>();
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && closed_violations == 0 && elapsed < Duration::from_secs(120),
        format!(
            "5 models x 3 split schemes x 100 paths x 1e4 steps: {violations} open-box violations, \
             projected closed-box violations {closed_violations}, {guards} rounding guards, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn simultaneous_overshoots(model: &BoundedSdeModel, draws: usize, stream: u64) -> usize {
    let d = model.dim();
    let chunks = 16;
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = realization_rng(stream, c as u64);
            let mut steppers: Vec<Stepper> = [Scheme::EmMean, Scheme::MilMean]
                .into_iter()
                .flat_map(|s| [false, true].map(|shift| SchemeConfig::new(s).with_drift_shift(shift)))
                .map(|cfg| Stepper::new(model, cfg).unwrap())
                .collect();
            let (mut y, mut dw) = (vec![0.0; d], vec![0.0; d]);
            let mut out = StepResult::with_dim(d);
            let mut both = 0;
            for k in 0..draws / chunks {
                for i in 0..d {
                    let (l, r) = (model.lower()[i], model.upper()[i]);
                    y[i] = (l + rng.random::<f64>() * (r - l)).clamp(l.next_up(), r.next_down());
                }
                let dt = 2f64.powi(-rng.random_range(0..14));
                let scale = if rng.random::<f64>() < 0.1 { 20.0 } else { 3.0 };
                for w in dw.iter_mut() {
                    *w = (2.0 * rng.random::<f64>() - 1.0) * scale * dt.sqrt();
                }
                steppers[k % 4].step_into(&y, dt, &dw, &mut out).unwrap();
                both += (0..d)
                    .filter(|&i| out.y_left[i] >= model.upper()[i] && out.y_right[i] <= model.lower()[i])
                    .count();
            }
            both
        })
        .sum()
}

fn lemma_no_double_overshoot() -> Outcome {
    let draws = 1_000_000;
    let mut found = Vec::new();
    for name in ModelName::ALL {
        let inst = ModelInstance::get(name);
        found.push(format!("{name}={}", simultaneous_overshoots(&inst.model, draws, 31)));
    }
    let passed = found.iter().all(|s| s.ends_with("=0"));
    outcome(
        passed,
        format!(
            "{draws} (state, dW) draws per model, overshoot pairs: {}",
            found.join(" ")
        ),
    )
}

fn converge(name: ModelName, scheme: Scheme) -> ConvergenceReport {
    let inst = ModelInstance::get(name);
    let exp = Experiment::for_instance(&inst, SchemeConfig::new(scheme), dyadic(4, 9), SEED);
    rmse_experiment(&exp).unwrap()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn example1() -> Outcome {
    let start = Instant::now();
    let mean = converge(ModelName::Exact1, Scheme::EmMean);
    let weighted = converge(ModelName::Exact1, Scheme::EmWeighted);
    let elapsed = start.elapsed();
    let below = mean.rmse_list.iter().zip(&weighted.rmse_list).all(|(m, w)| w <= m);
    let passed = (0.4..=1.1).contains(&mean.fitted_order)
        && weighted.fitted_order >= 0.75
        && below
        && elapsed < Duration::from_secs(300);
    outcome(
        passed,
        format!(
            "beta={EXAMPLE1_BETA}, 2000 paths: em-mean order {:.3} [{}], em-weighted order {:.3} [{}], \
             weighted <= mean at every dt: {below}, {:.1}s",
            mean.fitted_order,
            fmt_list(&mean.rmse_list),
            weighted.fitted_order,
            fmt_list(&weighted.rmse_list),
            elapsed.as_secs_f64()
        ),
    )
}

fn example2() -> Outcome {
    let reports: Vec<ConvergenceReport> = SPLIT.iter().map(|&s| converge(ModelName::Trig2, s)).collect();
    let (mean, mil) = (&reports[0], &reports[2]);
    let below = mil.rmse_list.iter().zip(&mean.rmse_list).all(|(a, b)| a <= b);
    let orders_ok = reports.iter().all(|r| r.fitted_order >= 0.4);
    let orders = reports
        .iter()
        .map(|r| format!("{} {:.3}", r.scheme, r.fitted_order))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        below && orders_ok,
        format!(
            "reference {}: mil-mean <= em-mean at every dt: {below}; orders {orders} (need >= 0.4); \
             em-mean [{}], mil-mean [{}]",
            mean.reference,
            fmt_list(&mean.rmse_list),
            fmt_list(&mil.rmse_list)
        ),
    )
}

fn local_error() -> Outcome {
    let inst = ModelInstance::get(ModelName::Exact1);
    let run = |scheme| {
        let mut p = Probe::new(&inst.model, SchemeConfig::new(scheme), vec![0.5], dyadic(5, 10));
        p.seed = SEED;
        local_error_probe(&p).unwrap()
    };
    let weighted = run(Scheme::EmWeighted);
    let mean = run(Scheme::EmMean);
    let passed = weighted.exponent >= 2.5 && mean.exponent >= 1.5 && weighted.exponent - mean.exponent >= 0.5;
    outcome(
        passed,
        format!(
            "y0=0.5, dt 2^-5..2^-10, {} paths, reference {}: em-weighted exponent {:.3}, em-mean exponent {:.3}",
            weighted.realizations, weighted.reference, weighted.exponent, mean.exponent
        ),
    )
}

fn micro_checks() -> Outcome {
    let toy = BoundedSdeModel::new("toy", vec![0.0], vec![1.0], |_, _| 0.0, |_, _| 1.0)
        .unwrap()
        .with_diffusion_derivative(|_, _| 0.0);
    let half = combine_step(
        &toy,
        &SchemeConfig::new(Scheme::EmMean),
        &State::new(vec![0.5], 0.0),
        0.1,
        &[0.0],
    )
    .unwrap()
    .y_next[0];

    let mut rng = realization_rng(99, 0);
    let mut worst_ulps = 0u64;
    let samples = 100_000;
    let ulps = |a: f64, b: f64| (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs();
    for k in 0..samples {
        let name = [ModelName::Exact1, ModelName::Trig2, ModelName::Sis3a, ModelName::Sis3b][k % 4];
        let model = ModelInstance::get(name).model;
        let (l, r) = (model.lower()[0], model.upper()[0]);
        let y = (l + rng.random::<f64>() * (r - l)).clamp(l.next_up(), r.next_down());
        let dw = (2.0 * rng.random::<f64>() - 1.0) * 0.5;
        let dt = dw * dw;
        if dt == 0.0 {
            continue;
        }
        let s = State::new(vec![y], 0.0);
        worst_ulps = worst_ulps.max(ulps(
            euler_left_flow(&model, &s, dt, &[dw]).unwrap()[0],
            milstein_left_flow(&model, &s, dt, &[dw]).unwrap()[0],
        ));
        worst_ulps = worst_ulps.max(ulps(
            euler_right_flow(&model, &s, dt, &[dw]).unwrap()[0],
            milstein_right_flow(&model, &s, dt, &[dw]).unwrap()[0],
        ));
    }
    outcome(
        half == 0.5 && worst_ulps <= 1,
        format!("symmetric toy step = {half:?}; Milstein vs Euler flows with dW^2 = dt over {samples} draws: max {worst_ulps} ulp"),
    )
}

fn run_converge(threads: &str, out: &Path) -> std::io::Result<std::process::ExitStatus> {
    Command::new(env!("CARGO_BIN_EXE_bounded-sde"))
        .args([
            "converge",
            "--model",
            "exact1",
            "--scheme",
            "em-weighted",
            "--seed",
            "7",
            "--out",
        ])
        .arg(out)
        .env("BOUNDED_SDE_THREADS", threads)
        .status()
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("one.csv");
    let b = dir.path().join("four.csv");
    let ok = run_converge("1", &a).map(|s| s.success()).unwrap_or(false)
        && run_converge("4", &b).map(|s| s.success()).unwrap_or(false);
    if !ok {
        return outcome(false, "converge command failed");
    }
    let (ca, cb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (ja, jb) = (
        std::fs::read(a.with_extension("json")).unwrap(),
        std::fs::read(b.with_extension("json")).unwrap(),
    );
    outcome(
        ca == cb && ja == jb && !ca.is_empty(),
        format!(
            "converge exact1 em-weighted with 1 and 4 workers: CSV identical {} ({} bytes), JSON identical {}",
            ca == cb,
            ca.len(),
            ja == jb
        ),
    )
}

fn lattice_statistics() -> Outcome {
    let m = 1_000_000;
    let grid = TimeGrid::new(1.0, m).unwrap();
    let lat = generate_lattice(1, &grid, SEED, 0);
    let n = m as f64;
    let mean = lat.as_slice().iter().sum::<f64>() / n;
    let var = lat.as_slice().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let bound = 4.0 * (grid.dt / n).sqrt();
    let rel = (var / grid.dt - 1.0).abs();
    outcome(
        mean.abs() < bound && rel < 0.01,
        format!(
            "M = 1e6, dt = {:e}: |mean| {:.3e} (bound {bound:.3e}), variance off by {:.3}%",
            grid.dt,
            mean.abs(),
            100.0 * rel
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("domain preservation", domain_preservation),
        ("no simultaneous overshoot of both flows", lemma_no_double_overshoot),
        ("example 1 strong convergence", example1),
        ("example 2 strong convergence", example2),
        ("local error probe", local_error),
        ("exact micro-checks", micro_checks),
        ("reproducibility across worker counts", reproducibility),
        ("Brownian lattice statistics", lattice_statistics),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.passed);
        println!(
            "{} [{}] {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
