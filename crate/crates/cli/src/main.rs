use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use bounded_sde::convergence::{
    convergence_json, generate_lattice, local_error_probe, probe_json, rmse_experiment, to_json, write_convergence_csv,
    write_json, write_probe_csv, write_trajectory_csv, ErrorNorm, Experiment, Probe, Reference, SPEC_VERSION,
};
use bounded_sde::integrators::simulate_path;
use bounded_sde::models::{ModelInstance, ModelName};
use bounded_sde::validate::validate_model;
use bounded_sde::{Scheme, SchemeConfig, TimeGrid};

mod parse;

use parse::{parse_clamp, parse_dt_list, parse_reference, parse_vector};

const THREADS_VAR: &str = "BOUNDED_SDE_THREADS";

#[derive(Parser)]
#[command(
    name = "bounded-sde",
    version,
    about = "Domain-preserving SDE integrators and strong-convergence benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the boundary conditions of a model by random sampling.
    Validate(ValidateArgs),
    /// Simulate sample paths.
    Simulate(SimulateArgs),
    /// Estimate RMSE against step size and fit the order.
    Converge(ConvergeArgs),
    /// Measure the mean-square one-step error.
    Probe(ProbeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Norm {
    End,
    Max,
}

#[derive(Args)]
struct SchemeArgs {
    /// Scheme name.
    #[arg(long, value_parser = parse_scheme, default_value = "em-mean")]
    scheme: Scheme,
    /// Fixed mixing weight, also the fallback of the weighted policy.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Clamp interval `lo,hi` of the weighted theta.
    #[arg(long, value_parser = parse_clamp, default_value = "0,1")]
    theta_clamp: (f64, f64),
    /// Fold vanishing boundary drift into the Newton quotients.
    #[arg(long)]
    drift_shift: bool,
}

impl SchemeArgs {
    fn config(&self) -> SchemeConfig {
        SchemeConfig::new(self.scheme)
            .with_theta(self.theta)
            .with_theta_clamp(self.theta_clamp.0, self.theta_clamp.1)
            .with_drift_shift(self.drift_shift)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted. With csv a `.json` sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ValidateArgs {
    /// exact1, trig2, sis3a, sis3b or nagumo4.
    #[arg(long, value_parser = parse_model)]
    model: ModelName,
    /// Random states drawn per check.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// exact1, trig2, sis3a, sis3b or nagumo4.
    #[arg(long, value_parser = parse_model)]
    model: ModelName,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Final time; defaults to the model's benchmark horizon.
    /// Final time; defaults to the model's benchmark horizon.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Number of steps; defaults to dt = 2^-5.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Index of the first realization stream.
    #[arg(long, default_value_t = 0)]
    realization: u64,
    /// Number of paths; path k is written to `<out stem>.<k>.csv` when more than one.
    #[arg(long, default_value_t = 1)]
    paths: u64,
    /// Initial state as a comma list; defaults to the model's.
    /// Initial state as a comma list; defaults to the model's.
    #[arg(long, value_parser = vector_values)]
    y0: Option<Values>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    /// exact1, trig2, sis3a, sis3b or nagumo4.
    #[arg(long, value_parser = parse_model)]
    model: ModelName,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Final time; defaults to the model's benchmark horizon.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Step sizes, `2^-4..2^-9` or a comma list.
    #[arg(long, value_parser = dt_values, default_value = "2^-4..2^-9")]
    dt_list: Values,
    /// Monte Carlo sample size; defaults to the benchmark's count.
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `exact` or `<scheme>@<dt>`; defaults to exact when available, else mil-mean@2^-14.
    #[arg(long)]
    reference: Option<String>,
    /// Error norm: end-time or maximum over the coarse grid.
    #[arg(long, value_enum, default_value_t = Norm::End)]
    norm: Norm,
    /// Initial state as a comma list; defaults to the model's.
    #[arg(long, value_parser = vector_values)]
    y0: Option<Values>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ProbeArgs {
    /// exact1, trig2, sis3a, sis3b or nagumo4.
    #[arg(long, value_parser = parse_model)]
    model: ModelName,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Step sizes of the single step.
    #[arg(long, value_parser = dt_values, default_value = "2^-5..2^-10")]
    dt_list: Values,
    /// Monte Carlo sample size; defaults to the benchmark's count.
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Substeps of the reference over one step.
    #[arg(long, default_value_t = 1000)]
    substeps: usize,
    /// Initial state as a comma list; defaults to the model's.
    #[arg(long, value_parser = vector_values)]
    y0: Option<Values>,
    #[command(flatten)]
    output: OutputArgs,
}

/// A list argument that clap must treat as one value.
#[derive(Clone, Debug)]
struct Values(Vec<f64>);

fn dt_values(s: &str) -> Result<Values> {
    parse_dt_list(s).map(Values)
}

fn vector_values(s: &str) -> Result<Values> {
    parse_vector(s).map(Values)
}

fn parse_model(s: &str) -> Result<ModelName, String> {
    s.parse().map_err(|e: bounded_sde::SdeError| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: bounded_sde::SdeError| e.to_string())
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("failed to configure the worker pool")?;
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Writes CSV (plus sidecar) or JSON to `out`, or to stdout without a path.
fn emit<C>(output: &OutputArgs, meta: &serde_json::Value, write_csv: C) -> Result<()>
where
    C: Fn(&mut dyn Write) -> bounded_sde::Result<()>,
{
    match (&output.out, output.format) {
        (Some(path), Format::Csv) => {
            let mut w = create(path)?;
            write_csv(&mut w)?;
            w.flush()?;
            let side = sidecar_path(path);
            let mut w = create(&side)?;
            write_json(meta, &mut w)?;
            w.flush()?;
        }
        (Some(path), Format::Json) => {
            let mut w = create(path)?;
            write_json(meta, &mut w)?;
            w.flush()?;
        }
        (None, Format::Csv) => write_csv(&mut io::stdout().lock())?,
        (None, Format::Json) => write_json(meta, io::stdout().lock())?,
    }
    Ok(())
}

fn initial_state(instance: &ModelInstance, y0: &Option<Values>) -> Result<Vec<f64>> {
    let y0 = y0.as_ref().map_or_else(|| instance.y0.clone(), |v| v.0.clone());
    if y0.len() != instance.model.dim() {
        bail!(
            "y0 has {} components, model {} has {}",
            y0.len(),
            instance.name,
            instance.model.dim()
        );
    }
    Ok(y0)
}

fn run_validate(args: &ValidateArgs) -> Result<()> {
    let instance = ModelInstance::get(args.model);
    let report = validate_model(&instance.model, args.samples, args.seed);
    println!("{report}");
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        write_json(&to_json("validation", &report)?, &mut w)?;
        w.flush()?;
    }
    if !report.passed {
        bail!("model {} violates the boundary conditions", instance.name);
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let instance = ModelInstance::get(args.model);
    let config = args.scheme.config();
    config.validate(Some(&instance.model))?;
    let y0 = initial_state(&instance, &args.y0)?;
    let t_final = args.t_final.unwrap_or(instance.t_final);
    let steps = args.steps.unwrap_or((t_final * 32.0).round().max(1.0) as usize);
    let grid = TimeGrid::new(t_final, steps)?;
    if args.paths == 0 {
        bail!("--paths must be at least 1");
    }
    if args.paths > 1 && args.output.out.is_none() {
        bail!("several paths need --out");
    }
    for k in 0..args.paths {
        let realization = args.realization + k;
        let lattice = generate_lattice(instance.model.dim(), &grid, args.seed, realization);
        let traj = simulate_path(&instance.model, &config, &y0, &grid, lattice.as_slice())
            .with_context(|| format!("realization {realization} (seed {}) failed", args.seed))?;
        let meta = json!({
            "spec_version": SPEC_VERSION,
            "kind": "trajectory",
            "model": instance.model.label(),
            "config": config,
            "y0": y0,
            "t_final": t_final,
            "steps": steps,
            "seed": args.seed,
            "realization": realization,
            "theta_clamps": traj.theta_clamps,
            "rounding_guards": traj.rounding_guards,
            "trajectory": if args.output.format == Format::Json { serde_json::to_value(&traj)? } else { serde_json::Value::Null },
        });
        let output = OutputArgs {
            out: args.output.out.as_ref().map(|p| {
                if args.paths > 1 {
                    let stem = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    let ext = p
                        .extension()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "csv".into());
                    p.with_file_name(format!("{stem}.{k}.{ext}"))
                } else {
                    p.clone()
                }
            }),
            format: args.output.format,
        };
        emit(&output, &meta, |w| write_trajectory_csv(&traj, w))?;
    }
    Ok(())
}

fn run_converge(args: &ConvergeArgs) -> Result<()> {
    let instance = ModelInstance::get(args.model);
    let config = args.scheme.config();
    let mut exp = Experiment::for_instance(&instance, config, args.dt_list.0.clone(), args.seed);
    exp.y0 = initial_state(&instance, &args.y0)?;
    if let Some(t) = args.t_final {
        exp.t_final = t;
    }
    if let Some(m) = args.realizations {
        exp.realizations = m;
    }
    if let Some(r) = &args.reference {
        exp.reference = match parse_reference(r, config.drift_shift)? {
            Some(fine) => fine,
            None => match &instance.exact {
                Some(exact) => Reference::Exact(exact.clone()),
                None => bail!("model {} has no exact solution; use `<scheme>@<dt>`", instance.name),
            },
        };
    } else if let Reference::FineScheme { config: ref_config, .. } = &mut exp.reference {
        ref_config.drift_shift = config.drift_shift;
    }
    exp.norm = match args.norm {
        Norm::End => ErrorNorm::EndTime,
        Norm::Max => ErrorNorm::MaxOverGrid,
    };
    let report = rmse_experiment(&exp)?;
    eprintln!(
        "{} {}: fitted order {:.4} over {} step sizes, {} realizations",
        instance.name,
        config.scheme,
        report.fitted_order,
        report.dt_list.len() - report.fit_excluded.len(),
        report.realizations
    );
    emit(&args.output, &convergence_json(&report)?, |w| {
        write_convergence_csv(&report, w)
    })
}

fn run_probe(args: &ProbeArgs) -> Result<()> {
    let instance = ModelInstance::get(args.model);
    let y0 = initial_state(&instance, &args.y0)?;
    let mut probe = Probe::new(&instance.model, args.scheme.config(), y0, args.dt_list.0.clone());
    probe.realizations = args.realizations.unwrap_or(instance.realizations);
    probe.seed = args.seed;
    probe.substeps = args.substeps;
    let report = local_error_probe(&probe)?;
    eprintln!(
        "{} {}: one-step mean-square error exponent {:.4}",
        instance.name, report.scheme, report.exponent
    );
    emit(&args.output, &probe_json(&report)?, |w| write_probe_csv(&report, w))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_threads()?;
    match &cli.command {
        Command::Validate(a) => run_validate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Converge(a) => run_converge(a),
        Command::Probe(a) => run_probe(a),
    }
}
