use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use answipt::channel::{generate_scenario, ScenarioSpec};
use answipt::dual::{SolveReport, SolverOptions};
use answipt::{ChannelRealization, SchemeRegistry, SystemConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, PerEr};
use crate::format::{opt, sig9};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "answipt",
    version,
    about = "Secrecy and wireless power transfer resource allocation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one channel realization and write a JSON report.
    Solve(Common),
    /// Run every selected scheme over a parameter axis and Monte-Carlo trials.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        trials: u64,
    },
    /// Per-subcarrier power and split of one solve.
    Profile(Common),
    /// Duality gap of the optimal scheme versus the number of subcarriers.
    Gap {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [8.0, 16.0, 32.0, 64.0])]
        values: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        trials: u64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Base seed. Overrides `scenario.seed`; trial `t` uses `seed + t`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file. Standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's scheme selection. Repeatable.
    #[arg(long = "scheme")]
    pub schemes: Vec<String>,
    /// Fill the wallclock column. Makes output nondeterministic.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    #[value(name = "Qbar", alias = "qbar")]
    Qbar,
    #[value(name = "Pmax", alias = "pmax")]
    Pmax,
    #[value(name = "N", alias = "n")]
    N,
    #[value(name = "K2", alias = "k2")]
    K2,
}

impl Axis {
    fn label(self) -> &'static str {
        match self {
            Axis::Qbar => "Qbar_uW",
            Axis::Pmax => "P_max_dBm",
            Axis::N => "N",
            Axis::K2 => "K2",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig, CliError> {
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 && value < 1e9 {
                Ok(value as usize)
            } else {
                Err(CliError::Config(format!(
                    "{} must be a nonnegative integer, got {value}",
                    self.label()
                )))
            }
        };
        let mut cfg = base.clone();
        match self {
            Axis::Qbar => cfg.system.qbar_uw = PerEr::Shared(value),
            Axis::Pmax => cfg.system.p_max_dbm = value,
            Axis::N => cfg.system.n = count()?,
            Axis::K2 => cfg.system.k2 = count()?,
        }
        cfg.system()?;
        Ok(cfg)
    }
}

struct Setup {
    config: ExperimentConfig,
    base_seed: u64,
    schemes: Vec<String>,
    options: SolverOptions,
    registry: SchemeRegistry,
}

impl Setup {
    fn new(common: &Common, default_schemes: Option<&[&str]>) -> Result<Self, CliError> {
        let config = ExperimentConfig::load(&common.config)?;
        let schemes = if !common.schemes.is_empty() {
            common.schemes.clone()
        } else if let Some(d) = default_schemes {
            d.iter().map(|s| s.to_string()).collect()
        } else {
            config.scheme.names()
        };
        let registry = SchemeRegistry::with_defaults();
        for s in &schemes {
            registry.get(s)?;
        }
        Ok(Self {
            base_seed: common.seed.unwrap_or(config.scenario.seed),
            options: config.solver.options()?,
            config,
            schemes,
            registry,
        })
    }
}

fn open_out(common: &Common) -> Result<Box<dyn Write>, CliError> {
    Ok(match &common.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn realization(
    sys: &SystemConfig,
    spec: &ScenarioSpec,
    seed: u64,
) -> Result<ChannelRealization, CliError> {
    Ok(generate_scenario(sys, &spec.with_seed(seed))?)
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(common) => solve(&common),
        Command::Sweep {
            common,
            axis,
            values,
            trials,
        } => sweep(&common, axis, &values, trials),
        Command::Profile(common) => profile(&common),
        Command::Gap {
            common,
            values,
            trials,
        } => gap(&common, &values, trials),
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    seed: u64,
    system: &'a SystemConfig,
    scenario: &'a ScenarioSpec,
    solver: &'a SolverOptions,
    results: Vec<SchemeResult>,
}

#[derive(Serialize)]
struct SchemeResult {
    scheme: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<SolveReport>,
}

fn status_of(report: &SolveReport) -> &'static str {
    if !report.feasible {
        "infeasible"
    } else if !report.converged {
        "not_converged"
    } else {
        "ok"
    }
}

fn solve(common: &Common) -> Result<(), CliError> {
    let setup = Setup::new(common, None)?;
    let sys = setup.config.system()?;
    let ch = realization(&sys, &setup.config.scenario, setup.base_seed)?;
    let mut results = Vec::new();
    for name in &setup.schemes {
        let scheme = setup.registry.get(name)?;
        results.push(match scheme.solve(&sys, &ch, &setup.options) {
            Ok(report) => SchemeResult {
                scheme: name.clone(),
                status: status_of(&report),
                error: None,
                report: Some(report),
            },
            Err(e) => SchemeResult {
                scheme: name.clone(),
                status: match CliError::from(e.clone()) {
                    CliError::Infeasible(_) => "infeasible",
                    CliError::Config(m) => return Err(CliError::Config(m)),
                    _ => "error",
                },
                error: Some(e.to_string()),
                report: None,
            },
        });
    }
    let mut out = open_out(common)?;
    let output = SolveOutput {
        seed: setup.base_seed,
        system: &sys,
        scenario: &setup.config.scenario.with_seed(setup.base_seed),
        solver: &setup.options,
        results,
    };
    serde_json::to_writer_pretty(&mut out, &output)?;
    writeln!(out)?;
    out.flush()?;
    let failed = |status: &str| {
        output
            .results
            .iter()
            .find(|r| r.status == status)
            .map(|r| r.scheme.clone())
    };
    if let Some(name) = failed("infeasible") {
        Err(CliError::Infeasible(format!(
            "{name} found no feasible allocation"
        )))
    } else if let Some(name) = failed("error") {
        Err(CliError::Solver(format!("{name} failed")))
    } else if let Some(name) = failed("not_converged") {
        Err(CliError::NotConverged(format!(
            "{name} hit the iteration limit"
        )))
    } else {
        Ok(())
    }
}

fn header(out: &mut dyn Write, command: &str, lines: &[(&str, String)]) -> io::Result<()> {
    writeln!(out, "# answipt {} {command}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# rates=bits/s/Hz averaged over subcarriers")?;
    for (k, v) in lines {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| sig9(*v))
        .collect::<Vec<_>>()
        .join(",")
}

struct Row {
    scheme: String,
    objective: Option<f64>,
    gap: Option<f64>,
    feasible: bool,
    iterations: Option<usize>,
    wallclock: Option<f64>,
    status: &'static str,
}

fn run_trial(
    setup: &Setup,
    cfg: &ExperimentConfig,
    seed: u64,
    timing: bool,
) -> Result<Vec<Row>, CliError> {
    let sys = cfg.system()?;
    let ch = realization(&sys, &cfg.scenario, seed)?;
    let mut rows = Vec::with_capacity(setup.schemes.len());
    for name in &setup.schemes {
        let scheme = setup.registry.get(name)?;
        let start = Instant::now();
        let result = scheme.solve(&sys, &ch, &setup.options);
        let wallclock = timing.then(|| start.elapsed().as_secs_f64());
        rows.push(match result {
            Ok(r) => Row {
                scheme: name.clone(),
                objective: Some(r.objective),
                gap: r.duality_gap,
                feasible: r.feasible,
                iterations: Some(r.iterations),
                wallclock,
                status: status_of(&r),
            },
            Err(e) => {
                let status = match CliError::from(e) {
                    CliError::Infeasible(_) => "infeasible",
                    CliError::Config(m) => return Err(CliError::Config(m)),
                    _ => "error",
                };
                Row {
                    scheme: name.clone(),
                    objective: None,
                    gap: None,
                    feasible: false,
                    iterations: None,
                    wallclock,
                    status,
                }
            }
        });
    }
    Ok(rows)
}

fn sweep(common: &Common, axis: Axis, values: &[f64], trials: u64) -> Result<(), CliError> {
    let setup = Setup::new(common, None)?;
    let configs = values
        .iter()
        .map(|v| axis.apply(&setup.config, *v))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    let results: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            run_trial(
                &setup,
                &configs[i],
                setup.base_seed.wrapping_add(t),
                common.timing,
            )
        })
        .collect::<Result<_, _>>()?;

    let mut out = open_out(common)?;
    header(
        &mut out,
        "sweep",
        &[
            ("axis", axis.label().into()),
            ("values", join(values)),
            ("trials", trials.to_string()),
            ("base_seed", setup.base_seed.to_string()),
            ("trial_seed", "base_seed + trial".into()),
            ("schemes", setup.schemes.join(",")),
            (
                "objective",
                "band-averaged weighted sum secrecy rate, bits/s/Hz".into(),
            ),
        ],
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "axis_value",
        "trial",
        "scheme",
        "objective",
        "gap",
        "feasible",
        "iterations",
        "wallclock",
        "seed",
        "status",
    ])?;
    for (&(i, t), rows) in jobs.iter().zip(&results) {
        for r in rows {
            w.write_record([
                sig9(values[i]),
                t.to_string(),
                r.scheme.clone(),
                opt(r.objective),
                opt(r.gap),
                r.feasible.to_string(),
                r.iterations.map(|n| n.to_string()).unwrap_or_default(),
                opt(r.wallclock),
                setup.base_seed.wrapping_add(t).to_string(),
                r.status.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn profile(common: &Common) -> Result<(), CliError> {
    let setup = Setup::new(common, Some(&["optimal"]))?;
    let [name] = setup.schemes.as_slice() else {
        return Err(CliError::Config("profile takes a single scheme".into()));
    };
    let sys = setup.config.system()?;
    let ch = realization(&sys, &setup.config.scenario, setup.base_seed)?;
    let report = setup.registry.get(name)?.solve(&sys, &ch, &setup.options)?;

    let mut out = open_out(common)?;
    header(
        &mut out,
        "profile",
        &[
            ("scheme", name.clone()),
            ("seed", setup.base_seed.to_string()),
            ("objective", sig9(report.objective)),
            ("status", status_of(&report).into()),
        ],
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "ir", "p", "alpha", "info_power"])?;
    let a = &report.allocation;
    for n in 0..a.num_scs() {
        w.write_record([
            n.to_string(),
            a.assign[n].map(|k| k.to_string()).unwrap_or_default(),
            sig9(a.power[n]),
            sig9(a.alpha[n]),
            sig9((1.0 - a.alpha[n]) * a.power[n]),
        ])?;
    }
    w.flush()?;
    match status_of(&report) {
        "infeasible" => Err(CliError::Infeasible(format!("{name} is infeasible"))),
        "not_converged" => Err(CliError::NotConverged(format!(
            "{name} stopped after {} iterations",
            report.iterations
        ))),
        _ => Ok(()),
    }
}

fn gap(common: &Common, values: &[f64], trials: u64) -> Result<(), CliError> {
    let setup = Setup::new(common, Some(&["optimal"]))?;
    let [name] = setup.schemes.as_slice() else {
        return Err(CliError::Config("gap takes a single scheme".into()));
    };
    let configs = values
        .iter()
        .map(|v| Axis::N.apply(&setup.config, *v))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    let scheme = setup.registry.get(name)?;
    let reports: Vec<Result<SolveReport, &'static str>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let sys = configs[i].system()?;
            let ch = realization(&sys, &configs[i].scenario, setup.base_seed.wrapping_add(t))?;
            match scheme.solve(&sys, &ch, &setup.options) {
                Ok(r) => Ok(Ok(r)),
                Err(e) => match CliError::from(e) {
                    CliError::Config(m) => Err(CliError::Config(m)),
                    CliError::Infeasible(_) => Ok(Err("infeasible")),
                    _ => Ok(Err("error")),
                },
            }
        })
        .collect::<Result<_, CliError>>()?;

    let mut out = open_out(common)?;
    header(
        &mut out,
        "gap",
        &[
            ("scheme", name.clone()),
            ("values", join(values)),
            ("trials", trials.to_string()),
            ("base_seed", setup.base_seed.to_string()),
            ("trial_seed", "base_seed + trial".into()),
        ],
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "N",
        "trial",
        "objective",
        "dual_value",
        "gap",
        "iterations",
        "converged",
        "seed",
        "status",
    ])?;
    for (&(i, t), r) in jobs.iter().zip(&reports) {
        let seed = setup.base_seed.wrapping_add(t).to_string();
        let record = match r {
            Ok(r) => [
                sig9(values[i]),
                t.to_string(),
                sig9(r.objective),
                opt(r.dual_value),
                opt(r.duality_gap),
                r.iterations.to_string(),
                r.converged.to_string(),
                seed,
                status_of(r).to_string(),
            ],
            Err(status) => [
                sig9(values[i]),
                t.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "false".into(),
                seed,
                status.to_string(),
            ],
        };
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}
