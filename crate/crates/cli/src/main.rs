//! `topt`: runs the time-optimal control presets and writes their tables.
//!
//! Exit codes: 0 converged, 2 no convergence, 3 configuration error (no
//! files written), 1 anything else.

mod config;
mod output;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::json;
use topt_core::NewtonStatus;

use config::{FileConfig, Overrides, Settings};
use run::RunRecord;

#[derive(Debug, Parser)]
#[command(name = "topt", version, about = "Time-optimal control by Newton's method on the minimal-distance value function")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one configuration.
    Run(CommonArgs),
    /// Solve every combination of the M and n lists and report convergence orders.
    Sweep(CommonArgs),
    /// Print the default configuration file.
    Defaults {
        /// Only this preset's section.
        #[arg(long)]
        preset: Option<String>,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    preset: Option<String>,
    /// Time steps; a comma-separated list for sweep.
    #[arg(long = "M", value_delimiter = ',')]
    m: Vec<usize>,
    /// Mesh subdivisions per side; a comma-separated list for sweep.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    nu0: Option<f64>,
    /// Outer tolerance on |delta|.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, action = ArgAction::Set)]
    accelerate: Option<bool>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Value-function samples on [sample_from, sample_to] (run only).
    #[arg(long)]
    samples: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            m: self.m.clone(),
            n: self.n.clone(),
            nu0: self.nu0,
            tol: self.tol,
            accelerate: self.accelerate,
            jobs: self.jobs,
            out: self.out.clone(),
            samples: self.samples,
        }
    }
}

fn diagnostic(kind: &str, message: &str) {
    eprintln!("{}", json!({ "level": "error", "kind": kind, "message": message }));
}

fn config_error(message: &str) -> ExitCode {
    diagnostic("config", message);
    ExitCode::from(3)
}

fn settings(args: &CommonArgs, sweep: bool) -> Result<Settings, String> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    config::resolve(&file, &args.overrides(), sweep)
}

fn exit_code(records: &[RunRecord]) -> ExitCode {
    let mut code = 0;
    for r in records {
        match &r.outcome {
            Err(e) => {
                diagnostic("solver", &format!("M={} n={}: {e}", r.spec.m, r.spec.n));
                code = 1;
            }
            Ok(t) if t.status == NewtonStatus::NoConvergence => {
                diagnostic("no-convergence", &format!("M={} n={}: no convergence", r.spec.m, r.spec.n));
                if code == 0 {
                    code = 2;
                }
            }
            Ok(t) if t.status == NewtonStatus::NonQualified => {
                diagnostic("non-qualified", &format!("M={} n={}: derivative of delta vanished", r.spec.m, r.spec.n));
                code = 1;
            }
            Ok(_) => {}
        }
    }
    ExitCode::from(code)
}

fn execute(args: &CommonArgs, sweep: bool) -> ExitCode {
    let s = match settings(args, sweep) {
        Ok(s) => s,
        Err(e) => return config_error(&e),
    };
    if let Err(e) = fs::create_dir_all(&s.out) {
        diagnostic("io", &format!("cannot create {}: {e}", s.out.display()));
        return ExitCode::from(1);
    }
    let records = run::execute_all(&s.runs, s.jobs);
    let reference = run::reference(s.preset, &records, sweep);
    let written = (|| {
        output::write_results(&s.out, &records, reference.as_ref())?;
        output::write_trace(&s.out, &records, reference.as_ref(), s.seed)?;
        if sweep {
            let orders = reference.as_ref().map(|r| run::orders(&records, r)).unwrap_or_default();
            output::write_orders(&s.out, &orders)?;
        }
        Ok::<_, std::io::Error>(())
    })();
    if let Err(e) = written {
        diagnostic("io", &e.to_string());
        return ExitCode::from(1);
    }
    if let (Some(sampling), false) = (s.sampling, sweep) {
        match run::sample(&s.runs[0], &sampling).map(|v| output::write_value_function(&s.out, &v)) {
            Ok(Ok(())) => {}
            Ok(Err(e)) => {
                diagnostic("io", &e.to_string());
                return ExitCode::from(1);
            }
            Err(e) => {
                diagnostic("solver", &format!("value-function sampling: {e}"));
                return ExitCode::from(1);
            }
        }
    }
    for r in &records {
        match r.time() {
            Some(t) => println!("{} M={} n={}: T = {t:.8}", r.spec.preset, r.spec.m, r.spec.n),
            None => println!("{} M={} n={}: {}", r.spec.preset, r.spec.m, r.spec.n, output::status_name(r)),
        }
    }
    exit_code(&records)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => execute(args, false),
        Command::Sweep(args) => execute(args, true),
        Command::Defaults { preset } => {
            let mut d = FileConfig::defaults();
            if let Some(name) = preset {
                let p: topt_core::Preset = match name.parse() {
                    Ok(p) => p,
                    Err(e) => return config_error(&format!("{e}")),
                };
                d.preset = Some(p.name().into());
                d.pendulum = d.pendulum.filter(|_| p == topt_core::Preset::Pendulum);
                d.heat_distributed = d.heat_distributed.filter(|_| p == topt_core::Preset::HeatDistributed);
                d.heat_neumann = d.heat_neumann.filter(|_| p == topt_core::Preset::HeatNeumann);
            }
            match toml::to_string(&d) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    diagnostic("internal", &e.to_string());
                    ExitCode::from(1)
                }
            }
        }
    }
}
