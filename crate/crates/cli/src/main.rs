//! `kdv-lab`: batch driver for the KdV boundary-value laboratory.

mod config;
mod error;
mod pipeline;
mod svg;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdv_core::bourgain::{bilinear_summary, probe_geometry, BilinearProbe};
use kdv_core::characteristic::{char_roots, frequency, lambda_plus, ratios_to_csv};
use kdv_core::compat::check_compat;
use kdv_core::datasets::{InitialShape, SignalShape};
use kdv_core::make_grid;
use kdv_core::picard::{estimate_existence_time, DataShape, ExistenceProbe};
use kdv_core::sobolev::SobolevIndex;
use num_complex::Complex64;
use serde_json::json;

use crate::config::{Method, RunConfig, OUT_ENV};
use crate::error::{Context, LabError};

#[derive(Parser)]
#[command(name = "kdv-lab", version, about = "Experiments with the KdV equation on a finite interval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a TOML run configuration.
    Run {
        config: PathBuf,
    },
    /// Linear problem by finite differences or the boundary-integral operator.
    SolveLinear {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value = "fd")]
        method: Method,
    },
    /// Nonlinear problem by Picard iteration or the direct solver.
    SolveNonlinear {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value = "direct")]
        method: Method,
    },
    /// Compatibility verdict of the data at index `s`, as JSON.
    CheckCompat {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Roots of the characteristic cubic, at `s = i(ρ³ - ρ)` or at a given `s`.
    Roots {
        #[arg(long, conflicts_with_all = ["s_re", "s_im"])]
        rho: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        s_re: f64,
        #[arg(long, default_value_t = 0.0)]
        s_im: f64,
    },
    /// Table of the Cramer ratios along the imaginary axis, as CSV.
    Ratios {
        #[arg(long, default_value_t = 2.0)]
        rho_min: f64,
        #[arg(long, default_value_t = 50.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 49)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded bilinear-estimate ensemble.
    ProbeBilinear {
        #[arg(long, default_value_t = 100)]
        draws: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        lattice: usize,
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 0.45)]
        b: f64,
        #[arg(long, default_value_t = 0.55)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.125")]
        supports: Vec<f64>,
        /// CSV of every ratio (`support,draw,ratio`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Direct nonlinear solve followed by the gauge-transform residual check.
    TransformCheck {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Largest horizon with a contractive Picard map, per amplitude.
    ExistenceTime {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4,0.8")]
        amplitudes: Vec<f64>,
        #[arg(long, default_value_t = 4.0)]
        ceiling: f64,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        dt: f64,
    },
}

/// Flags mirroring the fields of the run configuration. Values given here
/// override those of `--config`.
#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_parser = parse_initial)]
    initial: Option<InitialShape>,
    /// Three comma-separated signal shapes for `h1,h2,h3`.
    #[arg(long, value_delimiter = ',', value_parser = parse_signal)]
    signals: Option<Vec<SignalShape>>,
    #[arg(long, allow_hyphen_values = true)]
    amplitude: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; defaults to `$KDV_LAB_OUT`, then `./kdv-lab-out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_initial(s: &str) -> Result<InitialShape, String> {
    serde_json::from_value(json!(s)).map_err(|e| e.to_string())
}

fn parse_signal(s: &str) -> Result<SignalShape, String> {
    serde_json::from_value(json!(s)).map_err(|e| e.to_string())
}

impl ProblemArgs {
    fn config(&self) -> Result<RunConfig, LabError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::minimal(),
        };
        if let Some(v) = self.length {
            c.problem.length = v;
        }
        if let Some(v) = self.horizon {
            c.problem.horizon = v;
        }
        if let Some(v) = self.s {
            c.problem.s = v;
        }
        if let Some(v) = self.n {
            c.numerics.n = v;
        }
        if let Some(v) = self.m {
            c.numerics.m = v;
        }
        if let Some(v) = self.tol {
            c.numerics.tol = v;
        }
        if let Some(v) = self.max_iter {
            c.numerics.max_iter = v;
        }
        if let Some(v) = self.initial {
            c.data.initial = v;
            c.data.initial_file = None;
        }
        if let Some(v) = &self.signals {
            c.data.signals = v.as_slice().try_into().map_err(|_| LabError::Config {
                field: "data.signals".into(),
                message: format!("expected three shapes, got {}", v.len()),
            })?;
            c.data.boundary_file = None;
        }
        if let Some(v) = self.amplitude {
            c.data.amplitude = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.output.dir = Some(v.clone());
        }
        Ok(c)
    }
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn print_stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(value: &impl serde::Serialize) {
    print_stdout(&(serde_json::to_string_pretty(value).expect("value serializes") + "\n"));
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), LabError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| LabError::Io {
            path: path.clone(),
            source: e,
        }),
        None => {
            print_stdout(text);
            Ok(())
        }
    }
}

fn solve(problem: &ProblemArgs, method: Method, linear: bool) -> Result<(), LabError> {
    if method.is_linear() != linear {
        return Err(LabError::Config {
            field: "solver.method".into(),
            message: format!("{method:?} does not solve the {} problem", if linear { "linear" } else { "nonlinear" }),
        });
    }
    let mut c = problem.config()?;
    c.solver.method = method;
    let report = pipeline::run(&c)?;
    log::info!("wall time {:.3} s", report.wall_time);
    print_json(&report);
    Ok(())
}

fn execute(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Run { config } => {
            let report = pipeline::run(&RunConfig::load(&config)?)?;
            log::info!("wall time {:.3} s", report.wall_time);
            print_json(&report);
        }
        Command::SolveLinear { problem, method } => solve(&problem, method, true)?,
        Command::SolveNonlinear { problem, method } => solve(&problem, method, false)?,
        Command::CheckCompat { problem } => {
            let c = problem.config()?;
            for w in c.validate()? {
                log::warn!("{w}");
            }
            let (phi, h) = c.data()?;
            let s = SobolevIndex::new(c.problem.s).context("problem.s")?;
            print_json(&check_compat(&phi, &h, s).context("compatibility check")?);
        }
        Command::Roots { rho, s_re, s_im } => {
            let roots = match rho {
                Some(r) => lambda_plus(r).context("lambda_plus")?,
                None => char_roots(Complex64::new(s_re, s_im)).context("char_roots")?,
            };
            let pair = |z: Complex64| [z.re, z.im];
            print_json(&json!({
                "rho": rho,
                "s": pair(roots.s()),
                "omega": rho.map(frequency),
                "roots": roots.roots().map(pair),
                "residuals": roots.residuals(),
            }));
        }
        Command::Ratios {
            rho_min,
            rho_max,
            count,
            out,
        } => {
            if !(rho_min > 1.0 && rho_max > rho_min && count >= 2) {
                return Err(LabError::Config {
                    field: "rho_min".into(),
                    message: "need 1 < rho_min < rho_max and count >= 2".into(),
                });
            }
            let rhos: Vec<f64> = (0..count)
                .map(|k| rho_min + (rho_max - rho_min) * k as f64 / (count - 1) as f64)
                .collect();
            emit(&ratios_to_csv(&rhos).context("ratio table")?, &out)?;
        }
        Command::ProbeBilinear {
            draws,
            seed,
            lattice,
            s,
            b,
            alpha,
            supports,
            out,
        } => {
            let probe = BilinearProbe {
                seed,
                draws,
                s,
                b,
                alpha,
                ..Default::default()
            };
            let geometry = probe_geometry(lattice).context("lattice")?;
            let (summary, ratios) =
                bilinear_summary(&probe, geometry, &supports).context("bilinear ensemble")?;
            if let Some(path) = &out {
                let mut csv = String::from("support,draw,ratio\n");
                for (t, row) in supports.iter().zip(&ratios) {
                    for (i, r) in row.iter().enumerate() {
                        let _ = writeln!(csv, "{t:.17e},{i},{r:.17e}");
                    }
                }
                emit(&csv, &Some(path.clone()))?;
            }
            print_json(&json!({ "probe": probe, "lattice": lattice, "summary": summary }));
        }
        Command::TransformCheck { problem } => {
            let mut c = problem.config()?;
            c.solver.method = Method::Direct;
            c.probes.transform = true;
            let report = pipeline::run(&c)?;
            print_json(&report);
        }
        Command::ExistenceTime {
            problem,
            amplitudes,
            ceiling,
            dt,
        } => {
            let c = problem.config()?;
            c.validate()?;
            let g = make_grid(c.problem.length, c.numerics.n).context("numerics.n")?;
            let signals = c.data.signals;
            let shape_time = c.problem.horizon;
            let eval = move |t: f64| signals.map(|s| s.eval(t, shape_time));
            let shape = DataShape {
                phi: c.data.initial.sample(g),
                signals: &eval,
            };
            let probe = ExistenceProbe {
                ceiling,
                dt,
                tol: c.numerics.tol,
                max_iter: c.numerics.max_iter,
                ..Default::default()
            };
            let table = estimate_existence_time(&amplitudes, &shape, &probe).context("existence time")?;
            print_json(&json!({ "probe": probe, "table": table }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    log::debug!("default output root from ${OUT_ENV}");
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(2)
        }
    }
}
