//! Execution of a [`RunConfig`] and emission of its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kdv_core::boundary_integral::wbdr_apply_with_report;
use kdv_core::compat::{check_compat, CompatVerdict};
use kdv_core::grid::{trajectory_to_csv, trajectory_to_json};
use kdv_core::picard::{forcing_ratio, picard_solve};
use kdv_core::reference_solver::{energy_report, solve_linear, solve_nonlinear_direct, EnergyIdentity};
use kdv_core::sobolev::SobolevIndex;
use kdv_core::transform::{kdvb_residual, kdvb_trace_defects, to_kdvb, TraceDefects};
use kdv_core::Trajectory;
use serde::{Deserialize, Serialize};

use crate::config::{Method, RunConfig};
use crate::error::{Context, LabError};
use crate::svg::{line_plot, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardSummary {
    pub iterations: usize,
    pub converged: bool,
    pub terminal_ratio: f64,
    pub contraction_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub max_residual: f64,
    pub trace_defects: TraceDefects,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub sup_l2: f64,
    pub max_abs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_max_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compat: Option<CompatVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing_ratio: Option<f64>,
}

/// Written to `report.json`. The wall time is kept out of the file so that
/// reruns reproduce it byte for byte; it goes to `timing.txt` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub method: Method,
    pub output_dir: PathBuf,
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
    pub summary: RunSummary,
    #[serde(skip)]
    pub wall_time: f64,
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), LabError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| LabError::Io { path, source: e })?;
        self.names.push(name.to_string());
        Ok(())
    }
}

fn step_table(header: &str, traj: &Trajectory, values: &[f64]) -> String {
    let tg = traj.time_grid();
    let mut out = format!("step,t_mid,{header}\n");
    for (k, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{:.17e},{v:.17e}", k + 1, tg.time(k) + 0.5 * tg.dt());
    }
    out
}

fn trajectory_plot(traj: &Trajectory) -> String {
    let steps = traj.time_grid().steps();
    let xs = traj.grid().nodes();
    let series: Vec<Series> = [0, steps / 4, steps / 2, 3 * steps / 4, steps]
        .iter()
        .map(|&k| Series {
            label: format!("t = {:.3}", traj.time_grid().time(k)),
            points: xs.iter().copied().zip(traj.frame(k).iter().copied()).collect(),
        })
        .collect();
    line_plot("solution slices", "x", "u", &series)
}

fn solve(config: &RunConfig, summary: &mut RunSummary) -> Result<Trajectory, LabError> {
    let (g, tg) = config.grids()?;
    let (phi, h) = config.data()?;
    let nm = &config.numerics;
    match config.solver.method {
        Method::Fd => solve_linear(&phi, None, &h, &tg).context("finite-difference solve"),
        Method::Spectral => {
            let (traj, report) =
                wbdr_apply_with_report(&h, &g, &tg, &config.quadrature(&tg)).context("boundary-integral solve")?;
            for w in report.warnings {
                log::warn!("{w}");
            }
            Ok(traj)
        }
        Method::Picard => {
            let (traj, diag) = picard_solve(&phi, &h, &tg, nm.tol, nm.max_iter).context("Picard solve")?;
            summary.picard = Some(PicardSummary {
                iterations: diag.residuals.len(),
                converged: diag.converged,
                terminal_ratio: diag.terminal_ratio(),
                contraction_estimate: diag.contraction_estimate(),
            });
            Ok(traj)
        }
        Method::Direct => solve_nonlinear_direct(&phi, &h, &tg).context("direct nonlinear solve"),
    }
}

/// Validates and executes `config`, writing every artifact to
/// `<output root>/<first 16 hex digits of the config hash>/`.
pub fn run(config: &RunConfig) -> Result<RunReport, LabError> {
    let start = Instant::now();
    let mut warnings = config.validate()?;
    let hash = config.hash()?;
    let dir = config.output_root().join(&hash[..16]);
    fs::create_dir_all(&dir).map_err(|e| LabError::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut out = Artifacts {
        dir: dir.clone(),
        names: Vec::new(),
    };
    out.write("config.toml", &config.to_toml())?;

    let mut summary = RunSummary {
        sup_l2: 0.0,
        max_abs: 0.0,
        energy_max_residual: None,
        picard: None,
        compat: None,
        transform: None,
        forcing_ratio: None,
    };
    let method = config.solver.method;
    let traj = solve(config, &mut summary)?;
    summary.sup_l2 = traj.sup_l2();
    summary.max_abs = traj.max_abs();
    out.write("trajectory.csv", &trajectory_to_csv(&traj))?;
    out.write(
        "trajectory.json",
        &trajectory_to_json(&traj).context("trajectory export")?,
    )?;
    if config.probes.svg {
        out.write("trajectory.svg", &trajectory_plot(&traj))?;
    }

    if config.probes.energy {
        let identity = if method.is_linear() {
            EnergyIdentity::Linear
        } else {
            EnergyIdentity::Nonlinear
        };
        let report = energy_report(&traj, None, identity).context("energy identity")?;
        summary.energy_max_residual = Some(report.max_residual);
        out.write("energy.csv", &step_table("residual", &traj, &report.residuals))?;
        if config.probes.svg {
            let tg = traj.time_grid();
            let points = report
                .residuals
                .iter()
                .enumerate()
                .map(|(k, r)| (tg.time(k) + 0.5 * tg.dt(), *r))
                .collect();
            let plot = line_plot(
                "energy identity residual",
                "t",
                "residual",
                &[Series {
                    label: format!("{identity:?}").to_lowercase(),
                    points,
                }],
            );
            out.write("energy.svg", &plot)?;
        }
    }

    if config.probes.compat {
        let (phi, h) = config.data()?;
        if config.problem.s >= 0.0 {
            let s = SobolevIndex::new(config.problem.s).context("Sobolev index")?;
            let verdict = check_compat(&phi, &h, s).context("compatibility check")?;
            if !verdict.compatible {
                warnings.push(format!(
                    "data are not compatible at s = {}; see summary.compat",
                    config.problem.s
                ));
            }
            summary.compat = Some(verdict);
        }
    }

    if config.probes.transform {
        if method.is_linear() {
            warnings.push("transform probe skipped: it checks the nonlinear equation".into());
        } else {
            let (_, h) = config.data()?;
            let v = to_kdvb(&traj).context("gauge transform")?;
            let residual = kdvb_residual(&v).context("transformed residual")?;
            out.write("transform.csv", &step_table("residual", &traj, &residual))?;
            summary.transform = Some(TransformSummary {
                max_residual: residual.iter().fold(0.0, |m, r| m.max(*r)),
                trace_defects: kdvb_trace_defects(&v, &h).context("transformed traces")?,
            });
        }
    }

    if config.probes.forcing {
        summary.forcing_ratio = Some(forcing_ratio(&traj).context("forcing ratio")?);
    }

    for w in &warnings {
        log::warn!("{w}");
    }
    let mut report = RunReport {
        config_hash: hash,
        method,
        output_dir: dir.clone(),
        artifacts: Vec::new(),
        warnings,
        summary,
        wall_time: 0.0,
    };
    out.names.push("report.json".into());
    report.artifacts = out.names.clone();
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&dir.join("report.json"), &(json + "\n"))?;
    report.wall_time = start.elapsed().as_secs_f64();
    write_file(&dir.join("timing.txt"), &format!("wall_time_seconds {:.3}\n", report.wall_time))?;
    Ok(report)
}

fn write_file(path: &Path, contents: &str) -> Result<(), LabError> {
    fs::write(path, contents).map_err(|e| LabError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
