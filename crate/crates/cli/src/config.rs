//! Run configuration: TOML schema, validation and hashing.

use std::fs;
use std::path::{Path, PathBuf};

use kdv_core::boundary_integral::QuadConfig;
use kdv_core::compat::is_excluded_index;
use kdv_core::datasets::{shaped_data, InitialShape, SignalShape};
use kdv_core::sobolev::SobolevIndex;
use kdv_core::{make_grid, BoundaryTriple, Field, Grid1D, TimeGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LabError;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "KDV_LAB_OUT";
const DEFAULT_OUT: &str = "kdv-lab-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub numerics: Numerics,
    #[serde(default)]
    pub probes: Probes,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub length: f64,
    pub horizon: f64,
    #[serde(default)]
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default = "zero_shape")]
    pub initial: InitialShape,
    #[serde(default = "zero_signals")]
    pub signals: [SignalShape; 3],
    #[serde(default = "one")]
    pub amplitude: f64,
    /// CSV with header `x,u`; replaces `initial`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_file: Option<PathBuf>,
    /// CSV with header `t,h1,h2,h3`; replaces `signals`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_file: Option<PathBuf>,
}

fn zero_shape() -> InitialShape {
    InitialShape::Zero
}

fn zero_signals() -> [SignalShape; 3] {
    [SignalShape::Zero; 3]
}

fn one() -> f64 {
    1.0
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            initial: zero_shape(),
            signals: zero_signals(),
            amplitude: 1.0,
            initial_file: None,
            boundary_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Crank-Nicolson finite differences (linear).
    Fd,
    /// Boundary-integral operator (linear, zero initial data, L = 1).
    Spectral,
    /// Picard iteration of the Duhamel map.
    Picard,
    /// Implicit midpoint with Newton.
    Direct,
}

impl Method {
    pub fn is_linear(self) -> bool {
        matches!(self, Method::Fd | Method::Spectral)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub method: Method,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { method: Method::Fd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadConfig>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probes {
    #[serde(default = "yes")]
    pub energy: bool,
    #[serde(default = "yes")]
    pub compat: bool,
    #[serde(default)]
    pub transform: bool,
    #[serde(default)]
    pub forcing: bool,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for Probes {
    fn default() -> Self {
        Self {
            energy: true,
            compat: true,
            transform: false,
            forcing: false,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

fn field_error(field: &str, message: impl Into<String>) -> LabError {
    LabError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    /// A zero-data finite-difference run on `[0, 1] × [0, 1]`.
    pub fn minimal() -> Self {
        Self {
            problem: Problem {
                length: 1.0,
                horizon: 1.0,
                s: 0.0,
            },
            data: DataSpec::default(),
            solver: SolverSpec::default(),
            numerics: Numerics {
                n: 33,
                m: 32,
                tol: default_tol(),
                max_iter: default_max_iter(),
                quadrature: None,
            },
            probes: Probes::default(),
            output: OutputSpec::default(),
            seed: default_seed(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let de = toml::Deserializer::parse(text).map_err(|e| field_error("<document>", e.to_string()))?;
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field_error(&path, e.into_inner().message().to_string())
        })?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = fs::read_to_string(path).map_err(|e| LabError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut config = Self::from_toml(&text)?;
        // sample files are read relative to the config file
        if let Some(dir) = path.parent() {
            for file in [&mut config.data.initial_file, &mut config.data.boundary_file]
                .into_iter()
                .flatten()
            {
                if file.is_relative() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes to TOML")
    }

    /// Checks every numeric field against the solver preconditions and
    /// returns warnings for admissible but questionable settings.
    pub fn validate(&self) -> Result<Vec<String>, LabError> {
        let p = &self.problem;
        if !(p.length.is_finite() && p.length > 0.0) {
            return Err(field_error("problem.length", "must be positive"));
        }
        if !(p.horizon.is_finite() && p.horizon > 0.0) {
            return Err(field_error("problem.horizon", "must be positive"));
        }
        SobolevIndex::new(p.s).map_err(|e| field_error("problem.s", e.to_string()))?;
        let nm = &self.numerics;
        if nm.n < 17 {
            return Err(field_error("numerics.n", "at least 17 nodes are needed"));
        }
        if nm.m < 2 {
            return Err(field_error("numerics.m", "at least 2 time steps are needed"));
        }
        if !(nm.tol.is_finite() && nm.tol > 0.0) {
            return Err(field_error("numerics.tol", "must be positive"));
        }
        if nm.max_iter == 0 {
            return Err(field_error("numerics.max_iter", "must be at least 1"));
        }
        if let Some(q) = &nm.quadrature {
            q.validate().map_err(|e| field_error("numerics.quadrature", e.to_string()))?;
        }
        if !self.data.amplitude.is_finite() {
            return Err(field_error("data.amplitude", "must be finite"));
        }
        if self.solver.method == Method::Spectral {
            if (p.length - 1.0).abs() > 1e-12 {
                return Err(field_error(
                    "problem.length",
                    "the spectral solver is implemented for L = 1 only",
                ));
            }
            if self.data.initial != InitialShape::Zero || self.data.initial_file.is_some() {
                return Err(field_error(
                    "data.initial",
                    "the spectral solver handles boundary data only; use zero initial data",
                ));
            }
        }
        let mut warnings = Vec::new();
        if is_excluded_index(p.s) {
            warnings.push(format!(
                "s = {} is of the form (2j-1)/2, where well-posedness is not established; the run proceeds",
                p.s
            ));
        }
        Ok(warnings)
    }

    pub fn grids(&self) -> Result<(Grid1D, TimeGrid), LabError> {
        let g = make_grid(self.problem.length, self.numerics.n)
            .map_err(|e| field_error("numerics.n", e.to_string()))?;
        let tg = TimeGrid::new(self.problem.horizon, self.numerics.m)
            .map_err(|e| field_error("numerics.m", e.to_string()))?;
        Ok((g, tg))
    }

    /// Samples `(φ, h)` from the named shapes or the sample files.
    pub fn data(&self) -> Result<(Field, BoundaryTriple), LabError> {
        let (g, tg) = self.grids()?;
        let d = &self.data;
        let (mut phi, mut h) = shaped_data(g, tg, d.initial, d.signals, d.amplitude);
        if let Some(path) = &d.initial_file {
            let rows = read_csv(path, &["x", "u"], "data.initial_file")?;
            if rows.len() != g.len() {
                return Err(field_error(
                    "data.initial_file",
                    format!("expected {} rows, found {}", g.len(), rows.len()),
                ));
            }
            let values = rows.iter().map(|r| d.amplitude * r[1]).collect();
            phi = Field::new(g, values).map_err(|e| field_error("data.initial_file", e.to_string()))?;
        }
        if let Some(path) = &d.boundary_file {
            let rows = read_csv(path, &["t", "h1", "h2", "h3"], "data.boundary_file")?;
            if rows.len() != tg.len() {
                return Err(field_error(
                    "data.boundary_file",
                    format!("expected {} rows, found {}", tg.len(), rows.len()),
                ));
            }
            let col = |c: usize| rows.iter().map(|r| d.amplitude * r[c]).collect();
            h = BoundaryTriple::new(tg, col(1), col(2), col(3))
                .map_err(|e| field_error("data.boundary_file", e.to_string()))?;
        }
        Ok((phi, h))
    }

    pub fn quadrature(&self, tg: &TimeGrid) -> QuadConfig {
        self.numerics
            .quadrature
            .unwrap_or_else(|| QuadConfig::for_time_grid(tg))
    }

    /// SHA-256 of the canonical JSON form (without the output directory)
    /// followed by the bytes of any sample files.
    pub fn hash(&self) -> Result<String, LabError> {
        let mut canonical = self.clone();
        canonical.output.dir = None;
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&canonical).expect("run configuration serializes to JSON"));
        for (field, file) in [
            ("data.initial_file", &self.data.initial_file),
            ("data.boundary_file", &self.data.boundary_file),
        ] {
            if let Some(path) = file {
                let bytes = fs::read(path).map_err(|e| field_error(field, e.to_string()))?;
                hasher.update(&bytes);
            }
        }
        Ok(hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }

    /// `output.dir`, else `$KDV_LAB_OUT`, else `./kdv-lab-out`.
    pub fn output_root(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

fn read_csv(path: &Path, header: &[&str], field: &str) -> Result<Vec<Vec<f64>>, LabError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| field_error(field, e.to_string()))?;
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| field_error(field, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if found != header {
        return Err(field_error(
            field,
            format!("expected columns {header:?}, found {found:?}"),
        ));
    }
    reader
        .records()
        .enumerate()
        .map(|(row, rec)| {
            let rec = rec.map_err(|e| field_error(field, e.to_string()))?;
            rec.iter()
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| field_error(field, format!("row {}: {e}", row + 1)))
                })
                .collect()
        })
        .collect()
}
