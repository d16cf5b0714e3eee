//! Run configuration: a flat `key = value` file overridden by command-line
//! flags.
//!
//! The file format also accepts `key,value` lines so that a `run_meta.csv`
//! written by a previous run can be fed back in unchanged; its `key,value`
//! header and the `code_version` entry are skipped.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use baro_core::{
    DiscretisationType, PressureMode, ProblemId, ProblemSpec, Scheme, SpaceKind, StepControls,
};
use clap::Args;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}: malformed line `{text}`")]
    Malformed { origin: Origin, text: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: Origin, key: String },
    #[error("{origin}: invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        origin: Origin,
        key: &'static str,
        value: String,
        reason: String,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Inconsistent(String),
}

/// Where a configuration value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Flag,
    File { path: PathBuf, line: usize },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Flag => write!(f, "command line"),
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
        }
    }
}

/// Validated description of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemId,
    pub disc_type: SpaceKind,
    /// Only meaningful for type 3.
    pub es_order: u8,
    /// Only meaningful for type 3.
    pub q: f64,
    pub scheme: Scheme,
    pub eps: f64,
    pub cfl: f64,
    pub nx: usize,
    pub ny: Option<usize>,
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
    pub out_dir: PathBuf,
    pub helmholtz_tol: f64,
    pub nonlinear_pressure: bool,
    pub dt_cap: Option<f64>,
    pub fixed_dt: Option<f64>,
}

const KEYS: &[&str] = &[
    "problem",
    "type",
    "es_order",
    "q",
    "scheme",
    "eps",
    "cfl",
    "nx",
    "ny",
    "t_final",
    "snapshot_times",
    "out_dir",
    "helmholtz_tol",
    "nonlinear_pressure",
    "dt_cap",
    "fixed_dt",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let key = key.trim().replace('-', "_").to_ascii_lowercase();
    let key = match key.as_str() {
        "disc_type" => "type",
        "tfinal" => "t_final",
        "out" => "out_dir",
        "snapshots" => "snapshot_times",
        other => other,
    };
    KEYS.iter().copied().find(|k| *k == key)
}

/// Flags shared by the `run` and `eoc` subcommands. Every flag overrides the
/// same key from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// standard_periodic, colliding_acoustic, riemann, gresho or travelling_vortex.
    #[arg(long)]
    pub problem: Option<String>,
    /// Space discretisation: 1, 2 or 3.
    #[arg(long = "type")]
    pub disc_type: Option<String>,
    /// Order of the type-3 entropy-stable flux (1 or 2).
    #[arg(long)]
    pub es_order: Option<String>,
    /// Dissipation constant of the type-3 flux.
    #[arg(long)]
    pub q: Option<String>,
    /// `ars111` or `ars222`.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Mach number scale ε.
    #[arg(long)]
    pub eps: Option<String>,
    /// CFL number.
    #[arg(long)]
    pub cfl: Option<String>,
    /// Cells along x1.
    #[arg(long)]
    pub nx: Option<String>,
    /// Cells along x2 (2D problems; defaults to nx).
    #[arg(long)]
    pub ny: Option<String>,
    /// Final time; defaults to the problem's own.
    #[arg(long = "tfinal", alias = "t-final")]
    pub t_final: Option<String>,
    /// Comma- or semicolon-separated output times.
    #[arg(long = "snapshot-times", alias = "snapshots")]
    pub snapshot_times: Option<String>,
    /// Output directory.
    #[arg(long = "out", alias = "out-dir")]
    pub out_dir: Option<String>,
    /// Relative residual tolerance of the Helmholtz solve.
    #[arg(long)]
    pub helmholtz_tol: Option<String>,
    /// Drive the momentum update with `p(ρ)` instead of the linearised pressure.
    #[arg(long)]
    pub nonlinear_pressure: bool,
    /// Upper bound on the step size.
    #[arg(long)]
    pub dt_cap: Option<String>,
    /// Constant step size instead of the CFL rule.
    #[arg(long)]
    pub fixed_dt: Option<String>,
}

impl RunArgs {
    fn flag_pairs(&self) -> Vec<(&'static str, String)> {
        let mut pairs = Vec::new();
        let mut push = |key: &'static str, v: &Option<String>| {
            if let Some(v) = v {
                pairs.push((key, v.clone()));
            }
        };
        push("problem", &self.problem);
        push("type", &self.disc_type);
        push("es_order", &self.es_order);
        push("q", &self.q);
        push("scheme", &self.scheme);
        push("eps", &self.eps);
        push("cfl", &self.cfl);
        push("nx", &self.nx);
        push("ny", &self.ny);
        push("t_final", &self.t_final);
        push("snapshot_times", &self.snapshot_times);
        push("out_dir", &self.out_dir);
        push("helmholtz_tol", &self.helmholtz_tol);
        push("dt_cap", &self.dt_cap);
        push("fixed_dt", &self.fixed_dt);
        if self.nonlinear_pressure {
            pairs.push(("nonlinear_pressure", "true".to_string()));
        }
        pairs
    }

    /// Merge the config file (if any) with the flags and validate.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut raw = RawConfig::default();
        if let Some(path) = &self.config {
            raw.read_file(path)?;
        }
        for (key, value) in self.flag_pairs() {
            raw.set(key, value, Origin::Flag);
        }
        raw.build()
    }
}

/// Parse a config file on its own.
pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let mut raw = RawConfig::default();
    raw.read_file(path)?;
    raw.build()
}

/// Key/value pairs before validation, with their origins.
#[derive(Debug, Default)]
struct RawConfig {
    values: BTreeMap<&'static str, (String, Origin)>,
}

impl RawConfig {
    fn set(&mut self, key: &'static str, value: String, origin: Origin) {
        self.values.insert(key, (value.trim().to_string(), origin));
    }

    fn read_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.read_str(&text, path)
    }

    fn read_str(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_path_buf(),
                line: i + 1,
            };
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = match content.split_once('=') {
                Some(kv) => kv,
                None => content
                    .split_once(',')
                    .ok_or_else(|| ConfigError::Malformed {
                        origin: origin.clone(),
                        text: line.to_string(),
                    })?,
            };
            let key_trimmed = key.trim();
            if key_trimmed == "key" && value.trim() == "value" || key_trimmed == "code_version" {
                continue;
            }
            let key = canonical_key(key_trimmed).ok_or_else(|| ConfigError::UnknownKey {
                origin: origin.clone(),
                key: key_trimmed.to_string(),
            })?;
            self.set(key, value.to_string(), origin);
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, origin)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| ConfigError::InvalidValue {
                    origin: origin.clone(),
                    key,
                    value: v.clone(),
                    reason: e.to_string(),
                }),
        }
    }

    fn require<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or(ConfigError::Missing(key))
    }

    fn invalid(&self, key: &'static str, reason: impl Into<String>) -> ConfigError {
        let (value, origin) = self.values[key].clone();
        ConfigError::InvalidValue {
            origin,
            key,
            value,
            reason: reason.into(),
        }
    }

    fn build(&self) -> Result<RunConfig, ConfigError> {
        let problem: ProblemId = self.require("problem")?;
        let disc_type: SpaceKind = self.require("type")?;
        let scheme: Scheme = self.get("scheme")?.unwrap_or(Scheme::Ars111);
        let eps: f64 = self.require("eps")?;
        let cfl: f64 = self.require("cfl")?;
        let nx: usize = self.require("nx")?;
        let ny: Option<usize> = self.get("ny")?;

        let es_order: Option<u8> = self.get("es_order")?;
        let q: Option<f64> = self.get("q")?;
        if disc_type != SpaceKind::Type3 {
            for key in ["es_order", "q"] {
                if self.values.contains_key(key) {
                    return Err(
                        self.invalid(key, format!("only applies to type 3, not {disc_type}"))
                    );
                }
            }
        }
        let es_order = es_order.unwrap_or(1);
        let q = q.unwrap_or(if disc_type == SpaceKind::Type3 {
            1.0
        } else {
            0.0
        });

        let spec =
            ProblemSpec::new(problem, eps).map_err(|e| self.invalid("eps", e.to_string()))?;
        let t_final: f64 = self.get("t_final")?.unwrap_or(spec.default_t_final);
        let snapshot_times = match self.values.get("snapshot_times") {
            None => Vec::new(),
            Some((v, _)) => parse_time_list(v).map_err(|r| self.invalid("snapshot_times", r))?,
        };
        let out_dir: PathBuf = self
            .get::<String>("out_dir")?
            .unwrap_or_else(|| "out".into())
            .into();
        let helmholtz_tol: f64 = self
            .get("helmholtz_tol")?
            .unwrap_or(baro_core::elliptic::DEFAULT_TOL);
        let nonlinear_pressure = match self.values.get("nonlinear_pressure") {
            None => false,
            Some((v, _)) => parse_bool(v)
                .ok_or_else(|| self.invalid("nonlinear_pressure", "expected true or false"))?,
        };
        let dt_cap: Option<f64> = self.get("dt_cap")?;
        let fixed_dt: Option<f64> = self.get("fixed_dt")?;

        if nx == 0 {
            return Err(self.invalid("nx", "must be positive"));
        }
        match (spec.dim(), ny) {
            (1, Some(_)) => return Err(self.invalid("ny", format!("{problem} is one-dimensional"))),
            (2, Some(0)) => return Err(self.invalid("ny", "must be positive")),
            _ => {}
        }
        if snapshot_times
            .iter()
            .any(|&s| !(s >= 0.0) || !s.is_finite())
        {
            return Err(self.invalid("snapshot_times", "times must be finite and >= 0"));
        }

        let config = RunConfig {
            problem,
            disc_type,
            es_order,
            q,
            scheme,
            eps,
            cfl,
            nx,
            ny,
            t_final,
            snapshot_times,
            out_dir,
            helmholtz_tol,
            nonlinear_pressure,
            dt_cap,
            fixed_dt,
        };
        config
            .discretisation()
            .map_err(|e| ConfigError::Inconsistent(e.to_string()))?;
        config
            .controls()
            .map_err(|e| ConfigError::Inconsistent(e.to_string()))?;
        Ok(config)
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn parse_time_list(v: &str) -> Result<Vec<f64>, String> {
    v.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

impl RunConfig {
    pub fn problem_spec(&self) -> baro_core::Result<ProblemSpec> {
        ProblemSpec::new(self.problem, self.eps)
    }

    /// Cells per direction.
    pub fn cells(&self) -> Vec<usize> {
        match self.problem_spec().map(|p| p.dim()) {
            Ok(2) => vec![self.nx, self.ny.unwrap_or(self.nx)],
            _ => vec![self.nx],
        }
    }

    pub fn discretisation(&self) -> baro_core::Result<DiscretisationType> {
        DiscretisationType::new(self.disc_type, self.es_order, self.q)
    }

    pub fn controls(&self) -> baro_core::Result<StepControls> {
        let mut c = StepControls::new(self.cfl, self.t_final)?;
        c.dt_cap = self.dt_cap;
        c.fixed_dt = self.fixed_dt;
        c.helmholtz_tol = self.helmholtz_tol;
        c.pressure_mode = if self.nonlinear_pressure {
            PressureMode::Nonlinear
        } else {
            PressureMode::Linearised
        };
        c.validate()?;
        Ok(c)
    }

    /// Same configuration on a different grid, writing to `out_dir`.
    pub fn with_grid(&self, n: usize, out_dir: PathBuf) -> RunConfig {
        let two_d = self.cells().len() == 2;
        RunConfig {
            nx: n,
            ny: two_d.then_some(n),
            out_dir,
            ..self.clone()
        }
    }

    /// `(key, value)` pairs in file order; parsing them back reproduces
    /// this configuration exactly.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string());
        let mut pairs = vec![
            ("problem", self.problem.to_string()),
            ("type", self.disc_type.number().to_string()),
        ];
        if self.disc_type == SpaceKind::Type3 {
            pairs.push(("es_order", self.es_order.to_string()));
            pairs.push(("q", self.q.to_string()));
        }
        pairs.extend([
            ("scheme", self.scheme.to_string()),
            ("eps", self.eps.to_string()),
            ("cfl", self.cfl.to_string()),
            ("nx", self.nx.to_string()),
        ]);
        if let Some(ny) = self.ny {
            pairs.push(("ny", ny.to_string()));
        }
        pairs.push(("t_final", self.t_final.to_string()));
        let times: Vec<String> = self.snapshot_times.iter().map(f64::to_string).collect();
        pairs.push(("snapshot_times", times.join(";")));
        pairs.push(("out_dir", self.out_dir.display().to_string()));
        pairs.push(("helmholtz_tol", self.helmholtz_tol.to_string()));
        pairs.push(("nonlinear_pressure", self.nonlinear_pressure.to_string()));
        for (k, v) in [
            ("dt_cap", opt(self.dt_cap)),
            ("fixed_dt", opt(self.fixed_dt)),
        ] {
            if let Some(v) = v {
                pairs.push((k, v));
            }
        }
        pairs
    }
}
