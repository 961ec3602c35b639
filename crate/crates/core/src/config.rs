//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! seed = 7
//! model.chi = 1.0
//! grid.dim = 2
//! init.kind = gaussian
//! ```
//!
//! Keys are `section.key` (or bare `seed`), one per line; `#` starts a
//! comment anywhere on a line. Every key has a default except the nine model
//! coefficients and `grid.dim`, `grid.lx`, `grid.nx`. Unknown and duplicate
//! keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::error::Error;
use crate::grid::{read_field_csv, FaceRule, Grid, ScalarField};
use crate::model::{Model, ModelParams, COEFFICIENT_NAMES};
use crate::oracles::RegularityOptions;
use crate::sweep::SweepAxis;
use crate::timestep::{RunOptions, SimState, Stepping};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("missing required key `{0}`")]
    Missing(&'static str),

    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error(transparent)]
    Validation(#[from] Error),

    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

type CResult<T> = std::result::Result<T, ConfigError>;

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "model.chi",
    "model.xi",
    "model.beta",
    "model.delta",
    "model.alpha",
    "model.gamma0",
    "model.gamma1",
    "model.k",
    "model.l",
    "model.gamma_g",
    "grid.dim",
    "grid.lx",
    "grid.ly",
    "grid.nx",
    "grid.ny",
    "init.kind",
    "init.c",
    "init.center",
    "init.width",
    "init.amplitude",
    "init.background",
    "init.mass",
    "init.path",
    "init.v0",
    "init.w0",
    "time.horizon",
    "time.dt_min",
    "time.dt_max",
    "time.cfl_safety",
    "time.face",
    "monitor.p",
    "monitor.blowup_threshold",
    "monitor.sample_stride",
    "output.dir",
    "output.snapshot_every",
    "criteria.c_reg",
    "estimate.rho",
    "estimate.q",
    "estimate.samples",
    "estimate.horizon",
    "estimate.time_steps",
    "estimate.modes",
    "sweep.axis1",
    "sweep.axis2",
    "sweep.workers",
];

/// Initial density profile. The chemicals start from `init.v0`/`init.w0`
/// when given, otherwise from the homogeneous equilibrium (homogeneous
/// profile) or zero (other profiles).
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Homogeneous {
        c: f64,
    },
    /// `background + amplitude * exp(-|x - center|^2 / (2 width^2))`,
    /// rescaled to total mass `mass` when given.
    Gaussian {
        center: [f64; 2],
        width: f64,
        amplitude: f64,
        background: f64,
        mass: Option<f64>,
    },
    /// Density read from a field CSV on the configured grid.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelParams,
    pub gamma_g: Option<f64>,
    pub grid: Grid,
    pub init: InitSpec,
    pub v0: Option<f64>,
    pub w0: Option<f64>,
    pub horizon: f64,
    pub stepping: Stepping,
    pub monitor_p: Option<f64>,
    pub blowup_threshold: Option<f64>,
    pub sample_stride: usize,
    pub output_dir: PathBuf,
    /// Snapshot every n-th recorded row; 0 writes only the first and last.
    pub snapshot_every: usize,
    pub c_reg: f64,
    pub estimate: RegularityOptions,
    pub sweep_axes: Vec<SweepAxis>,
    pub workers: usize,
}

struct Entry {
    value: String,
    line: usize,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|e| e.value.as_str())
    }

    fn get<T: FromStr>(&self, key: &str) -> CResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e: T::Err| ConfigError::InvalidValue {
                key: key.to_string(),
                message: format!("`{v}`: {e}"),
            }),
        }
    }

    fn real(&self, key: &str) -> CResult<Option<f64>> {
        let v: Option<f64> = self.get(key)?;
        match v {
            Some(x) if !x.is_finite() => Err(invalid(key, "must be finite")),
            other => Ok(other),
        }
    }

    fn real_or(&self, key: &str, default: f64) -> CResult<f64> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn required_real(&self, key: &'static str) -> CResult<f64> {
        self.real(key)?.ok_or(ConfigError::Missing(key))
    }

    fn count_or(&self, key: &str, default: usize) -> CResult<usize> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Accepts a number or the keyword `auto`.
    fn auto_real(&self, key: &str, keyword: &str) -> CResult<Option<f64>> {
        match self.raw(key) {
            Some(v) if v == keyword => Ok(None),
            _ => self.real(key),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn tokenize(text: &str) -> CResult<Entries> {
    let mut map: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let well_formed = !key.is_empty()
            && key.split('.').count() <= 2
            && key
                .split('.')
                .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
        if !well_formed {
            return Err(ConfigError::Syntax {
                line,
                message: format!("malformed key `{key}` (expected `section.key`)"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("empty value for `{key}`"),
            });
        }
        if let Some(prev) = map.get(key) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        map.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    Ok(Entries(map))
}

fn parse_pair(key: &str, value: &str) -> CResult<[f64; 2]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| invalid(key, format!("`{value}`: {e}")))?;
    match nums.as_slice() {
        [x] => Ok([*x, 0.0]),
        [x, y] => Ok([*x, *y]),
        _ => Err(invalid(key, "expected `x` or `x, y`")),
    }
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> CResult<RunConfig> {
    let e = tokenize(text)?;

    let dim: usize = e.get("grid.dim")?.ok_or(ConfigError::Missing("grid.dim"))?;
    let mut model = ModelParams {
        chi: 0.0,
        xi: 0.0,
        beta: 0.0,
        delta: 0.0,
        alpha: 0.0,
        gamma0: 0.0,
        gamma1: 0.0,
        k: 0.0,
        l: 0.0,
        dim,
    };
    for (name, key) in COEFFICIENT_NAMES.iter().zip(MODEL_KEYS) {
        model.set(name, e.required_real(key)?);
    }
    let model = model.validate()?;
    let gamma_g = e.real("model.gamma_g")?;

    let lx = e.required_real("grid.lx")?;
    let nx: usize = e.get("grid.nx")?.ok_or(ConfigError::Missing("grid.nx"))?;
    let grid = match dim {
        1 => {
            for key in ["grid.ly", "grid.ny"] {
                if e.raw(key).is_some() {
                    return Err(invalid(key, "only valid when grid.dim = 2"));
                }
            }
            Grid::new_1d(lx, nx)?
        }
        2 => Grid::new_2d(lx, e.real_or("grid.ly", lx)?, nx, e.count_or("grid.ny", nx)?)?,
        other => return Err(invalid("grid.dim", format!("{other} (supported: 1, 2)"))),
    };

    let kind = e.raw("init.kind").unwrap_or("homogeneous");
    let only = |allowed: &[&str]| -> CResult<()> {
        for key in ["init.c", "init.center", "init.width", "init.amplitude", "init.background", "init.mass", "init.path"] {
            if e.raw(key).is_some() && !allowed.contains(&key) {
                return Err(invalid(key, format!("not used by init.kind = {kind}")));
            }
        }
        Ok(())
    };
    let extent = grid.extent();
    let init = match kind {
        "homogeneous" => {
            only(&["init.c"])?;
            InitSpec::Homogeneous {
                c: e.real_or("init.c", 1.0)?,
            }
        }
        "gaussian" => {
            only(&["init.center", "init.width", "init.amplitude", "init.background", "init.mass"])?;
            let default_center = [0.5 * extent[0], if dim == 2 { 0.5 * extent[1] } else { 0.0 }];
            let center = match e.raw("init.center") {
                Some(v) => parse_pair("init.center", v)?,
                None => default_center,
            };
            let min_extent = extent[..dim].iter().copied().fold(f64::INFINITY, f64::min);
            InitSpec::Gaussian {
                center,
                width: e.real_or("init.width", 0.1 * min_extent)?,
                amplitude: e.real_or("init.amplitude", 1.0)?,
                background: e.real_or("init.background", 0.0)?,
                mass: e.real("init.mass")?,
            }
        }
        "file" => {
            only(&["init.path"])?;
            InitSpec::File {
                path: PathBuf::from(e.raw("init.path").ok_or(ConfigError::Missing("init.path"))?),
            }
        }
        other => {
            return Err(invalid(
                "init.kind",
                format!("`{other}` (expected homogeneous, gaussian or file)"),
            ))
        }
    };

    let face = match e.raw("time.face").unwrap_or("mean") {
        "mean" => FaceRule::Mean,
        "upwind" => FaceRule::Upwind,
        other => return Err(invalid("time.face", format!("`{other}` (expected mean or upwind)"))),
    };
    let defaults = Stepping::default();
    let stepping = Stepping {
        face,
        dt_min: e.real_or("time.dt_min", defaults.dt_min)?,
        dt_max: e.real_or("time.dt_max", defaults.dt_max)?,
        cfl_safety: e.real_or("time.cfl_safety", defaults.cfl_safety)?,
    };
    let run_defaults = RunOptions::default();

    let seed: u64 = e.get("seed")?.unwrap_or(0);
    let est = RegularityOptions::new(e.real_or("estimate.rho", 1.0)?, e.real_or("estimate.q", 2.0)?);
    let estimate = RegularityOptions {
        samples: e.count_or("estimate.samples", est.samples)?,
        horizon: e.real_or("estimate.horizon", est.horizon)?,
        time_steps: e.count_or("estimate.time_steps", est.time_steps)?,
        modes: e.count_or("estimate.modes", est.modes)?,
        seed,
        ..est
    };

    let mut sweep_axes = Vec::new();
    for key in ["sweep.axis1", "sweep.axis2"] {
        if let Some(v) = e.raw(key) {
            sweep_axes.push(v.parse::<SweepAxis>().map_err(|err| invalid(key, err.to_string()))?);
        }
    }

    let cfg = RunConfig {
        seed,
        model,
        gamma_g,
        grid,
        init,
        v0: e.real("init.v0")?,
        w0: e.real("init.w0")?,
        horizon: e.real_or("time.horizon", run_defaults.horizon)?,
        stepping,
        monitor_p: e.auto_real("monitor.p", "pbar")?,
        blowup_threshold: e.auto_real("monitor.blowup_threshold", "auto")?,
        sample_stride: e.count_or("monitor.sample_stride", run_defaults.sample_stride)?,
        output_dir: PathBuf::from(e.raw("output.dir").unwrap_or("out")),
        snapshot_every: e.count_or("output.snapshot_every", 0)?,
        c_reg: e.real_or("criteria.c_reg", 1.0)?,
        estimate,
        sweep_axes,
        workers: e.count_or("sweep.workers", 1)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

const MODEL_KEYS: [&str; 9] = [
    "model.chi",
    "model.xi",
    "model.beta",
    "model.delta",
    "model.alpha",
    "model.gamma0",
    "model.gamma1",
    "model.k",
    "model.l",
];

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> CResult<Self> {
        parse_config(s)
    }
}

impl RunConfig {
    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> CResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_config(&text)
    }

    fn validate(&self) -> CResult<()> {
        self.model()?;
        let positive = |key: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("{v} must be positive")))
            }
        };
        let nonneg = |key: &str, v: f64| {
            if v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("{v} must be nonnegative")))
            }
        };
        match &self.init {
            InitSpec::Homogeneous { c } => nonneg("init.c", *c)?,
            InitSpec::Gaussian {
                width,
                amplitude,
                background,
                mass,
                ..
            } => {
                positive("init.width", *width)?;
                nonneg("init.amplitude", *amplitude)?;
                nonneg("init.background", *background)?;
                if let Some(m) = mass {
                    positive("init.mass", *m)?;
                    if !(*amplitude > 0.0 || *background > 0.0) {
                        return Err(invalid("init.mass", "cannot rescale a zero profile"));
                    }
                }
            }
            InitSpec::File { .. } => {}
        }
        for (key, v) in [("init.v0", self.v0), ("init.w0", self.w0)] {
            if let Some(v) = v {
                nonneg(key, v)?;
            }
        }
        positive("time.horizon", self.horizon)?;
        positive("time.dt_min", self.stepping.dt_min)?;
        if !(self.stepping.dt_max >= self.stepping.dt_min) {
            return Err(invalid("time.dt_max", "must be at least time.dt_min"));
        }
        positive("time.cfl_safety", self.stepping.cfl_safety)?;
        if let Some(p) = self.monitor_p {
            if !(p >= 1.0) {
                return Err(invalid("monitor.p", format!("{p} must be at least 1")));
            }
        }
        if let Some(b) = self.blowup_threshold {
            positive("monitor.blowup_threshold", b)?;
        }
        if self.sample_stride == 0 {
            return Err(invalid("monitor.sample_stride", "must be at least 1"));
        }
        positive("criteria.c_reg", self.c_reg)?;
        positive("estimate.rho", self.estimate.rho)?;
        positive("estimate.horizon", self.estimate.horizon)?;
        for (key, v) in [
            ("estimate.samples", self.estimate.samples),
            ("estimate.time_steps", self.estimate.time_steps),
            ("estimate.modes", self.estimate.modes),
            ("sweep.workers", self.workers),
        ] {
            if v == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        let lower = 1f64.max(1.0 / self.estimate.rho);
        if !(self.estimate.q > lower) {
            return Err(invalid("estimate.q", format!("must exceed max(1, 1/rho) = {lower}")));
        }
        if self.sweep_axes.len() == 2 && self.sweep_axes[0].name == self.sweep_axes[1].name {
            return Err(invalid("sweep.axis2", "sweeps the same parameter as sweep.axis1"));
        }
        Ok(())
    }

    /// The model with the configured `gamma_g`, or the midpoint of
    /// `[gamma0, gamma1]`.
    pub fn model(&self) -> crate::Result<Model> {
        match self.gamma_g {
            Some(g) => Model::with_gamma_g(self.model, g),
            None => Model::new(self.model),
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            horizon: self.horizon,
            monitor_p: self.monitor_p,
            blowup_threshold: self.blowup_threshold,
            sample_stride: self.sample_stride,
            stepping: self.stepping,
        }
    }

    /// Builds the initial state on the configured grid.
    pub fn initial_state(&self) -> CResult<SimState> {
        let model = self.model()?;
        let grid = self.grid;
        let (u, default_v, default_w) = match &self.init {
            InitSpec::Homogeneous { c } => {
                let (c, v, w) = model.homogeneous_equilibrium(*c)?;
                (ScalarField::constant(grid, c), v, w)
            }
            InitSpec::Gaussian {
                center,
                width,
                amplitude,
                background,
                mass,
            } => {
                let two_w2 = 2.0 * width * width;
                let dim = grid.dim();
                let mut u = ScalarField::from_fn(grid, |x, y| {
                    let dy = if dim == 2 { y - center[1] } else { 0.0 };
                    let r2 = (x - center[0]).powi(2) + dy * dy;
                    background + amplitude * (-r2 / two_w2).exp()
                });
                if let Some(m) = mass {
                    let scale = m / u.integral();
                    u.values_mut().iter_mut().for_each(|x| *x *= scale);
                }
                (u, 0.0, 0.0)
            }
            InitSpec::File { path } => {
                let file = fs::File::open(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                (read_field_csv(BufReader::new(file), grid)?, 0.0, 0.0)
            }
        };
        let v = ScalarField::constant(grid, self.v0.unwrap_or(default_v));
        let w = ScalarField::constant(grid, self.w0.unwrap_or(default_w));
        Ok(SimState::initial(u, v, w)?)
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn to_text(&self) -> String {
        self.render(true)
    }

    /// Canonical lines without `sweep.workers` and `output.dir`, which must
    /// not influence output bytes.
    pub fn header_lines(&self) -> Vec<String> {
        self.render(false).lines().map(str::to_string).collect()
    }

    fn render(&self, full: bool) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        for (name, key) in COEFFICIENT_NAMES.iter().zip(MODEL_KEYS) {
            put(key, self.model.get(name).expect("known coefficient").to_string());
        }
        if let Some(g) = self.gamma_g {
            put("model.gamma_g", g.to_string());
        }
        let dim = self.grid.dim();
        put("grid.dim", dim.to_string());
        put("grid.lx", self.grid.extent()[0].to_string());
        put("grid.nx", self.grid.nx().to_string());
        if dim == 2 {
            put("grid.ly", self.grid.extent()[1].to_string());
            put("grid.ny", self.grid.ny().to_string());
        }
        match &self.init {
            InitSpec::Homogeneous { c } => {
                put("init.kind", "homogeneous".into());
                put("init.c", c.to_string());
            }
            InitSpec::Gaussian {
                center,
                width,
                amplitude,
                background,
                mass,
            } => {
                put("init.kind", "gaussian".into());
                let c = if dim == 2 {
                    format!("{}, {}", center[0], center[1])
                } else {
                    center[0].to_string()
                };
                put("init.center", c);
                put("init.width", width.to_string());
                put("init.amplitude", amplitude.to_string());
                put("init.background", background.to_string());
                if let Some(m) = mass {
                    put("init.mass", m.to_string());
                }
            }
            InitSpec::File { path } => {
                put("init.kind", "file".into());
                put("init.path", path.display().to_string());
            }
        }
        if let Some(v) = self.v0 {
            put("init.v0", v.to_string());
        }
        if let Some(w) = self.w0 {
            put("init.w0", w.to_string());
        }
        put("time.horizon", self.horizon.to_string());
        put("time.dt_min", self.stepping.dt_min.to_string());
        put("time.dt_max", self.stepping.dt_max.to_string());
        put("time.cfl_safety", self.stepping.cfl_safety.to_string());
        let face = match self.stepping.face {
            FaceRule::Mean => "mean",
            FaceRule::Upwind => "upwind",
        };
        put("time.face", face.into());
        put(
            "monitor.p",
            self.monitor_p.map_or("pbar".into(), |p| p.to_string()),
        );
        put(
            "monitor.blowup_threshold",
            self.blowup_threshold.map_or("auto".into(), |b| b.to_string()),
        );
        put("monitor.sample_stride", self.sample_stride.to_string());
        if full {
            put("output.dir", self.output_dir.display().to_string());
        }
        put("output.snapshot_every", self.snapshot_every.to_string());
        put("criteria.c_reg", self.c_reg.to_string());
        put("estimate.rho", self.estimate.rho.to_string());
        put("estimate.q", self.estimate.q.to_string());
        put("estimate.samples", self.estimate.samples.to_string());
        put("estimate.horizon", self.estimate.horizon.to_string());
        put("estimate.time_steps", self.estimate.time_steps.to_string());
        put("estimate.modes", self.estimate.modes.to_string());
        for (key, axis) in ["sweep.axis1", "sweep.axis2"].iter().zip(&self.sweep_axes) {
            put(key, axis.to_string());
        }
        if full {
            put("sweep.workers", self.workers.to_string());
        }
        s
    }
}
