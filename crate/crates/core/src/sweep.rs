//! Parameter sweeps over one or two model coefficients.
//!
//! Points run on a fixed-size thread pool; rows come back in grid order, so
//! the phase table is independent of the number of workers.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::criteria::{classify_regime, Regime};
use crate::error::{domain, Error, Result};
use crate::model::COEFFICIENT_NAMES;
use crate::timestep::{run_simulation, VerdictKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

/// One swept coefficient: `count >= 2` values from `min` to `max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl SweepAxis {
    pub fn new(name: &str, min: f64, max: f64, count: usize, spacing: Spacing) -> Result<Self> {
        let name = COEFFICIENT_NAMES
            .iter()
            .copied()
            .find(|n| *n == name)
            .ok_or_else(|| domain(format!("`{name}` is not a numeric model coefficient")))?;
        if count < 2 {
            return Err(domain(format!("axis `{name}` needs at least 2 points, got {count}")));
        }
        if !(min.is_finite() && max.is_finite()) {
            return Err(domain(format!("axis `{name}` bounds must be finite")));
        }
        if spacing == Spacing::Log && !(min > 0.0 && max > 0.0) {
            return Err(domain(format!("log axis `{name}` needs positive bounds")));
        }
        Ok(Self {
            name,
            min,
            max,
            count,
            spacing,
        })
    }

    /// Axis values; both endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.count {
                    return self.max;
                }
                let s = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + s * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + s * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

/// `name min max count [linear|log]`.
impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(domain(format!(
                "expected `name min max count [linear|log]`, found `{s}`"
            )));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|e| domain(format!("`{t}`: {e}")))
        };
        let count = parts[3]
            .parse::<usize>()
            .map_err(|e| domain(format!("`{}`: {e}", parts[3])))?;
        let spacing = match parts.get(4).copied().unwrap_or("linear") {
            "linear" => Spacing::Linear,
            "log" => Spacing::Log,
            other => return Err(domain(format!("unknown spacing `{other}`"))),
        };
        Self::new(parts[0], num(parts[1])?, num(parts[2])?, count, spacing)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spacing = match self.spacing {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        };
        write!(f, "{} {} {} {} {spacing}", self.name, self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub axes: Vec<SweepAxis>,
    pub workers: usize,
}

impl SweepSpec {
    pub fn new(base: RunConfig, axes: Vec<SweepAxis>, workers: usize) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(domain(format!("a sweep needs 1 or 2 axes, got {}", axes.len())));
        }
        if axes.len() == 2 && axes[0].name == axes[1].name {
            return Err(domain(format!("axis `{}` is swept twice", axes[0].name)));
        }
        if workers == 0 {
            return Err(domain("workers must be at least 1"));
        }
        Ok(Self { base, axes, workers })
    }

    /// Sweep described by the `sweep.*` keys of a configuration.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        Self::new(cfg.clone(), cfg.sweep_axes.clone(), cfg.workers)
    }

    /// All points in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            let vals = axis.values();
            points = points
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

/// Outcome of one sweep point. Failures are recorded, not propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    pub values: Vec<f64>,
    pub verdict: Option<VerdictKind>,
    pub sup_linf: f64,
    pub sup_lp: f64,
    pub regime: Option<Regime>,
    pub error: Option<String>,
}

impl PhaseRow {
    fn failed(values: Vec<f64>, err: impl fmt::Display) -> Self {
        Self {
            values,
            verdict: None,
            sup_linf: f64::NAN,
            sup_lp: f64::NAN,
            regime: None,
            error: Some(err.to_string()),
        }
    }
}

fn run_point(spec: &SweepSpec, values: Vec<f64>) -> PhaseRow {
    let mut cfg = spec.base.clone();
    for (axis, &v) in spec.axes.iter().zip(&values) {
        cfg.model.set(axis.name, v);
    }
    let regime = classify_regime(&cfg.model, cfg.c_reg).map(|r| r.regime);
    let outcome = cfg
        .model()
        .map_err(|e| e.to_string())
        .and_then(|model| {
            let init = cfg.initial_state().map_err(|e| e.to_string())?;
            run_simulation(&model, init, &cfg.run_options()).map_err(|e| e.to_string())
        });
    match outcome {
        Ok(out) => PhaseRow {
            values,
            verdict: Some(out.verdict.kind),
            sup_linf: out.verdict.sup_linf,
            sup_lp: out.verdict.sup_lp,
            regime: regime.ok(),
            error: None,
        },
        Err(e) => PhaseRow {
            regime: regime.ok(),
            ..PhaseRow::failed(values, e)
        },
    }
}

/// Runs every point on a pool of `spec.workers` threads.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<PhaseRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| domain(format!("cannot start worker pool: {e}")))?;
    let points = spec.points();
    Ok(pool.install(|| {
        points
            .into_par_iter()
            .map(|values| run_point(spec, values))
            .collect()
    }))
}

/// Writes the phase table with `#` comment lines first.
pub fn write_phase_csv<W: Write>(
    mut out: W,
    spec: &SweepSpec,
    rows: &[PhaseRow],
    comments: &[String],
) -> io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = spec.axes.iter().map(|a| a.name).collect();
    header.extend(["verdict", "sup_linf", "sup_lp", "regime", "error"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec: Vec<String> = r.values.iter().map(f64::to_string).collect();
        rec.push(r.verdict.map_or(String::new(), |v| v.label().to_string()));
        rec.push(r.sup_linf.to_string());
        rec.push(r.sup_lp.to_string());
        rec.push(r.regime.map_or(String::new(), |g| g.label().to_string()));
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values_hit_endpoints() {
        let a = SweepAxis::new("k", 0.2, 0.6, 3, Spacing::Linear).unwrap();
        assert_eq!(a.values(), vec![0.2, 0.4, 0.6]);
        let g = SweepAxis::new("chi", 0.1, 10.0, 3, Spacing::Log).unwrap();
        let v = g.values();
        assert_eq!((v[0], v[2]), (0.1, 10.0));
        assert!((v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn axis_validation() {
        assert!(SweepAxis::new("zeta", 0.1, 1.0, 3, Spacing::Linear).is_err());
        assert!(SweepAxis::new("dim", 1.0, 2.0, 2, Spacing::Linear).is_err());
        assert!(SweepAxis::new("k", 0.1, 1.0, 1, Spacing::Linear).is_err());
        assert!(SweepAxis::new("k", -1.0, 1.0, 3, Spacing::Log).is_err());
        assert!("k 0.1 1".parse::<SweepAxis>().is_err());
        assert!("k 0.1 1 3 cubic".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn axis_text_round_trips() {
        for text in ["k 0.2 0.6 3 linear", "gamma1 0.5 4 5 log"] {
            let a: SweepAxis = text.parse().unwrap();
            assert_eq!(a.to_string(), text);
        }
        let a: SweepAxis = "l 0.1 0.3 2".parse().unwrap();
        assert_eq!(a.spacing, Spacing::Linear);
    }
}
