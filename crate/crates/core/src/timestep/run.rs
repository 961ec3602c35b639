//! Time loop, norm monitoring and run verdicts.

use std::fmt;
use std::io::{self, Write};

use super::{adapt_dt, step_forced, NegativityPolicy, SimState, Stepping};
use crate::criteria::compute_p_bar;
use crate::error::{Error, Result};
use crate::model::Model;

/// Consecutive forced steps at `dt_min` after which a run is abandoned.
const MAX_PINNED_STEPS: usize = 100;

/// Relative plateau tolerance for [`VerdictKind::BoundedRun`].
const PLATEAU_TOLERANCE: f64 = 0.05;

pub const NORMS_CSV_HEADER: &str = "t,mass,lp,linf_u,linf_v,linf_w,dt";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub horizon: f64,
    /// Exponent of the monitored integral; `None` selects `p_bar`.
    pub monitor_p: Option<f64>,
    /// `None` selects `1e6 * (sup u0 + 1)`.
    pub blowup_threshold: Option<f64>,
    /// Record every n-th accepted step.
    pub sample_stride: usize,
    pub stepping: Stepping,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            monitor_p: None,
            blowup_threshold: None,
            sample_stride: 10,
            stepping: Stepping::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRow {
    pub t: f64,
    pub mass: f64,
    pub lp: f64,
    pub linf_u: f64,
    pub linf_v: f64,
    pub linf_w: f64,
    pub dt: f64,
}

impl NormRow {
    fn measure(state: &SimState, p: f64) -> Result<Self> {
        Ok(Self {
            t: state.t,
            mass: state.u.integral(),
            lp: state.u.lp_integral(p)?,
            linf_u: state.u.linf_norm(),
            linf_v: state.v.linf_norm(),
            linf_w: state.w.linf_norm(),
            dt: state.dt,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormSeries {
    pub p: f64,
    pub rows: Vec<NormRow>,
}

impl NormSeries {
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> io::Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{NORMS_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t, r.mass, r.lp, r.linf_u, r.linf_v, r.linf_w, r.dt
            )?;
        }
        Ok(())
    }

    /// Largest relative deviation of the mass from its initial value.
    pub fn max_mass_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let m0 = first.mass;
        self.rows
            .iter()
            .map(|r| if m0 != 0.0 { (r.mass - m0).abs() / m0.abs() } else { r.mass.abs() })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    BoundedRun,
    BlowupSuspected,
    StepCollapse,
    HorizonReached,
}

impl VerdictKind {
    pub fn label(self) -> &'static str {
        match self {
            VerdictKind::BoundedRun => "BoundedRun",
            VerdictKind::BlowupSuspected => "BlowupSuspected",
            VerdictKind::StepCollapse => "StepCollapse",
            VerdictKind::HorizonReached => "HorizonReached",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub t_end: f64,
    pub sup_lp: f64,
    pub sup_linf: f64,
}

impl Verdict {
    pub fn summary_line(&self) -> String {
        format!(
            "verdict={} t_end={} sup_lp={} sup_linf={}",
            self.kind, self.t_end, self.sup_lp, self.sup_linf
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub series: NormSeries,
    pub verdict: Verdict,
    pub state: SimState,
    pub monitor_p: f64,
    pub blowup_threshold: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    /// Total mass added by clipping negative values.
    pub clipped_mass: f64,
}

/// Runs until the horizon, a suspected blow-up, or step collapse.
pub fn run_simulation(model: &Model, init: SimState, opts: &RunOptions) -> Result<RunOutcome> {
    run_simulation_with(model, init, opts, |_, _| {})
}

/// As [`run_simulation`], calling `observer` on every recorded row.
pub fn run_simulation_with(
    model: &Model,
    init: SimState,
    opts: &RunOptions,
    mut observer: impl FnMut(&SimState, &NormRow),
) -> Result<RunOutcome> {
    let p = &model.params;
    let grid = *init.u.grid();
    if grid.dim() != p.dim {
        return Err(Error::Domain(format!(
            "model dimension {} does not match grid dimension {}",
            p.dim,
            grid.dim()
        )));
    }
    if !(opts.horizon > 0.0) {
        return Err(Error::Domain(format!("horizon {} must be positive", opts.horizon)));
    }
    let monitor_p = match opts.monitor_p {
        Some(mp) => mp,
        None => compute_p_bar(p.dim, p.k, p.l, p.beta, p.delta)?,
    };
    if monitor_p <= p.dim as f64 / 2.0 {
        log::warn!("monitor exponent {monitor_p} does not exceed n/2 = {}", p.dim as f64 / 2.0);
    }
    let stride = opts.sample_stride.max(1);
    let stepping = opts.stepping;

    let mut state = init;
    state.t = 0.0;
    state.dt = adapt_dt(&state, model, &stepping);
    let blowup_threshold = opts
        .blowup_threshold
        .unwrap_or(1e6 * (state.u.linf_norm() + 1.0));

    let mut series = NormSeries {
        p: monitor_p,
        rows: Vec::new(),
    };
    let first = NormRow::measure(&state, monitor_p)?;
    observer(&state, &first);
    series.rows.push(first);
    let mut sup_lp = first.lp;
    let mut sup_linf = first.linf_u;

    let mut steps = 0;
    let mut rejected = 0;
    let mut pinned = 0;
    let mut clipped_mass = 0.0;

    let finish = |kind: VerdictKind, state: &SimState, sup_lp: f64, sup_linf: f64| Verdict {
        kind,
        t_end: state.t,
        sup_lp,
        sup_linf,
    };

    let mut kind = if !(first.linf_u < blowup_threshold) {
        Some(VerdictKind::BlowupSuspected)
    } else {
        None
    };

    while kind.is_none() {
        let remaining = opts.horizon - state.t;
        let mut dt = adapt_dt(&state, model, &stepping).min(remaining);
        let mut forced = false;
        let out = loop {
            let trial = SimState { dt, ..state.clone() };
            match step_forced(&trial, model, stepping.face, None, NegativityPolicy::Reject) {
                Ok(out) => break out,
                Err(Error::StepRejected { .. }) if dt > stepping.dt_min => {
                    rejected += 1;
                    dt = (0.5 * dt).max(stepping.dt_min);
                }
                Err(Error::StepRejected { .. }) => {
                    rejected += 1;
                    forced = true;
                    break step_forced(&trial, model, stepping.face, None, NegativityPolicy::ClipAll)?;
                }
                Err(e) => return Err(e),
            }
        };
        pinned = if forced { pinned + 1 } else { 0 };
        clipped_mass += out.clipped_mass;
        state = out.state;
        steps += 1;
        if state.t >= opts.horizon - 1e-12 * opts.horizon {
            state.t = opts.horizon;
        }

        let linf = state.u.linf_norm();
        let lp = state.u.lp_integral(monitor_p)?;
        sup_linf = sup_linf.max(linf);
        sup_lp = sup_lp.max(lp);

        kind = if !(linf < blowup_threshold) || !lp.is_finite() {
            Some(VerdictKind::BlowupSuspected)
        } else if pinned >= MAX_PINNED_STEPS {
            Some(VerdictKind::StepCollapse)
        } else if state.t >= opts.horizon {
            Some(VerdictKind::HorizonReached)
        } else {
            None
        };

        if steps % stride == 0 || kind.is_some() {
            let row = NormRow::measure(&state, monitor_p)?;
            observer(&state, &row);
            series.rows.push(row);
        }
    }

    let mut kind = kind.expect("loop exits with a verdict");
    if kind == VerdictKind::HorizonReached && plateau_reached(&series, PLATEAU_TOLERANCE) {
        kind = VerdictKind::BoundedRun;
    }
    let verdict = finish(kind, &state, sup_lp, sup_linf);
    Ok(RunOutcome {
        series,
        verdict,
        state,
        monitor_p,
        blowup_threshold,
        steps,
        rejected_steps: rejected,
        clipped_mass,
    })
}

/// Whether the supremum of the monitored integral over the second half of the
/// run is within `tolerance` (relative) of its value at three quarters.
pub fn plateau_reached(series: &NormSeries, tolerance: f64) -> bool {
    let Some(last) = series.rows.last() else {
        return false;
    };
    let t_end = last.t;
    let sup_half = series
        .rows
        .iter()
        .filter(|r| r.t >= 0.5 * t_end)
        .map(|r| r.lp)
        .fold(f64::NEG_INFINITY, f64::max);
    let at_three_quarters = series
        .rows
        .iter()
        .rev()
        .find(|r| r.t <= 0.75 * t_end)
        .map(|r| r.lp)
        .unwrap_or(series.rows[0].lp);
    if at_three_quarters == 0.0 {
        return sup_half == 0.0;
    }
    (sup_half - at_three_quarters).abs() <= tolerance * at_three_quarters
}

/// Affine-in-`int_0^t e^s ds` envelope for `e^t * integral(u^p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallReport {
    /// Fitted constant `c` of the envelope `I(0) + c (e^t - 1)`.
    pub c_fit: f64,
    /// Largest ratio of `e^t I(t)` to the envelope over the run.
    pub max_ratio: f64,
    pub factor: f64,
    pub within: bool,
}

/// Fits `c` in the differential inequality `I' + I <= c` as the largest
/// finite-difference value of `I' + I` over the first `fit_fraction` of the
/// run (floored at zero), then measures the worst ratio of `e^t I(t)` to
/// `I(0) + c (e^t - 1)` over the whole run.
pub fn gronwall_envelope(series: &NormSeries, fit_fraction: f64, factor: f64) -> GronwallReport {
    let rows = &series.rows;
    let i0 = rows.first().map(|r| r.lp).unwrap_or(0.0);
    let t_end = rows.last().map(|r| r.t).unwrap_or(0.0);
    let c_fit = rows
        .windows(2)
        .filter(|w| w[1].t <= fit_fraction * t_end && w[1].t > w[0].t)
        .map(|w| (w[1].lp - w[0].lp) / (w[1].t - w[0].t) + 0.5 * (w[0].lp + w[1].lp))
        .fold(0.0f64, f64::max);
    let mut max_ratio = 0.0f64;
    for r in rows {
        // Both sides divided by e^t for range safety.
        let decay = (-r.t).exp();
        let envelope = i0 * decay + c_fit * (1.0 - decay);
        let ratio = if envelope > 0.0 {
            r.lp / envelope
        } else if r.lp == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
    }
    GronwallReport {
        c_fit,
        max_ratio,
        factor,
        within: max_ratio <= factor,
    }
}

/// Whether `linf_u` is nondecreasing over the last `count` recorded rows.
pub fn final_growth_monotone(series: &NormSeries, count: usize) -> bool {
    let n = series.rows.len();
    let tail = &series.rows[n.saturating_sub(count)..];
    tail.windows(2).all(|w| w[1].linf_u >= w[0].linf_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, ScalarField};
    use crate::model::ModelParams;

    fn model(k: f64, l: f64, dim: usize) -> Model {
        Model::new(ModelParams {
            chi: 1.0,
            xi: 1.0,
            beta: 1.0,
            delta: 1.0,
            alpha: 1.0,
            gamma0: 1.0,
            gamma1: 1.0,
            k,
            l,
            dim,
        })
        .unwrap()
    }

    fn opts(horizon: f64) -> RunOptions {
        RunOptions {
            horizon,
            sample_stride: 5,
            ..RunOptions::default()
        }
    }

    #[test]
    fn zero_density_stays_zero() {
        let m = model(0.4, 0.4, 2);
        let g = Grid::new_2d(1.0, 1.0, 8, 8).unwrap();
        let init = SimState::initial(ScalarField::zeros(g), ScalarField::zeros(g), ScalarField::zeros(g)).unwrap();
        let out = run_simulation(&m, init, &RunOptions { stepping: Stepping { dt_max: 0.05, ..Stepping::default() }, ..opts(8.0) }).unwrap();
        assert_eq!(out.verdict.kind, VerdictKind::BoundedRun);
        assert_eq!(out.state.u.linf_norm(), 0.0);
        assert_eq!(out.state.v.linf_norm(), 0.0);
        // w relaxes towards g(0)/delta.
        let target = m.g.eval(0.0).unwrap() / m.params.delta;
        assert!((out.state.w.linf_norm() - target).abs() < 1e-3);
        assert!(out.state.w.values().iter().all(|&x| (x - out.state.w.values()[0]).abs() < 1e-12));
    }

    #[test]
    fn homogeneous_data_is_bounded_and_flat() {
        let m = model(0.5, 0.6, 1);
        let g = Grid::new_1d(1.0, 16).unwrap();
        let (c, v, w) = m.homogeneous_equilibrium(1.5).unwrap();
        let init = SimState::initial(
            ScalarField::constant(g, c),
            ScalarField::constant(g, v),
            ScalarField::constant(g, w),
        )
        .unwrap();
        let out = run_simulation(&m, init, &opts(2.0)).unwrap();
        assert_eq!(out.verdict.kind, VerdictKind::BoundedRun);
        for r in &out.series.rows {
            assert!((r.linf_u - c).abs() < 1e-12);
        }
        assert!(out.series.rows.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(out.state.t, 2.0);
    }

    #[test]
    fn tiny_threshold_stops_immediately() {
        let m = model(0.5, 0.6, 1);
        let g = Grid::new_1d(1.0, 16).unwrap();
        let init = SimState::initial(ScalarField::constant(g, 1.0), ScalarField::zeros(g), ScalarField::zeros(g)).unwrap();
        let out = run_simulation(
            &m,
            init,
            &RunOptions {
                blowup_threshold: Some(1e-300),
                ..opts(1.0)
            },
        )
        .unwrap();
        assert_eq!(out.verdict.kind, VerdictKind::BlowupSuspected);
        assert_eq!(out.steps, 0);
        assert_eq!(out.verdict.t_end, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = model(0.5, 0.6, 2);
        let g = Grid::new_1d(1.0, 16).unwrap();
        let init = SimState::initial(ScalarField::zeros(g), ScalarField::zeros(g), ScalarField::zeros(g)).unwrap();
        assert!(run_simulation(&m, init, &opts(1.0)).is_err());
    }

    fn series(values: &[(f64, f64)]) -> NormSeries {
        NormSeries {
            p: 2.0,
            rows: values
                .iter()
                .map(|&(t, lp)| NormRow {
                    t,
                    mass: 1.0,
                    lp,
                    linf_u: lp,
                    linf_v: 0.0,
                    linf_w: 0.0,
                    dt: 0.1,
                })
                .collect(),
        }
    }

    #[test]
    fn plateau_detection() {
        let flat = series(&[(0.0, 5.0), (1.0, 3.0), (2.0, 2.0), (3.0, 2.01), (4.0, 2.0)]);
        assert!(plateau_reached(&flat, 0.05));
        let growing = series(&[(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, 5.0)]);
        assert!(!plateau_reached(&growing, 0.05));
        assert!(final_growth_monotone(&growing, 20));
        assert!(!final_growth_monotone(&flat, 3));
    }

    #[test]
    fn gronwall_envelope_on_decaying_and_exploding_series() {
        let rows: Vec<(f64, f64)> = (0..=100).map(|i| {
            let t = i as f64 * 0.2;
            (t, 1.0 + 4.0 * (-t).exp())
        }).collect();
        let report = gronwall_envelope(&series(&rows), 0.1, 10.0);
        assert!(report.within, "{report:?}");
        assert!(report.c_fit > 0.0);

        let rows: Vec<(f64, f64)> = (0..=100).map(|i| {
            let t = i as f64 * 0.2;
            (t, (0.5 * t).exp())
        }).collect();
        assert!(!gronwall_envelope(&series(&rows), 0.1, 10.0).within);

        // Fast relaxation onto a plateau: the fitted constant must track the
        // plateau, not the decaying transient.
        let rows: Vec<(f64, f64)> = (0..=1000).map(|i| {
            let t = i as f64 * 0.02;
            (t, 0.25 + 7.7 * (-5.0 * t).exp())
        }).collect();
        let report = gronwall_envelope(&series(&rows), 0.1, 10.0);
        assert!(report.within && report.max_ratio < 1.05, "{report:?}");
    }
}
