//! First-order IMEX integration of the attraction-repulsion system.
//!
//! Taxis and production terms are explicit; diffusion and linear decay are
//! backward Euler. One step reads
//!
//! ```text
//! u* = u + dt (-chi div(u grad v) + xi div(u grad w))
//! (I - dt lap) u+ = u*
//! ((1 + dt beta) I - dt lap) v+ = v + dt f(u)
//! ((1 + dt delta) I - dt lap) w+ = w + dt g(u)
//! ```

mod run;

pub use run::{
    final_growth_monotone, gronwall_envelope, plateau_reached, run_simulation, run_simulation_with,
    GronwallReport, NormRow, NormSeries, RunOptions, RunOutcome, Verdict, VerdictKind,
    NORMS_CSV_HEADER,
};

use crate::error::{Error, Result};
use crate::grid::{
    solve_implicit_diffusion, taxis_divergence, FaceRule, ScalarField, NEGATIVE_TOLERANCE,
};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: ScalarField,
    pub v: ScalarField,
    pub w: ScalarField,
    pub t: f64,
    pub dt: f64,
}

impl SimState {
    /// Initial state at `t = 0`. Fields must share a grid and be nonnegative
    /// up to [`NEGATIVE_TOLERANCE`].
    pub fn initial(u: ScalarField, v: ScalarField, w: ScalarField) -> Result<Self> {
        u.ensure_same_grid(&v)?;
        u.ensure_same_grid(&w)?;
        for f in [&u, &v, &w] {
            if let Some((index, &value)) = f
                .values()
                .iter()
                .enumerate()
                .find(|(_, &x)| !(x >= -NEGATIVE_TOLERANCE))
            {
                return Err(Error::NegativeValue { index, value });
            }
        }
        Ok(Self {
            u,
            v,
            w,
            t: 0.0,
            dt: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    U,
    V,
    W,
}

/// Extra source terms appended to the three equations (manufactured
/// solutions).
pub trait Forcing: Sync {
    fn source(&self, component: Component, t: f64, x: f64, y: f64) -> f64;
}

/// Step-size control and flux options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepping {
    pub face: FaceRule,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cfl_safety: f64,
}

impl Default for Stepping {
    fn default() -> Self {
        Self {
            face: FaceRule::Mean,
            dt_min: 1e-10,
            dt_max: 0.1,
            cfl_safety: 0.4,
        }
    }
}

/// What to do with values below `-NEGATIVE_TOLERANCE` after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativityPolicy {
    Reject,
    ClipAll,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: SimState,
    /// Mass added by clipping negative values to zero, summed over fields.
    pub clipped_mass: f64,
}

/// Advances `state` by `state.dt`.
pub fn step(state: &SimState, model: &Model, face: FaceRule) -> Result<StepOutput> {
    step_forced(state, model, face, None, NegativityPolicy::Reject)
}

/// Advances `state` by `state.dt` with optional source terms.
pub fn step_forced(
    state: &SimState,
    model: &Model,
    face: FaceRule,
    forcing: Option<&dyn Forcing>,
    policy: NegativityPolicy,
) -> Result<StepOutput> {
    let p = &model.params;
    let dt = state.dt;
    let t_next = state.t + dt;
    let grid = *state.u.grid();

    let attract = taxis_divergence(&state.u, &state.v, -p.chi, face)?;
    let repel = taxis_divergence(&state.u, &state.w, p.xi, face)?;
    let mut u_star = state.u.clone();
    for ((x, a), r) in u_star
        .values_mut()
        .iter_mut()
        .zip(attract.values())
        .zip(repel.values())
    {
        *x += dt * (a + r);
    }

    let mut v_rhs = state.v.clone();
    let mut w_rhs = state.w.clone();
    for ((vr, wr), &u) in v_rhs
        .values_mut()
        .iter_mut()
        .zip(w_rhs.values_mut().iter_mut())
        .zip(state.u.values())
    {
        *vr += dt * model.f.eval_unchecked(u);
        *wr += dt * model.g.eval_unchecked(u);
    }

    if let Some(src) = forcing {
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.center(i, j);
                let c = grid.index(i, j);
                u_star.values_mut()[c] += dt * src.source(Component::U, t_next, x, y);
                v_rhs.values_mut()[c] += dt * src.source(Component::V, t_next, x, y);
                w_rhs.values_mut()[c] += dt * src.source(Component::W, t_next, x, y);
            }
        }
    }

    let mut u = solve_implicit_diffusion(&u_star, dt, 0.0)?;
    let mut v = solve_implicit_diffusion(&v_rhs, dt, p.beta)?;
    let mut w = solve_implicit_diffusion(&w_rhs, dt, p.delta)?;

    if policy == NegativityPolicy::Reject {
        let min_value = u.min_value().min(v.min_value()).min(w.min_value());
        if !(min_value >= -NEGATIVE_TOLERANCE) {
            return Err(Error::StepRejected { dt, min_value });
        }
    }
    let vol = grid.cell_volume();
    let mut clipped = 0.0;
    for field in [&mut u, &mut v, &mut w] {
        for x in field.values_mut() {
            if *x < 0.0 {
                clipped -= *x;
                *x = 0.0;
            }
        }
    }
    let clipped_mass = clipped * vol;
    if clipped_mass > 0.0 {
        log::debug!("t = {t_next}: clipped mass {clipped_mass:e}");
    }

    Ok(StepOutput {
        state: SimState {
            u,
            v,
            w,
            t: t_next,
            dt,
        },
        clipped_mass,
    })
}

/// Largest drift speed `chi |grad v| + xi |grad w|` over interior faces.
fn max_face_speed(state: &SimState, model: &Model) -> f64 {
    let grid = state.u.grid();
    let (v, w) = (state.v.values(), state.w.values());
    let (nx, ny) = (grid.nx(), grid.ny());
    let (chi, xi) = (model.params.chi, model.params.xi);
    let mut speed = 0.0f64;
    let mut visit = |a: usize, b: usize, h: f64| {
        let s = chi * ((v[b] - v[a]) / h).abs() + xi * ((w[b] - w[a]) / h).abs();
        speed = speed.max(s);
    };
    let hx = grid.spacing(0);
    for j in 0..ny {
        for i in 0..nx - 1 {
            visit(j * nx + i, j * nx + i + 1, hx);
        }
    }
    if grid.dim() == 2 {
        let hy = grid.spacing(1);
        for j in 0..ny - 1 {
            for i in 0..nx {
                visit(j * nx + i, (j + 1) * nx + i, hy);
            }
        }
    }
    speed
}

/// `cfl_safety * min(h^2/(2 dim), h/(speed + tiny))`, clamped to
/// `[dt_min, dt_max]`.
pub fn adapt_dt(state: &SimState, model: &Model, stepping: &Stepping) -> f64 {
    let grid = state.u.grid();
    let h = grid.min_spacing();
    let diffusive = h * h / (2.0 * grid.dim() as f64);
    let advective = h / (max_face_speed(state, model) + 1e-30);
    let dt = stepping.cfl_safety * diffusive.min(advective);
    if dt.is_nan() {
        return stepping.dt_min;
    }
    dt.clamp(stepping.dt_min, stepping.dt_max)
}
