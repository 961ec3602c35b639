//! Manufactured-solution convergence study for the coupled solver.
//!
//! Each exact field is `base + amp cos(mx pi x/Lx) cos(my pi y/Ly) e^{-rate t}`,
//! which has zero normal derivative on the rectangle. The matching source
//! terms are appended to each equation and the discrete solution is compared
//! with the exact one at the final time on three nested grids with
//! `dt` proportional to `h^2`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::grid::{FaceRule, Grid, ScalarField};
use crate::model::{Model, ModelParams};
use crate::timestep::{step_forced, Component, Forcing, NegativityPolicy, SimState};

/// Observed order every field must reach.
pub const ORDER_THRESHOLD: f64 = 1.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsCase {
    Cosine1d,
    Cosine2d,
    Constant,
}

impl MmsCase {
    pub fn name(self) -> &'static str {
        match self {
            MmsCase::Cosine1d => "cosine-1d",
            MmsCase::Cosine2d => "cosine-2d",
            MmsCase::Constant => "constant",
        }
    }
}

impl fmt::Display for MmsCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MmsCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine-1d" => Ok(MmsCase::Cosine1d),
            "cosine-2d" => Ok(MmsCase::Cosine2d),
            "constant" => Ok(MmsCase::Constant),
            other => Err(domain(format!(
                "unknown MMS case `{other}` (expected cosine-1d, cosine-2d or constant)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ModeField {
    base: f64,
    amp: f64,
    kx: f64,
    ky: f64,
    rate: f64,
}

impl ModeField {
    fn new(base: f64, amp: f64, mx: f64, my: f64, lx: f64, ly: f64, rate: f64) -> Self {
        Self {
            base,
            amp,
            kx: mx * PI / lx,
            ky: my * PI / ly,
            rate,
        }
    }

    fn shape(&self, x: f64, y: f64, t: f64) -> f64 {
        self.amp * (self.kx * x).cos() * (self.ky * y).cos() * (-self.rate * t).exp()
    }

    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        self.base + self.shape(x, y, t)
    }

    fn grad(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let e = self.amp * (-self.rate * t).exp();
        (
            -e * self.kx * (self.kx * x).sin() * (self.ky * y).cos(),
            -e * self.ky * (self.kx * x).cos() * (self.ky * y).sin(),
        )
    }

    fn laplacian(&self, x: f64, y: f64, t: f64) -> f64 {
        -(self.kx * self.kx + self.ky * self.ky) * self.shape(x, y, t)
    }

    fn time_derivative(&self, x: f64, y: f64, t: f64) -> f64 {
        -self.rate * self.shape(x, y, t)
    }
}

struct Manufactured {
    model: Model,
    u: ModeField,
    v: ModeField,
    w: ModeField,
}

impl Forcing for Manufactured {
    fn source(&self, component: Component, t: f64, x: f64, y: f64) -> f64 {
        let p = &self.model.params;
        let u = self.u.value(x, y, t);
        match component {
            Component::U => {
                let (ux, uy) = self.u.grad(x, y, t);
                let (vx, vy) = self.v.grad(x, y, t);
                let (wx, wy) = self.w.grad(x, y, t);
                // div(u grad phi) = grad u . grad phi + u lap phi
                let div_v = ux * vx + uy * vy + u * self.v.laplacian(x, y, t);
                let div_w = ux * wx + uy * wy + u * self.w.laplacian(x, y, t);
                self.u.time_derivative(x, y, t) - self.u.laplacian(x, y, t) + p.chi * div_v
                    - p.xi * div_w
            }
            Component::V => {
                self.v.time_derivative(x, y, t) - self.v.laplacian(x, y, t)
                    + p.beta * self.v.value(x, y, t)
                    - self.model.f.eval_unchecked(u)
            }
            Component::W => {
                self.w.time_derivative(x, y, t) - self.w.laplacian(x, y, t)
                    + p.delta * self.w.value(x, y, t)
                    - self.model.g.eval_unchecked(u)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsReport {
    pub case: MmsCase,
    /// Cells per axis of each refinement level.
    pub resolutions: Vec<usize>,
    /// Discrete L2 errors of `u`, `v`, `w` per level.
    pub errors: [Vec<f64>; 3],
    /// Smallest observed order across consecutive levels, per field.
    pub orders: [f64; 3],
    pub passed: bool,
}

impl MmsReport {
    pub fn to_kv(&self) -> String {
        let mut s = format!("case = {}\n", self.case);
        let res: Vec<String> = self.resolutions.iter().map(|r| r.to_string()).collect();
        s.push_str(&format!("resolutions = {}\n", res.join(",")));
        for (name, (errs, order)) in ["u", "v", "w"].iter().zip(self.errors.iter().zip(self.orders)) {
            let e: Vec<String> = errs.iter().map(|e| format!("{e:e}")).collect();
            s.push_str(&format!("error_{name} = {}\n", e.join(",")));
            s.push_str(&format!("order_{name} = {order}\n"));
        }
        s.push_str(&format!("passed = {}\n", self.passed));
        s
    }
}

fn mms_params(dim: usize) -> ModelParams {
    ModelParams {
        chi: 1.0,
        xi: 0.5,
        beta: 1.0,
        delta: 2.0,
        alpha: 1.0,
        gamma0: 1.0,
        gamma1: 1.0,
        k: 1.0,
        l: 0.5,
        dim,
    }
}

fn problem(case: MmsCase) -> Result<(Manufactured, Vec<usize>)> {
    let dim = if case == MmsCase::Cosine1d { 1 } else { 2 };
    let model = Model::new(mms_params(dim))?;
    let my = |m: f64| if dim == 2 { m } else { 0.0 };
    let (u, v, w, levels) = match case {
        MmsCase::Cosine1d | MmsCase::Cosine2d => (
            ModeField::new(2.0, 1.0, 1.0, my(1.0), 1.0, 1.0, 1.0),
            ModeField::new(1.0, 0.5, 1.0, my(2.0), 1.0, 1.0, 1.0),
            ModeField::new(1.0, 0.5, 2.0, my(1.0), 1.0, 1.0, 0.5),
            if dim == 1 { vec![32, 64, 128] } else { vec![16, 32, 64] },
        ),
        MmsCase::Constant => (
            ModeField::new(1.5, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0),
            ModeField::new(0.7, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0),
            ModeField::new(1.2, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0),
            vec![8, 16, 32],
        ),
    };
    Ok((Manufactured { model, u, v, w }, levels))
}

const FINAL_TIME: f64 = 0.1;
const DT_PER_H2: f64 = 0.25;

fn solve_level(m: &Manufactured, dim: usize, n: usize) -> Result<[f64; 3]> {
    let grid = if dim == 1 {
        Grid::new_1d(1.0, n)?
    } else {
        Grid::new_2d(1.0, 1.0, n, n)?
    };
    let h = grid.min_spacing();
    let steps = (FINAL_TIME / (DT_PER_H2 * h * h)).ceil() as usize;
    let dt = FINAL_TIME / steps as f64;
    let at = |f: &ModeField, t: f64| ScalarField::from_fn(grid, |x, y| f.value(x, y, t));
    let mut state = SimState::initial(at(&m.u, 0.0), at(&m.v, 0.0), at(&m.w, 0.0))?;
    state.dt = dt;
    for _ in 0..steps {
        state = step_forced(&state, &m.model, FaceRule::Mean, Some(m), NegativityPolicy::Reject)?.state;
        state.dt = dt;
    }
    let t = state.t;
    let err = |num: &ScalarField, f: &ModeField| {
        let exact = at(f, t);
        let s: f64 = num
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (s * grid.cell_volume()).sqrt()
    };
    Ok([err(&state.u, &m.u), err(&state.v, &m.v), err(&state.w, &m.w)])
}

/// Runs the refinement study for one case.
pub fn mms_convergence(case: MmsCase) -> Result<MmsReport> {
    let (m, levels) = problem(case)?;
    let dim = m.model.params.dim;
    let mut errors: [Vec<f64>; 3] = Default::default();
    for &n in &levels {
        let e = solve_level(&m, dim, n)?;
        for (acc, v) in errors.iter_mut().zip(e) {
            acc.push(v);
        }
    }
    let mut orders = [f64::NAN; 3];
    for (order, errs) in orders.iter_mut().zip(&errors) {
        *order = errs
            .windows(2)
            .map(|w| (w[0] / w[1]).log2())
            .fold(f64::INFINITY, f64::min);
    }
    let passed = if case == MmsCase::Constant {
        errors.iter().flatten().all(|&e| e <= 1e-12)
    } else {
        orders.iter().all(|&o| o >= ORDER_THRESHOLD)
    };
    Ok(MmsReport {
        case,
        resolutions: levels,
        errors,
        orders,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_names_round_trip() {
        for c in [MmsCase::Cosine1d, MmsCase::Cosine2d, MmsCase::Constant] {
            assert_eq!(c.name().parse::<MmsCase>().unwrap(), c);
        }
        assert!("cubic".parse::<MmsCase>().is_err());
    }

    #[test]
    fn manufactured_fields_have_zero_flux() {
        let f = ModeField::new(1.0, 0.5, 2.0, 1.0, 1.0, 2.0, 0.3);
        for s in [0.0, 0.37, 0.81] {
            assert!(f.grad(0.0, s, 0.2).0.abs() < 1e-14);
            assert!(f.grad(1.0, s, 0.2).0.abs() < 1e-14);
            assert!(f.grad(s, 0.0, 0.2).1.abs() < 1e-14);
            assert!(f.grad(s, 2.0, 0.2).1.abs() < 1e-14);
        }
    }

    #[test]
    fn constant_solution_is_reproduced_exactly() {
        let r = mms_convergence(MmsCase::Constant).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn one_dimensional_study_is_second_order() {
        let r = mms_convergence(MmsCase::Cosine1d).unwrap();
        assert!(r.passed, "{}", r.to_kv());
        // Halving h roughly quarters the error.
        for errs in &r.errors {
            let q = errs[1] / errs[2];
            assert!(q > 3.2 && q < 4.8, "ratio {q}");
        }
    }
}
