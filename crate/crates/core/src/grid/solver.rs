//! Backward-Euler diffusion step `(1 + dt*decay) x - dt * lap(x) = rhs`.

use super::{Grid, ScalarField};
use crate::error::{domain, Error, Result};

/// Relative residual at which the iterative solve stops.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

fn apply_into(grid: &Grid, x: &[f64], dt: f64, decay: f64, out: &mut [f64]) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let diag = 1.0 + dt * decay;
    let rx = dt / (grid.spacing(0) * grid.spacing(0));
    let ry = if grid.dim() == 2 {
        dt / (grid.spacing(1) * grid.spacing(1))
    } else {
        0.0
    };
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            let xc = x[c];
            let mut acc = diag * xc;
            if i > 0 {
                acc += rx * (xc - x[c - 1]);
            }
            if i + 1 < nx {
                acc += rx * (xc - x[c + 1]);
            }
            if j > 0 {
                acc += ry * (xc - x[c - nx]);
            }
            if j + 1 < ny {
                acc += ry * (xc - x[c + nx]);
            }
            out[c] = acc;
        }
    }
}

/// The implicit-diffusion operator in matrix-free form.
pub fn apply_diffusion_operator(x: &ScalarField, dt: f64, decay: f64) -> ScalarField {
    let grid = *x.grid();
    let mut out = vec![0.0; grid.len()];
    apply_into(&grid, x.values(), dt, decay, &mut out);
    ScalarField::from_values(grid, out).expect("same grid")
}

/// Solves one backward-Euler diffusion step with Neumann boundaries.
///
/// One-dimensional grids use a direct tridiagonal solve; two-dimensional
/// grids use unpreconditioned conjugate gradients started from
/// `rhs / (1 + dt*decay)`. The initial residual then has zero mean and the
/// operator preserves zero-mean vectors, so for `decay = 0` every iterate has
/// exactly the mass of `rhs` up to round-off.
pub fn solve_implicit_diffusion(rhs: &ScalarField, dt: f64, decay: f64) -> Result<ScalarField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(domain(format!("time step {dt} must be positive")));
    }
    if !(decay >= 0.0 && decay.is_finite()) {
        return Err(domain(format!("decay {decay} must be nonnegative")));
    }
    let grid = *rhs.grid();
    let values = if grid.dim() == 1 {
        thomas(&grid, rhs.values(), dt, decay)
    } else {
        conjugate_gradient(&grid, rhs.values(), dt, decay)?
    };
    ScalarField::from_values(grid, values)
}

fn thomas(grid: &Grid, rhs: &[f64], dt: f64, decay: f64) -> Vec<f64> {
    let n = grid.nx();
    let r = dt / (grid.spacing(0) * grid.spacing(0));
    let base = 1.0 + dt * decay;
    let diag = |i: usize| {
        if i == 0 || i == n - 1 {
            base + r
        } else {
            base + 2.0 * r
        }
    };
    // Off-diagonals are all -r.
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    c_prime[0] = -r / diag(0);
    d_prime[0] = rhs[0] / diag(0);
    for i in 1..n {
        let m = diag(i) + r * c_prime[i - 1];
        c_prime[i] = -r / m;
        d_prime[i] = (rhs[i] + r * d_prime[i - 1]) / m;
    }
    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    x
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(grid: &Grid, rhs: &[f64], dt: f64, decay: f64) -> Result<Vec<f64>> {
    let n = rhs.len();
    let b_norm = dot(rhs, rhs).sqrt();
    let scale = 1.0 / (1.0 + dt * decay);
    let mut x: Vec<f64> = rhs.iter().map(|v| v * scale).collect();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut ap = vec![0.0; n];
    apply_into(grid, &x, dt, decay, &mut ap);
    let mut r: Vec<f64> = rhs.iter().zip(&ap).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = SOLVER_TOLERANCE * b_norm;
    let max_iter = 10 * n;
    let mut iter = 0;
    while rr.sqrt() > target {
        if iter == max_iter {
            return Err(Error::NoConvergence {
                iterations: iter,
                residual: rr.sqrt() / b_norm,
            });
        }
        apply_into(grid, &p, dt, decay, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        rr = rr_new;
        iter += 1;
    }
    Ok(x)
}
