use super::{Grid, ScalarField};
use crate::error::Result;

/// How the density is evaluated on a cell face in the taxis flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaceRule {
    /// Arithmetic mean of the two neighbouring cells.
    #[default]
    Mean,
    /// Value from the cell the drift comes from.
    Upwind,
}

/// Visits every interior face once as `(a, b, h)` with `b` the neighbour of
/// `a` in the positive direction of the axis and `h` the spacing.
#[inline]
fn for_each_face(grid: &Grid, mut visit: impl FnMut(usize, usize, f64)) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let hx = grid.spacing(0);
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx - 1 {
            visit(row + i, row + i + 1, hx);
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
}

/// Second-order Laplacian with zero normal derivative. Ghost cells mirror the
/// adjacent interior value, so boundary faces carry no flux.
pub fn laplacian_neumann(field: &ScalarField) -> ScalarField {
    let grid = *field.grid();
    let u = field.values();
    let mut out = vec![0.0; grid.len()];
    for_each_face(&grid, |a, b, h| {
        let flux = (u[b] - u[a]) / (h * h);
        out[a] += flux;
        out[b] -= flux;
    });
    ScalarField::from_values(grid, out).expect("same grid")
}

/// `coeff * div(u grad(phi))` in conservative flux form with zero flux through
/// the boundary.
pub fn taxis_divergence(
    u: &ScalarField,
    phi: &ScalarField,
    coeff: f64,
    rule: FaceRule,
) -> Result<ScalarField> {
    u.ensure_same_grid(phi)?;
    let grid = *u.grid();
    let (uv, pv) = (u.values(), phi.values());
    let mut out = vec![0.0; grid.len()];
    for_each_face(&grid, |a, b, h| {
        let slope = (pv[b] - pv[a]) / h;
        let face = match rule {
            FaceRule::Mean => 0.5 * (uv[a] + uv[b]),
            FaceRule::Upwind => {
                // Drift velocity is -coeff * slope.
                if -coeff * slope >= 0.0 {
                    uv[a]
                } else {
                    uv[b]
                }
            }
        };
        let flux = coeff * face * slope / h;
        out[a] += flux;
        out[b] -= flux;
    });
    ScalarField::from_values(grid, out)
}
