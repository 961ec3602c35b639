//! Empirical lower bounds for the maximal-regularity constant `C_rho` of
//!
//! ```text
//! psi_t = lap psi - rho psi + h,   zero normal derivative,
//! int_0^t e^s int (|psi|^q + |psi_t + psi/q|^q + |lap psi|^q) ds
//!     <= 2^{q-1} C_rho^q [ N(psi_0)^q + int_0^t e^s int |h|^q ds ].
//! ```
//!
//! The interpolation norm `N(psi_0)` is replaced by the proxy
//! `||psi_0||_q + ||lap psi_0||_q`, which dominates it for smooth data and so
//! only loosens the bound. Every sample gives a ratio
//! `(LHS / (2^{q-1} RHS))^{1/q}`; their supremum is a lower bound for
//! `C_rho` on the discrete rectangle, never an upper one.
//!
//! Time integration is exact for the semi-discrete system: cosine modes at
//! cell centres diagonalise the Neumann stencil, so each mode evolves as
//! `a(t) = a0 e^{-kt} + b (1 - e^{-kt}) / k` with `k = rho - lambda`. The
//! outer time integral uses composite Simpson.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::grid::{laplacian_neumann, Grid, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityOptions {
    pub rho: f64,
    pub q: f64,
    pub horizon: f64,
    pub samples: usize,
    pub seed: u64,
    /// Simpson intervals on `[0, horizon]`; rounded up to even.
    pub time_steps: usize,
    /// Cosine modes per axis in the random data.
    pub modes: usize,
}

impl RegularityOptions {
    pub fn new(rho: f64, q: f64) -> Self {
        Self {
            rho,
            q,
            horizon: 1.0,
            samples: 16,
            seed: 0,
            time_steps: 200,
            modes: 8,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(domain(format!("rho = {} must be positive", self.rho)));
        }
        let lower = 1f64.max(1.0 / self.rho);
        if !(self.q > lower) {
            return Err(domain(format!("q = {} must exceed max(1, 1/rho) = {lower}", self.q)));
        }
        if !(self.horizon > 0.0) {
            return Err(domain(format!("horizon {} must be positive", self.horizon)));
        }
        if self.samples == 0 {
            return Err(domain("at least one sample is required"));
        }
        if self.time_steps == 0 || self.modes == 0 {
            return Err(domain("time_steps and modes must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityEstimate {
    pub rho: f64,
    pub q: f64,
    pub horizon: f64,
    pub samples: usize,
    pub seed: u64,
    /// Running supremum of the per-sample ratios.
    pub c_lower: f64,
    pub worst_source_id: usize,
    pub ratios: Vec<f64>,
}

pub const ESTIMATE_CSV_HEADER: &str = "rho,q,horizon,samples,seed,c_lower,worst_source_id";

impl RegularityEstimate {
    pub fn to_kv(&self) -> String {
        format!(
            "rho = {}\nq = {}\nhorizon = {}\nsamples = {}\nseed = {}\nc_lower = {}\nworst_source_id = {}\n",
            self.rho, self.q, self.horizon, self.samples, self.seed, self.c_lower, self.worst_source_id
        )
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.rho, self.q, self.horizon, self.samples, self.seed, self.c_lower, self.worst_source_id
        )
    }
}

/// Both sides of the regularity estimate for one `(psi_0, h)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleEvaluation {
    pub lhs: f64,
    /// `N(psi_0)^q` with the proxy norm.
    pub initial_term: f64,
    /// `int_0^T e^s int |h|^q ds`.
    pub source_term: f64,
    pub ratio: f64,
}

impl SampleEvaluation {
    pub fn rhs_bracket(&self) -> f64 {
        self.initial_term + self.source_term
    }
}

/// Cosine transform along one axis: `basis[m][i] = cos(m pi (i + 1/2) / n)`.
struct AxisBasis {
    n: usize,
    basis: Vec<f64>,
    norms: Vec<f64>,
    eigen: Vec<f64>,
}

impl AxisBasis {
    fn new(n: usize, h: f64) -> Self {
        let mut basis = Vec::with_capacity(n * n);
        for m in 0..n {
            for i in 0..n {
                basis.push((std::f64::consts::PI * m as f64 * (i as f64 + 0.5) / n as f64).cos());
            }
        }
        let norms = (0..n).map(|m| if m == 0 { n as f64 } else { n as f64 / 2.0 }).collect();
        let eigen = (0..n)
            .map(|m| {
                let s = (std::f64::consts::PI * m as f64 / (2.0 * n as f64)).sin();
                -4.0 * s * s / (h * h)
            })
            .collect();
        Self { n, basis, norms, eigen }
    }

    fn trivial() -> Self {
        Self {
            n: 1,
            basis: vec![1.0],
            norms: vec![1.0],
            eigen: vec![0.0],
        }
    }
}

struct ModalBasis {
    x: AxisBasis,
    y: AxisBasis,
}

impl ModalBasis {
    fn new(grid: &Grid) -> Self {
        let x = AxisBasis::new(grid.nx(), grid.spacing(0));
        let y = if grid.dim() == 2 {
            AxisBasis::new(grid.ny(), grid.spacing(1))
        } else {
            AxisBasis::trivial()
        };
        Self { x, y }
    }

    fn eigenvalue(&self, mx: usize, my: usize) -> f64 {
        self.x.eigen[mx] + self.y.eigen[my]
    }

    /// Nodal values (row-major) to modal coefficients (row-major in `(my, mx)`).
    fn forward(&self, values: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.x.n, self.y.n);
        let mut tmp = vec![0.0; nx * ny];
        for j in 0..ny {
            let row = &values[j * nx..(j + 1) * nx];
            for m in 0..nx {
                let b = &self.x.basis[m * nx..(m + 1) * nx];
                tmp[j * nx + m] = row.iter().zip(b).map(|(a, c)| a * c).sum::<f64>() / self.x.norms[m];
            }
        }
        let mut out = vec![0.0; nx * ny];
        for my in 0..ny {
            let b = &self.y.basis[my * ny..(my + 1) * ny];
            for mx in 0..nx {
                let s: f64 = (0..ny).map(|j| tmp[j * nx + mx] * b[j]).sum();
                out[my * nx + mx] = s / self.y.norms[my];
            }
        }
        out
    }

    fn inverse(&self, coeffs: &[f64], out: &mut [f64], tmp: &mut [f64]) {
        let (nx, ny) = (self.x.n, self.y.n);
        for j in 0..ny {
            for mx in 0..nx {
                tmp[j * nx + mx] = (0..ny)
                    .map(|my| coeffs[my * nx + mx] * self.y.basis[my * ny + j])
                    .sum();
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                out[j * nx + i] = (0..nx)
                    .map(|mx| tmp[j * nx + mx] * self.x.basis[mx * nx + i])
                    .sum();
            }
        }
    }
}

fn lq_integral(values: &[f64], q: f64, vol: f64) -> f64 {
    values.iter().map(|v| v.abs().powf(q)).sum::<f64>() * vol
}

/// Evaluates both sides of the regularity estimate for one data pair.
pub fn evaluate_sample(
    psi0: &ScalarField,
    source: &ScalarField,
    opts: &RegularityOptions,
) -> Result<SampleEvaluation> {
    let samples_ok = RegularityOptions { samples: 1, ..*opts };
    samples_ok.validate()?;
    psi0.ensure_same_grid(source)?;
    let grid = *psi0.grid();
    let basis = ModalBasis::new(&grid);
    evaluate_with_basis(&basis, psi0, source, opts)
}

fn evaluate_with_basis(
    basis: &ModalBasis,
    psi0: &ScalarField,
    source: &ScalarField,
    opts: &RegularityOptions,
) -> Result<SampleEvaluation> {
    let grid = *psi0.grid();
    let (q, rho, horizon) = (opts.q, opts.rho, opts.horizon);
    let vol = grid.cell_volume();
    let n = grid.len();
    let a0 = basis.forward(psi0.values());
    let b = basis.forward(source.values());
    let (nx, ny) = (grid.nx(), grid.ny());
    let rates: Vec<f64> = (0..ny)
        .flat_map(|my| (0..nx).map(move |mx| (mx, my)))
        .map(|(mx, my)| rho - basis.eigenvalue(mx, my))
        .collect();
    let eigen: Vec<f64> = rates.iter().map(|k| rho - k).collect();

    let steps = opts.time_steps + opts.time_steps % 2;
    let mut psi_c = vec![0.0; n];
    let mut mix_c = vec![0.0; n];
    let mut lap_c = vec![0.0; n];
    let mut nodal = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut integrand = |t: f64| -> f64 {
        for m in 0..n {
            let k = rates[m];
            let decay = (-k * t).exp();
            let psi = a0[m] * decay + b[m] * (1.0 - decay) / k;
            let psi_t = -k * psi + b[m];
            psi_c[m] = psi;
            mix_c[m] = psi_t + psi / q;
            lap_c[m] = eigen[m] * psi;
        }
        let mut total = 0.0;
        for coeffs in [&psi_c, &mix_c, &lap_c] {
            basis.inverse(coeffs, &mut nodal, &mut tmp);
            total += lq_integral(&nodal, q, vol);
        }
        t.exp() * total
    };
    // Simpson in `s` with `t = T s^3`, which clusters nodes near t = 0 where
    // the high modes decay on a scale of h^2.
    let ds = 1.0 / steps as f64;
    let mut weighted = |s: f64| 3.0 * horizon * s * s * integrand(horizon * s * s * s);
    let mut lhs = weighted(0.0) + weighted(1.0);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        lhs += w * weighted(i as f64 * ds);
    }
    lhs *= ds / 3.0;

    let lap0 = laplacian_neumann(psi0);
    let proxy = lq_integral(psi0.values(), q, vol).powf(1.0 / q)
        + lq_integral(lap0.values(), q, vol).powf(1.0 / q);
    let initial_term = proxy.powf(q);
    let source_term = horizon.exp_m1() * lq_integral(source.values(), q, vol);
    let bracket = initial_term + source_term;
    let ratio = if bracket > 0.0 {
        (lhs / ((q - 1.0).exp2() * bracket)).powf(1.0 / q)
    } else {
        0.0
    };
    Ok(SampleEvaluation {
        lhs,
        initial_term,
        source_term,
        ratio,
    })
}

/// Random cosine series over the lowest `modes` modes per axis with
/// coefficients uniform in `[-1, 1]`.
pub fn random_cosine_field(grid: Grid, modes: usize, rng: &mut impl Rng) -> ScalarField {
    let mx_max = modes.min(grid.nx());
    let my_max = if grid.dim() == 2 { modes.min(grid.ny()) } else { 1 };
    let coeffs: Vec<(usize, usize, f64)> = (0..my_max)
        .flat_map(|my| (0..mx_max).map(move |mx| (mx, my)))
        .map(|(mx, my)| (mx, my, rng.random_range(-1.0..=1.0)))
        .collect();
    let (lx, ly) = (grid.extent()[0], if grid.dim() == 2 { grid.extent()[1] } else { 1.0 });
    ScalarField::from_fn(grid, |x, y| {
        coeffs
            .iter()
            .map(|&(mx, my, c)| {
                let cx = (std::f64::consts::PI * mx as f64 * x / lx).cos();
                let cy = (std::f64::consts::PI * my as f64 * y / ly).cos();
                c * cx * cy
            })
            .sum()
    })
}

/// Generates the data pair of sample `id`. Each sample owns its own ChaCha
/// stream, so results do not depend on how many samples are drawn or on
/// evaluation order.
pub fn sample_data(grid: Grid, opts: &RegularityOptions, id: usize) -> (ScalarField, ScalarField) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(id as u64);
    let psi0 = random_cosine_field(grid, opts.modes, &mut rng);
    let source = random_cosine_field(grid, opts.modes, &mut rng);
    (psi0, source)
}

/// Supremum of the sample ratios over `opts.samples` random data pairs.
pub fn estimate_c_rho(grid: Grid, opts: &RegularityOptions) -> Result<RegularityEstimate> {
    opts.validate()?;
    let basis = ModalBasis::new(&grid);
    let ratios = (0..opts.samples)
        .into_par_iter()
        .map(|id| {
            let (psi0, source) = sample_data(grid, opts, id);
            evaluate_with_basis(&basis, &psi0, &source, opts).map(|e| e.ratio)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (worst_source_id, c_lower) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |best, (i, r)| if r > best.1 { (i, r) } else { best });
    Ok(RegularityEstimate {
        rho: opts.rho,
        q: opts.q,
        horizon: opts.horizon,
        samples: opts.samples,
        seed: opts.seed,
        c_lower,
        worst_source_id,
        ratios,
    })
}
