//! Acceptance suite. Every test prints one `PASS`/`FAIL` line per criterion
//! directly to stderr (bypassing the harness capture), then asserts.

use std::io::Write;
use std::time::Instant;

use attrep::commands::cmd_sweep;
use attrep::config::parse_config;
use attrep::criteria::{
    classify_regime, compute_a, compute_p_bar, compute_xi_const, epsilon_scan, gamma0_threshold,
    BracketInputs, Regime,
};
use attrep::grid::{Grid, ScalarField};
use attrep::model::{Model, ModelParams};
use attrep::oracles::{
    estimate_c_rho, evaluate_sample, mms_convergence, power_sum_sweep, young_sweep, MmsCase,
    RegularityOptions,
};
use attrep::timestep::{
    adapt_dt, gronwall_envelope, plateau_reached, run_simulation, step, SimState, Stepping,
    VerdictKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, title: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[criterion {id:2}] {status} {title}: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn params(n: usize, k: f64, l: f64) -> ModelParams {
    ModelParams {
        chi: 1.0,
        xi: 1.0,
        beta: 1.0,
        delta: 1.0,
        alpha: 1.0,
        gamma0: 1.0,
        gamma1: 1.0,
        k,
        l,
        dim: n,
    }
}

#[test]
fn criterion_01_analytic_constants() {
    let start = Instant::now();
    let checks = [
        ("p_bar(2,0.4,0.5,1,1)", compute_p_bar(2, 0.4, 0.5, 1.0, 1.0).unwrap(), 2.0),
        ("p_bar(3,0.2,0.3,0.1,0.05)", compute_p_bar(3, 0.2, 0.3, 0.1, 0.05).unwrap(), 6.7),
        ("p_bar(2,1,1,2,2)", compute_p_bar(2, 1.0, 1.0, 2.0, 2.0).unwrap(), 2.0),
        ("A(2,1,1)", compute_a(2.0, 1.0, 1.0).unwrap(), 3.0 / (7.0 * 2f64.powf(4.0 / 3.0))),
        (
            "A(6.7,0.3,0.05)",
            compute_a(6.7, 0.3, 0.05).unwrap(),
            2f64.powf(-8.5 / 7.0) * 7.0 / 7.65,
        ),
        ("Xi(2,1,1,1)", compute_xi_const(2.0, 1.0, 1.0, 1.0).unwrap(), 2f64.powf(-8.0 / 3.0) / 3.0),
        ("threshold(0.17,0.1,2)", gamma0_threshold(0.17, 0.1, 2.0).unwrap(), 0.2 / 0.17),
    ];
    let worst = checks
        .iter()
        .map(|(_, got, want)| rel(*got, *want))
        .fold(0.0, f64::max);
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, got, want)| rel(*got, *want) > 1e-12)
        .map(|(name, _, _)| *name)
        .collect();
    let ok = failed.is_empty();
    report(
        1,
        "analytic-constant regression",
        ok,
        &format!(
            "{} values, worst relative error {worst:.1e}, failures {failed:?}, {:.2?}",
            checks.len(),
            start.elapsed()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_02_inequality_oracles() {
    let start = Instant::now();
    let n = 200_000;
    let power = power_sum_sweep(n, 2024);
    let young = young_sweep(n, 2025);
    let ok = power.violations == 0 && young.violations == 0;
    report(
        2,
        "inequality oracle suite",
        ok,
        &format!(
            "power-sum {}/{} violations, Young splitting {}/{} violations, {:.2?}",
            power.violations,
            power.samples,
            young.violations,
            young.samples,
            start.elapsed()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_03_regime_table() {
    // New-theorem witness: n = 2, k = 1.2, l = 1.5, beta = delta = 1.
    let c_witness = 0.05;
    let witness = ModelParams {
        gamma0: 0.5,
        gamma1: 1.0,
        ..params(2, 1.2, 1.5)
    };
    let table: Vec<(ModelParams, f64, Regime)> = vec![
        (params(2, 0.5, 0.5), 1.0, Regime::BoundedI),
        (params(2, 0.3, 0.2), 1.0, Regime::BoundedI),
        (params(2, 0.6, 0.4), 1.0, Regime::BoundedII),
        (params(2, 0.6, 0.7), 1.0, Regime::BoundedIII),
        (params(2, 0.74, 0.51), 1.0, Regime::BoundedIII),
        (params(2, 0.9, 0.95), 1.0, Regime::BoundedTwoOverN),
        (params(2, 0.75, 0.3), 1.0, Regime::BoundedTwoOverN),
        (witness, c_witness, Regime::BoundedNewTheorem),
        (params(2, 1.5, 1.2), c_witness, Regime::Unknown),
        (params(2, 1.2, 1.5), 1.0, Regime::Unknown),
        (params(3, 0.4, 0.3), 1.0, Regime::BoundedII),
        (params(3, 0.7, 0.2), 1.0, Regime::Unknown),
    ];
    let mut mismatches = Vec::new();
    for (p, c, want) in &table {
        let got = classify_regime(p, *c).unwrap().regime;
        if got != *want {
            mismatches.push(format!("(n={}, k={}, l={}) -> {got}, expected {want}", p.dim, p.k, p.l));
        }
    }
    let ok = table.len() == 12 && mismatches.is_empty();
    report(
        3,
        "regime classifier table",
        ok,
        &format!("{} points, mismatches {mismatches:?}", table.len()),
    );
    assert!(ok);
}

#[test]
fn criterion_04_theorem_condition_implication() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sets = 40;
    let gammas_per_set = 50;
    let mut failures = Vec::new();
    let mut checked = 0;
    for _ in 0..sets {
        let n = rng.random_range(1..=3usize);
        let l = rng.random_range(0.2..3.0);
        let k = l * rng.random_range(0.05..0.95);
        let beta = rng.random_range(0.1..3.0);
        let delta = rng.random_range(0.1..3.0);
        let gamma1 = 10f64.powf(rng.random_range(-1.0..1.0));
        let p_bar = compute_p_bar(n, k, l, beta, delta).unwrap();
        let a = compute_a(p_bar, l, delta).unwrap();
        let c = a * rng.random_range(0.05..0.95);
        let threshold = gamma0_threshold(a, c, gamma1).unwrap();
        let xi = compute_xi_const(p_bar, l, c, gamma1).unwrap();
        assert!(k < l && c < a);
        for j in 1..=gammas_per_set {
            let gamma0 = threshold + (gamma1 - threshold) * j as f64 / gammas_per_set as f64;
            let inputs = BracketInputs {
                p_bar,
                l,
                delta,
                xi_const: xi,
                c_reg: c,
                gamma1,
                gamma0,
                epsilon: 1e-6,
            };
            checked += 1;
            if epsilon_scan(&inputs).unwrap().is_none() {
                failures.push(format!("n={n} k={k} l={l} gamma0={gamma0}"));
            }
        }
    }
    let ok = failures.is_empty();
    report(
        4,
        "theorem-condition implication",
        ok,
        &format!(
            "{sets} parameter sets, {checked} gamma0 values, {} without a passing epsilon, {:.2?}",
            failures.len(),
            start.elapsed()
        ),
    );
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_05_mms_convergence() {
    let start = Instant::now();
    let one = mms_convergence(MmsCase::Cosine1d).unwrap();
    let two = mms_convergence(MmsCase::Cosine2d).unwrap();
    let ok = one.passed && two.passed;
    report(
        5,
        "manufactured-solution convergence",
        ok,
        &format!(
            "1D {:?} orders (u,v,w) = {:.3?}; 2D {:?} orders = {:.3?}; threshold 1.7, {:.2?}",
            one.resolutions,
            one.orders,
            two.resolutions,
            two.orders,
            start.elapsed()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_06_conservation_and_equilibrium() {
    let start = Instant::now();
    let stepping = Stepping::default();

    let model = Model::new(params(2, 0.4, 0.4)).unwrap();
    let grid = Grid::new_2d(1.0, 1.0, 24, 24).unwrap();
    let u0 = ScalarField::from_fn(grid, |x, y| {
        0.2 + 3.0 * (-((x - 0.4).powi(2) + (y - 0.6).powi(2)) / 0.02).exp()
    });
    let zero = ScalarField::zeros(grid);
    let mut state = SimState::initial(u0, zero.clone(), zero).unwrap();
    let m0 = state.u.integral();
    let mut drift = 0.0f64;
    for _ in 0..10_000 {
        state.dt = adapt_dt(&state, &model, &stepping);
        state = step(&state, &model, stepping.face).unwrap().state;
        drift = drift.max(rel(state.u.integral(), m0));
    }

    let (c, v, w) = model.homogeneous_equilibrium(1.3).unwrap();
    let eq = SimState::initial(
        ScalarField::constant(grid, c),
        ScalarField::constant(grid, v),
        ScalarField::constant(grid, w),
    )
    .unwrap();
    let mut s = eq.clone();
    for _ in 0..1_000 {
        s.dt = adapt_dt(&s, &model, &stepping);
        s = step(&s, &model, stepping.face).unwrap().state;
    }
    let eq_dev = [(&s.u, c), (&s.v, v), (&s.w, w)]
        .iter()
        .flat_map(|(f, target)| f.values().iter().map(move |x| rel(*x, *target)))
        .fold(0.0, f64::max);

    let ok = drift <= 1e-8 && eq_dev <= 1e-9;
    report(
        6,
        "conservation and equilibrium",
        ok,
        &format!(
            "mass drift {drift:.2e} over 10^4 steps (limit 1e-8), equilibrium deviation {eq_dev:.2e} after 10^3 steps (limit 1e-9), {:.2?}",
            start.elapsed()
        ),
    );
    assert!(ok);
}

/// Regime (i) evidence run shared by criteria 7 and 8: 64^2 cells on
/// `[0, 2]^2`, unit coefficients, `k = l = 0.4`, Gaussian bump of mass 1.
const EVIDENCE_CONFIG: &str = "\
seed = 7
model.chi = 1
model.xi = 1
model.beta = 1
model.delta = 1
model.alpha = 1
model.gamma0 = 1
model.gamma1 = 1
model.k = 0.4
model.l = 0.4
grid.dim = 2
grid.lx = 2
grid.nx = 64
init.kind = gaussian
init.width = 0.1
init.mass = 1
time.horizon = 20
monitor.sample_stride = 50
criteria.c_reg = 0.1
";

#[test]
fn criteria_07_08_boundedness_evidence_and_gronwall() {
    let start = Instant::now();
    let cfg = parse_config(EVIDENCE_CONFIG).unwrap();
    let model = cfg.model().unwrap();
    let out = run_simulation(&model, cfg.initial_state().unwrap(), &cfg.run_options()).unwrap();
    let elapsed = start.elapsed();
    let plateau = plateau_reached(&out.series, 0.05);
    let ok7 = out.verdict.kind == VerdictKind::BoundedRun && plateau && out.verdict.t_end >= 20.0;
    report(
        7,
        "boundedness evidence run",
        ok7,
        &format!(
            "verdict {} at t = {}, p = {}, sup lp = {:.4}, sup linf = {:.4}, mass drift {:.1e}, {} steps, {elapsed:.2?}",
            out.verdict.kind,
            out.verdict.t_end,
            out.monitor_p,
            out.verdict.sup_lp,
            out.verdict.sup_linf,
            out.series.max_mass_drift(),
            out.steps
        ),
    );

    let regime = classify_regime(&cfg.model, cfg.c_reg).unwrap();
    let p_bar = regime.p_bar;
    let gron = gronwall_envelope(&out.series, 0.1, 10.0);
    let ok8 = regime.bracket_value <= 0.0 && out.monitor_p == p_bar && gron.within;
    report(
        8,
        "Gronwall monitor",
        ok8,
        &format!(
            "p = p_bar = {p_bar}, bracket {:.4} (C = {}, eps = {:.0e}), fitted c = {:.4}, max envelope ratio {:.4} (limit 10)",
            regime.bracket_value, cfg.c_reg, regime.epsilon, gron.c_fit, gron.max_ratio
        ),
    );
    assert!(ok7 && ok8);
}

#[test]
fn criterion_09_regularity_estimator() {
    let start = Instant::now();
    // Uniform source h = c, psi0 = 0, q = 2, rho = 1: psi = c (1 - e^{-t}).
    let grid = Grid::new_2d(1.0, 2.0, 8, 8).unwrap();
    let area = grid.measure();
    let (c, t) = (0.7, 1.0);
    let opts = RegularityOptions {
        horizon: t,
        ..RegularityOptions::new(1.0, 2.0)
    };
    let sample = evaluate_sample(&ScalarField::zeros(grid), &ScalarField::constant(grid, c), &opts).unwrap();
    let lhs = c * c * area * (1.25 * t.exp_m1() - 1.5 * t + 1.25 * (1.0 - (-t).exp()));
    let rhs = area * c * c * t.exp_m1();
    let ratio = (lhs / (2.0 * rhs)).sqrt();
    let errs = [
        rel(sample.lhs, lhs),
        rel(sample.rhs_bracket(), rhs),
        rel(sample.ratio, ratio),
    ];
    let closed_ok = errs.iter().all(|e| *e <= 1e-6);

    let est_opts = RegularityOptions {
        samples: 12,
        seed: 99,
        ..RegularityOptions::new(1.0, 2.0)
    };
    let est_grid = Grid::new_2d(1.0, 1.0, 16, 16).unwrap();
    let first = estimate_c_rho(est_grid, &est_opts).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| estimate_c_rho(est_grid, &est_opts).unwrap());
    let repro = first == serial && first.c_lower > 0.0;

    let ok = closed_ok && repro;
    report(
        9,
        "regularity estimator",
        ok,
        &format!(
            "closed-form relative errors lhs {:.1e}, rhs {:.1e}, ratio {:.1e}; c_lower = {} (seed 99) reproduced: {repro}, {:.2?}",
            errs[0],
            errs[1],
            errs[2],
            first.c_lower,
            start.elapsed()
        ),
    );
    assert!(ok);
}

const SWEEP_CONFIG: &str = "\
model.chi = 1
model.xi = 1
model.beta = 1
model.delta = 1
model.alpha = 1
model.gamma0 = 1
model.gamma1 = 1
model.k = 0.4
model.l = 0.4
grid.dim = 2
grid.lx = 1
grid.nx = 16
init.kind = gaussian
init.width = 0.15
init.mass = 1
time.horizon = 1
sweep.axis1 = k 0.2 0.6 3
sweep.axis2 = l 0.2 0.6 3
";

#[test]
fn criterion_10_sweep_determinism() {
    let start = Instant::now();
    let mut outputs = Vec::new();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (workers, dir) in [1usize, 4].into_iter().zip(&dirs) {
        let mut cfg = parse_config(SWEEP_CONFIG).unwrap();
        cfg.workers = workers;
        cfg.output_dir = dir.path().to_path_buf();
        let code = cmd_sweep(&cfg, &mut std::io::sink()).unwrap();
        assert_eq!(code, 0);
        outputs.push(std::fs::read(dir.path().join("phase.csv")).unwrap());
    }
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    let complete = rows.len() == 9 && rows.iter().all(|r| r.ends_with(','));
    let ok = outputs[0] == outputs[1] && complete;
    report(
        10,
        "sweep determinism",
        ok,
        &format!(
            "3x3 (k, l) sweep, workers 1 vs 4: {} bytes each, identical: {}, {} error-free rows, {:.2?}",
            outputs[0].len(),
            outputs[0] == outputs[1],
            rows.iter().filter(|r| r.ends_with(',')).count(),
            start.elapsed()
        ),
    );
    assert!(ok);
}
