//! Pointwise forms of the elementary inequalities used in the a priori
//! estimates, with seeded random sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};

/// Units in the last place tolerated on the larger side of an inequality.
const ULPS: f64 = 4.0;

fn holds(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs + ULPS * f64::EPSILON * scale.abs()
}

/// `(A + B)^p <= 2^{p-1} (A^p + B^p)` for `A, B >= 0`, `p >= 1`.
pub fn check_power_sum_inequality(a: f64, b: f64, p: f64) -> Result<bool> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(domain(format!("A = {a}, B = {b} must be nonnegative")));
    }
    if !(p >= 1.0) {
        return Err(domain(format!("p = {p} must be >= 1")));
    }
    let lhs = (a + b).powf(p);
    let rhs = (p - 1.0).exp2() * (a.powf(p) + b.powf(p));
    Ok(holds(lhs, rhs, rhs))
}

/// Point values entering the two Young splittings of the `u^p |w_t|` and
/// `u^p w` products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungPoint {
    pub u: f64,
    pub w: f64,
    pub wt: f64,
    pub p: f64,
    pub l: f64,
    pub xi: f64,
    pub delta: f64,
    /// Young weight, any positive value.
    pub weight: f64,
}

/// Checks, with `q = (p+l)/l`,
///
/// ```text
/// (p-1) xi u^p |wt| <= (p-1) xi W |wt + w/q|^q
///     + xi p (p-1)/(p+l) (W q)^{-l/p} (1 + l/(p+l)) u^{p+l}
///     + l xi W (p-1)/(p+l) w^q
/// (p-1) xi delta u^p w <= (p-1) xi delta W w^q
///     + xi p delta (p-1)/(p+l) (W q)^{-l/p} u^{p+l}
/// ```
pub fn check_young_splitting(pt: &YoungPoint) -> Result<bool> {
    let YoungPoint {
        u,
        w,
        wt,
        p,
        l,
        xi,
        delta,
        weight,
    } = *pt;
    if !(u >= 0.0) || !(w >= 0.0) {
        return Err(domain(format!("u = {u} and w = {w} must be nonnegative")));
    }
    if !(p > 1.0) {
        return Err(domain(format!("p = {p} must exceed 1")));
    }
    for (name, v) in [("l", l), ("xi", xi), ("delta", delta), ("weight", weight)] {
        if !(v > 0.0) {
            return Err(domain(format!("{name} = {v} must be positive")));
        }
    }
    let q = (p + l) / l;
    let up = u.powf(p);
    let upl = u.powf(p + l);
    let wq = w.powf(q);
    let young = (weight * q).powf(-l / p);

    let lhs1 = (p - 1.0) * xi * up * wt.abs();
    let r1 = (p - 1.0) * xi * weight * (wt + w / q).abs().powf(q);
    let r2 = xi * p * (p - 1.0) / (p + l) * young * (1.0 + l / (p + l)) * upl;
    let r3 = l * xi * weight * (p - 1.0) / (p + l) * wq;
    let rhs1 = r1 + r2 + r3;

    let lhs2 = (p - 1.0) * xi * delta * up * w;
    let rhs2 = (p - 1.0) * xi * delta * weight * wq + xi * p * delta * (p - 1.0) / (p + l) * young * upl;

    Ok(holds(lhs1, rhs1, rhs1.max(lhs1)) && holds(lhs2, rhs2, rhs2.max(lhs2)))
}

/// Explicit constants for `c s^p <= (eps/2) s^{p+l} + c1` and
/// `c s^{p+k} <= (eps/2) s^{p+l} + c2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionConstants {
    pub c1: f64,
    pub c2: f64,
}

/// Young constant `C` with `c_hat s^m <= (eps/2) s^top + C` for all `s >= 0`.
fn young_absorption(c_hat: f64, m: f64, top: f64, eps: f64) -> f64 {
    // c s^m = (mu s^m)(c/mu) <= (mu s^m)^r / r + (c/mu)^{r'} / r'
    let r = top / m;
    let r_conj = r / (r - 1.0);
    let mu = (r * eps / 2.0).powf(1.0 / r);
    (c_hat / mu).powf(r_conj) / r_conj
}

/// Returns the absorption constants and confirms them on a logarithmic grid
/// of `s` from `1e-9` to `1e9`.
pub fn check_lower_order_absorption(
    c_hat: f64,
    p: f64,
    k: f64,
    l: f64,
    eps: f64,
) -> Result<AbsorptionConstants> {
    for (name, v) in [("c_hat", c_hat), ("k", k), ("l", l), ("eps", eps)] {
        if !(v > 0.0) {
            return Err(domain(format!("{name} = {v} must be positive")));
        }
    }
    if !(p > 1.0) {
        return Err(domain(format!("p = {p} must exceed 1")));
    }
    if k >= l {
        return Err(domain(format!("absorption needs k < l, got k = {k}, l = {l}")));
    }
    let top = p + l;
    let consts = AbsorptionConstants {
        c1: young_absorption(c_hat, p, top, eps),
        c2: young_absorption(c_hat, p + k, top, eps),
    };
    const POINTS: usize = 4000;
    for i in 0..=POINTS {
        let s = 10f64.powf(-9.0 + 18.0 * i as f64 / POINTS as f64);
        for (m, c) in [(p, consts.c1), (p + k, consts.c2)] {
            let lhs = c_hat * s.powf(m);
            let rhs = 0.5 * eps * s.powf(top) + c;
            if !(lhs <= rhs * (1.0 + 1e-12)) {
                return Err(Error::OracleViolation(format!(
                    "absorption fails at s = {s:e} for exponent {m}: {lhs:e} > {rhs:e}"
                )));
            }
        }
    }
    Ok(consts)
}

/// Outcome of a random sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepTally {
    pub samples: usize,
    pub violations: usize,
}

/// Random `(A, B, p)` in `[0, 1e3]^2 x [1, 10]`.
pub fn power_sum_sweep(samples: usize, seed: u64) -> SweepTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let violations = (0..samples)
        .filter(|_| {
            let a = rng.random_range(0.0..=1e3);
            let b = rng.random_range(0.0..=1e3);
            let p = rng.random_range(1.0..=10.0);
            !check_power_sum_inequality(a, b, p).expect("valid sample")
        })
        .count();
    SweepTally { samples, violations }
}

/// Random points with `p in (1, 6)`, `l in (0.1, 3)`, weight log-uniform in
/// `(1e-3, 1e3)`, `u, w in [0, 10]`, `wt in [-10, 10]`.
pub fn young_sweep(samples: usize, seed: u64) -> SweepTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let violations = (0..samples)
        .filter(|_| {
            let pt = YoungPoint {
                u: rng.random_range(0.0..=10.0),
                w: rng.random_range(0.0..=10.0),
                wt: rng.random_range(-10.0..=10.0),
                p: rng.random_range(1.0f64..6.0).max(1.0 + 1e-9),
                l: rng.random_range(0.1..3.0),
                xi: rng.random_range(0.01..10.0),
                delta: rng.random_range(0.01..10.0),
                weight: 10f64.powf(rng.random_range(-3.0..3.0)),
            };
            !check_young_splitting(&pt).expect("valid sample")
        })
        .count();
    SweepTally { samples, violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_sum_examples() {
        assert!(check_power_sum_inequality(1.0, 1.0, 2.0).unwrap());
        assert!(check_power_sum_inequality(3.0, 0.0, 5.0).unwrap());
        assert!(check_power_sum_inequality(-1.0, 0.0, 2.0).is_err());
        assert!(check_power_sum_inequality(1.0, 0.0, 0.5).is_err());
        // The constant 2^{p-1} is sharp: a smaller one fails at A = B.
        let p: f64 = 3.0;
        assert!(2.0f64.powf(p) > 0.99 * (p - 1.0).exp2() * 2.0);
    }

    #[test]
    fn young_trivial_cases() {
        let base = YoungPoint {
            u: 0.0,
            w: 2.0,
            wt: -3.0,
            p: 2.5,
            l: 0.7,
            xi: 1.3,
            delta: 0.4,
            weight: 0.1,
        };
        assert!(check_young_splitting(&base).unwrap());
        let flat = YoungPoint {
            u: 4.0,
            w: 0.0,
            wt: 0.0,
            ..base
        };
        assert!(check_young_splitting(&flat).unwrap());
        assert!(check_young_splitting(&YoungPoint { weight: 0.0, ..base }).is_err());
        assert!(check_young_splitting(&YoungPoint { w: -1.0, ..base }).is_err());
    }

    #[test]
    fn young_detects_a_broken_weight() {
        // Equality in Young's inequality: u^p a = W a^q + C u^{p+l} at
        // a^{q-1} = u^p / (W q). Shrinking the u^{p+l} coefficient must then fail.
        let (p, l, weight) = (2.0f64, 1.0f64, 0.5f64);
        let q = (p + l) / l;
        let u: f64 = 1.3;
        let a = (u.powf(p) / (weight * q)).powf(1.0 / (q - 1.0));
        let lhs = u.powf(p) * a;
        let coeff = p / (p + l) * (weight * q).powf(-l / p);
        let rhs = weight * a.powf(q) + coeff * u.powf(p + l);
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
        assert!(lhs > weight * a.powf(q) + 0.99 * coeff * u.powf(p + l));
    }

    #[test]
    fn sweeps_report_no_violations() {
        assert_eq!(power_sum_sweep(20_000, 1).violations, 0);
        assert_eq!(young_sweep(20_000, 2).violations, 0);
    }

    /// Brute-force maximum of `c s^m - (eps/2) s^top` by golden-section
    /// search on `log s`.
    fn brute_sup(c: f64, m: f64, top: f64, eps: f64) -> f64 {
        let g = |x: f64| {
            let s = x.exp();
            c * s.powf(m) - 0.5 * eps * s.powf(top)
        };
        let (mut a, mut b) = (-40.0f64, 40.0f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..300 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            if g(x1) < g(x2) {
                a = x1;
            } else {
                b = x2;
            }
        }
        g(0.5 * (a + b)).max(0.0)
    }

    #[test]
    fn absorption_constants_are_sharp() {
        let (c, p, k, l, eps) = (1.0, 2.0, 0.5, 1.0, 1.0);
        let consts = check_lower_order_absorption(c, p, k, l, eps).unwrap();
        // Closed-form maximiser of c s^{p+k} - (eps/2) s^{p+l}.
        let s_star: f64 = (2.0 * c * (p + k) / (eps * (p + l))).powf(1.0 / (l - k));
        let sup = c * s_star.powf(p + k) - 0.5 * eps * s_star.powf(p + l);
        assert!((consts.c2 - sup).abs() < 1e-12 * sup);
        assert!((consts.c2 - brute_sup(c, p + k, p + l, eps)).abs() < 1e-9 * sup);
        assert!((consts.c1 - brute_sup(c, p, p + l, eps)).abs() < 1e-9 * consts.c1);
    }

    #[test]
    fn absorption_limits_and_errors() {
        let big = check_lower_order_absorption(1.0, 2.0, 0.5, 1.0, 1e12).unwrap();
        assert!(big.c1 < 1e-20 && big.c2 < 1e-6);
        assert!(check_lower_order_absorption(1.0, 2.0, 1.0, 1.0, 1.0).is_err());
        assert!(check_lower_order_absorption(1.0, 2.0, 1.5, 1.0, 1.0).is_err());
    }
}
