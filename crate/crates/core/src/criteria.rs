//! Analytic constants and sufficient boundedness conditions.
//!
//! Given the coefficients of the system, this module evaluates the exponent
//! `p_bar`, the structural constant `A`, the Young weight `Xi`, the lower
//! admissible production bound `A^-1 C gamma1` and the decisive bracket, and
//! classifies a parameter point against the known boundedness regimes.
//!
//! The maximal-regularity constant `C` is always an input: it depends on the
//! domain and is only known through the empirical lower bounds produced by
//! [`crate::oracles::regularity`].

use std::fmt;

use crate::error::{domain, Result};
use crate::model::ModelParams;

/// Default slack used in the bracket check when no scanned value passes.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Slack values tried by [`epsilon_scan`], largest first.
pub const EPSILON_SCAN: [f64; 8] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} = {value} must be positive and finite")))
    }
}

fn require_p_bar(p_bar: f64) -> Result<()> {
    if p_bar > 1.0 && p_bar.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("p_bar = {p_bar} must exceed 1")))
    }
}

/// `max{n/2, k(1/beta - 1), l(1/delta - 1)} + 1`.
///
/// Negative branches (beta or delta above one) take part in the maximum as
/// they are.
pub fn compute_p_bar(n: usize, k: f64, l: f64, beta: f64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    require_positive("k", k)?;
    require_positive("l", l)?;
    require_positive("beta", beta)?;
    require_positive("delta", delta)?;
    let half_n = n as f64 / 2.0;
    let attraction = k * (1.0 / beta - 1.0);
    let repulsion = l * (1.0 / delta - 1.0);
    Ok(half_n.max(attraction).max(repulsion) + 1.0)
}

/// Exponent `(l(p+l-1) + p)/(p+l)` shared by `A` and the collapsed bracket.
fn two_power(p_bar: f64, l: f64) -> f64 {
    (l * (p_bar + l - 1.0) + p_bar) / (p_bar + l)
}

/// Structural constant `A = 2^{-(l(p+l-1)+p)/(p+l)} (p+l)/(p+2l+delta(p+l))`.
pub fn compute_a(p_bar: f64, l: f64, delta: f64) -> Result<f64> {
    require_p_bar(p_bar)?;
    require_positive("l", l)?;
    require_positive("delta", delta)?;
    let ratio = (p_bar + l) / (p_bar + 2.0 * l + delta * (p_bar + l));
    Ok((-two_power(p_bar, l)).exp2() * ratio)
}

/// Young weight `Xi = l/(p+l) (C gamma1)^{-p/l} 2^{-p(p+(p+l-1)l)/(l(p+l))}`.
///
/// Leaves the `f64` range for very small `l`; the classifier works with
/// [`ln_xi_const`] instead.
pub fn compute_xi_const(p_bar: f64, l: f64, c_reg: f64, gamma1: f64) -> Result<f64> {
    Ok(ln_xi_const(p_bar, l, c_reg, gamma1)?.exp())
}

/// Natural logarithm of [`compute_xi_const`].
pub fn ln_xi_const(p_bar: f64, l: f64, c_reg: f64, gamma1: f64) -> Result<f64> {
    require_p_bar(p_bar)?;
    require_positive("l", l)?;
    require_positive("c_reg", c_reg)?;
    require_positive("gamma1", gamma1)?;
    let exponent = p_bar * (p_bar + (p_bar + l - 1.0) * l) / (l * (p_bar + l));
    Ok((l / (p_bar + l)).ln() - p_bar / l * (c_reg * gamma1).ln() - exponent * std::f64::consts::LN_2)
}

/// `A^-1 C gamma1`: admissible `gamma0` must lie strictly above this.
pub fn gamma0_threshold(a_const: f64, c_reg: f64, gamma1: f64) -> Result<f64> {
    require_positive("A", a_const)?;
    if !(c_reg >= 0.0) {
        return Err(domain(format!("c_reg = {c_reg} must be nonnegative")));
    }
    require_positive("gamma1", gamma1)?;
    Ok(c_reg * gamma1 / a_const)
}

/// Inputs of the decisive bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketInputs {
    pub p_bar: f64,
    pub l: f64,
    pub delta: f64,
    pub xi_const: f64,
    pub c_reg: f64,
    pub gamma1: f64,
    pub gamma0: f64,
    pub epsilon: f64,
}

/// Value of
/// `(1+delta+l/(p+l)) (Xi C^{(p+l)/l} gamma1^{(p+l)/l} 2^{p/l+p+l-1}
///  + p/(p+l) ((p+l)/l)^{-l/p} Xi^{-l/p}) + eps - gamma0`.
///
/// Boundedness through the new criterion needs this to be nonpositive.
pub fn bracket_coefficient(b: &BracketInputs) -> Result<f64> {
    require_positive("Xi", b.xi_const)?;
    bracket_ln(b, b.xi_const.ln())
}

/// Bracket with `Xi` given through its logarithm. Each term is formed as a
/// single exponential so that extreme `Xi` cannot overflow or underflow.
fn bracket_ln(b: &BracketInputs, ln_xi: f64) -> Result<f64> {
    require_p_bar(b.p_bar)?;
    require_positive("l", b.l)?;
    require_positive("delta", b.delta)?;
    require_positive("c_reg", b.c_reg)?;
    require_positive("gamma1", b.gamma1)?;
    require_positive("gamma0", b.gamma0)?;
    require_positive("epsilon", b.epsilon)?;
    if !ln_xi.is_finite() {
        return Err(domain(format!("ln Xi = {ln_xi} must be finite")));
    }
    let (p, l) = (b.p_bar, b.l);
    let q = (p + l) / l;
    let ln2 = std::f64::consts::LN_2;
    let regularity = (ln_xi + q * (b.c_reg * b.gamma1).ln() + (p / l + p + l - 1.0) * ln2).exp();
    let young = p / (p + l) * (-(l / p) * (q.ln() + ln_xi)).exp();
    Ok((1.0 + b.delta + l / (p + l)) * (regularity + young) + b.epsilon - b.gamma0)
}

/// Largest slack in [`EPSILON_SCAN`] for which the bracket is nonpositive,
/// together with the bracket value at that slack.
pub fn epsilon_scan(base: &BracketInputs) -> Result<Option<(f64, f64)>> {
    require_positive("Xi", base.xi_const)?;
    scan_ln(base, base.xi_const.ln())
}

fn scan_ln(base: &BracketInputs, ln_xi: f64) -> Result<Option<(f64, f64)>> {
    for eps in EPSILON_SCAN {
        let value = bracket_ln(
            &BracketInputs {
                epsilon: eps,
                ..*base
            },
            ln_xi,
        )?;
        if value <= 0.0 {
            return Ok(Some((eps, value)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Both exponents in `(0, 1/n]`.
    BoundedI,
    /// One exponent in `(1/n, 1/n + 2/(n^2+4))`, the other in `(0, 1/n]`.
    BoundedII,
    /// Both exponents in `(1/n, 1/n + 2/(n^2+4))`.
    BoundedIII,
    /// Both exponents in `(0, 2/n)`.
    BoundedTwoOverN,
    /// `k < l`, `C < A` and `gamma0 > A^-1 C gamma1`.
    BoundedNewTheorem,
    Unknown,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::BoundedI => "BoundedI",
            Regime::BoundedII => "BoundedII",
            Regime::BoundedIII => "BoundedIII",
            Regime::BoundedTwoOverN => "BoundedTwoOverN",
            Regime::BoundedNewTheorem => "BoundedNewTheorem",
            Regime::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub p_bar: f64,
    pub a_const: f64,
    pub xi_const: f64,
    pub gamma0_threshold: f64,
    pub c_reg: f64,
    pub bracket_value: f64,
    pub epsilon: f64,
    pub notes: String,
}

pub const REPORT_CSV_HEADER: &str = "regime,p_bar,A,Xi,gamma0_threshold,bracket,epsilon";

impl RegimeReport {
    /// `true` when some `gamma0 <= gamma1` can exceed the threshold.
    pub fn admissible_gammas_exist(&self) -> bool {
        self.c_reg < self.a_const
    }

    /// Flat `key = value` block.
    pub fn to_kv(&self) -> String {
        format!(
            "regime = {}\np_bar = {}\nA = {}\nXi = {}\ngamma0_threshold = {}\nc_reg = {}\nbracket = {}\nepsilon = {}\nnotes = {}\n",
            self.regime,
            self.p_bar,
            self.a_const,
            self.xi_const,
            self.gamma0_threshold,
            self.c_reg,
            self.bracket_value,
            self.epsilon,
            self.notes
        )
    }

    /// One CSV row matching [`REPORT_CSV_HEADER`].
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.regime,
            self.p_bar,
            self.a_const,
            self.xi_const,
            self.gamma0_threshold,
            self.bracket_value,
            self.epsilon
        )
    }
}

fn in_open(x: f64, lo: f64, hi: f64) -> bool {
    x > lo && x < hi
}

/// Applies the published sufficient conditions in precedence order.
///
/// Items (i)-(iii) and the `2/n` refinement are stated for `n >= 2`; for
/// `n = 1` only the `k < l` criterion is tested.
pub fn classify_regime(p: &ModelParams, c_reg: f64) -> Result<RegimeReport> {
    let p = p.validate()?;
    require_positive("c_reg", c_reg)?;
    let n = p.dim;
    let p_bar = compute_p_bar(n, p.k, p.l, p.beta, p.delta)?;
    let a_const = compute_a(p_bar, p.l, p.delta)?;
    let ln_xi = ln_xi_const(p_bar, p.l, c_reg, p.gamma1)?;
    let xi_const = ln_xi.exp();
    let threshold = gamma0_threshold(a_const, c_reg, p.gamma1)?;
    let base = BracketInputs {
        p_bar,
        l: p.l,
        delta: p.delta,
        xi_const,
        c_reg,
        gamma1: p.gamma1,
        gamma0: p.gamma0,
        epsilon: DEFAULT_EPSILON,
    };
    let (epsilon, bracket_value) = match scan_ln(&base, ln_xi)? {
        Some(found) => found,
        None => (DEFAULT_EPSILON, bracket_ln(&base, ln_xi)?),
    };

    let mut notes = Vec::new();
    let nf = n as f64;
    let one_over_n = 1.0 / nf;
    let upper = one_over_n + 2.0 / (nf * nf + 4.0);
    let low = |x: f64| x <= one_over_n;
    let mid = |x: f64| in_open(x, one_over_n, upper);

    let new_theorem = p.k < p.l && c_reg < a_const && p.gamma0 > threshold;
    let regime = if n >= 2 && low(p.k) && low(p.l) {
        Regime::BoundedI
    } else if n >= 2 && ((mid(p.l) && low(p.k)) || (mid(p.k) && low(p.l))) {
        Regime::BoundedII
    } else if n >= 2 && mid(p.k) && mid(p.l) {
        Regime::BoundedIII
    } else if n >= 2 && p.k < 2.0 / nf && p.l < 2.0 / nf {
        Regime::BoundedTwoOverN
    } else if new_theorem {
        Regime::BoundedNewTheorem
    } else {
        Regime::Unknown
    };

    if n < 2 {
        notes.push("n = 1: exponent-interval criteria need n >= 2".to_string());
    }
    if c_reg < a_const {
        notes.push(format!(
            "C < A holds; admissible gamma0 in ({threshold}, {}]",
            p.gamma1
        ));
    } else {
        notes.push("C >= A: no admissible (gamma0, gamma1)".to_string());
    }
    if p.k >= p.l {
        notes.push("k >= l: new criterion not applicable".to_string());
    }
    if bracket_value > 0.0 {
        notes.push("bracket positive for every scanned epsilon".to_string());
    }

    Ok(RegimeReport {
        regime,
        p_bar,
        a_const,
        xi_const,
        gamma0_threshold: threshold,
        c_reg,
        bracket_value,
        epsilon,
        notes: notes.join("; "),
    })
}
