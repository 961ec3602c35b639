//! Model coefficients and the production laws feeding the two chemical
//! equations.
//!
//! The attractant is produced by `f(s) = alpha * s^k`, the repellent by
//! `g(s) = gamma_g * (1 + s)^l` with `gamma0 <= gamma_g <= gamma1`. These are
//! the canonical members of the admissible envelopes
//! `0 <= f(s) <= alpha s^k` and `gamma0 (1+s)^l <= g(s) <= gamma1 (1+s)^l`.

use crate::error::{domain, Error, Result};

/// Coefficients of the attraction-repulsion system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Attraction sensitivity.
    pub chi: f64,
    /// Repulsion sensitivity.
    pub xi: f64,
    /// Decay rate of the attractant `v`.
    pub beta: f64,
    /// Decay rate of the repellent `w`.
    pub delta: f64,
    /// Growth bound of `f`.
    pub alpha: f64,
    /// Lower production bound of `g`.
    pub gamma0: f64,
    /// Upper production bound of `g`.
    pub gamma1: f64,
    /// Attraction production exponent.
    pub k: f64,
    /// Repulsion production exponent.
    pub l: f64,
    /// Spatial dimension.
    pub dim: usize,
}

/// Names of the real-valued coefficients, in declaration order.
pub const COEFFICIENT_NAMES: [&str; 9] = [
    "chi", "xi", "beta", "delta", "alpha", "gamma0", "gamma1", "k", "l",
];

impl ModelParams {
    /// Checks positivity of every coefficient and `gamma0 <= gamma1`.
    pub fn validate(self) -> Result<Self> {
        for name in COEFFICIENT_NAMES {
            let value = self.get(name).expect("known coefficient");
            // `!(x > 0)` also rejects NaN.
            if !(value > 0.0) {
                return Err(Error::NonPositiveCoefficient(name));
            }
        }
        if self.dim == 0 {
            return Err(Error::NonPositiveCoefficient("dim"));
        }
        if self.gamma0 > self.gamma1 {
            return Err(Error::GammaOrderViolation {
                gamma0: self.gamma0,
                gamma1: self.gamma1,
            });
        }
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "chi" => self.chi,
            "xi" => self.xi,
            "beta" => self.beta,
            "delta" => self.delta,
            "alpha" => self.alpha,
            "gamma0" => self.gamma0,
            "gamma1" => self.gamma1,
            "k" => self.k,
            "l" => self.l,
            _ => return None,
        })
    }

    /// Sets a coefficient by name. Returns `false` for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "chi" => &mut self.chi,
            "xi" => &mut self.xi,
            "beta" => &mut self.beta,
            "delta" => &mut self.delta,
            "alpha" => &mut self.alpha,
            "gamma0" => &mut self.gamma0,
            "gamma1" => &mut self.gamma1,
            "k" => &mut self.k,
            "l" => &mut self.l,
            _ => return false,
        };
        *slot = value;
        true
    }
}

/// Validates a raw parameter set.
pub fn validate_params(p: ModelParams) -> Result<ModelParams> {
    p.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductionKind {
    /// `f(s) = coefficient * s^exponent`
    AttractionF,
    /// `g(s) = coefficient * (1 + s)^exponent`
    RepulsionG,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductionLaw {
    pub kind: ProductionKind,
    pub coefficient: f64,
    pub exponent: f64,
}

impl ProductionLaw {
    pub fn attraction(alpha: f64, k: f64) -> Result<Self> {
        Self::new(ProductionKind::AttractionF, alpha, k)
    }

    pub fn repulsion(gamma_g: f64, l: f64) -> Result<Self> {
        Self::new(ProductionKind::RepulsionG, gamma_g, l)
    }

    fn new(kind: ProductionKind, coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient > 0.0) || !coefficient.is_finite() {
            return Err(domain(format!("production coefficient {coefficient} must be positive")));
        }
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(domain(format!("production exponent {exponent} must be positive")));
        }
        Ok(Self {
            kind,
            coefficient,
            exponent,
        })
    }

    /// Evaluates the law at `s >= 0`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(domain(format!("production argument {s} is negative")));
        }
        Ok(self.eval_unchecked(s))
    }

    /// Evaluation without the sign check, for hot loops over fields already
    /// known to be nonnegative. Negative round-off is treated as zero.
    #[inline]
    pub fn eval_unchecked(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self.kind {
            // powf(0, k) = 0 for k > 0: the continuous extension at the origin.
            ProductionKind::AttractionF => self.coefficient * s.powf(self.exponent),
            ProductionKind::RepulsionG => self.coefficient * (1.0 + s).powf(self.exponent),
        }
    }
}

/// Evaluates a production law at `s`.
pub fn eval_production(law: &ProductionLaw, s: f64) -> Result<f64> {
    law.eval(s)
}

/// Validated parameters together with the concrete production laws used in
/// simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub params: ModelParams,
    pub f: ProductionLaw,
    pub g: ProductionLaw,
}

impl Model {
    /// Builds the canonical model with `gamma_g = (gamma0 + gamma1) / 2`.
    pub fn new(params: ModelParams) -> Result<Self> {
        let gamma_g = 0.5 * (params.gamma0 + params.gamma1);
        Self::with_gamma_g(params, gamma_g)
    }

    pub fn with_gamma_g(params: ModelParams, gamma_g: f64) -> Result<Self> {
        let params = params.validate()?;
        if !(gamma_g >= params.gamma0 && gamma_g <= params.gamma1) {
            return Err(domain(format!(
                "gamma_g = {gamma_g} lies outside [{}, {}]",
                params.gamma0, params.gamma1
            )));
        }
        Ok(Self {
            params,
            f: ProductionLaw::attraction(params.alpha, params.k)?,
            g: ProductionLaw::repulsion(gamma_g, params.l)?,
        })
    }

    /// Spatially uniform equilibrium `(c, f(c)/beta, g(c)/delta)`.
    pub fn homogeneous_equilibrium(&self, c: f64) -> Result<(f64, f64, f64)> {
        Ok((
            c,
            self.f.eval(c)? / self.params.beta,
            self.g.eval(c)? / self.params.delta,
        ))
    }
}
