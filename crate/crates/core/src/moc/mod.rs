//! Explicit moduli of continuity and their numerical certification.
//!
//! Both families share the near-origin branch `ω(ξ) = ξ - ξ^r` on `[0, δ]`.
//! Beyond `δ` the derivative is prescribed:
//!
//! * subcritical: `ω'(ξ) = γ ξ^{-τ}` with `τ = 2α + 2β - 1`,
//! * supercritical: `ω'(ξ) = γ δ^t ξ^{-t}` with `t` the tail exponent,
//!
//! and the tail is integrated in closed form. The rescaled modulus is
//! `ω_λ(ξ) = λ^{2(α+β-1)} ω(λξ)`.

mod bounds;
mod certify;
mod field;
pub mod quad;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{ModelParams, Regime};

pub use bounds::{
    convection_bound, convection_head, convection_tail, dissipation_bound, dissipation_far, dissipation_far_integrand,
    dissipation_near, dissipation_near_integrand, velocity_modulus, Bound, DissipationBound,
};
pub use certify::{
    certify, certify_with, default_xi_range, rescale_for_data, search_parameters, smallness_constant,
    CertificateReport, Constants, SearchInputs, SearchOutcome, SideCondition,
};
pub use field::{
    smallness_check, verify_field_moc, verify_field_moc_with, FieldMocCheck, PairSampling, SmallnessReport,
};
pub use quad::Integral;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MocError {
    #[error("invalid modulus: {0}")]
    Invalid(String),
    #[error("modulus is {moc:?} but the model is {model:?}")]
    RegimeMismatch { moc: MocRegime, model: Regime },
    #[error("modulus was built for alpha={alpha}, beta={beta}; got alpha={got_alpha}, beta={got_beta}")]
    ParamsMismatch {
        alpha: f64,
        beta: f64,
        got_alpha: f64,
        got_beta: f64,
    },
    #[error("argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("tail integral diverges (exponent {0})")]
    DivergentTail(f64),
    #[error("invalid certification range: {0}")]
    InvalidRange(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MocRegime {
    Subcritical,
    Supercritical,
}

/// `c₀ + c₁ x^{e₁}` style sum of two power terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PowerSum {
    pub terms: [(f64, f64); 2],
}

impl PowerSum {
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| term(c, e, x)).sum()
    }
}

fn term(c: f64, e: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else if e == 0.0 {
        c
    } else if e == 1.0 {
        c * x
    } else {
        c * x.powf(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMoc", into = "RawMoc")]
pub struct Moc {
    regime: MocRegime,
    r: f64,
    tail_exponent: f64,
    delta: f64,
    gamma: f64,
    lambda: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMoc {
    regime: MocRegime,
    r: f64,
    tail_exponent: f64,
    delta: f64,
    gamma: f64,
    #[serde(default = "one")]
    lambda: f64,
    alpha: f64,
    beta: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawMoc> for Moc {
    type Error = MocError;

    fn try_from(raw: RawMoc) -> Result<Self, MocError> {
        let moc = Moc {
            regime: raw.regime,
            r: raw.r,
            tail_exponent: raw.tail_exponent,
            delta: raw.delta,
            gamma: raw.gamma,
            lambda: raw.lambda,
            alpha: raw.alpha,
            beta: raw.beta,
        };
        if moc.regime == MocRegime::Subcritical {
            let expected = 2.0 * (raw.alpha + raw.beta) - 1.0;
            if (raw.tail_exponent - expected).abs() > 1e-12 {
                return Err(MocError::Invalid(format!(
                    "subcritical tail exponent must be 2α+2β-1 = {expected}, got {}",
                    raw.tail_exponent
                )));
            }
        }
        moc.validate()?;
        Ok(moc)
    }
}

impl From<Moc> for RawMoc {
    fn from(m: Moc) -> Self {
        RawMoc {
            regime: m.regime,
            r: m.r,
            tail_exponent: m.tail_exponent,
            delta: m.delta,
            gamma: m.gamma,
            lambda: m.lambda,
            alpha: m.alpha,
            beta: m.beta,
        }
    }
}

fn invalid(msg: impl Into<String>) -> MocError {
    MocError::Invalid(msg.into())
}

impl Moc {
    pub fn subcritical(params: &ModelParams, r: f64, delta: f64, gamma: f64) -> Result<Self, MocError> {
        let moc = Moc {
            regime: MocRegime::Subcritical,
            r,
            tail_exponent: 2.0 * (params.alpha + params.beta) - 1.0,
            delta,
            gamma,
            lambda: 1.0,
            alpha: params.alpha,
            beta: params.beta,
        };
        moc.validate()?;
        Ok(moc)
    }

    pub fn supercritical(
        params: &ModelParams,
        r: f64,
        tail_exponent: f64,
        delta: f64,
        gamma: f64,
    ) -> Result<Self, MocError> {
        let moc = Moc {
            regime: MocRegime::Supercritical,
            r,
            tail_exponent,
            delta,
            gamma,
            lambda: 1.0,
            alpha: params.alpha,
            beta: params.beta,
        };
        moc.validate()?;
        Ok(moc)
    }

    /// Checks every structural invariant of the family.
    pub fn validate(&self) -> Result<(), MocError> {
        let (a, b) = (self.alpha, self.beta);
        let sigma = a + b;
        for (name, v) in [
            ("r", self.r),
            ("tail_exponent", self.tail_exponent),
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} is not finite")));
            }
        }
        if !(self.delta > 0.0 && self.gamma > 0.0 && self.lambda > 0.0) {
            return Err(invalid("delta, gamma and lambda must be positive"));
        }
        if !(a > 0.0 && a < 1.0 && b > 0.5 && b < 1.0) {
            return Err(invalid(format!("alpha={a}, beta={b} outside the model range")));
        }
        let drop_room = 1.0 - self.r * self.delta.powf(self.r - 1.0);
        match self.regime {
            MocRegime::Subcritical => {
                if !(sigma > 1.0 && sigma <= 1.5) {
                    return Err(invalid(format!("subcritical family needs 1 < α+β ≤ 3/2, got {sigma}")));
                }
                if !(self.r > 1.0 && self.r < 2.0) {
                    return Err(invalid(format!("subcritical r must lie in (1, 2), got {}", self.r)));
                }
                let jump = self.gamma * self.delta.powf(-self.tail_exponent);
                if !(jump < drop_room) {
                    return Err(invalid(format!(
                        "derivative must drop at δ: γδ^(-τ) = {jump} is not below 1 - rδ^(r-1) = {drop_room}"
                    )));
                }
            }
            MocRegime::Supercritical => {
                if !(sigma > 0.5 && sigma < 1.0) {
                    return Err(invalid(format!(
                        "supercritical family needs 1/2 < α+β < 1, got {sigma}"
                    )));
                }
                let t = self.tail_exponent;
                if !(t > sigma && t < 1.0) {
                    return Err(invalid(format!(
                        "tail exponent must lie in (α+β, 1) = ({sigma}, 1), got {t}"
                    )));
                }
                if !(self.r > 1.0 && self.r < 1.0 + 2.0 * a) {
                    return Err(invalid(format!(
                        "r must lie in (1, 1+2α) = (1, {}), got {}",
                        1.0 + 2.0 * a,
                        self.r
                    )));
                }
                if !(self.gamma <= 0.5 * (1.0 - t)) {
                    return Err(invalid(format!(
                        "γ = {} exceeds (1-t)/2 = {}",
                        self.gamma,
                        0.5 * (1.0 - t)
                    )));
                }
                // Rounding slack so that exact dyadic cases such as δ = 2^-5, r = 1.2 pass.
                if !(self.delta.powf(self.r - 1.0) <= 0.5 * (1.0 + 1e-14)) {
                    return Err(invalid(format!(
                        "δ^(r-1) = {} exceeds 1/2",
                        self.delta.powf(self.r - 1.0)
                    )));
                }
                if !(self.gamma < drop_room) {
                    return Err(invalid(format!(
                        "derivative must drop at δ: γ = {} is not below 1 - rδ^(r-1) = {drop_room}",
                        self.gamma
                    )));
                }
            }
        }
        Ok(())
    }

    /// Errors unless `params` carries the exponents this modulus was built for
    /// and lies in the matching regime.
    pub fn check_params(&self, params: &ModelParams) -> Result<(), MocError> {
        if (params.alpha - self.alpha).abs() > 1e-12 || (params.beta - self.beta).abs() > 1e-12 {
            return Err(MocError::ParamsMismatch {
                alpha: self.alpha,
                beta: self.beta,
                got_alpha: params.alpha,
                got_beta: params.beta,
            });
        }
        let model = params.regime();
        let ok = matches!(
            (self.regime, model),
            (MocRegime::Subcritical, Regime::Subcritical) | (MocRegime::Supercritical, Regime::Supercritical)
        );
        if ok {
            Ok(())
        } else {
            Err(MocError::RegimeMismatch {
                moc: self.regime,
                model,
            })
        }
    }

    /// Same modulus with scaling `λ`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self, MocError> {
        let moc = Moc { lambda, ..*self };
        moc.validate()?;
        Ok(moc)
    }

    /// Same family with different `(δ, γ)`.
    pub fn with_delta_gamma(&self, delta: f64, gamma: f64) -> Result<Self, MocError> {
        let moc = Moc { delta, gamma, ..*self };
        moc.validate()?;
        Ok(moc)
    }

    pub fn regime(&self) -> MocRegime {
        self.regime
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `K` in `ω'(ξ) = K ξ^{-τ}` for the unscaled tail.
    pub fn tail_coefficient(&self) -> f64 {
        match self.regime {
            MocRegime::Subcritical => self.gamma,
            MocRegime::Supercritical => self.gamma * self.delta.powf(self.tail_exponent),
        }
    }

    /// Amplitude factor `λ^{2(α+β-1)}`.
    pub fn amplitude(&self) -> f64 {
        self.lambda.powf(2.0 * (self.alpha + self.beta - 1.0))
    }

    /// Breakpoint `δ/λ` of the rescaled modulus.
    pub fn breakpoint(&self) -> f64 {
        self.delta / self.lambda
    }

    /// `ω_λ'(0) = λ^{2α+2β-1}`.
    pub fn slope_at_origin(&self) -> f64 {
        self.amplitude() * self.lambda
    }

    /// Unscaled `ω(δ) = δ - δ^r`.
    pub fn value_at_breakpoint(&self) -> f64 {
        self.delta - self.delta.powf(self.r)
    }

    pub(crate) fn near_terms(&self) -> PowerSum {
        let l = self.amplitude();
        PowerSum {
            terms: [(l * self.lambda, 1.0), (-l * self.lambda.powf(self.r), self.r)],
        }
    }

    pub(crate) fn tail_terms(&self) -> PowerSum {
        let l = self.amplitude();
        let e = 1.0 - self.tail_exponent;
        let k = self.tail_coefficient();
        let d = self.delta;
        PowerSum {
            terms: [
                (l * (self.value_at_breakpoint() - k * d.powf(e) / e), 0.0),
                (l * k * self.lambda.powf(e) / e, e),
            ],
        }
    }

    /// `ω_λ(ξ)` without the sign check.
    pub(crate) fn value(&self, xi: f64) -> f64 {
        if xi <= self.breakpoint() {
            self.near_terms().eval(xi)
        } else {
            self.tail_terms().eval(xi)
        }
    }

    /// `ω_λ(ξ)`.
    pub fn omega(&self, xi: f64) -> Result<f64, MocError> {
        if !(xi >= 0.0) {
            return Err(MocError::NegativeArgument(xi));
        }
        Ok(self.value(xi))
    }

    /// One-sided derivatives `(ω_λ'(ξ-), ω_λ'(ξ+))`; they differ only at the
    /// breakpoint.
    pub fn derivative(&self, xi: f64) -> (f64, f64) {
        let d = self.breakpoint();
        let l = self.amplitude();
        let lam = self.lambda;
        let near = |x: f64| l * lam * (1.0 - self.r * (lam * x).powf(self.r - 1.0));
        let tail = |x: f64| l * lam * self.tail_coefficient() * (lam * x).powf(-self.tail_exponent);
        if xi < d {
            (near(xi), near(xi))
        } else if xi > d {
            (tail(xi), tail(xi))
        } else {
            (near(xi), tail(xi))
        }
    }

    /// `ω_λ''(ξ)` away from the breakpoint (right-sided at it).
    pub fn second_derivative(&self, xi: f64) -> f64 {
        let l = self.amplitude();
        let lam = self.lambda;
        if xi < self.breakpoint() {
            -l * lam * lam * self.r * (self.r - 1.0) * (lam * xi).powf(self.r - 2.0)
        } else {
            -l * lam * lam * self.tail_coefficient() * self.tail_exponent * (lam * xi).powf(-self.tail_exponent - 1.0)
        }
    }
}
