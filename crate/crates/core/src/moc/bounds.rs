//! Upper bounds for the convection and dissipation terms at a touching
//! distance `ξ`.
//!
//! Convection: `Ω(ξ) ω'(ξ)` with
//! `Ω(ξ) = C₁(∫₀^ξ ω(η) η^{2β-2} dη + ξ ∫_ξ^∞ ω(η) η^{2β-3} dη)`.
//!
//! Dissipation: `C₂(D₁ + D₂)` with
//! `D₁ = ∫₀^{ξ/2} (ω(ξ+2η) + ω(ξ-2η) - 2ω(ξ)) η^{-1-2α} dη` and
//! `D₂ = ∫_{ξ/2}^∞ (ω(2η+ξ) - ω(2η-ξ) - 2ω(ξ)) η^{-1-2α} dη`.
//!
//! Closed forms are used where the modulus is a single power sum; adaptive
//! quadrature covers the rest and the far tails are done analytically beyond
//! `Ξ = 16 max(ξ, δ/λ)`.

use serde::{Deserialize, Serialize};

use super::quad::{integrate, integrate_log, Integral, QuadOptions};
use super::{Moc, MocError, PowerSum};
use crate::spectral::ModelParams;

const CUTOFF_FACTOR: f64 = 16.0;

/// A bound value together with the numerical error it may carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationBound {
    /// `max(closed, quadrature)`.
    pub value: f64,
    /// Amount to add to `value` for a safe upper bound.
    pub error: f64,
    /// `-C₂ξ^{r-2α}` (ξ ≤ δ) or `-C₂ω(ξ)ξ^{-2α}` (ξ > δ); only for `λ = 1`.
    pub closed: Option<f64>,
    pub quadrature: f64,
    pub quadrature_error: f64,
}

fn cutoff(moc: &Moc, xi: f64) -> f64 {
    CUTOFF_FACTOR * xi.max(moc.breakpoint())
}

fn check_xi(xi: f64) -> Result<(), MocError> {
    if xi > 0.0 && xi.is_finite() {
        Ok(())
    } else {
        Err(MocError::InvalidRange(format!(
            "ξ must be positive and finite, got {xi}"
        )))
    }
}

/// `∫₀^ξ ω(η) η^{2β-2} dη`.
pub fn convection_head(moc: &Moc, params: &ModelParams, xi: f64) -> Result<Integral, MocError> {
    moc.check_params(params)?;
    check_xi(xi)?;
    let w = 2.0 * params.beta - 2.0;
    let d = moc.breakpoint();
    let x0 = xi.min(d);
    let closed: f64 = moc
        .near_terms()
        .terms
        .iter()
        .map(|&(c, e)| c * x0.powf(e + w + 1.0) / (e + w + 1.0))
        .sum();
    let mut total = Integral::exact(closed);
    if xi > d {
        total = total + integrate_log(|eta| moc.value(eta) * eta.powf(w), d, xi, &[], QuadOptions::default());
    }
    Ok(total)
}

/// `∫_ξ^∞ ω(η) η^{2β-3} dη`.
pub fn convection_tail(moc: &Moc, params: &ModelParams, xi: f64) -> Result<Integral, MocError> {
    moc.check_params(params)?;
    check_xi(xi)?;
    let w = 2.0 * params.beta - 3.0;
    let big = cutoff(moc, xi);
    let quad = integrate_log(
        |eta| moc.value(eta) * eta.powf(w),
        xi,
        big,
        &[moc.breakpoint()],
        QuadOptions::default(),
    );
    let mut far = 0.0;
    for &(c, e) in &moc.tail_terms().terms {
        let p = e + w + 1.0;
        if c == 0.0 {
            continue;
        }
        if p >= 0.0 {
            return Err(MocError::DivergentTail(p));
        }
        far += c * big.powf(p) / (-p);
    }
    Ok(quad + Integral::exact(far))
}

/// Velocity modulus `Ω(ξ)`.
pub fn velocity_modulus(moc: &Moc, params: &ModelParams, xi: f64, c1: f64) -> Result<Integral, MocError> {
    let head = convection_head(moc, params, xi)?;
    let tail = convection_tail(moc, params, xi)?;
    Ok((head + tail.scaled(xi)).scaled(c1))
}

/// `Ω(ξ) ω'(ξ)`, using the larger one-sided derivative at the breakpoint.
pub fn convection_bound(moc: &Moc, xi: f64, params: &ModelParams, c1: f64) -> Result<Bound, MocError> {
    let omega_big = velocity_modulus(moc, params, xi, c1)?;
    let (l, r) = moc.derivative(xi);
    let slope = l.max(r);
    Ok(Bound {
        value: omega_big.value * slope,
        error: omega_big.error * slope,
    })
}

/// `(1+u)^e + (1-u)^e - 2` for `0 ≤ u ≤ 1` without cancellation at small `u`.
fn symmetric_second_difference(e: f64, u: f64) -> f64 {
    if e == 0.0 || e == 1.0 {
        return 0.0;
    }
    if u <= 0.5 {
        // 2 Σ_{j≥1} C(e, 2j) u^{2j}
        let u2 = u * u;
        let mut binom = e * (e - 1.0) / 2.0;
        let mut pow = u2;
        let mut sum = 0.0;
        for j in 1..400 {
            let t = binom * pow;
            sum += t;
            if t.abs() <= 1e-18 * sum.abs() || t == 0.0 {
                break;
            }
            let k = (2 * j) as f64;
            binom *= (e - k) * (e - k - 1.0) / ((k + 1.0) * (k + 2.0));
            pow *= u2;
        }
        2.0 * sum
    } else {
        (1.0 + u).powf(e) + (1.0 - u).powf(e) - 2.0
    }
}

fn power_second_difference(p: &PowerSum, xi: f64, h: f64) -> f64 {
    let u = h / xi;
    p.terms
        .iter()
        .map(|&(c, e)| c * xi.powf(e) * symmetric_second_difference(e, u))
        .sum()
}

/// `ω(ξ+h) + ω(ξ-h) - 2ω(ξ)` for `0 ≤ h ≤ ξ`.
fn second_difference(moc: &Moc, xi: f64, h: f64) -> f64 {
    let d = moc.breakpoint();
    if xi + h <= d {
        power_second_difference(&moc.near_terms(), xi, h)
    } else if xi - h >= d {
        power_second_difference(&moc.tail_terms(), xi, h)
    } else {
        moc.value(xi + h) + moc.value(xi - h) - 2.0 * moc.value(xi)
    }
}

/// Integrand of `D₁` at `η ∈ (0, ξ/2]`.
pub fn dissipation_near_integrand(moc: &Moc, alpha: f64, xi: f64, eta: f64) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    second_difference(moc, xi, 2.0 * eta) * eta.powf(-1.0 - 2.0 * alpha)
}

/// Integrand of `D₂` at `η ≥ ξ/2`.
pub fn dissipation_far_integrand(moc: &Moc, alpha: f64, xi: f64, eta: f64) -> f64 {
    (moc.value(2.0 * eta + xi) - moc.value(2.0 * eta - xi) - 2.0 * moc.value(xi)) * eta.powf(-1.0 - 2.0 * alpha)
}

/// `D₁`, integrated in `u` with `η = (ξ/2) u^p`, `p = 1/(1-α)`, which makes the
/// integrand vanish linearly at `u = 0`.
pub fn dissipation_near(moc: &Moc, params: &ModelParams, xi: f64) -> Result<Integral, MocError> {
    moc.check_params(params)?;
    check_xi(xi)?;
    let alpha = params.alpha;
    let p = 1.0 / (1.0 - alpha);
    let half = 0.5 * xi;
    let d = moc.breakpoint();
    let breaks: Vec<f64> = [(d - xi) * 0.5, (xi - d) * 0.5]
        .into_iter()
        .filter(|&eta| eta > 0.0 && eta < half)
        .map(|eta| (eta / half).powf(1.0 / p))
        .collect();
    Ok(integrate(
        |u| {
            if u <= 0.0 {
                return 0.0;
            }
            let eta = half * u.powf(p);
            dissipation_near_integrand(moc, alpha, xi, eta) * half * p * u.powf(p - 1.0)
        },
        0.0,
        1.0,
        &breaks,
        QuadOptions::default(),
    ))
}

/// `D₂`. The `-2ω(ξ)` part is integrated exactly; the difference part is
/// integrated numerically up to `Ξ` and by a convergent series beyond it.
pub fn dissipation_far(moc: &Moc, params: &ModelParams, xi: f64) -> Result<Integral, MocError> {
    moc.check_params(params)?;
    check_xi(xi)?;
    let alpha = params.alpha;
    let a2 = 2.0 * alpha;
    let d = moc.breakpoint();
    let big = cutoff(moc, xi);
    let lo = 0.5 * xi;
    let quad = integrate_log(
        |eta| (moc.value(2.0 * eta + xi) - moc.value(2.0 * eta - xi)) * eta.powf(-1.0 - a2),
        lo,
        big,
        &[0.5 * (d - xi), 0.5 * (d + xi)],
        QuadOptions::default(),
    );
    let constant = -2.0 * moc.value(xi) * lo.powf(-a2) / a2;

    // Beyond Ξ both arguments sit in the tail branch c x^e, and with
    // v = ξ/(2η) ≤ ρ = ξ/(2Ξ) ≤ 1/32,
    // (2η+ξ)^e - (2η-ξ)^e = 2 (2η)^e Σ_j C(e, 2j+1) v^{2j+1},
    // which integrates term by term against η^{-1-2α}.
    let (c, e) = moc.tail_terms().terms[1];
    let rho = xi / (2.0 * big);
    let mut binom = e;
    let mut sum = 0.0;
    let mut last = 0.0;
    for j in 0..200 {
        let k = (2 * j + 1) as f64;
        let t = binom * 2f64.powf(e - k) * xi.powf(k) * big.powf(e - k - a2) / (k + a2 - e);
        sum += t;
        last = t;
        if t.abs() <= 1e-17 * sum.abs() {
            break;
        }
        binom *= (e - k) * (e - k - 1.0) / ((k + 1.0) * (k + 2.0));
    }
    let tail = 2.0 * c * sum;
    // Remaining terms shrink at least geometrically with ratio ρ².
    let truncation = 2.0 * (c * last).abs() * rho * rho / (1.0 - rho * rho);
    Ok(quad
        + Integral {
            value: constant + tail,
            error: truncation + 4.0 * f64::EPSILON * (constant.abs() + tail.abs()),
        })
}

/// Safe upper bound on the dissipation term: the weaker of the closed bound
/// and the direct quadrature.
pub fn dissipation_bound(moc: &Moc, xi: f64, params: &ModelParams, c2: f64) -> Result<DissipationBound, MocError> {
    let near = dissipation_near(moc, params, xi)?;
    let far = dissipation_far(moc, params, xi)?;
    let q = (near + far).scaled(c2);
    let closed = if moc.lambda() == 1.0 {
        let a2 = 2.0 * params.alpha;
        Some(if xi <= moc.delta() {
            -c2 * xi.powf(moc.r() - a2)
        } else {
            -c2 * moc.value(xi) * xi.powf(-a2)
        })
    } else {
        None
    };
    let upper = closed.map_or(q.value + q.error, |c| c.max(q.value + q.error));
    let value = closed.map_or(q.value, |c| c.max(q.value));
    Ok(DissipationBound {
        value,
        error: upper - value,
        closed,
        quadrature: q.value,
        quadrature_error: q.error,
    })
}
