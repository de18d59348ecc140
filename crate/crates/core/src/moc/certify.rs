//! Grid certification of `convection + dissipation < 0`, the parameter search
//! over `(δ, γ)`, and the smallness constant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{convection_bound, dissipation_bound};
use super::{Moc, MocError, MocRegime};
use crate::spectral::{ModelParams, Regime};

/// Constants `C₁` (convection) and `C₂` (dissipation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    /// Where the values came from, e.g. `"default"` or a config path.
    pub source: String,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            source: "default".into(),
        }
    }
}

impl Constants {
    pub fn new(c1: f64, c2: f64, source: impl Into<String>) -> Self {
        Self {
            c1,
            c2,
            source: source.into(),
        }
    }
}

/// A scalar requirement on `γ` that the certificate also checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCondition {
    pub name: String,
    pub satisfied: bool,
    /// Largest `γ` for which the condition holds at this `δ`.
    pub gamma_limit: f64,
    /// True when this is the tightest of the listed limits.
    pub binding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub moc: Moc,
    pub params: ModelParams,
    pub constants: Constants,
    pub xi_grid: Vec<f64>,
    /// Convection bound + dissipation bound at each grid point.
    pub margins: Vec<f64>,
    /// Numerical error attached to each margin.
    pub errors: Vec<f64>,
    pub convection: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub closed_dissipation: Vec<Option<f64>>,
    pub side_conditions: Vec<SideCondition>,
    /// Largest `margin + error` over the grid.
    pub worst_margin: f64,
    pub certified: bool,
    pub note: String,
    pub code_version: String,
}

const GRID_NOTE: &str = "negativity checked on a finite log-spaced grid only; \
as ξ→0 the margin behaves like -C₂ξ^{r-2α} and as ξ→∞ both terms scale like ω(ξ)ξ^{-2α}";

impl CertificateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Margin table with header
    /// `xi,convection,dissipation,closed_dissipation,margin,error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi,convection,dissipation,closed_dissipation,margin,error\n");
        for i in 0..self.xi_grid.len() {
            let closed = self.closed_dissipation[i].map_or(String::new(), |c| format!("{c:e}"));
            out.push_str(&format!(
                "{:e},{:e},{:e},{},{:e},{:e}\n",
                self.xi_grid[i], self.convection[i], self.dissipation[i], closed, self.margins[i], self.errors[i]
            ));
        }
        out
    }
}

/// Default range `[10⁻⁶δ, 10³δ]` (in the rescaled breakpoint) with 512 points.
pub fn default_xi_range(moc: &Moc) -> ((f64, f64), usize) {
    let d = moc.breakpoint();
    ((1e-6 * d, 1e3 * d), 512)
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let ratio = (hi / lo).ln();
    let mut v: Vec<f64> = (0..points)
        .map(|i| lo * (ratio * i as f64 / (points - 1) as f64).exp())
        .collect();
    v[points - 1] = hi;
    v
}

fn side_conditions(moc: &Moc) -> Vec<SideCondition> {
    let d = moc.delta();
    let g = moc.gamma();
    let mut out = Vec::new();
    match moc.regime() {
        MocRegime::Subcritical => {
            let tau = moc.tail_exponent();
            let sigma2 = tau + 1.0;
            // γ ≤ ½δ^τ makes ω(ξ)ξ^{τ-1} ≥ γ for ξ > δ.
            out.push(("tail_coefficient_cap", 0.5 * d.powf(tau)));
            // (2/2^{2α+2β})γ ≤ ω(ξ)ξ^{2α+2β}, tightest as ξ → δ+.
            out.push((
                "doubling_condition",
                moc.value_at_breakpoint() * d.powf(sigma2) * 2f64.powf(sigma2) / 2.0,
            ));
        }
        MocRegime::Supercritical => {
            out.push(("tail_coefficient_cap", 0.5 * (1.0 - moc.tail_exponent())));
        }
    }
    let tightest = out.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    out.into_iter()
        .map(|(name, limit)| SideCondition {
            name: name.to_string(),
            satisfied: g <= limit,
            gamma_limit: limit,
            binding: limit == tightest,
        })
        .collect()
}

fn check_range(range: (f64, f64), points: usize) -> Result<(), MocError> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(MocError::InvalidRange(format!("need 0 < lo < hi, got ({lo}, {hi})")));
    }
    if points < 2 {
        return Err(MocError::InvalidRange(format!("need at least 2 points, got {points}")));
    }
    Ok(())
}

/// Evaluates margins on a log grid. With `stop_early` the scan ends at the
/// first nonnegative margin (the report is then truncated there).
pub fn certify_with(
    moc: &Moc,
    params: &ModelParams,
    constants: &Constants,
    range: (f64, f64),
    points: usize,
    stop_early: bool,
) -> Result<CertificateReport, MocError> {
    moc.validate()?;
    moc.check_params(params)?;
    check_range(range, points)?;
    let grid = log_grid(range.0, range.1, points);
    let mut report = CertificateReport {
        moc: *moc,
        params: *params,
        constants: constants.clone(),
        xi_grid: Vec::with_capacity(points),
        margins: Vec::with_capacity(points),
        errors: Vec::with_capacity(points),
        convection: Vec::with_capacity(points),
        dissipation: Vec::with_capacity(points),
        closed_dissipation: Vec::with_capacity(points),
        side_conditions: side_conditions(moc),
        worst_margin: f64::NEG_INFINITY,
        certified: false,
        note: GRID_NOTE.to_string(),
        code_version: crate::CODE_VERSION.to_string(),
    };
    let sides_ok = report.side_conditions.iter().all(|c| c.satisfied);
    let mut all_negative = true;
    let evaluate = |xi: f64| -> Result<_, MocError> {
        let c = convection_bound(moc, xi, params, constants.c1)?;
        let d = dissipation_bound(moc, xi, params, constants.c2)?;
        Ok((xi, c, d))
    };
    let rows: Vec<_> = if stop_early {
        let mut rows = Vec::new();
        // Chunked so the scan stays parallel but can still stop early.
        for chunk in grid.chunks(32) {
            let part: Result<Vec<_>, MocError> = chunk.par_iter().map(|&x| evaluate(x)).collect();
            let part = part?;
            let failed = part
                .iter()
                .any(|(_, c, d)| !(c.value + d.value + c.error + d.error < 0.0));
            rows.extend(part);
            if failed {
                break;
            }
        }
        rows
    } else {
        let rows: Result<Vec<_>, MocError> = grid.par_iter().map(|&x| evaluate(x)).collect();
        rows?
    };
    for (xi, c, d) in rows {
        let margin = c.value + d.value;
        let error = c.error + d.error;
        let upper = margin + error;
        if !(upper < 0.0) {
            all_negative = false;
        }
        report.worst_margin = if upper.is_nan() {
            f64::NAN
        } else {
            report.worst_margin.max(upper)
        };
        report.xi_grid.push(xi);
        report.margins.push(margin);
        report.errors.push(error);
        report.convection.push(c.value);
        report.dissipation.push(d.value);
        report.closed_dissipation.push(d.closed);
    }
    report.certified = all_negative && sides_ok && report.xi_grid.len() == points;
    Ok(report)
}

/// Full grid certification; refuses moduli that violate their invariants.
pub fn certify(
    moc: &Moc,
    params: &ModelParams,
    constants: &Constants,
    range: (f64, f64),
    points: usize,
) -> Result<CertificateReport, MocError> {
    certify_with(moc, params, constants, range, points, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchInputs {
    pub r: f64,
    /// Required for the supercritical family, ignored otherwise.
    pub tail_exponent: Option<f64>,
    pub constants: Constants,
    /// Number of values tried for each of `δ` and `γ`: `1, ½, …, 2^{1-budget}`.
    pub budget: usize,
    /// Grid points per certification.
    pub points: usize,
}

impl SearchInputs {
    pub fn new(r: f64, tail_exponent: Option<f64>) -> Self {
        Self {
            r,
            tail_exponent,
            constants: Constants::default(),
            budget: 16,
            points: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Certified modulus, when one was found.
    pub moc: Option<Moc>,
    /// Full report for the returned modulus, or for the candidate with the
    /// smallest worst margin when nothing certified.
    pub report: Option<CertificateReport>,
    pub candidates: usize,
    pub invalid: usize,
    pub budget: usize,
}

impl SearchOutcome {
    pub fn found(&self) -> bool {
        self.moc.is_some()
    }
}

fn build(params: &ModelParams, inputs: &SearchInputs, delta: f64, gamma: f64) -> Result<Moc, MocError> {
    match params.regime() {
        Regime::Subcritical => Moc::subcritical(params, inputs.r, delta, gamma),
        Regime::Supercritical => {
            let t = inputs
                .tail_exponent
                .ok_or_else(|| MocError::Invalid("supercritical search needs a tail exponent".into()))?;
            Moc::supercritical(params, inputs.r, t, delta, gamma)
        }
        Regime::Critical => Err(MocError::Invalid("no explicit family for the critical case".into())),
    }
}

/// Sweeps `δ = 1, ½, …` and, for each, `γ = 1, ½, …`; returns the largest
/// certified `δ` and, for it, the largest certified `γ`.
pub fn search_parameters(params: &ModelParams, inputs: &SearchInputs) -> Result<SearchOutcome, MocError> {
    params.validate().map_err(|e| MocError::Invalid(e.to_string()))?;
    if params.regime() == Regime::Critical {
        return Err(MocError::Invalid("no explicit family for the critical case".into()));
    }
    let values: Vec<f64> = (0..inputs.budget).map(|i| 0.5f64.powi(i as i32)).collect();
    let mut candidates = 0;
    let mut invalid = 0;
    let mut best: Option<CertificateReport> = None;
    for &delta in &values {
        let mocs: Vec<Moc> = values
            .iter()
            .filter_map(|&gamma| {
                candidates += 1;
                match build(params, inputs, delta, gamma) {
                    Ok(m) => Some(m),
                    Err(_) => {
                        invalid += 1;
                        None
                    }
                }
            })
            .collect();
        let reports: Result<Vec<CertificateReport>, MocError> = mocs
            .par_iter()
            .map(|m| {
                let (range, _) = default_xi_range(m);
                certify_with(m, params, &inputs.constants, range, inputs.points, true)
            })
            .collect();
        // `mocs` is ordered by decreasing γ, so the first success is the largest.
        for rep in reports? {
            if rep.certified {
                let (range, _) = default_xi_range(&rep.moc);
                let full = certify(&rep.moc, params, &inputs.constants, range, inputs.points)?;
                return Ok(SearchOutcome {
                    moc: Some(full.moc),
                    report: Some(full),
                    candidates,
                    invalid,
                    budget: inputs.budget,
                });
            }
            if best.as_ref().is_none_or(|b| rep.worst_margin < b.worst_margin) {
                best = Some(rep);
            }
        }
    }
    Ok(SearchOutcome {
        moc: None,
        report: best,
        candidates,
        invalid,
        budget: inputs.budget,
    })
}

/// `c_{α,β} = ½(δ - δ^r)^{2α+2β-1}`.
pub fn smallness_constant(moc: &Moc, params: &ModelParams) -> Result<f64, MocError> {
    moc.check_params(params)?;
    if moc.regime() != MocRegime::Supercritical {
        return Err(MocError::RegimeMismatch {
            moc: moc.regime(),
            model: params.regime(),
        });
    }
    let sigma = params.alpha + params.beta;
    Ok(0.5 * moc.value_at_breakpoint().powf(2.0 * sigma - 1.0))
}

/// Sets `λ^{2α+2β-1} = 2 ‖∇θ₀‖_{L^∞}`.
pub fn rescale_for_data(moc: &Moc, grad_sup: f64) -> Result<Moc, MocError> {
    if !(grad_sup > 0.0 && grad_sup.is_finite()) {
        return Err(MocError::InvalidRange(format!(
            "gradient sup must be positive, got {grad_sup}"
        )));
    }
    let p = 2.0 * (moc.alpha() + moc.beta()) - 1.0;
    moc.with_lambda((2.0 * grad_sup).powf(1.0 / p))
}
