//! Analyticity-radius estimates from the decay of shell maxima.
//!
//! For each shell `j ≤ |k| < j + 1` (`j ≥ 1`) the largest `|θ̂(k)|` and the
//! `|k|` where it is attained give one point `(κⱼ, log Aⱼ)`. Points below the
//! noise floor `1e-14 · max|θ̂|` are dropped. The model
//!
//! ```text
//! log A = c - p log κ - δ κ
//! ```
//!
//! is fitted by weighted least squares. A shell's weight ramps from 0 at the
//! floor to 1 at [`FLOOR_RAMP`] times the floor, so the estimate moves
//! continuously as shells decay through the floor. The algebraic term absorbs Sobolev-type decay,
//! so a pure power-law spectrum yields `δ ≈ 0` and a pure `e^{-a|k|}` spectrum
//! yields `δ = a`.

use serde::{Deserialize, Serialize};

use crate::spectral::{wavenumber, ModelParams, SpectralField};

/// Relative floor below which shell maxima are ignored.
pub const NOISE_FLOOR: f64 = 1e-14;
/// Fitted rates at or below this are reported as no exponential decay.
pub const DECAY_THRESHOLD: f64 = 1e-6;
/// Ratio above the noise floor at which a shell reaches full weight.
pub const FLOOR_RAMP: f64 = 100.0;
const MIN_SHELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Exponential,
    NoExponentialDecay,
    InsufficientShells,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityEstimate {
    /// Estimated radius `δ ≥ 0`.
    pub delta: f64,
    /// Algebraic exponent `p` of the joint fit.
    pub power: f64,
    /// RMS residual of the fit in `log A`.
    pub fit_residual: f64,
    pub shells_used: usize,
    /// `Y = Σ |k|⁶ |θ̂(k) e^{½ν|k|^{2α} t}|²`, when a time was supplied.
    pub y3: Option<f64>,
    pub status: FitStatus,
}

/// `(κ, max |θ̂|)` per nonempty shell above the noise floor.
pub fn shell_maxima(theta: &SpectralField) -> Vec<(f64, f64)> {
    let grid = theta.grid();
    let n = grid.n() as f64;
    let shells = (n * std::f64::consts::SQRT_2).floor() as usize + 1;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; shells + 1];
    let mut global: f64 = 0.0;
    for (c, (k1, k2)) in theta.coeffs().iter().zip(grid.modes()) {
        if k1 == 0 && k2 == 0 {
            continue;
        }
        let k = wavenumber(k1, k2);
        let a = c.norm();
        global = global.max(a);
        let j = k.floor() as usize;
        let slot = &mut best[j];
        match slot {
            Some((kk, aa)) if a < *aa || (a == *aa && k >= *kk) => {}
            _ => *slot = Some((k, a)),
        }
    }
    let floor = NOISE_FLOOR * global;
    best.into_iter()
        .flatten()
        .filter(|&(_, a)| a > floor && a > 0.0)
        .collect()
}

fn floor_weight(a: f64, floor: f64) -> f64 {
    ((a / floor).ln() / FLOOR_RAMP.ln()).clamp(0.0, 1.0)
}

/// Weighted least squares for `y ≈ c - p log κ - δ κ` over `(κ, A, w)`;
/// returns `(c, p, δ, weighted rms)`.
fn fit_log_linear(points: &[(f64, f64, f64)]) -> Option<(f64, f64, f64, f64)> {
    // Normal equations in the basis (1, -log κ, -κ).
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for &(k, a, w) in points {
        let row = [1.0, -k.ln(), -k];
        let y = a.ln();
        for i in 0..3 {
            aty[i] += w * row[i] * y;
            for j in 0..3 {
                ata[i][j] += w * row[i] * row[j];
            }
        }
    }
    let sol = solve3(ata, aty)?;
    let (sq, wsum) = points.iter().fold((0.0, 0.0), |(sq, ws), &(k, a, w)| {
        let pred = sol[0] - sol[1] * k.ln() - sol[2] * k;
        (sq + w * (a.ln() - pred).powi(2), ws + w)
    });
    Some((sol[0], sol[1], sol[2], (sq / wsum).sqrt()))
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in (row + 1)..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Radius estimate from the current spectrum.
pub fn analyticity_radius(theta: &SpectralField) -> AnalyticityEstimate {
    let points = shell_maxima(theta);
    let insufficient = AnalyticityEstimate {
        delta: 0.0,
        power: 0.0,
        fit_residual: f64::NAN,
        shells_used: points.len(),
        y3: None,
        status: FitStatus::InsufficientShells,
    };
    if points.len() < MIN_SHELLS {
        return insufficient;
    }
    let floor = NOISE_FLOOR * points.iter().map(|p| p.1).fold(0.0, f64::max);
    let weighted: Vec<(f64, f64, f64)> = points.iter().map(|&(k, a)| (k, a, floor_weight(a, floor))).collect();
    let Some((_, power, rate, rms)) = fit_log_linear(&weighted) else {
        return insufficient;
    };
    let (delta, status) = if rate > DECAY_THRESHOLD {
        (rate, FitStatus::Exponential)
    } else {
        (0.0, FitStatus::NoExponentialDecay)
    };
    AnalyticityEstimate {
        delta,
        power,
        fit_residual: rms,
        shells_used: points.len(),
        y3: None,
        status,
    }
}

/// `Y(t) = Σ |k|⁶ |θ̂(k)|² e^{ν|k|^{2α} t}`.
pub fn weighted_y(theta: &SpectralField, params: &ModelParams, time: f64) -> f64 {
    let terms: Vec<f64> = theta
        .coeffs()
        .iter()
        .zip(theta.grid().modes())
        .map(|(c, (k1, k2))| {
            let k = wavenumber(k1, k2);
            k.powi(6) * c.norm_sqr() * (params.dissipation_rate(k) * time).exp()
        })
        .collect();
    crate::reduce::pairwise_sum(&terms)
}

/// [`analyticity_radius`] together with `Y(t)` at run time `time`.
pub fn analyticity_radius_at(theta: &SpectralField, params: &ModelParams, time: f64) -> AnalyticityEstimate {
    AnalyticityEstimate {
        y3: Some(weighted_y(theta, params, time)),
        ..analyticity_radius(theta)
    }
}
