//! Scalar diagnostics of a spectral field and the observers that record them
//! during a run.

pub mod analyticity;
pub mod record;
pub mod sup;

use thiserror::Error;

pub use analyticity::{analyticity_radius, analyticity_radius_at, AnalyticityEstimate, FitStatus};
pub use record::{RecordError, RecordMetadata, RunRecord, Sample};
pub use sup::{linf_and_grad, linf_and_grad_with, SupNorms, SupOptions};

use crate::integrator::Observer;
use crate::reduce::pairwise_sum;
use crate::spectral::{self, wavenumber, ModelParams, SpectralError, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 2 samples with t > 0 in the window, found {0}")]
    InsufficientSamples(usize),
    #[error(transparent)]
    Record(#[from] RecordError),
}

fn weighted_sum(theta: &SpectralField, s: f64, include_mean: bool) -> f64 {
    let terms: Vec<f64> = theta
        .coeffs()
        .iter()
        .zip(theta.grid().modes())
        .map(|(c, (k1, k2))| {
            if k1 == 0 && k2 == 0 {
                if include_mean {
                    c.norm_sqr()
                } else {
                    0.0
                }
            } else {
                wavenumber(k1, k2).powf(2.0 * s) * c.norm_sqr()
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// `(|θ̂(0)|² + Σ_{k≠0} |k|^{2s}|θ̂(k)|²)^{1/2}`; the mean is dropped for `s < 0`.
pub fn sobolev_norm(theta: &SpectralField, s: f64) -> f64 {
    weighted_sum(theta, s, s >= 0.0).sqrt()
}

/// `(Σ_{k≠0} |k|^{2s}|θ̂(k)|²)^{1/2}`.
pub fn homogeneous_sobolev_norm(theta: &SpectralField, s: f64) -> f64 {
    weighted_sum(theta, s, false).sqrt()
}

/// `(mean |θ|^p)^{1/p}` by grid quadrature, which is exact for `p = 2` on
/// band-limited data.
pub fn lp_norm(theta: &SpectralField, p: f64) -> Result<f64, SpectralError> {
    let phys = spectral::to_physical(theta)?;
    let terms: Vec<f64> = phys.values().iter().map(|v| v.abs().powf(p)).collect();
    Ok((pairwise_sum(&terms) / terms.len() as f64).powf(1.0 / p))
}

/// Column name used for `‖θ‖_s` in run records.
pub fn sobolev_column(s: f64) -> String {
    format!("h_{s:.4}")
}

/// Column name used for the homogeneous norm.
pub fn homogeneous_sobolev_column(s: f64) -> String {
    format!("hdot_{s:.4}")
}

/// Least-squares slope of `log y` against `log t` over `t ∈ [lo, hi]`, `t > 0`.
pub fn log_log_slope(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64, FitError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, y)| *t > 0.0 && *t >= window.0 && *t <= window.1 && *y > 0.0)
        .map(|(t, y)| (t.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(FitError::InsufficientSamples(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::InsufficientSamples(1));
    }
    Ok(sxy / sxx)
}

/// Log-log slope of `‖θ(t)‖_{s+nα}` over `window`, read from the column
/// [`sobolev_column`]`(s + nα)` with `α` taken from the record metadata.
pub fn smoothing_rate_fit(record: &RunRecord, s: f64, n: u32, window: (f64, f64)) -> Result<f64, FitError> {
    let order = s + n as f64 * record.metadata.params.alpha;
    let series = record.series(&sobolev_column(order))?;
    log_log_slope(&series, window)
}

/// Records `‖θ‖_s` for each configured order.
#[derive(Debug, Clone)]
pub struct SobolevObserver {
    pub orders: Vec<f64>,
    pub homogeneous: bool,
}

impl SobolevObserver {
    pub fn new(orders: Vec<f64>) -> Self {
        Self {
            orders,
            homogeneous: false,
        }
    }
}

impl Observer for SobolevObserver {
    fn columns(&self) -> Vec<String> {
        self.orders
            .iter()
            .map(|&s| {
                if self.homogeneous {
                    homogeneous_sobolev_column(s)
                } else {
                    sobolev_column(s)
                }
            })
            .collect()
    }

    fn observe(&mut self, _time: f64, theta: &SpectralField, _params: &ModelParams) -> Vec<f64> {
        self.orders
            .iter()
            .map(|&s| {
                if self.homogeneous {
                    homogeneous_sobolev_norm(theta, s)
                } else {
                    sobolev_norm(theta, s)
                }
            })
            .collect()
    }
}

/// Records `linf` and `grad_linf`.
#[derive(Debug, Clone, Default)]
pub struct SupNormObserver {
    pub options: SupOptions,
}

impl Observer for SupNormObserver {
    fn columns(&self) -> Vec<String> {
        vec!["linf".into(), "grad_linf".into()]
    }

    fn observe(&mut self, _time: f64, theta: &SpectralField, _params: &ModelParams) -> Vec<f64> {
        match linf_and_grad_with(theta, self.options) {
            Ok(r) => vec![r.linf, r.grad],
            Err(_) => vec![f64::NAN, f64::NAN],
        }
    }
}

/// Records the analyticity estimate. Status is encoded as 0 = exponential,
/// 1 = no exponential decay, 2 = insufficient shells.
#[derive(Debug, Clone, Default)]
pub struct AnalyticityObserver;

impl Observer for AnalyticityObserver {
    fn columns(&self) -> Vec<String> {
        [
            "analyticity_delta",
            "analyticity_power",
            "analyticity_residual",
            "analyticity_y3",
            "analyticity_status",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    fn observe(&mut self, time: f64, theta: &SpectralField, params: &ModelParams) -> Vec<f64> {
        let est = analyticity_radius_at(theta, params, time);
        let status = match est.status {
            FitStatus::Exponential => 0.0,
            FitStatus::NoExponentialDecay => 1.0,
            FitStatus::InsufficientShells => 2.0,
        };
        vec![
            est.delta,
            est.power,
            est.fit_residual,
            est.y3.unwrap_or(f64::NAN),
            status,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    #[test]
    fn single_mode_h1() {
        let grid = Grid::minimal(4).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(2, 0, Complex64::new(0.5, 0.0));
        assert!((sobolev_norm(&theta, 1.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mean_convention() {
        let grid = Grid::minimal(4).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set(0, 0, Complex64::new(3.0, 0.0));
        theta.set_pair(1, 0, Complex64::new(0.5, 0.0));
        assert!((sobolev_norm(&theta, 2.0) - (9.0f64 + 0.5).sqrt()).abs() < 1e-14);
        assert!((sobolev_norm(&theta, -1.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((homogeneous_sobolev_norm(&theta, 2.0) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parseval_matches_quadrature() {
        let grid = Grid::new(5, 12).unwrap();
        let theta = SpectralField::from_half_fn(grid, 0.4, |k1, k2| {
            Complex64::new((k1 as f64 * 0.37).sin(), (k2 as f64 * 1.3).cos()) / (1.0 + wavenumber(k1, k2)).powi(2)
        });
        let l2 = lp_norm(&theta, 2.0).unwrap();
        assert!((l2 - sobolev_norm(&theta, 0.0)).abs() < 1e-12 * l2);
    }

    #[test]
    fn slope_of_power_law() {
        let series: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = 1e-3 * 1.3f64.powi(i);
                (t, 4.0 * t.powf(-0.37))
            })
            .collect();
        let slope = log_log_slope(&series, (0.0, 1.0)).unwrap();
        assert!((slope + 0.37).abs() < 1e-12);
        assert!(matches!(
            log_log_slope(&series, (10.0, 20.0)),
            Err(FitError::InsufficientSamples(0))
        ));
    }

    #[test]
    fn column_names() {
        assert_eq!(sobolev_column(1.75), "h_1.7500");
        assert_eq!(homogeneous_sobolev_column(-0.5), "hdot_-0.5000");
    }
}
