//! Integrating-factor RK4 (Lawson) time stepping.
//!
//! Writing `L(k) = ν|k|^{2α}` and `E(τ) = e^{-Lτ}`, one step of size `h` is
//!
//! ```text
//! k₁ = B(θₙ)
//! k₂ = B(E(h/2)(θₙ + h/2 k₁))
//! k₃ = B(E(h/2)θₙ + h/2 k₂)
//! k₄ = B(E(h)θₙ + h E(h/2) k₃)
//! θₙ₊₁ = E(h)θₙ + h/6 (E(h)k₁ + 2E(h/2)(k₂ + k₃) + k₄)
//! ```
//!
//! which is classical RK4 on `ξ = E(-(t - tₙ))θ`. With `B ≡ 0` the step is the
//! exact factor `E(h)`. The dissipated energy `2ν∫‖Λ^αθ‖²` is accumulated
//! with the same stage values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{RecordError, RunRecord};
use crate::galerkin::{nonlinear_term, GalerkinError, NonlinearEvaluator};
use crate::reduce::pairwise_sum;
use crate::spectral::{self, velocity_from_theta, wavenumber, ModelParams, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite state produced at t = {time}")]
    NonFinite { time: f64 },
    #[error(transparent)]
    Galerkin(#[from] GalerkinError),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("step failed at t = {time}: {source}")]
    Step { time: f64, source: StepError },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("invalid run: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub cfl_safety: f64,
    pub adaptive: bool,
    pub t_end: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            cfl_safety: 0.5,
            adaptive: false,
            t_end: 1.0,
        }
    }
}

impl StepperConfig {
    pub fn fixed(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(StepError::InvalidConfig(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(StepError::InvalidConfig(format!(
                "cfl_safety = {} not in (0, 1]",
                self.cfl_safety
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(StepError::InvalidConfig(format!(
                "t_end = {} must be nonnegative",
                self.t_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratingFactorState {
    pub theta: SpectralField,
    pub time: f64,
}

impl IntegratingFactorState {
    pub fn new(theta: SpectralField) -> Self {
        Self { theta, time: 0.0 }
    }
}

/// Result of one step: the new state, the step actually taken, and the
/// dissipated energy over it.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub state: IntegratingFactorState,
    pub dt: f64,
    pub dissipated: f64,
}

struct Decay {
    rates: Vec<f64>,
}

impl Decay {
    fn new(theta: &SpectralField, params: &ModelParams) -> Self {
        let rates = theta
            .grid()
            .modes()
            .map(|(k1, k2)| {
                if k1 == 0 && k2 == 0 {
                    0.0
                } else {
                    params.dissipation_rate(wavenumber(k1, k2))
                }
            })
            .collect();
        Self { rates }
    }

    fn factors(&self, tau: f64) -> Vec<f64> {
        self.rates.iter().map(|r| (-r * tau).exp()).collect()
    }

    /// `2 Σ ν|k|^{2α} |θ̂|²`.
    fn dissipation(&self, theta: &SpectralField) -> f64 {
        let terms: Vec<f64> = theta
            .coeffs()
            .iter()
            .zip(&self.rates)
            .map(|(c, r)| 2.0 * r * c.norm_sqr())
            .collect();
        pairwise_sum(&terms)
    }
}

fn scale_modes(field: &SpectralField, factors: &[f64]) -> SpectralField {
    let mut out = field.clone();
    for (c, f) in out.coeffs_mut().iter_mut().zip(factors) {
        *c *= *f;
    }
    out
}

/// Largest physical speed `max |u|` on the grid.
pub fn max_speed(theta: &SpectralField, params: &ModelParams) -> Result<f64, StepError> {
    let (u1, u2) = velocity_from_theta(theta, params).map_err(GalerkinError::from)?;
    let p1 = spectral::to_physical(&u1).map_err(GalerkinError::from)?;
    let p2 = spectral::to_physical(&u2).map_err(GalerkinError::from)?;
    Ok(p1
        .values()
        .iter()
        .zip(p2.values())
        .map(|(a, b)| a.hypot(*b))
        .fold(0.0, f64::max))
}

/// Adaptive runs stop with [`Termination::BlowUpSuspected`] once the CFL
/// step drops below this fraction of `dt`.
pub const DT_COLLAPSE_RATIO: f64 = 1e-8;

/// Step size honoring the CFL bound `dt ≤ safety · Δx / max|u|` in adaptive mode.
pub fn admissible_dt(
    theta: &SpectralField,
    params: &ModelParams,
    cfg: &StepperConfig,
    evaluator: &NonlinearEvaluator,
) -> Result<f64, StepError> {
    if !cfg.adaptive || evaluator.mode() == crate::galerkin::EvaluatorMode::Disabled {
        return Ok(cfg.dt);
    }
    let speed = max_speed(theta, params)?;
    if speed == 0.0 {
        return Ok(cfg.dt);
    }
    Ok(cfg.dt.min(cfg.cfl_safety * theta.grid().dx() / speed))
}

/// One Lawson-RK4 step of exactly `dt`.
pub fn step_exact(
    state: &IntegratingFactorState,
    params: &ModelParams,
    dt: f64,
    evaluator: &NonlinearEvaluator,
) -> Result<StepReport, StepError> {
    if !(dt > 0.0) {
        return Err(StepError::InvalidConfig(format!("dt = {dt} must be positive")));
    }
    let decay = Decay::new(&state.theta, params);
    let half = decay.factors(0.5 * dt);
    let full = decay.factors(dt);
    let b = |theta: &SpectralField| nonlinear_term(theta, params, evaluator);
    let theta_n = &state.theta;

    let k1 = b(theta_n)?;
    let s2 = scale_modes(&theta_n.axpy(0.5 * dt, &k1), &half);
    let k2 = b(&s2)?;
    let theta_half = scale_modes(theta_n, &half);
    let s3 = theta_half.axpy(0.5 * dt, &k2);
    let k3 = b(&s3)?;
    let s4 = scale_modes(theta_n, &full).axpy(dt, &scale_modes(&k3, &half));
    let k4 = b(&s4)?;

    let combo = scale_modes(&k1, &full)
        .axpy(2.0, &scale_modes(&k2.axpy(1.0, &k3), &half))
        .axpy(1.0, &k4);
    let next = scale_modes(theta_n, &full).axpy(dt / 6.0, &combo);

    let dissipated = dt / 6.0
        * (decay.dissipation(theta_n)
            + 2.0 * decay.dissipation(&s2)
            + 2.0 * decay.dissipation(&s3)
            + decay.dissipation(&s4));

    let time = state.time + dt;
    if !next.is_finite() || !dissipated.is_finite() {
        return Err(StepError::NonFinite { time });
    }
    debug_assert!(next.is_exactly_hermitian());
    Ok(StepReport {
        state: IntegratingFactorState { theta: next, time },
        dt,
        dissipated,
    })
}

/// One step using `cfg.dt`, reduced by the CFL bound in adaptive mode.
pub fn step(
    state: &IntegratingFactorState,
    params: &ModelParams,
    cfg: &StepperConfig,
    evaluator: &NonlinearEvaluator,
) -> Result<StepReport, StepError> {
    cfg.validate()?;
    let dt = admissible_dt(&state.theta, params, cfg, evaluator)?;
    step_exact(state, params, dt, evaluator)
}

/// Diagnostic callback invoked at every scheduled sample.
pub trait Observer {
    fn columns(&self) -> Vec<String>;
    fn observe(&mut self, time: f64, theta: &SpectralField, params: &ModelParams) -> Vec<f64>;
}

/// Sample times for a run, strictly increasing and starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSchedule {
    times: Vec<f64>,
}

impl SampleSchedule {
    pub fn explicit(mut times: Vec<f64>, t_end: f64) -> Self {
        times.push(0.0);
        times.push(t_end);
        times.retain(|t| *t >= 0.0 && *t <= t_end);
        times.sort_by(f64::total_cmp);
        times.dedup();
        Self { times }
    }

    pub fn uniform(t_end: f64, intervals: usize) -> Self {
        let n = intervals.max(1);
        Self::explicit((0..=n).map(|i| t_end * i as f64 / n as f64).collect(), t_end)
    }

    /// `0` followed by `count` log-spaced times in `[t_min, t_end]`.
    pub fn logarithmic(t_min: f64, t_end: f64, count: usize) -> Self {
        if t_end <= 0.0 || count == 0 {
            return Self::explicit(vec![], t_end);
        }
        let t_min = t_min.min(t_end);
        let n = count.max(2) - 1;
        let ratio = (t_end / t_min).ln();
        let mut times: Vec<f64> = (0..=n).map(|i| t_min * (ratio * i as f64 / n as f64).exp()).collect();
        *times.last_mut().expect("nonempty") = t_end;
        Self::explicit(times, t_end)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowUpSuspected { time: f64 },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub termination: Termination,
    pub final_state: IntegratingFactorState,
    pub steps: usize,
}

/// Columns every record carries ahead of observer columns.
pub const BUILTIN_COLUMNS: [&str; 3] = ["l2_sq", "dissipation_integral", "energy_residual"];

/// Integrates to `cfg.t_end`, landing exactly on every scheduled time.
///
/// `energy_residual` is `‖θ(t)‖² + 2ν∫₀ᵗ‖Λ^αθ‖² - ‖θ₀‖²`.
pub fn run(
    theta0: &SpectralField,
    params: &ModelParams,
    cfg: &StepperConfig,
    evaluator: &NonlinearEvaluator,
    observers: &mut [Box<dyn Observer + '_>],
    schedule: &SampleSchedule,
) -> Result<RunOutcome, RunError> {
    cfg.validate().map_err(|source| RunError::Step { time: 0.0, source })?;
    theta0.check_hermitian().map_err(|e| RunError::Invalid(e.to_string()))?;
    let mut columns: Vec<String> = BUILTIN_COLUMNS.iter().map(|s| s.to_string()).collect();
    for obs in observers.iter() {
        columns.extend(obs.columns());
    }
    let mut record = RunRecord::new(columns, *params, theta0.grid(), *cfg);

    let e0 = theta0.l2_sq();
    let mut dissipated = 0.0;
    let take_sample = |record: &mut RunRecord,
                       observers: &mut [Box<dyn Observer + '_>],
                       t: f64,
                       theta: &SpectralField,
                       dissipated: f64|
     -> Result<(), RunError> {
        let l2 = theta.l2_sq();
        let mut row = vec![l2, dissipated, l2 + dissipated - e0];
        for obs in observers.iter_mut() {
            row.extend(obs.observe(t, theta, params));
        }
        record.push(t, row)?;
        Ok(())
    };

    let mut state = IntegratingFactorState {
        theta: theta0.clone(),
        time: 0.0,
    };
    take_sample(&mut record, observers, 0.0, &state.theta, 0.0)?;
    let mut steps = 0;
    let targets: Vec<f64> = schedule
        .times()
        .iter()
        .copied()
        .filter(|t| *t > 0.0 && *t <= cfg.t_end)
        .collect();
    for target in targets {
        while state.time < target {
            let dt_cfl = admissible_dt(&state.theta, params, cfg, evaluator).map_err(|source| RunError::Step {
                time: state.time,
                source,
            })?;
            if !(dt_cfl >= DT_COLLAPSE_RATIO * cfg.dt) {
                return Ok(RunOutcome {
                    record,
                    termination: Termination::BlowUpSuspected { time: state.time },
                    final_state: state,
                    steps,
                });
            }
            let remaining = target - state.time;
            // Avoid a sliver step right before a sample time.
            let dt = if remaining <= dt_cfl * (1.0 + 1e-9) {
                remaining
            } else {
                dt_cfl
            };
            match step_exact(&state, params, dt, evaluator) {
                Ok(report) => {
                    dissipated += report.dissipated;
                    state = report.state;
                    if remaining == dt {
                        state.time = target;
                    }
                    steps += 1;
                }
                Err(StepError::NonFinite { time }) => {
                    return Ok(RunOutcome {
                        record,
                        termination: Termination::BlowUpSuspected { time },
                        final_state: state,
                        steps,
                    });
                }
                Err(source) => {
                    return Err(RunError::Step {
                        time: state.time,
                        source,
                    })
                }
            }
        }
        take_sample(&mut record, observers, state.time, &state.theta, dissipated)?;
    }
    Ok(RunOutcome {
        record,
        termination: Termination::Completed,
        final_state: state,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    #[test]
    fn pure_decay_step_is_exact() {
        let grid = Grid::new(4, 10).unwrap();
        let params = ModelParams::new(0.5, 0.7, 1.0).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(2, 0, Complex64::new(0.8, -0.3));
        let state = IntegratingFactorState::new(theta.clone());
        for dt in [1e-3, 0.1, 0.77, 3.0] {
            let r = step_exact(&state, &params, dt, &NonlinearEvaluator::disabled()).unwrap();
            let expected = theta.get(2, 0) * (-2.0 * dt).exp();
            assert!((r.state.theta.get(2, 0) - expected).norm() <= 1e-14 * expected.norm());
        }
    }

    #[test]
    fn zero_field_stays_zero() {
        let grid = Grid::new(4, 10).unwrap();
        let params = ModelParams::new(0.5, 0.7, 1.0).unwrap();
        let state = IntegratingFactorState::new(SpectralField::zeros(grid));
        let r = step(
            &state,
            &params,
            &StepperConfig::fixed(0.1, 1.0),
            &NonlinearEvaluator::pseudospectral(),
        )
        .unwrap();
        assert_eq!(r.state.theta.max_abs(), 0.0);
        assert_eq!(r.dissipated, 0.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(StepperConfig::fixed(0.0, 1.0).validate().is_err());
        assert!(StepperConfig {
            cfl_safety: 1.5,
            ..StepperConfig::default()
        }
        .validate()
        .is_err());
        assert!(StepperConfig::fixed(0.1, -1.0).validate().is_err());
    }

    #[test]
    fn schedules() {
        let s = SampleSchedule::logarithmic(1e-3, 1.0, 4);
        assert_eq!(s.times().len(), 5);
        assert_eq!(s.times()[0], 0.0);
        assert_eq!(*s.times().last().unwrap(), 1.0);
        assert!((s.times()[1] - 1e-3).abs() < 1e-15);
        assert_eq!(SampleSchedule::uniform(1.0, 4).times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(SampleSchedule::logarithmic(1e-3, 0.0, 4).times(), &[0.0]);
    }

    #[test]
    fn zero_horizon_run_has_only_initial_sample() {
        let grid = Grid::new(3, 8).unwrap();
        let params = ModelParams::new(0.5, 0.7, 1.0).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(1, 1, Complex64::new(0.1, 0.0));
        let cfg = StepperConfig::fixed(0.01, 0.0);
        let out = run(
            &theta,
            &params,
            &cfg,
            &NonlinearEvaluator::pseudospectral(),
            &mut [],
            &SampleSchedule::uniform(0.0, 4),
        )
        .unwrap();
        assert_eq!(out.record.len(), 1);
        assert_eq!(out.steps, 0);
        assert_eq!(out.termination, Termination::Completed);
    }

    #[test]
    fn adaptive_mode_reduces_dt() {
        // M = 12 puts a node at x₁ = π/2 where |u| peaks.
        let grid = Grid::new(4, 12).unwrap();
        let params = ModelParams::new(0.5, 0.7, 1.0).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(1, 0, Complex64::new(50.0, 0.0));
        let cfg = StepperConfig {
            dt: 1.0,
            adaptive: true,
            ..StepperConfig::default()
        };
        let dt = admissible_dt(&theta, &params, &cfg, &NonlinearEvaluator::pseudospectral()).unwrap();
        let speed = max_speed(&theta, &params).unwrap();
        assert!((speed - 100.0).abs() < 1e-10);
        assert!((dt - 0.5 * grid.dx() / 100.0).abs() < 1e-15);
        let r = step(
            &IntegratingFactorState::new(theta),
            &params,
            &cfg,
            &NonlinearEvaluator::pseudospectral(),
        )
        .unwrap();
        assert_eq!(r.dt, dt);
    }

    #[test]
    fn huge_steps_signal_blow_up() {
        let grid = Grid::new(6, 14).unwrap();
        let params = ModelParams::new(0.1, 0.6, 1.0).unwrap();
        let theta = SpectralField::from_half_fn(grid, 0.0, |k1, k2| {
            Complex64::new(1e60 / (1 + k1.abs() + k2.abs()) as f64, 1e60)
        });
        let cfg = StepperConfig::fixed(10.0, 1000.0);
        let out = run(
            &theta,
            &params,
            &cfg,
            &NonlinearEvaluator::pseudospectral(),
            &mut [],
            &SampleSchedule::uniform(1000.0, 1),
        )
        .unwrap();
        assert!(matches!(out.termination, Termination::BlowUpSuspected { .. }));
    }

    #[test]
    fn collapsing_cfl_step_signals_blow_up() {
        let grid = Grid::new(6, 14).unwrap();
        let params = ModelParams::new(0.5, 0.6, 1.0).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(1, 0, Complex64::new(1e9, 0.0));
        let cfg = StepperConfig {
            adaptive: true,
            ..StepperConfig::fixed(0.1, 1.0)
        };
        let out = run(
            &theta,
            &params,
            &cfg,
            &NonlinearEvaluator::pseudospectral(),
            &mut [],
            &SampleSchedule::uniform(1.0, 1),
        )
        .unwrap();
        assert_eq!(out.termination, Termination::BlowUpSuspected { time: 0.0 });
        assert_eq!(out.steps, 0);
    }
}
