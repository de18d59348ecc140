//! Experiment configuration: a TOML file with fixed sections and strict key
//! checking. See `docs/formats.md` for the schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::galerkin::{EvaluatorMode, NonlinearEvaluator};
use crate::integrator::StepperConfig;
use crate::moc::Constants;
use crate::spectral::{Grid, ModelParams, Regime};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("regime mismatch: {0}")]
    Regime(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "one")]
    pub nu: f64,
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.alpha, self.beta, self.nu).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    /// Physical points per axis; `2N + 2` when absent.
    #[serde(default)]
    pub m: Option<usize>,
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let m = self.m.unwrap_or(2 * self.n + 2);
        Grid::new(self.n, m).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorChoice {
    #[default]
    Pseudospectral,
    Direct,
    Disabled,
}

impl EvaluatorChoice {
    pub fn evaluator(self) -> NonlinearEvaluator {
        NonlinearEvaluator::new(match self {
            EvaluatorChoice::Pseudospectral => EvaluatorMode::Pseudospectral,
            EvaluatorChoice::Direct => EvaluatorMode::DirectConvolution,
            EvaluatorChoice::Disabled => EvaluatorMode::Disabled,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    pub dt: f64,
    pub t_end: f64,
    pub adaptive: bool,
    pub cfl_safety: f64,
    pub evaluator: EvaluatorChoice,
}

impl Default for StepperSection {
    fn default() -> Self {
        let s = StepperConfig::default();
        Self {
            dt: s.dt,
            t_end: s.t_end,
            adaptive: s.adaptive,
            cfl_safety: s.cfl_safety,
            evaluator: EvaluatorChoice::default(),
        }
    }
}

impl StepperSection {
    pub fn stepper(&self) -> Result<StepperConfig, ConfigError> {
        let s = StepperConfig {
            dt: self.dt,
            cfl_safety: self.cfl_safety,
            adaptive: self.adaptive,
            t_end: self.t_end,
        };
        s.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(s)
    }
}

/// One Fourier mode `amplitude · cos(k·x + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: [i64; 2],
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Coefficients are `amplitude · |k|^{-slope}`.
    #[default]
    None,
    /// Rescaled so that `‖θ₀‖_{L²}` (mean-square, no `2π` factors) equals `amplitude`.
    L2,
    /// Rescaled so that the largest grid value of `|θ₀|` equals `amplitude`.
    Linf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    SingleMode {
        k: [i64; 2],
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    MultiMode {
        modes: Vec<ModeSpec>,
    },
    RandomBandLimited {
        slope: f64,
        /// Radial band `[k_min, k_max]` in `|k|`; `k_max ≤ √2·N`.
        band: [f64; 2],
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        normalize: Normalization,
    },
    /// A snapshot file; relative paths resolve against the config file.
    File {
        path: PathBuf,
    },
}

/// How the modulus of continuity is obtained. With `delta` and `gamma` both
/// set the modulus is built directly; otherwise the parameter search runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MocSection {
    /// Defaults to 1.5 (subcritical) or 1.2 (supercritical).
    #[serde(default)]
    pub r: Option<f64>,
    /// Supercritical only; defaults to 0.9.
    #[serde(default)]
    pub tail_exponent: Option<f64>,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// A modulus in JSON form; overrides every other key.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

fn default_budget() -> usize {
    16
}

fn default_points() -> usize {
    512
}

impl Default for MocSection {
    fn default() -> Self {
        Self {
            r: None,
            tail_exponent: None,
            c1: 1.0,
            c2: 1.0,
            budget: default_budget(),
            points: default_points(),
            delta: None,
            gamma: None,
            file: None,
        }
    }
}

impl MocSection {
    pub fn r_for(&self, regime: Regime) -> f64 {
        self.r.unwrap_or(if regime == Regime::Subcritical { 1.5 } else { 1.2 })
    }

    pub fn tail_exponent_for(&self, regime: Regime) -> Option<f64> {
        match regime {
            Regime::Supercritical => Some(self.tail_exponent.unwrap_or(0.9)),
            _ => None,
        }
    }

    pub fn constants(&self) -> Constants {
        Constants::new(self.c1, self.c2, "config")
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.c1 > 0.0 && self.c1.is_finite() && self.c2 > 0.0 && self.c2.is_finite()) {
            return invalid(format!(
                "moc constants c1 = {}, c2 = {} must be positive",
                self.c1, self.c2
            ));
        }
        if self.budget == 0 || self.budget > 60 {
            return invalid(format!("moc.budget = {} not in [1, 60]", self.budget));
        }
        if self.points < 2 {
            return invalid("moc.points must be at least 2");
        }
        if self.delta.is_some() != self.gamma.is_some() {
            return invalid("moc.delta and moc.gamma must be given together");
        }
        Ok(())
    }
}

fn default_samples() -> usize {
    16
}

fn default_slack() -> f64 {
    0.02
}

fn default_orders() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn default_smoothing_window() -> [f64; 2] {
    [1e-4, 1e-2]
}

fn default_analyticity_window() -> [f64; 2] {
    [0.01, 0.5]
}

fn yes() -> bool {
    true
}

/// The experiment to run and its own settings. `samples` is the number of
/// log-spaced record times in `[t_min, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    Decay {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        t_min: Option<f64>,
        #[serde(default = "default_orders")]
        sobolev_orders: Vec<f64>,
        #[serde(default = "yes")]
        sup_norms: bool,
    },
    Smoothing {
        s: f64,
        #[serde(default = "default_n_max")]
        n_max: u32,
        #[serde(default = "default_smoothing_window")]
        window: [f64; 2],
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        t_min: Option<f64>,
    },
    Analyticity {
        #[serde(default = "default_analyticity_window")]
        window: [f64; 2],
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        t_min: Option<f64>,
    },
    MocPreserve {
        #[serde(default)]
        moc: MocSection,
        #[serde(default = "default_slack")]
        slack: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        t_min: Option<f64>,
    },
    Convergence {
        /// Fine truncation; `2N` when absent.
        #[serde(default)]
        n_fine: Option<usize>,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        t_min: Option<f64>,
    },
    Certify {
        #[serde(default)]
        moc: MocSection,
    },
    SmallnessSweep {
        /// Multipliers applied to the initial datum.
        amplitudes: Vec<f64>,
        #[serde(default)]
        moc: MocSection,
        /// Also evolve each datum and track the modulus ratio.
        #[serde(default)]
        evolve: bool,
        #[serde(default = "default_slack")]
        slack: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        t_min: Option<f64>,
    },
}

fn default_n_max() -> u32 {
    2
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::Decay { .. } => "decay",
            ExperimentSpec::Smoothing { .. } => "smoothing",
            ExperimentSpec::Analyticity { .. } => "analyticity",
            ExperimentSpec::MocPreserve { .. } => "moc_preserve",
            ExperimentSpec::Convergence { .. } => "convergence",
            ExperimentSpec::Certify { .. } => "certify",
            ExperimentSpec::SmallnessSweep { .. } => "smallness_sweep",
        }
    }

    pub fn moc_section(&self) -> Option<&MocSection> {
        match self {
            ExperimentSpec::MocPreserve { moc, .. }
            | ExperimentSpec::Certify { moc }
            | ExperimentSpec::SmallnessSweep { moc, .. } => Some(moc),
            _ => None,
        }
    }

    /// `(samples, t_min)` for experiments that evolve a field.
    pub fn sampling(&self) -> Option<(usize, Option<f64>)> {
        match self {
            ExperimentSpec::Decay { samples, t_min, .. }
            | ExperimentSpec::Smoothing { samples, t_min, .. }
            | ExperimentSpec::Analyticity { samples, t_min, .. }
            | ExperimentSpec::MocPreserve { samples, t_min, .. }
            | ExperimentSpec::Convergence { samples, t_min, .. }
            | ExperimentSpec::SmallnessSweep { samples, t_min, .. } => Some((*samples, *t_min)),
            ExperimentSpec::Certify { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Relative directories resolve against the output root.
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
    /// Times at which the field is written to disk.
    pub snapshot_times: Vec<f64>,
    /// Also write spectral (`.spec`) snapshots.
    pub spectral_snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("gqg-output"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
            snapshot_times: Vec::new(),
            spectral_snapshots: false,
        }
    }
}

impl OutputSection {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    #[serde(default)]
    pub stepper: StepperSection,
    pub initial_data: InitialDataSpec,
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory of the config file, for resolving relative input paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialized form; formatting and key order in
    /// the source file do not matter.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn resolve_input(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        self.model.params()
    }

    /// The same config turned into a `certify` experiment, keeping any
    /// `[experiment.moc]` section.
    pub fn as_certify(&self) -> Result<Self, ConfigError> {
        let mut out = self.clone();
        out.experiment = ExperimentSpec::Certify {
            moc: self.experiment.moc_section().cloned().unwrap_or_default(),
        };
        out.validate()?;
        Ok(out)
    }

    /// Checks ranges and the regime gates; runs before any computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let params = self.params()?;
        let grid = self.grid.grid()?;
        self.stepper.stepper()?;
        self.validate_initial_data(grid)?;
        self.validate_experiment(&params, grid)?;
        for &t in &self.output.snapshot_times {
            if !(t >= 0.0 && t <= self.stepper.t_end) {
                return invalid(format!("snapshot time {t} outside [0, {}]", self.stepper.t_end));
            }
        }
        if self.output.formats.is_empty() {
            return invalid("output.formats is empty");
        }
        Ok(())
    }

    fn validate_initial_data(&self, grid: Grid) -> Result<(), ConfigError> {
        let n = grid.n() as i64;
        let check_k = |k: [i64; 2]| {
            if k[0].abs() > n || k[1].abs() > n {
                invalid(format!("mode {k:?} outside the lattice |k_i| <= {n}"))
            } else {
                Ok(())
            }
        };
        match &self.initial_data {
            InitialDataSpec::SingleMode { k, amplitude, phase } => {
                check_k(*k)?;
                if !amplitude.is_finite() || !phase.is_finite() {
                    return invalid("single_mode amplitude and phase must be finite");
                }
            }
            InitialDataSpec::MultiMode { modes } => {
                if modes.is_empty() {
                    return invalid("multi_mode needs at least one mode");
                }
                for m in modes {
                    check_k(m.k)?;
                    if !m.amplitude.is_finite() || !m.phase.is_finite() {
                        return invalid("multi_mode amplitudes and phases must be finite");
                    }
                }
            }
            InitialDataSpec::RandomBandLimited {
                slope, band, amplitude, ..
            } => {
                if !slope.is_finite() || !amplitude.is_finite() {
                    return invalid("random_band_limited slope and amplitude must be finite");
                }
                if !(band[0] > 0.0 && band[0] <= band[1]) {
                    return invalid(format!("band {band:?} must satisfy 0 < k_min <= k_max"));
                }
                // The square lattice reaches |k| = √2·N in its corners.
                let reach = std::f64::consts::SQRT_2 * grid.n() as f64;
                if band[1] > reach {
                    return invalid(format!("band {band:?} exceeds the lattice reach √2·N = {reach:.4}"));
                }
            }
            InitialDataSpec::File { .. } => {}
        }
        Ok(())
    }

    fn validate_experiment(&self, params: &ModelParams, grid: Grid) -> Result<(), ConfigError> {
        let t_end = self.stepper.t_end;
        if let Some((samples, t_min)) = self.experiment.sampling() {
            if samples == 0 {
                return invalid("experiment.samples must be positive");
            }
            if let Some(t) = t_min {
                if !(t > 0.0 && t <= t_end) {
                    return invalid(format!("experiment.t_min = {t} not in (0, t_end]"));
                }
            }
        }
        if let Some(moc) = self.experiment.moc_section() {
            moc.validate()?;
            check_moc_regime(params)?;
        }
        let sigma = params.alpha + params.beta;
        match &self.experiment {
            ExperimentSpec::Decay { sobolev_orders, .. } => {
                if sobolev_orders.iter().any(|s| !s.is_finite()) {
                    return invalid("sobolev_orders must be finite");
                }
            }
            ExperimentSpec::Smoothing { s, window, n_max, .. } => {
                if !s.is_finite() || *n_max == 0 {
                    return invalid("smoothing needs a finite s and n_max >= 1");
                }
                check_window(*window, t_end)?;
            }
            ExperimentSpec::Analyticity { window, .. } => check_window(*window, t_end)?,
            ExperimentSpec::MocPreserve { slack, .. } => check_slack(*slack)?,
            ExperimentSpec::Convergence { n_fine, .. } => {
                let nf = n_fine.unwrap_or(2 * grid.n());
                if nf <= grid.n() {
                    return invalid(format!("n_fine = {nf} must exceed N = {}", grid.n()));
                }
            }
            ExperimentSpec::Certify { .. } => {}
            ExperimentSpec::SmallnessSweep { amplitudes, slack, .. } => {
                if !(sigma < 1.0) {
                    return Err(ConfigError::Regime(format!(
                        "smallness_sweep requires alpha + beta < 1, got {sigma}"
                    )));
                }
                if amplitudes.is_empty() || amplitudes.iter().any(|a| !a.is_finite()) {
                    return invalid("smallness_sweep needs a nonempty list of finite amplitudes");
                }
                check_slack(*slack)?;
            }
        }
        Ok(())
    }
}

fn check_window(w: [f64; 2], t_end: f64) -> Result<(), ConfigError> {
    if !(w[0] > 0.0 && w[0] < w[1] && w[1] <= t_end) {
        return invalid(format!("window {w:?} must satisfy 0 < t0 < t1 <= t_end = {t_end}"));
    }
    Ok(())
}

fn check_slack(s: f64) -> Result<(), ConfigError> {
    if !(s >= 0.0 && s.is_finite()) {
        return invalid(format!("slack = {s} must be non-negative"));
    }
    Ok(())
}

/// The explicit moduli exist for `1 < α + β ≤ 3/2` with `α, β ∈ (1/2, 1)`
/// and for `1/2 < α + β < 1`.
fn check_moc_regime(params: &ModelParams) -> Result<(), ConfigError> {
    let sigma = params.alpha + params.beta;
    match params.regime() {
        Regime::Critical => Err(ConfigError::Regime("no explicit modulus for alpha + beta = 1".into())),
        Regime::Subcritical => {
            if !(params.alpha > 0.5 && params.alpha < 1.0 && params.beta > 0.5 && params.beta < 1.0) {
                return Err(ConfigError::Regime(format!(
                    "subcritical moduli need alpha, beta in (1/2, 1), got ({}, {})",
                    params.alpha, params.beta
                )));
            }
            Ok(())
        }
        Regime::Supercritical => {
            if !(sigma > 0.5) {
                return Err(ConfigError::Regime(format!("alpha + beta = {sigma} must exceed 1/2")));
            }
            Ok(())
        }
    }
}
