//! Initial data generators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigError, ExperimentConfig, InitialDataSpec, ModeSpec, Normalization};
use super::snapshot::read_snapshot;
use super::HarnessError;
use crate::spectral::{in_half_lattice, to_physical, wavenumber, Grid, SpectralField};

/// Largest `s` (exclusive) with `Σ |k|^{2s} |k|^{-2p} < ∞` over the 2D
/// lattice, i.e. the Sobolev class reached by slope `p` as the band grows.
pub fn sobolev_threshold(slope: f64) -> f64 {
    slope - 1.0
}

fn add_mode(field: &mut SpectralField, m: &ModeSpec) {
    let (k1, k2) = (m.k[0], m.k[1]);
    if k1 == 0 && k2 == 0 {
        let c = field.get(0, 0);
        field.set(0, 0, c + Complex64::new(m.amplitude * m.phase.cos(), 0.0));
        return;
    }
    // a cos(k·x + φ) = (a/2) e^{iφ} e^{ik·x} + c.c.
    let c = Complex64::from_polar(0.5 * m.amplitude, m.phase);
    let (k1, k2, c) = if in_half_lattice(k1, k2) {
        (k1, k2, c)
    } else {
        (-k1, -k2, c.conj())
    };
    let prev = field.get(k1, k2);
    field.set_pair(k1, k2, prev + c);
}

/// `Σ aᵢ cos(kᵢ·x + φᵢ)`.
pub fn multi_mode(grid: Grid, modes: &[ModeSpec]) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    for m in modes {
        add_mode(&mut f, m);
    }
    f
}

/// Mean-zero field with `|θ̂(k)| = amplitude · |k|^{-slope}` for
/// `k_min ≤ |k| ≤ k_max` and phases drawn from a ChaCha8 stream.
pub fn random_band_limited(grid: Grid, slope: f64, band: [f64; 2], seed: u64, amplitude: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpectralField::from_half_fn(grid, 0.0, |k1, k2| {
        // One draw per half-lattice mode keeps the stream aligned across bands.
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let k = wavenumber(k1, k2);
        if k >= band[0] && k <= band[1] {
            Complex64::from_polar(amplitude * k.powf(-slope), phase)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn normalized(field: SpectralField, how: Normalization, target: f64) -> Result<SpectralField, HarnessError> {
    let current = match how {
        Normalization::None => return Ok(field),
        Normalization::L2 => field.l2_sq().sqrt(),
        Normalization::Linf => to_physical(&field)?.max_abs(),
    };
    if current == 0.0 {
        return Ok(field);
    }
    Ok(field.scaled(target / current))
}

/// Builds `θ₀` on the configured grid.
pub fn generate_initial_data(cfg: &ExperimentConfig) -> Result<SpectralField, HarnessError> {
    let grid = cfg.grid.grid()?;
    match &cfg.initial_data {
        InitialDataSpec::SingleMode { k, amplitude, phase } => Ok(multi_mode(
            grid,
            &[ModeSpec {
                k: *k,
                amplitude: *amplitude,
                phase: *phase,
            }],
        )),
        InitialDataSpec::MultiMode { modes } => Ok(multi_mode(grid, modes)),
        InitialDataSpec::RandomBandLimited {
            slope,
            band,
            seed,
            amplitude,
            normalize,
        } => normalized(
            random_band_limited(grid, *slope, *band, *seed, *amplitude),
            *normalize,
            *amplitude,
        ),
        InitialDataSpec::File { path } => {
            let snap = read_snapshot(&cfg.resolve_input(path))?;
            let field = snap.spectral()?;
            if field.grid().n() > grid.n() {
                return Err(ConfigError::Invalid(format!(
                    "initial data file has N = {}, grid has N = {}",
                    field.grid().n(),
                    grid.n()
                ))
                .into());
            }
            Ok(field.resample(grid))
        }
    }
}
