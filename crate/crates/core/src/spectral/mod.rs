//! Grids, fields and Fourier multipliers on the torus `[0, 2π)²`.
//!
//! Fields are expanded in the basis `e^{i k·x}` with `k` in the square lattice
//! `|k₁|, |k₂| ≤ N`. Coefficients are normalized so that
//! `Σ |θ̂(k)|² = (2π)⁻² ∫ θ²`, i.e. the forward transform divides by `M²`.
//! Lattice storage is lexicographic in `(k₁, k₂)`: index
//! `(k₁ + N)(2N + 1) + (k₂ + N)`.

mod fft;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reduce::pairwise_map;

pub use fft::Transform2d;

/// Relative tolerance for accepting a field as Hermitian / real.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: N = {n}, M = {m} (need N ≥ 1 and M ≥ 2N + 2)")]
    InvalidGrid { n: usize, m: usize },
    #[error("physical field has {got} samples, grid expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("Hermitian symmetry violated (defect {defect:e}, scale {scale:e})")]
    SymmetryViolation { defect: f64, scale: f64 },
    #[error("negative power {power} applied to a field with nonzero mean")]
    NegativePowerWithMean { power: f64 },
    #[error("grids differ: {0:?} vs {1:?}")]
    GridMismatch(Grid, Grid),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
}

/// Truncation `N` and physical resolution `M` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    m: usize,
}

impl Grid {
    pub fn new(n: usize, m: usize) -> Result<Self, SpectralError> {
        if n == 0 || m < 2 * n + 2 {
            return Err(SpectralError::InvalidGrid { n, m });
        }
        Ok(Self { n, m })
    }

    /// Smallest admissible physical grid, `M = 2N + 2`.
    pub fn minimal(n: usize) -> Result<Self, SpectralError> {
        Self::new(n, 2 * n + 2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Lattice side length `2N + 1`.
    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    /// Number of lattice modes.
    pub fn num_modes(&self) -> usize {
        self.side() * self.side()
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.m as f64
    }

    pub fn contains(&self, k1: i64, k2: i64) -> bool {
        let n = self.n as i64;
        k1.abs() <= n && k2.abs() <= n
    }

    /// Lattice index of `(k₁, k₂)`; panics outside the lattice.
    pub fn index(&self, k1: i64, k2: i64) -> usize {
        debug_assert!(self.contains(k1, k2), "mode ({k1},{k2}) outside lattice");
        let n = self.n as i64;
        ((k1 + n) as usize) * self.side() + (k2 + n) as usize
    }

    pub fn mode(&self, index: usize) -> (i64, i64) {
        let n = self.n as i64;
        let s = self.side();
        ((index / s) as i64 - n, (index % s) as i64 - n)
    }

    /// All lattice modes in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.num_modes()).map(move |i| self.mode(i))
    }

    /// Physical coordinates of grid node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.dx(), j as f64 * self.dx())
    }
}

/// Euclidean length of an integer wavevector.
#[inline]
pub fn wavenumber(k1: i64, k2: i64) -> f64 {
    ((k1 * k1 + k2 * k2) as f64).sqrt()
}

/// Whether `(k₁, k₂)` is the canonical representative of the pair `±k`.
#[inline]
pub fn in_half_lattice(k1: i64, k2: i64) -> bool {
    k1 > 0 || (k1 == 0 && k2 > 0)
}

/// Criticality of `(α, β)` relative to `α + β = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Supercritical,
    Critical,
    Subcritical,
}

/// Exponents `α`, `β` and dissipation coefficient `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, nu: f64) -> Result<Self, SpectralError> {
        let p = Self { alpha, beta, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let bad = |msg: String| Err(SpectralError::InvalidParams(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} not in (0, 1)", self.alpha));
        }
        if !(self.beta > 0.5 && self.beta < 1.0) {
            return bad(format!("beta = {} not in (1/2, 1)", self.beta));
        }
        let s = self.alpha + self.beta;
        // The upper endpoint is admitted: (0.75, 0.75) is the standard subcritical case.
        if !(s > 0.5 && s <= 1.5) {
            return bad(format!("alpha + beta = {s} not in (1/2, 3/2]"));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu = {} must be positive", self.nu));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        let s = self.alpha + self.beta;
        if (s - 1.0).abs() <= 1e-12 {
            Regime::Critical
        } else if s < 1.0 {
            Regime::Supercritical
        } else {
            Regime::Subcritical
        }
    }

    /// Dissipation symbol `ν |k|^{2α}`.
    #[inline]
    pub fn dissipation_rate(&self, k: f64) -> f64 {
        self.nu * k.powf(2.0 * self.alpha)
    }
}

/// Complex Fourier coefficients on the truncated lattice, Hermitian-symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.num_modes()],
        }
    }

    /// Wraps raw lattice coefficients. Symmetry is checked, not enforced.
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.num_modes() {
            return Err(SpectralError::DimensionMismatch {
                expected: grid.num_modes(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        let f = Self { grid, coeffs };
        f.check_hermitian()?;
        Ok(f)
    }

    /// Builds a field from `f(k₁, k₂)` evaluated on the half lattice and mirrored.
    pub fn from_half_fn<F>(grid: Grid, mean: f64, mut f: F) -> Self
    where
        F: FnMut(i64, i64) -> Complex64,
    {
        let mut out = Self::zeros(grid);
        out.set(0, 0, Complex64::new(mean, 0.0));
        for (k1, k2) in grid.modes().collect::<Vec<_>>() {
            if in_half_lattice(k1, k2) {
                out.set_pair(k1, k2, f(k1, k2));
            }
        }
        out
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn get(&self, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[self.grid.index(k1, k2)]
    }

    /// Value at `k`, zero outside the lattice.
    pub fn get_or_zero(&self, k1: i64, k2: i64) -> Complex64 {
        if self.grid.contains(k1, k2) {
            self.get(k1, k2)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Sets a single coefficient (may break symmetry; see [`set_pair`](Self::set_pair)).
    pub fn set(&mut self, k1: i64, k2: i64, value: Complex64) {
        let i = self.grid.index(k1, k2);
        self.coeffs[i] = value;
    }

    /// Sets `θ̂(k) = v` and `θ̂(-k) = conj(v)`.
    pub fn set_pair(&mut self, k1: i64, k2: i64, value: Complex64) {
        if k1 == 0 && k2 == 0 {
            self.set(0, 0, Complex64::new(value.re, 0.0));
        } else {
            self.set(k1, k2, value);
            self.set(-k1, -k2, value.conj());
        }
    }

    pub fn mean(&self) -> f64 {
        self.get(0, 0).re
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest `|θ̂(-k) - conj θ̂(k)|`, including `|Im θ̂(0)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (k1, k2)) in self.grid.modes().enumerate() {
            let j = self.grid.index(-k1, -k2);
            worst = worst.max((self.coeffs[j] - self.coeffs[i].conj()).norm());
        }
        worst
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        self.grid.modes().enumerate().all(|(i, (k1, k2))| {
            let j = self.grid.index(-k1, -k2);
            self.coeffs[j] == self.coeffs[i].conj()
        })
    }

    pub fn check_hermitian(&self) -> Result<(), SpectralError> {
        let defect = self.hermitian_defect();
        let scale = self.max_abs();
        if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) && defect > 0.0 {
            return Err(SpectralError::SymmetryViolation { defect, scale });
        }
        Ok(())
    }

    /// Projects onto Hermitian fields: `c(k) ← (c(k) + conj c(-k)) / 2`.
    ///
    /// Writes are mirrored from the half lattice, so the result is exactly
    /// Hermitian.
    pub fn symmetrize(&mut self) {
        let grid = self.grid;
        for (k1, k2) in grid.modes().collect::<Vec<_>>() {
            if in_half_lattice(k1, k2) {
                let a = self.get(k1, k2);
                let b = self.get(-k1, -k2);
                self.set_pair(k1, k2, (a + b.conj()) * 0.5);
            }
        }
        let c0 = self.get(0, 0);
        self.set(0, 0, Complex64::new(c0.re, 0.0));
    }

    /// `Σ |θ̂(k)|²`, the mean square of `θ` over the torus.
    pub fn l2_sq(&self) -> f64 {
        pairwise_map(self.coeffs.iter(), |c| c.norm_sqr())
    }

    /// Multiplies every mode by a real radial symbol `m(|k|)`.
    pub fn map_radial<F: Fn(f64) -> f64>(&self, symbol: F) -> Self {
        let mut out = self.clone();
        for (i, (k1, k2)) in self.grid.modes().enumerate() {
            out.coeffs[i] *= symbol(wavenumber(k1, k2));
        }
        out
    }

    /// Mode-wise `self + a · other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + y * a).collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Copies the coefficients onto another lattice, dropping modes outside it.
    pub fn resample(&self, grid: Grid) -> Self {
        let mut out = Self::zeros(grid);
        for (i, (k1, k2)) in self.grid.modes().enumerate() {
            if grid.contains(k1, k2) {
                out.set(k1, k2, self.coeffs[i]);
            }
        }
        out
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.num_modes());
        Self { grid, coeffs }
    }
}

/// Real samples of `θ` on the uniform `M × M` grid, row-major in `(x₁, x₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, SpectralError> {
        let expected = grid.m() * grid.m();
        if values.len() != expected {
            return Err(SpectralError::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x₁, x₂)` at the grid nodes.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Grid, f: F) -> Result<Self, SpectralError> {
        let m = grid.m();
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let (x1, x2) = grid.node(i, j);
                values.push(f(x1, x2));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Periodic access.
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let m = self.grid.m() as isize;
        let (i, j) = (i.rem_euclid(m) as usize, j.rem_euclid(m) as usize);
        self.values[i * self.grid.m() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Places lattice coefficients into an `m × m` FFT buffer.
pub(crate) fn scatter(grid: Grid, coeffs: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    let mi = m as i64;
    for (i, (k1, k2)) in grid.modes().enumerate() {
        let r = k1.rem_euclid(mi) as usize;
        let c = k2.rem_euclid(mi) as usize;
        buf[r * m + c] = coeffs[i];
    }
    buf
}

/// Reads lattice coefficients back from a forward-transformed `m × m` buffer.
pub(crate) fn gather(grid: Grid, buf: &[Complex64], m: usize) -> Vec<Complex64> {
    let mi = m as i64;
    let scale = 1.0 / (m * m) as f64;
    grid.modes()
        .map(|(k1, k2)| {
            let r = k1.rem_euclid(mi) as usize;
            let c = k2.rem_euclid(mi) as usize;
            buf[r * m + c] * scale
        })
        .collect()
}

/// Evaluates a lattice expansion on an `m × m` grid; returns real parts and the
/// largest imaginary residue.
pub(crate) fn synthesize(grid: Grid, coeffs: &[Complex64], m: usize) -> (Vec<f64>, f64) {
    assert!(m > 2 * grid.n(), "synthesis grid too coarse");
    let mut buf = scatter(grid, coeffs, m);
    Transform2d::new(m).inverse(&mut buf);
    let residue = buf.iter().fold(0.0_f64, |a, c| a.max(c.im.abs()));
    (buf.into_iter().map(|c| c.re).collect(), residue)
}

/// Forward analysis of real samples on an `m × m` grid onto `grid`'s lattice.
pub(crate) fn analyze(grid: Grid, values: &[f64], m: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Transform2d::new(m).forward(&mut buf);
    gather(grid, &buf, m)
}

/// Discrete Fourier analysis onto the lattice; Hermitian symmetry is enforced.
pub fn to_spectral(field: &PhysicalField) -> Result<SpectralField, SpectralError> {
    let grid = field.grid();
    let m = grid.m();
    if field.values.len() != m * m {
        return Err(SpectralError::DimensionMismatch {
            expected: m * m,
            got: field.values.len(),
        });
    }
    let mut out = SpectralField::from_raw(grid, analyze(grid, &field.values, m));
    out.symmetrize();
    Ok(out)
}

/// Synthesis on the physical grid. Imaginary residue above
/// `HERMITIAN_TOL · Σ|θ̂|` is reported as a symmetry violation.
pub fn to_physical(field: &SpectralField) -> Result<PhysicalField, SpectralError> {
    field.check_hermitian()?;
    let grid = field.grid();
    let (values, residue) = synthesize(grid, field.coeffs(), grid.m());
    let scale: f64 = field.coeffs().iter().map(|c| c.norm()).sum();
    if residue > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) && residue > 0.0 {
        return Err(SpectralError::SymmetryViolation { defect: residue, scale });
    }
    Ok(PhysicalField { grid, values })
}

/// Evaluates the field on a refined `factor·M` grid (zero padding).
pub fn to_physical_refined(field: &SpectralField, factor: usize) -> Result<Vec<f64>, SpectralError> {
    field.check_hermitian()?;
    let grid = field.grid();
    Ok(synthesize(grid, field.coeffs(), grid.m() * factor.max(1)).0)
}

/// `Λ^p`: multiplies `θ̂(k)` by `|k|^p`. For `p > 0` the mean is annihilated;
/// for `p < 0` the mean must vanish.
pub fn apply_fractional_laplacian(field: &SpectralField, power: f64) -> Result<SpectralField, SpectralError> {
    if power == 0.0 {
        return Ok(field.clone());
    }
    if power < 0.0 && field.mean() != 0.0 {
        return Err(SpectralError::NegativePowerWithMean { power });
    }
    let out = field.map_radial(|k| if k == 0.0 { 0.0 } else { k.powf(power) });
    debug_assert!(field.is_exactly_hermitian() == out.is_exactly_hermitian());
    Ok(out)
}

/// Velocity `û(k) = i k^⊥ |k|^{-2β} θ̂(k)`, `k^⊥ = (-k₂, k₁)`, `û(0) = 0`.
pub fn velocity_from_theta(
    theta: &SpectralField,
    params: &ModelParams,
) -> Result<(SpectralField, SpectralField), SpectralError> {
    theta.check_hermitian()?;
    let grid = theta.grid();
    let mut u1 = SpectralField::zeros(grid);
    let mut u2 = SpectralField::zeros(grid);
    for (i, (k1, k2)) in grid.modes().enumerate() {
        if k1 == 0 && k2 == 0 {
            continue;
        }
        let w = wavenumber(k1, k2).powf(-2.0 * params.beta);
        let z = Complex64::new(0.0, 1.0) * theta.coeffs()[i] * w;
        u1.coeffs[i] = z * (-k2 as f64);
        u2.coeffs[i] = z * (k1 as f64);
    }
    Ok((u1, u2))
}

/// Square-lattice projection `P^N`: keeps `|k₁|, |k₂| ≤ N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DealiasMask {
    n: i64,
}

impl DealiasMask {
    pub fn keeps(&self, k1: i64, k2: i64) -> bool {
        k1.abs() <= self.n && k2.abs() <= self.n
    }
}

pub fn dealias_mask(grid: Grid) -> DealiasMask {
    DealiasMask { n: grid.n() as i64 }
}
