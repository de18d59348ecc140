//! Right-hand side of the Galerkin-truncated system.
//!
//! With `u = Λ^{1-2β}R^⊥θ` the transport term on the lattice is
//!
//! ```text
//! B̂(k) = -Σ_{l+m=k} ⟨l, m^⊥⟩ |m|^{-2β} θ̂(m) θ̂(l)
//!      = -½ Σ_{l+m=k} ⟨l, m^⊥⟩ (|m|^{-2β} - |l|^{-2β}) θ̂(m) θ̂(l)
//! ```
//!
//! where `⟨l, m^⊥⟩ = l₁m₂ - l₂m₁`, all of `l`, `m`, `k` lie in the square
//! lattice and `l, m ≠ 0`. `B = -P^N(u·∇θ)`.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::reduce::pairwise_sum;
use crate::spectral::{
    self, dealias_mask, velocity_from_theta, wavenumber, Grid, ModelParams, SpectralError, SpectralField,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GalerkinError {
    #[error("padded grid {padded} too small for exact dealiasing at N = {n} (need ≥ {required})")]
    GridTooSmall { n: usize, padded: usize, required: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `⟨l, m^⊥⟩ = l₁m₂ - l₂m₁`.
#[inline]
pub fn perp_pairing(l: (i64, i64), m: (i64, i64)) -> i64 {
    l.0 * m.1 - l.1 * m.0
}

/// How the quadratic term is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluatorMode {
    /// Literal double sum over `l + m = k`, `O(N⁴)`.
    DirectConvolution,
    /// Products on a zero-padded grid followed by the square-lattice mask.
    Pseudospectral,
    /// Nonlinearity switched off (pure dissipation).
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonlinearEvaluator {
    mode: EvaluatorMode,
    padding: Option<usize>,
}

impl NonlinearEvaluator {
    pub fn new(mode: EvaluatorMode) -> Self {
        Self { mode, padding: None }
    }

    pub fn direct() -> Self {
        Self::new(EvaluatorMode::DirectConvolution)
    }

    pub fn pseudospectral() -> Self {
        Self::new(EvaluatorMode::Pseudospectral)
    }

    pub fn disabled() -> Self {
        Self::new(EvaluatorMode::Disabled)
    }

    /// Pseudo-spectral evaluation on an explicit product grid size.
    pub fn pseudospectral_with_padding(size: usize) -> Self {
        Self {
            mode: EvaluatorMode::Pseudospectral,
            padding: Some(size),
        }
    }

    pub fn mode(&self) -> EvaluatorMode {
        self.mode
    }

    /// Product grid used for `grid`: at least `max(M, 3N + 1)`, rounded up to a
    /// 5-smooth size.
    pub fn product_grid_size(&self, grid: Grid) -> usize {
        self.padding
            .unwrap_or_else(|| smooth_size_at_least(grid.m().max(3 * grid.n() + 1)))
    }
}

/// Smallest `2^a 3^b 5^c ≥ n`.
pub fn smooth_size_at_least(n: usize) -> usize {
    (n.max(1)..)
        .find(|&c| {
            let mut v = c;
            for p in [2, 3, 5] {
                while v % p == 0 {
                    v /= p;
                }
            }
            v == 1
        })
        .expect("unbounded search")
}

fn inverse_powers(grid: Grid, beta: f64) -> Vec<f64> {
    grid.modes()
        .map(|(k1, k2)| {
            if k1 == 0 && k2 == 0 {
                0.0
            } else {
                wavenumber(k1, k2).powf(-2.0 * beta)
            }
        })
        .collect()
}

fn sum_complex(terms: &[Complex64]) -> Complex64 {
    let re: Vec<f64> = terms.iter().map(|c| c.re).collect();
    let im: Vec<f64> = terms.iter().map(|c| c.im).collect();
    Complex64::new(pairwise_sum(&re), pairwise_sum(&im))
}

/// Literal convolution with a per-pair kernel; output mode `k` is computed
/// independently, so the result does not depend on the thread schedule.
fn direct_sum<K>(theta: &SpectralField, kernel: K) -> SpectralField
where
    K: Fn((i64, i64), usize, (i64, i64), usize) -> f64 + Sync,
{
    let grid = theta.grid();
    let c = theta.coeffs();
    let n = grid.n() as i64;
    let half: Vec<Complex64> = (0..grid.num_modes())
        .into_par_iter()
        .map(|ik| {
            let (k1, k2) = grid.mode(ik);
            if !spectral::in_half_lattice(k1, k2) {
                return Complex64::new(0.0, 0.0);
            }
            let mut terms = Vec::new();
            // l ranges over the lattice with m = k - l also in the lattice.
            for l1 in (k1 - n).max(-n)..=(k1 + n).min(n) {
                for l2 in (k2 - n).max(-n)..=(k2 + n).min(n) {
                    let (m1, m2) = (k1 - l1, k2 - l2);
                    if (l1 == 0 && l2 == 0) || (m1 == 0 && m2 == 0) {
                        continue;
                    }
                    let il = grid.index(l1, l2);
                    let im = grid.index(m1, m2);
                    let w = kernel((l1, l2), il, (m1, m2), im);
                    if w != 0.0 {
                        terms.push(c[im] * c[il] * w);
                    }
                }
            }
            -sum_complex(&terms)
        })
        .collect();
    let mut out = SpectralField::zeros(grid);
    for (i, (k1, k2)) in grid.modes().enumerate() {
        if spectral::in_half_lattice(k1, k2) {
            out.set_pair(k1, k2, half[i]);
        }
    }
    out
}

/// Kernel `⟨l, m^⊥⟩ |m|^{-2β}` evaluated literally.
pub fn nonlinear_term_direct(theta: &SpectralField, params: &ModelParams) -> SpectralField {
    let w = inverse_powers(theta.grid(), params.beta);
    direct_sum(theta, |l, _, m, im| perp_pairing(l, m) as f64 * w[im])
}

/// Antisymmetrized kernel `½ ⟨l, m^⊥⟩ (|m|^{-2β} - |l|^{-2β})`.
pub fn nonlinear_term_antisymmetric(theta: &SpectralField, params: &ModelParams) -> SpectralField {
    let w = inverse_powers(theta.grid(), params.beta);
    direct_sum(theta, |l, il, m, im| 0.5 * perp_pairing(l, m) as f64 * (w[im] - w[il]))
}

fn nonlinear_term_pseudospectral(
    theta: &SpectralField,
    params: &ModelParams,
    padded: usize,
) -> Result<SpectralField, GalerkinError> {
    let grid = theta.grid();
    let required = 3 * grid.n() + 1;
    if padded < required {
        return Err(GalerkinError::GridTooSmall {
            n: grid.n(),
            padded,
            required,
        });
    }
    let (u1, u2) = velocity_from_theta(theta, params)?;
    let i = Complex64::new(0.0, 1.0);
    let mut g1 = SpectralField::zeros(grid);
    let mut g2 = SpectralField::zeros(grid);
    for (idx, (k1, k2)) in grid.modes().enumerate() {
        let c = theta.coeffs()[idx] * i;
        g1.coeffs_mut()[idx] = c * k1 as f64;
        g2.coeffs_mut()[idx] = c * k2 as f64;
    }
    let (pu1, _) = spectral::synthesize(grid, u1.coeffs(), padded);
    let (pu2, _) = spectral::synthesize(grid, u2.coeffs(), padded);
    let (pg1, _) = spectral::synthesize(grid, g1.coeffs(), padded);
    let (pg2, _) = spectral::synthesize(grid, g2.coeffs(), padded);
    let advection: Vec<f64> = (0..padded * padded)
        .map(|j| pu1[j] * pg1[j] + pu2[j] * pg2[j])
        .collect();
    // Aliases of product modes |q| ≤ 2N land at |q| ≥ padded - 2N > N, so the
    // lattice read-back below is the exact truncated convolution.
    let coeffs = spectral::analyze(grid, &advection, padded);
    let mask = dealias_mask(grid);
    let mut out = SpectralField::from_raw(
        grid,
        coeffs
            .into_iter()
            .zip(grid.modes())
            .map(|(c, (k1, k2))| {
                if mask.keeps(k1, k2) {
                    -c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect(),
    );
    out.set(0, 0, Complex64::new(0.0, 0.0));
    out.symmetrize();
    Ok(out)
}

/// `B̂(θ)`; the mean mode of the output is exactly zero.
pub fn nonlinear_term(
    theta: &SpectralField,
    params: &ModelParams,
    evaluator: &NonlinearEvaluator,
) -> Result<SpectralField, GalerkinError> {
    theta.check_hermitian()?;
    let out = match evaluator.mode {
        EvaluatorMode::DirectConvolution => nonlinear_term_direct(theta, params),
        EvaluatorMode::Pseudospectral => {
            nonlinear_term_pseudospectral(theta, params, evaluator.product_grid_size(theta.grid()))?
        }
        EvaluatorMode::Disabled => SpectralField::zeros(theta.grid()),
    };
    debug_assert!(!out.is_finite() || out.is_exactly_hermitian());
    debug_assert!(!out.is_finite() || out.get(0, 0) == Complex64::new(0.0, 0.0));
    Ok(out)
}

/// `∂ₜθ̂(k) = B̂(k) - ν|k|^{2α} θ̂(k)`.
pub fn rhs(
    theta: &SpectralField,
    params: &ModelParams,
    evaluator: &NonlinearEvaluator,
) -> Result<SpectralField, GalerkinError> {
    let b = nonlinear_term(theta, params, evaluator)?;
    let grid = theta.grid();
    let mut out = b;
    for (i, (k1, k2)) in grid.modes().enumerate() {
        let rate = if k1 == 0 && k2 == 0 {
            0.0
        } else {
            params.dissipation_rate(wavenumber(k1, k2))
        };
        out.coeffs_mut()[i] -= theta.coeffs()[i] * rate;
    }
    Ok(out)
}

/// Complex value of the symmetrized triple sum
///
/// ```text
/// S = Σ_{l+m+k=0} ⟨l, m^⊥⟩ (|m|^{-2β} - |l|^{-2β}) |k|^{2s} θ̂(k) θ̂(l) θ̂(m)
/// ```
///
/// With this crate's normalization `S = -2 Σ_k |k|^{2s} conj θ̂(k) B̂(k)`, so
/// `d/dt ½‖Λ^s θ‖² = -S/2 - ν‖Λ^{s+α}θ‖²`.
pub fn triple_sum_s_complex(theta: &SpectralField, s: f64, params: &ModelParams) -> Complex64 {
    let grid = theta.grid();
    let c = theta.coeffs();
    let n = grid.n() as i64;
    let w = inverse_powers(grid, params.beta);
    let partial: Vec<Complex64> = (0..grid.num_modes())
        .into_par_iter()
        .map(|il| {
            let (l1, l2) = grid.mode(il);
            if l1 == 0 && l2 == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut terms = Vec::new();
            for m1 in -n..=n {
                for m2 in -n..=n {
                    let (k1, k2) = (-l1 - m1, -l2 - m2);
                    if (m1 == 0 && m2 == 0) || !grid.contains(k1, k2) {
                        continue;
                    }
                    let pairing = perp_pairing((l1, l2), (m1, m2));
                    if pairing == 0 {
                        continue;
                    }
                    let im = grid.index(m1, m2);
                    let ik = grid.index(k1, k2);
                    let weight = pairing as f64 * (w[im] - w[il]) * wavenumber(k1, k2).powf(2.0 * s);
                    terms.push(c[ik] * c[il] * c[im] * weight);
                }
            }
            sum_complex(&terms)
        })
        .collect();
    sum_complex(&partial)
}

/// Real part of [`triple_sum_s_complex`].
pub fn triple_sum_s(theta: &SpectralField, s: f64, params: &ModelParams) -> f64 {
    triple_sum_s_complex(theta, s, params).re
}

/// `Re Σ_k |k|^{2s} conj θ̂(k) B̂(k)`.
pub fn weighted_pairing(theta: &SpectralField, b: &SpectralField, s: f64) -> f64 {
    let terms: Vec<f64> = theta
        .grid()
        .modes()
        .enumerate()
        .map(|(i, (k1, k2))| {
            let k = wavenumber(k1, k2);
            let weight = if k == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                k.powf(2.0 * s)
            };
            weight * (theta.coeffs()[i].conj() * b.coeffs()[i]).re
        })
        .collect();
    pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams::new(0.6, 0.7, 1.0).unwrap()
    }

    fn random_field(grid: Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SpectralField::from_half_fn(grid, rng.gen_range(-1.0..1.0), |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn max_rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        let scale = a.max_abs().max(b.max_abs());
        a.coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn single_mode_self_interaction_vanishes() {
        let grid = Grid::new(4, 10).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(2, 1, Complex64::new(0.3, -0.7));
        for ev in [NonlinearEvaluator::direct(), NonlinearEvaluator::pseudospectral()] {
            let b = nonlinear_term(&theta, &params(), &ev).unwrap();
            assert!(b.max_abs() < 1e-15, "{:?}: {}", ev.mode(), b.max_abs());
        }
    }

    #[test]
    fn two_mode_fixture() {
        // θ = cos x₁ + cos x₂: coefficients ½ at ±(1,0), ±(0,1).
        // By hand: B̂(1,1) = -Σ ⟨l,m^⊥⟩|m|^{-2β}θ̂(m)θ̂(l) over (l,m) ∈
        // {((1,0),(0,1)), ((0,1),(1,0))} = -(¼)(1 - 1) = 0 with |m| = 1, and
        // B̂(1,-1) likewise: ⟨(1,0),(0,-1)^⊥⟩ = -1, ⟨(0,-1),(1,0)^⊥⟩ = 1.
        // Every output vanishes because both modes have |k| = 1.
        let grid = Grid::new(3, 8).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(1, 0, Complex64::new(0.5, 0.0));
        theta.set_pair(0, 1, Complex64::new(0.5, 0.0));
        let b = nonlinear_term(&theta, &params(), &NonlinearEvaluator::direct()).unwrap();
        assert!(b.max_abs() < 1e-16);

        // Unequal moduli: θ̂(1,0) = ½, θ̂(0,2) = ½ (plus conjugates).
        // k = (1,2): pairs (l,m) = ((1,0),(0,2)) and ((0,2),(1,0)).
        //   ⟨(1,0),(0,2)^⊥⟩ = 2, |m|^{-2β} = 2^{-2β};  ⟨(0,2),(1,0)^⊥⟩ = -2, |m| = 1.
        //   B̂(1,2) = -(¼)(2·2^{-2β} - 2) = ½(1 - 2^{-2β}).
        // k = (1,-2): pairs ((1,0),(0,-2)) with ⟨⟩ = -2 and ((0,-2),(1,0)) with ⟨⟩ = 2.
        //   B̂(1,-2) = -(¼)(-2·2^{-2β} + 2) = -½(1 - 2^{-2β}).
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(1, 0, Complex64::new(0.5, 0.0));
        theta.set_pair(0, 2, Complex64::new(0.5, 0.0));
        let p = params();
        let expected = 0.5 * (1.0 - 2f64.powf(-2.0 * p.beta));
        for ev in [NonlinearEvaluator::direct(), NonlinearEvaluator::pseudospectral()] {
            let b = nonlinear_term(&theta, &p, &ev).unwrap();
            assert!((b.get(1, 2) - Complex64::new(expected, 0.0)).norm() < 1e-14);
            assert!((b.get(1, -2) - Complex64::new(-expected, 0.0)).norm() < 1e-14);
            assert!((b.get(-1, -2) - Complex64::new(expected, 0.0)).norm() < 1e-14);
            let others: f64 = grid
                .modes()
                .filter(|&(k1, k2)| k1.abs() != 1 || k2.abs() != 2)
                .map(|(k1, k2)| b.get(k1, k2).norm())
                .fold(0.0, f64::max);
            assert!(others < 1e-14);
        }
    }

    #[test]
    fn kernel_forms_agree() {
        let grid = Grid::new(5, 12).unwrap();
        for seed in 0..3 {
            let theta = random_field(grid, seed);
            let a = nonlinear_term_direct(&theta, &params());
            let b = nonlinear_term_antisymmetric(&theta, &params());
            assert!(max_rel_diff(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn pseudospectral_matches_direct() {
        let grid = Grid::new(6, 14).unwrap();
        let theta = random_field(grid, 11);
        let a = nonlinear_term(&theta, &params(), &NonlinearEvaluator::direct()).unwrap();
        let b = nonlinear_term(&theta, &params(), &NonlinearEvaluator::pseudospectral()).unwrap();
        assert!(max_rel_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn undersized_padding_is_rejected() {
        let grid = Grid::new(6, 14).unwrap();
        let theta = random_field(grid, 1);
        let err = nonlinear_term(&theta, &params(), &NonlinearEvaluator::pseudospectral_with_padding(14)).unwrap_err();
        assert_eq!(
            err,
            GalerkinError::GridTooSmall {
                n: 6,
                padded: 14,
                required: 19
            }
        );
        assert!(nonlinear_term(&theta, &params(), &NonlinearEvaluator::pseudospectral_with_padding(19)).is_ok());
    }

    #[test]
    fn minimal_grid_without_padding_would_alias() {
        // Products on the bare M = 2N + 2 grid fold mode 2N onto -2; the
        // padded evaluator must not.
        let grid = Grid::minimal(4).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(4, 0, Complex64::new(0.5, 0.0));
        theta.set_pair(4, 1, Complex64::new(0.5, 0.0));
        let direct = nonlinear_term(&theta, &params(), &NonlinearEvaluator::direct()).unwrap();
        let padded = nonlinear_term(&theta, &params(), &NonlinearEvaluator::pseudospectral()).unwrap();
        assert!(max_rel_diff(&direct, &padded) < 1e-13);
    }

    #[test]
    fn rhs_constant_and_single_mode() {
        let grid = Grid::new(4, 10).unwrap();
        let mut theta = SpectralField::zeros(grid);
        theta.set(0, 0, Complex64::new(1.7, 0.0));
        let r = rhs(&theta, &params(), &NonlinearEvaluator::pseudospectral()).unwrap();
        assert_eq!(r.max_abs(), 0.0);

        let mut theta = SpectralField::zeros(grid);
        theta.set_pair(1, 0, Complex64::new(0.4, 0.2));
        let r = rhs(&theta, &params(), &NonlinearEvaluator::direct()).unwrap();
        assert!((r.get(1, 0) + theta.get(1, 0)).norm() < 1e-16);
    }

    #[test]
    fn energy_pairing_vanishes() {
        let grid = Grid::new(6, 14).unwrap();
        for seed in 0..4 {
            let theta = random_field(grid, 100 + seed);
            let b = nonlinear_term(&theta, &params(), &NonlinearEvaluator::pseudospectral()).unwrap();
            let norm3 = theta.l2_sq().powf(1.5);
            assert!(weighted_pairing(&theta, &b, 0.0).abs() < 1e-12 * norm3);
        }
    }

    #[test]
    fn triple_sum_relates_to_weighted_pairing() {
        let grid = Grid::new(5, 12).unwrap();
        let theta = random_field(grid, 3);
        let b = nonlinear_term_direct(&theta, &params());
        for s in [0.0, 0.5, 1.0, 1.7] {
            let sc = triple_sum_s_complex(&theta, s, &params());
            let pairing = weighted_pairing(&theta, &b, s);
            let scale = sc.norm().max(1.0);
            assert!(sc.im.abs() < 1e-12 * scale);
            assert!(
                (sc.re + 2.0 * pairing).abs() < 1e-11 * scale,
                "s={s}: {} vs {}",
                sc.re,
                -2.0 * pairing
            );
        }
        let norm3 = theta.l2_sq().powf(1.5);
        assert!(triple_sum_s(&theta, 0.0, &params()).abs() < 1e-12 * norm3);
    }

    #[test]
    fn quadratic_homogeneity() {
        let grid = Grid::new(4, 10).unwrap();
        let theta = random_field(grid, 8);
        let b = nonlinear_term_direct(&theta, &params());
        for c in [2.0, -1.0] {
            let bc = nonlinear_term_direct(&theta.scaled(c), &params());
            assert!(max_rel_diff(&bc, &b.scaled(c * c)) < 1e-14);
        }
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size_at_least(97), 100);
        assert_eq!(smooth_size_at_least(25), 25);
        assert_eq!(smooth_size_at_least(49), 50);
        assert_eq!(smooth_size_at_least(1), 1);
    }
}
