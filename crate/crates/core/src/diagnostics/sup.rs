//! Sup norms of `θ` and `∇θ`.
//!
//! The exact sup of a trigonometric polynomial has no closed form. Values are
//! first sampled on a grid refined `refinement`-fold beyond `M`; the best grid
//! local maxima are then polished by Newton iteration on the exact expansion.
//! Every reported number is attained at some point, so it is a lower bound on
//! the true sup.

use num_complex::Complex64;

use crate::spectral::{self, SpectralError, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupOptions {
    pub refinement: usize,
    pub polish: bool,
    pub candidates: usize,
}

impl Default for SupOptions {
    fn default() -> Self {
        Self {
            refinement: 2,
            polish: true,
            candidates: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorms {
    pub linf: f64,
    pub grad: f64,
}

/// Value and derivatives up to third order at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct PointJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub third: [[[f64; 2]; 2]; 2],
}

/// Evaluates the expansion and its derivatives at `(x₁, x₂)`.
pub fn eval_jet(theta: &SpectralField, x1: f64, x2: f64) -> PointJet {
    let mut jet = PointJet::default();
    for (c, (k1, k2)) in theta.coeffs().iter().zip(theta.grid().modes()) {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let z = c * Complex64::from_polar(1.0, k1 as f64 * x1 + k2 as f64 * x2);
        let k = [k1 as f64, k2 as f64];
        jet.value += z.re;
        for a in 0..2 {
            jet.grad[a] -= k[a] * z.im;
            for b in 0..2 {
                jet.hess[a][b] -= k[a] * k[b] * z.re;
                for d in 0..2 {
                    jet.third[a][b][d] += k[a] * k[b] * k[d] * z.im;
                }
            }
        }
    }
    jet
}

/// Local maxima of a periodic `m × m` array (8-neighborhood), best first.
fn local_maxima(values: &[f64], m: usize, count: usize) -> Vec<(usize, usize)> {
    let at = |i: isize, j: isize| {
        let mi = m as isize;
        values[(i.rem_euclid(mi) as usize) * m + j.rem_euclid(mi) as usize]
    };
    let mut peaks: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let v = values[i * m + j];
            let (ii, jj) = (i as isize, j as isize);
            let is_peak = (-1..=1)
                .flat_map(|a| (-1..=1).map(move |b| (a, b)))
                .filter(|&(a, b)| (a, b) != (0, 0))
                .all(|(a, b)| at(ii + a, jj + b) <= v);
            if is_peak {
                peaks.push((v, i, j));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    peaks.truncate(count);
    peaks.into_iter().map(|(_, i, j)| (i, j)).collect()
}

/// Newton ascent on `objective`, steps clamped to `max_step`; returns the
/// best value seen.
fn newton_ascent<F>(start: (f64, f64), max_step: f64, mut objective: F) -> f64
where
    F: FnMut(f64, f64) -> (f64, [f64; 2], [[f64; 2]; 2]),
{
    let (mut x1, mut x2) = start;
    let (mut best, mut g, mut h) = objective(x1, x2);
    for _ in 0..30 {
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        // Only a negative-definite Hessian gives an ascent direction here.
        if !(h[0][0] < 0.0 && det > 0.0) {
            break;
        }
        let mut s1 = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let mut s2 = -(-h[1][0] * g[0] + h[0][0] * g[1]) / det;
        let len = s1.hypot(s2);
        if len > max_step {
            s1 *= max_step / len;
            s2 *= max_step / len;
        }
        let (v, ng, nh) = objective(x1 + s1, x2 + s2);
        if !(v >= best) {
            break;
        }
        x1 += s1;
        x2 += s2;
        best = v;
        g = ng;
        h = nh;
        if len < 1e-14 {
            break;
        }
    }
    best
}

/// `(‖θ‖_{L^∞}, ‖∇θ‖_{L^∞})` with the given options.
pub fn linf_and_grad_with(theta: &SpectralField, opts: SupOptions) -> Result<SupNorms, SpectralError> {
    theta.check_hermitian()?;
    let grid = theta.grid();
    let m = grid.m() * opts.refinement.max(1);
    let i = Complex64::new(0.0, 1.0);
    let mut d1 = theta.clone();
    let mut d2 = theta.clone();
    for (idx, (k1, k2)) in grid.modes().enumerate() {
        d1.coeffs_mut()[idx] = theta.coeffs()[idx] * i * k1 as f64;
        d2.coeffs_mut()[idx] = theta.coeffs()[idx] * i * k2 as f64;
    }
    let (v, _) = spectral::synthesize(grid, theta.coeffs(), m);
    let (g1, _) = spectral::synthesize(grid, d1.coeffs(), m);
    let (g2, _) = spectral::synthesize(grid, d2.coeffs(), m);
    let abs_v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let grad_sq: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a * a + b * b).collect();
    let mut linf = abs_v.iter().copied().fold(0.0, f64::max);
    let mut grad = grad_sq.iter().copied().fold(0.0, f64::max).sqrt();

    if opts.polish && opts.candidates > 0 {
        let h = 2.0 * std::f64::consts::PI / m as f64;
        for (ci, cj) in local_maxima(&abs_v, m, opts.candidates) {
            let sign = v[ci * m + cj].signum();
            let best = newton_ascent((ci as f64 * h, cj as f64 * h), h, |x1, x2| {
                let jet = eval_jet(theta, x1, x2);
                let g = [sign * jet.grad[0], sign * jet.grad[1]];
                let hs = [
                    [sign * jet.hess[0][0], sign * jet.hess[0][1]],
                    [sign * jet.hess[1][0], sign * jet.hess[1][1]],
                ];
                (sign * jet.value, g, hs)
            });
            linf = linf.max(best);
        }
        for (ci, cj) in local_maxima(&grad_sq, m, opts.candidates) {
            let best = newton_ascent((ci as f64 * h, cj as f64 * h), h, |x1, x2| {
                let jet = eval_jet(theta, x1, x2);
                let (t, hh, ttt) = (jet.grad, jet.hess, jet.third);
                let value = 0.5 * (t[0] * t[0] + t[1] * t[1]);
                let mut g = [0.0; 2];
                let mut hs = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        g[a] += t[b] * hh[a][b];
                        for c in 0..2 {
                            hs[a][c] += hh[b][c] * hh[a][b] + t[b] * ttt[a][b][c];
                        }
                    }
                }
                (value, g, hs)
            });
            grad = grad.max((2.0 * best).sqrt());
        }
    }
    Ok(SupNorms { linf, grad })
}

/// `(‖θ‖_{L^∞}, ‖∇θ‖_{L^∞})` on a 2×-refined grid with Newton polishing.
pub fn linf_and_grad(theta: &SpectralField) -> Result<SupNorms, SpectralError> {
    linf_and_grad_with(theta, SupOptions::default())
}
