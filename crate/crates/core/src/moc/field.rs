//! Checking a sampled field against a modulus of continuity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::certify::{rescale_for_data, smallness_constant};
use super::{Moc, MocError, MocRegime};
use crate::diagnostics::linf_and_grad;
use crate::spectral::{to_spectral, ModelParams, PhysicalField};

/// Which grid pairs are compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSampling {
    /// Every pair with periodic distance at most this is checked.
    pub cutoff: f64,
    /// Additional uniformly random pairs.
    pub far_pairs: usize,
    pub seed: u64,
}

impl Default for PairSampling {
    fn default() -> Self {
        Self {
            cutoff: std::f64::consts::FRAC_PI_2,
            far_pairs: 20_000,
            seed: 0x6d6f63,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMocCheck {
    pub holds: bool,
    /// `max |θ(x) - θ(y)| / ω(|x - y|)` over the checked pairs.
    pub worst_ratio: f64,
    /// Grid indices `((i, j), (i', j'))` attaining the worst ratio.
    pub worst_pair: Option<((usize, usize), (usize, usize))>,
    pub worst_distance: f64,
    pub pairs_checked: usize,
}

#[derive(Debug, Clone, Copy)]
struct Worst {
    ratio: f64,
    a: usize,
    b: usize,
    dist: f64,
}

impl Worst {
    fn none() -> Self {
        Worst {
            ratio: 0.0,
            a: usize::MAX,
            b: usize::MAX,
            dist: 0.0,
        }
    }

    // Ties go to the lexicographically smallest pair so the reduction order
    // does not matter.
    fn better(self, o: Worst) -> Worst {
        match o.ratio.total_cmp(&self.ratio) {
            std::cmp::Ordering::Greater => o,
            std::cmp::Ordering::Less => self,
            std::cmp::Ordering::Equal => {
                if (o.a, o.b) < (self.a, self.b) {
                    o
                } else {
                    self
                }
            }
        }
    }
}

fn periodic_distance(m: usize, di: usize, dj: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let wrap = |d: usize| d.min(m - d) as f64 * h;
    wrap(di).hypot(wrap(dj))
}

/// Checks `|θ(x) - θ(y)| ≤ ω_λ(d(x, y))` with periodic Euclidean `d`.
pub fn verify_field_moc_with(theta: &PhysicalField, moc: &Moc, sampling: PairSampling) -> FieldMocCheck {
    let m = theta.grid().m();
    let v = theta.values();
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let reach = ((sampling.cutoff / h).floor() as usize).min(m / 2);

    // Half of the offset disc; the other half gives the same pairs reversed.
    let offsets: Vec<(isize, isize)> = (0..=reach as isize)
        .flat_map(|di| (-(reach as isize)..=reach as isize).map(move |dj| (di, dj)))
        .filter(|&(di, dj)| di > 0 || (di == 0 && dj > 0))
        .filter(|&(di, dj)| ((di * di + dj * dj) as f64).sqrt() * h <= sampling.cutoff * (1.0 + 1e-12))
        .collect();

    let idx = |i: isize, j: isize| {
        let mi = m as isize;
        (i.rem_euclid(mi) as usize) * m + j.rem_euclid(mi) as usize
    };
    let near = offsets
        .par_iter()
        .map(|&(di, dj)| {
            let dist = periodic_distance(
                m,
                di.rem_euclid(m as isize) as usize,
                dj.rem_euclid(m as isize) as usize,
            );
            let w = moc.value(dist);
            let mut worst = Worst::none();
            for i in 0..m as isize {
                for j in 0..m as isize {
                    let a = idx(i, j);
                    let b = idx(i + di, j + dj);
                    let ratio = (v[a] - v[b]).abs() / w;
                    let (a, b) = (a.min(b), a.max(b));
                    worst = worst.better(Worst { ratio, a, b, dist });
                }
            }
            worst
        })
        .reduce(Worst::none, Worst::better);

    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let total = m * m;
    let far_pairs: Vec<(usize, usize)> = (0..sampling.far_pairs)
        .map(|_| (rng.gen_range(0..total), rng.gen_range(0..total)))
        .filter(|(a, b)| a != b)
        .collect();
    let far = far_pairs
        .par_iter()
        .map(|&(a, b)| {
            let (ai, aj) = (a / m, a % m);
            let (bi, bj) = (b / m, b % m);
            let dist = periodic_distance(m, (ai + m - bi) % m, (aj + m - bj) % m);
            let ratio = (v[a] - v[b]).abs() / moc.value(dist);
            Worst {
                ratio,
                a: a.min(b),
                b: a.max(b),
                dist,
            }
        })
        .reduce(Worst::none, Worst::better);

    let worst = near.better(far);
    let pairs_checked = offsets.len() * total + far_pairs.len();
    FieldMocCheck {
        holds: worst.ratio <= 1.0,
        worst_ratio: worst.ratio,
        worst_pair: (worst.a != usize::MAX).then(|| ((worst.a / m, worst.a % m), (worst.b / m, worst.b % m))),
        worst_distance: worst.dist,
        pairs_checked,
    }
}

/// [`verify_field_moc_with`] using the default pair sampling.
pub fn verify_field_moc(theta: &PhysicalField, moc: &Moc) -> FieldMocCheck {
    verify_field_moc_with(theta, moc, PairSampling::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub satisfied: bool,
    /// `‖∇θ₀‖_∞^{2-2α-2β} ‖θ₀‖_∞^{2α+2β-1}`.
    pub lhs: f64,
    pub c: f64,
    pub linf: f64,
    pub grad_linf: f64,
    /// The rescaled modulus check, run when the condition is satisfied.
    pub moc_check: Option<FieldMocCheck>,
    pub rescaled: Option<Moc>,
    /// False if the condition holds but the rescaled modulus check fails.
    pub consistent: bool,
}

/// Evaluates the smallness condition and, when it holds, checks the datum
/// against the modulus rescaled to its gradient.
pub fn smallness_check(theta0: &PhysicalField, moc: &Moc, params: &ModelParams) -> Result<SmallnessReport, MocError> {
    if moc.regime() != MocRegime::Supercritical {
        return Err(MocError::RegimeMismatch {
            moc: moc.regime(),
            model: params.regime(),
        });
    }
    let c = smallness_constant(moc, params)?;
    let spec = to_spectral(theta0).map_err(|e| MocError::Invalid(e.to_string()))?;
    let sup = linf_and_grad(&spec).map_err(|e| MocError::Invalid(e.to_string()))?;
    let sigma = params.alpha + params.beta;
    let lhs = if sup.grad == 0.0 || sup.linf == 0.0 {
        0.0
    } else {
        sup.grad.powf(2.0 - 2.0 * sigma) * sup.linf.powf(2.0 * sigma - 1.0)
    };
    let satisfied = lhs <= c;
    let (moc_check, rescaled) = if satisfied {
        let scaled = if sup.grad > 0.0 {
            rescale_for_data(moc, sup.grad)?
        } else {
            *moc
        };
        (Some(verify_field_moc(theta0, &scaled)), Some(scaled))
    } else {
        (None, None)
    };
    let consistent = moc_check.as_ref().is_none_or(|m| m.holds);
    Ok(SmallnessReport {
        satisfied,
        lhs,
        c,
        linf: sup.linf,
        grad_linf: sup.grad,
        moc_check,
        rescaled,
        consistent,
    })
}
