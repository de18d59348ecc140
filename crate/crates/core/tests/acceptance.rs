//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass a criterion number to run only that
//! one, e.g. `cargo test --test acceptance -- 9`.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gqg_core::diagnostics::{
    analyticity_radius, smoothing_rate_fit, AnalyticityObserver, RunRecord, SobolevObserver, SupNormObserver,
};
use gqg_core::galerkin::{nonlinear_term, perp_pairing, weighted_pairing};
use gqg_core::harness::{self, moc_preserve_run, random_band_limited, ExperimentConfig};
use gqg_core::integrator::{run, step_exact, Observer, SampleSchedule, Termination};
use gqg_core::moc::{
    convection_head, convection_tail, dissipation_far, dissipation_near, dissipation_near_integrand, search_parameters,
    smallness_check, smallness_constant, Moc, SearchInputs,
};
use gqg_core::spectral::{to_physical, wavenumber, Grid, ModelParams, SpectralField};
use gqg_core::{IntegratingFactorState, NonlinearEvaluator, StepperConfig};

/// `c_{α,β}` for `(α, β) = (0.2, 0.6)`, `t = 0.9`, `r = 1.2`, recorded from
/// the first run of criterion 10.
const C_SUPERCRITICAL_FIXTURE: f64 = 0.041_234_622_211_652_92;

struct Line {
    pass: bool,
    detail: String,
}

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn random_field(grid: Grid, rng: &mut ChaCha8Rng) -> SpectralField {
    let mean = rng.gen_range(-1.0..1.0);
    SpectralField::from_half_fn(grid, mean, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn param_cycle(i: usize) -> ModelParams {
    let sets = [(0.75, 0.75), (0.2, 0.6), (0.5, 0.7), (0.3, 0.9), (0.9, 0.55)];
    let (a, b) = sets[i % sets.len()];
    ModelParams::new(a, b, 1.0).unwrap()
}

fn crit1() -> Line {
    let start = Instant::now();
    let grid = Grid::new(8, 18).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let theta = random_field(grid, &mut rng);
        let p = param_cycle(i);
        let d = nonlinear_term(&theta, &p, &NonlinearEvaluator::direct()).unwrap();
        let s = nonlinear_term(&theta, &p, &NonlinearEvaluator::pseudospectral()).unwrap();
        worst = worst.max((d.axpy(-1.0, &s).l2_sq() / d.l2_sq()).sqrt());
    }
    let t = start.elapsed();
    line(
        worst < 1e-10 && t < Duration::from_secs(10),
        format!(
            "direct vs pseudospectral, max relative error {worst:.2e} (< 1e-10), {:.2} s (< 10 s)",
            secs(t)
        ),
    )
}

fn crit2() -> Line {
    let grid = Grid::new(8, 18).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let theta = random_field(grid, &mut rng);
        let p = param_cycle(i);
        let norm3 = theta.l2_sq().powf(1.5);
        for ev in [NonlinearEvaluator::direct(), NonlinearEvaluator::pseudospectral()] {
            let b = nonlinear_term(&theta, &p, &ev).unwrap();
            worst = worst.max(weighted_pairing(&theta, &b, 0.0).abs() / norm3);
        }
    }
    line(
        worst < 1e-12,
        format!("max |Re Σ conj(θ̂)B̂| / ‖θ̂‖³ = {worst:.2e} (< 1e-12)"),
    )
}

fn crit3() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    for _ in 0..1000 {
        let mut draw = || {
            (
                rng.gen_range(-1_000_000..=1_000_000i64),
                rng.gen_range(-1_000_000..=1_000_000i64),
            )
        };
        let l = draw();
        let m = draw();
        let k = (-l.0 - m.0, -l.1 - m.1);
        let a = perp_pairing(m, k);
        let b = perp_pairing(k, l);
        let c = perp_pairing(l, m);
        if !(a == b && b == c) {
            bad += 1;
        }
    }
    line(
        bad == 0,
        format!("{bad} of 1000 integer triples violate ⟨m,k^⊥⟩=⟨k,l^⊥⟩=⟨l,m^⊥⟩"),
    )
}

fn smooth_datum(grid: Grid) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    f.set_pair(1, 0, Complex64::new(0.5, 0.0));
    f.set_pair(0, 1, Complex64::new(0.2, 0.3));
    f.set_pair(1, 1, Complex64::new(-0.25, 0.1));
    f.set_pair(2, -1, Complex64::new(0.1, -0.15));
    f
}

fn evolve_fixed(theta0: &SpectralField, p: &ModelParams, dt: f64, steps: usize) -> SpectralField {
    let ev = NonlinearEvaluator::pseudospectral();
    let mut s = IntegratingFactorState::new(theta0.clone());
    for _ in 0..steps {
        s = step_exact(&s, p, dt, &ev).unwrap().state;
    }
    s.theta
}

fn crit4() -> Line {
    let p = ModelParams::new(0.75, 0.75, 1.0).unwrap();
    let grid = Grid::new(16, 34).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let theta = random_field(grid, &mut rng);
    let scale = theta.max_abs();
    let dt = 0.013;
    let mut state = IntegratingFactorState::new(theta.clone());
    let mut linear_err: f64 = 0.0;
    for _ in 0..10 {
        let next = step_exact(&state, &p, dt, &NonlinearEvaluator::disabled())
            .unwrap()
            .state;
        for (k1, k2) in grid.modes() {
            let exact = state.theta.get(k1, k2) * (-p.dissipation_rate(wavenumber(k1, k2)) * dt).exp();
            linear_err = linear_err.max((next.theta.get(k1, k2) - exact).norm() / scale);
        }
        state = next;
    }

    let theta0 = smooth_datum(grid).scaled(2.0);
    let t_end = 0.4;
    let reference = evolve_fixed(&theta0, &p, t_end / 640.0, 640);
    let errs: Vec<f64> = [10usize, 20, 40]
        .iter()
        .map(|&n| {
            evolve_fixed(&theta0, &p, t_end / n as f64, n)
                .axpy(-1.0, &reference)
                .l2_sq()
                .sqrt()
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    line(
        linear_err < 1e-14 && order >= 3.5,
        format!(
            "linear step error {linear_err:.2e} (< 1e-14); dt-halving errors {:.2e} {:.2e} {:.2e}, observed order {order:.2} (>= 3.5)",
            errs[0], errs[1], errs[2]
        ),
    )
}

/// The shared run of criteria 5, 6 and 8.
struct BaseRun {
    record: RunRecord,
    termination: Termination,
    elapsed: Duration,
}

fn base_run() -> BaseRun {
    let p = ModelParams::new(0.75, 0.75, 1.0).unwrap();
    let grid = Grid::minimal(32).unwrap();
    let raw = random_band_limited(grid, 3.5, [1.0, std::f64::consts::SQRT_2 * 32.0], 7, 1.0);
    let theta0 = raw.scaled(1.0 / to_physical(&raw).unwrap().max_abs());
    let mut times = SampleSchedule::uniform(1.0, 20).times().to_vec();
    times.extend(SampleSchedule::logarithmic(0.01, 0.5, 24).times());
    let schedule = SampleSchedule::explicit(times, 1.0);
    let mut obs: Vec<Box<dyn Observer>> = vec![Box::new(SupNormObserver::default()), Box::new(AnalyticityObserver)];
    let start = Instant::now();
    let out = run(
        &theta0,
        &p,
        &StepperConfig::fixed(1e-3, 1.0),
        &NonlinearEvaluator::pseudospectral(),
        &mut obs,
        &schedule,
    )
    .unwrap();
    BaseRun {
        record: out.record,
        termination: out.termination,
        elapsed: start.elapsed(),
    }
}

fn crit5(b: &BaseRun) -> Line {
    let res = b.record.series("energy_residual").unwrap();
    let e0 = b.record.series("l2_sq").unwrap()[0].1;
    let worst = res.iter().map(|x| x.1.abs()).fold(0.0, f64::max);
    let ok = b.termination == Termination::Completed && worst < 1e-8 && b.elapsed < Duration::from_secs(120);
    line(
        ok,
        format!(
            "max |‖θ(t)‖² + 2ν∫‖Λ^αθ‖² - ‖θ₀‖²| = {worst:.2e} (< 1e-8, ‖θ₀‖² = {e0:.3}), {:.1} s (< 120 s)",
            secs(b.elapsed)
        ),
    )
}

fn crit6(b: &BaseRun) -> Line {
    let s = b.record.series("linf").unwrap();
    let l0 = s[0].1;
    let worst = s
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (l0 * (w[1].0 - w[0].0)))
        .fold(f64::NEG_INFINITY, f64::max);
    line(
        worst <= 1e-8,
        format!(
            "largest growth rate of ‖θ‖_∞ / ‖θ₀‖_∞ = {worst:.2e} per unit time (<= 1e-8), {:.4} -> {:.4}",
            l0,
            s.last().unwrap().1
        ),
    )
}

fn crit7() -> Line {
    let s = 1.0;
    let window = (1e-4, 1e-2);
    let p = ModelParams::new(0.75, 0.75, 1.0).unwrap();
    let orders = vec![s, s + p.alpha];
    let schedule = SampleSchedule::logarithmic(window.0, window.1, 16);

    let grid = Grid::minimal(512).unwrap();
    let theta0 = random_band_limited(grid, s + 1.0, [1.0, std::f64::consts::SQRT_2 * 512.0], 17, 1.0);
    let mut obs: Vec<Box<dyn Observer>> = vec![Box::new(SobolevObserver::new(orders.clone()))];
    let lin = run(
        &theta0,
        &p,
        &StepperConfig::fixed(window.1, window.1),
        &NonlinearEvaluator::disabled(),
        &mut obs,
        &schedule,
    )
    .unwrap();
    let lin_slope = smoothing_rate_fit(&lin.record, s, 1, window).unwrap();

    let grid = Grid::minimal(64).unwrap();
    let theta0 = random_band_limited(grid, s + 1.0, [1.0, std::f64::consts::SQRT_2 * 64.0], 17, 0.05);
    let mut obs: Vec<Box<dyn Observer>> = vec![Box::new(SobolevObserver::new(orders))];
    let nl = run(
        &theta0,
        &p,
        &StepperConfig::fixed(1e-4, window.1),
        &NonlinearEvaluator::pseudospectral(),
        &mut obs,
        &schedule,
    )
    .unwrap();
    let nl_slope = smoothing_rate_fit(&nl.record, s, 1, window).unwrap();
    line(
        (lin_slope + 0.5).abs() <= 0.15 && nl_slope >= -0.65,
        format!("linear N=512 slope {lin_slope:.3} (-0.5 ± 0.15); nonlinear N=64 slope {nl_slope:.3} (>= -0.65)"),
    )
}

fn crit8(b: &BaseRun) -> Line {
    let delta = b.record.series("analyticity_delta").unwrap();
    let status = b.record.series("analyticity_status").unwrap();
    let positive = delta
        .iter()
        .zip(&status)
        .filter(|(d, _)| d.0 > 0.0)
        .all(|(d, s)| d.1 > 0.0 && s.1 == 0.0);
    let window: Vec<(f64, f64)> = delta.iter().copied().filter(|x| x.0 >= 0.01 && x.0 <= 0.5).collect();
    let monotone = window.windows(2).all(|w| w[1].1 >= w[0].1);
    for w in window.windows(2).filter(|w| w[1].1 < w[0].1) {
        println!(
            "     δ drops {:.6} -> {:.6} between t = {:.4} and {:.4}",
            w[0].1, w[1].1, w[0].0, w[1].0
        );
    }

    let grid = Grid::minimal(24).unwrap();
    let mut worst: f64 = 0.0;
    for a in [0.1, 0.25, 0.5, 1.0, 1.5, 2.0] {
        let f = SpectralField::from_half_fn(grid, 1.0, |k1, k2| {
            let k = wavenumber(k1, k2);
            Complex64::from_polar((-a * k).exp(), 0.37 * (k1 * 7 + k2 * 3) as f64)
        });
        let est = analyticity_radius(&f);
        worst = worst.max((est.delta - a).abs() / a);
    }
    line(
        positive && monotone && window.len() >= 2 && worst < 0.02,
        format!(
            "δ(t) > 0 for t > 0: {positive}; non-decreasing on [0.01, 0.5] over {} samples ({:.3} -> {:.3}): {monotone}; synthetic e^(-a|k|) max relative error {worst:.2e} (< 0.02)",
            window.len(),
            window.first().map_or(f64::NAN, |x| x.1),
            window.last().map_or(f64::NAN, |x| x.1),
        ),
    )
}

fn crit9() -> Line {
    let start = Instant::now();
    let p = ModelParams::new(0.75, 0.75, 1.0).unwrap();
    let out = search_parameters(&p, &SearchInputs::new(1.5, None)).unwrap();
    let t = start.elapsed();
    let Some(rep) = out.report.filter(|_| out.moc.is_some()) else {
        return line(false, format!("no certified modulus in {} candidates", out.candidates));
    };
    let all_negative = rep.margins.iter().zip(&rep.errors).all(|(m, e)| m + e < 0.0);
    line(
        rep.certified && all_negative && t < Duration::from_secs(30),
        format!(
            "δ = {}, γ = {}, certified = {}, max(margin + error) = {:.3e} over {} points, {:.2} s (< 30 s)",
            rep.moc.delta(),
            rep.moc.gamma(),
            rep.certified,
            rep.worst_margin,
            rep.xi_grid.len(),
            secs(t)
        ),
    )
}

fn crit10() -> Line {
    let p = ModelParams::new(0.2, 0.6, 1.0).unwrap();
    let out = search_parameters(&p, &SearchInputs::new(1.2, Some(0.9))).unwrap();
    let Some(m) = out.moc else {
        return line(false, format!("no certified modulus in {} candidates", out.candidates));
    };
    let c = smallness_constant(&m, &p).unwrap();
    let d = m.delta();
    let direct = 0.5 * (d - d.powf(1.2)).powf(0.6);
    let fixture_ok = (c - C_SUPERCRITICAL_FIXTURE).abs() <= 1e-14 * C_SUPERCRITICAL_FIXTURE;
    line(
        out.report.as_ref().is_some_and(|r| r.certified) && (c - direct).abs() <= 1e-15 && fixture_ok,
        format!(
            "δ = {d}, γ = {}, c = {c:.15} (formula {direct:.15}, fixture {C_SUPERCRITICAL_FIXTURE:.15})",
            m.gamma()
        ),
    )
}

fn crit11() -> Line {
    let p = ModelParams::new(0.2, 0.6, 1.0).unwrap();
    let m = search_parameters(&p, &SearchInputs::new(1.2, Some(0.9)))
        .unwrap()
        .moc
        .unwrap();
    let c = smallness_constant(&m, &p).unwrap();
    let grid = Grid::minimal(32).unwrap();
    let shape = smooth_datum(grid);
    let unit = smallness_check(&to_physical(&shape).unwrap(), &m, &p).unwrap().lhs;
    let stepper = StepperConfig::fixed(1e-3, 1.0);
    let schedule = SampleSchedule::uniform(1.0, 16);
    let ev = NonlinearEvaluator::pseudospectral();

    let small = shape.scaled(0.5 * c / unit);
    let (rep, _) = moc_preserve_run(&small, &p, &stepper, &ev, &m, 0.02, &schedule).unwrap();
    let small_ok = rep.smallness.as_ref().is_some_and(|s| s.satisfied)
        && rep.termination == Termination::Completed
        && rep.max_ratio <= 1.02;

    let large = shape.scaled(20.0 * c / unit);
    let (big, _) = moc_preserve_run(&large, &p, &stepper, &ev, &m, 0.02, &schedule).unwrap();
    let lhs_big = big.smallness.as_ref().map_or(f64::NAN, |s| s.lhs);
    let series: Vec<String> = big.worst_ratios.iter().map(|r| format!("{r:.3}")).collect();
    println!(
        "     large datum (lhs = {:.3e} = {:.1} c), worst_ratio series: [{}], {:?}",
        lhs_big,
        lhs_big / c,
        series.join(", "),
        big.termination
    );
    line(
        small_ok && lhs_big > 10.0 * c,
        format!(
            "small datum lhs = {:.3e} <= c = {c:.3e}: max worst_ratio {:.4} (<= 1.02) over {} samples",
            rep.smallness.as_ref().map_or(f64::NAN, |s| s.lhs),
            rep.max_ratio,
            rep.worst_ratios.len()
        ),
    )
}

fn crit12() -> Line {
    let text = r#"
[model]
alpha = 0.75
beta = 0.75

[grid]
n = 16

[stepper]
dt = 1e-3
t_end = 0.5

[initial_data]
kind = "random_band_limited"
slope = 4.0
band = [1.0, 6.0]
seed = 12
amplitude = 1.0
normalize = "linf"

[experiment]
kind = "convergence"
n_fine = 32
samples = 8
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let out = harness::execute(&cfg).unwrap();
    let d = &out.summary["details"];
    let final_diff = d["final_l2_diff"].as_f64().unwrap_or(f64::NAN);
    let max_diff = d["max_l2_diff"].as_f64().unwrap_or(f64::NAN);
    line(
        final_diff < 1e-6 && out.status.code() == 0,
        format!("N=16 vs N=32 at T=0.5: L² difference {final_diff:.2e} (< 1e-6), max over run {max_diff:.2e}"),
    )
}

/// Composite trapezoid rule on `[0, 1]` with `n` intervals.
fn trapezoid<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut s = 0.5 * (f(0.0) + f(1.0));
    for i in 1..n {
        s += f(i as f64 * h);
    }
    s * h
}

fn random_moc(rng: &mut ChaCha8Rng) -> (ModelParams, Moc) {
    loop {
        let sub = rng.gen_bool(0.5);
        let made = if sub {
            let alpha = rng.gen_range(0.55..0.95);
            let beta = rng.gen_range(0.55..0.95);
            let r = rng.gen_range(1.2..1.8);
            let delta = 0.5f64.powi(rng.gen_range(1..5));
            let gamma = 0.5f64.powi(rng.gen_range(3..10));
            ModelParams::new(alpha, beta, 1.0)
                .ok()
                .filter(|p| p.alpha + p.beta > 1.05)
                .and_then(|p| Moc::subcritical(&p, r, delta, gamma).ok().map(|m| (p, m)))
        } else {
            let alpha = rng.gen_range(0.1..0.4);
            let beta = rng.gen_range(0.55..0.9);
            let r = rng.gen_range(1.05..(1.0 + 2.0 * alpha));
            let delta = 0.5f64.powi(rng.gen_range(3..7));
            let gamma = 0.5f64.powi(rng.gen_range(3..8));
            ModelParams::new(alpha, beta, 1.0)
                .ok()
                .filter(|p| p.alpha + p.beta < 0.95)
                .and_then(|p| {
                    let t = rng.gen_range((p.alpha + p.beta + 0.02)..0.98);
                    Moc::supercritical(&p, r, t, delta, gamma).ok().map(|m| (p, m))
                })
        };
        if let Some(found) = made {
            let lambda = if rng.gen_bool(0.3) {
                rng.gen_range(1.0..4.0)
            } else {
                1.0
            };
            return (found.0, found.1.with_lambda(lambda).unwrap());
        }
    }
}

fn crit13() -> Line {
    const POINTS: usize = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    let mut worst_case = String::new();
    for case in 0..10 {
        let (p, m) = random_moc(&mut rng);
        let xi = m.breakpoint() * 10f64.powf(rng.gen_range(-3.0..2.0));
        let w = |x: f64| m.omega(x).unwrap();
        let (a, b) = (p.alpha, p.beta);
        // η = ξ u^4
        let head_ref = trapezoid(
            |u| {
                let eta = xi * u.powi(4);
                if u == 0.0 {
                    0.0
                } else {
                    w(eta) * eta.powf(2.0 * b - 2.0) * 4.0 * xi * u.powi(3)
                }
            },
            POINTS,
        );
        // η = ξ / v, v = s^8
        let tail_ref = trapezoid(
            |s| {
                if s == 0.0 {
                    return 0.0;
                }
                let v = s.powi(8);
                let eta = xi / v;
                w(eta) * eta.powf(2.0 * b - 3.0) * xi / (v * v) * 8.0 * s.powi(7)
            },
            POINTS,
        );
        // η = (ξ/2) u^4
        let half = 0.5 * xi;
        let d1_ref = trapezoid(
            |u| {
                if u == 0.0 {
                    return 0.0;
                }
                dissipation_near_integrand(&m, a, xi, half * u.powi(4)) * half * 4.0 * u.powi(3)
            },
            POINTS,
        );
        // η = (ξ/2) / v, v = s^8
        let d2_ref = trapezoid(
            |s| {
                if s == 0.0 {
                    return 0.0;
                }
                let v = s.powi(8);
                let eta = half / v;
                let f = (w(2.0 * eta + xi) - w((2.0 * eta - xi).max(0.0)) - 2.0 * w(xi)) * eta.powf(-1.0 - 2.0 * a);
                f * half / (v * v) * 8.0 * s.powi(7)
            },
            POINTS,
        );
        let got = [
            convection_head(&m, &p, xi).unwrap().value,
            convection_tail(&m, &p, xi).unwrap().value,
            dissipation_near(&m, &p, xi).unwrap().value,
            dissipation_far(&m, &p, xi).unwrap().value,
        ];
        let refs = [head_ref, tail_ref, d1_ref, d2_ref];
        for (i, (g, r)) in got.iter().zip(refs).enumerate() {
            let rel = (g - r).abs() / r.abs();
            if rel.is_nan() || rel > worst {
                worst = rel;
                worst_case = format!(
                    "case {case} integral {i} ({:?}, α={a:.3}, β={b:.3}, λ={:.3}, ξ/δ_λ={:.2e})",
                    m.regime(),
                    m.lambda(),
                    xi / m.breakpoint()
                );
            }
        }
    }
    line(
        worst < 1e-8,
        format!(
            "10 cases x 4 integrals vs 10^6-point trapezoid: max relative error {worst:.2e} (< 1e-8) at {worst_case}"
        ),
    )
}

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |i: u32| only.is_empty() || only.contains(&i);
    let names = [
        "oracle equivalence",
        "transport conservation",
        "symmetrization identity",
        "linear-step exactness and RK4 order",
        "energy balance",
        "maximum-principle shadow",
        "smoothing rate",
        "analyticity radius",
        "subcritical certification",
        "supercritical certification and constant",
        "modulus preservation",
        "spectral self-convergence",
        "quadrature oracles",
    ];
    let base = if [5, 6, 8].iter().any(|&i| wanted(i)) {
        Some(base_run())
    } else {
        None
    };
    let mut failed = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let id = i as u32 + 1;
        if !wanted(id) {
            continue;
        }
        let start = Instant::now();
        let l = match id {
            1 => crit1(),
            2 => crit2(),
            3 => crit3(),
            4 => crit4(),
            5 => crit5(base.as_ref().unwrap()),
            6 => crit6(base.as_ref().unwrap()),
            7 => crit7(),
            8 => crit8(base.as_ref().unwrap()),
            9 => crit9(),
            10 => crit10(),
            11 => crit11(),
            12 => crit12(),
            13 => crit13(),
            _ => unreachable!(),
        };
        println!(
            "{} {id:>2} {name}: {} [{:.1} s]",
            if l.pass { "PASS" } else { "FAIL" },
            l.detail,
            secs(start.elapsed())
        );
        if !l.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
