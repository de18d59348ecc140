use num_complex::Complex64;
use proptest::prelude::*;

use gqg_core::galerkin::{nonlinear_term, perp_pairing, weighted_pairing};
use gqg_core::integrator::step_exact;
use gqg_core::spectral::{to_physical, to_spectral, Grid, ModelParams, SpectralField};
use gqg_core::{IntegratingFactorState, NonlinearEvaluator};

fn field_from(grid: Grid, mean: f64, coeffs: &[(f64, f64)]) -> SpectralField {
    let mut it = coeffs.iter().cycle();
    SpectralField::from_half_fn(grid, mean, |_, _| {
        let &(re, im) = it.next().unwrap();
        Complex64::new(re, im)
    })
}

fn params() -> impl Strategy<Value = ModelParams> {
    (0.05..0.95f64, 0.5..0.95f64).prop_filter_map("valid, not critical", |(a, b)| {
        ModelParams::new(a, b, 1.0).ok().filter(|_| (a + b - 1.0).abs() > 1e-3)
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_keeps_exact_hermitian_symmetry(p in params(), c in coeffs(), mean in -1.0..1.0f64) {
        let grid = Grid::minimal(6).unwrap();
        let theta = field_from(grid, mean, &c);
        let next = step_exact(&IntegratingFactorState::new(theta), &p, 1e-3, &NonlinearEvaluator::pseudospectral())
            .unwrap()
            .state;
        prop_assert!(next.theta.is_exactly_hermitian());
        prop_assert_eq!(next.theta.mean(), mean);
    }

    #[test]
    fn nonlinearity_is_quadratic(p in params(), c in coeffs(), scale in -4.0..4.0f64) {
        let grid = Grid::minimal(6).unwrap();
        let theta = field_from(grid, 0.0, &c);
        let ev = NonlinearEvaluator::pseudospectral();
        let b = nonlinear_term(&theta, &p, &ev).unwrap();
        let bc = nonlinear_term(&theta.scaled(scale), &p, &ev).unwrap();
        let diff = bc.axpy(-scale * scale, &b).l2_sq().sqrt();
        prop_assert!(diff <= 1e-12 * (1.0 + scale * scale * b.l2_sq().sqrt()));
    }

    #[test]
    fn nonlinearity_conserves_l2(p in params(), c in coeffs()) {
        let grid = Grid::minimal(6).unwrap();
        let theta = field_from(grid, 0.3, &c);
        let b = nonlinear_term(&theta, &p, &NonlinearEvaluator::direct()).unwrap();
        prop_assert!(weighted_pairing(&theta, &b, 0.0).abs() <= 1e-12 * theta.l2_sq().powf(1.5));
    }

    #[test]
    fn perp_pairing_is_cyclic(l in (-1i64 << 30..1i64 << 30, -1i64 << 30..1i64 << 30),
                              m in (-1i64 << 30..1i64 << 30, -1i64 << 30..1i64 << 30)) {
        let k = (-l.0 - m.0, -l.1 - m.1);
        prop_assert_eq!(perp_pairing(m, k), perp_pairing(k, l));
        prop_assert_eq!(perp_pairing(k, l), perp_pairing(l, m));
        prop_assert_eq!(perp_pairing(l, m), -perp_pairing(m, l));
    }

    #[test]
    fn transforms_round_trip(c in coeffs(), mean in -1.0..1.0f64) {
        let grid = Grid::new(7, 20).unwrap();
        let theta = field_from(grid, mean, &c);
        let back = to_spectral(&to_physical(&theta).unwrap()).unwrap();
        prop_assert!(back.axpy(-1.0, &theta).l2_sq().sqrt() <= 1e-13 * (1.0 + theta.l2_sq().sqrt()));
    }

    #[test]
    fn steps_do_not_increase_energy(p in params(), c in coeffs()) {
        let grid = Grid::minimal(6).unwrap();
        let theta = field_from(grid, 0.0, &c).scaled(0.2);
        let e0 = theta.l2_sq();
        let rep = step_exact(&IntegratingFactorState::new(theta), &p, 1e-3, &NonlinearEvaluator::pseudospectral()).unwrap();
        prop_assert!(rep.state.theta.l2_sq() <= e0 * (1.0 + 1e-12));
        prop_assert!((rep.state.theta.l2_sq() + rep.dissipated - e0).abs() <= 1e-6 * e0);
    }
}
