use num_complex::Complex64;
use proptest::prelude::*;

use rindler_embed::coords::{u_of_delta, Acceleration, Boost};
use rindler_embed::embedding::{
    expectation_inertial, expectation_rindler, extract_inertial, extract_rindler, EnlargedSpinorField, Grid,
    GridObservable,
};
use rindler_embed::evolution::{build_generator, evolve, GridWindow, SolverConfig, WavepacketSpec};
use rindler_embed::hamiltonian::{
    coefficients, coefficients_via_inversion, denominator, galileo_coefficients, singular_u,
};
use rindler_embed::runner::{run_evolution, SimulationConfig};

const U_STAR: f64 = 3.6241998947013805;

fn spinor(n: usize) -> impl Strategy<Value = EnlargedSpinorField> {
    let values = || proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n);
    (values(), values()).prop_map(move |(e, o)| {
        let grid = Grid::new(4.5, 12.0, n).unwrap();
        let c = |v: Vec<(f64, f64)>| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        EnlargedSpinorField::new(grid, c(e), c(o)).unwrap()
    })
}

fn away_from_singularity() -> impl Strategy<Value = f64> {
    (0.0..1e3f64.ln())
        .prop_map(f64::exp)
        .prop_filter("singular band", |u| *u > 1.0 && (u - U_STAR).abs() > 0.05)
}

proptest! {
    #[test]
    fn sum_rule_and_inversion(u in away_from_singularity()) {
        let a = coefficients(u).unwrap();
        let b = coefficients_via_inversion(u).unwrap();
        prop_assert!((a.f + a.g - 1.0).abs() <= 1e-10);
        let scale = a.f.abs().max(a.g.abs());
        prop_assert!((a.f - b.f).abs() <= 1e-12 * scale);
        prop_assert!((a.g - b.g).abs() <= 1e-12 * scale);
    }

    #[test]
    fn sign_structure(u in 1.0001..1e3f64) {
        prop_assume!((u - U_STAR).abs() > 1e-6);
        let d = denominator(u).unwrap();
        let g = coefficients(u).unwrap().g;
        if u < U_STAR {
            prop_assert!(d > 0.0 && g < 0.0);
        } else {
            prop_assert!(d < 0.0 && g > 0.0);
        }
    }

    #[test]
    fn galileo_bound(v in 1e-4..=0.1f64) {
        let exact = coefficients(Boost::from_velocity(v).unwrap().u).unwrap();
        let limit = galileo_coefficients(v).unwrap();
        prop_assert!((exact.f - limit.f).abs() <= v * v);
        prop_assert!((exact.g - limit.g).abs() <= v * v);
    }

    #[test]
    fn u_of_delta_is_decreasing(d in 1e-6..0.9f64, step in 1e-6..0.09f64) {
        prop_assert!(u_of_delta(d + step).unwrap() < u_of_delta(d).unwrap());
    }

    #[test]
    fn extraction_bookkeeping(psi in spinor(16)) {
        let p = extract_inertial(&psi);
        let q = extract_rindler(&psi);
        for i in 0..16 {
            let tol = 4.0 * f64::EPSILON * (psi.even[i].norm() + psi.odd[i].norm());
            prop_assert!((p.values[i] + q.values[i] - psi.even[i] * 2.0).norm() <= tol);
            prop_assert!((p.values[i] - q.values[i] - psi.odd[i] * 2.0).norm() <= tol);
        }
        let lhs = p.norm_sqr() + q.norm_sqr();
        let rhs = 2.0 * (psi.even_field().norm_sqr() + psi.odd_field().norm_sqr());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn hermitian_expectations_are_real(psi in spinor(32)) {
        for o in [GridObservable::Identity, GridObservable::Position, GridObservable::Window { lo: 6.0, hi: 9.0 }] {
            for z in [expectation_inertial(&psi, &o).unwrap(), expectation_rindler(&psi, &o).unwrap()] {
                prop_assert!(z.im.abs() <= 1e-12 * z.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn bad_windows_are_rejected(lo in 0.2..6.0f64, width in 0.5..6.0f64) {
        let hi = lo + width;
        let overlaps = lo <= 1.0 || (lo < U_STAR + 0.1 && hi > U_STAR - 0.1);
        let window = GridWindow::new(lo, hi, 128, Acceleration::default());
        let accepted = window.and_then(|w| build_generator(&w)).is_ok();
        prop_assert_eq!(accepted, !overlaps);
    }
}

#[test]
fn singular_u_is_in_figure_window() {
    let u = singular_u();
    assert!(u > 1.0 && u < 20.0);
    assert!(denominator(u).unwrap().abs() <= 1e-9);
}

#[test]
fn rindler_peak_amplitude_is_transported() {
    let window = GridWindow::new(4.5, 12.0, 2048, Acceleration::default()).unwrap();
    let packet = WavepacketSpec {
        x0: 6.0,
        sigma: 0.5,
        k0: 0.0,
        amplitude: 1.0,
    };
    let solver = SolverConfig {
        t_final: 1.0,
        ..SolverConfig::default()
    };
    let snaps = evolve(&packet, build_generator(&window).unwrap(), solver).unwrap();
    let peak = |s: &rindler_embed::evolution::Snapshot| extract_rindler(&s.state).max_abs();
    let p0 = peak(&snaps[0]);
    for s in &snaps {
        assert!((peak(s) - p0).abs() <= 0.02 * p0, "t = {}: {}", s.time, peak(s));
    }
}

#[test]
fn report_starts_at_initial_values() {
    let outcome = run_evolution(&SimulationConfig::standard()).unwrap();
    let rows = &outcome.report.report.rows;
    let first = &rows[0];
    assert_eq!(first.t, 0.0);
    // the window clips the packet tail at 3σ
    assert!((first.x_inertial - 6.0).abs() < 1e-8);
    assert_eq!(first.x_rindler, first.x_inertial);
    assert!(rows.windows(2).all(|w| w[1].t > w[0].t));
    assert_eq!(rows.last().unwrap().t, 1.0);
}
