use std::f64::consts::PI;

use mfpmp_core::adjoint::{integrate_backward, integrate_backward_from, terminal_adjoint};
use mfpmp_core::forward::integrate_forward;
use mfpmp_core::models::{ControlledModel, KuramotoModel};
use mfpmp_core::optimizer::{linearize, non_extremality, target_control, CellQuadrature};
use mfpmp_core::{presets, ControlSignal, FourierField, RealGridField, TimeGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn density(coeffs: &[(f64, f64)], n_modes: usize) -> FourierField {
    // 1/2π plus small harmonics keeps the density positive
    let mut nonneg = vec![Complex64::new(1.0 / (2.0 * PI), 0.0)];
    nonneg.extend(
        coeffs
            .iter()
            .map(|(re, im)| Complex64::new(*re, *im) / (8.0 * PI)),
    );
    FourierField::from_nonnegative(n_modes, &nonneg).unwrap()
}

fn ball_control(grid: TimeGrid, a: [f64; 4]) -> ControlSignal {
    ControlSignal::from_fn(grid, |t| {
        let v = [a[0] * (a[1] * t).sin(), a[2] * (a[3] * t).cos()];
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let scale = if norm > 2f64.sqrt() {
            2f64.sqrt() / norm
        } else {
            1.0
        };
        vec![v[0] * scale, v[1] * scale]
    })
    .unwrap()
}

fn harmonic() -> impl Strategy<Value = (f64, f64)> {
    (-0.5f64..0.5, -0.5f64..0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_round_trip(values in prop::collection::vec(-5.0f64..5.0, 32)) {
        let grid = RealGridField::new(values.clone()).unwrap();
        let back = FourierField::to_spectral(&grid).unwrap().to_physical().unwrap();
        for (a, b) in values.iter().zip(back.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_symmetry_survives_both_solves(
        c in prop::collection::vec(harmonic(), 3),
        a in prop::array::uniform4(-2.0f64..2.0),
        alpha in -1.0f64..1.0,
    ) {
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let model = KuramotoModel::synchronization(alpha, 1.0, 2f64.sqrt()).unwrap();
        let u = ball_control(grid, a);
        let traj = integrate_forward(&density(&c, 32), &u, &model).unwrap();
        let cot = integrate_backward(&traj, &u, &model).unwrap();
        prop_assert!(traj.hermitian_defect() < 1e-14);
        prop_assert!(cot.hermitian_defect() < 1e-14);
        for s in traj.snapshots() {
            prop_assert!((s.get(0).re - 1.0 / (2.0 * PI)).abs() < 1e-13);
        }
    }

    #[test]
    fn non_extremality_is_nonnegative(
        c in prop::collection::vec(harmonic(), 2),
        a in prop::array::uniform4(-2.0f64..2.0),
        quadrature in prop_oneof![Just(CellQuadrature::LeftNode), Just(CellQuadrature::Simpson)],
    ) {
        let grid = TimeGrid::new(1.0, 0.02).unwrap();
        let model = KuramotoModel::synchronization(0.3, PI, 2f64.sqrt()).unwrap();
        let u = ball_control(grid, a);
        let lin = linearize(&density(&c, 32), &u, &model, quadrature).unwrap();
        prop_assert!(lin.non_extremality >= -1e-12);
        // the target maximizes the pairing over any other feasible signal
        let other = ball_control(grid, [a[2], a[3], a[0], a[1]]);
        let e_other = non_extremality(&u, &other, &lin.switching).unwrap();
        prop_assert!(e_other <= lin.non_extremality + 1e-12);
    }

    #[test]
    fn adjoint_is_linear_in_terminal_data(
        c in prop::collection::vec(harmonic(), 2),
        a in prop::array::uniform4(-2.0f64..2.0),
        w in -3.0f64..3.0,
    ) {
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let model = KuramotoModel::synchronization(0.2, 2.0, 2f64.sqrt()).unwrap();
        let u = ball_control(grid, a);
        let traj = integrate_forward(&density(&c, 32), &u, &model).unwrap();
        let t1 = terminal_adjoint(traj.last(), &model).unwrap();
        let t2 = FourierField::from_nonnegative(32, &[Complex64::new(0.0, 0.0), Complex64::new(0.1, -0.2)]).unwrap();
        let b1 = integrate_backward_from(&traj, &u, &model, t1.clone()).unwrap();
        let b2 = integrate_backward_from(&traj, &u, &model, t2.clone()).unwrap();
        let sum = integrate_backward_from(&traj, &u, &model, t1.axpy(w, &t2).unwrap()).unwrap();
        for k in 0..=grid.n_steps() {
            let expect = b1.at_node(k).unwrap().axpy(w, b2.at_node(k).unwrap()).unwrap();
            prop_assert!(sum.at_node(k).unwrap().max_diff(&expect).unwrap() < 1e-10);
        }
    }
}

/// Global RK4 error on a pure rotation at three step sizes.
fn rotation_errors(steps: &[f64]) -> Vec<f64> {
    let n_modes = 128;
    let c = 2f64.sqrt();
    let rho0 = {
        let mut f = FourierField::uniform_density(n_modes).unwrap();
        f.set(40, Complex64::new(0.01, 0.005));
        f.set(-40, Complex64::new(0.01, -0.005));
        f
    };
    let model = presets::model().unwrap();
    steps
        .iter()
        .map(|&tau| {
            let grid = TimeGrid::new(1.0, tau).unwrap();
            let u = ControlSignal::constant(grid, &[c, 0.0]).unwrap();
            let traj = integrate_forward(&rho0, &u, &model).unwrap();
            let exact = rho0.rotated(c);
            traj.last().max_diff(&exact).unwrap()
        })
        .collect()
}

#[test]
fn rk4_converges_at_fourth_order() {
    let steps = [4e-3, 2e-3, 1e-3];
    let errors = rotation_errors(&steps);
    for pair in errors.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order > 3.7, "errors {errors:?}");
    }
}

#[test]
fn target_control_is_pointwise_maximal() {
    let grid = TimeGrid::new(presets::HORIZON, 0.05).unwrap();
    let model = presets::model().unwrap();
    let u = presets::initial_control(grid).unwrap();
    let lin = linearize(
        &presets::initial_density(64).unwrap(),
        &u,
        &model,
        CellQuadrature::Simpson,
    )
    .unwrap();
    let ubar = target_control(&lin.switching, model.admissible(), &u).unwrap();
    for (v, d) in ubar.values().iter().zip(lin.switching.cells()) {
        let norm = (d[0] * d[0] + d[1] * d[1]).sqrt();
        assert!((v[0] - 2f64.sqrt() * d[0] / norm).abs() < 1e-14);
        assert!((v[1] - 2f64.sqrt() * d[1] / norm).abs() < 1e-14);
    }
}
