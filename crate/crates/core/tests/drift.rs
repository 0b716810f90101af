use std::f64::consts::TAU;

use nalgebra::DVector;
use zoll_lab::drift::{
    conformal_drift_experiment, curvature_drift_row, guiding_center, hamiltonian_field, DriftOptions,
};
use zoll_lab::dynamics::{integrate, ModelBundleSystem, TangentState};
use zoll_lab::geometry::{builtin, khat_horizontal_differential, ChartManifold, ChartPoint};
use zoll_lab::periods::space_form_period;
use zoll_lab::Error;

fn spread(points: &[Vec<f64>]) -> f64 {
    let first = &points[0];
    points
        .iter()
        .flat_map(|p| p.iter().zip(first).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

fn centres(m: &ChartManifold, state: &TangentState, period: f64, windows: usize) -> Vec<Vec<f64>> {
    let traj = integrate(m, state, windows as f64 * period, 1e-12).unwrap();
    let g = guiding_center(m, &traj, period).unwrap();
    assert_eq!(g.len(), windows);
    assert!(g.iter().all(|p| p.chart == g[0].chart));
    g.into_iter().map(|p| p.value).collect()
}

#[test]
fn guiding_centre_is_stationary_on_the_flat_torus() {
    let m = builtin("flat-torus", &Default::default()).unwrap();
    for eps in [0.05, 0.2, 0.5] {
        let s = TangentState::with_energy(&m, ChartPoint::new(0, vec![1.0, 2.0]), &DVector::from_vec(vec![0.3, 1.0]), eps).unwrap();
        let c = centres(&m, &s, TAU, 8);
        assert!(spread(&c) < 1e-9, "eps {eps}: {}", spread(&c));
    }
}

#[test]
fn guiding_centre_is_stationary_on_the_sphere() {
    let m = builtin("round-sphere", &Default::default()).unwrap();
    for eps in [0.1, 0.3] {
        let s = TangentState::with_energy(&m, ChartPoint::new(0, vec![0.4, -0.3]), &DVector::from_vec(vec![1.0, 0.5]), eps).unwrap();
        let c = centres(&m, &s, space_form_period(1.0, eps), 8);
        assert!(spread(&c) < 1e-7, "eps {eps}: {}", spread(&c));
    }
}

#[test]
fn guiding_centre_needs_three_periods() {
    let m = builtin("flat-torus", &Default::default()).unwrap();
    let s = TangentState::with_energy(&m, ChartPoint::new(0, vec![1.0, 2.0]), &DVector::from_vec(vec![1.0, 0.0]), 0.1).unwrap();
    let traj = integrate(&m, &s, 2.5 * TAU, 1e-10).unwrap();
    assert!(matches!(guiding_center(&m, &traj, TAU), Err(Error::ShortTrajectory { .. })));
    assert!(guiding_center(&m, &traj, 0.0).is_err());
}

/// `Y = β⁻¹ d^h K̂ / 8` at one point computed in each stereographic chart.
#[test]
fn drift_field_is_chart_covariant_on_the_perturbed_sphere() {
    let m = builtin("perturbed-sphere", &Default::default()).unwrap();
    let y_field = |p: &ChartPoint| {
        let v = m.unitary_frame(p).unwrap().column(0).into_owned();
        let dk = khat_horizontal_differential(&m, p, &v).unwrap();
        hamiltonian_field(&m.magnetic(p), &(dk / 8.0)).unwrap()
    };
    for q in [[0.5, 0.3], [-0.7, 0.9], [1.1, -0.2]] {
        let p0 = ChartPoint::new(0, q.to_vec());
        let tr = m.chart(0).unwrap().transition_to(1).unwrap();
        let q1 = (tr.map)(&p0.q);
        let p1 = ChartPoint { chart: 1, q: q1 };
        let y0 = y_field(&p0);
        let y1 = y_field(&p1);
        let pushed = (tr.jacobian)(&p0.q) * &y0;
        assert!(y1.norm() > 1e-4, "field vanishes at {q:?}");
        let g = m.metric(&p1);
        let cos = pushed.dot(&(&g * &y1)) / (pushed.dot(&(&g * &pushed)) * y1.dot(&(&g * &y1))).sqrt();
        let angle = cos.min(1.0).acos();
        // d^h K̂ differences a finite-difference curvature: floor near 1e-6
        assert!(angle < 1e-5, "{q:?}: direction mismatch {angle:e} rad");
        assert!(((pushed.norm() / y1.norm()) - 1.0).abs() < 1e-5);
    }
}

#[test]
fn measured_drift_agrees_across_charts() {
    let m = builtin("perturbed-sphere", &Default::default()).unwrap();
    let opts = DriftOptions { periods: 20, tol: 1e-12 };
    let p0 = ChartPoint::new(0, vec![0.5, 0.3]);
    let tr = m.chart(0).unwrap().transition_to(1).unwrap();
    let p1 = ChartPoint { chart: 1, q: (tr.map)(&p0.q) };
    let a = curvature_drift_row(&m, &p0, 0.3, &opts).unwrap();
    let b = curvature_drift_row(&m, &p1, 0.3, &opts).unwrap();
    assert!(a.cosine.abs() > 0.98 && b.cosine.abs() > 0.98, "{} {}", a.cosine, b.cosine);
    assert_eq!(a.cosine.signum(), b.cosine.signum());
    assert!((a.displacement / b.displacement - 1.0).abs() < 0.05, "{} vs {}", a.displacement, b.displacement);
}

#[test]
fn constant_conformal_factor_is_degenerate() {
    let s = ModelBundleSystem::constant(1.0);
    let r = conformal_drift_experiment(&s, &[0.05, 0.1, 0.2, 0.3], [0.2, 0.4], &DriftOptions { periods: 6, tol: 1e-12 }).unwrap();
    assert!(r.degenerate);
    assert!(r.fit.is_none());
    assert!(r.rows.iter().all(|x| x.displacement < zoll_lab::drift::DEGENERATE_FLOOR));
}

#[test]
fn conformal_sweep_rejects_large_eps() {
    let s = ModelBundleSystem::sinusoidal(0.3);
    assert!(conformal_drift_experiment(&s, &[0.1, 0.5], [0.0, 0.0], &DriftOptions::default()).is_err());
}
