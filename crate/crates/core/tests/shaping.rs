//! Spline, shape kinematics, time quadratic and rapid shaper properties.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use splinetraj::constants::MU_SUN;
use splinetraj::rapid::{base_cubic, best_revolution, gamma, shape_rapid, RapidOptions};
use splinetraj::shape::{default_nodes, profile, ShapedTrajectory, Spacecraft};
use splinetraj::spline::CubicSpline;
use splinetraj::time_solver::{quadratic_coeffs_direct, quadratic_coeffs_sampled, TimeIntegrand};

/// Clamped cubic spline by solving the full 4n x 4n system for the
/// global coefficients of `a s^3 + b s^2 + c s + d` on each segment.
fn dense_spline(y: &[f64]) -> Vec<[f64; 4]> {
    let n = y.len() - 1;
    let m = 4 * n;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let val = |s: f64| [s * s * s, s * s, s, 1.0];
    let d1 = |s: f64| [3.0 * s * s, 2.0 * s, 1.0, 0.0];
    let d2 = |s: f64| [6.0 * s, 2.0, 0.0, 0.0];
    let mut row = 0;
    for i in 0..n {
        let (s0, s1) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
        for (s, target) in [(s0, y[i]), (s1, y[i + 1])] {
            for (k, c) in val(s).into_iter().enumerate() {
                a[(row, 4 * i + k)] = c;
            }
            rhs[row] = target;
            row += 1;
        }
    }
    for i in 1..n {
        let s = i as f64 / n as f64;
        for basis in [d1, d2] {
            for (k, c) in basis(s).into_iter().enumerate() {
                a[(row, 4 * (i - 1) + k)] = c;
                a[(row, 4 * i + k)] = -c;
            }
            row += 1;
        }
    }
    for (seg, s) in [(0, 0.0), (n - 1, 1.0)] {
        for (k, c) in d1(s).into_iter().enumerate() {
            a[(row, 4 * seg + k)] = c;
        }
        row += 1;
    }
    let x = a.lu().solve(&rhs).unwrap();
    (0..n).map(|i| [x[4 * i], x[4 * i + 1], x[4 * i + 2], x[4 * i + 3]]).collect()
}

proptest! {
    #[test]
    fn spline_matches_dense_solve(y in prop::collection::vec(-5.0..5.0f64, 5)) {
        let sp = CubicSpline::clamped(&y).unwrap();
        let dense = dense_spline(&y);
        for (got, want) in sp.coefficients().iter().zip(&dense) {
            for k in 0..4 {
                prop_assert!((got[k] - want[k]).abs() <= 1e-9 * (1.0 + want[k].abs()));
            }
        }
    }

    #[test]
    fn spline_is_c2_and_clamped(y in prop::collection::vec(-1e3..1e3f64, 2..40)) {
        let sp = CubicSpline::clamped(&y).unwrap();
        for i in 1..sp.segments() {
            let s = sp.knot(i);
            let (l, r) = (sp.eval_on_segment(i - 1, s), sp.eval_on_segment(i, s));
            for (a, b) in [(l.0, r.0), (l.1, r.1), (l.2, r.2)] {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
            prop_assert!((l.0 - y[i]).abs() <= 1e-12 * (1.0 + y[i].abs()));
        }
        prop_assert_eq!(sp.eval(0.0).1, 0.0);
        prop_assert!(sp.eval(1.0).1.abs() <= 1e-9 * (1.0 + y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))));
    }
}

/// Flight time between `s0` and `s1` by composite Simpson on `t'`.
fn time_between(traj: &ShapedTrajectory, s0: f64, s1: f64) -> f64 {
    let m = 64;
    let h = (s1 - s0) / m as f64;
    let mut sum = traj.time_derivative(s0).unwrap() + traj.time_derivative(s1).unwrap();
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * traj.time_derivative(s0 + i as f64 * h).unwrap();
    }
    sum * h / 3.0
}

#[test]
fn velocity_and_acceleration_match_time_differences() {
    for (_, a) in common::perturbed_shapes(4, 5, 7) {
        let traj = a.traj;
        for s in [0.11, 0.37, 0.5, 0.73, 0.94] {
            let r = traj.point(s).unwrap();
            // Steps sized so truncation (ds * dL)^2 stays below the tolerance.
            let ds = 1e-6;
            let (rm, rp) = (traj.point(s - ds).unwrap(), traj.point(s + ds).unwrap());
            let (tm, tp) = (time_between(&traj, s - ds, s), time_between(&traj, s, s + ds));
            let v_fd = (rp.r - rm.r) / (tm + tp);
            assert!((v_fd - r.v).norm() <= 1e-6 * r.v.norm(), "s = {s}");
            let ds = 1e-4;
            let (rm, rp) = (traj.point(s - ds).unwrap(), traj.point(s + ds).unwrap());
            let (tm, tp) = (time_between(&traj, s - ds, s), time_between(&traj, s, s + ds));
            let a_fd = 2.0 * ((rp.r - r.r) / tp - (r.r - rm.r) / tm) / (tm + tp);
            assert!((a_fd - r.a).norm() <= 1e-3 * r.a.norm(), "s = {s}");
            let gravity = -MU_SUN * r.r / r.r.norm().powi(3);
            assert!((r.u + gravity - r.a).norm() <= 1e-12 * r.a.norm().max(gravity.norm()));
        }
    }
}

#[test]
fn eval_state_time_is_monotone_and_consistent() {
    let (_, a) = common::perturbed_shapes(4, 1, 3).remove(0);
    let traj = a.traj;
    let samples = traj.sample(default_nodes(6)).unwrap();
    for w in samples.windows(2) {
        assert!(w[1].t > w[0].t && w[1].l > w[0].l && w[1].t_prime > 0.0);
    }
    let mid = traj.eval_state(0.5).unwrap();
    let simpson = time_between(&traj, 0.0, 0.25) + time_between(&traj, 0.25, 0.5);
    assert!((mid.t - simpson).abs() <= 1e-6 * simpson);
    assert!(traj.eval_state(1.5).is_err());
}

#[test]
fn trapezoid_time_converges_under_refinement() {
    let (_, a) = common::perturbed_shapes(4, 1, 5).remove(0);
    let n = default_nodes(6);
    let t1 = a.traj.transfer_time(n).unwrap();
    let t4 = a.traj.transfer_time(4 * n).unwrap();
    let t16 = a.traj.transfer_time(16 * n).unwrap();
    assert!((t1 - t16).abs() <= 1e-6 * t16, "{t1} vs {t16}");
    // Second-order convergence: quartering the step cuts the error 16-fold.
    let ratio = (t1 - t16) / (t4 - t16);
    assert!((12.0..20.0).contains(&ratio), "Richardson ratio {ratio}");
}

#[test]
fn delta_v_does_not_depend_on_the_spacecraft() {
    let (_, a) = common::perturbed_shapes(4, 1, 9).remove(0);
    let light = profile(&a.traj, &Spacecraft::new(500.0, 2000.0, 0.1).unwrap(), 3000).unwrap();
    let heavy = profile(&a.traj, &Spacecraft::new(9000.0, 4500.0, 2.0).unwrap(), 3000).unwrap();
    assert_eq!(light.metrics.delta_v, heavy.metrics.delta_v);
    assert_eq!(light.metrics.u_max, heavy.metrics.u_max);
    let metrics = a.traj.shape_metrics(3000).unwrap();
    assert!((metrics.delta_v - light.metrics.delta_v).abs() <= 1e-12 * metrics.delta_v);
}

#[test]
fn direct_and_sampled_quadratics_agree() {
    let bc = common::table1_bc(16.0, 6);
    let rapid = shape_rapid(&bc, MU_SUN, &RapidOptions::default()).unwrap();
    let [_, f, g, _, _, hbar] = &rapid.traj.splines;
    let integrand = TimeIntegrand { f, g, hbar, l0: rapid.traj.l0, dl: rapid.traj.dl };
    let (p0, pf) = (bc.oe0.p, bc.oef.p);
    let origin = 0.5 * (p0 + pf);
    let nodes = 3000;
    let direct = quadratic_coeffs_direct(gamma, |s| base_cubic(p0, pf, s), &integrand, bc.tof(), nodes, origin).unwrap();
    let time_at = |p1: f64| {
        let h = 1.0 / nodes as f64;
        let mut t = 0.0;
        for i in 0..=nodes {
            let s = i as f64 * h;
            let p = gamma(s) * (p1 - origin) + base_cubic(p0, pf, s);
            let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
            t += w * p * p * integrand.weight(s)?;
        }
        Ok(t * h)
    };
    let sampled = quadratic_coeffs_sampled(time_at, p0, pf, bc.tof()).unwrap();
    for k in -3..=3 {
        let p1 = origin * (1.0 + 0.2 * k as f64);
        let (rd, rs) = (direct.residual(p1), sampled.residual(p1));
        assert!((rd - rs).abs() <= 1e-9 * bc.tof(), "p1 = {p1}: {rd} vs {rs}");
    }
}

#[test]
fn discriminant_and_roots_move_monotonically_with_flight_time() {
    let mut prev: Option<(f64, f64, f64)> = None;
    for k in 0..9 {
        let years = 14.0 + 0.5 * k as f64;
        let rapid = shape_rapid(&common::table1_bc(years, 6), MU_SUN, &RapidOptions::default()).unwrap();
        let (hi, lo) = (rapid.report.roots[0].max(rapid.report.roots[1]), rapid.report.roots[0].min(rapid.report.roots[1]));
        let cur = (rapid.report.delta_t, hi, lo);
        if let Some(p) = prev {
            assert!(cur.0 >= p.0, "discriminant fell at {years} yr");
            assert!(cur.1 >= p.1, "upper root fell at {years} yr");
            assert!(cur.2 <= p.2, "lower root rose at {years} yr");
        }
        prev = Some(cur);
    }
}

#[test]
fn chosen_root_closes_the_flight_time() {
    for years in [8.0, 16.0, 24.0] {
        let bc = common::table1_bc(years, (years / 8.0 * 3.0) as u32);
        let rapid = shape_rapid(&bc, MU_SUN, &RapidOptions::default()).unwrap();
        assert!(rapid.is_feasible());
        let t = rapid.traj.transfer_time(default_nodes(bc.revs)).unwrap();
        assert!((t - bc.tof()).abs() <= 1e-6 * bc.tof());
    }
}

#[test]
fn table2_delta_v_ordering_is_reproduced() {
    // Paper ordering of the six rows by velocity increment.
    let published = [23.01, 22.66, 23.29, 24.69, 26.67, 29.07];
    let years = [8.0, 16.0, 24.0, 32.0, 40.0, 48.0];
    let dv: Vec<f64> = years
        .iter()
        .map(|&y| best_revolution(&common::table1_bc(y, 0), MU_SUN, 0..=30, &RapidOptions::default()).unwrap().metrics.delta_v)
        .collect();
    let order = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        idx
    };
    assert_eq!(order(&dv), order(&published));
}

#[test]
fn rapid_shape_is_deterministic() {
    let bc = common::table1_bc(8.0, 3);
    let a = shape_rapid(&bc, MU_SUN, &RapidOptions::default()).unwrap();
    let b = shape_rapid(&bc, MU_SUN, &RapidOptions::default()).unwrap();
    assert_eq!(a, b);
}
