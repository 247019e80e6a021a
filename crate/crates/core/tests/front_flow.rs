use std::f64::consts::PI;
use std::sync::Arc;

use nslab::flow::{integrate, Form, NewtonianRhs, StepperConfig};
use nslab::forces::{ForceField, HFunction};
use nslab::front::{
    build_front, plane_embedding, shift_front, solve_nu, Branch, Exec, ParamAxis, ParamGrid,
    ShiftSource,
};
use nslab::geometry::MetricChart;
use nslab::legendre::{StateU, WField};
use nslab::media::{linear_medium, linear_medium_front};

fn unit_speed_w() -> WField {
    WField::analytic(
        |_, u| 1.0 / (u * u) - 1.0,
        |_, u| -2.0 / (u * u * u),
        |x, _| vec![0.0; x.len()],
    )
}

#[test]
fn sphere_geodesics_keep_speed_and_angular_momentum() {
    let chart = MetricChart::sphere();
    let rhs = NewtonianRhs {
        force: ForceField::new(unit_speed_w(), HFunction::Zero),
        chart: chart.clone(),
    };
    let (theta, phidot) = (1.0_f64, 0.5 / 1.0_f64.sin());
    let st = StateU {
        x: vec![theta, 0.0].into(),
        u: vec![0.3, phidot].into(),
        s: 0.0,
    };
    let traj = integrate(&rhs, st, &StepperConfig::rk4(1e-3, 3.0)).unwrap();
    let speed0 = chart.norm(&[theta, 0.0], &[0.3, phidot]).unwrap();
    let l0 = theta.sin().powi(2) * phidot;
    for s in &traj.samples {
        let speed = chart.norm(&s.x, &s.m).unwrap();
        assert!(
            (speed - speed0).abs() < 1e-10,
            "speed {speed} at t = {}",
            s.t
        );
        let l = s.x[0].sin().powi(2) * s.m[1];
        assert!(
            (l - l0).abs() < 1e-10,
            "angular momentum {l} at t = {}",
            s.t
        );
    }
}

/// Circle of radius 1 traversed at the non-uniform angle q + 0.3 sin q.
fn warped_circle(samples: usize) -> f64 {
    let grid = ParamGrid::new(vec![ParamAxis::periodic(0.0, 2.0 * PI, samples)]).unwrap();
    let embed = Arc::new(|q: &[f64]| {
        let a = q[0] + 0.3 * q[0].sin();
        vec![a.cos(), a.sin()]
    });
    let front = build_front(&MetricChart::euclidean(2), embed, grid, &[1.0, 0.0]).unwrap();
    front
        .points
        .iter()
        .zip(&front.normals)
        .map(|(x, n)| ((n[0] - x[0]).powi(2) + (n[1] - x[1]).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

#[test]
fn normals_converge_at_second_order() {
    let coarse = warped_circle(32);
    let fine = warped_circle(64);
    println!(
        "normal error {coarse:e} -> {fine:e}, ratio {}",
        coarse / fine
    );
    assert!(coarse / fine >= 3.9, "ratio {}", coarse / fine);
    assert!(fine < 1e-2);
}

#[test]
fn straight_lines_have_exact_normals() {
    let grid = ParamGrid::new(vec![ParamAxis::closed(-1.0, 1.0, 17)]).unwrap();
    let chart = MetricChart::euclidean(2);
    let d = [0.6, 0.8];
    let embed = Arc::new(move |q: &[f64]| {
        let t = q[0] + 0.4 * q[0].powi(3);
        vec![0.5 + t * d[0], -0.25 + t * d[1]]
    });
    let front = build_front(&chart, embed, grid, &[-1.0, 1.0]).unwrap();
    for n in &front.normals {
        assert!(
            (n[0] + 0.8).abs() < 1e-12 && (n[1] - 0.6).abs() < 1e-12,
            "{n:?}"
        );
    }
    let flat = build_front(
        &chart,
        plane_embedding(vec![0.0, 0.0], vec![d.to_vec()]),
        ParamGrid::new(vec![ParamAxis::closed(0.0, 1.0, 5)]).unwrap(),
        &[0.8, -0.6],
    )
    .unwrap();
    for n in &flat.normals {
        assert!(
            (n[0] - 0.8).abs() < 1e-12 && (n[1] + 0.6).abs() < 1e-12,
            "{n:?}"
        );
    }
}

#[test]
fn sequential_and_parallel_shifts_agree_bitwise() {
    let (chart, sym) = linear_medium();
    let mesh = solve_nu(
        &sym,
        &chart,
        &linear_medium_front(33).unwrap(),
        Branch::Positive,
    )
    .unwrap();
    let source = ShiftSource {
        symbol: Some(sym),
        force: None,
    };
    let cfg = StepperConfig::rk4(1e-2, 0.5);
    for form in [Form::Hamilton, Form::Modified] {
        let a = shift_front(
            &source,
            &chart,
            &mesh,
            form,
            &cfg,
            &[0.25, 0.5],
            Exec::Sequential,
        )
        .unwrap();
        let b = shift_front(
            &source,
            &chart,
            &mesh,
            form,
            &cfg,
            &[0.25, 0.5],
            Exec::Parallel,
        )
        .unwrap();
        assert_eq!(a.trajectories, b.trajectories);
        assert_eq!(a.diagnostics, b.diagnostics);
        for ((ta, fa), (tb, fb)) in a.fronts.iter().zip(&b.fronts) {
            assert_eq!(ta, tb);
            assert_eq!(fa.points, fb.points);
            assert_eq!(fa.phase, fb.phase);
        }
    }
}
