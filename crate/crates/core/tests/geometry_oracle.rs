use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng as _;
use tgi_core::geometry::oracle::mc_contains;
use tgi_core::geometry::*;
use tgi_core::rng;

/// Signed containment slack: the smallest distance by which any pin boundary
/// point stays inside its hole (negative when some point is outside).
fn slack(spec: &WorkpieceSpec, defects: &DefectParams, pose: PlanarPose) -> f64 {
    let (s, c) = pose.theta.sin_cos();
    let mut worst = f64::INFINITY;
    for i in 0..spec.pin_count() {
        let h = spec.nominal_pin(i);
        let d = defects.offsets[i];
        let p = [h[0] + d[0], h[1] + d[1]];
        let q = [c * p[0] - s * p[1] + pose.x - h[0], s * p[0] + c * p[1] + pose.y - h[1]];
        let m = match spec.shape {
            PinShape::Circle { pin_radius, hole_radius } => hole_radius - pin_radius - q[0].hypot(q[1]),
            PinShape::Polygon { sides, pin_circumradius, hole_circumradius } => {
                let n = sides as usize;
                let apothem = hole_circumradius * (PI / n as f64).cos();
                (0..n)
                    .flat_map(|v| {
                        let a = 2.0 * PI * v as f64 / n as f64 + pose.theta;
                        let vx = q[0] + pin_circumradius * a.cos();
                        let vy = q[1] + pin_circumradius * a.sin();
                        (0..n).map(move |e| {
                            let phi = (2 * e + 1) as f64 * PI / n as f64;
                            apothem - (vx * phi.cos() + vy * phi.sin())
                        })
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        };
        worst = worst.min(m);
    }
    worst
}

fn random_case(r: &mut rng::Rng) -> (WorkpieceSpec, DefectParams, PlanarPose) {
    let spec = if r.random_bool(0.5) {
        let rp = r.random_range(0.2..0.45);
        let rh = r.random_range(rp + 0.05..rp + 0.3);
        WorkpieceSpec::circle_grid(r.random_range(1..=2), r.random_range(1..=4), rp, rh, 7.62, 2.54)
    } else {
        let rp = r.random_range(1.0..1.6);
        WorkpieceSpec::polygon(r.random_range(3..=6), rp, rp * r.random_range(1.03..1.15))
    };
    let offsets = (0..spec.pin_count()).map(|_| [r.random_range(-0.05..0.05), r.random_range(-0.05..0.05)]).collect();
    let pose = PlanarPose::new(r.random_range(-0.15..0.15), r.random_range(-0.15..0.15), r.random_range(-0.06..0.06));
    (spec, DefectParams { offsets }, pose)
}

#[test]
fn contains_agrees_with_sampling_oracle() {
    let mut r = rng::from_seed(2024);
    let (mut checked, mut inside) = (0, 0);
    while checked < 10_000 {
        let (spec, defects, pose) = random_case(&mut r);
        let m = slack(&spec, &defects, pose);
        if m.abs() < 0.02 {
            continue;
        }
        let exact = contains(&spec, &defects, pose);
        assert_eq!(exact, m > 0.0, "slack {m} disagrees with contains");
        let mc = mc_contains(&spec, &defects, pose, 2000, &mut r);
        assert_eq!(exact, mc, "{spec:?} {defects:?} {pose:?} slack {m}");
        checked += 1;
        inside += exact as usize;
    }
    // Both outcomes must be well represented.
    assert!(inside > 1000 && inside < 9000, "inside {inside}");
}

#[test]
fn clear_violation_is_caught_by_oracle() {
    let spec = WorkpieceSpec::circle_grid(1, 1, 0.3, 0.5, 1.0, 1.0);
    let d = DefectParams::nominal(&spec);
    let pose = PlanarPose::new(0.25, 0.0, 0.0);
    assert!(!contains(&spec, &d, pose));
    assert!(!mc_contains(&spec, &d, pose, 10_000, &mut rng::from_seed(1)));
}

#[test]
fn two_by_two_map_is_point_symmetric() {
    let spec = WorkpieceSpec::circle_grid(2, 2, 0.3, 0.5, 2.5, 2.5);
    let map = render_tolerance(&spec, &DefectParams::nominal(&spec), 1.0).unwrap();
    let centre = theta_sup(&spec, &DefectParams::nominal(&spec), 0.0, 0.0);
    assert!(centre > 0.0);
    // Dense θ scan cross-check of the centre value.
    let dense = (0..=60_000)
        .map(|k| k as f64 * 1e-5)
        .take_while(|t| contains(&spec, &DefectParams::nominal(&spec), PlanarPose::new(0.0, 0.0, *t)))
        .last()
        .unwrap();
    assert!((centre - dense).abs() < 2e-4, "{centre} vs {dense}");
    for i in 0..MAP_SIZE {
        for j in 0..MAP_SIZE {
            let a = map.get(i, j);
            assert!(a >= 0.0);
            assert!((a - map.get(MAP_SIZE - 1 - i, MAP_SIZE - 1 - j)).abs() < 1e-3);
        }
    }
}

proptest! {
    #[test]
    fn infeasibility_grows_outward_for_nominal_layouts(
        cols in 1usize..=6, x in -0.4f64..0.4, y in -0.4f64..0.4, lambda in 1.0f64..4.0,
    ) {
        let spec = WorkpieceSpec::socket_2xn(cols);
        let d = DefectParams::nominal(&spec);
        if !contains(&spec, &d, PlanarPose::new(x, y, 0.0)) {
            prop_assert!(!contains(&spec, &d, PlanarPose::new(lambda * x, lambda * y, 0.0)));
        }
    }

    #[test]
    fn theta_sup_positive_iff_contained(cols in 1usize..=4, x in -0.3f64..0.3, y in -0.3f64..0.3) {
        let spec = WorkpieceSpec::socket_2xn(cols);
        let d = DefectParams::nominal(&spec);
        prop_assert_eq!(theta_sup(&spec, &d, x, y) > 0.0, contains(&spec, &d, PlanarPose::new(x, y, 0.0)));
    }
}
