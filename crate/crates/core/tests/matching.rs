use std::f64::consts::PI;

use sdfslam::geometry::{normalize_angle, scan_to_points, GridGeometry, LaserScan, Point, Pose2};
use sdfslam::matching::{
    cost, gauss_newton, match_two_stage, trim_points, GaussNewtonParams, MatchConfig, MatchError,
};
use sdfslam::sdf::{SdfCell, SdfGrid};
use sdfslam::sim::{simulate_scan, Segment, SensorModel, World};
use sdfslam::submap::{pure_localize, MergedMap};

const RES: f64 = 0.05;
const TRUNC: f64 = 0.06;
const W_MAX: f64 = 10.0;

/// Three walls far from each other, so every bilinear patch near a wall
/// sees only that wall's straight distance field.
fn walls() -> World {
    World::new(vec![
        Segment::new(3.0, -2.0, 3.0, 2.0),
        Segment::new(-2.0, 3.0, 2.0, 3.5),
        Segment::new(-2.5, -3.0, 2.0, -3.0),
    ])
}

/// Exact signed distance to the nearest wall's line, positive on the
/// origin's side, known within 0.3 m of a wall.
fn analytic_map(world: &World) -> SdfGrid {
    let geo = GridGeometry::centered(RES, 180, 180);
    let mut g = SdfGrid::new(geo, TRUNC, W_MAX);
    for i in 0..geo.len() {
        let p = geo.cell_to_world(geo.cell_of_linear(i));
        let Some(s) = world
            .segments
            .iter()
            .min_by(|a, b| a.distance_to(&p).total_cmp(&b.distance_to(&p)))
        else {
            continue;
        };
        if s.distance_to(&p) > 0.3 {
            continue;
        }
        let dir = (s.b - s.a).normalize();
        let mut n = Point::new(-dir.y, dir.x);
        if n.dot(&(Point::zeros() - s.a)) < 0.0 {
            n = -n;
        }
        g.set_cell(
            i,
            SdfCell {
                f: n.dot(&(p - s.a)),
                w: W_MAX,
            },
        );
    }
    g
}

fn clean_model() -> SensorModel {
    SensorModel {
        noise_sigma: 0.0,
        ..SensorModel::default()
    }
}

fn params() -> GaussNewtonParams {
    MatchConfig::default().stage_params(20)
}

fn truth() -> Pose2 {
    Pose2::new(0.3, -0.2, 0.4)
}

#[test]
fn ground_truth_is_a_fixed_point() {
    let world = walls();
    let map = analytic_map(&world);
    let scan = simulate_scan(&world, &truth(), &clean_model(), 0).scan;
    let r = gauss_newton(&map, &scan_to_points(&scan), truth(), &params()).unwrap();
    assert!(
        r.iterations_stage1 <= 2,
        "{} iterations",
        r.iterations_stage1
    );
    assert!((r.pose.translation() - truth().translation()).norm() < 1e-6);
    assert!(normalize_angle(r.pose.theta - truth().theta).abs() < 1e-6);
}

#[test]
fn perturbed_start_is_recovered() {
    let world = walls();
    let map = analytic_map(&world);
    let scan = simulate_scan(&world, &truth(), &clean_model(), 0).scan;
    let t = truth();
    for (dx, dy, dth) in [
        (0.02, 0.02, 1.0),
        (-0.02, 0.02, -1.0),
        (0.02, -0.02, -1.0),
        (-0.02, -0.02, 1.0),
    ] {
        let init = Pose2::new(t.x + dx, t.y + dy, t.theta + f64::to_radians(dth));
        let r = match_two_stage(&map, &scan, init, &MatchConfig::default()).unwrap();
        assert!(
            (r.pose.translation() - t.translation()).norm() < 1e-3,
            "{:?}",
            r.pose
        );
        assert!(normalize_angle(r.pose.theta - t.theta).abs().to_degrees() < 0.05);
    }
}

#[test]
fn truth_costs_less_than_perturbed() {
    let world = walls();
    let map = analytic_map(&world);
    let scan = simulate_scan(&world, &truth(), &SensorModel::default(), 3).scan;
    let pts = scan_to_points(&scan);
    let delta = MatchConfig::default().huber_delta;
    let at = cost(&map, &pts, &truth(), delta).total;
    for a in 0..8 {
        let ang = a as f64 * PI / 4.0;
        let off = Pose2::new(
            truth().x + 0.05 * ang.cos(),
            truth().y + 0.05 * ang.sin(),
            truth().theta,
        );
        assert!(at < cost(&map, &pts, &off, delta).total);
    }
}

#[test]
fn single_beam_is_unobservable() {
    let world = walls();
    let map = analytic_map(&world);
    let scan = LaserScan {
        angle_min: 0.0,
        angle_increment: 0.0,
        ranges: vec![2.7],
        range_min: 0.05,
        range_max: 10.0,
        timestamp: 0.0,
    };
    let r = gauss_newton(&map, &scan_to_points(&scan), truth(), &params());
    assert_eq!(r, Err(MatchError::SingularHessian));
}

#[test]
fn all_outliers_leave_too_few_points() {
    let world = walls();
    let map = analytic_map(&world);
    // Every return lands in unobserved space half a meter from the sensor.
    let mut scan = simulate_scan(&world, &truth(), &clean_model(), 0).scan;
    scan.ranges.iter_mut().for_each(|r| *r = 0.5);
    let r = match_two_stage(&map, &scan, truth(), &MatchConfig::default());
    assert!(
        matches!(r, Err(MatchError::TooFewPoints { survivors: 0 })),
        "{r:?}"
    );
}

#[test]
fn clean_scan_trims_nothing() {
    let world = walls();
    let map = analytic_map(&world);
    let scan = simulate_scan(&world, &truth(), &clean_model(), 0).scan;
    let init = Pose2::new(truth().x + 0.01, truth().y, truth().theta);
    let cfg = MatchConfig::default();
    let stage1 = gauss_newton(
        &map,
        &scan_to_points(&scan),
        init,
        &cfg.stage_params(cfg.max_iters_stage1),
    )
    .unwrap();
    let r = match_two_stage(&map, &scan, init, &cfg).unwrap();
    assert!(r.trimmed_fraction() < 0.02, "{}", r.trimmed_fraction());
    assert!((r.pose.translation() - stage1.pose.translation()).norm() < 1e-3);
    assert_eq!(r.points_used + r.points_trimmed, scan.valid_count());
}

#[test]
fn cost_invariant_under_joint_cell_translation() {
    let world = walls();
    let map = analytic_map(&world);
    let scan = simulate_scan(&world, &truth(), &SensorModel::default(), 1).scan;
    let pts = scan_to_points(&scan);
    let delta = MatchConfig::default().huber_delta;
    for (i, j) in [(3, -7), (-20, 11), (1, 1)] {
        let offset = Point::new(i as f64 * RES, j as f64 * RES);
        let moved = map.translated(offset);
        let shift = Pose2::new(offset.x, offset.y, 0.0);
        let a = cost(&map, &pts, &truth(), delta).total;
        let b = cost(&moved, &pts, &shift.compose(&truth()), delta).total;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn trimming_is_nearly_idempotent() {
    let world = walls();
    let map = analytic_map(&world);
    let cfg = MatchConfig::default();
    let model = SensorModel {
        outlier_rate: 0.05,
        seed: 12,
        ..SensorModel::default()
    };
    for k in 0..10 {
        let scan = simulate_scan(&world, &truth(), &model, k).scan;
        let init = Pose2::new(truth().x + 0.01, truth().y - 0.01, truth().theta + 0.01);
        let r = match_two_stage(&map, &scan, init, &cfg).unwrap();
        let pts = scan_to_points(&scan);
        let kept = trim_points(&map, &pts, &r.pose, cfg.trim_threshold).len();
        let extra = r.points_used.saturating_sub(kept);
        assert!(
            (extra as f64) < 0.01 * pts.len() as f64,
            "scan {k}: {extra} more trimmed"
        );
    }
}

#[test]
fn matching_is_deterministic_and_read_only() {
    let world = walls();
    let merged = MergedMap {
        grid: analytic_map(&world),
        provenance: vec![0],
    };
    let before = merged.grid.checksum();
    let scan = simulate_scan(&world, &truth(), &SensorModel::default(), 5).scan;
    let init = Pose2::new(0.31, -0.19, 0.41);
    let cfg = MatchConfig::default();
    let a = pure_localize(&merged, &scan, init, 5, &cfg).unwrap();
    let b = pure_localize(&merged, &scan, init, 5, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.iterations_stage1 <= 5 && a.iterations_stage2 <= 5);
    assert_eq!(merged.grid.checksum(), before);
}
