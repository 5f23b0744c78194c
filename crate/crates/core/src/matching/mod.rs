//! Scan-to-map registration.
//!
//! The pose is found by minimizing the Huber-robustified sum of interpolated
//! weighted distances `W·F` at the transformed hit points, using Gauss-Newton.
//! [`match_two_stage`] first solves with every point, then drops the points
//! that land outside the truncation band and solves again from there.

mod field;
mod solver;

use thiserror::Error;

use crate::geometry::{normalize_angle, scan_to_points, LaserScan, Point, Pose2};
use crate::sdf::SdfGrid;

pub use field::{sample_distance, sample_sdf, saturated_value, FieldSample};
pub use solver::{cost, gauss_newton, huber, huber_weight, CostEval, GaussNewtonParams};

/// Fewer stage-two survivors than this make the pose unreliable.
pub const MIN_SURVIVORS: usize = 10;

/// Slack under the trim threshold so saturated cells, stored at `f32`
/// precision, still count as outside the band.
const SATURATION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("normal matrix is rank deficient; pose is unobservable")]
    SingularHessian,
    #[error("only {survivors} points survived trimming (need {MIN_SURVIVORS})")]
    TooFewPoints { survivors: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    pub max_iters_stage1: usize,
    pub max_iters_stage2: usize,
    /// Points whose interpolated `|F|` reaches this are dropped in stage two.
    pub trim_threshold: f64,
    /// Huber threshold in weighted meters (`W·F`).
    pub huber_delta: f64,
    pub convergence_eps: f64,
}

impl MatchConfig {
    /// Defaults derived from the map: trim at the truncation distance and a
    /// Huber threshold at a third of the saturated weighted distance.
    pub fn for_map(truncation: f64, w_max: f64) -> Self {
        Self {
            max_iters_stage1: 10,
            max_iters_stage2: 20,
            trim_threshold: truncation,
            huber_delta: w_max * truncation / 3.0,
            convergence_eps: 1e-6,
        }
    }

    pub fn stage_params(&self, max_iters: usize) -> GaussNewtonParams {
        GaussNewtonParams {
            max_iters,
            convergence_eps: self.convergence_eps,
            huber_delta: self.huber_delta,
        }
    }
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self::for_map(0.06, 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub pose: Pose2,
    pub final_cost: f64,
    pub iterations_stage1: usize,
    pub iterations_stage2: usize,
    /// Points entering the final solve.
    pub points_used: usize,
    /// Points discarded by trimming.
    pub points_trimmed: usize,
    pub converged: bool,
}

impl MatchResult {
    pub fn trimmed_fraction(&self) -> f64 {
        let n = self.points_used + self.points_trimmed;
        if n == 0 {
            0.0
        } else {
            self.points_trimmed as f64 / n as f64
        }
    }
}

/// Points (sensor frame) whose interpolated distance at `pose` lies strictly
/// inside the trim band; points in unknown space are dropped too.
pub fn trim_points(grid: &SdfGrid, points: &[Point], pose: &Pose2, threshold: f64) -> Vec<Point> {
    points
        .iter()
        .filter(|d| {
            sample_distance(grid, &pose.transform_point(d))
                .is_some_and(|f| f.abs() < threshold - SATURATION_SLACK)
        })
        .copied()
        .collect()
}

/// Two-stage robust registration of `scan` against `grid`, starting at `init`.
pub fn match_two_stage(
    grid: &SdfGrid,
    scan: &LaserScan,
    init: Pose2,
    cfg: &MatchConfig,
) -> Result<MatchResult, MatchError> {
    let points = scan_to_points(scan);
    match_points_two_stage(grid, &points, init, cfg)
}

/// [`match_two_stage`] on already extracted sensor-frame points.
pub fn match_points_two_stage(
    grid: &SdfGrid,
    points: &[Point],
    init: Pose2,
    cfg: &MatchConfig,
) -> Result<MatchResult, MatchError> {
    let stage1 = match gauss_newton(grid, points, init, &cfg.stage_params(cfg.max_iters_stage1)) {
        Ok(r) => r,
        Err(MatchError::SingularHessian) => {
            let survivors = trim_points(grid, points, &init, cfg.trim_threshold).len();
            if survivors < MIN_SURVIVORS {
                return Err(MatchError::TooFewPoints { survivors });
            }
            return Err(MatchError::SingularHessian);
        }
        Err(e) => return Err(e),
    };

    let survivors = trim_points(grid, points, &stage1.pose, cfg.trim_threshold);
    if survivors.len() < MIN_SURVIVORS {
        return Err(MatchError::TooFewPoints {
            survivors: survivors.len(),
        });
    }
    let stage2 = gauss_newton(
        grid,
        &survivors,
        stage1.pose,
        &cfg.stage_params(cfg.max_iters_stage2),
    )?;
    Ok(MatchResult {
        pose: stage2.pose,
        final_cost: stage2.final_cost,
        iterations_stage1: stage1.iterations_stage1,
        iterations_stage2: stage2.iterations_stage1,
        points_used: survivors.len(),
        points_trimmed: points.len() - survivors.len(),
        converged: stage2.converged,
    })
}

/// Constant-velocity extrapolation of the last two timestamped poses to `t`.
/// With a single prior pose it is returned unchanged.
///
/// Panics on an empty history.
pub fn predict_pose(history: &[(f64, Pose2)], t: f64) -> Pose2 {
    let (t1, p1) = *history
        .last()
        .expect("predict_pose needs at least one pose");
    if history.len() < 2 {
        return p1;
    }
    let (t0, p0) = history[history.len() - 2];
    let dt = t1 - t0;
    if dt.is_nan() || dt <= 0.0 {
        return p1;
    }
    let k = (t - t1) / dt;
    Pose2::new(
        p1.x + k * (p1.x - p0.x),
        p1.y + k * (p1.y - p0.y),
        p1.theta + k * normalize_angle(p1.theta - p0.theta),
    )
}
