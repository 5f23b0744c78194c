use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::geometry::{Point, Pose2};
use crate::sdf::SdfGrid;

use super::field::sample_sdf;
use super::{MatchError, MatchResult};

/// Eigenvalue ratio below which the normal matrix is treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;
const DAMPING: f64 = 1e-6;
const MAX_STEP_HALVINGS: usize = 6;
/// Steps below this (meters and radians) count as converged.
const STEP_TOLERANCE: f64 = 1e-8;

/// Huber loss scaled to `r²` in the quadratic region.
pub fn huber(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        r * r
    } else {
        2.0 * delta * a - delta * delta
    }
}

/// IRLS weight matching [`huber`].
pub fn huber_weight(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        1.0
    } else {
        delta / a
    }
}

/// Robust alignment cost of sensor-frame points placed at `pose`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEval {
    pub total: f64,
    /// Interpolated `W·F` per point, in input order.
    pub residuals: Vec<f64>,
}

pub fn cost(grid: &SdfGrid, points: &[Point], pose: &Pose2, huber_delta: f64) -> CostEval {
    let residuals: Vec<f64> = points
        .iter()
        .map(|d| sample_sdf(grid, &pose.transform_point(d)).value)
        .collect();
    let total = residuals.iter().map(|r| huber(*r, huber_delta)).sum();
    CostEval { total, residuals }
}

fn total_cost(grid: &SdfGrid, points: &[Point], pose: &Pose2, delta: f64) -> f64 {
    points
        .iter()
        .map(|d| huber(sample_sdf(grid, &pose.transform_point(d)).value, delta))
        .sum()
}

/// Iteration limits and thresholds for one Gauss-Newton run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonParams {
    pub max_iters: usize,
    /// Stop once the relative cost decrease falls below this.
    pub convergence_eps: f64,
    pub huber_delta: f64,
}

fn normal_equations(
    grid: &SdfGrid,
    points: &[Point],
    pose: &Pose2,
    delta: f64,
) -> (Matrix3<f64>, Vector3<f64>) {
    let (s, c) = pose.theta.sin_cos();
    let mut h = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for d in points {
        let sample = sample_sdf(grid, &pose.transform_point(d));
        if !sample.known {
            continue;
        }
        let g = sample.gradient;
        // d(R p)/dθ
        let dx = -s * d.x - c * d.y;
        let dy = c * d.x - s * d.y;
        let j = Vector3::new(g.x, g.y, g.x * dx + g.y * dy);
        let w = huber_weight(sample.value, delta);
        h += w * j * j.transpose();
        b += w * sample.value * j;
    }
    (h, b)
}

fn is_rank_deficient(h: &Matrix3<f64>) -> bool {
    let trace = h.trace();
    if !trace.is_finite() || trace <= 0.0 {
        return true;
    }
    let eig = SymmetricEigen::new(*h).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    min <= RANK_TOLERANCE * max
}

/// Robust Gauss-Newton over `(x, y, θ)` starting from `init`.
///
/// Each step solves the damped 3×3 normal equations with Huber IRLS weights
/// and is halved until the cost does not increase, so the returned pose never
/// costs more than `init`. Fails with [`MatchError::SingularHessian`] when the
/// first normal matrix is rank deficient; later degeneracy stops early.
pub fn gauss_newton(
    grid: &SdfGrid,
    points: &[Point],
    init: Pose2,
    params: &GaussNewtonParams,
) -> Result<MatchResult, MatchError> {
    let delta = params.huber_delta;
    let mut pose = init;
    let mut current = total_cost(grid, points, &pose, delta);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iters {
        let (h, b) = normal_equations(grid, points, &pose, delta);
        if is_rank_deficient(&h) {
            if iterations == 0 {
                return Err(MatchError::SingularHessian);
            }
            break;
        }
        let damped = h + Matrix3::identity() * (DAMPING * h.trace());
        let Some(chol) = damped.cholesky() else {
            if iterations == 0 {
                return Err(MatchError::SingularHessian);
            }
            break;
        };
        let step = -chol.solve(&b);
        iterations += 1;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let candidate = Pose2::new(
                pose.x + scale * step.x,
                pose.y + scale * step.y,
                pose.theta + scale * step.z,
            );
            let c = total_cost(grid, points, &candidate, delta);
            if c <= current {
                accepted = Some((candidate, c));
                break;
            }
            scale *= 0.5;
        }
        let Some((candidate, c)) = accepted else {
            // No descent along the step: numerically at the minimum.
            converged = true;
            break;
        };
        let relative = if current > 0.0 {
            (current - c) / current
        } else {
            0.0
        };
        pose = candidate;
        current = c;
        if relative < params.convergence_eps || scale * step.norm() < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }

    Ok(MatchResult {
        pose,
        final_cost: current,
        iterations_stage1: iterations,
        iterations_stage2: 0,
        points_used: points.len(),
        points_trimmed: 0,
        converged,
    })
}
