//! Orthogonal (Deming, variance ratio 1) line fitting.

use crate::geometry::Point;

use super::SdfError;

/// A fitted line given by a point on it and a unit normal facing the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionLine {
    pub point: Point,
    pub normal: Point,
}

impl RegressionLine {
    /// Signed orthogonal distance; positive on the side the normal points to.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    /// Foot of the perpendicular from `p`.
    pub fn project(&self, p: &Point) -> Point {
        p - self.normal * self.signed_distance(p)
    }

    pub fn direction(&self) -> Point {
        Point::new(-self.normal.y, self.normal.x)
    }
}

/// Fits the line minimizing the sum of squared orthogonal distances and
/// orients its normal towards `sensor_origin`.
pub fn fit_deming(points: &[Point], sensor_origin: &Point) -> Result<RegressionLine, SdfError> {
    if points.len() < 2 {
        return Err(SdfError::DegenerateFit);
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Point::zeros(), |acc, p| acc + p) / n;
    if points.iter().all(|p| (p - centroid).norm() <= 1e-9) {
        return Err(SdfError::DegenerateFit);
    }
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - centroid;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    // Principal axis of the scatter matrix; the normal is perpendicular to it.
    let phi = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut normal = Point::new(-phi.sin(), phi.cos());
    if normal.dot(&(sensor_origin - centroid)) < 0.0 {
        normal = -normal;
    }
    Ok(RegressionLine {
        point: centroid,
        normal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{RngExt, SeedableRng};
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    /// Brute-force oracle: the normal angle in [0, π) minimizing the
    /// orthogonal SSE about the centroid, over a uniform angle grid.
    fn oracle_normal_angle(points: &[Point], steps: usize) -> f64 {
        let n = points.len() as f64;
        let c = points.iter().fold(Point::zeros(), |a, p| a + p) / n;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..steps {
            let a = PI * k as f64 / steps as f64;
            let nrm = Point::new(a.cos(), a.sin());
            let sse: f64 = points.iter().map(|p| (p - c).dot(&nrm).powi(2)).sum();
            if sse < best.0 {
                best = (sse, a);
            }
        }
        best.1
    }

    fn axis_angle_diff(a: f64, b: f64) -> f64 {
        // Normals are unoriented for this comparison.
        let d = (a - b).rem_euclid(PI);
        d.min(PI - d)
    }

    #[test]
    fn horizontal_line() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
        ];
        let l = fit_deming(&pts, &Point::new(1.0, 5.0)).unwrap();
        assert_abs_diff_eq!(l.point.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.point.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.normal.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.normal.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vertical_line() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, 2.0),
        ];
        let l = fit_deming(&pts, &Point::new(-1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(l.normal.x, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.normal.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            l.signed_distance(&Point::new(-0.5, 7.0)),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn coincident_points_rejected() {
        let pts = [Point::new(1.0, 1.0), Point::new(1.0, 1.0 + 1e-12)];
        assert_eq!(
            fit_deming(&pts, &Point::zeros()),
            Err(SdfError::DegenerateFit)
        );
        assert_eq!(
            fit_deming(&pts[..1], &Point::zeros()),
            Err(SdfError::DegenerateFit)
        );
    }

    #[test]
    fn noisy_line_matches_angle_grid_oracle() {
        let mut rng = rand_pcg::Pcg64::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.01).unwrap();
        for trial in 0..5 {
            let true_angle = 0.3 + trial as f64 * 0.61;
            let dir = Point::new(true_angle.cos(), true_angle.sin());
            let nrm = Point::new(-dir.y, dir.x);
            let pts: Vec<Point> = (0..50)
                .map(|_| {
                    let t: f64 = rng.random_range(-1.0..1.0);
                    Point::new(2.0, -1.0) + dir * t + nrm * noise.sample(&mut rng)
                })
                .collect();
            let l = fit_deming(&pts, &Point::new(10.0, 10.0)).unwrap();
            assert_abs_diff_eq!(l.normal.norm(), 1.0, epsilon = 1e-12);
            let fitted = l.normal.y.atan2(l.normal.x);
            let oracle = oracle_normal_angle(&pts, 100_000);
            assert!(axis_angle_diff(fitted, oracle) < 1e-3, "trial {trial}");
        }
    }

    proptest::proptest! {
        #[test]
        fn rotation_equivariant(rot in -3.0..3.0f64, seed in 0u64..1000) {
            let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
            let pts: Vec<Point> = (0..8)
                .map(|i| Point::new(i as f64 * 0.1, 0.3 * i as f64 * 0.1 + rng.random_range(-0.02..0.02)))
                .collect();
            let origin = Point::new(0.2, 3.0);
            let (s, c) = rot.sin_cos();
            let r = |p: &Point| Point::new(c * p.x - s * p.y, s * p.x + c * p.y);
            let a = fit_deming(&pts, &origin).unwrap();
            let rotated: Vec<Point> = pts.iter().map(r).collect();
            let b = fit_deming(&rotated, &r(&origin)).unwrap();
            let expected = r(&a.normal);
            proptest::prop_assert!((expected - b.normal).norm() < 1e-9);
        }
    }
}
