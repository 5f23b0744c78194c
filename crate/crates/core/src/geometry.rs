//! Planar poses, laser scans and grid geometry shared by every other module.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;

/// A point or vector in the plane, in meters.
pub type Point = Vector2<f64>;

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Planar rigid transform mapping the sensor frame into the map frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    /// Heading in radians, kept in `(-π, π]`.
    pub theta: f64,
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        }
    }

    pub fn translation(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.theta.sin_cos();
        Pose2::new(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            -self.theta,
        )
    }

    /// Rotate `d` by the heading, then translate.
    pub fn transform_point(&self, d: &Point) -> Point {
        let (s, c) = self.theta.sin_cos();
        Point::new(self.x + c * d.x - s * d.y, self.y + s * d.x + c * d.y)
    }

    /// Pose of `other` expressed in the frame of `self`, i.e. `self⁻¹ ∘ other`.
    pub fn between(&self, other: &Pose2) -> Pose2 {
        self.inverse().compose(other)
    }
}

/// One revolution of range readings.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserScan {
    pub angle_min: f64,
    pub angle_increment: f64,
    pub ranges: Vec<f64>,
    pub range_min: f64,
    pub range_max: f64,
    pub timestamp: f64,
}

/// A valid beam return: index, sensor-frame angle and measured range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub index: usize,
    pub angle: f64,
    pub range: f64,
}

impl Beam {
    pub fn direction(&self) -> Point {
        Point::new(self.angle.cos(), self.angle.sin())
    }

    pub fn endpoint(&self) -> Point {
        self.direction() * self.range
    }
}

impl LaserScan {
    pub fn is_valid_range(&self, r: f64) -> bool {
        r.is_finite() && r >= self.range_min && r <= self.range_max
    }

    pub fn beam_angle(&self, i: usize) -> f64 {
        self.angle_min + i as f64 * self.angle_increment
    }

    /// Valid returns in beam order; NaN, infinite and out-of-range readings are skipped.
    pub fn valid_beams(&self) -> impl Iterator<Item = Beam> + '_ {
        self.ranges
            .iter()
            .enumerate()
            .filter(|(_, r)| self.is_valid_range(**r))
            .map(|(index, &range)| Beam {
                index,
                angle: self.beam_angle(index),
                range,
            })
    }

    pub fn valid_count(&self) -> usize {
        self.ranges
            .iter()
            .filter(|r| self.is_valid_range(**r))
            .count()
    }
}

/// Sensor-frame hit points, one per valid reading, in beam order.
pub fn scan_to_points(scan: &LaserScan) -> Vec<Point> {
    scan.valid_beams().map(|b| b.endpoint()).collect()
}

/// Integer cell coordinates; may lie outside a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    pub col: i64,
    pub row: i64,
}

impl CellIndex {
    pub fn new(col: i64, row: i64) -> Self {
        Self { col, row }
    }

    pub fn chebyshev(&self, other: &CellIndex) -> i64 {
        (self.col - other.col)
            .abs()
            .max((self.row - other.row).abs())
    }
}

/// Placement and size of a regular grid. `origin` is the world coordinate of
/// the center of cell (0, 0); columns grow along +x and rows along +y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub origin: Point,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridGeometry {
    /// Panics on a non-positive resolution or an empty grid.
    pub fn new(origin: Point, resolution: f64, width: usize, height: usize) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        assert!(
            width >= 1 && height >= 1,
            "grid must have at least one cell"
        );
        Self {
            origin,
            resolution,
            width,
            height,
        }
    }

    /// A `width × height` grid whose footprint is centered on the frame origin.
    pub fn centered(resolution: f64, width: usize, height: usize) -> Self {
        let ox = -(width as f64 - 1.0) * 0.5 * resolution;
        let oy = -(height as f64 - 1.0) * 0.5 * resolution;
        Self::new(Point::new(ox, oy), resolution, width, height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn world_to_cell(&self, p: &Point) -> CellIndex {
        CellIndex::new(
            ((p.x - self.origin.x) / self.resolution + 0.5).floor() as i64,
            ((p.y - self.origin.y) / self.resolution + 0.5).floor() as i64,
        )
    }

    pub fn cell_to_world(&self, c: CellIndex) -> Point {
        Point::new(
            self.origin.x + c.col as f64 * self.resolution,
            self.origin.y + c.row as f64 * self.resolution,
        )
    }

    /// Continuous cell coordinates: cell centers sit at integer values.
    pub fn world_to_continuous(&self, p: &Point) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.resolution,
            (p.y - self.origin.y) / self.resolution,
        )
    }

    pub fn contains(&self, c: CellIndex) -> bool {
        c.col >= 0 && c.row >= 0 && (c.col as usize) < self.width && (c.row as usize) < self.height
    }

    /// Row-major linear index, or `None` when outside.
    pub fn linear_index(&self, c: CellIndex) -> Option<usize> {
        self.contains(c)
            .then(|| c.row as usize * self.width + c.col as usize)
    }

    pub fn cell_of_linear(&self, idx: usize) -> CellIndex {
        CellIndex::new((idx % self.width) as i64, (idx / self.width) as i64)
    }

    /// Outer corners of the grid footprint (cell edges, not centers):
    /// min-min, max-min, max-max, min-max.
    pub fn corners(&self) -> [Point; 4] {
        let h = 0.5 * self.resolution;
        let x0 = self.origin.x - h;
        let y0 = self.origin.y - h;
        let x1 = self.origin.x + (self.width as f64 - 0.5) * self.resolution;
        let y1 = self.origin.y + (self.height as f64 - 0.5) * self.resolution;
        [
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]
    }
}
