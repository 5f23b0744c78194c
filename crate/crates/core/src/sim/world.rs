use crate::geometry::Point;

fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// A wall segment in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(ax: f64, ay: f64, bx: f64, by: f64) -> Self {
        Self {
            a: Point::new(ax, ay),
            b: Point::new(bx, by),
        }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn distance_to(&self, p: &Point) -> f64 {
        let e = self.b - self.a;
        let t = ((p - self.a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
        (p - (self.a + e * t)).norm()
    }

    /// Ray parameter of the crossing with `origin + t·dir`, if any with `t > 0`.
    pub fn intersect(&self, origin: &Point, dir: &Point) -> Option<f64> {
        let e = self.b - self.a;
        let denom = cross(dir, &e);
        if denom.abs() < 1e-15 {
            return None;
        }
        let ao = self.a - origin;
        let t = cross(&ao, &e) / denom;
        let s = cross(&ao, dir) / denom;
        (t > 1e-12 && (0.0..=1.0).contains(&s)).then_some(t)
    }
}

/// A segment present only for scan indices in `[visible_from, visible_until)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicSegment {
    pub segment: Segment,
    pub visible_from: usize,
    pub visible_until: usize,
}

/// Static walls plus scheduled dynamic ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct World {
    pub segments: Vec<Segment>,
    pub dynamic: Vec<DynamicSegment>,
}

impl World {
    /// Drops degenerate (shorter than 1e-9 m) or non-finite segments.
    pub fn new(segments: Vec<Segment>) -> Self {
        let segments = segments.into_iter().filter(is_usable).collect();
        Self {
            segments,
            dynamic: Vec::new(),
        }
    }

    pub fn add_dynamic(&mut self, d: DynamicSegment) {
        if is_usable(&d.segment) {
            self.dynamic.push(d);
        }
    }

    /// Segments visible when scan `scan_index` is taken.
    pub fn segments_at(&self, scan_index: usize) -> impl Iterator<Item = &Segment> {
        self.segments.iter().chain(
            self.dynamic
                .iter()
                .filter(move |d| (d.visible_from..d.visible_until).contains(&scan_index))
                .map(|d| &d.segment),
        )
    }

    pub fn raycast(
        &self,
        origin: &Point,
        dir: &Point,
        range_max: f64,
        scan_index: usize,
    ) -> Option<f64> {
        raycast(self.segments_at(scan_index), origin, dir, range_max)
    }
}

fn is_usable(s: &Segment) -> bool {
    s.a.iter().chain(s.b.iter()).all(|v| v.is_finite()) && s.length() > 1e-9
}

/// Distance to the nearest segment crossed by the ray, or `None` when
/// nothing is hit within `range_max`.
pub fn raycast<'a>(
    segments: impl IntoIterator<Item = &'a Segment>,
    origin: &Point,
    dir: &Point,
    range_max: f64,
) -> Option<f64> {
    segments
        .into_iter()
        .filter_map(|s| s.intersect(origin, dir))
        .filter(|t| *t <= range_max)
        .min_by(f64::total_cmp)
}
