use crate::geometry::{CellIndex, GridGeometry, Point};

/// Truncated signed distance and accumulated confidence of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfCell {
    /// Signed distance in meters; positive on the sensor side.
    pub f: f64,
    /// Accumulated weight; zero means the cell was never observed.
    pub w: f64,
}

impl SdfCell {
    pub fn is_known(&self) -> bool {
        self.w > 0.0
    }
}

/// Weighted running mean of the distance with a capped weight.
///
/// An unknown previous cell passes the new observation through unchanged.
pub fn fuse_cell(prev: SdfCell, f_t: f64, w_t: f64, w_max: f64) -> SdfCell {
    if prev.w <= 0.0 {
        return SdfCell {
            f: f_t,
            w: w_t.min(w_max),
        };
    }
    let w_sum = prev.w + w_t;
    SdfCell {
        f: (prev.w * prev.f + w_t * f_t) / w_sum,
        w: w_sum.min(w_max),
    }
}

/// Dense row-major grid of signed distances and weights.
///
/// Values are stored as `f32` so the in-memory grid is exactly what the map
/// file holds. Unknown cells carry `F = truncation`, `W = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    geometry: GridGeometry,
    truncation: f64,
    w_max: f64,
    f: Vec<f32>,
    w: Vec<f32>,
}

impl SdfGrid {
    /// An all-unknown grid.
    pub fn new(geometry: GridGeometry, truncation: f64, w_max: f64) -> Self {
        assert!(truncation > 0.0, "truncation must be positive");
        assert!(w_max > 0.0, "w_max must be positive");
        let n = geometry.len();
        Self {
            geometry,
            truncation,
            w_max,
            f: vec![truncation as f32; n],
            w: vec![0.0; n],
        }
    }

    /// Builds a grid from raw arrays, as read from disk.
    pub fn from_raw(
        geometry: GridGeometry,
        truncation: f64,
        w_max: f64,
        f: Vec<f32>,
        w: Vec<f32>,
    ) -> Option<Self> {
        (f.len() == geometry.len() && w.len() == geometry.len()).then_some(Self {
            geometry,
            truncation,
            w_max,
            f,
            w,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn resolution(&self) -> f64 {
        self.geometry.resolution
    }

    pub fn f_values(&self) -> &[f32] {
        &self.f
    }

    pub fn w_values(&self) -> &[f32] {
        &self.w
    }

    pub fn cell(&self, idx: usize) -> SdfCell {
        SdfCell {
            f: self.f[idx] as f64,
            w: self.w[idx] as f64,
        }
    }

    pub fn cell_at(&self, c: CellIndex) -> Option<SdfCell> {
        self.geometry.linear_index(c).map(|i| self.cell(i))
    }

    /// Overwrites a cell, clamping into the grid's value ranges.
    pub fn set_cell(&mut self, idx: usize, cell: SdfCell) {
        let t = self.truncation;
        self.f[idx] = cell.f.clamp(-t, t) as f32;
        self.w[idx] = cell.w.clamp(0.0, self.w_max) as f32;
    }

    /// Applies one observation to a cell with [`fuse_cell`].
    pub fn fuse(&mut self, idx: usize, f_t: f64, w_t: f64) {
        let next = fuse_cell(self.cell(idx), f_t, w_t, self.w_max);
        self.set_cell(idx, next);
    }

    pub fn known_count(&self) -> usize {
        self.w.iter().filter(|w| **w > 0.0).count()
    }

    /// The same grid with its origin moved by `offset`.
    pub fn translated(&self, offset: Point) -> SdfGrid {
        let mut out = self.clone();
        out.geometry.origin += offset;
        out
    }

    /// FNV-1a over geometry and raw cell bits, for change detection.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(&self.geometry.origin.x.to_bits().to_le_bytes());
        eat(&self.geometry.origin.y.to_bits().to_le_bytes());
        eat(&self.geometry.resolution.to_bits().to_le_bytes());
        eat(&(self.geometry.width as u64).to_le_bytes());
        eat(&(self.geometry.height as u64).to_le_bytes());
        for v in self.f.iter().chain(self.w.iter()) {
            eat(&v.to_bits().to_le_bytes());
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_observation_passes_through() {
        let c = fuse_cell(SdfCell { f: 0.06, w: 0.0 }, 0.03, 1.0, 10.0);
        assert_eq!(c, SdfCell { f: 0.03, w: 1.0 });
    }

    #[test]
    fn weight_caps_at_w_max() {
        let c = fuse_cell(SdfCell { f: 0.02, w: 10.0 }, 0.02, 1.0, 10.0);
        assert!((c.f - 0.02).abs() < 1e-15);
        assert_eq!(c.w, 10.0);
    }

    #[test]
    fn equal_weight_mean() {
        let c = fuse_cell(SdfCell { f: 0.0, w: 1.0 }, 0.06, 1.0, 10.0);
        assert!((c.f - 0.03).abs() < 1e-15);
        assert_eq!(c.w, 2.0);
    }

    #[test]
    fn new_grid_is_unknown() {
        let g = SdfGrid::new(GridGeometry::centered(0.05, 4, 3), 0.06, 10.0);
        assert_eq!(g.known_count(), 0);
        assert!(g.f_values().iter().all(|f| *f == 0.06f32));
    }

    #[test]
    fn set_cell_clamps() {
        let mut g = SdfGrid::new(GridGeometry::centered(0.05, 2, 2), 0.06, 10.0);
        g.set_cell(0, SdfCell { f: -1.0, w: 50.0 });
        assert_eq!(g.cell(0).f, -0.06f32 as f64);
        assert_eq!(g.cell(0).w, 10.0);
    }
}
