use crate::geometry::{CellIndex, GridGeometry, Point};
use crate::sdf::{SdfCell, SdfGrid};

use super::{Submap, SubmapError};

/// A single map fused from finished submaps.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedMap {
    pub grid: SdfGrid,
    /// Ids of the fused submaps, in fusion order.
    pub provenance: Vec<usize>,
}

fn check_compatible(submaps: &[Submap]) -> Result<&Submap, SubmapError> {
    let first = submaps.first().ok_or(SubmapError::Empty)?;
    for s in &submaps[1..] {
        let (a, b) = (first.grid.resolution(), s.grid.resolution());
        if a != b {
            return Err(SubmapError::MixedResolution(a, b));
        }
        if first.grid.truncation() != s.grid.truncation() {
            return Err(SubmapError::Incompatible {
                what: "truncation",
                a: first.grid.truncation(),
                b: s.grid.truncation(),
            });
        }
        if first.grid.w_max() != s.grid.w_max() {
            return Err(SubmapError::Incompatible {
                what: "w_max",
                a: first.grid.w_max(),
                b: s.grid.w_max(),
            });
        }
    }
    Ok(first)
}

fn global_corners(s: &Submap) -> [Point; 4] {
    s.grid
        .geometry()
        .corners()
        .map(|c| s.pose.transform_point(&c))
}

/// Axis-aligned geometry covering every submap footprint (corners placed by
/// each submap's pose), padded by one cell.
pub fn merged_bounds(submaps: &[Submap]) -> Result<GridGeometry, SubmapError> {
    let first = check_compatible(submaps)?;
    let res = first.grid.resolution();
    let mut lo = Point::repeat(f64::INFINITY);
    let mut hi = Point::repeat(f64::NEG_INFINITY);
    for s in submaps {
        for c in global_corners(s) {
            lo = lo.inf(&c);
            hi = hi.sup(&c);
        }
    }
    lo -= Point::repeat(res);
    hi += Point::repeat(res);
    let width = ((hi.x - lo.x) / res - 1e-9).ceil().max(1.0) as usize;
    let height = ((hi.y - lo.y) / res - 1e-9).ceil().max(1.0) as usize;
    Ok(GridGeometry::new(
        lo + Point::repeat(0.5 * res),
        res,
        width,
        height,
    ))
}

/// Cells of slack when testing whether a point lies on the grid.
const EDGE_SNAP: f64 = 1e-9;

/// Interpolated distance and weight at a point of a submap grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicubicSample {
    pub f: f64,
    pub w: f64,
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Catmull-Rom bicubic `F` over the 4×4 neighborhood and bilinear `W`.
///
/// The four cells around `p` must exist and be known, otherwise `None`.
/// Outer-ring cells that fall off the grid or are unknown are replaced by
/// the nearest inner cell.
pub fn sample_bicubic(grid: &SdfGrid, p: &Point) -> Option<BicubicSample> {
    let g = grid.geometry();
    if g.width < 2 || g.height < 2 {
        return None;
    }
    let (u, v) = g.world_to_continuous(p);
    let (umax, vmax) = ((g.width - 1) as f64, (g.height - 1) as f64);
    // Snap coordinates that miss the border node only by rounding.
    if !(u >= -EDGE_SNAP && v >= -EDGE_SNAP && u <= umax + EDGE_SNAP && v <= vmax + EDGE_SNAP) {
        return None;
    }
    let (u, v) = (u.clamp(0.0, umax), v.clamp(0.0, vmax));
    let i0 = (u.floor() as i64).min(g.width as i64 - 2);
    let j0 = (v.floor() as i64).min(g.height as i64 - 2);
    let (tu, tv) = (u - i0 as f64, v - j0 as f64);

    let mut inner = [[SdfCell { f: 0.0, w: 0.0 }; 2]; 2];
    for (dj, row) in inner.iter_mut().enumerate() {
        for (di, cell) in row.iter_mut().enumerate() {
            let c = grid.cell_at(CellIndex::new(i0 + di as i64, j0 + dj as i64))?;
            if !c.is_known() {
                return None;
            }
            *cell = c;
        }
    }

    let value = |di: i64, dj: i64| -> f64 {
        let fallback = || inner[dj.clamp(0, 1) as usize][di.clamp(0, 1) as usize].f;
        if (0..=1).contains(&di) && (0..=1).contains(&dj) {
            return inner[dj as usize][di as usize].f;
        }
        match grid.cell_at(CellIndex::new(i0 + di, j0 + dj)) {
            Some(c) if c.is_known() => c.f,
            _ => fallback(),
        }
    };

    let wu = catmull_rom(tu);
    let wv = catmull_rom(tv);
    let mut f = 0.0;
    for (jj, wy) in wv.iter().enumerate() {
        let mut row = 0.0;
        for (ii, wx) in wu.iter().enumerate() {
            row += wx * value(ii as i64 - 1, jj as i64 - 1);
        }
        f += wy * row;
    }
    let t = grid.truncation();
    let w = (1.0 - tu) * (1.0 - tv) * inner[0][0].w
        + tu * (1.0 - tv) * inner[0][1].w
        + (1.0 - tu) * tv * inner[1][0].w
        + tu * tv * inner[1][1].w;
    Some(BicubicSample {
        f: f.clamp(-t, t),
        w,
    })
}

/// Fuses finished submaps, in id order, into one grid: weighted mean of
/// distances, maximum of weights. Samples without known support are skipped.
pub fn merge_submaps(submaps: &[Submap]) -> Result<MergedMap, SubmapError> {
    if let Some(s) = submaps.iter().find(|s| !s.finished) {
        return Err(SubmapError::Unfinished(s.id));
    }
    let geometry = merged_bounds(submaps)?;
    let first = &submaps[0];
    let mut grid = SdfGrid::new(geometry, first.grid.truncation(), first.grid.w_max());

    let mut order: Vec<&Submap> = submaps.iter().collect();
    order.sort_by_key(|s| s.id);
    for s in &order {
        let corners = global_corners(s);
        let lo = corners
            .iter()
            .fold(Point::repeat(f64::INFINITY), |a, c| a.inf(c));
        let hi = corners
            .iter()
            .fold(Point::repeat(f64::NEG_INFINITY), |a, c| a.sup(c));
        let c0 = geometry.world_to_cell(&lo);
        let c1 = geometry.world_to_cell(&hi);
        let to_local = s.pose.inverse();
        for row in c0.row.max(0)..=c1.row.min(geometry.height as i64 - 1) {
            for col in c0.col.max(0)..=c1.col.min(geometry.width as i64 - 1) {
                let c = CellIndex::new(col, row);
                let local = to_local.transform_point(&geometry.cell_to_world(c));
                let Some(sample) = sample_bicubic(&s.grid, &local) else {
                    continue;
                };
                if sample.w <= 0.0 {
                    continue;
                }
                let idx = geometry
                    .linear_index(c)
                    .expect("cell range clamped to grid");
                let prev = grid.cell(idx);
                let fused = if prev.is_known() {
                    SdfCell {
                        f: (prev.w * prev.f + sample.w * sample.f) / (prev.w + sample.w),
                        w: prev.w.max(sample.w),
                    }
                } else {
                    SdfCell {
                        f: sample.f,
                        w: sample.w,
                    }
                };
                grid.set_cell(idx, fused);
            }
        }
    }
    Ok(MergedMap {
        grid,
        provenance: order.iter().map(|s| s.id).collect(),
    })
}
