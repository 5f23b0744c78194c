use std::collections::BTreeMap;

use crate::geometry::{CellIndex, LaserScan, Point, Pose2};

use super::regression::{fit_deming, RegressionLine};
use super::update::{
    collect_points, free_space_entries, free_space_extent, incidence_angle, resolve_update_set,
    ring_cells, surface_update_entries, CarveBeam, ExpansionPolicy, HitBuckets,
    DEFAULT_GAMMA_CLAMP,
};
use super::{SdfError, SdfGrid};

/// Counters from one frame update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    /// Occupied cells that produced a regression line.
    pub fitted_cells: usize,
    /// Occupied cells given up for lack of points.
    pub skipped_cells: usize,
    /// Cells fused with a surface value.
    pub surface_cells: usize,
    /// Cells fused with free space.
    pub carved_cells: usize,
}

impl UpdateStats {
    pub fn cells_touched(&self) -> usize {
        self.surface_cells + self.carved_cells
    }
}

/// Fuses one scan taken at `pose` (grid frame) into `grid`.
///
/// Fails without touching the grid if any hit point falls outside it.
pub fn integrate_scan(
    grid: &mut SdfGrid,
    scan: &LaserScan,
    pose: &Pose2,
    policy: ExpansionPolicy,
) -> Result<UpdateStats, SdfError> {
    let geometry = *grid.geometry();
    let origin = pose.translation();
    let beams: Vec<_> = scan.valid_beams().collect();
    let hits: Vec<Point> = beams
        .iter()
        .map(|b| pose.transform_point(&b.endpoint()))
        .collect();
    let hit_cells: Vec<CellIndex> = hits.iter().map(|p| geometry.world_to_cell(p)).collect();
    if let Some(i) = hit_cells.iter().position(|c| !geometry.contains(*c)) {
        return Err(SdfError::OutOfBounds {
            x: hits[i].x,
            y: hits[i].y,
        });
    }

    let mut buckets = HitBuckets::default();
    for (c, p) in hit_cells.iter().zip(&hits) {
        buckets.insert(*c, *p);
    }

    let mut stats = UpdateStats::default();
    let mut lines: BTreeMap<CellIndex, RegressionLine> = BTreeMap::new();
    let mut entries = Vec::new();
    for cell in buckets.occupied() {
        let fitted = collect_points(*cell, &buckets, policy).and_then(|c| {
            fit_deming(&c.points, &origin)
                .ok()
                .map(|l| (l, c.expansions))
        });
        match fitted {
            Some((line, expansions)) => {
                stats.fitted_cells += 1;
                entries.extend(surface_update_entries(*cell, &line, expansions, grid));
                lines.insert(*cell, line);
            }
            None => stats.skipped_cells += 1,
        }
    }

    let carve: Vec<CarveBeam> = hits
        .iter()
        .zip(&hit_cells)
        .filter_map(|(hit, cell)| {
            let line = line_for_beam(*cell, &lines, &geometry)?;
            let offset = hit - origin;
            let range = offset.norm();
            let direction = offset / range;
            let gamma = incidence_angle(&line.normal, &direction);
            let extent = free_space_extent(range, gamma, grid.truncation(), DEFAULT_GAMMA_CLAMP)?;
            Some(CarveBeam {
                origin,
                direction,
                extent,
                line,
            })
        })
        .collect();
    entries.extend(free_space_entries(grid, &carve));

    for e in resolve_update_set(&entries) {
        if e.is_free_space() {
            stats.carved_cells += 1;
        } else {
            stats.surface_cells += 1;
        }
        grid.fuse(e.cell, e.f, e.w);
    }
    Ok(stats)
}

/// The hit cell's own line, else the closest fitted neighbor in ring 1.
fn line_for_beam(
    cell: CellIndex,
    lines: &BTreeMap<CellIndex, RegressionLine>,
    geometry: &crate::geometry::GridGeometry,
) -> Option<RegressionLine> {
    if let Some(l) = lines.get(&cell) {
        return Some(*l);
    }
    let center = geometry.cell_to_world(cell);
    ring_cells(cell, 1)
        .into_iter()
        .filter_map(|c| {
            lines
                .get(&c)
                .map(|l| ((geometry.cell_to_world(c) - center).norm(), *l))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, l)| l)
}

/// Invalidates beams whose hit would land outside `grid` (or within
/// `margin_cells` of its border) when taken from `pose`.
pub fn clip_scan_to_grid(
    grid: &SdfGrid,
    scan: &LaserScan,
    pose: &Pose2,
    margin_cells: i64,
) -> LaserScan {
    let g = grid.geometry();
    let mut out = scan.clone();
    for (i, r) in out.ranges.iter_mut().enumerate() {
        if !scan.is_valid_range(*r) {
            continue;
        }
        let a = scan.beam_angle(i);
        let p = pose.transform_point(&(Point::new(a.cos(), a.sin()) * *r));
        let c = g.world_to_cell(&p);
        let inside = c.col >= margin_cells
            && c.row >= margin_cells
            && c.col < g.width as i64 - margin_cells
            && c.row < g.height as i64 - margin_cells;
        if !inside {
            *r = f64::NAN;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridGeometry;
    use std::f64::consts::PI;

    fn wall_scan(distance: f64, beams: usize) -> LaserScan {
        // Sensor at the origin facing +y towards the wall y = distance.
        let fov = PI / 2.0;
        let inc = fov / (beams - 1) as f64;
        let angle_min = PI / 2.0 - fov / 2.0;
        let ranges = (0..beams)
            .map(|i| distance / (angle_min + i as f64 * inc).sin())
            .collect();
        LaserScan {
            angle_min,
            angle_increment: inc,
            ranges,
            range_min: 0.05,
            range_max: 20.0,
            timestamp: 0.0,
        }
    }

    fn grid() -> SdfGrid {
        SdfGrid::new(GridGeometry::centered(0.05, 200, 200), 0.06, 10.0)
    }

    #[test]
    fn empty_scan_leaves_grid_unchanged() {
        let mut g = grid();
        let before = g.clone();
        let mut scan = wall_scan(2.0, 91);
        scan.ranges.iter_mut().for_each(|r| *r = f64::NAN);
        let stats =
            integrate_scan(&mut g, &scan, &Pose2::identity(), ExpansionPolicy::new(3)).unwrap();
        assert_eq!(stats, UpdateStats::default());
        assert_eq!(g, before);
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let mut g = grid();
        let before = g.clone();
        let scan = wall_scan(2.0, 91);
        let err = integrate_scan(
            &mut g,
            &scan,
            &Pose2::new(0.0, 3.0, 0.0),
            ExpansionPolicy::new(3),
        );
        assert!(matches!(err, Err(SdfError::OutOfBounds { .. })));
        assert_eq!(g, before);
    }

    #[test]
    fn wall_band_has_correct_sign() {
        let mut g = grid();
        let scan = wall_scan(2.0, 361);
        integrate_scan(&mut g, &scan, &Pose2::identity(), ExpansionPolicy::new(3)).unwrap();
        let geo = *g.geometry();
        for col in 90..110 {
            for row in 0..200 {
                let c = CellIndex::new(col, row);
                let cell = g.cell_at(c).unwrap();
                if !cell.is_known() {
                    continue;
                }
                let truth = (2.0 - geo.cell_to_world(c).y).clamp(-0.06, 0.06);
                assert!(
                    (cell.f - truth).abs() < 0.01,
                    "cell {c:?}: {} vs {truth}",
                    cell.f
                );
                assert!(cell.f >= -0.06 - 1e-7 && cell.f <= 0.06 + 1e-7);
            }
        }
    }

    #[test]
    fn expansion_only_activates_when_needed() {
        // Dense scan: every occupied cell has at least three hits.
        let mut scan = wall_scan(0.81, 1441);
        let pose = Pose2::identity();
        let geo = *grid().geometry();
        // Drop the sparse cells at the ends of the wall.
        let pts: Vec<Point> = crate::geometry::scan_to_points(&scan);
        let hits = HitBuckets::from_points(&geo, &pts);
        for (i, r) in scan.ranges.iter_mut().enumerate() {
            let p = pts[i];
            if hits.get(&geo.world_to_cell(&p)).len() < 3 {
                *r = f64::NAN;
            }
        }
        let pts: Vec<Point> = crate::geometry::scan_to_points(&scan);
        let hits = HitBuckets::from_points(&geo, &pts);
        assert!(hits.len() > 20);
        assert!(hits.occupied().all(|c| hits.get(c).len() >= 3));
        let mut a = grid();
        let mut b = grid();
        integrate_scan(&mut a, &scan, &pose, ExpansionPolicy::disabled()).unwrap();
        integrate_scan(&mut b, &scan, &pose, ExpansionPolicy::new(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clip_drops_outside_hits() {
        let g = grid();
        let scan = wall_scan(2.0, 91);
        let clipped = clip_scan_to_grid(&g, &scan, &Pose2::new(0.0, 3.0, 0.0), 2);
        assert_eq!(clipped.valid_count(), 0);
        let kept = clip_scan_to_grid(&g, &scan, &Pose2::identity(), 2);
        assert_eq!(kept.valid_count(), 91);
    }
}
