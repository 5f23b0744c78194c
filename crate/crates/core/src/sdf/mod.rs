//! Signed distance field mapping.
//!
//! Each frame, hit points are bucketed per cell and an orthogonal regression
//! line is fitted per occupied cell (growing the search by rings when hits are
//! sparse). Lines update nearby cells with their signed distance, beams carve
//! free space, and conflicting candidates are resolved by distance-based
//! priority before a weighted running-mean fusion.

mod grid;
mod integrate;
mod regression;
mod update;

use thiserror::Error;

pub use grid::{fuse_cell, SdfCell, SdfGrid};
pub use integrate::{clip_scan_to_grid, integrate_scan, UpdateStats};
pub use regression::{fit_deming, RegressionLine};
pub use update::{
    collect_points, free_space_entries, free_space_extent, incidence_angle, resolve_update_set,
    ring_cells, surface_update_entries, traverse_cells, update_range, CarveBeam, Collected,
    ExpansionPolicy, HitBuckets, UpdateEntry, UpdateRange, DEFAULT_GAMMA_CLAMP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdfError {
    #[error("cannot fit a line: points are coincident")]
    DegenerateFit,
    #[error("hit point ({x:.3}, {y:.3}) lies outside the grid")]
    OutOfBounds { x: f64, y: f64 },
}
