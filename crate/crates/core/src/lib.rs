//! 2D laser SLAM and pure localization on signed distance field maps.
//!
//! The crate covers the whole pipeline: per-scan SDF mapping with regression
//! line updates ([`sdf`]), robust Gauss-Newton registration with two-stage
//! outlier trimming ([`matching`]), submaps and their fusion into one map for
//! localization ([`submap`]), a deterministic lidar simulator ([`sim`]) and
//! file formats plus trajectory evaluation ([`io`]).

pub mod geometry;
pub mod io;
pub mod matching;
pub mod pipeline;
pub mod sdf;
pub mod sim;
pub mod submap;

pub use geometry::{
    normalize_angle, scan_to_points, CellIndex, GridGeometry, LaserScan, Point, Pose2,
};
