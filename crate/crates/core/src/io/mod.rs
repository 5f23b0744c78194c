//! File formats and trajectory evaluation.
//!
//! * scan logs: one text record per line, floats in shortest round-trip form
//! * `SDF2` map files: little-endian header followed by `f32` F and W planes
//! * binary PGM export of a map
//! * trajectory files and submap-set directories

mod eval;
mod map_file;
mod pgm;
mod scan_log;
mod submap_set;
mod trajectory;

use thiserror::Error;

pub use eval::{evaluate_trajectory, EvalReport, FrameError, TimingStats};
pub use map_file::{load_map, read_map, save_map, write_map, MAP_MAGIC, MAP_VERSION};
pub use pgm::{export_image, render_gray};
pub use scan_log::{
    format_record, parse_record, parse_scan_log, read_scan_log, write_scan_log, ScanLogRecord,
};
pub use submap_set::{load_submap_set, save_submap_set, SUBMAP_INDEX};
pub use trajectory::{
    parse_timings, parse_trajectory, read_timings, read_trajectory, write_timings,
    write_trajectory, TrajectoryEntry,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("malformed map file: {0}")]
    Format(String),
    #[error("unsupported map file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("trajectories differ in length ({estimated} vs {ground_truth})")]
    LengthMismatch {
        estimated: usize,
        ground_truth: usize,
    },
    #[error("timestamps differ at frame {index} ({estimated} vs {ground_truth})")]
    TimestampMismatch {
        index: usize,
        estimated: f64,
        ground_truth: f64,
    },
    #[error("image export failed: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn parse_err(line: usize, reason: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        reason: reason.into(),
    }
}
