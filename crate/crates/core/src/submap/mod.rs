//! Submaps built during SLAM, their fusion into one map, and localization
//! against the fused map.

mod collection;
mod merge;

use thiserror::Error;

use crate::geometry::{LaserScan, Pose2};
use crate::matching::{match_two_stage, MatchConfig, MatchError, MatchResult};
use crate::sdf::SdfError;

pub use collection::{InsertReport, Submap, SubmapCollection, SubmapConfig};
pub use merge::{merge_submaps, merged_bounds, sample_bicubic, BicubicSample, MergedMap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubmapError {
    #[error("no submaps to merge")]
    Empty,
    #[error("submaps disagree on resolution ({0} vs {1})")]
    MixedResolution(f64, f64),
    #[error("submaps disagree on {what} ({a} vs {b})")]
    Incompatible { what: &'static str, a: f64, b: f64 },
    #[error("submap {0} is not finished")]
    Unfinished(usize),
    #[error(transparent)]
    Integration(#[from] SdfError),
}

/// Registers `scan` against the fused map without modifying it. Both
/// matching stages are capped at `iters` iterations.
pub fn pure_localize(
    merged: &MergedMap,
    scan: &LaserScan,
    init: Pose2,
    iters: usize,
    cfg: &MatchConfig,
) -> Result<MatchResult, MatchError> {
    let cfg = MatchConfig {
        max_iters_stage1: iters,
        max_iters_stage2: iters,
        ..*cfg
    };
    match_two_stage(&merged.grid, scan, init, &cfg)
}
