//! SLAM and localization over a whole scan log.

use std::time::Instant;

use crate::geometry::Pose2;
use crate::io::{ScanLogRecord, TrajectoryEntry};
use crate::matching::{match_two_stage, predict_pose, MatchConfig, MatchResult};
use crate::sdf::ExpansionPolicy;
use crate::submap::{
    pure_localize, MergedMap, Submap, SubmapCollection, SubmapConfig, SubmapError,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlamConfig {
    pub submap: SubmapConfig,
    pub matching: MatchConfig,
}

impl SlamConfig {
    /// Defaults for a map of the given resolution, truncation and weight cap.
    pub fn new(resolution: f64, truncation: f64, w_max: f64) -> Self {
        Self {
            submap: SubmapConfig {
                resolution,
                truncation,
                w_max,
                policy: ExpansionPolicy::for_resolution(resolution),
                ..SubmapConfig::default()
            },
            matching: MatchConfig::for_map(truncation, w_max),
        }
    }
}

impl Default for SlamConfig {
    fn default() -> Self {
        Self::new(0.05, 0.06, 10.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlamOutput {
    pub trajectory: Vec<TrajectoryEntry>,
    /// Finished, non-empty submaps in creation order.
    pub submaps: Vec<Submap>,
    /// Per frame; `None` for the first frame and for failed matches.
    pub matches: Vec<Option<MatchResult>>,
    /// Frames whose match failed and fell back to the motion prediction.
    pub match_failures: usize,
}

/// Builds submaps from a scan log. The first scan is placed at its ground
/// truth pose when the log carries one, else at the origin; every later scan
/// is matched against the current target submap starting from a
/// constant-velocity prediction.
pub fn run_slam(records: &[ScanLogRecord], cfg: &SlamConfig) -> Result<SlamOutput, SubmapError> {
    let mut collection = SubmapCollection::new(cfg.submap);
    let mut history: Vec<(f64, Pose2)> = Vec::with_capacity(records.len());
    let mut matches = Vec::with_capacity(records.len());
    let mut match_failures = 0;

    for rec in records {
        let t = rec.timestamp();
        let pose = match (history.is_empty(), collection.matching_target()) {
            (true, _) | (false, None) => {
                matches.push(None);
                if history.is_empty() {
                    rec.ground_truth.unwrap_or_default()
                } else {
                    predict_pose(&history, t)
                }
            }
            (false, Some(target)) => {
                let predicted = predict_pose(&history, t);
                let init = target.pose.between(&predicted);
                match match_two_stage(&target.grid, &rec.scan, init, &cfg.matching) {
                    Ok(m) => {
                        let pose = target.pose.compose(&m.pose);
                        matches.push(Some(m));
                        pose
                    }
                    Err(e) => {
                        log::debug!("frame at t={t}: {e}; using prediction");
                        match_failures += 1;
                        matches.push(None);
                        predicted
                    }
                }
            }
        };
        collection.insert(&rec.scan, &pose)?;
        history.push((t, pose));
    }
    collection.finish_all();
    Ok(SlamOutput {
        trajectory: history
            .into_iter()
            .map(|(timestamp, pose)| TrajectoryEntry { timestamp, pose })
            .collect(),
        submaps: collection.into_submaps(),
        matches,
        match_failures,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationOutput {
    pub trajectory: Vec<TrajectoryEntry>,
    /// Wall time of each localization call, in seconds.
    pub timings: Vec<f64>,
    pub matches: Vec<Option<MatchResult>>,
    pub match_failures: usize,
}

/// Starting pose for localization: explicit, else the first record's ground
/// truth, else its odometry, else the origin.
pub fn initial_pose(records: &[ScanLogRecord], init: Option<Pose2>) -> Pose2 {
    init.or_else(|| records.first().and_then(|r| r.ground_truth.or(r.odometry)))
        .unwrap_or_default()
}

/// Localizes every scan against a fused map without changing it. Only the
/// localization call itself is timed.
pub fn run_localization(
    map: &MergedMap,
    records: &[ScanLogRecord],
    init: Option<Pose2>,
    iters: usize,
    cfg: &MatchConfig,
) -> LocalizationOutput {
    let mut history: Vec<(f64, Pose2)> = Vec::with_capacity(records.len());
    let mut out = LocalizationOutput {
        trajectory: Vec::with_capacity(records.len()),
        timings: Vec::with_capacity(records.len()),
        matches: Vec::with_capacity(records.len()),
        match_failures: 0,
    };
    let first = initial_pose(records, init);
    for rec in records {
        let t = rec.timestamp();
        let guess = if history.is_empty() {
            first
        } else {
            predict_pose(&history, t)
        };
        let start = Instant::now();
        let result = pure_localize(map, &rec.scan, guess, iters, cfg);
        out.timings.push(start.elapsed().as_secs_f64());
        let pose = match result {
            Ok(m) => {
                out.matches.push(Some(m));
                m.pose
            }
            Err(e) => {
                log::debug!("frame at t={t}: {e}; using prediction");
                out.match_failures += 1;
                out.matches.push(None);
                guess
            }
        };
        history.push((t, pose));
        out.trajectory.push(TrajectoryEntry { timestamp: t, pose });
    }
    out
}

/// Ground-truth poses of a log, for evaluation. Records without one are
/// skipped.
pub fn ground_truth_trajectory(records: &[ScanLogRecord]) -> Vec<TrajectoryEntry> {
    records
        .iter()
        .filter_map(|r| {
            r.ground_truth.map(|pose| TrajectoryEntry {
                timestamp: r.timestamp(),
                pose,
            })
        })
        .collect()
}
