use thiserror::Error;

use crate::geometry::{normalize_angle, Pose2};
use crate::io::ScanLogRecord;

use super::sensor::{simulate_scan, SensorModel};
use super::world::World;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("trajectory script has no waypoints")]
    Empty,
    #[error("waypoint timestamps must increase strictly (index {0})")]
    NotIncreasing(usize),
}

/// Timed waypoints, interpolated linearly in position and along the shorter
/// arc in heading.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryScript {
    waypoints: Vec<(f64, Pose2)>,
}

impl TrajectoryScript {
    pub fn new(waypoints: Vec<(f64, Pose2)>) -> Result<Self, ScriptError> {
        if waypoints.is_empty() {
            return Err(ScriptError::Empty);
        }
        if let Some(i) = (1..waypoints.len()).find(|&i| {
            waypoints[i].0.partial_cmp(&waypoints[i - 1].0) != Some(std::cmp::Ordering::Greater)
        }) {
            return Err(ScriptError::NotIncreasing(i));
        }
        Ok(Self { waypoints })
    }

    pub fn waypoints(&self) -> &[(f64, Pose2)] {
        &self.waypoints
    }

    pub fn start_time(&self) -> f64 {
        self.waypoints[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.waypoints[self.waypoints.len() - 1].0
    }

    /// Pose at time `t`, clamped to the ends of the script.
    pub fn pose_at(&self, t: f64) -> Pose2 {
        let w = &self.waypoints;
        if t <= w[0].0 {
            return w[0].1;
        }
        let k = w.partition_point(|(wt, _)| *wt <= t);
        if k >= w.len() {
            return w[w.len() - 1].1;
        }
        let ((t0, a), (t1, b)) = (w[k - 1], w[k]);
        let s = (t - t0) / (t1 - t0);
        Pose2::new(
            a.x + s * (b.x - a.x),
            a.y + s * (b.y - a.y),
            a.theta + s * normalize_angle(b.theta - a.theta),
        )
    }

    /// Sample times at `rate_hz`, starting at the first waypoint.
    pub fn sample_times(&self, rate_hz: f64) -> Vec<f64> {
        let span = self.end_time() - self.start_time();
        let n = (span * rate_hz + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.start_time() + i as f64 / rate_hz)
            .collect()
    }
}

/// Simulates a scan at every sample time of `script`, tagging each record
/// with its true pose. Scan `i` uses the world state of index `i`.
pub fn run_scenario(
    world: &World,
    script: &TrajectoryScript,
    model: &SensorModel,
    rate_hz: f64,
) -> Vec<ScanLogRecord> {
    script
        .sample_times(rate_hz)
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let pose = script.pose_at(t);
            let mut scan = simulate_scan(world, &pose, model, i).scan;
            scan.timestamp = t;
            ScanLogRecord {
                scan,
                ground_truth: Some(pose),
                odometry: None,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::Segment;

    #[test]
    fn rejects_bad_scripts() {
        assert_eq!(TrajectoryScript::new(vec![]), Err(ScriptError::Empty));
        let p = Pose2::identity();
        assert_eq!(
            TrajectoryScript::new(vec![(0.0, p), (1.0, p), (1.0, p)]),
            Err(ScriptError::NotIncreasing(2))
        );
    }

    #[test]
    fn straight_script_stays_on_segment() {
        let s = TrajectoryScript::new(vec![
            (0.0, Pose2::new(1.0, 1.0, 0.0)),
            (2.0, Pose2::new(3.0, 2.0, 0.0)),
        ])
        .unwrap();
        let world = World::new(vec![Segment::new(-1.0, -1.0, 5.0, -1.0)]);
        let recs = run_scenario(&world, &s, &SensorModel::default(), 10.0);
        assert_eq!(recs.len(), 21);
        for r in &recs {
            let p = r.ground_truth.unwrap();
            // Collinear with the endpoints and inside them.
            let cross = (p.x - 1.0) * 1.0 - (p.y - 1.0) * 2.0;
            assert!(cross.abs() < 1e-12);
            assert!((1.0..=3.0).contains(&p.x));
        }
        assert_eq!(
            recs.last().unwrap().ground_truth.unwrap(),
            Pose2::new(3.0, 2.0, 0.0)
        );
    }

    #[test]
    fn heading_takes_short_arc() {
        let s = TrajectoryScript::new(vec![
            (0.0, Pose2::new(0.0, 0.0, 3.0)),
            (1.0, Pose2::new(0.0, 0.0, -3.0)),
        ])
        .unwrap();
        let mid = s.pose_at(0.5);
        assert!((mid.theta.abs() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_single_record() {
        let s = TrajectoryScript::new(vec![(4.0, Pose2::new(1.0, 0.0, 0.0))]).unwrap();
        let recs = run_scenario(&World::default(), &s, &SensorModel::default(), 10.0);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].scan.timestamp, 4.0);
    }
}
