//! Deterministic lidar simulation in segment worlds.
//!
//! Scans are seeded per scan index with a PCG-64 generator, so a scenario is
//! reproducible bit for bit.

mod config;
pub mod fixtures;
mod scenario;
mod sensor;
mod world;

pub use config::{parse_scenario, ConfigError};
pub use fixtures::Scenario;
pub use scenario::{run_scenario, ScriptError, TrajectoryScript};
pub use sensor::{
    calibrate_outlier_rate, discontinuity_mask, expected_outlier_fraction, simulate_scan,
    true_ranges, SensorModel, SimulatedScan, DISCONTINUITY_BOOST, DISCONTINUITY_JUMP,
};
pub use world::{raycast, DynamicSegment, Segment, World};

impl Scenario {
    pub fn run(&self) -> Vec<crate::io::ScanLogRecord> {
        run_scenario(&self.world, &self.script, &self.model, self.rate_hz)
    }

    pub fn poses(&self) -> Vec<crate::geometry::Pose2> {
        self.script
            .sample_times(self.rate_hz)
            .iter()
            .map(|t| self.script.pose_at(*t))
            .collect()
    }
}
