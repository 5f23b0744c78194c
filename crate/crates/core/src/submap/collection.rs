use crate::geometry::{GridGeometry, LaserScan, Pose2};
use crate::sdf::{clip_scan_to_grid, integrate_scan, ExpansionPolicy, SdfGrid, UpdateStats};

use super::SubmapError;

/// Parameters shared by every submap of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmapConfig {
    pub resolution: f64,
    /// Cells per side; the grid is centered on the submap origin.
    pub size_cells: usize,
    pub truncation: f64,
    pub w_max: f64,
    /// Scans inserted before a submap is finished.
    pub scans_per_submap: usize,
    pub policy: ExpansionPolicy,
}

impl Default for SubmapConfig {
    fn default() -> Self {
        Self {
            resolution: 0.05,
            size_cells: 440,
            truncation: 0.06,
            w_max: 10.0,
            scans_per_submap: 50,
            policy: ExpansionPolicy::for_resolution(0.05),
        }
    }
}

/// A local SDF grid and the pose of its frame in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Submap {
    pub id: usize,
    pub pose: Pose2,
    pub grid: SdfGrid,
    pub scan_count: usize,
    pub finished: bool,
}

impl Submap {
    pub fn new(id: usize, pose: Pose2, config: &SubmapConfig) -> Self {
        let geometry =
            GridGeometry::centered(config.resolution, config.size_cells, config.size_cells);
        Self {
            id,
            pose,
            grid: SdfGrid::new(geometry, config.truncation, config.w_max),
            scan_count: 0,
            finished: false,
        }
    }

    /// Integrates a scan given its global pose. Hits outside the grid are dropped.
    fn insert(
        &mut self,
        scan: &LaserScan,
        global_pose: &Pose2,
        policy: ExpansionPolicy,
    ) -> Result<UpdateStats, SubmapError> {
        debug_assert!(!self.finished);
        let local = self.pose.between(global_pose);
        let clipped = clip_scan_to_grid(&self.grid, scan, &local, 1);
        let stats = integrate_scan(&mut self.grid, &clipped, &local, policy)?;
        self.scan_count += 1;
        Ok(stats)
    }
}

/// What happened to the collection on one insertion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InsertReport {
    /// Ids of the submaps the scan went into.
    pub inserted_into: Vec<usize>,
    pub finished: Option<usize>,
    pub started: Option<usize>,
}

/// Ordered submaps with a window of at most two unfinished ones. A new
/// submap starts when the newest active one is half full, and the older one
/// is finished once it holds `scans_per_submap` scans.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmapCollection {
    config: SubmapConfig,
    submaps: Vec<Submap>,
}

impl SubmapCollection {
    pub fn new(config: SubmapConfig) -> Self {
        Self {
            config,
            submaps: Vec::new(),
        }
    }

    pub fn config(&self) -> &SubmapConfig {
        &self.config
    }

    pub fn submaps(&self) -> &[Submap] {
        &self.submaps
    }

    pub fn into_submaps(self) -> Vec<Submap> {
        self.submaps
    }

    pub fn active(&self) -> impl Iterator<Item = &Submap> {
        self.submaps.iter().filter(|s| !s.finished)
    }

    /// The submap new scans are matched against: the oldest active submap
    /// holding data, else the most recent non-empty one.
    pub fn matching_target(&self) -> Option<&Submap> {
        self.active()
            .find(|s| s.scan_count > 0)
            .or_else(|| self.submaps.iter().rev().find(|s| s.scan_count > 0))
    }

    fn start(&mut self, pose: Pose2) -> usize {
        let id = self.submaps.len();
        self.submaps.push(Submap::new(id, pose, &self.config));
        id
    }

    /// Inserts a scan taken at `pose` (global frame) into every active submap.
    pub fn insert(&mut self, scan: &LaserScan, pose: &Pose2) -> Result<InsertReport, SubmapError> {
        let mut report = InsertReport::default();
        if self.submaps.is_empty() {
            report.started = Some(self.start(*pose));
        }
        let policy = self.config.policy;
        for s in self.submaps.iter_mut().filter(|s| !s.finished) {
            s.insert(scan, pose, policy)?;
            report.inserted_into.push(s.id);
        }

        let n = self.config.scans_per_submap.max(1);
        if let Some(oldest) = self.submaps.iter_mut().find(|s| !s.finished) {
            if oldest.scan_count >= n {
                oldest.finished = true;
                report.finished = Some(oldest.id);
            }
        }
        let active: Vec<usize> = self.active().map(|s| s.scan_count).collect();
        let half = (n / 2).max(1);
        let need_new = match active.as_slice() {
            [] => true,
            [only] => *only >= half,
            _ => false,
        };
        if need_new {
            report.started = Some(self.start(*pose));
        }
        Ok(report)
    }

    /// Finishes every submap and drops the ones that never received a scan.
    pub fn finish_all(&mut self) {
        self.submaps.retain(|s| s.scan_count > 0);
        for s in &mut self.submaps {
            s.finished = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn scan() -> LaserScan {
        // A ring of returns 1 m away.
        let n = 180;
        LaserScan {
            angle_min: -PI,
            angle_increment: 2.0 * PI / n as f64,
            ranges: vec![1.0; n],
            range_min: 0.05,
            range_max: 10.0,
            timestamp: 0.0,
        }
    }

    fn config() -> SubmapConfig {
        SubmapConfig {
            size_cells: 60,
            ..SubmapConfig::default()
        }
    }

    #[test]
    fn first_scan_creates_submap() {
        let mut c = SubmapCollection::new(config());
        let r = c.insert(&scan(), &Pose2::identity()).unwrap();
        assert_eq!(r.inserted_into, vec![0]);
        assert_eq!(c.submaps().len(), 1);
        assert_eq!(c.submaps()[0].scan_count, 1);
        assert!(c.submaps()[0].grid.known_count() > 0);
    }

    #[test]
    fn lifecycle_trace() {
        // Oracle: replay the windowing rule by hand for N = 50.
        let mut c = SubmapCollection::new(config());
        let mut memberships = Vec::new();
        for i in 0..51 {
            let r = c
                .insert(&scan(), &Pose2::new(0.001 * i as f64, 0.0, 0.0))
                .unwrap();
            memberships.push(r.inserted_into);
        }
        let s = c.submaps();
        assert!(s[0].finished);
        assert_eq!(s[0].scan_count, 50);
        assert!(!s[1].finished);
        assert_eq!(s[1].scan_count, 26);
        assert_eq!(s[2].scan_count, 1);
        assert_eq!(memberships[0], vec![0]);
        assert_eq!(memberships[24], vec![0]);
        assert_eq!(memberships[25], vec![0, 1]);
        assert_eq!(memberships[50], vec![1, 2]);
        assert!(memberships.iter().all(|m| (1..=2).contains(&m.len())));
        assert_eq!(c.matching_target().unwrap().id, 1);
    }

    #[test]
    fn every_scan_in_one_or_two_submaps() {
        for n in [1, 2, 3, 7, 10] {
            let mut c = SubmapCollection::new(SubmapConfig {
                scans_per_submap: n,
                ..config()
            });
            for _ in 0..40 {
                let r = c.insert(&scan(), &Pose2::identity()).unwrap();
                assert!((1..=2).contains(&r.inserted_into.len()), "n = {n}");
            }
            assert!(c.active().count() <= 2);
        }
    }

    #[test]
    fn finish_all_drops_empty() {
        let mut c = SubmapCollection::new(SubmapConfig {
            scans_per_submap: 2,
            ..config()
        });
        c.insert(&scan(), &Pose2::identity()).unwrap();
        c.insert(&scan(), &Pose2::identity()).unwrap();
        c.finish_all();
        assert!(c.submaps().iter().all(|s| s.finished && s.scan_count > 0));
    }
}
