//! Python bindings: poses, scans, SDF maps, scan matching, the simulator,
//! the SLAM and localization pipelines, and trajectory evaluation.

use std::fmt::Display;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use sdfslam::io::{self, IoError, ScanLogRecord, TrajectoryEntry};
use sdfslam::matching::{self, MatchConfig};
use sdfslam::pipeline::{self, SlamConfig};
use sdfslam::sdf::{self, ExpansionPolicy, SdfCell, SdfGrid};
use sdfslam::sim::{self, fixtures};
use sdfslam::submap::{self, MergedMap, Submap};
use sdfslam::{GridGeometry, Point};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: IoError) -> PyErr {
    match e {
        IoError::Io(e) => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

#[pyclass(name = "Pose2", module = "pysdfslam", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyPose(sdfslam::Pose2);

#[pymethods]
impl PyPose {
    #[new]
    #[pyo3(signature = (x=0.0, y=0.0, theta=0.0))]
    fn new(x: f64, y: f64, theta: f64) -> Self {
        Self(sdfslam::Pose2::new(x, y, theta))
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.0.y
    }

    /// Heading in radians, normalized to (-pi, pi].
    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta
    }

    fn compose(&self, other: PyRef<'_, PyPose>) -> Self {
        Self(self.0.compose(&other.0))
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    /// Pose of `other` expressed in this pose's frame.
    fn between(&self, other: PyRef<'_, PyPose>) -> Self {
        Self(self.0.between(&other.0))
    }

    fn transform_point(&self, x: f64, y: f64) -> (f64, f64) {
        let p = self.0.transform_point(&Point::new(x, y));
        (p.x, p.y)
    }

    fn as_tuple(&self) -> (f64, f64, f64) {
        (self.0.x, self.0.y, self.0.theta)
    }

    fn __eq__(&self, other: PyRef<'_, PyPose>) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "Pose2(x={}, y={}, theta={})",
            self.0.x, self.0.y, self.0.theta
        )
    }
}

#[pyclass(name = "LaserScan", module = "pysdfslam", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScan(sdfslam::LaserScan);

#[pymethods]
impl PyScan {
    #[new]
    #[pyo3(signature = (angle_min, angle_increment, ranges, range_min=0.05, range_max=10.0, timestamp=0.0))]
    fn new(
        angle_min: f64,
        angle_increment: f64,
        ranges: Vec<f64>,
        range_min: f64,
        range_max: f64,
        timestamp: f64,
    ) -> Self {
        Self(sdfslam::LaserScan {
            angle_min,
            angle_increment,
            ranges,
            range_min,
            range_max,
            timestamp,
        })
    }

    #[getter]
    fn ranges(&self) -> Vec<f64> {
        self.0.ranges.clone()
    }

    #[getter]
    fn timestamp(&self) -> f64 {
        self.0.timestamp
    }

    fn valid_count(&self) -> usize {
        self.0.valid_count()
    }

    /// Endpoints of the valid beams in the sensor frame.
    fn points(&self) -> Vec<(f64, f64)> {
        sdfslam::scan_to_points(&self.0)
            .iter()
            .map(|p| (p.x, p.y))
            .collect()
    }
}

#[pyclass(name = "SdfMap", module = "pysdfslam", skip_from_py_object)]
#[derive(Clone)]
struct PyMap(SdfGrid);

#[pymethods]
impl PyMap {
    /// Empty map of `width` x `height` cells. `origin` is the center of
    /// cell (0, 0); by default the grid is centered on the world origin.
    #[new]
    #[pyo3(signature = (width, height, resolution=0.05, truncation=0.06, w_max=10.0, origin=None))]
    fn new(
        width: usize,
        height: usize,
        resolution: f64,
        truncation: f64,
        w_max: f64,
        origin: Option<(f64, f64)>,
    ) -> PyResult<Self> {
        if !(resolution > 0.0 && truncation > 0.0 && w_max > 0.0) || width == 0 || height == 0 {
            return Err(PyValueError::new_err(
                "sizes, resolution, truncation and w_max must be positive",
            ));
        }
        let geo = match origin {
            Some((x, y)) => GridGeometry::new(Point::new(x, y), resolution, width, height),
            None => GridGeometry::centered(resolution, width, height),
        };
        Ok(Self(SdfGrid::new(geo, truncation, w_max)))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::load_map(path).map(Self).map_err(io_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_map(&self.0, path).map_err(io_err)
    }

    /// Writes a binary PGM rendering.
    fn export_pgm(&self, path: &str) -> PyResult<()> {
        io::export_image(&self.0, path).map_err(io_err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.geometry().width
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.geometry().height
    }

    #[getter]
    fn resolution(&self) -> f64 {
        self.0.resolution()
    }

    #[getter]
    fn truncation(&self) -> f64 {
        self.0.truncation()
    }

    #[getter]
    fn w_max(&self) -> f64 {
        self.0.w_max()
    }

    #[getter]
    fn origin(&self) -> (f64, f64) {
        let o = self.0.geometry().origin;
        (o.x, o.y)
    }

    fn known_count(&self) -> usize {
        self.0.known_count()
    }

    fn checksum(&self) -> u64 {
        self.0.checksum()
    }

    /// Row-major signed distances, bottom row first.
    fn distances(&self) -> Vec<f32> {
        self.0.f_values().to_vec()
    }

    fn weights(&self) -> Vec<f32> {
        self.0.w_values().to_vec()
    }

    /// `(F, W)` of cell `(col, row)`, or None outside the grid.
    fn cell(&self, col: i64, row: i64) -> Option<(f64, f64)> {
        self.0
            .cell_at(sdfslam::CellIndex::new(col, row))
            .map(|c| (c.f, c.w))
    }

    fn set_cell(&mut self, col: i64, row: i64, f: f64, w: f64) -> PyResult<()> {
        let idx = self
            .0
            .geometry()
            .linear_index(sdfslam::CellIndex::new(col, row))
            .ok_or_else(|| PyIndexError::new_err("cell outside the map"))?;
        self.0.set_cell(idx, SdfCell { f, w });
        Ok(())
    }

    /// Fuses a scan taken at `pose`. Returns the number of cells updated.
    #[pyo3(signature = (scan, pose, max_expansions=None))]
    fn integrate(
        &mut self,
        scan: PyRef<'_, PyScan>,
        pose: PyRef<'_, PyPose>,
        max_expansions: Option<usize>,
    ) -> PyResult<usize> {
        let policy = max_expansions.map_or_else(
            || ExpansionPolicy::for_resolution(self.0.resolution()),
            ExpansionPolicy::new,
        );
        sdf::integrate_scan(&mut self.0, &scan.0, &pose.0, policy)
            .map(|s| s.cells_touched())
            .map_err(value_err)
    }

    /// Interpolated `(W*F, d/dx, d/dy, known)` at a world point.
    fn sample(&self, x: f64, y: f64) -> (f64, f64, f64, bool) {
        let s = matching::sample_sdf(&self.0, &Point::new(x, y));
        (s.value, s.gradient.x, s.gradient.y, s.known)
    }

    /// Interpolated signed distance, None in unknown space.
    fn distance(&self, x: f64, y: f64) -> Option<f64> {
        matching::sample_distance(&self.0, &Point::new(x, y))
    }
}

#[pyclass(name = "MatchResult", module = "pysdfslam", frozen, get_all)]
struct PyMatch {
    pose: PyPose,
    final_cost: f64,
    iterations_stage1: usize,
    iterations_stage2: usize,
    points_used: usize,
    points_trimmed: usize,
    converged: bool,
}

impl From<matching::MatchResult> for PyMatch {
    fn from(m: matching::MatchResult) -> Self {
        Self {
            pose: PyPose(m.pose),
            final_cost: m.final_cost,
            iterations_stage1: m.iterations_stage1,
            iterations_stage2: m.iterations_stage2,
            points_used: m.points_used,
            points_trimmed: m.points_trimmed,
            converged: m.converged,
        }
    }
}

#[pymethods]
impl PyMatch {
    fn __repr__(&self) -> String {
        format!(
            "MatchResult(pose={}, iterations=({}, {}), points_used={}, points_trimmed={})",
            self.pose.__repr__(),
            self.iterations_stage1,
            self.iterations_stage2,
            self.points_used,
            self.points_trimmed
        )
    }
}

fn match_config(
    map: &SdfGrid,
    iters1: Option<usize>,
    iters2: Option<usize>,
    trim: Option<f64>,
) -> MatchConfig {
    let mut cfg = MatchConfig::for_map(map.truncation(), map.w_max());
    cfg.max_iters_stage1 = iters1.unwrap_or(cfg.max_iters_stage1);
    cfg.max_iters_stage2 = iters2.unwrap_or(cfg.max_iters_stage2);
    cfg.trim_threshold = trim.unwrap_or(cfg.trim_threshold);
    cfg
}

/// Two-stage robust registration of `scan` against `map` from `init`.
#[pyfunction]
#[pyo3(signature = (map, scan, init, iters1=None, iters2=None, trim=None))]
fn match_scan(
    map: PyRef<'_, PyMap>,
    scan: PyRef<'_, PyScan>,
    init: PyRef<'_, PyPose>,
    iters1: Option<usize>,
    iters2: Option<usize>,
    trim: Option<f64>,
) -> PyResult<PyMatch> {
    let cfg = match_config(&map.0, iters1, iters2, trim);
    matching::match_two_stage(&map.0, &scan.0, init.0, &cfg)
        .map(Into::into)
        .map_err(value_err)
}

#[pyclass(name = "ScanLog", module = "pysdfslam", frozen)]
struct PyScanLog(Vec<ScanLogRecord>);

#[pymethods]
impl PyScanLog {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::read_scan_log(path).map(Self).map_err(io_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        io::write_scan_log(std::io::BufWriter::new(f), &self.0).map_err(io_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn scan(&self, i: usize) -> PyResult<PyScan> {
        self.0
            .get(i)
            .map(|r| PyScan(r.scan.clone()))
            .ok_or_else(|| PyIndexError::new_err("record index out of range"))
    }

    /// `(timestamp, Pose2)` for every record carrying ground truth.
    fn ground_truth(&self) -> Vec<(f64, PyPose)> {
        to_py_traj(&pipeline::ground_truth_trajectory(&self.0))
    }
}

fn to_py_traj(t: &[TrajectoryEntry]) -> Vec<(f64, PyPose)> {
    t.iter().map(|e| (e.timestamp, PyPose(e.pose))).collect()
}

fn from_py_traj(t: Vec<(f64, PyRef<'_, PyPose>)>) -> Vec<TrajectoryEntry> {
    t.into_iter()
        .map(|(timestamp, p)| TrajectoryEntry {
            timestamp,
            pose: p.0,
        })
        .collect()
}

#[pyclass(name = "Scenario", module = "pysdfslam")]
struct PyScenario(fixtures::Scenario);

#[pymethods]
impl PyScenario {
    /// A 10 x 8 m room with two obstacles, driven around an elliptic loop.
    #[staticmethod]
    #[pyo3(signature = (seed=0))]
    fn room_circuit(seed: u64) -> Self {
        Self(fixtures::room_circuit(seed))
    }

    /// One long wall seen from 3 m while sliding parallel to it.
    #[staticmethod]
    #[pyo3(signature = (seed=0))]
    fn straight_wall(seed: u64) -> Self {
        Self(fixtures::straight_wall(seed))
    }

    /// Parses a `key = value` scenario description.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        sim::parse_scenario(text).map(Self).map_err(value_err)
    }

    /// Sets the outlier rate so about `fraction` of returns are outliers.
    fn calibrate_outliers(&mut self, fraction: f64) -> PyResult<f64> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(PyValueError::new_err("fraction must be in [0, 1]"));
        }
        let sc = &mut self.0;
        sc.model.outlier_rate =
            sim::calibrate_outlier_rate(&sc.world, &sc.poses(), &sc.model, fraction);
        Ok(sc.model.outlier_rate)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.model.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.0.model.seed = seed;
    }

    fn run(&self) -> PyScanLog {
        PyScanLog(self.0.run())
    }
}

#[pyclass(name = "SlamResult", module = "pysdfslam", frozen)]
struct PySlam {
    trajectory: Vec<TrajectoryEntry>,
    submaps: Vec<Submap>,
    #[pyo3(get)]
    match_failures: usize,
}

#[pymethods]
impl PySlam {
    #[getter]
    fn trajectory(&self) -> Vec<(f64, PyPose)> {
        to_py_traj(&self.trajectory)
    }

    #[getter]
    fn submap_count(&self) -> usize {
        self.submaps.len()
    }

    /// Fuses every submap into a single map.
    fn merged_map(&self) -> PyResult<PyMap> {
        submap::merge_submaps(&self.submaps)
            .map(|m| PyMap(m.grid))
            .map_err(value_err)
    }

    fn save_submaps(&self, dir: &str) -> PyResult<()> {
        io::save_submap_set(dir, &self.submaps).map_err(io_err)
    }
}

#[pyfunction]
#[pyo3(signature = (log, resolution=0.05, truncation=0.06, w_max=10.0, scans_per_submap=50))]
fn run_slam(
    log: PyRef<'_, PyScanLog>,
    resolution: f64,
    truncation: f64,
    w_max: f64,
    scans_per_submap: usize,
) -> PyResult<PySlam> {
    if !(resolution > 0.0 && truncation > 0.0 && w_max > 0.0) || scans_per_submap == 0 {
        return Err(PyValueError::new_err("parameters must be positive"));
    }
    let mut cfg = SlamConfig::new(resolution, truncation, w_max);
    cfg.submap.scans_per_submap = scans_per_submap;
    let out = pipeline::run_slam(&log.0, &cfg).map_err(value_err)?;
    Ok(PySlam {
        trajectory: out.trajectory,
        submaps: out.submaps,
        match_failures: out.match_failures,
    })
}

/// Fuses a submap set saved by `SlamResult.save_submaps`.
#[pyfunction]
fn merge_submap_dir(dir: &str) -> PyResult<PyMap> {
    let set = io::load_submap_set(dir).map_err(io_err)?;
    submap::merge_submaps(&set)
        .map(|m| PyMap(m.grid))
        .map_err(value_err)
}

/// Localizes every scan of `log` against a fixed map. Returns the
/// trajectory and the per-frame solve times in seconds.
#[pyfunction]
#[pyo3(signature = (map, log, init=None, iters=5))]
fn localize(
    map: PyRef<'_, PyMap>,
    log: PyRef<'_, PyScanLog>,
    init: Option<PyRef<'_, PyPose>>,
    iters: usize,
) -> (Vec<(f64, PyPose)>, Vec<f64>) {
    let merged = MergedMap {
        grid: map.0.clone(),
        provenance: Vec::new(),
    };
    let cfg = match_config(&map.0, None, None, None);
    let out = pipeline::run_localization(&merged, &log.0, init.map(|p| p.0), iters, &cfg);
    (to_py_traj(&out.trajectory), out.timings)
}

/// Translation and rotation RMSE after aligning first poses, as a dict.
#[pyfunction]
#[pyo3(signature = (estimated, ground_truth, timings=None))]
fn evaluate<'py>(
    py: Python<'py>,
    estimated: Vec<(f64, PyRef<'py, PyPose>)>,
    ground_truth: Vec<(f64, PyRef<'py, PyPose>)>,
    timings: Option<Vec<f64>>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let r = io::evaluate_trajectory(
        &from_py_traj(estimated),
        &from_py_traj(ground_truth),
        timings.as_deref(),
    )
    .map_err(io_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("frames", r.frames.len())?;
    d.set_item("rmse_translation", r.rmse_translation)?;
    d.set_item("rmse_rotation", r.rmse_rotation)?;
    d.set_item("max_translation", r.max_translation)?;
    if let Some(t) = r.timing {
        d.set_item("timing", (t.median, t.mean, t.max, t.std))?;
    }
    Ok(d)
}

/// Fuses one observation `(f_t, w_t)` into a cell holding `(f, w)`.
#[pyfunction]
fn fuse_cell(f: f64, w: f64, f_t: f64, w_t: f64, w_max: f64) -> (f64, f64) {
    let c = sdf::fuse_cell(SdfCell { f, w }, f_t, w_t, w_max);
    (c.f, c.w)
}

#[pymodule]
fn pysdfslam(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPose>()?;
    m.add_class::<PyScan>()?;
    m.add_class::<PyMap>()?;
    m.add_class::<PyMatch>()?;
    m.add_class::<PyScanLog>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySlam>()?;
    m.add_function(wrap_pyfunction!(match_scan, m)?)?;
    m.add_function(wrap_pyfunction!(run_slam, m)?)?;
    m.add_function(wrap_pyfunction!(merge_submap_dir, m)?)?;
    m.add_function(wrap_pyfunction!(localize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_cell, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
