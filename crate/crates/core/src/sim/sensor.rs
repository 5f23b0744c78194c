use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_pcg::Pcg64;

use crate::geometry::{LaserScan, Point, Pose2};

use super::world::World;

/// Neighbouring true ranges differing by more than this mark a depth edge.
pub const DISCONTINUITY_JUMP: f64 = 0.5;
/// Outlier probability multiplier on beams next to a depth edge.
pub const DISCONTINUITY_BOOST: f64 = 5.0;

/// Planar scanner model. Beams are spread evenly over `fov`, centered on the
/// sensor heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    pub beam_count: usize,
    pub fov: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub noise_sigma: f64,
    /// Base per-beam outlier probability, in `[0, 1]`.
    pub outlier_rate: f64,
    pub seed: u64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            beam_count: 271,
            fov: 270f64.to_radians(),
            range_min: 0.05,
            range_max: 10.0,
            noise_sigma: 0.005,
            outlier_rate: 0.0,
            seed: 0,
        }
    }
}

impl SensorModel {
    pub fn angle_min(&self) -> f64 {
        -0.5 * self.fov
    }

    pub fn angle_increment(&self) -> f64 {
        if self.beam_count > 1 {
            self.fov / (self.beam_count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn beam_angle(&self, i: usize) -> f64 {
        self.angle_min() + i as f64 * self.angle_increment()
    }

    /// Generator for one scan. Each scan gets its own stream so scans can be
    /// simulated in any order.
    fn rng(&self, scan_index: usize) -> Pcg64 {
        Pcg64::seed_from_u64(
            self.seed
                .wrapping_add((scan_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        )
    }
}

/// A simulated scan with the noise-free ranges and the outlier flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedScan {
    pub scan: LaserScan,
    /// Noise-free range per beam, `None` where nothing is in range.
    pub truth: Vec<Option<f64>>,
    pub outlier: Vec<bool>,
}

impl SimulatedScan {
    pub fn outlier_count(&self) -> usize {
        self.outlier.iter().filter(|o| **o).count()
    }
}

/// Noise-free ranges of every beam from `pose`.
pub fn true_ranges(
    world: &World,
    pose: &Pose2,
    model: &SensorModel,
    scan_index: usize,
) -> Vec<Option<f64>> {
    let origin = pose.translation();
    (0..model.beam_count)
        .map(|i| {
            let a = pose.theta + model.beam_angle(i);
            world.raycast(
                &origin,
                &Point::new(a.cos(), a.sin()),
                model.range_max,
                scan_index,
            )
        })
        .collect()
}

/// Beams next to a neighbour whose true range jumps by more than
/// [`DISCONTINUITY_JUMP`], or that borders a miss.
pub fn discontinuity_mask(truth: &[Option<f64>]) -> Vec<bool> {
    let jump = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() > DISCONTINUITY_JUMP,
        (None, None) => false,
        _ => true,
    };
    (0..truth.len())
        .map(|i| {
            truth[i].is_some()
                && ((i > 0 && jump(truth[i], truth[i - 1]))
                    || (i + 1 < truth.len() && jump(truth[i], truth[i + 1])))
        })
        .collect()
}

fn beam_outlier_probability(rate: f64, at_edge: bool) -> f64 {
    if at_edge {
        (rate * DISCONTINUITY_BOOST).min(1.0)
    } else {
        rate
    }
}

/// Simulates one scan from `pose`. Every beam consumes the same three draws
/// (noise, outlier decision, outlier range), so changing the outlier rate
/// does not shift the noise of later beams.
pub fn simulate_scan(
    world: &World,
    pose: &Pose2,
    model: &SensorModel,
    scan_index: usize,
) -> SimulatedScan {
    let truth = true_ranges(world, pose, model, scan_index);
    let edges = discontinuity_mask(&truth);
    let mut rng = model.rng(scan_index);
    let normal = Normal::new(0.0, model.noise_sigma.max(0.0)).expect("finite sigma");
    let rate = model.outlier_rate.clamp(0.0, 1.0);

    let mut ranges = Vec::with_capacity(truth.len());
    let mut outlier = Vec::with_capacity(truth.len());
    for (t, edge) in truth.iter().zip(&edges) {
        let noise: f64 = normal.sample(&mut rng);
        let decide: f64 = rng.random();
        let u: f64 = rng.random();
        match t {
            None => {
                ranges.push(f64::INFINITY);
                outlier.push(false);
            }
            Some(t) => {
                if *t > model.range_min && decide < beam_outlier_probability(rate, *edge) {
                    ranges.push(model.range_min + u * (t - model.range_min));
                    outlier.push(true);
                } else {
                    ranges.push(t + noise);
                    outlier.push(false);
                }
            }
        }
    }

    SimulatedScan {
        scan: LaserScan {
            angle_min: model.angle_min(),
            angle_increment: model.angle_increment(),
            ranges,
            range_min: model.range_min,
            range_max: model.range_max,
            timestamp: 0.0,
        },
        truth,
        outlier,
    }
}

/// Expected fraction of returning beams that are outliers at base rate `rate`.
pub fn expected_outlier_fraction(
    masks: &[Vec<bool>],
    truths: &[Vec<Option<f64>>],
    rate: f64,
) -> f64 {
    let mut hits = 0usize;
    let mut expected = 0.0;
    for (mask, truth) in masks.iter().zip(truths) {
        for (edge, t) in mask.iter().zip(truth) {
            if t.is_some() {
                hits += 1;
                expected += beam_outlier_probability(rate, *edge);
            }
        }
    }
    if hits == 0 {
        0.0
    } else {
        expected / hits as f64
    }
}

/// Base outlier rate whose expected overall outlier fraction over the
/// given poses equals `target`, found by bisection.
pub fn calibrate_outlier_rate(
    world: &World,
    poses: &[Pose2],
    model: &SensorModel,
    target: f64,
) -> f64 {
    let truths: Vec<_> = poses
        .iter()
        .enumerate()
        .map(|(i, p)| true_ranges(world, p, model, i))
        .collect();
    let masks: Vec<_> = truths.iter().map(|t| discontinuity_mask(t)).collect();
    let (mut lo, mut hi) = (0.0, 1.0);
    if expected_outlier_fraction(&masks, &truths, hi) <= target {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if expected_outlier_fraction(&masks, &truths, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
