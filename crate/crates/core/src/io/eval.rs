use std::fmt;

use crate::geometry::normalize_angle;

use super::{IoError, TrajectoryEntry};

/// Timestamps closer than this count as the same instant.
const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameError {
    pub timestamp: f64,
    pub translation: f64,
    pub rotation: f64,
}

/// Median, mean, max and population standard deviation, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingStats {
    pub median: f64,
    pub mean: f64,
    pub max: f64,
    pub std: f64,
}

impl TimingStats {
    /// `None` for an empty sample.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        };
        let mean = s.iter().sum::<f64>() / n as f64;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Some(Self {
            median,
            mean,
            max: s[n - 1],
            std: var.sqrt(),
        })
    }

    /// `median & mean & max & std`, four decimals.
    pub fn table_row(&self) -> String {
        format!(
            "{:.4} & {:.4} & {:.4} & {:.4}",
            self.median, self.mean, self.max, self.std
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rmse_translation: f64,
    pub rmse_rotation: f64,
    pub max_translation: f64,
    /// Every frame after the first (the first is aligned by construction).
    pub frames: Vec<FrameError>,
    pub timing: Option<TimingStats>,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "frames {}", self.frames.len())?;
        writeln!(f, "rmse_translation {}", self.rmse_translation)?;
        writeln!(f, "rmse_rotation {}", self.rmse_rotation)?;
        write!(f, "max_translation {}", self.max_translation)?;
        if let Some(t) = &self.timing {
            write!(
                f,
                "\ntiming median & mean & max & std\ntiming {}",
                t.table_row()
            )?;
        }
        Ok(())
    }
}

/// Aligns the estimate to the ground truth through their first poses, then
/// reports per-frame errors and their RMS over the remaining frames.
pub fn evaluate_trajectory(
    estimated: &[TrajectoryEntry],
    ground_truth: &[TrajectoryEntry],
    timings: Option<&[f64]>,
) -> Result<EvalReport, IoError> {
    if estimated.len() != ground_truth.len() {
        return Err(IoError::LengthMismatch {
            estimated: estimated.len(),
            ground_truth: ground_truth.len(),
        });
    }
    if let Some((index, (e, g))) = estimated
        .iter()
        .zip(ground_truth)
        .enumerate()
        .find(|(_, (e, g))| (e.timestamp - g.timestamp).abs() > TIME_TOLERANCE)
    {
        return Err(IoError::TimestampMismatch {
            index,
            estimated: e.timestamp,
            ground_truth: g.timestamp,
        });
    }

    let mut frames = Vec::new();
    if let (Some(e0), Some(g0)) = (estimated.first(), ground_truth.first()) {
        // Comparing motion relative to each first pose equals aligning the
        // first poses, since the alignment is an isometry.
        for (e, g) in estimated.iter().zip(ground_truth).skip(1) {
            let re = e0.pose.between(&e.pose);
            let rg = g0.pose.between(&g.pose);
            frames.push(FrameError {
                timestamp: g.timestamp,
                translation: (re.translation() - rg.translation()).norm(),
                rotation: normalize_angle(re.theta - rg.theta),
            });
        }
    }
    let rms = |v: &mut dyn Iterator<Item = f64>| {
        let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
        if n == 0 {
            0.0
        } else {
            (s / n as f64).sqrt()
        }
    };
    Ok(EvalReport {
        rmse_translation: rms(&mut frames.iter().map(|f| f.translation)),
        rmse_rotation: rms(&mut frames.iter().map(|f| f.rotation)),
        max_translation: frames.iter().map(|f| f.translation).fold(0.0, f64::max),
        frames,
        timing: timings.and_then(TimingStats::from_samples),
    })
}
