use std::str::FromStr;

use thiserror::Error;

use crate::geometry::Pose2;

use super::fixtures::{room_circuit, straight_wall, Scenario};
use super::scenario::TrajectoryScript;
use super::sensor::calibrate_outlier_rate;
use super::world::{DynamicSegment, Segment, World};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("scenario config line {line}: {reason}")]
pub struct ConfigError {
    pub line: usize,
    pub reason: String,
}

fn err(line: usize, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        reason: reason.into(),
    }
}

fn numbers<T: FromStr>(line: usize, value: &str, count: usize) -> Result<Vec<T>, ConfigError> {
    let v: Vec<T> = value
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| err(line, format!("bad number `{t}`")))
        })
        .collect::<Result<_, _>>()?;
    if v.len() != count {
        return Err(err(
            line,
            format!("expected {count} values, got {}", v.len()),
        ));
    }
    Ok(v)
}

fn one<T: FromStr>(line: usize, value: &str) -> Result<T, ConfigError> {
    Ok(numbers(line, value, 1)?.remove(0))
}

/// Reads a `key = value` scenario description. Lines starting with `#` are
/// comments. The `fixture` key (`room_circuit` or `straight_wall`) picks the
/// starting point; `segment` and `waypoint` lines, when present, replace its
/// walls and trajectory.
///
/// ```text
/// fixture = room_circuit
/// seed = 7
/// noise_sigma = 0.005
/// segment = 0 0 10 0
/// dynamic = 2 1 2 3 100 200
/// waypoint = 0.0 1 1 0
/// target_outlier_fraction = 0.15
/// ```
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut base: Option<Scenario> = None;
    let mut segments = Vec::new();
    let mut dynamic = Vec::new();
    let mut waypoints = Vec::new();
    let mut sensor: Vec<(usize, String, String)> = Vec::new();
    let mut target = None;
    let mut rate = None;
    let mut seed = 0u64;

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(n, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "fixture" => {
                base = Some(match value {
                    "room_circuit" => room_circuit(0),
                    "straight_wall" => straight_wall(0),
                    other => return Err(err(n, format!("unknown fixture `{other}`"))),
                })
            }
            "seed" => seed = one(n, value)?,
            "rate_hz" => {
                let r: f64 = one(n, value)?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(err(n, "rate_hz must be positive"));
                }
                rate = Some(r)
            }
            "segment" => {
                let v: Vec<f64> = numbers(n, value, 4)?;
                segments.push(Segment::new(v[0], v[1], v[2], v[3]));
            }
            "dynamic" => {
                let v: Vec<f64> = numbers(n, value, 6)?;
                dynamic.push(DynamicSegment {
                    segment: Segment::new(v[0], v[1], v[2], v[3]),
                    visible_from: v[4] as usize,
                    visible_until: v[5] as usize,
                });
            }
            "waypoint" => {
                let v: Vec<f64> = numbers(n, value, 4)?;
                waypoints.push((v[0], Pose2::new(v[1], v[2], v[3])));
            }
            "target_outlier_fraction" => {
                let t: f64 = one(n, value)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(err(n, "target_outlier_fraction must be in [0, 1]"));
                }
                target = Some(t);
            }
            "beam_count" | "fov_deg" | "range_min" | "range_max" | "noise_sigma"
            | "outlier_rate" => sensor.push((n, key.to_string(), value.to_string())),
            other => return Err(err(n, format!("unknown key `{other}`"))),
        }
    }

    let mut sc = base.unwrap_or_else(|| room_circuit(0));
    sc.model.seed = seed;
    if let Some(r) = rate {
        sc.rate_hz = r;
    }
    for (n, key, value) in sensor {
        let m = &mut sc.model;
        match key.as_str() {
            "beam_count" => m.beam_count = one(n, &value)?,
            "fov_deg" => m.fov = one::<f64>(n, &value)?.to_radians(),
            "range_min" => m.range_min = one(n, &value)?,
            "range_max" => m.range_max = one(n, &value)?,
            "noise_sigma" => m.noise_sigma = one(n, &value)?,
            "outlier_rate" => {
                let r: f64 = one(n, &value)?;
                if !(0.0..=1.0).contains(&r) {
                    return Err(err(n, "outlier_rate must be in [0, 1]"));
                }
                m.outlier_rate = r;
            }
            _ => unreachable!(),
        }
    }
    if !segments.is_empty() {
        sc.world = World::new(segments);
    }
    for d in dynamic {
        sc.world.add_dynamic(d);
    }
    if !waypoints.is_empty() {
        sc.script = TrajectoryScript::new(waypoints).map_err(|e| err(0, e.to_string()))?;
    }
    if let Some(t) = target {
        let poses: Vec<Pose2> = sc
            .script
            .sample_times(sc.rate_hz)
            .iter()
            .map(|t| sc.script.pose_at(*t))
            .collect();
        sc.model.outlier_rate = calibrate_outlier_rate(&sc.world, &poses, &sc.model, t);
    }
    Ok(sc)
}
