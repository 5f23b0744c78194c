use std::io::{BufRead, Write};
use std::path::Path;

use crate::geometry::Pose2;

use super::{parse_err, IoError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEntry {
    pub timestamp: f64,
    pub pose: Pose2,
}

fn numeric_lines(reader: impl BufRead, fields: usize) -> Result<Vec<Vec<f64>>, IoError> {
    let mut out = Vec::new();
    for (i, l) in reader.lines().enumerate() {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v = t
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| parse_err(i + 1, format!("bad number `{tok}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if v.len() != fields {
            return Err(parse_err(
                i + 1,
                format!("expected {fields} fields, got {}", v.len()),
            ));
        }
        out.push(v);
    }
    Ok(out)
}

/// Lines of `timestamp x y theta`.
pub fn parse_trajectory(reader: impl BufRead) -> Result<Vec<TrajectoryEntry>, IoError> {
    Ok(numeric_lines(reader, 4)?
        .into_iter()
        .map(|v| TrajectoryEntry {
            timestamp: v[0],
            pose: Pose2 {
                x: v[1],
                y: v[2],
                theta: v[3],
            },
        })
        .collect())
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<TrajectoryEntry>, IoError> {
    parse_trajectory(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_trajectory(mut w: impl Write, entries: &[TrajectoryEntry]) -> Result<(), IoError> {
    writeln!(w, "# timestamp x y theta")?;
    for e in entries {
        writeln!(
            w,
            "{} {} {} {}",
            e.timestamp, e.pose.x, e.pose.y, e.pose.theta
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Lines of `timestamp seconds`; returns the seconds.
pub fn parse_timings(reader: impl BufRead) -> Result<Vec<f64>, IoError> {
    Ok(numeric_lines(reader, 2)?
        .into_iter()
        .map(|v| v[1])
        .collect())
}

pub fn read_timings(path: impl AsRef<Path>) -> Result<Vec<f64>, IoError> {
    parse_timings(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_timings(
    mut w: impl Write,
    timestamps: &[f64],
    seconds: &[f64],
) -> Result<(), IoError> {
    writeln!(w, "# timestamp solve_seconds")?;
    for (t, s) in timestamps.iter().zip(seconds) {
        writeln!(w, "{t} {s}")?;
    }
    w.flush()?;
    Ok(())
}
