use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::geometry::{LaserScan, Pose2};

use super::{parse_err, IoError};

/// One line of a scan log: a scan plus optional true and odometry poses.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanLogRecord {
    pub scan: LaserScan,
    pub ground_truth: Option<Pose2>,
    pub odometry: Option<Pose2>,
}

impl ScanLogRecord {
    pub fn timestamp(&self) -> f64 {
        self.scan.timestamp
    }
}

/// `t angle_min angle_increment range_min range_max n r_1 … r_n [gt x y θ] [odom x y θ]`
///
/// `f64` `Display` output is the shortest string that parses back to the
/// same value, so the text round trip is exact.
pub fn format_record(r: &ScanLogRecord) -> String {
    let s = &r.scan;
    let mut out = format!(
        "{} {} {} {} {} {}",
        s.timestamp,
        s.angle_min,
        s.angle_increment,
        s.range_min,
        s.range_max,
        s.ranges.len()
    );
    for v in &s.ranges {
        write!(out, " {v}").unwrap();
    }
    for (tag, p) in [("gt", r.ground_truth), ("odom", r.odometry)] {
        if let Some(p) = p {
            write!(out, " {tag} {} {} {}", p.x, p.y, p.theta).unwrap();
        }
    }
    out
}

fn float(line: usize, tok: Option<&str>, what: &str) -> Result<f64, IoError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

fn pose(line: usize, toks: &mut std::str::SplitWhitespace, tag: &str) -> Result<Pose2, IoError> {
    let x = float(line, toks.next(), &format!("{tag} x"))?;
    let y = float(line, toks.next(), &format!("{tag} y"))?;
    let th = float(line, toks.next(), &format!("{tag} theta"))?;
    // Stored as written; the angle is already normalized on output.
    Ok(Pose2 { x, y, theta: th })
}

/// Parses one record; `line` is used for error messages only.
pub fn parse_record(text: &str, line: usize) -> Result<ScanLogRecord, IoError> {
    let mut toks = text.split_whitespace();
    let timestamp = float(line, toks.next(), "timestamp")?;
    let angle_min = float(line, toks.next(), "angle_min")?;
    let angle_increment = float(line, toks.next(), "angle_increment")?;
    let range_min = float(line, toks.next(), "range_min")?;
    let range_max = float(line, toks.next(), "range_max")?;
    let n_tok = toks
        .next()
        .ok_or_else(|| parse_err(line, "missing range count"))?;
    let n: usize = n_tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad range count `{n_tok}`")))?;
    let ranges = (0..n)
        .map(|i| float(line, toks.next(), &format!("range {i}")))
        .collect::<Result<Vec<_>, _>>()?;

    let mut ground_truth = None;
    let mut odometry = None;
    while let Some(tag) = toks.next() {
        match tag {
            "gt" if ground_truth.is_none() && odometry.is_none() => {
                ground_truth = Some(pose(line, &mut toks, "gt")?)
            }
            "odom" if odometry.is_none() => odometry = Some(pose(line, &mut toks, "odom")?),
            other => return Err(parse_err(line, format!("unexpected token `{other}`"))),
        }
    }
    Ok(ScanLogRecord {
        scan: LaserScan {
            angle_min,
            angle_increment,
            ranges,
            range_min,
            range_max,
            timestamp,
        },
        ground_truth,
        odometry,
    })
}

/// Strict parse of a whole log. Blank lines and `#` comments are skipped;
/// timestamps must not decrease.
pub fn parse_scan_log(reader: impl BufRead) -> Result<Vec<ScanLogRecord>, IoError> {
    let mut out: Vec<ScanLogRecord> = Vec::new();
    for (i, l) in reader.lines().enumerate() {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let r = parse_record(t, i + 1)?;
        if let Some(prev) = out.last() {
            if r.timestamp() < prev.timestamp() {
                return Err(parse_err(i + 1, "timestamp goes backwards"));
            }
        }
        out.push(r);
    }
    Ok(out)
}

pub fn read_scan_log(path: impl AsRef<Path>) -> Result<Vec<ScanLogRecord>, IoError> {
    let f = std::fs::File::open(path)?;
    parse_scan_log(std::io::BufReader::new(f))
}

pub fn write_scan_log(mut w: impl Write, records: &[ScanLogRecord]) -> Result<(), IoError> {
    for r in records {
        writeln!(w, "{}", format_record(r))?;
    }
    w.flush()?;
    Ok(())
}
