use std::io::{BufRead, Write};
use std::path::Path;

use crate::geometry::Pose2;
use crate::submap::Submap;

use super::{load_map, parse_err, save_map, IoError};

/// Index file inside a submap-set directory. Each line reads
/// `id x y theta scan_count finished file`.
pub const SUBMAP_INDEX: &str = "submaps.txt";

pub fn save_submap_set(dir: impl AsRef<Path>, submaps: &[Submap]) -> Result<(), IoError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut index = std::io::BufWriter::new(std::fs::File::create(dir.join(SUBMAP_INDEX))?);
    writeln!(index, "# id x y theta scan_count finished file")?;
    for s in submaps {
        let file = format!("submap_{:04}.sdf", s.id);
        save_map(&s.grid, dir.join(&file))?;
        writeln!(
            index,
            "{} {} {} {} {} {} {}",
            s.id, s.pose.x, s.pose.y, s.pose.theta, s.scan_count, s.finished as u8, file
        )?;
    }
    index.flush()?;
    Ok(())
}

/// Loads the submaps listed in the directory's index, in index order.
/// Submap poses may have been edited (for example after an external pose
/// graph optimization); they are taken as written.
pub fn load_submap_set(dir: impl AsRef<Path>) -> Result<Vec<Submap>, IoError> {
    let dir = dir.as_ref();
    let index = std::io::BufReader::new(std::fs::File::open(dir.join(SUBMAP_INDEX))?);
    let mut out = Vec::new();
    for (i, l) in index.lines().enumerate() {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let line = i + 1;
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 7 {
            return Err(parse_err(
                line,
                format!("expected 7 fields, got {}", toks.len()),
            ));
        }
        let num = |k: usize| -> Result<f64, IoError> {
            toks[k]
                .parse()
                .map_err(|_| parse_err(line, format!("bad number `{}`", toks[k])))
        };
        let int = |k: usize| -> Result<usize, IoError> {
            toks[k]
                .parse()
                .map_err(|_| parse_err(line, format!("bad integer `{}`", toks[k])))
        };
        let file = toks[6];
        if file.contains('/') || file.contains('\\') || file == ".." {
            return Err(parse_err(line, "map file must sit in the set directory"));
        }
        out.push(Submap {
            id: int(0)?,
            pose: Pose2 {
                x: num(1)?,
                y: num(2)?,
                theta: num(3)?,
            },
            grid: load_map(dir.join(file))?,
            scan_count: int(4)?,
            finished: int(5)? != 0,
        });
    }
    Ok(out)
}
