use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::geometry::{GridGeometry, Point};
use crate::sdf::SdfGrid;

use super::IoError;

pub const MAP_MAGIC: &[u8; 4] = b"SDF2";
pub const MAP_VERSION: u32 = 1;

/// Header: magic, version `u32`, origin x/y `f64`, resolution `f64`,
/// width/height `u64`, truncation `f64`, `w_max` `f64`. Then F and W,
/// each `width·height` row-major `f32`. All little-endian.
pub fn write_map(mut w: impl Write, grid: &SdfGrid) -> Result<(), IoError> {
    let g = grid.geometry();
    w.write_all(MAP_MAGIC)?;
    w.write_u32::<LE>(MAP_VERSION)?;
    w.write_f64::<LE>(g.origin.x)?;
    w.write_f64::<LE>(g.origin.y)?;
    w.write_f64::<LE>(g.resolution)?;
    w.write_u64::<LE>(g.width as u64)?;
    w.write_u64::<LE>(g.height as u64)?;
    w.write_f64::<LE>(grid.truncation())?;
    w.write_f64::<LE>(grid.w_max())?;
    for plane in [grid.f_values(), grid.w_values()] {
        let mut buf = Vec::with_capacity(plane.len() * 4);
        for v in plane {
            buf.write_f32::<LE>(*v)?;
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn truncated(e: std::io::Error) -> IoError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        IoError::Format("file is truncated".into())
    } else {
        IoError::Io(e)
    }
}

pub fn read_map(mut r: impl Read) -> Result<SdfGrid, IoError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAP_MAGIC {
        return Err(IoError::Format("bad magic".into()));
    }
    let version = r.read_u32::<LE>().map_err(truncated)?;
    if version != MAP_VERSION {
        return Err(IoError::Version {
            found: version,
            expected: MAP_VERSION,
        });
    }
    let ox = r.read_f64::<LE>().map_err(truncated)?;
    let oy = r.read_f64::<LE>().map_err(truncated)?;
    let res = r.read_f64::<LE>().map_err(truncated)?;
    let width = r.read_u64::<LE>().map_err(truncated)?;
    let height = r.read_u64::<LE>().map_err(truncated)?;
    let truncation = r.read_f64::<LE>().map_err(truncated)?;
    let w_max = r.read_f64::<LE>().map_err(truncated)?;

    if !(res > 0.0 && res.is_finite()) || !ox.is_finite() || !oy.is_finite() {
        return Err(IoError::Format("invalid geometry".into()));
    }
    if truncation.is_nan() || truncation <= 0.0 || w_max.is_nan() || w_max <= 0.0 {
        return Err(IoError::Format("invalid truncation or weight cap".into()));
    }
    let n = width
        .checked_mul(height)
        .filter(|n| *n > 0 && *n <= (1 << 32))
        .ok_or_else(|| IoError::Format("invalid grid size".into()))? as usize;

    let mut plane = || -> Result<Vec<f32>, IoError> {
        let mut bytes = vec![0u8; n * 4];
        r.read_exact(&mut bytes).map_err(truncated)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    };
    let f = plane()?;
    let w = plane()?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(IoError::Format("trailing bytes".into()));
    }
    let geometry = GridGeometry::new(Point::new(ox, oy), res, width as usize, height as usize);
    SdfGrid::from_raw(geometry, truncation, w_max, f, w)
        .ok_or_else(|| IoError::Format("plane size".into()))
}

pub fn save_map(grid: &SdfGrid, path: impl AsRef<Path>) -> Result<(), IoError> {
    let f = std::fs::File::create(path)?;
    write_map(std::io::BufWriter::new(f), grid)
}

pub fn load_map(path: impl AsRef<Path>) -> Result<SdfGrid, IoError> {
    let f = std::fs::File::open(path)?;
    read_map(std::io::BufReader::new(f))
}
