use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};

use crate::sdf::SdfGrid;

use super::IoError;

/// One byte per cell, top row first (highest `y`), so the image shows the
/// map with `+y` up. `F` is mapped from `[-truncation, truncation]` onto
/// `[0, 255]` with half-up rounding; unknown cells are white.
pub fn render_gray(grid: &SdfGrid) -> Vec<u8> {
    let g = grid.geometry();
    let t = grid.truncation();
    let mut out = Vec::with_capacity(g.len());
    for row in (0..g.height).rev() {
        for col in 0..g.width {
            let c = grid.cell(row * g.width + col);
            let v = if c.is_known() {
                let s = (c.f.clamp(-t, t) + t) / (2.0 * t) * 255.0;
                (s + 0.5).floor().clamp(0.0, 255.0) as u8
            } else {
                255
            };
            out.push(v);
        }
    }
    out
}

/// Writes the map as an 8-bit binary PGM (`P5`), one pixel per cell.
pub fn export_image(grid: &SdfGrid, path: impl AsRef<Path>) -> Result<(), IoError> {
    let g = grid.geometry();
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    PnmEncoder::new(file)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(
            &render_gray(grid),
            g.width as u32,
            g.height as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| IoError::Image(e.to_string()))
}
