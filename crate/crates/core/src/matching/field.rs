//! Continuous view of the grid for registration: bilinear interpolation of
//! the weighted distance `W·F` with its analytic gradient.

use crate::geometry::Point;
use crate::sdf::SdfGrid;

/// Interpolated cost field value at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    /// `W·F`, in weighted meters.
    pub value: f64,
    /// Gradient of `value` with respect to the world position, per meter.
    pub gradient: Point,
    /// False when the sample fell outside the grid interior or touched an
    /// unknown cell; such samples carry the saturated constant.
    pub known: bool,
}

/// Lower-left corner of the bilinear patch containing `p` and the fractional
/// offsets inside it, or `None` outside the interior.
fn patch(grid: &SdfGrid, p: &Point) -> Option<(usize, usize, f64, f64)> {
    let g = grid.geometry();
    if g.width < 2 || g.height < 2 {
        return None;
    }
    let (u, v) = g.world_to_continuous(p);
    let (wmax, hmax) = ((g.width - 1) as f64, (g.height - 1) as f64);
    if !(u >= 0.0 && v >= 0.0 && u <= wmax && v <= hmax) {
        return None;
    }
    let i = (u.floor() as usize).min(g.width - 2);
    let j = (v.floor() as usize).min(g.height - 2);
    Some((i, j, u - i as f64, v - j as f64))
}

fn corners(grid: &SdfGrid, i: usize, j: usize) -> [usize; 4] {
    let w = grid.geometry().width;
    let base = j * w + i;
    [base, base + 1, base + w, base + w + 1]
}

pub fn saturated_value(grid: &SdfGrid) -> f64 {
    grid.w_max() * grid.truncation()
}

/// Bilinear `W·F` and its exact derivative. Points outside the interior or
/// next to unknown cells return the saturated constant with zero gradient.
pub fn sample_sdf(grid: &SdfGrid, p: &Point) -> FieldSample {
    let saturated = FieldSample {
        value: saturated_value(grid),
        gradient: Point::zeros(),
        known: false,
    };
    let Some((i, j, fu, fv)) = patch(grid, p) else {
        return saturated;
    };
    let idx = corners(grid, i, j);
    let mut v = [0.0; 4];
    for (k, &c) in idx.iter().enumerate() {
        let cell = grid.cell(c);
        if !cell.is_known() {
            return saturated;
        }
        v[k] = cell.w * cell.f;
    }
    let [v00, v10, v01, v11] = v;
    let value = (1.0 - fu) * (1.0 - fv) * v00
        + fu * (1.0 - fv) * v10
        + (1.0 - fu) * fv * v01
        + fu * fv * v11;
    let res = grid.resolution();
    let du = (1.0 - fv) * (v10 - v00) + fv * (v11 - v01);
    let dv = (1.0 - fu) * (v01 - v00) + fu * (v11 - v10);
    FieldSample {
        value,
        gradient: Point::new(du / res, dv / res),
        known: true,
    }
}

/// Bilinear signed distance `F` alone, `None` where [`sample_sdf`] saturates.
pub fn sample_distance(grid: &SdfGrid, p: &Point) -> Option<f64> {
    let (i, j, fu, fv) = patch(grid, p)?;
    let idx = corners(grid, i, j);
    let mut v = [0.0; 4];
    for (k, &c) in idx.iter().enumerate() {
        let cell = grid.cell(c);
        if !cell.is_known() {
            return None;
        }
        v[k] = cell.f;
    }
    let [v00, v10, v01, v11] = v;
    Some(
        (1.0 - fu) * (1.0 - fv) * v00
            + fu * (1.0 - fv) * v10
            + (1.0 - fu) * fv * v01
            + fu * fv * v11,
    )
}
