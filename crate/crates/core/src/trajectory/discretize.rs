use super::grid::{Cell, GridSpec};
use super::pattern::Trajectory;
use crate::error::{Error, Result};

/// Maps raw `(lat, lon)` points onto the grid.
///
/// Consecutive points in the same cell collapse to one. When two consecutive
/// cells do not touch, the cells on the integer line between their centers
/// are inserted so every adjacent pair is an 8-neighbor pair.
pub fn discretize(raw: &[(f64, f64)], spec: &GridSpec) -> Result<Trajectory> {
    if raw.is_empty() {
        return Err(Error::Data("empty raw trajectory".into()));
    }
    let mut cells: Vec<Cell> = Vec::with_capacity(raw.len());
    for &(lat, lon) in raw {
        let cell = spec.locate(lat, lon)?;
        match cells.last() {
            Some(&prev) if prev == cell => {}
            Some(&prev) if !spec.is_neighbor8(prev, cell) => {
                cells.extend(line_between(spec, prev, cell));
                cells.push(cell);
            }
            _ => cells.push(cell),
        }
    }
    Ok(Trajectory::new(cells))
}

/// Cells strictly between `from` and `to` on a Bresenham line in
/// (row, col) space. The result is 8-connected.
pub fn line_between(spec: &GridSpec, from: Cell, to: Cell) -> Vec<Cell> {
    let (r0, c0) = spec.row_col(from);
    let (r1, c1) = spec.row_col(to);
    let (mut r, mut c) = (r0 as i64, c0 as i64);
    let (r1, c1) = (r1 as i64, c1 as i64);
    let dr = (r1 - r).abs();
    let dc = -(c1 - c).abs();
    let sr = if r < r1 { 1 } else { -1 };
    let sc = if c < c1 { 1 } else { -1 };
    let mut err = dr + dc;
    let mut out = Vec::new();
    loop {
        if r == r1 && c == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dc {
            err += dc;
            r += sr;
        }
        if e2 <= dr {
            err += dr;
            c += sc;
        }
        if r == r1 && c == c1 {
            break;
        }
        out.push(spec.cell_at(r as u32, c as u32));
    }
    out
}
