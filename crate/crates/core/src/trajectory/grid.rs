use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A grid-cell identifier. Cells are indexed row-major: `id = row * cols + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cell(pub u32);

impl Cell {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for Cell {
    fn from(id: u32) -> Self {
        Cell(id)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Geographic bounding box in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl Default for BoundingBox {
    fn default() -> Self {
        // Roughly a 10 km square; only matters for speed-limited reachability.
        BoundingBox {
            min_lat: 41.10,
            max_lat: 41.19,
            min_lon: -8.70,
            max_lon: -8.58,
        }
    }
}

/// A `rows x cols` partition of a bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    rows: u32,
    cols: u32,
    bbox: BoundingBox,
}

impl GridSpec {
    pub fn new(rows: u32, cols: u32, bbox: BoundingBox) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument(format!(
                "grid must have at least one row and column, got {rows}x{cols}"
            )));
        }
        let finite = [bbox.min_lat, bbox.max_lat, bbox.min_lon, bbox.max_lon]
            .iter()
            .all(|v| v.is_finite());
        if !finite || bbox.min_lat >= bbox.max_lat || bbox.min_lon >= bbox.max_lon {
            return Err(Error::Argument("degenerate bounding box".into()));
        }
        Ok(GridSpec { rows, cols, bbox })
    }

    /// Grid over the default bounding box.
    pub fn square(rows: u32, cols: u32) -> Result<Self> {
        Self::new(rows, cols, BoundingBox::default())
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Number of cells, `|P|`.
    pub fn domain_size(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn cell_at(&self, row: u32, col: u32) -> Cell {
        debug_assert!(row < self.rows && col < self.cols);
        Cell(row * self.cols + col)
    }

    pub fn row_col(&self, cell: Cell) -> (u32, u32) {
        (cell.0 / self.cols, cell.0 % self.cols)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.index() < self.domain_size()
    }

    pub fn check(&self, cell: Cell) -> Result<()> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(Error::Domain {
                cell: cell.0,
                domain: self.domain_size(),
            })
        }
    }

    /// The cell containing a raw point. Points on the max edges belong to the
    /// last row/column.
    pub fn locate(&self, lat: f64, lon: f64) -> Result<Cell> {
        let b = &self.bbox;
        if !(lat >= b.min_lat && lat <= b.max_lat && lon >= b.min_lon && lon <= b.max_lon) {
            return Err(Error::Range { lat, lon });
        }
        let fr = (lat - b.min_lat) / (b.max_lat - b.min_lat);
        let fc = (lon - b.min_lon) / (b.max_lon - b.min_lon);
        let row = ((fr * self.rows as f64) as u32).min(self.rows - 1);
        let col = ((fc * self.cols as f64) as u32).min(self.cols - 1);
        Ok(self.cell_at(row, col))
    }

    /// Geographic center of a cell as `(lat, lon)`.
    pub fn center(&self, cell: Cell) -> (f64, f64) {
        let (r, c) = self.row_col(cell);
        let b = &self.bbox;
        let dlat = (b.max_lat - b.min_lat) / self.rows as f64;
        let dlon = (b.max_lon - b.min_lon) / self.cols as f64;
        (
            b.min_lat + (r as f64 + 0.5) * dlat,
            b.min_lon + (c as f64 + 0.5) * dlon,
        )
    }

    /// Euclidean distance between cell centers, in cell units.
    pub fn cell_distance(&self, a: Cell, b: Cell) -> f64 {
        let (ra, ca) = self.row_col(a);
        let (rb, cb) = self.row_col(b);
        let dr = ra as f64 - rb as f64;
        let dc = ca as f64 - cb as f64;
        (dr * dr + dc * dc).sqrt()
    }

    /// True when `a` and `b` are distinct and touch, including diagonally.
    pub fn is_neighbor8(&self, a: Cell, b: Cell) -> bool {
        let (ra, ca) = self.row_col(a);
        let (rb, cb) = self.row_col(b);
        a != b && ra.abs_diff(rb) <= 1 && ca.abs_diff(cb) <= 1
    }

    /// Great-circle distance between cell centers in meters.
    pub fn center_distance_m(&self, a: Cell, b: Cell) -> f64 {
        let (lat1, lon1) = self.center(a);
        let (lat2, lon2) = self.center(b);
        haversine_m(lat1, lon1, lat2, lon2)
    }
}

const EARTH_RADIUS_M: f64 = 6_371_000.0;

pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().asin()
}
