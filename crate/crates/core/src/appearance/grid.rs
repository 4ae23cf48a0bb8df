use crate::error::{Error, Result};

/// Partition of a `width x height` frame into `rows x cols` contiguous cells.
/// Cells are `floor(height / rows)` by `floor(width / cols)` pixels; the last row
/// and column absorb the remainder. Cells are indexed row-major.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CellGrid {
    pub width: usize,
    pub height: usize,
    pub rows: usize,
    pub cols: usize,
}

impl CellGrid {
    pub fn new(width: usize, height: usize, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows > height || cols > width {
            return Err(Error::InvalidArgument(format!(
                "a {rows}x{cols} grid does not fit a {width}x{height} image"
            )));
        }
        Ok(Self {
            width,
            height,
            rows,
            cols,
        })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn cell_w(&self) -> usize {
        self.width / self.cols
    }

    fn cell_h(&self) -> usize {
        self.height / self.rows
    }

    #[inline]
    pub fn cell_of(&self, x: usize, y: usize) -> usize {
        let col = (x / self.cell_w()).min(self.cols - 1);
        let row = (y / self.cell_h()).min(self.rows - 1);
        row * self.cols + col
    }

    /// Half-open pixel bounds `(x0, x1, y0, y1)` of a cell.
    pub fn bounds(&self, cell: usize) -> (usize, usize, usize, usize) {
        let (row, col) = (cell / self.cols, cell % self.cols);
        let (cw, ch) = (self.cell_w(), self.cell_h());
        let x1 = if col + 1 == self.cols { self.width } else { (col + 1) * cw };
        let y1 = if row + 1 == self.rows { self.height } else { (row + 1) * ch };
        (col * cw, x1, row * ch, y1)
    }

    pub fn center(&self, cell: usize) -> (f64, f64) {
        let (x0, x1, y0, y1) = self.bounds(cell);
        ((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0)
    }
}
