use thiserror::Error;

use crate::euler::FaceFrame;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least one cell in each direction (got {ni}x{nj})")]
    Empty { ni: usize, nj: usize },
    #[error("expected {expected} vertex coordinates, got {got}")]
    VertexCount { expected: usize, got: usize },
    #[error("cell ({i}, {j}) has non-positive area {area:e}")]
    InvertedCell { i: usize, j: usize, area: f64 },
    #[error("degenerate face at vertex ({i}, {j})")]
    DegenerateFace { i: usize, j: usize },
    #[error("solid mask has {got} entries, expected {expected}")]
    MaskSize { expected: usize, got: usize },
}

/// Logically rectangular quadrilateral mesh.
///
/// Vertices are indexed `(i, j)` with `0 <= i <= ni`, `0 <= j <= nj`. Cell
/// `(i, j)` has corners `(i, j)`, `(i+1, j)`, `(i+1, j+1)`, `(i, j+1)` in
/// counter-clockwise order. The i-face `(i, j)` separates cells `(i-1, j)`
/// and `(i, j)` and its normal points towards increasing `i`; the j-face
/// `(i, j)` separates `(i, j-1)` and `(i, j)` with normal towards increasing
/// `j`. Cells flagged solid carry no unknowns; faces between a fluid and a
/// solid cell act as reflective walls.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGrid {
    ni: usize,
    nj: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    area: Vec<f64>,
    center: Vec<(f64, f64)>,
    iface: Vec<FaceFrame>,
    jface: Vec<FaceFrame>,
    solid: Vec<bool>,
}

impl StructuredGrid {
    /// Builds a grid from vertex coordinates stored row by row
    /// (`index = j * (ni + 1) + i`).
    pub fn new(ni: usize, nj: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self, GridError> {
        if ni == 0 || nj == 0 {
            return Err(GridError::Empty { ni, nj });
        }
        let nv = (ni + 1) * (nj + 1);
        if x.len() != nv || y.len() != nv {
            return Err(GridError::VertexCount { expected: nv, got: x.len().min(y.len()) });
        }
        let v = |i: usize, j: usize| {
            let k = j * (ni + 1) + i;
            (x[k], y[k])
        };

        let mut area = Vec::with_capacity(ni * nj);
        let mut center = Vec::with_capacity(ni * nj);
        for j in 0..nj {
            for i in 0..ni {
                let p0 = v(i, j);
                let p1 = v(i + 1, j);
                let p2 = v(i + 1, j + 1);
                let p3 = v(i, j + 1);
                // half the cross product of the diagonals
                let d1 = (p2.0 - p0.0, p2.1 - p0.1);
                let d2 = (p3.0 - p1.0, p3.1 - p1.1);
                let a = 0.5 * (d1.0 * d2.1 - d1.1 * d2.0);
                if !(a > 0.0) {
                    return Err(GridError::InvertedCell { i, j, area: a });
                }
                area.push(a);
                center.push((
                    0.25 * ((p0.0 + p2.0) + (p1.0 + p3.0)),
                    0.25 * ((p0.1 + p2.1) + (p1.1 + p3.1)),
                ));
            }
        }

        let mut iface = Vec::with_capacity((ni + 1) * nj);
        for j in 0..nj {
            for i in 0..=ni {
                let (a, b) = (v(i, j), v(i, j + 1));
                let f = FaceFrame::from_edge(b.0 - a.0, b.1 - a.1)
                    .map_err(|_| GridError::DegenerateFace { i, j })?;
                iface.push(f);
            }
        }
        // j-faces are stored column by column: index = i * (nj + 1) + j
        let mut jface = Vec::with_capacity(ni * (nj + 1));
        for i in 0..ni {
            for j in 0..=nj {
                let (a, b) = (v(i + 1, j), v(i, j));
                let f = FaceFrame::from_edge(b.0 - a.0, b.1 - a.1)
                    .map_err(|_| GridError::DegenerateFace { i, j })?;
                jface.push(f);
            }
        }

        Ok(Self { ni, nj, x, y, area, center, iface, jface, solid: vec![false; ni * nj] })
    }

    /// Uniform Cartesian grid on `[0, lx] x [0, ly]`.
    pub fn cartesian(ni: usize, nj: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        Self::from_fn(ni, nj, |i, j| (lx * i as f64 / ni as f64, ly * j as f64 / nj as f64))
    }

    pub fn from_fn(ni: usize, nj: usize, f: impl Fn(usize, usize) -> (f64, f64)) -> Result<Self, GridError> {
        let nv = (ni + 1) * (nj + 1);
        let mut x = Vec::with_capacity(nv);
        let mut y = Vec::with_capacity(nv);
        for j in 0..=nj {
            for i in 0..=ni {
                let (px, py) = f(i, j);
                x.push(px);
                y.push(py);
            }
        }
        Self::new(ni, nj, x, y)
    }

    /// Marks cells as solid; `mask` is indexed like the cells.
    pub fn with_solid(mut self, mask: Vec<bool>) -> Result<Self, GridError> {
        if mask.len() != self.ni * self.nj {
            return Err(GridError::MaskSize { expected: self.ni * self.nj, got: mask.len() });
        }
        self.solid = mask;
        Ok(self)
    }

    /// Grid with `i` and `j` exchanged and `x` and `y` swapped.
    pub fn transposed(&self) -> Self {
        let (ni, nj) = (self.nj, self.ni);
        let mut g = Self::from_fn(ni, nj, |i, j| {
            let (x, y) = self.vertex(j, i);
            (y, x)
        })
        .expect("transposing a valid grid yields a valid grid");
        g.solid = (0..ni * nj).map(|k| self.is_solid(k / ni, k % ni)).collect();
        g
    }

    #[inline]
    pub fn ni(&self) -> usize {
        self.ni
    }

    #[inline]
    pub fn nj(&self) -> usize {
        self.nj
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.ni * self.nj
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.ni + i
    }

    #[inline]
    pub fn vertex(&self, i: usize, j: usize) -> (f64, f64) {
        let k = j * (self.ni + 1) + i;
        (self.x[k], self.y[k])
    }

    #[inline]
    pub fn area(&self, i: usize, j: usize) -> f64 {
        self.area[self.cell_index(i, j)]
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        self.center[self.cell_index(i, j)]
    }

    #[inline]
    pub fn is_solid(&self, i: usize, j: usize) -> bool {
        self.solid[self.cell_index(i, j)]
    }

    pub fn solid_mask(&self) -> &[bool] {
        &self.solid
    }

    pub fn n_fluid(&self) -> usize {
        self.solid.iter().filter(|s| !**s).count()
    }

    /// Frame of the i-face at vertex column `i` (0..=ni), row `j`.
    #[inline]
    pub fn iface(&self, i: usize, j: usize) -> &FaceFrame {
        &self.iface[j * (self.ni + 1) + i]
    }

    /// Frame of the j-face at vertex row `j` (0..=nj), column `i`.
    #[inline]
    pub fn jface(&self, i: usize, j: usize) -> &FaceFrame {
        &self.jface[i * (self.nj + 1) + j]
    }

    /// All i-faces of row `j`, ordered by `i`.
    pub fn iface_row(&self, j: usize) -> &[FaceFrame] {
        &self.iface[j * (self.ni + 1)..(j + 1) * (self.ni + 1)]
    }

    /// All j-faces of column `i`, ordered by `j`.
    pub fn jface_col(&self, i: usize) -> &[FaceFrame] {
        &self.jface[i * (self.nj + 1)..(i + 1) * (self.nj + 1)]
    }

    pub fn iface_center(&self, i: usize, j: usize) -> (f64, f64) {
        let (a, b) = (self.vertex(i, j), self.vertex(i, j + 1));
        (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))
    }

    pub fn jface_center(&self, i: usize, j: usize) -> (f64, f64) {
        let (a, b) = (self.vertex(i, j), self.vertex(i + 1, j));
        (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))
    }
}
