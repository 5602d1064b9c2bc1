//! Boundary conditions and ghost-cell states.

use thiserror::Error;

use crate::euler::{FaceFrame, PrimitiveState};

use super::grid::StructuredGrid;

/// Number of ghost layers filled outside every boundary face.
pub const GHOST_LAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error("{edge:?} edge: segments must cover faces 0..{n} contiguously (gap or overlap at face {at})")]
    Coverage { edge: Edge, n: usize, at: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    /// `i = 0`
    West,
    /// `i = ni`
    East,
    /// `j = 0`
    South,
    /// `j = nj`
    North,
}

/// A shock crossing a straight boundary. The ghost state is `post` for face
/// centres with `x < x_s(t)` and `pre` elsewhere, `x_s(t) = x0 + speed t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingShock {
    pub x0: f64,
    pub speed: f64,
    pub pre: PrimitiveState,
    pub post: PrimitiveState,
}

impl MovingShock {
    pub fn position(&self, t: f64) -> f64 {
        self.x0 + self.speed * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    SupersonicInflow(PrimitiveState),
    /// Ghost layers repeat the adjacent interior cell.
    ZeroGradientOutflow,
    ReflectiveWall,
    /// Ghost layers mirror the interior cells in order (ghost k copies
    /// interior cell k).
    Extrapolate,
    MovingShockTop(MovingShock),
}

/// Condition on a contiguous range of boundary faces `start..end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub kind: BoundaryKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub west: Vec<Segment>,
    pub east: Vec<Segment>,
    pub south: Vec<Segment>,
    pub north: Vec<Segment>,
}

impl BoundarySpec {
    /// One condition per edge covering every face.
    pub fn uniform(grid: &StructuredGrid, west: BoundaryKind, east: BoundaryKind, south: BoundaryKind, north: BoundaryKind) -> Self {
        let (ni, nj) = (grid.ni(), grid.nj());
        Self {
            west: vec![Segment { start: 0, end: nj, kind: west }],
            east: vec![Segment { start: 0, end: nj, kind: east }],
            south: vec![Segment { start: 0, end: ni, kind: south }],
            north: vec![Segment { start: 0, end: ni, kind: north }],
        }
    }

    pub fn all(grid: &StructuredGrid, kind: BoundaryKind) -> Self {
        Self::uniform(grid, kind, kind, kind, kind)
    }

    pub fn edge(&self, edge: Edge) -> &[Segment] {
        match edge {
            Edge::West => &self.west,
            Edge::East => &self.east,
            Edge::South => &self.south,
            Edge::North => &self.north,
        }
    }

    /// Checks that every boundary face has exactly one condition.
    pub fn validate(&self, grid: &StructuredGrid) -> Result<(), BoundaryError> {
        for (edge, n) in [(Edge::West, grid.nj()), (Edge::East, grid.nj()), (Edge::South, grid.ni()), (Edge::North, grid.ni())] {
            let mut at = 0;
            for s in self.edge(edge) {
                if s.start != at || s.end <= s.start {
                    return Err(BoundaryError::Coverage { edge, n, at });
                }
                at = s.end;
            }
            if at != n {
                return Err(BoundaryError::Coverage { edge, n, at });
            }
        }
        Ok(())
    }

    pub fn kind_at(&self, edge: Edge, face: usize) -> &BoundaryKind {
        let segs = self.edge(edge);
        &segs
            .iter()
            .find(|s| face >= s.start && face < s.end)
            .unwrap_or_else(|| segs.last().expect("validated boundary edge is non-empty"))
            .kind
    }
}

/// Reflects the velocity about the face normal.
#[inline]
pub fn mirror(w: PrimitiveState, frame: &FaceFrame) -> PrimitiveState {
    let un = w.u * frame.nx + w.v * frame.ny;
    PrimitiveState::new(w.rho, w.u - 2.0 * un * frame.nx, w.v - 2.0 * un * frame.ny, w.p)
}

/// Ghost states for one boundary face. `interior[0]` is the cell touching the
/// face, `interior[1]` the next one inward; the result is ordered the same
/// way (`[0]` touches the face).
pub fn ghost_states(
    kind: &BoundaryKind,
    interior: [PrimitiveState; 2],
    frame: &FaceFrame,
    face_center: (f64, f64),
    t: f64,
) -> [PrimitiveState; 2] {
    match kind {
        BoundaryKind::SupersonicInflow(w) => [*w, *w],
        BoundaryKind::ZeroGradientOutflow => [interior[0], interior[0]],
        BoundaryKind::Extrapolate => interior,
        BoundaryKind::ReflectiveWall => [mirror(interior[0], frame), mirror(interior[1], frame)],
        BoundaryKind::MovingShockTop(s) => {
            let w = if face_center.0 < s.position(t) { s.post } else { s.pre };
            [w, w]
        }
    }
}

/// Ghost states on every edge, indexed by boundary face.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostLayers {
    pub west: Vec<[PrimitiveState; 2]>,
    pub east: Vec<[PrimitiveState; 2]>,
    pub south: Vec<[PrimitiveState; 2]>,
    pub north: Vec<[PrimitiveState; 2]>,
}

/// Fills both ghost layers on every edge from the interior primitives
/// (`prims` indexed like the cells) at time `t`.
pub fn apply_boundaries(grid: &StructuredGrid, prims: &[PrimitiveState], spec: &BoundarySpec, t: f64) -> GhostLayers {
    let (ni, nj) = (grid.ni(), grid.nj());
    let at = |i: usize, j: usize| prims[grid.cell_index(i, j)];
    let second_i = |i: usize| if ni > 1 { i } else { 0 };
    let second_j = |j: usize| if nj > 1 { j } else { 0 };

    let west = (0..nj)
        .map(|j| {
            ghost_states(
                spec.kind_at(Edge::West, j),
                [at(0, j), at(second_i(1), j)],
                grid.iface(0, j),
                grid.iface_center(0, j),
                t,
            )
        })
        .collect();
    let east = (0..nj)
        .map(|j| {
            ghost_states(
                spec.kind_at(Edge::East, j),
                [at(ni - 1, j), at(if ni > 1 { ni - 2 } else { 0 }, j)],
                grid.iface(ni, j),
                grid.iface_center(ni, j),
                t,
            )
        })
        .collect();
    let south = (0..ni)
        .map(|i| {
            ghost_states(
                spec.kind_at(Edge::South, i),
                [at(i, 0), at(i, second_j(1))],
                grid.jface(i, 0),
                grid.jface_center(i, 0),
                t,
            )
        })
        .collect();
    let north = (0..ni)
        .map(|i| {
            ghost_states(
                spec.kind_at(Edge::North, i),
                [at(i, nj - 1), at(i, if nj > 1 { nj - 2 } else { 0 })],
                grid.jface(i, nj),
                grid.jface_center(i, nj),
                t,
            )
        })
        .collect();
    GhostLayers { west, east, south, north }
}
