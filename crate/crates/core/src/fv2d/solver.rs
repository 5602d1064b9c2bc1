//! Residual evaluation, time-step control and explicit time integration.

use rayon::prelude::*;
use thiserror::Error;

use crate::euler::{
    primitive_from_conserved, rotate_array_from_face, ConservedState, FaceFrame, Flux, GasModel,
    PrimitiveState,
};
use crate::riemann::{numerical_flux, FluxScheme};

use super::boundary::{apply_boundaries, mirror, BoundaryError, BoundarySpec, GhostLayers};
use super::grid::StructuredGrid;
use super::muscl::{reconstruct, Limiter};

pub type Field = Vec<ConservedState>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("non-physical state in cell ({i}, {j}) at step {step}: rho = {rho:e}, p = {p:e}")]
    NonPhysical { i: usize, j: usize, step: usize, rho: f64, p: f64 },
    #[error("CFL number {0} outside (0, 1]")]
    InvalidCfl(f64),
    #[error("spatial order {0} not supported (expected 1 or 2)")]
    InvalidOrder(u32),
    #[error("field has {got} cells, grid has {expected}")]
    FieldSize { expected: usize, got: usize },
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpatialOrder {
    #[default]
    First,
    Second,
}

impl SpatialOrder {
    pub fn from_number(n: u32) -> Result<Self, SolverError> {
        match n {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            _ => Err(SolverError::InvalidOrder(n)),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub scheme: FluxScheme,
    pub order: SpatialOrder,
    pub cfl: f64,
    pub limiter: Limiter,
}

impl SolverConfig {
    pub const DEFAULT_CFL: f64 = 0.5;

    pub fn new(scheme: FluxScheme, order: SpatialOrder, cfl: f64) -> Result<Self, SolverError> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(SolverError::InvalidCfl(cfl));
        }
        Ok(Self { scheme, order, cfl, limiter: Limiter::VanLeer })
    }

    pub fn first_order(scheme: FluxScheme) -> Self {
        Self { scheme, order: SpatialOrder::First, cfl: Self::DEFAULT_CFL, limiter: Limiter::VanLeer }
    }

    pub fn with_cfl(self, cfl: f64) -> Result<Self, SolverError> {
        Self::new(self.scheme, self.order, cfl).map(|c| Self { limiter: self.limiter, ..c })
    }
}

/// Placeholder primitive state for blanked cells; never enters a flux.
const SOLID_PLACEHOLDER: PrimitiveState = PrimitiveState::new(1.0, 0.0, 0.0, 1.0);

/// Primitive states of every cell; the first failing cell in index order is
/// reported. Blanked cells get a placeholder.
pub fn primitives(grid: &StructuredGrid, field: &[ConservedState], gas: GasModel, step: usize) -> Result<Vec<PrimitiveState>, SolverError> {
    if field.len() != grid.n_cells() {
        return Err(SolverError::FieldSize { expected: grid.n_cells(), got: field.len() });
    }
    let solid = grid.solid_mask();
    let out: Vec<_> = field
        .par_iter()
        .zip(solid.par_iter())
        .map(|(u, &s)| if s { Ok(SOLID_PLACEHOLDER) } else { primitive_from_conserved(*u, gas) })
        .collect();
    let mut prims = Vec::with_capacity(out.len());
    for (k, r) in out.into_iter().enumerate() {
        match r {
            Ok(w) => prims.push(w),
            Err(_) => {
                let u = field[k];
                let p = (gas.gamma - 1.0) * (u.rho_e - 0.5 * (u.rho_u * u.rho_u + u.rho_v * u.rho_v) / u.rho);
                return Err(SolverError::NonPhysical { i: k % grid.ni(), j: k / grid.ni(), step, rho: u.rho, p });
            }
        }
    }
    Ok(prims)
}

/// Face flux in the global frame, multiplied by the face length.
#[inline]
pub fn face_flux(wl: PrimitiveState, wr: PrimitiveState, frame: &FaceFrame, gas: GasModel, scheme: FluxScheme) -> Flux {
    let f = numerical_flux(wl.to_face(frame), wr.to_face(frame), gas, scheme);
    let g = rotate_array_from_face(f, frame);
    [g[0] * frame.length, g[1] * frame.length, g[2] * frame.length, g[3] * frame.length]
}

/// Fluxes through the `n + 1` faces of a line of `n` cells padded with two
/// ghost cells at each end. A face between a fluid and a solid cell is a
/// reflective wall; a domain-edge face next to a solid cell carries nothing.
fn pencil_fluxes(
    cells: &[PrimitiveState],
    solid: &[bool],
    frames: &[FaceFrame],
    cfg: &SolverConfig,
    gas: GasModel,
    out: &mut [Flux],
) {
    let n = frames.len() - 1;
    // neighbour `k` of cell `from`, mirrored across their shared face if solid
    let get = |k: usize, from: usize| -> PrimitiveState {
        if solid[k] {
            let f = if k < from { from - 2 } else { from - 1 };
            mirror(cells[from], &frames[f])
        } else {
            cells[k]
        }
    };
    let faces_of = |c: usize| -> (PrimitiveState, PrimitiveState) {
        match cfg.order {
            SpatialOrder::First => (cells[c], cells[c]),
            SpatialOrder::Second => reconstruct(get(c - 1, c), cells[c], get(c + 1, c), cfg.limiter),
        }
    };
    for f in 0..=n {
        let (l, r) = (f + 1, f + 2);
        let frame = &frames[f];
        let blocked = (solid[l] && solid[r]) || (f == 0 && solid[r]) || (f == n && solid[l]);
        if blocked {
            out[f] = [0.0; 4];
            continue;
        }
        let (wl, wr) = if solid[r] {
            let wl = faces_of(l).1;
            (wl, mirror(wl, frame))
        } else if solid[l] {
            let wr = faces_of(r).0;
            (mirror(wr, frame), wr)
        } else {
            (faces_of(l).1, faces_of(r).0)
        };
        out[f] = face_flux(wl, wr, frame, gas, cfg.scheme);
    }
}

/// Semi-discrete right-hand side `dU/dt` plus the face fluxes it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub rhs: Field,
    /// i-face fluxes, index `j * (ni + 1) + i`, length-weighted, global frame.
    pub iflux: Vec<Flux>,
    /// j-face fluxes, index `i * (nj + 1) + j`.
    pub jflux: Vec<Flux>,
    ni: usize,
    nj: usize,
}

impl Residual {
    /// Net flux entering the domain through its outer edges.
    pub fn boundary_inflow(&self) -> [f64; 4] {
        let (ni, nj) = (self.ni, self.nj);
        let mut s = [0.0; 4];
        for j in 0..nj {
            let (a, b) = (self.iflux[j * (ni + 1)], self.iflux[j * (ni + 1) + ni]);
            for c in 0..4 {
                s[c] += a[c] - b[c];
            }
        }
        for i in 0..ni {
            let (a, b) = (self.jflux[i * (nj + 1)], self.jflux[i * (nj + 1) + nj]);
            for c in 0..4 {
                s[c] += a[c] - b[c];
            }
        }
        s
    }
}

/// Assembles `dU/dt` from primitive states and filled ghost layers.
pub fn compute_residual(
    grid: &StructuredGrid,
    prims: &[PrimitiveState],
    ghosts: &GhostLayers,
    cfg: &SolverConfig,
    gas: GasModel,
) -> Residual {
    let (ni, nj) = (grid.ni(), grid.nj());
    let solid = grid.solid_mask();

    let mut iflux = vec![[0.0; 4]; nj * (ni + 1)];
    iflux.par_chunks_mut(ni + 1).enumerate().for_each(|(j, out)| {
        let mut cells = Vec::with_capacity(ni + 4);
        let mut mask = Vec::with_capacity(ni + 4);
        cells.extend([ghosts.west[j][1], ghosts.west[j][0]]);
        cells.extend_from_slice(&prims[j * ni..(j + 1) * ni]);
        cells.extend([ghosts.east[j][0], ghosts.east[j][1]]);
        mask.extend([false, false]);
        mask.extend_from_slice(&solid[j * ni..(j + 1) * ni]);
        mask.extend([false, false]);
        pencil_fluxes(&cells, &mask, grid.iface_row(j), cfg, gas, out);
    });

    let mut jflux = vec![[0.0; 4]; ni * (nj + 1)];
    jflux.par_chunks_mut(nj + 1).enumerate().for_each(|(i, out)| {
        let mut cells = Vec::with_capacity(nj + 4);
        let mut mask = Vec::with_capacity(nj + 4);
        cells.extend([ghosts.south[i][1], ghosts.south[i][0]]);
        cells.extend((0..nj).map(|j| prims[j * ni + i]));
        cells.extend([ghosts.north[i][0], ghosts.north[i][1]]);
        mask.extend([false, false]);
        mask.extend((0..nj).map(|j| solid[j * ni + i]));
        mask.extend([false, false]);
        pencil_fluxes(&cells, &mask, grid.jface_col(i), cfg, gas, out);
    });

    let mut rhs = vec![ConservedState::default(); ni * nj];
    rhs.par_chunks_mut(ni).enumerate().for_each(|(j, row)| {
        for (i, r) in row.iter_mut().enumerate() {
            if solid[j * ni + i] {
                continue;
            }
            let (fa, fb) = (iflux[j * (ni + 1) + i], iflux[j * (ni + 1) + i + 1]);
            let (ga, gb) = (jflux[i * (nj + 1) + j], jflux[i * (nj + 1) + j + 1]);
            let inv = 1.0 / grid.area(i, j);
            let c = |k: usize| ((fa[k] - fb[k]) + (ga[k] - gb[k])) * inv;
            *r = ConservedState::new(c(0), c(1), c(2), c(3));
        }
    });
    Residual { rhs, iflux, jflux, ni, nj }
}

/// Recovers primitives, fills ghosts at time `t` and evaluates the residual.
pub fn evaluate(
    grid: &StructuredGrid,
    field: &[ConservedState],
    spec: &BoundarySpec,
    cfg: &SolverConfig,
    gas: GasModel,
    t: f64,
    step: usize,
) -> Result<Residual, SolverError> {
    let prims = primitives(grid, field, gas, step)?;
    let ghosts = apply_boundaries(grid, &prims, spec, t);
    Ok(compute_residual(grid, &prims, &ghosts, cfg, gas))
}

/// Largest stable step: `cfl * min(area / sum_faces (|u_n| + a) ds)`.
pub fn compute_dt(grid: &StructuredGrid, field: &[ConservedState], cfl: f64, gas: GasModel) -> Result<f64, SolverError> {
    let prims = primitives(grid, field, gas, 0)?;
    Ok(cfl * min_cell_dt(grid, &prims, gas))
}

fn cell_spectral_sum(grid: &StructuredGrid, w: &PrimitiveState, i: usize, j: usize, gas: GasModel) -> f64 {
    let a = w.sound_speed(gas);
    let s = |f: &FaceFrame| ((w.u * f.nx + w.v * f.ny).abs() + a) * f.length;
    (s(grid.iface(i, j)) + s(grid.iface(i + 1, j))) + (s(grid.jface(i, j)) + s(grid.jface(i, j + 1)))
}

fn min_cell_dt(grid: &StructuredGrid, prims: &[PrimitiveState], gas: GasModel) -> f64 {
    let ni = grid.ni();
    prims
        .par_iter()
        .enumerate()
        .filter(|(k, _)| !grid.solid_mask()[*k])
        .map(|(k, w)| {
            let (i, j) = (k % ni, k / ni);
            grid.area(i, j) / cell_spectral_sum(grid, w, i, j, gas)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Per-cell stable steps (`cfl * area / sum`) for local time stepping;
/// blanked cells get 0.
pub fn local_dt(grid: &StructuredGrid, prims: &[PrimitiveState], cfl: f64, gas: GasModel) -> Vec<f64> {
    let ni = grid.ni();
    prims
        .par_iter()
        .enumerate()
        .map(|(k, w)| {
            if grid.solid_mask()[k] {
                return 0.0;
            }
            let (i, j) = (k % ni, k / ni);
            cfl * grid.area(i, j) / cell_spectral_sum(grid, w, i, j, gas)
        })
        .collect()
}

/// Forward-Euler update `U + dt * rhs`.
pub fn fv_update(field: &[ConservedState], rhs: &[ConservedState], dt: f64) -> Field {
    field.par_iter().zip(rhs.par_iter()).map(|(u, r)| *u + dt * *r).collect()
}

/// Two-stage strong-stability-preserving Runge-Kutta step. `l(u, stage)`
/// evaluates the right-hand side; stage 1 is evaluated at `t + dt`.
pub fn ssprk2_step<E>(
    field: &[ConservedState],
    dt: f64,
    mut l: impl FnMut(&[ConservedState], usize) -> Result<Field, E>,
) -> Result<Field, E> {
    let u1 = fv_update(field, &l(field, 0)?, dt);
    let r1 = l(&u1, 1)?;
    Ok(field
        .par_iter()
        .zip(u1.par_iter().zip(r1.par_iter()))
        .map(|(u, (a, r))| 0.5 * *u + 0.5 * (*a + dt * *r))
        .collect())
}

/// `sqrt(sum (d rho / dt)^2 / N)` with a fixed summation order.
pub fn residual_l2(old: &[ConservedState], new: &[ConservedState], dt: f64) -> f64 {
    if old.is_empty() {
        return 0.0;
    }
    let sum: f64 = old
        .iter()
        .zip(new)
        .map(|(a, b)| {
            let d = (b.rho - a.rho) / dt;
            d * d
        })
        .sum();
    (sum / old.len() as f64).sqrt()
}

/// Total of `area * U` over fluid cells.
pub fn integrate(grid: &StructuredGrid, field: &[ConservedState]) -> [f64; 4] {
    let mut s = [0.0; 4];
    for (k, u) in field.iter().enumerate() {
        if grid.solid_mask()[k] {
            continue;
        }
        let a = grid.area(k % grid.ni(), k / grid.ni());
        for (c, v) in u.to_array().iter().enumerate() {
            s[c] += a * v;
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeStepping {
    /// One step size for every cell (time-accurate).
    #[default]
    Global,
    /// Each cell advances with its own stable step (steady-state only).
    Local,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualHistory {
    /// `(iteration, time, L2 density residual)`
    pub entries: Vec<(usize, f64, f64)>,
}

impl ResidualHistory {
    pub fn push(&mut self, iteration: usize, time: f64, residual: f64) {
        self.entries.push((iteration, time, residual));
    }

    pub fn first(&self) -> Option<f64> {
        self.entries.first().map(|e| e.2)
    }

    pub fn min(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.2).reduce(f64::min)
    }

    /// Orders of magnitude between the first residual and the mean of the
    /// last `tail` residuals.
    pub fn orders_dropped(&self, tail: usize) -> Option<f64> {
        let first = self.first()?;
        let n = self.entries.len();
        let tail = tail.clamp(1, n);
        let mean = self.entries[n - tail..].iter().map(|e| e.2).sum::<f64>() / tail as f64;
        Some((first / mean).log10())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub iteration: usize,
    pub time: f64,
    pub dt: f64,
    pub residual: f64,
}

/// Time-marching driver owning the grid, the field and its history.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub grid: StructuredGrid,
    pub boundaries: BoundarySpec,
    pub config: SolverConfig,
    pub gas: GasModel,
    pub stepping: TimeStepping,
    field: Field,
    time: f64,
    iteration: usize,
    history: ResidualHistory,
}

impl Simulation {
    pub fn new(
        grid: StructuredGrid,
        field: Field,
        boundaries: BoundarySpec,
        config: SolverConfig,
        gas: GasModel,
    ) -> Result<Self, SolverError> {
        boundaries.validate(&grid)?;
        primitives(&grid, &field, gas, 0)?;
        Ok(Self {
            grid,
            boundaries,
            config,
            gas,
            stepping: TimeStepping::Global,
            field,
            time: 0.0,
            iteration: 0,
            history: ResidualHistory::default(),
        })
    }

    pub fn with_stepping(mut self, stepping: TimeStepping) -> Self {
        self.stepping = stepping;
        self
    }

    pub fn field(&self) -> &[ConservedState] {
        &self.field
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn history(&self) -> &ResidualHistory {
        &self.history
    }

    pub fn primitives(&self) -> Result<Vec<PrimitiveState>, SolverError> {
        primitives(&self.grid, &self.field, self.gas, self.iteration)
    }

    /// Advances one step, never past `t_end`. On error the field is left at
    /// the last valid state.
    pub fn step(&mut self, t_end: Option<f64>) -> Result<StepInfo, SolverError> {
        let step = self.iteration + 1;
        let prims = primitives(&self.grid, &self.field, self.gas, step)?;
        let (dt, scale) = match self.stepping {
            TimeStepping::Global => {
                let mut dt = self.config.cfl * min_cell_dt(&self.grid, &prims, self.gas);
                if let Some(te) = t_end {
                    dt = dt.min(te - self.time);
                }
                (dt, None)
            }
            TimeStepping::Local => {
                let local = local_dt(&self.grid, &prims, self.config.cfl, self.gas);
                let dt = local.iter().copied().filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
                // rhs is rescaled by dt_local / dt so that one update uses dt_local
                (dt, Some(local.iter().map(|d| d / dt).collect::<Vec<_>>()))
            }
        };

        let (grid, spec, cfg, gas, t) = (&self.grid, &self.boundaries, &self.config, self.gas, self.time);
        let mut l = |u: &[ConservedState], stage: usize| -> Result<Field, SolverError> {
            let ts = if stage == 0 { t } else { t + dt };
            let mut rhs = evaluate(grid, u, spec, cfg, gas, ts, step)?.rhs;
            if let Some(s) = &scale {
                rhs.par_iter_mut().zip(s.par_iter()).for_each(|(r, f)| *r = *f * *r);
            }
            Ok(rhs)
        };
        let new = match cfg.order {
            SpatialOrder::First => fv_update(&self.field, &l(&self.field, 0)?, dt),
            SpatialOrder::Second => ssprk2_step(&self.field, dt, &mut l)?,
        };
        primitives(grid, &new, gas, step)?;

        let residual = residual_l2(&self.field, &new, dt);
        self.field = new;
        self.iteration = step;
        self.time = match t_end {
            Some(te) if dt >= te - t => te,
            _ => t + dt,
        };
        self.history.push(step, self.time, residual);
        Ok(StepInfo { iteration: step, time: self.time, dt, residual })
    }

    /// Steps until `t_end` is reached or `max_iters` steps have been taken,
    /// calling `observer` after each step.
    pub fn run(
        &mut self,
        t_end: Option<f64>,
        max_iters: Option<usize>,
        mut observer: impl FnMut(&Simulation, &StepInfo),
    ) -> Result<(), SolverError> {
        loop {
            if let Some(te) = t_end {
                if self.time >= te {
                    break;
                }
            }
            if let Some(m) = max_iters {
                if self.iteration >= m {
                    break;
                }
            }
            if t_end.is_none() && max_iters.is_none() {
                break;
            }
            let info = self.step(t_end)?;
            observer(self, &info);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::conserved_from_primitive;
    use crate::fv2d::boundary::BoundaryKind;
    use crate::riemann::SchemeKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const GAS: GasModel = GasModel::AIR;

    fn uniform(grid: &StructuredGrid, w: PrimitiveState) -> Field {
        vec![conserved_from_primitive(w, GAS); grid.n_cells()]
    }

    fn random_field(grid: &StructuredGrid, seed: u64) -> Field {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..grid.n_cells())
            .map(|_| {
                let w = PrimitiveState::new(
                    rng.gen_range(0.5..2.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.5..2.0),
                );
                conserved_from_primitive(w, GAS)
            })
            .collect()
    }

    fn skewed(ni: usize, nj: usize) -> StructuredGrid {
        StructuredGrid::from_fn(ni, nj, |i, j| {
            let (x, y) = (i as f64 / ni as f64, j as f64 / nj as f64);
            (x + 0.1 * y * y, y + 0.05 * (3.0 * x).sin())
        })
        .unwrap()
    }

    #[test]
    fn dt_of_stagnant_unit_cells() {
        let g = StructuredGrid::cartesian(3, 3, 3.0, 3.0).unwrap();
        // a = 1 for rho = gamma, p = 1
        let f = uniform(&g, PrimitiveState::new(1.4, 0.0, 0.0, 1.0));
        let dt = compute_dt(&g, &f, 0.5, GAS).unwrap();
        assert!((dt - 0.5 / 4.0).abs() < 1e-15);
        let fast = uniform(&g, PrimitiveState::new(1.4, 2.0, 1.0, 1.0));
        let fast2 = uniform(&g, PrimitiveState::new(1.4, 4.0, 2.0, 1.0));
        assert!(compute_dt(&g, &fast2, 0.5, GAS).unwrap() <= compute_dt(&g, &fast, 0.5, GAS).unwrap());
    }

    #[test]
    fn dt_matches_brute_force() {
        let g = skewed(7, 5);
        let f = random_field(&g, 3);
        let dt = compute_dt(&g, &f, 0.7, GAS).unwrap();
        let mut best = f64::INFINITY;
        for j in 0..5 {
            for i in 0..7 {
                let w = primitive_from_conserved(f[g.cell_index(i, j)], GAS).unwrap();
                let a = w.sound_speed(GAS);
                let faces = [*g.iface(i, j), *g.iface(i + 1, j), *g.jface(i, j), *g.jface(i, j + 1)];
                let sum: f64 = faces.iter().map(|fr| ((w.u * fr.nx + w.v * fr.ny).abs() + a) * fr.length).sum();
                best = best.min(g.area(i, j) / sum);
            }
        }
        assert!((dt - 0.7 * best).abs() <= 1e-14 * dt);
    }

    #[test]
    fn uniform_flow_is_preserved() {
        let g = skewed(6, 6);
        let w = PrimitiveState::new(1.0, 0.3, -0.2, 1.0);
        let f = uniform(&g, w);
        let spec = BoundarySpec::all(&g, BoundaryKind::ZeroGradientOutflow);
        for kind in SchemeKind::ALL {
            for order in [SpatialOrder::First, SpatialOrder::Second] {
                let cfg = SolverConfig { order, ..SolverConfig::first_order(FluxScheme::of(kind)) };
                let r = evaluate(&g, &f, &spec, &cfg, GAS, 0.0, 0).unwrap();
                for c in &r.rhs {
                    for v in c.to_array() {
                        assert!(v.abs() < 1e-12, "{kind:?} {order:?}: {v}");
                    }
                }
            }
        }
        // stagnant gas in a closed box
        let f = uniform(&g, PrimitiveState::new(1.0, 0.0, 0.0, 1.0));
        let spec = BoundarySpec::all(&g, BoundaryKind::ReflectiveWall);
        let r = evaluate(&g, &f, &spec, &SolverConfig::first_order(FluxScheme::hllem()), GAS, 0.0, 0).unwrap();
        assert!(r.rhs.iter().all(|c| c.to_array().iter().all(|v| v.abs() < 1e-12)));
    }

    #[test]
    fn conservation_on_random_field() {
        let g = skewed(9, 7);
        let f = random_field(&g, 11);
        let spec = BoundarySpec::all(&g, BoundaryKind::ZeroGradientOutflow);
        for order in [SpatialOrder::First, SpatialOrder::Second] {
            let cfg = SolverConfig { order, ..SolverConfig::first_order(FluxScheme::hllem_fp1d()) };
            let r = evaluate(&g, &f, &spec, &cfg, GAS, 0.0, 0).unwrap();
            let dt = 1e-3;
            let before = integrate(&g, &f);
            let after = integrate(&g, &fv_update(&f, &r.rhs, dt));
            let inflow = r.boundary_inflow();
            for c in 0..4 {
                let scale = before[c].abs().max(1.0);
                assert!((after[c] - before[c] - dt * inflow[c]).abs() <= 1e-11 * scale);
            }
        }
    }

    #[test]
    fn closed_box_conserves_mass_and_energy() {
        let g = skewed(8, 8);
        let f = random_field(&g, 5);
        let spec = BoundarySpec::all(&g, BoundaryKind::ReflectiveWall);
        let cfg = SolverConfig::first_order(FluxScheme::hlle());
        let r = evaluate(&g, &f, &spec, &cfg, GAS, 0.0, 0).unwrap();
        let inflow = r.boundary_inflow();
        assert!(inflow[0].abs() < 1e-13);
        assert!(inflow[3].abs() < 1e-13);
    }

    #[test]
    fn transposed_problem_gives_transposed_solution() {
        let (ni, nj) = (7, 5);
        let g = StructuredGrid::cartesian(ni, nj, ni as f64, nj as f64).unwrap();
        let t = g.transposed();
        let f = random_field(&g, 17);
        let ft: Field = (0..ni * nj)
            .map(|k| {
                let (i2, j2) = (k % nj, k / nj);
                let u = f[g.cell_index(j2, i2)];
                ConservedState::new(u.rho, u.rho_v, u.rho_u, u.rho_e)
            })
            .collect();
        let spec = BoundarySpec::uniform(&g, BoundaryKind::ZeroGradientOutflow, BoundaryKind::ReflectiveWall, BoundaryKind::ReflectiveWall, BoundaryKind::Extrapolate);
        let spec_t = BoundarySpec::uniform(&t, BoundaryKind::ReflectiveWall, BoundaryKind::Extrapolate, BoundaryKind::ZeroGradientOutflow, BoundaryKind::ReflectiveWall);
        for kind in SchemeKind::ALL {
            let cfg = SolverConfig::first_order(FluxScheme::of(kind));
            let mut a = Simulation::new(g.clone(), f.clone(), spec.clone(), cfg, GAS).unwrap();
            let mut b = Simulation::new(t.clone(), ft.clone(), spec_t.clone(), cfg, GAS).unwrap();
            for _ in 0..5 {
                a.step(None).unwrap();
                b.step(None).unwrap();
            }
            for j in 0..nj {
                for i in 0..ni {
                    let u = a.field()[g.cell_index(i, j)];
                    let v = b.field()[t.cell_index(j, i)];
                    assert_eq!(u.to_array(), [v.rho, v.rho_v, v.rho_u, v.rho_e], "{kind:?} at ({i}, {j})");
                }
            }
        }
    }

    fn reference_1d_step(w: &[PrimitiveState], dx: f64, dt: f64, scheme: FluxScheme) -> Vec<ConservedState> {
        let n = w.len();
        let flux = |a: PrimitiveState, b: PrimitiveState| numerical_flux(a, b, GAS, scheme);
        (0..n)
            .map(|i| {
                let wl = if i == 0 { w[0] } else { w[i - 1] };
                let wr = if i + 1 == n { w[n - 1] } else { w[i + 1] };
                let (fa, fb) = (flux(wl, w[i]), flux(w[i], wr));
                let u = conserved_from_primitive(w[i], GAS).to_array();
                ConservedState::from_array([0, 1, 2, 3].map(|c| u[c] - dt / dx * (fb[c] - fa[c])))
            })
            .collect()
    }

    #[test]
    fn sod_tube_reduces_to_1d_scheme() {
        let n = 20;
        let g = StructuredGrid::cartesian(n, 1, 1.0, 0.05).unwrap();
        let sod = |x: f64| if x < 0.5 { PrimitiveState::new(1.0, 0.0, 0.0, 1.0) } else { PrimitiveState::new(0.125, 0.0, 0.0, 0.1) };
        for kind in SchemeKind::ALL {
            let scheme = FluxScheme::of(kind);
            let mut w: Vec<_> = (0..n).map(|i| sod(g.center(i, 0).0)).collect();
            let field: Field = w.iter().map(|p| conserved_from_primitive(*p, GAS)).collect();
            let spec = BoundarySpec::uniform(&g, BoundaryKind::ZeroGradientOutflow, BoundaryKind::ZeroGradientOutflow, BoundaryKind::ReflectiveWall, BoundaryKind::ReflectiveWall);
            let mut sim = Simulation::new(g.clone(), field, spec, SolverConfig::first_order(scheme), GAS).unwrap();
            for _ in 0..10 {
                let info = sim.step(None).unwrap();
                let reference = reference_1d_step(&w, 1.0 / n as f64, info.dt, scheme);
                for (a, b) in sim.field().iter().zip(&reference) {
                    for (x, y) in a.to_array().iter().zip(b.to_array()) {
                        assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{kind:?}: {x} vs {y}");
                    }
                }
                w = reference.iter().map(|u| primitive_from_conserved(*u, GAS).unwrap()).collect();
            }
        }
    }

    #[test]
    fn zero_limiter_reproduces_first_order() {
        let g = skewed(6, 5);
        let f = random_field(&g, 23);
        let spec = BoundarySpec::all(&g, BoundaryKind::ReflectiveWall);
        let first = SolverConfig::first_order(FluxScheme::hllem());
        let second = SolverConfig { order: SpatialOrder::Second, limiter: Limiter::Zero, ..first };
        let a = evaluate(&g, &f, &spec, &first, GAS, 0.0, 0).unwrap();
        let b = evaluate(&g, &f, &spec, &second, GAS, 0.0, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ssprk2_is_heun_for_linear_operators() {
        let u: Field = (0..5).map(|k| ConservedState::new(1.0 + k as f64, 0.5, -0.25, 3.0)).collect();
        // L(u) = -2 u
        let l = |v: &[ConservedState], _| -> Result<Field, ()> { Ok(v.iter().map(|x| -2.0 * *x).collect()) };
        let dt = 0.1;
        let got = ssprk2_step(&u, dt, l).unwrap();
        for (g, x) in got.iter().zip(&u) {
            let lu = -2.0 * *x;
            let pred = *x + dt * lu;
            let heun = *x + (0.5 * dt) * (lu + -2.0 * pred);
            for (a, b) in g.to_array().iter().zip(heun.to_array()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ssprk2_is_second_order_in_time() {
        let n = 40;
        let g = StructuredGrid::cartesian(n, 1, 1.0, 1.0 / n as f64).unwrap();
        let f0: Field = (0..n)
            .map(|i| {
                let x = g.center(i, 0).0;
                let rho = 1.0 + 0.2 * (-(x - 0.5).powi(2) / 0.01).exp();
                conserved_from_primitive(PrimitiveState::new(rho, 1.0, 0.0, 1.0), GAS)
            })
            .collect();
        let spec = BoundarySpec::uniform(&g, BoundaryKind::ZeroGradientOutflow, BoundaryKind::ZeroGradientOutflow, BoundaryKind::ReflectiveWall, BoundaryKind::ReflectiveWall);
        let cfg = SolverConfig { order: SpatialOrder::Second, ..SolverConfig::first_order(FluxScheme::hlle()) };
        let t_end = 0.05;
        let run = |steps: usize| {
            let dt = t_end / steps as f64;
            let mut u = f0.clone();
            for _ in 0..steps {
                u = ssprk2_step(&u, dt, |v, _| evaluate(&g, v, &spec, &cfg, GAS, 0.0, 0).map(|r| r.rhs)).unwrap();
            }
            u
        };
        let reference = run(640);
        let err = |u: &Field| u.iter().zip(&reference).map(|(a, b)| (a.rho - b.rho).abs()).fold(0.0, f64::max);
        let (e1, e2, e3) = (err(&run(20)), err(&run(40)), err(&run(80)));
        let (p1, p2) = ((e1 / e2).log2(), (e2 / e3).log2());
        assert!(p1 > 1.7 && p2 > 1.7, "observed orders {p1}, {p2}");
    }

    #[test]
    fn residual_norm_examples() {
        let u: Field = vec![ConservedState::new(1.0, 0.0, 0.0, 2.5); 4];
        assert_eq!(residual_l2(&u, &u, 0.1), 0.0);
        let mut v = u.clone();
        let eps = 1e-3;
        v[2].rho += eps;
        assert!((residual_l2(&u, &v, eps) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn solid_cells_act_as_walls() {
        // a 4x4 box with a solid 2x2 block at one corner: uniform stagnant
        // gas stays at rest
        let g = StructuredGrid::cartesian(4, 4, 1.0, 1.0).unwrap();
        let mask = (0..16).map(|k| k % 4 >= 2 && k / 4 < 2).collect();
        let g = g.with_solid(mask).unwrap();
        let f = uniform(&g, PrimitiveState::new(1.0, 0.0, 0.0, 1.0));
        let spec = BoundarySpec::all(&g, BoundaryKind::ReflectiveWall);
        for order in [SpatialOrder::First, SpatialOrder::Second] {
            let cfg = SolverConfig { order, ..SolverConfig::first_order(FluxScheme::hllem_fp1d()) };
            let r = evaluate(&g, &f, &spec, &cfg, GAS, 0.0, 0).unwrap();
            assert!(r.rhs.iter().all(|c| c.to_array().iter().all(|v| v.abs() < 1e-13)));
        }
    }

    #[test]
    fn non_physical_state_is_located() {
        let g = StructuredGrid::cartesian(3, 2, 1.0, 1.0).unwrap();
        let mut f = uniform(&g, PrimitiveState::new(1.0, 0.0, 0.0, 1.0));
        f[g.cell_index(2, 1)].rho_e = -1.0;
        let spec = BoundarySpec::all(&g, BoundaryKind::ReflectiveWall);
        let r = Simulation::new(g, f, spec, SolverConfig::first_order(FluxScheme::hlle()), GAS);
        assert!(matches!(r, Err(SolverError::NonPhysical { i: 2, j: 1, .. })));
        assert!(SolverConfig::new(FluxScheme::hlle(), SpatialOrder::First, 1.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn interior_telescoping_holds(seed in any::<u64>(), ni in 2usize..9, nj in 2usize..9) {
            let g = skewed(ni, nj);
            let f = random_field(&g, seed);
            let spec = BoundarySpec::all(&g, BoundaryKind::Extrapolate);
            let r = evaluate(&g, &f, &spec, &SolverConfig::first_order(FluxScheme::hllem_lm()), GAS, 0.0, 0).unwrap();
            let total = integrate(&g, &r.rhs);
            let inflow = r.boundary_inflow();
            for c in 0..4 {
                prop_assert!((total[c] - inflow[c]).abs() <= 1e-11 * inflow[c].abs().max(1.0));
            }
        }
    }
}
