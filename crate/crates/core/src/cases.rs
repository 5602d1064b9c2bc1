//! Benchmark problem builders, the normal-shock relations and the
//! instability metrics used to compare schemes.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::euler::{conserved_from_primitive, primitive_from_conserved, ConservedState, GasModel, PrimitiveState};
use crate::fv2d::{
    BoundaryKind, BoundarySpec, Field, GridError, MovingShock, Segment, SolverConfig, StructuredGrid, TimeStepping,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("shock Mach number {0} must exceed 1")]
    SubsonicShock(f64),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Pre- and post-shock states of a normal shock moving in `+x` into `pre`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockJump {
    pub mach: f64,
    pub pre: PrimitiveState,
    pub post: PrimitiveState,
    /// Lab-frame shock speed.
    pub speed: f64,
}

pub fn normal_shock_state(pre: PrimitiveState, mach: f64, gas: GasModel) -> Result<ShockJump, CaseError> {
    if !(mach > 1.0) || !mach.is_finite() {
        return Err(CaseError::SubsonicShock(mach));
    }
    let g = gas.gamma;
    let m2 = mach * mach;
    let rho_ratio = (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0);
    let p_ratio = (2.0 * g * m2 - (g - 1.0)) / (g + 1.0);
    let speed = pre.u + mach * pre.sound_speed(gas);
    // shock-frame velocity drops by the density ratio
    let u2 = speed - (speed - pre.u) / rho_ratio;
    let post = PrimitiveState::new(pre.rho * rho_ratio, u2, pre.v, pre.p * p_ratio);
    Ok(ShockJump { mach, pre, post, speed })
}

impl ShockJump {
    /// Relative mass, momentum and energy jump residuals in the shock frame.
    pub fn residuals(&self, gas: GasModel) -> [f64; 3] {
        let (a, b) = (self.pre, self.post);
        let (v1, v2) = (a.u - self.speed, b.u - self.speed);
        let h = |w: PrimitiveState| gas.gamma / (gas.gamma - 1.0) * w.p / w.rho;
        let mass = (a.rho * v1 - b.rho * v2) / (a.rho * v1).abs();
        let mom1 = a.rho * v1 * v1 + a.p;
        let mom = (mom1 - (b.rho * v2 * v2 + b.p)) / mom1;
        let en1 = h(a) + 0.5 * v1 * v1;
        let en = (en1 - (h(b) + 0.5 * v2 * v2)) / en1;
        [mass, mom, en]
    }

    /// The same jump for a shock travelling along the unit vector `(nx, ny)`.
    pub fn oriented(&self, nx: f64, ny: f64) -> Self {
        let rot = |w: PrimitiveState| PrimitiveState::new(w.rho, nx * w.u - ny * w.v, ny * w.u + nx * w.v, w.p);
        Self { mach: self.mach, pre: rot(self.pre), post: rot(self.post), speed: self.speed }
    }
}

/// Contour levels a figure of the case is drawn with.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    pub variable: String,
    pub min: f64,
    pub max: f64,
    pub levels: usize,
}

impl ContourSpec {
    pub fn density(min: f64, max: f64, levels: usize) -> Self {
        Self { variable: "rho".into(), min, max, levels }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    PlanarShock,
    DoubleMach,
    ForwardStep,
    BluntBody,
    SupersonicCorner,
}

impl CaseKind {
    pub const ALL: [CaseKind; 5] =
        [Self::PlanarShock, Self::DoubleMach, Self::ForwardStep, Self::BluntBody, Self::SupersonicCorner];

    pub fn name(self) -> &'static str {
        match self {
            Self::PlanarShock => "planar_shock",
            Self::DoubleMach => "double_mach",
            Self::ForwardStep => "forward_step",
            Self::BluntBody => "blunt_body",
            Self::SupersonicCorner => "supersonic_corner",
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = CaseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CaseError::UnknownCase(s.to_string()))
    }
}

/// When a run stops: at `time`, after `iterations`, whichever comes first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndCondition {
    pub time: Option<f64>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseDefinition {
    pub name: String,
    pub kind: CaseKind,
    pub grid: StructuredGrid,
    pub initial: Field,
    pub boundaries: BoundarySpec,
    pub end: EndCondition,
    pub contour: ContourSpec,
    /// Courant number the case is run with unless overridden.
    pub cfl: f64,
    pub stepping: TimeStepping,
}

impl CaseDefinition {
    pub fn solver_config(&self, base: SolverConfig) -> SolverConfig {
        SolverConfig { cfl: self.cfl, ..base }
    }
}

/// Pre-shock gas shared by every case: `rho = 1.4`, `p = 1`, at rest (a = 1).
pub const QUIESCENT: PrimitiveState = PrimitiveState::new(1.4, 0.0, 0.0, 1.0);

fn fill(grid: &StructuredGrid, gas: GasModel, f: impl Fn(f64, f64) -> PrimitiveState) -> Field {
    (0..grid.n_cells())
        .map(|k| {
            let (x, y) = grid.center(k % grid.ni(), k / grid.ni());
            conserved_from_primitive(f(x, y), gas)
        })
        .collect()
}

fn seg(start: usize, end: usize, kind: BoundaryKind) -> Segment {
    Segment { start, end, kind }
}

/// Mach-6 shock running down a channel of unit cells whose middle grid line
/// zig-zags by `1e-3`.
pub fn build_planar_shock_sized(ni: usize, nj: usize, t_end: f64) -> Result<CaseDefinition, CaseError> {
    let gas = GasModel::AIR;
    let jump = normal_shock_state(QUIESCENT, 6.0, gas)?;
    let mid = nj / 2;
    let grid = StructuredGrid::from_fn(ni, nj, |i, j| {
        let y = j as f64;
        let y = if j == mid {
            if i % 2 == 0 { y + 1e-3 } else { y - 1e-3 }
        } else {
            y
        };
        (i as f64, y)
    })?;
    let x0 = 5.0;
    let initial = fill(&grid, gas, |x, _| if x < x0 { jump.post } else { jump.pre });
    let boundaries = BoundarySpec::uniform(
        &grid,
        BoundaryKind::SupersonicInflow(jump.post),
        BoundaryKind::ZeroGradientOutflow,
        BoundaryKind::ReflectiveWall,
        BoundaryKind::ReflectiveWall,
    );
    Ok(CaseDefinition {
        name: CaseKind::PlanarShock.name().into(),
        kind: CaseKind::PlanarShock,
        grid,
        initial,
        boundaries,
        end: EndCondition { time: Some(t_end), iterations: None },
        contour: ContourSpec::density(1.6, 7.0, 30),
        cfl: SolverConfig::DEFAULT_CFL,
        stepping: TimeStepping::Global,
    })
}

pub fn build_planar_shock() -> Result<CaseDefinition, CaseError> {
    build_planar_shock_sized(800, 20, 55.0)
}

/// Mach-10 shock inclined at 60 degrees to a wall on `[0, 4] x [0, 1]`.
pub fn build_double_mach_sized(ni: usize, nj: usize, t_end: f64) -> Result<CaseDefinition, CaseError> {
    let gas = GasModel::AIR;
    let x0 = 1.0 / 6.0;
    let s3 = 3f64.sqrt();
    let jump = normal_shock_state(QUIESCENT, 10.0, gas)?.oriented(0.5 * s3, -0.5);
    let grid = StructuredGrid::cartesian(ni, nj, 4.0, 1.0)?;
    let initial = fill(&grid, gas, |x, y| if x < x0 + y / s3 { jump.post } else { jump.pre });

    let n_post = (0..ni).filter(|&i| grid.jface_center(i, 0).0 < x0).count();
    let mut south = Vec::new();
    if n_post > 0 {
        south.push(seg(0, n_post, BoundaryKind::SupersonicInflow(jump.post)));
    }
    if n_post < ni {
        south.push(seg(n_post, ni, BoundaryKind::ReflectiveWall));
    }
    // the shock foot moves along y = 1 at speed / sin(60)
    let top = MovingShock { x0: x0 + 1.0 / s3, speed: 20.0 / s3, pre: jump.pre, post: jump.post };
    let boundaries = BoundarySpec {
        west: vec![seg(0, nj, BoundaryKind::SupersonicInflow(jump.post))],
        east: vec![seg(0, nj, BoundaryKind::ZeroGradientOutflow)],
        south,
        north: vec![seg(0, ni, BoundaryKind::MovingShockTop(top))],
    };
    Ok(CaseDefinition {
        name: CaseKind::DoubleMach.name().into(),
        kind: CaseKind::DoubleMach,
        grid,
        initial,
        boundaries,
        end: EndCondition { time: Some(t_end), iterations: None },
        contour: ContourSpec::density(2.0, 21.5, 30),
        cfl: SolverConfig::DEFAULT_CFL,
        stepping: TimeStepping::Global,
    })
}

pub fn build_double_mach() -> Result<CaseDefinition, CaseError> {
    build_double_mach_sized(480, 120, 0.2)
}

/// Mach-3 channel flow over a step of height 0.2 starting at `x = 0.6`.
pub fn build_forward_step_sized(ni: usize, nj: usize) -> Result<CaseDefinition, CaseError> {
    let gas = GasModel::AIR;
    let grid = StructuredGrid::cartesian(ni, nj, 3.0, 1.0)?;
    let mask = (0..ni * nj)
        .map(|k| {
            let (x, y) = grid.center(k % ni, k / ni);
            x > 0.6 && y < 0.2
        })
        .collect();
    let grid = grid.with_solid(mask)?;
    let inflow = PrimitiveState::new(1.4, 3.0, 0.0, 1.0);
    let initial = fill(&grid, gas, |_, _| inflow);
    let boundaries = BoundarySpec::uniform(
        &grid,
        BoundaryKind::SupersonicInflow(inflow),
        BoundaryKind::ZeroGradientOutflow,
        BoundaryKind::ReflectiveWall,
        BoundaryKind::ReflectiveWall,
    );
    Ok(CaseDefinition {
        name: CaseKind::ForwardStep.name().into(),
        kind: CaseKind::ForwardStep,
        grid,
        initial,
        boundaries,
        end: EndCondition { time: Some(4.0), iterations: None },
        contour: ContourSpec::density(0.2, 7.0, 45),
        cfl: SolverConfig::DEFAULT_CFL,
        stepping: TimeStepping::Global,
    })
}

pub fn build_forward_step() -> Result<CaseDefinition, CaseError> {
    build_forward_step_sized(480, 160)
}

/// Radius of grid line `i` of `ni`: 1 at the body, 3 at the outer
/// boundary, spacing growing linearly outward.
pub fn blunt_body_radius(i: usize, ni: usize) -> f64 {
    let s = i as f64 / ni as f64;
    1.0 + 2.0 * s * (1.0 + s) / 2.0
}

/// Mach-20 flow past the front half of a unit cylinder. `i` runs outward
/// from the body, `j` counter-clockwise from the top (`theta = pi/2`) to the
/// bottom (`theta = 3 pi/2`).
pub fn build_blunt_body_sized(ni: usize, nj: usize, iterations: usize) -> Result<CaseDefinition, CaseError> {
    let gas = GasModel::AIR;
    let grid = StructuredGrid::from_fn(ni, nj, |i, j| {
        let r = blunt_body_radius(i, ni);
        let theta = 0.5 * PI + PI * j as f64 / nj as f64;
        (r * theta.cos(), r * theta.sin())
    })?;
    let free = PrimitiveState::new(1.4, 20.0, 0.0, 1.0);
    let initial = fill(&grid, gas, |_, _| free);
    let boundaries = BoundarySpec::uniform(
        &grid,
        BoundaryKind::ReflectiveWall,
        BoundaryKind::SupersonicInflow(free),
        BoundaryKind::Extrapolate,
        BoundaryKind::Extrapolate,
    );
    Ok(CaseDefinition {
        name: CaseKind::BluntBody.name().into(),
        kind: CaseKind::BluntBody,
        grid,
        initial,
        boundaries,
        end: EndCondition { time: None, iterations: Some(iterations) },
        contour: ContourSpec::density(2.0, 8.7, 27),
        cfl: SolverConfig::DEFAULT_CFL,
        stepping: TimeStepping::Global,
    })
}

pub fn build_blunt_body() -> Result<CaseDefinition, CaseError> {
    build_blunt_body_sized(40, 320, 100_000)
}

/// Mach-5.09 shock diffracting around a 90-degree corner at `(0.05, 0.45)`.
pub fn build_supersonic_corner_sized(n: usize) -> Result<CaseDefinition, CaseError> {
    let gas = GasModel::AIR;
    let (xc, yc) = (0.05, 0.45);
    let jump = normal_shock_state(QUIESCENT, 5.09, gas)?;
    let grid = StructuredGrid::cartesian(n, n, 1.0, 1.0)?;
    let mask = (0..n * n)
        .map(|k| {
            let (x, y) = grid.center(k % n, k / n);
            x < xc && y < yc
        })
        .collect();
    let grid = grid.with_solid(mask)?;
    let initial = fill(&grid, gas, |x, _| if x < xc { jump.post } else { jump.pre });
    // faces of the west and south edges that touch the blanked block carry
    // no flux, so one condition per edge suffices
    let boundaries = BoundarySpec::uniform(
        &grid,
        BoundaryKind::SupersonicInflow(jump.post),
        BoundaryKind::ZeroGradientOutflow,
        BoundaryKind::Extrapolate,
        BoundaryKind::ZeroGradientOutflow,
    );
    Ok(CaseDefinition {
        name: CaseKind::SupersonicCorner.name().into(),
        kind: CaseKind::SupersonicCorner,
        grid,
        initial,
        boundaries,
        end: EndCondition { time: Some(0.1561), iterations: None },
        contour: ContourSpec::density(0.0, 7.1, 30),
        cfl: default_cfl(CaseKind::SupersonicCorner),
        stepping: TimeStepping::Global,
    })
}

pub fn build_supersonic_corner() -> Result<CaseDefinition, CaseError> {
    build_supersonic_corner_sized(400)
}

/// Named presets, including reduced-size variants for desk runs.
pub const PRESETS: [&str; 10] = [
    "planar_shock",
    "planar_shock_desk",
    "double_mach",
    "double_mach_caption_time",
    "forward_step",
    "forward_step_coarse",
    "blunt_body",
    "blunt_body_desk",
    "supersonic_corner",
    "supersonic_corner_coarse",
];

pub fn preset(name: &str) -> Result<CaseDefinition, CaseError> {
    let mut case = match name {
        "planar_shock" => build_planar_shock(),
        "planar_shock_desk" => build_planar_shock_sized(400, 20, 27.5),
        "double_mach" => build_double_mach(),
        "double_mach_caption_time" => build_double_mach_sized(480, 120, 0.020026),
        "forward_step" => build_forward_step(),
        "forward_step_coarse" => build_forward_step_sized(120, 40),
        "blunt_body" => build_blunt_body(),
        "blunt_body_desk" => build_blunt_body_sized(20, 160, 20_000),
        "supersonic_corner" => build_supersonic_corner(),
        "supersonic_corner_coarse" => build_supersonic_corner_sized(100),
        _ => Err(CaseError::UnknownCase(name.to_string())),
    }?;
    case.name = name.to_string();
    Ok(case)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: &'static str,
    pub value: f64,
}

/// Columns sampled behind a shock front.
pub const FRONT_BAND: usize = 10;

fn cell_prims(grid: &StructuredGrid, field: &[ConservedState], gas: GasModel) -> Vec<Option<PrimitiveState>> {
    field
        .iter()
        .enumerate()
        .map(|(k, u)| {
            if grid.solid_mask()[k] {
                None
            } else {
                primitive_from_conserved(*u, gas).ok()
            }
        })
        .collect()
}

/// Odd-even decoupling measures over the columns behind a planar shock.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OddEven {
    /// Largest per-column sum of the alternating row component
    /// `|mean(rho even rows) - mean(rho odd rows)| / 2` and `max |v|`.
    pub amplitude: f64,
    /// Largest alternating row component alone.
    pub alternating: f64,
    /// Largest `|v|` alone.
    pub transverse_velocity: f64,
}

/// Samples the `FRONT_BAND` columns behind the front, located as the
/// steepest jump of the row-averaged density.
pub fn odd_even_amplitude(grid: &StructuredGrid, field: &[ConservedState]) -> OddEven {
    let (ni, nj) = (grid.ni(), grid.nj());
    let gas = GasModel::AIR;
    let rho = |i: usize, j: usize| field[grid.cell_index(i, j)].rho;
    let mean: Vec<f64> = (0..ni).map(|i| (0..nj).map(|j| rho(i, j)).sum::<f64>() / nj as f64).collect();
    let front = (0..ni.saturating_sub(1))
        .max_by(|&a, &b| {
            let (da, db) = ((mean[a + 1] - mean[a]).abs(), (mean[b + 1] - mean[b]).abs());
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(b.cmp(&a))
        })
        .unwrap_or(0);
    let mut out = OddEven::default();
    for i in front.saturating_sub(FRONT_BAND)..front {
        let (mut se, mut ne, mut so, mut no) = (0.0, 0, 0.0, 0);
        let mut vmax = 0.0f64;
        for j in 0..nj {
            if j % 2 == 0 {
                se += rho(i, j);
                ne += 1;
            } else {
                so += rho(i, j);
                no += 1;
            }
            if let Ok(w) = primitive_from_conserved(field[grid.cell_index(i, j)], gas) {
                vmax = vmax.max(w.v.abs());
            }
        }
        let alt = if ne > 0 && no > 0 { 0.5 * (se / ne as f64 - so / no as f64).abs() } else { 0.0 };
        out.amplitude = out.amplitude.max(alt + vmax);
        out.alternating = out.alternating.max(alt);
        out.transverse_velocity = out.transverse_velocity.max(vmax);
    }
    out
}

/// Largest relative density difference between cells mirrored across the
/// stagnation line, scaled by the mean density of the two body cells on it.
pub fn symmetry_deviation(grid: &StructuredGrid, field: &[ConservedState]) -> f64 {
    let (ni, nj) = (grid.ni(), grid.nj());
    let rho = |i: usize, j: usize| field[grid.cell_index(i, j)].rho;
    let stag = if nj % 2 == 0 {
        0.5 * (rho(0, nj / 2 - 1) + rho(0, nj / 2))
    } else {
        rho(0, nj / 2)
    };
    let mut dev = 0.0f64;
    for j in 0..nj / 2 {
        for i in 0..ni {
            dev = dev.max((rho(i, j) - rho(i, nj - 1 - j)).abs());
        }
    }
    dev / stag
}

/// Largest velocity component along the leading shock's tangent, sampled in
/// the middle tenth of the rows within the band behind each row's front.
pub fn shock_band_tangential_velocity(
    grid: &StructuredGrid,
    field: &[ConservedState],
    tangent: (f64, f64),
) -> f64 {
    let (ni, nj) = (grid.ni(), grid.nj());
    let prims = cell_prims(grid, field, GasModel::AIR);
    let lo = (nj * 45) / 100;
    let hi = ((nj * 55) / 100).max(lo + 1).min(nj);
    let mut vmax = 0.0f64;
    for j in lo..hi {
        // rightmost steepest jump between neighbouring fluid cells
        let mut best = (0.0, None);
        for i in 0..ni.saturating_sub(1) {
            if let (Some(a), Some(b)) = (prims[grid.cell_index(i, j)], prims[grid.cell_index(i + 1, j)]) {
                let d = (b.rho - a.rho).abs();
                if d >= best.0 && d > 0.0 {
                    best = (d, Some(i));
                }
            }
        }
        let Some(front) = best.1 else { continue };
        for i in front.saturating_sub(FRONT_BAND - 1)..=front {
            if let Some(w) = prims[grid.cell_index(i, j)] {
                vmax = vmax.max((w.u * tangent.0 + w.v * tangent.1).abs());
            }
        }
    }
    vmax
}

/// Instability metrics of a field for the given case family.
pub fn instability_metrics(case: &str, grid: &StructuredGrid, field: &[ConservedState]) -> Result<Vec<Metric>, CaseError> {
    let kind = match case.parse::<CaseKind>() {
        Ok(k) => k,
        Err(_) => preset_kind(case)?,
    };
    Ok(match kind {
        CaseKind::PlanarShock => {
            let m = odd_even_amplitude(grid, field);
            vec![
                Metric { name: "odd_even_amplitude", value: m.amplitude },
                Metric { name: "alternating_density", value: m.alternating },
                Metric { name: "max_transverse_velocity", value: m.transverse_velocity },
            ]
        }
        CaseKind::BluntBody => vec![Metric { name: "symmetry_deviation", value: symmetry_deviation(grid, field) }],
        CaseKind::DoubleMach => {
            // tangent of the incident shock, whose normal is (cos 30, -sin 30)
            let t = (0.5, 0.5 * 3f64.sqrt());
            vec![Metric { name: "shock_band_max_v", value: shock_band_tangential_velocity(grid, field, t) }]
        }
        CaseKind::ForwardStep | CaseKind::SupersonicCorner => {
            vec![Metric { name: "shock_band_max_v", value: shock_band_tangential_velocity(grid, field, (0.0, 1.0)) }]
        }
    })
}

/// Family a preset belongs to.
pub fn preset_kind(name: &str) -> Result<CaseKind, CaseError> {
    if !PRESETS.contains(&name) {
        return Err(CaseError::UnknownCase(name.to_string()));
    }
    Ok(CaseKind::ALL
        .into_iter()
        .find(|k| name.starts_with(k.name()))
        .expect("every preset name starts with its family"))
}

/// Courant number a case family runs with by default.
pub fn default_cfl(kind: CaseKind) -> f64 {
    match kind {
        CaseKind::SupersonicCorner => 0.8,
        _ => SolverConfig::DEFAULT_CFL,
    }
}
