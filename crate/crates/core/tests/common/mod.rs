//! Helpers shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

pub mod exact;

use hllstab::cases::{preset, CaseDefinition};
use hllstab::euler::{conserved_from_primitive, primitive_from_conserved, GasModel, PrimitiveState};
use hllstab::fv2d::{BoundaryKind, BoundarySpec, Field, Simulation, SolverConfig, SolverError, StructuredGrid};
use hllstab::riemann::FluxScheme;

pub const GAS: GasModel = GasModel::AIR;

/// Left and right states of the Sod shock tube.
pub const SOD: (PrimitiveState, PrimitiveState) =
    (PrimitiveState::new(1.0, 0.0, 0.0, 1.0), PrimitiveState::new(0.125, 0.0, 0.0, 0.1));

pub struct SodResult {
    /// Against cell averages of the exact solution.
    pub l1_density: f64,
    /// Against the exact solution sampled at cell centres.
    pub l1_point: f64,
    pub min_rho: f64,
    pub min_p: f64,
    pub steps: usize,
}

/// First-order Sod tube on `n` cells over `[0, 1]` (one row of tall cells so
/// the transverse direction barely limits the step), integrated to `t_end`.
pub fn run_sod(scheme: FluxScheme, n: usize, t_end: f64) -> Result<SodResult, SolverError> {
    let g = StructuredGrid::cartesian(n, 1, 1.0, 1.0).expect("valid grid");
    let field: Field = (0..n)
        .map(|i| {
            let w = if (i as f64 + 0.5) / (n as f64) < 0.5 { SOD.0 } else { SOD.1 };
            conserved_from_primitive(w, GAS)
        })
        .collect();
    let spec = BoundarySpec::uniform(
        &g,
        BoundaryKind::ZeroGradientOutflow,
        BoundaryKind::ZeroGradientOutflow,
        BoundaryKind::ReflectiveWall,
        BoundaryKind::ReflectiveWall,
    );
    let mut sim = Simulation::new(g, field, spec, SolverConfig::first_order(scheme), GAS)?;
    let (mut min_rho, mut min_p) = (f64::INFINITY, f64::INFINITY);
    sim.run(Some(t_end), None, |s, _| {
        for u in s.field() {
            let w = primitive_from_conserved(*u, GAS).unwrap_or(PrimitiveState::new(-1.0, 0.0, 0.0, -1.0));
            min_rho = min_rho.min(w.rho);
            min_p = min_p.min(w.p);
        }
    })?;
    let exact = exact::ExactRiemann::new(SOD.0, SOD.1, GAS.gamma);
    let dx = 1.0 / n as f64;
    let rho_at = |x: f64| exact.sample((x - 0.5) / t_end).rho;
    let sub = 256;
    let (mut l1, mut l1_point) = (0.0, 0.0);
    for i in 0..n {
        let x0 = i as f64 * dx;
        let avg = (0..sub).map(|k| rho_at(x0 + (k as f64 + 0.5) * dx / sub as f64)).sum::<f64>() / sub as f64;
        l1 += (sim.field()[i].rho - avg).abs() * dx;
        l1_point += (sim.field()[i].rho - rho_at(x0 + 0.5 * dx)).abs() * dx;
    }
    Ok(SodResult { l1_density: l1, l1_point, min_rho, min_p, steps: sim.iteration() })
}

/// Runs a preset to its own end condition with `scheme`, first order.
pub fn run_preset(name: &str, scheme: FluxScheme) -> (CaseDefinition, Simulation) {
    let case = preset(name).expect("preset exists");
    let cfg = case.solver_config(SolverConfig::first_order(scheme));
    let mut sim = Simulation::new(case.grid.clone(), case.initial.clone(), case.boundaries.clone(), cfg, GAS)
        .expect("valid case")
        .with_stepping(case.stepping);
    sim.run(case.end.time, case.end.iterations, |_, _| {}).expect("run stays physical");
    (case, sim)
}

/// Every file below `dir`, sorted, as paths relative to `dir`.
pub fn list_files(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).expect("below dir").to_path_buf());
            }
        }
    }
    out.sort();
    out
}
