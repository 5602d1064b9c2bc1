mod common;

use common::list_files;
use hllstab::euler::{primitive_from_conserved, GasModel};
use hllstab::io::{parse_config, read_field_csv, run_in, sha256_hex, OutputFormat, RunConfig, RunStatus, MANIFEST_NAME};
use hllstab::riemann::{FluxScheme, SchemeKind};
use std::fs;

fn short_config(preset: &str, scheme: SchemeKind) -> RunConfig {
    let mut cfg = RunConfig::new(preset, FluxScheme::of(scheme)).unwrap();
    cfg.end_time = None;
    cfg.max_iters = Some(4);
    cfg.formats = vec![OutputFormat::Csv, OutputFormat::Vtk];
    cfg
}

#[test]
fn final_csv_reproduces_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config("planar_shock", SchemeKind::Hllem);
    let rep = run_in(&cfg, dir.path()).unwrap();
    assert_eq!(rep.status, RunStatus::Completed);
    assert_eq!(rep.iterations, 4);

    // rerun in memory and compare against the file at full precision
    let case = hllstab::cases::preset("planar_shock").unwrap();
    let solver = hllstab::fv2d::SolverConfig::new(cfg.scheme, cfg.order, cfg.cfl).unwrap();
    let mut sim = hllstab::fv2d::Simulation::new(case.grid, case.initial, case.boundaries, solver, GasModel::AIR).unwrap();
    sim.run(None, Some(4), |_, _| {}).unwrap();
    let recs = read_field_csv(&dir.path().join("final.csv")).unwrap();
    assert_eq!(recs.len(), sim.grid.n_cells());
    for r in &recs {
        let w = primitive_from_conserved(sim.field()[sim.grid.cell_index(r.i, r.j)], GasModel::AIR).unwrap();
        assert_eq!((r.rho, r.u, r.v, r.p), (w.rho, w.u, w.v, w.p));
    }
}

#[test]
fn vtk_densities_match_csv() {
    let dir = tempfile::tempdir().unwrap();
    run_in(&short_config("forward_step", SchemeKind::Hlle), dir.path()).unwrap();
    let csv = read_field_csv(&dir.path().join("final.csv")).unwrap();
    let vtk = fs::read_to_string(dir.path().join("final.vtk")).unwrap();
    let mut lines = vtk.lines().skip_while(|l| !l.starts_with("SCALARS rho"));
    lines.next();
    assert_eq!(lines.next(), Some("LOOKUP_TABLE default"));
    let rho: Vec<f64> = lines.take(csv.len()).map(|l| l.trim().parse().unwrap()).collect();
    assert_eq!(rho.len(), csv.len());
    for (a, r) in rho.iter().zip(&csv) {
        if r.rho.is_nan() {
            assert_eq!(*a, 0.0);
        } else {
            assert_eq!(*a, r.rho);
        }
    }
}

#[test]
fn stored_config_reparses_and_manifest_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_config("double_mach", SchemeKind::HllemFp1d);
    cfg.snapshots = Some(hllstab::io::Cadence::Iterations(2));
    run_in(&cfg, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert_eq!(parse_config(&text).unwrap(), cfg);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap()).unwrap();
    let listed = manifest["artifacts"].as_array().unwrap();
    assert_eq!(listed.len() + 1, list_files(dir.path()).len());
    for a in listed {
        let bytes = fs::read(dir.path().join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["bytes"].as_u64().unwrap(), bytes.len() as u64);
        assert_eq!(a["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
    for k in [0, 2, 4] {
        assert!(dir.path().join(format!("snapshots/it{k:08}.json")).exists());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = short_config("blunt_body_desk", SchemeKind::HllemLm);
    cfg.order = hllstab::fv2d::SpatialOrder::Second;
    run_in(&cfg, a.path()).unwrap();
    run_in(&cfg, b.path()).unwrap();
    let files = list_files(a.path());
    assert_eq!(files, list_files(b.path()));
    for f in files {
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap(), "{}", f.display());
    }
}
