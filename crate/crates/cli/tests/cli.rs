use std::path::Path;
use std::process::{Command, Output};

fn hllstab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hllstab"))
        .args(args)
        .current_dir(dir)
        .env("HLLSTAB_OUTPUT_ROOT", dir.join("root"))
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

const SMALL_RUN: &str = "[case]\npreset = forward_step_coarse\n[solver]\nscheme = hllem_fp1d\n\
                         [run]\nmax_iters = 4\n[output]\ndir = step\nformats = csv, vtk\n";

#[test]
fn analyze_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = hllstab(dir.path(), &["analyze", "hlle"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("AsymptoticallyStable"));
    for f in ["eigenvalues.csv", "trace.csv", "sign_map.csv", "report.json", "manifest.json"] {
        assert!(dir.path().join("root/analyze_hlle").join(f).is_file(), "{f}");
    }

    let out = hllstab(dir.path(), &["analyze", "roe_hllem_hllc", "--out", "roe"]);
    assert!(out.status.success());
    assert!(text(&out.stdout).contains("Inconclusive"));
    let map = std::fs::read_to_string(dir.path().join("root/roe/sign_map.csv")).unwrap();
    assert!(map.lines().skip(1).any(|l| l.ends_with(",1")));

    let out = hllstab(dir.path(), &["analyze", "hllem_fp1d", "--rho-hat=-1e-2", "--p-hat", "1e-3", "--steps", "5"]);
    assert!(out.status.success());
    let trace = std::fs::read_to_string(dir.path().join("root/analyze_hllem_fp1d/trace.csv")).unwrap();
    let first: Vec<&str> = trace.lines().nth(1).unwrap().split(',').collect();
    assert!(first[11].parse::<f64>().unwrap() < 0.0);
}

#[test]
fn analyze_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hllstab(dir.path(), &["analyze", "muscl"]).status.code(), Some(2));
    assert_eq!(hllstab(dir.path(), &["analyze", "hlle", "--nu", "1.5"]).status.code(), Some(2));
}

#[test]
fn run_writes_manifested_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("step.cfg"), SMALL_RUN).unwrap();
    let out = hllstab(dir.path(), &["run", "step.cfg"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let root = dir.path().join("root/step");
    for f in ["final.csv", "final.vtk", "final.json", "residuals.csv", "metrics.csv", "manifest.json"] {
        assert!(root.join(f).is_file(), "{f}");
    }
    let manifest = std::fs::read_to_string(root.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"final.csv\"") && manifest.contains("sha256"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.cfg"), "[case]\npreset = blunt_body\n[solver]\nscheme = hllem\ncfl = 1.5\n").unwrap();
    let out = hllstab(dir.path(), &["run", "a.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 5"));

    std::fs::write(dir.path().join("b.cfg"), "[case]\npreset = blunt_body\n[solver]\nsheme = hllem\n").unwrap();
    let out = hllstab(dir.path(), &["run", "b.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("sheme"));

    assert_eq!(hllstab(dir.path(), &["run", "missing.cfg"]).status.code(), Some(2));
}

#[test]
fn sweep_tabulates_schemes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("step.cfg"), SMALL_RUN).unwrap();
    let out = hllstab(dir.path(), &["sweep", "step.cfg", "--schemes", "hlle,hllem", "--out", "cmp"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("root/cmp/sweep_metrics.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("hlle,")));
    assert!(table.lines().any(|l| l.starts_with("hllem,")));
    let out = hllstab(dir.path(), &["sweep", "step.cfg", "--schemes", "hlle,roe"]);
    assert_eq!(out.status.code(), Some(2));
}
