//! Field snapshots, contour sidecars, histories and manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cases::{ContourSpec, Metric};
use crate::euler::{primitive_from_conserved, ConservedState, GasModel, PrimitiveState};
use crate::fv2d::{ResidualHistory, StructuredGrid};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: std::io::Error },
    #[error("{}: line {line}: {reason}", path.display())]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("field has {got} cells, grid has {expected}")]
    FieldSize { expected: usize, got: usize },
}

pub const FIELD_CSV_HEADER: &str = "i,j,x,y,rho,u,v,p,mach";

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::File { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(err)?;
        }
    }
    fs::write(path, bytes).map_err(err)
}

fn cell_primitive(u: &ConservedState, gas: GasModel) -> Option<PrimitiveState> {
    primitive_from_conserved(*u, gas).ok()
}

fn check_size(grid: &StructuredGrid, field: &[ConservedState]) -> Result<(), IoError> {
    if field.len() != grid.n_cells() {
        return Err(IoError::FieldSize { expected: grid.n_cells(), got: field.len() });
    }
    Ok(())
}

/// CSV text of a field, one row per cell with `j` outer and `i` inner.
/// Solid cells are written as `NaN`.
pub fn field_csv(grid: &StructuredGrid, field: &[ConservedState], gas: GasModel) -> Result<String, IoError> {
    check_size(grid, field)?;
    let mut s = String::with_capacity(200 * field.len());
    s.push_str(FIELD_CSV_HEADER);
    s.push('\n');
    for j in 0..grid.nj() {
        for i in 0..grid.ni() {
            let (x, y) = grid.center(i, j);
            let w = if grid.is_solid(i, j) { None } else { cell_primitive(&field[grid.cell_index(i, j)], gas) };
            let (rho, u, v, p, m) = match w {
                Some(w) => (w.rho, w.u, w.v, w.p, w.mach(gas)),
                None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            };
            let _ = writeln!(
                s,
                "{i},{j},{},{},{},{},{},{},{}",
                fmt17(x),
                fmt17(y),
                fmt17(rho),
                fmt17(u),
                fmt17(v),
                fmt17(p),
                fmt17(m)
            );
        }
    }
    Ok(s)
}

pub fn write_field_csv(grid: &StructuredGrid, field: &[ConservedState], gas: GasModel, path: &Path) -> Result<(), IoError> {
    write_file(path, field_csv(grid, field, gas)?.as_bytes())
}

/// One row of a field CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRecord {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub mach: f64,
}

pub fn parse_field_csv(text: &str, path: &Path) -> Result<Vec<FieldRecord>, IoError> {
    let bad = |line: usize, reason: String| IoError::Parse { path: path.to_path_buf(), line, reason };
    let mut lines = text.lines();
    match lines.next() {
        Some(FIELD_CSV_HEADER) => {}
        other => return Err(bad(1, format!("expected header `{FIELD_CSV_HEADER}`, found {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(k, l)| {
            let line = k + 2;
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 9 {
                return Err(bad(line, format!("expected 9 columns, found {}", cols.len())));
            }
            let idx = |c: &str| c.parse::<usize>().map_err(|e| bad(line, e.to_string()));
            let num = |c: &str| c.parse::<f64>().map_err(|e| bad(line, e.to_string()));
            Ok(FieldRecord {
                i: idx(cols[0])?,
                j: idx(cols[1])?,
                x: num(cols[2])?,
                y: num(cols[3])?,
                rho: num(cols[4])?,
                u: num(cols[5])?,
                v: num(cols[6])?,
                p: num(cols[7])?,
                mach: num(cols[8])?,
            })
        })
        .collect()
}

pub fn read_field_csv(path: &Path) -> Result<Vec<FieldRecord>, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    parse_field_csv(&text, path)
}

/// Legacy-format VTK structured grid with cell data `rho`, `p`, `mach`,
/// `solid` and the vector `velocity`. Solid cells carry zeros.
pub fn field_vtk(
    grid: &StructuredGrid,
    field: &[ConservedState],
    gas: GasModel,
    title: &str,
) -> Result<String, IoError> {
    check_size(grid, field)?;
    let (ni, nj) = (grid.ni(), grid.nj());
    let nv = (ni + 1) * (nj + 1);
    let mut s = String::with_capacity(120 * nv + 150 * field.len());
    s.push_str("# vtk DataFile Version 3.0\n");
    // the title line must be a single line of at most 255 characters
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(s, "{title}\nASCII\nDATASET STRUCTURED_GRID");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", ni + 1, nj + 1);
    let _ = writeln!(s, "POINTS {nv} double");
    for j in 0..=nj {
        for i in 0..=ni {
            let (x, y) = grid.vertex(i, j);
            let _ = writeln!(s, "{} {} 0", fmt17(x), fmt17(y));
        }
    }
    let prims: Vec<PrimitiveState> = field
        .iter()
        .enumerate()
        .map(|(k, u)| {
            if grid.solid_mask()[k] {
                PrimitiveState::new(0.0, 0.0, 0.0, 0.0)
            } else {
                cell_primitive(u, gas).unwrap_or(PrimitiveState::new(f64::NAN, f64::NAN, f64::NAN, f64::NAN))
            }
        })
        .collect();
    let _ = writeln!(s, "CELL_DATA {}", field.len());
    let scalar = |s: &mut String, name: &str, f: &dyn Fn(usize, &PrimitiveState) -> f64| {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for (k, w) in prims.iter().enumerate() {
            let _ = writeln!(s, "{}", fmt17(f(k, w)));
        }
    };
    scalar(&mut s, "rho", &|_, w| w.rho);
    scalar(&mut s, "p", &|_, w| w.p);
    scalar(&mut s, "mach", &|k, w| if grid.solid_mask()[k] { 0.0 } else { w.mach(gas) });
    scalar(&mut s, "solid", &|k, _| if grid.solid_mask()[k] { 1.0 } else { 0.0 });
    let _ = writeln!(s, "VECTORS velocity double");
    for w in &prims {
        let _ = writeln!(s, "{} {} 0", fmt17(w.u), fmt17(w.v));
    }
    Ok(s)
}

pub fn write_field_vtk(
    grid: &StructuredGrid,
    field: &[ConservedState],
    gas: GasModel,
    title: &str,
    path: &Path,
) -> Result<(), IoError> {
    write_file(path, field_vtk(grid, field, gas, title)?.as_bytes())
}

/// Metadata written next to every field snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSidecar {
    pub field: String,
    pub case: String,
    pub scheme: String,
    pub order: u32,
    pub iteration: usize,
    pub time: f64,
    pub variable: String,
    pub min: f64,
    pub max: f64,
    pub levels: usize,
    pub ni: usize,
    pub nj: usize,
}

impl ContourSidecar {
    pub fn contour(&self) -> ContourSpec {
        ContourSpec { variable: self.variable.clone(), min: self.min, max: self.max, levels: self.levels }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sidecar serialises");
        s.push('\n');
        s
    }
}

pub const RESIDUAL_CSV_HEADER: &str = "iteration,time,residual";

pub fn residuals_csv(history: &ResidualHistory) -> String {
    let mut s = String::from(RESIDUAL_CSV_HEADER);
    s.push('\n');
    for (it, t, r) in &history.entries {
        let _ = writeln!(s, "{it},{},{}", fmt17(*t), fmt17(*r));
    }
    s
}

pub const METRICS_CSV_HEADER: &str = "case,iteration,time,metric,value";

/// Metric values recorded at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub case: String,
    pub iteration: usize,
    pub time: f64,
    pub metrics: Vec<Metric>,
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from(METRICS_CSV_HEADER);
    s.push('\n');
    for row in rows {
        for m in &row.metrics {
            let _ = writeln!(s, "{},{},{},{},{}", row.case, row.iteration, fmt17(row.time), m.name, fmt17(m.value));
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the directory holding the manifest, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    /// Hashes the given files, sorted by relative path.
    pub fn build(root: &Path, files: &[PathBuf]) -> Result<Self, IoError> {
        let mut artifacts = files
            .iter()
            .map(|f| {
                let bytes = fs::read(f).map_err(|source| IoError::File { path: f.clone(), source })?;
                let rel = f.strip_prefix(root).unwrap_or(f);
                let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                Ok(ManifestEntry { path, bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        artifacts.dedup_by(|a, b| a.path == b.path);
        Ok(Self { artifacts })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    /// Writes `manifest.json` into `root` and returns its path.
    pub fn write(&self, root: &Path) -> Result<PathBuf, IoError> {
        let path = root.join(MANIFEST_NAME);
        write_file(&path, self.to_json().as_bytes())?;
        Ok(path)
    }

    /// Re-hashes every listed file; returns the paths whose content differs.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>, IoError> {
        let mut bad = Vec::new();
        for a in &self.artifacts {
            let p = root.join(&a.path);
            let bytes = fs::read(&p).map_err(|source| IoError::File { path: p.clone(), source })?;
            if sha256_hex(&bytes) != a.sha256 {
                bad.push(a.path.clone());
            }
        }
        Ok(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::conserved_from_primitive;
    use rand::{Rng, SeedableRng};

    const GAS: GasModel = GasModel::AIR;

    fn random_field(grid: &StructuredGrid, seed: u64) -> Vec<ConservedState> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..grid.n_cells())
            .map(|_| {
                let w = PrimitiveState::new(
                    rng.gen_range(0.1..10.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(0.1..100.0),
                );
                conserved_from_primitive(w, GAS)
            })
            .collect()
    }

    #[test]
    fn one_cell_csv_has_two_lines() {
        let g = StructuredGrid::cartesian(1, 1, 1.0, 1.0).unwrap();
        let s = field_csv(&g, &random_field(&g, 1), GAS).unwrap();
        assert_eq!(s.lines().count(), 2);
        assert_eq!(s.lines().next(), Some(FIELD_CSV_HEADER));
    }

    #[test]
    fn csv_round_trips_exactly() {
        let g = StructuredGrid::from_fn(5, 3, |i, j| (i as f64 * 0.7 + 0.01 * j as f64, j as f64 / 3.0)).unwrap();
        let field = random_field(&g, 2);
        let text = field_csv(&g, &field, GAS).unwrap();
        assert_eq!(text.lines().count(), g.n_cells() + 1);
        let recs = parse_field_csv(&text, Path::new("mem")).unwrap();
        for (k, r) in recs.iter().enumerate() {
            assert_eq!((r.i, r.j), (k % 5, k / 5));
            let w = primitive_from_conserved(field[k], GAS).unwrap();
            assert_eq!((r.rho, r.u, r.v, r.p, r.mach), (w.rho, w.u, w.v, w.p, w.mach(GAS)));
            assert_eq!((r.x, r.y), g.center(r.i, r.j));
        }
    }

    #[test]
    fn solid_cells_are_nan() {
        let g = StructuredGrid::cartesian(2, 1, 2.0, 1.0).unwrap().with_solid(vec![false, true]).unwrap();
        let recs = parse_field_csv(&field_csv(&g, &random_field(&g, 3), GAS).unwrap(), Path::new("mem")).unwrap();
        assert!(recs[0].rho.is_finite());
        assert!(recs[1].rho.is_nan() && recs[1].mach.is_nan());
    }

    #[test]
    fn vtk_layout_and_values() {
        let g = StructuredGrid::cartesian(2, 2, 1.0, 1.0).unwrap();
        let field = random_field(&g, 4);
        let s = field_vtk(&g, &field, GAS, "test").unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert!(lines.contains(&"POINTS 9 double"));
        assert!(lines.contains(&"CELL_DATA 4"));
        assert!(lines.contains(&"DIMENSIONS 3 3 1"));
        let at = lines.iter().position(|l| *l == "SCALARS rho double 1").unwrap();
        for k in 0..4 {
            let rho: f64 = lines[at + 2 + k].parse().unwrap();
            assert_eq!(rho, field[k].rho);
        }
        assert!(field_vtk(&g, &field[..3], GAS, "t").is_err());
    }

    #[test]
    fn manifest_hashes_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("b/a.txt");
        write_file(&a, b"abc").unwrap();
        let m = Manifest::build(dir.path(), &[a.clone()]).unwrap();
        assert_eq!(m.artifacts[0].path, "b/a.txt");
        assert_eq!(m.artifacts[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(m.verify(dir.path()).unwrap().is_empty());
        write_file(&a, b"abd").unwrap();
        assert_eq!(m.verify(dir.path()).unwrap(), vec!["b/a.txt".to_string()]);
    }

    #[test]
    fn histories_have_headers() {
        let mut h = ResidualHistory::default();
        h.push(1, 0.5, 1e-3);
        let s = residuals_csv(&h);
        assert_eq!(s, format!("{RESIDUAL_CSV_HEADER}\n1,{},{}\n", fmt17(0.5), fmt17(1e-3)));
        let rows = [MetricRow {
            case: "planar_shock".into(),
            iteration: 3,
            time: 1.0,
            metrics: vec![Metric { name: "odd_even_amplitude", value: 0.25 }],
        }];
        assert_eq!(metrics_csv(&rows).lines().nth(1), Some("planar_shock,3,1.0000000000000000e0,odd_even_amplitude,2.5000000000000000e-1"));
    }
}
