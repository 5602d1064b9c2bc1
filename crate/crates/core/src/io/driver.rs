//! Run, sweep and stability-analysis drivers that emit artifact directories.

use std::path::{Path, PathBuf};

use nalgebra::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::cases::{instability_metrics, preset, CaseDefinition, CaseError, Metric};
use crate::euler::GasModel;
use crate::fv2d::{Simulation, SolverConfig, SolverError, StepInfo};
use crate::riemann::FluxScheme;
use crate::stability::{
    eigenvalues, phase_portrait, primitive_amplification_matrix_at, region_map_to_csv, sample_cube,
    stability_region_map, verdict_from_eigenvalues, BaseState, PerturbationState, SchemeFamily, StabilityError,
    Verdict,
};

use super::config::{Cadence, ConfigError, OutputFormat, RunConfig};
use super::writers::{
    field_csv, field_vtk, fmt17, metrics_csv, residuals_csv, write_file, ContourSidecar, IoError, Manifest, MetricRow,
    MANIFEST_NAME, METRICS_CSV_HEADER,
};

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "HLLSTAB_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

/// Resolves a relative output directory against `$HLLSTAB_OUTPUT_ROOT`
/// (or the working directory when unset).
pub fn resolve_output_dir(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() && !root.is_empty() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// The run stopped; the last valid field was dumped as `diagnostic.*`.
    NonPhysical(SolverError),
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: RunStatus,
    pub output_dir: PathBuf,
    pub iterations: usize,
    pub time: f64,
    /// Metrics of the last written field.
    pub metrics: Vec<Metric>,
    pub first_residual: Option<f64>,
    pub last_residual: Option<f64>,
    /// Every file written, manifest last.
    pub artifacts: Vec<PathBuf>,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    case: &'a str,
    scheme: &'a str,
    r: f64,
    order: u32,
    cfl: f64,
    iterations: usize,
    time: f64,
    status: &'a str,
    error: Option<String>,
}

struct Emitter<'a> {
    root: &'a Path,
    case: &'a CaseDefinition,
    cfg: &'a RunConfig,
    gas: GasModel,
    files: Vec<PathBuf>,
}

impl Emitter<'_> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), IoError> {
        let path = self.root.join(rel);
        write_file(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }

    /// Field files plus the contour sidecar under the stem `stem`.
    fn snapshot(&mut self, stem: &str, sim: &Simulation) -> Result<(), IoError> {
        let field_name = |ext: &str| format!("{stem}.{ext}");
        for f in &self.cfg.formats {
            match f {
                OutputFormat::Csv => {
                    let s = field_csv(&sim.grid, sim.field(), self.gas)?;
                    self.write(&field_name("csv"), s.as_bytes())?;
                }
                OutputFormat::Vtk => {
                    let title = format!(
                        "{} {} order {} iteration {} time {}",
                        self.case.name,
                        self.cfg.scheme.kind.name(),
                        self.cfg.order.number(),
                        sim.iteration(),
                        fmt17(sim.time())
                    );
                    let s = field_vtk(&sim.grid, sim.field(), self.gas, &title)?;
                    self.write(&field_name("vtk"), s.as_bytes())?;
                }
            }
        }
        let primary = field_name(self.cfg.formats.first().copied().unwrap_or(OutputFormat::Csv).name());
        let c = &self.case.contour;
        let sidecar = ContourSidecar {
            field: Path::new(&primary).file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or(primary),
            case: self.case.name.clone(),
            scheme: self.cfg.scheme.kind.name().to_string(),
            order: self.cfg.order.number(),
            iteration: sim.iteration(),
            time: sim.time(),
            variable: c.variable.clone(),
            min: c.min,
            max: c.max,
            levels: c.levels,
            ni: sim.grid.ni(),
            nj: sim.grid.nj(),
        };
        self.write(&field_name("json"), sidecar.to_json().as_bytes())
    }
}

/// Runs the preset named in `cfg`, writing into the resolved output directory.
pub fn run(cfg: &RunConfig) -> Result<RunReport, RunError> {
    run_in(cfg, &resolve_output_dir(&cfg.output_dir))
}

/// Runs the preset named in `cfg`, writing into `out`.
pub fn run_in(cfg: &RunConfig, out: &Path) -> Result<RunReport, RunError> {
    run_case(preset(&cfg.preset)?, cfg, out, |_| {})
}

/// Runs an explicit case with the solver, end and output settings of `cfg`;
/// `progress` sees every completed step.
///
/// Artifacts: `config.txt`, `snapshots/itNNNNNNNN.{csv,vtk,json}` at the
/// configured cadence, `final.*` (or `diagnostic.*` plus `error.txt` when a
/// non-physical state stops the run), `residuals.csv`, `metrics.csv`,
/// `summary.json` and `manifest.json`.
pub fn run_case(
    case: CaseDefinition,
    cfg: &RunConfig,
    out: &Path,
    mut progress: impl FnMut(&StepInfo),
) -> Result<RunReport, RunError> {
    let gas = GasModel::AIR;
    let solver = SolverConfig::new(cfg.scheme, cfg.order, cfg.cfl)?;
    let mut sim = Simulation::new(case.grid.clone(), case.initial.clone(), case.boundaries.clone(), solver, gas)?
        .with_stepping(cfg.stepping);
    let t_end = cfg.end_time.or(case.end.time);
    let max_iters = cfg.max_iters.or(case.end.iterations);

    let mut em = Emitter { root: out, case: &case, cfg, gas, files: Vec::new() };
    em.write("config.txt", cfg.serialize().as_bytes())?;

    let mut rows = Vec::new();
    let metrics_of = |sim: &Simulation| -> Result<MetricRow, CaseError> {
        Ok(MetricRow {
            case: case.name.clone(),
            iteration: sim.iteration(),
            time: sim.time(),
            metrics: instability_metrics(case.kind.name(), &sim.grid, sim.field())?,
        })
    };

    // index of the next time-cadence snapshot, at `k * interval`
    let mut next_snap = 1u64;
    if cfg.snapshots.is_some() {
        em.snapshot("snapshots/it00000000", &sim)?;
        rows.push(metrics_of(&sim)?);
    }

    let mut status = RunStatus::Completed;
    loop {
        let done_time = t_end.is_some_and(|te| sim.time() >= te);
        let done_iters = max_iters.is_some_and(|m| sim.iteration() >= m);
        if done_time || done_iters || (t_end.is_none() && max_iters.is_none()) {
            break;
        }
        match sim.step(t_end) {
            Ok(info) => {
                progress(&info);
                let due = match cfg.snapshots {
                    Some(Cadence::Iterations(n)) => info.iteration % n == 0,
                    Some(Cadence::Time(dt)) if info.time >= next_snap as f64 * dt * (1.0 - 1e-12) => {
                        while next_snap as f64 * dt * (1.0 - 1e-12) <= info.time {
                            next_snap += 1;
                        }
                        true
                    }
                    _ => false,
                };
                if due {
                    em.snapshot(&format!("snapshots/it{:08}", info.iteration), &sim)?;
                    rows.push(metrics_of(&sim)?);
                }
            }
            Err(e @ SolverError::NonPhysical { .. }) => {
                status = RunStatus::NonPhysical(e);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }

    let final_row = metrics_of(&sim)?;
    let metrics = final_row.metrics.clone();
    if rows.last().is_none_or(|r| r.iteration != final_row.iteration) {
        rows.push(final_row);
    }
    let (stem, status_name, error) = match &status {
        RunStatus::Completed => ("final", "completed", None),
        RunStatus::NonPhysical(e) => ("diagnostic", "non_physical", Some(e.to_string())),
    };
    em.snapshot(stem, &sim)?;
    if let Some(msg) = &error {
        em.write("error.txt", format!("{msg}\n").as_bytes())?;
    }
    em.write("residuals.csv", residuals_csv(sim.history()).as_bytes())?;
    em.write("metrics.csv", metrics_csv(&rows).as_bytes())?;
    let summary = RunSummary {
        case: &case.name,
        scheme: cfg.scheme.kind.name(),
        r: cfg.scheme.r,
        order: cfg.order.number(),
        cfl: cfg.cfl,
        iterations: sim.iteration(),
        time: sim.time(),
        status: status_name,
        error,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    json.push('\n');
    em.write("summary.json", json.as_bytes())?;

    let mut files = em.files;
    let manifest = Manifest::build(out, &files)?;
    files.push(manifest.write(out)?);

    Ok(RunReport {
        status,
        output_dir: out.to_path_buf(),
        iterations: sim.iteration(),
        time: sim.time(),
        metrics,
        first_residual: sim.history().first(),
        last_residual: sim.history().entries.last().map(|e| e.2),
        artifacts: files,
    })
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub output_dir: PathBuf,
    pub runs: Vec<(FluxScheme, RunReport)>,
}

/// Runs the same case once per scheme into `out/<scheme>/` and collects the
/// final metrics side by side in `out/sweep_metrics.csv`.
pub fn sweep_in(cfg: &RunConfig, schemes: &[FluxScheme], out: &Path) -> Result<SweepReport, RunError> {
    let mut runs = Vec::with_capacity(schemes.len());
    let mut table = format!("scheme,{METRICS_CSV_HEADER},status\n");
    let mut files = Vec::new();
    for &scheme in schemes {
        let sub = out.join(scheme.kind.name());
        let run_cfg = RunConfig { scheme, output_dir: sub.clone(), ..cfg.clone() };
        let report = run_in(&run_cfg, &sub)?;
        let status = match report.status {
            RunStatus::Completed => "completed",
            RunStatus::NonPhysical(_) => "non_physical",
        };
        for m in &report.metrics {
            table.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                scheme.kind.name(),
                cfg.preset,
                report.iterations,
                fmt17(report.time),
                m.name,
                fmt17(m.value),
                status
            ));
        }
        files.extend(report.artifacts.iter().filter(|p| !p.ends_with(MANIFEST_NAME)).cloned());
        runs.push((scheme, report));
    }
    let path = out.join("sweep_metrics.csv");
    write_file(&path, table.as_bytes())?;
    files.push(path);
    Manifest::build(out, &files)?.write(out)?;
    Ok(SweepReport { output_dir: out.to_path_buf(), runs })
}

pub fn sweep(cfg: &RunConfig, schemes: &[FluxScheme]) -> Result<SweepReport, RunError> {
    sweep_in(cfg, schemes, &resolve_output_dir(&cfg.output_dir))
}

/// Inputs of a stability analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub family: SchemeFamily,
    pub base: BaseState,
    /// Starting point of the phase-portrait trace.
    pub perturbation: PerturbationState,
    pub steps: usize,
    /// Half-width of the sampled perturbation cube (momentum axis scaled by
    /// `u0`).
    pub map_extent: f64,
    pub map_points: usize,
}

impl AnalyzeOptions {
    /// Negative density and positive pressure deviation of size 1e-3 with
    /// no transverse-velocity deviation.
    pub fn default_perturbation(base: &BaseState) -> PerturbationState {
        PerturbationState::new(-1e-3, -1e-3 * base.u0, 1e-3)
    }

    pub fn new(family: SchemeFamily) -> Self {
        let base = BaseState::default();
        Self {
            family,
            base,
            perturbation: Self::default_perturbation(&base),
            steps: 50,
            map_extent: 1e-2,
            map_points: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeReport {
    pub family: SchemeFamily,
    /// Reduced-method verdict; for FP1D it is that of the linearisation
    /// about the base state, where the anti-diffusion coefficient tends to 1.
    pub verdict: Verdict,
    pub eigenvalues: Vec<Complex<f64>>,
    pub spectral_radius: f64,
    /// `None` for families without a perturbation recurrence.
    pub first_step_dv: Option<f64>,
    /// Sign-map counts `[negative, zero, positive]`.
    pub sign_counts: Option<[usize; 3]>,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Serialize)]
struct AnalyzeSummary<'a> {
    family: &'a str,
    rho0: f64,
    u0: f64,
    p0: f64,
    gamma: f64,
    nu: f64,
    verdict: String,
    verdict_basis: &'a str,
    spectral_radius: f64,
    eigenvalues: Vec<[f64; 2]>,
    initial_perturbation: [f64; 3],
    steps: usize,
    first_step_dv: Option<f64>,
    sign_map_negative: Option<usize>,
    sign_map_zero: Option<usize>,
    sign_map_positive: Option<usize>,
}

/// Eigenvalue table, verdict, phase-portrait trace and Lyapunov-change sign
/// map for one scheme family, written into `out`.
pub fn analyze(opts: &AnalyzeOptions, out: &Path) -> Result<AnalyzeReport, RunError> {
    let fam = opts.family;
    let base = &opts.base;
    let (matrix_family, basis) = match fam {
        SchemeFamily::HllemFp1d => (SchemeFamily::RoeHllemHllc, "linearisation about the base state"),
        f => (f, "amplification matrix eigenvalues"),
    };
    let m = primitive_amplification_matrix_at(matrix_family, base)?;
    let mut ev = eigenvalues(&m);
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
    let verdict = verdict_from_eigenvalues(&ev);
    let radius = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut files = Vec::new();
    let mut emit = |name: &str, bytes: String| -> Result<(), IoError> {
        let p = out.join(name);
        write_file(&p, bytes.as_bytes())?;
        files.push(p);
        Ok(())
    };

    let mut table = String::from("family,nu,index,re,im,modulus\n");
    for (k, z) in ev.iter().enumerate() {
        table.push_str(&format!("{},{},{k},{},{},{}\n", fam, fmt17(base.nu), fmt17(z.re), fmt17(z.im), fmt17(z.norm())));
    }
    emit("eigenvalues.csv", table)?;

    let (first_step_dv, sign_counts) = if fam == SchemeFamily::HllCps {
        (None, None)
    } else {
        let trace = phase_portrait(fam, opts.perturbation, base, opts.steps)?;
        emit("trace.csv", trace.to_csv())?;
        let samples = sample_cube(base, opts.map_extent, opts.map_points);
        let map = stability_region_map(fam, base, &samples)?;
        let mut counts = [0usize; 3];
        for s in &map {
            counts[(s.sign() + 1) as usize] += 1;
        }
        emit("sign_map.csv", region_map_to_csv(fam, &map))?;
        (Some(trace.entries[0].dv), Some(counts))
    };

    let x = opts.perturbation;
    let summary = AnalyzeSummary {
        family: fam.name(),
        rho0: base.rho0,
        u0: base.u0,
        p0: base.p0,
        gamma: base.gamma,
        nu: base.nu,
        verdict: verdict.to_string(),
        verdict_basis: basis,
        spectral_radius: radius,
        eigenvalues: ev.iter().map(|z| [z.re, z.im]).collect(),
        initial_perturbation: [x.rho_hat, x.rhou_hat, x.p_hat],
        steps: opts.steps,
        first_step_dv,
        sign_map_negative: sign_counts.map(|c| c[0]),
        sign_map_zero: sign_counts.map(|c| c[1]),
        sign_map_positive: sign_counts.map(|c| c[2]),
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("report serialises");
    json.push('\n');
    emit("report.json", json)?;

    let manifest = Manifest::build(out, &files)?;
    files.push(manifest.write(out)?);
    Ok(AnalyzeReport {
        family: fam,
        verdict,
        eigenvalues: ev,
        spectral_radius: radius,
        first_step_dv,
        sign_counts,
        artifacts: files,
    })
}
