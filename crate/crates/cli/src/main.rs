use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use hllstab::io::{self, AnalyzeOptions, RunError, RunReport, RunStatus};
use hllstab::riemann::{FluxScheme, SchemeKind};
use hllstab::stability::{BaseState, PerturbationState, SchemeFamily};

const EXIT_CONFIG: u8 = 2;
const EXIT_NON_PHYSICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "hllstab", version, about = "HLL-family Euler solver and shock-stability lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one case described by a configuration file.
    Run {
        config: PathBuf,
        /// Output directory, overriding the one in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print progress every N iterations (0 disables).
        #[arg(long, default_value_t = 1000)]
        progress: usize,
    },
    /// Stability analysis of one scheme family.
    Analyze(AnalyzeArgs),
    /// Run the same case once per scheme and tabulate the metrics.
    Sweep {
        config: PathBuf,
        /// Comma-separated scheme names, e.g. hlle,hllem,hllem_fp1d.
        #[arg(long, value_delimiter = ',', required = true)]
        schemes: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// hlle, roe_hllem_hllc, hll_cps, hllcm_hllec, hlls_hlles or hllem_fp1d.
    family: String,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    rho0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    p0: f64,
    #[arg(long, default_value_t = 1.4)]
    gamma: f64,
    #[arg(long, default_value_t = 0.45)]
    nu: f64,
    #[arg(long, default_value_t = -1e-3, allow_hyphen_values = true)]
    rho_hat: f64,
    /// Defaults to `u0 * rho_hat` (no transverse-velocity deviation).
    #[arg(long, allow_hyphen_values = true)]
    rhou_hat: Option<f64>,
    #[arg(long, default_value_t = 1e-3, allow_hyphen_values = true)]
    p_hat: f64,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Half-width of the sign-map cube.
    #[arg(long, default_value_t = 1e-2)]
    map_extent: f64,
    /// Sign-map samples per axis.
    #[arg(long, default_value_t = 11)]
    map_points: usize,
    /// Output directory (default `analyze_<family>`).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Maps an error to its exit code after reporting it.
fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        RunError::Config(_) | RunError::Case(_) | RunError::Stability(_) => ExitCode::from(EXIT_CONFIG),
        RunError::Solver(_) => ExitCode::from(EXIT_CONFIG),
        RunError::Io(_) => ExitCode::FAILURE,
    }
}

fn report(rep: &RunReport) -> ExitCode {
    for m in &rep.metrics {
        println!("{} = {:.6e}", m.name, m.value);
    }
    if let (Some(a), Some(b)) = (rep.first_residual, rep.last_residual) {
        println!("residual {a:.3e} -> {b:.3e}");
    }
    println!("{} iterations, t = {:.6e}, artifacts in {}", rep.iterations, rep.time, rep.output_dir.display());
    match &rep.status {
        RunStatus::Completed => ExitCode::SUCCESS,
        RunStatus::NonPhysical(e) => {
            eprintln!("aborted: {e}; last valid field written as diagnostic.*");
            ExitCode::from(EXIT_NON_PHYSICAL)
        }
    }
}

fn load(path: &PathBuf, out: Option<PathBuf>) -> Result<io::RunConfig, RunError> {
    let mut cfg = io::load_config(path)?;
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

fn analyze(a: AnalyzeArgs) -> Result<(), RunError> {
    let family: SchemeFamily = a.family.parse()?;
    let base = BaseState::new(a.rho0, a.u0, a.p0, a.gamma, a.nu)?;
    let opts = AnalyzeOptions {
        family,
        base,
        perturbation: PerturbationState::new(a.rho_hat, a.rhou_hat.unwrap_or(a.u0 * a.rho_hat), a.p_hat),
        steps: a.steps,
        map_extent: a.map_extent,
        map_points: a.map_points,
    };
    let out = io::resolve_output_dir(&a.out.unwrap_or_else(|| PathBuf::from(format!("analyze_{}", family.name()))));
    let rep = io::analyze(&opts, &out)?;
    println!("family {}: {} (spectral radius {:.15})", family, rep.verdict, rep.spectral_radius);
    for z in &rep.eigenvalues {
        println!("  eigenvalue {:+.15} {:+.15}i", z.re, z.im);
    }
    if let Some(dv) = rep.first_step_dv {
        println!("first-step dV = {dv:.6e}");
    }
    if let Some([neg, zero, pos]) = rep.sign_counts {
        println!("sign map: {neg} negative, {zero} zero, {pos} positive");
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

fn parse_schemes(names: &[String], r: f64) -> Result<Vec<FluxScheme>, RunError> {
    names
        .iter()
        .map(|n| {
            let kind: SchemeKind = n.parse().map_err(|e: hllstab::riemann::RiemannError| {
                io::ConfigError::InvalidValue { line: 0, key: "schemes".into(), reason: e.to_string() }
            })?;
            Ok(FluxScheme { kind, r })
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, progress } => {
            let result = load(&config, out).and_then(|cfg| {
                let case = hllstab::cases::preset(&cfg.preset)?;
                let dir = io::resolve_output_dir(&cfg.output_dir);
                io::run_case(case, &cfg, &dir, |info| {
                    if progress > 0 && info.iteration % progress == 0 {
                        eprintln!("it {:>8}  t {:.6e}  res {:.3e}", info.iteration, info.time, info.residual);
                    }
                })
            });
            match result {
                Ok(rep) => report(&rep),
                Err(e) => fail(&e),
            }
        }
        Command::Analyze(a) => match analyze(a) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
        Command::Sweep { config, schemes, out } => {
            let result = load(&config, out).and_then(|cfg| {
                let list = parse_schemes(&schemes, cfg.scheme.r)?;
                io::sweep(&cfg, &list)
            });
            match result.context("sweep failed") {
                Ok(rep) => {
                    let mut code = ExitCode::SUCCESS;
                    for (scheme, r) in &rep.runs {
                        println!("== {scheme}");
                        if report(r) != ExitCode::SUCCESS {
                            code = ExitCode::from(EXIT_NON_PHYSICAL);
                        }
                    }
                    println!("side-by-side metrics in {}", rep.output_dir.join("sweep_metrics.csv").display());
                    code
                }
                Err(e) => match e.downcast_ref::<RunError>() {
                    Some(re) => fail(re),
                    None => {
                        eprintln!("error: {e:#}");
                        ExitCode::FAILURE
                    }
                },
            }
        }
    }
}
