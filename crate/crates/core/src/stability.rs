//! Discrete stability laboratory for HLL-family schemes.
//!
//! The model problem is a grid-aligned shock with zero normal velocity and a
//! saw-tooth perturbation in the transverse plane. Each scheme family reduces
//! to a three-component recurrence for the deviations of density, transverse
//! momentum and pressure from a uniform base state. This module provides
//!
//! * the linearised amplification matrices in primitive form
//!   (density, shear velocity, pressure) and their eigenvalue verdicts,
//! * the quadratic Lyapunov function and its one-step change, both from the
//!   definition and from the per-family closed forms,
//! * phase-portrait traces and sign maps of the Lyapunov change.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, Matrix3, Vector3};
use rayon::prelude::*;
use thiserror::Error;

/// Threshold separating "strictly inside" from "on" the unit circle.
pub const UNIT_CIRCLE_TOL: f64 = 1e-12;

/// Exponent of the pressure function in the FP1D recurrence.
pub const FP1D_EXPONENT: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("no {what} is defined for scheme family {family}")]
    UnsupportedFamily { family: SchemeFamily, what: &'static str },
    #[error("base transverse velocity u0 is zero; the Lyapunov weight a0^2/(rho0 u0^2) is singular")]
    ZeroBaseVelocity,
    #[error("invalid base state: {0}")]
    InvalidBase(String),
    #[error("unknown scheme family `{0}`")]
    UnknownFamily(String),
    #[error("a phase portrait needs at least one step")]
    NoSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeFamily {
    Hlle,
    RoeHllemHllc,
    HllCps,
    HllcmHllec,
    HllsHlles,
    HllemFp1d,
}

impl SchemeFamily {
    pub const ALL: [SchemeFamily; 6] = [
        SchemeFamily::Hlle,
        SchemeFamily::RoeHllemHllc,
        SchemeFamily::HllCps,
        SchemeFamily::HllcmHllec,
        SchemeFamily::HllsHlles,
        SchemeFamily::HllemFp1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeFamily::Hlle => "hlle",
            SchemeFamily::RoeHllemHllc => "roe_hllem_hllc",
            SchemeFamily::HllCps => "hll_cps",
            SchemeFamily::HllcmHllec => "hllcm_hllec",
            SchemeFamily::HllsHlles => "hlls_hlles",
            SchemeFamily::HllemFp1d => "hllem_fp1d",
        }
    }

    /// Families with a constant amplification matrix.
    pub fn is_linear(self) -> bool {
        self != SchemeFamily::HllemFp1d
    }
}

impl fmt::Display for SchemeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeFamily {
    type Err = StabilityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '/'], "_");
        let fam = match key.as_str() {
            "hlle" => SchemeFamily::Hlle,
            "roe_hllem_hllc" | "roe" | "hllem" | "hllc" => SchemeFamily::RoeHllemHllc,
            "hll_cps" | "hllcps" => SchemeFamily::HllCps,
            "hllcm_hllec" | "hllcm" | "hllec" => SchemeFamily::HllcmHllec,
            "hlls_hlles" | "hlls" | "hlles" => SchemeFamily::HllsHlles,
            "hllem_fp1d" | "fp1d" => SchemeFamily::HllemFp1d,
            _ => return Err(StabilityError::UnknownFamily(s.to_string())),
        };
        Ok(fam)
    }
}

/// Uniform state about which perturbations evolve, plus the linearised CFL
/// number `nu = dt (a0 + |v0|) / dy` with `v0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseState {
    pub rho0: f64,
    pub u0: f64,
    pub p0: f64,
    pub gamma: f64,
    pub nu: f64,
}

impl BaseState {
    pub fn new(rho0: f64, u0: f64, p0: f64, gamma: f64, nu: f64) -> Result<Self, StabilityError> {
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(StabilityError::InvalidBase(format!("rho0 = {rho0}")));
        }
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(StabilityError::InvalidBase(format!("p0 = {p0}")));
        }
        if !(gamma > 1.0) {
            return Err(StabilityError::InvalidBase(format!("gamma = {gamma}")));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(StabilityError::InvalidBase(format!("nu = {nu} outside (0, 1)")));
        }
        if !u0.is_finite() {
            return Err(StabilityError::InvalidBase(format!("u0 = {u0}")));
        }
        Ok(Self { rho0, u0, p0, gamma, nu })
    }

    pub fn a0(&self) -> f64 {
        (self.gamma * self.p0 / self.rho0).sqrt()
    }

    pub fn with_nu(self, nu: f64) -> Result<Self, StabilityError> {
        Self::new(self.rho0, self.u0, self.p0, self.gamma, nu)
    }
}

impl Default for BaseState {
    fn default() -> Self {
        Self { rho0: 1.0, u0: 1.0, p0: 1.0, gamma: 1.4, nu: 0.45 }
    }
}

/// Deviations of density, transverse momentum and pressure.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerturbationState {
    pub rho_hat: f64,
    pub rhou_hat: f64,
    pub p_hat: f64,
}

impl PerturbationState {
    pub const ZERO: Self = Self { rho_hat: 0.0, rhou_hat: 0.0, p_hat: 0.0 };

    pub const fn new(rho_hat: f64, rhou_hat: f64, p_hat: f64) -> Self {
        Self { rho_hat, rhou_hat, p_hat }
    }

    pub fn scaled(self, s: f64) -> Self {
        Self::new(s * self.rho_hat, s * self.rhou_hat, s * self.p_hat)
    }

    fn vector(self) -> Vector3<f64> {
        Vector3::new(self.rho_hat, self.rhou_hat, self.p_hat)
    }

    fn from_vector(v: Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

/// Deviations of density, shear velocity and pressure.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PrimitivePerturbation {
    pub rho_hat: f64,
    pub u_hat: f64,
    pub p_hat: f64,
}

impl PrimitivePerturbation {
    pub const fn new(rho_hat: f64, u_hat: f64, p_hat: f64) -> Self {
        Self { rho_hat, u_hat, p_hat }
    }
}

/// Linear map from primitive to conserved deviations at the base state,
/// `(rho u)^ = u0 rho^ + rho0 u^`.
pub fn primitive_to_conserved_map(base: &BaseState) -> Matrix3<f64> {
    Matrix3::new(
        1.0, 0.0, 0.0, //
        base.u0, base.rho0, 0.0, //
        0.0, 0.0, 1.0,
    )
}

pub fn conserved_from_primitive_perturbation(x: PrimitivePerturbation, base: &BaseState) -> PerturbationState {
    PerturbationState::new(x.rho_hat, base.u0 * x.rho_hat + base.rho0 * x.u_hat, x.p_hat)
}

pub fn primitive_from_conserved_perturbation(x: PerturbationState, base: &BaseState) -> PrimitivePerturbation {
    PrimitivePerturbation::new(x.rho_hat, (x.rhou_hat - base.u0 * x.rho_hat) / base.rho0, x.p_hat)
}

/// Primitive amplification matrix in the normalised form (`rho0 = p0 = 1`,
/// so `a0^2 = gamma`), mapping `(rho^, u^, p^)^n` to step `n+1`.
pub fn primitive_amplification_matrix(
    family: SchemeFamily,
    nu: f64,
    gamma: f64,
) -> Result<Matrix3<f64>, StabilityError> {
    primitive_matrix(family, nu, gamma, gamma)
}

/// Primitive amplification matrix about an arbitrary base state; the
/// pressure-to-density feed is `2 nu / a0^2`.
pub fn primitive_amplification_matrix_at(
    family: SchemeFamily,
    base: &BaseState,
) -> Result<Matrix3<f64>, StabilityError> {
    primitive_matrix(family, base.nu, base.gamma, base.a0().powi(2))
}

fn primitive_matrix(family: SchemeFamily, nu: f64, gamma: f64, a0_sq: f64) -> Result<Matrix3<f64>, StabilityError> {
    let damp = 1.0 - 2.0 * nu;
    let feed = -2.0 * nu / a0_sq;
    let m = match family {
        SchemeFamily::Hlle => Matrix3::from_diagonal(&Vector3::new(damp, damp, damp)),
        SchemeFamily::RoeHllemHllc => Matrix3::new(
            1.0, 0.0, feed, //
            0.0, 1.0, 0.0, //
            0.0, 0.0, damp,
        ),
        SchemeFamily::HllCps => Matrix3::new(
            1.0, 0.0, feed, //
            0.0, 1.0 - 2.0 * nu / gamma, 0.0, //
            0.0, 0.0, damp,
        ),
        SchemeFamily::HllcmHllec => Matrix3::new(
            1.0, 0.0, feed, //
            0.0, damp, 0.0, //
            0.0, 0.0, damp,
        ),
        SchemeFamily::HllsHlles => Matrix3::from_diagonal(&Vector3::new(damp, 1.0, damp)),
        SchemeFamily::HllemFp1d => {
            return Err(StabilityError::UnsupportedFamily { family, what: "constant amplification matrix" })
        }
    };
    Ok(m)
}

/// Conserved-form amplification matrix acting on `(rho^, (rho u)^, p^)`.
pub fn conserved_amplification_matrix(
    family: SchemeFamily,
    base: &BaseState,
) -> Result<Matrix3<f64>, StabilityError> {
    let nu = base.nu;
    let a0_sq = base.a0().powi(2);
    let u0 = base.u0;
    let damp = 1.0 - 2.0 * nu;
    let m = match family {
        SchemeFamily::Hlle => Matrix3::from_diagonal(&Vector3::new(damp, damp, damp)),
        SchemeFamily::RoeHllemHllc => Matrix3::new(
            1.0, 0.0, -2.0 * nu / a0_sq, //
            0.0, 1.0, -2.0 * nu * u0 / a0_sq, //
            0.0, 0.0, damp,
        ),
        SchemeFamily::HllcmHllec => Matrix3::new(
            1.0, 0.0, -2.0 * nu / a0_sq, //
            2.0 * nu * u0, damp, -2.0 * nu * u0 / a0_sq, //
            0.0, 0.0, damp,
        ),
        SchemeFamily::HllsHlles => Matrix3::new(
            damp, 0.0, 0.0, //
            -2.0 * nu * u0, 1.0, 0.0, //
            0.0, 0.0, damp,
        ),
        SchemeFamily::HllCps | SchemeFamily::HllemFp1d => {
            return Err(StabilityError::UnsupportedFamily { family, what: "conserved perturbation recurrence" })
        }
    };
    Ok(m)
}

/// Eigenvalues sorted by decreasing modulus.
pub fn eigenvalues(m: &Matrix3<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)));
    ev
}

pub fn spectral_radius(m: &Matrix3<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    AsymptoticallyStable,
    Inconclusive,
    Unstable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::AsymptoticallyStable => "AsymptoticallyStable",
            Verdict::Inconclusive => "Inconclusive",
            Verdict::Unstable => "Unstable",
        })
    }
}

/// Reduced (linearised) Lyapunov verdict from the eigenvalues of the
/// primitive amplification matrix.
pub fn reduced_lyapunov_verdict(family: SchemeFamily, nu: f64, gamma: f64) -> Result<Verdict, StabilityError> {
    let m = primitive_amplification_matrix(family, nu, gamma)?;
    Ok(verdict_from_eigenvalues(&eigenvalues(&m)))
}

pub fn verdict_from_eigenvalues(ev: &[Complex<f64>]) -> Verdict {
    let radius = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if radius < 1.0 - UNIT_CIRCLE_TOL {
        Verdict::AsymptoticallyStable
    } else if radius <= 1.0 + UNIT_CIRCLE_TOL {
        Verdict::Inconclusive
    } else {
        Verdict::Unstable
    }
}

/// `V = a0^2/rho0 rho^2 + a0^2/(rho0 u0^2) (rho u)^2 + p^2/(rho0 a0^2)`.
pub fn lyapunov_value(x: PerturbationState, base: &BaseState) -> Result<f64, StabilityError> {
    if base.u0 == 0.0 {
        return Err(StabilityError::ZeroBaseVelocity);
    }
    let a0_sq = base.a0().powi(2);
    let rho0 = base.rho0;
    Ok(a0_sq / rho0 * x.rho_hat * x.rho_hat
        + a0_sq / (rho0 * base.u0 * base.u0) * x.rhou_hat * x.rhou_hat
        + x.p_hat * x.p_hat / (rho0 * a0_sq))
}

/// Anti-diffusion coefficient of the FP1D recurrence at pressure deviation
/// `p_hat`: `1 - (2|p^| / (p0 + |p^|))^(1/3)`.
pub fn fp1d_delta(p_hat: f64, p0: f64) -> f64 {
    let m = p_hat.abs();
    if m == 0.0 {
        return 1.0;
    }
    1.0 - (2.0 * m / (p0 + m)).powf(FP1D_EXPONENT)
}

/// One time step of the family's perturbation recurrence.
///
/// The HLLCM/HLLEC recurrence is the general one; its closed-form Lyapunov
/// change only holds on the zero-shear-perturbation line `(rho u)^ = u0 rho^`.
pub fn step_perturbation(
    family: SchemeFamily,
    x: PerturbationState,
    base: &BaseState,
) -> Result<PerturbationState, StabilityError> {
    let nu = base.nu;
    let a0_sq = base.a0().powi(2);
    let u0 = base.u0;
    let PerturbationState { rho_hat: r, rhou_hat: m, p_hat: p } = x;
    let p_next = p - 2.0 * nu * p;
    let next = match family {
        SchemeFamily::Hlle => PerturbationState::new(r - 2.0 * nu * r, m - 2.0 * nu * m, p_next),
        SchemeFamily::RoeHllemHllc => PerturbationState::new(
            r - 2.0 * nu * p / a0_sq,
            m - 2.0 * nu * u0 * p / a0_sq,
            p_next,
        ),
        SchemeFamily::HllcmHllec => PerturbationState::new(
            r - 2.0 * nu * p / a0_sq,
            m - 2.0 * nu * (m - u0 * r + u0 * p / a0_sq),
            p_next,
        ),
        SchemeFamily::HllsHlles => PerturbationState::new(r - 2.0 * nu * r, m - 2.0 * nu * u0 * r, p_next),
        SchemeFamily::HllemFp1d => {
            let d = fp1d_delta(p, base.p0);
            PerturbationState::new(
                r - 2.0 * nu * ((1.0 - d) * r + d * p / a0_sq),
                m - 2.0 * nu * ((1.0 - d) * m + d * u0 * p / a0_sq),
                p_next,
            )
        }
        SchemeFamily::HllCps => {
            return Err(StabilityError::UnsupportedFamily { family, what: "conserved perturbation recurrence" })
        }
    };
    Ok(next)
}

/// Applies the conserved amplification matrix; used to cross-check
/// [`step_perturbation`] for the linear families.
pub fn step_by_matrix(
    family: SchemeFamily,
    x: PerturbationState,
    base: &BaseState,
) -> Result<PerturbationState, StabilityError> {
    let m = conserved_amplification_matrix(family, base)?;
    Ok(PerturbationState::from_vector(m * x.vector()))
}

/// `V(step(x)) - V(x)`.
pub fn delta_v(family: SchemeFamily, x: PerturbationState, base: &BaseState) -> Result<f64, StabilityError> {
    let before = lyapunov_value(x, base)?;
    let after = lyapunov_value(step_perturbation(family, x, base)?, base)?;
    Ok(after - before)
}

/// Expanded per-family expression for the one-step Lyapunov change.
pub fn delta_v_closed_form(
    family: SchemeFamily,
    x: PerturbationState,
    base: &BaseState,
) -> Result<f64, StabilityError> {
    if base.u0 == 0.0 {
        return Err(StabilityError::ZeroBaseVelocity);
    }
    let nu = base.nu;
    let rho0 = base.rho0;
    let u0 = base.u0;
    let a0_sq = base.a0().powi(2);
    let PerturbationState { rho_hat: r, rhou_hat: m, p_hat: p } = x;
    let pressure_decay = -4.0 * nu * (1.0 - nu) * p * p / (rho0 * a0_sq);
    let dv = match family {
        SchemeFamily::Hlle => {
            -4.0 * nu * (1.0 - nu)
                * (a0_sq / rho0 * r * r + a0_sq / (rho0 * u0 * u0) * m * m + p * p / (rho0 * a0_sq))
        }
        // the HLLCM/HLLEC expression coincides with this one on the
        // zero-shear-perturbation line
        SchemeFamily::RoeHllemHllc | SchemeFamily::HllcmHllec => {
            -4.0 * nu / rho0 * r * p + 4.0 * nu * nu / (rho0 * a0_sq) * p * p - 4.0 * nu / (rho0 * u0) * m * p
                + 4.0 * nu * nu / (rho0 * a0_sq) * p * p
                + pressure_decay
        }
        SchemeFamily::HllsHlles => {
            -a0_sq / rho0 * 4.0 * nu * (1.0 - 2.0 * nu) * r * r - a0_sq / (rho0 * u0) * 4.0 * nu * r * m
                + pressure_decay
        }
        SchemeFamily::HllCps | SchemeFamily::HllemFp1d => {
            return Err(StabilityError::UnsupportedFamily { family, what: "closed-form Lyapunov change" })
        }
    };
    Ok(dv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub step: usize,
    pub state: PerturbationState,
    pub v: f64,
    pub dv: f64,
}

/// Sequence of perturbation states with their Lyapunov value and the change
/// produced by the next step.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovTrace {
    pub family: SchemeFamily,
    pub base: BaseState,
    pub entries: Vec<TraceEntry>,
}

pub fn phase_portrait(
    family: SchemeFamily,
    x0: PerturbationState,
    base: &BaseState,
    n_steps: usize,
) -> Result<LyapunovTrace, StabilityError> {
    if n_steps == 0 {
        return Err(StabilityError::NoSteps);
    }
    let mut entries = Vec::with_capacity(n_steps + 1);
    let mut x = x0;
    for step in 0..=n_steps {
        let next = step_perturbation(family, x, base)?;
        let v = lyapunov_value(x, base)?;
        let dv = lyapunov_value(next, base)? - v;
        entries.push(TraceEntry { step, state: x, v, dv });
        x = next;
    }
    Ok(LyapunovTrace { family, base: *base, entries })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSample {
    pub state: PerturbationState,
    pub dv: f64,
}

impl RegionSample {
    /// -1, 0 or +1.
    pub fn sign(&self) -> i8 {
        if self.dv > 0.0 {
            1
        } else if self.dv < 0.0 {
            -1
        } else {
            0
        }
    }
}

/// Evaluates the Lyapunov change at every sample. Output order matches input.
pub fn stability_region_map(
    family: SchemeFamily,
    base: &BaseState,
    samples: &[PerturbationState],
) -> Result<Vec<RegionSample>, StabilityError> {
    samples
        .par_iter()
        .map(|&x| delta_v(family, x, base).map(|dv| RegionSample { state: x, dv }))
        .collect()
}

/// Tensor-product grid of `n` points per axis over `[-extent, extent]^3`,
/// with the momentum axis scaled by `u0`.
pub fn sample_cube(base: &BaseState, extent: f64, n: usize) -> Vec<PerturbationState> {
    let n = n.max(2);
    let axis: Vec<f64> = (0..n).map(|k| -extent + 2.0 * extent * k as f64 / (n - 1) as f64).collect();
    let mut out = Vec::with_capacity(n * n * n);
    for &r in &axis {
        for &m in &axis {
            for &p in &axis {
                out.push(PerturbationState::new(r, m * base.u0, p));
            }
        }
    }
    out
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl LyapunovTrace {
    pub const CSV_HEADER: &'static str = "family,rho0,u0,p0,gamma,nu,step,rho_hat,rhou_hat,p_hat,V,dV";

    pub fn to_csv(&self) -> String {
        let b = &self.base;
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.family,
                fmt17(b.rho0),
                fmt17(b.u0),
                fmt17(b.p0),
                fmt17(b.gamma),
                fmt17(b.nu),
                e.step,
                fmt17(e.state.rho_hat),
                fmt17(e.state.rhou_hat),
                fmt17(e.state.p_hat),
                fmt17(e.v),
                fmt17(e.dv)
            ));
        }
        s
    }
}

pub const REGION_CSV_HEADER: &str = "family,rho_hat,rhou_hat,p_hat,dV,sign";

pub fn region_map_to_csv(family: SchemeFamily, samples: &[RegionSample]) -> String {
    let mut s = String::from(REGION_CSV_HEADER);
    s.push('\n');
    for r in samples {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            family,
            fmt17(r.state.rho_hat),
            fmt17(r.state.rhou_hat),
            fmt17(r.state.p_hat),
            fmt17(r.dv),
            r.sign()
        ));
    }
    s
}
