//! HLL-family face-normal fluxes: HLLE, HLLEM (Park-Kwon contact speed),
//! HLLEM with the Dellacherie low-Mach term, and HLLEM-FP1D.
//!
//! All functions take primitive states already rotated into the face frame:
//! `u` is the normal and `v` the tangential velocity.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::euler::{conserved_from_primitive, physical_flux_x, Flux, GasModel, PrimitiveState};
use crate::euler::ConservedState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiemannError {
    #[error("degenerate wave fan: S_L = {s_l:e}, S_R = {s_r:e}")]
    DegenerateFan { s_l: f64, s_r: f64 },
    #[error("pressure-function exponent r = {0} outside (0, 1]")]
    InvalidExponent(f64),
    #[error("unknown flux scheme `{0}`")]
    UnknownScheme(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Hlle,
    Hllem,
    HllemLm,
    HllemFp1d,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] =
        [SchemeKind::Hlle, SchemeKind::Hllem, SchemeKind::HllemLm, SchemeKind::HllemFp1d];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Hlle => "hlle",
            SchemeKind::Hllem => "hllem",
            SchemeKind::HllemLm => "hllem_lm",
            SchemeKind::HllemFp1d => "hllem_fp1d",
        }
    }
}

/// Flux function selector. `r` only matters for [`SchemeKind::HllemFp1d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxScheme {
    pub kind: SchemeKind,
    pub r: f64,
}

impl FluxScheme {
    pub const DEFAULT_R: f64 = 1.0 / 3.0;

    pub fn new(kind: SchemeKind, r: f64) -> Result<Self, RiemannError> {
        if r > 0.0 && r <= 1.0 {
            Ok(Self { kind, r })
        } else {
            Err(RiemannError::InvalidExponent(r))
        }
    }

    pub const fn of(kind: SchemeKind) -> Self {
        Self { kind, r: Self::DEFAULT_R }
    }

    pub const fn hlle() -> Self {
        Self::of(SchemeKind::Hlle)
    }

    pub const fn hllem() -> Self {
        Self::of(SchemeKind::Hllem)
    }

    pub const fn hllem_lm() -> Self {
        Self::of(SchemeKind::HllemLm)
    }

    pub const fn hllem_fp1d() -> Self {
        Self::of(SchemeKind::HllemFp1d)
    }
}

impl fmt::Display for FluxScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())
    }
}

impl FromStr for SchemeKind {
    type Err = RiemannError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| RiemannError::UnknownScheme(s.to_string()))
    }
}

/// Roe-averaged quantities at a face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoeAverages {
    pub u_n: f64,
    pub u_t: f64,
    pub a: f64,
    pub rho: f64,
    pub h: f64,
}

/// Left and right acoustic speed estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpeeds {
    pub s_l: f64,
    pub s_r: f64,
}

/// Contact/shear anti-diffusion coefficients and wave strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiDiffusion {
    pub delta2: f64,
    pub delta3: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

pub fn roe_averages(wl: PrimitiveState, wr: PrimitiveState, gas: GasModel) -> RoeAverages {
    let sl = wl.rho.sqrt();
    let sr = wr.rho.sqrt();
    let inv = 1.0 / (sl + sr);
    let u_n = (sl * wl.u + sr * wr.u) * inv;
    let u_t = (sl * wl.v + sr * wr.v) * inv;
    let h = (sl * wl.total_enthalpy(gas) + sr * wr.total_enthalpy(gas)) * inv;
    let a2 = (gas.gamma - 1.0) * (h - 0.5 * (u_n * u_n + u_t * u_t));
    RoeAverages { u_n, u_t, a: a2.sqrt(), rho: sl * sr, h }
}

/// Einfeldt wave speeds. With `clamp_zero` the estimates also include zero,
/// so `s_l <= 0 <= s_r`.
pub fn wave_speeds(
    wl: PrimitiveState,
    wr: PrimitiveState,
    avg: &RoeAverages,
    clamp_zero: bool,
    gas: GasModel,
) -> Result<WaveSpeeds, RiemannError> {
    let mut s_l = (wl.u - wl.sound_speed(gas)).min(avg.u_n - avg.a);
    let mut s_r = (wr.u + wr.sound_speed(gas)).max(avg.u_n + avg.a);
    if clamp_zero {
        s_l = s_l.min(0.0);
        s_r = s_r.max(0.0);
    }
    let scale = s_l.abs().max(s_r.abs()).max(1.0);
    if !(s_r - s_l >= 1e-12 * scale) {
        return Err(RiemannError::DegenerateFan { s_l, s_r });
    }
    Ok(WaveSpeeds { s_l, s_r })
}

pub fn hlle_flux(wl: PrimitiveState, wr: PrimitiveState, gas: GasModel) -> Result<Flux, RiemannError> {
    hllem_flux_with_deltas(wl, wr, gas, 0.0, 0.0)
}

/// HLL state between the two acoustic waves.
pub fn hll_intermediate_state(
    wl: PrimitiveState,
    wr: PrimitiveState,
    gas: GasModel,
) -> Result<ConservedState, RiemannError> {
    let avg = roe_averages(wl, wr, gas);
    let WaveSpeeds { s_l, s_r } = wave_speeds(wl, wr, &avg, true, gas)?;
    let ul = conserved_from_primitive(wl, gas).to_array();
    let ur = conserved_from_primitive(wr, gas).to_array();
    let fl = physical_flux_x(wl, gas);
    let fr = physical_flux_x(wr, gas);
    let inv = 1.0 / (s_r - s_l);
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = (s_r * ur[k] - s_l * ul[k] + fl[k] - fr[k]) * inv;
    }
    Ok(ConservedState::from_array(out))
}

/// Anti-diffusion coefficients for `scheme`. HLLE carries none, so both
/// coefficients are zero for it; the wave strengths are always filled in.
pub fn anti_diffusion(
    wl: PrimitiveState,
    wr: PrimitiveState,
    avg: &RoeAverages,
    scheme: FluxScheme,
) -> AntiDiffusion {
    let dp = wr.p - wl.p;
    let alpha2 = (wr.rho - wl.rho) - dp / (avg.a * avg.a);
    let alpha3 = avg.rho * (wr.v - wl.v);
    let base = avg.a / (avg.a + avg.u_n.abs());
    let delta = match scheme.kind {
        SchemeKind::Hlle => 0.0,
        SchemeKind::Hllem | SchemeKind::HllemLm => base,
        SchemeKind::HllemFp1d => base * (1.0 - pressure_function(wl.p, wr.p, scheme.r)),
    };
    AntiDiffusion { delta2: delta, delta3: delta, alpha2, alpha3 }
}

/// `(|p_L - p_R| / max(p_L, p_R))^r`, the one-dimensional pressure function.
#[inline]
pub fn pressure_function(p_l: f64, p_r: f64, r: f64) -> f64 {
    let dp = (p_l - p_r).abs();
    if dp == 0.0 {
        return 0.0;
    }
    (dp / p_l.max(p_r)).powf(r)
}

/// Dellacherie's local Mach function `min(max(M_L, M_R), 1)`.
#[inline]
pub fn low_mach_theta(wl: PrimitiveState, wr: PrimitiveState, gas: GasModel) -> f64 {
    wl.mach(gas).max(wr.mach(gas)).min(1.0)
}

/// HLL flux with explicit contact/shear coefficients and no low-Mach term.
/// `delta2 = delta3 = 0` reproduces HLLE.
pub fn hllem_flux_with_deltas(
    wl: PrimitiveState,
    wr: PrimitiveState,
    gas: GasModel,
    delta2: f64,
    delta3: f64,
) -> Result<Flux, RiemannError> {
    let avg = roe_averages(wl, wr, gas);
    let speeds = wave_speeds(wl, wr, &avg, true, gas)?;
    let dp = wr.p - wl.p;
    let ad = AntiDiffusion {
        delta2,
        delta3,
        alpha2: (wr.rho - wl.rho) - dp / (avg.a * avg.a),
        alpha3: avg.rho * (wr.v - wl.v),
    };
    Ok(assemble(wl, wr, gas, &avg, speeds, &ad, 1.0))
}

/// HLLE, HLLEM, HLLEM-LM or HLLEM-FP1D flux depending on `scheme.kind`.
pub fn hllem_family_flux(
    wl: PrimitiveState,
    wr: PrimitiveState,
    gas: GasModel,
    scheme: FluxScheme,
) -> Result<Flux, RiemannError> {
    let avg = roe_averages(wl, wr, gas);
    let speeds = wave_speeds(wl, wr, &avg, true, gas)?;
    let ad = anti_diffusion(wl, wr, &avg, scheme);
    let theta = match scheme.kind {
        SchemeKind::Hlle | SchemeKind::Hllem => 1.0,
        SchemeKind::HllemLm | SchemeKind::HllemFp1d => low_mach_theta(wl, wr, gas),
    };
    Ok(assemble(wl, wr, gas, &avg, speeds, &ad, theta))
}

/// Infallible flux for the finite-volume engine: a degenerate fan falls back
/// to the upwind physical flux chosen by the sign of the Roe normal velocity.
pub fn numerical_flux(wl: PrimitiveState, wr: PrimitiveState, gas: GasModel, scheme: FluxScheme) -> Flux {
    match hllem_family_flux(wl, wr, gas, scheme) {
        Ok(f) => f,
        Err(_) => {
            let avg = roe_averages(wl, wr, gas);
            if avg.u_n >= 0.0 {
                physical_flux_x(wl, gas)
            } else {
                physical_flux_x(wr, gas)
            }
        }
    }
}

fn assemble(
    wl: PrimitiveState,
    wr: PrimitiveState,
    gas: GasModel,
    avg: &RoeAverages,
    speeds: WaveSpeeds,
    ad: &AntiDiffusion,
    theta: f64,
) -> Flux {
    let WaveSpeeds { s_l, s_r } = speeds;
    let fl = physical_flux_x(wl, gas);
    if s_l >= 0.0 {
        return fl;
    }
    let fr = physical_flux_x(wr, gas);
    if s_r <= 0.0 {
        return fr;
    }
    let ul = conserved_from_primitive(wl, gas).to_array();
    let ur = conserved_from_primitive(wr, gas).to_array();

    let r2 = [1.0, avg.u_n, avg.u_t, 0.5 * (avg.u_n * avg.u_n + avg.u_t * avg.u_t)];
    let r3 = [0.0, 0.0, 1.0, avg.u_t];
    let c2 = ad.delta2 * ad.alpha2;
    let c3 = ad.delta3 * ad.alpha3;

    let inv = 1.0 / (s_r - s_l);
    let diss = s_r * s_l * inv;
    let mut f = [0.0; 4];
    for k in 0..4 {
        let bdu = c2 * r2[k] + c3 * r3[k];
        f[k] = (s_r * fl[k] - s_l * fr[k]) * inv + diss * (ur[k] - ul[k] - bdu);
    }
    if theta < 1.0 {
        f[1] -= (1.0 - theta) * avg.rho * avg.a * (wr.u - wl.u);
    }
    f
}
