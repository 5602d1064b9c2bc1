//! State vectors, the calorically perfect gas closure, the x-directional
//! physical flux and the face rotation used by every face-normal flux
//! evaluation.

use std::ops::{Add, Mul, Sub};

use thiserror::Error;

/// Four-component flux (mass, x-momentum, y-momentum, energy).
pub type Flux = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EulerError {
    #[error("non-physical state: rho = {rho:e}, p = {p:e}")]
    NonPhysicalState { rho: f64, p: f64 },
    #[error("invalid specific-heat ratio {0} (must exceed 1)")]
    InvalidGamma(f64),
    #[error("invalid face frame: |n| = {norm}, length = {length}")]
    InvalidFrame { norm: f64, length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
}

impl GasModel {
    pub const AIR: GasModel = GasModel { gamma: 1.4 };

    pub fn new(gamma: f64) -> Result<Self, EulerError> {
        if gamma.is_finite() && gamma > 1.0 {
            Ok(Self { gamma })
        } else {
            Err(EulerError::InvalidGamma(gamma))
        }
    }

    #[inline]
    pub fn sound_speed(&self, rho: f64, p: f64) -> f64 {
        (self.gamma * p / rho).sqrt()
    }
}

impl Default for GasModel {
    fn default() -> Self {
        Self::AIR
    }
}

/// Cell-averaged conserved variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservedState {
    pub rho: f64,
    pub rho_u: f64,
    pub rho_v: f64,
    pub rho_e: f64,
}

impl ConservedState {
    pub const fn new(rho: f64, rho_u: f64, rho_v: f64, rho_e: f64) -> Self {
        Self { rho, rho_u, rho_v, rho_e }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.rho_u, self.rho_v, self.rho_e]
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl Add for ConservedState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.rho + o.rho, self.rho_u + o.rho_u, self.rho_v + o.rho_v, self.rho_e + o.rho_e)
    }
}

impl Sub for ConservedState {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.rho - o.rho, self.rho_u - o.rho_u, self.rho_v - o.rho_v, self.rho_e - o.rho_e)
    }
}

impl Mul<ConservedState> for f64 {
    type Output = ConservedState;
    fn mul(self, s: ConservedState) -> ConservedState {
        ConservedState::new(self * s.rho, self * s.rho_u, self * s.rho_v, self * s.rho_e)
    }
}

/// Density, velocity components and pressure.
///
/// Fields are public so hot loops can build states without re-validation;
/// states that come out of [`primitive_from_conserved`] are guaranteed to
/// have positive density and pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl PrimitiveState {
    pub const fn new(rho: f64, u: f64, v: f64, p: f64) -> Self {
        Self { rho, u, v, p }
    }

    /// Builds a state and checks `rho > 0`, `p > 0`.
    pub fn checked(rho: f64, u: f64, v: f64, p: f64) -> Result<Self, EulerError> {
        let w = Self::new(rho, u, v, p);
        if w.is_physical() {
            Ok(w)
        } else {
            Err(EulerError::NonPhysicalState { rho, p })
        }
    }

    #[inline]
    pub fn is_physical(&self) -> bool {
        self.rho > 0.0 && self.p > 0.0 && self.u.is_finite() && self.v.is_finite()
    }

    #[inline]
    pub fn sound_speed(&self, gas: GasModel) -> f64 {
        gas.sound_speed(self.rho, self.p)
    }

    /// Mach number built from the full velocity magnitude.
    #[inline]
    pub fn mach(&self, gas: GasModel) -> f64 {
        self.u.hypot(self.v) / self.sound_speed(gas)
    }

    /// Specific total enthalpy.
    #[inline]
    pub fn total_enthalpy(&self, gas: GasModel) -> f64 {
        gas.gamma / (gas.gamma - 1.0) * self.p / self.rho + 0.5 * (self.u * self.u + self.v * self.v)
    }

    /// Rotates the velocity into (normal, tangential) components of `frame`.
    #[inline]
    pub fn to_face(self, frame: &FaceFrame) -> Self {
        Self::new(
            self.rho,
            frame.nx * self.u + frame.ny * self.v,
            -frame.ny * self.u + frame.nx * self.v,
            self.p,
        )
    }

    #[inline]
    pub fn from_face(self, frame: &FaceFrame) -> Self {
        Self::new(
            self.rho,
            frame.nx * self.u - frame.ny * self.v,
            frame.ny * self.u + frame.nx * self.v,
            self.p,
        )
    }
}

/// Unit normal and length of a cell face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub nx: f64,
    pub ny: f64,
    pub length: f64,
}

impl FaceFrame {
    pub fn new(nx: f64, ny: f64, length: f64) -> Result<Self, EulerError> {
        let norm = nx.hypot(ny);
        if (norm - 1.0).abs() <= 1e-12 && length > 0.0 && length.is_finite() {
            Ok(Self { nx, ny, length })
        } else {
            Err(EulerError::InvalidFrame { norm, length })
        }
    }

    /// Frame whose normal is the edge vector `(dx, dy)` turned clockwise by
    /// 90 degrees, i.e. pointing to the right of the direction of travel.
    pub fn from_edge(dx: f64, dy: f64) -> Result<Self, EulerError> {
        let length = dx.hypot(dy);
        if !(length > 0.0) {
            return Err(EulerError::InvalidFrame { norm: 0.0, length });
        }
        Ok(Self { nx: dy / length, ny: -dx / length, length })
    }

    pub fn flipped(&self) -> Self {
        Self { nx: -self.nx, ny: -self.ny, length: self.length }
    }
}

pub fn conserved_from_primitive(w: PrimitiveState, gas: GasModel) -> ConservedState {
    let kinetic = 0.5 * w.rho * (w.u * w.u + w.v * w.v);
    ConservedState::new(w.rho, w.rho * w.u, w.rho * w.v, w.p / (gas.gamma - 1.0) + kinetic)
}

pub fn primitive_from_conserved(
    s: ConservedState,
    gas: GasModel,
) -> Result<PrimitiveState, EulerError> {
    let rho = s.rho;
    if !(rho > 0.0) {
        return Err(EulerError::NonPhysicalState { rho, p: f64::NAN });
    }
    let u = s.rho_u / rho;
    let v = s.rho_v / rho;
    let p = (gas.gamma - 1.0) * (s.rho_e - 0.5 * rho * (u * u + v * v));
    if !(p > 0.0) || !p.is_finite() {
        return Err(EulerError::NonPhysicalState { rho, p });
    }
    Ok(PrimitiveState::new(rho, u, v, p))
}

/// `F(U) = [rho u, rho u^2 + p, rho u v, (rho E + p) u]`.
#[inline]
pub fn physical_flux_x(w: PrimitiveState, gas: GasModel) -> Flux {
    let rho_e = w.p / (gas.gamma - 1.0) + 0.5 * w.rho * (w.u * w.u + w.v * w.v);
    let mass = w.rho * w.u;
    [mass, mass * w.u + w.p, mass * w.v, (rho_e + w.p) * w.u]
}

#[inline]
pub fn rotate_to_face(s: ConservedState, frame: &FaceFrame) -> ConservedState {
    ConservedState::from_array(rotate_array_to_face(s.to_array(), frame))
}

#[inline]
pub fn rotate_from_face(s: ConservedState, frame: &FaceFrame) -> ConservedState {
    ConservedState::from_array(rotate_array_from_face(s.to_array(), frame))
}

/// Applies the face rotation to any 4-vector laid out like a conserved state.
#[inline]
pub fn rotate_array_to_face(a: [f64; 4], frame: &FaceFrame) -> [f64; 4] {
    [
        a[0],
        frame.nx * a[1] + frame.ny * a[2],
        -frame.ny * a[1] + frame.nx * a[2],
        a[3],
    ]
}

#[inline]
pub fn rotate_array_from_face(a: [f64; 4], frame: &FaceFrame) -> [f64; 4] {
    [
        a[0],
        frame.nx * a[1] - frame.ny * a[2],
        frame.ny * a[1] + frame.nx * a[2],
        a[3],
    ]
}
