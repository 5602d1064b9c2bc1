//! Piecewise-linear (MUSCL) reconstruction in primitive variables.

use crate::euler::PrimitiveState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    #[default]
    VanLeer,
    /// Always returns a zero slope; reproduces the first-order scheme.
    Zero,
}

/// van Leer function `phi(r) = (r + |r|) / (1 + |r|)`.
pub fn van_leer_phi(r: f64) -> f64 {
    if !r.is_finite() {
        return if r > 0.0 { 2.0 } else { 0.0 };
    }
    (r + r.abs()) / (1.0 + r.abs())
}

impl Limiter {
    /// Limited slope from the backward and forward differences. Equal to
    /// `phi(dp / dm) * dm` for the van Leer limiter.
    #[inline]
    pub fn slope(self, dm: f64, dp: f64) -> f64 {
        match self {
            Limiter::Zero => 0.0,
            Limiter::VanLeer => {
                let prod = dm * dp;
                if prod > 0.0 {
                    2.0 * prod / (dm + dp)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Values of cell `c` extrapolated to its minus and plus faces.
pub fn reconstruct(
    minus: PrimitiveState,
    c: PrimitiveState,
    plus: PrimitiveState,
    limiter: Limiter,
) -> (PrimitiveState, PrimitiveState) {
    let s = |a: f64, b: f64, d: f64| limiter.slope(b - a, d - b);
    let sr = s(minus.rho, c.rho, plus.rho);
    let su = s(minus.u, c.u, plus.u);
    let sv = s(minus.v, c.v, plus.v);
    let sp = s(minus.p, c.p, plus.p);
    let lo = PrimitiveState::new(c.rho - 0.5 * sr, c.u - 0.5 * su, c.v - 0.5 * sv, c.p - 0.5 * sp);
    let hi = PrimitiveState::new(c.rho + 0.5 * sr, c.u + 0.5 * su, c.v + 0.5 * sv, c.p + 0.5 * sp);
    // fall back to the cell average if the extrapolation loses positivity
    if lo.is_physical() && hi.is_physical() {
        (lo, hi)
    } else {
        (c, c)
    }
}
