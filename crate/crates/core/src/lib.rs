//! Finite-volume compressible Euler solver with HLL-family approximate
//! Riemann solvers, a discrete Lyapunov stability laboratory and the
//! shock-instability benchmark cases.

pub mod euler;
pub mod riemann;
pub mod stability;
pub mod fv2d;
pub mod cases;
pub mod io;
