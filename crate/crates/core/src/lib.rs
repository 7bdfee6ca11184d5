//! Time-only implicit-explicit (IMEX) iteration for semilinear heat equations
//!
//! ```text
//! u_t = u_xx + a_0(x) + a_1(x) u + ... + a_d(x) u^d
//! ```
//!
//! on a truncated real line `[-L, L]`. Each step solves the linear part
//! exactly with the resolvent `(I - h d²/dx²)^{-1}`, realised as an O(M)
//! exponential convolution, and treats the polynomial reaction explicitly:
//!
//! ```text
//! f_{n+1} = (I - h Δ)^{-1} (f_n + h G(f_n))
//! ```
//!
//! Around the scheme sit the quantities needed to check it: the majorant
//! polynomials `g_1`, `g_inf`, the comparison ODE `y' = g_inf(y)` and the
//! sup/L¹ bounds it yields, the slope-error (defect) estimator, and the
//! refinement-family harness that measures pairwise L² gaps against the
//! Grönwall-type bound `4 (ε_i + ε_j) A t exp(2 g_inf'(B) t)`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the companion `imex` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod bounds;
pub mod convergence;
pub mod grid;
pub mod imex;
pub mod ode;
pub mod oracles;
pub mod reaction;
pub mod resolvent;

pub use error::{Error, Result};
pub use grid::{BoundaryMode, GridFunction, GridSpec, Preset};
pub use imex::{ImexTrajectory, imex_step, run_trajectory};
pub use reaction::{MajorantPolynomial, NormKind, ReactionCoefficients};
pub use resolvent::{ResolventParams, apply_resolvent};
