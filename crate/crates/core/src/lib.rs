//! Traveling wavefronts of the delayed monostable reaction-diffusion equation
//!
//! ```text
//! u_t = u_xx - u + g(u(t - h, x))
//! ```
//!
//! The crate computes the admissible speed interval `[c_*, c^*]`, the wave
//! profiles themselves (as fixed points of the Green-function integral
//! operator of the profile equation `eps x'' - x' - x + g(x(t - h)) = 0`,
//! `eps = 1/c^2`), classifies their approach to the positive equilibrium and
//! cross-checks the minimal speed against a direct simulation of the PDE.
//!
//! Module map:
//!
//! * [`birthfn`] birth functions `g`, derivatives, structural hypotheses.
//! * [`charroots`] roots of `eps z^2 - z - 1 + a exp(-z h)`.
//! * [`speeds`] the speed interval and its upper endpoints.
//! * [`profile`] the integral operator, the profile solver and its checks.
//! * [`pdesim`] method-of-lines simulation with a history ring buffer.

pub mod birthfn;
pub mod charroots;
mod error;
mod numeric;
mod ode;
pub mod pdesim;
pub mod profile;
pub mod speeds;

pub use error::{Error, Result};
