#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Spectral Galerkin simulator for the non-autonomous viscoelastic Kirchhoff
//! plate with fading memory, written in its history-variable form
//!
//! ```text
//! u_tt - Δu_tt + a(t) u_t + Δ²u + ∫₀^∞ μ(s) Δ²η^t(s) ds - Δu_t + f(u) = g(x, t)
//! η^t_t = -η^t_s + u_t,        η^t(s) = u(t) - u(t - s)
//! ```
//!
//! on the box `(0, π)^d` with simply supported boundary conditions, together
//! with the energy functionals, dissipation inequalities and attractor
//! diagnostics that go with it.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, configuration and
//! the command line live in the `viscoplate-lab` crate.
//!
//! Module map:
//!
//! * [`spectral`]: sine eigenbasis, norms of `V₀`, `V₁`, `V₂`, transforms.
//! * [`memory`]: exponential kernels, the history field and its weighted norm.
//! * [`dynamics`]: damping, nonlinearity, forcing, the right-hand side, RK4.
//! * [`energy`]: energy, perturbed energy, dissipation checks, decay envelope.
//! * [`attractor`]: difference energy, Hausdorff semidistance, clouds, sweeps.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod attractor;
pub mod dynamics;
pub mod energy;
mod error;
pub(crate) mod math;
pub mod memory;
pub mod spectral;

pub use crate::error::{Error, Result};
