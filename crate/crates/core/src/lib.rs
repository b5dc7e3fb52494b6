//! Simulation of a closed elastic string immersed in a 2-D viscous fluid,
//! built on the mild (Duhamel) formulation of the coupled system.
//!
//! The string lives on a spectral node grid ([`curve`]), its Stokes velocity
//! comes from boundary integrals ([`bie`]), and the inertial and viscous
//! corrections live on a periodic pseudo-spectral box ([`grid`]). The
//! [`stepper`] advances everything with exponential integrators and
//! [`diagnostics`] tracks energy, area and breakdown monitors.

// `!(x <= bound)` is used on purpose so that NaN trips the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bie;
pub mod config;
pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod experiments;
mod fft;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod stepper;

pub use error::{Error, Result};
