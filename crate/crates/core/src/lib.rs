//! Desk-scale simulator and analysis toolkit for a fiber-coupled
//! single-atom optical tweezer operated as a pulsed single-photon source.
//!
//! The crate models the full measurement chain of such an experiment:
//!
//! - [`trap`] — Gaussian-beam dipole trap depth and frequencies,
//! - [`chop`] — classical motion in the square-wave-chopped trap,
//! - [`telegraph`] — blockaded loading, fluorescence count traces and
//!   compound-Poisson histogram fits,
//! - [`emitter`] — optical Bloch equations and quantum-jump Monte Carlo
//!   for the pulsed excitation chain,
//! - [`photon`] — detector timestamp streams and Hanbury-Brown–Twiss
//!   correlation analysis,
//! - [`budget`] — timing-sequence validation and the photon-flux /
//!   spectral-brightness budget.

pub mod budget;
pub mod chop;
pub mod constants;
pub mod emitter;
pub mod error;
pub mod io;
pub mod photon;
pub mod species;
pub mod telegraph;
pub mod trap;

pub use error::{Error, Result};
pub use species::AtomSpecies;
