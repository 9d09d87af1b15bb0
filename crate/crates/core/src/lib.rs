//! Noise-driven spin flips between magnetically trapped Zeeman levels.
//!
//! The crate computes transition rates between the trapped |2,2>, |2,1> levels
//! (and loss to the untrapped |2,0>) of a thermal cloud exposed to colored
//! magnetic noise, evolves the resulting population kinetics, and fits
//! relaxation curves and noise spectra.
//!
//! * [`atomic`]: Breit–Rabi levels, coupling strengths, trap potentials.
//! * [`noise`]: spectral-density models.
//! * [`rates`]: reduced phase-space integral, Monte Carlo oracle, closed forms.
//! * [`dynamics`]: rate equations, R∞, protocols and detuning scans.
//! * [`fitting`]: Levenberg–Marquardt fits of relaxation curves and spectra.
//! * [`scenario`]: JSON scenarios and CSV outputs behind the `spinflip` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod atomic;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod noise;
pub mod quadrature;
pub mod rates;
pub mod scenario;

pub use atomic::{AtomSpecies, TransitionChannel, TrapGeometry, ZeemanLevel};
pub use dynamics::{PopulationState, PopulationTrajectory, ProtocolSegment};
pub use error::{Error, Result};
pub use noise::{NoiseSpectrum, ReferenceSpectrumParams, SpectrumComponent};
pub use rates::{RateConfig, RateSet};
