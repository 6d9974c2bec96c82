//! Simulation and parameter estimation for EIT-based optical memories.
//!
//! All internal quantities are in units of the excited-state decay rate Γ
//! (rates, detunings, Rabi frequencies) and 1/Γ (times). See [`units`] and
//! [`config`] for the conversion from laboratory units.

pub mod config;
pub mod estimation;
pub mod fwm;
pub mod error;
pub mod params;
pub mod storage;
pub mod propagation;
pub mod spectra;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};
pub use params::{FieldParams, GaussianPulse, MediumParams, Scheme};
pub use units::Transition;
pub use waveform::{SampledWaveform, TimeGrid};
