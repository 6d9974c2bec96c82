//! Conversion between laboratory units and the Γ-normalized units used
//! internally.
//!
//! Internally every rate, detuning and Rabi frequency is expressed in units
//! of the excited-state decay rate Γ and every time in units of 1/Γ. SI (or
//! MHz/ns/GHz) values only appear at the configuration and report boundary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Cesium ground-state hyperfine splitting (GHz).
pub const CS_HYPERFINE_GHZ: f64 = 9.192_631_770;

/// An optical transition: spontaneous decay rate and wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Spontaneous decay rate Γ (rad/s).
    pub gamma_sp: f64,
    /// Vacuum wavelength (m).
    pub wavelength: f64,
}

impl Transition {
    /// Cesium D1 line (6P1/2).
    pub const CS_D1: Transition = Transition {
        gamma_sp: 2.0 * PI * 4.575e6,
        wavelength: 894.6e-9,
    };

    /// Cesium D2 line (6P3/2).
    pub const CS_D2: Transition = Transition {
        gamma_sp: 2.0 * PI * 5.234e6,
        wavelength: 852.0e-9,
    };

    pub fn new(gamma_sp: f64, wavelength: f64) -> Result<Self> {
        let t = Transition {
            gamma_sp,
            wavelength,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("transition.gamma_sp", self.gamma_sp)?;
        ensure_positive("transition.wavelength", self.wavelength)
    }

    /// The internal time unit 1/Γ in seconds.
    pub fn time_unit(&self) -> f64 {
        1.0 / self.gamma_sp
    }

    /// Vacuum wavenumber 2π/λ (1/m).
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// A frequency `f` given as 2π × `mhz` MHz, expressed in units of Γ.
    pub fn rate_from_mhz(&self, mhz: f64) -> f64 {
        2.0 * PI * mhz * 1e6 / self.gamma_sp
    }

    pub fn rate_to_mhz(&self, rate: f64) -> f64 {
        rate * self.gamma_sp / (2.0 * PI * 1e6)
    }

    pub fn rate_from_ghz(&self, ghz: f64) -> f64 {
        self.rate_from_mhz(ghz * 1e3)
    }

    pub fn rate_to_ghz(&self, rate: f64) -> f64 {
        self.rate_to_mhz(rate) * 1e-3
    }

    /// A duration in seconds, expressed in units of 1/Γ.
    pub fn time_from_seconds(&self, seconds: f64) -> f64 {
        seconds * self.gamma_sp
    }

    pub fn time_to_seconds(&self, t: f64) -> f64 {
        t / self.gamma_sp
    }

    pub fn time_from_ns(&self, ns: f64) -> f64 {
        self.time_from_seconds(ns * 1e-9)
    }

    pub fn time_to_ns(&self, t: f64) -> f64 {
        self.time_to_seconds(t) * 1e9
    }

    pub fn time_from_us(&self, us: f64) -> f64 {
        self.time_from_seconds(us * 1e-6)
    }

    pub fn time_to_us(&self, t: f64) -> f64 {
        self.time_to_seconds(t) * 1e6
    }

    /// Light transit time L/c through a medium of `length` meters, in 1/Γ.
    pub fn transit_time(&self, length: f64) -> f64 {
        self.time_from_seconds(length / SPEED_OF_LIGHT)
    }
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}
