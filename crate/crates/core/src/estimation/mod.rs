//! Parameter extraction from EIT spectra and slow-light traces, and the
//! empirical dependence of the excited-state decoherence on optical depth.

mod fit;
mod lsq;
mod synth;

pub use fit::{
    fit_joint, fit_spectrum, model_transmission, profile_gamma31, Estimate, FitOptions, FitResult, IntensityTrace,
    MeasuredDataset, ProfilePoint, SlowLightData, SlowLightFeatures, SpectrumData, SpectrumFit, MIN_SPECTRUM_POINTS,
};
pub use synth::{synth_dataset, synth_grid, NoiseModel};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonneg, Result};

/// Which empirical γ31(D) polynomial to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gamma31Scheme {
    D1,
    /// Shared value for γ31 and γ41.
    D2,
}

/// Excited-state decoherence versus optical depth (units of Γ), capturing
/// density-dependent broadening phenomenologically.
pub fn gamma31_model(optical_depth: f64, scheme: Gamma31Scheme) -> Result<f64> {
    ensure_nonneg("optical_depth", optical_depth)?;
    let d = optical_depth;
    Ok(match scheme {
        Gamma31Scheme::D1 => 0.70 + 4.20e-5 * d + 4.87e-7 * d * d,
        Gamma31Scheme::D2 => 0.70 + 3.90e-4 * d + 1.47e-6 * d * d,
    })
}
