//! Synthetic datasets from the forward models.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::fit::{IntensityTrace, MeasuredDataset, SlowLightData, SpectrumData};
use crate::error::{ensure_nonneg, ensure_positive, Result};
use crate::params::{FieldParams, GaussianPulse, MediumParams};
use crate::propagation::analytic_slow_light;
use crate::spectra::{probe_response, ControlDetuningMode};
use crate::waveform::{make_grid, GridOptions};

/// Gaussian measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Absolute standard deviation of each transmission sample.
    pub spectrum_sigma: f64,
    /// Standard deviation of the output trace relative to its peak.
    pub trace_relative: f64,
    pub seed: u64,
    /// When false the stated σ are recorded but no noise is drawn.
    pub add_noise: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            spectrum_sigma: 0.01,
            trace_relative: 0.01,
            seed: 0,
            add_noise: true,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            add_noise: false,
            ..Default::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        NoiseModel { seed, ..self }
    }
}

/// Default probe-detuning grid: 601 points over δc ± max(15, 2.5Ω_c).
pub fn synth_grid(fields: &FieldParams) -> Vec<f64> {
    let half = (2.5 * fields.omega_c).max(15.0);
    (0..601).map(|k| fields.delta_c - half + 2.0 * half * k as f64 / 600.0).collect()
}

/// Spectrum from the scheme's response and an output trace from the
/// analytic Gaussian slow-light model, plus seeded Gaussian noise.
///
/// The trace model assumes a resonant control, so δc only enters the
/// spectrum.
pub fn synth_dataset(
    medium: &MediumParams,
    fields: &FieldParams,
    t_p: f64,
    noise: &NoiseModel,
    grid: Option<Vec<f64>>,
) -> Result<MeasuredDataset> {
    medium.validate()?;
    fields.validate()?;
    ensure_positive("t_p", t_p)?;
    ensure_positive("spectrum_sigma", noise.spectrum_sigma)?;
    ensure_nonneg("trace_relative", noise.trace_relative)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");

    let delta_p = grid.unwrap_or_else(|| synth_grid(fields));
    let mut transmission = delta_p
        .iter()
        .map(|&dp| probe_response(0.0, dp, medium, fields, ControlDetuningMode::Direct).map(|f| (2.0 * f.re).exp()))
        .collect::<Result<Vec<f64>>>()?;
    if noise.add_noise {
        for t in &mut transmission {
            *t += noise.spectrum_sigma * unit.sample(&mut rng);
        }
    }
    let spectrum = SpectrumData::uniform(delta_p, transmission, noise.spectrum_sigma);

    let pulse = GaussianPulse::new(1.0, t_p, 0.0)?;
    let resonant = fields.with_delta_c(0.0);
    let lambda = MediumParams::lambda(medium.optical_depth, medium.gamma21, medium.gamma31);
    let tg = make_grid(&pulse, &lambda, &resonant, &GridOptions::default())?;
    let out = analytic_slow_light(&pulse, &lambda, &resonant, &tg, 0.0)?;
    let mut output = out.waveform.intensity();
    let peak = output.iter().copied().fold(0.0, f64::max);
    let sigma = (noise.trace_relative * peak).max(1e-12 * peak.max(1e-300));
    if noise.add_noise {
        for v in &mut output {
            *v += sigma * unit.sample(&mut rng);
        }
    }
    let input = tg.sample(&pulse).intensity();
    Ok(MeasuredDataset {
        scheme: medium.scheme,
        t_p,
        spectrum,
        slowlight: Some(SlowLightData {
            input: IntensityTrace {
                start: tg.start,
                dt: tg.dt,
                intensity: input,
            },
            output: IntensityTrace {
                start: tg.start,
                dt: tg.dt,
                intensity: output,
            },
            sigma,
            transit_delay: 0.0,
        }),
        delta_s: medium.delta_s,
        epsilon_switch: medium.epsilon_switch,
    })
}
