//! Uniformly sampled complex envelopes, grid sizing and spectral transforms.
//!
//! Frequency-domain convention: Ω(t) = (1/2π) ∫ W(ω) e^{−iωt} dω, so that a
//! medium response exp(f(ω)) multiplies W(ω) and a positive group delay
//! shows up as ∂ Im f/∂ω > 0.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{FieldParams, GaussianPulse, MediumParams};
use crate::propagation::{broadening_factor, group_delay};
use crate::spectra::bandwidth_closed_form;

/// Complex envelope sampled on `start + k·dt`, k = 0..len.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWaveform {
    pub start: f64,
    pub dt: f64,
    pub amplitude: Vec<Complex64>,
}

/// Time grid skeleton: start, spacing and a power-of-two sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub dt: f64,
    pub len: usize,
}

/// Sizing knobs for [`make_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GridOptions {
    /// Requested sample count. Must be a power of two and large enough to
    /// satisfy the window and Nyquist constraints.
    pub samples: Option<usize>,
    /// Additional delay beyond D/Ω_c², e.g. the vacuum transit time (1/Γ).
    pub extra_delay: f64,
    /// Extra time appended after the expected output (1/Γ).
    pub extra_tail: f64,
}

/// Largest sample spacing allowed for a pulse of duration `t_p`: the Nyquist
/// frequency exceeds 20 times the spectral FWHM 4 ln2/T_p.
pub fn max_spacing(t_p: f64) -> f64 {
    PI * t_p / (80.0 * LN_2)
}

impl TimeGrid {
    pub fn window(&self) -> f64 {
        self.dt * self.len as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.time(k)).collect()
    }

    /// Frequency spacing 2π/(N dt).
    pub fn domega(&self) -> f64 {
        2.0 * PI / self.window()
    }

    /// Angular frequencies in FFT order (0, +, ..., −).
    pub fn omegas(&self) -> Vec<f64> {
        omega_grid(self.len, self.dt)
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    pub fn sample(&self, pulse: &GaussianPulse) -> SampledWaveform {
        SampledWaveform::from_fn(self, |t| Complex64::new(pulse.amplitude(t), 0.0))
    }
}

pub(crate) fn omega_grid(len: usize, dt: f64) -> Vec<f64> {
    let w = 2.0 * PI / (len as f64 * dt);
    (0..len)
        .map(|k| {
            let ks = if k < len.div_ceil(2) {
                k as f64
            } else {
                k as f64 - len as f64
            };
            ks * w
        })
        .collect()
}

/// Size a time grid for propagating `pulse` through the medium.
///
/// The window covers [t0 − 4T_p, t0 + T_d + 4βT_p] and is long enough that
/// the frequency spacing resolves the EIT window to Δω_EIT/50; the spacing
/// keeps the Nyquist frequency above 20 pulse bandwidths.
pub fn make_grid(
    pulse: &GaussianPulse,
    medium: &MediumParams,
    fields: &FieldParams,
    opts: &GridOptions,
) -> Result<TimeGrid> {
    pulse.validate()?;
    medium.validate()?;
    fields.validate()?;
    let t_p = pulse.t_p;
    let (t_d, beta, bw) = if medium.optical_depth > 0.0 && fields.omega_c > 0.0 {
        let t_d = group_delay(medium.optical_depth, fields.omega_c);
        let beta = broadening_factor(medium.optical_depth, medium.gamma31, t_p, fields.omega_c);
        let bw = bandwidth_closed_form(medium.optical_depth, medium.gamma31, fields.omega_c);
        (t_d, beta, Some(bw))
    } else {
        (0.0, 1.0, None)
    };
    let lead = 4.0 * t_p;
    let span = lead + t_d + opts.extra_delay.max(0.0) + 4.0 * beta * t_p + opts.extra_tail.max(0.0);
    let mut window = span;
    if let Some(bw) = bw.filter(|b| b.is_finite() && *b > 0.0) {
        window = window.max(100.0 * PI / bw);
    }
    let dt_max = max_spacing(t_p);
    let len = match opts.samples {
        Some(n) => {
            if !n.is_power_of_two() {
                return Err(Error::Sizing(format!("sample count {n} is not a power of two")));
            }
            if window / n as f64 > dt_max {
                return Err(Error::Sizing(format!(
                    "{n} samples over a window of {window:.4} give spacing {:.4} > {dt_max:.4}",
                    window / n as f64
                )));
            }
            n
        }
        None => ((window / dt_max).ceil() as usize).max(16).next_power_of_two(),
    };
    let dt = window / len as f64;
    let start = pulse.t0 - lead - 0.5 * (window - span);
    Ok(TimeGrid { start, dt, len })
}

impl SampledWaveform {
    pub fn from_fn(grid: &TimeGrid, f: impl Fn(f64) -> Complex64) -> Self {
        SampledWaveform {
            start: grid.start,
            dt: grid.dt,
            amplitude: (0..grid.len).map(|k| f(grid.time(k))).collect(),
        }
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            start: self.start,
            dt: self.dt,
            len: self.amplitude.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ∫|Ω|² dt by the trapezoid rule.
    pub fn energy(&self) -> f64 {
        trapezoid(&self.intensity(), self.dt)
    }

    /// Energy of the samples in the index range.
    pub fn energy_between(&self, range: std::ops::Range<usize>) -> f64 {
        let i = self.intensity();
        trapezoid(&i[range], self.dt)
    }

    /// Intensity-weighted mean time.
    pub fn centroid(&self) -> Result<f64> {
        let i = self.intensity();
        let e = trapezoid(&i, self.dt);
        if e <= 0.0 {
            return Err(Error::Undefined("centroid of a zero waveform".into()));
        }
        let m: Vec<f64> = i.iter().enumerate().map(|(k, v)| v * self.time(k)).collect();
        Ok(trapezoid(&m, self.dt) / e)
    }

    /// Intensity-weighted standard deviation in time.
    pub fn rms_width(&self) -> Result<f64> {
        let c = self.centroid()?;
        let i = self.intensity();
        let e = trapezoid(&i, self.dt);
        let m: Vec<f64> = i
            .iter()
            .enumerate()
            .map(|(k, v)| v * (self.time(k) - c).powi(2))
            .collect();
        Ok((trapezoid(&m, self.dt) / e).sqrt())
    }

    /// Full width at half maximum of the intensity, with linear
    /// interpolation at the crossings around the global peak.
    pub fn intensity_fwhm(&self) -> Result<f64> {
        let i = self.intensity();
        let t = self.times();
        fwhm_around(&t, &i, argmax(&i))
            .ok_or_else(|| Error::Undefined("intensity never falls to half maximum".into()))
    }

    /// Fraction of the energy in the last `frac` of the window.
    pub fn tail_fraction(&self, frac: f64) -> f64 {
        let n = self.len();
        let k0 = ((1.0 - frac) * n as f64).floor() as usize;
        let total = self.energy();
        if total <= 0.0 {
            return 0.0;
        }
        self.energy_between(k0.min(n.saturating_sub(1))..n) / total
    }

    /// Root-mean-square difference to `other` on the same grid, relative to
    /// the peak amplitude of `other`.
    pub fn relative_rms_error(&self, other: &SampledWaveform) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::invalid("waveform", "length mismatch"));
        }
        let peak = other.amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::Undefined("reference waveform is zero".into()));
        }
        let s: f64 = self
            .amplitude
            .iter()
            .zip(&other.amplitude)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s / self.len() as f64).sqrt() / peak)
    }

    /// Spectrum W(ω_k) = ∫ Ω(t) e^{iω_k t} dt on the FFT frequency grid.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.amplitude.clone();
        FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
        let omegas = omega_grid(self.len(), self.dt);
        buf.iter_mut()
            .zip(omegas)
            .for_each(|(b, w)| *b *= Complex64::from_polar(self.dt, w * self.start));
        buf
    }

    /// Apply a frequency-domain multiplier h(ω) and return the filtered
    /// waveform on the same grid.
    pub fn filter(&self, h: &[Complex64]) -> Result<SampledWaveform> {
        if h.len() != self.len() {
            return Err(Error::invalid("transfer", "length does not match the grid"));
        }
        let n = self.len();
        let mut planner = FftPlanner::new();
        let mut buf = self.amplitude.clone();
        planner.plan_fft_inverse(n).process(&mut buf);
        buf.iter_mut().zip(h).for_each(|(b, f)| *b *= f);
        planner.plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter_mut().for_each(|b| *b *= scale);
        Ok(SampledWaveform {
            start: self.start,
            dt: self.dt,
            amplitude: buf,
        })
    }
}

pub(crate) fn trapezoid(y: &[f64], dx: f64) -> f64 {
    match y.len() {
        0 | 1 => 0.0,
        n => dx * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[n - 1])),
    }
}

pub(crate) fn argmax(y: &[f64]) -> usize {
    y.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// Width between the half-maximum crossings on either side of `peak`.
pub(crate) fn fwhm_around(x: &[f64], y: &[f64], peak: usize) -> Option<f64> {
    let half = 0.5 * y[peak];
    let mut lo = None;
    for k in (0..peak).rev() {
        if y[k] <= half {
            lo = Some(interp(x[k], y[k], x[k + 1], y[k + 1], half));
            break;
        }
    }
    let mut hi = None;
    for k in peak + 1..y.len() {
        if y[k] <= half {
            hi = Some(interp(x[k - 1], y[k - 1], x[k], y[k], half));
            break;
        }
    }
    Some(hi? - lo?)
}

fn interp(x0: f64, y0: f64, x1: f64, y1: f64, y: f64) -> f64 {
    if y1 == y0 {
        x0
    } else {
        x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    }
}
