//! Probe-pulse propagation through the EIT medium: exact spectral solution,
//! analytic Gaussian slow light and the transmission efficiency.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonneg, ensure_positive, Error, Result};
use crate::params::{FieldParams, GaussianPulse, MediumParams};
use crate::spectra::{bandwidth_closed_form, probe_response, ControlDetuningMode};
use crate::waveform::{SampledWaveform, TimeGrid};

/// Slow-light group delay D/Ω_c² (1/Γ), without the vacuum transit time.
pub fn group_delay(optical_depth: f64, omega_c: f64) -> f64 {
    optical_depth / (omega_c * omega_c)
}

/// Gaussian broadening factor β = √(1 + 32 ln2·Dγ31/(T_p²Ω_c⁴)).
pub fn broadening_factor(optical_depth: f64, gamma31: f64, t_p: f64, omega_c: f64) -> f64 {
    (1.0 + 32.0 * LN_2 * optical_depth * gamma31 / (t_p * t_p * omega_c.powi(4))).sqrt()
}

/// Control Rabi frequency giving delay ratio ζ = T_d/T_p at optical depth D.
pub fn control_for_zeta(optical_depth: f64, zeta: f64, t_p: f64) -> f64 {
    (optical_depth / (zeta * t_p)).sqrt()
}

/// Slow-light energy transmission
/// η = e^{−2γ21 T_d}/√(1 + 32 ln2·γ31 ζ²/D), T_d = ζ T_p.
///
/// The same value follows from the EIT bandwidth: the denominator equals
/// √(1 + 16 ln²2/(T_p Δω_EIT)²) at Ω_c² = D/T_d. Both forms are evaluated
/// and checked against each other.
pub fn eta_tran(optical_depth: f64, zeta: f64, gamma21: f64, gamma31: f64, t_p: f64) -> Result<f64> {
    ensure_positive("optical_depth", optical_depth)?;
    ensure_nonneg("zeta", zeta)?;
    ensure_nonneg("gamma21", gamma21)?;
    ensure_nonneg("gamma31", gamma31)?;
    ensure_positive("t_p", t_p)?;
    let t_d = zeta * t_p;
    let decay = (-2.0 * gamma21 * t_d).exp();
    let direct = decay / (1.0 + 32.0 * LN_2 * gamma31 * zeta * zeta / optical_depth).sqrt();
    if zeta == 0.0 || gamma31 == 0.0 {
        return Ok(direct);
    }
    let omega_c = control_for_zeta(optical_depth, zeta, t_p);
    let bw = bandwidth_closed_form(optical_depth, gamma31, omega_c);
    let via_bandwidth = decay / (1.0 + 16.0 * LN_2 * LN_2 / (t_p * bw).powi(2)).sqrt();
    debug_assert!((direct - via_bandwidth).abs() <= 1e-12 * direct.max(1e-300));
    Ok(direct)
}

/// Options for the spectral propagation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PropagationOptions {
    /// Probe carrier detuning δp.
    pub delta_p: f64,
    /// Vacuum transit time L/c in 1/Γ; zero drops the pure-delay phase.
    pub transit_delay: f64,
    pub detuning_mode: ControlDetuningMode,
}

/// exp(f(ω) + iω·L/c) at each sideband frequency.
pub fn transfer_function(
    omegas: &[f64],
    medium: &MediumParams,
    fields: &FieldParams,
    opts: &PropagationOptions,
) -> Result<Vec<Complex64>> {
    medium.validate()?;
    fields.validate()?;
    omegas
        .iter()
        .map(|&w| {
            let f = probe_response(w, opts.delta_p, medium, fields, opts.detuning_mode)?;
            Ok((f + Complex64::new(0.0, w * opts.transit_delay)).exp())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub output: SampledWaveform,
    /// Centroid delay of the output relative to the input (1/Γ).
    pub t_d: f64,
    /// Ratio of output to input RMS duration.
    pub beta: f64,
    pub eta_tran: f64,
    /// t_d divided by the input intensity FWHM.
    pub zeta: f64,
}

/// Largest fraction of the output energy allowed in the last 5% of the
/// window before the run is rejected as wrapped around.
pub const ALIAS_LIMIT: f64 = 1e-4;

/// Propagate a sampled input through the medium by multiplying its spectrum
/// with the transfer function.
pub fn propagate_pulse(
    input: &SampledWaveform,
    medium: &MediumParams,
    fields: &FieldParams,
    opts: &PropagationOptions,
) -> Result<PropagationResult> {
    if input.len() < 2 {
        return Err(Error::invalid("input", "needs at least two samples"));
    }
    let h = transfer_function(&input.grid().omegas(), medium, fields, opts)?;
    let output = input.filter(&h)?;
    let e_in = input.energy();
    if e_in <= 0.0 {
        return Err(Error::Undefined("input pulse carries no energy".into()));
    }
    let e_out = output.energy();
    let eta_tran = e_out / e_in;
    if eta_tran > 0.0 {
        let tail = output.tail_fraction(0.05);
        if tail > ALIAS_LIMIT {
            return Err(Error::Window(format!(
                "{:.2e} of the output energy lies in the last 5% of the window",
                tail
            )));
        }
    }
    let (t_d, beta) = if e_out > 0.0 {
        (
            output.centroid()? - input.centroid()?,
            output.rms_width()? / input.rms_width()?,
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let zeta = t_d / input.intensity_fwhm()?;
    Ok(PropagationResult {
        output,
        t_d,
        beta,
        eta_tran,
        zeta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSlowLight {
    pub waveform: SampledWaveform,
    pub t_d: f64,
    pub beta: f64,
    pub eta_tran: f64,
    pub warning: Option<String>,
}

/// Closed-form Gaussian output in the quadratic-dispersion approximation:
/// Ω_out(t) = (Ω_p0/β)·e^{−γ21 T_d}·exp(−2 ln2 ((t − t0 − T_d)/(βT_p))²).
pub fn analytic_slow_light(
    pulse: &GaussianPulse,
    medium: &MediumParams,
    fields: &FieldParams,
    grid: &TimeGrid,
    transit_delay: f64,
) -> Result<AnalyticSlowLight> {
    pulse.validate()?;
    medium.validate()?;
    fields.validate()?;
    if fields.omega_c == 0.0 {
        return Err(Error::Undefined("analytic slow light needs a control field".into()));
    }
    if fields.delta_c != 0.0 {
        return Err(Error::invalid("delta_c", "analytic slow light assumes δc = 0"));
    }
    let warning = (fields.omega_c.powi(2) < 40.0 * medium.gamma21 * medium.gamma31).then(|| {
        "Ω_c² is not large against 4γ21γ31; the quadratic expansion is inaccurate".to_string()
    });
    let d = medium.optical_depth;
    let t_slow = group_delay(d, fields.omega_c);
    let beta = broadening_factor(d, medium.gamma31, pulse.t_p, fields.omega_c);
    let amp = pulse.omega_p0 / beta * (-medium.gamma21 * t_slow).exp();
    let t_d = t_slow + transit_delay;
    let width = beta * pulse.t_p;
    let waveform = SampledWaveform::from_fn(grid, |t| {
        let x = (t - pulse.t0 - t_d) / width;
        Complex64::new(amp * (-2.0 * LN_2 * x * x).exp(), 0.0)
    });
    Ok(AnalyticSlowLight {
        waveform,
        t_d,
        beta,
        eta_tran: (-2.0 * medium.gamma21 * t_slow).exp() / beta,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::lambda_response;
    use crate::waveform::{make_grid, GridOptions};

    #[test]
    fn asymptotic_scaling() {
        let e = eta_tran(1e4, 2.7, 0.0, 0.5, 5.95).unwrap();
        assert!((e - 0.995_982).abs() < 1e-6, "{e}");
        assert!((e - (1.0 - 40.0 / 1e4)).abs() < 2e-4);
    }

    #[test]
    fn moderate_depth_value() {
        let e = eta_tran(100.0, 2.7, 0.0, 0.5, 5.95).unwrap();
        assert!((e - 0.743_605).abs() < 1e-6, "{e}");
    }

    #[test]
    fn decoherence_prefactor() {
        let a = eta_tran(1e12, 2.7, 1e-4, 0.5, 5.95).unwrap();
        assert!((a - (-2.0e-4_f64 * 2.7 * 5.95).exp()).abs() < 1e-9);
        assert!((a - 0.996_792).abs() < 1e-6);
    }

    #[test]
    fn rejects_zero_depth() {
        assert!(eta_tran(0.0, 2.7, 0.0, 0.5, 5.95).unwrap_err().is_validation());
    }

    #[test]
    fn transfer_matches_response() {
        let m = MediumParams::lambda(200.0, 0.001, 0.8);
        let f = FieldParams::control(3.0);
        let omegas: Vec<f64> = (0..41).map(|k| -2.0 + 0.1 * k as f64).collect();
        let h = transfer_function(&omegas, &m, &f, &PropagationOptions::default()).unwrap();
        for (w, hk) in omegas.iter().zip(&h) {
            let r = lambda_response(*w, 0.0, &m, &f).unwrap();
            assert!((hk.norm_sqr() - (2.0 * r.re).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn free_propagation_is_pure_delay() {
        let m = MediumParams::lambda(0.0, 0.0, 0.5);
        let f = FieldParams::control(2.0);
        let p = GaussianPulse::new(1.0, 5.95, 0.0).unwrap();
        let g = make_grid(&p, &m, &f, &GridOptions::default()).unwrap();
        let opts = PropagationOptions {
            transit_delay: 0.5,
            ..Default::default()
        };
        let r = propagate_pulse(&g.sample(&p), &m, &f, &opts).unwrap();
        assert!((r.eta_tran - 1.0).abs() < 1e-10);
        assert!((r.t_d - 0.5).abs() < 1e-9);
    }

    #[test]
    fn numeric_matches_analytic_gaussian() {
        let m = MediumParams::lambda(400.0, 0.0, 0.5);
        let p = GaussianPulse::new(1.0, 8.0, 0.0).unwrap();
        let f = FieldParams::control(control_for_zeta(400.0, 2.0, 8.0));
        let g = make_grid(&p, &m, &f, &GridOptions::default()).unwrap();
        let num = propagate_pulse(&g.sample(&p), &m, &f, &PropagationOptions::default()).unwrap();
        let ana = analytic_slow_light(&p, &m, &f, &g, 0.0).unwrap();
        let rms = num.output.relative_rms_error(&ana.waveform).unwrap();
        assert!(rms < 5e-3, "{rms}");
        assert!((num.eta_tran - ana.eta_tran).abs() < 0.01);
    }
}
