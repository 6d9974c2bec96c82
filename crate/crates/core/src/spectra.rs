//! Steady-state probe response and transmission spectra of the Λ and N-type
//! schemes.
//!
//! The response f(ω) is the single-pass exponent of the probe field at the
//! end of the medium: W(ω, L) = W(ω, 0)·exp(f(ω)). Intensity transmission is
//! exp(2 Re f).

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::params::{FieldParams, MediumParams, Scheme};
use crate::waveform::{argmax, fwhm_around};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// How the control detuning enters the N-type response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlDetuningMode {
    /// δc enters δ2 and δ3 directly.
    #[default]
    Direct,
    /// δc is set to zero inside the N-type response; the light shift is then
    /// carried by the fourth level alone.
    Zero,
}

/// Probe transmission versus probe detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub delta_p: Vec<f64>,
    pub transmission: Vec<f64>,
    pub peak_transparency: f64,
    /// Detuning of the transparency peak (parabolic refinement of the grid
    /// maximum).
    pub peak_detuning: f64,
    /// Numerically extracted transparency-window FWHM, if both half-maximum
    /// crossings lie on the grid.
    pub fwhm_eit: Option<f64>,
}

/// Λ-system response at sideband frequency `omega` for probe detuning
/// `delta_p`.
pub fn lambda_response(omega: f64, delta_p: f64, medium: &MediumParams, fields: &FieldParams) -> Result<Complex64> {
    let d = medium.optical_depth;
    if d == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let a = I * (omega + delta_p) - medium.gamma31;
    if fields.omega_c == 0.0 {
        return two_level(d, a);
    }
    let b = I * (omega + delta_p - fields.delta_c) - medium.gamma21;
    let wc2 = 0.25 * fields.omega_c * fields.omega_c;
    let den = a * b + wc2;
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular(format!(
            "Λ response pole at omega = {omega}, delta_p = {delta_p}"
        )));
    }
    Ok(0.25 * d * b / den)
}

fn two_level(d: f64, a: Complex64) -> Result<Complex64> {
    if a == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular("undamped two-level resonance".into()));
    }
    Ok(0.25 * d / a)
}

/// N-type response: the Λ system plus the control driving |2>→|4> with Rabi
/// frequency ε·Ω_c at detuning δs.
pub fn ntype_response(
    omega: f64,
    delta_p: f64,
    medium: &MediumParams,
    fields: &FieldParams,
    mode: ControlDetuningMode,
) -> Result<Complex64> {
    let d = medium.optical_depth;
    if d == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let delta_c = match mode {
        ControlDetuningMode::Direct => fields.delta_c,
        ControlDetuningMode::Zero => 0.0,
    };
    let wp = omega + delta_p;
    let a = I * wp - medium.gamma31;
    if fields.omega_c == 0.0 {
        return two_level(d, a);
    }
    let b = I * (wp - delta_c) - medium.gamma21;
    let c = I * (wp - delta_c + medium.delta_s) - medium.gamma41;
    let ws = medium.epsilon_switch * fields.omega_c;
    let num = b * c + 0.25 * ws * ws;
    let den = a * num + 0.25 * fields.omega_c * fields.omega_c * c;
    if den == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular(format!(
            "N-type response pole at omega = {omega}, delta_p = {delta_p}"
        )));
    }
    Ok(0.25 * d * num / den)
}

/// Response of the scheme configured in `medium` (Λ for the Λ and double-Λ
/// schemes; the four-wave-mixing channel lives in [`crate::fwm`]).
pub fn probe_response(
    omega: f64,
    delta_p: f64,
    medium: &MediumParams,
    fields: &FieldParams,
    mode: ControlDetuningMode,
) -> Result<Complex64> {
    match medium.scheme {
        Scheme::NTypeD2 => ntype_response(omega, delta_p, medium, fields, mode),
        _ => lambda_response(omega, delta_p, medium, fields),
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "detuning grid is empty"));
    }
    for &x in grid {
        ensure_finite("grid", x)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "detunings must be strictly increasing"));
    }
    Ok(())
}

fn spectrum_from(grid: &[f64], f: impl Fn(f64) -> Result<Complex64> + Sync, center: f64) -> Result<SpectrumResult> {
    validate_grid(grid)?;
    let transmission = grid
        .par_iter()
        .map(|&dp| f(dp).map(|r| (2.0 * r.re).exp()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(grid.to_vec(), transmission, center))
}

/// Build a [`SpectrumResult`] from samples, locating the transparency peak by
/// hill climbing from the grid point nearest `center`.
pub fn summarize(delta_p: Vec<f64>, transmission: Vec<f64>, center: f64) -> SpectrumResult {
    let start = nearest_index(&delta_p, center);
    let peak = hill_climb(&transmission, start);
    let peak_detuning = parabolic_peak(&delta_p, &transmission, peak);
    let fwhm_eit = fwhm_around(&delta_p, &transmission, peak);
    let peak_transparency = transmission[argmax(&transmission)];
    SpectrumResult {
        delta_p,
        transmission,
        peak_transparency,
        peak_detuning,
        fwhm_eit,
    }
}

fn nearest_index(x: &[f64], v: f64) -> usize {
    x.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bd), (i, &xi)| {
            let d = (xi - v).abs();
            if d < bd {
                (i, d)
            } else {
                (bi, bd)
            }
        })
        .0
}

fn hill_climb(y: &[f64], mut k: usize) -> usize {
    loop {
        let left = k.checked_sub(1).map(|j| y[j]).unwrap_or(f64::NEG_INFINITY);
        let right = y.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if right > y[k] && right >= left {
            k += 1;
        } else if left > y[k] {
            k -= 1;
        } else {
            return k;
        }
    }
}

/// Vertex of the parabola through the peak sample and its neighbours.
pub fn parabolic_peak(x: &[f64], y: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= x.len() {
        return x[k];
    }
    let (x0, x1, x2) = (x[k - 1], x[k], x[k + 1]);
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let d0 = (y1 - y0) / (x1 - x0);
    let d1 = (y2 - y1) / (x2 - x1);
    let curv = (d1 - d0) / (x2 - x0);
    if curv >= 0.0 {
        return x1;
    }
    let v = 0.5 * (x0 + x1) - 0.5 * d0 / curv;
    v.clamp(x0, x2)
}

/// Λ-system intensity transmission exp(2 Re f) on a probe-detuning grid.
pub fn eit_spectrum(grid: &[f64], medium: &MediumParams, fields: &FieldParams) -> Result<SpectrumResult> {
    medium.validate()?;
    fields.validate()?;
    spectrum_from(grid, |dp| lambda_response(0.0, dp, medium, fields), fields.delta_c)
}

/// N-type intensity transmission on a probe-detuning grid.
pub fn ntype_spectrum(
    grid: &[f64],
    medium: &MediumParams,
    fields: &FieldParams,
    mode: ControlDetuningMode,
) -> Result<SpectrumResult> {
    medium.validate()?;
    fields.validate()?;
    if medium.delta_s == 0.0 {
        return Err(Error::invalid("delta_s", "must be nonzero for the N-type response"));
    }
    // The window sits where δ2,eff vanishes.
    let center = -ntype_effective(medium, fields)?.delta2_eff;
    spectrum_from(grid, |dp| ntype_response(0.0, dp, medium, fields, mode), center)
}

/// Closed-form EIT window FWHM √(ln2/2)·Ω_c²/√(Dγ31).
pub fn bandwidth_closed_form(optical_depth: f64, gamma31: f64, omega_c: f64) -> f64 {
    (LN_2 / 2.0).sqrt() * omega_c * omega_c / (optical_depth * gamma31).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth {
    pub closed_form: f64,
    /// Half-maximum width of the computed Λ spectrum.
    pub numeric: Option<f64>,
}

/// EIT bandwidth: closed form plus the numeric FWHM of the Λ spectrum.
pub fn eit_bandwidth(medium: &MediumParams, fields: &FieldParams) -> Result<Bandwidth> {
    medium.validate()?;
    fields.validate()?;
    if medium.optical_depth == 0.0 {
        return Err(Error::Undefined("EIT bandwidth at zero optical depth".into()));
    }
    if fields.omega_c == 0.0 || medium.gamma31 == 0.0 {
        return Err(Error::Undefined("EIT bandwidth needs Ω_c > 0 and γ31 > 0".into()));
    }
    let closed_form = bandwidth_closed_form(medium.optical_depth, medium.gamma31, fields.omega_c);
    let mut half_span = 4.0 * closed_form;
    let mut numeric = None;
    for _ in 0..6 {
        let n = 4001;
        let grid: Vec<f64> = (0..n)
            .map(|k| fields.delta_c - half_span + 2.0 * half_span * k as f64 / (n - 1) as f64)
            .collect();
        let s = eit_spectrum(&grid, medium, fields)?;
        if let Some(w) = s.fwhm_eit {
            numeric = Some(w);
            break;
        }
        half_span *= 4.0;
    }
    Ok(Bandwidth { closed_form, numeric })
}

/// Default detuning grid: 801 points over [−6, 6] plus points spaced by
/// Δω_EIT/50 across ±2Δω_EIT around the expected transparency peak.
pub fn default_grid(medium: &MediumParams, fields: &FieldParams) -> Vec<f64> {
    let mut g: Vec<f64> = (0..801).map(|k| -6.0 + 12.0 * k as f64 / 800.0).collect();
    if medium.optical_depth > 0.0 && fields.omega_c > 0.0 && medium.gamma31 > 0.0 {
        let bw = bandwidth_closed_form(medium.optical_depth, medium.gamma31, fields.omega_c);
        let mut center = fields.delta_c;
        if medium.scheme == Scheme::NTypeD2 && medium.delta_s != 0.0 {
            let ws = medium.epsilon_switch * fields.omega_c;
            center += ws * ws / (4.0 * medium.delta_s);
        }
        let step = bw / 50.0;
        let n = 200;
        g.extend((0..=n).map(|k| center - 2.0 * bw + k as f64 * step));
    }
    g.retain(|x| x.is_finite());
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    g
}

/// Effective two-photon detuning and ground-state decoherence of the N-type
/// scheme after eliminating the far-detuned fourth level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NTypeEffective {
    pub delta2_eff: f64,
    pub gamma21_eff: f64,
    /// Set when |δs| is not at least ten times the switching Rabi frequency.
    pub warning: Option<String>,
}

/// δ2,eff = δ2 − Ω_s²/(4δs) and γ21,eff = γ21 + Ω_s²γ41/(4δs²), with
/// δ2 = −δc at the probe resonance.
pub fn ntype_effective(medium: &MediumParams, fields: &FieldParams) -> Result<NTypeEffective> {
    ntype_effective_at(medium, fields, 0.0)
}

/// As [`ntype_effective`] at probe detuning `delta_p` (δ2 = δp − δc).
pub fn ntype_effective_at(medium: &MediumParams, fields: &FieldParams, delta_p: f64) -> Result<NTypeEffective> {
    if medium.delta_s == 0.0 {
        return Err(Error::Undefined("effective N-type quantities need δs ≠ 0".into()));
    }
    let ws = medium.epsilon_switch * fields.omega_c;
    let ds = medium.delta_s;
    let warning = if ws > 0.0 && ds.abs() / ws < 10.0 {
        Some(format!("|δs|/Ω_s = {:.2} is below 10; elimination of the fourth level is approximate", ds.abs() / ws))
    } else {
        None
    };
    Ok(NTypeEffective {
        delta2_eff: delta_p - fields.delta_c - ws * ws / (4.0 * ds),
        gamma21_eff: medium.gamma21 + ws * ws * medium.gamma41 / (4.0 * ds * ds),
        warning,
    })
}
