//! Spectrum fits, slow-light feature extraction and the joint inversion.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lsq::{jacobian, minimize, Solution};
use crate::error::{ensure_positive, Error, Result};
use crate::params::{default_epsilon_switch, FieldParams, MediumParams, Scheme};
use crate::spectra::{probe_response, summarize, ControlDetuningMode};

/// Transmission samples with per-point standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumData {
    pub delta_p: Vec<f64>,
    pub transmission: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Minimum number of spectrum points accepted by the fits.
pub const MIN_SPECTRUM_POINTS: usize = 20;

impl SpectrumData {
    /// Points with a common uncertainty.
    pub fn uniform(delta_p: Vec<f64>, transmission: Vec<f64>, sigma: f64) -> Self {
        let n = delta_p.len();
        SpectrumData {
            delta_p,
            transmission,
            sigma: vec![sigma; n],
        }
    }

    pub fn len(&self) -> usize {
        self.delta_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_p.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.delta_p.len();
        if self.transmission.len() != n || self.sigma.len() != n {
            return Err(Error::invalid("spectrum", "columns differ in length"));
        }
        if n < MIN_SPECTRUM_POINTS {
            return Err(Error::invalid(
                "spectrum",
                format!("needs at least {MIN_SPECTRUM_POINTS} points, got {n}"),
            ));
        }
        if self.delta_p.iter().chain(&self.transmission).any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectrum", "contains non-finite values"));
        }
        if self.sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("sigma", "all uncertainties must be positive"));
        }
        Ok(())
    }

    /// Copy sorted by detuning.
    fn sorted(&self) -> (Vec<f64>, Vec<f64>) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.delta_p[a].total_cmp(&self.delta_p[b]));
        (
            idx.iter().map(|&k| self.delta_p[k]).collect(),
            idx.iter().map(|&k| self.transmission[k]).collect(),
        )
    }
}

/// Uniformly sampled intensity record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityTrace {
    pub start: f64,
    pub dt: f64,
    pub intensity: Vec<f64>,
}

impl IntensityTrace {
    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }

    fn validate(&self, name: &str) -> Result<()> {
        ensure_positive(name, self.dt)?;
        if self.intensity.len() < 8 || self.intensity.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(name, "needs at least 8 finite samples"));
        }
        Ok(())
    }
}

/// Output slow-light trace with the input reference recorded without atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowLightData {
    pub input: IntensityTrace,
    pub output: IntensityTrace,
    /// Standard deviation of the output samples.
    pub sigma: f64,
    /// Vacuum transit time subtracted from the measured delay.
    #[serde(default)]
    pub transit_delay: f64,
}

/// Data for one joint fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredDataset {
    pub scheme: Scheme,
    /// Nominal input intensity FWHM (1/Γ).
    pub t_p: f64,
    pub spectrum: SpectrumData,
    pub slowlight: Option<SlowLightData>,
    /// Switching detuning for N-type spectra.
    #[serde(default)]
    pub delta_s: f64,
    #[serde(default = "default_epsilon_switch")]
    pub epsilon_switch: f64,
}

impl MeasuredDataset {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("t_p", self.t_p)?;
        self.spectrum.validate()?;
        if self.scheme == Scheme::NTypeD2 && self.delta_s == 0.0 {
            return Err(Error::invalid("delta_s", "N-type spectra need the switching detuning"));
        }
        if let Some(s) = &self.slowlight {
            s.input.validate("input")?;
            s.output.validate("output")?;
            ensure_positive("trace sigma", s.sigma)?;
        }
        Ok(())
    }
}

/// A value with its 2σ half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub interval: f64,
}

impl Estimate {
    fn from_cov(value: f64, var: f64) -> Self {
        Estimate {
            value,
            interval: 2.0 * var.max(0.0).sqrt(),
        }
    }

    /// True when `truth` lies within the 2σ interval.
    pub fn covers(&self, truth: f64) -> bool {
        (self.value - truth).abs() <= self.interval
    }
}

/// Settings shared by the fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Fix γ31 instead of inferring it from the slow-light broadening.
    pub gamma31: Option<f64>,
    /// γ31 assumed for the first spectrum fit.
    pub gamma31_seed: f64,
    pub seed: u64,
    /// Number of multistart runs, the first at the grid seed.
    pub starts: usize,
    /// Relative D·γ31 discrepancy above which the result carries a warning.
    pub consistency_threshold: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            gamma31: None,
            gamma31_seed: 1.0,
            seed: 0,
            starts: 5,
            consistency_threshold: 0.15,
            max_iterations: 20,
        }
    }
}

/// Stage-1 result: the quantities a spectrum alone determines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    pub omega_c: Estimate,
    pub delta_c: Estimate,
    pub d_gamma21: Estimate,
    pub d_gamma31: Estimate,
    /// γ31 used to split D·γ31 inside the model.
    pub gamma31_assumed: f64,
    /// Covariance of [Ω_c, δc, Dγ21, Dγ31].
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    /// Index of the winning multistart run.
    pub start_index: usize,
}

fn model_medium(scheme: Scheme, d: f64, g21: f64, g31: f64, delta_s: f64, eps: f64) -> MediumParams {
    match scheme {
        Scheme::NTypeD2 => MediumParams {
            epsilon_switch: eps,
            ..MediumParams::ntype(d, g21, g31, g31, delta_s)
        },
        _ => MediumParams::lambda(d, g21, g31),
    }
}

/// Model transmission for [Ω_c, δc, Dγ21, Dγ31] at fixed γ31.
pub fn model_transmission(data: &MeasuredDataset, x: &[f64], gamma31: f64, delta_p: f64) -> Option<f64> {
    let d = x[3] / gamma31;
    if !(d.is_finite() && d > 0.0) {
        return None;
    }
    let m = model_medium(data.scheme, d, x[2] / d, gamma31, data.delta_s, data.epsilon_switch);
    let f = FieldParams::control(x[0].abs()).with_delta_c(x[1]);
    probe_response(0.0, delta_p, &m, &f, ControlDetuningMode::Direct)
        .ok()
        .map(|r| (2.0 * r.re).exp())
}

fn spectrum_residuals(data: &MeasuredDataset, gamma31: f64) -> impl Fn(&[f64]) -> Option<Vec<f64>> + Sync + '_ {
    move |x: &[f64]| {
        let s = &data.spectrum;
        (0..s.len())
            .map(|k| model_transmission(data, x, gamma31, s.delta_p[k]).map(|t| (t - s.transmission[k]) / s.sigma[k]))
            .collect()
    }
}

fn chi2(r: &(dyn Fn(&[f64]) -> Option<Vec<f64>> + Sync), x: &[f64]) -> f64 {
    r(x).map(|v| v.iter().map(|e| e * e).sum()).unwrap_or(f64::INFINITY)
}

/// Starting point from the window shape: for each D·γ31 on a log grid, Ω_c
/// follows from the measured window width, δc from its center and Dγ21 from
/// the peak transmission. The grid point with the lowest χ² wins.
fn grid_seed(data: &MeasuredDataset, gamma31: f64) -> Vec<f64> {
    let (dp, t) = data.spectrum.sorted();
    let center = dp[crate::waveform::argmax(&t)];
    let s = summarize(dp, t, center);
    let resid = spectrum_residuals(data, gamma31);
    let mut best = (f64::INFINITY, vec![1.0, center, 0.0, 100.0]);
    for k in 0..=24 {
        let dg31 = 10f64.powf(1.0 + 0.125 * k as f64);
        let omega_c = match s.fwhm_eit {
            Some(w) => (w * dg31.sqrt() / (LN_2 / 2.0).sqrt()).sqrt(),
            None => dg31.sqrt().sqrt(),
        };
        let dg21 = 0.5 * (-s.peak_transparency.max(1e-6).ln()).max(0.0) * omega_c * omega_c;
        let x = vec![omega_c, s.peak_detuning, dg21, dg31];
        let c = chi2(&resid, &x);
        if c < best.0 {
            best = (c, x);
        }
    }
    best.1
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn spectrum_fit_at(data: &MeasuredDataset, gamma31: f64, opts: &FitOptions) -> Result<SpectrumFit> {
    let resid = spectrum_residuals(data, gamma31);
    let seed = grid_seed(data, gamma31);
    let starts = opts.starts.max(1);
    let normal = Normal::new(0.0, 0.2).expect("valid normal");
    let inits: Vec<Vec<f64>> = (0..starts)
        .map(|i| {
            if i == 0 {
                return seed.clone();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64);
            let mut x = seed.clone();
            x[0] *= 1.0 + normal.sample(&mut rng);
            x[1] += 0.1 * normal.sample(&mut rng);
            x[2] *= 1.0 + normal.sample(&mut rng);
            x[3] *= (normal.sample(&mut rng)).exp();
            x
        })
        .collect();
    let scale = [1e-3, 1e-4, 1e-4, 1e-2];
    let runs: Vec<Result<Solution>> = inits.par_iter().map(|x0| minimize(&resid, x0, &scale)).collect();
    let mut errors = Vec::new();
    let mut best: Option<(usize, Solution)> = None;
    for (i, r) in runs.into_iter().enumerate() {
        match r {
            Ok(s) if s.chi2.is_finite() => {
                if best.as_ref().is_none_or(|(_, b)| s.chi2 < b.chi2) {
                    best = Some((i, s));
                }
            }
            Ok(s) => errors.push(format!("start {i}: χ² = {}", s.chi2)),
            Err(e) => errors.push(format!("start {i}: {e}")),
        }
    }
    let (start_index, sol) = best.ok_or_else(|| Error::Fit(format!("all starts failed: {}", errors.join("; "))))?;
    let cov = &sol.covariance;
    let mut x = sol.x.clone();
    x[0] = x[0].abs();
    Ok(SpectrumFit {
        omega_c: Estimate::from_cov(x[0], cov[(0, 0)]),
        delta_c: Estimate::from_cov(x[1], cov[(1, 1)]),
        d_gamma21: Estimate::from_cov(x[2], cov[(2, 2)]),
        d_gamma31: Estimate::from_cov(x[3], cov[(3, 3)]),
        gamma31_assumed: gamma31,
        covariance: to_rows(cov),
        chi2: sol.chi2,
        dof: sol.dof,
        start_index,
    })
}

/// Weighted least-squares fit of Ω_c, δc, Dγ21 and Dγ31 to the spectrum,
/// with γ31 fixed to `opts.gamma31` (or `opts.gamma31_seed`) to split the
/// products inside the model.
pub fn fit_spectrum(data: &MeasuredDataset, opts: &FitOptions) -> Result<SpectrumFit> {
    data.spectrum.validate()?;
    let g31 = opts.gamma31.unwrap_or(opts.gamma31_seed);
    ensure_positive("gamma31", g31)?;
    spectrum_fit_at(data, g31, opts)
}

/// One point of a γ31 profile scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub gamma31: f64,
    pub chi2: f64,
    pub optical_depth: f64,
    pub d_gamma31: f64,
}

/// Spectrum fits at fixed γ31 values, exposing the D ↔ γ31 degeneracy.
pub fn profile_gamma31(data: &MeasuredDataset, gammas: &[f64], opts: &FitOptions) -> Result<Vec<ProfilePoint>> {
    data.spectrum.validate()?;
    gammas
        .iter()
        .map(|&g| {
            ensure_positive("gamma31", g)?;
            let f = spectrum_fit_at(data, g, opts)?;
            Ok(ProfilePoint {
                gamma31: g,
                chi2: f.chi2,
                optical_depth: f.d_gamma31.value / g,
                d_gamma31: f.d_gamma31.value,
            })
        })
        .collect()
}

/// Gaussian intensity A·exp(−4 ln2 (t − t_c)²/w²) fitted to a trace:
/// returns [A, t_c, w] and their covariance.
fn fit_gaussian(trace: &IntensityTrace, sigma: f64) -> Result<Solution> {
    let n = trace.intensity.len();
    let total: f64 = trace.intensity.iter().sum();
    if total <= 0.0 {
        return Err(Error::Fit("trace carries no energy".into()));
    }
    let mean = (0..n).map(|k| trace.time(k) * trace.intensity[k]).sum::<f64>() / total;
    let var = (0..n).map(|k| (trace.time(k) - mean).powi(2) * trace.intensity[k]).sum::<f64>() / total;
    let peak = trace.intensity.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let x0 = [peak, mean, var.max(trace.dt * trace.dt).sqrt() * 2.0 * (2.0 * LN_2).sqrt()];
    let resid = |x: &[f64]| -> Option<Vec<f64>> {
        Some(
            (0..n)
                .map(|k| {
                    let u = (trace.time(k) - x[1]) / x[2];
                    (x[0] * (-4.0 * LN_2 * u * u).exp() - trace.intensity[k]) / sigma
                })
                .collect(),
        )
    };
    minimize(&resid, &x0, &[peak.abs().max(1e-300) * 1e-3, trace.dt, trace.dt])
}

/// Slow-light quantities extracted from a trace pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowLightFeatures {
    pub t_d: f64,
    pub beta: f64,
    pub eta_tran: f64,
    /// Input intensity FWHM.
    pub t_p: f64,
}

/// Stage-1 quantities followed by the slow-light Gaussian parameters.
const N_INPUTS: usize = 7;

/// Maps [Ω_c, δc, Dγ21, Dγ31_spectrum, A_out, t_out, w_out] to
/// [D, Ω_c, γ21, δc, γ31, Dγ21, Dγ31], given the input reference fit.
fn invert(u: &[f64], input: &[f64], transit: f64, fixed_g31: Option<f64>) -> [f64; 7] {
    let (omega_c, delta_c) = (u[0], u[1]);
    let t_d = u[5] - input[1] - transit;
    let beta = u[6] / input[2];
    let eta = u[4] * u[6] / (input[0] * input[2]);
    let t_p = input[2];
    let d = t_d * omega_c * omega_c;
    let g31 = fixed_g31.unwrap_or_else(|| (beta * beta - 1.0) * t_p * t_p * omega_c.powi(4) / (32.0 * LN_2 * d));
    let g21 = -(eta * beta).ln() / (2.0 * t_d);
    [d, omega_c, g21, delta_c, g31, d * g21, d * g31]
}

/// Joint spectrum and slow-light result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub optical_depth: Estimate,
    pub omega_c: Estimate,
    pub gamma21: Estimate,
    pub delta_c: Estimate,
    pub gamma31: Estimate,
    pub d_gamma21: Estimate,
    pub d_gamma31: Estimate,
    pub features: SlowLightFeatures,
    pub spectrum: SpectrumFit,
    /// |Dγ31(spectrum) − Dγ31(slow light)|/Dγ31(slow light).
    pub consistency: f64,
    pub warning: Option<String>,
    /// Covariance of [D, Ω_c, γ21, δc, γ31].
    pub covariance: Vec<Vec<f64>>,
    /// χ² of the final spectrum fit and of the output-trace fit.
    pub chi2_spectrum: f64,
    pub chi2_trace: f64,
    pub iterations: usize,
}

/// Spectrum fit followed by the slow-light inversion
/// D = T_dΩ_c², γ31 = (β² − 1)T_p²Ω_c⁴/(32 ln2·D), γ21 = −ln(η_tran β)/(2T_d).
/// The γ31 used inside the spectrum model is updated from the inversion
/// until it settles.
pub fn fit_joint(data: &MeasuredDataset, opts: &FitOptions) -> Result<FitResult> {
    data.validate()?;
    let trace = data
        .slowlight
        .as_ref()
        .ok_or_else(|| Error::invalid("slowlight", "joint fit needs a slow-light trace"))?;
    let in_peak = trace.input.intensity.iter().copied().fold(0.0, f64::max);
    let input = fit_gaussian(&trace.input, (1e-6 * in_peak).max(f64::MIN_POSITIVE))?;
    let output = fit_gaussian(&trace.output, trace.sigma)?;
    if output.x[0] <= 0.0 || output.x[2] <= 0.0 || input.x[2] <= 0.0 {
        return Err(Error::Fit("slow-light trace has no resolvable pulse".into()));
    }

    let mut g31 = opts.gamma31.unwrap_or(opts.gamma31_seed);
    ensure_positive("gamma31", g31)?;
    let mut iterations = 0;
    let mut spec;
    loop {
        iterations += 1;
        spec = spectrum_fit_at(data, g31, opts)?;
        if opts.gamma31.is_some() {
            break;
        }
        let u = [
            spec.omega_c.value,
            spec.delta_c.value,
            spec.d_gamma21.value,
            spec.d_gamma31.value,
            output.x[0],
            output.x[1],
            output.x[2],
        ];
        let next = invert(&u, &input.x, trace.transit_delay, None)[4];
        if !(next.is_finite() && next > 0.0) {
            return Err(Error::Fit(format!(
                "slow-light broadening gives γ31 = {next}; the trace is narrower than the input"
            )));
        }
        let done = (next - g31).abs() <= 1e-10 * g31;
        g31 = next;
        if done || iterations >= opts.max_iterations {
            break;
        }
    }

    let u: Vec<f64> = [
        spec.omega_c.value,
        spec.delta_c.value,
        spec.d_gamma21.value,
        spec.d_gamma31.value,
        output.x[0],
        output.x[1],
        output.x[2],
    ]
    .to_vec();
    let mut cov_u = DMatrix::<f64>::zeros(N_INPUTS, N_INPUTS);
    for i in 0..4 {
        for j in 0..4 {
            cov_u[(i, j)] = spec.covariance[i][j];
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            cov_u[(4 + i, 4 + j)] = output.covariance[(i, j)];
        }
    }
    let g = |x: &[f64]| Some(invert(x, &input.x, trace.transit_delay, opts.gamma31).to_vec());
    let scale: Vec<f64> = u.iter().map(|v| v.abs().max(1e-6)).collect();
    let j = jacobian(&g, &u, &scale).ok_or_else(|| Error::Fit("inversion Jacobian is not finite".into()))?;
    let cov = &j * cov_u * j.transpose();
    let out = invert(&u, &input.x, trace.transit_delay, opts.gamma31);
    let est = |k: usize| Estimate::from_cov(out[k], cov[(k, k)]);

    let d_gamma31 = out[6];
    let consistency = (spec.d_gamma31.value - d_gamma31).abs() / d_gamma31.abs();
    let warning = (consistency > opts.consistency_threshold).then(|| {
        format!(
            "D·γ31 from the spectrum ({:.1}) and from slow light ({:.1}) differ by {:.0}%",
            spec.d_gamma31.value,
            d_gamma31,
            100.0 * consistency
        )
    });
    let features = SlowLightFeatures {
        t_d: output.x[1] - input.x[1] - trace.transit_delay,
        beta: output.x[2] / input.x[2],
        eta_tran: output.x[0] * output.x[2] / (input.x[0] * input.x[2]),
        t_p: input.x[2],
    };
    Ok(FitResult {
        optical_depth: est(0),
        omega_c: est(1),
        gamma21: est(2),
        delta_c: est(3),
        gamma31: est(4),
        d_gamma21: est(5),
        d_gamma31: est(6),
        features,
        chi2_spectrum: spec.chi2,
        chi2_trace: output.chi2,
        spectrum: spec,
        consistency,
        warning,
        covariance: to_rows(&cov.view((0, 0), (5, 5)).into_owned()),
        iterations,
    })
}
