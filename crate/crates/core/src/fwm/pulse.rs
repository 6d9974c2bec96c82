//! Time-domain probe-pulse gain under perfect phase matching.
//!
//! First-order four-level equations in the retarded frame. The coherences
//! σ42* and σ43* oscillate at the hyperfine-scale detuning δd and are
//! eliminated adiabatically, leaving σ21 and σ31 per node plus the probe and
//! conjugate idler fields along z.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{first_order_system, idler_depth, populations_for, FwmParams};
use crate::error::{ensure_positive, Error, Result};
use crate::estimation::{gamma31_model, Gamma31Scheme};
use crate::params::{GaussianPulse, MediumParams};
use crate::propagation::{broadening_factor, control_for_zeta, group_delay};
use crate::storage::{max_time_step, MAX_DEPTH_PER_CELL};
use crate::waveform::trapezoid;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwmPulseOptions {
    pub nz: usize,
    pub dt: Option<f64>,
    /// Delay ratio T_d/T_p used to set Ω_c at each optical depth.
    pub zeta: f64,
    /// Optical-depth dependence of γ31 (also applied to γ32, γ41, γ42);
    /// the medium's values are used when unset.
    pub gamma31_model: Option<Gamma31Scheme>,
}

impl Default for FwmPulseOptions {
    fn default() -> Self {
        FwmPulseOptions {
            nz: 200,
            dt: None,
            zeta: 2.7,
            gamma31_model: Some(Gamma31Scheme::D1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwmPulsePoint {
    pub optical_depth: f64,
    pub omega_c: f64,
    pub gamma31: f64,
    /// D/δ_hf, the scale of the FWM coupling.
    pub x: f64,
    /// Output over input energy with the idler channel on.
    pub eta_with: f64,
    /// The same with the idler held at zero.
    pub eta_without: f64,
    /// eta_with/eta_without − 1.
    pub gain: f64,
}

/// Reduced two-coherence equations σ' = K σ + k_p Ω_p + k_q q with the
/// idler source c42 = g·σ + g_p Ω_p + g_q q.
struct Reduced {
    k: [[Complex64; 2]; 2],
    k_p: [Complex64; 2],
    k_q: [Complex64; 2],
    g: [Complex64; 2],
    g_p: Complex64,
    g_q: Complex64,
}

fn inv2(a: [[Complex64; 2]; 2]) -> Result<[[Complex64; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == ZERO {
        return Err(Error::Singular("adiabatic elimination of the idler-side coherences".into()));
    }
    Ok([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

fn reduce(params: &FwmParams, medium: &MediumParams) -> Result<Reduced> {
    let pops = populations_for(params, medium)?;
    let sys = first_order_system(params, medium, &pops);
    let m = sys.m;
    let ninv = inv2([[m[2][2], m[2][3]], [m[3][2], m[3][3]]])?;
    // c = G σ + g_p Ω_p + g_q q
    let mut gs = [[ZERO; 2]; 2];
    let mut gp = [ZERO; 2];
    let mut gq = [ZERO; 2];
    for r in 0..2 {
        for c in 0..2 {
            gs[r][c] = -(ninv[r][0] * m[2][c] + ninv[r][1] * m[3][c]);
        }
        gp[r] = -(ninv[r][0] * sys.b_probe[2] + ninv[r][1] * sys.b_probe[3]);
        gq[r] = -(ninv[r][0] * sys.b_idler[2] + ninv[r][1] * sys.b_idler[3]);
    }
    let mut k = [[ZERO; 2]; 2];
    let mut k_p = [ZERO; 2];
    let mut k_q = [ZERO; 2];
    for r in 0..2 {
        for c in 0..2 {
            k[r][c] = m[r][c] + m[r][2] * gs[0][c] + m[r][3] * gs[1][c];
        }
        k_p[r] = sys.b_probe[r] + m[r][2] * gp[0] + m[r][3] * gp[1];
        k_q[r] = sys.b_idler[r] + m[r][2] * gq[0] + m[r][3] * gq[1];
    }
    Ok(Reduced {
        k,
        k_p,
        k_q,
        g: gs[0],
        g_p: gp[0],
        g_q: gq[0],
    })
}

struct Medium1d<'a> {
    red: &'a Reduced,
    nz: usize,
    probe_step: f64,
    idler_step: f64,
    coupled: bool,
    probe: Vec<Complex64>,
    idler: Vec<Complex64>,
}

impl Medium1d<'_> {
    /// Fills the fields along z for coherences `y` = [σ21, σ31] per node.
    fn sweep(&mut self, y: &[Complex64], input: Complex64) {
        let r = self.red;
        let c42 = |j: usize, p: Complex64, q: Complex64| {
            r.g[0] * y[2 * j] + r.g[1] * y[2 * j + 1] + r.g_p * p + r.g_q * q
        };
        self.probe[0] = input;
        self.idler[0] = ZERO;
        let mut prev_c = c42(0, input, ZERO);
        for j in 1..=self.nz {
            let p = self.probe[j - 1] + I * self.probe_step * (y[2 * j - 1] + y[2 * j + 1]);
            self.probe[j] = p;
            if self.coupled {
                let h = -I * self.idler_step;
                let partial = r.g[0] * y[2 * j] + r.g[1] * y[2 * j + 1] + r.g_p * p;
                let q = (self.idler[j - 1] + h * (prev_c + partial)) / (1.0 - h * r.g_q);
                self.idler[j] = q;
                prev_c = partial + r.g_q * q;
            } else {
                self.idler[j] = ZERO;
            }
        }
    }

    fn deriv(&self, y: &[Complex64], out: &mut [Complex64]) {
        let r = self.red;
        for j in 0..=self.nz {
            let (p, q) = (self.probe[j], self.idler[j]);
            let (s21, s31) = (y[2 * j], y[2 * j + 1]);
            for row in 0..2 {
                out[2 * j + row] = r.k[row][0] * s21 + r.k[row][1] * s31 + r.k_p[row] * p + r.k_q[row] * q;
            }
        }
    }
}

/// Output energy over input energy for one time-domain run.
fn transmitted_fraction(
    pulse: &GaussianPulse,
    params: &FwmParams,
    medium: &MediumParams,
    nz: usize,
    dt: f64,
    coupled: bool,
) -> Result<f64> {
    let red = reduce(params, medium)?;
    let d = medium.optical_depth;
    let n_cells = nz as f64;
    let mut med = Medium1d {
        red: &red,
        nz,
        probe_step: 0.25 * d / n_cells,
        idler_step: 0.25 * idler_depth(medium) / n_cells,
        coupled,
        probe: vec![ZERO; nz + 1],
        idler: vec![ZERO; nz + 1],
    };
    let t_d = group_delay(d, params.omega_c);
    let beta = broadening_factor(d, medium.gamma31, pulse.t_p, params.omega_c);
    let start = pulse.t0 - 4.0 * pulse.t_p;
    let end = pulse.t0 + t_d + 5.0 * beta * pulse.t_p + 40.0 / medium.gamma31.max(0.05);
    let steps = ((end - start) / dt).ceil() as usize;
    let input = |t: f64| Complex64::new(pulse.amplitude(t), 0.0);

    let n = 2 * (nz + 1);
    let mut y = vec![ZERO; n];
    let mut k = vec![vec![ZERO; n]; 4];
    let mut tmp = vec![ZERO; n];
    let mut out_int = Vec::with_capacity(steps + 1);
    let mut in_int = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let t = start + s as f64 * dt;
        med.sweep(&y, input(t));
        out_int.push(med.probe[nz].norm_sqr());
        in_int.push(input(t).norm_sqr());
        if s == steps {
            break;
        }
        med.deriv(&y, &mut k[0]);
        for (stage, (h, tt)) in [(0.5 * dt, t + 0.5 * dt), (0.5 * dt, t + 0.5 * dt), (dt, t + dt)]
            .into_iter()
            .enumerate()
        {
            for i in 0..n {
                tmp[i] = y[i] + h * k[stage][i];
            }
            med.sweep(&tmp, input(tt));
            let (_, rest) = k.split_at_mut(stage + 1);
            med.deriv(&tmp, &mut rest[0]);
        }
        for i in 0..n {
            y[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }
    let e_in = trapezoid(&in_int, dt);
    if e_in <= 0.0 {
        return Err(Error::Undefined("input pulse carries no energy".into()));
    }
    Ok(trapezoid(&out_int, dt) / e_in)
}

fn medium_at(medium: &MediumParams, d: f64, model: Option<Gamma31Scheme>) -> Result<MediumParams> {
    let mut m = medium.with_optical_depth(d);
    if let Some(scheme) = model {
        let g = gamma31_model(d, scheme)?;
        m.gamma31 = g;
        m.gamma32 = g;
        m.gamma41 = g;
        m.gamma42 = g;
    }
    Ok(m)
}

/// Probe-pulse FWM gain versus optical depth. At each depth Ω_c is set by
/// the delay ratio and Ω_d keeps the ratio Ω_d/Ω_c of `params`; runs with
/// and without the idler channel are compared.
pub fn fwm_gain_pulse(
    pulse: &GaussianPulse,
    params: &FwmParams,
    medium: &MediumParams,
    ods: &[f64],
    opts: &FwmPulseOptions,
) -> Result<Vec<FwmPulsePoint>> {
    pulse.validate()?;
    params.validate()?;
    medium.validate()?;
    ensure_positive("zeta", opts.zeta)?;
    if opts.nz < 2 {
        return Err(Error::invalid("nz", "needs at least two cells"));
    }
    let eps = params.epsilon();
    ods.par_iter()
        .map(|&d| {
            ensure_positive("optical_depth", d)?;
            if d / opts.nz as f64 > MAX_DEPTH_PER_CELL {
                return Err(Error::Resolution(format!(
                    "optical depth {d} over {} cells exceeds {MAX_DEPTH_PER_CELL} per cell",
                    opts.nz
                )));
            }
            let m = medium_at(medium, d, opts.gamma31_model)?;
            let omega_c = control_for_zeta(d, opts.zeta, pulse.t_p);
            let p = FwmParams {
                omega_c,
                omega_d: eps * omega_c,
                ..*params
            };
            let dt_max = max_time_step(pulse.t_p, omega_c, m.gamma31);
            let dt = match opts.dt {
                Some(dt) if dt > dt_max => {
                    return Err(Error::Resolution(format!("dt = {dt} exceeds the stable limit {dt_max}")))
                }
                Some(dt) => dt,
                None => dt_max,
            };
            let (with, without) = rayon::join(
                || transmitted_fraction(pulse, &p, &m, opts.nz, dt, true),
                || transmitted_fraction(pulse, &p, &m, opts.nz, dt, false),
            );
            let (with, without) = (with?, without?);
            Ok(FwmPulsePoint {
                optical_depth: d,
                omega_c,
                gamma31: m.gamma31,
                x: if m.delta_hf != 0.0 { d / m.delta_hf.abs() } else { f64::INFINITY },
                eta_with: with,
                eta_without: without,
                gain: with / without - 1.0,
            })
        })
        .collect()
}
