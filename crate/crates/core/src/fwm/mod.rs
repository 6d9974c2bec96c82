//! Semi-classical four-wave mixing in the double-Λ configuration.
//!
//! The control couples |2>→|3> with Rabi frequency Ω_c and, far detuned,
//! |1>→|4> with Ω_d = εΩ_c. A weak probe on |1>→|3> then seeds an idler on
//! |2>→|4>. Levels and detunings follow the four-level model:
//! ξ21 = iδ2 − γ21, ξ31 = iδp − γ31, ξ32 = iδc − γ32, ξ41 = iδd − γ41,
//! ξ42 = i(δd − δ2) − γ42, ξ43 = i(δd − δp) − γ43, with δ2 = δp − δc.
//!
//! In the limit Ω_d = 0 with all population in |1> the probe exponent equals
//! [`crate::spectra::lambda_response`] at the same δp, so no detuning
//! translation is needed between the two modules.
//!
//! Susceptibilities are OD-normalized: the single-pass probe exponent is
//! a_pp = (i/2)·χ_pp, and the idler channel uses the depth D/ε².

mod pulse;

pub use pulse::{fwm_gain_pulse, FwmPulseOptions, FwmPulsePoint};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_nonneg, ensure_positive, Error, Result};
use crate::params::{FieldParams, MediumParams};
use crate::units::{Transition, SPEED_OF_LIGHT};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Which closed-form labeling of the zero-order populations to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PopulationLabeling {
    /// Steady state of the rate equations: the weakly driven ground state
    /// |1> collects the population as Ω_d → 0.
    #[default]
    Derived,
    /// Numerators of σ11 and σ22 exchanged, as the expressions are commonly
    /// printed. Population collects in |2> as Ω_d → 0.
    AsPrinted,
}

/// How the first-order susceptibilities are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SusceptibilityRoute {
    /// Direct solve of the four coupled first-order coherence equations.
    #[default]
    LinearSolve,
    /// Closed-form expressions over the common denominator. The probe-side
    /// pair agrees with the linear solve; the idler-side pair does not and
    /// is kept for comparison only.
    ClosedForm,
}

/// Phase-mismatch formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMatching {
    /// Δk = 2n_c k_c − (k_p + k_i) cos θ.
    #[default]
    Projected,
    /// Δk = 2n_c k_c − k_p cos θ − k_i sin θ.
    Literal,
}

/// Fields and geometry of one four-wave-mixing evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwmParams {
    pub omega_c: f64,
    pub omega_d: f64,
    pub delta_p: f64,
    pub delta_c: f64,
    pub delta_d: f64,
    /// Probe–control angle (rad).
    pub theta: f64,
    /// Vacuum wavenumbers (1/m).
    pub k_p: f64,
    pub k_c: f64,
    pub k_i: f64,
    /// Medium length (m).
    pub length: f64,
    #[serde(default)]
    pub labeling: PopulationLabeling,
    #[serde(default)]
    pub route: SusceptibilityRoute,
    #[serde(default)]
    pub phase_matching: PhaseMatching,
}

impl FwmParams {
    /// Parameters from the shared field and medium containers. With
    /// `exact_k` the control and idler wavenumbers are offset from the probe
    /// one by one and two hyperfine splittings.
    pub fn new(fields: &FieldParams, medium: &MediumParams, transition: &Transition, exact_k: bool) -> Self {
        let k0 = transition.wavenumber();
        let frac = if exact_k {
            medium.delta_hf * transition.gamma_sp / (SPEED_OF_LIGHT * k0)
        } else {
            0.0
        };
        FwmParams {
            omega_c: fields.omega_c,
            omega_d: fields.omega_d,
            delta_p: 0.0,
            delta_c: fields.delta_c,
            delta_d: fields.delta_d,
            theta: fields.theta,
            k_p: k0,
            k_c: k0 * (1.0 - frac),
            k_i: k0 * (1.0 - 2.0 * frac),
            length: medium.length,
            labeling: PopulationLabeling::default(),
            route: SusceptibilityRoute::default(),
            phase_matching: PhaseMatching::default(),
        }
    }

    /// Ω_d/Ω_c.
    pub fn epsilon(&self) -> f64 {
        self.omega_d / self.omega_c
    }

    pub fn with_delta_p(self, delta_p: f64) -> Self {
        FwmParams { delta_p, ..self }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        FwmParams { theta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("omega_c", self.omega_c)?;
        for (name, v) in [
            ("omega_d", self.omega_d),
            ("delta_p", self.delta_p),
            ("delta_c", self.delta_c),
            ("delta_d", self.delta_d),
        ] {
            ensure_finite(name, v)?;
        }
        ensure_nonneg("theta", self.theta)?;
        if self.theta >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("theta", "must be below π/2"));
        }
        ensure_positive("k_p", self.k_p)?;
        ensure_positive("k_c", self.k_c)?;
        ensure_positive("k_i", self.k_i)?;
        ensure_positive("length", self.length)
    }
}

/// Detuning factors ξij of the four-level model.
#[derive(Debug, Clone, Copy)]
struct Xi {
    x21: Complex64,
    x31: Complex64,
    x32: Complex64,
    x41: Complex64,
    x42: Complex64,
    x43: Complex64,
}

impl Xi {
    fn new(p: &FwmParams, m: &MediumParams) -> Self {
        let d2 = p.delta_p - p.delta_c;
        Xi {
            x21: Complex64::new(-m.gamma21, d2),
            x31: Complex64::new(-m.gamma31, p.delta_p),
            x32: Complex64::new(-m.gamma32, p.delta_c),
            x41: Complex64::new(-m.gamma41, p.delta_d),
            x42: Complex64::new(-m.gamma42, p.delta_d - d2),
            x43: Complex64::new(-m.gamma43, p.delta_d - p.delta_p),
        }
    }
}

/// Zero-order (probe- and idler-free) steady-state populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    pub s11: f64,
    pub s22: f64,
    pub s33: f64,
    pub s44: f64,
}

impl Populations {
    /// The Ω_d → 0 limit of the closed forms.
    pub fn undriven_limit(labeling: PopulationLabeling) -> Self {
        let (s11, s22) = match labeling {
            PopulationLabeling::Derived => (1.0, 0.0),
            PopulationLabeling::AsPrinted => (0.0, 1.0),
        };
        Populations {
            s11,
            s22,
            s33: 0.0,
            s44: 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.s11 + self.s22 + self.s33 + self.s44
    }
}

/// Zero-order populations with both control components on.
pub fn fwm_zero_order(params: &FwmParams, medium: &MediumParams) -> Result<Populations> {
    if params.omega_c == 0.0 || params.omega_d == 0.0 {
        return Err(Error::Undefined(
            "zero-order populations divide by Ω_c and Ω_d; use Populations::undriven_limit for Ω_d = 0".into(),
        ));
    }
    medium.validate()?;
    if medium.branch31 <= 0.0 || medium.gamma32 <= 0.0 || medium.gamma41 <= 0.0 {
        return Err(Error::invalid("branch31", "Γ31, γ32 and γ41 must be positive"));
    }
    let xi = Xi::new(params, medium);
    let r = medium.branch42 / medium.branch31;
    let y = xi.x32.norm_sqr() / (medium.gamma32 * params.omega_c.powi(2));
    let x = xi.x41.norm_sqr() / (medium.gamma41 * params.omega_d.powi(2));
    let g3 = medium.gamma3();
    let g4 = medium.gamma4();
    let s = 1.0 / (2.0 * (1.0 + r + r * g3 * y + g4 * x));
    let lower1 = s * (1.0 + 2.0 * g4 * x);
    let lower2 = r * s * (1.0 + 2.0 * g3 * y);
    let (s11, s22) = match params.labeling {
        PopulationLabeling::Derived => (lower1, lower2),
        PopulationLabeling::AsPrinted => (lower2, lower1),
    };
    Ok(Populations {
        s11,
        s22,
        s33: r * s,
        s44: s,
    })
}

fn populations_for(params: &FwmParams, medium: &MediumParams) -> Result<Populations> {
    if params.omega_d == 0.0 {
        Ok(Populations::undriven_limit(params.labeling))
    } else {
        fwm_zero_order(params, medium)
    }
}

/// Steady-state susceptibilities and single-pass gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwmResult {
    pub delta_p: f64,
    pub theta: f64,
    pub chi_pp: Complex64,
    pub chi_pi: Complex64,
    pub chi_ip: Complex64,
    pub chi_ii: Complex64,
    /// Common denominator of the closed-form susceptibilities.
    pub denom_d: Complex64,
    pub n_c: f64,
    /// Phase mismatch (1/m).
    pub delta_kz: f64,
    /// |Ω_p(L)/Ω_p(0)|².
    pub probe_gain: f64,
    /// |Ω_i(L)/Ω_p(0)|².
    pub idler_conv: f64,
    /// Probe transmission with the cross couplings removed.
    pub probe_gain_uncoupled: f64,
    /// probe_gain/probe_gain_uncoupled − 1.
    pub fwm_gain: f64,
}

/// First-order coherences per unit probe and per unit conjugate idler.
struct FirstOrder {
    /// [σ21, σ31, σ42*, σ43*] driven by Ω_p.
    probe: [Complex64; 4],
    /// The same driven by Ω_i*.
    idler: [Complex64; 4],
}

/// Coefficients of the first-order equations ẋ = M x + b_p Ω_p + b_i Ω_i*
/// for x = [σ21, σ31, σ42*, σ43*].
pub(crate) struct FirstOrderSystem {
    pub m: [[Complex64; 4]; 4],
    pub b_probe: [Complex64; 4],
    pub b_idler: [Complex64; 4],
}

pub(crate) fn first_order_system(params: &FwmParams, medium: &MediumParams, pops: &Populations) -> FirstOrderSystem {
    let xi = Xi::new(params, medium);
    let hc = 0.5 * params.omega_c;
    let hd = 0.5 * params.omega_d;
    let s32 = if params.omega_c == 0.0 {
        ZERO
    } else {
        -I * hc * (pops.s22 - pops.s33) / xi.x32
    };
    let s41 = if params.omega_d == 0.0 {
        ZERO
    } else {
        -I * hd * (pops.s11 - pops.s44) / xi.x41
    };
    let (s23, s14) = (s32.conj(), s41.conj());
    let m = [
        [xi.x21, I * hc, -I * hd, ZERO],
        [I * hc, xi.x31, ZERO, -I * hd],
        [-I * hd, ZERO, xi.x42.conj(), I * hc],
        [ZERO, -I * hd, I * hc, xi.x43.conj()],
    ];
    let b_probe = [
        -0.5 * I * s23,
        0.5 * I * (pops.s11 - pops.s33),
        ZERO,
        0.5 * I * s14,
    ];
    let b_idler = [
        0.5 * I * s41,
        ZERO,
        -0.5 * I * (pops.s22 - pops.s44),
        -0.5 * I * s32,
    ];
    FirstOrderSystem { m, b_probe, b_idler }
}

/// Solves a small dense complex system by Gaussian elimination with partial
/// pivoting.
pub(crate) fn solve<const N: usize>(mut a: [[Complex64; N]; N], mut b: [Complex64; N]) -> Result<[Complex64; N]> {
    let scale = a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap_or(col);
        if a[piv][col].norm() <= 1e-300 + 1e-15 * scale {
            return Err(Error::Singular("first-order coherence system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (dst, v) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = [ZERO; N];
    for row in (0..N).rev() {
        let mut acc = b[row];
        for k in row + 1..N {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

fn first_order(sys: &FirstOrderSystem) -> Result<FirstOrder> {
    let neg = |v: [Complex64; 4]| v.map(|z| -z);
    Ok(FirstOrder {
        probe: solve(sys.m, neg(sys.b_probe))?,
        idler: solve(sys.m, neg(sys.b_idler))?,
    })
}

/// Closed-form common denominator.
fn closed_form_denominator(xi: &Xi, omega_c: f64, eps2: f64) -> Complex64 {
    let wc2 = omega_c * omega_c;
    let (c42, c43) = (xi.x42.conj(), xi.x43.conj());
    xi.x31 * c42 * xi.x21 * c43 / (0.25 * wc2)
        + c43 * (c42 + eps2 * xi.x31)
        + xi.x21 * (c42 * eps2 + xi.x31)
        + 0.25 * (eps2 - 1.0).powi(2)
}

/// Closed-form susceptibilities in units of the probe coherence per unit
/// Rabi frequency: returns (pp, pi, ii, ip) before OD scaling.
fn closed_form(xi: &Xi, p: &FwmParams, pops: &Populations, den: Complex64) -> [Complex64; 4] {
    let wc2 = p.omega_c * p.omega_c;
    let e2 = p.epsilon().powi(2);
    let s2233 = pops.s33 - pops.s22;
    let s1133 = pops.s33 - pops.s11;
    let s1144 = pops.s44 - pops.s11;
    let s2244 = pops.s44 - pops.s22;
    let c = |z: Complex64| z.conj();
    let (x21, x31, x32, x41, x42, x43) = (xi.x21, xi.x31, xi.x32, xi.x41, xi.x42, xi.x43);
    let pp = (c(x43) * c(x42) + 0.25 * wc2 * (1.0 - e2)) / c(x32) * s2233
        - (c(x42) * x21 * c(x43) / (0.25 * wc2) + (e2 * c(x43) + x21)) * s1133
        + e2 * (x21 * c(x42) + 0.25 * wc2 * (e2 - 1.0)) / c(x41) * s1144;
    let pi = (x21 * c(x42) + 0.25 * wc2 * (e2 - 1.0)) / x32 * s2233
        + (c(x43) + x21) * s2244
        + c(x43) * c(x42) / x41 * s1144;
    let ii = c(x31)
        * (e2 * (4.0 * x43 * c(x31) + wc2 * (e2 - 1.0)) / (c(x41) * c(x31)) * s1144
            + (4.0 * c(x21) * c(x31) + wc2 * (1.0 - e2)) / (4.0 * c(x32) * c(x31)) * s2233
            - (c(x21) * x43 / (0.25 * wc2) + (x43 + c(x21) * e2) / c(x31)) * s2244);
    let ip = c(x31)
        * ((x43 / x32 - wc2 * (1.0 - e2) / (4.0 * x32 * c(x31))) * s2233
            + (x43 + c(x21)) / c(x31) * s1133
            + (c(x21) / x41 - wc2 * (e2 - 1.0) / (4.0 * x41 * c(x31))) * s1144);
    let cross = p.omega_c * p.omega_d / wc2;
    // The closed forms carry the opposite overall sign to the coherence
    // solution; the factor −i/2 maps them onto σ per unit Rabi frequency.
    let k = -0.5 * I / den;
    [pp * k, pi * cross * k, ii * k, ip * cross * k]
}

/// Control refractive index n_c = 1 + χ_c/2 from the off-resonant drive of
/// the probe transition, with the density fixed by the optical depth.
pub fn control_index(params: &FwmParams, medium: &MediumParams) -> f64 {
    let g4 = medium.gamma4();
    let dd = params.delta_d;
    let denom = dd * dd + 0.25 * g4 * g4;
    if denom == 0.0 {
        return 1.0;
    }
    let chi = -(medium.optical_depth / (2.0 * params.k_c * params.length)) * dd / denom;
    1.0 + 0.5 * chi
}

/// Phase mismatch Δk_z (1/m).
pub fn phase_mismatch(params: &FwmParams, n_c: f64) -> f64 {
    let (s, c) = params.theta.sin_cos();
    let base = 2.0 * n_c * params.k_c;
    match params.phase_matching {
        PhaseMatching::Projected => base - (params.k_p + params.k_i) * c,
        PhaseMatching::Literal => base - params.k_p * c - params.k_i * s,
    }
}

/// Depth of the idler transition, D/ε² with ε the Clebsch–Gordan ratio.
pub fn idler_depth(medium: &MediumParams) -> f64 {
    medium.optical_depth / medium.epsilon_fwm.powi(2)
}

/// Susceptibilities at `params.delta_p`, with the phase mismatch and control
/// index filled in. The gain fields are left at zero.
pub fn fwm_susceptibilities(params: &FwmParams, medium: &MediumParams) -> Result<FwmResult> {
    params.validate()?;
    medium.validate()?;
    let pops = populations_for(params, medium)?;
    let xi = Xi::new(params, medium);
    let e2 = params.epsilon().powi(2);
    let den = closed_form_denominator(&xi, params.omega_c, e2);
    let d = medium.optical_depth;
    let di = idler_depth(medium);
    let (chi_pp, chi_pi, chi_ii, chi_ip) = match params.route {
        SusceptibilityRoute::LinearSolve => {
            let sol = first_order(&first_order_system(params, medium, &pops))?;
            (
                d * sol.probe[1],
                d * sol.idler[1],
                di * sol.idler[2].conj(),
                di * sol.probe[2].conj(),
            )
        }
        SusceptibilityRoute::ClosedForm => {
            if den == ZERO {
                return Err(Error::Singular("closed-form denominator vanishes".into()));
            }
            let [pp, pi, ii, ip] = closed_form(&xi, params, &pops, den);
            (d * pp, d * pi, di * ii, di * ip)
        }
    };
    let n_c = control_index(params, medium);
    Ok(FwmResult {
        delta_p: params.delta_p,
        theta: params.theta,
        chi_pp,
        chi_pi,
        chi_ip,
        chi_ii,
        denom_d: den,
        n_c,
        delta_kz: phase_mismatch(params, n_c),
        probe_gain: 0.0,
        idler_conv: 0.0,
        probe_gain_uncoupled: 0.0,
        fwm_gain: 0.0,
    })
}

fn sinhc(x: Complex64) -> Complex64 {
    if x.norm() < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sinh() / x
    }
}

/// Solution at z = 1 of v' = A v with v(0) = (1, 0): returns (v₁, v₂).
///
/// Uses v(1) = e^{m}[cosh ξ + (h/ξ) sinh ξ, (A21/ξ) sinh ξ] with m = tr A/2,
/// h = (A11 − A22)/2 and ξ² = h² + A12 A21; the ξ → 0 limit is taken by
/// series.
pub fn coupled_mode(a: [[Complex64; 2]; 2]) -> (Complex64, Complex64) {
    let m = 0.5 * (a[0][0] + a[1][1]);
    let h = 0.5 * (a[0][0] - a[1][1]);
    let cross = a[0][1] * a[1][0];
    let mut xi = (h * h + cross).sqrt();
    if (xi + h).norm() < (xi - h).norm() {
        xi = -xi;
    }
    if xi.norm() < 1e-4 {
        let em = m.exp();
        let sc = sinhc(xi);
        return (em * (xi.cosh() + h * sc), em * a[1][0] * sc);
    }
    // Written so that the decoupled limit carries no cancellation:
    // 1 − h/ξ = A12 A21/(ξ(ξ + h)).
    let up = (m + xi).exp();
    let down = (m - xi).exp();
    let probe = up * (xi + h) / (2.0 * xi) + down * cross / (2.0 * xi * (xi + h));
    let idler = a[1][0] * (up - down) / (2.0 * xi);
    (probe, idler)
}

/// Single-pass probe gain at `delta_p` and angle `theta`.
pub fn fwm_gain_steady(delta_p: f64, theta: f64, params: &FwmParams, medium: &MediumParams) -> Result<FwmResult> {
    let p = params.with_delta_p(delta_p).with_theta(theta);
    let mut r = fwm_susceptibilities(&p, medium)?;
    let a_pp = 0.5 * I * r.chi_pp;
    let a_pi = 0.5 * I * r.chi_pi;
    let a_ip = 0.5 * I * r.chi_ip;
    let a_ii = 0.5 * I * r.chi_ii;
    let mismatch = I * r.delta_kz * p.length;
    let (probe, idler) = coupled_mode([[a_pp, a_pi], [a_ip.conj(), a_ii.conj() + mismatch]]);
    r.probe_gain = probe.norm_sqr();
    r.idler_conv = idler.norm_sqr();
    r.probe_gain_uncoupled = (2.0 * a_pp.re).exp();
    r.fwm_gain = r.probe_gain / r.probe_gain_uncoupled - 1.0;
    Ok(r)
}

/// [`fwm_gain_steady`] over a detuning grid, in parallel.
pub fn fwm_gain_scan(deltas: &[f64], theta: f64, params: &FwmParams, medium: &MediumParams) -> Result<Vec<FwmResult>> {
    deltas
        .par_iter()
        .map(|&d| fwm_gain_steady(d, theta, params, medium))
        .collect()
}

/// Index of the largest FWM gain in a scan.
pub fn max_gain(scan: &[FwmResult]) -> Option<&FwmResult> {
    scan.iter().max_by(|a, b| a.fwm_gain.total_cmp(&b.fwm_gain))
}

/// One pump-detuning point of a pump–probe scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpScanPoint {
    /// Pump detuning from the probe transition (Γ).
    pub delta_pump: f64,
    /// Peak probe transmission with the pump on.
    pub peak_with_pump: f64,
    pub peak_detuning: f64,
    /// Peak probe transmission of plain Λ EIT.
    pub peak_without_pump: f64,
    /// peak_with_pump/peak_without_pump − 1.
    pub excess_gain: f64,
}

/// Settings of a pump–probe scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpScanOptions {
    /// Pump power relative to the control power.
    pub power_ratio: f64,
    /// Probe detunings searched for the transmission peak.
    pub probe_grid: Vec<f64>,
}

impl Default for PumpScanOptions {
    fn default() -> Self {
        PumpScanOptions {
            power_ratio: 0.5,
            probe_grid: (0..=1000).map(|k| -0.5 + 1e-3 * k as f64).collect(),
        }
    }
}

fn peak_transmission(params: &FwmParams, medium: &MediumParams, grid: &[f64]) -> Result<(f64, f64)> {
    let scan = fwm_gain_scan(grid, params.theta, params, medium)?;
    scan.iter()
        .map(|r| (r.probe_gain, r.delta_p))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::invalid("probe_grid", "must not be empty"))
}

/// Peak probe transmission versus the detuning of an extra pump driving
/// |1>→|4>. The pump Rabi frequency is ε·Ω_c·√(power ratio) with ε the
/// medium's Clebsch–Gordan ratio; its detuning enters as δd = −δ_pump.
pub fn pump_probe_scan(
    delta_pump: &[f64],
    params: &FwmParams,
    medium: &MediumParams,
    opts: &PumpScanOptions,
) -> Result<Vec<PumpScanPoint>> {
    ensure_nonneg("power_ratio", opts.power_ratio)?;
    let bare = FwmParams { omega_d: 0.0, ..*params };
    let (without, _) = peak_transmission(&bare, medium, &opts.probe_grid)?;
    let omega_d = medium.epsilon_fwm * params.omega_c * opts.power_ratio.sqrt();
    delta_pump
        .iter()
        .map(|&dp| {
            let p = FwmParams {
                omega_d,
                delta_d: -dp,
                ..*params
            };
            let (with, at) = peak_transmission(&p, medium, &opts.probe_grid)?;
            Ok(PumpScanPoint {
                delta_pump: dp,
                peak_with_pump: with,
                peak_detuning: at,
                peak_without_pump: without,
                excess_gain: with / without - 1.0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{gamma31_model, Gamma31Scheme};
    use crate::params::default_epsilon_fwm;
    use crate::spectra::lambda_response;
    use crate::units::deg_to_rad;

    fn d1_medium(d: f64, g21: f64) -> MediumParams {
        let g31 = gamma31_model(d, Gamma31Scheme::D1).unwrap();
        let t = Transition::CS_D1;
        MediumParams::double_lambda(d, g21, g31, t.rate_from_ghz(crate::units::CS_HYPERFINE_GHZ))
    }

    fn d1_params(m: &MediumParams, omega_c: f64) -> FwmParams {
        let f = FieldParams {
            omega_c,
            delta_c: 0.0,
            omega_d: default_epsilon_fwm() * omega_c,
            delta_d: -m.delta_hf,
            theta: 0.0,
        };
        FwmParams::new(&f, m, &Transition::CS_D1, false)
    }

    #[test]
    fn populations_close() {
        let m = d1_medium(1000.0, 2e-4);
        let p = d1_params(&m, 6.72);
        for lab in [PopulationLabeling::Derived, PopulationLabeling::AsPrinted] {
            let s = fwm_zero_order(&FwmParams { labeling: lab, ..p }, &m).unwrap();
            assert!((s.sum() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn populations_need_both_drives() {
        let m = d1_medium(100.0, 0.0);
        let p = FwmParams { omega_d: 0.0, ..d1_params(&m, 2.0) };
        assert!(matches!(fwm_zero_order(&p, &m), Err(Error::Undefined(_))));
    }

    #[test]
    fn weak_drive_limit() {
        let m = d1_medium(100.0, 1e-3);
        let p = FwmParams { omega_d: 1e-5, ..d1_params(&m, 3.0) };
        let derived = fwm_zero_order(&p, &m).unwrap();
        assert!((derived.s11 - 1.0).abs() < 1e-6);
        let printed = fwm_zero_order(&FwmParams { labeling: PopulationLabeling::AsPrinted, ..p }, &m).unwrap();
        assert!((printed.s22 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lambda_limit_matches_spectrum() {
        let m = d1_medium(300.0, 1e-3);
        let base = FwmParams { omega_d: 0.0, ..d1_params(&m, 2.5) };
        for k in 0..41 {
            let dp = -2.0 + 0.1 * k as f64;
            let r = fwm_susceptibilities(&base.with_delta_p(dp), &m).unwrap();
            let f = lambda_response(0.0, dp, &m, &FieldParams::control(2.5)).unwrap();
            let a = 0.5 * I * r.chi_pp;
            assert!((a - f).norm() <= 1e-12 * f.norm().max(1.0), "{dp}: {a} vs {f}");
            assert_eq!(r.chi_pi, ZERO);
            assert_eq!(r.chi_ip, ZERO);
        }
    }

    #[test]
    fn cross_terms_scale_with_drive() {
        // Populations held fixed so only the explicit Ω_d factor changes.
        let m = d1_medium(500.0, 1e-3);
        let p = d1_params(&m, 5.0).with_delta_p(0.05);
        let pops = fwm_zero_order(&p, &m).unwrap();
        let mut sys = first_order_system(&p, &m, &pops);
        let a = first_order(&sys).unwrap();
        // Doubling Ω_d in the source only (the matrix couplings are
        // second order in the far-detuned limit).
        for v in [&mut sys.b_probe[3], &mut sys.b_idler[0]] {
            *v *= 2.0;
        }
        let b = first_order(&sys).unwrap();
        let ratio = b.idler[1] / a.idler[1];
        assert!((ratio - 2.0).norm() < 1e-2, "{ratio}");
    }

    #[test]
    fn closed_form_matches_probe_side() {
        let m = d1_medium(1000.0, 2e-4);
        let p = d1_params(&m, 6.72);
        for dp in [0.0, 0.05, 0.5, -1.0] {
            let lin = fwm_susceptibilities(&p.with_delta_p(dp), &m).unwrap();
            let cf = fwm_susceptibilities(
                &FwmParams {
                    route: SusceptibilityRoute::ClosedForm,
                    ..p.with_delta_p(dp)
                },
                &m,
            )
            .unwrap();
            assert!((lin.chi_pp - cf.chi_pp).norm() < 1e-3 * lin.chi_pp.norm());
            assert!((lin.chi_pi - cf.chi_pi).norm() < 1e-3 * lin.chi_pi.norm());
        }
    }

    fn rk4_coupled(a: [[Complex64; 2]; 2], n: usize) -> (Complex64, Complex64) {
        let f = |v: [Complex64; 2]| [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]];
        let h = 1.0 / n as f64;
        let mut v = [Complex64::new(1.0, 0.0), ZERO];
        for _ in 0..n {
            let k1 = f(v);
            let k2 = f([v[0] + 0.5 * h * k1[0], v[1] + 0.5 * h * k1[1]]);
            let k3 = f([v[0] + 0.5 * h * k2[0], v[1] + 0.5 * h * k2[1]]);
            let k4 = f([v[0] + h * k3[0], v[1] + h * k3[1]]);
            for i in 0..2 {
                v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (v[0], v[1])
    }

    #[test]
    fn coupled_mode_matches_integration() {
        let cases = [
            [[Complex64::new(-0.3, 1.2), Complex64::new(0.2, -0.1)], [Complex64::new(0.05, 0.4), Complex64::new(-0.01, 7.0)]],
            [[Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(0.1, 0.0)]],
            [[Complex64::new(-1.0, -2.0), Complex64::new(1.0, 0.5)], [Complex64::new(-0.7, 0.2), Complex64::new(-1.0, -2.0)]],
        ];
        for a in cases {
            let (p, q) = coupled_mode(a);
            let (pr, qr) = rk4_coupled(a, 4000);
            assert!((p - pr).norm() < 1e-10, "{p} {pr}");
            assert!((q - qr).norm() < 1e-10, "{q} {qr}");
        }
    }

    #[test]
    fn decoupled_limit_is_exponential() {
        let a = Complex64::new(-0.4, 2.0);
        let (p, q) = coupled_mode([[a, ZERO], [ZERO, Complex64::new(0.0, 3.0)]]);
        assert!((p - a.exp()).norm() < 1e-14);
        assert_eq!(q, ZERO);
    }

    #[test]
    fn control_index_sign_and_limit() {
        let m = d1_medium(1000.0, 2e-4);
        let p = d1_params(&m, 6.72);
        let n = control_index(&p, &m);
        assert!(n > 1.0 && p.delta_d < 0.0);
        assert!((n - 1.0 - 1.267e-6).abs() < 5e-9, "{}", n - 1.0);
        let far = FwmParams { delta_d: 1e12, ..p };
        assert!((control_index(&far, &m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_gain_and_angle_suppression() {
        let m = d1_medium(1000.0, 2e-4);
        let p = d1_params(&m, 6.72);
        let grid: Vec<f64> = (0..=300).map(|k| -0.3 + 2e-3 * k as f64).collect();
        let scan = fwm_gain_scan(&grid, 0.0, &p, &m).unwrap();
        let best = max_gain(&scan).unwrap();
        assert!((best.fwm_gain - 0.01558).abs() < 2e-4, "{}", best.fwm_gain);
        assert!((best.delta_p - 0.051).abs() < 4e-3, "{}", best.delta_p);
        let tilted = fwm_gain_steady(best.delta_p, deg_to_rad(0.5), &p, &m).unwrap();
        assert!(tilted.fwm_gain < best.fwm_gain / 5.0);
    }

    #[test]
    fn no_drive_never_amplifies() {
        let m = d1_medium(800.0, 1e-3);
        let p = FwmParams { omega_d: 0.0, ..d1_params(&m, 4.0) };
        for k in 0..50 {
            let r = fwm_gain_steady(-1.0 + 0.04 * k as f64, 0.0, &p, &m).unwrap();
            assert!(r.probe_gain <= 1.0);
            assert!(r.fwm_gain.abs() < 1e-12);
        }
    }
}
