//! Storage and retrieval: edge-cutoff efficiency, storage-time decay,
//! time-bandwidth product, storage efficiency versus optical depth and the
//! time-domain Maxwell–Bloch simulation.

mod obe;
mod solver;

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_nonneg, Error, Result};
use crate::estimation::{gamma31_model, Gamma31Scheme};
use crate::propagation::{broadening_factor, control_for_zeta, eta_tran};

pub use solver::{
    max_time_step, simulate_propagation, simulate_storage, SolverOptions, StorageResult, TimeDomainRun,
    MAX_DEPTH_PER_CELL,
};

/// Fraction of the pulse inside the medium at switch-off:
/// ½[erf(2√ln2·κ) + erf(2√ln2·(ζ−κ)/β)].
///
/// The first term counts the trailing edge that has entered by t_c = κT_p;
/// the second the leading edge that has not yet left at t_c.
pub fn eta_comp(kappa: f64, zeta: f64, beta: f64) -> Result<f64> {
    ensure_finite("kappa", kappa)?;
    ensure_finite("zeta", zeta)?;
    ensure_finite("beta", beta)?;
    if beta < 1.0 {
        return Err(Error::invalid("beta", format!("must be >= 1, got {beta}")));
    }
    let s = 2.0 * LN_2.sqrt();
    let trailing = libm::erf(s * kappa);
    let leading = libm::erf(s * (zeta - kappa) / beta);
    Ok((0.5 * (trailing + leading)).max(0.0))
}

/// Shape of the control switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Ramp {
    Step,
    /// Half-cosine ramp of the given duration centered on the switch time.
    Smooth { duration: f64 },
}

/// Phenomenological decay of the stored coherence during the hold:
/// η_stored(t) = A·e^{−t²/τ²}·e^{−2γ21 t}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub amplitude: f64,
    /// Gaussian decay time (1/Γ); infinite disables the Gaussian factor.
    pub tau: f64,
    /// Exponential component; zero when the Gaussian fit already absorbs it.
    pub gamma21: f64,
}

impl DecayModel {
    pub fn gaussian(amplitude: f64, tau: f64) -> Self {
        DecayModel {
            amplitude,
            tau,
            gamma21: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("amplitude", self.amplitude)?;
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(Error::invalid("amplitude", "must lie in [0, 1]"));
        }
        if self.tau.is_nan() || self.tau <= 0.0 {
            return Err(Error::invalid("tau", "must be > 0"));
        }
        ensure_nonneg("gamma21", self.gamma21)
    }

    /// Efficiency remaining after a hold of `t`.
    pub fn eta_stored(&self, t: f64) -> Result<f64> {
        self.validate()?;
        ensure_nonneg("t_storage", t)?;
        Ok(self.amplitude * self.gaussian_factor(t) * (-2.0 * self.gamma21 * t).exp())
    }

    /// e^{−t²/τ²}
    pub fn gaussian_factor(&self, t: f64) -> f64 {
        if self.tau.is_infinite() {
            1.0
        } else {
            (-(t / self.tau).powi(2)).exp()
        }
    }
}

/// Time-bandwidth product at 50% storage efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tbp {
    /// τ√ln(2A)/T_p, ignoring the exponential component.
    pub analytic: f64,
    /// Root of η_stored(t) = 0.5 divided by T_p.
    pub numeric: f64,
    /// Hold time at which η_stored = 0.5.
    pub t_half: f64,
}

pub fn tbp_at_half(decay: &DecayModel, t_p: f64) -> Result<Tbp> {
    decay.validate()?;
    crate::error::ensure_positive("t_p", t_p)?;
    if decay.amplitude <= 0.5 {
        return Err(Error::Undefined(format!(
            "η_stored starts at {} and never reaches 0.5 from above",
            decay.amplitude
        )));
    }
    let analytic = decay.tau * (2.0 * decay.amplitude).ln().sqrt() / t_p;
    let g = |t: f64| decay.amplitude * decay.gaussian_factor(t) * (-2.0 * decay.gamma21 * t).exp() - 0.5;
    let mut hi = if decay.tau.is_finite() { decay.tau } else { 1.0 };
    let mut n = 0;
    while g(hi) > 0.0 {
        hi *= 2.0;
        n += 1;
        if n > 2000 {
            return Err(Error::Undefined("η_stored never decays to 0.5".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_half = 0.5 * (lo + hi);
    Ok(Tbp {
        analytic,
        numeric: t_half / t_p,
        t_half,
    })
}

/// Control-switch schedule for a storage run. Times in 1/Γ on the same axis
/// as the pulse center t0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageProtocol {
    pub t_off: f64,
    pub t_on: f64,
    pub ramp: Ramp,
    /// Control Rabi frequency used for readout; defaults to the write value.
    pub omega_c_read: Option<f64>,
    /// Gaussian motional decay time applied to the spin wave during the hold.
    pub motional_tau: Option<f64>,
}

/// Default switch-off time in units of T_p after the pulse peak enters.
pub const DEFAULT_KAPPA: f64 = 1.1;

impl StorageProtocol {
    /// Switch off κT_p after the pulse peak enters and back on after `hold`.
    pub fn from_kappa(t0: f64, t_p: f64, kappa: f64, hold: f64, ramp: Ramp) -> Self {
        let t_off = t0 + kappa * t_p;
        StorageProtocol {
            t_off,
            t_on: t_off + hold,
            ramp,
            omega_c_read: None,
            motional_tau: None,
        }
    }

    pub fn kappa(&self, t0: f64, t_p: f64) -> f64 {
        (self.t_off - t0) / t_p
    }

    pub fn ramp_duration(&self) -> f64 {
        match self.ramp {
            Ramp::Step => 0.0,
            Ramp::Smooth { duration } => duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("t_off", self.t_off)?;
        ensure_finite("t_on", self.t_on)?;
        ensure_nonneg("ramp_duration", self.ramp_duration())?;
        if self.t_on <= self.t_off {
            return Err(Error::invalid("t_on", "must be later than t_off"));
        }
        if self.t_on - self.t_off < self.ramp_duration() {
            return Err(Error::invalid("t_on", "hold is shorter than the ramp duration"));
        }
        if let Some(w) = self.omega_c_read {
            ensure_nonneg("omega_c_read", w)?;
        }
        if let Some(tau) = self.motional_tau {
            if tau.is_nan() || tau <= 0.0 {
                return Err(Error::invalid("motional_tau", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Decoherence model used in the storage-efficiency sweep over optical depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SeSweepModel {
    /// Λ scheme with fixed ground-state decoherence and γ31 from the D1
    /// depth model.
    LambdaD1 { gamma21: f64 },
    /// N-type scheme: γ21 = γ0 + ε²Ω_c²γ41/(4δs²) with γ31 = γ41 from the
    /// D2 depth model.
    NTypeD2 { gamma0: f64, delta_s: f64, epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SePoint {
    pub optical_depth: f64,
    pub omega_c: f64,
    pub gamma31: f64,
    pub gamma21: f64,
    pub eta: f64,
}

/// Storage efficiency (slow-light transmission) versus optical depth at
/// fixed T_p and ζ, with Ω_c solved from ζT_p = D/Ω_c².
pub fn se_vs_od_sweep(ods: &[f64], model: &SeSweepModel, t_p: f64, zeta: f64) -> Result<Vec<SePoint>> {
    if ods.is_empty() {
        return Err(Error::invalid("od_list", "is empty"));
    }
    crate::error::ensure_positive("t_p", t_p)?;
    crate::error::ensure_positive("zeta", zeta)?;
    if let SeSweepModel::NTypeD2 { delta_s, .. } = model {
        if *delta_s == 0.0 {
            return Err(Error::invalid("delta_s", "must be nonzero"));
        }
    }
    ods.par_iter()
        .map(|&d| {
            crate::error::ensure_positive("optical_depth", d)?;
            let omega_c = control_for_zeta(d, zeta, t_p);
            let (gamma31, gamma21) = match *model {
                SeSweepModel::LambdaD1 { gamma21 } => (gamma31_model(d, Gamma31Scheme::D1)?, gamma21),
                SeSweepModel::NTypeD2 {
                    gamma0,
                    delta_s,
                    epsilon,
                } => {
                    let g = gamma31_model(d, Gamma31Scheme::D2)?;
                    let ws = epsilon * omega_c;
                    (g, gamma0 + ws * ws * g / (4.0 * delta_s * delta_s))
                }
            };
            let eta = eta_tran(d, zeta, gamma21, gamma31, t_p)?;
            Ok(SePoint {
                optical_depth: d,
                omega_c,
                gamma31,
                gamma21,
                eta,
            })
        })
        .collect()
}

/// Analytic edge-cutoff efficiency for a Λ medium at the given settings.
pub fn eta_comp_for(optical_depth: f64, gamma31: f64, t_p: f64, zeta: f64, kappa: f64) -> Result<f64> {
    let omega_c = control_for_zeta(optical_depth, zeta, t_p);
    eta_comp(kappa, zeta, broadening_factor(optical_depth, gamma31, t_p, omega_c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comp_limits() {
        assert!((eta_comp(50.0, 100.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(eta_comp(0.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(eta_comp(1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn comp_fig_s1_values() {
        for (zeta, expected) in [(2.5, 0.989_56), (2.6, 0.991_42), (2.7, 0.992_66)] {
            let v = eta_comp_for(100.0, 0.5, 5.95, zeta, 1.1).unwrap();
            assert!((v - expected).abs() < 2e-5, "{zeta}: {v}");
        }
    }

    #[test]
    fn stored_decay_values() {
        let tau = 325.0;
        let d = DecayModel::gaussian(0.9, tau);
        assert_eq!(d.eta_stored(0.0).unwrap(), 0.9);
        assert!((d.eta_stored(tau).unwrap() - 0.9 / std::f64::consts::E).abs() < 1e-12);
        let tbp = tbp_at_half(&d, 1.0).unwrap();
        assert!((tbp.t_half - 249.16).abs() < 0.01, "{}", tbp.t_half);
        assert!((tbp.numeric - tbp.analytic).abs() < 1e-9);
    }

    #[test]
    fn tbp_threshold() {
        assert!(matches!(
            tbp_at_half(&DecayModel::gaussian(0.5, 10.0), 1.0),
            Err(Error::Undefined(_))
        ));
        let tiny = tbp_at_half(&DecayModel::gaussian(0.500_001, 10.0), 1.0).unwrap();
        assert!(tiny.analytic < 0.02);
    }

    #[test]
    fn protocol_checks() {
        let p = StorageProtocol::from_kappa(0.0, 6.0, 1.1, 0.0, Ramp::Step);
        assert!(p.validate().is_err());
        let p = StorageProtocol::from_kappa(0.0, 6.0, 1.1, 0.3, Ramp::Smooth { duration: 0.6 });
        assert!(p.validate().is_err());
        let p = StorageProtocol::from_kappa(0.0, 6.0, 1.1, 1.0, Ramp::Smooth { duration: 0.6 });
        assert!(p.validate().is_ok());
        assert!((p.kappa(0.0, 6.0) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn lossless_sweep_increases() {
        let ods: Vec<f64> = (1..=20).map(|k| 50.0 * k as f64).collect();
        let rows = se_vs_od_sweep(&ods, &SeSweepModel::LambdaD1 { gamma21: 0.0 }, 5.95, 2.7).unwrap();
        assert!(rows.windows(2).all(|w| w[1].eta > w[0].eta));
    }
}
