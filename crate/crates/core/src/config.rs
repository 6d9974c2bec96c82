//! Laboratory-unit parameter description and its conversion to the internal
//! Γ-normalized containers.
//!
//! Frequencies are given in MHz (2π × value) or GHz, durations in ns or μs,
//! angles in degrees and lengths in mm. Decay rates, Rabi frequencies and the
//! control detuning are quoted in units of Γ, the way they are usually
//! reported for these experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{
    default_epsilon_fwm, default_epsilon_switch, FieldParams, GaussianPulse, MediumParams, Scheme,
};
use crate::units::{Transition, CS_HYPERFINE_GHZ};

/// Named transition preset or a manual entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TransitionSpec {
    Preset(TransitionPreset),
    Custom(CustomTransition),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionPreset {
    CsD1,
    CsD2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTransition {
    /// Γ/2π in MHz.
    pub gamma_mhz: f64,
    pub wavelength_nm: f64,
}

impl TransitionSpec {
    pub fn resolve(&self) -> Result<Transition> {
        match self {
            TransitionSpec::Preset(TransitionPreset::CsD1) => Ok(Transition::CS_D1),
            TransitionSpec::Preset(TransitionPreset::CsD2) => Ok(Transition::CS_D2),
            TransitionSpec::Custom(c) => {
                Transition::new(2.0 * std::f64::consts::PI * c.gamma_mhz * 1e6, c.wavelength_nm * 1e-9)
            }
        }
    }
}

impl Default for TransitionSpec {
    fn default() -> Self {
        TransitionSpec::Preset(TransitionPreset::CsD1)
    }
}

fn default_scheme() -> Scheme {
    Scheme::LambdaD1
}

fn default_length_mm() -> f64 {
    14.0
}

fn default_branch() -> f64 {
    0.5
}

fn default_hf_ghz() -> f64 {
    CS_HYPERFINE_GHZ
}

fn default_omega_p0() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    pub optical_depth: f64,
    #[serde(default = "default_length_mm")]
    pub length_mm: f64,
    #[serde(default)]
    pub gamma21: f64,
    pub gamma31: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma32: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma41: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma42: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma43: Option<f64>,
    #[serde(default = "default_branch")]
    pub branch31: f64,
    #[serde(default = "default_branch")]
    pub branch32: f64,
    #[serde(default = "default_branch")]
    pub branch41: f64,
    #[serde(default = "default_branch")]
    pub branch42: f64,
    /// Switching detuning δs/2π in MHz (N-type scheme).
    #[serde(default)]
    pub delta_s_mhz: f64,
    #[serde(default = "default_hf_ghz")]
    pub delta_hf_ghz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_switch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_fwm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    /// Control Rabi frequency in units of Γ.
    pub omega_c: f64,
    /// Control detuning in units of Γ.
    #[serde(default)]
    pub delta_c: f64,
    /// Pump Rabi frequency in units of Γ; defaults to ε_fwm·Ω_c.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    /// Pump detuning δd/2π in GHz; defaults to −δhf.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_d_ghz: Option<f64>,
    #[serde(default)]
    pub theta_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    /// Intensity FWHM in ns.
    pub t_p_ns: f64,
    #[serde(default = "default_omega_p0")]
    pub omega_p0: f64,
    #[serde(default)]
    pub t0_ns: f64,
}

/// Complete parameter set in laboratory units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    #[serde(default)]
    pub transition: TransitionSpec,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    pub medium: MediumSection,
    pub fields: FieldSection,
    pub pulse: PulseSection,
}

/// Internal, Γ-normalized parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalParams {
    pub transition: Transition,
    pub medium: MediumParams,
    pub fields: FieldParams,
    pub pulse: GaussianPulse,
}

fn check_nonneg(field: &str, v: f64) -> Result<()> {
    crate::error::ensure_nonneg(field, v)
}

impl PhysicalParams {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Convert to Γ-normalized units and validate.
    pub fn to_internal(&self) -> Result<InternalParams> {
        let tr = self.transition.resolve()?;
        let m = &self.medium;
        check_nonneg("medium.length_mm", m.length_mm)?;
        check_nonneg("pulse.t_p_ns", self.pulse.t_p_ns)?;
        let gamma31 = m.gamma31;
        let gamma41 = m.gamma41.unwrap_or(gamma31);
        let medium = MediumParams {
            optical_depth: m.optical_depth,
            length: m.length_mm * 1e-3,
            gamma21: m.gamma21,
            gamma31,
            gamma32: m.gamma32.unwrap_or(gamma31),
            gamma41,
            gamma42: m.gamma42.unwrap_or(gamma41),
            gamma43: m.gamma43.unwrap_or(1.0),
            branch31: m.branch31,
            branch32: m.branch32,
            branch41: m.branch41,
            branch42: m.branch42,
            scheme: self.scheme,
            delta_s: tr.rate_from_mhz(m.delta_s_mhz),
            delta_hf: tr.rate_from_ghz(m.delta_hf_ghz),
            epsilon_switch: m.epsilon_switch.unwrap_or_else(default_epsilon_switch),
            epsilon_fwm: m.epsilon_fwm.unwrap_or_else(default_epsilon_fwm),
        };
        medium.validate()?;
        let f = &self.fields;
        let fields = FieldParams {
            omega_c: f.omega_c,
            delta_c: f.delta_c,
            omega_d: f.omega_d.unwrap_or(medium.epsilon_fwm * f.omega_c),
            delta_d: match f.delta_d_ghz {
                Some(g) => tr.rate_from_ghz(g),
                None => -medium.delta_hf,
            },
            theta: f.theta_deg.to_radians(),
        };
        fields.validate()?;
        let pulse = GaussianPulse::new(
            self.pulse.omega_p0,
            tr.time_from_ns(self.pulse.t_p_ns),
            tr.time_from_ns(self.pulse.t0_ns),
        )?;
        Ok(InternalParams {
            transition: tr,
            medium,
            fields,
            pulse,
        })
    }
}

impl InternalParams {
    /// Express internal parameters back in laboratory units. Optional
    /// entries are always written out explicitly.
    pub fn to_physical(&self) -> PhysicalParams {
        let tr = &self.transition;
        let m = &self.medium;
        let transition = if *tr == Transition::CS_D1 {
            TransitionSpec::Preset(TransitionPreset::CsD1)
        } else if *tr == Transition::CS_D2 {
            TransitionSpec::Preset(TransitionPreset::CsD2)
        } else {
            TransitionSpec::Custom(CustomTransition {
                gamma_mhz: tr.gamma_sp / (2.0 * std::f64::consts::PI * 1e6),
                wavelength_nm: tr.wavelength * 1e9,
            })
        };
        PhysicalParams {
            transition,
            scheme: m.scheme,
            medium: MediumSection {
                optical_depth: m.optical_depth,
                length_mm: m.length * 1e3,
                gamma21: m.gamma21,
                gamma31: m.gamma31,
                gamma32: Some(m.gamma32),
                gamma41: Some(m.gamma41),
                gamma42: Some(m.gamma42),
                gamma43: Some(m.gamma43),
                branch31: m.branch31,
                branch32: m.branch32,
                branch41: m.branch41,
                branch42: m.branch42,
                delta_s_mhz: tr.rate_to_mhz(m.delta_s),
                delta_hf_ghz: tr.rate_to_ghz(m.delta_hf),
                epsilon_switch: Some(m.epsilon_switch),
                epsilon_fwm: Some(m.epsilon_fwm),
            },
            fields: FieldSection {
                omega_c: self.fields.omega_c,
                delta_c: self.fields.delta_c,
                omega_d: Some(self.fields.omega_d),
                delta_d_ghz: Some(tr.rate_to_ghz(self.fields.delta_d)),
                theta_deg: self.fields.theta.to_degrees(),
            },
            pulse: PulseSection {
                t_p_ns: tr.time_to_ns(self.pulse.t_p),
                omega_p0: self.pulse.omega_p0,
                t0_ns: tr.time_to_ns(self.pulse.t0),
            },
        }
    }
}
