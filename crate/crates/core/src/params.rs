//! Validated parameter containers in Γ-normalized units.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_nonneg, ensure_positive, Error, Result};

/// Clebsch–Gordan ratio of the off-resonant switching transition to the
/// control transition for the cesium D2 N-type scheme.
pub fn default_epsilon_switch() -> f64 {
    (48.0_f64 / 7.0).sqrt()
}

/// Ratio of the control's Rabi frequency on the probe transition to the one
/// on the control transition for the cesium D1 double-Λ scheme.
pub fn default_epsilon_fwm() -> f64 {
    -(7.0_f64).sqrt()
}

/// Level scheme being modeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Three-level Λ system (cesium D1).
    LambdaD1,
    /// Λ system with an off-resonant fourth level coupled by the control
    /// (cesium D2 photon switching).
    #[serde(rename = "ntype-d2")]
    NTypeD2,
    /// Double-Λ four-wave-mixing configuration.
    DoubleLambdaFwm,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::LambdaD1 => "lambda-d1",
            Scheme::NTypeD2 => "ntype-d2",
            Scheme::DoubleLambdaFwm => "double-lambda-fwm",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lambda-d1" | "lambda" | "d1" => Ok(Scheme::LambdaD1),
            "ntype-d2" | "ntype" | "n-type" | "d2" => Ok(Scheme::NTypeD2),
            "double-lambda-fwm" | "fwm" => Ok(Scheme::DoubleLambdaFwm),
            other => Err(Error::invalid("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Atomic medium. Rates and detunings are in units of Γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// Resonant optical depth D of the probe transition.
    pub optical_depth: f64,
    /// Medium length in meters. Only used for phase matching and the
    /// vacuum transit time.
    pub length: f64,
    pub gamma21: f64,
    pub gamma31: f64,
    pub gamma32: f64,
    pub gamma41: f64,
    pub gamma42: f64,
    pub gamma43: f64,
    /// Population decay branches Γ31, Γ32, Γ41, Γ42.
    pub branch31: f64,
    pub branch32: f64,
    pub branch41: f64,
    pub branch42: f64,
    pub scheme: Scheme,
    /// Detuning of the control from the switching transition |2>→|4>.
    pub delta_s: f64,
    /// Ground-state hyperfine splitting.
    pub delta_hf: f64,
    pub epsilon_switch: f64,
    pub epsilon_fwm: f64,
}

/// Default medium length (m): the long axis of the atomic cloud.
pub const DEFAULT_LENGTH: f64 = 14e-3;

impl MediumParams {
    /// A Λ medium with the default branching and coherence defaults
    /// (γ32 = γ31, γ41 = γ42 = γ31, γ43 = Γ).
    pub fn lambda(optical_depth: f64, gamma21: f64, gamma31: f64) -> Self {
        MediumParams {
            optical_depth,
            length: DEFAULT_LENGTH,
            gamma21,
            gamma31,
            gamma32: gamma31,
            gamma41: gamma31,
            gamma42: gamma31,
            gamma43: 1.0,
            branch31: 0.5,
            branch32: 0.5,
            branch41: 0.5,
            branch42: 0.5,
            scheme: Scheme::LambdaD1,
            delta_s: 0.0,
            delta_hf: 0.0,
            epsilon_switch: default_epsilon_switch(),
            epsilon_fwm: default_epsilon_fwm(),
        }
    }

    /// An N-type medium; `gamma41` also sets γ42.
    pub fn ntype(optical_depth: f64, gamma21: f64, gamma31: f64, gamma41: f64, delta_s: f64) -> Self {
        MediumParams {
            gamma41,
            gamma42: gamma41,
            scheme: Scheme::NTypeD2,
            delta_s,
            ..Self::lambda(optical_depth, gamma21, gamma31)
        }
    }

    /// A double-Λ medium for four-wave-mixing calculations.
    pub fn double_lambda(optical_depth: f64, gamma21: f64, gamma31: f64, delta_hf: f64) -> Self {
        MediumParams {
            scheme: Scheme::DoubleLambdaFwm,
            delta_hf,
            ..Self::lambda(optical_depth, gamma21, gamma31)
        }
    }

    pub fn with_optical_depth(&self, optical_depth: f64) -> Self {
        MediumParams {
            optical_depth,
            ..self.clone()
        }
    }

    /// Total population decay rate of |3>.
    pub fn gamma3(&self) -> f64 {
        self.branch31 + self.branch32
    }

    /// Total population decay rate of |4>.
    pub fn gamma4(&self) -> f64 {
        self.branch41 + self.branch42
    }

    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("optical_depth", self.optical_depth)?;
        ensure_positive("length", self.length)?;
        for (name, v) in [
            ("gamma21", self.gamma21),
            ("gamma31", self.gamma31),
            ("gamma32", self.gamma32),
            ("gamma41", self.gamma41),
            ("gamma42", self.gamma42),
            ("gamma43", self.gamma43),
            ("branch31", self.branch31),
            ("branch32", self.branch32),
            ("branch41", self.branch41),
            ("branch42", self.branch42),
        ] {
            ensure_nonneg(name, v)?;
        }
        ensure_finite("delta_s", self.delta_s)?;
        ensure_finite("delta_hf", self.delta_hf)?;
        ensure_finite("epsilon_switch", self.epsilon_switch)?;
        ensure_finite("epsilon_fwm", self.epsilon_fwm)?;
        if self.scheme == Scheme::NTypeD2 && self.delta_s == 0.0 {
            return Err(Error::invalid("delta_s", "must be nonzero for the N-type scheme"));
        }
        Ok(())
    }
}

/// Laser fields. Rabi frequencies and detunings in units of Γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub omega_c: f64,
    pub delta_c: f64,
    /// Rabi frequency of the off-resonant drive on |1>→|4>.
    pub omega_d: f64,
    pub delta_d: f64,
    /// Control–probe angle (rad).
    pub theta: f64,
}

impl FieldParams {
    /// Resonant control with no FWM drive.
    pub fn control(omega_c: f64) -> Self {
        FieldParams {
            omega_c,
            delta_c: 0.0,
            omega_d: 0.0,
            delta_d: 0.0,
            theta: 0.0,
        }
    }

    pub fn with_delta_c(self, delta_c: f64) -> Self {
        FieldParams { delta_c, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("omega_c", self.omega_c)?;
        ensure_finite("delta_c", self.delta_c)?;
        ensure_finite("omega_d", self.omega_d)?;
        ensure_finite("delta_d", self.delta_d)?;
        ensure_nonneg("theta", self.theta)?;
        if self.theta >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid("theta", "must be below π/2"));
        }
        Ok(())
    }
}

/// Gaussian probe pulse Ω_p(t) = Ω_p0 exp(−2 ln2 (t−t0)²/T_p²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub omega_p0: f64,
    /// Intensity FWHM duration (1/Γ).
    pub t_p: f64,
    /// Time at which the pulse peak enters the medium (1/Γ).
    pub t0: f64,
}

/// Probe/control ratio above which the weak-probe treatment is flagged.
pub const WEAK_PROBE_RATIO: f64 = 0.1;

impl GaussianPulse {
    pub fn new(omega_p0: f64, t_p: f64, t0: f64) -> Result<Self> {
        let p = GaussianPulse { omega_p0, t_p, t0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("omega_p0", self.omega_p0)?;
        ensure_positive("t_p", self.t_p)?;
        ensure_finite("t0", self.t0)
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.t_p;
        self.omega_p0 * (-2.0 * std::f64::consts::LN_2 * x * x).exp()
    }

    /// ∫|Ω_p|² dt over the whole pulse.
    pub fn energy(&self) -> f64 {
        self.omega_p0 * self.omega_p0 * self.t_p * (std::f64::consts::PI / (4.0 * std::f64::consts::LN_2)).sqrt()
    }

    /// Fraction of the pulse energy arriving after time `t`.
    pub fn energy_fraction_after(&self, t: f64) -> f64 {
        let x = 2.0 * std::f64::consts::LN_2.sqrt() * (t - self.t0) / self.t_p;
        0.5 * libm::erfc(x)
    }

    /// Intensity FWHM of the pulse spectrum, 4 ln2 / T_p.
    pub fn spectral_fwhm(&self) -> f64 {
        4.0 * std::f64::consts::LN_2 / self.t_p
    }

    /// A warning when the probe is not weak compared with the control.
    pub fn weak_probe_warning(&self, omega_c: f64) -> Option<String> {
        if omega_c <= 0.0 || self.omega_p0 > WEAK_PROBE_RATIO * omega_c {
            Some(format!(
                "probe Rabi frequency {} is not small against the control {} (ratio limit {})",
                self.omega_p0, omega_c, WEAK_PROBE_RATIO
            ))
        } else {
            None
        }
    }
}
