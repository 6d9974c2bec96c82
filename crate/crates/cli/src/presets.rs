//! Built-in scenarios, one per reproduced figure.

use std::collections::BTreeMap;

use eitmem::config::{
    FieldSection, MediumSection, PhysicalParams, PulseSection, TransitionPreset, TransitionSpec,
};
use eitmem::estimation::Gamma31Scheme;
use eitmem::spectra::ControlDetuningMode;
use eitmem::units::CS_HYPERFINE_GHZ;
use eitmem::Scheme;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::scenario::{d1_gamma31, FwmModel, RampSpec, Scenario, SeModelSpec, Spacing, Sweep, Target};

/// Switching detuning of the D2 scheme, δs/2π in MHz (red of |2>→|4>).
const D2_DELTA_S_MHZ: f64 = -251.09;

/// Catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetInfo {
    pub name: String,
    pub figure: String,
    pub description: String,
    /// True for presets running the time-domain solvers (minutes rather than
    /// seconds on slow machines).
    pub time_domain: bool,
    pub metadata: BTreeMap<String, String>,
}

fn medium(optical_depth: f64, gamma21: f64, gamma31: f64) -> MediumSection {
    MediumSection {
        optical_depth,
        length_mm: 14.0,
        gamma21,
        gamma31,
        gamma32: None,
        gamma41: None,
        gamma42: None,
        gamma43: None,
        branch31: 0.5,
        branch32: 0.5,
        branch41: 0.5,
        branch42: 0.5,
        delta_s_mhz: 0.0,
        delta_hf_ghz: CS_HYPERFINE_GHZ,
        epsilon_switch: None,
        epsilon_fwm: None,
    }
}

fn fields(omega_c: f64, delta_c: f64) -> FieldSection {
    FieldSection {
        omega_c,
        delta_c,
        omega_d: None,
        delta_d_ghz: None,
        theta_deg: 0.0,
    }
}

fn pulse(t_p_ns: f64) -> PulseSection {
    PulseSection {
        t_p_ns,
        omega_p0: 0.01,
        t0_ns: 0.0,
    }
}

fn d1(scheme: Scheme, medium: MediumSection, fields: FieldSection, t_p_ns: f64) -> PhysicalParams {
    PhysicalParams {
        transition: TransitionSpec::Preset(TransitionPreset::CsD1),
        scheme,
        medium,
        fields,
        pulse: pulse(t_p_ns),
    }
}

fn d2_ntype(optical_depth: f64, gamma21: f64, gamma31: f64, omega_c: f64) -> PhysicalParams {
    PhysicalParams {
        transition: TransitionSpec::Preset(TransitionPreset::CsD2),
        scheme: Scheme::NTypeD2,
        medium: MediumSection {
            delta_s_mhz: D2_DELTA_S_MHZ,
            gamma41: Some(gamma31),
            ..medium(optical_depth, gamma21, gamma31)
        },
        fields: fields(omega_c, 0.0),
        pulse: pulse(207.0),
    }
}

struct Builder {
    name: &'static str,
    figure: &'static str,
    description: String,
    target: Target,
    sweep: Option<Sweep>,
    params: PhysicalParams,
    metadata: Vec<(&'static str, &'static str)>,
}

impl Builder {
    fn build(self) -> Scenario {
        Scenario {
            name: self.name.into(),
            figure: Some(self.figure.into()),
            description: self.description,
            target: self.target,
            sweep: self.sweep,
            metadata: self
                .metadata
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            params: self.params,
        }
    }
}

fn log_sweep(variable: &str, start: f64, stop: f64, points: usize) -> Sweep {
    Sweep {
        spacing: Spacing::Log,
        ..Sweep::linear(variable, start, stop, points)
    }
}

fn s3_d2(name: &'static str, figure: &'static str, d: f64, g21: f64, omega_c: f64) -> Builder {
    Builder {
        name,
        figure,
        description: format!("D2 N-type EIT spectrum at D = {d}, Ω_c = {omega_c}Γ, γ21 = {g21}Γ, γ31 = γ41 = 0.80Γ, δc = 0"),
        target: Target::Spectrum {
            detuning_mode: ControlDetuningMode::Zero,
        },
        sweep: None,
        params: d2_ntype(d, g21, 0.80, omega_c),
        metadata: vec![],
    }
}

fn s3_d1(name: &'static str, figure: &'static str, d: f64, g21: f64, delta_c: f64, omega_c: f64) -> Builder {
    Builder {
        name,
        figure,
        description: format!("D1 Λ EIT spectrum at D = {d}, Ω_c = {omega_c}Γ, γ21 = {g21}Γ, δc = {delta_c}Γ, γ31 = 0.82Γ"),
        target: Target::Spectrum {
            detuning_mode: ControlDetuningMode::Direct,
        },
        sweep: None,
        params: d1(Scheme::LambdaD1, medium(d, g21, 0.82), fields(omega_c, delta_c), 207.0),
        metadata: vec![],
    }
}

fn fwm_params(d: f64, gamma21: f64, gamma31: f64, omega_c: f64, theta_deg: f64, t_p_ns: f64) -> PhysicalParams {
    d1(
        Scheme::DoubleLambdaFwm,
        MediumSection {
            gamma32: Some(gamma31),
            gamma41: Some(gamma31),
            gamma42: Some(gamma31),
            ..medium(d, gamma21, gamma31)
        },
        FieldSection {
            theta_deg,
            ..fields(omega_c, 0.0)
        },
        t_p_ns,
    )
}

const SIGN_NOTE: &str = "The four-wave-mixing derivation uses its own sign for δp. With the pump off and all \
population in |1>, its probe exponent equals the Λ response at the same δp, so the translation to the \
convention of the other outputs is the identity; delta_p_over_Gamma is reported unchanged.";

fn builders() -> Vec<Builder> {
    let d1_g31_1000 = d1_gamma31(1000.0);
    vec![
        Builder {
            name: "fig2a",
            figure: "Fig. 2(a)",
            description: "N-type effective ground-state decoherence versus control power (γ0 = 0.0001Γ, γ41 = 0.8Γ)".into(),
            target: Target::NtypeEffective,
            sweep: Some(Sweep::linear("omega_c", 0.0, 5.0, 51)),
            params: d2_ntype(203.0, 0.0001, 0.8, 1.0),
            metadata: vec![],
        },
        Builder {
            name: "fig2b",
            figure: "Fig. 2(b)",
            description: "N-type light shift of the transparency peak versus control power".into(),
            target: Target::NtypeEffective,
            sweep: Some(Sweep::linear("omega_c", 0.25, 5.0, 20)),
            params: d2_ntype(203.0, 0.0001, 0.8, 1.0),
            metadata: vec![],
        },
        Builder {
            name: "fig3a",
            figure: "Fig. 3(a)",
            description: "D1 EIT spectrum at D = 822, Ω_c = 7.41Γ, γ21 = 0.0004Γ, δc = −0.012Γ, γ31 = 1.07Γ".into(),
            target: Target::Spectrum {
                detuning_mode: ControlDetuningMode::Direct,
            },
            sweep: None,
            params: d1(Scheme::LambdaD1, medium(822.0, 0.0004, 1.07), fields(7.41, -0.012), 207.0),
            metadata: vec![],
        },
        Builder {
            name: "fig3b",
            figure: "Fig. 3(b)",
            description: "Input, slow and stored-and-retrieved pulses at the Fig. 3(a) parameters (time-domain solver)".into(),
            target: Target::Store {
                t_off_ns: None,
                t_on_ns: None,
                ramp: RampSpec::default(),
                tau_us: None,
            },
            sweep: None,
            params: d1(Scheme::LambdaD1, medium(822.0, 0.0004, 1.07), fields(7.41, 0.0), 207.0),
            metadata: vec![],
        },
        Builder {
            name: "fig4a",
            figure: "Fig. 4(a)",
            description: "Slow-light transmission versus T_p at D = 340, ζ = 2.3, γ31 = 0.8Γ, γ21 = 0.0002Γ".into(),
            target: Target::EtaTranVsTp { zeta: 2.3 },
            sweep: Some(Sweep::linear("t_p_ns", 100.0, 1500.0, 57)),
            params: d1(Scheme::LambdaD1, medium(340.0, 0.0002, 0.8), fields(1.0, 0.0), 207.0),
            metadata: vec![],
        },
        Builder {
            name: "fig4b",
            figure: "Fig. 4(b)",
            description: "Storage efficiency versus storage time, A·exp(−t²/τ²) with A = 0.90, τ = 325 μs".into(),
            target: Target::StoredVsTime {
                amplitude: 0.90,
                tau_us: 325.0,
                gamma21: 0.0,
            },
            sweep: Some(Sweep::linear("t_us", 0.0, 700.0, 71)),
            params: d1(Scheme::LambdaD1, medium(550.0, 0.0, 1.0), fields(1.0, 0.0), 207.0),
            metadata: vec![],
        },
        Builder {
            name: "fig4c",
            figure: "Fig. 4(c)",
            description: "Time-bandwidth product at 50% efficiency versus T_p (τ = 325 μs), with A = 0.90 and with A = η_tran of Fig. 4(a)".into(),
            target: Target::TbpVsTp {
                amplitude: 0.90,
                tau_us: 325.0,
                zeta: 2.3,
            },
            sweep: Some(log_sweep("t_p_ns", 20.0, 1500.0, 40)),
            params: d1(Scheme::LambdaD1, medium(340.0, 0.0002, 0.8), fields(1.0, 0.0), 207.0),
            metadata: vec![],
        },
        Builder {
            name: "fig4d-d1",
            figure: "Fig. 4(d)",
            description: "D1 storage efficiency versus OD at T_p = 207 ns, ζ = 2.7, γ21 = 0.0001Γ, γ31 from the D1 depth model".into(),
            target: Target::SeVsOd {
                model: SeModelSpec::LambdaD1,
                zeta: 2.7,
            },
            sweep: Some(Sweep::linear("optical_depth", 10.0, 1000.0, 100)),
            params: d1(Scheme::LambdaD1, medium(816.0, 0.0001, 1.0), fields(1.0, 0.0), 207.0),
            metadata: vec![],
        },
        Builder {
            name: "fig4d-d2",
            figure: "Fig. 4(d)",
            description: "D2 storage efficiency versus OD with the control-dependent decoherence (γ0 = 0.0005Γ, δs = 2π×251.09 MHz)".into(),
            target: Target::SeVsOd {
                model: SeModelSpec::NtypeD2,
                zeta: 2.7,
            },
            sweep: Some(Sweep::linear("optical_depth", 10.0, 1000.0, 100)),
            params: d2_ntype(121.0, 0.0005, 0.8, 1.0),
            metadata: vec![],
        },
        Builder {
            name: "fig5a",
            figure: "Fig. 5(a)",
            description: "Pulse transmission with and without FWM versus OD, T_p = 200 ns, ζ = 2.7, perfect phase matching (time-domain solver)".into(),
            target: Target::FwmPulse {
                zeta: 2.7,
                nz: 200,
                gamma31_model: Some(Gamma31Scheme::D1),
            },
            sweep: Some(Sweep::linear("optical_depth", 100.0, 1000.0, 10)),
            params: fwm_params(1000.0, 0.0001, 1.0, 1.0, 0.0, 200.0),
            metadata: vec![],
        },
        Builder {
            name: "fig5b",
            figure: "Fig. 5(b)",
            description: "Steady-state FWM gain versus δp at D = 1000, Ω_c = 6.72Γ, γ21 = 0.0002Γ, θ = 0".into(),
            target: Target::FwmSteady {
                model: FwmModel::default(),
            },
            sweep: Some(Sweep::linear("delta_p", -0.3, 0.3, 601)),
            params: fwm_params(1000.0, 0.0002, d1_g31_1000, 6.72, 0.0, 207.0),
            metadata: vec![
                ("delta_p_sign_translation", "identity"),
                ("delta_p_sign_note", SIGN_NOTE),
            ],
        },
        Builder {
            name: "fig5c",
            figure: "Fig. 5(c)",
            description: "Steady-state probe transmission versus control–probe angle at δp = 0.04Γ".into(),
            target: Target::FwmAngle {
                delta_p: 0.04,
                model: FwmModel::default(),
            },
            sweep: Some(Sweep::linear("theta_deg", 0.0, 1.5, 301)),
            params: fwm_params(1000.0, 0.0002, d1_g31_1000, 6.72, 0.0, 207.0),
            metadata: vec![("delta_p_sign_translation", "identity")],
        },
        Builder {
            name: "fig5d",
            figure: "Fig. 5(d)",
            description: "Peak probe transmission versus pump detuning, D = 600, θ = 0.5°, Ω_c = 6.2Γ, γ21 = 0.0005Γ, pump at half the control power".into(),
            target: Target::FwmPumpScan {
                power_ratio: 0.5,
                model: FwmModel::default(),
            },
            sweep: Some(Sweep::linear("delta_pump_ghz", 1.5, 9.5, 33)),
            params: fwm_params(600.0, 0.0005, d1_gamma31(600.0), 6.2, 0.5, 207.0),
            metadata: vec![],
        },
        Builder {
            name: "figS1",
            figure: "Fig. S1",
            description: "Edge-cutoff efficiency versus ζ for κ = 1.1 and D = 100".into(),
            target: Target::EtaCompVsZeta { kappa: 1.1 },
            sweep: Some(Sweep::linear("zeta", 1.0, 4.0, 61)),
            params: d1(Scheme::LambdaD1, medium(100.0, 0.0, 0.5), fields(1.0, 0.0), 207.0),
            metadata: vec![],
        },
        s3_d2("figS3a", "Fig. S3(a)", 203.0, 0.0006, 1.01),
        s3_d2("figS3b", "Fig. S3(b)", 179.0, 0.0025, 2.81),
        s3_d2("figS3c", "Fig. S3(c)", 225.0, 0.011, 4.10),
        s3_d1("figS3d", "Fig. S3(d)", 351.0, 0.00024, 0.0075, 2.05),
        s3_d1("figS3e", "Fig. S3(e)", 399.0, 0.00039, 0.043, 7.31),
        s3_d1("figS3f", "Fig. S3(f)", 479.0, 0.0010, 0.086, 10.01),
    ]
}

/// All presets in catalog order.
pub fn all() -> Vec<Scenario> {
    builders().into_iter().map(Builder::build).collect()
}

pub fn catalog() -> Vec<PresetInfo> {
    all()
        .into_iter()
        .map(|s| PresetInfo {
            time_domain: matches!(s.target, Target::Store { .. } | Target::FwmPulse { .. }),
            name: s.name,
            figure: s.figure.unwrap_or_default(),
            description: s.description,
            metadata: s.metadata,
        })
        .collect()
}

pub fn find(name: &str) -> Result<Scenario> {
    all()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| CliError::UnknownPreset(name.into()))
}
