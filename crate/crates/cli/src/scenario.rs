//! Scenario description and execution.
//!
//! A scenario names one operation, the laboratory-unit parameter block it
//! runs on and an optional one-dimensional sweep. Running it produces CSV
//! tables and a JSON summary holding the resolved parameters.

use std::collections::BTreeMap;

use eitmem::config::{InternalParams, PhysicalParams};
use eitmem::estimation::{gamma31_model, Gamma31Scheme};
use eitmem::fwm::{
    fwm_gain_pulse, fwm_gain_scan, fwm_gain_steady, max_gain, pump_probe_scan, FwmParams, FwmPulseOptions,
    PhaseMatching, PopulationLabeling, PumpScanOptions, SusceptibilityRoute,
};
use eitmem::propagation::{analytic_slow_light, control_for_zeta, eta_tran, propagate_pulse, PropagationOptions};
use eitmem::spectra::{default_grid, ntype_effective, ntype_spectrum, probe_response, summarize, ControlDetuningMode};
use eitmem::storage::{
    eta_comp_for, se_vs_od_sweep, simulate_storage, tbp_at_half, DecayModel, Ramp, SeSweepModel, SolverOptions,
    StorageProtocol,
};
use eitmem::waveform::{make_grid, GridOptions};
use eitmem::{FieldParams, Scheme};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::output::{waveform_table, Artifact, Table};

/// Grid spacing of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// One-dimensional sweep of the target's swept variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Sweep {
    pub fn linear(variable: &str, start: f64, stop: f64, points: usize) -> Self {
        Sweep {
            variable: variable.into(),
            start,
            stop,
            points,
            spacing: Spacing::Linear,
        }
    }

    /// Parse `start:stop:points`.
    pub fn parse(variable: &str, text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || CliError::input(format!("`{text}` is not of the form start:stop:points"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let points = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
        Ok(Sweep::linear(variable, num(parts[0])?, num(parts[1])?, points))
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            return Err(CliError::input(format!("sweep over `{}` is empty", self.variable)));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::input("sweep bounds must be finite"));
        }
        if self.points == 1 {
            return Ok(vec![self.start]);
        }
        let n = (self.points - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..self.points)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / n)
                .collect()),
            Spacing::Log => {
                if self.start <= 0.0 || self.stop <= 0.0 {
                    return Err(CliError::input("log sweep bounds must be positive"));
                }
                let (a, b) = (self.start.ln(), self.stop.ln());
                Ok((0..self.points).map(|k| (a + (b - a) * k as f64 / n).exp()).collect())
            }
        }
    }
}

/// Control switching shape at the command-line boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RampSpec {
    Step,
    /// Half-cosine ramp; defaults to 0.1 T_p.
    Smooth {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration_ns: Option<f64>,
    },
}

impl Default for RampSpec {
    fn default() -> Self {
        RampSpec::Smooth { duration_ns: None }
    }
}

/// Decoherence model of a storage-efficiency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SeModelSpec {
    /// Fixed γ21 (the medium's) with γ31 from the D1 depth model.
    LambdaD1,
    /// γ21 = γ0 + ε²Ω_c²γ41/(4δs²) with γ0 the medium's γ21, δs and ε from
    /// the medium and γ31 = γ41 from the D2 depth model.
    NtypeD2,
}

fn default_kappa() -> f64 {
    eitmem::storage::DEFAULT_KAPPA
}

fn default_zeta() -> f64 {
    2.7
}

fn default_power_ratio() -> f64 {
    0.5
}

fn default_nz() -> usize {
    200
}

/// FWM model switches shared by the FWM targets.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwmModel {
    #[serde(default)]
    pub exact_k: bool,
    #[serde(default)]
    pub phase_matching: PhaseMatching,
    #[serde(default)]
    pub labeling: PopulationLabeling,
    #[serde(default)]
    pub route: SusceptibilityRoute,
}

/// Operation run by a scenario. Each names the variable it sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "op", deny_unknown_fields)]
pub enum Target {
    /// Probe transmission versus δp (Γ); the default grid is used without a
    /// sweep.
    Spectrum {
        #[serde(default)]
        detuning_mode: ControlDetuningMode,
    },
    /// Spectral and analytic slow-light output of the configured pulse.
    SlowLight {
        #[serde(default)]
        detuning_mode: ControlDetuningMode,
    },
    /// Time-domain storage and retrieval. Times in ns from the input peak.
    Store {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_off_ns: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_on_ns: Option<f64>,
        #[serde(default)]
        ramp: RampSpec,
        /// Gaussian motional decay time of the spin wave.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau_us: Option<f64>,
    },
    /// Storage efficiency versus optical depth at fixed T_p and ζ.
    SeVsOd {
        model: SeModelSpec,
        #[serde(default = "default_zeta")]
        zeta: f64,
    },
    /// Slow-light transmission versus T_p (ns) at fixed ζ.
    EtaTranVsTp {
        #[serde(default = "default_zeta")]
        zeta: f64,
    },
    /// Storage efficiency versus hold time (μs) for A·e^{−t²/τ²}·e^{−2γ21 t}.
    StoredVsTime {
        amplitude: f64,
        tau_us: f64,
        #[serde(default)]
        gamma21: f64,
    },
    /// Time-bandwidth product at 50% versus T_p (ns).
    TbpVsTp {
        amplitude: f64,
        tau_us: f64,
        #[serde(default = "default_zeta")]
        zeta: f64,
    },
    /// N-type effective decoherence and light shift versus Ω_c (Γ).
    NtypeEffective,
    /// Edge-cutoff efficiency versus ζ.
    EtaCompVsZeta {
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    /// Steady-state FWM gain versus δp (Γ) at a fixed angle.
    FwmSteady {
        #[serde(default)]
        model: FwmModel,
    },
    /// Steady-state FWM gain versus angle (degrees) at a fixed δp.
    FwmAngle {
        delta_p: f64,
        #[serde(default)]
        model: FwmModel,
    },
    /// Pulse FWM gain versus optical depth.
    FwmPulse {
        #[serde(default = "default_zeta")]
        zeta: f64,
        #[serde(default = "default_nz")]
        nz: usize,
        /// Optical-depth model of γ31; the medium's value when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma31_model: Option<Gamma31Scheme>,
    },
    /// Peak probe transmission versus pump detuning (GHz).
    FwmPumpScan {
        #[serde(default = "default_power_ratio")]
        power_ratio: f64,
        #[serde(default)]
        model: FwmModel,
    },
}

impl Target {
    /// Name of the swept variable, if the target takes a sweep.
    pub fn sweep_variable(&self) -> Option<&'static str> {
        match self {
            Target::Spectrum { .. } | Target::FwmSteady { .. } => Some("delta_p"),
            Target::SlowLight { .. } | Target::Store { .. } => None,
            Target::SeVsOd { .. } | Target::FwmPulse { .. } => Some("optical_depth"),
            Target::EtaTranVsTp { .. } | Target::TbpVsTp { .. } => Some("t_p_ns"),
            Target::StoredVsTime { .. } => Some("t_us"),
            Target::NtypeEffective => Some("omega_c"),
            Target::EtaCompVsZeta { .. } => Some("zeta"),
            Target::FwmAngle { .. } => Some("theta_deg"),
            Target::FwmPumpScan { .. } => Some("delta_pump_ghz"),
        }
    }

    /// Whether the target can run without a sweep.
    fn sweep_optional(&self) -> bool {
        matches!(self, Target::Spectrum { .. })
    }
}

/// A runnable scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Figure reproduced, for presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    #[serde(default)]
    pub description: String,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    /// Free-form notes carried into the summary.
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub params: PhysicalParams,
}

/// Settings that do not change what is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunSettings {
    pub seed: u64,
}

/// Tables and summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub tables: Vec<(String, Table)>,
    pub results: Value,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::input(format!("scenario: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Check names, sweep and parameters without running.
    pub fn validate(&self) -> Result<InternalParams> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(CliError::input(format!(
                "scenario name `{}` must be nonempty and use only letters, digits, '-' and '_'",
                self.name
            )));
        }
        match (&self.sweep, self.target.sweep_variable()) {
            (Some(s), Some(var)) => {
                if s.variable != var {
                    return Err(CliError::input(format!(
                        "this target sweeps `{var}`, not `{}`",
                        s.variable
                    )));
                }
                s.values()?;
            }
            (Some(_), None) => return Err(CliError::input("this target takes no sweep")),
            (None, Some(var)) if !self.target.sweep_optional() => {
                return Err(CliError::input(format!("this target needs a sweep over `{var}`")))
            }
            _ => {}
        }
        Ok(self.params.to_internal()?)
    }

    fn sweep_values(&self) -> Result<Vec<f64>> {
        match &self.sweep {
            Some(s) => s.values(),
            None => Ok(Vec::new()),
        }
    }

    pub fn run(&self, settings: &RunSettings) -> Result<RunOutput> {
        let p = self.validate()?;
        let xs = self.sweep_values()?;
        match &self.target {
            Target::Spectrum { detuning_mode } => run_spectrum(&p, xs, *detuning_mode),
            Target::SlowLight { detuning_mode } => run_slowlight(&p, *detuning_mode),
            Target::Store {
                t_off_ns,
                t_on_ns,
                ramp,
                tau_us,
            } => run_store(&p, *t_off_ns, *t_on_ns, *ramp, *tau_us),
            Target::SeVsOd { model, zeta } => run_se_vs_od(&p, &xs, *model, *zeta),
            Target::EtaTranVsTp { zeta } => run_eta_vs_tp(&p, &xs, *zeta),
            Target::StoredVsTime {
                amplitude,
                tau_us,
                gamma21,
            } => run_stored(&p, &xs, *amplitude, *tau_us, *gamma21),
            Target::TbpVsTp {
                amplitude,
                tau_us,
                zeta,
            } => run_tbp(&p, &xs, *amplitude, *tau_us, *zeta),
            Target::NtypeEffective => run_ntype(&p, &xs),
            Target::EtaCompVsZeta { kappa } => run_comp(&p, &xs, *kappa),
            Target::FwmSteady { model } => run_fwm_steady(&p, &xs, model),
            Target::FwmAngle { delta_p, model } => run_fwm_angle(&p, &xs, *delta_p, model),
            Target::FwmPulse {
                zeta,
                nz,
                gamma31_model,
            } => run_fwm_pulse(&p, &xs, *zeta, *nz, *gamma31_model),
            Target::FwmPumpScan { power_ratio, model } => run_pump_scan(&p, &xs, *power_ratio, model),
        }
        .map(|mut out| {
            if let Value::Object(m) = &mut out.results {
                m.insert("seed".into(), json!(settings.seed));
            }
            out
        })
    }

    /// Run and render all files: `<name>[_suffix].csv` and `<name>.json`.
    pub fn artifacts(&self, settings: &RunSettings) -> Result<Vec<Artifact>> {
        let internal = self.validate()?;
        let out = self.run(settings)?;
        let mut files = Vec::new();
        for (suffix, table) in &out.tables {
            let file = if suffix.is_empty() {
                format!("{}.csv", self.name)
            } else {
                format!("{}_{suffix}.csv", self.name)
            };
            files.push(table.artifact(file));
        }
        let summary = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "scenario": self,
            "resolved": {
                "physical": internal.to_physical(),
                "internal": internal,
            },
            "files": files.iter().map(|f| f.file_name.clone()).collect::<Vec<_>>(),
            "results": out.results,
        });
        let mut text = serde_json::to_vec_pretty(&summary).expect("summary serializes");
        text.push(b'\n');
        files.push(Artifact {
            file_name: format!("{}.json", self.name),
            contents: text,
        });
        Ok(files)
    }
}

fn fwm_params(p: &InternalParams, model: &FwmModel) -> FwmParams {
    FwmParams {
        labeling: model.labeling,
        route: model.route,
        phase_matching: model.phase_matching,
        ..FwmParams::new(&p.fields, &p.medium, &p.transition, model.exact_k)
    }
}

fn run_spectrum(p: &InternalParams, xs: Vec<f64>, mode: ControlDetuningMode) -> Result<RunOutput> {
    let grid = if xs.is_empty() {
        default_grid(&p.medium, &p.fields)
    } else {
        xs
    };
    let t = grid
        .par_iter()
        .map(|&dp| probe_response(0.0, dp, &p.medium, &p.fields, mode).map(|f| (2.0 * f.re).exp()))
        .collect::<eitmem::Result<Vec<f64>>>()?;
    let center = if p.medium.scheme == Scheme::NTypeD2 {
        -ntype_effective(&p.medium, &p.fields)?.delta2_eff
    } else {
        p.fields.delta_c
    };
    let mut table = Table::new(&["delta_p_over_Gamma", "transmission"]);
    for (x, y) in grid.iter().zip(&t) {
        table.push(vec![*x, *y]);
    }
    let s = summarize(grid, t, center);
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({
            "peak_transparency": s.peak_transparency,
            "peak_detuning": s.peak_detuning,
            "fwhm_eit": s.fwhm_eit,
        }),
    })
}

fn run_slowlight(p: &InternalParams, mode: ControlDetuningMode) -> Result<RunOutput> {
    let grid = make_grid(&p.pulse, &p.medium, &p.fields, &GridOptions::default())?;
    let input = grid.sample(&p.pulse);
    let opts = PropagationOptions {
        detuning_mode: mode,
        ..Default::default()
    };
    let r = propagate_pulse(&input, &p.medium, &p.fields, &opts)?;
    let analytic = if p.fields.delta_c == 0.0 && p.fields.omega_c > 0.0 {
        let a = analytic_slow_light(&p.pulse, &p.medium, &p.fields, &grid, 0.0)?;
        json!({"eta_tran": a.eta_tran, "t_d": a.t_d, "beta": a.beta, "warning": a.warning})
    } else {
        Value::Null
    };
    // Same layout `fit --trace` reads.
    let mut trace = Table::new(&["t_over_Gamma_inv", "input_intensity", "output_intensity"]);
    for (k, (a, b)) in input.amplitude.iter().zip(&r.output.amplitude).enumerate() {
        trace.push(vec![input.time(k), a.norm_sqr(), b.norm_sqr()]);
    }
    Ok(RunOutput {
        tables: vec![
            ("input".into(), waveform_table(&input)),
            ("output".into(), waveform_table(&r.output)),
            ("trace".into(), trace),
        ],
        results: json!({
            "eta_tran": r.eta_tran,
            "t_d": r.t_d,
            "beta": r.beta,
            "zeta": r.zeta,
            "analytic": analytic,
        }),
    })
}

fn run_store(
    p: &InternalParams,
    t_off_ns: Option<f64>,
    t_on_ns: Option<f64>,
    ramp: RampSpec,
    tau_us: Option<f64>,
) -> Result<RunOutput> {
    let tr = &p.transition;
    let pulse = &p.pulse;
    let t_off = match t_off_ns {
        Some(ns) => pulse.t0 + tr.time_from_ns(ns),
        None => pulse.t0 + eitmem::storage::DEFAULT_KAPPA * pulse.t_p,
    };
    let t_on = match t_on_ns {
        Some(ns) => pulse.t0 + tr.time_from_ns(ns),
        None => t_off + 4.0 * pulse.t_p,
    };
    let ramp = match ramp {
        RampSpec::Step => Ramp::Step,
        RampSpec::Smooth { duration_ns } => Ramp::Smooth {
            duration: duration_ns.map(|ns| tr.time_from_ns(ns)).unwrap_or(0.1 * pulse.t_p),
        },
    };
    let motional_tau = tau_us.map(|us| tr.time_from_us(us));
    let protocol = StorageProtocol {
        t_off,
        t_on,
        ramp,
        omega_c_read: None,
        motional_tau,
    };
    let r = simulate_storage(pulse, &p.medium, &p.fields, &protocol, &SolverOptions::default())?;
    let grid = r.retrieved.grid();
    let input = grid.sample(pulse);
    let tbp = match motional_tau {
        Some(tau) => {
            let amplitude = (r.eta_tran * r.eta_comp).min(1.0);
            tbp_at_half(&DecayModel::gaussian(amplitude, tau), pulse.t_p).ok().map(|t| t.numeric)
        }
        None => None,
    };
    Ok(RunOutput {
        tables: vec![
            ("input".into(), waveform_table(&input)),
            ("leaked".into(), waveform_table(&r.leaked)),
            ("retrieved".into(), waveform_table(&r.retrieved)),
        ],
        results: json!({
            "eta_total": r.eta_total,
            "eta_tran": r.eta_tran,
            "eta_comp": r.eta_comp,
            "eta_comp_analytic": r.eta_comp_analytic,
            "eta_stored": r.eta_stored,
            "stored_fraction": r.stored_fraction,
            "t_off": r.t_off,
            "t_on": r.t_on,
            "tbp": tbp,
            "warnings": r.warnings,
        }),
    })
}

fn run_se_vs_od(p: &InternalParams, ods: &[f64], model: SeModelSpec, zeta: f64) -> Result<RunOutput> {
    let m = &p.medium;
    let sweep_model = match model {
        SeModelSpec::LambdaD1 => SeSweepModel::LambdaD1 { gamma21: m.gamma21 },
        SeModelSpec::NtypeD2 => SeSweepModel::NTypeD2 {
            gamma0: m.gamma21,
            delta_s: m.delta_s,
            epsilon: m.epsilon_switch,
        },
    };
    let rows = se_vs_od_sweep(ods, &sweep_model, p.pulse.t_p, zeta)?;
    let mut table = Table::new(&["optical_depth", "omega_c_over_Gamma", "gamma31_over_Gamma", "gamma21_over_Gamma", "se"]);
    for r in &rows {
        table.push(vec![r.optical_depth, r.omega_c, r.gamma31, r.gamma21, r.eta]);
    }
    let best = rows
        .iter()
        .max_by(|a, b| a.eta.total_cmp(&b.eta))
        .expect("sweep is nonempty");
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({"max_se": best.eta, "optical_depth_at_max": best.optical_depth}),
    })
}

fn run_eta_vs_tp(p: &InternalParams, tps: &[f64], zeta: f64) -> Result<RunOutput> {
    let m = &p.medium;
    let mut table = Table::new(&["t_p_ns", "omega_c_over_Gamma", "eta_tran"]);
    for &ns in tps {
        let tp = p.transition.time_from_ns(ns);
        let eta = eta_tran(m.optical_depth, zeta, m.gamma21, m.gamma31, tp)?;
        table.push(vec![ns, control_for_zeta(m.optical_depth, zeta, tp), eta]);
    }
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({}),
    })
}

fn run_stored(p: &InternalParams, ts: &[f64], amplitude: f64, tau_us: f64, gamma21: f64) -> Result<RunOutput> {
    let tr = &p.transition;
    let decay = DecayModel {
        amplitude,
        tau: tr.time_from_us(tau_us),
        gamma21,
    };
    let mut table = Table::new(&["t_us", "se"]);
    for &us in ts {
        table.push(vec![us, decay.eta_stored(tr.time_from_us(us))?]);
    }
    let tbp = tbp_at_half(&decay, p.pulse.t_p)?;
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({"tbp": tbp.numeric, "t_half_us": tr.time_to_us(tbp.t_half)}),
    })
}

fn run_tbp(p: &InternalParams, tps: &[f64], amplitude: f64, tau_us: f64, zeta: f64) -> Result<RunOutput> {
    let tr = &p.transition;
    let m = &p.medium;
    let tau = tr.time_from_us(tau_us);
    let mut table = Table::new(&["t_p_ns", "tbp_fixed_amplitude", "eta_tran", "tbp_eta_tran_amplitude"]);
    for &ns in tps {
        let tp = tr.time_from_ns(ns);
        let fixed = tbp_at_half(&DecayModel::gaussian(amplitude, tau), tp)?.numeric;
        let eta = eta_tran(m.optical_depth, zeta, m.gamma21, m.gamma31, tp)?;
        // Below 50% starting efficiency the product is undefined.
        let scaled = tbp_at_half(&DecayModel::gaussian(eta.min(1.0), tau), tp)
            .map(|t| t.numeric)
            .unwrap_or(f64::NAN);
        table.push(vec![ns, fixed, eta, scaled]);
    }
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({}),
    })
}

fn run_ntype(p: &InternalParams, omegas: &[f64]) -> Result<RunOutput> {
    let m = &p.medium;
    if m.scheme != Scheme::NTypeD2 {
        return Err(CliError::input("ntype-effective needs scheme = \"ntype-d2\""));
    }
    let rows = omegas
        .par_iter()
        .map(|&w| {
            let f = FieldParams {
                omega_c: w,
                ..p.fields
            };
            let eff = ntype_effective(m, &f)?;
            let center = -eff.delta2_eff;
            let half = 0.5 + center.abs();
            let grid: Vec<f64> = (0..=2000).map(|k| center - half + half * k as f64 / 1000.0).collect();
            let peak = ntype_spectrum(&grid, m, &f, ControlDetuningMode::Direct)
                .map(|s| s.peak_detuning)
                .unwrap_or(f64::NAN);
            Ok(vec![w, w * w, eff.gamma21_eff, eff.delta2_eff, peak])
        })
        .collect::<eitmem::Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "omega_c_over_Gamma",
        "omega_c_sq",
        "gamma21_eff_over_Gamma",
        "delta2_eff_over_Gamma",
        "peak_detuning_over_Gamma",
    ]);
    rows.into_iter().for_each(|r| table.push(r));
    let slope = m.epsilon_switch.powi(2) * m.gamma41 / (4.0 * m.delta_s * m.delta_s);
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({"gamma21_slope_per_omega_c_sq": slope}),
    })
}

fn run_comp(p: &InternalParams, zetas: &[f64], kappa: f64) -> Result<RunOutput> {
    let m = &p.medium;
    let mut table = Table::new(&["zeta", "eta_comp"]);
    for &z in zetas {
        table.push(vec![z, eta_comp_for(m.optical_depth, m.gamma31, p.pulse.t_p, z, kappa)?]);
    }
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({}),
    })
}

const FWM_HEADER: [&str; 8] = [
    "delta_p_over_Gamma",
    "theta_deg",
    "probe_transmission",
    "probe_transmission_uncoupled",
    "idler_conversion",
    "fwm_gain",
    "delta_kz_per_m",
    "n_c_minus_1",
];

fn fwm_row(r: &eitmem::fwm::FwmResult) -> Vec<f64> {
    vec![
        r.delta_p,
        r.theta.to_degrees(),
        r.probe_gain,
        r.probe_gain_uncoupled,
        r.idler_conv,
        r.fwm_gain,
        r.delta_kz,
        r.n_c - 1.0,
    ]
}

fn run_fwm_steady(p: &InternalParams, deltas: &[f64], model: &FwmModel) -> Result<RunOutput> {
    let params = fwm_params(p, model);
    let scan = fwm_gain_scan(deltas, p.fields.theta, &params, &p.medium)?;
    let mut table = Table::new(&FWM_HEADER);
    scan.iter().for_each(|r| table.push(fwm_row(r)));
    let best = max_gain(&scan).expect("sweep is nonempty");
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({"max_fwm_gain": best.fwm_gain, "delta_p_at_max": best.delta_p}),
    })
}

fn run_fwm_angle(p: &InternalParams, degs: &[f64], delta_p: f64, model: &FwmModel) -> Result<RunOutput> {
    let params = fwm_params(p, model);
    let rows = degs
        .par_iter()
        .map(|&d| fwm_gain_steady(delta_p, d.to_radians(), &params, &p.medium))
        .collect::<eitmem::Result<Vec<_>>>()?;
    let mut table = Table::new(&FWM_HEADER);
    rows.iter().for_each(|r| table.push(fwm_row(r)));
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({"delta_p": delta_p}),
    })
}

fn run_fwm_pulse(
    p: &InternalParams,
    ods: &[f64],
    zeta: f64,
    nz: usize,
    gamma31_model: Option<Gamma31Scheme>,
) -> Result<RunOutput> {
    let params = fwm_params(p, &FwmModel::default());
    let opts = FwmPulseOptions {
        nz,
        dt: None,
        zeta,
        gamma31_model,
    };
    let rows = fwm_gain_pulse(&p.pulse, &params, &p.medium, ods, &opts)?;
    let mut table = Table::new(&[
        "optical_depth",
        "omega_c_over_Gamma",
        "gamma31_over_Gamma",
        "od_over_hyperfine",
        "eta_with_fwm",
        "eta_without_fwm",
        "fwm_gain",
    ]);
    for r in &rows {
        table.push(vec![r.optical_depth, r.omega_c, r.gamma31, r.x, r.eta_with, r.eta_without, r.gain]);
    }
    let best = rows
        .iter()
        .max_by(|a, b| a.gain.total_cmp(&b.gain))
        .expect("sweep is nonempty");
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({"max_fwm_gain": best.gain, "optical_depth_at_max": best.optical_depth}),
    })
}

fn run_pump_scan(p: &InternalParams, ghz: &[f64], power_ratio: f64, model: &FwmModel) -> Result<RunOutput> {
    let tr = &p.transition;
    let params = fwm_params(p, model);
    let opts = PumpScanOptions {
        power_ratio,
        ..Default::default()
    };
    let pumps: Vec<f64> = ghz.iter().map(|&g| tr.rate_from_ghz(g)).collect();
    let rows = pump_probe_scan(&pumps, &params, &p.medium, &opts)?;
    let mut table = Table::new(&[
        "delta_pump_ghz",
        "peak_transmission_with_pump",
        "peak_detuning_over_Gamma",
        "peak_transmission_without_pump",
        "excess_gain",
    ]);
    for (g, r) in ghz.iter().zip(&rows) {
        table.push(vec![*g, r.peak_with_pump, r.peak_detuning, r.peak_without_pump, r.excess_gain]);
    }
    Ok(RunOutput {
        tables: vec![(String::new(), table)],
        results: json!({
            "excess_gain_at_last_detuning": rows.last().map(|r| r.excess_gain),
        }),
    })
}

/// γ31 of the D1 depth model, for presets that quote only the depth.
pub fn d1_gamma31(optical_depth: f64) -> f64 {
    gamma31_model(optical_depth, Gamma31Scheme::D1).expect("nonnegative depth")
}
