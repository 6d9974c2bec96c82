use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eitmem::config::{PhysicalParams, TransitionPreset, TransitionSpec};
use eitmem::estimation::{fit_joint, fit_spectrum, FitOptions, MeasuredDataset};
use eitmem::fwm::PhaseMatching;
use eitmem::params::default_epsilon_switch;
use eitmem::spectra::ControlDetuningMode;
use eitmem::Scheme;
use eitmem_cli::output::{write_all, Artifact};
use eitmem_cli::scenario::{FwmModel, RampSpec, Scenario, Sweep, Target};
use eitmem_cli::{fitio, presets, CliError, Result, RunSettings};
use serde_json::json;

#[derive(Parser)]
#[command(name = "eitmem", version, about = "EIT memory simulation and parameter estimation")]
struct Cli {
    /// Parameter file (TOML, laboratory units).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Seed for the randomized parts (fit multistarts).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; all cores when unset.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    LambdaD1,
    NtypeD2,
    DoubleLambdaFwm,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::LambdaD1 => Scheme::LambdaD1,
            SchemeArg::NtypeD2 => Scheme::NTypeD2,
            SchemeArg::DoubleLambdaFwm => Scheme::DoubleLambdaFwm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DetuningArg {
    Direct,
    Zero,
}

impl From<DetuningArg> for ControlDetuningMode {
    fn from(d: DetuningArg) -> Self {
        match d {
            DetuningArg::Direct => ControlDetuningMode::Direct,
            DetuningArg::Zero => ControlDetuningMode::Zero,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RampArg {
    Step,
    Smooth,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FwmMode {
    Steady,
    Pulse,
    PumpScan,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Projected,
    Literal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    Gamma,
    Ghz,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransitionArg {
    CsD1,
    CsD2,
}

#[derive(Subcommand)]
enum Command {
    /// Probe transmission spectrum.
    Spectrum {
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Probe-detuning grid start:stop:points in Γ.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// How δc enters the N-type response.
        #[arg(long, value_enum, default_value = "direct")]
        detuning_mode: DetuningArg,
        #[arg(long, default_value = "spectrum")]
        name: String,
    },
    /// Slow-light propagation of the configured pulse.
    Slowlight {
        #[arg(long, value_enum, default_value = "direct")]
        detuning_mode: DetuningArg,
        #[arg(long, default_value = "slowlight")]
        name: String,
    },
    /// Storage and retrieval with a switched control.
    Store {
        /// Switch-off time in ns after the input peak (default 1.1 T_p).
        #[arg(long)]
        t_off: Option<f64>,
        /// Switch-on time in ns after the input peak (default t_off + 4 T_p).
        #[arg(long)]
        t_on: Option<f64>,
        #[arg(long, value_enum, default_value = "smooth")]
        ramp: RampArg,
        /// Ramp duration in ns (default 0.1 T_p).
        #[arg(long)]
        ramp_ns: Option<f64>,
        /// Gaussian motional decay time in μs.
        #[arg(long)]
        tau_us: Option<f64>,
        #[arg(long, default_value = "store")]
        name: String,
    },
    /// Four-wave-mixing gain.
    Fwm {
        #[arg(long, value_enum)]
        mode: FwmMode,
        /// Control–probe angle in degrees.
        #[arg(long)]
        theta_deg: Option<f64>,
        /// Offset the control and idler wavenumbers by the hyperfine splitting.
        #[arg(long)]
        exact_k: bool,
        #[arg(long, value_enum, default_value = "projected")]
        phase_matching: PhaseArg,
        /// Steady mode: probe-detuning grid start:stop:points.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Unit of the steady-mode grid.
        #[arg(long, value_enum, default_value = "gamma")]
        grid_unit: UnitArg,
        /// Pulse mode: optical depths start:stop:points.
        #[arg(long, allow_hyphen_values = true)]
        ods: Option<String>,
        /// Pulse mode: delay ratio T_d/T_p.
        #[arg(long, default_value_t = 2.7)]
        zeta: f64,
        /// Pump-scan mode: pump detunings start:stop:points in GHz.
        #[arg(long, allow_hyphen_values = true)]
        pump_ghz: Option<String>,
        /// Pump-scan mode: pump power over control power.
        #[arg(long, default_value_t = 0.5)]
        power_ratio: f64,
        #[arg(long, default_value = "fwm")]
        name: String,
    },
    /// Joint fit of a spectrum and a slow-light trace.
    Fit {
        /// CSV with delta_p_over_Gamma, transmission[, sigma].
        #[arg(long)]
        spectrum: PathBuf,
        /// CSV with t_over_Gamma_inv, input_intensity, output_intensity.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "lambda-d1")]
        scheme: SchemeArg,
        /// Fix a parameter, e.g. gamma31=0.82.
        #[arg(long)]
        fix: Vec<String>,
        #[arg(long, value_enum, default_value = "cs-d1")]
        transition: TransitionArg,
        /// Nominal input FWHM in ns.
        #[arg(long, default_value_t = 207.0)]
        tp_ns: f64,
        /// Switching detuning δs/2π in MHz for N-type spectra.
        #[arg(long)]
        delta_s_mhz: Option<f64>,
        /// Transmission σ when the spectrum file has none.
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        /// Output-trace σ (default 1% of its peak).
        #[arg(long)]
        trace_sigma: Option<f64>,
        #[arg(long, default_value = "fit")]
        name: String,
    },
    /// Run a built-in figure preset.
    Preset {
        name: String,
        /// Print the preset as a scenario file instead of running it.
        #[arg(long)]
        dump: bool,
        /// Replace the preset's sweep range, start:stop:points.
        #[arg(long, allow_hyphen_values = true)]
        sweep: Option<String>,
    },
    /// List the built-in presets.
    ListPresets {
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario file.
    Run { scenario: PathBuf },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Parameters from `--config`, or the named preset's when absent.
fn load_params(config: Option<&Path>, fallback: &str) -> Result<PhysicalParams> {
    match config {
        Some(p) => Ok(PhysicalParams::from_toml(&read_text(p)?)?),
        None => Ok(presets::find(fallback)?.params),
    }
}

fn parse_fix(items: &[String]) -> Result<Option<f64>> {
    let mut gamma31 = None;
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("--fix expects name=value, got `{item}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("--fix: `{value}` is not a number")))?;
        match key.trim() {
            "gamma31" => gamma31 = Some(v),
            other => return Err(CliError::input(format!("--fix: cannot fix `{other}`; only gamma31"))),
        }
    }
    Ok(gamma31)
}

fn scenario(name: String, target: Target, sweep: Option<Sweep>, params: PhysicalParams) -> Scenario {
    Scenario {
        name,
        figure: None,
        description: String::new(),
        target,
        sweep,
        metadata: Default::default(),
        params,
    }
}

fn fwm_scenario(cli: &Cli, cmd: &Command) -> Result<Scenario> {
    let Command::Fwm {
        mode,
        theta_deg,
        exact_k,
        phase_matching,
        grid,
        grid_unit,
        ods,
        zeta,
        pump_ghz,
        power_ratio,
        name,
    } = cmd
    else {
        unreachable!("called for the fwm subcommand")
    };
    let fallback = match mode {
        FwmMode::Steady => "fig5b",
        FwmMode::Pulse => "fig5a",
        FwmMode::PumpScan => "fig5d",
    };
    let mut params = load_params(cli.config.as_deref(), fallback)?;
    if let Some(t) = theta_deg {
        params.fields.theta_deg = *t;
    }
    let model = FwmModel {
        exact_k: *exact_k,
        phase_matching: match phase_matching {
            PhaseArg::Projected => PhaseMatching::Projected,
            PhaseArg::Literal => PhaseMatching::Literal,
        },
        ..Default::default()
    };
    let (target, sweep) = match mode {
        FwmMode::Steady => {
            let mut s = Sweep::parse("delta_p", grid.as_deref().unwrap_or("-0.3:0.3:601"))?;
            if *grid_unit == UnitArg::Ghz {
                let tr = params.transition.resolve()?;
                s.start = tr.rate_from_ghz(s.start);
                s.stop = tr.rate_from_ghz(s.stop);
            }
            (Target::FwmSteady { model }, s)
        }
        FwmMode::Pulse => (
            Target::FwmPulse {
                zeta: *zeta,
                nz: 200,
                gamma31_model: Some(eitmem::estimation::Gamma31Scheme::D1),
            },
            Sweep::parse("optical_depth", ods.as_deref().unwrap_or("100:1000:10"))?,
        ),
        FwmMode::PumpScan => (
            Target::FwmPumpScan {
                power_ratio: *power_ratio,
                model,
            },
            Sweep::parse("delta_pump_ghz", pump_ghz.as_deref().unwrap_or("1.5:9.5:33"))?,
        ),
    };
    Ok(scenario(name.clone(), target, Some(sweep), params))
}

fn run_fit(cli: &Cli) -> Result<Vec<Artifact>> {
    let Command::Fit {
        spectrum,
        trace,
        scheme,
        fix,
        transition,
        tp_ns,
        delta_s_mhz,
        sigma,
        trace_sigma,
        name,
    } = &cli.command
    else {
        unreachable!("called for the fit subcommand")
    };
    let tr = TransitionSpec::Preset(match transition {
        TransitionArg::CsD1 => TransitionPreset::CsD1,
        TransitionArg::CsD2 => TransitionPreset::CsD2,
    })
    .resolve()?;
    let scheme: Scheme = (*scheme).into();
    let delta_s = match (scheme, delta_s_mhz) {
        (_, Some(mhz)) => tr.rate_from_mhz(*mhz),
        (Scheme::NTypeD2, None) => tr.rate_from_mhz(-251.09),
        _ => 0.0,
    };
    let data = MeasuredDataset {
        scheme,
        t_p: tr.time_from_ns(*tp_ns),
        spectrum: fitio::read_spectrum(spectrum, *sigma)?,
        slowlight: trace.as_deref().map(|p| fitio::read_trace(p, *trace_sigma)).transpose()?,
        delta_s,
        epsilon_switch: default_epsilon_switch(),
    };
    let opts = FitOptions {
        gamma31: parse_fix(fix)?,
        seed: cli.seed,
        ..Default::default()
    };
    let result = if data.slowlight.is_some() {
        serde_json::to_value(fit_joint(&data, &opts)?)
    } else {
        serde_json::to_value(fit_spectrum(&data, &opts)?)
    }
    .expect("fit result serializes");
    let summary = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": {
            "spectrum": spectrum,
            "trace": trace,
            "scheme": scheme,
            "transition": tr,
            "t_p_ns": tp_ns,
            "delta_s_over_Gamma": delta_s,
            "options": opts,
        },
        "kind": if data.slowlight.is_some() { "joint" } else { "spectrum" },
        "result": result,
    });
    let mut text = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    text.push(b'\n');
    Ok(vec![Artifact {
        file_name: format!("{name}.json"),
        contents: text,
    }])
}

fn execute(cli: &Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::input("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::input(format!("--jobs: {e}")))?;
    }
    let settings = RunSettings { seed: cli.seed };
    let config = cli.config.as_deref();
    let run = |s: Scenario| -> Result<()> {
        let files = s.artifacts(&settings)?;
        for p in write_all(&cli.out, &files)? {
            println!("{}", p.display());
        }
        Ok(())
    };
    match &cli.command {
        Command::Spectrum {
            scheme,
            grid,
            detuning_mode,
            name,
        } => {
            let fallback = match scheme {
                Some(SchemeArg::NtypeD2) => "figS3a",
                _ => "fig3a",
            };
            let mut params = load_params(config, fallback)?;
            if let Some(s) = scheme {
                params.scheme = (*s).into();
            }
            let sweep = grid.as_deref().map(|g| Sweep::parse("delta_p", g)).transpose()?;
            let target = Target::Spectrum {
                detuning_mode: (*detuning_mode).into(),
            };
            run(scenario(name.clone(), target, sweep, params))
        }
        Command::Slowlight { detuning_mode, name } => {
            let params = load_params(config, "fig3b")?;
            let target = Target::SlowLight {
                detuning_mode: (*detuning_mode).into(),
            };
            run(scenario(name.clone(), target, None, params))
        }
        Command::Store {
            t_off,
            t_on,
            ramp,
            ramp_ns,
            tau_us,
            name,
        } => {
            let params = load_params(config, "fig3b")?;
            let ramp = match ramp {
                RampArg::Step => RampSpec::Step,
                RampArg::Smooth => RampSpec::Smooth { duration_ns: *ramp_ns },
            };
            let target = Target::Store {
                t_off_ns: *t_off,
                t_on_ns: *t_on,
                ramp,
                tau_us: *tau_us,
            };
            run(scenario(name.clone(), target, None, params))
        }
        cmd @ Command::Fwm { .. } => run(fwm_scenario(cli, cmd)?),
        Command::Fit { .. } => {
            for p in write_all(&cli.out, &run_fit(cli)?)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Preset { name, dump, sweep } => {
            let mut s = presets::find(name)?;
            if let Some(text) = sweep {
                let var = s
                    .target
                    .sweep_variable()
                    .ok_or_else(|| CliError::input(format!("preset `{name}` has no sweep")))?;
                let spacing = s.sweep.as_ref().map(|w| w.spacing).unwrap_or_default();
                s.sweep = Some(Sweep {
                    spacing,
                    ..Sweep::parse(var, text)?
                });
            }
            if *dump {
                s.validate()?;
                print!("{}", s.to_toml());
                Ok(())
            } else {
                run(s)
            }
        }
        Command::ListPresets { json } => {
            let catalog = presets::catalog();
            if *json {
                println!("{}", serde_json::to_string_pretty(&catalog).expect("catalog serializes"));
            } else {
                for p in catalog {
                    let slow = if p.time_domain { " [time domain]" } else { "" };
                    println!("{:<10} {:<11} {}{slow}", p.name, p.figure, p.description);
                }
            }
            Ok(())
        }
        Command::Run { scenario } => run(Scenario::from_toml(&read_text(scenario)?)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
