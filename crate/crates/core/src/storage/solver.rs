//! Maxwell–Bloch integration in the retarded frame.
//!
//! With τ = t − z/c the field equation has no time derivative:
//! ∂Ω/∂ζ = i(D/2)·σ31, ζ = z/L. The medium is sampled at Nz+1 nodes, the
//! field is rebuilt from the coherences at every stage with the trapezoid
//! rule in ζ, and the coherences are advanced with classical RK4 in τ.
//! While the control is off and the input has passed, the spin wave evolves
//! freely and is propagated analytically across the hold.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::obe::{AtomModel, FullObe, WeakProbe};
use super::{eta_comp, Ramp, StorageProtocol};
use crate::error::{Error, Result};
use crate::params::{FieldParams, GaussianPulse, MediumParams};
use crate::propagation::{broadening_factor, group_delay, ALIAS_LIMIT};
use crate::waveform::{trapezoid, SampledWaveform};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Numerical settings of the time-domain solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Number of cells along the medium.
    pub nz: usize,
    /// Time step; the default is the largest allowed.
    pub dt: Option<f64>,
    /// Integrate the full nonlinear three-level density matrix instead of
    /// the weak-probe equations.
    pub full_obe: bool,
    /// End of the integration (1/Γ); chosen from the expected delay if unset.
    pub t_end: Option<f64>,
    /// Time the coherences are integrated after switch-off before the hold
    /// is bridged analytically; defaults to 40/γ31 after the input has passed.
    pub settle: Option<f64>,
    pub delta_p: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            nz: 200,
            dt: None,
            full_obe: false,
            t_end: None,
            settle: None,
            delta_p: 0.0,
        }
    }
}

/// Largest stable and accurate time step: min(T_p/200, 0.02/max(Ω_c, γ31)).
pub fn max_time_step(t_p: f64, omega_c_max: f64, gamma31: f64) -> f64 {
    (t_p / 200.0).min(0.02 / omega_c_max.max(gamma31).max(1e-12))
}

/// Largest optical depth per cell accepted by the z discretization.
pub const MAX_DEPTH_PER_CELL: f64 = 10.0;

/// Output of a run with the control held constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDomainRun {
    pub output: SampledWaveform,
    pub input_energy: f64,
    pub eta: f64,
    /// Centroid delay of the output relative to the input pulse center.
    pub t_d: f64,
    /// Largest change of the density-matrix trace in one step (full model).
    pub trace_drift: Option<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageResult {
    pub eta_total: f64,
    /// Transmission of the same pulse without switching.
    pub eta_tran: f64,
    /// 1 − (input energy arriving after switch-off) − (no-switch output
    /// energy leaving before switch-off).
    pub eta_comp: f64,
    /// Closed-form edge-cutoff efficiency at the analytic T_d and β.
    pub eta_comp_analytic: f64,
    /// Spin-wave energy after the hold relative to just after switch-off.
    pub eta_stored: f64,
    /// Spin-wave energy at switch-off relative to the input energy.
    pub stored_fraction: f64,
    pub retrieved: SampledWaveform,
    pub leaked: SampledWaveform,
    /// Spin coherence σ21 along the medium just before readout.
    pub spin_wave: Vec<Complex64>,
    /// Effective switch times after alignment with the time step.
    pub t_off: f64,
    pub t_on: f64,
    pub trace_drift: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy)]
enum Phase {
    Write,
    Hold,
    Read,
}

struct Schedule {
    omega_c: f64,
    omega_c_read: f64,
    t_off: f64,
    t_on: f64,
    ramp: f64,
    step: bool,
}

impl Schedule {
    fn constant(omega_c: f64) -> Self {
        Schedule {
            omega_c,
            omega_c_read: omega_c,
            t_off: f64::INFINITY,
            t_on: f64::INFINITY,
            ramp: 0.0,
            step: true,
        }
    }

    fn control(&self, t: f64, phase: Phase) -> f64 {
        match phase {
            Phase::Hold => 0.0,
            Phase::Write if self.step => self.omega_c,
            Phase::Read if self.step => self.omega_c_read,
            Phase::Write => {
                let a = self.t_off - 0.5 * self.ramp;
                if t <= a {
                    self.omega_c
                } else {
                    let x = ((t - a) / self.ramp).min(1.0);
                    self.omega_c * 0.5 * (1.0 + (std::f64::consts::PI * x).cos())
                }
            }
            Phase::Read => {
                let b = self.t_on - 0.5 * self.ramp;
                let x = ((t - b) / self.ramp).clamp(0.0, 1.0);
                self.omega_c_read * 0.5 * (1.0 - (std::f64::consts::PI * x).cos())
            }
        }
    }
}

struct Engine<'a, M: AtomModel> {
    model: &'a M,
    pulse: GaussianPulse,
    nz: usize,
    stride: usize,
    /// D/(4Nz): field increment per unit of summed coherences.
    coupling: f64,
    optical_depth: f64,
    y: Vec<Complex64>,
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
    field: Vec<Complex64>,
    t: f64,
    trace_drift: f64,
}

impl<'a, M: AtomModel> Engine<'a, M> {
    fn new(model: &'a M, pulse: GaussianPulse, optical_depth: f64, nz: usize, t: f64) -> Self {
        let stride = model.stride();
        let n = (nz + 1) * stride;
        let mut y = vec![ZERO; n];
        for j in 0..=nz {
            model.init(&mut y[j * stride..(j + 1) * stride]);
        }
        Engine {
            model,
            pulse,
            nz,
            stride,
            coupling: optical_depth / (4.0 * nz as f64),
            optical_depth,
            y,
            k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
            tmp: vec![ZERO; n],
            field: vec![ZERO; nz + 1],
            t,
            trace_drift: 0.0,
        }
    }

    fn input(&self, t: f64) -> Complex64 {
        Complex64::new(self.pulse.amplitude(t), 0.0)
    }

    fn fill_field(model: &M, stride: usize, coupling: f64, y: &[Complex64], probe_in: Complex64, field: &mut [Complex64]) {
        field[0] = probe_in;
        let mut prev = model.probe_coherence(&y[0..stride]);
        for j in 1..field.len() {
            let cur = model.probe_coherence(&y[j * stride..(j + 1) * stride]);
            field[j] = field[j - 1] + I * coupling * (prev + cur);
            prev = cur;
        }
    }

    fn rhs(&mut self, t: f64, which: usize, from_tmp: bool, control: f64) {
        let probe_in = self.input(t);
        let y = if from_tmp { &self.tmp } else { &self.y };
        Self::fill_field(self.model, self.stride, self.coupling, y, probe_in, &mut self.field);
        let out = &mut self.k[which];
        for j in 0..=self.nz {
            let r = j * self.stride..(j + 1) * self.stride;
            self.model.deriv(&y[r.clone()], self.field[j], control, &mut out[r]);
        }
    }

    fn step(&mut self, dt: f64, sched: &Schedule, phase: Phase) {
        let t = self.t;
        let c0 = sched.control(t, phase);
        let ch = sched.control(t + 0.5 * dt, phase);
        let c1 = sched.control(t + dt, phase);
        let trace_before = self.traces();
        self.rhs(t, 0, false, c0);
        self.stage(0.5 * dt, 0);
        self.rhs(t + 0.5 * dt, 1, true, ch);
        self.stage(0.5 * dt, 1);
        self.rhs(t + 0.5 * dt, 2, true, ch);
        self.stage(dt, 2);
        self.rhs(t + dt, 3, true, c1);
        let h6 = dt / 6.0;
        for i in 0..self.y.len() {
            self.y[i] += h6 * (self.k[0][i] + 2.0 * (self.k[1][i] + self.k[2][i]) + self.k[3][i]);
        }
        self.t = t + dt;
        if let (Some(before), Some(after)) = (trace_before, self.traces()) {
            for (x, y) in before.iter().zip(&after) {
                self.trace_drift = self.trace_drift.max((x - y).abs());
            }
        }
    }

    fn stage(&mut self, h: f64, from: usize) {
        for i in 0..self.y.len() {
            self.tmp[i] = self.y[i] + h * self.k[from][i];
        }
    }

    fn traces(&self) -> Option<Vec<f64>> {
        (0..=self.nz)
            .map(|j| self.model.trace(&self.y[j * self.stride..(j + 1) * self.stride]))
            .collect()
    }

    fn output(&mut self) -> Complex64 {
        let probe_in = self.input(self.t);
        Self::fill_field(self.model, self.stride, self.coupling, &self.y, probe_in, &mut self.field);
        self.field[self.nz]
    }

    fn spin_wave(&self) -> Vec<Complex64> {
        (0..=self.nz)
            .map(|j| self.model.spin_coherence(&self.y[j * self.stride..(j + 1) * self.stride]))
            .collect()
    }

    /// D ∫|σ21|² dζ: spin-wave energy in units of ∫|Ω|² dt.
    fn spin_energy(&self) -> f64 {
        let w: Vec<f64> = self.spin_wave().iter().map(|s| s.norm_sqr()).collect();
        self.optical_depth * trapezoid(&w, 1.0 / self.nz as f64)
    }

    fn hold(&mut self, h: f64, spin_factor: f64) {
        for j in 0..=self.nz {
            let r = j * self.stride..(j + 1) * self.stride;
            self.model.hold(&mut self.y[r], h, spin_factor);
        }
        self.t += h;
    }

    fn run(&mut self, n: usize, dt: f64, sched: &Schedule, phase: Phase, record: &mut Vec<Complex64>) {
        for _ in 0..n {
            self.step(dt, sched, phase);
            record.push(self.output());
        }
    }
}

fn check_common(pulse: &GaussianPulse, medium: &MediumParams, fields: &FieldParams, opts: &SolverOptions) -> Result<()> {
    pulse.validate()?;
    medium.validate()?;
    fields.validate()?;
    if opts.nz < 2 {
        return Err(Error::Resolution(format!("{} cells along the medium", opts.nz)));
    }
    if medium.optical_depth / opts.nz as f64 > MAX_DEPTH_PER_CELL {
        return Err(Error::Resolution(format!(
            "optical depth per cell {:.2} exceeds {MAX_DEPTH_PER_CELL}",
            medium.optical_depth / opts.nz as f64
        )));
    }
    Ok(())
}

fn resolve_dt(opts: &SolverOptions, t_p: f64, omega_c_max: f64, gamma31: f64) -> Result<f64> {
    let limit = max_time_step(t_p, omega_c_max, gamma31);
    match opts.dt {
        Some(dt) if dt.is_nan() || dt <= 0.0 => Err(Error::invalid("dt", "must be > 0")),
        Some(dt) if dt > limit * (1.0 + 1e-12) => Err(Error::Resolution(format!(
            "time step {dt} exceeds the limit {limit:.3e}"
        ))),
        Some(dt) => Ok(dt),
        None => Ok(limit),
    }
}

fn run_constant<M: AtomModel>(
    model: &M,
    pulse: &GaussianPulse,
    medium: &MediumParams,
    fields: &FieldParams,
    opts: &SolverOptions,
    dt: f64,
    start: f64,
) -> Result<TimeDomainRun> {
    let t_d = if fields.omega_c > 0.0 {
        group_delay(medium.optical_depth, fields.omega_c)
    } else {
        0.0
    };
    let beta = if fields.omega_c > 0.0 {
        broadening_factor(medium.optical_depth, medium.gamma31, pulse.t_p, fields.omega_c)
    } else {
        1.0
    };
    let end = opts
        .t_end
        .unwrap_or(pulse.t0 + 1.5 * t_d + 6.0 * beta * pulse.t_p + 4.5 * pulse.t_p);
    let n = ((end - start) / dt).ceil().max(1.0) as usize;
    let sched = Schedule::constant(fields.omega_c);
    let mut eng = Engine::new(model, *pulse, medium.optical_depth, opts.nz, start);
    let mut rec = Vec::with_capacity(n + 1);
    rec.push(eng.output());
    eng.run(n, dt, &sched, Phase::Write, &mut rec);
    let output = SampledWaveform {
        start,
        dt,
        amplitude: rec,
    };
    let input_energy = pulse.energy();
    let eta = output.energy() / input_energy;
    if opts.t_end.is_none() && eta > 0.0 && output.tail_fraction(0.05) > ALIAS_LIMIT {
        return Err(Error::Window("output has not left the integration window".into()));
    }
    let t_d = if eta > 0.0 { output.centroid()? - pulse.t0 } else { f64::NAN };
    Ok(TimeDomainRun {
        output,
        input_energy,
        eta,
        t_d,
        trace_drift: opts.full_obe.then_some(eng.trace_drift),
        steps: n,
    })
}

/// Lead time before the pulse center at which integration starts.
fn lead(pulse: &GaussianPulse) -> f64 {
    4.5 * pulse.t_p
}

/// Propagate the pulse with a constant control in the time domain.
pub fn simulate_propagation(
    pulse: &GaussianPulse,
    medium: &MediumParams,
    fields: &FieldParams,
    opts: &SolverOptions,
) -> Result<TimeDomainRun> {
    check_common(pulse, medium, fields, opts)?;
    let dt = resolve_dt(opts, pulse.t_p, fields.omega_c, medium.gamma31)?;
    let start = pulse.t0 - lead(pulse);
    dispatch(medium, fields, opts, |m| m.constant(pulse, medium, fields, opts, dt, start))
}

fn dispatch<T>(
    medium: &MediumParams,
    fields: &FieldParams,
    opts: &SolverOptions,
    f: impl Fn(&dyn ModelRef) -> Result<T>,
) -> Result<T> {
    if opts.full_obe {
        f(&FullObe::new(medium, opts.delta_p, fields.delta_c))
    } else {
        f(&WeakProbe::new(medium, opts.delta_p, fields.delta_c))
    }
}

/// Object-safe entry points so both atomic models share one call path.
trait ModelRef {
    fn constant(
        &self,
        pulse: &GaussianPulse,
        medium: &MediumParams,
        fields: &FieldParams,
        opts: &SolverOptions,
        dt: f64,
        start: f64,
    ) -> Result<TimeDomainRun>;
    fn storage(&self, job: &StorageJob) -> Result<StoragePass>;
}

impl<M: AtomModel> ModelRef for M {
    fn constant(
        &self,
        pulse: &GaussianPulse,
        medium: &MediumParams,
        fields: &FieldParams,
        opts: &SolverOptions,
        dt: f64,
        start: f64,
    ) -> Result<TimeDomainRun> {
        run_constant(self, pulse, medium, fields, opts, dt, start)
    }

    fn storage(&self, job: &StorageJob) -> Result<StoragePass> {
        storage_pass(self, job)
    }
}

struct StorageJob<'a> {
    pulse: &'a GaussianPulse,
    medium: &'a MediumParams,
    opts: &'a SolverOptions,
    sched: Schedule,
    dt: f64,
    start: f64,
    n_write: usize,
    settle_until: f64,
    motional_tau: Option<f64>,
    t_end: f64,
}

struct StoragePass {
    leaked: SampledWaveform,
    retrieved: SampledWaveform,
    spin_off: f64,
    spin_on: f64,
    spin_wave: Vec<Complex64>,
    t_off: f64,
    t_on: f64,
    trace_drift: Option<f64>,
}

fn storage_pass<M: AtomModel>(model: &M, job: &StorageJob) -> Result<StoragePass> {
    let dt = job.dt;
    let sched = &job.sched;
    let mut eng = Engine::new(model, *job.pulse, job.medium.optical_depth, job.opts.nz, job.start);
    let mut leaked = Vec::new();
    leaked.push(eng.output());
    eng.run(job.n_write, dt, sched, Phase::Write, &mut leaked);
    let a = eng.t;
    let spin_off = eng.spin_energy();
    let b_nominal = sched.t_on - 0.5 * sched.ramp;
    let b = if b_nominal <= job.settle_until {
        let n = ((b_nominal - a) / dt).round().max(1.0) as usize;
        eng.run(n, dt, sched, Phase::Hold, &mut leaked);
        eng.t
    } else {
        let n = ((job.settle_until - a) / dt).ceil().max(1.0) as usize;
        eng.run(n, dt, sched, Phase::Hold, &mut leaked);
        let h = b_nominal - eng.t;
        eng.hold(h, 1.0);
        eng.t = b_nominal;
        b_nominal
    };
    if let Some(tau) = job.motional_tau {
        let held = b - a;
        eng.hold(0.0, (-(held * held) / (2.0 * tau * tau)).exp());
    }
    let spin_on = eng.spin_energy();
    let spin_wave = eng.spin_wave();
    let n_read = ((job.t_end - b) / dt).ceil().max(1.0) as usize;
    let mut retrieved = Vec::with_capacity(n_read + 1);
    retrieved.push(eng.output());
    eng.run(n_read, dt, sched, Phase::Read, &mut retrieved);
    let ramp = sched.ramp;
    Ok(StoragePass {
        leaked: SampledWaveform {
            start: job.start,
            dt,
            amplitude: leaked,
        },
        retrieved: SampledWaveform {
            start: b,
            dt,
            amplitude: retrieved,
        },
        spin_off,
        spin_on,
        spin_wave,
        t_off: a - 0.5 * ramp,
        t_on: b + 0.5 * ramp,
        trace_drift: job.opts.full_obe.then_some(eng.trace_drift),
    })
}

/// Fraction of spectral energy of `w` beyond `cutoff` in |ω|.
fn spectral_tail(w: &SampledWaveform, cutoff: f64) -> f64 {
    let n = w.len().next_power_of_two() * 2;
    let mut padded = w.amplitude.clone();
    padded.resize(n, ZERO);
    let p = SampledWaveform {
        start: w.start,
        dt: w.dt,
        amplitude: padded,
    };
    let spec = p.spectrum();
    let omegas = p.grid().omegas();
    let total: f64 = spec.iter().map(|s| s.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let tail: f64 = spec
        .iter()
        .zip(&omegas)
        .filter(|(_, w)| w.abs() > cutoff)
        .map(|(s, _)| s.norm_sqr())
        .sum();
    tail / total
}

/// Store and retrieve the pulse with a switched control field.
///
/// Besides the switched run, a run with the control left on provides the
/// slow-light transmission and the leading-edge leakage used for η_comp.
pub fn simulate_storage(
    pulse: &GaussianPulse,
    medium: &MediumParams,
    fields: &FieldParams,
    protocol: &StorageProtocol,
    opts: &SolverOptions,
) -> Result<StorageResult> {
    check_common(pulse, medium, fields, opts)?;
    protocol.validate()?;
    let omega_read = protocol.omega_c_read.unwrap_or(fields.omega_c);
    let dt = resolve_dt(opts, pulse.t_p, fields.omega_c.max(omega_read), medium.gamma31)?;
    let ramp = protocol.ramp_duration();
    let sched = Schedule {
        omega_c: fields.omega_c,
        omega_c_read: omega_read,
        t_off: protocol.t_off,
        t_on: protocol.t_on,
        ramp,
        step: matches!(protocol.ramp, Ramp::Step),
    };
    let a = protocol.t_off + 0.5 * ramp;
    let earliest = pulse.t0 - lead(pulse);
    let n_write = ((a - earliest) / dt).ceil().max(1.0) as usize;
    let start = a - n_write as f64 * dt;
    let input_end = pulse.t0 + lead(pulse);
    let settle_until = opts
        .settle
        .map(|s| a + s)
        .unwrap_or_else(|| a.max(input_end) + 40.0 / medium.gamma31.max(0.05));
    let t_d_read = if omega_read > 0.0 {
        group_delay(medium.optical_depth, omega_read)
    } else {
        0.0
    };
    let beta_read = if omega_read > 0.0 {
        broadening_factor(medium.optical_depth, medium.gamma31, pulse.t_p, omega_read)
    } else {
        1.0
    };
    let b = protocol.t_on - 0.5 * ramp;
    let t_end = opts
        .t_end
        .unwrap_or(b + ramp + 1.5 * t_d_read + 6.0 * beta_read * pulse.t_p + 2.0 * pulse.t_p);
    let job = StorageJob {
        pulse,
        medium,
        opts,
        sched,
        dt,
        start,
        n_write,
        settle_until,
        motional_tau: protocol.motional_tau,
        t_end,
    };
    let no_switch_opts = SolverOptions { t_end: None, ..*opts };
    let (pass, reference) = rayon::join(
        || dispatch(medium, fields, opts, |m| m.storage(&job)),
        || {
            dispatch(medium, fields, opts, |m| {
                m.constant(pulse, medium, fields, &no_switch_opts, dt, start)
            })
        },
    );
    let pass = pass?;
    let reference = reference?;

    let e_in = pulse.energy();
    let eta_total = pass.retrieved.energy() / e_in;
    let eta_tran = reference.eta;
    let t_switch = pass.t_off;
    let out_ref = &reference.output;
    let k_switch = (((t_switch - out_ref.start) / out_ref.dt).floor().max(0.0) as usize).min(out_ref.len() - 1);
    let leading = out_ref.energy_between(0..k_switch + 1);
    let out_total = out_ref.energy();
    let lead_frac = if out_total > 0.0 { leading / out_total } else { 0.0 };
    let trailing = pulse.energy_fraction_after(t_switch);
    let eta_comp_measured = (1.0 - trailing - lead_frac).max(0.0);
    let (t_d, beta) = if fields.omega_c > 0.0 {
        (
            group_delay(medium.optical_depth, fields.omega_c),
            broadening_factor(medium.optical_depth, medium.gamma31, pulse.t_p, fields.omega_c),
        )
    } else {
        (0.0, 1.0)
    };
    let eta_comp_analytic = eta_comp(
        (t_switch - pulse.t0) / pulse.t_p,
        t_d / pulse.t_p,
        beta,
    )?;
    let eta_stored = if pass.spin_off > 0.0 {
        pass.spin_on / pass.spin_off
    } else {
        0.0
    };
    let mut warnings = Vec::new();
    if let Some(w) = pulse.weak_probe_warning(fields.omega_c) {
        warnings.push(w);
    }
    if eta_total > 1e-6 {
        let cutoff = 2.0 * pulse.spectral_fwhm().max(4.0 * LN_2 / (beta * pulse.t_p));
        let tail = spectral_tail(&pass.retrieved, cutoff);
        if tail > 0.01 {
            warnings.push(format!(
                "{:.1}% of the retrieved energy lies beyond |ω| = {cutoff:.3}; switching is not adiabatic",
                100.0 * tail
            ));
        }
    }
    let rt = pass.retrieved.tail_fraction(0.05);
    if eta_total > 1e-6 && rt > ALIAS_LIMIT {
        warnings.push(format!("{:.2e} of the retrieved energy lies at the end of the window", rt));
    }
    Ok(StorageResult {
        eta_total,
        eta_tran,
        eta_comp: eta_comp_measured,
        eta_comp_analytic,
        eta_stored,
        stored_fraction: pass.spin_off / e_in,
        retrieved: pass.retrieved,
        leaked: pass.leaked,
        spin_wave: pass.spin_wave,
        t_off: pass.t_off,
        t_on: pass.t_on,
        trace_drift: pass.trace_drift,
        warnings,
    })
}
