use eitmem::propagation::{control_for_zeta, propagate_pulse, PropagationOptions};
use eitmem::storage::{simulate_propagation, simulate_storage, Ramp, SolverOptions, StorageProtocol};
use eitmem::waveform::{SampledWaveform, TimeGrid};
use eitmem::{FieldParams, GaussianPulse, MediumParams};

/// Spectral solution on the solver's own time axis, computed on a longer
/// periodic window and truncated.
fn spectral_reference(run: &SampledWaveform, pulse: &GaussianPulse, m: &MediumParams, f: &FieldParams) -> SampledWaveform {
    let n = run.len();
    let grid = TimeGrid {
        start: run.start,
        dt: run.dt,
        len: (4 * n).next_power_of_two(),
    };
    let out = propagate_pulse(&grid.sample(pulse), m, f, &PropagationOptions::default()).unwrap();
    SampledWaveform {
        start: run.start,
        dt: run.dt,
        amplitude: out.output.amplitude[..n].to_vec(),
    }
}

#[test]
fn constant_control_matches_spectral_solution() {
    let pulse = GaussianPulse::new(1.0, 5.95, 0.0).unwrap();
    let m = MediumParams::lambda(200.0, 1e-3, 0.7);
    let f = FieldParams::control(control_for_zeta(200.0, 2.5, 5.95));
    let run = simulate_propagation(&pulse, &m, &f, &SolverOptions::default()).unwrap();
    let reference = spectral_reference(&run.output, &pulse, &m, &f);
    let err = run.output.relative_rms_error(&reference).unwrap();
    assert!(err < 5e-3, "{err}");
}

#[test]
fn decomposition_without_decoherence() {
    let pulse = GaussianPulse::new(1.0, 5.95, 0.0).unwrap();
    let m = MediumParams::lambda(100.0, 0.0, 0.5);
    let f = FieldParams::control(control_for_zeta(100.0, 3.0, 5.95));
    let p = StorageProtocol::from_kappa(0.0, 5.95, 1.5, 0.05, Ramp::Step);
    let r = simulate_storage(&pulse, &m, &f, &p, &SolverOptions::default()).unwrap();
    let product = r.eta_tran * r.eta_comp;
    assert!((r.eta_total - product).abs() / product < 0.01);
}
