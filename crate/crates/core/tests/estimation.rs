use eitmem::estimation::*;
use eitmem::spectra::{probe_response, ControlDetuningMode};
use eitmem::{FieldParams, MediumParams};

const T_P: f64 = 5.95;

fn fig3a() -> (MediumParams, FieldParams) {
    (MediumParams::lambda(822.0, 0.0004, 1.07), FieldParams::control(7.41).with_delta_c(-0.012))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn noiseless_joint_roundtrip() {
    let (m, f) = fig3a();
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::noiseless(), None).unwrap();
    let r = fit_joint(&data, &FitOptions::default()).unwrap();
    assert!(rel(r.optical_depth.value, 822.0) < 1e-3);
    assert!(rel(r.omega_c.value, 7.41) < 1e-3);
    assert!(rel(r.gamma21.value, 0.0004) < 1e-3);
    assert!(rel(r.delta_c.value, -0.012) < 1e-3);
    assert!(rel(r.gamma31.value, 1.07) < 1e-3);
    assert!(r.consistency < 0.15 && r.warning.is_none());
    for e in [r.optical_depth, r.omega_c, r.gamma21, r.delta_c, r.gamma31] {
        assert!(e.interval > 0.0);
    }
}

#[test]
fn noiseless_spectrum_identifiable_quantities() {
    let (m, f) = fig3a();
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::noiseless(), None).unwrap();
    let s = fit_spectrum(
        &data,
        &FitOptions {
            gamma31: Some(1.07),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(rel(s.omega_c.value, 7.41) < 1e-6);
    assert!(rel(s.delta_c.value, -0.012) < 1e-6);
    assert!(rel(s.d_gamma21.value, 822.0 * 0.0004) < 1e-6);
    assert!(rel(s.d_gamma31.value, 822.0 * 1.07) < 1e-6);
}

#[test]
fn noisy_spectrum_within_two_sigma() {
    let m = MediumParams::lambda(399.0, 0.00039, 0.82);
    let f = FieldParams::control(7.31).with_delta_c(0.043);
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::default().with_seed(7), None).unwrap();
    let s = fit_spectrum(
        &data,
        &FitOptions {
            gamma31: Some(0.82),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(s.omega_c.covers(7.31), "{:?}", s.omega_c);
    assert!(s.delta_c.covers(0.043), "{:?}", s.delta_c);
    assert!(s.d_gamma21.covers(399.0 * 0.00039), "{:?}", s.d_gamma21);
    assert!(s.d_gamma31.covers(399.0 * 0.82), "{:?}", s.d_gamma31);
}

#[test]
fn depth_and_decoherence_are_degenerate_in_the_spectrum() {
    let (m, f) = fig3a();
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::default().with_seed(3), None).unwrap();
    let p = profile_gamma31(&data, &[0.7, 1.0], &FitOptions::default()).unwrap();
    let dof = data.spectrum.len() as f64;
    assert!((p[0].chi2 - p[1].chi2).abs() < 0.05 * dof, "{p:?}");
    assert!(rel(p[0].d_gamma31, p[1].d_gamma31) < 0.02);
    assert!(rel(p[0].optical_depth / p[1].optical_depth, 1.0 / 0.7) < 0.02);
}

#[test]
fn zero_ground_decoherence_interval_includes_zero() {
    let m = MediumParams::lambda(822.0, 0.0, 1.07);
    let f = FieldParams::control(7.41);
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::default().with_seed(11), None).unwrap();
    let r = fit_joint(&data, &FitOptions::default()).unwrap();
    assert!(r.gamma21.covers(0.0), "{:?}", r.gamma21);
}

#[test]
fn mismatched_dataset_is_flagged() {
    let f = FieldParams::control(7.41);
    let spec = synth_dataset(&MediumParams::lambda(400.0, 0.0004, 1.07), &f, T_P, &NoiseModel::noiseless(), None).unwrap();
    let slow = synth_dataset(&MediumParams::lambda(800.0, 0.0004, 1.07), &f, T_P, &NoiseModel::noiseless(), None).unwrap();
    let mixed = MeasuredDataset {
        slowlight: slow.slowlight,
        ..spec
    };
    let r = fit_joint(&mixed, &FitOptions::default()).unwrap();
    assert!(r.consistency > 0.15, "{}", r.consistency);
    assert!(r.warning.is_some());
}

#[test]
fn fixed_seed_is_bit_identical() {
    let (m, f) = fig3a();
    let a = synth_dataset(&m, &f, T_P, &NoiseModel::default().with_seed(42), None).unwrap();
    let b = synth_dataset(&m, &f, T_P, &NoiseModel::default().with_seed(42), None).unwrap();
    assert_eq!(a, b);
    let c = synth_dataset(&m, &f, T_P, &NoiseModel::default().with_seed(43), None).unwrap();
    assert_ne!(a, c);
}

#[test]
fn noiseless_data_equals_forward_model() {
    let (m, f) = fig3a();
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::noiseless(), None).unwrap();
    for (dp, t) in data.spectrum.delta_p.iter().zip(&data.spectrum.transmission) {
        let r = probe_response(0.0, *dp, &m, &f, ControlDetuningMode::Direct).unwrap();
        assert_eq!(*t, (2.0 * r.re).exp());
    }
}

#[test]
fn objective_ignores_point_order() {
    let (m, f) = fig3a();
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::default().with_seed(5), None).unwrap();
    let opts = FitOptions {
        gamma31: Some(1.07),
        ..Default::default()
    };
    let a = fit_spectrum(&data, &opts).unwrap();
    let mut shuffled = data.clone();
    let n = shuffled.spectrum.len();
    let perm: Vec<usize> = (0..n).map(|k| (k * 7919) % n).collect();
    let s = &data.spectrum;
    shuffled.spectrum = SpectrumData {
        delta_p: perm.iter().map(|&k| s.delta_p[k]).collect(),
        transmission: perm.iter().map(|&k| s.transmission[k]).collect(),
        sigma: perm.iter().map(|&k| s.sigma[k]).collect(),
    };
    let b = fit_spectrum(&shuffled, &opts).unwrap();
    assert!(rel(a.chi2, b.chi2) < 1e-8);
    assert!(rel(a.omega_c.value, b.omega_c.value) < 1e-8);
}

#[test]
fn short_spectrum_is_rejected() {
    let (m, f) = fig3a();
    let grid: Vec<f64> = (0..10).map(|k| k as f64).collect();
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::noiseless(), Some(grid)).unwrap();
    assert!(fit_spectrum(&data, &FitOptions::default()).unwrap_err().is_validation());
}

#[test]
fn joint_fit_needs_a_trace() {
    let (m, f) = fig3a();
    let mut data = synth_dataset(&m, &f, T_P, &NoiseModel::noiseless(), None).unwrap();
    data.slowlight = None;
    assert!(fit_joint(&data, &FitOptions::default()).unwrap_err().is_validation());
}

#[test]
fn fixed_decoherence_is_respected() {
    let (m, f) = fig3a();
    let data = synth_dataset(&m, &f, T_P, &NoiseModel::noiseless(), None).unwrap();
    let r = fit_joint(
        &data,
        &FitOptions {
            gamma31: Some(0.9),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.gamma31.value, 0.9);
    assert_eq!(r.gamma31.interval, 0.0);
    assert!(rel(r.optical_depth.value, 822.0) < 1e-3);
}

#[test]
fn depth_decoherence_model_is_increasing() {
    for scheme in [Gamma31Scheme::D1, Gamma31Scheme::D2] {
        let mut last = gamma31_model(0.0, scheme).unwrap();
        assert!((last - 0.70).abs() < 1e-12);
        for k in 1..=120 {
            let g = gamma31_model(10.0 * k as f64, scheme).unwrap();
            assert!(g > last);
            last = g;
        }
    }
    assert!(gamma31_model(-1.0, Gamma31Scheme::D1).is_err());
}
