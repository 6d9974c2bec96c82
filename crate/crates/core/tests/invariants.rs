use eitmem::propagation::{control_for_zeta, eta_tran, propagate_pulse, PropagationOptions};
use eitmem::spectra::{lambda_response, ntype_response, ControlDetuningMode};
use eitmem::storage::eta_comp;
use eitmem::waveform::{make_grid, GridOptions};
use eitmem::{FieldParams, GaussianPulse, MediumParams, Transition};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn lambda_medium_never_amplifies(
        d in 0.0..2000.0f64,
        g21 in 0.0..0.01f64,
        g31 in 0.3..2.0f64,
        omega_c in 0.0..15.0f64,
        delta_c in -0.5..0.5f64,
        delta_p in -20.0..20.0f64,
    ) {
        let f = lambda_response(0.0, delta_p, &MediumParams::lambda(d, g21, g31), &FieldParams::control(omega_c).with_delta_c(delta_c)).unwrap();
        prop_assert!(f.re <= 1e-12 * d.max(1.0));
    }

    #[test]
    fn ntype_medium_never_amplifies(
        d in 0.0..500.0f64,
        g21 in 0.0..0.01f64,
        g31 in 0.3..2.0f64,
        omega_c in 0.1..10.0f64,
        delta_s in -80.0..-10.0f64,
        delta_p in -20.0..20.0f64,
    ) {
        let m = MediumParams::ntype(d, g21, g31, g31, delta_s);
        for mode in [ControlDetuningMode::Direct, ControlDetuningMode::Zero] {
            let f = ntype_response(0.0, delta_p, &m, &FieldParams::control(omega_c), mode).unwrap();
            prop_assert!(f.re <= 1e-12 * d.max(1.0));
        }
    }

    #[test]
    fn resonant_lambda_spectrum_is_symmetric(
        d in 1.0..2000.0f64,
        g21 in 0.0..0.01f64,
        g31 in 0.3..2.0f64,
        omega_c in 0.0..15.0f64,
        delta_p in 0.0..20.0f64,
    ) {
        let m = MediumParams::lambda(d, g21, g31);
        let f = FieldParams::control(omega_c);
        let up = lambda_response(0.0, delta_p, &m, &f).unwrap();
        let down = lambda_response(0.0, -delta_p, &m, &f).unwrap();
        prop_assert!((up.re - down.re).abs() <= 1e-10 * up.re.abs().max(1e-12));
        prop_assert!((up.im + down.im).abs() <= 1e-10 * up.im.abs().max(1e-12));
    }

    #[test]
    fn slow_light_transmission_is_bounded_and_ordered(
        d in 10.0..2000.0f64,
        zeta in 0.1..5.0f64,
        g21 in 0.0..0.001f64,
        g31 in 0.3..2.0f64,
        t_p in 1.0..20.0f64,
    ) {
        let eta = eta_tran(d, zeta, g21, g31, t_p).unwrap();
        prop_assert!(eta > 0.0 && eta <= 1.0);
        prop_assert!(eta_tran(1.5 * d, zeta, g21, g31, t_p).unwrap() >= eta);
        prop_assert!(eta_tran(d, zeta, g21, 1.5 * g31, t_p).unwrap() <= eta);
        prop_assert!(eta_tran(d, zeta, g21 + 1e-4, g31, t_p).unwrap() < eta);
    }

    #[test]
    fn edge_cutoff_fraction_is_a_fraction(
        kappa in 0.0..3.0f64,
        zeta in 0.0..6.0f64,
        beta in 1.0..3.0f64,
    ) {
        let e = eta_comp(kappa, zeta, beta).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert!(eta_comp(kappa, zeta + 0.1, beta).unwrap() >= e);
    }

    #[test]
    fn unit_conversions_roundtrip(x in -1e3..1e3f64) {
        for t in [Transition::CS_D1, Transition::CS_D2] {
            prop_assert!((t.rate_to_mhz(t.rate_from_mhz(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
            prop_assert!((t.rate_to_ghz(t.rate_from_ghz(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
            prop_assert!((t.time_to_ns(t.time_from_ns(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
            prop_assert!((t.time_to_us(t.time_from_us(x)) - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagated_pulse_loses_energy_and_is_delayed(
        d in 50.0..800.0f64,
        zeta in 0.5..4.0f64,
        g21 in 0.0..0.001f64,
        g31 in 0.5..1.2f64,
        t_p in 4.0..10.0f64,
    ) {
        let m = MediumParams::lambda(d, g21, g31);
        let f = FieldParams::control(control_for_zeta(d, zeta, t_p));
        let pulse = GaussianPulse::new(0.01, t_p, 0.0).unwrap();
        let grid = make_grid(&pulse, &m, &f, &GridOptions::default()).unwrap();
        let r = propagate_pulse(&grid.sample(&pulse), &m, &f, &PropagationOptions::default()).unwrap();
        prop_assert!(r.eta_tran > 0.0 && r.eta_tran <= 1.0);
        prop_assert!(r.t_d > 0.0);
        prop_assert!(r.beta >= 1.0 - 1e-9);
    }
}
