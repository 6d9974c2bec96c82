use eitmem::fwm::{
    fwm_gain_pulse, fwm_gain_scan, fwm_gain_steady, fwm_susceptibilities, fwm_zero_order, max_gain, phase_mismatch,
    pump_probe_scan, FwmParams, FwmPulseOptions, PumpScanOptions,
};
use eitmem::params::default_epsilon_fwm;
use eitmem::propagation::{control_for_zeta, propagate_pulse, PropagationOptions};
use eitmem::units::{deg_to_rad, CS_HYPERFINE_GHZ};
use eitmem::waveform::{make_grid, GridOptions};
use eitmem::{FieldParams, GaussianPulse, MediumParams, Transition};
use proptest::prelude::*;

fn medium(d: f64, g21: f64, g31: f64) -> MediumParams {
    MediumParams::double_lambda(d, g21, g31, Transition::CS_D1.rate_from_ghz(CS_HYPERFINE_GHZ))
}

fn params(m: &MediumParams, omega_c: f64) -> FwmParams {
    let f = FieldParams {
        omega_c,
        delta_c: 0.0,
        omega_d: default_epsilon_fwm() * omega_c,
        delta_d: -m.delta_hf,
        theta: 0.0,
    };
    FwmParams::new(&f, m, &Transition::CS_D1, false)
}

fn pulse_200ns() -> GaussianPulse {
    GaussianPulse::new(0.01, Transition::CS_D1.time_from_ns(200.0), 0.0).unwrap()
}

#[test]
fn probe_run_without_idler_matches_spectral_solution() {
    let pulse = pulse_200ns();
    let m = medium(300.0, 1e-4, 1.0);
    let opts = FwmPulseOptions::default();
    let r = fwm_gain_pulse(&pulse, &params(&m, 1.0), &m, &[300.0], &opts).unwrap()[0];
    let lam = MediumParams::lambda(300.0, m.gamma21, r.gamma31);
    let f = FieldParams::control(control_for_zeta(300.0, opts.zeta, pulse.t_p));
    let g = make_grid(&pulse, &lam, &f, &GridOptions::default()).unwrap();
    let spec = propagate_pulse(&g.sample(&pulse), &lam, &f, &PropagationOptions::default()).unwrap();
    assert!((r.eta_without - spec.eta_tran).abs() < 0.01, "{} vs {}", r.eta_without, spec.eta_tran);
}

#[test]
fn pulse_gain_grows_with_depth() {
    let m = medium(1000.0, 1e-4, 1.0);
    let ods = [250.0, 500.0, 750.0, 1000.0];
    let r = fwm_gain_pulse(&pulse_200ns(), &params(&m, 1.0), &m, &ods, &FwmPulseOptions::default()).unwrap();
    for w in r.windows(2) {
        assert!(w[1].x > w[0].x);
        assert!(w[1].gain > w[0].gain, "{:?}", r);
    }
    let last = r.last().unwrap();
    assert!(last.gain > 0.0 && last.gain <= 0.015, "{}", last.gain);
}

#[test]
fn gain_falls_off_with_phase_mismatch() {
    let m = medium(1000.0, 2e-4, 1.229);
    let p = params(&m, 6.72);
    let pi = std::f64::consts::PI;
    let mut inside = Vec::new();
    // Largest gain within each 2π band of Δk·L beyond the first zone.
    let mut lobes = vec![f64::NEG_INFINITY; 8];
    for k in 0..=1500 {
        let r = fwm_gain_steady(0.05, deg_to_rad(1e-3 * k as f64), &p, &m).unwrap();
        let phase = r.delta_kz * p.length;
        if phase <= pi {
            inside.push(r.fwm_gain);
        } else {
            let band = ((phase - pi) / (2.0 * pi)) as usize;
            if band < lobes.len() {
                lobes[band] = lobes[band].max(r.fwm_gain);
            }
        }
    }
    assert!(inside.windows(2).all(|w| w[1] <= w[0]));
    let filled: Vec<f64> = lobes.into_iter().filter(|v| v.is_finite()).collect();
    assert!(filled.len() >= 5);
    assert!(filled.windows(2).all(|w| w[1] <= w[0]), "{filled:?}");
    assert!(filled[0] < *inside.last().unwrap());
}

#[test]
fn literal_mismatch_is_discontinuous_at_zero_angle() {
    use eitmem::fwm::PhaseMatching;
    let m = medium(1000.0, 2e-4, 1.229);
    let p = params(&m, 6.72);
    let lit = FwmParams {
        phase_matching: PhaseMatching::Literal,
        ..p
    };
    let n_c = 1.0;
    assert!(phase_mismatch(&p, n_c).abs() < 1.0);
    assert!(phase_mismatch(&lit, n_c) > 0.5 * p.k_p);
}

#[test]
fn pump_scan_asymptote_is_small() {
    let m = medium(600.0, 5e-4, 0.9);
    let p = FwmParams {
        theta: deg_to_rad(0.5),
        ..params(&m, 6.2)
    };
    let t = Transition::CS_D1;
    let pumps: Vec<f64> = [1.5, 1.77, 4.0, CS_HYPERFINE_GHZ].iter().map(|g| t.rate_from_ghz(*g)).collect();
    let r = pump_probe_scan(&pumps, &p, &m, &PumpScanOptions::default()).unwrap();
    assert!(r[0].excess_gain > r[3].excess_gain);
    assert!(r[3].excess_gain.abs() < 0.006, "{}", r[3].excess_gain);
    for w in r.windows(2) {
        assert!(w[1].excess_gain < w[0].excess_gain);
    }
    let none = pump_probe_scan(
        &pumps[..1],
        &p,
        &m,
        &PumpScanOptions {
            power_ratio: 0.0,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(none[0].excess_gain.abs() < 1e-12);
}

#[test]
fn steady_gain_peak() {
    let m = medium(1000.0, 2e-4, 1.229);
    let p = params(&m, 6.72);
    let grid: Vec<f64> = (0..=400).map(|k| -0.2 + 1e-3 * k as f64).collect();
    let scan = fwm_gain_scan(&grid, 0.0, &p, &m).unwrap();
    let best = max_gain(&scan).unwrap();
    assert!((best.fwm_gain - 0.015).abs() < 0.005);
    assert!((best.delta_p - 0.04).abs() < 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn populations_are_a_distribution(
        omega_c in 0.05f64..20.0,
        eps in -5.0f64..5.0,
        delta_c in -3.0f64..3.0,
        delta_d in -3000.0f64..3000.0,
        g in 0.05f64..3.0,
        b31 in 0.05f64..1.0,
        b42 in 0.05f64..1.0,
    ) {
        prop_assume!(eps.abs() > 1e-3);
        let mut m = medium(500.0, 1e-3, g);
        m.branch31 = b31;
        m.branch42 = b42;
        let p = FwmParams { omega_d: eps * omega_c, delta_c, delta_d, ..params(&m, omega_c) };
        let s = fwm_zero_order(&p, &m).unwrap();
        for v in [s.s11, s.s22, s.s33, s.s44] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((s.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_is_nonnegative_and_uncoupled_is_passive(
        dp in -2.0f64..2.0,
        theta_deg in 0.0f64..3.0,
        d in 10.0f64..1500.0,
        omega_c in 0.5f64..10.0,
    ) {
        let m = medium(d, 2e-4, 1.0);
        let p = params(&m, omega_c);
        let r = fwm_gain_steady(dp, deg_to_rad(theta_deg), &p, &m).unwrap();
        prop_assert!(r.probe_gain >= 0.0 && r.idler_conv >= 0.0);
        let bare = fwm_susceptibilities(&FwmParams { omega_d: 0.0, ..p.with_delta_p(dp) }, &m).unwrap();
        prop_assert!(bare.chi_pi.norm() == 0.0 && bare.chi_ip.norm() == 0.0);
        let r0 = fwm_gain_steady(dp, 0.0, &FwmParams { omega_d: 0.0, ..p }, &m).unwrap();
        prop_assert!(r0.probe_gain <= 1.0 + 1e-12);
    }
}
