//! Property-based invariants of the model layer and the engine.

use proptest::prelude::*;
use squeezed_readout::dynamics::{
    build_system, covariance_is_physical, propagate_covariance, Integrator,
};
use squeezed_readout::model::{
    presets, qubit_rotation_angle, validate, LossPlacement, Protocol, QubitState, ReadoutConfig,
};
use squeezed_readout::optimize::asymmetric_snr;
use squeezed_readout::readout::{
    fidelity_from_snr, measurement_stats, snr_at_photon_split, snr_for_fidelity,
};

/// A small pool of valid configurations spanning all three protocols,
/// parametrized so proptest can steer every physical knob.
fn config(
    protocol: Protocol,
    tau: f64,
    r: f64,
    chi: f64,
    theta: f64,
    dchi: f64,
    dkappa: f64,
    eta: f64,
    input_side: bool,
) -> ReadoutConfig {
    let mut cfg = match protocol {
        Protocol::Coherent => presets::coherent(50.0, tau),
        Protocol::SingleModeSqueezed => presets::single_mode(50.0, tau, r, theta),
        Protocol::TwoModeQMFS => presets::qmfs_asymmetric(50.0, tau, r, chi, dchi, dkappa),
    };
    if protocol != Protocol::TwoModeQMFS {
        cfg.cavities[0].chi_rate = chi;
    }
    cfg.loss.eta = eta;
    cfg.loss.placement = if input_side { LossPlacement::Input } else { LossPlacement::Detection };
    cfg
}

fn protocols() -> impl Strategy<Value = Protocol> {
    prop_oneof![
        Just(Protocol::Coherent),
        Just(Protocol::SingleModeSqueezed),
        Just(Protocol::TwoModeQMFS),
    ]
}

proptest! {
    #[test]
    fn rotation_angle_is_odd_and_bounded(chi in -10.0..10.0f64, kappa in 0.05..20.0f64) {
        let phi = qubit_rotation_angle(chi, kappa);
        prop_assert!((phi + qubit_rotation_angle(-chi, kappa)).abs() < 1e-15);
        prop_assert!(phi.abs() < std::f64::consts::PI);
    }

    // Beyond SNR ~ 8 the fidelity saturates against the f64 spacing at 1.0
    // (1 - F < 1e-15) and no inverse can recover the SNR, so stop there.
    #[test]
    fn fidelity_snr_inverse_pair(snr in 0.05..8.0f64) {
        let f = fidelity_from_snr(snr);
        prop_assert!(f > 0.5 && f < 1.0);
        let back = snr_for_fidelity(f);
        prop_assert!(
            ((back - snr) / snr).abs() < 1e-6,
            "snr {snr} -> F {f} -> snr {back}"
        );
    }

    #[test]
    fn detection_loss_degrades_the_readout(
        tau in 1.0..10.0f64,
        r in 0.0..1.5f64,
        eta in 0.0..1.0f64,
    ) {
        let stats = measurement_stats(&validate(presets::qmfs(50.0, tau, r)).unwrap()).unwrap();
        let lossy = stats.apply_loss(eta);
        prop_assert!(lossy.snr <= stats.snr * (1.0 + 1e-12));
        prop_assert!(lossy.fidelity >= 0.5 && lossy.fidelity <= 1.0);
        let id = stats.apply_loss(1.0);
        prop_assert!((id.snr - stats.snr).abs() < 1e-12 * stats.snr);
    }

    #[test]
    fn asymmetric_snr_is_scale_invariant(
        scale in 0.1..10.0f64,
        dchi in -0.15..0.15f64,
        dkappa in -0.25..0.25f64,
        r in 0.0..1.5f64,
    ) {
        let a = asymmetric_snr(dchi, 0.5, 1.0, 8.0, r, dkappa).unwrap();
        let b = asymmetric_snr(
            scale * dchi, scale * 0.5, scale, 8.0 / scale, r, scale * dkappa,
        ).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-9, "snr {a} rescaled {b}");
    }

    #[test]
    fn photon_split_never_beats_the_optimum(
        n_total in 0.5..60.0f64,
        frac in 0.0..1.0f64,
        phi in 0.05..3.1f64,
    ) {
        use squeezed_readout::readout::snr_heisenberg_optimum;
        let (_, best) = snr_heisenberg_optimum(n_total, phi);
        let snr = snr_at_photon_split(n_total, frac * n_total * 0.999, phi);
        prop_assert!(snr <= best * (1.0 + 1e-9), "split {snr} > optimum {best}");
    }

    #[test]
    fn coherent_snr_grows_with_integration_time(
        tau in 0.2..20.0f64,
        dtau in 0.05..5.0f64,
        chi in 0.05..2.0f64,
    ) {
        let snr_at = |t: f64| {
            let mut c = presets::coherent(50.0, t);
            c.cavities[0].chi_rate = chi;
            measurement_stats(&validate(c).unwrap()).unwrap().snr
        };
        prop_assert!(snr_at(tau + dtau) >= snr_at(tau) * (1.0 - 1e-9));
    }

    #[test]
    fn config_survives_a_json_round_trip(
        protocol in protocols(),
        tau in 0.5..12.0f64,
        r in 0.0..2.0f64,
        chi in 0.05..2.0f64,
        theta in 0.0..std::f64::consts::PI,
        dchi in -0.15..0.15f64,
        dkappa in -0.25..0.25f64,
        eta in 0.7..1.0f64,
        input_side: bool,
    ) {
        let cfg = config(protocol, tau, r, chi, theta, dchi, dkappa, eta, input_side);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ReadoutConfig = serde_json::from_str(&text).unwrap();
        let a = measurement_stats(&validate(cfg).unwrap()).unwrap();
        let b = measurement_stats(&validate(back).unwrap()).unwrap();
        prop_assert_eq!(a.snr.to_bits(), b.snr.to_bits(), "snr {} vs {}", a.snr, b.snr);
        prop_assert_eq!(a.noise_ground.to_bits(), b.noise_ground.to_bits());
    }
}

proptest! {
    // The engine runs a full covariance propagation per case; keep the case
    // count modest so the suite stays quick.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagated_covariances_stay_physical(
        protocol in protocols(),
        tau in 0.5..8.0f64,
        r in 0.0..2.0f64,
        chi in 0.05..2.0f64,
        theta in 0.0..std::f64::consts::PI,
        dchi in -0.15..0.15f64,
        dkappa in -0.25..0.25f64,
        eta in 0.7..1.0f64,
        input_side: bool,
        presqueeze in -4.0..-0.1f64,
        bandwidth in proptest::option::of(2.0..20.0f64),
    ) {
        let mut cfg = config(protocol, tau, r, chi, theta, dchi, dkappa, eta, input_side);
        if protocol == Protocol::SingleModeSqueezed {
            cfg.source.t0_kappa = Some(presqueeze);
        }
        if protocol != Protocol::Coherent {
            cfg.source.bandwidth_kappa = bandwidth;
        }
        let v = validate(cfg).unwrap();
        for qs in [QubitState::Ground, QubitState::Excited] {
            let sys = build_system(&v, qs);
            let states = propagate_covariance(&sys, sys.t0, v.tau, Integrator::MatrixExp).unwrap();
            for state in &states {
                prop_assert!(
                    covariance_is_physical(&sys, state, 1e-9),
                    "unphysical covariance at t = {} ({:?}, {:?})", state.time, v.protocol, qs
                );
            }
        }
    }
}
