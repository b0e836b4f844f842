//! Measurement figures of merit: signal, noise, SNR, fidelity — via the
//! covariance engine and via closed forms, so the two paths can check each
//! other.

use serde::Serialize;
use statrs::function::erf;
use thiserror::Error;

use crate::dynamics::{self, Integrator};
use crate::model::{LossPlacement, QubitState, ValidatedConfig};

#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error("closed form requires chi = kappa/2 (phi_qb = pi/2); got 2 chi/kappa = {ratio}")]
    RegimeViolation { ratio: f64 },
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
}

/// Signal/noise summary of one readout configuration.
///
/// `vacuum_noise` is the coherent-baseline record variance `kappa_m * tau`,
/// kept so the detection-side loss channel knows how much vacuum the
/// beamsplitter mixes into the record.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeasurementStats {
    pub signal_ground: f64,
    pub signal_excited: f64,
    pub noise_ground: f64,
    pub noise_excited: f64,
    pub snr: f64,
    pub fidelity: f64,
    pub vacuum_noise: f64,
}

impl MeasurementStats {
    pub fn from_moments(
        signal_ground: f64,
        signal_excited: f64,
        noise_ground: f64,
        noise_excited: f64,
        vacuum_noise: f64,
    ) -> MeasurementStats {
        let snr = (signal_ground - signal_excited).abs() / (noise_ground + noise_excited).sqrt();
        MeasurementStats {
            signal_ground,
            signal_excited,
            noise_ground,
            noise_excited,
            snr,
            fidelity: fidelity_from_snr(snr),
            vacuum_noise,
        }
    }

    /// Detection-side beamsplitter of transmissivity `eta`: signals scale by
    /// `sqrt(eta)`, record variances mix toward the vacuum record variance.
    pub fn apply_loss(&self, eta: f64) -> MeasurementStats {
        assert!((0.0..=1.0).contains(&eta), "efficiency must lie in [0, 1]");
        let se = eta.sqrt();
        MeasurementStats::from_moments(
            se * self.signal_ground,
            se * self.signal_excited,
            eta * self.noise_ground + (1.0 - eta) * self.vacuum_noise,
            eta * self.noise_excited + (1.0 - eta) * self.vacuum_noise,
            self.vacuum_noise,
        )
    }
}

/// `F = 1 - erfc(SNR/2)/2`.
pub fn fidelity_from_snr(snr: f64) -> f64 {
    1.0 - 0.5 * erf::erfc(0.5 * snr)
}

/// Inverse of [`fidelity_from_snr`], the SNR needed for a target fidelity.
pub fn snr_for_fidelity(fidelity: f64) -> f64 {
    assert!(
        (0.5..1.0).contains(&fidelity),
        "fidelity target must lie in [0.5, 1)"
    );
    2.0 * erf::erfc_inv(2.0 * (1.0 - fidelity))
}

/// Long-time coherent-readout closed form `|sin phi_qb| sqrt(2 nbar0 k tau)`.
///
/// Defined for a single cavity or a symmetric two-cavity pair (it uses the
/// first cavity's rotation angle and the measured rate `kappa_m`).
pub fn snr_coherent_asymptotic(config: &ValidatedConfig, tau: f64) -> f64 {
    let phi = config.phi_qb[0];
    phi.sin().abs() * (2.0 * config.nbar0 * config.kappa_m * tau).sqrt()
}

/// Closed-form single-mode squeezed-input record noise at `phi_qb = pi/2`
/// (long-time form; the engine keeps the transient terms this drops):
/// `k tau [sin^2(t) e^{-2r} + cos^2(t) e^{2r}] + 2 sqrt(2) sinh(2r) cos(2t - 3pi/4)`.
///
/// The angle convention matches `sigma_z = -1` (excited); the opposite
/// eigenstate corresponds to `theta -> -theta`.
pub fn noise_single_mode_closed_form(
    r: f64,
    theta: f64,
    chi: f64,
    kappa: f64,
    tau: f64,
) -> Result<f64, ReadoutError> {
    let ratio = 2.0 * chi / kappa;
    if (ratio - 1.0).abs() > 1e-9 {
        return Err(ReadoutError::RegimeViolation { ratio });
    }
    let (s2, c2) = (theta.sin().powi(2), theta.cos().powi(2));
    let stationary = kappa * tau * (s2 * (-2.0 * r).exp() + c2 * (2.0 * r).exp());
    let constant = 2.0 * std::f64::consts::SQRT_2
        * (2.0 * r).sinh()
        * (2.0 * theta - 0.75 * std::f64::consts::PI).cos();
    Ok(stationary + constant)
}

/// Run the covariance engine for both qubit eigenstates and assemble the
/// measurement statistics, applying detection-side loss if configured.
pub fn measurement_stats(config: &ValidatedConfig) -> Result<MeasurementStats, ReadoutError> {
    let mut moments = [(0.0, 0.0); 2];
    for (slot, qs) in [(0, QubitState::Ground), (1, QubitState::Excited)] {
        let sys = dynamics::build_system(config, qs);
        let state = dynamics::propagate_to(&sys, sys.t0, config.tau, Integrator::MatrixExp)?;
        moments[slot] = (state.signal(&sys), state.noise(&sys));
    }
    let vacuum_noise = config.kappa_m * config.tau;
    let mut stats = MeasurementStats::from_moments(
        moments[0].0,
        moments[1].0,
        moments[0].1,
        moments[1].1,
        vacuum_noise,
    );
    if config.loss.placement == LossPlacement::Detection && config.loss.eta < 1.0 {
        stats = stats.apply_loss(config.loss.eta);
    }
    Ok(stats)
}

/// Photon-budget optimum at fixed total input photons `N = N_s + N_d`:
/// the squeezing share `N_s = N^2 / [2(N+1)]` and the resulting
/// `SNR = 2 |sin phi_qb| N sqrt(1 + 2/N)`.
pub fn snr_heisenberg_optimum(n_total: f64, phi_qb: f64) -> (f64, f64) {
    assert!(n_total > 0.0, "photon budget must be positive");
    let n_s = n_total * n_total / (2.0 * (n_total + 1.0));
    let snr = 2.0 * phi_qb.sin().abs() * n_total * (1.0 + 2.0 / n_total).sqrt();
    (n_s, snr)
}

/// SNR at a fixed total input photon number `N` when `N_s` of it is spent on
/// two-mode squeezing and the rest on displacement:
/// `e^r sqrt(8 (N - N_s)) |sin phi_qb|` with `e^{2r} = 1 + N_s + sqrt(N_s (N_s + 2))`.
pub fn snr_at_photon_split(n_total: f64, n_s: f64, phi_qb: f64) -> f64 {
    assert!((0.0..=n_total).contains(&n_s));
    let e2r = 1.0 + n_s + (n_s * (n_s + 2.0)).sqrt();
    e2r.sqrt() * (8.0 * (n_total - n_s)).sqrt() * phi_qb.sin().abs()
}

/// Intracavity-photon scaling form `2 |sin(phi_qb/2)| n_bar sqrt(k tau)`
/// (long-time optimum over the squeezing/displacement split at fixed
/// intracavity photon number).
pub fn snr_intracavity_optimum(n_bar: f64, phi_qb: f64, kappa: f64, tau: f64) -> f64 {
    assert!(n_bar > 0.0);
    2.0 * (0.5 * phi_qb).sin().abs() * n_bar * (kappa * tau).sqrt()
}
