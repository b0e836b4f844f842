//! Domain types, unit conventions and validation.
//!
//! Units: the decay rate of cavity 1 is the unit of rate and all times are
//! expressed in its inverse. [`validate`] normalizes every rate by
//! `kappa_1` so downstream code can assume `kappa_1 == 1`. JSON keys carry
//! their units (`tau_kappa` is `kappa_1 * tau`, `theta_rad` is radians, ...).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Input-light protocol selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    /// Plain coherent drive, no squeezing.
    Coherent,
    /// Displaced squeezed state into a single cavity.
    SingleModeSqueezed,
    /// Two-mode squeezed input into two cavities with opposite dispersive
    /// couplings (the quantum-mechanics-free-subsystem scheme).
    TwoModeQMFS,
}

/// Qubit eigenstate conditioning the linear dynamics; `Ground` selects
/// `sigma_z = +1`, `Excited` selects `sigma_z = -1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    pub const BOTH: [QubitState; 2] = [QubitState::Ground, QubitState::Excited];

    pub fn sigma_z(self) -> f64 {
        match self {
            QubitState::Ground => 1.0,
            QubitState::Excited => -1.0,
        }
    }
}

/// One measurement cavity.
///
/// `drive_nbar0` parametrizes the incident coherent photon flux:
/// `nbar0 * kappa / 4` for a single driven cavity and `nbar0 * kappa_bar / 8`
/// per cavity when both cavities of the two-mode scheme are driven.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CavityParams {
    /// Decay rate in units of cavity-1's `kappa` (so normally 1.0 here).
    pub kappa_rate: f64,
    /// Dispersive shift in the same units.
    pub chi_rate: f64,
    /// Dimensionless drive strength `nbar0`.
    pub drive_nbar0: f64,
}

/// Kind of squeezed input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    SingleMode,
    TwoMode,
}

/// Squeezing source description.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SqueezeSource {
    /// Squeeze parameter `r >= 0`; quadrature variances are `exp(+-2r)`.
    pub r: f64,
    /// Squeeze angle from the X axis (radians); only meaningful for
    /// `SingleMode`. The *anti*squeezed axis lies at `theta`, which makes
    /// `theta = pi/2` the squeezed-Y choice appearing in the noise formula.
    #[serde(default)]
    pub theta_rad: f64,
    /// Source linewidth in units of `kappa`; `None` means broadband.
    #[serde(default)]
    pub bandwidth_kappa: Option<f64>,
    /// Squeeze turn-on time `kappa * t0 <= 0`; `None` means the presqueezed
    /// limit `kappa * t0 -> -inf` (squeezed steady state at t = 0).
    #[serde(default)]
    pub t0_kappa: Option<f64>,
    pub mode_kind: ModeKind,
}

impl SqueezeSource {
    /// Vacuum source (r = 0): what the `Coherent` protocol uses.
    pub fn vacuum() -> Self {
        SqueezeSource {
            r: 0.0,
            theta_rad: 0.0,
            bandwidth_kappa: None,
            t0_kappa: None,
            mode_kind: ModeKind::SingleMode,
        }
    }
}

/// Photon-loss channel, a single beamsplitter of transmissivity `eta`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LossModel {
    pub eta: f64,
    /// Where the beamsplitter sits. Detection-side (default) attenuates the
    /// output record; input-side mixes vacuum into the squeezed input.
    #[serde(default)]
    pub placement: LossPlacement,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossPlacement {
    #[default]
    Detection,
    Input,
}

impl LossModel {
    pub fn lossless() -> Self {
        LossModel {
            eta: 1.0,
            placement: LossPlacement::Detection,
        }
    }
}

/// Full experiment description. See the crate README for the JSON schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReadoutConfig {
    pub protocol: Protocol,
    pub qubit_state: QubitState,
    /// Integration time in units of `1/kappa_1`.
    pub tau_kappa: f64,
    /// One cavity (Coherent, SingleModeSqueezed) or two (TwoModeQMFS).
    pub cavities: Vec<CavityParams>,
    pub source: SqueezeSource,
    #[serde(default = "LossModel::lossless")]
    pub loss: LossModel,
}

impl ReadoutConfig {
    /// Method form of [`validate`].
    pub fn validate(self) -> Result<ValidatedConfig, ValidationError> {
        validate(self)
    }
}

/// Structured validation failure; each variant names the offending field.
#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("{field}: rate/parameter must be positive (got {value})")]
    NegativeRate { field: &'static str, value: f64 },
    #[error("loss.eta: efficiency must lie in [0, 1] (got {value})")]
    EfficiencyOutOfRange { value: f64 },
    #[error("{field}: {detail}")]
    ProtocolCavityMismatch {
        field: &'static str,
        detail: String,
    },
}

/// A [`ReadoutConfig`] that passed validation, normalized to `kappa_1 = 1`,
/// with the derived quantities used throughout the crate.
#[derive(Clone, Debug, Serialize)]
pub struct ValidatedConfig {
    pub protocol: Protocol,
    pub qubit_state: QubitState,
    pub tau: f64,
    pub cavities: Vec<CavityParams>,
    pub source: SqueezeSource,
    pub loss: LossModel,
    /// Output rotation angle `2 atan(2 chi_j / kappa_j)` per cavity.
    pub phi_qb: Vec<f64>,
    /// Drive strength shared by the driven cavities.
    pub nbar0: f64,
    /// Rate entering the measurement operator `M = sqrt(kappa_m) int Y_out`:
    /// `kappa` for one cavity, `kappa_bar` for two.
    pub kappa_m: f64,
    /// Two-cavity asymmetry parameters (`chi_{1,2} = dchi +- chi_bar`,
    /// `kappa_{1,2} = kappa_bar +- dkappa`); zero/defaulted for one cavity.
    pub chi_bar: f64,
    pub dchi: f64,
    pub kappa_bar: f64,
    pub dkappa: f64,
}

impl ValidatedConfig {
    /// Back to a plain config (used by the idempotence check and by sweep
    /// drivers that re-validate after editing fields).
    pub fn into_config(self) -> ReadoutConfig {
        ReadoutConfig {
            protocol: self.protocol,
            qubit_state: self.qubit_state,
            tau_kappa: self.tau,
            cavities: self.cavities,
            source: self.source,
            loss: self.loss,
        }
    }

    /// Same experiment with a different integration time.
    pub fn with_tau(&self, tau: f64) -> ValidatedConfig {
        let mut c = self.clone();
        c.tau = tau;
        c
    }

    /// Same experiment conditioned on the other qubit eigenstate.
    pub fn with_qubit_state(&self, s: QubitState) -> ValidatedConfig {
        let mut c = self.clone();
        c.qubit_state = s;
        c
    }

    /// Same experiment with squeeze parameters replaced.
    pub fn with_squeeze(&self, r: f64, theta_rad: f64) -> ValidatedConfig {
        let mut c = self.clone();
        c.source.r = r;
        c.source.theta_rad = theta_rad;
        c
    }

    /// Same experiment with drive strength replaced (all cavities).
    pub fn with_nbar0(&self, nbar0: f64) -> ValidatedConfig {
        let mut c = self.clone();
        c.nbar0 = nbar0;
        for cav in &mut c.cavities {
            cav.drive_nbar0 = nbar0;
        }
        c
    }

    /// Photon bookkeeping for this configuration at its integration time.
    pub fn photon_budget(&self) -> PhotonBudget {
        PhotonBudget::from_config(self)
    }
}

/// Photon bookkeeping of a measurement: input squeezing photons `N_s`,
/// displacement photons `N_d`, their sum `N`, and the steady intracavity
/// photon number `n_bar`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhotonBudget {
    pub n_total: f64,
    pub n_s: f64,
    pub n_d: f64,
    pub n_bar: f64,
}

impl PhotonBudget {
    pub fn from_config(c: &ValidatedConfig) -> PhotonBudget {
        let r = c.source.r;
        let sh2 = r.sinh() * r.sinh();
        let n_s = match c.protocol {
            Protocol::Coherent => 0.0,
            Protocol::SingleModeSqueezed => sh2,
            Protocol::TwoModeQMFS => 2.0 * sh2,
        };
        // total incident flux is nbar0 * kappa_m / 4 for every protocol
        let n_d = 0.25 * c.nbar0 * c.kappa_m * c.tau;
        let half = 0.5 * c.phi_qb[0];
        let n_bar = c.nbar0 * half.cos().powi(2)
            + match c.protocol {
                Protocol::Coherent => 0.0,
                Protocol::SingleModeSqueezed => sh2,
                Protocol::TwoModeQMFS => 2.0 * sh2,
            };
        PhotonBudget {
            n_total: n_s + n_d,
            n_s,
            n_d,
            n_bar,
        }
    }
}

/// Output rotation angle `phi_qb = 2 atan(2 chi / kappa)`.
pub fn qubit_rotation_angle(chi: f64, kappa: f64) -> f64 {
    2.0 * (2.0 * chi / kappa).atan()
}

/// Validate and normalize a configuration.
///
/// On success every rate is rescaled so the first cavity has `kappa = 1`
/// (times are rescaled accordingly), and the derived angles and asymmetry
/// parameters are attached.
pub fn validate(config: ReadoutConfig) -> Result<ValidatedConfig, ValidationError> {
    let ReadoutConfig {
        protocol,
        qubit_state,
        tau_kappa,
        mut cavities,
        source,
        loss,
    } = config;

    let expected = match protocol {
        Protocol::TwoModeQMFS => 2,
        _ => 1,
    };
    if cavities.len() != expected {
        return Err(ValidationError::ProtocolCavityMismatch {
            field: "cavities",
            detail: format!(
                "{protocol:?} requires exactly {expected} cavit{}, got {}",
                if expected == 1 { "y" } else { "ies" },
                cavities.len()
            ),
        });
    }
    for cav in &cavities {
        if !(cav.kappa_rate > 0.0) || !cav.kappa_rate.is_finite() {
            return Err(ValidationError::NegativeRate {
                field: "cavities[].kappa_rate",
                value: cav.kappa_rate,
            });
        }
        if !cav.chi_rate.is_finite() {
            return Err(ValidationError::NegativeRate {
                field: "cavities[].chi_rate",
                value: cav.chi_rate,
            });
        }
        if !(cav.drive_nbar0 >= 0.0) {
            return Err(ValidationError::NegativeRate {
                field: "cavities[].drive_nbar0",
                value: cav.drive_nbar0,
            });
        }
    }
    if !(tau_kappa > 0.0) || !tau_kappa.is_finite() {
        return Err(ValidationError::NegativeRate {
            field: "tau_kappa",
            value: tau_kappa,
        });
    }
    if !(source.r >= 0.0) || !source.r.is_finite() {
        return Err(ValidationError::NegativeRate {
            field: "source.r",
            value: source.r,
        });
    }
    if let Some(g) = source.bandwidth_kappa {
        if !(g > 0.0) || !g.is_finite() {
            return Err(ValidationError::NegativeRate {
                field: "source.bandwidth_kappa",
                value: g,
            });
        }
    }
    if let Some(t0) = source.t0_kappa {
        if t0 > 0.0 || !t0.is_finite() {
            return Err(ValidationError::ProtocolCavityMismatch {
                field: "source.t0_kappa",
                detail: format!("squeeze turn-on must satisfy t0 <= 0, got {t0}"),
            });
        }
    }
    if !(loss.eta >= 0.0 && loss.eta <= 1.0) {
        return Err(ValidationError::EfficiencyOutOfRange { value: loss.eta });
    }
    match protocol {
        Protocol::Coherent if source.r != 0.0 => {
            return Err(ValidationError::ProtocolCavityMismatch {
                field: "source.r",
                detail: format!("Coherent protocol requires r = 0, got {}", source.r),
            });
        }
        Protocol::SingleModeSqueezed if source.mode_kind != ModeKind::SingleMode => {
            return Err(ValidationError::ProtocolCavityMismatch {
                field: "source.mode_kind",
                detail: "SingleModeSqueezed protocol requires a SingleMode source".into(),
            });
        }
        Protocol::TwoModeQMFS if source.mode_kind != ModeKind::TwoMode => {
            return Err(ValidationError::ProtocolCavityMismatch {
                field: "source.mode_kind",
                detail: "TwoModeQMFS protocol requires a TwoMode source".into(),
            });
        }
        _ => {}
    }
    if cavities.len() == 2 {
        let d = (cavities[0].drive_nbar0 - cavities[1].drive_nbar0).abs();
        if d > 1e-12 * cavities[0].drive_nbar0.max(1.0) {
            return Err(ValidationError::ProtocolCavityMismatch {
                field: "cavities[].drive_nbar0",
                detail: "both cavities of the two-mode scheme share one drive strength".into(),
            });
        }
    }

    // Normalize rates to kappa of cavity 1. The `_kappa` fields (tau_kappa,
    // t0_kappa, bandwidth_kappa) are already expressed in 1/kappa_1 units and
    // carry over unchanged.
    let k1 = cavities[0].kappa_rate;
    let tau = tau_kappa;
    if (k1 - 1.0).abs() > 0.0 {
        for cav in &mut cavities {
            cav.kappa_rate /= k1;
            cav.chi_rate /= k1;
        }
    }

    let phi_qb = cavities
        .iter()
        .map(|c| qubit_rotation_angle(c.chi_rate, c.kappa_rate))
        .collect::<Vec<_>>();
    let nbar0 = cavities[0].drive_nbar0;
    let (kappa_m, chi_bar, dchi, kappa_bar, dkappa) = if cavities.len() == 2 {
        let (c1, c2) = (&cavities[0], &cavities[1]);
        let kb = 0.5 * (c1.kappa_rate + c2.kappa_rate);
        (
            kb,
            0.5 * (c1.chi_rate - c2.chi_rate),
            0.5 * (c1.chi_rate + c2.chi_rate),
            kb,
            0.5 * (c1.kappa_rate - c2.kappa_rate),
        )
    } else {
        let c1 = &cavities[0];
        (c1.kappa_rate, c1.chi_rate, 0.0, c1.kappa_rate, 0.0)
    };

    Ok(ValidatedConfig {
        protocol,
        qubit_state,
        tau,
        cavities,
        source,
        loss,
        phi_qb,
        nbar0,
        kappa_m,
        chi_bar,
        dchi,
        kappa_bar,
        dkappa,
    })
}

/// Convenience constructors for the configurations used by figures and tests.
pub mod presets {
    use super::*;

    /// Single-cavity coherent readout at the optimum `chi = kappa/2`.
    pub fn coherent(nbar0: f64, tau: f64) -> ReadoutConfig {
        ReadoutConfig {
            protocol: Protocol::Coherent,
            qubit_state: QubitState::Ground,
            tau_kappa: tau,
            cavities: vec![CavityParams {
                kappa_rate: 1.0,
                chi_rate: 0.5,
                drive_nbar0: nbar0,
            }],
            source: SqueezeSource::vacuum(),
            loss: LossModel::lossless(),
        }
    }

    /// Single-cavity displaced squeezed input, presqueezed, broadband.
    pub fn single_mode(nbar0: f64, tau: f64, r: f64, theta: f64) -> ReadoutConfig {
        ReadoutConfig {
            protocol: Protocol::SingleModeSqueezed,
            qubit_state: QubitState::Ground,
            tau_kappa: tau,
            cavities: vec![CavityParams {
                kappa_rate: 1.0,
                chi_rate: 0.5,
                drive_nbar0: nbar0,
            }],
            source: SqueezeSource {
                r,
                theta_rad: theta,
                bandwidth_kappa: None,
                t0_kappa: None,
                mode_kind: ModeKind::SingleMode,
            },
            loss: LossModel::lossless(),
        }
    }

    /// Symmetric two-cavity QMFS scheme, presqueezed, broadband.
    pub fn qmfs(nbar0: f64, tau: f64, r: f64) -> ReadoutConfig {
        qmfs_asymmetric(nbar0, tau, r, 0.5, 0.0, 0.0)
    }

    /// Two-cavity scheme with dispersive-shift and linewidth asymmetry:
    /// `chi_{1,2} = dchi +- chi_bar`, `kappa_{1,2} = 1 +- dkappa` (all in
    /// units of `kappa_bar`); `tau` is `kappa_bar * tau`.
    pub fn qmfs_asymmetric(
        nbar0: f64,
        tau: f64,
        r: f64,
        chi_bar: f64,
        dchi: f64,
        dkappa: f64,
    ) -> ReadoutConfig {
        ReadoutConfig {
            protocol: Protocol::TwoModeQMFS,
            qubit_state: QubitState::Ground,
            // tau_kappa is in 1/kappa_1 units; kappa_1 = kappa_bar (1 + dkappa)
            tau_kappa: tau * (1.0 + dkappa),
            cavities: vec![
                CavityParams {
                    kappa_rate: 1.0 + dkappa,
                    chi_rate: dchi + chi_bar,
                    drive_nbar0: nbar0,
                },
                CavityParams {
                    kappa_rate: 1.0 - dkappa,
                    chi_rate: dchi - chi_bar,
                    drive_nbar0: nbar0,
                },
            ],
            source: SqueezeSource {
                r,
                theta_rad: 0.0,
                bandwidth_kappa: None,
                t0_kappa: None,
                mode_kind: ModeKind::TwoMode,
            },
            loss: LossModel::lossless(),
        }
    }
}
