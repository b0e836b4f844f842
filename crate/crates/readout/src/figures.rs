//! Row assembly for the CLI's figure-regeneration subcommands.
//!
//! Each function sweeps one axis of a published-style figure and returns
//! plain rows for CSV serialization; all heavy lifting happens in the
//! engine/optimizer modules. Sweep points run through the feature-switched
//! parallel map, and outputs are ordered by sweep index regardless of the
//! execution order.

use crate::model::{presets, ValidatedConfig};
use crate::optimize::{
    self, asymmetric_snr, heisenberg_scan, matched_dkappa, optimize_asymmetry,
    optimize_single_mode, photons_for_fidelity, required_tau, HeisenbergScan, OptimizeError,
};
use crate::readout::measurement_stats;
use crate::transmon::{self, TransmonSpec};
use crate::util::par_map;

/// One point of the SNR-vs-integration-time comparison (`fig3a`, `stats`).
#[derive(Clone, Copy, Debug)]
pub struct SnrSweepRow {
    pub kappa_tau: f64,
    pub snr_coherent: f64,
    /// Single-mode squeezing with `(e^{2r}, theta)` optimized per point,
    /// `e^{2r}` capped at `e2r_cap`.
    pub snr_single_opt: f64,
    pub snr_qmfs: f64,
}

/// Sweep the three protocols over `taus` at matched drive and dispersive
/// shift. The QMFS curve uses `config` as-is (squeeze strength from its
/// source); the coherent and single-mode curves run one cavity at the same
/// drive with `chi = kappa/2`.
pub fn snr_sweep(
    config: &ValidatedConfig,
    taus: &[f64],
    e2r_cap: f64,
    grid: usize,
) -> Result<Vec<SnrSweepRow>, OptimizeError> {
    let nbar0 = config.nbar0;
    let single = presets::single_mode(nbar0, 1.0, 0.0, 0.0)
        .validate()
        .expect("single-mode preset must validate");
    let rows: Vec<Result<SnrSweepRow, OptimizeError>> = par_map(taus.to_vec(), |tau| {
        let snr_coherent = measurement_stats(&single.with_tau(tau))?.snr;
        let (_, _, snr_single_opt) = optimize_single_mode(&single, tau, e2r_cap, grid)?;
        let snr_qmfs = measurement_stats(&config.with_tau(tau))?.snr;
        Ok(SnrSweepRow { kappa_tau: tau, snr_coherent, snr_single_opt, snr_qmfs })
    });
    rows.into_iter().collect()
}

/// One point of the integration-time-vs-squeezing comparison (`fig3b`).
#[derive(Clone, Copy, Debug)]
pub struct FidelityTimeRow {
    pub e2r: f64,
    /// kappa tau reaching the target with the QMFS scheme, lossless.
    pub tau_qmfs: f64,
    /// Same target with an unsqueezed drive boosted to the same intracavity
    /// photon number (`nbar0 -> nbar0 + 4 sinh^2 r`), lossless.
    pub tau_matched: f64,
    /// The two curves again at detection efficiency `lossy_eta`.
    pub tau_qmfs_lossy: f64,
    pub tau_matched_lossy: f64,
}

/// Integration time required to reach `target` fidelity as a function of
/// squeeze strength, for the QMFS scheme and its photon-matched unsqueezed
/// baseline, each at efficiency 1 and at `lossy_eta`.
pub fn fidelity_time_rows(
    config: &ValidatedConfig,
    e2r_grid: &[f64],
    target: f64,
    lossy_eta: f64,
) -> Result<Vec<FidelityTimeRow>, OptimizeError> {
    let rows: Vec<Result<FidelityTimeRow, OptimizeError>> = par_map(e2r_grid.to_vec(), |e2r| {
        let r = 0.5 * e2r.ln();
        let boosted = config.nbar0 + 4.0 * r.sinh().powi(2);
        let qmfs = config.with_squeeze(r, 0.0);
        let matched = config.with_squeeze(0.0, 0.0).with_nbar0(boosted);
        Ok(FidelityTimeRow {
            e2r,
            tau_qmfs: required_tau(&with_eta(&qmfs, 1.0), target)?,
            tau_matched: required_tau(&with_eta(&matched, 1.0), target)?,
            tau_qmfs_lossy: required_tau(&with_eta(&qmfs, lossy_eta), target)?,
            tau_matched_lossy: required_tau(&with_eta(&matched, lossy_eta), target)?,
        })
    });
    rows.into_iter().collect()
}

/// One point of the photon-budget comparison (`fig3c`).
#[derive(Clone, Copy, Debug)]
pub struct PhotonBudgetRow {
    pub kappa_tau: f64,
    /// Minimal intracavity photons with the squeezed scheme (drive/squeeze
    /// split optimized), lossless.
    pub n_bar_squeezed: f64,
    /// Minimal intracavity photons with an unsqueezed drive, lossless.
    pub n_bar_coherent: f64,
    /// The same two curves at detection efficiency `lossy_eta`.
    pub n_bar_squeezed_lossy: f64,
    pub n_bar_coherent_lossy: f64,
}

/// Minimal total intracavity photon number reaching `target` at each `tau`.
pub fn photon_budget_rows(
    config: &ValidatedConfig,
    taus: &[f64],
    target: f64,
    lossy_eta: f64,
) -> Result<Vec<PhotonBudgetRow>, OptimizeError> {
    let coherent = presets::coherent(1.0, 1.0).validate().expect("preset must validate");
    let rows: Vec<Result<PhotonBudgetRow, OptimizeError>> = par_map(taus.to_vec(), |tau| {
        Ok(PhotonBudgetRow {
            kappa_tau: tau,
            n_bar_squeezed: photons_for_fidelity(&with_eta(config, 1.0), tau, target)?.n_bar,
            n_bar_coherent: photons_for_fidelity(&with_eta(&coherent, 1.0), tau, target)?.n_bar,
            n_bar_squeezed_lossy: photons_for_fidelity(&with_eta(config, lossy_eta), tau, target)?
                .n_bar,
            n_bar_coherent_lossy: photons_for_fidelity(
                &with_eta(&coherent, lossy_eta),
                tau,
                target,
            )?
            .n_bar,
        })
    });
    rows.into_iter().collect()
}

/// One point of the asymmetry-robustness scan (`fig4a`). Each enhancement
/// is the squeezed SNR divided by the unsqueezed SNR of the *same* geometry
/// (same `dchi` and `dkappa`), so it isolates what squeezing buys on that
/// hardware; all three coincide at `e^r` for `dchi = 0`.
#[derive(Clone, Copy, Debug)]
pub struct AsymmetryRow {
    /// Dispersive-shift asymmetry, `dchi / chi_bar`.
    pub dchi_over_chi_bar: f64,
    /// Enhancement at `dkappa = 0`.
    pub enh_dkappa_zero: f64,
    /// Enhancement at the zero-frequency-matched `dkappa/kappa_bar =
    /// dchi/chi_bar` point.
    pub enh_matched: f64,
    /// Enhancement with `dkappa` numerically optimized.
    pub enh_optimal: f64,
    pub dkappa_opt_over_kappa_bar: f64,
}

/// Enhancement vs dispersive-shift asymmetry at fixed `kappa_tau` and
/// squeeze strength, with `chi_bar = kappa_bar/2`.
pub fn asymmetry_rows(
    dchi_fracs: &[f64],
    kappa_tau: f64,
    e2r: f64,
) -> Result<Vec<AsymmetryRow>, OptimizeError> {
    let (chi_bar, kappa_bar) = (0.5, 1.0);
    let r = 0.5 * e2r.ln();
    let enh_at = |dchi: f64, dkappa: f64| -> Result<f64, OptimizeError> {
        let squeezed = asymmetric_snr(dchi, chi_bar, kappa_bar, kappa_tau, r, dkappa)?;
        let unsqueezed = asymmetric_snr(dchi, chi_bar, kappa_bar, kappa_tau, 0.0, dkappa)?;
        Ok(squeezed / unsqueezed)
    };
    let rows: Vec<Result<AsymmetryRow, OptimizeError>> = par_map(dchi_fracs.to_vec(), |frac| {
        let dchi = frac * chi_bar;
        let opt = optimize_asymmetry(dchi, chi_bar, kappa_bar, kappa_tau, r)?;
        Ok(AsymmetryRow {
            dchi_over_chi_bar: frac,
            enh_dkappa_zero: enh_at(dchi, 0.0)?,
            enh_matched: enh_at(dchi, matched_dkappa(dchi, chi_bar, kappa_bar))?,
            enh_optimal: opt.enhancement,
            dkappa_opt_over_kappa_bar: opt.dkappa_opt / kappa_bar,
        })
    });
    rows.into_iter().collect()
}

/// One point of the dispersive-shift scan (`fig4b`); `None` marks grid
/// points where the dressed states could not be identified.
#[derive(Clone, Copy, Debug)]
pub struct DispersiveShiftRow {
    pub e_c: f64,
    pub chi_1: f64,
    pub chi_2: f64,
}

/// Dispersive shifts of both resonators over an `E_C` grid at the reference
/// two-resonator operating point; unresolvable points are dropped.
pub fn dispersive_shift_rows(e_c_grid: &[f64]) -> Vec<DispersiveShiftRow> {
    let spec = TransmonSpec::reference(0.3);
    transmon::chi_scan(&spec, e_c_grid)
        .into_iter()
        .filter_map(|(e_c, pair)| {
            pair.map(|(chi_1, chi_2)| DispersiveShiftRow { e_c, chi_1, chi_2 })
        })
        .collect()
}

/// The photon-split scan behind the `heisenberg` subcommand.
pub fn heisenberg_rows(n_total: f64, n_points: usize, kappa_tau: f64) -> HeisenbergScan {
    heisenberg_scan(n_total, n_points, kappa_tau)
}

/// Clone `config` with detection efficiency `eta`.
fn with_eta(config: &ValidatedConfig, eta: f64) -> ValidatedConfig {
    let mut raw = config.clone().into_config();
    raw.loss.eta = eta;
    raw.validate().expect("efficiency override must stay valid")
}

/// Re-export for the CLI's `optimize` subcommand summary.
pub use optimize::{AsymmetryOptimum, PhotonOptimum};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_sweep_orders_protocols() {
        let r = 0.5 * 100.0f64.ln();
        let cfg = presets::qmfs(100.0, 1.0, r).validate().unwrap();
        let rows = snr_sweep(&cfg, &[1.0, 5.0, 20.0], 100.0, 10).unwrap();
        for row in &rows {
            assert!(
                row.snr_qmfs > row.snr_single_opt && row.snr_single_opt >= row.snr_coherent,
                "ordering broken at tau {}: {row:?}",
                row.kappa_tau
            );
        }
        // exponential enhancement: QMFS ~ e^r * coherent at every tau
        for row in &rows {
            let ratio = row.snr_qmfs / row.snr_coherent;
            assert!((ratio - 10.0).abs() < 1e-6, "enhancement {ratio} at {}", row.kappa_tau);
        }
    }

    #[test]
    fn fidelity_time_rows_favor_squeezing_and_saturate_with_loss() {
        let cfg = presets::qmfs(100.0, 1.0, 0.0).validate().unwrap();
        let e2rs = [1.0, 4.0, 100.0];
        let rows = fidelity_time_rows(&cfg, &e2rs, 0.9999, 0.9).unwrap();
        assert!((rows[0].tau_qmfs - rows[0].tau_matched).abs() < 1e-5, "e2r=1 curves meet");
        for row in &rows[1..] {
            assert!(row.tau_qmfs < row.tau_matched, "squeezing must win: {row:?}");
            assert!(row.tau_qmfs_lossy > row.tau_qmfs, "loss must cost time: {row:?}");
        }
        // lossy curve flattens: large-e2r points nearly equal
        let flat = fidelity_time_rows(&cfg, &[1e4, 1e5], 0.9999, 0.9).unwrap();
        let rel = (flat[0].tau_qmfs_lossy - flat[1].tau_qmfs_lossy).abs()
            / flat[1].tau_qmfs_lossy;
        assert!(rel < 0.01, "lossy tau should saturate, rel change {rel}");
    }

    #[test]
    fn photon_budget_rows_favor_squeezing() {
        let cfg = presets::qmfs(1.0, 1.0, 0.0).validate().unwrap();
        let rows = photon_budget_rows(&cfg, &[2.0, 10.0], 0.9999, 0.9).unwrap();
        for row in &rows {
            assert!(row.n_bar_squeezed < row.n_bar_coherent, "{row:?}");
            assert!(row.n_bar_squeezed_lossy > row.n_bar_squeezed);
        }
        // the advantage is dramatic at short times, where the unsqueezed
        // drive budget explodes, and modest once one photon is enough
        assert!(
            rows[0].n_bar_squeezed < 0.2 * rows[0].n_bar_coherent,
            "short-time budget should collapse: {:?}",
            rows[0]
        );
    }

    #[test]
    fn asymmetry_rows_track_matched_curve() {
        let rows = asymmetry_rows(&[0.0, 0.2], 10.0, 100.0).unwrap();
        let sym = &rows[0];
        assert!((sym.enh_dkappa_zero - 10.0).abs() < 1e-6, "{sym:?}");
        let asym = &rows[1];
        assert!(asym.enh_dkappa_zero < asym.enh_matched, "{asym:?}");
        assert!(asym.enh_matched <= asym.enh_optimal + 1e-12, "{asym:?}");
        assert!(asym.enh_optimal < sym.enh_optimal, "asymmetry must cost SNR");
    }

    #[test]
    fn dispersive_rows_cover_grid() {
        let grid = crate::util::linspace(0.28, 0.36, 5);
        let rows = dispersive_shift_rows(&grid);
        assert!(rows.len() >= 4, "most points should resolve, got {}", rows.len());
    }
}
