//! Transmon-resonator diagonalization: dispersive shifts of one transmon
//! coupled to two readout resonators, including the straddling regime where
//! the two shifts take opposite signs.
//!
//! All energies are in frequency units (GHz, i.e. E/h). The transmon is the
//! standard charge-basis model `H = 4 E_C (n - n_g)^2 - E_J cos(phi)`; each
//! resonator is diagonalized jointly with the transmon (no three-body solve)
//! through the charge coupling `g n (a + a^dagger)`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::util::par_map;

#[derive(Debug, Error, PartialEq)]
pub enum TransmonError {
    #[error(
        "charge cutoff {cutoff} too small: level {level} moves by {shift:.3e} \
         when the basis grows by 5"
    )]
    CutoffTooSmall { cutoff: usize, level: usize, shift: f64 },
    #[error(
        "dressed-state identification ambiguous for bare (transmon {m}, {p} photon): \
         best overlap^2 = {overlap:.3}"
    )]
    StateIdentificationAmbiguous { m: usize, p: usize, overlap: f64 },
}

/// One readout resonator coupled to the transmon.
#[derive(Clone, Copy, Debug)]
pub struct ResonatorSpec {
    /// Bare resonator frequency (GHz).
    pub omega: f64,
    /// Charge-coupling strength (GHz).
    pub g: f64,
    /// Fock-space truncation for the joint diagonalization.
    pub photon_cutoff: usize,
}

/// Transmon + resonators, charge-basis description.
#[derive(Clone, Debug)]
pub struct TransmonSpec {
    /// Josephson energy (GHz).
    pub e_j: f64,
    /// Charging energy / anharmonicity scale (GHz).
    pub e_c: f64,
    /// Offset charge.
    pub n_g: f64,
    /// Charge basis spans `-charge_cutoff ..= +charge_cutoff`.
    pub charge_cutoff: usize,
    pub resonators: Vec<ResonatorSpec>,
}

/// Number of transmon eigenstates carried into the joint diagonalization.
const JOINT_TRANSMON_LEVELS: usize = 12;

/// Levels compared when testing cutoff convergence.
const STABLE_LEVELS: usize = 6;

const STABILITY_TOL: f64 = 1e-9;

impl TransmonSpec {
    /// The two-resonator operating point scanned in the dispersive-shift
    /// figure: `E_J = 25 GHz`, resonators at 7.6 / 7.9 GHz with couplings
    /// 8 / 15 MHz, default cutoffs (+-20 charge states, 5 photons).
    pub fn reference(e_c: f64) -> TransmonSpec {
        TransmonSpec {
            e_j: 25.0,
            e_c,
            n_g: 0.0,
            charge_cutoff: 20,
            resonators: vec![
                ResonatorSpec { omega: 7.6, g: 0.008, photon_cutoff: 5 },
                ResonatorSpec { omega: 7.9, g: 0.015, photon_cutoff: 5 },
            ],
        }
    }

    pub fn with_e_c(&self, e_c: f64) -> TransmonSpec {
        let mut s = self.clone();
        s.e_c = e_c;
        s
    }

    /// Qubit transition frequency `E_1 - E_0` (unchecked basis).
    fn e01(&self) -> f64 {
        let (levels, _) = transmon_eigen(self, self.charge_cutoff);
        levels[1] - levels[0]
    }

    /// Qubit-resonator detuning `Delta_j = (E_1 - E_0) - omega_j`.
    pub fn detuning(&self, resonator_index: usize) -> f64 {
        self.e01() - self.resonators[resonator_index].omega
    }
}

/// Charge-basis Hamiltonian: diagonal `4 E_C (n - n_g)^2`, off-diagonal
/// `-E_J/2` from `cos(phi)`.
fn charge_hamiltonian(spec: &TransmonSpec, cutoff: usize) -> DMatrix<f64> {
    let dim = 2 * cutoff + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let n = i as f64 - cutoff as f64;
        h[(i, i)] = 4.0 * spec.e_c * (n - spec.n_g) * (n - spec.n_g);
        if i + 1 < dim {
            h[(i, i + 1)] = -0.5 * spec.e_j;
            h[(i + 1, i)] = -0.5 * spec.e_j;
        }
    }
    h
}

/// Eigenvalues (ascending) and matching eigenvector columns.
fn sorted_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>(),
    );
    (vals, vecs)
}

fn transmon_eigen(spec: &TransmonSpec, cutoff: usize) -> (Vec<f64>, DMatrix<f64>) {
    sorted_eigen(&charge_hamiltonian(spec, cutoff))
}

/// Transmon eigenvalues, ascending, after verifying that the configured
/// charge cutoff has converged (growing the basis by 5 moves none of the
/// low-lying levels by more than one part in 1e9 of the local scale).
pub fn transmon_levels(spec: &TransmonSpec) -> Result<Vec<f64>, TransmonError> {
    let (levels, _) = transmon_eigen(spec, spec.charge_cutoff);
    let (check, _) = transmon_eigen(spec, spec.charge_cutoff + 5);
    let k = STABLE_LEVELS.min(levels.len());
    for i in 0..k {
        let shift = (levels[i] - check[i]).abs();
        if shift > STABILITY_TOL * (1.0 + levels[i].abs()) {
            return Err(TransmonError::CutoffTooSmall {
                cutoff: spec.charge_cutoff,
                level: i,
                shift,
            });
        }
    }
    Ok(levels)
}

/// Charge operator in the transmon eigenbasis, truncated to `mt` levels.
fn charge_in_eigenbasis(vecs: &DMatrix<f64>, cutoff: usize, mt: usize) -> DMatrix<f64> {
    let dim = 2 * cutoff + 1;
    DMatrix::from_fn(mt, mt, |a, b| {
        (0..dim)
            .map(|i| vecs[(i, a)] * (i as f64 - cutoff as f64) * vecs[(i, b)])
            .sum()
    })
}

/// Dispersive shift of resonator `j` from exact joint diagonalization:
///
/// `chi_j = [E(1,1) - E(1,0) - E(0,1) + E(0,0)] / 2`,
///
/// with dressed levels identified by maximum overlap with the bare
/// product states. This "two-photon difference" convention is one of
/// several in circulation; it is the one used consistently throughout this
/// crate, and it reduces to the perturbative pull in the weak-coupling
/// limit (see [`chi_perturbative`]).
pub fn dispersive_shift(spec: &TransmonSpec, resonator_index: usize) -> Result<f64, TransmonError> {
    transmon_levels(spec)?; // cutoff convergence gate
    let res = spec.resonators[resonator_index];
    let (levels, vecs) = transmon_eigen(spec, spec.charge_cutoff);
    let mt = JOINT_TRANSMON_LEVELS.min(levels.len());
    let np = res.photon_cutoff + 1;
    let nmat = charge_in_eigenbasis(&vecs, spec.charge_cutoff, mt);

    let dim = mt * np;
    let idx = |m: usize, p: usize| m * np + p;
    let mut h = DMatrix::zeros(dim, dim);
    for m in 0..mt {
        for p in 0..np {
            h[(idx(m, p), idx(m, p))] = levels[m] + res.omega * p as f64;
        }
    }
    for m in 0..mt {
        for k in 0..mt {
            let c = res.g * nmat[(m, k)];
            if c == 0.0 {
                continue;
            }
            for p in 0..np.saturating_sub(1) {
                // <p+1| a^dagger |p> = sqrt(p+1)
                let amp = c * ((p + 1) as f64).sqrt();
                h[(idx(m, p + 1), idx(k, p))] += amp;
                h[(idx(k, p), idx(m, p + 1))] += amp;
            }
        }
    }
    let (evals, evecs) = sorted_eigen(&h);

    let mut picked = [0usize; 4];
    let mut energy = [0.0f64; 4];
    for (slot, (m, p)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let bare = idx(m, p);
        let (mut best, mut best_ov) = (0, -1.0);
        for j in 0..dim {
            let ov = evecs[(bare, j)] * evecs[(bare, j)];
            if ov > best_ov {
                best_ov = ov;
                best = j;
            }
        }
        if best_ov < 0.5 || picked[..slot].contains(&best) {
            return Err(TransmonError::StateIdentificationAmbiguous { m, p, overlap: best_ov });
        }
        picked[slot] = best;
        energy[slot] = evals[best];
    }
    // slots: 0 = (0,0), 1 = (0,1), 2 = (1,0), 3 = (1,1)
    Ok(0.5 * (energy[3] - energy[2] - energy[1] + energy[0]))
}

/// Second-order (in `g`) dispersive shift with full transmon matrix
/// elements and both co- and counter-rotating contributions:
///
/// `chi_j = g^2 sum_k [ |n_1k|^2 D_1k/(D_1k^2 - w^2) - |n_0k|^2 D_0k/(D_0k^2 - w^2) ]`,
///
/// `D_mk = E_m - E_k`. In the deep dispersive transmon limit this collapses
/// to the familiar `-g^2 E_C / (Delta (Delta - E_C))` form.
pub fn chi_perturbative(spec: &TransmonSpec, resonator_index: usize) -> f64 {
    let res = spec.resonators[resonator_index];
    let (levels, vecs) = transmon_eigen(spec, spec.charge_cutoff);
    let mt = JOINT_TRANSMON_LEVELS.min(levels.len());
    let nmat = charge_in_eigenbasis(&vecs, spec.charge_cutoff, mt);
    let w = res.omega;
    let branch = |m: usize| -> f64 {
        (0..mt)
            .filter(|&k| k != m)
            .map(|k| {
                let d = levels[m] - levels[k];
                nmat[(m, k)] * nmat[(m, k)] * d / (d * d - w * w)
            })
            .sum()
    };
    res.g * res.g * (branch(1) - branch(0))
}

/// One `E_C` root of `chi_1 + chi_2 = 0` with its context.
#[derive(Clone, Copy, Debug)]
pub struct EcRoot {
    pub e_c: f64,
    pub chi_1: f64,
    pub chi_2: f64,
    /// Detunings `Delta_j = E_01 - omega_j` at the root.
    pub delta_1: f64,
    pub delta_2: f64,
    /// True when exactly one resonator sits in the straddling regime
    /// `Delta < E_C` while the other is dispersive (`Delta > E_C`).
    pub straddling_pair: bool,
}

/// Scan `E_C` over `[lo, hi]` (`n_scan` points) and bisect every bracket
/// where `chi_1 + chi_2` changes sign *smoothly* (both endpoint magnitudes
/// below `SUM_BRACKET_CAP`, which filters out jumps across avoided
/// crossings). Scan points where the dressed states cannot be identified
/// are skipped.
pub fn find_equal_opposite(
    spec: &TransmonSpec,
    lo: f64,
    hi: f64,
    n_scan: usize,
) -> Result<Vec<EcRoot>, TransmonError> {
    assert!(spec.resonators.len() == 2, "need exactly two resonators");
    let sum_at = |e_c: f64| -> Option<f64> {
        let s = spec.with_e_c(e_c);
        match (dispersive_shift(&s, 0), dispersive_shift(&s, 1)) {
            (Ok(a), Ok(b)) => Some(a + b),
            _ => None,
        }
    };
    let grid = crate::util::linspace(lo, hi, n_scan.max(2));
    let samples: Vec<Option<f64>> = par_map(grid.clone(), |e| sum_at(e));

    let mut roots = Vec::new();
    for w in 0..grid.len() - 1 {
        let (Some(a), Some(b)) = (samples[w], samples[w + 1]) else { continue };
        if a == 0.0 || a.signum() == b.signum() {
            continue;
        }
        if a.abs() > SUM_BRACKET_CAP || b.abs() > SUM_BRACKET_CAP {
            continue; // discontinuous flip across an avoided crossing
        }
        let (mut x0, mut x1, mut f0) = (grid[w], grid[w + 1], a);
        for _ in 0..50 {
            let mid = 0.5 * (x0 + x1);
            let Some(fm) = sum_at(mid) else { break };
            if fm == 0.0 || fm.signum() == f0.signum() {
                x0 = mid;
                f0 = fm;
            } else {
                x1 = mid;
            }
        }
        let e_c = 0.5 * (x0 + x1);
        let s = spec.with_e_c(e_c);
        // A bracket that refines into a degeneracy (dressed states no longer
        // identifiable) is an avoided-crossing artifact, not a smooth zero.
        let (Ok(chi_1), Ok(chi_2)) = (dispersive_shift(&s, 0), dispersive_shift(&s, 1)) else {
            continue;
        };
        let delta_1 = s.detuning(0);
        let delta_2 = s.detuning(1);
        roots.push(EcRoot {
            e_c,
            chi_1,
            chi_2,
            delta_1,
            delta_2,
            straddling_pair: (delta_1 < e_c) != (delta_2 < e_c),
        });
    }
    Ok(roots)
}

/// Brackets whose endpoint `|chi_1 + chi_2|` exceeds this are treated as
/// jumps (avoided crossings), not smooth zeros (GHz).
const SUM_BRACKET_CAP: f64 = 5e-3;

/// `(e_c, chi_1, chi_2)` samples over an `E_C` grid; points where the
/// dressed states cannot be identified are reported as `None`.
pub fn chi_scan(spec: &TransmonSpec, e_c_grid: &[f64]) -> Vec<(f64, Option<(f64, f64)>)> {
    par_map(e_c_grid.to_vec(), |e_c| {
        let s = spec.with_e_c(e_c);
        let pair = match (dispersive_shift(&s, 0), dispersive_shift(&s, 1)) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => None,
        };
        (e_c, pair)
    })
}
