//! Linear quadrature dynamics conditioned on a qubit eigenstate.
//!
//! The measured record enters as an extra state coordinate: the accumulator
//! `M(tau) = sqrt(kappa_m) * int_0^tau Y_out dt`, so one Lyapunov pass yields
//! both the signal (mean of M) and the noise (variance of M), including the
//! cross-diffusion between the cavity rows and the accumulator row that a
//! naive two-time-correlation integral would have to build by hand.
//!
//! State layouts (labels carried on the system):
//! - single cavity, broadband: `(X, Y, M)`
//! - single cavity, filtered:  `(Xf, Yf, X, Y, M)`
//! - two cavities, broadband:  `(X1, Y1, X2, Y2, M)`
//! - two cavities, filtered:   `(Xf1, Yf1, Xf2, Yf2, X1, Y1, X2, Y2, M)`
//!
//! Conventions: `a = (X + iY)/2`, vacuum white-noise correlator
//! `<X_in(t) X_in(t')> = delta(t - t')`, input-output `a_out = sqrt(k) a - a_in`.
//! The coherent drive turns on as a step at `t = 0`; squeezing is active from
//! `t0 <= 0` (sentinel `None` = presqueezed limit, i.e. squeezed steady state
//! at `t = 0`).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg;
use crate::model::{Protocol, QubitState, ValidatedConfig};
use crate::source;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("drift is singular on the physical block; steady state undefined (zero decay rate?)")]
    SingularDrift,
    #[error("integration step h = {h:.3e} rejected (bound {bound:.3e}): {detail}")]
    StepSizeRejected { h: f64, bound: f64, detail: String },
}

/// Piecewise-constant white-noise covariance of the input quadratures:
/// `vacuum` before the squeeze turn-on, `squeezed` afterwards.
#[derive(Clone, Debug)]
pub struct DiffusionSchedule {
    pub vacuum: DMatrix<f64>,
    pub squeezed: DMatrix<f64>,
}

/// Drift/coupling description of one conditioned linear system.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    /// Drift matrix A over the full state (physical coordinates + M).
    pub drift: DMatrix<f64>,
    /// Input coupling B: state-derivative contribution of the white inputs.
    pub input_coupling: DMatrix<f64>,
    pub diffusion: DiffusionSchedule,
    /// Deterministic inhomogeneity, active for t >= 0.
    pub drive_vector: DVector<f64>,
    /// Index of the accumulator coordinate M (always the last).
    pub accumulator_index: usize,
    /// `(X, Y)` index pairs of the measurement cavities.
    pub cavity_pairs: Vec<(usize, usize)>,
    /// Output-port relation `x_out = output_state * x + output_input * x_in`,
    /// rows ordered as the local cavity quadratures (X1, Y1[, X2, Y2]).
    pub output_state: DMatrix<f64>,
    pub output_input: DMatrix<f64>,
    /// Weights combining output rows into the measured quadrature
    /// (Y for one cavity, (Y1 + Y2)/sqrt(2) for two).
    pub measured_weights: DVector<f64>,
    /// Rate normalizing the accumulator, `M = sqrt(kappa_m) int y_meas dt`.
    pub kappa_m: f64,
    /// Squeeze turn-on from the config; `None` = presqueezed.
    pub t0: Option<f64>,
    pub labels: Vec<&'static str>,
    /// Infinity-norm bound on the drift; step sizes are chosen against it.
    pub max_rate: f64,
}

/// Mean vector and covariance matrix of the full state at one time.
#[derive(Clone, Debug)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub time: f64,
}

impl GaussianState {
    /// Mean of the accumulator (the signal M_S at this time).
    pub fn signal(&self, system: &LinearSystem) -> f64 {
        self.mean[system.accumulator_index]
    }

    /// Variance of the accumulator (the noise <M_N^2> at this time).
    pub fn noise(&self, system: &LinearSystem) -> f64 {
        let m = system.accumulator_index;
        self.covariance[(m, m)]
    }
}

/// Output rotation angle `phi_qb = 2 atan(2 chi / kappa)` (re-exported from
/// the model for discoverability next to the dynamics it describes).
pub use crate::model::qubit_rotation_angle;

/// Build the conditioned linear system for one qubit eigenstate.
pub fn build_system(config: &ValidatedConfig, qubit_state: QubitState) -> LinearSystem {
    let sz = qubit_state.sigma_z();
    let n_cav = config.cavities.len();
    let noise = source::input_noise_model(config);
    let filtered = noise.filter_block.is_some();
    let n_filter = if filtered { 2 * n_cav } else { 0 };
    let n = n_filter + 2 * n_cav + 1;
    let m_idx = n - 1;
    // input columns: the source/port inputs, plus fresh vacuum ports when an
    // input-side beamsplitter sits between a filtered source and the cavities
    let lossy_cascade = filtered && noise.port_efficiency < 1.0;
    let n_in = if lossy_cascade { 4 * n_cav } else { 2 * n_cav };
    let eta_port = noise.port_efficiency;

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n_in);
    let mut out_state = DMatrix::<f64>::zeros(2 * n_cav, n);
    let mut out_input = DMatrix::<f64>::zeros(2 * n_cav, n_in);

    // filter block (pump + passive decay), driven by its own vacuum inputs
    if let Some(fb) = &noise.filter_block {
        for j in 0..n_cav {
            let (x, y) = (2 * j, 2 * j + 1);
            a[(x, x)] = -0.5 * fb.gamma_f;
            a[(y, y)] = -0.5 * fb.gamma_f;
            b[(x, x)] = fb.gamma_f.sqrt();
            b[(y, y)] = fb.gamma_f.sqrt();
        }
        match n_cav {
            1 => {
                // degenerate filter: antisqueezed axis at theta
                let (c2, s2) = ((2.0 * fb.theta).cos(), (2.0 * fb.theta).sin());
                a[(0, 0)] += fb.lambda * c2;
                a[(0, 1)] += fb.lambda * s2;
                a[(1, 0)] += fb.lambda * s2;
                a[(1, 1)] -= fb.lambda * c2;
            }
            _ => {
                // nondegenerate pair squeezing (X1-X2, Y1+Y2)
                a[(0, 2)] = fb.lambda;
                a[(2, 0)] = fb.lambda;
                a[(1, 3)] = -fb.lambda;
                a[(3, 1)] = -fb.lambda;
            }
        }
    }

    // cavity blocks, their input/output ports, and the port fields' noise
    for (j, cav) in config.cavities.iter().enumerate() {
        let (x, y) = (n_filter + 2 * j, n_filter + 2 * j + 1);
        let (k, chi) = (cav.kappa_rate, cav.chi_rate);
        a[(x, x)] = -0.5 * k;
        a[(y, y)] = -0.5 * k;
        a[(x, y)] = chi * sz;
        a[(y, x)] = -chi * sz;
        out_state[(2 * j, x)] = k.sqrt();
        out_state[(2 * j + 1, y)] = k.sqrt();
        if filtered {
            // port field = sqrt(eta)(sqrt(Gf) b - b_in) + sqrt(1-eta) v
            let gf = noise.filter_block.as_ref().unwrap().gamma_f;
            let (fx, fy) = (2 * j, 2 * j + 1);
            a[(x, fx)] = (eta_port * k * gf).sqrt();
            a[(y, fy)] = (eta_port * k * gf).sqrt();
            b[(x, 2 * j)] -= (eta_port * k).sqrt();
            b[(y, 2 * j + 1)] -= (eta_port * k).sqrt();
            out_state[(2 * j, fx)] = -(eta_port * gf).sqrt();
            out_state[(2 * j + 1, fy)] = -(eta_port * gf).sqrt();
            out_input[(2 * j, 2 * j)] = eta_port.sqrt();
            out_input[(2 * j + 1, 2 * j + 1)] = eta_port.sqrt();
            if lossy_cascade {
                let (vx, vy) = (2 * n_cav + 2 * j, 2 * n_cav + 2 * j + 1);
                b[(x, vx)] = ((1.0 - eta_port) * k).sqrt();
                b[(y, vy)] = ((1.0 - eta_port) * k).sqrt();
                out_input[(2 * j, vx)] = -(1.0 - eta_port).sqrt();
                out_input[(2 * j + 1, vy)] = -(1.0 - eta_port).sqrt();
            }
        } else {
            // white port: input-side loss is already folded into the
            // squeezed covariance, so the coupling itself is lossless
            b[(x, 2 * j)] = k.sqrt();
            b[(y, 2 * j + 1)] = k.sqrt();
            out_input[(2 * j, 2 * j)] = -1.0;
            out_input[(2 * j + 1, 2 * j + 1)] = -1.0;
        }
    }

    // measured quadrature and accumulator row
    let mut w = DVector::<f64>::zeros(2 * n_cav);
    if n_cav == 1 {
        w[1] = 1.0;
    } else {
        w[1] = std::f64::consts::FRAC_1_SQRT_2;
        w[3] = std::f64::consts::FRAC_1_SQRT_2;
    }
    let kappa_m = config.kappa_m;
    let srk = kappa_m.sqrt();
    for col in 0..n {
        a[(m_idx, col)] = srk * (0..2 * n_cav).map(|r| w[r] * out_state[(r, col)]).sum::<f64>();
    }
    for col in 0..n_in {
        b[(m_idx, col)] = srk * (0..2 * n_cav).map(|r| w[r] * out_input[(r, col)]).sum::<f64>();
    }

    // step drive: displacement along X (single cavity) or X_- (two cavities)
    let mut drive = DVector::<f64>::zeros(n);
    if config.nbar0 > 0.0 {
        match config.protocol {
            Protocol::Coherent | Protocol::SingleModeSqueezed => {
                let k = config.cavities[0].kappa_rate;
                // incident flux nbar0*k/4 => <X_in> = sqrt(nbar0*k)
                drive[n_filter] = k.sqrt() * (config.nbar0 * k).sqrt();
            }
            Protocol::TwoModeQMFS => {
                // per-cavity flux nbar0*kbar/8 => <X_in,j> = +-sqrt(nbar0*kbar/2)
                let x0 = (0.5 * config.nbar0 * config.kappa_bar).sqrt();
                drive[n_filter] = config.cavities[0].kappa_rate.sqrt() * x0;
                drive[n_filter + 2] = -config.cavities[1].kappa_rate.sqrt() * x0;
            }
        }
    }

    // white-noise covariances: squeezing lives either in the white input
    // (broadband) or in the filter pump (S stays vacuum)
    let mut squeezed = DMatrix::<f64>::identity(n_in, n_in);
    if !filtered {
        squeezed
            .view_mut((0, 0), (2 * n_cav, 2 * n_cav))
            .copy_from(&noise.covariance_of_white_inputs);
    }
    let diffusion = DiffusionSchedule {
        vacuum: DMatrix::identity(n_in, n_in),
        squeezed,
    };

    let labels: Vec<&'static str> = match (n_cav, filtered) {
        (1, false) => vec!["X", "Y", "M"],
        (1, true) => vec!["Xf", "Yf", "X", "Y", "M"],
        (2, false) => vec!["X1", "Y1", "X2", "Y2", "M"],
        _ => vec!["Xf1", "Yf1", "Xf2", "Yf2", "X1", "Y1", "X2", "Y2", "M"],
    };
    let max_rate = inf_norm(&a).max(1e-12);
    let cavity_pairs = (0..n_cav)
        .map(|j| (n_filter + 2 * j, n_filter + 2 * j + 1))
        .collect();

    LinearSystem {
        drift: a,
        input_coupling: b,
        diffusion,
        drive_vector: drive,
        accumulator_index: m_idx,
        cavity_pairs,
        output_state: out_state,
        output_input: out_input,
        measured_weights: w,
        kappa_m,
        t0: noise.active_from,
        labels,
        max_rate,
    }
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl LinearSystem {
    /// Diffusion matrix `D = B S B^T` for the given schedule segment.
    pub fn diffusion_matrix(&self, squeezed: bool) -> DMatrix<f64> {
        let s = if squeezed {
            &self.diffusion.squeezed
        } else {
            &self.diffusion.vacuum
        };
        linalg::symmetrize(&(&self.input_coupling * s * self.input_coupling.transpose()))
    }

    /// Drift/coupling with the accumulator rows zeroed (used before t = 0,
    /// when the record is not yet being integrated).
    pub(crate) fn frozen_accumulator(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut a = self.drift.clone();
        let mut b = self.input_coupling.clone();
        for c in 0..a.ncols() {
            a[(self.accumulator_index, c)] = 0.0;
        }
        for c in 0..b.ncols() {
            b[(self.accumulator_index, c)] = 0.0;
        }
        (a, b)
    }

    /// Indices of the physical (non-accumulator) coordinates.
    pub(crate) fn physical(&self) -> Vec<usize> {
        (0..self.drift.nrows()).filter(|&i| i != self.accumulator_index).collect()
    }

    /// Squeezed steady-state covariance of the physical block, padded with a
    /// zero accumulator row/column (the presqueezed initial condition).
    pub fn presqueezed_covariance(&self) -> DMatrix<f64> {
        let phys = self.physical();
        let np = phys.len();
        let d_full = self.diffusion_matrix(true);
        let a_c = self.drift.select_rows(phys.iter()).select_columns(phys.iter());
        let d_c = d_full.select_rows(phys.iter()).select_columns(phys.iter());
        let c_c = linalg::lyapunov_steady(&a_c, &d_c);
        let mut c = DMatrix::<f64>::zeros(self.drift.nrows(), self.drift.nrows());
        for (ia, &ra) in phys.iter().enumerate().take(np) {
            for (ib, &rb) in phys.iter().enumerate() {
                c[(ra, rb)] = c_c[(ia, ib)];
            }
        }
        c
    }
}

/// Closed-form mean at time `t >= 0` (zero before the drive turns on).
///
/// Uses the augmented matrix exponential, which is well-conditioned because
/// every block decays; no stepping is needed. `SingularDrift` flags the
/// zero-decay edge case where the transient never settles.
pub fn evolve_mean(system: &LinearSystem, t: f64) -> Result<DVector<f64>, DynamicsError> {
    let n = system.drift.nrows();
    if t <= 0.0 {
        return Ok(DVector::zeros(n));
    }
    for &i in system.physical().iter() {
        if system.drift[(i, i)] == 0.0 {
            return Err(DynamicsError::SingularDrift);
        }
    }
    Ok(linalg::mean_step(
        &system.drift,
        &system.drive_vector,
        &DVector::zeros(n),
        t,
    ))
}

/// Stationary mean of the physical coordinates, `-A^{-1} b` on the
/// non-accumulator block, padded with a zero at the accumulator index (the
/// accumulator has no stationary mean; its stationary growth rate is
/// `A[m,:] . steady_mean`).
pub fn steady_mean(system: &LinearSystem) -> Result<DVector<f64>, DynamicsError> {
    let phys = system.physical();
    let a_c = system.drift.select_rows(phys.iter()).select_columns(phys.iter());
    let b_c = DVector::from_iterator(phys.len(), phys.iter().map(|&i| system.drive_vector[i]));
    let sol = a_c.lu().solve(&(-b_c)).ok_or(DynamicsError::SingularDrift)?;
    let mut m = DVector::zeros(system.drift.nrows());
    for (i, &row) in phys.iter().enumerate() {
        m[row] = sol[i];
    }
    Ok(m)
}

/// Stationary growth rate of the accumulator mean, `d<M>/dt` at late times.
pub fn steady_signal_rate(system: &LinearSystem) -> Result<f64, DynamicsError> {
    let m = steady_mean(system)?;
    let i = system.accumulator_index;
    Ok(system.drift.row(i).transpose().dot(&m) + system.drive_vector[i])
}

/// Integration method for [`propagate_covariance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrator {
    /// Exact piecewise matrix-exponential propagation (default). Steps are
    /// capped at `0.5 / max_rate` purely to keep the Van Loan block
    /// exponential well-conditioned; each step is exact.
    MatrixExp,
    /// Fixed-step 4th-order Runge-Kutta with a per-step Richardson check;
    /// provided as an independent cross-validation path.
    Rk4 { h: f64 },
}

/// Propagate mean and covariance from the squeeze turn-on to `tau`,
/// recording the state after every internal step.
///
/// `t0 = None` is the presqueezed sentinel: the physical block starts at
/// `t = 0` in the squeezed steady state. With finite `t0 < 0` the physical
/// block starts in vacuum at `t0` and the squeezing acts on `[t0, 0]` before
/// the drive and the record start at `t = 0`.
///
/// Requires `t0 <= 0 <= tau` (panics otherwise: caller bug, the config
/// validator enforces it for user input).
pub fn propagate_covariance(
    system: &LinearSystem,
    t0: Option<f64>,
    tau: f64,
    method: Integrator,
) -> Result<Vec<GaussianState>, DynamicsError> {
    assert!(tau >= 0.0, "propagate_covariance needs tau >= 0");
    let n = system.drift.nrows();
    let mut states: Vec<GaussianState> = Vec::new();

    // initial condition + optional pre-measurement segment
    let (mut cov, t_start) = match t0 {
        None => (system.presqueezed_covariance(), 0.0),
        Some(t0) => {
            assert!(t0 <= 0.0, "squeeze turn-on must satisfy t0 <= 0");
            let mut c = DMatrix::<f64>::identity(n, n);
            let m = system.accumulator_index;
            c[(m, m)] = 0.0;
            (c, t0)
        }
    };
    let mut mean = DVector::<f64>::zeros(n);
    states.push(GaussianState {
        mean: mean.clone(),
        covariance: cov.clone(),
        time: t_start,
    });

    if t_start < 0.0 {
        // squeezing on, drive off, record frozen
        let (a, b) = system.frozen_accumulator();
        let s = &system.diffusion.squeezed;
        let d = linalg::symmetrize(&(&b * s * b.transpose()));
        let zero_drive = DVector::zeros(n);
        step_segment(
            &a, &d, &zero_drive, &mut cov, &mut mean, t_start, 0.0, system.max_rate, method,
            &mut states,
        )?;
    }
    if tau > 0.0 {
        let d = system.diffusion_matrix(true);
        step_segment(
            &system.drift,
            &d,
            &system.drive_vector,
            &mut cov,
            &mut mean,
            0.0,
            tau,
            system.max_rate,
            method,
            &mut states,
        )?;
    }
    Ok(states)
}

/// Final state only (most callers want just the endpoint).
pub fn propagate_to(
    system: &LinearSystem,
    t0: Option<f64>,
    tau: f64,
    method: Integrator,
) -> Result<GaussianState, DynamicsError> {
    Ok(propagate_covariance(system, t0, tau, method)?
        .pop()
        .expect("trajectory always contains the initial state"))
}

#[allow(clippy::too_many_arguments)]
fn step_segment(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    drive: &DVector<f64>,
    cov: &mut DMatrix<f64>,
    mean: &mut DVector<f64>,
    t_from: f64,
    t_to: f64,
    max_rate: f64,
    method: Integrator,
    states: &mut Vec<GaussianState>,
) -> Result<(), DynamicsError> {
    let len = t_to - t_from;
    if len <= 0.0 {
        return Ok(());
    }
    match method {
        Integrator::MatrixExp => {
            let h_max = 0.5 / max_rate;
            let n_steps = (len / h_max).ceil().max(1.0) as usize;
            let h = len / n_steps as f64;
            let (f, g) = linalg::van_loan_factors(a, d, h);
            let (fm, gm) = linalg::mean_factors(a, drive, h);
            debug_assert!((&f - &fm).amax() < 1e-12 * (1.0 + f.amax()));
            for k in 1..=n_steps {
                *cov = linalg::symmetrize(&(&f * &*cov * f.transpose() + &g));
                *mean = &fm * &*mean + &gm;
                states.push(GaussianState {
                    mean: mean.clone(),
                    covariance: cov.clone(),
                    time: t_from + h * k as f64,
                });
            }
            Ok(())
        }
        Integrator::Rk4 { h } => {
            let bound = 1.0 / (50.0 * max_rate);
            if h > bound {
                return Err(DynamicsError::StepSizeRejected {
                    h,
                    bound,
                    detail: "step exceeds the fixed-step stability budget".into(),
                });
            }
            let n_steps = (len / h).ceil().max(1.0) as usize;
            let hh = len / n_steps as f64;
            for k in 1..=n_steps {
                let (c1, m1) = rk4_step(a, d, drive, cov, mean, hh);
                // Richardson check: two half steps vs one full step
                let (ch, mh) = rk4_step(a, d, drive, cov, mean, 0.5 * hh);
                let (c2, m2) = rk4_step(a, d, drive, &ch, &mh, 0.5 * hh);
                let scale = 1.0 + c2.amax().max(m2.amax());
                let err = (&c1 - &c2).amax().max((&m1 - &m2).amax());
                if err > 1e-6 * scale {
                    return Err(DynamicsError::StepSizeRejected {
                        h: hh,
                        bound,
                        detail: format!("Richardson defect {err:.3e} exceeds tolerance"),
                    });
                }
                *cov = c2;
                *mean = m2;
                states.push(GaussianState {
                    mean: mean.clone(),
                    covariance: cov.clone(),
                    time: t_from + hh * k as f64,
                });
            }
            Ok(())
        }
    }
}

fn rk4_step(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    drive: &DVector<f64>,
    c0: &DMatrix<f64>,
    m0: &DVector<f64>,
    h: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let fc = |c: &DMatrix<f64>| a * c + c * a.transpose() + d;
    let fm = |m: &DVector<f64>| a * m + drive;
    let k1c = fc(c0);
    let k1m = fm(m0);
    let k2c = fc(&(c0 + &k1c * (0.5 * h)));
    let k2m = fm(&(m0 + &k1m * (0.5 * h)));
    let k3c = fc(&(c0 + &k2c * (0.5 * h)));
    let k3m = fm(&(m0 + &k2m * (0.5 * h)));
    let k4c = fc(&(c0 + &k3c * h));
    let k4m = fm(&(m0 + &k3m * h));
    let c = c0 + (k1c + k2c * 2.0 + k3c * 2.0 + k4c) * (h / 6.0);
    let m = m0 + (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
    (linalg::symmetrize(&c), m)
}

/// Zero-frequency transfer matrix of the measurement chain, with labels.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    /// Rows = output quadratures, columns = input quadratures.
    pub matrix: DMatrix<f64>,
    pub output_labels: Vec<&'static str>,
    pub input_labels: Vec<&'static str>,
}

/// Zero-frequency transfer from the input quadratures to the output-port
/// quadratures, `T(0) = D - C A^{-1} B` on the physical block.
///
/// For a two-cavity system both sides are rotated to the joint basis
/// `(X-, Y+, X+, Y-)`, so the entry `(Y+ row, X+/Y- column)` is the
/// antisqueezed-to-measured leakage that the matched-asymmetry condition
/// cancels. Single-cavity systems are returned in the local `(X, Y)` basis.
pub fn output_zero_frequency_transfer(system: &LinearSystem) -> TransferMatrix {
    let phys = system.physical();
    let a_c = system.drift.select_rows(phys.iter()).select_columns(phys.iter());
    let b_c = system.input_coupling.select_rows(phys.iter());
    let c_out = system.output_state.select_columns(phys.iter());
    let x = a_c
        .lu()
        .solve(&b_c)
        .expect("physical drift block is Hurwitz, hence invertible");
    let t_local = &system.output_input - &c_out * x;
    let n_out = t_local.nrows();
    if n_out == 2 {
        return TransferMatrix {
            matrix: t_local,
            output_labels: vec!["X_out", "Y_out"],
            input_labels: vec!["X_in", "Y_in"],
        };
    }
    let p = plus_minus_rotation();
    let n_in = t_local.ncols();
    let mut p_in = DMatrix::<f64>::identity(n_in, n_in);
    p_in.view_mut((0, 0), (4, 4)).copy_from(&p);
    let t = &p * t_local * p_in.transpose();
    let mut input_labels = vec!["X-_in", "Y+_in", "X+_in", "Y-_in"];
    for _ in 4..n_in {
        input_labels.push("vac_in");
    }
    TransferMatrix {
        matrix: t,
        output_labels: vec!["X-_out", "Y+_out", "X+_out", "Y-_out"],
        input_labels,
    }
}

/// Largest antisqueezed-to-measured magnitude `|T(Y+ <- {X+, Y-})|`.
pub fn antisqueezed_to_measured(t: &TransferMatrix) -> f64 {
    assert!(t.matrix.nrows() == 4, "joint-basis transfer needs two cavities");
    t.matrix[(1, 2)].abs().max(t.matrix[(1, 3)].abs())
}

/// Orthogonal rotation taking local `(X1, Y1, X2, Y2)` to `(X-, Y+, X+, Y-)`.
pub fn plus_minus_rotation() -> DMatrix<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            s, 0.0, -s, 0.0, //
            0.0, s, 0.0, s, //
            s, 0.0, s, 0.0, //
            0.0, s, 0.0, -s,
        ],
    )
}

/// Embed the four-coordinate rotation at `offset` into an identity of size
/// `n` (accumulator and filter coordinates pass through unchanged).
pub fn embedded_plus_minus(n: usize, offset: usize) -> DMatrix<f64> {
    let mut p = DMatrix::<f64>::identity(n, n);
    p.view_mut((offset, offset), (4, 4)).copy_from(&plus_minus_rotation());
    p
}

/// Conjugate a system by an orthogonal state transform `P` (`x' = P x`).
/// Cavity-pair bookkeeping is dropped since the new coordinates need not be
/// local mode quadratures; intended for basis-equivalence checks.
pub fn apply_state_transform(system: &LinearSystem, p: &DMatrix<f64>) -> LinearSystem {
    let mut s = system.clone();
    s.drift = p * &system.drift * p.transpose();
    s.input_coupling = p * &system.input_coupling;
    s.drive_vector = p * &system.drive_vector;
    s.output_state = &system.output_state * p.transpose();
    s.cavity_pairs.clear();
    s.max_rate = inf_norm(&s.drift).max(1e-12);
    s
}

/// Validity check used by the invariant suites: covariance PSD within `tol`
/// and every cavity pair obeying `det >= 1 - tol`.
pub fn covariance_is_physical(system: &LinearSystem, state: &GaussianState, tol: f64) -> bool {
    let eig = state.covariance.clone().symmetric_eigen().eigenvalues;
    if eig.iter().any(|&e| e < -tol) {
        return false;
    }
    for &(x, y) in &system.cavity_pairs {
        let det = state.covariance[(x, x)] * state.covariance[(y, y)]
            - state.covariance[(x, y)] * state.covariance[(y, x)];
        if det < 1.0 - tol {
            return false;
        }
    }
    true
}
