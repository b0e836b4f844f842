//! Trajectory sampler: an oracle for the covariance engine.
//!
//! Every statistic the engine computes in closed form is re-estimated here by
//! sampling measurement records `M` as realizations of the same linear SDE.
//! Because the dynamics are linear with additive Gaussian noise, the sampled
//! records are exactly Gaussian and the comparison is moment-for-moment.
//!
//! Two discretizations are provided: Euler-Maruyama (the workhorse) and the
//! exact discrete-time Gaussian transition built from the same Van Loan
//! factors the engine uses (exact in law at any step size, kept as a second
//! validation path).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dynamics;
use crate::linalg;
use crate::model::{LossPlacement, QubitState, ValidatedConfig};
use crate::readout::MeasurementStats;
use crate::util::par_map;

#[derive(Debug, Error, PartialEq)]
pub enum MonteCarloError {
    #[error("dt = {dt:.3e} exceeds the stability/accuracy bound {bound:.3e} = 1/(50 max_rate)")]
    StepTooCoarse { dt: f64, bound: f64 },
}

/// Discretization scheme for the record sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// First-order stepping `x += (A x + b) dt + L dW`. Weak error O(dt).
    EulerMaruyama,
    /// Exact one-step Gaussian transition `x -> F x + g + L_G z` with
    /// `F = exp(A h)` and `G` the step's integrated diffusion. Exact in law.
    ExactTransition,
}

/// Sampled measurement records for both qubit states.
#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Final-time records M, one per trajectory, conditioned on ground.
    pub records_ground: Vec<f64>,
    /// Final-time records M, one per trajectory, conditioned on excited.
    pub records_excited: Vec<f64>,
    /// `kappa_m * tau`, the vacuum record variance (used as the loss mix-in
    /// level and reported through [`MeasurementStats`]).
    pub kappa_m_tau: f64,
}

impl TrajectoryEnsemble {
    /// Rows for a record dump: `(traj_id, qubit_state, M)`, ground block
    /// first, in trajectory order.
    pub fn records(&self) -> impl Iterator<Item = (usize, &'static str, f64)> + '_ {
        let g = self.records_ground.iter().enumerate().map(|(i, &m)| (i, "ground", m));
        let e = self.records_excited.iter().enumerate().map(|(i, &m)| (i, "excited", m));
        g.chain(e)
    }
}

/// Largest admissible step for this config, `1/(50 max_rate)`.
pub fn max_stable_dt(config: &ValidatedConfig) -> f64 {
    let rate = QubitState::BOTH
        .iter()
        .map(|&s| dynamics::build_system(config, s).max_rate)
        .fold(0.0, f64::max);
    1.0 / (50.0 * rate)
}

/// Sample `n_traj` records per qubit state with Euler-Maruyama stepping.
pub fn sample_records(
    config: &ValidatedConfig,
    n_traj: usize,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryEnsemble, MonteCarloError> {
    sample_records_with(config, n_traj, dt, seed, Scheme::EulerMaruyama)
}

/// Sample with an explicit scheme choice.
///
/// Reproducibility contract: trajectory `i` for qubit state `s` consumes the
/// ChaCha8 stream `2 i + s` of `seed` and nothing else, so results are
/// independent of thread count and work partitioning, and the first `k`
/// trajectories of any run agree with a run of size `k`.
pub fn sample_records_with(
    config: &ValidatedConfig,
    n_traj: usize,
    dt: f64,
    seed: u64,
    scheme: Scheme,
) -> Result<TrajectoryEnsemble, MonteCarloError> {
    assert!(n_traj >= 2, "need at least two trajectories per state");
    let plans: Vec<StepPlan> = QubitState::BOTH
        .iter()
        .map(|&s| StepPlan::build(config, s, dt, scheme))
        .collect::<Result<_, _>>()?;
    let eta = config.loss.eta;
    let detection = config.loss.placement == LossPlacement::Detection && eta < 1.0;
    let kappa_m_tau = config.kappa_m * config.tau;
    let vac_sd = ((1.0 - eta) * kappa_m_tau).sqrt();

    let pairs = par_map((0..n_traj).collect(), |i| {
        let mut out = [0.0; 2];
        for (s, plan) in plans.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * i as u64 + s as u64);
            let mut m = plan.run(&mut rng);
            if detection {
                let z: f64 = rng.sample(StandardNormal);
                m = eta.sqrt() * m + vac_sd * z;
            }
            out[s] = m;
        }
        (out[0], out[1])
    });
    let (records_ground, records_excited) = pairs.into_iter().unzip();
    Ok(TrajectoryEnsemble {
        n_traj,
        dt,
        seed,
        scheme,
        records_ground,
        records_excited,
        kappa_m_tau,
    })
}

/// Precomputed per-state stepping data (built once, shared by trajectories).
struct StepPlan {
    init: InitPlan,
    pre: Option<Segment>,
    main: Segment,
    n: usize,
    m_idx: usize,
}

enum InitPlan {
    /// Presqueezed sentinel: physical block sampled from its squeezed steady
    /// covariance, `x0 = L z` with `L L^T` that covariance (M component 0).
    Steady(DMatrix<f64>),
    /// Finite turn-on: independent vacuum quadratures at `t0`, zero M.
    Vacuum,
}

struct Segment {
    n_steps: usize,
    h: f64,
    kind: SegmentKind,
}

enum SegmentKind {
    /// `x += (a x + b) h + sqrt(h) l z`
    Euler {
        a: DMatrix<f64>,
        b: DVector<f64>,
        l: DMatrix<f64>,
    },
    /// `x = f x + g + l z`
    Exact {
        f: DMatrix<f64>,
        g: DVector<f64>,
        l: DMatrix<f64>,
    },
}

impl StepPlan {
    fn build(
        config: &ValidatedConfig,
        state: QubitState,
        dt: f64,
        scheme: Scheme,
    ) -> Result<StepPlan, MonteCarloError> {
        let sys = dynamics::build_system(config, state);
        let bound = 1.0 / (50.0 * sys.max_rate);
        if dt > bound * (1.0 + 1e-12) {
            return Err(MonteCarloError::StepTooCoarse { dt, bound });
        }
        let n = sys.drift.nrows();
        let d_main = sys.diffusion_matrix(true);
        let main = Segment::build(&sys.drift, &d_main, &sys.drive_vector, config.tau, dt, scheme);
        let (init, pre) = match sys.t0 {
            None => (InitPlan::Steady(linalg::psd_factor(&sys.presqueezed_covariance())), None),
            Some(t0) if t0 < 0.0 => {
                let (a_f, b_f) = sys.frozen_accumulator();
                let d_pre = linalg::symmetrize(&(&b_f * &sys.diffusion.squeezed * b_f.transpose()));
                let zero = DVector::zeros(n);
                (InitPlan::Vacuum, Some(Segment::build(&a_f, &d_pre, &zero, -t0, dt, scheme)))
            }
            Some(_) => (InitPlan::Vacuum, None),
        };
        Ok(StepPlan { init, pre, main, n, m_idx: sys.accumulator_index })
    }

    fn run(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut x = match &self.init {
            InitPlan::Steady(l) => l * &normals(rng, self.n),
            InitPlan::Vacuum => {
                let mut v = normals(rng, self.n);
                v[self.m_idx] = 0.0;
                v
            }
        };
        if let Some(pre) = &self.pre {
            pre.run(&mut x, rng);
        }
        self.main.run(&mut x, rng);
        x[self.m_idx]
    }
}

impl Segment {
    fn build(
        a: &DMatrix<f64>,
        d: &DMatrix<f64>,
        b: &DVector<f64>,
        len: f64,
        dt: f64,
        scheme: Scheme,
    ) -> Segment {
        let n_steps = (len / dt).ceil().max(1.0) as usize;
        let h = len / n_steps as f64;
        let kind = match scheme {
            Scheme::EulerMaruyama => SegmentKind::Euler {
                a: a.clone(),
                b: b.clone(),
                l: linalg::psd_factor(d),
            },
            Scheme::ExactTransition => {
                let (f, g_cov) = linalg::van_loan_factors(a, d, h);
                let (_, g_mean) = linalg::mean_factors(a, b, h);
                SegmentKind::Exact { f, g: g_mean, l: linalg::psd_factor(&g_cov) }
            }
        };
        Segment { n_steps, h, kind }
    }

    fn run(&self, x: &mut DVector<f64>, rng: &mut ChaCha8Rng) {
        let n = x.nrows();
        match &self.kind {
            SegmentKind::Euler { a, b, l } => {
                let sq = self.h.sqrt();
                for _ in 0..self.n_steps {
                    let z = normals(rng, n);
                    *x += (a * &*x + b) * self.h + l * z * sq;
                }
            }
            SegmentKind::Exact { f, g, l } => {
                for _ in 0..self.n_steps {
                    let z = normals(rng, n);
                    *x = f * &*x + g + l * z;
                }
            }
        }
    }
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Moment estimates plus jackknife standard errors.
#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub stats: MeasurementStats,
    pub se_signal_ground: f64,
    pub se_signal_excited: f64,
    pub se_noise_ground: f64,
    pub se_noise_excited: f64,
    pub se_snr: f64,
}

/// Estimate signal/noise/SNR/fidelity from the sampled records, with
/// leave-one-out jackknife standard errors for every estimate.
pub fn empirical_stats(ensemble: &TrajectoryEnsemble) -> EnsembleStats {
    let g = Moments::of(&ensemble.records_ground);
    let e = Moments::of(&ensemble.records_excited);
    let stats = MeasurementStats::from_moments(g.mean, e.mean, g.var, e.var, ensemble.kappa_m_tau);

    let snr_fn = |gm: f64, gv: f64, em: f64, ev: f64| (gm - em).abs() / (gv + ev).sqrt();
    // Two-sample jackknife for the SNR: leave one record out of one arm at a
    // time and add the per-arm pseudo-value variances.
    let mut acc_g = JackAcc::new();
    let mut acc_e = JackAcc::new();
    for &x in &ensemble.records_ground {
        let (m, v) = g.leave_out(x);
        acc_g.push(snr_fn(m, v, e.mean, e.var));
    }
    for &x in &ensemble.records_excited {
        let (m, v) = e.leave_out(x);
        acc_e.push(snr_fn(g.mean, g.var, m, v));
    }
    let se_snr = (acc_g.jack_var() + acc_e.jack_var()).sqrt();

    let var_se = |m: &Moments, xs: &[f64]| {
        let mut acc = JackAcc::new();
        for &x in xs {
            acc.push(m.leave_out(x).1);
        }
        acc.jack_var().sqrt()
    };
    EnsembleStats {
        stats,
        se_signal_ground: (g.var / g.n as f64).sqrt(),
        se_signal_excited: (e.var / e.n as f64).sqrt(),
        se_noise_ground: var_se(&g, &ensemble.records_ground),
        se_noise_excited: var_se(&e, &ensemble.records_excited),
        se_snr,
    }
}

/// Empirical readout error against the midpoint threshold.
#[derive(Clone, Copy, Debug)]
pub struct ErrorRate {
    pub threshold: f64,
    pub errors: usize,
    pub total: usize,
    pub rate: f64,
    /// Binomial standard error of `rate` at the predicted level `p_pred`
    /// must be computed by the caller; this is the observed-rate version.
    pub rate_se: f64,
}

/// Count records falling on the wrong side of the midpoint threshold; the
/// direct histogram-overlap oracle for `1 - F = erfc(SNR/2)/2`.
pub fn empirical_error_rate(ensemble: &TrajectoryEnsemble) -> ErrorRate {
    let mg = mean(&ensemble.records_ground);
    let me = mean(&ensemble.records_excited);
    let threshold = 0.5 * (mg + me);
    let ground_high = mg >= me;
    let mut errors = 0usize;
    for &x in &ensemble.records_ground {
        if (ground_high && x < threshold) || (!ground_high && x > threshold) {
            errors += 1;
        }
    }
    for &x in &ensemble.records_excited {
        if (ground_high && x > threshold) || (!ground_high && x < threshold) {
            errors += 1;
        }
    }
    let total = ensemble.records_ground.len() + ensemble.records_excited.len();
    let rate = errors as f64 / total as f64;
    let rate_se = (rate * (1.0 - rate) / total as f64).sqrt();
    ErrorRate { threshold, errors, total, rate, rate_se }
}

/// Sample skewness and excess kurtosis of one record arm (Gaussianity check).
pub fn shape_moments(records: &[f64]) -> (f64, f64) {
    let n = records.len() as f64;
    let m = mean(records);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in records {
        let d = x - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// First two moments of a sample with O(1) leave-one-out updates.
struct Moments {
    n: usize,
    s1: f64,
    s2: f64,
    mean: f64,
    var: f64,
}

impl Moments {
    fn of(xs: &[f64]) -> Moments {
        let n = xs.len();
        let s1: f64 = xs.iter().sum();
        let s2: f64 = xs.iter().map(|x| x * x).sum();
        let mean = s1 / n as f64;
        let var = (s2 - s1 * mean) / (n as f64 - 1.0);
        Moments { n, s1, s2, mean, var }
    }

    /// `(mean, var)` of the sample with `x` removed.
    fn leave_out(&self, x: f64) -> (f64, f64) {
        let n1 = self.n as f64 - 1.0;
        let m = (self.s1 - x) / n1;
        let v = (self.s2 - x * x - n1 * m * m) / (n1 - 1.0);
        (m, v.max(0.0))
    }
}

/// Accumulates jackknife pseudo-values and reports their contribution
/// `(n-1)/n * sum (theta_i - theta_bar)^2` to the squared standard error.
struct JackAcc {
    vals: Vec<f64>,
}

impl JackAcc {
    fn new() -> JackAcc {
        JackAcc { vals: Vec::new() }
    }

    fn push(&mut self, v: f64) {
        self.vals.push(v);
    }

    fn jack_var(&self) -> f64 {
        let n = self.vals.len() as f64;
        let m = self.vals.iter().sum::<f64>() / n;
        (n - 1.0) / n * self.vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::readout::measurement_stats;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_baseline_variance_is_kappa_tau() {
        let cfg = presets::coherent(1.0, 5.0).validate().unwrap();
        let ens = sample_records(&cfg, 4000, 0.01, 11).unwrap();
        let est = empirical_stats(&ens);
        let expect = 5.0;
        assert!(
            (est.stats.noise_ground - expect).abs() < 3.0 * est.se_noise_ground,
            "var {} vs {} (se {})",
            est.stats.noise_ground,
            expect,
            est.se_noise_ground
        );
    }

    #[test]
    fn qmfs_variance_is_squeezed() {
        let r = 0.5 * 10.0f64.ln();
        let cfg = presets::qmfs(2.0, 5.0, r).validate().unwrap();
        let ens = sample_records(&cfg, 4000, 0.004, 7).unwrap();
        let est = empirical_stats(&ens);
        let expect = 0.1 * 5.0; // e^{-2r} kappa tau
        for (v, se) in [
            (est.stats.noise_ground, est.se_noise_ground),
            (est.stats.noise_excited, est.se_noise_excited),
        ] {
            assert!((v - expect).abs() < 3.0 * se, "var {v} vs {expect} (se {se})");
        }
    }

    #[test]
    fn means_match_engine_for_both_states() {
        let cfg = presets::coherent(4.0, 10.0).validate().unwrap();
        let engine = measurement_stats(&cfg).unwrap();
        let ens = sample_records(&cfg, 3000, 0.01, 3).unwrap();
        let est = empirical_stats(&ens);
        assert!(
            (est.stats.signal_ground - engine.signal_ground).abs() < 3.0 * est.se_signal_ground
        );
        assert!(
            (est.stats.signal_excited - engine.signal_excited).abs() < 3.0 * est.se_signal_excited
        );
    }

    #[test]
    fn exact_transition_matches_engine_at_coarse_step() {
        let r = 0.5 * 4.0f64.ln();
        let cfg = presets::qmfs(3.0, 6.0, r).validate().unwrap();
        let engine = measurement_stats(&cfg).unwrap();
        let dt = max_stable_dt(&cfg);
        let ens = sample_records_with(&cfg, 4000, dt, 19, Scheme::ExactTransition).unwrap();
        let est = empirical_stats(&ens);
        assert!(
            (est.stats.signal_ground - engine.signal_ground).abs() < 3.0 * est.se_signal_ground
        );
        assert!((est.stats.noise_ground - engine.noise_ground).abs() < 3.0 * est.se_noise_ground);
    }

    #[test]
    fn finite_turn_on_sampler_tracks_engine_noise() {
        let mut cfg = presets::qmfs(1.0, 4.0, 0.8);
        cfg.source.t0_kappa = Some(-3.0);
        let cfg = cfg.validate().unwrap();
        let engine = measurement_stats(&cfg).unwrap();
        let ens = sample_records(&cfg, 4000, 0.005, 23).unwrap();
        let est = empirical_stats(&ens);
        assert!(
            (est.stats.noise_ground - engine.noise_ground).abs() < 3.0 * est.se_noise_ground,
            "var {} vs engine {} (se {})",
            est.stats.noise_ground,
            engine.noise_ground,
            est.se_noise_ground
        );
    }

    #[test]
    fn detection_loss_mixes_vacuum_into_records() {
        let r = 0.5 * 10.0f64.ln();
        let mut cfg = presets::qmfs(2.0, 5.0, r);
        cfg.loss.eta = 0.9;
        let cfg = cfg.validate().unwrap();
        let ens = sample_records(&cfg, 4000, 0.004, 31).unwrap();
        let est = empirical_stats(&ens);
        let expect = 0.9 * 0.5 + 0.1 * 5.0;
        assert!(
            (est.stats.noise_ground - expect).abs() < 3.0 * est.se_noise_ground,
            "lossy var {} vs {}",
            est.stats.noise_ground,
            expect
        );
    }

    #[test]
    fn same_seed_reproduces_and_prefix_is_partition_independent() {
        let cfg = presets::coherent(1.0, 2.0).validate().unwrap();
        let a = sample_records(&cfg, 16, 0.01, 42).unwrap();
        let b = sample_records(&cfg, 16, 0.01, 42).unwrap();
        assert_eq!(a.records_ground, b.records_ground);
        assert_eq!(a.records_excited, b.records_excited);
        let small = sample_records(&cfg, 8, 0.01, 42).unwrap();
        assert_eq!(&a.records_ground[..8], &small.records_ground[..]);
        assert_eq!(&a.records_excited[..8], &small.records_excited[..]);
    }

    #[test]
    fn rejects_too_coarse_step() {
        let cfg = presets::coherent(1.0, 2.0).validate().unwrap();
        let err = sample_records(&cfg, 2, 0.5, 0).unwrap_err();
        assert!(matches!(err, MonteCarloError::StepTooCoarse { .. }));
    }

    #[test]
    fn halving_dt_shifts_variance_less_than_one_se() {
        let cfg = presets::coherent(1.0, 4.0).validate().unwrap();
        let coarse = empirical_stats(&sample_records(&cfg, 3000, 0.02, 5).unwrap());
        let fine = empirical_stats(&sample_records(&cfg, 3000, 0.01, 5).unwrap());
        let se = coarse.se_noise_ground.max(fine.se_noise_ground);
        assert!(
            (coarse.stats.noise_ground - fine.stats.noise_ground).abs()
                < se + 0.02 * fine.stats.noise_ground,
            "coarse {} fine {} se {}",
            coarse.stats.noise_ground,
            fine.stats.noise_ground,
            se
        );
    }

    #[test]
    fn quadrupling_trajectories_halves_standard_error() {
        let cfg = presets::coherent(1.0, 2.0).validate().unwrap();
        let small = empirical_stats(&sample_records(&cfg, 800, 0.02, 9).unwrap());
        let large = empirical_stats(&sample_records(&cfg, 3200, 0.02, 9).unwrap());
        let ratio = small.se_signal_ground / large.se_signal_ground;
        assert!((ratio - 2.0).abs() < 0.6, "CLT ratio {ratio}");
    }

    #[test]
    fn records_are_gaussian_in_shape() {
        let cfg = presets::coherent(2.0, 4.0).validate().unwrap();
        let ens = sample_records(&cfg, 4000, 0.01, 13).unwrap();
        let (skew, exkurt) = shape_moments(&ens.records_ground);
        let n = ens.n_traj as f64;
        assert!(skew.abs() < 4.0 * (6.0 / n).sqrt(), "skew {skew}");
        assert!(exkurt.abs() < 4.0 * (24.0 / n).sqrt(), "excess kurtosis {exkurt}");
    }

    #[test]
    fn error_rate_matches_fidelity_formula() {
        // Pick nbar0 so the engine SNR is ~2, where errors are common enough
        // to count accurately with a modest ensemble.
        let probe = presets::coherent(1.0, 10.0).validate().unwrap();
        let unit = measurement_stats(&probe).unwrap().snr;
        let nbar0 = (2.0 / unit).powi(2);
        let cfg = presets::coherent(nbar0, 10.0).validate().unwrap();
        let engine = measurement_stats(&cfg).unwrap();
        assert_relative_eq!(engine.snr, 2.0, max_relative = 1e-10);
        let ens = sample_records(&cfg, 6000, 0.01, 17).unwrap();
        let obs = empirical_error_rate(&ens);
        let p = 1.0 - engine.fidelity;
        let se = (p * (1.0 - p) / obs.total as f64).sqrt();
        assert!(
            (obs.rate - p).abs() < 3.0 * se,
            "rate {} vs {} (binomial se {})",
            obs.rate,
            p,
            se
        );
    }

    #[test]
    fn jackknife_se_of_mean_matches_classic_formula() {
        let cfg = presets::coherent(1.0, 2.0).validate().unwrap();
        let ens = sample_records(&cfg, 500, 0.02, 21).unwrap();
        let est = empirical_stats(&ens);
        let classic = (est.stats.noise_ground / 500.0).sqrt();
        assert_relative_eq!(est.se_signal_ground, classic, max_relative = 1e-12);
    }
}
