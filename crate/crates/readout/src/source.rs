//! Input-field noise models: broadband and Lorentzian-filtered squeezing,
//! plus the photon-loss beamsplitter.
//!
//! White-noise covariances are delta-normalized: vacuum = identity, squeezed
//! quadratures carry `exp(-2r)`, antisqueezed `exp(+2r)`.

use nalgebra::DMatrix;

use crate::model::{LossPlacement, ModeKind, Protocol, ValidatedConfig};

/// Description of the white part of the input noise plus an optional
/// narrowband filter stage that generates colored squeezing.
#[derive(Clone, Debug)]
pub struct InputNoiseModel {
    /// Covariance of the white input quadratures in the local basis
    /// (`(X, Y)` for one port, `(X1, Y1, X2, Y2)` for two).
    pub covariance_of_white_inputs: DMatrix<f64>,
    /// Present when the squeezing is generated through a Lorentzian filter;
    /// the white inputs are then vacuum and the squeezing lives in the pump.
    pub filter_block: Option<FilterBlock>,
    /// Squeeze turn-on time; `None` is the presqueezed sentinel.
    pub active_from: Option<f64>,
    /// Transmissivity of an input-side beamsplitter between the source and
    /// the cavities (1.0 = lossless). For broadband sources the mixing is
    /// folded into `covariance_of_white_inputs` instead.
    pub port_efficiency: f64,
}

/// Below-threshold parametric filter pair generating Lorentzian squeezing.
///
/// Parametrized so the squeezed output quadrature has zero-frequency variance
/// exactly `exp(-2r)` and Lorentzian half-width exactly `gamma`:
/// `gamma_f = 2 gamma / (1 + tanh(r/2))`, `lambda = (gamma_f / 2) tanh(r/2)`.
#[derive(Clone, Copy, Debug)]
pub struct FilterBlock {
    /// Requested squeezing bandwidth (half-width of the squeezed Lorentzian).
    pub gamma: f64,
    /// Filter-cavity linewidth.
    pub gamma_f: f64,
    /// Pump amplitude (below threshold: lambda < gamma_f / 2).
    pub lambda: f64,
    /// Squeeze angle (single-mode only): antisqueezed axis at `theta`.
    pub theta: f64,
}

impl FilterBlock {
    pub fn new(r: f64, gamma: f64, theta: f64) -> FilterBlock {
        let t = (0.5 * r).tanh();
        let gamma_f = 2.0 * gamma / (1.0 + t);
        FilterBlock {
            gamma,
            gamma_f,
            lambda: 0.5 * gamma_f * t,
            theta,
        }
    }

    /// Zero-frequency variance of the squeezed output quadrature,
    /// `((gamma_f/2 - lambda) / (gamma_f/2 + lambda))^2`.
    pub fn zero_frequency_squeezed_variance(&self) -> f64 {
        let num = 0.5 * self.gamma_f - self.lambda;
        let den = 0.5 * self.gamma_f + self.lambda;
        (num / den).powi(2)
    }
}

/// Broadband single-mode squeezing with the antisqueezed axis at `theta`.
///
/// `S = R(theta) diag(e^{2r}, e^{-2r}) R(theta)^T`, so `theta = pi/2` squeezes
/// the measured Y quadrature.
pub fn broadband_single_mode(r: f64, theta: f64) -> InputNoiseModel {
    let (ep, em) = ((2.0 * r).exp(), (-2.0 * r).exp());
    let (c, s) = (theta.cos(), theta.sin());
    let sxx = c * c * ep + s * s * em;
    let syy = s * s * ep + c * c * em;
    let sxy = s * c * (ep - em);
    InputNoiseModel {
        covariance_of_white_inputs: DMatrix::from_row_slice(2, 2, &[sxx, sxy, sxy, syy]),
        filter_block: None,
        active_from: None,
        port_efficiency: 1.0,
    }
}

/// Broadband two-mode squeezing in the local basis `(X1, Y1, X2, Y2)`:
/// all variances `cosh 2r`, cross-correlations `<X1 X2> = +sinh 2r`,
/// `<Y1 Y2> = -sinh 2r`, which squeezes the joint pair `(X-, Y+)`.
pub fn broadband_two_mode(r: f64) -> InputNoiseModel {
    let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let mut m = DMatrix::<f64>::identity(4, 4) * ch;
    m[(0, 2)] = sh;
    m[(2, 0)] = sh;
    m[(1, 3)] = -sh;
    m[(3, 1)] = -sh;
    InputNoiseModel {
        covariance_of_white_inputs: m,
        filter_block: None,
        active_from: None,
        port_efficiency: 1.0,
    }
}

/// Lorentzian-filtered squeezing of bandwidth `gamma`; the white inputs are
/// vacuum and the squeezing is produced by the filter pump.
pub fn filtered_source(r: f64, gamma: f64, mode_kind: ModeKind, theta: f64) -> InputNoiseModel {
    let dim = match mode_kind {
        ModeKind::SingleMode => 2,
        ModeKind::TwoMode => 4,
    };
    InputNoiseModel {
        covariance_of_white_inputs: DMatrix::identity(dim, dim),
        filter_block: Some(FilterBlock::new(r, gamma, theta)),
        active_from: None,
        port_efficiency: 1.0,
    }
}

impl InputNoiseModel {
    /// Beamsplitter of transmissivity `eta` between source and cavities:
    /// broadband covariances mix toward vacuum, filtered sources record the
    /// port efficiency for the cascade couplings.
    pub fn apply_loss(&self, eta: f64) -> InputNoiseModel {
        assert!((0.0..=1.0).contains(&eta), "efficiency must lie in [0, 1]");
        let mut out = self.clone();
        if self.filter_block.is_some() {
            out.port_efficiency *= eta;
        } else {
            let n = self.covariance_of_white_inputs.nrows();
            out.covariance_of_white_inputs = &self.covariance_of_white_inputs * eta
                + DMatrix::<f64>::identity(n, n) * (1.0 - eta);
        }
        out
    }

    /// Photon flux carried by the white squeezed inputs, per unit rate:
    /// sum over modes of `(S_XX + S_YY - 2) / 4`.
    pub fn squeezing_photons(&self) -> f64 {
        let s = &self.covariance_of_white_inputs;
        (0..s.nrows() / 2)
            .map(|m| (s[(2 * m, 2 * m)] + s[(2 * m + 1, 2 * m + 1)] - 2.0) / 4.0)
            .sum()
    }
}

/// Assemble the input noise model a validated config describes, including
/// input-side loss when requested.
pub fn input_noise_model(config: &ValidatedConfig) -> InputNoiseModel {
    let src = &config.source;
    let mut model = match (config.protocol, src.bandwidth_kappa) {
        (Protocol::Coherent, _) => broadband_single_mode(0.0, 0.0),
        (Protocol::SingleModeSqueezed, None) => broadband_single_mode(src.r, src.theta_rad),
        (Protocol::TwoModeQMFS, None) => broadband_two_mode(src.r),
        (Protocol::SingleModeSqueezed, Some(g)) => {
            filtered_source(src.r, g, ModeKind::SingleMode, src.theta_rad)
        }
        (Protocol::TwoModeQMFS, Some(g)) => filtered_source(src.r, g, ModeKind::TwoMode, 0.0),
    };
    model.active_from = src.t0_kappa;
    if config.loss.placement == LossPlacement::Input && config.loss.eta < 1.0 {
        model = model.apply_loss(config.loss.eta);
    }
    model
}

/// SNR reduction from finite squeezing bandwidth,
/// `sqrt(Gamma tau / [Gamma tau + (e^{2r} - 1)(1 - e^{-Gamma tau})])`.
pub fn snr_bandwidth_prefactor(r: f64, gamma: f64, tau: f64) -> f64 {
    let gt = gamma * tau;
    let e2r = (2.0 * r).exp();
    (gt / (gt + (e2r - 1.0) * (1.0 - (-gt).exp()))).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::plus_minus_rotation;
    use approx::assert_relative_eq;

    #[test]
    fn two_mode_vacuum_is_identity() {
        let m = broadband_two_mode(0.0);
        assert_relative_eq!(
            m.covariance_of_white_inputs,
            DMatrix::<f64>::identity(4, 4),
            epsilon = 1e-15
        );
    }

    #[test]
    fn two_mode_joint_variances() {
        let r = 0.5 * 10.0f64.ln(); // e^{2r} = 10
        let m = broadband_two_mode(r);
        let p = plus_minus_rotation();
        let s = &p * &m.covariance_of_white_inputs * p.transpose();
        // order (X-, Y+, X+, Y-)
        assert_relative_eq!(s[(0, 0)], 0.1, max_relative = 1e-12);
        assert_relative_eq!(s[(1, 1)], 0.1, max_relative = 1e-12);
        assert_relative_eq!(s[(2, 2)], 10.0, max_relative = 1e-12);
        assert_relative_eq!(s[(3, 3)], 10.0, max_relative = 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(s[(i, j)].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_mode_axis_convention() {
        let r = 0.7;
        let m = broadband_single_mode(r, std::f64::consts::FRAC_PI_2);
        let s = &m.covariance_of_white_inputs;
        // antisqueezed axis at theta = pi/2: Y is loud, X is quiet
        assert_relative_eq!(s[(1, 1)], (2.0 * r).exp(), max_relative = 1e-12);
        assert_relative_eq!(s[(0, 0)], (-2.0 * r).exp(), max_relative = 1e-12);
        // eigenvalues are exp(+-2r) for any angle
        let eig = broadband_single_mode(r, 0.9)
            .covariance_of_white_inputs
            .symmetric_eigen()
            .eigenvalues;
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert_relative_eq!(e[0], (-2.0 * r).exp(), max_relative = 1e-12);
        assert_relative_eq!(e[1], (2.0 * r).exp(), max_relative = 1e-12);
    }

    #[test]
    fn squeezing_photon_number() {
        let r = 0.85;
        assert_relative_eq!(
            broadband_two_mode(r).squeezing_photons(),
            2.0 * r.sinh().powi(2),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            broadband_single_mode(r, 0.3).squeezing_photons(),
            r.sinh().powi(2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn loss_maps_valid_to_valid() {
        let r = 1.5;
        for eta in [0.0, 0.3, 0.9, 1.0] {
            let m = broadband_two_mode(r).apply_loss(eta);
            let s = m.covariance_of_white_inputs.clone();
            // symplectic-style validity: S - I/… here simply S PSD and each
            // mode pair obeying det >= 1 (beamsplitter cannot break vacuum)
            let eig = s.clone().symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&e| e > 0.0));
            for mde in 0..2 {
                let (x, y) = (2 * mde, 2 * mde + 1);
                let det = s[(x, x)] * s[(y, y)] - s[(x, y)] * s[(y, x)];
                assert!(det >= 1.0 - 1e-12, "det {det} at eta {eta}");
            }
        }
        // eta = 0 gives plain vacuum
        let m0 = broadband_two_mode(r).apply_loss(0.0);
        assert_relative_eq!(
            m0.covariance_of_white_inputs,
            DMatrix::<f64>::identity(4, 4),
            epsilon = 1e-12
        );
        // eta = 0.9, e^{2r} = 100: squeezed joint variance 0.9*0.01 + 0.1
        let r100 = 0.5 * 100.0f64.ln();
        let m = broadband_two_mode(r100).apply_loss(0.9);
        let p = plus_minus_rotation();
        let s = &p * &m.covariance_of_white_inputs * p.transpose();
        assert_relative_eq!(s[(0, 0)], 0.109, max_relative = 1e-12);
    }

    #[test]
    fn filter_hits_zero_frequency_variance_for_any_bandwidth() {
        let r = 1.15;
        for gamma in [0.5, 3.0, 10.0, 1e3] {
            let fb = FilterBlock::new(r, gamma, 0.0);
            assert_relative_eq!(
                fb.zero_frequency_squeezed_variance(),
                (-2.0 * r).exp(),
                max_relative = 1e-12
            );
            // half-width of the squeezed Lorentzian is gamma itself
            assert_relative_eq!(0.5 * fb.gamma_f + fb.lambda, gamma, max_relative = 1e-12);
            assert!(fb.lambda < 0.5 * fb.gamma_f, "below threshold");
        }
    }

    #[test]
    fn prefactor_limits() {
        assert_relative_eq!(snr_bandwidth_prefactor(0.0, 3.0, 10.0), 1.0, epsilon = 1e-15);
        // broadband limit
        assert!(snr_bandwidth_prefactor(1.0, 1e6, 10.0) > 0.999);
        // monotone in gamma
        let r = 0.5 * 10.0f64.ln();
        let mut last = 0.0;
        for g in [1.0, 3.0, 10.0, 100.0] {
            let p = snr_bandwidth_prefactor(r, g, 10.0);
            assert!(p > last);
            last = p;
        }
    }
}
