//! Dense linear-algebra helpers for the Gaussian propagators.
//!
//! Everything here works on small matrices (state dimension <= 9), so plain
//! dense algorithms are used throughout.

use nalgebra::{DMatrix, DVector};

/// Matrix exponential, thin wrapper so callers do not depend on the backend.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.exp()
}

/// Exact step factors `(F, G)` for `dC/dt = A C + C A^T + D` over `h`:
/// `C(t+h) = F C(t) F^T + G`, from the Van Loan block exponential of
/// `[[A, D], [0, -A^T]]`.
///
/// The factors are exact for constant `A`, `D`; `h` should be kept of order
/// `1 / max-rate` only to avoid floating-point cancellation in the
/// `exp(+A^T h)` block.
pub fn van_loan_factors(a: &DMatrix<f64>, d: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut blk = DMatrix::<f64>::zeros(2 * n, 2 * n);
    blk.view_mut((0, 0), (n, n)).copy_from(a);
    blk.view_mut((0, n), (n, n)).copy_from(d);
    blk.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let e = expm(&(blk * h));
    let f = e.view((0, 0), (n, n)).into_owned();
    let g = e.view((0, n), (n, n)).into_owned() * f.transpose();
    (f, symmetrize(&g))
}

/// One exact covariance step of `dC/dt = A C + C A^T + D` over `h`.
pub fn van_loan_cov_step(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    c0: &DMatrix<f64>,
    h: f64,
) -> DMatrix<f64> {
    let (f, g) = van_loan_factors(a, d, h);
    let c = &f * c0 * f.transpose() + g;
    symmetrize(&c)
}

/// Exact step factors `(F, g)` for `dm/dt = A m + b` over `h`:
/// `m(t+h) = F m(t) + g`, via the augmented exponential of `[[A, b], [0, 0]]`.
pub fn mean_factors(a: &DMatrix<f64>, b: &DVector<f64>, h: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.nrows();
    let mut blk = DMatrix::<f64>::zeros(n + 1, n + 1);
    blk.view_mut((0, 0), (n, n)).copy_from(a);
    blk.view_mut((0, n), (n, 1)).copy_from(b);
    let e = expm(&(blk * h));
    let f = e.view((0, 0), (n, n)).into_owned();
    let g = DVector::from_iterator(n, (0..n).map(|i| e[(i, n)]));
    (f, g)
}

/// One exact mean step of `dm/dt = A m + b` over `h`.
pub fn mean_step(a: &DMatrix<f64>, b: &DVector<f64>, m0: &DVector<f64>, h: f64) -> DVector<f64> {
    let (f, g) = mean_factors(a, b, h);
    &f * m0 + g
}

/// Steady-state solution of `A C + C A^T + D = 0` via the Kronecker-product
/// linear system. Requires `A` Hurwitz; panics on singular systems.
pub fn lyapunov_steady(a: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = a.kronecker(&eye) + eye.kronecker(a);
    let rhs = DVector::from_column_slice(d.as_slice());
    let sol = k
        .lu()
        .solve(&(-rhs))
        .expect("Lyapunov system is singular; drift must be Hurwitz");
    let c = DMatrix::from_column_slice(n, n, sol.as_slice());
    symmetrize(&c)
}

/// Symmetric part of a nearly-symmetric matrix (drops floating-point skew).
pub fn symmetrize(c: &DMatrix<f64>) -> DMatrix<f64> {
    (c + c.transpose()) * 0.5
}

/// Cholesky-like factor for a positive *semi*definite symmetric matrix.
///
/// Uses an eigendecomposition so that exactly-singular covariances (for
/// example a frozen accumulator row) are handled; eigenvalues below
/// `-1e-9 * max` cause a panic since they signal an invalid covariance.
pub fn psd_factor(c: &DMatrix<f64>) -> DMatrix<f64> {
    let es = c.clone().symmetric_eigen();
    let max = es.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let tol = 1e-9 * max.max(1.0);
    let mut vecs = es.eigenvectors;
    for (j, &ev) in es.eigenvalues.iter().enumerate() {
        assert!(ev > -tol, "covariance has negative eigenvalue {ev}");
        let s = ev.max(0.0).sqrt();
        for i in 0..vecs.nrows() {
            vecs[(i, j)] *= s;
        }
    }
    vecs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expm_matches_diagonal_case() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, -1.0]));
        let e = expm(&a);
        assert_relative_eq!(e[(0, 0)], 0.5f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 1)], (-1.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn expm_rotation_block() {
        // exp(theta * J) is a rotation by theta for J = [[0,1],[-1,0]].
        let th = 0.3f64;
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = expm(&(j * th));
        assert_relative_eq!(e[(0, 0)], th.cos(), max_relative = 1e-12);
        assert_relative_eq!(e[(0, 1)], th.sin(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 0)], -th.sin(), max_relative = 1e-12);
    }

    #[test]
    fn van_loan_scalar_ou_process() {
        // dC/dt = -2a C + d has solution C(t) = d/(2a) + (C0 - d/(2a)) e^{-2at}.
        let a = DMatrix::from_element(1, 1, -0.7);
        let d = DMatrix::from_element(1, 1, 1.3);
        let c0 = DMatrix::from_element(1, 1, 0.2);
        let t = 0.9;
        let c = van_loan_cov_step(&a, &d, &c0, t);
        let cinf = 1.3 / 1.4;
        let expect = cinf + (0.2 - cinf) * (-1.4f64 * t).exp();
        assert_relative_eq!(c[(0, 0)], expect, max_relative = 1e-12);
    }

    #[test]
    fn mean_step_scalar_relaxation() {
        // dm/dt = -a m + b -> m(t) = b/a + (m0 - b/a) e^{-at}.
        let a = DMatrix::from_element(1, 1, -0.5);
        let b = DVector::from_element(1, 0.8);
        let m0 = DVector::from_element(1, 0.0);
        let m = mean_step(&a, &b, &m0, 2.0);
        let minf = 0.8 / 0.5;
        assert_relative_eq!(m[0], minf * (1.0 - (-1.0f64).exp()), max_relative = 1e-12);
    }

    #[test]
    fn lyapunov_steady_matches_long_time_step() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.5, 0.4, -0.4, -0.5]);
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 2.0]);
        let c = lyapunov_steady(&a, &d);
        let mut ct = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..400 {
            ct = van_loan_cov_step(&a, &d, &ct, 0.1);
        }
        assert_relative_eq!(c, ct, epsilon = 1e-9);
        // residual A C + C A^T + D = 0
        let res = &a * &c + &c * a.transpose() + &d;
        assert!(res.amax() < 1e-12);
    }

    #[test]
    fn psd_factor_roundtrip() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let l = psd_factor(&c);
        assert_relative_eq!(&l * l.transpose(), c, epsilon = 1e-12);
    }
}
