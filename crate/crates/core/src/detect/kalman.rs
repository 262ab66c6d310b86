//! Steady-state Kalman–Bucy gain.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2x4, Mat4, Mat4x2};

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanSolution {
    /// Stabilizing solution of the filter Riccati equation.
    pub p: DMatrix<f64>,
    /// `P C^T R^-1`.
    pub gain: DMatrix<f64>,
    /// Newton polishing iterations used after the Riccati flow settled.
    pub newton_iterations: usize,
}

/// `A P + P A^T - P C^T R^-1 C P + Q`.
pub fn riccati_residual(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r_inv: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> DMatrix<f64> {
    a * p + p * a.transpose() - p * c.transpose() * r_inv * c * p + q
}

/// Steady-state estimator gain `L = P C^T R^-1` with `P` the stabilizing
/// solution of `A P + P A^T - P C^T R^-1 C P + Q = 0`.
///
/// The differential Riccati equation is integrated from `P = Q` with RK4
/// until it settles, then refined by Newton–Kleinman steps until the relative
/// Frobenius change is at most `1e-10`.
pub fn kalman_gain_dense(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<KalmanSolution> {
    let n = a.nrows();
    if a.ncols() != n || c.ncols() != n || q.shape() != (n, n) || r.shape() != (c.nrows(), c.nrows()) {
        return Err(Error::Precondition("Kalman operands are not conformant".into()));
    }
    let (q_min, _) = linalg::sym_eig_range(q);
    if q_min < -1e-12 * q.amax().max(1e-300) {
        return Err(Error::Precondition("process covariance must be positive semidefinite".into()));
    }
    let (r_min, _) = linalg::sym_eig_range(r);
    if !(r_min > 0.0) {
        return Err(Error::Precondition("measurement covariance must be positive definite".into()));
    }
    if !linalg::detectable(a, c, 1e-12) {
        return Err(Error::Synthesis("(A, C) is not detectable".into()));
    }
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Synthesis("measurement covariance is singular".into()))?;
    let q = linalg::sym(q);
    let ctr = c.transpose() * &r_inv * c;

    let flow = |p: &DMatrix<f64>| riccati_residual(a, c, &q, &r_inv, p);
    let mut p = q.clone();
    let scale = q.norm().max(1e-300);
    let mut t = 0.0;
    for _ in 0..2_000_000 {
        let rate = a.norm() + (&p * &ctr).norm() + 1e-12;
        let h = 0.2 / rate;
        let k1 = flow(&p);
        if k1.norm() <= 1e-9 * scale {
            break;
        }
        let k2 = flow(&(&p + &k1 * (0.5 * h)));
        let k3 = flow(&(&p + &k2 * (0.5 * h)));
        let k4 = flow(&(&p + &k3 * h));
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        p = linalg::sym(&p);
        t += h;
        if t > 1e9 {
            break;
        }
    }

    let mut iterations = 0;
    for _ in 0..50 {
        let gain = &p * c.transpose() * &r_inv;
        let closed = a - &gain * c;
        if !linalg::is_hurwitz(&closed) {
            return Err(Error::Synthesis("Riccati flow did not reach a stabilizing solution".into()));
        }
        // closed P + P closed^T + Q + L R L^T = 0
        let next = linalg::lyapunov(&closed.transpose(), &(&q + &gain * r * gain.transpose()))?;
        let change = (&next - &p).norm() / next.norm().max(1e-300);
        p = next;
        iterations += 1;
        if change <= 1e-10 || p.norm() == 0.0 {
            break;
        }
    }
    let gain = &p * c.transpose() * &r_inv;
    if !linalg::is_hurwitz(&(a - &gain * c)) {
        return Err(Error::Synthesis("closed-loop estimator is not Hurwitz".into()));
    }
    Ok(KalmanSolution {
        p,
        gain,
        newton_iterations: iterations,
    })
}

/// Gain for the four-state cell model with a two-channel output.
pub fn kalman_gain(a: &Mat4, c: &Mat2x4, q_proc: &Mat4, r_meas: &nalgebra::Matrix2<f64>) -> Result<Mat4x2> {
    let sol = kalman_gain_dense(
        &linalg::to_dense(a),
        &linalg::to_dense(c),
        &linalg::to_dense(q_proc),
        &linalg::to_dense(r_meas),
    )?;
    Ok(Mat4x2::from_fn(|i, j| sol.gain[(i, j)]))
}
