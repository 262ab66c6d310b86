//! Vertex test of the observer stability inequality and candidate
//! construction for it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kalman;
use super::state_space::{output_matrix, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat4, Mat4x2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityCheck {
    pub stable: bool,
    /// `-max λ(sym M)` over both vertices; positive when stable with room.
    pub margin: f64,
}

/// `A^T P + P A - H^T L^T P - P L H + Q` at output slope `psi`.
pub fn vertex_matrix(a: &Mat4, l: &Mat4x2, p: &Mat4, q: &Mat4, psi: f64) -> Mat4 {
    let plh = p * l * output_matrix(psi);
    a.transpose() * p + p * a - plh.transpose() - plh + q
}

/// Checks `M(H) <= 0` at `H(psi_min)` and `H(psi_max)`. Because `M` is affine
/// in the slope, this covers every slope in between.
pub fn verify_stability(ss: &StateSpace, l: &Mat4x2, p: &Mat4, q: &Mat4, psi_min: f64, psi_max: f64) -> Result<StabilityCheck> {
    let (p_min, _) = linalg::sym_eig_range(&linalg::to_dense(p));
    let (q_min, _) = linalg::sym_eig_range(&linalg::to_dense(q));
    if !(p_min > 0.0 && q_min > 0.0) {
        return Err(Error::Precondition("P and Q must be positive definite".into()));
    }
    let worst = [psi_min, psi_max]
        .iter()
        .map(|&psi| linalg::sym_eig_range(&linalg::to_dense(&vertex_matrix(&ss.a, l, p, q, psi))).1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityCheck {
        stable: worst <= 0.0,
        margin: -worst,
    })
}

/// Verified Lyapunov certificate for the nonlinear observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub l: Mat4x2,
    pub p: Mat4,
    pub q: Mat4,
    pub check: StabilityCheck,
}

/// Builds `(L, P, Q)` without semidefinite programming.
///
/// `L` is the Kalman gain at the mid slope. For a weighting `Q0`, `P` solves
/// the Lyapunov equation of the mid-slope closed loop, and `Q` is half the
/// smallest dissipation `-λmax(sym M0)` over both vertices times the
/// identity, where `M0` is the vertex matrix with `Q = 0`. Diagonal weightings
/// are searched to maximize the decay rate `λmin(Q)/λmax(P)`. Returns `None`
/// when no weighting gives positive dissipation at both vertices.
pub fn synthesize_certificate(
    ss: &StateSpace,
    q_proc: &Mat4,
    r_meas: &nalgebra::Matrix2<f64>,
    psi_min: f64,
    psi_max: f64,
) -> Result<Option<Certificate>> {
    let mid = 0.5 * (psi_min + psi_max);
    let l = kalman::kalman_gain(&ss.a, &output_matrix(mid), q_proc, r_meas)?;
    let closed = ss.a - l * output_matrix(mid);
    let closed_t = linalg::to_dense(&closed);

    // (P, dissipation, dissipation / (2 λmax(P)))
    let build = |w: &[f64]| -> Option<(Mat4, f64, f64)> {
        let q0 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, w.iter().map(|z| z.exp())));
        let p = linalg::mat4(&linalg::lyapunov(&closed_t, &q0).ok()?);
        let zero = Mat4::zeros();
        let dissipation = [psi_min, psi_max]
            .iter()
            .map(|&psi| -linalg::sym_eig_range(&linalg::to_dense(&vertex_matrix(&ss.a, &l, &p, &zero, psi))).1)
            .fold(f64::INFINITY, f64::min);
        let (_, p_max) = linalg::sym_eig_range(&linalg::to_dense(&p));
        Some((p, dissipation, 0.5 * dissipation / p_max))
    };
    let rate = |w: &[f64]| build(w).map(|(_, _, r)| -r).unwrap_or(f64::INFINITY);

    let opts = crate::identify::NelderMeadOptions {
        initial_step: 1.0,
        max_evals: 3000,
        f_tol: 1e-12,
        x_tol: 1e-8,
        restarts: 2,
        seed: 0,
    };
    let start = [0.0; 4];
    let best = crate::identify::minimize(rate, &start, &opts);
    let Some((p, dissipation, _)) = build(&best.x) else {
        return Ok(None);
    };
    if !(dissipation > 0.0) {
        return Ok(None);
    }
    let q = Mat4::identity() * (0.5 * dissipation);
    let check = verify_stability(ss, &l, &p, &q, psi_min, psi_max)?;
    Ok(check.stable.then_some(Certificate { l, p, q, check }))
}

/// Largest `ε` with `εP - Q <= 0`: `λmin(P^-1/2 Q P^-1/2)`.
pub fn decay_rate(p: &Mat4, q: &Mat4) -> f64 {
    let p_isqrt = linalg::sym_fn(&linalg::to_dense(p), |v| 1.0 / v.sqrt());
    linalg::sym_eig_range(&(&p_isqrt * linalg::to_dense(q) * &p_isqrt)).0
}
