//! Residual thresholds for fault-free operation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2x4, Mat4};

/// Threshold pair for one observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub j2: f64,
    pub jinf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub per_segment: Vec<ThresholdPair>,
    /// Maximum over segments.
    pub j2: f64,
    pub jinf: f64,
    pub delta: f64,
    pub inflation: f64,
}

/// Bounds for the nonlinear observer, with the decay rate used for `J2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearThresholds {
    pub j2: f64,
    pub jinf: f64,
    pub epsilon: f64,
}

/// `delta` as a scalar bound: the Euclidean norm of a component-wise bound.
pub fn delta_scalar(delta: &[f64]) -> f64 {
    delta.iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// Nonlinear-observer bounds for `||x̃(0)|| <= delta`:
/// `J2 <= sqrt(max(psi², 1) λmax(P) / (ε λmin(P))) δ` and
/// `J∞ <= sqrt(max(psi², 1) λmax(P) / λmin(P)) δ`.
///
/// `stable` must come from a successful vertex check of `(P, Q)`.
pub fn threshold_nonlinear(p: &Mat4, q: &Mat4, psi_max: f64, delta: f64, stable: bool) -> Result<NonlinearThresholds> {
    if !stable {
        return Err(Error::Precondition("observer stability has not been verified".into()));
    }
    let epsilon = super::stability::decay_rate(p, q);
    if !(epsilon > 0.0) {
        return Err(Error::Precondition("Q must be positive definite".into()));
    }
    let (p_min, p_max) = linalg::sym_eig_range(&linalg::to_dense(p));
    let gain = (psi_max * psi_max).max(1.0) * p_max / p_min;
    Ok(NonlinearThresholds {
        j2: (gain / epsilon).sqrt() * delta,
        jinf: gain.sqrt() * delta,
        epsilon,
    })
}

/// Observability Gramian `W` with `Ã^T W + W Ã + C^T C = 0`.
pub fn solve_lyapunov(a_tilde: &Mat4, c: &Mat2x4) -> Result<Mat4> {
    let a = linalg::to_dense(a_tilde);
    if !linalg::is_hurwitz(&a) {
        return Err(Error::Precondition("closed-loop matrix is not Hurwitz".into()));
    }
    let ctc = linalg::to_dense(&(c.transpose() * c));
    Ok(linalg::mat4(&linalg::lyapunov(&a, &ctc)?))
}

/// `||C e^{Ã τ}||₂`.
pub fn output_gain(a_tilde: &Mat4, c: &Mat2x4, tau: f64) -> f64 {
    linalg::norm2(&linalg::to_dense(&(c * (a_tilde * tau).exp())))
}

/// `sup_τ ||C e^{Ã τ}||₂` with its maximizer.
///
/// The search starts from `τ = 0` and a log-spaced grid up to forty slowest
/// time constants, doubling the grid density until the supremum moves by at
/// most 0.1 %, then polishes the best grid point by golden-section search.
pub fn peak_output_gain(a_tilde: &Mat4, c: &Mat2x4) -> (f64, f64) {
    let eig = linalg::eigenvalues(&linalg::to_dense(a_tilde));
    let slow = eig.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min).max(1e-12);
    let fast = eig.iter().map(|z| z.norm()).fold(0.0, f64::max).max(slow);
    let (t_lo, t_hi) = (1e-3 / fast, 40.0 / slow);

    let scan = |n: usize| -> (f64, f64) {
        let mut best = (output_gain(a_tilde, c, 0.0), 0.0);
        let ratio = (t_hi / t_lo).ln();
        for k in 0..n {
            let tau = t_lo * (ratio * k as f64 / (n - 1) as f64).exp();
            let g = output_gain(a_tilde, c, tau);
            if g > best.0 {
                best = (g, tau);
            }
        }
        best
    };
    let mut n = 64;
    let mut best = scan(n);
    loop {
        n *= 2;
        let next = scan(n);
        let settled = (next.0 - best.0).abs() <= 1e-3 * best.0;
        best = if next.0 >= best.0 { next } else { best };
        if settled || n >= 1 << 14 {
            break;
        }
    }
    if best.1 > 0.0 {
        // Bracket one grid cell on each side in log time.
        let step = ((t_hi / t_lo).ln() / (n - 1) as f64).exp();
        let (mut a, mut b) = (best.1 / step, best.1 * step);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let x1 = b - phi * (b - a);
            let x2 = a + phi * (b - a);
            if output_gain(a_tilde, c, x1) > output_gain(a_tilde, c, x2) {
                b = x2;
            } else {
                a = x1;
            }
        }
        let tau = 0.5 * (a + b);
        let g = output_gain(a_tilde, c, tau);
        if g > best.0 {
            best = (g, tau);
        }
    }
    best
}

/// Linear-observer bounds for `||x̃(0)|| <= delta`:
/// `J2 <= sqrt(λmax(W)) δ` and `J∞ <= sup_τ ||C e^{Ã τ}|| δ`.
pub fn threshold_linear(a_tilde: &Mat4, c: &Mat2x4, delta: f64) -> Result<(ThresholdPair, Mat4)> {
    let w = solve_lyapunov(a_tilde, c)?;
    let (_, w_max) = linalg::sym_eig_range(&linalg::to_dense(&w));
    let (peak, _) = peak_output_gain(a_tilde, c);
    Ok((
        ThresholdPair {
            j2: w_max.max(0.0).sqrt() * delta,
            jinf: peak * delta,
        },
        w,
    ))
}

/// Conservative thresholds: the maximum over segments of each metric.
pub fn conservative_threshold(per_segment: Vec<ThresholdPair>, delta: f64, inflation: f64) -> Result<Thresholds> {
    if per_segment.is_empty() {
        return Err(Error::Precondition("need at least one segment threshold".into()));
    }
    if !(inflation >= 1.0) {
        return Err(Error::param("inflation", "must be >= 1"));
    }
    let j2 = per_segment.iter().map(|t| t.j2).fold(0.0, f64::max);
    let jinf = per_segment.iter().map(|t| t.jinf).fold(0.0, f64::max);
    Ok(Thresholds {
        per_segment,
        j2,
        jinf,
        delta,
        inflation,
    })
}
