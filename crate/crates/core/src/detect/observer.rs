//! Observer propagation between samples.

use nalgebra::{Matrix2, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::evaluate::DetectorState;
use super::kalman;
use super::state_space::{output_matrix, StateSpace};
use super::thresholds::{threshold_linear, ThresholdPair};
use crate::error::{Error, Result};
use crate::identify::PwlOcv;
use crate::linalg::{self, Mat2x4, Mat4, Mat4x2};
use crate::model::BattBeeParams;

/// Linear observer for one OCV segment, `U(V_s) ≈ a V_s + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSubmodel {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Whether this is the last segment (unbounded above).
    pub last: bool,
    /// Segment slope and offset.
    pub a: f64,
    pub b: f64,
    pub c: Mat2x4,
    pub l: Mat4x2,
    pub a_tilde: Mat4,
    /// Gramian of `(Ã, C)`.
    pub gramian: Mat4,
    pub threshold: ThresholdPair,
}

impl LinearSubmodel {
    /// Segment membership with the same tie rule as `PwlOcv::segment_select`.
    pub fn contains(&self, v_s: f64) -> bool {
        (self.index == 0 || v_s > self.lo) && (self.last || v_s <= self.hi)
    }

    /// `z = y - [b; 0]`, the output the linear model sees.
    pub fn shifted_output(&self, y: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(y[0] - self.b, y[1])
    }
}

/// One submodel per PWL segment: Kalman gain at the segment slope, closed
/// loop and threshold pair for an initial error bound `delta`.
pub fn build_submodels(
    ss: &StateSpace,
    pwl: &PwlOcv,
    q_proc: &Mat4,
    r_meas: &Matrix2<f64>,
    delta: f64,
) -> Result<Vec<LinearSubmodel>> {
    let n = pwl.segments.len();
    pwl.segments
        .iter()
        .enumerate()
        .map(|(index, seg)| {
            let c = output_matrix(seg.a);
            let l = kalman::kalman_gain(&ss.a, &c, q_proc, r_meas)?;
            let a_tilde = ss.a - l * c;
            let (threshold, gramian) = threshold_linear(&a_tilde, &c, delta)?;
            Ok(LinearSubmodel {
                index,
                lo: seg.lo,
                hi: seg.hi,
                last: index + 1 == n,
                a: seg.a,
                b: seg.b,
                c,
                l,
                a_tilde,
                gramian,
                threshold,
            })
        })
        .collect()
}

fn check_finite(y: &Vector2<f64>, u: &Vector3<f64>) -> Result<()> {
    if y.iter().chain(u.iter()).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Measurement("non-finite measurement or input".into()))
    }
}

/// RK4 over `dt` for `x' = f(x)`, split into substeps so that `h ρ <= 0.5`.
fn rk4(x0: Vector4<f64>, dt: f64, rho: f64, f: impl Fn(&Vector4<f64>) -> Vector4<f64>) -> Vector4<f64> {
    let n = ((dt * rho / 0.5).ceil() as usize).max(1);
    let h = dt / n as f64;
    let mut x = x0;
    for _ in 0..n {
        let k1 = f(&x);
        let k2 = f(&(x + k1 * (0.5 * h)));
        let k3 = f(&(x + k2 * (0.5 * h)));
        let k4 = f(&(x + k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

fn spectral_radius(a: &Mat4) -> f64 {
    linalg::eigenvalues(&linalg::to_dense(a)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Residual of the linear observer at the current estimate,
/// `r = z - C x̂ - D u`.
pub fn linear_residual(model: &LinearSubmodel, ss: &StateSpace, x_hat: &Vector4<f64>, z: &Vector2<f64>, u: &Vector3<f64>) -> Vector2<f64> {
    z - model.c * x_hat - ss.d * u
}

/// Residual at the current estimate and the estimate advanced by `dt` with
/// `x̂' = Ã x̂ + B u + L (z - D u)`, holding `z` and `u` constant.
pub fn linear_observer_step(
    model: &LinearSubmodel,
    ss: &StateSpace,
    det: &DetectorState,
    z: &Vector2<f64>,
    u: &Vector3<f64>,
    dt: f64,
) -> Result<(DetectorState, Vector2<f64>)> {
    check_finite(z, u)?;
    let v_s = det.x_hat[1];
    if !model.contains(v_s) {
        return Err(Error::Segment {
            segment: model.index,
            v_s,
            lo: model.lo,
            hi: model.hi,
        });
    }
    let r = linear_residual(model, ss, &det.x_hat, z, u);
    let forcing = ss.b * u + model.l * (z - ss.d * u);
    let x = rk4(det.x_hat, dt, spectral_radius(&model.a_tilde), |x| model.a_tilde * x + forcing);
    Ok((
        DetectorState {
            x_hat: x,
            segment: model.index,
            ..*det
        },
        r,
    ))
}

/// Residual `y - [U(V̂_s); T̂_surf] - D u` at the current estimate.
pub fn nonlinear_residual(p: &BattBeeParams, ss: &StateSpace, x_hat: &Vector4<f64>, y: &Vector2<f64>, u: &Vector3<f64>) -> Vector2<f64> {
    y - Vector2::new(p.ocv.eval_extended(x_hat[1]), x_hat[3]) - ss.d * u
}

/// Residual and estimate advanced by `dt` for
/// `x̂' = A x̂ + B u + L (y - h(x̂) - D u)` with `y` and `u` held constant.
pub fn nonlinear_observer_step(
    p: &BattBeeParams,
    ss: &StateSpace,
    l: &Mat4x2,
    det: &DetectorState,
    y: &Vector2<f64>,
    u: &Vector3<f64>,
    dt: f64,
) -> Result<(DetectorState, Vector2<f64>)> {
    check_finite(y, u)?;
    let r = nonlinear_residual(p, ss, &det.x_hat, y, u);
    let (lo, hi) = p.ocv.slope_bounds();
    let rho = spectral_radius(&ss.a) + l.norm() * lo.abs().max(hi.abs()).max(1.0);
    let x = rk4(det.x_hat, dt, rho, |x| {
        ss.a * x + ss.b * u + l * nonlinear_residual(p, ss, x, y, u)
    });
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { term: "observer estimate" });
    }
    Ok((DetectorState { x_hat: x, ..*det }, r))
}
