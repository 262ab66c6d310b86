//! Residual evaluation functions and the alarm latch.

use nalgebra::{Vector2, Vector4};
use serde::{Deserialize, Serialize};

use super::thresholds::Thresholds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorState {
    pub x_hat: Vector4<f64>,
    pub segment: usize,
    /// Forgetting-weighted integral of `||r||²`.
    pub j2_sq: f64,
    /// Running supremum of `||r||`.
    pub jinf: f64,
    pub alarm: bool,
    pub alarm_time: Option<f64>,
    /// Forgetting factor applied once per sample.
    pub eta: f64,
}

impl DetectorState {
    pub fn new(x_hat: Vector4<f64>, eta: f64) -> Self {
        DetectorState {
            x_hat,
            segment: 0,
            j2_sq: 0.0,
            jinf: 0.0,
            alarm: false,
            alarm_time: None,
            eta,
        }
    }

    pub fn j2(&self) -> f64 {
        self.j2_sq.sqrt()
    }

    /// Clears the evaluation functions and the alarm, keeping the estimate.
    pub fn reset(&mut self) {
        self.j2_sq = 0.0;
        self.jinf = 0.0;
        self.alarm = false;
        self.alarm_time = None;
    }
}

/// `J2² <- η J2² + ||r||² Δt`.
pub fn j2_update(det: &DetectorState, r: &Vector2<f64>, dt: f64) -> DetectorState {
    DetectorState {
        j2_sq: det.eta * det.j2_sq + r.norm_squared() * dt,
        ..*det
    }
}

/// `J∞ <- max(J∞, ||r||)`.
pub fn jinf_update(det: &DetectorState, r: &Vector2<f64>) -> DetectorState {
    DetectorState {
        jinf: det.jinf.max(r.norm()),
        ..*det
    }
}

/// Raises and latches the alarm once either metric exceeds its inflated
/// threshold.
pub fn decide(det: &DetectorState, th: &Thresholds, t: f64) -> DetectorState {
    if det.alarm {
        return *det;
    }
    let fire = det.j2() > th.j2 * th.inflation || det.jinf > th.jinf * th.inflation;
    DetectorState {
        alarm: fire,
        alarm_time: if fire { Some(t) } else { None },
        ..*det
    }
}
