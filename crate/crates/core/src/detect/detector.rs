//! Streaming fault detector over telemetry samples.

use nalgebra::{Matrix2, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::evaluate::{decide, j2_update, jinf_update, DetectorState};
use super::observer::{build_submodels, linear_observer_step, linear_residual, nonlinear_observer_step, nonlinear_residual, LinearSubmodel};
use super::stability::{synthesize_certificate, Certificate};
use super::state_space::{assemble_state_space, input, StateSpace};
use super::thresholds::{conservative_threshold, delta_scalar, threshold_nonlinear, NonlinearThresholds, ThresholdPair, Thresholds};
use crate::error::{Error, Result};
use crate::identify::{piecewise_linearize, PwlOcv, PwlTarget};
use crate::linalg::Mat4;
use crate::model::BattBeeParams;
use crate::sim::TelemetrySample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObserverKind {
    /// Bank of per-segment linear observers.
    #[default]
    Linear,
    /// Single observer on the polynomial OCV. Falls back to the linear bank
    /// when no stability certificate is found.
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    /// Forgetting factor for `J2`, applied per sample.
    pub eta: f64,
    /// Component-wise bound on the initial estimation error
    /// `[V_b, V_s, T_core, T_surf]`.
    pub delta: [f64; 4],
    /// Diagonal of the process noise covariance.
    pub q_proc: [f64; 4],
    /// Diagonal of the measurement noise covariance `[V, T_surf]`.
    pub r_meas: [f64; 2],
    /// Multiplier (>= 1) on both thresholds.
    pub inflation: f64,
    /// Integration weight for the first sample.
    pub sample_period: f64,
    /// PWL tolerance in volts; ignored when `segments` is set.
    pub pwl_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<usize>,
    pub observer: ObserverKind,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            eta: 0.95,
            delta: [0.01, 0.01, 0.1, 0.1],
            q_proc: [1e-8, 1e-8, 1e-4, 1e-4],
            r_meas: [1e-4, 1e-2],
            inflation: 1.0,
            sample_period: 1.0,
            pwl_tol: 0.01,
            segments: None,
            observer: ObserverKind::Linear,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::param("eta", "must lie in (0, 1]"));
        }
        if !self.delta.iter().all(|d| d.is_finite() && *d >= 0.0) {
            return Err(Error::param("delta", "must be finite and >= 0"));
        }
        if !self.q_proc.iter().all(|q| q.is_finite() && *q >= 0.0) {
            return Err(Error::param("q_proc", "must be finite and >= 0"));
        }
        if !self.r_meas.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(Error::param("r_meas", "must be finite and > 0"));
        }
        if !(self.inflation >= 1.0 && self.inflation.is_finite()) {
            return Err(Error::param("inflation", "must be >= 1"));
        }
        if !(self.sample_period > 0.0 && self.sample_period.is_finite()) {
            return Err(Error::param("sample_period", "must be > 0"));
        }
        Ok(())
    }

    pub fn q_matrix(&self) -> Mat4 {
        Mat4::from_diagonal(&Vector4::from(self.q_proc))
    }

    pub fn r_matrix(&self) -> Matrix2<f64> {
        Matrix2::from_diagonal(&Vector2::from(self.r_meas))
    }

    pub fn pwl_target(&self) -> PwlTarget {
        match self.segments {
            Some(m) => PwlTarget::Segments(m),
            None => PwlTarget::Tolerance(self.pwl_tol),
        }
    }
}

/// One detection log row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub t: f64,
    pub r_v: f64,
    pub r_t: f64,
    pub j2: f64,
    pub jinf: f64,
    pub segment: usize,
    pub alarm: bool,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    t: f64,
    segment: usize,
    /// Output as seen by the observer that will propagate the estimate.
    y: Vector2<f64>,
    u: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct Detector {
    pub params: BattBeeParams,
    pub config: DetectorConfig,
    pub state_space: StateSpace,
    pub pwl: PwlOcv,
    pub submodels: Vec<LinearSubmodel>,
    /// Certificate and bounds when the nonlinear observer is active.
    pub nonlinear: Option<(Certificate, NonlinearThresholds)>,
    pub thresholds: Thresholds,
    state: Option<DetectorState>,
    pending: Option<Pending>,
}

impl Detector {
    /// Builds the PWL table from the configured tolerance or segment count.
    pub fn new(params: BattBeeParams, config: DetectorConfig) -> Result<Self> {
        let pwl = piecewise_linearize(&params.ocv, config.pwl_target())?;
        Self::with_pwl(params, config, pwl)
    }

    pub fn with_pwl(params: BattBeeParams, config: DetectorConfig, pwl: PwlOcv) -> Result<Self> {
        config.validate()?;
        let ss = assemble_state_space(&params);
        let delta = delta_scalar(&config.delta);
        let (q, r) = (config.q_matrix(), config.r_matrix());
        let submodels = build_submodels(&ss, &pwl, &q, &r, delta)?;

        let nonlinear = match config.observer {
            ObserverKind::Linear => None,
            ObserverKind::Nonlinear => match synthesize_certificate(&ss, &q, &r, pwl.psi_min, pwl.psi_max)? {
                Some(cert) => {
                    let th = threshold_nonlinear(&cert.p, &cert.q, pwl.psi_max.abs().max(pwl.psi_min.abs()), delta, cert.check.stable)?;
                    Some((cert, th))
                }
                None => {
                    log::warn!("no stability certificate over the slope range; using the linear observer bank");
                    None
                }
            },
        };
        let thresholds = match &nonlinear {
            Some((_, th)) => conservative_threshold(vec![ThresholdPair { j2: th.j2, jinf: th.jinf }], delta, config.inflation)?,
            None => conservative_threshold(submodels.iter().map(|m| m.threshold).collect(), delta, config.inflation)?,
        };
        Ok(Detector {
            params,
            config,
            state_space: ss,
            pwl,
            submodels,
            nonlinear,
            thresholds,
            state: None,
            pending: None,
        })
    }

    pub fn is_nonlinear(&self) -> bool {
        self.nonlinear.is_some()
    }

    pub fn state(&self) -> Option<&DetectorState> {
        self.state.as_ref()
    }

    /// Estimate consistent with a resting cell at the first sample.
    pub fn initial_estimate(&self, s: &TelemetrySample) -> Vector4<f64> {
        let v_s = self.params.ocv.inverse(s.voltage - self.params.r_o * s.current);
        Vector4::new(v_s, v_s, s.temp_surf, s.temp_surf)
    }

    /// Starts from an explicit estimate instead of the rest assumption.
    pub fn start_from(&mut self, x_hat: Vector4<f64>) {
        self.state = Some(DetectorState::new(x_hat, self.config.eta));
        self.pending = None;
    }

    /// Forgets the evaluation functions and the alarm after an operator reset.
    pub fn reset_alarm(&mut self) {
        if let Some(s) = self.state.as_mut() {
            s.reset();
        }
    }

    pub fn process(&mut self, s: &TelemetrySample) -> Result<DetectionRow> {
        if ![s.t, s.current, s.voltage, s.temp_surf, s.temp_amb].iter().all(|v| v.is_finite()) {
            return Err(Error::Measurement(format!("non-finite sample at t = {}", s.t)));
        }
        let u = input(s.current, s.temp_amb);
        let y = Vector2::new(s.voltage, s.temp_surf);
        let mut det = match self.state {
            Some(d) => d,
            None => DetectorState::new(self.initial_estimate(s), self.config.eta),
        };

        let dt = match self.pending.take() {
            Some(p) => {
                let dt = s.t - p.t;
                if !(dt > 0.0) {
                    return Err(Error::Measurement(format!("sample time {} does not advance past {}", s.t, p.t)));
                }
                det = match &self.nonlinear {
                    Some((cert, _)) => nonlinear_observer_step(&self.params, &self.state_space, &cert.l, &det, &p.y, &p.u, dt)?.0,
                    None => linear_observer_step(&self.submodels[p.segment], &self.state_space, &det, &p.y, &p.u, dt)?.0,
                };
                dt
            }
            None => self.config.sample_period,
        };

        let (r, segment, y_obs) = match &self.nonlinear {
            Some(_) => (nonlinear_residual(&self.params, &self.state_space, &det.x_hat, &y, &u), 0, y),
            None => {
                let k = self.pwl.segment_select(det.x_hat[1]);
                let m = &self.submodels[k];
                let z = m.shifted_output(&y);
                (linear_residual(m, &self.state_space, &det.x_hat, &z, &u), k, z)
            }
        };
        det.segment = segment;
        det = decide(&jinf_update(&j2_update(&det, &r, dt), &r), &self.thresholds, s.t);

        self.pending = Some(Pending { t: s.t, segment, y: y_obs, u });
        self.state = Some(det);
        Ok(DetectionRow {
            t: s.t,
            r_v: r[0],
            r_t: r[1],
            j2: det.j2(),
            jinf: det.jinf,
            segment,
            alarm: det.alarm,
        })
    }

    pub fn run(&mut self, samples: &[TelemetrySample]) -> Result<Vec<DetectionRow>> {
        samples.iter().map(|s| self.process(s)).collect()
    }
}

/// Time of the first alarm in a detection log.
pub fn first_alarm(rows: &[DetectionRow]) -> Option<f64> {
    rows.iter().find(|r| r.alarm).map(|r| r.t)
}
