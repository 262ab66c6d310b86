//! Observer-based fault detection with guaranteed residual thresholds.

pub mod detector;
pub mod evaluate;
pub mod kalman;
pub mod observer;
pub mod stability;
pub mod state_space;
pub mod thresholds;

pub use detector::{first_alarm, DetectionRow, Detector, DetectorConfig, ObserverKind};
pub use evaluate::{decide, j2_update, jinf_update, DetectorState};
pub use kalman::{kalman_gain, kalman_gain_dense, KalmanSolution};
pub use observer::{build_submodels, linear_observer_step, nonlinear_observer_step, LinearSubmodel};
pub use stability::{synthesize_certificate, verify_stability, Certificate, StabilityCheck};
pub use state_space::{assemble_state_space, fault_signals, input, output_matrix, StateSpace};
pub use thresholds::{
    conservative_threshold, delta_scalar, peak_output_gain, solve_lyapunov, threshold_linear, threshold_nonlinear,
    NonlinearThresholds, ThresholdPair, Thresholds,
};
