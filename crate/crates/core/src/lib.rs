//! Electro-thermal equivalent-circuit model of lithium-ion cells under
//! internal short circuit and thermal runaway, with observer-based fault
//! detection and guaranteed residual thresholds.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detect;
pub mod error;
pub mod identify;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod presets;
pub mod sim;
pub mod spm;

pub use error::{Error, Result};
pub use identify::{DataSet, PwlOcv};
pub use model::{BattBeeParams, FaultInputs, HeatRates, OcvPolynomial, SimState};
pub use sim::{FaultEvent, Interpolation, Scenario, Trajectory, TrajectoryRow};
