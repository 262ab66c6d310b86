use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{TelemetrySample, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub t: f64,
    pub current: f64,
    pub voltage: f64,
    pub temp_surf: f64,
}

/// Measured cycling data for identification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    pub rows: Vec<DataRow>,
    pub t_amb: f64,
    /// Charge capacity hint in coulombs.
    pub capacity: Option<f64>,
    /// State of charge (fraction) at the first row, if known.
    pub soc0: Option<f64>,
    /// Interval over which a fault is known to be active.
    pub fault_window: Option<(f64, f64)>,
}

impl DataSet {
    pub fn new(rows: Vec<DataRow>, t_amb: f64) -> Result<Self> {
        let d = DataSet {
            rows,
            t_amb,
            capacity: None,
            soc0: None,
            fault_window: None,
        };
        d.validate()?;
        Ok(d)
    }

    /// Every `stride`-th row of a simulated trajectory, noise free.
    pub fn from_trajectory(tr: &Trajectory, stride: usize) -> Result<Self> {
        let rows = tr
            .rows
            .iter()
            .step_by(stride.max(1))
            .map(|r| DataRow {
                t: r.t,
                current: r.current,
                voltage: r.voltage,
                temp_surf: r.t_surf,
            })
            .collect();
        DataSet::new(rows, tr.t_amb)
    }

    pub fn from_telemetry(samples: &[TelemetrySample]) -> Result<Self> {
        let t_amb = samples
            .first()
            .map(|s| s.temp_amb)
            .ok_or_else(|| Error::Measurement("empty telemetry".into()))?;
        DataSet::new(
            samples
                .iter()
                .map(|s| DataRow {
                    t: s.t,
                    current: s.current,
                    voltage: s.voltage,
                    temp_surf: s.temp_surf,
                })
                .collect(),
            t_amb,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Measurement("data set has no rows".into()));
        }
        for r in &self.rows {
            if ![r.t, r.current, r.voltage, r.temp_surf].iter().all(|v| v.is_finite()) {
                return Err(Error::Measurement(format!("non-finite value at t = {}", r.t)));
            }
        }
        if self.rows.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Measurement("time must be strictly increasing".into()));
        }
        if !(self.t_amb.is_finite() && self.t_amb > 0.0) {
            return Err(Error::Measurement("ambient temperature must be > 0 K".into()));
        }
        Ok(())
    }

    /// Sampling period of a uniform grid.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.rows.len() < 2 {
            return Err(Error::Precondition("need at least two samples".into()));
        }
        let h = self.rows[1].t - self.rows[0].t;
        for w in self.rows.windows(2) {
            if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.max(1.0) {
                return Err(Error::Precondition("samples must lie on a uniform grid".into()));
            }
        }
        Ok(h)
    }
}
