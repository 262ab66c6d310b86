//! Scenario files: TOML with `[params]`, `[scenario]`, `[[faults]]`,
//! `[detector]` and an optional `[telemetry]` section.

use std::path::Path;

use battbee_core::detect::DetectorConfig;
use battbee_core::presets::T_AMB;
use battbee_core::sim::MeasurementNoise;
use battbee_core::{BattBeeParams, Error, FaultEvent, Interpolation, Result, Scenario, SimState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub params: BattBeeParams,
    pub scenario: ScenarioSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<FaultEvent>,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub telemetry: Option<TelemetrySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_t_amb")]
    pub t_amb: f64,
    /// Initial state of charge, fraction.
    pub soc0: f64,
    /// Initial uniform cell temperature; ambient when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp0: Option<f64>,
    /// `[t, I]` pairs in seconds and amperes, positive current charges.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub current: Vec<[f64; 2]>,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_peak: Option<f64>,
}

fn default_t_amb() -> f64 {
    T_AMB
}

/// How synthetic telemetry is drawn from a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetrySection {
    /// Every `stride`-th simulation row becomes a sample.
    pub stride: usize,
    #[serde(default)]
    pub sigma_v: f64,
    #[serde(default)]
    pub sigma_t: f64,
    #[serde(default)]
    pub seed: u64,
}

impl TelemetrySection {
    pub fn noise(&self) -> MeasurementNoise {
        MeasurementNoise {
            sigma_v: self.sigma_v,
            sigma_t: self.sigma_t,
        }
    }
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Scenario {
        let s = &self.scenario;
        Scenario {
            dt: s.dt,
            t_end: s.t_end,
            t_amb: s.t_amb,
            current: s.current.iter().map(|&[t, i]| (t, i)).collect(),
            interpolation: s.interpolation,
            faults: self.faults.clone(),
            initial: SimState::uniform(s.soc0, s.temp0.unwrap_or(s.t_amb)),
            t_peak: s.t_peak,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate(self.scenario.t_amb)?;
        self.to_scenario().validate(&self.params)?;
        self.detector.validate()?;
        if let Some(tel) = &self.telemetry {
            if tel.stride == 0 {
                return Err(Error::Scenario("telemetry stride must be >= 1".into()));
            }
            if !(tel.sigma_v >= 0.0 && tel.sigma_t >= 0.0) {
                return Err(Error::Scenario("telemetry noise must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse {
            line: None,
            message: e.to_string(),
        })
    }
}

/// 1-based line of a byte offset.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses and validates a scenario file. Syntax and schema errors carry the
/// line they occur on.
pub fn parse_scenario_file(text: &str) -> Result<ScenarioFile> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    file.validate()?;
    Ok(file)
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_file(&text)
}

/// Parameters only, as written by `identify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub params: BattBeeParams,
}

pub fn parse_params_file(text: &str) -> Result<BattBeeParams> {
    let file: ParamsFile = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    Ok(file.params)
}

pub fn params_to_toml(p: &BattBeeParams) -> Result<String> {
    toml::to_string(&ParamsFile { params: p.clone() }).map_err(|e| Error::Parse {
        line: None,
        message: e.to_string(),
    })
}
