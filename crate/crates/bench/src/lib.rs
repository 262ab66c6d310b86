//! Shared fixtures for the benchmarks.

use battbee_core::presets;
use battbee_core::sim::{run_scenario, sample_telemetry, MeasurementNoise, TelemetrySample};
use battbee_core::{BattBeeParams, FaultEvent, Scenario};

pub fn params() -> BattBeeParams {
    presets::reference_params()
}

/// Alternating 20 A pulses every 30 s from 90 % charge.
pub fn pulse_scenario(t_end: f64) -> Scenario {
    let current = (0..(t_end / 30.0) as usize)
        .map(|k| (30.0 * k as f64, if k % 2 == 0 { -20.0 } else { 20.0 }))
        .collect();
    Scenario::rest(0.9, t_end, 0.1).with_current(current)
}

/// One-second telemetry of a short appearing halfway through a rest period.
pub fn faulted_telemetry(t_end: f64) -> Vec<TelemetrySample> {
    let sc = Scenario::rest(1.0, t_end, 0.1).with_faults(vec![FaultEvent {
        t: t_end / 2.0,
        g_isc1: 1.0,
        g_isc2: 50.0,
    }]);
    let tr = run_scenario(&params(), &sc).expect("fixture scenario runs");
    sample_telemetry(&tr, 10, MeasurementNoise::default(), 0).expect("fixture sampling")
}
