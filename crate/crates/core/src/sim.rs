//! Fixed-step integration of the cell model under a scenario.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, BattBeeParams, FaultInputs, HeatRates, SimState};
use crate::presets;

/// How the sampled current profile is evaluated between samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    #[default]
    Hold,
    Linear,
}

/// Step change of the short-circuit conductances at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEvent {
    pub t: f64,
    #[serde(default)]
    pub g_isc1: f64,
    #[serde(default)]
    pub g_isc2: f64,
}

impl FaultEvent {
    pub fn inputs(&self) -> FaultInputs {
        FaultInputs {
            g_isc1: self.g_isc1,
            g_isc2: self.g_isc2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dt: f64,
    pub t_end: f64,
    pub t_amb: f64,
    /// `(t, I)` samples; empty means zero current.
    pub current: Vec<(f64, f64)>,
    pub interpolation: Interpolation,
    pub faults: Vec<FaultEvent>,
    pub initial: SimState,
    /// Overrides the depletion temperature of the parameter set.
    pub t_peak: Option<f64>,
}

impl Scenario {
    /// Rest at `soc` (fraction) in thermal equilibrium with ambient.
    pub fn rest(soc: f64, t_end: f64, dt: f64) -> Self {
        Scenario {
            dt,
            t_end,
            t_amb: presets::T_AMB,
            current: Vec::new(),
            interpolation: Interpolation::Hold,
            faults: Vec::new(),
            initial: SimState::uniform(soc, presets::T_AMB),
            t_peak: None,
        }
    }

    pub fn with_current(mut self, samples: Vec<(f64, f64)>) -> Self {
        self.current = samples;
        self
    }

    pub fn with_faults(mut self, faults: Vec<FaultEvent>) -> Self {
        self.faults = faults;
        self
    }

    /// Number of integration steps; the grid has one more row.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self, p: &BattBeeParams) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Scenario(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Scenario(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        let limit = presets::max_stable_dt(p);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::Scenario(format!(
                "dt = {} s exceeds min(R_b C_s, R_core C_surf)/20 = {limit:.6} s",
                self.dt
            )));
        }
        if !(self.t_amb.is_finite() && self.t_amb > 0.0) {
            return Err(Error::Scenario(format!("t_amb must be > 0 K, got {}", self.t_amb)));
        }
        if self.current.iter().any(|(t, i)| !t.is_finite() || !i.is_finite()) {
            return Err(Error::Scenario("current samples must be finite".into()));
        }
        if self.current.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Scenario("current samples must be strictly increasing in time".into()));
        }
        if self.faults.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Scenario("fault events must be strictly increasing in time".into()));
        }
        for e in &self.faults {
            if !e.t.is_finite() {
                return Err(Error::Scenario("fault event time must be finite".into()));
            }
            FaultInputs::new(e.g_isc1, e.g_isc2)?;
        }
        let s = &self.initial;
        if !(0.0..=1.0).contains(&s.v_b) || !(0.0..=1.0).contains(&s.v_s) {
            return Err(Error::Scenario("initial V_b and V_s must lie in [0, 1]".into()));
        }
        if !(s.t_core >= 0.0 && s.t_surf >= 0.0) {
            return Err(Error::Scenario("initial temperatures must be >= 0 K".into()));
        }
        self.effective_params(p).validate(self.t_amb)
    }

    fn effective_params(&self, p: &BattBeeParams) -> BattBeeParams {
        match self.t_peak {
            Some(t_peak) => BattBeeParams { t_peak, ..p.clone() },
            None => p.clone(),
        }
    }

    /// Applied current at time `t`.
    pub fn current_at(&self, t: f64) -> f64 {
        let c = &self.current;
        if c.is_empty() {
            return 0.0;
        }
        // Index of the last sample with time <= t.
        let k = c.partition_point(|(ts, _)| *ts <= t);
        if k == 0 {
            return c[0].1;
        }
        let (t0, i0) = c[k - 1];
        match (self.interpolation, c.get(k)) {
            (Interpolation::Linear, Some(&(t1, i1))) => i0 + (i1 - i0) * (t - t0) / (t1 - t0),
            _ => i0,
        }
    }
}

/// One row of a simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub v_b: f64,
    pub v_s: f64,
    pub soc: f64,
    pub voltage: f64,
    pub t_core: f64,
    pub t_surf: f64,
    pub q_ohm: f64,
    pub q_ec: f64,
    pub q_decomp: f64,
    pub q_exo: f64,
    pub current: f64,
    pub g_isc1: f64,
    pub g_isc2: f64,
}

impl TrajectoryRow {
    pub fn heat(&self) -> HeatRates {
        HeatRates::new(self.q_ohm, self.q_ec, self.q_decomp)
    }

    pub fn is_faulted(&self) -> bool {
        self.g_isc1 > 0.0 || self.g_isc2 > 0.0
    }

    pub fn state(&self) -> SimState {
        SimState {
            v_b: self.v_b,
            v_s: self.v_s,
            t_core: self.t_core,
            t_surf: self.t_surf,
            decomp_depleted: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub t_amb: f64,
    pub rows: Vec<TrajectoryRow>,
    /// Steps after which a node voltage had to be clamped into `[0, 1]`.
    pub clamp_events: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, f: impl Fn(&TrajectoryRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

/// Outcome of a single step: the new state and whether clamping fired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub state: SimState,
    pub clamped: bool,
}

/// One classical RK4 step with current and faults held constant, followed by
/// clamping and the depletion-latch update.
pub fn integrate_step(
    p: &BattBeeParams,
    f: &FaultInputs,
    s: &SimState,
    current: f64,
    t_amb: f64,
    dt: f64,
) -> Result<SimState> {
    integrate_step_detailed(p, f, s, current, t_amb, dt).map(|r| r.state)
}

pub fn integrate_step_detailed(
    p: &BattBeeParams,
    f: &FaultInputs,
    s: &SimState,
    current: f64,
    t_amb: f64,
    dt: f64,
) -> Result<StepResult> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Scenario(format!("dt must be > 0, got {dt}")));
    }
    let x = s.to_array();
    let eval = |y: [f64; 4]| model::derivatives(p, f, &s.with_array(y), current, t_amb);
    let axpy = |a: f64, k: &[f64; 4]| -> [f64; 4] { std::array::from_fn(|i| x[i] + a * k[i]) };

    let k1 = eval(x)?;
    let k2 = eval(axpy(0.5 * dt, &k1))?;
    let k3 = eval(axpy(0.5 * dt, &k2))?;
    let k4 = eval(axpy(dt, &k3))?;
    let mut next: [f64; 4] =
        std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));

    let mut clamped = false;
    for v in &mut next[..2] {
        if *v < 0.0 || *v > 1.0 {
            log::debug!("clamping node voltage {v} into [0, 1]");
            *v = v.clamp(0.0, 1.0);
            clamped = true;
        }
    }
    for t in &mut next[2..] {
        *t = t.max(0.0);
    }
    let mut state = s.with_array(next);
    if !state.decomp_depleted && (state.t_core >= p.t_peak || state.t_surf >= p.t_peak) {
        log::info!("decomposition heat depleted at T_core = {:.1} K", state.t_core);
        state.decomp_depleted = true;
    }
    Ok(StepResult { state, clamped })
}

fn row(p: &BattBeeParams, f: &FaultInputs, s: &SimState, t: f64, current: f64) -> Result<TrajectoryRow> {
    let heat = model::heat_rates(p, f, s, current);
    Ok(TrajectoryRow {
        t,
        v_b: s.v_b,
        v_s: s.v_s,
        soc: model::soc(p, s),
        voltage: model::terminal_voltage(p, f, s, current)?,
        t_core: s.t_core,
        t_surf: s.t_surf,
        q_ohm: heat.q_ohm,
        q_ec: heat.q_ec,
        q_decomp: heat.q_decomp,
        q_exo: heat.q_exo,
        current,
        g_isc1: f.g_isc1,
        g_isc2: f.g_isc2,
    })
}

/// Integrates `sc` on the uniform grid `t_k = k dt`.
///
/// A fault event takes effect from the first grid point at or after its time.
/// Each row records the inputs held over the following step.
pub fn run_scenario(p: &BattBeeParams, sc: &Scenario) -> Result<Trajectory> {
    sc.validate(p)?;
    let p = sc.effective_params(p);
    let n = sc.steps();
    let mut rows = Vec::with_capacity(n + 1);
    let mut state = sc.initial;
    let mut faults = FaultInputs::NONE;
    let mut next_event = 0;
    let mut clamp_events = 0;
    for k in 0..=n {
        let t = k as f64 * sc.dt;
        while next_event < sc.faults.len() && t >= sc.faults[next_event].t {
            faults = sc.faults[next_event].inputs();
            log::debug!("fault event {next_event} active from t = {t} s");
            next_event += 1;
        }
        let current = sc.current_at(t);
        rows.push(row(&p, &faults, &state, t, current).map_err(|e| e.at_time(t))?);
        if k == n {
            break;
        }
        let step = integrate_step_detailed(&p, &faults, &state, current, sc.t_amb, sc.dt)
            .map_err(|e| e.at_time(t))?;
        clamp_events += step.clamped as usize;
        state = step.state;
    }
    if clamp_events > 0 {
        log::info!("{clamp_events} steps clamped a node voltage into [0, 1]");
    }
    Ok(Trajectory {
        dt: sc.dt,
        t_amb: sc.t_amb,
        rows,
        clamp_events,
    })
}

/// Largest deviation, in percentage points, between the recorded SoC and
/// Coulomb counting of the applied current.
///
/// The simulator holds each row's current over the following step, so the
/// current integral is the left-endpoint sum over rows, which is exact for
/// the applied input.
pub fn coulomb_check(tr: &Trajectory, p: &BattBeeParams) -> Result<f64> {
    if tr.rows.iter().any(TrajectoryRow::is_faulted) {
        return Err(Error::Precondition(
            "Coulomb check needs a fault-free trajectory".into(),
        ));
    }
    let Some(first) = tr.rows.first() else {
        return Ok(0.0);
    };
    let scale = 100.0 / p.capacity();
    let mut charge = 0.0;
    let mut worst: f64 = 0.0;
    for w in tr.rows.windows(2) {
        charge += w[0].current * (w[1].t - w[0].t);
        worst = worst.max((w[1].soc - first.soc - scale * charge).abs());
    }
    Ok(worst)
}

/// Measured channels at one sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub t: f64,
    pub current: f64,
    pub voltage: f64,
    pub temp_surf: f64,
    pub temp_amb: f64,
}

/// Gaussian measurement noise on voltage and surface temperature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementNoise {
    #[serde(default)]
    pub sigma_v: f64,
    #[serde(default)]
    pub sigma_t: f64,
}

/// Samples every `stride`-th trajectory row, adding seeded measurement noise.
pub fn sample_telemetry(
    tr: &Trajectory,
    stride: usize,
    noise: MeasurementNoise,
    seed: u64,
) -> Result<Vec<TelemetrySample>> {
    if stride == 0 {
        return Err(Error::Scenario("sampling stride must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = Normal::new(0.0, noise.sigma_v).map_err(|e| Error::param("sigma_v", e.to_string()))?;
    let nt = Normal::new(0.0, noise.sigma_t).map_err(|e| Error::param("sigma_t", e.to_string()))?;
    Ok(tr
        .rows
        .iter()
        .step_by(stride)
        .map(|r| TelemetrySample {
            t: r.t,
            current: r.current,
            voltage: r.voltage + nv.sample(&mut rng),
            temp_surf: r.t_surf + nt.sample(&mut rng),
            temp_amb: tr.t_amb,
        })
        .collect())
}
