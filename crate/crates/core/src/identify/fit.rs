//! Output-error identification of circuit, thermal and fault parameters.

use serde::{Deserialize, Serialize};

use super::data::DataSet;
use super::nelder_mead::{self, NelderMeadOptions};
use crate::error::{Error, Result};
use crate::model::{self, BattBeeParams, FaultInputs, SimState};
use crate::presets;
use crate::sim::{self, FaultEvent};

/// Circuit and thermal parameters estimated from normal-operation data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    CB,
    CS,
    RB,
    RO,
    CCore,
    CSurf,
    RCore,
    RSurf0,
}

impl ParamId {
    pub const ALL: [ParamId; 8] = [
        ParamId::CB,
        ParamId::CS,
        ParamId::RB,
        ParamId::RO,
        ParamId::CCore,
        ParamId::CSurf,
        ParamId::RCore,
        ParamId::RSurf0,
    ];
    pub const ELECTRICAL: [ParamId; 4] = [ParamId::CB, ParamId::CS, ParamId::RB, ParamId::RO];
    pub const THERMAL: [ParamId; 4] = [ParamId::CCore, ParamId::CSurf, ParamId::RCore, ParamId::RSurf0];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::CB => "c_b",
            ParamId::CS => "c_s",
            ParamId::RB => "r_b",
            ParamId::RO => "r_o",
            ParamId::CCore => "c_core",
            ParamId::CSurf => "c_surf",
            ParamId::RCore => "r_core",
            ParamId::RSurf0 => "r_surf0",
        }
    }

    pub fn get(self, p: &BattBeeParams) -> f64 {
        match self {
            ParamId::CB => p.c_b,
            ParamId::CS => p.c_s,
            ParamId::RB => p.r_b,
            ParamId::RO => p.r_o,
            ParamId::CCore => p.c_core,
            ParamId::CSurf => p.c_surf,
            ParamId::RCore => p.r_core,
            ParamId::RSurf0 => p.r_surf0,
        }
    }

    pub fn set(self, p: &mut BattBeeParams, v: f64) {
        match self {
            ParamId::CB => p.c_b = v,
            ParamId::CS => p.c_s = v,
            ParamId::RB => p.r_b = v,
            ParamId::RO => p.r_o = v,
            ParamId::CCore => p.c_core = v,
            ParamId::CSurf => p.c_surf = v,
            ParamId::RCore => p.r_core = v,
            ParamId::RSurf0 => p.r_surf0 = v,
        }
    }
}

/// Box constraints per parameter, applied in log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lo: [f64; 8],
    pub hi: [f64; 8],
}

impl ParamBounds {
    /// `[p / factor, p * factor]` for each parameter of `p`.
    pub fn around(p: &BattBeeParams, factor: f64) -> Self {
        ParamBounds {
            lo: ParamId::ALL.map(|id| id.get(p) / factor),
            hi: ParamId::ALL.map(|id| id.get(p) * factor),
        }
    }

    fn validate(&self) -> Result<()> {
        for i in 0..8 {
            let (lo, hi) = (self.lo[i], self.hi[i]);
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi >= lo) {
                return Err(Error::param(
                    ParamId::ALL[i].name(),
                    format!("bounds [{lo}, {hi}] must be positive, finite and ordered"),
                ));
            }
        }
        Ok(())
    }

    fn index(id: ParamId) -> usize {
        ParamId::ALL.iter().position(|&p| p == id).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Weights of the voltage (per V) and temperature (per K) RMSE.
    pub w_v: f64,
    pub w_t: f64,
    pub optimizer: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            w_v: 1.0,
            w_t: 1.0,
            optimizer: NelderMeadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: BattBeeParams,
    pub rmse_v: f64,
    pub rmse_t: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub objective_trace: Vec<f64>,
}

/// Simulated `(V, T_surf)` at the sample times of `data`.
///
/// The current of each row is held until the next; the grid is subdivided so
/// that the step satisfies the stability rule for `p`. The cell starts at
/// rest with uniform temperature equal to the first surface reading; the
/// initial charge comes from the data set or from inverting the OCV at the
/// first sample.
pub fn simulate_outputs(
    p: &BattBeeParams,
    data: &DataSet,
    faults: &[FaultEvent],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = data.uniform_step()?;
    let sub = (h / presets::max_stable_dt(p)).ceil().max(1.0) as usize;
    let dt = h / sub as f64;
    let first = data.rows[0];
    let soc0 = match data.soc0 {
        Some(s) => s,
        None => p.ocv.inverse(first.voltage - p.r_o * first.current),
    };
    let mut state = SimState::uniform(soc0, first.temp_surf);
    let mut f = FaultInputs::NONE;
    let mut next_event = 0;
    let mut v = Vec::with_capacity(data.rows.len());
    let mut t = Vec::with_capacity(data.rows.len());
    for (k, row) in data.rows.iter().enumerate() {
        while next_event < faults.len() && row.t >= faults[next_event].t {
            f = faults[next_event].inputs();
            next_event += 1;
        }
        v.push(model::terminal_voltage(p, &f, &state, row.current).map_err(|e| e.at_time(row.t))?);
        t.push(state.t_surf);
        if k + 1 == data.rows.len() {
            break;
        }
        for _ in 0..sub {
            state = sim::integrate_step(p, &f, &state, row.current, data.t_amb, dt)
                .map_err(|e| e.at_time(row.t))?;
        }
    }
    Ok((v, t))
}

fn rmse(a: &[f64], b: &[f64], mask: impl Fn(usize) -> bool) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..a.len().min(b.len()) {
        if mask(i) {
            sum += (a[i] - b[i]).powi(2);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Voltage and temperature RMSE of `p` over every row of every data set.
pub fn output_rmse(p: &BattBeeParams, data: &[DataSet]) -> Result<(f64, f64)> {
    let (mut sv, mut st, mut n) = (0.0, 0.0, 0usize);
    for d in data {
        let (v, t) = simulate_outputs(p, d, &[])?;
        for (i, r) in d.rows.iter().enumerate() {
            sv += (v[i] - r.voltage).powi(2);
            st += (t[i] - r.temp_surf).powi(2);
        }
        n += d.rows.len();
    }
    Ok(((sv / n as f64).sqrt(), (st / n as f64).sqrt()))
}

struct Stage<'a> {
    ids: &'a [ParamId],
    w_v: f64,
    w_t: f64,
}

/// Fits circuit and thermal parameters to normal-operation data.
///
/// Electrical parameters are searched only when the voltage weight is
/// nonzero and thermal ones only when the temperature weight is. The search
/// runs a voltage-only stage, a temperature-only stage and a joint polish,
/// each a seeded Nelder–Mead with restarts in log coordinates.
pub fn fit_parameters(
    data: &[DataSet],
    init: &BattBeeParams,
    bounds: &ParamBounds,
    opts: &FitOptions,
) -> Result<FitReport> {
    if data.is_empty() {
        return Err(Error::Precondition("need at least one data set".into()));
    }
    for d in data {
        d.validate()?;
        d.uniform_step()?;
    }
    bounds.validate()?;
    if !(opts.w_v >= 0.0 && opts.w_t >= 0.0) || opts.w_v + opts.w_t == 0.0 {
        return Err(Error::param("weights", "must be >= 0 and not both zero"));
    }
    init.validate(data[0].t_amb)?;

    let mut free: Vec<ParamId> = Vec::new();
    if opts.w_v > 0.0 {
        free.extend(ParamId::ELECTRICAL);
    }
    if opts.w_t > 0.0 {
        free.extend(ParamId::THERMAL);
    }
    let mut stages = Vec::new();
    if opts.w_v > 0.0 && opts.w_t > 0.0 {
        stages.push(Stage {
            ids: &ParamId::ELECTRICAL,
            w_v: 1.0,
            w_t: 0.0,
        });
        stages.push(Stage {
            ids: &ParamId::THERMAL,
            w_v: 0.0,
            w_t: 1.0,
        });
    }
    stages.push(Stage {
        ids: &free,
        w_v: opts.w_v,
        w_t: opts.w_t,
    });

    let mut current = init.clone();
    let mut trace = Vec::new();
    let (mut iterations, mut evaluations) = (0, 0);
    for (k, stage) in stages.iter().enumerate() {
        let base = current.clone();
        let decode = |z: &[f64]| -> BattBeeParams {
            let mut p = base.clone();
            for (zi, &id) in z.iter().zip(stage.ids) {
                let b = ParamBounds::index(id);
                let v = (id.get(&base) * zi.exp()).clamp(bounds.lo[b], bounds.hi[b]);
                id.set(&mut p, v);
            }
            p
        };
        let objective = |z: &[f64]| -> f64 {
            let p = decode(z);
            match output_rmse(&p, data) {
                Ok((rv, rt)) => stage.w_v * rv + stage.w_t * rt,
                Err(e) => {
                    log::warn!("candidate rejected: {e}");
                    f64::INFINITY
                }
            }
        };
        let nm = NelderMeadOptions {
            seed: opts.optimizer.seed.wrapping_add(k as u64),
            ..opts.optimizer.clone()
        };
        let m = nelder_mead::minimize(objective, &vec![0.0; stage.ids.len()], &nm);
        iterations += m.iterations;
        evaluations += m.evals;
        trace.extend(m.trace.iter().copied());
        current = decode(&m.x);
        log::info!("fit stage {k}: objective {:.6e}", m.f);
    }
    let (rmse_v, rmse_t) = output_rmse(&current, data)?;
    current.validate(data[0].t_amb)?;
    Ok(FitReport {
        params: current,
        rmse_v,
        rmse_t,
        iterations,
        evaluations,
        objective_trace: trace,
    })
}

/// Parameters describing short-circuit severity and runaway chemistry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultParams {
    pub g_isc1: f64,
    pub g_isc2: f64,
    pub h_ec: f64,
    pub alpha: [f64; 4],
    pub t_onset: f64,
}

impl FaultParams {
    pub fn from_params(p: &BattBeeParams, f: FaultInputs) -> Self {
        FaultParams {
            g_isc1: f.g_isc1,
            g_isc2: f.g_isc2,
            h_ec: p.h_ec,
            alpha: p.alpha,
            t_onset: p.t_onset,
        }
    }

    pub fn apply(&self, base: &BattBeeParams) -> BattBeeParams {
        BattBeeParams {
            h_ec: self.h_ec,
            alpha: self.alpha,
            t_onset: self.t_onset,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultParamId {
    GIsc1,
    GIsc2,
    HEc,
    Alpha1,
    Alpha2,
    Alpha3,
    Alpha4,
    TOnset,
}

impl FaultParamId {
    pub const ALL: [FaultParamId; 8] = [
        FaultParamId::GIsc1,
        FaultParamId::GIsc2,
        FaultParamId::HEc,
        FaultParamId::Alpha1,
        FaultParamId::Alpha2,
        FaultParamId::Alpha3,
        FaultParamId::Alpha4,
        FaultParamId::TOnset,
    ];

    fn slot(self, f: &mut FaultParams) -> &mut f64 {
        match self {
            FaultParamId::GIsc1 => &mut f.g_isc1,
            FaultParamId::GIsc2 => &mut f.g_isc2,
            FaultParamId::HEc => &mut f.h_ec,
            FaultParamId::Alpha1 => &mut f.alpha[0],
            FaultParamId::Alpha2 => &mut f.alpha[1],
            FaultParamId::Alpha3 => &mut f.alpha[2],
            FaultParamId::Alpha4 => &mut f.alpha[3],
            FaultParamId::TOnset => &mut f.t_onset,
        }
    }
}

/// Smallest value a log-scaled fault parameter can take; stands in for zero.
pub const FAULT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultFitOptions {
    pub free: Vec<FaultParamId>,
    pub init: FaultParams,
    pub w_v: f64,
    pub w_t: f64,
    pub optimizer: NelderMeadOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultFitReport {
    pub fault: FaultParams,
    pub rmse_v: f64,
    pub rmse_t: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Fits fault parameters over the labeled fault window, holding the circuit
/// and thermal parameters of `base` fixed. The fault is active from the
/// window start; residuals are scored inside the window only.
pub fn fit_fault_parameters(data: &DataSet, base: &BattBeeParams, opts: &FaultFitOptions) -> Result<FaultFitReport> {
    data.validate()?;
    let (w0, w1) = data
        .fault_window
        .ok_or_else(|| Error::Precondition("data set has no labeled fault window".into()))?;
    if !(w1 > w0) {
        return Err(Error::Precondition("fault window must have positive length".into()));
    }
    let inside: Vec<bool> = data.rows.iter().map(|r| r.t >= w0 && r.t <= w1).collect();
    let meas_v: Vec<f64> = data.rows.iter().map(|r| r.voltage).collect();
    let meas_t: Vec<f64> = data.rows.iter().map(|r| r.temp_surf).collect();

    // Temperature-like parameters move additively, all others in log space.
    let decode = |z: &[f64]| -> FaultParams {
        let mut f = opts.init;
        for (zi, &id) in z.iter().zip(&opts.free) {
            let slot = id.slot(&mut f);
            *slot = if id == FaultParamId::TOnset {
                *slot + 10.0 * zi
            } else {
                (slot.max(FAULT_FLOOR) * zi.exp()).clamp(FAULT_FLOOR, 1e12)
            };
        }
        f
    };
    let score = |f: &FaultParams| -> Result<(f64, f64)> {
        let p = f.apply(base);
        let ev = [FaultEvent {
            t: w0,
            g_isc1: f.g_isc1,
            g_isc2: f.g_isc2,
        }];
        let (v, t) = simulate_outputs(&p, data, &ev)?;
        Ok((rmse(&v, &meas_v, |i| inside[i]), rmse(&t, &meas_t, |i| inside[i])))
    };
    let objective = |z: &[f64]| match score(&decode(z)) {
        Ok((rv, rt)) => opts.w_v * rv + opts.w_t * rt,
        Err(e) => {
            log::warn!("fault candidate rejected: {e}");
            f64::INFINITY
        }
    };
    let m = nelder_mead::minimize(objective, &vec![0.0; opts.free.len()], &opts.optimizer);
    let fault = decode(&m.x);
    let (rmse_v, rmse_t) = score(&fault)?;
    Ok(FaultFitReport {
        fault,
        rmse_v,
        rmse_t,
        iterations: m.iterations,
        evaluations: m.evals,
    })
}
