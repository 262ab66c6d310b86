//! Subcommand implementations.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use battbee_core::detect::{first_alarm, Detector, DetectorConfig};
use battbee_core::identify::{self, piecewise_linearize, DataSet, FitOptions, ParamBounds, PwlOcv, PwlTarget};
use battbee_core::sim::{run_scenario, sample_telemetry, MeasurementNoise, TelemetrySample};
use battbee_core::spm::{default_spm_params, reduce_to_battbee, spm_run, SpmState};
use battbee_core::{BattBeeParams, Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_scenario_file, params_to_toml, ScenarioFile};
use crate::formats;
use crate::report::{now_unix, RunReport};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// Unreadable or malformed input, including invalid configuration.
    pub const PARSE: u8 = 2;
    /// Numerical failure while running.
    pub const NUMERIC: u8 = 3;
    /// No stabilizing observer gain exists.
    pub const DETECTABILITY: u8 = 4;
    /// Detection finished and raised an alarm.
    pub const ALARM: u8 = 10;
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::Io(_)
        | Error::InvalidParameter { .. }
        | Error::Scenario(_)
        | Error::Measurement(_)
        | Error::Precondition(_) => exit::PARSE,
        Error::Synthesis(_) => exit::DETECTABILITY,
        _ => exit::NUMERIC,
    }
}

#[derive(Debug, Parser)]
#[command(name = "battbee", version, about = "Cell simulation, identification and ISC/TR fault detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Fit circuit and thermal parameters to telemetry.
    Identify(IdentifyArgs),
    /// Write the piecewise-linear OCV table.
    Linearize(LinearizeArgs),
    /// Print per-segment and conservative residual thresholds.
    Threshold(ThresholdArgs),
    /// Run the fault detector over telemetry.
    Detect(DetectArgs),
    /// Compare the single-particle reference against the reduced circuit model.
    OracleCompare(OracleArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario step.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Scenario file whose parameters are the initial guess.
    #[arg(long)]
    pub config: PathBuf,
    /// Telemetry CSV; repeat for several data sets.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    /// Output parameter file (TOML).
    #[arg(long)]
    pub out: PathBuf,
    /// Initial state of charge of every data set; estimated from the first
    /// voltage when absent.
    #[arg(long)]
    pub soc0: Option<f64>,
    /// Refit the OCV polynomial of this order from the first data set.
    #[arg(long)]
    pub fit_ocv: Option<usize>,
    /// Multiplicative half-width of the search box around the initial guess.
    #[arg(long, default_value_t = 2.0)]
    pub bounds: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LinearizeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Maximum deviation in volts.
    #[arg(long, conflicts_with = "segments")]
    pub tol: Option<f64>,
    /// Fixed number of segments.
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectorOverrides {
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub inflation: Option<f64>,
    /// Segment table; linearized from the configured tolerance when absent.
    #[arg(long)]
    pub pwl: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub detector: DetectorOverrides,
    /// Report file (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Telemetry CSV. Without it the scenario is simulated and sampled as
    /// configured in `[telemetry]`.
    #[arg(long)]
    pub telemetry: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorOverrides,
    /// Detection log CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the telemetry noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario step for synthetic telemetry.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Scenario file: thermal parameters, current profile, step and initial
    /// state of charge.
    #[arg(long)]
    pub config: PathBuf,
    /// Largest admissible voltage RMSE as a fraction of the reference swing.
    #[arg(long, default_value_t = 0.05)]
    pub gate: f64,
    /// Voltage comparison CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Result of a successful command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Alarm,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Done => exit::OK,
            Outcome::Alarm => exit::ALARM,
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Identify(a) => identify(&a),
        Command::Linearize(a) => linearize(&a),
        Command::Threshold(a) => threshold(&a),
        Command::Detect(a) => detect(&a),
        Command::OracleCompare(a) => oracle_compare(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn finish(report: RunReport, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => report.write(p),
        None => Ok(()),
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    let mut cfg = load_scenario_file(&a.config)?;
    if let Some(dt) = a.dt {
        cfg.scenario.dt = dt;
        cfg.validate()?;
    }
    let tr = run_scenario(&cfg.params, &cfg.to_scenario())?;
    formats::write_trajectory(create(&a.out)?, &tr, now_unix())?;
    log::info!("wrote {} rows to {}", tr.len(), a.out.display());

    #[derive(Serialize)]
    struct Summary {
        rows: usize,
        clamp_events: usize,
        final_soc: f64,
        max_t_core: f64,
    }
    let summary = Summary {
        rows: tr.len(),
        clamp_events: tr.clamp_events,
        final_soc: tr.rows.last().map_or(f64::NAN, |r| r.soc),
        max_t_core: tr.rows.iter().map(|r| r.t_core).fold(f64::NEG_INFINITY, f64::max),
    };
    let mut report = RunReport::new("simulate").with_config(&cfg).with_results(&summary);
    report.input("config", &a.config)?;
    finish(report, a.report.as_deref())?;
    Ok(Outcome::Done)
}

pub fn identify(a: &IdentifyArgs) -> Result<Outcome> {
    let cfg = load_scenario_file(&a.config)?;
    let mut data = Vec::with_capacity(a.data.len());
    for path in &a.data {
        let samples = formats::read_telemetry(open(path)?, cfg.scenario.t_amb)?;
        let mut d = DataSet::from_telemetry(&samples)?;
        d.soc0 = a.soc0;
        data.push(d);
    }
    let mut init = cfg.params.clone();
    if let Some(order) = a.fit_ocv {
        init.ocv = identify::fit_ocv(&data[0], order)?;
    }
    let mut opts = FitOptions::default();
    opts.optimizer.seed = a.seed;
    let fit = identify::fit_parameters(&data, &init, &ParamBounds::around(&init, a.bounds), &opts)?;
    std::fs::write(&a.out, params_to_toml(&fit.params)?).map_err(|e| Error::Io(format!("{}: {e}", a.out.display())))?;
    println!("rmse_v = {:.6e} V, rmse_t = {:.6e} K", fit.rmse_v, fit.rmse_t);

    #[derive(Serialize)]
    struct Summary<'a> {
        rmse_v: f64,
        rmse_t: f64,
        evaluations: usize,
        params: &'a BattBeeParams,
    }
    let mut report = RunReport::new("identify")
        .with_config(&(&cfg, a.bounds, a.seed, a.soc0, a.fit_ocv))
        .with_results(&Summary {
            rmse_v: fit.rmse_v,
            rmse_t: fit.rmse_t,
            evaluations: fit.evaluations,
            params: &fit.params,
        });
    report.input("config", &a.config)?;
    for (k, path) in a.data.iter().enumerate() {
        report.input(&format!("data{k}"), path)?;
    }
    finish(report, a.report.as_deref())?;
    Ok(Outcome::Done)
}

pub fn linearize(a: &LinearizeArgs) -> Result<Outcome> {
    let cfg = load_scenario_file(&a.config)?;
    let target = match (a.segments, a.tol) {
        (Some(m), _) => PwlTarget::Segments(m),
        (None, Some(tol)) => PwlTarget::Tolerance(tol),
        (None, None) => cfg.detector.pwl_target(),
    };
    let pwl = piecewise_linearize(&cfg.params.ocv, target)?;
    formats::write_pwl(create(&a.out)?, &pwl)?;
    let max_error = pwl.max_error(&cfg.params.ocv);
    println!("{} segments, max deviation {max_error:.6e} V", pwl.len());

    let mut report = RunReport::new("linearize")
        .with_config(&(&cfg.params, a.tol, a.segments))
        .with_results(&serde_json::json!({ "segments": pwl.segments, "psi_min": pwl.psi_min, "psi_max": pwl.psi_max, "max_error": max_error }));
    report.input("config", &a.config)?;
    finish(report, a.report.as_deref())?;
    Ok(Outcome::Done)
}

fn detector_config(cfg: &ScenarioFile, o: &DetectorOverrides) -> Result<DetectorConfig> {
    let mut d = cfg.detector.clone();
    if let Some(eta) = o.eta {
        d.eta = eta;
    }
    if let Some(inflation) = o.inflation {
        d.inflation = inflation;
    }
    d.validate()?;
    Ok(d)
}

fn build_detector(cfg: &ScenarioFile, o: &DetectorOverrides) -> Result<Detector> {
    let dcfg = detector_config(cfg, o)?;
    match &o.pwl {
        Some(path) => {
            let pwl = formats::read_pwl(open(path)?, Some(cfg.params.ocv.slope_bounds()))?;
            Detector::with_pwl(cfg.params.clone(), dcfg, pwl)
        }
        None => Detector::new(cfg.params.clone(), dcfg),
    }
}

#[derive(Debug, Serialize)]
struct ThresholdSummary<'a> {
    observer: &'static str,
    delta: f64,
    inflation: f64,
    per_segment: Vec<(usize, f64, f64)>,
    j2: f64,
    jinf: f64,
    pwl: &'a PwlOcv,
}

fn threshold_summary(d: &Detector) -> ThresholdSummary<'_> {
    ThresholdSummary {
        observer: if d.is_nonlinear() { "nonlinear" } else { "linear" },
        delta: d.thresholds.delta,
        inflation: d.thresholds.inflation,
        per_segment: d.thresholds.per_segment.iter().enumerate().map(|(i, t)| (i, t.j2, t.jinf)).collect(),
        j2: d.thresholds.j2,
        jinf: d.thresholds.jinf,
        pwl: &d.pwl,
    }
}

pub fn threshold(a: &ThresholdArgs) -> Result<Outcome> {
    let cfg = load_scenario_file(&a.config)?;
    let d = build_detector(&cfg, &a.detector)?;
    println!("segment,j2,jinf");
    for (i, t) in d.thresholds.per_segment.iter().enumerate() {
        println!("{i},{:.8e},{:.8e}", t.j2, t.jinf);
    }
    println!("conservative,{:.8e},{:.8e}", d.thresholds.j2, d.thresholds.jinf);
    // What the detector compares against once inflation is applied.
    let k = d.thresholds.inflation;
    println!("alarm_limits,{:.8e},{:.8e}", k * d.thresholds.j2, k * d.thresholds.jinf);

    let mut report = RunReport::new("threshold")
        .with_config(&d.config)
        .with_results(&threshold_summary(&d));
    report.input("config", &a.config)?;
    if let Some(p) = &a.detector.pwl {
        report.input("pwl", p)?;
    }
    finish(report, a.out.as_deref())?;
    Ok(Outcome::Done)
}

fn synthetic_telemetry(cfg: &ScenarioFile, seed: Option<u64>) -> Result<Vec<TelemetrySample>> {
    let tel = cfg.telemetry.unwrap_or(crate::config::TelemetrySection {
        stride: 1,
        sigma_v: 0.0,
        sigma_t: 0.0,
        seed: 0,
    });
    let tr = run_scenario(&cfg.params, &cfg.to_scenario())?;
    let noise = MeasurementNoise {
        sigma_v: tel.sigma_v,
        sigma_t: tel.sigma_t,
    };
    sample_telemetry(&tr, tel.stride, noise, seed.unwrap_or(tel.seed))
}

pub fn detect(a: &DetectArgs) -> Result<Outcome> {
    let mut cfg = load_scenario_file(&a.config)?;
    if let Some(dt) = a.dt {
        cfg.scenario.dt = dt;
        cfg.validate()?;
    }
    let samples = match &a.telemetry {
        Some(path) => formats::read_telemetry(open(path)?, cfg.scenario.t_amb)?,
        None => synthetic_telemetry(&cfg, a.seed)?,
    };
    let mut det = build_detector(&cfg, &a.detector)?;
    let rows = det.run(&samples)?;
    formats::write_detection_log(create(&a.out)?, &rows)?;
    let alarm = first_alarm(&rows);
    match alarm {
        Some(t) => println!("alarm at t = {t} s"),
        None => println!("no alarm"),
    }

    #[derive(Serialize)]
    struct Summary<'a> {
        samples: usize,
        alarm_time: Option<f64>,
        thresholds: ThresholdSummary<'a>,
    }
    let mut report = RunReport::new("detect").with_config(&(&cfg, &det.config)).with_results(&Summary {
        samples: samples.len(),
        alarm_time: alarm,
        thresholds: threshold_summary(&det),
    });
    report.input("config", &a.config)?;
    if let Some(p) = &a.telemetry {
        report.input("telemetry", p)?;
    }
    finish(report, a.report.as_deref())?;
    Ok(if alarm.is_some() { Outcome::Alarm } else { Outcome::Done })
}

/// RMSE between the reference and the reduced model, with the reference
/// voltage swing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleComparison {
    pub rmse: f64,
    pub swing: f64,
    pub lithium_drift: f64,
}

pub fn oracle_compare(a: &OracleArgs) -> Result<Outcome> {
    let cfg = load_scenario_file(&a.config)?;
    let spm = default_spm_params();
    let reduced = reduce_to_battbee(&spm, &cfg.params)?;
    let mut sc = cfg.to_scenario();
    sc.faults.clear();
    let tr = run_scenario(&reduced, &sc)?;
    let initial = SpmState::at_soc(&spm, cfg.scenario.soc0);
    let reference = spm_run(&spm, initial, &sc)?;

    let n = reference.len() as f64;
    let rmse = (tr.rows.iter().zip(&reference).map(|(m, r)| (m.voltage - r.voltage).powi(2)).sum::<f64>() / n).sqrt();
    let (lo, hi) = reference
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.voltage), hi.max(r.voltage)));
    let m0 = spm.total_moles(&reference[0].state);
    let m1 = spm.total_moles(&reference[reference.len() - 1].state);
    let cmp = OracleComparison {
        rmse,
        swing: hi - lo,
        lithium_drift: (m1 - m0).abs() / m0,
    };
    println!("rmse = {:.6e} V, swing = {:.6e} V, ratio = {:.4}", cmp.rmse, cmp.swing, cmp.rmse / cmp.swing);

    if let Some(out) = &a.out {
        let mut w = create(out)?;
        use std::io::Write;
        (|| -> std::io::Result<()> {
            writeln!(w, "t_s,voltage_ref_V,voltage_model_V")?;
            for (m, r) in tr.rows.iter().zip(&reference) {
                writeln!(w, "{:.8e},{:.8e},{:.8e}", r.t, r.voltage, m.voltage)?;
            }
            w.flush()
        })()
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    let mut report = RunReport::new("oracle-compare")
        .with_config(&(&cfg, a.gate))
        .with_results(&(cmp, &reduced));
    report.input("config", &a.config)?;
    finish(report, a.report.as_deref())?;

    if cmp.swing > 0.0 && cmp.rmse > a.gate * cmp.swing {
        return Err(Error::Conditioning(format!(
            "voltage RMSE {:.4e} V exceeds {} of the {:.4e} V swing",
            cmp.rmse, a.gate, cmp.swing
        )));
    }
    Ok(Outcome::Done)
}
