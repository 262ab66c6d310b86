//! Governing equations of the electro-thermal cell model.
//!
//! The electrical sub-circuit is a double-capacitor network (bulk node `V_b`,
//! surface node `V_s`, both normalized to `[0, 1]`) extended with two internal
//! short-circuit conductances. The thermal sub-circuit is a lumped core/surface
//! two-node network heated by ohmic losses, ISC-driven electrochemical heat and
//! active-material decomposition.
//!
//! Every function in this module is pure.

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::poly::Polynomial;

/// Tolerance when checking `V_s` against `[0, 1]`.
pub const DOMAIN_TOL: f64 = 1e-9;

/// Grid used for the monotonicity and positivity scans on construction.
const SCAN_POINTS: usize = 2001;

/// Open-circuit voltage `U(V_s) = sum_i lambda_i V_s^i`.
///
/// Construction rejects curves that decrease anywhere on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OcvPolynomial {
    poly: Polynomial,
    slope: Polynomial,
}

impl OcvPolynomial {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::param("ocv", "needs at least one coefficient"));
        }
        if lambda.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("ocv", "coefficients must be finite"));
        }
        let poly = Polynomial::new(lambda);
        let scale = poly.coefficients().iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let mut prev = poly.eval(0.0);
        for k in 1..SCAN_POINTS {
            let v = poly.eval(k as f64 / (SCAN_POINTS - 1) as f64);
            if v < prev - 1e-12 * scale {
                return Err(Error::NotMonotone(format!(
                    "U decreases near V_s = {:.4}",
                    k as f64 / (SCAN_POINTS - 1) as f64
                )));
            }
            prev = v;
        }
        let slope = poly.derivative();
        Ok(OcvPolynomial { poly, slope })
    }

    pub fn coefficients(&self) -> &[f64] {
        self.poly.coefficients()
    }

    pub fn order(&self) -> usize {
        self.poly.degree()
    }

    /// `U(V_s)`, rejecting arguments outside `[0, 1]` by more than [`DOMAIN_TOL`].
    pub fn eval(&self, v_s: f64) -> Result<f64> {
        if !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&v_s) {
            return Err(Error::Domain {
                what: "V_s",
                value: v_s,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(self.poly.eval(v_s.clamp(0.0, 1.0)))
    }

    /// `U` continued linearly beyond `[0, 1]` with the endpoint slopes.
    ///
    /// Observers evaluate the output map at estimates that may leave the
    /// physical range; the linear continuation keeps every secant slope
    /// inside the slope bounds of the curve on `[0, 1]`.
    pub fn eval_extended(&self, v_s: f64) -> f64 {
        if v_s < 0.0 {
            self.poly.eval(0.0) + self.slope.eval(0.0) * v_s
        } else if v_s > 1.0 {
            self.poly.eval(1.0) + self.slope.eval(1.0) * (v_s - 1.0)
        } else {
            self.poly.eval(v_s)
        }
    }

    /// `dU/dV_s`.
    pub fn slope(&self, v_s: f64) -> f64 {
        self.slope.eval(v_s)
    }

    /// Minimum and maximum of `dU/dV_s` over `[0, 1]`.
    pub fn slope_bounds(&self) -> (f64, f64) {
        self.slope.range_on(0.0, 1.0)
    }

    /// Solves `U(V_s) = v` for `V_s`, saturating at the ends of `[0, 1]`.
    pub fn inverse(&self, v: f64) -> f64 {
        let (u0, u1) = (self.poly.eval(0.0), self.poly.eval(1.0));
        if v <= u0 {
            return 0.0;
        }
        if v >= u1 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.poly.eval(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }
}

impl TryFrom<Vec<f64>> for OcvPolynomial {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        OcvPolynomial::new(v)
    }
}

impl From<OcvPolynomial> for Vec<f64> {
    fn from(o: OcvPolynomial) -> Vec<f64> {
        o.poly.coefficients().to_vec()
    }
}

fn default_r_surf_min_frac() -> f64 {
    0.05
}
fn default_q_max() -> f64 {
    1e6
}
fn default_t_peak() -> f64 {
    800.0
}
fn default_beta() -> f64 {
    1.0 / 600.0
}

/// Circuit, thermal and runaway constants of one cell.
///
/// Units: farads, ohms, J/K, K/W, kelvin, watts. `h_ec` is joules per unit
/// state-of-charge fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BattBeeParams {
    pub c_b: f64,
    pub c_s: f64,
    pub r_b: f64,
    pub r_o: f64,
    pub c_core: f64,
    pub c_surf: f64,
    pub r_core: f64,
    pub r_surf0: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub h_ec: f64,
    /// Decomposition coefficients: `alpha[0]` in W, `alpha[1]` and `alpha[3]`
    /// in 1/K, `alpha[2]` dimensionless.
    pub alpha: [f64; 4],
    pub t_onset: f64,
    #[serde(default = "default_t_peak")]
    pub t_peak: f64,
    pub ocv: OcvPolynomial,
    /// Floor of the surface resistance as a fraction of `r_surf0`.
    #[serde(default = "default_r_surf_min_frac")]
    pub r_surf_min_frac: f64,
    /// Saturation of the decomposition heat rate.
    #[serde(default = "default_q_max")]
    pub q_max: f64,
    /// Include the external current in the electrochemical heat term.
    #[serde(default)]
    pub attribute_external_current: bool,
}

impl BattBeeParams {
    /// Total charge capacity `C_b + C_s` in coulombs.
    pub fn capacity(&self) -> f64 {
        self.c_b + self.c_s
    }

    /// Checks every invariant for operation at ambient temperature `t_amb`.
    pub fn validate(&self, t_amb: f64) -> Result<()> {
        let positive = [
            ("c_b", self.c_b),
            ("c_s", self.c_s),
            ("r_b", self.r_b),
            ("r_o", self.r_o),
            ("c_core", self.c_core),
            ("c_surf", self.c_surf),
            ("r_core", self.r_core),
            ("r_surf0", self.r_surf0),
            ("alpha1", self.alpha[0]),
            ("alpha3", self.alpha[2]),
            ("q_max", self.q_max),
            ("t_peak", self.t_peak),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("h_ec", self.h_ec),
            ("beta", self.beta),
            ("alpha2", self.alpha[1]),
            ("alpha4", self.alpha[3]),
            ("t_onset", self.t_onset),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.h_ec < 0.0 {
            return Err(Error::param("h_ec", "must be nonnegative"));
        }
        if !(self.r_surf_min_frac > 0.0 && self.r_surf_min_frac <= 1.0) {
            return Err(Error::param("r_surf_min_frac", "must lie in (0, 1]"));
        }
        let span = self.beta * (self.t_peak - t_amb);
        if !(0.0..1.0).contains(&span) {
            return Err(Error::param(
                "beta",
                format!("beta * (t_peak - t_amb) = {span:.4} must lie in [0, 1)"),
            ));
        }
        let probe = SimState::uniform(1.0, t_amb);
        for k in 0..SCAN_POINTS {
            let t = t_amb + (self.t_peak - t_amb) * k as f64 / (SCAN_POINTS - 1) as f64;
            let q = q_decomp(self, &SimState { t_core: t, ..probe });
            if !(q.is_finite() && q >= 0.0) {
                return Err(Error::param(
                    "alpha",
                    format!("decomposition heat is {q} at T_core = {t:.2} K"),
                ));
            }
        }
        Ok(())
    }
}

/// Internal short-circuit conductances; zero means no fault.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultInputs {
    /// `1 / R_ISC,1` in siemens: drains the surface capacitor.
    pub g_isc1: f64,
    /// `1 / R_ISC,2` in siemens: shunts the terminals.
    pub g_isc2: f64,
}

impl FaultInputs {
    pub const NONE: FaultInputs = FaultInputs {
        g_isc1: 0.0,
        g_isc2: 0.0,
    };

    pub fn new(g_isc1: f64, g_isc2: f64) -> Result<Self> {
        for (name, g) in [("g_isc1", g_isc1), ("g_isc2", g_isc2)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::param(name, format!("conductance must be >= 0, got {g}")));
            }
        }
        Ok(FaultInputs { g_isc1, g_isc2 })
    }

    pub fn is_faulted(&self) -> bool {
        self.g_isc1 > 0.0 || self.g_isc2 > 0.0
    }
}

/// Model state `x = [V_b, V_s, T_core, T_surf]` plus the depletion latch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimState {
    pub v_b: f64,
    pub v_s: f64,
    pub t_core: f64,
    pub t_surf: f64,
    #[serde(default)]
    pub decomp_depleted: bool,
}

impl SimState {
    /// Electrical equilibrium at `soc` (fraction) and uniform temperature.
    pub fn uniform(soc: f64, temperature: f64) -> Self {
        SimState {
            v_b: soc,
            v_s: soc,
            t_core: temperature,
            t_surf: temperature,
            decomp_depleted: false,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.v_b, self.v_s, self.t_core, self.t_surf]
    }

    pub fn with_array(&self, x: [f64; 4]) -> Self {
        SimState {
            v_b: x[0],
            v_s: x[1],
            t_core: x[2],
            t_surf: x[3],
            decomp_depleted: self.decomp_depleted,
        }
    }
}

/// Heat-generation terms in watts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HeatRates {
    pub q_ohm: f64,
    pub q_ec: f64,
    pub q_decomp: f64,
    pub q_exo: f64,
    pub q_total: f64,
}

impl HeatRates {
    pub fn new(q_ohm: f64, q_ec: f64, q_decomp: f64) -> Self {
        let q_exo = q_ec + q_decomp;
        HeatRates {
            q_ohm,
            q_ec,
            q_decomp,
            q_exo,
            q_total: q_ohm + q_exo,
        }
    }
}

/// `U(V_s)`.
pub fn ocv_eval(p: &OcvPolynomial, v_s: f64) -> Result<f64> {
    p.eval(v_s)
}

/// State of charge in percent.
pub fn soc(p: &BattBeeParams, s: &SimState) -> f64 {
    (p.c_b * s.v_b + p.c_s * s.v_s) / (p.c_b + p.c_s) * 100.0
}

/// `(dV_b/dt, dV_s/dt)` in 1/s. Positive current charges the cell.
pub fn electrical_derivatives(p: &BattBeeParams, f: &FaultInputs, s: &SimState, current: f64) -> (f64, f64) {
    let dv_b = (s.v_s - s.v_b) / (p.r_b * p.c_b);
    let dv_s = (s.v_b - s.v_s) / (p.r_b * p.c_s) - f.g_isc1 * s.v_s / p.c_s + current / p.c_s;
    (dv_b, dv_s)
}

/// Terminal voltage `[U(V_s) + I R_o] / (1 + R_o g_isc2)`.
pub fn terminal_voltage(p: &BattBeeParams, f: &FaultInputs, s: &SimState, current: f64) -> Result<f64> {
    let u = p.ocv.eval(s.v_s)?;
    Ok((u + current * p.r_o) / (1.0 + p.r_o * f.g_isc2))
}

/// Ohmic heat `I^2 R_o`.
pub fn q_ohm(p: &BattBeeParams, current: f64) -> f64 {
    current * current * p.r_o
}

/// Electrochemical heat released by ISC-driven charge loss.
///
/// `h_ec (g_isc1 V_s - I [attribute_external_current]) / (C_b + C_s)`; with
/// the attribution flag off (default) the term vanishes whenever
/// `g_isc1 = 0`.
pub fn q_ec(p: &BattBeeParams, f: &FaultInputs, s: &SimState, current: f64) -> f64 {
    let external = if p.attribute_external_current { current } else { 0.0 };
    p.h_ec * (f.g_isc1 * s.v_s - external) / (p.c_b + p.c_s)
}

/// Decomposition heat `a1 exp[a2 dT] / (1 + a3 exp[a4 dT])`, `dT = T_core - T_onset`.
///
/// Evaluated in log space and saturated at `q_max`; zero once the depletion
/// latch is set.
pub fn q_decomp(p: &BattBeeParams, s: &SimState) -> f64 {
    if s.decomp_depleted {
        return 0.0;
    }
    let dt = s.t_core - p.t_onset;
    let [a1, a2, a3, a4] = p.alpha;
    let log_den = softplus(a3.ln() + a4 * dt);
    let log_q = a1.ln() + a2 * dt - log_den;
    if log_q.is_nan() || log_q >= p.q_max.ln() {
        return p.q_max;
    }
    log_q.exp().min(p.q_max)
}

#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Surface-to-ambient thermal resistance, linear in the temperature gradient
/// and floored at `r_surf_min_frac * r_surf0`.
pub fn r_surf(p: &BattBeeParams, t_surf: f64, t_amb: f64) -> f64 {
    let floor = p.r_surf_min_frac * p.r_surf0;
    let linear = p.r_surf0 * (1.0 - p.beta * (t_surf - t_amb));
    if linear < floor {
        log::trace!("R_surf clamped at floor {floor} (linear law gives {linear})");
        floor
    } else {
        linear
    }
}

/// `(dT_core/dt, dT_surf/dt)` in K/s.
pub fn thermal_derivatives(p: &BattBeeParams, s: &SimState, q_total: f64, t_amb: f64) -> (f64, f64) {
    let rs = r_surf(p, s.t_surf, t_amb);
    let dt_core = (s.t_surf - s.t_core) / (p.r_core * p.c_core) + q_total / p.c_core;
    let dt_surf = (s.t_core - s.t_surf) / (p.r_core * p.c_surf) - (s.t_surf - t_amb) / (rs * p.c_surf);
    (dt_core, dt_surf)
}

pub fn heat_rates(p: &BattBeeParams, f: &FaultInputs, s: &SimState, current: f64) -> HeatRates {
    HeatRates::new(q_ohm(p, current), q_ec(p, f, s, current), q_decomp(p, s))
}

/// Full state derivative, failing on the first non-finite term.
pub fn derivatives(
    p: &BattBeeParams,
    f: &FaultInputs,
    s: &SimState,
    current: f64,
    t_amb: f64,
) -> Result<[f64; 4]> {
    let heat = heat_rates(p, f, s, current);
    finite("q_ohm", heat.q_ohm)?;
    finite("q_ec", heat.q_ec)?;
    finite("q_decomp", heat.q_decomp)?;
    let (dv_b, dv_s) = electrical_derivatives(p, f, s, current);
    let (dt_core, dt_surf) = thermal_derivatives(p, s, heat.q_total, t_amb);
    Ok([
        finite("dV_b/dt", dv_b)?,
        finite("dV_s/dt", dv_s)?,
        finite("dT_core/dt", dt_core)?,
        finite("dT_surf/dt", dt_surf)?,
    ])
}
