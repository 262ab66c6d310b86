//! Two-volume single-particle model with a separator short.
//!
//! Each electrode particle is split into an inner ball and an outer shell of
//! average concentrations `c_b` and `c_s`. A separator conductance `g_sep`
//! carries an internal current `I_ISC` driven by the potential across the
//! separator. The model serves as a physics reference for the circuit model
//! and as a synthetic data source.
//!
//! Sign convention: positive `I` charges the cell (lithium moves from the
//! positive to the negative electrode).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BattBeeParams, OcvPolynomial};
use crate::poly::Polynomial;
use crate::presets;
use crate::sim::Scenario;

/// Faraday constant, C/mol.
pub const FARADAY: f64 = 96485.33212;
/// Molar gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.314462618;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Electrode {
    Positive,
    Negative,
}

impl Electrode {
    fn name(self) -> &'static str {
        match self {
            Electrode::Positive => "positive",
            Electrode::Negative => "negative",
        }
    }

    /// Sign of `j` relative to `I - I_ISC`.
    fn sign(self) -> f64 {
        match self {
            Electrode::Positive => 1.0,
            Electrode::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectrodeParams {
    /// Solid diffusion coefficient, m²/s.
    pub d_s: f64,
    /// Particle radius, m.
    pub r_s: f64,
    /// Inner-element radius, m. Defaults to equal element volumes.
    #[serde(default)]
    pub r_b: Option<f64>,
    /// Volume-specific interfacial area, 1/m.
    pub a: f64,
    /// Electrode thickness, m.
    pub l: f64,
    /// Exchange current density, A/m².
    pub i0: f64,
    /// Film resistance, Ω m².
    pub r_f: f64,
    /// Maximum concentration, mol/m³.
    pub c_max: f64,
    /// Stoichiometry at 0 % and 100 % state of charge.
    pub theta0: f64,
    pub theta100: f64,
    /// Open-circuit potential as a polynomial in stoichiometry, V.
    pub ocp: Polynomial,
}

impl ElectrodeParams {
    pub fn inner_radius(&self) -> f64 {
        self.r_b.unwrap_or(self.r_s * 0.5f64.cbrt())
    }

    pub fn dv_b(&self) -> f64 {
        4.0 * PI * self.inner_radius().powi(3) / 3.0
    }

    pub fn dv_s(&self) -> f64 {
        4.0 * PI * (self.r_s.powi(3) - self.inner_radius().powi(3)) / 3.0
    }

    pub fn s_b(&self) -> f64 {
        4.0 * PI * self.inner_radius().powi(2)
    }

    pub fn s_s(&self) -> f64 {
        4.0 * PI * self.r_s.powi(2)
    }

    /// Active interfacial area `a L S`, m².
    pub fn active_area(&self, s: f64) -> f64 {
        self.a * self.l * s
    }

    /// Concentration at state-of-charge fraction `soc`.
    pub fn concentration_at(&self, soc: f64) -> f64 {
        self.c_max * (self.theta0 + soc * (self.theta100 - self.theta0))
    }

    fn validate(&self, which: &'static str) -> Result<()> {
        for (name, v) in [
            ("d_s", self.d_s),
            ("r_s", self.r_s),
            ("a", self.a),
            ("l", self.l),
            ("i0", self.i0),
            ("c_max", self.c_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(which, format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.r_f.is_finite() && self.r_f >= 0.0) {
            return Err(Error::param(which, "r_f must be >= 0"));
        }
        let r_b = self.inner_radius();
        if !(r_b > 0.0 && r_b < self.r_s) {
            return Err(Error::param(which, format!("need 0 < r_b < r_s, got r_b = {r_b}")));
        }
        for t in [self.theta0, self.theta100] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::param(which, "stoichiometry window must lie in [0, 1]"));
            }
        }
        if self.theta0 == self.theta100 {
            return Err(Error::param(which, "stoichiometry window is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpmParams {
    pub positive: ElectrodeParams,
    pub negative: ElectrodeParams,
    /// Cell cross-sectional area, m².
    pub area: f64,
    pub alpha_ct: f64,
    /// Temperature, K.
    pub temperature: f64,
    /// Electrolyte resistances, Ω.
    pub r_e_pos: f64,
    pub r_e_neg: f64,
    /// Separator short conductance, S (0 = intact).
    #[serde(default)]
    pub g_sep: f64,
}

impl SpmParams {
    pub fn electrode(&self, e: Electrode) -> &ElectrodeParams {
        match e {
            Electrode::Positive => &self.positive,
            Electrode::Negative => &self.negative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.positive.validate("positive")?;
        self.negative.validate("negative")?;
        for (name, v) in [("area", self.area), ("temperature", self.temperature)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        if !(self.alpha_ct > 0.0 && self.alpha_ct <= 1.0) {
            return Err(Error::param("alpha_ct", "must lie in (0, 1]"));
        }
        for (name, v) in [
            ("r_e_pos", self.r_e_pos),
            ("r_e_neg", self.r_e_neg),
            ("g_sep", self.g_sep),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// `R T / (alpha F)`, V.
    pub fn thermal_voltage(&self) -> f64 {
        GAS_CONSTANT * self.temperature / (self.alpha_ct * FARADAY)
    }

    /// Lithium inventory (mol) of one electrode.
    pub fn moles(&self, e: Electrode, s: &ElementPair) -> f64 {
        let p = self.electrode(e);
        let particles = p.active_area(self.area) / p.s_s();
        particles * (p.dv_b() * s.c_b + p.dv_s() * s.c_s)
    }

    pub fn total_moles(&self, s: &SpmState) -> f64 {
        self.moles(Electrode::Positive, &s.positive) + self.moles(Electrode::Negative, &s.negative)
    }
}

/// Reference cell: graphite-like negative, layered-oxide-like positive,
/// positive window chosen so both electrodes exchange the same charge.
pub fn default_spm_params() -> SpmParams {
    let negative = ElectrodeParams {
        d_s: 3.9e-14,
        r_s: 10e-6,
        r_b: None,
        a: 1.8e5,
        l: 80e-6,
        i0: 5.0,
        r_f: 5e-3,
        c_max: 30555.0,
        theta0: 0.02,
        theta100: 0.85,
        ocp: Polynomial::new(vec![0.58, -2.0, 3.0, -2.0, 0.5]),
    };
    let area = 0.1;
    let mut positive = ElectrodeParams {
        d_s: 1e-14,
        r_s: 5e-6,
        r_b: None,
        a: 3e5,
        l: 70e-6,
        i0: 5.0,
        r_f: 5e-3,
        c_max: 51555.0,
        theta0: 0.9,
        theta100: 0.9,
        ocp: Polynomial::new(vec![4.3, -0.6, 0.0, -0.3]),
    };
    // Active volume a L S r_s / 3 times the stoichiometry swing must match.
    let vol = |p: &ElectrodeParams| p.a * p.l * area * p.r_s / 3.0 * p.c_max;
    let exchanged = vol(&negative) * (negative.theta100 - negative.theta0);
    positive.theta100 = positive.theta0 - exchanged / vol(&positive);
    SpmParams {
        positive,
        negative,
        area,
        alpha_ct: 0.5,
        temperature: presets::T_AMB,
        r_e_pos: 6e-3,
        r_e_neg: 2e-3,
        g_sep: 0.0,
    }
}

/// Inner and shell average concentrations of one electrode, mol/m³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPair {
    pub c_b: f64,
    pub c_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpmState {
    pub positive: ElementPair,
    pub negative: ElementPair,
}

impl SpmState {
    /// Relaxed state at state-of-charge fraction `soc`.
    pub fn at_soc(p: &SpmParams, soc: f64) -> Self {
        let pair = |e: &ElectrodeParams| {
            let c = e.concentration_at(soc);
            ElementPair { c_b: c, c_s: c }
        };
        SpmState {
            positive: pair(&p.positive),
            negative: pair(&p.negative),
        }
    }

    fn pair(&self, e: Electrode) -> &ElementPair {
        match e {
            Electrode::Positive => &self.positive,
            Electrode::Negative => &self.negative,
        }
    }

    pub fn validate(&self, p: &SpmParams) -> Result<()> {
        for e in [Electrode::Positive, Electrode::Negative] {
            let c_max = p.electrode(e).c_max;
            let s = self.pair(e);
            for c in [s.c_b, s.c_s] {
                if !(0.0..=c_max).contains(&c) {
                    return Err(Error::Domain {
                        what: "concentration",
                        value: c,
                        lo: 0.0,
                        hi: c_max,
                    });
                }
            }
        }
        Ok(())
    }

    fn to_array(self) -> [f64; 4] {
        [self.positive.c_b, self.positive.c_s, self.negative.c_b, self.negative.c_s]
    }

    fn from_array(x: [f64; 4]) -> Self {
        SpmState {
            positive: ElementPair { c_b: x[0], c_s: x[1] },
            negative: ElementPair { c_b: x[2], c_s: x[3] },
        }
    }
}

fn ocp(p: &SpmParams, s: &SpmState, e: Electrode) -> f64 {
    let ep = p.electrode(e);
    ep.ocp.eval(s.pair(e).c_s / ep.c_max)
}

/// Reaction overpotential for a net intercalation current `i_net = I - I_ISC`.
pub fn overpotential(p: &SpmParams, e: Electrode, i_net: f64) -> Result<f64> {
    let ep = p.electrode(e);
    let arg = e.sign() * i_net / (2.0 * ep.i0 * ep.active_area(p.area));
    if !arg.is_finite() {
        return Err(Error::Kinetics {
            electrode: e.name(),
            reason: format!("asinh argument is {arg}"),
        });
    }
    Ok(p.thermal_voltage() * arg.asinh())
}

/// Potential across the separator, `U+ - U- + eta+ - eta-`.
fn separator_potential(p: &SpmParams, s: &SpmState, i_net: f64) -> Result<f64> {
    Ok(ocp(p, s, Electrode::Positive) - ocp(p, s, Electrode::Negative)
        + overpotential(p, Electrode::Positive, i_net)?
        - overpotential(p, Electrode::Negative, i_net)?)
}

/// Internal short current `I_ISC = g_sep * dU_sep(I - I_ISC)`.
///
/// The separator potential decreases in `I_ISC`, so the fixed point is unique;
/// it is found by Newton steps safeguarded with a bisection bracket.
pub fn spm_isc_current(p: &SpmParams, s: &SpmState, current: f64) -> Result<f64> {
    if p.g_sep == 0.0 {
        return Ok(0.0);
    }
    let residual = |x: f64| -> Result<f64> { Ok(x - p.g_sep * separator_potential(p, s, current - x)?) };
    let du0 = separator_potential(p, s, current)?;
    // Bracket the root starting from the open-circuit estimate.
    let guess = p.g_sep * du0;
    let mut width = guess.abs().max(1.0);
    let (mut lo, mut hi) = (guess - width, guess + width);
    let mut expansions = 0;
    while residual(lo)? > 0.0 || residual(hi)? < 0.0 {
        width *= 2.0;
        lo = guess - width;
        hi = guess + width;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Kinetics {
                electrode: "separator",
                reason: "could not bracket the short-circuit current".into(),
            });
        }
    }
    let kt = p.thermal_voltage();
    let mut x = guess.clamp(lo, hi);
    for _ in 0..100 {
        let f = residual(x)?;
        if f == 0.0 {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        // d(dU_sep)/dx for both electrodes: -kt / sqrt(k^2 + (I - x)^2).
        let i_net = current - x;
        let slope: f64 = [Electrode::Positive, Electrode::Negative]
            .iter()
            .map(|&e| {
                let k = 2.0 * p.electrode(e).i0 * p.electrode(e).active_area(p.area);
                kt / (k * k + i_net * i_net).sqrt()
            })
            .sum();
        let df = 1.0 + p.g_sep * slope;
        let mut next = x - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Time derivatives `[c_b+, c_s+, c_b-, c_s-]`.
pub fn cbar_derivatives(p: &SpmParams, s: &SpmState, current: f64) -> Result<[f64; 4]> {
    let i_isc = spm_isc_current(p, s, current)?;
    Ok(cbar_derivatives_with(p, s, current - i_isc))
}

fn cbar_derivatives_with(p: &SpmParams, s: &SpmState, i_net: f64) -> [f64; 4] {
    let element = |e: Electrode| {
        let ep = p.electrode(e);
        let pair = s.pair(e);
        let exchange = 2.0 * ep.d_s * ep.s_b() / ep.r_s * (pair.c_s - pair.c_b);
        let flux = ep.s_s() / (ep.dv_s() * FARADAY * ep.active_area(p.area)) * i_net;
        (exchange / ep.dv_b(), -exchange / ep.dv_s() - e.sign() * flux)
    };
    let (pb, ps) = element(Electrode::Positive);
    let (nb, ns) = element(Electrode::Negative);
    [pb, ps, nb, ns]
}

/// Terminal voltage with the surface concentration taken as the shell average.
///
/// The separator term removes the whole cell potential as soon as the
/// separator conducts, mirroring the `- R_ISC I_ISC` contribution.
pub fn spm_terminal_voltage(p: &SpmParams, s: &SpmState, current: f64) -> Result<f64> {
    let i_isc = spm_isc_current(p, s, current)?;
    let i_net = current - i_isc;
    let eta_p = overpotential(p, Electrode::Positive, i_net)?;
    let eta_n = overpotential(p, Electrode::Negative, i_net)?;
    let ocv = ocp(p, s, Electrode::Positive) - ocp(p, s, Electrode::Negative);
    let du_sep = if p.g_sep > 0.0 { ocv + eta_p - eta_n } else { 0.0 };
    let film: f64 = [Electrode::Positive, Electrode::Negative]
        .iter()
        .map(|&e| {
            let ep = p.electrode(e);
            let j = e.sign() * i_net / (FARADAY * ep.active_area(p.area));
            e.sign() * FARADAY * ep.r_f * j
        })
        .sum();
    Ok(ocv - du_sep + eta_p - eta_n + (p.r_e_pos - p.r_e_neg) * current + film)
}

/// One RK4 step of the concentration dynamics.
pub fn spm_step(p: &SpmParams, s: &SpmState, current: f64, dt: f64) -> Result<SpmState> {
    let x = s.to_array();
    let eval = |y: [f64; 4]| cbar_derivatives(p, &SpmState::from_array(y), current);
    let axpy = |a: f64, k: &[f64; 4]| -> [f64; 4] { std::array::from_fn(|i| x[i] + a * k[i]) };
    let k1 = eval(x)?;
    let k2 = eval(axpy(0.5 * dt, &k1))?;
    let k3 = eval(axpy(0.5 * dt, &k2))?;
    let k4 = eval(axpy(dt, &k3))?;
    Ok(SpmState::from_array(std::array::from_fn(|i| {
        x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    })))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpmRow {
    pub t: f64,
    pub current: f64,
    pub voltage: f64,
    pub i_isc: f64,
    pub state: SpmState,
}

/// Integrates the oracle on the scenario's grid and current profile.
///
/// Fault events and thermal settings of the scenario are ignored; the short is
/// set by `g_sep`.
pub fn spm_run(p: &SpmParams, initial: SpmState, sc: &Scenario) -> Result<Vec<SpmRow>> {
    p.validate()?;
    initial.validate(p)?;
    if !(sc.dt > 0.0) {
        return Err(Error::Scenario("dt must be > 0".into()));
    }
    let n = sc.steps();
    let mut rows = Vec::with_capacity(n + 1);
    let mut s = initial;
    for k in 0..=n {
        let t = k as f64 * sc.dt;
        let current = sc.current_at(t);
        rows.push(SpmRow {
            t,
            current,
            voltage: spm_terminal_voltage(p, &s, current).map_err(|e| e.at_time(t))?,
            i_isc: spm_isc_current(p, &s, current).map_err(|e| e.at_time(t))?,
            state: s,
        });
        if k < n {
            s = spm_step(p, &s, current, sc.dt).map_err(|e| e.at_time(t))?;
        }
    }
    Ok(rows)
}

/// Electrical part of the circuit model implied by the oracle.
///
/// The negative electrode is the reference: node voltages are its normalized
/// concentrations `(c - c(0 %)) / (c(100 %) - c(0 %))`, which gives
/// `C = F N_p dv |dc|` per element and `R_b = r_s / (2 F N_p |dc| D_s S_b)`
/// with `N_p = a L S / S_s` particles. The OCV is `U+ - U-` composed with the
/// two stoichiometry windows, and `R_o` collects the linearized charge
/// transfer, electrolyte and film resistances. Thermal and runaway fields are
/// copied from `thermal`.
pub fn reduce_to_battbee(p: &SpmParams, thermal: &BattBeeParams) -> Result<BattBeeParams> {
    p.validate()?;
    let n = &p.negative;
    let particles = n.active_area(p.area) / n.s_s();
    let dc = (n.c_max * (n.theta100 - n.theta0)).abs();
    let c_b = FARADAY * particles * n.dv_b() * dc;
    let c_s = FARADAY * particles * n.dv_s() * dc;
    let r_b = n.r_s / (2.0 * FARADAY * particles * dc * n.d_s * n.s_b());

    let pos = &p.positive;
    let u_pos = pos.ocp.compose_affine(pos.theta0, pos.theta100 - pos.theta0);
    let u_neg = n.ocp.compose_affine(n.theta0, n.theta100 - n.theta0);
    let ocv = OcvPolynomial::new(u_pos.sub(&u_neg).coefficients().to_vec())?;

    let kt = p.thermal_voltage();
    let r_eta: f64 = [pos, n].iter().map(|e| kt / (2.0 * e.i0 * e.active_area(p.area))).sum();
    let r_film: f64 = [pos, n].iter().map(|e| e.r_f / e.active_area(p.area)).sum();
    let r_o = r_eta + p.r_e_pos - p.r_e_neg + r_film;
    if !(r_o > 0.0) {
        return Err(Error::param("r_o", format!("reduced series resistance is {r_o}")));
    }
    Ok(BattBeeParams {
        c_b,
        c_s,
        r_b,
        r_o,
        ocv,
        ..thermal.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cell_is_balanced() {
        let p = default_spm_params();
        p.validate().unwrap();
        assert!((p.positive.theta100 - 0.2254).abs() < 1e-3);
        let full = SpmState::at_soc(&p, 1.0);
        let empty = SpmState::at_soc(&p, 0.0);
        let dn = p.moles(Electrode::Negative, &full.negative) - p.moles(Electrode::Negative, &empty.negative);
        let dp = p.moles(Electrode::Positive, &full.positive) - p.moles(Electrode::Positive, &empty.positive);
        assert!((dn + dp).abs() < 1e-12 * dn.abs());
    }

    #[test]
    fn ohm_law_for_isc() {
        // Zero kinetic resistance would make dU_sep the bare OCV; with a huge
        // exchange current the overpotentials vanish.
        let mut p = default_spm_params();
        p.positive.i0 = 1e12;
        p.negative.i0 = 1e12;
        p.positive.ocp = Polynomial::new(vec![3.7]);
        p.negative.ocp = Polynomial::new(vec![0.0]);
        p.g_sep = 10.0;
        let s = SpmState::at_soc(&p, 0.5);
        assert!((spm_isc_current(&p, &s, 0.0).unwrap() - 37.0).abs() < 1e-6);
    }

    #[test]
    fn open_circuit_voltage_at_rest() {
        let p = default_spm_params();
        let s = SpmState::at_soc(&p, 0.0);
        assert!((spm_terminal_voltage(&p, &s, 0.0).unwrap() - 3.0).abs() < 1e-3);
    }

    #[test]
    fn reduced_ocv_matches_composition() {
        let p = default_spm_params();
        let b = reduce_to_battbee(&p, &presets::reference_params()).unwrap();
        for k in 0..=10 {
            let soc = k as f64 / 10.0;
            let s = SpmState::at_soc(&p, soc);
            let direct = spm_terminal_voltage(&p, &s, 0.0).unwrap();
            assert!((b.ocv.eval(soc).unwrap() - direct).abs() < 1e-12);
        }
    }
}
