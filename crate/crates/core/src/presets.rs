//! Reference parameter sets.
//!
//! The circuit and thermal constants are those of an 18650-class cell
//! identified against a physicochemical simulator. The runaway constants and
//! the OCV curve are representative values, not measurements.

use crate::model::{BattBeeParams, OcvPolynomial};

/// Ambient temperature used by the reference scenarios (25 °C).
pub const T_AMB: f64 = 298.15;

/// `U(s) = 3 + 0.55 s + 0.55 (1 - (1 - s)^7) + 0.1 s^6`: steep at low charge,
/// nearly flat in the middle, gently rising at the top. `U(0) = 3.0 V`,
/// `U(1) = 4.2 V`.
pub fn default_ocv() -> OcvPolynomial {
    OcvPolynomial::new(vec![3.0, 4.4, -11.55, 19.25, -19.25, 11.55, -3.75, 0.55])
        .expect("reference OCV is monotone")
}

/// The reference cell: identified circuit and thermal constants with
/// representative runaway constants and OCV.
pub fn reference_params() -> BattBeeParams {
    BattBeeParams {
        c_b: 76900.887,
        c_s: 8115.772,
        r_b: 1.236e-3,
        r_o: 4.322e-3,
        c_core: 162.760,
        c_surf: 168.129,
        r_core: 0.020,
        r_surf0: 3.865,
        beta: 1.0 / 600.0,
        h_ec: 3.0e5,
        alpha: [300.0, 0.12, 1.0, 0.08],
        t_onset: 453.15,
        t_peak: 800.0,
        ocv: default_ocv(),
        r_surf_min_frac: 0.05,
        q_max: 1e6,
        attribute_external_current: false,
    }
}

/// Largest step allowed for `p`: `min(R_b C_s, R_core C_surf) / 20`.
pub fn max_stable_dt(p: &BattBeeParams) -> f64 {
    (p.r_b * p.c_s).min(p.r_core * p.c_surf) / 20.0
}
