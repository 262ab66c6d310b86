use nalgebra::{Matrix2x3, Matrix4x3, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{Mat2x4, Mat4};
use crate::model::{self, BattBeeParams, FaultInputs, SimState};

/// Fault-explicit linear structure of the cell model,
/// `x' = A x + A_f x f1 + B u + B_f f2`, `y = [U(V_s); T_surf] + D u + D_f f3`
/// with `u = [I, T_amb, I^2]` and `y = [V, T_surf]`.
///
/// The surface resistance is frozen at `r_surf0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub a: Mat4,
    pub a_f: Mat4,
    pub b: Matrix4x3<f64>,
    pub b_f: Vector4<f64>,
    pub d: Matrix2x3<f64>,
    pub d_f: Vector2<f64>,
}

pub fn assemble_state_space(p: &BattBeeParams) -> StateSpace {
    let eb = 1.0 / (p.r_b * p.c_b);
    let es = 1.0 / (p.r_b * p.c_s);
    let tc = 1.0 / (p.r_core * p.c_core);
    let ts = 1.0 / (p.r_core * p.c_surf);
    let amb = 1.0 / (p.r_surf0 * p.c_surf);
    #[rustfmt::skip]
    let a = Mat4::new(
        -eb,  eb,  0.0,  0.0,
         es, -es,  0.0,  0.0,
        0.0, 0.0,  -tc,   tc,
        0.0, 0.0,   ts, -ts - amb,
    );
    let mut a_f = Mat4::zeros();
    a_f[(1, 1)] = -1.0 / p.c_s;
    let mut b = Matrix4x3::zeros();
    b[(1, 0)] = 1.0 / p.c_s;
    b[(2, 2)] = p.r_o / p.c_core;
    b[(3, 1)] = amb;
    let b_f = Vector4::new(0.0, 0.0, 1.0 / p.c_core, 0.0);
    let d = Matrix2x3::new(p.r_o, 0.0, 0.0, 0.0, 0.0, 0.0);
    let d_f = Vector2::new(1.0, 0.0);
    StateSpace { a, a_f, b, b_f, d, d_f }
}

/// `u = [I, T_amb, I^2]`.
pub fn input(current: f64, t_amb: f64) -> Vector3<f64> {
    Vector3::new(current, t_amb, current * current)
}

/// Output Jacobian with OCV slope `slope`: `[[0, slope, 0, 0], [0, 0, 0, 1]]`.
pub fn output_matrix(slope: f64) -> Mat2x4 {
    Mat2x4::new(0.0, slope, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
}

/// Fault signals `(f1, f2, f3)`: drain conductance, exothermic heat and
/// output collapse.
pub fn fault_signals(p: &BattBeeParams, f: &FaultInputs, s: &SimState, current: f64) -> Result<(f64, f64, f64)> {
    let heat = model::heat_rates(p, f, s, current);
    let u = p.ocv.eval(s.v_s)?;
    let k = p.r_o * f.g_isc2;
    let f3 = -k / (1.0 + k) * (u + p.r_o * current);
    Ok((f.g_isc1, heat.q_exo, f3))
}
