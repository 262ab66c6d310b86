use battbee_core::presets;
use battbee_core::sim::run_scenario;
use battbee_core::spm::{
    cbar_derivatives, default_spm_params, overpotential, reduce_to_battbee, spm_isc_current, spm_run, spm_step,
    spm_terminal_voltage, Electrode, ElementPair, SpmParams, SpmState,
};
use battbee_core::Scenario;
use proptest::prelude::*;

fn shorted(g_sep: f64) -> SpmParams {
    SpmParams {
        g_sep,
        ..default_spm_params()
    }
}

fn as_array(s: &SpmState) -> [f64; 4] {
    [s.positive.c_b, s.positive.c_s, s.negative.c_b, s.negative.c_s]
}

fn from_array(x: [f64; 4]) -> SpmState {
    SpmState {
        positive: ElementPair { c_b: x[0], c_s: x[1] },
        negative: ElementPair { c_b: x[2], c_s: x[3] },
    }
}

/// A state with a concentration gradient inside each particle.
fn graded(p: &SpmParams, soc: f64) -> SpmState {
    let mut s = SpmState::at_soc(p, soc);
    s.positive.c_s *= 1.02;
    s.negative.c_s *= 0.97;
    s
}

#[test]
fn intact_separator_carries_no_current() {
    let p = default_spm_params();
    for soc in [0.0, 0.3, 1.0] {
        for i in [-30.0, 0.0, 12.0] {
            assert_eq!(spm_isc_current(&p, &SpmState::at_soc(&p, soc), i).unwrap(), 0.0);
        }
    }
}

#[test]
fn short_current_increases_with_conductance() {
    let s = SpmState::at_soc(&default_spm_params(), 0.7);
    let mut last = 0.0;
    for g in [1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0] {
        let i = spm_isc_current(&shorted(g), &s, 0.0).unwrap();
        assert!(i > last, "g_sep = {g}: {i} <= {last}");
        last = i;
    }
}

#[test]
fn relaxed_state_without_current_is_stationary() {
    let p = default_spm_params();
    for soc in [0.0, 0.5, 1.0] {
        assert_eq!(cbar_derivatives(&p, &SpmState::at_soc(&p, soc), 0.0).unwrap(), [0.0; 4]);
    }
}

#[test]
fn interior_exchange_cancels_per_electrode() {
    for g in [0.0, 0.5] {
        let p = shorted(g);
        let s = graded(&p, 0.6);
        let i = -15.0;
        let d = cbar_derivatives(&p, &s, i).unwrap();
        let i_net = i - spm_isc_current(&p, &s, i).unwrap();
        for (e, db, ds, sign) in [
            (&p.positive, d[0], d[1], 1.0),
            (&p.negative, d[2], d[3], -1.0),
        ] {
            let rate = e.dv_b() * db + e.dv_s() * ds;
            let boundary = -sign * e.s_s() * i_net / (battbee_core::spm::FARADAY * e.active_area(p.area));
            assert!((rate - boundary).abs() <= 1e-12 * boundary.abs(), "{rate} vs {boundary}");
        }
    }
}

#[test]
fn lithium_is_conserved_under_a_short() {
    let p = shorted(0.2);
    let mut s = graded(&p, 0.8);
    let m0 = p.total_moles(&s);
    for _ in 0..10_000 {
        s = spm_step(&p, &s, 0.0, 1.0).unwrap();
    }
    let drift = (p.total_moles(&s) - m0).abs() / m0;
    assert!(drift <= 1e-10, "drift {drift:e}");
}

#[test]
fn short_drains_the_negative_inventory_monotonically() {
    let p = shorted(0.05);
    let mut s = SpmState::at_soc(&p, 0.9);
    let mut last = p.moles(Electrode::Negative, &s.negative);
    for _ in 0..2000 {
        s = spm_step(&p, &s, 0.0, 1.0).unwrap();
        let now = p.moles(Electrode::Negative, &s.negative);
        assert!(now < last);
        last = now;
    }
}

#[test]
fn rest_voltage_is_the_potential_difference() {
    let p = default_spm_params();
    for k in 0..=10 {
        let s = SpmState::at_soc(&p, k as f64 / 10.0);
        let u = p.positive.ocp.eval(s.positive.c_s / p.positive.c_max) - p.negative.ocp.eval(s.negative.c_s / p.negative.c_max);
        assert!((spm_terminal_voltage(&p, &s, 0.0).unwrap() - u).abs() <= 1e-12);
    }
}

#[test]
fn overpotential_is_nearly_linear_for_small_arguments() {
    let p = default_spm_params();
    for e in [Electrode::Positive, Electrode::Negative] {
        let ep = p.electrode(e);
        let k = 2.0 * ep.i0 * ep.active_area(p.area);
        let r_eta = p.thermal_voltage() / k;
        for j in 1..=100 {
            let i_net = 0.1 * k * j as f64 / 100.0;
            for i in [i_net, -i_net] {
                let eta = overpotential(&p, e, i).unwrap();
                let sign = if e == Electrode::Positive { 1.0 } else { -1.0 };
                let linear = sign * r_eta * i;
                assert!((eta - linear).abs() <= 0.0017 * eta.abs(), "{eta} vs {linear}");
            }
        }
    }
}

#[test]
fn discharge_pulls_the_voltage_below_open_circuit() {
    let p = default_spm_params();
    for soc in [0.2, 0.5, 0.9] {
        let s = SpmState::at_soc(&p, soc);
        let ocv = spm_terminal_voltage(&p, &s, 0.0).unwrap();
        assert!(spm_terminal_voltage(&p, &s, -10.0).unwrap() < ocv);
        assert!(spm_terminal_voltage(&p, &s, 10.0).unwrap() > ocv);
    }
}

#[test]
fn reduction_scales_with_diffusion_and_inner_volume() {
    let thermal = presets::reference_params();
    let p = default_spm_params();
    let base = reduce_to_battbee(&p, &thermal).unwrap();

    let mut fast = p.clone();
    fast.negative.d_s *= 2.0;
    let fast = reduce_to_battbee(&fast, &thermal).unwrap();
    assert!((fast.r_b - base.r_b / 2.0).abs() <= 1e-12 * base.r_b);

    let quarter = |p: &SpmParams, frac: f64| {
        let mut q = p.clone();
        q.negative.r_b = Some(q.negative.r_s * frac.cbrt());
        reduce_to_battbee(&q, &thermal).unwrap()
    };
    let small = quarter(&p, 0.25);
    let half = quarter(&p, 0.5);
    assert!((half.c_b - 2.0 * small.c_b).abs() <= 1e-12 * half.c_b);
    assert!((half.c_b - base.c_b).abs() <= 1e-12 * base.c_b);
}

#[test]
#[allow(clippy::needless_range_loop)]
fn intact_jacobian_is_two_decoupled_chains() {
    let p = default_spm_params();
    let s = graded(&p, 0.5);
    let x = as_array(&s);
    let f0 = cbar_derivatives(&p, &s, -5.0).unwrap();
    let mut jac = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut y = x;
        let h = 1e-3 * x[j];
        y[j] += h;
        let f = cbar_derivatives(&p, &from_array(y), -5.0).unwrap();
        for i in 0..4 {
            jac[i][j] = (f[i] - f0[i]) / h;
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            let same = i / 2 == j / 2;
            assert_eq!(jac[i][j] != 0.0, same, "J[{i}][{j}] = {}", jac[i][j]);
        }
    }
    // Each block is the two-node chain: diagonal negative, off-diagonal positive.
    for b in [0, 2] {
        assert!(jac[b][b] < 0.0 && jac[b + 1][b + 1] < 0.0);
        assert!(jac[b][b + 1] > 0.0 && jac[b + 1][b] > 0.0);
    }
}

fn pulses(amplitude: f64, period: f64, t_end: f64) -> Vec<(f64, f64)> {
    (0..(t_end / period) as usize)
        .map(|k| (k as f64 * period, if k % 2 == 0 { -amplitude } else { 0.5 * amplitude }))
        .collect()
}

#[test]
fn reduced_circuit_tracks_the_oracle_on_pulses() {
    let spm = default_spm_params();
    let reduced = reduce_to_battbee(&spm, &presets::reference_params()).unwrap();
    let sc = Scenario::rest(0.5, 1200.0, 0.05).with_current(pulses(10.0, 60.0, 1200.0));
    let model = run_scenario(&reduced, &sc).unwrap();
    let reference = spm_run(&spm, SpmState::at_soc(&spm, 0.5), &sc).unwrap();
    assert_eq!(model.len(), reference.len());
    let n = reference.len() as f64;
    let rmse = (model.rows.iter().zip(&reference).map(|(m, r)| (m.voltage - r.voltage).powi(2)).sum::<f64>() / n).sqrt();
    let v: Vec<f64> = reference.iter().map(|r| r.voltage).collect();
    let swing = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(swing > 0.05);
    assert!(rmse <= 0.05 * swing, "rmse {rmse} swing {swing}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn short_current_is_monotone_in_conductance(soc in 0.05..1.0f64, g in 1e-3..50.0f64, i in -20.0..20.0f64) {
        let s = SpmState::at_soc(&default_spm_params(), soc);
        let a = spm_isc_current(&shorted(g), &s, i).unwrap();
        let b = spm_isc_current(&shorted(1.5 * g), &s, i).unwrap();
        prop_assert!(b > a);
    }
}
