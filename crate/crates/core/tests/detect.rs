use battbee_core::detect::kalman::riccati_residual;
use battbee_core::detect::observer::linear_residual;
use battbee_core::detect::stability::vertex_matrix;
use battbee_core::detect::*;
use battbee_core::linalg::{self, Mat2x4, Mat4, Mat4x2};
use battbee_core::model::{self, q_decomp};
use battbee_core::presets::{self, T_AMB};
use battbee_core::sim::{run_scenario, sample_telemetry, MeasurementNoise, TelemetrySample};
use battbee_core::{BattBeeParams, Error, FaultEvent, FaultInputs, Scenario, SimState};
use nalgebra::{DMatrix, Matrix2, Matrix2x4, SymmetricEigen, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn reference() -> BattBeeParams {
    presets::reference_params()
}

fn detector(cfg: DetectorConfig) -> Detector {
    Detector::new(reference(), cfg).unwrap()
}

#[test]
fn state_space_has_the_chain_structure() {
    let p = reference();
    let ss = assemble_state_space(&p);
    assert!((ss.a[(0, 0)] / -1.0521e-2 - 1.0).abs() < 1e-4, "{}", ss.a[(0, 0)]);
    assert_eq!(ss.a[(0, 0)], -1.0 / (p.r_b * p.c_b));
    for i in 0..4 {
        for j in 0..4 {
            if (i < 2) != (j < 2) {
                assert_eq!(ss.a[(i, j)], 0.0, "cross block at ({i}, {j})");
            }
        }
    }
    for i in 0..2 {
        assert!((ss.a[(i, 0)] + ss.a[(i, 1)]).abs() <= 1e-18);
    }
    for i in 0..4 {
        for j in 0..4 {
            let want = if (i, j) == (1, 1) { -1.0 / p.c_s } else { 0.0 };
            assert_eq!(ss.a_f[(i, j)], want);
        }
    }
    assert_eq!(ss.b_f, Vector4::new(0.0, 0.0, 1.0 / p.c_core, 0.0));
    assert_eq!(ss.d_f, Vector2::new(1.0, 0.0));
}

#[test]
fn fault_signals_in_limiting_cases() {
    let p = reference();
    let cool = SimState::uniform(0.8, p.t_onset - 100.0);
    let (f1, f2, f3) = fault_signals(&p, &FaultInputs::NONE, &cool, 0.0).unwrap();
    assert_eq!((f1, f3), (0.0, 0.0));
    assert!(f2.abs() <= p.alpha[0] * (-100.0 * p.alpha[1]).exp());

    let s = SimState::uniform(0.6, T_AMB);
    let i = -7.0;
    let (_, _, f3) = fault_signals(&p, &FaultInputs::new(0.0, 1e12).unwrap(), &s, i).unwrap();
    let open = p.ocv.eval(s.v_s).unwrap() + p.r_o * i;
    assert!((f3 + open).abs() <= 1e-9 * open.abs());

    let full = SimState::uniform(1.0, T_AMB);
    let (f1, f2, _) = fault_signals(&p, &FaultInputs::new(10.0, 0.0).unwrap(), &full, 0.0).unwrap();
    assert_eq!(f1, 10.0);
    let q_ec = p.h_ec * 10.0 / (p.c_b + p.c_s);
    assert!((f2 - q_decomp(&p, &full) - q_ec).abs() <= 1e-12 * q_ec);
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

#[test]
fn scalar_kalman_cases() {
    let stable = kalman_gain_dense(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &scalar(1.0)).unwrap();
    assert!(stable.p[(0, 0)].abs() <= 1e-12 && stable.gain[(0, 0)].abs() <= 1e-12);
    let integrator = kalman_gain_dense(&scalar(0.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
    assert!((integrator.p[(0, 0)] - 1.0).abs() <= 1e-10);
    assert!((integrator.gain[(0, 0)] - 1.0).abs() <= 1e-10);
}

#[test]
fn kalman_gain_solves_the_riccati_equation_for_every_segment() {
    let d = detector(DetectorConfig::default());
    let cfg = &d.config;
    let (q, r) = (linalg::to_dense(&cfg.q_matrix()), linalg::to_dense(&cfg.r_matrix()));
    let a = linalg::to_dense(&d.state_space.a);
    for m in &d.submodels {
        let c = linalg::to_dense(&m.c);
        let sol = kalman_gain_dense(&a, &c, &q, &r).unwrap();
        let res = riccati_residual(&a, &c, &q, &r.clone().try_inverse().unwrap(), &sol.p);
        assert!(res.norm() <= 1e-8 * q.norm(), "segment {}: {:e}", m.index, res.norm());
        assert!(linalg::is_hurwitz(&linalg::to_dense(&m.a_tilde)));
        let l = kalman_gain(&d.state_space.a, &m.c, &cfg.q_matrix(), &cfg.r_matrix()).unwrap();
        assert!((l - m.l).norm() <= 1e-12 * m.l.norm());
    }
}

#[test]
fn blind_voltage_channel_is_not_detectable() {
    let p = reference();
    let ss = assemble_state_space(&p);
    let cfg = DetectorConfig::default();
    let err = kalman_gain(&ss.a, &output_matrix(0.0), &cfg.q_matrix(), &cfg.r_matrix()).unwrap_err();
    assert!(matches!(err, Error::Synthesis(_)), "{err}");
}

fn certificate() -> (Detector, Certificate, NonlinearThresholds) {
    let d = detector(DetectorConfig {
        observer: ObserverKind::Nonlinear,
        ..DetectorConfig::default()
    });
    let (cert, th) = d.nonlinear.clone().expect("the reference cell admits a certificate");
    (d, cert, th)
}

#[test]
fn zero_gain_on_a_stable_system_passes() {
    let mut ss = assemble_state_space(&reference());
    // The electrical chain has a zero eigenvalue; shift it into the left half plane.
    ss.a -= Mat4::identity() * 1e-3;
    let q = Mat4::from_diagonal(&Vector4::new(1.0, 2.0, 0.5, 3.0));
    let p = linalg::mat4(&linalg::lyapunov(&linalg::to_dense(&ss.a), &linalg::to_dense(&(q * 2.0))).unwrap());
    let check = verify_stability(&ss, &Mat4x2::zeros(), &p, &q, 0.3, 5.0).unwrap();
    assert!(check.stable);
    assert!((check.margin - 0.5).abs() <= 1e-6, "margin {}", check.margin);
}

#[test]
fn flipped_gain_fails_the_vertex_test() {
    let (d, cert, _) = certificate();
    assert!(cert.check.stable && cert.check.margin > 0.0);
    let bad = cert.l * -50.0;
    let check = verify_stability(&d.state_space, &bad, &cert.p, &cert.q, d.pwl.psi_min, d.pwl.psi_max).unwrap();
    assert!(!check.stable);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let psi = rng.random_range(d.pwl.psi_min..=d.pwl.psi_max);
        let m = vertex_matrix(&d.state_space.a, &cert.l, &cert.p, &cert.q, psi);
        let (_, top) = linalg::sym_eig_range(&linalg::to_dense(&m));
        assert!(top <= 0.0, "psi = {psi}: {top}");
    }
}

#[test]
fn nonlinear_thresholds_need_a_verified_certificate() {
    let (d, cert, th) = certificate();
    let psi = d.pwl.psi_max.abs().max(d.pwl.psi_min.abs());
    let delta = delta_scalar(&d.config.delta);
    let again = threshold_nonlinear(&cert.p, &cert.q, psi, delta, true).unwrap();
    assert_eq!(again, th);
    assert!(matches!(
        threshold_nonlinear(&cert.p, &cert.q, psi, delta, false),
        Err(Error::Precondition(_))
    ));
    // εP - Q is negative semidefinite at the chosen ε and not beyond it.
    let (_, top) = linalg::sym_eig_range(&linalg::to_dense(&(cert.p * th.epsilon - cert.q)));
    assert!(top <= 1e-12 * cert.q.norm());
    let (_, over) = linalg::sym_eig_range(&linalg::to_dense(&(cert.p * (th.epsilon * 1.001) - cert.q)));
    assert!(over > 0.0);
}

#[test]
fn lyapunov_closed_forms() {
    let a = DMatrix::from_diagonal_element(2, 2, -0.5);
    let w = linalg::lyapunov(&a, &DMatrix::identity(2, 2)).unwrap();
    assert!((w - DMatrix::identity(2, 2)).norm() <= 1e-14);

    let a_tilde = Mat4::from_diagonal(&Vector4::new(-0.7, -2.0, -3.0, -5.0));
    let c = Mat2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let w = solve_lyapunov(&a_tilde, &c).unwrap();
    let mut want = Mat4::zeros();
    want[(0, 0)] = 1.0 / 1.4;
    assert!((w - want).norm() <= 1e-14);

    let unstable = Mat4::from_diagonal(&Vector4::new(-1.0, 0.5, -1.0, -1.0));
    assert!(solve_lyapunov(&unstable, &c).is_err());
}

#[test]
fn linear_threshold_closed_forms() {
    let a = Mat4::identity() * -0.5;
    let c = Mat2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let (pair, w) = threshold_linear(&a, &c, 0.1).unwrap();
    assert!((w[(0, 0)] - 1.0).abs() <= 1e-14 && (w[(1, 1)] - 1.0).abs() <= 1e-14);
    assert!((pair.j2 - 0.1).abs() <= 1e-14);
    // Decaying response peaks at τ = 0.
    assert!((pair.jinf - 0.1).abs() <= 1e-12);

    for m in &detector(DetectorConfig::default()).submodels {
        let c_norm = linalg::norm2(&linalg::to_dense(&m.c));
        assert!(m.threshold.jinf >= c_norm * delta_scalar(&DetectorConfig::default().delta) * (1.0 - 1e-12));
    }
}

/// `C e^{Ã t}` on a piecewise-uniform grid with composite Simpson weights.
struct ResponseGrid {
    r: Vec<Matrix2x4<f64>>,
    w: Vec<f64>,
}

impl ResponseGrid {
    fn new(a: &Mat4, c: &Mat2x4) -> Self {
        let eig = linalg::eigenvalues(&linalg::to_dense(a));
        let fast = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let slow = eig.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
        let horizon = 40.0 / slow;
        let mut edges = vec![0.0, 1.0 / fast];
        while *edges.last().unwrap() < horizon {
            let next = (edges.last().unwrap() * 4.0).min(horizon);
            edges.push(next);
        }
        let n = 2000;
        let mut phi = Mat4::identity();
        let mut r = vec![c * phi];
        let mut w = vec![0.0];
        for win in edges.windows(2) {
            let h = (win[1] - win[0]) / n as f64;
            let step = (a * h).exp();
            *w.last_mut().unwrap() += h / 3.0;
            for k in 1..=n {
                phi = step * phi;
                r.push(c * phi);
                w.push(h / 3.0 * if k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 });
            }
        }
        ResponseGrid { r, w }
    }

    fn gramian(&self) -> Mat4 {
        self.r.iter().zip(&self.w).map(|(r, w)| r.transpose() * r * *w).sum()
    }

    fn jinf(&self, x0: &Vector4<f64>) -> f64 {
        self.r.iter().map(|r| (r * x0).norm()).fold(0.0, f64::max)
    }
}

#[test]
fn gramians_match_quadrature_and_residual() {
    let d = detector(DetectorConfig::default());
    for m in &d.submodels {
        let ctc = m.c.transpose() * m.c;
        let res = m.a_tilde.transpose() * m.gramian + m.gramian * m.a_tilde + ctc;
        assert!(res.norm() <= 1e-10 * ctc.norm(), "segment {}: {:e}", m.index, res.norm() / ctc.norm());
        let quad = ResponseGrid::new(&m.a_tilde, &m.c).gramian();
        let rel = (quad - m.gramian).norm() / m.gramian.norm();
        assert!(rel <= 1e-6, "segment {}: {rel:e}", m.index);
    }
}

fn ball_sample(rng: &mut ChaCha8Rng, radius: f64) -> Vector4<f64> {
    let dir = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
    dir * radius * rng.random::<f64>().powf(0.25)
}

#[test]
fn linear_thresholds_are_sound_and_tight() {
    let d = detector(DetectorConfig::default());
    let delta = delta_scalar(&d.config.delta);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in &d.submodels {
        let grid = ResponseGrid::new(&m.a_tilde, &m.c);
        let w = grid.gramian();
        for k in 0..2000 {
            let x0 = if k < 100 {
                Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).normalize() * delta
            } else {
                ball_sample(&mut rng, delta)
            };
            let j2 = (x0.transpose() * w * x0)[(0, 0)].sqrt();
            assert!(j2 <= m.threshold.j2 * (1.0 + 1e-6), "segment {}: J2 {j2} > {}", m.index, m.threshold.j2);
            let jinf = grid.jinf(&x0);
            assert!(jinf <= m.threshold.jinf * (1.0 + 1e-9), "segment {}: J∞ {jinf} > {}", m.index, m.threshold.jinf);
        }
        // Worst-case directions come within 5 % of the bounds.
        let eig = SymmetricEigen::new(m.gramian);
        let top = eig.eigenvalues.imax();
        let worst = eig.eigenvectors.column(top).into_owned() * delta;
        let j2 = (worst.transpose() * w * worst)[(0, 0)].sqrt();
        assert!(j2 >= 0.95 * m.threshold.j2);
        let (_, tau) = peak_output_gain(&m.a_tilde, &m.c);
        let svd = (m.c * (m.a_tilde * tau).exp()).svd(false, true);
        let best = svd.singular_values.imax();
        let dir = svd.v_t.unwrap().row(best).transpose();
        assert!(grid.jinf(&(dir * delta)) >= 0.95 * m.threshold.jinf);
    }
}

#[test]
fn linear_observer_matches_the_matrix_exponential() {
    let d = detector(DetectorConfig::default());
    let ss = &d.state_space;
    let m = &d.submodels[2];
    let v_s = 0.5 * (m.lo + m.hi);
    let x = Vector4::new(v_s, v_s, T_AMB, T_AMB);
    let u = input(0.0, T_AMB);
    let z = m.c * x;
    let err0 = Vector4::new(1e-3, -1e-3, 0.1, -0.05);
    let rho = linalg::eigenvalues(&linalg::to_dense(&m.a_tilde)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dt = 0.01 / rho;
    let mut det = DetectorState::new(x - err0, 0.95);
    for k in 0..400 {
        let (next, r) = linear_observer_step(m, ss, &det, &z, &u, dt).unwrap();
        let exact = m.c * (m.a_tilde * (k as f64 * dt)).exp() * err0;
        assert!((r - exact).norm() <= 1e-8, "step {k}: {:e}", (r - exact).norm());
        det = next;
    }
    // With no initial error the residual is identically zero.
    let det = DetectorState::new(x, 0.95);
    assert_eq!(linear_residual(m, ss, &det.x_hat, &z, &u), Vector2::zeros());
}

#[test]
fn linear_step_rejects_a_foreign_segment() {
    let d = detector(DetectorConfig::default());
    let m = &d.submodels[1];
    let det = DetectorState::new(Vector4::new(0.99, 0.99, T_AMB, T_AMB), 0.95);
    let z = Vector2::new(0.0, T_AMB);
    let err = linear_observer_step(m, &d.state_space, &det, &z, &input(0.0, T_AMB), 1.0).unwrap_err();
    assert!(matches!(err, Error::Segment { segment: 1, .. }), "{err}");
    let nan = Vector2::new(f64::NAN, T_AMB);
    let inside = DetectorState::new(Vector4::new(m.hi, m.hi, T_AMB, T_AMB), 0.95);
    assert!(matches!(
        linear_observer_step(m, &d.state_space, &inside, &nan, &input(0.0, T_AMB), 1.0),
        Err(Error::Measurement(_))
    ));
}

#[test]
fn nonlinear_residual_is_exact_at_the_truth_and_sees_output_faults() {
    let (d, cert, _) = certificate();
    let p = &d.params;
    let s = SimState {
        v_b: 0.62,
        v_s: 0.6,
        t_core: 305.0,
        t_surf: 302.0,
        decomp_depleted: false,
    };
    let i = -12.0;
    let y = Vector2::new(model::terminal_voltage(p, &FaultInputs::NONE, &s, i).unwrap(), s.t_surf);
    let u = input(i, T_AMB);
    let det = DetectorState::new(Vector4::from(s.to_array()), 0.95);
    let (_, r) = nonlinear_observer_step(p, &d.state_space, &cert.l, &det, &y, &u, 1.0).unwrap();
    assert!(r.norm() <= 1e-12, "{r}");
    let f3 = -0.4;
    let (_, r) = nonlinear_observer_step(p, &d.state_space, &cert.l, &det, &(y + Vector2::new(f3, 0.0)), &u, 1.0).unwrap();
    assert!((r[0] - f3).abs() <= 1e-12 && r[1].abs() <= 1e-12);
}

#[test]
fn lyapunov_function_decays_at_the_certified_rate() {
    let (d, cert, th) = certificate();
    let mut p = d.params.clone();
    // Without background decomposition heat the resting cell is a fixed point.
    p.alpha[0] = 1e-300;
    let delta = delta_scalar(&d.config.delta);
    let lyap = |e: &Vector4<f64>| 0.5 * (e.transpose() * cert.p * e)[(0, 0)];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = input(0.0, T_AMB);
    let dt = 0.5;
    for _ in 0..20 {
        let soc = rng.random_range(0.2..0.8);
        let truth = SimState::uniform(soc, T_AMB);
        let x = Vector4::from(truth.to_array());
        let y = Vector2::new(model::terminal_voltage(&p, &FaultInputs::NONE, &truth, 0.0).unwrap(), T_AMB);
        let err0 = ball_sample(&mut rng, delta);
        let mut det = DetectorState::new(x - err0, 0.95);
        let v0 = lyap(&err0);
        for k in 1..=4000 {
            det = nonlinear_observer_step(&p, &d.state_space, &cert.l, &det, &y, &u, dt).unwrap().0;
            let v = lyap(&(x - det.x_hat));
            let bound = (-th.epsilon * k as f64 * dt).exp() * v0 * (1.0 + 1e-6);
            assert!(v <= bound, "t = {}: V = {v:e} > {bound:e}", k as f64 * dt);
        }
    }
}

#[test]
fn j2_recursion_limits() {
    let r = Vector2::new(0.3, 0.4);
    let c = r.norm();
    let mut det = DetectorState::new(Vector4::zeros(), 0.95);
    for _ in 0..500 {
        det = j2_update(&det, &r, 1.0);
    }
    assert!((det.j2() - c * 4.4721).abs() <= 1e-3);
    assert!((det.j2() - c / (1.0f64 - 0.95).sqrt()).abs() <= 1e-9);

    let mut flat = DetectorState::new(Vector4::zeros(), 1.0);
    for _ in 0..100 {
        flat = j2_update(&flat, &r, 0.5);
    }
    assert!((flat.j2() - c * 50.0f64.sqrt()).abs() <= 1e-12);

    let mut quiet = DetectorState::new(Vector4::zeros(), 0.95);
    for _ in 0..10 {
        quiet = jinf_update(&j2_update(&quiet, &Vector2::zeros(), 1.0), &Vector2::zeros());
    }
    assert_eq!((quiet.j2(), quiet.jinf), (0.0, 0.0));

    let mut sup = DetectorState::new(Vector4::zeros(), 0.95);
    for v in [1.0, 3.0, 2.0] {
        sup = jinf_update(&sup, &Vector2::new(v, 0.0));
    }
    assert_eq!(sup.jinf, 3.0);
}

fn thresholds(inflation: f64) -> Thresholds {
    conservative_threshold(vec![ThresholdPair { j2: 1.0, jinf: 1.0 }], 0.1, inflation).unwrap()
}

#[test]
fn decisions_latch_and_respect_inflation() {
    let th = thresholds(1.2);
    let mut det = DetectorState::new(Vector4::zeros(), 0.95);
    det.j2_sq = 1.1f64.powi(2);
    det = decide(&det, &th, 5.0);
    assert!(!det.alarm);
    det.j2_sq = 1.3f64.powi(2);
    det = decide(&det, &th, 6.0);
    assert!(det.alarm && det.alarm_time == Some(6.0));
    det.j2_sq = 0.0;
    det = decide(&det, &th, 7.0);
    assert!(det.alarm && det.alarm_time == Some(6.0));
    det.reset();
    assert!(!decide(&det, &th, 8.0).alarm);

    let single = conservative_threshold(vec![ThresholdPair { j2: 0.4, jinf: 0.2 }], 0.1, 1.0).unwrap();
    assert_eq!((single.j2, single.jinf), (0.4, 0.2));
    assert!(conservative_threshold(vec![], 0.1, 1.0).is_err());
    assert!(conservative_threshold(vec![ThresholdPair { j2: 1.0, jinf: 1.0 }], 0.1, 0.9).is_err());
}

fn telemetry(faults: Vec<FaultEvent>, t_end: f64) -> (Vec<TelemetrySample>, Option<f64>) {
    let p = reference();
    let tr = run_scenario(&p, &Scenario::rest(1.0, t_end, 0.1).with_faults(faults)).unwrap();
    let onset = tr.rows.iter().find(|r| r.t_core >= p.t_onset).map(|r| r.t);
    (sample_telemetry(&tr, 10, MeasurementNoise::default(), 0).unwrap(), onset)
}

#[test]
fn short_then_runaway_alarms_at_the_first_short() {
    let faults = vec![
        FaultEvent {
            t: 300.0,
            g_isc1: 1.0,
            g_isc2: 50.0,
        },
        FaultEvent {
            t: 2623.0,
            g_isc1: 100.0,
            g_isc2: 1000.0,
        },
    ];
    let (samples, onset) = telemetry(faults, 3600.0);
    let mut d = detector(DetectorConfig::default());
    let rows = d.run(&samples).unwrap();
    let alarm = first_alarm(&rows).unwrap();
    assert!((300.0..=301.0).contains(&alarm), "alarm at {alarm}");
    assert!(onset.unwrap() - alarm > 30.0);
    // The flag never clears within a run.
    let first = rows.iter().position(|r| r.alarm).unwrap();
    assert!(rows[first..].iter().all(|r| r.alarm));
    assert!(rows[..first].iter().all(|r| !r.alarm));
}

#[test]
fn clean_fault_free_run_stays_quiet() {
    let (samples, _) = telemetry(vec![], 2000.0);
    for observer in [ObserverKind::Linear, ObserverKind::Nonlinear] {
        let mut d = detector(DetectorConfig {
            observer,
            ..DetectorConfig::default()
        });
        let rows = d.run(&samples).unwrap();
        assert_eq!(first_alarm(&rows), None, "{observer:?}");
    }
}

#[test]
fn every_ignition_is_announced_before_onset() {
    let mut ignited = 0;
    for g in [1.0, 2.0, 5.0, 10.0, 30.0, 100.0] {
        let (samples, onset) = telemetry(
            vec![FaultEvent {
                t: 300.0,
                g_isc1: g,
                g_isc2: 0.0,
            }],
            6000.0,
        );
        let rows = detector(DetectorConfig::default()).run(&samples).unwrap();
        if let Some(t_on) = onset {
            ignited += 1;
            let alarm = first_alarm(&rows).unwrap_or(f64::INFINITY);
            assert!(alarm < t_on, "g_isc1 = {g}: alarm {alarm}, onset {t_on}");
        }
    }
    assert!(ignited >= 2);
}

#[test]
fn detector_rejects_bad_samples() {
    let (samples, _) = telemetry(vec![], 20.0);
    let mut d = detector(DetectorConfig::default());
    d.process(&samples[1]).unwrap();
    assert!(matches!(d.process(&samples[0]), Err(Error::Measurement(_))));
    let mut bad = samples[2];
    bad.voltage = f64::INFINITY;
    assert!(matches!(d.process(&bad), Err(Error::Measurement(_))));
}

#[test]
fn default_noise_covariances_are_diagonal() {
    let cfg = DetectorConfig::default();
    assert_eq!(cfg.r_matrix(), Matrix2::new(1e-4, 0.0, 0.0, 1e-2));
    assert_eq!(cfg.q_matrix(), Mat4::from_diagonal(&Vector4::new(1e-8, 1e-8, 1e-4, 1e-4)));
    assert_eq!((cfg.eta, cfg.inflation), (0.95, 1.0));
}
