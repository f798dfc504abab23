use lin3lp::io::read_columns;
use lin3lp::selectors::{pos, PELVIS};
use lin3lp::signal::calibrate_thresholds;
use lin3lp::sim::*;

fn push(t: f64, len: f64, f: [f64; 2]) -> PushEvent {
    PushEvent {
        t_start: t,
        t_end: t + len,
        force: f,
        kind: PushKind::Impulse,
    }
}

fn noisy() -> SensorModel {
    SensorModel {
        noise_sigma: [0.001, 0.0015, 0.002, 0.0025, 0.01, 0.015, 0.02, 0.025],
        bias: [0.0; 8],
        quantization: 0.0,
    }
}

#[test]
fn same_seed_same_trace() {
    let s = Scenario {
        duration: 2.0,
        sensor: noisy(),
        seed: 4,
        pushes: vec![push(0.9, 0.1, [5.0, 2.0])],
        ..Scenario::default()
    };
    let a = simulate(&s).unwrap().to_csv();
    let b = simulate(&s).unwrap().to_csv();
    assert_eq!(a, b);
    let c = simulate(&Scenario { seed: 5, ..s }).unwrap().to_csv();
    assert_ne!(a, c);
}

#[test]
fn scenario_json_round_trip_reproduces_trace() {
    let s = Scenario {
        duration: 1.2,
        sensor: noisy(),
        seed: 9,
        adjustment_mode: AdjustmentMode::Step,
        ..Scenario::default()
    };
    let back = Scenario::from_json(&s.to_json().unwrap()).unwrap();
    assert_eq!(
        simulate(&s).unwrap().to_csv(),
        simulate(&back).unwrap().to_csv()
    );
}

#[test]
fn open_loop_push_moves_pelvis_along_force() {
    let base = Scenario {
        duration: 1.0,
        controller_mode: ControllerMode::OpenLoop,
        ..Scenario::default()
    };
    let free = simulate(&base).unwrap();
    for (f, axis, sign) in [
        ([8.0, 0.0], 0, 1.0),
        ([-8.0, 0.0], 0, -1.0),
        ([0.0, 8.0], 1, 1.0),
        ([0.0, -8.0], 1, -1.0),
    ] {
        let pushed = Scenario {
            pushes: vec![PushEvent {
                t_start: 0.5,
                t_end: 1.0,
                force: f,
                kind: PushKind::Continuous,
            }],
            ..base.clone()
        };
        let tr = simulate(&pushed).unwrap();
        let k = 400;
        let dx = tr.rows[k].q[pos(PELVIS, axis)] - free.rows[k].q[pos(PELVIS, axis)];
        assert!(dx * sign > 0.0, "force {f:?}: dx = {dx:e}");
        // Nothing happens before the push.
        assert_eq!(tr.rows[240].q, free.rows[240].q);
    }
}

#[test]
fn closed_loop_tracks_commanded_speed_from_rest() {
    for v in [0.1, 0.2, -0.1] {
        let s = Scenario {
            v_des: [v, 0.0],
            initial_speed: Some([0.0, 0.0]),
            duration: 3.2,
            ..Scenario::default()
        };
        let (_, m) = run_scenario(&s).unwrap();
        assert!(!m.fell);
        let err = m.final_velocity_error.unwrap();
        assert!(err[0].abs() < 0.05 * v.abs(), "v = {v}: error {err:?}");
        assert!(err[1].abs() < 1e-3, "lateral drift {err:?}");
    }
}

#[test]
fn step_and_torque_modes_agree_without_truncation() {
    let mk = |mode| Scenario {
        duration: 2.4,
        adjustment_mode: mode,
        step_freeze: 1.0,
        trunc: 1.0,
        pushes: vec![push(0.9, 0.1, [4.0, 1.5])],
        ..Scenario::default()
    };
    let a = simulate(&mk(AdjustmentMode::Torque)).unwrap();
    let b = simulate(&mk(AdjustmentMode::Step)).unwrap();
    let worst = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(x, y)| (x.q - y.q).amax())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "state deviation {worst:e}");
}

#[test]
fn recovery_steps_grow_with_push_magnitude() {
    for mode in [AdjustmentMode::Torque, AdjustmentMode::Step] {
        let base = Scenario {
            duration: 5.0,
            adjustment_mode: mode,
            pushes: vec![push(0.9, 0.1, [1.0, 0.0])],
            ..Scenario::default()
        };
        let rows = sweep(
            &base,
            SweepAxis::PushMagnitude,
            &[0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0],
        )
        .unwrap();
        let steps: Vec<usize> = rows
            .iter()
            .map(|r| r.metrics.steps_to_recover.expect("recovers"))
            .collect();
        assert!(
            steps.windows(2).all(|w| w[0] <= w[1]),
            "{mode:?}: {steps:?}"
        );
    }
}

#[test]
fn truncation_limits_step_mode_and_large_pushes_fall() {
    let base = Scenario {
        duration: 4.0,
        adjustment_mode: AdjustmentMode::Step,
        pushes: vec![push(0.9, 0.1, [40.0, 0.0])],
        ..Scenario::default()
    };
    let (tr, m) = run_scenario(&base).unwrap();
    assert!(m.fell);
    assert!(!m.capture);
    assert!(tr.rows.iter().any(|r| r.trunc));
    assert!(tr.rows.iter().all(|r| r.dp.amax() <= base.trunc + 1e-15));
    assert_eq!(m.steps_to_recover, None);
}

#[test]
fn timing_of_a_short_push_does_not_move_the_final_footstep_afterwards() {
    let base = Scenario {
        duration: 1.6,
        pushes: vec![push(0.8, 0.02, [5.0, 3.0])],
        ..Scenario::default()
    };
    let grid: Vec<f64> = (0..8).map(|i| 0.02 + 0.045 * i as f64).collect();
    for row in sweep(&base, SweepAxis::PushTimeInPhase, &grid).unwrap() {
        let spread = row.metrics.post_push_dp_spread.unwrap();
        assert!(spread < 1e-6, "push at {}: spread {spread:e}", row.value);
    }
}

#[test]
fn calibration_recovers_sensor_noise_from_open_loop_trace() {
    let s = Scenario {
        duration: 2.0,
        controller_mode: ControllerMode::OpenLoop,
        sensor: noisy(),
        seed: 12,
        ..Scenario::default()
    };
    let csv = simulate(&s).unwrap().to_csv();
    let cols = read_columns(csv.as_bytes(), "e_raw", 8).unwrap();
    let thr = calibrate_thresholds(&cols).unwrap();
    for (a, sigma) in thr.iter().zip(s.sensor.noise_sigma) {
        assert!((a / sigma - 1.0).abs() < 0.1, "{a} vs {sigma}");
    }
    // Automatic calibration is the same procedure.
    let auto = calibrated_thresholds(&Scenario {
        filtering: false,
        ..s.clone()
    })
    .unwrap();
    for (a, sigma) in auto.iter().zip(s.sensor.noise_sigma) {
        assert!((a / sigma - 1.0).abs() < 0.1, "{a} vs {sigma}");
    }
}

#[test]
fn lighter_filter_still_recovers_small_pushes() {
    let s = Scenario {
        duration: 4.0,
        filtering: true,
        filter: FilterConfig {
            zeta: 0.5,
            window: 5,
        },
        pushes: vec![push(0.9, 0.1, [5.0, 0.0])],
        ..Scenario::default()
    };
    let (_, m) = run_scenario(&s).unwrap();
    assert!(m.recovered, "{m:?}");
}

#[test]
fn continuous_push_is_absorbed_with_a_speed_offset() {
    let s = Scenario {
        duration: 6.0,
        pushes: vec![PushEvent {
            t_start: 0.8,
            t_end: 6.0,
            force: [3.0, 0.0],
            kind: PushKind::Continuous,
        }],
        ..Scenario::default()
    };
    let (tr, m) = run_scenario(&s).unwrap();
    assert!(!m.fell);
    // The robot drifts along the force without falling.
    let last = tr.rows.last().unwrap();
    assert!(last.q[pos(PELVIS, 0)] > 0.0);
    assert!(m.final_velocity_error.unwrap()[0] > 0.0);
}
