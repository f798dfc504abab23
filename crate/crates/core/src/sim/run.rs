use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::augment::{
    adaptive_lift, fixed_lift, foot_pitch_comp, hip_gamma, pelvis_roll, sea_knee_comp, HipPhase,
};
use crate::error::{Error, Result};
use crate::gait::{nominal_with, solve_periodic};
use crate::linalg::*;
use crate::model::{build_continuous_dynamics, swap_support, transition, Transition};
use crate::selectors::{mirror_u, pos, vel, PELVIS, STANCE, SWING};
use crate::signal::{calibrate_thresholds, DeadZone, IirFilter, VelocityEstimator};
use crate::stabilizer::{truncate_adjustment, Controller, DlqrWeights};

use super::metrics::{compute_metrics, Metrics};
use super::scenario::{AdjustmentMode, ControllerMode, Scenario};
use super::trace::{AugmentRow, Trace, TraceRow};

/// Runs a scenario and evaluates its metrics.
pub fn run_scenario(s: &Scenario) -> Result<(Trace, Metrics)> {
    let trace = simulate(s)?;
    let metrics = compute_metrics(&trace);
    Ok((trace, metrics))
}

/// Closed-loop simulation. Dead-zone thresholds come from the scenario or,
/// when absent, from an unperturbed calibration run with the same sensors.
pub fn simulate(s: &Scenario) -> Result<Trace> {
    s.validate()?;
    let thresholds = match s.thresholds {
        Some(t) => t,
        None => calibrated_thresholds(s)?,
    };
    simulate_with(s, thresholds)
}

/// Standard deviation of the filtered errors of an unperturbed open-loop run
/// on the nominal gait, with the scenario's sensors and a matched plant.
/// Ideal sensors give zero thresholds.
pub fn calibrated_thresholds(s: &Scenario) -> Result<[f64; 8]> {
    if s.sensor.is_ideal() {
        return Ok([0.0; 8]);
    }
    let mut cal = s.clone();
    cal.pushes.clear();
    cal.controller_mode = ControllerMode::OpenLoop;
    cal.adjustment_mode = AdjustmentMode::Torque;
    cal.plant_mass_scale = 1.0;
    cal.initial_speed = None;
    cal.duration = s.calibration_duration;
    cal.thresholds = Some([0.0; 8]);
    let trace = simulate_with(&cal, [0.0; 8])?;
    let channels: Vec<Vec<f64>> = (0..8)
        .map(|c| trace.rows.iter().map(|r| r.e_filt[c]).collect())
        .collect();
    let a = calibrate_thresholds(&channels)?;
    let mut out = [0.0; 8];
    out.copy_from_slice(&a);
    Ok(out)
}

/// Coordinate change of stance-relative positions at a phase switch, in the
/// controller frame: the feet exchange and the lateral axis mirrors.
pub fn phase_jump(v: &[f64]) -> Vec<f64> {
    vec![-v[0], v[1], v[2] - v[0], -(v[3] - v[1])]
}

/// Exchanges the feet; the landing foot sticks to the ground.
pub fn touchdown(q: &Vec12) -> Vec12 {
    let mut out = swap_support(q);
    for a in 0..2 {
        out[vel(STANCE, a)] = 0.0;
    }
    out
}

fn mirror8(v: Vec8, mirrored: bool) -> Vec8 {
    if mirrored {
        Vec8::from_fn(|i, _| if i % 2 == 1 { -v[i] } else { v[i] })
    } else {
        v
    }
}

fn mirror2(v: Vec2, mirrored: bool) -> Vec2 {
    if mirrored {
        Vec2::new(v[0], -v[1])
    } else {
        v
    }
}

/// Hip input (actual frame) that puts the swing foot on `target` (relative
/// to the stance foot) with zero velocity at the end of the phase.
fn track_footstep(rest: &Transition, q: &Vec12, d: f64, tau: f64, target: &Vec2) -> Result<Vec4> {
    let free = rest.a * q + rest.c * d;
    let rows = [pos(SWING, 0), pos(SWING, 1), vel(SWING, 0), vel(SWING, 1)];
    let mut g = nalgebra::Matrix4::<f64>::zeros();
    for (r, &row) in rows.iter().enumerate() {
        for a in 0..2 {
            g[(r, a)] = rest.b[(row, a)];
            g[(r, 2 + a)] = tau * rest.b[(row, a)] + rest.b[(row, 2 + a)];
        }
    }
    let h = Vec4::new(
        q[pos(STANCE, 0)] + target[0] - free[rows[0]],
        q[pos(STANCE, 1)] + target[1] - free[rows[1]],
        -free[rows[2]],
        -free[rows[3]],
    );
    g.lu().solve(&h).ok_or(Error::SingularProjection { tau })
}

/// Simulation with explicit dead-zone thresholds.
pub fn simulate_with(s: &Scenario, thresholds: [f64; 8]) -> Result<Trace> {
    s.validate()?;
    let n = s.ticks_per_phase()?;
    let dt = s.control_dt;
    let step_time = s.params.step_time;
    let z = s.params.z_pelvis;
    let v_des = Vec2::from(s.v_des);

    let gait = solve_periodic(&s.params, v_des, step_time)?;
    let weights = s
        .dlqr
        .unwrap_or_else(|| DlqrWeights::per_unit(&s.params, step_time));
    let ctrl = Controller::new(gait, &weights)?;
    let start = match s.initial_speed {
        Some(v) if v != s.v_des => solve_periodic(&s.params, Vec2::from(v), step_time)?,
        _ => ctrl.gait.clone(),
    };
    let plant = build_continuous_dynamics(&s.params.scaled_masses(s.plant_mass_scale))?;
    let plant_tick = transition(&plant, dt)?;

    let sel = &ctrl.selectors;
    let trans = (0..=n)
        .map(|k| {
            transition(
                &ctrl.dynamics,
                if k == n { step_time } else { k as f64 * dt },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let nominal_rel: Vec<Vec8> = trans
        .iter()
        .map(|tr| sel.m * nominal_with(&ctrl.gait, tr))
        .collect();
    let props: Vec<(Mat8, Mat8x4)> = trans[..n]
        .iter()
        .map(|tr| (sel.m * tr.a * sel.mhat, sel.m * tr.b))
        .collect();
    let end_swing = Vec2::new(nominal_rel[n][0], nominal_rel[n][1]);

    let mut iir = IirFilter::new(s.filter.zeta)?;
    let mut est = VelocityEstimator::new(s.filter.window, dt)?;
    let dead_zone = DeadZone::new(thresholds.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mu = mirror_u();
    let max_rate = s.augment.actuator.max_speed();

    let mut recovery_thresholds = thresholds;
    for (r, f) in recovery_thresholds.iter_mut().zip(&s.recovery_floor) {
        *r = r.max(*f);
    }
    let total = (s.duration / dt).round() as usize;
    let mut trace = Trace {
        rows: Vec::with_capacity(total),
        augment: Vec::with_capacity(total),
        step_time,
        dt,
        ticks_per_phase: n,
        z,
        v_des,
        pushes: s.pushes.clone(),
        fell: false,
        fall_time: None,
        thresholds,
        recovery_thresholds,
    };

    let mut q = start.qbar;
    let mut d = ctrl.gait.dbar;
    let mut dp_cmd = Vec2::zeros();
    let mut held: Option<Vec4> = None;

    for k in 0..total {
        let phase = k / n;
        let i = k % n;
        let t = k as f64 * dt;
        let tau = i as f64 * dt;
        if i == 0 && k > 0 {
            q = touchdown(&q);
            d = -d;
            iir.remap(phase_jump);
            est.remap(phase_jump);
            dp_cmd = Vec2::zeros();
            held = None;
        }
        let lean = (0..2)
            .map(|a| (q[pos(PELVIS, a)] - q[pos(STANCE, a)]).abs())
            .fold(0.0, f64::max);
        if !(lean <= 5.0 * z) {
            trace.fell = true;
            trace.fall_time = Some(t);
            break;
        }
        let mirrored = d * ctrl.gait.dbar < 0.0;

        let mut meas = mirror8(sel.m * q, mirrored);
        for c in 0..8 {
            let w: f64 = StandardNormal.sample(&mut rng);
            meas[c] += s.sensor.bias[c] + s.sensor.noise_sigma[c] * w;
        }
        if s.sensor.quantization > 0.0 {
            let qs = s.sensor.quantization;
            for c in 0..4 {
                meas[c] = (meas[c] / qs).round() * qs;
            }
        }
        let e_raw = meas - nominal_rel[i];
        let e_filt = if s.filtering {
            let p = iir.step(&e_raw.as_slice()[..4]);
            let v = est.step(&p);
            Vec8::from_iterator(p.into_iter().chain(v))
        } else {
            e_raw
        };
        let e_dz = match s.controller_mode {
            ControllerMode::ClosedLoop => Vec8::from_vec(dead_zone.apply(e_filt.as_slice())),
            _ => e_filt,
        };

        let (du, adj) = match s.controller_mode {
            ControllerMode::OpenLoop => (
                Vec4::zeros(),
                truncate_adjustment(Vec2::zeros(), s.trunc, z),
            ),
            _ => {
                let (du, raw) = ctrl.project_and_predict(&props[i], &e_dz, tau)?;
                (du, truncate_adjustment(raw, s.trunc, z))
            }
        };
        let ubar = if mirrored {
            mu * ctrl.gait.ubar
        } else {
            ctrl.gait.ubar
        };
        let mut hip_rate = 0.0;
        let (u, du) = match (s.controller_mode, s.adjustment_mode) {
            (ControllerMode::OpenLoop, _) => (ubar, Vec4::zeros()),
            (_, AdjustmentMode::Torque) => (ubar + if mirrored { mu * du } else { du }, du),
            (_, AdjustmentMode::Step) => {
                let prev = dp_cmd;
                dp_cmd = if s.augment.actuator_enabled {
                    let lim = max_rate * z * dt;
                    prev + (adj.dp - prev).map(|x| x.clamp(-lim, lim))
                } else {
                    adj.dp
                };
                hip_rate = (dp_cmd - prev).amax() / (z * dt);
                let u = match held {
                    Some(u) if tau >= s.step_freeze * step_time => u,
                    _ => {
                        let target = mirror2(end_swing + dp_cmd, mirrored);
                        track_footstep(&trans[n - i], &q, d, tau, &target)?
                    }
                };
                held = Some(u);
                let du = u - ubar;
                (u, if mirrored { mu * du } else { du })
            }
        };

        let mut force = Vec2::zeros();
        for p in s.pushes.iter().filter(|p| p.active(t)) {
            force += Vec2::from(p.force);
        }

        let cfg = &s.augment;
        let (lift_adaptive, theta_hat) = adaptive_lift(e_filt[0], e_filt[2], z, tau, step_time);
        let load = 1.0 - (-(tau / (0.2 * step_time)).powi(2)).exp();
        let (f_stance, f_other) = (cfg.sea.mg * load, cfg.sea.mg * (1.0 - load));
        let (f_left, f_right) = if d > 0.0 {
            (f_stance, f_other)
        } else {
            (f_other, f_stance)
        };
        let (knee_left, knee_right) = sea_knee_comp(f_left, f_right, &cfg.sea);
        trace.augment.push(AugmentRow {
            t,
            lift_fixed: fixed_lift(tau, step_time, &cfg.lift),
            roll: pelvis_roll(tau, step_time, &cfg.lift),
            lift_adaptive,
            theta_hat,
            pitch_comp: foot_pitch_comp(theta_hat),
            hip_gamma: hip_gamma(tau, HipPhase::Swing, step_time),
            knee_left,
            knee_right,
            hip_rate,
        });
        trace.rows.push(TraceRow {
            t,
            phase,
            tau,
            q,
            e_raw,
            e_filt,
            e_dz,
            du,
            dp: adj.dp,
            trunc: adj.truncated.iter().any(|b| *b),
            force,
        });

        let local = Vec4::new(u[0] + tau * u[2], u[1] + tau * u[3], u[2], u[3]);
        q = plant_tick.apply(&q, &local, d, &force);
    }
    Ok(trace)
}
