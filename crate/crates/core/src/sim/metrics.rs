use serde::{Deserialize, Serialize};

use crate::linalg::Vec2;
use crate::selectors::{pos, PELVIS};

use super::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Phase boundaries after the last push until two consecutive quiet
    /// phases begin; `None` if that never happens.
    pub steps_to_recover: Option<usize>,
    pub recovered: bool,
    pub fell: bool,
    pub fall_time: Option<f64>,
    /// Survived and recovered.
    pub capture: bool,
    pub max_abs_dp: [f64; 2],
    /// Variance of the footstep adjustment, summed over both axes (m^2).
    pub dp_variance: f64,
    /// Spread of the footstep adjustment between the end of the last push and
    /// the end of its phase.
    pub post_push_dp_spread: Option<f64>,
    /// Sagittal speed error and lateral drift over the last two phases (m/s).
    pub final_velocity_error: Option<[f64; 2]>,
    pub max_hip_rate: f64,
    pub phases: usize,
    pub thresholds: [f64; 8],
    pub recovery_thresholds: [f64; 8],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recovery {
    pub steps_to_recover: Option<usize>,
    pub recovered: bool,
}

/// Phase in which the last push ends.
fn push_phase(trace: &Trace) -> Option<usize> {
    let end = trace.pushes.iter().map(|p| p.t_end).reduce(f64::max)?;
    Some(trace.phase_of((end - 1e-9).max(0.0)))
}

fn quiet(trace: &Trace, phase: usize, thresholds: &[f64; 8]) -> bool {
    trace
        .phase_rows(phase)
        .iter()
        .all(|r| r.e_filt.iter().zip(thresholds).all(|(e, a)| e.abs() < *a))
}

pub fn detect_recovery(trace: &Trace, thresholds: &[f64; 8]) -> Recovery {
    let none = Recovery {
        steps_to_recover: None,
        recovered: false,
    };
    if trace.fell || trace.rows.is_empty() {
        return none;
    }
    let first = push_phase(trace).map_or(0, |p| p + 1);
    let complete = trace.complete_phases();
    let mut j = first;
    while j + 1 < complete {
        if quiet(trace, j, thresholds) && quiet(trace, j + 1, thresholds) {
            let steps = match push_phase(trace) {
                Some(p) => j - p,
                None => j,
            };
            return Recovery {
                steps_to_recover: Some(steps),
                recovered: true,
            };
        }
        j += 1;
    }
    none
}

/// Mean pelvis velocity over phase `k`, from the phase-start states.
pub fn phase_velocity(trace: &Trace, k: usize) -> Option<Vec2> {
    let a = trace.rows.get(k * trace.ticks_per_phase)?;
    let b = trace.rows.get((k + 1) * trace.ticks_per_phase)?;
    Some(Vec2::new(
        (b.q[pos(PELVIS, 0)] - a.q[pos(PELVIS, 0)]) / trace.step_time,
        (b.q[pos(PELVIS, 1)] - a.q[pos(PELVIS, 1)]) / trace.step_time,
    ))
}

pub fn compute_metrics(trace: &Trace) -> Metrics {
    let rec = detect_recovery(trace, &trace.recovery_thresholds);
    let mut max_abs_dp = [0.0f64; 2];
    let mut mean = [0.0; 2];
    for r in &trace.rows {
        for a in 0..2 {
            max_abs_dp[a] = max_abs_dp[a].max(r.dp[a].abs());
            mean[a] += r.dp[a];
        }
    }
    let n = trace.rows.len().max(1) as f64;
    let mean = mean.map(|m| m / n);
    let dp_variance = trace
        .rows
        .iter()
        .map(|r| (0..2).map(|a| (r.dp[a] - mean[a]).powi(2)).sum::<f64>())
        .sum::<f64>()
        / n;

    let post_push_dp_spread = trace
        .pushes
        .iter()
        .map(|p| p.t_end)
        .reduce(f64::max)
        .and_then(|end| {
            let phase = push_phase(trace)?;
            let rows: Vec<_> = trace
                .phase_rows(phase)
                .iter()
                .filter(|r| r.t >= end - 1e-9)
                .collect();
            if rows.is_empty() {
                return None;
            }
            let spread = (0..2)
                .map(|a| {
                    let (lo, hi) = rows
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                            (lo.min(r.dp[a]), hi.max(r.dp[a]))
                        });
                    hi - lo
                })
                .fold(0.0, f64::max);
            Some(spread)
        });

    // Phase k has a velocity only if phase k + 1 started.
    let starts = trace.rows.len().div_ceil(trace.ticks_per_phase);
    let final_velocity_error = if trace.fell || starts < 3 {
        None
    } else {
        let v1 = phase_velocity(trace, starts - 2);
        let v2 = phase_velocity(trace, starts - 3);
        v1.zip(v2).map(|(a, b)| {
            let v = (a + b) / 2.0;
            [v[0] - trace.v_des[0], v[1]]
        })
    };

    Metrics {
        steps_to_recover: rec.steps_to_recover,
        recovered: rec.recovered,
        fell: trace.fell,
        fall_time: trace.fall_time,
        capture: rec.recovered && !trace.fell,
        max_abs_dp,
        dp_variance,
        post_push_dp_spread,
        final_velocity_error,
        max_hip_rate: trace.augment.iter().map(|a| a.hip_rate).fold(0.0, f64::max),
        phases: starts,
        thresholds: trace.thresholds,
        recovery_thresholds: trace.recovery_thresholds,
    }
}
