use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metrics::Metrics;
use super::run::run_scenario;
use super::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Magnitude (N) of the first push, keeping its direction.
    PushMagnitude,
    /// Start of the first push relative to the start of its phase (s).
    PushTimeInPhase,
    /// Sagittal commanded speed (m/s).
    VDes,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "push_magnitude" => Ok(Self::PushMagnitude),
            "push_time_in_phase" => Ok(Self::PushTimeInPhase),
            "v_des" => Ok(Self::VDes),
            other => Err(Error::Scenario(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Metrics,
}

/// The base scenario with one axis set to `value`.
pub fn apply_axis(base: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match axis {
        SweepAxis::PushMagnitude => {
            let p = s
                .pushes
                .first_mut()
                .ok_or_else(|| Error::Scenario("sweep axis needs a push".into()))?;
            let norm = p.force[0].hypot(p.force[1]);
            let dir = if norm > 0.0 {
                [p.force[0] / norm, p.force[1] / norm]
            } else {
                [1.0, 0.0]
            };
            p.force = [value * dir[0], value * dir[1]];
        }
        SweepAxis::PushTimeInPhase => {
            let t = s.params.step_time;
            let p = s
                .pushes
                .first_mut()
                .ok_or_else(|| Error::Scenario("sweep axis needs a push".into()))?;
            if !(0.0..t).contains(&value) {
                return Err(Error::Scenario(format!(
                    "push time {value} outside [0, {t})"
                )));
            }
            let len = p.t_end - p.t_start;
            p.t_start = (p.t_start / t + 1e-9).floor() * t + value;
            p.t_end = p.t_start + len;
        }
        SweepAxis::VDes => s.v_des[0] = value,
    }
    s.validate()?;
    Ok(s)
}

/// One run per grid value; falls are reported in the metrics.
pub fn sweep(base: &Scenario, axis: SweepAxis, grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid.iter()
        .map(|&value| {
            let s = apply_axis(base, axis, value)?;
            Ok(SweepRow {
                value,
                metrics: run_scenario(&s)?.1,
            })
        })
        .collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "value,steps_to_recover,recovered,fell,max_dp0,max_dp1,post_push_dp_spread,final_v_err0,final_v_err1,dp_variance\n",
    );
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:e}"));
    for r in rows {
        let m = &r.metrics;
        let fv = m.final_velocity_error;
        let _ = writeln!(
            out,
            "{:e},{},{},{},{:e},{:e},{},{},{},{:e}",
            r.value,
            m.steps_to_recover
                .map_or_else(|| "none".to_string(), |s| s.to_string()),
            m.recovered,
            m.fell,
            m.max_abs_dp[0],
            m.max_abs_dp[1],
            opt(m.post_push_dp_spread),
            opt(fv.map(|v| v[0])),
            opt(fv.map(|v| v[1])),
            m.dp_variance,
        );
    }
    out
}
