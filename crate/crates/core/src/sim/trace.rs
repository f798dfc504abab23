use std::fmt::Write as _;

use crate::io::fmt_f64;
use crate::linalg::*;

use super::scenario::PushEvent;

/// One control tick. `q` is the plant state in the world frame; errors,
/// corrections and footstep adjustments are in the controller frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub phase: usize,
    pub tau: f64,
    pub q: Vec12,
    pub e_raw: Vec8,
    pub e_filt: Vec8,
    pub e_dz: Vec8,
    pub du: Vec4,
    /// Truncated footstep adjustment (m).
    pub dp: Vec2,
    pub trunc: bool,
    pub force: Vec2,
}

/// Augmentation signals computed alongside each tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentRow {
    pub t: f64,
    pub lift_fixed: f64,
    pub roll: f64,
    pub lift_adaptive: f64,
    pub theta_hat: f64,
    pub pitch_comp: f64,
    pub hip_gamma: f64,
    pub knee_left: f64,
    pub knee_right: f64,
    /// Hip angle rate implied by the footstep adjustment command (rad/s).
    pub hip_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub augment: Vec<AugmentRow>,
    pub step_time: f64,
    pub dt: f64,
    pub ticks_per_phase: usize,
    pub z: f64,
    pub v_des: Vec2,
    pub pushes: Vec<PushEvent>,
    pub fell: bool,
    pub fall_time: Option<f64>,
    /// Dead-zone thresholds in use.
    pub thresholds: [f64; 8],
    /// Thresholds defining a quiet phase.
    pub recovery_thresholds: [f64; 8],
}

pub fn trace_header() -> String {
    let mut cols = vec!["t".to_string(), "phase".into(), "tau".into()];
    cols.extend((0..12).map(|i| format!("q{i}")));
    for p in ["e_raw", "e_filt", "e_dz"] {
        cols.extend((0..8).map(|i| format!("{p}{i}")));
    }
    cols.extend((0..4).map(|i| format!("du{i}")));
    cols.extend(["dp0", "dp1", "trunc", "fx", "fy"].map(String::from));
    cols.join(",")
}

pub const AUGMENT_HEADER: &str =
    "t,lift_fixed,roll,lift_adaptive,theta_hat,pitch_comp,hip_gamma,knee_left,knee_right,hip_rate";

impl Trace {
    pub fn to_csv(&self) -> String {
        let mut out = trace_header();
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", fmt_f64(r.t), r.phase, fmt_f64(r.tau));
            let vals =
                r.q.iter()
                    .chain(r.e_raw.iter())
                    .chain(r.e_filt.iter())
                    .chain(r.e_dz.iter())
                    .chain(r.du.iter())
                    .chain(r.dp.iter());
            for v in vals {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                u8::from(r.trunc),
                fmt_f64(r.force[0]),
                fmt_f64(r.force[1])
            );
        }
        out
    }

    pub fn augment_csv(&self) -> String {
        let mut out = format!("{AUGMENT_HEADER}\n");
        for a in &self.augment {
            let v = [
                a.t,
                a.lift_fixed,
                a.roll,
                a.lift_adaptive,
                a.theta_hat,
                a.pitch_comp,
                a.hip_gamma,
                a.knee_left,
                a.knee_right,
                a.hip_rate,
            ];
            let line: Vec<String> = v.iter().map(|x| fmt_f64(*x)).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// Rows of phase `k`.
    pub fn phase_rows(&self, k: usize) -> &[TraceRow] {
        let lo = (k * self.ticks_per_phase).min(self.rows.len());
        let hi = ((k + 1) * self.ticks_per_phase).min(self.rows.len());
        &self.rows[lo..hi]
    }

    /// Number of phases fully contained in the trace.
    pub fn complete_phases(&self) -> usize {
        self.rows.len() / self.ticks_per_phase
    }

    /// Phase index containing time `t`.
    pub fn phase_of(&self, t: f64) -> usize {
        (t / self.step_time + 1e-9).floor().max(0.0) as usize
    }
}
