//! Trajectory augmentations and hardware-side models: foot lift profiles,
//! pelvis roll, hip switching, knee spring compensation, foot pitch feedback
//! and the lumped actuator model.
//!
//! Joint-level quantities are mapped to Cartesian ones through the pelvis
//! height (hip angle) and the shank length (knee compensation).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

fn half_sine(t: f64, step_time: f64) -> f64 {
    (PI * t / step_time).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiftConfig {
    /// Half-sine swing foot lift amplitude (m).
    pub z_fixed_amp: f64,
    /// Pelvis roll amplitude (rad).
    pub roll_amp: f64,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self {
            z_fixed_amp: 0.01,
            roll_amp: 0.1,
        }
    }
}

pub fn fixed_lift(t: f64, step_time: f64, cfg: &LiftConfig) -> f64 {
    cfg.z_fixed_amp * half_sine(t, step_time)
}

pub fn pelvis_roll(t: f64, step_time: f64, cfg: &LiftConfig) -> f64 {
    cfg.roll_amp * half_sine(t, step_time)
}

/// Foot lift produced by rolling a pelvis of width `w` by `roll` (m).
pub fn roll_lift(roll: f64, w_pelvis: f64) -> f64 {
    w_pelvis * roll.sin()
}

/// Adaptive lift from the filtered relative errors `e1` (swing) and `e2`
/// (pelvis) along one axis. Returns `(dz, theta_hat)`.
pub fn adaptive_lift(e1: f64, e2: f64, z: f64, t: f64, step_time: f64) -> (f64, f64) {
    let theta = ((e2 - e1) / z).atan();
    let dz = z * (1.0 - theta.cos()) * half_sine(t, step_time);
    (dz.max(0.0), theta)
}

/// Foot orientation feedback keeping the sole horizontal.
pub fn foot_pitch_comp(theta_hat: f64) -> f64 {
    -theta_hat
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HipPhase {
    Swing,
    Stance,
}

/// Blend factor between hip tracking and torso regulation.
pub fn hip_gamma(t: f64, phase: HipPhase, step_time: f64) -> f64 {
    let t1 = 0.2 * step_time;
    let e = (-(t / t1).powi(2)).exp();
    match phase {
        HipPhase::Stance => e,
        HipPhase::Swing => 1.0 - e,
    }
}

/// Hip voltage command blending the joint error and the torso pitch.
pub fn hip_blend(
    t: f64,
    phase: HipPhase,
    theta_des: f64,
    theta_act: f64,
    theta_pitch: f64,
    k_d: f64,
    step_time: f64,
) -> f64 {
    let gamma = hip_gamma(t, phase, step_time);
    k_d * (gamma * (theta_des - theta_act) + (1.0 - gamma) * (-theta_pitch))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeaComp {
    /// Mean knee spring deflections (rad).
    pub mu_left: f64,
    pub mu_right: f64,
    /// Total weight (N).
    pub mg: f64,
    /// Shank length (m).
    pub shank: f64,
}

impl Default for SeaComp {
    fn default() -> Self {
        Self {
            mu_left: 0.128,
            mu_right: 0.056,
            mg: 30.0 * 9.81,
            shank: 0.25,
        }
    }
}

/// Knee angle offsets proportional to the normalized contact forces.
pub fn sea_knee_comp(f_left: f64, f_right: f64, comp: &SeaComp) -> (f64, f64) {
    (
        -(f_left.abs() / comp.mg) * comp.mu_left,
        -(f_right.abs() / comp.mg) * comp.mu_right,
    )
}

/// Horizontal pelvis-foot correction of a knee offset (m).
pub fn knee_horizontal_effect(dtheta: f64, comp: &SeaComp) -> f64 {
    comp.shank * dtheta.abs()
}

/// Lumped voltage model `v = alpha w + beta (J a + tau + A_c |w|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActuatorModel {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "J_m")]
    pub j_m: f64,
    #[serde(rename = "A_c")]
    pub a_c: f64,
    pub v_max: f64,
}

impl Default for ActuatorModel {
    fn default() -> Self {
        Self {
            alpha: 5.42,
            beta: 0.45,
            j_m: 0.23,
            a_c: 1.66,
            v_max: 15.0,
        }
    }
}

/// Output of one actuator evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorResponse {
    pub accel: f64,
    /// Commanded voltage after clamping.
    pub voltage: f64,
    /// True when `|velocity|` exceeds the no-load bound.
    pub over_speed: bool,
}

impl ActuatorModel {
    /// No-load steady-state speed at supply voltage (rad/s).
    pub fn max_speed(&self) -> f64 {
        self.v_max / (self.alpha + self.beta * self.a_c)
    }

    /// Series stiffness seen by a position loop of gain `k_d` (V/rad).
    pub fn position_stiffness(&self, k_d: f64) -> f64 {
        k_d / self.beta
    }

    pub fn step(&self, v_cmd: f64, velocity: f64, torque_out: f64) -> ActuatorResponse {
        let v = v_cmd.clamp(-self.v_max, self.v_max);
        let accel =
            ((v - self.alpha * velocity) / self.beta - torque_out - self.a_c * velocity.abs())
                / self.j_m;
        ActuatorResponse {
            accel,
            voltage: v,
            over_speed: velocity.abs() > self.max_speed() + 1e-12,
        }
    }
}

/// Free-function form of [`ActuatorModel::step`].
pub fn actuator_step(
    m: &ActuatorModel,
    v_cmd: f64,
    velocity: f64,
    torque_out: f64,
) -> ActuatorResponse {
    m.step(v_cmd, velocity, torque_out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub lift: LiftConfig,
    pub sea: SeaComp,
    pub actuator: ActuatorModel,
    /// Rate-limit commanded swing adjustments by the actuator speed bound.
    pub actuator_enabled: bool,
    /// Hip position gain (V/rad).
    pub hip_gain: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            lift: LiftConfig::default(),
            sea: SeaComp::default(),
            actuator: ActuatorModel::default(),
            actuator_enabled: false,
            hip_gain: 100.0,
        }
    }
}
