use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::signal::{DEFAULT_WINDOW, DEFAULT_ZETA};
use crate::stabilizer::{DlqrWeights, DEFAULT_TRUNCATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PushKind {
    #[default]
    Impulse,
    Continuous,
}

/// Rectangular horizontal force on the torso, active on `[t_start, t_end)`.
/// Both edges tolerate rounding in accumulated tick times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushEvent {
    pub t_start: f64,
    pub t_end: f64,
    /// Force (N), sagittal and lateral.
    pub force: [f64; 2],
    #[serde(default)]
    pub kind: PushKind,
}

impl PushEvent {
    pub fn active(&self, t: f64) -> bool {
        const EPS: f64 = 1e-9;
        t >= self.t_start - EPS && t < self.t_end - EPS
    }
}

/// Measurement model applied to the stance-relative coordinates, expressed in
/// the controller frame. Channel order: `s1, s2` positions then velocities,
/// each (sagittal, lateral).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    pub noise_sigma: [f64; 8],
    pub bias: [f64; 8],
    /// Position quantization step (m); 0 disables.
    pub quantization: f64,
}

impl SensorModel {
    pub fn is_ideal(&self) -> bool {
        self.noise_sigma.iter().chain(&self.bias).all(|v| *v == 0.0) && self.quantization == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    OpenLoop,
    #[default]
    ClosedLoop,
    ClosedLoopNoDeadzone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentMode {
    /// Add the projected correction to the nominal hip torque.
    #[default]
    Torque,
    /// Position-control the swing foot onto the adjusted footstep.
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub zeta: f64,
    pub window: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            zeta: DEFAULT_ZETA,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub params: ModelParams,
    pub v_des: [f64; 2],
    /// Speed of the gait the robot starts on; defaults to `v_des`.
    pub initial_speed: Option<[f64; 2]>,
    pub duration: f64,
    pub control_dt: f64,
    pub pushes: Vec<PushEvent>,
    pub sensor: SensorModel,
    pub controller_mode: ControllerMode,
    pub adjustment_mode: AdjustmentMode,
    /// Footstep adjustment saturation per axis (m).
    pub trunc: f64,
    pub seed: u64,
    /// IIR and velocity estimation on the measured errors. Off by default:
    /// the point-foot loop tolerates only about 10 ms of estimation lag, and
    /// the default filter adds several times that.
    pub filtering: bool,
    pub filter: FilterConfig,
    /// Dead-zone thresholds; calibrated from an unperturbed open-loop run
    /// when absent.
    pub thresholds: Option<[f64; 8]>,
    /// Lower bound of the recovery thresholds.
    pub recovery_floor: [f64; 8],
    /// Plant masses relative to the controller model.
    pub plant_mass_scale: f64,
    pub dlqr: Option<DlqrWeights>,
    /// Length of the automatic calibration run (s).
    pub calibration_duration: f64,
    /// Fraction of the phase after which step-mode commands are held.
    pub step_freeze: f64,
    pub augment: AugmentConfig,
}

pub const DEFAULT_RECOVERY_FLOOR: [f64; 8] = [0.005, 0.005, 0.005, 0.005, 0.05, 0.05, 0.05, 0.05];

impl Default for Scenario {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            v_des: [0.0, 0.0],
            initial_speed: None,
            duration: 4.0,
            control_dt: 0.002,
            pushes: vec![],
            sensor: SensorModel::default(),
            controller_mode: ControllerMode::default(),
            adjustment_mode: AdjustmentMode::default(),
            trunc: DEFAULT_TRUNCATION,
            seed: 0,
            filtering: false,
            filter: FilterConfig::default(),
            thresholds: None,
            recovery_floor: DEFAULT_RECOVERY_FLOOR,
            plant_mass_scale: 1.0,
            dlqr: None,
            calibration_duration: 2.0,
            step_freeze: 0.9,
            augment: AugmentConfig::default(),
        }
    }
}

fn bad(msg: String) -> Error {
    Error::Scenario(msg)
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Control ticks per phase.
    pub fn ticks_per_phase(&self) -> Result<usize> {
        let n = (self.params.step_time / self.control_dt).round();
        if n < 1.0
            || (n * self.control_dt - self.params.step_time).abs() > 1e-9 * self.params.step_time
        {
            return Err(bad(format!(
                "step time {} is not a multiple of the control period {}",
                self.params.step_time, self.control_dt
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(bad(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.control_dt > 0.0) {
            return Err(bad(format!(
                "control_dt must be positive, got {}",
                self.control_dt
            )));
        }
        if !(self.trunc > 0.0) {
            return Err(bad(format!("trunc must be positive, got {}", self.trunc)));
        }
        self.ticks_per_phase()?;
        for p in &self.pushes {
            if !(p.t_end > p.t_start) || !p.force.iter().all(|f| f.is_finite()) {
                return Err(bad(format!("invalid push {p:?}")));
            }
        }
        let s = &self.sensor;
        if s.noise_sigma.iter().any(|v| !(*v >= 0.0)) || !(s.quantization >= 0.0) {
            return Err(bad(
                "sensor noise and quantization must be non-negative".into()
            ));
        }
        if !s.bias.iter().all(|v| v.is_finite()) {
            return Err(bad("sensor bias must be finite".into()));
        }
        if !(self.filter.zeta > 0.0 && self.filter.zeta <= 1.0) || self.filter.window == 0 {
            return Err(bad(
                "filter needs 0 < zeta <= 1 and a positive window".into()
            ));
        }
        if let Some(t) = &self.thresholds {
            if t.iter().any(|v| !(*v >= 0.0)) {
                return Err(bad("thresholds must be non-negative".into()));
            }
        }
        if self.recovery_floor.iter().any(|v| !(*v >= 0.0)) {
            return Err(bad("recovery floor must be non-negative".into()));
        }
        if !(self.plant_mass_scale > 0.0) {
            return Err(bad("plant_mass_scale must be positive".into()));
        }
        if !(self.step_freeze > 0.0 && self.step_freeze <= 1.0) {
            return Err(bad("step_freeze must lie in (0, 1]".into()));
        }
        if !(self.calibration_duration > 0.0) {
            return Err(bad("calibration_duration must be positive".into()));
        }
        Ok(())
    }

    /// Time at which the last push ends, if any.
    pub fn last_push_end(&self) -> Option<f64> {
        self.pushes.iter().map(|p| p.t_end).reduce(f64::max)
    }
}
