//! Physical parameters of the three-pendulum biped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default pelvis height, chosen so that a 15 cm step truncation is 0.35 z.
pub const DEFAULT_PELVIS_HEIGHT: f64 = 0.15 / 0.35;

/// Physical parameters of the model. JSON field names are stable and match
/// the struct field names, with the inertias and step time spelled `I_leg`,
/// `I_torso` and `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Mass of each leg pendulum (kg).
    pub m_leg: f64,
    /// Torso mass (kg).
    pub m_torso: f64,
    /// Constant pelvis height (m).
    pub z_pelvis: f64,
    /// Height of the leg CoM as a fraction of `z_pelvis`, measured from the foot.
    pub r_leg_com: f64,
    /// Torso CoM height above the pelvis (m).
    pub h_torso_com: f64,
    /// Distance between the two hip joints (m).
    pub w_pelvis: f64,
    /// Leg inertia about its CoM, sagittal and lateral (kg m^2).
    #[serde(rename = "I_leg")]
    pub i_leg: f64,
    /// Torso inertia about its CoM (kg m^2). The torso is held upright, so this
    /// value does not enter the dynamics.
    #[serde(rename = "I_torso")]
    pub i_torso: f64,
    /// Gravity (m/s^2).
    pub g: f64,
    /// Step time (s).
    #[serde(rename = "T")]
    pub step_time: f64,
}

impl Default for ModelParams {
    /// A COMAN-sized robot: 30 kg total, each leg 22.5 % of the body mass,
    /// 14 cm pelvis and 0.4 s steps. Inertias use a slender-rod approximation.
    fn default() -> Self {
        let m_total = 30.0;
        let m_leg = 0.225 * m_total;
        let m_torso = m_total - 2.0 * m_leg;
        let z = DEFAULT_PELVIS_HEIGHT;
        let h = 0.3;
        Self {
            m_leg,
            m_torso,
            z_pelvis: z,
            r_leg_com: 0.5,
            h_torso_com: h,
            w_pelvis: 0.14,
            i_leg: m_leg * z * z / 12.0,
            i_torso: m_torso * (2.0 * h) * (2.0 * h) / 12.0,
            g: 9.81,
            step_time: 0.4,
        }
    }
}

impl ModelParams {
    pub fn total_mass(&self) -> f64 {
        2.0 * self.m_leg + self.m_torso
    }

    /// Returns a copy with leg mass `m_leg` and a slender-rod leg inertia.
    pub fn with_leg_mass(mut self, m_leg: f64) -> Self {
        self.m_leg = m_leg;
        self.i_leg = m_leg * self.z_pelvis * self.z_pelvis / 12.0;
        self
    }

    /// Returns a copy with every mass and inertia multiplied by `scale`.
    pub fn scaled_masses(mut self, scale: f64) -> Self {
        self.m_leg *= scale;
        self.m_torso *= scale;
        self.i_leg *= scale;
        self.i_torso *= scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams {
                    name,
                    reason: format!("must be > 0, got {v}"),
                })
            }
        }
        fn non_negative(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParams {
                    name,
                    reason: format!("must be >= 0, got {v}"),
                })
            }
        }
        positive("m_leg", self.m_leg)?;
        positive("m_torso", self.m_torso)?;
        positive("z_pelvis", self.z_pelvis)?;
        positive("g", self.g)?;
        positive("T", self.step_time)?;
        positive("I_leg", self.i_leg)?;
        // h = 0 and w = 0 are the LIP-style limits and stay admissible.
        non_negative("h_torso_com", self.h_torso_com)?;
        non_negative("w_pelvis", self.w_pelvis)?;
        non_negative("I_torso", self.i_torso)?;
        if !(self.r_leg_com > 0.0 && self.r_leg_com < 1.0) {
            return Err(Error::InvalidParams {
                name: "r_leg_com",
                reason: format!("must lie in (0, 1), got {}", self.r_leg_com),
            });
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
