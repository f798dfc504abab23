//! Error filtering: IIR smoothing, windowed velocity estimation, smooth
//! dead-zone and threshold calibration.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default IIR blend coefficient.
pub const DEFAULT_ZETA: f64 = 0.1;
/// Default velocity averaging window (samples).
pub const DEFAULT_WINDOW: usize = 30;
/// Default control period (s).
pub const DEFAULT_DT: f64 = 0.002;

/// First-order IIR filter `s <- (1 - zeta) s + zeta x`. The first sample
/// seeds the state.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    zeta: f64,
    state: Option<Vec<f64>>,
}

impl IirFilter {
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(Error::Data(format!(
                "IIR coefficient must lie in (0, 1], got {zeta}"
            )));
        }
        Ok(Self { zeta, state: None })
    }

    /// Filter with a given initial state instead of first-sample seeding.
    pub fn with_state(zeta: f64, state: Vec<f64>) -> Result<Self> {
        let mut f = Self::new(zeta)?;
        f.state = Some(state);
        Ok(f)
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn state(&self) -> Option<&[f64]> {
        self.state.as_deref()
    }

    pub fn step(&mut self, sample: &[f64]) -> Vec<f64> {
        match &mut self.state {
            None => {
                self.state = Some(sample.to_vec());
            }
            Some(s) => {
                for (s, x) in s.iter_mut().zip(sample) {
                    *s = (1.0 - self.zeta) * *s + self.zeta * x;
                }
            }
        }
        self.state.clone().expect("seeded above")
    }

    /// Applies a linear change of coordinates to the internal state.
    pub fn remap(&mut self, f: impl Fn(&[f64]) -> Vec<f64>) {
        if let Some(s) = &mut self.state {
            *s = f(s);
        }
    }
}

/// Mean of the last `window` backward differences divided by `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityEstimator {
    window: usize,
    dt: f64,
    last: Option<Vec<f64>>,
    diffs: VecDeque<Vec<f64>>,
}

impl VelocityEstimator {
    pub fn new(window: usize, dt: f64) -> Result<Self> {
        if window == 0 {
            return Err(Error::Data(
                "velocity window must be at least one sample".into(),
            ));
        }
        if !(dt > 0.0) {
            return Err(Error::Data(format!(
                "sample period must be positive, got {dt}"
            )));
        }
        Ok(Self {
            window,
            dt,
            last: None,
            diffs: VecDeque::with_capacity(window),
        })
    }

    pub fn step(&mut self, x: &[f64]) -> Vec<f64> {
        if let Some(last) = &self.last {
            if self.diffs.len() == self.window {
                self.diffs.pop_front();
            }
            self.diffs
                .push_back(x.iter().zip(last).map(|(a, b)| a - b).collect());
        }
        self.last = Some(x.to_vec());
        let mut out = vec![0.0; x.len()];
        if self.diffs.is_empty() {
            return out;
        }
        for d in &self.diffs {
            for (o, v) in out.iter_mut().zip(d) {
                *o += v;
            }
        }
        let scale = 1.0 / (self.diffs.len() as f64 * self.dt);
        out.iter_mut().for_each(|o| *o *= scale);
        out
    }

    /// Applies a linear change of coordinates to the stored sample and
    /// differences.
    pub fn remap(&mut self, f: impl Fn(&[f64]) -> Vec<f64>) {
        if let Some(l) = &mut self.last {
            *l = f(l);
        }
        for d in self.diffs.iter_mut() {
            *d = f(d);
        }
    }
}

/// Smooth dead-zone `y = x - (2a/pi) atan(pi x / 2a)`; identity for `a = 0`.
pub fn dead_zone(x: f64, a: f64) -> f64 {
    if a <= 0.0 {
        return x;
    }
    x - (PI * x / (2.0 * a)).atan() * 2.0 * a / PI
}

/// Per-channel dead-zone thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadZone {
    pub thresholds: Vec<f64>,
}

impl DeadZone {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::Data(
                "dead-zone thresholds must be non-negative".into(),
            ));
        }
        Ok(Self { thresholds })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.thresholds)
            .map(|(&x, &a)| dead_zone(x, a))
            .collect()
    }
}

/// Minimum samples per channel for calibration.
pub const MIN_CALIBRATION_SAMPLES: usize = 100;

/// Sample standard deviation of each channel.
pub fn calibrate_thresholds(channels: &[Vec<f64>]) -> Result<Vec<f64>> {
    channels
        .iter()
        .enumerate()
        .map(|(i, ch)| {
            if ch.is_empty() {
                return Err(Error::Data(format!("channel {i} is empty")));
            }
            if ch.len() < MIN_CALIBRATION_SAMPLES {
                return Err(Error::Data(format!(
                    "channel {i} has {} samples, need at least {MIN_CALIBRATION_SAMPLES}",
                    ch.len()
                )));
            }
            if ch.iter().all(|&v| v == ch[0]) {
                return Ok(0.0);
            }
            let n = ch.len() as f64;
            let mean = ch.iter().sum::<f64>() / n;
            let var = ch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            Ok(var.sqrt())
        })
        .collect()
}
