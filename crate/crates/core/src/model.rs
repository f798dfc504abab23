//! Continuous dynamics of the three-linear-pendulum model and its exact
//! closed-form flow.
//!
//! The model has a stance leg, a swing leg and an upright torso joined by a
//! massless pelvis that stays at height `z`. Both leg CoMs move in the plane
//! at height `r z`, the torso CoM at `z + h`. The stance ankle is free, the
//! stance hip holds the torso upright and the swing hip torque is the input.
//! Sagittal and lateral axes decouple; the pelvis width only acts laterally,
//! which is where the support indicator `d` enters.
//!
//! Per axis, with pelvis `p`, swing foot `f`, stance foot `a`, stance hip
//! offset `ds = d w / 2` and swing hip offset `dw = -ds`, the Newton-Euler
//! equations of the three bodies reduce to
//!
//! ```text
//! a11 p'' + a12 f'' = g K (p - a) + g m_l (r ds + dw) + (z + h) F + u
//! a21 p'' + a22 f'' = (1 - r) m_l g (p + dw - f) + u
//! ```
//!
//! with `a11 = I/z + r(1 + r) z m_l + (z + h) m_t`, `a12 = (1 - r) z m_l`,
//! `a21 = r(1 - r) z m_l - I/z`, `a22 = (1 - r)^2 z m_l + I/z` and
//! `K = r M + (1 - r)(m_t + m_l)`. The first row is the stance leg plus upper
//! body moment balance about the stance ankle, the second the swing leg
//! moment balance about the swing hip.

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::linalg::*;
use crate::params::ModelParams;
use crate::selectors::{pos, vel, LATERAL, PELVIS, STANCE, SWING};

/// `x'' = C_x x + C_u u + C_d d + C_f f_ext` over the six horizontal
/// position coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousDynamics {
    pub c_x: Mat6,
    pub c_u: Mat6x2,
    pub c_d: Vec6,
    /// Horizontal force applied at the torso CoM (per N).
    pub c_f: Mat6x2,
    pub params: ModelParams,
}

/// Per-axis linear map from `(f, p, a, u, d, F)` to `(p'', f'')`.
struct AxisRows {
    pelvis: [f64; 6],
    swing: [f64; 6],
}

fn axis_rows(prm: &ModelParams, lateral: bool) -> AxisRows {
    let ModelParams {
        m_leg: ml,
        m_torso: mt,
        z_pelvis: z,
        r_leg_com: r,
        h_torso_com: h,
        ..
    } = *prm;
    let g = prm.g;
    let i = prm.i_leg;
    let m_tot = prm.total_mass();
    let k1 = r * m_tot + (1.0 - r) * (mt + ml);

    let a11 = i / z + r * (1.0 + r) * z * ml + (z + h) * mt;
    let a12 = (1.0 - r) * z * ml;
    let a21 = r * (1.0 - r) * z * ml - i / z;
    let a22 = (1.0 - r) * (1.0 - r) * z * ml + i / z;
    let det = a11 * a22 - a12 * a21;

    // Hip offsets per unit support indicator.
    let half_w = if lateral { 0.5 * prm.w_pelvis } else { 0.0 };
    let (ds, dw) = (half_w, -half_w);

    // Coefficients over (f, p, a, u, d, F).
    let b1 = [0.0, g * k1, -g * k1, 1.0, g * ml * (r * ds + dw), z + h];
    let c = (1.0 - r) * ml * g;
    let b2 = [-c, c, 0.0, 1.0, c * dw, 0.0];

    let mut pelvis = [0.0; 6];
    let mut swing = [0.0; 6];
    for k in 0..6 {
        pelvis[k] = (a22 * b1[k] - a12 * b2[k]) / det;
        swing[k] = (a11 * b2[k] - a21 * b1[k]) / det;
    }
    AxisRows { pelvis, swing }
}

/// Builds the continuous dynamics from the physical parameters.
pub fn build_continuous_dynamics(params: &ModelParams) -> Result<ContinuousDynamics> {
    params.validate()?;
    let mut c_x = Mat6::zeros();
    let mut c_u = Mat6x2::zeros();
    let mut c_d = Vec6::zeros();
    let mut c_f = Mat6x2::zeros();

    for axis in 0..2 {
        let rows = axis_rows(params, axis == LATERAL);
        for (body, coeffs) in [(PELVIS, rows.pelvis), (SWING, rows.swing)] {
            let row = pos(body, axis);
            c_x[(row, pos(SWING, axis))] = coeffs[0];
            c_x[(row, pos(PELVIS, axis))] = coeffs[1];
            c_x[(row, pos(STANCE, axis))] = coeffs[2];
            c_u[(row, axis)] = coeffs[3];
            c_d[row] = coeffs[4];
            c_f[(row, axis)] = coeffs[5];
        }
    }
    // Stance rows stay zero.
    Ok(ContinuousDynamics {
        c_x,
        c_u,
        c_d,
        c_f,
        params: *params,
    })
}

impl ContinuousDynamics {
    pub fn new(params: &ModelParams) -> Result<Self> {
        build_continuous_dynamics(params)
    }

    /// Position accelerations for a given configuration and instantaneous
    /// swing hip torque.
    pub fn acceleration(&self, x: &Vec6, torque: &Vec2, d: f64, force: &Vec2) -> Vec6 {
        self.c_x * x + self.c_u * torque + self.c_d * d + self.c_f * force
    }

    /// First-order right-hand side for `q = [x; x']`.
    pub fn derivative(&self, q: &Vec12, torque: &Vec2, d: f64, force: &Vec2) -> Vec12 {
        let x = q.fixed_rows::<6>(0).into_owned();
        let acc = self.acceleration(&x, torque, d, force);
        let mut out = Vec12::zeros();
        out.fixed_rows_mut::<6>(0).copy_from(&q.fixed_rows::<6>(6));
        out.fixed_rows_mut::<6>(6).copy_from(&acc);
        out
    }
}

/// Closed-form flow over a duration `t`:
/// `q(t) = A q(0) + B u + C d + F f` for the input profile `u_c + t u_r` and a
/// constant external force `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub t: f64,
    pub a: Mat12,
    pub b: Mat12x4,
    pub c: Vec12,
    pub f: Mat12x2,
}

const AUG: usize = 21;

/// Exact transition matrices from the exponential of the augmented generator.
/// The ramp input is absorbed as an integrator `w' = u_r` driven by constant
/// `u_r`, alongside constant `u_c`, `d` and the external force.
pub fn transition(dyn_: &ContinuousDynamics, t: f64) -> Result<Transition> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::PhaseTime {
            t,
            period: f64::INFINITY,
        });
    }
    let mut gen = SMatrix::<f64, AUG, AUG>::zeros();
    for i in 0..6 {
        gen[(i, 6 + i)] = 1.0;
        for j in 0..6 {
            gen[(6 + i, j)] = dyn_.c_x[(i, j)];
        }
        for k in 0..2 {
            gen[(6 + i, 12 + k)] = dyn_.c_u[(i, k)];
            gen[(6 + i, 14 + k)] = dyn_.c_u[(i, k)];
            gen[(6 + i, 19 + k)] = dyn_.c_f[(i, k)];
        }
        gen[(6 + i, 18)] = dyn_.c_d[i];
    }
    for k in 0..2 {
        gen[(12 + k, 16 + k)] = 1.0;
    }
    let phi = (gen * t).exp();

    let a: Mat12 = phi.fixed_view::<12, 12>(0, 0).into_owned();
    let mut b = Mat12x4::zeros();
    b.fixed_columns_mut::<2>(0)
        .copy_from(&phi.fixed_view::<12, 2>(0, 14));
    b.fixed_columns_mut::<2>(2)
        .copy_from(&phi.fixed_view::<12, 2>(0, 16));
    let c: Vec12 = phi.fixed_view::<12, 1>(0, 18).into_owned();
    let f: Mat12x2 = phi.fixed_view::<12, 2>(0, 19).into_owned();
    Ok(Transition { t, a, b, c, f })
}

impl Transition {
    pub fn apply(&self, q0: &Vec12, u: &Vec4, d: f64, force: &Vec2) -> Vec12 {
        self.a * q0 + self.b * u + self.c * d + self.f * force
    }
}

/// Evolves a phase-start state with the ramp input `u = (u_c, u_r)` for time
/// `t` with no external force.
pub fn evolve(dyn_: &ContinuousDynamics, q0: &Vec12, u: &Vec4, d: f64, t: f64) -> Result<Vec12> {
    check_stance_velocity(q0)?;
    let tr = transition(dyn_, t)?;
    Ok(tr.apply(q0, u, d, &Vec2::zeros()))
}

pub(crate) fn check_stance_velocity(q: &Vec12) -> Result<()> {
    let v = q[vel(STANCE, 0)].abs().max(q[vel(STANCE, 1)].abs());
    if v > 1e-12 {
        return Err(Error::StanceVelocity(v));
    }
    Ok(())
}

/// Exchanges swing and stance feet.
pub fn swap_support(q: &Vec12) -> Vec12 {
    let mut out = *q;
    for base in [0, 6] {
        for a in 0..2 {
            out[base + a] = q[base + 4 + a];
            out[base + 4 + a] = q[base + a];
        }
    }
    out
}
