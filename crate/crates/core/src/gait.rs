//! Symmetric periodic gaits and their nominal open-loop trajectory.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::*;
use crate::model::{build_continuous_dynamics, transition, ContinuousDynamics, Transition};
use crate::params::ModelParams;
use crate::selectors::{pos, SelectorMatrices, PELVIS, STANCE};

/// Speeds above this magnitude (m/s) solve fine but are flagged as
/// physically implausible for a robot of this size.
pub const PLAUSIBLE_SPEED: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGait {
    /// Periodic phase-start state, stance foot in the origin.
    pub qbar: Vec12,
    /// Nominal input `(u_c, u_r)`.
    pub ubar: Vec4,
    /// Support indicator of the solved phase.
    pub dbar: f64,
    pub step_time: f64,
    pub v_des: Vec2,
    pub params: ModelParams,
}

/// Weights of the minimum-torque objective over `(u_c, u_r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitOptions {
    pub input_weights: Vec4,
    pub dbar: f64,
}

impl Default for GaitOptions {
    fn default() -> Self {
        Self {
            input_weights: Vec4::repeat(1.0),
            dbar: 1.0,
        }
    }
}

/// Solves for the periodic gait with average velocity `v_des` and step time
/// `step_time`, using the default minimum-norm torque objective.
pub fn solve_periodic(params: &ModelParams, v_des: Vec2, step_time: f64) -> Result<PeriodicGait> {
    let dyn_ = build_continuous_dynamics(params)?;
    solve_periodic_with(&dyn_, v_des, step_time, &GaitOptions::default())
}

pub fn solve_periodic_with(
    dyn_: &ContinuousDynamics,
    v_des: Vec2,
    step_time: f64,
    opts: &GaitOptions,
) -> Result<PeriodicGait> {
    if !(step_time.is_finite() && step_time > 0.0) {
        return Err(Error::InvalidParams {
            name: "T",
            reason: format!("must be > 0, got {step_time}"),
        });
    }
    if v_des.norm() > PLAUSIBLE_SPEED {
        log::warn!(
            "commanded speed {:.3} m/s is outside the plausible range",
            v_des.norm()
        );
    }
    let tr = transition(dyn_, step_time)?;
    let (g, h) = constraint_system(&tr, &v_des, opts.dbar);

    // Rows and unknowns of one axis share the index parity, and the axes do
    // not couple, so each is solved on its own. This keeps an axis with a
    // homogeneous right-hand side exactly at rest.
    let mut w = DVector::zeros(16);
    for axis in 0..2 {
        let idx: Vec<usize> = (0..16).filter(|i| i % 2 == axis).collect();
        let ga = DMatrix::from_fn(8, 8, |r, c| g[(idx[r], idx[c])]);
        let ha = DVector::from_fn(8, |r, _| h[idx[r]]);
        let weights = Vec2::new(opts.input_weights[axis], opts.input_weights[2 + axis]);
        let wa = solve_axis(&ga, &ha, &weights)?;
        for (k, &i) in idx.iter().enumerate() {
            w[i] = wa[k];
        }
    }

    let qbar = Vec12::from_fn(|i, _| w[i]);
    let ubar = Vec4::from_fn(|i, _| w[12 + i]);
    Ok(PeriodicGait {
        qbar,
        ubar,
        dbar: opts.dbar,
        step_time,
        v_des,
        params: dyn_.params,
    })
}

/// Minimum weighted-torque solution of one axis' constraints. Unknowns are
/// six positions and velocities followed by `(u_c, u_r)`.
fn solve_axis(g: &DMatrix<f64>, h: &DVector<f64>, weights: &Vec2) -> Result<DVector<f64>> {
    let n = g.ncols();
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-11 * smax.max(1.0);
    let rank = svd.rank(tol);
    let w0 = svd.solve(h, tol).map_err(|e| Error::Data(e.to_string()))?;
    let residual = (g * &w0 - h).amax();
    if residual > 1e-9 * (1.0 + h.amax()) {
        return Err(Error::InfeasibleVelocity { residual });
    }

    // Null space of the constraints, resolved by the weighted torque norm.
    let v_t = svd.v_t.as_ref().expect("svd computed with V");
    let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= tol).collect();
    let mut w = w0;
    if !null.is_empty() {
        let z = DMatrix::from_fn(n, null.len(), |r, c| v_t[(null[c], r)]);
        let wu = DMatrix::from_diagonal(&DVector::from_iterator(2, weights.iter().copied()));
        let zu = &wu * z.rows(n - 2, 2);
        let u0 = &wu * w.rows(n - 2, 2);
        let normal = zu.transpose() * &zu;
        if normal.symmetric_eigenvalues().min() <= 1e-12 * normal.amax().max(1.0) {
            return Err(Error::RankDeficient { rank, needed: n });
        }
        let chol = normal
            .cholesky()
            .ok_or(Error::RankDeficient { rank, needed: n })?;
        let coef = chol.solve(&(-(zu.transpose() * u0)));
        w += z * coef;
    }
    Ok(w)
}

/// Stacks the symmetry, foot velocity, stance origin and average velocity
/// constraints as `G [Q; U] = h`.
fn constraint_system(tr: &Transition, v_des: &Vec2, dbar: f64) -> (DMatrix<f64>, DVector<f64>) {
    let sel = SelectorMatrices::new();
    let oms = sel.o * sel.m * sel.s;
    let mut g = DMatrix::zeros(16, 16);
    let mut h = DVector::zeros(16);

    let sym_q = sel.m - oms * tr.a;
    let sym_u = -(oms * tr.b);
    let sym_h = oms * tr.c * dbar;
    for r in 0..8 {
        for c in 0..12 {
            g[(r, c)] = sym_q[(r, c)];
        }
        for c in 0..4 {
            g[(r, 12 + c)] = sym_u[(r, c)];
        }
        h[r] = sym_h[r];
    }
    for r in 0..4 {
        for c in 0..12 {
            g[(8 + r, c)] = sel.n[(r, c)];
        }
    }
    for a in 0..2 {
        g[(12 + a, pos(STANCE, a))] = 1.0;
    }
    for a in 0..2 {
        let row = pos(PELVIS, a);
        for c in 0..12 {
            g[(14 + a, c)] = tr.a[(row, c)] - if c == row { 1.0 } else { 0.0 };
        }
        for c in 0..4 {
            g[(14 + a, 12 + c)] = tr.b[(row, c)];
        }
        h[14 + a] = v_des[a] * tr.t - tr.c[row] * dbar;
    }
    (g, h)
}

/// Nominal state at phase time `t`.
pub fn nominal(gait: &PeriodicGait, t: f64) -> Result<Vec12> {
    if !(0.0..=gait.step_time).contains(&t) {
        return Err(Error::PhaseTime {
            t,
            period: gait.step_time,
        });
    }
    let dyn_ = build_continuous_dynamics(&gait.params)?;
    let tr = transition(&dyn_, t)?;
    Ok(nominal_with(gait, &tr))
}

pub fn nominal_with(gait: &PeriodicGait, tr: &Transition) -> Vec12 {
    tr.a * gait.qbar + tr.b * gait.ubar + tr.c * gait.dbar
}

/// Largest violation among the periodicity, foot velocity and average
/// velocity constraints.
pub fn gait_residual(gait: &PeriodicGait) -> f64 {
    let Ok(dyn_) = build_continuous_dynamics(&gait.params) else {
        return f64::INFINITY;
    };
    let Ok(tr) = transition(&dyn_, gait.step_time) else {
        return f64::INFINITY;
    };
    let sel = SelectorMatrices::new();
    let end = nominal_with(gait, &tr);
    let sym = (sel.m * gait.qbar - sel.o * sel.m * sel.s * end).amax();
    let feet = (sel.n * gait.qbar).amax();
    let mut speed: f64 = 0.0;
    for a in 0..2 {
        let row = pos(PELVIS, a);
        speed = speed.max((end[row] - gait.qbar[row] - gait.v_des[a] * gait.step_time).abs());
    }
    sym.max(feet).max(speed)
}

impl PeriodicGait {
    /// Nominal state of a phase with support indicator `d`, expressed in the
    /// frame of that phase's stance foot.
    pub fn nominal_for_support(&self, tr: &Transition, d: f64) -> Vec12 {
        let q = nominal_with(self, tr);
        if d * self.dbar < 0.0 {
            crate::selectors::mirror_q() * q
        } else {
            q
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evolve, swap_support};
    use crate::selectors::{vel, SWING};

    fn gait(v: [f64; 2]) -> PeriodicGait {
        let p = ModelParams::default();
        solve_periodic(&p, Vec2::new(v[0], v[1]), p.step_time).unwrap()
    }

    #[test]
    fn in_place_gait_has_no_sagittal_motion() {
        let g = gait([0.0, 0.0]);
        assert!(gait_residual(&g) < 1e-10);
        for body in [SWING, PELVIS, STANCE] {
            assert_eq!(g.qbar[pos(body, 0)], 0.0);
            assert_eq!(g.qbar[vel(body, 0)], 0.0);
        }
        assert!(g.ubar[0] == 0.0 && g.ubar[2] == 0.0);
        for k in 0..=20 {
            let q = nominal(&g, 0.4 * k as f64 / 20.0).unwrap();
            for body in [SWING, PELVIS, STANCE] {
                assert_eq!(q[pos(body, 0)], 0.0);
            }
        }
    }

    #[test]
    fn periodic_after_swap() {
        let sel = SelectorMatrices::new();
        for v in [0.0, 0.1, 0.2] {
            let g = gait([v, 0.0]);
            let end = nominal(&g, g.step_time).unwrap();
            let back = sel.o * sel.m * swap_support(&end);
            assert!((back - sel.m * g.qbar).amax() < 1e-10);
            let ev = evolve(
                &build_continuous_dynamics(&g.params).unwrap(),
                &g.qbar,
                &g.ubar,
                g.dbar,
                g.step_time,
            )
            .unwrap();
            assert!((ev - end).amax() < 1e-14);
        }
    }

    #[test]
    fn nominal_rejects_outside_phase() {
        let g = gait([0.1, 0.0]);
        assert!(nominal(&g, -1e-3).is_err());
        assert!(nominal(&g, g.step_time + 1e-3).is_err());
        assert_eq!(nominal(&g, 0.0).unwrap(), g.qbar);
    }

    #[test]
    fn residual_detects_perturbation() {
        let mut g = gait([0.1, 0.0]);
        g.qbar[pos(PELVIS, 0)] += 1e-3;
        assert!(gait_residual(&g) > 1e-5);
    }

    #[test]
    fn residual_of_trivial_symmetric_gait_is_zero() {
        // Without pelvis width the resting state is a valid in-place "gait".
        let params = ModelParams {
            w_pelvis: 0.0,
            ..Default::default()
        };
        let g = PeriodicGait {
            qbar: Vec12::zeros(),
            ubar: Vec4::zeros(),
            dbar: 1.0,
            step_time: 0.4,
            v_des: Vec2::zeros(),
            params,
        };
        assert_eq!(gait_residual(&g), 0.0);
    }

    #[test]
    fn affine_in_speed() {
        let g0 = gait([0.0, 0.0]);
        let g1 = gait([0.1, 0.0]);
        let g2 = gait([0.2, 0.0]);
        assert!((g2.qbar - 2.0 * g1.qbar + g0.qbar).amax() < 1e-10);
        assert!((g2.ubar - 2.0 * g1.ubar + g0.ubar).amax() < 1e-8);
    }

    #[test]
    fn mirror_support() {
        let p = ModelParams::default();
        let dyn_ = build_continuous_dynamics(&p).unwrap();
        let plus =
            solve_periodic_with(&dyn_, Vec2::new(0.1, 0.0), 0.4, &GaitOptions::default()).unwrap();
        let minus = solve_periodic_with(
            &dyn_,
            Vec2::new(0.1, 0.0),
            0.4,
            &GaitOptions {
                dbar: -1.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((crate::selectors::mirror_q() * plus.qbar - minus.qbar).amax() < 1e-10);
        assert!((crate::selectors::mirror_u() * plus.ubar - minus.ubar).amax() < 1e-8);
    }

    #[test]
    fn json_round_trip() {
        let g = gait([0.1, 0.0]);
        let back = PeriodicGait::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
