//! Step-to-step error dynamics, constrained DLQR synthesis and the
//! continuous time-projection controller.
//!
//! Errors live in the relative coordinates `e = M (q - qbar)`, always
//! expressed in the frame of a `dbar` support phase. The discrete map is
//! `E[k+1] = Ahat E[k] + Bhat dU[k]` subject to `Chat E[k+1] = 0`, i.e. the
//! swing foot lands with zero velocity.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::PeriodicGait;
use crate::linalg::*;
use crate::model::{build_continuous_dynamics, transition, ContinuousDynamics};
use crate::selectors::SelectorMatrices;

/// Default truncation of footstep adjustments (m).
pub const DEFAULT_TRUNCATION: f64 = 0.15;

const RICCATI_TOL: f64 = 1e-13;
const RICCATI_MAX_ITER: usize = 100_000;

/// Relative-coordinate indices kept by the constraint reduction (everything
/// except the relative swing velocity).
const REDUCED: [usize; 6] = [0, 1, 2, 3, 6, 7];

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDynamics {
    pub ahat: Mat8,
    pub bhat: Mat8x4,
    pub chat: Mat2x8,
    pub step_time: f64,
}

pub fn build_error_dynamics(
    dyn_: &ContinuousDynamics,
    sel: &SelectorMatrices,
    step_time: f64,
) -> Result<ErrorDynamics> {
    let tr = transition(dyn_, step_time)?;
    let oms = sel.o * sel.m * sel.s;
    Ok(ErrorDynamics {
        ahat: oms * tr.a * sel.mhat,
        bhat: oms * tr.b,
        chat: sel.chat,
        step_time,
    })
}

/// Diagonal DLQR weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlqrWeights {
    /// Weights of `(s1, s2, s1', s2')`, sagittal and lateral.
    pub state: [f64; 8],
    /// Weights of `(u_c, u_r)`, sagittal and lateral.
    pub input: [f64; 4],
}

impl DlqrWeights {
    /// Per-unit weights: velocities scaled by `T`, torques by the weight
    /// moment `m g z` and ramps additionally by `T`.
    pub fn per_unit(params: &crate::params::ModelParams, step_time: f64) -> Self {
        let t2 = step_time * step_time;
        let torque = params.total_mass() * params.g * params.z_pelvis;
        let r = 1.0 / (torque * torque);
        Self {
            state: [1.0, 1.0, 1.0, 1.0, t2, t2, t2, t2],
            input: [r, r, r * t2, r * t2],
        }
    }

    pub fn qw(&self) -> Mat8 {
        Mat8::from_diagonal(&Vec8::from_column_slice(&self.state))
    }

    pub fn rw(&self) -> SMatrix<f64, 4, 4> {
        SMatrix::<f64, 4, 4>::from_diagonal(&Vec4::from_column_slice(&self.input))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlqrGain {
    /// `dU = -K E`.
    pub k: Mat4x8,
    pub qw: Mat8,
    pub rw: SMatrix<f64, 4, 4>,
    /// Relative residual of the reduced Riccati equation at the fixed point.
    pub riccati_residual: f64,
    pub iterations: usize,
    /// Input pair eliminated by the landing-velocity constraint.
    pub eliminated: (usize, usize),
    /// Spectral radius of the closed loop on the constraint-consistent subspace.
    pub spectral_radius: f64,
}

fn reduction() -> SMatrix<f64, 6, 8> {
    let mut t = SMatrix::<f64, 6, 8>::zeros();
    for (r, &c) in REDUCED.iter().enumerate() {
        t[(r, c)] = 1.0;
    }
    t
}

/// Constrained infinite-horizon DLQR. Two inputs are eliminated through the
/// landing-velocity constraint; the remaining six-state, two-input problem
/// (with the induced cross-weighting) is solved by Riccati iteration.
pub fn solve_constrained_dlqr(
    ed: &ErrorDynamics,
    qw: &Mat8,
    rw: &SMatrix<f64, 4, 4>,
) -> Result<DlqrGain> {
    let cb = ed.chat * ed.bhat;
    let ca = ed.chat * ed.ahat;

    let mut best: Option<((usize, usize), f64)> = None;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let m = Mat2::from_columns(&[cb.column(i).into_owned(), cb.column(j).into_owned()]);
            let sv = m.singular_values();
            let score = if sv[0] > 0.0 {
                sv.min() / sv.max()
            } else {
                0.0
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some(((i, j), score));
            }
        }
    }
    let ((ia, ja), score) = best.expect("four inputs");
    if score < 1e-12 {
        return Err(Error::SingularConstraint);
    }
    let free: Vec<usize> = (0..4).filter(|&c| c != ia && c != ja).collect();
    let (ib, jb) = (free[0], free[1]);

    let cb_a = Mat2::from_columns(&[cb.column(ia).into_owned(), cb.column(ja).into_owned()]);
    let cb_b = Mat2::from_columns(&[cb.column(ib).into_owned(), cb.column(jb).into_owned()]);
    let ginv = cb_a.try_inverse().ok_or(Error::SingularConstraint)?;

    // dU = L_e E + L_b v, with v the free inputs.
    let mut l_e = Mat4x8::zeros();
    let mut l_b = SMatrix::<f64, 4, 2>::zeros();
    let fa = -ginv * ca;
    let fb = -ginv * cb_b;
    for c in 0..8 {
        l_e[(ia, c)] = fa[(0, c)];
        l_e[(ja, c)] = fa[(1, c)];
    }
    for c in 0..2 {
        l_b[(ia, c)] = fb[(0, c)];
        l_b[(ja, c)] = fb[(1, c)];
    }
    l_b[(ib, 0)] = 1.0;
    l_b[(jb, 1)] = 1.0;

    let t = reduction();
    let a_r: Mat6 = t * (ed.ahat + ed.bhat * l_e) * t.transpose();
    let b_r: Mat6x2 = t * ed.bhat * l_b;
    let q_r: Mat6 = t * (qw + l_e.transpose() * rw * l_e) * t.transpose();
    let r_r: Mat2 = l_b.transpose() * rw * l_b;
    let n_r: Mat6x2 = t * l_e.transpose() * rw * l_b;

    let riccati_map = |p: &Mat6| -> (Mat6, SMatrix<f64, 2, 6>) {
        let s = r_r + b_r.transpose() * p * b_r;
        let k = s
            .try_inverse()
            .unwrap_or_else(|| Mat2::from_element(f64::NAN))
            * (b_r.transpose() * p * a_r + n_r.transpose());
        let next = a_r.transpose() * p * a_r - (a_r.transpose() * p * b_r + n_r) * k + q_r;
        (0.5 * (next + next.transpose()), k)
    };

    let mut p = q_r;
    let mut iterations = 0;
    let mut step = f64::INFINITY;
    while iterations < RICCATI_MAX_ITER {
        let (next, _) = riccati_map(&p);
        iterations += 1;
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::RiccatiDiverged { iterations, step });
        }
        step = (next - p).norm() / next.norm().max(1.0);
        p = next;
        if step < RICCATI_TOL {
            break;
        }
    }
    if step >= RICCATI_TOL {
        return Err(Error::RiccatiDiverged { iterations, step });
    }
    let (fixed, k_r) = riccati_map(&p);
    let riccati_residual = (fixed - p).norm() / p.norm().max(1.0);

    let k: Mat4x8 = l_b * k_r * t - l_e;
    let closed = t * (ed.ahat - ed.bhat * k) * t.transpose();
    Ok(DlqrGain {
        k,
        qw: *qw,
        rw: *rw,
        riccati_residual,
        iterations,
        eliminated: (ia, ja),
        spectral_radius: spectral_radius(&closed),
    })
}

/// Result of a footstep-adjustment query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootstepAdjustment {
    /// Final swing-foot deviation from nominal before truncation (m).
    pub raw: Vec2,
    /// Truncated deviation (m).
    pub dp: Vec2,
    /// Attack angle adjustment `dp / z` (rad).
    pub attack: Vec2,
    pub truncated: [bool; 2],
}

/// Per-axis truncation and attack-angle conversion.
pub fn truncate_adjustment(raw: Vec2, limit: f64, z: f64) -> FootstepAdjustment {
    let mut dp = raw;
    let mut truncated = [false; 2];
    for a in 0..2 {
        if raw[a].abs() > limit {
            dp[a] = limit.copysign(raw[a]);
            truncated[a] = true;
        }
    }
    FootstepAdjustment {
        raw,
        dp,
        attack: dp / z,
        truncated,
    }
}

/// Everything needed online: the gait, the error dynamics and the gain.
#[derive(Debug, Clone)]
pub struct Controller {
    pub gait: PeriodicGait,
    pub dynamics: ContinuousDynamics,
    pub selectors: SelectorMatrices,
    pub error_dynamics: ErrorDynamics,
    pub gain: DlqrGain,
    /// Intra-phase propagation at `T`, used to roll errors to the phase end.
    end: (Mat8, Mat8x4),
}

impl Controller {
    pub fn new(gait: PeriodicGait, weights: &DlqrWeights) -> Result<Self> {
        let dynamics = build_continuous_dynamics(&gait.params)?;
        let selectors = SelectorMatrices::new();
        let error_dynamics = build_error_dynamics(&dynamics, &selectors, gait.step_time)?;
        let gain = solve_constrained_dlqr(&error_dynamics, &weights.qw(), &weights.rw())?;
        let mut c = Self {
            gait,
            dynamics,
            selectors,
            error_dynamics,
            gain,
            end: (Mat8::zeros(), Mat8x4::zeros()),
        };
        c.end = c.propagation(c.gait.step_time)?;
        Ok(c)
    }

    pub fn with_default_weights(gait: PeriodicGait) -> Result<Self> {
        let w = DlqrWeights::per_unit(&gait.params, gait.step_time);
        Self::new(gait, &w)
    }

    pub fn step_time(&self) -> f64 {
        self.gait.step_time
    }

    /// Intra-phase error propagation `(M A(tau) Mhat, M B(tau))`. No feet
    /// exchange happens inside a phase, so neither `S` nor `O` appear.
    pub fn propagation(&self, tau: f64) -> Result<(Mat8, Mat8x4)> {
        self.check_tau(tau)?;
        let tr = transition(&self.dynamics, tau)?;
        let sel = &self.selectors;
        Ok((sel.m * tr.a * sel.mhat, sel.m * tr.b))
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if !(0.0..=self.gait.step_time).contains(&tau) {
            return Err(Error::PhaseTime {
                t: tau,
                period: self.gait.step_time,
            });
        }
        Ok(())
    }

    /// Solves `[[A~, B~], [K, I]] [E; dU] = [e; 0]` given the propagation
    /// matrices at the current phase time.
    pub fn project_with(&self, prop: &(Mat8, Mat8x4), e: &Vec8, tau: f64) -> Result<(Vec8, Vec4)> {
        let mut sys = SMatrix::<f64, 12, 12>::zeros();
        sys.fixed_view_mut::<8, 8>(0, 0).copy_from(&prop.0);
        sys.fixed_view_mut::<8, 4>(0, 8).copy_from(&prop.1);
        sys.fixed_view_mut::<4, 8>(8, 0).copy_from(&self.gain.k);
        sys.fixed_view_mut::<4, 4>(8, 8)
            .copy_from(&SMatrix::<f64, 4, 4>::identity());
        let mut rhs = SVector::<f64, 12>::zeros();
        rhs.fixed_rows_mut::<8>(0).copy_from(e);
        let x = sys
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularProjection { tau })?;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularProjection { tau });
        }
        Ok((
            x.fixed_rows::<8>(0).into_owned(),
            x.fixed_rows::<4>(8).into_owned(),
        ))
    }

    /// Corrective input `du` for the error `e` measured at phase time `tau`.
    pub fn time_project(&self, e: &Vec8, tau: f64) -> Result<Vec4> {
        let prop = self.propagation(tau)?;
        Ok(self.project_with(&prop, e, tau)?.1)
    }

    /// Final swing-foot deviation predicted by the closed loop, before
    /// truncation.
    pub fn final_swing_deviation(&self, prop: &(Mat8, Mat8x4), e: &Vec8, tau: f64) -> Result<Vec2> {
        Ok(self.project_and_predict(prop, e, tau)?.1)
    }

    /// Corrective input and untruncated final swing deviation in one solve.
    pub fn project_and_predict(
        &self,
        prop: &(Mat8, Mat8x4),
        e: &Vec8,
        tau: f64,
    ) -> Result<(Vec4, Vec2)> {
        let (e0, du) = self.project_with(prop, e, tau)?;
        let end = self.end.0 * e0 + self.end.1 * du;
        Ok((du, Vec2::new(end[0], end[1])))
    }

    pub fn footstep_adjustment(
        &self,
        e: &Vec8,
        tau: f64,
        limit: f64,
    ) -> Result<FootstepAdjustment> {
        let prop = self.propagation(tau)?;
        let raw = self.final_swing_deviation(&prop, e, tau)?;
        Ok(truncate_adjustment(raw, limit, self.gait.params.z_pelvis))
    }

    /// Gains on the uniform grid `tau_i = i T / grid_size`, `i < grid_size`.
    /// The phase end itself is left out: there the landing-velocity
    /// constraint makes the projection singular and the torque gain on the
    /// swing velocity grows like `1 / (T - tau)`.
    pub fn export_gain_table(&self, grid_size: usize) -> Result<GainTable> {
        if grid_size < 2 {
            return Err(Error::Data(
                "gain table needs at least two grid points".into(),
            ));
        }
        let t = self.gait.step_time;
        let mut table = GainTable {
            step_time: t,
            tau_grid: Vec::with_capacity(grid_size),
            gu: Vec::with_capacity(grid_size),
            gp: Vec::with_capacity(grid_size),
        };
        for i in 0..grid_size {
            let tau = t * i as f64 / grid_size as f64;
            let prop = self.propagation(tau)?;
            let mut gu = Mat4x8::zeros();
            let mut gp = Mat2x8::zeros();
            for c in 0..8 {
                let mut unit = Vec8::zeros();
                unit[c] = 1.0;
                let (e0, du) = self.project_with(&prop, &unit, tau)?;
                let end = self.end.0 * e0 + self.end.1 * du;
                gu.set_column(c, &(-du));
                gp.set_column(c, &Vec2::new(-end[0], -end[1]));
            }
            table.tau_grid.push(tau);
            table.gu.push(gu);
            table.gp.push(gp);
        }
        Ok(table)
    }
}

/// Free-function form: corrective input for error `e` at phase time `tau`.
pub fn time_project(
    ed: &ErrorDynamics,
    gait: &PeriodicGait,
    k: &Mat4x8,
    e: &Vec8,
    tau: f64,
) -> Result<Vec4> {
    controller_from_parts(ed, gait, k)?.time_project(e, tau)
}

/// Free-function form of [`Controller::footstep_adjustment`] with an explicit
/// pelvis height used for the attack angle.
pub fn footstep_adjustment(
    ed: &ErrorDynamics,
    gait: &PeriodicGait,
    k: &Mat4x8,
    e: &Vec8,
    tau: f64,
    z: f64,
) -> Result<FootstepAdjustment> {
    let c = controller_from_parts(ed, gait, k)?;
    let prop = c.propagation(tau)?;
    let raw = c.final_swing_deviation(&prop, e, tau)?;
    Ok(truncate_adjustment(raw, DEFAULT_TRUNCATION, z))
}

pub fn export_gain_table(
    ed: &ErrorDynamics,
    gait: &PeriodicGait,
    k: &Mat4x8,
    grid_size: usize,
) -> Result<GainTable> {
    controller_from_parts(ed, gait, k)?.export_gain_table(grid_size)
}

fn controller_from_parts(
    ed: &ErrorDynamics,
    gait: &PeriodicGait,
    k: &Mat4x8,
) -> Result<Controller> {
    let dynamics = build_continuous_dynamics(&gait.params)?;
    let mut c = Controller {
        gait: gait.clone(),
        dynamics,
        selectors: SelectorMatrices::new(),
        error_dynamics: ed.clone(),
        gain: DlqrGain {
            k: *k,
            qw: Mat8::zeros(),
            rw: SMatrix::<f64, 4, 4>::zeros(),
            riccati_residual: f64::NAN,
            iterations: 0,
            eliminated: (0, 0),
            spectral_radius: f64::NAN,
        },
        end: (Mat8::zeros(), Mat8x4::zeros()),
    };
    c.end = c.propagation(gait.step_time)?;
    Ok(c)
}

/// Time-projection gains sampled over the phase: `du = -Gu(tau) e` and
/// `dp = -Gp(tau) e`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    pub step_time: f64,
    pub tau_grid: Vec<f64>,
    pub gu: Vec<Mat4x8>,
    pub gp: Vec<Mat2x8>,
}

impl GainTable {
    fn bracket(&self, tau: f64) -> (usize, f64) {
        let n = self.tau_grid.len();
        let tau = tau.clamp(self.tau_grid[0], self.tau_grid[n - 1]);
        let i = match self
            .tau_grid
            .binary_search_by(|v| v.partial_cmp(&tau).expect("finite grid"))
        {
            Ok(i) => return (i.min(n - 2), if i == n - 1 { 1.0 } else { 0.0 }),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let w = (tau - self.tau_grid[i]) / (self.tau_grid[i + 1] - self.tau_grid[i]);
        (i, w)
    }

    /// Linearly interpolated gains at `tau`.
    pub fn lookup(&self, tau: f64) -> (Mat4x8, Mat2x8) {
        let (i, w) = self.bracket(tau);
        (
            self.gu[i] * (1.0 - w) + self.gu[i + 1] * w,
            self.gp[i] * (1.0 - w) + self.gp[i + 1] * w,
        )
    }

    pub fn correction(&self, e: &Vec8, tau: f64) -> (Vec4, Vec2) {
        let (gu, gp) = self.lookup(tau);
        (-(gu * e), -(gp * e))
    }
}
