use lin3lp::linalg::*;
use lin3lp::stabilizer::{footstep_adjustment, time_project, DEFAULT_TRUNCATION};
use lin3lp::{nominal, solve_periodic, transition, Controller, ModelParams};
use nalgebra::SVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn controller(v: f64) -> Controller {
    let p = ModelParams::default();
    let g = solve_periodic(&p, Vec2::new(v, 0.0), p.step_time).unwrap();
    Controller::with_default_weights(g).unwrap()
}

fn random_error(rng: &mut ChaCha8Rng, scale: f64) -> Vec8 {
    Vec8::from_fn(|i, _| rng.random_range(-scale..scale) * if i < 4 { 1.0 } else { 5.0 })
}

/// Error of the next phase, from the full state after one perturbed phase.
fn next_error(c: &Controller, e0: &Vec8, du: &Vec4) -> Vec8 {
    let sel = &c.selectors;
    let g = &c.gait;
    let tr = transition(&c.dynamics, g.step_time).unwrap();
    let q0 = g.qbar + sel.mhat * e0;
    let q_t = tr.apply(&q0, &(g.ubar + du), g.dbar, &Vec2::zeros());
    sel.o * sel.m * sel.s * q_t - sel.m * g.qbar
}

#[test]
fn step_to_step_error_dynamics_match_plant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for v in [0.0, 0.1, 0.2] {
        let c = controller(v);
        let ed = &c.error_dynamics;
        for _ in 0..20 {
            let e0 = random_error(&mut rng, 0.02);
            let du = Vec4::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let plant = next_error(&c, &e0, &du);
            let lin = ed.ahat * e0 + ed.bhat * du;
            assert!(
                (plant - lin).amax() < 1e-10,
                "v = {v}: {:e}",
                (plant - lin).amax()
            );
        }
    }
}

#[test]
fn closed_loop_rollout() {
    let c = controller(0.1);
    let ed = &c.error_dynamics;
    assert!(
        c.gain.riccati_residual < 1e-12,
        "residual {:e}",
        c.gain.riccati_residual
    );
    assert!(c.gain.spectral_radius < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let mut e = random_error(&mut rng, 0.05);
        let e_norm0 = e.norm();
        for _ in 0..20 {
            let du = -(c.gain.k * e);
            // The plant, not the linear map, produces the next error.
            e = next_error(&c, &e, &du);
            assert!((ed.chat * e).amax() < 1e-9);
        }
        assert!(
            e.norm() < e_norm0 * 1e-6,
            "no decay: {:e} -> {:e}",
            e_norm0,
            e.norm()
        );
    }
}

#[test]
fn projection_is_constant_along_the_corrected_flow() {
    let c = controller(0.1);
    let g = &c.gait;
    let sel = &c.selectors;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let tau0 = rng.random_range(0.0..0.2);
        let q0 = nominal(g, tau0).unwrap() + sel.mhat * random_error(&mut rng, 0.02);
        let e0 = sel.m * (q0 - nominal(g, tau0).unwrap());
        let du = c.time_project(&e0, tau0).unwrap();
        let u = g.ubar + du;
        let mut worst: f64 = 0.0;
        for k in 1..=50 {
            // The phase end itself is a singular point of the projection.
            let tau = tau0 + (g.step_time - tau0) * k as f64 / 51.0;
            let tr = transition(&c.dynamics, tau - tau0).unwrap();
            let shifted = Vec4::new(u[0] + tau0 * u[2], u[1] + tau0 * u[3], u[2], u[3]);
            let q = tr.apply(&q0, &shifted, g.dbar, &Vec2::zeros());
            let e = sel.m * (q - nominal(g, tau).unwrap());
            worst = worst.max((c.time_project(&e, tau).unwrap() - du).amax() / du.amax().max(1.0));
        }
        assert!(worst < 1e-9, "projection drift {worst:e}");
    }
}

#[test]
fn projection_identities() {
    let c = controller(0.0);
    assert_eq!(c.time_project(&Vec8::zeros(), 0.23).unwrap(), Vec4::zeros());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let e = random_error(&mut rng, 0.03);
    let du = c.time_project(&e, 0.0).unwrap();
    assert!((du + c.gain.k * e).amax() < 1e-12);
    // Free functions agree with the controller.
    let free = time_project(&c.error_dynamics, &c.gait, &c.gain.k, &e, 0.17).unwrap();
    assert!((free - c.time_project(&e, 0.17).unwrap()).amax() < 1e-12);
    let z = c.gait.params.z_pelvis;
    let a = footstep_adjustment(&c.error_dynamics, &c.gait, &c.gain.k, &e, 0.17, z).unwrap();
    assert_eq!(
        a,
        c.footstep_adjustment(&e, 0.17, DEFAULT_TRUNCATION).unwrap()
    );
}

#[test]
fn forward_velocity_error_steps_forward() {
    let c = controller(0.0);
    for tau in [0.0, 0.1, 0.2, 0.3] {
        let mut e = Vec8::zeros();
        e[6] = 0.05;
        let a = c.footstep_adjustment(&e, tau, f64::INFINITY).unwrap();
        assert!(a.raw[0] > 0.0, "tau = {tau}: {:?}", a.raw);
        assert!(a.raw[1].abs() < 1e-12);
        e[6] = 0.0;
        e[7] = 0.05;
        let a = c.footstep_adjustment(&e, tau, f64::INFINITY).unwrap();
        assert!(a.raw[0].abs() < 1e-12);
    }
}

/// Worst deviation of the interpolated table from direct projection over
/// random `(e, tau)`. Torque gains are compared up to `0.9 T`; beyond that the
/// swing-velocity gain diverges towards the phase end.
fn table_error(c: &Controller, n: usize) -> (f64, f64) {
    let t = c.export_gain_table(n).unwrap();
    let last = *t.tau_grid.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut worst_u, mut worst_p): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let e = random_error(&mut rng, 0.02);
        let tau = rng.random_range(0.0..last);
        let (du, dp) = t.correction(&e, tau);
        let exact = c.footstep_adjustment(&e, tau, f64::INFINITY).unwrap();
        worst_p = worst_p.max((dp - exact.raw).amax());
        if tau <= 0.9 * c.step_time() {
            worst_u = worst_u.max((du - c.time_project(&e, tau).unwrap()).amax());
        }
    }
    (worst_u, worst_p)
}

#[test]
fn gain_table_refinement() {
    let c = controller(0.1);
    let errs: Vec<(f64, f64)> = [10, 20, 40, 80]
        .iter()
        .map(|&n| table_error(&c, n))
        .collect();
    for w in errs.windows(2) {
        assert!(w[0].0 / w[1].0 > 2.0, "torque errors {errs:?}");
        assert!(w[0].1 / w[1].1 > 2.0, "footstep errors {errs:?}");
    }
    // Nodes are exact.
    let t = c.export_gain_table(10).unwrap();
    let mut unit = Vec8::zeros();
    unit[2] = 1.0;
    let (du, dp) = t.correction(&unit, t.tau_grid[4]);
    assert!((du - c.time_project(&unit, t.tau_grid[4]).unwrap()).amax() < 1e-12);
    let a = c
        .footstep_adjustment(&unit, t.tau_grid[4], f64::INFINITY)
        .unwrap();
    assert!((dp - a.raw).amax() < 1e-12);
}

fn arb_vec8() -> impl Strategy<Value = Vec8> {
    prop::collection::vec(-0.05f64..0.05, 8).prop_map(|v| SVector::<f64, 8>::from_column_slice(&v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_linear(e1 in arb_vec8(), e2 in arb_vec8(), a in -3.0f64..3.0, tau in 0.0f64..0.4) {
        let c = controller(0.0);
        let lhs = c.time_project(&(e1 * a + e2), tau).unwrap();
        let rhs = c.time_project(&e1, tau).unwrap() * a + c.time_project(&e2, tau).unwrap();
        prop_assert!((lhs - rhs).amax() < 1e-8 * (1.0 + lhs.amax()));
    }

    #[test]
    fn sagittal_errors_give_sagittal_corrections(e in arb_vec8(), tau in 0.0f64..0.4) {
        let c = controller(0.1);
        let mut sag = e;
        for i in (1..8).step_by(2) {
            sag[i] = 0.0;
        }
        let du = c.time_project(&sag, tau).unwrap();
        prop_assert!(du[1].abs() < 1e-10 && du[3].abs() < 1e-10);
    }
}
