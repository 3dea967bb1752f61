use herd_dynamics::{
    integrate, integrate_raw_reference, interior_equilibrium, rhs_raw, rhs_regularized,
    EquilibriumKind, IntegrateError, IntegratorConfig, ModelParams, RegularizedState, SampleKind,
    State, Terminal,
};
use proptest::prelude::*;

fn base() -> ModelParams {
    ModelParams::new(0.5, 0.4, 0.65).unwrap()
}

fn extinction_time(traj: &herd_dynamics::Trajectory) -> f64 {
    traj.t_ext().expect("expected extinction")
}

#[test]
fn base_extinction_time() {
    let cfg = IntegratorConfig::default();
    let traj = integrate(&base(), &State { x: 0.4, y: 1.0 }, &cfg).unwrap();
    let Terminal::ExtinctionAt { t_ext, bracket } = traj.terminal else {
        panic!("{:?}", traj.terminal)
    };
    assert!((t_ext - 1.624).abs() <= 0.005, "t_ext = {t_ext}");
    // scipy solve_ivp (rtol 1e-12) event time
    assert!((t_ext - 1.621_746_49).abs() < 1e-7, "t_ext = {t_ext}");
    assert!(bracket.1 - bracket.0 <= cfg.event_tol);
    assert!(bracket.0 <= t_ext && t_ext <= bracket.1);

    let n = traj.samples.len();
    let event = traj.samples[n - 1];
    assert_eq!(event.kind, SampleKind::Event);
    assert_eq!((event.x, event.u), (0.0, 0.0));
    assert!(event.y > 0.0, "transversal: du/dt = -y/2 < 0");
    assert!(traj.samples[n - 2].x > 0.0);
}

#[test]
fn base_coexistence() {
    let traj = integrate(&base(), &State { x: 0.4, y: 0.3 }, &IntegratorConfig::default()).unwrap();
    let Terminal::ConvergedTo { equilibrium, t_conv } = traj.terminal else {
        panic!("{:?}", traj.terminal)
    };
    assert_eq!(equilibrium.kind, EquilibriumKind::Interior);
    assert!((equilibrium.point.x - 0.3787).abs() < 1e-4);
    assert!((equilibrium.point.y - 0.1912).abs() < 1e-4);
    assert!(t_conv > 0.0);
    assert!(traj.last().state().distance(&equilibrium.point) <= 1e-8);
}

#[test]
fn samples_start_at_initial_condition_and_increase() {
    let s0 = State { x: 0.4, y: 0.3 };
    let traj = integrate(&base(), &s0, &IntegratorConfig::default()).unwrap();
    assert_eq!(traj.samples[0].t, 0.0);
    assert_eq!(traj.samples[0].state(), s0);
    assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
    assert!(traj.samples.iter().all(|s| s.x >= 0.0 && s.y >= 0.0 && s.u >= 0.0));
}

#[test]
fn fixed_point_stays_put() {
    let p = base();
    let star = interior_equilibrium(&p).unwrap();
    let cfg = IntegratorConfig {
        t_max: 500.0,
        conv_window: 1e9,
        ..Default::default()
    };
    let traj = integrate(&p, &star, &cfg).unwrap();
    assert_eq!(traj.terminal, Terminal::HorizonReached);
    assert_eq!(traj.last().t, 500.0);
    assert!(traj.samples.iter().all(|s| s.state().distance(&star) <= 1e-8));

    let traj = integrate(&p, &star, &IntegratorConfig::default()).unwrap();
    assert!(matches!(traj.terminal, Terminal::ConvergedTo { .. }));
}

#[test]
fn predator_axis_is_exact() {
    let p = base();
    let cfg = IntegratorConfig {
        t_max: 20.0,
        ..Default::default()
    };
    let traj = integrate(&p, &State { x: 0.0, y: 2.0 }, &cfg).unwrap();
    assert!(matches!(traj.terminal, Terminal::ExtinctionAt { t_ext, .. } if t_ext == 0.0));
    assert_eq!(traj.last().t, 20.0);
    for s in &traj.samples {
        assert_eq!(s.x, 0.0);
        assert_eq!(s.y, 2.0 * (-0.4 * s.t).exp());
    }
}

#[test]
fn continuation_after_extinction() {
    let p = base();
    let cfg = IntegratorConfig {
        t_max: 10.0,
        continue_after_extinction: true,
        output_samples: Some(101),
        ..Default::default()
    };
    let traj = integrate(&p, &State { x: 0.4, y: 1.0 }, &cfg).unwrap();
    let t_ext = extinction_time(&traj);
    let event = traj.samples.iter().find(|s| s.kind == SampleKind::Event).unwrap();
    assert_eq!(event.t, t_ext);
    let after: Vec<_> = traj.samples.iter().filter(|s| s.t > t_ext).collect();
    assert_eq!(after.last().unwrap().t, 10.0);
    for s in after {
        assert_eq!(s.kind, SampleKind::Axis);
        assert_eq!(s.x, 0.0);
        assert!((s.y - event.y * (-0.4 * (s.t - t_ext)).exp()).abs() <= 1e-15);
    }
    assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
}

#[test]
fn uniform_output_grid() {
    let cfg = IntegratorConfig {
        t_max: 50.0,
        conv_window: 1e9,
        output_samples: Some(51),
        ..Default::default()
    };
    let traj = integrate(&base(), &State { x: 0.4, y: 0.3 }, &cfg).unwrap();
    let grid: Vec<f64> = traj
        .samples
        .iter()
        .filter(|s| matches!(s.kind, SampleKind::Output | SampleKind::Initial))
        .map(|s| s.t)
        .collect();
    assert_eq!(grid.len(), 51);
    for (k, t) in grid.iter().enumerate() {
        assert_eq!(*t, 50.0 * k as f64 / 50.0);
    }
    // interpolated outputs agree with the reference solver
    let reference = integrate_raw_reference(&base(), &State { x: 0.4, y: 0.3 }, 1e-3, 50.0, 1000).unwrap();
    for r in &reference.samples {
        let a = traj
            .samples
            .iter()
            .find(|s| (s.t - r.t).abs() < 1e-9)
            .unwrap_or_else(|| panic!("no sample at {}", r.t));
        assert!((a.x - r.x).abs() < 1e-7 && (a.y - r.y).abs() < 1e-7, "t = {}", r.t);
    }
}

#[test]
fn oracle_agreement_on_extinction_time() {
    let p = base();
    let s0 = State { x: 0.4, y: 1.0 };
    let adaptive = extinction_time(&integrate(&p, &s0, &IntegratorConfig::default()).unwrap());
    let oracle = extinction_time(&integrate_raw_reference(&p, &s0, 1e-5, 10.0, 1000).unwrap());
    assert!((adaptive - oracle).abs() <= 1e-6, "{adaptive} vs {oracle}");
    let half = extinction_time(&integrate_raw_reference(&p, &s0, 5e-6, 10.0, 1000).unwrap());
    assert!((half - oracle).abs() <= 1e-8, "{half} vs {oracle}");
}

#[test]
fn tolerance_convergence() {
    let p = base();
    let s0 = State { x: 0.4, y: 1.0 };
    let base = IntegratorConfig::default();
    let tight = IntegratorConfig {
        rtol: base.rtol / 10.0,
        atol: base.atol / 10.0,
        ..base.clone()
    };
    let a = extinction_time(&integrate(&p, &s0, &base).unwrap());
    let b = extinction_time(&integrate(&p, &s0, &tight).unwrap());
    assert!((a - b).abs() < 10.0 * base.event_tol, "{a} vs {b}");
}

#[test]
fn reference_rejects_zero_prey() {
    assert!(matches!(
        integrate_raw_reference(&base(), &State { x: 0.0, y: 1.0 }, 1e-3, 1.0, 1),
        Err(IntegrateError::InvalidArgument { field: "x0", .. })
    ));
}

#[test]
fn regularization_equivalence_without_extinction() {
    let p = base();
    let s0 = State { x: 0.4, y: 0.3 };
    let cfg = IntegratorConfig {
        t_max: 100.0,
        conv_window: 1e9,
        output_samples: Some(101),
        ..Default::default()
    };
    let adaptive = integrate(&p, &s0, &cfg).unwrap();
    assert_eq!(adaptive.terminal, Terminal::HorizonReached);
    for s in &adaptive.samples {
        assert_eq!(s.x, s.u * s.u);
    }
    let reference = integrate_raw_reference(&p, &s0, 1e-4, 100.0, 10_000).unwrap();
    let mut shared = 0;
    for r in &reference.samples {
        if let Some(a) = adaptive.samples.iter().find(|s| (s.t - r.t).abs() < 1e-9) {
            assert!((a.x - r.x).abs() <= 1e-6 && (a.y - r.y).abs() <= 1e-6, "t = {}", r.t);
            shared += 1;
        }
    }
    assert_eq!(shared, 101);
}

#[test]
fn reference_coexistence_endpoint_at_200() {
    // RK4 oracle; the spiral decays at rate |Re(lambda)| = 0.017, so at
    // t = 200 the state is still O(1e-2) from the interior point.
    let p = base();
    let star = interior_equilibrium(&p).unwrap();
    let traj = integrate_raw_reference(&p, &State { x: 0.4, y: 0.3 }, 1e-3, 200.0, 1000).unwrap();
    assert_eq!(traj.terminal, Terminal::HorizonReached);
    let end = traj.last();
    assert_eq!(end.t, 200.0);
    // scipy solve_ivp (rtol 1e-12) at t = 200
    assert!((end.x - star.x - 8.393_958_94e-3).abs() < 1e-8, "{}", end.x - star.x);
    assert!((end.y - star.y - 6.518_371_5e-4).abs() < 1e-8, "{}", end.y - star.y);
}

#[test]
fn deterministic_repeat() {
    let cfg = IntegratorConfig {
        output_samples: Some(201),
        ..Default::default()
    };
    let a = integrate(&base(), &State { x: 0.7, y: 0.2 }, &cfg).unwrap();
    let b = integrate(&base(), &State { x: 0.7, y: 0.2 }, &cfg).unwrap();
    assert_eq!(a, b);
    let bits = |t: &herd_dynamics::Trajectory| -> Vec<(u64, u64, u64)> {
        t.samples.iter().map(|s| (s.t.to_bits(), s.x.to_bits(), s.y.to_bits())).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn regularized_field_matches_raw(
        r in 0.01f64..5.0, a in 0.01f64..5.0, b in 0.01f64..5.0,
        u in 1e-3f64..2.0, y in 0.0f64..5.0,
    ) {
        let p = ModelParams::new(r, a, b).unwrap();
        let (du, dy_reg) = rhs_regularized(&p, &RegularizedState { u, y });
        let (dx, dy) = rhs_raw(&p, &State { x: u * u, y }).unwrap();
        let lhs = 2.0 * u * du;
        prop_assert!((lhs - dx).abs() <= 1e-12 * dx.abs().max(lhs.abs()).max(1e-300) + 1e-15);
        prop_assert!((dy_reg - dy).abs() <= 1e-12 * dy.abs().max(1e-300) + 1e-15);
    }

    #[test]
    fn regularization_round_trip(x in 1e-300f64..1e6, y in 0.0f64..10.0) {
        let back = RegularizedState::from(State { x, y }).to_state();
        prop_assert!(((back.x - x) / x).abs() <= 1e-15);
        prop_assert_eq!(back.y, y);
    }
}
