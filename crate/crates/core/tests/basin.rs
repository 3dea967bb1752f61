use herd_dynamics::{
    audit_monotonicity, classify_ic, extinction_bound, grid_sweep, integrate,
    integrate_raw_reference, interior_equilibrium, k_threshold, separatrix_scan,
    verify_theorem_bounds, BasinVerdict, IntegratorConfig, ModelParams, Region, ScanFailure,
    ScanOptions, State, Terminal, UndeterminedReason,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base() -> ModelParams {
    ModelParams::new(0.5, 0.4, 0.65).unwrap()
}

#[test]
fn base_initial_conditions() {
    let p = base();
    let cfg = IntegratorConfig::default();
    match classify_ic(&p, &State { x: 0.4, y: 1.0 }, &cfg) {
        BasinVerdict::FiniteTimeExtinction { t_ext } => assert!((t_ext - 1.624).abs() <= 0.005),
        v => panic!("{v:?}"),
    }
    assert_eq!(classify_ic(&p, &State { x: 0.4, y: 0.3 }, &cfg), BasinVerdict::Coexistence);
    let star = interior_equilibrium(&p).unwrap();
    assert_eq!(classify_ic(&p, &star, &cfg), BasinVerdict::Coexistence);
}

#[test]
fn undetermined_is_never_coexistence() {
    let p = base();
    let short = IntegratorConfig {
        t_max: 5.0,
        ..Default::default()
    };
    assert_eq!(
        classify_ic(&p, &State { x: 0.4, y: 0.3 }, &short),
        BasinVerdict::Undetermined {
            reason: UndeterminedReason::HorizonReached
        }
    );
    assert_eq!(
        classify_ic(&p, &State { x: 0.0, y: 0.3 }, &short),
        BasinVerdict::Undetermined {
            reason: UndeterminedReason::PreyAbsent
        }
    );
    // y = 0 is invariant: logistic growth to the prey-only saddle
    assert_eq!(
        classify_ic(&p, &State { x: 0.2, y: 0.0 }, &IntegratorConfig::default()),
        BasinVerdict::Undetermined {
            reason: UndeterminedReason::ConvergedElsewhere
        }
    );
    let tiny_steps = IntegratorConfig {
        rtol: 1e-30,
        atol: 1e-300,
        h_min: 1e-3,
        ..Default::default()
    };
    assert_eq!(
        classify_ic(&p, &State { x: 0.4, y: 1.0 }, &tiny_steps),
        BasinVerdict::Undetermined {
            reason: UndeterminedReason::StepUnderflow
        }
    );
}

/// "Extinct before `t_end`" under fixed-step RK4.
fn oracle_extinct(p: &ModelParams, x: f64, y: f64) -> bool {
    let traj = integrate_raw_reference(p, &State { x, y }, 1e-3, 60.0, usize::MAX).unwrap();
    matches!(traj.terminal, Terminal::ExtinctionAt { .. })
}

#[test]
fn separatrix_at_base_ic_matches_oracle() {
    let p = base();
    let cfg = IntegratorConfig::default();
    let opts = ScanOptions::default();
    let out = separatrix_scan(&p, &[0.4], &opts, &cfg).unwrap();
    let pt = out[0].unwrap();
    assert!(pt.y_hi - pt.y_lo <= opts.bracket_tol);
    assert!(pt.y_crit > 0.3 && pt.y_crit < 0.82219, "{pt:?}");
    assert_eq!(pt.k_of_x, k_threshold(0.5, 0.4, 0.4));

    let (mut lo, mut hi) = (0.3, 0.82219);
    assert!(!oracle_extinct(&p, 0.4, lo) && oracle_extinct(&p, 0.4, hi));
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if oracle_extinct(&p, 0.4, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    assert!((pt.y_crit - oracle).abs() <= 2e-4, "{} vs {oracle}", pt.y_crit);
    // scipy solve_ivp bisection to 1e-12
    assert!((pt.y_crit - 0.426_544_284).abs() <= 1e-4);
}

#[test]
fn separatrix_below_k_and_monotone() {
    let p = base();
    let cfg = IntegratorConfig::default();
    let opts = ScanOptions::default();
    let xs: Vec<f64> = (0..20).map(|k| 0.05 + 0.9 * k as f64 / 19.0).collect();
    let out = separatrix_scan(&p, &xs, &opts, &cfg).unwrap();
    assert_eq!(out.len(), 20);
    for (x, line) in xs.iter().zip(&out) {
        let pt = line.as_ref().unwrap_or_else(|e| panic!("{e:?}"));
        assert_eq!(pt.x, *x);
        assert!(pt.y_crit <= pt.k_of_x + opts.bracket_tol, "{pt:?}");
        let audit = audit_monotonicity(&p, pt, 1.5 * pt.k_of_x, &cfg);
        assert!(audit.consistent(), "{audit:?}");
    }
}

#[test]
fn low_upper_endpoint_is_a_per_line_failure() {
    let p = base();
    let opts = ScanOptions {
        y_max: Some(0.35),
        ..Default::default()
    };
    let out = separatrix_scan(&p, &[0.4], &opts, &IntegratorConfig::default()).unwrap();
    assert!(matches!(out[0], Err(ScanFailure::UpperEndpoint { .. })));
}

#[test]
fn grid_is_worker_independent_and_theorem_consistent() {
    let p = base();
    let cfg = IntegratorConfig::default();
    let region = Region {
        x_min: 0.05,
        x_max: 1.0,
        y_min: 0.05,
        y_max: 1.0,
    };
    let one = grid_sweep(&p, &region, 8, 8, &cfg, Some(1)).unwrap();
    let many = grid_sweep(&p, &region, 8, 8, &cfg, Some(4)).unwrap();
    assert_eq!(one, many);
    for (s, v) in one.iter() {
        if s.y >= k_threshold(0.5, 0.4, s.x) {
            assert!(v.is_extinction(), "{s:?} {v:?}");
        }
    }
    assert!(one.cells.iter().any(|v| v.is_extinction()));
    assert!(one.cells.iter().any(|v| v.is_coexistence()));
}

#[test]
fn bottom_row_coexists() {
    // five cells on y = 0.05 checked against the RK4 oracle: no extinction by t = 60
    let p = base();
    let cfg = IntegratorConfig::default();
    for x in [0.2, 0.3, 0.4, 0.5, 0.6] {
        assert!(!oracle_extinct(&p, x, 0.05));
        assert_eq!(classify_ic(&p, &State { x, y: 0.05 }, &cfg), BasinVerdict::Coexistence, "{x}");
    }
}

#[test]
fn degenerate_grid() {
    let region = Region {
        x_min: 0.4,
        x_max: 0.4,
        y_min: 0.3,
        y_max: 1.0,
    };
    let g = grid_sweep(&base(), &region, 1, 2, &IntegratorConfig::default(), None).unwrap();
    assert_eq!(g.cells.len(), 2);
    assert!(g.cell(0, 0).is_coexistence());
    assert!(g.cell(0, 1).is_extinction());
}

#[test]
fn bounds_on_base_trajectories() {
    let p = base();
    let cfg = IntegratorConfig::default();

    let traj = integrate(&p, &State { x: 0.4, y: 1.0 }, &cfg).unwrap();
    let rep = verify_theorem_bounds(&p, &traj).unwrap();
    assert!(rep.all_passed(), "{rep:?}");
    assert!(rep.extinction_time.applicable && rep.extinction_time.passed);
    assert!((rep.extinction_time.t_upper.unwrap() - 2.657_003_139).abs() < 1e-8);
    assert!(rep.extinction_time.t_ext.unwrap() <= rep.extinction_time.t_upper.unwrap());

    let traj = integrate(&p, &State { x: 0.4, y: 0.3 }, &cfg).unwrap();
    let rep = verify_theorem_bounds(&p, &traj).unwrap();
    assert!(rep.predator_lower.passed && rep.prey_upper.passed && rep.envelope.passed);
    assert!(!rep.extinction_time.applicable);

    let axis = IntegratorConfig {
        t_max: 30.0,
        ..Default::default()
    };
    let traj = integrate(&p, &State { x: 0.0, y: 0.9 }, &axis).unwrap();
    let rep = verify_theorem_bounds(&p, &traj).unwrap();
    assert!(rep.all_passed());
    assert_eq!(rep.predator_lower.worst_slack, 0.0);
}

#[test]
fn prey_above_carrying_capacity_uses_weak_bound() {
    let p = base();
    let traj = integrate(&p, &State { x: 1.8, y: 0.1 }, &IntegratorConfig::default()).unwrap();
    let rep = verify_theorem_bounds(&p, &traj).unwrap();
    assert!(rep.prey_upper.passed, "{rep:?}");
}

#[test]
fn theorem_holds_on_random_admissible_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let threshold = 1.0 / 3f64.sqrt();
    let mut checked = 0;
    while checked < 200 {
        let r = rng.gen_range(1e-3..=5.0);
        let alpha = rng.gen_range(1e-3..=5.0);
        let beta = rng.gen_range(1e-3..=5.0);
        if !(beta > alpha && alpha / beta > threshold) {
            continue;
        }
        let p = ModelParams::new(r, alpha, beta).unwrap();
        let x0: f64 = rng.gen_range(1e-6..=1.0);
        let delta: f64 = rng.gen_range(1e-6..=1.0);
        let s0 = State {
            x: x0,
            y: k_threshold(r, alpha, x0) * (1.0 + delta),
        };
        let t_upper = extinction_bound(&p, &s0).t_upper.unwrap();
        let cfg = IntegratorConfig {
            t_max: (1.1 * t_upper).max(10.0),
            ..Default::default()
        };
        let traj = integrate(&p, &s0, &cfg).unwrap();
        let rep = verify_theorem_bounds(&p, &traj).unwrap();
        assert!(rep.all_passed(), "{p:?} {s0:?} {rep:?}");
        assert!(classify_ic(&p, &s0, &cfg).is_extinction());
        checked += 1;
    }
}
