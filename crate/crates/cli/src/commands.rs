use herd_dynamics::model::STABILITY_RATIO;
use herd_dynamics::{
    classify_interior, equilibria as list_equilibria, extinction_bound, extinction_bound_from_rates,
    grid_sweep, integrate, interior_equilibrium, separatrix_scan, verify_theorem_bounds,
    BasinError, BoundCheck, EquilibriumKind, IntegrateError, IntegratorConfig, ModelParams,
    Region, SampleKind, ScanFailure, ScanOptions, Stability, State, Terminal,
};
use serde_json::{json, Value};

use crate::manifest::Manifest;
use crate::output::{csv_bytes, fmt_num, json_bytes, num, opt_num, sinks, Sink};
use crate::{
    BasinArgs, BoundArgs, EquilibriaArgs, Failure, ParamArgs, SeparatrixArgs, SimulateArgs,
    SolverArgs, EXIT_UNDETERMINED,
};

type CmdResult = Result<u8, Failure>;

fn params(a: &ParamArgs, m: &mut Manifest) -> Result<ModelParams, Failure> {
    let p = ModelParams::new(a.r, a.alpha, a.beta).map_err(|e| Failure::usage(e.to_string()))?;
    m.real("params", "r", a.r)
        .real("params", "alpha", a.alpha)
        .real("params", "beta", a.beta);
    Ok(p)
}

fn initial(x0: f64, y0: f64, m: &mut Manifest) -> Result<State, Failure> {
    let s = State::new(x0, y0).map_err(|e| Failure::usage(e.to_string()))?;
    m.real("initial_condition", "x0", x0)
        .real("initial_condition", "y0", y0);
    Ok(s)
}

fn solver(a: &SolverArgs, m: &mut Manifest) -> Result<IntegratorConfig, Failure> {
    let cfg = IntegratorConfig {
        t_max: a.t_max,
        rtol: a.rtol,
        atol: a.atol,
        ..Default::default()
    };
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    m.real("config", "t-max", a.t_max)
        .real("config", "rtol", a.rtol)
        .real("config", "atol", a.atol);
    note_config(m, &cfg);
    Ok(cfg)
}

fn note_config(m: &mut Manifest, cfg: &IntegratorConfig) {
    m.note("config", "h_init", num(cfg.h_init))
        .note("config", "h_min", num(cfg.h_min))
        .note("config", "h_max", num(cfg.h_max))
        .note("config", "event_tol", num(cfg.event_tol))
        .note("config", "conv_tol", num(cfg.conv_tol))
        .note("config", "conv_window", num(cfg.conv_window));
}

fn workers(w: Option<usize>, m: &mut Manifest) -> Result<Option<usize>, Failure> {
    if w == Some(0) {
        return Err(Failure::usage("--workers must be >= 1"));
    }
    // Worker count never changes results, so it is not a replay argument.
    m.note("execution", "workers", w.map_or(Value::Null, |n| json!(n)));
    Ok(w)
}

fn write(sink: &Sink, bytes: &[u8]) -> Result<(), Failure> {
    sink.write(bytes).map_err(Failure::io)
}

fn point(s: &State) -> Value {
    json!([num(s.x), num(s.y)])
}

fn check_json(c: &BoundCheck) -> Value {
    json!({
        "passed": c.passed,
        "worst_slack": num(c.worst_slack),
        "worst_t": num(c.worst_t),
        "samples_checked": c.samples_checked,
    })
}

fn kind_str(k: EquilibriumKind) -> &'static str {
    match k {
        EquilibriumKind::Extinction => "extinction",
        EquilibriumKind::PreyOnly => "prey_only",
        EquilibriumKind::Interior => "interior",
    }
}

fn stability_str(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Saddle => "saddle",
        Stability::NonHyperbolic => "non_hyperbolic",
        Stability::NotAnalyzable => "not_analyzable",
    }
}

fn failure_json(f: &ScanFailure) -> Value {
    match *f {
        ScanFailure::InvalidX { x } => json!({ "x": num(x), "failure": "invalid_x" }),
        ScanFailure::EmptyBracket { x, y_lo, y_hi } => json!({
            "x": num(x), "failure": "empty_bracket", "y_lo": num(y_lo), "y_hi": num(y_hi),
        }),
        ScanFailure::LowerEndpoint { x, y, verdict } => json!({
            "x": num(x), "failure": "lower_endpoint", "y": num(y), "verdict": verdict.label(),
        }),
        ScanFailure::UpperEndpoint { x, y, verdict } => json!({
            "x": num(x), "failure": "upper_endpoint", "y": num(y), "verdict": verdict.label(),
        }),
        ScanFailure::Midpoint { x, y, verdict } => json!({
            "x": num(x), "failure": "midpoint", "y": num(y), "verdict": verdict.label(),
        }),
    }
}

pub fn equilibria(a: &EquilibriaArgs) -> CmdResult {
    let mut m = Manifest::new("equilibria");
    let p = params(&a.params, &mut m)?;
    let list: Vec<Value> = list_equilibria(&p)
        .iter()
        .map(|e| {
            let mut v = json!({
                "kind": kind_str(e.kind),
                "point": point(&e.point),
                "stability": stability_str(e.stability),
            });
            if e.kind == EquilibriumKind::Interior {
                let c = classify_interior(&p).expect("interior exists");
                let obj = v.as_object_mut().expect("object");
                obj.insert("ratio".into(), num(c.ratio));
                obj.insert("threshold".into(), num(STABILITY_RATIO));
                obj.insert("ratio_exceeds_threshold".into(), json!(c.ratio > STABILITY_RATIO));
                obj.insert("eigen_stability".into(), json!(stability_str(c.eigen)));
                obj.insert(
                    "eigenvalues".into(),
                    json!(c
                        .eigenvalues
                        .iter()
                        .map(|z| json!([num(z.re), num(z.im)]))
                        .collect::<Vec<_>>()),
                );
                obj.insert("verdicts_agree".into(), json!(c.agree()));
            }
            v
        })
        .collect();
    let interior = interior_equilibrium(&p);
    let doc = json!({
        "r": num(p.r()),
        "alpha": num(p.alpha()),
        "beta": num(p.beta()),
        "equilibria": list,
        "interior": interior.as_ref().map_or(Value::Null, point),
        "manifest": m.to_value(),
    });
    let sink = a.out.clone().map_or(Sink::Stdout, Sink::File);
    write(&sink, &json_bytes(&doc))?;
    Ok(0)
}

pub fn bound(a: &BoundArgs) -> CmdResult {
    let mut m = Manifest::new("bound");
    let s0 = State::new(a.x0, a.y0).map_err(|e| Failure::usage(e.to_string()))?;
    let rep = extinction_bound_from_rates(a.r, a.alpha, &s0).map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(beta) = a.beta {
        ModelParams::new(a.r, a.alpha, beta).map_err(|e| Failure::usage(e.to_string()))?;
    }
    m.real("params", "r", a.r).real("params", "alpha", a.alpha);
    match a.beta {
        Some(beta) => m.real("params", "beta", beta),
        None => m.note("params", "beta", Value::Null),
    };
    m.real("initial_condition", "x0", a.x0)
        .real("initial_condition", "y0", a.y0);
    let doc = json!({
        "r": num(a.r),
        "alpha": num(a.alpha),
        "beta": opt_num(a.beta),
        "x0": num(a.x0),
        "y0": num(a.y0),
        "k_value": num(rep.k_value),
        "sufficient": rep.sufficient,
        "t_upper": opt_num(rep.t_upper),
        "manifest": m.to_value(),
    });
    let sink = a.out.clone().map_or(Sink::Stdout, Sink::File);
    write(&sink, &json_bytes(&doc))?;
    Ok(0)
}

pub fn simulate(a: &SimulateArgs) -> CmdResult {
    let mut m = Manifest::new("simulate");
    let p = params(&a.params, &mut m)?;
    let s0 = initial(a.x0, a.y0, &mut m)?;
    let mut cfg = solver(&a.solver, &mut m)?;
    cfg.continue_after_extinction = a.continue_after_extinction;
    cfg.output_samples = a.samples;
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(n) = a.samples {
        m.count("config", "samples", n);
    }
    m.switch("config", "continue-after-extinction", a.continue_after_extinction);

    let traj = integrate(&p, &s0, &cfg).map_err(|e| match e {
        IntegrateError::StepUnderflow { .. } | IntegrateError::NonFinite { .. } => {
            Failure::numerical(e.to_string())
        }
        other => Failure::usage(other.to_string()),
    })?;
    let report = verify_theorem_bounds(&p, &traj).expect("trajectory built from these params");
    let bound = extinction_bound(&p, &s0);

    let rows = traj
        .samples
        .iter()
        .filter(|s| cfg.output_samples.is_none() || s.kind != SampleKind::Step)
        .map(|s| vec![fmt_num(s.t), fmt_num(s.x), fmt_num(s.y), fmt_num(s.u)]);
    let csv = csv_bytes(&["t", "x", "y", "u"], rows);

    let (terminal, t_ext, t_conv, converged_to) = match traj.terminal {
        Terminal::ExtinctionAt { t_ext, .. } => ("extinction", Some(t_ext), None, Value::Null),
        Terminal::ConvergedTo { equilibrium, t_conv } => (
            "converged",
            None,
            Some(t_conv),
            json!({ "kind": kind_str(equilibrium.kind), "point": point(&equilibrium.point) }),
        ),
        Terminal::HorizonReached => ("horizon", None, None, Value::Null),
    };
    let end = traj.last();
    let interior = interior_equilibrium(&p);
    let (data_sink, summary_sink) = sinks(&a.out, &a.summary);
    m.note("outputs", "csv", json!(data_sink.describe()))
        .note("outputs", "summary", json!(summary_sink.describe()));
    let summary = json!({
        "terminal": terminal,
        "t_ext": opt_num(t_ext),
        "t_conv": opt_num(t_conv),
        "converged_to": converged_to,
        "endpoint": { "t": num(end.t), "x": num(end.x), "y": num(end.y) },
        "endpoint_distance_to_interior": opt_num(interior.map(|s| end.state().distance(&s))),
        "k_value": num(bound.k_value),
        "sufficient": bound.sufficient,
        "t_upper": opt_num(bound.t_upper),
        "bounds": {
            "all_passed": report.all_passed(),
            "predator_lower": check_json(&report.predator_lower),
            "prey_upper": check_json(&report.prey_upper),
            "envelope": check_json(&report.envelope),
            "extinction_time": {
                "applicable": report.extinction_time.applicable,
                "passed": report.extinction_time.passed,
            },
        },
        "rows": traj.samples.len(),
        "steps": {
            "accepted": traj.stats.accepted,
            "rejected": traj.stats.rejected,
            "rhs_evals": traj.stats.rhs_evals,
        },
        "manifest": m.to_value(),
    });
    write(&data_sink, &csv)?;
    write(&summary_sink, &json_bytes(&summary))?;
    Ok(if terminal == "horizon" { EXIT_UNDETERMINED } else { 0 })
}

pub fn basin(a: &BasinArgs) -> CmdResult {
    let mut m = Manifest::new("basin");
    let p = params(&a.params, &mut m)?;
    if a.nx < 2 || a.ny < 2 {
        return Err(Failure::usage("--nx and --ny must be >= 2"));
    }
    let region = Region {
        x_min: a.x_min,
        x_max: a.x_max,
        y_min: a.y_min,
        y_max: a.y_max,
    };
    region.validate().map_err(|e| Failure::usage(e.to_string()))?;
    m.real("grid", "x-min", a.x_min)
        .real("grid", "x-max", a.x_max)
        .real("grid", "y-min", a.y_min)
        .real("grid", "y-max", a.y_max)
        .count("grid", "nx", a.nx)
        .count("grid", "ny", a.ny);
    let cfg = solver(&a.solver, &mut m)?;
    let workers = workers(a.workers, &mut m)?;

    let grid = grid_sweep(&p, &region, a.nx, a.ny, &cfg, workers).map_err(basin_failure)?;
    let rows = grid.iter().map(|(s, v)| {
        vec![
            fmt_num(s.x),
            fmt_num(s.y),
            v.label(),
            v.t_ext().map(fmt_num).unwrap_or_default(),
        ]
    });
    let csv = csv_bytes(&["x0", "y0", "outcome", "t_ext"], rows);

    let count = |f: fn(&herd_dynamics::BasinVerdict) -> bool| grid.cells.iter().filter(|v| f(v)).count();
    let extinction = count(|v| v.is_extinction());
    let coexistence = count(|v| v.is_coexistence());
    let (data_sink, manifest_sink) = sinks(&a.out, &a.manifest);
    m.note("outputs", "csv", json!(data_sink.describe()))
        .note("outputs", "manifest", json!(manifest_sink.describe()));
    let doc = json!({
        "cells": grid.cells.len(),
        "extinction": extinction,
        "coexistence": coexistence,
        "undetermined": grid.cells.len() - extinction - coexistence,
        "manifest": m.to_value(),
    });
    write(&data_sink, &csv)?;
    write(&manifest_sink, &json_bytes(&doc))?;
    Ok(0)
}

fn basin_failure(e: BasinError) -> Failure {
    match e {
        BasinError::UnstableRegime { .. } => Failure::regime(e.to_string()),
        BasinError::Integrate(IntegrateError::StepUnderflow { .. } | IntegrateError::NonFinite { .. }) => {
            Failure::numerical(e.to_string())
        }
        BasinError::WorkerPool(_) => Failure::numerical(e.to_string()),
        _ => Failure::usage(e.to_string()),
    }
}

pub fn separatrix(a: &SeparatrixArgs) -> CmdResult {
    let mut m = Manifest::new("separatrix");
    let p = params(&a.params, &mut m)?;
    if a.points == 0 {
        return Err(Failure::usage("--points must be >= 1"));
    }
    if !(a.x_min > 0.0 && a.x_min <= a.x_max && a.x_max <= 1.0) {
        return Err(Failure::usage("need 0 < --x-min <= --x-max <= 1"));
    }
    m.real("scan", "x-min", a.x_min)
        .real("scan", "x-max", a.x_max)
        .count("scan", "points", a.points)
        .real("scan", "bracket-tol", a.bracket_tol)
        .real("scan", "y-lo", a.y_lo);
    match a.y_hi {
        Some(y) => m.real("scan", "y-hi", y),
        None => m.note("scan", "y_hi", Value::Null),
    };
    let cfg = solver(&a.solver, &mut m)?;
    let workers = workers(a.workers, &mut m)?;

    let xs: Vec<f64> = if a.points == 1 {
        vec![a.x_min]
    } else {
        (0..a.points)
            .map(|k| a.x_min + k as f64 * (a.x_max - a.x_min) / (a.points - 1) as f64)
            .collect()
    };
    let opts = ScanOptions {
        y_lo_init: a.y_lo,
        y_max: a.y_hi,
        bracket_tol: a.bracket_tol,
        workers,
    };
    let lines = separatrix_scan(&p, &xs, &opts, &cfg).map_err(basin_failure)?;

    let k_of = |x: f64| (p.r() + 2.0 * p.alpha()) * x.sqrt();
    let rows = lines.iter().map(|line| match line {
        Ok(pt) => vec![
            fmt_num(pt.x),
            fmt_num(pt.y_crit),
            fmt_num(pt.y_lo),
            fmt_num(pt.y_hi),
            fmt_num(pt.k_of_x),
        ],
        Err(f) => vec![fmt_num(f.x()), String::new(), String::new(), String::new(), fmt_num(k_of(f.x()))],
    });
    let csv = csv_bytes(&["x", "y_crit", "y_lo", "y_hi", "k_of_x"], rows);

    let failures: Vec<Value> = lines
        .iter()
        .filter_map(|l| l.as_ref().err())
        .map(failure_json)
        .collect();
    let (data_sink, manifest_sink) = sinks(&a.out, &a.manifest);
    m.note("outputs", "csv", json!(data_sink.describe()))
        .note("outputs", "manifest", json!(manifest_sink.describe()));
    let doc = json!({
        "points": lines.len(),
        "bracketed": lines.len() - failures.len(),
        "failures": failures,
        "manifest": m.to_value(),
    });
    write(&data_sink, &csv)?;
    write(&manifest_sink, &json_bytes(&doc))?;
    Ok(0)
}
