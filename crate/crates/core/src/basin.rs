//! Outcome classification of initial conditions and the two-mode boundary.
//!
//! Above the separatrix, prey reach zero in finite time; below it the
//! state converges to the interior equilibrium. The separatrix is located
//! by bisection on the predator level along vertical lines, using forward
//! solves only.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate, IntegratorConfig, SampleKind, Terminal, Trajectory};
use crate::error::{BasinError, IntegrateError};
use crate::model::{
    classify_interior, envelope, extinction_bound, k_threshold, EquilibriumKind, ModelParams,
    Stability, State,
};

/// Slack allowed when checking inequalities along numerical trajectories.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UndeterminedReason {
    HorizonReached,
    StepUnderflow,
    NonFinite,
    /// Converged, but to an equilibrium other than the interior one.
    ConvergedElsewhere,
    /// `x0 = 0`: the prey is absent from the start.
    PreyAbsent,
    InvalidInput,
}

impl UndeterminedReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::HorizonReached => "horizon_reached",
            Self::StepUnderflow => "step_underflow",
            Self::NonFinite => "non_finite",
            Self::ConvergedElsewhere => "converged_elsewhere",
            Self::PreyAbsent => "prey_absent",
            Self::InvalidInput => "invalid_input",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum BasinVerdict {
    Coexistence,
    FiniteTimeExtinction { t_ext: f64 },
    Undetermined { reason: UndeterminedReason },
}

impl BasinVerdict {
    pub fn is_coexistence(&self) -> bool {
        matches!(self, Self::Coexistence)
    }

    pub fn is_extinction(&self) -> bool {
        matches!(self, Self::FiniteTimeExtinction { .. })
    }

    pub fn t_ext(&self) -> Option<f64> {
        match self {
            Self::FiniteTimeExtinction { t_ext } => Some(*t_ext),
            _ => None,
        }
    }

    /// Short label: `coexistence`, `extinction` or `undetermined:<reason>`.
    pub fn label(&self) -> String {
        match self {
            Self::Coexistence => "coexistence".into(),
            Self::FiniteTimeExtinction { .. } => "extinction".into(),
            Self::Undetermined { reason } => format!("undetermined:{}", reason.as_str()),
        }
    }
}

fn undetermined(reason: UndeterminedReason) -> BasinVerdict {
    BasinVerdict::Undetermined { reason }
}

/// Maps an integration outcome to a verdict. Failures never become
/// coexistence.
pub fn classify_ic(p: &ModelParams, s0: &State, cfg: &IntegratorConfig) -> BasinVerdict {
    match integrate(p, s0, cfg) {
        Ok(traj) => verdict_of(&traj.terminal),
        Err(IntegrateError::StepUnderflow { .. }) => undetermined(UndeterminedReason::StepUnderflow),
        Err(IntegrateError::NonFinite { .. }) => undetermined(UndeterminedReason::NonFinite),
        Err(_) => undetermined(UndeterminedReason::InvalidInput),
    }
}

fn verdict_of(terminal: &Terminal) -> BasinVerdict {
    match *terminal {
        Terminal::ExtinctionAt { t_ext, .. } if t_ext > 0.0 => {
            BasinVerdict::FiniteTimeExtinction { t_ext }
        }
        Terminal::ExtinctionAt { .. } => undetermined(UndeterminedReason::PreyAbsent),
        Terminal::ConvergedTo { equilibrium, .. } => {
            if equilibrium.kind == EquilibriumKind::Interior {
                BasinVerdict::Coexistence
            } else {
                undetermined(UndeterminedReason::ConvergedElsewhere)
            }
        }
        Terminal::HorizonReached => undetermined(UndeterminedReason::HorizonReached),
    }
}

/// Maps `f` over `items` on `workers` threads (`None`: rayon's default).
/// Output order follows input order regardless of scheduling.
fn par_map<T, R, F>(items: &[T], workers: Option<usize>, f: F) -> Result<Vec<R>, BasinError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if workers == Some(1) {
        return Ok(items.iter().map(f).collect());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| BasinError::WorkerPool(e.to_string()))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn validate(&self) -> Result<(), BasinError> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi;
        if ok(self.x_min, self.x_max) && ok(self.y_min, self.y_max) {
            Ok(())
        } else {
            Err(BasinError::InvalidArgument(format!(
                "region must satisfy 0 <= min <= max in both axes: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinGrid {
    pub region: Region,
    pub nx: usize,
    pub ny: usize,
    /// Row-major over `(i, j)`: cell `(i, j)` is at index `i * ny + j`.
    pub cells: Vec<BasinVerdict>,
}

impl BasinGrid {
    fn axis(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
        if n <= 1 {
            lo
        } else {
            lo + k as f64 * (hi - lo) / (n - 1) as f64
        }
    }

    /// Initial condition of cell `(i, j)`: `(x_min + i dx, y_min + j dy)`.
    pub fn initial_condition(&self, i: usize, j: usize) -> State {
        let r = &self.region;
        State {
            x: Self::axis(r.x_min, r.x_max, self.nx, i),
            y: Self::axis(r.y_min, r.y_max, self.ny, j),
        }
    }

    pub fn cell(&self, i: usize, j: usize) -> &BasinVerdict {
        &self.cells[i * self.ny + j]
    }

    /// `(initial condition, verdict)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (State, &BasinVerdict)> + '_ {
        (0..self.nx)
            .flat_map(move |i| (0..self.ny).map(move |j| (i, j)))
            .map(move |(i, j)| (self.initial_condition(i, j), self.cell(i, j)))
    }
}

/// Classifies every cell of an `nx` by `ny` grid spanning `region`
/// (endpoints included). The result does not depend on `workers`.
pub fn grid_sweep(
    p: &ModelParams,
    region: &Region,
    nx: usize,
    ny: usize,
    cfg: &IntegratorConfig,
    workers: Option<usize>,
) -> Result<BasinGrid, BasinError> {
    region.validate()?;
    if nx == 0 || ny == 0 {
        return Err(BasinError::InvalidArgument("grid resolution must be >= 1".into()));
    }
    cfg.validate()?;
    let mut grid = BasinGrid {
        region: *region,
        nx,
        ny,
        cells: Vec::new(),
    };
    let ics: Vec<State> = (0..nx)
        .flat_map(|i| (0..ny).map(move |j| (i, j)))
        .map(|(i, j)| grid.initial_condition(i, j))
        .collect();
    grid.cells = par_map(&ics, workers, |s| classify_ic(p, s, cfg))?;
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOptions {
    /// Lower bracket start; must classify as coexistence.
    pub y_lo_init: f64,
    /// Upper bracket start; `None` means `1.5 K(x)`.
    pub y_max: Option<f64>,
    pub bracket_tol: f64,
    pub workers: Option<usize>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            y_lo_init: 1e-3,
            y_max: None,
            bracket_tol: 1e-4,
            workers: None,
        }
    }
}

/// A bracketed point on the boundary at prey level `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparatrixPoint {
    pub x: f64,
    /// Classifies as coexistence.
    pub y_lo: f64,
    /// Classifies as finite-time extinction.
    pub y_hi: f64,
    pub y_crit: f64,
    /// `K(x) = (r + 2 alpha) sqrt(x)`.
    pub k_of_x: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "failure", rename_all = "snake_case")]
pub enum ScanFailure {
    InvalidX { x: f64 },
    EmptyBracket { x: f64, y_lo: f64, y_hi: f64 },
    LowerEndpoint { x: f64, y: f64, verdict: BasinVerdict },
    UpperEndpoint { x: f64, y: f64, verdict: BasinVerdict },
    /// A midpoint was neither coexistence nor extinction.
    Midpoint { x: f64, y: f64, verdict: BasinVerdict },
}

impl ScanFailure {
    pub fn x(&self) -> f64 {
        match *self {
            Self::InvalidX { x }
            | Self::EmptyBracket { x, .. }
            | Self::LowerEndpoint { x, .. }
            | Self::UpperEndpoint { x, .. }
            | Self::Midpoint { x, .. } => x,
        }
    }
}

/// Bisects in `y` between a coexistence level and an extinction level until
/// the bracket is at most `tol` wide. `classify` is called once per probe;
/// the lower end always stays coexistence and the upper end extinction.
pub fn bisect_boundary<F>(
    x: f64,
    y_lo: f64,
    y_hi: f64,
    tol: f64,
    k_of_x: f64,
    mut classify: F,
) -> Result<SeparatrixPoint, ScanFailure>
where
    F: FnMut(f64) -> BasinVerdict,
{
    if !(y_lo < y_hi) {
        return Err(ScanFailure::EmptyBracket { x, y_lo, y_hi });
    }
    let lower = classify(y_lo);
    if !lower.is_coexistence() {
        return Err(ScanFailure::LowerEndpoint {
            x,
            y: y_lo,
            verdict: lower,
        });
    }
    let upper = classify(y_hi);
    if !upper.is_extinction() {
        return Err(ScanFailure::UpperEndpoint {
            x,
            y: y_hi,
            verdict: upper,
        });
    }
    let (mut lo, mut hi) = (y_lo, y_hi);
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match classify(mid) {
            BasinVerdict::Coexistence => lo = mid,
            BasinVerdict::FiniteTimeExtinction { .. } => hi = mid,
            verdict => return Err(ScanFailure::Midpoint { x, y: mid, verdict }),
        }
        iterations += 1;
    }
    Ok(SeparatrixPoint {
        x,
        y_lo: lo,
        y_hi: hi,
        y_crit: 0.5 * (lo + hi),
        k_of_x,
        iterations,
    })
}

/// Brackets the boundary on each vertical line `x = x_values[k]`.
///
/// Only runs when the interior equilibrium is stable (`alpha/beta >
/// 1/sqrt(3)`). Per-line failures are returned in place without aborting the
/// scan. Output order follows `x_values`.
pub fn separatrix_scan(
    p: &ModelParams,
    x_values: &[f64],
    opts: &ScanOptions,
    cfg: &IntegratorConfig,
) -> Result<Vec<Result<SeparatrixPoint, ScanFailure>>, BasinError> {
    let regime = classify_interior(p).map_err(|_| BasinError::UnstableRegime { ratio: p.ratio() })?;
    if regime.criterion != Stability::Stable {
        return Err(BasinError::UnstableRegime { ratio: p.ratio() });
    }
    if !(opts.bracket_tol > 0.0) {
        return Err(BasinError::InvalidArgument("bracket_tol must be > 0".into()));
    }
    if !(opts.y_lo_init > 0.0) || !opts.y_lo_init.is_finite() {
        return Err(BasinError::InvalidArgument("y_lo_init must be > 0".into()));
    }
    if let Some(y_max) = opts.y_max {
        if !(y_max > 0.0) || !y_max.is_finite() {
            return Err(BasinError::InvalidArgument("y_max must be > 0".into()));
        }
    }
    cfg.validate()?;

    par_map(x_values, opts.workers, |&x| {
        if !(x > 0.0 && x <= 1.0) {
            return Err(ScanFailure::InvalidX { x });
        }
        let k_of_x = k_threshold(p.r(), p.alpha(), x);
        let y_hi = opts.y_max.unwrap_or(1.5 * k_of_x);
        bisect_boundary(x, opts.y_lo_init, y_hi, opts.bracket_tol, k_of_x, |y| {
            classify_ic(p, &State { x, y }, cfg)
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityAudit {
    pub x: f64,
    pub below_y: f64,
    pub below: BasinVerdict,
    pub above_y: f64,
    pub above: BasinVerdict,
}

impl MonotonicityAudit {
    pub fn consistent(&self) -> bool {
        self.below.is_coexistence() && self.above.is_extinction()
    }
}

/// Classifies `y_crit / 2` and `min(2 y_crit, y_cap)` on the same vertical
/// line; a monotone boundary gives coexistence then extinction.
pub fn audit_monotonicity(
    p: &ModelParams,
    point: &SeparatrixPoint,
    y_cap: f64,
    cfg: &IntegratorConfig,
) -> MonotonicityAudit {
    let below_y = 0.5 * point.y_crit;
    let above_y = (2.0 * point.y_crit).min(y_cap).max(point.y_hi);
    MonotonicityAudit {
        x: point.x,
        below_y,
        below: classify_ic(p, &State { x: point.x, y: below_y }, cfg),
        above_y,
        above: classify_ic(p, &State { x: point.x, y: above_y }, cfg),
    }
}

/// Outcome of one inequality checked at every relevant sample. `worst_slack`
/// is the smallest margin seen (negative means violated before tolerance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub passed: bool,
    pub worst_slack: f64,
    pub worst_t: f64,
    pub samples_checked: usize,
}

impl BoundCheck {
    fn new() -> Self {
        Self {
            passed: true,
            worst_slack: f64::INFINITY,
            worst_t: 0.0,
            samples_checked: 0,
        }
    }

    fn record(&mut self, t: f64, slack: f64, ok: bool) {
        self.samples_checked += 1;
        if slack < self.worst_slack {
            self.worst_slack = slack;
            self.worst_t = t;
        }
        self.passed &= ok;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionTimeCheck {
    /// `K(x0) < y0` strictly.
    pub applicable: bool,
    pub passed: bool,
    pub t_ext: Option<f64>,
    pub t_upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    /// `y(t) >= y0 exp(-alpha t)`.
    pub predator_lower: BoundCheck,
    /// `x(t) <= max(x0, 1)`.
    pub prey_upper: BoundCheck,
    /// `sqrt(x(t)) exp(-r t / 2) <= envelope(t)` while `x > 0`.
    pub envelope: BoundCheck,
    /// Extinction no later than the envelope root when `K(x0) < y0`.
    pub extinction_time: ExtinctionTimeCheck,
}

impl BoundsReport {
    pub fn all_passed(&self) -> bool {
        self.predator_lower.passed
            && self.prey_upper.passed
            && self.envelope.passed
            && (!self.extinction_time.applicable || self.extinction_time.passed)
    }
}

/// Checks the extinction-proof inequalities at every sample of `traj`.
pub fn verify_theorem_bounds(
    p: &ModelParams,
    traj: &Trajectory,
) -> Result<BoundsReport, BasinError> {
    if traj.params != *p {
        return Err(BasinError::ParamsMismatch);
    }
    let s0 = traj.initial;
    let x_cap = s0.x.max(1.0);
    let mut predator = BoundCheck::new();
    let mut prey = BoundCheck::new();
    let mut env = BoundCheck::new();
    for s in &traj.samples {
        let floor = s0.y * (-p.alpha() * s.t).exp();
        predator.record(s.t, s.y - floor, s.y >= floor * (1.0 - BOUND_SLACK));

        let slack = x_cap - s.x;
        prey.record(s.t, slack, slack >= -BOUND_SLACK);

        if s.x > 0.0 && s.kind != SampleKind::Axis {
            let lhs = s.u * (-0.5 * p.r() * s.t).exp();
            let slack = envelope(p, &s0, s.t) - lhs;
            env.record(s.t, slack, slack >= -BOUND_SLACK);
        }
    }
    let bound = extinction_bound(p, &s0);
    let t_ext = traj.t_ext();
    let applicable = bound.t_upper.is_some();
    let passed = match (t_ext, bound.t_upper) {
        (Some(t_ext), Some(t_upper)) => t_ext <= t_upper + BOUND_SLACK,
        _ => false,
    };
    Ok(BoundsReport {
        predator_lower: predator,
        prey_upper: prey,
        envelope: env,
        extinction_time: ExtinctionTimeCheck {
            applicable,
            passed: applicable && passed,
            t_ext,
            t_upper: bound.t_upper,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParams {
        ModelParams::new(0.5, 0.4, 0.65).unwrap()
    }

    #[test]
    fn labels() {
        assert_eq!(BasinVerdict::Coexistence.label(), "coexistence");
        assert_eq!(
            BasinVerdict::FiniteTimeExtinction { t_ext: 1.0 }.label(),
            "extinction"
        );
        assert_eq!(
            undetermined(UndeterminedReason::HorizonReached).label(),
            "undetermined:horizon_reached"
        );
    }

    #[test]
    fn bisection_keeps_bracket_invariant() {
        // synthetic monotone boundary at y = 0.3
        let mut probes = Vec::new();
        let pt = bisect_boundary(0.5, 0.0, 1.0, 1e-6, 0.9, |y| {
            let v = if y < 0.3 {
                BasinVerdict::Coexistence
            } else {
                BasinVerdict::FiniteTimeExtinction { t_ext: 1.0 }
            };
            probes.push((y, v));
            v
        })
        .unwrap();
        assert!(pt.y_hi - pt.y_lo <= 1e-6);
        assert!(pt.y_lo < 0.3 && pt.y_hi >= 0.3);
        let max_coex = probes
            .iter()
            .filter(|(_, v)| v.is_coexistence())
            .map(|p| p.0)
            .fold(f64::MIN, f64::max);
        assert_eq!(max_coex, pt.y_lo);
        let min_ext = probes
            .iter()
            .filter(|(_, v)| v.is_extinction())
            .map(|p| p.0)
            .fold(f64::MAX, f64::min);
        assert_eq!(min_ext, pt.y_hi);
    }

    #[test]
    fn bisection_reports_bad_endpoints() {
        let all_coex = |_| BasinVerdict::Coexistence;
        assert!(matches!(
            bisect_boundary(0.4, 0.1, 0.2, 1e-4, 1.0, all_coex),
            Err(ScanFailure::UpperEndpoint { .. })
        ));
        let all_ext = |_| BasinVerdict::FiniteTimeExtinction { t_ext: 2.0 };
        assert!(matches!(
            bisect_boundary(0.4, 0.1, 0.2, 1e-4, 1.0, all_ext),
            Err(ScanFailure::LowerEndpoint { .. })
        ));
        assert!(matches!(
            bisect_boundary(0.4, 0.3, 0.2, 1e-4, 1.0, all_ext),
            Err(ScanFailure::EmptyBracket { .. })
        ));
    }

    #[test]
    fn unstable_regime_is_refused() {
        let p = ModelParams::new(1.0, 0.4, 1.0).unwrap();
        let err = separatrix_scan(&p, &[0.4], &ScanOptions::default(), &IntegratorConfig::default());
        assert!(matches!(err, Err(BasinError::UnstableRegime { .. })));
        // no interior at all
        let p = ModelParams::new(1.0, 2.0, 1.0).unwrap();
        let err = separatrix_scan(&p, &[0.4], &ScanOptions::default(), &IntegratorConfig::default());
        assert!(matches!(err, Err(BasinError::UnstableRegime { .. })));
    }

    #[test]
    fn invalid_x_is_per_line() {
        let out = separatrix_scan(
            &base(),
            &[0.0, 1.5],
            &ScanOptions::default(),
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(out.iter().all(|r| matches!(r, Err(ScanFailure::InvalidX { .. }))));
    }

    #[test]
    fn grid_indexing() {
        let g = BasinGrid {
            region: Region {
                x_min: 0.0,
                x_max: 1.0,
                y_min: 2.0,
                y_max: 4.0,
            },
            nx: 3,
            ny: 5,
            cells: vec![BasinVerdict::Coexistence; 15],
        };
        assert_eq!(g.initial_condition(0, 0), State { x: 0.0, y: 2.0 });
        assert_eq!(g.initial_condition(2, 4), State { x: 1.0, y: 4.0 });
        assert_eq!(g.initial_condition(1, 2), State { x: 0.5, y: 3.0 });
        let order: Vec<State> = g.iter().map(|(s, _)| s).collect();
        assert_eq!(order[1], State { x: 0.0, y: 2.5 });
        assert_eq!(order[5], State { x: 0.5, y: 2.0 });
    }

    #[test]
    fn params_mismatch_rejected() {
        let traj = integrate(&base(), &State { x: 0.4, y: 1.0 }, &IntegratorConfig::default()).unwrap();
        let other = ModelParams::new(0.5, 0.4, 0.7).unwrap();
        assert!(matches!(
            verify_theorem_bounds(&other, &traj),
            Err(BasinError::ParamsMismatch)
        ));
    }

    #[test]
    fn invalid_region() {
        let region = Region {
            x_min: 1.0,
            x_max: 0.5,
            y_min: 0.0,
            y_max: 1.0,
        };
        assert!(grid_sweep(&base(), &region, 2, 2, &IntegratorConfig::default(), Some(1)).is_err());
    }
}
