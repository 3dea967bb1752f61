//! Forward integration in regularized coordinates `u = sqrt(x)`.
//!
//! In `(u, y)` the field is polynomial:
//!
//! ```text
//! du/dt = (r/2) u (1 - u^2) - y/2
//! dy/dt = -alpha y + beta y u
//! ```
//!
//! so the adaptive stepper never sees the unbounded `y / (2 sqrt(x))`
//! derivative of the raw field, and prey extinction becomes the transversal
//! zero crossing of `u` (slope `-y/2`). Trial steps may overshoot into
//! `u < 0`; exported samples never do.

mod dopri;
mod reference;

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::error::{IntegrateError, ModelError};
use crate::model::{equilibria, Equilibrium, EquilibriumKind, ModelParams, State};

pub use reference::integrate_raw_reference;

/// Raw right-hand side `(dx/dt, dy/dt)`. Defined for `x >= 0`.
pub fn rhs_raw(p: &ModelParams, s: &State) -> Result<(f64, f64), ModelError> {
    if !(s.x >= 0.0) {
        return Err(ModelError::InvalidState {
            field: "x",
            value: s.x,
        });
    }
    let sx = s.x.sqrt();
    Ok((
        p.r() * s.x * (1.0 - s.x) - s.y * sx,
        -p.alpha() * s.y + p.beta() * s.y * sx,
    ))
}

/// Regularized right-hand side `(du/dt, dy/dt)`, polynomial in `u`.
pub fn rhs_regularized(p: &ModelParams, s: &RegularizedState) -> (f64, f64) {
    let f = field(p, *s);
    (f.u, f.y)
}

#[inline]
pub(crate) fn field(p: &ModelParams, s: RegularizedState) -> RegularizedState {
    RegularizedState {
        u: 0.5 * p.r() * s.u * (1.0 - s.u * s.u) - 0.5 * s.y,
        y: -p.alpha() * s.y + p.beta() * s.y * s.u,
    }
}

/// `(u, y)` with `u = sqrt(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizedState {
    pub u: f64,
    pub y: f64,
}

impl RegularizedState {
    pub fn to_state(self) -> State {
        State {
            x: self.u * self.u,
            y: self.y,
        }
    }

    fn is_finite(self) -> bool {
        self.u.is_finite() && self.y.is_finite()
    }
}

impl From<State> for RegularizedState {
    fn from(s: State) -> Self {
        Self {
            u: s.x.sqrt(),
            y: s.y,
        }
    }
}

impl Add for RegularizedState {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            u: self.u + o.u,
            y: self.y + o.y,
        }
    }
}

impl Sub for RegularizedState {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            u: self.u - o.u,
            y: self.y - o.y,
        }
    }
}

impl Mul<f64> for RegularizedState {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self {
            u: self.u * k,
            y: self.y * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Horizon.
    pub t_max: f64,
    /// Maximum width of the bracket around the extinction time.
    pub event_tol: f64,
    /// Radius of the ball around an equilibrium used to declare convergence.
    pub conv_tol: f64,
    /// Time the state must stay inside the ball before convergence is declared.
    pub conv_window: f64,
    /// Follow the exact predator-axis solution to `t_max` after extinction.
    pub continue_after_extinction: bool,
    /// Number of uniform output times on `[0, t_max]` (at least 2). When set,
    /// these are recorded in addition to accepted step endpoints.
    pub output_samples: Option<usize>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 0.5,
            t_max: 2000.0,
            event_tol: 1e-10,
            conv_tol: 1e-8,
            conv_window: 10.0,
            continue_after_extinction: false,
            output_samples: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |field, reason| Err(IntegrateError::InvalidArgument { field, reason });
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.rtol) {
            return bad("rtol", "must be > 0");
        }
        if !pos(self.atol) {
            return bad("atol", "must be > 0");
        }
        if !pos(self.h_min) {
            return bad("h_min", "must be > 0");
        }
        if !pos(self.h_max) || self.h_max < self.h_min {
            return bad("h_max", "must be >= h_min");
        }
        if !pos(self.h_init) {
            return bad("h_init", "must be > 0");
        }
        if !pos(self.t_max) {
            return bad("t_max", "must be > 0");
        }
        if !pos(self.event_tol) {
            return bad("event_tol", "must be > 0");
        }
        if !pos(self.conv_tol) {
            return bad("conv_tol", "must be > 0");
        }
        if !(self.conv_window >= 0.0) {
            return bad("conv_window", "must be >= 0");
        }
        if matches!(self.output_samples, Some(n) if n < 2) {
            return bad("output_samples", "must be >= 2");
        }
        Ok(())
    }

    fn output_time(&self, k: usize) -> Option<f64> {
        let n = self.output_samples?;
        (k < n).then(|| self.t_max * k as f64 / (n - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Initial,
    /// Accepted step endpoint.
    Step,
    /// Requested uniform output time, interpolated within a step.
    Output,
    /// The located extinction point (`x = 0`).
    Event,
    /// Exact solution on the predator axis after extinction.
    Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub kind: SampleKind,
}

impl Sample {
    fn new(t: f64, z: RegularizedState, kind: SampleKind) -> Self {
        Self {
            t,
            x: z.u * z.u,
            y: z.y,
            u: z.u,
            kind,
        }
    }

    pub fn state(&self) -> State {
        State {
            x: self.x,
            y: self.y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "terminal", rename_all = "snake_case")]
pub enum Terminal {
    /// Prey reached zero. `bracket` encloses the root of `u(t)`.
    ExtinctionAt { t_ext: f64, bracket: (f64, f64) },
    /// The state stayed within `conv_tol` of `equilibrium` from `t_conv` on.
    ConvergedTo { equilibrium: Equilibrium, t_conv: f64 },
    HorizonReached,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub initial: State,
    /// Strictly increasing in `t`; `samples[0]` is the initial condition.
    pub samples: Vec<Sample>,
    pub terminal: Terminal,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn t_ext(&self) -> Option<f64> {
        match self.terminal {
            Terminal::ExtinctionAt { t_ext, .. } => Some(t_ext),
            _ => None,
        }
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }
}

/// Integrates from `s0` with an adaptive Dormand-Prince 5(4) pair.
///
/// Stops at the first of: prey extinction (root of `u` located by bisection
/// over sub-steps to `event_tol`), convergence to the interior or prey-only
/// equilibrium (held within `conv_tol` for `conv_window`), or `t_max`.
///
/// An initial condition already on the predator axis (`x0 = 0`) has no
/// event to locate: the exact solution `y0 exp(-alpha t)` is returned up to
/// `t_max` with terminal `ExtinctionAt { t_ext: 0 }`.
pub fn integrate(
    p: &ModelParams,
    s0: &State,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    s0.validate()?;
    cfg.validate()?;
    Integrator::new(p, s0, cfg).run()
}

struct Integrator<'a> {
    p: &'a ModelParams,
    cfg: &'a IntegratorConfig,
    initial: State,
    samples: Vec<Sample>,
    stats: StepStats,
    next_output: usize,
}

impl<'a> Integrator<'a> {
    fn new(p: &'a ModelParams, s0: &State, cfg: &'a IntegratorConfig) -> Self {
        let first = Sample {
            t: 0.0,
            x: s0.x,
            y: s0.y,
            u: s0.x.sqrt(),
            kind: SampleKind::Initial,
        };
        Self {
            p,
            cfg,
            initial: *s0,
            samples: vec![first],
            stats: StepStats::default(),
            next_output: 1,
        }
    }

    fn finish(self, terminal: Terminal) -> Trajectory {
        Trajectory {
            params: *self.p,
            initial: self.initial,
            samples: self.samples,
            terminal,
            stats: self.stats,
        }
    }

    fn run(mut self) -> Result<Trajectory, IntegrateError> {
        if self.initial.x == 0.0 {
            self.follow_axis(0.0, self.initial.y);
            return Ok(self.finish(Terminal::ExtinctionAt {
                t_ext: 0.0,
                bracket: (0.0, 0.0),
            }));
        }

        let cfg = self.cfg;
        let targets: Vec<Equilibrium> = equilibria(self.p)
            .into_iter()
            .filter(|e| e.kind != EquilibriumKind::Extinction)
            .collect();
        let mut inside: Option<(usize, f64)> = None;

        let mut t = 0.0;
        let mut z = RegularizedState::from(self.initial);
        let mut k1 = self.eval(z);
        let mut h = cfg.h_init.min(cfg.h_max);

        while t < cfg.t_max {
            let remaining = cfg.t_max - t;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };

            let step = dopri::step(self.p, z, k1, h_try);
            self.stats.rhs_evals += 6;
            if !step.z_new.is_finite() {
                return Err(IntegrateError::NonFinite { t });
            }
            let err = dopri::error_norm(&step, z, cfg.rtol, cfg.atol);
            if !(err <= 1.0) {
                self.stats.rejected += 1;
                let factor = (0.9 * err.powf(-1.0 / dopri::ORDER)).clamp(0.2, 1.0);
                h = h_try * factor;
                if h < cfg.h_min {
                    return Err(IntegrateError::StepUnderflow { t, h });
                }
                continue;
            }
            self.stats.accepted += 1;
            let t_new = if last { cfg.t_max } else { t + h_try };
            let dense = dopri::Dense::new(z, &step, h_try);

            if step.z_new.u <= 0.0 {
                let terminal = self.locate_extinction(t, z, k1, h_try, &dense);
                return Ok(self.finish(terminal));
            }

            self.push_outputs(t, t_new, h_try, &dense, step.z_new);

            let here = step.z_new.to_state();
            match targets.iter().position(|e| here.distance(&e.point) <= cfg.conv_tol) {
                Some(idx) => {
                    let since = match inside {
                        Some((prev, since)) if prev == idx => since,
                        _ => t_new,
                    };
                    inside = Some((idx, since));
                    if t_new - since >= cfg.conv_window {
                        return Ok(self.finish(Terminal::ConvergedTo {
                            equilibrium: targets[idx],
                            t_conv: since,
                        }));
                    }
                }
                None => inside = None,
            }

            t = t_new;
            z = step.z_new;
            k1 = step.k[6];
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-1.0 / dopri::ORDER)).clamp(0.2, 5.0)
            };
            h = (h_try * factor).min(cfg.h_max).max(cfg.h_min);
        }
        Ok(self.finish(Terminal::HorizonReached))
    }

    fn eval(&mut self, z: RegularizedState) -> RegularizedState {
        self.stats.rhs_evals += 1;
        field(self.p, z)
    }

    /// Records output times in `(t, t_new]` and then the step endpoint,
    /// unless an output time coincides with it.
    fn push_outputs(
        &mut self,
        t: f64,
        t_new: f64,
        h: f64,
        dense: &dopri::Dense,
        z_new: RegularizedState,
    ) {
        while let Some(tau) = self.cfg.output_time(self.next_output) {
            if tau > t_new {
                break;
            }
            self.next_output += 1;
            if tau <= t {
                continue;
            }
            let z = if tau == t_new {
                z_new
            } else {
                dense.eval((tau - t) / h)
            };
            self.samples.push(Sample::new(tau, z, SampleKind::Output));
        }
        if self.samples.last().map_or(true, |s| s.t < t_new) {
            self.samples.push(Sample::new(t_new, z_new, SampleKind::Step));
        }
    }

    fn locate_extinction(
        &mut self,
        t: f64,
        z: RegularizedState,
        k1: RegularizedState,
        h: f64,
        dense: &dopri::Dense,
    ) -> Terminal {
        let (mut lo, mut hi) = (0.0, h);
        while hi - lo > self.cfg.event_tol {
            let mid = 0.5 * (lo + hi);
            let trial = dopri::step(self.p, z, k1, mid);
            self.stats.rhs_evals += 6;
            if trial.z_new.u > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        let at_event = dopri::step(self.p, z, k1, mid).z_new;
        self.stats.rhs_evals += 6;
        let t_ext = t + mid;

        while let Some(tau) = self.cfg.output_time(self.next_output) {
            if tau >= t + lo {
                break;
            }
            self.next_output += 1;
            if tau <= t {
                continue;
            }
            let zi = dense.eval((tau - t) / h);
            if zi.u > 0.0 {
                self.samples.push(Sample::new(tau, zi, SampleKind::Output));
            }
        }
        let y_ext = at_event.y.max(0.0);
        self.samples.push(Sample::new(
            t_ext,
            RegularizedState { u: 0.0, y: y_ext },
            SampleKind::Event,
        ));
        if self.cfg.continue_after_extinction {
            self.follow_axis(t_ext, y_ext);
        }
        Terminal::ExtinctionAt {
            t_ext,
            bracket: (t + lo, t + hi),
        }
    }

    /// Exact predator-axis solution `y(t) = y_start exp(-alpha (t - t_start))`
    /// from `t_start` to `t_max`, sampled on the output grid when one is
    /// requested and every `h_max` otherwise.
    fn follow_axis(&mut self, t_start: f64, y_start: f64) {
        let alpha = self.p.alpha();
        let t_max = self.cfg.t_max;
        let push = |samples: &mut Vec<Sample>, t: f64| {
            if t > t_start && samples.last().map_or(true, |s| s.t < t) {
                let y = y_start * (-alpha * (t - t_start)).exp();
                samples.push(Sample::new(t, RegularizedState { u: 0.0, y }, SampleKind::Axis));
            }
        };
        if self.cfg.output_samples.is_some() {
            while let Some(tau) = self.cfg.output_time(self.next_output) {
                self.next_output += 1;
                push(&mut self.samples, tau);
            }
        } else {
            let dt = self.cfg.h_max;
            let mut k = 1usize;
            loop {
                let tau = t_start + k as f64 * dt;
                if tau >= t_max {
                    break;
                }
                push(&mut self.samples, tau);
                k += 1;
            }
        }
        push(&mut self.samples, t_max);
    }
}
