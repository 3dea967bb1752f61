//! Fixed-step classical RK4 on the regularized system. Used only as an
//! independent oracle for the adaptive integrator.

use super::{field, RegularizedState as Z, Sample, SampleKind, StepStats, Terminal, Trajectory};
use crate::error::IntegrateError;
use crate::model::{ModelParams, State};

const EVENT_TOL: f64 = 1e-12;

fn rk4(p: &ModelParams, z: Z, h: f64) -> Z {
    let k1 = field(p, z);
    let k2 = field(p, z + k1 * (0.5 * h));
    let k3 = field(p, z + k2 * (0.5 * h));
    let k4 = field(p, z + k3 * h);
    z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Classical RK4 with step `dt` up to `t_end`, recording every
/// `record_every`-th step (plus the final point). Extinction is found by a
/// per-step sign check on `u` followed by bisection over sub-steps to 1e-12.
/// No convergence detection: the run ends at extinction or `t_end`.
pub fn integrate_raw_reference(
    p: &ModelParams,
    s0: &State,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory, IntegrateError> {
    s0.validate()?;
    if !(s0.x > 0.0) {
        return Err(IntegrateError::InvalidArgument {
            field: "x0",
            reason: "must be > 0",
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(IntegrateError::InvalidArgument {
            field: "dt",
            reason: "must be > 0",
        });
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(IntegrateError::InvalidArgument {
            field: "t_end",
            reason: "must be > 0",
        });
    }
    let record_every = record_every.max(1);

    let mut samples = vec![Sample {
        t: 0.0,
        x: s0.x,
        y: s0.y,
        u: s0.x.sqrt(),
        kind: SampleKind::Initial,
    }];
    let mut stats = StepStats::default();
    let mut z = Z::from(*s0);
    let mut n = 0usize;
    let mut t = 0.0;
    let terminal = loop {
        if t >= t_end {
            break Terminal::HorizonReached;
        }
        let t_next = ((n + 1) as f64 * dt).min(t_end);
        let h = t_next - t;
        let z_new = rk4(p, z, h);
        stats.accepted += 1;
        stats.rhs_evals += 4;
        if !(z_new.u.is_finite() && z_new.y.is_finite()) {
            return Err(IntegrateError::NonFinite { t });
        }
        if z_new.u <= 0.0 {
            let (mut lo, mut hi) = (0.0, h);
            while hi - lo > EVENT_TOL {
                let mid = 0.5 * (lo + hi);
                stats.rhs_evals += 4;
                if rk4(p, z, mid).u > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mid = 0.5 * (lo + hi);
            let y = rk4(p, z, mid).y.max(0.0);
            samples.push(Sample {
                t: t + mid,
                x: 0.0,
                y,
                u: 0.0,
                kind: SampleKind::Event,
            });
            break Terminal::ExtinctionAt {
                t_ext: t + mid,
                bracket: (t + lo, t + hi),
            };
        }
        n += 1;
        t = t_next;
        z = z_new;
        if n % record_every == 0 || t >= t_end {
            samples.push(Sample {
                t,
                x: z.u * z.u,
                y: z.y,
                u: z.u,
                kind: SampleKind::Step,
            });
        }
    };
    Ok(Trajectory {
        params: *p,
        initial: *s0,
        samples,
        terminal,
        stats,
    })
}
