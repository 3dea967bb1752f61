//! Closed-form facts about the model: parameters, equilibria, linear
//! stability and the analytic extinction bounds.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::ModelError;

/// `1/sqrt(3)`: the critical `alpha/beta` ratio for the interior equilibrium.
pub const STABILITY_RATIO: f64 = 0.577_350_269_189_625_8;

/// Half-width of the band around [`STABILITY_RATIO`] reported as non-hyperbolic.
pub const NON_HYPERBOLIC_BAND: f64 = 1e-12;

/// The three positive rates of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    r: f64,
    alpha: f64,
    beta: f64,
}

impl ModelParams {
    /// Validates and builds a parameter set. Every rate must be finite and
    /// strictly positive.
    pub fn new(r: f64, alpha: f64, beta: f64) -> Result<Self, ModelError> {
        Ok(Self {
            r: positive("r", r)?,
            alpha: positive("alpha", alpha)?,
            beta: positive("beta", beta)?,
        })
    }

    /// Prey birth rate.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Predator intrinsic death rate.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Biomass conversion efficiency.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha / beta`, the ratio that decides interior stability.
    pub fn ratio(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn has_interior(&self) -> bool {
        self.beta > self.alpha
    }
}

pub(crate) fn positive(field: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidParameter { field, value })
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ModelError::InvalidState { field, value })
    }
}

/// Same as [`ModelParams::new`].
pub fn validate_params(r: f64, alpha: f64, beta: f64) -> Result<ModelParams, ModelError> {
    ModelParams::new(r, alpha, beta)
}

/// Population point: prey `x`, predator `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub fn new(x: f64, y: f64) -> Result<Self, ModelError> {
        Ok(Self {
            x: non_negative("x", x)?,
            y: non_negative("y", y)?,
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        non_negative("x", self.x)?;
        non_negative("y", self.y)?;
        Ok(())
    }

    pub fn distance(&self, other: &State) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Extinction,
    PreyOnly,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Saddle,
    NonHyperbolic,
    /// The field is not differentiable at the point, so linearization says nothing.
    NotAnalyzable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub point: State,
    pub kind: EquilibriumKind,
    pub stability: Stability,
}

/// Interior equilibrium `((alpha/beta)^2, r alpha (beta^2 - alpha^2) / beta^3)`,
/// or `None` unless `beta > alpha`.
pub fn interior_equilibrium(p: &ModelParams) -> Option<State> {
    if !p.has_interior() {
        return None;
    }
    let (r, a, b) = (p.r, p.alpha, p.beta);
    let ratio = a / b;
    Some(State {
        x: ratio * ratio,
        y: r * a * (b * b - a * a) / (b * b * b),
    })
}

/// All non-negative equilibria. Extinction and prey-only are always present;
/// the interior point only when `beta > alpha` (at `beta == alpha` it would
/// coincide with the prey-only point).
pub fn equilibria(p: &ModelParams) -> Vec<Equilibrium> {
    let prey_only_stability = if p.beta > p.alpha {
        Stability::Saddle
    } else if p.beta < p.alpha {
        Stability::Stable
    } else {
        Stability::NonHyperbolic
    };
    let mut out = vec![
        Equilibrium {
            point: State { x: 0.0, y: 0.0 },
            kind: EquilibriumKind::Extinction,
            stability: Stability::NotAnalyzable,
        },
        Equilibrium {
            point: State { x: 1.0, y: 0.0 },
            kind: EquilibriumKind::PreyOnly,
            stability: prey_only_stability,
        },
    ];
    if let Some(point) = interior_equilibrium(p) {
        out.push(Equilibrium {
            point,
            kind: EquilibriumKind::Interior,
            stability: criterion_verdict(p.ratio()),
        });
    }
    out
}

/// Jacobian of the raw field at `s`, row-major `[[dfx/dx, dfx/dy], [dfy/dx, dfy/dy]]`.
/// Undefined on the predator axis.
pub fn jacobian(p: &ModelParams, s: &State) -> Result<[[f64; 2]; 2], ModelError> {
    if !(s.x > 0.0) || !s.x.is_finite() {
        return Err(ModelError::NonDifferentiable { x: s.x });
    }
    let sx = s.x.sqrt();
    Ok([
        [p.r * (1.0 - 2.0 * s.x) - s.y / (2.0 * sx), -sx],
        [p.beta * s.y / (2.0 * sx), -p.alpha + p.beta * sx],
    ])
}

/// Eigenvalues of a real 2x2 matrix from its characteristic quadratic.
pub fn eigenvalues_2x2(m: &[[f64; 2]; 2]) -> [Complex64; 2] {
    if m[0][1] == 0.0 || m[1][0] == 0.0 {
        // triangular: the diagonal is exact
        return [Complex64::new(m[0][0], 0.0), Complex64::new(m[1][1], 0.0)];
    }
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        // Avoid cancellation in the smaller-magnitude root.
        let big = if half >= 0.0 { half + root } else { half - root };
        let small = if big != 0.0 { det / big } else { 0.0 };
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [Complex64::new(half, im), Complex64::new(half, -im)]
    }
}

/// Linear-stability verdict read off a pair of eigenvalues.
pub fn eigen_verdict(eig: &[Complex64; 2]) -> Stability {
    let (a, b) = (eig[0], eig[1]);
    if a.im == 0.0 && a.re * b.re < 0.0 {
        return Stability::Saddle;
    }
    let max_re = a.re.max(b.re);
    if max_re < 0.0 {
        Stability::Stable
    } else if max_re > 0.0 {
        Stability::Unstable
    } else {
        Stability::NonHyperbolic
    }
}

fn criterion_verdict(ratio: f64) -> Stability {
    if (ratio - STABILITY_RATIO).abs() <= NON_HYPERBOLIC_BAND {
        Stability::NonHyperbolic
    } else if ratio > STABILITY_RATIO {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Interior stability by the `alpha/beta` vs `1/sqrt(3)` criterion and,
/// independently, by the Jacobian eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorClassification {
    pub point: State,
    pub ratio: f64,
    pub threshold: f64,
    pub criterion: Stability,
    pub eigen: Stability,
    pub eigenvalues: [Complex64; 2],
}

impl InteriorClassification {
    pub fn agree(&self) -> bool {
        self.criterion == self.eigen
    }
}

pub fn classify_interior(p: &ModelParams) -> Result<InteriorClassification, ModelError> {
    let point = interior_equilibrium(p).ok_or(ModelError::NoInterior {
        alpha: p.alpha,
        beta: p.beta,
    })?;
    let eigenvalues = eigenvalues_2x2(&jacobian(p, &point)?);
    Ok(InteriorClassification {
        point,
        ratio: p.ratio(),
        threshold: STABILITY_RATIO,
        criterion: criterion_verdict(p.ratio()),
        eigen: eigen_verdict(&eigenvalues),
        eigenvalues,
    })
}

/// `K(x) = (r + 2 alpha) sqrt(x)`: a predator density at or above this
/// forces prey extinction in finite time.
pub fn k_threshold(r: f64, alpha: f64, x: f64) -> f64 {
    (r + 2.0 * alpha) * x.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionBoundReport {
    pub k_value: f64,
    /// `k_value <= y0`.
    pub sufficient: bool,
    /// Root of the envelope; only defined when `k_value < y0` strictly.
    pub t_upper: Option<f64>,
}

pub fn extinction_bound(p: &ModelParams, s0: &State) -> ExtinctionBoundReport {
    bound_report(p.r, p.alpha, s0)
}

/// Like [`extinction_bound`] but needs only `r` and `alpha`; `beta` plays no
/// part in the bound.
pub fn extinction_bound_from_rates(
    r: f64,
    alpha: f64,
    s0: &State,
) -> Result<ExtinctionBoundReport, ModelError> {
    positive("r", r)?;
    positive("alpha", alpha)?;
    s0.validate()?;
    Ok(bound_report(r, alpha, s0))
}

fn bound_report(r: f64, alpha: f64, s0: &State) -> ExtinctionBoundReport {
    let k_value = k_threshold(r, alpha, s0.x);
    let t_upper = (k_value < s0.y).then(|| -(-k_value / s0.y).ln_1p() / (0.5 * r + alpha));
    ExtinctionBoundReport {
        k_value,
        sufficient: k_value <= s0.y,
        t_upper,
    }
}

/// Upper envelope for `sqrt(x(t)) exp(-r t / 2)`:
/// `sqrt(x0) - (y0 / 2) / (r / 2 + alpha) * (1 - exp(-(r / 2 + alpha) t))`.
pub fn envelope(p: &ModelParams, s0: &State, t: f64) -> f64 {
    let c = 0.5 * p.r + p.alpha;
    s0.x.sqrt() - (0.5 * s0.y / c) * -(-c * t).exp_m1()
}
