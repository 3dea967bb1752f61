//! Dormand-Prince 5(4) step with the embedded error estimate and the
//! standard fourth-order continuous extension.

// The field is autonomous, so the nodes c_i never appear.
use super::RegularizedState as Z;
use crate::model::ModelParams;


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub(crate) const ORDER: f64 = 5.0;

/// One trial step. `k[6]` is the derivative at the new point (FSAL).
pub(crate) struct Step {
    pub z_new: Z,
    pub k: [Z; 7],
    pub err: Z,
}

pub(crate) fn step(p: &ModelParams, z: Z, k1: Z, h: f64) -> Step {
    let f = |s: Z| super::field(p, s);
    let k2 = f(z + (k1 * A21) * h);
    let k3 = f(z + (k1 * A31 + k2 * A32) * h);
    let k4 = f(z + (k1 * A41 + k2 * A42 + k3 * A43) * h);
    let k5 = f(z + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h);
    let k6 = f(z + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h);
    let z_new = z + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
    let k7 = f(z_new);
    let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
    Step {
        z_new,
        k: [k1, k2, k3, k4, k5, k6, k7],
        err,
    }
}

/// Scaled RMS error norm; a step is acceptable when this is `<= 1`.
pub(crate) fn error_norm(step: &Step, z: Z, rtol: f64, atol: f64) -> f64 {
    let su = atol + rtol * z.u.abs().max(step.z_new.u.abs());
    let sy = atol + rtol * z.y.abs().max(step.z_new.y.abs());
    let eu = step.err.u / su;
    let ey = step.err.y / sy;
    (0.5 * (eu * eu + ey * ey)).sqrt()
}

/// Continuous extension over an accepted step of size `h` from `z`.
pub(crate) struct Dense {
    r: [Z; 5],
}

impl Dense {
    pub fn new(z: Z, step: &Step, h: f64) -> Self {
        let k = &step.k;
        let ydiff = step.z_new - z;
        let bspl = k[0] * h - ydiff;
        Self {
            r: [
                z,
                ydiff,
                bspl,
                ydiff - k[6] * h - bspl,
                (k[0] * D1 + k[2] * D3 + k[3] * D4 + k[4] * D5 + k[5] * D6 + k[6] * D7) * h,
            ],
        }
    }

    /// State at fraction `theta` in `[0, 1]` of the step.
    pub fn eval(&self, theta: f64) -> Z {
        let t1 = 1.0 - theta;
        let r = &self.r;
        r[0] + (r[1] + (r[2] + (r[3] + r[4] * t1) * theta) * t1) * theta
    }
}
