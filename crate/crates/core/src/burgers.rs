//! Smoothed Burgers rarefactions solved exactly by characteristics.
//!
//! The initial data is `w0(x) = (w- + w+)/2 + (w+ - w-)/2 * K_q * F(eps x)` with
//! `F(z) = int_0^z (1 + y^2)^-q dy` and `K_q = 1/F(inf)`. `F` is tabulated once
//! at fixed breakpoints; each evaluation adds one Gauss-Kronrod panel from the
//! nearest breakpoint, and beyond the table an asymptotic tail is used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gk15, integrate};

const LINEAR_STEP: f64 = 0.125;
const LINEAR_END: f64 = 1.0;
const GROWTH: f64 = 1.1;
const TABLE_END: f64 = 1.0e4;

/// User-facing smoothing knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingConfig {
    pub eps_w: f64,
    #[serde(default = "default_q")]
    pub q_exp: f64,
}

fn default_q() -> f64 {
    2.0
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            eps_w: 0.1,
            q_exp: 2.0,
        }
    }
}

/// Smoothing parameters with the derived normalization and the cumulative table.
#[derive(Debug, Clone)]
pub struct Smoothing {
    pub eps_w: f64,
    pub q_exp: f64,
    pub k_q: f64,
    pub t0: f64,
    breaks: Vec<f64>,
    cumulative: Vec<f64>,
    f_inf: f64,
}

/// `w`, `w_x`, `w_t` at one point, plus the foot `y` of its characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersSample {
    pub w: f64,
    pub w_x: f64,
    pub w_t: f64,
    pub foot: f64,
}

impl Smoothing {
    pub fn new(cfg: SmoothingConfig) -> Result<Self> {
        let SmoothingConfig { eps_w, q_exp } = cfg;
        if !(eps_w > 0.0 && eps_w.is_finite()) {
            return Err(Error::Domain {
                what: "eps_w",
                value: eps_w,
                reason: "must be positive",
            });
        }
        if !(q_exp > 1.5 && q_exp.is_finite()) {
            return Err(Error::Domain {
                what: "q_exp",
                value: q_exp,
                reason: "must exceed 3/2",
            });
        }
        let mut breaks = Vec::new();
        let mut z = 0.0;
        while z < LINEAR_END {
            breaks.push(z);
            z += LINEAR_STEP;
        }
        let mut z = LINEAR_END;
        while z < TABLE_END {
            breaks.push(z);
            z *= GROWTH;
        }
        breaks.push(z);
        let integrand = |y: f64| (1.0 + y * y).powf(-q_exp);
        let mut cumulative = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for pair in breaks.windows(2) {
            acc += integrate(integrand, pair[0], pair[1], 1e-17, 1e-15)?.value;
            cumulative.push(acc);
        }
        let last = *breaks.last().unwrap();
        let f_inf = acc + tail(q_exp, last);
        Ok(Smoothing {
            eps_w,
            q_exp,
            k_q: 1.0 / f_inf,
            t0: 1.0 / (eps_w * eps_w),
            breaks,
            cumulative,
            f_inf,
        })
    }

    pub fn config(&self) -> SmoothingConfig {
        SmoothingConfig {
            eps_w: self.eps_w,
            q_exp: self.q_exp,
        }
    }

    /// `int_0^infinity (1 + y^2)^-q dy`.
    pub fn f_infinity(&self) -> f64 {
        self.f_inf
    }

    /// `F(z) = int_0^z (1 + y^2)^-q dy`, odd in `z`.
    pub fn cumulative(&self, z: f64) -> f64 {
        if z < 0.0 {
            return -self.cumulative(-z);
        }
        let last = *self.breaks.last().unwrap();
        if z >= last {
            return self.f_inf - tail(self.q_exp, z);
        }
        let k = self.locate(z);
        let q = self.q_exp;
        let (part, _) = gk15(&|y: f64| (1.0 + y * y).powf(-q), self.breaks[k], z);
        self.cumulative[k] + part
    }

    // Index of the breakpoint at or just below z (0 <= z < last breakpoint).
    fn locate(&self, z: f64) -> usize {
        let n_linear = (LINEAR_END / LINEAR_STEP).round() as usize;
        let guess = if z < LINEAR_END {
            (z / LINEAR_STEP) as usize
        } else {
            n_linear + ((z / LINEAR_END).ln() / GROWTH.ln()) as usize
        };
        let mut k = guess.min(self.breaks.len() - 2);
        while k > 0 && self.breaks[k] > z {
            k -= 1;
        }
        while self.breaks[k + 1] <= z {
            k += 1;
        }
        k
    }

    /// Initial data of one smoothed family at `x`.
    pub fn initial(&self, w_minus: f64, w_plus: f64, x: f64) -> f64 {
        0.5 * (w_minus + w_plus) + 0.5 * (w_plus - w_minus) * self.k_q * self.cumulative(self.eps_w * x)
    }

    /// Derivative of [`Smoothing::initial`].
    pub fn initial_slope(&self, w_minus: f64, w_plus: f64, x: f64) -> f64 {
        let z = self.eps_w * x;
        0.5 * (w_plus - w_minus) * self.k_q * self.eps_w * (1.0 + z * z).powf(-self.q_exp)
    }

    /// Solution of `w_t + w w_x = 0` at `(t, x)` from the smoothed data.
    pub fn eval(&self, w_minus: f64, w_plus: f64, t: f64, x: f64) -> Result<BurgersSample> {
        if !(t >= 0.0) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                reason: "Burgers time must be nonnegative",
            });
        }
        if w_minus == w_plus {
            return Ok(BurgersSample {
                w: w_minus,
                w_x: 0.0,
                w_t: 0.0,
                foot: x - t * w_minus,
            });
        }
        let y = if t == 0.0 {
            x
        } else {
            self.foot(w_minus, w_plus, t, x)?
        };
        let w = self.initial(w_minus, w_plus, y);
        let slope = self.initial_slope(w_minus, w_plus, y);
        let w_x = slope / (1.0 + t * slope);
        Ok(BurgersSample {
            w,
            w_x,
            w_t: -w * w_x,
            foot: y,
        })
    }

    // Root of y + t w0(y) = x. The map is increasing with slope >= 1, and the
    // root lies in [x - t w+, x - t w-].
    fn foot(&self, w_minus: f64, w_plus: f64, t: f64, x: f64) -> Result<f64> {
        const MAX_ITER: usize = 200;
        let tol = 1e-13 * (1.0 + x.abs());
        let residual = |y: f64| y + t * self.initial(w_minus, w_plus, y) - x;
        let (mut lo, mut hi) = (x - t * w_plus, x - t * w_minus);
        // the characteristic through the data midpoint is a good first guess
        let mut y = (x - t * 0.5 * (w_minus + w_plus)).clamp(lo, hi);
        let mut r = residual(y);
        let mut width = hi - lo;
        for _ in 0..MAX_ITER {
            if r.abs() <= tol {
                return Ok(y);
            }
            if r < 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            // Newton can bounce between the flat tails without shrinking the
            // bracket; bisect whenever a step fails to halve it
            let newton = y - r / (1.0 + t * self.initial_slope(w_minus, w_plus, y));
            let slow = hi - lo > 0.5 * width;
            width = hi - lo;
            y = if newton > lo && newton < hi && !slow {
                newton
            } else {
                0.5 * (lo + hi)
            };
            r = residual(y);
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
                return Ok(y);
            }
        }
        if r.abs() <= tol {
            return Ok(y);
        }
        Err(Error::NonConvergence {
            solver: "Burgers characteristic foot",
            iterations: MAX_ITER,
            residual: r.abs(),
        })
    }
}

// int_z^infinity (1 + y^2)^-q dy for large z, two terms of the expansion in 1/y^2.
fn tail(q: f64, z: f64) -> f64 {
    z.powf(1.0 - 2.0 * q) / (2.0 * q - 1.0) - q * z.powf(-1.0 - 2.0 * q) / (2.0 * q + 1.0)
}
