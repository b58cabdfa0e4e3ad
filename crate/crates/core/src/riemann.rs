//! Exact two-rarefaction solution of the Lagrangian Euler Riemann problem.
//!
//! Along the 1-rarefaction the volume grows from `v-` to `v_m` while
//! `u = u- + I(v-, v)`; along the 3-rarefaction it shrinks from `v_m` to `v+`
//! while `u = u_m - I(v_m, v)`, where `I(a, b)` integrates the sound speed
//! `sqrt(-p_v)` on the common isentrope from `a` to `b`. The intermediate volume
//! therefore solves `u+ - u- = I(v-, v_m) + I(v+, v_m)`, whose left side is
//! strictly increasing in `v_m`.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::gas::{Family, GasModel};

/// Entropy mismatch tolerated between the two far-field states.
pub const ENTROPY_MATCH_TOL: f64 = 1e-10;

const GAMMA_LIMIT: f64 = 1e-8;

/// Far-field states of the Riemann problem. The phase field is 1 on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndStates {
    pub v_minus: f64,
    pub u_minus: f64,
    pub theta_minus: f64,
    pub v_plus: f64,
    pub u_plus: f64,
    pub theta_plus: f64,
}

impl EndStates {
    pub const CHI_FAR: f64 = 1.0;

    /// End states sharing the isentrope through `(v-, theta-)`; `theta+` is
    /// derived so the entropy match holds to roundoff.
    pub fn isentropic(
        gas: &GasModel,
        v_minus: f64,
        u_minus: f64,
        theta_minus: f64,
        v_plus: f64,
        u_plus: f64,
    ) -> Result<Self> {
        let s = gas.entropy_from_vtheta(v_minus, theta_minus)?;
        Ok(EndStates {
            v_minus,
            u_minus,
            theta_minus,
            v_plus,
            u_plus,
            theta_plus: gas.theta_from_vs(v_plus, s)?,
        })
    }

    /// Checks positivity and the shared-entropy assumption; returns `s_bar`.
    pub fn validate(&self, gas: &GasModel) -> Result<f64> {
        require_positive("v-", self.v_minus)?;
        require_positive("v+", self.v_plus)?;
        require_positive("theta-", self.theta_minus)?;
        require_positive("theta+", self.theta_plus)?;
        let s_minus = gas.entropy_from_vtheta(self.v_minus, self.theta_minus)?;
        let s_plus = gas.entropy_from_vtheta(self.v_plus, self.theta_plus)?;
        if (s_plus - s_minus).abs() > ENTROPY_MATCH_TOL {
            return Err(Error::Config(format!(
                "end states are not on a common isentrope: s- = {s_minus}, s+ = {s_plus}"
            )));
        }
        Ok(s_minus)
    }

    /// Wave strength `|v+ - v-| + |u+ - u-|`.
    pub fn strength(&self) -> f64 {
        (self.v_plus - self.v_minus).abs() + (self.u_plus - self.u_minus).abs()
    }
}

/// `int_{v_a}^{v_b} sqrt(-p_tilde_v(z, s)) dz` in closed form.
pub fn rarefaction_integral(gas: &GasModel, v_a: f64, v_b: f64, s: f64) -> Result<f64> {
    require_positive("v_a", v_a)?;
    require_positive("v_b", v_b)?;
    Ok(rarefaction_integral_unchecked(gas, v_a, v_b, s))
}

#[inline]
pub(crate) fn rarefaction_integral_unchecked(gas: &GasModel, v_a: f64, v_b: f64, s: f64) -> f64 {
    let amplitude = (gas.a * gas.gamma * ((gas.gamma - 1.0) * s / gas.r).exp()).sqrt();
    let log_ratio = (v_b / v_a).ln();
    let gm1 = gas.gamma - 1.0;
    if gm1 < GAMMA_LIMIT {
        return amplitude * log_ratio;
    }
    let k = 0.5 * gm1;
    // v_a^-k - v_b^-k written through expm1 so that small (gamma - 1) keeps its digits
    -amplitude * (-k * v_a.ln()).exp() * (-k * log_ratio).exp_m1() / k
}

/// Intermediate state and fan structure of the composite wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannData {
    pub gas: GasModel,
    pub ends: EndStates,
    pub s_bar: f64,
    pub v_m: f64,
    pub u_m: f64,
    pub theta_m: f64,
    /// `(lambda_1(v-), lambda_1(v_m))`.
    pub fan1: (f64, f64),
    /// `(lambda_3(v_m), lambda_3(v+))`.
    pub fan3: (f64, f64),
    pub delta: f64,
    /// `|I(v-, v_m) + I(v+, v_m) - (u+ - u-)|` at the accepted root.
    pub residual: f64,
}

/// Value of the exact Riemann solution at one similarity coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannSample {
    pub v: f64,
    pub u: f64,
    pub theta: f64,
    pub s: f64,
}

/// Finds `(v_m, u_m)` joining `ends` by a 1-rarefaction followed by a 3-rarefaction.
pub fn solve_intermediate(gas: &GasModel, ends: &EndStates) -> Result<RiemannData> {
    gas.validate()?;
    let s_bar = ends.validate(gas)?;
    let du = ends.u_plus - ends.u_minus;
    let (v_l, v_r) = (ends.v_minus, ends.v_plus);
    let f = |v: f64| {
        rarefaction_integral_unchecked(gas, v_l, v, s_bar)
            + rarefaction_integral_unchecked(gas, v_r, v, s_bar)
            - du
    };
    let tol = 1e-12 * (1.0 + du.abs());

    let v_m = if v_l == v_r && du == 0.0 {
        v_l
    } else {
        find_root(gas, s_bar, &f, v_l.min(v_r) * 1e-6, v_l.max(v_r) * 1e6, tol)?
    };

    let v_floor = v_l.max(v_r);
    if v_m < v_floor * (1.0 - 1e-10) {
        return Err(Error::NoTwoRarefactionSolution(format!(
            "intermediate volume {v_m} is below max(v-, v+) = {v_floor}; the data call for a shock"
        )));
    }
    // a root a few ulps under the floor means one family is trivial
    let v_m = v_m.max(v_floor);
    let residual = f(v_m).abs();
    if residual > tol {
        return Err(Error::NonConvergence {
            solver: "intermediate-state root",
            iterations: 0,
            residual,
        });
    }
    let u_m = ends.u_minus + rarefaction_integral_unchecked(gas, v_l, v_m, s_bar);
    // reuse the given temperature when a family is trivial so constants stay exact
    let theta_m = if v_m == v_l {
        ends.theta_minus
    } else if v_m == v_r {
        ends.theta_plus
    } else {
        gas.theta_from_vs(v_m, s_bar)?
    };
    let fan1 = (
        gas.lambda(Family::One, v_l, s_bar)?,
        gas.lambda(Family::One, v_m, s_bar)?,
    );
    let fan3 = (
        gas.lambda(Family::Three, v_m, s_bar)?,
        gas.lambda(Family::Three, v_r, s_bar)?,
    );
    Ok(RiemannData {
        gas: *gas,
        ends: *ends,
        s_bar,
        v_m,
        u_m,
        theta_m,
        fan1,
        fan3,
        delta: ends.strength(),
        residual,
    })
}

// Bisection in ln(v) until the bracket is narrow, then safeguarded Newton using
// the closed-form derivative 2 sqrt(-p_v(v)).
fn find_root<F: Fn(f64) -> f64>(
    gas: &GasModel,
    s_bar: f64,
    f: &F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    const MAX_ITER: usize = 300;
    let (mut lo, mut hi) = (lo, hi);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo > 0.0 {
        return Err(Error::NoTwoRarefactionSolution(
            "velocity jump too negative for any admissible intermediate state".into(),
        ));
    }
    if f_hi < 0.0 {
        return Err(Error::NoTwoRarefactionSolution(
            "velocity jump too large: the rarefactions would open a vacuum".into(),
        ));
    }
    let mut v = (lo * hi).sqrt();
    for it in 0..MAX_ITER {
        let fv = f(v);
        if fv.abs() <= 0.1 * tol {
            return Ok(v);
        }
        if fv < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        if hi / lo > 1.001 {
            v = (lo * hi).sqrt();
            continue;
        }
        let slope = 2.0 * (-gas.p_tilde_v(v, s_bar)?).sqrt();
        let newton = v - fv / slope;
        v = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= 4.0 * f64::EPSILON * hi {
            return Ok(v);
        }
        if it + 1 == MAX_ITER {
            break;
        }
    }
    Err(Error::NonConvergence {
        solver: "intermediate-state root",
        iterations: MAX_ITER,
        residual: f(v).abs(),
    })
}

impl RiemannData {
    /// Self-similar solution at `xi = x/t`, composed as `V1 + V3 - v_m`.
    pub fn eval(&self, xi: f64) -> RiemannSample {
        let (v1, u1) = self.family_one(xi);
        let (v3, u3) = self.family_three(xi);
        // outside a fan its family sits at the intermediate state; skip the
        // cancellation there so the constant branches come out exact
        let compose = |a: f64, b: f64, mid: f64| {
            if b == mid {
                a
            } else if a == mid {
                b
            } else {
                a + b - mid
            }
        };
        let v = compose(v1, v3, self.v_m);
        RiemannSample {
            v,
            u: compose(u1, u3, self.u_m),
            theta: self.gas.a / self.gas.r
                * v.powf(1.0 - self.gas.gamma)
                * ((self.gas.gamma - 1.0) * self.s_bar / self.gas.r).exp(),
            s: self.s_bar,
        }
    }

    /// `(V1, U1)` of the 1-rarefaction alone.
    pub fn family_one(&self, xi: f64) -> (f64, f64) {
        let v = if xi <= self.fan1.0 {
            self.ends.v_minus
        } else if xi < self.fan1.1 {
            self.gas
                .lambda_inverse(Family::One, xi, self.s_bar)
                .expect("fan 1 speeds are negative")
        } else {
            self.v_m
        };
        let u = self.ends.u_minus
            + rarefaction_integral_unchecked(&self.gas, self.ends.v_minus, v, self.s_bar);
        (v, u)
    }

    /// `(V3, U3)` of the 3-rarefaction alone.
    pub fn family_three(&self, xi: f64) -> (f64, f64) {
        let v = if xi <= self.fan3.0 {
            self.v_m
        } else if xi < self.fan3.1 {
            self.gas
                .lambda_inverse(Family::Three, xi, self.s_bar)
                .expect("fan 3 speeds are positive")
        } else {
            self.ends.v_plus
        };
        let u = self.u_m - rarefaction_integral_unchecked(&self.gas, self.v_m, v, self.s_bar);
        (v, u)
    }

    /// True if the given family has nonzero strength.
    pub fn family_active(&self, family: Family) -> bool {
        match family {
            Family::One => self.fan1.0 < self.fan1.1,
            Family::Three => self.fan3.0 < self.fan3.1,
        }
    }

    /// Largest `|lambda|` among the fan edges.
    pub fn max_speed(&self) -> f64 {
        self.fan1.0.abs().max(self.fan3.1.abs())
    }
}

impl std::fmt::Display for RiemannData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let e = &self.ends;
        writeln!(f, "left state    v-={} u-={} theta-={}", e.v_minus, e.u_minus, e.theta_minus)?;
        writeln!(f, "right state   v+={} u+={} theta+={}", e.v_plus, e.u_plus, e.theta_plus)?;
        writeln!(f, "entropy       s_bar={}", self.s_bar)?;
        writeln!(
            f,
            "intermediate  v_m={} u_m={} theta_m={} (residual {:e})",
            self.v_m, self.u_m, self.theta_m, self.residual
        )?;
        let fan = |active: bool, (a, b): (f64, f64)| {
            if active {
                format!("[{a}, {b}]")
            } else {
                "empty".to_string()
            }
        };
        writeln!(f, "1-fan         {}", fan(self.family_active(Family::One), self.fan1))?;
        writeln!(f, "3-fan         {}", fan(self.family_active(Family::Three), self.fan3))?;
        write!(f, "strength      delta={}", self.delta)
    }
}
