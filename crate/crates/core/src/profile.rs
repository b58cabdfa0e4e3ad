//! Smooth composite rarefaction wave `(V, U, Theta, S)(t, x)`.
//!
//! Each family is driven by a smoothed Burgers solution `w_i` evaluated at the
//! shifted time `t + t0`, mapped back to volume through `lambda_i(V_i) = w_i`.
//! The families are superposed around the intermediate state, temperature
//! included: `Theta = Theta_1 + Theta_3 - theta_m`. With this choice the energy
//! residual `r = C_v Theta_t + p U_x` reduces to the interaction term
//! `p U_x - p_1 U_1x - p_3 U_3x`, which vanishes wherever one family is constant.

use serde::Serialize;

use crate::burgers::{Smoothing, SmoothingConfig};
use crate::error::{Error, Result};
use crate::gas::{Family, GasModel};
use crate::riemann::{rarefaction_integral_unchecked, solve_intermediate, EndStates, RiemannData};

/// One family's contribution and its first derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FamilySample {
    pub w: f64,
    pub w_x: f64,
    pub v: f64,
    pub u: f64,
    pub theta: f64,
    pub v_x: f64,
    pub u_x: f64,
    pub theta_x: f64,
    pub v_t: f64,
    pub u_t: f64,
    pub theta_t: f64,
}

impl FamilySample {
    pub fn pressure(&self, gas: &GasModel) -> f64 {
        gas.r * self.theta / self.v
    }

    pub fn pressure_x(&self, gas: &GasModel) -> f64 {
        gas.r * (self.theta_x * self.v - self.theta * self.v_x) / (self.v * self.v)
    }
}

/// Composite wave at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub v: f64,
    pub u: f64,
    pub theta: f64,
    pub s: f64,
    pub v_x: f64,
    pub u_x: f64,
    pub theta_x: f64,
    pub v_t: f64,
    pub u_t: f64,
    pub theta_t: f64,
    pub one: FamilySample,
    pub three: FamilySample,
}

/// Interaction residuals of the composite wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub g: f64,
    pub g_x: f64,
    pub q: f64,
    pub r: f64,
}

#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub gas: GasModel,
    pub riemann: RiemannData,
    pub smoothing: Smoothing,
    /// `(lambda_1(v-), lambda_1(v_m))`.
    pub w1: (f64, f64),
    /// `(lambda_3(v_m), lambda_3(v+))`.
    pub w3: (f64, f64),
}

impl WaveProfile {
    pub fn new(gas: &GasModel, ends: &EndStates, smoothing: SmoothingConfig) -> Result<Self> {
        let riemann = solve_intermediate(gas, ends)?;
        Self::from_riemann(riemann, Smoothing::new(smoothing)?)
    }

    pub fn from_riemann(riemann: RiemannData, smoothing: Smoothing) -> Result<Self> {
        Ok(WaveProfile {
            gas: riemann.gas,
            w1: riemann.fan1,
            w3: riemann.fan3,
            riemann,
            smoothing,
        })
    }

    pub fn ends(&self) -> &EndStates {
        &self.riemann.ends
    }

    pub fn t0(&self) -> f64 {
        self.smoothing.t0
    }

    fn family(&self, family: Family, tau: f64, x: f64) -> Result<FamilySample> {
        let rd = &self.riemann;
        let (w_minus, w_plus) = match family {
            Family::One => self.w1,
            Family::Three => self.w3,
        };
        let (v_ref, u_ref, sign) = match family {
            Family::One => (rd.ends.v_minus, rd.ends.u_minus, 1.0),
            Family::Three => (rd.v_m, rd.u_m, -1.0),
        };
        if w_minus == w_plus {
            return Ok(FamilySample {
                w: w_minus,
                v: rd.v_m,
                u: rd.u_m,
                theta: rd.theta_m,
                ..Default::default()
            });
        }
        let b = self.smoothing.eval(w_minus, w_plus, tau, x)?;
        let g = &self.gas;
        let v = g.lambda_inverse(family, b.w, rd.s_bar)?;
        let dv_dw = -2.0 * v / ((g.gamma + 1.0) * b.w);
        let v_x = dv_dw * b.w_x;
        let v_t = dv_dw * b.w_t;
        // |w| is the sound speed at V_i
        let c = b.w.abs();
        let u = u_ref + sign * rarefaction_integral_unchecked(g, v_ref, v, rd.s_bar);
        let theta = g.theta_from_vs(v, rd.s_bar)?;
        let dtheta_dv = (1.0 - g.gamma) * theta / v;
        Ok(FamilySample {
            w: b.w,
            w_x: b.w_x,
            v,
            u,
            theta,
            v_x,
            u_x: sign * c * v_x,
            theta_x: dtheta_dv * v_x,
            v_t,
            u_t: sign * c * v_t,
            theta_t: dtheta_dv * v_t,
        })
    }

    /// Composite wave and first derivatives at physical time `t`.
    pub fn eval(&self, t: f64, x: f64) -> Result<ProfileSample> {
        if !(t >= 0.0) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                reason: "profile time must be nonnegative",
            });
        }
        let tau = t + self.smoothing.t0;
        let one = self.family(Family::One, tau, x)?;
        let three = self.family(Family::Three, tau, x)?;
        let rd = &self.riemann;
        Ok(ProfileSample {
            v: one.v + three.v - rd.v_m,
            u: one.u + three.u - rd.u_m,
            theta: one.theta + three.theta - rd.theta_m,
            s: rd.s_bar,
            v_x: one.v_x + three.v_x,
            u_x: one.u_x + three.u_x,
            theta_x: one.theta_x + three.theta_x,
            v_t: one.v_t + three.v_t,
            u_t: one.u_t + three.u_t,
            theta_t: one.theta_t + three.theta_t,
            one,
            three,
        })
    }

    /// Residuals from the defining balance laws of the composite wave.
    pub fn residuals_of(&self, p: &ProfileSample) -> Residuals {
        let g = &self.gas;
        let pressure = g.r * p.theta / p.v;
        let pressure_x = g.r * (p.theta_x * p.v - p.theta * p.v_x) / (p.v * p.v);
        let p_m = g.r * self.riemann.theta_m / self.riemann.v_m;
        let energy_rate = g.cv() * p.theta_t;
        Residuals {
            g: pressure - p.one.pressure(g) - p.three.pressure(g) + p_m,
            g_x: pressure_x - p.one.pressure_x(g) - p.three.pressure_x(g),
            q: energy_rate + p.u * p.u_t + p.u_x * pressure + p.u * pressure_x,
            r: energy_rate + pressure * p.u_x,
        }
    }

    pub fn residuals(&self, t: f64, x: f64) -> Result<Residuals> {
        Ok(self.residuals_of(&self.eval(t, x)?))
    }

    /// Max over `xs` of the distance between `(V, U, Theta)(t)` and the exact
    /// Riemann solution at `x/t`.
    pub fn riemann_distance(&self, t: f64, xs: &[f64]) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                reason: "the self-similar solution needs t > 0",
            });
        }
        let mut sup = 0.0f64;
        for &x in xs {
            let p = self.eval(t, x)?;
            let r = self.riemann.eval(x / t);
            sup = sup
                .max((p.v - r.v).abs())
                .max((p.u - r.u).abs())
                .max((p.theta - r.theta).abs());
        }
        Ok(sup)
    }

    /// Largest deviation of the profile from its far-field constants at `+-half_width`.
    pub fn far_field_gap(&self, t: f64, half_width: f64) -> Result<f64> {
        let e = self.ends();
        let l = self.eval(t, -half_width)?;
        let r = self.eval(t, half_width)?;
        Ok([
            (l.v - e.v_minus).abs(),
            (l.u - e.u_minus).abs(),
            (l.theta - e.theta_minus).abs(),
            (r.v - e.v_plus).abs(),
            (r.u - e.u_plus).abs(),
            (r.theta - e.theta_plus).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max))
    }

    /// Smallest half-width (to within 1%) such that the profile is within `tol`
    /// of its far-field states at `t = 0` and `t = t_end`, and which contains the
    /// fan edges at `t_end` with a 20% margin.
    pub fn auto_half_width(&self, t_end: f64, tol: f64) -> Result<f64> {
        let reach = 1.2 * self.riemann.max_speed() * (t_end + self.smoothing.t0);
        let ok = |l: f64| -> Result<bool> {
            Ok(self.far_field_gap(0.0, l)? <= tol && self.far_field_gap(t_end, l)? <= tol)
        };
        let mut hi = reach.max(1.0);
        let mut lo = hi;
        if ok(hi)? {
            return Ok(hi);
        }
        for _ in 0..60 {
            lo = hi;
            hi *= 2.0;
            if ok(hi)? {
                break;
            }
        }
        if !ok(hi)? {
            return Err(Error::Config(format!(
                "profile does not reach its far field within tolerance {tol}"
            )));
        }
        while hi - lo > 0.01 * hi {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}
