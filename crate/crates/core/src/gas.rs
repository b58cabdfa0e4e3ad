//! Ideal polytropic gas closure in Lagrangian variables.
//!
//! The state is described either by `(v, theta)` or by `(v, s)`. With
//! `C_v = R/(gamma-1)` the two are linked through
//!
//! ```text
//! s     = C_v * ln((R/A) * theta * v^(gamma-1))
//! theta = (A/R) * v^(1-gamma) * exp((gamma-1) s / R)
//! p     = R theta / v = A v^(-gamma) exp((gamma-1) s / R)
//! ```
//!
//! Every map here is a closed form; the checked variants reject nonpositive
//! volumes and temperatures.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Characteristic family of the Euler system. The 2-family (entropy wave) is
/// trivial in the composite waves handled here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    One,
    Three,
}

impl Family {
    /// Sign of the wave speed of this family.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Family::One => -1.0,
            Family::Three => 1.0,
        }
    }
}

/// Thermodynamic and transport constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasModel {
    pub r: f64,
    pub a: f64,
    pub gamma: f64,
    pub nu: f64,
    pub kappa: f64,
    /// Diffuse-interface thickness. Fixed to 1 throughout the solver.
    #[serde(default = "unit")]
    pub eps_interface: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for GasModel {
    fn default() -> Self {
        GasModel {
            r: 1.0,
            a: 1.0,
            gamma: 1.4,
            nu: 1.0,
            kappa: 1.0,
            eps_interface: 1.0,
        }
    }
}

impl GasModel {
    /// Builds a model with `eps_interface = 1`.
    pub fn new(r: f64, a: f64, gamma: f64, nu: f64, kappa: f64) -> Result<Self> {
        let g = GasModel {
            r,
            a,
            gamma,
            nu,
            kappa,
            eps_interface: 1.0,
        };
        g.validate()?;
        Ok(g)
    }

    /// Same as [`GasModel::new`] with the usual normalization `A = R`.
    pub fn with_normalized_entropy(r: f64, gamma: f64, nu: f64, kappa: f64) -> Result<Self> {
        Self::new(r, r, gamma, nu, kappa)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("R", self.r)?;
        require_positive("A", self.a)?;
        require_positive("nu", self.nu)?;
        require_positive("kappa", self.kappa)?;
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::Domain {
                what: "gamma",
                value: self.gamma,
                reason: "adiabatic exponent must exceed 1",
            });
        }
        if self.eps_interface != 1.0 {
            return Err(Error::Domain {
                what: "eps_interface",
                value: self.eps_interface,
                reason: "the interface thickness is fixed to 1",
            });
        }
        Ok(())
    }

    /// Specific heat at constant volume, `R/(gamma-1)`.
    #[inline]
    pub fn cv(&self) -> f64 {
        self.r / (self.gamma - 1.0)
    }

    #[inline]
    fn entropy_factor(&self, s: f64) -> f64 {
        ((self.gamma - 1.0) * s / self.r).exp()
    }

    /// `p(v, theta) = R theta / v`.
    pub fn pressure(&self, v: f64, theta: f64) -> Result<f64> {
        require_positive("v", v)?;
        Ok(self.r * theta / v)
    }

    /// Temperature on the isentrope `s` at volume `v`.
    pub fn theta_from_vs(&self, v: f64, s: f64) -> Result<f64> {
        require_positive("v", v)?;
        Ok(self.a / self.r * v.powf(1.0 - self.gamma) * self.entropy_factor(s))
    }

    pub fn entropy_from_vtheta(&self, v: f64, theta: f64) -> Result<f64> {
        require_positive("v", v)?;
        require_positive("theta", theta)?;
        Ok(self.cv() * (self.r / self.a * theta * v.powf(self.gamma - 1.0)).ln())
    }

    /// Pressure as a function of `(v, s)`.
    pub fn p_tilde(&self, v: f64, s: f64) -> Result<f64> {
        require_positive("v", v)?;
        Ok(self.a * v.powf(-self.gamma) * self.entropy_factor(s))
    }

    /// `d p_tilde / dv` at fixed entropy; always negative.
    pub fn p_tilde_v(&self, v: f64, s: f64) -> Result<f64> {
        require_positive("v", v)?;
        Ok(-self.a * self.gamma * v.powf(-self.gamma - 1.0) * self.entropy_factor(s))
    }

    /// `d p_tilde / ds` at fixed volume.
    pub fn p_tilde_s(&self, v: f64, s: f64) -> Result<f64> {
        Ok((self.gamma - 1.0) / self.r * self.p_tilde(v, s)?)
    }

    /// Characteristic speed `lambda_{1,3}(v, s) = -/+ sqrt(-p_tilde_v)`.
    pub fn lambda(&self, family: Family, v: f64, s: f64) -> Result<f64> {
        Ok(family.sign() * (-self.p_tilde_v(v, s)?).sqrt())
    }

    /// Volume at which `family` travels with speed `w` on the isentrope `s`.
    pub fn lambda_inverse(&self, family: Family, w: f64, s: f64) -> Result<f64> {
        if !(w * family.sign() > 0.0) || !w.is_finite() {
            return Err(Error::Domain {
                what: "wave speed",
                value: w,
                reason: "must be nonzero with the sign of the family",
            });
        }
        let k = self.a * self.gamma * self.entropy_factor(s);
        Ok((k / (w * w)).powf(1.0 / (self.gamma + 1.0)))
    }

    /// Sound speed magnitude `sqrt(-p_tilde_v)` expressed through `(v, theta)`,
    /// i.e. `sqrt(gamma R theta) / v`. Unchecked; for CFL estimates.
    #[inline]
    pub fn lagrangian_sound_speed(&self, v: f64, theta: f64) -> f64 {
        (self.gamma * self.r * theta).sqrt() / v
    }
}

/// `Phi(x) = x - 1 - ln x`, the convex building block of the relative entropy.
pub fn phi_convex(x: f64) -> Result<f64> {
    require_positive("Phi argument", x)?;
    Ok(x - 1.0 - x.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_gas(gamma: f64) -> GasModel {
        GasModel::new(1.0, 1.0, gamma, 1.0, 1.0).unwrap()
    }

    #[test]
    fn pressure_examples() {
        let g = unit_gas(1.4);
        assert_eq!(g.pressure(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(g.pressure(2.0, 1.0).unwrap(), 0.5);
        assert!(g.pressure(0.0, 1.0).is_err());
        assert!(g.pressure(-1.0, 1.0).is_err());
    }

    #[test]
    fn pressure_matches_isentropic_form_for_air_like_constants() {
        let r = 8.314 / 29e-3;
        let g = GasModel::new(r, 0.7 * r, 1.4, 1.8e-5, 0.025).unwrap();
        for &(v, theta) in &[(0.83, 300.0), (1.7, 250.0), (0.05, 900.0)] {
            let s = g.entropy_from_vtheta(v, theta).unwrap();
            let p = g.pressure(v, theta).unwrap();
            assert_relative_eq!(g.p_tilde(v, s).unwrap(), p, max_relative = 1e-12);
        }
    }

    #[test]
    fn theta_and_entropy_examples() {
        let g = unit_gas(2.0);
        assert_eq!(g.theta_from_vs(1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(g.theta_from_vs(2.0, 0.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(g.entropy_from_vtheta(1.0, 1.0).unwrap(), 0.0);
        let ds = g.entropy_from_vtheta(1.7, 2.0).unwrap() - g.entropy_from_vtheta(1.7, 1.0).unwrap();
        assert_relative_eq!(ds, g.cv() * 2f64.ln(), max_relative = 1e-14);
        assert!(g.entropy_from_vtheta(1.0, 0.0).is_err());
        assert!(g.theta_from_vs(-2.0, 0.0).is_err());
    }

    #[test]
    fn p_tilde_v_and_lambda_examples() {
        let g = unit_gas(2.0);
        assert_relative_eq!(g.p_tilde_v(1.0, 0.0).unwrap(), -2.0, max_relative = 1e-15);
        assert_relative_eq!(
            g.lambda(Family::Three, 1.0, 0.0).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-15
        );
        let g3 = unit_gas(3.0);
        assert_relative_eq!(
            g3.lambda(Family::Three, 4.0, 0.0).unwrap(),
            3f64.sqrt() / 16.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            g.lambda_inverse(Family::Three, 2f64.sqrt(), 0.0).unwrap(),
            1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn lambda_inverse_rejects_wrong_sign() {
        let g = unit_gas(1.4);
        assert!(g.lambda_inverse(Family::One, 0.5, 0.0).is_err());
        assert!(g.lambda_inverse(Family::Three, -0.5, 0.0).is_err());
        assert!(g.lambda_inverse(Family::Three, 0.0, 0.0).is_err());
    }

    #[test]
    fn lambda_inverse_grows_as_speed_vanishes() {
        let g = unit_gas(1.4);
        let mut prev = 0.0;
        for k in 0..30 {
            let w = 0.5f64.powi(k);
            let v = g.lambda_inverse(Family::Three, w, 0.3).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn p_tilde_v_is_second_order_finite_difference() {
        let g = unit_gas(1.4);
        let (v, s) = (1.3, 0.2);
        let exact = g.p_tilde_v(v, s).unwrap();
        let err = |h: f64| {
            let fd = (g.p_tilde(v + h, s).unwrap() - g.p_tilde(v - h, s).unwrap()) / (2.0 * h);
            (fd - exact).abs()
        };
        let order = (err(1e-2) / err(5e-3)).log2();
        assert!((order - 2.0).abs() < 0.05, "observed order {order}");
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_convex(1.0).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(phi_convex(e).unwrap(), e - 2.0, max_relative = 1e-15);
        assert!(phi_convex(0.0).is_err());
        // brute-force scan of the quadratic lower bound on (0, 10]
        for k in 1..=100_000 {
            let x = k as f64 * 1e-4;
            let lower = (x - 1.0).powi(2) / (2.0 * x.max(1.0).powi(2));
            assert!(phi_convex(x).unwrap() >= lower - 1e-15, "x = {x}");
        }
    }

    #[test]
    fn gas_validation() {
        assert!(GasModel::new(1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(GasModel::new(-1.0, 1.0, 1.4, 1.0, 1.0).is_err());
        assert!(GasModel::new(1.0, 1.0, 1.4, 0.0, 1.0).is_err());
        let mut g = GasModel::default();
        g.eps_interface = 0.5;
        assert!(g.validate().is_err());
        assert_relative_eq!(unit_gas(1.4).cv(), 2.5, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn entropy_temperature_round_trip(v in 0.1f64..10.0, theta in 0.1f64..10.0, gamma in 1.01f64..3.0) {
            let g = GasModel::new(0.8, 1.3, gamma, 1.0, 1.0).unwrap();
            let s = g.entropy_from_vtheta(v, theta).unwrap();
            let back = g.theta_from_vs(v, s).unwrap();
            prop_assert!(((back - theta) / theta).abs() <= 1e-12);
            let p = g.pressure(v, back).unwrap();
            prop_assert!(((g.p_tilde(v, s).unwrap() - p) / p).abs() <= 1e-12);
        }

        #[test]
        fn lambda_round_trip_and_symmetry(v in 0.1f64..10.0, s in -2.0f64..2.0) {
            let g = unit_gas(1.4);
            let l3 = g.lambda(Family::Three, v, s).unwrap();
            let l1 = g.lambda(Family::One, v, s).unwrap();
            prop_assert_eq!(l1, -l3);
            prop_assert!(l1 < 0.0 && l3 > 0.0);
            let back = g.lambda_inverse(Family::One, l1, s).unwrap();
            prop_assert!(((back - v) / v).abs() <= 1e-12);
        }

        #[test]
        fn phi_is_midpoint_convex(a in 0.01f64..20.0, b in 0.01f64..20.0) {
            let mid = phi_convex(0.5 * (a + b)).unwrap();
            let avg = 0.5 * (phi_convex(a).unwrap() + phi_convex(b).unwrap());
            prop_assert!(mid <= avg + 1e-14);
        }
    }

    #[test]
    fn lambda_is_monotone_on_sorted_grid() {
        let g = unit_gas(1.4);
        let vs: Vec<f64> = (1..200).map(|k| 0.05 * k as f64).collect();
        for w in vs.windows(2) {
            assert!(g.lambda(Family::One, w[1], 0.1).unwrap() > g.lambda(Family::One, w[0], 0.1).unwrap());
            assert!(g.lambda(Family::Three, w[1], 0.1).unwrap() < g.lambda(Family::Three, w[0], 0.1).unwrap());
        }
    }
}
