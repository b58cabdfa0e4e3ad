//! Localized initial perturbations added on top of the composite wave.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::WaveProfile;

use super::{FieldState, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbedField {
    V,
    U,
    Theta,
    Chi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpShape {
    /// `a sech^2((x - c) / w)`
    Sech2,
    /// `a (1 - r^2)^3` for `|r| < 1`, `r = (x - c) / w`; twice continuously differentiable.
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub field: PerturbedField,
    pub shape: BumpShape,
    pub amplitude: f64,
    #[serde(default)]
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn value(&self, x: f64) -> f64 {
        let r = (x - self.center) / self.width;
        match self.shape {
            BumpShape::Sech2 => {
                let c = r.cosh();
                if c.is_finite() {
                    self.amplitude / (c * c)
                } else {
                    0.0
                }
            }
            BumpShape::Compact => {
                if r.abs() < 1.0 {
                    self.amplitude * (1.0 - r * r).powi(3)
                } else {
                    0.0
                }
            }
        }
    }
}

/// A list of bumps; several bumps on the same field add up.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    #[serde(default, rename = "bump")]
    pub bumps: Vec<Bump>,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        for b in &self.bumps {
            if !(b.width > 0.0) || !b.amplitude.is_finite() || !b.center.is_finite() {
                return Err(Error::Config(format!("invalid perturbation bump {b:?}")));
            }
        }
        Ok(())
    }

    /// `(phi, psi, zeta, xi)` at `x`.
    pub fn at(&self, x: f64) -> [f64; 4] {
        let mut d = [0.0; 4];
        for b in &self.bumps {
            let k = match b.field {
                PerturbedField::V => 0,
                PerturbedField::U => 1,
                PerturbedField::Theta => 2,
                PerturbedField::Chi => 3,
            };
            d[k] += b.value(x);
        }
        d
    }

    /// Largest `|amplitude|` summed over the temperature bumps.
    pub fn theta_amplitude(&self) -> f64 {
        self.bumps
            .iter()
            .filter(|b| b.field == PerturbedField::Theta)
            .map(|b| b.amplitude.abs())
            .sum()
    }

    /// Initial data: the profile at `t = 0`, `chi = 1`, plus the bumps. The end
    /// cells carry the unperturbed profile. Fails on nonpositive `v` or `theta`.
    pub fn initial_state(&self, profile: &WaveProfile, grid: &Grid) -> Result<FieldState> {
        self.validate()?;
        let scale = (profile.gas.gamma - 1.0).sqrt();
        let amp = self.theta_amplitude();
        if amp > scale {
            log::warn!(
                "temperature perturbation amplitude {amp} is large compared with sqrt(gamma - 1) = {scale}"
            );
        }
        let mut s = FieldState::from_fn(grid, 0.0, |x| {
            let p = profile.eval(0.0, x)?;
            let d = self.at(x);
            Ok([p.v + d[0], p.u + d[1], p.theta + d[2], 1.0 + d[3]])
        })?;
        let bc = super::ProfileBoundary(profile);
        s.apply_boundary(grid, &bc)?;
        super::rhs::check_positivity(&s)?;
        Ok(s)
    }
}
