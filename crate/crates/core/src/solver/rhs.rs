//! Semi-discrete right-hand side on the collocated grid.
//!
//! Viscous, capillary, heat and Allen-Cahn fluxes live on faces and use the face
//! average of `v`; pressure and `u_x` in the mass and work terms are centered
//! cell differences, so the pressure work cancels exactly against the momentum
//! equation in the discrete total energy. Boundary cells are Dirichlet and get
//! zero rates.

use crate::error::{Error, Result};
use crate::gas::GasModel;

use super::{FieldState, Grid, Rates};

/// Extra volumetric source terms, used by manufactured-solution tests.
pub trait Forcing {
    /// Sources for `(v, u, theta, chi)` at `(t, x)`.
    fn source(&self, t: f64, x: f64) -> [f64; 4];
}

pub(crate) fn check_positivity(s: &FieldState) -> Result<()> {
    for (field, values) in [("v", &s.v), ("theta", &s.theta)] {
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(Error::PositivityBreach {
                field,
                cell,
                value,
                t: s.t,
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Face {
    visc: f64,
    cap: f64,
    heat: f64,
    ac: f64,
    vh: f64,
}

/// Time derivatives of the full NSAC system.
pub fn rhs(
    gas: &GasModel,
    grid: &Grid,
    s: &FieldState,
    forcing: Option<&dyn Forcing>,
    out: &mut Rates,
) -> Result<()> {
    check_positivity(s)?;
    let n = grid.n_cells;
    let (v, u, th, ch) = (&s.v[..], &s.u[..], &s.theta[..], &s.chi[..]);
    let inv_dx = 1.0 / grid.dx;
    let half_inv_dx = 0.5 * inv_dx;
    let (nu, kappa, r) = (gas.nu, gas.kappa, gas.r);
    let inv_cv = 1.0 / gas.cv();

    let face = |j: usize| {
        let vf = 0.5 * (v[j] + v[j + 1]);
        let ux = (u[j + 1] - u[j]) * inv_dx;
        let cx = (ch[j + 1] - ch[j]) * inv_dx;
        let tx = (th[j + 1] - th[j]) * inv_dx;
        Face {
            visc: nu * ux / vf,
            cap: 0.5 * cx * cx / (vf * vf),
            heat: kappa * tx / vf,
            ac: cx / vf,
            vh: nu * ux * ux / vf,
        }
    };

    out.clear_boundary();
    let mut left = face(0);
    for i in 1..n - 1 {
        let right = face(i);
        let p_l = r * th[i - 1] / v[i - 1];
        let p_r = r * th[i + 1] / v[i + 1];
        let p = r * th[i] / v[i];
        let ux_c = (u[i + 1] - u[i - 1]) * half_inv_dx;
        let mu = -(right.ac - left.ac) * inv_dx + ch[i] * ch[i] * ch[i] - ch[i];
        out.v[i] = ux_c;
        out.u[i] = -(p_r - p_l) * half_inv_dx + (right.visc - left.visc) * inv_dx
            - (right.cap - left.cap) * inv_dx;
        out.chi[i] = -v[i] * mu;
        out.theta[i] = (-p * ux_c + (right.heat - left.heat) * inv_dx + 0.5 * (left.vh + right.vh)
            + v[i] * mu * mu)
            * inv_cv;
        left = right;
    }
    if let Some(f) = forcing {
        add_forcing(grid, s.t, f, out);
    }
    Ok(())
}

/// Time derivatives of the compressible Navier-Stokes system alone: every
/// phase-field term is deleted and `chi` is frozen.
pub fn rhs_navier_stokes(
    gas: &GasModel,
    grid: &Grid,
    s: &FieldState,
    forcing: Option<&dyn Forcing>,
    out: &mut Rates,
) -> Result<()> {
    check_positivity(s)?;
    let n = grid.n_cells;
    let (v, u, th) = (&s.v[..], &s.u[..], &s.theta[..]);
    let inv_dx = 1.0 / grid.dx;
    let half_inv_dx = 0.5 * inv_dx;
    let (nu, kappa, r) = (gas.nu, gas.kappa, gas.r);
    let inv_cv = 1.0 / gas.cv();

    let face = |j: usize| {
        let vf = 0.5 * (v[j] + v[j + 1]);
        let ux = (u[j + 1] - u[j]) * inv_dx;
        let tx = (th[j + 1] - th[j]) * inv_dx;
        (nu * ux / vf, kappa * tx / vf, nu * ux * ux / vf)
    };

    out.clear_boundary();
    let mut left = face(0);
    for i in 1..n - 1 {
        let right = face(i);
        let p_l = r * th[i - 1] / v[i - 1];
        let p_r = r * th[i + 1] / v[i + 1];
        let p = r * th[i] / v[i];
        let ux_c = (u[i + 1] - u[i - 1]) * half_inv_dx;
        out.v[i] = ux_c;
        out.u[i] = -(p_r - p_l) * half_inv_dx + (right.0 - left.0) * inv_dx;
        out.chi[i] = 0.0;
        out.theta[i] = (-p * ux_c + (right.1 - left.1) * inv_dx + 0.5 * (left.2 + right.2)) * inv_cv;
        left = right;
    }
    if let Some(f) = forcing {
        add_forcing(grid, s.t, f, out);
    }
    Ok(())
}

fn add_forcing(grid: &Grid, t: f64, f: &dyn Forcing, out: &mut Rates) {
    for i in 1..grid.n_cells - 1 {
        let src = f.source(t, grid.x(i));
        out.v[i] += src[0];
        out.u[i] += src[1];
        out.theta[i] += src[2];
        out.chi[i] += src[3];
    }
}

/// `mu = -(chi_x / v)_x + chi^3 - chi` on every cell. Interior cells use the
/// same compact face stencil as the solver; the two boundary cells use
/// one-sided second-order differences.
pub fn chemical_potential(grid: &Grid, s: &FieldState) -> Vec<f64> {
    let n = grid.n_cells;
    let (v, ch) = (&s.v, &s.chi);
    let inv_dx = 1.0 / grid.dx;
    let ac = |j: usize| (ch[j + 1] - ch[j]) * inv_dx / (0.5 * (v[j] + v[j + 1]));
    let mut mu = vec![0.0; n];
    for i in 1..n - 1 {
        mu[i] = -(ac(i) - ac(i - 1)) * inv_dx + ch[i] * ch[i] * ch[i] - ch[i];
    }
    // a = chi_x / v at cell centers, one-sided at the ends
    let a = |i: usize| {
        let cx = if i == 0 {
            (-3.0 * ch[0] + 4.0 * ch[1] - ch[2]) * 0.5 * inv_dx
        } else if i == n - 1 {
            (3.0 * ch[n - 1] - 4.0 * ch[n - 2] + ch[n - 3]) * 0.5 * inv_dx
        } else {
            (ch[i + 1] - ch[i - 1]) * 0.5 * inv_dx
        };
        cx / v[i]
    };
    let ax0 = (-3.0 * a(0) + 4.0 * a(1) - a(2)) * 0.5 * inv_dx;
    let axn = (3.0 * a(n - 1) - 4.0 * a(n - 2) + a(n - 3)) * 0.5 * inv_dx;
    mu[0] = -ax0 + ch[0] * ch[0] * ch[0] - ch[0];
    mu[n - 1] = -axn + ch[n - 1] * ch[n - 1] * ch[n - 1] - ch[n - 1];
    mu
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(grid: &Grid, v: f64, theta: f64, chi: f64) -> FieldState {
        FieldState::uniform(grid, 0.0, [v, 0.0, theta, chi])
    }

    #[test]
    fn pure_phases_have_zero_potential() {
        let grid = Grid::new(0.0, 1.0, 32).unwrap();
        for chi in [1.0, 0.0, -1.0] {
            let mu = chemical_potential(&grid, &constant(&grid, 1.7, 1.0, chi));
            assert!(mu.iter().all(|&m| m == 0.0));
        }
    }

    #[test]
    fn potential_of_small_sine_wave() {
        // chi = 1 + a sin(kx), v = 1: exact discrete value is
        // kd^2 a sin(kx) + 2 eta + 3 eta^2 + eta^3 with kd the discrete wavenumber
        let n = 256;
        let l = 2.0 * std::f64::consts::PI;
        let grid = Grid::new(0.0, l, n).unwrap();
        let k = 3.0;
        for a in [1e-2, 1e-3] {
            let mut s = constant(&grid, 1.0, 1.0, 1.0);
            for i in 0..n {
                s.chi[i] = 1.0 + a * (k * grid.x(i)).sin();
            }
            let mu = chemical_potential(&grid, &s);
            let kd2 = (2.0 * (0.5 * k * grid.dx).sin() / grid.dx).powi(2);
            for i in 1..n - 1 {
                let eta = s.chi[i] - 1.0;
                let discrete = kd2 * a * (k * grid.x(i)).sin() + 2.0 * eta + 3.0 * eta * eta + eta.powi(3);
                assert!((mu[i] - discrete).abs() <= 1e-9, "cell {i}");
                let linear = (k * k + 2.0) * a * (k * grid.x(i)).sin();
                assert!((mu[i] - linear).abs() <= 4.0 * a * a + 1e-2 * a);
            }
        }
    }

    #[test]
    fn equilibrium_has_zero_rates() {
        let gas = GasModel::default();
        let grid = Grid::new(-5.0, 5.0, 40).unwrap();
        let s = constant(&grid, 1.3, 0.8, 1.0);
        let mut out = Rates::zeros(grid.n_cells);
        rhs(&gas, &grid, &s, None, &mut out).unwrap();
        assert!(out.max_abs() == 0.0);
    }

    #[test]
    fn rejects_nonpositive_state() {
        let gas = GasModel::default();
        let grid = Grid::new(-5.0, 5.0, 40).unwrap();
        let mut s = constant(&grid, 1.0, 1.0, 1.0);
        s.theta[7] = -1e-3;
        let mut out = Rates::zeros(grid.n_cells);
        match rhs(&gas, &grid, &s, None, &mut out) {
            Err(Error::PositivityBreach { field, cell, .. }) => assert_eq!((field, cell), ("theta", 7)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
