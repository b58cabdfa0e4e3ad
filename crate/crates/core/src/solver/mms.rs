//! Manufactured smooth solution with matching source terms, for convergence
//! studies of the full discretization.

use serde::Serialize;

use crate::error::Result;
use crate::gas::GasModel;

use super::{run, Boundary, FieldState, Forcing, Grid, Model, NullObserver, SolverConfig};

/// `mean + amp sin(x + omega t + phase)`.
#[derive(Debug, Clone, Copy)]
struct Wave {
    mean: f64,
    amp: f64,
    omega: f64,
    phase: f64,
}

impl Wave {
    // (f, f_x, f_xx, f_t)
    fn eval(&self, t: f64, x: f64) -> (f64, f64, f64, f64) {
        let arg = x + self.omega * t + self.phase;
        let (s, c) = arg.sin_cos();
        (self.mean + self.amp * s, self.amp * c, -self.amp * s, self.omega * self.amp * c)
    }
}

/// Smooth periodic-in-space fields `(v, u, theta, chi)` and the sources that make
/// them an exact solution of the forced system.
#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    pub gas: GasModel,
    v: Wave,
    u: Wave,
    theta: Wave,
    chi: Wave,
}

impl Manufactured {
    pub fn new(gas: &GasModel) -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        Manufactured {
            gas: *gas,
            v: Wave { mean: 1.5, amp: 0.3, omega: -1.0, phase: 0.0 },
            u: Wave { mean: 0.0, amp: 0.4, omega: 0.5, phase: half_pi },
            theta: Wave { mean: 1.2, amp: 0.2, omega: 0.3, phase: 1.0 },
            chi: Wave { mean: 0.5, amp: 0.3, omega: -0.7, phase: half_pi },
        }
    }

    pub fn exact(&self, t: f64, x: f64) -> [f64; 4] {
        [
            self.v.eval(t, x).0,
            self.u.eval(t, x).0,
            self.theta.eval(t, x).0,
            self.chi.eval(t, x).0,
        ]
    }

    /// Right-hand side of the unforced continuous system at the exact fields.
    pub fn continuous_rhs(&self, t: f64, x: f64) -> [f64; 4] {
        let g = &self.gas;
        let (v, vx, _, _) = self.v.eval(t, x);
        let (_, ux, uxx, _) = self.u.eval(t, x);
        let (th, thx, thxx, _) = self.theta.eval(t, x);
        let (ch, cx, cxx, _) = self.chi.eval(t, x);
        let p = g.r * th / v;
        let px = g.r * (thx * v - th * vx) / (v * v);
        let mu = -(cxx / v - cx * vx / (v * v)) + ch * ch * ch - ch;
        [
            ux,
            -px + g.nu * (uxx / v - ux * vx / (v * v)) - (cx * cxx / (v * v) - cx * cx * vx / (v * v * v)),
            (-p * ux + g.kappa * (thxx / v - thx * vx / (v * v)) + g.nu * ux * ux / v + v * mu * mu) / g.cv(),
            -v * mu,
        ]
    }
}

impl Forcing for Manufactured {
    fn source(&self, t: f64, x: f64) -> [f64; 4] {
        let f = self.continuous_rhs(t, x);
        [
            self.v.eval(t, x).3 - f[0],
            self.u.eval(t, x).3 - f[1],
            self.theta.eval(t, x).3 - f[2],
            self.chi.eval(t, x).3 - f[3],
        ]
    }
}

impl Boundary for Manufactured {
    fn state(&self, t: f64, x: f64) -> Result<[f64; 4]> {
        Ok(self.exact(t, x))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MmsLevel {
    pub n_cells: usize,
    pub dx: f64,
    pub steps: usize,
    /// Discrete L2 errors of `(v, u, theta, chi)` at the final time.
    pub errors: [f64; 4],
}

#[derive(Debug, Clone, Serialize)]
pub struct MmsStudy {
    pub levels: Vec<MmsLevel>,
    /// `log2(e_coarse / e_fine)` per field for each successive pair.
    pub orders: Vec<[f64; 4]>,
}

impl MmsStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().flatten().fold(f64::INFINITY, |m, &o| m.min(o))
    }
}

/// Runs the manufactured problem on `[0, 2 pi]` at each resolution (each
/// should double the last) with the time step following the CFL limits.
pub fn mms_convergence(
    gas: &GasModel,
    model: Model,
    resolutions: &[usize],
    t_end: f64,
    cfl_hyperbolic: f64,
    cfl_parabolic: f64,
) -> Result<MmsStudy> {
    let m = Manufactured::new(gas);
    let cfg = SolverConfig {
        cfl_hyperbolic,
        cfl_parabolic,
        t_end,
        cadence: t_end,
        model,
    };
    let mut levels = Vec::new();
    for &n in resolutions {
        let grid = Grid::new(0.0, 2.0 * std::f64::consts::PI, n)?;
        let mut state = FieldState::from_fn(&grid, 0.0, |x| Ok(m.exact(0.0, x)))?;
        let summary = run(gas, &grid, &cfg, &m, Some(&m), &mut state, &mut NullObserver)?;
        let mut err = [0.0; 4];
        for i in 0..n {
            let e = m.exact(state.t, grid.x(i));
            let got = [state.v[i], state.u[i], state.theta[i], state.chi[i]];
            for k in 0..4 {
                err[k] += (got[k] - e[k]).powi(2) * grid.dx;
            }
        }
        levels.push(MmsLevel {
            n_cells: n,
            dx: grid.dx,
            steps: summary.steps,
            errors: err.map(f64::sqrt),
        });
    }
    let orders = levels
        .windows(2)
        .map(|w| {
            let mut o = [0.0; 4];
            for k in 0..4 {
                o[k] = (w[0].errors[k] / w[1].errors[k]).log2();
            }
            o
        })
        .collect();
    Ok(MmsStudy { levels, orders })
}
