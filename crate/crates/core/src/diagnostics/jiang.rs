//! A posteriori check of the specific volume against Jiang's representation
//!
//! `v(t,x) = B Y + (1/nu) int_0^t (B Y)(t) / (B Y)(tau) (R theta + chi_x^2/(2v))(tau,x) dtau`
//!
//! for a probe `x` in the unit interval `[i, i+1]`, with
//! `B = v_0(x) exp{(1/nu) int_x^inf (u_0 - u) beta}`,
//! `Y = exp{(1/nu) int_0^t int_{i+1}^{i+2} E}`,
//! `E = nu u_x/v - chi_x^2/(2v^2) - R theta/v` and `beta` the unit cut-off that
//! ramps from 1 at `i+1` to 0 at `i+2`.
//!
//! Everything is carried in logarithms: `L = ln B + ln Y`. Between two snapshots
//! `L` and the integrand are taken linear in time and the representation
//! integral over that step is done exactly, which keeps the sum stable when
//! `L` drifts by tens of units over a long run.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gas::GasModel;
use crate::solver::{FieldState, Grid};

#[derive(Debug, Clone, Copy)]
struct Sample {
    t: f64,
    /// `(1/nu) int_x^{i+2} beta (u_0 - u)`.
    log_b: f64,
    /// `int_{i+1}^{i+2} E`.
    e_int: f64,
    /// `R theta + chi_x^2 / (2 v)` at the probe.
    f: f64,
    v: f64,
}

#[derive(Debug, Clone)]
struct Probe {
    x: f64,
    i: f64,
    log_v0: f64,
    samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JiangProbeResult {
    pub x: f64,
    pub v_solver: f64,
    pub v_repr: f64,
    pub rel_error: f64,
    /// Richardson estimate of the time-quadrature error, relative to `v_solver`,
    /// from the history thinned to every other snapshot.
    pub quadrature_estimate: f64,
}

/// Append-only history of the probe quantities the representation needs.
#[derive(Debug, Clone)]
pub struct JiangRecorder {
    gas: GasModel,
    grid: Grid,
    u0: Vec<f64>,
    probes: Vec<Probe>,
}

/// Quadrature estimates below this are roundoff and never count as too coarse.
const ESTIMATE_FLOOR: f64 = 1e-10;

impl JiangRecorder {
    /// Fails with `Config` when a probe's cut-off interval `[i+1, i+2]` is not
    /// strictly inside the interior cell centers.
    pub fn new(gas: &GasModel, grid: &Grid, initial: &FieldState, probes: &[f64]) -> Result<Self> {
        let lo = grid.x(1);
        let hi = grid.x(grid.n_cells - 2);
        let probes = probes
            .iter()
            .map(|&x| {
                let i = x.floor();
                if !(x >= lo && i + 2.0 <= hi) {
                    return Err(Error::Config(format!(
                        "probe {x} needs [floor(x), floor(x) + 2] inside [{lo}, {hi}]"
                    )));
                }
                Ok(Probe {
                    x,
                    i,
                    log_v0: interp(grid, &initial.v, x).ln(),
                    samples: Vec::new(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rec = JiangRecorder {
            gas: *gas,
            grid: *grid,
            u0: initial.u.clone(),
            probes,
        };
        rec.record(initial)?;
        Ok(rec)
    }

    pub fn is_empty(&self) -> bool {
        self.probes.first().map_or(true, |p| p.samples.is_empty())
    }

    pub fn len(&self) -> usize {
        self.probes.first().map_or(0, |p| p.samples.len())
    }

    /// Appends one snapshot; a repeat of the latest time is ignored.
    pub fn record(&mut self, s: &FieldState) -> Result<()> {
        if let Some(last) = self.probes.first().and_then(|p| p.samples.last()) {
            if s.t <= last.t {
                return Ok(());
            }
        }
        let (g, grid) = (&self.gas, &self.grid);
        let n = grid.n_cells;
        let dx = grid.dx;
        let cx = |j: usize| {
            let (a, b) = (j.saturating_sub(1), (j + 1).min(n - 1));
            (s.chi[b] - s.chi[a]) / ((b - a) as f64 * dx)
        };
        let ux = |j: usize| {
            let (a, b) = (j.saturating_sub(1), (j + 1).min(n - 1));
            (s.u[b] - s.u[a]) / ((b - a) as f64 * dx)
        };
        for p in &mut self.probes {
            let (x, i) = (p.x, p.i);
            let drift = segment_integral(grid, |j| self.u0[j] - s.u[j], x, i + 2.0, Some(i + 1.0), |y| {
                if y <= i + 1.0 {
                    1.0
                } else {
                    (i + 2.0 - y).max(0.0)
                }
            });
            let e = |j: usize| {
                let v = s.v[j];
                let c = cx(j);
                g.nu * ux(j) / v - c * c / (2.0 * v * v) - g.r * s.theta[j] / v
            };
            let e_int = segment_integral(grid, e, i + 1.0, i + 2.0, None, |_| 1.0);
            let f = |j: usize| {
                let c = cx(j);
                g.r * s.theta[j] + c * c / (2.0 * s.v[j])
            };
            p.samples.push(Sample {
                t: s.t,
                log_b: drift / g.nu,
                e_int,
                f: interp_with(grid, f, x),
                v: interp(grid, &s.v, x),
            });
        }
        Ok(())
    }

    /// Reconstruction at the latest snapshot from every `stride`-th snapshot
    /// (the first and last are always used).
    pub fn reconstruct(&self, stride: usize) -> Vec<(f64, f64, f64)> {
        self.probes
            .iter()
            .map(|p| {
                let last = p.samples.len() - 1;
                let mut idx: Vec<usize> = (0..=last).step_by(stride.max(1)).collect();
                if *idx.last().unwrap() != last {
                    idx.push(last);
                }
                (p.x, p.samples[last].v, represent(p, &idx, self.gas.nu))
            })
            .collect()
    }

    /// Residual per probe without the sufficiency test.
    pub fn results(&self) -> Vec<JiangProbeResult> {
        let fine = self.reconstruct(1);
        let coarse = self.reconstruct(2);
        fine.iter()
            .zip(&coarse)
            .map(|(&(x, v_solver, v_repr), &(_, _, v_coarse))| JiangProbeResult {
                x,
                v_solver,
                v_repr,
                rel_error: (v_repr - v_solver).abs() / v_solver,
                quadrature_estimate: (v_repr - v_coarse).abs() / 3.0 / v_solver,
            })
            .collect()
    }

    /// Residual per probe; `InsufficientHistory` when the estimated
    /// time-quadrature error exceeds a tenth of the residual it would report.
    pub fn check(&self) -> Result<Vec<JiangProbeResult>> {
        if self.len() < 3 {
            return Err(Error::InsufficientHistory(format!("{} snapshots, need at least 3", self.len())));
        }
        let res = self.results();
        for r in &res {
            if r.quadrature_estimate > (0.1 * r.rel_error).max(ESTIMATE_FLOOR) {
                return Err(Error::InsufficientHistory(format!(
                    "probe {}: quadrature error estimate {:e} against residual {:e}",
                    r.x, r.quadrature_estimate, r.rel_error
                )));
            }
        }
        Ok(res)
    }
}

/// Representation check over a stored history (`history[0]` supplies `u_0`, `v_0`).
pub fn jiang_check(gas: &GasModel, grid: &Grid, history: &[FieldState], probes: &[f64]) -> Result<Vec<JiangProbeResult>> {
    let first = history
        .first()
        .ok_or_else(|| Error::InsufficientHistory("empty history".into()))?;
    let mut rec = JiangRecorder::new(gas, grid, first, probes)?;
    for s in &history[1..] {
        rec.record(s)?;
    }
    rec.check()
}

fn represent(p: &Probe, idx: &[usize], nu: f64) -> f64 {
    let s = &p.samples;
    let mut log_y = 0.0;
    let mut l_prev = p.log_v0 + s[idx[0]].log_b;
    // J = int_0^t exp(L(t) - L(tau)) f dtau
    let mut j = 0.0;
    for w in idx.windows(2) {
        let (a, b) = (&s[w[0]], &s[w[1]]);
        let h = b.t - a.t;
        log_y += 0.5 * h * (a.e_int + b.e_int) / nu;
        let l_next = p.log_v0 + b.log_b + log_y;
        let d = l_next - l_prev;
        let (w0, w1) = exp_weights(d);
        j = d.exp() * j + h * (w0 * a.f + w1 * b.f);
        l_prev = l_next;
    }
    l_prev.exp() + j / nu
}

/// `(int_0^1 r e^{a r} dr, int_0^1 (1 - r) e^{a r} dr)`.
fn exp_weights(a: f64) -> (f64, f64) {
    if a.abs() < 1e-3 {
        let a2 = a * a;
        (0.5 + a / 3.0 + a2 / 8.0 + a2 * a / 30.0, 0.5 + a / 6.0 + a2 / 24.0 + a2 * a / 120.0)
    } else {
        let e = a.exp();
        ((e * (a - 1.0) + 1.0) / (a * a), (e - 1.0 - a) / (a * a))
    }
}

/// Piecewise-linear interpolation of cell data.
fn interp(grid: &Grid, data: &[f64], x: f64) -> f64 {
    interp_with(grid, |j| data[j], x)
}

fn interp_with(grid: &Grid, data: impl Fn(usize) -> f64, x: f64) -> f64 {
    let r = (x - grid.x_min) / grid.dx - 0.5;
    let j = (r.floor().max(0.0) as usize).min(grid.n_cells - 2);
    let w = r - j as f64;
    (1.0 - w) * data(j) + w * data(j + 1)
}

/// `int_a^b weight(y) I[data](y) dy` for the piecewise-linear interpolant and a
/// weight that is linear between cell centers and the optional `kink`; Simpson
/// on each piece is then exact.
fn segment_integral(
    grid: &Grid,
    data: impl Fn(usize) -> f64,
    a: f64,
    b: f64,
    kink: Option<f64>,
    weight: impl Fn(f64) -> f64,
) -> f64 {
    let mut nodes = vec![a, b];
    if let Some(k) = kink {
        if k > a && k < b {
            nodes.push(k);
        }
    }
    let first = ((a - grid.x_min) / grid.dx - 0.5).ceil().max(0.0) as usize;
    let mut j = first;
    while j < grid.n_cells && grid.x(j) < b {
        if grid.x(j) > a {
            nodes.push(grid.x(j));
        }
        j += 1;
    }
    nodes.sort_by(f64::total_cmp);
    let f = |y: f64| weight(y) * interp_with(grid, &data, y);
    nodes
        .windows(2)
        .map(|w| (w[1] - w[0]) / 6.0 * (f(w[0]) + 4.0 * f(0.5 * (w[0] + w[1])) + f(w[1])))
        .sum()
}
