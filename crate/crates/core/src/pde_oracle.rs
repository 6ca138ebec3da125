//! Direct finite-difference integration of `f_t + (f^2/2)_x = f_xx`.
//!
//! Strang splitting on a uniform node grid: half a convection step
//! (MUSCL with van Leer slopes, local Lax–Friedrichs flux, SSP-RK2), a full
//! Crank–Nicolson diffusion step, then the second convection half step.
//! The end nodes are held at `f0(+-L)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Error, Result};
use crate::hopf_cole::{physical_solution, QuadratureOptions};
use crate::initial_data::TailFamily;

pub const MIN_NODES: usize = 1001;
pub const MAX_TIME: f64 = 1e3;
const CFL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexCnLlf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleGrid {
    pub half_width: f64,
    pub nx: usize,
    pub dt: f64,
    pub scheme: Scheme,
}

impl OracleGrid {
    pub fn new(half_width: f64, nx: usize, dt: f64) -> Result<Self> {
        finite("half_width", half_width)?;
        finite("dt", dt)?;
        if half_width <= 0.0 {
            return Err(invalid("half_width", format!("must be positive, got {half_width}")));
        }
        if nx < MIN_NODES {
            return Err(invalid("nx", format!("must be at least {MIN_NODES}, got {nx}")));
        }
        if dt <= 0.0 {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        Ok(Self {
            half_width,
            nx,
            dt,
            scheme: Scheme::ImexCnLlf,
        })
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.half_width
        } else {
            -self.half_width + i as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Largest stable step for a solution bounded by `max_abs`.
    pub fn max_stable_dt(&self, max_abs: f64) -> f64 {
        let dx = self.dx();
        if max_abs > 0.0 {
            (CFL * dx / max_abs).min(dx)
        } else {
            dx
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<f64>,
}

/// Integrates from `t = 0` to `t_final`, recording the state at each of
/// `snapshot_times` (clipped to `(0, t_final]`) and at `t_final`.
pub fn integrate(
    datum: &TailFamily,
    grid: &OracleGrid,
    t_final: f64,
    snapshot_times: &[f64],
) -> Result<Vec<Snapshot>> {
    let t_final = finite("t_final", t_final)?;
    if !(t_final > 0.0 && t_final <= MAX_TIME) {
        return Err(invalid(
            "t_final",
            format!("must lie in (0, {MAX_TIME}], got {t_final}"),
        ));
    }
    let needed = 10.0 * t_final.sqrt() + 20.0;
    if grid.half_width < needed {
        return Err(invalid(
            "half_width",
            format!("{} is below 10 sqrt(t_final) + 20 = {needed}", grid.half_width),
        ));
    }
    let mut u: Vec<f64> = grid.nodes().iter().map(|&x| datum.value(x)).collect();
    let max_abs = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let limit = grid.max_stable_dt(max_abs);
    if grid.dt > limit {
        return Err(Error::Cfl { dt: grid.dt, limit });
    }

    let mut stops: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|s| *s > 0.0 && *s < t_final)
        .collect();
    stops.push(t_final);
    stops.sort_by(|a, b| a.total_cmp(b));
    stops.dedup();

    let mut stepper = Stepper::new(grid.nx, grid.dx());
    let mut snapshots = Vec::with_capacity(stops.len());
    let mut t = 0.0;
    for stop in stops {
        let span = stop - t;
        let steps = (span / grid.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        for _ in 0..steps {
            stepper.step(&mut u, dt);
        }
        t = stop;
        snapshots.push(Snapshot {
            t,
            values: u.clone(),
        });
    }
    Ok(snapshots)
}

struct Stepper {
    dx: f64,
    flux: Vec<f64>,
    stage: Vec<f64>,
    rhs: Vec<f64>,
    work: Vec<f64>,
}

impl Stepper {
    fn new(nx: usize, dx: f64) -> Self {
        Self {
            dx,
            flux: vec![0.0; nx - 1],
            stage: vec![0.0; nx],
            rhs: vec![0.0; nx],
            work: vec![0.0; nx],
        }
    }

    fn step(&mut self, u: &mut [f64], dt: f64) {
        self.convect(u, 0.5 * dt);
        self.diffuse(u, dt);
        self.convect(u, 0.5 * dt);
    }

    /// SSP-RK2 for `u_t = -(u^2/2)_x` on the interior nodes.
    fn convect(&mut self, u: &mut [f64], dt: f64) {
        let n = u.len();
        let r = dt / self.dx;
        fluxes(u, &mut self.flux);
        self.stage.copy_from_slice(u);
        for i in 1..n - 1 {
            self.stage[i] = u[i] - r * (self.flux[i] - self.flux[i - 1]);
        }
        fluxes(&self.stage, &mut self.flux);
        for i in 1..n - 1 {
            let next = self.stage[i] - r * (self.flux[i] - self.flux[i - 1]);
            u[i] = 0.5 * (u[i] + next);
        }
    }

    /// Crank–Nicolson for `u_t = u_xx` with fixed end values.
    fn diffuse(&mut self, u: &mut [f64], dt: f64) {
        let n = u.len();
        let mu = dt / (self.dx * self.dx);
        let (diag, off) = (1.0 + mu, -0.5 * mu);
        self.rhs[0] = u[0];
        self.rhs[n - 1] = u[n - 1];
        for i in 1..n - 1 {
            self.rhs[i] = u[i] + 0.5 * mu * (u[i - 1] - 2.0 * u[i] + u[i + 1]);
        }
        // Thomas algorithm; rows 0 and n-1 are identity rows
        let c = &mut self.work;
        c[0] = 0.0;
        let mut prev_c = 0.0;
        let mut prev_d = self.rhs[0];
        let d = &mut self.rhs;
        for i in 1..n - 1 {
            let m = diag - off * prev_c;
            c[i] = off / m;
            d[i] = (d[i] - off * prev_d) / m;
            prev_c = c[i];
            prev_d = d[i];
        }
        u[n - 1] = d[n - 1];
        for i in (1..n - 1).rev() {
            u[i] = d[i] - c[i] * u[i + 1];
        }
        u[0] = d[0];
    }
}

fn van_leer(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

/// Interface fluxes `F[i]` between nodes `i` and `i + 1`.
fn fluxes(u: &[f64], flux: &mut [f64]) {
    let n = u.len();
    let slope = |i: usize| {
        if i == 0 || i + 1 == n {
            0.0
        } else {
            van_leer(u[i] - u[i - 1], u[i + 1] - u[i])
        }
    };
    let mut s_left = slope(0);
    for i in 0..n - 1 {
        let s_right = slope(i + 1);
        let left = u[i] + 0.5 * s_left;
        let right = u[i + 1] - 0.5 * s_right;
        let speed = left.abs().max(right.abs());
        flux[i] = 0.25 * (left * left + right * right) - 0.5 * speed * (right - left);
        s_left = s_right;
    }
}

/// Cubic Lagrange interpolation of grid values at `x`.
pub fn sample(grid: &OracleGrid, values: &[f64], x: f64) -> Result<f64> {
    let x = finite("x", x)?;
    let dx = grid.dx();
    let pos = (x + grid.half_width) / dx;
    if pos < 0.0 || pos > (grid.nx - 1) as f64 {
        return Err(invalid("x", format!("{x} lies outside the oracle grid")));
    }
    let base = (pos.floor() as isize - 1).clamp(0, grid.nx as isize - 4) as usize;
    let s = pos - base as f64;
    let mut total = 0.0;
    for j in 0..4 {
        let mut w = 1.0;
        for k in 0..4 {
            if k != j {
                w *= (s - k as f64) / (j as f64 - k as f64);
            }
        }
        total += w * values[base + j];
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub t: f64,
    pub max_abs_diff: f64,
    pub rms_diff: f64,
    /// `(x, oracle, hopf_cole)` triples.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Runs the oracle to `t` and compares it with the Hopf–Cole evaluation.
pub fn compare(
    datum: &TailFamily,
    t: f64,
    xs: &[f64],
    grid: &OracleGrid,
    opts: &QuadratureOptions,
) -> Result<Comparison> {
    let margin = grid.half_width - 10.0;
    if xs.is_empty() {
        return Err(invalid("xs", "no comparison points"));
    }
    if let Some(x) = xs.iter().find(|x| !(x.abs() <= margin)) {
        return Err(invalid(
            "xs",
            format!("{x} lies outside [-L + 10, L - 10] = [{}, {margin}]", -margin),
        ));
    }
    let snap = integrate(datum, grid, t, &[])?.pop().expect("final snapshot");
    let exact: Vec<f64> = xs
        .par_iter()
        .map(|&x| physical_solution(datum, x, t, opts))
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(xs.len());
    let (mut max, mut sq) = (0.0f64, 0.0);
    for (&x, &e) in xs.iter().zip(&exact) {
        let o = sample(grid, &snap.values, x)?;
        let d = (o - e).abs();
        max = max.max(d);
        sq += d * d;
        samples.push((x, o, e));
    }
    Ok(Comparison {
        t,
        max_abs_diff: max,
        rms_diff: (sq / xs.len() as f64).sqrt(),
        samples,
    })
}
