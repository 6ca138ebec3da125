//! Exact evaluation of the Burgers solution through the Hopf–Cole formula.
//!
//! In rescaled variables the solution is a ratio of two Laplace-type
//! integrals,
//!
//! ```text
//! A f(T z, t) = int A f0(y T) exp(Lambda (H_t(y, z) - M)) dy
//!             / int           exp(Lambda (H_t(y, z) - M)) dy,
//! ```
//!
//! with `M` the global maximum of `H_t(., z)`, so no exponent is positive.
//! The integrals are truncated where `Lambda (M - H_t)` exceeds the log
//! cutoff and computed by composite Gauss–Legendre panels that are refined
//! by bisection until two successive levels agree.

use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Error, Result};
use crate::initial_data::TailFamily;
use crate::landscape::{scan_landscape, Frame, LandscapeReport, Scales};
use crate::quadrature::GaussLegendre;
use crate::roots::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureOptions {
    /// The integrand is dropped where `Lambda (M - H_t)` exceeds this.
    pub log_cutoff: f64,
    /// Maximum number of panel bisection levels.
    pub panel_refinement: u32,
    /// Relative agreement required between successive levels.
    pub rel_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            log_cutoff: 45.0,
            panel_refinement: 12,
            rel_tol: 1e-9,
        }
    }
}

impl QuadratureOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.log_cutoff >= 30.0 && self.log_cutoff.is_finite()) {
            return Err(invalid(
                "log_cutoff",
                format!("must be at least 30, got {}", self.log_cutoff),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(invalid("rel_tol", format!("must lie in (0, 1), got {}", self.rel_tol)));
        }
        if self.panel_refinement == 0 || self.panel_refinement > 24 {
            return Err(invalid(
                "panel_refinement",
                format!("must lie in 1..=24, got {}", self.panel_refinement),
            ));
        }
        Ok(())
    }
}

/// One evaluation of the rescaled solution `t^(a/(1+a)) f(t^(1/(1+a)) z, t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionSample {
    pub frame: Frame,
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error_estimate: f64,
    pub levels: u32,
    pub landscape: LandscapeReport,
}

/// The rescaled solution at `(z, t)` from the full Hopf–Cole quadrature.
pub fn rescaled_solution(
    datum: &TailFamily,
    frame: &Frame,
    opts: &QuadratureOptions,
) -> Result<SolutionSample> {
    let landscape = scan_landscape(datum, frame, None, None)?;
    rescaled_solution_on(datum, landscape, opts)
}

/// As [`rescaled_solution`], reusing an existing landscape scan.
pub fn rescaled_solution_on(
    datum: &TailFamily,
    landscape: LandscapeReport,
    opts: &QuadratureOptions,
) -> Result<SolutionSample> {
    opts.validate()?;
    let frame = landscape.frame;
    let s = frame.scales();
    let top = landscape.global_max().h_value;
    let panels = base_panels(datum, &s, &landscape, top, opts.log_cutoff)?;
    let rule = GaussLegendre::twenty();

    let mut previous: Option<f64> = None;
    let mut best = (f64::NAN, f64::INFINITY);
    for level in 0..=opts.panel_refinement {
        let value = panel_ratio(datum, &s, &panels, level, top, rule);
        if let Some(prev) = previous {
            let diff = (value - prev).abs();
            best = (value, diff);
            if diff <= opts.rel_tol * value.abs() {
                return Ok(SolutionSample {
                    frame,
                    value,
                    error_estimate: diff,
                    levels: level,
                    landscape,
                });
            }
        }
        previous = Some(value);
    }
    Err(Error::QuadratureNotConverged {
        rel_tol: opts.rel_tol,
        best_value: best.0,
        error_estimate: best.1,
    })
}

fn panel_ratio(
    datum: &TailFamily,
    s: &Scales,
    panels: &[(f64, f64)],
    level: u32,
    top: f64,
    rule: &GaussLegendre,
) -> f64 {
    let split = 1usize << level;
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for &(a, b) in panels {
        let h = (b - a) / split as f64;
        for k in 0..split {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == split { b } else { lo + h };
            rule.for_each_node(lo, hi, |y, w| {
                let weight = w * (s.laplace * (s.phase(datum, y) - top)).exp();
                denominator += weight;
                numerator += weight * s.rescaled_datum(datum, y);
            });
        }
    }
    numerator / denominator
}

/// Level-0 panels: cutoff-bounded intervals around each relevant maximum,
/// split at the maxima, at one and three Laplace widths, and graded toward
/// the origin where the datum's core sits.
fn base_panels(
    datum: &TailFamily,
    s: &Scales,
    landscape: &LandscapeReport,
    top: f64,
    cutoff: f64,
) -> Result<Vec<(f64, f64)>> {
    let excess = |y: f64| s.laplace * (top - s.phase(datum, y)) - cutoff;
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut breaks: Vec<f64> = Vec::new();
    for p in landscape.maxima() {
        if s.laplace * (top - p.h_value) > cutoff {
            continue;
        }
        let width = (s.laplace * p.curvature.abs()).sqrt().recip();
        let lo = walk_to_cutoff(&excess, p.y, -6.0 * width)?;
        let hi = walk_to_cutoff(&excess, p.y, 6.0 * width)?;
        intervals.push((lo, hi));
        breaks.push(p.y);
        for k in [1.0, 3.0] {
            breaks.push(p.y - k * width);
            breaks.push(p.y + k * width);
        }
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    // graded breakpoints toward y = 0, down to the core width eps / T
    let core = datum.core_scale / s.space;
    breaks.push(0.0);
    let mut r = core;
    while r < 50.0 {
        breaks.push(r);
        breaks.push(-r);
        r *= 4.0;
    }

    let mut panels = Vec::new();
    for (lo, hi) in merged {
        let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        for w in pts.windows(2) {
            panels.push((w[0], w[1]));
        }
    }
    Ok(panels)
}

/// Steps away from `start` with growing steps until `excess` turns positive,
/// then bisects the crossing.
fn walk_to_cutoff(excess: &impl Fn(f64) -> f64, start: f64, first_step: f64) -> Result<f64> {
    let mut step = first_step;
    let mut inside = start;
    for _ in 0..200 {
        let next = inside + step;
        if excess(next) > 0.0 {
            return bisect(excess, inside, next, 1e-9, "log cutoff contour");
        }
        inside = next;
        step *= 1.5;
    }
    Err(Error::Structure(format!(
        "log cutoff contour not reached walking from y = {start}"
    )))
}

/// `A f0(y_* T)` at the unique global maximum `y_*` of `H_t(., z)`.
pub fn laplace_approximation(datum: &TailFamily, frame: &Frame) -> Result<f64> {
    let landscape = scan_landscape(datum, frame, None, None)?;
    laplace_approximation_on(datum, &landscape)
}

pub fn laplace_approximation_on(datum: &TailFamily, landscape: &LandscapeReport) -> Result<f64> {
    const TIE: f64 = 1e-12;
    let top = landscape.global_max();
    if let Some(gap) = landscape.gap {
        if gap <= TIE {
            let other = landscape
                .maxima()
                .filter(|p| p.y != top.y)
                .max_by(|a, b| a.h_value.total_cmp(&b.h_value))
                .expect("gap implies a second maximum");
            let (minus, plus) = if top.y < other.y { (top, other) } else { (other, top) };
            return Err(Error::AmbiguousBranch {
                h_minus: minus.h_value,
                h_plus: plus.h_value,
                tolerance: TIE,
            });
        }
    }
    Ok(landscape.frame.scales().rescaled_datum(datum, top.y))
}

/// `f(x, t)` in physical variables.
pub fn physical_solution(
    datum: &TailFamily,
    x: f64,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let x = finite("x", x)?;
    let probe = Frame::for_datum(datum, t, 0.0)?;
    let frame = probe.with_z(x / probe.space_scale())?;
    let sample = rescaled_solution(datum, &frame, opts)?;
    Ok(sample.value / frame.amplitude_scale())
}
