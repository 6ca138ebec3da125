//! Zoomed evaluations at the discontinuity and convergence-rate fitting.
//!
//! Near `z_c` the rescaled solution is examined in the zoom frame
//! `z = z_c + t^(-gamma) x`. For the two-term datum the scaled deviation
//! `t^gamma (A f - p(z))` tends to a constant on each side of `x = 0`; for
//! the nested datum the solution is compared with a ladder of such
//! corrections. Limits are estimated by fitting `L + C t^(-theta)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{p_correction, profile_p, y_star_prime, Branch, CriticalStructure};
use crate::error::{finite, invalid, Error, Result};
use crate::hopf_cole::{rescaled_solution, QuadratureOptions};
use crate::initial_data::{FamilyKind, TailFamily};
use crate::landscape::Frame;

/// Admissibility bound `(1 - a0) / (2 (1 + a0))` on zoom exponents.
pub fn zoom_limit(alpha0: f64) -> f64 {
    (1.0 - alpha0) / (2.0 * (1.0 + alpha0))
}

/// `(a - a0) / (1 + a0)`: the rate at which a tail of exponent `a` fades
/// relative to the leading one in rescaled variables.
pub fn relative_rate(alpha: f64, alpha0: f64) -> f64 {
    (alpha - alpha0) / (1.0 + alpha0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoomFrame {
    pub cs: CriticalStructure,
    pub gamma: f64,
    pub x: f64,
    pub t: f64,
}

impl ZoomFrame {
    /// `gamma = 0` is the unzoomed frame `z = z_c + x`.
    pub fn new(cs: &CriticalStructure, gamma: f64, x: f64, t: f64) -> Result<Self> {
        finite("gamma", gamma)?;
        finite("x", x)?;
        finite("t", t)?;
        if t <= 0.0 {
            return Err(invalid("t", format!("must be positive, got {t}")));
        }
        let limit = zoom_limit(cs.leading.alpha);
        if !(gamma >= 0.0 && gamma < limit) {
            return Err(invalid(
                "gamma",
                format!("zoom exponent {gamma} must lie in [0, {limit})"),
            ));
        }
        Ok(Self {
            cs: *cs,
            gamma,
            x,
            t,
        })
    }

    pub fn scale(&self) -> f64 {
        self.t.powf(-self.gamma)
    }

    pub fn z(&self) -> f64 {
        self.cs.z_c + self.scale() * self.x
    }

    pub fn frame(&self) -> Result<Frame> {
        Frame::new(self.cs.leading.alpha, self.t, self.z())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln t, ln error)` pairs actually fitted.
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    pub const MIN_POINTS: usize = 4;
    pub const MIN_R_SQUARED: f64 = 0.9;

    pub fn reliable(&self) -> bool {
        self.r_squared >= Self::MIN_R_SQUARED
    }

    /// `exp(intercept)`, the prefactor of the fitted power law.
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

/// Least squares of `ln error` against `ln t`. Points with a non-positive
/// error are dropped.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(invalid("t", "sample times must be strictly increasing"));
        }
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0) || !p.0.is_finite()) {
        return Err(invalid("t", format!("sample time {} is not positive", p.0)));
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0 && p.1.is_finite())
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    if logs.len() < RateFit::MIN_POINTS {
        return Err(Error::TooFewPoints {
            usable: logs.len(),
            required: RateFit::MIN_POINTS,
        });
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: logs,
    })
}

/// Fit of `value(t) = limit + coefficient t^(-theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub coefficient: f64,
    pub theta: f64,
    /// `|limit - value(t_max)|`.
    pub error_bar: f64,
    pub rms_residual: f64,
}

const THETA_RANGE: (f64, f64) = (1e-3, 2.0);

/// Fits `L + C t^(-theta)` with `theta` free: linear least squares in
/// `(L, C)` for each `theta`, then a scan and golden-section search over
/// `ln theta`.
pub fn extrapolate(points: &[(f64, f64)]) -> Result<Extrapolation> {
    if points.len() < 4 {
        return Err(Error::TooFewPoints {
            usable: points.len(),
            required: 4,
        });
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(invalid("t", "sample times must be strictly increasing"));
        }
    }
    if points.iter().any(|p| !(p.0 > 0.0) || !p.1.is_finite()) {
        return Err(invalid("points", "times must be positive and values finite"));
    }
    let ssr = |ln_theta: f64| linear_fit(points, ln_theta.exp()).2;
    let (lo, hi) = (THETA_RANGE.0.ln(), THETA_RANGE.1.ln());
    let scan = 400;
    let mut best = (lo, f64::INFINITY);
    for k in 0..=scan {
        let s = lo + (hi - lo) * k as f64 / scan as f64;
        let r = ssr(s);
        if r < best.1 {
            best = (s, r);
        }
    }
    let step = (hi - lo) / scan as f64;
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ssr(c), ssr(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ssr(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ssr(d);
        }
    }
    let theta = (0.5 * (a + b)).exp();
    let (limit, coefficient, ss) = linear_fit(points, theta);
    let last = points.last().expect("nonempty").1;
    Ok(Extrapolation {
        limit,
        coefficient,
        theta,
        error_bar: (limit - last).abs(),
        rms_residual: (ss / points.len() as f64).sqrt(),
    })
}

fn linear_fit(points: &[(f64, f64)], theta: f64) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let basis: Vec<f64> = points.iter().map(|p| p.0.powf(-theta)).collect();
    let mb = basis.iter().sum::<f64>() / n;
    let mv = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sbb = 0.0;
    let mut sbv = 0.0;
    for (b, p) in basis.iter().zip(points) {
        sbb += (b - mb) * (b - mb);
        sbv += (b - mb) * (p.1 - mv);
    }
    let c = if sbb > 0.0 { sbv / sbb } else { 0.0 };
    let l = mv - c * mb;
    let ss = basis
        .iter()
        .zip(points)
        .map(|(b, p)| (p.1 - l - c * b).powi(2))
        .sum();
    (l, c, ss)
}

/// `per_decade` geometrically spaced times from `t_lo` to `t_hi` inclusive.
pub fn geometric_times(t_lo: f64, t_hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    finite("t_lo", t_lo)?;
    finite("t_hi", t_hi)?;
    if !(t_lo > 0.0 && t_hi > t_lo) || per_decade == 0 {
        return Err(invalid("t_grid", format!("need 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")));
    }
    let (a, b) = (t_lo.log10(), t_hi.log10());
    let n = ((b - a) * per_decade as f64).round().max(1.0) as usize;
    Ok((0..=n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / n as f64))
        .collect())
}

fn two_term_parts(datum: &TailFamily) -> Result<(f64, f64, f64)> {
    if datum.kind != FamilyKind::TwoTerm {
        return Err(invalid("family", "q_estimate needs the two_term family"));
    }
    let (lead, second) = (datum.tails[0], datum.tails[1]);
    Ok((lead.alpha, second.kappa, second.alpha))
}

/// `t^gamma (A f(T z, t) - p(z))` at `z = z_c + t^(-gamma) x`,
/// `gamma = (beta - alpha)/(1 + alpha)`, from the full quadrature.
pub fn q_estimate(
    datum: &TailFamily,
    cs: &CriticalStructure,
    x: f64,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let (alpha, _, beta) = two_term_parts(datum)?;
    if x == 0.0 {
        return Err(invalid("x", "the zoom coordinate must be nonzero"));
    }
    let zoom = ZoomFrame::new(cs, relative_rate(beta, alpha), x, t)?;
    let z = zoom.z();
    if (z - cs.z_c).signum() != x.signum() {
        return Err(Error::AtDiscontinuity { z_c: cs.z_c });
    }
    let value = rescaled_solution(datum, &zoom.frame()?, opts)?.value;
    Ok((value - profile_p(z, cs)?) / zoom.scale())
}

/// Predicted limit of [`q_estimate`] on the side of `x`.
pub fn q_prediction(datum: &TailFamily, cs: &CriticalStructure, x: f64) -> Result<f64> {
    let (_, kappa2, beta) = two_term_parts(datum)?;
    p_correction(beta, Branch::of_sign(x), cs, kappa2)
}

/// [`q_estimate`] along a time grid, evaluated in parallel, in grid order.
pub fn q_series(
    datum: &TailFamily,
    cs: &CriticalStructure,
    x: f64,
    times: &[f64],
    opts: &QuadratureOptions,
) -> Result<Vec<(f64, f64)>> {
    times
        .par_iter()
        .map(|&t| q_estimate(datum, cs, x, t, opts).map(|q| (t, q)))
        .collect()
}

fn check_ladder(alphas: &[f64], weights: &[f64], n: usize) -> Result<()> {
    if alphas.len() != weights.len() || alphas.is_empty() {
        return Err(invalid("alphas", "exponent and weight lists must match"));
    }
    if n + 2 > alphas.len() {
        return Err(invalid(
            "n",
            format!(
                "order {n} needs at least {} summed tails, the datum has {}",
                n + 2,
                alphas.len()
            ),
        ));
    }
    Ok(())
}

/// Term `n` of the nested ladder: `w_n t^(-gamma_n) |y*(z_c)|^(-alpha_n)`
/// on the side of `x`.
pub fn nested_term(cs: &CriticalStructure, alphas: &[f64], weights: &[f64], n: usize, x: f64, t: f64) -> f64 {
    let a0 = alphas[0];
    let y = cs.y_star_at_zc(Branch::of_sign(x)).abs();
    weights[n] * t.powf(-relative_rate(alphas[n], a0)) * y.powf(-alphas[n])
}

/// `sum_{n <= N} w_n t^(-gamma_n) |y*_(+-)(z_c)|^(-alpha_n)`, side chosen by `sign(x)`.
pub fn nested_partial_sum(
    cs: &CriticalStructure,
    alphas: &[f64],
    weights: &[f64],
    n: usize,
    x: f64,
    t: f64,
) -> Result<f64> {
    check_ladder(alphas, weights, n)?;
    finite("t", t)?;
    if x == 0.0 || !x.is_finite() {
        return Err(invalid("x", "the zoom coordinate must be finite and nonzero"));
    }
    Ok((0..=n).map(|k| nested_term(cs, alphas, weights, k, x, t)).sum())
}

fn nested_parts(datum: &TailFamily) -> Result<(Vec<f64>, Vec<f64>)> {
    if datum.kind != FamilyKind::Nested {
        return Err(invalid("family", "nested_residual needs the nested family"));
    }
    Ok((datum.alphas(), datum.weights()))
}

/// Zoom frame of order `n`: `gamma_n = (alpha_n - alpha_0)/(1 + alpha_0)`.
pub fn nested_zoom(datum: &TailFamily, cs: &CriticalStructure, n: usize, x: f64, t: f64) -> Result<ZoomFrame> {
    let (alphas, _) = nested_parts(datum)?;
    let a = *alphas
        .get(n)
        .ok_or_else(|| invalid("n", format!("order {n} exceeds the ladder")))?;
    ZoomFrame::new(cs, relative_rate(a, alphas[0]), x, t)
}

/// Solution minus the order-`n` partial sum, in a given zoom frame.
pub fn nested_residual_in(
    datum: &TailFamily,
    cs: &CriticalStructure,
    n: usize,
    zoom: &ZoomFrame,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let (alphas, weights) = nested_parts(datum)?;
    let sum = nested_partial_sum(cs, &alphas, &weights, n, zoom.x, zoom.t)?;
    let value = rescaled_solution(datum, &zoom.frame()?, opts)?.value;
    Ok(value - sum)
}

/// Solution at `z_c + t^(-gamma_N) x` minus the order-`N` partial sum.
pub fn nested_residual(
    datum: &TailFamily,
    cs: &CriticalStructure,
    n: usize,
    x: f64,
    t: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let zoom = nested_zoom(datum, cs, n, x, t)?;
    nested_residual_in(datum, cs, n, &zoom, opts)
}

/// Linearized Laplace value in the order-`N` zoom frame: the one-sided
/// profile, its drift across the zoom window, and each correction tail
/// carried through the root slope `y*'(z_c)`. A diagnostic reference for
/// [`nested_partial_sum`].
pub fn nested_linearized(datum: &TailFamily, cs: &CriticalStructure, n: usize, x: f64, t: f64) -> Result<f64> {
    let (alphas, weights) = nested_parts(datum)?;
    check_ladder(&alphas, &weights, n)?;
    let zoom = nested_zoom(datum, cs, n, x, t)?;
    let branch = Branch::of_sign(x);
    let slope = y_star_prime(cs.z_c, branch, &cs.leading)?.closed_form;
    let mut value = cs.profile_at_zc(branch) + (1.0 - slope) * zoom.scale() * x;
    for k in 1..=n {
        value += slope * nested_term(cs, &alphas, &weights, k, x, t);
    }
    Ok(value)
}

/// Calibration targets for the rate and limit checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed excess of a profile-convergence slope over `-(1-a)/(2(1+a))`.
    pub profile_slope_margin: f64,
    pub min_r_squared: f64,
    /// Relative tolerance on the root-shift exponent.
    pub shift_rate_rel: f64,
    /// Relative tolerance on the root-shift prefactor.
    pub shift_coefficient_rel: f64,
    /// Relative tolerance on extrapolated correction constants.
    pub correction_rel: f64,
    /// Relative tolerance on the gap exponent.
    pub gap_rate_rel: f64,
    /// Two constants count as distinct when they differ by this many error bars.
    pub separation_factor: f64,
    /// Required overall decrease of scaled nested residuals.
    pub nested_decrease: f64,
    pub telescoping_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            profile_slope_margin: 0.05,
            min_r_squared: 0.9,
            shift_rate_rel: 0.20,
            shift_coefficient_rel: 0.10,
            correction_rel: 0.02,
            gap_rate_rel: 0.15,
            separation_factor: 3.0,
            nested_decrease: 2.0,
            telescoping_abs: 1e-13,
        }
    }
}
