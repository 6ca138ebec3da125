//! Smooth, even, positive initial data with prescribed power-law tails.
//!
//! Every tail term is realized as `kappa * (eps^2 + x^2)^(-alpha/2)`, so the
//! datum is C-infinity and the deviation from the pure power law is
//! `O(|x|^(-alpha-2))`. Three families are supported:
//!
//! * `single`: one term `kappa / |x|^alpha`;
//! * `two_term`: `kappa1 / |x|^alpha + kappa2 / |x|^beta` with
//!   `alpha < beta < (1 + alpha) / 2`;
//! * `nested`: `sum_n 2^-n / |x|^alpha_n` truncated to `n_max` terms.
//!
//! The antiderivative `F0(x) = int_0^x f0` has no closed form for general
//! exponents. It is tabulated on `[0, X_s]` and continued by the analytic
//! large-`x` expansion beyond, which is what lets the phase function be
//! evaluated at arguments of order `t^(1/(1+alpha))`.

use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Result};
use crate::quadrature::{gauss_kronrod_15, integrate_adaptive};

/// One tail term `kappa / |x|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTail {
    pub kappa: f64,
    pub alpha: f64,
}

impl PowerTail {
    pub fn new(kappa: f64, alpha: f64) -> Result<Self> {
        finite("kappa", kappa)?;
        finite("alpha", alpha)?;
        if kappa <= 0.0 {
            return Err(invalid("kappa", format!("must be positive, got {kappa}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { kappa, alpha })
    }
}

/// Which family a datum was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Single,
    TwoTerm,
    Nested,
    /// `f0 = 0`; only useful as a diagnostic.
    Zero,
}

/// Declarative description of a datum, as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Single {
        kappa: f64,
        alpha: f64,
    },
    TwoTerm {
        kappa1: f64,
        alpha: f64,
        kappa2: f64,
        beta: f64,
    },
    /// Weights are `2^-n`. `alpha_limit` is the limit of the full sequence;
    /// when absent the largest listed exponent is used.
    Nested {
        alphas: Vec<f64>,
        n_max: usize,
        alpha_limit: Option<f64>,
    },
}

impl FamilySpec {
    /// The ladder `alpha_n = limit - spread * 2^-(n-1)` for `n >= 1`, with
    /// `alpha_0` given explicitly.
    pub fn nested_ladder(alpha0: f64, limit: f64, spread: f64, n_max: usize) -> Self {
        let mut alphas = Vec::with_capacity(n_max);
        alphas.push(alpha0);
        for n in 1..n_max {
            alphas.push(limit - spread * 0.5f64.powi(n as i32 - 1));
        }
        FamilySpec::Nested {
            alphas,
            n_max,
            alpha_limit: Some(limit),
        }
    }
}

/// Value, derivative or antiderivative of the datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Value,
    Derivative,
    Antiderivative,
}

/// Large-`x` expansion coefficients of one tail's antiderivative:
/// `kappa * sum_k c_k eps^(2k) x^(1-alpha-2k) / (1-alpha-2k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterTail {
    pub kappa: f64,
    pub alpha: f64,
    pub coefficients: [f64; 3],
}

impl OuterTail {
    fn new(tail: PowerTail, eps: f64) -> Self {
        // binomial series of (1 + u)^(-alpha/2), u = eps^2 / x^2
        let m = -0.5 * tail.alpha;
        let c1 = m;
        let c2 = m * (m - 1.0) / 2.0;
        let mut coefficients = [0.0; 3];
        for (k, c) in [1.0, c1, c2].into_iter().enumerate() {
            let p = 1.0 - tail.alpha - 2.0 * k as f64;
            coefficients[k] = tail.kappa * c * eps.powi(2 * k as i32) / p;
        }
        Self {
            kappa: tail.kappa,
            alpha: tail.alpha,
            coefficients,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let lead = x.powf(1.0 - self.alpha);
        let inv2 = 1.0 / (x * x);
        lead * (self.coefficients[0] + inv2 * (self.coefficients[1] + inv2 * self.coefficients[2]))
    }
}

/// Tabulated `F0` on `[0, X_s]` plus the matched analytic continuation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AntiderivativeTable {
    pub switch_radius: f64,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    pub tail_coefficients: Vec<OuterTail>,
    matching_constant: f64,
}

impl AntiderivativeTable {
    fn empty() -> Self {
        Self {
            switch_radius: 0.0,
            nodes: vec![0.0],
            cumulative: vec![0.0],
            tail_coefficients: Vec::new(),
            matching_constant: 0.0,
        }
    }

    fn build(tails: &[PowerTail], eps: f64, value: impl Fn(f64) -> f64) -> Self {
        if tails.is_empty() {
            return Self::empty();
        }
        let switch_radius = 1.0e3 * eps.max(1.0);
        let mut nodes = Vec::new();
        let core_step = eps / 8.0;
        let mut x = 0.0;
        while x < 4.0 * eps {
            nodes.push(x);
            x += core_step;
        }
        let mut x = 4.0 * eps;
        while x < switch_radius {
            nodes.push(x);
            x *= 1.02;
        }
        nodes.push(switch_radius);
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in nodes.windows(2) {
            let seg = integrate_adaptive(&value, w[0], w[1], 1e-15, 0.0, 64);
            acc += seg.value;
            cumulative.push(acc);
        }
        let tail_coefficients: Vec<OuterTail> =
            tails.iter().map(|t| OuterTail::new(*t, eps)).collect();
        let outer_at_switch: f64 = tail_coefficients.iter().map(|o| o.eval(switch_radius)).sum();
        let matching_constant = acc - outer_at_switch;
        Self {
            switch_radius,
            nodes,
            cumulative,
            tail_coefficients,
            matching_constant,
        }
    }

    fn eval_positive(&self, x: f64, value: impl Fn(f64) -> f64) -> f64 {
        if self.tail_coefficients.is_empty() {
            return 0.0;
        }
        if x > self.switch_radius {
            let outer: f64 = self.tail_coefficients.iter().map(|o| o.eval(x)).sum();
            return self.matching_constant + outer;
        }
        let k = match self.nodes.binary_search_by(|n| n.total_cmp(&x)) {
            Ok(k) => return self.cumulative[k],
            Err(k) => k - 1,
        };
        let mut f = value;
        let (partial, _) = gauss_kronrod_15(self.nodes[k], x, &mut f);
        self.cumulative[k] + partial
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Compactly supported even bump `amplitude * (1 - x^2/w^2)^4` on `|x| < w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub amplitude: f64,
    pub width: f64,
}

impl Bump {
    fn value(&self, x: f64) -> f64 {
        let u = x / self.width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - u * u).powi(4)
    }

    fn derivative(&self, x: f64) -> f64 {
        let u = x / self.width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        -8.0 * self.amplitude * u / self.width * (1.0 - u * u).powi(3)
    }

    fn antiderivative(&self, x: f64) -> f64 {
        let u = (x / self.width).clamp(-1.0, 1.0);
        let u2 = u * u;
        let poly = u * (1.0 + u2 * (-4.0 / 3.0 + u2 * (6.0 / 5.0 + u2 * (-4.0 / 7.0 + u2 / 9.0))));
        self.amplitude * self.width * poly
    }
}

/// A concrete initial datum. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFamily {
    pub kind: FamilyKind,
    /// Terms ordered by strictly increasing exponent.
    pub tails: Vec<PowerTail>,
    pub core_scale: f64,
    pub truncation_count: usize,
    /// Limit of the exponent sequence (nested family only).
    pub alpha_limit: Option<f64>,
    scaling_alpha: f64,
    bump: Option<Bump>,
    #[serde(skip)]
    table: AntiderivativeTable,
}

impl TailFamily {
    /// Builds and validates a datum from its specification.
    pub fn construct(spec: &FamilySpec, core_scale: f64) -> Result<Self> {
        finite("eps", core_scale)?;
        if core_scale <= 0.0 {
            return Err(invalid("eps", format!("must be positive, got {core_scale}")));
        }
        let (kind, tails, alpha_limit) = match spec {
            FamilySpec::Single { kappa, alpha } => {
                (FamilyKind::Single, vec![PowerTail::new(*kappa, *alpha)?], None)
            }
            FamilySpec::TwoTerm {
                kappa1,
                alpha,
                kappa2,
                beta,
            } => {
                let lead = PowerTail::new(*kappa1, *alpha)?;
                let kappa2 = finite("kappa2", *kappa2)?;
                if kappa2 <= 0.0 {
                    return Err(invalid("kappa2", format!("must be positive, got {kappa2}")));
                }
                check_beta(*alpha, *beta)?;
                (
                    FamilyKind::TwoTerm,
                    vec![lead, PowerTail { kappa: kappa2, alpha: *beta }],
                    None,
                )
            }
            FamilySpec::Nested {
                alphas,
                n_max,
                alpha_limit,
            } => {
                let (tails, limit) = nested_tails(alphas, *n_max, *alpha_limit)?;
                (FamilyKind::Nested, tails, Some(limit))
            }
        };
        Ok(Self::assemble(kind, tails, core_scale, alpha_limit, None))
    }

    /// The datum `f0 = 0`, framed with scaling exponent `alpha`.
    pub fn zero(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        let mut datum = Self::assemble(FamilyKind::Zero, Vec::new(), 1.0, None, None);
        datum.scaling_alpha = alpha;
        Ok(datum)
    }

    /// Adds a compactly supported non-negative bump to the datum.
    pub fn with_bump(self, amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(invalid("bump_amplitude", "must be finite and non-negative"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("bump_width", "must be finite and positive"));
        }
        Ok(Self::assemble(
            self.kind,
            self.tails,
            self.core_scale,
            self.alpha_limit,
            Some(Bump { amplitude, width }),
        ))
    }

    fn assemble(
        kind: FamilyKind,
        tails: Vec<PowerTail>,
        core_scale: f64,
        alpha_limit: Option<f64>,
        bump: Option<Bump>,
    ) -> Self {
        let scaling_alpha = tails.first().map(|t| t.alpha).unwrap_or(0.5);
        let truncation_count = tails.len();
        let table = {
            let tails_ref = &tails;
            AntiderivativeTable::build(tails_ref, core_scale, |x| {
                tails_value(tails_ref, core_scale, x)
            })
        };
        Self {
            kind,
            tails,
            core_scale,
            truncation_count,
            alpha_limit,
            scaling_alpha,
            bump,
            table,
        }
    }

    /// Exponent of the leading tail, which sets the self-similar scaling.
    pub fn scaling_alpha(&self) -> f64 {
        self.scaling_alpha
    }

    /// Amplitude of the leading tail (0 for the zero datum).
    pub fn leading_kappa(&self) -> f64 {
        self.tails.first().map(|t| t.kappa).unwrap_or(0.0)
    }

    pub fn leading(&self) -> Option<PowerTail> {
        self.tails.first().copied()
    }

    pub fn table(&self) -> &AntiderivativeTable {
        &self.table
    }

    /// `f0(x)`.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let mut v = tails_value(&self.tails, self.core_scale, x);
        if let Some(b) = &self.bump {
            v += b.value(x);
        }
        v
    }

    /// `f0'(x)`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let r2 = self.core_scale * self.core_scale + x * x;
        let log_r2 = r2.ln();
        let mut s = 0.0;
        for t in &self.tails {
            s += t.alpha * t.kappa * (-0.5 * t.alpha * log_r2).exp();
        }
        let mut d = -x / r2 * s;
        if let Some(b) = &self.bump {
            d += b.derivative(x);
        }
        d
    }

    /// `F0(x) = int_0^x f0`, odd in `x`.
    #[inline]
    pub fn antiderivative(&self, x: f64) -> f64 {
        let tails = &self.tails;
        let eps = self.core_scale;
        let mag = self
            .table
            .eval_positive(x.abs(), |s| tails_value(tails, eps, s));
        let mut v = if x < 0.0 { -mag } else { mag };
        if let Some(b) = &self.bump {
            v += b.antiderivative(x);
        }
        v
    }

    /// Channel dispatch with input validation.
    pub fn evaluate(&self, x: f64, channel: Channel) -> Result<f64> {
        let x = finite("x", x)?;
        Ok(match channel {
            Channel::Value => self.value(x),
            Channel::Derivative => self.derivative(x),
            Channel::Antiderivative => self.antiderivative(x),
        })
    }

    /// `f0(x) - sum_n kappa_n |x|^-alpha_n` for `|x| >= 1`.
    pub fn tail_residual(&self, x: f64) -> Result<f64> {
        let x = finite("x", x)?;
        if x.abs() < 1.0 {
            return Err(invalid("x", format!("tail residual needs |x| >= 1, got {x}")));
        }
        let u = (self.core_scale / x).powi(2);
        let lu = u.ln_1p();
        let mut r = 0.0;
        for t in &self.tails {
            r += t.kappa * x.abs().powf(-t.alpha) * (-0.5 * t.alpha * lu).exp_m1();
        }
        if let Some(b) = &self.bump {
            r += b.value(x);
        }
        Ok(r)
    }

    /// The exponents of the datum's terms.
    pub fn alphas(&self) -> Vec<f64> {
        self.tails.iter().map(|t| t.alpha).collect()
    }

    /// The amplitudes of the datum's terms.
    pub fn weights(&self) -> Vec<f64> {
        self.tails.iter().map(|t| t.kappa).collect()
    }
}

#[inline]
fn tails_value(tails: &[PowerTail], eps: f64, x: f64) -> f64 {
    match tails {
        [] => 0.0,
        [t] => t.kappa * (eps * eps + x * x).powf(-0.5 * t.alpha),
        _ => {
            let log_r2 = (eps * eps + x * x).ln();
            tails
                .iter()
                .map(|t| t.kappa * (-0.5 * t.alpha * log_r2).exp())
                .sum()
        }
    }
}

/// Checks `alpha < beta < (1 + alpha) / 2`.
pub fn check_beta(alpha: f64, beta: f64) -> Result<()> {
    finite("beta", beta)?;
    let upper = 0.5 * (1.0 + alpha);
    if !(beta > alpha && beta < upper) {
        return Err(invalid(
            "beta",
            format!("must lie in the open interval ({alpha}, {upper}) = (alpha, (1+alpha)/2), got {beta}"),
        ));
    }
    Ok(())
}

fn nested_tails(
    alphas: &[f64],
    n_max: usize,
    alpha_limit: Option<f64>,
) -> Result<(Vec<PowerTail>, f64)> {
    if n_max < 2 {
        return Err(invalid("n_max", format!("nested family needs n_max >= 2, got {n_max}")));
    }
    if alphas.len() < n_max {
        return Err(invalid(
            "alphas",
            format!("{} exponents listed but n_max = {n_max}", alphas.len()),
        ));
    }
    let used = &alphas[..n_max];
    for (n, a) in used.iter().enumerate() {
        if !(a.is_finite() && *a > 0.0 && *a < 1.0) {
            return Err(invalid("alphas", format!("alpha_{n} = {a} outside (0, 1)")));
        }
        if n > 0 && *a <= used[n - 1] {
            return Err(invalid(
                "alphas",
                format!("sequence must be strictly increasing: alpha_{n} = {a} <= alpha_{} = {}", n - 1, used[n - 1]),
            ));
        }
    }
    let alpha0 = used[0];
    let top = used[n_max - 1];
    let limit = alpha_limit.unwrap_or(top);
    if !(limit.is_finite() && limit >= top && limit < 1.0) {
        return Err(invalid(
            "alpha_limit",
            format!("must satisfy max(alphas) = {top} <= alpha_limit < 1, got {limit}"),
        ));
    }
    let ceiling = 0.5 * (1.0 + alpha0);
    if limit > ceiling {
        return Err(invalid(
            "alphas",
            format!("alpha_n must stay below (1 + alpha_0)/2 = {ceiling}; limit is {limit}"),
        ));
    }
    if let Some((n, a)) = used.iter().enumerate().skip(1).find(|(_, a)| **a >= ceiling) {
        return Err(invalid(
            "alphas",
            format!("alpha_{n} = {a} violates alpha_n < (1 + alpha_0)/2 = {ceiling}"),
        ));
    }
    let floor = 0.5 * (limit + alpha0);
    if used[1] <= floor {
        return Err(invalid(
            "alphas",
            format!("alpha_1 = {} must exceed (alpha_inf + alpha_0)/2 = {floor}", used[1]),
        ));
    }
    let tails = used
        .iter()
        .enumerate()
        .map(|(n, a)| PowerTail {
            kappa: 0.5f64.powi(n as i32),
            alpha: *a,
        })
        .collect();
    Ok((tails, limit))
}
