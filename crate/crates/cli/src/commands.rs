use crate::config::{ConfigError, FamilyName, RunConfig, Study};
use crate::output::{emit, Cell, Csv};
use burgers_core::asymptotics::{
    extrapolate, geometric_times, nested_partial_sum, nested_zoom, rate_fit, relative_rate,
    zoom_limit, ZoomFrame,
};
use burgers_core::critical::{
    branch_shift_coefficient, branch_shift_coefficient_published, dominance_switch_offset,
    finite_t_maxima, p_correction, p_correction_published,
};
use burgers_core::hopf_cole::rescaled_solution;
use burgers_core::landscape::Frame;
use burgers_core::pde_oracle::{integrate, sample, OracleGrid};
use burgers_core::{
    find_zc, max_gap, profile_p, scan_landscape, Branch, CriticalStructure, Error as CoreError,
    LeadingTail, QuadratureOptions, TailFamily,
};
use rayon::prelude::*;
use serde::Serialize;

pub enum Failure {
    Config(ConfigError),
    Numerical(CoreError),
    Io(std::io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure::Numerical(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

/// Output settings shared by every subcommand.
pub struct Sink<'a> {
    pub dir: Option<&'a str>,
    pub csv_stdout: bool,
    pub hash: String,
}

impl Sink<'_> {
    fn csv(&self, command: &str, header: &[&str]) -> Csv {
        Csv::new(command, &self.hash, header)
    }

    fn emit<T: Serialize>(&self, command: &str, summary: &T, csv: Option<Csv>) -> Outcome {
        emit(command, summary, csv, self.dir, self.csv_stdout)?;
        Ok(())
    }
}

fn finite(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("must be finite, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("must be positive and finite, got {v}")))
    }
}

fn times(section: &str, t_min: f64, t_max: f64, per_decade: usize) -> Result<Vec<f64>, ConfigError> {
    positive(&format!("{section}.t_min"), t_min)?;
    positive(&format!("{section}.t_max"), t_max)?;
    if t_max <= t_min {
        return Err(ConfigError::new(format!("{section}.t_max"), "must exceed t_min"));
    }
    if per_decade == 0 {
        return Err(ConfigError::new(format!("{section}.per_decade"), "must be at least 1"));
    }
    let ts = geometric_times(t_min, t_max, per_decade)
        .map_err(|e| ConfigError::from_core(section, e))?;
    if ts.len() < 4 {
        return Err(ConfigError::new(
            format!("{section}.per_decade"),
            format!("the grid has {} times, rate fits need 4", ts.len()),
        ));
    }
    Ok(ts)
}

fn nonzero_list(key: &str, xs: &[f64]) -> Result<(), ConfigError> {
    if xs.is_empty() {
        return Err(ConfigError::new(key, "must not be empty"));
    }
    for &x in xs {
        if !x.is_finite() || x == 0.0 {
            return Err(ConfigError::new(key, format!("entries must be finite and nonzero, got {x}")));
        }
    }
    Ok(())
}

fn quadrature(cfg: &RunConfig) -> Result<QuadratureOptions, ConfigError> {
    cfg.quadrature
        .validate()
        .map_err(|e| ConfigError::from_core("quadrature", e))?;
    Ok(cfg.quadrature)
}

fn leading(cfg: &RunConfig) -> Result<LeadingTail, ConfigError> {
    LeadingTail::new(cfg.datum.kappa1, cfg.datum.alpha).map_err(|e| ConfigError::from_core("datum", e))
}

fn check_beta(key: &str, alpha: f64, beta: f64) -> Result<(), ConfigError> {
    let upper = 0.5 * (1.0 + alpha);
    if beta > alpha && beta < upper {
        Ok(())
    } else {
        Err(ConfigError::new(
            key,
            format!("{beta} lies outside ({alpha}, {upper}) = (alpha, (1+alpha)/2)"),
        ))
    }
}

/// Checks the whole configuration for one subcommand without computing.
pub fn validate(command: &str, cfg: &RunConfig) -> Result<(), ConfigError> {
    quadrature(cfg)?;
    match command {
        "solve" => {
            cfg.datum.build(cfg.datum.family)?;
            solve_plan(cfg).map(|_| ())
        }
        "landscape" => {
            cfg.datum.build(cfg.datum.family)?;
            let l = &cfg.landscape;
            finite("landscape.z", l.z)?;
            positive("landscape.t", l.t)?;
            positive("landscape.exclusion_radius", l.exclusion_radius)?;
            if let Some(r) = l.resolution {
                positive("landscape.resolution", r)?;
            }
            landscape_window(cfg).map(|_| ())
        }
        "critical" => {
            let l = leading(cfg)?;
            positive("datum.kappa2", cfg.datum.kappa2)?;
            if cfg.critical.betas.is_empty() {
                return Err(ConfigError::new("critical.betas", "must not be empty"));
            }
            for &b in &cfg.critical.betas {
                check_beta("critical.betas", l.alpha, b)?;
            }
            Ok(())
        }
        "rates" => {
            let r = &cfg.rates;
            times("rates", r.t_min, r.t_max, r.per_decade)?;
            positive("rates.exclusion_radius", r.exclusion_radius)?;
            match r.study {
                Study::Profile => {
                    cfg.datum.build(cfg.datum.family)?;
                    nonzero_list("rates.offsets", &r.offsets)
                }
                Study::Shift => cfg.datum.build(FamilyName::TwoTerm).map(|_| ()),
                Study::Gap => {
                    cfg.datum.build(FamilyName::TwoTerm)?;
                    nonzero_list("rates.x", &[r.x])
                }
            }
        }
        "prop11" => {
            cfg.datum.build(FamilyName::TwoTerm)?;
            let p = &cfg.prop11;
            nonzero_list("prop11.xs", &p.xs)?;
            times("prop11", p.t_min, p.t_max, p.per_decade).map(|_| ())
        }
        "thm12" => {
            let d = cfg.datum.build(FamilyName::Nested)?;
            let t = &cfg.thm12;
            if t.order + 2 > d.alphas().len() {
                return Err(ConfigError::new(
                    "thm12.order",
                    format!("order {} needs {} summed tails, the datum has {}", t.order, t.order + 2, d.alphas().len()),
                ));
            }
            let gamma = relative_rate(d.alphas()[t.order], d.alphas()[0]);
            if gamma >= zoom_limit(d.alphas()[0]) {
                return Err(ConfigError::new("thm12.order", "zoom rate exceeds (1 - alpha)/(2 (1 + alpha))"));
            }
            nonzero_list("thm12.xs", &t.xs)?;
            times("thm12", t.t_min, t.t_max, t.per_decade).map(|_| ())
        }
        "oracle" => {
            let datum = cfg.datum.build(cfg.datum.family)?;
            let grid = oracle_grid(cfg)?;
            let o = &cfg.oracle;
            positive("oracle.t_final", o.t_final)?;
            let needed = 10.0 * o.t_final.sqrt() + 20.0;
            if grid.half_width < needed {
                return Err(ConfigError::new(
                    "oracle.half_width",
                    format!("{} is below 10 sqrt(t_final) + 20 = {needed}", grid.half_width),
                ));
            }
            let max_abs = grid.nodes().iter().fold(0.0f64, |m, &x| m.max(datum.value(x).abs()));
            let limit = grid.max_stable_dt(max_abs);
            if grid.dt > limit {
                return Err(ConfigError::new("oracle.dt", format!("{} exceeds the stable step {limit}", grid.dt)));
            }
            for &s in &o.snapshots {
                if !(s > 0.0 && s < o.t_final) {
                    return Err(ConfigError::new("oracle.snapshots", format!("{s} lies outside (0, t_final)")));
                }
            }
            Ok(())
        }
        "profile-plot-data" => {
            let d = cfg.datum.build(cfg.datum.family)?;
            LeadingTail::of_datum(&d).map_err(|e| ConfigError::from_core("datum", e))?;
            let p = &cfg.profile_plot;
            positive("profile_plot.t", p.t)?;
            if p.nz < 2 {
                return Err(ConfigError::new("profile_plot.nz", "must be at least 2"));
            }
            for (k, v) in [("profile_plot.z_min", p.z_min), ("profile_plot.z_max", p.z_max)] {
                if let Some(v) = v {
                    finite(k, v)?;
                }
            }
            if let (Some(a), Some(b)) = (p.z_min, p.z_max) {
                if a >= b {
                    return Err(ConfigError::new("profile_plot.z_max", "must exceed z_min"));
                }
            }
            Ok(())
        }
        other => Err(ConfigError::new("command", format!("unknown subcommand {other}"))),
    }
}

pub fn run(command: &str, cfg: &RunConfig, sink: &Sink) -> Outcome {
    validate(command, cfg)?;
    match command {
        "solve" => solve(cfg, sink),
        "landscape" => landscape(cfg, sink),
        "critical" => critical(cfg, sink),
        "rates" => rates(cfg, sink),
        "prop11" => prop11(cfg, sink),
        "thm12" => thm12(cfg, sink),
        "oracle" => oracle(cfg, sink),
        "profile-plot-data" => profile_plot(cfg, sink),
        _ => unreachable!("validated above"),
    }
}

enum SolvePlan {
    Rescaled(f64),
    Physical(f64),
    Sweep(Vec<f64>),
}

fn solve_plan(cfg: &RunConfig) -> Result<SolvePlan, ConfigError> {
    let s = &cfg.solve;
    positive("solve.t", s.t)?;
    match (s.z_min, s.z_max, s.nz) {
        (None, None, None) => match s.x {
            Some(x) => Ok(SolvePlan::Physical(finite("solve.x", x)?)),
            None => Ok(SolvePlan::Rescaled(finite("solve.z", s.z)?)),
        },
        (Some(a), Some(b), Some(n)) => {
            finite("solve.z_min", a)?;
            finite("solve.z_max", b)?;
            if b <= a {
                return Err(ConfigError::new("solve.z_max", "must exceed z_min"));
            }
            if n < 2 {
                return Err(ConfigError::new("solve.nz", "must be at least 2"));
            }
            Ok(SolvePlan::Sweep(
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            ))
        }
        _ => Err(ConfigError::new("solve.nz", "a sweep needs z_min, z_max and nz together")),
    }
}

#[derive(Serialize)]
struct FrameSummary {
    t: f64,
    z: f64,
    space_scale: f64,
    amplitude_scale: f64,
    laplace_parameter: f64,
}

impl From<&Frame> for FrameSummary {
    fn from(f: &Frame) -> Self {
        Self {
            t: f.t(),
            z: f.z(),
            space_scale: f.space_scale(),
            amplitude_scale: f.amplitude_scale(),
            laplace_parameter: f.laplace_parameter(),
        }
    }
}

fn solve(cfg: &RunConfig, sink: &Sink) -> Outcome {
    #[derive(Serialize)]
    struct Point {
        value: f64,
        error_estimate: f64,
        levels: u32,
        #[serde(skip_serializing_if = "Option::is_none")]
        x: Option<f64>,
        frame: FrameSummary,
    }
    #[derive(Serialize)]
    struct Sweep {
        t: f64,
        nz: usize,
        max_error_estimate: f64,
    }
    let datum = cfg.datum.build(cfg.datum.family)?;
    let opts = quadrature(cfg)?;
    let t = cfg.solve.t;
    let base = Frame::for_datum(&datum, t, 0.0)?;
    match solve_plan(cfg)? {
        SolvePlan::Rescaled(z) => {
            let f = base.with_z(z)?;
            let s = rescaled_solution(&datum, &f, &opts)?;
            let summary = Point {
                value: s.value,
                error_estimate: s.error_estimate,
                levels: s.levels,
                x: None,
                frame: (&f).into(),
            };
            sink.emit("solve", &summary, None)
        }
        SolvePlan::Physical(x) => {
            let f = base.with_z(x / base.space_scale())?;
            let s = rescaled_solution(&datum, &f, &opts)?;
            let a = f.amplitude_scale();
            let summary = Point {
                value: s.value / a,
                error_estimate: s.error_estimate / a,
                levels: s.levels,
                x: Some(x),
                frame: (&f).into(),
            };
            sink.emit("solve", &summary, None)
        }
        SolvePlan::Sweep(zs) => {
            let samples = zs
                .par_iter()
                .map(|&z| rescaled_solution(&datum, &base.with_z(z)?, &opts))
                .collect::<Result<Vec<_>, _>>()?;
            let mut csv = sink.csv("solve", &["z", "value", "error_estimate", "levels"]);
            for (z, s) in zs.iter().zip(&samples) {
                csv.row(&[Cell::Num(*z), Cell::Num(s.value), Cell::Num(s.error_estimate), Cell::Int(s.levels as i64)]);
            }
            let summary = Sweep {
                t,
                nz: zs.len(),
                max_error_estimate: samples.iter().map(|s| s.error_estimate).fold(0.0, f64::max),
            };
            sink.emit("solve", &summary, Some(csv))
        }
    }
}

fn landscape_window(cfg: &RunConfig) -> Result<Option<(f64, f64)>, ConfigError> {
    let l = &cfg.landscape;
    match (l.y_min, l.y_max) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) => {
            finite("landscape.y_min", a)?;
            finite("landscape.y_max", b)?;
            if b <= a {
                return Err(ConfigError::new("landscape.y_max", "must exceed y_min"));
            }
            Ok(Some((a, b)))
        }
        _ => Err(ConfigError::new("landscape.y_max", "give both y_min and y_max, or neither")),
    }
}

fn landscape(cfg: &RunConfig, sink: &Sink) -> Outcome {
    #[derive(Serialize)]
    struct Summary<'a> {
        report: &'a burgers_core::LandscapeReport,
        global_max: burgers_core::CriticalPoint,
        max_gap: f64,
        exclusion_radius: f64,
    }
    let datum = cfg.datum.build(cfg.datum.family)?;
    let l = &cfg.landscape;
    let frame = Frame::for_datum(&datum, l.t, l.z)?;
    let report = scan_landscape(&datum, &frame, landscape_window(cfg)?, l.resolution)?;
    let gap = max_gap(&report, l.exclusion_radius)?;
    let mut csv = sink.csv("landscape", &["y", "h"]);
    for (y, h) in report.samples() {
        csv.row(&[Cell::Num(y), Cell::Num(h)]);
    }
    let summary = Summary {
        report: &report,
        global_max: *report.global_max(),
        max_gap: gap,
        exclusion_radius: l.exclusion_radius,
    };
    sink.emit("landscape", &summary, Some(csv))
}

fn critical(cfg: &RunConfig, sink: &Sink) -> Outcome {
    #[derive(Serialize)]
    struct Correction {
        beta: f64,
        p_minus: f64,
        p_plus: f64,
        p_minus_published: f64,
        p_plus_published: f64,
        switch_offset: f64,
    }
    #[derive(Serialize)]
    struct Summary {
        kappa1: f64,
        alpha: f64,
        z_c: f64,
        y_star_minus: f64,
        y_star_plus: f64,
        profile_minus: f64,
        profile_plus: f64,
        half_jump: f64,
        m_plus: f64,
        fold_point: f64,
        kappa2: f64,
        corrections: Vec<Correction>,
    }
    let l = leading(cfg)?;
    let cs = find_zc(&l)?;
    let k2 = cfg.datum.kappa2;
    let corrections = cfg
        .critical
        .betas
        .iter()
        .map(|&beta| {
            Ok(Correction {
                beta,
                p_minus: p_correction(beta, Branch::Minus, &cs, k2)?,
                p_plus: p_correction(beta, Branch::Plus, &cs, k2)?,
                p_minus_published: p_correction_published(beta, Branch::Minus, &cs, k2)?,
                p_plus_published: p_correction_published(beta, Branch::Plus, &cs, k2)?,
                switch_offset: dominance_switch_offset(&cs, k2, beta),
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;
    let mut csv = sink.csv(
        "critical",
        &["beta", "p_minus", "p_plus", "p_minus_published", "p_plus_published", "switch_offset"],
    );
    for c in &corrections {
        csv.row(&[
            c.beta.into(),
            c.p_minus.into(),
            c.p_plus.into(),
            c.p_minus_published.into(),
            c.p_plus_published.into(),
            c.switch_offset.into(),
        ]);
    }
    let summary = Summary {
        kappa1: l.kappa1,
        alpha: l.alpha,
        z_c: cs.z_c,
        y_star_minus: cs.y_star_minus_at_zc,
        y_star_plus: cs.y_star_plus_at_zc,
        profile_minus: cs.profile_at_zc(Branch::Minus),
        profile_plus: cs.profile_at_zc(Branch::Plus),
        half_jump: cs.half_jump(),
        m_plus: cs.m_plus,
        fold_point: l.fold_point(),
        kappa2: k2,
        corrections,
    };
    sink.emit("critical", &summary, Some(csv))
}

fn structure_of(datum: &TailFamily) -> Result<CriticalStructure, CoreError> {
    find_zc(&LeadingTail::of_datum(datum)?)
}

#[derive(Serialize)]
struct Fit {
    slope: f64,
    r2: f64,
}

fn fit(points: &[(f64, f64)]) -> Option<Fit> {
    rate_fit(points).ok().map(|f| Fit {
        slope: f.slope,
        r2: f.r_squared,
    })
}

fn rates(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let r = &cfg.rates;
    let ts = times("rates", r.t_min, r.t_max, r.per_decade)?;
    let tol = &cfg.tolerances;
    match r.study {
        Study::Profile => {
            #[derive(Serialize)]
            struct Row {
                offset: f64,
                slope: Option<f64>,
                r2: Option<f64>,
                predicted_slope: f64,
                pass: bool,
            }
            let datum = cfg.datum.build(cfg.datum.family)?;
            let opts = quadrature(cfg)?;
            let cs = structure_of(&datum)?;
            let a0 = cs.leading.alpha;
            let predicted = -(1.0 - a0) / (2.0 * (1.0 + a0));
            let mut csv = sink.csv("rates", &["t", "offset", "value", "error"]);
            let mut rows = Vec::new();
            for &off in &r.offsets {
                let z = cs.z_c + off;
                let p = profile_p(z, &cs)?;
                let values = ts
                    .par_iter()
                    .map(|&t| Ok(rescaled_solution(&datum, &Frame::for_datum(&datum, t, z)?, &opts)?.value))
                    .collect::<Result<Vec<f64>, CoreError>>()?;
                let pts: Vec<(f64, f64)> = ts.iter().zip(&values).map(|(&t, &v)| (t, (v - p).abs())).collect();
                for ((t, e), v) in pts.iter().zip(&values) {
                    csv.row(&[(*t).into(), off.into(), (*v).into(), (*e).into()]);
                }
                let f = fit(&pts);
                let pass = f
                    .as_ref()
                    .is_some_and(|f| f.slope <= predicted + tol.profile_slope_margin && f.r2 >= tol.min_r_squared);
                rows.push(Row {
                    offset: off,
                    slope: f.as_ref().map(|f| f.slope),
                    r2: f.as_ref().map(|f| f.r2),
                    predicted_slope: predicted,
                    pass,
                });
            }
            sink.emit("rates", &rows, Some(csv))
        }
        Study::Shift => {
            #[derive(Serialize)]
            struct Summary {
                fit: Option<Fit>,
                predicted_slope: f64,
                prefactor_at_t_max: f64,
                coefficient: f64,
                coefficient_published: f64,
                rate_pass: bool,
                coefficient_pass: bool,
            }
            let datum = cfg.datum.build(FamilyName::TwoTerm)?;
            let cs = structure_of(&datum)?;
            let (a0, beta, k2) = (cfg.datum.alpha, cfg.datum.beta, cfg.datum.kappa2);
            let gamma = relative_rate(beta, a0);
            let shifts = ts
                .par_iter()
                .map(|&t| Ok(finite_t_maxima(&datum, cs.z_c, t)?.y_minus() - cs.y_star_minus_at_zc))
                .collect::<Result<Vec<f64>, CoreError>>()?;
            let mut csv = sink.csv("rates", &["t", "shift", "scaled"]);
            for (&t, &s) in ts.iter().zip(&shifts) {
                csv.row(&[t.into(), s.into(), (s * t.powf(gamma)).into()]);
            }
            let pts: Vec<(f64, f64)> = ts.iter().zip(&shifts).map(|(&t, &s)| (t, s.abs())).collect();
            let f = fit(&pts);
            let t_end = *ts.last().expect("nonempty grid");
            let prefactor = shifts.last().expect("nonempty grid") * t_end.powf(gamma);
            let c = branch_shift_coefficient(cs.z_c, Branch::Minus, &cs.leading, k2, beta)?;
            let summary = Summary {
                rate_pass: f.as_ref().is_some_and(|f| {
                    ((f.slope + gamma) / gamma).abs() <= tol.shift_rate_rel && f.r2 >= tol.min_r_squared
                }),
                fit: f,
                predicted_slope: -gamma,
                prefactor_at_t_max: prefactor,
                coefficient: c,
                coefficient_published: branch_shift_coefficient_published(cs.z_c, Branch::Minus, &cs.leading, k2, beta)?,
                coefficient_pass: ((prefactor - c) / c).abs() <= tol.shift_coefficient_rel,
            };
            sink.emit("rates", &summary, Some(csv))
        }
        Study::Gap => {
            #[derive(Serialize)]
            struct Summary {
                x: f64,
                fit: Option<Fit>,
                predicted_slope: f64,
                switch_offset: f64,
                plus_dominant_fraction: f64,
                pass: bool,
            }
            let datum = cfg.datum.build(FamilyName::TwoTerm)?;
            let cs = structure_of(&datum)?;
            let (beta, k2) = (cfg.datum.beta, cfg.datum.kappa2);
            let gamma = relative_rate(beta, cfg.datum.alpha);
            let rows = ts
                .par_iter()
                .map(|&t| {
                    let f = Frame::for_datum(&datum, t, cs.z_c + t.powf(-gamma) * r.x)?;
                    let rep = scan_landscape(&datum, &f, None, None)?;
                    Ok((max_gap(&rep, r.exclusion_radius)?, rep.global_max().y > 0.0))
                })
                .collect::<Result<Vec<(f64, bool)>, CoreError>>()?;
            let mut csv = sink.csv("rates", &["t", "x", "gap", "dominant"]);
            for (&t, &(g, plus)) in ts.iter().zip(&rows) {
                csv.row(&[t.into(), r.x.into(), g.into(), Cell::Int(if plus { 1 } else { -1 })]);
            }
            let pts: Vec<(f64, f64)> = ts.iter().zip(&rows).map(|(&t, &(g, _))| (t, g)).collect();
            let f = fit(&pts);
            let summary = Summary {
                x: r.x,
                pass: f.as_ref().is_some_and(|f| {
                    ((f.slope + gamma) / gamma).abs() <= tol.gap_rate_rel && f.r2 >= tol.min_r_squared
                }),
                fit: f,
                predicted_slope: -gamma,
                switch_offset: dominance_switch_offset(&cs, k2, beta),
                plus_dominant_fraction: rows.iter().filter(|r| r.1).count() as f64 / rows.len() as f64,
            };
            sink.emit("rates", &summary, Some(csv))
        }
    }
}

#[derive(Serialize)]
struct SeriesSummary {
    x: f64,
    extrapolated_limit: Option<f64>,
    error_bar: Option<f64>,
    theta: Option<f64>,
    predicted: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_published: Option<f64>,
    rel_error: Option<f64>,
    slope: Option<f64>,
    r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decrease_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monotone: Option<bool>,
    pass: bool,
}

fn prop11(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let datum = cfg.datum.build(FamilyName::TwoTerm)?;
    let opts = quadrature(cfg)?;
    let cs = structure_of(&datum)?;
    let p = &cfg.prop11;
    let ts = times("prop11", p.t_min, p.t_max, p.per_decade)?;
    let (beta, k2) = (cfg.datum.beta, cfg.datum.kappa2);
    let gamma = relative_rate(beta, cfg.datum.alpha);
    let mut csv = sink.csv("prop11", &["t", "x", "raw", "scaled", "predicted"]);
    let mut out = Vec::new();
    for &x in &p.xs {
        let branch = Branch::of_sign(x);
        let predicted = p_correction(beta, branch, &cs, k2)?;
        let rows = ts
            .par_iter()
            .map(|&t| {
                let zoom = ZoomFrame::new(&cs, gamma, x, t)?;
                let raw = rescaled_solution(&datum, &zoom.frame()?, &opts)?.value;
                Ok((raw, (raw - profile_p(zoom.z(), &cs)?) / zoom.scale()))
            })
            .collect::<Result<Vec<(f64, f64)>, CoreError>>()?;
        for (&t, &(raw, q)) in ts.iter().zip(&rows) {
            csv.row(&[t.into(), x.into(), raw.into(), q.into(), predicted.into()]);
        }
        let series: Vec<(f64, f64)> = ts.iter().zip(&rows).map(|(&t, &(_, q))| (t, q)).collect();
        let e = extrapolate(&series).ok();
        let gaps: Vec<(f64, f64)> = series.iter().map(|&(t, q)| (t, (q - predicted).abs())).collect();
        let f = fit(&gaps);
        let rel = e.map(|e| ((e.limit - predicted) / predicted).abs());
        out.push(SeriesSummary {
            x,
            extrapolated_limit: e.map(|e| e.limit),
            error_bar: e.map(|e| e.error_bar),
            theta: e.map(|e| e.theta),
            predicted,
            predicted_published: Some(p_correction_published(beta, branch, &cs, k2)?),
            rel_error: rel,
            slope: f.as_ref().map(|f| f.slope),
            r2: f.as_ref().map(|f| f.r2),
            decrease_ratio: None,
            monotone: None,
            pass: rel.is_some_and(|r| r <= cfg.tolerances.correction_rel),
        });
    }
    sink.emit("prop11", &out, Some(csv))
}

fn thm12(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let datum = cfg.datum.build(FamilyName::Nested)?;
    let opts = quadrature(cfg)?;
    let cs = structure_of(&datum)?;
    let p = &cfg.thm12;
    let ts = times("thm12", p.t_min, p.t_max, p.per_decade)?;
    let (alphas, weights) = (datum.alphas(), datum.weights());
    let n = p.order;
    let gamma = relative_rate(alphas[n], alphas[0]);
    let mut csv = sink.csv("thm12", &["t", "x", "raw", "scaled", "predicted"]);
    let mut out = Vec::new();
    for &x in &p.xs {
        let rows = ts
            .par_iter()
            .map(|&t| {
                let zoom = nested_zoom(&datum, &cs, n, x, t)?;
                let raw = rescaled_solution(&datum, &zoom.frame()?, &opts)?.value;
                let sum = nested_partial_sum(&cs, &alphas, &weights, n, x, t)?;
                Ok((raw, t.powf(gamma) * (raw - sum), sum))
            })
            .collect::<Result<Vec<(f64, f64, f64)>, CoreError>>()?;
        for (&t, &(raw, scaled, sum)) in ts.iter().zip(&rows) {
            csv.row(&[t.into(), x.into(), raw.into(), scaled.into(), sum.into()]);
        }
        let series: Vec<(f64, f64)> = ts.iter().zip(&rows).map(|(&t, r)| (t, r.1)).collect();
        let abs: Vec<(f64, f64)> = series.iter().map(|&(t, s)| (t, s.abs())).collect();
        let monotone = abs.windows(2).all(|w| w[1].1 < w[0].1);
        let ratio = abs[0].1 / abs[abs.len() - 1].1;
        let e = extrapolate(&series).ok();
        let f = fit(&abs);
        out.push(SeriesSummary {
            x,
            extrapolated_limit: e.map(|e| e.limit),
            error_bar: e.map(|e| e.error_bar),
            theta: e.map(|e| e.theta),
            predicted: 0.0,
            predicted_published: None,
            rel_error: None,
            slope: f.as_ref().map(|f| f.slope),
            r2: f.as_ref().map(|f| f.r2),
            decrease_ratio: Some(ratio),
            monotone: Some(monotone),
            pass: monotone && ratio >= cfg.tolerances.nested_decrease,
        });
    }
    sink.emit("thm12", &out, Some(csv))
}

fn oracle_grid(cfg: &RunConfig) -> Result<OracleGrid, ConfigError> {
    let o = &cfg.oracle;
    OracleGrid::new(o.half_width, o.nx, o.dt).map_err(|e| ConfigError::from_core("oracle", e))
}

fn oracle(cfg: &RunConfig, sink: &Sink) -> Outcome {
    #[derive(Serialize)]
    struct Comparison {
        max_abs_diff: f64,
        rms_diff: f64,
        points: usize,
    }
    #[derive(Serialize)]
    struct Summary {
        t_final: f64,
        half_width: f64,
        nx: usize,
        dx: f64,
        dt: f64,
        snapshots: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        comparison: Option<Comparison>,
    }
    let datum = cfg.datum.build(cfg.datum.family)?;
    let grid = oracle_grid(cfg)?;
    let o = &cfg.oracle;
    let snaps = integrate(&datum, &grid, o.t_final, &o.snapshots).map_err(|e| match e {
        CoreError::Cfl { dt, limit } => {
            Failure::Config(ConfigError::new("oracle.dt", format!("{dt} exceeds the stable step {limit}")))
        }
        CoreError::InvalidParameter { .. } => Failure::Config(ConfigError::from_core("oracle", e)),
        e => Failure::Numerical(e),
    })?;
    let mut csv = sink.csv("oracle", &["t", "x", "f"]);
    let nodes = grid.nodes();
    for s in &snaps {
        for (x, f) in nodes.iter().zip(&s.values) {
            csv.row(&[s.t.into(), (*x).into(), (*f).into()]);
        }
    }
    let comparison = if o.compare {
        let opts = quadrature(cfg)?;
        let reach = (grid.half_width - 10.0).min(20.0).floor() as i64;
        let xs: Vec<f64> = (-reach..=reach).map(|i| i as f64).collect();
        let last = snaps.last().expect("final snapshot");
        let diffs = xs
            .par_iter()
            .map(|&x| {
                let exact = burgers_core::hopf_cole::physical_solution(&datum, x, o.t_final, &opts)?;
                Ok((sample(&grid, &last.values, x)? - exact).abs())
            })
            .collect::<Result<Vec<f64>, CoreError>>()?;
        Some(Comparison {
            max_abs_diff: diffs.iter().copied().fold(0.0, f64::max),
            rms_diff: (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len().max(1) as f64).sqrt(),
            points: diffs.len(),
        })
    } else {
        None
    };
    let summary = Summary {
        t_final: o.t_final,
        half_width: grid.half_width,
        nx: grid.nx,
        dx: grid.dx(),
        dt: grid.dt,
        snapshots: snaps.iter().map(|s| s.t).collect(),
        comparison,
    };
    sink.emit("oracle", &summary, Some(csv))
}

fn profile_plot(cfg: &RunConfig, sink: &Sink) -> Outcome {
    #[derive(Serialize)]
    struct Summary {
        z_c: f64,
        profile_minus: f64,
        profile_plus: f64,
        t: f64,
        nz: usize,
        z_min: f64,
        z_max: f64,
    }
    let datum = cfg.datum.build(cfg.datum.family)?;
    let opts = quadrature(cfg)?;
    let cs = structure_of(&datum)?;
    let p = &cfg.profile_plot;
    let lo = p.z_min.unwrap_or(cs.z_c - 3.0);
    let hi = p.z_max.unwrap_or(cs.z_c + 3.0);
    if hi <= lo {
        return Err(ConfigError::new("profile_plot.z_max", "must exceed z_min").into());
    }
    let zs: Vec<f64> = (0..p.nz).map(|i| lo + (hi - lo) * i as f64 / (p.nz - 1) as f64).collect();
    let rows = zs
        .par_iter()
        .map(|&z| {
            let profile = match profile_p(z, &cs) {
                Ok(v) => v,
                Err(CoreError::AtDiscontinuity { .. }) => f64::NAN,
                Err(e) => return Err(e),
            };
            let f = Frame::for_datum(&datum, p.t, z)?;
            Ok((profile, rescaled_solution(&datum, &f, &opts)?.value))
        })
        .collect::<Result<Vec<(f64, f64)>, CoreError>>()?;
    let mut csv = sink.csv("profile-plot-data", &["z", "profile", "solution"]);
    for (&z, &(pz, v)) in zs.iter().zip(&rows) {
        csv.row(&[z.into(), pz.into(), v.into()]);
    }
    let summary = Summary {
        z_c: cs.z_c,
        profile_minus: cs.profile_at_zc(Branch::Minus),
        profile_plus: cs.profile_at_zc(Branch::Plus),
        t: p.t,
        nz: p.nz,
        z_min: lo,
        z_max: hi,
    };
    sink.emit("profile-plot-data", &summary, Some(csv))
}
