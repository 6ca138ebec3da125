//! Acceptance suite. Prints one PASS/FAIL line per criterion, with indented
//! detail lines, and exits nonzero if any verdict differs from the expected
//! one. Known-red criteria are listed in `EXPECTED_RED`; each of them must
//! still evaluate to FAIL.

use burgers_core::asymptotics::{
    extrapolate, geometric_times, nested_linearized, nested_residual_in, nested_term, nested_zoom,
    q_series, rate_fit, relative_rate, Extrapolation,
};
use burgers_core::critical::{
    branch_shift_coefficient, branch_shift_coefficient_published, dominance_switch_offset, find_zc,
    finite_t_maxima, h_infinity, p_correction, p_correction_published, profile_p, y_star, Branch,
    CriticalStructure, LeadingTail,
};
use burgers_core::hopf_cole::{rescaled_solution, QuadratureOptions};
use burgers_core::landscape::{ht_eval, max_gap, scan_landscape, Frame, PhaseChannel};
use burgers_core::pde_oracle::{compare, OracleGrid};
use burgers_core::{Channel, FamilySpec, TailFamily};
use std::time::Instant;

// Pinned tolerances and budgets.
const ORACLE_TOL_T1: f64 = 1e-4;
const ORACLE_TOL_T50: f64 = 1e-3;
const ORACLE_BUDGET_S: f64 = 120.0;
const TIE_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-12;
const CRITICAL_BUDGET_S: f64 = 10.0;
const PROFILE_SLOPE_MARGIN: f64 = 0.05;
const MIN_R2: f64 = 0.9;
const PROFILE_BUDGET_S: f64 = 600.0;
const SHIFT_RATE_REL: f64 = 0.2;
const SHIFT_COEFF_REL: f64 = 0.1;
const SHIFT_BUDGET_S: f64 = 300.0;
const CORRECTION_REL: f64 = 0.02;
const SEPARATION_FACTOR: f64 = 3.0;
const CORRECTION_BUDGET_S: f64 = 1800.0;
const GAP_RATE_REL: f64 = 0.15;
const GAP_BUDGET_S: f64 = 300.0;
const NESTED_DECREASE: f64 = 2.0;
const TELESCOPING_ABS: f64 = 1e-13;
const NESTED_BUDGET_S: f64 = 2700.0;
const DY_REL: f64 = 1e-6;
const ANTIDERIVATIVE_REL: f64 = 1e-8;
const MICRO_BUDGET_S: f64 = 60.0;

/// Core scale of the two-term data used by criteria 4 to 6.
const TWO_TERM_EPS: f64 = 0.1;

const EXPECTED_RED: &[&str] = &["2-sign", "5", "6", "7"];

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    details: Vec<String>,
}

impl Verdict {
    fn new(id: &'static str, title: &'static str) -> Self {
        Self {
            id,
            title,
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("[{}] {line}", if ok { "ok" } else { "FAIL" }));
    }

    fn info(&mut self, line: String) {
        self.details.push(format!("[info] {line}"));
    }

    fn budget(&mut self, start: Instant, limit: f64) {
        let s = start.elapsed().as_secs_f64();
        self.check(s <= limit, format!("runtime {s:.1} s (budget {limit} s)"));
    }
}

fn leading() -> LeadingTail {
    LeadingTail::new(1.0, 0.5).unwrap()
}

fn single() -> TailFamily {
    TailFamily::construct(&FamilySpec::Single { kappa: 1.0, alpha: 0.5 }, 1.0).unwrap()
}

fn two_term(beta: f64, eps: f64) -> TailFamily {
    let spec = FamilySpec::TwoTerm {
        kappa1: 1.0,
        alpha: 0.5,
        kappa2: 1.0,
        beta,
    };
    TailFamily::construct(&spec, eps).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn oracle_equivalence() -> Verdict {
    let mut v = Verdict::new("1", "oracle equivalence (Hopf-Cole vs finite differences)");
    let start = Instant::now();
    let d = single();
    let xs: Vec<f64> = (0..=160).map(|i| -20.0 + 0.25 * i as f64).collect();
    let opts = QuadratureOptions::default();
    for &(t, grid, tol) in &[
        (1.0, OracleGrid::new(40.0, 8001, 0.004).unwrap(), ORACLE_TOL_T1),
        (50.0, OracleGrid::new(120.0, 12001, 0.008).unwrap(), ORACLE_TOL_T50),
    ] {
        let c = compare(&d, t, &xs, &grid, &opts).unwrap();
        v.check(
            c.max_abs_diff <= tol,
            format!("t = {t}: max |diff| = {:.3e} (tol {tol:e}), rms {:.3e}", c.max_abs_diff, c.rms_diff),
        );
    }
    v.budget(start, ORACLE_BUDGET_S);
    v
}

fn critical_structure() -> (Verdict, Verdict) {
    let mut v = Verdict::new("2", "critical structure invariants");
    let mut sign = Verdict::new("2-sign", "literal opposite-sign condition on z_c - y*_(+-)");
    let start = Instant::now();
    for &kappa1 in &[1.0, 2.0] {
        for &alpha in &[0.3, 0.5, 0.7] {
            let l = LeadingTail::new(kappa1, alpha).unwrap();
            let cs = match find_zc(&l) {
                Ok(cs) => cs,
                Err(e) => {
                    v.check(false, format!("kappa1 = {kappa1}, alpha = {alpha}: {e}"));
                    continue;
                }
            };
            let (yp, ym) = (cs.y_star_plus_at_zc, cs.y_star_minus_at_zc);
            let tie = (h_infinity(yp, cs.z_c, &l).unwrap() - h_infinity(ym, cs.z_c, &l).unwrap()).abs();
            let scale = cs.z_c.abs().max(1.0);
            let res = (l.root_map(yp) - cs.z_c).abs().max((l.root_map(ym) - cs.z_c).abs()) / scale;
            let order = 0.0 < cs.z_c - yp && cs.z_c - yp < cs.z_c - ym && ym < 0.0 && yp > 0.0;
            v.check(
                tie <= TIE_TOL && res <= RESIDUAL_TOL && order && cs.z_c > cs.m_plus,
                format!(
                    "kappa1 = {kappa1}, alpha = {alpha}: z_c = {:.12}, |dH| = {tie:.1e}, residual {res:.1e}, 0 < z_c - y+ < z_c - y- {order}",
                    cs.z_c
                ),
            );
            sign.check(
                cs.opposite_sign_condition(),
                format!(
                    "kappa1 = {kappa1}, alpha = {alpha}: z_c - y+ = {:.6}, z_c - y- = {:.6}",
                    cs.z_c - yp,
                    cs.z_c - ym
                ),
            );
        }
    }
    let l = leading();
    let y0 = y_star(0.0, Branch::Minus, &l).unwrap();
    v.check(y0 == -1.0, format!("y*_-(0) = {y0} (exact -1)"));
    let m = find_zc(&l).unwrap().m_plus;
    let exact = 3.0 * 2f64.powf(-2.0 / 3.0);
    v.check((m - exact).abs() <= 1e-12, format!("m_plus = {m:.15} vs 3*2^(-2/3) = {exact:.15}"));
    v.budget(start, CRITICAL_BUDGET_S);
    sign.info("z - y*(z) = kappa1 |y*|^(-alpha) > 0 on both branches".into());
    (v, sign)
}

fn profile_convergence(cs: &CriticalStructure) -> Verdict {
    let mut v = Verdict::new("3", "profile convergence rate");
    let start = Instant::now();
    let d = single();
    let opts = QuadratureOptions::default();
    let target = -(1.0 - 0.5) / (2.0 * 1.5) + PROFILE_SLOPE_MARGIN;
    let times = geometric_times(1e4, 1e9, 2).unwrap();
    for dz in [-1.0, -0.5, 0.5, 1.0] {
        let z = cs.z_c + dz;
        let p = profile_p(z, cs).unwrap();
        let pts: Vec<(f64, f64)> = times
            .iter()
            .map(|&t| {
                let f = Frame::new(0.5, t, z).unwrap();
                (t, (rescaled_solution(&d, &f, &opts).unwrap().value - p).abs())
            })
            .collect();
        let monotone = pts.windows(2).all(|w| w[1].1 < w[0].1);
        let fit = rate_fit(&pts).unwrap();
        v.check(
            monotone && fit.slope <= target && fit.r_squared >= MIN_R2,
            format!(
                "z = z_c {dz:+}: slope {:.4} (<= {target:.4}), r2 {:.4}, decreasing {monotone}",
                fit.slope, fit.r_squared
            ),
        );
    }
    v.budget(start, PROFILE_BUDGET_S);
    v
}

fn branch_shift(cs: &CriticalStructure) -> Verdict {
    let mut v = Verdict::new("4", "minus-branch shift rate and coefficient (beta = 0.6)");
    let start = Instant::now();
    let beta = 0.6;
    let gamma = relative_rate(beta, 0.5);
    let d = two_term(beta, TWO_TERM_EPS);
    let times = geometric_times(1e4, 1e9, 6).unwrap();
    let shifts: Vec<(f64, f64)> = times
        .iter()
        .map(|&t| (t, finite_t_maxima(&d, cs.z_c, t).unwrap().y_minus() - cs.y_star_minus_at_zc))
        .collect();
    let pts: Vec<(f64, f64)> = shifts.iter().map(|&(t, s)| (t, s.abs())).collect();
    let fit = rate_fit(&pts).unwrap();
    v.check(
        rel(fit.slope, -gamma) <= SHIFT_RATE_REL && fit.r_squared >= MIN_R2,
        format!("slope {:.4} vs {:.4} (rel tol {SHIFT_RATE_REL}), r2 {:.4}", fit.slope, -gamma, fit.r_squared),
    );
    let (t_end, s_end) = *shifts.last().unwrap();
    let measured = s_end * t_end.powf(gamma);
    let l = leading();
    let corrected = branch_shift_coefficient(cs.z_c, Branch::Minus, &l, 1.0, beta).unwrap();
    let published = branch_shift_coefficient_published(cs.z_c, Branch::Minus, &l, 1.0, beta).unwrap();
    v.check(
        rel(measured, corrected) <= SHIFT_COEFF_REL,
        format!(
            "prefactor at t = 1e9: {measured:.4} vs -kappa2 |y*|^(-beta) / g'(y*) = {corrected:.4} (rel {:.3}, tol {SHIFT_COEFF_REL})",
            rel(measured, corrected)
        ),
    );
    v.info(format!(
        "sign-blind coefficient {published:.4} (rel {:.3}); the two forms agree on the plus branch only",
        rel(measured, published)
    ));
    v.budget(start, SHIFT_BUDGET_S);
    v
}

fn fit_q(d: &TailFamily, cs: &CriticalStructure, x: f64, opts: &QuadratureOptions) -> Extrapolation {
    let times = geometric_times(1e5, 1e9, 4).unwrap();
    let pts = q_series(d, cs, x, &times, opts).unwrap();
    extrapolate(&pts).unwrap()
}

fn correction_limits(cs: &CriticalStructure) -> Verdict {
    let mut v = Verdict::new("5", "second-order correction limits");
    let start = Instant::now();
    let opts = QuadratureOptions::default();
    let mut separated = 0;
    for beta in [0.55, 0.6, 0.7] {
        let d = two_term(beta, TWO_TERM_EPS);
        let mut limits = Vec::new();
        for (x, branch) in [(-1.0, Branch::Minus), (1.0, Branch::Plus)] {
            let e = fit_q(&d, cs, x, &opts);
            let target = p_correction(beta, branch, cs, 1.0).unwrap();
            let published = p_correction_published(beta, branch, cs, 1.0).unwrap();
            v.check(
                rel(e.limit, target) <= CORRECTION_REL,
                format!(
                    "beta = {beta}, x = {x:+}: limit {:.5} +- {:.2e} (theta {:.3}) vs P = {target:.5} (rel {:.3}, tol {CORRECTION_REL})",
                    e.limit,
                    e.error_bar,
                    e.theta,
                    rel(e.limit, target)
                ),
            );
            v.info(format!("beta = {beta}, x = {x:+}: published closed form {published:.5}"));
            limits.push(e);
        }
        let near = fit_q(&d, cs, -0.5, &opts);
        let far = fit_q(&d, cs, -2.0, &opts);
        let bars = near.error_bar + far.error_bar;
        v.check(
            (near.limit - far.limit).abs() <= bars,
            format!(
                "beta = {beta}: side constancy x = -0.5 -> {:.5}, x = -2 -> {:.5}, |diff| {:.2e} vs bars {bars:.2e}",
                near.limit,
                far.limit,
                (near.limit - far.limit).abs()
            ),
        );
        let gap = (limits[1].limit - limits[0].limit).abs();
        let bar = limits[0].error_bar.hypot(limits[1].error_bar);
        let detected = gap > SEPARATION_FACTOR * bar;
        separated += detected as usize;
        v.info(format!("beta = {beta}: |L+ - L-| = {gap:.3e}, error bar {bar:.3e}, detected {detected}"));
        v.info(format!(
            "beta = {beta}: branch dominance switches at x* = {:.3}",
            dominance_switch_offset(cs, 1.0, beta)
        ));
    }
    v.check(separated >= 2, format!("P+ != P- detected for {separated} of 3 beta values (need 2)"));
    v.budget(start, CORRECTION_BUDGET_S);
    v
}

fn gap_and_dominance(d: &TailFamily, cs: &CriticalStructure, x: f64) -> (Vec<(f64, f64)>, Vec<bool>) {
    let gamma = relative_rate(0.6, 0.5);
    let times = geometric_times(1e4, 1e8, 6).unwrap();
    let mut gaps = Vec::new();
    let mut plus = Vec::new();
    for t in times {
        let f = Frame::for_datum(d, t, cs.z_c + t.powf(-gamma) * x).unwrap();
        let rep = scan_landscape(d, &f, None, None).unwrap();
        gaps.push((t, max_gap(&rep, 1.0).unwrap()));
        plus.push(rep.global_max().y > 0.0);
    }
    (gaps, plus)
}

fn gap_scaling(cs: &CriticalStructure) -> Verdict {
    let mut v = Verdict::new("6", "gap scaling and branch flip in the zoom frame (beta = 0.6)");
    let start = Instant::now();
    let gamma = relative_rate(0.6, 0.5);
    let d = two_term(0.6, TWO_TERM_EPS);
    let (gaps, plus_right) = gap_and_dominance(&d, cs, 1.0);
    let fit = rate_fit(&gaps).unwrap();
    v.check(
        rel(fit.slope, -gamma) <= GAP_RATE_REL && fit.r_squared >= MIN_R2,
        format!("x = +1: gap slope {:.4} vs {:.4} (rel tol {GAP_RATE_REL}), r2 {:.4}", fit.slope, -gamma, fit.r_squared),
    );
    let (_, plus_left) = gap_and_dominance(&d, cs, -1.0);
    let right = plus_right.iter().filter(|&&p| p).count();
    let left = plus_left.iter().filter(|&&p| !p).count();
    v.check(
        right == plus_right.len() && left == plus_left.len(),
        format!(
            "dominant branch: plus at x = +1 for {right}/{} times, minus at x = -1 for {left}/{} times",
            plus_right.len(),
            plus_left.len()
        ),
    );
    let (_, plus_far) = gap_and_dominance(&d, cs, 3.0);
    v.info(format!(
        "x = +3: plus branch dominant for {}/{} times; switch at x* = {:.3}",
        plus_far.iter().filter(|&&p| p).count(),
        plus_far.len(),
        dominance_switch_offset(cs, 1.0, 0.6)
    ));
    let (gaps_eps1, _) = gap_and_dominance(&two_term(0.6, 1.0), cs, 1.0);
    v.info(format!("core scale 1: gap slope {:.4}", rate_fit(&gaps_eps1).unwrap().slope));
    v.budget(start, GAP_BUDGET_S);
    v
}

fn nested_ladder(cs: &CriticalStructure) -> Verdict {
    let mut v = Verdict::new("7", "nested expansion residuals");
    let start = Instant::now();
    let opts = QuadratureOptions::default();
    let d = TailFamily::construct(&FamilySpec::nested_ladder(0.5, 0.7, 0.08, 6), 1.0).unwrap();
    let (alphas, weights) = (d.alphas(), d.weights());
    let times = geometric_times(1e5, 1e9, 2).unwrap();
    let mut worst_telescope = 0.0f64;
    for n in 0..=2 {
        let gamma = relative_rate(alphas[n], alphas[0]);
        for x in [-1.0, 1.0] {
            let mut scaled = Vec::new();
            let mut linear = Vec::new();
            for &t in &times {
                let zoom = nested_zoom(&d, cs, n, x, t).unwrap();
                let r = nested_residual_in(&d, cs, n, &zoom, &opts).unwrap();
                let r_next = nested_residual_in(&d, cs, n + 1, &zoom, &opts).unwrap();
                let term = nested_term(cs, &alphas, &weights, n + 1, x, t);
                worst_telescope = worst_telescope.max((r - r_next - term).abs());
                scaled.push(t.powf(gamma) * r.abs());
                let value = rescaled_solution(&d, &zoom.frame().unwrap(), &opts).unwrap().value;
                linear.push(t.powf(gamma) * (value - nested_linearized(&d, cs, n, x, t).unwrap()).abs());
            }
            let monotone = scaled.windows(2).all(|w| w[1] < w[0]);
            let ratio = scaled[0] / scaled[scaled.len() - 1];
            v.check(
                monotone && ratio >= NESTED_DECREASE,
                format!(
                    "N = {n}, x = {x:+}: scaled residual {:.3e} -> {:.3e} (ratio {ratio:.2}, need {NESTED_DECREASE}), monotone {monotone}",
                    scaled[0],
                    scaled[scaled.len() - 1]
                ),
            );
            v.info(format!(
                "N = {n}, x = {x:+}: linearized reference ratio {:.2}",
                linear[0] / linear[linear.len() - 1]
            ));
        }
    }
    v.check(
        worst_telescope <= TELESCOPING_ABS,
        format!("telescoping identity: worst |R_N - R_(N+1) - term| = {worst_telescope:.1e} (tol {TELESCOPING_ABS:e})"),
    );
    let bad = TailFamily::construct(&FamilySpec::nested_ladder(0.5, 0.7, 0.12, 6), 1.0);
    let ok = alphas.windows(2).all(|w| w[1] > w[0]) && alphas[1] > 0.6 && bad.is_err();
    v.check(ok, format!("admissibility: ladder {alphas:?} accepted, step 0.12 rejected {}", bad.is_err()));
    v.budget(start, NESTED_BUDGET_S);
    v
}

fn xorshift(state: &mut u64) -> f64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

/// `int_0^x f0` by composite Simpson on panels of width 0.25 near the core
/// and growing by 1.5x outside it.
fn simpson_antiderivative(d: &TailFamily, x: f64) -> f64 {
    let mut total = 0.0;
    let mut a = 0.0;
    while a < x {
        let b = if a < 1.0 { (a + 0.25).min(x) } else { (a * 1.5).min(x) };
        let n = 400;
        let h = (b - a) / n as f64;
        let mut s = d.value(a) + d.value(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * d.value(a + i as f64 * h);
        }
        total += s * h / 3.0;
        a = b;
    }
    total
}

fn micro_suite() -> Verdict {
    let mut v = Verdict::new("8", "landscape and derivative micro-suite");
    let start = Instant::now();
    let data = [single(), two_term(0.6, 1.0)];
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut worst_dy = 0.0f64;
    let mut worst_f = 0.0f64;
    for _ in 0..500 {
        let d = &data[(xorshift(&mut state) * 2.0) as usize];
        let y = -8.0 + 16.0 * xorshift(&mut state);
        let z = -4.0 + 10.0 * xorshift(&mut state);
        let t = 10f64.powf(10.0 * xorshift(&mut state));
        if y.abs() < 1e-2 {
            continue;
        }
        let f = Frame::new(0.5, t, z).unwrap();
        let exact = ht_eval(d, &f, y, PhaseChannel::Dy).unwrap();
        if exact.abs() > 1e-3 {
            let h = 1e-5 * (1.0 + y.abs());
            let fd = (ht_eval(d, &f, y + h, PhaseChannel::Value).unwrap()
                - ht_eval(d, &f, y - h, PhaseChannel::Value).unwrap())
                / (2.0 * h);
            worst_dy = worst_dy.max(rel(fd, exact));
        }
        let x = 10f64.powf(-2.0 + 6.0 * xorshift(&mut state));
        worst_f = worst_f.max(rel(d.antiderivative(x), simpson_antiderivative(d, x)));
    }
    v.check(worst_dy <= DY_REL, format!("dy channel vs central difference: worst rel {worst_dy:.2e} (tol {DY_REL:e})"));
    v.check(
        worst_f <= ANTIDERIVATIVE_REL,
        format!("antiderivative vs graded Simpson quadrature: worst rel {worst_f:.2e} (tol {ANTIDERIVATIVE_REL:e})"),
    );

    let loose = QuadratureOptions { rel_tol: 1e-6, ..Default::default() };
    let tight = QuadratureOptions { rel_tol: 1e-10, ..Default::default() };
    let mut refined = true;
    for &(z, t) in &[(0.0, 1.0), (2.0, 1e4), (2.7, 1e8), (5.0, 1e10)] {
        let f = Frame::new(0.5, t, z).unwrap();
        let a = rescaled_solution(&data[1], &f, &loose).unwrap();
        let b = rescaled_solution(&data[1], &f, &tight).unwrap();
        refined &= (a.value - b.value).abs() <= a.error_estimate.max(1e-15 * a.value.abs());
    }
    v.check(refined, "tightening rel_tol moves the value by no more than the loose estimate".into());

    let zero = TailFamily::zero(0.5).unwrap();
    let f = Frame::new(0.5, 10.0, 1.5).unwrap();
    let q = -(1.5f64 - 0.7).powi(2) / 4.0;
    let exact = zero.evaluate(3.0, Channel::Value).unwrap() == 0.0
        && rescaled_solution(&zero, &f, &QuadratureOptions::default()).unwrap().value == 0.0
        && ht_eval(&zero, &f, 0.7, PhaseChannel::Value).unwrap() == q;
    v.check(exact, "zero datum: value, solution and quadratic phase exact".into());
    v.budget(start, MICRO_BUDGET_S);
    v
}

fn main() {
    let cs = find_zc(&leading()).unwrap();
    let (crit, sign) = critical_structure();
    let verdicts = vec![
        oracle_equivalence(),
        crit,
        sign,
        profile_convergence(&cs),
        branch_shift(&cs),
        correction_limits(&cs),
        gap_scaling(&cs),
        nested_ladder(&cs),
        micro_suite(),
    ];

    let mut unexpected = Vec::new();
    for v in &verdicts {
        let red = EXPECTED_RED.contains(&v.id);
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if red { " (known red)" } else { "" };
        println!("{tag} criterion {}: {}{note}", v.id, v.title);
        for line in &v.details {
            println!("    {line}");
        }
        if v.pass == red {
            unexpected.push(v.id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all verdicts as expected");
    } else {
        println!("acceptance: unexpected verdicts for {unexpected:?}");
        std::process::exit(1);
    }
}
