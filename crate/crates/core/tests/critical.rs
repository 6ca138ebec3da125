use burgers_core::asymptotics::rate_fit;
use burgers_core::critical::{
    branch_balance, find_zc, finite_t_maxima, h_infinity, p_correction, p_correction_beta_slope,
    profile_p, y_star, y_star_prime, zoom_phase_slope, Branch, CriticalStructure, LeadingTail,
};
use burgers_core::landscape::{ht_eval, Frame, PhaseChannel};
use burgers_core::{Error, FamilySpec, TailFamily};
use proptest::prelude::*;

fn lead(kappa1: f64, alpha: f64) -> LeadingTail {
    LeadingTail::new(kappa1, alpha).unwrap()
}

fn standard() -> CriticalStructure {
    find_zc(&lead(1.0, 0.5)).unwrap()
}

/// Root of `y + k |y|^(-a) = z` by Newton from a branch-specific start,
/// independent of the crate's bracketing.
fn newton_root(z: f64, plus: bool, k: f64, a: f64) -> f64 {
    let g = |y: f64| y + k * y.abs().powf(-a) - z;
    let dg = |y: f64| 1.0 - a * k * y.signum() * y.abs().powf(-1.0 - a);
    // start where the branch is convex toward the root
    let mut y = if plus { z } else { -(k / z.max(1e-3)).powf(1.0 / a).min(1.0) * 0.5 };
    for _ in 0..200 {
        let step = g(y) / dg(y);
        let mut next = y - step;
        if plus {
            next = next.max((a * k).powf(1.0 / (1.0 + a)) + 1e-15);
        } else if next >= 0.0 {
            next = 0.5 * y;
        }
        if (next - y).abs() <= 1e-15 * (1.0 + y.abs()) {
            return next;
        }
        y = next;
    }
    y
}

fn balance_oracle(z: f64, k: f64, a: f64) -> f64 {
    let h = |y: f64| {
        -0.25 * (z - y) * (z - y) - k * y.signum() * y.abs().powf(1.0 - a) / (2.0 * (1.0 - a))
    };
    h(newton_root(z, true, k, a)) - h(newton_root(z, false, k, a))
}

/// Dense sign scan of the branch balance followed by plain bisection.
fn zc_oracle(k: f64, a: f64) -> f64 {
    let m = (a * k).powf(1.0 / (1.0 + a));
    let fold = m + k * m.powf(-a);
    let (lo, hi) = (fold + 1e-6, fold + 20.0);
    let n = 100_000;
    let step = (hi - lo) / n as f64;
    let mut left = lo;
    let mut f_left = balance_oracle(left, k, a);
    for i in 1..=n {
        let right = lo + i as f64 * step;
        let f_right = balance_oracle(right, k, a);
        if f_left < 0.0 && f_right >= 0.0 {
            let (mut a_, mut b_) = (left, right);
            for _ in 0..100 {
                let mid = 0.5 * (a_ + b_);
                if balance_oracle(mid, k, a) < 0.0 {
                    a_ = mid;
                } else {
                    b_ = mid;
                }
            }
            return 0.5 * (a_ + b_);
        }
        left = right;
        f_left = f_right;
    }
    panic!("no sign change");
}

#[test]
fn critical_point_matches_dense_scan() {
    for &(k, a) in &[(1.0, 0.5), (2.0, 0.5), (1.0, 0.3), (2.0, 0.7)] {
        let cs = find_zc(&lead(k, a)).unwrap();
        let oracle = zc_oracle(k, a);
        assert!((cs.z_c - oracle).abs() <= 1e-8, "k={k} a={a}: {} vs {oracle}", cs.z_c);
    }
}

#[test]
fn standard_closed_forms() {
    let cs = standard();
    let s3 = 3f64.sqrt();
    assert!((cs.z_c - 1.5 * s3).abs() < 1e-10);
    assert!((cs.y_star_plus_at_zc - (1.0 + s3 / 2.0)).abs() < 1e-10);
    assert!((cs.y_star_minus_at_zc + (1.0 - s3 / 2.0)).abs() < 1e-10);
    assert!((cs.m_plus - 3.0 * 2f64.powf(-2.0 / 3.0)).abs() < 1e-12);
    assert_eq!(y_star(0.0, Branch::Minus, &cs.leading).unwrap(), -1.0);
    // both branches sit left of z_c, so the literal opposite-sign statement fails
    assert!(!cs.opposite_sign_condition());
    assert!(cs.z_c - cs.y_star_plus_at_zc > 0.0);
    assert!(cs.half_jump() < 0.0);
}

#[test]
fn balance_changes_sign_once() {
    let cs = standard();
    let l = cs.leading;
    let n = 1000;
    for i in 0..n {
        let z = l.fold_threshold() + 1e-3 + (cs.z_c + 6.0 - l.fold_threshold()) * i as f64 / n as f64;
        if (z - cs.z_c).abs() < 1e-9 {
            continue;
        }
        let phi = branch_balance(z, &l).unwrap();
        assert_eq!(phi > 0.0, z > cs.z_c, "z = {z}, phi = {phi}");
    }
}

#[test]
fn below_fold_has_one_branch() {
    let l = lead(1.0, 0.5);
    match y_star(l.fold_threshold() - 0.01, Branch::Plus, &l) {
        Err(Error::BelowFold { .. }) => {}
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        profile_p(standard().z_c, &standard()),
        Err(Error::AtDiscontinuity { .. })
    ));
}

#[test]
fn limit_phase_is_the_large_time_phase() {
    let datum = TailFamily::construct(&FamilySpec::Single { kappa: 1.0, alpha: 0.5 }, 1.0).unwrap();
    let cs = standard();
    let l = cs.leading;
    for z in [0.0, cs.z_c] {
        let y = y_star(z, Branch::Minus, &l).unwrap();
        let target = h_infinity(y, z, &l).unwrap();
        let f = Frame::new(0.5, 1e10, z).unwrap();
        let h = ht_eval(&datum, &f, y, PhaseChannel::Value).unwrap();
        assert!((h - target).abs() <= 1e-3, "z={z}: {h} vs {target}");

        // the gap closes like 1/Lambda = t^(-(1-alpha)/(1+alpha))
        let pts: Vec<(f64, f64)> = (4..=10)
            .map(|k| {
                let t = 10f64.powi(k);
                let f = Frame::new(0.5, t, z).unwrap();
                (t, (ht_eval(&datum, &f, y, PhaseChannel::Value).unwrap() - target).abs())
            })
            .collect();
        let fit = rate_fit(&pts).unwrap();
        assert!((fit.slope + 1.0 / 3.0).abs() < 0.01, "{fit:?}");
    }
}

#[test]
fn root_slopes_are_monotone_in_z() {
    let l = lead(1.0, 0.5);
    let mut prev_minus = f64::INFINITY;
    let mut prev_plus = f64::INFINITY;
    for i in 0..60 {
        let z = l.fold_threshold() + 0.05 + 0.1 * i as f64;
        let m = y_star_prime(z, Branch::Minus, &l).unwrap();
        let p = y_star_prime(z, Branch::Plus, &l).unwrap();
        for s in [m, p] {
            assert!((s.finite_difference - s.closed_form).abs() <= 1e-6 * s.closed_form.abs());
        }
        assert!(m.closed_form > 0.0 && m.closed_form < 1.0);
        assert!(p.closed_form > 1.0);
        assert!(m.closed_form < prev_minus && p.closed_form < prev_plus);
        prev_minus = m.closed_form;
        prev_plus = p.closed_form;
    }
    assert!(matches!(
        y_star_prime(l.fold_threshold() + 1e-4, Branch::Plus, &l),
        Err(Error::NearFold { .. })
    ));
}

#[test]
fn correction_depends_on_beta_through_the_root() {
    let cs = standard();
    for i in 1..20 {
        let beta = 0.5 + 0.25 * i as f64 / 20.0;
        for b in [Branch::Minus, Branch::Plus] {
            let (fd, identity) = p_correction_beta_slope(beta, b, &cs, 1.0).unwrap();
            assert!((fd - identity).abs() <= 1e-5 * identity.abs().max(1e-3), "beta={beta}");
        }
    }
}

#[test]
fn branch_corrections_differ() {
    let cs = standard();
    let n = 200;
    let distinct = (1..n)
        .filter(|&i| {
            let beta = 0.5 + 0.25 * i as f64 / n as f64;
            let m = p_correction(beta, Branch::Minus, &cs, 1.0).unwrap();
            let p = p_correction(beta, Branch::Plus, &cs, 1.0).unwrap();
            (m - p).abs() > 1e-6 * m.abs().max(p.abs())
        })
        .count();
    assert!(distinct as f64 >= 0.9 * (n - 1) as f64);
}

#[test]
fn profile_limits() {
    let cs = standard();
    assert!(profile_p(-1e8, &cs).unwrap() < 1e-3);
    assert!(profile_p(1e8, &cs).unwrap() < 1e-3);
    let left = profile_p(cs.z_c - 1e-9, &cs).unwrap();
    let right = profile_p(cs.z_c + 1e-9, &cs).unwrap();
    assert!((left - cs.profile_at_zc(Branch::Minus)).abs() < 1e-6);
    assert!((right - cs.profile_at_zc(Branch::Plus)).abs() < 1e-6);
    assert!(left > right);
}

#[test]
fn branch_value_slope_in_z() {
    // d/dz of each maximum's value is (y - z)/2
    let datum = TailFamily::construct(&FamilySpec::Single { kappa: 1.0, alpha: 0.5 }, 1.0).unwrap();
    let cs = standard();
    let t = 1e8;
    let dz = 1e-3;
    let lo = finite_t_maxima(&datum, cs.z_c - dz, t).unwrap();
    let hi = finite_t_maxima(&datum, cs.z_c + dz, t).unwrap();
    for b in [Branch::Minus, Branch::Plus] {
        let measured = (hi.get(b).h_value - lo.get(b).h_value) / (2.0 * dz);
        let predicted = zoom_phase_slope(b, &cs);
        assert!(((measured - predicted) / predicted).abs() < 0.1, "{b:?}: {measured} vs {predicted}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn roots_solve_the_equation(z in -50.0f64..50.0, k in 0.2f64..3.0, a in 0.05f64..0.95) {
        let l = lead(k, a);
        let y = y_star(z, Branch::Minus, &l).unwrap();
        prop_assert!(y < 0.0);
        prop_assert!((l.root_map(y) - z).abs() <= 1e-12 * z.abs().max(y.abs()).max(1.0));
        let oracle = newton_root(z, false, k, a);
        prop_assert!((y - oracle).abs() <= 1e-9 * oracle.abs().max(1e-3), "{} vs {}", y, oracle);
        if z > l.fold_threshold() + 1e-6 {
            let y = y_star(z, Branch::Plus, &l).unwrap();
            prop_assert!(y >= l.fold_point());
            prop_assert!((l.root_map(y) - z).abs() <= 1e-12 * z.abs().max(1.0));
        }
    }

    #[test]
    fn profile_is_distance_to_root(z in -20.0f64..20.0) {
        let cs = standard();
        prop_assume!((z - cs.z_c).abs() > 1e-9);
        let branch = Branch::of_sign(z - cs.z_c);
        let y = y_star(z, branch, &cs.leading).unwrap();
        let p = profile_p(z, &cs).unwrap();
        prop_assert!(p > 0.0);
        prop_assert!((p - (z - y)).abs() <= 1e-11 * (1.0 + z.abs()));
    }
}
