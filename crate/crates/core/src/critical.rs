//! Limit objects of the large-time landscape.
//!
//! As `t -> oo` the phase tends to
//! `H_oo(y, z) = -(z - y)^2/4 - kappa sign(y) |y|^(1-a) / (2 (1-a))`, whose
//! critical points solve `z = g(y) := y + kappa |y|^(-a)`. The equation has
//! one negative root for every `z` and, above the fold `m_+ = min_{y>0} g`,
//! a positive root with `H_oo` concave. The critical point `z_c` is where the
//! two branch values of `H_oo` coincide; the limit profile
//! `p(z) = kappa |y*(z)|^(-a) = z - y*(z)` jumps there.

use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Error, Result};
use crate::initial_data::{check_beta, TailFamily};
use crate::landscape::{scan_landscape, CriticalPoint, Frame, LandscapeReport};
use crate::roots::bisect;

const ROOT_RESIDUAL: f64 = 1e-13;
const ZC_RESIDUAL: f64 = 1e-12;
const H_TIE: f64 = 1e-10;
const FOLD_MARGIN: f64 = 1e-3;
const SINGULAR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn of_sign(x: f64) -> Self {
        if x > 0.0 {
            Branch::Plus
        } else {
            Branch::Minus
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }
}

/// The leading tail `kappa1 |x|^(-alpha)` that fixes every limit object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingTail {
    pub kappa1: f64,
    pub alpha: f64,
}

impl LeadingTail {
    pub fn new(kappa1: f64, alpha: f64) -> Result<Self> {
        finite("kappa1", kappa1)?;
        finite("alpha", alpha)?;
        if kappa1 <= 0.0 {
            return Err(invalid("kappa1", format!("must be positive, got {kappa1}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { kappa1, alpha })
    }

    pub fn of_datum(datum: &TailFamily) -> Result<Self> {
        let lead = datum
            .leading()
            .ok_or_else(|| invalid("family", "the zero datum has no leading tail"))?;
        Self::new(lead.kappa, lead.alpha)
    }

    /// `g(y) = y + kappa1 |y|^(-alpha)`.
    pub fn root_map(&self, y: f64) -> f64 {
        y + self.kappa1 * y.abs().powf(-self.alpha)
    }

    /// `g'(y) = 1 - alpha kappa1 sign(y) |y|^(-1-alpha)`.
    pub fn root_map_slope(&self, y: f64) -> f64 {
        1.0 - self.alpha * self.kappa1 * y.signum() * y.abs().powf(-1.0 - self.alpha)
    }

    /// Location `(alpha kappa1)^(1/(1+alpha))` of the minimum of `g` on `y > 0`.
    pub fn fold_point(&self) -> f64 {
        (self.alpha * self.kappa1).powf(1.0 / (1.0 + self.alpha))
    }

    /// `m_+ = min_{y > 0} g(y)`.
    pub fn fold_threshold(&self) -> f64 {
        self.root_map(self.fold_point())
    }

    /// `kappa1 |y|^(-alpha)`.
    pub fn profile_at_root(&self, y: f64) -> f64 {
        self.kappa1 * y.abs().powf(-self.alpha)
    }
}

/// Root of `z = g(y)` on the requested branch.
pub fn y_star(z: f64, branch: Branch, leading: &LeadingTail) -> Result<f64> {
    let z = finite("z", z)?;
    let g = |y: f64| leading.root_map(y) - z;
    let y = match branch {
        Branch::Minus => {
            let mut lo = -1.0;
            while g(lo) >= 0.0 {
                lo *= 2.0;
            }
            let mut hi = -1.0;
            while g(hi) <= 0.0 {
                hi *= 0.5;
            }
            bisect(g, lo, hi, 0.0, "minus branch root")?
        }
        Branch::Plus => {
            let fold = leading.fold_threshold();
            if z <= fold {
                return Err(Error::BelowFold { z, fold });
            }
            bisect(g, leading.fold_point(), z, 0.0, "plus branch root")?
        }
    };
    let residual = g(y).abs();
    let tolerance = ROOT_RESIDUAL * z.abs().max(y.abs()).max(1.0);
    if residual > tolerance {
        return Err(Error::ResidualTooLarge {
            what: "implicit root equation",
            residual,
            tolerance,
        });
    }
    Ok(y)
}

/// `H_oo(y, z) = -(z - y)^2/4 - kappa1 sign(y) |y|^(1-alpha) / (2 (1 - alpha))`.
pub fn h_infinity(y: f64, z: f64, leading: &LeadingTail) -> Result<f64> {
    let y = finite("y", y)?;
    let z = finite("z", z)?;
    if y == 0.0 {
        return Err(invalid("y", "H_oo is evaluated off the origin only"));
    }
    Ok(h_inf(y, z, leading))
}

fn h_inf(y: f64, z: f64, l: &LeadingTail) -> f64 {
    let d = z - y;
    -0.25 * d * d - l.kappa1 * y.signum() * y.abs().powf(1.0 - l.alpha) / (2.0 * (1.0 - l.alpha))
}

/// Difference of the branch values `H_oo(y*_+(z), z) - H_oo(y*_-(z), z)`.
pub fn branch_balance(z: f64, leading: &LeadingTail) -> Result<f64> {
    let yp = y_star(z, Branch::Plus, leading)?;
    let ym = y_star(z, Branch::Minus, leading)?;
    Ok(h_inf(yp, z, leading) - h_inf(ym, z, leading))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalStructure {
    pub leading: LeadingTail,
    pub z_c: f64,
    pub y_star_plus_at_zc: f64,
    pub y_star_minus_at_zc: f64,
    pub h_inf_at_zc: f64,
    pub m_plus: f64,
}

impl CriticalStructure {
    pub fn y_star_at_zc(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Minus => self.y_star_minus_at_zc,
            Branch::Plus => self.y_star_plus_at_zc,
        }
    }

    /// One-sided limit of the profile at `z_c`.
    pub fn profile_at_zc(&self, branch: Branch) -> f64 {
        self.leading.profile_at_root(self.y_star_at_zc(branch))
    }

    /// Half jump `(p(z_c+) - p(z_c-)) / 2`.
    pub fn half_jump(&self) -> f64 {
        0.5 * (self.profile_at_zc(Branch::Plus) - self.profile_at_zc(Branch::Minus))
    }

    /// Whether `z_c - y*_+(z_c) < 0 < z_c - y*_-(z_c)`. Never true: both
    /// differences equal the positive profile values.
    pub fn opposite_sign_condition(&self) -> bool {
        self.z_c - self.y_star_plus_at_zc < 0.0 && self.z_c - self.y_star_minus_at_zc > 0.0
    }

    fn check(&self) -> Result<()> {
        let l = &self.leading;
        let (yp, ym, zc) = (self.y_star_plus_at_zc, self.y_star_minus_at_zc, self.z_c);
        let fail = |msg: String| Err(Error::Structure(msg));
        if !(ym < 0.0 && 0.0 < yp) {
            return fail(format!("branch roots not separated by 0: {ym}, {yp}"));
        }
        // z - y* = kappa1 |y*|^(-alpha) > 0 on both branches; what orders the
        // branches in the zoom frame is 0 < z_c - y*_+ < z_c - y*_-
        if !(0.0 < zc - yp && zc - yp < zc - ym) {
            return fail(format!("branch slopes misordered at z_c = {zc}"));
        }
        let tie = (h_inf(yp, zc, l) - h_inf(ym, zc, l)).abs();
        if tie > H_TIE {
            return fail(format!("branch values differ by {tie:e} at z_c"));
        }
        if zc <= self.m_plus {
            return fail(format!("z_c = {zc} not above the fold {}", self.m_plus));
        }
        if yp <= l.fold_point() {
            return fail(format!("plus root {yp} is not the concave one"));
        }
        Ok(())
    }
}

/// Locates `z_c` by bisection of [`branch_balance`] above the fold.
pub fn find_zc(leading: &LeadingTail) -> Result<CriticalStructure> {
    let m_plus = leading.fold_threshold();
    let lo = m_plus + 1e-6;
    let hi = m_plus + 1e3;
    let phi = |z: f64| branch_balance(z, leading).unwrap_or(f64::NAN);
    let z_c = bisect(phi, lo, hi, ZC_RESIDUAL, "branch balance")?;
    let y_star_plus_at_zc = y_star(z_c, Branch::Plus, leading)?;
    let y_star_minus_at_zc = y_star(z_c, Branch::Minus, leading)?;
    let cs = CriticalStructure {
        leading: *leading,
        z_c,
        y_star_plus_at_zc,
        y_star_minus_at_zc,
        h_inf_at_zc: h_inf(y_star_minus_at_zc, z_c, leading),
        m_plus,
    };
    cs.check()?;
    Ok(cs)
}

/// Limit profile `kappa1 |y*(z)|^(-alpha)` on the branch selected by `z - z_c`.
pub fn profile_p(z: f64, cs: &CriticalStructure) -> Result<f64> {
    let z = finite("z", z)?;
    if z == cs.z_c {
        return Err(Error::AtDiscontinuity { z_c: cs.z_c });
    }
    let y = y_star(z, Branch::of_sign(z - cs.z_c), &cs.leading)?;
    Ok(cs.leading.profile_at_root(y))
}

/// Derivative of a branch root, by finite difference and in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootSlope {
    /// Central difference of [`y_star`]; the reference value.
    pub finite_difference: f64,
    /// Implicit differentiation, `1 / g'(y*)`.
    pub closed_form: f64,
    /// `1 / (1 - alpha kappa1 |y*|^(-1-alpha))`, the sign-blind variant.
    pub unsigned_form: f64,
}

pub fn y_star_prime(z: f64, branch: Branch, leading: &LeadingTail) -> Result<RootSlope> {
    let z = finite("z", z)?;
    let h = 1e-6 * (1.0 + z.abs());
    if branch == Branch::Plus {
        let fold = leading.fold_threshold();
        let distance = z - fold;
        if distance < FOLD_MARGIN.max(2.0 * h) {
            return Err(Error::NearFold { z, fold, distance });
        }
    }
    let up = y_star(z + h, branch, leading)?;
    let down = y_star(z - h, branch, leading)?;
    let y = y_star(z, branch, leading)?;
    let k = leading.alpha * leading.kappa1 * y.abs().powf(-1.0 - leading.alpha);
    Ok(RootSlope {
        finite_difference: (up - down) / (2.0 * h),
        closed_form: 1.0 / leading.root_map_slope(y),
        unsigned_form: 1.0 / (1.0 - k),
    })
}

fn check_kappa2(kappa2: f64) -> Result<f64> {
    finite("kappa2", kappa2)?;
    if kappa2 <= 0.0 {
        return Err(invalid("kappa2", format!("must be positive, got {kappa2}")));
    }
    Ok(kappa2)
}

/// Jump constant of the second-order correction on one side of `z_c`:
///
/// `kappa2 |y*|^(-beta) |y*|^(1+alpha) / (|y*|^(1+alpha) - sign(y*) alpha kappa1)`,
///
/// i.e. `kappa2 |y*|^(-beta) y*'(z_c)`, the change in `A f0(y T)` produced
/// by the shift of the maximum under the second tail. Linear in `kappa2`.
pub fn p_correction(beta: f64, branch: Branch, cs: &CriticalStructure, kappa2: f64) -> Result<f64> {
    let l = &cs.leading;
    check_beta(l.alpha, beta)?;
    let kappa2 = check_kappa2(kappa2)?;
    let y = cs.y_star_at_zc(branch);
    let w = y.abs().powf(1.0 + l.alpha);
    let denominator = w - y.signum() * l.alpha * l.kappa1;
    if denominator.abs() < SINGULAR {
        return Err(Error::SingularDenominator { value: denominator });
    }
    Ok(kappa2 * y.abs().powf(-beta) * w / denominator)
}

/// The alternative closed form
/// `kappa2 |y*|^(-beta) (1 + alpha kappa1 / (alpha kappa1 - |y*|^(1+alpha)))`.
///
/// Agrees with [`p_correction`] nowhere; kept for comparison in reports.
pub fn p_correction_published(
    beta: f64,
    branch: Branch,
    cs: &CriticalStructure,
    kappa2: f64,
) -> Result<f64> {
    let l = &cs.leading;
    check_beta(l.alpha, beta)?;
    let kappa2 = check_kappa2(kappa2)?;
    let y = cs.y_star_at_zc(branch);
    let ak = l.alpha * l.kappa1;
    let denominator = ak - y.abs().powf(1.0 + l.alpha);
    if denominator.abs() < SINGULAR {
        return Err(Error::SingularDenominator { value: denominator });
    }
    Ok(kappa2 * y.abs().powf(-beta) * (1.0 + ak / denominator))
}

/// `kappa2 |y*|^(-beta) (2 - y*')` with the finite-difference root slope;
/// equals [`p_correction_published`] only if `y*'` takes the sign-blind form.
pub fn p_correction_via_slope(
    beta: f64,
    branch: Branch,
    cs: &CriticalStructure,
    kappa2: f64,
) -> Result<f64> {
    check_beta(cs.leading.alpha, beta)?;
    let kappa2 = check_kappa2(kappa2)?;
    let slope = y_star_prime(cs.z_c, branch, &cs.leading)?.finite_difference;
    Ok(kappa2 * cs.y_star_at_zc(branch).abs().powf(-beta) * (2.0 - slope))
}

/// Finite-difference `d/dbeta` of [`p_correction`] next to the identity
/// `-ln|y*(z_c)| P(beta)`. Returns `(finite_difference, identity)`.
pub fn p_correction_beta_slope(
    beta: f64,
    branch: Branch,
    cs: &CriticalStructure,
    kappa2: f64,
) -> Result<(f64, f64)> {
    let h = 1e-6;
    let up = p_correction(beta + h, branch, cs, kappa2)?;
    let down = p_correction(beta - h, branch, cs, kappa2)?;
    let mid = p_correction(beta, branch, cs, kappa2)?;
    Ok(((up - down) / (2.0 * h), -cs.y_star_at_zc(branch).abs().ln() * mid))
}

/// Coefficient `c` in `y(z, t) = y*(z) + c t^(-(beta-alpha)/(1+alpha)) + ...`
/// for the maximum on `branch` under a second tail `kappa2 |x|^(-beta)`:
/// `c = -kappa2 |y*|^(-beta) / g'(y*)`.
pub fn branch_shift_coefficient(
    z: f64,
    branch: Branch,
    leading: &LeadingTail,
    kappa2: f64,
    beta: f64,
) -> Result<f64> {
    check_beta(leading.alpha, beta)?;
    let kappa2 = check_kappa2(kappa2)?;
    let y = y_star(z, branch, leading)?;
    Ok(-kappa2 * y.abs().powf(-beta) / leading.root_map_slope(y))
}

/// The sign-blind variant `kappa2 / (|y*|^beta (alpha kappa1 |y*|^(-1-alpha) - 1))`.
/// Coincides with [`branch_shift_coefficient`] on the plus branch.
pub fn branch_shift_coefficient_published(
    z: f64,
    branch: Branch,
    leading: &LeadingTail,
    kappa2: f64,
    beta: f64,
) -> Result<f64> {
    check_beta(leading.alpha, beta)?;
    let kappa2 = check_kappa2(kappa2)?;
    let y = y_star(z, branch, leading)?;
    let k = leading.alpha * leading.kappa1 * y.abs().powf(-1.0 - leading.alpha);
    let denominator = k - 1.0;
    if denominator.abs() < SINGULAR {
        return Err(Error::SingularDenominator { value: denominator });
    }
    Ok(kappa2 * y.abs().powf(-beta) / denominator)
}

/// Rate of change of the branch maximum value in the zoom coordinate:
/// `d/dx H(y(z_c + delta x), z_c + delta x) = delta * (y*(z_c) - z_c) / 2`.
/// Returns the factor multiplying `delta`.
pub fn zoom_phase_slope(branch: Branch, cs: &CriticalStructure) -> f64 {
    0.5 * (cs.y_star_at_zc(branch) - cs.z_c)
}

/// Order-`delta` offset of a branch maximum produced by the second tail,
/// `-kappa2 sign(y*) |y*|^(1-beta) / (2 (1 - beta))`.
pub fn zoom_phase_offset(branch: Branch, cs: &CriticalStructure, kappa2: f64, beta: f64) -> f64 {
    let y = cs.y_star_at_zc(branch);
    -kappa2 * y.signum() * y.abs().powf(1.0 - beta) / (2.0 * (1.0 - beta))
}

/// Zoom coordinate where the two branch maxima exchange dominance once the
/// second tail's offset is included.
pub fn dominance_switch_offset(cs: &CriticalStructure, kappa2: f64, beta: f64) -> f64 {
    let offset = zoom_phase_offset(Branch::Plus, cs, kappa2, beta)
        - zoom_phase_offset(Branch::Minus, cs, kappa2, beta);
    let slope = zoom_phase_slope(Branch::Plus, cs) - zoom_phase_slope(Branch::Minus, cs);
    -offset / slope
}

/// The two competing maxima of `H_t(., z)` at finite `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchMaxima {
    pub minus: CriticalPoint,
    pub plus: CriticalPoint,
    pub landscape: LandscapeReport,
}

impl BranchMaxima {
    pub fn y_minus(&self) -> f64 {
        self.minus.y
    }
    pub fn y_plus(&self) -> f64 {
        self.plus.y
    }
    pub fn get(&self, branch: Branch) -> &CriticalPoint {
        match branch {
            Branch::Minus => &self.minus,
            Branch::Plus => &self.plus,
        }
    }
}

pub fn finite_t_maxima(datum: &TailFamily, z: f64, t: f64) -> Result<BranchMaxima> {
    let frame = Frame::for_datum(datum, t, z)?;
    let landscape = scan_landscape(datum, &frame, None, None)?;
    let pick = |positive: bool| {
        landscape
            .branch_max(positive)
            .copied()
            .ok_or(Error::BranchMissing {
                branch: if positive { "plus" } else { "minus" },
                z,
                t,
            })
    };
    let minus = pick(false)?;
    let plus = pick(true)?;
    Ok(BranchMaxima {
        minus,
        plus,
        landscape,
    })
}
