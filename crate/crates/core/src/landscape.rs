//! The rescaled phase function and its critical points.
//!
//! In the self-similar variables `x = T y`, `T = t^(1/(1+a))`, the Hopf–Cole
//! integrals have the exponent `Lambda * H_t(y, z)` with
//!
//! ```text
//! H_t(y, z) = -(z - y)^2 / 4 - F0(y T) / (2 Lambda),   Lambda = t^((1-a)/(1+a))
//! dH_t/dy   = (z - y - A f0(y T)) / 2,                 A = t^(a/(1+a))
//! ```
//!
//! For large `t` the y-derivative has two roots that compete for the global
//! maximum, one on each side of the origin.

use serde::{Deserialize, Serialize};

use crate::error::{finite, invalid, Error, Result};
use crate::initial_data::TailFamily;
use crate::roots::bisect;

/// Classification tolerance for `|d^2 H / dy^2|`.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;
/// Target `|dH/dy|` for refined critical points.
pub const SLOPE_TOLERANCE: f64 = 1e-12;
/// Minimum number of grid cells across a scan window.
pub const MIN_CELLS: f64 = 1e3;
/// Default number of grid cells across the automatic window.
pub const DEFAULT_CELLS: f64 = 4e3;

/// Time and rescaled position, with the derived scales recomputed on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    alpha0: f64,
    t: f64,
    z: f64,
}

impl Frame {
    pub fn new(alpha0: f64, t: f64, z: f64) -> Result<Self> {
        finite("alpha0", alpha0)?;
        finite("t", t)?;
        finite("z", z)?;
        if !(alpha0 > 0.0 && alpha0 < 1.0) {
            return Err(invalid("alpha0", format!("must lie in (0, 1), got {alpha0}")));
        }
        if t <= 0.0 {
            return Err(invalid("t", format!("must be positive, got {t}")));
        }
        Ok(Self { alpha0, t, z })
    }

    /// Frame whose scaling exponent is the datum's leading tail exponent.
    pub fn for_datum(datum: &TailFamily, t: f64, z: f64) -> Result<Self> {
        Self::new(datum.scaling_alpha(), t, z)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn with_z(&self, z: f64) -> Result<Self> {
        Self::new(self.alpha0, self.t, z)
    }

    /// `T = t^(1/(1+a))`.
    pub fn space_scale(&self) -> f64 {
        self.t.powf(1.0 / (1.0 + self.alpha0))
    }

    /// `A = t^(a/(1+a))`.
    pub fn amplitude_scale(&self) -> f64 {
        self.t.powf(self.alpha0 / (1.0 + self.alpha0))
    }

    /// `Lambda = t^((1-a)/(1+a))`.
    pub fn laplace_parameter(&self) -> f64 {
        self.t.powf((1.0 - self.alpha0) / (1.0 + self.alpha0))
    }

    pub(crate) fn scales(&self) -> Scales {
        Scales {
            z: self.z,
            space: self.space_scale(),
            amplitude: self.amplitude_scale(),
            laplace: self.laplace_parameter(),
        }
    }
}

/// Precomputed scales for tight loops.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scales {
    pub z: f64,
    pub space: f64,
    pub amplitude: f64,
    pub laplace: f64,
}

impl Scales {
    #[inline]
    pub fn phase(&self, datum: &TailFamily, y: f64) -> f64 {
        let d = self.z - y;
        -0.25 * d * d - 0.5 * datum.antiderivative(y * self.space) / self.laplace
    }

    #[inline]
    pub fn slope(&self, datum: &TailFamily, y: f64) -> f64 {
        0.5 * (self.z - y - self.amplitude * datum.value(y * self.space))
    }

    /// Central difference of the slope channel.
    #[inline]
    pub fn curvature(&self, datum: &TailFamily, y: f64) -> f64 {
        let h = 1e-5 * (1.0 + y.abs());
        (self.slope(datum, y + h) - self.slope(datum, y - h)) / (2.0 * h)
    }

    /// Rescaled datum `A f0(y T)`.
    #[inline]
    pub fn rescaled_datum(&self, datum: &TailFamily, y: f64) -> f64 {
        self.amplitude * datum.value(y * self.space)
    }
}

/// Which quantity [`ht_eval`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseChannel {
    Value,
    Dy,
}

/// `H_t(y, z)` or `dH_t/dy (y, z)`.
pub fn ht_eval(datum: &TailFamily, frame: &Frame, y: f64, channel: PhaseChannel) -> Result<f64> {
    let y = finite("y", y)?;
    let s = frame.scales();
    Ok(match channel {
        PhaseChannel::Value => s.phase(datum, y),
        PhaseChannel::Dy => s.slope(datum, y),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub y: f64,
    pub h_value: f64,
    pub kind: PointKind,
    pub curvature: f64,
}

/// All critical points of `y -> H_t(y, z)` found on a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeReport {
    pub frame: Frame,
    /// Sorted by `y`.
    pub points: Vec<CriticalPoint>,
    pub global_max_index: usize,
    /// Height of the global maximum above the runner-up maximum, if any.
    pub gap: Option<f64>,
    pub window: (f64, f64),
    pub resolution: f64,
    #[serde(skip)]
    grid: Vec<f64>,
    #[serde(skip)]
    heights: Vec<f64>,
}

impl LandscapeReport {
    pub fn global_max(&self) -> &CriticalPoint {
        &self.points[self.global_max_index]
    }

    pub fn maxima(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|p| p.kind == PointKind::Max)
    }

    pub fn max_count(&self) -> usize {
        self.maxima().count()
    }

    /// Highest maximum with `y < 0` (resp. `y > 0`).
    pub fn branch_max(&self, positive: bool) -> Option<&CriticalPoint> {
        self.maxima()
            .filter(|p| (p.y > 0.0) == positive && p.y != 0.0)
            .max_by(|a, b| a.h_value.total_cmp(&b.h_value))
    }

    /// Sampled `(y, H_t)` pairs of the scan grid.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.iter().copied().zip(self.heights.iter().copied())
    }
}

/// The automatic search window for a datum with leading amplitude `kappa0`.
pub fn auto_window(z: f64, kappa0: f64) -> (f64, f64) {
    let r = z.abs() + 5.0 * kappa0 + 5.0;
    let spread = 3.0 * (kappa0 + z.abs());
    ((-r).min(z - spread), r.max(z + spread))
}

/// Locates and classifies every sign change of `dH_t/dy` on a grid.
///
/// `window` defaults to [`auto_window`], `resolution` to 1/4000 of its width.
pub fn scan_landscape(
    datum: &TailFamily,
    frame: &Frame,
    window: Option<(f64, f64)>,
    resolution: Option<f64>,
) -> Result<LandscapeReport> {
    let (lo, hi) = window.unwrap_or_else(|| auto_window(frame.z(), datum.leading_kappa()));
    finite("window.lo", lo)?;
    finite("window.hi", hi)?;
    if !(hi > lo) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let width = hi - lo;
    let resolution = resolution.unwrap_or(width / DEFAULT_CELLS);
    if !(resolution > 0.0) || width / resolution < MIN_CELLS * (1.0 - 1e-12) {
        return Err(invalid(
            "resolution",
            format!("{resolution} gives fewer than {MIN_CELLS} cells on a window of width {width}"),
        ));
    }
    let s = frame.scales();
    let cells = (width / resolution).ceil() as usize;
    let grid: Vec<f64> = (0..=cells)
        .map(|i| if i == cells { hi } else { lo + i as f64 * resolution })
        .collect();
    let slopes: Vec<f64> = grid.iter().map(|&y| s.slope(datum, y)).collect();
    let heights: Vec<f64> = grid.iter().map(|&y| s.phase(datum, y)).collect();

    // sign classes: positive vs non-positive; an exact zero on a node is
    // picked up by both neighbouring cells and deduplicated below
    let mut points = Vec::new();
    for i in 0..cells {
        if (slopes[i] > 0.0) == (slopes[i + 1] > 0.0) {
            continue;
        }
        let y = bisect(|y| s.slope(datum, y), grid[i], grid[i + 1], SLOPE_TOLERANCE, "dH/dy")?;
        points.push(classify(datum, &s, y)?);
    }
    points.sort_by(|a, b| a.y.total_cmp(&b.y));
    points.dedup_by(|a, b| a.y == b.y);

    let global_max_index = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.kind == PointKind::Max)
        .max_by(|a, b| a.1.h_value.total_cmp(&b.1.h_value))
        .map(|(i, _)| i)
        .ok_or_else(|| invalid("window", format!("[{lo}, {hi}] contains no interior maximum")))?;
    let top = points[global_max_index].h_value;
    let gap = points
        .iter()
        .enumerate()
        .filter(|(i, p)| *i != global_max_index && p.kind == PointKind::Max)
        .map(|(_, p)| top - p.h_value)
        .min_by(|a, b| a.total_cmp(b));

    Ok(LandscapeReport {
        frame: *frame,
        points,
        global_max_index,
        gap,
        window: (lo, hi),
        resolution,
        grid,
        heights,
    })
}

fn classify(datum: &TailFamily, s: &Scales, y: f64) -> Result<CriticalPoint> {
    let curvature = s.curvature(datum, y);
    if curvature.abs() < DEGENERACY_TOLERANCE || !curvature.is_finite() {
        return Err(Error::DegenerateLandscape { y, curvature });
    }
    let kind = if curvature < 0.0 {
        PointKind::Max
    } else {
        PointKind::Min
    };
    Ok(CriticalPoint {
        y,
        h_value: s.phase(datum, y),
        kind,
        curvature,
    })
}

/// Distance of the global maximum from every value of `H_t` outside a ball
/// of `exclusion_radius` around it, measured on the scan grid together with
/// the critical points and the ball's boundary.
pub fn max_gap(report: &LandscapeReport, exclusion_radius: f64) -> Result<f64> {
    let r = finite("exclusion_radius", exclusion_radius)?;
    if r <= 0.0 {
        return Err(invalid("exclusion_radius", format!("must be positive, got {r}")));
    }
    let top = report.global_max();
    let (lo, hi) = report.window;
    if top.y - r <= lo && top.y + r >= hi {
        return Err(Error::ExclusionCoversWindow {
            center: top.y,
            radius: r,
        });
    }
    let mut sup = f64::NEG_INFINITY;
    for (y, h) in report.samples() {
        if (y - top.y).abs() >= r {
            sup = sup.max(h);
        }
    }
    for p in &report.points {
        if (p.y - top.y).abs() >= r {
            sup = sup.max(p.h_value);
        }
    }
    for edge in [top.y - r, top.y + r] {
        if let Some(h) = interpolate(&report.grid, &report.heights, edge) {
            sup = sup.max(h);
        }
    }
    Ok((top.h_value - sup).max(0.0))
}

fn interpolate(grid: &[f64], values: &[f64], y: f64) -> Option<f64> {
    let (first, last) = (*grid.first()?, *grid.last()?);
    if y < first || y > last {
        return None;
    }
    let k = match grid.binary_search_by(|g| g.total_cmp(&y)) {
        Ok(k) => return Some(values[k]),
        Err(k) => k,
    };
    let (y0, y1) = (grid[k - 1], grid[k]);
    let w = (y - y0) / (y1 - y0);
    Some(values[k - 1] * (1.0 - w) + values[k] * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::FamilySpec;

    fn single() -> TailFamily {
        TailFamily::construct(&FamilySpec::Single { kappa: 1.0, alpha: 0.5 }, 1.0).unwrap()
    }

    #[test]
    fn frame_scales_are_consistent() {
        let f = Frame::new(0.5, 1e6, 0.3).unwrap();
        assert!((f.space_scale() - 1e4).abs() < 1e-8);
        assert!((f.amplitude_scale() - 1e2).abs() < 1e-10);
        assert!((f.laplace_parameter() - 1e2).abs() < 1e-10);
        // A = T / Lambda
        assert!((f.space_scale() / f.laplace_parameter() - f.amplitude_scale()).abs() < 1e-10);
        assert!(Frame::new(0.5, 0.0, 0.0).is_err());
        assert!(Frame::new(1.0, 1.0, 0.0).is_err());
        assert!(Frame::new(0.5, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn zero_datum_is_a_pure_quadratic() {
        let d = TailFamily::zero(0.5).unwrap();
        let f = Frame::new(0.5, 7.0, 1.5).unwrap();
        for &y in &[-2.0, 0.0, 1.5, 4.0] {
            let v = ht_eval(&d, &f, y, PhaseChannel::Value).unwrap();
            assert_eq!(v, -(1.5 - y) * (1.5 - y) / 4.0);
        }
        let rep = scan_landscape(&d, &f, None, None).unwrap();
        assert_eq!(rep.max_count(), 1);
        assert!((rep.global_max().y - 1.5).abs() <= 2.0 * SLOPE_TOLERANCE);
        assert_eq!(rep.gap, None);
    }

    #[test]
    fn phase_is_antisymmetric_for_even_data() {
        let d = single();
        for &(y, z, t) in &[(0.3, 1.2, 10.0), (-2.0, 0.5, 1e5), (1.7, -0.4, 3e8)] {
            let a = ht_eval(&d, &Frame::new(0.5, t, z).unwrap(), y, PhaseChannel::Value).unwrap();
            let b = ht_eval(&d, &Frame::new(0.5, t, -z).unwrap(), -y, PhaseChannel::Value).unwrap();
            // -(z-y)^2/4 is even; the F0 term is odd, so only the quadratic survives the sum
            let quad = -(z - y) * (z - y) / 4.0;
            assert!(((a + b) - 2.0 * quad).abs() < 1e-12 * (1.0 + quad.abs()));
        }
    }

    #[test]
    fn dy_root_near_minus_one_at_origin() {
        let d = single();
        let f = Frame::new(0.5, 1e10, 0.0).unwrap();
        let s = f.scales();
        let root = bisect(|y| s.slope(&d, y), -3.0, -0.2, 0.0, "test").unwrap();
        assert!((root + 1.0).abs() <= 1e-3, "{root}");
    }

    #[test]
    fn empty_window_and_coarse_resolution_rejected() {
        let d = single();
        let f = Frame::new(0.5, 10.0, 0.0).unwrap();
        assert!(matches!(
            scan_landscape(&d, &f, Some((1.0, 1.0)), None),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(scan_landscape(&d, &f, Some((-5.0, 5.0)), Some(0.1)).is_err());
    }

    #[test]
    fn quadratic_gap_is_exact() {
        let d = TailFamily::zero(0.5).unwrap();
        let f = Frame::new(0.5, 3.0, 1.5).unwrap();
        let rep = scan_landscape(&d, &f, Some((-3.5, 6.5)), Some(0.005)).unwrap();
        let nu = max_gap(&rep, 1.0).unwrap();
        assert!((nu - 0.25).abs() < 1e-12, "{nu}");
        assert!(matches!(
            max_gap(&rep, 20.0),
            Err(Error::ExclusionCoversWindow { .. })
        ));
    }
}
