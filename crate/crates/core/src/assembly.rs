//! From the lune to the plane: cylinders, stacked cylinders with controlled
//! norms, and the planar curve whose footprints are bounded by the embedded
//! circles `β_t`.
//!
//! Angles are carried in half turns (`h = θ/π`) wherever a value has to land
//! exactly on `0` or `π`; rotations by multiples of `π` are then integer
//! shifts of `h`.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::CantorIndex;
use crate::ceiling_field::{ceiling, derivatives, psi, CeilingApprox, TieBreak};
use crate::error::{Error, Result};
use crate::lune::Lune;
use crate::peano::{build_curve, diameter_formula, estimate_m, hausdorff, image_points, CurveApprox, Raster};
use crate::smoothfn::{make_phi, Domain, NormSettings, SmoothFn};
use crate::subdivision::{build_family, EpsilonSchedule, LuneFamily};

/// Jets of the cylinder ceilings are compared to this tolerance, relative to
/// their size, where the lower and upper constructions meet `g`.
pub const SEAM_TOLERANCE: f64 = 1e-9;
/// Allowed deviation of the first and last ceilings from `c` and `d`.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// `g(θ) = S((1 - cos θ)/2)`: zero at `0`, one at `π`, flat to all orders at
/// both, strictly monotone in between.
pub fn periodic_ramp() -> SmoothFn {
    let g = SmoothFn::identity().cos().scale(-0.5).shift(0.5).bump_integral();
    g.restrict(Domain::Circle).expect("a function on the line restricts to the circle")
}

/// Knobs shared by every cylinder build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderOptions {
    pub eps: EpsilonSchedule,
    pub norm: NormSettings,
    /// Number of parameter values used to estimate `C`.
    pub c_samples: usize,
    /// Angular grid for sampled `C^k` norms of ceilings.
    pub theta_grid: usize,
    /// Largest number of stacked copies allowed.
    pub max_stack: u64,
}

impl Default for CylinderOptions {
    fn default() -> Self {
        CylinderOptions {
            eps: EpsilonSchedule::default(),
            norm: NormSettings::default(),
            c_samples: 257,
            theta_grid: 1024,
            max_stack: 1_000_000,
        }
    }
}

/// The normalized cylinder over `[0, 1]` with `[c, d] = [0, 1]`: the lunes
/// `L(0, g)` on `[0, 2π]` and `L(g, 1)` on `[π, 3π]`, both rescaled to `[0, 1]`.
#[derive(Debug)]
pub struct CylinderBase {
    g: SmoothFn,
    depth: usize,
    lower: LuneFamily,
    lower_idx: CantorIndex,
    upper: LuneFamily,
    upper_idx: CantorIndex,
}

impl CylinderBase {
    pub fn build(depth: usize, opts: &CylinderOptions) -> Result<Self> {
        let g = periodic_ramp();
        let lower_g = SmoothFn::linear(TAU, 0.0).then(&g);
        let lower = Lune::new(SmoothFn::constant(0.0), lower_g, 0.0, 1.0)?.with_support(0.0, 1.0)?;
        let upper_f = SmoothFn::linear(TAU, PI).then(&g);
        let upper = Lune::new(upper_f, SmoothFn::constant(1.0), 0.0, 1.0)?.with_support(0.0, 1.0)?;
        let phi = make_phi();
        let (lower, upper) = rayon::join(
            || build_family(&lower, &opts.eps, depth, &phi, &opts.norm),
            || build_family(&upper, &opts.eps, depth, &phi, &opts.norm),
        );
        let (lower, upper) = (lower?, upper?);
        let lower_idx = CantorIndex::from_family(&lower);
        let upper_idx = CantorIndex::from_family(&upper);
        Ok(CylinderBase { g, depth, lower, lower_idx, upper, upper_idx })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn g(&self) -> &SmoothFn {
        &self.g
    }

    pub fn lower(&self) -> &LuneFamily {
        &self.lower
    }

    pub fn upper(&self) -> &LuneFamily {
        &self.upper
    }

    pub fn lower_curve(&self) -> CurveApprox<'_> {
        build_curve(&self.lower, &self.lower_idx, self.depth).expect("index built from the family")
    }

    pub fn upper_curve(&self) -> CurveApprox<'_> {
        build_curve(&self.upper, &self.upper_idx, self.depth).expect("index built from the family")
    }

    /// `(h, y)` of the normalized curve at `s ∈ [0, 1]`, before reduction
    /// mod 2: the first third runs the lower curve over `h ∈ [0, 2]`, the
    /// middle third runs back along `g` from `h = 2` to `h = 1`, the last
    /// third runs the upper curve over `h ∈ [1, 3]`.
    pub fn point(&self, s: f64) -> Result<(f64, f64)> {
        if s < 1.0 / 3.0 {
            let (x, y) = self.lower_curve().eval((3.0 * s).min(1.0))?;
            Ok((2.0 * x, y))
        } else if s <= 2.0 / 3.0 {
            let h = 3.0 * (1.0 - s);
            Ok((h, self.g.at(PI * h)))
        } else {
            let (x, y) = self.upper_curve().eval((3.0 * s - 2.0).clamp(0.0, 1.0))?;
            Ok((1.0 + 2.0 * x, y))
        }
    }

    /// Which construction supplies `F̂_s`.
    pub fn part(&self, s: f64) -> Result<Part> {
        Ok(if s < 1.0 / 3.0 {
            Part::Lower(ceiling((3.0 * s).min(1.0), &self.lower, &self.lower_idx)?)
        } else if s <= 2.0 / 3.0 {
            Part::Middle
        } else {
            Part::Upper(ceiling((3.0 * s - 2.0).clamp(0.0, 1.0), &self.upper, &self.upper_idx)?)
        })
    }

    /// Derivatives in `θ` of `F̂` at `h ∈ [0, 2)`.
    fn jet(&self, part: &Part, h: f64, order: usize) -> Result<Vec<f64>> {
        let (fam, ca, u) = match part {
            Part::Middle => return Ok(self.g.jet(PI * h, order)?.coeffs().to_vec()),
            Part::Lower(ca) => (&self.lower, ca, h / 2.0),
            Part::Upper(ca) => (&self.upper, ca, (h - 1.0).rem_euclid(2.0) / 2.0),
        };
        let mut d = derivatives(&ca.series(fam, u, order)?);
        let mut w = 1.0;
        for v in d.iter_mut().skip(1) {
            w /= TAU;
            *v *= w;
        }
        Ok(d)
    }

    /// `ψ̂` at `(h, y)` with `h ∈ [0, 2)`, `y ∈ [0, 1]`, as a slope in `θ`.
    fn slope(&self, h: f64, y: f64) -> Result<f64> {
        let u = h / 2.0;
        let top = self.lower.root().ceiling().at(u);
        let (fam, x) = if y <= top {
            (&self.lower, u)
        } else {
            (&self.upper, (h - 1.0).rem_euclid(2.0) / 2.0)
        };
        let root = fam.root();
        let (lo, hi) = (root.floor().at(x), root.ceiling().at(x));
        Ok(psi(x, y.clamp(lo, hi), fam, TieBreak::Lowest)?.slope / TAU)
    }

    /// `sup_s ‖F̂_s‖_k` over `samples` equally spaced `s`, on an angular grid.
    pub fn sampled_norm(&self, k: usize, samples: usize, grid: usize) -> Result<f64> {
        let rows: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let s = i as f64 / (samples - 1).max(1) as f64;
                let part = self.part(s)?;
                let mut best: f64 = 0.0;
                for q in 0..grid {
                    let h = 2.0 * q as f64 / grid as f64;
                    for v in self.jet(&part, h, k)? {
                        best = best.max(v.abs());
                    }
                }
                Ok(best)
            })
            .collect::<Result<_>>()?;
        Ok(rows.into_iter().fold(0.0, f64::max))
    }
}

/// Source of a normalized ceiling `F̂_s`.
#[derive(Clone, Debug, Serialize)]
pub enum Part {
    /// `F_{1, 3s}` from the lower lune.
    Lower(CeilingApprox),
    /// `g` itself.
    Middle,
    /// `F_{2, 3s-2}` from the upper lune.
    Upper(CeilingApprox),
}

/// A curve filling `T × [c, d]` over `[t0, t1]`, made of `stack` rescaled
/// copies of the normalized cylinder, copy `j` turned by `(j + rotation) π`.
#[derive(Clone, Debug)]
pub struct CylinderCurve {
    pub t_range: (f64, f64),
    pub y_range: (f64, f64),
    pub stack: u64,
    /// Half turns added to every copy.
    pub rotation: u64,
    /// Estimate of `sup_s ‖F̂_s‖_{k0}` used to choose `stack`, if any.
    pub c_estimate: Option<f64>,
    base: Arc<CylinderBase>,
}

fn lerp(c: f64, d: f64, v: f64) -> f64 {
    c * (1.0 - v) + d * v
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Parameter(format!("{name} [{lo}, {hi}] is degenerate")));
    }
    Ok(())
}

pub fn build_cylinder(t_range: (f64, f64), y_range: (f64, f64), depth: usize) -> Result<CylinderCurve> {
    build_cylinder_with(t_range, y_range, depth, &CylinderOptions::default())
}

pub fn build_cylinder_with(
    t_range: (f64, f64),
    y_range: (f64, f64),
    depth: usize,
    opts: &CylinderOptions,
) -> Result<CylinderCurve> {
    unstacked(Arc::new(CylinderBase::build(depth, opts)?), t_range, y_range)
}

/// A single copy of the base curve over the given ranges.
pub fn unstacked(base: Arc<CylinderBase>, t_range: (f64, f64), y_range: (f64, f64)) -> Result<CylinderCurve> {
    check_range("t-range", t_range)?;
    check_range("y-range", y_range)?;
    Ok(CylinderCurve { t_range, y_range, stack: 1, rotation: 0, c_estimate: None, base })
}

/// The smallest odd integer above `x`.
pub fn odd_above(x: f64) -> u64 {
    let n = x.floor().max(0.0) as u64 + 1;
    if n % 2 == 1 {
        n
    } else {
        n + 1
    }
}

/// `C = safety · sup_s ‖F̂_s‖_{k0}` sampled, plus the ceiling tail.
pub fn estimate_c(base: &CylinderBase, k0: usize, opts: &CylinderOptions) -> Result<f64> {
    let sampled = base.sampled_norm(k0, opts.c_samples, opts.theta_grid)?;
    let tail = crate::ceiling_field::tail_bound(&base.lower, base.depth)
        .max(crate::ceiling_field::tail_bound(&base.upper, base.depth));
    Ok(opts.norm.safety_factor * sampled + tail)
}

pub fn build_cylinder_with_norm(
    t_range: (f64, f64),
    y_range: (f64, f64),
    k0: usize,
    delta0: f64,
    depth: usize,
) -> Result<CylinderCurve> {
    let opts = CylinderOptions::default();
    let base = Arc::new(CylinderBase::build(depth, &opts)?);
    let c = estimate_c(&base, k0, &opts)?;
    stacked(base, t_range, y_range, c, delta0, 0, &opts)
}

/// A stacked cylinder over a prebuilt base, given `C`.
pub fn stacked(
    base: Arc<CylinderBase>,
    t_range: (f64, f64),
    y_range: (f64, f64),
    c: f64,
    delta0: f64,
    rotation: u64,
    opts: &CylinderOptions,
) -> Result<CylinderCurve> {
    check_range("t-range", t_range)?;
    check_range("y-range", y_range)?;
    if !(delta0 > 0.0) {
        return Err(Error::Parameter(format!("delta0 = {delta0} must be positive")));
    }
    let n = odd_above((c + 1.0) / delta0);
    if n > opts.max_stack {
        return Err(Error::Budget { needed: n.to_string(), budget: opts.max_stack });
    }
    Ok(CylinderCurve { t_range, y_range, stack: n, rotation: rotation % 2, c_estimate: Some(c), base })
}

impl CylinderCurve {
    pub fn base(&self) -> &CylinderBase {
        &self.base
    }

    pub fn base_arc(&self) -> Arc<CylinderBase> {
        self.base.clone()
    }

    /// Copy index and local parameter of `t`.
    pub fn split(&self, t: f64) -> (u64, f64) {
        let (t0, t1) = self.t_range;
        let tau = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let z = tau * self.stack as f64;
        let j = (z.floor() as u64).min(self.stack - 1);
        (j, (z - j as f64).clamp(0.0, 1.0))
    }

    fn place(&self, j: u64, (h, y): (f64, f64)) -> (f64, f64) {
        let turns = h + (j + self.rotation) as f64;
        let theta = PI * turns.rem_euclid(2.0);
        let v = (j as f64 + y) / self.stack as f64;
        (theta, lerp(self.y_range.0, self.y_range.1, v))
    }

    /// Copy `j` at local parameter `s`.
    pub fn point_in(&self, j: u64, s: f64) -> Result<(f64, f64)> {
        Ok(self.place(j, self.base.point(s)?))
    }

    /// `γ(t) = (θ, y)` with `θ ∈ [0, 2π)`.
    pub fn point(&self, t: f64) -> Result<(f64, f64)> {
        let (j, s) = self.split(t);
        self.point_in(j, s)
    }

    /// Angle at which the curve starts and ends.
    pub fn end_angles(&self) -> (f64, f64) {
        (PI * (self.rotation % 2) as f64, PI * ((self.rotation + self.stack) % 2) as f64)
    }

    pub fn ceiling(&self, t: f64) -> Result<CylinderCeiling> {
        let (j, s) = self.split(t);
        Ok(CylinderCeiling { t, j, s, part: self.base.part(s)?, curve: self.clone() })
    }

    /// `ψ(θ, y)`.
    pub fn psi(&self, theta: f64, y: f64) -> Result<f64> {
        let (c, d) = self.y_range;
        let n = self.stack;
        let z = ((y - c) / (d - c)).clamp(0.0, 1.0) * n as f64;
        let j = (z.floor() as u64).min(n - 1);
        let yh = (z - j as f64).clamp(0.0, 1.0);
        let h = (theta / PI - (j + self.rotation) as f64).rem_euclid(2.0);
        Ok(self.base.slope(h, yh)? * (d - c) / n as f64)
    }

    /// The affine interpolant `c_t`.
    pub fn c_t(&self, t: f64) -> f64 {
        let (t0, t1) = self.t_range;
        let (c, d) = self.y_range;
        (c * (t1 - t) + d * (t - t0)) / (t1 - t0)
    }
}

/// `F_t` for one `t`.
#[derive(Clone, Debug)]
pub struct CylinderCeiling {
    pub t: f64,
    /// Copy of the normalized cylinder that holds `t`.
    pub j: u64,
    /// Local parameter in that copy.
    pub s: f64,
    pub part: Part,
    curve: CylinderCurve,
}

impl CylinderCeiling {
    /// `(F_t(θ), F_t'(θ), ..., F_t^(order)(θ))`.
    pub fn jet(&self, theta: f64, order: usize) -> Result<Vec<f64>> {
        let cv = &self.curve;
        let h = (theta / PI - (self.j + cv.rotation) as f64).rem_euclid(2.0);
        let mut d = cv.base.jet(&self.part, h, order)?;
        let (c, dd) = cv.y_range;
        let n = cv.stack as f64;
        d[0] = lerp(c, dd, (self.j as f64 + d[0]) / n);
        for v in d.iter_mut().skip(1) {
            *v *= (dd - c) / n;
        }
        Ok(d)
    }

    pub fn value(&self, theta: f64) -> Result<f64> {
        Ok(self.jet(theta, 0)?[0])
    }

    /// `‖F_t - offset‖_k` on `grid` equally spaced angles.
    pub fn norm_minus(&self, offset: f64, k: usize, grid: usize) -> Result<f64> {
        let mut best: f64 = 0.0;
        for q in 0..grid {
            let mut d = self.jet(TAU * q as f64 / grid as f64, k)?;
            d[0] -= offset;
            best = d.iter().fold(best, |b, v| b.max(v.abs()));
        }
        Ok(best)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryReport {
    pub first_ceiling_deviation: f64,
    pub last_ceiling_deviation: f64,
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub expected_start: (f64, f64),
    pub expected_end: (f64, f64),
    pub pass: bool,
}

/// `F_{t0} ≡ c`, `F_{t1} ≡ d` and the exact end points.
pub fn boundary_check(cyl: &CylinderCurve, grid: usize) -> Result<BoundaryReport> {
    let (t0, t1) = cyl.t_range;
    let (c, d) = cyl.y_range;
    let first = cyl.ceiling(t0)?.norm_minus(c, 0, grid)?;
    let last = cyl.ceiling(t1)?.norm_minus(d, 0, grid)?;
    let start = cyl.point(t0)?;
    let end = cyl.point(t1)?;
    let (a0, a1) = cyl.end_angles();
    let expected_start = (a0, c);
    let expected_end = (a1, d);
    Ok(BoundaryReport {
        first_ceiling_deviation: first,
        last_ceiling_deviation: last,
        start,
        end,
        expected_start,
        expected_end,
        pass: first <= BOUNDARY_TOLERANCE
            && last <= BOUNDARY_TOLERANCE
            && start == expected_start
            && end == expected_end,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeamReport {
    /// Largest relative jet mismatch with `g` at `s = 1/3` and `s = 2/3`.
    pub max_jet_mismatch: f64,
    /// Largest gap between the pieces of the curve at the same times.
    pub max_point_gap: f64,
    pub pass: bool,
}

/// The lower and upper ceilings meet `g` with all sampled jets at the
/// transition times, and the three legs of the normalized curve meet.
pub fn seam_check(base: &CylinderBase, order: usize, grid: usize) -> Result<SeamReport> {
    let lower_end = Part::Lower(ceiling(1.0, &base.lower, &base.lower_idx)?);
    let upper_start = Part::Upper(ceiling(0.0, &base.upper, &base.upper_idx)?);
    let mut worst: f64 = 0.0;
    for q in 0..grid {
        let h = 2.0 * q as f64 / grid as f64;
        let want = base.jet(&Part::Middle, h, order)?;
        for part in [&lower_end, &upper_start] {
            let got = base.jet(part, h, order)?;
            for (a, b) in got.iter().zip(&want) {
                worst = worst.max((a - b).abs() / (1.0 + b.abs()));
            }
        }
    }
    let dist = |p: (f64, f64), q: (f64, f64)| {
        let dh = (p.0 - q.0).rem_euclid(2.0);
        (PI * dh.min(2.0 - dh)).hypot(p.1 - q.1)
    };
    let lower = base.lower_curve().eval(1.0)?;
    let upper = base.upper_curve().eval(0.0)?;
    let gap = dist((2.0 * lower.0, lower.1), base.point(1.0 / 3.0)?)
        .max(dist((1.0 + 2.0 * upper.0, upper.1), base.point(2.0 / 3.0)?));
    Ok(SeamReport { max_jet_mismatch: worst, max_point_gap: gap, pass: worst <= SEAM_TOLERANCE && gap <= 1e-12 })
}

#[derive(Clone, Debug, Serialize)]
pub struct StackJunctionReport {
    pub junctions: u64,
    pub max_gap: f64,
    pub pass: bool,
}

/// Copy `j - 1` at its end against copy `j` at its start, for every `j`.
pub fn stack_junction_check(cyl: &CylinderCurve) -> Result<StackJunctionReport> {
    let mut max_gap: f64 = 0.0;
    for j in 1..cyl.stack {
        let a = cyl.point_in(j - 1, 1.0)?;
        let b = cyl.point_in(j, 0.0)?;
        max_gap = max_gap.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
    }
    Ok(StackJunctionReport { junctions: cyl.stack.saturating_sub(1), max_gap, pass: max_gap == 0.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormRow {
    pub t: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub k0: usize,
    pub delta0: f64,
    pub stack: u64,
    pub c_estimate: Option<f64>,
    /// `(C + 1)/δ0`, which the stack count must exceed.
    pub stack_threshold: Option<f64>,
    pub rows: Vec<NormRow>,
    pub max_norm: f64,
    pub pass: bool,
}

/// `‖F_t - c_t‖_{k0} < δ0` at each `t`, with the stack count odd and above
/// `(C + 1)/δ0`.
pub fn norm_check(cyl: &CylinderCurve, k0: usize, delta0: f64, ts: &[f64], grid: usize) -> Result<NormReport> {
    let rows: Vec<NormRow> = ts
        .par_iter()
        .map(|&t| Ok(NormRow { t, norm: cyl.ceiling(t)?.norm_minus(cyl.c_t(t), k0, grid)? }))
        .collect::<Result<_>>()?;
    let max_norm = rows.iter().map(|r| r.norm).fold(0.0, f64::max);
    let stack_threshold = cyl.c_estimate.map(|c| (c + 1.0) / delta0);
    let stack_ok = cyl.stack % 2 == 1 && stack_threshold.is_none_or(|x| cyl.stack as f64 > x);
    Ok(NormReport {
        k0,
        delta0,
        stack: cyl.stack,
        c_estimate: cyl.c_estimate,
        stack_threshold,
        rows,
        max_norm,
        pass: max_norm < delta0 && stack_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CylinderFootprintRow {
    pub t: f64,
    pub distance: f64,
    pub bound: f64,
    pub pitch: f64,
    pub pass: bool,
}

/// Raster comparison of `γ([t0, t])` with `{c ≤ y ≤ F_t}` for a plain
/// cylinder, in the coordinates `(θ/2π, (y - c)/(d - c))`.
pub fn cylinder_footprint_check(cyl: &CylinderCurve, t: f64, raster: usize, params: usize) -> Result<CylinderFootprintRow> {
    if cyl.stack != 1 {
        return Err(Error::Parameter("the footprint check runs on a single cylinder".into()));
    }
    let base = &cyl.base;
    let (_, s) = cyl.split(t);
    let pitch = 1.0 / raster as f64;
    let mut img = Raster::new(raster, 0.0, 0.0, pitch);
    let mut mark = |x: f64, y: f64| img.mark(x.rem_euclid(1.0), y);
    for (x, y) in image_points(&base.lower_curve(), (3.0 * s).min(1.0), params, pitch)? {
        mark(x, y);
    }
    if s >= 1.0 / 3.0 {
        let end = 1.5 * (1.0 - s.min(2.0 / 3.0));
        let steps = ((2.0 * (1.0 - end) / pitch).ceil() as usize).max(1);
        for i in 0..=steps {
            let x = 1.0 + (end - 1.0) * i as f64 / steps as f64;
            mark(x, base.g.at(TAU * x));
        }
    }
    if s > 2.0 / 3.0 {
        for (x, y) in image_points(&base.upper_curve(), 3.0 * s - 2.0, params, pitch)? {
            mark(0.5 + x, y);
        }
    }
    let part = base.part(s)?;
    let mut region = Raster::new(raster, 0.0, 0.0, pitch);
    for i in 0..raster {
        let x = region.column_center(i);
        let top = base.jet(&part, 2.0 * x, 0)?[0];
        if top > 0.0 {
            region.mark_span(i, 0.0, top);
        }
    }
    let distance = hausdorff(&img, &region);
    let d_n = |fam: &LuneFamily| -> Result<f64> {
        Ok(diameter_formula(fam, base.depth, estimate_m(fam, 16, 1)?))
    };
    let bound = d_n(&base.lower)?.max(d_n(&base.upper)?).sqrt() + 2.0 * pitch;
    Ok(CylinderFootprintRow { t, distance, bound, pitch, pass: distance <= bound })
}

/// Band data `t_n`, `k_n`, `ε_n` standing in for the semicontinuous `k(·)`
/// and `ε(·)`: on `[t_n, t_{n+1}]`, `k(t) ≤ k_n` and `ε(t) ≥ ε_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremSchedule {
    pub breakpoints: Vec<f64>,
    pub k: Vec<usize>,
    pub eps: Vec<f64>,
}

impl TheoremSchedule {
    /// Equal bands on `[lo, hi]` with the same `k` and `ε`.
    pub fn uniform(lo: f64, hi: f64, bands: usize, k: usize, eps: f64) -> Self {
        let breakpoints = (0..=bands).map(|i| lo + (hi - lo) * i as f64 / bands as f64).collect();
        TheoremSchedule { breakpoints, k: vec![k; bands], eps: vec![eps; bands] }
    }

    pub fn validate(&self) -> Result<()> {
        let bands = self.breakpoints.len().saturating_sub(1);
        if bands == 0 || self.k.len() != bands || self.eps.len() != bands {
            return Err(Error::Parameter(format!(
                "{} breakpoints need {} orders and tolerances, got {} and {}",
                self.breakpoints.len(),
                bands,
                self.k.len(),
                self.eps.len()
            )));
        }
        if !(self.breakpoints[0] > 0.0) || self.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Parameter("breakpoints must be positive and increasing".into()));
        }
        if self.eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::Parameter("every ε_n must be positive".into()));
        }
        Ok(())
    }

    pub fn bands(&self) -> usize {
        self.k.len()
    }

    /// `δ_n = ε_n / 2^{k_n}`.
    pub fn delta(&self, n: usize) -> f64 {
        self.eps[n] / 2f64.powi(self.k[n] as i32)
    }

    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.breakpoints[n], self.breakpoints[n + 1])
    }

    /// The band holding `t`; a breakpoint belongs to the band below it.
    pub fn band_of(&self, t: f64) -> Option<usize> {
        if t < self.breakpoints[0] || t > *self.breakpoints.last()? {
            return None;
        }
        Some(self.breakpoints[1..].iter().position(|&b| t <= b).unwrap_or(self.bands() - 1))
    }
}

/// One band of the planar curve.
#[derive(Clone, Debug)]
pub struct PlanarBand {
    pub index: usize,
    pub interval: (f64, f64),
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub cylinder: CylinderCurve,
}

/// `γ = P ∘ γ*` over a working window, band by band.
#[derive(Clone, Debug)]
pub struct PlanarCurve {
    pub schedule: TheoremSchedule,
    pub window: (f64, f64),
    pub bands: Vec<PlanarBand>,
}

/// `P(θ, r) = (r cos θ, r sin θ)`.
pub fn polar(theta: f64, r: f64) -> (f64, f64) {
    (r * theta.cos(), r * theta.sin())
}

pub fn build_planar(schedule: &TheoremSchedule, window: (f64, f64), depth: usize) -> Result<PlanarCurve> {
    build_planar_with(schedule, window, depth, &CylinderOptions::default())
}

/// Builds one stacked cylinder per band meeting `window`, all over a single
/// normalized base. Each band starts at the angle where the previous one
/// ended.
pub fn build_planar_with(
    schedule: &TheoremSchedule,
    window: (f64, f64),
    depth: usize,
    opts: &CylinderOptions,
) -> Result<PlanarCurve> {
    schedule.validate()?;
    check_range("window", window)?;
    let (lo, hi) = window;
    if !(lo > 0.0) || lo < schedule.breakpoints[0] || hi > *schedule.breakpoints.last().expect("validated") {
        return Err(Error::Parameter(format!("window [{lo}, {hi}] is not covered by the schedule")));
    }
    let base = Arc::new(CylinderBase::build(depth, opts)?);
    let wanted: Vec<usize> = (0..schedule.bands())
        .filter(|&n| {
            let (a, b) = schedule.interval(n);
            a < hi && b > lo
        })
        .collect();
    let mut orders: Vec<usize> = wanted.iter().map(|&n| schedule.k[n]).collect();
    orders.sort();
    orders.dedup();
    let cs: Vec<(usize, f64)> =
        orders.iter().map(|&k| Ok((k, estimate_c(&base, k, opts)?))).collect::<Result<_>>()?;
    let mut bands = Vec::new();
    let mut rotation = 0;
    for n in wanted {
        let interval = schedule.interval(n);
        let len = interval.1 - interval.0;
        let c = cs.iter().find(|(k, _)| *k == schedule.k[n]).expect("estimated").1;
        let delta = schedule.delta(n);
        let cylinder = stacked(base.clone(), interval, interval, c, delta / len, rotation, opts)?;
        rotation = (rotation + cylinder.stack) % 2;
        bands.push(PlanarBand { index: n, interval, k: schedule.k[n], eps: schedule.eps[n], delta, cylinder });
    }
    Ok(PlanarCurve { schedule: schedule.clone(), window, bands })
}

impl PlanarCurve {
    pub fn band(&self, t: f64) -> Result<&PlanarBand> {
        self.bands
            .iter()
            .find(|b| t >= b.interval.0 && t <= b.interval.1)
            .ok_or_else(|| Error::Parameter(format!("t = {t} is outside the built bands")))
    }

    /// `γ*(t) = (θ, r)`.
    pub fn cylinder_point(&self, t: f64) -> Result<(f64, f64)> {
        self.band(t)?.cylinder.point(t)
    }

    /// `γ(t) = P(γ*(t))`.
    pub fn point(&self, t: f64) -> Result<(f64, f64)> {
        let (theta, r) = self.cylinder_point(t)?;
        Ok(polar(theta, r))
    }

    pub fn embedding(&self, t: f64) -> Result<PlanarEmbedding> {
        let b = self.band(t)?;
        Ok(PlanarEmbedding { t, k: b.k, eps: b.eps, radius: Radius::Ceiling(b.cylinder.ceiling(t)?) })
    }

    /// Direction of the line field at `(x, y)`: the image of `∂θ + ψ ∂r`.
    pub fn field(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let r = x.hypot(y);
        let theta = y.atan2(x).rem_euclid(TAU);
        let p = self.band(r)?.cylinder.psi(theta, r)?;
        let (s, c) = theta.sin_cos();
        Ok((-r * s + p * c, r * c + p * s))
    }

    /// Band end points agree: the last point of each band is the first
    /// point of the next.
    pub fn band_junction_gap(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for pair in self.bands.windows(2) {
            let a = pair[0].cylinder.point(pair[0].interval.1)?;
            let b = pair[1].cylinder.point(pair[1].interval.0)?;
            worst = worst.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
        }
        Ok(worst)
    }
}

/// Radius function of `β_t`.
#[derive(Clone, Debug)]
pub enum Radius {
    Ceiling(CylinderCeiling),
    /// `F_t ≡ t`.
    Constant(f64),
}

/// `β_t(θ) = P(θ, F_t(θ))` next to `α_t(θ) = P(θ, t)`.
#[derive(Clone, Debug)]
pub struct PlanarEmbedding {
    pub t: f64,
    pub k: usize,
    pub eps: f64,
    pub radius: Radius,
}

/// `e^{(m)}(θ)` for `e(θ) = (cos θ, sin θ)`.
fn unit_derivative(m: usize, s: f64, c: f64) -> (f64, f64) {
    match m % 4 {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl PlanarEmbedding {
    /// The circle `α_t` itself.
    pub fn circle(t: f64) -> Self {
        PlanarEmbedding { t, k: 0, eps: f64::INFINITY, radius: Radius::Constant(t) }
    }

    /// Derivatives of `F_t` at `θ`.
    pub fn radius_jet(&self, theta: f64, order: usize) -> Result<Vec<f64>> {
        match &self.radius {
            Radius::Ceiling(c) => c.jet(theta, order),
            Radius::Constant(r) => {
                let mut v = vec![0.0; order + 1];
                v[0] = *r;
                Ok(v)
            }
        }
    }

    pub fn beta(&self, theta: f64) -> Result<(f64, f64)> {
        Ok(polar(theta, self.radius_jet(theta, 0)?[0]))
    }

    pub fn alpha(&self, theta: f64) -> (f64, f64) {
        polar(theta, self.t)
    }

    /// `(β_t - α_t)^{(i)}(θ)` for `i ≤ order`, by the Leibniz rule on
    /// `(F_t - t) e(θ)`.
    pub fn difference_jet(&self, theta: f64, order: usize) -> Result<Vec<(f64, f64)>> {
        let mut r = self.radius_jet(theta, order)?;
        r[0] -= self.t;
        let (s, c) = theta.sin_cos();
        Ok((0..=order)
            .map(|i| {
                (0..=i).fold((0.0, 0.0), |acc, l| {
                    let e = unit_derivative(i - l, s, c);
                    let w = binomial(i, l) * r[l];
                    (acc.0 + w * e.0, acc.1 + w * e.1)
                })
            })
            .collect())
    }

    /// `(‖β_t - α_t‖_k, ‖F_t - t‖_k)` on `grid` angles.
    pub fn distances(&self, k: usize, grid: usize) -> Result<(f64, f64)> {
        let (mut vec_norm, mut radial): (f64, f64) = (0.0, 0.0);
        for q in 0..grid {
            let theta = TAU * q as f64 / grid as f64;
            for (x, y) in self.difference_jet(theta, k)? {
                vec_norm = vec_norm.max(x.hypot(y));
            }
            let mut r = self.radius_jet(theta, k)?;
            r[0] -= self.t;
            radial = r.iter().fold(radial, |m, v| m.max(v.abs()));
        }
        Ok((vec_norm, radial))
    }
}

/// Signed curvature of `θ ↦ P(θ, r(θ))`.
pub fn polar_curvature(r: f64, r1: f64, r2: f64) -> f64 {
    (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub t: f64,
    pub min_abs: f64,
    pub min: f64,
    pub max: f64,
    pub pass: bool,
}

pub fn curvature_check(e: &PlanarEmbedding, grid: usize) -> Result<CurvatureReport> {
    let (mut lo, mut hi, mut min_abs) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for q in 0..grid {
        let r = e.radius_jet(TAU * q as f64 / grid as f64, 2)?;
        let kappa = polar_curvature(r[0], r[1], r[2]);
        lo = lo.min(kappa);
        hi = hi.max(kappa);
        min_abs = min_abs.min(kappa.abs());
    }
    Ok(CurvatureReport { t: e.t, min_abs, min: lo, max: hi, pass: min_abs > 0.0 })
}

/// Smallest distance between the images of distinct grid angles.
pub fn injectivity_gap(e: &PlanarEmbedding, grid: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        (0..grid).map(|q| e.beta(TAU * q as f64 / grid as f64)).collect::<Result<_>>()?;
    Ok(pts
        .par_iter()
        .enumerate()
        .map(|(i, p)| pts[i + 1..].iter().map(|q| (p.0 - q.0).hypot(p.1 - q.1)).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximityRow {
    pub t: f64,
    pub band: usize,
    pub k: usize,
    /// `‖β_t - α_t‖_k`.
    pub distance: f64,
    /// `2^k ‖F_t - t‖_k`.
    pub chain_bound: f64,
    pub radial: f64,
    pub delta: f64,
    pub eps: f64,
    pub chain_holds: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximityReport {
    pub rows: Vec<ProximityRow>,
    /// Smallest `ε_n - ‖β_t - α_t‖_{k_n}`.
    pub min_margin: f64,
    pub pass: bool,
}

/// `‖β_t - α_t‖_{k_n} < ε_n` at `per_band` equally spaced `t` in every band
/// meeting the window, and at each of them the chain
/// `‖β_t - α_t‖_k ≤ 2^k ‖F_t - t‖_k < 2^k δ_n = ε_n`.
pub fn proximity_check(p: &PlanarCurve, per_band: usize, grid: usize) -> Result<ProximityReport> {
    let mut ts = Vec::new();
    for b in &p.bands {
        let (lo, hi) = (b.interval.0.max(p.window.0), b.interval.1.min(p.window.1));
        for i in 0..per_band {
            ts.push((b, lo + (hi - lo) * i as f64 / (per_band - 1).max(1) as f64));
        }
    }
    let rows: Vec<ProximityRow> = ts
        .par_iter()
        .map(|&(b, t)| {
            let e = PlanarEmbedding { t, k: b.k, eps: b.eps, radius: Radius::Ceiling(b.cylinder.ceiling(t)?) };
            let (distance, radial) = e.distances(b.k, grid)?;
            let chain_bound = 2f64.powi(b.k as i32) * radial;
            let chain_holds = distance <= chain_bound * (1.0 + 1e-12) + 1e-15 && radial < b.delta;
            Ok(ProximityRow {
                t,
                band: b.index,
                k: b.k,
                distance,
                chain_bound,
                radial,
                delta: b.delta,
                eps: b.eps,
                chain_holds,
                pass: chain_holds && distance < b.eps,
            })
        })
        .collect::<Result<_>>()?;
    let min_margin = rows.iter().map(|r| r.eps - r.distance).fold(f64::INFINITY, f64::min);
    let pass = rows.iter().all(|r| r.pass);
    Ok(ProximityReport { rows, min_margin, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_is_flat_at_both_ends() {
        let g = periodic_ramp();
        assert_eq!(g.value(0.0).unwrap(), 0.0);
        assert_eq!(g.value(PI).unwrap(), 1.0);
        for x in [0.0, PI] {
            let j = g.jet(x, 4).unwrap();
            for i in 1..=4 {
                assert!(j.derivative(i).abs() < 1e-12, "g^({i})({x})");
            }
        }
        let a = g.value(1.0).unwrap();
        assert!(a > 0.0 && a < g.value(2.0).unwrap());
        assert!((g.value(1.0 + TAU).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn odd_stack_counts() {
        assert_eq!(odd_above(0.5), 1);
        assert_eq!(odd_above(1.0), 3);
        assert_eq!(odd_above(2.0), 3);
        assert_eq!(odd_above(3.0), 5);
        assert_eq!(odd_above(3.9), 5);
    }

    #[test]
    fn circle_has_curvature_one_over_t() {
        let e = PlanarEmbedding::circle(0.8);
        let r = curvature_check(&e, 64).unwrap();
        assert!((r.min - 1.25).abs() < 1e-15 && (r.max - 1.25).abs() < 1e-15);
        assert_eq!(e.beta(0.3).unwrap(), e.alpha(0.3));
        assert_eq!(e.distances(3, 16).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn difference_jet_matches_finite_differences() {
        let e = PlanarEmbedding { t: 1.0, k: 2, eps: 1.0, radius: Radius::Constant(1.3) };
        let d = e.difference_jet(0.7, 1).unwrap();
        let h = 1e-6;
        let f = |th: f64| {
            let b = e.beta(th).unwrap();
            let a = e.alpha(th);
            (b.0 - a.0, b.1 - a.1)
        };
        let (p, m) = (f(0.7 + h), f(0.7 - h));
        assert!(((p.0 - m.0) / (2.0 * h) - d[1].0).abs() < 1e-8);
        assert!(((p.1 - m.1) / (2.0 * h) - d[1].1).abs() < 1e-8);
    }

    #[test]
    fn schedule_bands() {
        let s = TheoremSchedule::uniform(0.5, 2.0, 3, 2, 0.2);
        s.validate().unwrap();
        assert_eq!(s.breakpoints, vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(s.delta(1), 0.05);
        assert_eq!(s.band_of(1.0), Some(0));
        assert_eq!(s.band_of(1.2), Some(1));
        assert_eq!(s.band_of(2.0), Some(2));
        assert_eq!(s.band_of(2.5), None);
        let bad = TheoremSchedule { breakpoints: vec![1.0, 0.5], k: vec![1], eps: vec![0.1] };
        assert!(bad.validate().is_err());
    }
}
