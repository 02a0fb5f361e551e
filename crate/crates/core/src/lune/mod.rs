//! Lunes: regions between two graphs that touch to infinite order at the ends.

pub mod presets;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::smoothfn::{
    ck_norm_on, phi_rescaled, BumpPhi, CkNormEstimate, Domain, NormSettings, SmoothFn,
};

/// Jets of floor and ceiling must agree at the domain ends up to this order.
pub const ENDPOINT_JET_ORDER: usize = 4;
const ENDPOINT_JET_TOL: f64 = 1e-9;
const ORDER_TOL: f64 = 1e-12;
const VALIDATION_GRID: usize = 1025;

/// Threshold on `g - f` separating the support from its complement.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
const SUPPORT_BISECTION_TOL: f64 = 1e-10;

/// `L(f, g) = {(x, y) : lo ≤ x ≤ hi, f(x) ≤ y ≤ g(x)}`.
///
/// The difference `g - f` is kept as its own expression so that thin lunes
/// deep in a subdivision do not lose it to cancellation.
#[derive(Clone, Debug)]
pub struct Lune {
    f: SmoothFn,
    g: SmoothFn,
    gap: SmoothFn,
    lo: f64,
    hi: f64,
    support: Option<(f64, f64)>,
}

/// The open intervals on which `g - f > 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Support {
    pub intervals: Vec<(f64, f64)>,
}

impl Support {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn simple(&self) -> Option<(f64, f64)> {
        match self.intervals.as_slice() {
            [one] => Some(*one),
            _ => None,
        }
    }
}

/// A simple lune clipped to the closure `[c, d]` of its support.
#[derive(Clone, Debug)]
pub struct EssentialLune {
    pub base: Lune,
    pub clipped_domain: (f64, f64),
}

impl EssentialLune {
    pub fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        let (c, d) = self.clipped_domain;
        if x < c - tol || x > d + tol {
            return false;
        }
        let x = x.clamp(c, d);
        let f = self.base.f.at(x);
        let g = f + self.base.gap.at(x);
        y >= f - tol && y <= g + tol
    }
}

fn restrict(h: &SmoothFn, lo: f64, hi: f64) -> Result<SmoothFn> {
    Ok(h.restrict(Domain::interval(lo, hi)?)?)
}

impl Lune {
    /// Builds `L(f, g)` on `[lo, hi]`, checking `f ≤ g` on a grid and the
    /// endpoint jet agreement up to [`ENDPOINT_JET_ORDER`].
    pub fn new(f: SmoothFn, g: SmoothFn, lo: f64, hi: f64) -> Result<Self> {
        let gap = &g - &f;
        Self::build(f, g, gap, lo, hi, true)
    }

    /// Builds `L(f, f + gap)`; `gap` must be non-negative.
    pub fn from_gap(f: SmoothFn, gap: SmoothFn, lo: f64, hi: f64) -> Result<Self> {
        let g = &f + &gap;
        Self::build(f, g, gap, lo, hi, true)
    }

    /// Region between two graphs without the endpoint jet condition. Used for
    /// norm bookkeeping on functions such as `x²(1-x)²` that are not lunes.
    pub fn region(f: SmoothFn, g: SmoothFn, lo: f64, hi: f64) -> Result<Self> {
        let gap = &g - &f;
        Self::build(f, g, gap, lo, hi, false)
    }

    fn build(f: SmoothFn, g: SmoothFn, gap: SmoothFn, lo: f64, hi: f64, jets: bool) -> Result<Self> {
        let (f, g, gap) = (restrict(&f, lo, hi)?, restrict(&g, lo, hi)?, restrict(&gap, lo, hi)?);
        for i in 0..VALIDATION_GRID {
            let x = lo + (hi - lo) * i as f64 / (VALIDATION_GRID - 1) as f64;
            let d = gap.value(x)?;
            if d < -ORDER_TOL {
                return Err(Error::NotALune(format!("g - f = {d:e} < 0 at x = {x}")));
            }
        }
        if jets {
            let order = ENDPOINT_JET_ORDER.min(gap.max_order());
            for x in [lo, hi] {
                let jf = f.jet(x, order)?;
                let jg = g.jet(x, order)?;
                for i in 0..=order {
                    let (a, b) = (jf.derivative(i), jg.derivative(i));
                    if (a - b).abs() > ENDPOINT_JET_TOL * (1.0 + a.abs().max(b.abs())) {
                        return Err(Error::NotALune(format!(
                            "derivative {i} differs at x = {x}: {a} vs {b}"
                        )));
                    }
                }
            }
        }
        Ok(Lune { f, g, gap, lo, hi, support: None })
    }

    /// Internal constructor for sub-lunes whose validity follows from the
    /// subdivision identities.
    pub(crate) fn assemble(
        f: SmoothFn,
        g: SmoothFn,
        gap: SmoothFn,
        lo: f64,
        hi: f64,
        support: Option<(f64, f64)>,
    ) -> Self {
        Lune { f, g, gap, lo, hi, support }
    }

    /// Records a support known from the construction. The numerically
    /// detected support must lie inside it.
    pub fn with_support(mut self, a: f64, b: f64) -> Result<Self> {
        if !(self.lo <= a && a < b && b <= self.hi) {
            return Err(Error::Support(format!(
                "({a}, {b}) is not inside the domain [{}, {}]",
                self.lo, self.hi
            )));
        }
        let detected = support_of(&self, VALIDATION_GRID);
        for &(c, d) in &detected.intervals {
            if c < a - 1e-8 || d > b + 1e-8 {
                return Err(Error::Support(format!(
                    "g - f is positive on ({c}, {d}), outside the declared ({a}, {b})"
                )));
            }
        }
        self.support = Some((a, b));
        Ok(self)
    }

    pub fn floor(&self) -> &SmoothFn {
        &self.f
    }

    pub fn ceiling(&self) -> &SmoothFn {
        &self.g
    }

    pub fn gap(&self) -> &SmoothFn {
        &self.gap
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// The declared support, or the detected one if it is a single interval.
    pub fn simple_support(&self) -> Result<(f64, f64)> {
        if let Some(s) = self.support {
            return Ok(s);
        }
        support_of(self, VALIDATION_GRID)
            .simple()
            .ok_or_else(|| Error::Support("the lune is not simple".into()))
    }

    pub fn declared_support(&self) -> Option<(f64, f64)> {
        self.support
    }

    /// The affinely conjugated lune on `[0, 1]` with support `(0, 1)`.
    pub fn normalized(&self) -> Result<Self> {
        let (c, d) = self.simple_support()?;
        let x = SmoothFn::linear(d - c, c).on(0.0, 1.0)?;
        let f = x.then(&self.f);
        let gap = x.then(&self.gap);
        let g = &f + &gap;
        Ok(Lune::assemble(f, g, gap, 0.0, 1.0, Some((0.0, 1.0))))
    }
}

/// `‖L‖_k = ‖g - f‖_k`, sampled over the lune's domain.
pub fn lune_norm(l: &Lune, k: usize, settings: &NormSettings) -> Result<CkNormEstimate> {
    Ok(ck_norm_on(&l.gap, l.lo, l.hi, k, settings.grid, settings.safety_factor)?)
}

/// `n`-slicing: `L_i = L(h_{i-1}, h_i)` with `h_j = f + (j/n)(g - f)`.
/// Consecutive slices share their boundary function, `h_0` is `f` and `h_n`
/// is `g` itself.
pub fn slice(l: &Lune, n: u64) -> Result<Vec<Lune>> {
    if n < 1 {
        return Err(Error::SliceCount(n));
    }
    let piece = l.gap.scale(1.0 / n as f64);
    let h: Vec<SmoothFn> = (0..=n)
        .map(|j| match j {
            0 => l.f.clone(),
            j if j == n => l.g.clone(),
            j => SmoothFn::linear_combination(&[(1.0, &l.f), (j as f64 / n as f64, &l.gap)], 0.0),
        })
        .collect();
    Ok((0..n as usize)
        .map(|i| {
            let gap = if n == 1 { l.gap.clone() } else { piece.clone() };
            Lune::assemble(h[i].clone(), h[i + 1].clone(), gap, l.lo, l.hi, l.support)
        })
        .collect())
}

/// The `j`-th of `n` slices (`1 ≤ j ≤ n`) without building the others.
pub fn slice_one(l: &Lune, n: u64, j: u64) -> Result<Lune> {
    if n < 1 {
        return Err(Error::SliceCount(n));
    }
    if j < 1 || j > n {
        return Err(Error::Parameter(format!("slice index {j} outside 1..={n}")));
    }
    if n == 1 {
        return Ok(l.clone());
    }
    let h = |j: u64| match j {
        0 => l.f.clone(),
        j if j == n => l.g.clone(),
        j => SmoothFn::linear_combination(&[(1.0, &l.f), (j as f64 / n as f64, &l.gap)], 0.0),
    };
    let gap = l.gap.scale(1.0 / n as f64);
    Ok(Lune::assemble(h(j - 1), h(j), gap, l.lo, l.hi, l.support))
}

/// Bipartition along `h = (1 - φ_{a,b}) g + φ_{a,b} f` where `(a, b)` is the
/// support. Returns `(L(f, h), L(h, g))` with supports `(a, (a+2b)/3)` and
/// `((2a+b)/3, b)`.
pub fn bipartition(l: &Lune, phi: &BumpPhi) -> Result<(Lune, Lune)> {
    let (a, b) = l.simple_support()?;
    let p = phi_rescaled(phi, a, b)?;
    let q = p.scale(-1.0).shift(1.0);
    let lower_gap = &q * &l.gap;
    let upper_gap = &p * &l.gap;
    let h = &l.f + &lower_gap;
    let lower = Lune::assemble(
        l.f.clone(),
        h.clone(),
        lower_gap,
        l.lo,
        l.hi,
        Some((a, (a + 2.0 * b) / 3.0)),
    );
    let upper = Lune::assemble(h, l.g.clone(), upper_gap, l.lo, l.hi, Some(((2.0 * a + b) / 3.0, b)));
    Ok((lower, upper))
}

/// Sign pattern of `g - f` on a uniform grid, boundaries refined by bisection.
pub fn support_of(l: &Lune, grid: usize) -> Support {
    let grid = grid.max(3);
    let (lo, hi) = (l.lo, l.hi);
    let xs: Vec<f64> = (0..grid)
        .map(|i| if i == grid - 1 { hi } else { lo + (hi - lo) * i as f64 / (grid - 1) as f64 })
        .collect();
    let positive = |x: f64| l.gap.at(x) > SUPPORT_THRESHOLD;
    let inside: Vec<bool> = xs.iter().map(|&x| positive(x)).collect();
    let refine = |mut out: f64, mut inn: f64| {
        while (out - inn).abs() > SUPPORT_BISECTION_TOL {
            let mid = 0.5 * (out + inn);
            if positive(mid) {
                inn = mid;
            } else {
                out = mid;
            }
        }
        0.5 * (out + inn)
    };
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < grid {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < grid && inside[i] {
            i += 1;
        }
        let c = if start == 0 { lo } else { refine(xs[start - 1], xs[start]) };
        let d = if i == grid { hi } else { refine(xs[i], xs[i - 1]) };
        intervals.push((c, d));
    }
    Support { intervals }
}

/// The essential part of a simple lune.
pub fn essential(l: &Lune) -> Result<EssentialLune> {
    let (c, d) = l.simple_support()?;
    Ok(EssentialLune { base: l.clone(), clipped_domain: (c, d) })
}

impl EssentialLune {
    /// Idempotent: the essential part of an essential lune is itself.
    pub fn essential(&self) -> EssentialLune {
        self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothfn::make_phi;

    fn quartic() -> Lune {
        let x = SmoothFn::identity();
        let x1 = SmoothFn::linear(-1.0, 1.0);
        let p = &x * &x1;
        Lune::region(SmoothFn::constant(0.0), &p * &p, 0.0, 1.0).unwrap()
    }

    #[test]
    fn quartic_norm_and_support() {
        let l = quartic();
        let n = lune_norm(&l, 0, &NormSettings { grid: 4097, safety_factor: 1.0 }).unwrap();
        assert!((n.raw - 1.0 / 16.0).abs() < 1e-15);
        let s = support_of(&l, 1025).simple().unwrap();
        assert!(s.0 < 1e-5 && s.1 > 1.0 - 1e-5);
        assert!(Lune::new(SmoothFn::constant(0.0), l.ceiling().clone(), 0.0, 1.0).is_err());
    }

    #[test]
    fn degenerate_lune() {
        let f = SmoothFn::identity().sin();
        let l = Lune::new(f.clone(), f, 0.0, 1.0).unwrap();
        assert!(support_of(&l, 257).is_empty());
        let n = lune_norm(&l, 3, &NormSettings::default()).unwrap();
        assert_eq!(n.value, 0.0);
        assert!(essential(&l).is_err());
    }

    #[test]
    fn floor_above_ceiling_is_rejected() {
        let r = Lune::new(SmoothFn::constant(1.0), SmoothFn::constant(0.0), 0.0, 1.0);
        assert!(matches!(r, Err(Error::NotALune(_))));
    }

    #[test]
    fn slicing_shares_boundaries() {
        let l = presets::hump();
        let s = slice(&l, 3).unwrap();
        assert!(s[0].floor().same_node(l.floor()));
        assert!(s[2].ceiling().same_node(l.ceiling()));
        for i in 0..2 {
            assert!(s[i].ceiling().same_node(s[i + 1].floor()));
        }
        assert_eq!(slice(&l, 1).unwrap().len(), 1);
        assert!(matches!(slice(&l, 0), Err(Error::SliceCount(0))));
    }

    #[test]
    fn bipartition_supports_and_blend() {
        let l = presets::hump();
        let (lo, up) = bipartition(&l, &make_phi()).unwrap();
        assert_eq!(lo.declared_support(), Some((0.0, 2.0 / 3.0)));
        assert_eq!(up.declared_support(), Some((1.0 / 3.0, 1.0)));
        assert!(lo.ceiling().same_node(up.floor()));
        for i in 0..=30 {
            let x = i as f64 / 90.0;
            assert_eq!(lo.ceiling().at(x), l.ceiling().at(x));
            let x = 2.0 / 3.0 + i as f64 / 90.0;
            assert_eq!(lo.ceiling().at(x), l.floor().at(x));
        }
    }

    #[test]
    fn essential_clips_to_support() {
        let l = presets::hump_on(0.25, 0.75);
        let e = essential(&l).unwrap();
        assert_eq!(e.clipped_domain, (0.25, 0.75));
        assert_eq!(e.essential().clipped_domain, e.clipped_domain);
        let n = l.normalized().unwrap();
        assert!((n.gap().at(0.5) - 1.0).abs() < 1e-15);
    }
}
