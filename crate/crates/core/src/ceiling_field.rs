//! Ceiling functions `F_t`, the slope function `ψ` and the line field
//! spanned by `(1, ψ)`.
//!
//! At depth `N` the ceiling of a parameter in `J_ω` is approximated by
//! `f_ω`, which is within `2 Σ_{j≥N} ε_j` of `F_t` in every `C^k` with
//! `k ≤ N`. Parameters in a gap `G_ω` and the endpoints of a `J_ω` have
//! exact ceilings (`g_ω` or `f_ω`).

use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{CantorIndex, Location};
use crate::error::{Error, Result};
use crate::smoothfn::SmoothFn;
use crate::subdivision::{LuneFamily, Walk, Word};

/// Points within this distance of the root lune are accepted by [`psi`].
pub const PSI_TOLERANCE: f64 = 1e-9;

/// Which boundary of `L_word` realizes the ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Floor,
    Ceiling,
}

/// `F_t` at finite depth: `f_word` or `g_word`, and a bound on its distance
/// to the limit ceiling.
#[derive(Clone, Debug, Serialize)]
pub struct CeilingApprox {
    pub t: f64,
    pub word: Word,
    pub side: Side,
    pub tail_bound: f64,
    pub location: Location,
}

/// Value and derivatives (not Taylor coefficients) from a series.
pub fn derivatives(series: &[f64]) -> Vec<f64> {
    let mut fact = 1.0;
    series
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k > 1 {
                fact *= k as f64;
            }
            c * fact
        })
        .collect()
}

impl CeilingApprox {
    /// Taylor series of the approximant at `x`.
    pub fn series(&self, fam: &LuneFamily, x: f64, order: usize) -> Result<Vec<f64>> {
        let s = fam.node_series(&self.word, x, order)?;
        Ok(match self.side {
            Side::Floor => s.floor,
            Side::Ceiling => s.floor.iter().zip(&s.gap).map(|(f, d)| f + d).collect(),
        })
    }

    pub fn value(&self, fam: &LuneFamily, x: f64) -> Result<f64> {
        Ok(self.series(fam, x, 0)?[0])
    }

    /// `(F_t(x), F_t'(x))`.
    pub fn value_slope(&self, fam: &LuneFamily, x: f64) -> Result<(f64, f64)> {
        let s = self.series(fam, x, 1)?;
        Ok((s[0], s[1]))
    }

    /// The approximant as an expression DAG.
    pub fn function(&self, fam: &LuneFamily) -> Result<SmoothFn> {
        let l = fam.lune(&self.word)?;
        Ok(match self.side {
            Side::Floor => l.floor().clone(),
            Side::Ceiling => l.ceiling().clone(),
        })
    }

    /// True when the approximant is `F_t` itself.
    pub fn is_exact(&self) -> bool {
        self.tail_bound == 0.0
    }
}

/// `‖F_t - f_{ω_N}‖_k` bound for `k ≤ N`, from telescoping the bounds
/// `‖f_{ω∗ℓ} - f_ω‖_n < ε_n + ε_{n+1}` on floor increments. The first increment out of the root is measured by `‖L‖_1`
/// because the root lune is not bound by `ε_1`.
pub fn tail_bound(fam: &LuneFamily, depth: usize) -> f64 {
    let eps = fam.eps();
    if depth >= 2 {
        2.0 * eps.tail(depth)
    } else {
        fam.classes(1)[0].norm.value + eps.eps(2) + 2.0 * eps.tail(2)
    }
}

/// `F_t` approximated at the full family depth.
pub fn ceiling(t: f64, fam: &LuneFamily, idx: &CantorIndex) -> Result<CeilingApprox> {
    ceiling_at(t, fam, idx, fam.depth().min(idx.depth()))
}

/// `F_t` approximated at `depth`.
pub fn ceiling_at(t: f64, fam: &LuneFamily, idx: &CantorIndex, depth: usize) -> Result<CeilingApprox> {
    if depth > fam.depth() {
        return Err(Error::Depth { requested: depth, available: fam.depth() });
    }
    let location = idx.locate_at(t, depth)?;
    let (word, side, tail) = match &location {
        Location::Gap { word, .. } => (word.clone(), Side::Ceiling, 0.0),
        Location::InK { word, local } => {
            if *local == 0.0 {
                (word.clone(), Side::Floor, 0.0)
            } else if *local == 1.0 {
                (word.clone(), Side::Ceiling, 0.0)
            } else {
                (word.clone(), Side::Floor, tail_bound(fam, depth))
            }
        }
    };
    Ok(CeilingApprox { t, word, side, tail_bound: tail, location })
}

fn grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| i as f64 / (n - 1) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneRow {
    pub t: f64,
    pub s: f64,
    /// `min_x F_s(x) - F_t(x)` over the grid, with the approximants.
    pub margin: f64,
    pub allowance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneReport {
    pub rows: Vec<MonotoneRow>,
    pub worst_margin: f64,
    pub all_pass: bool,
}

/// Checks `F_t ≤ F_s` for `t ≤ s` on a grid, allowing `2 (tail_t + tail_s)`.
pub fn ceiling_monotone_check(
    fam: &LuneFamily,
    idx: &CantorIndex,
    pairs: &[(f64, f64)],
    grid_size: usize,
) -> Result<MonotoneReport> {
    let rows: Vec<MonotoneRow> = pairs
        .par_iter()
        .map(|&(t, s)| {
            if t > s {
                return Err(Error::Parameter(format!("pair ({t}, {s}) is not ordered")));
            }
            let ct = ceiling(t, fam, idx)?;
            let cs = ceiling(s, fam, idx)?;
            let mut margin = f64::INFINITY;
            for x in grid(grid_size) {
                margin = margin.min(cs.value(fam, x)? - ct.value(fam, x)?);
            }
            let allowance = 2.0 * (ct.tail_bound + cs.tail_bound);
            Ok(MonotoneRow { t, s, margin, allowance, pass: margin >= -allowance - 1e-12 })
        })
        .collect::<Result<_>>()?;
    let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(MonotoneReport { rows, worst_margin, all_pass })
}

/// Which child a descent enters when a point lies on a shared boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TieBreak {
    Lowest,
    Highest,
}

/// `ψ(x, y)` with the word that realized it.
#[derive(Clone, Debug, Serialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub slope: f64,
    pub word: Word,
}

/// Normalized height of the floor of child `l` inside its parent:
/// `f_{ω∗l} = f_ω + c_l D_ω / n`. `c_{m+1} = n` stands for `g_ω`.
fn child_floor(l: u64, n: u64, p: f64) -> f64 {
    if l > 2 * n {
        return n as f64;
    }
    let j = l.div_ceil(2) as f64;
    if l % 2 == 1 {
        j - 1.0
    } else {
        j - p
    }
}

/// The depth-`N` descendant of `start` whose lune holds `(x, y)`, with the
/// walk that reached it. `(x, y)` must lie in `L_start`.
pub fn descend(fam: &LuneFamily, start: &Word, x: f64, y: f64, tie: TieBreak) -> Result<(Word, Walk)> {
    fam.validate(start)?;
    let mut walk = fam.walk(x, 1)?;
    for (k, &letter) in start.letters().iter().enumerate().skip(1) {
        walk.step(fam.m()[k] / 2, letter);
    }
    let (f, d) = (walk.floor()[0], walk.gap()[0]);
    if !(y >= f - PSI_TOLERANCE && y <= f + d + PSI_TOLERANCE) {
        return Err(Error::OutOfLune { x, y });
    }
    let mut letters = start.letters().to_vec();
    for k in start.len() + 1..=fam.depth() {
        let mk = fam.m()[k - 1];
        let n = mk / 2;
        let (f, d) = (walk.floor()[0], walk.gap()[0]);
        let letter = if d > 0.0 {
            let s = ((y - f) / d * n as f64).clamp(0.0, n as f64);
            let p = walk.phi_value();
            match tie {
                // smallest l with c_{l+1} ≥ s
                TieBreak::Lowest => {
                    let (mut lo, mut hi) = (1u64, mk);
                    while lo < hi {
                        let mid = lo + (hi - lo) / 2;
                        if child_floor(mid + 1, n, p) >= s {
                            hi = mid;
                        } else {
                            lo = mid + 1;
                        }
                    }
                    lo
                }
                // largest l with c_l ≤ s
                TieBreak::Highest => {
                    let (mut lo, mut hi) = (1u64, mk);
                    while lo < hi {
                        let mid = lo + (hi - lo).div_ceil(2);
                        if child_floor(mid, n, p) <= s {
                            lo = mid;
                        } else {
                            hi = mid - 1;
                        }
                    }
                    lo
                }
            }
        } else {
            match tie {
                TieBreak::Lowest => 1,
                TieBreak::Highest => mk,
            }
        };
        walk.step(n, letter);
        letters.push(letter);
    }
    Ok((Word::new(letters)?, walk))
}

/// `ψ(x, y) = F_t'(x)` for any `t` with `F_t(x) = y`, by descending to the
/// depth-`N` node whose lune holds `(x, y)`. Inside that node the slope is
/// interpolated between `f'` and `g'` at the relative height of `y`, which
/// is exact on both boundaries and within `‖L_ω‖_1 < ε_N` in between.
pub fn psi(x: f64, y: f64, fam: &LuneFamily, tie: TieBreak) -> Result<FieldSample> {
    let (word, walk) = descend(fam, &Word::root(), x, y, tie)?;
    let (f, d) = (walk.floor(), walk.gap());
    let lambda = if d[0] > 0.0 { ((y - f[0]) / d[0]).clamp(0.0, 1.0) } else { 0.0 };
    Ok(FieldSample { x, y, slope: f[1] + lambda * d[1], word })
}

#[derive(Clone, Debug, Serialize)]
pub struct TangencyRow {
    pub t: f64,
    pub word: Word,
    pub max_discrepancy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TangencyReport {
    pub rows: Vec<TangencyRow>,
    pub max_discrepancy: f64,
    /// `2 Σ_{j≥N} ε_j`.
    pub tail_bound: f64,
    /// `4 ×` the tail bound.
    pub bound: f64,
    pub pass: bool,
}

/// `max |F_t'(x) - ψ(x, F_t(x))|` over `ts` and a grid of `x`.
pub fn tangency_check(
    fam: &LuneFamily,
    idx: &CantorIndex,
    ts: &[f64],
    grid_size: usize,
) -> Result<TangencyReport> {
    let rows: Vec<TangencyRow> = ts
        .par_iter()
        .map(|&t| {
            let c = ceiling(t, fam, idx)?;
            let mut worst: f64 = 0.0;
            for x in grid(grid_size) {
                let (y, slope) = c.value_slope(fam, x)?;
                let field = psi(x, y, fam, TieBreak::Lowest)?;
                worst = worst.max((slope - field.slope).abs());
            }
            Ok(TangencyRow { t, word: c.word, max_discrepancy: worst })
        })
        .collect::<Result<_>>()?;
    let max_discrepancy = rows.iter().map(|r| r.max_discrepancy).fold(0.0, f64::max);
    let tail = tail_bound(fam, fam.depth());
    Ok(TangencyReport { rows, max_discrepancy, tail_bound: tail, bound: 4.0 * tail, pass: max_discrepancy <= 4.0 * tail })
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuityReport {
    pub depth: usize,
    pub order: usize,
    pub max_distance: f64,
    pub bound: f64,
    pub pass: bool,
}

/// For pairs `t, s` sharing their depth-`n` interval, `‖F_t - F_s‖_k` for
/// `k ≤ n` against `4 Σ_{j≥n} ε_j`, measured with the full-depth
/// approximants plus their tails.
pub fn continuity_check(
    fam: &LuneFamily,
    idx: &CantorIndex,
    n: usize,
    pairs: &[(f64, f64)],
    grid_size: usize,
) -> Result<ContinuityReport> {
    if n < 2 || n > fam.depth() {
        return Err(Error::Depth { requested: n, available: fam.depth() });
    }
    let order = n.min(fam.root().gap().max_order());
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(t, s)| {
            let (wt, ws) = (idx.locate_at(t, n)?, idx.locate_at(s, n)?);
            if !matches!(wt, Location::InK { .. }) || wt.word() != ws.word() {
                return Err(Error::Parameter(format!("{t} and {s} do not share a depth-{n} interval")));
            }
            let (ct, cs) = (ceiling(t, fam, idx)?, ceiling(s, fam, idx)?);
            let mut worst: f64 = 0.0;
            for x in grid(grid_size) {
                let a = derivatives(&ct.series(fam, x, order)?);
                let b = derivatives(&cs.series(fam, x, order)?);
                for (u, v) in a.iter().zip(&b) {
                    worst = worst.max((u - v).abs());
                }
            }
            Ok(worst + ct.tail_bound + cs.tail_bound)
        })
        .collect::<Result<_>>()?;
    let max_distance = dists.iter().copied().fold(0.0, f64::max);
    let bound = 4.0 * fam.eps().tail(n);
    Ok(ContinuityReport { depth: n, order, max_distance, bound, pass: max_distance <= bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatnessReport {
    /// Gaps in which at least two parameters could be compared.
    pub gaps: usize,
    /// Gaps too narrow to hold two distinct doubles.
    pub unresolved: usize,
    /// Parameters tried inside each gap.
    pub per_gap: usize,
    /// Largest `|F_t(x) - F_s(x)|` for `t, s` in the same gap.
    pub max_deviation: f64,
    pub pass: bool,
}

/// `F_t` is the same function for every `t` in a gap: compares the ceilings
/// at `per_gap` equally spaced interior parameters of the gap right of each
/// given word, exactly. Parameters that round out of the gap are skipped.
pub fn gap_flatness_check(
    fam: &LuneFamily,
    idx: &CantorIndex,
    words: &[Word],
    per_gap: usize,
    grid_size: usize,
) -> Result<FlatnessReport> {
    let depth = fam.depth().min(idx.depth());
    let devs: Vec<Option<f64>> = words
        .par_iter()
        .map(|w| {
            let (alpha, beta) = idx.gap_endpoints(w)?;
            let mut inside = Vec::new();
            for i in 1..=per_gap {
                let t = alpha + (beta - alpha) * i as f64 / (per_gap + 1) as f64;
                let loc = idx.locate_at(t, depth)?;
                if matches!(&loc, Location::Gap { word, .. } if word == w) && inside.last() != Some(&t) {
                    inside.push(t);
                }
            }
            if inside.len() < 2 {
                return Ok(None);
            }
            let left = ceiling(inside[0], fam, idx)?;
            let mut worst: f64 = 0.0;
            for &t in &inside[1..] {
                let c = ceiling(t, fam, idx)?;
                for x in grid(grid_size) {
                    worst = worst.max((c.value(fam, x)? - left.value(fam, x)?).abs());
                }
            }
            Ok(Some(worst))
        })
        .collect::<Result<_>>()?;
    let gaps = devs.iter().filter(|d| d.is_some()).count();
    let max_deviation = devs.iter().flatten().copied().fold(0.0, f64::max);
    Ok(FlatnessReport {
        gaps,
        unresolved: devs.len() - gaps,
        per_gap,
        max_deviation,
        pass: max_deviation == 0.0,
    })
}

/// `ψ` on a grid inside the root lune: `nx` columns, `ny` heights per
/// column from the floor to the ceiling.
pub fn sample_field(fam: &LuneFamily, nx: usize, ny: usize) -> Result<Vec<FieldSample>> {
    let cols: Vec<Vec<FieldSample>> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + 0.5) / nx as f64;
            let walk = fam.walk(x, 0)?;
            let (f, d) = (walk.floor()[0], walk.gap()[0]);
            (0..ny)
                .map(|j| {
                    let y = f + d * (j as f64 + 0.5) / ny as f64;
                    psi(x, y, fam, TieBreak::Lowest)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(cols.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lune::presets;
    use crate::smoothfn::{make_phi, NormSettings};
    use crate::subdivision::{build_family, EpsilonSchedule};

    fn setup(scale: f64, depth: usize) -> (LuneFamily, CantorIndex) {
        let eps = EpsilonSchedule { scale, ratio: 0.5 };
        let fam = build_family(&presets::tilted(), &eps, depth, &make_phi(), &NormSettings::default()).unwrap();
        let idx = CantorIndex::from_family(&fam);
        (fam, idx)
    }

    #[test]
    fn ends_are_floor_and_ceiling() {
        let (fam, idx) = setup(1e3, 3);
        let root = fam.root();
        let c0 = ceiling(0.0, &fam, &idx).unwrap();
        let c1 = ceiling(1.0, &fam, &idx).unwrap();
        assert!(c0.is_exact() && c1.is_exact());
        for x in [0.0, 0.2, 0.5, 0.9] {
            assert!((c0.value(&fam, x).unwrap() - root.floor().at(x)).abs() < 1e-14);
            assert!((c1.value(&fam, x).unwrap() - root.ceiling().at(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn psi_on_the_boundary_is_the_boundary_slope() {
        let (fam, _) = setup(1e3, 3);
        let root = fam.root();
        for x in [0.1, 0.37, 0.5, 0.81] {
            let f = root.floor().jet(x, 1).unwrap();
            let g = root.ceiling().jet(x, 1).unwrap();
            let lo = psi(x, f.value(), &fam, TieBreak::Lowest).unwrap();
            let hi = psi(x, g.value(), &fam, TieBreak::Highest).unwrap();
            assert!((lo.slope - f.derivative(1)).abs() < 1e-12);
            assert!((hi.slope - g.derivative(1)).abs() < 1e-12);
        }
        assert!(matches!(psi(0.5, 10.0, &fam, TieBreak::Lowest), Err(Error::OutOfLune { .. })));
    }

    #[test]
    fn descent_lands_in_the_chosen_node() {
        let (fam, _) = setup(1e3, 3);
        for (x, frac) in [(0.3, 0.25), (0.55, 0.6), (0.7, 0.9)] {
            let w = fam.walk(x, 0).unwrap();
            let y = w.floor()[0] + frac * w.gap()[0];
            let s = psi(x, y, &fam, TieBreak::Lowest).unwrap();
            let node = fam.node_series(&s.word, x, 0).unwrap();
            let tol = 1e-12;
            assert!(node.floor[0] - tol <= y && y <= node.floor[0] + node.gap[0] + tol, "{s:?}");
        }
    }

    #[test]
    fn gap_parameters_share_one_exact_ceiling() {
        let (fam, idx) = setup(1e3, 3);
        let w = Word::new(vec![1, 1]).unwrap();
        let (a, b) = idx.gap_endpoints(&w).unwrap();
        let c1 = ceiling(a + 0.3 * (b - a), &fam, &idx).unwrap();
        let c2 = ceiling(a + 0.8 * (b - a), &fam, &idx).unwrap();
        assert_eq!(c1.word, c2.word);
        assert_eq!(c1.side, Side::Ceiling);
        assert!(c1.is_exact());
        let g = fam.lune(&w).unwrap();
        assert!((c1.value(&fam, 0.4).unwrap() - g.ceiling().at(0.4)).abs() < 1e-14);
    }

    #[test]
    fn tangency_on_a_coarse_family() {
        let (fam, idx) = setup(1e3, 3);
        let r = tangency_check(&fam, &idx, &[0.0, 0.3, 0.77, 1.0], 65).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.rows[0].max_discrepancy, 0.0);
        assert!(r.rows[3].max_discrepancy < 1e-12);
    }
}
