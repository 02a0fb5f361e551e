//! The curves `γ_n`, their footprints and the convergence diagnostics.
//!
//! On `J_ω` with `|ω| = n` the curve runs along the graph of `f_ω` from
//! `a_ω` to `b_ω`; on a gap `G_ω` it runs back along `g_ω` from `b_ω` to
//! `a_{ω⁺}`. Both legs are reparametrized by the flat-ended sigmoid `S`, so
//! the pieces meet to infinite order. Gaps of depth below `n` keep the
//! pieces they had in earlier curves.
//!
//! The number of pieces is `∏ m_j` plus the gaps, far too many to store, so a
//! piece is identified by its word and evaluated on demand.

pub mod raster;

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{CantorIndex, Location};
use crate::ceiling_field::{ceiling, descend, CeilingApprox, TieBreak};
use crate::error::{Error, Result};
use crate::smoothfn::taylor::bump_integral_value;
use crate::smoothfn::{transition_map, Domain, SmoothError, SmoothFn};
use crate::subdivision::{successor, LuneFamily, Word};

pub use raster::{hausdorff, squared_edt, Raster};

/// Slack for membership of curve points in a node's essential lune.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;
/// Slack for the meeting of consecutive pieces.
pub const JUNCTION_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PieceKind {
    /// The leg over `J_ω`, along the floor `f_ω`.
    Interval,
    /// The leg over `G_ω`, along the ceiling `g_ω`.
    Gap,
}

/// One analytic leg of `γ_N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Piece {
    pub kind: PieceKind,
    pub word: Word,
    /// Parameter interval, rounded to doubles.
    pub t_range: (f64, f64),
    pub x_from: f64,
    pub x_to: f64,
}

/// `γ_N` for a family and its Cantor index.
#[derive(Clone, Copy, Debug)]
pub struct CurveApprox<'a> {
    fam: &'a LuneFamily,
    idx: &'a CantorIndex,
    depth: usize,
}

/// `S^{-1}` by bisection.
pub fn inverse_sigmoid(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if bump_integral_value(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn build_curve<'a>(fam: &'a LuneFamily, idx: &'a CantorIndex, depth: usize) -> Result<CurveApprox<'a>> {
    if depth < 1 || depth > fam.depth() || depth > idx.depth() {
        return Err(Error::Depth { requested: depth, available: fam.depth().min(idx.depth()) });
    }
    if idx.m() != &fam.m()[..idx.depth()] {
        return Err(Error::Parameter("the index does not belong to this family".into()));
    }
    Ok(CurveApprox { fam, idx, depth })
}

impl<'a> CurveApprox<'a> {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn family(&self) -> &'a LuneFamily {
        self.fam
    }

    pub fn index(&self) -> &'a CantorIndex {
        self.idx
    }

    /// The same family cut at a shallower depth.
    pub fn truncated(&self, depth: usize) -> Result<CurveApprox<'a>> {
        build_curve(self.fam, self.idx, depth)
    }

    /// `∏_{j≤N} m_j` interval legs plus `Σ_k (∏_{j<k} m_j)(m_k - 1)` gap legs.
    pub fn piece_count(&self) -> BigUint {
        let m = &self.fam.m()[..self.depth];
        let mut prefix = BigUint::from(1u32);
        let mut gaps = BigUint::from(0u32);
        for &mk in &m[1..] {
            gaps += &prefix * (mk - 1);
            prefix *= mk;
        }
        prefix + gaps
    }

    /// Start and end abscissa of a leg.
    pub fn x_range(&self, kind: PieceKind, word: &Word) -> Result<(f64, f64)> {
        self.fam.validate(word)?;
        let (a, b) = self.fam.support_of_word(word);
        match kind {
            PieceKind::Interval => Ok((a, b)),
            PieceKind::Gap => {
                let next = successor(word, self.fam.m())?;
                Ok((b, self.fam.support_of_word(&next).0))
            }
        }
    }

    /// The point of a leg at abscissa `x`.
    pub fn point_at(&self, kind: PieceKind, word: &Word, x: f64) -> Result<(f64, f64)> {
        let s = self.fam.node_series(word, x, 0)?;
        Ok(match kind {
            PieceKind::Interval => (x, s.floor[0]),
            PieceKind::Gap => (x, s.floor[0] + s.gap[0]),
        })
    }

    /// The point of a leg at local parameter `u ∈ [0, 1]`.
    pub fn eval_piece(&self, kind: PieceKind, word: &Word, u: f64) -> Result<(f64, f64)> {
        let (from, to) = self.x_range(kind, word)?;
        let x = if u >= 1.0 { to } else { from + (to - from) * bump_integral_value(u) };
        self.point_at(kind, word, x)
    }

    pub fn eval_location(&self, loc: &Location) -> Result<(f64, f64)> {
        match loc {
            Location::InK { word, local } => self.eval_piece(PieceKind::Interval, word, *local),
            Location::Gap { word, local, .. } => self.eval_piece(PieceKind::Gap, word, *local),
        }
    }

    /// `γ_N(t)`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        self.eval_location(&self.idx.locate_at(t, self.depth)?)
    }

    pub fn piece_at(&self, t: f64) -> Result<Piece> {
        let loc = self.idx.locate_at(t, self.depth)?;
        self.piece_of(&loc)
    }

    fn piece_of(&self, loc: &Location) -> Result<Piece> {
        let (kind, t_range) = match loc {
            Location::InK { word, .. } => (PieceKind::Interval, self.idx.interval_of(word)?),
            Location::Gap { alpha, beta, .. } => (PieceKind::Gap, (*alpha, *beta)),
        };
        let word = loc.word().clone();
        let (x_from, x_to) = self.x_range(kind, &word)?;
        Ok(Piece { kind, word, t_range, x_from, x_to })
    }

    /// The graph function and the transition map of a leg as expression
    /// DAGs. Fails once the parameter interval is below double resolution.
    pub fn piece_functions(&self, piece: &Piece) -> Result<(SmoothFn, SmoothFn)> {
        let l = self.fam.lune(&piece.word)?;
        let graph = match piece.kind {
            PieceKind::Interval => l.floor().clone(),
            PieceKind::Gap => l.ceiling().clone(),
        };
        let (alpha, beta) = piece.t_range;
        Ok((graph, transition_map(alpha, beta, piece.x_from, piece.x_to)?))
    }

    /// Every leg in parameter order, if there are at most `budget`.
    pub fn pieces(&self, budget: u64) -> Result<Vec<Piece>> {
        let count = self.piece_count();
        if count > BigUint::from(budget) {
            return Err(Error::Budget { needed: count.to_string(), budget });
        }
        let mut out = Vec::new();
        self.collect_pieces(&Word::root(), &mut out)?;
        Ok(out)
    }

    fn collect_pieces(&self, w: &Word, out: &mut Vec<Piece>) -> Result<()> {
        if w.len() == self.depth {
            let (x_from, x_to) = self.x_range(PieceKind::Interval, w)?;
            let t_range = self.idx.interval_of(w)?;
            out.push(Piece { kind: PieceKind::Interval, word: w.clone(), t_range, x_from, x_to });
            return Ok(());
        }
        let m = self.fam.m()[w.len()];
        for l in 1..=m {
            let c = w.child(l);
            self.collect_pieces(&c, out)?;
            if l < m {
                let (x_from, x_to) = self.x_range(PieceKind::Gap, &c)?;
                let t_range = self.idx.gap_endpoints(&c)?;
                out.push(Piece { kind: PieceKind::Gap, word: c, t_range, x_from, x_to });
            }
        }
        Ok(())
    }

    /// `(t, x, y)` at `count` equally spaced parameters.
    pub fn sample(&self, count: usize) -> Result<Vec<(f64, f64, f64)>> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
                let (x, y) = self.eval(t)?;
                Ok((t, x, y))
            })
            .collect()
    }

    /// The legs just before and after `J_w` for a depth-`N` word, as
    /// `(kind, word, local)`; `None` at the ends of `[0, 1]`.
    fn neighbours(&self, w: &Word) -> (Option<(PieceKind, Word, f64)>, Option<(PieceKind, Word, f64)>) {
        let m = self.fam.m();
        let letters = w.letters();
        let before = (1..letters.len()).rev().find(|&k| letters[k] > 1).map(|k| {
            let mut v = letters[..=k].to_vec();
            v[k] -= 1;
            (PieceKind::Gap, Word::new(v).expect("nonempty"), 1.0)
        });
        let after = (1..letters.len())
            .rev()
            .find(|&k| letters[k] < m[k])
            .map(|k| (PieceKind::Gap, w.prefix(k + 1), 0.0));
        (before, after)
    }

    /// Largest mismatch between the end of each given interval leg and the
    /// legs on either side of it.
    pub fn junction_check(&self, words: &[Word]) -> Result<JunctionReport> {
        let gaps: Vec<f64> = words
            .par_iter()
            .map(|w| {
                let (before, after) = self.neighbours(w);
                let start = self.eval_piece(PieceKind::Interval, w, 0.0)?;
                let end = self.eval_piece(PieceKind::Interval, w, 1.0)?;
                let mut worst: f64 = 0.0;
                if let Some((k, v, u)) = before {
                    worst = worst.max(dist(start, self.eval_piece(k, &v, u)?));
                }
                if let Some((k, v, u)) = after {
                    worst = worst.max(dist(end, self.eval_piece(k, &v, u)?));
                }
                Ok(worst)
            })
            .collect::<Result<_>>()?;
        let max_mismatch = gaps.into_iter().fold(0.0, f64::max);
        Ok(JunctionReport { words: words.len(), max_mismatch, pass: max_mismatch <= JUNCTION_TOLERANCE })
    }

    /// Whether `(x, y)` lies in the essential lune of `L_w`.
    pub fn in_essential(&self, w: &Word, x: f64, y: f64, tol: f64) -> Result<bool> {
        let (a, b) = self.fam.support_of_word(w);
        if x < a - tol || x > b + tol {
            return Ok(false);
        }
        let s = self.fam.node_series(w, x.clamp(a, b), 0)?;
        Ok(y >= s.floor[0] - tol && y <= s.floor[0] + s.gap[0] + tol)
    }
}

fn dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

#[derive(Clone, Debug, Serialize)]
pub struct JunctionReport {
    pub words: usize,
    pub max_mismatch: f64,
    pub pass: bool,
}

/// `γ([0, t])`: the essential lune of `L(f, F_t)`.
#[derive(Clone, Debug, Serialize)]
pub struct FootprintRegion {
    pub t: f64,
    pub ceiling: CeilingApprox,
    /// Closure of `{x : f(x) < F_t(x)}`.
    pub clipped_domain: (f64, f64),
}

impl FootprintRegion {
    /// `(f(x), F_t(x))`.
    pub fn bounds_at(&self, fam: &LuneFamily, x: f64) -> Result<(f64, f64)> {
        let f = fam.root().floor().value(x).map_err(Error::from)?;
        Ok((f, self.ceiling.value(fam, x)?))
    }

    pub fn contains(&self, fam: &LuneFamily, x: f64, y: f64, tol: f64) -> Result<bool> {
        let (c, d) = self.clipped_domain;
        if x < c - tol || x > d + tol {
            return Ok(false);
        }
        let (f, g) = self.bounds_at(fam, x.clamp(c, d))?;
        Ok(y >= f - tol && y <= g + tol)
    }
}

const FOOTPRINT_GRID: usize = 4097;
const FOOTPRINT_THRESHOLD: f64 = 0.0;

pub fn footprint(c: &CurveApprox, t: f64) -> Result<FootprintRegion> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(SmoothError::Domain { x: t, domain: Domain::Interval { lo: 0.0, hi: 1.0 } }.into());
    }
    let fam = c.fam;
    let ceil = ceiling(t, fam, c.idx)?;
    let height = |x: f64| -> Result<f64> { Ok(ceil.value(fam, x)? - fam.root().floor().at(x)) };
    let xs: Vec<f64> = (0..FOOTPRINT_GRID).map(|i| i as f64 / (FOOTPRINT_GRID - 1) as f64).collect();
    let inside: Vec<bool> =
        xs.iter().map(|&x| Ok(height(x)? > FOOTPRINT_THRESHOLD)).collect::<Result<_>>()?;
    let first = inside.iter().position(|&b| b);
    let last = inside.iter().rposition(|&b| b);
    let refine = |mut out: f64, mut inn: f64| -> Result<f64> {
        while (out - inn).abs() > 1e-10 {
            let mid = 0.5 * (out + inn);
            if height(mid)? > FOOTPRINT_THRESHOLD {
                inn = mid;
            } else {
                out = mid;
            }
        }
        Ok(0.5 * (out + inn))
    };
    let clipped_domain = match (first, last) {
        (Some(i), Some(j)) => {
            let lo = if i == 0 { 0.0 } else { refine(xs[i - 1], xs[i])? };
            let hi = if j == xs.len() - 1 { 1.0 } else { refine(xs[j + 1], xs[j])? };
            (lo, hi)
        }
        _ => {
            // F_t = f to sampling accuracy: the footprint is a thin sliver
            // around the curve so far; use the abscissae it has visited.
            let (x, _) = c.eval(t)?;
            (0.0, x)
        }
    };
    Ok(FootprintRegion { t, ceiling: ceil, clipped_domain })
}

/// `D_n = (2/3)^{2n} + (ε_n + M (2/3)^n)²`.
#[derive(Clone, Debug, Serialize)]
pub struct DiameterBound {
    pub n: usize,
    pub d_n: f64,
    pub m: f64,
    /// Largest squared diameter measured over the checked nodes.
    pub measured: f64,
    pub nodes_checked: usize,
    pub pass: bool,
}

fn squared_diameter(fam: &LuneFamily, w: &Word) -> Result<f64> {
    let (a, b) = fam.support_of_word(w);
    let mut pts = Vec::with_capacity(130);
    for i in 0..64 {
        let x = a + (b - a) * i as f64 / 63.0;
        let s = fam.node_series(w, x, 0)?;
        pts.push((x, s.floor[0]));
        pts.push((x, s.floor[0] + s.gap[0]));
    }
    let mut best: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2));
        }
    }
    Ok(best)
}

/// Nodes used to stand in for all words of length `k`: the extremal words of
/// every pattern class plus `extra` seeded random words.
pub fn sample_words(fam: &LuneFamily, k: usize, extra: usize, seed: u64) -> Vec<Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9e37_79b9));
    let mut words = fam.extremal_words(k);
    words.extend((0..extra).map(|_| fam.random_word(k, &mut rng)));
    words.sort();
    words.dedup();
    words
}

/// `M ≈ sup_t ‖F_t‖_1`: the largest sampled `‖f_ω‖_1` over depth-`N` words,
/// safety-factored, plus the tail that separates `f_ω` from the ceilings.
pub fn estimate_m(fam: &LuneFamily, extra: usize, seed: u64) -> Result<f64> {
    let n = fam.depth();
    let words = sample_words(fam, n, extra, seed);
    let grid = fam.settings().grid;
    let norms: Vec<f64> = words
        .par_iter()
        .map(|w| {
            let mut best: f64 = 0.0;
            for i in 0..grid {
                let x = i as f64 / (grid - 1) as f64;
                let s = fam.node_series(w, x, 1)?;
                best = best.max(s.floor[0].abs()).max(s.floor[1].abs());
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let sampled = norms.into_iter().fold(0.0, f64::max);
    Ok(sampled * fam.settings().safety_factor + crate::ceiling_field::tail_bound(fam, n))
}

pub fn diameter_formula(fam: &LuneFamily, n: usize, m: f64) -> f64 {
    let r = (2.0f64 / 3.0).powi(n as i32);
    r * r + (fam.eps().eps(n) + m * r).powi(2)
}

/// `D_1..D_up_to`, each checked against measured diameters of sampled nodes.
pub fn diameter_table(fam: &LuneFamily, up_to: usize, extra: usize, seed: u64) -> Result<Vec<DiameterBound>> {
    let m = estimate_m(fam, extra, seed)?;
    (1..=up_to.min(fam.depth()))
        .map(|n| {
            let words = sample_words(fam, n, extra, seed);
            let measured = words
                .par_iter()
                .map(|w| squared_diameter(fam, w))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let d_n = diameter_formula(fam, n, m);
            Ok(DiameterBound { n, d_n, m, measured, nodes_checked: words.len(), pass: measured <= d_n })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CauchyReport {
    pub n_low: usize,
    pub n_high: usize,
    pub samples: usize,
    pub max_distance: f64,
    pub bound: f64,
    pub max_ratio: f64,
    /// Parameters in gaps of depth at most `n_low` moved by exactly zero.
    pub frozen_exact: bool,
    pub pass: bool,
}

/// `|γ_high(t) - γ_low(t)| ≤ √D_low` on the given parameters.
pub fn cauchy_check(c: &CurveApprox, n_low: usize, n_high: usize, ts: &[f64], d_low: f64) -> Result<CauchyReport> {
    if n_low > n_high {
        return Err(Error::Parameter(format!("n_low = {n_low} exceeds n_high = {n_high}")));
    }
    let lo = c.truncated(n_low)?;
    let hi = c.truncated(n_high)?;
    let rows: Vec<(f64, bool)> = ts
        .par_iter()
        .map(|&t| {
            let d = dist(lo.eval(t)?, hi.eval(t)?);
            let frozen = matches!(c.idx.locate_at(t, n_low)?, Location::Gap { .. });
            Ok((d, !frozen || d == 0.0))
        })
        .collect::<Result<_>>()?;
    let max_distance = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let frozen_exact = rows.iter().all(|r| r.1);
    let bound = d_low.sqrt();
    Ok(CauchyReport {
        n_low,
        n_high,
        samples: ts.len(),
        max_distance,
        bound,
        max_ratio: max_distance / bound,
        frozen_exact,
        pass: max_distance <= bound && frozen_exact,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainmentReport {
    pub interval_points: usize,
    pub gap_points: usize,
    pub failures: usize,
    pub pass: bool,
}

/// The image of `J_ω` lies in the essential lune of `L_ω`; the image of
/// `G_{ω∗(i)}` lies in that of `L_{ω∗(i)}` for odd `i` and of
/// `L_{ω∗(i-1)} ∪ L_{ω∗(i)}` for even `i`. Words are sampled per depth.
pub fn containment_check(c: &CurveApprox, extra: usize, per_piece: usize, seed: u64) -> Result<ContainmentReport> {
    let fam = c.fam;
    let mut jobs = Vec::new();
    for n in 1..=c.depth {
        for w in sample_words(fam, n, extra, seed) {
            jobs.push(w);
        }
    }
    let tol = MEMBERSHIP_TOLERANCE;
    let results: Vec<(usize, usize, usize)> = jobs
        .par_iter()
        .map(|w| {
            let mut fails = 0;
            for i in 0..per_piece {
                let v = i as f64 / (per_piece - 1) as f64;
                let p = c.eval_location(&c.idx.locate_within(w, v, c.depth)?)?;
                if !c.in_essential(w, p.0, p.1, tol)? {
                    fails += 1;
                }
            }
            let mut gap_points = 0;
            if w.len() < c.depth {
                let m = fam.m()[w.len()];
                let mut letters = vec![1, 2, m / 2, m / 2 + 1, m - 1];
                letters.retain(|&l| l >= 1 && l < m);
                letters.sort();
                letters.dedup();
                for l in letters {
                    let child = w.child(l);
                    for i in 0..per_piece {
                        let u = i as f64 / (per_piece - 1) as f64;
                        let (x, y) = c.eval_piece(PieceKind::Gap, &child, u)?;
                        gap_points += 1;
                        let mut ok = c.in_essential(&child, x, y, tol)?;
                        if !ok && l % 2 == 0 {
                            ok = c.in_essential(&w.child(l - 1), x, y, tol)?;
                        }
                        if !ok {
                            fails += 1;
                        }
                    }
                }
            }
            Ok((per_piece, gap_points, fails))
        })
        .collect::<Result<_>>()?;
    let interval_points = results.iter().map(|r| r.0).sum();
    let gap_points = results.iter().map(|r| r.1).sum();
    let failures = results.iter().map(|r| r.2).sum();
    Ok(ContainmentReport { interval_points, gap_points, failures, pass: failures == 0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverageReport {
    pub nodes: usize,
    pub max_distance: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Every point of a grid on the essential lune of a depth-`N` node lies
/// within `√D_N` of the sampled image of its interval.
pub fn coverage_check(c: &CurveApprox, extra: usize, seed: u64, d_n: f64) -> Result<CoverageReport> {
    let words = sample_words(c.fam, c.depth, extra, seed);
    let dists: Vec<f64> = words
        .par_iter()
        .map(|w| {
            let image: Vec<(f64, f64)> = (0..64)
                .map(|i| c.eval_location(&c.idx.locate_within(w, i as f64 / 63.0, c.depth)?))
                .collect::<Result<_>>()?;
            let (a, b) = c.fam.support_of_word(w);
            let mut worst: f64 = 0.0;
            for i in 0..8 {
                let x = a + (b - a) * i as f64 / 7.0;
                let s = c.fam.node_series(w, x, 0)?;
                for j in 0..8 {
                    let y = s.floor[0] + s.gap[0] * j as f64 / 7.0;
                    let near = image.iter().map(|&p| dist(p, (x, y))).fold(f64::INFINITY, f64::min);
                    worst = worst.max(near);
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let max_distance = dists.into_iter().fold(0.0, f64::max);
    let bound = d_n.sqrt();
    Ok(CoverageReport { nodes: words.len(), max_distance, bound, pass: max_distance <= bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct EarlierPointReport {
    pub gap_samples: usize,
    pub max_distance: f64,
    pub bound: f64,
    pub pass: bool,
}

/// For parameters `t` in gaps, a point `s < t` on a depth-`N` interval with
/// `|γ_N(s) - γ_N(t)| ≤ √D_N`. For `t ∈ G_{ω∗(i)}` the candidate intervals
/// lie below `J_{ω∗(i)}`, or below `J_{ω∗(i-1)}` when `i > 1`; inside them
/// the point is located by descending to the node that holds it.
pub fn earlier_point_check(c: &CurveApprox, ts: &[f64], d_n: f64) -> Result<EarlierPointReport> {
    let rows: Vec<Option<f64>> = ts
        .par_iter()
        .map(|&t| {
            let loc = c.idx.locate_at(t, c.depth)?;
            let Location::Gap { word, .. } = &loc else { return Ok(None) };
            let (x, y) = c.eval_location(&loc)?;
            let mut cands = vec![word.clone()];
            if word.last() > 1 {
                let mut v = word.letters().to_vec();
                *v.last_mut().expect("nonempty") -= 1;
                cands.push(Word::new(v)?);
            }
            let mut best = f64::INFINITY;
            for cand in cands {
                if !c.in_essential(&cand, x, y, MEMBERSHIP_TOLERANCE)? {
                    continue;
                }
                let (leaf, _) = descend(c.fam, &cand, x, y, TieBreak::Lowest)?;
                let (a, b) = c.fam.support_of_word(&leaf);
                let u = inverse_sigmoid((x - a) / (b - a));
                best = best.min(dist((x, y), c.eval_piece(PieceKind::Interval, &leaf, u)?));
            }
            Ok(Some(best))
        })
        .collect::<Result<_>>()?;
    let found: Vec<f64> = rows.into_iter().flatten().collect();
    let max_distance = found.iter().copied().fold(0.0, f64::max);
    let bound = d_n.sqrt();
    Ok(EarlierPointReport { gap_samples: found.len(), max_distance, bound, pass: max_distance <= bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct HausdorffRow {
    pub t: f64,
    pub distance: f64,
    pub bound: f64,
    pub pitch: f64,
    pub image_cells: usize,
    pub region_cells: usize,
    pub pass: bool,
}

/// Square window around the root lune.
pub fn lune_window(fam: &LuneFamily, n: usize) -> Raster {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..1025 {
        let x = i as f64 / 1024.0;
        let f = fam.root().floor().at(x);
        let g = f + fam.root().gap().at(x);
        lo = lo.min(f);
        hi = hi.max(g);
    }
    let side = (hi - lo).max(1.0) * 1.02;
    let x0 = 0.5 - side / 2.0;
    let y0 = 0.5 * (lo + hi) - side / 2.0;
    Raster::new(n, x0, y0, side / n as f64)
}

/// Points tracing `γ_N([0, t])`: every leg met by `params` equally spaced
/// parameters, each followed over the abscissae it covers before `t` at
/// steps of about half of `pitch`.
pub fn image_points(c: &CurveApprox, t: f64, params: usize, pitch: f64) -> Result<Vec<(f64, f64)>> {
    let mut legs: HashMap<(PieceKind, Word), f64> = HashMap::new();
    for i in 0..params {
        let s = t * i as f64 / (params - 1) as f64;
        let loc = c.idx.locate_at(s, c.depth)?;
        let kind = match loc {
            Location::InK { .. } => PieceKind::Interval,
            Location::Gap { .. } => PieceKind::Gap,
        };
        let reach = legs.entry((kind, loc.word().clone())).or_insert(0.0);
        *reach = reach.max(loc.local());
    }
    let last = c.idx.locate_at(t, c.depth)?;
    let mut legs: Vec<((PieceKind, Word), f64)> = legs
        .into_iter()
        .map(|(key, reach)| {
            let whole = key.1 != *last.word();
            (key, if whole { 1.0 } else { reach })
        })
        .collect();
    legs.sort_by(|a, b| a.0 .1.cmp(&b.0 .1).then((a.0 .0 as u8).cmp(&(b.0 .0 as u8))));
    let traced: Vec<Vec<(f64, f64)>> = legs
        .par_iter()
        .map(|((kind, w), reach)| {
            let (from, to) = c.x_range(*kind, w)?;
            let end = from + (to - from) * bump_integral_value(*reach);
            let steps = ((2.0 * (end - from).abs() / pitch).ceil() as usize + 2).min(4096);
            (0..steps)
                .map(|i| c.point_at(*kind, w, from + (end - from) * i as f64 / (steps - 1) as f64))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<(f64, f64)> = traced.into_iter().flatten().collect();
    out.push(c.eval(t)?);
    Ok(out)
}

/// Rasterizes `γ_N([0, t])` as traced by [`image_points`].
pub fn rasterize_image(c: &CurveApprox, t: f64, params: usize, window: &Raster) -> Result<Raster> {
    let mut r = window.clone();
    for p in image_points(c, t, params, window.pitch)? {
        r.mark(p.0, p.1);
    }
    Ok(r)
}

/// Rasterizes the footprint region: in every column whose centre lies in
/// the clipped domain, the cells meeting `[f, F_t]`.
pub fn rasterize_region(fam: &LuneFamily, region: &FootprintRegion, window: &Raster) -> Result<Raster> {
    let mut r = window.clone();
    let (c, d) = region.clipped_domain;
    for i in 0..r.n {
        let x = r.column_center(i);
        if x < c || x > d {
            continue;
        }
        let (f, g) = region.bounds_at(fam, x)?;
        r.mark_span(i, f, g);
    }
    if r.count() == 0 {
        // thinner than a column: mark the cell of its left end
        let (f, _) = region.bounds_at(fam, c)?;
        r.mark(c, f);
    }
    Ok(r)
}

/// Two-sided Hausdorff distance between the rasterized image of `γ_N` on
/// `[0, t]` and the rasterized footprint region.
pub fn footprint_hausdorff(c: &CurveApprox, t: f64, raster: usize, params: usize, d_n: f64) -> Result<HausdorffRow> {
    let window = lune_window(c.fam, raster);
    let region = footprint(c, t)?;
    let a = rasterize_image(c, t, params, &window)?;
    let b = rasterize_region(c.fam, &region, &window)?;
    let distance = hausdorff(&a, &b);
    let bound = d_n.sqrt() + 2.0 * window.pitch;
    Ok(HausdorffRow {
        t,
        distance,
        bound,
        pitch: window.pitch,
        image_cells: a.count(),
        region_cells: b.count(),
        pass: distance <= bound,
    })
}

/// Seeded uniform parameters in `[0, 1]`.
pub fn random_parameters(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(0.0..=1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lune::presets;
    use crate::smoothfn::{make_phi, NormSettings};
    use crate::subdivision::{build_family, EpsilonSchedule};

    fn family(scale: f64, depth: usize) -> LuneFamily {
        let eps = EpsilonSchedule { scale, ratio: 0.5 };
        build_family(&presets::tilted(), &eps, depth, &make_phi(), &NormSettings::default()).unwrap()
    }

    #[test]
    fn ends_of_the_curve() {
        let fam = family(1e3, 3);
        let idx = CantorIndex::from_family(&fam);
        let c = build_curve(&fam, &idx, 3).unwrap();
        let f = fam.root().floor();
        assert_eq!(c.eval(0.0).unwrap(), (0.0, f.at(0.0)));
        let (x, y) = c.eval(1.0).unwrap();
        assert_eq!(x, 1.0);
        assert!((y - f.at(1.0)).abs() < 1e-15);
    }

    #[test]
    fn pieces_tile_and_meet() {
        let fam = family(1e9, 3);
        let idx = CantorIndex::from_family(&fam);
        let c = build_curve(&fam, &idx, 3).unwrap();
        let pieces = c.pieces(10_000).unwrap();
        assert_eq!(BigUint::from(pieces.len()), c.piece_count());
        assert_eq!(pieces[0].t_range.0, 0.0);
        assert_eq!(pieces.last().unwrap().t_range.1, 1.0);
        for pair in pieces.windows(2) {
            assert!((pair[0].t_range.1 - pair[1].t_range.0).abs() < 1e-15);
            let end = c.eval_piece(pair[0].kind, &pair[0].word, 1.0).unwrap();
            let start = c.eval_piece(pair[1].kind, &pair[1].word, 0.0).unwrap();
            assert!(dist(end, start) < JUNCTION_TOLERANCE, "{pair:?}");
        }
        assert!(c.pieces(3).is_err());
    }

    #[test]
    fn dag_legs_agree_with_word_evaluation() {
        let fam = family(1e9, 3);
        let idx = CantorIndex::from_family(&fam);
        let c = build_curve(&fam, &idx, 3).unwrap();
        for t in [0.05, 0.2, 0.5, 0.61, 0.93] {
            let piece = c.piece_at(t).unwrap();
            let (graph, tm) = c.piece_functions(&piece).unwrap();
            let x = tm.value(t).unwrap();
            let y = graph.value(x).unwrap();
            let (xe, ye) = c.eval(t).unwrap();
            assert!((x - xe).abs() < 1e-9 && (y - ye).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn local_location_refines_global() {
        let fam = family(1e3, 3);
        let idx = CantorIndex::from_family(&fam);
        let w = Word::new(vec![1, 2]).unwrap();
        let (lo, hi) = idx.interval_of(&w).unwrap();
        for v in [1e-6, 0.13, 0.5, 0.77, 1.0 - 1e-6] {
            let a = idx.locate_within(&w, v, 3).unwrap();
            let b = idx.locate_at(lo + v * (hi - lo), 3).unwrap();
            assert_eq!(a.word(), b.word(), "v = {v}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn inverse_sigmoid_round_trips() {
        for v in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!((bump_integral_value(inverse_sigmoid(v)) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn footprint_at_one_is_the_lune() {
        let fam = family(1e3, 3);
        let idx = CantorIndex::from_family(&fam);
        let c = build_curve(&fam, &idx, 3).unwrap();
        let r = footprint(&c, 1.0).unwrap();
        // the true closure is [0, 1]; it is resolved down to heights of one ulp
        let (lo, hi) = r.clipped_domain;
        let gap = fam.root().gap();
        assert!(gap.at(lo) < 1e-15 && gap.at(hi) < 1e-15, "{lo} {hi}");
        assert!(gap.at(0.1) > 1e-6);
        assert!(r.ceiling.is_exact());
        assert!(footprint(&c, 0.0).is_err());
    }
}
