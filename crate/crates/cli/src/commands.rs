//! The artifact-producing subcommands.
//!
//! CSV columns, in order:
//! - `norms.csv`: depth, pattern, support_lo, support_hi, norm, eps, n
//! - `cantor.csv`: depth, word, lo, hi
//! - `ceiling.csv`: t, x, value, slope
//! - `curve.csv`: t, x, y
//! - `footprint.csv`: t, x, lower, upper
//! - `field.csv`: x, y, slope
//! - `cylinder.csv`: t, theta, y
//! - `beta.csv`: t, band, theta, x, y
//!
//! Words are written as letters joined by `.`, patterns as strings of `0`
//! and `1`.

use std::f64::consts::TAU;

use serde::Serialize;

use peano_core::assembly::{
    boundary_check, build_planar_with, estimate_c, seam_check, stack_junction_check, stacked, unstacked, BoundaryReport,
    CylinderBase, CylinderCurve, PlanarCurve, SeamReport, StackJunctionReport,
};
use peano_core::cantor::CantorIndex;
use peano_core::ceiling_field::{ceiling, sample_field, Side};
use peano_core::peano::{build_curve, footprint, CurveApprox};
use peano_core::subdivision::{FamilySummary, LuneFamily, Word};

use crate::config::RunConfig;
use crate::svg::{self, Svg};
use crate::{CliError, Output};

/// Curves drawn per depth in the subdivision picture.
const SVG_CURVES: usize = 200;
/// Points per drawn curve.
const SVG_POINTS: usize = 129;

pub fn word_label(w: &Word) -> String {
    w.letters().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(".")
}

fn pattern_label(p: &[bool]) -> String {
    p.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn grid(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// Root lune outline: floor left to right, then ceiling right to left.
fn lune_outline(fam: &LuneFamily) -> Result<Vec<(f64, f64)>, CliError> {
    let l = fam.root();
    let mut pts = Vec::new();
    for x in grid(257, 0.0, 1.0) {
        pts.push((x, l.floor().value(x)?));
    }
    for x in grid(257, 0.0, 1.0).collect::<Vec<_>>().into_iter().rev() {
        pts.push((x, l.ceiling().value(x)?));
    }
    Ok(pts)
}

fn lune_canvas(fam: &LuneFamily) -> Result<(Svg, Vec<(f64, f64)>), CliError> {
    let outline = lune_outline(fam)?;
    let lo = outline.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = outline.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-9);
    Ok((Svg::new((0.0, 1.0), (lo - pad, hi + pad), false), outline))
}

/// Evenly strided selection of at most `cap` items.
fn strided<T>(items: Vec<T>, cap: usize) -> Vec<T> {
    let n = items.len();
    if n <= cap {
        return items;
    }
    items.into_iter().enumerate().filter(|(i, _)| i * cap / n != (i + 1) * cap / n).map(|(_, t)| t).collect()
}

#[derive(Serialize)]
struct NodeRecord {
    word: String,
    depth: usize,
    pattern: String,
    support: (f64, f64),
    norm: f64,
    eps: f64,
}

#[derive(Serialize)]
struct FamilyExport {
    summary: FamilySummary,
    /// Nodes in breadth-first order, at most `export_cap` of them.
    nodes: Vec<NodeRecord>,
    truncated: bool,
}

#[derive(Serialize)]
struct NormRow {
    depth: usize,
    pattern: String,
    support_lo: f64,
    support_hi: f64,
    norm: f64,
    eps: f64,
    n: Option<u64>,
}

pub fn cmd_subdivide(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let fam = cfg.family()?;
    let cap = cfg.export_cap as usize;
    let mut nodes = Vec::new();
    let mut truncated = false;
    'outer: for k in 1..=fam.depth() {
        for w in fam.words(k) {
            if nodes.len() >= cap {
                truncated = true;
                break 'outer;
            }
            let class = fam.class_of(&w);
            nodes.push(NodeRecord {
                word: word_label(&w),
                depth: k,
                pattern: pattern_label(&class.pattern),
                support: fam.support_of_word(&w),
                norm: class.norm.value,
                eps: fam.eps().eps(k),
            });
        }
    }
    out.json("family.json", &FamilyExport { summary: fam.summary(), nodes, truncated })?;
    let rows: Vec<NormRow> = (1..=fam.depth())
        .flat_map(|k| fam.classes(k).iter().map(move |c| (k, c)))
        .map(|(k, c)| NormRow {
            depth: k,
            pattern: pattern_label(&c.pattern),
            support_lo: c.support.0,
            support_hi: c.support.1,
            norm: c.norm.value,
            eps: fam.eps().eps(k),
            n: c.choice.map(|ch| ch.n),
        })
        .collect();
    out.csv("norms.csv", &rows)?;
    out.svg("subdivide.svg", || subdivide_svg(&fam))
}

fn floor_curve(fam: &LuneFamily, w: &Word) -> Result<Vec<(f64, f64)>, CliError> {
    let (a, b) = fam.support_of_word(w);
    grid(SVG_POINTS, a, b).map(|x| Ok((x, fam.floor_value(w, x)?))).collect()
}

fn subdivide_svg(fam: &LuneFamily) -> Result<String, CliError> {
    let (mut s, outline) = lune_canvas(fam)?;
    s.polygon(&outline, svg::FILL, 0.25, svg::OUTLINE, 1.5);
    if fam.depth() >= 2 {
        let words = strided(fam.words(2).take(SVG_CURVES * 64).collect(), SVG_CURVES);
        for w in &words {
            s.polyline(&floor_curve(fam, w)?, svg::depth_color(2), 0.8);
        }
    }
    if fam.depth() >= 3 {
        let middle = fam.m()[1].div_ceil(2);
        let parent = Word::root().child(middle);
        let children: Vec<Word> = (1..=fam.m()[2]).map(|l| parent.child(l)).collect();
        for w in &strided(children, SVG_CURVES) {
            s.polyline(&floor_curve(fam, w)?, svg::depth_color(3), 0.6);
        }
    }
    s.caption(&format!("subdivision, m = {:?}", fam.m()));
    Ok(s.finish())
}

#[derive(Serialize)]
struct IntervalRecord {
    depth: usize,
    word: String,
    lo: f64,
    hi: f64,
    /// `lo = offset / denominator` exactly.
    offset: String,
    denominator: String,
}

#[derive(Serialize)]
struct CantorExport {
    m: Vec<u64>,
    q: Vec<String>,
    intervals: Vec<IntervalRecord>,
    truncated: bool,
}

#[derive(Serialize)]
struct CantorRow {
    depth: usize,
    word: String,
    lo: f64,
    hi: f64,
}

/// All words of length `k` under `m`, lexicographically, at most `cap`.
fn words_under(m: &[u64], k: usize, cap: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut cur = vec![1u64; k];
    loop {
        if out.len() >= cap {
            return out;
        }
        out.push(Word::new(cur.clone()).expect("nonempty"));
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < m[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 1;
        }
    }
}

fn cantor_index(cfg: &RunConfig) -> Result<CantorIndex, CliError> {
    match &cfg.cantor_m {
        Some(m) => Ok(CantorIndex::new(m)?),
        None => Ok(CantorIndex::from_family(&cfg.family()?)),
    }
}

pub fn cmd_cantor(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let idx = cantor_index(cfg)?;
    let cap = cfg.export_cap as usize;
    let mut intervals = Vec::new();
    let mut truncated = false;
    for k in 1..=idx.depth() {
        let room = cap.saturating_sub(intervals.len());
        let words = words_under(idx.m(), k, room + 1);
        truncated |= words.len() > room;
        for w in words.into_iter().take(room) {
            let (lo, hi) = idx.interval_of(&w)?;
            intervals.push(IntervalRecord {
                depth: k,
                word: word_label(&w),
                lo,
                hi,
                offset: idx.offset(&w)?.to_string(),
                denominator: idx.q(k).to_string(),
            });
        }
    }
    let rows: Vec<CantorRow> = intervals
        .iter()
        .map(|r| CantorRow { depth: r.depth, word: r.word.clone(), lo: r.lo, hi: r.hi })
        .collect();
    out.csv("cantor.csv", &rows)?;
    out.svg("cantor.svg", || {
        let d = idx.depth() as f64;
        let mut s = Svg::new((0.0, 1.0), (-d - 0.5, -0.5), false);
        for r in &intervals {
            let y = -(r.depth as f64);
            s.rect((r.lo, y - 0.2), (r.hi, y + 0.2), svg::depth_color(r.depth));
        }
        s.caption(&format!("intervals J, m = {:?}", idx.m()));
        Ok(s.finish())
    })?;
    let q = (1..=idx.depth()).map(|k| idx.q(k).to_string()).collect();
    out.json("cantor.json", &CantorExport { m: idx.m().to_vec(), q, intervals, truncated })
}

#[derive(Serialize)]
struct CeilingRecord {
    t: f64,
    word: String,
    side: Side,
    exact: bool,
    tail_bound: f64,
}

#[derive(Serialize)]
struct CeilingRow {
    t: f64,
    x: f64,
    value: f64,
    slope: f64,
}

pub fn cmd_ceiling(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let fam = cfg.family()?;
    let idx = CantorIndex::from_family(&fam);
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for &t in &cfg.params {
        let c = ceiling(t, &fam, &idx)?;
        let mut curve = Vec::new();
        for x in grid(cfg.grids.samples, 0.0, 1.0) {
            let (value, slope) = c.value_slope(&fam, x)?;
            rows.push(CeilingRow { t, x, value, slope });
            curve.push((x, value));
        }
        records.push(CeilingRecord {
            t,
            word: word_label(&c.word),
            side: c.side,
            exact: c.is_exact(),
            tail_bound: c.tail_bound,
        });
        curves.push(curve);
    }
    out.json("ceiling.json", &records)?;
    out.csv("ceiling.csv", &rows)?;
    out.svg("ceiling.svg", || {
        let (mut s, outline) = lune_canvas(&fam)?;
        s.polygon(&outline, svg::FILL, 0.25, svg::OUTLINE, 1.5);
        for (i, curve) in curves.iter().enumerate() {
            s.polyline(curve, svg::depth_color(i + 2), 1.5);
        }
        s.caption("ceilings F_t");
        Ok(s.finish())
    })
}

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    x: f64,
    y: f64,
}

/// Points along every piece when there are at most `cap` pieces, else
/// `None`.
fn piece_traces(c: &CurveApprox, cap: u64) -> Result<Option<Vec<Vec<(f64, f64)>>>, CliError> {
    let pieces = match c.pieces(cap) {
        Ok(p) => p,
        Err(peano_core::Error::Budget { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let per = (8 * SVG_POINTS / pieces.len().max(1)).clamp(8, SVG_POINTS);
    let traces = pieces
        .iter()
        .map(|p| grid(per, 0.0, 1.0).map(|u| Ok(c.eval_piece(p.kind, &p.word, u)?)).collect())
        .collect::<Result<_, CliError>>()?;
    Ok(Some(traces))
}

pub fn cmd_curve(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let fam = cfg.family()?;
    let idx = CantorIndex::from_family(&fam);
    let c = build_curve(&fam, &idx, fam.depth())?;
    let samples = c.sample(cfg.grids.samples)?;
    let rows: Vec<CurveRow> = samples.iter().map(|&(t, x, y)| CurveRow { t, x, y }).collect();
    out.csv("curve.csv", &rows)?;
    out.svg("curve.svg", || {
        let (mut s, outline) = lune_canvas(&fam)?;
        s.polygon(&outline, svg::FILL, 0.2, svg::OUTLINE, 1.5);
        match piece_traces(&c, cfg.export_cap)? {
            Some(traces) => {
                let joined: Vec<(f64, f64)> = traces.into_iter().flatten().collect();
                s.polyline(&joined, svg::CURVE, 1.2);
            }
            None => {
                let pts: Vec<(f64, f64)> = samples.iter().map(|&(_, x, y)| (x, y)).collect();
                s.polyline(&pts, svg::CURVE, 0.6);
            }
        }
        s.caption(&format!("curve at depth {}, {} pieces", c.depth(), c.piece_count()));
        Ok(s.finish())
    })
}

#[derive(Serialize)]
struct FootprintRecord {
    t: f64,
    word: String,
    clipped_domain: (f64, f64),
    tail_bound: f64,
    point: (f64, f64),
}

#[derive(Serialize)]
struct FootprintRow {
    t: f64,
    x: f64,
    lower: f64,
    upper: f64,
}

pub fn cmd_footprint(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let fam = cfg.family()?;
    let idx = CantorIndex::from_family(&fam);
    let c = build_curve(&fam, &idx, fam.depth())?;
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (i, &t) in cfg.params.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let region = footprint(&c, t)?;
        let (lo, hi) = region.clipped_domain;
        let mut bounds = Vec::new();
        for x in grid(cfg.grids.samples, lo, hi) {
            let (lower, upper) = region.bounds_at(&fam, x)?;
            rows.push(FootprintRow { t, x, lower, upper });
            bounds.push((x, lower, upper));
        }
        let point = c.eval(t)?;
        records.push(FootprintRecord {
            t,
            word: word_label(&region.ceiling.word),
            clipped_domain: region.clipped_domain,
            tail_bound: region.ceiling.tail_bound,
            point,
        });
        out.svg(&format!("footprint_{i}.svg"), || {
            let (mut s, outline) = lune_canvas(&fam)?;
            s.polygon(&outline, "none", 0.0, svg::OUTLINE, 1.0);
            let mut region_pts: Vec<(f64, f64)> = bounds.iter().map(|&(x, l, _)| (x, l)).collect();
            region_pts.extend(bounds.iter().rev().map(|&(x, _, u)| (x, u)));
            s.polygon(&region_pts, svg::FILL, 0.6, "none", 0.0);
            let top: Vec<(f64, f64)> = bounds.iter().map(|&(x, _, u)| (x, u)).collect();
            s.polyline(&top, svg::HIGHLIGHT, 2.0);
            s.dot(point, 4.0, svg::CURVE);
            s.caption(&format!("footprint at t = {t}"));
            Ok(s.finish())
        })?;
    }
    out.json("footprint.json", &records)?;
    out.csv("footprint.csv", &rows)
}

#[derive(Serialize)]
struct FieldRow {
    x: f64,
    y: f64,
    slope: f64,
}

pub fn cmd_field(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let fam = cfg.family()?;
    let [nx, ny] = cfg.grids.field;
    let samples = sample_field(&fam, nx, ny)?;
    let rows: Vec<FieldRow> = samples.iter().map(|s| FieldRow { x: s.x, y: s.y, slope: s.slope }).collect();
    out.csv("field.csv", &rows)?;
    out.svg("field.svg", || {
        let (mut s, outline) = lune_canvas(&fam)?;
        s.polygon(&outline, svg::FILL, 0.15, svg::OUTLINE, 1.5);
        let len = 0.8 * (svg::WIDTH - 2.0 * svg::MARGIN) / nx as f64;
        for f in &samples {
            s.tick((f.x, f.y), (1.0, f.slope), len, svg::FIELD);
        }
        s.caption("line field (1, psi)");
        Ok(s.finish())
    })
}

/// The plain and stacked cylinder curves for the configured ranges.
pub fn cylinder_curves(cfg: &RunConfig) -> Result<(CylinderCurve, CylinderCurve), CliError> {
    let opts = cfg.cylinder_options();
    let cc = &cfg.cylinder;
    let base = std::sync::Arc::new(CylinderBase::build(cc.depth, &opts)?);
    let c = estimate_c(&base, cc.k0, &opts)?;
    let plain = unstacked(base.clone(), cc.t_range, cc.y_range)?;
    let stack = stacked(base, cc.t_range, cc.y_range, c, cc.delta0, 0, &opts)?;
    Ok((plain, stack))
}

#[derive(Serialize)]
struct CylinderExport {
    depth: usize,
    m_lower: Vec<u64>,
    m_upper: Vec<u64>,
    k0: usize,
    delta0: f64,
    c_estimate: Option<f64>,
    stack: u64,
    boundary: BoundaryReport,
    stacked_boundary: BoundaryReport,
    seam: SeamReport,
    stack_junction: StackJunctionReport,
}

#[derive(Serialize)]
struct CylinderRow {
    t: f64,
    theta: f64,
    y: f64,
}

pub fn cmd_cylinder(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let (plain, stack) = cylinder_curves(cfg)?;
    let theta = cfg.grids.theta;
    let export = CylinderExport {
        depth: plain.base().depth(),
        m_lower: plain.base().lower().m().to_vec(),
        m_upper: plain.base().upper().m().to_vec(),
        k0: cfg.cylinder.k0,
        delta0: cfg.cylinder.delta0,
        c_estimate: stack.c_estimate,
        stack: stack.stack,
        boundary: boundary_check(&plain, theta)?,
        stacked_boundary: boundary_check(&stack, theta)?,
        seam: seam_check(plain.base(), cfg.max_jet_order, 256)?,
        stack_junction: stack_junction_check(&stack)?,
    };
    out.json("cylinder.json", &export)?;
    let (t0, t1) = plain.t_range;
    let mut rows = Vec::new();
    for t in grid(cfg.grids.samples, t0, t1) {
        let (theta, y) = plain.point(t)?;
        rows.push(CylinderRow { t, theta, y });
    }
    out.csv("cylinder.csv", &rows)?;
    out.svg("cylinder.svg", || {
        let (c, d) = plain.y_range;
        let mut s = Svg::new((0.0, TAU), (c, d), false);
        s.polygon(&[(0.0, c), (TAU, c), (TAU, d), (0.0, d)], "none", 0.0, svg::OUTLINE, 1.0);
        let mut seg = Vec::new();
        let mut last: Option<f64> = None;
        for r in &rows {
            if last.is_some_and(|h| (r.theta - h).abs() > std::f64::consts::PI) {
                s.polyline(&seg, svg::CURVE, 1.0);
                seg.clear();
            }
            seg.push((r.theta, r.y));
            last = Some(r.theta);
        }
        s.polyline(&seg, svg::CURVE, 1.0);
        s.caption(&format!("cylinder curve, depth {}", plain.base().depth()));
        Ok(s.finish())
    })
}

#[derive(Serialize)]
struct BandRecord {
    index: usize,
    interval: (f64, f64),
    k: usize,
    eps: f64,
    delta: f64,
    stack: u64,
    c_estimate: Option<f64>,
    samples: Vec<SampleRecord>,
}

#[derive(Serialize)]
struct SampleRecord {
    t: f64,
    /// `‖β_t - α_t‖_k`.
    distance: f64,
    /// `‖F_t - t‖_k`.
    radial: f64,
}

#[derive(Serialize)]
struct TheoremExport {
    window: (f64, f64),
    depth: usize,
    band_junction_gap: f64,
    bands: Vec<BandRecord>,
}

#[derive(Serialize)]
struct BetaRow {
    t: f64,
    band: usize,
    theta: f64,
    x: f64,
    y: f64,
}

pub fn planar_curve(cfg: &RunConfig) -> Result<PlanarCurve, CliError> {
    let th = &cfg.theorem;
    Ok(build_planar_with(&th.schedule, th.window, th.depth, &cfg.cylinder_options())?)
}

/// `count` parameters strictly inside `(a, b)`, evenly spaced.
fn interior(a: f64, b: f64, count: usize) -> impl Iterator<Item = f64> {
    (1..=count).map(move |i| a + (b - a) * i as f64 / (count + 1) as f64)
}

pub fn cmd_theorem(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let p = planar_curve(cfg)?;
    let theta_grid = cfg.grids.theta;
    let mut bands = Vec::new();
    let mut rows = Vec::new();
    let mut betas = Vec::new();
    for b in &p.bands {
        let (a, c) = (b.interval.0.max(p.window.0), b.interval.1.min(p.window.1));
        let mut samples = Vec::new();
        for t in interior(a, c, cfg.theorem.curves_per_band) {
            let e = p.embedding(t)?;
            let (distance, radial) = e.distances(b.k, theta_grid)?;
            samples.push(SampleRecord { t, distance, radial });
            let mut curve = Vec::new();
            for theta in grid(cfg.grids.samples, 0.0, TAU) {
                let (x, y) = e.beta(theta)?;
                rows.push(BetaRow { t, band: b.index, theta, x, y });
                curve.push((x, y));
            }
            betas.push((t, curve));
        }
        bands.push(BandRecord {
            index: b.index,
            interval: b.interval,
            k: b.k,
            eps: b.eps,
            delta: b.delta,
            stack: b.cylinder.stack,
            c_estimate: b.cylinder.c_estimate,
            samples,
        });
    }
    let export =
        TheoremExport { window: p.window, depth: cfg.theorem.depth, band_junction_gap: p.band_junction_gap()?, bands };
    out.json("theorem.json", &export)?;
    out.csv("beta.csv", &rows)?;
    out.svg("theorem.svg", || theorem_svg(cfg, &p, &betas))
}

fn theorem_svg(cfg: &RunConfig, p: &PlanarCurve, betas: &[(f64, Vec<(f64, f64)>)]) -> Result<String, CliError> {
    let r = p.window.1 * 1.05;
    let mut s = Svg::new((-r, r), (-r, r), true);
    for (x, y) in grid(cfg.grids.samples * 4, p.window.0, p.window.1).map(|t| p.point(t)).collect::<Result<Vec<_>, _>>()? {
        s.dot((x, y), 0.8, svg::FILL);
    }
    for &(t, _) in betas {
        let circle: Vec<(f64, f64)> = grid(257, 0.0, TAU).map(|th| (t * th.cos(), t * th.sin())).collect();
        s.polyline(&circle, svg::OUTLINE, 0.5);
    }
    for (i, (_, curve)) in betas.iter().enumerate() {
        s.polyline(curve, svg::depth_color(2 + i % 4), 1.5);
    }
    let [nx, _] = cfg.grids.field;
    let step = 2.0 * r / nx as f64;
    for i in 0..nx {
        for j in 0..nx {
            let (x, y) = (-r + (i as f64 + 0.5) * step, -r + (j as f64 + 0.5) * step);
            let rad = x.hypot(y);
            if rad <= p.window.0 || rad >= p.window.1 {
                continue;
            }
            let dir = p.field(x, y)?;
            s.tick((x, y), dir, 0.6 * step * s_scale(r), svg::FIELD);
        }
    }
    s.caption(&format!("window {:?}, {} bands", p.window, p.bands.len()));
    Ok(s.finish())
}

/// Pixels per data unit on the square theorem canvas.
fn s_scale(r: f64) -> f64 {
    (svg::HEIGHT - 2.0 * svg::MARGIN) / (2.0 * r)
}
