//! `verify`: runs the configured checks and reports measured margins.
//!
//! Every row carries a `measured` value, the `bound` it is compared with and
//! `margin`, positive when the check has room to spare. Sampled checks draw
//! their parameters and words from the configured seed.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use peano_core::assembly::{
    boundary_check, curvature_check, norm_check, proximity_check, seam_check, stack_junction_check, PlanarCurve,
    BOUNDARY_TOLERANCE, SEAM_TOLERANCE,
};
use peano_core::cantor::CantorIndex;
use peano_core::ceiling_field::{ceiling_monotone_check, gap_flatness_check, tangency_check};
use peano_core::peano::{
    build_curve, cauchy_check, containment_check, coverage_check, diameter_table, earlier_point_check,
    footprint_hausdorff, random_parameters, sample_words, DiameterBound, JUNCTION_TOLERANCE,
};
use peano_core::subdivision::{floor_increment_check, norm_invariant_check, LuneFamily, Word};

use crate::commands::{cylinder_curves, planar_curve};
use crate::config::RunConfig;
use crate::{CliError, Output};

/// Depth up to which the norm invariant is checked node class by class.
pub const NORM_INVARIANT_DEPTH: usize = 3;

#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub detail: Value,
}

impl CheckRow {
    /// A check of the form `measured ≤ bound`.
    fn at_most(name: &str, measured: f64, bound: f64, pass: bool, detail: Value) -> Self {
        CheckRow { name: name.into(), pass, measured: measured + 0.0, bound, margin: bound - measured + 0.0, detail }
    }

    /// A check of the form `measured > bound`.
    fn above(name: &str, measured: f64, bound: f64, pass: bool, detail: Value) -> Self {
        CheckRow { name: name.into(), pass, measured: measured + 0.0, bound, margin: measured - bound + 0.0, detail }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub rows: Vec<CheckRow>,
    pub all_pass: bool,
}

impl VerifyReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<18} {:<6} {:>13} {:>13} {:>13}", "check", "result", "measured", "bound", "margin");
        for r in &self.rows {
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(
                s,
                "{:<18} {:<6} {:>13.6e} {:>13.6e} {:>13.6e}",
                r.name, verdict, r.measured, r.bound, r.margin
            );
        }
        s
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    name: &'a str,
    pass: bool,
    measured: f64,
    bound: f64,
    margin: f64,
}

/// Lazily built objects shared between checks.
struct Context<'c> {
    cfg: &'c RunConfig,
    family: Option<(LuneFamily, CantorIndex)>,
    diameters: Option<Vec<DiameterBound>>,
    planar: Option<PlanarCurve>,
}

impl<'c> Context<'c> {
    fn family(&mut self) -> Result<&(LuneFamily, CantorIndex), CliError> {
        if self.family.is_none() {
            let fam = self.cfg.family()?;
            let idx = CantorIndex::from_family(&fam);
            self.family = Some((fam, idx));
        }
        Ok(self.family.as_ref().expect("built"))
    }

    fn diameters(&mut self) -> Result<Vec<DiameterBound>, CliError> {
        if self.diameters.is_none() {
            let (extra, seed) = (self.cfg.verify.extra_words, self.cfg.seed);
            let (fam, _) = self.family()?;
            let table = diameter_table(fam, fam.depth(), extra, seed)?;
            self.diameters = Some(table);
        }
        Ok(self.diameters.clone().expect("built"))
    }

    fn planar(&mut self) -> Result<&PlanarCurve, CliError> {
        if self.planar.is_none() {
            self.planar = Some(planar_curve(self.cfg)?);
        }
        Ok(self.planar.as_ref().expect("built"))
    }
}

/// Ordered pairs `t ≤ s` from the seed.
fn ordered_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            (a.min(b), a.max(b))
        })
        .collect()
}

/// Words at every depth from 2 that have a right sibling, so that a gap
/// follows them.
fn gap_words(fam: &LuneFamily, count: usize, extra: usize, seed: u64) -> Vec<Word> {
    let mut words: Vec<Word> = (2..=fam.depth())
        .flat_map(|k| sample_words(fam, k, extra, seed))
        .filter(|w| w.last() < fam.m()[w.len() - 1])
        .collect();
    words.sort();
    words.dedup();
    let n = words.len();
    if n > count {
        words = words.into_iter().enumerate().filter(|(i, _)| i * count / n != (i + 1) * count / n).map(|(_, w)| w).collect();
    }
    words
}

fn run_check(name: &str, ctx: &mut Context) -> Result<CheckRow, CliError> {
    let cfg = ctx.cfg;
    let v = &cfg.verify;
    let seed = cfg.seed;
    let row = match name {
        "norm_invariant" => {
            let (fam, _) = ctx.family()?;
            let r = norm_invariant_check(fam, NORM_INVARIANT_DEPTH, v.check_eps.as_ref());
            let worst = r.rows.iter().filter(|r| !r.vacuous).map(|r| r.norm / r.eps).fold(0.0, f64::max);
            let failing = r.rows.iter().filter(|r| !r.pass).count();
            CheckRow::at_most(
                name,
                worst,
                1.0,
                r.all_pass,
                json!({"ratio": "max norm / eps", "classes": r.rows.len(), "failing": failing}),
            )
        }
        "floor_increment" => {
            let (fam, _) = ctx.family()?;
            let r = floor_increment_check(fam)?;
            let worst = r.rows.iter().map(|r| r.lhs / r.bound).fold(0.0, f64::max);
            CheckRow::at_most(name, worst, 1.0, r.all_pass, json!({"ratio": "max lhs / bound", "rows": r.rows.len(), "min_slack": r.min_slack}))
        }
        "ceiling_monotone" => {
            let (fam, idx) = ctx.family()?;
            let r = ceiling_monotone_check(fam, idx, &ordered_pairs(v.monotone_pairs, seed), cfg.grids.samples)?;
            let excess = r.rows.iter().map(|r| -r.margin - r.allowance).fold(f64::NEG_INFINITY, f64::max);
            CheckRow::at_most(
                name,
                excess,
                0.0,
                r.all_pass,
                json!({"measured": "max over pairs of (F_t - F_s) minus the tail allowance", "pairs": r.rows.len(), "worst_margin": r.worst_margin}),
            )
        }
        "gap_flatness" => {
            let (fam, idx) = ctx.family()?;
            let words = gap_words(fam, v.flat_gaps, v.extra_words, seed);
            let r = gap_flatness_check(fam, idx, &words, 4, cfg.grids.samples)?;
            let pass = r.pass && r.gaps > 0;
            CheckRow::at_most(name, r.max_deviation, 0.0, pass, json!({"gaps": r.gaps, "unresolved": r.unresolved, "per_gap": r.per_gap}))
        }
        "tangency" => {
            let (fam, idx) = ctx.family()?;
            let ts = random_parameters(v.tangency_params, seed);
            let r = tangency_check(fam, idx, &ts, v.tangency_grid)?;
            CheckRow::at_most(name, r.max_discrepancy, r.bound, r.pass, json!({"tail_bound": r.tail_bound, "params": ts.len()}))
        }
        "diameter" => {
            let table = ctx.diameters()?;
            let worst = table.iter().map(|d| d.measured / d.d_n).fold(0.0, f64::max);
            let pass = table.iter().all(|d| d.pass);
            CheckRow::at_most(name, worst, 1.0, pass, json!({"ratio": "max measured diameter squared / D_n", "table": table}))
        }
        "cauchy" => {
            let table = ctx.diameters()?;
            let (fam, idx) = ctx.family()?;
            let c = build_curve(fam, idx, fam.depth())?;
            let ts = random_parameters(v.cauchy_params, seed);
            let low = v.cauchy_low.min(fam.depth());
            let r = cauchy_check(&c, low, fam.depth(), &ts, table[low - 1].d_n)?;
            CheckRow::at_most(name, r.max_distance, r.bound, r.pass, serde_json::to_value(&r)?)
        }
        "containment" => {
            let (fam, idx) = ctx.family()?;
            let c = build_curve(fam, idx, fam.depth())?;
            let r = containment_check(&c, v.extra_words, 8, seed)?;
            CheckRow::at_most(name, r.failures as f64, 0.0, r.pass, serde_json::to_value(&r)?)
        }
        "coverage" => {
            let d = ctx.diameters()?.last().expect("nonempty").d_n;
            let (fam, idx) = ctx.family()?;
            let c = build_curve(fam, idx, fam.depth())?;
            let r = coverage_check(&c, v.extra_words, seed, d)?;
            CheckRow::at_most(name, r.max_distance, r.bound, r.pass, serde_json::to_value(&r)?)
        }
        "earlier_point" => {
            let d = ctx.diameters()?.last().expect("nonempty").d_n;
            let (fam, idx) = ctx.family()?;
            let c = build_curve(fam, idx, fam.depth())?;
            let ts = random_parameters(v.cauchy_params.min(1000), seed);
            let r = earlier_point_check(&c, &ts, d)?;
            CheckRow::at_most(name, r.max_distance, r.bound, r.pass, serde_json::to_value(&r)?)
        }
        "junction" => {
            let (fam, idx) = ctx.family()?;
            let c = build_curve(fam, idx, fam.depth())?;
            let words: Vec<Word> = (1..=fam.depth()).flat_map(|k| sample_words(fam, k, v.extra_words, seed)).collect();
            let r = c.junction_check(&words)?;
            CheckRow::at_most(name, r.max_mismatch, JUNCTION_TOLERANCE, r.pass, json!({"words": r.words}))
        }
        "footprint" => {
            let d = ctx.diameters()?.last().expect("nonempty").d_n;
            let (fam, idx) = ctx.family()?;
            let c = build_curve(fam, idx, fam.depth())?;
            let mut rows = Vec::new();
            for t in random_parameters(v.footprint_params, seed) {
                rows.push(footprint_hausdorff(&c, t, cfg.grids.raster, cfg.grids.image_params, d)?);
            }
            let worst = rows.iter().map(|r| r.distance / r.bound).fold(0.0, f64::max);
            let pass = rows.iter().all(|r| r.pass);
            CheckRow::at_most(name, worst, 1.0, pass, json!({"ratio": "max Hausdorff distance / bound", "rows": rows}))
        }
        "cylinder" => {
            let (plain, stack) = cylinder_curves(cfg)?;
            let b = boundary_check(&plain, cfg.grids.theta)?;
            let bs = boundary_check(&stack, cfg.grids.theta)?;
            let seam = seam_check(plain.base(), cfg.max_jet_order, 256)?;
            let boundary = [b.first_ceiling_deviation, b.last_ceiling_deviation, bs.first_ceiling_deviation, bs.last_ceiling_deviation]
                .into_iter()
                .fold(0.0, f64::max);
            let measured = (boundary / BOUNDARY_TOLERANCE).max(seam.max_jet_mismatch.max(seam.max_point_gap) / SEAM_TOLERANCE);
            CheckRow::at_most(
                name,
                measured,
                1.0,
                b.pass && bs.pass && seam.pass,
                json!({"ratio": "max deviation / tolerance", "boundary": b, "stacked_boundary": bs, "seam": seam}),
            )
        }
        "stack" => {
            let (_, stack) = cylinder_curves(cfg)?;
            let ts: Vec<f64> = random_parameters(v.stack_params, seed)
                .into_iter()
                .map(|u| stack.t_range.0 + u * (stack.t_range.1 - stack.t_range.0))
                .collect();
            let r = norm_check(&stack, cfg.cylinder.k0, cfg.cylinder.delta0, &ts, cfg.grids.theta)?;
            let j = stack_junction_check(&stack)?;
            CheckRow::at_most(
                name,
                r.max_norm,
                cfg.cylinder.delta0,
                r.pass && j.pass,
                json!({"stack": r.stack, "c_estimate": r.c_estimate, "stack_threshold": r.stack_threshold, "junction": j}),
            )
        }
        "proximity" => {
            let per_band = v.proximity_per_band;
            let theta = cfg.grids.theta;
            let p = ctx.planar()?;
            let r = proximity_check(p, per_band, theta)?;
            let worst = r.rows.iter().map(|r| r.distance / r.eps).fold(0.0, f64::max);
            let chain = r.rows.iter().all(|r| r.chain_holds);
            CheckRow::at_most(
                name,
                worst,
                1.0,
                r.pass,
                json!({"ratio": "max distance / eps", "samples": r.rows.len(), "min_margin": r.min_margin, "chain_holds": chain, "band_junction_gap": p.band_junction_gap()?}),
            )
        }
        "curvature" => {
            let count = v.curvature_params;
            let theta = cfg.grids.theta;
            let p = ctx.planar()?;
            let (lo, hi) = p.window;
            let mut rows = Vec::new();
            for u in random_parameters(count, seed) {
                rows.push(curvature_check(&p.embedding(lo + u * (hi - lo))?, theta)?);
            }
            let min = rows.iter().map(|r| r.min_abs).fold(f64::INFINITY, f64::min);
            CheckRow::above(name, min, 0.0, rows.iter().all(|r| r.pass), json!({"measured": "min |curvature|", "params": rows.len()}))
        }
        other => return Err(CliError::Config(format!("unknown check '{other}'"))),
    };
    Ok(row)
}

pub fn run_checks(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let mut ctx = Context { cfg, family: None, diameters: None, planar: None };
    let mut rows = Vec::new();
    for name in &cfg.verify.checks {
        rows.push(run_check(name, &mut ctx)?);
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(VerifyReport { seed: cfg.seed, rows, all_pass })
}

/// Writes `verify.json` and `verify.csv` and returns the report; the caller
/// turns a failed report into exit code 3.
pub fn cmd_verify(cfg: &RunConfig, out: &Output) -> Result<VerifyReport, CliError> {
    let report = run_checks(cfg)?;
    out.json("verify.json", &report)?;
    let rows: Vec<CsvRow> = report
        .rows
        .iter()
        .map(|r| CsvRow { name: &r.name, pass: r.pass, measured: r.measured, bound: r.bound, margin: r.margin })
        .collect();
    out.csv("verify.csv", &rows)?;
    Ok(report)
}
