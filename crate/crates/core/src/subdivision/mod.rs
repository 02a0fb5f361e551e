//! The recursive subdivision of a lune into the word-indexed family `{L_ω}`.
//!
//! Child `ℓ` of `ω` at depth `k` comes from slice `j = ⌈ℓ/2⌉` of `L_ω`
//! (out of `n_k`), bipartitioned; odd `ℓ` takes the lower half, even `ℓ` the
//! upper one. Writing `D_ω = g_ω - f_ω` and `p = φ_{a,b}` for the support
//! `(a, b)` of `L_ω`,
//!
//! ```text
//! f_{ω∗(2j-1)} = f_ω + (j-1)/n D_ω        D_{ω∗(2j-1)} = (1-p) D_ω / n
//! f_{ω∗(2j)}   = f_ω + (j-p)/n D_ω        D_{ω∗(2j)}   = p D_ω / n
//! ```
//!
//! so `D_ω` and the support depend only on the parity pattern of the word.
//! The family therefore keeps one representative per pattern class and builds
//! any other node on demand; the number of nodes grows like `∏ m_k`, far past
//! anything that could be stored.

mod word;

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use word::{concat, successor, Word};

use crate::error::{Error, Result};
use crate::lune::{bipartition, slice, slice_one, Lune};
use crate::smoothfn::{
    taylor,
    ck_norm_on, phi_rescaled, phi_series, BumpPhi, CkNormEstimate, NormSettings, SmoothFn,
};

/// `ε_n = scale · ratio^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub scale: f64,
    pub ratio: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule { scale: 1.0, ratio: 0.5 }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) || !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Parameter(format!(
                "epsilon schedule needs scale > 0 and 0 < ratio < 1, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn eps(&self, n: usize) -> f64 {
        self.scale * self.ratio.powi(n as i32)
    }

    /// `Σ_{j ≥ n} ε_j` in closed form.
    pub fn tail(&self, n: usize) -> f64 {
        self.eps(n) / (1.0 - self.ratio)
    }
}

/// How `n_ω` was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NChoice {
    pub n: u64,
    pub lune_norm: f64,
    pub phi_norm: f64,
    pub threshold: f64,
}

/// Smallest `n` with `‖L_ω‖_k / n < ε_k / (2^k ‖φ_{a,b}‖_k)`, the lune norm
/// safety-factored and the `φ_{a,b}` norm raw, both sampled on the support.
pub fn choose_n_omega(
    l: &Lune,
    k: usize,
    eps: &EpsilonSchedule,
    phi: &BumpPhi,
    settings: &NormSettings,
) -> Result<u64> {
    Ok(choose_n_detail(l, k, eps, phi, settings)?.n)
}

pub fn choose_n_detail(
    l: &Lune,
    k: usize,
    eps: &EpsilonSchedule,
    phi: &BumpPhi,
    settings: &NormSettings,
) -> Result<NChoice> {
    let (a, b) = l.simple_support()?;
    let lhs = ck_norm_on(l.gap(), a, b, k, settings.grid, settings.safety_factor)?.value;
    let pab = phi_rescaled(phi, a, b)?;
    let phi_norm = ck_norm_on(&pab, a, b, k, settings.grid, 1.0)?.raw;
    let threshold = eps.eps(k) / (2f64.powi(k as i32) * phi_norm);
    let n = smallest_n(lhs, threshold)?;
    Ok(NChoice { n, lune_norm: lhs, phi_norm, threshold })
}

fn smallest_n(lhs: f64, threshold: f64) -> Result<u64> {
    if lhs == 0.0 {
        return Ok(1);
    }
    let guess = (lhs / threshold).floor() + 1.0;
    if !(guess.is_finite() && guess < 9.0e15) {
        return Err(Error::Parameter(format!(
            "slice count {guess:e} is out of range (norm {lhs:e}, threshold {threshold:e})"
        )));
    }
    let mut n = (guess as u64).max(1);
    while lhs / (n as f64) >= threshold {
        n += 1;
    }
    while n > 1 && lhs / ((n - 1) as f64) < threshold {
        n -= 1;
    }
    Ok(n)
}

/// One parity-pattern class of words of a given length.
#[derive(Clone, Debug, Serialize)]
pub struct ClassInfo {
    pub depth: usize,
    pub pattern: Vec<bool>,
    pub support: (f64, f64),
    /// `‖L_ω‖_{|ω|}`, the quantity bounded by `ε_{|ω|}`.
    pub norm: CkNormEstimate,
    /// Present for classes that were subdivided further.
    pub choice: Option<NChoice>,
}

/// The lazily indexed family `{L_ω}` up to a fixed depth.
#[derive(Clone, Debug)]
pub struct LuneFamily {
    root: Lune,
    phi: BumpPhi,
    eps: EpsilonSchedule,
    settings: NormSettings,
    m: Vec<u64>,
    classes: Vec<Vec<ClassInfo>>,
    reps: Vec<Vec<Lune>>,
}

fn pattern_index(pattern: &[bool]) -> usize {
    pattern.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
}

fn pattern_of_index(idx: usize, len: usize) -> Vec<bool> {
    (0..len).map(|i| idx >> i & 1 == 1).collect()
}

/// Runs the recursion on a lune in normal form (domain `[0, 1]`, declared
/// support `(0, 1)`).
pub fn build_family(
    root: &Lune,
    eps: &EpsilonSchedule,
    depth: usize,
    phi: &BumpPhi,
    settings: &NormSettings,
) -> Result<LuneFamily> {
    eps.validate()?;
    settings.validate()?;
    if depth < 1 {
        return Err(Error::Depth { requested: depth, available: 1 });
    }
    if depth >= 64 {
        return Err(Error::Parameter(format!("depth {depth} is beyond the supported range")));
    }
    if root.domain() != (0.0, 1.0) || root.declared_support() != Some((0.0, 1.0)) {
        return Err(Error::Support(
            "the root lune must have domain [0, 1] and support (0, 1); use Lune::normalized".into(),
        ));
    }
    let norm_at = |l: &Lune, k: usize| -> Result<CkNormEstimate> {
        let (a, b) = l.simple_support()?;
        Ok(ck_norm_on(l.gap(), a, b, k, settings.grid, settings.safety_factor)?)
    };
    let mut m = vec![1u64];
    let mut classes = vec![vec![ClassInfo {
        depth: 1,
        pattern: vec![],
        support: (0.0, 1.0),
        norm: norm_at(root, 1)?,
        choice: None,
    }]];
    let mut reps = vec![vec![root.clone()]];
    for k in 2..=depth {
        let parents = &reps[k - 2];
        let choices: Vec<NChoice> = parents
            .par_iter()
            .map(|l| choose_n_detail(l, k, eps, phi, settings))
            .collect::<Result<_>>()?;
        let nk = choices.iter().map(|c| c.n).max().expect("at least one class");
        for (c, choice) in classes[k - 2].iter_mut().zip(&choices) {
            c.choice = Some(*choice);
        }
        m.push(2 * nk);
        let count = 1usize << (k - 1);
        let built: Vec<(ClassInfo, Lune)> = (0..count)
            .into_par_iter()
            .map(|idx| {
                let pattern = pattern_of_index(idx, k - 1);
                let parent = &parents[pattern_index(&pattern[..k - 2])];
                let (lower, upper) = bipartition(&slice_one(parent, nk, 1)?, phi)?;
                let child = if pattern[k - 2] { upper } else { lower };
                let info = ClassInfo {
                    depth: k,
                    support: child.simple_support()?,
                    norm: norm_at(&child, k)?,
                    pattern,
                    choice: None,
                };
                Ok((info, child))
            })
            .collect::<Result<_>>()?;
        let (info, lunes): (Vec<_>, Vec<_>) = built.into_iter().unzip();
        classes.push(info);
        reps.push(lunes);
    }
    Ok(LuneFamily { root: root.clone(), phi: phi.clone(), eps: *eps, settings: *settings, m, classes, reps })
}

/// Floor and gap series of one node at a point, with the node's support.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSeries {
    pub floor: Vec<f64>,
    pub gap: Vec<f64>,
    pub support: (f64, f64),
}

/// A descent through the family at a fixed `x`, one letter at a time.
#[derive(Clone, Debug)]
pub struct Walk {
    x: f64,
    floor: Vec<f64>,
    gap: Vec<f64>,
    a: f64,
    b: f64,
}

impl Walk {
    /// `φ_{a,b}` of the current node at `x`, as a series.
    fn phi_series(&self) -> Vec<f64> {
        let w1 = self.floor.len();
        let s = 1.0 / (self.b - self.a);
        let mut u = vec![0.0; w1];
        u[0] = self.x * s + -self.a * s;
        if w1 > 1 {
            u[1] = s;
        }
        let mut p = vec![0.0; w1];
        phi_series(&u, &mut p);
        p
    }

    /// `φ_{a,b}(x)` for the current node.
    pub fn phi_value(&self) -> f64 {
        let s = 1.0 / (self.b - self.a);
        let mut p = [0.0];
        phi_series(&[self.x * s + -self.a * s], &mut p);
        p[0]
    }

    /// Moves to child `letter` of the current node, with `n` slices.
    pub fn step(&mut self, n: u64, letter: u64) {
        let p = self.phi_series();
        let j = letter.div_ceil(2);
        let inv = 1.0 / n as f64;
        let piece: Vec<f64> = self.gap.iter().map(|d| inv * d).collect();
        if j > 1 {
            let c = (j - 1) as f64 / n as f64;
            for (f, d) in self.floor.iter_mut().zip(&self.gap) {
                *f += c * d;
            }
        }
        let mut tmp: Vec<f64> = p.iter().map(|v| -v).collect();
        tmp[0] += 1.0;
        let mut lower = vec![0.0; p.len()];
        taylor::mul(&tmp, &piece, &mut lower);
        if letter % 2 == 1 {
            self.gap = lower;
            self.b = (self.a + 2.0 * self.b) / 3.0;
        } else {
            for (f, d) in self.floor.iter_mut().zip(&lower) {
                *f += d;
            }
            let mut upper = vec![0.0; p.len()];
            taylor::mul(&p, &piece, &mut upper);
            self.gap = upper;
            self.a = (2.0 * self.a + self.b) / 3.0;
        }
    }

    pub fn floor(&self) -> &[f64] {
        &self.floor
    }

    pub fn gap(&self) -> &[f64] {
        &self.gap
    }

    pub fn support(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn into_series(self) -> NodeSeries {
        NodeSeries { floor: self.floor, gap: self.gap, support: (self.a, self.b) }
    }
}

impl LuneFamily {
    pub fn depth(&self) -> usize {
        self.m.len()
    }

    /// `m_1 = 1, m_2, ..., m_N`.
    pub fn m(&self) -> &[u64] {
        &self.m
    }

    /// `n_2, ..., n_N`.
    pub fn n_seq(&self) -> Vec<u64> {
        self.m[1..].iter().map(|m| m / 2).collect()
    }

    pub fn eps(&self) -> &EpsilonSchedule {
        &self.eps
    }

    pub fn settings(&self) -> &NormSettings {
        &self.settings
    }

    pub fn phi(&self) -> &BumpPhi {
        &self.phi
    }

    pub fn root(&self) -> &Lune {
        &self.root
    }

    /// Pattern classes of words of length `k`.
    pub fn classes(&self, k: usize) -> &[ClassInfo] {
        &self.classes[k - 1]
    }

    pub fn class_of(&self, w: &Word) -> &ClassInfo {
        &self.classes[w.len() - 1][pattern_index(&w.pattern())]
    }

    /// A lune realizing the class of `w`: same gap function and support.
    pub fn class_representative(&self, w: &Word) -> &Lune {
        &self.reps[w.len() - 1][pattern_index(&w.pattern())]
    }

    /// `∏_{j ≤ k} m_j`, the number of words of length `k`.
    pub fn node_count(&self, k: usize) -> BigUint {
        self.m[..k].iter().fold(BigUint::from(1u32), |acc, &m| acc * m)
    }

    pub fn total_nodes(&self) -> BigUint {
        (1..=self.depth()).map(|k| self.node_count(k)).sum()
    }

    pub fn validate(&self, w: &Word) -> Result<()> {
        w.validate(&self.m)?;
        if w.letters()[0] != 1 {
            return Err(Error::InvalidWord { word: w.to_string(), reason: "first letter must be 1".into() });
        }
        Ok(())
    }

    /// Support of `L_w`, from the parity pattern alone.
    pub fn support_of_word(&self, w: &Word) -> (f64, f64) {
        let (mut a, mut b) = (0.0, 1.0);
        for upper in w.pattern() {
            if upper {
                a = (2.0 * a + b) / 3.0;
            } else {
                b = (a + 2.0 * b) / 3.0;
            }
        }
        (a, b)
    }

    /// `L_w` as expression DAGs, built along the word.
    pub fn lune(&self, w: &Word) -> Result<Lune> {
        self.validate(w)?;
        let mut l = self.root.clone();
        for (k, &letter) in w.letters().iter().enumerate().skip(1) {
            let n = self.m[k] / 2;
            let j = letter.div_ceil(2);
            let (lower, upper) = bipartition(&slice_one(&l, n, j)?, &self.phi)?;
            l = if letter % 2 == 0 { upper } else { lower };
        }
        Ok(l)
    }

    /// All children of `w`, built from one full slicing so that consecutive
    /// siblings share their common boundary function.
    pub fn children(&self, w: &Word) -> Result<Vec<Lune>> {
        self.validate(w)?;
        if w.len() >= self.depth() {
            return Err(Error::Depth { requested: w.len() + 1, available: self.depth() });
        }
        let parent = self.lune(w)?;
        self.children_of(&parent, w.len() + 1)
    }

    fn children_of(&self, parent: &Lune, k: usize) -> Result<Vec<Lune>> {
        let n = self.m[k - 1] / 2;
        let mut out = Vec::with_capacity(2 * n as usize);
        for s in slice(parent, n)? {
            let (lower, upper) = bipartition(&s, &self.phi)?;
            out.push(lower);
            out.push(upper);
        }
        Ok(out)
    }

    /// Every node up to the family depth, in breadth-first order.
    pub fn materialize(&self, budget: u64) -> Result<Vec<(Word, Lune)>> {
        let total = self.total_nodes();
        if total > BigUint::from(budget) {
            return Err(Error::Budget { needed: total.to_string(), budget });
        }
        let mut out = vec![(Word::root(), self.root.clone())];
        let mut level = 0;
        for k in 2..=self.depth() {
            let start = level;
            level = out.len();
            for i in start..level {
                let (w, l) = out[i].clone();
                for (c, child) in self.children_of(&l, k)?.into_iter().enumerate() {
                    out.push((w.child(c as u64 + 1), child));
                }
            }
        }
        Ok(out)
    }

    /// All words of length `k`, in lexicographic order.
    pub fn words(&self, k: usize) -> impl Iterator<Item = Word> + '_ {
        let m = &self.m[..k];
        let mut cur: Option<Vec<u64>> = Some(vec![1; k]);
        std::iter::from_fn(move || {
            let out = cur.clone()?;
            let mut next = out.clone();
            let mut i = k;
            loop {
                if i == 0 {
                    cur = None;
                    break;
                }
                i -= 1;
                if next[i] < m[i] {
                    next[i] += 1;
                    cur = Some(next);
                    break;
                }
                next[i] = 1;
            }
            Some(Word::new(out).expect("nonempty"))
        })
    }

    pub fn random_word<R: Rng>(&self, k: usize, rng: &mut R) -> Word {
        let letters = self.m[..k].iter().map(|&m| rng.gen_range(1..=m)).collect();
        Word::new(letters).expect("nonempty")
    }

    /// Words whose letters are all 1, all `m_j`, or the extremes of a slice,
    /// one per pattern class where possible. These attain the extreme floors.
    pub fn extremal_words(&self, k: usize) -> Vec<Word> {
        let mut out = Vec::new();
        for idx in 0..(1usize << (k - 1)) {
            let pattern = pattern_of_index(idx, k - 1);
            for high in [false, true] {
                let mut letters = vec![1u64];
                for (j, &upper) in pattern.iter().enumerate() {
                    let m = self.m[j + 1];
                    let base = if high { m - 1 } else { 1 };
                    letters.push(if upper { base + 1 } else { base });
                }
                out.push(Word::new(letters).expect("nonempty"));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Floor and gap series of `L_w` at `x`, computed directly from the
    /// recursion without building expression DAGs.
    pub fn node_series(&self, w: &Word, x: f64, order: usize) -> Result<NodeSeries> {
        self.validate(w)?;
        let mut walk = self.walk(x, order)?;
        for (k, &letter) in w.letters().iter().enumerate().skip(1) {
            walk.step(self.m[k] / 2, letter);
        }
        Ok(walk.into_series())
    }

    /// Starts a descent at the root, at the point `x`.
    pub fn walk(&self, x: f64, order: usize) -> Result<Walk> {
        let floor = self.root.floor().taylor_unchecked(x, order)?;
        let gap = self.root.gap().taylor_unchecked(x, order)?;
        Ok(Walk { x, floor, gap, a: 0.0, b: 1.0 })
    }

    pub fn floor_value(&self, w: &Word, x: f64) -> Result<f64> {
        Ok(self.node_series(w, x, 0)?.floor[0])
    }

    /// `f_ω + (c / n) D_ω`, the floor of child `ℓ` minus the parent floor,
    /// as an expression on the parent class representative.
    fn increment(&self, parent: &Lune, k: usize, letter: u64) -> Result<SmoothFn> {
        let n = (self.m[k - 1] / 2) as f64;
        let j = letter.div_ceil(2) as f64;
        let d = parent.gap();
        if letter % 2 == 1 {
            return Ok(d.scale((j - 1.0) / n));
        }
        let (a, b) = parent.simple_support()?;
        let p = phi_rescaled(&self.phi, a, b)?;
        let pd = &p * d;
        Ok(SmoothFn::linear_combination(&[(j / n, d), (-1.0 / n, &pd)], 0.0))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormInvariantRow {
    pub depth: usize,
    pub pattern: Vec<bool>,
    pub norm: f64,
    pub eps: f64,
    /// Depth one is the given lune; the recursion makes no claim about it.
    pub vacuous: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormInvariantReport {
    pub rows: Vec<NormInvariantRow>,
    pub all_pass: bool,
}

/// `‖L_ω‖_{|ω|} ≤ ε_{|ω|}` for every class (hence every node) of depth
/// `2..=up_to`, against `eps` if given or the family's own schedule.
pub fn norm_invariant_check(fam: &LuneFamily, up_to: usize, eps: Option<&EpsilonSchedule>) -> NormInvariantReport {
    let eps = eps.unwrap_or(&fam.eps);
    let mut rows = Vec::new();
    for k in 1..=up_to.min(fam.depth()) {
        for c in fam.classes(k) {
            let e = eps.eps(k);
            let vacuous = k == 1;
            rows.push(NormInvariantRow {
                depth: k,
                pattern: c.pattern.clone(),
                norm: c.norm.value,
                eps: e,
                vacuous,
                pass: vacuous || c.norm.value <= e,
            });
        }
    }
    let all_pass = rows.iter().all(|r| r.pass);
    NormInvariantReport { rows, all_pass }
}

#[derive(Clone, Debug, Serialize)]
pub struct IncrementRow {
    pub depth: usize,
    pub pattern: Vec<bool>,
    pub letter: u64,
    pub lhs: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct IncrementReport {
    pub rows: Vec<IncrementRow>,
    pub min_slack: f64,
    pub all_pass: bool,
}

/// `‖f_{ω∗(ℓ)} - f_ω‖_n < ε_{n+1} + ε_n` for `|ω| = n < N`.
///
/// The increment is `(c/n) D_ω` with `c` affine in the slice index, so its
/// norm is convex in the index and the letters `1, 2, m-1, m` of each class
/// cover every child. At `n = 1` the root norm `‖L‖_1` replaces `ε_1`.
pub fn floor_increment_check(fam: &LuneFamily) -> Result<IncrementReport> {
    let s = fam.settings;
    let mut jobs = Vec::new();
    for n in 1..fam.depth() {
        let m = fam.m[n];
        let mut letters = vec![1, 2.min(m), m.saturating_sub(1).max(1), m];
        letters.sort();
        letters.dedup();
        for (idx, class) in fam.classes(n).iter().enumerate() {
            for &l in &letters {
                jobs.push((n, idx, class, l));
            }
        }
    }
    let rows: Vec<IncrementRow> = jobs
        .par_iter()
        .map(|&(n, idx, class, letter)| {
            let parent = &fam.reps[n - 1][idx];
            let inc = fam.increment(parent, n + 1, letter)?;
            let (a, b) = class.support;
            let lhs = ck_norm_on(&inc, a, b, n, s.grid, s.safety_factor)?.value;
            let head = if n == 1 { class.norm.value } else { fam.eps.eps(n) };
            let bound = head + fam.eps.eps(n + 1);
            Ok(IncrementRow {
                depth: n,
                pattern: class.pattern.clone(),
                letter,
                lhs,
                bound,
                slack: bound - lhs,
                pass: lhs < bound,
            })
        })
        .collect::<Result<_>>()?;
    let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(IncrementReport { rows, min_slack, all_pass })
}

/// Serializable overview of a family: sequences, class table and counts.
#[derive(Clone, Debug, Serialize)]
pub struct FamilySummary {
    pub depth: usize,
    pub m: Vec<u64>,
    pub n: Vec<u64>,
    pub eps: Vec<f64>,
    pub node_counts: Vec<String>,
    pub total_nodes: String,
    pub classes: Vec<ClassInfo>,
}

impl LuneFamily {
    pub fn summary(&self) -> FamilySummary {
        FamilySummary {
            depth: self.depth(),
            m: self.m.clone(),
            n: self.n_seq(),
            eps: (1..=self.depth()).map(|k| self.eps.eps(k)).collect(),
            node_counts: (1..=self.depth()).map(|k| self.node_count(k).to_string()).collect(),
            total_nodes: self.total_nodes().to_string(),
            classes: self.classes.iter().flatten().cloned().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lune::presets;
    use crate::smoothfn::make_phi;
    use rand::SeedableRng;

    fn family(scale: f64) -> LuneFamily {
        let s = NormSettings { grid: 513, safety_factor: 1.25 };
        let eps = EpsilonSchedule { scale, ratio: 0.5 };
        build_family(&presets::hump(), &eps, 3, &make_phi(), &s).unwrap()
    }

    #[test]
    fn eps_tails() {
        let e = EpsilonSchedule::default();
        assert_eq!(e.eps(3), 0.125);
        assert_eq!(e.tail(4), 0.125);
        assert!(EpsilonSchedule { scale: 1.0, ratio: 1.0 }.validate().is_err());
    }

    #[test]
    fn smallest_n_is_minimal_and_strict() {
        assert_eq!(smallest_n(0.0, 1.0).unwrap(), 1);
        assert_eq!(smallest_n(2.0, 1.0).unwrap(), 3);
        assert_eq!(smallest_n(1.9, 1.0).unwrap(), 2);
    }

    #[test]
    fn depth_one_family_is_the_root() {
        let s = NormSettings { grid: 257, safety_factor: 1.25 };
        let fam = build_family(&presets::hump(), &EpsilonSchedule::default(), 1, &make_phi(), &s).unwrap();
        assert_eq!(fam.m(), &[1]);
        assert_eq!(fam.total_nodes(), BigUint::from(1u32));
        let all = fam.materialize(10).unwrap();
        assert_eq!(all.len(), 1);
    }

    #[test]
    fn fast_path_matches_dag() {
        let fam = family(400.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let w = fam.random_word(3, &mut rng);
            let l = fam.lune(&w).unwrap();
            assert_eq!(fam.support_of_word(&w), l.simple_support().unwrap());
            for i in 0..=16 {
                let x = i as f64 / 16.0;
                let s = fam.node_series(&w, x, 3).unwrap();
                let f = l.floor().taylor_unchecked(x, 3).unwrap();
                let d = l.gap().taylor_unchecked(x, 3).unwrap();
                let scale = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                for k in 0..=3 {
                    assert!((s.floor[k] - f[k]).abs() <= 1e-11 * (1.0 + f[k].abs()), "{w} x={x} k={k}");
                    assert!((s.gap[k] - d[k]).abs() <= 1e-11 * scale, "{w} x={x} k={k}");
                }
            }
        }
    }

    #[test]
    fn materialized_tree_chains_boundaries() {
        let fam = family(1e9);
        let total = fam.total_nodes();
        let nodes = fam.materialize(1_000_000).unwrap();
        assert_eq!(BigUint::from(nodes.len()), total);
        assert!(fam.materialize(2).is_err());
        let kids = fam.children(&Word::root()).unwrap();
        assert_eq!(kids.len() as u64, fam.m()[1]);
        assert!(kids[0].floor().same_node(fam.root().floor()));
        assert!(kids.last().unwrap().ceiling().same_node(fam.root().ceiling()));
        for pair in kids.windows(2) {
            assert!(pair[0].ceiling().same_node(pair[1].floor()));
        }
    }

    #[test]
    fn checks_pass_on_coarse_family() {
        let fam = family(1e9);
        assert!(norm_invariant_check(&fam, 3, None).all_pass);
        let r = floor_increment_check(&fam).unwrap();
        assert!(r.all_pass, "{:?}", r.rows.iter().filter(|r| !r.pass).collect::<Vec<_>>());
        let tight = EpsilonSchedule { scale: 1e-3, ratio: 0.5 };
        assert!(!norm_invariant_check(&fam, 3, Some(&tight)).all_pass);
    }

    #[test]
    fn words_enumerate_in_order() {
        let fam = family(1e9);
        let ws: Vec<Word> = fam.words(2).collect();
        assert_eq!(ws.len() as u64, fam.m()[1]);
        assert_eq!(ws[0].letters(), &[1, 1]);
        assert_eq!(ws.last().unwrap().letters(), &[1, fam.m()[1]]);
    }
}
