//! The parameter Cantor set `K`: nested closed intervals `J_ω` and the open
//! gaps `G_ω` between siblings.
//!
//! At depth `k` every `J_ω` has length `1/Q_k` with `Q_k = ∏_{j≤k} (2m_j - 1)`
//! and starts at an integer multiple `A_ω / Q_k`. Child `ℓ` of `J_ω`
//! occupies cell `2ℓ - 2` of the `2m_k - 1` equal cells of its parent; the odd
//! cells are the gaps. All positions are kept as exact integers, which matters
//! because `1/Q_k` drops below double precision after a few levels.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::subdivision::{LuneFamily, Word};

#[derive(Clone, Debug)]
pub struct CantorIndex {
    m: Vec<u64>,
    q: Vec<BigUint>,
}

/// Where a parameter falls at a given depth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Location {
    /// `t ∈ J_word` for the depth-`N` word; `t = (A + local) / Q_N`.
    InK { word: Word, local: f64 },
    /// `t ∈ G_word = (alpha, beta)`; `t = alpha + local (beta - alpha)`.
    Gap { word: Word, alpha: f64, beta: f64, local: f64 },
}

impl Location {
    pub fn word(&self) -> &Word {
        match self {
            Location::InK { word, .. } | Location::Gap { word, .. } => word,
        }
    }

    pub fn local(&self) -> f64 {
        match self {
            Location::InK { local, .. } | Location::Gap { local, .. } => *local,
        }
    }

    /// The defining prefix `(1), ω_2, ..., ω_N` for `InK`, or the chain of
    /// words ending at the gap's word.
    pub fn defining_sequence(&self) -> Vec<Word> {
        let w = self.word();
        (1..=w.len()).map(|k| w.prefix(k)).collect()
    }
}

/// `t = mantissa / 2^shift` exactly.
fn dyadic(t: f64) -> (BigUint, u32) {
    if t == 0.0 {
        return (BigUint::zero(), 0);
    }
    let bits = t.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    if e >= 0 {
        (BigUint::from(mant) << e as u32, 0)
    } else {
        (BigUint::from(mant), (-e) as u32)
    }
}

/// `num / 2^shift` as a double, for `num < 2^shift`.
fn ratio_pow2(num: &BigUint, shift: u32) -> f64 {
    if shift > 1000 {
        let s = shift - 1000;
        (num >> s).to_f64().unwrap_or(0.0) * 2f64.powi(-1000)
    } else {
        num.to_f64().unwrap_or(0.0) * 2f64.powi(-(shift as i32))
    }
}

fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    let bits = den.bits();
    if bits > 1000 {
        let s = bits - 960;
        return ratio(&(num >> s), &(den >> s));
    }
    num.to_f64().unwrap_or(f64::INFINITY) / den.to_f64().unwrap_or(f64::INFINITY)
}

impl CantorIndex {
    pub fn new(m: &[u64]) -> Result<Self> {
        if m.first() != Some(&1) {
            return Err(Error::Parameter("the m-sequence must start with m_1 = 1".into()));
        }
        if m.iter().any(|&x| x == 0) {
            return Err(Error::Parameter("every m_k must be at least 1".into()));
        }
        let mut q = Vec::with_capacity(m.len());
        let mut acc = BigUint::one();
        for &mk in m {
            acc *= 2 * mk - 1;
            q.push(acc.clone());
        }
        Ok(CantorIndex { m: m.to_vec(), q })
    }

    pub fn from_family(fam: &LuneFamily) -> Self {
        Self::new(fam.m()).expect("family m-sequences are valid")
    }

    pub fn depth(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[u64] {
        &self.m
    }

    /// `Q_k`; every depth-`k` interval and gap has length `1/Q_k`.
    pub fn q(&self, k: usize) -> &BigUint {
        &self.q[k - 1]
    }

    fn check(&self, w: &Word) -> Result<()> {
        w.validate(&self.m)?;
        if w.letters()[0] != 1 {
            return Err(Error::InvalidWord { word: w.to_string(), reason: "first letter must be 1".into() });
        }
        Ok(())
    }

    /// `A_ω` with `J_ω = [A_ω, A_ω + 1] / Q_{|ω|}`.
    pub fn offset(&self, w: &Word) -> Result<BigUint> {
        self.check(w)?;
        let mut a = BigUint::zero();
        for (k, &l) in w.letters().iter().enumerate().skip(1) {
            a = a * (2 * self.m[k] - 1) + 2 * (l - 1);
        }
        Ok(a)
    }

    pub fn interval_of(&self, w: &Word) -> Result<(f64, f64)> {
        let a = self.offset(w)?;
        let q = self.q(w.len());
        Ok((ratio(&a, q), ratio(&(a + 1u32), q)))
    }

    /// `G_ω = (α, β)`, the gap right of `J_ω`, for a word with a successor.
    pub fn gap_endpoints(&self, w: &Word) -> Result<(f64, f64)> {
        self.check(w)?;
        if w.last() == self.m[w.len() - 1] {
            return Err(Error::NoSuccessor(w.to_string()));
        }
        let a = self.offset(w)? + 1u32;
        let q = self.q(w.len());
        Ok((ratio(&a, q), ratio(&(&a + 1u32), q)))
    }

    /// Locates `t ∈ [0, 1]` to the full index depth.
    pub fn locate(&self, t: f64) -> Result<Location> {
        self.locate_at(t, self.depth())
    }

    /// Locates `t` down to `depth`: either the depth-`depth` interval holding
    /// it or the first gap it falls in. Shared endpoints go to the closed `J`.
    pub fn locate_at(&self, t: f64, depth: usize) -> Result<Location> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Parameter(format!("t = {t} is outside [0, 1]")));
        }
        if depth < 1 || depth > self.depth() {
            return Err(Error::Depth { requested: depth, available: self.depth() });
        }
        let (mant, shift) = dyadic(t);
        let mut letters = vec![1u64];
        let mut a = BigUint::zero();
        let mut local = t;
        for k in 2..=depth {
            let cells = 2 * self.m[k - 1] - 1;
            let scaled = &mant * self.q(k);
            let (r, rem) = scaled.div_rem(&(BigUint::one() << shift));
            let base = &a * cells;
            let mut c = (&r - &base).to_u64().expect("cell index fits");
            let exact = rem.is_zero();
            let mut at_right_end = false;
            if c == cells {
                c = cells - 1;
                at_right_end = true;
            } else if c % 2 == 1 && exact {
                c -= 1;
                at_right_end = true;
            }
            if c % 2 == 1 {
                letters.push(c.div_ceil(2));
                let word = Word::new(letters)?;
                let g = base + c;
                let q = self.q(k);
                return Ok(Location::Gap {
                    word,
                    alpha: ratio(&g, q),
                    beta: ratio(&(&g + 1u32), q),
                    local: ratio_pow2(&rem, shift),
                });
            }
            letters.push(c / 2 + 1);
            a = base + c;
            local = if at_right_end { 1.0 } else { ratio_pow2(&rem, shift) };
        }
        Ok(Location::InK { word: Word::new(letters)?, local })
    }

    /// Locates the point at relative position `v ∈ [0, 1]` inside `J_w`,
    /// down to `depth`. Unlike [`CantorIndex::locate_at`] this resolves
    /// intervals far shorter than the spacing of doubles near `t`; gap
    /// endpoints in the result are rounded.
    pub fn locate_within(&self, w: &Word, v: f64, depth: usize) -> Result<Location> {
        self.check(w)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parameter(format!("v = {v} is outside [0, 1]")));
        }
        if depth < w.len() || depth > self.depth() {
            return Err(Error::Depth { requested: depth, available: self.depth() });
        }
        let mut word = w.clone();
        let mut local = v;
        for k in w.len() + 1..=depth {
            let cells = 2 * self.m[k - 1] - 1;
            let s = local * cells as f64;
            let c = (s.floor() as u64).min(cells - 1);
            let r = (s - c as f64).clamp(0.0, 1.0);
            if c % 2 == 1 {
                let word = word.child(c.div_ceil(2));
                let (alpha, beta) = self.gap_endpoints(&word)?;
                return Ok(Location::Gap { word, alpha, beta, local: r });
            }
            word = word.child(c / 2 + 1);
            local = r;
        }
        Ok(Location::InK { word, local })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u64]) -> Word {
        Word::new(v.to_vec()).unwrap()
    }

    #[test]
    fn small_layouts() {
        let idx = CantorIndex::new(&[1, 2]).unwrap();
        assert_eq!(idx.interval_of(&w(&[1])).unwrap(), (0.0, 1.0));
        assert_eq!(idx.interval_of(&w(&[1, 1])).unwrap(), (0.0, 1.0 / 3.0));
        assert_eq!(idx.interval_of(&w(&[1, 2])).unwrap(), (2.0 / 3.0, 1.0));
        let idx = CantorIndex::new(&[1, 4]).unwrap();
        assert_eq!(idx.gap_endpoints(&w(&[1, 1])).unwrap(), (1.0 / 7.0, 2.0 / 7.0));
        assert!(idx.gap_endpoints(&w(&[1, 4])).is_err());
        match idx.locate(0.2).unwrap() {
            Location::Gap { word, .. } => assert_eq!(word, w(&[1, 1])),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ends_nest() {
        let idx = CantorIndex::new(&[1, 3, 5, 2]).unwrap();
        assert_eq!(idx.locate(0.0).unwrap(), Location::InK { word: w(&[1, 1, 1, 1]), local: 0.0 });
        assert_eq!(idx.locate(1.0).unwrap(), Location::InK { word: w(&[1, 3, 5, 2]), local: 1.0 });
    }

    #[test]
    fn interior_points_of_odd_cells_are_gaps() {
        let idx = CantorIndex::new(&[1, 2, 2]).unwrap();
        let loc = idx.locate(1.0 / 9.0 + 1e-12).unwrap();
        assert_eq!(loc.word(), &w(&[1, 1, 1]));
        assert!(matches!(loc, Location::Gap { .. }));
        let loc = idx.locate(0.5).unwrap();
        assert_eq!(loc.word(), &w(&[1, 1]));
        assert!((loc.local() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn deep_intervals_stay_exact() {
        let idx = CantorIndex::new(&[1, 114270, 83638, 1060954]).unwrap();
        let t = 0.123456789;
        let loc = idx.locate(t).unwrap();
        let k = loc.word().len();
        let (lo, hi) = match &loc {
            Location::InK { word, .. } => idx.interval_of(word).unwrap(),
            Location::Gap { alpha, beta, .. } => (*alpha, *beta),
        };
        assert!(lo <= t && t <= hi, "{loc:?} depth {k}");
    }
}
