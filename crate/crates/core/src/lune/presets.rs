//! Ready-made lunes on `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Lune;
use crate::error::{Error, Result};
use crate::smoothfn::SmoothFn;

/// `exp(4 - (b-a)² / ((x-a)(b-x)))` on `(a, b)` and zero elsewhere. Peaks at
/// one in the middle and is flat at both ends of `(a, b)`.
pub fn hump_fn(a: f64, b: f64) -> SmoothFn {
    let w = 1.0 / ((b - a) * (b - a));
    let left = SmoothFn::linear(1.0, -a);
    let right = SmoothFn::linear(-1.0, b);
    (&left * &right).scale(w).flat().scale(4f64.exp())
}

pub fn polynomial(coeffs: &[f64]) -> SmoothFn {
    let x = SmoothFn::identity();
    let mut acc = SmoothFn::constant(*coeffs.last().unwrap_or(&0.0));
    for &c in coeffs.iter().rev().skip(1) {
        acc = (&acc * &x).shift(c);
    }
    acc
}

/// `f ≡ 0` under the unit hump: `‖L‖_0 = 1`, support `(0, 1)`.
pub fn hump() -> Lune {
    hump_on(0.0, 1.0)
}

/// `f ≡ 0` under a unit hump supported on `(a, b) ⊂ [0, 1]`.
pub fn hump_on(a: f64, b: f64) -> Lune {
    Lune::from_gap(SmoothFn::constant(0.0), hump_fn(a, b), 0.0, 1.0)
        .and_then(|l| l.with_support(a, b))
        .expect("the hump is a simple lune")
}

/// A sloped floor under an asymmetric hump.
pub fn tilted() -> Lune {
    let f = polynomial(&[0.0, 0.4, -0.2]);
    let wobble = SmoothFn::linear(std::f64::consts::PI, 0.0).sin().scale(0.3).shift(1.0);
    let gap = (&hump_fn(0.0, 1.0) * &wobble).scale(0.75);
    Lune::from_gap(f, gap, 0.0, 1.0)
        .and_then(|l| l.with_support(0.0, 1.0))
        .expect("the tilted preset is a simple lune")
}

/// Floor `Σ floor[i] x^i` and gap `Σ gap[i] H^(i+1)` with `H` the unit hump.
pub fn custom(floor: &[f64], gap: &[f64]) -> Result<Lune> {
    if gap.is_empty() || gap.iter().all(|&c| c == 0.0) {
        return Err(Error::NotALune("the gap polynomial is identically zero".into()));
    }
    let h = hump_fn(0.0, 1.0);
    let mut terms = Vec::new();
    let mut power = h.clone();
    for (i, &c) in gap.iter().enumerate() {
        if i > 0 {
            power = &power * &h;
        }
        terms.push((c, power.clone()));
    }
    let refs: Vec<(f64, &SmoothFn)> = terms.iter().map(|(c, p)| (*c, p)).collect();
    let gap = SmoothFn::linear_combination(&refs, 0.0);
    Lune::from_gap(polynomial(floor), gap, 0.0, 1.0)?.with_support(0.0, 1.0)
}

/// A seeded random simple lune: cubic floor, support `(a, b)` with
/// `a ∈ [0, 0.2]`, `b ∈ [0.8, 1]`, and a positive combination of humps and
/// an oscillating factor as the gap.
pub fn random(seed: u64) -> Lune {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = rng.gen_range(0.0..0.2);
    let b = rng.gen_range(0.8..1.0);
    let (c1, c2, c3) = (rng.gen_range(0.2..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
    let (w, theta) = (rng.gen_range(1.0..8.0), rng.gen_range(0.0..std::f64::consts::TAU));
    let h = hump_fn(a, b);
    let osc = SmoothFn::linear(w, theta).sin().scale(0.5).shift(0.5);
    let inner = SmoothFn::linear_combination(&[(c2, &h), (c3, &osc)], c1);
    let gap = &h * &inner;
    Lune::from_gap(polynomial(&floor), gap, 0.0, 1.0)
        .and_then(|l| l.with_support(a, b))
        .expect("random lunes are simple by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hump_peaks_at_one() {
        let l = hump();
        assert!((l.gap().at(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(l.gap().at(0.0), 0.0);
        assert_eq!(l.gap().at(1.0), 0.0);
    }

    #[test]
    fn polynomial_horner() {
        let p = polynomial(&[1.0, -2.0, 3.0]);
        assert!((p.at(0.5) - (1.0 - 1.0 + 0.75)).abs() < 1e-15);
    }

    #[test]
    fn custom_rejects_negative_gap() {
        assert!(custom(&[0.0], &[1.0, -3.0]).is_err());
        assert!(custom(&[0.1, 0.2], &[0.5, 0.5]).is_ok());
        assert!(custom(&[0.0], &[]).is_err());
    }

    #[test]
    fn random_lunes_are_reproducible() {
        let a = random(7);
        let b = random(7);
        assert_eq!(a.gap().at(0.4), b.gap().at(0.4));
        assert_eq!(a.floor().at(0.4), b.floor().at(0.4));
        tilted();
    }
}
