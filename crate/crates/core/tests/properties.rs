use std::f64::consts::TAU;

use proptest::prelude::*;

use peano_core::assembly::{odd_above, polar_curvature};
use peano_core::cantor::{CantorIndex, Location};
use peano_core::lune::{bipartition, presets, slice};
use peano_core::peano::{hausdorff, Raster};
use peano_core::smoothfn::{make_phi, transition_map, SmoothFn};
use peano_core::subdivision::{successor, EpsilonSchedule, Word};

fn m_sequence() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..6, 1..4).prop_map(|mut tail| {
        tail.insert(0, 1);
        tail
    })
}

fn words_of(m: &[u64], k: usize) -> Vec<Word> {
    let mut out = vec![Word::root()];
    for &mj in &m[1..k] {
        out = out.iter().flat_map(|w| (1..=mj).map(move |l| w.child(l))).collect();
    }
    out
}

/// `J_ω` by nesting: child `ℓ` takes cell `2ℓ - 2` of `2m - 1`.
fn nested_interval(m: &[u64], w: &Word) -> (f64, f64) {
    let (mut lo, mut width) = (0.0, 1.0);
    for (k, &l) in w.letters().iter().enumerate().skip(1) {
        width /= (2 * m[k] - 1) as f64;
        lo += 2.0 * (l - 1) as f64 * width;
    }
    (lo, lo + width)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cantor_intervals_nest_and_tile(m in m_sequence()) {
        let idx = CantorIndex::new(&m).unwrap();
        for k in 1..=m.len() {
            let words = words_of(&m, k);
            let mut prev_hi = -1.0;
            let mut total = 0.0;
            for w in &words {
                let (lo, hi) = idx.interval_of(w).unwrap();
                let (a, b) = nested_interval(&m, w);
                prop_assert!((lo - a).abs() < 1e-12 && (hi - b).abs() < 1e-12);
                prop_assert!(lo > prev_hi);
                prev_hi = hi;
                total += hi - lo;
                if let Some(p) = w.parent() {
                    let (plo, phi) = idx.interval_of(&p).unwrap();
                    prop_assert!(plo <= lo && hi <= phi);
                }
            }
            let want: f64 = m[..k].iter().map(|&mj| mj as f64 / (2 * mj - 1) as f64).product();
            prop_assert!((total - want).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_agrees_with_intervals(m in m_sequence(), t in 0.0f64..=1.0) {
        let idx = CantorIndex::new(&m).unwrap();
        match idx.locate(t).unwrap() {
            Location::InK { word, local } => {
                prop_assert_eq!(word.len(), m.len());
                let (lo, hi) = idx.interval_of(&word).unwrap();
                prop_assert!(lo <= t && t <= hi);
                prop_assert!((0.0..=1.0).contains(&local));
            }
            Location::Gap { word, alpha, beta, local } => {
                prop_assert_eq!(idx.gap_endpoints(&word).unwrap(), (alpha, beta));
                prop_assert!(alpha <= t && t <= beta);
                prop_assert!((0.0..=1.0).contains(&local));
                let (_, hi) = idx.interval_of(&word).unwrap();
                let (lo, _) = idx.interval_of(&successor(&word, &m).unwrap()).unwrap();
                prop_assert!((hi - alpha).abs() < 1e-15 && (lo - beta).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn slices_partition_the_lune(seed in 0u64..1000, n in 1u64..7, x in 0.0f64..1.0) {
        let l = presets::random(seed);
        let parts = slice(&l, n).unwrap();
        prop_assert_eq!(parts.len() as u64, n);
        let f = l.floor().value(x).unwrap();
        let g = l.ceiling().value(x).unwrap();
        let tol = 1e-12 * (1.0 + f.abs() + g.abs());
        prop_assert!((parts[0].floor().value(x).unwrap() - f).abs() <= tol);
        prop_assert!((parts[n as usize - 1].ceiling().value(x).unwrap() - g).abs() <= tol);
        for (j, p) in parts.iter().enumerate() {
            let gap = p.ceiling().value(x).unwrap() - p.floor().value(x).unwrap();
            prop_assert!((gap - (g - f) / n as f64).abs() <= tol);
            prop_assert!((p.gap().value(x).unwrap() - (g - f) / n as f64).abs() <= tol);
            if j > 0 {
                prop_assert_eq!(p.floor().value(x).unwrap(), parts[j - 1].ceiling().value(x).unwrap());
            }
        }
    }

    #[test]
    fn bipartition_splits_the_gap(seed in 0u64..1000, x in 0.0f64..1.0) {
        let l = presets::random(seed);
        let (a, b) = l.simple_support().unwrap();
        let (lower, upper) = bipartition(&l, &make_phi()).unwrap();
        let gap = l.gap().value(x).unwrap();
        let (lg, ug) = (lower.gap().value(x).unwrap(), upper.gap().value(x).unwrap());
        prop_assert!(lg >= 0.0 && ug >= 0.0);
        prop_assert!((lg + ug - gap).abs() <= 1e-12 * (1.0 + gap));
        prop_assert_eq!(lower.floor().value(x).unwrap(), l.floor().value(x).unwrap());
        if x >= (a + 2.0 * b) / 3.0 {
            prop_assert_eq!(lg, 0.0);
        }
        if x <= (2.0 * a + b) / 3.0 {
            prop_assert_eq!(ug, 0.0);
        }
    }

    #[test]
    fn jets_follow_the_product_rule(x in -2.0f64..2.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let u = SmoothFn::linear(a, 0.3).sin();
        let v = SmoothFn::linear(b, -0.1).exp();
        let (ju, jv) = (u.jet(x, 4).unwrap(), v.jet(x, 4).unwrap());
        let jp = (&u * &v).jet(x, 4).unwrap();
        let binom = [[1.0, 0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0, 0.0], [1.0, 3.0, 3.0, 1.0, 0.0], [1.0, 4.0, 6.0, 4.0, 1.0]];
        for n in 0..=4 {
            let leibniz: f64 = (0..=n).map(|i| binom[n][i] * ju.derivative(i) * jv.derivative(n - i)).sum();
            prop_assert!((jp.derivative(n) - leibniz).abs() <= 1e-10 * (1.0 + leibniz.abs()));
        }
        let js = (&u + &v).jet(x, 4).unwrap();
        for n in 0..=4 {
            prop_assert!((js.derivative(n) - ju.derivative(n) - jv.derivative(n)).abs() <= 1e-12 * (1.0 + js.derivative(n).abs()));
        }
    }

    #[test]
    fn periodized_jets_repeat(x in 0.0f64..TAU, turns in -3i32..3) {
        let f = SmoothFn::identity().sin().then(&SmoothFn::identity().exp());
        let p = f.periodize(0.0, TAU);
        let (a, b) = (p.jet(x, 3).unwrap(), p.jet(x + turns as f64 * TAU, 3).unwrap());
        for i in 0..=3 {
            prop_assert!((a.derivative(i) - b.derivative(i)).abs() <= 1e-9 * (1.0 + a.derivative(i).abs()));
        }
    }

    #[test]
    fn transition_maps_are_monotone_and_flat(alpha in -2.0f64..2.0, len in 0.1f64..3.0, a in -1.0f64..1.0, rise in 0.1f64..2.0) {
        let beta = alpha + len;
        let b = a + rise;
        let tm = transition_map(alpha, beta, a, b).unwrap();
        prop_assert_eq!(tm.value(alpha).unwrap(), a);
        prop_assert!((tm.value(beta).unwrap() - b).abs() <= 1e-15 * (1.0 + b.abs()));
        let mut prev = a;
        for i in 1..=32 {
            let v = tm.value(alpha + len * i as f64 / 32.0).unwrap();
            prop_assert!(v >= prev);
            prev = v;
        }
        for end in [alpha, beta] {
            let j = tm.jet(end, 4).unwrap();
            for i in 1..=4 {
                prop_assert!(j.derivative(i).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_above_is_the_least_odd_bound(x in 0.0f64..1e6) {
        let n = odd_above(x);
        prop_assert!(n % 2 == 1 && n as f64 > x);
        prop_assert!(n < 2 || (n - 2) as f64 <= x);
    }

    #[test]
    fn schedule_tail_is_the_series(scale in 0.01f64..10.0, ratio in 0.05f64..0.95, n in 1usize..10) {
        let e = EpsilonSchedule { scale, ratio };
        let sum: f64 = (n..n + 2000).map(|j| e.eps(j)).sum();
        prop_assert!((e.tail(n) - sum).abs() <= 1e-10 * sum);
    }

    #[test]
    fn circles_have_constant_curvature(r in 0.1f64..10.0) {
        prop_assert!((polar_curvature(r, 0.0, 0.0) - 1.0 / r).abs() <= 1e-12 / r);
    }

    #[test]
    fn raster_hausdorff_matches_brute_force(
        a in prop::collection::vec(any::<bool>(), 144),
        b in prop::collection::vec(any::<bool>(), 144),
    ) {
        prop_assume!(a.contains(&true) && b.contains(&true));
        let mk = |cells: &[bool]| Raster { n: 12, x0: 0.0, y0: 0.0, pitch: 0.5, cells: cells.to_vec() };
        let (ra, rb) = (mk(&a), mk(&b));
        let pts = |c: &[bool]| -> Vec<(f64, f64)> {
            (0..144).filter(|&i| c[i]).map(|i| ((i % 12) as f64, (i / 12) as f64)).collect()
        };
        let (pa, pb) = (pts(&a), pts(&b));
        let directed = |p: &[(f64, f64)], q: &[(f64, f64)]| {
            p.iter().map(|u| q.iter().map(|v| (u.0 - v.0).hypot(u.1 - v.1)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        };
        let want = directed(&pa, &pb).max(directed(&pb, &pa)) * 0.5;
        prop_assert!((hausdorff(&ra, &rb) - want).abs() < 1e-12);
        prop_assert_eq!(hausdorff(&ra, &rb), hausdorff(&rb, &ra));
    }
}

#[test]
fn successor_increments_the_last_letter() {
    let m = [1, 3, 2];
    let w = Word::new(vec![1, 2, 1]).unwrap();
    assert_eq!(successor(&w, &m).unwrap(), Word::new(vec![1, 2, 2]).unwrap());
    assert!(successor(&Word::new(vec![1, 2, 2]).unwrap(), &m).is_err());
    assert!(successor(&Word::new(vec![1, 4]).unwrap(), &m).is_err());
}

#[test]
fn cantor_example_from_four_children() {
    let idx = CantorIndex::new(&[1, 4]).unwrap();
    let cells: Vec<(f64, f64)> = (1..=4).map(|l| idx.interval_of(&Word::new(vec![1, l]).unwrap()).unwrap()).collect();
    for (l, &(lo, hi)) in cells.iter().enumerate() {
        assert_eq!((lo, hi), ((2 * l) as f64 / 7.0, (2 * l + 1) as f64 / 7.0));
    }
    match idx.locate(1.5 / 7.0).unwrap() {
        Location::Gap { word, .. } => assert_eq!(word.letters(), &[1, 1]),
        other => panic!("{other:?}"),
    }
}
