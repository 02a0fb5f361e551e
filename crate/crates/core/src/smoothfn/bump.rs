//! The flat bump primitives: the step `φ` and the transition maps built on `S`.

use super::{taylor, Domain, SmoothError, SmoothFn};

/// The smooth step `φ(x) = ρ(3x - 1)`, `ρ(t) = B(t) / (B(t) + B(1 - t))`.
///
/// `φ` vanishes on `(-∞, 1/3]`, equals one on `[2/3, ∞)` and is strictly
/// increasing in between.
#[derive(Clone, Debug)]
pub struct BumpPhi {
    func: SmoothFn,
}

impl BumpPhi {
    pub fn func(&self) -> &SmoothFn {
        &self.func
    }

    pub fn value(&self, x: f64) -> f64 {
        self.func.at(x)
    }
}

pub fn make_phi() -> BumpPhi {
    let t = SmoothFn::linear(3.0, -1.0);
    let left = t.flat();
    let right = SmoothFn::linear(-3.0, 2.0).flat();
    let den = &left + &right;
    let func = left
        .try_div(&den)
        .expect("B(t) + B(1-t) is bounded below by 2 exp(-2)");
    BumpPhi { func }
}

/// `φ_{a,b}(x) = φ((x - a) / (b - a))`, zero left of `(2a + b) / 3` and one
/// right of `(a + 2b) / 3`.
pub fn phi_rescaled(phi: &BumpPhi, a: f64, b: f64) -> Result<SmoothFn, SmoothError> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(SmoothError::InvalidInterval { lo: a, hi: b });
    }
    let s = 1.0 / (b - a);
    Ok(SmoothFn::linear(s, -a * s).then(phi.func()))
}

/// The map `[α, β] → [a, b]`, `t ↦ a + (b - a) S((t - α) / (β - α))`.
///
/// Every derivative of order at least one vanishes at both ends, so pieces
/// joined through such maps are C^∞ across the joint.
pub fn transition_map(alpha: f64, beta: f64, a: f64, b: f64) -> Result<SmoothFn, SmoothError> {
    if !(alpha < beta) || !alpha.is_finite() || !beta.is_finite() {
        return Err(SmoothError::InvalidInterval { lo: alpha, hi: beta });
    }
    if a == b {
        return Err(SmoothError::DegenerateTransition(a));
    }
    let s = 1.0 / (beta - alpha);
    let u = SmoothFn::linear(s, -alpha * s).bump_integral();
    u.scale(b - a).shift(a).restrict(Domain::interval(alpha, beta)?)
}

/// Series of `φ` composed with `u`, bypassing the DAG.
pub(crate) fn phi_series(u: &[f64], out: &mut [f64]) {
    let n = out.len();
    let mut t: Vec<f64> = u.iter().map(|v| 3.0 * v).collect();
    t[0] += -1.0;
    let mut left = vec![0.0; n];
    taylor::flat(&t, &mut left);
    let mut refl: Vec<f64> = u.iter().map(|v| -3.0 * v).collect();
    refl[0] += 2.0;
    let mut right = vec![0.0; n];
    taylor::flat(&refl, &mut right);
    if right[0] == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[0] = 1.0;
        return;
    }
    if left[0] == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let mut den = left.clone();
    taylor::add_scaled(&mut den, &right, 1.0);
    taylor::div(&left, &den, out);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho(t: f64) -> f64 {
        let b = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
        b(t) / (b(t) + b(1.0 - t))
    }

    #[test]
    fn phi_matches_closed_form_and_plateaus() {
        let phi = make_phi();
        for i in 0..=100 {
            let x = -0.5 + 2.0 * i as f64 / 100.0;
            assert!((phi.value(x) - rho(3.0 * x - 1.0)).abs() < 1e-15, "x = {x}");
        }
        assert_eq!(phi.value(1.0 / 3.0), 0.0);
        assert_eq!(phi.value(0.7), 1.0);
        assert!((phi.value(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn phi_series_agrees_with_dag() {
        let phi = make_phi();
        for &x in &[0.2, 0.34, 0.41, 0.5, 0.6, 0.66, 0.9] {
            let dag = phi.func().taylor_unchecked(x, 5).unwrap();
            let mut fast = vec![0.0; 6];
            phi_series(&taylor::variable(x, 5), &mut fast);
            for k in 0..6 {
                assert!((dag[k] - fast[k]).abs() <= 1e-12 * (1.0 + dag[k].abs()), "x={x} k={k}");
            }
        }
    }

    #[test]
    fn rescaled_phi_switches_on_the_middle_third() {
        let phi = make_phi();
        let f = phi_rescaled(&phi, 2.0, 5.0).unwrap();
        assert_eq!(f.value(3.0).unwrap(), 0.0);
        assert_eq!(f.value(4.0).unwrap(), 1.0);
        assert!((f.value(3.5).unwrap() - 0.5).abs() < 1e-14);
        assert!(phi_rescaled(&phi, 1.0, 1.0).is_err());
    }

    #[test]
    fn transition_map_is_flat_at_both_ends() {
        let tm = transition_map(0.25, 0.75, 3.0, -1.0).unwrap();
        let a = tm.jet(0.25, 6).unwrap();
        let b = tm.jet(0.75, 6).unwrap();
        assert_eq!(a.value(), 3.0);
        assert_eq!(b.value(), -1.0);
        for k in 1..=6 {
            assert_eq!(a.derivative(k), 0.0);
            assert_eq!(b.derivative(k), 0.0);
        }
        assert!((tm.value(0.5).unwrap() - 1.0).abs() < 1e-14);
        assert!(transition_map(0.5, 0.5, 0.0, 1.0).is_err());
        assert!(transition_map(0.0, 1.0, 2.0, 2.0).is_err());
    }
}
