//! Truncated Taylor-series arithmetic.
//!
//! Series are stored as normalized coefficients `c[k] = f^(k)(x0) / k!`, all
//! slices in one operation share the same truncation order `len - 1`. The
//! routines write into caller-provided buffers so the tape evaluator can keep
//! every intermediate in one flat allocation.

use std::sync::OnceLock;

/// Arguments of `exp(-1/u)` at or below this value are treated as exactly flat.
pub const FLAT_CLAMP: f64 = 1e-12;

pub(crate) fn add_scaled(out: &mut [f64], a: &[f64], w: f64) {
    for (o, x) in out.iter_mut().zip(a) {
        *o += w * x;
    }
}

pub(crate) fn mul(a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = out.len();
    for k in 0..n {
        let mut s = 0.0;
        for i in 0..=k {
            s += a[i] * b[k - i];
        }
        out[k] = s;
    }
}

/// `out = a / b`. Returns `false` when the leading coefficient of `b` is zero.
pub(crate) fn div(a: &[f64], b: &[f64], out: &mut [f64]) -> bool {
    if b[0] == 0.0 || !b[0].is_finite() {
        return false;
    }
    let n = out.len();
    for k in 0..n {
        let mut s = a[k];
        for j in 1..=k {
            s -= b[j] * out[k - j];
        }
        out[k] = s / b[0];
    }
    true
}

pub(crate) fn exp(a: &[f64], out: &mut [f64]) {
    let n = out.len();
    out[0] = a[0].exp();
    for k in 1..n {
        let mut s = 0.0;
        for j in 1..=k {
            s += j as f64 * a[j] * out[k - j];
        }
        out[k] = s / k as f64;
    }
}

pub(crate) fn sin_cos(a: &[f64], s: &mut [f64], c: &mut [f64]) {
    let n = s.len();
    s[0] = a[0].sin();
    c[0] = a[0].cos();
    for k in 1..n {
        let mut ss = 0.0;
        let mut cc = 0.0;
        for j in 1..=k {
            let w = j as f64 * a[j];
            ss += w * c[k - j];
            cc -= w * s[k - j];
        }
        s[k] = ss / k as f64;
        c[k] = cc / k as f64;
    }
}

/// `out = B(a)` with `B(u) = exp(-1/u)` for `u > 0` and `0` otherwise.
pub(crate) fn flat(a: &[f64], out: &mut [f64]) {
    if a[0] <= FLAT_CLAMP {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let n = out.len();
    let mut one = vec![0.0; n];
    one[0] = 1.0;
    let mut recip = vec![0.0; n];
    div(&one, a, &mut recip);
    recip.iter_mut().for_each(|r| *r = -*r);
    exp(&recip, out);
}

/// `out = B(a) * B(1 - a) / Z`, the normalized density whose integral is `S`.
pub(crate) fn bump_density(a: &[f64], out: &mut [f64]) {
    let n = out.len();
    let mut left = vec![0.0; n];
    flat(a, &mut left);
    let mut refl: Vec<f64> = a.iter().map(|x| -x).collect();
    refl[0] += 1.0;
    let mut right = vec![0.0; n];
    flat(&refl, &mut right);
    mul(&left, &right, out);
    let z = bump_integral_table().total;
    out.iter_mut().for_each(|o| *o /= z);
}

/// `out = S(a)` where `S(u) = ∫_0^u B(s)B(1-s) ds / ∫_0^1 B(s)B(1-s) ds`,
/// clamped to `0` below the interval and `1` above it.
pub(crate) fn bump_integral(a: &[f64], out: &mut [f64]) {
    let n = out.len();
    if a[0] <= FLAT_CLAMP {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    if a[0] >= 1.0 - FLAT_CLAMP {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[0] = 1.0;
        return;
    }
    out[0] = bump_integral_value(a[0]);
    if n == 1 {
        return;
    }
    // d/dh S(a(h)) = S'(a(h)) a'(h); integrate the product term by term.
    let mut dens = vec![0.0; n - 1];
    bump_density(&a[..n - 1], &mut dens);
    let da: Vec<f64> = (0..n - 1).map(|k| (k + 1) as f64 * a[k + 1]).collect();
    let mut prod = vec![0.0; n - 1];
    mul(&dens, &da, &mut prod);
    for k in 1..n {
        out[k] = prod[k - 1] / k as f64;
    }
}

/// Composes the series `outer` (expanded at `inner[0]`) with `inner`.
pub(crate) fn compose(outer: &[f64], inner: &[f64], out: &mut [f64]) {
    let n = out.len();
    let mut p = inner[..n].to_vec();
    p[0] = 0.0;
    let mut acc = vec![0.0; n];
    acc[0] = outer[n - 1];
    let mut tmp = vec![0.0; n];
    for i in (0..n - 1).rev() {
        mul(&acc, &p, &mut tmp);
        tmp[0] += outer[i];
        acc.copy_from_slice(&tmp);
    }
    out.copy_from_slice(&acc);
}

/// Converts normalized coefficients to plain derivatives.
pub(crate) fn to_derivatives(c: &[f64]) -> Vec<f64> {
    let mut fact = 1.0;
    c.iter()
        .enumerate()
        .map(|(k, v)| {
            if k > 0 {
                fact *= k as f64;
            }
            v * fact
        })
        .collect()
}

#[cfg(test)]
pub(crate) fn variable(x: f64, order: usize) -> Vec<f64> {
    let mut v = vec![0.0; order + 1];
    v[0] = x;
    if order > 0 {
        v[1] = 1.0;
    }
    v
}

#[cfg(test)]
pub(crate) fn constant(c: f64, order: usize) -> Vec<f64> {
    let mut v = vec![0.0; order + 1];
    v[0] = c;
    v
}

// ---------------------------------------------------------------------------
// Quadrature for S.

const PANELS: usize = 64;
const GL_POINTS: usize = 16;

struct IntegralTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `cum[i] = ∫_0^{i h} w` on the half interval `[0, 1/2]`, `h = 1/(2 PANELS)`.
    cum: Vec<f64>,
    total: f64,
}

fn density_raw(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / s - 1.0 / (1.0 - s)).exp()
    }
}

fn gl_integrate(t: &IntegralTable, lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut s = 0.0;
    for (x, w) in t.nodes.iter().zip(&t.weights) {
        s += w * density_raw(mid + half * x);
    }
    s * half
}

fn bump_integral_table() -> &'static IntegralTable {
    static TABLE: OnceLock<IntegralTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (nodes, weights) = gauss_legendre(GL_POINTS);
        let mut t = IntegralTable {
            nodes,
            weights,
            cum: vec![0.0; PANELS + 1],
            total: 0.0,
        };
        let h = 0.5 / PANELS as f64;
        for i in 0..PANELS {
            let piece = gl_integrate(&t, i as f64 * h, (i + 1) as f64 * h);
            t.cum[i + 1] = t.cum[i] + piece;
        }
        t.total = 2.0 * t.cum[PANELS];
        t
    })
}

/// Value of the normalized bump integral `S(u)`; exactly `1/2` at `u = 1/2`.
pub fn bump_integral_value(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    if u > 0.5 {
        return 1.0 - bump_integral_value(1.0 - u);
    }
    let t = bump_integral_table();
    let h = 0.5 / PANELS as f64;
    let p = ((u / h).floor() as usize).min(PANELS);
    let base = t.cum[p];
    let lo = p as f64 * h;
    let rest = if u > lo { gl_integrate(t, lo, u) } else { 0.0 };
    (base + rest) / t.total
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_series_at_zero() {
        let x = variable(0.0, 5);
        let mut e = vec![0.0; 6];
        exp(&x, &mut e);
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0, 1.0 / 120.0];
        for (a, b) in e.iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn geometric_series_from_division() {
        let one = constant(1.0, 4);
        let mut den = variable(0.0, 4);
        den.iter_mut().skip(1).for_each(|c| *c = -*c);
        den[0] = 1.0;
        let mut q = vec![0.0; 5];
        assert!(div(&one, &den, &mut q));
        assert!(q.iter().all(|c| close(*c, 1.0, 1e-15)));
    }

    #[test]
    fn sin_cos_match_closed_form() {
        let x = variable(0.7, 4);
        let mut s = vec![0.0; 5];
        let mut c = vec![0.0; 5];
        sin_cos(&x, &mut s, &mut c);
        let d = to_derivatives(&s);
        assert!(close(d[0], 0.7f64.sin(), 1e-15));
        assert!(close(d[1], 0.7f64.cos(), 1e-15));
        assert!(close(d[2], -(0.7f64.sin()), 1e-15));
        assert!(close(d[3], -(0.7f64.cos()), 1e-15));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!(close(s, 2.0 / 11.0, 1e-14));
        assert!(close(w.iter().sum::<f64>(), 2.0, 1e-14));
    }

    #[test]
    fn bump_integral_symmetric_and_clamped() {
        assert_eq!(bump_integral_value(0.5), 0.5);
        assert_eq!(bump_integral_value(0.0), 0.0);
        assert_eq!(bump_integral_value(1.0), 1.0);
        for u in [0.05, 0.2, 0.37, 0.49] {
            let s = bump_integral_value(u) + bump_integral_value(1.0 - u);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bump_integral_matches_fine_trapezoid() {
        // Independent route: composite trapezoid with many panels.
        let n = 200_000;
        let h = 1.0 / n as f64;
        let mut cum = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            let a = density_raw(i as f64 * h);
            let b = density_raw((i + 1) as f64 * h);
            total += 0.5 * h * (a + b);
            if (i + 1) as f64 * h <= 0.3 + 1e-12 {
                cum = total;
            }
        }
        assert!((cum / total - bump_integral_value(0.3)).abs() < 1e-9);
    }

    #[test]
    fn composition_with_linear_inner_rescales() {
        // outer = exp series at y0 = 2*0.3, inner = 2x at x0 = 0.3
        let inner = {
            let mut v = variable(0.3, 4);
            v.iter_mut().for_each(|c| *c *= 2.0);
            v
        };
        let mut outer = vec![0.0; 5];
        exp(&variable(inner[0], 4), &mut outer);
        let mut out = vec![0.0; 5];
        compose(&outer, &inner, &mut out);
        let d = to_derivatives(&out);
        let e = (0.6f64).exp();
        for (k, v) in d.iter().enumerate() {
            assert!(close(*v, e * 2f64.powi(k as i32), 1e-14));
        }
    }
}
