//! Closed arithmetic of C^∞ functions with exact high-order derivatives.
//!
//! A [`SmoothFn`] is an immutable expression DAG. Evaluation compiles the DAG
//! once into a linear tape and propagates truncated Taylor series through it,
//! so every requested derivative is exact up to floating-point rounding.

mod bump;
mod norm;
mod tape;
pub mod taylor;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bump::{make_phi, phi_rescaled, transition_map, BumpPhi};
pub use norm::{ck_norm, ck_norm_on, derivative_sups, CkNormEstimate, NormSettings};

pub(crate) use bump::phi_series;
use tape::Tape;

/// Default cap on the jet order accepted by [`SmoothFn::jet`].
pub const DEFAULT_MAX_ORDER: usize = 8;

const QUOTIENT_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmoothError {
    #[error("point {x} lies outside the domain {domain}")]
    Domain { x: f64, domain: Domain },
    #[error("invalid interval [{lo}, {hi}]: need lo < hi")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("transition endpoints coincide (a = b = {0})")]
    DegenerateTransition(f64),
    #[error("jet order {requested} exceeds the configured cap {cap}")]
    Order { requested: usize, cap: usize },
    #[error("denominator vanishes near x = {x}")]
    SingularQuotient { x: f64 },
    #[error("norm estimation needs a bounded domain, got {0}")]
    UnboundedDomain(Domain),
    #[error("invalid norm settings: {0}")]
    Settings(String),
}

/// Where a function lives: the real line, a closed interval, or the circle
/// `R / 2πZ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Line,
    Interval { lo: f64, hi: f64 },
    Circle,
}

impl Domain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self, SmoothError> {
        if lo < hi && lo.is_finite() && hi.is_finite() {
            Ok(Domain::Interval { lo, hi })
        } else {
            Err(SmoothError::InvalidInterval { lo, hi })
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Domain::Line | Domain::Circle => x.is_finite(),
            Domain::Interval { lo, hi } => {
                let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
                x >= lo - tol && x <= hi + tol
            }
        }
    }

    /// The window sampled by norm estimation.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Domain::Line => None,
            Domain::Interval { lo, hi } => Some((lo, hi)),
            Domain::Circle => Some((0.0, std::f64::consts::TAU)),
        }
    }

    fn meet(self, other: Domain) -> Domain {
        match (self, other) {
            (Domain::Line, d) | (d, Domain::Line) => d,
            (Domain::Circle, Domain::Circle) => Domain::Circle,
            (Domain::Circle, d @ Domain::Interval { .. }) | (d @ Domain::Interval { .. }, Domain::Circle) => d,
            (Domain::Interval { lo: a, hi: b }, Domain::Interval { lo: c, hi: d }) => {
                Domain::Interval { lo: a.max(c), hi: b.min(d) }
            }
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Line => write!(f, "R"),
            Domain::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            Domain::Circle => write!(f, "T"),
        }
    }
}

/// Value and derivatives `(f(x), f'(x), ..., f^(order)(x))` at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub(crate) fn from_taylor(c: &[f64]) -> Self {
        Jet { coeffs: taylor::to_derivatives(c) }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// The `i`-th derivative. Panics if `i > order`.
    pub fn derivative(&self, i: usize) -> f64 {
        self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }
}

pub(crate) enum Node {
    Const(f64),
    Identity,
    Affine { terms: Vec<(f64, Arc<Node>)>, offset: f64 },
    Product(Arc<Node>, Arc<Node>),
    Quotient(Arc<Node>, Arc<Node>),
    Exp(Arc<Node>),
    Sin(Arc<Node>),
    Cos(Arc<Node>),
    /// `exp(-1/u)` for `u > 0`, zero otherwise.
    Flat(Arc<Node>),
    /// Normalized antiderivative of `B(s) B(1-s)` on `[0, 1]`, clamped outside.
    BumpIntegral(Arc<Node>),
    Compose { outer: Arc<Node>, outer_domain: Domain, inner: Arc<Node> },
    /// `start + (x - start) mod period`; only meaningful under periodic outers.
    Reduce { start: f64, period: f64 },
}

/// An immutable C^∞ function on a [`Domain`].
#[derive(Clone)]
pub struct SmoothFn {
    node: Arc<Node>,
    domain: Domain,
    max_order: usize,
    tape: Arc<OnceLock<Tape>>,
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFn")
            .field("domain", &self.domain)
            .field("node", &Arc::as_ptr(&self.node))
            .finish()
    }
}

impl SmoothFn {
    fn from_node(node: Node, domain: Domain) -> Self {
        SmoothFn {
            node: Arc::new(node),
            domain,
            max_order: DEFAULT_MAX_ORDER,
            tape: Arc::new(OnceLock::new()),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_node(Node::Const(c), Domain::Line)
    }

    pub fn identity() -> Self {
        Self::from_node(Node::Identity, Domain::Line)
    }

    /// `x ↦ slope * x + offset`.
    pub fn linear(slope: f64, offset: f64) -> Self {
        Self::linear_combination(&[(slope, &Self::identity())], offset)
    }

    /// `offset + Σ w_i f_i`.
    pub fn linear_combination(terms: &[(f64, &SmoothFn)], offset: f64) -> Self {
        let domain = terms.iter().fold(Domain::Line, |d, (_, f)| d.meet(f.domain));
        let terms = terms.iter().map(|(w, f)| (*w, f.node.clone())).collect();
        Self::from_node(Node::Affine { terms, offset }, domain)
    }

    pub fn scale(&self, w: f64) -> Self {
        Self::linear_combination(&[(w, self)], 0.0)
    }

    pub fn shift(&self, c: f64) -> Self {
        Self::linear_combination(&[(1.0, self)], c)
    }

    /// Quotient, refused when the denominator comes within `1e-12` of zero on
    /// a sample of the domain (`[-8, 8]` for functions on the whole line).
    pub fn try_div(&self, den: &SmoothFn) -> Result<Self, SmoothError> {
        let domain = self.domain.meet(den.domain);
        let (lo, hi) = domain.bounds().unwrap_or((-8.0, 8.0));
        let n = 1025;
        for i in 0..n {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            if den.value(x)?.abs() < QUOTIENT_GUARD {
                return Err(SmoothError::SingularQuotient { x });
            }
        }
        Ok(Self::from_node(
            Node::Quotient(self.node.clone(), den.node.clone()),
            domain,
        ))
    }

    pub fn exp(&self) -> Self {
        Self::from_node(Node::Exp(self.node.clone()), self.domain)
    }

    pub fn sin(&self) -> Self {
        Self::from_node(Node::Sin(self.node.clone()), self.domain)
    }

    pub fn cos(&self) -> Self {
        Self::from_node(Node::Cos(self.node.clone()), self.domain)
    }

    /// `B ∘ self` with `B(u) = exp(-1/u)` for `u > 0` and `0` otherwise.
    pub fn flat(&self) -> Self {
        Self::from_node(Node::Flat(self.node.clone()), self.domain)
    }

    /// `S ∘ self`, the symmetric flat-ended sigmoid built from `B(s) B(1-s)`.
    pub fn bump_integral(&self) -> Self {
        Self::from_node(Node::BumpIntegral(self.node.clone()), self.domain)
    }

    /// `outer ∘ self`. The result lives on `self`'s domain; evaluation fails if
    /// `self` leaves `outer`'s domain.
    pub fn then(&self, outer: &SmoothFn) -> Self {
        Self::from_node(
            Node::Compose {
                outer: outer.node.clone(),
                outer_domain: outer.domain,
                inner: self.node.clone(),
            },
            self.domain,
        )
    }

    /// Periodic extension: evaluates `self` at `start + (x - start) mod period`.
    /// The caller is responsible for `self` matching all jets across the seam.
    pub fn periodize(&self, start: f64, period: f64) -> Self {
        let reduce = Self::from_node(Node::Reduce { start, period }, Domain::Line);
        let domain = if (period - std::f64::consts::TAU).abs() < 1e-15 {
            Domain::Circle
        } else {
            Domain::Line
        };
        let mut out = reduce.then(self);
        out.domain = domain;
        out
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Same function, new domain. Fails if the new domain is not inside the old one.
    pub fn restrict(&self, domain: Domain) -> Result<Self, SmoothError> {
        let ok = match (self.domain, domain) {
            (Domain::Line, _) => true,
            (Domain::Circle, Domain::Interval { .. }) | (Domain::Circle, Domain::Circle) => true,
            (Domain::Interval { lo, hi }, Domain::Interval { lo: a, hi: b }) => {
                Domain::Interval { lo, hi }.contains(a) && Domain::Interval { lo, hi }.contains(b)
            }
            _ => false,
        };
        if !ok {
            let x = match domain {
                Domain::Interval { lo, .. } => lo,
                _ => f64::INFINITY,
            };
            return Err(SmoothError::Domain { x, domain: self.domain });
        }
        let mut out = self.clone();
        out.domain = domain;
        Ok(out)
    }

    /// Restriction to `[lo, hi]`.
    pub fn on(&self, lo: f64, hi: f64) -> Result<Self, SmoothError> {
        self.restrict(Domain::interval(lo, hi)?)
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn with_max_order(mut self, cap: usize) -> Self {
        self.max_order = cap;
        self
    }

    /// True when both handles point at the same DAG node.
    pub fn same_node(&self, other: &SmoothFn) -> bool {
        Arc::ptr_eq(&self.node, &other.node)
    }

    fn tape(&self) -> &Tape {
        self.tape.get_or_init(|| Tape::compile(&self.node))
    }

    /// Normalized Taylor coefficients at `x`; no domain or order checks.
    pub(crate) fn taylor_unchecked(&self, x: f64, order: usize) -> Result<Vec<f64>, SmoothError> {
        self.tape().eval(x, order)
    }

    /// `(f(x), f'(x), ..., f^(order)(x))`.
    pub fn jet(&self, x: f64, order: usize) -> Result<Jet, SmoothError> {
        if order > self.max_order {
            return Err(SmoothError::Order { requested: order, cap: self.max_order });
        }
        if !self.domain.contains(x) {
            return Err(SmoothError::Domain { x, domain: self.domain });
        }
        Ok(Jet::from_taylor(&self.taylor_unchecked(x, order)?))
    }

    pub fn value(&self, x: f64) -> Result<f64, SmoothError> {
        if !self.domain.contains(x) {
            return Err(SmoothError::Domain { x, domain: self.domain });
        }
        Ok(self.taylor_unchecked(x, 0)?[0])
    }

    /// Value at `x`, panicking on domain errors. For internal use on points
    /// already known to be valid.
    pub(crate) fn at(&self, x: f64) -> f64 {
        self.taylor_unchecked(x, 0).expect("evaluation inside a validated domain")[0]
    }
}

/// Pointwise evaluation of the derivative `order` at `x` (convenience).
pub fn jet_eval(f: &SmoothFn, x: f64, order: usize) -> Result<Jet, SmoothError> {
    f.jet(x, order)
}

impl Add for &SmoothFn {
    type Output = SmoothFn;
    fn add(self, rhs: &SmoothFn) -> SmoothFn {
        SmoothFn::linear_combination(&[(1.0, self), (1.0, rhs)], 0.0)
    }
}

impl Sub for &SmoothFn {
    type Output = SmoothFn;
    fn sub(self, rhs: &SmoothFn) -> SmoothFn {
        SmoothFn::linear_combination(&[(1.0, self), (-1.0, rhs)], 0.0)
    }
}

impl Mul for &SmoothFn {
    type Output = SmoothFn;
    fn mul(self, rhs: &SmoothFn) -> SmoothFn {
        SmoothFn::from_node(
            Node::Product(self.node.clone(), rhs.node.clone()),
            self.domain.meet(rhs.domain),
        )
    }
}

impl Mul<f64> for &SmoothFn {
    type Output = SmoothFn;
    fn mul(self, rhs: f64) -> SmoothFn {
        self.scale(rhs)
    }
}

impl Neg for &SmoothFn {
    type Output = SmoothFn;
    fn neg(self) -> SmoothFn {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_vanishing_derivatives() {
        let j = SmoothFn::constant(5.0).jet(0.3, 2).unwrap();
        assert_eq!(j.coeffs(), &[5.0, 0.0, 0.0]);
    }

    #[test]
    fn domain_and_order_errors() {
        let f = SmoothFn::identity().on(0.0, 1.0).unwrap();
        assert!(matches!(f.jet(1.5, 1), Err(SmoothError::Domain { .. })));
        assert!(matches!(
            f.jet(0.5, DEFAULT_MAX_ORDER + 1),
            Err(SmoothError::Order { .. })
        ));
        assert!(f.clone().with_max_order(12).jet(0.5, 12).is_ok());
    }

    #[test]
    fn quotient_by_vanishing_function_is_refused() {
        let x = SmoothFn::identity().on(-1.0, 1.0).unwrap();
        let one = SmoothFn::constant(1.0);
        assert!(matches!(one.try_div(&x), Err(SmoothError::SingularQuotient { .. })));
        let den = x.exp();
        assert!(one.try_div(&den).is_ok());
    }

    #[test]
    fn product_rule_through_the_dag() {
        let x = SmoothFn::identity();
        let f = &x.sin() * &x.exp();
        let j = f.jet(0.4, 2).unwrap();
        let (s, c, e) = (0.4f64.sin(), 0.4f64.cos(), 0.4f64.exp());
        assert!((j.derivative(1) - e * (s + c)).abs() < 1e-14);
        assert!((j.derivative(2) - 2.0 * e * c).abs() < 1e-14);
    }

    #[test]
    fn shared_subexpressions_are_evaluated_once_per_point() {
        // (e^x)^(2^10) built by repeated squaring stays cheap and exact.
        let mut f = SmoothFn::identity().exp();
        for _ in 0..10 {
            f = &f * &f;
        }
        let j = f.jet(0.001, 1).unwrap();
        let expect = (1024.0f64 * 0.001).exp();
        assert!((j.value() - expect).abs() < 1e-12 * expect);
        assert!((j.derivative(1) - 1024.0 * expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn periodization_reduces_the_argument() {
        let f = SmoothFn::identity().sin().on(0.0, std::f64::consts::TAU).unwrap();
        let p = f.periodize(0.0, std::f64::consts::TAU);
        assert_eq!(p.domain(), Domain::Circle);
        let a = p.jet(7.0, 2).unwrap();
        let b = f.jet(7.0 - std::f64::consts::TAU, 2).unwrap();
        for i in 0..=2 {
            assert!((a.derivative(i) - b.derivative(i)).abs() < 1e-14);
        }
    }

    #[test]
    fn restriction_must_shrink() {
        let f = SmoothFn::identity().on(0.0, 1.0).unwrap();
        assert!(f.on(0.2, 0.8).is_ok());
        assert!(f.on(-0.5, 0.8).is_err());
    }
}
