use std::collections::HashMap;
use std::sync::Arc;

use super::{taylor, Domain, Node, SmoothError};

enum Op {
    Const(f64),
    Identity,
    Affine { terms: Vec<(f64, usize)>, offset: f64 },
    Product(usize, usize),
    Quotient(usize, usize),
    Exp(usize),
    Sin(usize),
    Cos(usize),
    Flat(usize),
    BumpIntegral(usize),
    Compose { outer: Arc<Tape>, outer_domain: Domain, inner: usize },
    Reduce { start: f64, period: f64 },
}

/// Topologically ordered evaluation program; the root is the last slot.
pub(crate) struct Tape {
    ops: Vec<Op>,
}

struct Compiler {
    ops: Vec<Op>,
    slots: HashMap<*const Node, usize>,
    outers: HashMap<*const Node, Arc<Tape>>,
}

impl Compiler {
    fn visit(&mut self, node: &Arc<Node>) -> usize {
        let key = Arc::as_ptr(node);
        if let Some(&i) = self.slots.get(&key) {
            return i;
        }
        let op = match node.as_ref() {
            Node::Const(c) => Op::Const(*c),
            Node::Identity => Op::Identity,
            Node::Affine { terms, offset } => Op::Affine {
                terms: terms.iter().map(|(w, n)| (*w, self.visit(n))).collect(),
                offset: *offset,
            },
            Node::Product(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Op::Product(a, b)
            }
            Node::Quotient(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Op::Quotient(a, b)
            }
            Node::Exp(a) => Op::Exp(self.visit(a)),
            Node::Sin(a) => Op::Sin(self.visit(a)),
            Node::Cos(a) => Op::Cos(self.visit(a)),
            Node::Flat(a) => Op::Flat(self.visit(a)),
            Node::BumpIntegral(a) => Op::BumpIntegral(self.visit(a)),
            Node::Compose { outer, outer_domain, inner } => {
                let inner = self.visit(inner);
                let okey = Arc::as_ptr(outer);
                let tape = match self.outers.get(&okey) {
                    Some(t) => t.clone(),
                    None => {
                        let t = Arc::new(Tape::compile(outer));
                        self.outers.insert(okey, t.clone());
                        t
                    }
                };
                Op::Compose { outer: tape, outer_domain: *outer_domain, inner }
            }
            Node::Reduce { start, period } => Op::Reduce { start: *start, period: *period },
        };
        self.ops.push(op);
        let i = self.ops.len() - 1;
        self.slots.insert(key, i);
        i
    }
}

impl Tape {
    pub(crate) fn compile(root: &Arc<Node>) -> Tape {
        let mut c = Compiler { ops: Vec::new(), slots: HashMap::new(), outers: HashMap::new() };
        c.visit(root);
        Tape { ops: c.ops }
    }

    /// Normalized Taylor coefficients of the root at `x`, truncated at `order`.
    pub(crate) fn eval(&self, x: f64, order: usize) -> Result<Vec<f64>, SmoothError> {
        let w = order + 1;
        let mut buf = vec![0.0; self.ops.len() * w];
        let mut scratch = vec![0.0; w];
        for (i, op) in self.ops.iter().enumerate() {
            let (done, rest) = buf.split_at_mut(i * w);
            let out = &mut rest[..w];
            let slot = |j: usize| &done[j * w..(j + 1) * w];
            match op {
                Op::Const(c) => out[0] = *c,
                Op::Identity => {
                    out[0] = x;
                    if order > 0 {
                        out[1] = 1.0;
                    }
                }
                Op::Affine { terms, offset } => {
                    out[0] = *offset;
                    for &(wt, j) in terms {
                        taylor::add_scaled(out, slot(j), wt);
                    }
                }
                Op::Product(a, b) => taylor::mul(slot(*a), slot(*b), out),
                Op::Quotient(a, b) => {
                    if !taylor::div(slot(*a), slot(*b), out) {
                        return Err(SmoothError::SingularQuotient { x });
                    }
                }
                Op::Exp(a) => taylor::exp(slot(*a), out),
                Op::Sin(a) => taylor::sin_cos(slot(*a), out, &mut scratch),
                Op::Cos(a) => taylor::sin_cos(slot(*a), &mut scratch, out),
                Op::Flat(a) => taylor::flat(slot(*a), out),
                Op::BumpIntegral(a) => taylor::bump_integral(slot(*a), out),
                Op::Compose { outer, outer_domain, inner } => {
                    let inner = slot(*inner);
                    let y = inner[0];
                    if !outer_domain.contains(y) {
                        return Err(SmoothError::Domain { x: y, domain: *outer_domain });
                    }
                    let oc = outer.eval(y, order)?;
                    taylor::compose(&oc, inner, out);
                }
                Op::Reduce { start, period } => {
                    out[0] = start + (x - start).rem_euclid(*period);
                    if order > 0 {
                        out[1] = 1.0;
                    }
                }
            }
        }
        buf.truncate(self.ops.len() * w);
        Ok(buf.split_off((self.ops.len() - 1) * w))
    }
}
