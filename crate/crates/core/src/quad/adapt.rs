//! Globally adaptive 1-D integration over panels with algebraic end behavior.
//!
//! A panel `[a, b]` carries exponents `(ea, eb)` describing the integrand as
//! `(t−a)^ea (b−t)^eb · smooth`. It is integrated with a Gauss–Jacobi pair (10 and 5
//! nodes); the difference is the error estimate. The worst panel is bisected; a child
//! keeps the exponent of the end it shares with the parent and gets 0 at the midpoint,
//! so refinement grades geometrically toward singular ends.

use super::rules::rule;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const M_HI: usize = 10;
const M_LO: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seg {
    pub a: f64,
    pub b: f64,
    pub ea: f64,
    pub eb: f64,
}

impl Seg {
    pub fn new(a: f64, b: f64, ea: f64, eb: f64) -> Self {
        Self { a, b, ea, eb }
    }

    pub fn plain(a: f64, b: f64) -> Self {
        Self::new(a, b, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub rel: f64,
    pub abs: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Est {
    pub value: f64,
    pub err: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Panel {
    seg: Seg,
    val: f64,
    err: f64,
    splittable: bool,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err.total_cmp(&o.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn apply<F: FnMut(f64) -> f64>(f: &mut F, s: &Seg, m: usize) -> f64 {
    let r = rule(m, s.eb, s.ea);
    let h = 0.5 * (s.b - s.a);
    let mut acc = 0.0;
    for (x, w) in r.nodes.iter().zip(&r.scaled) {
        acc += w * f(s.a + h * (1.0 + x));
    }
    acc * h
}

fn panel<F: FnMut(f64) -> f64>(f: &mut F, s: Seg) -> Panel {
    let hi = apply(f, &s, M_HI);
    let lo = apply(f, &s, M_LO);
    let mid = 0.5 * (s.a + s.b);
    let splittable = mid > s.a && mid < s.b && (s.b - s.a) > 1e-14 * s.a.abs().max(s.b.abs());
    Panel {
        seg: s,
        val: hi,
        err: (hi - lo).abs(),
        splittable,
    }
}

/// Integrates `f` over the union of `segs`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, segs: &[Seg], tol: Tol) -> Est {
    let per_panel = M_HI + M_LO;
    let mut evals = 0usize;
    let mut heap = BinaryHeap::new();
    let mut frozen_val = 0.0;
    let mut frozen_err = 0.0;
    let (mut val, mut err) = (0.0, 0.0);
    for s in segs {
        if s.b > s.a {
            let p = panel(&mut f, *s);
            val += p.val;
            err += p.err;
            heap.push(p);
            evals += per_panel;
        }
    }
    loop {
        let target = (tol.rel * val.abs()).max(tol.abs);
        let done = err <= target || !err.is_finite();
        if done || evals + 2 * per_panel > tol.max_evals || heap.is_empty() {
            // Sum in a fixed order so results do not depend on heap layout.
            let mut leaves: Vec<(f64, f64, f64)> =
                heap.into_iter().map(|p| (p.seg.a, p.val, p.err)).collect();
            leaves.sort_by(|x, y| x.0.total_cmp(&y.0));
            let value = frozen_val + leaves.iter().map(|l| l.1).sum::<f64>();
            let err = frozen_err + leaves.iter().map(|l| l.2).sum::<f64>();
            let converged = err <= (tol.rel * value.abs()).max(tol.abs);
            return Est {
                value,
                err,
                evals,
                converged,
            };
        }
        let worst = heap.pop().unwrap();
        if !worst.splittable {
            frozen_val += worst.val;
            frozen_err += worst.err;
            continue;
        }
        let s = worst.seg;
        let mid = 0.5 * (s.a + s.b);
        let l = panel(&mut f, Seg::new(s.a, mid, s.ea, 0.0));
        let r = panel(&mut f, Seg::new(mid, s.b, 0.0, s.eb));
        val += l.val + r.val - worst.val;
        err = (err + l.err + r.err - worst.err).max(0.0);
        heap.push(l);
        heap.push(r);
        evals += 2 * per_panel;
    }
}
