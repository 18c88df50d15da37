//! Analytic test functions with closed-form gradients.

use crate::error::{Error, Result};
use crate::quad::{Ball, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `slope·x + offset`.
    Affine { slope: Vec<f64>, offset: f64 },
    /// `exp(−1/(1 − |x−c|²/ρ²))` inside `B_ρ(c)`, zero outside.
    RadialBump { center: Vec<f64>, radius: f64 },
    /// `Π (1 − y_i²)²` with `y_i = (x_i − c_i)/a_i`, zero outside the box.
    TensorBump { center: Vec<f64>, half_widths: Vec<f64> },
    /// `(1 − |x−c|/ρ)_+`.
    Cone { center: Vec<f64>, radius: f64 },
    Scaled { u: Box<TestFunction>, factor: f64 },
    /// `u(λx)`.
    Dilated { u: Box<TestFunction>, lambda: f64 },
    /// `u(x − shift)`.
    Translated { u: Box<TestFunction>, shift: Vec<f64> },
}

/// Compositions folded into a base kind with an amplitude.
#[derive(Debug, Clone, PartialEq)]
enum Base {
    Affine(Vec<f64>, f64),
    Radial(Vec<f64>, f64),
    Tensor(Vec<f64>, Vec<f64>),
    Cone(Vec<f64>, f64),
}

#[derive(Debug, Clone, PartialEq)]
struct Canon {
    base: Base,
    amp: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Roots of `|r·d − c|² = ρ²` for unit `d`.
fn sphere_hits(d: &[f64], c: &[f64], rho: f64, out: &mut Vec<f64>) {
    let b = dot(d, c);
    let disc = b * b - (dot(c, c) - rho * rho);
    if disc > 0.0 {
        let s = disc.sqrt();
        out.push(b - s);
        out.push(b + s);
    }
}

impl TestFunction {
    pub fn affine(slope: Vec<f64>, offset: f64) -> Self {
        Self::Affine { slope, offset }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::affine(vec![0.0; n], c)
    }

    /// The coordinate function `x_n`.
    pub fn last_coordinate(n: usize) -> Self {
        let mut a = vec![0.0; n];
        a[n - 1] = 1.0;
        Self::affine(a, 0.0)
    }

    pub fn radial_bump(center: Vec<f64>, radius: f64) -> Self {
        Self::RadialBump { center, radius }
    }

    pub fn tensor_bump(center: Vec<f64>, half_widths: Vec<f64>) -> Self {
        Self::TensorBump { center, half_widths }
    }

    pub fn cone(center: Vec<f64>, radius: f64) -> Self {
        Self::Cone { center, radius }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self::Scaled {
            u: Box::new(self),
            factor,
        }
    }

    pub fn dilated(self, lambda: f64) -> Self {
        Self::Dilated {
            u: Box::new(self),
            lambda,
        }
    }

    pub fn translated(self, shift: Vec<f64>) -> Self {
        Self::Translated {
            u: Box::new(self),
            shift,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Affine { slope, .. } => slope.len(),
            Self::RadialBump { center, .. } | Self::TensorBump { center, .. } | Self::Cone { center, .. } => {
                center.len()
            }
            Self::Scaled { u, .. } | Self::Dilated { u, .. } | Self::Translated { u, .. } => u.dim(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.dim(),
            });
        }
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        match self {
            Self::RadialBump { radius, .. } | Self::Cone { radius, .. } if !(*radius > 0.0) => {
                bad("test function radius must be positive")
            }
            Self::TensorBump { half_widths, .. }
                if half_widths.len() != n || half_widths.iter().any(|a| !(*a > 0.0)) =>
            {
                bad("tensor bump needs n positive half-widths")
            }
            Self::Dilated { lambda, .. } if !(*lambda > 0.0) => bad("dilation factor must be positive"),
            Self::Translated { shift, .. } if shift.len() != n => bad("shift has wrong dimension"),
            Self::Scaled { u, .. } | Self::Dilated { u, .. } | Self::Translated { u, .. } => u.validate(n),
            _ => Ok(()),
        }
    }

    fn canon(&self) -> Canon {
        match self {
            Self::Affine { slope, offset } => Canon {
                base: Base::Affine(slope.clone(), *offset),
                amp: 1.0,
            },
            Self::RadialBump { center, radius } => Canon {
                base: Base::Radial(center.clone(), *radius),
                amp: 1.0,
            },
            Self::TensorBump { center, half_widths } => Canon {
                base: Base::Tensor(center.clone(), half_widths.clone()),
                amp: 1.0,
            },
            Self::Cone { center, radius } => Canon {
                base: Base::Cone(center.clone(), *radius),
                amp: 1.0,
            },
            Self::Scaled { u, factor } => {
                let mut c = u.canon();
                c.amp *= factor;
                c
            }
            Self::Dilated { u, lambda } => {
                let mut c = u.canon();
                let l = *lambda;
                let div = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x /= l);
                match &mut c.base {
                    Base::Affine(a, _) => a.iter_mut().for_each(|x| *x *= l),
                    Base::Radial(ctr, r) | Base::Cone(ctr, r) => {
                        div(ctr);
                        *r /= l;
                    }
                    Base::Tensor(ctr, a) => {
                        div(ctr);
                        div(a);
                    }
                }
                c
            }
            Self::Translated { u, shift } => {
                let mut c = u.canon();
                match &mut c.base {
                    Base::Affine(a, b) => *b -= dot(a, shift),
                    Base::Radial(ctr, _) | Base::Cone(ctr, _) | Base::Tensor(ctr, _) => {
                        ctr.iter_mut().zip(shift).for_each(|(x, s)| *x += s)
                    }
                }
                c
            }
        }
    }

    /// Closed support ball, or `None` for functions without compact support.
    pub fn support(&self) -> Option<Ball> {
        let c = self.canon();
        if c.amp == 0.0 {
            return None;
        }
        match c.base {
            Base::Affine(..) => None,
            Base::Radial(ctr, r) | Base::Cone(ctr, r) => Some(Ball::new(ctr, r)),
            Base::Tensor(ctr, a) => {
                let r = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                Some(Ball::new(ctr, r))
            }
        }
    }

    /// The value of a constant function.
    pub fn as_constant(&self) -> Option<f64> {
        match self.canon() {
            Canon {
                base: Base::Affine(a, b),
                amp,
            } if a.iter().all(|v| *v == 0.0) => Some(amp * b),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.canon().eval(x)
    }

    pub fn gradient(&self, x: &[f64], g: &mut [f64]) {
        self.canon().gradient(x, g)
    }

    pub fn gradient_norm(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        self.gradient(x, &mut g);
        dot(&g, &g).sqrt()
    }

    /// Largest relative deviation of the analytic gradient from central differences
    /// at `h = step·size`, over 20 seeded points in the support (or the unit ball),
    /// avoiding kinks and the steep rim of the bumps.
    pub fn gradient_self_test(&self, step: f64, seed: u64) -> f64 {
        let n = self.dim();
        let (ctr, size) = match self.support() {
            Some(b) => (b.center, b.radius),
            None => (vec![0.0; n], 1.0),
        };
        let canon = self.canon();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = step * size;
        let mut worst: f64 = 0.0;
        let mut done = 0;
        let (mut g, mut x) = (vec![0.0; n], vec![0.0; n]);
        while done < 20 {
            let mut d: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let l = dot(&d, &d).sqrt();
            let rad = size * rng.random::<f64>().powf(1.0 / n as f64);
            d.iter_mut().for_each(|v| *v *= rad / l);
            for i in 0..n {
                x[i] = ctr[i] + d[i];
            }
            if !canon.regular_at(&x, 100.0 * h) {
                continue;
            }
            canon.gradient(&x, &mut g);
            let gn = dot(&g, &g).sqrt();
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (canon.eval(&xp) - canon.eval(&xm)) / (2.0 * h);
                worst = worst.max((fd - g[i]).abs() / (gn + canon.amp.abs() / size));
            }
            done += 1;
        }
        worst
    }

    /// Radii in `(r0, r1)` where `u(r·dir) = level`.
    pub fn level_crossings(&self, dir: &[f64], r0: f64, r1: f64, level: f64, out: &mut Vec<f64>) {
        self.canon().level_crossings(dir, r0, r1, level, out)
    }
}

impl Canon {
    fn eval(&self, x: &[f64]) -> f64 {
        let v = match &self.base {
            Base::Affine(a, b) => dot(a, x) + b,
            Base::Radial(c, r) => {
                let t = dist2(x, c) / (r * r);
                if t >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - t)).exp()
                }
            }
            Base::Tensor(c, a) => {
                let mut v = 1.0;
                for i in 0..x.len() {
                    let y = (x[i] - c[i]) / a[i];
                    if y.abs() >= 1.0 {
                        return 0.0;
                    }
                    v *= (1.0 - y * y).powi(2);
                }
                v
            }
            Base::Cone(c, r) => (1.0 - dist2(x, c).sqrt() / r).max(0.0),
        };
        self.amp * v
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        match &self.base {
            Base::Affine(a, _) => g.copy_from_slice(a),
            Base::Radial(c, r) => {
                let t = dist2(x, c) / (r * r);
                if t < 1.0 {
                    let e = (-1.0 / (1.0 - t)).exp();
                    let f = -2.0 * e / (r * r * (1.0 - t) * (1.0 - t));
                    for i in 0..x.len() {
                        g[i] = f * (x[i] - c[i]);
                    }
                }
            }
            Base::Tensor(c, a) => {
                let y: Vec<f64> = (0..x.len()).map(|i| (x[i] - c[i]) / a[i]).collect();
                if y.iter().all(|v| v.abs() < 1.0) {
                    let fac: Vec<f64> = y.iter().map(|v| (1.0 - v * v).powi(2)).collect();
                    for i in 0..x.len() {
                        let mut d = -4.0 * y[i] * (1.0 - y[i] * y[i]) / a[i];
                        for (j, f) in fac.iter().enumerate() {
                            if j != i {
                                d *= f;
                            }
                        }
                        g[i] = d;
                    }
                }
            }
            Base::Cone(c, r) => {
                let d = dist2(x, c).sqrt();
                if d > 0.0 && d < *r {
                    for i in 0..x.len() {
                        g[i] = -(x[i] - c[i]) / (r * d);
                    }
                }
            }
        }
        g.iter_mut().for_each(|v| *v *= self.amp);
    }

    /// Away from kinks and from the rim where bump derivatives blow up numerically.
    fn regular_at(&self, x: &[f64], margin: f64) -> bool {
        match &self.base {
            Base::Affine(..) => true,
            Base::Radial(c, r) => dist2(x, c).sqrt() < 0.9 * r,
            Base::Tensor(c, a) => (0..x.len()).all(|i| ((x[i] - c[i]) / a[i]).abs() < 0.9),
            Base::Cone(c, r) => {
                let d = dist2(x, c).sqrt();
                d > margin && d < r - margin
            }
        }
    }

    fn breaks(&self, d: &[f64], r0: f64, r1: f64, out: &mut Vec<f64>) {
        let start = out.len();
        match &self.base {
            Base::Affine(..) => {}
            Base::Radial(c, r) => sphere_hits(d, c, *r, out),
            Base::Cone(c, r) => {
                sphere_hits(d, c, *r, out);
                out.push(dot(d, c));
            }
            Base::Tensor(c, a) => {
                for i in 0..d.len() {
                    if d[i] != 0.0 {
                        out.push((c[i] - a[i]) / d[i]);
                        out.push((c[i] + a[i]) / d[i]);
                    }
                }
            }
        }
        let mut k = start;
        for i in start..out.len() {
            if out[i] > r0 && out[i] < r1 {
                out[k] = out[i];
                k += 1;
            }
        }
        out.truncate(k);
    }

    fn level_crossings(&self, d: &[f64], r0: f64, r1: f64, level: f64, out: &mut Vec<f64>) {
        let q = level / self.amp;
        match &self.base {
            Base::Affine(a, b) => {
                let s = dot(a, d) * self.amp;
                if s != 0.0 {
                    let r = (level - b * self.amp) / s;
                    if r > r0 && r < r1 {
                        out.push(r);
                    }
                }
            }
            Base::Radial(c, r) if q > 0.0 && q < 1.0 => {
                let t = 1.0 + 1.0 / q.ln();
                if t > 0.0 {
                    let mut v = Vec::new();
                    sphere_hits(d, c, r * t.sqrt(), &mut v);
                    out.extend(v.into_iter().filter(|x| *x > r0 && *x < r1));
                }
            }
            Base::Cone(c, r) if q > 0.0 && q < 1.0 => {
                let mut v = Vec::new();
                sphere_hits(d, c, r * (1.0 - q), &mut v);
                out.extend(v.into_iter().filter(|x| *x > r0 && *x < r1));
            }
            Base::Tensor(..) => {
                // Bracket sign changes on a fine grid between the support breaks, then bisect.
                let mut cuts = vec![r0];
                self.breaks(d, r0, r1, &mut cuts);
                cuts.push(r1);
                cuts.sort_by(|a, b| a.total_cmp(b));
                let mut x = vec![0.0; d.len()];
                let mut f = |r: f64| {
                    for i in 0..d.len() {
                        x[i] = r * d[i];
                    }
                    self.eval(&x) - level
                };
                for w in cuts.windows(2) {
                    let m = 64;
                    let h = (w[1] - w[0]) / m as f64;
                    let mut a = w[0];
                    let mut fa = f(a);
                    for i in 1..=m {
                        let b = w[0] + h * i as f64;
                        let fb = f(b);
                        if fa * fb < 0.0 {
                            let (mut lo, mut hi, mut flo) = (a, b, fa);
                            for _ in 0..60 {
                                let mid = 0.5 * (lo + hi);
                                let fm = f(mid);
                                if fm * flo <= 0.0 {
                                    hi = mid;
                                } else {
                                    lo = mid;
                                    flo = fm;
                                }
                            }
                            out.push(0.5 * (lo + hi));
                        }
                        a = b;
                        fa = fb;
                    }
                }
            }
            _ => {}
        }
    }
}

impl Field for TestFunction {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn axisymmetric(&self) -> bool {
        let c = self.canon();
        let off = |v: &[f64]| v[..v.len() - 1].iter().any(|x| *x != 0.0);
        match &c.base {
            Base::Affine(a, _) => !off(a),
            Base::Radial(ctr, _) | Base::Cone(ctr, _) => !off(ctr),
            Base::Tensor(ctr, _) => ctr.len() == 2 && ctr[0] == 0.0,
        }
    }

    fn ray_breaks(&self, dir: &[f64], r0: f64, r1: f64, out: &mut Vec<f64>) {
        self.canon().breaks(dir, r0, r1, out)
    }
}

/// What a [`Masked`] field returns inside its level band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Show {
    One,
    /// `|u − offset|`
    Value(f64),
    GradNorm,
}

/// `show(u)` on `{lo ⋖ u ⋖ hi}`, zero elsewhere; the band edges are break points.
pub(crate) struct Masked<'a> {
    pub u: &'a TestFunction,
    canon: Canon,
    pub lo: Option<(f64, bool)>,
    pub hi: Option<(f64, bool)>,
    pub show: Show,
}

impl<'a> Masked<'a> {
    pub fn new(u: &'a TestFunction, show: Show) -> Self {
        Self {
            u,
            canon: u.canon(),
            lo: None,
            hi: None,
            show,
        }
    }

    /// Band `{u ≥ lo}` or `{u > lo}`.
    pub fn above(mut self, lo: f64, inclusive: bool) -> Self {
        self.lo = Some((lo, inclusive));
        self
    }

    pub fn below(mut self, hi: f64, inclusive: bool) -> Self {
        self.hi = Some((hi, inclusive));
        self
    }
}

impl Field for Masked<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let v = self.canon.eval(x);
        if let Some((lo, inc)) = self.lo {
            if v < lo || (!inc && v == lo) {
                return 0.0;
            }
        }
        if let Some((hi, inc)) = self.hi {
            if v > hi || (!inc && v == hi) {
                return 0.0;
            }
        }
        match self.show {
            Show::One => 1.0,
            Show::Value(c) => v - c,
            Show::GradNorm => {
                let mut g = vec![0.0; x.len()];
                self.canon.gradient(x, &mut g);
                dot(&g, &g).sqrt()
            }
        }
    }

    fn axisymmetric(&self) -> bool {
        self.u.axisymmetric()
    }

    fn ray_breaks(&self, dir: &[f64], r0: f64, r1: f64, out: &mut Vec<f64>) {
        self.canon.breaks(dir, r0, r1, out);
        if let Show::Value(c) = self.show {
            self.canon.level_crossings(dir, r0, r1, c, out);
        }
        for (l, _) in self.lo.iter().chain(self.hi.iter()) {
            self.canon.level_crossings(dir, r0, r1, *l, out);
        }
    }
}

/// Seeded bumps and cones supported in `B_1(0)` with amplitudes in `[0.5, 2]`.
pub fn random_family(n: usize, count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mut c: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let l = dot(&c, &c).sqrt().max(1e-12);
            let rc = 0.5 * rng.random::<f64>();
            c.iter_mut().for_each(|v| *v *= rc / l);
            let room = 1.0 - rc;
            let r = room * (0.2 + 0.8 * rng.random::<f64>());
            let amp = 0.5 + 1.5 * rng.random::<f64>();
            let u = match i % 3 {
                0 => TestFunction::radial_bump(c, r),
                1 => TestFunction::cone(c, r),
                _ => {
                    let a: Vec<f64> = (0..n).map(|_| 0.5 + 0.5 * rng.random::<f64>()).collect();
                    let s = r / dot(&a, &a).sqrt();
                    TestFunction::tensor_bump(c, a.iter().map(|v| v * s).collect())
                }
            };
            u.scaled(amp)
        })
        .collect()
}
