//! Integration of the weight and of weighted functionals.
//!
//! The weight is homogeneous: in polar coordinates `w(rω) = r^{Σθ} |ω'|^{θ1} |ω_n|^{θ3}`.
//! Integrals are therefore computed as an angular integral of a radial one. For the
//! bare weight the radial part is exact; for `|f|^q w` it is a Gauss–Jacobi integral
//! carrying `r^{k−1}`. The angular integrals are split at every singular direction
//! and at the boundary of the set of directions that hit the region, and each piece
//! is integrated with panels whose Jacobi exponents match the known local power law.

pub mod adapt;
mod mc;
pub mod region;
pub mod rules;

use crate::error::{Error, Result};
use crate::numeric::{linear_fit, log_space, sphere_area, unit_ball_volume};
use crate::weights::WeightParams;
use adapt::{integrate, Est, Seg, Tol};
use region::{meridian_plan, norm, planar_plan, RaySpan};
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::f64::consts::PI;

pub use region::{Ball, Cylinder, Region, Touches, Truncation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    GradedProduct,
    MonteCarloImportance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: usize,
    pub seed: u64,
    pub method: Method,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-300,
            max_evals: 20_000_000,
            seed: 0,
            method: Method::GradedProduct,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_evals < 1000 {
            return Err(Error::InvalidParameter("max_evals must be at least 1000".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub err_est: f64,
    pub evals: usize,
    pub converged: bool,
}

impl QuadResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            err_est: 0.0,
            evals: 0,
            converged: true,
        }
    }
}

/// A scalar field integrated against the weight.
pub trait Field {
    fn value(&self, x: &[f64]) -> f64;

    /// True when the value depends on `x` only through `(|x'|, x_n)`.
    fn axisymmetric(&self) -> bool {
        false
    }

    /// Radii in `(r0, r1)` along `r·dir` where the field is not smooth.
    fn ray_breaks(&self, _dir: &[f64], _r0: f64, _r1: f64, _out: &mut Vec<f64>) {}
}

/// Wraps a closure as a [`Field`] with no symmetry or break information.
pub struct FnField<F>(pub F);

impl<F: Fn(&[f64]) -> f64> Field for FnField<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// The constant field.
pub struct Constant(pub f64);

impl Field for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }

    fn axisymmetric(&self) -> bool {
        true
    }
}

/// Refuses regions whose closure meets a singular set where the exponents are not
/// locally integrable.
pub fn check_integrable(params: &WeightParams, region: &Region) -> Result<()> {
    let t = region.touches();
    let [e1, _, e3] = params.theta;
    let n = params.n as f64;
    if t.axis && e1 <= -(n - 1.0) {
        return Err(Error::DivergentMeasure {
            set: "{x'=0}".into(),
            exponent: e1,
        });
    }
    if t.plane && e3 <= -1.0 {
        return Err(Error::DivergentMeasure {
            set: "{x_n=0}".into(),
            exponent: e3,
        });
    }
    if t.origin && n + params.sum() <= 0.0 {
        return Err(Error::DivergentMeasure {
            set: "origin".into(),
            exponent: params.sum(),
        });
    }
    Ok(())
}

struct Driver<'a> {
    n: usize,
    region: &'a Region,
    e1: f64,
    e3: f64,
    cut: Option<Truncation>,
    outer: Tol,
    inner: Tol,
    evals: Cell<usize>,
    ok: Cell<bool>,
}

fn pw(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        x.powf(e)
    }
}

impl<'a> Driver<'a> {
    fn new(params: &WeightParams, region: &'a Region, cfg: &QuadConfig, cut: Option<Truncation>) -> Self {
        let outer = Tol {
            rel: cfg.rel_tol,
            abs: cfg.abs_tol,
            max_evals: cfg.max_evals,
        };
        let inner = Tol {
            rel: cfg.rel_tol * 0.05,
            abs: cfg.abs_tol * 0.05,
            max_evals: (cfg.max_evals / 20).max(2000),
        };
        Self {
            n: params.n,
            region,
            e1: params.theta[0],
            e3: params.theta[2],
            cut,
            outer,
            inner,
            evals: Cell::new(0),
            ok: Cell::new(true),
        }
    }

    fn sub(&self, e: Est) -> f64 {
        self.evals.set(self.evals.get() + e.evals);
        if !e.converged {
            self.ok.set(false);
        }
        e.value
    }

    fn clip(&self, s: Option<RaySpan>) -> Option<RaySpan> {
        let s = s?;
        match self.cut {
            Some(c) if c.h > 0.0 => {
                let r_max = s.r_max();
                if r_max <= c.h {
                    None
                } else if s.r_min < c.h {
                    Some(RaySpan {
                        r_min: c.h,
                        width: r_max - c.h,
                    })
                } else {
                    Some(s)
                }
            }
            _ => Some(s),
        }
    }

    /// `∫_{S^{n−1}} |ω'|^{e1} |ω_n|^{e3} ray(ω, span(ω)) dω`.
    fn run(&self, symmetric: bool, ray: &mut dyn FnMut(&[f64], RaySpan) -> f64) -> Result<QuadResult> {
        let n = self.n;
        let est = if n == 2 {
            let segs = planar_plan(self.region, self.e1, self.e3, self.cut);
            let mut w = [0.0; 2];
            integrate(
                |phi: f64| {
                    let (s, c) = phi.sin_cos();
                    w = [c, s];
                    match self.clip(self.region.ray(&w)) {
                        None => 0.0,
                        Some(span) => pw(c.abs(), self.e1) * pw(s.abs(), self.e3) * ray(&w, span),
                    }
                },
                &segs,
                self.outer,
            )
        } else {
            let (segs, cone) = meridian_plan(self.region, n, self.e1, self.e3, self.cut);
            let sa = n as f64 - 2.0 + self.e1;
            if self.region.is_axial() && symmetric {
                let area = sphere_area(n - 2);
                let mut w = vec![0.0; n];
                integrate(
                    |psi: f64| {
                        let (s, z) = psi.sin_cos();
                        w[0] = s;
                        w[n - 1] = z;
                        match self.clip(self.region.ray_meridian(s, z)) {
                            None => 0.0,
                            Some(span) => area * pw(s, sa) * pw(z.abs(), self.e3) * ray(&w, span),
                        }
                    },
                    &segs,
                    self.outer,
                )
            } else {
                if n > 9 {
                    return Err(Error::UnsupportedRegion(
                        "off-axis regions are limited to n ≤ 9".into(),
                    ));
                }
                if !symmetric && n > 4 {
                    return Err(Error::UnsupportedRegion(
                        "non-axisymmetric integrands are limited to n ≤ 4".into(),
                    ));
                }
                let basis = frame(self.region, n);
                let s3 = sphere_area(n - 3);
                let mut w = vec![0.0; n];
                integrate(
                    |psi: f64| {
                        let (sp, z) = psi.sin_cos();
                        let (t_hi, partial) = match cone {
                            Some(c) => match c.t_max(psi) {
                                Some(v) => v,
                                None => return 0.0,
                            },
                            None => (PI, false),
                        };
                        let tseg = [Seg::new(0.0, t_hi, 0.0, if partial { 0.5 } else { 0.0 })];
                        let inner = integrate(
                            |t: f64| {
                                let (st, ct) = t.sin_cos();
                                let dir = |nu: &[f64], w: &mut [f64]| {
                                    for i in 0..n - 1 {
                                        let mut v = ct * basis[0][i];
                                        for (j, b) in basis[1..].iter().enumerate() {
                                            v += st * nu[j] * b[i];
                                        }
                                        w[i] = sp * v;
                                    }
                                    w[n - 1] = z;
                                };
                                let mut acc = 0.0;
                                if symmetric || n == 3 {
                                    let signs: &[f64] = if symmetric { &[1.0] } else { &[1.0, -1.0] };
                                    for &sg in signs {
                                        let mut nu = [0.0; 8];
                                        nu[0] = sg;
                                        dir(&nu, &mut w);
                                        if let Some(span) = self.clip(self.region.ray(&w)) {
                                            acc += ray(&w, span);
                                        }
                                    }
                                    if symmetric {
                                        acc *= s3;
                                    }
                                } else {
                                    acc = circle_average(|u: f64| {
                                        let nu = [u.cos(), u.sin()];
                                        dir(&nu, &mut w);
                                        match self.clip(self.region.ray(&w)) {
                                            Some(span) => ray(&w, span),
                                            None => 0.0,
                                        }
                                    }, self.inner.rel) * 2.0 * PI;
                                }
                                pw(st, n as f64 - 3.0) * acc
                            },
                            &tseg,
                            self.inner,
                        );
                        let v = self.sub(inner);
                        pw(sp, sa) * pw(z.abs(), self.e3) * v
                    },
                    &segs,
                    self.outer,
                )
            }
        };
        let evals = self.evals.get() + est.evals;
        let converged = est.converged && self.ok.get();
        Ok(QuadResult {
            value: est.value,
            err_est: est.err,
            evals,
            converged,
        })
    }
}

/// Mean of a smooth 2π-periodic function by the trapezoid rule, doubling until stable.
fn circle_average<F: FnMut(f64) -> f64>(mut f: F, rel: f64) -> f64 {
    let mut m = 8usize;
    let mut sum: f64 = (0..m).map(|i| f(2.0 * PI * i as f64 / m as f64)).sum();
    let mut prev = sum / m as f64;
    while m < 1024 {
        let add: f64 = (0..m)
            .map(|i| f(2.0 * PI * (i as f64 + 0.5) / m as f64))
            .sum();
        sum += add;
        m *= 2;
        let cur = sum / m as f64;
        if (cur - prev).abs() <= rel * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Orthonormal frame of x'-space; the first vector points to the region's center.
fn frame(region: &Region, n: usize) -> Vec<Vec<f64>> {
    let d = n - 1;
    let mut first = vec![0.0; d];
    match region {
        Region::Ball(b) if !region.is_axial() => {
            let a = norm(&b.center[..d]);
            for i in 0..d {
                first[i] = b.center[i] / a;
            }
        }
        _ => first[0] = 1.0,
    }
    let mut out = vec![first];
    for k in 0..d {
        if out.len() == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for u in &out {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for i in 0..d {
                v[i] -= dot * u[i];
            }
        }
        let l = norm(&v);
        if l > 1e-8 {
            out.push(v.into_iter().map(|x| x / l).collect());
        }
    }
    out
}

fn radial_weight(k: f64) -> impl FnMut(&[f64], RaySpan) -> f64 {
    move |_w, span| {
        if span.r_min == 0.0 {
            span.width.powf(k) / k
        } else {
            width_form(span, k)
        }
    }
}

/// `∫_{a}^{a+w} r^{k−1} dr` through `a^k expm1(k ln1p(w/a))/k`.
fn width_form(span: RaySpan, k: f64) -> f64 {
    let a = span.r_min;
    let l = (span.width / a).ln_1p();
    if (k * l).abs() < 1e-12 {
        a.powf(k) * l
    } else {
        a.powf(k) * (k * l).exp_m1() / k
    }
}

/// `∫_region w dx`.
pub fn integrate_weight(params: &WeightParams, region: &Region, cfg: &QuadConfig) -> Result<QuadResult> {
    cfg.validate()?;
    region.validate(params.n)?;
    check_integrable(params, region)?;
    if region.is_empty() {
        return Ok(QuadResult::zero());
    }
    match cfg.method {
        Method::GradedProduct => {
            let k = params.homogeneous_dim();
            Driver::new(params, region, cfg, None).run(true, &mut radial_weight(k))
        }
        Method::MonteCarloImportance => mc::integrate(params, region, None, cfg),
    }
}

/// `∫_region w dx` with `δ`-neighbourhoods of singular directions and an `h`-ball
/// around the origin removed. Only singular sets where the exponent is negative
/// are cut, so the result increases to the full integral as the cut shrinks.
pub fn integrate_weight_truncated(
    params: &WeightParams,
    region: &Region,
    cut: Truncation,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    cfg.validate()?;
    region.validate(params.n)?;
    if region.is_empty() {
        return Ok(QuadResult::zero());
    }
    let cut = Truncation {
        delta: cut.delta,
        h: if params.sum() < 0.0 { cut.h } else { 0.0 },
    };
    let k = params.homogeneous_dim();
    Driver::new(params, region, cfg, Some(cut)).run(true, &mut radial_weight(k))
}

/// `∫_region |f|^power w dx`.
pub fn integrate_weighted_function(
    params: &WeightParams,
    f: &dyn Field,
    power: f64,
    region: &Region,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(power > 0.0) {
        return Err(Error::InvalidParameter(format!("power must be positive, got {power}")));
    }
    let map = |v: f64| {
        let v = v.abs();
        if power == 1.0 {
            v
        } else if power == 2.0 {
            v * v
        } else if v == 0.0 {
            0.0
        } else {
            v.powf(power)
        }
    };
    weighted(params, f, &map, region, cfg)
}

/// `∫_region f w dx` for a signed field.
pub fn integrate_weighted_signed(
    params: &WeightParams,
    f: &dyn Field,
    region: &Region,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    weighted(params, f, &|v| v, region, cfg)
}

fn weighted(
    params: &WeightParams,
    f: &dyn Field,
    map: &dyn Fn(f64) -> f64,
    region: &Region,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    cfg.validate()?;
    region.validate(params.n)?;
    check_integrable(params, region)?;
    if region.is_empty() {
        return Ok(QuadResult::zero());
    }
    if cfg.method == Method::MonteCarloImportance {
        return mc::integrate(params, region, Some((f, map)), cfg);
    }
    let k = params.homogeneous_dim();
    let n = params.n;
    let driver = Driver::new(params, region, cfg, None);
    let inner = driver.inner;
    let evals = Cell::new(0usize);
    let ok = Cell::new(true);
    let mut x = vec![0.0; n];
    let mut breaks = Vec::new();
    let mut ray = |w: &[f64], span: RaySpan| -> f64 {
        let r0 = span.r_min;
        let r1 = span.r_max();
        breaks.clear();
        f.ray_breaks(w, r0, r1, &mut breaks);
        breaks.retain(|&b| b > r0 && b < r1);
        breaks.sort_by(|a, b| a.total_cmp(b));
        breaks.dedup();
        let mut segs = Vec::with_capacity(breaks.len() + 1);
        let mut a = r0;
        let ea0 = if r0 == 0.0 { k - 1.0 } else { 0.0 };
        for &b in breaks.iter().chain(std::iter::once(&r1)) {
            segs.push(Seg::new(a, b, if a == 0.0 { ea0 } else { 0.0 }, 0.0));
            a = b;
        }
        let e = integrate(
            |r: f64| {
                for i in 0..n {
                    x[i] = r * w[i];
                }
                let vp = map(f.value(&x));
                if vp == 0.0 {
                    0.0
                } else {
                    pw(r, k - 1.0) * vp
                }
            },
            &segs,
            inner,
        );
        evals.set(evals.get() + e.evals);
        if !e.converged {
            ok.set(false);
        }
        e.value
    };
    let mut res = driver.run(f.axisymmetric(), &mut ray)?;
    res.evals += evals.get();
    res.converged &= ok.get();
    Ok(res)
}

/// `∫_{B'_ρ(0')} |x'|^{θ1} dx' = (n−1) ω_{n−1} ρ^{n−1+θ1} / (n−1+θ1)`.
pub fn exact_prime_ball(theta1: f64, n: usize, rho: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be ≥ 2, got {n}")));
    }
    let d = n as f64 - 1.0;
    if !(theta1 > -d) {
        return Err(Error::DivergentMeasure {
            set: "{x'=0}".into(),
            exponent: theta1,
        });
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {rho}")));
    }
    Ok(d * unit_ball_volume(n - 1) / (d + theta1) * rho.powf(d + theta1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub radii: Vec<f64>,
    pub measures: Vec<f64>,
}

/// Least-squares slope of `log μ(B_r(0))` against `log r`.
pub fn mu_scaling_exponent(
    params: &WeightParams,
    r_min: f64,
    r_max: f64,
    num_radii: usize,
    cfg: &QuadConfig,
) -> Result<ScalingFit> {
    if !(r_min > 0.0 && r_max > r_min) || num_radii < 3 {
        return Err(Error::InvalidParameter(
            "need 0 < r_min < r_max and at least 3 radii".into(),
        ));
    }
    let radii = log_space(r_min, r_max, num_radii);
    let mut measures = Vec::with_capacity(num_radii);
    for &r in &radii {
        let q = integrate_weight(params, &Ball::centered(params.n, r).into(), cfg)?;
        measures.push(q.value);
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = measures.iter().map(|m| m.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&lx, &ly);
    Ok(ScalingFit {
        slope,
        intercept,
        residual,
        radii,
        measures,
    })
}

#[cfg(test)]
mod tests;
