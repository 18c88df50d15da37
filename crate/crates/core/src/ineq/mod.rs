//! Weighted Sobolev, Poincaré and isoperimetric quotients on analytic test functions.
//!
//! Nothing here estimates sharp constants; every check reports both sides and
//! their ratio so that boundedness and scaling can be inspected.

mod testfn;

pub use testfn::{random_family, TestFunction};

use crate::error::{Error, Result};
use crate::quad::{
    integrate_weight, integrate_weighted_function, integrate_weighted_signed, Ball, Field, QuadConfig, Region,
};
use crate::weights::{chi_exponent, regions, WeightParams};
use serde::{Deserialize, Serialize};
use testfn::{Masked, Show};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "kebab-case")]
pub enum Ratio {
    Value(f64),
    /// `0/0`
    Indeterminate,
    /// positive over zero
    Infinite,
}

impl Ratio {
    pub fn of(lhs: f64, rhs: f64) -> Self {
        if rhs > 0.0 {
            Ratio::Value(lhs / rhs)
        } else if lhs == 0.0 {
            Ratio::Indeterminate
        } else {
            Ratio::Infinite
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IneqReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Ratio,
    pub normalization: String,
}

impl IneqReport {
    fn new(lhs: f64, rhs: f64, normalization: String) -> Self {
        Self {
            lhs,
            rhs,
            ratio: Ratio::of(lhs, rhs),
            normalization,
        }
    }
}

fn check_u(params: &WeightParams, u: &TestFunction) -> Result<()> {
    u.validate(params.n)
}

fn full(ball: &Ball, n: usize) -> Result<()> {
    if ball.half || ball.center.len() != n {
        return Err(Error::InvalidParameter("expected a full ball in R^n".into()));
    }
    Ok(())
}

/// The support ball when it lies inside `ball`, else `ball`.
fn domain(u: &TestFunction, ball: &Ball) -> Region {
    match u.support() {
        Some(s) if inside(&s, ball) => s.into(),
        _ => ball.clone().into(),
    }
}

fn inside(s: &Ball, b: &Ball) -> bool {
    let d: f64 = s
        .center
        .iter()
        .zip(&b.center)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    d + s.radius <= b.radius * (1.0 + 1e-12)
}

fn int(params: &WeightParams, f: &dyn Field, q: f64, region: &Region, cfg: &QuadConfig) -> Result<f64> {
    Ok(integrate_weighted_function(params, f, q, region, cfg)?.value)
}

/// `‖u‖_{L^{pχ}(w)} / ‖∇u‖_{L^p(w)}` with χ from the homogeneous dimension.
pub fn sobolev_ratio(
    params: &WeightParams,
    p: f64,
    u: &TestFunction,
    ball: &Ball,
    cfg: &QuadConfig,
) -> Result<IneqReport> {
    let chi = chi_exponent(params, p)?;
    sobolev_ratio_with_chi(params, p, chi, u, ball, cfg)
}

/// As [`sobolev_ratio`] with an explicit gain exponent.
pub fn sobolev_ratio_with_chi(
    params: &WeightParams,
    p: f64,
    chi: f64,
    u: &TestFunction,
    ball: &Ball,
    cfg: &QuadConfig,
) -> Result<IneqReport> {
    check_u(params, u)?;
    full(ball, params.n)?;
    if !(p > 1.0 && chi > 1.0) {
        return Err(Error::InvalidParameter(format!("need p > 1 and χ > 1, got p={p}, χ={chi}")));
    }
    let region = match u.support() {
        Some(s) if inside(&s, ball) => Region::from(s),
        Some(_) => {
            return Err(Error::InvalidParameter("test function support leaves the ball".into()));
        }
        None if u.eval(&ball.center) == 0.0 && u.gradient_norm(&ball.center) == 0.0 => ball.clone().into(),
        None => return Err(Error::InvalidParameter("test function is not compactly supported".into())),
    };
    let q = p * chi;
    let lhs = int(params, u, q, &region, cfg)?.powf(1.0 / q);
    let rhs = int(params, &Masked::new(u, Show::GradNorm), p, &region, cfg)?.powf(1.0 / p);
    Ok(IneqReport::new(lhs, rhs, format!("L^{q} norm over L^{p} gradient norm, χ = {chi}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationReport {
    pub chi: f64,
    pub scales: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max |ratio(u_λ)/ratio(u) − 1|`
    pub deviation: f64,
}

/// Sobolev ratio of `u(λx)` over its own support ball, for each λ in `scales`.
pub fn dilation_invariance_check(
    params: &WeightParams,
    p: f64,
    chi: Option<f64>,
    u: &TestFunction,
    scales: &[f64],
    cfg: &QuadConfig,
) -> Result<DilationReport> {
    let chi = match chi {
        Some(c) => c,
        None => chi_exponent(params, p)?,
    };
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameter("scales must be positive".into()));
    }
    let ratio = |lam: f64| -> Result<f64> {
        let ul = u.clone().dilated(lam);
        let b = ul
            .support()
            .ok_or_else(|| Error::InvalidParameter("dilation check needs a compactly supported u".into()))?;
        sobolev_ratio_with_chi(params, p, chi, &ul, &b, cfg)?
            .ratio
            .value()
            .ok_or_else(|| Error::InvalidParameter("degenerate test function".into()))
    };
    let base = ratio(1.0)?;
    let mut ratios = Vec::with_capacity(scales.len());
    let mut deviation: f64 = 0.0;
    for &s in scales {
        let r = if s == 1.0 { base } else { ratio(s)? };
        deviation = deviation.max((r / base - 1.0).abs());
        ratios.push(r);
    }
    Ok(DilationReport {
        chi,
        scales: scales.to_vec(),
        ratios,
        deviation,
    })
}

/// `u_B = (1/μ(B)) ∫_B u dμ`.
pub fn mu_average(params: &WeightParams, u: &TestFunction, ball: &Ball, cfg: &QuadConfig) -> Result<f64> {
    check_u(params, u)?;
    if let Some(c) = u.as_constant() {
        return Ok(c);
    }
    let region: Region = ball.clone().into();
    let m = integrate_weight(params, &region, cfg)?.value;
    let dom = domain(u, ball);
    let f = Masked::new(u, Show::Value(0.0));
    // Cancellation can make the signed integral tiny; measure error against ∫|u| dμ.
    let mass = int(params, &f, 1.0, &dom, cfg)?;
    let mut c = *cfg;
    c.abs_tol = c.abs_tol.max(cfg.rel_tol * mass);
    let s = integrate_weighted_signed(params, &f, &dom, &c)?.value;
    Ok(s / m)
}

/// `∫_B |u − c|^{p̃} dμ`.
pub fn poincare_lhs(
    params: &WeightParams,
    p_tilde: f64,
    u: &TestFunction,
    ball: &Ball,
    offset: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    check_u(params, u)?;
    int(params, &Masked::new(u, Show::Value(offset)), p_tilde, &ball.clone().into(), cfg)
}

/// `∫_B |u − u_B|^{p̃} dμ` against `R^{p̃} ∫_B |∇u|^{p̃} dμ`.
pub fn poincare_weighted_ratio(
    params: &WeightParams,
    p_tilde: f64,
    u: &TestFunction,
    ball: &Ball,
    cfg: &QuadConfig,
) -> Result<IneqReport> {
    full(ball, params.n)?;
    if !(p_tilde > 1.0) {
        return Err(Error::InvalidParameter(format!("need p̃ > 1, got {p_tilde}")));
    }
    let ub = mu_average(params, u, ball, cfg)?;
    let lhs = poincare_lhs(params, p_tilde, u, ball, ub, cfg)?;
    let g = int(params, &Masked::new(u, Show::GradNorm), p_tilde, &domain(u, ball), cfg)?;
    let r = ball.radius;
    Ok(IneqReport::new(lhs, r.powf(p_tilde) * g, format!("R^{p_tilde} with R = {r}")))
}

/// `∫_{B_R} |u − u_B| dμ` against `R^{1+Σθ} ∫_{B_R} |∇u| dx` for θ ∈ ℱ_{p0} ∪ 𝒢_{p0}.
pub fn poincare_mixed_ratio(
    params: &WeightParams,
    p0: f64,
    u: &TestFunction,
    r: f64,
    cfg: &QuadConfig,
) -> Result<IneqReport> {
    if !(p0 > 1.0 && r > 0.0) {
        return Err(Error::InvalidParameter(format!("need p0 > 1 and R > 0, got {p0}, {r}")));
    }
    let f = regions::set_f(params, p0);
    let g = regions::set_g(params, p0);
    if !(regions::contains(&f) || regions::contains(&g)) {
        let first = |c: &[crate::weights::Condition]| {
            c.iter().find(|c| !c.holds()).map(|c| c.to_string()).unwrap_or_default()
        };
        return Err(Error::Inadmissible(format!(
            "θ = {:?} is outside ℱ_{p0} ({}) and 𝒢_{p0} ({})",
            params.theta,
            first(&f),
            first(&g)
        )));
    }
    let ball = Ball::centered(params.n, r);
    let ub = mu_average(params, u, &ball, cfg)?;
    let lhs = poincare_lhs(params, 1.0, u, &ball, ub, cfg)?;
    let flat = WeightParams::new([0.0; 3], params.n)?;
    let grad = int(&flat, &Masked::new(u, Show::GradNorm), 1.0, &domain(u, &ball), cfg)?;
    let e = 1.0 + params.sum();
    Ok(IneqReport::new(lhs, r.powf(e) * grad, format!("R^{e} with R = {r}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoReport {
    /// `μ({u ≥ l} ∩ B)`
    pub above: f64,
    /// `μ({u ≤ k} ∩ B)`
    pub below: f64,
    /// `∫_{{k<u<l} ∩ B} |∇u|^{p̃} w`
    pub between_grad: f64,
    /// `(l−k)^{p̃} above^{p̃} below`
    pub upper_lhs: f64,
    /// `(l−k)^{p̃} below^{p̃} above`
    pub lower_lhs: f64,
    /// `R^{p̃(n+Σθ+1)} · between_grad`
    pub rhs: f64,
    pub upper_ratio: Ratio,
    pub lower_ratio: Ratio,
}

/// Both sides of the two level-set isoperimetric inequalities on `ball`.
#[allow(clippy::too_many_arguments)]
pub fn isoperimetric_check(
    params: &WeightParams,
    p: f64,
    p_tilde: f64,
    u: &TestFunction,
    ball: &Ball,
    k: f64,
    l: f64,
    cfg: &QuadConfig,
) -> Result<IsoReport> {
    check_u(params, u)?;
    full(ball, params.n)?;
    if !(l > k) {
        return Err(Error::InvalidParameter(format!("need l > k, got k={k}, l={l}")));
    }
    if !(p_tilde > 1.0 && p_tilde < p) {
        return Err(Error::InvalidParameter(format!("need 1 < p̃ < p, got p̃={p_tilde}, p={p}")));
    }
    let region: Region = ball.clone().into();
    let above = int(params, &Masked::new(u, Show::One).above(l, true), 1.0, &region, cfg)?;
    let below = int(params, &Masked::new(u, Show::One).below(k, true), 1.0, &region, cfg)?;
    let band = Masked::new(u, Show::GradNorm).above(k, false).below(l, false);
    let between_grad = int(params, &band, p_tilde, &region, cfg)?;
    let d = (l - k).powf(p_tilde);
    let upper_lhs = d * above.powf(p_tilde) * below;
    let lower_lhs = d * below.powf(p_tilde) * above;
    let rhs = ball.radius.powf(p_tilde * (params.homogeneous_dim() + 1.0)) * between_grad;
    Ok(IsoReport {
        above,
        below,
        between_grad,
        upper_lhs,
        lower_lhs,
        rhs,
        upper_ratio: Ratio::of(upper_lhs, rhs),
        lower_ratio: Ratio::of(lower_lhs, rhs),
    })
}
