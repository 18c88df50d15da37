//! A_p quotients and doubling ratios over ball families.
//!
//! Quotients that cannot be finite (a factor's weight is not locally integrable on
//! the closed ball) are reported as `f64::INFINITY`.

use crate::error::{Error, Result};
use crate::numeric::{log_space, unit_ball_volume};
use crate::quad::{integrate_weight, integrate_weight_truncated, Ball, QuadConfig, Region, Truncation};
use crate::weights::WeightParams;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

/// Where a family member's center sits relative to the singular sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CenterKind {
    Origin,
    /// On `{x' = 0}` at height `f·R`.
    Axis { f: f64 },
    /// On `{x_n = 0}` at distance `g·R` from the axis.
    Plane { g: f64 },
    /// `|x̄_n| = f·R`, `|x̄'| = g·R`.
    Generic { f: f64, g: f64 },
}

const DIST: [f64; 3] = [0.5, 3.0, 10.0];

fn kinds() -> Vec<CenterKind> {
    use CenterKind::*;
    let mut k = vec![Origin];
    k.extend(DIST.iter().map(|&f| Axis { f }));
    k.extend(DIST.iter().map(|&g| Plane { g }));
    // The first twelve kinds already cover every regime of the |x̄_n| ⋚ 3R, |x̄| ⋚ 3R split.
    for &(f, g) in &[(0.5, 0.5), (3.0, 0.5), (0.5, 3.0), (3.0, 3.0), (10.0, 10.0)] {
        k.push(Generic { f, g });
    }
    for &f in &DIST {
        for &g in &DIST {
            if !k.contains(&Generic { f, g }) {
                k.push(Generic { f, g });
            }
        }
    }
    k
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub balls: Vec<Ball>,
    pub kinds: Vec<CenterKind>,
    pub description: String,
}

/// Deterministic family: center kinds cycle through origin, axis, plane and generic
/// placements at distances `{R/2, 3R, 10R}`; radii are log-spaced over `[r_min, r_max]`
/// and dealt to balls by a seeded shuffle.
pub fn adversarial_family(
    params: &WeightParams,
    count: usize,
    r_min: f64,
    r_max: f64,
    seed: u64,
) -> Result<BallFamily> {
    if count < 12 {
        return Err(Error::InvalidParameter(format!("family needs at least 12 balls, got {count}")));
    }
    if !(r_min > 0.0 && r_max >= r_min && r_max.is_finite()) {
        return Err(Error::InvalidParameter("need 0 < r_min <= r_max".into()));
    }
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radii = if r_max > r_min {
        log_space(r_min, r_max, count)
    } else {
        vec![r_min; count]
    };
    radii.shuffle(&mut rng);
    let ks = kinds();
    let mut balls = Vec::with_capacity(count);
    let mut kind_list = Vec::with_capacity(count);
    for (i, &r) in radii.iter().enumerate() {
        let kind = ks[i % ks.len()];
        let mut e = vec![0.0; n - 1];
        loop {
            for v in e.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let s = e.iter().map(|v| v * v).sum::<f64>().sqrt();
            if s > 1e-6 {
                e.iter_mut().for_each(|v| *v /= s);
                break;
            }
        }
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let (f, g) = match kind {
            CenterKind::Origin => (0.0, 0.0),
            CenterKind::Axis { f } => (f, 0.0),
            CenterKind::Plane { g } => (0.0, g),
            CenterKind::Generic { f, g } => (f, g),
        };
        let mut c: Vec<f64> = e.iter().map(|v| v * g * r).collect();
        c.push(sign * f * r);
        balls.push(Ball::new(c, r));
        kind_list.push(kind);
    }
    Ok(BallFamily {
        balls,
        kinds: kind_list,
        description: format!(
            "n={n} count={count} radii=log[{r_min:e},{r_max:e}] seed={seed} kinds={} distances={DIST:?}",
            ks.len()
        ),
    })
}

fn full_ball(ball: &Ball) -> Result<()> {
    if ball.half {
        return Err(Error::InvalidParameter("A_p quotients use full balls".into()));
    }
    Ok(())
}

fn volume(ball: &Ball) -> f64 {
    unit_ball_volume(ball.center.len()) * ball.radius.powi(ball.center.len() as i32)
}

/// `(avg_B w)(avg_B w^{−1/(p−1)})^{p−1}`, or `INFINITY` when a factor diverges.
pub fn ap_quotient(params: &WeightParams, p: f64, ball: &Ball, cfg: &QuadConfig) -> Result<f64> {
    full_ball(ball)?;
    let dual = params.dual(p)?;
    let region: Region = ball.clone().into();
    let vol = volume(ball);
    let avg = |w: &WeightParams| -> Result<Option<f64>> {
        match integrate_weight(w, &region, cfg) {
            Ok(q) => Ok(Some(q.value / vol)),
            Err(Error::DivergentMeasure { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    match (avg(params)?, avg(&dual)?) {
        (Some(a), Some(b)) => Ok(a * b.powf(p - 1.0)),
        _ => Ok(f64::INFINITY),
    }
}

/// `μ(B_{2R}(x̄)) / μ(B_R(x̄))`.
pub fn doubling_ratio(params: &WeightParams, ball: &Ball, cfg: &QuadConfig) -> Result<f64> {
    full_ball(ball)?;
    let small = integrate_weight(params, &ball.clone().into(), cfg)?;
    let big = integrate_weight(params, &ball.scaled(2.0).into(), cfg)?;
    Ok(big.value / small.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub levels: usize,
    /// Divergent when each of the last two growth factors reaches this.
    pub growth_threshold: f64,
    /// Divergent when the last two increments do not shrink below this ratio
    /// (logarithmic blow-up).
    pub increment_ratio: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            levels: 5,
            growth_threshold: 2.0,
            increment_ratio: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// Truncation radius at each level, relative to the ball radius.
    pub cutoffs: Vec<f64>,
    pub estimates: Vec<f64>,
    pub growth: Vec<f64>,
    pub divergent: bool,
}

/// A_p quotient with singular neighbourhoods of size `4^{−L}` removed, `L = 1..=levels`.
pub fn divergence_probe(
    params: &WeightParams,
    p: f64,
    ball: &Ball,
    probe: &ProbeConfig,
    cfg: &QuadConfig,
) -> Result<ProbeReport> {
    full_ball(ball)?;
    if probe.levels < 3 {
        return Err(Error::InvalidParameter("divergence probe needs at least 3 levels".into()));
    }
    let dual = params.dual(p)?;
    let region: Region = ball.clone().into();
    let vol = volume(ball);
    let mut cutoffs = Vec::new();
    let mut estimates = Vec::new();
    for l in 1..=probe.levels {
        let s = 4f64.powi(-(l as i32));
        let cut = Truncation {
            delta: FRAC_PI_4 * s,
            h: ball.radius * s,
        };
        let a = integrate_weight_truncated(params, &region, cut, cfg)?.value / vol;
        let b = integrate_weight_truncated(&dual, &region, cut, cfg)?.value / vol;
        cutoffs.push(s);
        estimates.push(a * b.powf(p - 1.0));
    }
    let growth: Vec<f64> = estimates.windows(2).map(|w| w[1] / w[0]).collect();
    let g = growth.len();
    let by_growth = growth[g - 2..].iter().all(|&x| x >= probe.growth_threshold);
    let inc: Vec<f64> = estimates.windows(2).map(|w| w[1] - w[0]).collect();
    let last = *estimates.last().unwrap();
    let k = inc.len();
    let by_log = inc[k - 2..].iter().all(|&d| d > 1e-3 * last)
        && inc[k - 1] >= probe.increment_ratio * inc[k - 2];
    Ok(ProbeReport {
        cutoffs,
        estimates,
        growth,
        divergent: by_growth || by_log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallResult {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Value at the finest level; `INFINITY` marks a divergent factor, `NaN` a failure.
    pub value: f64,
    pub coarse: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub results: Vec<BallResult>,
    pub sup: f64,
    pub min: f64,
    pub argmax: Option<usize>,
    /// `|sup_fine − sup_coarse| / sup_fine` over balls with finite values.
    pub refinement_stability: f64,
    pub diverged: bool,
    pub probe: Option<ProbeReport>,
    /// Balls whose finite value fell below `1 − 4·rel_tol` (A_p) or `1` (doubling).
    pub faults: Vec<usize>,
    pub rel_tol: f64,
}

fn scan(
    family: &BallFamily,
    cfg: &QuadConfig,
    kernel: impl Fn(&Ball, &QuadConfig) -> Result<f64>,
    floor: f64,
) -> Result<ScanReport> {
    if family.balls.is_empty() {
        return Err(Error::InvalidParameter("empty ball family".into()));
    }
    let coarse_cfg = cfg.with_rel_tol((cfg.rel_tol * 10.0).min(1e-2));
    let mut results = Vec::with_capacity(family.balls.len());
    for ball in &family.balls {
        let fine = kernel(ball, cfg);
        let coarse = kernel(ball, &coarse_cfg);
        let (value, error) = match fine {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        results.push(BallResult {
            center: ball.center.clone(),
            radius: ball.radius,
            value,
            coarse: coarse.unwrap_or(f64::NAN),
            error,
        });
    }
    let mut sup = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut argmax = None;
    let (mut sf, mut sc) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut faults = Vec::new();
    for (i, r) in results.iter().enumerate() {
        if r.value.is_nan() {
            continue;
        }
        if r.value > sup {
            sup = r.value;
            argmax = Some(i);
        }
        min = min.min(r.value);
        if r.value.is_finite() {
            sf = sf.max(r.value);
            sc = sc.max(r.coarse);
            if r.value < floor {
                faults.push(i);
            }
        }
    }
    let refinement_stability = if sf.is_finite() && sf > 0.0 {
        (sf - sc).abs() / sf
    } else {
        f64::NAN
    };
    Ok(ScanReport {
        results,
        sup,
        min,
        argmax,
        refinement_stability,
        diverged: false,
        probe: None,
        faults,
        rel_tol: cfg.rel_tol,
    })
}

/// A_p quotients over `family`. A divergent ball is confirmed by the truncation probe.
pub fn ap_scan(
    params: &WeightParams,
    p: f64,
    family: &BallFamily,
    probe: &ProbeConfig,
    cfg: &QuadConfig,
) -> Result<ScanReport> {
    params.dual(p)?;
    let mut rep = scan(family, cfg, |b, c| ap_quotient(params, p, b, c), 1.0 - 4.0 * cfg.rel_tol)?;
    if let Some(i) = rep.results.iter().position(|r| r.value == f64::INFINITY) {
        let pr = divergence_probe(params, p, &family.balls[i], probe, cfg)?;
        rep.diverged = pr.divergent;
        rep.probe = Some(pr);
    }
    Ok(rep)
}

/// Doubling ratios over `family`; every ratio must exceed 1.
pub fn doubling_scan(params: &WeightParams, family: &BallFamily, cfg: &QuadConfig) -> Result<ScanReport> {
    if !crate::weights::is_radon(params) {
        return Err(Error::Inadmissible(format!(
            "θ = {:?} does not define a Radon measure in n = {}",
            params.theta, params.n
        )));
    }
    scan(family, cfg, |b, c| doubling_ratio(params, b, c), 1.0)
}
