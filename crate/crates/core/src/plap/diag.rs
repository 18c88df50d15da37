//! Regularity diagnostics: decay at the origin, oscillation, Hölder moduli and
//! De Giorgi level-set profiles.

use super::moments::clip_level;
use super::{DiscreteField, MeshMode, ScalarField};
use crate::error::{Error, Result};
use crate::numeric::{linear_fit, log_space};
use crate::quad::QuadConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Sanity window for fitted exponents.
pub const ALPHA_WINDOW: (f64, f64) = (0.0, 1.5);

const DECAY_RADII: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// `sup_{B_R⁺}|u| ≈ C R^α`.
    OriginDecay,
    /// `max |u(x)−u(y)| ≈ C |x−y|^α` over sampled pairs.
    PairwiseHolder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub mode: FitMode,
    pub alpha: f64,
    pub prefactor: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub in_window: bool,
}

impl DecayFit {
    fn from_points(mode: FitMode, radii: Vec<f64>, values: Vec<f64>) -> Self {
        let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let (alpha, icpt, residual) = linear_fit(&lx, &ly);
        Self {
            mode,
            alpha,
            prefactor: icpt.exp(),
            residual,
            radii,
            values,
            in_window: alpha > ALPHA_WINDOW.0 && alpha < ALPHA_WINDOW.1,
        }
    }
}

/// Least-squares exponent of `sup_{B_R⁺}|u|` against `R` over 12 log-spaced radii in
/// `[r_min, r_max]`. Radii below the field's resolution or with zero supremum are
/// skipped.
pub fn decay_fit(field: &dyn ScalarField, r_min: f64, r_max: f64) -> Result<DecayFit> {
    if !(r_min > 0.0 && r_max > r_min && r_max <= field.domain_radius()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r_min < r_max ≤ R, got [{r_min}, {r_max}]"
        )));
    }
    let mut radii = Vec::new();
    let mut values = Vec::new();
    let mut all_zero = true;
    for r in log_space(r_min, r_max, DECAY_RADII) {
        if r < field.resolution() {
            continue;
        }
        let v = field.sup_abs_in(r);
        if v > 0.0 {
            all_zero = false;
            radii.push(r);
            values.push(v);
        }
    }
    if all_zero {
        return Err(Error::InsufficientData("the field vanishes on every radius".into()));
    }
    if radii.len() < 4 {
        return Err(Error::InsufficientData(format!("{} usable radii, need 4", radii.len())));
    }
    Ok(DecayFit::from_points(FitMode::OriginDecay, radii, values))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationProfile {
    pub radii: Vec<f64>,
    pub omega: Vec<f64>,
    /// Log-log fit of `ω` against `R`, when at least two oscillations are positive.
    pub fit: Option<DecayFit>,
    /// `ω` is nonincreasing as `R` decreases.
    pub monotone: bool,
}

/// `ω(R) = sup − inf` over `B_R⁺` for strictly decreasing radii in `(0, R_0/2]`.
pub fn oscillation_profile(field: &dyn ScalarField, radii: &[f64]) -> Result<OscillationProfile> {
    if radii.is_empty() {
        return Err(Error::InsufficientData("no radii".into()));
    }
    let half = 0.5 * field.domain_radius();
    for (i, &r) in radii.iter().enumerate() {
        if !(r > 0.0 && r <= half * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("radius {r} outside (0, R/2]")));
        }
        if i > 0 && r >= radii[i - 1] {
            return Err(Error::InvalidParameter("radii must be strictly decreasing".into()));
        }
        if r < field.resolution() {
            return Err(Error::InvalidParameter(format!(
                "radius {r} is below the mesh resolution {}",
                field.resolution()
            )));
        }
    }
    let omega: Vec<f64> = radii.iter().map(|&r| field.osc_in(r)).collect();
    let monotone = omega.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
    let (pr, po): (Vec<f64>, Vec<f64>) = radii.iter().zip(&omega).filter(|(_, &o)| o > 0.0).unzip();
    let fit = (pr.len() >= 2).then(|| DecayFit::from_points(FitMode::OriginDecay, pr, po));
    Ok(OscillationProfile {
        radii: radii.to_vec(),
        omega,
        fit,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairClass {
    Random,
    /// One point at the origin.
    Origin,
    /// The segment crosses the singular set `{x' = 0}`.
    Straddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderBin {
    pub d_lo: f64,
    pub d_hi: f64,
    pub count: usize,
    pub max_ratio: f64,
    pub max_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub exponent: f64,
    /// `sup |u(x)−u(y)| / |x−y|^exponent` over the sampled pairs.
    pub modulus: f64,
    pub pairs: usize,
    /// Pair class and separation attaining the supremum.
    pub argmax: Option<(PairClass, f64)>,
    pub bins: Vec<HolderBin>,
    /// Slope of log(per-bin maximal quotient) against log(separation).
    pub divergence_slope: f64,
    /// The quotient grows as the separation shrinks.
    pub divergent: bool,
    pub fit: Option<DecayFit>,
}

const HOLDER_BINS: usize = 8;
const SEPARATION_SPAN: f64 = 1e-4;
const DIVERGENCE_SLOPE: f64 = -0.02;

/// Hölder quotient at `exponent` over `pair_count` seeded pairs in `B⁺_{R/8}`,
/// cycling through random pairs, pairs with the origin and pairs straddling `{x' = 0}`.
pub fn holder_modulus(field: &dyn ScalarField, exponent: f64, pair_count: usize, seed: u64) -> Result<HolderReport> {
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(Error::InvalidParameter(format!("exponent must lie in (0, 1), got {exponent}")));
    }
    let mode = field.mode();
    let rho = field.domain_radius() / 8.0;
    let open = mode.opening();
    let (d_min, d_max) = (rho * SEPARATION_SPAN, 2.0 * rho);
    let edges = log_space(d_min, d_max, HOLDER_BINS + 1);
    let mut bins: Vec<HolderBin> = edges
        .windows(2)
        .map(|w| HolderBin {
            d_lo: w[0],
            d_hi: w[1],
            count: 0,
            max_ratio: 0.0,
            max_diff: 0.0,
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_uniform = |rng: &mut ChaCha8Rng, a: f64, b: f64| (a.ln() + rng.random::<f64>() * (b / a).ln()).exp();
    let inside = |x: [f64; 2]| x[1] >= 0.0 && x[0].hypot(x[1]) < rho && (mode == MeshMode::Planar || x[0] >= 0.0);
    let (mut modulus, mut argmax, mut used) = (0.0f64, None, 0);
    for i in 0..pair_count {
        let class = [PairClass::Random, PairClass::Origin, PairClass::Straddle][i % 3];
        let pair = match class {
            PairClass::Random => (0..20).find_map(|_| {
                let r = rho * rng.random::<f64>().sqrt();
                let t = open * rng.random::<f64>();
                let x = [r * t.cos(), r * t.sin()];
                let d = log_uniform(&mut rng, d_min, rho);
                let psi = std::f64::consts::TAU * rng.random::<f64>();
                let y = [x[0] + d * psi.cos(), x[1] + d * psi.sin()];
                (inside(x) && inside(y)).then_some((x, y, d))
            }),
            PairClass::Origin => {
                let r = log_uniform(&mut rng, d_min, rho * (1.0 - 1e-9));
                let t = open * rng.random::<f64>();
                Some(([0.0, 0.0], [r * t.cos(), r * t.sin()], r))
            }
            PairClass::Straddle => {
                let a = log_uniform(&mut rng, 0.5 * d_min, 0.25 * rho);
                let b = log_uniform(&mut rng, 0.5 * d_min, 0.25 * rho);
                let z = 0.5 * rho * rng.random::<f64>();
                // In the meridian plane the reflected point is (b, z); in ℝⁿ it lies
                // on the opposite side of the axis at distance a + b.
                let y = match mode {
                    MeshMode::Planar => [-b, z],
                    MeshMode::Axisymmetric { .. } => [b, z],
                };
                Some(([a, z], y, a + b))
            }
        };
        let Some((x, y, d)) = pair else { continue };
        let (Some(ux), Some(uy)) = (field.value_at(x), field.value_at(y)) else { continue };
        used += 1;
        let diff = (ux - uy).abs();
        let q = diff / d.powf(exponent);
        if q > modulus {
            modulus = q;
            argmax = Some((class, d));
        }
        let k = edges.partition_point(|&e| e <= d).clamp(1, HOLDER_BINS) - 1;
        let b = &mut bins[k];
        b.count += 1;
        b.max_ratio = b.max_ratio.max(q);
        b.max_diff = b.max_diff.max(diff);
    }
    let centers = |f: &dyn Fn(&HolderBin) -> f64| -> (Vec<f64>, Vec<f64>) {
        bins.iter()
            .filter(|b| b.count > 0 && f(b) > 0.0)
            .map(|b| ((b.d_lo * b.d_hi).sqrt(), f(b)))
            .unzip()
    };
    let (dq, q) = centers(&|b| b.max_ratio);
    let divergence_slope = if dq.len() >= 2 {
        let lx: Vec<f64> = dq.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = q.iter().map(|v| v.ln()).collect();
        linear_fit(&lx, &ly).0
    } else {
        0.0
    };
    let (dd, diffs) = centers(&|b| b.max_diff);
    let fit = (dd.len() >= 2).then(|| DecayFit::from_points(FitMode::PairwiseHolder, dd, diffs));
    Ok(HolderReport {
        exponent,
        modulus,
        pairs: used,
        argmax,
        bins,
        divergence_slope,
        divergent: divergence_slope < DIVERGENCE_SLOPE,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiProfile {
    pub r: f64,
    /// `sup_{B_R⁺} u`.
    pub m: f64,
    /// `k_j = M − M·2^{−j}` for `j = 0..=j_max`.
    pub levels: Vec<f64>,
    /// `|{u > k_j} ∩ B_R⁺|_μ / |B_R⁺|_μ`.
    pub fractions: Vec<f64>,
    /// Slope of `log F_j` against `log j` over `j ≥ 1` with `F_j > 0`.
    pub decay_power: Option<f64>,
}

impl DeGiorgiProfile {
    pub fn is_monotone(&self) -> bool {
        self.fractions.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Normalized `μ`-measures of the super-level sets `{u > k_j}` in `B_R⁺`.
///
/// `B_R⁺` is represented by the cells whose centroid lies in `B_R`; level sets are
/// cut out of each cell exactly, since the field is affine there.
pub fn degiorgi_profile(field: &DiscreteField, r: f64, j_max: usize, cfg: &QuadConfig) -> Result<DeGiorgiProfile> {
    let mesh = &field.mesh;
    let cells = mesh.cells_within(r);
    if cells.is_empty() {
        return Err(Error::InvalidParameter(format!("no cells inside B_{r}")));
    }
    let pw = mesh.polar_weight(&field.params, cfg.rel_tol)?;
    let m = cells
        .iter()
        .flat_map(|&c| mesh.cells[c].map(|v| field.values[v]))
        .fold(f64::NEG_INFINITY, f64::max);
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("sup of the field on B_{r} is {m}, need > 0")));
    }
    let mass: Vec<f64> = cells.iter().map(|&c| pw.mass(&mesh.corners(c), mesh.arc_edge(c))).collect();
    let total: f64 = mass.iter().sum();
    let levels: Vec<f64> = (0..=j_max).map(|j| m - m * 0.5f64.powi(j as i32)).collect();
    let mut fractions: Vec<f64> = Vec::with_capacity(levels.len());
    for &k in &levels {
        let mut above = 0.0;
        for (i, &c) in cells.iter().enumerate() {
            let u = field.cell_values(c);
            if u.iter().all(|&v| v > k) {
                above += mass[i];
            } else if u.iter().any(|&v| v > k) {
                let arc = mesh.arc_edge(c);
                let (poly, a) = clip_level(&mesh.corners(c), &u, k, 1.0, arc.map(|a| a.0));
                if poly.len() >= 3 {
                    above += pw.mass(&poly, a.zip(arc).map(|(i, (_, r))| (i, r)));
                }
            }
        }
        fractions.push((above / total).clamp(0.0, 1.0));
    }
    let (lj, lf): (Vec<f64>, Vec<f64>) = fractions
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &f)| f > 0.0)
        .map(|(j, f)| ((j as f64).ln(), f.ln()))
        .unzip();
    let decay_power = (lj.len() >= 2).then(|| linear_fit(&lj, &lf).0);
    Ok(DeGiorgiProfile {
        r,
        m,
        levels,
        fractions,
        decay_power,
    })
}
