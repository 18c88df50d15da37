//! Weighted p-Laplacian on the half-ball.
//!
//! `−div(w|∇u|^{p−2}∇u) = f0 + w f1` on `B_R⁺` with `u = 0` on `{x_n = 0}` and
//! `u = φ0` on the spherical part, discretized with continuous P1 elements. For
//! `n ≥ 3` only axisymmetric data are supported: the problem is solved in the
//! meridian variables `(s, x_n) = (|x'|, x_n)` with Jacobian `s^{n−2}`.
//!
//! The weight enters only through exact per-cell masses, never through point values,
//! so singular and degenerate exponents need no special treatment in assembly.
//! Solutions minimize the regularized energy
//! `E_ε(u) = (1/p)∫ w((|∇u|²+ε²)^{p/2} − ε^p) − ∫(f0 + w f1)u`
//! by damped Newton steps with a Picard fallback, driving `ε` geometrically to its
//! final value.
//!
//! The diagnostics ([`decay_fit`], [`oscillation_profile`], [`holder_modulus`],
//! [`degiorgi_profile`]) act on anything implementing [`ScalarField`], so analytic
//! profiles and solved fields go through the same code.

mod diag;
mod linalg;
mod mesh;
mod moments;
mod solver;


pub use diag::{
    decay_fit, degiorgi_profile, holder_modulus, oscillation_profile, DeGiorgiProfile, DecayFit, FitMode,
    HolderBin, HolderReport, OscillationProfile, PairClass,
};
pub use mesh::{build_mesh, CellMasses, Mesh, MeshMode, MeshQuality, Ring, VertexTag, MIN_ANGLE_DEG};
pub use solver::{
    hat_residuals, linf_check, solve, source_norm_h, BoundaryDatum, EnergyStep, LinfCheck, ProblemSpec,
    SolveReport, SolverConfig, SourceNorm, StepKind,
};

use crate::error::{Error, Result};
use crate::weights::WeightParams;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A scalar function on the meridian domain of radius `domain_radius()`.
pub trait ScalarField {
    fn mode(&self) -> MeshMode;

    fn domain_radius(&self) -> f64;

    /// `None` outside the domain.
    fn value_at(&self, x: [f64; 2]) -> Option<f64>;

    /// `(inf, sup)` over `B_r⁺`.
    fn range_in(&self, r: f64) -> (f64, f64);

    /// Smallest radius on which the field carries information.
    fn resolution(&self) -> f64;

    fn sup_abs_in(&self, r: f64) -> f64 {
        let (lo, hi) = self.range_in(r);
        lo.abs().max(hi.abs())
    }

    fn osc_in(&self, r: f64) -> f64 {
        let (lo, hi) = self.range_in(r);
        hi - lo
    }
}

/// A closed-form field, with ranges taken over a polar sample grid that contains the
/// rays `φ = 0, π/2` (and `π` in planar mode) and the circle `|x| = r`.
pub struct Analytic<F> {
    pub mode: MeshMode,
    pub radius: f64,
    pub f: F,
    pub samples: usize,
}

impl<F: Fn([f64; 2]) -> f64> Analytic<F> {
    pub fn new(mode: MeshMode, f: F) -> Self {
        Self {
            mode,
            radius: 1.0,
            f,
            samples: 256,
        }
    }
}

fn in_domain(mode: MeshMode, radius: f64, x: [f64; 2]) -> bool {
    let tol = 1e-12 * radius;
    x[1] >= -tol
        && x[0].hypot(x[1]) <= radius + tol
        && (matches!(mode, MeshMode::Planar) || x[0] >= -tol)
}

impl<F: Fn([f64; 2]) -> f64> ScalarField for Analytic<F> {
    fn mode(&self) -> MeshMode {
        self.mode
    }

    fn domain_radius(&self) -> f64 {
        self.radius
    }

    fn value_at(&self, x: [f64; 2]) -> Option<f64> {
        in_domain(self.mode, self.radius, x).then(|| (self.f)(x))
    }

    fn range_in(&self, r: f64) -> (f64, f64) {
        let m = self.samples.max(4) & !3;
        let open = self.mode.opening();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=m {
            let rr = r * i as f64 / m as f64;
            for j in 0..=m {
                let t = open * j as f64 / m as f64;
                let v = (self.f)([rr * t.cos(), rr * t.sin()]);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    fn resolution(&self) -> f64 {
        0.0
    }
}

/// A continuous piecewise-linear field given by its vertex values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub mesh: Arc<Mesh>,
    /// The weight of the measure `μ = w dx` used by level-set diagnostics.
    pub params: WeightParams,
    pub values: Vec<f64>,
}

/// On-disk form of a [`DiscreteField`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub version: String,
    pub params: WeightParams,
    pub mesh: Mesh,
    pub values: Vec<f64>,
}

impl DiscreteField {
    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, params: WeightParams, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = mesh.vertices.iter().map(|x| f(*x)).collect();
        Self { mesh, params, values }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = FieldFile {
            version: crate::VERSION.to_string(),
            params: self.params,
            mesh: (*self.mesh).clone(),
            values: self.values.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: FieldFile = serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        if f.values.len() != f.mesh.vertices.len() {
            return Err(Error::DimensionMismatch {
                expected: f.mesh.vertices.len(),
                got: f.values.len(),
            });
        }
        Ok(Self {
            mesh: Arc::new(f.mesh),
            params: f.params,
            values: f.values,
        })
    }

    fn cell_values(&self, c: usize) -> [f64; 3] {
        self.mesh.cells[c].map(|v| self.values[v])
    }
}

impl ScalarField for DiscreteField {
    fn mode(&self) -> MeshMode {
        self.mesh.mode
    }

    fn domain_radius(&self) -> f64 {
        self.mesh.radius
    }

    fn value_at(&self, x: [f64; 2]) -> Option<f64> {
        let (c, l) = self.mesh.locate(x)?;
        let v = self.cell_values(c);
        Some(l[0] * v[0] + l[1] * v[1] + l[2] * v[2])
    }

    /// Exact extremes of the interpolant over the mesh part of `B_r⁺`.
    fn range_in(&self, r: f64) -> (f64, f64) {
        let mesh = &self.mesh;
        let ns = (mesh.strips_meeting(r) + 1).min(mesh.strips.len() - 1);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut take = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        let r2 = r * r;
        for c in 0..mesh.strips[ns] {
            let x = mesh.corners(c);
            let u = self.cell_values(c);
            for j in 0..3 {
                let a = x[j];
                if a[0] * a[0] + a[1] * a[1] <= r2 {
                    take(u[j]);
                }
                let k = (j + 1) % 3;
                let d = [x[k][0] - a[0], x[k][1] - a[1]];
                let qa = d[0] * d[0] + d[1] * d[1];
                let qb = 2.0 * (a[0] * d[0] + a[1] * d[1]);
                let qc = a[0] * a[0] + a[1] * a[1] - r2;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
                        if (0.0..=1.0).contains(&t) {
                            take(u[j] + t * (u[k] - u[j]));
                        }
                    }
                }
            }
            let g = mesh.hat_gradients(c);
            let grad = [
                u[0] * g[0][0] + u[1] * g[1][0] + u[2] * g[2][0],
                u[0] * g[0][1] + u[1] * g[1][1] + u[2] * g[2][1],
            ];
            let gn = grad[0].hypot(grad[1]);
            if gn > 0.0 {
                for sgn in [1.0, -1.0] {
                    let p = [sgn * r * grad[0] / gn, sgn * r * grad[1] / gn];
                    let l = mesh.barycentric(c, p);
                    if l.iter().all(|&v| v >= -1e-12) {
                        take(l[0] * u[0] + l[1] * u[1] + l[2] * u[2]);
                    }
                }
            }
        }
        (lo, hi)
    }

    fn resolution(&self) -> f64 {
        self.mesh.resolution()
    }
}
