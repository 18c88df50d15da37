//! Problem data, the regularized energy and its minimization.

use super::linalg::Profile;
use super::mesh::{CellMasses, Mesh, MeshMode};
use super::moments::angle;
use super::{DiscreteField, ScalarField};
use crate::error::{Error, Result};
use crate::ineq::{Ratio, TestFunction};
use crate::quad::{integrate_weighted_function, Ball, QuadConfig, Region};
use crate::weights::{chi_exponent, is_ap, is_radon, WeightParams};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Dirichlet data on the spherical part of the boundary, as a function of the polar
/// angle `φ` measured from the `x_1` (or `s`) axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryDatum {
    Zero,
    Constant { value: f64 },
    /// `amplitude · sin(mode·φ)`.
    Sine { mode: u32, amplitude: f64 },
    /// Restriction of a test function on `ℝⁿ`.
    Function { u: TestFunction },
    /// Piecewise linear in `φ` through the given samples.
    Table { phi: Vec<f64>, values: Vec<f64> },
}

impl BoundaryDatum {
    pub fn eval(&self, mode: MeshMode, x: [f64; 2]) -> f64 {
        match self {
            BoundaryDatum::Zero => 0.0,
            BoundaryDatum::Constant { value } => *value,
            BoundaryDatum::Sine { mode: k, amplitude } => amplitude * (*k as f64 * angle(x)).sin(),
            BoundaryDatum::Function { u } => u.eval(&mode.embed(x)),
            BoundaryDatum::Table { phi, values } => {
                let t = angle(x);
                let i = phi.partition_point(|&p| p < t);
                if i == 0 {
                    values[0]
                } else if i == phi.len() {
                    values[i - 1]
                } else {
                    let s = (t - phi[i - 1]) / (phi[i] - phi[i - 1]);
                    values[i - 1] + s * (values[i] - values[i - 1])
                }
            }
        }
    }

    /// `sup |φ0|` over the arc of radius `radius`. Exact except for `Function`, which
    /// is sampled at 8193 angles.
    pub fn sup_norm(&self, mode: MeshMode, radius: f64) -> f64 {
        let open = mode.opening();
        match self {
            BoundaryDatum::Zero => 0.0,
            BoundaryDatum::Constant { value } => value.abs(),
            BoundaryDatum::Sine { mode: k, amplitude } => {
                let kk = *k as f64;
                amplitude.abs() * if kk * open >= std::f64::consts::FRAC_PI_2 { 1.0 } else { (kk * open).sin() }
            }
            BoundaryDatum::Function { .. } => (0..=8192)
                .map(|i| {
                    let t = open * i as f64 / 8192.0;
                    self.eval(mode, [radius * t.cos(), radius * t.sin()]).abs()
                })
                .fold(0.0, f64::max),
            BoundaryDatum::Table { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            BoundaryDatum::Function { u } => u.validate(n),
            BoundaryDatum::Table { phi, values } => {
                if phi.is_empty() || phi.len() != values.len() || phi.windows(2).any(|w| w[1] <= w[0]) {
                    Err(Error::InvalidParameter("boundary table needs increasing angles, one value each".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// `−div(w|∇u|^{p−2}∇u) = f0 + w f1` on `B_R⁺`, `u = 0` on the flat part and
/// `u = φ0` on the arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub params: WeightParams,
    pub p: f64,
    /// Integrability exponent of the sources.
    pub m: f64,
    pub f0: Option<TestFunction>,
    pub f1: Option<TestFunction>,
    pub phi0: BoundaryDatum,
    pub domain_radius: f64,
}

impl ProblemSpec {
    /// Homogeneous problem with `m = (n+Σθ)/p + 1`.
    pub fn new(params: WeightParams, p: f64) -> Self {
        Self {
            params,
            p,
            m: params.homogeneous_dim() / p + 1.0,
            f0: None,
            f1: None,
            phi0: BoundaryDatum::Zero,
            domain_radius: 1.0,
        }
    }

    pub fn with_f0(mut self, f: TestFunction) -> Self {
        self.f0 = Some(f);
        self
    }

    pub fn with_f1(mut self, f: TestFunction) -> Self {
        self.f1 = Some(f);
        self
    }

    pub fn with_phi0(mut self, phi0: BoundaryDatum) -> Self {
        self.phi0 = phi0;
        self
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.domain_radius = r;
        self
    }

    /// `w ∈ A_p`, or `w = |x|^{θ2}` with `θ2 ≥ n(p−1)`.
    pub fn weight_admissible(&self) -> bool {
        let t = self.params.theta;
        let n = self.params.n as f64;
        is_radon(&self.params)
            && (is_ap(&self.params, self.p) || (t[0] == 0.0 && t[2] == 0.0 && t[1] >= n * (self.p - 1.0)))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.params.n;
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {}", self.p)));
        }
        let mmin = self.params.homogeneous_dim() / self.p;
        if !(self.m > mmin) {
            return Err(Error::InvalidParameter(format!("m must exceed (n+Σθ)/p = {mmin}, got {}", self.m)));
        }
        if !(self.domain_radius > 0.0 && self.domain_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain_radius must be positive, got {}",
                self.domain_radius
            )));
        }
        for f in self.f0.iter().chain(&self.f1) {
            f.validate(n)?;
        }
        self.phi0.validate(n)?;
        if !self.weight_admissible() {
            return Err(Error::Inadmissible(format!(
                "θ = {:?}, n = {n}: w is neither A_{} nor |x|^θ2 with θ2 ≥ n(p−1)",
                self.params.theta, self.p
            )));
        }
        Ok(())
    }

    /// Data for `ũ(x) = u(λx)`, `λ = r/R`, on the same domain: sources per the scaling
    /// identity and arc values sampled from `field` on `|x| = r`.
    pub fn rescaled(&self, field: &DiscreteField, r: f64) -> Result<ProblemSpec> {
        if !(r > 0.0 && r < self.domain_radius) {
            return Err(Error::InvalidParameter(format!("rescaling radius {r} outside (0, R)")));
        }
        let lam = r / self.domain_radius;
        let (p, s) = (self.p, self.params.sum());
        let open = field.mesh.mode.opening();
        let k = 1024;
        let phi: Vec<f64> = (0..=k).map(|i| open * i as f64 / k as f64).collect();
        let values = phi
            .iter()
            .map(|t| field.value_at([r * t.cos(), r * t.sin()]).unwrap_or(0.0))
            .collect();
        Ok(ProblemSpec {
            f0: self.f0.clone().map(|f| f.dilated(lam).scaled(lam.powf(p - s))),
            f1: self.f1.clone().map(|f| f.dilated(lam).scaled(lam.powf(p))),
            phi0: BoundaryDatum::Table { phi, values },
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps_start: f64,
    pub eps_final: f64,
    /// Ratio between consecutive regularization levels.
    pub eps_factor: f64,
    /// Residual tolerance at the final level.
    pub tol: f64,
    /// Residual tolerance at intermediate levels.
    pub stage_tol: f64,
    /// Newton/Picard step budget over all levels.
    pub max_iter: usize,
    /// Used for cell masses and the source norm.
    pub quad: QuadConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_start: 1.0,
            eps_final: 1e-6,
            eps_factor: 0.1,
            tol: 1e-10,
            stage_tol: 1e-7,
            max_iter: 500,
            quad: QuadConfig::default().with_rel_tol(1e-8),
        }
    }
}

impl SolverConfig {
    fn schedule(&self, p: f64) -> Result<Vec<f64>> {
        if p == 2.0 {
            return Ok(vec![0.0]);
        }
        let c = self;
        if !(c.eps_final > 0.0 && c.eps_start >= c.eps_final && c.eps_factor > 0.0 && c.eps_factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization schedule {} → {} by {} is invalid",
                c.eps_start, c.eps_final, c.eps_factor
            )));
        }
        let mut out = Vec::new();
        let mut e = c.eps_start;
        while e > c.eps_final * (1.0 + 1e-12) {
            out.push(e);
            e *= c.eps_factor;
        }
        out.push(c.eps_final);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Start,
    Newton,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStep {
    pub stage: usize,
    pub epsilon: f64,
    pub kind: StepKind,
    pub energy: f64,
}

/// `ℋ` and its two summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceNorm {
    pub value: f64,
    pub f0_term: f64,
    pub f1_term: f64,
    /// `None` when both sources vanish and `χ` is undefined.
    pub chi: Option<f64>,
    pub lebesgue_exponent: Option<f64>,
    pub dual_power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// `E_ε` at the final level, normalized so that `E_ε(0) = 0` without sources.
    pub energy: f64,
    pub trajectory: Vec<EnergyStep>,
    /// `max_i |⟨R(u), λ_i⟩|` over free hat functions.
    pub residual: f64,
    pub iterations: usize,
    pub newton_steps: usize,
    pub picard_steps: usize,
    pub epsilon: f64,
    pub converged: bool,
    pub linf: f64,
    pub source_norm: Option<SourceNorm>,
    /// Why `source_norm` is missing, if it is.
    pub source_norm_error: Option<String>,
}

impl SolveReport {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NonConvergence(format!(
                "residual {:e} after {} steps at ε = {:e}",
                self.residual, self.iterations, self.epsilon
            )))
        }
    }
}

/// Degree-5 seven-point triangle rule: barycentric point and weight.
const DUNAVANT5: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W1: f64 = 0.132_394_152_788_506;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Discrete energy on a fixed mesh with fixed data.
pub(crate) struct System<'a> {
    mesh: &'a Mesh,
    p: f64,
    grads: Vec<[[f64; 2]; 3]>,
    mass: Vec<f64>,
    load: Vec<f64>,
    dof: Vec<Option<usize>>,
    free: Vec<usize>,
}

impl<'a> System<'a> {
    pub fn new(mesh: &'a Mesh, spec: &ProblemSpec, masses: &CellMasses) -> Self {
        let nv = mesh.vertex_count();
        let grads = (0..mesh.cell_count()).map(|c| mesh.hat_gradients(c)).collect();
        let mut load = vec![0.0; nv];
        if let Some(f0) = &spec.f0 {
            for c in 0..mesh.cell_count() {
                let v = mesh.corners(c);
                let area = mesh.area(c);
                for (l, wq) in DUNAVANT5 {
                    let x = [
                        l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
                        l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
                    ];
                    let fx = f0.eval(&mesh.mode.embed(x)) * mesh.mode.jacobian(x) * area * wq;
                    for j in 0..3 {
                        load[mesh.cells[c][j]] += fx * l[j];
                    }
                }
            }
        }
        if let Some(f1) = &spec.f1 {
            for c in 0..mesh.cell_count() {
                let m0 = masses.mass[c];
                if m0 <= 0.0 {
                    continue;
                }
                let v = mesh.corners(c);
                let h = masses.hat[c];
                let g = [
                    (h[0] * v[0][0] + h[1] * v[1][0] + h[2] * v[2][0]) / m0,
                    (h[0] * v[0][1] + h[1] * v[1][1] + h[2] * v[2][1]) / m0,
                ];
                let fx = f1.eval(&mesh.mode.embed(g));
                for j in 0..3 {
                    load[mesh.cells[c][j]] += fx * h[j];
                }
            }
        }
        let mut dof = vec![None; nv];
        let mut free = Vec::new();
        for (v, t) in mesh.tags.iter().enumerate() {
            if !t.is_dirichlet() {
                dof[v] = Some(free.len());
                free.push(v);
            }
        }
        Self {
            mesh,
            p: spec.p,
            grads,
            mass: masses.mass.clone(),
            load,
            dof,
            free,
        }
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    fn grad(&self, c: usize, u: &[f64]) -> [f64; 2] {
        let g = &self.grads[c];
        let cell = &self.mesh.cells[c];
        let mut out = [0.0; 2];
        for j in 0..3 {
            out[0] += u[cell[j]] * g[j][0];
            out[1] += u[cell[j]] * g[j][1];
        }
        out
    }

    pub fn energy(&self, u: &[f64], eps: f64) -> f64 {
        let p = self.p;
        let mut e = 0.0;
        for c in 0..self.mass.len() {
            let g = self.grad(c, u);
            let s = g[0] * g[0] + g[1] * g[1];
            e += self.mass[c]
                * if p == 2.0 {
                    0.5 * s
                } else if eps > 0.0 {
                    // ε^p((1 + s/ε²)^{p/2} − 1), exact zero at s = 0
                    eps.powf(p) * (0.5 * p * (s / (eps * eps)).ln_1p()).exp_m1() / p
                } else {
                    s.powf(0.5 * p) / p
                };
        }
        let work: f64 = u.iter().zip(&self.load).map(|(a, b)| a * b).sum();
        e - work
    }

    fn coefficient(&self, s: f64, eps: f64) -> f64 {
        if self.p == 2.0 {
            1.0
        } else {
            (s + eps * eps).powf(0.5 * (self.p - 2.0))
        }
    }

    /// Gradient of the energy with respect to the free values.
    pub fn gradient(&self, u: &[f64], eps: f64) -> Vec<f64> {
        let mut r = vec![0.0; self.free.len()];
        for c in 0..self.mass.len() {
            let g = self.grad(c, u);
            let a = self.mass[c] * self.coefficient(g[0] * g[0] + g[1] * g[1], eps);
            for j in 0..3 {
                if let Some(d) = self.dof[self.mesh.cells[c][j]] {
                    let gl = self.grads[c][j];
                    r[d] += a * (g[0] * gl[0] + g[1] * gl[1]);
                }
            }
        }
        for (d, &v) in self.free.iter().enumerate() {
            r[d] -= self.load[v];
        }
        r
    }

    pub fn profile(&self) -> Profile {
        let mut first: Vec<usize> = (0..self.free.len()).collect();
        for cell in &self.mesh.cells {
            let ds: Vec<usize> = cell.iter().filter_map(|&v| self.dof[v]).collect();
            if let Some(&lo) = ds.iter().min() {
                for &d in &ds {
                    first[d] = first[d].min(lo);
                }
            }
        }
        Profile::new(first)
    }

    /// Newton Hessian (`newton = true`) or frozen-coefficient stiffness.
    pub fn assemble(&self, u: &[f64], eps: f64, newton: bool, mat: &mut Profile) {
        mat.clear();
        let p = self.p;
        for c in 0..self.mass.len() {
            let g = self.grad(c, u);
            let s = g[0] * g[0] + g[1] * g[1];
            let a = self.mass[c] * self.coefficient(s, eps);
            let a2 = if newton && p != 2.0 {
                self.mass[c] * (p - 2.0) * (s + eps * eps).powf(0.5 * (p - 4.0))
            } else {
                0.0
            };
            let gl = &self.grads[c];
            let cell = &self.mesh.cells[c];
            let proj: [f64; 3] = std::array::from_fn(|j| g[0] * gl[j][0] + g[1] * gl[j][1]);
            for i in 0..3 {
                let Some(di) = self.dof[cell[i]] else { continue };
                for j in 0..=i {
                    let Some(dj) = self.dof[cell[j]] else { continue };
                    let v = a * (gl[i][0] * gl[j][0] + gl[i][1] * gl[j][1]) + a2 * proj[i] * proj[j];
                    mat.add(di, dj, v);
                }
            }
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Dirichlet values on tagged vertices, zero elsewhere.
fn boundary_values(mesh: &Mesh, spec: &ProblemSpec) -> Vec<f64> {
    mesh.vertices
        .iter()
        .zip(&mesh.tags)
        .map(|(x, t)| match t {
            super::mesh::VertexTag::Arc => spec.phi0.eval(mesh.mode, *x),
            _ => 0.0,
        })
        .collect()
}

fn check_compatible(spec: &ProblemSpec, mesh: &Mesh) -> Result<()> {
    spec.validate()?;
    if spec.params.n != mesh.mode.dim() {
        return Err(Error::DimensionMismatch {
            expected: mesh.mode.dim(),
            got: spec.params.n,
        });
    }
    if (mesh.radius - spec.domain_radius).abs() > 1e-12 * spec.domain_radius {
        return Err(Error::InvalidParameter(format!(
            "mesh radius {} differs from domain radius {}",
            mesh.radius, spec.domain_radius
        )));
    }
    Ok(())
}

/// Minimizes the regularized energy over P1 fields with the Dirichlet data of `spec`.
///
/// A field is returned even when the step budget runs out; check
/// [`SolveReport::converged`].
pub fn solve(spec: &ProblemSpec, mesh: Arc<Mesh>, cfg: &SolverConfig) -> Result<(DiscreteField, SolveReport)> {
    check_compatible(spec, &mesh)?;
    let schedule = cfg.schedule(spec.p)?;
    let masses = mesh.cell_masses(&spec.params, cfg.quad.rel_tol)?;
    let sys = System::new(&mesh, spec, &masses);
    let mut u = boundary_values(&mesh, spec);
    let mut mat = sys.profile();

    let mut trajectory = Vec::new();
    let (mut iterations, mut newton_steps, mut picard_steps) = (0, 0, 0);
    let mut stalled = false;
    let mut eps = schedule[0];
    for (stage, &e) in schedule.iter().enumerate() {
        eps = e;
        let last = stage + 1 == schedule.len();
        let tol = if last { cfg.tol } else { cfg.stage_tol.max(cfg.tol) };
        let mut energy = sys.energy(&u, eps);
        trajectory.push(EnergyStep {
            stage,
            epsilon: eps,
            kind: StepKind::Start,
            energy,
        });
        loop {
            let r = sys.gradient(&u, eps);
            if max_abs(&r) <= tol {
                break;
            }
            if iterations >= cfg.max_iter {
                stalled = true;
                break;
            }
            iterations += 1;
            let mut accepted = None;
            for (kind, newton) in [(StepKind::Newton, true), (StepKind::Picard, false)] {
                sys.assemble(&u, eps, newton, &mut mat);
                if mat.factor().is_err() {
                    continue;
                }
                let mut d: Vec<f64> = r.iter().map(|v| -v).collect();
                mat.solve(&mut d);
                if let Some((un, en)) = line_search(&sys, &u, &d, &r, energy, eps) {
                    accepted = Some((kind, un, en));
                    break;
                }
            }
            match accepted {
                Some((kind, un, en)) => {
                    u = un;
                    energy = en;
                    match kind {
                        StepKind::Newton => newton_steps += 1,
                        _ => picard_steps += 1,
                    }
                    trajectory.push(EnergyStep {
                        stage,
                        epsilon: eps,
                        kind,
                        energy,
                    });
                }
                None => {
                    stalled = true;
                    break;
                }
            }
        }
        if stalled {
            break;
        }
    }
    let residual = max_abs(&sys.gradient(&u, eps));
    let energy = sys.energy(&u, eps);
    let (source_norm, source_norm_error) = match source_norm_h(spec, &cfg.quad) {
        Ok(h) => (Some(h), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = SolveReport {
        energy,
        trajectory,
        residual,
        iterations,
        newton_steps,
        picard_steps,
        epsilon: eps,
        converged: !stalled && residual <= cfg.tol,
        linf: max_abs(&u),
        source_norm,
        source_norm_error,
    };
    let field = DiscreteField {
        mesh,
        params: spec.params,
        values: u,
    };
    Ok((field, report))
}

/// Backtracking on `E_ε` along `d`; accepts the first step with sufficient decrease.
fn line_search(sys: &System, u: &[f64], d: &[f64], r: &[f64], e0: f64, eps: f64) -> Option<(Vec<f64>, f64)> {
    let slope: f64 = r.iter().zip(d).map(|(a, b)| a * b).sum();
    if !(slope < 0.0) {
        return None;
    }
    let floor = 1e-13 * e0.abs().max(f64::MIN_POSITIVE);
    let mut t = 1.0;
    let mut trial = u.to_vec();
    for _ in 0..40 {
        for (k, &v) in sys.free().iter().enumerate() {
            trial[v] = u[v] + t * d[k];
        }
        let e = sys.energy(&trial, eps);
        if e <= e0 + 1e-4 * t * slope || (e <= e0 && -t * slope <= floor) {
            return Some((trial, e));
        }
        t *= 0.5;
    }
    None
}

/// `⟨R(u), λ_v⟩` for the listed free vertices at regularization `eps`.
pub fn hat_residuals(
    spec: &ProblemSpec,
    field: &DiscreteField,
    eps: f64,
    rel_tol: f64,
    vertices: &[usize],
) -> Result<Vec<f64>> {
    check_compatible(spec, &field.mesh)?;
    let masses = field.mesh.cell_masses(&spec.params, rel_tol)?;
    let sys = System::new(&field.mesh, spec, &masses);
    let r = sys.gradient(&field.values, eps);
    vertices
        .iter()
        .map(|&v| {
            sys.dof
                .get(v)
                .copied()
                .flatten()
                .map(|d| r[d])
                .ok_or_else(|| Error::InvalidParameter(format!("vertex {v} is not a free vertex")))
        })
        .collect()
}

/// `ℋ = ‖f0‖^{1/(p−1)}_{L^s(w^{−γ0})} + ‖f1‖^{1/(p−1)}_{L^s(w)}` on `B_R⁺` with
/// `s = mpχ/(m(χ−1)+χ(p−1))` and `γ0 = (χ(m−1)(p−1)+m)/(m(χ−1)+χ(p−1))`.
pub fn source_norm_h(spec: &ProblemSpec, cfg: &QuadConfig) -> Result<SourceNorm> {
    if spec.f0.is_none() && spec.f1.is_none() {
        return Ok(SourceNorm {
            value: 0.0,
            f0_term: 0.0,
            f1_term: 0.0,
            chi: None,
            lebesgue_exponent: None,
            dual_power: None,
        });
    }
    let (p, m) = (spec.p, spec.m);
    let w = &spec.params;
    let chi = chi_exponent(w, p)?;
    let kmin = w.homogeneous_dim() / p;
    if !(m > kmin) {
        return Err(Error::InvalidParameter(format!("m must exceed (n+Σθ)/p = {kmin}, got {m}")));
    }
    let den = m * (chi - 1.0) + chi * (p - 1.0);
    let s = m * p * chi / den;
    let gamma0 = (chi * (m - 1.0) * (p - 1.0) + m) / den;
    let region = Region::Ball(Ball::centered(w.n, spec.domain_radius).half());
    let term = |f: &Option<TestFunction>, weight: WeightParams, label: &str| -> Result<f64> {
        let Some(f) = f else { return Ok(0.0) };
        f.validate(w.n)?;
        let v = integrate_weighted_function(&weight, f, s, &region, cfg).map_err(|e| match e {
            Error::DivergentMeasure { set, exponent } => Error::DivergentMeasure {
                set: format!("{set} in the {label} factor"),
                exponent,
            },
            e => e,
        })?;
        Ok(v.value.powf(1.0 / s).powf(1.0 / (p - 1.0)))
    };
    let f0_term = term(&spec.f0, w.scaled(-gamma0), "f0")?;
    let f1_term = term(&spec.f1, *w, "f1")?;
    Ok(SourceNorm {
        value: f0_term + f1_term,
        f0_term,
        f1_term,
        chi: Some(chi),
        lebesgue_exponent: Some(s),
        dual_power: Some(gamma0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinfCheck {
    pub linf: f64,
    pub phi0_sup: f64,
    /// `None` when `ℋ` could not be computed.
    pub source_norm: Option<f64>,
    /// `‖u‖_∞ / (‖φ0‖_∞ + ℋ)`.
    pub ratio: Ratio,
    /// `‖u‖_∞ − ‖φ0‖_∞`; the discrete maximum principle bounds it when `ℋ = 0`.
    pub excess: f64,
}

pub fn linf_check(field: &DiscreteField, spec: &ProblemSpec, report: &SolveReport) -> LinfCheck {
    let linf = max_abs(&field.values);
    let phi0_sup = spec.phi0.sup_norm(field.mesh.mode, field.mesh.radius);
    let h = report.source_norm.map(|h| h.value);
    let ratio = match h {
        Some(h) => Ratio::of(linf, phi0_sup + h),
        None => Ratio::Indeterminate,
    };
    LinfCheck {
        linf,
        phi0_sup,
        source_norm: h,
        ratio,
        excess: linf - phi0_sup,
    }
}
