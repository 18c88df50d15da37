//! Polar-layered triangulations of the half-disk and the quarter-disk.
//!
//! Vertices sit on concentric rings. Ring radii follow `(i/L)^g` with `L = ⌈1/h⌉`,
//! truncated where consecutive rings would differ by more than a factor 2, then
//! continued inward by `singular_depth` halvings. Angular counts are powers of two
//! times a base of 4 (planar) or 2 (axisymmetric), so the lines `φ = 0, π/2, π` are
//! unions of mesh edges and no cell straddles a singular set of the weight. A ring
//! either keeps the count of the ring inside it or doubles it.

use super::moments::PolarWeight;
use crate::error::{Error, Result};
use crate::weights::{is_radon, WeightParams};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Minimum interior angle accepted by [`build_mesh`].
pub const MIN_ANGLE_DEG: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeshMode {
    /// `n = 2`, coordinates `(x_1, x_2)` on the upper half-disk.
    Planar,
    /// `n ≥ 3` reduced to `(s, x_n) = (|x'|, x_n)` on the quarter-disk.
    Axisymmetric { n: usize },
}

impl MeshMode {
    pub fn dim(self) -> usize {
        match self {
            MeshMode::Planar => 2,
            MeshMode::Axisymmetric { n } => n,
        }
    }

    /// Angular extent of the meridian domain.
    pub fn opening(self) -> f64 {
        match self {
            MeshMode::Planar => PI,
            MeshMode::Axisymmetric { .. } => FRAC_PI_2,
        }
    }

    fn base_count(self) -> usize {
        match self {
            MeshMode::Planar => 4,
            MeshMode::Axisymmetric { .. } => 2,
        }
    }

    /// The point of `ℝⁿ` represented by a meridian point.
    pub fn embed(self, x: [f64; 2]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[0] = x[0];
        *v.last_mut().unwrap() = x[1];
        v
    }

    /// Jacobian of the reduction at a meridian point.
    pub fn jacobian(self, x: [f64; 2]) -> f64 {
        match self {
            MeshMode::Planar => 1.0,
            MeshMode::Axisymmetric { n } => x[0].abs().powi(n as i32 - 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexTag {
    Interior,
    /// `{x_n = 0}`, including the origin and the corners of the arc.
    Flat,
    /// The spherical part of the boundary.
    Arc,
    /// The symmetry axis `{s = 0}` of the axisymmetric reduction.
    Axis,
}

impl VertexTag {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, VertexTag::Flat | VertexTag::Arc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ring {
    pub radius: f64,
    pub first: usize,
    /// Number of angular intervals; the ring holds `intervals + 1` vertices.
    pub intervals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub mode: MeshMode,
    pub radius: f64,
    pub target_h: f64,
    pub grading: f64,
    pub singular_depth: usize,
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub cells: Vec<[usize; 3]>,
    pub tags: Vec<VertexTag>,
    /// `rings[0]` is the origin.
    pub rings: Vec<Ring>,
    /// `strips[i]..strips[i+1]` are the cells between `rings[i]` and `rings[i+1]`, in
    /// angular order.
    pub strips: Vec<usize>,
}

/// Weight moments of every cell. Cells with an edge on the outer circle are
/// integrated up to the circle, so the masses sum to the measure of the half-ball.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMasses {
    /// `∫_K w` (times `s^{n−2}` in the axisymmetric reduction).
    pub mass: Vec<f64>,
    /// `∫_K w λ_j` for the three barycentric coordinates.
    pub hat: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub min_diameter: f64,
    pub max_diameter: f64,
}

fn ring_radii(target_h: f64, grading: f64, depth: usize) -> Vec<f64> {
    let l = (1.0 / target_h).ceil() as usize;
    let ratio = |i: usize| ((i + 1) as f64 / i as f64).powf(grading);
    let mut i0 = 1;
    while i0 < l && ratio(i0) > 2.0 {
        i0 += 1;
    }
    let lf = l as f64;
    let mut radii: Vec<f64> = (1..=depth).rev().map(|d| (i0 as f64 / lf).powf(grading) * 0.5f64.powi(d as i32)).collect();
    radii.extend((i0..=l).map(|i| if i == l { 1.0 } else { (i as f64 / lf).powf(grading) }));
    radii
}

/// Builds the triangulation of the unit half-disk (planar) or quarter-disk
/// (axisymmetric).
pub fn build_mesh(mode: MeshMode, target_h: f64, grading: f64, singular_depth: usize) -> Result<Mesh> {
    if !(target_h > 0.0 && target_h < 0.5) {
        return Err(Error::InvalidParameter(format!("target_h must lie in (0, 0.5), got {target_h}")));
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::InvalidParameter(format!("grading must be ≥ 1, got {grading}")));
    }
    if let MeshMode::Axisymmetric { n } = mode {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("axisymmetric mode needs n ≥ 3, got {n}")));
        }
    }
    if singular_depth > 40 {
        return Err(Error::InvalidParameter(format!("singular_depth {singular_depth} exceeds 40")));
    }
    let phi_max = mode.opening();
    let radii = ring_radii(target_h, grading, singular_depth);

    let mut vertices = vec![[0.0, 0.0]];
    let mut tags = vec![VertexTag::Flat];
    let mut rings = vec![Ring { radius: 0.0, first: 0, intervals: 0 }];
    let mut count = mode.base_count();
    let mut prev_r = 0.0;
    for (i, &r) in radii.iter().enumerate() {
        if i > 0 {
            let want = phi_max * r / (r - prev_r);
            if (count as f64) < want / std::f64::consts::SQRT_2 {
                count *= 2;
            }
        }
        let outer = i + 1 == radii.len();
        let first = vertices.len();
        for j in 0..=count {
            let (x, tag) = ring_point(mode, r, j, count, outer);
            vertices.push(x);
            tags.push(tag);
        }
        rings.push(Ring { radius: r, first, intervals: count });
        prev_r = r;
    }

    let mut cells = Vec::new();
    let mut strips = vec![0];
    let r1 = rings[1];
    for j in 0..r1.intervals {
        cells.push([0, r1.first + j, r1.first + j + 1]);
    }
    strips.push(cells.len());
    for w in rings[1..].windows(2) {
        let (a, b) = (w[0], w[1]);
        let v_in = |j: usize| a.first + j;
        let v_out = |j: usize| b.first + j;
        if b.intervals == a.intervals {
            for j in 0..a.intervals {
                cells.push([v_in(j), v_out(j), v_out(j + 1)]);
                cells.push([v_in(j), v_out(j + 1), v_in(j + 1)]);
            }
        } else {
            for j in 0..a.intervals {
                cells.push([v_in(j), v_out(2 * j), v_out(2 * j + 1)]);
                cells.push([v_in(j), v_out(2 * j + 1), v_in(j + 1)]);
                cells.push([v_in(j + 1), v_out(2 * j + 1), v_out(2 * j + 2)]);
            }
        }
        strips.push(cells.len());
    }

    let mesh = Mesh {
        mode,
        radius: 1.0,
        target_h,
        grading,
        singular_depth,
        vertices,
        cells,
        tags,
        rings,
        strips,
    };
    let q = mesh.quality();
    if !(q.min_angle_deg > MIN_ANGLE_DEG) {
        return Err(Error::MeshQuality(format!(
            "minimum angle {:.2}° is below {MIN_ANGLE_DEG}°",
            q.min_angle_deg
        )));
    }
    Ok(mesh)
}

fn ring_point(mode: MeshMode, r: f64, j: usize, count: usize, outer: bool) -> ([f64; 2], VertexTag) {
    let interior = if outer { VertexTag::Arc } else { VertexTag::Interior };
    match mode {
        MeshMode::Planar => {
            if j == 0 {
                ([r, 0.0], VertexTag::Flat)
            } else if j == count {
                ([-r, 0.0], VertexTag::Flat)
            } else if 2 * j == count {
                ([0.0, r], interior)
            } else {
                let phi = PI * j as f64 / count as f64;
                ([r * phi.cos(), r * phi.sin()], interior)
            }
        }
        MeshMode::Axisymmetric { .. } => {
            if j == 0 {
                ([r, 0.0], VertexTag::Flat)
            } else if j == count {
                ([0.0, r], if outer { VertexTag::Arc } else { VertexTag::Axis })
            } else {
                let phi = FRAC_PI_2 * j as f64 / count as f64;
                ([r * phi.cos(), r * phi.sin()], interior)
            }
        }
    }
}

impl Mesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Corners of a cell.
    pub fn corners(&self, c: usize) -> [[f64; 2]; 3] {
        self.cells[c].map(|v| self.vertices[v])
    }

    /// Euclidean (meridian) area of a cell.
    pub fn area(&self, c: usize) -> f64 {
        let [a, b, d] = self.corners(c);
        0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]))
    }

    /// Gradients of the three barycentric coordinates.
    pub fn hat_gradients(&self, c: usize) -> [[f64; 2]; 3] {
        let v = self.corners(c);
        let two_a = 2.0 * self.area(c);
        std::array::from_fn(|j| {
            let (p, q) = (v[(j + 1) % 3], v[(j + 2) % 3]);
            [(p[1] - q[1]) / two_a, (q[0] - p[0]) / two_a]
        })
    }

    /// Radius of the innermost ring, below which the mesh is a single fan.
    pub fn resolution(&self) -> f64 {
        self.rings[1].radius
    }

    /// The same triangulation of the half-ball of radius `radius`.
    pub fn scaled(&self, radius: f64) -> Result<Mesh> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        let f = radius / self.radius;
        let mut m = self.clone();
        m.radius = radius;
        m.vertices.iter_mut().for_each(|v| *v = [v[0] * f, v[1] * f]);
        m.rings.iter_mut().for_each(|r| r.radius *= f);
        Ok(m)
    }

    pub fn quality(&self) -> MeshQuality {
        let mut q = MeshQuality {
            min_angle_deg: 180.0,
            min_diameter: f64::INFINITY,
            max_diameter: 0.0,
        };
        for c in 0..self.cells.len() {
            let v = self.corners(c);
            let len: [f64; 3] = std::array::from_fn(|j| dist(v[(j + 1) % 3], v[(j + 2) % 3]));
            let diam = len.iter().cloned().fold(0.0, f64::max);
            q.min_diameter = q.min_diameter.min(diam);
            q.max_diameter = q.max_diameter.max(diam);
            if self.area(c) <= 0.0 {
                q.min_angle_deg = 0.0;
                continue;
            }
            for j in 0..3 {
                let (a, b, c2) = (len[j], len[(j + 1) % 3], len[(j + 2) % 3]);
                let cos = ((b * b + c2 * c2 - a * a) / (2.0 * b * c2)).clamp(-1.0, 1.0);
                q.min_angle_deg = q.min_angle_deg.min(cos.acos().to_degrees());
            }
        }
        q
    }

    /// Per-cell weight masses and hat-function moments, each to relative tolerance
    /// `rel_tol`.
    pub fn cell_masses(&self, params: &WeightParams, rel_tol: f64) -> Result<CellMasses> {
        let pw = self.polar_weight(params, rel_tol)?;
        let mut mass = Vec::with_capacity(self.cells.len());
        let mut hat = Vec::with_capacity(self.cells.len());
        for c in 0..self.cells.len() {
            let v = self.corners(c);
            let [m0, mx, my] = pw.moments(&v, self.arc_edge(c));
            let two_a = 2.0 * self.area(c);
            hat.push(std::array::from_fn(|j| {
                let (p, q) = (v[(j + 1) % 3], v[(j + 2) % 3]);
                let d = [p[0] - q[0], p[1] - q[1]];
                let cst = p[0] * q[1] - p[1] * q[0];
                (cst * m0 + mx * d[1] - my * d[0]) / two_a
            }));
            mass.push(m0);
        }
        Ok(CellMasses { mass, hat })
    }

    /// Per-cell weight masses only.
    pub fn cell_mass_only(&self, params: &WeightParams, rel_tol: f64) -> Result<Vec<f64>> {
        let pw = self.polar_weight(params, rel_tol)?;
        Ok((0..self.cells.len()).map(|c| pw.mass(&self.corners(c), self.arc_edge(c))).collect())
    }

    /// The edge `(j, j+1)` of a cell lying on the outer circle, with the radius.
    /// Weight integrals over such cells extend to the circle.
    pub fn arc_edge(&self, c: usize) -> Option<(usize, f64)> {
        let outer = self.rings.last()?;
        let on = |v: usize| v >= outer.first;
        let cell = self.cells[c];
        (0..3).find(|&j| on(cell[j]) && on(cell[(j + 1) % 3])).map(|j| (j, outer.radius))
    }

    pub(crate) fn polar_weight(&self, params: &WeightParams, rel_tol: f64) -> Result<PolarWeight> {
        if params.n != self.mode.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.mode.dim(),
                got: params.n,
            });
        }
        if !is_radon(params) {
            let t = params.theta;
            return Err(Error::DivergentMeasure {
                set: "the half-ball".into(),
                exponent: t[0] + t[1] + t[2],
            });
        }
        if !(rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("rel_tol must be positive, got {rel_tol}")));
        }
        Ok(PolarWeight::new(params, self.mode, rel_tol))
    }

    /// Cell containing `x` with its barycentric coordinates.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let tol = 1e-12 * self.radius;
        let r = x[0].hypot(x[1]);
        if r > self.radius + tol || x[1] < -tol {
            return None;
        }
        if matches!(self.mode, MeshMode::Axisymmetric { .. }) && x[0] < -tol {
            return None;
        }
        let ring = self.rings[1..].partition_point(|g| g.radius < r);
        let phi = super::moments::angle([x[0], x[1].max(0.0)]) / self.mode.opening();
        for s in [ring, ring + 1, ring.wrapping_sub(1)] {
            if s + 1 >= self.strips.len() {
                continue;
            }
            let (lo, hi) = (self.strips[s], self.strips[s + 1]);
            let cnt = hi - lo;
            let guess = ((phi * cnt as f64) as usize).min(cnt - 1);
            for off in 0..cnt {
                let up = (guess + off < cnt).then_some(guess + off);
                let down = (off > 0 && off <= guess).then(|| guess - off);
                if up.is_none() && down.is_none() {
                    break;
                }
                for c in up.into_iter().chain(down) {
                    let l = self.barycentric(lo + c, x);
                    if l.iter().all(|&v| v >= -1e-10) {
                        return Some((lo + c, l));
                    }
                }
            }
        }
        None
    }

    pub fn barycentric(&self, c: usize, x: [f64; 2]) -> [f64; 3] {
        let v = self.corners(c);
        let two_a = 2.0 * self.area(c);
        std::array::from_fn(|j| {
            let (p, q) = (v[(j + 1) % 3], v[(j + 2) % 3]);
            ((p[0] - x[0]) * (q[1] - x[1]) - (p[1] - x[1]) * (q[0] - x[0])) / two_a
        })
    }

    /// Cells whose centroid lies in `B_r`.
    pub fn cells_within(&self, r: f64) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&c| {
                let v = self.corners(c);
                let g = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
                g[0].hypot(g[1]) < r
            })
            .collect()
    }

    /// Number of strips whose inner ring lies strictly inside `B_r`.
    pub(crate) fn strips_meeting(&self, r: f64) -> usize {
        self.rings.partition_point(|g| g.radius < r).min(self.strips.len() - 1)
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
