//! Exact-in-radius weighted moments of convex polygons in the meridian half-plane.
//!
//! In polar coordinates `(r, φ)` about the origin the density of `w dx` (times
//! `s^{n−2}` in the axisymmetric reduction) is `r^{k−1} A(φ) dr dφ` with
//! `A(φ) = |cos φ|^{e_axis} sin^{θ3} φ` and `k = 2 + e_axis + θ2 + θ3`. Each ray
//! meets a convex polygon in one interval, so the radial integral is closed form and
//! only the angular one is done numerically, with Gauss–Jacobi ends at the singular
//! directions `φ ∈ {0, π/2, π}`.

use super::mesh::MeshMode;
use crate::numeric::power_integral;
use crate::quad::adapt::{self, Seg, Tol};
use crate::weights::WeightParams;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

const ANGLE_EPS: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
pub(crate) struct PolarWeight {
    k: f64,
    e_axis: f64,
    e_flat: f64,
    rel_tol: f64,
}

impl PolarWeight {
    pub fn new(params: &WeightParams, mode: MeshMode, rel_tol: f64) -> Self {
        let jac = match mode {
            MeshMode::Planar => 0.0,
            MeshMode::Axisymmetric { n } => n as f64 - 2.0,
        };
        let e_axis = params.theta[0] + jac;
        Self {
            k: 2.0 + e_axis + params.theta[1] + params.theta[2],
            e_axis,
            e_flat: params.theta[2],
            rel_tol,
        }
    }

    fn angular(&self, phi: f64) -> f64 {
        let c = if phi > FRAC_PI_4 && phi < 3.0 * FRAC_PI_4 {
            (FRAC_PI_2 - phi).sin().abs()
        } else {
            phi.cos().abs()
        };
        let s = if phi > 3.0 * FRAC_PI_4 { (PI - phi).sin() } else { phi.sin() };
        let mut a = 1.0;
        if self.e_axis != 0.0 {
            a *= c.powf(self.e_axis);
        }
        if self.e_flat != 0.0 {
            a *= s.powf(self.e_flat);
        }
        a
    }

    fn end_exponent(&self, phi: f64) -> f64 {
        if phi.abs() < ANGLE_EPS || (phi - PI).abs() < ANGLE_EPS {
            self.e_flat
        } else if (phi - FRAC_PI_2).abs() < ANGLE_EPS {
            self.e_axis
        } else {
            0.0
        }
    }

    /// `∫_P ρ`. With `arc = Some((i, R))` the edge from vertex `i` to `i+1` is
    /// replaced by the circular arc `|x| = R` through its endpoints.
    pub fn mass(&self, poly: &[[f64; 2]], arc: Option<(usize, f64)>) -> f64 {
        self.integrate(poly, arc, |lo, hi, a, _| a * power_integral(lo, hi, self.k))
    }

    /// `(∫_P ρ, ∫_P ρ·x, ∫_P ρ·y)`.
    pub fn moments(&self, poly: &[[f64; 2]], arc: Option<(usize, f64)>) -> [f64; 3] {
        let m0 = self.mass(poly, arc);
        let k1 = self.k + 1.0;
        let mx = self.integrate(poly, arc, |lo, hi, a, phi| a * phi.cos() * power_integral(lo, hi, k1));
        let my = self.integrate(poly, arc, |lo, hi, a, phi| a * phi.sin() * power_integral(lo, hi, k1));
        [m0, mx, my]
    }

    fn integrate(
        &self,
        poly: &[[f64; 2]],
        arc: Option<(usize, f64)>,
        radial: impl Fn(f64, f64, f64, f64) -> f64,
    ) -> f64 {
        let mut angles: Vec<f64> = poly
            .iter()
            .filter(|v| v[0] != 0.0 || v[1] != 0.0)
            .map(|v| angle(*v))
            .collect();
        if angles.len() < 2 {
            return 0.0;
        }
        angles.sort_by(f64::total_cmp);
        let (lo, hi) = (angles[0], angles[angles.len() - 1]);
        if hi - lo < ANGLE_EPS {
            return 0.0;
        }
        if lo + ANGLE_EPS < FRAC_PI_2 && FRAC_PI_2 < hi - ANGLE_EPS {
            angles.push(FRAC_PI_2);
            angles.sort_by(f64::total_cmp);
        }
        angles.dedup_by(|a, b| (*a - *b).abs() < ANGLE_EPS);
        let segs: Vec<Seg> = angles
            .windows(2)
            .map(|w| Seg::new(w[0], w[1], self.end_exponent(w[0]), self.end_exponent(w[1])))
            .collect();
        let f = |phi: f64| match ray_interval(poly, arc, phi) {
            Some((r0, r1)) => radial(r0, r1, self.angular(phi), phi),
            None => 0.0,
        };
        let tol = Tol {
            rel: self.rel_tol,
            abs: 1e-300,
            max_evals: 20_000,
        };
        adapt::integrate(f, &segs, tol).value
    }
}

/// Polar angle in `[0, π]` of a point with `y ≥ 0`.
pub(crate) fn angle(v: [f64; 2]) -> f64 {
    if v[1] <= 0.0 {
        if v[0] < 0.0 {
            PI
        } else {
            0.0
        }
    } else {
        v[1].atan2(v[0])
    }
}

/// `[r0, r1]` such that `r·(cos φ, sin φ)` lies in the counter-clockwise convex polygon
/// (with its arc edge, if any, bulged out to the circle).
fn ray_interval(poly: &[[f64; 2]], arc: Option<(usize, f64)>, phi: f64) -> Option<(f64, f64)> {
    let e = [phi.cos(), phi.sin()];
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    if let Some((_, r)) = arc {
        hi = r;
    }
    let m = poly.len();
    for i in 0..m {
        if arc.is_some_and(|(j, _)| j == i) {
            continue;
        }
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let d = [b[0] - a[0], b[1] - a[1]];
        let c = d[0] * e[1] - d[1] * e[0];
        let q = d[0] * a[1] - d[1] * a[0];
        if c > 0.0 {
            lo = lo.max(q / c);
        } else if c < 0.0 {
            hi = hi.min(q / c);
        } else if q > 0.0 {
            return None;
        }
    }
    (hi > lo && hi.is_finite()).then_some((lo, hi))
}

/// Part of a convex polygon where the affine function with vertex values `vals` is
/// above (`sign = 1`) or below (`sign = −1`) `level`, with the position of the arc
/// edge in the output. The cut endpoints on an arc edge stay on its chord; the
/// neglected sliver is of the order of the squared sagitta.
pub(crate) fn clip_level(
    poly: &[[f64; 2]],
    vals: &[f64],
    level: f64,
    sign: f64,
    arc: Option<usize>,
) -> (Vec<[f64; 2]>, Option<usize>) {
    let m = poly.len();
    let mut out = Vec::with_capacity(m + 1);
    let mut new_arc = None;
    for i in 0..m {
        let j = (i + 1) % m;
        let (fi, fj) = (sign * (vals[i] - level), sign * (vals[j] - level));
        if fi >= 0.0 {
            if arc == Some(i) && fj >= 0.0 {
                new_arc = Some(out.len());
            }
            out.push(poly[i]);
        }
        if (fi >= 0.0) != (fj >= 0.0) {
            let t = fi / (fi - fj);
            if arc == Some(i) && fi < 0.0 {
                new_arc = Some(out.len());
            } else if arc == Some(i) {
                new_arc = Some(out.len() - 1);
            }
            out.push([
                poly[i][0] + t * (poly[j][0] - poly[i][0]),
                poly[i][1] + t * (poly[j][1] - poly[i][1]),
            ]);
        }
    }
    (out, new_arc)
}

/// Euclidean area of a polygon.
#[cfg(test)]
pub(crate) fn area(poly: &[[f64; 2]]) -> f64 {
    let m = poly.len();
    (0..m)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % m]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}
