//! Integration regions and their description in polar coordinates about the origin.
//!
//! Every region is star-convex along rays from the origin in the sense that a ray
//! meets it in a single interval `[r_min, r_max]`. The angular parametrization is
//! `φ` for n = 2 and `(ψ, t, ν)` for n ≥ 3, where ψ is the angle to the +x_n axis,
//! t the angle of the x'-component to a reference direction `ê`, and ν ∈ S^{n−3}.

use super::adapt::Seg;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// `B_R(center)`, optionally intersected with `{x_n > 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    pub half: bool,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Self {
            center,
            radius,
            half: false,
        }
    }

    pub fn centered(n: usize, radius: f64) -> Self {
        Self::new(vec![0.0; n], radius)
    }

    pub fn half(mut self) -> Self {
        self.half = true;
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            center: self.center.clone(),
            radius: self.radius * factor,
            half: self.half,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        d2 < self.radius * self.radius && (!self.half || x[x.len() - 1] > 0.0)
    }
}

/// `{|x'| < radius, z_lo < x_n < z_hi}`; for n = 2 a rectangle symmetric in x_1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub radius: f64,
    pub z_lo: f64,
    pub z_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Ball(Ball),
    Cylinder(Cylinder),
}

impl From<Ball> for Region {
    fn from(b: Ball) -> Self {
        Region::Ball(b)
    }
}

impl From<Cylinder> for Region {
    fn from(c: Cylinder) -> Self {
        Region::Cylinder(c)
    }
}

/// Intersection of the ray `{r·ω : r > 0}` with a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySpan {
    pub r_min: f64,
    /// `r_max − r_min`, computed without cancellation.
    pub width: f64,
}

impl RaySpan {
    pub fn r_max(&self) -> f64 {
        self.r_min + self.width
    }
}

/// Which singular sets the closure of a region meets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Touches {
    pub origin: bool,
    pub axis: bool,
    pub plane: bool,
}

impl Region {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Region::Ball(b) => {
                if b.center.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: b.center.len(),
                    });
                }
                if !(b.radius > 0.0 && b.radius.is_finite())
                    || b.center.iter().any(|c| !c.is_finite())
                {
                    return Err(Error::InvalidParameter(format!(
                        "ball radius must be positive and finite, got {}",
                        b.radius
                    )));
                }
            }
            Region::Cylinder(c) => {
                if !(c.radius > 0.0 && c.z_hi > c.z_lo) {
                    return Err(Error::InvalidParameter(
                        "cylinder needs positive radius and z_hi > z_lo".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// True when the region is invariant under rotations of x' about the x_n axis.
    pub fn is_axial(&self) -> bool {
        match self {
            Region::Ball(b) => b.center[..b.center.len() - 1].iter().all(|&c| c == 0.0),
            Region::Cylinder(_) => true,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Ball(b) => b.half && b.center[b.center.len() - 1] <= -b.radius,
            Region::Cylinder(_) => false,
        }
    }

    pub fn touches(&self) -> Touches {
        match self {
            Region::Ball(b) => {
                let n = b.center.len();
                let a = norm(&b.center[..n - 1]);
                let cn = b.center[n - 1];
                let r = b.radius;
                let full = norm(&b.center);
                if b.half {
                    let reach = cn + (r * r - a * a).max(0.0).sqrt();
                    Touches {
                        origin: full <= r && cn > -r,
                        axis: a <= r && reach >= 0.0 && cn > -r,
                        plane: cn > -r && cn <= r,
                    }
                } else {
                    Touches {
                        origin: full <= r,
                        axis: a <= r,
                        plane: cn.abs() <= r,
                    }
                }
            }
            Region::Cylinder(c) => {
                let straddles = c.z_lo <= 0.0 && c.z_hi >= 0.0;
                Touches {
                    origin: straddles,
                    axis: true,
                    plane: straddles,
                }
            }
        }
    }

    /// Ray intersection for the unit direction `w`.
    pub fn ray(&self, w: &[f64]) -> Option<RaySpan> {
        match self {
            Region::Ball(b) => ball_ray(b, w),
            Region::Cylinder(c) => {
                let n = w.len();
                cylinder_ray(c, norm(&w[..n - 1]), w[n - 1])
            }
        }
    }

    /// Ray intersection in the meridian plane, from `(|ω'|, ω_n)`; axial regions only.
    pub fn ray_meridian(&self, s: f64, z: f64) -> Option<RaySpan> {
        match self {
            Region::Ball(b) => {
                let cn = b.center[b.center.len() - 1];
                if b.half && z <= 0.0 {
                    return None;
                }
                sphere_ray(cn * z, cn.abs() * s, cn.abs(), b.radius)
            }
            Region::Cylinder(c) => cylinder_ray(c, s, z),
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `b = ω·c`, `perp = |c − bω|`, `cn = |c|`.
fn sphere_ray(b: f64, perp: f64, cn: f64, r: f64) -> Option<RaySpan> {
    let d = (r - perp) * (r + perp);
    if d <= 0.0 {
        return None;
    }
    let sq = d.sqrt();
    if cn < r {
        return Some(RaySpan {
            r_min: 0.0,
            width: b + sq,
        });
    }
    if b <= 0.0 {
        return None;
    }
    let q = (cn - r) * (cn + r);
    Some(RaySpan {
        r_min: q / (b + sq),
        width: 2.0 * sq,
    })
}

fn ball_ray(ball: &Ball, w: &[f64]) -> Option<RaySpan> {
    let n = w.len();
    if ball.half && w[n - 1] <= 0.0 {
        return None;
    }
    let c = &ball.center;
    let b: f64 = w.iter().zip(c).map(|(x, y)| x * y).sum();
    let perp = c
        .iter()
        .zip(w)
        .map(|(ci, wi)| (ci - b * wi).powi(2))
        .sum::<f64>()
        .sqrt();
    sphere_ray(b, perp, norm(c), ball.radius)
}

fn cylinder_ray(c: &Cylinder, s: f64, z: f64) -> Option<RaySpan> {
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    if s > 0.0 {
        hi = c.radius / s;
    }
    if z > 0.0 {
        lo = lo.max(c.z_lo / z);
        hi = hi.min(c.z_hi / z);
    } else if z < 0.0 {
        lo = lo.max(c.z_hi / z);
        hi = hi.min(c.z_lo / z);
    } else if !(c.z_lo <= 0.0 && c.z_hi >= 0.0) {
        return None;
    }
    if hi > lo && hi.is_finite() {
        Some(RaySpan {
            r_min: lo,
            width: hi - lo,
        })
    } else {
        None
    }
}

/// Neighbourhood sizes removed around singular sets by truncated integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Angular half-width removed around singular directions.
    pub delta: f64,
    /// Radius removed around the origin.
    pub h: f64,
}

/// A breakpoint of an angular plan.
#[derive(Debug, Clone, Copy)]
struct Mark {
    at: f64,
    /// Exponent of the angular weight at this angle (0 if regular).
    sing: f64,
    /// Exponent from the ray length vanishing at a cone boundary.
    hit: f64,
}

/// Builds segments between sorted marks, merging marks closer than `1e-13`.
fn segments(mut marks: Vec<Mark>, trunc: Option<Truncation>) -> Vec<Seg> {
    marks.sort_by(|a, b| a.at.total_cmp(&b.at));
    let mut merged: Vec<Mark> = Vec::new();
    for m in marks {
        match merged.last_mut() {
            Some(l) if (m.at - l.at).abs() < 1e-13 => {
                if l.sing == 0.0 {
                    l.sing = m.sing;
                }
                l.hit = l.hit.max(m.hit);
            }
            _ => merged.push(m),
        }
    }
    let mut out = Vec::new();
    for (i, w) in merged.windows(2).enumerate() {
        let (l, r) = (w[0], w[1]);
        let first = i == 0;
        let last = i + 2 == merged.len();
        let mut a = l.at;
        let mut b = r.at;
        let mut ea = l.sing + if first { l.hit } else { 0.0 };
        let mut eb = r.sing + if last { r.hit } else { 0.0 };
        if let Some(t) = trunc {
            if l.sing < 0.0 {
                a += t.delta;
                ea = 0.0;
            }
            if r.sing < 0.0 {
                b -= t.delta;
                eb = 0.0;
            }
        }
        if b > a {
            out.push(Seg::new(a, b, ea, eb));
        }
    }
    out
}

/// Angular segments in φ for n = 2, with angular factor `|cos φ|^e1 |sin φ|^e3`.
pub(crate) fn planar_plan(
    region: &Region,
    e1: f64,
    e3: f64,
    trunc: Option<Truncation>,
) -> Vec<Seg> {
    let sing_at = |j: i64| if j.rem_euclid(2) == 1 { e1 } else { e3 };
    // (lo, hi, exponent at lo/hi from the hit set, extra breakpoints)
    let (lo, hi, hit, extra): (f64, f64, f64, Vec<f64>) = match region {
        Region::Ball(b) => {
            let (c1, c2) = (b.center[0], b.center[1]);
            let d = c1.hypot(c2);
            if d < b.radius {
                (-PI, PI, 0.0, vec![])
            } else {
                let phc = c2.atan2(c1);
                let g = (b.radius / d).min(1.0).asin();
                (phc - g, phc + g, 0.5, vec![])
            }
        }
        Region::Cylinder(c) => {
            let corners = [
                c.z_lo.atan2(c.radius),
                c.z_hi.atan2(c.radius),
                c.z_lo.atan2(-c.radius),
                c.z_hi.atan2(-c.radius),
            ];
            if c.z_lo < 0.0 && c.z_hi > 0.0 {
                (-PI, PI, 0.0, corners.to_vec())
            } else if c.z_lo >= 0.0 {
                let lo = c.z_lo.atan2(c.radius);
                let hi = c.z_lo.atan2(-c.radius);
                (lo, hi, 0.0, corners.to_vec())
            } else {
                let lo = (-c.z_hi.abs()).atan2(-c.radius);
                let hi = (-c.z_hi.abs()).atan2(c.radius);
                let cs = [
                    c.z_lo.atan2(-c.radius),
                    c.z_lo.atan2(c.radius),
                    lo,
                    hi,
                ];
                (lo, hi, 0.0, cs.to_vec())
            }
        }
    };
    let half = matches!(region, Region::Ball(b) if b.half);
    let mut windows: Vec<(f64, f64, f64, f64)> = Vec::new();
    if half {
        let j0 = (lo / (2.0 * PI)).floor() as i64 - 1;
        for j in j0..j0 + 3 {
            let (wa, wb) = (2.0 * PI * j as f64, 2.0 * PI * j as f64 + PI);
            let (a, b) = (lo.max(wa), hi.min(wb));
            if b > a {
                windows.push((a, b, if a == lo { hit } else { 0.0 }, if b == hi { hit } else { 0.0 }));
            }
        }
    } else {
        windows.push((lo, hi, hit, hit));
    }
    let mut out = Vec::new();
    for (a, b, ha, hb) in windows {
        let mut marks = Vec::new();
        let snap = |x: f64| -> Mark {
            let j = (x / FRAC_PI_2).round();
            let sing = if (x - j * FRAC_PI_2).abs() < 1e-13 {
                sing_at(j as i64)
            } else {
                0.0
            };
            Mark { at: x, sing, hit: 0.0 }
        };
        let mut ma = snap(a);
        ma.hit = ha;
        let mut mb = snap(b);
        mb.hit = hb;
        marks.push(ma);
        marks.push(mb);
        let j_lo = (a / FRAC_PI_2).ceil() as i64;
        let j_hi = (b / FRAC_PI_2).floor() as i64;
        for j in j_lo..=j_hi {
            let x = j as f64 * FRAC_PI_2;
            if x > a && x < b {
                marks.push(Mark {
                    at: x,
                    sing: sing_at(j),
                    hit: 0.0,
                });
            }
        }
        for &x in &extra {
            if x > a && x < b {
                marks.push(Mark { at: x, sing: 0.0, hit: 0.0 });
            }
        }
        out.extend(segments(marks, trunc));
    }
    out
}

/// Cone of directions hitting an off-axis ball, for n ≥ 3.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cone {
    /// Angle of the ball center to the +x_n axis.
    pub psi_c: f64,
    /// `cos` of the cone half-angle; `None` when the origin is inside the ball.
    pub cos_g: Option<f64>,
}

impl Cone {
    /// Upper limit of t at polar angle ψ; `None` if no direction at this ψ hits.
    pub fn t_max(&self, psi: f64) -> Option<(f64, bool)> {
        let cg = match self.cos_g {
            None => return Some((PI, false)),
            Some(c) => c,
        };
        let (sp, cp) = psi.sin_cos();
        let (sc, cc) = self.psi_c.sin_cos();
        let den = sp * sc;
        let num = cg - cp * cc;
        if den <= 0.0 {
            return if num <= 0.0 { Some((PI, false)) } else { None };
        }
        let tau = num / den;
        if tau <= -1.0 {
            Some((PI, false))
        } else if tau >= 1.0 {
            None
        } else {
            Some((tau.acos(), true))
        }
    }
}

/// Segments in ψ for n ≥ 3 with angular factor `sin^{sa} ψ |cos ψ|^{e3}`,
/// `sa = n − 2 + e1`. Also returns the cone for off-axis balls.
pub(crate) fn meridian_plan(
    region: &Region,
    n: usize,
    e1: f64,
    e3: f64,
    trunc: Option<Truncation>,
) -> (Vec<Seg>, Option<Cone>) {
    let sa = n as f64 - 2.0 + e1;
    let sing = |x: f64| -> f64 {
        if x == 0.0 || x == PI {
            sa
        } else if x == FRAC_PI_2 {
            e3
        } else {
            0.0
        }
    };
    let mut cone = None;
    let mut extra = Vec::new();
    let (lo, mut hi, hit_lo, mut hit_hi) = match region {
        Region::Ball(b) => {
            let c = &b.center;
            let a = norm(&c[..n - 1]);
            let cn = c[n - 1];
            let d = norm(c);
            let r = b.radius;
            let psi_c = a.atan2(cn);
            if d < r {
                if a > 0.0 {
                    cone = Some(Cone { psi_c, cos_g: None });
                }
                (0.0, PI, 0.0, 0.0)
            } else {
                let g = (r / d).min(1.0).asin();
                let hit = if a > 0.0 { 0.5 * (n as f64 - 1.0) } else { 0.5 };
                let (lo, hi) = (psi_c - g, psi_c + g);
                if a > 0.0 {
                    cone = Some(Cone {
                        psi_c,
                        cos_g: Some(((d - r) * (d + r)).max(0.0).sqrt() / d),
                    });
                    // Where the hit set in t becomes the whole circle.
                    if lo < 0.0 {
                        extra.push(-lo);
                    }
                    if hi > PI {
                        extra.push(2.0 * PI - hi);
                    }
                }
                let (l, hl) = if lo <= 0.0 { (0.0, 0.0) } else { (lo, hit) };
                let (h, hh) = if hi >= PI { (PI, 0.0) } else { (hi, hit) };
                (l, h, hl, hh)
            }
        }
        Region::Cylinder(c) => {
            let corner_lo = c.radius.atan2(c.z_lo);
            let corner_hi = c.radius.atan2(c.z_hi);
            extra.push(corner_lo);
            extra.push(corner_hi);
            if c.z_lo >= 0.0 {
                (0.0, corner_lo, 0.0, 0.0)
            } else if c.z_hi <= 0.0 {
                (corner_hi, PI, 0.0, 0.0)
            } else {
                (0.0, PI, 0.0, 0.0)
            }
        }
    };
    let half = matches!(region, Region::Ball(b) if b.half);
    if half && hi > FRAC_PI_2 {
        hi = FRAC_PI_2;
        hit_hi = 0.0;
    }
    let mut marks = vec![
        Mark {
            at: lo,
            sing: sing(lo),
            hit: hit_lo,
        },
        Mark {
            at: hi,
            sing: sing(hi),
            hit: hit_hi,
        },
    ];
    extra.push(FRAC_PI_2);
    for x in extra {
        if x > lo && x < hi {
            marks.push(Mark {
                at: x,
                sing: sing(x),
                hit: 0.0,
            });
        }
    }
    (segments(marks, trunc), cone)
}
