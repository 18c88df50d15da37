//! The anisotropic weight, its dual, and exact region classification.
//!
//! Region membership is decided by evaluating each defining inequality literally,
//! strict or weak exactly as the region is defined. No tolerance is applied.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Exponent triple `(θ1, θ2, θ3)` with ambient dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub theta: [f64; 3],
    pub n: usize,
}

/// Pointwise value of the weight, including its singular cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightValue {
    Finite(f64),
    /// A negative exponent meets its zero set.
    Infinite,
    /// One factor vanishes while another is infinite.
    Singular,
}

impl WeightValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            WeightValue::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl WeightParams {
    pub fn new(theta: [f64; 3], n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n must be ≥ 2, got {n}")));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("exponents must be finite".into()));
        }
        Ok(Self { theta, n })
    }

    pub fn sum(&self) -> f64 {
        self.theta.iter().sum()
    }

    /// Homogeneous dimension `n + Σθ`.
    pub fn homogeneous_dim(&self) -> f64 {
        self.n as f64 + self.sum()
    }

    /// Exponent triple of the dual weight `w^{-1/(p-1)}`.
    pub fn dual(&self, p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {p}")));
        }
        Ok(self.scaled(-1.0 / (p - 1.0)))
    }

    /// Exponent triple of `w^c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            theta: self.theta.map(|t| t * c),
            n: self.n,
        }
    }
}

fn factor(base: f64, exp: f64) -> WeightValue {
    if exp == 0.0 {
        WeightValue::Finite(1.0)
    } else if base == 0.0 {
        if exp > 0.0 {
            WeightValue::Finite(0.0)
        } else {
            WeightValue::Infinite
        }
    } else {
        WeightValue::Finite(base.powf(exp))
    }
}

/// `|x'|^θ1 |x|^θ2 |x_n|^θ3`.
pub fn eval_weight(params: &WeightParams, x: &[f64]) -> Result<WeightValue> {
    let n = params.n;
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let s2: f64 = x[..n - 1].iter().map(|v| v * v).sum();
    let xn = x[n - 1].abs();
    let bases = [s2.sqrt(), (s2 + xn * xn).sqrt(), xn];
    let mut prod = 1.0;
    let (mut zero, mut inf) = (false, false);
    for (b, e) in bases.iter().zip(params.theta) {
        match factor(*b, e) {
            WeightValue::Finite(v) if v == 0.0 => zero = true,
            WeightValue::Finite(v) => prod *= v,
            _ => inf = true,
        }
    }
    Ok(match (zero, inf) {
        (true, true) => WeightValue::Singular,
        (false, true) => WeightValue::Infinite,
        (true, false) => WeightValue::Finite(0.0),
        (false, false) => WeightValue::Finite(prod),
    })
}

/// `w^{-1/(p-1)}` evaluated pointwise.
pub fn eval_dual_weight(params: &WeightParams, p: f64, x: &[f64]) -> Result<WeightValue> {
    eval_weight(&params.dual(p)?, x)
}

/// Probe exponents used by classification and by the inequality modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeExponents {
    pub p: f64,
    pub q: Option<f64>,
    pub p0: Option<f64>,
    pub m: Option<f64>,
}

impl ProbeExponents {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            q: None,
            p0: None,
            m: None,
        }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    pub fn with_p0(mut self, p0: f64) -> Self {
        self.p0 = Some(p0);
        self
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = Some(m);
        self
    }

    /// Checks the ranges of each supplied exponent.
    pub fn validate(&self, params: &WeightParams) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameter(s));
        if !(self.p > 1.0) {
            return bad(format!("p must exceed 1, got {}", self.p));
        }
        if let Some(q) = self.q {
            if !(q > 1.0 && q < self.p) {
                return bad(format!("q must lie in (1, p), got {q}"));
            }
        }
        if let Some(p0) = self.p0 {
            let n = params.n as f64;
            if !(p0 > 1.0 && p0 < n / (n - 1.0)) {
                return bad(format!("p0 must lie in (1, n/(n-1)), got {p0}"));
            }
        }
        if let Some(m) = self.m {
            let lo = params.homogeneous_dim() / self.p;
            if !(m > lo) {
                return bad(format!("m must exceed (n+Σθ)/p = {lo}, got {m}"));
            }
        }
        Ok(())
    }

    /// Sobolev gain exponent; `None` when supercritical.
    pub fn chi(&self, params: &WeightParams) -> Option<f64> {
        chi_exponent(params, self.p).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rel {
    Gt,
    Ge,
    Lt,
    Le,
}

impl Rel {
    fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Rel::Gt => a > b,
            Rel::Ge => a >= b,
            Rel::Lt => a < b,
            Rel::Le => a <= b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Rel::Gt => ">",
            Rel::Ge => "≥",
            Rel::Lt => "<",
            Rel::Le => "≤",
        }
    }
}

/// A single defining inequality `lhs rel rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub set: String,
    pub label: String,
    pub lhs: f64,
    pub rel: Rel,
    pub rhs: f64,
}

impl Condition {
    fn new(set: &str, label: &str, lhs: f64, rel: Rel, rhs: f64) -> Self {
        Self {
            set: set.into(),
            label: label.into(),
            lhs,
            rel,
            rhs,
        }
    }

    pub fn holds(&self) -> bool {
        self.rel.holds(self.lhs, self.rhs)
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} {} {} fails ({} vs {})",
            self.set,
            self.label,
            self.rel.symbol(),
            fmt_bound(self.rhs),
            self.lhs,
            self.rhs
        )
    }
}

fn fmt_bound(v: f64) -> String {
    format!("{v}")
}

/// First violated condition of a conjunction, if any.
fn first_violation(conds: Vec<Condition>) -> Option<Condition> {
    conds.into_iter().find(|c| !c.holds())
}

/// Named region sets. Each returns its conditions in definition order.
pub mod regions {
    use super::{Condition, Rel, WeightParams};

    fn dims(w: &WeightParams) -> (f64, f64) {
        let n = w.n as f64;
        (n, n - 1.0)
    }

    pub fn set_a(w: &WeightParams) -> Vec<Condition> {
        let (_, n1) = dims(w);
        let [t1, t2, t3] = w.theta;
        vec![
            Condition::new("A", "θ1", t1, Rel::Gt, -n1),
            Condition::new("A", "θ2", t2, Rel::Ge, 0.0),
            Condition::new("A", "θ3", t3, Rel::Gt, -1.0),
        ]
    }

    pub fn set_b(w: &WeightParams) -> Vec<Condition> {
        let (n, n1) = dims(w);
        let [t1, t2, t3] = w.theta;
        vec![
            Condition::new("B", "θ1", t1, Rel::Gt, -n1),
            Condition::new("B", "θ2", t2, Rel::Lt, 0.0),
            Condition::new("B", "θ3", t3, Rel::Gt, -1.0),
            Condition::new("B", "Σθ", w.sum(), Rel::Gt, -n),
        ]
    }

    pub fn set_c(w: &WeightParams, p: f64) -> Vec<Condition> {
        let (_, n1) = dims(w);
        let [t1, t2, t3] = w.theta;
        vec![
            Condition::new("C_p", "θ1", t1, Rel::Lt, n1 * (p - 1.0)),
            Condition::new("C_p", "θ2", t2, Rel::Le, 0.0),
            Condition::new("C_p", "θ3", t3, Rel::Lt, p - 1.0),
        ]
    }

    pub fn set_d(w: &WeightParams, p: f64) -> Vec<Condition> {
        let (n, n1) = dims(w);
        let [t1, t2, t3] = w.theta;
        vec![
            Condition::new("D_p", "θ1", t1, Rel::Lt, n1 * (p - 1.0)),
            Condition::new("D_p", "θ2", t2, Rel::Gt, 0.0),
            Condition::new("D_p", "θ3", t3, Rel::Lt, p - 1.0),
            Condition::new("D_p", "Σθ", w.sum(), Rel::Lt, n * (p - 1.0)),
        ]
    }

    pub fn set_f(w: &WeightParams, p0: f64) -> Vec<Condition> {
        let (_, n1) = dims(w);
        let [t1, t2, t3] = w.theta;
        let r = (p0 - 1.0) / p0;
        vec![
            Condition::new("F_p0", "θ1", t1, Rel::Gt, -n1 * r),
            Condition::new("F_p0", "θ2", t2, Rel::Ge, 0.0),
            Condition::new("F_p0", "θ3", t3, Rel::Gt, -r),
        ]
    }

    /// No θ3 condition appears in this set's definition.
    pub fn set_g(w: &WeightParams, p0: f64) -> Vec<Condition> {
        let (n, n1) = dims(w);
        let [t1, t2, _] = w.theta;
        let r = (p0 - 1.0) / p0;
        vec![
            Condition::new("G_p0", "θ1", t1, Rel::Gt, -n1 * r),
            Condition::new("G_p0", "θ2", t2, Rel::Lt, 0.0),
            Condition::new("G_p0", "Σθ", w.sum(), Rel::Gt, -n * r),
        ]
    }

    pub fn contains(conds: &[Condition]) -> bool {
        conds.iter().all(Condition::holds)
    }
}

/// Membership in a union of sets; on failure returns the first violation of each member.
fn union_check(sets: Vec<Vec<Condition>>) -> (bool, Vec<Condition>) {
    let mut fails = Vec::new();
    for s in sets {
        match first_violation(s) {
            None => return (true, Vec::new()),
            Some(c) => fails.push(c),
        }
    }
    (false, fails)
}

/// `θ ∈ 𝒜 ∪ ℬ`.
pub fn is_radon(w: &WeightParams) -> bool {
    union_check(vec![regions::set_a(w), regions::set_b(w)]).0
}

/// `θ ∈ (𝒜∪ℬ) ∩ (𝒞_p∪𝒟_p)`.
pub fn is_ap(w: &WeightParams, p: f64) -> bool {
    is_radon(w) && union_check(vec![regions::set_c(w, p), regions::set_d(w, p)]).0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApEntry {
    pub p: f64,
    pub holds: bool,
}

/// A flag that failed, with the inequalities responsible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub flag: String,
    pub violated: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub params: WeightParams,
    pub is_radon: bool,
    pub is_doubling: bool,
    pub ap: Vec<ApEntry>,
    /// `None` when no `q` was supplied.
    pub sobolev_admissible: Option<bool>,
    /// `None` when no `p0` was supplied.
    pub poincare_mixed_admissible: Option<bool>,
    pub witness: Vec<Witness>,
}

impl RegionReport {
    pub fn ap_at(&self, p: f64) -> Option<bool> {
        self.ap.iter().find(|e| e.p == p).map(|e| e.holds)
    }
}

/// Classifies `params` at `probes.p` and every exponent in `extra_p`.
pub fn classify_with(
    params: &WeightParams,
    probes: &ProbeExponents,
    extra_p: &[f64],
) -> RegionReport {
    let w = params;
    let mut witness = Vec::new();

    let (radon, radon_fail) = union_check(vec![regions::set_a(w), regions::set_b(w)]);
    if !radon {
        witness.push(Witness {
            flag: "radon".into(),
            violated: radon_fail.clone(),
        });
    }

    let mut ps = vec![probes.p];
    for &p in extra_p {
        if !ps.contains(&p) {
            ps.push(p);
        }
    }
    let mut ap = Vec::new();
    for &p in &ps {
        let (cd, cd_fail) = union_check(vec![regions::set_c(w, p), regions::set_d(w, p)]);
        let holds = radon && cd;
        if !holds {
            let mut v = radon_fail.clone();
            v.extend(cd_fail);
            witness.push(Witness {
                flag: format!("ap[{p}]"),
                violated: v,
            });
        }
        ap.push(ApEntry { p, holds });
    }

    let sobolev_admissible = probes.q.map(|q| {
        let p = probes.p;
        let n = w.n as f64;
        let range = vec![
            Condition::new("sobolev", "q", q, Rel::Gt, 1.0),
            Condition::new("sobolev", "p - q", p - q, Rel::Gt, 0.0),
            Condition::new("sobolev", "nq - p", n * q - p, Rel::Gt, 0.0),
            Condition::new("sobolev", "Σθ", w.sum(), Rel::Ge, n * (q - 1.0)),
        ];
        let mut v = Vec::new();
        let range_ok = match first_violation(range) {
            None => true,
            Some(c) => {
                v.push(c);
                false
            }
        };
        let ap_ok = ap.iter().find(|e| e.p == p).is_some_and(|e| e.holds);
        let special = vec![
            Condition::new("sobolev-special", "θ1", w.theta[0], Rel::Ge, 0.0),
            Condition::new("sobolev-special", "θ1", w.theta[0], Rel::Le, 0.0),
            Condition::new("sobolev-special", "θ3", w.theta[2], Rel::Ge, 0.0),
            Condition::new("sobolev-special", "θ3", w.theta[2], Rel::Le, 0.0),
            Condition::new("sobolev-special", "θ2", w.theta[1], Rel::Ge, n * (p - 1.0)),
        ];
        let special_fail = first_violation(special);
        let region_ok = ap_ok || special_fail.is_none();
        if !region_ok {
            v.push(Condition::new("sobolev", "ap[p]", 0.0, Rel::Gt, 0.0));
            v.extend(special_fail);
        }
        let ok = range_ok && region_ok;
        if !ok {
            witness.push(Witness {
                flag: "sobolev".into(),
                violated: v,
            });
        }
        ok
    });

    let poincare_mixed_admissible = probes.p0.map(|p0| {
        let n = w.n as f64;
        let range = vec![
            Condition::new("poincare", "p0", p0, Rel::Gt, 1.0),
            Condition::new("poincare", "p0", p0, Rel::Lt, n / (n - 1.0)),
        ];
        let mut v = Vec::new();
        let range_ok = match first_violation(range) {
            None => true,
            Some(c) => {
                v.push(c);
                false
            }
        };
        let (fg, fg_fail) = union_check(vec![regions::set_f(w, p0), regions::set_g(w, p0)]);
        if !fg {
            v.extend(fg_fail);
        }
        let ok = range_ok && fg;
        if !ok {
            witness.push(Witness {
                flag: "poincare_mixed".into(),
                violated: v,
            });
        }
        ok
    });

    RegionReport {
        params: *w,
        is_radon: radon,
        is_doubling: radon,
        ap,
        sobolev_admissible,
        poincare_mixed_admissible,
        witness,
    }
}

pub fn classify(params: &WeightParams, probes: &ProbeExponents) -> RegionReport {
    classify_with(params, probes, &[])
}

/// `χ = (n+Σθ)/(n+Σθ−p)`.
pub fn chi_exponent(params: &WeightParams, p: f64) -> Result<f64> {
    let d = params.homogeneous_dim();
    if d <= p {
        return Err(Error::Supercritical { dim: d, p });
    }
    Ok(d / (d - p))
}

/// Positive root of `α² + nα − λ1 = 0`.
pub fn reference_alpha(n: usize, lambda1: f64) -> Result<f64> {
    if !(lambda1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda1 must be positive, got {lambda1}"
        )));
    }
    let n = n as f64;
    let disc = (n * n + 4.0 * lambda1).sqrt();
    // 2λ/(n+√(n²+4λ)) avoids cancellation for small λ.
    Ok(2.0 * lambda1 / (n + disc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wp(t: [f64; 3], n: usize) -> WeightParams {
        WeightParams::new(t, n).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(
            eval_weight(&wp([0.0; 3], 2), &[0.5, 0.5]).unwrap(),
            WeightValue::Finite(1.0)
        );
        let v = eval_weight(&wp([1.0; 3], 2), &[3.0, 4.0]).unwrap();
        assert_relative_eq!(v.finite().unwrap(), 60.0, epsilon = 1e-12);
        assert_eq!(
            eval_weight(&wp([-1.0, 0.0, 0.0], 3), &[0.0, 0.0, 0.3]).unwrap(),
            WeightValue::Infinite
        );
        assert_eq!(
            eval_weight(&wp([1.0, 0.0, -1.0], 2), &[0.0, 0.0]).unwrap(),
            WeightValue::Singular
        );
        assert_eq!(
            eval_weight(&wp([1.0, 0.0, 0.0], 2), &[0.0, 2.0]).unwrap(),
            WeightValue::Finite(0.0)
        );
        assert!(matches!(
            eval_weight(&wp([0.0; 3], 3), &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dual_examples() {
        let v = eval_dual_weight(&wp([2.0, 0.0, 0.0], 2), 3.0, &[4.0, 1.0]).unwrap();
        assert_relative_eq!(v.finite().unwrap(), 0.25, epsilon = 1e-14);
        let v = eval_dual_weight(&wp([1.0; 3], 2), 2.0, &[3.0, 4.0]).unwrap();
        assert_relative_eq!(v.finite().unwrap(), 1.0 / 60.0, epsilon = 1e-14);
        assert!(eval_dual_weight(&wp([0.0; 3], 2), 1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn classify_examples() {
        let r = classify(&wp([0.0; 3], 2), &ProbeExponents::new(2.0));
        assert!(r.is_radon && r.is_doubling && r.ap_at(2.0).unwrap());
        assert!(r.witness.is_empty());

        let r = classify(&wp([0.0, 5.0, 0.0], 2), &ProbeExponents::new(2.0));
        assert!(r.is_radon && r.is_doubling);
        assert!(!r.ap_at(2.0).unwrap());
        let w = &r.witness[0];
        assert_eq!(w.flag, "ap[2]");
        assert_eq!(w.violated[0].set, "C_p");
        assert_eq!(w.violated[0].label, "θ2");
        assert_eq!(w.violated[1].set, "D_p");
        assert_eq!(w.violated[1].label, "Σθ");

        let r = classify(&wp([-2.0, 0.0, 0.0], 3), &ProbeExponents::new(2.0));
        assert!(!r.is_radon && !r.is_doubling);
        assert_eq!(r.witness[0].flag, "radon");
    }

    #[test]
    fn boundary_strictness() {
        // θ1 = (n−1)(p−1) sits on the excluded boundary of both C_p and D_p.
        assert!(!is_ap(&wp([1.0, 0.0, 0.0], 2), 2.0));
        assert!(is_ap(&wp([0.999, 0.0, 0.0], 2), 2.0));
        // θ2 = 0 is admitted by A (weak) and C_p (weak).
        assert!(is_ap(&wp([0.0, 0.0, 0.5], 3), 2.0));
        // Σθ = −n is excluded from B.
        assert!(!is_radon(&wp([0.0, -2.0, 0.0], 2)));
        assert!(is_radon(&wp([0.0, -1.999, 0.0], 2)));
    }

    #[test]
    fn sobolev_and_poincare_flags() {
        let w = wp([0.0, 4.0, 0.0], 3);
        // Not A_2, but θ1 = θ3 = 0 and θ2 ≥ n(p−1) = 3.
        let r = classify(&w, &ProbeExponents::new(2.0).with_q(1.5));
        assert_eq!(r.ap_at(2.0), Some(false));
        assert_eq!(r.sobolev_admissible, Some(true));

        // Σθ < n(q−1) fails.
        let r = classify(&wp([0.0; 3], 3), &ProbeExponents::new(2.0).with_q(1.5));
        assert_eq!(r.sobolev_admissible, Some(false));

        let r = classify(&wp([0.0; 3], 2), &ProbeExponents::new(2.0).with_p0(1.2));
        assert_eq!(r.poincare_mixed_admissible, Some(true));
        let r = classify(&wp([0.0; 3], 2), &ProbeExponents::new(2.0).with_p0(2.0));
        assert_eq!(r.poincare_mixed_admissible, Some(false));
        // G has no θ3 condition.
        let r = classify(&wp([0.0, -0.1, -5.0], 2), &ProbeExponents::new(2.0).with_p0(1.5));
        assert_eq!(r.poincare_mixed_admissible, Some(false));
        let r = classify(&wp([0.0, -0.1, -0.05], 2), &ProbeExponents::new(2.0).with_p0(1.5));
        assert_eq!(r.poincare_mixed_admissible, Some(true));
    }

    #[test]
    fn chi_examples() {
        assert_relative_eq!(chi_exponent(&wp([1.0, 1.0, 1.0], 3), 2.0).unwrap(), 1.5);
        assert_relative_eq!(chi_exponent(&wp([0.0; 3], 3), 2.0).unwrap(), 3.0);
        assert_relative_eq!(chi_exponent(&wp([0.0, 2.0, 0.0], 2), 2.0).unwrap(), 2.0);
        assert!(matches!(
            chi_exponent(&wp([0.0; 3], 2), 2.0),
            Err(Error::Supercritical { .. })
        ));
    }

    #[test]
    fn alpha_examples() {
        assert_relative_eq!(
            reference_alpha(2, 1.0).unwrap(),
            2f64.sqrt() - 1.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            reference_alpha(3, 2.0).unwrap(),
            0.5 * (17f64.sqrt() - 3.0),
            epsilon = 1e-15
        );
        assert!(reference_alpha(3, 1e-300).unwrap() > 0.0);
        assert!(reference_alpha(3, 1e-12).unwrap() < 1e-12);
        assert!(reference_alpha(3, 0.0).is_err());
    }
}
