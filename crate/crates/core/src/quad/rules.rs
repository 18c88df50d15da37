//! Gauss–Jacobi rules by the Golub–Welsch eigenvalue method.

use crate::numeric::beta;
use nalgebra::{DMatrix, SymmetricEigen};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

/// Nodes on (−1, 1) with weights for `∫ f(x) (1−x)^α (1+x)^β dx`.
#[derive(Debug, Clone)]
pub struct JacobiRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `weights[i] / ((1−x_i)^α (1+x_i)^β)`, for integrands that carry the singular factor.
    pub scaled: Vec<f64>,
}

pub fn gauss_jacobi(m: usize, alpha: f64, beta_: f64) -> JacobiRule {
    assert!(m >= 1 && alpha > -1.0 && beta_ > -1.0);
    let (a, b) = (alpha, beta_);
    let mut j = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        j[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < m {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let off2 = if k1 == 1.0 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
            } else {
                4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b)
                    / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))
            };
            let off = off2.sqrt();
            j[(k, k + 1)] = off;
            j[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(a + b + 1.0) * beta(a + 1.0, b + 1.0);
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let scaled = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| {
            let mut v = w;
            if a != 0.0 {
                v /= (1.0 - x).powf(a);
            }
            if b != 0.0 {
                v /= (1.0 + x).powf(b);
            }
            v
        })
        .collect();
    JacobiRule {
        nodes,
        weights,
        scaled,
    }
}

thread_local! {
    static CACHE: RefCell<HashMap<(usize, u64, u64), Rc<JacobiRule>>> = RefCell::new(HashMap::new());
}

/// Cached rule; exponents are keyed by their bit patterns.
pub fn rule(m: usize, alpha: f64, beta_: f64) -> Rc<JacobiRule> {
    let key = (m, alpha.to_bits(), beta_.to_bits());
    CACHE.with(|c| {
        if let Some(r) = c.borrow().get(&key) {
            return r.clone();
        }
        let r = Rc::new(gauss_jacobi(m, alpha, beta_));
        c.borrow_mut().insert(key, r.clone());
        r
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_is_exact_to_degree_2m_minus_1() {
        let r = gauss_jacobi(10, 0.0, 0.0);
        for d in 0..20 {
            let s: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(x, w)| w * x.powi(d))
                .sum();
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "degree {d}: {s} vs {exact}");
        }
    }

    #[test]
    fn jacobi_moments() {
        for &(a, b) in &[(-0.5, 0.0), (0.3, -0.7), (2.5, 1.5), (-0.9, -0.9)] {
            let r = gauss_jacobi(8, a, b);
            let mu0 = 2f64.powf(a + b + 1.0) * beta(a + 1.0, b + 1.0);
            let s0: f64 = r.weights.iter().sum();
            assert_relative_eq!(s0, mu0, max_relative = 1e-13);
            let s1: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| x * w).sum();
            assert_relative_eq!(s1, mu0 * (b - a) / (a + b + 2.0), epsilon = 1e-13);
            // (1+x)^2 against the weight is a shifted Beta moment.
            let s2: f64 = r
                .nodes
                .iter()
                .zip(&r.weights)
                .map(|(x, w)| (1.0 + x).powi(2) * w)
                .sum();
            let e2 = 2f64.powf(a + b + 3.0) * beta(a + 1.0, b + 3.0);
            assert_relative_eq!(s2, e2, max_relative = 1e-12);
        }
    }

    #[test]
    fn cache_returns_same_rule() {
        let a = rule(6, -0.25, 0.5);
        let b = rule(6, -0.25, 0.5);
        assert!(Rc::ptr_eq(&a, &b));
    }
}
