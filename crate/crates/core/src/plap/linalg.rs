//! Symmetric positive definite matrices in profile (skyline) storage.
//!
//! Row `i` stores the contiguous block of columns `first[i]..=i`. Cholesky
//! factorization keeps the profile, so with ring-ordered unknowns the cost is
//! `O(N·b²)` for bandwidth `b` of about one ring.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Profile {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl Profile {
    pub fn new(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut off = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            start.push(off);
            off += i - f + 1;
        }
        start.push(off);
        Self {
            first,
            start,
            data: vec![0.0; off],
        }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.start[i]..self.start[i + 1]]
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the profile.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.start[i] + j - self.first[i];
        self.data[k] += v;
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn factor(&mut self) -> Result<()> {
        for i in 0..self.dim() {
            let fi = self.first[i];
            for j in fi..=i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let s = {
                    let ri = &self.row(i)[k0 - fi..j - fi];
                    let rj = &self.row(j)[k0 - fj..j - fj];
                    dot(ri, rj)
                };
                let idx = self.start[i] + j - fi;
                let a = self.data[idx] - s;
                if j < i {
                    let d = self.data[self.start[j + 1] - 1];
                    self.data[idx] = a / d;
                } else {
                    if !(a > 0.0) {
                        return Err(Error::NonConvergence(format!(
                            "matrix is not positive definite at row {i} (pivot {a:e})"
                        )));
                    }
                    self.data[idx] = a.sqrt();
                }
            }
        }
        Ok(())
    }

    /// Solves `L Lᵀ x = b` in place after [`Profile::factor`].
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let r = self.row(i);
            let s = dot(&r[..i - fi], &b[fi..i]);
            b[i] = (b[i] - s) / r[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let r = self.row(i);
            b[i] /= r[i - fi];
            let xi = b[i];
            for (bk, l) in b[fi..i].iter_mut().zip(&r[..i - fi]) {
                *bk -= l * xi;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
