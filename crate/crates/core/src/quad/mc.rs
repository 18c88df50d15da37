//! Importance-sampled Monte Carlo over a bounding cylinder.
//!
//! Samples `s = |x'|` with density `∝ s^{n−2+θ1}` and `x_n` with density `∝ |x_n|^{θ3}`
//! by exact inverse CDFs, and the direction of `x'` uniformly on S^{n−2}. The
//! remaining factor `|x|^{θ2} · 1_region · g(f)` is averaged.

use super::{Field, QuadConfig, QuadResult, Region};
use crate::error::{Error, Result};
use crate::numeric::sphere_area;
use crate::weights::WeightParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// `∫ |z|^b dz` antiderivative, odd and monotone.
fn zcdf(z: f64, b: f64) -> f64 {
    z.signum() * z.abs().powf(b + 1.0) / (b + 1.0)
}

fn zinv(u: f64, b: f64) -> f64 {
    u.signum() * (u.abs() * (b + 1.0)).powf(1.0 / (b + 1.0))
}

pub(super) fn integrate(
    params: &WeightParams,
    region: &Region,
    f: Option<(&dyn Field, &dyn Fn(f64) -> f64)>,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let n = params.n;
    let [t1, t2, t3] = params.theta;
    let a = n as f64 - 1.0 + t1;
    if !(a > 0.0 && t3 > -1.0) {
        return Err(Error::DivergentMeasure {
            set: "sampling density".into(),
            exponent: if a > 0.0 { t3 } else { t1 },
        });
    }
    let (s_max, z0, z1) = match region {
        Region::Ball(b) => {
            let c = &b.center;
            let cs = c[..n - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
            let zlo = c[n - 1] - b.radius;
            (cs + b.radius, if b.half { zlo.max(0.0) } else { zlo }, c[n - 1] + b.radius)
        }
        Region::Cylinder(c) => (c.radius, c.z_lo, c.z_hi),
    };
    if z1 <= z0 {
        return Ok(QuadResult {
            value: 0.0,
            err_est: 0.0,
            evals: 0,
            converged: true,
        });
    }
    let zs = s_max.powf(a) / a;
    let (f0, f1) = (zcdf(z0, t3), zcdf(z1, t3));
    let scale = zs * (f1 - f0) * sphere_area(n - 2);
    let inside = |x: &[f64]| -> bool {
        match region {
            Region::Ball(b) => b.contains(x),
            Region::Cylinder(c) => {
                let s2: f64 = x[..n - 1].iter().map(|v| v * v).sum();
                s2 < c.radius * c.radius && x[n - 1] > c.z_lo && x[n - 1] < c.z_hi
            }
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = vec![0.0; n];
    let mut dir = vec![0.0; n - 1];
    let (mut sum, mut sum2, mut count) = (0.0f64, 0.0f64, 0usize);
    let batch = 4096;
    loop {
        for _ in 0..batch {
            let s = s_max * rng.random::<f64>().powf(1.0 / a);
            let z = zinv(f0 + (f1 - f0) * rng.random::<f64>(), t3);
            loop {
                for d in dir.iter_mut() {
                    *d = rng.sample(StandardNormal);
                }
                let l = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if l > 1e-12 {
                    for d in dir.iter_mut() {
                        *d /= l;
                    }
                    break;
                }
            }
            for i in 0..n - 1 {
                x[i] = s * dir[i];
            }
            x[n - 1] = z;
            let mut v = 0.0;
            if inside(&x) {
                v = if t2 == 0.0 { 1.0 } else { (s * s + z * z).sqrt().powf(t2) };
                if let Some((g, map)) = f {
                    v *= map(g.value(&x));
                }
            }
            sum += v;
            sum2 += v * v;
        }
        count += batch;
        let mean = sum / count as f64;
        let var = (sum2 / count as f64 - mean * mean).max(0.0);
        let err = scale * (var / count as f64).sqrt();
        let value = scale * mean;
        let target = (cfg.rel_tol * value.abs()).max(cfg.abs_tol);
        let converged = err <= target && count >= 4 * batch;
        if converged || count + batch > cfg.max_evals {
            return Ok(QuadResult {
                value,
                err_est: err,
                evals: count,
                converged,
            });
        }
    }
}
