//! Small numeric helpers shared across modules.

use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// Volume of the unit ball in ℝ^d (d ≥ 0).
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface area of the unit sphere S^d ⊂ ℝ^{d+1}. `sphere_area(0) == 2`.
pub fn sphere_area(d: usize) -> f64 {
    let h = (d as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Euler Beta function via log-gamma.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// `∫_a^b r^{k-1} dr` for `0 ≤ a ≤ b`, stable for `k` near zero.
pub fn power_integral(a: f64, b: f64, k: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a == 0.0 {
        return if k > 0.0 { b.powf(k) / k } else { f64::INFINITY };
    }
    let l = ((b - a) / a).ln_1p();
    if (k * l).abs() < 1e-12 {
        return a.powf(k) * l;
    }
    a.powf(k) * (k * l).exp_m1() / k
}

/// Least-squares line `y = slope·x + intercept`; returns (slope, intercept, rms residual).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - icpt).powi(2))
        .sum();
    (slope, icpt, (ss / m).sqrt())
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ball_and_sphere_constants() {
        assert_relative_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(2), PI, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-13);
        assert_relative_eq!(sphere_area(0), 2.0, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(1), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(2), 4.0 * PI, epsilon = 1e-13);
    }

    #[test]
    fn power_integral_matches_closed_form() {
        assert_relative_eq!(power_integral(0.0, 2.0, 3.0), 8.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(power_integral(1.0, 2.0, 1e-14), 2f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(
            power_integral(0.5, 3.0, -1.5),
            (3f64.powf(-1.5) - 0.5f64.powf(-1.5)) / -1.5,
            max_relative = 1e-13
        );
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 2.5 * t - 1.0).collect();
        let (s, c, r) = linear_fit(&x, &y);
        assert_relative_eq!(s, 2.5, epsilon = 1e-14);
        assert_relative_eq!(c, -1.0, epsilon = 1e-14);
        assert!(r < 1e-14);
    }
}
