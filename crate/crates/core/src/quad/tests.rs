use super::*;
use crate::numeric::beta;
use crate::quad::rules::rule;
use approx::assert_relative_eq;
use proptest::prelude::*;
use std::f64::consts::PI;

fn wp(t: [f64; 3], n: usize) -> WeightParams {
    WeightParams::new(t, n).unwrap()
}

fn cfg() -> QuadConfig {
    QuadConfig::default().with_rel_tol(1e-9)
}

fn mu(t: [f64; 3], n: usize, region: Region) -> f64 {
    let r = integrate_weight(&wp(t, n), &region, &cfg()).unwrap();
    assert!(r.converged, "not converged: {r:?}");
    r.value
}

/// Closed form for origin-centered balls: `|S^{n−2}| R^k/k · B((n−1+θ1)/2, (1+θ3)/2)`.
fn origin_ball(t: [f64; 3], n: usize, r: f64) -> f64 {
    let k = n as f64 + t.iter().sum::<f64>();
    sphere_area(n - 2) * r.powf(k) / k * beta((n as f64 - 1.0 + t[0]) / 2.0, (1.0 + t[2]) / 2.0)
}

/// Composite rule with `m` Gauss–Jacobi nodes on each of `pieces` equal panels,
/// carrying exponents `ea`, `eb` at the outer ends only.
fn oracle_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, ea: f64, eb: f64) -> f64 {
    let pieces = 64;
    let m = 24;
    let h = (b - a) / pieces as f64;
    let mut acc = 0.0;
    for i in 0..pieces {
        let lo = a + h * i as f64;
        let (pa, pb) = (if i == 0 { ea } else { 0.0 }, if i + 1 == pieces { eb } else { 0.0 });
        let r = rule(m, pb, pa);
        for (x, w) in r.nodes.iter().zip(&r.weights) {
            let t = lo + 0.5 * h * (1.0 + x);
            let base = (t - lo).powf(pa) * (lo + h - t).powf(pb);
            acc += w * f(t) / base * (0.5 * h).powf(1.0 + pa + pb);
        }
    }
    acc
}

/// `∫_{disk(a·e1, ρ)} |y|^{θ1} dy` in the plane, by polar angle about the origin.
fn disk_moment(a: f64, rho: f64, t1: f64) -> f64 {
    let k = 2.0 + t1;
    if a < rho {
        let f = |phi: f64| {
            let (s, c) = phi.sin_cos();
            let rmax = a * c + (rho * rho - a * a * s * s).sqrt();
            rmax.powf(k) / k
        };
        // Smooth and periodic: the trapezoid rule converges geometrically.
        let m = 400;
        (0..m).map(|i| f(2.0 * PI * i as f64 / m as f64)).sum::<f64>() * 2.0 * PI / m as f64
    } else {
        let g = (rho / a).asin();
        // φ = g·sin(u) removes the square-root behavior at the tangent directions.
        let f = |u: f64| {
            let phi = g * u.sin();
            let (s, c) = phi.sin_cos();
            let d = (rho * rho - a * a * s * s).max(0.0).sqrt();
            let (r0, r1) = (a * c - d, a * c + d);
            (r1.powf(k) - r0.powf(k)) / k * g * u.cos()
        };
        oracle_1d(f, -PI / 2.0, PI / 2.0, 0.0, 0.0)
    }
}

/// `μ(B_R(c))` for n = 3 and θ2 = 0 by slicing in x_n.
fn sliced_ball(t1: f64, t3: f64, c: [f64; 3], r: f64) -> f64 {
    let a = c[0].hypot(c[1]);
    let slice = |z: f64| {
        let rho = (r * r - (z - c[2]).powi(2)).max(0.0).sqrt();
        if rho == 0.0 {
            0.0
        } else {
            z.abs().powf(t3) * disk_moment(a, rho, t1)
        }
    };
    let (lo, hi) = (c[2] - r, c[2] + r);
    let mut cuts = vec![lo, hi];
    if lo < 0.0 && hi > 0.0 {
        cuts.push(0.0);
    }
    // Slices through the axis change formula where ρ(z) = a.
    if a < r {
        let dz = (r * r - a * a).sqrt();
        cuts.push(c[2] - dz);
        cuts.push(c[2] + dz);
    }
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (za, zb) = (w[0], w[1]);
        let ea = if za == 0.0 { t3 } else if za == lo { 0.5 } else { 0.0 };
        let eb = if zb == 0.0 { t3 } else if zb == hi { 0.5 } else { 0.0 };
        acc += oracle_1d(slice, za, zb, ea, eb);
    }
    acc
}

#[test]
fn lebesgue_disk() {
    assert_relative_eq!(mu([0.0; 3], 2, Ball::centered(2, 1.0).into()), PI, max_relative = 1e-9);
}

#[test]
fn half_disk_with_xn_weight() {
    let v = mu([0.0, 0.0, 1.0], 2, Ball::centered(2, 1.0).half().into());
    assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-9);
}

#[test]
fn abs_x1_on_disk() {
    assert_relative_eq!(mu([1.0, 0.0, 0.0], 2, Ball::centered(2, 1.0).into()), 4.0 / 3.0, max_relative = 1e-9);
}

#[test]
fn origin_balls_match_beta_closed_form() {
    for &n in &[2usize, 3, 4] {
        for &t in &[
            [0.0, 0.0, 0.0],
            [-0.5, 0.0, -0.5],
            [1.0, -0.5, 0.25],
            [2.5, 1.0, 3.0],
            [-0.9 * (n as f64 - 1.0), 0.3, -0.9],
        ] {
            let v = mu(t, n, Ball::centered(n, 1.7).into());
            assert_relative_eq!(v, origin_ball(t, n, 1.7), max_relative = 1e-8);
        }
    }
}

#[test]
fn off_axis_balls_match_slicing_oracle() {
    let cases: &[([f64; 3], f64, f64, f64)] = &[
        ([0.3, 0.2, 0.5], 0.5, 0.0, 1.0),
        ([0.3, 0.0, 0.2], 1.0, 0.0, 0.0),
        ([1.0, 1.0, 2.0], 0.7, 2.0, -0.5),
        ([0.0, 0.5, 0.0], 0.8, -0.5, 0.5),
        ([2.0, 0.0, -0.1], 0.5, 1.5, 0.0),
        ([0.1, 0.1, 0.9], 1.0, -1.5, -0.7),
    ];
    for &(c, r, t1, t3) in cases {
        let got = mu([t1, 0.0, t3], 3, Ball::new(c.to_vec(), r).into());
        let want = sliced_ball(t1, t3, c, r);
        assert_relative_eq!(got, want, max_relative = 2e-8);
    }
}

#[test]
fn prime_ball_examples() {
    assert_relative_eq!(exact_prime_ball(0.0, 3, 1.0).unwrap(), PI, max_relative = 1e-14);
    assert_relative_eq!(exact_prime_ball(1.0, 2, 1.0).unwrap(), 1.0, max_relative = 1e-14);
    let want = 4.0 * PI / 3.0 * 2.0 * 2f64.sqrt();
    assert_relative_eq!(exact_prime_ball(-0.5, 3, 2.0).unwrap(), want, max_relative = 1e-14);
    assert_relative_eq!(want, 11.8477, max_relative = 1e-5);
    assert!(exact_prime_ball(-2.0, 3, 1.0).is_err());
}

#[test]
fn cylinder_matches_prime_ball() {
    for &n in &[2usize, 3] {
        for &t1 in &[-0.5, 0.0, 1.0, 2.5] {
            for &rho in &[0.25, 1.0, 4.0] {
                let c = Cylinder {
                    radius: rho,
                    z_lo: -0.5,
                    z_hi: 0.5,
                };
                let v = mu([t1, 0.0, 0.0], n, c.into());
                let want = exact_prime_ball(t1, n, rho).unwrap();
                assert_relative_eq!(v, want, max_relative = 1e-8);
            }
        }
    }
}

#[test]
fn one_sided_cylinders() {
    // {|x'| < 1, 0.5 < x_n < 2} and its mirror, n = 3, weight |x_n|.
    let up = Cylinder {
        radius: 1.0,
        z_lo: 0.5,
        z_hi: 2.0,
    };
    let want = PI * (4.0 - 0.25) / 2.0;
    assert_relative_eq!(mu([0.0, 0.0, 1.0], 3, up.into()), want, max_relative = 1e-8);
    let down = Cylinder {
        radius: 1.0,
        z_lo: -2.0,
        z_hi: -0.5,
    };
    assert_relative_eq!(mu([0.0, 0.0, 1.0], 3, down.into()), want, max_relative = 1e-8);
    let rect = Cylinder {
        radius: 1.0,
        z_lo: 0.0,
        z_hi: 2.0,
    };
    assert_relative_eq!(mu([0.0, 0.0, 1.0], 2, rect.into()), 4.0, max_relative = 1e-8);
}

#[test]
fn weighted_function_examples() {
    let c = cfg();
    let b: Region = Ball::centered(2, 1.0).into();
    let one = integrate_weighted_function(&wp([1.0, 0.0, 0.0], 2), &Constant(1.0), 1.0, &b, &c).unwrap();
    let w = integrate_weight(&wp([1.0, 0.0, 0.0], 2), &b, &c).unwrap();
    assert_relative_eq!(one.value, w.value, max_relative = 1e-9);

    let xn = FnField(|x: &[f64]| x[x.len() - 1]);
    let v = integrate_weighted_function(&wp([0.0; 3], 2), &xn, 2.0, &b, &c).unwrap();
    assert_relative_eq!(v.value, PI / 4.0, max_relative = 1e-9);

    let h: Region = Ball::centered(2, 1.0).half().into();
    let v = integrate_weighted_function(&wp([0.0, 0.0, 1.0], 2), &xn, 1.0, &h, &c).unwrap();
    assert_relative_eq!(v.value, PI / 8.0, max_relative = 1e-9);
}

#[test]
fn weighted_function_off_axis_n3_and_n4() {
    // ∫_{B_R(c)} x_1 dx = x̄_1 |B| for Lebesgue measure.
    for &n in &[3usize, 4] {
        let mut c = vec![0.0; n];
        c[0] = 0.4;
        c[n - 1] = 0.3;
        let b: Region = Ball::new(c, 1.0).into();
        let x1 = FnField(|x: &[f64]| 2.0 + x[0]);
        let v = integrate_weighted_function(&wp([0.0; 3], n), &x1, 1.0, &b, &cfg()).unwrap();
        assert_relative_eq!(v.value, 2.4 * unit_ball_volume(n), max_relative = 1e-8);
    }
}

#[test]
fn scaling_exponent_examples() {
    let c = cfg();
    for &(t, n, want) in &[
        ([0.0, 0.0, 0.0], 2usize, 2.0),
        ([1.0, -0.5, 0.25], 3, 3.75),
        ([0.0, 2.0, 0.0], 2, 4.0),
    ] {
        let fit = mu_scaling_exponent(&wp(t, n), 0.1, 10.0, 5, &c).unwrap();
        assert_relative_eq!(fit.slope, want, epsilon = 1e-8);
        assert!(fit.residual < 1e-8);
    }
}

#[test]
fn divergence_is_refused_only_when_touching() {
    let c = cfg();
    let w = wp([-1.0, 0.0, 0.0], 2);
    let touching: Region = Ball::new(vec![0.5, 0.0], 1.0).into();
    assert!(matches!(
        integrate_weight(&w, &touching, &c),
        Err(Error::DivergentMeasure { .. })
    ));
    let away: Region = Ball::new(vec![2.0, 0.0], 1.0).into();
    let v = integrate_weight(&w, &away, &c).unwrap();
    assert!(v.value.is_finite() && v.converged);
    let origin = wp([0.0, -3.0, 0.0], 2);
    assert!(matches!(
        integrate_weight(&origin, &Ball::centered(2, 1.0).into(), &c),
        Err(Error::DivergentMeasure { .. })
    ));
}

#[test]
fn truncated_integrals_increase_to_full() {
    let w = wp([0.0, 0.5, -0.5], 2);
    let b: Region = Ball::centered(2, 1.0).into();
    let full = integrate_weight(&w, &b, &cfg()).unwrap().value;
    let mut prev = 0.0;
    for l in 1..6 {
        let s = 4f64.powi(-l);
        let v = integrate_weight_truncated(&w, &b, Truncation { delta: s, h: s }, &cfg())
            .unwrap()
            .value;
        assert!(v > prev && v < full);
        prev = v;
    }
    assert!((full - prev) / full < 0.05);
}

#[test]
fn monte_carlo_agrees_and_is_deterministic() {
    let mut c = QuadConfig::default().with_rel_tol(2e-3);
    c.method = Method::MonteCarloImportance;
    c.seed = 11;
    let w = wp([0.5, -0.5, -0.3], 3);
    let b: Region = Ball::new(vec![0.2, 0.0, 0.1], 1.0).into();
    let a = integrate_weight(&w, &b, &c).unwrap();
    let again = integrate_weight(&w, &b, &c).unwrap();
    assert_eq!(a, again);
    let exact = integrate_weight(&w, &b, &cfg()).unwrap().value;
    assert!((a.value - exact).abs() < 5.0 * a.err_est, "{} vs {exact} ± {}", a.value, a.err_est);
}

#[test]
fn results_are_bit_identical() {
    let w = wp([0.7, -0.4, 0.2], 3);
    let b: Region = Ball::new(vec![0.3, -0.2, 0.1], 0.6).into();
    assert_eq!(integrate_weight(&w, &b, &cfg()).unwrap(), integrate_weight(&w, &b, &cfg()).unwrap());
}

fn params3() -> impl Strategy<Value = WeightParams> {
    (-1.5f64..3.0, -1.0f64..2.0, -0.8f64..2.0).prop_map(|(a, b, c)| wp([a, b, c], 3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn homogeneity_off_center(w in params3(), cx in -2.0f64..2.0, cz in -2.0f64..2.0,
                              r in 0.2f64..1.5, lam in prop::sample::select(vec![2.0, 4.0])) {
        prop_assume!(crate::weights::is_radon(&w));
        let c = QuadConfig::default().with_rel_tol(1e-8);
        let b: Region = Ball::new(vec![cx, 0.0, cz], r).into();
        let bl: Region = Ball::new(vec![lam * cx, 0.0, lam * cz], lam * r).into();
        let m = integrate_weight(&w, &b, &c).unwrap().value;
        let ml = integrate_weight(&w, &bl, &c).unwrap().value;
        let k = w.homogeneous_dim();
        prop_assert!((ml / (m * lam.powf(k)) - 1.0).abs() < 2e-8);
    }

    #[test]
    fn reflection_and_rotation(w in params3(), cx in -1.5f64..1.5, cz in -1.5f64..1.5,
                               r in 0.2f64..1.5, ang in 0.0f64..6.28) {
        prop_assume!(crate::weights::is_radon(&w));
        let c = QuadConfig::default().with_rel_tol(1e-8);
        let m = integrate_weight(&w, &Ball::new(vec![cx, 0.0, cz], r).into(), &c).unwrap().value;
        let refl = integrate_weight(&w, &Ball::new(vec![cx, 0.0, -cz], r).into(), &c).unwrap().value;
        let rot = integrate_weight(
            &w,
            &Ball::new(vec![cx * ang.cos(), cx * ang.sin(), cz], r).into(),
            &c,
        ).unwrap().value;
        prop_assert!((refl / m - 1.0).abs() < 2e-8);
        prop_assert!((rot / m - 1.0).abs() < 2e-8);
    }

    #[test]
    fn planar_half_ball_is_half_of_symmetric_ball(t1 in -0.9f64..2.0, t3 in -0.9f64..2.0,
                                                   cx in -1.0f64..1.0, r in 0.2f64..1.5) {
        let w = wp([t1, 0.0, t3], 2);
        let c = QuadConfig::default().with_rel_tol(1e-9);
        let full = integrate_weight(&w, &Ball::new(vec![cx, 0.0], r).into(), &c).unwrap().value;
        let half = integrate_weight(&w, &Ball::new(vec![cx, 0.0], r).half().into(), &c).unwrap().value;
        prop_assert!((2.0 * half / full - 1.0).abs() < 2e-9);
    }
}
