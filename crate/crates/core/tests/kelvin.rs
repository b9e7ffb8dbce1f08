//! Kelvin transforms: inversion geometry, the comparison inequality, the
//! conformal covariance of the critical equation and moving spheres.

use fraclab::constants::*;
use fraclab::fraclap::FracLapOptions;
use fraclab::grid::FnProfile;
use fraclab::kelvin::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn bubble(n: usize, s: f64) -> impl Fn(&[f64]) -> f64 + Clone {
    let k = bubble_amplitude(n, s).unwrap();
    let b = 0.5 * (n as f64 - 2.0 * s);
    move |x: &[f64]| k * (1.0 + x.iter().map(|a| a * a).sum::<f64>()).powf(-b)
}

fn arb_pair(n: usize) -> impl Strategy<Value = SpherePair> {
    (proptest::collection::vec(-3.0f64..3.0, n), 0.05f64..0.95).prop_filter_map("centre too small", |(c, q)| {
        let l = norm(&c);
        (l > 0.3).then(|| SpherePair::new(c, q * l).unwrap())
    })
}

// ═══════════════════════════════════════════════════════════════════
// Geometry
// ═══════════════════════════════════════════════════════════════════

proptest! {
    #[test]
    fn inversion_is_an_involution(sp in arb_pair(3), x in proptest::collection::vec(-5.0f64..5.0, 3)) {
        let d: f64 = x.iter().zip(&sp.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assume!(d > 1e-3);
        let back = invert_point(&invert_point(&x, &sp).unwrap(), &sp).unwrap();
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * d.max(1.0) * (1.0 + sp.radius * sp.radius / (d * d)));
    }

    #[test]
    fn kelvin_transform_is_an_involution(sp in arb_pair(2), x in proptest::collection::vec(-4.0f64..4.0, 2), s in 0.1f64..0.9) {
        let u = |y: &[f64]| (-(y[0] - 0.3).powi(2) - 2.0 * y[1] * y[1]).exp();
        let once = kelvin_boundary(u, s, &sp);
        let twice = kelvin_boundary(|y: &[f64]| once.eval(y).unwrap_or(0.0), s, &sp);
        let d: f64 = x.iter().zip(&sp.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assume!(d > 1e-2);
        let v = twice.eval(&x).unwrap();
        prop_assert!((v - u(&x)).abs() <= 1e-12 * (1.0 + u(&x)));
    }

    #[test]
    fn conformal_exponent_vanishes_at_critical_power(n in 1usize..8, s in 0.01f64..0.99, lam in -1.0f64..1.0) {
        prop_assume!(n as f64 > 2.0 * s);
        let p = FracParams::critical(n, s, lam).unwrap();
        prop_assert!(conformal_defect(&p).abs() <= 1e-12 * n as f64);
        let sub = FracParams::new(n, s, lam, 2.0 * s, 1.0 + 0.5 * (p.p - 1.0)).unwrap();
        prop_assert!(conformal_defect(&sub) > 0.0);
    }

    #[test]
    fn comparison_inequality_sign_pattern(sp in arb_pair(3), s in 0.05f64..0.95, seed in 0u64..1000) {
        let rep = lemma52_sweep(s, &sp, 500, seed).unwrap();
        prop_assert!(rep.verdict, "worst margin {}", rep.worst_margin);
    }
}

#[test]
fn comparison_inequality_with_many_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (k, &s) in [0.25, 0.5, 0.75].iter().enumerate() {
        for n in [1usize, 2, 3] {
            let sp = random_sphere_pair(&mut rng, n);
            let rep = lemma52_sweep(s, &sp, 10_000, k as u64).unwrap();
            assert_eq!(rep.params["violations"], 0, "n={n} s={s}");
            assert_eq!(rep.n_samples, 20_000);
        }
    }
}

#[test]
fn comparison_is_strict_between_the_spheres() {
    let sp = SpherePair::new(vec![2.0, 0.0, 0.0], 1.0).unwrap();
    let inside = lemma52_check(&[2.5, 0.0, 0.0], 0.5, &sp).unwrap();
    assert_eq!(inside.region, Region::Inside);
    assert!(inside.margin > 0.0);
    let annulus = lemma52_check(&[0.5, 0.0, 0.0], 0.5, &sp).unwrap();
    assert_eq!(annulus.region, Region::Annulus);
    assert!(annulus.margin < 0.0);
    assert!(lemma52_check(&[2.5, 0.0, 0.0], 0.5, &SpherePair::new(vec![2.0, 0.0, 0.0], 3.0).unwrap()).is_err());
}

// ═══════════════════════════════════════════════════════════════════
// Bubble
// ═══════════════════════════════════════════════════════════════════

#[test]
fn bubble_is_fixed_by_unit_inversion_about_origin() {
    let sp = SpherePair::new(vec![0.0; 3], 1.0).unwrap();
    let u = bubble(3, 0.4);
    let kt = kelvin_boundary(u.clone(), 0.4, &sp);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for x in shell_samples(&sp, 0.01, 20.0, 500, 11) {
        let v = kt.eval(&x).unwrap();
        assert!((v - u(&x)).abs() <= 1e-12 * u(&x), "{x:?}");
    }
    // and by every inversion about x₀ with ρ² = 1 + |x₀|²
    for _ in 0..5 {
        let c = random_sphere_pair(&mut rng, 3).center;
        let sp = SpherePair::new(c.clone(), (1.0 + norm(&c).powi(2)).sqrt()).unwrap();
        let kt = kelvin_boundary(u.clone(), 0.4, &sp);
        for x in shell_samples(&sp, 0.05, 10.0, 200, 5) {
            assert!((kt.eval(&x).unwrap() - u(&x)).abs() <= 1e-12 * u(&x));
        }
    }
}

#[test]
fn extension_of_bubble_is_inversion_invariant_and_weighted_harmonic() {
    // n = 3, s = 1/2: U = K/(|x|²+(1+t)²) with K = 2
    let big_u = |x: &[f64], t: f64| 2.0 / (x.iter().map(|a| a * a).sum::<f64>() + (1.0 + t).powi(2));
    let sp = SpherePair::new(vec![0.6, -0.3, 0.2], 0.5).unwrap();
    let kt = kelvin_extension(big_u, 0.5, &sp);
    let v = |x: &[f64], t: f64| kt.eval(x, t).unwrap();
    for (x, t) in [(vec![1.0, 0.5, 0.0], 0.3), (vec![-1.0, 2.0, 1.0], 1.5), (vec![0.2, 0.1, 0.9], 0.05)] {
        let scale = v(&x, t) / (norm(&x).powi(2) + t * t).max(0.1);
        let lap = weighted_laplacian_point(v, 0.5, &x, t, 1e-3);
        assert!(lap.abs() <= 1e-4 * scale.max(1e-3), "({x:?},{t}): {lap:e}");
    }
}

#[test]
fn transformed_equation_holds_for_bubble_only() {
    let (n, s) = (3usize, 0.5);
    let k = bubble_amplitude(n, s).unwrap();
    let b = 0.5 * (n as f64 - 2.0 * s);
    let params = FracParams::critical(n, s, 0.0).unwrap();
    let sp = SpherePair::new(vec![1.5, 0.0, 0.0], 0.7).unwrap();
    let samples = shell_samples(&sp, 0.8, 3.0, 6, 2);
    let opts = FracLapOptions::default();
    let good = FnProfile::new(move |r: f64| k * (1.0 + r * r).powf(-b));
    let bad = FnProfile::new(move |r: f64| k * (-r * r).exp());
    let rg = transformed_residual(&good, &sp, &params, &samples, opts).unwrap();
    let rb = transformed_residual(&bad, &sp, &params, &samples, opts).unwrap();
    assert!(rg.max_rel <= 1e-4, "bubble residual {:e}", rg.max_rel);
    assert!(rg.max_abs <= rg.inherited + 1e-4 * k);
    assert!(rb.max_rel >= 10.0 * rg.max_rel.max(1e-6), "non-solution residual {:e}", rb.max_rel);
}

#[test]
fn moving_sphere_inequality_for_bubble() {
    let u = bubble(3, 0.5);
    let sp = SpherePair::new(vec![1.0, 0.0, 0.0], 0.5).unwrap();
    let samples = shell_samples(&sp, 0.5, 6.0, 1000, 17);
    let rep = moving_sphere_check(&u, 0.5, &sp, &samples, 1e-10).unwrap();
    assert!(rep.verdict, "worst margin {:e}", rep.worst_margin);
    assert!(rep.n_samples >= 990);
    // on the sphere itself the transform agrees with u
    let on = shell_samples(&sp, 0.5, 0.5, 50, 1);
    let kt = kelvin_boundary(&u, 0.5, &sp);
    for x in &on {
        assert!((kt.eval(x).unwrap() - u(x)).abs() <= 1e-12);
    }
}
