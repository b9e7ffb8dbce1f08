//! The fractional Laplacian: pointwise quadrature, spectral reference and
//! the assembled quadratic forms, each against an independent oracle.

use fraclab::constants::*;
use fraclab::fraclap::*;
use fraclab::grid::*;
use fraclab::quad;
use proptest::prelude::*;
use std::sync::OnceLock;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn truncating() -> FracLapOptions {
    FracLapOptions { allow_truncation: true, ..Default::default() }
}

// ═══════════════════════════════════════════════════════════════════
// Pointwise values with closed forms
// ═══════════════════════════════════════════════════════════════════

#[test]
fn power_law_is_saturated_with_hardy_constant() {
    let g = RadialGrid::per_decade(1e-6, 1e6, 80).unwrap();
    for &(n, s) in &[(3usize, 0.5), (3, 0.25), (3, 0.8), (1, 0.3), (2, 0.5)] {
        let beta = 0.5 * (n as f64 - 2.0 * s);
        let u = RadialFunction::from_fn(g.clone(), |r| r.powf(-beta), InnerModel::PowerLaw, TailModel::PowerLaw).unwrap();
        let lam = hardy_constant(n, s).unwrap();
        for &r in &[0.01, 1.0, 37.0] {
            let v = fraclap_radial(&u, n, s, r).unwrap().total();
            let e = rel(v, lam * r.powf(-beta - 2.0 * s));
            assert!(e <= 1e-3, "n={n} s={s} r={r}: rel err {e:e}");
        }
    }
}

#[test]
fn bubble_maps_to_its_power() {
    let g = RadialGrid::per_decade(1e-4, 1e4, 60).unwrap();
    for &(n, s) in &[(3usize, 0.5), (3, 0.3), (1, 0.25), (2, 0.6)] {
        let b = 0.5 * (n as f64 - 2.0 * s);
        let c = bubble_coefficient(n, s).unwrap();
        let u = RadialFunction::from_fn(g.clone(), |r| (1.0 + r * r).powf(-b), InnerModel::Even, TailModel::PowerLaw).unwrap();
        let exact = FnProfile::new(move |r: f64| (1.0 + r * r).powf(-b));
        for &r in &[0.05f64, 0.7, 3.0] {
            let want = c * (1.0 + r * r).powf(-(n as f64 + 2.0 * s) / 2.0);
            let sampled = fraclap_radial(&u, n, s, r).unwrap().total();
            let analytic = fraclap_profile(&exact, n, s, r, FracLapOptions::default()).unwrap().total();
            assert!(rel(sampled, want) <= 1e-3, "n={n} s={s} r={r}: sampled");
            assert!(rel(analytic, want) <= 1e-6, "n={n} s={s} r={r}: analytic");
        }
    }
}

#[test]
fn pointwise_quadrature_agrees_with_radial_reduction() {
    let s = 0.4;
    let f = |x: &[f64]| (-x.iter().map(|a| a * a).sum::<f64>()).exp();
    let prof = FnProfile::new(|r: f64| (-r * r).exp());
    for n in 1..=3usize {
        let mut x = vec![0.0; n];
        x[0] = 0.8;
        let a = fraclap_point(f, s, &x, &[vec![0.0; n]], FracLapOptions::default()).unwrap().total();
        let b = fraclap_profile(&prof, n, s, 0.8, FracLapOptions::default()).unwrap().total();
        assert!(rel(a, b) <= 1e-6, "n={n}: {a} vs {b}");
    }
    assert!(fraclap_point(f, s, &[0.1; 4], &[], FracLapOptions::default()).is_err());
}

#[test]
fn truncated_data_without_tail_is_rejected() {
    let g = RadialGrid::per_decade(1e-3, 10.0, 20).unwrap();
    let u = RadialFunction::from_fn(g, |r| 1.0 / (1.0 + r), InnerModel::Even, TailModel::Zero).unwrap();
    assert!(fraclap_radial(&u, 3, 0.5, 1.0).is_err());
    assert!(fraclap_radial_with(&u, 3, 0.5, 1.0, truncating()).is_ok());
    assert!(fraclap_radial(&u, 3, 0.5, 20.0).is_err());
}

// ═══════════════════════════════════════════════════════════════════
// Spectral reference
// ═══════════════════════════════════════════════════════════════════

#[test]
fn gaussian_spectral_matches_radial() {
    let s = 0.5;
    let pg = PeriodicGrid::new(1, 20.0, 1024).unwrap();
    let samples = pg.sample(|x| (-x[0] * x[0]).exp());
    let spec = fraclap_spectral(&pg, &samples, s).unwrap();
    assert!(!spec.boundary_warning);
    let mass: f64 = samples.iter().sum::<f64>() * pg.spacing();
    let g = RadialGrid::per_decade(1e-4, 40.0, 60).unwrap();
    let u = RadialFunction::from_fn(g, |r| (-r * r).exp(), InnerModel::Even, TailModel::Zero).unwrap();
    let axis = pg.axis();
    for (j, &x) in axis.iter().enumerate().filter(|(_, x)| x.abs() > 0.05 && x.abs() < 3.0).step_by(7) {
        let reference = spec.values[j] - periodic_image_sum(&pg, mass, s, x).unwrap();
        let radial = fraclap_radial_with(&u, 1, s, x.abs(), truncating()).unwrap().total();
        assert!(rel(radial, reference) <= 1e-3, "x={x}: {radial} vs {reference}");
    }
}

// ═══════════════════════════════════════════════════════════════════
// Quadratic forms
// ═══════════════════════════════════════════════════════════════════

/// Radial kernel r²ρ²∫_{S²}∫_{S²}|rω−ρσ|^{−3−2s} of the double integral in R³.
fn kernel3(s: f64, r: f64, rho: f64) -> f64 {
    let e = -1.0 - 2.0 * s;
    8.0 * std::f64::consts::PI.powi(2) * r * rho / (1.0 + 2.0 * s) * ((r - rho).abs().powf(e) - (r + rho).powf(e))
}

/// C_{3,s}∬(u(x)−u(y))²|x−y|^{−3−2s} by nested adaptive quadrature for a
/// radial u supported in [a, c] with kinks at `kinks`.
fn brute_force_seminorm(u: &dyn Fn(f64) -> f64, a: f64, c: f64, kinks: &[f64], s: f64) -> f64 {
    let tol = 1e-9;
    let inner = |r: f64| {
        let mut pts = kinks.to_vec();
        pts.push(r);
        let near = quad::adaptive(
            |rho| if rho == r { 0.0 } else { (u(r) - u(rho)).powi(2) * kernel3(s, r, rho) },
            &quad::breakpoints(a, c, &pts),
            1e-300,
            tol,
            4000,
        );
        let below = quad::adaptive(|rho| kernel3(s, r, rho), &[0.0, 0.5 * a, a], 1e-300, tol, 4000);
        // ρ = c/v on (c, ∞)
        let above = quad::adaptive(
            |v: f64| if v <= 0.0 { 0.0 } else { kernel3(s, r, c / v) * c / (v * v) },
            &[0.0, 1e-6, 1e-3, 0.1, 0.5, 0.9, 1.0],
            1e-300,
            tol,
            4000,
        );
        near.value + 2.0 * u(r).powi(2) * (below.value + above.value)
    };
    let outer = quad::adaptive(inner, &quad::breakpoints(a, c, kinks), 1e-300, 1e-8, 4000);
    gagliardo_constant(3, s).unwrap() * outer.value
}

#[test]
fn gagliardo_form_matches_brute_force_double_integral() {
    let g = RadialGrid::log_uniform(0.1, 4.0, 20).unwrap();
    let x = g.nodes().to_vec();
    let k = 9;
    let (a, c) = (x[k - 1], x[k + 2]);
    let hat = |j: usize, r: f64| {
        if r <= x[j - 1] || r >= x[j + 1] {
            0.0
        } else if r <= x[j] {
            (r - x[j - 1]) / (x[j] - x[j - 1])
        } else {
            (x[j + 1] - r) / (x[j + 1] - x[j])
        }
    };
    for &s in &[0.3, 0.5, 0.7] {
        let forms = assemble_forms(&g, &FracParams::critical(3, s, 0.0).unwrap()).unwrap();
        for &w in &[0.0, 0.5, -1.0] {
            let f = |r: f64| hat(k, r) + w * hat(k + 1, r);
            let mut nodal = vec![0.0; x.len()];
            nodal[k] = 1.0;
            nodal[k + 1] = w;
            let want = brute_force_seminorm(&f, a, c, &[x[k], x[k + 1]], s);
            let got = forms.gagliardo(&nodal);
            assert!(rel(got, want) <= 1e-2, "s={s} w={w}: {got} vs {want}");
        }
    }
}

#[test]
fn gaussian_seminorm_matches_fourier_value() {
    for &(n, s) in &[(3usize, 0.5), (3, 0.25), (1, 0.3), (2, 0.7)] {
        let g = RadialGrid::per_decade(1e-3, 8.0, 40).unwrap();
        let forms = assemble_forms(&g, &FracParams::critical(n, s, 0.0).unwrap()).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        let nf = n as f64;
        let exact = 2f64.powf(-nf) * sphere_area(n) * 2f64.powf((nf + 2.0 * s) / 2.0 - 1.0) * gamma((nf + 2.0 * s) / 2.0).unwrap();
        let e = rel(forms.gagliardo(&u), exact);
        assert!(e <= 1e-2, "n={n} s={s}: rel err {e:e}");
    }
}

#[test]
fn sidecar_round_trip() {
    let g = RadialGrid::per_decade(1e-2, 1e2, 10).unwrap();
    let forms = assemble_forms(&g, &FracParams::critical(3, 0.5, 0.0).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("forms.bin");
    forms.save_sidecar(&path).unwrap();
    let back = QuadraticFormAssembly::load_sidecar(&path, &g, 3, 0.5).unwrap().expect("matching key");
    assert_eq!(back.gagliardo_matrix, forms.gagliardo_matrix);
    assert_eq!(back.hardy_diag, forms.hardy_diag);
    assert!(QuadraticFormAssembly::load_sidecar(&path, &g, 3, 0.4).unwrap().is_none());
}

fn shared_forms() -> &'static QuadraticFormAssembly {
    static FORMS: OnceLock<QuadraticFormAssembly> = OnceLock::new();
    FORMS.get_or_init(|| {
        let g = RadialGrid::per_decade(1e-3, 1e3, 20).unwrap();
        assemble_forms(&g, &FracParams::critical(3, 0.5, 0.0).unwrap()).unwrap()
    })
}

#[test]
fn forms_are_positive_semidefinite_and_bounded_by_hardy() {
    let forms = shared_forms();
    forms.check_psd().unwrap();
    let (mu, v) = forms.min_hardy_quotient().unwrap();
    let lam = hardy_constant(3, 0.5).unwrap();
    assert!(mu >= lam * (1.0 - 2e-2), "min quotient {mu} below Λ = {lam}");
    assert!(rel(forms.hardy_quotient(&v).unwrap(), mu) <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, r in 0.05f64..3.0) {
        let g = RadialGrid::per_decade(1e-4, 30.0, 30).unwrap();
        let f1 = |x: f64| (-x * x).exp();
        let f2 = |x: f64| (-0.5 * x * x).exp() * (1.0 + x * x);
        let mk = |f: &dyn Fn(f64) -> f64| RadialFunction::from_fn(g.clone(), f, InnerModel::Even, TailModel::Zero).unwrap();
        let (u1, u2) = (mk(&f1), mk(&f2));
        let comb = mk(&|x| a * f1(x) + b * f2(x));
        let l1 = fraclap_radial(&u1, 3, 0.4, r).unwrap().total();
        let l2 = fraclap_radial(&u2, 3, 0.4, r).unwrap().total();
        let lc = fraclap_radial(&comb, 3, 0.4, r).unwrap().total();
        let scale = (a * l1).abs() + (b * l2).abs() + 1e-12;
        prop_assert!((lc - (a * l1 + b * l2)).abs() <= 1e-8 * scale);
    }

    #[test]
    fn hardy_inequality_holds_for_positive_samples(
        w in proptest::collection::vec(0.0f64..1.0, 3),
        widths in proptest::collection::vec(0.05f64..20.0, 3),
    ) {
        let forms = shared_forms();
        let u: Vec<f64> = forms.grid.nodes().iter()
            .map(|&r| w.iter().zip(&widths).map(|(a, l)| a * (-(r / l).powi(2)).exp()).sum())
            .collect();
        prop_assume!(forms.hardy(&u) > 0.0);
        let lam = hardy_constant(3, 0.5).unwrap();
        prop_assert!(forms.hardy_quotient(&u).unwrap() >= lam * (1.0 - 1e-2));
    }

    #[test]
    fn rescaled_power_law_stays_saturated(s in 0.2f64..0.8, r in 0.03f64..30.0) {
        let n = 3usize;
        let beta = 0.5 * (n as f64 - 2.0 * s);
        let exact = FnProfile::new(move |x: f64| x.powf(-beta));
        let v = fraclap_profile(&exact, n, s, r, FracLapOptions::default()).unwrap().total();
        prop_assert!(rel(v, hardy_constant(n, s).unwrap() * r.powf(-beta - 2.0 * s)) <= 1e-6);
    }
}
