//! Closed-form constants against independent special-function oracles.

use fraclab::constants::*;
use fraclab::Error;
use proptest::prelude::*;
use statrs::function::gamma::gamma as gamma_ref;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// ═══════════════════════════════════════════════════════════════════
// Worked values
// ═══════════════════════════════════════════════════════════════════

#[test]
fn hardy_constant_half_order() {
    assert!((hardy_constant(3, 0.5).unwrap() - 2.0 / PI).abs() <= 1e-12);
    // 2Γ²(5/4)/Γ²(3/4) from the reference gamma function
    let want = 2.0 * (gamma_ref(1.25) / gamma_ref(0.75)).powi(2);
    assert!(rel(hardy_constant(4, 0.5).unwrap(), want) <= 1e-12);
    assert!(rel(want, 1.094_219_8) <= 1e-7);
}

#[test]
fn kappa_reference_values() {
    assert!((kappa_s(0.5).unwrap() - 1.0).abs() <= 1e-14);
    let k25 = gamma_ref(0.75) / (0.5f64.sqrt() * gamma_ref(0.25));
    let k75 = gamma_ref(0.25) / (2f64.sqrt() * gamma_ref(0.75));
    assert!(rel(kappa_s(0.25).unwrap(), k25) <= 1e-12);
    assert!(rel(kappa_s(0.75).unwrap(), k75) <= 1e-12);
    assert!(rel(k25, 0.477_988_8) <= 1e-6);
    assert!(rel(k75, 2.0921) <= 1e-4);
}

#[test]
fn gagliardo_constant_half_order() {
    assert!(rel(gagliardo_constant(1, 0.5).unwrap(), 1.0 / (2.0 * PI)) <= 1e-13);
    assert!(rel(gagliardo_constant(3, 0.5).unwrap(), 1.0 / (2.0 * PI * PI)) <= 1e-13);
    // the principal-value constant is twice the form constant
    assert!(rel(singular_integral_constant(3, 0.5).unwrap(), 1.0 / (PI * PI)) <= 1e-13);
}

#[test]
fn poisson_normalizer_closed_and_quadrature() {
    assert!(rel(poisson_normalizer(1, 0.5).unwrap(), 1.0 / PI) <= 1e-13);
    for &(n, s) in &[(2usize, 0.5), (3, 0.25), (4, 0.75), (1, 0.1), (5, 0.9)] {
        let a = poisson_normalizer_closed(n, s).unwrap();
        let b = poisson_normalizer_quadrature(n, s).unwrap();
        assert!(rel(a, b) <= 1e-10, "n={n} s={s}: {a} vs {b}");
    }
}

#[test]
fn hardy_constant_tends_to_classical() {
    for n in 3..=5usize {
        let classical = ((n as f64 - 2.0) / 2.0).powi(2);
        assert!(rel(hardy_constant(n, 0.999).unwrap(), classical) <= 1e-2, "n={n}");
    }
}

#[test]
fn invalid_orders_and_dimensions_are_rejected() {
    assert!(matches!(kappa_s(0.0), Err(Error::InvalidParams(_))));
    assert!(matches!(kappa_s(1.0), Err(Error::InvalidParams(_))));
    assert!(hardy_constant(1, 0.5).is_err());
    assert!(gamma(0.0).is_err());
    assert!(gamma(-2.0).is_err());
    assert!(FracParams::new(3, 0.5, 0.0, 1.0, 0.5).is_err());
}

#[test]
fn bubble_coefficient_reference() {
    // n = 3, s = 1/2: (−Δ)^{1/2}(1+r²)^{−1} = 2(1+r²)^{−2}
    assert!(rel(bubble_coefficient(3, 0.5).unwrap(), 2.0) <= 1e-13);
    assert!(rel(bubble_amplitude(3, 0.5).unwrap(), 2.0) <= 1e-13);
}

// ═══════════════════════════════════════════════════════════════════
// Properties
// ═══════════════════════════════════════════════════════════════════

proptest! {
    #[test]
    fn gamma_recurrence(x in 0.05f64..30.0) {
        let lhs = gamma(x + 1.0).unwrap();
        let rhs = x * gamma(x).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-12);
    }

    #[test]
    fn gamma_matches_reference(x in -4.5f64..40.0) {
        prop_assume!((x - x.round()).abs() > 1e-3 || x > 0.5);
        prop_assert!(rel(gamma(x).unwrap(), gamma_ref(x)) <= 1e-12);
    }

    #[test]
    fn hardy_constant_matches_reference(n in 1usize..8, s in 0.01f64..0.99) {
        prop_assume!(n as f64 > 2.0 * s);
        let nf = n as f64;
        let want = 4f64.powf(s) * (gamma_ref((nf + 2.0 * s) / 4.0) / gamma_ref((nf - 2.0 * s) / 4.0)).powi(2);
        prop_assert!(rel(hardy_constant(n, s).unwrap(), want) <= 1e-12);
    }

    #[test]
    fn kappa_matches_reference(s in 0.01f64..0.99) {
        let want = gamma_ref(1.0 - s) / (2f64.powf(2.0 * s - 1.0) * gamma_ref(s));
        prop_assert!(rel(kappa_s(s).unwrap(), want) <= 1e-12);
    }

    #[test]
    fn normalizer_forms_agree(n in 1usize..7, s in 0.05f64..0.95) {
        let a = poisson_normalizer_closed(n, s).unwrap();
        let b = poisson_normalizer_quadrature(n, s).unwrap();
        prop_assert!(rel(a, b) <= 1e-10);
    }

    #[test]
    fn critical_power_is_conformal(n in 1usize..8, s in 0.01f64..0.99) {
        prop_assume!(n as f64 > 2.0 * s);
        let p = FracParams::critical(n, s, 0.0).unwrap();
        let nf = n as f64;
        prop_assert!((nf + 2.0 * s - p.p * (nf - 2.0 * s)).abs() <= 1e-12 * nf);
        prop_assert!((p.beta() - 0.5 * (nf - 2.0 * s)).abs() <= 1e-14);
    }
}
