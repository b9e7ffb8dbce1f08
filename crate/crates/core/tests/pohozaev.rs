//! Pohozaev and energy identities on closed-form and sampled extensions,
//! and the sign classification of their left side.

use fraclab::constants::*;
use fraclab::extension::*;
use fraclab::grid::*;
use fraclab::pohozaev::*;
use proptest::prelude::*;

/// The n = 3, s = 1/2 bubble extension K/(r²+(1+t)²) with K = 2 and its gradient.
fn half_order_bubble() -> ClosedForm<impl Fn(f64, f64) -> (f64, f64, f64)> {
    ClosedForm {
        value_grad: |r: f64, t: f64| {
            let d = r * r + (1.0 + t) * (1.0 + t);
            (2.0 / d, -4.0 * r / (d * d), -4.0 * (1.0 + t) / (d * d))
        },
        radius: 100.0,
    }
}

/// A(r²+(b+t)²)^{−c}, an arbitrary smooth field for bookkeeping checks.
fn family(a: f64, b: f64, c: f64) -> ClosedForm<impl Fn(f64, f64) -> (f64, f64, f64)> {
    ClosedForm {
        value_grad: move |r: f64, t: f64| {
            let d = r * r + (b + t) * (b + t);
            let v = a * d.powf(-c);
            let dv = -c * a * d.powf(-c - 1.0);
            (v, dv * 2.0 * r, dv * 2.0 * (b + t))
        },
        radius: 50.0,
    }
}

fn bubble_field(s: f64, pd: usize) -> ExtensionField {
    let (n, k) = (3usize, bubble_amplitude(3, s).unwrap());
    let b = 0.5 * (n as f64 - 2.0 * s);
    let g = RadialGrid::per_decade(1e-4, 1e4, 40).unwrap();
    let u = RadialFunction::from_fn(g, move |r| k * (1.0 + r * r).powf(-b), InnerModel::Even, TailModel::PowerLaw).unwrap();
    let radial = RadialGrid::per_decade(1e-3, 20.0, pd).unwrap();
    let hs = HalfStripGrid::geometric(radial, 1e-4, 20.0, 2 * pd).unwrap();
    poisson_extend(&u, n, s, &hs).unwrap()
}

// ═══════════════════════════════════════════════════════════════════
// Identities
// ═══════════════════════════════════════════════════════════════════

#[test]
fn closed_form_bubble_satisfies_both_identities() {
    let params = FracParams::critical(3, 0.5, 0.0).unwrap();
    let u = half_order_bubble();
    for &r in &[0.5, 2.0, 4.0, 8.0] {
        let p = pohozaev_terms(&u, &params, r).unwrap();
        assert!(p.relative_residual <= 1e-6, "r={r}: {:e}", p.relative_residual);
        let e = energy_identity(&u, &params, r).unwrap();
        assert!(e.relative_residual <= 1e-6, "r={r}: {:e}", e.relative_residual);
    }
    assert!(pohozaev_terms(&u, &params, 200.0).is_err());
}

#[test]
fn sampled_bubble_satisfies_identities() {
    let field = bubble_field(0.5, 10);
    let params = FracParams::critical(3, 0.5, 0.0).unwrap();
    let u = GridField { field: &field, s: 0.5 };
    for &r in &[2.0, 4.0, 8.0] {
        let p = pohozaev_terms(&u, &params, r).unwrap();
        let e = energy_identity(&u, &params, r).unwrap();
        assert!(p.relative_residual <= 5e-2, "r={r}: pohozaev {:e}", p.relative_residual);
        assert!(e.relative_residual <= 5e-2, "r={r}: energy {:e}", e.relative_residual);
    }
}

#[test]
fn non_solution_leaves_order_one_residual() {
    // the half-order bubble shape with the wrong amplitude solves a different equation
    let params = FracParams::critical(3, 0.5, 0.0).unwrap();
    let wrong = family(1.0, 1.0, 1.0);
    for &r in &[0.5, 1.0, 2.0] {
        let p = pohozaev_terms(&wrong, &params, r).unwrap();
        assert!(p.relative_residual >= 0.05, "r={r}: {:e}", p.relative_residual);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn residual_is_the_signed_sum_of_terms(
        a in 0.1f64..3.0, b in 0.5f64..2.0, c in 0.3f64..1.5,
        lam in 0.0f64..0.5, r in 0.5f64..5.0, s in 0.2f64..0.8,
    ) {
        let params = FracParams::new(3, s, lam, 2.0 * s * 0.8, 1.5).unwrap();
        let rep = pohozaev_terms(&family(a, b, c), &params, r).unwrap();
        let signed = rep.lhs_hardy_term + rep.lhs_power_term
            - (rep.sphere_gradient + rep.sphere_normal + rep.boundary_hardy + rep.boundary_power + rep.sphere_mixed);
        prop_assert!((rep.residual - signed).abs() <= 1e-12 * signed.abs().max(1e-300));
        let total = rep.lhs_hardy_term.abs() + rep.lhs_power_term.abs() + rep.sphere_gradient.abs()
            + rep.sphere_normal.abs() + rep.boundary_hardy.abs() + rep.boundary_power.abs() + rep.sphere_mixed.abs();
        prop_assert!((rep.relative_residual - rep.residual.abs() / total).abs() <= 1e-12);
        let e = energy_identity(&family(a, b, c), &params, r).unwrap();
        prop_assert!((e.residual - (e.bulk - e.sphere - e.hardy - e.power)).abs() <= 1e-12 * e.bulk.abs());
    }

    #[test]
    fn subcritical_case_has_positive_left_side(
        n in 1usize..6, s in 0.05f64..0.95, lam in 0.0f64..2.0, af in 0.05f64..0.95, pf in 0.0f64..0.95,
    ) {
        prop_assume!(n as f64 > 2.0 * s);
        let crit = FracParams::critical(n, s, 0.0).unwrap().p;
        let p = 1.0 + pf * (crit - 1.0);
        let params = FracParams::new(n, s, lam, af * 2.0 * s, p).unwrap();
        let c = classify_nonexistence(&params);
        prop_assert_eq!(c.case, NonexistenceCase::SubcriticalPower);
        prop_assert!(c.hardy_coefficient > 0.0 && c.power_coefficient > 0.0);
    }
}

// ═══════════════════════════════════════════════════════════════════
// Classification
// ═══════════════════════════════════════════════════════════════════

#[test]
fn classification_examples() {
    // p = 2 is the conformal power for n = 3, s = 1/2, so with α ≠ 2s the
    // power coefficient vanishes and only the Hardy term is left
    let c = classify_nonexistence(&FracParams::new(3, 0.5, 1.0, 0.5, 2.0).unwrap());
    assert_eq!(c.case, NonexistenceCase::CriticalPower);
    assert!((c.hardy_coefficient - 0.25).abs() <= 1e-15);
    assert!(c.power_coefficient.abs() <= 1e-15);

    let c = classify_nonexistence(&FracParams::new(3, 0.5, 1.0, 0.5, 1.5).unwrap());
    assert_eq!(c.case, NonexistenceCase::SubcriticalPower);
    assert!(c.hardy_coefficient >= 0.0 && c.power_coefficient > 0.0);

    let c = classify_nonexistence(&FracParams::new(3, 0.5, 1.0, 1.0, 1.5).unwrap());
    assert_eq!(c.case, NonexistenceCase::CriticalPotential);
    assert!(c.hardy_coefficient == 0.0 && c.power_coefficient != 0.0);

    let c = classify_nonexistence(&FracParams::critical(3, 0.5, 0.3).unwrap());
    assert_eq!(c.case, NonexistenceCase::Outside);
    assert!(c.hardy_coefficient.abs() <= 1e-15 && c.power_coefficient.abs() <= 1e-15);
}
