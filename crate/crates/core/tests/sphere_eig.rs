//! The angular Steklov eigenproblem on the upper half-sphere, the
//! homogeneous solution W₁ built from it and the cut-off family W_ε.

use fraclab::constants::*;
use fraclab::extension::*;
use fraclab::grid::*;
use fraclab::sphere_eig::*;
use proptest::prelude::*;

fn forms(n: usize, s: f64, cells: usize) -> AngularForms {
    assemble_angular(n, s, &AngularMesh::graded(cells, 2.0).unwrap()).unwrap()
}

fn w_eps(res: &EigenResult, f: &AngularForms, eps: f64, pd: usize) -> WEpsQuotient {
    let rg = RadialGrid::per_decade(eps / 8.0, 8.0 / eps, pd).unwrap();
    let hs = HalfStripGrid::geometric(rg, eps * 1e-4, 8.0 / eps, 120).unwrap();
    w_eps_family(res, f, eps, &hs).unwrap().1
}

// ═══════════════════════════════════════════════════════════════════
// Assembly and first eigenvalue
// ═══════════════════════════════════════════════════════════════════

#[test]
fn bulk_coefficient_is_exact() {
    for &(n, s) in &[(3usize, 0.5), (1, 0.3), (4, 0.75), (2, 0.6)] {
        let f = forms(n, s, 200);
        let want = (0.5 * (n as f64 - 2.0 * s)).powi(2);
        assert_eq!(f.bulk_coefficient, want);
    }
}

#[test]
fn first_eigenvalue_is_hardy_minus_lambda() {
    for &(n, s) in &[(3usize, 0.5), (3, 0.25), (4, 0.75)] {
        let lam_h = hardy_constant(n, s).unwrap();
        let f = forms(n, s, 2000);
        for &lam in &[0.0, 0.5 * lam_h] {
            let r = solve_mu1(lam, &f).unwrap();
            let want = lam_h - lam;
            assert!((r.mu1 - want).abs() / lam_h <= 1e-3, "n={n} s={s} λ={lam}: {} vs {want}", r.mu1);
            assert!(r.psi1.iter().all(|&p| p > 0.0));
        }
    }
}

#[test]
fn first_eigenvalue_converges_under_refinement() {
    let (n, s) = (3usize, 0.5);
    let lam_h = hardy_constant(n, s).unwrap();
    let errs: Vec<f64> = [250usize, 500, 1000]
        .iter()
        .map(|&k| (solve_mu1(0.0, &forms(n, s, k)).unwrap().mu1 / lam_h - 1.0).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    let order = (errs[1] / errs[2]).log2();
    assert!(order >= 1.0, "observed order {order} from {errs:?}");
}

#[test]
fn axisymmetric_state_is_lowest() {
    for &(n, s) in &[(3usize, 0.5), (2, 0.6), (4, 0.75)] {
        let spec = azimuthal_spectrum(&forms(n, s, 500), 3).unwrap();
        assert!(spec.len() >= 2);
        assert!(spec[1..].iter().all(|&v| v > spec[0]), "n={n} s={s}: {spec:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenvalue_shift_is_affine(frac in 0.0f64..1.5, s in 0.1f64..0.9, n in 1usize..5) {
        prop_assume!(n as f64 > 2.0 * s);
        let f = forms(n, s, 200);
        let lam = frac * hardy_constant(n, s).unwrap();
        let a = solve_mu1(0.0, &f).unwrap();
        let b = solve_mu1(lam, &f).unwrap();
        prop_assert!(((b.mu1 + lam) - a.mu1).abs() <= 1e-10 * a.mu1.abs().max(1.0));
    }

    #[test]
    fn cutoff_is_symmetric_under_inversion(eps in 1e-4f64..0.9, l in 1e-6f64..1e6) {
        prop_assert!((eta_eps(eps, l) - eta_eps(eps, 1.0 / l)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&eta_eps(eps, l)));
    }
}

// ═══════════════════════════════════════════════════════════════════
// Homogeneous solution W₁
// ═══════════════════════════════════════════════════════════════════

#[test]
fn w1_flux_is_hardy_multiple_of_trace() {
    let (n, s) = (3usize, 0.5);
    let lam_h = hardy_constant(n, s).unwrap();
    let res = solve_mu1(0.0, &forms(n, s, 2000)).unwrap();
    let beta = 0.5 * (n as f64 - 2.0 * s);
    let kappa = kappa_s(s).unwrap();
    let mut residuals = Vec::new();
    for &levels in &[25usize, 40] {
        let rg = RadialGrid::log_uniform(0.1, 10.0, levels).unwrap();
        let hs = HalfStripGrid::geometric(rg, 1e-7, 10.0, levels).unwrap();
        let w = build_w1(&res, &hs);
        if levels == 40 {
            let flux = weighted_flux(&w, s).unwrap();
            for (i, &r) in hs.radial.nodes().iter().enumerate() {
                let want = lam_h * kappa * r.powf(-beta - 2.0 * s);
                assert!((flux.flux.values()[i] / want - 1.0).abs() <= 1e-2, "r={r}");
            }
        }
        residuals.push(harmonic_residual(&w, n, s));
    }
    assert!(residuals[1] < residuals[0], "{residuals:?}");
}

// ═══════════════════════════════════════════════════════════════════
// Cut-off family
// ═══════════════════════════════════════════════════════════════════

#[test]
fn cutoff_quotient_decreases_toward_mu1() {
    let (n, s) = (3usize, 0.5);
    let f = forms(n, s, 1000);
    let res = solve_mu1(0.0, &f).unwrap();
    let qs: Vec<WEpsQuotient> = [0.1, 0.03, 1e-3].iter().map(|&e| w_eps(&res, &f, e, 20)).collect();
    for q in &qs {
        assert!(q.separated > res.mu1 && q.grid > res.mu1 * (1.0 - 1e-2));
        assert!((q.grid / q.separated - 1.0).abs() <= 2e-2, "ε={}: {} vs {}", q.eps, q.grid, q.separated);
    }
    assert!(qs.windows(2).all(|w| w[1].separated < w[0].separated && w[1].grid < w[0].grid));
    // the excess over μ₁ decays like 1/log(1/ε)
    for q in &qs {
        let c = (q.separated - res.mu1) * q.log_integral;
        assert!((c / ((qs[0].separated - res.mu1) * qs[0].log_integral) - 1.0).abs() <= 1e-9);
    }
    let err = rejection(&res, &f);
    assert!(matches!(err, Err(fraclab::Error::Resolution(_))));
}

fn rejection(res: &EigenResult, f: &AngularForms) -> fraclab::Result<(ExtensionField, WEpsQuotient)> {
    let rg = RadialGrid::per_decade(0.1, 10.0, 10).unwrap();
    let hs = HalfStripGrid::geometric(rg, 1e-4, 10.0, 40).unwrap();
    w_eps_family(res, f, 1e-3, &hs)
}

#[test]
fn cutoff_quotient_limit_matches_mu1() {
    // the separated value at ε = 10⁻³⁰ is within 5% of μ₁
    let (n, s) = (3usize, 0.5);
    let f = forms(n, s, 1000);
    let res = solve_mu1(0.0, &f).unwrap();
    let q = w_eps(&res, &f, 1e-30, 10);
    assert!((q.separated / res.mu1 - 1.0).abs() <= 5e-2, "{} vs {}", q.separated, res.mu1);
}

#[test]
#[ignore = "the W_ε excess decays like 1/log(1/ε): at ε = 0.1 and 0.03 it is about 80% and 54% of μ₁"]
fn cutoff_quotient_close_at_moderate_eps() {
    let (n, s) = (3usize, 0.5);
    let f = forms(n, s, 1000);
    let res = solve_mu1(0.0, &f).unwrap();
    let a = w_eps(&res, &f, 0.1, 20);
    let b = w_eps(&res, &f, 0.03, 20);
    assert!((a.grid / res.mu1 - 1.0).abs() <= 0.10, "{}", a.grid);
    assert!((b.grid / res.mu1 - 1.0).abs() <= 0.05, "{}", b.grid);
}
