//! The degenerate-elliptic extension: Poisson convolution, boundary flux,
//! energy and the finite-volume solver.

use fraclab::constants::*;
use fraclab::extension::*;
use fraclab::fraclap::*;
use fraclab::grid::*;

fn strip(r_max: f64, pd: usize, nt: usize) -> HalfStripGrid {
    let radial = RadialGrid::per_decade(1e-3, r_max, pd).unwrap();
    HalfStripGrid::geometric(radial, 1e-4 * r_max.min(1.0), r_max, nt).unwrap()
}

fn bubble_trace(n: usize, s: f64) -> RadialFunction {
    let b = 0.5 * (n as f64 - 2.0 * s);
    let g = RadialGrid::per_decade(1e-4, 1e4, 40).unwrap();
    RadialFunction::from_fn(g, move |r| (1.0 + r * r).powf(-b), InnerModel::Even, TailModel::PowerLaw).unwrap()
}

/// ‖e^{−|x|²}‖²_{Ḣ^s(R^n)} = ∫|ξ|^{2s}|û|² in closed form.
fn gaussian_seminorm(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    2f64.powf(-nf) * sphere_area(n) * 2f64.powf((nf + 2.0 * s) / 2.0 - 1.0) * gamma((nf + 2.0 * s) / 2.0).unwrap()
}

fn max_rel_diff(a: &ExtensionField, b: &ExtensionField, scale: f64) -> f64 {
    let f = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let t = a.trace.iter().zip(&b.trace).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    f.max(t) / scale
}

// ═══════════════════════════════════════════════════════════════════
// Poisson extension
// ═══════════════════════════════════════════════════════════════════

#[test]
fn half_order_bubble_extension_is_explicit() {
    // for s = 1/2, n = 3 the extension of (1+r²)^{−1} is (r²+(1+t)²)^{−1}
    let hs = strip(20.0, 10, 30);
    let field = poisson_extend(&bubble_trace(3, 0.5), 3, 0.5, &hs).unwrap();
    let exact = ExtensionField::from_fn(&hs, |r, t| 1.0 / (r * r + (1.0 + t) * (1.0 + t)));
    let e = max_rel_diff(&field, &exact, 1.0);
    assert!(e <= 1e-4, "max deviation {e:e}");
    // the kernel mass beyond the sampled trace (r > 10⁴) stays small
    assert!(field.mass_deficit.iter().all(|&d| d <= 1e-2));
    assert!(field.trace_consistency() <= 1e-2);
}

#[test]
fn flux_reproduces_fractional_laplacian() {
    let hs = strip(20.0, 10, 40);
    let kappa = kappa_s(0.5).unwrap();
    let g = RadialGrid::per_decade(1e-4, 1e4, 40).unwrap();
    let cases: [(Box<dyn Fn(f64) -> f64>, TailModel); 3] = [
        (Box::new(|r: f64| 1.0 / (1.0 + r * r)), TailModel::PowerLaw),
        (Box::new(|r: f64| (-r * r).exp()), TailModel::Zero),
        (Box::new(|r: f64| 1.0 / (1.0 + r.powi(4))), TailModel::PowerLaw),
    ];
    for (k, (f, tail)) in cases.iter().enumerate() {
        let u = RadialFunction::from_fn(g.clone(), f, InnerModel::Even, *tail).unwrap();
        let flux = weighted_flux(&poisson_extend(&u, 3, 0.5, &hs).unwrap(), 0.5).unwrap();
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for (i, &r) in hs.radial.nodes().iter().enumerate() {
            let opts = FracLapOptions { allow_truncation: true, ..Default::default() };
            let want = kappa * fraclap_radial_with(&u, 3, 0.5, r, opts).unwrap().total();
            diff = diff.max((flux.flux.values()[i] - want).abs());
            scale = scale.max(want.abs());
        }
        assert!(diff / scale <= 1e-2, "case {k}: {:e}", diff / scale);
    }
}

#[test]
fn extension_energy_is_kappa_times_squared_seminorm() {
    // s ≠ 1/2 separates κ_s from √κ_s
    let g = RadialGrid::per_decade(1e-4, 1e4, 40).unwrap();
    let u = RadialFunction::from_fn(g, |r| (-r * r).exp(), InnerModel::Even, TailModel::Zero).unwrap();
    for &s in &[0.25, 0.75] {
        let hs = strip(20.0, 20, 40);
        let field = poisson_extend(&u, 3, s, &hs).unwrap();
        let ratio = extension_energy(&field, 3, s) / gaussian_seminorm(3, s);
        let kappa = kappa_s(s).unwrap();
        assert!((ratio / kappa - 1.0).abs() <= 5e-2, "s={s}: ratio {ratio} vs κ {kappa}");
        assert!((ratio / kappa.sqrt() - 1.0).abs() > 0.1, "s={s}: cannot tell κ from √κ");
    }
}

#[test]
fn poisson_extension_minimizes_energy_among_competitors() {
    let hs = strip(10.0, 10, 30);
    let u = RadialFunction::from_fn(
        RadialGrid::per_decade(1e-4, 1e4, 40).unwrap(),
        |r| 1.0 / (1.0 + r * r),
        InnerModel::Even,
        TailModel::PowerLaw,
    )
    .unwrap();
    let field = poisson_extend(&u, 3, 0.5, &hs).unwrap();
    let e0 = extension_energy(&field, 3, 0.5);
    let bump = |x: f64, a: f64, b: f64| if x > a && x < b { ((x - a) * (b - x)).powi(2) } else { 0.0 };
    let shapes: [(f64, f64, f64, f64, f64); 5] = [
        (0.2, 2.0, 0.1, 2.0, 0.3),
        (0.5, 5.0, 0.5, 5.0, -0.2),
        (0.01, 1.0, 0.01, 1.0, 0.5),
        (1.0, 8.0, 0.2, 8.0, 0.1),
        (0.05, 0.5, 1.0, 6.0, -0.4),
    ];
    for (k, &(a, b, c, d, amp)) in shapes.iter().enumerate() {
        let eta = ExtensionField::from_fn(&hs, |r, t| bump(r, a, b) * bump(t, c, d));
        let peak = eta.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let competitor = field.combine(1.0, &eta, amp / peak).unwrap();
        assert_eq!(competitor.trace, field.trace);
        let e = extension_energy(&competitor, 3, 0.5);
        assert!(e > e0, "competitor {k}: {e} ≤ {e0}");
    }
}

// ═══════════════════════════════════════════════════════════════════
// Finite-volume solver
// ═══════════════════════════════════════════════════════════════════

#[test]
fn prescribed_flux_recovers_poisson_extension() {
    let (n, s) = (3usize, 0.5);
    let k = bubble_amplitude(n, s).unwrap();
    let u = bubble_trace(n, s);
    let u = u.with_values(u.values().iter().map(|v| k * v).collect()).unwrap();
    let hs = strip(0.5, 10, 40);
    let pe = poisson_extend(&u, n, s, &hs).unwrap();
    let outer = OuterData::from_field(&pe);
    let kappa = kappa_s(s).unwrap();
    let forcing = hs.radial.nodes().iter().map(|&r| kappa * fraclap_radial(&u, n, s, r).unwrap().total()).collect();
    let lin = solve_degenerate(&FluxModel::prescribed(forcing), &outer, &hs, n, s, None, SolverOptions::default()).unwrap();
    assert!(max_rel_diff(&lin.field, &pe, k) <= 1e-2);
    assert!(harmonic_residual(&lin.field, n, s) <= 1e-8);

    // the critical equation itself, by Picard iteration from the extension
    let p = FracParams::critical(n, s, 0.0).unwrap();
    let res = solve_degenerate(&FluxModel::new(0.0, 2.0 * s, p.p), &outer, &hs, n, s, Some(&pe), SolverOptions::default()).unwrap();
    assert!(!res.indefinite);
    assert!(max_rel_diff(&res.field, &pe, k) <= 2e-2);
}

#[test]
fn picard_failure_is_reported_with_history() {
    let (n, s) = (3usize, 0.5);
    let hs = strip(2.0, 10, 40);
    let k = bubble_amplitude(n, s).unwrap();
    let u = bubble_trace(n, s);
    let u = u.with_values(u.values().iter().map(|v| k * v).collect()).unwrap();
    let pe = poisson_extend(&u, n, s, &hs).unwrap();
    let p = FracParams::critical(n, s, 0.0).unwrap();
    let opts = SolverOptions { max_iter: 20, ..Default::default() };
    let err = solve_degenerate(&FluxModel::new(0.0, 2.0 * s, p.p), &OuterData::from_field(&pe), &hs, n, s, Some(&pe), opts);
    assert!(matches!(err, Err(fraclab::Error::Divergence { .. })), "{err:?}");
}

#[test]
fn maximum_principle_for_zero_flux() {
    let hs = strip(5.0, 10, 30);
    let (n, s) = (3usize, 0.3);
    let mut outer = OuterData::zero(&hs);
    let t = hs.t_nodes().to_vec();
    outer.right = std::iter::once(0.0).chain(t.iter().map(|&x| (x * (5.0 - x)).max(0.0))).collect();
    outer.top = hs.radial.nodes().iter().map(|&r| (r * (5.0 - r)).max(0.0)).collect();
    let res = solve_degenerate(&FluxModel::prescribed(vec![0.0; hs.nr()]), &outer, &hs, n, s, None, SolverOptions::default()).unwrap();
    let min = res.field.values.iter().chain(&res.field.trace).fold(f64::INFINITY, |m, &v| m.min(v));
    assert!(min >= -1e-12, "minimum {min:e}");
    let max_data = outer.top.iter().chain(&outer.right).fold(0.0f64, |m, &v| m.max(v));
    let max = res.field.values.iter().chain(&res.field.trace).fold(0.0f64, |m, &v| m.max(v));
    assert!(max <= max_data * (1.0 + 1e-12));
}

#[test]
fn weighted_laplacian_vanishes_on_explicit_extension() {
    let f = |r: f64, t: f64| 1.0 / (r * r + (1.0 + t) * (1.0 + t));
    for &(r, t) in &[(0.3, 0.2), (1.0, 1.0), (3.0, 0.5)] {
        let v = weighted_laplacian(f, 3, 0.5, r, t, 1e-3);
        assert!(v.abs() <= 1e-4 * f(r, t) / (r * r + t * t), "({r},{t}): {v:e}");
    }
}
