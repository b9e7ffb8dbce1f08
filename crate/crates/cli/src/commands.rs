//! One workflow per subcommand. Each returns an [`Outcome`] (results,
//! checks, tables) and writes nothing; output happens only after success.

use crate::config::RunConfig;
use crate::report::{Check, Outcome, Table};
use crate::row;
use fraclab::constants::*;
use fraclab::extension::{extension_energy, poisson_extend, weighted_flux, HalfStripGrid};
use fraclab::fraclap::*;
use fraclab::groundstate::*;
use fraclab::kelvin::*;
use fraclab::pohozaev::*;
use fraclab::sphere_eig::*;
use fraclab::{Error, FracParams, InnerModel, RadialFunction, RadialGrid, Result, TailModel};
use log::info;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;
use std::time::Instant;

/// Largest relative mismatch accepted by the operator and flux comparisons.
const OPERATOR_TOL: f64 = 1e-3;
const FLUX_TOL: f64 = 1e-2;
/// Relative Steklov-identity tolerance.
const EIG_TOL: f64 = 1e-3;
/// Euler–Lagrange residual accepted for a ground state.
const EL_TOL: f64 = 1e-2;
/// Pointwise accuracy of exact algebraic identities.
const EXACT_TOL: f64 = 1e-12;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn radial_grid(cfg: &RunConfig) -> Result<RadialGrid> {
    RadialGrid::per_decade(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.per_decade)
}

fn strip_grid(cfg: &RunConfig) -> Result<HalfStripGrid> {
    let g = &cfg.grid;
    let radial = RadialGrid::per_decade(g.strip_r_min, g.strip_r_max, g.strip_per_decade)?;
    HalfStripGrid::geometric(radial, g.t_min, g.t_max, g.t_nodes)
}

fn quad_opts(cfg: &RunConfig) -> FracLapOptions {
    FracLapOptions { rel_tol: cfg.solver.quad_tol, ..Default::default() }
}

fn require_conformal(p: &FracParams, what: &str) -> Result<()> {
    let c = FracParams::critical(p.n, p.s, p.lambda)?;
    if rel(p.alpha, c.alpha) > 1e-12 || rel(p.p, c.p) > 1e-12 {
        return Err(Error::InvalidParams(format!(
            "{what} solves the conformal problem: alpha must be 2s = {} and p must be {} (got alpha = {}, p = {})",
            c.alpha, c.p, p.alpha, p.p
        )));
    }
    Ok(())
}

/// Standard bubble (1 + r²)^{−(n−2s)/2} scaled to solve (−Δ)^s u = u^p.
fn bubble(n: usize, s: f64) -> Result<impl Fn(f64) -> f64 + Copy> {
    let k = bubble_amplitude(n, s)?;
    let b = 0.5 * (n as f64 - 2.0 * s);
    Ok(move |r: f64| k * (1.0 + r * r).powf(-b))
}

// ═══════════════════════════════════════════════════════════════════
// constants
// ═══════════════════════════════════════════════════════════════════

pub fn constants(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let (n, s) = (p.n, p.s);
    let closed = poisson_normalizer_closed(n, s)?;
    let quadrature = poisson_normalizer_quadrature(n, s)?;
    let entries = [
        ("hardy_constant", hardy_constant(n, s)?),
        ("kappa_s", kappa_s(s)?),
        ("gagliardo_constant", gagliardo_constant(n, s)?),
        ("singular_integral_constant", singular_integral_constant(n, s)?),
        ("poisson_normalizer", closed),
        ("poisson_normalizer_quadrature", quadrature),
        ("sobolev_constant", sobolev_constant(n, s)?),
        ("bubble_amplitude", bubble_amplitude(n, s)?),
        ("critical_exponent", p.critical_exponent()),
        ("conformal_power", p.conformal_power()),
        ("beta", p.beta()),
    ];
    let mut table = Table::new(&["name", "value"]);
    let mut results = serde_json::Map::new();
    for (k, v) in entries {
        table.push(row![k, v]);
        results.insert(k.to_string(), json!(v));
    }
    Ok(Outcome {
        results: serde_json::Value::Object(results),
        checks: vec![Check::at_most("poisson_normalizer_closed_vs_quadrature", rel(quadrature, closed), 1e-8)],
        tables: vec![("constants.csv".into(), table)],
    })
}

// ═══════════════════════════════════════════════════════════════════
// fraclap-validate
// ═══════════════════════════════════════════════════════════════════

type Sample = (&'static str, fn(f64) -> f64);

/// Smooth, rapidly decaying even test functions on the line.
pub const LINE_SAMPLES: [Sample; 5] = [
    ("gaussian", |x| (-x * x).exp()),
    ("gaussian_poly", |x| (1.0 + x * x) * (-2.0 * x * x).exp()),
    ("sech2", |x| 1.0 / x.cosh().powi(2)),
    ("sech", |x| 1.0 / x.cosh()),
    ("quartic_exp", |x| (-x.powi(4)).exp()),
];

const LINE_POINTS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 3.0];

pub fn fraclap_validate(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let s = p.s;
    let mut table = Table::new(&["case", "level", "r", "computed", "reference", "rel_err"]);
    let mut per_case = Vec::new();
    let mut worst_refined = 0.0f64;
    // Line: quadrature against the FFT multiplier (periodic images removed).
    for (name, f) in LINE_SAMPLES {
        let mut worst = [0.0f64; 2];
        for (level, w) in worst.iter_mut().enumerate() {
            let grid = RadialGrid::per_decade(1e-4, 60.0, 30 << level)?;
            let u = RadialFunction::from_fn(grid, f, InnerModel::Even, TailModel::Zero)?;
            let pg = PeriodicGrid::new(1, 200.0, 4096 << level)?;
            let samples = pg.sample(|x: &[f64]| f(x[0]));
            let spec = fraclap_spectral(&pg, &samples, s)?;
            let mass = samples.iter().sum::<f64>() * pg.spacing();
            let axis = pg.axis();
            for target in LINE_POINTS {
                let j = nearest(&axis, target);
                let r = axis[j];
                let reference = spec.values[j] - periodic_image_sum(&pg, mass, s, r)?;
                let computed = fraclap_radial_with(&u, 1, s, r, quad_opts(cfg))?.total();
                let e = rel(computed, reference);
                *w = w.max(e);
                table.push(row![name, level, r, computed, reference, e]);
            }
        }
        worst_refined = worst_refined.max(worst[1]);
        per_case.push(json!({ "case": name, "n": 1, "worst_coarse": worst[0], "worst_refined": worst[1] }));
    }
    // R^n: the Hardy saturator r^{−β} is mapped to Λ r^{−β−2s}.
    let lam = hardy_constant(p.n, s)?;
    let beta = p.beta();
    let mut worst = [0.0f64; 2];
    for (level, w) in worst.iter_mut().enumerate() {
        let grid = RadialGrid::per_decade(1e-6, 1e6, 40 << level)?;
        let u = RadialFunction::from_fn(grid, |r| r.powf(-beta), InnerModel::PowerLaw, TailModel::PowerLaw)?;
        for r in [0.01, 1.0, 37.0] {
            let computed = fraclap_radial_with(&u, p.n, s, r, quad_opts(cfg))?.total();
            let reference = lam * r.powf(-beta - 2.0 * s);
            let e = rel(computed, reference);
            *w = w.max(e);
            table.push(row!["hardy_saturator", level, r, computed, reference, e]);
        }
    }
    worst_refined = worst_refined.max(worst[1]);
    per_case.push(json!({ "case": "hardy_saturator", "n": p.n, "worst_coarse": worst[0], "worst_refined": worst[1] }));
    Ok(Outcome {
        results: json!({ "cases": per_case, "worst_refined": worst_refined }),
        checks: vec![Check::at_most("operator_agreement_refined", worst_refined, OPERATOR_TOL)],
        tables: vec![("fraclap_validation.csv".into(), table)],
    })
}

fn nearest(axis: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (j, &a) in axis.iter().enumerate() {
        if (a - x).abs() < (axis[best] - x).abs() {
            best = j;
        }
    }
    best
}

// ═══════════════════════════════════════════════════════════════════
// extension-validate
// ═══════════════════════════════════════════════════════════════════

pub fn extension_validate(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let (n, s) = (p.n, p.s);
    let kappa = kappa_s(s)?;
    let beta = p.beta();
    let strip = strip_grid(cfg)?;
    let samples: [(&str, Box<dyn Fn(f64) -> f64>, TailModel); 3] = [
        ("bubble_shape", Box::new(move |r: f64| (1.0 + r * r).powf(-beta)), TailModel::PowerLaw),
        ("gaussian", Box::new(|r: f64| (-r * r).exp()), TailModel::Zero),
        ("rational_quartic", Box::new(|r: f64| 1.0 / (1.0 + r.powi(4))), TailModel::PowerLaw),
    ];
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    let mut cases = Vec::new();
    let mut gaussian_energy = None;
    for (name, f, tail) in samples.iter() {
        let t0 = Instant::now();
        let u = RadialFunction::from_fn(radial_grid(cfg)?, f, InnerModel::Even, *tail)?;
        let field = poisson_extend(&u, n, s, &strip)?;
        let flux = weighted_flux(&field, s)?;
        let mut table = Table::new(&["r", "flux", "kappa_fraclap", "fit_residual"]);
        let (mut max_diff, mut max_ref) = (0.0f64, 0.0f64);
        for (i, &r) in strip.radial.nodes().iter().enumerate() {
            let reference = kappa * fraclap_radial_with(&u, n, s, r, quad_opts(cfg))?.total();
            let got = flux.flux.values()[i];
            max_diff = max_diff.max((got - reference).abs());
            max_ref = max_ref.max(reference.abs());
            table.push(row![r, got, reference, flux.residual[i]]);
        }
        let err = max_diff / max_ref;
        info!("extension {name}: flux mismatch {err:e} ({:?})", t0.elapsed());
        checks.push(Check::at_most(format!("flux_{name}"), err, FLUX_TOL));
        cases.push(json!({ "case": name, "flux_rel_error": err, "unreliable_radii": flux.unreliable.len() }));
        if *name == "gaussian" {
            gaussian_energy = Some(extension_energy(&field, n, s));
            let mut ft = Table::new(&["r", "t", "value"]);
            for (i, &r) in strip.radial.nodes().iter().enumerate() {
                for (j, &t) in strip.t_nodes().iter().enumerate() {
                    ft.push(row![r, t, field.get(i, j)]);
                }
            }
            tables.push((format!("field_{name}.csv"), ft));
        }
        tables.push((format!("flux_{name}.csv"), table));
    }
    // Energy convention: ∫ t^{1−2s}|∇U|² against κ_s‖u‖² for the Gaussian,
    // whose seminorm is known in closed form.
    let nf = n as f64;
    let norm2 = 2f64.powi(-(n as i32)) * sphere_area(n) * 2f64.powf((nf + 2.0 * s) / 2.0 - 1.0) * gamma((nf + 2.0 * s) / 2.0)?;
    let energy = gaussian_energy.expect("gaussian case ran");
    let ratio = energy / norm2;
    checks.push(Check::at_most("energy_equals_kappa_times_squared_norm", rel(ratio, kappa), 5e-2));
    Ok(Outcome {
        results: json!({
            "cases": cases,
            "kappa_s": kappa,
            "energy_over_squared_seminorm": ratio,
            "convention": "extension energy = kappa_s * squared H^s seminorm (flux = kappa_s (-Delta)^s u)",
        }),
        checks,
        tables,
    })
}

// ═══════════════════════════════════════════════════════════════════
// kelvin-check
// ═══════════════════════════════════════════════════════════════════

pub fn kelvin_check(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let (n, s) = (p.n, p.s);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = Table::new(&["check", "pair", "samples", "worst", "pass"]);
    let mut checks = Vec::new();
    let bub = bubble(n, s)?;
    let bub_x = move |x: &[f64]| bub(x.iter().map(|a| a * a).sum::<f64>().sqrt());
    let (mut inv_worst, mut fix_worst, mut ineq_worst, mut violations) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0usize);
    let mut sweeps = Vec::new();
    for k in 0..cfg.kelvin.sphere_pairs {
        let sp = random_sphere_pair(&mut rng, n);
        let seed = cfg.seed.wrapping_add(1000 * (k as u64 + 1));
        // Involution of the inversion.
        let pts = shell_samples(&sp, 0.05 * sp.radius, 4.0 * sp.radius, 1000, seed);
        let mut w = 0.0f64;
        for x in &pts {
            let y = invert_point(&invert_point(x, &sp)?, &sp)?;
            let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let l: f64 = x.iter().zip(&sp.center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
            w = w.max(d / l);
        }
        inv_worst = inv_worst.max(w);
        table.push(row!["involution", k, pts.len(), w, w <= EXACT_TOL]);
        // Comparison inequality in the ball and the annulus.
        let rep = lemma52_sweep(s, &sp, cfg.kelvin.samples_per_region, seed)?;
        let v = rep.params["violations"].as_u64().unwrap_or(0) as usize;
        violations += v;
        ineq_worst = ineq_worst.max(rep.worst_margin);
        table.push(row!["inversion_inequality", k, rep.n_samples, rep.worst_margin, rep.verdict]);
        sweeps.push(rep);
        // Bubble invariance under the sphere with ρ² = 1 + |x₀|².
        let x0n2: f64 = sp.center.iter().map(|a| a * a).sum();
        let fixed = SpherePair::new(sp.center.clone(), (1.0 + x0n2).sqrt())?;
        let kt = kelvin_boundary(&bub_x, s, &fixed);
        let mut wf = 0.0f64;
        for x in shell_samples(&fixed, 0.05, 5.0 * fixed.radius, 1000, seed + 1) {
            wf = wf.max(rel(kt.eval(&x)?, bub_x(&x)));
        }
        fix_worst = fix_worst.max(wf);
        table.push(row!["bubble_fixed_point", k, 1000usize, wf, wf <= EXACT_TOL]);
    }
    let crit = FracParams::critical(n, s, p.lambda)?;
    let defect_crit = conformal_defect(&crit);
    checks.push(Check::at_most("involution", inv_worst, EXACT_TOL));
    checks.push(Check::at_most("conformal_defect_at_critical_power", defect_crit.abs(), EXACT_TOL));
    checks.push(Check::at_most("inversion_inequality_violations", violations as f64, 0.0));
    checks.push(Check::at_most("bubble_fixed_point", fix_worst, EXACT_TOL));
    Ok(Outcome {
        results: json!({
            "involution_worst": inv_worst,
            "conformal_defect_at_critical_power": defect_crit,
            "conformal_defect_at_p": conformal_defect(p),
            "inversion_inequality_worst_margin": ineq_worst,
            "inversion_inequality_violations": violations,
            "bubble_fixed_point_worst": fix_worst,
            "sweeps": sweeps,
        }),
        checks,
        tables: vec![("kelvin_checks.csv".into(), table)],
    })
}

// ═══════════════════════════════════════════════════════════════════
// pohozaev
// ═══════════════════════════════════════════════════════════════════

pub fn pohozaev(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let (n, s) = (p.n, p.s);
    let crit = FracParams::critical(n, s, 0.0)?;
    let t0 = Instant::now();
    let u = RadialFunction::from_fn(radial_grid(cfg)?, bubble(n, s)?, InnerModel::Even, TailModel::PowerLaw)?;
    let field = poisson_extend(&u, n, s, &strip_grid(cfg)?)?;
    info!("bubble extension ready ({:?})", t0.elapsed());
    let gf = GridField { field: &field, s };
    let mut reports = Vec::new();
    let mut energies = Vec::new();
    let mut checks = Vec::new();
    let mut pt = Table::new(&[
        "radius",
        "lhs_hardy_term",
        "lhs_power_term",
        "sphere_gradient",
        "sphere_normal",
        "boundary_hardy",
        "boundary_power",
        "sphere_mixed",
        "residual",
        "relative_residual",
    ]);
    let mut et = Table::new(&["radius", "bulk", "sphere", "hardy", "power", "residual", "relative_residual"]);
    for &r in &cfg.pohozaev.radii {
        let rep = pohozaev_terms(&gf, &crit, r)?;
        pt.push(row![
            r,
            rep.lhs_hardy_term,
            rep.lhs_power_term,
            rep.sphere_gradient,
            rep.sphere_normal,
            rep.boundary_hardy,
            rep.boundary_power,
            rep.sphere_mixed,
            rep.residual,
            rep.relative_residual
        ]);
        checks.push(Check::at_most(format!("pohozaev_r{r}"), rep.relative_residual, cfg.pohozaev.tolerance));
        reports.push(rep);
        let e = energy_identity(&gf, &crit, r)?;
        et.push(row![r, e.bulk, e.sphere, e.hardy, e.power, e.residual, e.relative_residual]);
        checks.push(Check::at_most(format!("energy_r{r}"), e.relative_residual, cfg.pohozaev.tolerance));
        energies.push(e);
    }
    Ok(Outcome {
        results: json!({
            "field": "Poisson extension of the lambda = 0 bubble at the conformal power",
            "pohozaev": reports,
            "energy": energies,
            "classification": classify_nonexistence(p),
        }),
        checks,
        tables: vec![("pohozaev.csv".into(), pt), ("energy.csv".into(), et)],
    })
}

// ═══════════════════════════════════════════════════════════════════
// groundstate
// ═══════════════════════════════════════════════════════════════════

fn minimize_options(cfg: &RunConfig) -> MinimizeOptions {
    MinimizeOptions {
        max_iter: cfg.solver.max_iter,
        step: cfg.solver.relaxation,
        tol: cfg.solver.tol,
        rearrange_every: cfg.solver.rearrange_every,
        grad_tol: cfg.solver.grad_tol,
        ..Default::default()
    }
}

fn forms_for(cfg: &RunConfig) -> Result<QuadraticFormAssembly> {
    let p = &cfg.params;
    let t0 = Instant::now();
    let forms = assemble_forms(&radial_grid(cfg)?, &FracParams::critical(p.n, p.s, 0.0)?)?;
    info!("assembled {} x {} forms ({:?})", forms.len(), forms.len(), t0.elapsed());
    Ok(forms)
}

pub fn groundstate(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    require_conformal(p, "groundstate")?;
    let lam_h = hardy_constant(p.n, p.s)?;
    if p.lambda >= lam_h {
        return probe(cfg, lam_h);
    }
    let forms = forms_for(cfg)?;
    let res = minimize_groundstate(p.lambda, &forms, minimize_options(cfg))?;
    let prof = res.profile();
    let max_u = prof.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ms = Table::new(&["pair", "center_norm", "radius", "samples", "worst_margin_rel", "pass"]);
    let mut worst_ms = f64::NEG_INFINITY;
    for k in 0..cfg.kelvin.sphere_pairs {
        let sp = random_sphere_pair(&mut rng, p.n);
        let x0: f64 = sp.center.iter().map(|a| a * a).sum::<f64>().sqrt();
        let samples = shell_samples(&sp, sp.radius, 4.0 * x0, 200, cfg.seed.wrapping_add(k as u64 + 1));
        let rep = moving_sphere_check(radial_evaluator(prof), p.s, &sp, &samples, cfg.solver.check_tol * max_u)?;
        let w = rep.worst_margin / max_u;
        worst_ms = worst_ms.max(w);
        ms.push(row![k, x0, sp.radius, rep.n_samples, w, rep.verdict]);
    }
    let mono = monotonicity_check(prof.values());
    let mut pt = Table::new(&["r", "u", "minimizer"]);
    for (i, &r) in prof.grid().nodes().iter().enumerate() {
        pt.push(row![r, prof.values()[i], res.minimizer[i]]);
    }
    let mut ht = Table::new(&["iteration", "quotient"]);
    for (i, &q) in res.history.iter().enumerate() {
        ht.push(row![i + 1, q]);
    }
    Ok(Outcome {
        results: json!({
            "mode": "minimization",
            "lambda": p.lambda,
            "lambda_over_hardy": p.lambda / lam_h,
            "beta": res.beta,
            "lagrange_scale": res.lagrange_scale,
            "iterations": res.iterations,
            "el_residual": res.el_residual,
            "monotone": mono,
            "moving_sphere_worst_relative": worst_ms,
            "rearrangements_applied": res.rearrangements_applied,
            "rearrangements_skipped": res.rearrangements_skipped,
            "scale_fixes": res.scale_fixes,
        }),
        checks: vec![
            Check::at_most("euler_lagrange_residual", res.el_residual, EL_TOL),
            Check::holds("strictly_decreasing_profile", mono.monotone),
            Check::at_most("moving_sphere_worst_relative", worst_ms, cfg.solver.check_tol),
        ],
        tables: vec![("profile.csv".into(), pt), ("history.csv".into(), ht), ("moving_sphere.csv".into(), ms)],
    })
}

/// Span and density of the probe grid. The Hardy quotient of the cut-off
/// family approaches Λ only like 1/log(1/ε), so witnesses just above Λ need
/// plateaus of many decades.
const PROBE_SPAN: f64 = 1e20;
const PROBE_PER_DECADE: usize = 15;

/// λ ≥ Λ: no minimizer exists; search for a negative direction of Q instead.
fn probe(cfg: &RunConfig, lam_h: f64) -> Result<Outcome> {
    let p = &cfg.params;
    let lambda = p.lambda;
    let grid = RadialGrid::per_decade(1.0 / PROBE_SPAN, PROBE_SPAN, PROBE_PER_DECADE)?;
    let forms = assemble_forms(&grid, &FracParams::critical(p.n, p.s, 0.0)?)?;
    let res = indefiniteness_probe(lambda, &forms)?;
    let mut t = Table::new(&["eps", "normalized_q"]);
    for &(e, q) in &res.scan {
        t.push(row![e, q]);
    }
    let found = res.witness_eps.is_some();
    Ok(Outcome {
        results: json!({ "mode": "indefiniteness_probe", "lambda_over_hardy": lambda / lam_h, "probe": res }),
        checks: vec![Check::holds("negative_direction_found", found)],
        tables: vec![("probe.csv".into(), t)],
    })
}

// ═══════════════════════════════════════════════════════════════════
// eig
// ═══════════════════════════════════════════════════════════════════

pub fn eig(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let (n, s) = (p.n, p.s);
    let mesh = match cfg.grid.angular_grading {
        Some(q) => AngularMesh::graded(cfg.grid.angular_cells, q)?,
        None => AngularMesh::for_order(cfg.grid.angular_cells, s)?,
    };
    let forms = assemble_angular(n, s, &mesh)?;
    let res = solve_mu1(p.lambda, &forms)?;
    let lam_h = hardy_constant(n, s)?;
    let expected = lam_h - p.lambda;
    let err = (res.mu1 - expected).abs() / lam_h;
    let spectrum = azimuthal_spectrum(&forms, 3)?;
    let axisymmetric_lowest = spectrum.iter().skip(1).all(|&v| v >= spectrum[0]);
    let mut t = Table::new(&["phi", "psi"]);
    for (phi, psi) in res.phi.iter().zip(&res.psi1) {
        t.push(row![*phi, *psi]);
    }
    Ok(Outcome {
        results: json!({
            "n": n,
            "s": s,
            "lambda": p.lambda,
            "mu1": res.mu1,
            "expected": expected,
            "relative_error": err,
            "refinement_estimate": res.estimate,
            "mesh_cells": res.mesh_size,
            "boundary_slope": res.boundary_slope,
            "azimuthal_shifted_spectrum": spectrum,
            "equator": PI / 2.0,
        }),
        checks: vec![
            Check::at_most("mu1_identity", err, EIG_TOL),
            Check::holds("axisymmetric_mode_lowest", axisymmetric_lowest),
        ],
        tables: vec![("psi.csv".into(), t)],
    })
}

// ═══════════════════════════════════════════════════════════════════
// sweep
// ═══════════════════════════════════════════════════════════════════

pub fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    require_conformal(p, "sweep")?;
    let lam_h = hardy_constant(p.n, p.s)?;
    let fractions = cfg.sweep.lambda_fractions.clone();
    let forms = forms_for(cfg)?;
    let opts = minimize_options(cfg);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<Result<GroundStateResult>>> = (0..fractions.len()).map(|_| None).collect();
    let workers = cfg.sweep.workers.min(fractions.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let k = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                        if k >= fractions.len() {
                            break;
                        }
                        let t0 = Instant::now();
                        let r = minimize_groundstate(fractions[k] * lam_h, &forms, opts);
                        info!("sweep lambda = {}·Λ done ({:?})", fractions[k], t0.elapsed());
                        done.push((k, r));
                    }
                    done
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("sweep worker panicked") {
                results[k] = Some(r);
            }
        }
    });
    let mut rows = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        rows.push((fractions[k], r.expect("every index is processed")?));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].0.total_cmp(&rows[b].0));
    let mut t = Table::new(&["lambda_over_hardy", "lambda", "beta", "iterations", "el_residual", "monotone"]);
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for &k in &order {
        let (f, r) = &rows[k];
        t.push(row![*f, f * lam_h, r.beta, r.iterations, r.el_residual, r.monotone]);
        checks.push(Check::at_most(format!("el_residual_{f}"), r.el_residual, EL_TOL));
        checks.push(Check::holds(format!("monotone_{f}"), r.monotone));
        summary.push(json!({ "lambda_over_hardy": f, "beta": r.beta, "iterations": r.iterations, "el_residual": r.el_residual, "monotone": r.monotone }));
    }
    let betas: Vec<f64> = order.iter().map(|&k| rows[k].1.beta).collect();
    let decreasing = betas.windows(2).all(|w| w[1] < w[0]);
    checks.push(Check::holds("beta_strictly_decreasing_in_lambda", decreasing));
    Ok(Outcome { results: json!({ "runs": summary }), checks, tables: vec![("sweep.csv".into(), t)] })
}
