//! Acceptance suite: one line per criterion, tolerances pinned below.
//!
//! Run with `cargo test -p transhess-cli --test acceptance`. Exits non-zero
//! when any criterion fails.

use std::f64::consts::FRAC_1_SQRT_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transhess::diffops::{fd_partial_adaptive, multi_index, Potential, ScalarField};
use transhess::expr::{default_vars, parse, ExprField};
use transhess::fisher::{
    fisher_pair, involutivity_residual, leafwise_constancy_residual, FamilySpec, FoliationOptions, Integration,
    SpecConfig,
};
use transhess::hessian::*;
use transhess::kahler::{calibrate_sign, holomorphic_sectional, KahlerPoint, KAHLER_SIGN};
use transhess::tensors::{eig_sym, Tensor3, Tensor4};

const FISHER_POINTS: usize = 50;
const BRIDGE_POINTS: usize = 20;
const RANDOM_POTENTIALS: usize = 100;
const ROUTE_REL: f64 = 1e-9;
const SYMMETRY_REL: f64 = 1e-10;
const RIEMANN_REL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const BRIDGE_TOL: f64 = 1e-9;
const KERNEL_TOL: f64 = 1e-9;
const FIT_TOL: f64 = 1e-10;
const KAHLER_TOL: f64 = 1e-8;
const JET_TOL_LOW: f64 = 1e-7;
const JET_TOL_HIGH: f64 = 1e-5;
const RANDOM_EXPRESSIONS: usize = 1000;

type Outcome = Result<String, String>;

/// Name, family, and a parameter box inside its domain.
type Case = (&'static str, FamilySpec, Vec<(f64, f64)>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spec_from(json: &str) -> FamilySpec {
    SpecConfig::from_json(json).unwrap().into_spec().unwrap()
}

fn natural_bernoulli() -> FamilySpec {
    spec_from(
        r#"{"kind": "exp-family-natural", "params": ["t"], "psi": "log(1 + exp(t))", "statistics": ["x"],
            "sample_space": {"kind": "finite", "points": [[0], [1]]}}"#,
    )
}

fn natural_categorical() -> FamilySpec {
    spec_from(
        r#"{"kind": "exp-family-natural", "params": ["t1", "t2"], "psi": "log(1 + exp(t1) + exp(t2))",
            "sample_vars": ["x1", "x2"], "statistics": ["x1", "x2"],
            "sample_space": {"kind": "finite", "points": [[0, 0], [1, 0], [0, 1]]}}"#,
    )
}

fn natural_gaussian() -> FamilySpec {
    spec_from(
        r#"{"kind": "exp-family-natural", "params": ["a", "b"],
            "psi": "-a^2/(4*b) + 0.5*log(-3.141592653589793/b)", "statistics": ["x", "x^2"],
            "sample_space": {"kind": "real-line"},
            "reference": {"center": ["-a/(2*b)"], "scale": ["sqrt(-1/b)"]}}"#,
    )
}

fn natural_exponential() -> FamilySpec {
    spec_from(
        r#"{"kind": "exp-family-natural", "params": ["t"], "psi": "-log(-t)", "statistics": ["x"],
            "sample_space": {"kind": "half-line", "lower": 0}, "reference": {"center": ["0"], "scale": ["-1/t"]}}"#,
    )
}

fn reparam_bernoulli() -> FamilySpec {
    FamilySpec::linear_reparam(FamilySpec::bernoulli_logit(), vec![vec![1.0, 1.0]]).unwrap()
}

/// Every built-in family and constructor, with a box inside its domain.
fn fisher_cases() -> Vec<Case> {
    vec![
        ("gaussian", FamilySpec::gaussian(), vec![(-2.0, 2.0), (0.3, 3.0)]),
        (
            "gaussian/monte-carlo",
            FamilySpec::gaussian().with_integration(Integration::MonteCarlo { n: 20_000, seed: 7 }),
            vec![(-2.0, 2.0), (0.3, 3.0)],
        ),
        ("bernoulli-logit", FamilySpec::bernoulli_logit(), vec![(-4.0, 4.0)]),
        ("categorical-softmax(3)", FamilySpec::categorical_softmax(3).unwrap(), vec![(-2.0, 2.0); 3]),
        ("exponential-rate", FamilySpec::exponential_rate(), vec![(0.1, 5.0)]),
        ("natural bernoulli", natural_bernoulli(), vec![(-4.0, 4.0)]),
        ("natural categorical", natural_categorical(), vec![(-2.0, 2.0); 2]),
        ("natural gaussian", natural_gaussian(), vec![(-2.0, 2.0), (-2.0, -0.2)]),
        ("natural exponential", natural_exponential(), vec![(-5.0, -0.2)]),
        ("reparam bernoulli", reparam_bernoulli(), vec![(-2.0, 2.0); 2]),
        (
            "reparam gaussian",
            FamilySpec::linear_reparam(FamilySpec::gaussian(), vec![vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap(),
            vec![(-1.0, 1.0), (0.3, 3.0)],
        ),
    ]
}

fn sample(rng: &mut impl Rng, box_: &[(f64, f64)]) -> Vec<f64> {
    box_.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_ratio = 0.0f64;
    let mut count = 0;
    for (name, spec, box_) in fisher_cases() {
        for _ in 0..FISHER_POINTS {
            let lam = sample(&mut rng, &box_);
            let (outer, hess) = fisher_pair(&spec, &lam).map_err(|e| format!("{name} at {lam:?}: {e}"))?;
            let gap = outer.g.max_abs_diff(&hess.g);
            let tol = 1e-10f64.max(5.0 * outer.est_error.max(hess.est_error));
            worst_ratio = worst_ratio.max(gap / tol);
            ensure(gap <= tol, || format!("{name} at {lam:?}: gap {gap:e} > {tol:e}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} points; max gap / max(1e-10, 5 est_error) = {worst_ratio:.3e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut count = 0;
    for (name, spec, box_) in fisher_cases() {
        for _ in 0..FISHER_POINTS {
            let lam = sample(&mut rng, &box_);
            let (outer, hess) = fisher_pair(&spec, &lam).map_err(|e| format!("{name} at {lam:?}: {e}"))?;
            for g in [&outer.g, &hess.g] {
                let e = eig_sym(g).map_err(|e| e.to_string())?;
                let norm = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let rel = if norm == 0.0 { 0.0 } else { -e.min() / norm };
                worst = worst.max(rel);
                ensure(rel <= 1e-10, || format!("{name} at {lam:?}: λmin/‖g‖ = {:e}", -rel))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} matrices; max (−λmin / ‖g‖) = {worst:.3e} (tolerance 1e-10)"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let cases = [
        ("bernoulli", natural_bernoulli(), vec![(-4.0, 4.0)]),
        ("categorical", natural_categorical(), vec![(-2.0, 2.0); 2]),
        ("gaussian", natural_gaussian(), vec![(-2.0, 2.0), (-2.0, -0.2)]),
        ("exponential", natural_exponential(), vec![(-5.0, -0.2)]),
    ];
    for (name, spec, box_) in cases {
        let transhess::fisher::Family::Natural(n) = &spec.family else {
            return Err(format!("{name} is not natural"));
        };
        let psi: Arc<dyn ScalarField> = Arc::new(ExprField::new(n.psi.clone()));
        for _ in 0..BRIDGE_POINTS {
            let lam = sample(&mut rng, &box_);
            let (outer, _) = fisher_pair(&spec, &lam).map_err(|e| e.to_string())?;
            let p = HessianPoint::new(Arc::clone(&psi), &lam).map_err(|e| e.to_string())?;
            let gap = outer.g.max_abs_diff(&metric_from_potential(&p));
            worst = worst.max(gap);
            ensure(gap <= BRIDGE_TOL, || format!("{name} at {lam:?}: {gap:e}"))?;
        }
    }
    Ok(format!("4 families × {BRIDGE_POINTS} points; max ‖g_F − Hess ψ‖ = {worst:.3e} (tolerance {BRIDGE_TOL:e})"))
}

fn criterion_4() -> Outcome {
    let spec = reparam_bernoulli();
    let opts = FoliationOptions::default();
    let (mut kernel_err, mut invol, mut leaf) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..5 {
        for j in 0..5 {
            let lam = [-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64];
            let (outer, _) = fisher_pair(&spec, &lam).map_err(|e| e.to_string())?;
            ensure(outer.rank == 1 && outer.kernel.len() == 1, || {
                format!("rank {} at {lam:?}", outer.rank)
            })?;
            let k = &outer.kernel[0];
            let sign = if k[0] >= 0.0 { 1.0 } else { -1.0 };
            let err = (sign * k[0] - FRAC_1_SQRT_2).abs().max((sign * k[1] + FRAC_1_SQRT_2).abs());
            kernel_err = kernel_err.max(err);
            invol = invol.max(involutivity_residual(&spec, &lam, opts).map_err(|e| e.to_string())?);
            leaf = leaf.max(leafwise_constancy_residual(&spec, &lam, opts).map_err(|e| e.to_string())?);
        }
    }
    ensure(kernel_err <= KERNEL_TOL && invol <= KERNEL_TOL && leaf <= KERNEL_TOL, || {
        format!("kernel {kernel_err:e}, involutivity {invol:e}, leafwise {leaf:e}")
    })?;
    Ok(format!(
        "5×5 grid rank 1; kernel error {kernel_err:.3e}, involutivity {invol:.3e}, leafwise {leaf:.3e} (tolerance {KERNEL_TOL:e})"
    ))
}

fn corpus() -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = builtin_corpus();
    for k in 0..RANDOM_POTENTIALS {
        out.push(random_polynomial(&mut rng, 1 + k % 3, 1).unwrap().1);
    }
    out
}

fn corpus_points() -> Vec<(String, HessianPoint)> {
    corpus()
        .into_iter()
        .flat_map(|e| {
            e.points
                .iter()
                .map(|y| (e.name.clone(), HessianPoint::new(Arc::clone(&e.phi), y).unwrap()))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let (mut route, mut sym) = (0.0f64, 0.0f64);
    let points = corpus_points();
    for (name, p) in &points {
        let a = q_route_a(p).map_err(|e| e.to_string())?;
        let b = q_route_b(p);
        let scale = a.max_abs().max(b.max_abs()).max(p.g().max_abs().powi(2));
        let r = a.max_abs_diff(&b) / scale.max(f64::MIN_POSITIVE);
        let s = q_symmetry_residual(&b) / scale.max(1.0);
        route = route.max(r);
        sym = sym.max(s);
        ensure(r <= ROUTE_REL && s <= SYMMETRY_REL, || format!("{name} at {:?}: route {r:e}, symmetry {s:e}", p.y()))?;
    }
    Ok(format!(
        "{} points; route gap {route:.3e} (rel {ROUTE_REL:e}), symmetry {sym:.3e} (rel {SYMMETRY_REL:e})",
        points.len()
    ))
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    let points = corpus_points();
    for (name, p) in &points {
        let r = riemann_from_q(&q_route_b(p));
        let lc = LeviCivita::new(Arc::new(PotentialMetric::new(Arc::clone(p.phi()))));
        let direct = connection_curvature(&lc, p.y(), Some(p.g())).map_err(|e| e.to_string())?;
        let rel = r.max_abs_diff(&direct) / direct.max_abs().max(1.0);
        worst = worst.max(rel);
        ensure(rel <= RIEMANN_REL, || format!("{name} at {:?}: {rel:e}", p.y()))?;
    }
    Ok(format!("{} points; max ‖R_Q − R_LC‖ / max(1, ‖R_LC‖) = {worst:.3e}", points.len()))
}

fn random_connection(rng: &mut ChaCha8Rng, q: usize) -> PolynomialConnection {
    let mut draw = |scale: f64| rng.random_range(-1.0..1.0) * scale;
    let constant = Tensor3::from_fn(q, |_| draw(1.0));
    let linear = Tensor4::from_fn(q, |_| draw(0.5));
    let quadratic = (0..q).map(|_| Tensor4::from_fn(q, |_| draw(0.2))).collect();
    PolynomialConnection::new(constant, linear, quadratic).unwrap()
}

fn random_metric(rng: &mut ChaCha8Rng, q: usize) -> Arc<dyn MetricField> {
    let vars = default_vars("y", q);
    let mut entries: Vec<Arc<dyn ScalarField>> = Vec::new();
    for i in 0..q {
        for j in 0..=i {
            let mut text = if i == j { "3".to_string() } else { "0".to_string() };
            for v in &vars {
                text.push_str(&format!(" + {:?}*{v}", (rng.random_range(-0.3..0.3f64) * 1e4).round() / 1e4));
            }
            let c = (rng.random_range(-0.2..0.2f64) * 1e4).round() / 1e4;
            text.push_str(&format!(" + {c:?}*exp({}*{})", vars[i], vars[j]));
            entries.push(Arc::new(ExprField::new(parse(&text, &vars).unwrap())));
        }
    }
    Arc::new(ComponentMetric::new(q, entries).unwrap())
}

fn criterion_7() -> Outcome {
    let (mut flat_worst, mut pos_codazzi, mut pos_torsion) = (0.0f64, 0.0f64, 0.0f64);
    let points = corpus_points();
    for (name, p) in &points {
        let g: Arc<dyn MetricField> = Arc::new(PotentialMetric::new(Arc::clone(p.phi())));
        let flat: Arc<dyn Connection> = Arc::new(Flat { dim: p.dim() });
        let dual = Dual::new(Arc::clone(&flat), Arc::clone(&g)).map_err(|e| e.to_string())?;
        let jet = dual.connection_jet(p.y()).map_err(|e| e.to_string())?;
        let scale = jet.dgamma.max_abs().max(jet.gamma.max_abs().powi(2)).max(1.0);
        let r = connection_curvature(&dual, p.y(), None).map_err(|e| e.to_string())?.max_abs() / scale;
        flat_worst = flat_worst.max(r);
        ensure(r <= DUAL_TOL, || format!("{name} at {:?}: curvature {r:e}", p.y()))?;
        let c = codazzi_residual_general(flat.as_ref(), g.as_ref(), p.y()).map_err(|e| e.to_string())?
            / p.third().max_abs().max(1.0);
        let t = connection_torsion(&dual, p.y()).map_err(|e| e.to_string())?.max_abs() / jet.gamma.max_abs().max(1.0);
        pos_codazzi = pos_codazzi.max(c);
        pos_torsion = pos_torsion.max(t);
    }
    ensure(pos_codazzi <= 1e-10 && pos_torsion <= 1e-10, || {
        format!("potential metrics: Codazzi {pos_codazzi:e}, dual torsion {pos_torsion:e}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut involution = 0.0f64;
    for trial in 0..30 {
        let q = 2 + trial % 2;
        let d: Arc<dyn Connection> = Arc::new(random_connection(&mut rng, q));
        let g = random_metric(&mut rng, q);
        let y: Vec<f64> = (0..q).map(|_| rng.random_range(-0.5..0.5)).collect();
        let dual: Arc<dyn Connection> = Arc::new(Dual::new(Arc::clone(&d), Arc::clone(&g)).map_err(|e| e.to_string())?);
        let back = Dual::new(dual, g).map_err(|e| e.to_string())?;
        let (a, b) = (d.connection_jet(&y).unwrap(), back.connection_jet(&y).unwrap());
        let rel = (a.gamma.max_abs_diff(&b.gamma) / a.gamma.max_abs().max(1.0))
            .max(a.dgamma.max_abs_diff(&b.dgamma) / a.dgamma.max_abs().max(1.0));
        involution = involution.max(rel);
    }
    ensure(involution <= DUAL_TOL, || format!("dual(dual Γ) − Γ = {involution:e}"))?;

    // Gaussian (μ, σ): g = diag(1/σ², 2/σ²) is not Codazzi for the flat chart.
    let vars = ["mu", "sigma"];
    let entry = |s: &str| -> Arc<dyn ScalarField> { Arc::new(ExprField::new(parse(s, &vars).unwrap())) };
    let g: Arc<dyn MetricField> =
        Arc::new(ComponentMetric::new(2, vec![entry("1/sigma^2"), entry("0"), entry("2/sigma^2")]).unwrap());
    let y = [0.4, 1.0];
    let flat: Arc<dyn Connection> = Arc::new(Flat { dim: 2 });
    let neg_codazzi = codazzi_residual_general(flat.as_ref(), g.as_ref(), &y).map_err(|e| e.to_string())?;
    let neg_torsion = connection_torsion(&Dual::new(flat, g).unwrap(), &y).map_err(|e| e.to_string())?.max_abs();
    ensure(neg_codazzi > 0.5 && neg_torsion > 0.5, || {
        format!("gaussian: Codazzi {neg_codazzi:e}, torsion {neg_torsion:e}")
    })?;
    Ok(format!(
        "dual-flat curvature {flat_worst:.3e}; involution {involution:.3e}; potential Codazzi/torsion {pos_codazzi:.1e}/{pos_torsion:.1e}; gaussian {neg_codazzi:.2}/{neg_torsion:.2}"
    ))
}

fn criterion_8() -> Outcome {
    let (mut a_worst, mut b_worst) = (0.0f64, 0.0f64);
    for (name, p) in &corpus_points() {
        let a = alpha_routes(p).map_err(|e| e.to_string())?;
        let b = beta_routes(p, &q_route_b(p)).map_err(|e| e.to_string())?;
        let (ra, rb) = (a.residual() / a.scale(), b.residual() / b.scale());
        a_worst = a_worst.max(ra);
        b_worst = b_worst.max(rb);
        ensure(ra <= ROUTE_REL && rb <= ROUTE_REL, || format!("{name} at {:?}: α {ra:e}, β {rb:e}", p.y()))?;
    }
    let phi: Arc<dyn ScalarField> = Arc::new(ExprField::new(parse("-log(y1)", &["y1"]).unwrap()));
    let p = HessianPoint::new(phi, &[2.0]).map_err(|e| e.to_string())?;
    let alpha = koszul_alpha(&p, ROUTE_REL).map_err(|e| e.to_string())?[0];
    let beta = koszul_beta(&p, ROUTE_REL).map_err(|e| e.to_string())?.get(0, 0);
    ensure((alpha + 0.5).abs() <= 1e-12 && (beta - 0.25).abs() <= 1e-12, || {
        format!("reference α₁ = {alpha}, β₁₁ = {beta}")
    })?;
    Ok(format!("α routes {a_worst:.3e}, β routes {b_worst:.3e} (rel {ROUTE_REL:e}); α₁ = {alpha}, β₁₁ = {beta}"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let neg_log: Arc<dyn ScalarField> = Arc::new(ExprField::new(parse("-log(y1)", &["y1"]).unwrap()));
    let mut sectional_worst = 0.0f64;
    let mut fit_worst = 0.0f64;
    for y in [0.5, 1.0, 2.0, 3.5] {
        let p = HessianPoint::new(Arc::clone(&neg_log), &[y]).map_err(|e| e.to_string())?;
        let q = hessian_curvature_q(&p, ROUTE_REL).map_err(|e| e.to_string())?;
        let (c, residual) = constant_curvature_fit(&q, p.g());
        fit_worst = fit_worst.max((c - 1.0).abs()).max(residual);
        ensure((c - 1.0).abs() <= FIT_TOL && residual <= FIT_TOL, || format!("−log y at {y}: c {c}, residual {residual:e}"))?;
        for _ in 0..100 {
            let xi = vec![vec![rng.random_range(-3.0..3.0)]];
            let s = sectional_q(&q, p.g(), &xi).map_err(|e| e.to_string())?;
            sectional_worst = sectional_worst.max((s - 1.0).abs());
        }
    }
    ensure(sectional_worst <= FIT_TOL, || format!("q(ξ) − 1 = {sectional_worst:e}"))?;

    let quad: Arc<dyn ScalarField> = Arc::new(Potential::Quadratic { dim: 2 });
    let p = HessianPoint::new(quad, &[0.3, -0.7]).unwrap();
    let (c0, r0) = constant_curvature_fit(&hessian_curvature_q(&p, ROUTE_REL).unwrap(), p.g());
    ensure(c0.abs() <= FIT_TOL && r0 <= FIT_TOL, || format!("quadratic c = {c0}"))?;

    let two: Arc<dyn ScalarField> = Arc::new(ExprField::new(parse("-log(y1) - log(y2)", &["y1", "y2"]).unwrap()));
    let mut einstein_worst = 0.0f64;
    let mut fit_gap = f64::INFINITY;
    for y in [[1.0, 2.0], [0.5, 0.5], [3.0, 0.2]] {
        let p = HessianPoint::new(Arc::clone(&two), &y).unwrap();
        let (lambda, residual) = einstein_check(&p, ROUTE_REL).map_err(|e| e.to_string())?;
        einstein_worst = einstein_worst.max((lambda - 1.0).abs()).max(residual);
        let (_, c_residual) = constant_curvature_fit(&hessian_curvature_q(&p, ROUTE_REL).unwrap(), p.g());
        fit_gap = fit_gap.min(c_residual / p.g().max_abs().powi(2));
    }
    ensure(einstein_worst <= FIT_TOL, || format!("Einstein λ − 1 / residual {einstein_worst:e}"))?;
    ensure(fit_gap > 1e-3, || format!("−log y1 − log y2 passes the constant-curvature fit ({fit_gap:e})"))?;
    Ok(format!(
        "−log y: |c−1|, residual ≤ {fit_worst:.1e}, |q(ξ)−1| ≤ {sectional_worst:.1e} over 400 ξ; quadratic c = {c0}; two-variable Einstein error {einstein_worst:.1e}, fit residual ≥ {fit_gap:.3}"
    ))
}

fn criterion_10() -> Outcome {
    let sign = calibrate_sign().map_err(|e| e.to_string())?;
    ensure(sign == KAHLER_SIGN, || format!("calibration gave {sign}, frozen {KAHLER_SIGN}"))?;
    let (mut r_worst, mut ricci_worst) = (0.0f64, 0.0f64);
    let opts = ReportOptions::default();
    let points = corpus_points();
    for (name, p) in &points {
        let rep = report_at(p, &opts).map_err(|e| e.to_string())?;
        r_worst = r_worst.max(rep.kahler_r_residual);
        ricci_worst = ricci_worst.max(rep.kahler_ricci_residual);
        ensure(rep.kahler_r_residual <= KAHLER_TOL && rep.kahler_ricci_residual <= KAHLER_TOL, || {
            format!("{name} at {:?}: R {:e}, Ric {:e}", p.y(), rep.kahler_r_residual, rep.kahler_ricci_residual)
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let neg_log: Arc<dyn ScalarField> = Arc::new(ExprField::new(parse("-log(y1)", &["y1"]).unwrap()));
    let mut holo_worst = 0.0f64;
    for _ in 0..50 {
        let kp = KahlerPoint::new(Arc::clone(&neg_log), &[rng.random_range(0.2..4.0)], &[rng.random_range(-2.0..2.0)])
            .map_err(|e| e.to_string())?;
        let v = [Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))];
        let h = holomorphic_sectional(&kp, &v).map_err(|e| e.to_string())?;
        holo_worst = holo_worst.max((h + 1.0).abs());
    }
    ensure(holo_worst <= KAHLER_TOL, || format!("holomorphic sectional off −1 by {holo_worst:e}"))?;

    let mut flat_worst = 0.0f64;
    for dim in 1..=3 {
        let phi: Arc<dyn ScalarField> = Arc::new(Potential::ExpSum { dim });
        for _ in 0..10 {
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            let p = HessianPoint::new(Arc::clone(&phi), &y).unwrap();
            let lc = LeviCivita::new(Arc::new(PotentialMetric::new(Arc::clone(&phi))));
            let r = connection_curvature(&lc, &y, Some(p.g())).map_err(|e| e.to_string())?;
            flat_worst = flat_worst.max(r.max_abs());
        }
    }
    ensure(flat_worst <= RIEMANN_REL, || format!("Σ exp: ‖R_LC‖ = {flat_worst:e}"))?;
    Ok(format!(
        "sign {sign}; ‖R^N − ½Q‖ {r_worst:.2e}, ‖Ric^N + ½β‖ {ricci_worst:.2e} over {} points (tolerance {KAHLER_TOL:e}); holomorphic |H+1| {holo_worst:.1e}; Σ exp ‖R‖ {flat_worst:.1e}",
        points.len()
    ))
}

fn random_expr(rng: &mut impl Rng, vars: &[String], depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.7) {
            vars[rng.random_range(0..vars.len())].clone()
        } else {
            format!("{:.2}", rng.random_range(-2.0..2.0))
        };
    }
    let a = random_expr(rng, vars, depth - 1);
    match rng.random_range(0..9) {
        0 => format!("{a} + {}", random_expr(rng, vars, depth - 1)),
        1 => format!("{a} - {}", random_expr(rng, vars, depth - 1)),
        2 => format!("({a})*({})", random_expr(rng, vars, depth - 1)),
        3 => format!("({a})/(1.5 + ({})^2)", random_expr(rng, vars, depth - 1)),
        4 => format!("exp(0.3*({a}))"),
        5 => format!("log(2 + ({a})^2)"),
        6 => format!("sqrt(1 + ({a})^2)"),
        7 => format!("({a})^{}", rng.random_range(2..4)),
        _ => format!("(1 + ({a})^2)^-0.5"),
    }
}

fn multi_indices(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_order {
        let mut next = Vec::new();
        for vars in &frontier {
            let start = vars.last().copied().unwrap_or(0);
            for v in start..dim {
                let mut w: Vec<usize> = vars.clone();
                w.push(v);
                next.push(w);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut low, mut high) = (0.0f64, 0.0f64);
    for trial in 0..RANDOM_EXPRESSIONS {
        let dim = 1 + trial % 3;
        let vars = default_vars("y", dim);
        let text = random_expr(&mut rng, &vars, 3);
        let f = ExprField::new(parse(&text, &vars).map_err(|e| format!("{text}: {e}"))?);
        let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jet = f.jet_at(&y).map_err(|e| format!("{text}: {e}"))?;
        for idx in multi_indices(dim, 4) {
            let alpha = multi_index(dim, &idx);
            let exact = jet.derivative(&alpha).unwrap();
            let (approx, _) = fd_partial_adaptive(&f, &y, &alpha, 0.2).map_err(|e| e.to_string())?;
            let rel = (exact - approx).abs() / exact.abs().max(1.0);
            let (tol, worst) = if idx.len() <= 2 { (JET_TOL_LOW, &mut low) } else { (JET_TOL_HIGH, &mut high) };
            *worst = worst.max(rel);
            ensure(rel <= tol, || format!("{text} at {y:?} ∂{idx:?}: jet {exact}, fd {approx}"))?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dim in 1..=3 {
        let vars = default_vars("y", dim);
        let monomials = multi_indices(dim, 4);
        let coeffs: Vec<i32> = monomials.iter().map(|_| rng.random_range(-9..=9)).collect();
        let text = monomials
            .iter()
            .zip(&coeffs)
            .map(|(m, c)| format!("{c}*{}", m.iter().map(|&v| vars[v].as_str()).collect::<Vec<_>>().join("*")))
            .collect::<Vec<_>>()
            .join(" + ");
        let jet = ExprField::new(parse(&text, &vars).unwrap()).jet_at(&vec![0.0; dim]).unwrap();
        for (m, c) in monomials.iter().zip(&coeffs) {
            let alpha = multi_index(dim, m);
            let factorial: f64 = alpha.iter().map(|&a| (1..=a as u32).product::<u32>() as f64).product();
            ensure(jet.derivative(&alpha).unwrap() == *c as f64 * factorial, || format!("{text} ∂{m:?}"))?;
        }
    }
    Ok(format!(
        "{RANDOM_EXPRESSIONS} expressions; worst rel gap {low:.2e} (order ≤ 2, tol {JET_TOL_LOW:e}), {high:.2e} (order 3–4, tol {JET_TOL_HIGH:e}); quartics exact"
    ))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run_cli(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_transhess"))
        .args(args)
        .current_dir(workspace_root())
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn criterion_12() -> Outcome {
    let commands: Vec<Vec<&str>> = vec![
        vec!["report", "--phi", "-log(y1) - log(y2)", "--dim", "2", "--grid", "0.5:2:3,1:3:3"],
        vec!["report", "--config", "configs/report-neg-log.toml"],
        vec!["report", "--family", "configs/families/student-location.toml", "--points", "0;0.5;1", "--format", "csv"],
        vec!["report", "--family", "configs/families/reparam-bernoulli.toml", "--grid", "-1:1:3,-1:1:3"],
        vec!["verify", "--seed", "5", "--random", "30"],
        vec!["verify", "--corpus", "configs/corpus.toml", "--format", "json"],
        vec!["foliate", "--family", "configs/families/reparam-bernoulli.toml", "--points", "0.3,-0.3;0,1"],
        vec![
            "natgrad", "--family", "configs/families/reparam-bernoulli.toml", "--objective", "(t1 + t2 - 1)^2",
            "--points", "0.3,-0.3", "--eta", "0.5", "--steps", "10",
        ],
    ];
    for args in &commands {
        let (code_a, out_a) = run_cli(args)?;
        let (code_b, out_b) = run_cli(args)?;
        ensure(code_a == 0 && code_b == 0, || format!("{args:?} exited {code_a}/{code_b}"))?;
        ensure(!out_a.is_empty() && out_a == out_b, || format!("{args:?}: outputs differ"))?;
    }
    let (builtin, _) = run_cli(&["verify"])?;
    let (shipped, _) = run_cli(&["verify", "--corpus", "configs/corpus.toml"])?;
    ensure(builtin == 0 && shipped == 0, || format!("verify exit codes {builtin} (built-in), {shipped} (shipped file)"))?;
    Ok(format!("{} commands byte-identical across two runs; verify exits 0 on built-in and shipped corpora", commands.len()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 12] = [
        ("Fisher identity", criterion_1),
        ("PSD", criterion_2),
        ("exponential-family bridge", criterion_3),
        ("degenerate family", criterion_4),
        ("Q routes and symmetries", criterion_5),
        ("Riemann from Q", criterion_6),
        ("dual flatness and duality", criterion_7),
        ("Koszul routes", criterion_8),
        ("constant curvature and Einstein", criterion_9),
        ("Kähler bridges", criterion_10),
        ("differentiation engine", criterion_11),
        ("CLI determinism", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(summary) => println!("criterion {:>2} PASS {name}: {summary}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
