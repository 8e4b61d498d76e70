//! `verify`: identity suites over a corpus of potentials and families.
//!
//! Every suite reduces to one row `(suite, points, max_residual, tolerance,
//! pass, detail)`; the exit code is 1 when any row fails.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use transhess::diffops::ScalarField;
use transhess::expr::{default_vars, parse, ExprField};
use transhess::fisher::{Family, FamilySpec, SpecConfig};
use transhess::hessian::{
    builtin_corpus, connection_curvature, random_polynomial, report_at, Connection, CorpusEntry, Dual, Fault, Flat,
    HessianPoint, HessianReport, LeviCivita, MetricField, PotentialMetric, ReportOptions,
};
use transhess::tensors::{eig_sym, SymMatrix};
use transhess::Error;

use crate::config::{expand_grid, Format, GridAxis, RunConfig, Tolerances};
use crate::output::{num, Table};
use crate::report::{fisher_row, FisherRow};
use crate::Failure;

/// A parameter family with the points where it is checked.
pub struct FamilyCase {
    pub name: String,
    pub spec: FamilySpec,
    pub points: Vec<Vec<f64>>,
}

pub struct Corpus {
    pub potentials: Vec<CorpusEntry>,
    pub families: Vec<FamilyCase>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    name: String,
    phi: String,
    dim: usize,
    points: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    name: String,
    /// Same schema as a `--family` file.
    family: serde_json::Value,
    points: Option<Vec<Vec<f64>>>,
    grid: Option<Vec<GridAxis>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    #[serde(default)]
    potentials: Vec<PotentialFile>,
    #[serde(default)]
    families: Vec<FamilyFile>,
}

pub fn load_corpus(path: &Path) -> Result<Corpus, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        _ => serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
    };
    let file: CorpusFile =
        serde_json::from_value(value).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;

    let mut potentials = Vec::new();
    for p in file.potentials {
        let ast = parse(&p.phi, &default_vars("y", p.dim)).map_err(|e| Failure::usage(format!("{}: {e}", p.name)))?;
        if let Some(bad) = p.points.iter().find(|y| y.len() != p.dim) {
            return Err(Failure::usage(format!("{}: point {bad:?} is not {}-dimensional", p.name, p.dim)));
        }
        potentials.push(CorpusEntry {
            name: p.name,
            phi: Arc::new(ExprField::new(ast)),
            points: p.points,
        });
    }
    let mut families = Vec::new();
    for f in file.families {
        let spec = SpecConfig::from_value(f.family)
            .and_then(SpecConfig::into_spec)
            .map_err(|e| Failure::usage(format!("{}: {e}", f.name)))?;
        let points = match (f.points, f.grid) {
            (Some(p), None) => p,
            (None, Some(g)) => expand_grid(&g)?,
            _ => return Err(Failure::usage(format!("{}: give exactly one of `points` and `grid`", f.name))),
        };
        if let Some(bad) = points.iter().find(|y| y.len() != spec.param_dim()) {
            return Err(Failure::usage(format!("{}: point {bad:?} has the wrong dimension", f.name)));
        }
        families.push(FamilyCase {
            name: f.name,
            spec,
            points,
        });
    }
    Ok(Corpus { potentials, families })
}

fn natural(json: &str) -> FamilySpec {
    SpecConfig::from_json(json)
        .and_then(SpecConfig::into_spec)
        .expect("built-in family config is valid")
}

/// Name, family, and a parameter box inside its domain.
type BuiltinFamily = (&'static str, FamilySpec, Vec<(f64, f64)>);

/// Built-in families with boxes inside their parameter domains.
fn builtin_families() -> Vec<BuiltinFamily> {
    let bernoulli_reparam =
        FamilySpec::linear_reparam(FamilySpec::bernoulli_logit(), vec![vec![1.0, 1.0]]).expect("valid reparam");
    vec![
        ("gaussian", FamilySpec::gaussian(), vec![(-2.0, 2.0), (0.3, 3.0)]),
        ("bernoulli-logit", FamilySpec::bernoulli_logit(), vec![(-4.0, 4.0)]),
        (
            "categorical-softmax(3)",
            FamilySpec::categorical_softmax(3).expect("k = 3 is valid"),
            vec![(-2.0, 2.0); 3],
        ),
        ("exponential-rate", FamilySpec::exponential_rate(), vec![(0.1, 5.0)]),
        (
            "natural-bernoulli",
            natural(
                r#"{"kind": "exp-family-natural", "params": ["t"], "psi": "log(1 + exp(t))", "statistics": ["x"],
                    "sample_space": {"kind": "finite", "points": [[0], [1]]}}"#,
            ),
            vec![(-4.0, 4.0)],
        ),
        (
            "natural-categorical",
            natural(
                r#"{"kind": "exp-family-natural", "params": ["t1", "t2"], "psi": "log(1 + exp(t1) + exp(t2))",
                    "sample_vars": ["x1", "x2"], "statistics": ["x1", "x2"],
                    "sample_space": {"kind": "finite", "points": [[0, 0], [1, 0], [0, 1]]}}"#,
            ),
            vec![(-2.0, 2.0); 2],
        ),
        (
            "natural-gaussian",
            natural(
                r#"{"kind": "exp-family-natural", "params": ["a", "b"],
                    "psi": "-a^2/(4*b) + 0.5*log(-3.141592653589793/b)", "statistics": ["x", "x^2"],
                    "sample_space": {"kind": "real-line"},
                    "reference": {"center": ["-a/(2*b)"], "scale": ["sqrt(-1/b)"]}}"#,
            ),
            vec![(-2.0, 2.0), (-2.0, -0.2)],
        ),
        ("reparam-bernoulli", bernoulli_reparam, vec![(-2.0, 2.0); 2]),
        (
            "reparam-gaussian",
            FamilySpec::linear_reparam(FamilySpec::gaussian(), vec![vec![1.0, 0.5], vec![0.0, 1.0]])
                .expect("valid reparam"),
            vec![(-1.0, 1.0), (0.3, 3.0)],
        ),
    ]
}

/// Built-in potentials, `random` seeded polynomials, and the built-in
/// families at seeded random points plus a 5×5 grid for the degenerate one.
pub fn default_corpus(seed: u64, random: usize) -> Result<Corpus, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut potentials = builtin_corpus();
    for k in 0..random {
        let (_, mut entry) = random_polynomial(&mut rng, 1 + k % 3, 1)?;
        entry.name = format!("{}#{k}", entry.name);
        potentials.push(entry);
    }
    let mut families = Vec::new();
    for (name, spec, box_) in builtin_families() {
        let points = (0..20)
            .map(|_| box_.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect())
            .collect();
        families.push(FamilyCase {
            name: name.into(),
            spec,
            points,
        });
    }
    let grid = [GridAxis {
        min: -1.0,
        max: 1.0,
        count: 5,
    }; 2];
    families.push(FamilyCase {
        name: "reparam-bernoulli-grid".into(),
        spec: FamilySpec::linear_reparam(FamilySpec::bernoulli_logit(), vec![vec![1.0, 1.0]])?,
        points: expand_grid(&grid)?,
    });
    Ok(Corpus { potentials, families })
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub suite: String,
    pub points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

/// Running maximum of one suite's residuals.
struct Suite {
    name: &'static str,
    tolerance: f64,
    /// Prefix of the detail when the suite fails, e.g. `RouteMismatch(Q)`.
    failure_tag: Option<&'static str>,
    points: usize,
    failures: usize,
    worst: f64,
    worst_at: String,
    note: Option<String>,
}

impl Suite {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Suite {
            name,
            tolerance,
            failure_tag: None,
            points: 0,
            failures: 0,
            worst: 0.0,
            worst_at: String::new(),
            note: None,
        }
    }

    fn tagged(mut self, tag: &'static str) -> Self {
        self.failure_tag = Some(tag);
        self
    }

    fn add(&mut self, residual: f64, at: impl FnOnce() -> String) {
        let r = if residual.is_nan() { f64::INFINITY } else { residual };
        self.points += 1;
        if r > self.tolerance {
            self.failures += 1;
        }
        if self.points == 1 || r > self.worst {
            self.worst = r;
            self.worst_at = at();
        }
    }

    /// A point where the check could not be evaluated counts as a failure.
    fn fail(&mut self, at: String, why: String) {
        self.add(f64::INFINITY, || at);
        self.note.get_or_insert(why);
    }

    fn row(self) -> Option<SuiteRow> {
        if self.points == 0 {
            return None;
        }
        let pass = self.failures == 0;
        let mut detail = if pass {
            format!("worst at {}", self.worst_at)
        } else {
            format!(
                "{}{} of {} points exceed; worst at {}",
                self.failure_tag.map(|t| format!("{t}: ")).unwrap_or_default(),
                self.failures,
                self.points,
                self.worst_at
            )
        };
        if let Some(n) = self.note {
            detail.push_str(&format!("; {n}"));
        }
        Some(SuiteRow {
            suite: self.name.into(),
            points: self.points,
            max_residual: self.worst,
            tolerance: self.tolerance,
            pass,
            detail,
        })
    }
}

fn loc(name: &str, y: &[f64]) -> String {
    let coords: Vec<String> = y.iter().map(|&v| num(v)).collect();
    format!("{name} [{}]", coords.join(" "))
}

struct PotentialCheck {
    report: HessianReport,
    riemann: f64,
    dual: f64,
}

fn check_potential(phi: &Arc<dyn ScalarField>, y: &[f64], opts: &ReportOptions) -> transhess::Result<PotentialCheck> {
    let p = HessianPoint::new(Arc::clone(phi), y)?;
    let report = report_at(&p, opts)?;
    let g: Arc<dyn MetricField> = Arc::new(PotentialMetric::new(Arc::clone(phi)));

    let lc = connection_curvature(&LeviCivita::new(Arc::clone(&g)), y, Some(p.g()))?;
    let riemann = report.r.max_abs_diff(&lc) / lc.max_abs().max(1.0);

    let dual = Dual::new(Arc::new(Flat { dim: p.dim() }), g)?;
    let jet = dual.connection_jet(y)?;
    let scale = jet.dgamma.max_abs().max(jet.gamma.max_abs().powi(2)).max(1.0);
    let dual = connection_curvature(&dual, y, None)?.max_abs() / scale;
    Ok(PotentialCheck { report, riemann, dual })
}

fn potential_suites(corpus: &[CorpusEntry], tol: &Tolerances, fault: Option<Fault>) -> Result<Vec<Suite>, Failure> {
    let opts = ReportOptions {
        route_rel: tol.route,
        fault,
    };
    let jobs: Vec<(&CorpusEntry, &Vec<f64>)> = corpus.iter().flat_map(|e| e.points.iter().map(move |y| (e, y))).collect();
    let checks: Vec<_> = jobs.par_iter().map(|(e, y)| check_potential(&e.phi, y, &opts)).collect();

    let mut q_routes = Suite::new("hessian.q-routes", tol.route).tagged("RouteMismatch(Q)");
    let mut q_sym = Suite::new("hessian.q-symmetries", tol.symmetry);
    let mut riemann = Suite::new("hessian.riemann-from-q", tol.riemann);
    let mut dual = Suite::new("hessian.dual-flatness", tol.dual);
    let mut alpha = Suite::new("hessian.koszul-alpha", tol.route).tagged("RouteMismatch(alpha)");
    let mut beta = Suite::new("hessian.koszul-beta", tol.route).tagged("RouteMismatch(beta)");
    let mut k_curv = Suite::new("kahler.curvature", tol.kahler);
    let mut k_ricci = Suite::new("kahler.ricci", tol.kahler);
    let mut k_holo = Suite::new("kahler.holomorphic-sectional", tol.kahler);

    for ((e, y), check) in jobs.iter().zip(checks) {
        let at = || loc(&e.name, y);
        let c = check.map_err(|err| Failure::usage(format!("{}: {err}", at())))?;
        let r = &c.report;
        let q_scale = r.q.max_abs().max(r.g.max_abs().powi(2)).max(1.0);
        q_routes.add(r.q_route_residual, at);
        q_sym.add(r.q_symmetry_residual / q_scale, at);
        riemann.add(c.riemann, at);
        dual.add(c.dual, at);
        alpha.add(r.alpha_route_residual, at);
        beta.add(r.beta_route_residual, at);
        k_curv.add(r.kahler_r_residual, at);
        k_ricci.add(r.kahler_ricci_residual, at);
        // Only where the space-form fit is exact does the lift have constant
        // holomorphic sectional curvature −c.
        if r.c_residual <= 1e-10 * r.g.max_abs().powi(2).max(1.0) {
            k_holo.add((r.holo_sectional + r.c_fit).abs(), at);
        }
    }
    Ok(vec![q_routes, q_sym, riemann, dual, alpha, beta, k_curv, k_ricci, k_holo])
}

fn relative_negativity(g: &SymMatrix) -> transhess::Result<f64> {
    let e = eig_sym(g)?;
    let norm = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(if norm == 0.0 { 0.0 } else { (-e.min()).max(0.0) / norm })
}

/// `‖Hess ψ(λ)‖` computed from the potential's jet.
fn hess_psi(psi: &transhess::expr::ExprAst, lam: &[f64]) -> transhess::Result<SymMatrix> {
    let jet = ExprField::new(psi.clone()).jet_at(lam)?;
    Ok(SymMatrix::from_fn(lam.len(), |i, j| jet.d(&[i, j])))
}

fn family_suites(cases: &[FamilyCase], tol: &Tolerances) -> Result<Vec<Suite>, Failure> {
    let jobs: Vec<(&FamilyCase, &Vec<f64>)> = cases.iter().flat_map(|c| c.points.iter().map(move |y| (c, y))).collect();
    let rows: Vec<transhess::Result<FisherRow>> = jobs.par_iter().map(|(c, y)| fisher_row(&c.spec, y, tol)).collect();

    let mut identity = Suite::new("fisher.identity", 1.0);
    identity.note = Some("residual is |E[dl dl] + E[d2 l]| / max(1e-10, 5 est_error)".into());
    let mut psd = Suite::new("fisher.psd", tol.psd);
    let mut bridge = Suite::new("fisher.exp-bridge", tol.bridge);
    let mut reparam = Suite::new("fisher.reparam-kernel", tol.foliation);
    let mut invol = Suite::new("fisher.involutivity", tol.foliation);
    let mut leaf = Suite::new("fisher.leafwise", tol.foliation);

    for ((case, lam), row) in jobs.iter().zip(rows) {
        let at = || loc(&case.name, lam);
        let row = match row {
            Ok(r) => r,
            Err(Error::NotPsd { eigenvalue, tolerance }) => {
                psd.fail(at(), format!("eigenvalue {eigenvalue:e} below -{tolerance:e}"));
                continue;
            }
            Err(e) => return Err(Failure::usage(format!("{}: {e}", at()))),
        };
        identity.add(row.identity_gap / (5.0 * row.est_error).max(1e-10), at);
        psd.add(relative_negativity(&row.g)?.max(relative_negativity(&row.g_hess)?), at);
        if let Family::Natural(n) = &case.spec.family {
            bridge.add(row.g.max_abs_diff(&hess_psi(&n.psi, lam)?), at);
        }
        if let Family::LinearReparam { matrix, .. } = &case.spec.family {
            // Directions killed by the reparametrisation are exactly ker g.
            let leak = row
                .kernel
                .iter()
                .flat_map(|k| matrix.iter().map(move |a| a.iter().zip(k).map(|(x, y)| x * y).sum::<f64>().abs()))
                .fold(0.0, f64::max);
            reparam.add(leak, at);
        }
        if let Some(e) = &row.foliation_error {
            invol.fail(at(), e.clone());
            leaf.fail(at(), e.clone());
        }
        if let Some(r) = row.involutivity_residual {
            invol.add(r, at);
        }
        if let Some(r) = row.leafwise_residual {
            leaf.add(r, at);
        }
    }
    Ok(vec![identity, psd, bridge, reparam, invol, leaf])
}

pub fn run_suites(corpus: &Corpus, tol: &Tolerances, fault: Option<Fault>) -> Result<Vec<SuiteRow>, Failure> {
    let total: usize = corpus.potentials.iter().map(|e| e.points.len()).sum::<usize>()
        + corpus.families.iter().map(|c| c.points.len()).sum::<usize>();
    if total == 0 {
        return Err(Failure::usage("nothing to verify"));
    }
    let mut suites = potential_suites(&corpus.potentials, tol, fault)?;
    suites.extend(family_suites(&corpus.families, tol)?);
    Ok(suites.into_iter().filter_map(Suite::row).collect())
}

pub fn cmd_verify(run: &RunConfig, corpus: Option<&Path>, random: usize, fault: Option<&str>) -> Result<u8, Failure> {
    let fault = match fault {
        None => None,
        Some("sign-flip") => Some(Fault::SignFlip),
        Some(other) => return Err(Failure::usage(format!("unknown fault `{other}`"))),
    };
    let corpus = match corpus {
        Some(path) => load_corpus(path)?,
        None => default_corpus(run.seed, random)?,
    };
    let rows = run_suites(&corpus, &run.tol, fault)?;

    let header = ["suite", "points", "max_residual", "tolerance", "pass", "detail"].map(String::from).to_vec();
    let mut table = Table::new(header);
    for r in &rows {
        let record = vec![
            r.suite.clone(),
            r.points.to_string(),
            num(r.max_residual),
            num(r.tolerance),
            r.pass.to_string(),
            r.detail.clone(),
        ];
        table.push(r.clone(), record);
    }
    table.write(run.format.unwrap_or(Format::Csv), run.out.as_deref())?;
    Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
}
