use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::point::HessianPoint;
use crate::diffops::{Potential, ScalarField};
use crate::error::{Error, Result};
use crate::expr::{default_vars, parse, ExprField};

/// A potential together with points where its Hessian is a metric.
#[derive(Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub phi: Arc<dyn ScalarField>,
    pub points: Vec<Vec<f64>>,
}

impl fmt::Debug for CorpusEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorpusEntry")
            .field("name", &self.name)
            .field("points", &self.points)
            .finish()
    }
}

fn entry(name: &str, phi: Potential, points: Vec<Vec<f64>>) -> CorpusEntry {
    CorpusEntry {
        name: name.to_string(),
        phi: Arc::new(phi),
        points,
    }
}

/// The closed-form potentials with a few points each.
pub fn builtin_corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    for dim in 1..=3 {
        let positive: Vec<Vec<f64>> = [0.5, 1.0, 2.0, 3.5]
            .iter()
            .map(|&s| (0..dim).map(|i| s * (1.0 + 0.25 * i as f64)).collect())
            .collect();
        let signed: Vec<Vec<f64>> = [-1.0, 0.0, 0.7]
            .iter()
            .map(|&s| (0..dim).map(|i| s - 0.3 * i as f64).collect())
            .collect();
        out.push(entry(&format!("quadratic{dim}"), Potential::Quadratic { dim }, signed.clone()));
        out.push(entry(&format!("neg_log{dim}"), Potential::NegLogSum { dim }, positive));
        out.push(entry(&format!("exp_sum{dim}"), Potential::ExpSum { dim }, signed));
    }
    for dim in 2..=3 {
        let points = vec![
            [vec![0.0; dim - 1], vec![1.0]].concat(),
            [vec![0.4; dim - 1], vec![2.0]].concat(),
            [(0..dim - 1).map(|i| -0.5 + 0.3 * i as f64).collect(), vec![0.9]].concat(),
        ];
        out.push(entry(&format!("paraboloid{dim}"), Potential::Paraboloid { dim }, points));
    }
    out
}

/// All exponent multi-indices of total degree in `lo..=hi` over `dim`
/// variables, graded then lexicographic.
fn monomials(dim: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(dim, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in lo..=hi {
        rec(dim, degree, &mut Vec::new(), &mut out);
    }
    out
}

fn monomial_text(coeff: f64, exps: &[usize], vars: &[String]) -> String {
    let mut text = format!("{coeff:?}");
    for (e, v) in exps.iter().zip(vars) {
        match e {
            0 => {}
            1 => text.push_str(&format!("*{v}")),
            _ => text.push_str(&format!("*{v}^{e}")),
        }
    }
    text
}

/// A random polynomial potential of degree ≤ 4 (as expression text, so it
/// also exercises the parser) with `count` points where its Hessian is
/// positive definite.
pub fn random_polynomial(rng: &mut impl Rng, dim: usize, count: usize) -> Result<(String, CorpusEntry)> {
    let vars = default_vars("y", dim);
    for _ in 0..100 {
        let mut terms = Vec::new();
        for v in &vars {
            let a: f64 = 1.0 + rng.random::<f64>();
            terms.push(format!("{a:?}*{v}^2"));
        }
        for exps in monomials(dim, 2, 4) {
            let c: f64 = rng.sample::<f64, _>(StandardNormal) * 0.3;
            let c = (c * 1e6).round() / 1e6;
            terms.push(monomial_text(c, &exps, &vars));
        }
        let text = terms.join(" + ");
        let phi: Arc<dyn ScalarField> = Arc::new(ExprField::new(parse(&text, &vars)?));
        let mut points = Vec::new();
        for _ in 0..20 * count {
            if points.len() == count {
                break;
            }
            let y: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.6..0.6)).collect();
            if HessianPoint::new(Arc::clone(&phi), &y).is_ok() {
                points.push(y);
            }
        }
        if points.len() == count {
            let entry = CorpusEntry {
                name: format!("poly{dim}"),
                phi,
                points,
            };
            return Ok((text, entry));
        }
    }
    Err(Error::Config("could not draw a locally convex polynomial".into()))
}
