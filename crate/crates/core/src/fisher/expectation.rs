//! Expectations `E_λ[·]` over a sample space by quadrature, exact sums or
//! seeded importance sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::family::{FamilySpec, Integration, SampleSpace};
use super::quadrature::{gauss_hermite, gauss_legendre};
use crate::diffops::Jet4;
use crate::error::{Error, Result};
use crate::tensors::SymMatrix;

const DEFAULT_HERMITE: usize = 64;
const DEFAULT_LEGENDRE: usize = 128;

/// A sample point with `ln` of its integration weight (Jacobian included),
/// so that `E[f] ≈ Σ exp(log_w + l(x)) f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Node {
    pub x: Vec<f64>,
    pub log_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum AxisRule {
    Hermite(usize),
    Legendre(usize),
}

impl AxisRule {
    fn halved(self) -> Self {
        match self {
            AxisRule::Hermite(n) => AxisRule::Hermite((n / 2).max(1)),
            AxisRule::Legendre(n) => AxisRule::Legendre((n / 2).max(1)),
        }
    }
}

/// The deterministic rule for each continuous axis, in axis order.
fn axis_rules(space: &SampleSpace, integration: Integration, out: &mut Vec<AxisRule>) -> Result<()> {
    match space {
        SampleSpace::Finite { .. } => Ok(()),
        SampleSpace::Product(factors) => factors.iter().try_for_each(|f| axis_rules(f, integration, out)),
        continuous => {
            let rule = match (integration, continuous) {
                (Integration::Default, SampleSpace::RealLine) => AxisRule::Hermite(DEFAULT_HERMITE),
                (Integration::Default, _) => AxisRule::Legendre(DEFAULT_LEGENDRE),
                (Integration::GaussHermite { n }, SampleSpace::RealLine) => AxisRule::Hermite(n),
                (Integration::GaussHermite { .. }, _) => {
                    return Err(Error::Config("gauss-hermite applies to real-line axes only".into()))
                }
                (Integration::GaussLegendre { n }, _) => AxisRule::Legendre(n),
                (Integration::ExactSum, _) => {
                    return Err(Error::Config("exact-sum needs a finite sample space".into()))
                }
                (Integration::MonteCarlo { .. }, _) => unreachable!("sampled separately"),
            };
            match rule {
                AxisRule::Hermite(0) | AxisRule::Legendre(0) => Err(Error::Config("quadrature needs n ≥ 1".into())),
                _ => {
                    out.push(rule);
                    Ok(())
                }
            }
        }
    }
}

/// One-dimensional nodes for a single factor, with reference `(c, s)` for
/// continuous factors.
fn factor_nodes(space: &SampleSpace, rule: Option<AxisRule>, reference: Option<(f64, f64)>) -> Vec<Node> {
    let (c, s) = reference.unwrap_or((0.0, 1.0));
    match (space, rule) {
        (SampleSpace::Finite { points }, _) => points.iter().map(|p| Node { x: p.clone(), log_w: 0.0 }).collect(),
        (SampleSpace::RealLine, Some(AxisRule::Hermite(n))) => {
            let (t, lw) = gauss_hermite(n);
            t.iter()
                .zip(&lw)
                .map(|(t, lw)| Node {
                    x: vec![c + s * t],
                    log_w: lw + t * t + s.ln(),
                })
                .collect()
        }
        (SampleSpace::RealLine, Some(AxisRule::Legendre(n))) => {
            // x = c + s u/(1 − u²)
            let (u, w) = gauss_legendre(n);
            u.iter()
                .zip(&w)
                .map(|(u, w)| {
                    let d = 1.0 - u * u;
                    Node {
                        x: vec![c + s * u / d],
                        log_w: w.ln() + s.ln() + (1.0 + u * u).ln() - 2.0 * d.ln(),
                    }
                })
                .collect()
        }
        (SampleSpace::HalfLine { lower }, Some(AxisRule::Legendre(n))) => {
            // x = a + L(1 + u)/(1 − u); the centre is ignored, the origin is the edge
            let (u, w) = gauss_legendre(n);
            u.iter()
                .zip(&w)
                .map(|(u, w)| Node {
                    x: vec![lower + s * (1.0 + u) / (1.0 - u)],
                    log_w: w.ln() + (2.0 * s).ln() - 2.0 * (1.0 - u).ln(),
                })
                .collect()
        }
        (SampleSpace::Interval { lower, upper }, Some(AxisRule::Legendre(n))) => {
            let (mid, half) = (0.5 * (lower + upper), 0.5 * (upper - lower));
            let (u, w) = gauss_legendre(n);
            u.iter()
                .zip(&w)
                .map(|(u, w)| Node {
                    x: vec![mid + half * u],
                    log_w: w.ln() + half.ln(),
                })
                .collect()
        }
        _ => unreachable!("rules are resolved per axis before node generation"),
    }
}

/// Flattens a product space into its leaf factors.
fn leaf_factors(space: &SampleSpace) -> Vec<&SampleSpace> {
    match space {
        SampleSpace::Product(factors) => factors.iter().flat_map(leaf_factors).collect(),
        leaf => vec![leaf],
    }
}

fn tensor_product(grids: Vec<Vec<Node>>) -> Vec<Node> {
    grids.into_iter().fold(vec![Node { x: Vec::new(), log_w: 0.0 }], |acc, grid| {
        let mut out = Vec::with_capacity(acc.len() * grid.len());
        for a in &acc {
            for b in &grid {
                out.push(Node {
                    x: [a.x.as_slice(), b.x.as_slice()].concat(),
                    log_w: a.log_w + b.log_w,
                });
            }
        }
        out
    })
}

/// Deterministic nodes at full (`halved = false`) or half resolution.
pub(crate) fn quadrature_nodes(spec: &FamilySpec, lam: &[f64], halved: bool) -> Result<Vec<Node>> {
    let mut rules = Vec::new();
    axis_rules(&spec.space, spec.integration, &mut rules)?;
    let refs = spec.reference_at(lam)?;
    let mut rule_iter = rules.into_iter().zip(refs);
    let grids = leaf_factors(&spec.space)
        .into_iter()
        .map(|factor| match factor {
            SampleSpace::Finite { .. } => factor_nodes(factor, None, None),
            _ => {
                let (rule, reference) = rule_iter.next().expect("one rule per continuous axis");
                let rule = if halved { rule.halved() } else { rule };
                factor_nodes(factor, Some(rule), Some(reference))
            }
        })
        .collect();
    Ok(tensor_product(grids))
}

/// Importance-sampling draws: each node carries `ln(1/(n q(x)))`, so the
/// node sum estimates the expectation.
fn monte_carlo_nodes(spec: &FamilySpec, lam: &[f64], n: usize, seed: u64) -> Result<Vec<Node>> {
    if n < 2 {
        return Err(Error::Config("monte-carlo needs n ≥ 2".into()));
    }
    let refs = spec.reference_at(lam)?;
    let factors = leaf_factors(&spec.space);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = Vec::new();
        let mut log_q = 0.0;
        let mut ref_iter = refs.iter();
        for factor in &factors {
            match factor {
                SampleSpace::Finite { points } => {
                    let k = rng.random_range(0..points.len());
                    x.extend_from_slice(&points[k]);
                    log_q -= (points.len() as f64).ln();
                }
                SampleSpace::RealLine => {
                    let &(c, s) = ref_iter.next().expect("reference per axis");
                    let sd = s / std::f64::consts::SQRT_2;
                    let v: f64 = Normal::new(c, sd).map_err(|e| Error::Integration(e.to_string()))?.sample(&mut rng);
                    let z = (v - c) / sd;
                    log_q += -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
                    x.push(v);
                }
                SampleSpace::HalfLine { lower } => {
                    let &(_, s) = ref_iter.next().expect("reference per axis");
                    let e: f64 = Exp::new(1.0 / s).map_err(|e| Error::Integration(e.to_string()))?.sample(&mut rng);
                    log_q += -s.ln() - e / s;
                    x.push(lower + e);
                }
                SampleSpace::Interval { lower, upper } => {
                    ref_iter.next();
                    x.push(rng.random_range(*lower..*upper));
                    log_q -= (upper - lower).ln();
                }
                SampleSpace::Product(_) => unreachable!("flattened"),
            }
        }
        nodes.push(Node {
            x,
            log_w: -log_q - (n as f64).ln(),
        });
    }
    Ok(nodes)
}

/// `Σ w p`, `Σ w p ∂l ∂lᵀ` and `−Σ w p ∂²l` over a node set.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    pub mass: f64,
    pub outer: SymMatrix,
    pub hess: SymMatrix,
}

/// Per-node contribution `(w p, ∂l, ∂²l)`; `None` when the weight
/// underflows to zero.
fn contribution(spec: &FamilySpec, node: &Node, seeds: &[Jet4]) -> Result<Option<(f64, Jet4)>> {
    let l = spec.family.log_density(&node.x, seeds)?;
    let weight = (node.log_w + l.value()).exp();
    if weight == 0.0 {
        return Ok(None);
    }
    if !weight.is_finite() || !l.is_finite() {
        return Err(Error::Integration(format!("non-finite integrand at x = {:?}", node.x)));
    }
    Ok(Some((weight, l)))
}

fn accumulate(spec: &FamilySpec, lam: &[f64], nodes: &[Node]) -> Result<Moments> {
    let m = lam.len();
    let seeds: Vec<Jet4> = Jet4::seed(lam).into_iter().map(|j| j.truncate(2)).collect();
    let mut mass = 0.0;
    let mut outer = SymMatrix::zeros(m);
    let mut hess = SymMatrix::zeros(m);
    for node in nodes {
        let Some((w, l)) = contribution(spec, node, &seeds)? else {
            continue;
        };
        mass += w;
        for i in 0..m {
            for j in 0..=i {
                outer.set(i, j, outer.get(i, j) + w * l.d(&[i]) * l.d(&[j]));
                hess.set(i, j, hess.get(i, j) - w * l.d(&[i, j]));
            }
        }
    }
    Ok(Moments { mass, outer, hess })
}

/// Moments with an error estimate per moment: `(value, est_error)` where
/// the error is the half-resolution gap for quadrature, the standard error
/// for Monte Carlo and zero for exact sums.
pub(crate) struct Estimated {
    pub method: String,
    pub moments: Moments,
    pub outer_error: f64,
    pub hess_error: f64,
    pub mass_error: f64,
}

pub(crate) fn estimate(spec: &FamilySpec, lam: &[f64]) -> Result<Estimated> {
    if lam.len() != spec.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.param_dim(),
            found: lam.len(),
        });
    }
    if lam.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let method = spec.integration.tag();
    if let Integration::MonteCarlo { n, seed } = spec.integration {
        let nodes = monte_carlo_nodes(spec, lam, n, seed)?;
        return monte_carlo_estimate(spec, lam, &nodes, method);
    }
    let full = accumulate(spec, lam, &quadrature_nodes(spec, lam, false)?)?;
    if spec.space.is_finite() {
        return Ok(Estimated {
            method,
            moments: full,
            outer_error: 0.0,
            hess_error: 0.0,
            mass_error: 0.0,
        });
    }
    let half = accumulate(spec, lam, &quadrature_nodes(spec, lam, true)?)?;
    Ok(Estimated {
        method,
        outer_error: full.outer.max_abs_diff(&half.outer),
        hess_error: full.hess.max_abs_diff(&half.hess),
        mass_error: (full.mass - half.mass).abs(),
        moments: full,
    })
}

fn monte_carlo_estimate(spec: &FamilySpec, lam: &[f64], nodes: &[Node], method: String) -> Result<Estimated> {
    let m = lam.len();
    let n = nodes.len() as f64;
    let seeds: Vec<Jet4> = Jet4::seed(lam).into_iter().map(|j| j.truncate(2)).collect();
    // per-draw values are n·(node weight)·f, so the sample variance is direct
    let mut sums = Moments {
        mass: 0.0,
        outer: SymMatrix::zeros(m),
        hess: SymMatrix::zeros(m),
    };
    let mut squares = sums.clone();
    for node in nodes {
        let Some((w, l)) = contribution(spec, node, &seeds)? else {
            continue;
        };
        let v = w * n;
        sums.mass += v;
        squares.mass += v * v;
        for i in 0..m {
            for j in 0..=i {
                let o = v * l.d(&[i]) * l.d(&[j]);
                let h = -v * l.d(&[i, j]);
                sums.outer.set(i, j, sums.outer.get(i, j) + o);
                squares.outer.set(i, j, squares.outer.get(i, j) + o * o);
                sums.hess.set(i, j, sums.hess.get(i, j) + h);
                squares.hess.set(i, j, squares.hess.get(i, j) + h * h);
            }
        }
    }
    let std_err = |sum: f64, sq: f64| {
        let mean = sum / n;
        ((sq / n - mean * mean).max(0.0) / (n - 1.0)).sqrt()
    };
    let max_err = |s: &SymMatrix, q: &SymMatrix| {
        let mut e = 0.0f64;
        for i in 0..m {
            for j in 0..=i {
                e = e.max(std_err(s.get(i, j), q.get(i, j)));
            }
        }
        e
    };
    let outer_error = max_err(&sums.outer, &squares.outer);
    let hess_error = max_err(&sums.hess, &squares.hess);
    let mass_error = std_err(sums.mass, squares.mass);
    Ok(Estimated {
        method,
        moments: Moments {
            mass: sums.mass / n,
            outer: sums.outer.scaled(1.0 / n),
            hess: sums.hess.scaled(1.0 / n),
        },
        outer_error,
        hess_error,
        mass_error,
    })
}

/// `E_λ[f(x)]` for a real function of the sample.
pub fn expectation(spec: &FamilySpec, lam: &[f64], f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let nodes = match spec.integration {
        Integration::MonteCarlo { n, seed } => monte_carlo_nodes(spec, lam, n, seed)?,
        _ => quadrature_nodes(spec, lam, false)?,
    };
    let mut total = 0.0;
    for node in &nodes {
        let l = spec.family.log_density(&node.x, lam)?;
        let w = (node.log_w + l).exp();
        if w > 0.0 {
            total += w * f(&node.x);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::family::Family;

    #[test]
    fn gaussian_mass_and_moments() {
        let spec = FamilySpec::gaussian();
        let lam = [0.7, 1.9];
        assert!((expectation(&spec, &lam, |_| 1.0).unwrap() - 1.0).abs() < 1e-13);
        let var = expectation(&spec, &lam, |x| (x[0] - 0.7).powi(2)).unwrap();
        assert!((var - 1.9 * 1.9).abs() < 1e-12);
    }

    #[test]
    fn exponential_mass_on_half_line() {
        let spec = FamilySpec::exponential_rate();
        for r in [0.2, 1.0, 7.5] {
            let mass = expectation(&spec, &[r], |_| 1.0).unwrap();
            assert!((mass - 1.0).abs() < 1e-12, "r={r}: {mass}");
            let mean = expectation(&spec, &[r], |x| x[0]).unwrap();
            assert!((mean - 1.0 / r).abs() < 1e-11 / r);
        }
    }

    #[test]
    fn legendre_on_real_line_integrates_gaussian() {
        let spec = FamilySpec::gaussian().with_integration(Integration::GaussLegendre { n: 200 });
        let mass = expectation(&spec, &[0.3, 0.8], |_| 1.0).unwrap();
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let spec = FamilySpec::exponential_rate().with_integration(Integration::MonteCarlo { n: 500, seed: 3 });
        let a = estimate(&spec, &[2.0]).unwrap();
        let b = estimate(&spec, &[2.0]).unwrap();
        assert_eq!(a.moments.outer, b.moments.outer);
        // importance proposal equals the density, so every draw has weight 1
        assert!((a.moments.mass - 1.0).abs() < 1e-12);
        assert!(a.outer_error > 0.0);
    }

    #[test]
    fn product_space_nodes() {
        let spec = FamilySpec::new(
            Family::Expression(crate::fisher::family::ExpressionFamily {
                log_density: crate::expr::parse("-x1 - log(2)", &["x1", "x2", "t"]).unwrap(),
                sample_vars: vec!["x1".into(), "x2".into()],
                params: vec!["t".into()],
            }),
            SampleSpace::Product(vec![
                SampleSpace::HalfLine { lower: 0.0 },
                SampleSpace::Finite {
                    points: vec![vec![0.0], vec![1.0]],
                },
            ]),
            Integration::Default,
            None,
        )
        .unwrap();
        let nodes = quadrature_nodes(&spec, &[0.0], false).unwrap();
        assert_eq!(nodes.len(), 256);
        assert!((expectation(&spec, &[0.0], |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_sum_rejects_continuous_space() {
        let spec = FamilySpec::gaussian().with_integration(Integration::ExactSum);
        assert!(estimate(&spec, &[0.0, 1.0]).is_err());
    }
}
