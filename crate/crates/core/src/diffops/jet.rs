use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};

/// Highest derivative order carried by a [`Jet4`].
pub const MAX_ORDER: usize = 4;

/// Index bookkeeping shared by every jet over the same number of variables.
///
/// Multi-indices are enumerated by total degree, then lexicographically with
/// the first variable's exponent descending. Products of truncated
/// polynomials are precomputed as `(lhs, rhs, target)` triples sorted by the
/// degree of the target.
pub(crate) struct Layout {
    dim: usize,
    indices: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    /// `count_upto[d]` = number of multi-indices of degree ≤ d.
    count_upto: [usize; MAX_ORDER + 1],
    products: Vec<(u32, u32, u32)>,
    /// `products_upto[d]` = number of products whose target has degree ≤ d.
    products_upto: [usize; MAX_ORDER + 1],
    /// α! for each multi-index.
    factorial: Vec<f64>,
}

fn layout_cache() -> &'static RwLock<HashMap<usize, Arc<Layout>>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<Layout>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

impl Layout {
    pub(crate) fn for_dim(dim: usize) -> Arc<Layout> {
        if let Some(layout) = layout_cache().read().expect("layout cache poisoned").get(&dim) {
            return Arc::clone(layout);
        }
        let layout = Arc::new(Layout::build(dim));
        layout_cache()
            .write()
            .expect("layout cache poisoned")
            .entry(dim)
            .or_insert(layout)
            .clone()
    }

    fn build(dim: usize) -> Layout {
        let mut indices = Vec::new();
        let mut count_upto = [0; MAX_ORDER + 1];
        for degree in 0..=MAX_ORDER {
            let mut current = vec![0u8; dim];
            enumerate_degree(dim, 0, degree, &mut current, &mut indices);
            count_upto[degree] = indices.len();
        }
        let lookup: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(k, alpha)| (alpha.clone(), k))
            .collect();
        let degree_of = |k: usize| count_upto.iter().position(|&end| k < end).unwrap();

        let mut products = Vec::new();
        for (a, alpha) in indices.iter().enumerate() {
            let da = degree_of(a);
            for (b, beta) in indices.iter().enumerate().take(count_upto[MAX_ORDER - da]) {
                let gamma: Vec<u8> = alpha.iter().zip(beta).map(|(x, y)| x + y).collect();
                products.push((a as u32, b as u32, lookup[&gamma] as u32));
            }
        }
        products.sort_by_key(|&(_, _, c)| c);
        let mut products_upto = [0; MAX_ORDER + 1];
        for (degree, slot) in products_upto.iter_mut().enumerate() {
            *slot = products
                .iter()
                .take_while(|&&(_, _, c)| (c as usize) < count_upto[degree])
                .count();
        }
        let factorial = indices
            .iter()
            .map(|alpha| alpha.iter().map(|&e| factorial(e as usize)).product())
            .collect();
        Layout {
            dim,
            indices,
            lookup,
            count_upto,
            products,
            products_upto,
            factorial,
        }
    }

    fn len(&self) -> usize {
        self.indices.len()
    }

    fn position(&self, alpha: &[u8]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }
}

fn enumerate_degree(dim: usize, var: usize, remaining: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if var + 1 == dim {
        current[var] = remaining as u8;
        out.push(current.clone());
        current[var] = 0;
        return;
    }
    if dim == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e as u8;
        enumerate_degree(dim, var + 1, remaining - e, current, out);
    }
    current[var] = 0;
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Converts a list of variable positions (e.g. `[0, 0, 1]` for ∂³/∂y₁²∂y₂)
/// into an exponent multi-index.
pub fn multi_index(dim: usize, vars: &[usize]) -> Vec<u8> {
    let mut alpha = vec![0u8; dim];
    for &v in vars {
        alpha[v] += 1;
    }
    alpha
}

/// Truncated multivariate Taylor expansion of a scalar function, carrying
/// every mixed partial derivative up to order four.
///
/// Internally coefficients are stored as Taylor coefficients `∂^α f / α!`;
/// the public accessors return raw derivative values. `order` records how
/// many orders are valid: differentiating a jet with [`Jet4::differentiate`]
/// drops one order, and arithmetic keeps the minimum of its operands.
#[derive(Clone)]
pub struct Jet4 {
    layout: Arc<Layout>,
    order: u8,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (k, alpha) in self.layout.indices[..self.layout.count_upto[self.order as usize]]
            .iter()
            .enumerate()
        {
            map.entry(alpha, &(self.coeffs[k] * self.layout.factorial[k]));
        }
        map.finish()
    }
}

impl PartialEq for Jet4 {
    fn eq(&self, other: &Self) -> bool {
        self.layout.dim == other.layout.dim && self.order == other.order && self.coeffs == other.coeffs
    }
}

impl Jet4 {
    pub fn constant(dim: usize, value: f64) -> Self {
        let layout = Layout::for_dim(dim);
        let mut coeffs = vec![0.0; layout.len()];
        coeffs[0] = value;
        Jet4 {
            layout,
            order: MAX_ORDER as u8,
            coeffs,
        }
    }

    /// The coordinate function `y_var` expanded at `value`.
    pub fn variable(dim: usize, var: usize, value: f64) -> Self {
        assert!(var < dim, "variable {var} out of range for dimension {dim}");
        let mut jet = Jet4::constant(dim, value);
        let mut alpha = vec![0u8; dim];
        alpha[var] = 1;
        let k = jet.layout.position(&alpha).unwrap();
        jet.coeffs[k] = 1.0;
        jet
    }

    /// One independent variable per coordinate of `point`.
    pub fn seed(point: &[f64]) -> Vec<Jet4> {
        (0..point.len())
            .map(|i| Jet4::variable(point.len(), i, point[i]))
            .collect()
    }

    pub fn constant_like(&self, value: f64) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet4 {
            layout: Arc::clone(&self.layout),
            order: MAX_ORDER as u8,
            coeffs,
        }
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    /// Highest derivative order that is valid in this jet.
    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Raw partial derivative `∂^α f` for an exponent multi-index `alpha`.
    pub fn derivative(&self, alpha: &[u8]) -> Result<f64> {
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: alpha.len(),
            });
        }
        let total: usize = alpha.iter().map(|&e| e as usize).sum();
        if total > self.order() {
            return Err(Error::Order {
                requested: total,
                max: self.order(),
            });
        }
        let k = self.layout.position(alpha).expect("degree checked above");
        Ok(self.coeffs[k] * self.layout.factorial[k])
    }

    /// Raw partial derivative along a list of variable positions, e.g.
    /// `d(&[0, 1])` is ∂²f/∂y₁∂y₂.
    ///
    /// Panics when the list is longer than the jet's valid order.
    pub fn d(&self, vars: &[usize]) -> f64 {
        assert!(
            vars.len() <= self.order(),
            "derivative of order {} requested from a jet of order {}",
            vars.len(),
            self.order()
        );
        let alpha = multi_index(self.dim(), vars);
        let k = self.layout.position(&alpha).unwrap();
        self.coeffs[k] * self.layout.factorial[k]
    }

    /// Jet of ∂f/∂y_var; valid to one order less than `self`.
    pub fn differentiate(&self, var: usize) -> Jet4 {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let layout = &self.layout;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let new_order = self.order as usize - 1;
        for (k, alpha) in layout.indices[..layout.count_upto[new_order]].iter().enumerate() {
            let mut shifted = alpha.clone();
            shifted[var] += 1;
            let src = layout.position(&shifted).unwrap();
            coeffs[k] = (alpha[var] as f64 + 1.0) * self.coeffs[src];
        }
        Jet4 {
            layout: Arc::clone(&self.layout),
            order: new_order as u8,
            coeffs,
        }
    }

    /// Restricts the jet to a lower order (coefficients above it are zeroed).
    pub fn truncate(&self, order: usize) -> Jet4 {
        let order = order.min(self.order());
        let mut out = self.clone();
        out.order = order as u8;
        for c in &mut out.coeffs[self.layout.count_upto[order]..] {
            *c = 0.0;
        }
        out
    }

    fn check_compatible(&self, other: &Jet4) {
        assert_eq!(
            self.layout.dim, other.layout.dim,
            "jets over different variable counts cannot be combined"
        );
    }

    fn product(&self, other: &Jet4) -> Jet4 {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(i, j, k) in &self.layout.products[..self.layout.products_upto[order as usize]] {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet4 {
            layout: Arc::clone(&self.layout),
            order,
            coeffs,
        }
    }

    fn zip_with(&self, other: &Jet4, op: impl Fn(f64, f64) -> f64) -> Jet4 {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let end = self.layout.count_upto[order as usize];
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for k in 0..end {
            coeffs[k] = op(self.coeffs[k], other.coeffs[k]);
        }
        Jet4 {
            layout: Arc::clone(&self.layout),
            order,
            coeffs,
        }
    }

    /// Composes a univariate function with this jet given the function's
    /// derivatives `derivs[k] = F^(k)(value)` for `k = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet4 {
        let order = self.order();
        assert!(derivs.len() > order, "need {} derivatives for composition", order + 1);
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = self.constant_like(derivs[0]);
        out.order = self.order;
        let mut power = delta.clone();
        let mut k_factorial = 1.0;
        for (k, &dk) in derivs.iter().enumerate().take(order + 1).skip(1) {
            k_factorial *= k as f64;
            if k > 1 {
                power = power.product(&delta);
            }
            let scale = dk / k_factorial;
            if scale != 0.0 {
                for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                    *o += scale * p;
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Jet4 {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= factor;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

impl Add for Jet4 {
    type Output = Jet4;
    fn add(self, rhs: Jet4) -> Jet4 {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for Jet4 {
    type Output = Jet4;
    fn sub(self, rhs: Jet4) -> Jet4 {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Mul for Jet4 {
    type Output = Jet4;
    fn mul(self, rhs: Jet4) -> Jet4 {
        self.product(&rhs)
    }
}

impl Neg for Jet4 {
    type Output = Jet4;
    fn neg(mut self) -> Jet4 {
        for c in &mut self.coeffs {
            *c = -*c;
        }
        self
    }
}

impl<'a> Add<&'a Jet4> for &'a Jet4 {
    type Output = Jet4;
    fn add(self, rhs: &Jet4) -> Jet4 {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<'a> Sub<&'a Jet4> for &'a Jet4 {
    type Output = Jet4;
    fn sub(self, rhs: &Jet4) -> Jet4 {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<'a> Mul<&'a Jet4> for &'a Jet4 {
    type Output = Jet4;
    fn mul(self, rhs: &Jet4) -> Jet4 {
        self.product(rhs)
    }
}
