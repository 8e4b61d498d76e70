use serde::{Serialize, Serializer};
use serde_json::Value;

use super::sym::SymMatrix;
use crate::error::{Error, Result};

/// Dense rank-`R` tensor over a `dim`-dimensional index space.
///
/// Entries are addressed by `[usize; R]`, last index fastest. The meaning of
/// each slot (upper or lower) is fixed by the producer; e.g. Christoffel
/// symbols are stored as `[i, j, k] = Γ^i_{jk}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<const R: usize> {
    dim: usize,
    data: Vec<f64>,
}

pub type Tensor3 = DenseTensor<3>;
pub type Tensor4 = DenseTensor<4>;

impl<const R: usize> DenseTensor<R> {
    pub fn zeros(dim: usize) -> Self {
        DenseTensor {
            dim,
            data: vec![0.0; dim.pow(R as u32)],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut([usize; R]) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for flat in 0..t.data.len() {
            t.data[flat] = f(t.unflatten(flat));
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn flatten(&self, idx: [usize; R]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    #[inline]
    fn unflatten(&self, mut flat: usize) -> [usize; R] {
        let mut idx = [0; R];
        for slot in (0..R).rev() {
            idx[slot] = flat % self.dim;
            flat /= self.dim;
        }
        idx
    }

    #[inline]
    pub fn get(&self, idx: [usize; R]) -> f64 {
        self.data[self.flatten(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: [usize; R], value: f64) {
        let k = self.flatten(idx);
        self.data[k] = value;
    }

    #[inline]
    pub fn add_at(&mut self, idx: [usize; R], value: f64) {
        let k = self.flatten(idx);
        self.data[k] += value;
    }

    pub fn indices(&self) -> impl Iterator<Item = [usize; R]> + '_ {
        (0..self.data.len()).map(|flat| self.unflatten(flat))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DenseTensor {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        DenseTensor {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// Sum of products of matching entries (Euclidean inner product of the
    /// component arrays).
    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Reorders slots: `out[idx] = self[idx permuted by perm]`, i.e. the
    /// entry at output position `idx` is read from input position
    /// `[idx[perm[0]], …, idx[perm[R-1]]]`.
    pub fn permuted(&self, perm: [usize; R]) -> Self {
        Self::from_fn(self.dim, |idx| {
            let mut src = [0; R];
            for slot in 0..R {
                src[slot] = idx[perm[slot]];
            }
            self.get(src)
        })
    }

    /// Contracts `matrix` (symmetric) against one slot:
    /// `out[…a…] = Σ_b m_{ab} T[…b…]`. With `g⁻¹` this raises the slot, with
    /// `g` it lowers it.
    pub fn contract_slot(&self, matrix: &SymMatrix, slot: usize) -> Result<Self> {
        if matrix.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: matrix.dim(),
            });
        }
        if slot >= R {
            return Err(Error::Config(format!("slot {slot} out of range for a rank-{R} tensor")));
        }
        Ok(Self::from_fn(self.dim, |idx| {
            let mut src = idx;
            (0..self.dim)
                .map(|b| {
                    src[slot] = b;
                    matrix.get(idx[slot], b) * self.get(src)
                })
                .sum()
        }))
    }

    fn to_value(&self, prefix: &mut Vec<usize>) -> Value {
        if prefix.len() + 1 == R {
            let row = (0..self.dim)
                .map(|k| {
                    let mut idx = [0; R];
                    idx[..R - 1].copy_from_slice(prefix);
                    idx[R - 1] = k;
                    Value::from(self.get(idx))
                })
                .collect();
            return Value::Array(row);
        }
        Value::Array(
            (0..self.dim)
                .map(|k| {
                    prefix.push(k);
                    let v = self.to_value(prefix);
                    prefix.pop();
                    v
                })
                .collect(),
        )
    }
}

/// Raises one slot with `g⁻¹`.
pub fn raise_index<const R: usize>(t: &DenseTensor<R>, g_inv: &SymMatrix, slot: usize) -> Result<DenseTensor<R>> {
    t.contract_slot(g_inv, slot)
}

/// Lowers one slot with `g`.
pub fn lower_index<const R: usize>(t: &DenseTensor<R>, g: &SymMatrix, slot: usize) -> Result<DenseTensor<R>> {
    t.contract_slot(g, slot)
}

impl<const R: usize> Serialize for DenseTensor<R> {
    /// Nested arrays, outermost index first.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value(&mut Vec::with_capacity(R)).serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raise_with_identity_is_identity() {
        let t = Tensor3::from_fn(2, |[i, j, k]| (i * 4 + j * 2 + k) as f64);
        let raised = raise_index(&t, &SymMatrix::identity(2), 1).unwrap();
        assert_eq!(raised, t);
    }

    #[test]
    fn one_dimensional_raise() {
        // γ₁₁₁ = −1/y³ with g⁻¹ = y² gives γ¹₁₁ = −1/y
        let y: f64 = 2.0;
        let gamma = Tensor3::from_fn(1, |_| -1.0 / y.powi(3));
        let g_inv = SymMatrix::diagonal(&[y * y]);
        let raised = raise_index(&gamma, &g_inv, 0).unwrap();
        assert!((raised.get([0, 0, 0]) + 0.5).abs() < 1e-16);
    }

    #[test]
    fn dimension_mismatch() {
        let t = Tensor4::zeros(2);
        assert!(matches!(
            raise_index(&t, &SymMatrix::identity(3), 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn permutation_swaps_slots() {
        let t = Tensor3::from_fn(2, |[i, j, k]| (i * 100 + j * 10 + k) as f64);
        let p = t.permuted([1, 0, 2]);
        assert_eq!(p.get([0, 1, 1]), t.get([1, 0, 1]));
    }

    #[test]
    fn serializes_nested() {
        let t = Tensor3::from_fn(2, |[i, j, k]| (i * 4 + j * 2 + k) as f64);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, "[[[0.0,1.0],[2.0,3.0]],[[4.0,5.0],[6.0,7.0]]]");
    }
}
