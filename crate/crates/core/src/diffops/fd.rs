//! Central finite differences with one Richardson step, used as an oracle
//! that shares no code with the jet engine.

use super::field::{check_arity, ScalarField};
use super::jet::MAX_ORDER;
use crate::error::{Error, Result};

/// Unit-step central stencils `(offset, weight)` for derivative orders 0..=4.
/// Each has truncation error O(h²).
fn stencil(order: usize) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("order checked by caller"),
    }
}

/// Default base step for a derivative of total order `order`.
///
/// Balances the O(h⁴) post-extrapolation truncation error against the
/// O(ε/hᵏ) rounding error of a k-th difference: h = ε^(1/(k+4)). The
/// per-axis step is this base times `max(1, |yᵢ|)`.
pub fn default_step(order: usize) -> f64 {
    f64::EPSILON.powf(1.0 / (order.max(1) as f64 + 4.0))
}

/// Central-difference estimate of `∂^α f(y)` with Richardson extrapolation
/// over steps `h` and `h/2`; the result is accurate to O(h⁴).
///
/// `step = None` uses [`default_step`] scaled per axis by `max(1, |yᵢ|)`;
/// `Some(h)` uses `h` on every axis.
pub fn fd_partial(f: &dyn ScalarField, y: &[f64], alpha: &[u8], step: Option<f64>) -> Result<f64> {
    check_arity(f.arity(), y.len())?;
    check_arity(y.len(), alpha.len())?;
    let order: usize = alpha.iter().map(|&a| a as usize).sum();
    if order > MAX_ORDER {
        return Err(Error::Order {
            requested: order,
            max: MAX_ORDER,
        });
    }
    let steps: Vec<f64> = match step {
        Some(h) if h > 0.0 && h.is_finite() => vec![h; y.len()],
        Some(h) => return Err(Error::Config(format!("finite-difference step must be positive, got {h}"))),
        None => y.iter().map(|v| default_step(order) * v.abs().max(1.0)).collect(),
    };
    let coarse = central_difference(f, y, alpha, &steps)?;
    let half: Vec<f64> = steps.iter().map(|h| h / 2.0).collect();
    let fine = central_difference(f, y, alpha, &half)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Step ratio and table depth of [`fd_partial_adaptive`].
const RIDDERS_RATIO: f64 = 1.4;
const RIDDERS_DEPTH: usize = 10;

/// `∂^α f(y)` from a Richardson table over geometrically shrinking steps
/// (Ridders' scheme), returning `(estimate, error estimate)`.
///
/// Central stencils expand in even powers of the step, so each table
/// column removes one more power of `h²`; the entry with the smallest
/// column-to-column change is returned. Starts at `h0` on every axis,
/// scaled by `max(1, |yᵢ|)`, so the stencil reaches `2 h0` from `y`.
pub fn fd_partial_adaptive(f: &dyn ScalarField, y: &[f64], alpha: &[u8], h0: f64) -> Result<(f64, f64)> {
    check_arity(f.arity(), y.len())?;
    check_arity(y.len(), alpha.len())?;
    let order: usize = alpha.iter().map(|&a| a as usize).sum();
    if order > MAX_ORDER {
        return Err(Error::Order {
            requested: order,
            max: MAX_ORDER,
        });
    }
    if !(h0 > 0.0 && h0.is_finite()) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h0}")));
    }
    let base: Vec<f64> = y.iter().map(|v| h0 * v.abs().max(1.0)).collect();
    let ratio2 = RIDDERS_RATIO * RIDDERS_RATIO;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(RIDDERS_DEPTH);
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..RIDDERS_DEPTH {
        let shrink = RIDDERS_RATIO.powi(i as i32);
        let steps: Vec<f64> = base.iter().map(|h| h / shrink).collect();
        let mut row = vec![central_difference(f, y, alpha, &steps)?];
        let mut fac = ratio2;
        for j in 1..=i {
            let next = (row[j - 1] * fac - table[i - 1][j - 1]) / (fac - 1.0);
            let err = (next - row[j - 1]).abs().max((next - table[i - 1][j - 1]).abs());
            if err <= best.1 {
                best = (next, err);
            }
            row.push(next);
            fac *= ratio2;
        }
        if i == 0 {
            best = (row[0], f64::INFINITY);
        }
        table.push(row);
    }
    Ok(best)
}

fn central_difference(f: &dyn ScalarField, y: &[f64], alpha: &[u8], steps: &[f64]) -> Result<f64> {
    let axes: Vec<usize> = (0..y.len()).filter(|&i| alpha[i] > 0).collect();
    let stencils: Vec<&[(i32, f64)]> = axes.iter().map(|&i| stencil(alpha[i] as usize)).collect();
    let mut scale = 1.0;
    for &i in &axes {
        scale *= steps[i].powi(alpha[i] as i32);
    }

    let mut total = 0.0;
    let mut cursor = vec![0usize; axes.len()];
    let mut point = y.to_vec();
    loop {
        let mut weight = 1.0;
        point.copy_from_slice(y);
        for (slot, &axis) in axes.iter().enumerate() {
            let (offset, w) = stencils[slot][cursor[slot]];
            weight *= w;
            point[axis] = y[axis] + offset as f64 * steps[axis];
        }
        total += weight * f.eval_real(&point)?;

        // odometer over the tensor-product stencil
        let mut slot = 0;
        loop {
            if slot == axes.len() {
                return Ok(total / scale);
            }
            cursor[slot] += 1;
            if cursor[slot] < stencils[slot].len() {
                break;
            }
            cursor[slot] = 0;
            slot += 1;
        }
    }
}
