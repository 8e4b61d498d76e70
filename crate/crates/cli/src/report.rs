//! `report`: every pointwise invariant of a potential, or the Fisher
//! metric of a family with its kernel diagnostics.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use transhess::diffops::ScalarField;
use transhess::fisher::{
    fisher_pair, involutivity_residual, leafwise_constancy_residual, psd_and_kernel, FamilySpec, FoliationOptions,
};
use transhess::hessian::{full_report, HessianReport, ReportOptions};
use transhess::tensors::SymMatrix;

use crate::config::{Format, Input, RunConfig, Tolerances};
use crate::output::{indexed, num, Table};
use crate::Failure;

pub fn cmd_report(run: &RunConfig) -> Result<u8, Failure> {
    let format = run.format.unwrap_or(Format::Json);
    match &run.input {
        Input::Potential { phi, dim, .. } => {
            let table = potential_table(phi, *dim, run.require_points()?, &run.tol)?;
            table.write(format, run.out.as_deref())?;
        }
        Input::Family(spec) => {
            let table = family_table(spec, run.require_points()?, &run.tol)?;
            table.write(format, run.out.as_deref())?;
        }
        Input::None => return Err(Failure::usage("report needs --phi or --family")),
    }
    Ok(0)
}

/// Evaluates `f` on every point in parallel; results keep input order and
/// the first error in that order wins.
pub fn par_points<T: Send>(
    points: &[Vec<f64>],
    f: impl Fn(&[f64]) -> transhess::Result<T> + Sync,
) -> Result<Vec<T>, Failure> {
    let results: Vec<_> = points.par_iter().map(|y| f(y).map_err(|e| (y, e))).collect();
    results
        .into_iter()
        .map(|r| r.map_err(|(y, e)| Failure::usage(format!("at {y:?}: {e}"))))
        .collect()
}

fn upper_entries(g: &SymMatrix) -> Vec<String> {
    let n = g.dim();
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| num(g.get(i, j))).collect()
}

fn upper_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n)
        .flat_map(|i| (i..=n).map(move |j| format!("{prefix}{i}{j}")))
        .collect()
}

const POTENTIAL_SCALARS: [&str; 14] = [
    "c_fit",
    "c_residual",
    "einstein_lambda",
    "einstein_residual",
    "kahler_R_residual",
    "kahler_ricci_residual",
    "holo_sectional",
    "q_route_residual",
    "q_symmetry_residual",
    "alpha_route_residual",
    "beta_route_residual",
    "codazzi_residual",
    "max_abs_Q",
    "max_abs_R",
];

pub fn potential_table(
    phi: &Arc<dyn ScalarField>,
    dim: usize,
    points: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<Table<HessianReport>, Failure> {
    let opts = ReportOptions {
        route_rel: tol.route,
        ..ReportOptions::default()
    };
    let reports = par_points(points, |y| full_report(Arc::clone(phi), y, &opts))?;
    let mut header = indexed("y", dim);
    header.extend(POTENTIAL_SCALARS.iter().map(|s| s.to_string()));
    header.push("flags".into());
    let mut table = Table::new(header);
    for r in reports {
        let mut row: Vec<String> = r.y.iter().map(|&v| num(v)).collect();
        row.extend(
            [
                r.c_fit,
                r.c_residual,
                r.einstein_lambda,
                r.einstein_residual,
                r.kahler_r_residual,
                r.kahler_ricci_residual,
                r.holo_sectional,
                r.q_route_residual,
                r.q_symmetry_residual,
                r.alpha_route_residual,
                r.beta_route_residual,
                r.codazzi_residual,
                r.q.max_abs(),
                r.r.max_abs(),
            ]
            .map(num),
        );
        row.push(r.flags.join("; "));
        table.push(r, row);
    }
    Ok(table)
}

/// One parameter point of a family.
#[derive(Debug, Clone, Serialize)]
pub struct FisherRow {
    pub lam: Vec<f64>,
    /// `E[∂l ∂lᵀ]`
    pub g: SymMatrix,
    /// `−E[∂²l]`
    pub g_hess: SymMatrix,
    pub method: String,
    pub est_error: f64,
    /// `‖g − g_hess‖∞`
    pub identity_gap: f64,
    pub rank: usize,
    pub kernel: Vec<Vec<f64>>,
    pub psd_margin: f64,
    pub mass: f64,
    /// Present when the kernel is non-trivial.
    pub involutivity_residual: Option<f64>,
    pub leafwise_residual: Option<f64>,
    /// Why the foliation checks could not run (e.g. rank drift).
    pub foliation_error: Option<String>,
}

pub fn fisher_row(spec: &FamilySpec, lam: &[f64], tol: &Tolerances) -> transhess::Result<FisherRow> {
    let (outer, hess) = fisher_pair(spec, lam)?;
    let (rank, kernel) = psd_and_kernel(&outer, tol.kernel)?;
    let opts = FoliationOptions {
        kernel_tol: tol.kernel,
        step: tol.fd_step,
    };
    let (mut inv, mut leaf, mut foliation_error) = (None, None, None);
    if rank < lam.len() {
        match involutivity_residual(spec, lam, opts).and_then(|i| Ok((i, leafwise_constancy_residual(spec, lam, opts)?))) {
            Ok((i, l)) => {
                inv = Some(i);
                leaf = Some(l);
            }
            Err(e) => foliation_error = Some(e.to_string()),
        }
    }
    Ok(FisherRow {
        lam: lam.to_vec(),
        identity_gap: outer.g.max_abs_diff(&hess.g),
        est_error: outer.est_error.max(hess.est_error),
        g_hess: hess.g,
        rank,
        kernel,
        psd_margin: outer.psd_margin,
        mass: outer.mass,
        method: outer.method,
        g: outer.g,
        involutivity_residual: inv,
        leafwise_residual: leaf,
        foliation_error,
    })
}

fn family_table(spec: &FamilySpec, points: &[Vec<f64>], tol: &Tolerances) -> Result<Table<FisherRow>, Failure> {
    let m = spec.param_dim();
    let rows = par_points(points, |lam| fisher_row(spec, lam, tol))?;
    let mut header = indexed("lam", m);
    header.extend(
        [
            "method",
            "est_error",
            "identity_gap",
            "rank",
            "psd_margin",
            "mass",
            "involutivity_residual",
            "leafwise_residual",
        ]
        .map(String::from),
    );
    header.extend(upper_names("g", m));
    header.push("foliation_error".into());
    let mut table = Table::new(header);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in rows {
        let mut row: Vec<String> = r.lam.iter().map(|&v| num(v)).collect();
        row.push(r.method.clone());
        row.extend([r.est_error, r.identity_gap].map(num));
        row.push(r.rank.to_string());
        row.extend([r.psd_margin, r.mass].map(num));
        row.push(opt(r.involutivity_residual));
        row.push(opt(r.leafwise_residual));
        row.extend(upper_entries(&r.g));
        row.push(r.foliation_error.clone().unwrap_or_default());
        table.push(r, row);
    }
    Ok(table)
}
