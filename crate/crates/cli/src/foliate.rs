//! `foliate`: one RK4 polyline per seed along the kernel of `g_F`.

use transhess::fisher::{integrate_leaf, FoliationOptions, LeafOptions};

use crate::config::{Format, Input, RunConfig};
use crate::output::{indexed, num, write_csv, write_json};
use crate::report::par_points;
use crate::Failure;

pub fn cmd_foliate(run: &RunConfig, step: f64, steps: usize, direction: usize) -> Result<u8, Failure> {
    let Input::Family(spec) = &run.input else {
        return Err(Failure::usage("foliate needs --family"));
    };
    if !(step.is_finite() && step > 0.0) {
        return Err(Failure::usage("--step must be positive"));
    }
    let opts = LeafOptions {
        step,
        steps,
        direction,
        foliation: FoliationOptions {
            kernel_tol: run.tol.kernel,
            step: run.tol.fd_step,
        },
    };
    let curves = par_points(run.require_points()?, |seed| integrate_leaf(spec, seed, opts))?;

    match run.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(&curves, run.out.as_deref())?,
        Format::Csv => {
            let m = spec.param_dim();
            let mut header = vec!["curve".to_string(), "index".into(), "s".into()];
            header.extend(indexed("lam", m));
            header.extend(["rank", "leafwise_residual", "status"].map(String::from));
            let mut records = Vec::new();
            for (c, curve) in curves.iter().enumerate() {
                for (i, p) in curve.points.iter().enumerate() {
                    let mut row = vec![c.to_string(), i.to_string(), num(p.s)];
                    row.extend(p.lam.iter().map(|&v| num(v)));
                    row.extend([p.rank.to_string(), num(p.leafwise_residual), "ok".into()]);
                    records.push(row);
                }
                // An aborted curve ends with a row carrying only the reason.
                if let Some(reason) = &curve.aborted {
                    let mut row = vec![c.to_string(); 1];
                    row.resize(header.len() - 1, String::new());
                    row.push(format!("aborted: {reason}"));
                    records.push(row);
                }
            }
            write_csv(&header, &records, run.out.as_deref())?;
        }
    }
    Ok(0)
}
