//! `natgrad`: descent trace of an objective under the Fisher pseudo-inverse,
//! or under the identity metric when no family is given.

use transhess::expr::{default_vars, parse};
use transhess::fisher::natgrad;

use crate::config::{Format, Input, RunConfig};
use crate::output::{indexed, num, write_csv, write_json};
use crate::Failure;

pub fn cmd_natgrad(run: &RunConfig, objective: &str, eta: f64, steps: usize) -> Result<u8, Failure> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(Failure::usage("--eta must be a non-negative number"));
    }
    let start = match run.points.as_slice() {
        [p] => p.clone(),
        [] => return Err(Failure::usage("natgrad needs one start point (--points)")),
        _ => return Err(Failure::usage("natgrad takes exactly one start point")),
    };
    let family = match &run.input {
        Input::Family(spec) => Some(spec.as_ref()),
        Input::None => None,
        Input::Potential { .. } => return Err(Failure::usage("natgrad takes --family, not --phi")),
    };
    let m = start.len();
    let ast = parse(objective, &default_vars("t", m))?;
    let trace = natgrad(family, &ast, &start, eta, steps)?;

    match run.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(&trace, run.out.as_deref())?,
        Format::Csv => {
            let mut header = vec!["iter".to_string()];
            header.extend(indexed("t", m));
            header.extend(["objective", "grad_norm", "kernel_dim"].map(String::from));
            let records: Vec<Vec<String>> = trace
                .iter()
                .map(|s| {
                    let mut row = vec![s.iter.to_string()];
                    row.extend(s.lam.iter().map(|&v| num(v)));
                    row.extend([num(s.objective), num(s.grad_norm), s.kernel_dim.to_string()]);
                    row
                })
                .collect();
            write_csv(&header, &records, run.out.as_deref())?;
        }
    }
    Ok(0)
}
