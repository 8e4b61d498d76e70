//! Run configuration: a JSON or TOML file merged under command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use transhess::diffops::ScalarField;
use transhess::expr::{default_vars, parse, ExprField};
use transhess::fisher::{load_family, FamilySpec};

use crate::{CommonArgs, Failure};

/// One grid axis: `count` evenly spaced values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// The on-disk form; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    phi: Option<String>,
    dim: Option<usize>,
    family: Option<PathBuf>,
    points: Option<Vec<Vec<f64>>>,
    grid: Option<Vec<GridAxis>>,
    #[serde(default)]
    tol: BTreeMap<String, f64>,
    out: Option<PathBuf>,
    format: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn parse(s: &str) -> Result<Self, Failure> {
        match s {
            "json" | "ndjson" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Failure::usage(format!("unknown format `{other}` (expected json or csv)"))),
        }
    }
}

/// Named tolerances; every suite threshold can be overridden with
/// `--tol name=value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative gap between two routes to the same quantity.
    pub route: f64,
    /// Symmetries of `Q`, relative to `max(1, ‖Q‖, ‖g‖²)`.
    pub symmetry: f64,
    /// `R` from `Q` against the Levi-Civita curvature.
    pub riemann: f64,
    /// Curvature of the dual of the flat connection.
    pub dual: f64,
    /// Kähler curvature, Ricci and holomorphic sectional bridges (absolute).
    pub kahler: f64,
    /// Relative slack below zero on the smallest Fisher eigenvalue.
    pub psd: f64,
    /// Fisher metric of a natural family against `Hess ψ`.
    pub bridge: f64,
    /// Kernel direction errors and both foliation residuals.
    pub foliation: f64,
    /// Relative eigenvalue threshold deciding the kernel.
    pub kernel: f64,
    /// Finite-difference step of the foliation checks.
    pub fd_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            route: 1e-9,
            symmetry: 1e-10,
            riemann: 1e-9,
            dual: 1e-9,
            kahler: 1e-8,
            psd: 1e-10,
            bridge: 1e-9,
            foliation: 1e-9,
            kernel: 1e-9,
            fd_step: 1e-3,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 10] = [
        "route", "symmetry", "riemann", "dual", "kahler", "psd", "bridge", "foliation", "kernel", "fd_step",
    ];

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), Failure> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Failure::usage(format!("tolerance `{name}` must be positive, got {value}")));
        }
        let slot = match name {
            "route" => &mut self.route,
            "symmetry" => &mut self.symmetry,
            "riemann" => &mut self.riemann,
            "dual" => &mut self.dual,
            "kahler" => &mut self.kahler,
            "psd" => &mut self.psd,
            "bridge" => &mut self.bridge,
            "foliation" => &mut self.foliation,
            "kernel" => &mut self.kernel,
            "fd_step" => &mut self.fd_step,
            other => {
                return Err(Failure::usage(format!(
                    "unknown tolerance `{other}` (known: {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

/// Where the input comes from.
#[derive(Clone)]
pub enum Input {
    Potential { phi: Arc<dyn ScalarField>, dim: usize },
    Family(Box<FamilySpec>),
    None,
}

/// A fully resolved run.
#[derive(Clone)]
pub struct RunConfig {
    pub input: Input,
    /// Empty when neither points nor a grid were given.
    pub points: Vec<Vec<f64>>,
    pub tol: Tolerances,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: u64,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, Failure> {
        let (file, base) = match &args.config {
            Some(path) => (read_run_file(path)?, path.parent().map(Path::to_path_buf)),
            None => (RunFile::default(), None),
        };
        // Paths inside a config file are relative to the file.
        let rebase = |p: PathBuf| match &base {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        };

        let points = match (&args.points, &args.grid) {
            (Some(text), _) => parse_points(text)?,
            (None, Some(text)) => expand_grid(&parse_grid(text)?)?,
            (None, None) => match (file.points, file.grid) {
                (Some(_), Some(_)) => return Err(Failure::usage("config sets both `points` and `grid`")),
                (Some(p), None) => p,
                (None, Some(axes)) => expand_grid(&axes)?,
                (None, None) => Vec::new(),
            },
        };

        let mut tol = Tolerances::default();
        for (name, value) in &file.tol {
            tol.set(name, *value)?;
        }
        for item in &args.tol {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("--tol expects name=value, got `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("--tol {name}: `{value}` is not a number")))?;
            tol.set(name.trim(), value)?;
        }

        let phi = args.phi.clone().or(file.phi);
        let family = args.family.clone().or(file.family.map(rebase));
        let dim = args.dim.or(file.dim);
        let input = match (phi, family) {
            (Some(_), Some(_)) => return Err(Failure::usage("give either a potential or a family, not both")),
            (Some(text), None) => {
                let dim = dim
                    .or_else(|| points.first().map(Vec::len))
                    .ok_or_else(|| Failure::usage("--dim is required when no points are given"))?;
                if dim == 0 {
                    return Err(Failure::usage("--dim must be at least 1"));
                }
                let ast = parse(&text, &default_vars("y", dim))?;
                Input::Potential {
                    phi: Arc::new(ExprField::new(ast)),
                    dim,
                }
            }
            (None, Some(path)) => Input::Family(Box::new(load_family(&path)?)),
            (None, None) => Input::None,
        };

        let expected = match &input {
            Input::Potential { dim, .. } => Some(*dim),
            Input::Family(spec) => Some(spec.param_dim()),
            Input::None => None,
        };
        if let Some(d) = expected {
            if let Some(bad) = points.iter().find(|p| p.len() != d) {
                return Err(Failure::usage(format!(
                    "point {bad:?} has {} coordinates, expected {d}",
                    bad.len()
                )));
            }
        }

        let format = match args.format.as_deref().or(file.format.as_deref()) {
            Some(s) => Some(Format::parse(s)?),
            None => None,
        };
        Ok(RunConfig {
            input,
            points,
            tol,
            out: args.out.clone().or(file.out.map(rebase)),
            format,
            seed: args.seed.or(file.seed).unwrap_or(0),
        })
    }

    pub fn require_points(&self) -> Result<&[Vec<f64>], Failure> {
        if self.points.is_empty() {
            Err(Failure::usage("no points: pass --points or --grid"))
        } else {
            Ok(&self.points)
        }
    }
}

fn read_run_file(path: &Path) -> Result<RunFile, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let parsed = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| e.to_string()),
        _ => serde_json::from_str(&text).map_err(|e| e.to_string()),
    };
    parsed.map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn parse_number(s: &str) -> Result<f64, Failure> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("`{}` is not a number", s.trim())))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::usage(format!("`{}` is not finite", s.trim())))
    }
}

/// `"1,2;3,4"` → `[[1, 2], [3, 4]]`.
pub fn parse_points(text: &str) -> Result<Vec<Vec<f64>>, Failure> {
    let points: Vec<Vec<f64>> = text
        .split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.split(',').map(parse_number).collect())
        .collect::<Result<_, _>>()?;
    if points.is_empty() {
        return Err(Failure::usage("--points is empty"));
    }
    Ok(points)
}

/// `"0:1:3,2:4:2"` → two axes.
pub fn parse_grid(text: &str) -> Result<Vec<GridAxis>, Failure> {
    text.split(',')
        .map(|axis| {
            let parts: Vec<&str> = axis.split(':').collect();
            let [min, max, count] = parts[..] else {
                return Err(Failure::usage(format!("grid axis `{axis}` is not min:max:count")));
            };
            let count = count
                .trim()
                .parse()
                .map_err(|_| Failure::usage(format!("grid count `{count}` is not a non-negative integer")))?;
            Ok(GridAxis {
                min: parse_number(min)?,
                max: parse_number(max)?,
                count,
            })
        })
        .collect()
}

/// Row-major expansion: the first axis varies slowest.
pub fn expand_grid(axes: &[GridAxis]) -> Result<Vec<Vec<f64>>, Failure> {
    if axes.is_empty() {
        return Err(Failure::usage("grid has no axes"));
    }
    let values: Vec<Vec<f64>> = axes
        .iter()
        .map(|a| match a.count {
            0 => Err(Failure::usage("grid count must be at least 1")),
            1 => Ok(vec![a.min]),
            n => Ok((0..n)
                .map(|i| a.min + (a.max - a.min) * i as f64 / (n - 1) as f64)
                .collect()),
        })
        .collect::<Result<_, _>>()?;
    let mut out = vec![Vec::new()];
    for axis in &values {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    Ok(out)
}
