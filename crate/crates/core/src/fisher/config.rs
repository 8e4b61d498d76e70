//! Family configuration files (JSON or TOML).
//!
//! The family block is either the whole document or its `family` key; the
//! optional keys `sample_space`, `integration` and `reference` sit beside
//! it. Variants are selected by `kind`, in kebab-case.

use std::path::Path;

use serde::Deserialize;

use super::family::{ExpressionFamily, Family, FamilySpec, Integration, NaturalFamily, Reference, SampleSpace};
use crate::error::{Error, Result};
use crate::expr::{default_vars, parse};

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilyConfig {
    Gaussian,
    BernoulliLogit,
    CategoricalSoftmax {
        k: usize,
    },
    ExponentialRate,
    #[serde(alias = "exponential-family-natural")]
    ExpFamilyNatural {
        params: Vec<String>,
        #[serde(default)]
        sample_vars: Option<Vec<String>>,
        psi: String,
        statistics: Vec<String>,
        #[serde(default)]
        log_base: Option<String>,
    },
    LinearReparam {
        inner: Box<FamilyConfig>,
        matrix: Vec<Vec<f64>>,
    },
    Expression {
        params: Vec<String>,
        #[serde(default)]
        sample_vars: Option<Vec<String>>,
        log_density: String,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    Finite { points: Vec<Vec<f64>> },
    RealLine,
    HalfLine { lower: f64 },
    Interval { lower: f64, upper: f64 },
    Product { factors: Vec<SpaceConfig> },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IntegrationConfig {
    Default,
    ExactSum,
    GaussHermite {
        n: usize,
    },
    GaussLegendre {
        n: usize,
    },
    MonteCarlo {
        n: usize,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub center: Vec<String>,
    pub scale: Vec<String>,
}

/// A parsed configuration document before expression resolution.
#[derive(Debug, Clone)]
pub struct SpecConfig {
    pub family: FamilyConfig,
    pub sample_space: Option<SpaceConfig>,
    pub integration: Option<IntegrationConfig>,
    pub reference: Option<ReferenceConfig>,
}

impl SpecConfig {
    pub fn from_value(mut value: serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Config("family config must be a table".into()))?;
        let mut side = |key: &str| obj.remove(key);
        let sample_space = side("sample_space").map(serde_json::from_value).transpose().map_err(bad)?;
        let integration = side("integration").map(serde_json::from_value).transpose().map_err(bad)?;
        let reference = side("reference").map(serde_json::from_value).transpose().map_err(bad)?;
        let family_value = match obj.remove("family") {
            Some(f) => {
                if let Some(extra) = obj.keys().next() {
                    return Err(Error::Config(format!("unknown key `{extra}` beside `family`")));
                }
                f
            }
            None => value,
        };
        let family = serde_json::from_value(family_value).map_err(bad)?;
        Ok(SpecConfig {
            family,
            sample_space,
            integration,
            reference,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text).map_err(bad)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_value(toml::from_str(text).map_err(bad)?)
    }

    pub fn into_spec(self) -> Result<FamilySpec> {
        let family = build_family(&self.family, self.sample_space.as_ref())?;
        let space = match &self.sample_space {
            Some(s) => build_space(s),
            None => family
                .default_space()
                .ok_or_else(|| Error::Config(format!("{} needs `sample_space`", family.name())))?,
        };
        let integration = match self.integration {
            None | Some(IntegrationConfig::Default) => Integration::Default,
            Some(IntegrationConfig::ExactSum) => Integration::ExactSum,
            Some(IntegrationConfig::GaussHermite { n }) => Integration::GaussHermite { n },
            Some(IntegrationConfig::GaussLegendre { n }) => Integration::GaussLegendre { n },
            Some(IntegrationConfig::MonteCarlo { n, seed }) => Integration::MonteCarlo { n, seed },
        };
        let reference = match &self.reference {
            None => None,
            Some(r) => {
                let params = param_names(&self.family);
                let parse_all = |texts: &[String]| texts.iter().map(|t| parse(t, &params)).collect::<Result<Vec<_>>>();
                Some(Reference {
                    center: parse_all(&r.center)?,
                    scale: parse_all(&r.scale)?,
                })
            }
        };
        FamilySpec::new(family, space, integration, reference)
    }
}

fn bad(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Parameter names as seen by reference expressions: declared names,
/// conventional names for built-ins, `t1..tm` for reparametrisations.
fn param_names(f: &FamilyConfig) -> Vec<String> {
    match f {
        FamilyConfig::ExpFamilyNatural { params, .. } | FamilyConfig::Expression { params, .. } => params.clone(),
        FamilyConfig::LinearReparam { matrix, .. } => default_vars("t", matrix.first().map_or(0, Vec::len)),
        FamilyConfig::Gaussian => vec!["mu".into(), "sigma".into()],
        FamilyConfig::BernoulliLogit => vec!["theta".into()],
        FamilyConfig::CategoricalSoftmax { k } => default_vars("theta", *k),
        FamilyConfig::ExponentialRate => vec!["rate".into()],
    }
}

fn build_space(s: &SpaceConfig) -> SampleSpace {
    match s {
        SpaceConfig::Finite { points } => SampleSpace::Finite { points: points.clone() },
        SpaceConfig::RealLine => SampleSpace::RealLine,
        SpaceConfig::HalfLine { lower } => SampleSpace::HalfLine { lower: *lower },
        SpaceConfig::Interval { lower, upper } => SampleSpace::Interval {
            lower: *lower,
            upper: *upper,
        },
        SpaceConfig::Product { factors } => SampleSpace::Product(factors.iter().map(build_space).collect()),
    }
}

fn sample_names(declared: &Option<Vec<String>>, space: Option<&SpaceConfig>) -> Vec<String> {
    if let Some(names) = declared {
        return names.clone();
    }
    match space.map(|s| build_space(s).dim()) {
        Some(1) | None => vec!["x".into()],
        Some(d) => default_vars("x", d),
    }
}

fn build_family(f: &FamilyConfig, space: Option<&SpaceConfig>) -> Result<Family> {
    Ok(match f {
        FamilyConfig::Gaussian => Family::Gaussian,
        FamilyConfig::BernoulliLogit => Family::BernoulliLogit,
        FamilyConfig::CategoricalSoftmax { k } => Family::CategoricalSoftmax { k: *k },
        FamilyConfig::ExponentialRate => Family::ExponentialRate,
        FamilyConfig::ExpFamilyNatural {
            params,
            sample_vars,
            psi,
            statistics,
            log_base,
        } => {
            let xs = sample_names(sample_vars, space);
            Family::Natural(NaturalFamily {
                psi: parse(psi, params)?,
                statistics: statistics.iter().map(|t| parse(t, &xs)).collect::<Result<_>>()?,
                log_base: log_base.as_deref().map(|h| parse(h, &xs)).transpose()?,
            })
        }
        FamilyConfig::LinearReparam { inner, matrix } => Family::LinearReparam {
            inner: Box::new(build_family(inner, space)?),
            matrix: matrix.clone(),
        },
        FamilyConfig::Expression {
            params,
            sample_vars,
            log_density,
        } => {
            let xs = sample_names(sample_vars, space);
            let all: Vec<String> = xs.iter().chain(params).cloned().collect();
            Family::Expression(ExpressionFamily {
                log_density: parse(log_density, &all)?,
                sample_vars: xs,
                params: params.clone(),
            })
        }
    })
}

/// Loads a family from a `.json` or `.toml` file.
pub fn load_family(path: &Path) -> Result<FamilySpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let config = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => SpecConfig::from_toml(&text)?,
        _ => SpecConfig::from_json(&text)?,
    };
    config.into_spec()
}
