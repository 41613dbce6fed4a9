//! Problem files: the embedded presentation of `X` as JSON.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cache::{Cache, CacheEntry};
use crate::error::{Error, Result};
use crate::grading::{parse_rational, ReebVector, WeightedSetup};
use crate::groebner::{GbLimits, Ideal, MonomialOrder};
use crate::hilbert::krull_dim;
use crate::polyalg::{parse_polynomial, VarKind, VariableTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VarKind,
    pub weight: Vec<i64>,
}

/// `n` as a positive integer or the string `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FiberDim {
    Fixed(u32),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AutoTag {
    #[serde(rename = "auto")]
    Auto,
}

/// Torus vector written as `"1,1/2"` or as a JSON array of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Text(String),
    List(Vec<serde_json::Number>),
}

impl VectorSpec {
    pub fn to_vector(&self) -> Result<ReebVector> {
        match self {
            VectorSpec::Text(s) => Ok(ReebVector::parse(s)?),
            VectorSpec::List(v) => {
                let parts: Option<Vec<_>> = v.iter().map(|n| parse_rational(&n.to_string())).collect();
                match parts {
                    Some(p) if !p.is_empty() => Ok(ReebVector::from_rationals(p)),
                    _ => Err(Error::Invalid(format!("cannot read vector {v:?}"))),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub torus_rank: usize,
    pub variables: Vec<VariableSpec>,
    pub ideal: Vec<String>,
    pub p: u32,
    pub n: FiberDim,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<VectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_candidates: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// A validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub setup: WeightedSetup,
    pub ideal: Ideal,
    /// Krull dimension of the cone `Spec(S/I)`.
    pub cone_dim: i64,
    pub n_was_auto: bool,
    pub warnings: Vec<String>,
    /// SHA-256 of the raw file contents.
    pub sha256: String,
}

impl Problem {
    pub fn from_json(text: &str, limits: &GbLimits) -> Result<Self> {
        Self::load(text, limits, &Cache::disabled()).map(|(p, _)| p)
    }

    /// Parses and validates; a cached grevlex basis is reused when it checks out.
    pub fn load(text: &str, limits: &GbLimits, cache: &Cache) -> Result<(Self, Option<CacheEntry>)> {
        let file: ProblemFile =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("problem file: {e}")))?;
        let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        let entry = cache.load(&sha256);
        let problem = Self::from_file(file, sha256, limits, entry.as_ref())?;
        Ok((problem, entry))
    }

    pub fn from_file(file: ProblemFile, sha256: String, limits: &GbLimits, cached: Option<&CacheEntry>) -> Result<Self> {
        let vars = VariableTable::new(file.variables.iter().map(|v| (v.name.clone(), v.kind)))?;
        let weights = file.variables.iter().map(|v| v.weight.clone()).collect();
        let provisional = match file.n {
            FiberDim::Fixed(n) => n,
            FiberDim::Auto(_) => 1,
        };
        let setup = WeightedSetup::new(vars, file.torus_rank, weights, file.p, provisional)?;
        let ideal = Ideal::parse(&file.ideal.iter().map(String::as_str).collect::<Vec<_>>(), &setup)?;
        if let Some(entry) = cached {
            let basis: std::result::Result<Vec<_>, _> =
                entry.grevlex_basis.iter().map(|g| parse_polynomial(g, setup.vars())).collect();
            if let Ok(basis) = basis {
                ideal.seed_groebner_basis(&MonomialOrder::grevlex(), basis);
            }
        }
        let cone_dim = krull_dim(&ideal, limits)?;
        let mut warnings = Vec::new();
        let (setup, n_was_auto) = match file.n {
            FiberDim::Fixed(n) => {
                if cone_dim - 1 != n as i64 {
                    warnings.push(format!("n = {n} differs from dim Spec(S/I) - 1 = {}", cone_dim - 1));
                }
                (setup, false)
            }
            FiberDim::Auto(_) => {
                if cone_dim < 2 {
                    return Err(Error::Invalid(format!(
                        "n = \"auto\" needs a cone of dimension at least 2, got {cone_dim}"
                    )));
                }
                (setup.with_n((cone_dim - 1) as u32)?, true)
            }
        };
        if let Some(list) = &file.rho_candidates {
            for rho in list {
                if rho.len() != setup.nvars() {
                    return Err(Error::Invalid(format!("rho candidate {rho:?} needs {} entries", setup.nvars())));
                }
            }
        }
        Ok(Self { file, setup, ideal, cone_dim, n_was_auto, warnings, sha256 })
    }

    /// The input file with `n` resolved.
    pub fn echo(&self) -> ProblemFile {
        ProblemFile { n: FiberDim::Fixed(self.setup.n()), ..self.file.clone() }
    }

    /// `--xi` if given, else the file's `xi`, else a Reeb field found from the weights.
    pub fn xi(&self, flag: Option<&str>) -> Result<ReebVector> {
        let xi = match (flag, &self.file.xi) {
            (Some(s), _) => ReebVector::parse(s)?,
            (None, Some(v)) => v.to_vector()?,
            (None, None) => self.setup.find_reeb_vector().ok_or(crate::grading::GradingError::EmptyReebCone)?,
        };
        self.setup.require_reeb(&xi)?;
        Ok(xi)
    }
}
