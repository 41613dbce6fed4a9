//! Test configurations given by diagonal weights `rho`: central fibers on
//! the torus `T x C^*`, their Futaki invariants, and scans for destabilizers.
//!
//! The `C^*` direction is `eta_hat = (0, ..., 0, 1/p)`. `rho` is used as
//! given, so it should already be the lift of the action to the
//! anticanonical multiple: shifting every projective `rho`-weight by `c`
//! moves the Futaki invariant by `c * W / p^2` (reported as
//! `lift_shift_sensitivity`).

use std::cmp::Ordering;

use num_traits::One;
use rayon::prelude::*;

use crate::error::Result;
use crate::grading::{ReebVector, TorusDirection, WeightedSetup};
use crate::groebner::{flat_limit, DegenerationSpec, FlatLimitOptions, Ideal};
use crate::polyalg::Rational;
use crate::volume::{invariance_between, FutakiReport, InvarianceReport, VolumeMethod, VolumeModel};

/// Whether the central fiber is reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reducedness {
    Reduced,
    NonReduced,
    /// Only monomial central fibers are decided.
    Unknown,
}

impl Reducedness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Reducedness::Reduced => "reduced",
            Reducedness::NonReduced => "non_reduced",
            Reducedness::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestConfigResult {
    pub spec: DegenerationSpec,
    pub extended_setup: WeightedSetup,
    pub xi_hat: ReebVector,
    pub eta_hat: TorusDirection,
    /// `epsilon` of the tilt `(xi, epsilon)`, when `(xi, 0)` is not Reeb.
    pub tilt: Option<f64>,
    /// `ini_rho(I) = I`.
    pub product_candidate: bool,
    pub reduced: Reducedness,
    /// Normality and klt singularities of the central fiber are never checked.
    pub special_conditions_verified: bool,
    pub futaki: Option<FutakiReport>,
    pub invariance: Option<InvarianceReport>,
    pub lift_shift_sensitivity: Option<f64>,
}

fn reducedness(central: &Ideal) -> Reducedness {
    if !central.is_monomial() {
        return Reducedness::Unknown;
    }
    // initial forms of a reduced basis: the generators are already minimal
    let squarefree = central.generators().iter().all(|g| g.terms()[0].exponent.as_slice().iter().all(|&p| p <= 1));
    if squarefree {
        Reducedness::Reduced
    } else {
        Reducedness::NonReduced
    }
}

/// Central fiber `I_0 = ini_rho(I)` with the extended grading; no Futaki invariant.
pub fn central_fiber(ideal: &Ideal, rho: &[i64], setup: &WeightedSetup, opts: &FlatLimitOptions) -> Result<TestConfigResult> {
    let spec = flat_limit(ideal, rho, setup, opts)?;
    let extended_setup = setup.extended(rho)?;
    let product_candidate = spec.central.same_ideal(ideal, &opts.limits)?;
    let reduced = reducedness(&spec.central);
    let xi = match &opts.xi {
        Some(x) => x.clone(),
        None => setup.find_reeb_vector().ok_or(crate::grading::GradingError::EmptyReebCone)?,
    };
    let (xi_hat, tilt) = lift_reeb(&xi, setup, &extended_setup)?;
    let mut eta = vec![Rational::from_integer(0.into()); setup.torus_rank()];
    eta.push(Rational::one() / Rational::from_integer(setup.p().into()));
    Ok(TestConfigResult {
        spec,
        extended_setup,
        xi_hat,
        eta_hat: TorusDirection::from_rationals(eta),
        tilt,
        product_candidate,
        reduced,
        special_conditions_verified: false,
        futaki: None,
        invariance: None,
        lift_shift_sensitivity: None,
    })
}

/// `(xi, 0)`, or `(xi, epsilon)` with `epsilon = 1e-3 * margin` when the former is not Reeb.
fn lift_reeb(xi: &ReebVector, setup: &WeightedSetup, extended: &WeightedSetup) -> Result<(ReebVector, Option<f64>)> {
    let check = setup.require_reeb(xi)?;
    let flat = xi.extended(&Rational::from_integer(0.into()));
    if extended.is_reeb(&flat)?.is_reeb {
        return Ok((flat, None));
    }
    let eps = 1e-3 * check.margin;
    let mut v = xi.values().to_vec();
    v.push(eps);
    let tilted = ReebVector::from_f64(v);
    extended.require_reeb(&tilted)?;
    Ok((tilted, Some(eps)))
}

/// Futaki invariant of the test configuration, computed on `S/I_0` for the extended torus.
pub fn test_config_futaki(
    ideal: &Ideal,
    rho: &[i64],
    setup: &WeightedSetup,
    xi: &ReebVector,
    schedule: &[u32],
    opts: &FlatLimitOptions,
) -> Result<TestConfigResult> {
    setup.require_reeb(xi)?;
    let opts = FlatLimitOptions { xi: Some(xi.clone()), ..opts.clone() };
    let mut result = central_fiber(ideal, rho, setup, &opts)?;
    let model = VolumeModel::new(result.spec.central.clone(), result.extended_setup.clone(), opts.limits)?;
    let fut = model.futaki(&result.xi_hat, &result.eta_hat, schedule, VolumeMethod::ClosedForm)?;
    let inv = invariance_between(ideal, &result.spec.central, setup, xi, schedule, &opts.limits)?;
    let p = setup.p() as f64;
    result.lift_shift_sensitivity = Some(inv.source.value / (p * p));
    result.futaki = Some(fut);
    result.invariance = Some(inv);
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub rho: Vec<i64>,
    pub outcome: std::result::Result<TestConfigResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Overall {
    SemistableOnCorpus,
    Destabilized { rho: Vec<i64>, futaki: f64 },
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub entries: Vec<ScanEntry>,
    pub overall: Overall,
    pub tolerance: f64,
    pub warnings: Vec<String>,
}

pub const DEFAULT_SCAN_TOLERANCE: f64 = 1e-3;

/// Evaluates every candidate; one failing `rho` does not stop the others.
pub fn semistability_scan(
    ideal: &Ideal,
    setup: &WeightedSetup,
    xi: &ReebVector,
    rho_list: &[Vec<i64>],
    tol: f64,
    schedule: &[u32],
    opts: &FlatLimitOptions,
) -> Result<StabilityVerdict> {
    setup.require_reeb(xi)?;
    let mut entries: Vec<ScanEntry> = rho_list
        .par_iter()
        .map(|rho| ScanEntry {
            rho: rho.clone(),
            outcome: test_config_futaki(ideal, rho, setup, xi, schedule, opts).map_err(|e| e.to_string()),
        })
        .collect();
    entries.sort_by(|a, b| a.rho.cmp(&b.rho));

    let mut warnings = vec![
        "special-fiber conditions (normal, klt) are not verified; a semistable verdict covers only the listed candidates"
            .to_string(),
    ];
    if rho_list.is_empty() {
        warnings.push("no test configurations supplied: the verdict is vacuous".into());
    }
    let mut worst: Option<(&Vec<i64>, f64)> = None;
    for e in &entries {
        match &e.outcome {
            Err(msg) => warnings.push(format!("rho {:?} failed: {msg}", e.rho)),
            Ok(r) => {
                let fut = r.futaki.as_ref().expect("scan computes Futaki invariants");
                let passed = r.invariance.as_ref().is_some_and(|i| i.passed);
                if fut.via_sum < -tol && fut.via_fd < -tol {
                    if !passed {
                        warnings.push(format!("rho {:?}: negative Futaki invariant but the invariance check failed", e.rho));
                        continue;
                    }
                    if worst.map_or(true, |(_, w)| fut.via_sum.partial_cmp(&w) == Some(Ordering::Less)) {
                        worst = Some((&e.rho, fut.via_sum));
                    }
                } else if (fut.via_sum < -tol) != (fut.via_fd < -tol) {
                    warnings.push(format!("rho {:?}: sum and finite-difference Futaki values disagree in sign", e.rho));
                }
            }
        }
    }
    let overall = match worst {
        Some((rho, futaki)) => Overall::Destabilized { rho: rho.clone(), futaki },
        None => Overall::SemistableOnCorpus,
    };
    Ok(StabilityVerdict { entries, overall, tolerance: tol, warnings })
}
