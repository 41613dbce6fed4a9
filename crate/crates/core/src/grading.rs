//! Torus weights on the ambient coordinates and the Reeb cone they cut out.
//!
//! Projective weights are unconstrained; each affine coordinate `y_j`
//! contributes the open half-space `<wt(y_j), xi> > 0`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::polyalg::{Exponent, Rational, VarKind, VariableTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradingError {
    #[error("torus rank must be at least 1")]
    ZeroRank,
    #[error("variable `{name}` has {got} weight components, expected {expected}")]
    WeightLength { name: String, got: usize, expected: usize },
    #[error("expected {expected} weight vectors, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("{0} must be a positive integer")]
    NonPositive(&'static str),
    #[error("the affine weights admit no Reeb field (no xi pairs positively with every affine weight)")]
    EmptyReebCone,
    #[error("vector has {got} components, torus rank is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("not a Reeb field: <wt({var}), xi> = {value} <= 0")]
    NotReeb { var: String, value: f64 },
    #[error("cannot parse torus vector `{0}`")]
    Parse(String),
}

/// A real vector in the Lie algebra of the torus. Exact rational components
/// are kept alongside the floating-point ones when available.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusVector {
    values: Vec<f64>,
    exact: Option<Vec<Rational>>,
}

/// Candidate Reeb field.
pub type ReebVector = TorusVector;
/// Unconstrained direction in the torus Lie algebra.
pub type TorusDirection = TorusVector;

fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses "3", "-1/2" or "0.25" into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if s.contains(['e', 'E']) {
        return None;
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = BigInt::from(10).pow(frac.len() as u32);
    let r = BigRational::new(num, den);
    Some(if neg { -r } else { r })
}

impl TorusVector {
    pub fn from_f64(values: Vec<f64>) -> Self {
        Self { values, exact: None }
    }

    pub fn from_rationals(exact: Vec<Rational>) -> Self {
        Self { values: exact.iter().map(rational_to_f64).collect(), exact: Some(exact) }
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Self::from_rationals(v.iter().map(|&x| Rational::from_integer(x.into())).collect())
    }

    pub fn zero(k: usize) -> Self {
        Self::from_ints(&vec![0; k])
    }

    /// Unit vector along coordinate `i`.
    pub fn basis(i: usize, k: usize) -> Self {
        let mut v = vec![0; k];
        v[i] = 1;
        Self::from_ints(&v)
    }

    /// Comma-separated components, each an integer, fraction or decimal.
    pub fn parse(s: &str) -> Result<Self, GradingError> {
        let parts: Option<Vec<Rational>> = s.split(',').map(parse_rational).collect();
        match parts {
            Some(p) if !p.is_empty() => Ok(Self::from_rationals(p)),
            _ => Err(GradingError::Parse(s.to_string())),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exact(&self) -> Option<&[Rational]> {
        self.exact.as_deref()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `self + t * dir`, exact when all three inputs are.
    pub fn axpy(&self, t: &Rational, dir: &TorusVector) -> Self {
        match (&self.exact, &dir.exact) {
            (Some(a), Some(b)) => Self::from_rationals(a.iter().zip(b).map(|(x, y)| x + t * y).collect()),
            _ => self.axpy_f64(rational_to_f64(t), dir),
        }
    }

    pub fn axpy_f64(&self, t: f64, dir: &TorusVector) -> Self {
        Self::from_f64(self.values.iter().zip(&dir.values).map(|(x, y)| x + t * y).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_f64(self.values.iter().map(|x| x * s).collect())
    }

    /// Appends one component.
    pub fn extended(&self, last: &Rational) -> Self {
        match &self.exact {
            Some(e) => {
                let mut e = e.clone();
                e.push(last.clone());
                Self::from_rationals(e)
            }
            None => {
                let mut v = self.values.clone();
                v.push(rational_to_f64(last));
                Self::from_f64(v)
            }
        }
    }

    pub fn dot_f64(&self, w: &[i64]) -> f64 {
        self.values.iter().zip(w).map(|(x, &a)| x * a as f64).sum()
    }

    pub fn dot_exact(&self, w: &[i64]) -> Option<Rational> {
        self.exact.as_ref().map(|e| {
            e.iter()
                .zip(w)
                .fold(Rational::zero(), |acc, (x, &a)| acc + x * Rational::from_integer(a.into()))
        })
    }

    /// Components rendered as exact strings where possible.
    pub fn to_strings(&self) -> Vec<String> {
        match &self.exact {
            Some(e) => e.iter().map(|r| r.to_string()).collect(),
            None => self.values.iter().map(|v| format!("{v}")).collect(),
        }
    }
}

impl fmt::Display for TorusVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

/// Outcome of a Reeb-cone membership test.
#[derive(Debug, Clone, PartialEq)]
pub struct ReebCheck {
    pub is_reeb: bool,
    /// `min_j <wt(y_j), xi>`; `+inf` when there are no affine variables.
    pub margin: f64,
    pub exact_margin: Option<Rational>,
    /// Affine variable attaining the margin.
    pub binding: Option<usize>,
}

/// Largest `t` keeping `xi + t*eta` in the closed Reeb cone.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorStep {
    /// `+inf` when the ray never leaves the cone.
    pub t_max: f64,
    pub exact: Option<Rational>,
    pub binding: Option<usize>,
}

/// Ambient weight data: variables, torus rank `k`, one weight in Z^k per
/// variable, anticanonical multiple `p` and fiber dimension `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightedSetup {
    vars: VariableTable,
    weights: Vec<Vec<i64>>,
    torus_rank: usize,
    p: u32,
    n: u32,
}

impl WeightedSetup {
    pub fn new(
        vars: VariableTable,
        torus_rank: usize,
        weights: Vec<Vec<i64>>,
        p: u32,
        n: u32,
    ) -> Result<Self, GradingError> {
        if torus_rank == 0 {
            return Err(GradingError::ZeroRank);
        }
        if weights.len() != vars.len() {
            return Err(GradingError::WeightCount { expected: vars.len(), got: weights.len() });
        }
        for (i, w) in weights.iter().enumerate() {
            if w.len() != torus_rank {
                return Err(GradingError::WeightLength {
                    name: vars.name(i).to_string(),
                    got: w.len(),
                    expected: torus_rank,
                });
            }
        }
        if p == 0 {
            return Err(GradingError::NonPositive("p"));
        }
        if n == 0 {
            return Err(GradingError::NonPositive("n"));
        }
        let setup = Self { vars, weights, torus_rank, p, n };
        if setup.find_reeb_vector().is_none() {
            return Err(GradingError::EmptyReebCone);
        }
        Ok(setup)
    }

    pub fn vars(&self) -> &VariableTable {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn torus_rank(&self) -> usize {
        self.torus_rank
    }

    pub fn weight(&self, var: usize) -> &[i64] {
        &self.weights[var]
    }

    pub fn weights(&self) -> &[Vec<i64>] {
        &self.weights
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Same setup with a different fiber dimension.
    pub fn with_n(&self, n: u32) -> Result<Self, GradingError> {
        if n == 0 {
            return Err(GradingError::NonPositive("n"));
        }
        Ok(Self { n, ..self.clone() })
    }

    /// Appends `rho_v` to every variable weight, giving the rank `k+1` setup
    /// of the torus `T x C^*`.
    pub fn extended(&self, rho: &[i64]) -> Result<Self, GradingError> {
        if rho.len() != self.nvars() {
            return Err(GradingError::WeightCount { expected: self.nvars(), got: rho.len() });
        }
        let weights = self
            .weights
            .iter()
            .zip(rho)
            .map(|(w, &r)| {
                let mut w = w.clone();
                w.push(r);
                w
            })
            .collect();
        Ok(Self { vars: self.vars.clone(), weights, torus_rank: self.torus_rank + 1, p: self.p, n: self.n })
    }

    /// Integer vector `rho` induced on the variables by a cocharacter `eta0` of the torus.
    pub fn image_of(&self, eta0: &[i64]) -> Vec<i64> {
        self.weights.iter().map(|w| w.iter().zip(eta0).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn is_affine(&self, var: usize) -> bool {
        self.vars.kind(var) == VarKind::Affine
    }

    /// Torus weight of the monomial: `sum_v e_v * wt(v)`.
    pub fn monomial_weight(&self, e: &Exponent) -> Vec<i64> {
        let mut out = vec![0i64; self.torus_rank];
        for (i, &p) in e.as_slice().iter().enumerate() {
            if p > 0 {
                for (o, w) in out.iter_mut().zip(&self.weights[i]) {
                    *o += p as i64 * w;
                }
            }
        }
        out
    }

    fn check_len(&self, v: &TorusVector) -> Result<(), GradingError> {
        if v.len() != self.torus_rank {
            return Err(GradingError::DimensionMismatch { expected: self.torus_rank, got: v.len() });
        }
        Ok(())
    }

    pub fn is_reeb(&self, xi: &TorusVector) -> Result<ReebCheck, GradingError> {
        self.check_len(xi)?;
        let mut best: Option<(usize, f64, Option<Rational>)> = None;
        for j in self.vars.affine_indices() {
            let w = &self.weights[j];
            let exact = xi.dot_exact(w);
            let approx = exact.as_ref().map(rational_to_f64).unwrap_or_else(|| xi.dot_f64(w));
            let better = match &best {
                None => true,
                Some((_, b, be)) => match (&exact, be) {
                    (Some(e), Some(be)) => e < be,
                    _ => approx < *b,
                },
            };
            if better {
                best = Some((j, approx, exact));
            }
        }
        Ok(match best {
            None => ReebCheck { is_reeb: true, margin: f64::INFINITY, exact_margin: None, binding: None },
            Some((j, m, e)) => {
                let positive = match &e {
                    Some(e) => e.is_positive(),
                    None => m > 0.0,
                };
                ReebCheck { is_reeb: positive, margin: m, exact_margin: e, binding: Some(j) }
            }
        })
    }

    /// Errors unless `xi` is a Reeb field; returns the margin check otherwise.
    pub fn require_reeb(&self, xi: &TorusVector) -> Result<ReebCheck, GradingError> {
        let check = self.is_reeb(xi)?;
        if !check.is_reeb {
            let j = check.binding.expect("a failing check has a binding variable");
            return Err(GradingError::NotReeb { var: self.vars.name(j).to_string(), value: check.margin });
        }
        Ok(check)
    }

    /// Exact ray/cone intersection over the affine half-spaces.
    pub fn reeb_interior_step(&self, xi: &TorusVector, dir: &TorusVector) -> Result<InteriorStep, GradingError> {
        self.require_reeb(xi)?;
        self.check_len(dir)?;
        let mut best: Option<(usize, f64, Option<Rational>)> = None;
        for j in self.vars.affine_indices() {
            let w = &self.weights[j];
            let (a, b) = (xi.dot_exact(w), dir.dot_exact(w));
            let candidate = match (a, b) {
                (Some(a), Some(b)) => {
                    if !b.is_negative() {
                        continue;
                    }
                    let t = a / -b;
                    (rational_to_f64(&t), Some(t))
                }
                _ => {
                    let (a, b) = (xi.dot_f64(w), dir.dot_f64(w));
                    if b >= 0.0 {
                        continue;
                    }
                    (a / -b, None)
                }
            };
            let better = match &best {
                None => true,
                Some((_, t, te)) => match (&candidate.1, te) {
                    (Some(c), Some(te)) => c < te,
                    _ => candidate.0 < *t,
                },
            };
            if better {
                best = Some((j, candidate.0, candidate.1));
            }
        }
        Ok(match best {
            None => InteriorStep { t_max: f64::INFINITY, exact: None, binding: None },
            Some((j, t, e)) => InteriorStep { t_max: t, exact: e, binding: Some(j) },
        })
    }

    /// Some Reeb field, found by the perceptron iteration `xi += wt(y_j)` on
    /// violated rows. Returns `None` when none is found within the iteration cap.
    pub fn find_reeb_vector(&self) -> Option<TorusVector> {
        let rows: Vec<&Vec<i64>> = self.vars.affine_indices().map(|j| &self.weights[j]).collect();
        let mut xi = vec![0i128; self.torus_rank];
        if rows.is_empty() {
            let mut v = vec![0; self.torus_rank];
            v[0] = 1;
            return Some(TorusVector::from_ints(&v));
        }
        for _ in 0..100_000 {
            let violated = rows
                .iter()
                .find(|w| w.iter().zip(&xi).map(|(&a, &b)| a as i128 * b).sum::<i128>() <= 0);
            match violated {
                None => {
                    let v: Option<Vec<i64>> = xi.iter().map(|&x| i64::try_from(x).ok()).collect();
                    return v.map(|v| TorusVector::from_ints(&v));
                }
                Some(w) => {
                    for (x, &a) in xi.iter_mut().zip(w.iter()) {
                        *x += a as i128;
                    }
                }
            }
        }
        None
    }
}
