//! Exact multivariate polynomials over the rationals.
//!
//! Every [`Polynomial`] lives on a fixed number of variables; the names and the
//! projective/affine split are carried separately by a [`VariableTable`].
//! Terms are stored in descending graded-reverse-lexicographic order, which
//! makes equality structural and printing deterministic.

mod format;
mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::format_polynomial;
pub use parse::parse_polynomial;

/// Arbitrary-precision rational; always reduced with a positive denominator.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("exponent at byte {offset} is not a non-negative integer literal")]
    BadExponent { offset: usize },
    #[error("invalid variable table: {0}")]
    InvalidVariables(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    /// Homogeneous coordinate on the projective factor.
    Projective,
    /// Coordinate on the affine factor.
    Affine,
}

/// Ordered list of distinct variable names with their kinds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VariableTable {
    names: Vec<String>,
    kinds: Vec<VarKind>,
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl VariableTable {
    pub fn new<S: Into<String>>(vars: impl IntoIterator<Item = (S, VarKind)>) -> Result<Self, PolyError> {
        let mut names = Vec::new();
        let mut kinds = Vec::new();
        for (name, kind) in vars {
            let name = name.into();
            if !valid_identifier(&name) {
                return Err(PolyError::InvalidVariables(format!("`{name}` is not a valid identifier")));
            }
            if names.contains(&name) {
                return Err(PolyError::InvalidVariables(format!("duplicate variable `{name}`")));
            }
            names.push(name);
            kinds.push(kind);
        }
        if !kinds.contains(&VarKind::Projective) {
            return Err(PolyError::InvalidVariables(
                "at least one projective variable is required".into(),
            ));
        }
        Ok(Self { names, kinds })
    }

    /// Convenience constructor: `projective` names first, then `affine` names.
    pub fn split(projective: &[&str], affine: &[&str]) -> Result<Self, PolyError> {
        Self::new(
            projective
                .iter()
                .map(|n| (*n, VarKind::Projective))
                .chain(affine.iter().map(|n| (*n, VarKind::Affine))),
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self, i: usize) -> VarKind {
        self.kinds[i]
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn projective_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kinds[i] == VarKind::Projective)
    }

    pub fn affine_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.kinds[i] == VarKind::Affine)
    }
}

/// Exponent vector of a monomial, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn zero(nvars: usize) -> Self {
        Self(vec![0; nvars])
    }

    pub fn new(powers: Vec<u32>) -> Self {
        Self(powers)
    }

    /// The monomial consisting of the single variable `var`.
    pub fn var(var: usize, nvars: usize) -> Self {
        let mut e = Self::zero(nvars);
        e.0[var] = 1;
        e
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u64 {
        self.0.iter().map(|&p| p as u64).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&p| p == 0)
    }

    /// Degree in the projective variables of `vars`.
    pub fn x_degree(&self, vars: &VariableTable) -> u32 {
        vars.projective_indices().map(|i| self.0[i]).sum()
    }

    pub fn mul(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self` divides `other`.
    pub fn divides(&self, other: &Exponent) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `self / other`, if `other` divides `self`.
    pub fn checked_div(&self, other: &Exponent) -> Option<Exponent> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Exponent)
    }

    pub fn lcm(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn gcd(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    /// Indices of variables that actually occur.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &p)| p > 0).map(|(i, _)| i)
    }

    /// True when the two monomials share no variable.
    pub fn coprime(&self, other: &Exponent) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }
}

/// Graded reverse lexicographic comparison with variable 0 the largest.
pub fn grevlex_cmp(a: &Exponent, b: &Exponent) -> Ordering {
    a.total_degree().cmp(&b.total_degree()).then_with(|| {
        for (pa, pb) in a.0.iter().rev().zip(b.0.iter().rev()) {
            if pa != pb {
                // smaller power in the last differing variable wins
                return pb.cmp(pa);
            }
        }
        Ordering::Equal
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: Rational,
    pub exponent: Exponent,
}

/// A polynomial in canonical form: terms in strictly descending grevlex order,
/// no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: Vec::new() }
    }

    pub fn constant(c: Rational, nvars: usize) -> Self {
        Self::monomial(c, Exponent::zero(nvars))
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(Rational::one(), nvars)
    }

    pub fn monomial(coeff: Rational, exponent: Exponent) -> Self {
        let nvars = exponent.len();
        if coeff.is_zero() {
            return Self::zero(nvars);
        }
        Self { nvars, terms: vec![Term { coeff, exponent }] }
    }

    pub fn var(var: usize, nvars: usize) -> Self {
        Self::monomial(Rational::one(), Exponent::var(var, nvars))
    }

    /// Builds the canonical form of an arbitrary list of terms: sorts, merges
    /// equal exponents and drops zeros.
    pub fn from_terms(nvars: usize, mut terms: Vec<Term>) -> Self {
        debug_assert!(terms.iter().all(|t| t.exponent.len() == nvars));
        terms.sort_by(|a, b| grevlex_cmp(&b.exponent, &a.exponent));
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.exponent == t.exponent => last.coeff += t.coeff,
                _ => {
                    if out.last().map_or(false, |l| l.coeff.is_zero()) {
                        out.pop();
                    }
                    out.push(t);
                }
            }
        }
        if out.last().map_or(false, |l| l.coeff.is_zero()) {
            out.pop();
        }
        Self { nvars, terms: out }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Single-term polynomial (the zero polynomial is not a monomial).
    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn coefficient(&self, e: &Exponent) -> Rational {
        self.terms
            .iter()
            .find(|t| &t.exponent == e)
            .map(|t| t.coeff.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: &t.coeff * c, exponent: t.exponent.clone() })
                .collect(),
        }
    }

    /// Multiplies by `c * x^e`; order is preserved since grevlex is a monomial order.
    pub fn mul_term(&self, c: &Rational, e: &Exponent) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: &t.coeff * c, exponent: t.exponent.mul(e) })
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Splits by degree in the projective variables; the pieces sum to `self`.
    pub fn x_degree_components(&self, vars: &VariableTable) -> BTreeMap<u32, Polynomial> {
        let mut parts: BTreeMap<u32, Vec<Term>> = BTreeMap::new();
        for t in &self.terms {
            parts.entry(t.exponent.x_degree(vars)).or_default().push(t.clone());
        }
        parts
            .into_iter()
            .map(|(d, ts)| (d, Polynomial { nvars: self.nvars, terms: ts }))
            .collect()
    }

    /// Scales so the first (grevlex-leading) coefficient is 1.
    pub fn monic(&self) -> Self {
        match self.terms.first() {
            None => self.clone(),
            Some(t) => self.scale(&t.coeff.recip()),
        }
    }

    pub fn max_abs_coeff(&self) -> Rational {
        self.terms.iter().map(|t| t.coeff.abs()).max().unwrap_or_else(Rational::zero)
    }

    fn merge(&self, other: &Polynomial, negate_other: bool) -> Polynomial {
        assert_eq!(self.nvars, other.nvars, "polynomials over different variable counts");
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let a = &self.terms;
        let b = &other.terms;
        let sign = |c: &Rational| if negate_other { -c.clone() } else { c.clone() };
        while i < a.len() && j < b.len() {
            match grevlex_cmp(&a[i].exponent, &b[j].exponent) {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(Term { coeff: sign(&b[j].coeff), exponent: b[j].exponent.clone() });
                    j += 1;
                }
                Ordering::Equal => {
                    let c = if negate_other { &a[i].coeff - &b[j].coeff } else { &a[i].coeff + &b[j].coeff };
                    if !c.is_zero() {
                        out.push(Term { coeff: c, exponent: a[i].exponent.clone() });
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(a[i..].iter().cloned());
        out.extend(b[j..].iter().map(|t| Term { coeff: sign(&t.coeff), exponent: t.exponent.clone() }));
        Polynomial { nvars: self.nvars, terms: out }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.merge(rhs, false)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.merge(rhs, true)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "polynomials over different variable counts");
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                terms.push(Term { coeff: &a.coeff * &b.coeff, exponent: a.exponent.mul(&b.exponent) });
            }
        }
        Polynomial::from_terms(self.nvars, terms)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Pairs a polynomial with its variable names for printing.
pub struct Display<'a> {
    pub poly: &'a Polynomial,
    pub vars: &'a VariableTable,
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_polynomial(self.poly, self.vars))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> VariableTable {
        VariableTable::split(&["x0"], &["y1", "y2", "y3"]).unwrap()
    }

    fn p(s: &str) -> Polynomial {
        parse_polynomial(s, &vars()).unwrap()
    }

    #[test]
    fn table_validation() {
        assert!(VariableTable::split(&[], &["y1"]).is_err());
        assert!(VariableTable::split(&["x0", "x0"], &[]).is_err());
        assert!(VariableTable::split(&["0x"], &[]).is_err());
        assert!(VariableTable::split(&["x_0"], &["y1"]).is_ok());
    }

    #[test]
    fn grevlex_orders_as_expected() {
        // y1*y2 > y3^2 (same degree, smaller power of the last variable)
        let a = Exponent::new(vec![0, 1, 1, 0]);
        let b = Exponent::new(vec![0, 0, 0, 2]);
        assert_eq!(grevlex_cmp(&a, &b), Ordering::Greater);
        assert_eq!(grevlex_cmp(&b, &Exponent::new(vec![1, 0, 0, 0])), Ordering::Greater);
    }

    #[test]
    fn identity_and_difference_of_squares() {
        let f = p("y1*y2 - y3^2");
        assert_eq!(&f + &Polynomial::zero(4), f);
        assert_eq!(&p("y1 - y2") * &p("y1 + y2"), p("y1^2 - y2^2"));
    }

    #[test]
    fn product_term_by_term() {
        // oracle: multiply each term by y3 and bump the y3 exponent by hand
        let f = p("y1*y2 - y3^2");
        let expected = Polynomial::from_terms(
            4,
            vec![
                Term { coeff: rat(1, 1), exponent: Exponent::new(vec![0, 1, 1, 1]) },
                Term { coeff: rat(-1, 1), exponent: Exponent::new(vec![0, 0, 0, 3]) },
            ],
        );
        assert_eq!(&f * &p("y3"), expected);
    }

    #[test]
    fn square_by_repeated_multiplication() {
        let s = p("x0 + y1");
        assert_eq!(s.pow(2), &s * &s);
        let terms = s.pow(2);
        let coeffs: Vec<_> = terms.terms().iter().map(|t| t.coeff.clone()).collect();
        assert_eq!(coeffs, vec![rat(1, 1), rat(2, 1), rat(1, 1)]);
        assert_eq!(terms.terms()[0].exponent.as_slice(), &[2, 0, 0, 0]);
        assert_eq!(terms.terms()[1].exponent.as_slice(), &[1, 1, 0, 0]);
        assert_eq!(terms.terms()[2].exponent.as_slice(), &[0, 2, 0, 0]);
    }

    #[test]
    fn cancellation_leaves_canonical_zero() {
        let f = p("y1*y2 - y3^2");
        assert!((&f - &f).is_zero());
        assert!(p("y1 - y1 + 0").is_zero());
    }

    #[test]
    fn x_degree_split() {
        let f = p("x0^2*y1 + x0");
        let parts = f.x_degree_components(&vars());
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[&2], p("x0^2*y1"));
        assert_eq!(parts[&1], p("x0"));
        let g = p("y1*y2");
        assert_eq!(g.x_degree_components(&vars())[&0], g);
        assert!(Polynomial::zero(4).x_degree_components(&vars()).is_empty());
    }
}
