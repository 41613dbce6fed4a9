//! Monomial orders, division, Buchberger's algorithm and initial ideals.
//!
//! Orders are "weight first, grevlex tiebreak". Weight vectors may have any
//! sign, so the order need not be a well-order on all of `S`; it is one on
//! every graded piece `(x-degree, torus weight)`, which is finite-dimensional
//! as soon as the Reeb cone is nonempty. Every ideal here is homogeneous for
//! that grading, so division and S-pair reduction stay inside finite pieces.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, RwLock};

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grading::{ReebVector, WeightedSetup};
use crate::hilbert::{graded_dims, GradedDimTable};
use crate::polyalg::{format_polynomial, grevlex_cmp, Exponent, Polynomial, Rational, Term, VariableTable};

/// Weight order with graded-reverse-lexicographic tiebreak.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MonomialOrder {
    weight: Option<Vec<i64>>,
}

impl MonomialOrder {
    pub fn grevlex() -> Self {
        Self { weight: None }
    }

    pub fn weighted(rho: Vec<i64>) -> Self {
        Self { weight: Some(rho) }
    }

    /// Rational weights are cleared of denominators; the order is unchanged.
    pub fn from_rational_weight(rho: &[Rational]) -> Result<Self> {
        let l = rho.iter().fold(num_bigint::BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let ints: Option<Vec<i64>> = rho.iter().map(|r| (r.numer() * (&l / r.denom())).to_i64()).collect();
        ints.map(Self::weighted).ok_or(Error::Overflow("rational weight vector"))
    }

    pub fn weight(&self) -> Option<&[i64]> {
        self.weight.as_deref()
    }

    pub fn weight_of(&self, e: &Exponent) -> Option<i128> {
        self.weight.as_ref().map(|w| rho_weight(w, e))
    }

    pub fn cmp(&self, a: &Exponent, b: &Exponent) -> Ordering {
        if let Some(w) = &self.weight {
            let o = rho_weight(w, a).cmp(&rho_weight(w, b));
            if o != Ordering::Equal {
                return o;
            }
        }
        grevlex_cmp(a, b)
    }
}

pub fn rho_weight(rho: &[i64], e: &Exponent) -> i128 {
    rho.iter().zip(e.as_slice()).map(|(&r, &p)| r as i128 * p as i128).sum()
}

/// Caps for Buchberger's algorithm. Hitting one is reported, never truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GbLimits {
    pub max_pairs: usize,
    pub max_degree: u64,
    /// Re-check that every S-pair of the reduced output reduces to zero.
    pub verify: bool,
}

impl Default for GbLimits {
    fn default() -> Self {
        Self { max_pairs: 200_000, max_degree: 256, verify: true }
    }
}

/// Reduced Gröbner basis for one monomial order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroebnerBasis {
    order: MonomialOrder,
    elements: Vec<Polynomial>,
    leading: Vec<Exponent>,
    pairs_processed: usize,
}

impl GroebnerBasis {
    pub fn order(&self) -> &MonomialOrder {
        &self.order
    }

    pub fn elements(&self) -> &[Polynomial] {
        &self.elements
    }

    /// Leading monomials, in the same order as `elements`.
    pub fn leading_monomials(&self) -> &[Exponent] {
        &self.leading
    }

    pub fn pairs_processed(&self) -> usize {
        self.pairs_processed
    }

    pub fn reduce(&self, f: &Polynomial) -> Polynomial {
        normal_form(f, &self.elements, &self.order)
    }

    pub fn contains(&self, f: &Polynomial) -> bool {
        self.reduce(f).is_zero()
    }
}

/// Homogeneous ideal of `S`, with Gröbner bases cached per order.
#[derive(Debug)]
pub struct Ideal {
    nvars: usize,
    generators: Vec<Polynomial>,
    cache: RwLock<HashMap<MonomialOrder, Arc<GroebnerBasis>>>,
}

impl Clone for Ideal {
    fn clone(&self) -> Self {
        Self {
            nvars: self.nvars,
            generators: self.generators.clone(),
            cache: RwLock::new(self.cache.read().expect("gb cache poisoned").clone()),
        }
    }
}

impl Ideal {
    /// Checks that every generator is homogeneous in x-degree and torus weight.
    pub fn new(generators: Vec<Polynomial>, setup: &WeightedSetup) -> Result<Self> {
        let ideal = Self::from_generators(setup.nvars(), generators)?;
        ideal.check_homogeneous(setup)?;
        Ok(ideal)
    }

    pub fn zero(nvars: usize) -> Self {
        Self { nvars, generators: Vec::new(), cache: RwLock::new(HashMap::new()) }
    }

    /// Parses each generator with the setup's variable table.
    pub fn parse(generators: &[&str], setup: &WeightedSetup) -> Result<Self> {
        let gens = generators
            .iter()
            .map(|s| crate::polyalg::parse_polynomial(s, setup.vars()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(gens, setup)
    }

    pub(crate) fn from_generators(nvars: usize, generators: Vec<Polynomial>) -> Result<Self> {
        for g in &generators {
            if g.nvars() != nvars {
                return Err(Error::VariableCount { expected: nvars, got: g.nvars() });
            }
        }
        let generators = generators.into_iter().filter(|g| !g.is_zero()).collect();
        Ok(Self { nvars, generators, cache: RwLock::new(HashMap::new()) })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn is_zero_ideal(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn check_homogeneous(&self, setup: &WeightedSetup) -> Result<()> {
        if setup.nvars() != self.nvars {
            return Err(Error::VariableCount { expected: setup.nvars(), got: self.nvars });
        }
        for (index, g) in self.generators.iter().enumerate() {
            let first = &g.terms()[0].exponent;
            let (d0, w0) = (first.x_degree(setup.vars()), setup.monomial_weight(first));
            for t in &g.terms()[1..] {
                let d = t.exponent.x_degree(setup.vars());
                if d != d0 {
                    return Err(Error::NotHomogeneous {
                        index,
                        reason: format!("mixes x-degrees {d0} and {d}"),
                    });
                }
                let w = setup.monomial_weight(&t.exponent);
                if w != w0 {
                    return Err(Error::NotHomogeneous {
                        index,
                        reason: format!("mixes torus weights {w0:?} and {w:?}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Every generator is a single term.
    pub fn is_monomial(&self) -> bool {
        self.generators.iter().all(Polynomial::is_monomial)
    }

    pub fn groebner_basis(&self, order: &MonomialOrder, limits: &GbLimits) -> Result<Arc<GroebnerBasis>> {
        if let Some(gb) = self.cache.read().expect("gb cache poisoned").get(order) {
            return Ok(gb.clone());
        }
        let gb = Arc::new(buchberger(&self.generators, self.nvars, order, limits)?);
        let mut cache = self.cache.write().expect("gb cache poisoned");
        Ok(cache.entry(order.clone()).or_insert(gb).clone())
    }

    /// `other ⊆ self`, tested by normal forms against a grevlex basis of `self`.
    pub fn contains_ideal(&self, other: &Ideal, limits: &GbLimits) -> Result<bool> {
        let gb = self.groebner_basis(&MonomialOrder::grevlex(), limits)?;
        Ok(other.generators.iter().all(|g| gb.contains(g)))
    }

    /// Equality as ideals via mutual membership.
    pub fn same_ideal(&self, other: &Ideal, limits: &GbLimits) -> Result<bool> {
        Ok(self.contains_ideal(other, limits)? && other.contains_ideal(self, limits)?)
    }

    /// Installs a previously computed reduced basis after checking that every
    /// generator and every S-pair reduces to zero. Returns whether it was accepted.
    pub fn seed_groebner_basis(&self, order: &MonomialOrder, elements: Vec<Polynomial>) -> bool {
        if elements.iter().any(|g| g.is_zero() || g.nvars() != self.nvars) {
            return false;
        }
        let mut elements: Vec<Polynomial> = elements.iter().map(Polynomial::monic).collect();
        let lead = |g: &Polynomial| leading_exponent(g, order).expect("nonzero");
        elements.sort_by(|a, b| order.cmp(&lead(b), &lead(a)));
        let gb = GroebnerBasis {
            order: order.clone(),
            leading: elements.iter().map(lead).collect(),
            elements,
            pairs_processed: 0,
        };
        if !s_pairs_not_reducing(&gb).is_empty() || !self.generators.iter().all(|g| gb.contains(g)) {
            return false;
        }
        self.cache.write().expect("gb cache poisoned").insert(order.clone(), Arc::new(gb));
        true
    }

    pub fn generator_strings(&self, vars: &VariableTable) -> Vec<String> {
        self.generators.iter().map(|g| format_polynomial(g, vars)).collect()
    }
}

fn sorted_terms(f: &Polynomial, order: &MonomialOrder) -> Vec<Term> {
    let mut terms = f.terms().to_vec();
    if order.weight.is_some() {
        terms.sort_by(|a, b| order.cmp(&b.exponent, &a.exponent));
    }
    terms
}

/// `a - c * x^e * b`, both inputs sorted descending by `order`.
fn sub_scaled(a: &[Term], c: &Rational, e: &Exponent, b: &[Term], order: &MonomialOrder) -> Vec<Term> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut i = 0;
    let mut bs = b.iter().map(|t| Term { coeff: -(c * &t.coeff), exponent: t.exponent.mul(e) }).peekable();
    while i < a.len() {
        let Some(bt) = bs.peek() else { break };
        match order.cmp(&a[i].exponent, &bt.exponent) {
            Ordering::Greater => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Less => out.push(bs.next().expect("peeked")),
            Ordering::Equal => {
                let bt = bs.next().expect("peeked");
                let s = &a[i].coeff + bt.coeff;
                if !s.is_zero() {
                    out.push(Term { coeff: s, exponent: bt.exponent });
                }
                i += 1;
            }
        }
    }
    out.extend(a[i..].iter().cloned());
    out.extend(bs);
    out
}

/// Full reduction of `p` by `basis` (each sorted and with its leading term first).
fn reduce_sorted(mut p: Vec<Term>, basis: &[Vec<Term>], order: &MonomialOrder) -> Vec<Term> {
    let mut remainder = Vec::new();
    while !p.is_empty() {
        let lead = &p[0];
        let divisor = basis.iter().find_map(|g| {
            lead.exponent.checked_div(&g[0].exponent).map(|q| (g, q))
        });
        match divisor {
            Some((g, q)) => {
                let c = &lead.coeff / &g[0].coeff;
                p = sub_scaled(&p, &c, &q, g, order);
            }
            None => {
                // move the irreducible leading term to the remainder
                let t = p.remove(0);
                remainder.push(t);
            }
        }
    }
    remainder
}

fn make_monic(mut p: Vec<Term>) -> Vec<Term> {
    if let Some(lc) = p.first().map(|t| t.coeff.clone()) {
        if !lc.is_one() {
            let inv = lc.recip();
            for t in &mut p {
                t.coeff *= &inv;
            }
        }
    }
    p
}

fn s_polynomial(f: &[Term], g: &[Term], order: &MonomialOrder) -> Vec<Term> {
    let l = f[0].exponent.lcm(&g[0].exponent);
    let uf = l.checked_div(&f[0].exponent).expect("lcm divisible");
    let ug = l.checked_div(&g[0].exponent).expect("lcm divisible");
    let cf = f[0].coeff.recip();
    let scaled_f: Vec<Term> = f
        .iter()
        .map(|t| Term { coeff: &t.coeff * &cf, exponent: t.exponent.mul(&uf) })
        .collect();
    let cg = g[0].coeff.recip();
    sub_scaled(&scaled_f, &cg, &ug, g, order)
}

/// Remainder of `f` on division by `g` under `order`; no term of the result
/// is divisible by a leading monomial of `g`.
pub fn normal_form(f: &Polynomial, g: &[Polynomial], order: &MonomialOrder) -> Polynomial {
    let basis: Vec<Vec<Term>> = g.iter().filter(|p| !p.is_zero()).map(|p| sorted_terms(p, order)).collect();
    let r = reduce_sorted(sorted_terms(f, order), &basis, order);
    Polynomial::from_terms(f.nvars(), r)
}

/// Leading exponent of `f` under `order`.
pub fn leading_exponent(f: &Polynomial, order: &MonomialOrder) -> Option<Exponent> {
    f.terms().iter().map(|t| &t.exponent).max_by(|a, b| order.cmp(a, b)).cloned()
}

/// Buchberger's algorithm with the product and chain criteria; returns the
/// reduced basis.
pub fn buchberger(
    generators: &[Polynomial],
    nvars: usize,
    order: &MonomialOrder,
    limits: &GbLimits,
) -> Result<GroebnerBasis> {
    let mut basis: Vec<Vec<Term>> = Vec::new();
    for g in generators.iter().filter(|g| !g.is_zero()) {
        let r = reduce_sorted(sorted_terms(g, order), &basis, order);
        if !r.is_empty() {
            basis.push(make_monic(r));
        }
    }
    let mut pending: BTreeMap<(u64, usize, usize), ()> = BTreeMap::new();
    let mut pending_set: HashSet<(usize, usize)> = HashSet::new();
    let pair_key = |basis: &Vec<Vec<Term>>, i: usize, j: usize| {
        (basis[i][0].exponent.lcm(&basis[j][0].exponent).total_degree(), i, j)
    };
    for j in 0..basis.len() {
        for i in 0..j {
            pending.insert(pair_key(&basis, i, j), ());
            pending_set.insert((i, j));
        }
    }
    let mut processed = 0usize;
    while let Some((&(deg, i, j), _)) = pending.iter().next() {
        pending.remove(&(deg, i, j));
        pending_set.remove(&(i, j));
        processed += 1;
        if processed > limits.max_pairs {
            return Err(Error::ResourceLimit(format!("more than {} S-pairs", limits.max_pairs)));
        }
        if deg > limits.max_degree {
            return Err(Error::ResourceLimit(format!("S-pair degree {deg} exceeds cap {}", limits.max_degree)));
        }
        let (li, lj) = (&basis[i][0].exponent, &basis[j][0].exponent);
        if li.coprime(lj) {
            continue;
        }
        let l = li.lcm(lj);
        let chain = (0..basis.len()).any(|k| {
            k != i
                && k != j
                && basis[k][0].exponent.divides(&l)
                && !pending_set.contains(&(i.min(k), i.max(k)))
                && !pending_set.contains(&(j.min(k), j.max(k)))
        });
        if chain {
            continue;
        }
        let s = s_polynomial(&basis[i], &basis[j], order);
        let r = reduce_sorted(s, &basis, order);
        if r.is_empty() {
            continue;
        }
        basis.push(make_monic(r));
        let new = basis.len() - 1;
        for i in 0..new {
            pending.insert(pair_key(&basis, i, new), ());
            pending_set.insert((i, new));
        }
    }

    // minimalize
    let mut keep: Vec<Vec<Term>> = Vec::new();
    for (idx, g) in basis.iter().enumerate() {
        let redundant = basis.iter().enumerate().any(|(k, h)| {
            k != idx
                && h[0].exponent.divides(&g[0].exponent)
                && (h[0].exponent != g[0].exponent || k < idx)
        });
        if !redundant {
            keep.push(g.clone());
        }
    }
    // interreduce
    let mut reduced = Vec::with_capacity(keep.len());
    for idx in 0..keep.len() {
        let others: Vec<Vec<Term>> =
            keep.iter().enumerate().filter(|(k, _)| *k != idx).map(|(_, g)| g.clone()).collect();
        let r = make_monic(reduce_sorted(keep[idx].clone(), &others, order));
        reduced.push(r);
    }
    reduced.sort_by(|a, b| order.cmp(&b[0].exponent, &a[0].exponent));

    let gb = GroebnerBasis {
        order: order.clone(),
        leading: reduced.iter().map(|g| g[0].exponent.clone()).collect(),
        elements: reduced.into_iter().map(|g| Polynomial::from_terms(nvars, g)).collect(),
        pairs_processed: processed,
    };
    if limits.verify {
        let bad = s_pairs_not_reducing(&gb);
        assert!(bad.is_empty(), "Buchberger output failed S-pair check on pairs {bad:?}");
    }
    Ok(gb)
}

/// Pairs `(i, j)` whose S-polynomial does not reduce to zero; empty for a
/// Gröbner basis.
pub fn s_pairs_not_reducing(gb: &GroebnerBasis) -> Vec<(usize, usize)> {
    let order = &gb.order;
    let basis: Vec<Vec<Term>> = gb.elements.iter().map(|p| sorted_terms(p, order)).collect();
    let mut bad = Vec::new();
    for j in 0..basis.len() {
        for i in 0..j {
            let s = s_polynomial(&basis[i], &basis[j], order);
            if !reduce_sorted(s, &basis, order).is_empty() {
                bad.push((i, j));
            }
        }
    }
    bad
}

/// Sum of the terms of `f` with the highest `rho`-weight.
pub fn initial_form(f: &Polynomial, rho: &[i64]) -> Polynomial {
    let Some(top) = f.terms().iter().map(|t| rho_weight(rho, &t.exponent)).max() else {
        return f.clone();
    };
    let terms = f.terms().iter().filter(|t| rho_weight(rho, &t.exponent) == top).cloned().collect();
    Polynomial::from_terms(f.nvars(), terms)
}

/// `I_0 = (ini_rho f | f in I)`, from the initial forms of a reduced basis
/// under the order `(rho, grevlex)`.
pub fn initial_ideal(ideal: &Ideal, rho: &[i64], limits: &GbLimits) -> Result<Ideal> {
    if rho.len() != ideal.nvars {
        return Err(Error::Invalid(format!("rho has {} entries, expected {}", rho.len(), ideal.nvars)));
    }
    let gb = ideal.groebner_basis(&MonomialOrder::weighted(rho.to_vec()), limits)?;
    let gens = gb.elements().iter().map(|g| initial_form(g, rho)).collect();
    Ideal::from_generators(ideal.nvars, gens)
}

/// Result of a successful generic degeneration.
#[derive(Debug, Clone)]
pub struct MonomialDegeneration {
    pub rho: Vec<i64>,
    pub ideal: Ideal,
    pub attempts: u32,
    pub seed: u64,
}

pub const GENERIC_WEIGHT_BOUND: i64 = 1 << 16;

/// Samples `rho` uniformly from `[1, 2^16]^nvars` until every reduced basis
/// element has a single-term initial form; that `ini_rho(I)` is monomial.
pub fn degenerate_to_monomial(ideal: &Ideal, seed: u64, max_attempts: u32, limits: &GbLimits) -> Result<MonomialDegeneration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut witnesses = Vec::new();
    for attempt in 1..=max_attempts {
        let rho: Vec<i64> = (0..ideal.nvars).map(|_| rng.gen_range(1..=GENERIC_WEIGHT_BOUND)).collect();
        let gb = ideal.groebner_basis(&MonomialOrder::weighted(rho.clone()), limits)?;
        let mut tie = None;
        let gens: Vec<Polynomial> = gb
            .elements()
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let ini = initial_form(g, &rho);
                if ini.len() > 1 && tie.is_none() {
                    tie = Some(format!("rho={rho:?}: basis element {k} has {} tied terms", ini.len()));
                }
                ini
            })
            .collect();
        match tie {
            None => {
                return Ok(MonomialDegeneration {
                    rho,
                    ideal: Ideal::from_generators(ideal.nvars, gens)?,
                    attempts: attempt,
                    seed,
                })
            }
            Some(w) => witnesses.push(w),
        }
    }
    Err(Error::RetryCapExhausted { attempts: max_attempts, witnesses })
}

/// Options for [`flat_limit`].
#[derive(Debug, Clone)]
pub struct FlatLimitOptions {
    /// Reeb field defining the truncation window; a default is found when absent.
    pub xi: Option<ReebVector>,
    pub m_check: u32,
    /// Window `<alpha, xi> <= lambda * max(m, 1)`; defaults to four times the Reeb margin.
    pub lambda: Option<f64>,
    pub limits: GbLimits,
    pub budget: u64,
}

impl Default for FlatLimitOptions {
    fn default() -> Self {
        Self { xi: None, m_check: 5, lambda: None, limits: GbLimits::default(), budget: 20_000_000 }
    }
}

/// Evidence that `S/I` and `S/I_0` have equal graded dimensions on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessCertificate {
    pub m_check: u32,
    pub lambda: Option<f64>,
    pub xi: Vec<String>,
    pub entries_compared: usize,
    pub passed: bool,
}

/// A one-parameter degeneration and its central fiber.
#[derive(Debug, Clone)]
pub struct DegenerationSpec {
    pub rho: Vec<i64>,
    pub source: Ideal,
    pub central: Ideal,
    /// Per-variable weights `(alpha_v, rho_v)` for the torus `T x C^*`.
    pub extended_weights: Vec<Vec<i64>>,
    pub certificate: FlatnessCertificate,
}

/// Window used for flatness certificates when none is given.
pub fn default_certificate_window(setup: &WeightedSetup, xi: &ReebVector) -> Result<Option<f64>> {
    let check = setup.require_reeb(xi)?;
    if setup.vars().affine_indices().next().is_none() {
        return Ok(None);
    }
    Ok(Some(4.0 * check.margin))
}

/// Compares two tables entry by entry; returns the first mismatch.
pub fn compare_tables(a: &GradedDimTable, b: &GradedDimTable) -> Option<(u32, Vec<i64>, u64, u64)> {
    let keys: std::collections::BTreeSet<_> = a.entries.keys().chain(b.entries.keys()).collect();
    for k in keys {
        let (da, db) = (a.entries.get(k).copied().unwrap_or(0), b.entries.get(k).copied().unwrap_or(0));
        if da != db {
            return Some((k.0, k.1.clone(), da, db));
        }
    }
    None
}

/// Central fiber of the degeneration along `rho` with a flatness certificate.
pub fn flat_limit(ideal: &Ideal, rho: &[i64], setup: &WeightedSetup, opts: &FlatLimitOptions) -> Result<DegenerationSpec> {
    ideal.check_homogeneous(setup)?;
    let central = initial_ideal(ideal, rho, &opts.limits)?;
    let extended = setup.extended(rho)?;
    central.check_homogeneous(&extended)?;
    let xi = match &opts.xi {
        Some(x) => x.clone(),
        None => setup.find_reeb_vector().ok_or(crate::grading::GradingError::EmptyReebCone)?,
    };
    let lambda = match opts.lambda {
        Some(l) => Some(l),
        None => default_certificate_window(setup, &xi)?,
    };
    let t_source = graded_dims(ideal, setup, &xi, opts.m_check, lambda, opts.budget, &opts.limits)?;
    let t_central = graded_dims(&central, setup, &xi, opts.m_check, lambda, opts.budget, &opts.limits)?;
    if let Some((m, alpha, source_dim, central_dim)) = compare_tables(&t_source, &t_central) {
        return Err(Error::FlatnessViolated { m, alpha, source_dim, central_dim });
    }
    let entries_compared = t_source.entries.len();
    Ok(DegenerationSpec {
        rho: rho.to_vec(),
        source: ideal.clone(),
        central,
        extended_weights: extended.weights().to_vec(),
        certificate: FlatnessCertificate {
            m_check: opts.m_check,
            lambda,
            xi: xi.to_strings(),
            entries_compared,
            passed: true,
        },
    })
}
