//! Weight-graded dimensions of `S/I` by counting standard monomials, Krull
//! dimension, and the coordinate-plane components of monomial ideals.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grading::{ReebVector, WeightedSetup};
use crate::groebner::{GbLimits, Ideal, MonomialOrder};
use crate::polyalg::{Exponent, Polynomial, Rational};
use crate::series::free_ring_z;

/// Shrinking factor in the tail estimate `e^{-a} <= e^{-theta*L} e^{-(1-theta)a}` for `a > L`.
const TAIL_THETA: f64 = 0.5;

/// Relative size of the neglected tail that the default window aims for.
pub const DEFAULT_TAIL_RATIO: f64 = 1e-8;

/// `(m, alpha) -> dim (S/I)_{m,alpha}` on the window `<alpha, xi> <= lambda * max(m, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedDimTable {
    pub entries: BTreeMap<(u32, Vec<i64>), u64>,
    pub m_max: u32,
    /// `None` means no truncation (projective variables only).
    pub lambda: Option<f64>,
    pub xi: Vec<f64>,
    /// Upper bound on `sum_{m <= m_max} (p m)^{-n} sum_{alpha outside window} dim * e^{-<alpha,xi>/(p m)}`.
    pub tail_bound: f64,
    /// The same sum over the entries that were kept.
    pub included_mass: f64,
    /// Per-degree share of `tail_bound`.
    pub degree_tails: BTreeMap<u32, f64>,
}

impl GradedDimTable {
    /// Sum of the dimensions in x-degree `m`.
    pub fn total(&self, m: u32) -> u64 {
        self.entries.range((m, Vec::new())..).take_while(|((d, _), _)| *d == m).map(|(_, v)| v).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &[i64], u64)> + '_ {
        self.entries.iter().map(|((m, a), d)| (*m, a.as_slice(), *d))
    }

    /// `(p m)^{-n} sum_alpha dim * e^{-<alpha, xi>/(p m)}` over the kept entries of degree `m`.
    pub fn weighted_sum(&self, m: u32, xi: &[f64], p: u32, n: u32) -> f64 {
        let s = p as f64 * m.max(1) as f64;
        let sum: f64 = self
            .entries
            .range((m, Vec::new())..)
            .take_while(|((d, _), _)| *d == m)
            .map(|((_, a), &dim)| dim as f64 * (-dot(a, xi) / s).exp())
            .sum();
        sum * s.powi(-(n as i32))
    }

    /// `(p m)^{-n} sum_alpha dim * <alpha, eta>/(p m) * e^{-<alpha, xi>/(p m)}` over the kept entries.
    pub fn futaki_sum(&self, m: u32, xi: &[f64], eta: &[f64], p: u32, n: u32) -> f64 {
        let s = p as f64 * m.max(1) as f64;
        let sum: f64 = self
            .entries
            .range((m, Vec::new())..)
            .take_while(|((d, _), _)| *d == m)
            .map(|((_, a), &dim)| dim as f64 * dot(a, eta) / s * (-dot(a, xi) / s).exp())
            .sum();
        sum * s.powi(-(n as i32))
    }

    pub fn tail_for(&self, _setup: &WeightedSetup, m: u32) -> f64 {
        self.degree_tails.get(&m).copied().unwrap_or(0.0)
    }
}

fn dot(a: &[i64], xi: &[f64]) -> f64 {
    a.iter().zip(xi).map(|(&a, &x)| a as f64 * x).sum()
}

/// Bound on the part of the free-ring sum in degree `m` beyond `<alpha,xi> > lambda*max(m,1)`,
/// normalized by `(p m)^{-n}`.
pub fn free_tail_bound(setup: &WeightedSetup, xi: &[f64], m: u32, lambda: f64) -> f64 {
    let s = setup.p() as f64 * m.max(1) as f64;
    let shrunk: Vec<f64> = xi.iter().map(|x| x * (1.0 - TAIL_THETA)).collect();
    let z = free_ring_z(setup, &shrunk, m);
    (-TAIL_THETA * lambda / setup.p() as f64).exp() * z * s.powi(-(setup.n() as i32))
}

/// Smallest window, up to a factor 1.05, whose free-ring tail is below
/// `ratio` times the free-ring mass in every degree `m <= m_max`.
pub fn default_lambda(setup: &WeightedSetup, xi: &ReebVector, degrees: &[u32], ratio: f64) -> Result<f64> {
    let check = setup.require_reeb(xi)?;
    let xs = xi.values();
    let mut lambda = check.margin.max(1e-3);
    for _ in 0..2000 {
        let ok = degrees.iter().all(|&m| {
            let s = setup.p() as f64 * m.max(1) as f64;
            let full = free_ring_z(setup, xs, m) * s.powi(-(setup.n() as i32));
            free_tail_bound(setup, xs, m, lambda) <= ratio * full
        });
        if ok {
            return Ok(lambda);
        }
        lambda *= 1.05;
    }
    Err(Error::ResourceLimit("no truncation window reaches the requested tail ratio".into()))
}

struct Enumerator<'a> {
    setup: &'a WeightedSetup,
    leads: &'a [Exponent],
    xi: &'a [f64],
    proj: Vec<usize>,
    aff: Vec<usize>,
    counter: &'a AtomicU64,
    budget: u64,
}

impl Enumerator<'_> {
    fn divisible(&self, e: &[u32]) -> bool {
        self.leads.iter().any(|l| l.as_slice().iter().zip(e).all(|(a, b)| a <= b))
    }

    fn weight_dot(&self, e: &[u32]) -> f64 {
        let mut acc = 0.0;
        for (v, &p) in e.iter().enumerate() {
            if p > 0 {
                acc += p as f64 * dot(self.setup.weight(v), self.xi);
            }
        }
        acc
    }

    fn tick(&self) -> Result<()> {
        if self.counter.fetch_add(1, AtomicOrdering::Relaxed) >= self.budget {
            return Err(Error::ResourceLimit(format!("enumeration budget of {} monomials exceeded", self.budget)));
        }
        Ok(())
    }

    /// All standard monomials of x-degree `m` inside the window, bucketed by weight.
    fn degree(&self, m: u32, bound: Option<f64>) -> Result<BTreeMap<Vec<i64>, u64>> {
        let mut out = BTreeMap::new();
        let mut e = vec![0u32; self.setup.nvars()];
        self.projective(0, m, &mut e, bound, &mut out)?;
        Ok(out)
    }

    fn projective(&self, i: usize, left: u32, e: &mut Vec<u32>, bound: Option<f64>, out: &mut BTreeMap<Vec<i64>, u64>) -> Result<()> {
        if self.divisible(e) {
            return Ok(());
        }
        if i + 1 == self.proj.len() {
            let v = self.proj[i];
            e[v] = left;
            let r = if self.divisible(e) { Ok(()) } else { self.affine(0, e, bound, out) };
            e[v] = 0;
            return r;
        }
        let v = self.proj[i];
        for k in 0..=left {
            e[v] = k;
            self.projective(i + 1, left - k, e, bound, out)?;
        }
        e[v] = 0;
        Ok(())
    }

    fn affine(&self, j: usize, e: &mut Vec<u32>, bound: Option<f64>, out: &mut BTreeMap<Vec<i64>, u64>) -> Result<()> {
        if j == self.aff.len() {
            let w = self.setup.monomial_weight(&Exponent::new(e.clone()));
            // membership depends on alpha alone, so every monomial of one weight agrees
            if let Some(b) = bound {
                let pairing = dot(&w, self.xi);
                if pairing > b + 1e-10 * (1.0 + b.abs()) {
                    return Ok(());
                }
            }
            self.tick()?;
            *out.entry(w).or_insert(0) += 1;
            return Ok(());
        }
        let v = self.aff[j];
        let slack = bound.map(|b| b + 1e-9 * (1.0 + b.abs()));
        loop {
            if let Some(s) = slack {
                if self.weight_dot(e) > s {
                    break;
                }
            } else if e[v] > 0 {
                unreachable!("affine variables always come with a window");
            }
            if self.divisible(e) {
                break;
            }
            self.affine(j + 1, e, bound, out)?;
            e[v] += 1;
        }
        e[v] = 0;
        Ok(())
    }
}

/// Exact `dim (S/I)_{m,alpha}` for `m <= m_max` and `<alpha,xi> <= lambda*max(m,1)`,
/// counted as standard monomials of a grevlex basis. `lambda = None` picks
/// the default window, or none at all when every variable is projective.
pub fn graded_dims(
    ideal: &Ideal,
    setup: &WeightedSetup,
    xi: &ReebVector,
    m_max: u32,
    lambda: Option<f64>,
    budget: u64,
    limits: &GbLimits,
) -> Result<GradedDimTable> {
    let degrees: Vec<u32> = (0..=m_max).collect();
    graded_dims_at(ideal, setup, xi, &degrees, lambda, budget, limits)
}

/// [`graded_dims`] restricted to the listed x-degrees.
pub fn graded_dims_at(
    ideal: &Ideal,
    setup: &WeightedSetup,
    xi: &ReebVector,
    degrees: &[u32],
    lambda: Option<f64>,
    budget: u64,
    limits: &GbLimits,
) -> Result<GradedDimTable> {
    let m_max = degrees.iter().copied().max().unwrap_or(0);
    setup.require_reeb(xi)?;
    if ideal.nvars() != setup.nvars() {
        return Err(Error::VariableCount { expected: setup.nvars(), got: ideal.nvars() });
    }
    let has_affine = setup.vars().affine_indices().next().is_some();
    let gb = ideal.groebner_basis(&MonomialOrder::grevlex(), limits)?;
    let leads = gb.leading_monomials();
    let xs = xi.values();
    let counter = AtomicU64::new(0);
    let en = Enumerator {
        setup,
        leads,
        xi: xs,
        proj: setup.vars().projective_indices().collect(),
        aff: setup.vars().affine_indices().collect(),
        counter: &counter,
        budget,
    };
    let (mut lambda, auto) = match lambda {
        Some(l) if has_affine && !(l.is_finite() && l > 0.0) => {
            return Err(Error::Invalid(format!("truncation window must be positive, got {l}")))
        }
        Some(l) => (Some(l), false),
        None if has_affine => (Some(default_lambda(setup, xi, degrees, DEFAULT_TAIL_RATIO)?), true),
        None => (None, false),
    };
    loop {
        let per_degree: Vec<(u32, BTreeMap<Vec<i64>, u64>)> = degrees
            .par_iter()
            .copied()
            .map(|m| en.degree(m, lambda.map(|l| l * m.max(1) as f64)).map(|t| (m, t)))
            .collect::<Result<_>>()?;
        let mut entries = BTreeMap::new();
        let mut degree_tails = BTreeMap::new();
        for (m, t) in per_degree {
            for (a, d) in t {
                entries.insert((m, a), d);
            }
            degree_tails.insert(m, lambda.map_or(0.0, |l| free_tail_bound(setup, xs, m, l)));
        }
        let tail_bound = degree_tails.values().sum();
        let mut table =
            GradedDimTable { entries, m_max, lambda, xi: xs.to_vec(), tail_bound, included_mass: 0.0, degree_tails };
        table.included_mass = degrees.iter().map(|&m| table.weighted_sum(m, xs, setup.p(), setup.n())).sum();
        // a small quotient can make the free-ring tail large relative to what was kept
        match lambda {
            Some(l) if auto && table.tail_bound > DEFAULT_TAIL_RATIO * table.included_mass && table.included_mass > 0.0 => {
                let factor = table.tail_bound / (DEFAULT_TAIL_RATIO * table.included_mass);
                lambda = Some(l + 1.0 + factor.ln() * setup.p() as f64 / TAIL_THETA);
                counter.store(0, AtomicOrdering::Relaxed);
            }
            _ => return Ok(table),
        }
    }
}

/// Krull dimension of `S/I` (the affine cone in `C^{N1+1} x C^{N2}`); `-1` for the unit ideal.
pub fn krull_dim(ideal: &Ideal, limits: &GbLimits) -> Result<i64> {
    let gb = ideal.groebner_basis(&MonomialOrder::grevlex(), limits)?;
    Ok(monomial_krull_dim(gb.leading_monomials(), ideal.nvars()))
}

fn monomial_krull_dim(leads: &[Exponent], nvars: usize) -> i64 {
    if leads.iter().any(Exponent::is_one) {
        return -1;
    }
    let supports: Vec<u64> = leads.iter().map(support_mask).collect();
    let min_cover = minimal_hitting_sets(&supports).iter().map(|c| c.count_ones()).min().unwrap_or(0);
    nvars as i64 - min_cover as i64
}

fn support_mask(e: &Exponent) -> u64 {
    assert!(e.len() <= 64, "at most 64 variables are supported");
    e.support().fold(0u64, |m, v| m | (1 << v))
}

/// Inclusion-minimal variable sets meeting every support.
pub fn minimal_hitting_sets(supports: &[u64]) -> Vec<u64> {
    fn go(supports: &[u64], chosen: u64, out: &mut Vec<u64>) {
        match supports.iter().find(|&&s| s & chosen == 0) {
            None => out.push(chosen),
            Some(&s) => {
                let mut bits = s;
                while bits != 0 {
                    let b = bits & bits.wrapping_neg();
                    bits ^= b;
                    go(supports, chosen | b, out);
                }
            }
        }
    }
    let mut all = Vec::new();
    go(supports, 0, &mut all);
    all.sort_unstable();
    all.dedup();
    let minimal: Vec<u64> =
        all.iter().copied().filter(|&c| !all.iter().any(|&d| d != c && d & c == d)).collect();
    minimal
}

/// One minimal prime `(y_v : v in zero_variables)` of a monomial ideal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportComponent {
    pub zero_variables: Vec<usize>,
    pub surviving: Vec<usize>,
    pub dim: usize,
    /// Length of the localization; `None` off the top dimension.
    pub multiplicity: Option<u64>,
    pub top_dimensional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportReport {
    pub krull_dim: i64,
    pub components: Vec<SupportComponent>,
}

fn minimal_monomials(ideal: &Ideal) -> Result<Vec<Exponent>> {
    if !ideal.is_monomial() {
        return Err(Error::NotMonomial("decomposition needs single-term generators".into()));
    }
    let gens: Vec<Exponent> = ideal.generators().iter().map(|g| g.terms()[0].exponent.clone()).collect();
    let mut out: Vec<Exponent> = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        let redundant = gens.iter().enumerate().any(|(j, h)| j != i && h.divides(g) && (h != g || j < i));
        if !redundant {
            out.push(g.clone());
        }
    }
    Ok(out)
}

/// Coordinate-plane components of `Spec(S/J)` for a monomial ideal, with
/// multiplicities on the top-dimensional ones.
pub fn decompose_monomial_support(ideal: &Ideal) -> Result<SupportReport> {
    let nvars = ideal.nvars();
    let gens = minimal_monomials(ideal)?;
    let krull = monomial_krull_dim(&gens, nvars);
    if krull < 0 {
        return Ok(SupportReport { krull_dim: krull, components: Vec::new() });
    }
    let supports: Vec<u64> = gens.iter().map(support_mask).collect();
    let mut components = Vec::new();
    for cover in minimal_hitting_sets(&supports) {
        let zero: Vec<usize> = (0..nvars).filter(|v| cover & (1 << v) != 0).collect();
        let surviving: Vec<usize> = (0..nvars).filter(|v| cover & (1 << v) == 0).collect();
        let dim = surviving.len();
        let top = dim as i64 == krull;
        let multiplicity = if top { Some(local_length(&gens, &zero)?) } else { None };
        components.push(SupportComponent { zero_variables: zero, surviving, dim, multiplicity, top_dimensional: top });
    }
    Ok(SupportReport { krull_dim: krull, components })
}

/// Number of monomials in the `zero` variables outside `J` with the other variables set to 1.
fn local_length(gens: &[Exponent], zero: &[usize]) -> Result<u64> {
    let restricted: Vec<Vec<u32>> = gens.iter().map(|g| zero.iter().map(|&v| g.as_slice()[v]).collect()).collect();
    let mut caps = Vec::with_capacity(zero.len());
    for i in 0..zero.len() {
        let pure = restricted
            .iter()
            .filter(|r| r.iter().enumerate().all(|(j, &p)| j == i || p == 0))
            .map(|r| r[i])
            .min()
            .ok_or_else(|| Error::Invalid("component is not a minimal prime".into()))?;
        caps.push(pure);
    }
    fn count(i: usize, e: &mut Vec<u32>, caps: &[u32], gens: &[Vec<u32>]) -> u64 {
        if gens.iter().any(|g| g.iter().zip(e.iter()).all(|(a, b)| a <= b)) {
            return 0;
        }
        if i == caps.len() {
            return 1;
        }
        let mut total = 0;
        for k in 0..caps[i] {
            e[i] = k;
            total += count(i + 1, e, caps, gens);
        }
        e[i] = 0;
        total
    }
    Ok(count(0, &mut vec![0; zero.len()], &caps, &restricted))
}

/// Squarefree parts of the generators of a monomial ideal.
pub fn radical_monomial(ideal: &Ideal) -> Result<Ideal> {
    let gens = minimal_monomials(ideal)?;
    let sq = gens
        .iter()
        .map(|g| {
            let e = Exponent::new(g.as_slice().iter().map(|&p| p.min(1)).collect());
            Polynomial::monomial(Rational::from_integer(1.into()), e)
        })
        .collect();
    let r = Ideal::from_generators(ideal.nvars(), sq)?;
    let min = minimal_monomials(&r)?;
    Ideal::from_generators(ideal.nvars(), min.into_iter().map(|e| Polynomial::monomial(Rational::from_integer(1.into()), e)).collect())
}

/// The prime `(y_v : v in vars)`.
pub fn plane_ideal(nvars: usize, vars: &[usize]) -> Ideal {
    let gens = vars.iter().map(|&v| Polynomial::var(v, nvars)).collect();
    Ideal::from_generators(nvars, gens).expect("variables share one table")
}
