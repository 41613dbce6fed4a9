//! Closed-form evaluation of the weighted sums `sum_alpha dim (S/I)_{m,alpha} e^{-<alpha,xi>/(p m)}`.
//!
//! The multigraded Hilbert series of `S/J` for a monomial ideal `J` is
//! `K(s, T) / (prod_x (1 - s T^{wt x}) prod_y (1 - T^{wt y}))`, where the
//! numerator `K` has integer coefficients. `S/I` and `S/LT(I)` share it.
//! Taking the coefficient of `s^m` and substituting `T = e^{-xi/(p m)}`
//! turns the infinite sum into finitely many exponentials, which makes
//! large `m` cheap and exact up to floating-point rounding.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::grading::WeightedSetup;
use crate::groebner::{GbLimits, Ideal, MonomialOrder};
use crate::polyalg::Exponent;

/// First-order forward-mode dual number `v + d*eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Self { v, d: 0.0 }
    }

    pub fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        Self { v: e, d: e * self.d }
    }

    /// `e^x - 1` without cancellation near zero.
    pub fn exp_m1(self) -> Self {
        Self { v: self.v.exp_m1(), d: self.v.exp() * self.d }
    }

    pub fn recip(self) -> Self {
        Self { v: 1.0 / self.v, d: -self.d / (self.v * self.v) }
    }

    pub fn scale(self, c: f64) -> Self {
        Self { v: self.v * c, d: self.d * c }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.v * o.d + self.d * o.v }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        self * o.recip()
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual { v: -self.v, d: -self.d }
    }
}

/// Coarse degree: x-degree and torus weight.
pub type CoarseDegree = (u32, Vec<i64>);

/// Numerator `K(s, T) = sum c_{d,alpha} s^d T^alpha` of the Hilbert series of `S/I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertNumerator {
    pub coefficients: BTreeMap<CoarseDegree, i128>,
}

type Coarse = BTreeMap<CoarseDegree, i128>;

fn coarse_one(k: usize) -> Coarse {
    BTreeMap::from([((0, vec![0; k]), 1)])
}

fn coarse_degree(setup: &WeightedSetup, e: &Exponent) -> CoarseDegree {
    (e.x_degree(setup.vars()), setup.monomial_weight(e))
}

fn add_into(acc: &mut Coarse, deg: CoarseDegree, c: i128) -> Result<()> {
    let slot = acc.entry(deg).or_insert(0);
    *slot = slot.checked_add(c).ok_or(Error::Overflow("Hilbert numerator"))?;
    Ok(())
}

fn shift(p: &Coarse, by: &CoarseDegree, sign: i128) -> Result<Coarse> {
    let mut out = Coarse::new();
    for ((d, a), &c) in p {
        let deg = (d + by.0, a.iter().zip(&by.1).map(|(x, y)| x + y).collect());
        add_into(&mut out, deg, c.checked_mul(sign).ok_or(Error::Overflow("Hilbert numerator"))?)?;
    }
    Ok(out)
}

fn merge(mut a: Coarse, b: &Coarse) -> Result<Coarse> {
    for (deg, &c) in b {
        add_into(&mut a, deg.clone(), c)?;
    }
    a.retain(|_, c| *c != 0);
    Ok(a)
}

fn minimize(mut gens: Vec<Exponent>) -> Vec<Exponent> {
    gens.sort_by_key(|g| g.total_degree());
    gens.dedup();
    let mut out: Vec<Exponent> = Vec::new();
    for g in gens {
        if !out.iter().any(|h| h.divides(&g)) {
            out.push(g);
        }
    }
    out
}

/// Pivot recursion `K(J) = K(J + x^a) + t^{x^a} K(J : x^a)`, done directly in the coarse grading.
fn k_poly(setup: &WeightedSetup, gens: Vec<Exponent>, depth: u32) -> Result<Coarse> {
    let k = setup.torus_rank();
    let gens = minimize(gens);
    if gens.is_empty() {
        return Ok(coarse_one(k));
    }
    if gens.iter().any(Exponent::is_one) {
        return Ok(Coarse::new());
    }
    if depth > 10_000 {
        return Err(Error::ResourceLimit("Hilbert numerator recursion too deep".into()));
    }
    let nvars = setup.nvars();
    let mut counts = vec![0usize; nvars];
    for g in &gens {
        for v in g.support() {
            counts[v] += 1;
        }
    }
    let (pivot_var, &most) = counts.iter().enumerate().max_by_key(|(v, c)| (**c, std::cmp::Reverse(*v))).expect("nonempty");
    if most <= 1 {
        let mut acc = coarse_one(k);
        for g in &gens {
            let minus = shift(&acc, &coarse_degree(setup, g), -1)?;
            acc = merge(acc, &minus)?;
        }
        return Ok(acc);
    }
    // exponent of the pivot: the smallest positive power among the generators using it
    let a = gens.iter().map(|g| g.as_slice()[pivot_var]).filter(|&p| p > 0).min().expect("pivot appears");
    let mut pivot = vec![0u32; nvars];
    pivot[pivot_var] = a;
    let pivot = Exponent::new(pivot);
    let mut plus = gens.clone();
    plus.push(pivot.clone());
    let colon: Vec<Exponent> = gens
        .iter()
        .map(|g| {
            let mut e = g.as_slice().to_vec();
            e[pivot_var] = e[pivot_var].saturating_sub(a);
            Exponent::new(e)
        })
        .collect();
    let left = k_poly(setup, plus, depth + 1)?;
    let right = shift(&k_poly(setup, colon, depth + 1)?, &coarse_degree(setup, &pivot), 1)?;
    merge(left, &right)
}

impl HilbertNumerator {
    /// Numerator of the monomial ideal generated by `leads`.
    pub fn of_monomials(setup: &WeightedSetup, leads: &[Exponent]) -> Result<Self> {
        Ok(Self { coefficients: k_poly(setup, leads.to_vec(), 0)? })
    }

    /// Numerator of `S/I` via the grevlex leading-term ideal.
    pub fn of_ideal(ideal: &Ideal, setup: &WeightedSetup, limits: &GbLimits) -> Result<Self> {
        let gb = ideal.groebner_basis(&MonomialOrder::grevlex(), limits)?;
        Self::of_monomials(setup, gb.leading_monomials())
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `Z_m(xi + t eta)` and its `t`-derivative at `t = 0`.
    pub fn z(&self, setup: &WeightedSetup, xi: &[f64], eta: &[f64], m: u32) -> Dual {
        let s = setup.p() as f64 * m.max(1) as f64;
        let pairing = |w: &[i64]| {
            let v: f64 = w.iter().zip(xi).map(|(&a, &x)| a as f64 * x).sum();
            let d: f64 = w.iter().zip(eta).map(|(&a, &x)| a as f64 * x).sum();
            Dual::new(v / s, d / s)
        };
        let h = complete_symmetric(setup, &pairing, m);
        let mut affine = Dual::constant(1.0);
        for j in setup.vars().affine_indices() {
            // 1/(1 - e^{-a}) = -1/expm1(-a)
            affine = affine * (-(-pairing(setup.weight(j))).exp_m1()).recip();
        }
        let mut total = Dual::constant(0.0);
        for ((d, alpha), &c) in &self.coefficients {
            if *d > m {
                continue;
            }
            let term = (-pairing(alpha)).exp() * h[(m - d) as usize];
            total = total + term.scale(c as f64);
        }
        total * affine
    }
}

/// `h_j(z_x)` for `j = 0..=m`, `z_x = e^{-<wt x, xi>/(p m)}`.
fn complete_symmetric(setup: &WeightedSetup, pairing: &dyn Fn(&[i64]) -> Dual, m: u32) -> Vec<Dual> {
    let mut h = vec![Dual::constant(0.0); m as usize + 1];
    h[0] = Dual::constant(1.0);
    for v in setup.vars().projective_indices() {
        let z = (-pairing(setup.weight(v))).exp();
        for j in 1..=m as usize {
            h[j] = h[j] + z * h[j - 1];
        }
    }
    h
}

/// `Z_m` of the free ring `S`: `h_m(z_x) prod_y (1 - z_y)^{-1}`.
pub fn free_ring_z(setup: &WeightedSetup, xi: &[f64], m: u32) -> f64 {
    let one = HilbertNumerator { coefficients: coarse_one(setup.torus_rank()) };
    one.z(setup, xi, &vec![0.0; xi.len()], m).v
}
