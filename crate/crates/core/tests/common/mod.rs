//! Oracles and generators shared by the integration tests.
//!
//! Nothing here calls into the Gröbner or Hilbert code: graded dimensions are
//! recomputed by linear algebra on monomial multiples of the generators, and
//! volumes come from closed-form geometric series.

#![allow(dead_code)]

pub mod schema;

use std::collections::BTreeMap;
use std::path::PathBuf;

use kstab::cli::problem::Problem;
use kstab::polyalg::{rat, Term};
use kstab::{Exponent, GbLimits, Ideal, Polynomial, Rational, ReebVector, VarKind, VariableTable, WeightedSetup};
use num_traits::{One, Zero};
use rand::Rng;

pub fn problems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems")
}

pub fn problem_path(name: &str) -> PathBuf {
    problems_dir().join(format!("{name}.json"))
}

pub fn load_problem(name: &str) -> Problem {
    let text = std::fs::read_to_string(problem_path(name)).expect("problem file");
    Problem::from_json(&text, &GbLimits::default()).expect("valid problem")
}

/// Every bundled problem, sorted by name.
pub fn corpus() -> Vec<(String, Problem)> {
    let mut names: Vec<String> = std::fs::read_dir(problems_dir())
        .expect("problems dir")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "json").then(|| p.file_stem()?.to_str().map(String::from))?
        })
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), load_problem(&n))).collect()
}

pub fn setup(vars: &[(&str, VarKind, Vec<i64>)], p: u32, n: u32) -> WeightedSetup {
    let table = VariableTable::new(vars.iter().map(|(name, kind, _)| (name.to_string(), *kind))).unwrap();
    let k = vars[0].2.len();
    WeightedSetup::new(table, k, vars.iter().map(|v| v.2.clone()).collect(), p, n).unwrap()
}

/// `P^0 x C^n` with `x0` of weight `-(1,...,1)` and `y_i` of weight `e_i`:
/// `W(xi) = exp(sum xi) / prod xi`.
pub fn cn_setup(n: usize) -> WeightedSetup {
    let mut vars = vec![("x0".to_string(), VarKind::Projective, vec![-1; n])];
    for i in 0..n {
        let mut w = vec![0; n];
        w[i] = 1;
        vars.push((format!("y{}", i + 1), VarKind::Affine, w));
    }
    let borrowed: Vec<(&str, VarKind, Vec<i64>)> = vars.iter().map(|(a, b, c)| (a.as_str(), *b, c.clone())).collect();
    setup(&borrowed, 1, n as u32)
}

pub fn cn_volume(xi: &[f64]) -> f64 {
    xi.iter().sum::<f64>().exp() / xi.iter().product::<f64>()
}

/// `dW/dxi_i` of [`cn_volume`].
pub fn cn_volume_partial(xi: &[f64], i: usize) -> f64 {
    cn_volume(xi) * (1.0 - 1.0 / xi[i])
}

fn weight_of(setup: &WeightedSetup, e: &[u32]) -> Vec<i64> {
    setup.monomial_weight(&Exponent::new(e.to_vec()))
}

fn x_degree(setup: &WeightedSetup, e: &[u32]) -> u32 {
    setup.vars().projective_indices().map(|i| e[i]).sum()
}

/// All monomials of x-degree `m` with `<wt, xi> <= bound`, by depth-first search.
/// Affine variables must pair positively with `xi`.
pub fn monomials_up_to(setup: &WeightedSetup, xi: &[f64], m: u32, bound: f64) -> Vec<Vec<u32>> {
    let n = setup.nvars();
    let pair = |i: usize| setup.weight(i).iter().zip(xi).map(|(&w, &x)| w as f64 * x).sum::<f64>();
    let pairs: Vec<f64> = (0..n).map(pair).collect();
    let proj: Vec<usize> = setup.vars().projective_indices().collect();
    let aff: Vec<usize> = setup.vars().affine_indices().collect();
    let mut out = Vec::new();
    let mut e = vec![0u32; n];

    fn affine(k: usize, aff: &[usize], pairs: &[f64], room: f64, e: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == aff.len() {
            out.push(e.clone());
            return;
        }
        let v = aff[k];
        let mut p = 0;
        loop {
            let used = p as f64 * pairs[v];
            if used > room + 1e-9 {
                break;
            }
            e[v] = p;
            affine(k + 1, aff, pairs, room - used, e, out);
            p += 1;
        }
        e[v] = 0;
    }

    fn projective(
        k: usize,
        left: u32,
        proj: &[usize],
        aff: &[usize],
        pairs: &[f64],
        room: f64,
        e: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if k + 1 >= proj.len() {
            if let Some(&v) = proj.get(k) {
                e[v] = left;
                affine(0, aff, pairs, room - left as f64 * pairs[v], e, out);
                e[v] = 0;
            } else if left == 0 {
                affine(0, aff, pairs, room, e, out);
            }
            return;
        }
        let v = proj[k];
        for p in 0..=left {
            e[v] = p;
            projective(k + 1, left - p, proj, aff, pairs, room - p as f64 * pairs[v], e, out);
        }
        e[v] = 0;
    }

    projective(0, m, &proj, &aff, &pairs, bound, &mut e, &mut out);
    out
}

/// Rank over Q by Gaussian elimination.
pub fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(rank, piv);
        let inv = Rational::one() / &rows[rank][c];
        let pivot_row: Vec<Rational> = rows[rank].iter().map(|x| x * &inv).collect();
        for r in (rank + 1)..rows.len() {
            if rows[r][c].is_zero() {
                continue;
            }
            let f = rows[r][c].clone();
            for (x, y) in rows[r].iter_mut().zip(&pivot_row).skip(c) {
                *x -= &f * y;
            }
        }
        rows[rank] = pivot_row;
        rank += 1;
    }
    rank
}

/// `dim (S/I)_{m,alpha}` for `m <= m_max` and `<alpha, xi> <= lambda * max(m, 1)`,
/// as `#monomials - rank span{t * g}` over the monomials `t` that land in the
/// same degree. Zero entries are omitted.
pub fn rank_oracle_table(
    generators: &[Polynomial],
    setup: &WeightedSetup,
    xi: &[f64],
    m_max: u32,
    lambda: f64,
) -> BTreeMap<(u32, Vec<i64>), u64> {
    let mut table = BTreeMap::new();
    for m in 0..=m_max {
        let bound = lambda * m.max(1) as f64;
        let mut groups: BTreeMap<Vec<i64>, Vec<Vec<u32>>> = BTreeMap::new();
        for e in monomials_up_to(setup, xi, m, bound) {
            groups.entry(weight_of(setup, &e)).or_default().push(e);
        }
        for (alpha, basis) in groups {
            let pairing: f64 = alpha.iter().zip(xi).map(|(&a, &x)| a as f64 * x).sum();
            if pairing > bound + 1e-10 * (1.0 + bound.abs()) {
                continue;
            }
            let index: BTreeMap<&Vec<u32>, usize> = basis.iter().enumerate().map(|(i, e)| (e, i)).collect();
            let mut rows = Vec::new();
            for g in generators {
                let lead = g.terms()[0].exponent.as_slice();
                let (gm, ga) = (x_degree(setup, lead), weight_of(setup, lead));
                if gm > m {
                    continue;
                }
                // multipliers t with deg t = (m - gm, alpha - ga): every t * g lies in `basis`
                // because t * g is homogeneous of the target degree
                let target: Vec<i64> = alpha.iter().zip(&ga).map(|(a, b)| a - b).collect();
                let tb: f64 = target.iter().zip(xi).map(|(&a, &x)| a as f64 * x).sum();
                for t in monomials_up_to(setup, xi, m - gm, tb) {
                    if weight_of(setup, &t) != target {
                        continue;
                    }
                    let mut row = vec![Rational::zero(); basis.len()];
                    for term in g.terms() {
                        let prod: Vec<u32> = term.exponent.as_slice().iter().zip(&t).map(|(a, b)| a + b).collect();
                        let col = index[&prod];
                        row[col] += &term.coeff;
                    }
                    rows.push(row);
                }
            }
            let dim = basis.len() - rational_rank(rows);
            if dim > 0 {
                table.insert((m, alpha), dim as u64);
            }
        }
    }
    table
}

/// Homogeneous random input for the flatness experiments.
#[derive(Debug, Clone)]
pub struct RandomCase {
    pub setup: WeightedSetup,
    pub generators: Vec<Polynomial>,
    pub ideal: Ideal,
    pub rho: Vec<i64>,
    pub xi: ReebVector,
}

/// Small gradings in at most four variables where weight spaces are large
/// enough for non-monomial homogeneous polynomials.
pub fn random_setups() -> Vec<(WeightedSetup, Vec<f64>)> {
    use VarKind::{Affine, Projective};
    vec![
        (setup(&[("x0", Projective, vec![0]), ("y1", Affine, vec![1]), ("y2", Affine, vec![1]), ("y3", Affine, vec![1])], 1, 1), vec![1.0]),
        (setup(&[("x0", Projective, vec![0]), ("x1", Projective, vec![0]), ("y1", Affine, vec![1]), ("y2", Affine, vec![1])], 1, 1), vec![1.0]),
        (
            setup(&[("x0", Projective, vec![0, 0]), ("x1", Projective, vec![1, 0]), ("y1", Affine, vec![1, 0]), ("y2", Affine, vec![0, 1])], 1, 1),
            vec![1.0, 1.0],
        ),
        (setup(&[("x0", Projective, vec![-1]), ("y1", Affine, vec![1]), ("y2", Affine, vec![2]), ("y3", Affine, vec![1])], 1, 1), vec![1.0]),
    ]
}

fn all_exponents(nvars: usize, max_deg: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..nvars {
        out = out
            .into_iter()
            .flat_map(|e: Vec<u32>| {
                let used: u32 = e.iter().sum();
                (0..=max_deg - used).map(move |p| {
                    let mut f = e.clone();
                    f.push(p);
                    f
                })
            })
            .collect();
    }
    out.retain(|e| e.iter().sum::<u32>() > 0);
    out
}

/// A homogeneous polynomial of total degree at most `max_deg` with up to three terms.
pub fn random_homogeneous(rng: &mut impl Rng, setup: &WeightedSetup, max_deg: u32) -> Polynomial {
    let n = setup.nvars();
    let monos = all_exponents(n, max_deg);
    let seed = &monos[rng.gen_range(0..monos.len())];
    let key = (x_degree(setup, seed), weight_of(setup, seed));
    let same: Vec<&Vec<u32>> = monos.iter().filter(|e| (x_degree(setup, e), weight_of(setup, e)) == key).collect();
    let k = rng.gen_range(1..=3.min(same.len()));
    let mut terms = Vec::new();
    for _ in 0..k {
        let e = same[rng.gen_range(0..same.len())];
        let c = rng.gen_range(-3i64..=3);
        if c != 0 {
            terms.push(Term { coeff: rat(c, 1), exponent: Exponent::new(e.clone()) });
        }
    }
    let p = Polynomial::from_terms(n, terms);
    if p.is_zero() {
        Polynomial::monomial(Rational::one(), Exponent::new(seed.clone()))
    } else {
        p
    }
}

pub fn random_case(rng: &mut impl Rng) -> RandomCase {
    let setups = random_setups();
    let (setup, xi) = setups[rng.gen_range(0..setups.len())].clone();
    let ngens = rng.gen_range(1..=3);
    let generators: Vec<Polynomial> = (0..ngens).map(|_| random_homogeneous(rng, &setup, 3)).collect();
    let ideal = Ideal::new(generators.clone(), &setup).expect("homogeneous by construction");
    let rho = (0..setup.nvars()).map(|_| rng.gen_range(-3i64..=3)).collect();
    RandomCase { setup, generators, ideal, rho, xi: ReebVector::from_f64(xi) }
}

/// A polynomial with small random coefficients in `nvars` variables.
pub fn random_polynomial(rng: &mut impl Rng, nvars: usize, max_terms: usize, max_deg: u32) -> Polynomial {
    let nterms = rng.gen_range(0..=max_terms);
    let terms = (0..nterms)
        .map(|_| {
            let mut e = vec![0u32; nvars];
            let mut left = rng.gen_range(0..=max_deg);
            while left > 0 {
                e[rng.gen_range(0..nvars)] += 1;
                left -= 1;
            }
            let num = rng.gen_range(-50i64..=50);
            let den = rng.gen_range(1i64..=7);
            Term { coeff: rat(num, den), exponent: Exponent::new(e) }
        })
        .collect();
    Polynomial::from_terms(nvars, terms)
}
