//! Signed comonotone coupling of `2 S_n` with `S_{4n}` and atom-exact
//! verification of its margins:
//!
//! * `2 |S_n| <= |S_{4n}| + 2`, and
//! * `|2 S_n - S_{4n}| <= |S_{4n}|^2 / (8n) + 9`.
//!
//! The absolute values are comonotone-coupled at atom level, then a
//! shared symmetric sign is attached (atoms at zero split evenly), so
//! the two walks never take opposite signs. The margin sweep uses pure
//! big-integer CDF numerators; the rational table is built on demand.

#![allow(clippy::manual_is_multiple_of)]

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::Error;
use crate::numeric::binomial;
use crate::Result;

use super::{comonotone_couple_raw, CouplingTable};

/// Margins of the coupling for one even `n`.
#[derive(Debug, Clone)]
pub struct Theorem14Margins {
    pub n: u64,
    pub pairs: u64,
    /// min over support of `|S_{4n}| + 2 - 2|S_n|` (integer-valued).
    pub worst_slack_bound: i64,
    /// min over support of `|S_{4n}|^2/(8n) + 9 - |2 S_n - S_{4n}|`.
    pub worst_slack_quad: f64,
    pub pass: bool,
}

/// CDF numerators of `|S_n|` over `2^n`, at values `0, 2, 4, ..., n`
/// (`n` even). Also returns the per-atom mass numerators.
fn abs_walk_cdf(n: u64) -> (Vec<BigUint>, Vec<BigUint>) {
    assert!(n % 2 == 0);
    let half = n / 2;
    let mut masses = Vec::with_capacity(half as usize + 1);
    let mut c = binomial(n, half);
    masses.push(c.clone()); // |S_n| = 0
    for k in 0..half {
        // C(n, half + k + 1) from C(n, half + k)
        c = c * (half - k) / (half + k + 1);
        masses.push(&c << 1u32); // both signs
    }
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = BigUint::zero();
    for m in &masses {
        acc += m;
        cdf.push(acc.clone());
    }
    (cdf, masses)
}

/// Comonotone support pairs of `|2 S_n|` (values `4k`) with `|S_{4n}|`
/// (values `2j`), found by merging the exact CDFs over the common
/// denominator `2^{4n}`.
fn abs_support_pairs(n: u64) -> Vec<(u64, u64)> {
    let (cdf_a, _) = abs_walk_cdf(n);
    let (cdf_b, _) = abs_walk_cdf(4 * n);
    let shift = (3 * n) as usize;
    let cdf_a: Vec<BigUint> = cdf_a.iter().map(|c| c << shift).collect();
    let mut pairs = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = BigUint::zero();
    while i < cdf_a.len() && j < cdf_b.len() {
        let hi = cdf_a[i].clone().min(cdf_b[j].clone());
        if hi > prev {
            pairs.push((4 * i as u64, 2 * j as u64));
        }
        let adv_a = cdf_a[i] == hi;
        let adv_b = cdf_b[j] == hi;
        prev = hi;
        if adv_a {
            i += 1;
        }
        if adv_b {
            j += 1;
        }
    }
    pairs
}

/// Check the two margins over every positive-mass pair for one even `n`.
pub fn couple_2s_4s_margins(n: u64) -> Result<Theorem14Margins> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::invalid("n must be even and positive"));
    }
    let pairs = abs_support_pairs(n);
    let mut worst_bound = i64::MAX;
    let mut worst_quad = f64::INFINITY;
    let mut pass = true;
    for &(xa, xb) in &pairs {
        // 2|S_n| <= |S_{4n}| + 2 with xa = 2|S_n|, xb = |S_{4n}|.
        let slack1 = xb as i64 + 2 - xa as i64;
        worst_bound = worst_bound.min(slack1);
        // 8n |2S_n - S_{4n}| <= |S_{4n}|^2 + 72 n  (integer form).
        let lhs = 8 * n as i128 * (xa as i128 - xb as i128).abs();
        let rhs = (xb as i128) * (xb as i128) + 72 * n as i128;
        let slack2 = (rhs - lhs) as f64 / (8.0 * n as f64);
        worst_quad = worst_quad.min(slack2);
        if slack1 < 0 || lhs > rhs {
            pass = false;
        }
    }
    Ok(Theorem14Margins {
        n,
        pairs: pairs.len() as u64,
        worst_slack_bound: worst_bound,
        worst_slack_quad: worst_quad,
        pass,
    })
}

/// The signed coupling table together with its margins.
#[derive(Debug, Clone)]
pub struct SignedCouple {
    pub table: CouplingTable,
    pub margins: Theorem14Margins,
}

/// Build the signed atom-level coupling of `2 S_n` and `S_{4n}` and
/// verify its margins exactly.
pub fn signed_couple_2s_4s(n: u64) -> Result<SignedCouple> {
    let margins = couple_2s_4s_margins(n)?;
    // Absolute laws as rationals.
    let (_, mass_a) = abs_walk_cdf(n);
    let (_, mass_b) = abs_walk_cdf(4 * n);
    let denom_a = BigInt::one() << n;
    let denom_b = BigInt::one() << (4 * n);
    let atoms_a: Vec<BigRational> = (0..mass_a.len())
        .map(|k| BigRational::from(BigInt::from(4 * k as i64)))
        .collect();
    let masses_a: Vec<BigRational> = mass_a
        .iter()
        .map(|m| BigRational::new(BigInt::from(m.clone()), denom_a.clone()))
        .collect();
    let atoms_b: Vec<BigRational> = (0..mass_b.len())
        .map(|j| BigRational::from(BigInt::from(2 * j as i64)))
        .collect();
    let masses_b: Vec<BigRational> = mass_b
        .iter()
        .map(|m| BigRational::new(BigInt::from(m.clone()), denom_b.clone()))
        .collect();
    let abs_table = comonotone_couple_raw(atoms_a, masses_a, atoms_b, masses_b);

    // Attach the shared symmetric sign: each pair (a, b) with mass m
    // becomes (a, b) and (-a, -b) with mass m/2; the (0, 0) pair stays.
    let mut signed: Vec<(BigRational, BigRational, BigRational)> = Vec::new();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for (a, b, m) in abs_table.pairs() {
        if a.is_zero() && b.is_zero() {
            signed.push((a.clone(), b.clone(), m.clone()));
        } else {
            let hm = m * &half;
            signed.push((a.clone(), b.clone(), hm.clone()));
            signed.push((-a.clone(), -b.clone(), hm));
        }
    }
    signed.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));

    // Re-index over the signed supports.
    let mut left_atoms: Vec<BigRational> = Vec::new();
    let mut right_atoms: Vec<BigRational> = Vec::new();
    for (a, b, _) in &signed {
        if !left_atoms.contains(a) {
            left_atoms.push(a.clone());
        }
        if !right_atoms.contains(b) {
            right_atoms.push(b.clone());
        }
    }
    left_atoms.sort();
    right_atoms.sort();
    let mut left_masses = vec![BigRational::zero(); left_atoms.len()];
    let mut right_masses = vec![BigRational::zero(); right_atoms.len()];
    let mut joint = Vec::with_capacity(signed.len());
    for (a, b, m) in &signed {
        let i = left_atoms.binary_search(a).unwrap();
        let j = right_atoms.binary_search(b).unwrap();
        left_masses[i] += m;
        right_masses[j] += m;
        joint.push((i, j, m.clone()));
    }
    let table = CouplingTable { left_atoms, left_masses, right_atoms, right_masses, joint };
    Ok(SignedCouple { table, margins })
}

/// Sweep report over even `n`.
#[derive(Debug, Clone)]
pub struct Theorem14Report {
    pub n_max: u64,
    pub per_n: Vec<Theorem14Margins>,
    /// Smallest even `n0` such that margins are nonnegative for every
    /// tested even `n >= n0`.
    pub threshold: u64,
}

impl Theorem14Report {
    pub fn pass_from_threshold(&self) -> bool {
        self.per_n.iter().filter(|m| m.n >= self.threshold).all(|m| m.pass)
    }
}

/// Run the margin check for every even `n` up to `n_max`.
pub fn theorem_1_4_sweep(n_max: u64) -> Result<Theorem14Report> {
    let ns: Vec<u64> = (1..=n_max / 2).map(|k| 2 * k).collect();
    let per_n: Vec<Theorem14Margins> = ns
        .par_iter()
        .map(|&n| couple_2s_4s_margins(n).expect("even n"))
        .collect();
    let mut threshold = 2;
    for m in &per_n {
        if !m.pass {
            threshold = m.n + 2;
        }
    }
    Ok(Theorem14Report { n_max, per_n, threshold })
}
