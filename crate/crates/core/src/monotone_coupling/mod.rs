//! Quantile (comonotone) couplings and their deterministic verification.
//!
//! The comonotone coupling of two laws is the joint law of
//! `(F^{-1}(V), G^{-1}(V))` for a single uniform `V`; on discrete laws
//! its joint mass at an atom pair is the overlap length of their CDF
//! intervals. This module builds such tables exactly, realizes the
//! signed `2 S_n` vs `S_{4n}` coupling and checks its margins atom by
//! atom, verifies the walk-vs-Gaussian quantile coupling inequalities at
//! interval endpoints, and samples the composed dyadic chain.

pub mod chain;
pub mod normal;
pub mod quantile_check;
pub mod theorem14;

pub use chain::{chain_sample, ChainTrajectory};
pub use quantile_check::{gaussian_quantile_check, lemma_1_1_sweep, QuantileCheckReport};
pub use theorem14::{signed_couple_2s_4s, theorem_1_4_sweep, SignedCouple, Theorem14Report};

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::Error;
use crate::exact_dist::LatticePMF;
use crate::Result;

/// Joint mass function on pairs of atoms, with exact marginals.
#[derive(Debug, Clone)]
pub struct CouplingTable {
    left_atoms: Vec<BigRational>,
    left_masses: Vec<BigRational>,
    right_atoms: Vec<BigRational>,
    right_masses: Vec<BigRational>,
    /// `(left index, right index, mass)`, all masses strictly positive.
    joint: Vec<(usize, usize, BigRational)>,
}

impl CouplingTable {
    pub fn joint(&self) -> &[(usize, usize, BigRational)] {
        &self.joint
    }

    pub fn left_atom(&self, i: usize) -> &BigRational {
        &self.left_atoms[i]
    }

    pub fn right_atom(&self, j: usize) -> &BigRational {
        &self.right_atoms[j]
    }

    pub fn left_len(&self) -> usize {
        self.left_atoms.len()
    }

    pub fn right_len(&self) -> usize {
        self.right_atoms.len()
    }

    /// Joint entries as (left value, right value, mass).
    pub fn pairs(&self) -> impl Iterator<Item = (&BigRational, &BigRational, &BigRational)> {
        self.joint
            .iter()
            .map(|(i, j, m)| (&self.left_atoms[*i], &self.right_atoms[*j], m))
    }

    /// Exact marginal check: row sums equal the left marginal, column
    /// sums the right one.
    pub fn validate_marginals(&self) -> Result<()> {
        let mut row = vec![BigRational::zero(); self.left_atoms.len()];
        let mut col = vec![BigRational::zero(); self.right_atoms.len()];
        for (i, j, m) in &self.joint {
            if m <= &BigRational::zero() {
                return Err(Error::Internal("nonpositive joint mass".into()));
            }
            row[*i] += m;
            col[*j] += m;
        }
        if row != self.left_masses || col != self.right_masses {
            return Err(Error::Internal("coupling marginals do not match".into()));
        }
        Ok(())
    }

    /// No crossing pair: if `(i, j)` and `(i', j')` both carry mass and
    /// `i < i'`, then `j <= j'`.
    pub fn is_comonotone(&self) -> bool {
        let mut sorted = self.joint.clone();
        sorted.sort_by_key(|(i, j, _)| (*i, *j));
        sorted.windows(2).all(|w| w[0].1 <= w[1].1)
    }
}

/// Comonotone coupling from raw atom/mass lists (atoms strictly
/// increasing; masses positive, summing to one). CDF boundary ties
/// contribute zero-length overlaps and are omitted.
pub fn comonotone_couple_raw(
    left_atoms: Vec<BigRational>,
    left_masses: Vec<BigRational>,
    right_atoms: Vec<BigRational>,
    right_masses: Vec<BigRational>,
) -> CouplingTable {
    let mut joint = Vec::new();
    let mut prev = BigRational::zero();
    let (mut i, mut j) = (0usize, 0usize);
    let la = left_masses.len();
    let lb = right_masses.len();
    let mut ca_next = left_masses[0].clone();
    let mut cb_next = right_masses[0].clone();
    while i < la && j < lb {
        let hi = ca_next.clone().min(cb_next.clone());
        let mass = &hi - &prev;
        if mass > BigRational::zero() {
            joint.push((i, j, mass));
        }
        let adv_a = ca_next == hi;
        let adv_b = cb_next == hi;
        prev = hi;
        if adv_a {
            i += 1;
            if i < la {
                ca_next = &ca_next + &left_masses[i];
            }
        }
        if adv_b {
            j += 1;
            if j < lb {
                cb_next = &cb_next + &right_masses[j];
            }
        }
    }
    CouplingTable { left_atoms, left_masses, right_atoms, right_masses, joint }
}

/// The unique comonotone coupling of two lattice laws.
pub fn comonotone_couple(a: &LatticePMF, b: &LatticePMF) -> CouplingTable {
    comonotone_couple_raw(
        a.atoms(),
        a.masses().to_vec(),
        b.atoms(),
        b.masses().to_vec(),
    )
}
