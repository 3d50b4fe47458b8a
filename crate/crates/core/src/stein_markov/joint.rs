//! The coupled pair of Markov chains on the product grid.
//!
//! Given Ehrenfest-like chains with rates `lambda_i^± = T_X(i) -+ i` and
//! `mu_j^± = T_Y(j) -+ j`, the joint chain moves both coordinates
//! together whenever possible:
//!
//! `theta^{+,+} = lambda^+ ∧ mu^+`, `theta^{+,o} = (lambda^+ - mu^+)_+`,
//! and symmetrically for the other directions; there are no opposing
//! moves. For such chains `A(i,j) = j - i` and
//! `B - |A| = (Q - |i-j|)_+` with `Q = |T_Y(j) - T_X(i)|`.

use num_rational::BigRational;
use num_traits::Signed;

use crate::error::Error;
use crate::exact_dist::LatticePMF;
use crate::numeric::ratio_to_f64;
use crate::Result;

use super::stein::SteinCoefficient;

/// The six move directions of the joint chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    PP,
    MM,
    PO,
    MO,
    OP,
    OM,
}

pub const DIRECTIONS: [Dir; 6] = [Dir::PP, Dir::MM, Dir::PO, Dir::MO, Dir::OP, Dir::OM];

impl Dir {
    /// Coordinate displacement of the move.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Dir::PP => (1, 1),
            Dir::MM => (-1, -1),
            Dir::PO => (1, 0),
            Dir::MO => (-1, 0),
            Dir::OP => (0, 1),
            Dir::OM => (0, -1),
        }
    }
}

/// Exact and double-precision rate tables of the joint chain.
#[derive(Debug, Clone)]
pub struct JointChainRates {
    pub nx: usize,
    pub ny: usize,
    /// Atom positions (the supports may sit on different shifted lattices).
    pub x_pos: Vec<f64>,
    pub y_pos: Vec<f64>,
    pub tx: Vec<f64>,
    pub ty: Vec<f64>,
    pub lam_up: Vec<f64>,
    pub lam_dn: Vec<f64>,
    pub mu_up: Vec<f64>,
    pub mu_dn: Vec<f64>,
    /// Exact marginal data kept for exact solves and marginal checks.
    pub x_masses: Vec<BigRational>,
    pub y_masses: Vec<BigRational>,
    pub lam_up_exact: Vec<BigRational>,
    pub lam_dn_exact: Vec<BigRational>,
    pub mu_up_exact: Vec<BigRational>,
    pub mu_dn_exact: Vec<BigRational>,
}

impl JointChainRates {
    pub fn states(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize) -> usize {
        u * self.ny + v
    }

    /// Rate of the move `dir` out of `(u, v)`.
    #[inline]
    pub fn rate(&self, u: usize, v: usize, dir: Dir) -> f64 {
        match dir {
            Dir::PP => self.lam_up[u].min(self.mu_up[v]),
            Dir::MM => self.lam_dn[u].min(self.mu_dn[v]),
            Dir::PO => (self.lam_up[u] - self.mu_up[v]).max(0.0),
            Dir::MO => (self.lam_dn[u] - self.mu_dn[v]).max(0.0),
            Dir::OP => (self.mu_up[v] - self.lam_up[u]).max(0.0),
            Dir::OM => (self.mu_dn[v] - self.lam_dn[u]).max(0.0),
        }
    }

    /// Exact-rational rate of a move (for the exact solver path).
    pub fn rate_exact(&self, u: usize, v: usize, dir: Dir) -> BigRational {
        let zero = BigRational::from_integer(0.into());
        match dir {
            Dir::PP => self.lam_up_exact[u].clone().min(self.mu_up_exact[v].clone()),
            Dir::MM => self.lam_dn_exact[u].clone().min(self.mu_dn_exact[v].clone()),
            Dir::PO => (&self.lam_up_exact[u] - &self.mu_up_exact[v]).max(zero),
            Dir::MO => (&self.lam_dn_exact[u] - &self.mu_dn_exact[v]).max(zero),
            Dir::OP => (&self.mu_up_exact[v] - &self.lam_up_exact[u]).max(zero),
            Dir::OM => (&self.mu_dn_exact[v] - &self.lam_dn_exact[u]).max(zero),
        }
    }

    /// Difference drift `A(i, j) = j - i`.
    pub fn a(&self, u: usize, v: usize) -> f64 {
        self.y_pos[v] - self.x_pos[u]
    }

    /// Mixing intensity `B(i, j)` from the mixed rates.
    pub fn b(&self, u: usize, v: usize) -> f64 {
        0.5 * ((self.lam_up[u] - self.mu_up[v]).abs() + (self.lam_dn[u] - self.mu_dn[v]).abs())
    }

    /// Coefficient discrepancy `Q(i, j) = |T_Y(j) - T_X(i)|`.
    pub fn q(&self, u: usize, v: usize) -> f64 {
        (self.ty[v] - self.tx[u]).abs()
    }

    /// Verify `A = j - i` and `B - |A| = (Q - |i-j|)_+` on the grid.
    pub fn validate_identities(&self, tol: f64) -> Result<()> {
        for u in 0..self.nx {
            for v in 0..self.ny {
                let h = self.x_pos[u] - self.y_pos[v];
                let b = self.b(u, v);
                let expect = h.abs() + (self.q(u, v) - h.abs()).max(0.0);
                if (b - expect).abs() > tol * (1.0 + b.abs()) {
                    return Err(Error::Internal(format!(
                        "B - |A| identity fails at ({u}, {v}): {b} vs {expect}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Assemble the joint chain from two validated Stein pairs.
pub fn build_joint_chain(
    tx: &SteinCoefficient,
    px: &LatticePMF,
    ty: &SteinCoefficient,
    py: &LatticePMF,
) -> Result<JointChainRates> {
    tx.validate(px)?;
    ty.validate(py)?;
    let nx = px.len();
    let ny = py.len();
    let lam_up_exact: Vec<BigRational> = (0..nx).map(|i| tx.rate_up(i)).collect();
    let lam_dn_exact: Vec<BigRational> = (0..nx).map(|i| tx.rate_down(i)).collect();
    let mu_up_exact: Vec<BigRational> = (0..ny).map(|j| ty.rate_up(j)).collect();
    let mu_dn_exact: Vec<BigRational> = (0..ny).map(|j| ty.rate_down(j)).collect();
    for r in lam_up_exact
        .iter()
        .chain(&lam_dn_exact)
        .chain(&mu_up_exact)
        .chain(&mu_dn_exact)
    {
        if r.is_negative() {
            return Err(Error::Internal("negative birth-death rate".into()));
        }
    }
    Ok(JointChainRates {
        nx,
        ny,
        x_pos: (0..nx).map(|i| ratio_to_f64(&px.atom(i))).collect(),
        y_pos: (0..ny).map(|j| ratio_to_f64(&py.atom(j))).collect(),
        tx: tx.values_f64(),
        ty: ty.values_f64(),
        lam_up: lam_up_exact.iter().map(ratio_to_f64).collect(),
        lam_dn: lam_dn_exact.iter().map(ratio_to_f64).collect(),
        mu_up: mu_up_exact.iter().map(ratio_to_f64).collect(),
        mu_dn: mu_dn_exact.iter().map(ratio_to_f64).collect(),
        x_masses: px.masses().to_vec(),
        y_masses: py.masses().to_vec(),
        lam_up_exact,
        lam_dn_exact,
        mu_up_exact,
        mu_dn_exact,
    })
}
