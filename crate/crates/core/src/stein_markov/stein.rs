//! Stein coefficients of zero-mean lattice laws.
//!
//! For a law `alpha` on a shifted integer segment with zero mean, the
//! Stein coefficient is the unique `T` making the birth-death rates
//! `lambda_i^± = T(i) -+ i` reversible for `alpha`:
//!
//! `T(i) = i + (2 / alpha(i)) * sum_{j > i} alpha(j) j`.
//!
//! At the endpoints `T` equals `|i|`, and detailed balance
//! `alpha(i)(T(i) - i) = alpha(i+1)(T(i+1) + (i+1))` holds exactly.
//! Closed forms for the centered binomial and hypergeometric laws, the
//! conditional rule under convolution, and the scaling rule for
//! `Y = 2X + R` are all checked against the general formula in tests.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::exact_dist::{convolve, LatticePMF};
use crate::numeric::ratio_to_f64;
use crate::Result;

/// The function `T` on the support of a paired pmf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteinCoefficient {
    offset: BigRational,
    values: Vec<BigRational>,
}

impl SteinCoefficient {
    pub fn from_values(offset: BigRational, values: Vec<BigRational>) -> Self {
        SteinCoefficient { offset, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn offset(&self) -> &BigRational {
        &self.offset
    }

    pub fn position(&self, i: usize) -> BigRational {
        &self.offset + BigRational::from(BigInt::from(i as i64))
    }

    pub fn value(&self, i: usize) -> &BigRational {
        &self.values[i]
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    /// Up-rate `lambda_i^+ = T(i) - i` (exact).
    pub fn rate_up(&self, i: usize) -> BigRational {
        self.value(i) - self.position(i)
    }

    /// Down-rate `lambda_i^- = T(i) + i` (exact).
    pub fn rate_down(&self, i: usize) -> BigRational {
        self.value(i) + self.position(i)
    }

    pub fn values_f64(&self) -> Vec<f64> {
        self.values.iter().map(ratio_to_f64).collect()
    }

    /// Exact detailed-balance and endpoint validation against a pmf.
    pub fn validate(&self, pmf: &LatticePMF) -> Result<()> {
        if pmf.len() != self.len() || pmf.offset() != &self.offset {
            return Err(Error::Internal("support mismatch".into()));
        }
        let n = self.len();
        if self.rate_up(n - 1) != BigRational::zero()
            || self.rate_down(0) != BigRational::zero()
        {
            return Err(Error::Internal("endpoint rates must vanish".into()));
        }
        for i in 0..n {
            if self.rate_up(i).is_negative() || self.rate_down(i).is_negative() {
                return Err(Error::Internal(format!("negative rate at atom {i}")));
            }
        }
        for i in 0..n - 1 {
            let lhs = pmf.mass(i) * self.rate_up(i);
            let rhs = pmf.mass(i + 1) * self.rate_down(i + 1);
            if lhs != rhs {
                return Err(Error::Internal(format!("detailed balance fails at atom {i}")));
            }
        }
        Ok(())
    }
}

/// General formula, requiring exactly zero mean.
pub fn stein_from_pmf(pmf: &LatticePMF) -> Result<SteinCoefficient> {
    if !pmf.mean().is_zero() {
        return Err(Error::invalid(
            "Stein coefficient exists only for zero-mean laws",
        ));
    }
    let n = pmf.len();
    // suffix[i] = sum_{j >= i} alpha(j) * x_j
    let mut suffix = vec![BigRational::zero(); n + 1];
    for i in (0..n).rev() {
        suffix[i] = &suffix[i + 1] + pmf.mass(i) * pmf.atom(i);
    }
    let two = BigRational::from(BigInt::from(2));
    let values: Vec<BigRational> = (0..n)
        .map(|i| pmf.atom(i) + &two * &suffix[i + 1] / pmf.mass(i))
        .collect();
    let t = SteinCoefficient { offset: pmf.offset().clone(), values };
    t.validate(pmf)?;
    Ok(t)
}

/// Closed form for the centered binomial: `T(x) = 2 p q n + (q - p) x`.
pub fn stein_binomial(n: u64, p: &BigRational) -> Result<SteinCoefficient> {
    let pmf = crate::exact_dist::centered_binomial(n, p)?;
    let q = BigRational::one() - p;
    let two = BigRational::from(BigInt::from(2));
    let nn = BigRational::from(BigInt::from(n as i64));
    let base = &two * p * &q * &nn;
    let slope = &q - p;
    let values = (0..pmf.len())
        .map(|i| &base + &slope * pmf.atom(i))
        .collect();
    Ok(SteinCoefficient { offset: pmf.offset().clone(), values })
}

/// Closed form for the centered hypergeometric:
/// `T(x) = 2 p q k(n-k)/n + 2 x^2 / n + (q - p)(n - 2k) x / n`.
pub fn stein_hypergeometric(n: u64, k: u64, s: i64) -> Result<SteinCoefficient> {
    let pmf = crate::exact_dist::centered_hypergeometric(n, k, s)?;
    let nn = BigRational::from(BigInt::from(n as i64));
    let p = BigRational::new(BigInt::from(n as i64 + s), BigInt::from(2 * n as i64));
    let q = BigRational::one() - &p;
    let two = BigRational::from(BigInt::from(2));
    let base = &two * &p * &q * BigRational::new(
        BigInt::from((k * (n - k)) as i64),
        BigInt::from(n as i64),
    );
    let drift = (&q - &p) * BigRational::new(BigInt::from(n as i64 - 2 * k as i64), BigInt::from(n as i64));
    let values = (0..pmf.len())
        .map(|i| {
            let x = pmf.atom(i);
            &base + &two * &x * &x / &nn + &drift * &x
        })
        .collect();
    Ok(SteinCoefficient { offset: pmf.offset().clone(), values })
}

/// Conditional rule under convolution:
/// `T_Z(z) = E[T_X(X) + T_Y(Y) | X + Y = z]`, exact.
pub fn stein_convolve(
    tx: &SteinCoefficient,
    px: &LatticePMF,
    ty: &SteinCoefficient,
    py: &LatticePMF,
) -> Result<SteinCoefficient> {
    if px.len() != tx.len() || py.len() != ty.len() {
        return Err(Error::invalid("Stein pair supports do not match"));
    }
    let pz = convolve(px, py);
    let mut weighted = vec![BigRational::zero(); pz.len()];
    for i in 0..px.len() {
        for j in 0..py.len() {
            let w = px.mass(i) * py.mass(j);
            weighted[i + j] += w * (tx.value(i) + ty.value(j));
        }
    }
    let values: Vec<BigRational> = (0..pz.len())
        .map(|z| &weighted[z] / pz.mass(z))
        .collect();
    Ok(SteinCoefficient { offset: pz.offset().clone(), values })
}

/// Scaling rule for `Y = 2X + R`, `R` in `{-1, 0, 1}` with probabilities
/// `{1/4, 1/2, 1/4}`:
///
/// * `T_Y(2x) = 4 T_X(x) + 1` for `x` in the support,
/// * `T_Y(2x - 1) = 2 (T_X(x) + T_X(x-1) + 1) - R(y)` interior, with
///   `R(y) = (y + d)(y + 2d) / (T_X(x) + T_X(x-1) + 1)`,
///   `d = T_X(x) - T_X(x-1)`,
/// * `T_Y = |y|` at the two new endpoints.
pub fn stein_scale_perturb(tx: &SteinCoefficient, px: &LatticePMF) -> Result<SteinCoefficient> {
    if px.len() != tx.len() {
        return Err(Error::invalid("Stein pair supports do not match"));
    }
    let n = px.len();
    let one = BigRational::one();
    let two = BigRational::from(BigInt::from(2));
    let four = BigRational::from(BigInt::from(4));
    let ylo = px.offset() * &two - &one;
    let mut values = vec![BigRational::zero(); 2 * n + 1];
    // Even positions y = 2 x_i at output index 2i + 1.
    for i in 0..n {
        values[2 * i + 1] = &four * tx.value(i) + &one;
    }
    // Lower endpoint y = 2a - 1: T = |y|.
    values[0] = ylo.abs();
    // Upper endpoint y = 2b + 1.
    let yhi = &ylo + BigRational::from(BigInt::from(2 * n as i64));
    values[2 * n] = yhi.abs();
    // Interior odd positions y = 2 x_i - 1 for i = 1..n at index 2i.
    for i in 1..n {
        let y = &ylo + BigRational::from(BigInt::from(2 * i as i64));
        let d = tx.value(i) - tx.value(i - 1);
        let denom = tx.value(i) + tx.value(i - 1) + &one;
        let r = (&y + &d) * (&y + &two * &d) / &denom;
        values[2 * i] = &two * &denom - r;
    }
    Ok(SteinCoefficient { offset: ylo, values })
}
