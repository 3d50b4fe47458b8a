//! Hoeffding's with/without-replacement comparison and the binomial
//! moment bounds built on it.
//!
//! With `W'_k` the centered sum of `k` coupons drawn without replacement
//! from a box of `n p` coupons `+1` and `n q` coupons `-1`, and `W_k` the
//! with-replacement (binomial) analogue, for convex `f`:
//! `E[f(W'_k)] <= E[f(W_k)]`; three particular chains follow,
//!
//! 1. `E[e^{l W'}] <= E[e^{l W}] <= e^{l^2 k / 2}`,
//! 2. `E[e^{(a/sqrt k) W' + (b/k) W'^2}] <= ... <= (1-2b)^{-1/2} e^{a^2/(2(1-2b))}`,
//! 3. `E[e^{(b/k) S'^2}] <= E[e^{(b/k) S^2}] <= (1-2b)^{-1/2} e^{(b/(1-2b)) (k/n) (s^2/n)}`,
//!
//! all enumerated exactly over both laws and checked with a `1e-12`
//! relative guard band.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::Error;
use crate::exact_dist::{binomial_pmf, centered_hypergeometric};
use crate::numeric::{ratio_to_f64, Accumulator};
use crate::Result;

/// A centered sum law on a spacing-2 lattice: atom `i` sits at
/// `offset + 2 i`.
#[derive(Debug, Clone)]
pub struct SumLaw {
    offset: BigRational,
    masses: Vec<BigRational>,
}

impl SumLaw {
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn atom(&self, i: usize) -> BigRational {
        &self.offset + BigRational::from_integer((2 * i as i64).into())
    }

    pub fn mass(&self, i: usize) -> &BigRational {
        &self.masses[i]
    }

    /// `E[f(W)]` with compensated summation.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let off = ratio_to_f64(&self.offset);
        let mut acc = Accumulator::new();
        for i in 0..self.masses.len() {
            acc.add(ratio_to_f64(&self.masses[i]) * f(off + 2.0 * i as f64));
        }
        acc.value()
    }
}

/// Outcome of the three inequality chains at one parameter point.
#[derive(Debug, Clone)]
pub struct HoeffdingReport {
    pub n: u64,
    pub k: u64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    /// (lhs, mid, rhs) of each chain.
    pub chains: [(f64, f64, f64); 3],
    pub pass: bool,
}

/// Centered without-replacement sum `W'_k` on the `S` scale
/// (values `S'_k - k (p - q)`), as an exact law.
pub fn centered_sample_sum(n: u64, k: u64, p: &BigRational) -> Result<SumLaw> {
    let np = p * BigRational::from_integer((n as i64).into());
    if !np.denom().is_one() {
        return Err(Error::invalid("n p must be integral"));
    }
    let s: i64 = {
        let v = &np + &np - BigRational::from_integer((n as i64).into());
        v.to_integer().try_into().map_err(|_| Error::invalid("box sum overflow"))?
    };
    // Ŵ = Ŝ - k p carries the unit-lattice law; W' = 2 Ŵ doubles it.
    let what = centered_hypergeometric(n, k, s)?;
    let two = BigRational::from_integer(2.into());
    Ok(SumLaw { offset: what.offset() * &two, masses: what.masses().to_vec() })
}

/// Centered with-replacement sum `W_k` on the `S` scale.
pub fn centered_replacement_sum(k: u64, p: &BigRational) -> Result<SumLaw> {
    let kp = p * BigRational::from_integer((k as i64).into());
    let cb = binomial_pmf(k, p)?.shifted(&(-kp));
    let two = BigRational::from_integer(2.into());
    Ok(SumLaw { offset: cb.offset() * &two, masses: cb.masses().to_vec() })
}

/// Run the three chains at `(n, k, p, lambda, a, b)`.
pub fn hoeffding_bounds_check(
    n: u64,
    k: u64,
    p: &BigRational,
    lambda: f64,
    a: f64,
    b: f64,
) -> Result<HoeffdingReport> {
    if k > n {
        return Err(Error::invalid("k must not exceed n"));
    }
    if b >= 0.5 {
        return Err(Error::invalid("b must be below 1/2"));
    }
    let without = centered_sample_sum(n, k, p)?;
    let with = centered_replacement_sum(k, p)?;
    let kf = k as f64;
    // Box sum s = n (p - q).
    let s = ratio_to_f64(p) * 2.0 * n as f64 - n as f64;
    let drift = kf * (ratio_to_f64(p) * 2.0 - 1.0); // k (p - q)

    // Chain 1: exponential moments.
    let c1l = without.expect(|x| (lambda * x).exp());
    let c1m = with.expect(|x| (lambda * x).exp());
    let c1r = (0.5 * lambda * lambda * kf).exp();

    // Chain 2: linear-quadratic exponent.
    let f2 = |x: f64| (a / kf.sqrt() * x + b / kf * x * x).exp();
    let c2l = without.expect(f2);
    let c2m = with.expect(f2);
    let c2r = (1.0 / (1.0 - 2.0 * b)).sqrt() * (a * a / (2.0 * (1.0 - 2.0 * b))).exp();

    // Chain 3: quadratic in the raw (uncentered) sum S = W + k(p-q).
    let f3 = |x: f64| (b / kf * (x + drift) * (x + drift)).exp();
    let c3l = without.expect(f3);
    let c3m = with.expect(f3);
    let c3r = (1.0 / (1.0 - 2.0 * b)).sqrt()
        * ((b / (1.0 - 2.0 * b)) * (kf / n as f64) * (s * s / n as f64)).exp();

    let chains = [(c1l, c1m, c1r), (c2l, c2m, c2r), (c3l, c3m, c3r)];
    let ok = |l: f64, r: f64| l <= r * (1.0 + 1e-12) + 1e-300;
    let pass = chains.iter().all(|(l, m, r)| ok(*l, *m) && ok(*m, *r));
    Ok(HoeffdingReport { n, k, lambda, a, b, chains, pass })
}

/// Empirical calibration of the constant in
/// `E[e^{(alpha/k) S_k[n,t]^2}] <= e^{1 + gamma alpha t^2 / n}`:
/// the supremum over a corpus of `n (ln E - 1)_+ / (alpha t^2)`.
pub fn calibrate_exp_square(n_list: &[u64], alpha: f64) -> Result<f64> {
    let mut gamma_hat: f64 = 0.0;
    for &n in n_list {
        if n % 2 != 0 {
            return Err(Error::invalid("corpus n must be even"));
        }
        for k in (n / 3 + 1)..=(2 * n / 3) {
            for t in (0..=n as i64).step_by(2) {
                // Uncentered S_k[n, t] = 2 Ŝ - k.
                let pmf = crate::exact_dist::hypergeometric_pmf(n, k, t)?;
                let kf = k as f64;
                let e = {
                    let mut acc = Accumulator::new();
                    for i in 0..pmf.len() {
                        let shat = ratio_to_f64(&pmf.atom(i));
                        let sval = 2.0 * shat - kf;
                        acc.add(ratio_to_f64(pmf.mass(i)) * (alpha / kf * sval * sval).exp());
                    }
                    acc.value()
                };
                let ln_e = e.ln();
                if t != 0 && ln_e > 1.0 {
                    gamma_hat = gamma_hat.max((ln_e - 1.0) * n as f64 / (alpha * (t * t) as f64));
                } else if t == 0 && ln_e > 1.0 {
                    return Err(Error::Internal(
                        "exp-square bound fails at t = 0; alpha too large".into(),
                    ));
                }
            }
        }
    }
    Ok(gamma_hat)
}

/// Exact Hoeffding comparison for convex piecewise-linear functionals
/// `x -> max(x - c, 0)`, rational arithmetic end to end.
pub fn hoeffding_exact_hinge(n: u64, k: u64, p: &BigRational, c: &BigRational) -> Result<bool> {
    let without = centered_sample_sum(n, k, p)?;
    let with = centered_replacement_sum(k, p)?;
    let hinge = |law: &SumLaw| -> BigRational {
        let mut acc = BigRational::zero();
        for i in 0..law.len() {
            let x = law.atom(i);
            if &x > c {
                acc += (&x - c) * law.mass(i);
            }
        }
        acc
    };
    Ok(hinge(&without) <= hinge(&with))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    #[test]
    fn degenerate_and_identity_cases() {
        // (n=2, k=2, p=1/2): W'_2 is identically 0.
        let w = centered_sample_sum(2, 2, &ratio(1, 2)).unwrap();
        assert_eq!(w.len(), 1);
        let r = hoeffding_bounds_check(2, 2, &ratio(1, 2), 1.0, 0.5, 0.25).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.chains[0].0 - 1.0).abs() < 1e-12);

        // lambda = a = b = 0: all three values are exactly 1.
        let r = hoeffding_bounds_check(6, 3, &ratio(1, 2), 0.0, 0.0, 0.0).unwrap();
        for (l, m, rr) in r.chains {
            assert!((l - 1.0).abs() < 1e-12 && (m - 1.0).abs() < 1e-12 && rr >= 1.0);
        }
    }

    #[test]
    fn worked_numbers_at_n4_k2() {
        // E[e^{W'}] = (e^{-2} + 4 + e^2)/6 and E[e^W] = ((e^{-1}+e)/2)^2,
        // both below e^{lambda^2 k / 2} = e.
        let r = hoeffding_bounds_check(4, 2, &ratio(1, 2), 1.0, 0.0, 0.0).unwrap();
        let expect_l = ((-2.0f64).exp() + 4.0 + 2.0f64.exp()) / 6.0;
        let expect_m = (((-1.0f64).exp() + 1.0f64.exp()) / 2.0).powi(2);
        assert!((r.chains[0].0 - expect_l).abs() < 1e-12);
        assert!((r.chains[0].1 - expect_m).abs() < 1e-12);
        assert!((r.chains[0].2 - 1.0f64.exp()).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn grid_all_pass_small() {
        for n in [4u64, 6, 8, 12] {
            for k in 1..=n {
                for &(lambda, a, b) in
                    &[(0.5, 0.0, 0.0), (-1.0, 0.5, 0.1), (1.0, 1.0, 0.25), (0.0, 0.0, 0.4)]
                {
                    let r = hoeffding_bounds_check(n, k, &ratio(1, 2), lambda, a, b).unwrap();
                    assert!(r.pass, "n={n} k={k}: {r:?}");
                }
            }
        }
        // Unbalanced box via p = 3/4 on multiples of 4.
        let r = hoeffding_bounds_check(8, 3, &ratio(3, 4), 0.7, 0.3, 0.2).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn exact_hinge_comparison() {
        for c in [-2i64, -1, 0, 1, 2] {
            for k in 1..=6 {
                assert!(hoeffding_exact_hinge(6, k, &ratio(1, 2), &ratio(c, 1)).unwrap());
                assert!(hoeffding_exact_hinge(8, k, &ratio(1, 4), &ratio(c, 2)).unwrap());
            }
        }
    }

    #[test]
    fn calibration_is_finite_and_below_one() {
        let g = calibrate_exp_square(&[6, 8, 10, 12], 0.1).unwrap();
        assert!(g.is_finite() && g < 1.0, "gamma_hat = {g}");
    }
}
