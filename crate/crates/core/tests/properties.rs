//! Property tests for the exact layer: randomized laws, couplings and
//! Stein pairs must satisfy the structural invariants exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use kmt_couplings::exact_dist::{
    centered_hypergeometric, convolve, hypergeometric_pmf, perturb_scale, walk_pmf, LatticePMF,
};
use kmt_couplings::monotone_coupling::comonotone_couple;
use kmt_couplings::numeric::ratio_to_f64;
use kmt_couplings::stein_markov::{stein_convolve, stein_from_pmf, stein_scale_perturb};

/// Random exact pmf: positive integer weights normalized to mass one,
/// on a small shifted lattice.
fn arb_pmf() -> impl Strategy<Value = LatticePMF> {
    (
        prop::collection::vec(1u32..40, 1..7),
        -6i64..6,
        1i64..4,
    )
        .prop_map(|(weights, num, den)| {
            let total: u32 = weights.iter().sum();
            let masses: Vec<BigRational> = weights
                .iter()
                .map(|w| BigRational::new(BigInt::from(*w), BigInt::from(total)))
                .collect();
            let offset = BigRational::new(BigInt::from(num), BigInt::from(den));
            LatticePMF::from_parts(offset, masses).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_conservation_and_tightness(pmf in arb_pmf()) {
        let total: BigRational = pmf.masses().iter().sum();
        prop_assert!(total.is_one());
        prop_assert!(pmf.masses().iter().all(|m| m > &BigRational::zero()));
    }

    #[test]
    fn convolution_commutes_and_associates(a in arb_pmf(), b in arb_pmf(), c in arb_pmf()) {
        prop_assert_eq!(convolve(&a, &b), convolve(&b, &a));
        prop_assert_eq!(
            convolve(&convolve(&a, &b), &c),
            convolve(&a, &convolve(&b, &c))
        );
    }

    #[test]
    fn quantile_cdf_consistency(pmf in arb_pmf()) {
        // The double closest to CDF(k) may round above the exact value,
        // which legitimately selects the next atom under the
        // right-continuous convention; nudge the query safely inside
        // the atom's CDF interval (atom masses are far above 1e-12).
        for (i, c) in pmf.cdf().iter().enumerate() {
            let u = ratio_to_f64(c) * (1.0 - 1e-12);
            if u >= 1.0 || u <= 0.0 {
                continue;
            }
            prop_assert_eq!(pmf.quantile(u).unwrap(), pmf.atom(i));
        }
    }

    #[test]
    fn perturb_scale_is_exact_convolution(pmf in arb_pmf()) {
        let y = perturb_scale(&pmf);
        let total: BigRational = y.masses().iter().sum();
        prop_assert!(total.is_one());
        // Mean doubles (R has zero mean), variance is 4 Var(X) + 1/2.
        let two = BigRational::from_integer(2.into());
        prop_assert_eq!(y.mean(), pmf.mean() * &two);
        let half = BigRational::new(1.into(), 2.into());
        prop_assert_eq!(y.variance(), pmf.variance() * &two * &two + half);
    }

    #[test]
    fn comonotone_marginals_and_no_crossing(a in arb_pmf(), b in arb_pmf()) {
        let t = comonotone_couple(&a, &b);
        t.validate_marginals().unwrap();
        prop_assert!(t.is_comonotone());
    }

    #[test]
    fn stein_pair_identities(a in arb_pmf(), b in arb_pmf()) {
        let a = a.centered();
        let b = b.centered();
        let ta = stein_from_pmf(&a).unwrap();
        let tb = stein_from_pmf(&b).unwrap();
        // validate() inside stein_from_pmf has already checked detailed
        // balance and endpoint conditions exactly.
        let conv = stein_convolve(&ta, &a, &tb, &b).unwrap();
        let direct = stein_from_pmf(&convolve(&a, &b)).unwrap();
        prop_assert_eq!(conv, direct);
        let scaled = stein_scale_perturb(&ta, &a).unwrap();
        let direct = stein_from_pmf(&perturb_scale(&a)).unwrap();
        prop_assert_eq!(scaled, direct);
    }

    #[test]
    fn balanced_hypergeometric_is_symmetric(n in 2u64..24, kraw in 1u64..24) {
        let n = n * 2; // even box
        let k = 1 + kraw % (n - 1);
        let c = centered_hypergeometric(n, k, 0).unwrap();
        let len = c.len();
        for i in 0..len {
            prop_assert_eq!(c.mass(i), c.mass(len - 1 - i));
        }
    }

    #[test]
    fn hypergeometric_mean_and_variance(n in 2u64..20, k in 1u64..20, soff in 0u64..20) {
        let k = k.min(n);
        // an admissible s of matching parity
        let s_candidates: Vec<i64> = (-(n as i64)..=(n as i64))
            .filter(|s| (n as i64 - s) % 2 == 0)
            .collect();
        let s = s_candidates[(soff as usize) % s_candidates.len()];
        let pmf = hypergeometric_pmf(n, k, s).unwrap();
        // Mean of Ŝ is k p with p = (n+s)/2n.
        let p = BigRational::new(BigInt::from(n as i64 + s), BigInt::from(2 * n as i64));
        let kp = BigRational::from_integer(BigInt::from(k as i64)) * &p;
        prop_assert_eq!(pmf.mean(), kp);
        // Variance is pq k(n-k)/(n-1) for n > 1.
        let q = BigRational::one() - &p;
        let var = p * q
            * BigRational::new(BigInt::from((k * (n - k)) as i64), BigInt::from(n as i64 - 1));
        prop_assert_eq!(pmf.variance(), var);
    }

    #[test]
    fn walk_tail_consistency(n in 1u64..40, idx in 0usize..40) {
        let pmf = walk_pmf(n).unwrap();
        let t = pmf.tail();
        let i = idx % pmf.len();
        // survival(i) = 1 - cdf(i-1), exactly.
        let cdf = pmf.cdf();
        let expect = if i == 0 {
            BigRational::one()
        } else {
            BigRational::one() - &cdf[i - 1]
        };
        prop_assert_eq!(t.survival(i), &expect);
        prop_assert!(t.survival(0).is_one());
    }
}
