//! Deterministic verification of the walk-vs-Gaussian quantile coupling:
//! under `S_n = F_n^{-1}(Phi(Z))`, check that
//!
//! * `|S_n| <= |Z| sqrt(n) + 3`, and
//! * `|S_n - Z sqrt(n)| <= Z^2 + 11`
//!
//! hold for every `Z` in every atom's quantile interval. On an interval
//! each side of the second inequality is concave in `z`, so the supremum
//! sits at an interval endpoint or at the interior critical points
//! `z = -sqrt(n)/2` (for the `s - z sqrt(n)` branch) and `z = +sqrt(n)/2`
//! (for the other); all are evaluated.
//!
//! Odd `n` goes through the one-extra-step reduction: couple `S_n` to
//! `S_{n+1}` with `|S_n - S_{n+1}| = 1`, quantile-couple `S_{n+1}` to
//! `Z`, and take the worst case over both neighbour values.
//!
//! Interval endpoints are `Phi^{-1}` of exact binomial CDF values; tail
//! probabilities below double range are handled in log space through an
//! asymptotic expansion of `ln Phi`, so the endpoints stay accurate for
//! `n` in the thousands.

#![allow(clippy::manual_is_multiple_of)]

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::Error;
use crate::numeric::binomial_row;
use crate::Result;

use super::normal;

/// Natural log of a positive big integer, good to ~1e-15 relative.
fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 53 {
        return (x.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln Phi(z)` for deep negative `z` via the asymptotic series
/// `Phi(z) = phi(z)/(-z) (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...)`.
fn ln_cdf_asymptotic(z: f64) -> f64 {
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2)
        + 105.0 / (z2 * z2 * z2 * z2);
    -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

/// Derivative of `ln Phi` (the reversed hazard rate) in the same regime.
fn dln_cdf_asymptotic(z: f64) -> f64 {
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    -z / series
}

/// `z` with `Phi(z) = num / 2^pow`, for `num / 2^pow <= 1/2`; negative
/// infinity when `num` is zero. Exact rational input keeps deep tails
/// meaningful.
fn z_from_lower_tail(num: &BigUint, pow: u64) -> f64 {
    if num.is_zero() {
        return f64::NEG_INFINITY;
    }
    let q = crate::numeric::uint_shr_to_f64(num, pow);
    if q >= 1e-280 {
        return normal::inverse_cdf_lower_tail(q.min(0.5));
    }
    // Log-space Newton on ln Phi(z) = L.
    let l = ln_biguint(num) - pow as f64 * std::f64::consts::LN_2;
    let mut z = -(-2.0 * l).sqrt();
    for _ in 0..8 {
        let f = ln_cdf_asymptotic(z) - l;
        let step = f / dln_cdf_asymptotic(z);
        z -= step;
        if step.abs() < 1e-13 * z.abs() {
            break;
        }
    }
    z
}

/// `z` at an exact CDF boundary `cum / 2^pow` in (0, 1); uses whichever
/// tail is smaller for accuracy.
fn z_at_boundary(cum: &BigUint, pow: u64) -> f64 {
    let total = BigUint::from(1u32) << pow;
    if cum.is_zero() {
        return f64::NEG_INFINITY;
    }
    if *cum == total {
        return f64::INFINITY;
    }
    let half = BigUint::from(1u32) << (pow - 1);
    if *cum <= half {
        z_from_lower_tail(cum, pow)
    } else {
        let survival = &total - cum;
        -z_from_lower_tail(&survival, pow)
    }
}

/// Per-`n` outcome of the endpoint checks.
#[derive(Debug, Clone)]
pub struct QuantileCheckReport {
    pub n: u64,
    /// min over atoms of `min|z| sqrt(n) + 3 - |s|`.
    pub worst_margin_bound: f64,
    /// min over atoms and candidate points of `z^2 + 11 - |s - z sqrt(n)|`.
    pub worst_margin_quad: f64,
    pub pass: bool,
    /// Smallest `n` from which both inequalities held through the tested
    /// range (populated by [`lemma_1_1_sweep`]).
    pub threshold: Option<u64>,
}

/// `sup_z |s - z sqrt(n)| - z^2` over `[zlo, zhi]`, by endpoint and
/// critical-point evaluation.
fn sup_quad_deviation(s: f64, sqrt_n: f64, zlo: f64, zhi: f64) -> f64 {
    let f1 = |z: f64| s - z * sqrt_n - z * z; // branch s >= z sqrt(n)
    let f2 = |z: f64| z * sqrt_n - s - z * z;
    let mut best = f64::NEG_INFINITY;
    for z in [zlo, zhi] {
        if z.is_finite() {
            best = best.max(f1(z)).max(f2(z));
        }
    }
    let c1 = -sqrt_n / 2.0;
    if c1 > zlo && c1 < zhi {
        best = best.max(f1(c1));
    }
    let c2 = sqrt_n / 2.0;
    if c2 > zlo && c2 < zhi {
        best = best.max(f2(c2));
    }
    best
}

/// Check both inequalities for one `n` (any parity).
pub fn gaussian_quantile_check(n: u64) -> Result<QuantileCheckReport> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    // For odd n, quantile-couple S_{n+1} and take worst case over the
    // two neighbours s -+ 1; the inequalities keep the original sqrt(n).
    let m = if n % 2 == 0 { n } else { n + 1 };
    let sqrt_n = (n as f64).sqrt();
    let row = binomial_row(m);
    let mut cum = Vec::with_capacity(row.len() + 1);
    cum.push(BigUint::zero());
    let mut acc = BigUint::zero();
    for c in &row {
        acc += c;
        cum.push(acc.clone());
    }

    let mut worst_bound = f64::INFINITY;
    let mut worst_quad = f64::INFINITY;
    for j in 0..row.len() {
        let s_atom = 2 * j as i64 - m as i64; // atom of S_m
        let zlo = z_at_boundary(&cum[j], m);
        let zhi = z_at_boundary(&cum[j + 1], m);
        let svals: &[i64] = if n % 2 == 0 {
            &[s_atom]
        } else {
            &[s_atom - 1, s_atom + 1]
        };
        // (a): |s| <= |z| sqrt(n) + 3 at the interval's smallest |z|.
        let min_abs_z = if zlo <= 0.0 && zhi >= 0.0 {
            0.0
        } else {
            zlo.abs().min(zhi.abs())
        };
        let max_abs_s = svals.iter().map(|s| s.abs()).max().unwrap() as f64;
        worst_bound = worst_bound.min(min_abs_z * sqrt_n + 3.0 - max_abs_s);
        // (b): |s - z sqrt(n)| <= z^2 + 11 over the whole interval.
        for &s in svals {
            let sup = sup_quad_deviation(s as f64, sqrt_n, zlo, zhi);
            worst_quad = worst_quad.min(11.0 - sup);
        }
    }
    Ok(QuantileCheckReport {
        n,
        worst_margin_bound: worst_bound,
        worst_margin_quad: worst_quad,
        pass: worst_bound >= 0.0 && worst_quad >= 0.0,
        threshold: None,
    })
}

/// Sweep `n = 1..=n_max`; the returned report for the threshold `n0` is
/// the smallest `n` from which both inequalities hold through `n_max`.
pub fn lemma_1_1_sweep(n_max: u64) -> Result<(Vec<QuantileCheckReport>, u64)> {
    let mut reports: Vec<QuantileCheckReport> = (1..=n_max)
        .into_par_iter()
        .map(|n| gaussian_quantile_check(n).expect("n >= 1"))
        .collect();
    let mut threshold = 1;
    for r in &reports {
        if !r.pass {
            threshold = r.n + 1;
        }
    }
    for r in &mut reports {
        r.threshold = Some(threshold);
    }
    Ok((reports, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_z_values_are_accurate() {
        // Phi(z) = 2^-300: check round trip through the asymptotic path.
        let num = BigUint::from(1u32);
        let z = z_from_lower_tail(&num, 300);
        let expect = -(2.0 * 300.0 * std::f64::consts::LN_2).sqrt();
        assert!(z < -19.0 && (z - expect).abs() < 0.3);
        let back = ln_cdf_asymptotic(z) / std::f64::consts::LN_2;
        assert!((back + 300.0).abs() < 1e-9 * 300.0, "back={back}");
        // Moderate values agree with the double-precision inverse.
        let num = BigUint::from(1u32);
        let z = z_from_lower_tail(&num, 20);
        assert!((normal::cdf(z) * 2f64.powi(20) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn small_n_checks_pass() {
        // n = 1, atom +1, interval (0, inf): quadratic dominates.
        let r = gaussian_quantile_check(1).unwrap();
        assert!(r.pass, "{r:?}");
        // n = 4, atom 0 has a symmetric interval through 0.
        let r = gaussian_quantile_check(4).unwrap();
        assert!(r.pass, "{r:?}");
        for n in 1..=64 {
            let r = gaussian_quantile_check(n).unwrap();
            assert!(r.pass, "n={n}: {r:?}");
        }
    }

    #[test]
    fn sweep_discovers_small_threshold() {
        let (reports, threshold) = lemma_1_1_sweep(128).unwrap();
        assert_eq!(reports.len(), 128);
        assert!(threshold <= 50, "threshold {threshold}");
        for r in reports.iter().filter(|r| r.n >= threshold) {
            assert!(r.pass);
        }
    }

    #[test]
    fn sup_dev_endpoint_logic() {
        // On [0, inf) with s = 1, n = 1: the branch s - z sqrt(n) - z^2
        // is largest at the left endpoint, value 1; the other branch
        // peaks at z = 1/2 with value -3/4.
        let sup = sup_quad_deviation(1.0, 1.0, 0.0, f64::INFINITY);
        assert!((sup - 1.0).abs() < 1e-12);
        // Pure right-branch max on an interval away from the crossing.
        let sup = sup_quad_deviation(-3.0, 2.0, 0.5, f64::INFINITY);
        // f2(z) = 2z + 3 - z^2, critical point z = 1, value 4.
        assert!((sup - 4.0).abs() < 1e-12);
    }
}
