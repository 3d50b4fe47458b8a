//! Exact lattice distributions in big-rational arithmetic.
//!
//! A [`LatticePMF`] lives on a unit-spaced shifted segment
//! `{offset, offset+1, ..., offset+len-1}` (the offset may be any
//! rational, so centered laws with fractional means fit). Masses are
//! exact rationals, strictly positive, and sum to exactly one; every
//! constructor enforces this, so downstream inequality suites are
//! violation-proof rather than tolerance-dependent.
//!
//! Walk laws are carried on the half-lattice: `walk_pmf(n)` is the law
//! of `S_n / 2`, which is unit-spaced for every `n`; the physical walk
//! is recovered through the declared scale factor of 2.

#![allow(clippy::manual_is_multiple_of)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::numeric::{self, binomial, binomial_row, Accumulator};
use crate::Result;

/// Exact probability mass function on a unit-spaced shifted segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePMF {
    offset: BigRational,
    masses: Vec<BigRational>,
}

/// Exact survival values (`P(X >= atom)`) over the same support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailTable {
    offset: BigRational,
    survivals: Vec<BigRational>,
}

/// Functionals accepted by [`LatticePMF::expect`].
#[derive(Debug, Clone, Copy)]
pub enum Functional {
    /// `E[X^r]`, exact.
    Moment(u32),
    /// `E[e^{theta |X|}]`, compensated double.
    AbsExp(f64),
    /// `E[e^{(a/sqrt k) X + (b/k) X^2}]`, compensated double.
    QuadExp { a: f64, b: f64, k: u32 },
    /// `P(X >= x)`, exact.
    IndicatorTail(f64),
}

/// Result of [`LatticePMF::expect`].
#[derive(Debug, Clone)]
pub enum Expectation {
    Exact(BigRational),
    Real(f64),
}

impl Expectation {
    pub fn as_f64(&self) -> f64 {
        match self {
            Expectation::Exact(r) => numeric::ratio_to_f64(r),
            Expectation::Real(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Expectation::Exact(r) => Some(r),
            Expectation::Real(_) => None,
        }
    }
}

impl LatticePMF {
    /// Build from parts, enforcing the type invariants exactly: strictly
    /// positive masses after trimming the ends, and total mass one.
    pub fn from_parts(offset: BigRational, masses: Vec<BigRational>) -> Result<Self> {
        let first = masses.iter().position(|m| !m.is_zero());
        let last = masses.iter().rposition(|m| !m.is_zero());
        let (lo, hi) = match (first, last) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::invalid("pmf has no mass")),
        };
        let offset = offset + BigRational::from(BigInt::from(lo as i64));
        let masses: Vec<BigRational> = masses[lo..=hi].to_vec();
        let mut total = BigRational::zero();
        for m in &masses {
            if m.is_negative() {
                return Err(Error::invalid("negative mass"));
            }
            if m.is_zero() {
                return Err(Error::invalid("interior zero mass; support must be a segment"));
            }
            total += m;
        }
        if !total.is_one() {
            return Err(Error::invalid(format!("masses sum to {total}, not 1")));
        }
        Ok(LatticePMF { offset, masses })
    }

    /// Point mass at a rational position.
    pub fn point(at: BigRational) -> Self {
        LatticePMF { offset: at, masses: vec![BigRational::one()] }
    }

    pub fn offset(&self) -> &BigRational {
        &self.offset
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one atom
    }

    pub fn masses(&self) -> &[BigRational] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> &BigRational {
        &self.masses[i]
    }

    /// Position of the i-th atom.
    pub fn atom(&self, i: usize) -> BigRational {
        &self.offset + BigRational::from(BigInt::from(i as i64))
    }

    pub fn atoms(&self) -> Vec<BigRational> {
        (0..self.len()).map(|i| self.atom(i)).collect()
    }

    /// Exact mean.
    pub fn mean(&self) -> BigRational {
        let mut acc = BigRational::zero();
        for i in 0..self.len() {
            acc += self.atom(i) * &self.masses[i];
        }
        acc
    }

    /// Exact variance.
    pub fn variance(&self) -> BigRational {
        let mu = self.mean();
        let mut acc = BigRational::zero();
        for i in 0..self.len() {
            let d = self.atom(i) - &mu;
            acc += &d * &d * &self.masses[i];
        }
        acc
    }

    /// Shift every atom by `delta` (exact relocation, masses unchanged).
    pub fn shifted(&self, delta: &BigRational) -> Self {
        LatticePMF { offset: &self.offset + delta, masses: self.masses.clone() }
    }

    /// Centered copy (mean subtracted exactly).
    pub fn centered(&self) -> Self {
        let mu = self.mean();
        self.shifted(&(-mu))
    }

    /// Exact cumulative masses; entry `i` is `P(X <= atom_i)`.
    pub fn cdf(&self) -> Vec<BigRational> {
        let mut out = Vec::with_capacity(self.len());
        let mut acc = BigRational::zero();
        for m in &self.masses {
            acc += m;
            out.push(acc.clone());
        }
        out
    }

    /// Exact suffix sums as a [`TailTable`].
    pub fn tail(&self) -> TailTable {
        let mut survivals = vec![BigRational::zero(); self.len()];
        let mut acc = BigRational::zero();
        for i in (0..self.len()).rev() {
            acc += &self.masses[i];
            survivals[i] = acc.clone();
        }
        TailTable { offset: self.offset.clone(), survivals }
    }

    /// Right-continuous inverse CDF: the smallest atom whose cumulative
    /// mass is at least `u`. Ties break toward the smaller atom.
    pub fn quantile(&self, u: f64) -> Result<BigRational> {
        if !(0.0 < u && u < 1.0) {
            return Err(Error::invalid(format!("quantile level {u} outside (0,1)")));
        }
        let target = numeric::rational_from_f64(u)
            .ok_or_else(|| Error::invalid("non-finite quantile level"))?;
        let mut acc = BigRational::zero();
        for i in 0..self.len() {
            acc += &self.masses[i];
            if acc >= target {
                return Ok(self.atom(i));
            }
        }
        Ok(self.atom(self.len() - 1))
    }

    /// Expectation of a named functional; exact for the polynomial and
    /// indicator forms, compensated double otherwise.
    pub fn expect(&self, f: Functional) -> Expectation {
        match f {
            Functional::Moment(r) => {
                let mut acc = BigRational::zero();
                for i in 0..self.len() {
                    let mut p = BigRational::one();
                    let x = self.atom(i);
                    for _ in 0..r {
                        p *= &x;
                    }
                    acc += p * &self.masses[i];
                }
                Expectation::Exact(acc)
            }
            Functional::AbsExp(theta) => {
                let mut acc = Accumulator::new();
                for i in 0..self.len() {
                    let x = numeric::ratio_to_f64(&self.atom(i));
                    let w = numeric::ratio_to_f64(&self.masses[i]);
                    acc.add(w * (theta * x.abs()).exp());
                }
                Expectation::Real(acc.value())
            }
            Functional::QuadExp { a, b, k } => {
                let kk = k as f64;
                let mut acc = Accumulator::new();
                for i in 0..self.len() {
                    let x = numeric::ratio_to_f64(&self.atom(i));
                    let w = numeric::ratio_to_f64(&self.masses[i]);
                    acc.add(w * (a / kk.sqrt() * x + b / kk * x * x).exp());
                }
                Expectation::Real(acc.value())
            }
            Functional::IndicatorTail(x) => {
                let threshold = numeric::rational_from_f64(x)
                    .expect("finite threshold");
                let mut acc = BigRational::zero();
                for i in 0..self.len() {
                    if self.atom(i) >= threshold {
                        acc += &self.masses[i];
                    }
                }
                Expectation::Exact(acc)
            }
        }
    }

    /// Debug dump as JSON with exact fraction strings.
    pub fn dump_json(&self) -> String {
        let masses: Vec<String> = self
            .masses
            .iter()
            .map(|m| format!("\"{}\"", fraction_string(m)))
            .collect();
        format!(
            "{{ \"offset\": \"{}\", \"masses\": [{}] }}",
            fraction_string(&self.offset),
            masses.join(", ")
        )
    }
}

impl TailTable {
    pub fn offset(&self) -> &BigRational {
        &self.offset
    }

    pub fn len(&self) -> usize {
        self.survivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.survivals.is_empty()
    }

    /// `P(X >= atom_i)`.
    pub fn survival(&self, i: usize) -> &BigRational {
        &self.survivals[i]
    }

    /// Survival at an arbitrary rational point.
    pub fn survival_at(&self, x: &BigRational) -> BigRational {
        for i in 0..self.len() {
            if (&self.offset + BigRational::from(BigInt::from(i as i64))) >= *x {
                return self.survivals[i].clone();
            }
        }
        BigRational::zero()
    }
}

/// `p/q` with the sign on the numerator; integers print without `/1`.
pub fn fraction_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Law of the half walk `S_n / 2` on the unit lattice
/// (atoms `-n/2, -n/2 + 1, ..., n/2`, masses `C(n, j) / 2^n`).
/// The physical walk is `2 X`; the scale factor is part of the contract.
pub fn walk_pmf(n: u64) -> Result<LatticePMF> {
    if n == 0 {
        return Err(Error::invalid("walk length must be at least 1"));
    }
    let denom = BigInt::one() << n;
    let masses = binomial_row(n)
        .into_iter()
        .map(|c| BigRational::new(BigInt::from(c), denom.clone()))
        .collect();
    let offset = BigRational::new(BigInt::from(-(n as i64)), BigInt::from(2));
    LatticePMF::from_parts(offset, masses)
}

/// Raw binomial law: masses `C(n, j) p^j q^(n-j)` at atoms `0 ..= n`.
pub fn binomial_pmf(n: u64, p: &BigRational) -> Result<LatticePMF> {
    if !(p > &BigRational::zero() && p < &BigRational::one()) {
        return Err(Error::invalid("p must lie strictly between 0 and 1"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let q = BigRational::one() - p;
    let mut masses = Vec::with_capacity(n as usize + 1);
    // p^j q^(n-j) built incrementally.
    let mut pw = BigRational::one();
    for _ in 0..n {
        pw *= &q;
    }
    let ratio = p / &q;
    for j in 0..=n {
        masses.push(BigRational::from(BigInt::from(binomial(n, j))) * &pw);
        if j < n {
            pw *= &ratio;
        }
    }
    LatticePMF::from_parts(BigRational::zero(), masses)
}

/// Centered binomial: masses `C(n, j) p^j q^(n-j)` at `j - n p`.
/// Requires `n p` integral so the support is a shifted integer segment.
pub fn centered_binomial(n: u64, p: &BigRational) -> Result<LatticePMF> {
    let np = p * BigRational::from(BigInt::from(n));
    if !np.denom().is_one() {
        return Err(Error::invalid(format!("n*p = {np} is not an integer")));
    }
    Ok(binomial_pmf(n, p)?.shifted(&(-np)))
}

/// Parameters `(n, k, s)` of a draw-without-replacement law: a box of
/// `n` coupons summing to `s` (so `(n+s)/2` are `+1`), from which `k`
/// are drawn. Returns the law of the unit-lattice variable
/// `(S_k[n,s] + k) / 2`, i.e. the number of `+1` coupons among the `k`.
pub fn hypergeometric_pmf(n: u64, k: u64, s: i64) -> Result<LatticePMF> {
    if n == 0 {
        return Err(Error::invalid("box must contain at least one coupon"));
    }
    if k > n {
        return Err(Error::invalid("cannot draw more coupons than the box holds"));
    }
    if s.unsigned_abs() > n || (n as i64 - s) % 2 != 0 {
        return Err(Error::invalid(format!("s = {s} is not a probable value of S_{n}")));
    }
    let plus = ((n as i64 + s) / 2) as u64;
    let minus = n - plus;
    let jlo = k.saturating_sub(minus);
    let jhi = k.min(plus);
    let total = BigInt::from(binomial(n, k));
    let mut masses = Vec::with_capacity((jhi - jlo + 1) as usize);
    for j in jlo..=jhi {
        let ways = binomial(plus, j) * binomial(minus, k - j);
        masses.push(BigRational::new(BigInt::from(ways), total.clone()));
    }
    let offset = BigRational::from(BigInt::from(jlo as i64));
    LatticePMF::from_parts(offset, masses)
}

/// Centered hypergeometric `W_hat = S_hat - k p` with `p = (n+s)/(2n)`;
/// mean exactly zero.
pub fn centered_hypergeometric(n: u64, k: u64, s: i64) -> Result<LatticePMF> {
    let pmf = hypergeometric_pmf(n, k, s)?;
    let p = BigRational::new(BigInt::from(n as i64 + s), BigInt::from(2 * n as i64));
    let kp = BigRational::from(BigInt::from(k as i64)) * p;
    Ok(pmf.shifted(&(-kp)))
}

/// Law of `Y = 2X + R` where `R` is `-1, 0, 1` with probabilities
/// `1/4, 1/2, 1/4`, independent of `X`. Exactly:
/// `g(2x) = f(x)/2` and `g(2x - 1) = (f(x) + f(x-1))/4`.
pub fn perturb_scale(pmf: &LatticePMF) -> LatticePMF {
    let n = pmf.len();
    let two = BigRational::from(BigInt::from(2));
    let four = BigRational::from(BigInt::from(4));
    // Output support: 2*offset - 1 .. 2*(offset + n - 1) + 1.
    let mut masses = vec![BigRational::zero(); 2 * n + 1];
    for i in 0..n {
        // even position 2 x_i sits at output index 2i + 1
        masses[2 * i + 1] = &pmf.masses[i] / &two;
        // odd position 2 x_i - 1 at index 2i gets f(x_i)/4 ...
        masses[2 * i] += &pmf.masses[i] / &four;
        // ... and 2 x_i + 1 at index 2i + 2 gets f(x_i)/4.
        masses[2 * i + 2] += &pmf.masses[i] / &four;
    }
    let offset = &pmf.offset * &two - BigRational::one();
    LatticePMF::from_parts(offset, masses).expect("perturbation preserves total mass")
}

/// Exact convolution of two unit-spaced laws; offsets add.
pub fn convolve(a: &LatticePMF, b: &LatticePMF) -> LatticePMF {
    let mut masses = vec![BigRational::zero(); a.len() + b.len() - 1];
    for i in 0..a.len() {
        for j in 0..b.len() {
            let prod = &a.masses[i] * &b.masses[j];
            masses[i + j] += prod;
        }
    }
    let offset = &a.offset + &b.offset;
    LatticePMF::from_parts(offset, masses).expect("convolution preserves total mass")
}

/// Law of `|X|` as (value, mass) pairs in increasing value order, for a
/// law symmetric or not; values need not be unit spaced.
pub fn absolute_law(pmf: &LatticePMF) -> Vec<(BigRational, BigRational)> {
    let mut map: Vec<(BigRational, BigRational)> = Vec::new();
    for i in 0..pmf.len() {
        let v = pmf.atom(i).abs();
        match map.iter_mut().find(|(u, _)| *u == v) {
            Some((_, m)) => *m += &pmf.masses[i],
            None => map.push((v, pmf.masses[i].clone())),
        }
    }
    map.sort_by(|a, b| a.0.cmp(&b.0));
    map
}

/// Mean of a pmf as f64 (for report output).
pub fn mean_f64(pmf: &LatticePMF) -> f64 {
    numeric::ratio_to_f64(&pmf.mean())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    fn r(n: i64, d: i64) -> BigRational {
        ratio(n, d)
    }

    /// Brute-force oracle: enumerate all 2^n sign vectors and tabulate
    /// the law of S_n / 2.
    fn walk_by_enumeration(n: u32) -> Vec<(BigRational, BigRational)> {
        let mut out: Vec<(BigRational, BigRational)> = Vec::new();
        let total = 1u64 << n;
        for mask in 0..total {
            let s = (2 * (mask as i64).count_ones() as i64) - n as i64;
            let half = BigRational::new(BigInt::from(s), BigInt::from(2));
            let w = BigRational::new(BigInt::one(), BigInt::from(total));
            match out.iter_mut().find(|(v, _)| *v == half) {
                Some((_, m)) => *m += w,
                None => out.push((half, w)),
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    #[test]
    fn walk_small_laws() {
        // n = 1: atoms -1/2, 1/2 with masses 1/2 each.
        let w1 = walk_pmf(1).unwrap();
        assert_eq!(w1.atoms(), vec![r(-1, 2), r(1, 2)]);
        assert_eq!(w1.masses(), &[r(1, 2), r(1, 2)]);
        // n = 2: atoms -1, 0, 1 with masses 1/4, 1/2, 1/4.
        let w2 = walk_pmf(2).unwrap();
        assert_eq!(w2.atoms(), vec![r(-1, 1), r(0, 1), r(1, 1)]);
        assert_eq!(w2.masses(), &[r(1, 4), r(1, 2), r(1, 4)]);
        // n = 4 against the enumeration oracle.
        let w4 = walk_pmf(4).unwrap();
        let oracle = walk_by_enumeration(4);
        assert_eq!(w4.len(), oracle.len());
        for (i, (v, m)) in oracle.iter().enumerate() {
            assert_eq!(w4.atom(i), *v);
            assert_eq!(w4.mass(i), m);
        }
        assert_eq!(
            w4.masses(),
            &[r(1, 16), r(4, 16), r(6, 16), r(4, 16), r(1, 16)]
        );
        assert!(walk_pmf(0).is_err());
    }

    #[test]
    fn centered_binomial_examples() {
        let b2 = centered_binomial(2, &r(1, 2)).unwrap();
        assert_eq!(b2.atoms(), vec![r(-1, 1), r(0, 1), r(1, 1)]);
        assert_eq!(b2.masses(), &[r(1, 4), r(1, 2), r(1, 4)]);

        let b4 = centered_binomial(4, &r(1, 2)).unwrap();
        assert_eq!(b4.masses(), &[r(1, 16), r(4, 16), r(6, 16), r(4, 16), r(1, 16)]);
        assert_eq!(b4.atoms()[0], r(-2, 1));

        // Direct binomial evaluation for p = 1/4.
        let b = centered_binomial(4, &r(1, 4)).unwrap();
        assert_eq!(b.atoms(), vec![r(-1, 1), r(0, 1), r(1, 1), r(2, 1), r(3, 1)]);
        assert_eq!(
            b.masses(),
            &[r(81, 256), r(108, 256), r(54, 256), r(12, 256), r(1, 256)]
        );
        assert!(b.mean().is_zero());

        // n*p fractional is rejected.
        assert!(centered_binomial(3, &r(1, 4)).is_err());
    }

    /// Enumeration oracle for draws without replacement: all k-subsets
    /// of the box, uniformly.
    fn hypergeo_by_enumeration(n: u64, k: u64, s: i64) -> Vec<(i64, BigRational)> {
        let plus = ((n as i64 + s) / 2) as u64;
        let mut out: Vec<(i64, BigRational)> = Vec::new();
        let total = binomial(n, k);
        // Choose which of the n positions are drawn; positions < plus are +1.
        let n = n as u32;
        let k = k as u32;
        for mask in 0u64..(1 << n) {
            if mask.count_ones() != k {
                continue;
            }
            let ones = (mask & ((1u64 << plus) - 1)).count_ones() as i64;
            let sum = 2 * ones - k as i64; // S_k value
            let w = BigRational::new(BigInt::one(), BigInt::from(total.clone()));
            match out.iter_mut().find(|(v, _)| *v == sum) {
                Some((_, m)) => *m += w,
                None => out.push((sum, w)),
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }

    #[test]
    fn hypergeometric_examples() {
        // (n=2, k=1, s=0): Ŝ atoms {0, 1}, masses {1/2, 1/2}.
        let h = hypergeometric_pmf(2, 1, 0).unwrap();
        assert_eq!(h.atoms(), vec![r(0, 1), r(1, 1)]);
        assert_eq!(h.masses(), &[r(1, 2), r(1, 2)]);

        // (n=4, k=2, s=0): S_2[4,0] in {-2, 0, 2} with {1/6, 2/3, 1/6};
        // verified against subset enumeration.
        let h = hypergeometric_pmf(4, 2, 0).unwrap();
        let oracle = hypergeo_by_enumeration(4, 2, 0);
        assert_eq!(oracle, vec![(-2, r(1, 6)), (0, r(2, 3)), (2, r(1, 6))]);
        // S = 2*Ŝ - k, so Ŝ atoms are 0, 1, 2.
        assert_eq!(h.atoms(), vec![r(0, 1), r(1, 1), r(2, 1)]);
        assert_eq!(h.masses(), &[r(1, 6), r(2, 3), r(1, 6)]);

        // Centered variant: Ŵ atoms {-1/2, 1/2} for (2, 1, 0).
        let c = centered_hypergeometric(2, 1, 0).unwrap();
        assert_eq!(c.atoms(), vec![r(-1, 2), r(1, 2)]);
        assert!(c.mean().is_zero());

        // Exact variance: pq * k(n-k) / (n-1) on the Ŝ scale.
        let c = centered_hypergeometric(12, 5, 4).unwrap();
        let p = r(16, 24);
        let q = r(8, 24);
        let expected = p * q * r(5 * 7, 11);
        assert_eq!(c.variance(), expected);

        // Improbable s rejected.
        assert!(hypergeometric_pmf(4, 2, 1).is_err());
        assert!(hypergeometric_pmf(4, 2, 6).is_err());
    }

    #[test]
    fn hypergeometric_symmetry_when_balanced() {
        // make_hypergeometric(n, k, 0) is symmetric about its mean.
        for (n, k) in [(4u64, 2u64), (8, 3), (10, 5), (12, 4)] {
            let c = centered_hypergeometric(n, k, 0).unwrap();
            let len = c.len();
            for i in 0..len {
                assert_eq!(c.mass(i), c.mass(len - 1 - i), "n={n} k={k} i={i}");
            }
        }
    }

    #[test]
    fn perturb_scale_examples() {
        // Point mass at 0 -> R itself.
        let delta = LatticePMF::point(r(0, 1));
        let y = perturb_scale(&delta);
        assert_eq!(y.atoms(), vec![r(-1, 1), r(0, 1), r(1, 1)]);
        assert_eq!(y.masses(), &[r(1, 4), r(1, 2), r(1, 4)]);

        // Half-lattice input: walk(1) on {-1/2, 1/2}; hand convolution.
        let y = perturb_scale(&walk_pmf(1).unwrap());
        assert_eq!(y.atoms(), vec![r(-2, 1), r(-1, 1), r(0, 1), r(1, 1), r(2, 1)]);
        assert_eq!(y.masses(), &[r(1, 8), r(1, 4), r(1, 4), r(1, 4), r(1, 8)]);

        // Formula evaluation for walk(2) on {-1, 0, 1}.
        let y = perturb_scale(&walk_pmf(2).unwrap());
        assert_eq!(
            y.masses(),
            &[r(1, 16), r(1, 8), r(3, 16), r(1, 4), r(3, 16), r(1, 8), r(1, 16)]
        );
        // Oracle: perturb-scale must equal convolve(2X, R) computed independently.
        let two_x = {
            // law of 2 * walk(2): atoms -2, 0, 2 -> unit lattice via R fills gaps,
            // so compare through the full convolution on the integer lattice.
            let w = walk_pmf(2).unwrap();
            let mut masses = vec![BigRational::zero(); 2 * w.len() - 1];
            for i in 0..w.len() {
                masses[2 * i] = w.mass(i).clone();
            }
            (masses, &w.offset * &r(2, 1))
        };
        let rr = LatticePMF::from_parts(r(-1, 1), vec![r(1, 4), r(1, 2), r(1, 4)]).unwrap();
        // Direct convolution with spacing-2 atoms embedded on the unit lattice.
        let mut conv = vec![BigRational::zero(); two_x.0.len() + rr.len() - 1];
        for i in 0..two_x.0.len() {
            if two_x.0[i].is_zero() {
                continue;
            }
            for j in 0..rr.len() {
                let prod = &two_x.0[i] * rr.mass(j);
                conv[i + j] += prod;
            }
        }
        let direct = LatticePMF::from_parts(&two_x.1 + rr.offset(), conv).unwrap();
        assert_eq!(y, direct);
    }

    #[test]
    fn convolve_examples() {
        let w1 = walk_pmf(1).unwrap();
        let w2 = walk_pmf(2).unwrap();
        assert_eq!(convolve(&w1, &w1), w2);

        let delta = LatticePMF::point(r(0, 1));
        assert_eq!(convolve(&delta, &w2), w2);

        let u = LatticePMF::from_parts(r(-1, 1), vec![r(1, 3), r(1, 3), r(1, 3)]).unwrap();
        let uu = convolve(&u, &u);
        assert_eq!(uu.atoms()[0], r(-2, 1));
        assert_eq!(uu.masses(), &[r(1, 9), r(2, 9), r(3, 9), r(2, 9), r(1, 9)]);
    }

    #[test]
    fn tail_examples() {
        let w2 = walk_pmf(2).unwrap();
        let t = w2.tail();
        assert_eq!(*t.survival(2), r(1, 4)); // tail at atom 1
        assert_eq!(*t.survival(0), r(1, 1)); // whole mass at atom -1
        let w4 = walk_pmf(4).unwrap();
        let t = w4.tail();
        // tail at atom 1 = (4 + 1) / 16
        assert_eq!(t.survival_at(&r(1, 1)), r(5, 16));
        assert_eq!(*t.survival(0), r(1, 1));
    }

    #[test]
    fn expect_examples() {
        let w4 = walk_pmf(4).unwrap();
        assert!(w4.mean().is_zero());
        // Variance of Ŝ_4 is n/4 = 1 exactly.
        assert_eq!(w4.variance(), r(1, 1));
        match w4.expect(Functional::Moment(2)) {
            Expectation::Exact(v) => assert_eq!(v, r(1, 1)),
            _ => panic!("moment must be exact"),
        }
        match w4.expect(Functional::AbsExp(0.0)) {
            Expectation::Real(v) => assert!((v - 1.0).abs() < 1e-15),
            _ => panic!(),
        }
        match w4.expect(Functional::IndicatorTail(1.0)) {
            Expectation::Exact(v) => assert_eq!(v, r(5, 16)),
            _ => panic!(),
        }
    }

    #[test]
    fn quantile_examples() {
        let w2 = walk_pmf(2).unwrap();
        assert_eq!(w2.quantile(0.5).unwrap(), r(0, 1));
        assert_eq!(w2.quantile(0.9).unwrap(), r(1, 1));
        assert_eq!(w2.quantile(0.1).unwrap(), r(-1, 1));
        assert!(w2.quantile(0.0).is_err());
        assert!(w2.quantile(1.0).is_err());
    }

    #[test]
    fn quantile_cdf_consistency() {
        // quantile(pmf, CDF(k)) = k for every atom. Walk CDFs are dyadic
        // and convert exactly; the hypergeometric CDF is queried just
        // inside the interval since its double image may round upward.
        let pmf = walk_pmf(5).unwrap();
        for (i, c) in pmf.cdf().iter().enumerate() {
            let u = numeric::ratio_to_f64(c);
            if u >= 1.0 {
                continue;
            }
            assert_eq!(pmf.quantile(u).unwrap(), pmf.atom(i));
        }
        let pmf = hypergeometric_pmf(8, 3, 2).unwrap();
        for (i, c) in pmf.cdf().iter().enumerate() {
            let u = numeric::ratio_to_f64(c) * (1.0 - 1e-12);
            if u >= 1.0 {
                continue;
            }
            assert_eq!(pmf.quantile(u).unwrap(), pmf.atom(i));
        }
    }

    #[test]
    fn json_dump_shape() {
        let w1 = walk_pmf(1).unwrap();
        assert_eq!(
            w1.dump_json(),
            "{ \"offset\": \"-1/2\", \"masses\": [\"1/2\", \"1/2\"] }"
        );
    }
}
