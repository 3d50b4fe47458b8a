//! Exact verification of the binomial mass/tail comparison lemmas and of
//! the analytic estimates (entropy cubic bound, Ash sandwich) used to
//! prove them.
//!
//! Conventions, with `n = 2m` even:
//!
//! * `alpha_m(k) = C(2m, m+k) / 2^{2m}` for `1 <= k <= m`
//!   (the law of `2 S_{2m}` at `4k`),
//! * `beta_m(k)  = C(8m+1, 4m+2k) / 2^{8m}` for `1 <= k <= 2m`
//!   (the law of `S_{8m}` at `4k` or `4k-2`),
//! * `abar, bbar` are the corresponding suffix sums.
//!
//! All comparisons are big-integer exact: both sides are put over the
//! common denominator `2^{8m}` by shifting the alpha numerators left by
//! `6m` bits. Float evaluation appears only in the entropy and Ash
//! suites, with a fixed `-1e-12` guard band.

#![allow(clippy::manual_is_multiple_of)]

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::Error;
use crate::numeric::{binomial, uint_shr_to_f64};
use crate::Result;

/// Exact alpha/beta numerator tables for one `m`.
#[derive(Debug, Clone)]
pub struct AlphaBetaTable {
    pub m: u64,
    /// `C(2m, m+k)` for `k = 0..=m` (numerators over `2^{2m}`).
    alpha_num: Vec<BigUint>,
    /// `C(8m+1, 4m+2k)` for `k = 1..=2m` (numerators over `2^{8m}`).
    beta_num: Vec<BigUint>,
    /// `alpha_num[k] << 6m`: alpha over the common denominator `2^{8m}`.
    alpha_shifted: Vec<BigUint>,
    /// Suffix sums of `alpha_num` from `k = 1`: `abar[k-1] = sum_{j>=k} C(2m, m+j)`,
    /// shifted left by `6m`.
    abar_shifted: Vec<BigUint>,
    /// `bbar[l-1] = sum_{j >= 2l-1} C(8m, 4m+j)` over `2^{8m}`.
    bbar_num: Vec<BigUint>,
}

impl AlphaBetaTable {
    /// `alpha_m(k)` as an exact fraction string.
    pub fn alpha_string(&self, k: u64) -> String {
        format!("{}/2^{}", self.alpha_num[k as usize], 2 * self.m)
    }

    pub fn beta_string(&self, k: u64) -> String {
        format!("{}/2^{}", self.beta_num[k as usize - 1], 8 * self.m)
    }

    pub fn alpha_num(&self, k: u64) -> &BigUint {
        &self.alpha_num[k as usize]
    }

    pub fn beta_num(&self, k: u64) -> &BigUint {
        &self.beta_num[k as usize - 1]
    }

    /// `alpha_m(k) <= beta_m(l)` decided exactly.
    pub fn alpha_le_beta(&self, k: u64, l: u64) -> bool {
        self.alpha_shifted[k as usize] <= self.beta_num[l as usize - 1]
    }

    /// `alpha_m(k) >= beta_m(l)` decided exactly.
    pub fn alpha_ge_beta(&self, k: u64, l: u64) -> bool {
        self.alpha_shifted[k as usize] >= self.beta_num[l as usize - 1]
    }

    /// `abar_m(k) <= bbar_m(l)` decided exactly (`1 <= k <= m`, `1 <= l <= 2m`).
    pub fn tail_alpha_le_beta(&self, k: u64, l: u64) -> bool {
        self.abar_shifted[k as usize - 1] <= self.bbar_num[l as usize - 1]
    }

    pub fn tail_alpha_ge_beta(&self, k: u64, l: u64) -> bool {
        self.abar_shifted[k as usize - 1] >= self.bbar_num[l as usize - 1]
    }

    /// Relative slack `1 - lhs/rhs` of `alpha(k) <= beta(l)` in doubles.
    fn mass_margin(&self, k: u64, l: u64) -> f64 {
        let a = uint_shr_to_f64(&self.alpha_shifted[k as usize], 8 * self.m);
        let b = uint_shr_to_f64(&self.beta_num[l as usize - 1], 8 * self.m);
        1.0 - a / b
    }
}

/// Build the exact tables for one `m`, including the Pascal consistency
/// check `C(8m, 4m+2k) + C(8m, 4m+2k-1) = C(8m+1, 4m+2k)`.
pub fn alpha_beta_tables(m: u64) -> Result<AlphaBetaTable> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    // Row pieces of C(2m, m+k), k = 0..=m, by the ratio recurrence.
    let mut alpha_num = Vec::with_capacity(m as usize + 1);
    let mut c = binomial(2 * m, m);
    alpha_num.push(c.clone());
    for k in 0..m {
        // C(2m, m+k+1) = C(2m, m+k) * (m-k) / (m+k+1)
        c = c * (m - k) / (m + k + 1);
        alpha_num.push(c.clone());
    }

    // C(8m, 4m+j) for j = 0..=4m.
    let mut half_row = Vec::with_capacity(4 * m as usize + 1);
    let mut c = binomial(8 * m, 4 * m);
    half_row.push(c.clone());
    for j in 0..4 * m {
        c = c * (4 * m - j) / (4 * m + j + 1);
        half_row.push(c.clone());
    }

    // beta numerators via C(8m+1, 4m+2k), checked against Pascal.
    let mut beta_num = Vec::with_capacity(2 * m as usize);
    let mut c = binomial(8 * m + 1, 4 * m + 2); // k = 1
    for k in 1..=2 * m {
        if k > 1 {
            // step k-1 -> k: multiply by ((4m-2k+3)(4m-2k+2)) / ((4m+2k-1)(4m+2k))
            c = c * (4 * m - 2 * k + 3) * (4 * m - 2 * k + 2) / ((4 * m + 2 * k - 1) * (4 * m + 2 * k));
        }
        let pascal = &half_row[2 * k as usize] + &half_row[2 * k as usize - 1];
        if pascal != c {
            return Err(Error::Internal(format!(
                "Pascal identity failed at m={m}, k={k}"
            )));
        }
        beta_num.push(c.clone());
    }

    let shift = (6 * m) as usize;
    let alpha_shifted: Vec<BigUint> = alpha_num.iter().map(|a| a << shift).collect();

    // abar[k-1] = sum_{j >= k} C(2m, m+j), shifted.
    let mut abar_shifted = vec![BigUint::zero(); m as usize];
    let mut acc = BigUint::zero();
    for k in (1..=m as usize).rev() {
        acc += &alpha_num[k];
        abar_shifted[k - 1] = &acc << shift;
    }

    // bbar[l-1] = sum_{j >= 2l-1} C(8m, 4m+j).
    let mut bbar_num = vec![BigUint::zero(); 2 * m as usize];
    let mut acc = BigUint::zero();
    let mut j = 4 * m as usize;
    for l in (1..=2 * m as usize).rev() {
        // accumulate down to j = 2l-1
        while j >= 2 * l - 1 {
            acc += &half_row[j];
            if j == 0 {
                break;
            }
            j -= 1;
        }
        bbar_num[l - 1] = acc.clone();
    }

    Ok(AlphaBetaTable { m, alpha_num, beta_num, alpha_shifted, abar_shifted, bbar_num })
}

/// A single exact violation, with both sides as fraction strings.
#[derive(Debug, Clone)]
pub struct Violation {
    pub m: u64,
    pub k: i64,
    pub l: i64,
    pub lhs: String,
    pub rhs: String,
}

/// Per-m summary row of a suite.
#[derive(Debug, Clone, Copy)]
pub struct PerM {
    pub m: u64,
    pub pass: bool,
    pub worst_margin: Option<f64>,
}

/// Outcome of one lemma suite.
#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub lemma: String,
    /// Tested parameter ranges, as (name, value) pairs.
    pub params: Vec<(String, String)>,
    pub checked: u64,
    pub violations: Vec<Violation>,
    /// Smallest parameter from which the property holds through the
    /// tested range, for "for some m0" claims.
    pub threshold: Option<u64>,
    /// Most adverse relative slack seen (negative would be a violation).
    pub worst_margin: Option<f64>,
    /// Per-m summary (empty for suites not indexed by m).
    pub per_m: Vec<PerM>,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lemma: `alpha_m(k) <= beta_m(k)` for all `1 <= k <= m`, `m <= m_max`.
pub fn check_mass_domination(m_max: u64) -> Result<LemmaReport> {
    let rows: Vec<(u64, Vec<Violation>, f64)> = (1..=m_max)
        .into_par_iter()
        .map(|m| {
            let t = alpha_beta_tables(m).expect("m >= 1");
            let mut violations = Vec::new();
            let mut checked = 0;
            let mut worst = f64::INFINITY;
            for k in 1..=m {
                checked += 1;
                if !t.alpha_le_beta(k, k) {
                    violations.push(Violation {
                        m,
                        k: k as i64,
                        l: k as i64,
                        lhs: t.alpha_string(k),
                        rhs: t.beta_string(k),
                    });
                }
                worst = worst.min(t.mass_margin(k, k));
            }
            (checked, violations, worst)
        })
        .collect();
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    let mut per_m = Vec::with_capacity(rows.len());
    for (i, (c, v, w)) in rows.into_iter().enumerate() {
        checked += c;
        per_m.push(PerM { m: i as u64 + 1, pass: v.is_empty(), worst_margin: Some(w) });
        violations.extend(v);
        worst = worst.min(w);
    }
    Ok(LemmaReport {
        lemma: "mass-domination".into(),
        params: vec![("m_max".into(), m_max.to_string())],
        checked,
        violations,
        threshold: None,
        worst_margin: if worst.is_finite() { Some(worst) } else { None },
        per_m,
    })
}

/// Largest admissible `k` in `k <= l - (1 + l^3/m^2)/4`, or 0 if none.
fn shifted_k_bound(m: u64, l: u64) -> u64 {
    let m = m as i128;
    let l = l as i128;
    let num = 4 * l * m * m - m * m - l * l * l;
    if num <= 0 {
        return 0;
    }
    let k = num / (4 * m * m);
    k.max(0) as u64
}

/// Lemma: `alpha_m(k) >= beta_m(l)` whenever
/// `1 <= k <= l - (1 + l^3/m^2)/4`, plus the special case
/// `alpha_m(l-1) >= beta_m(l)` for `l^3 <= 3 m^2`.
pub fn check_shifted_domination(m_max: u64) -> Result<LemmaReport> {
    let per_m: Vec<(u64, Vec<Violation>)> = (1..=m_max)
        .into_par_iter()
        .map(|m| {
            let t = alpha_beta_tables(m).expect("m >= 1");
            let mut violations = Vec::new();
            let mut checked = 0;
            for l in 1..=2 * m {
                let kmax = shifted_k_bound(m, l).min(m);
                for k in 1..=kmax {
                    checked += 1;
                    if !t.alpha_ge_beta(k, l) {
                        violations.push(Violation {
                            m,
                            k: k as i64,
                            l: l as i64,
                            lhs: t.alpha_string(k),
                            rhs: t.beta_string(l),
                        });
                    }
                }
            }
            // Special case.
            let mut l = 2u64;
            while l * l * l <= 3 * m * m && l <= 2 * m {
                checked += 1;
                if !t.alpha_ge_beta(l - 1, l) {
                    violations.push(Violation {
                        m,
                        k: (l - 1) as i64,
                        l: l as i64,
                        lhs: t.alpha_string(l - 1),
                        rhs: t.beta_string(l),
                    });
                }
                l += 1;
            }
            (checked, violations)
        })
        .collect();
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut rows = Vec::with_capacity(per_m.len());
    for (i, (c, v)) in per_m.into_iter().enumerate() {
        checked += c;
        rows.push(PerM { m: i as u64 + 1, pass: v.is_empty(), worst_margin: None });
        violations.extend(v);
    }
    Ok(LemmaReport {
        lemma: "shifted-domination".into(),
        params: vec![("m_max".into(), m_max.to_string())],
        checked,
        violations,
        threshold: None,
        worst_margin: None,
        per_m: rows,
    })
}

/// Monotonicity steps behind the two mass lemmas, checked exactly:
/// `f(m, k+1) >= f(m, k)`, `f(m+1, 1) <= f(m, 1)`,
/// `g_h(m, k+1) <= g_h(m, k)` while `k^3 <= (4h-1) m^2`, and
/// `g_h(m+1, h+1) >= g_h(m, h+1)`.
pub fn check_ratio_monotonicity(m_max: u64, h_max: u64) -> Result<LemmaReport> {
    if m_max < 2 {
        return Err(Error::invalid("m_max must be at least 2"));
    }
    let tables: Vec<AlphaBetaTable> = (1..=m_max)
        .into_par_iter()
        .map(|m| alpha_beta_tables(m).expect("m >= 1"))
        .collect();
    let mut violations = Vec::new();
    let mut checked = 0u64;
    let six_bits = BigUint::from(64u32);

    for t in &tables {
        let m = t.m;
        // f(m, k+1) >= f(m, k) for 1 <= k <= m-1:
        //   beta(k+1) alpha(k) >= beta(k) alpha(k+1)
        for k in 1..m {
            checked += 1;
            let lhs = t.beta_num(k + 1) * t.alpha_num(k);
            let rhs = t.beta_num(k) * t.alpha_num(k + 1);
            if lhs < rhs {
                violations.push(Violation {
                    m,
                    k: k as i64,
                    l: 0,
                    lhs: format!("f({m},{k}+1) numerator {lhs}"),
                    rhs: format!("f({m},{k}) numerator {rhs}"),
                });
            }
        }
        // g_h(m, k+1) <= g_h(m, k) when h+1 <= k <= m-1 and k^3 <= (4h-1) m^2:
        //   beta(k+1) alpha(k-h) <= beta(k) alpha(k+1-h)
        for h in 1..=h_max {
            for k in (h + 1)..m {
                if (k as u128).pow(3) > (4 * h as u128 - 1) * (m as u128).pow(2) {
                    break;
                }
                checked += 1;
                let lhs = t.beta_num(k + 1) * t.alpha_num(k - h);
                let rhs = t.beta_num(k) * t.alpha_num(k + 1 - h);
                if lhs > rhs {
                    violations.push(Violation {
                        m,
                        k: k as i64,
                        l: h as i64,
                        lhs: format!("g_{h}({m},{}) step numerator {lhs}", k + 1),
                        rhs: format!("g_{h}({m},{k}) step numerator {rhs}"),
                    });
                }
            }
        }
    }

    // Cross-m comparisons need consecutive tables.
    for w in tables.windows(2) {
        let (t, t1) = (&w[0], &w[1]);
        let m = t.m;
        // f(m+1, 1) <= f(m, 1):
        //   beta_{m+1}(1) alpha_m(1) <= 64 beta_m(1) alpha_{m+1}(1)
        checked += 1;
        let lhs = t1.beta_num(1) * t.alpha_num(1);
        let rhs = t.beta_num(1) * t1.alpha_num(1) * &six_bits;
        if lhs > rhs {
            violations.push(Violation {
                m,
                k: 1,
                l: 0,
                lhs: format!("f({},1) numerator {lhs}", m + 1),
                rhs: format!("f({m},1) numerator {rhs}"),
            });
        }
        // g_h(m+1, h+1) >= g_h(m, h+1) for m >= h+1:
        //   beta_{m+1}(h+1) alpha_m(1) >= 64 beta_m(h+1) alpha_{m+1}(1)
        for h in 1..=h_max {
            if m < h + 1 || h + 1 > 2 * m {
                continue;
            }
            checked += 1;
            let lhs = t1.beta_num(h + 1) * t.alpha_num(1);
            let rhs = t.beta_num(h + 1) * t1.alpha_num(1) * &six_bits;
            if lhs < rhs {
                violations.push(Violation {
                    m,
                    k: (h + 1) as i64,
                    l: h as i64,
                    lhs: format!("g_{h}({},{}) numerator {lhs}", m + 1, h + 1),
                    rhs: format!("g_{h}({m},{}) numerator {rhs}", h + 1),
                });
            }
        }
    }

    Ok(LemmaReport {
        lemma: "ratio-monotonicity".into(),
        params: vec![
            ("m_max".into(), m_max.to_string()),
            ("h_max".into(), h_max.to_string()),
        ],
        checked,
        violations,
        threshold: None,
        worst_margin: None,
        per_m: Vec::new(),
    })
}

/// Largest admissible `k` in `k <= l - l^2/(4m) - 1`, or 0 if none.
fn tail_k_bound(m: u64, l: u64) -> u64 {
    let m = m as i128;
    let l = l as i128;
    let num = 4 * m * l - l * l - 4 * m;
    if num <= 0 {
        return 0;
    }
    (num / (4 * m)).max(0) as u64
}

/// Tail comparison: part 1 `abar_m(k) <= bbar_m(k)` for all `k`, and
/// part 2 `abar_m(k) >= bbar_m(l)` for `1 <= k <= l - l^2/(4m) - 1`.
/// The discovered threshold is the smallest `m0` such that part 2 has no
/// violation for any tested `m >= m0`.
pub fn check_tail_domination(m_max: u64) -> Result<LemmaReport> {
    let per_m: Vec<(u64, Vec<Violation>, bool)> = (1..=m_max)
        .into_par_iter()
        .map(|m| {
            let t = alpha_beta_tables(m).expect("m >= 1");
            let mut violations = Vec::new();
            let mut checked = 0;
            // Part 1 follows from the mass lemma; a failure here is a bug.
            for k in 1..=m {
                checked += 1;
                if !t.tail_alpha_le_beta(k, k) {
                    violations.push(Violation {
                        m,
                        k: k as i64,
                        l: k as i64,
                        lhs: format!("abar({m},{k})"),
                        rhs: format!("bbar({m},{k})"),
                    });
                }
            }
            // Part 2 over the exact region.
            let mut part2_clean = true;
            for l in 1..=2 * m {
                let kmax = tail_k_bound(m, l).min(m);
                for k in 1..=kmax {
                    checked += 1;
                    if !t.tail_alpha_ge_beta(k, l) {
                        part2_clean = false;
                        violations.push(Violation {
                            m,
                            k: k as i64,
                            l: l as i64,
                            lhs: format!("abar({m},{k})"),
                            rhs: format!("bbar({m},{l})"),
                        });
                    }
                }
            }
            (checked, violations, part2_clean)
        })
        .collect();

    let mut checked = 0;
    let mut violations = Vec::new();
    let mut m0 = 1u64;
    let mut rows = Vec::with_capacity(per_m.len());
    for (idx, (c, v, clean)) in per_m.iter().enumerate() {
        checked += c;
        rows.push(PerM { m: idx as u64 + 1, pass: v.is_empty(), worst_margin: None });
        violations.extend(v.iter().cloned());
        if !clean {
            m0 = idx as u64 + 2; // next m after the last violating one
        }
    }
    Ok(LemmaReport {
        lemma: "tail-domination".into(),
        params: vec![("m_max".into(), m_max.to_string())],
        checked,
        violations: violations
            .into_iter()
            .filter(|v| v.m >= m0 || v.k == v.l) // part-1 violations always count
            .collect(),
        threshold: Some(m0),
        worst_margin: None,
        per_m: rows,
    })
}

/// Relative entropy of Bernoulli(p) with respect to Bernoulli(1/2).
pub fn entropy_d(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let mut v = 0.0;
    if p > 0.0 {
        v += p * (2.0 * p).ln();
    }
    if p < 1.0 {
        v += (1.0 - p) * (2.0 - 2.0 * p).ln();
    }
    v
}

/// `Q(t) = 4 D(1/2 + t/2) - D(1/2 + s/2)` with `s = 2t - t^2`.
pub fn entropy_q(t: f64) -> f64 {
    let s = 2.0 * t - t * t;
    4.0 * entropy_d(0.5 + t / 2.0) - entropy_d(0.5 + s / 2.0)
}

/// Check `Q(t) >= 1.5 t^3` on the grid `t = j/grid_size`, `j = 1..=grid_size`,
/// with a `-1e-12` guard band.
pub fn check_entropy_bound(grid_size: u64) -> Result<LemmaReport> {
    if grid_size < 2 {
        return Err(Error::invalid("grid_size must be at least 2"));
    }
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    for j in 1..=grid_size {
        let t = j as f64 / grid_size as f64;
        let margin = entropy_q(t) - 1.5 * t * t * t;
        worst = worst.min(margin);
        if margin < -1e-12 {
            violations.push(Violation {
                m: 0,
                k: j as i64,
                l: grid_size as i64,
                lhs: format!("1.5 t^3 at t={t}"),
                rhs: format!("Q(t) = {}", entropy_q(t)),
            });
        }
    }
    Ok(LemmaReport {
        lemma: "entropy-cubic-bound".into(),
        params: vec![("grid".into(), grid_size.to_string())],
        checked: grid_size,
        violations,
        threshold: None,
        worst_margin: Some(worst),
        per_m: Vec::new(),
    })
}

/// Ash's sandwich, with `A = 1/sqrt(8)` and `B = 1/sqrt(2 pi)`:
/// pointwise on `2^{-n} C(n,k)` for `1 <= k <= n-1` and on the suffix sum
/// for `n/2 < k < n`. Exact rationals against float bounds, flagged past
/// `1e-12` relative slack.
pub fn check_ash_sandwich(n_max: u64) -> Result<LemmaReport> {
    if n_max < 2 {
        return Err(Error::invalid("n_max must be at least 2"));
    }
    let a_const = 1.0 / 8.0f64.sqrt();
    let b_const = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let per_n: Vec<(u64, Vec<Violation>, f64)> = (2..=n_max)
        .into_par_iter()
        .map(|n| {
            let row = crate::numeric::binomial_row(n);
            let mut violations = Vec::new();
            let mut checked = 0;
            let mut worst = f64::INFINITY;
            let record = |cond: f64, n: u64, k: u64, what: &str, violations: &mut Vec<Violation>| {
                if cond < -1e-12 {
                    violations.push(Violation {
                        m: n,
                        k: k as i64,
                        l: 0,
                        lhs: what.to_string(),
                        rhs: format!("margin {cond}"),
                    });
                }
            };
            // Pointwise sandwich.
            for k in 1..n {
                checked += 1;
                let exact = uint_shr_to_f64(&row[k as usize], n);
                let scale = (n as f64 / (k as f64 * (n - k) as f64)).sqrt()
                    * (-(n as f64) * entropy_d(k as f64 / n as f64)).exp();
                let lo = a_const * scale;
                let hi = b_const * scale;
                let m1 = exact / lo - 1.0;
                let m2 = 1.0 - exact / hi;
                worst = worst.min(m1).min(m2);
                record(m1, n, k, "pointwise lower", &mut violations);
                record(m2, n, k, "pointwise upper", &mut violations);
            }
            // Tail sandwich for n/2 < k < n.
            let mut suffix = BigUint::zero();
            let mut tails: Vec<BigUint> = vec![BigUint::zero(); n as usize + 1];
            for k in (0..=n as usize).rev() {
                suffix += &row[k];
                tails[k] = suffix.clone();
            }
            for k in (n / 2 + 1)..n {
                if 2 * k <= n {
                    continue;
                }
                checked += 1;
                let exact = uint_shr_to_f64(&tails[k as usize], n);
                let ent = (-(n as f64) * entropy_d(k as f64 / n as f64)).exp();
                let lo = a_const * (n as f64 / (k as f64 * (n - k) as f64)).sqrt() * ent;
                let m1 = exact / lo - 1.0;
                let m2 = 1.0 - exact / ent;
                worst = worst.min(m1).min(m2);
                record(m1, n, k, "tail lower", &mut violations);
                record(m2, n, k, "tail upper", &mut violations);
            }
            (checked, violations, worst)
        })
        .collect();
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut worst = f64::INFINITY;
    for (c, v, w) in per_n {
        checked += c;
        violations.extend(v);
        worst = worst.min(w);
    }
    Ok(LemmaReport {
        lemma: "ash-sandwich".into(),
        params: vec![("n_max".into(), n_max.to_string())],
        checked,
        violations,
        threshold: None,
        worst_margin: Some(worst),
        per_m: Vec::new(),
    })
}
