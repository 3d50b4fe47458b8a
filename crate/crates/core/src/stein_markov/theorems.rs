//! Coupling verification for the binomial Cauchy-sequence theorem and
//! the two-part hypergeometric theorem.
//!
//! The binomial route couples `X = Ŝ_{4n}` with `Y = 2 Ŝ_n + R` through
//! the joint chain, solves the stationary coupling exactly, and then
//! de-perturbs `R` by the exact Bayes rule against the known walk law to
//! produce the functional `E[e^{theta |2 S_n - S_{4n}|}]`. The admissible
//! range is `8 theta^2 e^{2 theta} < 1`.
//!
//! The hypergeometric part 1 does the same with `X = Ŵ_{4k}[4n, 0]` and
//! `Y = 2 Ŵ_k[n, 0] + R`, checking `E[e^{theta |2 W_1 - W_2|}] <= 3/2`
//! and reporting the largest grid `theta` that passes; part 2 couples
//! `Ŵ_k[n, 0]` with `Ŵ_k[n, s]` directly (no perturbation) and fits the
//! smallest single constant `M` with
//! `E[e^{theta |W_1 - W|}] <= e^{1 + M theta^2 s^2 / n}` over the corpus.

#![allow(clippy::manual_is_multiple_of)]

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::Error;
use crate::exact_dist::{
    centered_hypergeometric, perturb_scale, walk_pmf, LatticePMF,
};
use crate::numeric::{ratio_to_f64, Accumulator};
use crate::Result;

use super::joint::build_joint_chain;
use super::solve::{coupling_functionals, solve_stationary, FunctionalReport, StationaryCoupling};
use super::stein::{stein_from_pmf, stein_scale_perturb};

/// Admissibility condition of the binomial theorem.
pub fn binomial_theta_admissible(theta: f64) -> bool {
    8.0 * theta * theta * (2.0 * theta).exp() < 1.0
}

/// De-perturbation weights: given the perturbed value `y` of
/// `Y = base + R` (`base = 2 X̂` on the unit lattice), return the posterior
/// over `r` by the exact Bayes rule against the base law.
/// `base_mass(b)` must return the exact mass of the base value `b`.
fn deperturb_weights(
    y: i64,
    base_mass: &dyn Fn(i64) -> BigRational,
) -> Vec<(i64, f64)> {
    // P(R = 0) = 1/2, P(R = ±1) = 1/4; posterior ∝ P_R(r) mass(y - r).
    let half = BigRational::new(1.into(), 2.into());
    let quarter = BigRational::new(1.into(), 4.into());
    let w0 = &half * base_mass(y);
    let wm = &quarter * base_mass(y + 1); // r = -1
    let wp = &quarter * base_mass(y - 1); // r = +1
    let total = &w0 + &wm + &wp;
    debug_assert!(!total.is_zero());
    [(0i64, w0), (-1, wm), (1, wp)]
        .into_iter()
        .filter(|(_, w)| !w.is_zero())
        .map(|(r, w)| (r, ratio_to_f64(&(&w / &total))))
        .collect()
}

/// Outcome of one solved instance of either theorem.
#[derive(Debug, Clone)]
pub struct CoupleInstance {
    pub n: u64,
    pub k: u64,
    pub s: i64,
    pub theta: f64,
    /// The de-perturbed exponential functional of the theorem.
    pub functional: f64,
    pub residual: f64,
    pub marginal_error: f64,
    pub states: usize,
    pub p_h_zero: f64,
}

/// Stationary coupling of `X = Ŝ_{4n}` against `Y = 2 Ŝ_n + R`.
pub fn binomial_pair_coupling(n: u64, exact_limit: usize) -> Result<(StationaryCoupling, LatticePMF)> {
    let x = walk_pmf(4 * n)?;
    let tx = stein_from_pmf(&x)?;
    let base = walk_pmf(n)?;
    let tb = stein_from_pmf(&base)?;
    let y = perturb_scale(&base);
    let ty = stein_scale_perturb(&tb, &base)?;
    let jc = build_joint_chain(&tx, &x, &ty, &y)?;
    let sc = solve_stationary(&jc, exact_limit)?;
    Ok((sc, base))
}

/// Exact functional `E[e^{theta |2 S_n - S_{4n}|}]` under the coupling
/// recovered by de-perturbation (exact up to double summation).
fn binomial_functional(sc: &StationaryCoupling, base: &LatticePMF, n: u64, theta: f64) -> f64 {
    // Positions: x = Ŝ_{4n} = S_{4n}/2 at offset -2n; y = S_n + R at
    // offset -(n+1). |2 S_n - S_{4n}| = 2 |(y - r) - x|.
    let base_mass = |b: i64| -> BigRational {
        // base is the law of Ŝ_n = S_n / 2 at offset -n/2; value b of
        // S_n corresponds to atom index (b + n) / 2 when parity fits.
        if (b + n as i64) % 2 != 0 {
            return BigRational::zero();
        }
        let idx = (b + n as i64) / 2;
        if idx < 0 || idx as usize >= base.len() {
            return BigRational::zero();
        }
        base.mass(idx as usize).clone()
    };
    let mut acc = Accumulator::new();
    for (r, &s) in sc.class.iter().enumerate() {
        let u = s / sc.ny;
        let v = s % sc.ny;
        let x = u as i64 - 2 * n as i64; // Ŝ_{4n} position
        let y = v as i64 - (n as i64 + 1); // Y position
        let g = sc.gamma[r];
        for (rr, w) in deperturb_weights(y, &base_mass) {
            let dev = 2.0 * ((y - rr - x).abs() as f64);
            acc.add(g * w * (theta * dev).exp());
        }
    }
    acc.value()
}

/// One instance of the binomial theorem at `(n, theta)`.
pub fn couple_binomials(n: u64, theta: f64, exact_limit: usize) -> Result<CoupleInstance> {
    if !binomial_theta_admissible(theta) {
        return Err(Error::invalid(format!(
            "theta = {theta} violates 8 theta^2 e^(2 theta) < 1"
        )));
    }
    let (sc, base) = binomial_pair_coupling(n, exact_limit)?;
    let functional = binomial_functional(&sc, &base, n, theta);
    Ok(CoupleInstance {
        n,
        k: 0,
        s: 0,
        theta,
        functional,
        residual: sc.residual,
        marginal_error: sc.marginal_error,
        states: sc.class.len(),
        p_h_zero: sc.p_h_zero(),
    })
}

/// Sweep report for the binomial theorem.
#[derive(Debug, Clone)]
pub struct Theorem15Report {
    pub theta: f64,
    pub instances: Vec<CoupleInstance>,
    /// Published running supremum of the functional over the range.
    pub kappa_hat: f64,
    /// Relative spread of the functional over the last quarter of the range.
    pub plateau_spread: f64,
    /// Functional-bound checks at the same theta on every instance.
    pub bound_checks: Vec<FunctionalReport>,
}

impl Theorem15Report {
    pub fn pass(&self) -> bool {
        self.kappa_hat.is_finite()
            && self.plateau_spread < 0.05
            && self.bound_checks.iter().all(|b| b.pass())
    }
}

/// Run the binomial theorem over `n = 1..=n_max`.
pub fn theorem_1_5_sweep(n_max: u64, theta: f64, exact_limit: usize) -> Result<Theorem15Report> {
    if !binomial_theta_admissible(theta) {
        return Err(Error::invalid(format!(
            "theta = {theta} violates 8 theta^2 e^(2 theta) < 1"
        )));
    }
    let ns: Vec<u64> = (1..=n_max).collect();
    // Chunk the largest solves to bound peak band memory.
    let results: Vec<(CoupleInstance, FunctionalReport)> = ns
        .par_chunks(4)
        .flat_map(|chunk| {
            chunk
                .iter()
                .map(|&n| {
                    let (sc, base) = binomial_pair_coupling(n, exact_limit).expect("solvable");
                    let inst = CoupleInstance {
                        n,
                        k: 0,
                        s: 0,
                        theta,
                        functional: binomial_functional(&sc, &base, n, theta),
                        residual: sc.residual,
                        marginal_error: sc.marginal_error,
                        states: sc.class.len(),
                        p_h_zero: sc.p_h_zero(),
                    };
                    let fr = coupling_functionals(&sc, theta, 1, 0.5, 0.5).expect("valid params");
                    (inst, fr)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut instances: Vec<CoupleInstance> = results.iter().map(|r| r.0.clone()).collect();
    instances.sort_by_key(|i| i.n);
    let bound_checks: Vec<FunctionalReport> = results.into_iter().map(|r| r.1).collect();
    let kappa_hat = instances.iter().map(|i| i.functional).fold(f64::MIN, f64::max);
    let tail_start = (3 * instances.len()) / 4;
    let tail = &instances[tail_start..];
    let (lo, hi) = tail.iter().fold((f64::MAX, f64::MIN), |(lo, hi), i| {
        (lo.min(i.functional), hi.max(i.functional))
    });
    Ok(Theorem15Report {
        theta,
        instances,
        kappa_hat,
        plateau_spread: (hi - lo) / lo,
        bound_checks,
    })
}

/// Stationary coupling for part 1 of the hypergeometric theorem:
/// `X = Ŵ_{4k}[4n, 0]`, `Y = 2 Ŵ_k[n, 0] + R`.
pub fn hypergeo_pair_coupling(
    n: u64,
    k: u64,
    exact_limit: usize,
) -> Result<(StationaryCoupling, LatticePMF)> {
    if n % 2 != 0 {
        return Err(Error::invalid("part 1 requires even n"));
    }
    if 3 * k < n || 3 * k > 2 * n {
        return Err(Error::invalid("k must lie in [n/3, 2n/3]"));
    }
    let x = centered_hypergeometric(4 * n, 4 * k, 0)?;
    let tx = stein_from_pmf(&x)?;
    let base = centered_hypergeometric(n, k, 0)?;
    let tb = stein_from_pmf(&base)?;
    let y = perturb_scale(&base);
    let ty = stein_scale_perturb(&tb, &base)?;
    let jc = build_joint_chain(&tx, &x, &ty, &y)?;
    let sc = solve_stationary(&jc, exact_limit)?;
    Ok((sc, base))
}

/// `E[e^{theta |2 W_1 - W_2|}]` for part 1, by de-perturbation.
fn hypergeo_part1_functional(sc: &StationaryCoupling, base: &LatticePMF, theta: f64) -> f64 {
    // X positions: Ŵ_{4k}[4n,0] = Ŝ_{4k} - 2k at integer offset;
    // Y = 2 Ŵ_k[n,0] + R with 2 Ŵ = S_k[n,0] (parity k mod 2).
    // |2 W_1 - W_2| = 2 |(y - r) - x|.
    // Doubled base offset 2 jlo - k is an exact integer.
    let off2 = (base.offset() * BigRational::from_integer(2.into())).to_integer();
    let off2: i64 = off2.try_into().expect("small support");
    let base_mass = |b: i64| -> BigRational {
        // base = law of Ŵ_k[n,0]; value b of 2 Ŵ sits at index (b - off2)/2.
        if (b - off2) % 2 != 0 {
            return BigRational::zero();
        }
        let idx = (b - off2) / 2;
        if idx < 0 || idx as usize >= base.len() {
            return BigRational::zero();
        }
        base.mass(idx as usize).clone()
    };
    let mut acc = Accumulator::new();
    for (r, &s) in sc.class.iter().enumerate() {
        let u = s / sc.ny;
        let v = s % sc.ny;
        let x = sc.x_pos[u]; // integral for these supports
        let y = sc.y_pos[v].round() as i64;
        let g = sc.gamma[r];
        for (rr, w) in deperturb_weights(y, &base_mass) {
            let dev = 2.0 * ((y - rr) as f64 - x).abs();
            acc.add(g * w * (theta * dev).exp());
        }
    }
    acc.value()
}

/// Part-1 report: the functional per theta over a grid, and the largest
/// passing theta.
#[derive(Debug, Clone)]
pub struct HypergeoPart1Report {
    pub pairs: Vec<(u64, u64)>,
    pub theta_grid: Vec<f64>,
    /// `sup over (n, k)` of the functional, per grid theta.
    pub worst_functional: Vec<f64>,
    /// Largest grid theta with worst functional <= 3/2, if any.
    pub theta_hat: Option<f64>,
}

/// Run part 1 over even `n` in `[n_lo, n_hi]` with `k = n/2`.
pub fn hypergeo_part1_sweep(
    n_lo: u64,
    n_hi: u64,
    theta_grid: &[f64],
    exact_limit: usize,
) -> Result<HypergeoPart1Report> {
    let pairs: Vec<(u64, u64)> = (n_lo..=n_hi)
        .filter(|n| n % 2 == 0)
        .map(|n| (n, n / 2))
        .collect();
    let per_pair: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(n, k)| {
            let (sc, base) = hypergeo_pair_coupling(n, k, exact_limit).expect("valid pair");
            theta_grid
                .iter()
                .map(|&t| hypergeo_part1_functional(&sc, &base, t))
                .collect()
        })
        .collect();
    let worst_functional: Vec<f64> = (0..theta_grid.len())
        .map(|ti| per_pair.iter().map(|f| f[ti]).fold(f64::MIN, f64::max))
        .collect();
    let theta_hat = theta_grid
        .iter()
        .zip(&worst_functional)
        .filter(|(_, w)| **w <= 1.5)
        .map(|(t, _)| *t)
        .fold(None, |best: Option<f64>, t| Some(best.map_or(t, |b| b.max(t))));
    Ok(HypergeoPart1Report {
        pairs,
        theta_grid: theta_grid.to_vec(),
        worst_functional,
        theta_hat,
    })
}

/// One part-2 instance: couple `Ŵ_k[n,0]` with `Ŵ_k[n,s]` directly and
/// return `E[e^{theta |W_1 - W|}] = E[e^{2 theta |H|}]`.
pub fn hypergeo_part2_functional(
    n: u64,
    k: u64,
    s: i64,
    theta: f64,
    exact_limit: usize,
) -> Result<CoupleInstance> {
    if n % 2 != 0 {
        return Err(Error::invalid("part 2 corpus uses even n"));
    }
    if 3 * k < n || 3 * k > 2 * n {
        return Err(Error::invalid("k must lie in [n/3, 2n/3]"));
    }
    if s.unsigned_abs() > n || s % 2 != 0 {
        return Err(Error::invalid("s must be an even probable value"));
    }
    let x = centered_hypergeometric(n, k, 0)?;
    let tx = stein_from_pmf(&x)?;
    let y = centered_hypergeometric(n, k, s)?;
    let ty = stein_from_pmf(&y)?;
    let jc = build_joint_chain(&tx, &x, &ty, &y)?;
    let sc = solve_stationary(&jc, exact_limit)?;
    let functional = sc.expect(|h, _| (2.0 * theta * h.abs()).exp());
    Ok(CoupleInstance {
        n,
        k,
        s,
        theta,
        functional,
        residual: sc.residual,
        marginal_error: sc.marginal_error,
        states: sc.class.len(),
        p_h_zero: sc.p_h_zero(),
    })
}

/// Part-2 corpus fit of the single constant `M`.
#[derive(Debug, Clone)]
pub struct HypergeoPart2Report {
    pub instances: Vec<CoupleInstance>,
    /// Smallest single `M` such that every instance satisfies
    /// `functional <= e^{1 + M theta^2 s^2 / n}`.
    pub m_hat: f64,
    pub pass: bool,
}

/// Fit `M` over a corpus of `(n, k, s, theta)` instances.
pub fn hypergeo_part2_fit(
    corpus: &[(u64, u64, i64, f64)],
    exact_limit: usize,
) -> Result<HypergeoPart2Report> {
    let instances: Vec<CoupleInstance> = corpus
        .par_iter()
        .map(|&(n, k, s, theta)| {
            hypergeo_part2_functional(n, k, s, theta, exact_limit).expect("valid instance")
        })
        .collect();
    let mut m_hat = 0.0f64;
    for inst in &instances {
        let ln_f = inst.functional.ln();
        if inst.s != 0 && ln_f > 1.0 {
            let need = (ln_f - 1.0) * inst.n as f64
                / (inst.theta * inst.theta * (inst.s * inst.s) as f64);
            m_hat = m_hat.max(need);
        } else if inst.s == 0 && ln_f > 1.0 {
            // s = 0 leaves no knob: the bound must hold with e alone.
            return Ok(HypergeoPart2Report { instances, m_hat: f64::INFINITY, pass: false });
        }
    }
    let pass = instances.iter().all(|i| {
        i.functional
            <= (1.0 + m_hat * i.theta * i.theta * (i.s * i.s) as f64 / i.n as f64).exp() + 1e-12
    });
    Ok(HypergeoPart2Report { instances, m_hat, pass })
}

/// Combined per-instance entry point matching the CLI surface: runs
/// part 1 at `(n, k)` and part 2 at `(n, k, s)` for one theta.
pub fn couple_hypergeos(
    n: u64,
    k: u64,
    s: i64,
    theta: f64,
    exact_limit: usize,
) -> Result<(f64, f64)> {
    if n % 2 != 0 {
        return Err(Error::invalid("n must be even"));
    }
    let (sc, base) = hypergeo_pair_coupling(n, k, exact_limit)?;
    let part1 = hypergeo_part1_functional(&sc, &base, theta);
    let part2 = hypergeo_part2_functional(n, k, s, theta, exact_limit)?.functional;
    Ok((part1, part2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_examples() {
        // 8 (0.25)^2 e^{0.5} ~ 0.824 < 1; 8 (0.3)^2 e^{0.6} ~ 1.312 > 1.
        assert!(binomial_theta_admissible(0.25));
        assert!(!binomial_theta_admissible(0.3));
        assert!(couple_binomials(2, 0.3, 0).is_err());
    }

    #[test]
    fn theta_zero_gives_unit_functional() {
        let inst = couple_binomials(1, 0.0, 0).unwrap();
        assert!((inst.functional - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_sweep_properties() {
        let rep = theorem_1_5_sweep(12, 0.25, 0).unwrap();
        assert!(rep.kappa_hat.is_finite() && rep.kappa_hat >= 1.0);
        for b in &rep.bound_checks {
            assert!(b.pass());
        }
        // Functionals stay bounded and positive.
        for inst in &rep.instances {
            assert!(inst.functional >= 1.0 && inst.functional < rep.kappa_hat + 1e-12);
            assert!(inst.residual <= 1e-10);
        }
    }

    #[test]
    fn hypergeo_part1_small() {
        let grid = [0.01, 0.05, 0.1, 0.2];
        let rep = hypergeo_part1_sweep(6, 12, &grid, 0).unwrap();
        assert_eq!(rep.pairs, vec![(6, 3), (8, 4), (10, 5), (12, 6)]);
        let th = rep.theta_hat.expect("some theta passes");
        assert!(th >= 0.01, "theta_hat = {th}");
        // theta = 0 would give exactly 1; the functional grows in theta.
        for w in rep.worst_functional.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn hypergeo_part2_small() {
        // s = 0: identical chains, functional exactly 1 <= e.
        let inst = hypergeo_part2_functional(12, 6, 0, 0.1, 0).unwrap();
        assert!((inst.functional - 1.0).abs() < 1e-12);
        assert!(inst.p_h_zero >= 1.0 - 1e-12);
        // Small corpus fit.
        let corpus = [
            (12u64, 6u64, 0i64, 0.1f64),
            (12, 6, 2, 0.1),
            (12, 6, 4, 0.1),
            (12, 4, 2, 0.1),
            (16, 8, 2, 0.05),
        ];
        let rep = hypergeo_part2_fit(&corpus, 0).unwrap();
        assert!(rep.pass, "m_hat = {}", rep.m_hat);
        assert!(rep.m_hat.is_finite());
    }

    #[test]
    fn parameter_validation() {
        assert!(hypergeo_pair_coupling(7, 3, 0).is_err()); // odd n
        assert!(hypergeo_pair_coupling(12, 3, 0).is_err()); // k < n/3
        assert!(hypergeo_part2_functional(12, 6, 3, 0.1, 0).is_err()); // odd s
    }
}
