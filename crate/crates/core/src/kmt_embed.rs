//! Dyadic coupled construction of the uniform empirical process and a
//! Brownian bridge, with deviation statistics.
//!
//! The bridge is built from per-interval Gaussians through the Schauder
//! refinement (each midpoint gets `Z(I) 2^{-p/2 - 1}`), and the sample
//! counts follow the same tree: a node holding `N(I)` points draws
//! `N̂(I) = F_{S_N}^{-1}(Phi(Z(I)))`, the quantile coupling, and passes
//! `(N(I) + N̂(I))/2` points to the left child. Both the bridge and the
//! empirical process are then exact at the generation-`m` dyadic grid.
//!
//! Per-node streams are derived from `(seed, p, k)`, so construction
//! order cannot affect the sample.

#![allow(clippy::manual_is_multiple_of)]

use rayon::prelude::*;

use crate::error::Error;
use crate::numeric::{linear_fit, ln_binomial};
use crate::rng::{derive_key, Stream};
use crate::Result;

/// Inverse CDF of `Binomial(n, 1/2)` at `u`, by log-space cumulative
/// summation from the nearer tail (exact-pmf inversion; no closed-form
/// approximation enters the decision).
pub fn half_binomial_quantile(n: u64, u: f64) -> u64 {
    debug_assert!(u > 0.0 && u < 1.0);
    let ln2 = std::f64::consts::LN_2;
    if n == 0 {
        return 0;
    }
    if u <= 0.5 {
        // smallest k with CDF(k) >= u
        let mut lp = -(n as f64) * ln2;
        let mut acc = lp.exp();
        let mut k = 0u64;
        while acc < u && k < n {
            lp += ((n - k) as f64 / (k + 1) as f64).ln();
            k += 1;
            acc += lp.exp();
        }
        k
    } else {
        // walk from the top: smallest k with P(X >= k+1) <= 1 - u
        let t = 1.0 - u;
        let mut lp = -(n as f64) * ln2;
        let mut acc = lp.exp();
        let mut j = n;
        loop {
            if acc > t {
                return j;
            }
            if j == 0 {
                return 0;
            }
            lp += (j as f64 / (n - j + 1) as f64).ln();
            j -= 1;
            acc += lp.exp();
        }
    }
}

/// Quantile of the walk `S_n` at `u`: `2 q - n` with `q` the binomial
/// quantile. The same log-space path covers sizes past `2^15`; the node
/// laws in the experiments stay well below that.
pub fn walk_quantile(n: u64, u: f64) -> i64 {
    2 * half_binomial_quantile(n, u) as i64 - n as i64
}

/// Per-interval data of the coupled construction.
#[derive(Debug, Clone)]
pub struct DyadicTree {
    pub n: u64,
    pub depth: u32,
    /// `counts[p][k] = N(I_{p,k})`, `p = 0..=depth`.
    pub counts: Vec<Vec<u32>>,
    /// `z[p][k] = Z(I_{p,k})`, drawn for every node through level `depth`.
    pub z: Vec<Vec<f64>>,
    /// `nhat[p][k]`, the coupled walk increment at each node.
    pub nhat: Vec<Vec<i64>>,
    /// Nodes below the verified coupling threshold (assertions skipped).
    pub below_threshold: u64,
}

/// Build the tree. `assert_threshold` is the walk size from which the
/// two quantile-coupling inequalities are hard-asserted per node
/// (use the threshold discovered by the endpoint checks).
pub fn build_dyadic_tree(
    n: u64,
    depth: u32,
    seed: u64,
    assert_threshold: u64,
) -> Result<DyadicTree> {
    if n == 0 || depth == 0 {
        return Err(Error::invalid("need n >= 1 and depth >= 1"));
    }
    if depth > 26 {
        return Err(Error::Capability(format!(
            "depth {depth} needs 2^{depth} nodes, above the configured cap"
        )));
    }
    let levels = depth as usize + 1;
    let mut counts: Vec<Vec<u32>> = Vec::with_capacity(levels);
    let mut zs: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut nhats: Vec<Vec<i64>> = Vec::with_capacity(levels);
    counts.push(vec![n as u32]);
    let mut below_threshold = 0u64;
    for p in 0..levels {
        let width = 1usize << p;
        let mut z_row = vec![0.0f64; width];
        let mut nh_row = vec![0i64; width];
        let mut next = if p < depth as usize {
            vec![0u32; width << 1]
        } else {
            Vec::new()
        };
        for k in 0..width {
            let big_n = counts[p][k] as u64;
            let mut stream = Stream::derived(seed, p as u64, k as u64, 0xd7ad);
            let (u, zval) = stream.next_uniform_normal_pair();
            z_row[k] = zval;
            if big_n == 0 {
                continue;
            }
            let nhat = walk_quantile(big_n, u);
            nh_row[k] = nhat;
            if big_n >= assert_threshold {
                let sq = (big_n as f64).sqrt();
                assert!(
                    nhat.abs() as f64 <= zval.abs() * sq + 3.0 + 1e-9,
                    "node ({p},{k}): |nhat| bound failed"
                );
                assert!(
                    (nhat as f64 - zval * sq).abs() <= zval * zval + 11.0 + 1e-9,
                    "node ({p},{k}): quadratic bound failed"
                );
            } else {
                below_threshold += 1;
            }
            if p < depth as usize {
                let left = ((big_n as i64 + nhat) / 2) as u32;
                next[2 * k] = left;
                next[2 * k + 1] = big_n as u32 - left;
            }
        }
        zs.push(z_row);
        nhats.push(nh_row);
        if p < depth as usize {
            counts.push(next);
        }
    }
    Ok(DyadicTree { n, depth, counts, z: zs, nhat: nhats, below_threshold })
}

/// Coupled paths on the dyadic grid `T(m)` plus deviation statistics.
#[derive(Debug, Clone)]
pub struct CoupledGrid {
    /// Empirical process `G_n` at `k 2^{-m}`, `k = 0..=2^m`.
    pub g: Vec<f64>,
    /// Bridge `W_0` at the same points (exact at this grid).
    pub w: Vec<f64>,
    /// `max sqrt(n) |G_n - W_0|` over the grid.
    pub d_n: f64,
    /// Largest grid increment of each path over one leaf cell.
    pub delta_g: f64,
    pub delta_w: f64,
    /// `max over leaf cells of sum_p Z(I_{p,t})^2`.
    pub chi2_max: f64,
}

/// Evaluate both paths at the generation-`m` grid.
pub fn extract_paths(tree: &DyadicTree) -> CoupledGrid {
    let m = tree.depth as usize;
    let cells = 1usize << m;
    let n = tree.n as f64;
    let sqrt_n = n.sqrt();

    // Bridge via Schauder midpoint refinement; exact at the grid because
    // the finer Haar terms vanish there.
    let mut w = vec![0.0f64; cells + 1];
    for p in 0..m {
        let stride = 1usize << (m - p);
        let bump = 2f64.powf(-(p as f64) / 2.0 - 1.0);
        for k in 0..(1usize << p) {
            let left = k * stride;
            let right = left + stride;
            let mid = left + stride / 2;
            w[mid] = 0.5 * (w[left] + w[right]) + tree.z[p][k] * bump;
        }
    }

    // Empirical process from leaf counts.
    let mut g = vec![0.0f64; cells + 1];
    let mut prefix = 0u64;
    for k in 0..cells {
        prefix += tree.counts[m][k] as u64;
        let t = (k + 1) as f64 / cells as f64;
        g[k + 1] = (prefix as f64 - n * t) / sqrt_n;
    }

    let mut d_n: f64 = 0.0;
    for i in 0..=cells {
        d_n = d_n.max(sqrt_n * (g[i] - w[i]).abs());
    }
    let mut delta_g: f64 = 0.0;
    let mut delta_w: f64 = 0.0;
    for i in 0..cells {
        delta_g = delta_g.max((g[i + 1] - g[i]).abs());
        delta_w = delta_w.max((w[i + 1] - w[i]).abs());
    }

    // chi-squared profile: accumulate z^2 down the tree.
    let mut chi = vec![0.0f64; cells];
    for p in 0..=m {
        let stride = 1usize << (m - p);
        for k in 0..(1usize << p) {
            let zz = tree.z[p][k] * tree.z[p][k];
            for cell in chi[k * stride..(k + 1) * stride].iter_mut() {
                *cell += zz;
            }
        }
    }
    let chi2_max = chi.iter().cloned().fold(0.0, f64::max);

    CoupledGrid { g, w, d_n, delta_g, delta_w, chi2_max }
}

/// Default depth rule: `ceil(log2 n)`.
pub fn default_depth(n: u64) -> u32 {
    (64 - (n.max(2) - 1).leading_zeros()).max(1)
}

/// Per-replication record.
#[derive(Debug, Clone)]
pub struct EpRep {
    pub n: u64,
    pub rep: u64,
    pub d_n: f64,
    pub delta_g: f64,
    pub delta_w: f64,
    pub chi2_max: f64,
}

/// Aggregated statistics for one sample size.
#[derive(Debug, Clone)]
pub struct EpRow {
    pub n: u64,
    pub depth: u32,
    pub reps: u64,
    pub mean_d: f64,
    pub d_p50: f64,
    pub d_p90: f64,
    pub d_p99: f64,
    pub mean_delta_g: f64,
    pub mean_delta_w: f64,
    /// Empirical `P(chi2_max >= 10 (m + x))`, the bound `2 e^{-m-x}`,
    /// and the Monte Carlo standard error, for `x = 0, 1, 2`.
    pub chi2_tail: [(f64, f64, f64); 3],
    pub below_threshold_nodes: u64,
}

/// Full experiment output.
#[derive(Debug, Clone)]
pub struct EpExperiment {
    pub seed: u64,
    pub rows: Vec<EpRow>,
    pub reps_detail: Vec<EpRep>,
    /// Least-squares fit of mean `D_n` against `ln n`: `(a, b, r2)`.
    pub fit: (f64, f64, f64),
}

impl EpExperiment {
    /// The chi-squared tail bound holds within 3 MC standard errors.
    pub fn chi2_bound_ok(&self) -> bool {
        self.rows.iter().all(|row| {
            row.chi2_tail
                .iter()
                .all(|(emp, bound, se)| *emp <= *bound + 3.0 * *se)
        })
    }
}

fn quantile_of_sorted(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx]
}

/// Run the coupled-construction experiment.
pub fn run_ep_experiment(
    n_list: &[u64],
    reps: u64,
    depth_rule: Option<u32>,
    seed: u64,
    assert_threshold: u64,
) -> Result<EpExperiment> {
    if reps == 0 {
        return Err(Error::invalid("need at least one replication"));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    let mut reps_detail = Vec::new();
    for &n in n_list {
        let depth = depth_rule.unwrap_or_else(|| default_depth(n));
        let per_rep: Vec<(EpRep, u64)> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let rep_seed = derive_key(seed, n, rep, 0xe9);
                let tree = build_dyadic_tree(n, depth, rep_seed, assert_threshold)
                    .expect("valid tree parameters");
                let grid = extract_paths(&tree);
                (
                    EpRep {
                        n,
                        rep,
                        d_n: grid.d_n,
                        delta_g: grid.delta_g,
                        delta_w: grid.delta_w,
                        chi2_max: grid.chi2_max,
                    },
                    tree.below_threshold,
                )
            })
            .collect();
        let mut d: Vec<f64> = per_rep.iter().map(|r| r.0.d_n).collect();
        let mean_d = crate::numeric::compensated_sum(d.iter().cloned()) / reps as f64;
        d.sort_by(f64::total_cmp);
        let mean = |f: &dyn Fn(&EpRep) -> f64| {
            crate::numeric::compensated_sum(per_rep.iter().map(|r| f(&r.0))) / reps as f64
        };
        let m = depth as f64;
        let mut chi2_tail = [(0.0, 0.0, 0.0); 3];
        for (xi, slot) in chi2_tail.iter_mut().enumerate() {
            let x = xi as f64;
            let thr = 10.0 * (m + x);
            let emp = per_rep.iter().filter(|r| r.0.chi2_max >= thr).count() as f64 / reps as f64;
            let bound = 2.0 * (-(m + x)).exp();
            let se = (emp.max(1.0 / reps as f64) * (1.0 - emp) / reps as f64).sqrt();
            *slot = (emp, bound, se);
        }
        rows.push(EpRow {
            n,
            depth,
            reps,
            mean_d,
            d_p50: quantile_of_sorted(&d, 0.5),
            d_p90: quantile_of_sorted(&d, 0.9),
            d_p99: quantile_of_sorted(&d, 0.99),
            mean_delta_g: mean(&|r| r.delta_g),
            mean_delta_w: mean(&|r| r.delta_w),
            chi2_tail,
            below_threshold_nodes: per_rep.iter().map(|r| r.1).sum(),
        });
        reps_detail.extend(per_rep.into_iter().map(|r| r.0));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_d).collect();
    let fit = if rows.len() >= 2 {
        linear_fit(&xs, &ys)
    } else {
        (ys.first().copied().unwrap_or(0.0), 0.0, 1.0)
    };
    Ok(EpExperiment { seed, rows, reps_detail, fit })
}

/// Chi-squared goodness of fit of the level-1 split against
/// `Binomial(n, 1/2)`, over independent trees; returns the p-value.
pub fn level1_split_gof(n: u64, trees: u64, seed: u64) -> Result<f64> {
    if trees < 100 {
        return Err(Error::invalid("need at least 100 trees"));
    }
    let counts: Vec<u32> = (0..trees)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_key(seed, n, rep, 0x60f);
            let tree = build_dyadic_tree(n, 1, rep_seed, u64::MAX).expect("depth 1");
            tree.counts[1][0]
        })
        .collect();
    // Bin the support so each bin expects at least 5 observations.
    let ln2 = std::f64::consts::LN_2;
    let expected: Vec<f64> = (0..=n)
        .map(|k| (ln_binomial(n, k) - n as f64 * ln2).exp() * trees as f64)
        .collect();
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut lo = 0u64;
    let mut acc = 0.0;
    for k in 0..=n {
        acc += expected[k as usize];
        if acc >= 5.0 {
            bins.push((lo, k));
            lo = k + 1;
            acc = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.1 = n;
    }
    let mut stat = 0.0;
    for &(a, b) in &bins {
        let e: f64 = (a..=b).map(|k| expected[k as usize]).sum();
        let o = counts
            .iter()
            .filter(|&&c| (c as u64) >= a && (c as u64) <= b)
            .count() as f64;
        stat += (o - e) * (o - e) / e;
    }
    let df = (bins.len() - 1) as f64;
    Ok(crate::numeric::chi2_sf(stat, df))
}
