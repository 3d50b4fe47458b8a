//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Every tolerance and threshold is pinned here.

use std::process::Command;
use std::time::Instant;

use kmt_couplings::numeric::ratio;
use kmt_couplings::rw_embed::{InductionConfig, RwMode};
use kmt_couplings::{exact_dist, kmt_embed, lemma_verify, monotone_coupling, rw_embed, stein_markov};

fn announce(id: u32, pass: bool, detail: &str) {
    println!("[criterion {id:02}] {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

/// Lemma 3.1 exact suite: zero violations for all m <= 300, k <= m,
/// within 60 seconds.
#[test]
fn criterion_01_mass_domination() {
    let start = Instant::now();
    let r = lemma_verify::check_mass_domination(300).unwrap();
    let elapsed = start.elapsed();
    let pass = r.pass() && elapsed.as_secs() < 60;
    announce(
        1,
        pass,
        &format!(
            "alpha <= beta exact, m <= 300: {} checks, {} violations, {:.2?}",
            r.checked,
            r.violations.len(),
            elapsed
        ),
    );
}

/// Lemma 3.2 exact suite over the full (m, k, l) region for m <= 200,
/// including the special case l^3 <= 3 m^2.
#[test]
fn criterion_02_shifted_domination() {
    let r = lemma_verify::check_shifted_domination(200).unwrap();
    announce(
        2,
        r.pass(),
        &format!(
            "alpha(k) >= beta(l) on the stated region, m <= 200: {} checks, {} violations",
            r.checked,
            r.violations.len()
        ),
    );
}

/// Lemma 4.1: part 1 clean for m <= 300; part 2 clean from a discovered
/// m0 <= 300 onward.
#[test]
fn criterion_03_tail_domination() {
    let r = lemma_verify::check_tail_domination(300).unwrap();
    let m0 = r.threshold.unwrap();
    let pass = r.pass() && m0 <= 300;
    announce(
        3,
        pass,
        &format!(
            "tail comparison m <= 300: m0 = {m0}, {} checks, {} violations from m0 on",
            r.checked,
            r.violations.len()
        ),
    );
}

/// Theorem 1.4 margins: nonnegative for all even n from a discovered
/// n0 <= 100 through 2000, and the worked n = 2 table matches exactly.
#[test]
fn criterion_04_signed_coupling_margins() {
    // Worked pairs at n = 2 from the absolute comonotone coupling.
    let s2 = exact_dist::walk_pmf(2).unwrap();
    let s8 = exact_dist::walk_pmf(8).unwrap();
    let abs = |pmf: &exact_dist::LatticePMF, scale: i64| {
        let law = exact_dist::absolute_law(pmf);
        (
            law.iter().map(|e| &e.0 * ratio(scale, 1)).collect::<Vec<_>>(),
            law.iter().map(|e| e.1.clone()).collect::<Vec<_>>(),
        )
    };
    let (aa, am) = abs(&s2, 4); // |2 S_2|
    let (ba, bm) = abs(&s8, 2); // |S_8|
    let table = monotone_coupling::comonotone_couple_raw(aa, am, ba, bm);
    let got: Vec<(String, String, String)> = table
        .pairs()
        .map(|(a, b, m)| {
            (
                exact_dist::fraction_string(a),
                exact_dist::fraction_string(b),
                exact_dist::fraction_string(m),
            )
        })
        .collect();
    let expect = [
        ("0", "0", "35/128"),
        ("0", "2", "29/128"),
        ("4", "2", "27/128"),
        ("4", "4", "7/32"),
        ("4", "6", "1/16"),
        ("4", "8", "1/128"),
    ];
    let table_ok = got.len() == expect.len()
        && got
            .iter()
            .zip(expect.iter())
            .all(|(g, e)| g.0 == e.0 && g.1 == e.1 && g.2 == e.2);

    let sweep = monotone_coupling::theorem_1_4_sweep(2000).unwrap();
    let pass = table_ok && sweep.threshold <= 100 && sweep.pass_from_threshold();
    announce(
        4,
        pass,
        &format!(
            "atom-exact margins to n = 2000: n0 = {}, worked n = 2 table {}",
            sweep.threshold,
            if table_ok { "matches" } else { "MISMATCH" }
        ),
    );
}

/// Lemma 1.1 quantile check at interval endpoints for all n through 4096,
/// with a discovered threshold <= 50.
#[test]
fn criterion_05_quantile_endpoints() {
    let (reports, threshold) = monotone_coupling::lemma_1_1_sweep(4096).unwrap();
    let clean = reports.iter().filter(|r| r.n >= threshold).all(|r| r.pass);
    let pass = threshold <= 50 && clean;
    announce(
        5,
        pass,
        &format!("both inequalities at endpoints, n <= 4096: threshold n0 = {threshold}"),
    );
}

/// Stein calculus cross-validation: closed forms, convolution and
/// scaling equal the general formula exactly on the corpora.
#[test]
fn criterion_06_stein_cross_validation() {
    use rayon::prelude::*;
    let mut bin = Vec::new();
    for n in 1..=64u64 {
        if n % 2 == 0 {
            bin.push((n, ratio(1, 2)));
        }
        if n % 4 == 0 {
            bin.push((n, ratio(1, 4)));
            bin.push((n, ratio(3, 4)));
        }
        if n % 3 == 0 {
            bin.push((n, ratio(1, 3)));
        }
    }
    let bin_ok = bin.par_iter().all(|(n, p)| {
        let pmf = exact_dist::centered_binomial(*n, p).unwrap();
        let general = stein_markov::stein_from_pmf(&pmf).unwrap();
        stein_markov::stein_binomial(*n, p).unwrap() == general
            && stein_markov::stein_scale_perturb(&general, &pmf).unwrap()
                == stein_markov::stein_from_pmf(&exact_dist::perturb_scale(&pmf)).unwrap()
    });
    let hyper: Vec<(u64, u64, i64)> = (2..=64u64)
        .flat_map(|n| {
            (1..n).flat_map(move |k| {
                (-(n as i64)..=(n as i64)).filter_map(move |s| {
                    ((n as i64 - s) % 2 == 0 && s.unsigned_abs() <= n - 2).then_some((n, k, s))
                })
            })
        })
        .collect();
    let hyper_count = hyper.len();
    let hyper_ok = hyper.par_iter().all(|&(n, k, s)| {
        let pmf = exact_dist::centered_hypergeometric(n, k, s).unwrap();
        stein_markov::stein_hypergeometric(n, k, s).unwrap()
            == stein_markov::stein_from_pmf(&pmf).unwrap()
    });
    let conv_ok = (1..33u64).into_par_iter().all(|n| {
        let a = exact_dist::walk_pmf(n).unwrap();
        let b = exact_dist::walk_pmf(33 - n).unwrap();
        let ta = stein_markov::stein_from_pmf(&a).unwrap();
        let tb = stein_markov::stein_from_pmf(&b).unwrap();
        stein_markov::stein_convolve(&ta, &a, &tb, &b).unwrap()
            == stein_markov::stein_from_pmf(&exact_dist::convolve(&a, &b)).unwrap()
    });
    announce(
        6,
        bin_ok && hyper_ok && conv_ok,
        &format!(
            "exact equality on {} binomial + {hyper_count} hypergeometric instances, plus convolution",
            bin.len()
        ),
    );
}

/// Stationary couplings: unique closed class, residual <= 1e-10,
/// marginal error <= 1e-9, identical chains degenerate on the diagonal,
/// for corpus instances up to 10^4 states.
#[test]
fn criterion_07_stationary_quality() {
    let mut worst_residual: f64 = 0.0;
    let mut worst_marginal: f64 = 0.0;
    let mut max_states = 0usize;
    // Identical chains must sit on the diagonal.
    for n in [2u64, 8, 16, 32] {
        let p = exact_dist::centered_binomial(n, &ratio(1, 2)).unwrap();
        let t = stein_markov::stein_from_pmf(&p).unwrap();
        let jc = stein_markov::build_joint_chain(&t, &p, &t, &p).unwrap();
        let sc = stein_markov::solve_stationary(&jc, 0).unwrap();
        assert!(sc.p_h_zero() >= 1.0 - 1e-12, "diagonal mass at n = {n}");
        worst_residual = worst_residual.max(sc.residual);
        worst_marginal = worst_marginal.max(sc.marginal_error);
        max_states = max_states.max(sc.class.len());
    }
    // Mixed pairs across the corpus (solve_stationary itself rejects
    // residual > 1e-10 or marginal error > 1e-9, and errors if the
    // closed class is not unique).
    for n in [2u64, 8, 16, 24, 34] {
        let (sc, _) = stein_markov::binomial_pair_coupling(n, 0).unwrap();
        worst_residual = worst_residual.max(sc.residual);
        worst_marginal = worst_marginal.max(sc.marginal_error);
        max_states = max_states.max(sc.class.len());
    }
    for (n, k) in [(24u64, 12u64), (48, 24)] {
        let (sc, _) = stein_markov::hypergeo_pair_coupling(n, k, 0).unwrap();
        worst_residual = worst_residual.max(sc.residual);
        worst_marginal = worst_marginal.max(sc.marginal_error);
        max_states = max_states.max(sc.class.len());
    }
    let pass = worst_residual <= 1e-10 && worst_marginal <= 1e-9;
    announce(
        7,
        pass,
        &format!(
            "residual {worst_residual:.2e}, marginal {worst_marginal:.2e}, largest class {max_states} states"
        ),
    );
}

/// Theorem 1.5 at theta = 0.25: kappa published over n in 1..=64,
/// plateau spread < 5%, and the three functional bounds hold everywhere.
#[test]
fn criterion_08_binomial_coupling_functional() {
    assert!(stein_markov::binomial_theta_admissible(0.25));
    let rep = stein_markov::theorem_1_5_sweep(64, 0.25, 0).unwrap();
    let bounds_ok = rep.bound_checks.iter().all(|b| b.pass());
    let pass = rep.kappa_hat.is_finite() && rep.plateau_spread < 0.05 && bounds_ok;
    announce(
        8,
        pass,
        &format!(
            "kappa_hat = {:.9}, plateau spread {:.4}%, tail/expectation/exponential bounds {}",
            rep.kappa_hat,
            100.0 * rep.plateau_spread,
            if bounds_ok { "all hold" } else { "VIOLATED" }
        ),
    );
}

/// Theorem 1.6: part 1 functional <= 3/2 up to a discovered theta >= 0.01
/// on even n in [6, 48] with k = n/2; part 2 passes with one published M.
#[test]
fn criterion_09_hypergeometric_coupling() {
    let grid: Vec<f64> = (1..=50).map(|i| i as f64 * 0.01).collect();
    let part1 = stein_markov::hypergeo_part1_sweep(6, 48, &grid, 0).unwrap();
    let theta_hat = part1.theta_hat.unwrap_or(0.0);
    let mut corpus = Vec::new();
    for &n in &[8u64, 12, 16, 20, 24] {
        for k in [n / 2, n / 3 + 1] {
            for s in [0i64, 2, 4, n as i64 / 2, n as i64 - 2] {
                if s % 2 == 0 && s.unsigned_abs() <= n {
                    for theta in [0.05, 0.1, 0.2] {
                        corpus.push((n, k, s, theta));
                    }
                }
            }
        }
    }
    corpus.dedup();
    let part2 = stein_markov::hypergeo_part2_fit(&corpus, 0).unwrap();
    let pass = theta_hat >= 0.01 && part2.pass && part2.m_hat.is_finite();
    announce(
        9,
        pass,
        &format!(
            "part 1 theta_hat = {theta_hat:.2}, part 2 M_hat = {:.3} over {} instances",
            part2.m_hat,
            part2.instances.len()
        ),
    );
}

/// Lemma 6.1 / Hoeffding: all three chains on enumerated corpora n <= 40,
/// every admissible k, tested (lambda, a, b) grids; zero violations.
#[test]
fn criterion_10_hoeffding_chains() {
    let grid = [(0.5, 0.0, 0.0), (-1.0, 0.5, 0.1), (1.0, 1.0, 0.25), (0.0, 0.0, 0.4), (2.0, -0.5, 0.3)];
    let mut checked = 0u64;
    for n in (2..=40u64).step_by(2) {
        for k in 1..=n {
            for &(l, a, b) in &grid {
                let r = stein_markov::hoeffding_bounds_check(n, k, &ratio(1, 2), l, a, b).unwrap();
                assert!(r.pass, "violation at n={n} k={k} ({l},{a},{b}): {r:?}");
                checked += 1;
            }
        }
    }
    // Unbalanced boxes where n p is integral.
    for n in (4..=40u64).step_by(4) {
        for k in 1..=n {
            for &(l, a, b) in &grid {
                for p in [ratio(1, 4), ratio(3, 4)] {
                    let r = stein_markov::hoeffding_bounds_check(n, k, &p, l, a, b).unwrap();
                    assert!(r.pass, "violation at n={n} k={k} p={p}");
                    checked += 1;
                }
            }
        }
    }
    // Exact hinge functionals, rational end to end.
    for k in 1..=8 {
        for c in -3i64..=3 {
            assert!(stein_markov::hoeffding_exact_hinge(8, k, &ratio(1, 2), &ratio(c, 1)).unwrap());
            checked += 1;
        }
    }
    announce(10, true, &format!("{checked} inequality chains, zero violations"));
}

/// Entropy and Ash suites: Q(t) >= 1.5 t^3 at 10^4 grid points with
/// margin >= -1e-12; Ash sandwich for n <= 500.
#[test]
fn criterion_11_entropy_and_ash() {
    let e = lemma_verify::check_entropy_bound(10_000).unwrap();
    let a = lemma_verify::check_ash_sandwich(500).unwrap();
    let pass = e.pass() && e.worst_margin.unwrap() >= -1e-12 && a.pass();
    announce(
        11,
        pass,
        &format!(
            "entropy worst margin {:.3e} over 10^4 points; Ash n <= 500: {} checks clean",
            e.worst_margin.unwrap(),
            a.checked
        ),
    );
}

/// KMT-EP Monte Carlo: n in {256, 1024, 4096}, 2000 reps, fixed seed;
/// mean D_n fits a + b log n with R^2 >= 0.95; chi-squared tail bound
/// within 3 MC standard errors; runtime <= 10 minutes.
#[test]
fn criterion_12_ep_monte_carlo() {
    let start = Instant::now();
    let exp = kmt_embed::run_ep_experiment(&[256, 1024, 4096], 2000, None, 20260808, 1).unwrap();
    let elapsed = start.elapsed();
    let means: Vec<f64> = exp.rows.iter().map(|r| r.mean_d).collect();
    let monotone = means.windows(2).all(|w| w[1] >= w[0]);
    let pass =
        exp.fit.2 >= 0.95 && exp.chi2_bound_ok() && monotone && elapsed.as_secs() < 600;
    announce(
        12,
        pass,
        &format!(
            "mean D fit r2 = {:.4} (a = {:.3}, b = {:.3}), chi2 tail bound ok, {:.2?}",
            exp.fit.2, exp.fit.0, exp.fit.1, elapsed
        ),
    );
}

/// KMT-RW Monte Carlo: bridge-mode log-moment fit R^2 >= 0.9 at
/// lambda = 0.1, t = 0; full-mode mean deviation fit R^2 >= 0.95 for
/// n in {256, 1024, 4096}; pathwise inequality on 100% of replications.
#[test]
fn criterion_13_rw_monte_carlo() {
    let cfg = InductionConfig::calibrated();
    cfg.validate().unwrap();
    let bridge =
        rw_embed::run_rw_experiment(&[64, 256, 1024], 0, &[0.1], 400, 20260808, RwMode::Bridge, &cfg)
            .unwrap();
    let bridge_viols: u64 = bridge.rows.iter().map(|r| r.pathwise_violations).sum();
    let full = rw_embed::run_rw_experiment(
        &[256, 1024, 4096],
        0,
        &[0.1],
        400,
        20260808,
        RwMode::Full,
        &cfg,
    )
    .unwrap();
    let full_viols: u64 = full.rows.iter().map(|r| r.pathwise_violations).sum();
    let pass = bridge.fit.2 >= 0.9 && full.fit.2 >= 0.95 && bridge_viols == 0 && full_viols == 0;
    announce(
        13,
        pass,
        &format!(
            "bridge ln E fit r2 = {:.4}, full mean-deviation fit r2 = {:.4}, pathwise violations {}",
            bridge.fit.2,
            full.fit.2,
            bridge_viols + full_viols
        ),
    );
}

/// Reproducibility: rerunning a command with the same parameters
/// produces byte-identical outputs.
#[test]
fn criterion_14_reproducibility() {
    let bin = env!("CARGO_BIN_EXE_kmtc");
    let tmp = std::env::temp_dir().join(format!("kmtc-accept-{}", std::process::id()));
    let run = |dir: &str, args: &[&str]| {
        let out = Command::new(bin)
            .args(args)
            .arg("--out-dir")
            .arg(tmp.join(dir))
            .output()
            .expect("spawn kmtc");
        assert!(out.status.success(), "kmtc failed: {}", String::from_utf8_lossy(&out.stderr));
    };
    let read = |dir: &str, name: &str| std::fs::read(tmp.join(dir).join(name)).unwrap();

    run("a", &["embed-ep", "--n", "256", "--reps", "10", "--seed", "7"]);
    run("b", &["embed-ep", "--n", "256", "--reps", "10", "--seed", "7"]);
    let ep_same = read("a", "embed-ep.json") == read("b", "embed-ep.json")
        && read("a", "embed-ep.csv") == read("b", "embed-ep.csv");

    run("c", &["embed-rw", "--n", "64", "--reps", "100", "--seed", "9"]);
    run("d", &["embed-rw", "--n", "64", "--reps", "100", "--seed", "9"]);
    let rw_same = read("c", "embed-rw.json") == read("d", "embed-rw.json")
        && read("c", "embed-rw.csv") == read("d", "embed-rw.csv");

    // Manifests reference every artifact with a digest.
    let manifest = String::from_utf8(read("a", "embed-ep-manifest.json")).unwrap();
    let manifest_ok = manifest.contains("\"sha256\"") && manifest.contains("embed-ep.json");

    std::fs::remove_dir_all(&tmp).ok();
    announce(
        14,
        ep_same && rw_same && manifest_ok,
        "byte-identical reruns for embed-ep and embed-rw; manifests carry digests",
    );
}
