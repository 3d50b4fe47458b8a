//! `kmtc`: one binary driving the verification suites and simulators.
//!
//! Exit codes: 0 when every executed assertion passes, 1 on a
//! verification failure (a violation report is still written), 2 on
//! usage errors (including out-of-domain parameters).

mod digest;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use kmt_couplings::numeric::ratio;
use kmt_couplings::report::{fmt_float, Csv, Json};
use kmt_couplings::rw_embed::{InductionConfig, RwMode};
use kmt_couplings::{exact_dist, kmt_embed, lemma_verify, monotone_coupling, rw_embed, stein_markov};

#[derive(Parser)]
#[command(name = "kmtc", version, about = "Coupling verification suites and KMT embedding simulators")]
struct Cli {
    /// Directory for reports and manifests.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Master seed for every randomized component.
    #[arg(long, global = true, default_value_t = 20260808)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Exact lemma suites: mass/tail domination, ratio monotonicity,
    /// entropy cubic bound, Ash sandwich.
    VerifyLemmas(VerifyArgs),
    /// Stein-coefficient cross-validation and Hoeffding comparisons.
    Stein(SteinArgs),
    /// Coupling constructions and their margin/functional checks.
    Couple(CoupleArgs),
    /// Dyadic empirical-process embedding Monte Carlo.
    EmbedEp(EmbedEpArgs),
    /// Recursive walk-bridge embedding Monte Carlo.
    EmbedRw(EmbedRwArgs),
    /// Convert a stored JSON report to CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest m for the mass/tail suites.
    #[arg(long, default_value_t = 300)]
    m_max: u64,
    /// Largest m for the shifted-domination suite.
    #[arg(long, default_value_t = 200)]
    shift_m_max: u64,
    /// Largest shift h in the ratio-monotonicity suite.
    #[arg(long, default_value_t = 6)]
    h_max: u64,
    /// Largest m for the ratio-monotonicity suite.
    #[arg(long, default_value_t = 120)]
    ratio_m_max: u64,
    /// Grid size for the entropy bound.
    #[arg(long, default_value_t = 10_000)]
    grid: u64,
    /// Largest n for the Ash sandwich.
    #[arg(long, default_value_t = 500)]
    ash_n_max: u64,
}

#[derive(Args)]
struct SteinArgs {
    /// Largest n of the cross-validation corpora.
    #[arg(long, default_value_t = 64)]
    n_max: u64,
    /// Largest n of the Hoeffding corpus.
    #[arg(long, default_value_t = 40)]
    hoeffding_n_max: u64,
    /// State-count limit for the exact-rational stationary solve.
    #[arg(long, default_value_t = 1500)]
    exact_solve_limit: usize,
}

#[derive(Args)]
struct CoupleArgs {
    /// Which construction: 1.1, 1.4, 1.5 or 1.6.
    #[arg(long)]
    theorem: String,
    /// Single n (runs one instance instead of a sweep).
    #[arg(long)]
    n: Option<u64>,
    /// Sweep upper bound (default depends on the theorem).
    #[arg(long)]
    n_max: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, default_value_t = 0)]
    s: i64,
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
    /// Theta grid as start:end:step.
    #[arg(long, default_value = "0.01:0.50:0.01")]
    theta_grid: String,
    /// Chain-sampler depth (theorem 1.4 only; 0 = no trajectory).
    #[arg(long, default_value_t = 0)]
    depth: u32,
    /// Atom-count limit for exact chain tables.
    #[arg(long, default_value_t = 32_768)]
    table_limit: u64,
    /// State-count limit for the exact-rational stationary solve.
    #[arg(long, default_value_t = 1500)]
    exact_solve_limit: usize,
}

#[derive(Args)]
struct EmbedEpArgs {
    /// Sample sizes.
    #[arg(long, num_args = 1.., default_values_t = [256u64, 1024, 4096])]
    n: Vec<u64>,
    #[arg(long, default_value_t = 2000)]
    reps: u64,
    /// Tree depth override (default: ceil(log2 n) per n).
    #[arg(long)]
    depth_rule: Option<u32>,
    /// Walk size from which per-node coupling inequalities are asserted.
    #[arg(long, default_value_t = 1)]
    assert_threshold: u64,
    /// Output basename.
    #[arg(long, default_value = "embed-ep")]
    out: String,
}

#[derive(Args)]
struct EmbedRwArgs {
    #[arg(long, num_args = 1.., default_values_t = [256u64, 1024, 4096])]
    n: Vec<u64>,
    /// Bridge endpoint.
    #[arg(long, default_value_t = 0)]
    t: i64,
    #[arg(long, num_args = 1.., default_values_t = [0.1f64])]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 400)]
    reps: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Bridge)]
    mode: ModeArg,
    #[arg(long, default_value = "embed-rw")]
    out: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Bridge,
    Full,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report to convert.
    #[arg(long)]
    input: PathBuf,
}

/// Artifact sink: collects written files and their digests.
struct Sink {
    out_dir: PathBuf,
    format: Format,
    artifacts: Vec<(String, String)>,
}

impl Sink {
    fn new(out_dir: &Path, format: Format) -> anyhow::Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Sink { out_dir: out_dir.to_path_buf(), format, artifacts: Vec::new() })
    }

    fn write_raw(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents)?;
        self.artifacts
            .push((name.to_string(), digest::sha256_hex(contents.as_bytes())));
        Ok(())
    }

    fn write_json(&mut self, base: &str, json: &Json) -> anyhow::Result<()> {
        if matches!(self.format, Format::Json | Format::Both) {
            self.write_raw(&format!("{base}.json"), &json.render())?;
        }
        Ok(())
    }

    fn write_csv(&mut self, base: &str, csv: &Csv) -> anyhow::Result<()> {
        if matches!(self.format, Format::Csv | Format::Both) {
            self.write_raw(&format!("{base}.csv"), &csv.render())?;
        }
        Ok(())
    }

    fn manifest(
        &mut self,
        command: &str,
        params: Vec<(&'static str, Json)>,
        seed: u64,
        started: u64,
    ) -> anyhow::Result<()> {
        let ended = unix_now();
        let manifest = Json::Obj(vec![
            ("command", Json::Str(command.into())),
            ("params", Json::Obj(params)),
            ("seed", Json::UInt(seed)),
            ("version", Json::Str(env!("CARGO_PKG_VERSION").into())),
            ("started_unix", Json::UInt(started)),
            ("ended_unix", Json::UInt(ended)),
            (
                "artifacts",
                Json::Arr(
                    self.artifacts
                        .iter()
                        .map(|(name, hash)| {
                            Json::Obj(vec![
                                ("path", Json::Str(name.clone())),
                                ("sha256", Json::Str(hash.clone())),
                            ])
                        })
                        .collect(),
                ),
            ),
        ]);
        let path = self.out_dir.join(format!("{command}-manifest.json"));
        std::fs::write(path, manifest.render())?;
        Ok(())
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    anyhow::ensure!(parts.len() == 3, "theta grid must be start:end:step");
    let (start, end, step): (f64, f64, f64) =
        (parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
    anyhow::ensure!(step > 0.0 && end >= start, "malformed theta grid");
    let mut out = Vec::new();
    let mut t = start;
    while t <= end + 1e-12 {
        out.push((t * 1e9).round() / 1e9);
        t += step;
    }
    Ok(out)
}

/// Whether all executed checks passed.
type RunOutcome = anyhow::Result<bool>;

fn run_verify_lemmas(args: &VerifyArgs, sink: &mut Sink) -> RunOutcome {
    let mut pass = true;
    let reports = vec![
        lemma_verify::check_mass_domination(args.m_max)?,
        lemma_verify::check_shifted_domination(args.shift_m_max)?,
        lemma_verify::check_ratio_monotonicity(args.ratio_m_max, args.h_max)?,
        lemma_verify::check_tail_domination(args.m_max)?,
        lemma_verify::check_entropy_bound(args.grid)?,
        lemma_verify::check_ash_sandwich(args.ash_n_max)?,
    ];
    let mut csv = Csv { header: vec!["m", "lemma", "pass", "worst_margin"], rows: vec![] };
    let mut items = Vec::new();
    for r in &reports {
        println!(
            "{}: {} ({} checks{})",
            r.lemma,
            if r.pass() { "PASS" } else { "FAIL" },
            r.checked,
            r.threshold.map_or(String::new(), |t| format!(", threshold {t}"))
        );
        pass &= r.pass();
        items.push(r.to_json());
        csv.rows.extend(r.to_csv().rows);
    }
    sink.write_json("verify-lemmas", &Json::Arr(items))?;
    sink.write_csv("verify-lemmas", &csv)?;
    Ok(pass)
}

fn run_stein(args: &SteinArgs, sink: &mut Sink) -> RunOutcome {
    use rayon::prelude::*;
    let mut pass = true;

    // Binomial corpus: closed form and scaling against the general formula.
    let mut bin_corpus = Vec::new();
    for n in 1..=args.n_max {
        if n % 2 == 0 {
            bin_corpus.push((n, ratio(1, 2)));
        }
        if n % 4 == 0 {
            bin_corpus.push((n, ratio(1, 4)));
            bin_corpus.push((n, ratio(3, 4)));
        }
        if n % 3 == 0 {
            bin_corpus.push((n, ratio(1, 3)));
        }
    }
    let bin_ok = bin_corpus.par_iter().all(|(n, p)| {
        let pmf = exact_dist::centered_binomial(*n, p).unwrap();
        let general = stein_markov::stein_from_pmf(&pmf).unwrap();
        let closed = stein_markov::stein_binomial(*n, p).unwrap();
        let scaled = stein_markov::stein_scale_perturb(&general, &pmf).unwrap();
        let scaled_direct = stein_markov::stein_from_pmf(&exact_dist::perturb_scale(&pmf)).unwrap();
        closed == general && scaled == scaled_direct
    });
    println!("stein binomial corpus ({} instances): {}", bin_corpus.len(), ok_str(bin_ok));
    pass &= bin_ok;

    // Hypergeometric corpus: every admissible (k, s).
    let hyper: Vec<(u64, u64, i64)> = (2..=args.n_max)
        .flat_map(|n| {
            (1..n).flat_map(move |k| {
                (-(n as i64)..=(n as i64)).filter_map(move |s| {
                    ((n as i64 - s) % 2 == 0 && s.unsigned_abs() <= n - 2).then_some((n, k, s))
                })
            })
        })
        .collect();
    let hyper_ok = hyper.par_iter().all(|&(n, k, s)| {
        let pmf = exact_dist::centered_hypergeometric(n, k, s).unwrap();
        stein_markov::stein_hypergeometric(n, k, s).unwrap()
            == stein_markov::stein_from_pmf(&pmf).unwrap()
    });
    println!("stein hypergeometric corpus ({} instances): {}", hyper.len(), ok_str(hyper_ok));
    pass &= hyper_ok;

    // Convolution rule against the general formula on walk pairs.
    let top = args.n_max.min(33);
    let conv_ok = (1..top).into_par_iter().all(|n| {
        let a = exact_dist::walk_pmf(n).unwrap();
        let b = exact_dist::walk_pmf(top - n).unwrap();
        let ta = stein_markov::stein_from_pmf(&a).unwrap();
        let tb = stein_markov::stein_from_pmf(&b).unwrap();
        stein_markov::stein_convolve(&ta, &a, &tb, &b).unwrap()
            == stein_markov::stein_from_pmf(&exact_dist::convolve(&a, &b)).unwrap()
    });
    println!("stein convolution corpus: {}", ok_str(conv_ok));
    pass &= conv_ok;

    // Hoeffding chains over the corpus grid.
    let grid = [(0.5, 0.0, 0.0), (-1.0, 0.5, 0.1), (1.0, 1.0, 0.25), (0.0, 0.0, 0.4)];
    let mut hoeffding_items = Vec::new();
    let mut hoeffding_ok = true;
    for n in (2..=args.hoeffding_n_max).step_by(2) {
        for k in 1..=n {
            for &(l, a, b) in &grid {
                let r = stein_markov::hoeffding_bounds_check(n, k, &ratio(1, 2), l, a, b)?;
                hoeffding_ok &= r.pass;
                if k == n / 2 {
                    hoeffding_items.push(r.to_json());
                }
            }
        }
    }
    println!("hoeffding corpus (n <= {}): {}", args.hoeffding_n_max, ok_str(hoeffding_ok));
    pass &= hoeffding_ok;

    // Exp-square calibration constant for the induction config.
    let gamma_hat = stein_markov::calibrate_exp_square(&[16, 24, 32], 0.1)?;
    println!("exp-square gamma_hat (alpha = 0.1): {gamma_hat:.6}");

    // Exact-vs-double stationary solve on one small joint chain.
    let (sc, _) = stein_markov::binomial_pair_coupling(2, args.exact_solve_limit)?;
    let exact_agrees = sc.exact_gamma.as_ref().is_none_or(|exact| {
        sc.gamma
            .iter()
            .zip(exact)
            .all(|(g, e)| (g - kmt_couplings::numeric::ratio_to_f64(e)).abs() < 1e-12)
    });
    println!("exact stationary solve cross-check: {}", ok_str(exact_agrees));
    pass &= exact_agrees;
    let json = Json::Obj(vec![
        ("binomial_instances", Json::UInt(bin_corpus.len() as u64)),
        ("binomial_ok", Json::Bool(bin_ok)),
        ("hypergeometric_instances", Json::UInt(hyper.len() as u64)),
        ("hypergeometric_ok", Json::Bool(hyper_ok)),
        ("convolution_ok", Json::Bool(conv_ok)),
        ("exact_solve_ok", Json::Bool(exact_agrees)),
        ("hoeffding_ok", Json::Bool(hoeffding_ok)),
        ("gamma_hat", Json::Float(gamma_hat)),
        ("hoeffding_sample", Json::Arr(hoeffding_items)),
    ]);
    sink.write_json("stein", &json)?;
    sink.write_csv(
        "stein",
        &Csv {
            header: vec!["corpus", "instances", "pass"],
            rows: vec![
                vec!["binomial".into(), bin_corpus.len().to_string(), bin_ok.to_string()],
                vec!["hypergeometric".into(), hyper.len().to_string(), hyper_ok.to_string()],
                vec!["hoeffding".into(), "grid".into(), hoeffding_ok.to_string()],
            ],
        },
    )?;
    Ok(pass)
}

fn ok_str(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run_couple(args: &CoupleArgs, seed: u64, sink: &mut Sink) -> RunOutcome {
    match args.theorem.as_str() {
        "1.1" => {
            let n_max = args.n_max.unwrap_or(4096);
            let (reports, threshold) = monotone_coupling::lemma_1_1_sweep(n_max)?;
            let pass = reports.iter().filter(|r| r.n >= threshold).all(|r| r.pass);
            println!("quantile check: threshold n0 = {threshold}, {}", ok_str(pass));
            sink.write_json(
                "couple-1.1",
                &kmt_couplings::report::quantile_sweep_json(&reports, threshold),
            )?;
            sink.write_csv("couple-1.1", &kmt_couplings::report::quantile_sweep_csv(&reports))?;
            Ok(pass)
        }
        "1.4" => {
            let n_max = args.n_max.unwrap_or(2000);
            let report = monotone_coupling::theorem_1_4_sweep(n_max)?;
            let pass = report.pass_from_threshold();
            println!(
                "signed coupling margins: threshold n0 = {}, {}",
                report.threshold,
                ok_str(pass)
            );
            sink.write_json("couple-1.4", &report.to_json())?;
            sink.write_csv("couple-1.4", &report.to_csv())?;
            if args.depth > 0 {
                let n = args.n.unwrap_or(2);
                let traj =
                    monotone_coupling::chain_sample(n, args.depth, seed, args.table_limit, true)?;
                println!(
                    "chain trajectory from n = {n}: {:?}, steps {}",
                    traj.values,
                    ok_str(traj.pass)
                );
                let json = Json::Obj(vec![
                    ("n", Json::UInt(n)),
                    ("depth", Json::UInt(args.depth as u64)),
                    ("values", Json::Arr(traj.values.iter().map(|v| Json::Int(*v)).collect())),
                    ("z", Json::Arr(traj.z.iter().map(|z| Json::Float(*z)).collect())),
                    ("pass", Json::Bool(traj.pass)),
                ]);
                sink.write_json("couple-1.4-chain", &json)?;
                return Ok(pass && traj.pass);
            }
            Ok(pass)
        }
        "1.5" => {
            if let Some(n) = args.n {
                let inst = stein_markov::couple_binomials(n, args.theta, args.exact_solve_limit)?;
                println!(
                    "binomial coupling at n = {n}: functional {:.9} over {} states",
                    inst.functional, inst.states
                );
                sink.write_json(
                    "couple-1.5",
                    &Json::Obj(vec![
                        ("n", Json::UInt(inst.n)),
                        ("theta", Json::Float(inst.theta)),
                        ("functional", Json::Float(inst.functional)),
                        ("states", Json::UInt(inst.states as u64)),
                        ("residual", Json::Float(inst.residual)),
                    ]),
                )?;
                return Ok(true);
            }
            let n_max = args.n_max.unwrap_or(64);
            let report = stein_markov::theorem_1_5_sweep(n_max, args.theta, 0)?;
            let pass = report.pass();
            println!(
                "binomial coupling sweep: kappa_hat = {:.9}, plateau spread {:.5}, {}",
                report.kappa_hat,
                report.plateau_spread,
                ok_str(pass)
            );
            sink.write_json("couple-1.5", &report.to_json())?;
            sink.write_csv("couple-1.5", &report.to_csv())?;
            Ok(pass)
        }
        "1.6" => {
            let grid = parse_grid(&args.theta_grid)?;
            let n_max = args.n_max.unwrap_or(48);
            let part1 = stein_markov::hypergeo_part1_sweep(6, n_max, &grid, 0)?;
            let theta_hat = part1.theta_hat;
            println!(
                "hypergeometric part 1: theta_hat = {}",
                theta_hat.map_or("none".into(), |t| format!("{t:.2}"))
            );
            let corpus: Vec<(u64, u64, i64, f64)> = {
                let mut v = Vec::new();
                for &n in &[8u64, 12, 16, 20, 24] {
                    for k in [n / 2, n / 3 + 1] {
                        for s in [0i64, 2, 4, n as i64 / 2, n as i64 - 2] {
                            if s % 2 == 0 && s.unsigned_abs() <= n {
                                for theta in [0.05, 0.1, 0.2] {
                                    v.push((n, k, s, theta));
                                }
                            }
                        }
                    }
                }
                v.dedup();
                v
            };
            let part2 = stein_markov::hypergeo_part2_fit(&corpus, 0)?;
            println!(
                "hypergeometric part 2: M_hat = {:.6} over {} instances, {}",
                part2.m_hat,
                part2.instances.len(),
                ok_str(part2.pass)
            );
            if let (Some(n), Some(k)) = (args.n, args.k) {
                let (p1, p2) =
                    stein_markov::couple_hypergeos(n, k, args.s, args.theta, args.exact_solve_limit)?;
                println!("instance (n={n}, k={k}, s={}): part1 {:.6}, part2 {:.6}", args.s, p1, p2);
            }
            let pass = theta_hat.is_some_and(|t| t >= 0.01) && part2.pass;
            sink.write_json(
                "couple-1.6",
                &Json::Obj(vec![
                    ("part1", part1.to_json()),
                    ("part2", part2.to_json()),
                    ("pass", Json::Bool(pass)),
                ]),
            )?;
            Ok(pass)
        }
        other => anyhow::bail!("unknown theorem {other:?}; use 1.1, 1.4, 1.5 or 1.6"),
    }
}

fn run_embed_ep(args: &EmbedEpArgs, seed: u64, sink: &mut Sink) -> RunOutcome {
    let exp = kmt_embed::run_ep_experiment(
        &args.n,
        args.reps,
        args.depth_rule,
        seed,
        args.assert_threshold,
    )?;
    let pass = exp.chi2_bound_ok();
    println!(
        "embed-ep: mean D fit a = {}, b = {}, r2 = {}; chi2 bound {}",
        fmt_float(exp.fit.0),
        fmt_float(exp.fit.1),
        fmt_float(exp.fit.2),
        ok_str(pass)
    );
    sink.write_json(&args.out, &exp.to_json())?;
    sink.write_csv(&args.out, &exp.to_csv())?;
    Ok(pass)
}

fn run_embed_rw(args: &EmbedRwArgs, seed: u64, sink: &mut Sink) -> RunOutcome {
    let mode = match args.mode {
        ModeArg::Bridge => RwMode::Bridge,
        ModeArg::Full => RwMode::Full,
    };
    let config = InductionConfig::calibrated();
    let exp =
        rw_embed::run_rw_experiment(&args.n, args.t, &args.lambda, args.reps, seed, mode, &config)?;
    let violations: u64 = exp.rows.iter().map(|r| r.pathwise_violations).sum();
    println!(
        "embed-rw ({}): fit slope {} r2 {}; pathwise violations {}",
        match mode {
            RwMode::Bridge => "bridge",
            RwMode::Full => "full",
        },
        fmt_float(exp.fit.1),
        fmt_float(exp.fit.2),
        violations
    );
    sink.write_json(&args.out, &exp.to_json())?;
    sink.write_csv(&args.out, &exp.to_csv())?;
    Ok(violations == 0)
}

fn run_report(args: &ReportArgs, sink: &mut Sink) -> RunOutcome {
    let text = std::fs::read_to_string(&args.input)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    // Find the first array-of-objects field and flatten it; otherwise
    // emit the top-level scalars as a single row.
    let rows_field = value.as_object().and_then(|obj| {
        obj.iter().find(|(_, v)| {
            v.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(|e| e.is_object()))
        })
    });
    let scalar = |v: &serde_json::Value| -> String {
        match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    };
    let (header, rows): (Vec<String>, Vec<Vec<String>>) = if let Some((_, arr)) = rows_field {
        let arr = arr.as_array().unwrap();
        let mut keys: Vec<String> = Vec::new();
        for item in arr {
            for k in item.as_object().unwrap().keys() {
                if !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
        let rows = arr
            .iter()
            .map(|item| keys.iter().map(|k| item.get(k).map(&scalar).unwrap_or_default()).collect())
            .collect();
        (keys, rows)
    } else if let Some(obj) = value.as_object() {
        let keys: Vec<String> = obj
            .iter()
            .filter(|(_, v)| !v.is_array() && !v.is_object())
            .map(|(k, _)| k.clone())
            .collect();
        let row = keys.iter().map(|k| scalar(&value[k])).collect();
        (keys, vec![row])
    } else {
        anyhow::bail!("unsupported report shape");
    };
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let base = args.input.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    sink.write_raw(&format!("{base}-converted.csv"), &out)?;
    println!("wrote {base}-converted.csv");
    Ok(true)
}

fn main() {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global().ok();
    }
    let started = unix_now();
    let mut sink = match Sink::new(&cli.out_dir, cli.format) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    let (name, outcome, params) = match &cli.command {
        Command::VerifyLemmas(a) => (
            "verify-lemmas",
            run_verify_lemmas(a, &mut sink),
            vec![
                ("m_max", Json::UInt(a.m_max)),
                ("shift_m_max", Json::UInt(a.shift_m_max)),
                ("h_max", Json::UInt(a.h_max)),
                ("ratio_m_max", Json::UInt(a.ratio_m_max)),
                ("grid", Json::UInt(a.grid)),
                ("ash_n_max", Json::UInt(a.ash_n_max)),
            ],
        ),
        Command::Stein(a) => (
            "stein",
            run_stein(a, &mut sink),
            vec![
                ("n_max", Json::UInt(a.n_max)),
                ("hoeffding_n_max", Json::UInt(a.hoeffding_n_max)),
            ],
        ),
        Command::Couple(a) => (
            "couple",
            run_couple(a, cli.seed, &mut sink),
            vec![
                ("theorem", Json::Str(a.theorem.clone())),
                ("n", a.n.map_or(Json::Null, Json::UInt)),
                ("n_max", a.n_max.map_or(Json::Null, Json::UInt)),
                ("theta", Json::Float(a.theta)),
                ("s", Json::Int(a.s)),
                ("depth", Json::UInt(a.depth as u64)),
                ("table_limit", Json::UInt(a.table_limit)),
            ],
        ),
        Command::EmbedEp(a) => (
            "embed-ep",
            run_embed_ep(a, cli.seed, &mut sink),
            vec![
                ("n", Json::Arr(a.n.iter().map(|n| Json::UInt(*n)).collect())),
                ("reps", Json::UInt(a.reps)),
                ("depth_rule", a.depth_rule.map_or(Json::Null, |d| Json::UInt(d as u64))),
            ],
        ),
        Command::EmbedRw(a) => (
            "embed-rw",
            run_embed_rw(a, cli.seed, &mut sink),
            vec![
                ("n", Json::Arr(a.n.iter().map(|n| Json::UInt(*n)).collect())),
                ("t", Json::Int(a.t)),
                ("lambda", Json::Arr(a.lambda.iter().map(|l| Json::Float(*l)).collect())),
                ("reps", Json::UInt(a.reps)),
            ],
        ),
        Command::Report(a) => (
            "report",
            run_report(a, &mut sink),
            vec![("input", Json::Str(a.input.display().to_string()))],
        ),
    };
    match outcome {
        Ok(pass) => {
            if let Err(e) = sink.manifest(name, params, cli.seed, started) {
                eprintln!("error writing manifest: {e}");
                std::process::exit(1);
            }
            if pass {
                std::process::exit(0);
            } else {
                eprintln!(
                    "{name}: verification FAILED (see reports in {})",
                    cli.out_dir.display()
                );
                std::process::exit(1);
            }
        }
        Err(e) => {
            // Domain errors are usage errors; everything else is a failure.
            let is_usage = e
                .downcast_ref::<kmt_couplings::Error>()
                .is_some_and(|err| matches!(err, kmt_couplings::Error::InvalidParameter(_)))
                || e.to_string().contains("unknown theorem");
            eprintln!("error: {e}");
            std::process::exit(if is_usage { 2 } else { 1 });
        }
    }
}
