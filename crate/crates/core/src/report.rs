//! Report serialization: JSON with stable field ordering and 17
//! significant digits for floats, rationals as exact fraction strings,
//! and flat CSV summaries of the same runs.

use crate::kmt_embed::EpExperiment;
use crate::lemma_verify::LemmaReport;
use crate::monotone_coupling::theorem14::Theorem14Report;
use crate::monotone_coupling::QuantileCheckReport;
use crate::rw_embed::{RwExperiment, RwMode};
use crate::stein_markov::{
    HoeffdingReport, HypergeoPart1Report, HypergeoPart2Report, Theorem15Report,
};

/// A JSON value with deterministic rendering.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    UInt(u64),
    Float(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

/// 17 significant digits; round-trips any double.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    format!("{x:.16e}")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

impl Json {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    fn write(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(v) => out.push_str(&v.to_string()),
            Json::UInt(v) => out.push_str(&v.to_string()),
            Json::Float(x) => out.push_str(&fmt_float(*x)),
            Json::Str(s) => {
                out.push('"');
                out.push_str(&escape(s));
                out.push('"');
            }
            Json::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('"');
                    out.push_str(k);
                    out.push_str("\":");
                    v.write(out);
                }
                out.push('}');
            }
        }
    }
}

/// Flat table for CSV output.
#[derive(Debug, Clone)]
pub struct Csv {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl LemmaReport {
    pub fn to_json(&self) -> Json {
        Json::Obj(vec![
            ("lemma", Json::Str(self.lemma.clone())),
            (
                "params",
                Json::Obj(
                    self.params
                        .iter()
                        .map(|(k, v)| {
                            let key: &'static str = Box::leak(k.clone().into_boxed_str());
                            (key, Json::Str(v.clone()))
                        })
                        .collect(),
                ),
            ),
            ("checked", Json::UInt(self.checked)),
            ("pass", Json::Bool(self.pass())),
            (
                "violations",
                Json::Arr(
                    self.violations
                        .iter()
                        .map(|v| {
                            Json::Obj(vec![
                                ("m", Json::UInt(v.m)),
                                ("k", Json::Int(v.k)),
                                ("l", Json::Int(v.l)),
                                ("lhs", Json::Str(v.lhs.clone())),
                                ("rhs", Json::Str(v.rhs.clone())),
                            ])
                        })
                        .collect(),
                ),
            ),
            (
                "threshold",
                self.threshold.map_or(Json::Null, Json::UInt),
            ),
            (
                "worst_margin",
                self.worst_margin.map_or(Json::Null, Json::Float),
            ),
        ])
    }

    /// Rows (m, lemma, pass, worst_margin); suites without a per-m
    /// breakdown emit one summary row with an empty m.
    pub fn to_csv(&self) -> Csv {
        let header = vec!["m", "lemma", "pass", "worst_margin"];
        let rows = if self.per_m.is_empty() {
            vec![vec![
                String::new(),
                self.lemma.clone(),
                self.pass().to_string(),
                self.worst_margin.map_or(String::new(), fmt_float),
            ]]
        } else {
            self.per_m
                .iter()
                .map(|r| {
                    vec![
                        r.m.to_string(),
                        self.lemma.clone(),
                        r.pass.to_string(),
                        r.worst_margin.map_or(String::new(), fmt_float),
                    ]
                })
                .collect()
        };
        Csv { header, rows }
    }
}

impl Theorem14Report {
    pub fn to_json(&self) -> Json {
        Json::Obj(vec![
            ("theorem", Json::Str("2Sn-vs-S4n-signed-coupling".into())),
            ("n_max", Json::UInt(self.n_max)),
            ("threshold_n0", Json::UInt(self.threshold)),
            ("pass_from_threshold", Json::Bool(self.pass_from_threshold())),
            (
                "per_n",
                Json::Arr(
                    self.per_n
                        .iter()
                        .map(|m| {
                            Json::Obj(vec![
                                ("n", Json::UInt(m.n)),
                                ("pairs", Json::UInt(m.pairs)),
                                ("slack_bound", Json::Int(m.worst_slack_bound)),
                                ("slack_quad", Json::Float(m.worst_slack_quad)),
                                ("pass", Json::Bool(m.pass)),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    pub fn to_csv(&self) -> Csv {
        Csv {
            header: vec!["n", "pairs", "slack_bound", "slack_quad", "pass"],
            rows: self
                .per_n
                .iter()
                .map(|m| {
                    vec![
                        m.n.to_string(),
                        m.pairs.to_string(),
                        m.worst_slack_bound.to_string(),
                        fmt_float(m.worst_slack_quad),
                        m.pass.to_string(),
                    ]
                })
                .collect(),
        }
    }
}

/// JSON for a quantile-check sweep.
pub fn quantile_sweep_json(reports: &[QuantileCheckReport], threshold: u64) -> Json {
    Json::Obj(vec![
        ("check", Json::Str("walk-gaussian-quantile-endpoints".into())),
        ("threshold_n0", Json::UInt(threshold)),
        (
            "per_n",
            Json::Arr(
                reports
                    .iter()
                    .map(|r| {
                        Json::Obj(vec![
                            ("n", Json::UInt(r.n)),
                            ("margin_bound", Json::Float(r.worst_margin_bound)),
                            ("margin_quad", Json::Float(r.worst_margin_quad)),
                            ("pass", Json::Bool(r.pass)),
                        ])
                    })
                    .collect(),
            ),
        ),
    ])
}

pub fn quantile_sweep_csv(reports: &[QuantileCheckReport]) -> Csv {
    Csv {
        header: vec!["n", "margin_bound", "margin_quad", "pass"],
        rows: reports
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_float(r.worst_margin_bound),
                    fmt_float(r.worst_margin_quad),
                    r.pass.to_string(),
                ]
            })
            .collect(),
    }
}

impl Theorem15Report {
    pub fn to_json(&self) -> Json {
        Json::Obj(vec![
            ("theorem", Json::Str("binomial-cauchy-coupling".into())),
            ("theta", Json::Float(self.theta)),
            ("kappa_hat", Json::Float(self.kappa_hat)),
            ("plateau_spread", Json::Float(self.plateau_spread)),
            ("pass", Json::Bool(self.pass())),
            (
                "per_n",
                Json::Arr(
                    self.instances
                        .iter()
                        .map(|i| {
                            Json::Obj(vec![
                                ("n", Json::UInt(i.n)),
                                ("functional", Json::Float(i.functional)),
                                ("states", Json::UInt(i.states as u64)),
                                ("residual", Json::Float(i.residual)),
                                ("marginal_error", Json::Float(i.marginal_error)),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    pub fn to_csv(&self) -> Csv {
        Csv {
            header: vec!["n", "theta", "functional", "states", "residual", "marginal_error"],
            rows: self
                .instances
                .iter()
                .map(|i| {
                    vec![
                        i.n.to_string(),
                        fmt_float(i.theta),
                        fmt_float(i.functional),
                        i.states.to_string(),
                        fmt_float(i.residual),
                        fmt_float(i.marginal_error),
                    ]
                })
                .collect(),
        }
    }
}

impl HypergeoPart1Report {
    pub fn to_json(&self) -> Json {
        Json::Obj(vec![
            ("theorem", Json::Str("hypergeometric-coupling-part1".into())),
            (
                "pairs",
                Json::Arr(
                    self.pairs
                        .iter()
                        .map(|(n, k)| Json::Arr(vec![Json::UInt(*n), Json::UInt(*k)]))
                        .collect(),
                ),
            ),
            (
                "theta_grid",
                Json::Arr(self.theta_grid.iter().map(|t| Json::Float(*t)).collect()),
            ),
            (
                "worst_functional",
                Json::Arr(self.worst_functional.iter().map(|f| Json::Float(*f)).collect()),
            ),
            ("theta_hat", self.theta_hat.map_or(Json::Null, Json::Float)),
        ])
    }
}

impl HypergeoPart2Report {
    pub fn to_json(&self) -> Json {
        Json::Obj(vec![
            ("theorem", Json::Str("hypergeometric-coupling-part2".into())),
            ("m_hat", Json::Float(self.m_hat)),
            ("pass", Json::Bool(self.pass)),
            (
                "instances",
                Json::Arr(
                    self.instances
                        .iter()
                        .map(|i| {
                            Json::Obj(vec![
                                ("n", Json::UInt(i.n)),
                                ("k", Json::UInt(i.k)),
                                ("s", Json::Int(i.s)),
                                ("theta", Json::Float(i.theta)),
                                ("functional", Json::Float(i.functional)),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }
}

impl HoeffdingReport {
    pub fn to_json(&self) -> Json {
        let chain = |c: &(f64, f64, f64)| {
            Json::Obj(vec![
                ("without", Json::Float(c.0)),
                ("with", Json::Float(c.1)),
                ("bound", Json::Float(c.2)),
            ])
        };
        Json::Obj(vec![
            ("check", Json::Str("hoeffding-comparison".into())),
            ("n", Json::UInt(self.n)),
            ("k", Json::UInt(self.k)),
            ("lambda", Json::Float(self.lambda)),
            ("a", Json::Float(self.a)),
            ("b", Json::Float(self.b)),
            ("exponential", chain(&self.chains[0])),
            ("linear_quadratic", chain(&self.chains[1])),
            ("raw_quadratic", chain(&self.chains[2])),
            ("pass", Json::Bool(self.pass)),
        ])
    }
}

impl EpExperiment {
    pub fn to_json(&self) -> Json {
        Json::Obj(vec![
            ("experiment", Json::Str("dyadic-empirical-process".into())),
            ("seed", Json::UInt(self.seed)),
            (
                "fit",
                Json::Obj(vec![
                    ("intercept", Json::Float(self.fit.0)),
                    ("slope", Json::Float(self.fit.1)),
                    ("r2", Json::Float(self.fit.2)),
                ]),
            ),
            (
                "rows",
                Json::Arr(
                    self.rows
                        .iter()
                        .map(|r| {
                            Json::Obj(vec![
                                ("n", Json::UInt(r.n)),
                                ("depth", Json::UInt(r.depth as u64)),
                                ("reps", Json::UInt(r.reps)),
                                ("mean_d", Json::Float(r.mean_d)),
                                ("d_p50", Json::Float(r.d_p50)),
                                ("d_p90", Json::Float(r.d_p90)),
                                ("d_p99", Json::Float(r.d_p99)),
                                ("mean_delta_g", Json::Float(r.mean_delta_g)),
                                ("mean_delta_w", Json::Float(r.mean_delta_w)),
                                (
                                    "chi2_tail",
                                    Json::Arr(
                                        r.chi2_tail
                                            .iter()
                                            .map(|(e, b, s)| {
                                                Json::Obj(vec![
                                                    ("empirical", Json::Float(*e)),
                                                    ("bound", Json::Float(*b)),
                                                    ("mc_se", Json::Float(*s)),
                                                ])
                                            })
                                            .collect(),
                                    ),
                                ),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    /// CSV columns (n, rep, D_n, delta_Gn, delta_W0, chi2max).
    pub fn to_csv(&self) -> Csv {
        Csv {
            header: vec!["n", "rep", "D_n", "delta_Gn", "delta_W0", "chi2max"],
            rows: self
                .reps_detail
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.rep.to_string(),
                        fmt_float(r.d_n),
                        fmt_float(r.delta_g),
                        fmt_float(r.delta_w),
                        fmt_float(r.chi2_max),
                    ]
                })
                .collect(),
        }
    }
}

impl RwExperiment {
    pub fn to_json(&self) -> Json {
        Json::Obj(vec![
            (
                "experiment",
                Json::Str(
                    match self.mode {
                        RwMode::Bridge => "recursive-walk-bridge",
                        RwMode::Full => "walk-vs-brownian-motion",
                    }
                    .into(),
                ),
            ),
            ("seed", Json::UInt(self.seed)),
            (
                "config",
                Json::Obj(vec![
                    ("A", Json::Float(self.config.a_const)),
                    ("B", Json::Float(self.config.b_const)),
                    ("lambda0", Json::Float(self.config.lambda0)),
                    ("theta1", Json::Float(self.config.theta1)),
                    ("M", Json::Float(self.config.m_const)),
                    ("gamma", Json::Float(self.config.gamma)),
                    ("alpha0", Json::Float(self.config.alpha0)),
                ]),
            ),
            (
                "fit",
                Json::Obj(vec![
                    ("intercept", Json::Float(self.fit.0)),
                    ("slope", Json::Float(self.fit.1)),
                    ("r2", Json::Float(self.fit.2)),
                ]),
            ),
            ("a_fit", Json::Float(self.a_fit)),
            (
                "rows",
                Json::Arr(
                    self.rows
                        .iter()
                        .map(|r| {
                            Json::Obj(vec![
                                ("n", Json::UInt(r.n)),
                                ("t", Json::Int(r.t)),
                                ("reps", Json::UInt(r.reps)),
                                ("mean", Json::Float(r.mean_stat)),
                                ("median", Json::Float(r.median_stat)),
                                ("pathwise_violations", Json::UInt(r.pathwise_violations)),
                                (
                                    "exp_lambda_t",
                                    Json::Arr(
                                        r.exp_lambda_t
                                            .iter()
                                            .map(|(l, e)| {
                                                Json::Obj(vec![
                                                    ("lambda", Json::Float(*l)),
                                                    ("value", Json::Float(*e)),
                                                ])
                                            })
                                            .collect(),
                                    ),
                                ),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    /// CSV columns (n, t, rep, stat); `stat` is `T*` in bridge mode and
    /// the max deviation in full mode.
    pub fn to_csv(&self) -> Csv {
        let t = self.rows.first().map_or(0, |r| r.t);
        Csv {
            header: vec!["n", "t", "rep", "stat"],
            rows: self
                .reps_detail
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        t.to_string(),
                        r.rep.to_string(),
                        fmt_float(r.stat),
                    ]
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_digits_and_roundtrips() {
        let x = std::f64::consts::PI;
        let s = fmt_float(x);
        assert!(s.contains('e'));
        let back: f64 = s.parse().unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
        assert_eq!(fmt_float(f64::NAN), "null");
    }

    #[test]
    fn json_rendering_is_stable() {
        let v = Json::Obj(vec![
            ("b", Json::Int(-3)),
            ("a", Json::Arr(vec![Json::Bool(true), Json::Null])),
            ("s", Json::Str("x\"y".into())),
        ]);
        assert_eq!(v.render(), "{\"b\":-3,\"a\":[true,null],\"s\":\"x\\\"y\"}");
    }

    #[test]
    fn lemma_report_serializes() {
        let r = crate::lemma_verify::check_mass_domination(3).unwrap();
        let json = r.to_json().render();
        assert!(json.contains("\"lemma\":\"mass-domination\""));
        assert!(json.contains("\"pass\":true"));
        let csv = r.to_csv().render();
        assert!(csv.starts_with("m,lemma,pass,worst_margin"));
        assert_eq!(csv.lines().count(), 4); // header + one row per m
    }
}
