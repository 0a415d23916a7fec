//! Power studies: draw samples from an alternative, test them against a
//! null and report rejection rates.
//!
//! # Scenario files
//!
//! A scenario file is a list of `key = value` lines grouped in sections.
//! A line `[name]` opens a scenario; keys that appear before the first
//! section are defaults shared by every scenario. `#` starts a comment.
//!
//! | key                  | value                                   | default              |
//! |----------------------|-----------------------------------------|----------------------|
//! | `alternative`        | family name (`lognormal` or `dlnorm`)   | required             |
//! | `alternative_params` | comma-separated numbers                 | required             |
//! | `alternative_shift`  | number added to every draw              | `0`                  |
//! | `alternative_scale`  | positive factor applied before the shift| `1`                  |
//! | `null`               | family name                             | required             |
//! | `null_params`        | numbers; omit for a composite null      | composite            |
//! | `tests`              | subset of `vs, ks, cvm, ad`             | all four (simple)    |
//! | `n`                  | comma-separated sample sizes            | required             |
//! | `alpha`              | level in (0, 1)                         | `0.05`               |
//! | `replicates`         | outer sample count                      | `1000`               |
//! | `B`                  | inner Monte-Carlo count                 | `500`                |
//! | `seed`               | unsigned integer                        | `1`                  |
//! | `delta`              | window exponent for the VS test         | family default       |
//! | `simulate`           | `true` for Monte-Carlo VS p-values      | `true`               |
//!
//! A draw from the alternative is `shift + scale · Y` with Y from the named
//! family, so `1 + LN(0, 1)` is `alternative = lognormal`,
//! `alternative_params = 0, 1`, `alternative_shift = 1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{Distribution, Family, ParamVector};
use crate::edf::{edf_tests, TestId};
use crate::entropy::Sample;
use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::vs::{vs_test, TestOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerTest {
    Vs,
    Edf(TestId),
}

impl PowerTest {
    pub fn name(self) -> &'static str {
        match self {
            PowerTest::Vs => "vs",
            PowerTest::Edf(t) => t.name(),
        }
    }

    pub fn from_name(s: &str) -> Option<PowerTest> {
        if s.eq_ignore_ascii_case("vs") {
            Some(PowerTest::Vs)
        } else {
            TestId::from_name(s).map(PowerTest::Edf)
        }
    }
}

/// Alternative law of a power study: `shift + scale · Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alternative {
    pub family: Family,
    pub params: ParamVector,
    pub shift: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerScenario {
    pub name: String,
    pub alternative: Alternative,
    pub null_family: Family,
    /// `None` for a composite null.
    pub null_params: Option<ParamVector>,
    pub tests: Vec<PowerTest>,
    pub n_values: Vec<usize>,
    pub alpha: f64,
    pub replicates: usize,
    pub inner_replicates: usize,
    pub seed: u64,
    pub delta: Option<f64>,
    pub simulate: bool,
}

impl PowerScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| {
            Err(Error::InvalidOption(format!(
                "scenario `{}`: {m}",
                self.name
            )))
        };
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.replicates == 0 || self.inner_replicates == 0 {
            return bad("replicates and B must be at least 1".into());
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 3) {
            return bad("every sample size must be at least 3".into());
        }
        if self.tests.is_empty() {
            return bad("no tests selected".into());
        }
        let a = &self.alternative;
        if !(a.scale > 0.0 && a.scale.is_finite() && a.shift.is_finite()) {
            return bad("alternative_scale must be positive and the shift finite".into());
        }
        Distribution::new(a.family, &a.params)?;
        match &self.null_params {
            Some(p) => {
                Distribution::new(self.null_family, p)?;
            }
            None if self.tests.iter().any(|t| matches!(t, PowerTest::Edf(_))) => {
                return bad("EDF tests need a simple null (set null_params)".into());
            }
            None => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub scenario: String,
    pub n: usize,
    pub test: PowerTest,
    pub rejections: usize,
    /// Replicates for which the test returned a p-value.
    pub completed: usize,
    /// Replicates for which the test failed (for instance no admissible
    /// window).
    pub errors: usize,
    pub power_pct: f64,
    pub se_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    pub fn power(&self, scenario: &str, n: usize, test: PowerTest) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.n == n && r.test == test)
            .map(|r| r.power_pct)
    }

    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.scenario.len())
            .max()
            .unwrap_or(0)
            .max(8);
        let mut out = format!(
            "{:<width$}  {:>6}  {:<4}  {:>8}  {:>6}  {:>6}\n",
            "scenario", "n", "test", "power%", "se%", "errors"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:<4}  {:>8.2}  {:>6.2}  {:>6}",
                r.scenario,
                r.n,
                r.test.name(),
                r.power_pct,
                r.se_pct,
                r.errors
            );
        }
        out
    }
}

fn draw_alternative(alt: &Alternative, dist: &Distribution, n: usize, seed: SeedTree) -> Vec<f64> {
    let mut y = dist.sample(n, &mut seed.stream());
    for v in &mut y {
        *v = alt.shift + alt.scale * *v;
    }
    y
}

// Outcome of every test on one outer replicate: Some(reject) or None.
fn one_replicate(
    sc: &PowerScenario,
    alt_dist: &Distribution,
    null_dist: Option<&Distribution>,
    n: usize,
    node: SeedTree,
) -> Vec<Option<bool>> {
    let xs = draw_alternative(&sc.alternative, alt_dist, n, node.child(0));
    let edf_ids: Vec<TestId> = sc
        .tests
        .iter()
        .filter_map(|t| match t {
            PowerTest::Edf(id) => Some(*id),
            PowerTest::Vs => None,
        })
        .collect();
    let edf = match (null_dist, edf_ids.is_empty()) {
        (Some(null), false) => edf_tests(
            &xs,
            null,
            &edf_ids,
            sc.inner_replicates,
            node.child(2).seed(),
        )
        .ok(),
        _ => None,
    };
    sc.tests
        .iter()
        .map(|t| match t {
            PowerTest::Vs => {
                let opts = TestOptions {
                    delta: sc.delta,
                    simulate_p_value: Some(sc.simulate),
                    replicates: sc.inner_replicates,
                    fixed_params: sc.null_params.clone(),
                    seed: node.child(1).seed(),
                    ..TestOptions::default()
                };
                let sample = Sample::new(xs.clone()).ok()?;
                vs_test(&sample, sc.null_family, &opts)
                    .ok()
                    .map(|r| r.p_value <= sc.alpha)
            }
            PowerTest::Edf(id) => edf
                .as_ref()?
                .iter()
                .find(|r| r.test_id == *id)
                .map(|r| r.p_value <= sc.alpha),
        })
        .collect()
}

/// Runs every (n, test) cell of a scenario.
///
/// Outer replicate r at sample size n uses seed node `seed / n / r`, so a
/// cell does not depend on the other sample sizes listed, nor on the
/// thread count. Failed replicates are counted apart and excluded from the
/// power denominator.
pub fn run_power_study(sc: &PowerScenario) -> Result<PowerTable> {
    sc.validate()?;
    let alt_dist = Distribution::new(sc.alternative.family, &sc.alternative.params)?;
    let null_dist = match &sc.null_params {
        Some(p) => Some(Distribution::new(sc.null_family, p)?),
        None => None,
    };
    let root = SeedTree::new(sc.seed);
    let mut rows = Vec::new();
    for &n in &sc.n_values {
        let node = root.child(n as u64);
        let outcomes: Vec<Vec<Option<bool>>> = (0..sc.replicates as u64)
            .into_par_iter()
            .map(|r| one_replicate(sc, &alt_dist, null_dist.as_ref(), n, node.child(r)))
            .collect();
        for (k, &test) in sc.tests.iter().enumerate() {
            let completed = outcomes.iter().filter(|o| o[k].is_some()).count();
            let rejections = outcomes.iter().filter(|o| o[k] == Some(true)).count();
            let p = if completed > 0 {
                rejections as f64 / completed as f64
            } else {
                f64::NAN
            };
            rows.push(PowerRow {
                scenario: sc.name.clone(),
                n,
                test,
                rejections,
                completed,
                errors: sc.replicates - completed,
                power_pct: 100.0 * p,
                se_pct: 100.0 * (p * (1.0 - p) / completed.max(1) as f64).sqrt(),
            });
        }
    }
    Ok(PowerTable { rows })
}

/// Runs several scenarios and concatenates their tables.
pub fn run_power_studies(scenarios: &[PowerScenario]) -> Result<PowerTable> {
    let mut rows = Vec::new();
    for sc in scenarios {
        rows.extend(run_power_study(sc)?.rows);
    }
    Ok(PowerTable { rows })
}

const KEYS: &[&str] = &[
    "alternative",
    "alternative_params",
    "alternative_shift",
    "alternative_scale",
    "null",
    "null_params",
    "tests",
    "n",
    "alpha",
    "replicates",
    "B",
    "seed",
    "delta",
    "simulate",
];

// (value, line number)
type Entries = BTreeMap<String, (String, usize)>;

/// Parses a scenario file. Errors carry the offending line number.
pub fn parse_scenarios(text: &str) -> Result<Vec<PowerScenario>> {
    let mut defaults = Entries::new();
    let mut sections: Vec<(String, usize, Entries)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| Error::Scenario {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err("section header must end with `]`".into()))?
                .trim();
            if name.is_empty() {
                return Err(err("empty section name".into()));
            }
            if sections.iter().any(|(n, _, _)| n == name) {
                return Err(err(format!("duplicate scenario `{name}`")));
            }
            sections.push((name.to_string(), line_no, Entries::new()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown key `{key}`")));
        }
        let target = match sections.last_mut() {
            Some((_, _, entries)) => entries,
            None => &mut defaults,
        };
        if target
            .insert(key.to_string(), (value.trim().to_string(), line_no))
            .is_some()
        {
            return Err(err(format!("key `{key}` given twice")));
        }
    }
    if sections.is_empty() {
        return Err(Error::Scenario {
            line: text.lines().count().max(1),
            message: "no `[name]` section found".into(),
        });
    }
    sections
        .into_iter()
        .map(|(name, line, entries)| {
            let mut merged = defaults.clone();
            merged.extend(entries);
            build_scenario(name, line, &merged)
        })
        .collect()
}

fn build_scenario(name: String, header_line: usize, e: &Entries) -> Result<PowerScenario> {
    let missing = |key: &str| Error::Scenario {
        line: header_line,
        message: format!("scenario `{name}` is missing `{key}`"),
    };
    let get = |key: &str| e.get(key).map(|(v, l)| (v.as_str(), *l));
    let at = |line: usize, message: String| Error::Scenario { line, message };

    let family = |key: &str| -> Result<Family> {
        let (v, l) = get(key).ok_or_else(|| missing(key))?;
        Family::from_name(v).map_err(|_| at(l, format!("unknown family `{v}`")))
    };
    let numbers = |key: &str| -> Result<Option<Vec<f64>>> {
        let Some((v, l)) = get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| at(l, format!("`{key}`: `{}` is not a number", t.trim())))
            })
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    };
    let scalar = |key: &str, default: f64| -> Result<f64> {
        match numbers(key)? {
            None => Ok(default),
            Some(v) if v.len() == 1 => Ok(v[0]),
            Some(_) => Err(at(
                get(key).unwrap().1,
                format!("`{key}` takes a single number"),
            )),
        }
    };
    let count = |key: &str, default: u64| -> Result<u64> {
        match get(key) {
            None => Ok(default),
            Some((v, l)) => v.parse::<u64>().map_err(|_| {
                at(
                    l,
                    format!("`{key}` must be a nonnegative integer, got `{v}`"),
                )
            }),
        }
    };

    let alternative_family = family("alternative")?;
    let alternative_params =
        numbers("alternative_params")?.ok_or_else(|| missing("alternative_params"))?;
    let null_family = family("null")?;
    let null_params = numbers("null_params")?.map(ParamVector::new);

    let tests = match get("tests") {
        None if null_params.is_some() => vec![
            PowerTest::Vs,
            PowerTest::Edf(TestId::Ks),
            PowerTest::Edf(TestId::Cvm),
            PowerTest::Edf(TestId::Ad),
        ],
        None => vec![PowerTest::Vs],
        Some((v, l)) => v
            .split(',')
            .map(|t| {
                PowerTest::from_name(t.trim())
                    .ok_or_else(|| at(l, format!("unknown test `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?,
    };

    let (n_raw, n_line) = get("n").ok_or_else(|| missing("n"))?;
    let n_values = n_raw
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| at(n_line, format!("`n`: `{}` is not a sample size", t.trim())))
        })
        .collect::<Result<Vec<_>>>()?;

    let simulate = match get("simulate") {
        None => true,
        Some(("true", _)) => true,
        Some(("false", _)) => false,
        Some((v, l)) => {
            return Err(at(
                l,
                format!("`simulate` must be true or false, got `{v}`"),
            ))
        }
    };

    let sc = PowerScenario {
        alternative: Alternative {
            family: alternative_family,
            params: ParamVector::new(alternative_params),
            shift: scalar("alternative_shift", 0.0)?,
            scale: scalar("alternative_scale", 1.0)?,
        },
        null_family,
        null_params,
        tests,
        n_values,
        alpha: scalar("alpha", 0.05)?,
        replicates: count("replicates", 1000)? as usize,
        inner_replicates: count("B", 500)? as usize,
        seed: count("seed", 1)?,
        delta: match get("delta") {
            None => None,
            Some(_) => Some(scalar("delta", 0.0)?),
        },
        simulate,
        name,
    };
    sc.validate().map_err(|e| Error::Scenario {
        line: header_line,
        message: e.to_string(),
    })?;
    Ok(sc)
}
