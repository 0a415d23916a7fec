//! The Vasicek–Song test.
//!
//! The statistic at window m is
//!
//! ```text
//! I_mn = −V_mn − (1/n) Σ log p₀(X_i; θ)
//! ```
//!
//! where θ is either fixed by the caller (simple null) or the MLE
//! (composite null). The reported statistic uses the window m̂, the smallest
//! m maximizing V_mn over the candidate range among the windows satisfying
//! V_mn ≤ −(1/n) Σ log p₀, which keeps the statistic nonnegative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{fit_mle, Distribution, Family, FitResult, ParamVector, Provenance};
use crate::entropy::{log_spacing_mean, max_window, window_scan_range, Sample, WindowScan};
use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::special::{digamma, harmonic_prefix, std_normal_sf};

/// Below this sample size the p-value defaults to Monte-Carlo.
pub const ASYMPTOTIC_MIN_N: usize = 80;

/// Options of [`vs_test`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    /// Exponent in the window bound ⌊n^{1/3−δ}⌋; `None` uses the family
    /// default.
    pub delta: Option<f64>,
    /// Search every window up to the largest m < n/2. Forces Monte-Carlo
    /// p-values.
    pub extend: bool,
    /// Drop the entropy constraint when selecting the window.
    pub relax: bool,
    /// `None` decides from the sample size.
    pub simulate_p_value: Option<bool>,
    /// Number of Monte-Carlo replicates.
    pub replicates: usize,
    /// Parameters of a simple null. `None` means composite.
    pub fixed_params: Option<ParamVector>,
    pub seed: u64,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions {
            delta: None,
            extend: false,
            relax: false,
            simulate_p_value: None,
            replicates: 5000,
            fixed_params: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Asymptotic,
    MonteCarlo,
}

/// Outcome of [`vs_test`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsTestReport {
    pub family: Family,
    pub n: usize,
    pub delta: f64,
    pub extend: bool,
    pub relax: bool,
    /// I at the selected window.
    pub statistic: f64,
    pub optimal_window: usize,
    /// V at the selected window.
    pub entropy_estimate: f64,
    /// −(1/n) Σ log p₀, the bound V must not exceed.
    pub null_entropy: f64,
    pub p_value: f64,
    pub p_value_method: PValueMethod,
    /// Bias term used to center the statistic on the asymptotic path.
    pub bias: Option<f64>,
    /// Replicates drawn on the Monte-Carlo path.
    pub replicates: Option<usize>,
    pub ignored_replicates: usize,
    /// Parameters of the null used in the test.
    pub null_params: ParamVector,
    /// Present for composite nulls only.
    pub estimate: Option<FitResult>,
    pub window_scan: WindowScan,
    pub warnings: Vec<String>,
}

/// (1/n) Σ log p₀(x_i; θ). Observations outside the support are reported
/// with their indices.
pub fn empirical_null_loglik(x: &Sample, null: &Distribution) -> Result<f64> {
    check_null_support(x.values(), null)?;
    Ok(null.mean_log_density(x.values()))
}

fn check_null_support(xs: &[f64], null: &Distribution) -> Result<()> {
    let support = null.support();
    let bad: Vec<usize> = (0..xs.len())
        .filter(|&i| !support.contains(xs[i]))
        .collect();
    if bad.is_empty() {
        return Ok(());
    }
    Err(Error::OutOfSupport {
        family: null.family().call_name(),
        support: support.to_string(),
        count: bad.len(),
        indices: bad.into_iter().take(10).collect(),
    })
}

/// I_mn = −V_mn − (1/n) Σ log p₀(x_i; θ) at a given window.
pub fn statistic_at(x: &Sample, null: &Distribution, m: usize) -> Result<f64> {
    let v = crate::entropy::vasicek_estimate(x, m)?;
    Ok(-v - empirical_null_loglik(x, null)?)
}

// ⌊u⌋ that does not fall one short when u is an integer up to rounding,
// e.g. 1000^(1/3).
fn robust_floor(u: f64) -> usize {
    let k = u.round();
    if (u - k).abs() < 1e-9 * k.max(1.0) {
        k as usize
    } else {
        u.floor() as usize
    }
}

/// Candidate windows `(m_min, m_max)`: 1..=⌊n^{1/3−δ}⌋ by default, every
/// m < n/2 with `extend`. The upper end never exceeds the largest m < n/2.
pub fn candidate_range(n: usize, delta: f64, extend: bool) -> Result<(usize, usize)> {
    let largest = max_window(n);
    if largest == 0 {
        return Err(Error::SampleTooSmall { n, min: 3 });
    }
    if extend {
        return Ok((1, largest));
    }
    if delta.is_nan() || delta >= 1.0 / 3.0 {
        return Err(Error::InvalidOption(format!(
            "delta must be below 1/3 (got {delta}); use extend to search every window"
        )));
    }
    let k = robust_floor((n as f64).powf(1.0 / 3.0 - delta));
    Ok((1, k.clamp(1, largest)))
}

// The constrained (or relaxed) argmax over one table of V values.
fn choose(
    values: impl Iterator<Item = (usize, Option<f64>)>,
    bound: f64,
    relax: bool,
    max_tie_run: impl FnOnce() -> usize,
) -> Result<(usize, f64)> {
    let mut any_computable = false;
    let mut best: Option<(usize, f64)> = None;
    let mut m_max = 0;
    for (m, v) in values {
        m_max = m;
        let Some(v) = v else { continue };
        any_computable = true;
        if !relax && v > bound {
            continue;
        }
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((m, v));
        }
    }
    match best {
        Some(b) => Ok(b),
        None if !any_computable => Err(Error::TooManyTies {
            max_tie_run: max_tie_run(),
            m_max,
        }),
        None => Err(Error::ConstraintViolated),
    }
}

/// Picks m̂ for a sample under a fully specified null and returns it with
/// the scan of the candidate windows.
pub fn select_window(
    x: &Sample,
    null: &Distribution,
    opts: &TestOptions,
) -> Result<(usize, WindowScan)> {
    let delta = opts.delta.unwrap_or_else(|| null.family().default_delta());
    let (lo, hi) = candidate_range(x.len(), delta, opts.extend)?;
    let scan = window_scan_range(x, lo, hi)?;
    let bound = -empirical_null_loglik(x, null)?;
    let (m, _) = choose(
        scan.values.iter().enumerate().map(|(i, v)| (lo + i, *v)),
        bound,
        opts.relax,
        || x.max_tie_run(),
    )?;
    Ok((m, scan))
}

/// b_mn = log(2m) − log n − ψ(2m) + ψ(n+1) + (2m/n) R_{2m−1}
///        − (2/n) Σ_{i=1}^m R_{i+m−2},
/// with R_k the k-th harmonic number and R_0 = 0.
pub fn bias_b(m: usize, n: usize) -> Result<f64> {
    if m < 1 || 2 * m >= n {
        return Err(Error::WindowRange { m, n });
    }
    let r = harmonic_prefix(2 * m - 1);
    let (mf, nf) = (m as f64, n as f64);
    let tail: f64 = (1..=m).map(|i| r[i + m - 2]).sum();
    Ok((2.0 * mf).ln() - nf.ln() - digamma(2.0 * mf)?
        + digamma(nf + 1.0)?
        + (2.0 * mf / nf) * r[2 * m - 1]
        - (2.0 / nf) * tail)
}

/// Right-tail p-value 1 − Φ(√(6mn)(I − b_mn)).
pub fn asymptotic_p_value(statistic: f64, m: usize, n: usize) -> Result<f64> {
    let b = bias_b(m, n)?;
    Ok(std_normal_sf(standardize(statistic, m, n, b)))
}

/// √(6mn)(I − b).
pub fn standardize(statistic: f64, m: usize, n: usize, bias: f64) -> f64 {
    (6.0 * m as f64 * n as f64).sqrt() * (statistic - bias)
}

/// Monte-Carlo result: p-value and the number of ignored replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloPValue {
    pub p_value: f64,
    pub ignored: usize,
}

/// Parametric bootstrap p-value #{I^i > I_obs} / (B − ignored).
///
/// Replicates of size n are drawn from `null`. For a composite null
/// (`refit = Some(family)`) every replicate is re-fitted before its window
/// is selected. Replicates for which the fit fails or no window is
/// admissible are ignored. Replicate i draws from child i of the seed, so
/// the result does not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_p_value(
    n: usize,
    null: &Distribution,
    composite: bool,
    range: (usize, usize),
    relax: bool,
    observed: f64,
    replicates: usize,
    seed: u64,
) -> Result<MonteCarloPValue> {
    if replicates == 0 {
        return Err(Error::InvalidOption(
            "the number of replicates must be at least 1".into(),
        ));
    }
    let root = SeedTree::new(seed);
    let stats: Vec<Option<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |buf, i| {
                let mut rng = root.child(i).stream();
                null.sample_into(n, &mut rng, buf);
                replicate_statistic(buf, null, composite, range, relax)
            },
        )
        .collect();
    let valid = stats.iter().flatten().count();
    if valid == 0 {
        return Err(Error::AllReplicatesIgnored { b: replicates });
    }
    let exceed = stats.iter().flatten().filter(|&&s| s > observed).count();
    Ok(MonteCarloPValue {
        p_value: exceed as f64 / valid as f64,
        ignored: replicates - valid,
    })
}

fn replicate_statistic(
    y: &mut [f64],
    null: &Distribution,
    composite: bool,
    range: (usize, usize),
    relax: bool,
) -> Option<f64> {
    let refitted;
    let dist = if composite {
        let fit = fit_mle(null.family(), y).ok()?;
        refitted = Distribution::new(null.family(), &fit.params).ok()?;
        &refitted
    } else {
        null
    };
    let mean_log = dist.mean_log_density(y);
    if !mean_log.is_finite() {
        return None;
    }
    y.sort_by(f64::total_cmp);
    let sorted: &[f64] = y;
    let (_, v) = choose(
        (range.0..=range.1).map(|m| (m, log_spacing_mean(sorted, m))),
        -mean_log,
        relax,
        || 0,
    )
    .ok()?;
    Some(-v - mean_log)
}

/// Runs the test of `x` against `family`.
///
/// The null is composite unless `opts.fixed_params` is set. P-values come
/// from simulation when n < 80, when `extend` is set or when requested,
/// and from the normal approximation otherwise.
pub fn vs_test(x: &Sample, family: Family, opts: &TestOptions) -> Result<VsTestReport> {
    let n = x.len();
    let mut warnings = Vec::new();
    let (null, estimate) = match &opts.fixed_params {
        Some(p) => {
            let d = Distribution::new(family, p)?;
            check_null_support(x.values(), &d)?;
            (d, None)
        }
        None => {
            let fit = fit_mle(family, x.values())?;
            (Distribution::new(family, &fit.params)?, Some(fit))
        }
    };
    debug_assert!(estimate
        .as_ref()
        .is_none_or(|f| f.provenance == Provenance::Mle));

    let delta = opts.delta.unwrap_or_else(|| family.default_delta());
    let (m, scan) = select_window(x, &null, opts)?;
    if scan.values.iter().any(Option::is_none) {
        warnings.push(format!(
            "ties in the sample (largest run {}): windows with a zero spacing were skipped",
            x.max_tie_run()
        ));
    }
    let v = scan.get(m).expect("selected window is computable");
    let null_entropy = -null.mean_log_density(x.values());
    let statistic = null_entropy - v;

    let simulate = if opts.extend {
        if opts.simulate_p_value == Some(false) {
            warnings.push("extend requires Monte-Carlo p-values; simulation was used".into());
        }
        true
    } else {
        opts.simulate_p_value.unwrap_or(n < ASYMPTOTIC_MIN_N)
    };

    let (p_value, method, bias, replicates, ignored) = if simulate {
        let mc = monte_carlo_p_value(
            n,
            &null,
            estimate.is_some(),
            (scan.m_min, scan.m_max),
            opts.relax,
            statistic,
            opts.replicates,
            opts.seed,
        )?;
        if mc.ignored > 0 {
            warnings.push(format!(
                "{} of {} Monte-Carlo replicates had no admissible window and were ignored",
                mc.ignored, opts.replicates
            ));
        }
        (
            mc.p_value,
            PValueMethod::MonteCarlo,
            None,
            Some(opts.replicates),
            mc.ignored,
        )
    } else {
        let b = bias_b(m, n)?;
        let p = std_normal_sf(standardize(statistic, m, n, b));
        (p, PValueMethod::Asymptotic, Some(b), None, 0)
    };

    Ok(VsTestReport {
        family,
        n,
        delta,
        extend: opts.extend,
        relax: opts.relax,
        statistic,
        optimal_window: m,
        entropy_estimate: v,
        null_entropy,
        p_value,
        p_value_method: method,
        bias,
        replicates,
        ignored_replicates: ignored,
        null_params: null.params().clone(),
        estimate,
        window_scan: scan,
        warnings,
    })
}

/// Options that turn [`vs_test`] into the empirical-likelihood-ratio
/// normality test: a simple normal null with mean x̄ and variance S̆² (the
/// n − 1 convention), windows up to ⌊√n⌋ and no entropy constraint.
pub fn elr_options(x: &Sample) -> TestOptions {
    let (mean, var) = mean_and_unbiased_var(x.values());
    TestOptions {
        delta: Some(-1.0 / 6.0),
        relax: true,
        fixed_params: Some(ParamVector::new([mean, var.sqrt()])),
        ..TestOptions::default()
    }
}

fn mean_and_unbiased_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// log V_n = min_m [ (n/2) log(2πe S̆²) − n V_mn ] over the computable
/// entries of `scan`. Returns the value and the minimizing window.
pub fn elr_log_statistic(x: &Sample, scan: &WindowScan) -> Result<(f64, usize)> {
    let (_, var) = mean_and_unbiased_var(x.values());
    let nf = x.len() as f64;
    let head = 0.5 * nf * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln();
    let (m, v) = scan.argmax().ok_or(Error::TooManyTies {
        max_tie_run: x.max_tie_run(),
        m_max: scan.m_max,
    })?;
    Ok((head - nf * v, m))
}
