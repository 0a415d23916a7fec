//! Kolmogorov–Smirnov, Cramér–von Mises and Anderson–Darling tests of a
//! fully specified null, with Monte-Carlo p-values.
//!
//! All three statistics depend on the data only through the probability
//! integral transform u_i = F₀(x_i).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::rng::SeedTree;

/// Clamp applied to PIT values before taking logs in the AD statistic.
pub const AD_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestId {
    Ks,
    Cvm,
    Ad,
}

impl TestId {
    pub const ALL: [TestId; 3] = [TestId::Ks, TestId::Cvm, TestId::Ad];

    pub fn name(self) -> &'static str {
        match self {
            TestId::Ks => "ks",
            TestId::Cvm => "cvm",
            TestId::Ad => "ad",
        }
    }

    pub fn from_name(s: &str) -> Option<TestId> {
        match s.to_ascii_lowercase().as_str() {
            "ks" => Some(TestId::Ks),
            "cvm" => Some(TestId::Cvm),
            "ad" => Some(TestId::Ad),
            _ => None,
        }
    }

    /// The statistic on sorted PIT values.
    pub fn statistic(self, u_sorted: &[f64]) -> f64 {
        match self {
            TestId::Ks => ks_statistic(u_sorted),
            TestId::Cvm => cvm_statistic(u_sorted),
            TestId::Ad => ad_statistic(u_sorted),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdfTestReport {
    pub test_id: TestId,
    pub statistic: f64,
    pub p_value: f64,
}

/// D_n = max_i max(i/n − u_(i), u_(i) − (i−1)/n).
pub fn ks_statistic(u_sorted: &[f64]) -> f64 {
    let n = u_sorted.len() as f64;
    u_sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let i = i as f64;
            ((i + 1.0) / n - u).max(u - i / n)
        })
        .fold(0.0, f64::max)
}

/// W² = 1/(12n) + Σ (u_(i) − (2i−1)/(2n))².
pub fn cvm_statistic(u_sorted: &[f64]) -> f64 {
    let n = u_sorted.len() as f64;
    let ss: f64 = u_sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let d = u - (2.0 * i as f64 + 1.0) / (2.0 * n);
            d * d
        })
        .sum();
    1.0 / (12.0 * n) + ss
}

/// A² = −n − (1/n) Σ (2i−1) [log u_(i) + log(1 − u_(n+1−i))].
pub fn ad_statistic(u_sorted: &[f64]) -> f64 {
    let n = u_sorted.len();
    let clamp = |u: f64| u.clamp(AD_CLAMP, 1.0 - AD_CLAMP);
    let s: f64 = (0..n)
        .map(|i| {
            let lo = clamp(u_sorted[i]);
            let hi = clamp(u_sorted[n - 1 - i]);
            (2 * i + 1) as f64 * (lo.ln() + (-hi).ln_1p())
        })
        .sum();
    -(n as f64) - s / n as f64
}

/// Sorted u_i = F₀(x_i).
pub fn pit(xs: &[f64], null: &Distribution) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::SampleTooSmall { n: 0, min: 1 });
    }
    let mut u: Vec<f64> = xs.iter().map(|&x| null.cdf(x)).collect();
    if let Some(index) = u.iter().position(|v| v.is_nan()) {
        return Err(Error::NonFinite { index });
    }
    if u.iter().all(|&v| v <= 0.0) || u.iter().all(|&v| v >= 1.0) {
        return Err(Error::Data(
            "every observation maps to the same end of the null distribution".into(),
        ));
    }
    u.sort_by(f64::total_cmp);
    Ok(u)
}

/// Observed statistics and Monte-Carlo p-values for several tests at once.
///
/// The B null samples are shared by the tests; replicate i draws from child
/// i of `seed`. Each p-value is #{T^i ≥ T_obs} / B.
pub fn edf_tests(
    xs: &[f64],
    null: &Distribution,
    tests: &[TestId],
    replicates: usize,
    seed: u64,
) -> Result<Vec<EdfTestReport>> {
    if replicates == 0 {
        return Err(Error::InvalidOption(
            "the number of replicates must be at least 1".into(),
        ));
    }
    let u = pit(xs, null)?;
    let observed: Vec<f64> = tests.iter().map(|t| t.statistic(&u)).collect();
    let n = xs.len();
    let root = SeedTree::new(seed);
    let exceed = (0..replicates as u64)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |buf, i| {
                null.sample_into(n, &mut root.child(i).stream(), buf);
                for v in buf.iter_mut() {
                    *v = null.cdf(*v);
                }
                buf.sort_by(f64::total_cmp);
                tests
                    .iter()
                    .zip(&observed)
                    .map(|(t, &obs)| usize::from(t.statistic(buf) >= obs))
                    .collect::<Vec<usize>>()
            },
        )
        .reduce(
            || vec![0; tests.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(tests
        .iter()
        .zip(observed)
        .zip(exceed)
        .map(|((&test_id, statistic), k)| EdfTestReport {
            test_id,
            statistic,
            p_value: k as f64 / replicates as f64,
        })
        .collect())
}

/// Monte-Carlo p-value of one test.
pub fn edf_mc_p_value(
    xs: &[f64],
    null: &Distribution,
    test: TestId,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    Ok(edf_tests(xs, null, &[test], replicates, seed)?[0].p_value)
}
