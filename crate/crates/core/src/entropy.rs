//! Spacing-based (Vasicek) entropy estimation.
//!
//! For a window size m with 1 ≤ m < n/2,
//!
//! ```text
//! V_mn = (1/n) Σ_{i=1}^{n} log( n/(2m) · (X_(i+m) − X_(i−m)) )
//! ```
//!
//! where order statistics outside 1..n are clamped to X_(1) and X_(n).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An immutable numeric sample with its sorted view.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    raw: Vec<f64>,
    sorted: Vec<f64>,
    max_tie_run: usize,
}

impl Sample {
    /// Validates and sorts the observations. Needs at least two finite
    /// values.
    pub fn new(values: Vec<f64>) -> Result<Sample> {
        if values.len() < 2 {
            return Err(Error::SampleTooSmall {
                n: values.len(),
                min: 2,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let max_tie_run = longest_run(&sorted);
        Ok(Sample {
            raw: values,
            sorted,
            max_tie_run,
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Observations in their original order.
    pub fn values(&self) -> &[f64] {
        &self.raw
    }

    /// Order statistics X_(1) ≤ … ≤ X_(n).
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Largest multiplicity of a repeated value (1 when there are no ties).
    pub fn max_tie_run(&self) -> usize {
        self.max_tie_run
    }

    pub fn has_ties(&self) -> bool {
        self.max_tie_run > 1
    }

    /// Largest admissible window, i.e. the largest m with m < n/2.
    pub fn max_window(&self) -> usize {
        max_window(self.len())
    }
}

pub(crate) fn max_window(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

// ties are exact floating-point equality
fn longest_run(sorted: &[f64]) -> usize {
    let mut best = 1;
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            best = best.max(run);
        } else {
            run = 1;
        }
    }
    best
}

/// V_mn for every m in `m_min..=m_max`; `None` marks windows with a zero
/// spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScan {
    pub n: usize,
    pub m_min: usize,
    pub m_max: usize,
    pub values: Vec<Option<f64>>,
}

impl WindowScan {
    pub fn get(&self, m: usize) -> Option<f64> {
        if m < self.m_min || m > self.m_max {
            return None;
        }
        self.values[m - self.m_min]
    }

    /// `(m, V_mn)` for the computable entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(move |(i, v)| v.map(|v| (self.m_min + i, v)))
    }

    /// Smallest m attaining the largest computable V_mn.
    pub fn argmax(&self) -> Option<(usize, f64)> {
        self.iter().fold(None, |best, (m, v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((m, v)),
        })
    }
}

// Sum of log spacings for one window; None if some spacing is zero.
pub(crate) fn log_spacing_mean(sorted: &[f64], m: usize) -> Option<f64> {
    let n = sorted.len();
    let last = n - 1;
    let mut acc = 0.0;
    for i in 0..n {
        let hi = sorted[(i + m).min(last)];
        let lo = sorted[i.saturating_sub(m)];
        let d = hi - lo;
        if d <= 0.0 {
            return None;
        }
        acc += d.ln();
    }
    Some(acc / n as f64 + (n as f64 / (2.0 * m as f64)).ln())
}

fn check_window(n: usize, m: usize) -> Result<()> {
    if m >= 1 && 2 * m < n {
        Ok(())
    } else {
        Err(Error::WindowRange { m, n })
    }
}

/// Vasicek estimate V_mn of the Shannon entropy.
pub fn vasicek_estimate(x: &Sample, m: usize) -> Result<f64> {
    check_window(x.len(), m)?;
    log_spacing_mean(x.sorted(), m).ok_or(Error::ZeroSpacing { m })
}

/// V_mn for m = 1..=m_max.
pub fn window_scan(x: &Sample, m_max: usize) -> Result<WindowScan> {
    window_scan_range(x, 1, m_max)
}

/// V_mn for m = m_min..=m_max. Windows with a zero spacing are flagged in
/// the result rather than failing the scan.
pub fn window_scan_range(x: &Sample, m_min: usize, m_max: usize) -> Result<WindowScan> {
    check_window(x.len(), m_min)?;
    check_window(x.len(), m_max)?;
    if m_min > m_max {
        return Err(Error::InvalidOption(format!(
            "empty window range {m_min}..={m_max}"
        )));
    }
    let values = (m_min..=m_max)
        .map(|m| log_spacing_mean(x.sorted(), m))
        .collect();
    Ok(WindowScan {
        n: x.len(),
        m_min,
        m_max,
        values,
    })
}

/// Standalone estimation: the window among 1..=max_window maximizing V_mn,
/// with no further constraint. Returns `(m, V_mn, scan)`.
pub fn entropy_max_window(x: &Sample) -> Result<(usize, f64, WindowScan)> {
    let scan = window_scan(x, x.max_window())?;
    let (m, v) = scan.argmax().ok_or(Error::TooManyTies {
        max_tie_run: x.max_tie_run(),
        m_max: scan.m_max,
    })?;
    Ok((m, v, scan))
}
