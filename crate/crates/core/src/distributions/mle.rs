//! Maximum-likelihood estimation.
//!
//! Closed forms for uniform, normal, log-normal, exponential, Pareto and
//! Laplace. Gamma and Weibull reduce to a one-dimensional profile equation;
//! beta and Fisher use a damped Newton iteration on the two-dimensional
//! score. Iterative fits stop once the gradient of the mean log-likelihood
//! has norm at most [`GRADIENT_TOL`].

use super::{check_support, Distribution, Family, FitResult, ParamVector, Provenance};
use crate::error::{Error, Result};
use crate::special::{digamma, trigamma};

pub const GRADIENT_TOL: f64 = 1e-8;

const MAX_ITER: usize = 500;

fn estimation_error(
    family: Family,
    reason: impl Into<String>,
    iterations: usize,
    grad_norm: f64,
) -> Error {
    Error::Estimation {
        family: family.call_name(),
        reason: reason.into(),
        iterations,
        grad_norm,
    }
}

fn degenerate(family: Family, what: &str) -> Error {
    Error::Data(format!(
        "{}: cannot estimate parameters, {what}",
        family.call_name()
    ))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Maximum-likelihood fit of `family` to `xs`.
///
/// Observations are checked against the family support first.
pub fn fit_mle(family: Family, xs: &[f64]) -> Result<FitResult> {
    if xs.len() < 2 {
        return Err(Error::SampleTooSmall {
            n: xs.len(),
            min: 2,
        });
    }
    if let Some(index) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    check_support(family, xs)?;

    let params = match family {
        Family::Uniform => {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo >= hi {
                return Err(degenerate(family, "all observations are equal"));
            }
            vec![lo, hi]
        }
        Family::Normal => normal_fit(family, xs.iter().copied())?,
        Family::LogNormal => normal_fit(family, xs.iter().map(|x| x.ln()))?,
        Family::Exponential => {
            let m = mean(xs);
            if m <= 0.0 {
                return Err(degenerate(family, "all observations are zero"));
            }
            vec![1.0 / m]
        }
        Family::Pareto => {
            let c = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let s: f64 = xs.iter().map(|x| (x / c).ln()).sum();
            if s <= 0.0 {
                return Err(degenerate(family, "all observations are equal"));
            }
            vec![xs.len() as f64 / s, c]
        }
        Family::Laplace => {
            let mut sorted = xs.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let median = if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            };
            let scale = mean(
                &sorted
                    .iter()
                    .map(|x| (x - median).abs())
                    .collect::<Vec<_>>(),
            );
            if scale <= 0.0 {
                return Err(degenerate(family, "zero mean absolute deviation"));
            }
            vec![median, scale]
        }
        Family::Gamma => gamma_fit(xs)?,
        Family::Weibull => weibull_fit(xs)?,
        Family::Beta => beta_fit(xs)?,
        Family::Fisher => fisher_fit(xs)?,
    };
    let params = ParamVector(params);
    // re-validate; catches overflow to inf in a pathological fit
    Distribution::new(family, &params)
        .map_err(|e| estimation_error(family, e.to_string(), 0, f64::NAN))?;
    Ok(FitResult {
        params,
        provenance: Provenance::Mle,
    })
}

fn normal_fit(family: Family, values: impl Iterator<Item = f64> + Clone) -> Result<Vec<f64>> {
    let n = values.clone().count() as f64;
    let m = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(degenerate(family, "zero variance"));
    }
    Ok(vec![m, var.sqrt()])
}

// Solves log α − ψ(α) = log x̄ − mean(log x), then β = α / x̄.
fn gamma_fit(xs: &[f64]) -> Result<Vec<f64>> {
    let family = Family::Gamma;
    let m = mean(xs);
    let mean_log = xs.iter().map(|x| x.ln()).sum::<f64>() / xs.len() as f64;
    let s = m.ln() - mean_log;
    if s <= 0.0 || !s.is_finite() {
        return Err(degenerate(family, "all observations are equal"));
    }
    // f(α) = log α − ψ(α) − s is decreasing; Newton in log α.
    let f = |a: f64| -> Result<f64> { Ok(a.ln() - digamma(a)? - s) };
    let mut alpha = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut residual = f(alpha)?;
    let mut iterations = 0;
    while residual.abs() > 1e-14 * s.max(1.0) && iterations < MAX_ITER {
        iterations += 1;
        if residual > 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let deriv = 1.0 / alpha - trigamma(alpha)?;
        // d f / d log α = α f'(α)
        let step = residual / (alpha * deriv);
        let mut next = alpha * (-step).exp();
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * alpha
            };
        }
        if next == alpha {
            break;
        }
        alpha = next;
        residual = f(alpha)?;
    }
    // gradient of the mean log-likelihood at (α, α/x̄): (residual, 0)
    if residual.abs() > GRADIENT_TOL || !alpha.is_finite() {
        return Err(estimation_error(
            family,
            "profile equation did not converge",
            iterations,
            residual.abs(),
        ));
    }
    Ok(vec![alpha, alpha / m])
}

// Profile equation in the shape k on data standardized by its geometric
// mean: Σ yᵏ log y / Σ yᵏ − 1/k = 0.
fn weibull_fit(xs: &[f64]) -> Result<Vec<f64>> {
    let family = Family::Weibull;
    let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let n = logs.len() as f64;
    let g = logs.iter().sum::<f64>() / n;
    let ly: Vec<f64> = logs.iter().map(|l| l - g).collect();
    let lmax = ly.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lmin = ly.iter().copied().fold(f64::INFINITY, f64::min);
    if lmax - lmin <= 0.0 {
        return Err(degenerate(family, "all observations are equal"));
    }

    // returns (h(k), h'(k), log mean yᵏ)
    let eval = |k: f64| {
        let mut sw = 0.0;
        let mut swl = 0.0;
        let mut swll = 0.0;
        for &l in &ly {
            let w = (k * (l - lmax)).exp();
            sw += w;
            swl += w * l;
            swll += w * l * l;
        }
        let m1 = swl / sw;
        let var = (swll / sw - m1 * m1).max(0.0);
        let log_mean_pow = k * lmax + (sw / n).ln();
        (m1 - 1.0 / k, var + 1.0 / (k * k), log_mean_pow)
    };

    let sd = (ly.iter().map(|l| l * l).sum::<f64>() / n).sqrt();
    let mut k = 1.2 / sd;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let (mut h, mut dh, mut log_mean_pow) = eval(k);
    let mut iterations = 0;
    while iterations < MAX_ITER {
        // gradient of the mean log-likelihood w.r.t. the shape, at the
        // profiled scale, is −h(k)
        if h.abs() <= 1e-13 * (1.0 / k).max(1.0) {
            break;
        }
        iterations += 1;
        if h < 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let mut next = k - h / dh;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * k
            };
        }
        if next == k {
            break;
        }
        k = next;
        (h, dh, log_mean_pow) = eval(k);
    }
    if h.abs() > GRADIENT_TOL || !k.is_finite() {
        return Err(estimation_error(
            family,
            "shape equation did not converge",
            iterations,
            h.abs(),
        ));
    }
    let scale = (g + log_mean_pow / k).exp();
    Ok(vec![k, scale])
}

struct Objective {
    value: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

// Damped Newton ascent on a concave-ish objective over (0, ∞)². Steps that
// leave the domain or decrease the objective are halved; when the Hessian is
// not negative definite a scaled gradient step is used instead.
fn newton_2d(
    family: Family,
    start: [f64; 2],
    objective: impl Fn([f64; 2]) -> Result<Objective>,
) -> Result<[f64; 2]> {
    let mut theta = start;
    let mut cur = objective(theta)?;
    for iteration in 0..MAX_ITER {
        let gnorm = cur.grad[0].hypot(cur.grad[1]);
        if gnorm <= GRADIENT_TOL * 1e-2 {
            return Ok(theta);
        }
        let [[a, b], [_, d]] = cur.hess;
        let det = a * d - b * b;
        let mut dir = if a < 0.0 && det > 0.0 {
            // −H⁻¹ g
            [
                -(d * cur.grad[0] - b * cur.grad[1]) / det,
                -(-b * cur.grad[0] + a * cur.grad[1]) / det,
            ]
        } else {
            [
                cur.grad[0] * theta[0] * theta[0],
                cur.grad[1] * theta[1] * theta[1],
            ]
        };
        // keep the step inside the positive quadrant
        for (i, step) in dir.iter_mut().enumerate() {
            if theta[i] + *step <= 0.0 {
                let scale = 0.9 * theta[i] / step.abs();
                dir = [dir[0] * scale, dir[1] * scale];
                break;
            }
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = [theta[0] + t * dir[0], theta[1] + t * dir[1]];
            if cand[0] > 0.0 && cand[1] > 0.0 && cand.iter().all(|v| v.is_finite()) {
                if let Ok(next) = objective(cand) {
                    if next.value.is_finite() && next.value >= cur.value - 1e-15 * cur.value.abs() {
                        accepted = Some((cand, next));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, next)) => {
                let moved = (cand[0] - theta[0]).abs() + (cand[1] - theta[1]).abs();
                theta = cand;
                cur = next;
                if moved <= 1e-15 * (theta[0] + theta[1]) {
                    break;
                }
            }
            None => {
                let gnorm = cur.grad[0].hypot(cur.grad[1]);
                if gnorm <= GRADIENT_TOL {
                    return Ok(theta);
                }
                return Err(estimation_error(
                    family,
                    "line search failed",
                    iteration,
                    gnorm,
                ));
            }
        }
    }
    let gnorm = cur.grad[0].hypot(cur.grad[1]);
    if gnorm <= GRADIENT_TOL {
        Ok(theta)
    } else {
        Err(estimation_error(
            family,
            "Newton iteration did not converge",
            MAX_ITER,
            gnorm,
        ))
    }
}

fn beta_fit(xs: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len() as f64;
    let g1 = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
    let g2 = xs.iter().map(|x| (-x).ln_1p()).sum::<f64>() / n;
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(degenerate(Family::Beta, "zero variance"));
    }
    let common = m * (1.0 - m) / var - 1.0;
    let start = if common > 0.0 {
        [m * common, (1.0 - m) * common]
    } else {
        [1.0, 1.0]
    };
    let objective = |[a, b]: [f64; 2]| -> Result<Objective> {
        let psi_ab = digamma(a + b)?;
        let tri_ab = trigamma(a + b)?;
        let value = (a - 1.0) * g1 + (b - 1.0) * g2 - crate::special::log_beta(a, b)?;
        Ok(Objective {
            value,
            grad: [psi_ab - digamma(a)? + g1, psi_ab - digamma(b)? + g2],
            hess: [
                [tri_ab - trigamma(a)?, tri_ab],
                [tri_ab, tri_ab - trigamma(b)?],
            ],
        })
    };
    Ok(newton_2d(Family::Beta, start, objective)?.to_vec())
}

/// Mean log-likelihood of F(d1, d2) with its gradient and Hessian.
fn fisher_objective(xs: &[f64], log_xs: &[f64], d1: f64, d2: f64) -> Result<Objective> {
    let n = xs.len() as f64;
    let (a, b) = (0.5 * d1, 0.5 * d2);
    let ab = a + b;
    let psi_ab = digamma(ab)?;
    let tri_ab = trigamma(ab)?;
    let (psi_a, psi_b) = (digamma(a)?, digamma(b)?);
    let (tri_a, tri_b) = (trigamma(a)?, trigamma(b)?);
    let mut value = 0.0;
    let mut g = [0.0; 2];
    let mut h = [[0.0; 2]; 2];
    for (&x, &lx) in xs.iter().zip(log_xs) {
        let s = d1 * x + d2;
        let ls = s.ln();
        value += a * (d1.ln() + lx) + b * d2.ln() - ab * ls - lx;
        g[0] += 0.5 * (d1.ln() + lx - ls) - ab * x / s;
        g[1] += 0.5 * (d2.ln() - ls) - ab / s;
        h[0][0] += -x / s + ab * x * x / (s * s);
        h[0][1] += -0.5 / s - 0.5 * x / s + ab * x / (s * s);
        h[1][1] += -1.0 / s + ab / (s * s);
    }
    let lb = crate::special::log_beta(a, b)?;
    value = value / n - lb;
    g[0] = g[0] / n + 0.5 * (1.0 - psi_a + psi_ab);
    g[1] = g[1] / n + 0.5 * (1.0 - psi_b + psi_ab);
    h[0][0] = h[0][0] / n + 0.5 / d1 - 0.25 * tri_a + 0.25 * tri_ab;
    h[0][1] = h[0][1] / n + 0.25 * tri_ab;
    h[1][1] = h[1][1] / n + 0.5 / d2 - 0.25 * tri_b + 0.25 * tri_ab;
    h[1][0] = h[0][1];
    Ok(Objective {
        value,
        grad: g,
        hess: h,
    })
}

fn fisher_fit(xs: &[f64]) -> Result<Vec<f64>> {
    let log_xs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let m = mean(xs);
    let d2 = if m > 1.0 { 2.0 * m / (m - 1.0) } else { 4.0 };
    // coarse scan for ν₁ with ν₂ held at its moment estimate
    let mut best = (f64::NEG_INFINITY, 1.0);
    for i in -20..=40 {
        let d1 = 10f64.powf(i as f64 / 10.0);
        if let Ok(obj) = fisher_objective(xs, &log_xs, d1, d2) {
            if obj.value > best.0 {
                best = (obj.value, d1);
            }
        }
    }
    let objective = |[d1, d2]: [f64; 2]| fisher_objective(xs, &log_xs, d1, d2);
    Ok(newton_2d(Family::Fisher, [best.1, d2], objective)?.to_vec())
}
