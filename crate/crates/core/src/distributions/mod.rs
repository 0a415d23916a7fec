//! The ten null-hypothesis families.
//!
//! A [`Family`] names a parametric family; a [`Distribution`] is a family
//! together with a validated [`ParamVector`]. Parameter order follows the
//! `Call` convention of each density:
//!
//! | family      | call       | parameters (in order)      |
//! |-------------|------------|----------------------------|
//! | uniform     | `dunif`    | min, max                   |
//! | normal      | `dnorm`    | mean, standard deviation   |
//! | log-normal  | `dlnorm`   | meanlog, sdlog             |
//! | exponential | `dexp`     | rate                       |
//! | gamma       | `dgamma`   | shape α, rate β            |
//! | Weibull     | `dweibull` | shape a, scale b           |
//! | Pareto      | `dpareto`  | shape μ, location c        |
//! | Fisher      | `df`       | ν₁, ν₂                     |
//! | Laplace     | `dlaplace` | location μ, scale σ        |
//! | beta        | `dbeta`    | α, β                       |
//!
//! Pareto is the one to watch: the vector is `(mu, c)`, the order used in
//! reports, even though the density is usually written with c first.

mod mle;

use std::fmt;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{
    log_beta, log_gamma_unchecked, regularized_beta, regularized_gamma_p, std_normal_cdf,
    std_normal_quantile,
};

pub use mle::fit_mle;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Families supported as the null hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Uniform,
    Normal,
    LogNormal,
    Exponential,
    Gamma,
    Weibull,
    Pareto,
    Fisher,
    Laplace,
    Beta,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::Uniform,
        Family::Normal,
        Family::LogNormal,
        Family::Exponential,
        Family::Gamma,
        Family::Weibull,
        Family::Pareto,
        Family::Fisher,
        Family::Laplace,
        Family::Beta,
    ];

    /// Density call name, e.g. `"dnorm"`.
    pub fn call_name(self) -> &'static str {
        match self {
            Family::Uniform => "dunif",
            Family::Normal => "dnorm",
            Family::LogNormal => "dlnorm",
            Family::Exponential => "dexp",
            Family::Gamma => "dgamma",
            Family::Weibull => "dweibull",
            Family::Pareto => "dpareto",
            Family::Fisher => "df",
            Family::Laplace => "dlaplace",
            Family::Beta => "dbeta",
        }
    }

    /// Human-readable name used in report headers.
    pub fn display_name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Normal => "normal",
            Family::LogNormal => "log-normal",
            Family::Exponential => "exponential",
            Family::Gamma => "gamma",
            Family::Weibull => "Weibull",
            Family::Pareto => "Pareto",
            Family::Fisher => "Fisher",
            Family::Laplace => "Laplace",
            Family::Beta => "beta",
        }
    }

    /// Parses a call name (`dnorm`) or a plain family name (`normal`).
    pub fn from_name(name: &str) -> Result<Family> {
        let lower = name.trim().to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| {
                f.call_name() == lower
                    || f.display_name().to_ascii_lowercase() == lower
                    || format!("{:?}", f).to_ascii_lowercase() == lower
            })
            .ok_or_else(|| Error::UnknownFamily(name.to_string()))
    }

    pub fn spec(self) -> FamilySpec {
        let (param_names, support, default_delta): (&'static [&'static str], _, _) = match self {
            Family::Uniform => (&["Min", "Max"], SupportKind::Bounded, DELTA_1_12),
            Family::Normal => (&["Mean", "St. dev."], SupportKind::Real, DELTA_1_12),
            Family::LogNormal => (&["Location", "Scale"], SupportKind::Positive, DELTA_1_12),
            Family::Exponential => (&["Rate"], SupportKind::NonNegative, DELTA_1_12),
            Family::Gamma => (&["Shape", "Rate"], SupportKind::Positive, DELTA_1_12),
            Family::Weibull => (&["Shape", "Scale"], SupportKind::Positive, DELTA_2_15),
            Family::Pareto => (&["mu", "c"], SupportKind::LowerBounded, DELTA_1_12),
            Family::Fisher => (&["df1", "df2"], SupportKind::Positive, DELTA_2_15),
            Family::Laplace => (&["Location", "Scale"], SupportKind::Real, DELTA_1_12),
            Family::Beta => (&["Shape1", "Shape2"], SupportKind::UnitInterval, DELTA_2_15),
        };
        FamilySpec {
            family: self,
            param_count: param_names.len(),
            param_names,
            support,
            default_delta,
        }
    }

    pub fn param_count(self) -> usize {
        self.spec().param_count
    }

    pub fn default_delta(self) -> f64 {
        self.spec().default_delta.value()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.call_name())
    }
}

/// A small positive rational, used for the default δ values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

const DELTA_1_12: Rational = Rational { num: 1, den: 12 };
const DELTA_2_15: Rational = Rational { num: 2, den: 15 };

/// Shape of a family's support before parameters are plugged in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    /// ℝ
    Real,
    /// (0, ∞)
    Positive,
    /// [0, ∞)
    NonNegative,
    /// (0, 1)
    UnitInterval,
    /// [a, b], from the parameters
    Bounded,
    /// [c, ∞), from the parameters
    LowerBounded,
}

/// Static description of a family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    pub family: Family,
    pub param_count: usize,
    pub param_names: &'static [&'static str],
    pub support: SupportKind,
    pub default_delta: Rational,
}

/// Parameter values laid out as described in the module docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        ParamVector(values.into())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<&[f64]> for ParamVector {
    fn from(v: &[f64]) -> Self {
        ParamVector(v.to_vec())
    }
}

/// Where a parameter vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Mle,
    UserFixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ParamVector,
    pub provenance: Provenance,
}

/// An interval with open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Uniform { a: f64, b: f64 },
    Normal { mu: f64, sigma: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Weibull { shape: f64, scale: f64 },
    Pareto { mu: f64, c: f64 },
    Fisher { d1: f64, d2: f64 },
    Laplace { mu: f64, sigma: f64 },
    Beta { a: f64, b: f64 },
}

/// A fully specified member of one of the families.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    family: Family,
    params: ParamVector,
    law: Law,
    // additive constant of the log-density
    log_norm: f64,
}

fn invalid(family: Family, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        family: family.call_name(),
        reason: reason.into(),
    }
}

impl Distribution {
    /// Validates `params` against `family` and builds the distribution.
    pub fn new(family: Family, params: &ParamVector) -> Result<Self> {
        let p = params.values();
        let spec = family.spec();
        if p.len() != spec.param_count {
            return Err(invalid(
                family,
                format!(
                    "expected {} parameter(s) ({}), got {}",
                    spec.param_count,
                    spec.param_names.join(", "),
                    p.len()
                ),
            ));
        }
        if let Some(bad) = p.iter().find(|v| !v.is_finite()) {
            return Err(invalid(family, format!("parameter {bad} is not finite")));
        }
        let positive = |i: usize| -> Result<f64> {
            if p[i] > 0.0 {
                Ok(p[i])
            } else {
                Err(invalid(
                    family,
                    format!("{} must be > 0, got {}", spec.param_names[i], p[i]),
                ))
            }
        };
        let law = match family {
            Family::Uniform => {
                if p[0] >= p[1] {
                    return Err(invalid(
                        family,
                        format!("need min < max, got {} >= {}", p[0], p[1]),
                    ));
                }
                Law::Uniform { a: p[0], b: p[1] }
            }
            Family::Normal => Law::Normal {
                mu: p[0],
                sigma: positive(1)?,
            },
            Family::LogNormal => Law::LogNormal {
                mu: p[0],
                sigma: positive(1)?,
            },
            Family::Exponential => Law::Exponential { rate: positive(0)? },
            Family::Gamma => Law::Gamma {
                shape: positive(0)?,
                rate: positive(1)?,
            },
            Family::Weibull => Law::Weibull {
                shape: positive(0)?,
                scale: positive(1)?,
            },
            Family::Pareto => Law::Pareto {
                mu: positive(0)?,
                c: positive(1)?,
            },
            Family::Fisher => Law::Fisher {
                d1: positive(0)?,
                d2: positive(1)?,
            },
            Family::Laplace => Law::Laplace {
                mu: p[0],
                sigma: positive(1)?,
            },
            Family::Beta => Law::Beta {
                a: positive(0)?,
                b: positive(1)?,
            },
        };
        let log_norm = match law {
            Law::Uniform { a, b } => -(b - a).ln(),
            Law::Normal { sigma, .. } | Law::LogNormal { sigma, .. } => -sigma.ln() - LN_SQRT_2PI,
            Law::Exponential { rate } => rate.ln(),
            Law::Gamma { shape, rate } => shape * rate.ln() - log_gamma_unchecked(shape),
            Law::Weibull { shape, scale } => shape.ln() - shape * scale.ln(),
            Law::Pareto { mu, c } => mu.ln() + mu * c.ln(),
            Law::Fisher { d1, d2 } => -log_beta(0.5 * d1, 0.5 * d2)?,
            Law::Laplace { sigma, .. } => -(2.0 * sigma).ln(),
            Law::Beta { a, b } => -log_beta(a, b)?,
        };
        Ok(Distribution {
            family,
            params: params.clone(),
            law,
            log_norm,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn support(&self) -> Interval {
        let open = |lo, hi| Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        };
        match self.law {
            Law::Uniform { a, b } => Interval {
                lo: a,
                hi: b,
                lo_closed: true,
                hi_closed: true,
            },
            Law::Normal { .. } | Law::Laplace { .. } => open(f64::NEG_INFINITY, f64::INFINITY),
            Law::Exponential { .. } => Interval {
                lo: 0.0,
                hi: f64::INFINITY,
                lo_closed: true,
                hi_closed: false,
            },
            Law::Pareto { c, .. } => Interval {
                lo: c,
                hi: f64::INFINITY,
                lo_closed: true,
                hi_closed: false,
            },
            Law::Beta { .. } => open(0.0, 1.0),
            Law::LogNormal { .. }
            | Law::Gamma { .. }
            | Law::Weibull { .. }
            | Law::Fisher { .. } => open(0.0, f64::INFINITY),
        }
    }

    /// log p₀(x; θ); `-inf` outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        if x.is_nan() || !self.support().contains(x) {
            return f64::NEG_INFINITY;
        }
        self.log_norm + self.log_kernel(x)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    // x must lie in the support
    fn log_kernel(&self, x: f64) -> f64 {
        match self.law {
            Law::Uniform { .. } => 0.0,
            Law::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                -0.5 * z * z
            }
            Law::LogNormal { mu, sigma } => {
                let lx = x.ln();
                let z = (lx - mu) / sigma;
                -lx - 0.5 * z * z
            }
            Law::Exponential { rate } => -rate * x,
            Law::Gamma { shape, rate } => (shape - 1.0) * x.ln() - rate * x,
            Law::Weibull { shape, scale } => (shape - 1.0) * x.ln() - (x / scale).powf(shape),
            Law::Pareto { mu, .. } => -(mu + 1.0) * x.ln(),
            Law::Fisher { d1, d2 } => {
                let r = d1 * x / d2;
                -0.5 * d1 * (1.0 / r).ln_1p() - 0.5 * d2 * r.ln_1p() - x.ln()
            }
            Law::Laplace { mu, sigma } => -(x - mu).abs() / sigma,
            Law::Beta { a, b } => (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p(),
        }
    }

    /// (1/n) Σ log p₀(xᵢ; θ).
    pub fn mean_log_density(&self, xs: &[f64]) -> f64 {
        let support = self.support();
        let mut acc = 0.0;
        for &x in xs {
            if !support.contains(x) {
                return f64::NEG_INFINITY;
            }
            acc += self.log_kernel(x);
        }
        self.log_norm + acc / xs.len() as f64
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.law {
            Law::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Law::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
            Law::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Law::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Law::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    regularized_gamma_p(shape, rate * x).unwrap_or(1.0)
                }
            }
            Law::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            Law::Pareto { mu, c } => {
                if x <= c {
                    0.0
                } else {
                    -(mu * (c / x).ln()).exp_m1()
                }
            }
            Law::Fisher { d1, d2 } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    let y = d1 * x / (d1 * x + d2);
                    regularized_beta(y, 0.5 * d1, 0.5 * d2).unwrap_or(1.0)
                }
            }
            Law::Laplace { mu, sigma } => {
                let z = (x - mu) / sigma;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Law::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    regularized_beta(x, a, b).unwrap_or(1.0)
                }
            }
        }
    }

    /// Generalized inverse of [`cdf`](Self::cdf).
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if q.is_nan() || !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain {
                function: "quantile",
                value: q,
                expected: "0 <= q <= 1",
            });
        }
        let support = self.support();
        if q == 0.0 {
            return Ok(support.lo);
        }
        if q == 1.0 {
            return Ok(support.hi);
        }
        Ok(match self.law {
            Law::Uniform { a, b } => a + q * (b - a),
            Law::Normal { mu, sigma } => mu + sigma * std_normal_quantile(q)?,
            Law::LogNormal { mu, sigma } => (mu + sigma * std_normal_quantile(q)?).exp(),
            Law::Exponential { rate } => -(-q).ln_1p() / rate,
            Law::Weibull { shape, scale } => scale * (-(-q).ln_1p()).powf(1.0 / shape),
            Law::Pareto { mu, c } => c * (-(-q).ln_1p() / mu).exp(),
            Law::Laplace { mu, sigma } => {
                if q < 0.5 {
                    mu + sigma * (2.0 * q).ln()
                } else {
                    mu - sigma * (2.0 * (1.0 - q)).ln()
                }
            }
            Law::Gamma { .. } | Law::Fisher { .. } | Law::Beta { .. } => self.invert_cdf(q),
        })
    }

    // Safeguarded Newton iteration on the CDF for the families without an
    // explicit quantile function.
    fn invert_cdf(&self, q: f64) -> f64 {
        let support = self.support();
        let mut lo = support.lo;
        let mut hi = if support.hi.is_finite() {
            support.hi
        } else {
            let mut h = 1.0;
            while self.cdf(h) < q && h < 1e300 {
                h *= 2.0;
            }
            h
        };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = self.cdf(x) - q;
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let pdf = self.density(x);
            let step = f / pdf;
            if pdf > 0.0 && step.abs() <= 4.0 * f64::EPSILON * x.abs() {
                return x;
            }
            let newton = x - step;
            x = if pdf > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo) <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
        }
        x
    }

    /// Draws `n` i.i.d. variates.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        self.sample_into(n, rng, &mut out);
        out
    }

    /// Like [`sample`](Self::sample) but reuses `out`.
    pub fn sample_into(&self, n: usize, rng: &mut RngStream, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..n).map(|_| self.draw(rng)));
    }

    fn draw(&self, rng: &mut RngStream) -> f64 {
        match self.law {
            Law::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Law::Normal { mu, sigma } => mu + sigma * rng.sample::<f64, _>(StandardNormal),
            Law::LogNormal { mu, sigma } => {
                (mu + sigma * rng.sample::<f64, _>(StandardNormal)).exp()
            }
            Law::Exponential { rate } => standard_exponential(rng) / rate,
            Law::Gamma { shape, rate } => standard_gamma(shape, rng) / rate,
            Law::Weibull { shape, scale } => scale * standard_exponential(rng).powf(1.0 / shape),
            Law::Pareto { mu, c } => c * (standard_exponential(rng) / mu).exp(),
            Law::Fisher { d1, d2 } => {
                let num = standard_gamma(0.5 * d1, rng) / d1;
                let den = standard_gamma(0.5 * d2, rng) / d2;
                num / den
            }
            Law::Laplace { mu, sigma } => {
                let e = standard_exponential(rng);
                if rng.random::<bool>() {
                    mu + sigma * e
                } else {
                    mu - sigma * e
                }
            }
            Law::Beta { a, b } => {
                let x = standard_gamma(a, rng);
                let y = standard_gamma(b, rng);
                x / (x + y)
            }
        }
    }

    /// Analytic Shannon entropy, for the families where it is provided.
    pub fn closed_form_entropy(&self) -> Result<f64> {
        match self.law {
            Law::Uniform { a, b } => Ok((b - a).ln()),
            Law::Normal { sigma, .. } => {
                Ok((sigma * (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt()).ln())
            }
            Law::Pareto { mu, c } => Ok(-mu.ln() + c.ln() + 1.0 / mu + 1.0),
            _ => Err(Error::Unsupported(self.family.display_name())),
        }
    }
}

// −ln U with U uniform on (0, 1)
fn standard_exponential(rng: &mut RngStream) -> f64 {
    -rng.sample::<f64, _>(Open01).ln()
}

// Marsaglia–Tsang squeeze method; shapes below one are boosted by U^{1/α}.
fn standard_gamma(shape: f64, rng: &mut RngStream) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.sample(Open01);
        return standard_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.sample(Open01);
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 || u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// log p₀(x; θ) for the given family and parameters.
pub fn log_density(family: Family, params: &ParamVector, x: f64) -> Result<f64> {
    Ok(Distribution::new(family, params)?.log_density(x))
}

pub fn cdf(family: Family, params: &ParamVector, x: f64) -> Result<f64> {
    Ok(Distribution::new(family, params)?.cdf(x))
}

pub fn quantile(family: Family, params: &ParamVector, q: f64) -> Result<f64> {
    Distribution::new(family, params)?.quantile(q)
}

/// Draws `n ≥ 1` variates from the given member of `family`.
pub fn sample(
    family: Family,
    params: &ParamVector,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidOption(
            "sample size must be at least 1".into(),
        ));
    }
    Ok(Distribution::new(family, params)?.sample(n, rng))
}

pub fn closed_form_entropy(family: Family, params: &ParamVector) -> Result<f64> {
    Distribution::new(family, params)?.closed_form_entropy()
}

/// Checks that every observation lies in the family's support. For the
/// families whose support depends on the parameters (uniform, Pareto) only
/// the parameter-free part is checked: finite values, and positive values
/// for Pareto.
pub fn check_support(family: Family, xs: &[f64]) -> Result<()> {
    let (ok, support): (fn(f64) -> bool, &str) = match family.spec().support {
        SupportKind::Real | SupportKind::Bounded => (|x: f64| x.is_finite(), "(-inf, inf)"),
        SupportKind::Positive | SupportKind::LowerBounded => (|x: f64| x > 0.0, "(0, inf)"),
        SupportKind::NonNegative => (|x: f64| x >= 0.0, "[0, inf)"),
        SupportKind::UnitInterval => (|x: f64| x > 0.0 && x < 1.0, "(0, 1)"),
    };
    let bad: Vec<usize> = xs
        .iter()
        .enumerate()
        .filter(|(_, &x)| !ok(x))
        .map(|(i, _)| i)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::OutOfSupport {
            family: family.call_name(),
            support: support.to_string(),
            count: bad.len(),
            indices: bad.into_iter().take(10).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    fn dist(f: Family, p: &[f64]) -> Distribution {
        Distribution::new(f, &ParamVector::new(p)).unwrap()
    }

    fn representative(f: Family) -> Distribution {
        let p: &[f64] = match f {
            Family::Uniform => &[-1.0, 2.0],
            Family::Normal => &[0.5, 1.7],
            Family::LogNormal => &[0.2, 0.6],
            Family::Exponential => &[1.5],
            Family::Gamma => &[2.5, 1.3],
            Family::Weibull => &[1.7, 2.2],
            Family::Pareto => &[2.5, 1.5],
            Family::Fisher => &[5.0, 9.0],
            Family::Laplace => &[-0.5, 0.8],
            Family::Beta => &[2.2, 3.5],
        };
        dist(f, p)
    }

    // (mean, variance) straight from the textbook formulas
    fn analytic_moments(d: &Distribution) -> (f64, f64) {
        let p = d.params().values();
        let g = |x: f64| log_gamma_unchecked(x).exp();
        match d.family() {
            Family::Uniform => ((p[0] + p[1]) / 2.0, (p[1] - p[0]).powi(2) / 12.0),
            Family::Normal => (p[0], p[1] * p[1]),
            Family::LogNormal => {
                let s2 = p[1] * p[1];
                (
                    (p[0] + s2 / 2.0).exp(),
                    (s2.exp() - 1.0) * (2.0 * p[0] + s2).exp(),
                )
            }
            Family::Exponential => (1.0 / p[0], 1.0 / (p[0] * p[0])),
            Family::Gamma => (p[0] / p[1], p[0] / (p[1] * p[1])),
            Family::Weibull => {
                let m = p[1] * g(1.0 + 1.0 / p[0]);
                (m, p[1] * p[1] * g(1.0 + 2.0 / p[0]) - m * m)
            }
            Family::Pareto => {
                let (mu, c) = (p[0], p[1]);
                (
                    mu * c / (mu - 1.0),
                    c * c * mu / ((mu - 1.0).powi(2) * (mu - 2.0)),
                )
            }
            Family::Fisher => {
                let (d1, d2) = (p[0], p[1]);
                (
                    d2 / (d2 - 2.0),
                    2.0 * d2 * d2 * (d1 + d2 - 2.0) / (d1 * (d2 - 2.0).powi(2) * (d2 - 4.0)),
                )
            }
            Family::Laplace => (p[0], 2.0 * p[1] * p[1]),
            Family::Beta => {
                let (a, b) = (p[0], p[1]);
                (a / (a + b), a * b / ((a + b).powi(2) * (a + b + 1.0)))
            }
        }
    }

    #[test]
    fn table_of_families() {
        for f in Family::ALL {
            let spec = f.spec();
            let expected = if f == Family::Exponential { 1 } else { 2 };
            assert_eq!(spec.param_count, expected, "{f}");
            assert_eq!(spec.param_names.len(), spec.param_count);
            let d = spec.default_delta;
            assert!(d == DELTA_1_12 || d == DELTA_2_15);
            assert_eq!(Family::from_name(f.call_name()).unwrap(), f);
        }
        assert_eq!(Family::Weibull.default_delta(), 2.0 / 15.0);
        assert_eq!(Family::Pareto.default_delta(), 1.0 / 12.0);
        assert_eq!(Family::Gamma.default_delta(), 1.0 / 12.0);
        assert_eq!(Family::from_name("normal").unwrap(), Family::Normal);
        assert!(Family::from_name("dcauchy").is_err());
    }

    #[test]
    fn log_density_examples() {
        let lp = log_density(Family::Normal, &ParamVector::new([0.0, 1.0]), 0.0).unwrap();
        assert!((lp + 0.918_938_533_204_672_8).abs() < 1e-15);
        let lp = log_density(Family::Pareto, &ParamVector::new([2.0, 1.0]), 1.0).unwrap();
        assert!((lp - 2f64.ln()).abs() < 1e-15);
        let lp = log_density(Family::Exponential, &ParamVector::new([2.0]), -1.0).unwrap();
        assert_eq!(lp, f64::NEG_INFINITY);
    }

    #[test]
    fn cdf_and_quantile_examples() {
        let par = ParamVector::new([2.0, 1.0]);
        assert!((cdf(Family::Pareto, &par, 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(
            cdf(Family::Laplace, &ParamVector::new([0.0, 1.0]), 0.0).unwrap(),
            0.5
        );
        assert!(
            (quantile(Family::Uniform, &ParamVector::new([0.0, 1.0]), 0.3).unwrap() - 0.3).abs()
                < 1e-15
        );
        assert!(quantile(Family::Uniform, &ParamVector::new([0.0, 1.0]), 1.3).is_err());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let cases: &[(Family, &[f64])] = &[
            (Family::Normal, &[-2.0]),
            (Family::Normal, &[0.0, -1.0]),
            (Family::Uniform, &[1.0, 1.0]),
            (Family::Exponential, &[0.0]),
            (Family::Pareto, &[1.0, 0.0]),
            (Family::Beta, &[-1.0, 2.0]),
            (Family::Gamma, &[1.0, f64::NAN]),
        ];
        for (f, p) in cases {
            let err = Distribution::new(*f, &ParamVector::new(*p)).unwrap_err();
            assert!(matches!(err, Error::InvalidParameter { .. }), "{f} {p:?}");
        }
    }

    #[test]
    fn closed_form_entropies() {
        let h = closed_form_entropy(Family::Normal, &ParamVector::new([0.0, 1.0])).unwrap();
        assert!((h - 1.418_939).abs() < 5e-7);
        let h = closed_form_entropy(Family::Pareto, &ParamVector::new([2.0, 1.0])).unwrap();
        assert!((h - 0.806_852_8).abs() < 5e-8);
        let h = closed_form_entropy(Family::Uniform, &ParamVector::new([0.0, 1.0])).unwrap();
        assert_eq!(h, 0.0);
        assert!(matches!(
            closed_form_entropy(Family::Gamma, &ParamVector::new([2.0, 1.0])),
            Err(Error::Unsupported(_))
        ));
    }

    // Composite Simpson rule on a substitution that maps the support onto a
    // bounded interval.
    fn integrate_density(d: &Distribution) -> f64 {
        let s = d.support();
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut acc = f(a) + f(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * f(a + i as f64 * h);
            }
            acc * h / 3.0
        };
        match (s.lo.is_finite(), s.hi.is_finite()) {
            (true, true) => {
                // x = lo + (hi-lo)(1-cos(πt))/2 clusters nodes at both ends
                let f = |t: f64| {
                    let w = std::f64::consts::PI * t;
                    let x = s.lo + (s.hi - s.lo) * (1.0 - w.cos()) / 2.0;
                    let jac = (s.hi - s.lo) * std::f64::consts::PI * w.sin() / 2.0;
                    let v = d.density(x) * jac;
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                };
                simpson(&f, 0.0, 1.0, 20_000)
            }
            (true, false) => {
                // x = lo + t/(1-t)
                let f = |t: f64| {
                    if t >= 1.0 {
                        return 0.0;
                    }
                    let x = s.lo + t / (1.0 - t);
                    let v = d.density(x) / ((1.0 - t) * (1.0 - t));
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                };
                simpson(&f, 0.0, 1.0, 200_000)
            }
            _ => {
                let f = |t: f64| {
                    if t.abs() >= 1.0 {
                        return 0.0;
                    }
                    let x = t / (1.0 - t * t);
                    d.density(x) * (1.0 + t * t) / (1.0 - t * t).powi(2)
                };
                simpson(&f, -1.0, 1.0, 200_000)
            }
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        for f in Family::ALL {
            let d = representative(f);
            let total = integrate_density(&d);
            assert!((total - 1.0).abs() < 1e-6, "{f}: {total}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for f in Family::ALL {
            let d = representative(f);
            for i in 1..=999 {
                let q = i as f64 / 1000.0;
                let x = d.quantile(q).unwrap();
                assert!(
                    (d.cdf(x) - q).abs() <= 1e-9,
                    "{f} q={q} x={x} cdf={}",
                    d.cdf(x)
                );
            }
        }
    }

    #[test]
    fn log_density_finite_exactly_on_support() {
        for f in Family::ALL {
            let d = representative(f);
            let s = d.support();
            for i in -400..=400 {
                let x = i as f64 * 0.0125;
                let lp = d.log_density(x);
                assert_eq!(lp.is_finite(), s.contains(x), "{f} x={x} lp={lp}");
                if !s.contains(x) {
                    assert_eq!(lp, f64::NEG_INFINITY);
                }
            }
        }
    }

    #[test]
    fn sample_means_match_analytic_means() {
        let root = SeedTree::new(20_240_611);
        for (k, f) in Family::ALL.into_iter().enumerate() {
            let d = representative(f);
            let mut rng = root.child(k as u64).stream();
            let xs = d.sample(1000, &mut rng);
            let (mean, var) = analytic_moments(&d);
            let got = xs.iter().sum::<f64>() / xs.len() as f64;
            let se = (var / xs.len() as f64).sqrt();
            assert!(
                (got - mean).abs() < 4.0 * se,
                "{f}: {got} vs {mean} (se {se})"
            );
            let s = d.support();
            assert!(xs.iter().all(|&x| s.contains(x)), "{f}");
        }
    }

    #[test]
    fn pareto_draws_stay_above_location() {
        let d = dist(Family::Pareto, &[2.0, 1.0]);
        let xs = d.sample(10_000, &mut SeedTree::new(3).stream());
        assert!(xs.iter().all(|&x| x >= 1.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = dist(Family::Gamma, &[0.7, 2.0]);
        let a = d.sample(50, &mut SeedTree::new(11).stream());
        let b = d.sample(50, &mut SeedTree::new(11).stream());
        assert_eq!(a, b);
        assert!(sample(
            Family::Gamma,
            &ParamVector::new([1.0, 1.0]),
            0,
            &mut SeedTree::new(1).stream()
        )
        .is_err());
    }

    #[test]
    fn mean_log_density_matches_pointwise() {
        for f in Family::ALL {
            let d = representative(f);
            let xs = d.sample(25, &mut SeedTree::new(5).stream());
            let direct = xs.iter().map(|&x| d.log_density(x)).sum::<f64>() / 25.0;
            assert!((d.mean_log_density(&xs) - direct).abs() < 1e-12, "{f}");
        }
    }

    #[test]
    fn support_check_reports_indices() {
        let err = check_support(Family::Exponential, &[1.0, -2.0, 3.0, -0.5]).unwrap_err();
        match err {
            Error::OutOfSupport { count, indices, .. } => {
                assert_eq!(count, 2);
                assert_eq!(indices, vec![1, 3]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(check_support(Family::Beta, &[0.2, 1.0]).is_err());
        assert!(check_support(Family::Normal, &[-3.0, 4.0]).is_ok());
    }
}
