//! Vasicek–Song goodness-of-fit tests.
//!
//! The test statistic estimates the Kullback–Leibler divergence between the
//! law of a sample and a null distribution as the gap between the
//! spacing-based (Vasicek) entropy estimate and the mean null
//! log-likelihood. Simple and composite nulls are supported over ten
//! parametric families, with asymptotic or Monte-Carlo p-values.
//!
//! ```
//! use vsgof::{vs_test, Family, Sample, TestOptions};
//!
//! let x = Sample::new(vec![0.3, 1.9, -0.4, 0.8, 1.1, -1.6, 0.2, 0.5, -0.9, 2.2,
//!                         0.1, -0.3, 1.4, -1.1, 0.6, 0.9, -0.2, 0.4, 1.7, -0.7])?;
//! let opts = TestOptions { replicates: 200, seed: 1, ..TestOptions::default() };
//! let report = vs_test(&x, Family::Normal, &opts)?;
//! assert!(report.p_value > 0.0 && report.p_value <= 1.0);
//! # Ok::<(), vsgof::Error>(())
//! ```

pub mod distributions;
pub mod edf;
pub mod entropy;
pub mod error;
pub mod power;
pub mod rng;
pub mod special;
pub mod vs;

pub use distributions::{fit_mle, Distribution, Family, FitResult, ParamVector, Provenance};
pub use entropy::{vasicek_estimate, window_scan, Sample, WindowScan};
pub use error::{Error, ErrorKind, Result};
pub use rng::SeedTree;
pub use vs::{vs_test, PValueMethod, TestOptions, VsTestReport};
