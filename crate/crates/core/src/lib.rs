//! Probability metrics on discrete measures, risk functionals, and
//! Monte-Carlo diagnostics that certify or refute qualitative robustness of
//! estimator sequences empirically.
//!
//! The crate is organized along the pipeline:
//!
//! * [`measures`] — finitely supported probability measures on R^d with
//!   mixing, convolution, quantiles, and gauge integrals;
//! * [`metrics`] — Prohorov distance with coupling certificates,
//!   L1-Wasserstein on the line, and the gauge-weighted metric;
//! * [`functionals`] — mean, absolute moments, VaR/AVaR, and the
//!   collective premium;
//! * [`models`] — seeded samplers for parametric families, discrete laws,
//!   and linear processes, with likelihoods and Fisher information;
//! * [`estimators`] — plug-in, maximum-likelihood, Yule-Walker, and
//!   premium estimators;
//! * [`robustness`] — sampling laws, robustness surfaces along
//!   contamination paths, continuity probes, and the index of robustness;
//! * [`rng`] — the fixed counter-based generator and seed-derivation
//!   scheme that make every experiment bit-reproducible.

pub mod estimators;
pub mod functionals;
pub mod measures;
pub mod metrics;
pub mod models;
pub mod rng;
pub mod robustness;
pub mod special;

pub use measures::{DiscreteMeasure, GaugeFunction, MeasureError, Point};
pub use metrics::{
    prohorov, prohorov_bruteforce, psi_distance, strassen_feasible, wasserstein1,
    CouplingCertificate, MetricError,
};
pub use rng::{SeedSpec, SplitMix64};
