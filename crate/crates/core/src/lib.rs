//! Limits of agreement with the mean (LOAM) for balanced multi-observer,
//! repeated-measurement studies.
//!
//! Measurements `Y[i][j][k]` on subject `i`, by observer `j`, replicate `k`
//! are modelled as a two-way random-effects model with interaction:
//!
//! ```text
//! Y_ijk = mu + A_i + B_j + (AB)_ij + E_ijk
//! ```
//!
//! with independent centred normal effects of variances `s2_A`, `s2_B`,
//! `s2_AB` and `s2_E`. The crate provides
//!
//! * the balanced [`MeasurementGrid`] and long-format ingestion,
//! * the two-way ANOVA decomposition and method-of-moments variance components,
//! * reproducibility and repeatability LOAM point estimates,
//! * Graybill–Wang and exact chi-square confidence intervals, plus intervals
//!   for the standard deviations of each random effect,
//! * a planner for the number of observers needed to reach a target
//!   interval width,
//! * a subject-level bootstrap test comparing the LOAM of two methods,
//! * a simulator for the model, used as the verification oracle.
//!
//! Note on indexing: `a` counts subjects and `b` counts observers throughout,
//! matching the role of the `A_i` (subject) and `B_j` (observer) effects.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel drivers live in the companion `loam` crate.
//!
//! ```
//! use loam_core::{decompose, ingest_long, repeatability_loam, LongRecord, DEFAULT_Z};
//!
//! let rows = [
//!     ("1", "1", 1, 26.0), ("1", "1", 2, 26.2), ("1", "2", 1, 25.8), ("1", "2", 2, 25.7),
//!     ("2", "1", 1, 19.0), ("2", "1", 2, 19.1), ("2", "2", 1, 19.9), ("2", "2", 2, 20.1),
//! ];
//! let records: Vec<LongRecord> = rows
//!     .iter()
//!     .map(|&(s, o, k, v)| LongRecord::new(s, o, k, v))
//!     .collect();
//! let grid = ingest_long(&records).unwrap();
//! let anova = decompose(&grid);
//! let rep = repeatability_loam(&anova, DEFAULT_Z);
//! assert!((rep.limit - 0.154_951_605_348_251_7).abs() < 1e-9);
//! ```

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod math;

pub mod anova;
pub mod bootstrap;
pub mod design;
pub mod error;
pub mod interval;
pub mod loam;
pub mod planner;
pub mod quantile;
pub mod rng;
pub mod simulate;

pub use anova::{decompose, estimate_components, AnovaDecomposition, VarianceComponents};
pub use bootstrap::{
    bootstrap_compare, resample_subjects, BootstrapConfig, BootstrapSummary, ComparisonResult,
    PairedStudy,
};
pub use design::{ingest_long, Design, LongRecord, MeasurementGrid};
pub use error::{Error, Result};
pub use interval::{
    exact_repeatability_ci, gw_reproducibility_ci, sigma_ci, Component, GwCoefficients,
    IntervalMethod, IntervalResult, IntervalTarget,
};
pub use loam::{
    difference_series, repeatability_loam, reproducibility_loam, DifferenceKind, DifferenceSeries,
    LoamEstimate, LoamKind, DEFAULT_Z,
};
pub use planner::{
    projected_width, solve_observers, solve_subjects, PilotEstimates, SizePlan, WidthProjection,
};
pub use quantile::{chisq_quantile, f_quantile_inf_denominator, normal_quantile};
pub use simulate::{simulate, true_loam, ModelParams, TrueLoam};
