//! Reproducibility and repeatability LOAM point estimates.
//!
//! The reproducibility LOAM bounds differences `Y_ijk - Ȳi..` between a
//! measurement and its subject mean; the repeatability LOAM bounds
//! differences `Y_ijk - Ȳij.` to the subject/observer cell mean. Both are
//! estimated from sums of squares:
//!
//! ```text
//! reproducibility:  ± z sqrt((SSB + SSAB + SSE) / N)
//! repeatability:    ± z sqrt(SSE / N)
//! ```
//!
//! which equal the variance-component forms
//! `z sqrt((b-1)/b (s2_B + s2_AB) + (bc-1)/(bc) s2_E)` and
//! `z sqrt((c-1)/c s2_E)` with the raw ANOVA estimates plugged in. The SS form
//! never has a negative radicand, so it is the one computed here.

use alloc::vec::Vec;

use crate::anova::AnovaDecomposition;
use crate::design::MeasurementGrid;
use crate::math;

/// Standard normal 97.5% point as conventionally rounded for 95% limits.
pub const DEFAULT_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LoamKind {
    Reproducibility,
    Repeatability,
}

/// The LOAM is `±limit`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LoamEstimate {
    pub kind: LoamKind,
    pub limit: f64,
    pub z: f64,
    pub n_total: usize,
}

pub fn reproducibility_loam(anova: &AnovaDecomposition, z: f64) -> LoamEstimate {
    let n = anova.design.n();
    LoamEstimate {
        kind: LoamKind::Reproducibility,
        limit: z * math::sqrt((anova.ss_b + anova.ss_ab + anova.ss_e) / n as f64),
        z,
        n_total: n,
    }
}

pub fn repeatability_loam(anova: &AnovaDecomposition, z: f64) -> LoamEstimate {
    let n = anova.design.n();
    LoamEstimate {
        kind: LoamKind::Repeatability,
        limit: z * math::sqrt(anova.ss_e / n as f64),
        z,
        n_total: n,
    }
}

pub fn loam(anova: &AnovaDecomposition, kind: LoamKind, z: f64) -> LoamEstimate {
    match kind {
        LoamKind::Reproducibility => reproducibility_loam(anova, z),
        LoamKind::Repeatability => repeatability_loam(anova, z),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DifferenceKind {
    /// `Y_ijk - Ȳi..`, paired with the reproducibility LOAM.
    ToSubjectMean,
    /// `Y_ijk - Ȳij.`, paired with the repeatability LOAM.
    ToCellMean,
}

/// One per-datum difference; indices are 0-based positions in the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Difference {
    pub subject: usize,
    pub observer: usize,
    pub replicate: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DifferenceSeries {
    pub kind: DifferenceKind,
    pub differences: Vec<Difference>,
}

impl DifferenceSeries {
    /// Fraction of differences with `|d| <= limit`.
    pub fn fraction_within(&self, limit: f64) -> f64 {
        let inside = self
            .differences
            .iter()
            .filter(|d| d.value.abs() <= limit)
            .count();
        inside as f64 / self.differences.len() as f64
    }
}

pub fn difference_series(grid: &MeasurementGrid, kind: DifferenceKind) -> DifferenceSeries {
    let d = grid.design();
    let c = d.c();
    let subject_means = grid.subject_means();
    let cell_means = grid.cell_means();
    let mut differences = Vec::with_capacity(d.n());
    for (i, row) in cell_means.iter().enumerate() {
        for (j, &cell_mean) in row.iter().enumerate() {
            let reference = match kind {
                DifferenceKind::ToSubjectMean => subject_means[i],
                DifferenceKind::ToCellMean => cell_mean,
            };
            for k in 0..c {
                differences.push(Difference {
                    subject: i,
                    observer: j,
                    replicate: k,
                    value: grid.value(i, j, k) - reference,
                });
            }
        }
    }
    DifferenceSeries { kind, differences }
}
