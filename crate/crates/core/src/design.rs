//! Study design, the balanced measurement grid and long-format ingestion.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Balanced design: `a` subjects, `b` observers, `c` replicates per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Design {
    a: usize,
    b: usize,
    c: usize,
}

impl Design {
    /// Every dimension must exceed one.
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a <= 1 || b <= 1 || c <= 1 {
            return Err(Error::DegenerateDesign { a, b, c });
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn c(&self) -> usize {
        self.c
    }

    /// Total number of measurements `abc`.
    pub fn n(&self) -> usize {
        self.a * self.b * self.c
    }

    pub fn df_a(&self) -> usize {
        self.a - 1
    }

    pub fn df_b(&self) -> usize {
        self.b - 1
    }

    pub fn df_ab(&self) -> usize {
        (self.a - 1) * (self.b - 1)
    }

    pub fn df_e(&self) -> usize {
        self.a * self.b * (self.c - 1)
    }
}

/// One row of long-format input.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LongRecord {
    pub subject: String,
    pub observer: String,
    /// 1-based replicate index within the subject/observer cell.
    pub replicate: u32,
    pub value: f64,
}

impl LongRecord {
    pub fn new(
        subject: impl Into<String>,
        observer: impl Into<String>,
        replicate: u32,
        value: f64,
    ) -> Self {
        Self {
            subject: subject.into(),
            observer: observer.into(),
            replicate,
            value,
        }
    }
}

/// Complete `a x b x c` array of measurements with axis labels.
///
/// Values are stored subject-major: index `(i * b + j) * c + k`. The grid is
/// immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGrid {
    design: Design,
    values: Vec<f64>,
    subject_labels: Vec<String>,
    observer_labels: Vec<String>,
}

impl MeasurementGrid {
    pub fn new(
        design: Design,
        values: Vec<f64>,
        subject_labels: Vec<String>,
        observer_labels: Vec<String>,
    ) -> Result<Self> {
        if values.len() != design.n() {
            return Err(Error::ShapeMismatch {
                expected: design.n(),
                found: values.len(),
            });
        }
        if subject_labels.len() != design.a() {
            return Err(Error::ShapeMismatch {
                expected: design.a(),
                found: subject_labels.len(),
            });
        }
        if observer_labels.len() != design.b() {
            return Err(Error::ShapeMismatch {
                expected: design.b(),
                found: observer_labels.len(),
            });
        }
        check_unique("subject", &subject_labels)?;
        check_unique("observer", &observer_labels)?;
        let (b, c) = (design.b(), design.c());
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                subject: subject_labels[pos / (b * c)].clone(),
                observer: observer_labels[(pos / c) % b].clone(),
                replicate: (pos % c) as u32 + 1,
            });
        }
        Ok(Self {
            design,
            values,
            subject_labels,
            observer_labels,
        })
    }

    /// Grid with labels `S1..Sa` and `O1..Ob`.
    pub fn with_default_labels(design: Design, values: Vec<f64>) -> Result<Self> {
        let subjects = (1..=design.a()).map(|i| format!("S{i}")).collect();
        let observers = (1..=design.b()).map(|j| format!("O{j}")).collect();
        Self::new(design, values, subjects, observers)
    }

    pub fn design(&self) -> Design {
        self.design
    }

    /// All values in subject-major order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn subject_labels(&self) -> &[String] {
        &self.subject_labels
    }

    pub fn observer_labels(&self) -> &[String] {
        &self.observer_labels
    }

    /// Measurement of subject `i`, observer `j`, replicate `k` (all 0-based).
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        let (b, c) = (self.design.b(), self.design.c());
        self.values[(i * b + j) * c + k]
    }

    /// The `c` replicates of one cell.
    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let (b, c) = (self.design.b(), self.design.c());
        let start = (i * b + j) * c;
        &self.values[start..start + c]
    }

    /// The `b * c` measurements of one subject.
    pub fn subject_block(&self, i: usize) -> &[f64] {
        let bc = self.design.b() * self.design.c();
        &self.values[i * bc..(i + 1) * bc]
    }

    /// Cell means as an `a x b` array.
    pub fn cell_means(&self) -> Vec<Vec<f64>> {
        let (a, b) = (self.design.a(), self.design.b());
        (0..a)
            .map(|i| (0..b).map(|j| mean(self.cell(i, j))).collect())
            .collect()
    }

    pub fn subject_means(&self) -> Vec<f64> {
        (0..self.design.a())
            .map(|i| mean(self.subject_block(i)))
            .collect()
    }

    pub fn observer_means(&self) -> Vec<f64> {
        let Design { a, b, c } = self.design;
        (0..b)
            .map(|j| {
                let sum: f64 = (0..a).flat_map(|i| self.cell(i, j)).sum();
                sum / (a * c) as f64
            })
            .collect()
    }

    pub fn grand_mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Serializes to long records, subject-major, replicates numbered from 1.
    pub fn to_long(&self) -> Vec<LongRecord> {
        let Design { a, b, c } = self.design;
        let mut out = Vec::with_capacity(self.design.n());
        for i in 0..a {
            for j in 0..b {
                for k in 0..c {
                    out.push(LongRecord::new(
                        self.subject_labels[i].clone(),
                        self.observer_labels[j].clone(),
                        k as u32 + 1,
                        self.value(i, j, k),
                    ));
                }
            }
        }
        out
    }

    /// Builds a grid from the listed subjects (repeats allowed), giving each
    /// drawn copy a fresh label `<original>#<position>`.
    pub fn select_subjects(&self, indices: &[usize]) -> Result<Self> {
        let a = indices.len();
        let design = Design::new(a, self.design.b(), self.design.c())?;
        let mut values = Vec::with_capacity(design.n());
        let mut labels = Vec::with_capacity(a);
        for (pos, &i) in indices.iter().enumerate() {
            if i >= self.design.a() {
                return Err(Error::Domain("subject index out of range"));
            }
            values.extend_from_slice(self.subject_block(i));
            labels.push(format!("{}#{}", self.subject_labels[i], pos + 1));
        }
        Ok(Self {
            design,
            values,
            subject_labels: labels,
            observer_labels: self.observer_labels.clone(),
        })
    }

    /// Same data with every value mapped through `f`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.design,
            self.values.iter().map(|&v| f(v)).collect(),
            self.subject_labels.clone(),
            self.observer_labels.clone(),
        )
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn check_unique(axis: &'static str, labels: &[String]) -> Result<()> {
    let mut seen = BTreeMap::new();
    for l in labels {
        if seen.insert(l.as_str(), ()).is_some() {
            return Err(Error::DuplicateLabel {
                axis,
                label: l.clone(),
            });
        }
    }
    Ok(())
}

/// Groups long records into a balanced grid.
///
/// Subjects and observers are ordered by first appearance; replicates by
/// their index, which must run exactly `1..=c` in every cell.
pub fn ingest_long(records: &[LongRecord]) -> Result<MeasurementGrid> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut subjects: Vec<&str> = Vec::new();
    let mut subject_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut observers: Vec<&str> = Vec::new();
    let mut observer_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut cells: BTreeMap<(usize, usize), BTreeMap<u32, f64>> = BTreeMap::new();

    for r in records {
        if !r.value.is_finite() {
            return Err(Error::NonFiniteValue {
                subject: r.subject.clone(),
                observer: r.observer.clone(),
                replicate: r.replicate,
            });
        }
        let i = *subject_index.entry(&r.subject).or_insert_with(|| {
            subjects.push(&r.subject);
            subjects.len() - 1
        });
        let j = *observer_index.entry(&r.observer).or_insert_with(|| {
            observers.push(&r.observer);
            observers.len() - 1
        });
        if cells
            .entry((i, j))
            .or_default()
            .insert(r.replicate, r.value)
            .is_some()
        {
            return Err(Error::DuplicateCell {
                subject: r.subject.clone(),
                observer: r.observer.clone(),
                replicate: r.replicate,
            });
        }
    }

    let (a, b) = (subjects.len(), observers.len());
    let c = cells.values().map(|cell| cell.len()).max().unwrap_or(0);
    if a <= 1 || b <= 1 || c <= 1 {
        return Err(Error::DegenerateDesign { a, b, c });
    }
    let design = Design::new(a, b, c)?;

    let mut values = Vec::with_capacity(design.n());
    for (i, subject) in subjects.iter().enumerate() {
        for (j, observer) in observers.iter().enumerate() {
            let unbalanced = |detail: String| Error::UnbalancedDesign {
                subject: subject.to_string(),
                observer: observer.to_string(),
                detail,
            };
            let cell = cells
                .get(&(i, j))
                .ok_or_else(|| unbalanced("cell has no measurements".to_string()))?;
            if cell.len() != c {
                return Err(unbalanced(format!(
                    "expected {c} replicates, found {}",
                    cell.len()
                )));
            }
            for (expected, (&k, &v)) in (1u32..).zip(cell.iter()) {
                if k != expected {
                    return Err(unbalanced(format!(
                        "replicate indices must be 1..={c}, found {k}"
                    )));
                }
                values.push(v);
            }
        }
    }

    MeasurementGrid::new(
        design,
        values,
        subjects.into_iter().map(String::from).collect(),
        observers.into_iter().map(String::from).collect(),
    )
}
