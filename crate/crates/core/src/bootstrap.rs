//! Subject-level bootstrap comparison of two measurement methods.
//!
//! Both methods are measured on the same subjects, by the same observers,
//! with the same number of replicates. A resample draws `a` subjects with
//! replacement and carries each drawn subject's whole `b x c` block from
//! *both* grids, so the pairing between methods and the nesting of
//! replicates within subject/observer cells survive resampling. Repeated
//! draws of one subject become distinct subjects of the resample.
//!
//! The statistic is the difference of the positive LOAM limits,
//! `limit_X - limit_Y`. Resample `r` uses [`crate::rng::stream`]`(seed, r)`,
//! so results do not depend on how resamples are scheduled.
//!
//! The p-value is two-sided under the shifted null: bootstrap differences are
//! recentred at zero and compared with the observed difference,
//!
//! ```text
//! p = min(1, 2 min(q_hi, q_lo)),
//! q_hi = (1 + #{d* - mean(d*) >= obs}) / (R + 1),
//! q_lo = (1 + #{d* - mean(d*) <= obs}) / (R + 1).
//! ```
//!
//! The percentile interval of the raw bootstrap differences is reported
//! alongside; `0` outside it signals a difference at the 5% level.

use alloc::vec::Vec;

use rand::Rng;

use crate::anova::{decompose, decompose_values, AnovaDecomposition};
use crate::design::MeasurementGrid;
use crate::error::{Error, Result};
use crate::loam::{loam, LoamKind, DEFAULT_Z};
use crate::math;
use crate::rng;

/// The same subjects, observers and replicates measured by two methods.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedStudy {
    x: MeasurementGrid,
    y: MeasurementGrid,
}

impl PairedStudy {
    pub fn new(x: MeasurementGrid, y: MeasurementGrid) -> Result<Self> {
        if x.design() != y.design() {
            return Err(Error::MismatchedDesigns(alloc::format!(
                "designs {:?} and {:?}",
                x.design(),
                y.design()
            )));
        }
        if x.subject_labels() != y.subject_labels() {
            return Err(Error::MismatchedDesigns("subject labels differ".into()));
        }
        if x.observer_labels() != y.observer_labels() {
            return Err(Error::MismatchedDesigns("observer labels differ".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &MeasurementGrid {
        &self.x
    }

    pub fn y(&self) -> &MeasurementGrid {
        &self.y
    }

    /// Both grids restricted to the listed subjects, in lockstep.
    pub fn select_subjects(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self {
            x: self.x.select_subjects(indices)?,
            y: self.y.select_subjects(indices)?,
        })
    }
}

/// `a` subject indices drawn uniformly with replacement.
pub fn draw_subjects(a: usize, rng: &mut impl rand::RngCore) -> Vec<usize> {
    (0..a)
        .map(|_| rng.random_range(0..a as u64) as usize)
        .collect()
}

/// One subject-level resample of a paired study.
pub fn resample_subjects(study: &PairedStudy, rng: &mut impl rand::RngCore) -> PairedStudy {
    let indices = draw_subjects(study.x.design().a(), rng);
    study
        .select_subjects(&indices)
        .expect("drawn indices are in range and keep the design")
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapConfig {
    pub kind: LoamKind,
    pub n_resamples: usize,
    pub seed: u64,
    pub z: f64,
}

impl BootstrapConfig {
    pub fn new(kind: LoamKind, n_resamples: usize, seed: u64) -> Self {
        Self {
            kind,
            n_resamples,
            seed,
            z: DEFAULT_Z,
        }
    }

    /// Rejects runs with fewer than 100 resamples or a non-finite `z`.
    pub fn validate(&self) -> Result<()> {
        if self.n_resamples < 100 {
            return Err(Error::Domain(
                "at least 100 bootstrap resamples are required",
            ));
        }
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(Error::Domain("z must be positive and finite"));
        }
        Ok(())
    }

    /// Total draw budget, degenerate redraws included.
    pub fn max_draws(&self) -> u64 {
        10 * self.n_resamples as u64
    }
}

/// Outcome of one resample: the limit difference and how many draws it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleDraw {
    pub diff: f64,
    pub draws: u64,
}

/// Resample `index` of a bootstrap run.
///
/// A resample in which either grid has zero total sum of squares is redrawn
/// from the same stream, up to the run's total draw budget.
pub fn resample_difference(
    study: &PairedStudy,
    config: &BootstrapConfig,
    index: u64,
) -> Result<ResampleDraw> {
    let design = study.x.design();
    let (a, block) = (design.a(), design.b() * design.c());
    let mut rng = rng::stream(config.seed, index);
    let mut xs = Vec::with_capacity(design.n());
    let mut ys = Vec::with_capacity(design.n());
    let mut draws = 0u64;
    loop {
        draws += 1;
        if draws > config.max_draws() {
            return Err(Error::DegenerateResample {
                attempts: draws - 1,
            });
        }
        xs.clear();
        ys.clear();
        for _ in 0..a {
            let i = rng.random_range(0..a as u64) as usize;
            xs.extend_from_slice(&study.x.values()[i * block..(i + 1) * block]);
            ys.extend_from_slice(&study.y.values()[i * block..(i + 1) * block]);
        }
        let ax = decompose_values(design, &xs);
        let ay = decompose_values(design, &ys);
        if ax.ss_total() == 0.0 || ay.ss_total() == 0.0 {
            continue;
        }
        return Ok(ResampleDraw {
            diff: limit_difference(&ax, &ay, config),
            draws,
        });
    }
}

fn limit_difference(
    x: &AnovaDecomposition,
    y: &AnovaDecomposition,
    config: &BootstrapConfig,
) -> f64 {
    loam(x, config.kind, config.z).limit - loam(y, config.kind, config.z).limit
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BootstrapSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub p2_5: f64,
    pub p50: f64,
    pub p97_5: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ComparisonResult {
    pub kind: LoamKind,
    pub z: f64,
    pub limit_x: f64,
    pub limit_y: f64,
    /// `limit_x - limit_y` on the full data.
    pub observed_diff: f64,
    pub boot_diffs: BootstrapSummary,
    pub p_value: f64,
    /// 2.5% and 97.5% percentiles of the bootstrap differences.
    pub ci_95: (f64, f64),
    pub n_resamples: usize,
    pub seed: u64,
    /// Draws discarded because a resampled grid had no variation.
    pub degenerate_redraws: u64,
}

impl ComparisonResult {
    /// Zero lies outside the percentile interval.
    pub fn ci_excludes_zero(&self) -> bool {
        self.ci_95.0 > 0.0 || self.ci_95.1 < 0.0
    }
}

/// Serial bootstrap comparison.
pub fn bootstrap_compare(
    study: &PairedStudy,
    config: &BootstrapConfig,
) -> Result<ComparisonResult> {
    config.validate()?;
    let draws = (0..config.n_resamples as u64)
        .map(|r| resample_difference(study, config, r))
        .collect::<Result<Vec<_>>>()?;
    summarize(study, config, &draws)
}

/// Reduces per-resample draws, given in resample-index order, to a result.
///
/// Parallel drivers compute [`resample_difference`] for each index however
/// they like and hand the ordered results here.
pub fn summarize(
    study: &PairedStudy,
    config: &BootstrapConfig,
    draws: &[ResampleDraw],
) -> Result<ComparisonResult> {
    config.validate()?;
    if draws.len() != config.n_resamples {
        return Err(Error::ShapeMismatch {
            expected: config.n_resamples,
            found: draws.len(),
        });
    }
    let total_draws: u64 = draws.iter().map(|d| d.draws).sum();
    if total_draws > config.max_draws() {
        return Err(Error::DegenerateResample {
            attempts: total_draws,
        });
    }
    let ax = decompose(&study.x);
    let ay = decompose(&study.y);
    let limit_x = loam(&ax, config.kind, config.z).limit;
    let limit_y = loam(&ay, config.kind, config.z).limit;
    let observed = limit_x - limit_y;

    let mut diffs: Vec<f64> = draws.iter().map(|d| d.diff).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = math::sqrt(diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0));

    let (mut above, mut below) = (0usize, 0usize);
    for d in &diffs {
        let centred = d - mean;
        if centred >= observed {
            above += 1;
        }
        if centred <= observed {
            below += 1;
        }
    }
    let q_hi = (1 + above) as f64 / (n + 1.0);
    let q_lo = (1 + below) as f64 / (n + 1.0);
    let p_value = (2.0 * q_hi.min(q_lo)).min(1.0);

    diffs.sort_by(f64::total_cmp);
    let p2_5 = percentile(&diffs, 0.025);
    let p97_5 = percentile(&diffs, 0.975);
    Ok(ComparisonResult {
        kind: config.kind,
        z: config.z,
        limit_x,
        limit_y,
        observed_diff: observed,
        boot_diffs: BootstrapSummary {
            count: diffs.len(),
            mean,
            sd,
            p2_5,
            p50: percentile(&diffs, 0.5),
            p97_5,
        },
        p_value,
        ci_95: (p2_5, p97_5),
        n_resamples: config.n_resamples,
        seed: config.seed,
        degenerate_redraws: total_draws - draws.len() as u64,
    })
}

/// Linear interpolation between order statistics at `(n - 1) p`.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::tests::{long_2x2x2, table3_ct, TABLE3_MRI};
    use crate::design::{ingest_long, Design};
    use crate::loam::repeatability_loam;
    use crate::simulate::{simulate_indexed, ModelParams};

    fn table3_study() -> PairedStudy {
        PairedStudy::new(table3_ct(), ingest_long(&long_2x2x2(&TABLE3_MRI)).unwrap()).unwrap()
    }

    #[test]
    fn repeated_subject_copies_both_blocks() {
        let s = table3_study();
        let r = s.select_subjects(&[0, 0]).unwrap();
        assert_eq!(r.x().design(), s.x().design());
        for grid_pair in [(r.x(), s.x()), (r.y(), s.y())] {
            assert_eq!(grid_pair.0.subject_block(0), grid_pair.1.subject_block(0));
            assert_eq!(grid_pair.0.subject_block(1), grid_pair.1.subject_block(0));
        }
        assert_ne!(r.x().subject_labels()[0], r.x().subject_labels()[1]);
    }

    #[test]
    fn identity_draw_preserves_statistics() {
        let s = table3_study();
        let r = s.select_subjects(&[0, 1]).unwrap();
        assert_eq!(decompose(r.x()), decompose(s.x()));
        assert_eq!(decompose(r.y()), decompose(s.y()));
    }

    #[test]
    fn two_subject_mixed_draw_frequency() {
        let mut rng = rng::stream(5, 0);
        let mixed = (0..10_000)
            .filter(|_| {
                let d = draw_subjects(2, &mut rng);
                d[0] != d[1]
            })
            .count();
        let freq = mixed as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
    }

    #[test]
    fn resample_keeps_design() {
        let s = table3_study();
        let mut rng = rng::stream(1, 1);
        for _ in 0..50 {
            let r = resample_subjects(&s, &mut rng);
            assert_eq!(r.x().design(), s.x().design());
            assert_eq!(r.x().subject_labels(), r.y().subject_labels());
        }
    }

    #[test]
    fn mismatched_studies_rejected() {
        let d = Design::new(3, 2, 2).unwrap();
        let g = MeasurementGrid::with_default_labels(d, (0..12).map(f64::from).collect()).unwrap();
        let h = MeasurementGrid::with_default_labels(
            Design::new(2, 3, 2).unwrap(),
            (0..12).map(f64::from).collect(),
        )
        .unwrap();
        assert_eq!(
            PairedStudy::new(g, h).unwrap_err().name(),
            "MismatchedDesigns"
        );
    }

    fn sim_study(a: usize, scale_y: f64, seed: u64) -> PairedStudy {
        let p = ModelParams::new(10.0, 1.5, 0.8, 0.4, 0.6).unwrap();
        let d = Design::new(a, 4, 2).unwrap();
        let x = simulate_indexed(&p, d, seed, 0);
        let y = x.map_values(|v| v * scale_y).unwrap();
        PairedStudy::new(x, y).unwrap()
    }

    #[test]
    fn identical_methods() {
        let s = sim_study(20, 1.0, 3);
        for kind in [LoamKind::Reproducibility, LoamKind::Repeatability] {
            let r = bootstrap_compare(&s, &BootstrapConfig::new(kind, 500, 9)).unwrap();
            assert_eq!(r.observed_diff, 0.0);
            assert!(r.p_value > 0.5);
            assert!(!r.ci_excludes_zero());
            assert_eq!(
                (r.boot_diffs.p2_5, r.boot_diffs.p97_5, r.boot_diffs.sd),
                (0.0, 0.0, 0.0)
            );
        }
    }

    #[test]
    fn doubled_scale_is_detected() {
        let s = sim_study(60, 2.0, 4);
        let r = bootstrap_compare(
            &s,
            &BootstrapConfig::new(LoamKind::Reproducibility, 1000, 1),
        )
        .unwrap();
        assert!((r.observed_diff + r.limit_x).abs() < 1e-12 * r.limit_x);
        assert!(r.ci_excludes_zero());
        assert!(r.p_value < 0.05);
    }

    #[test]
    fn deterministic_and_schedule_free() {
        let s = sim_study(15, 1.3, 5);
        let cfg = BootstrapConfig::new(LoamKind::Repeatability, 200, 77);
        let a = bootstrap_compare(&s, &cfg).unwrap();
        let b = bootstrap_compare(&s, &cfg).unwrap();
        assert_eq!(a, b);
        // computing resamples in reverse order changes nothing
        let mut draws: Vec<_> = (0..200u64)
            .rev()
            .map(|r| resample_difference(&s, &cfg, r).unwrap())
            .collect();
        draws.reverse();
        assert_eq!(summarize(&s, &cfg, &draws).unwrap(), a);
    }

    #[test]
    fn observed_limits_reproducible() {
        let s = table3_study();
        let r =
            bootstrap_compare(&s, &BootstrapConfig::new(LoamKind::Repeatability, 100, 0)).unwrap();
        assert_eq!(
            r.limit_x,
            repeatability_loam(&decompose(s.x()), DEFAULT_Z).limit
        );
        assert!((r.limit_x - 0.154_951_605_348_251_7).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&r.p_value));
        assert!(r.ci_95.0 <= r.ci_95.1);
    }

    #[test]
    fn too_few_resamples() {
        let s = table3_study();
        assert!(
            bootstrap_compare(&s, &BootstrapConfig::new(LoamKind::Repeatability, 99, 0)).is_err()
        );
    }

    #[test]
    fn constant_study_exhausts_budget() {
        let g = ingest_long(&long_2x2x2(&[1.0; 8])).unwrap();
        let s = PairedStudy::new(g.clone(), g).unwrap();
        let err = bootstrap_compare(&s, &BootstrapConfig::new(LoamKind::Repeatability, 100, 0))
            .unwrap_err();
        assert_eq!(err.name(), "DegenerateResample");
    }

    #[test]
    fn percentile_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&xs, 0.5), 2.0);
        assert_eq!(percentile(&xs, 0.025), 0.1);
        assert_eq!(percentile(&xs, 1.0), 4.0);
    }
}
