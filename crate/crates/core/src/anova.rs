//! Two-way random-effects ANOVA with interaction and the method-of-moments
//! variance-component estimators.
//!
//! | source | df            | SS                                   | E[MS]                     |
//! |--------|---------------|--------------------------------------|---------------------------|
//! | A      | a-1           | bc Σ_i (Ȳi.. - Ȳ...)²                | bc s2_A + c s2_AB + s2_E  |
//! | B      | b-1           | ac Σ_j (Ȳ.j. - Ȳ...)²                | ac s2_B + c s2_AB + s2_E  |
//! | AB     | (a-1)(b-1)    | c Σ_ij (Ȳij. - Ȳ...)² - SSA - SSB    | c s2_AB + s2_E            |
//! | E      | ab(c-1)       | Σ_ijk (Yijk - Ȳij.)²                 | s2_E                      |
//!
//! All sums of squares are computed in two passes (means first, then squared
//! deviations).

use alloc::vec::Vec;

use crate::design::{Design, MeasurementGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AnovaDecomposition {
    pub design: Design,
    pub ss_a: f64,
    pub ss_b: f64,
    pub ss_ab: f64,
    pub ss_e: f64,
    pub df_a: usize,
    pub df_b: usize,
    pub df_ab: usize,
    pub df_e: usize,
    pub ms_a: f64,
    pub ms_b: f64,
    pub ms_ab: f64,
    pub ms_e: f64,
}

impl AnovaDecomposition {
    /// Fills degrees of freedom and mean squares from the four sums of squares.
    pub fn from_sums(design: Design, ss_a: f64, ss_b: f64, ss_ab: f64, ss_e: f64) -> Self {
        let (df_a, df_b, df_ab, df_e) =
            (design.df_a(), design.df_b(), design.df_ab(), design.df_e());
        Self {
            design,
            ss_a,
            ss_b,
            ss_ab,
            ss_e,
            df_a,
            df_b,
            df_ab,
            df_e,
            ms_a: ss_a / df_a as f64,
            ms_b: ss_b / df_b as f64,
            ms_ab: ss_ab / df_ab as f64,
            ms_e: ss_e / df_e as f64,
        }
    }

    pub fn ss_total(&self) -> f64 {
        self.ss_a + self.ss_b + self.ss_ab + self.ss_e
    }
}

/// Computes the ANOVA table of a balanced grid.
pub fn decompose(grid: &MeasurementGrid) -> AnovaDecomposition {
    decompose_values(grid.design(), grid.values())
}

/// Same as [`decompose`] on subject-major values; `values.len()` must be `abc`.
pub(crate) fn decompose_values(design: Design, values: &[f64]) -> AnovaDecomposition {
    let (a, b, c) = (design.a(), design.b(), design.c());
    debug_assert_eq!(values.len(), design.n());
    let cell = |i: usize, j: usize| &values[(i * b + j) * c..(i * b + j + 1) * c];

    let cell_means: Vec<f64> = (0..a * b)
        .map(|ij| values[ij * c..(ij + 1) * c].iter().sum::<f64>() / c as f64)
        .collect();
    let grand = values.iter().sum::<f64>() / values.len() as f64;
    let subject_means: Vec<f64> = (0..a)
        .map(|i| values[i * b * c..(i + 1) * b * c].iter().sum::<f64>() / (b * c) as f64)
        .collect();
    let observer_means: Vec<f64> = (0..b)
        .map(|j| (0..a).flat_map(|i| cell(i, j)).sum::<f64>() / (a * c) as f64)
        .collect();

    let ss_a = (b * c) as f64 * subject_means.iter().map(|m| sq(m - grand)).sum::<f64>();
    let ss_b = (a * c) as f64 * observer_means.iter().map(|m| sq(m - grand)).sum::<f64>();

    // Interaction residuals Ȳij. - Ȳi.. - Ȳ.j. + Ȳ...; in a balanced design
    // c·Σ of their squares equals c·Σ(Ȳij. - Ȳ...)² - SSA - SSB without the
    // subtraction, so the result is never negative.
    let mut ss_ab = 0.0;
    let mut ss_e = 0.0;
    for i in 0..a {
        for j in 0..b {
            let m = cell_means[i * b + j];
            ss_ab += sq(m - subject_means[i] - observer_means[j] + grand);
            ss_e += cell(i, j).iter().map(|y| sq(y - m)).sum::<f64>();
        }
    }
    ss_ab *= c as f64;

    AnovaDecomposition::from_sums(design, ss_a, ss_b, ss_ab, ss_e)
}

/// `Σ (Y - Ȳ...)²` over the whole grid.
pub fn total_sum_of_squares(grid: &MeasurementGrid) -> f64 {
    let grand = grid.grand_mean();
    grid.values().iter().map(|y| sq(y - grand)).sum()
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// ANOVA estimates of the four variance components.
///
/// The `*_raw` fields may be negative; the plain fields are truncated at zero
/// and the matching `*_truncated` flag records when that happened.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VarianceComponents {
    pub sigma2_a_raw: f64,
    pub sigma2_b_raw: f64,
    pub sigma2_ab_raw: f64,
    pub sigma2_e: f64,
    pub sigma2_a: f64,
    pub sigma2_b: f64,
    pub sigma2_ab: f64,
    pub a_truncated: bool,
    pub b_truncated: bool,
    pub ab_truncated: bool,
}

pub fn estimate_components(anova: &AnovaDecomposition) -> VarianceComponents {
    let d = anova.design;
    let (a, b, c) = (d.a() as f64, d.b() as f64, d.c() as f64);
    let sigma2_a_raw = (anova.ms_a - anova.ms_ab) / (b * c);
    let sigma2_b_raw = (anova.ms_b - anova.ms_ab) / (a * c);
    let sigma2_ab_raw = (anova.ms_ab - anova.ms_e) / c;
    VarianceComponents {
        sigma2_a_raw,
        sigma2_b_raw,
        sigma2_ab_raw,
        sigma2_e: anova.ms_e,
        sigma2_a: sigma2_a_raw.max(0.0),
        sigma2_b: sigma2_b_raw.max(0.0),
        sigma2_ab: sigma2_ab_raw.max(0.0),
        a_truncated: sigma2_a_raw < 0.0,
        b_truncated: sigma2_b_raw < 0.0,
        ab_truncated: sigma2_ab_raw < 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::tests::{table3_ct, TABLE3_CT};
    use crate::design::{ingest_long, MeasurementGrid};
    use proptest::prelude::*;

    /// Textbook sums of squares by explicit index loops over every pair of
    /// points (O(N²)), sharing no code with `decompose`.
    fn brute_force(grid: &MeasurementGrid) -> [f64; 5] {
        let d = grid.design();
        let (a, b, c) = (d.a(), d.b(), d.c());
        let n = d.n() as f64;
        type Cell = (usize, usize, f64);
        let all: Vec<Cell> = (0..a)
            .flat_map(|i| (0..b).flat_map(move |j| (0..c).map(move |k| (i, j, k))))
            .map(|(i, j, k)| (i, j, grid.value(i, j, k)))
            .collect();
        // Σ_{p<q}(y_p - y_q)² / n = Σ(y - ȳ)² over any group; apply per group.
        let pair_ss = |pred: &dyn Fn(&Cell, &Cell) -> bool, size: f64| {
            let mut s = 0.0;
            for p in &all {
                for q in &all {
                    if pred(p, q) {
                        s += (p.2 - q.2) * (p.2 - q.2);
                    }
                }
            }
            s / (2.0 * size)
        };
        let sst = pair_ss(&|_, _| true, n);
        let within_subject = pair_ss(&|p, q| p.0 == q.0, (b * c) as f64);
        let within_observer = pair_ss(&|p, q| p.1 == q.1, (a * c) as f64);
        let sse = pair_ss(&|p, q| p.0 == q.0 && p.1 == q.1, c as f64);
        let ssa = sst - within_subject;
        let ssb = sst - within_observer;
        let cells_ss = sst - sse;
        let ssab = cells_ss - ssa - ssb;
        [ssa, ssb, ssab, sse, sst]
    }

    #[test]
    fn table3_ct_sums_of_squares() {
        let anova = decompose(&table3_ct());
        assert!((anova.ss_a - 81.92).abs() < 1e-9);
        assert!((anova.ss_b - 0.18).abs() < 1e-9);
        assert!((anova.ss_ab - 0.845).abs() < 1e-9);
        assert!((anova.ss_e - 0.05).abs() < 1e-9);
        assert_eq!(
            (anova.df_a, anova.df_b, anova.df_ab, anova.df_e),
            (1, 1, 1, 4)
        );
        let brute = brute_force(&table3_ct());
        assert!((brute[3] - 0.05).abs() < 1e-9);
    }

    #[test]
    fn constant_grid_has_zero_sums() {
        let g = ingest_long(&crate::design::tests::long_2x2x2(&[7.25; 8])).unwrap();
        let anova = decompose(&g);
        assert_eq!([anova.ss_a, anova.ss_b, anova.ss_ab, anova.ss_e], [0.0; 4]);
    }

    #[test]
    fn equal_replicates_give_exact_zero_sse() {
        let vals = [1.3, 1.3, 2.9, 2.9, -0.7, -0.7, 4.1, 4.1];
        let g = ingest_long(&crate::design::tests::long_2x2x2(&vals)).unwrap();
        assert_eq!(decompose(&g).ss_e, 0.0);
    }

    #[test]
    fn table3_components() {
        let v = estimate_components(&decompose(&table3_ct()));
        assert!((v.sigma2_e - 0.0125).abs() < 1e-12);
        // MSA = 81.92, MSAB = 0.845, bc = 4
        assert!((v.sigma2_a_raw - (81.92 - 0.845) / 4.0).abs() < 1e-9);
        // MSB = 0.18 < MSAB: raw negative, truncated to zero
        assert!(v.sigma2_b_raw < 0.0 && v.sigma2_b == 0.0 && v.b_truncated);
        assert!(!v.a_truncated);
    }

    #[test]
    fn equal_mean_squares_give_zero_component() {
        let d = Design::new(3, 3, 2).unwrap();
        // MSB = MSAB = 2
        let anova = AnovaDecomposition::from_sums(d, 1.0, 4.0, 8.0, 1.0);
        let v = estimate_components(&anova);
        assert_eq!(v.sigma2_b_raw, 0.0);
        assert!(!v.b_truncated);
    }

    #[test]
    fn sums_identity_holds_on_table3() {
        let g = table3_ct();
        let anova = decompose(&g);
        let sst = total_sum_of_squares(&g);
        assert!((anova.ss_total() - sst).abs() <= 1e-10 * sst);
        let _ = TABLE3_CT;
    }

    fn arb_grid(max: usize) -> impl Strategy<Value = MeasurementGrid> {
        (2..=max, 2..=max, 2..=max, -1e3f64..1e3).prop_flat_map(|(a, b, c, shift)| {
            proptest::collection::vec(-50.0f64..50.0, a * b * c).prop_map(move |vals| {
                let d = Design::new(a, b, c).unwrap();
                MeasurementGrid::with_default_labels(d, vals.iter().map(|v| v + shift).collect())
                    .unwrap()
            })
        })
    }

    fn close(x: f64, y: f64, scale: f64, tol: f64) -> bool {
        (x - y).abs() <= tol * scale.max(f64::MIN_POSITIVE)
    }

    proptest! {
        #[test]
        fn matches_brute_force(g in arb_grid(4)) {
            let anova = decompose(&g);
            let [ssa, ssb, ssab, sse, sst] = brute_force(&g);
            prop_assert!(close(anova.ss_a, ssa, sst, 1e-10));
            prop_assert!(close(anova.ss_b, ssb, sst, 1e-10));
            prop_assert!(close(anova.ss_ab, ssab, sst, 1e-10));
            prop_assert!(close(anova.ss_e, sse, sst, 1e-10));
            prop_assert!(close(anova.ss_total(), total_sum_of_squares(&g), sst, 1e-10));
        }

        #[test]
        fn scale_equivariant_and_shift_invariant(g in arb_grid(5), s in 0.1f64..10.0, t in -1e4f64..1e4) {
            let base = decompose(&g);
            let scaled = decompose(&g.map_values(|v| v * s).unwrap());
            let shifted = decompose(&g.map_values(|v| v + t).unwrap());
            let sst = base.ss_total();
            for (x, y, z) in [
                (base.ss_a, scaled.ss_a, shifted.ss_a),
                (base.ss_b, scaled.ss_b, shifted.ss_b),
                (base.ss_ab, scaled.ss_ab, shifted.ss_ab),
                (base.ss_e, scaled.ss_e, shifted.ss_e),
            ] {
                prop_assert!(close(y, x * s * s, sst * s * s, 1e-10));
                // shifting by up to 1e4 costs about log10(1e4 / spread) digits
                prop_assert!(close(z, x, sst, 1e-8));
            }
            let vb = estimate_components(&base);
            let vs = estimate_components(&scaled);
            prop_assert!(close(vs.sigma2_a_raw, vb.sigma2_a_raw * s * s, sst * s * s, 1e-10));
            prop_assert!(close(vs.sigma2_e, vb.sigma2_e * s * s, sst * s * s, 1e-10));
        }

        #[test]
        fn grand_mean_agrees_with_marginal_means(g in arb_grid(6)) {
            let gm = g.grand_mean();
            let subj = crate::design::mean(&g.subject_means());
            let obs = crate::design::mean(&g.observer_means());
            let cells: Vec<f64> = g.cell_means().into_iter().flatten().collect();
            let cm = crate::design::mean(&cells);
            let scale = gm.abs().max(1.0);
            for m in [subj, obs, cm] {
                prop_assert!((m - gm).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn subject_order_does_not_matter(g in arb_grid(5), seed in any::<u64>()) {
            let a = g.design().a();
            let mut order: Vec<usize> = (0..a).collect();
            // Fisher-Yates from a simple LCG so the test needs no RNG crate
            let mut s = seed;
            for i in (1..a).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (s >> 33) as usize % (i + 1));
            }
            let p = g.select_subjects(&order).unwrap();
            let (x, y) = (decompose(&g), decompose(&p));
            let sst = x.ss_total();
            for (u, v) in [(x.ss_a, y.ss_a), (x.ss_b, y.ss_b), (x.ss_ab, y.ss_ab), (x.ss_e, y.ss_e)] {
                prop_assert!(close(u, v, sst, 1e-12));
            }
        }
    }
}
