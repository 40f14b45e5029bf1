//! Data generation from the two-way random-effects model with interaction.
//!
//! Draw order for one dataset, all from a single [`crate::rng`] stream:
//! `A_1..A_a`, `B_1..B_b`, `(AB)_ij` subject-major, then `E_ijk`
//! subject-major. Each standard normal variate is `Φ⁻¹(U)` with `U` from
//! [`crate::rng::open_unit`], so a seed fixes the grid bit for bit.

use alloc::vec::Vec;

use crate::design::{Design, MeasurementGrid};
use crate::error::{Error, Result};
use crate::loam::DifferenceKind;
use crate::math;
use crate::quantile;
use crate::rng::{self, open_unit};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub mu: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub sigma_ab: f64,
    pub sigma_e: f64,
}

impl ModelParams {
    pub fn new(mu: f64, sigma_a: f64, sigma_b: f64, sigma_ab: f64, sigma_e: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::Domain("mu must be finite"));
        }
        for s in [sigma_a, sigma_b, sigma_ab] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Domain("standard deviations must be non-negative"));
            }
        }
        if !(sigma_e > 0.0 && sigma_e.is_finite()) {
            return Err(Error::Domain("sigma_e must be positive"));
        }
        Ok(Self {
            mu,
            sigma_a,
            sigma_b,
            sigma_ab,
            sigma_e,
        })
    }
}

/// Population limits implied by the model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrueLoam {
    pub reproducibility_limit: f64,
    pub repeatability_limit: f64,
}

/// Population variance of `Y_ijk - Ȳi..`.
pub fn subject_difference_variance(params: &ModelParams, design: &Design) -> f64 {
    let (b, c) = (design.b() as f64, design.c() as f64);
    (b - 1.0) / b * (sq(params.sigma_b) + sq(params.sigma_ab))
        + (b * c - 1.0) / (b * c) * sq(params.sigma_e)
}

/// Population variance of `Y_ijk - Ȳij.`.
pub fn cell_difference_variance(params: &ModelParams, design: &Design) -> f64 {
    let c = design.c() as f64;
    (c - 1.0) / c * sq(params.sigma_e)
}

pub fn true_loam(params: &ModelParams, design: &Design, z: f64) -> TrueLoam {
    TrueLoam {
        reproducibility_limit: z * math::sqrt(subject_difference_variance(params, design)),
        repeatability_limit: z * math::sqrt(cell_difference_variance(params, design)),
    }
}

/// Standard normal variate by inversion.
pub fn standard_normal(rng: &mut impl rand::RngCore) -> f64 {
    // open_unit never returns 0 or 1, so the quantile is always defined
    quantile::normal_quantile(open_unit(rng)).unwrap_or(0.0)
}

/// One dataset from the model, driven by the caller's generator.
pub fn simulate_with(
    params: &ModelParams,
    design: Design,
    rng: &mut impl rand::RngCore,
) -> MeasurementGrid {
    let (a, b, c) = (design.a(), design.b(), design.c());
    let subject: Vec<f64> = (0..a)
        .map(|_| params.sigma_a * standard_normal(rng))
        .collect();
    let observer: Vec<f64> = (0..b)
        .map(|_| params.sigma_b * standard_normal(rng))
        .collect();
    let interaction: Vec<f64> = (0..a * b)
        .map(|_| params.sigma_ab * standard_normal(rng))
        .collect();
    let mut values = Vec::with_capacity(design.n());
    for i in 0..a {
        for j in 0..b {
            let cell = params.mu + subject[i] + observer[j] + interaction[i * b + j];
            for _ in 0..c {
                values.push(cell + params.sigma_e * standard_normal(rng));
            }
        }
    }
    MeasurementGrid::with_default_labels(design, values)
        .expect("simulated values are finite and labels unique")
}

/// Dataset `index` under `seed`; see [`crate::rng::stream`].
pub fn simulate_indexed(
    params: &ModelParams,
    design: Design,
    seed: u64,
    index: u64,
) -> MeasurementGrid {
    simulate_with(params, design, &mut rng::stream(seed, index))
}

/// One dataset from the model; identical inputs give identical grids.
pub fn simulate(params: &ModelParams, design: Design, seed: u64) -> MeasurementGrid {
    simulate_indexed(params, design, seed, 0)
}

/// Pooled variance estimate of a difference series and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceCheck {
    pub variance: f64,
    /// Standard error across simulated datasets.
    pub standard_error: f64,
    /// The closed-form value the estimate should approach.
    pub expected: f64,
}

impl VarianceCheck {
    /// Number of standard errors between estimate and closed form.
    pub fn z_score(&self) -> f64 {
        (self.variance - self.expected) / self.standard_error
    }
}

/// Mean of the squared per-datum differences pooled over `n_sims` datasets.
///
/// Every difference has expectation zero, so the mean square estimates
/// `Var(Y_ijk - Ȳi..)` or `Var(Y_ijk - Ȳij.)` without bias. Dataset `s` uses
/// stream `s` of `seed`.
pub fn empirical_variance_check(
    params: &ModelParams,
    design: Design,
    which: DifferenceKind,
    n_sims: usize,
    seed: u64,
) -> Result<VarianceCheck> {
    if n_sims < 1000 {
        return Err(Error::Domain("at least 1000 simulations are required"));
    }
    let per_dataset: Vec<f64> = (0..n_sims as u64)
        .map(|s| {
            let grid = simulate_indexed(params, design, seed, s);
            let series = crate::loam::difference_series(&grid, which);
            series.differences.iter().map(|d| sq(d.value)).sum::<f64>()
                / series.differences.len() as f64
        })
        .collect();
    let n = n_sims as f64;
    let variance = per_dataset.iter().sum::<f64>() / n;
    let spread = per_dataset.iter().map(|v| sq(v - variance)).sum::<f64>() / (n - 1.0);
    let expected = match which {
        DifferenceKind::ToSubjectMean => subject_difference_variance(params, &design),
        DifferenceKind::ToCellMean => cell_difference_variance(params, &design),
    };
    Ok(VarianceCheck {
        variance,
        standard_error: math::sqrt(spread / n),
        expected,
    })
}

fn sq(x: f64) -> f64 {
    x * x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anova::{decompose, estimate_components};
    use crate::loam::DEFAULT_Z;

    fn params(mu: f64, s: [f64; 4]) -> ModelParams {
        ModelParams::new(mu, s[0], s[1], s[2], s[3]).unwrap()
    }

    #[test]
    fn seed_determinism() {
        let p = params(3.0, [1.0, 0.5, 0.3, 0.2]);
        let d = Design::new(4, 3, 2).unwrap();
        let x = simulate(&p, d, 99);
        let y = simulate(&p, d, 99);
        let bits = |g: &MeasurementGrid| g.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&x), bits(&y));
        assert_ne!(bits(&x), bits(&simulate(&p, d, 100)));
    }

    #[test]
    fn pure_error_sample_variance() {
        let p = params(0.0, [0.0, 0.0, 0.0, 1.0]);
        let g = simulate(&p, Design::new(10, 10, 5).unwrap(), 2024);
        let m = g.grand_mean();
        let var = g.values().iter().map(|v| sq(v - m)).sum::<f64>() / 499.0;
        assert!((var - 1.0).abs() < 0.15, "{var}");
    }

    #[test]
    fn near_zero_noise_stays_at_mu() {
        let p = params(12.5, [0.0, 0.0, 0.0, 1e-12]);
        let g = simulate(&p, Design::new(5, 4, 3).unwrap(), 1);
        assert!(g.values().iter().all(|v| (v - 12.5).abs() < 1e-9));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ModelParams::new(0.0, -1.0, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn true_loam_closed_forms() {
        let p = params(0.0, [3.0, 0.0, 0.0, 1.0]);
        let t = true_loam(&p, &Design::new(5, 2, 2).unwrap(), DEFAULT_Z);
        assert!((t.reproducibility_limit - 1.96 * libm::sqrt(0.75)).abs() < 1e-12);
        assert!((t.repeatability_limit - 1.96 * libm::sqrt(0.5)).abs() < 1e-12);
        assert!((t.reproducibility_limit - 1.6974).abs() < 1e-4);
        assert!((t.repeatability_limit - 1.3859).abs() < 1e-4);

        let tiny = true_loam(
            &params(0.0, [0.0, 0.0, 0.0, 1e-300]),
            &Design::new(2, 2, 2).unwrap(),
            DEFAULT_Z,
        );
        assert!(tiny.reproducibility_limit < 1e-299 && tiny.repeatability_limit < 1e-299);
    }

    #[test]
    fn reproducibility_dominates_repeatability() {
        for (k, s) in [
            [0.1, 2.0, 0.0, 0.5],
            [1.0, 0.0, 0.0, 3.0],
            [0.0, 0.3, 0.9, 0.1],
        ]
        .iter()
        .enumerate()
        {
            let d = Design::new(3, 2 + k, 2 + k).unwrap();
            let t = true_loam(&params(0.0, *s), &d, DEFAULT_Z);
            assert!(t.reproducibility_limit >= t.repeatability_limit);
        }
    }

    #[test]
    fn anova_estimates_recover_truth() {
        // 200 datasets at a = b = 100, c = 3: mean of each estimator within
        // 3 empirical standard errors of (4, 1, 0.25, 0.09)
        let p = params(0.0, [2.0, 1.0, 0.5, 0.3]);
        let d = Design::new(100, 100, 3).unwrap();
        let truth = [4.0, 1.0, 0.25, 0.09];
        let draws: Vec<[f64; 4]> = (0..200)
            .map(|s| {
                let v = estimate_components(&decompose(&simulate_indexed(&p, d, 77, s)));
                [v.sigma2_a_raw, v.sigma2_b_raw, v.sigma2_ab_raw, v.sigma2_e]
            })
            .collect();
        for (k, &t) in truth.iter().enumerate() {
            let xs: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let m = xs.iter().sum::<f64>() / 200.0;
            let sd = libm::sqrt(xs.iter().map(|x| sq(x - m)).sum::<f64>() / 199.0);
            assert!(
                (m - t).abs() <= 3.0 * sd / libm::sqrt(200.0),
                "component {k}: {m} vs {t}"
            );
        }
    }

    #[test]
    fn variance_check_cell_mean_pure_error() {
        let p = params(0.0, [0.0, 0.0, 0.0, 1.0]);
        let d = Design::new(4, 3, 2).unwrap();
        let v = empirical_variance_check(&p, d, DifferenceKind::ToCellMean, 1000, 5).unwrap();
        assert_eq!(v.expected, 0.5);
        assert!(v.z_score().abs() < 3.0, "{v:?}");
        assert!(empirical_variance_check(&p, d, DifferenceKind::ToCellMean, 999, 5).is_err());
    }

    #[test]
    fn variance_check_subject_mean_two_observers() {
        let p = params(0.0, [0.7, 0.0, 0.0, 1.0]);
        let d = Design::new(4, 2, 3).unwrap();
        let v = empirical_variance_check(&p, d, DifferenceKind::ToSubjectMean, 1000, 6).unwrap();
        assert!((v.expected - 5.0 / 6.0).abs() < 1e-15);
        assert!(v.z_score().abs() < 3.0, "{v:?}");
    }
}
