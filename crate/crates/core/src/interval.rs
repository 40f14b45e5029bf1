//! Confidence intervals for the LOAM limits and the variance components.
//!
//! * Reproducibility LOAM: Graybill–Wang. With `S = SSB + SSAB + SSE`,
//!   `L = sqrt(Σ l_x² SSx²)` and `H = sqrt(Σ h_x² SSx²)` over `x = B, AB, E`,
//!   the upper limit has interval `(z sqrt((S - L)/N), z sqrt((S + H)/N))`
//!   where `l_x = 1 - 1/F_{1-α/2; ν_x, ∞}` and `h_x = 1/F_{α/2; ν_x, ∞} - 1`.
//! * Repeatability LOAM and `σ_E`: exact, from `SSE / σ²_E ~ χ²_{ν_E}`.
//! * `σ_A`, `σ_B`, `σ_AB`: large-sample normal intervals from the
//!   asymptotic normality of the mean squares.
//!
//! `level` controls the interval coverage (the `α/2` tails). The LOAM
//! multiplier `z` is a separate argument, since it belongs to the definition
//! of the limit rather than to the interval.

use crate::anova::{AnovaDecomposition, VarianceComponents};
use crate::error::{Error, Result};
use crate::math;
use crate::quantile::{chisq_quantile, f_quantile_inf_denominator, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IntervalTarget {
    ReprodUpper,
    ReprodLower,
    RepeatUpper,
    RepeatLower,
    SigmaA,
    SigmaB,
    SigmaAb,
    SigmaE,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IntervalMethod {
    GraybillWang,
    ExactChisq,
    NormalApprox,
}

/// A two-sided interval. When `available` is false the endpoints are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IntervalResult {
    pub target: IntervalTarget,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: IntervalMethod,
    pub available: bool,
    /// The lower endpoint was raised to zero.
    pub clamped: bool,
}

impl IntervalResult {
    fn new(
        target: IntervalTarget,
        method: IntervalMethod,
        level: f64,
        lower: f64,
        upper: f64,
    ) -> Self {
        Self {
            target,
            lower,
            upper,
            level,
            method,
            available: true,
            clamped: false,
        }
    }

    fn unavailable(target: IntervalTarget, method: IntervalMethod, level: f64) -> Self {
        Self {
            target,
            lower: f64::NAN,
            upper: f64::NAN,
            level,
            method,
            available: false,
            clamped: false,
        }
    }

    /// Mirror image for the negative limit.
    fn negated(&self, target: IntervalTarget) -> Self {
        Self {
            target,
            lower: -self.upper,
            upper: -self.lower,
            ..*self
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.available && self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(
            "confidence level must lie strictly between 0 and 1",
        ))
    }
}

/// Graybill–Wang coefficients for the observer, interaction and error rows.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GwCoefficients {
    pub l_b: f64,
    pub l_ab: f64,
    pub l_e: f64,
    pub h_b: f64,
    pub h_ab: f64,
    pub h_e: f64,
}

impl GwCoefficients {
    pub fn new(df_b: usize, df_ab: usize, df_e: usize, level: f64) -> Result<Self> {
        check_level(level)?;
        let (l_b, h_b) = gw_pair(df_b as f64, level)?;
        let (l_ab, h_ab) = gw_pair(df_ab as f64, level)?;
        let (l_e, h_e) = gw_pair(df_e as f64, level)?;
        Ok(Self {
            l_b,
            l_ab,
            l_e,
            h_b,
            h_ab,
            h_e,
        })
    }

    pub fn for_anova(anova: &AnovaDecomposition, level: f64) -> Result<Self> {
        Self::new(anova.df_b, anova.df_ab, anova.df_e, level)
    }

    /// `L = sqrt(l_B² SSB² + l_AB² SSAB² + l_E² SSE²)`.
    pub fn lower_margin(&self, ss_b: f64, ss_ab: f64, ss_e: f64) -> f64 {
        root_sum_sq(self.l_b * ss_b, self.l_ab * ss_ab, self.l_e * ss_e)
    }

    /// `H = sqrt(h_B² SSB² + h_AB² SSAB² + h_E² SSE²)`.
    pub fn upper_margin(&self, ss_b: f64, ss_ab: f64, ss_e: f64) -> f64 {
        root_sum_sq(self.h_b * ss_b, self.h_ab * ss_ab, self.h_e * ss_e)
    }

    /// Interval `(lo, hi)` for the upper reproducibility limit `z sqrt(S / n)`.
    pub fn interval(&self, ss_b: f64, ss_ab: f64, ss_e: f64, n: usize, z: f64) -> (f64, f64) {
        let s = ss_b + ss_ab + ss_e;
        let l = self.lower_margin(ss_b, ss_ab, ss_e);
        let h = self.upper_margin(ss_b, ss_ab, ss_e);
        let n = n as f64;
        // S - L > 0 in exact arithmetic because every l_x < 1
        (
            z * math::sqrt((s - l).max(0.0) / n),
            z * math::sqrt((s + h) / n),
        )
    }
}

fn root_sum_sq(x: f64, y: f64, z: f64) -> f64 {
    math::sqrt(x * x + y * y + z * z)
}

fn gw_pair(nu: f64, level: f64) -> Result<(f64, f64)> {
    let f_hi = f_quantile_inf_denominator(0.5 + level / 2.0, nu)?;
    let f_lo = f_quantile_inf_denominator(0.5 - level / 2.0, nu)?;
    Ok((1.0 - 1.0 / f_hi, 1.0 / f_lo - 1.0))
}

/// Graybill–Wang intervals for the upper and lower reproducibility limits.
pub fn gw_reproducibility_ci(
    anova: &AnovaDecomposition,
    level: f64,
    z: f64,
) -> Result<(IntervalResult, IntervalResult)> {
    let coef = GwCoefficients::for_anova(anova, level)?;
    let (lo, hi) = coef.interval(anova.ss_b, anova.ss_ab, anova.ss_e, anova.design.n(), z);
    let upper = IntervalResult::new(
        IntervalTarget::ReprodUpper,
        IntervalMethod::GraybillWang,
        level,
        lo,
        hi,
    );
    Ok((upper, upper.negated(IntervalTarget::ReprodLower)))
}

/// Exact chi-square intervals for the upper and lower repeatability limits.
pub fn exact_repeatability_ci(
    anova: &AnovaDecomposition,
    level: f64,
    z: f64,
) -> Result<(IntervalResult, IntervalResult)> {
    check_level(level)?;
    let nu = anova.df_e as f64;
    let chi_hi = chisq_quantile(0.5 + level / 2.0, nu)?;
    let chi_lo = chisq_quantile(0.5 - level / 2.0, nu)?;
    let c = anova.design.c() as f64;
    let scaled = (c - 1.0) / c * anova.ss_e;
    let upper = IntervalResult::new(
        IntervalTarget::RepeatUpper,
        IntervalMethod::ExactChisq,
        level,
        z * math::sqrt(scaled / chi_hi),
        z * math::sqrt(scaled / chi_lo),
    );
    Ok((upper, upper.negated(IntervalTarget::RepeatLower)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Component {
    A,
    B,
    AB,
    E,
}

/// Interval for the standard deviation of one random effect.
///
/// `σ_E` uses the exact chi-square pivot. The others use
///
/// ```text
/// σ̂_B ± z/(ac σ̂_B) sqrt(MSB² / (2ν_B) + MSAB² / (2ν_AB))
/// σ̂_A ± z/(bc σ̂_A) sqrt(MSA² / (2ν_A) + MSAB² / (2ν_AB))
/// σ̂_AB ± z/(c σ̂_AB) sqrt(MSAB² / (2ν_AB) + MSE² / (2ν_E))
/// ```
///
/// where each mean square is written through the raw plug-in components
/// (`MSB = ac σ̂²_B + c σ̂²_AB + σ̂²_E`, and so on) and `z` is the normal
/// quantile for `level`. These are reported unavailable when the raw
/// estimate is not positive; a negative lower endpoint is clamped to zero.
pub fn sigma_ci(
    components: &VarianceComponents,
    anova: &AnovaDecomposition,
    which: Component,
    level: f64,
) -> Result<IntervalResult> {
    check_level(level)?;
    let d = anova.design;
    let (a, b, c) = (d.a() as f64, d.b() as f64, d.c() as f64);
    let v = components;
    let ms_ab = c * v.sigma2_ab_raw + v.sigma2_e;
    let (target, raw, divisor, first, nu_first, second, nu_second) = match which {
        Component::E => {
            let nu = anova.df_e as f64;
            let ss = nu * v.sigma2_e;
            let chi_hi = chisq_quantile(0.5 + level / 2.0, nu)?;
            let chi_lo = chisq_quantile(0.5 - level / 2.0, nu)?;
            return Ok(IntervalResult::new(
                IntervalTarget::SigmaE,
                IntervalMethod::ExactChisq,
                level,
                math::sqrt(ss / chi_hi),
                math::sqrt(ss / chi_lo),
            ));
        }
        Component::B => (
            IntervalTarget::SigmaB,
            v.sigma2_b_raw,
            a * c,
            a * c * v.sigma2_b_raw + ms_ab,
            anova.df_b,
            ms_ab,
            anova.df_ab,
        ),
        Component::A => (
            IntervalTarget::SigmaA,
            v.sigma2_a_raw,
            b * c,
            b * c * v.sigma2_a_raw + ms_ab,
            anova.df_a,
            ms_ab,
            anova.df_ab,
        ),
        Component::AB => (
            IntervalTarget::SigmaAb,
            v.sigma2_ab_raw,
            c,
            ms_ab,
            anova.df_ab,
            v.sigma2_e,
            anova.df_e,
        ),
    };
    if raw.is_nan() || raw <= 0.0 {
        return Ok(IntervalResult::unavailable(
            target,
            IntervalMethod::NormalApprox,
            level,
        ));
    }
    let z = normal_quantile(0.5 + level / 2.0)?;
    let sigma = math::sqrt(raw);
    let half = z / (divisor * sigma)
        * math::sqrt(
            first * first / (2.0 * nu_first as f64) + second * second / (2.0 * nu_second as f64),
        );
    let mut out = IntervalResult::new(
        target,
        IntervalMethod::NormalApprox,
        level,
        sigma - half,
        sigma + half,
    );
    if out.lower < 0.0 {
        out.lower = 0.0;
        out.clamped = true;
    }
    Ok(out)
}
