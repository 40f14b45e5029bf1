//! Planning the number of observers from pilot variance components.
//!
//! For a design `(a, b, c)` the pilot components give expected sums of squares
//!
//! ```text
//! SSB0  = ν_B (ac s2_B0 + c s2_AB0 + s2_E0)
//! SSAB0 = ν_AB (c s2_AB0 + s2_E0)
//! SSE0  = ν_E s2_E0
//! ```
//!
//! and the projected width of the Graybill–Wang interval for the upper
//! reproducibility limit is
//!
//! ```text
//! W = z / sqrt(N) * ( sqrt(S0 + H0) - sqrt(S0 - L0) ),   S0 = SSB0 + SSAB0 + SSE0
//! ```
//!
//! with `H0`, `L0` built from the same coefficients as the interval itself.
//! [`solve_observers`] finds the smallest integer `b` with `W <= target` for
//! fixed `a` and `c`; [`solve_subjects`] is the same search over `a` with `b`
//! fixed.

use crate::error::{Error, Result};
use crate::interval::GwCoefficients;

/// Relative slack allowed before a width increase counts as non-monotone.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PilotEstimates {
    pub sigma2_b0: f64,
    pub sigma2_ab0: f64,
    pub sigma2_e0: f64,
}

impl PilotEstimates {
    pub fn new(sigma2_b0: f64, sigma2_ab0: f64, sigma2_e0: f64) -> Result<Self> {
        if !(sigma2_b0 >= 0.0
            && sigma2_ab0 >= 0.0
            && sigma2_b0.is_finite()
            && sigma2_ab0.is_finite())
        {
            return Err(Error::Domain(
                "pilot variance components must be non-negative",
            ));
        }
        if !(sigma2_e0 > 0.0 && sigma2_e0.is_finite()) {
            return Err(Error::Domain("pilot residual variance must be positive"));
        }
        Ok(Self {
            sigma2_b0,
            sigma2_ab0,
            sigma2_e0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WidthProjection {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub width: f64,
    pub ssb0: f64,
    pub ssab0: f64,
    pub sse0: f64,
    pub h0: f64,
    pub l0: f64,
}

pub fn projected_width(
    pilot: &PilotEstimates,
    a: usize,
    b: usize,
    c: usize,
    level: f64,
    z: f64,
) -> Result<WidthProjection> {
    if a < 2 || b < 2 || c < 2 {
        return Err(Error::Domain("a, b and c must all be at least 2"));
    }
    let (df_b, df_ab, df_e) = (b - 1, (a - 1) * (b - 1), a * b * (c - 1));
    let coef = GwCoefficients::new(df_b, df_ab, df_e, level)?;
    let (af, cf) = (a as f64, c as f64);
    let p = pilot;
    let ssb0 = df_b as f64 * (af * cf * p.sigma2_b0 + cf * p.sigma2_ab0 + p.sigma2_e0);
    let ssab0 = df_ab as f64 * (cf * p.sigma2_ab0 + p.sigma2_e0);
    let sse0 = df_e as f64 * p.sigma2_e0;
    let (lo, hi) = coef.interval(ssb0, ssab0, sse0, a * b * c, z);
    Ok(WidthProjection {
        a,
        b,
        c,
        width: hi - lo,
        ssb0,
        ssab0,
        sse0,
        h0: coef.upper_margin(ssb0, ssab0, sse0),
        l0: coef.lower_margin(ssb0, ssab0, sse0),
    })
}

/// Result of an integer width search.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SizePlan {
    /// Smallest admissible count meeting the target.
    pub count: usize,
    /// Projected width at `count`.
    pub width: f64,
    /// Projected width at `count - 1`, if that count is admissible (≥ 2).
    pub width_below: Option<f64>,
    /// Whether a width increase was seen and the search fell back to a scan.
    pub exhaustive: bool,
}

/// Smallest `b` in `[2, b_max]` whose projected width is at most `target`.
pub fn solve_observers(
    pilot: &PilotEstimates,
    a: usize,
    c: usize,
    target: f64,
    b_max: usize,
    level: f64,
    z: f64,
) -> Result<SizePlan> {
    projected_width(pilot, a, 2, c, level, z)?;
    search(target, b_max, |b| {
        projected_width(pilot, a, b, c, level, z).map(|w| w.width)
    })
}

/// Smallest `a` in `[2, a_max]` meeting the target with `b`, `c` fixed.
///
/// Same width function as [`solve_observers`]; searching over the subject
/// count is an extension of the observer-count question.
pub fn solve_subjects(
    pilot: &PilotEstimates,
    b: usize,
    c: usize,
    target: f64,
    a_max: usize,
    level: f64,
    z: f64,
) -> Result<SizePlan> {
    projected_width(pilot, 2, b, c, level, z)?;
    search(target, a_max, |a| {
        projected_width(pilot, a, b, c, level, z).map(|w| w.width)
    })
}

fn increased(prev: f64, next: f64) -> bool {
    next > prev * (1.0 + MONOTONE_SLACK)
}

/// Doubling bracket, then bisection, then a check of the count just below.
/// Any observed increase in width switches to a linear scan from 2.
fn search(target: f64, max: usize, width: impl Fn(usize) -> Result<f64>) -> Result<SizePlan> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Domain("target width must be positive"));
    }
    if max < 2 {
        return Err(Error::Domain("search cap must be at least 2"));
    }
    let first = width(2)?;
    if first <= target {
        return Ok(SizePlan {
            count: 2,
            width: first,
            width_below: None,
            exhaustive: false,
        });
    }

    let (mut lo, mut w_lo) = (2usize, first);
    let mut hi = None;
    while lo < max {
        let probe = lo.saturating_mul(2).min(max);
        let w = width(probe)?;
        if increased(w_lo, w) {
            return scan(target, max, &width);
        }
        if w <= target {
            hi = Some((probe, w));
            break;
        }
        lo = probe;
        w_lo = w;
    }
    let Some((mut hi, mut w_hi)) = hi else {
        return Err(Error::NotAchievable {
            max,
            width_at_max: w_lo,
        });
    };

    // invariant: W(lo) > target >= W(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let w = width(mid)?;
        if increased(w_lo, w) || increased(w, w_hi) {
            return scan(target, max, &width);
        }
        if w <= target {
            hi = mid;
            w_hi = w;
        } else {
            lo = mid;
            w_lo = w;
        }
    }
    Ok(SizePlan {
        count: hi,
        width: w_hi,
        width_below: Some(w_lo),
        exhaustive: false,
    })
}

fn scan(target: f64, max: usize, width: &impl Fn(usize) -> Result<f64>) -> Result<SizePlan> {
    let mut prev = width(2)?;
    for n in 3..=max {
        let w = width(n)?;
        if w <= target {
            return Ok(SizePlan {
                count: n,
                width: w,
                width_below: Some(prev),
                exhaustive: true,
            });
        }
        prev = w;
    }
    Err(Error::NotAchievable {
        max,
        width_at_max: prev,
    })
}

/// First `b` in `(from, to]` where the projected width grows by more than
/// [`MONOTONE_SLACK`] over `b - 1`, with the relative increase.
pub fn width_increases(
    pilot: &PilotEstimates,
    a: usize,
    c: usize,
    from: usize,
    to: usize,
    level: f64,
    z: f64,
) -> Result<Option<(usize, f64)>> {
    let mut prev = projected_width(pilot, a, from, c, level, z)?.width;
    for b in from + 1..=to {
        let w = projected_width(pilot, a, b, c, level, z)?.width;
        if increased(prev, w) {
            return Ok(Some((b, w / prev - 1.0)));
        }
        prev = w;
    }
    Ok(None)
}
