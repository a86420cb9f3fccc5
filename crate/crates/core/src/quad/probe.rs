//! Numerical surrogate for `lim_{δ→0+} F(δ)` and for convergence of partial
//! sums/integrals along a geometric schedule.
//!
//! A verdict is read off the last few increments `d_k = |F_{k+1} - F_k|`:
//!
//! * geometric decay (ratios `d_{k+1}/d_k` at most `ratio_threshold` for
//!   `confirmations` consecutive steps, with a ratio that is not drifting
//!   towards one) is `Converges`;
//! * increments that do not shrink (ratios near or above one) are `Diverges`;
//! * increments shrinking only like `1/k` (the signature of `log log`-type
//!   growth on a geometric schedule) are `Diverges` too.
//!
//! The drift test uses `σ_k = 1/(1 - ρ_k)`. For `d_k ∝ k^{-β}` one has
//! `σ_k ≈ k/β`, so the slope of `σ` is `1/β`: about zero for geometric decay,
//! `1/2` for `k^{-2}` (summable) and `1` for `k^{-1}` (not summable).
//!
//! The classification is a diagnostic heuristic, not a proof.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "limit")]
pub enum LimitVerdict {
    Converges(f64),
    Diverges,
    Inconclusive,
}

impl LimitVerdict {
    pub fn converges(&self) -> bool {
        matches!(self, LimitVerdict::Converges(_))
    }

    pub fn diverges(&self) -> bool {
        matches!(self, LimitVerdict::Diverges)
    }

    pub fn limit(&self) -> Option<f64> {
        match self {
            LimitVerdict::Converges(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    /// Largest increment ratio still counted as geometric decay.
    pub ratio_threshold: f64,
    /// Consecutive ratios that must confirm a verdict.
    pub confirmations: usize,
    /// Ratios at or above this count as "bounded away from zero".
    pub stall_ratio: f64,
    /// `σ`-slope at or below which decay is accepted as summable.
    pub summable_slope: f64,
    /// `σ`-slope at or above which decay is classified as harmonic.
    pub harmonic_slope: f64,
    /// Increments below `noise · max(scale, 1)` are treated as zero.
    pub noise: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            ratio_threshold: 0.9,
            confirmations: 3,
            stall_ratio: 0.98,
            summable_slope: 0.7,
            harmonic_slope: 0.85,
            noise: 1e-13,
        }
    }
}

/// Evaluates `family` along `schedule` (strictly decreasing to 0, at least six
/// points) and classifies `lim_{δ→0+} F(δ)`.
pub fn probe_limit<F>(mut family: F, schedule: &[f64]) -> Result<LimitVerdict>
where
    F: FnMut(f64) -> Result<f64>,
{
    validate_schedule(schedule)?;
    let values = schedule.iter().map(|&d| family(d)).collect::<Result<Vec<_>>>()?;
    Ok(classify_sequence(&values, &ProbeOptions::default()))
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.len() < 6 {
        return Err(Error::InvalidArgument(format!("schedule needs at least 6 points, got {}", schedule.len())));
    }
    let ok = schedule.iter().all(|d| *d > 0.0 && d.is_finite()) && schedule.windows(2).all(|w| w[1] < w[0]);
    if !ok {
        return Err(Error::InvalidArgument("schedule must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Classifies a scalar sequence `F_0, F_1, ...`.
pub fn classify_sequence(values: &[f64], opts: &ProbeOptions) -> LimitVerdict {
    if values.iter().any(|v| !v.is_finite()) {
        return LimitVerdict::Diverges;
    }
    let signed: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let increments: Vec<f64> = signed.iter().map(|d| d.abs()).collect();
    let last = *values.last().unwrap_or(&0.0);
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    match classify(&increments, scale, opts) {
        Shape::Settled => LimitVerdict::Converges(last),
        Shape::Geometric(rho) => {
            let d = signed[signed.len() - 1];
            LimitVerdict::Converges(last + d * rho / (1.0 - rho))
        }
        Shape::Divergent => LimitVerdict::Diverges,
        Shape::Unclear => LimitVerdict::Inconclusive,
    }
}

/// Classifies a family from the norms of its successive differences, as for
/// vector-valued families. `current` is the value (or norm) at the last point
/// and is reported as the limit estimate, corrected by the geometric tail.
pub fn classify_increments(increments: &[f64], current: f64, opts: &ProbeOptions) -> LimitVerdict {
    if increments.iter().any(|v| !v.is_finite()) || !current.is_finite() {
        return LimitVerdict::Diverges;
    }
    let scale = increments.iter().fold(current.abs(), |m, v| m.max(v.abs()));
    let incs: Vec<f64> = increments.iter().map(|d| d.abs()).collect();
    match classify(&incs, scale, opts) {
        Shape::Settled => LimitVerdict::Converges(current),
        Shape::Geometric(rho) => {
            let d = incs[incs.len() - 1];
            LimitVerdict::Converges(current + d * rho / (1.0 - rho))
        }
        Shape::Divergent => LimitVerdict::Diverges,
        Shape::Unclear => LimitVerdict::Inconclusive,
    }
}

enum Shape {
    Settled,
    Geometric(f64),
    Divergent,
    Unclear,
}

fn classify(increments: &[f64], scale: f64, opts: &ProbeOptions) -> Shape {
    let need = opts.confirmations.max(1);
    if increments.len() < need + 1 {
        return Shape::Unclear;
    }
    let floor = opts.noise * scale.max(1.0);
    let window = &increments[increments.len() - (need + 1)..];
    if window.iter().all(|d| *d <= floor) {
        return Shape::Settled;
    }
    if window.iter().skip(1).all(|d| *d <= floor) {
        // one last real step, then nothing
        return Shape::Settled;
    }
    if window.iter().any(|d| *d <= floor) {
        return Shape::Unclear;
    }
    let ratios: Vec<f64> = window.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|r| *r >= opts.stall_ratio) {
        return Shape::Divergent;
    }
    if ratios.iter().any(|r| *r >= 1.0) {
        return Shape::Unclear;
    }
    let slope = sigma_slope(increments, need, floor);
    if slope.is_some_and(|s| s >= opts.harmonic_slope) {
        return Shape::Divergent;
    }
    let geometric = ratios.iter().all(|r| *r <= opts.ratio_threshold);
    match slope {
        Some(s) if geometric && s <= opts.summable_slope => Shape::Geometric(ratios[ratios.len() - 1]),
        _ => Shape::Unclear,
    }
}

/// Mean slope of `σ_k = 1/(1 - ρ_k)` over the trailing ratios (at least
/// `need` of them, more when available, up to `need + 1`).
fn sigma_slope(increments: &[f64], need: usize, floor: f64) -> Option<f64> {
    let take = (need + 2).min(increments.len());
    let tail = &increments[increments.len() - take..];
    if tail.iter().any(|d| *d <= floor) {
        return None;
    }
    let sigma: Vec<f64> = tail
        .windows(2)
        .map(|w| w[1] / w[0])
        .map(|r| if r < 1.0 { Some(1.0 / (1.0 - r)) } else { None })
        .collect::<Option<Vec<_>>>()?;
    if sigma.len() < 2 {
        return None;
    }
    Some((sigma[sigma.len() - 1] - sigma[0]) / (sigma.len() - 1) as f64)
}
