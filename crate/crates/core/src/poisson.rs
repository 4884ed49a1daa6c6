//! Truncation depth and Poisson weights for the uniformised step count.
//!
//! Weights are built by the multiplicative recurrence outward from the mode,
//! starting at an unnormalised value of 1, and normalised by their total.
//! Evaluation stops on each side once a term falls below [`CUTOFF`] of the
//! mode, so only a window around the mode is stored; everything outside it
//! is exactly zero. This avoids the underflow of `exp(-λT)` for large `λT`.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// Unnormalised terms below this (relative to the mode term 1) are dropped.
const CUTOFF: f64 = 1e-300;

/// Smallest `N` with `N >= λT e² - ln(delta)`, and at least 1.
pub fn truncation_depth(rate_time: f64, delta: f64) -> Result<usize> {
    if !(rate_time.is_finite() && rate_time > 0.0) {
        return Err(Error::Poisson(format!("rate_time must be positive, got {rate_time}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Poisson(format!("delta must lie in (0,1), got {delta}")));
    }
    let n = (rate_time * E * E - delta.ln()).ceil();
    if n >= usize::MAX as f64 {
        return Err(Error::Poisson(format!("truncation depth {n} overflows")));
    }
    Ok((n as usize).max(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonTruncation {
    pub rate_time: f64,
    pub depth: usize,
    /// Index of the first stored weight.
    left: usize,
    /// ψ(left), ψ(left+1), ... clipped to `depth` entries at most.
    window: Vec<f64>,
    /// Mass of the weights at indices `>= depth`.
    pub tail_mass: f64,
}

impl PoissonTruncation {
    /// ψ(i); zero outside the stored window and for `i >= depth`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i < self.left {
            return 0.0;
        }
        self.window.get(i - self.left).copied().unwrap_or(0.0)
    }

    /// All weights ψ(0..depth).
    pub fn weights(&self) -> Vec<f64> {
        (0..self.depth).map(|i| self.weight(i)).collect()
    }

    /// Σ_{i<depth} ψ(i).
    pub fn mass(&self) -> f64 {
        self.window.iter().sum()
    }

    /// Index range outside of which every weight is zero.
    pub fn support(&self) -> std::ops::Range<usize> {
        self.left..self.left + self.window.len()
    }
}

pub fn poisson_weights(rate_time: f64, depth: usize) -> Result<PoissonTruncation> {
    if !(rate_time.is_finite() && rate_time > 0.0) {
        return Err(Error::Poisson(format!("rate_time must be positive, got {rate_time}")));
    }
    if depth == 0 {
        return Err(Error::Poisson("depth must be at least 1".into()));
    }
    if rate_time > 1e15 {
        return Err(Error::Poisson(format!("rate_time {rate_time} too large")));
    }
    let mode = rate_time.floor() as usize;

    let mut left_side = Vec::new(); // w(mode-1), w(mode-2), ...
    let mut w = 1.0;
    let mut i = mode;
    while i > 0 {
        w *= i as f64 / rate_time;
        if w < CUTOFF {
            break;
        }
        left_side.push(w);
        i -= 1;
    }
    let left = mode - left_side.len();

    let mut right_side = vec![1.0]; // w(mode), w(mode+1), ...
    let mut w = 1.0;
    let mut i = mode;
    loop {
        i += 1;
        w *= rate_time / i as f64;
        if w < CUTOFF {
            break;
        }
        right_side.push(w);
    }

    let mut full: Vec<f64> = left_side.into_iter().rev().collect();
    full.extend(right_side);
    // Sum smallest-first on each side of the mode for accuracy.
    let peak = mode - left;
    let total: f64 = full[..peak].iter().sum::<f64>() + full[peak..].iter().rev().sum::<f64>();

    let keep = depth.saturating_sub(left).min(full.len());
    let tail: f64 = full[keep..].iter().rev().sum::<f64>() / total;
    let window: Vec<f64> = full[..keep].iter().map(|x| x / total).collect();
    if window.iter().all(|&x| x == 0.0) {
        return Err(Error::Poisson(format!(
            "all weights for rate_time {rate_time} underflow below depth {depth}"
        )));
    }
    Ok(PoissonTruncation {
        rate_time,
        depth,
        left,
        window,
        tail_mass: tail,
    })
}

/// Truncation for a uniformised model: depth from `truncation_depth`, then weights.
pub fn truncation_for(lambda: f64, time_bound: f64, delta: f64) -> Result<PoissonTruncation> {
    let rate_time = lambda * time_bound;
    poisson_weights(rate_time, truncation_depth(rate_time, delta)?)
}
