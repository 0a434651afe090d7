use alloc::vec::Vec;

use super::mean;
use crate::error::{Error, Result};
use crate::rng::Uniform;

/// Percentile bootstrap interval of a mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
    /// Only one observation: the interval collapses onto it.
    pub degenerate: bool,
}

/// Percentile bootstrap of the mean: `resamples` means of resamples drawn
/// with replacement, cut at the `(1-level)/2` and `(1+level)/2` quantiles
/// (linear interpolation between order statistics).
pub fn bootstrap_ci(obs: &[f64], level: f64, resamples: usize, stream: &mut Uniform) -> Result<Interval> {
    if obs.is_empty() {
        return Err(Error::Stats("bootstrap needs at least one observation".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Stats("confidence level must lie in (0, 1)".into()));
    }
    if resamples == 0 {
        return Err(Error::Stats("resample count must be positive".into()));
    }
    let m = mean(obs);
    if obs.len() == 1 {
        return Ok(Interval {
            mean: m,
            low: m,
            high: m,
            degenerate: true,
        });
    }
    let n = obs.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| obs[stream.next_index(n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(Interval {
        mean: m,
        low: quantile(&means, tail),
        high: quantile(&means, 1.0 - tail),
        degenerate: false,
    })
}

/// Quantile of sorted data, linear between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
