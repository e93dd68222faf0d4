//! Seeded percentile bootstrap.
//!
//! Resample `r` draws indices from its own ChaCha8 stream (seed = the run
//! seed, stream = `r`), so results do not depend on how resamples are
//! scheduled across threads. Bounds are nearest-rank percentiles of the
//! sorted resample statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BootstrapError {
    #[error("bootstrap needs at least one record")]
    Empty,
    #[error("n_resamples must be at least 1")]
    NoResamples,
    #[error("confidence level {0} outside (0, 1)")]
    InvalidLevel(f64),
    #[error("statistic is undefined on the full sample")]
    UndefinedPoint,
    #[error("statistic undefined on all {0} resamples")]
    AllUndefined(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl BootstrapSpec {
    pub fn new(n_resamples: usize, level: f64, seed: u64) -> Result<Self, BootstrapError> {
        let s = BootstrapSpec { n_resamples, level, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn with_seed(seed: u64) -> Self {
        BootstrapSpec { n_resamples: DEFAULT_RESAMPLES, level: DEFAULT_LEVEL, seed }
    }

    pub fn validate(&self) -> Result<(), BootstrapError> {
        if self.n_resamples == 0 {
            return Err(BootstrapError::NoResamples);
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(BootstrapError::InvalidLevel(self.level));
        }
        Ok(())
    }
}

/// Full-sample statistic with percentile bounds. `lo <= hi` always holds;
/// `point` may fall outside `[lo, hi]` for skewed statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    #[serde(flatten)]
    pub estimate: IntervalEstimate,
    /// Resamples on which the statistic was defined.
    pub n_valid: usize,
    pub n_skipped: usize,
}

/// A view of the data through a list of indices (with repetition).
pub struct Resample<'a, T> {
    data: &'a [T],
    idx: Option<Vec<usize>>,
}

impl<'a, T> Resample<'a, T> {
    pub fn full(data: &'a [T]) -> Self {
        Resample { data, idx: None }
    }

    pub fn from_indices(data: &'a [T], idx: Vec<usize>) -> Self {
        Resample { data, idx: Some(idx) }
    }

    pub fn len(&self) -> usize {
        self.idx.as_ref().map_or(self.data.len(), Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = &'a T> + '_> {
        match &self.idx {
            None => Box::new(self.data.iter()),
            Some(idx) => Box::new(idx.iter().map(|&i| &self.data[i])),
        }
    }
}

/// Indices of resample `r` for a sample of size `n`.
pub fn resample_indices(n: usize, seed: u64, r: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Nearest-rank percentile of sorted values: element at rank `ceil(p·m)`, clamped to `[1, m]`.
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    assert!(m > 0, "percentile of an empty sample");
    let rank = (p * m as f64).ceil() as usize;
    sorted[rank.clamp(1, m) - 1]
}

/// Evaluate a vector-valued statistic on every resample, returned in resample order.
pub fn resample_statistics<T, F>(
    statistic: F,
    data: &[T],
    spec: &BootstrapSpec,
) -> Result<Vec<Vec<Option<f64>>>, BootstrapError>
where
    T: Sync,
    F: Fn(&Resample<T>) -> Vec<Option<f64>> + Sync,
{
    spec.validate()?;
    if data.is_empty() {
        return Err(BootstrapError::Empty);
    }
    Ok((0..spec.n_resamples)
        .into_par_iter()
        .map(|r| statistic(&Resample::from_indices(data, resample_indices(data.len(), spec.seed, r))))
        .collect())
}

fn summarize(point: Option<f64>, values: impl Iterator<Item = Option<f64>>, level: f64) -> Result<BootstrapOutcome, BootstrapError> {
    let point = point.ok_or(BootstrapError::UndefinedPoint)?;
    let mut skipped = 0;
    let mut defined: Vec<f64> = values
        .filter_map(|v| {
            if v.is_none() {
                skipped += 1;
            }
            v
        })
        .collect();
    if defined.is_empty() {
        return Err(BootstrapError::AllUndefined(skipped));
    }
    defined.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok(BootstrapOutcome {
        estimate: IntervalEstimate {
            point,
            lo: percentile_nearest_rank(&defined, alpha),
            hi: percentile_nearest_rank(&defined, 1.0 - alpha),
        },
        n_valid: defined.len(),
        n_skipped: skipped,
    })
}

/// Percentile intervals for `k` statistics computed together on each resample.
///
/// The outer error covers invalid specs and empty data; each statistic
/// then succeeds or fails on its own.
pub fn bootstrap_many<T, F>(
    statistic: F,
    data: &[T],
    spec: &BootstrapSpec,
) -> Result<Vec<Result<BootstrapOutcome, BootstrapError>>, BootstrapError>
where
    T: Sync,
    F: Fn(&Resample<T>) -> Vec<Option<f64>> + Sync,
{
    let per_resample = resample_statistics(&statistic, data, spec)?;
    let point = statistic(&Resample::full(data));
    Ok(point
        .iter()
        .enumerate()
        .map(|(k, p)| summarize(*p, per_resample.iter().map(|v| v[k]), spec.level))
        .collect())
}

/// Percentile interval for a scalar statistic. Resamples where the
/// statistic is undefined are skipped and counted.
pub fn bootstrap_ci<T, F>(statistic: F, data: &[T], spec: &BootstrapSpec) -> Result<BootstrapOutcome, BootstrapError>
where
    T: Sync,
    F: Fn(&Resample<T>) -> Option<f64> + Sync,
{
    let mut all = bootstrap_many(|s| vec![statistic(s)], data, spec)?;
    all.pop().expect("one statistic")
}
