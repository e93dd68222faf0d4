//! Spearman rank correlation with exact-permutation and t-approximation
//! p-values, and the MFC validation table built from it.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Largest n for which exact permutation p-values are enumerated (10! orderings).
pub const MAX_EXACT_N: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 paired values, got {0}")]
    TooFew(usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("exact permutation test limited to n <= {MAX_EXACT_N}, got {0}")]
    ExactTooLarge(usize),
    #[error("rho {0} outside [-1, 1]")]
    InvalidRho(f64),
    #[error("missing metric vector `{0}`")]
    MissingMetric(Metric),
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho as the Pearson correlation of average ranks.
/// `Ok(None)` when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(CorrelationError::TooFew(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Two-sided, over all n! rank orderings.
    ExactPermutation,
    /// Two-sided, t = rho·sqrt((n-2)/(1-rho²)) with n-2 degrees of freedom.
    TApproximation,
}

/// Histogram of Σd² over all permutations of `0..n` against the identity.
fn sum_sq_distribution(n: usize) -> Vec<u64> {
    fn walk(pos: usize, n: usize, used: &mut [bool], acc: usize, hist: &mut [u64]) {
        if pos == n {
            hist[acc] += 1;
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                let d = pos.abs_diff(v);
                walk(pos + 1, n, used, acc + d * d, hist);
                used[v] = false;
            }
        }
    }
    let max = n * (n * n - 1) / 3;
    let mut hist = vec![0; max + 1];
    walk(0, n, &mut vec![false; n], 0, &mut hist);
    hist
}

/// Two-sided p-value for an observed rho from n untied pairs.
///
/// Exact mode counts rank orderings whose |rho| is at least the observed
/// |rho|. The t approximation returns 0 at |rho| = 1.
pub fn spearman_p(rho: f64, n: usize, method: PValueMethod) -> Result<f64, CorrelationError> {
    if n < 3 {
        return Err(CorrelationError::TooFew(n));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(CorrelationError::InvalidRho(rho));
    }
    match method {
        PValueMethod::ExactPermutation => {
            if n > MAX_EXACT_N {
                return Err(CorrelationError::ExactTooLarge(n));
            }
            let hist = sum_sq_distribution(n);
            let denom = (n * (n * n - 1)) as f64;
            let total: u64 = hist.iter().sum();
            let extreme: u64 = hist
                .iter()
                .enumerate()
                .filter(|&(_, &c)| c > 0)
                .filter(|&(s, _)| (1.0 - 6.0 * s as f64 / denom).abs() >= rho.abs() - 1e-9)
                .map(|(_, &c)| c)
                .sum();
            Ok(extreme as f64 / total as f64)
        }
        PValueMethod::TApproximation => {
            if rho.abs() >= 1.0 {
                return Ok(0.0);
            }
            if n == 2 {
                return Ok(1.0);
            }
            let df = (n - 2) as f64;
            let t = rho * (df / (1.0 - rho * rho)).sqrt();
            let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
            Ok((2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
        }
    }
}

/// Which sample the correlation is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// One value per label (n = 5), exact permutation p-value.
    #[default]
    PerLabel,
    /// Per-label values from every bootstrap resample pooled, t-approximation p-value.
    BootstrapPooled,
}

impl CorrelationMode {
    pub fn p_method(self) -> PValueMethod {
        match self {
            CorrelationMode::PerLabel => PValueMethod::ExactPermutation,
            CorrelationMode::BootstrapPooled => PValueMethod::TApproximation,
        }
    }
}

impl FromStr for CorrelationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-label" | "per_label" => Ok(CorrelationMode::PerLabel),
            "bootstrap-pooled" | "bootstrap_pooled" => Ok(CorrelationMode::BootstrapPooled),
            other => Err(format!("unknown correlation mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mfc,
    F1,
    Precision,
    Recall,
    Dp,
    Eo,
}

impl Metric {
    pub const BASELINES: [Metric; 5] = [Metric::F1, Metric::Precision, Metric::Recall, Metric::Dp, Metric::Eo];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mfc => "mfc",
            Metric::F1 => "f1",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Dp => "dp",
            Metric::Eo => "eo",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationEntry {
    /// `None` when either vector is constant.
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub mode: CorrelationMode,
    pub p_method: PValueMethod,
    pub n: usize,
    pub against_mfc: BTreeMap<Metric, CorrelationEntry>,
}

/// Spearman correlation of the MFC vector against each baseline metric vector.
pub fn validate_mfc(
    per_label_metrics: &BTreeMap<Metric, Vec<f64>>,
    mode: CorrelationMode,
) -> Result<CorrelationReport, CorrelationError> {
    let get = |m: Metric| per_label_metrics.get(&m).ok_or(CorrelationError::MissingMetric(m));
    let mfc = get(Metric::Mfc)?;
    let method = mode.p_method();
    let mut against_mfc = BTreeMap::new();
    for m in Metric::BASELINES {
        let v = get(m)?;
        let rho = spearman(mfc, v)?;
        let p_value = rho.map(|r| spearman_p(r, mfc.len(), method)).transpose()?;
        against_mfc.insert(m, CorrelationEntry { rho, p_value, n: mfc.len() });
    }
    Ok(CorrelationReport { mode, p_method: method, n: mfc.len(), against_mfc })
}
