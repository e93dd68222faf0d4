//! Multi-label performance metrics: confusion counts, micro-F1, exact match
//! ratio, per-label precision/recall/F1 and BCE-with-logits loss.
//!
//! Every ratio with a zero denominator is defined as 0.

use crate::labels::{LabelSet, MoralLabel, N_LABELS};
use crate::predio::PredictionRecord;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("metric needs at least one record")]
    Empty,
    #[error("record {0} has no logits")]
    MissingLogits(usize),
    #[error("{logits} logit vectors but {golds} gold label sets")]
    LengthMismatch { logits: usize, golds: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl LabelCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn observe(&mut self, gold: bool, pred: bool) {
        match (gold, pred) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

impl Add for LabelCounts {
    type Output = LabelCounts;
    fn add(self, o: LabelCounts) -> LabelCounts {
        LabelCounts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_, tn: self.tn + o.tn }
    }
}

/// Per-label confusion counts over a record list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub labels: [LabelCounts; N_LABELS],
}

impl ConfusionCounts {
    pub fn observe(&mut self, gold: LabelSet, predicted: LabelSet) {
        for (i, c) in self.labels.iter_mut().enumerate() {
            c.observe(gold.bit(i), predicted.bit(i));
        }
    }

    pub fn from_records<'a, I>(records: I) -> Self
    where
        I: IntoIterator<Item = &'a PredictionRecord>,
    {
        let mut c = ConfusionCounts::default();
        for r in records {
            c.observe(r.gold, r.predicted);
        }
        c
    }

    pub fn get(&self, label: MoralLabel) -> LabelCounts {
        self.labels[label.index()]
    }

    pub fn n_records(&self) -> u64 {
        self.labels[0].total()
    }

    /// Counts summed over labels.
    pub fn summed(&self) -> LabelCounts {
        self.labels.iter().copied().fold(LabelCounts::default(), Add::add)
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: ConfusionCounts) {
        for (a, b) in self.labels.iter_mut().zip(o.labels) {
            *a = *a + b;
        }
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;
    fn add(mut self, o: ConfusionCounts) -> ConfusionCounts {
        self += o;
        self
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(records: &[PredictionRecord]) -> Result<ConfusionCounts, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(ConfusionCounts::from_records(records))
}

/// `2·TP / (2·TP + FP + FN)` over counts summed across labels.
pub fn micro_f1(counts: &ConfusionCounts) -> f64 {
    let s = counts.summed();
    ratio(2 * s.tp, 2 * s.tp + s.fp + s.fn_)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(c: LabelCounts) -> Prf {
        Prf {
            precision: ratio(c.tp, c.tp + c.fp),
            recall: ratio(c.tp, c.tp + c.fn_),
            // Equal to the harmonic mean of precision and recall, without the 0/0 case.
            f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        }
    }
}

pub fn per_label_prf(counts: &ConfusionCounts) -> [Prf; N_LABELS] {
    counts.labels.map(Prf::from_counts)
}

pub fn exact_match_ratio(records: &[PredictionRecord]) -> Result<f64, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(exact_matches(records) as f64 / records.len() as f64)
}

pub(crate) fn exact_matches<'a, I: IntoIterator<Item = &'a PredictionRecord>>(records: I) -> usize {
    records.into_iter().filter(|r| r.gold == r.predicted).count()
}

/// `-[y·ln σ(z) + (1-y)·ln(1-σ(z))]` in the overflow-free form
/// `max(z, 0) - z·y + ln(1 + e^{-|z|})`.
pub fn bce_term(z: f64, y: bool) -> f64 {
    let y = if y { 1.0 } else { 0.0 };
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Mean over records of the per-record label-averaged BCE-with-logits loss.
pub fn bce_with_logits(logits: &[[f64; N_LABELS]], golds: &[LabelSet]) -> Result<f64, MetricsError> {
    if logits.len() != golds.len() {
        return Err(MetricsError::LengthMismatch { logits: logits.len(), golds: golds.len() });
    }
    if logits.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total: f64 = logits
        .iter()
        .zip(golds)
        .map(|(z, g)| (0..N_LABELS).map(|i| bce_term(z[i], g.bit(i))).sum::<f64>() / N_LABELS as f64)
        .sum();
    Ok(total / logits.len() as f64)
}

/// BCE loss over prediction records; every record must carry logits.
pub fn record_loss(records: &[PredictionRecord]) -> Result<f64, MetricsError> {
    let logits = records
        .iter()
        .enumerate()
        .map(|(i, r)| r.logits.ok_or(MetricsError::MissingLogits(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let golds: Vec<LabelSet> = records.iter().map(|r| r.gold).collect();
    bce_with_logits(&logits, &golds)
}

/// In-domain minus cross-domain score, in percentage points.
pub fn degradation(in_domain: f64, cross_domain: f64) -> f64 {
    (in_domain - cross_domain) * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_records: usize,
    /// Present only when every record carries logits.
    pub loss: Option<f64>,
    pub micro_f1: f64,
    pub emr: f64,
    pub per_label: BTreeMap<MoralLabel, Prf>,
    pub counts: ConfusionCounts,
}

pub fn evaluate(records: &[PredictionRecord]) -> Result<MetricReport, MetricsError> {
    let counts = confusion(records)?;
    let prf = per_label_prf(&counts);
    Ok(MetricReport {
        n_records: records.len(),
        loss: record_loss(records).ok(),
        micro_f1: micro_f1(&counts),
        emr: exact_match_ratio(records)?,
        per_label: MoralLabel::ALL.iter().map(|l| (*l, prf[l.index()])).collect(),
        counts,
    })
}
