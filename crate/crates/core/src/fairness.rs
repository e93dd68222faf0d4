//! Per-label group fairness across the two platforms and the Moral Fairness
//! Consistency (MFC) score.
//!
//! Rates whose conditioning set is empty are `None`, never 0, and every
//! quantity derived from them is `None` as well.
//!
//! MFC for label `l` is `1 - |rate(MFRC->MFTC) - rate(MFTC->MFRC)|`, where
//! `rate` is the predicted-positive rate for `l` over a cross-domain run;
//! the aggregate is the mean over the five labels. When each cross-domain
//! run is evaluated on exactly one platform, the two rates are the group
//! positive rates and MFC equals `1 - |ΔDP|` label by label.

use crate::labels::{Direction, MoralLabel, Platform, N_LABELS};
use crate::metrics::{ConfusionCounts, LabelCounts};
use crate::predio::{PredictionRecord, PredictionSet};
use crate::resampling::{bootstrap_many, BootstrapError, BootstrapOutcome, BootstrapSpec, Resample};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FairnessError {
    #[error("MFC needs the {0} direction")]
    MissingDirection(Direction),
    #[error("{direction} is not a cross-domain direction")]
    NotCrossDomain { direction: Direction },
    #[error("positive rate for {label} undefined in {direction}")]
    UndefinedRate { direction: Direction, label: MoralLabel },
    #[error("no records to audit")]
    Empty,
    #[error(transparent)]
    Bootstrap(#[from] BootstrapError),
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Conditional frequencies for one (group, label) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabelRates {
    pub n: u64,
    pub n_gold_positive: u64,
    pub n_gold_negative: u64,
    pub positive_rate: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

impl LabelRates {
    pub fn from_counts(c: LabelCounts) -> Self {
        LabelRates {
            n: c.total(),
            n_gold_positive: c.tp + c.fn_,
            n_gold_negative: c.fp + c.tn,
            positive_rate: ratio(c.tp + c.fp, c.total()),
            tpr: ratio(c.tp, c.tp + c.fn_),
            fpr: ratio(c.fp, c.fp + c.tn),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRates {
    pub twitter: [LabelRates; N_LABELS],
    pub reddit: [LabelRates; N_LABELS],
}

impl GroupRates {
    pub fn from_records<'a, I: IntoIterator<Item = &'a PredictionRecord>>(records: I) -> Self {
        let mut tw = ConfusionCounts::default();
        let mut rd = ConfusionCounts::default();
        for r in records {
            match r.group {
                Platform::Twitter => tw.observe(r.gold, r.predicted),
                Platform::Reddit => rd.observe(r.gold, r.predicted),
            }
        }
        GroupRates {
            twitter: tw.labels.map(LabelRates::from_counts),
            reddit: rd.labels.map(LabelRates::from_counts),
        }
    }

    pub fn get(&self, group: Platform, label: MoralLabel) -> &LabelRates {
        match group {
            Platform::Twitter => &self.twitter[label.index()],
            Platform::Reddit => &self.reddit[label.index()],
        }
    }
}

pub fn group_rates(records: &[PredictionRecord]) -> GroupRates {
    GroupRates::from_records(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpDifference {
    /// Twitter positive rate minus Reddit positive rate.
    pub signed: f64,
    pub abs: f64,
}

pub fn dp_difference(rates: &GroupRates, label: MoralLabel) -> Option<DpDifference> {
    let t = rates.get(Platform::Twitter, label).positive_rate?;
    let r = rates.get(Platform::Reddit, label).positive_rate?;
    let signed = t - r;
    Some(DpDifference { signed, abs: signed.abs() })
}

/// `max(|ΔTPR|, |ΔFPR|)`; undefined if any of the four rates is.
pub fn eo_difference(rates: &GroupRates, label: MoralLabel) -> Option<f64> {
    let t = rates.get(Platform::Twitter, label);
    let r = rates.get(Platform::Reddit, label);
    let tpr_gap = (t.tpr? - r.tpr?).abs();
    let fpr_gap = (t.fpr? - r.fpr?).abs();
    Some(tpr_gap.max(fpr_gap))
}

/// Predicted-positive rate per label over a record stream.
pub fn positive_rates<'a, I: IntoIterator<Item = &'a PredictionRecord>>(records: I) -> [Option<f64>; N_LABELS] {
    let mut pos = [0u64; N_LABELS];
    let mut n = 0u64;
    for r in records {
        n += 1;
        for (i, p) in pos.iter_mut().enumerate() {
            *p += r.predicted.bit(i) as u64;
        }
    }
    pos.map(|p| ratio(p, n))
}

/// Per-label predicted-positive rates keyed by experiment direction.
pub type DirectionRates = BTreeMap<Direction, [Option<f64>; N_LABELS]>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mfc {
    pub per_label: [f64; N_LABELS],
    pub aggregate: f64,
}

/// MFC from per-label cross-direction differences.
pub fn mfc_from_diffs(diffs: [f64; N_LABELS]) -> Mfc {
    let per_label = diffs.map(|d| 1.0 - d);
    let aggregate = 1.0 - diffs.iter().sum::<f64>() / N_LABELS as f64;
    Mfc { per_label, aggregate }
}

pub fn mfc(rates: &DirectionRates) -> Result<Mfc, FairnessError> {
    let get = |d: Direction| rates.get(&d).ok_or(FairnessError::MissingDirection(d));
    let rt = get(Direction::REDDIT_TO_TWITTER)?;
    let tr = get(Direction::TWITTER_TO_REDDIT)?;
    let mut diffs = [0.0; N_LABELS];
    for label in MoralLabel::ALL {
        let i = label.index();
        let a = rt[i].ok_or(FairnessError::UndefinedRate { direction: Direction::REDDIT_TO_TWITTER, label })?;
        let b = tr[i].ok_or(FairnessError::UndefinedRate { direction: Direction::TWITTER_TO_REDDIT, label })?;
        diffs[i] = (a - b).abs();
    }
    Ok(mfc_from_diffs(diffs))
}

/// Point value with optional percentile bounds; `value: None` marks an undefined quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Estimate {
    pub value: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Estimate {
    pub fn point(value: Option<f64>) -> Self {
        Estimate { value, lo: None, hi: None }
    }

    pub(crate) fn from_bootstrap(value: Option<f64>, b: Result<BootstrapOutcome, BootstrapError>) -> Self {
        match b {
            Ok(o) => Estimate { value: Some(o.estimate.point), lo: Some(o.estimate.lo), hi: Some(o.estimate.hi) },
            Err(_) => Estimate::point(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelFairness {
    pub dp_signed: Estimate,
    pub dp_abs: Estimate,
    pub eo: Estimate,
    pub mfc: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub n_records: usize,
    /// Cross-domain directions that contributed records.
    pub directions: Vec<Direction>,
    pub per_label: BTreeMap<MoralLabel, LabelFairness>,
    pub mfc_aggregate: Estimate,
    pub rates: GroupRates,
}

/// A record tagged with the experiment it came from.
pub type Tagged<'a> = (Direction, &'a PredictionRecord);

const STATS_PER_LABEL: usize = 4;

fn fairness_statistics(pool: &Resample<Tagged>) -> Vec<Option<f64>> {
    let rates = GroupRates::from_records(pool.iter().map(|(_, r)| *r));
    let by_dir: DirectionRates = [Direction::REDDIT_TO_TWITTER, Direction::TWITTER_TO_REDDIT]
        .into_iter()
        .map(|d| (d, positive_rates(pool.iter().filter(|(rd, _)| *rd == d).map(|(_, r)| *r))))
        .collect();
    let m = mfc(&by_dir).ok();
    let mut out = Vec::with_capacity(N_LABELS * STATS_PER_LABEL + 1);
    for label in MoralLabel::ALL {
        let dp = dp_difference(&rates, label);
        out.push(dp.map(|d| d.signed));
        out.push(dp.map(|d| d.abs));
        out.push(eo_difference(&rates, label));
        out.push(m.map(|m| m.per_label[label.index()]));
    }
    out.push(m.map(|m| m.aggregate));
    out
}

/// ΔDP, ΔEO and MFC with bootstrap intervals over the union of the given
/// cross-domain prediction sets. Records are resampled as one pool.
pub fn fairness_report(sets: &[&PredictionSet], spec: &BootstrapSpec) -> Result<FairnessReport, FairnessError> {
    let mut directions = Vec::new();
    for s in sets {
        if !s.meta.direction.is_cross_domain() {
            return Err(FairnessError::NotCrossDomain { direction: s.meta.direction });
        }
        if !directions.contains(&s.meta.direction) {
            directions.push(s.meta.direction);
        }
    }
    directions.sort();
    let pool: Vec<Tagged> = sets
        .iter()
        .flat_map(|s| s.records.iter().map(move |r| (s.meta.direction, r)))
        .collect();
    if pool.is_empty() {
        return Err(FairnessError::Empty);
    }
    let point = fairness_statistics(&Resample::full(&pool));
    let boots = bootstrap_many(fairness_statistics, &pool, spec)?;
    let est: Vec<Estimate> = point.iter().zip(boots).map(|(p, b)| Estimate::from_bootstrap(*p, b)).collect();
    let per_label = MoralLabel::ALL
        .iter()
        .map(|&l| {
            let k = l.index() * STATS_PER_LABEL;
            (l, LabelFairness { dp_signed: est[k], dp_abs: est[k + 1], eo: est[k + 2], mfc: est[k + 3] })
        })
        .collect();
    Ok(FairnessReport {
        n_records: pool.len(),
        directions,
        per_label,
        mfc_aggregate: est[N_LABELS * STATS_PER_LABEL],
        rates: GroupRates::from_records(pool.iter().map(|(_, r)| *r)),
    })
}
