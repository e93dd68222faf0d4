//! Annotator-vote aggregation and mapping of each corpus's native label
//! schema onto the shared five-label schema.

use super::{IngestError, RawAnnotation};
use crate::labels::{LabelSet, MoralLabel, Platform};
use std::collections::{BTreeMap, BTreeSet};

/// Default agreement threshold (fraction of annotators) for a label to be kept.
pub const DEFAULT_AGREEMENT: f64 = 0.5;

/// Where a source-schema label ends up after harmonization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceLabel {
    Target(MoralLabel),
    /// Known to the corpus schema but not shared by both corpora.
    Dropped,
}

/// Normalized form used for all label-name comparisons.
pub fn normalize_label(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Classify a (normalized or raw) label name against a platform's schema.
/// `None` means the name is not part of the declared schema.
pub fn classify(label: &str, platform: Platform) -> Option<SourceLabel> {
    use MoralLabel::*;
    use SourceLabel::*;
    let l = normalize_label(label);
    // Target names are accepted on both platforms so harmonized sets re-harmonize to themselves.
    let shared = match l.as_str() {
        "care" => Some(Target(Care)),
        "fairness" => Some(Target(Fairness)),
        "loyalty" => Some(Target(Loyalty)),
        "authority" => Some(Target(Authority)),
        "non-moral" => Some(Target(NonMoral)),
        "purity" => Some(Dropped),
        _ => None,
    };
    if shared.is_some() {
        return shared;
    }
    match (platform, l.as_str()) {
        (Platform::Reddit, "equality" | "proportionality") => Some(Target(Fairness)),
        (Platform::Reddit, "thin morality") => Some(Dropped),
        (
            Platform::Twitter,
            "harm" | "cheating" | "betrayal" | "subversion" | "degradation" | "nm" | "nh",
        ) => Some(Dropped),
        _ => None,
    }
}

/// Labels whose share of annotator votes reaches `threshold` (inclusive).
///
/// Returned names are normalized (trimmed, lowercase). Each annotator counts
/// at most once per label.
pub fn aggregate_annotations(
    annotations: &[RawAnnotation],
    threshold: f64,
) -> Result<BTreeSet<String>, IngestError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(IngestError::InvalidThreshold(threshold));
    }
    let first = annotations.first().ok_or(IngestError::EmptyAnnotations)?;
    let mut votes: BTreeMap<String, usize> = BTreeMap::new();
    for a in annotations {
        if a.text_id != first.text_id {
            return Err(IngestError::MixedTextIds {
                expected: first.text_id.clone(),
                found: a.text_id.clone(),
            });
        }
        let distinct: BTreeSet<String> = a.labels.iter().map(|l| normalize_label(l)).collect();
        for l in distinct {
            *votes.entry(l).or_default() += 1;
        }
    }
    let n = annotations.len() as f64;
    Ok(votes
        .into_iter()
        .filter(|&(_, v)| v as f64 >= threshold * n)
        .map(|(l, _)| l)
        .collect())
}

/// Result of mapping aggregated source labels onto the shared schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Harmonized {
    Kept {
        labels: LabelSet,
        dropped: Vec<String>,
    },
    /// Nothing survived the mapping; the instance leaves the dataset.
    Excluded { dropped: Vec<String> },
}

pub fn harmonize_labels<S: AsRef<str> + Ord>(
    source_labels: &BTreeSet<S>,
    platform: Platform,
) -> Result<Harmonized, IngestError> {
    let mut labels = LabelSet::EMPTY;
    let mut dropped = Vec::new();
    for raw in source_labels {
        match classify(raw.as_ref(), platform) {
            Some(SourceLabel::Target(l)) => labels.insert(l),
            Some(SourceLabel::Dropped) => dropped.push(normalize_label(raw.as_ref())),
            None => {
                return Err(IngestError::UnknownLabel {
                    label: raw.as_ref().to_string(),
                    platform,
                })
            }
        }
    }
    dropped.sort();
    dropped.dedup();
    Ok(if labels.is_empty() {
        Harmonized::Excluded { dropped }
    } else {
        Harmonized::Kept { labels, dropped }
    })
}
