//! Corpus ingestion: raw MFTC / MFRC parsing, annotator aggregation, text
//! cleaning, label harmonization, canonical datasets and seeded splits.

mod clean;
mod harmonize;
mod mfrc;
mod mftc;
mod split;
mod stats;

pub use clean::{clean_text, RETAINED_PUNCTUATION};
pub use harmonize::{
    aggregate_annotations, classify, harmonize_labels, normalize_label, Harmonized, SourceLabel,
    DEFAULT_AGREEMENT,
};
pub use mfrc::parse_mfrc;
pub use mftc::parse_mftc;
pub use split::{split_in_domain, Split, SplitSpec, SHUFFLE_ALGORITHM};
pub use stats::{corpus_stats, CorpusStats, WordStats};

use crate::labels::{LabelSet, MoralLabel, Platform};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("duplicate annotation: text `{text_id}` annotated twice by `{annotator_id}`")]
    DuplicateAnnotation { text_id: String, annotator_id: String },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("empty annotation list")]
    EmptyAnnotations,
    #[error("annotations mix text ids `{expected}` and `{found}`")]
    MixedTextIds { expected: String, found: String },
    #[error("unknown label `{label}` for {platform} schema")]
    UnknownLabel { label: String, platform: Platform },
    #[error("agreement threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("invalid split spec: {0}")]
    InvalidSplit(String),
    #[error("dataset of {0} instances is too small to split (need at least 3)")]
    DatasetTooSmall(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io { path: path.display().to_string(), source }
    }
}

/// One annotator's labels for one text, in the source corpus's own schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAnnotation {
    pub text_id: String,
    pub annotator_id: String,
    pub labels: Vec<String>,
}

impl RawAnnotation {
    pub fn new(text_id: &str, annotator_id: &str, labels: Vec<String>) -> Self {
        RawAnnotation { text_id: text_id.into(), annotator_id: annotator_id.into(), labels }
    }

    /// Labels that do not map onto one of the five shared labels
    /// (vices, purity, thin morality, nm/nh, or names outside the schema).
    pub fn flagged(&self, platform: Platform) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|l| !matches!(classify(l, platform), Some(SourceLabel::Target(_))))
            .map(String::as_str)
            .collect()
    }
}

/// A raw text with all its annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedText {
    pub text_id: String,
    pub text: String,
    pub annotations: Vec<RawAnnotation>,
}

/// Output of a corpus parser. Texts are ordered by `text_id`.
#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub platform: Option<Platform>,
    pub texts: Vec<ParsedText>,
    /// Source-label occurrences that do not map to the shared schema, keyed by normalized name.
    pub flagged_labels: BTreeMap<String, usize>,
    /// Label names not in the platform's declared schema at all.
    pub unknown_labels: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

impl ParsedCorpus {
    pub fn n_texts(&self) -> usize {
        self.texts.len()
    }

    pub fn n_annotations(&self) -> usize {
        self.texts.iter().map(|t| t.annotations.len()).sum()
    }

    pub fn annotations(&self) -> impl Iterator<Item = &RawAnnotation> {
        self.texts.iter().flat_map(|t| t.annotations.iter())
    }

    /// Group rows into texts, reject duplicate (text, annotator) pairs and tally label flags.
    pub(crate) fn assemble(
        platform: Platform,
        rows: Vec<(String, String, RawAnnotation)>,
        mut warnings: Vec<String>,
    ) -> Result<Self, IngestError> {
        let mut by_id: BTreeMap<String, ParsedText> = BTreeMap::new();
        for (text_id, text, ann) in rows {
            let entry = by_id.entry(text_id.clone()).or_insert_with(|| ParsedText {
                text_id: text_id.clone(),
                text: text.clone(),
                annotations: Vec::new(),
            });
            if entry.text != text {
                warnings.push(format!("text `{text_id}` appears with differing text; keeping the first"));
            }
            if entry.annotations.iter().any(|a| a.annotator_id == ann.annotator_id) {
                return Err(IngestError::DuplicateAnnotation {
                    text_id,
                    annotator_id: ann.annotator_id,
                });
            }
            entry.annotations.push(ann);
        }
        let mut out = ParsedCorpus {
            platform: Some(platform),
            texts: by_id.into_values().collect(),
            warnings,
            ..Default::default()
        };
        let mut flagged = BTreeMap::new();
        let mut unknown = BTreeMap::new();
        for a in out.annotations() {
            for l in a.flagged(platform) {
                let n = normalize_label(l);
                if classify(&n, platform).is_none() {
                    *unknown.entry(n.clone()).or_insert(0) += 1;
                }
                *flagged.entry(n).or_insert(0) += 1;
            }
        }
        for (l, n) in &unknown {
            log::warn!("{platform}: label `{l}` is not in the corpus schema ({n} occurrences)");
        }
        out.flagged_labels = flagged;
        out.unknown_labels = unknown;
        Ok(out)
    }
}

/// Split a comma-separated annotation string into trimmed, non-empty label names.
pub(crate) fn split_label_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// One cleaned, harmonized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalInstance {
    pub id: String,
    pub platform: Platform,
    pub text: String,
    pub gold: LabelSet,
    pub n_annotators: usize,
}

/// An instance removed during canonicalization, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub platform: Platform,
    pub reason: String,
}

/// Counts that document what canonicalization did to a corpus.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IngestSummary {
    pub n_texts: usize,
    pub n_annotations: usize,
    pub n_kept: usize,
    pub n_excluded: usize,
    pub agreement_threshold: f64,
    pub retained_punctuation: String,
    /// Aggregated source labels dropped by harmonization (kept and excluded instances alike).
    pub dropped_labels: BTreeMap<String, usize>,
    pub unknown_labels: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Canonicalized {
    pub instances: Vec<CanonicalInstance>,
    pub exclusions: Vec<Exclusion>,
    pub summary: IngestSummary,
}

/// Clean, aggregate and harmonize every parsed text.
///
/// Unknown labels do not abort the run: the affected text is excluded with
/// the validation error as its reason.
pub fn canonicalize(
    parsed: &ParsedCorpus,
    platform: Platform,
    agreement: f64,
) -> Result<Canonicalized, IngestError> {
    if !(agreement > 0.0 && agreement <= 1.0) {
        return Err(IngestError::InvalidThreshold(agreement));
    }
    let mut out = Canonicalized {
        summary: IngestSummary {
            n_texts: parsed.n_texts(),
            n_annotations: parsed.n_annotations(),
            agreement_threshold: agreement,
            retained_punctuation: RETAINED_PUNCTUATION.into(),
            unknown_labels: parsed.unknown_labels.clone(),
            ..Default::default()
        },
        ..Default::default()
    };
    for t in &parsed.texts {
        let exclude = |reason: String| Exclusion { id: t.text_id.clone(), platform, reason };
        let text = clean_text(&t.text);
        if text.is_empty() {
            out.exclusions.push(exclude("empty text after cleaning".into()));
            continue;
        }
        let agreed = aggregate_annotations(&t.annotations, agreement)?;
        if agreed.is_empty() {
            out.exclusions.push(exclude("no label reached the agreement threshold".into()));
            continue;
        }
        match harmonize_labels(&agreed, platform) {
            Err(e @ IngestError::UnknownLabel { .. }) => out.exclusions.push(exclude(e.to_string())),
            Err(e) => return Err(e),
            Ok(Harmonized::Excluded { dropped }) => {
                for d in &dropped {
                    *out.summary.dropped_labels.entry(d.clone()).or_insert(0) += 1;
                }
                out.exclusions.push(exclude(format!(
                    "no shared label after harmonization (dropped: {})",
                    dropped.join(", ")
                )));
            }
            Ok(Harmonized::Kept { labels, dropped }) => {
                for d in dropped {
                    *out.summary.dropped_labels.entry(d).or_insert(0) += 1;
                }
                out.instances.push(CanonicalInstance {
                    id: t.text_id.clone(),
                    platform,
                    text,
                    gold: labels,
                    n_annotators: t.annotations.len(),
                });
            }
        }
    }
    out.summary.n_kept = out.instances.len();
    out.summary.n_excluded = out.exclusions.len();
    Ok(out)
}

/// Write records as JSON lines, one per line, fields in declaration order.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IngestError> {
    let file = std::fs::File::create(path).map_err(|e| IngestError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("canonical records always serialize");
        writeln!(w, "{line}").map_err(|e| IngestError::io(path, e))?;
    }
    w.flush().map_err(|e| IngestError::io(path, e))
}

pub fn read_canonical(path: &Path) -> Result<Vec<CanonicalInstance>, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IngestError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: CanonicalInstance = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            path: format!("{}:{}", path.display(), i + 1),
            message: e.to_string(),
        })?;
        if inst.gold.is_empty() || inst.text.is_empty() {
            return Err(IngestError::Parse {
                path: format!("{}:{}", path.display(), i + 1),
                message: "canonical instance needs non-empty text and gold labels".into(),
            });
        }
        out.push(inst);
    }
    Ok(out)
}

/// Positive count per label over a dataset.
pub fn label_counts(dataset: &[CanonicalInstance]) -> [usize; 5] {
    let mut counts = [0; 5];
    for inst in dataset {
        for l in inst.gold.labels() {
            counts[MoralLabel::index(l)] += 1;
        }
    }
    counts
}
