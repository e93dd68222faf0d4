//! Prediction-file wire format linking classifiers to the audit.
//!
//! A file is UTF-8 text, tab separated, one record per line:
//!
//! ```text
//! predio-v1	model=distilbert	direction=MFRC->MFTC	threshold=0.5	seed=42
//! t001	twitter	01000	01010	-2.1,3.4,-0.2,0.7,-5
//! t002	twitter	00001	00001
//! ```
//!
//! Header fields appear in that fixed order. Bit strings are five `0`/`1`
//! characters in label order (authority, care, fairness, loyalty,
//! non-moral). The logits column is optional per record; when present the
//! predicted bits must equal `sigmoid(logit) >= threshold`.

// The example above uses literal tabs, as the format does.
#![allow(clippy::tabs_in_doc_comments)]

use crate::labels::{Direction, LabelSet, Platform, N_LABELS};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const FORMAT_VERSION: &str = "predio-v1";

/// Threshold used when a producer does not choose one (sigmoid 0.5, logit 0).
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum PredioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line 1: unsupported format version `{0}` (expected {FORMAT_VERSION})")]
    UnsupportedVersion(String),
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: {field} {message}")]
    Field {
        line: usize,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: predicted bit for {label} is {predicted} but logit {logit} at threshold {threshold} implies {expected}")]
    Inconsistent {
        line: usize,
        label: &'static str,
        logit: f64,
        threshold: f64,
        predicted: u8,
        expected: u8,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("prediction set has no records")]
    Empty,
    #[error("record `{0}` has no logits")]
    MissingLogits(String),
}

/// One evaluated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub id: String,
    pub group: Platform,
    pub gold: LabelSet,
    pub predicted: LabelSet,
    pub logits: Option<[f64; N_LABELS]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMeta {
    pub model: String,
    pub direction: Direction,
    pub threshold: f64,
    /// Free-form seed provenance of the producing run; may be empty.
    pub seed: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub meta: PredictionMeta,
    pub records: Vec<PredictionRecord>,
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Threshold logits into a label set.
pub fn binarize(logits: &[f64; N_LABELS], threshold: f64) -> LabelSet {
    LabelSet::from_bits(std::array::from_fn(|i| sigmoid(logits[i]) >= threshold))
}

fn check_text_field(line: usize, field: &'static str, s: &str) -> Result<(), PredioError> {
    if s.is_empty() {
        return Err(PredioError::Field { line, field, message: "is empty".into() });
    }
    if s.contains(['\t', '\n', '\r']) {
        return Err(PredioError::Field { line, field, message: "contains a tab or line break".into() });
    }
    Ok(())
}

fn check_record(line: usize, r: &PredictionRecord, threshold: f64) -> Result<(), PredioError> {
    check_text_field(line, "id", &r.id)?;
    if let Some(logits) = &r.logits {
        for (i, &z) in logits.iter().enumerate() {
            if !z.is_finite() {
                return Err(PredioError::Field { line, field: "logits", message: format!("value {z} is not finite") });
            }
            let expected = sigmoid(z) >= threshold;
            if expected != r.predicted.bit(i) {
                return Err(PredioError::Inconsistent {
                    line,
                    label: crate::labels::MoralLabel::ALL[i].name(),
                    logit: z,
                    threshold,
                    predicted: r.predicted.bit(i) as u8,
                    expected: expected as u8,
                });
            }
        }
    }
    Ok(())
}

impl PredictionSet {
    pub fn new(meta: PredictionMeta, records: Vec<PredictionRecord>) -> Result<Self, PredioError> {
        let s = PredictionSet { meta, records };
        s.validate()?;
        Ok(s)
    }

    /// Check every invariant. Line numbers in errors refer to the serialized form.
    pub fn validate(&self) -> Result<(), PredioError> {
        check_text_field(1, "model", &self.meta.model)?;
        if self.meta.seed.contains(['\t', '\n', '\r']) {
            return Err(PredioError::Field { line: 1, field: "seed", message: "contains a tab or line break".into() });
        }
        check_threshold(1, self.meta.threshold)?;
        if self.records.is_empty() {
            return Err(PredioError::Empty);
        }
        let mut seen = HashSet::with_capacity(self.records.len());
        for (i, r) in self.records.iter().enumerate() {
            let line = i + 2;
            check_record(line, r, self.meta.threshold)?;
            if !seen.insert(r.id.as_str()) {
                return Err(PredioError::DuplicateId { line, id: r.id.clone() });
            }
        }
        Ok(())
    }

    pub fn has_logits(&self) -> bool {
        self.records.iter().all(|r| r.logits.is_some())
    }

    /// Re-derive predictions from logits at a different threshold.
    pub fn rethreshold(&self, threshold: f64) -> Result<PredictionSet, PredioError> {
        check_threshold(1, threshold)?;
        let records = self
            .records
            .iter()
            .map(|r| {
                let logits = r.logits.ok_or_else(|| PredioError::MissingLogits(r.id.clone()))?;
                Ok(PredictionRecord { predicted: binarize(&logits, threshold), ..r.clone() })
            })
            .collect::<Result<Vec<_>, PredioError>>()?;
        PredictionSet::new(PredictionMeta { threshold, ..self.meta.clone() }, records)
    }

    /// Serialize to the wire format. Fails only if the set is invalid.
    pub fn to_wire(&self) -> Result<String, PredioError> {
        self.validate()?;
        let m = &self.meta;
        let mut out = format!(
            "{FORMAT_VERSION}\tmodel={}\tdirection={}\tthreshold={}\tseed={}\n",
            m.model, m.direction, m.threshold, m.seed
        );
        for r in &self.records {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}",
                r.id,
                r.group,
                r.gold.to_bit_string(),
                r.predicted.to_bit_string()
            );
            if let Some(l) = &r.logits {
                let _ = write!(out, "\t{},{},{},{},{}", l[0], l[1], l[2], l[3], l[4]);
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_wire(text: &str) -> Result<PredictionSet, PredioError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(PredioError::MissingField { line: 1, field: "version" })?;
        let meta = parse_header(header)?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            records.push(parse_record(i + 2, line)?);
        }
        // Validate with the original line numbers intact.
        let mut seen = HashSet::with_capacity(records.len());
        for (line, r) in &records {
            check_record(*line, r, meta.threshold)?;
            if !seen.insert(r.id.as_str()) {
                return Err(PredioError::DuplicateId { line: *line, id: r.id.clone() });
            }
        }
        let records = records.into_iter().map(|(_, r)| r).collect();
        PredictionSet::new(meta, records)
    }
}

fn check_threshold(line: usize, t: f64) -> Result<(), PredioError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(PredioError::Field { line, field: "threshold", message: format!("{t} outside (0, 1)") });
    }
    Ok(())
}

fn parse_header(header: &str) -> Result<PredictionMeta, PredioError> {
    let mut parts = header.split('\t');
    let version = parts.next().unwrap_or_default();
    if version != FORMAT_VERSION {
        return Err(PredioError::UnsupportedVersion(version.into()));
    }
    let mut next = |key: &'static str| -> Result<&str, PredioError> {
        let part = parts.next().ok_or(PredioError::MissingField { line: 1, field: key })?;
        part.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or(PredioError::MissingField { line: 1, field: key })
    };
    let model = next("model")?.to_string();
    let direction = next("direction")?
        .parse()
        .map_err(|message| PredioError::Field { line: 1, field: "direction", message })?;
    let threshold_s = next("threshold")?;
    let threshold: f64 = threshold_s.parse().map_err(|_| PredioError::Field {
        line: 1,
        field: "threshold",
        message: format!("`{threshold_s}` is not a number"),
    })?;
    let seed = next("seed")?.to_string();
    Ok(PredictionMeta { model, direction, threshold, seed })
}

fn parse_bits(line: usize, field: &'static str, s: &str) -> Result<LabelSet, PredioError> {
    LabelSet::parse_bit_string(s).map_err(|e| PredioError::Field { line, field, message: e.to_string() })
}

fn parse_record(line: usize, s: &str) -> Result<(usize, PredictionRecord), PredioError> {
    let cols: Vec<&str> = s.split('\t').collect();
    let get = |i: usize, field: &'static str| cols.get(i).copied().ok_or(PredioError::MissingField { line, field });
    let id = get(0, "id")?.to_string();
    let group = get(1, "group")?
        .parse()
        .map_err(|message| PredioError::Field { line, field: "group", message })?;
    let gold = parse_bits(line, "gold", get(2, "gold")?)?;
    let predicted = parse_bits(line, "predicted", get(3, "predicted")?)?;
    let logits = match cols.get(4) {
        None => None,
        Some(raw) => {
            let vals: Vec<&str> = raw.split(',').collect();
            if vals.len() != N_LABELS {
                return Err(PredioError::Field { line, field: "logits", message: format!("arity {}", vals.len()) });
            }
            let mut out = [0.0; N_LABELS];
            for (slot, v) in out.iter_mut().zip(vals) {
                *slot = v.parse().map_err(|_| PredioError::Field {
                    line,
                    field: "logits",
                    message: format!("`{v}` is not a number"),
                })?;
            }
            Some(out)
        }
    };
    if cols.len() > 5 {
        return Err(PredioError::Field { line, field: "record", message: format!("has {} columns, expected 4 or 5", cols.len()) });
    }
    Ok((line, PredictionRecord { id, group, gold, predicted, logits }))
}

pub fn read_predictions(path: &Path) -> Result<PredictionSet, PredioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| PredioError::Io { path: path.display().to_string(), source })?;
    PredictionSet::from_wire(&text)
}

pub fn write_predictions(set: &PredictionSet, path: &Path) -> Result<(), PredioError> {
    let text = set.to_wire()?;
    std::fs::write(path, text).map_err(|source| PredioError::Io { path: path.display().to_string(), source })
}
