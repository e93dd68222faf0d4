//! Moral Foundations Reddit Corpus reader.
//!
//! Input is the published CSV with one row per (text, annotator). Required
//! columns: `text`, `annotator`, `annotation` (comma-separated labels). An
//! `id` or `text_id` column is used when present; otherwise the id is
//! derived from a SHA-256 of the text so identical texts group together.

use super::{split_label_list, IngestError, ParsedCorpus, RawAnnotation};
use crate::labels::Platform;
use sha2::{Digest, Sha256};

const REQUIRED: [&str; 3] = ["text", "annotator", "annotation"];

fn derived_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    format!("mfrc-{}", &hex::encode(digest)[..16])
}

pub fn parse_mfrc(raw: &[u8]) -> Result<ParsedCorpus, IngestError> {
    if raw.iter().all(u8::is_ascii_whitespace) {
        log::warn!("MFRC input is empty");
        return ParsedCorpus::assemble(Platform::Reddit, Vec::new(), vec!["input is empty".into()]);
    }
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(raw);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Parse { path: "header".into(), message: e.to_string() })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| IngestError::MissingColumn(name.into()))?;
    }
    let [text_col, annotator_col, annotation_col] = idx;
    let id_col = col("id").or_else(|| col("text_id"));

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // Row 1 is the header.
        let path = format!("row {}", i + 2);
        let rec = rec.map_err(|e| IngestError::Parse { path: path.clone(), message: e.to_string() })?;
        let text = &rec[text_col];
        let text_id = match id_col {
            Some(c) if !rec[c].trim().is_empty() => rec[c].trim().to_string(),
            _ => derived_id(text),
        };
        let labels = split_label_list(&rec[annotation_col]);
        if labels.is_empty() {
            return Err(IngestError::Parse { path, message: "empty annotation".into() });
        }
        let annotator = rec[annotator_col].trim();
        if annotator.is_empty() {
            return Err(IngestError::Parse { path, message: "empty annotator".into() });
        }
        rows.push((
            text_id.clone(),
            text.to_string(),
            RawAnnotation::new(&text_id, annotator, labels),
        ));
    }
    let warnings = if rows.is_empty() {
        log::warn!("MFRC input has a header but no rows");
        vec!["input has no rows".to_string()]
    } else {
        Vec::new()
    };
    ParsedCorpus::assemble(Platform::Reddit, rows, warnings)
}
