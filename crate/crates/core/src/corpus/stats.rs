use super::{label_counts, CanonicalInstance};
use crate::labels::MoralLabel;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordStats {
    pub min: usize,
    pub median: f64,
    pub mean: f64,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub n_instances: usize,
    pub label_counts: BTreeMap<MoralLabel, usize>,
    /// `None` for an empty dataset.
    pub word_counts: Option<WordStats>,
}

pub fn corpus_stats(dataset: &[CanonicalInstance]) -> CorpusStats {
    let counts = label_counts(dataset);
    let label_counts = MoralLabel::ALL.iter().map(|l| (*l, counts[l.index()])).collect();
    let mut words: Vec<usize> = dataset.iter().map(|i| i.text.split_whitespace().count()).collect();
    words.sort_unstable();
    let word_counts = (!words.is_empty()).then(|| {
        let n = words.len();
        let median = if n % 2 == 1 {
            words[n / 2] as f64
        } else {
            (words[n / 2 - 1] + words[n / 2]) as f64 / 2.0
        };
        WordStats {
            min: words[0],
            median,
            mean: words.iter().sum::<usize>() as f64 / n as f64,
            max: words[n - 1],
        }
    });
    CorpusStats { n_instances: dataset.len(), label_counts, word_counts }
}
