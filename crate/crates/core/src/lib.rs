//! Fairness audit for multi-label moral-foundation classifiers across the
//! Twitter (MFTC) and Reddit (MFRC) corpora.

pub mod corpus;
pub mod correlation;
pub mod fairness;
pub mod labels;
pub mod metrics;
pub mod predio;
pub mod report;
pub mod resampling;
pub mod synth;

pub use labels::{Direction, LabelSet, MoralLabel, Platform, N_LABELS};
