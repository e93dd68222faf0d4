//! Synthetic prediction sets with known group rates.
//!
//! Labels are drawn independently of each other. Each record consumes a
//! fixed number of draws from one ChaCha8 stream, twitter records first.

use crate::labels::{Direction, LabelSet, MoralLabel, Platform, N_LABELS};
use crate::predio::{PredictionMeta, PredictionRecord, PredictionSet, DEFAULT_THRESHOLD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{group}/{label}: {field} = {value} outside [0, 1]")]
    Rate { group: Platform, label: MoralLabel, field: &'static str, value: f64 },
    #[error("{group}: missing parameters for label `{label}`")]
    MissingLabel { group: Platform, label: MoralLabel },
    #[error("{0}: n must be at least 1")]
    EmptyGroup(Platform),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelParams {
    pub base_rate: f64,
    pub tpr: f64,
    pub fpr: f64,
}

impl LabelParams {
    pub fn positive_rate(&self) -> f64 {
        self.base_rate * self.tpr + (1.0 - self.base_rate) * self.fpr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    pub n: usize,
    pub labels: BTreeMap<MoralLabel, LabelParams>,
}

impl GroupParams {
    /// Same parameters for every label.
    pub fn uniform(n: usize, p: LabelParams) -> Self {
        GroupParams { n, labels: MoralLabel::ALL.iter().map(|&l| (l, p)).collect() }
    }

    fn param(&self, label: MoralLabel) -> LabelParams {
        self.labels[&label]
    }
}

fn default_model() -> String {
    "synthetic".to_string()
}

fn default_direction() -> Direction {
    Direction::REDDIT_TO_TWITTER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    /// Emit logits consistent with the predicted bits at threshold 0.5.
    #[serde(default)]
    pub logits: bool,
    pub twitter: GroupParams,
    pub reddit: GroupParams,
}

impl SynthConfig {
    pub fn new(seed: u64, twitter: GroupParams, reddit: GroupParams) -> Self {
        SynthConfig { seed, model: default_model(), direction: default_direction(), logits: false, twitter, reddit }
    }

    pub fn group(&self, g: Platform) -> &GroupParams {
        match g {
            Platform::Twitter => &self.twitter,
            Platform::Reddit => &self.reddit,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for g in Platform::ALL {
            let params = self.group(g);
            if params.n == 0 {
                return Err(SynthError::EmptyGroup(g));
            }
            for label in MoralLabel::ALL {
                let p = params.labels.get(&label).ok_or(SynthError::MissingLabel { group: g, label })?;
                for (field, value) in [("base_rate", p.base_rate), ("tpr", p.tpr), ("fpr", p.fpr)] {
                    if !(0.0..=1.0).contains(&value) {
                        return Err(SynthError::Rate { group: g, label, field, value });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let err = |message: String| SynthError::Config { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let cfg = Self::from_json(&text).map_err(|e| err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Draw a prediction set. Same config, same bytes.
pub fn generate(config: &SynthConfig) -> Result<PredictionSet, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(config.twitter.n + config.reddit.n);
    for g in Platform::ALL {
        let params = config.group(g);
        for i in 0..params.n {
            let mut gold = LabelSet::EMPTY;
            let mut predicted = LabelSet::EMPTY;
            let mut logits = [0.0; N_LABELS];
            for label in MoralLabel::ALL {
                let p = params.param(label);
                let is_gold = rng.random::<f64>() < p.base_rate;
                let is_pred = rng.random::<f64>() < if is_gold { p.tpr } else { p.fpr };
                let magnitude = rng.random_range(0.05..4.0);
                if is_gold {
                    gold.insert(label);
                }
                if is_pred {
                    predicted.insert(label);
                }
                logits[label.index()] = if is_pred { magnitude } else { -magnitude };
            }
            records.push(PredictionRecord {
                id: format!("syn-{g}-{i:06}"),
                group: g,
                gold,
                predicted,
                logits: config.logits.then_some(logits),
            });
        }
    }
    let meta = PredictionMeta {
        model: config.model.clone(),
        direction: config.direction,
        threshold: DEFAULT_THRESHOLD,
        seed: config.seed.to_string(),
    };
    Ok(PredictionSet { meta, records })
}

/// Generate, then split by group into the two cross-domain sets whose
/// target is that group (twitter records → `MFRC->MFTC`, reddit → `MFTC->MFRC`).
pub fn generate_cross_domain(config: &SynthConfig) -> Result<[PredictionSet; 2], SynthError> {
    let all = generate(config)?;
    Ok([Platform::Twitter, Platform::Reddit].map(|g| PredictionSet {
        meta: PredictionMeta { direction: Direction::new(g.other(), g), ..all.meta.clone() },
        records: all.records.iter().filter(|r| r.group == g).cloned().collect(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedRates {
    pub positive_rate: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedLabel {
    pub twitter: ExpectedRates,
    pub reddit: ExpectedRates,
    pub dp_signed: f64,
    pub dp_abs: f64,
    pub eo: f64,
}

/// Closed-form expectations of the group rates and gaps.
pub fn expected_metrics(config: &SynthConfig) -> Result<BTreeMap<MoralLabel, ExpectedLabel>, SynthError> {
    config.validate()?;
    let rates = |g: Platform, l: MoralLabel| {
        let p = config.group(g).param(l);
        ExpectedRates { positive_rate: p.positive_rate(), tpr: p.tpr, fpr: p.fpr }
    };
    Ok(MoralLabel::ALL
        .iter()
        .map(|&l| {
            let (t, r) = (rates(Platform::Twitter, l), rates(Platform::Reddit, l));
            let dp_signed = t.positive_rate - r.positive_rate;
            let eo = (t.tpr - r.tpr).abs().max((t.fpr - r.fpr).abs());
            (l, ExpectedLabel { twitter: t, reddit: r, dp_signed, dp_abs: dp_signed.abs(), eo })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::{dp_difference, group_rates};
    use crate::metrics::{confusion, micro_f1};

    fn lp(base_rate: f64, tpr: f64, fpr: f64) -> LabelParams {
        LabelParams { base_rate, tpr, fpr }
    }

    #[test]
    fn perfect_classifier() {
        let g = GroupParams::uniform(300, lp(0.4, 1.0, 0.0));
        let set = generate(&SynthConfig::new(1, g.clone(), g)).unwrap();
        assert!(set.records.iter().all(|r| r.gold == r.predicted));
        assert_eq!(micro_f1(&confusion(&set.records).unwrap()), 1.0);
    }

    #[test]
    fn same_seed_same_bytes() {
        let g = GroupParams::uniform(50, lp(0.3, 0.7, 0.2));
        let mut cfg = SynthConfig::new(9, g.clone(), g);
        cfg.logits = true;
        let a = generate(&cfg).unwrap().to_wire().unwrap();
        assert_eq!(a, generate(&cfg).unwrap().to_wire().unwrap());
        cfg.seed = 10;
        assert_ne!(a, generate(&cfg).unwrap().to_wire().unwrap());
    }

    #[test]
    fn logits_agree_with_predictions() {
        let g = GroupParams::uniform(100, lp(0.5, 0.6, 0.3));
        let mut cfg = SynthConfig::new(2, g.clone(), g);
        cfg.logits = true;
        generate(&cfg).unwrap().validate().unwrap();
    }

    #[test]
    fn fpr_gap_shows_up_as_dp() {
        // base rates 0: every prediction is a false positive, dp = 0.5 - 0.1
        let cfg = SynthConfig::new(
            17,
            GroupParams::uniform(10_000, lp(0.0, 0.5, 0.5)),
            GroupParams::uniform(10_000, lp(0.0, 0.5, 0.1)),
        );
        let rates = group_rates(&generate(&cfg).unwrap().records);
        for l in MoralLabel::ALL {
            let dp = dp_difference(&rates, l).unwrap();
            assert!((dp.abs - 0.4).abs() < 0.03, "{l}: {}", dp.abs);
        }
    }

    #[test]
    fn expected_values() {
        let cfg = SynthConfig::new(
            1,
            GroupParams::uniform(1, lp(0.5, 0.8, 0.2)),
            GroupParams::uniform(1, lp(0.5, 0.5, 0.1)),
        );
        let e = expected_metrics(&cfg).unwrap();
        let care = e[&MoralLabel::Care];
        assert!((care.twitter.positive_rate - 0.5).abs() < 1e-15);
        assert!((care.eo - 0.3).abs() < 1e-15);

        let same = SynthConfig::new(1, cfg.twitter.clone(), cfg.twitter.clone());
        assert!(expected_metrics(&same).unwrap().values().all(|v| v.dp_abs == 0.0 && v.eo == 0.0));

        // TPR = FPR = p gives rate p at any base rate
        let flat = SynthConfig::new(1, GroupParams::uniform(1, lp(0.9, 0.35, 0.35)), GroupParams::uniform(1, lp(0.1, 0.35, 0.35)));
        for v in expected_metrics(&flat).unwrap().values() {
            assert!((v.twitter.positive_rate - 0.35).abs() < 1e-15);
            assert!(v.dp_abs < 1e-15);
        }
    }

    #[test]
    fn empirical_rates_converge() {
        let mut tw = GroupParams::uniform(10_000, lp(0.3, 0.8, 0.1));
        tw.labels.insert(MoralLabel::Authority, lp(0.2, 0.6, 0.25));
        let rd = GroupParams::uniform(10_000, lp(0.45, 0.55, 0.05));
        let cfg = SynthConfig::new(123, tw, rd);
        let rates = group_rates(&generate(&cfg).unwrap().records);
        let expected = expected_metrics(&cfg).unwrap();
        for l in MoralLabel::ALL {
            for g in Platform::ALL {
                let e = match g {
                    Platform::Twitter => expected[&l].twitter,
                    Platform::Reddit => expected[&l].reddit,
                };
                let got = rates.get(g, l);
                let p = e.positive_rate;
                let se = (p * (1.0 - p) / 10_000.0).sqrt();
                assert!((got.positive_rate.unwrap() - p).abs() < 3.0 * se, "{g}/{l}");
                let base = cfg.group(g).param(l).base_rate;
                let se_tpr = (e.tpr * (1.0 - e.tpr) / (10_000.0 * base)).sqrt();
                assert!((got.tpr.unwrap() - e.tpr).abs() < 3.5 * se_tpr, "{g}/{l} tpr");
            }
        }
    }

    #[test]
    fn validation() {
        let g = GroupParams::uniform(5, lp(0.5, 1.2, 0.0));
        assert!(matches!(
            SynthConfig::new(1, g.clone(), g.clone()).validate(),
            Err(SynthError::Rate { field: "tpr", .. })
        ));
        let mut g = GroupParams::uniform(5, lp(0.5, 1.0, 0.0));
        g.labels.remove(&MoralLabel::Care);
        assert!(matches!(
            SynthConfig::new(1, g.clone(), g).validate(),
            Err(SynthError::MissingLabel { label: MoralLabel::Care, .. })
        ));
        let z = GroupParams::uniform(0, lp(0.5, 0.5, 0.5));
        assert!(matches!(SynthConfig::new(1, z.clone(), z).validate(), Err(SynthError::EmptyGroup(Platform::Twitter))));
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{
            "seed": 5,
            "twitter": {"n": 3, "labels": {
                "authority": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1},
                "care": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1},
                "fairness": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1},
                "loyalty": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1},
                "non-moral": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1}}},
            "reddit": {"n": 2, "labels": {
                "authority": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1},
                "care": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1},
                "fairness": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1},
                "loyalty": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1},
                "non-moral": {"base_rate": 0.1, "tpr": 0.5, "fpr": 0.1}}}
        }"#;
        let cfg = SynthConfig::from_json(text).unwrap();
        assert_eq!(cfg.direction, Direction::REDDIT_TO_TWITTER);
        assert_eq!(cfg.model, "synthetic");
        let back = SynthConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(generate(&cfg).unwrap().records.len(), 5);
    }

    #[test]
    fn cross_domain_split_tags_targets() {
        let g = GroupParams::uniform(20, lp(0.5, 0.5, 0.5));
        let [rt, tr] = generate_cross_domain(&SynthConfig::new(3, g.clone(), g)).unwrap();
        assert_eq!(rt.meta.direction, Direction::REDDIT_TO_TWITTER);
        assert!(rt.records.iter().all(|r| r.group == Platform::Twitter));
        assert_eq!(tr.meta.direction, Direction::TWITTER_TO_REDDIT);
        assert_eq!(tr.records.len(), 20);
    }
}
