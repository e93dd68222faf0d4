//! The harmonized moral label schema shared by both corpora.
//!
//! Label order is fixed and alphabetical: authority, care, fairness,
//! loyalty, non-moral. Every bit vector, prediction-file column and
//! per-label table in this crate uses that order.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Number of harmonized labels.
pub const N_LABELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoralLabel {
    Authority,
    Care,
    Fairness,
    Loyalty,
    NonMoral,
}

impl MoralLabel {
    pub const ALL: [MoralLabel; N_LABELS] = [
        MoralLabel::Authority,
        MoralLabel::Care,
        MoralLabel::Fairness,
        MoralLabel::Loyalty,
        MoralLabel::NonMoral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            MoralLabel::Authority => "authority",
            MoralLabel::Care => "care",
            MoralLabel::Fairness => "fairness",
            MoralLabel::Loyalty => "loyalty",
            MoralLabel::NonMoral => "non-moral",
        }
    }
}

impl fmt::Display for MoralLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MoralLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MoralLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown label `{s}`"))
    }
}

impl Serialize for MoralLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for MoralLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Presence vector over the five harmonized labels, stored as a bitmask
/// (bit `i` is label `MoralLabel::ALL[i]`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct LabelSet(u8);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);
    const MASK: u8 = (1 << N_LABELS) - 1;

    pub fn from_bits(bits: [bool; N_LABELS]) -> Self {
        let mut s = LabelSet::EMPTY;
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                s.0 |= 1 << i;
            }
        }
        s
    }

    pub fn from_mask(mask: u8) -> Option<Self> {
        (mask & !Self::MASK == 0).then_some(LabelSet(mask))
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn from_labels<I: IntoIterator<Item = MoralLabel>>(labels: I) -> Self {
        let mut s = LabelSet::EMPTY;
        for l in labels {
            s.insert(l);
        }
        s
    }

    pub fn insert(&mut self, label: MoralLabel) {
        self.0 |= 1 << label.index();
    }

    pub fn contains(self, label: MoralLabel) -> bool {
        self.bit(label.index())
    }

    pub fn bit(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn bits(self) -> [bool; N_LABELS] {
        std::array::from_fn(|i| self.bit(i))
    }

    /// Labels present, in the fixed (alphabetical) order.
    pub fn labels(self) -> impl Iterator<Item = MoralLabel> {
        MoralLabel::ALL.into_iter().filter(move |l| self.contains(*l))
    }

    /// Five `0`/`1` characters in label order, as used by prediction files.
    pub fn to_bit_string(self) -> String {
        (0..N_LABELS)
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    pub fn parse_bit_string(s: &str) -> Result<Self, BitStringError> {
        let n = s.chars().count();
        if n != N_LABELS {
            return Err(BitStringError::Arity(n));
        }
        let mut bits = [false; N_LABELS];
        for (i, c) in s.chars().enumerate() {
            bits[i] = match c {
                '0' => false,
                '1' => true,
                other => return Err(BitStringError::BadChar(other)),
            };
        }
        Ok(LabelSet::from_bits(bits))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BitStringError {
    #[error("arity {0}")]
    Arity(usize),
    #[error("invalid bit character {0:?}")]
    BadChar(char),
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.labels().map(|l| l.name())).finish()
    }
}

// Serialized as an alphabetical list of label names.
impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.labels())
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let labels = Vec::<MoralLabel>::deserialize(d)?;
        Ok(LabelSet::from_labels(labels))
    }
}

/// Source platform of a text; the sensitive group attribute in the fairness audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Twitter,
    Reddit,
}

impl Platform {
    pub const ALL: [Platform; 2] = [Platform::Twitter, Platform::Reddit];

    pub fn name(self) -> &'static str {
        match self {
            Platform::Twitter => "twitter",
            Platform::Reddit => "reddit",
        }
    }

    /// Corpus tag used in direction strings.
    pub fn corpus(self) -> &'static str {
        match self {
            Platform::Twitter => "MFTC",
            Platform::Reddit => "MFRC",
        }
    }

    pub fn other(self) -> Platform {
        match self {
            Platform::Twitter => Platform::Reddit,
            Platform::Reddit => Platform::Twitter,
        }
    }

    fn from_corpus(s: &str) -> Option<Platform> {
        match s {
            "MFTC" => Some(Platform::Twitter),
            "MFRC" => Some(Platform::Reddit),
            _ => None,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Platform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "twitter" => Ok(Platform::Twitter),
            "reddit" => Ok(Platform::Reddit),
            other => Err(format!("unknown platform `{other}`")),
        }
    }
}

/// Training corpus → evaluation corpus, e.g. `MFRC->MFTC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Direction {
    pub source: Platform,
    pub target: Platform,
}

impl Direction {
    pub const REDDIT_TO_TWITTER: Direction = Direction {
        source: Platform::Reddit,
        target: Platform::Twitter,
    };
    pub const TWITTER_TO_REDDIT: Direction = Direction {
        source: Platform::Twitter,
        target: Platform::Reddit,
    };
    pub const TWITTER_IN_DOMAIN: Direction = Direction {
        source: Platform::Twitter,
        target: Platform::Twitter,
    };
    pub const REDDIT_IN_DOMAIN: Direction = Direction {
        source: Platform::Reddit,
        target: Platform::Reddit,
    };

    /// The four experiment scenarios, in-domain first.
    pub const ALL: [Direction; 4] = [
        Direction::REDDIT_IN_DOMAIN,
        Direction::TWITTER_IN_DOMAIN,
        Direction::REDDIT_TO_TWITTER,
        Direction::TWITTER_TO_REDDIT,
    ];

    pub fn new(source: Platform, target: Platform) -> Self {
        Direction { source, target }
    }

    pub fn is_cross_domain(self) -> bool {
        self.source != self.target
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.source.corpus(), self.target.corpus())
    }
}

impl FromStr for Direction {
    type Err = String;

    /// Accepts `MFRC->MFTC` and the arrow form `MFRC→MFTC`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("->")
            .or_else(|| s.split_once('→'))
            .ok_or_else(|| format!("direction `{s}` must look like MFRC->MFTC"))?;
        let source = Platform::from_corpus(a.trim())
            .ok_or_else(|| format!("direction `{s}`: unknown source corpus `{a}`"))?;
        let target = Platform::from_corpus(b.trim())
            .ok_or_else(|| format!("direction `{s}`: unknown target corpus `{b}`"))?;
        Ok(Direction { source, target })
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_order_is_alphabetical() {
        let names: Vec<_> = MoralLabel::ALL.iter().map(|l| l.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn bit_string_round_trip_and_errors() {
        let s = LabelSet::from_labels([MoralLabel::Care, MoralLabel::NonMoral]);
        assert_eq!(s.to_bit_string(), "01001");
        assert_eq!(LabelSet::parse_bit_string("01001").unwrap(), s);
        assert_eq!(
            LabelSet::parse_bit_string("0100"),
            Err(BitStringError::Arity(4))
        );
        assert_eq!(
            LabelSet::parse_bit_string("01x01"),
            Err(BitStringError::BadChar('x'))
        );
    }

    #[test]
    fn label_set_serializes_alphabetically() {
        let s = LabelSet::from_labels([MoralLabel::Loyalty, MoralLabel::Authority]);
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"["authority","loyalty"]"#);
        let back: LabelSet = serde_json::from_str(r#"["loyalty","authority"]"#).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn direction_parsing() {
        assert_eq!("MFRC->MFTC".parse::<Direction>().unwrap(), Direction::REDDIT_TO_TWITTER);
        assert_eq!("MFTC→MFRC".parse::<Direction>().unwrap(), Direction::TWITTER_TO_REDDIT);
        assert!("MFTC".parse::<Direction>().is_err());
        assert!("MFTC->XYZ".parse::<Direction>().is_err());
        assert_eq!(Direction::TWITTER_TO_REDDIT.to_string(), "MFTC->MFRC");
    }
}
