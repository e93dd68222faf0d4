//! Moral Foundations Twitter Corpus reader.
//!
//! The published file is a JSON array of sub-corpora:
//!
//! ```json
//! [{"Corpus": "ALM",
//!   "Tweets": [{"tweet_id": "1", "tweet_text": "...",
//!               "annotations": [{"annotator": "annotator00", "annotation": "care,purity"}]}]}]
//! ```
//!
//! Each (tweet, annotator) pair is flattened into one [`RawAnnotation`].
//! The reader streams through the array so a malformed or truncated file
//! reports the sub-corpus and tweet it failed on.

use super::{split_label_list, IngestError, ParsedCorpus, RawAnnotation};
use crate::labels::Platform;
use serde::de::{self, DeserializeSeed, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer};
use std::cell::RefCell;
use std::fmt;

#[derive(Deserialize)]
struct RawTweet {
    #[serde(deserialize_with = "string_or_number")]
    tweet_id: String,
    tweet_text: String,
    annotations: Vec<RawTweetAnnotation>,
}

#[derive(Deserialize)]
struct RawTweetAnnotation {
    #[serde(deserialize_with = "string_or_number")]
    annotator: String,
    annotation: String,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(de::Error::custom(format!("expected string or number id, found {other}"))),
    }
}

#[derive(Default)]
struct Cursor {
    corpus: Option<usize>,
    tweet: Option<usize>,
    last_id: Option<String>,
    tweets: Vec<(usize, usize, RawTweet)>,
}

impl Cursor {
    fn path(&self) -> String {
        match (self.corpus, self.tweet) {
            (None, _) => "$".into(),
            (Some(c), None) => format!("$[{c}]"),
            (Some(c), Some(t)) => format!("$[{c}].Tweets[{t}]"),
        }
    }
}

struct CorpusList<'a>(&'a RefCell<Cursor>);
struct Corpus<'a>(&'a RefCell<Cursor>);
struct Tweets<'a>(&'a RefCell<Cursor>);

impl<'de> DeserializeSeed<'de> for CorpusList<'_> {
    type Value = ();
    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<(), D::Error> {
        d.deserialize_seq(self)
    }
}

impl<'de> Visitor<'de> for CorpusList<'_> {
    type Value = ();
    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an array of sub-corpora")
    }
    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<(), A::Error> {
        for i in 0.. {
            {
                let mut c = self.0.borrow_mut();
                c.corpus = Some(i);
                c.tweet = None;
            }
            if seq.next_element_seed(Corpus(self.0))?.is_none() {
                let mut c = self.0.borrow_mut();
                c.corpus = None;
                break;
            }
        }
        Ok(())
    }
}

impl<'de> DeserializeSeed<'de> for Corpus<'_> {
    type Value = ();
    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<(), D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de> Visitor<'de> for Corpus<'_> {
    type Value = ();
    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a sub-corpus object with a `Tweets` array")
    }
    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<(), A::Error> {
        let mut saw_tweets = false;
        while let Some(key) = map.next_key::<String>()? {
            if key == "Tweets" {
                map.next_value_seed(Tweets(self.0))?;
                self.0.borrow_mut().tweet = None;
                saw_tweets = true;
            } else {
                map.next_value::<IgnoredAny>()?;
            }
        }
        if !saw_tweets {
            return Err(de::Error::missing_field("Tweets"));
        }
        Ok(())
    }
}

impl<'de> DeserializeSeed<'de> for Tweets<'_> {
    type Value = ();
    fn deserialize<D: Deserializer<'de>>(self, d: D) -> Result<(), D::Error> {
        d.deserialize_seq(self)
    }
}

impl<'de> Visitor<'de> for Tweets<'_> {
    type Value = ();
    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an array of tweets")
    }
    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<(), A::Error> {
        for j in 0.. {
            self.0.borrow_mut().tweet = Some(j);
            match seq.next_element::<RawTweet>()? {
                Some(t) => {
                    let mut c = self.0.borrow_mut();
                    c.last_id = Some(t.tweet_id.clone());
                    let corpus = c.corpus.unwrap_or(0);
                    c.tweets.push((corpus, j, t));
                }
                None => break,
            }
        }
        Ok(())
    }
}

/// Parse the nested MFTC JSON into one row per (tweet, annotator).
pub fn parse_mftc(raw: &[u8]) -> Result<ParsedCorpus, IngestError> {
    let cursor = RefCell::new(Cursor::default());
    let mut de = serde_json::Deserializer::from_slice(raw);
    let res = CorpusList(&cursor)
        .deserialize(&mut de)
        .and_then(|()| de.end());
    let cursor = cursor.into_inner();
    if let Err(e) = res {
        let after = cursor
            .last_id
            .as_deref()
            .map(|id| format!(" (last complete tweet_id {id})"))
            .unwrap_or_default();
        return Err(IngestError::Parse {
            path: cursor.path(),
            message: format!("{e}{after}"),
        });
    }

    let mut rows = Vec::new();
    for (c, t, tweet) in cursor.tweets {
        if tweet.annotations.is_empty() {
            return Err(IngestError::Parse {
                path: format!("$[{c}].Tweets[{t}].annotations"),
                message: format!("tweet `{}` has no annotations", tweet.tweet_id),
            });
        }
        for (k, a) in tweet.annotations.into_iter().enumerate() {
            let labels = split_label_list(&a.annotation);
            if labels.is_empty() {
                return Err(IngestError::Parse {
                    path: format!("$[{c}].Tweets[{t}].annotations[{k}].annotation"),
                    message: format!("empty label list from annotator `{}`", a.annotator),
                });
            }
            rows.push((
                tweet.tweet_id.clone(),
                tweet.tweet_text.clone(),
                RawAnnotation::new(&tweet.tweet_id, &a.annotator, labels),
            ));
        }
    }
    let warnings = if rows.is_empty() {
        log::warn!("MFTC input contains no tweets");
        vec!["input contains no tweets".to_string()]
    } else {
        Vec::new()
    };
    ParsedCorpus::assemble(Platform::Twitter, rows, warnings)
}
