use super::{CanonicalInstance, IngestError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Shuffle algorithm recorded in split metadata.
pub const SHUFFLE_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64 + Fisher-Yates (rand 0.9 SliceRandom::shuffle) over id-sorted instances";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Train, validation, test fractions.
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(ratios: [f64; 3], seed: u64) -> Result<Self, IngestError> {
        let s = SplitSpec { ratios, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn eighty_ten_ten(seed: u64) -> Self {
        SplitSpec { ratios: [0.8, 0.1, 0.1], seed }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if let Some(r) = self.ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(IngestError::InvalidSplit(format!("fraction {r} outside (0, 1)")));
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(IngestError::InvalidSplit(format!("fractions sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// (train, val, test) sizes: val and test are `floor(n * ratio)`, train takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon keeps e.g. 0.1 * 100 from flooring to 9 through representation error.
        let part = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let val = part(self.ratios[1]);
        let test = part(self.ratios[2]);
        (n - val - test, val, test)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<CanonicalInstance>,
    pub val: Vec<CanonicalInstance>,
    pub test: Vec<CanonicalInstance>,
}

/// Seeded 3-way partition. Instances are sorted by id before shuffling, so
/// the result depends only on the dataset contents and the seed.
pub fn split_in_domain(dataset: &[CanonicalInstance], spec: &SplitSpec) -> Result<Split, IngestError> {
    spec.validate()?;
    if dataset.len() < 3 {
        return Err(IngestError::DatasetTooSmall(dataset.len()));
    }
    let mut items = dataset.to_vec();
    items.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    items.shuffle(&mut rng);
    let (n_train, n_val, _) = spec.sizes(items.len());
    let test = items.split_off(n_train + n_val);
    let val = items.split_off(n_train);
    Ok(Split { train: items, val, test })
}
