use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ModelError;
use crate::ingest::LabelSet;
use crate::tsv;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const MIN_LABELS: usize = 5;

/// Disjoint train/test partition of the labeled entities. Both sides are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainTestSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Shuffle the labeled ids with a seeded ChaCha8 stream and cut at
/// `round(n * train_fraction)`, keeping at least one id on each side.
pub fn split_labels(labels: &LabelSet, seed: u64, train_fraction: f64) -> Result<TrainTestSplit, ModelError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ModelError::InvalidTrainFraction(train_fraction));
    }
    let n = labels.len();
    if n < MIN_LABELS {
        return Err(ModelError::TooFewLabels {
            found: n,
            required: MIN_LABELS,
        });
    }
    let mut ids: Vec<String> = labels.labels.keys().cloned().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut test = ids.split_off(n_train);
    let mut train = ids;
    train.sort();
    test.sort();
    Ok(TrainTestSplit { train, test, seed })
}

impl TrainTestSplit {
    /// `kb_id  train|test`
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# seed={}\n", self.seed);
        let mut all: Vec<(&str, &str)> = self
            .train
            .iter()
            .map(|id| (id.as_str(), "train"))
            .chain(self.test.iter().map(|id| (id.as_str(), "test")))
            .collect();
        all.sort();
        for (id, side) in all {
            let _ = writeln!(out, "{id}\t{side}");
        }
        out
    }

    pub fn from_tsv(text: &str, seed: u64) -> Result<Self, ModelError> {
        let mut split = TrainTestSplit {
            train: Vec::new(),
            test: Vec::new(),
            seed,
        };
        for line in tsv::data_lines(text) {
            match line.fields.as_slice() {
                [id, "train"] => split.train.push(id.to_string()),
                [id, "test"] => split.test.push(id.to_string()),
                _ => {
                    return Err(ModelError::Parse {
                        line: line.number,
                        message: "expected `kb_id<TAB>train|test`".into(),
                    })
                }
            }
        }
        Ok(split)
    }
}
