//! Bag-of-characters feature encoding over a training-set vocabulary.

use std::collections::HashMap;

use crate::dataset::{UrlRecord, MARKER};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("cannot build a vocabulary from an empty training set")]
    EmptyTrainingSet,
}

/// Frequency normalization for feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyMode {
    /// Counts divided by the in-vocabulary total (all-zero when the total is 0).
    Relative,
    /// Raw character counts.
    Absolute,
}

impl std::str::FromStr for FrequencyMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relative" => Ok(FrequencyMode::Relative),
            "absolute" => Ok(FrequencyMode::Absolute),
            other => Err(format!("unknown frequency mode {other:?}")),
        }
    }
}

/// Distinct characters of the training split, ordered by descending
/// frequency with ties broken by code point. Each character owns a fixed
/// position in every feature vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocabulary {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharVocabulary {
    pub fn build(training: &[UrlRecord]) -> Result<Self, FeatureError> {
        if training.is_empty() {
            return Err(FeatureError::EmptyTrainingSet);
        }
        let mut counts: HashMap<char, u64> = HashMap::new();
        for rec in training {
            for c in rec.canonical.chars() {
                if c != MARKER {
                    *counts.entry(c).or_insert(0) += 1;
                }
            }
        }
        let mut chars: Vec<(char, u64)> = counts.into_iter().collect();
        chars.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let chars: Vec<char> = chars.into_iter().map(|(c, _)| c).collect();
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(CharVocabulary { chars, index })
    }

    pub fn from_chars(chars: Vec<char>) -> Self {
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        CharVocabulary { chars, index }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }
}

/// Encode a standardized record as a bag-of-characters vector of dimension
/// `vocab.len()`. Markers and out-of-vocabulary characters are ignored.
pub fn encode(record: &UrlRecord, vocab: &CharVocabulary, mode: FrequencyMode) -> Vec<f64> {
    let mut values = vec![0.0f64; vocab.len()];
    let mut total = 0.0f64;
    for c in record.canonical.chars() {
        if let Some(i) = vocab.index_of(c) {
            values[i] += 1.0;
            total += 1.0;
        }
    }
    if mode == FrequencyMode::Relative && total > 0.0 {
        for v in &mut values {
            *v /= total;
        }
    }
    values
}

pub fn encode_all(
    records: &[UrlRecord],
    vocab: &CharVocabulary,
    mode: FrequencyMode,
) -> Vec<Vec<f64>> {
    records.iter().map(|r| encode(r, vocab, mode)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(s: &str, label: i8) -> UrlRecord {
        UrlRecord::new(s, label)
    }

    #[test]
    fn vocabulary_frequency_order() {
        let v = CharVocabulary::build(&[rec("aab", 1)]).unwrap();
        assert_eq!(v.chars(), &['a', 'b']);
        assert!(CharVocabulary::build(&[]).is_err());
    }

    #[test]
    fn vocabulary_excludes_marker_and_is_training_scoped() {
        let v = CharVocabulary::build(&[rec("ab", 1)]).unwrap();
        assert_eq!(v.index_of(MARKER), None);
        assert_eq!(v.index_of('z'), None, "test-only characters are absent");
    }

    #[test]
    fn vocabulary_deterministic() {
        let train = vec![rec("abcabc", 1), rec("cab.net", -1)];
        let a = CharVocabulary::build(&train).unwrap();
        let b = CharVocabulary::build(&train).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn encode_relative_and_absolute() {
        let vocab = CharVocabulary::from_chars(vec!['a', 'b', 'c']);
        let r = rec("aab", 1);
        assert_eq!(
            encode(&r, &vocab, FrequencyMode::Relative),
            vec![2.0 / 3.0, 1.0 / 3.0, 0.0]
        );
        assert_eq!(
            encode(&r, &vocab, FrequencyMode::Absolute),
            vec![2.0, 1.0, 0.0]
        );
    }

    #[test]
    fn encode_all_marker_canonical_is_zero() {
        let vocab = CharVocabulary::from_chars(vec!['a', 'b']);
        let r = rec("", 1);
        assert_eq!(encode(&r, &vocab, FrequencyMode::Relative), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        // charset avoids 'w' and ':' so shuffles cannot form a strippable prefix
        fn encode_permutation_consistent(s in "[a-v.]{1,80}", seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let vocab = CharVocabulary::build(&[rec(&s, 1)]).unwrap();
            let mut chars: Vec<char> = s.chars().collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            chars.shuffle(&mut rng);
            let shuffled: String = chars.into_iter().collect();
            let a = encode(&rec(&s, 1), &vocab, FrequencyMode::Relative);
            let b = encode(&rec(&shuffled, 1), &vocab, FrequencyMode::Relative);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn relative_encoding_sums_to_one(s in "[a-z]{1,100}") {
            let vocab = CharVocabulary::build(&[rec(&s, 1)]).unwrap();
            let v = encode(&rec(&s, 1), &vocab, FrequencyMode::Relative);
            let sum: f64 = v.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
