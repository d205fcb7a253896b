//! Bag-of-words features for the linear SVM baseline.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use indexmap::IndexMap;

use crate::dataset::RatedPair;
use crate::error::{Error, Result};

/// Lowercased tokens: alphanumeric runs, with every punctuation character
/// emitted as its own token.
pub fn bow_tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.to_lowercase().chars() {
        if ch.is_alphanumeric() {
            word.push(ch);
        } else {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// Token -> index map in first-appearance order over the training texts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowVocab {
    index: IndexMap<String, u32>,
}

impl BowVocab {
    /// Build from training-split texts only.
    pub fn build<S: AsRef<str>>(texts: &[S]) -> Result<Self> {
        let mut index = IndexMap::new();
        for text in texts {
            for token in bow_tokenize(text.as_ref()) {
                let next = index.len() as u32;
                index.entry(token).or_insert(next);
            }
        }
        if index.is_empty() {
            return Err(Error::Validation(
                "empty corpus: no tokens to build a vocabulary from".into(),
            ));
        }
        Ok(BowVocab { index })
    }

    pub fn size(&self) -> usize {
        self.index.len()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, u32)> {
        self.index.iter().map(|(t, i)| (t.as_str(), *i))
    }

    /// Persist as a JSON token -> index map.
    pub fn save(&self, path: &Path) -> Result<()> {
        let map: BTreeMap<&str, u32> = self.index.iter().map(|(t, i)| (t.as_str(), *i)).collect();
        serde_json::to_writer_pretty(File::create(path)?, &map)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let map: BTreeMap<String, u32> = serde_json::from_reader(File::open(path)?)?;
        let mut entries: Vec<(String, u32)> = map.into_iter().collect();
        entries.sort_by_key(|(_, i)| *i);
        for (expect, (token, i)) in entries.iter().enumerate() {
            if *i as usize != expect {
                return Err(Error::ArtifactMismatch(format!(
                    "vocabulary indices are not a bijection onto 0..{}: token `{token}` has index {i}",
                    entries.len()
                )));
            }
        }
        Ok(BowVocab {
            index: entries.into_iter().collect(),
        })
    }
}

/// Sparse view of the 2*|vocab| count vector: the sys_ref block (indices
/// `0..|vocab|`) followed by the orig_ref block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureVector {
    dim: usize,
    /// Sorted (index, count) entries with count > 0.
    entries: Vec<(u32, u32)>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, index: usize) -> u32 {
        self.entries
            .binary_search_by_key(&(index as u32), |(i, _)| *i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0)
    }

    pub fn nonzero(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<u32> {
        let mut dense = vec![0u32; self.dim];
        for &(i, c) in &self.entries {
            dense[i as usize] = c;
        }
        dense
    }

    /// Sum of counts in a block (0 = sys_ref, 1 = orig_ref).
    pub fn block_sum(&self, block: usize) -> u64 {
        let half = (self.dim / 2) as u32;
        let range = if block == 0 { 0..half } else { half..2 * half };
        self.entries
            .iter()
            .filter(|(i, _)| range.contains(i))
            .map(|(_, c)| *c as u64)
            .sum()
    }
}

fn count_block(text: &str, vocab: &BowVocab, offset: u32, counts: &mut BTreeMap<u32, u32>) {
    for token in bow_tokenize(text) {
        if let Some(i) = vocab.get(&token) {
            *counts.entry(offset + i).or_insert(0) += 1;
        }
    }
}

/// Count in-vocabulary tokens of both sentences; sys_ref fills block 0 and
/// orig_ref block 1. Out-of-vocabulary tokens are ignored.
pub fn bow_features(pair: &RatedPair, vocab: &BowVocab) -> FeatureVector {
    bow_features_texts(&pair.sys_ref, &pair.orig_ref, vocab)
}

pub fn bow_features_texts(sys_ref: &str, orig_ref: &str, vocab: &BowVocab) -> FeatureVector {
    let mut counts = BTreeMap::new();
    count_block(sys_ref, vocab, 0, &mut counts);
    count_block(orig_ref, vocab, vocab.size() as u32, &mut counts);
    FeatureVector {
        dim: 2 * vocab.size(),
        entries: counts.into_iter().collect(),
    }
}
