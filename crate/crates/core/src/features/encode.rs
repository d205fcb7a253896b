//! Two-sentence input layout for the neural models:
//! `[CLS] sys.. [SEP] ref.. [SEP] pad..`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::wordpiece::WordPieceTokenizer;

pub const DEFAULT_MAX_LEN: usize = 128;
/// Two specials per sentence boundary plus one token per sentence.
pub const MIN_MAX_LEN: usize = 5;

/// Tokenized pair input. All three sequences have length `max_len`; the mask
/// is a prefix of 1s; segment ids are 0 through the first [SEP], 1 through
/// the second, and 0 on padding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPair {
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
    pub max_len: usize,
}

impl EncodedPair {
    /// Number of non-padding positions.
    pub fn real_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }
}

/// Encode a sentence pair into the fixed [CLS]/[SEP] layout.
///
/// If the pair exceeds `max_len`, tokens are removed one at a time from the
/// end of whichever sentence is currently longer (ties trim the first)
/// until it fits.
pub fn encode_pair(
    sys_ref: &str,
    orig_ref: &str,
    tokenizer: &WordPieceTokenizer,
    max_len: usize,
) -> Result<EncodedPair> {
    if max_len < MIN_MAX_LEN {
        return Err(Error::Config(format!(
            "max_len {max_len} cannot hold both special tokens plus one token per sentence (minimum {MIN_MAX_LEN})"
        )));
    }
    let mut sys_ids = tokenizer.encode_text(sys_ref);
    let mut ref_ids = tokenizer.encode_text(orig_ref);
    if sys_ids.is_empty() && ref_ids.is_empty() {
        return Err(Error::Validation(
            "both sentences are empty after tokenization".into(),
        ));
    }

    while sys_ids.len() + ref_ids.len() + 3 > max_len {
        if sys_ids.len() >= ref_ids.len() {
            sys_ids.pop();
        } else {
            ref_ids.pop();
        }
    }

    let mut token_ids = Vec::with_capacity(max_len);
    let mut segment_ids = Vec::with_capacity(max_len);
    token_ids.push(tokenizer.cls_id());
    segment_ids.push(0);
    token_ids.extend(&sys_ids);
    segment_ids.extend(std::iter::repeat_n(0, sys_ids.len()));
    token_ids.push(tokenizer.sep_id());
    segment_ids.push(0);
    token_ids.extend(&ref_ids);
    segment_ids.extend(std::iter::repeat_n(1, ref_ids.len()));
    token_ids.push(tokenizer.sep_id());
    segment_ids.push(1);

    let real = token_ids.len();
    let mut attention_mask = vec![1u8; real];
    token_ids.resize(max_len, tokenizer.pad_id());
    segment_ids.resize(max_len, 0);
    attention_mask.resize(max_len, 0);

    Ok(EncodedPair {
        token_ids,
        segment_ids,
        attention_mask,
        max_len,
    })
}
