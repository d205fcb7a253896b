//! Greedy longest-match-first WordPiece tokenization over a vocabulary file
//! of the kind shipped with pre-trained uncased encoder checkpoints
//! (one token per line, `##` marking word-internal continuations).

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD_TOKEN: &str = "[PAD]";
pub const UNK_TOKEN: &str = "[UNK]";
pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";

const MAX_CHARS_PER_WORD: usize = 100;

#[derive(Debug, Clone)]
pub struct WordPieceTokenizer {
    vocab: HashMap<String, u32>,
    tokens: Vec<String>,
    lowercase: bool,
    pad_id: u32,
    unk_id: u32,
    cls_id: u32,
    sep_id: u32,
}

impl WordPieceTokenizer {
    /// Load a vocabulary file, one token per line; ids follow line order.
    pub fn from_vocab_file(path: &Path, lowercase: bool) -> Result<Self> {
        let content = fs::read_to_string(path)?;
        let tokens: Vec<String> = content
            .lines()
            .map(|l| l.trim_end_matches(['\r', '\n']).to_string())
            .filter(|l| !l.is_empty())
            .collect();
        Self::from_tokens(tokens, lowercase)
    }

    pub fn from_tokens(tokens: Vec<String>, lowercase: bool) -> Result<Self> {
        let mut vocab = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            if vocab.insert(token.clone(), i as u32).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate vocabulary token `{token}`"
                )));
            }
        }
        let special = |name: &str| -> Result<u32> {
            vocab.get(name).copied().ok_or_else(|| {
                Error::Validation(format!("vocabulary lacks the special token {name}"))
            })
        };
        Ok(WordPieceTokenizer {
            pad_id: special(PAD_TOKEN)?,
            unk_id: special(UNK_TOKEN)?,
            cls_id: special(CLS_TOKEN)?,
            sep_id: special(SEP_TOKEN)?,
            vocab,
            tokens,
            lowercase,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn pad_id(&self) -> u32 {
        self.pad_id
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn cls_id(&self) -> u32 {
        self.cls_id
    }

    pub fn sep_id(&self) -> u32 {
        self.sep_id
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.vocab.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(|s| s.as_str())
    }

    /// Whitespace + punctuation pre-tokenization, lowercasing if configured.
    fn basic_tokenize(&self, text: &str) -> Vec<String> {
        let text = if self.lowercase {
            text.to_lowercase()
        } else {
            text.to_string()
        };
        let mut words = Vec::new();
        let mut word = String::new();
        for ch in text.chars() {
            if ch.is_whitespace() {
                if !word.is_empty() {
                    words.push(std::mem::take(&mut word));
                }
            } else if is_punctuation(ch) {
                if !word.is_empty() {
                    words.push(std::mem::take(&mut word));
                }
                words.push(ch.to_string());
            } else {
                word.push(ch);
            }
        }
        if !word.is_empty() {
            words.push(word);
        }
        words
    }

    /// Greedy longest-match subword split of one word; falls back to [UNK].
    fn wordpiece(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > MAX_CHARS_PER_WORD {
            out.push(self.unk_id);
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while end > start {
                let mut piece: String = chars[start..end].iter().collect();
                if start > 0 {
                    piece = format!("##{piece}");
                }
                if let Some(&id) = self.vocab.get(&piece) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => {
                    out.push(self.unk_id);
                    return;
                }
            }
        }
        out.extend(pieces);
    }

    /// Subword token ids of a sentence, without special tokens.
    pub fn encode_text(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        for word in self.basic_tokenize(text) {
            self.wordpiece(&word, &mut ids);
        }
        ids
    }

    /// Subword strings of a sentence, without special tokens.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.encode_text(text)
            .iter()
            .map(|&id| self.tokens[id as usize].clone())
            .collect()
    }

    /// Write the vocabulary in the standard one-token-per-line layout.
    pub fn save_vocab(&self, path: &Path) -> Result<()> {
        fs::write(path, self.tokens.join("\n") + "\n")?;
        Ok(())
    }
}

fn is_punctuation(ch: char) -> bool {
    ch.is_ascii_punctuation()
        || matches!(ch, '\u{2000}'..='\u{206f}' | '\u{2e00}'..='\u{2e7f}')
        || unicode_punct_category(ch)
}

fn unicode_punct_category(ch: char) -> bool {
    // Coarse check for common non-ASCII punctuation the corpus may contain.
    matches!(ch, '«' | '»' | '‘' | '’' | '“' | '”' | '…' | '–' | '—' | '¡' | '¿')
}

#[cfg(test)]
pub(crate) fn toy_tokenizer() -> WordPieceTokenizer {
    let tokens = [
        "[PAD]", "[UNK]", "[CLS]", "[SEP]", "the", "cafe", "is", "expensive", "cheap", "##ly",
        "un", "##expect", "##ed", ",", ".", "?", "a", "how", "about", "one",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    WordPieceTokenizer::from_tokens(tokens, true).unwrap()
}
