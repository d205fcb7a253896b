//! Model inputs: bag-of-words count vectors for the SVM, and WordPiece
//! token-id sequences in the two-sentence [CLS]/[SEP] layout for the neural
//! models.

mod bow;
mod encode;
mod wordpiece;

pub use bow::{bow_features, bow_features_texts, bow_tokenize, BowVocab, FeatureVector};
pub use encode::{encode_pair, EncodedPair, DEFAULT_MAX_LEN, MIN_MAX_LEN};
pub use wordpiece::WordPieceTokenizer;
