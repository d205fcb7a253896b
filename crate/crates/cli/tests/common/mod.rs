//! Shared fixtures: a small synthetic ratings corpus whose labels are
//! recoverable from the sentence content, plus a matching WordPiece
//! vocabulary.

use std::fmt::Write as _;
use std::path::Path;

/// Write `n_pairs` sentence pairs, three judge rows each. The naturalness
/// median of pair i is `i % 6 + 1` and the marker token `mark<label>`
/// appears in both sentences, so every model in the ladder can learn the
/// task. Quality is naturalness shifted up one (clamped), informativeness
/// follows naturalness with a 4-cycle wobble.
pub fn write_corpus(path: &Path, n_pairs: usize) -> std::io::Result<()> {
    let mut out = String::from("sys_ref,orig_ref,judge,naturalness,quality,informativeness\n");
    for i in 0..n_pairs {
        let label = (i % 6) as u8 + 1;
        let quality = (label + 1).min(6);
        let info = if i % 4 == 0 { label } else { quality.min(6) };
        let sys = format!("mark{label} mark{label} filler{}", i % 10);
        let orig = format!("ref mark{label} filler{}", (i / 2) % 10);
        // three judges around the median
        let judges = [
            (1, label),
            (2, label.saturating_sub(1).max(1)),
            (3, (label + 1).min(6)),
        ];
        for (judge, rating) in judges {
            writeln!(
                out,
                "\"{sys}\",\"{orig}\",{judge},{rating},{quality},{info}"
            )
            .unwrap();
        }
    }
    std::fs::write(path, out)
}

/// Vocabulary covering every corpus word, one token per line.
pub fn write_vocab(path: &Path) -> std::io::Result<()> {
    let mut tokens: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "ref"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for label in 1..=6 {
        tokens.push(format!("mark{label}"));
    }
    for i in 0..10 {
        tokens.push(format!("filler{i}"));
    }
    std::fs::write(path, tokens.join("\n") + "\n")
}
