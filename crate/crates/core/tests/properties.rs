//! Property tests over the data pipeline, feature encodings, metrics, and
//! prediction rules.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use nateval_core::dataset::{
    aggregate, distribution, lower_median, split, AnnotationRecord, RatedPair, SplitRatios,
};
use nateval_core::features::{
    bow_features_texts, encode_pair, BowVocab, WordPieceTokenizer,
};
use nateval_core::metrics::{spearman, ConfusionMatrix, EvalReport};
use nateval_core::models::predict_scores;
use nateval_core::{Criterion, Label};

fn label_strategy() -> impl Strategy<Value = u8> {
    1u8..=6
}

fn make_pair(id: usize, labels: [u8; 3]) -> RatedPair {
    let mut map = BTreeMap::new();
    map.insert(Criterion::Naturalness, Label::new(labels[0]).unwrap());
    map.insert(Criterion::Quality, Label::new(labels[1]).unwrap());
    map.insert(Criterion::Informativeness, Label::new(labels[2]).unwrap());
    RatedPair {
        sys_ref: format!("system output {id}"),
        orig_ref: format!("reference {id}"),
        labels: map,
        n_judges: 3,
    }
}

fn toy_tokenizer() -> WordPieceTokenizer {
    let mut tokens: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for c in 'a'..='j' {
        tokens.push(c.to_string());
    }
    WordPieceTokenizer::from_tokens(tokens, true).unwrap()
}

/// Short sentences over a 10-letter alphabet, always in-vocabulary.
fn sentence_strategy() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::char::range('a', 'j'), 1..20)
        .prop_map(|chars| chars.iter().map(|c| format!("{c} ")).collect::<String>())
}

proptest! {
    #[test]
    fn split_is_disjoint_exhaustive_and_floor_sized(
        n in 3usize..400,
        seed in any::<u64>(),
    ) {
        let pairs: Vec<RatedPair> =
            (0..n).map(|i| make_pair(i, [(i % 6 + 1) as u8; 3])).collect();
        let s = split(pairs.clone(), SplitRatios::default(), seed).unwrap();

        prop_assert_eq!(s.dev.len(), n / 10);
        prop_assert_eq!(s.test.len(), n / 10);
        prop_assert_eq!(s.train.len(), n - 2 * (n / 10));

        let key = |p: &RatedPair| p.sys_ref.clone();
        let mut seen = BTreeSet::new();
        for p in s.train.iter().chain(&s.dev).chain(&s.test) {
            prop_assert!(seen.insert(key(p)), "pair straddles splits");
        }
        prop_assert_eq!(seen.len(), n);

        // determinism
        let again = split(pairs, SplitRatios::default(), seed).unwrap();
        prop_assert_eq!(s, again);
    }

    #[test]
    fn aggregation_labels_come_from_the_group(
        ratings in proptest::collection::vec((label_strategy(), label_strategy(), label_strategy()), 1..8),
    ) {
        let records: Vec<AnnotationRecord> = ratings
            .iter()
            .enumerate()
            .map(|(judge, &(n, q, i))| AnnotationRecord {
                sys_ref: "one output".into(),
                orig_ref: "one reference".into(),
                judge_id: judge.to_string(),
                naturalness: Label::new(n).unwrap(),
                quality: Label::new(q).unwrap(),
                informativeness: Label::new(i).unwrap(),
                system_tag: None,
                domain_tag: None,
            })
            .collect();
        let pairs = aggregate(&records).unwrap();
        prop_assert_eq!(pairs.len(), 1);
        prop_assert_eq!(pairs[0].n_judges, records.len());
        for criterion in Criterion::all() {
            let group: Vec<u8> = records.iter().map(|r| r.rating(criterion).value()).collect();
            let label = pairs[0].label(criterion).value();
            prop_assert!(group.contains(&label), "median not a group member");
        }
    }

    #[test]
    fn aggregation_is_judge_order_invariant(
        ratings in proptest::collection::vec(label_strategy(), 2..8),
        rotation in 1usize..7,
    ) {
        let record = |judge: usize, value: u8| AnnotationRecord {
            sys_ref: "s".into(),
            orig_ref: "r".into(),
            judge_id: judge.to_string(),
            naturalness: Label::new(value).unwrap(),
            quality: Label::new(value).unwrap(),
            informativeness: Label::new(value).unwrap(),
            system_tag: None,
            domain_tag: None,
        };
        let records: Vec<AnnotationRecord> = ratings
            .iter()
            .enumerate()
            .map(|(j, &v)| record(j, v))
            .collect();
        let mut rotated = records.clone();
        rotated.rotate_left(rotation % records.len());
        let a = aggregate(&records).unwrap();
        let b = aggregate(&rotated).unwrap();
        prop_assert_eq!(a[0].labels.clone(), b[0].labels.clone());
    }

    #[test]
    fn lower_median_equals_sort_and_index_oracle(
        ratings in proptest::collection::vec(label_strategy(), 1..9),
    ) {
        let labels: Vec<Label> = ratings.iter().map(|&v| Label::new(v).unwrap()).collect();
        let got = lower_median(&labels).unwrap().value();
        let mut sorted = ratings.clone();
        sorted.sort_unstable();
        prop_assert_eq!(got, sorted[(sorted.len() - 1) / 2]);
    }

    #[test]
    fn distribution_matches_brute_force_tally(
        labels in proptest::collection::vec(label_strategy(), 1..200),
    ) {
        let pairs: Vec<RatedPair> = labels
            .iter()
            .enumerate()
            .map(|(i, &v)| make_pair(i, [v, v, v]))
            .collect();
        let dist = distribution(&pairs, Criterion::Naturalness).unwrap();
        let mut expected = [0u64; 6];
        for &v in &labels {
            expected[v as usize - 1] += 1;
        }
        prop_assert_eq!(dist.counts, expected);
        prop_assert_eq!(dist.total as usize, labels.len());
        let total: u64 = dist.counts.iter().sum();
        prop_assert_eq!(total, dist.total);
        let frac = dist.counts[dist.majority_label.index()] as f64 / dist.total as f64;
        prop_assert!((dist.majority_fraction - frac).abs() < 1e-15);
    }

    #[test]
    fn encoded_pair_layout_invariants(
        sys in sentence_strategy(),
        orig in sentence_strategy(),
        max_len in 5usize..40,
    ) {
        let tok = toy_tokenizer();
        let enc = encode_pair(&sys, &orig, &tok, max_len).unwrap();

        prop_assert_eq!(enc.token_ids.len(), max_len);
        prop_assert_eq!(enc.segment_ids.len(), max_len);
        prop_assert_eq!(enc.attention_mask.len(), max_len);
        prop_assert_eq!(enc.token_ids[0], tok.cls_id());

        // mask is a prefix of ones
        let real = enc.real_len();
        prop_assert!(enc.attention_mask[..real].iter().all(|&m| m == 1));
        prop_assert!(enc.attention_mask[real..].iter().all(|&m| m == 0));

        // exactly two separators among unpadded positions, last one at the end
        let sep_positions: Vec<usize> = (0..real)
            .filter(|&t| enc.token_ids[t] == tok.sep_id())
            .collect();
        prop_assert_eq!(sep_positions.len(), 2);
        prop_assert_eq!(*sep_positions.last().unwrap(), real - 1);

        // segments: 0 through the first separator, 1 through the second, 0 on padding
        let first_sep = sep_positions[0];
        for t in 0..real {
            let expected = if t <= first_sep { 0 } else { 1 };
            prop_assert_eq!(enc.segment_ids[t], expected, "position {}", t);
        }
        prop_assert!(enc.segment_ids[real..].iter().all(|&s| s == 0));

        // decode round-trip: ids before the first separator are [CLS] plus a
        // prefix of the sys subword sequence
        let sys_ids = tok.encode_text(&sys);
        let decoded: Vec<u32> = enc.token_ids[1..first_sep].to_vec();
        prop_assert_eq!(&decoded[..], &sys_ids[..decoded.len()]);
    }

    #[test]
    fn bow_features_match_tally_oracle(
        sys in sentence_strategy(),
        orig in sentence_strategy(),
    ) {
        let vocab = BowVocab::build(&["a b c d e"]).unwrap();
        let fv = bow_features_texts(&sys, &orig, &vocab);
        let dense = fv.to_dense();
        // independent tally
        for (block, text) in [(0usize, &sys), (1usize, &orig)] {
            for (token, index) in vocab.tokens() {
                let count = text
                    .split_whitespace()
                    .filter(|w| w.to_lowercase() == token)
                    .count() as u32;
                prop_assert_eq!(dense[block * vocab.size() + index as usize], count);
            }
        }
        let sum0 = fv.block_sum(0);
        let in_vocab0 = sys
            .split_whitespace()
            .filter(|w| vocab.get(&w.to_lowercase()).is_some())
            .count() as u64;
        prop_assert_eq!(sum0, in_vocab0);
    }

    #[test]
    fn bow_features_are_additive_on_block_zero(
        a in sentence_strategy(),
        b in sentence_strategy(),
        reference in sentence_strategy(),
    ) {
        let vocab = BowVocab::build(&["a b c d e f g h i j"]).unwrap();
        let combined = bow_features_texts(&format!("{a} {b}"), &reference, &vocab);
        let first = bow_features_texts(&a, &reference, &vocab);
        let second = bow_features_texts(&b, "", &vocab);
        let lhs = combined.to_dense();
        let rhs: Vec<u32> = first
            .to_dense()
            .iter()
            .zip(second.to_dense())
            .map(|(x, y)| x + y)
            .collect();
        prop_assert_eq!(&lhs[..vocab.size()], &rhs[..vocab.size()]);
    }

    #[test]
    fn confusion_accuracy_equals_direct_match_count(
        pairs in proptest::collection::vec((label_strategy(), label_strategy()), 1..300),
    ) {
        let preds: Vec<Label> = pairs.iter().map(|&(p, _)| Label::new(p).unwrap()).collect();
        let golds: Vec<Label> = pairs.iter().map(|&(_, g)| Label::new(g).unwrap()).collect();
        let report = EvalReport::from_predictions(&preds, &golds).unwrap();
        let matches = pairs.iter().filter(|&&(p, g)| p == g).count();
        prop_assert!((report.accuracy - matches as f64 / pairs.len() as f64).abs() < 1e-15);
    }

    #[test]
    fn per_class_recall_weighted_by_support_equals_accuracy(
        pairs in proptest::collection::vec((label_strategy(), label_strategy()), 1..300),
    ) {
        let preds: Vec<Label> = pairs.iter().map(|&(p, _)| Label::new(p).unwrap()).collect();
        let golds: Vec<Label> = pairs.iter().map(|&(_, g)| Label::new(g).unwrap()).collect();
        let cm = ConfusionMatrix::from_predictions(&preds, &golds).unwrap();
        let report = EvalReport::from_confusion(cm.clone()).unwrap();
        let weighted: f64 = report
            .per_class_recall
            .iter()
            .map(|(&label, &recall)| {
                recall * cm.row_sum(label as usize - 1) as f64 / cm.total() as f64
            })
            .sum();
        prop_assert!((weighted - report.accuracy).abs() < 1e-12);
    }

    #[test]
    fn spearman_is_symmetric_bounded_and_rank_based(
        values in proptest::collection::vec((0u8..6, 0u8..6), 3..60),
    ) {
        let x: Vec<f64> = values.iter().map(|&(a, _)| a as f64).collect();
        let y: Vec<f64> = values.iter().map(|&(_, b)| b as f64).collect();
        let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
        prop_assume!(!constant(&x) && !constant(&y));

        let rho = spearman(&x, &y).unwrap();
        prop_assert!(rho.abs() <= 1.0 + 1e-12);
        prop_assert!((rho - spearman(&y, &x).unwrap()).abs() < 1e-12);

        // invariance under strictly increasing transforms
        let fx: Vec<f64> = x.iter().map(|&v| (v * 3.0 + 1.0).exp()).collect();
        let gy: Vec<f64> = y.iter().map(|&v| v.powi(3) + 0.5 * v).collect();
        prop_assert!((rho - spearman(&fx, &gy).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn majority_accuracy_equals_modal_share_of_the_eval_set(
        train in proptest::collection::vec(label_strategy(), 1..100),
        eval in proptest::collection::vec(label_strategy(), 1..100),
    ) {
        let train_labels: Vec<Label> = train.iter().map(|&v| Label::new(v).unwrap()).collect();
        let eval_labels: Vec<Label> = eval.iter().map(|&v| Label::new(v).unwrap()).collect();
        let model = nateval_core::models::MajorityModel::fit(&train_labels).unwrap();
        let preds = model.predict_n(eval_labels.len());
        let report = EvalReport::from_predictions(&preds, &eval_labels).unwrap();
        // tally oracle: share of the modal train label in the eval set
        let modal_share = eval_labels.iter().filter(|l| **l == model.label).count() as f64
            / eval_labels.len() as f64;
        prop_assert!((report.accuracy - modal_share).abs() < 1e-15);
    }

    #[test]
    fn prediction_is_invariant_under_constant_shift(
        scores in proptest::collection::vec(-100.0f64..100.0, 6),
        shift in -1000.0f64..1000.0,
    ) {
        let shifted: Vec<f64> = scores.iter().map(|v| v + shift).collect();
        prop_assert_eq!(
            predict_scores(&scores).unwrap(),
            predict_scores(&shifted).unwrap()
        );
    }

    #[test]
    fn softmax_of_logits_sums_to_one(
        scores in proptest::collection::vec(-30.0f64..30.0, 6),
    ) {
        let logits = nateval_core::models::Logits::new(
            ndarray::Array2::from_shape_vec((1, 6), scores).unwrap(),
        )
        .unwrap();
        let probs = logits.probabilities(0);
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
        prop_assert!(probs.iter().all(|&p| p > 0.0));
    }
}

#[test]
fn eleven_thousand_pairs_split_like_the_published_corpus() {
    let pairs: Vec<RatedPair> = (0..11_353)
        .map(|i| make_pair(i, [(i % 6 + 1) as u8; 3]))
        .collect();
    let s = split(pairs, SplitRatios::default(), 42).unwrap();
    assert_eq!(
        (s.train.len(), s.dev.len(), s.test.len()),
        (9083, 1135, 1135)
    );
}
