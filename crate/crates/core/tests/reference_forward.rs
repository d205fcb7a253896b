//! Independent plain-loop re-implementations of the two neural forward
//! passes, compared numerically against the tape-based models with shared
//! weights. These are deliberately written from the textbook formulas,
//! without the tape, so a wiring mistake in either route shows up as a
//! numeric mismatch.

use ndarray::{Array1, Array2, Ix1, Ix2};

use nateval_core::features::EncodedPair;
use nateval_core::models::{
    BiLstmClassifier, BiLstmConfig, EncoderClassifier, EncoderConfig, NeuralNet,
};
use nateval_core::nn::ParamStore;

fn tensor2(params: &ParamStore, name: &str) -> Array2<f64> {
    params
        .get(name)
        .unwrap_or_else(|| panic!("missing {name}"))
        .view()
        .into_dimensionality::<Ix2>()
        .unwrap()
        .to_owned()
}

fn tensor1(params: &ParamStore, name: &str) -> Array1<f64> {
    params
        .get(name)
        .unwrap_or_else(|| panic!("missing {name}"))
        .view()
        .into_dimensionality::<Ix1>()
        .unwrap()
        .to_owned()
}

/// y = x . W^T + b with W stored (out, in).
fn linear(x: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    let (rows, inner) = x.dim();
    let out = w.nrows();
    assert_eq!(w.ncols(), inner);
    let mut y = Array2::zeros((rows, out));
    for r in 0..rows {
        for o in 0..out {
            let mut acc = b[o];
            for k in 0..inner {
                acc += x[[r, k]] * w[[o, k]];
            }
            y[[r, o]] = acc;
        }
    }
    y
}

fn layer_norm_rows(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> Array2<f64> {
    let eps = 1e-12;
    let n = x.ncols() as f64;
    let mut y = Array2::zeros(x.raw_dim());
    for (row, mut out) in x.rows().into_iter().zip(y.rows_mut()) {
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let inv = 1.0 / (var + eps).sqrt();
        for (k, o) in out.iter_mut().enumerate() {
            *o = (row[k] - mean) * inv * gain[k] + bias[k];
        }
    }
    y
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

fn gelu(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + 0.044715 * x * x * x)).tanh())
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Full encoder forward for one batch, scalar loops only.
fn reference_encoder_logits(model: &EncoderClassifier, batch: &[EncodedPair]) -> Array2<f64> {
    let cfg = model.cfg;
    let p = &model.params;
    let b = batch.len();
    let t = batch[0].max_len;
    let h = cfg.hidden;
    let heads = cfg.heads;
    let dh = h / heads;

    let word = tensor2(p, "embeddings.word");
    let pos = tensor2(p, "embeddings.position");
    let seg = tensor2(p, "embeddings.segment");
    let ln_g = tensor1(p, "embeddings.ln.gain");
    let ln_b = tensor1(p, "embeddings.ln.bias");

    // per-sample (T, H) states
    let mut states: Vec<Array2<f64>> = Vec::with_capacity(b);
    for pair in batch {
        let mut x = Array2::zeros((t, h));
        for ti in 0..t {
            let wid = pair.token_ids[ti] as usize;
            let sid = pair.segment_ids[ti] as usize;
            for k in 0..h {
                x[[ti, k]] = word[[wid, k]] + pos[[ti, k]] + seg[[sid, k]];
            }
        }
        states.push(layer_norm_rows(&x, &ln_g, &ln_b));
    }

    for layer in 0..cfg.layers {
        let prefix = format!("layer.{layer}");
        let wq = tensor2(p, &format!("{prefix}.attn.q.weight"));
        let bq = tensor1(p, &format!("{prefix}.attn.q.bias"));
        let wk = tensor2(p, &format!("{prefix}.attn.k.weight"));
        let bk = tensor1(p, &format!("{prefix}.attn.k.bias"));
        let wv = tensor2(p, &format!("{prefix}.attn.v.weight"));
        let bv = tensor1(p, &format!("{prefix}.attn.v.bias"));
        let wo = tensor2(p, &format!("{prefix}.attn.out.weight"));
        let bo = tensor1(p, &format!("{prefix}.attn.out.bias"));
        let attn_ln_g = tensor1(p, &format!("{prefix}.attn.ln.gain"));
        let attn_ln_b = tensor1(p, &format!("{prefix}.attn.ln.bias"));
        let w_in = tensor2(p, &format!("{prefix}.ffn.in.weight"));
        let b_in = tensor1(p, &format!("{prefix}.ffn.in.bias"));
        let w_out = tensor2(p, &format!("{prefix}.ffn.out.weight"));
        let b_out = tensor1(p, &format!("{prefix}.ffn.out.bias"));
        let ffn_ln_g = tensor1(p, &format!("{prefix}.ffn.ln.gain"));
        let ffn_ln_b = tensor1(p, &format!("{prefix}.ffn.ln.bias"));

        for (sample, state) in states.iter_mut().enumerate() {
            let q = linear(state, &wq, &bq);
            let k = linear(state, &wk, &bk);
            let v = linear(state, &wv, &bv);

            // attention per head over masked keys
            let mut context = Array2::zeros((t, h));
            for head in 0..heads {
                let offset = head * dh;
                for query in 0..t {
                    let mut scores = vec![0.0f64; t];
                    for key in 0..t {
                        let mut dot = 0.0;
                        for d in 0..dh {
                            dot += q[[query, offset + d]] * k[[key, offset + d]];
                        }
                        scores[key] = dot / (dh as f64).sqrt();
                        if batch[sample].attention_mask[key] == 0 {
                            scores[key] += -1e9;
                        }
                    }
                    softmax_in_place(&mut scores);
                    for key in 0..t {
                        for d in 0..dh {
                            context[[query, offset + d]] += scores[key] * v[[key, offset + d]];
                        }
                    }
                }
            }
            let projected = linear(&context, &wo, &bo);
            let residual = &*state + &projected;
            let normed = layer_norm_rows(&residual, &attn_ln_g, &attn_ln_b);

            let inter = linear(&normed, &w_in, &b_in).mapv(gelu);
            let down = linear(&inter, &w_out, &b_out);
            let residual2 = &normed + &down;
            *state = layer_norm_rows(&residual2, &ffn_ln_g, &ffn_ln_b);
        }
    }

    let pooler_w = tensor2(p, "pooler.weight");
    let pooler_b = tensor1(p, "pooler.bias");
    let head_w = tensor2(p, "head.weight");
    let head_b = tensor1(p, "head.bias");
    let mut logits = Array2::zeros((b, 6));
    for (sample, state) in states.iter().enumerate() {
        let cls = state.row(0).insert_axis(ndarray::Axis(0)).to_owned();
        let pooled = linear(&cls, &pooler_w, &pooler_b).mapv(f64::tanh);
        let row = linear(&pooled, &head_w, &head_b);
        logits.row_mut(sample).assign(&row.row(0));
    }
    logits
}

/// Bi-LSTM forward, scalar loops only; gate rows are laid out [i f g o].
fn reference_bilstm_logits(model: &BiLstmClassifier, batch: &[EncodedPair]) -> Array2<f64> {
    let cfg = model.cfg;
    let p = &model.params;
    let hidden = cfg.hidden;
    let embed = tensor2(p, "embedding.word");
    let head_w = tensor2(p, "head.weight");
    let head_b = tensor1(p, "head.bias");

    let run = |pair: &EncodedPair, direction: &str, reverse: bool| -> Vec<f64> {
        let w_ih = tensor2(p, &format!("lstm.{direction}.w_ih"));
        let w_hh = tensor2(p, &format!("lstm.{direction}.w_hh"));
        let bias = tensor1(p, &format!("lstm.{direction}.bias"));
        let mut h = vec![0.0f64; hidden];
        let mut c = vec![0.0f64; hidden];
        let order: Vec<usize> = if reverse {
            (0..pair.max_len).rev().collect()
        } else {
            (0..pair.max_len).collect()
        };
        for t in order {
            if pair.attention_mask[t] == 0 {
                continue; // masked update keeps the previous state
            }
            let token = pair.token_ids[t] as usize;
            let mut gates = vec![0.0f64; 4 * hidden];
            for (g, gate) in gates.iter_mut().enumerate() {
                let mut acc = bias[g];
                for e in 0..cfg.embed_dim {
                    acc += w_ih[[g, e]] * embed[[token, e]];
                }
                for k in 0..hidden {
                    acc += w_hh[[g, k]] * h[k];
                }
                *gate = acc;
            }
            for k in 0..hidden {
                let i = sigmoid(gates[k]);
                let f = sigmoid(gates[hidden + k]);
                let g = gates[2 * hidden + k].tanh();
                let o = sigmoid(gates[3 * hidden + k]);
                c[k] = f * c[k] + i * g;
                h[k] = o * c[k].tanh();
            }
        }
        h
    };

    let mut logits = Array2::zeros((batch.len(), 6));
    for (sample, pair) in batch.iter().enumerate() {
        let forward = run(pair, "fwd", false);
        let backward = run(pair, "bwd", true);
        let features: Vec<f64> = forward.into_iter().chain(backward).collect();
        for class in 0..6 {
            let mut acc = head_b[class];
            for (k, &f) in features.iter().enumerate() {
                acc += head_w[[class, k]] * f;
            }
            logits[[sample, class]] = acc;
        }
    }
    logits
}

fn toy_batch(vocab: u32, max_len: usize, specs: &[&[u32]]) -> Vec<EncodedPair> {
    specs
        .iter()
        .map(|ids| {
            let mut token_ids: Vec<u32> = ids.iter().map(|&i| i % vocab).collect();
            let real = token_ids.len();
            token_ids.resize(max_len, 0);
            let mut segment_ids = vec![0u8; max_len];
            for t in real / 2..real {
                segment_ids[t] = 1;
            }
            let mut attention_mask = vec![1u8; real];
            attention_mask.resize(max_len, 0);
            EncodedPair {
                token_ids,
                segment_ids,
                attention_mask,
                max_len,
            }
        })
        .collect()
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn encoder_forward_matches_the_scalar_reference() {
    let cfg = EncoderConfig {
        layers: 2,
        hidden: 16,
        heads: 4,
        intermediate: 32,
        vocab_size: 24,
        max_position: 10,
    };
    let model = EncoderClassifier::init(cfg, 42).unwrap();
    let batch = toy_batch(24, 9, &[&[2, 7, 11, 3, 15, 3], &[2, 21, 3, 9, 9, 14, 3], &[2, 3, 5, 3]]);
    let expected = reference_encoder_logits(&model, &batch);
    let net = NeuralNet::Encoder(model);
    let got = net.logits(&batch).unwrap();
    let diff = max_abs_diff(got.scores(), &expected);
    assert!(diff < 1e-9, "encoder deviates from reference by {diff}");
}

#[test]
fn bilstm_forward_matches_the_scalar_reference() {
    let cfg = BiLstmConfig {
        vocab_size: 24,
        embed_dim: 12,
        hidden: 10,
    };
    let model = BiLstmClassifier::init(cfg, 7);
    let batch = toy_batch(24, 8, &[&[2, 7, 11, 3, 15], &[2, 21, 3], &[2, 3, 5, 3, 9, 9, 14, 3]]);
    let expected = reference_bilstm_logits(&model, &batch);
    let net = NeuralNet::BiLstm(model);
    let got = net.logits(&batch).unwrap();
    let diff = max_abs_diff(got.scores(), &expected);
    assert!(diff < 1e-9, "bilstm deviates from reference by {diff}");
}
