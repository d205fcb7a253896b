//! Single-layer bidirectional LSTM classifier over the encoded pair stream.
//!
//! Token embeddings are randomly initialized and trainable. Each direction
//! runs a masked recurrence over the unpadded positions; the concatenated
//! final forward/backward states feed the linear+softmax head.

use indexmap::IndexMap;
use ndarray::{Array2, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::EncodedPair;
use crate::nn::{derive_rng, normal, uniform, zeros, ParamStore, Tape, Var};

use super::head::{reinit_head_params, ClassifierHead};
use super::validate_batch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiLstmConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Units per direction; the head sees twice this width.
    pub hidden: usize,
}

impl BiLstmConfig {
    /// Reference dimensions: 768-wide embeddings and recurrent units.
    pub fn base(vocab_size: usize) -> Self {
        BiLstmConfig {
            vocab_size,
            embed_dim: 768,
            hidden: 768,
        }
    }

    /// Small dimensions for tests and desk-scale runs.
    pub fn tiny(vocab_size: usize) -> Self {
        BiLstmConfig {
            vocab_size,
            embed_dim: 16,
            hidden: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BiLstmClassifier {
    pub cfg: BiLstmConfig,
    pub params: ParamStore,
}

impl BiLstmClassifier {
    pub fn init(cfg: BiLstmConfig, seed: u64) -> Self {
        let mut params = ParamStore::new();
        let mut rng = derive_rng(seed, 0x6c73_746d);
        params.insert(
            "embedding.word",
            normal(&[cfg.vocab_size, cfg.embed_dim], 0.02, &mut rng),
        );
        let bound = 1.0 / (cfg.hidden as f64).sqrt();
        for direction in ["fwd", "bwd"] {
            params.insert(
                format!("lstm.{direction}.w_ih"),
                uniform(&[4 * cfg.hidden, cfg.embed_dim], -bound, bound, &mut rng),
            );
            params.insert(
                format!("lstm.{direction}.w_hh"),
                uniform(&[4 * cfg.hidden, cfg.hidden], -bound, bound, &mut rng),
            );
            params.insert(format!("lstm.{direction}.bias"), zeros(&[4 * cfg.hidden]));
        }
        ClassifierHead::init(2 * cfg.hidden, seed).register(&mut params);
        BiLstmClassifier { cfg, params }
    }

    pub fn reinit_head(&mut self, seed: u64) {
        reinit_head_params(&mut self.params, 2 * self.cfg.hidden, seed);
    }

    /// Logits var for a batch; gates follow the i, f, g, o layout.
    pub fn forward(
        &self,
        tape: &mut Tape,
        vars: &IndexMap<String, Var>,
        batch: &[EncodedPair],
    ) -> Result<Var> {
        let (batch_size, seq_len) = validate_batch(batch, self.cfg.vocab_size)?;
        let hidden = self.cfg.hidden;

        let mut ids = Array2::<usize>::zeros((batch_size, seq_len));
        for (b, pair) in batch.iter().enumerate() {
            for (t, &id) in pair.token_ids.iter().enumerate() {
                ids[[b, t]] = id as usize;
            }
        }
        let embedded = tape.embedding(vars["embedding.word"], ids);

        // mask column per timestep, shaped (B, 1) for broadcasting
        let mask_at = |t: usize| -> ArrayD<f64> {
            let col: Vec<f64> = batch.iter().map(|p| p.attention_mask[t] as f64).collect();
            ArrayD::from_shape_vec(IxDyn(&[batch_size, 1]), col).unwrap()
        };

        let run_direction = |tape: &mut Tape, name: &str, reverse: bool| -> Var {
            let w_ih = vars[&format!("lstm.{name}.w_ih")];
            let w_hh = vars[&format!("lstm.{name}.w_hh")];
            let bias = vars[&format!("lstm.{name}.bias")];
            let mut h = tape.leaf(zeros(&[batch_size, hidden]));
            let mut c = tape.leaf(zeros(&[batch_size, hidden]));
            let steps: Vec<usize> = if reverse {
                (0..seq_len).rev().collect()
            } else {
                (0..seq_len).collect()
            };
            for t in steps {
                let x_t = tape.select_step(embedded, t);
                let from_input = tape.matmul(x_t, w_ih, true);
                let from_hidden = tape.matmul(h, w_hh, true);
                let pre = tape.add(from_input, from_hidden);
                let gates = tape.add_bias(pre, bias);
                let i_gate = tape.narrow_last(gates, 0, hidden);
                let f_gate = tape.narrow_last(gates, hidden, hidden);
                let g_gate = tape.narrow_last(gates, 2 * hidden, hidden);
                let o_gate = tape.narrow_last(gates, 3 * hidden, hidden);
                let i_act = tape.sigmoid(i_gate);
                let f_act = tape.sigmoid(f_gate);
                let g_act = tape.tanh(g_gate);
                let o_act = tape.sigmoid(o_gate);
                let keep = tape.mul(f_act, c);
                let write = tape.mul(i_act, g_act);
                let c_new = tape.add(keep, write);
                let c_tanh = tape.tanh(c_new);
                let h_new = tape.mul(o_act, c_tanh);

                // padded positions keep the previous state exactly
                let mask = mask_at(t);
                let h_diff = tape.sub(h_new, h);
                let h_masked = tape.mul_const(h_diff, &mask);
                h = tape.add(h, h_masked);
                let c_diff = tape.sub(c_new, c);
                let c_masked = tape.mul_const(c_diff, &mask);
                c = tape.add(c, c_masked);
            }
            h
        };

        let final_fwd = run_direction(tape, "fwd", false);
        let final_bwd = run_direction(tape, "bwd", true);
        let features = tape.concat_last(final_fwd, final_bwd);
        let projected = tape.matmul(features, vars["head.weight"], true);
        Ok(tape.add_bias(projected, vars["head.bias"]))
    }
}
