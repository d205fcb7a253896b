//! Bidirectional transformer encoder with a pooled-output classification
//! head. The same architecture serves randomly initialized encoders and
//! pre-trained checkpoints (base-size or the tiny reference-candidate
//! scorer); only the configuration and weights differ.

use indexmap::IndexMap;
use ndarray::{Array2, ArrayD, Ix2, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::EncodedPair;
use crate::nn::{derive_rng, normal, ones, zeros, ParamStore, Tape, Var};

use super::head::{reinit_head_params, ClassifierHead};
use super::validate_batch;

/// Additive attention bias for padded keys; exp() underflows to exactly 0.
const MASK_NEG: f64 = -1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub intermediate: usize,
    pub vocab_size: usize,
    pub max_position: usize,
}

impl EncoderConfig {
    /// 12-layer, 768-hidden, 12-head configuration of the standard uncased
    /// base checkpoint.
    pub fn base(vocab_size: usize) -> Self {
        EncoderConfig {
            layers: 12,
            hidden: 768,
            heads: 12,
            intermediate: 3072,
            vocab_size,
            max_position: 512,
        }
    }

    /// 2-layer, 128-hidden configuration matching the published tiny
    /// checkpoint family.
    pub fn tiny_checkpoint(vocab_size: usize) -> Self {
        EncoderConfig {
            layers: 2,
            hidden: 128,
            heads: 2,
            intermediate: 512,
            vocab_size,
            max_position: 512,
        }
    }

    /// 2-layer, 64-hidden stub for tests and desk-scale training runs.
    pub fn stub(vocab_size: usize) -> Self {
        EncoderConfig {
            layers: 2,
            hidden: 64,
            heads: 4,
            intermediate: 256,
            vocab_size,
            max_position: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.hidden.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "hidden width {} is not divisible by {} attention heads",
                self.hidden, self.heads
            )));
        }
        if self.layers == 0 || self.hidden == 0 || self.vocab_size == 0 {
            return Err(Error::Config("encoder dimensions must be positive".into()));
        }
        Ok(())
    }
}

const LN_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EncoderClassifier {
    pub cfg: EncoderConfig,
    pub params: ParamStore,
}

impl EncoderClassifier {
    /// Random initialization: Gaussian(0, 0.02) projections, unit
    /// layer-norm gains, zero biases.
    pub fn init(cfg: EncoderConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut params = ParamStore::new();
        let mut rng = derive_rng(seed, 0x656e_6364);
        let h = cfg.hidden;
        params.insert("embeddings.word", normal(&[cfg.vocab_size, h], 0.02, &mut rng));
        params.insert(
            "embeddings.position",
            normal(&[cfg.max_position, h], 0.02, &mut rng),
        );
        params.insert("embeddings.segment", normal(&[2, h], 0.02, &mut rng));
        params.insert("embeddings.ln.gain", ones(&[h]));
        params.insert("embeddings.ln.bias", zeros(&[h]));
        for layer in 0..cfg.layers {
            for proj in ["q", "k", "v", "out"] {
                params.insert(
                    format!("layer.{layer}.attn.{proj}.weight"),
                    normal(&[h, h], 0.02, &mut rng),
                );
                params.insert(format!("layer.{layer}.attn.{proj}.bias"), zeros(&[h]));
            }
            params.insert(format!("layer.{layer}.attn.ln.gain"), ones(&[h]));
            params.insert(format!("layer.{layer}.attn.ln.bias"), zeros(&[h]));
            params.insert(
                format!("layer.{layer}.ffn.in.weight"),
                normal(&[cfg.intermediate, h], 0.02, &mut rng),
            );
            params.insert(format!("layer.{layer}.ffn.in.bias"), zeros(&[cfg.intermediate]));
            params.insert(
                format!("layer.{layer}.ffn.out.weight"),
                normal(&[h, cfg.intermediate], 0.02, &mut rng),
            );
            params.insert(format!("layer.{layer}.ffn.out.bias"), zeros(&[h]));
            params.insert(format!("layer.{layer}.ffn.ln.gain"), ones(&[h]));
            params.insert(format!("layer.{layer}.ffn.ln.bias"), zeros(&[h]));
        }
        params.insert("pooler.weight", normal(&[h, h], 0.02, &mut rng));
        params.insert("pooler.bias", zeros(&[h]));
        ClassifierHead::init(h, seed).register(&mut params);
        Ok(EncoderClassifier { cfg, params })
    }

    /// Wrap pre-trained encoder weights, attaching a fresh head. The store
    /// must carry every encoder tensor at the configured shapes.
    pub fn from_pretrained(cfg: EncoderConfig, encoder: &ParamStore, seed: u64) -> Result<Self> {
        let mut model = EncoderClassifier::init(cfg, seed)?;
        let expected: Vec<String> = model
            .params
            .names()
            .filter(|n| !n.starts_with("head."))
            .cloned()
            .collect();
        for name in &expected {
            let tensor = encoder.get(name).ok_or_else(|| {
                Error::ArtifactMismatch(format!("checkpoint lacks tensor `{name}`"))
            })?;
            let slot = model.params.get(name).unwrap();
            if slot.shape() != tensor.shape() {
                return Err(Error::ArtifactMismatch(format!(
                    "tensor `{name}` has shape {:?}, config expects {:?}",
                    tensor.shape(),
                    slot.shape()
                )));
            }
        }
        model
            .params
            .assign_from(&encoder.subset(|n| !n.starts_with("head.")))?;
        Ok(model)
    }

    pub fn reinit_head(&mut self, seed: u64) {
        reinit_head_params(&mut self.params, self.cfg.hidden, seed);
    }

    /// Pooled output then logits; returns both vars.
    pub fn forward_parts(
        &self,
        tape: &mut Tape,
        vars: &IndexMap<String, Var>,
        batch: &[EncodedPair],
    ) -> Result<(Var, Var)> {
        let (batch_size, seq_len) = validate_batch(batch, self.cfg.vocab_size)?;
        if seq_len > self.cfg.max_position {
            return Err(Error::Config(format!(
                "sequence length {seq_len} exceeds the encoder's {} positions",
                self.cfg.max_position
            )));
        }
        let h = self.cfg.hidden;
        let heads = self.cfg.heads;
        let head_dim = h / heads;

        let mut ids = Array2::<usize>::zeros((batch_size, seq_len));
        let mut segments = Array2::<usize>::zeros((batch_size, seq_len));
        let mut positions = Array2::<usize>::zeros((batch_size, seq_len));
        for (b, pair) in batch.iter().enumerate() {
            for t in 0..seq_len {
                ids[[b, t]] = pair.token_ids[t] as usize;
                segments[[b, t]] = pair.segment_ids[t] as usize;
                positions[[b, t]] = t;
            }
        }

        // additive mask (B, 1, 1, T): 0 on real tokens, -1e9 on padding
        let mut mask = ArrayD::<f64>::zeros(IxDyn(&[batch_size, 1, 1, seq_len]));
        for (b, pair) in batch.iter().enumerate() {
            for t in 0..seq_len {
                if pair.attention_mask[t] == 0 {
                    mask[[b, 0, 0, t]] = MASK_NEG;
                }
            }
        }

        let word = tape.embedding(vars["embeddings.word"], ids);
        let position = tape.embedding(vars["embeddings.position"], positions);
        let segment = tape.embedding(vars["embeddings.segment"], segments);
        let sum = tape.add(word, position);
        let sum = tape.add(sum, segment);
        let mut hidden = tape.layer_norm(
            sum,
            vars["embeddings.ln.gain"],
            vars["embeddings.ln.bias"],
            LN_EPS,
        );

        let linear = |tape: &mut Tape, x: Var, name: &str| -> Var {
            let projected = tape.matmul(x, vars[&format!("{name}.weight")], true);
            tape.add_bias(projected, vars[&format!("{name}.bias")])
        };

        for layer in 0..self.cfg.layers {
            let prefix = format!("layer.{layer}");
            let flat = tape.reshape(hidden, &[batch_size * seq_len, h]);

            let to_heads = |tape: &mut Tape, x: Var| -> Var {
                let shaped = tape.reshape(x, &[batch_size, seq_len, heads, head_dim]);
                tape.permute(shaped, &[0, 2, 1, 3])
            };
            let q_flat = linear(tape, flat, &format!("{prefix}.attn.q"));
            let k_flat = linear(tape, flat, &format!("{prefix}.attn.k"));
            let v_flat = linear(tape, flat, &format!("{prefix}.attn.v"));
            let q = to_heads(tape, q_flat);
            let k = to_heads(tape, k_flat);
            let v = to_heads(tape, v_flat);

            let raw_scores = tape.batch_matmul(q, k, true);
            let scaled = tape.scale(raw_scores, 1.0 / (head_dim as f64).sqrt());
            let masked = tape.add_const(scaled, &mask);
            let attn = tape.softmax_last(masked);
            let context = tape.batch_matmul(attn, v, false);
            let merged = tape.permute(context, &[0, 2, 1, 3]);
            let merged_flat = tape.reshape(merged, &[batch_size * seq_len, h]);
            let out_flat = linear(tape, merged_flat, &format!("{prefix}.attn.out"));
            let out = tape.reshape(out_flat, &[batch_size, seq_len, h]);
            let residual = tape.add(hidden, out);
            hidden = tape.layer_norm(
                residual,
                vars[&format!("{prefix}.attn.ln.gain")],
                vars[&format!("{prefix}.attn.ln.bias")],
                LN_EPS,
            );

            let ffn_flat = tape.reshape(hidden, &[batch_size * seq_len, h]);
            let pre = linear(tape, ffn_flat, &format!("{prefix}.ffn.in"));
            let activated = tape.gelu(pre);
            let down = linear(tape, activated, &format!("{prefix}.ffn.out"));
            let down3 = tape.reshape(down, &[batch_size, seq_len, h]);
            let residual2 = tape.add(hidden, down3);
            hidden = tape.layer_norm(
                residual2,
                vars[&format!("{prefix}.ffn.ln.gain")],
                vars[&format!("{prefix}.ffn.ln.bias")],
                LN_EPS,
            );
        }

        let cls = tape.select_step(hidden, 0);
        let pooled_pre = linear(tape, cls, "pooler");
        let pooled = tape.tanh(pooled_pre);
        let logits = linear(tape, pooled, "head");
        Ok((pooled, logits))
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        vars: &IndexMap<String, Var>,
        batch: &[EncodedPair],
    ) -> Result<Var> {
        Ok(self.forward_parts(tape, vars, batch)?.1)
    }

    /// The encoder's sentence-level representation (from the [CLS]
    /// position), one row per input.
    pub fn pooled_output(&self, batch: &[EncodedPair]) -> Result<Array2<f64>> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let (pooled, _) = self.forward_parts(&mut tape, &vars, batch)?;
        Ok(tape
            .value(pooled)
            .view()
            .into_dimensionality::<Ix2>()
            .unwrap()
            .to_owned())
    }
}
