//! The sign model: part-wise GCN encoding, fusion into a shared latent
//! trajectory, a weight-shared encoder–decoder transformer, and recurrent
//! looping.
//!
//! Depth comes from recurrence, not stacking: the encoder and decoder own a
//! small stack of unique layers, and a loop pass reapplies the same stack.
//! `Base(U×1)` and `Loop(U×L)` are the same parameters run with different
//! loop counts.
//!
//! Three loop placements are supported:
//!
//! - **encoder–decoder**: the previous cross-modal state is injected into
//!   the sign sequence (sequence-axis concatenation by default) and the
//!   full encoder–decoder is re-run;
//! - **encoder**: the visual state is refined residually
//!   (`H_i = E(H_{i-1} + S)`), decoded once at the end; intermediate
//!   snapshots come from a parameter-detached decoder so only the final
//!   pass trains the decoder;
//! - **decoder**: the encoder runs exactly once and the decoder reprocesses
//!   its own previous output as input.
//!
//! Every variant records per-iteration snapshots for `i = 1..=L` (the
//! pre-loop state `i = 0` is excluded by design).

mod attention;
mod embedding;
mod gcn;
pub(crate) mod init;

pub use attention::{causal_mask, gelu, key_mask, Decoder, Encoder, LayerNorm, MultiHeadAttention};
pub use embedding::{sinusoidal_positions, LmHead, TextEmbedding};
pub use gcn::{normalized_adjacency, part_edges, Fusion, PartEncoder};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Batch, PAD, PART_NAMES};
use crate::error::{Error, Result};
use crate::tensor::{DType, Tensor};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_gcn: usize,
    pub d_model: usize,
    pub heads: usize,
    pub d_ffn: usize,
    /// Unique encoder layers (M/L in the depth-scaling scheme).
    pub enc_layers: usize,
    /// Unique decoder layers (N/L).
    pub dec_layers: usize,
    pub vocab: usize,
    pub max_frames: usize,
    pub max_text: usize,
    pub tied_lm_head: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_gcn: 32,
            d_model: 64,
            heads: 4,
            d_ffn: 128,
            enc_layers: 1,
            dec_layers: 1,
            vocab: 4,
            max_frames: 16,
            max_text: 4,
            tied_lm_head: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model % self.heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} not divisible by heads {}",
                self.d_model, self.heads
            )));
        }
        if self.enc_layers == 0 || self.dec_layers == 0 {
            return Err(Error::Config("layer counts must be >= 1".into()));
        }
        if self.vocab < 4 {
            return Err(Error::Config("vocabulary needs specials plus one gloss".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopVariant {
    EncoderDecoder,
    Encoder,
    Decoder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    Concat,
    Add,
    Attention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtraFeature {
    None,
    Noise,
    Temporal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub variant: LoopVariant,
    /// Recurrent iterations L (snapshots are recorded for 1..=L).
    pub loops: usize,
    pub injection: Injection,
    pub extra: ExtraFeature,
    /// Std-dev for the `noise` extra-feature mode.
    pub noise_std: f64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            variant: LoopVariant::EncoderDecoder,
            loops: 1,
            injection: Injection::Concat,
            extra: ExtraFeature::None,
            noise_std: 0.1,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.loops == 0 {
            return Err(Error::Config("loop count must be >= 1".into()));
        }
        Ok(())
    }
}

/// The evolving cross-modal state plus its per-iteration snapshots.
pub struct LoopState {
    /// Final cross-modal representation `(B, T_text, d_model)`.
    pub h_s2t: Tensor,
    /// Snapshots for iterations `1..=L`; the last equals `h_s2t`.
    pub snapshots: Vec<Tensor>,
    pub encoder_invocations: usize,
}

pub struct ForwardOutput {
    /// Fused sign trajectory `(B, T_frames, d_model)` fed to the loop.
    pub sign_features: Tensor,
    pub state: LoopState,
    /// `(B, T_text, vocab)` teacher-forced logits.
    pub logits: Tensor,
}

pub struct SignModel {
    pub model_cfg: ModelConfig,
    pub loop_cfg: LoopConfig,
    dtype: DType,
    parts: Vec<PartEncoder>,
    fusion: Fusion,
    sign_positions: Tensor,
    temporal_extra: Tensor,
    encoder: Encoder,
    decoder: Decoder,
    embed: TextEmbedding,
    lm_head: LmHead,
    /// Length-alignment map `(max_frames, max_text)` for `add` injection
    /// between unequal sequence lengths.
    inject_align: Option<Tensor>,
    inject_attn: Option<MultiHeadAttention>,
}

impl SignModel {
    pub fn new(
        model_cfg: ModelConfig,
        loop_cfg: LoopConfig,
        rng: &mut ChaCha8Rng,
        dtype: DType,
    ) -> Result<Self> {
        model_cfg.validate()?;
        loop_cfg.validate()?;
        let mc = &model_cfg;
        let parts = PART_NAMES
            .iter()
            .map(|p| PartEncoder::new(p, mc.d_gcn, rng, dtype))
            .collect::<Result<_>>()?;
        let fusion = Fusion::new(mc.d_gcn, mc.d_model, rng, dtype)?;
        let sign_positions =
            sinusoidal_positions(mc.max_frames + mc.max_text, mc.d_model, dtype)?;
        // a second, phase-shifted table for the `temporal` extra feature
        let temporal_extra = {
            let base = sinusoidal_positions(mc.max_frames, mc.d_model, dtype)?;
            base.mul_scalar(0.5)?
        };
        let encoder = Encoder::new(mc.enc_layers, mc.d_model, mc.heads, mc.d_ffn, rng, dtype)?;
        let decoder = Decoder::new(mc.dec_layers, mc.d_model, mc.heads, mc.d_ffn, rng, dtype)?;
        let embed = TextEmbedding::new(mc.vocab, mc.d_model, mc.max_text, rng, dtype)?;
        let lm_head = LmHead::new(mc.d_model, mc.vocab, mc.tied_lm_head, rng, dtype)?;
        let inject_align = if loop_cfg.injection == Injection::Add {
            Some(init::xavier(rng, mc.max_frames, mc.max_text, dtype)?)
        } else {
            None
        };
        let inject_attn = if loop_cfg.injection == Injection::Attention {
            Some(MultiHeadAttention::new(mc.d_model, mc.heads, rng, dtype)?)
        } else {
            None
        };
        Ok(SignModel {
            model_cfg,
            loop_cfg,
            dtype,
            parts,
            fusion,
            sign_positions,
            temporal_extra,
            encoder,
            decoder,
            embed,
            lm_head,
            inject_align,
            inject_attn,
        })
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn embedding(&self) -> &TextEmbedding {
        &self.embed
    }

    /// Trainable parameters in a stable, construction-determined order.
    pub fn parameters(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        for (p, name) in self.parts.iter().zip(PART_NAMES) {
            p.collect_params(&format!("gcn.{name}"), &mut out);
        }
        self.fusion.collect_params("fusion", &mut out);
        self.encoder.collect_params("encoder", &mut out);
        self.decoder.collect_params("decoder", &mut out);
        self.embed.collect_params("embed", &mut out);
        self.lm_head.collect_params("lm_head", &mut out);
        if let Some(a) = &self.inject_align {
            out.push(("inject.align".into(), a.clone()));
        }
        if let Some(a) = &self.inject_attn {
            a.collect_params("inject.attn", &mut out);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn decoder_parameters(&self) -> Vec<(String, Tensor)> {
        let mut out = Vec::new();
        self.decoder.collect_params("decoder", &mut out);
        out
    }

    /// Unique layers × loop count, for fair-comparison bookkeeping.
    pub fn effective_depth(&self) -> usize {
        (self.model_cfg.enc_layers + self.model_cfg.dec_layers) * self.loop_cfg.loops
    }

    /// GCN + fusion + positions: `(B, T, d_model)` sign trajectory.
    pub fn encode_sign(&self, parts: &[Tensor], frame_mask: &Tensor) -> Result<Tensor> {
        let feats: Vec<Tensor> = self
            .parts
            .iter()
            .zip(parts)
            .map(|(enc, x)| enc.forward(x, frame_mask))
            .collect::<Result<_>>()?;
        let fused = self.fusion.forward(&feats)?;
        let t = fused.shape()[1];
        fused.add(&self.sign_positions.slice(0, 0, t)?)
    }

    fn text_valid_mask(&self, tokens: &[Vec<usize>]) -> Result<Tensor> {
        let b = tokens.len();
        let t = tokens[0].len();
        let data: Vec<f64> = tokens
            .iter()
            .flat_map(|row| row.iter().map(|&tok| if tok == PAD { 0.0 } else { 1.0 }))
            .collect();
        Tensor::from_vec(data, &[b, t, 1], self.dtype)
    }

    fn extra_features(
        &self,
        s: &Tensor,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> Result<Tensor> {
        match self.loop_cfg.extra {
            ExtraFeature::None => Ok(s.clone()),
            ExtraFeature::Temporal => {
                let t = s.shape()[1];
                s.add(&self.temporal_extra.slice(0, 0, t)?)
            }
            ExtraFeature::Noise => {
                let rng = rng.as_deref_mut().ok_or_else(|| {
                    Error::Contract("noise extra-feature injection needs an RNG".into())
                })?;
                let n = init::noise(rng, s.shape(), self.loop_cfg.noise_std, self.dtype)?;
                s.add(&n)
            }
        }
    }

    /// Combine the sign trajectory with the previous cross-modal state.
    /// Returns the encoder input and its validity mask.
    fn inject(
        &self,
        s: &Tensor,
        frame_mask: &Tensor,
        h: &Tensor,
    ) -> Result<(Tensor, Tensor)> {
        let (b, ts) = (s.shape()[0], s.shape()[1]);
        let th = h.shape()[1];
        match self.loop_cfg.injection {
            Injection::Concat => {
                let input = Tensor::concat(&[s, h], 1)?;
                let ones = Tensor::full(&[b, th, 1], 1.0, self.dtype);
                let valid = Tensor::concat(&[frame_mask, &ones], 1)?;
                Ok((input, valid))
            }
            Injection::Add => {
                if ts == th {
                    return Ok((s.add(h)?, frame_mask.clone()));
                }
                let align = self.inject_align.as_ref().expect("built for add injection");
                if ts != align.shape()[0] || th != align.shape()[1] {
                    return Err(Error::Config(format!(
                        "add injection requires equal sequence lengths or lengths matching \
                         the alignment map ({}x{}), got {ts} and {th}",
                        align.shape()[0],
                        align.shape()[1]
                    )));
                }
                let aligned = align.matmul(h)?;
                Ok((s.add(&aligned)?, frame_mask.clone()))
            }
            Injection::Attention => {
                let attn = self.inject_attn.as_ref().expect("built for attention injection");
                let mixed = s.add(&attn.forward(s, h, None)?)?;
                Ok((mixed, frame_mask.clone()))
            }
        }
    }

    /// Run the configured recurrence. `frozen_aux_decoder` supplies the
    /// parameter-detached decoder used for intermediate snapshots of the
    /// encoder-focused variant (a fresh detached copy of the live decoder
    /// when `None`). `rng` is only consumed by the `noise` extra-feature
    /// mode.
    pub fn run_loop(
        &self,
        s: &Tensor,
        frame_mask: &Tensor,
        tokens_in: &[Vec<usize>],
        frozen_aux_decoder: Option<&Decoder>,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<LoopState> {
        self.encoder.reset_invocations();
        let t_ctx = self.embed.forward(tokens_in)?;
        let t_text = t_ctx.shape()[1];
        let text_valid = self.text_valid_mask(tokens_in)?;
        let self_mask = causal_mask(t_text, self.dtype)?.add(&key_mask(&text_valid)?)?;
        let mem_mask = key_mask(frame_mask)?;
        let loops = self.loop_cfg.loops;

        let state = match self.loop_cfg.variant {
            LoopVariant::EncoderDecoder => {
                let e0 = self.encoder.forward(s, Some(&mem_mask))?;
                let mut h = self
                    .decoder
                    .forward(&t_ctx, &e0, Some(&self_mask), Some(&mem_mask))?;
                let mut snapshots = Vec::with_capacity(loops);
                for _ in 1..=loops {
                    let s_i = self.extra_features(s, &mut rng)?;
                    let (input, valid) = self.inject(&s_i, frame_mask, &h)?;
                    let km = key_mask(&valid)?;
                    let e = self.encoder.forward(&input, Some(&km))?;
                    h = self
                        .decoder
                        .forward(&t_ctx, &e, Some(&self_mask), Some(&km))?;
                    snapshots.push(h.clone());
                }
                LoopState {
                    h_s2t: h,
                    snapshots,
                    encoder_invocations: self.encoder.invocations(),
                }
            }
            LoopVariant::Encoder => {
                let fresh;
                let aux_dec = match frozen_aux_decoder {
                    Some(d) => d,
                    None => {
                        fresh = self.decoder.detached();
                        &fresh
                    }
                };
                let mut hs = self.encoder.forward(s, Some(&mem_mask))?;
                let mut snapshots = Vec::with_capacity(loops);
                let mut h_final = None;
                for i in 1..=loops {
                    let s_i = self.extra_features(s, &mut rng)?;
                    hs = self.encoder.forward(&hs.add(&s_i)?, Some(&mem_mask))?;
                    let h = if i < loops {
                        aux_dec.forward(&t_ctx, &hs, Some(&self_mask), Some(&mem_mask))?
                    } else {
                        self.decoder
                            .forward(&t_ctx, &hs, Some(&self_mask), Some(&mem_mask))?
                    };
                    snapshots.push(h.clone());
                    h_final = Some(h);
                }
                LoopState {
                    h_s2t: h_final.expect("loops >= 1"),
                    snapshots,
                    encoder_invocations: self.encoder.invocations(),
                }
            }
            LoopVariant::Decoder => {
                let hs = self.encoder.forward(s, Some(&mem_mask))?;
                let mut h = self
                    .decoder
                    .forward(&t_ctx, &hs, Some(&self_mask), Some(&mem_mask))?;
                let mut snapshots = Vec::with_capacity(loops);
                for _ in 1..=loops {
                    h = self
                        .decoder
                        .forward(&h, &hs, Some(&self_mask), Some(&mem_mask))?;
                    snapshots.push(h.clone());
                }
                LoopState {
                    h_s2t: h,
                    snapshots,
                    encoder_invocations: self.encoder.invocations(),
                }
            }
        };
        Ok(state)
    }

    /// Full teacher-forced pass over a batch.
    pub fn forward(
        &self,
        batch: &Batch,
        frozen_aux_decoder: Option<&Decoder>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardOutput> {
        let s = self.encode_sign(&batch.parts, &batch.frame_mask)?;
        let state = self.run_loop(&s, &batch.frame_mask, &batch.tokens_in, frozen_aux_decoder, rng)?;
        let logits = self.lm_head.forward(&state.h_s2t, &self.embed)?;
        Ok(ForwardOutput {
            sign_features: s,
            state,
            logits,
        })
    }

    /// Detached decoder copy; exposed so a gradient-check harness can pin
    /// the auxiliary decoder across finite-difference evaluations.
    pub fn frozen_decoder(&self) -> Decoder {
        self.decoder.detached()
    }

    /// Vocabulary logits for a cross-modal state `(B, T, d_model)`.
    pub fn lm_head_forward(&self, h: &Tensor) -> Result<Tensor> {
        self.lm_head.forward(h, &self.embed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(17)
    }

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            d_gcn: 4,
            d_model: 8,
            heads: 2,
            d_ffn: 16,
            enc_layers: 1,
            dec_layers: 1,
            vocab: 6,
            max_frames: 5,
            max_text: 2,
            tied_lm_head: false,
        }
    }

    fn loop_cfg(variant: LoopVariant, loops: usize) -> LoopConfig {
        LoopConfig {
            variant,
            loops,
            injection: Injection::Concat,
            extra: ExtraFeature::None,
            noise_std: 0.1,
        }
    }

    fn toy_inputs(b: usize, t: usize) -> (Vec<Tensor>, Tensor, Vec<Vec<usize>>) {
        let mut parts = Vec::new();
        for n in [9usize, 18, 21, 21] {
            let numel = b * t * n * 3;
            parts.push(
                Tensor::from_vec(
                    (0..numel).map(|v| ((v % 17) as f64 - 8.0) * 0.05).collect(),
                    &[b, t, n, 3],
                    DType::F64,
                )
                .unwrap(),
            );
        }
        let mask = Tensor::full(&[b, t, 1], 1.0, DType::F64);
        let tokens: Vec<Vec<usize>> = (0..b).map(|i| vec![1, 3 + (i % 3)]).collect();
        (parts, mask, tokens)
    }

    #[test]
    fn parameter_count_is_loop_invariant() {
        for u in [1usize, 2, 3] {
            let mut counts = Vec::new();
            for l in [1usize, 2, 3] {
                let mc = ModelConfig {
                    enc_layers: u,
                    dec_layers: u,
                    ..tiny_cfg()
                };
                let m = SignModel::new(mc, loop_cfg(LoopVariant::EncoderDecoder, l), &mut rng(), DType::F64).unwrap();
                counts.push(m.parameter_count());
            }
            assert_eq!(counts[0], counts[1]);
            assert_eq!(counts[1], counts[2]);
        }
    }

    #[test]
    fn snapshots_exclude_initial_state_and_count_loops() {
        for variant in [LoopVariant::EncoderDecoder, LoopVariant::Encoder, LoopVariant::Decoder] {
            for loops in [1usize, 2, 3] {
                let m = SignModel::new(tiny_cfg(), loop_cfg(variant, loops), &mut rng(), DType::F64).unwrap();
                let (parts, mask, tokens) = toy_inputs(2, 5);
                let s = m.encode_sign(&parts, &mask).unwrap();
                let state = m.run_loop(&s, &mask, &tokens, None, None).unwrap();
                assert_eq!(state.snapshots.len(), loops);
                // final snapshot is the final state
                assert_eq!(
                    state.snapshots.last().unwrap().to_vec(),
                    state.h_s2t.to_vec()
                );
            }
        }
    }

    #[test]
    fn decoder_variant_invokes_encoder_once() {
        for loops in [1usize, 3] {
            let m = SignModel::new(tiny_cfg(), loop_cfg(LoopVariant::Decoder, loops), &mut rng(), DType::F64).unwrap();
            let (parts, mask, tokens) = toy_inputs(2, 5);
            let s = m.encode_sign(&parts, &mask).unwrap();
            let state = m.run_loop(&s, &mask, &tokens, None, None).unwrap();
            assert_eq!(state.encoder_invocations, 1);
        }
    }

    #[test]
    fn decoder_variant_zero_loops_degenerates_to_plain_pass() {
        // internal contract: the loop body tolerates L = 0 (plain pass, no
        // snapshots), even though configs validate loops >= 1
        let mut cfg = loop_cfg(LoopVariant::Decoder, 1);
        cfg.loops = 0;
        let mc = tiny_cfg();
        let m = {
            let mut r = rng();
            let mut model = SignModel::new(mc, loop_cfg(LoopVariant::Decoder, 1), &mut r, DType::F64).unwrap();
            model.loop_cfg = cfg;
            model
        };
        let (parts, mask, tokens) = toy_inputs(1, 5);
        let s = m.encode_sign(&parts, &mask).unwrap();
        let state = m.run_loop(&s, &mask, &tokens, None, None).unwrap();
        assert!(state.snapshots.is_empty());
        assert_eq!(state.encoder_invocations, 1);
    }

    #[test]
    fn concat_injection_extends_encoder_input() {
        let m = SignModel::new(tiny_cfg(), loop_cfg(LoopVariant::EncoderDecoder, 1), &mut rng(), DType::F64).unwrap();
        let (parts, mask, _tokens) = toy_inputs(1, 5);
        let s = m.encode_sign(&parts, &mask).unwrap();
        let h = Tensor::zeros(&[1, 2, 8], DType::F64);
        let (input, valid) = m.inject(&s, &mask, &h).unwrap();
        assert_eq!(input.shape(), &[1, 7, 8]); // T_frames + T_text
        assert_eq!(valid.shape(), &[1, 7, 1]);
    }

    #[test]
    fn add_injection_length_contract() {
        let mut cfg = loop_cfg(LoopVariant::EncoderDecoder, 1);
        cfg.injection = Injection::Add;
        let m = SignModel::new(tiny_cfg(), cfg, &mut rng(), DType::F64).unwrap();
        let (parts, mask, _tokens) = toy_inputs(1, 5);
        let s = m.encode_sign(&parts, &mask).unwrap();
        // configured lengths (5, 2) are accepted through the alignment map
        let h = Tensor::zeros(&[1, 2, 8], DType::F64);
        let (input, _) = m.inject(&s, &mask, &h).unwrap();
        assert_eq!(input.shape(), &[1, 5, 8]);
        // mismatched lengths are a config error
        let h_bad = Tensor::zeros(&[1, 3, 8], DType::F64);
        assert!(matches!(m.inject(&s, &mask, &h_bad), Err(Error::Config(_))));
        // equal lengths bypass the alignment map entirely
        let h_eq = Tensor::zeros(&[1, 5, 8], DType::F64);
        let (input, _) = m.inject(&s, &mask, &h_eq).unwrap();
        assert_eq!(input.to_vec(), s.to_vec());
    }

    #[test]
    fn intermediate_decoder_gradients_are_exactly_zero() {
        let m = SignModel::new(tiny_cfg(), loop_cfg(LoopVariant::Encoder, 3), &mut rng(), DType::F64).unwrap();
        let (parts, mask, tokens) = toy_inputs(2, 5);
        let s = m.encode_sign(&parts, &mask).unwrap();
        let state = m.run_loop(&s, &mask, &tokens, None, None).unwrap();
        // loss over intermediate snapshots only
        let mut loss = Tensor::scalar(0.0, DType::F64);
        for snap in &state.snapshots[..state.snapshots.len() - 1] {
            loss = loss.add(&snap.square().unwrap().sum_all().unwrap()).unwrap();
        }
        let grads = loss.backward().unwrap();
        for (name, p) in m.decoder_parameters() {
            assert!(
                grads.get(&p).is_none(),
                "decoder param {name} received gradient from an intermediate pass"
            );
        }
        // encoder params do receive gradient through the snapshots
        let enc_params: Vec<(String, Tensor)> = {
            let mut v = Vec::new();
            m.encoder.collect_params("encoder", &mut v);
            v
        };
        let any_enc = enc_params.iter().any(|(_, p)| grads.get(p).is_some());
        assert!(any_enc, "encoder should be supervised by intermediate snapshots");
    }

    #[test]
    fn final_pass_decoder_gradient_is_nonzero() {
        let m = SignModel::new(tiny_cfg(), loop_cfg(LoopVariant::Encoder, 2), &mut rng(), DType::F64).unwrap();
        let (parts, mask, tokens) = toy_inputs(2, 5);
        let s = m.encode_sign(&parts, &mask).unwrap();
        let state = m.run_loop(&s, &mask, &tokens, None, None).unwrap();
        let loss = state.h_s2t.square().unwrap().sum_all().unwrap();
        let grads = loss.backward().unwrap();
        let nonzero = m
            .decoder_parameters()
            .iter()
            .any(|(_, p)| grads.get(p).map(|g| g.iter().any(|v| *v != 0.0)).unwrap_or(false));
        assert!(nonzero);
    }

    #[test]
    fn same_seed_same_forward() {
        let build = || {
            let mut r = rng();
            SignModel::new(tiny_cfg(), loop_cfg(LoopVariant::EncoderDecoder, 2), &mut r, DType::F64).unwrap()
        };
        let m1 = build();
        let m2 = build();
        let (parts, mask, tokens) = toy_inputs(2, 5);
        let o1 = m1
            .forward(&crate::data::Batch {
                parts: parts.clone(),
                frame_mask: mask.clone(),
                frame_mask_bool: vec![vec![true; 5]; 2],
                tokens_in: tokens.clone(),
                tokens_out: tokens.clone(),
                text_mask: Tensor::full(&[2, 2, 1], 1.0, DType::F64),
                ids: vec!["a".into(), "b".into()],
                glosses: vec!["g".into(), "g".into()],
            }, None, None)
            .unwrap();
        let o2 = m2
            .forward(&crate::data::Batch {
                parts,
                frame_mask: mask,
                frame_mask_bool: vec![vec![true; 5]; 2],
                tokens_in: tokens.clone(),
                tokens_out: tokens,
                text_mask: Tensor::full(&[2, 2, 1], 1.0, DType::F64),
                ids: vec!["a".into(), "b".into()],
                glosses: vec!["g".into(), "g".into()],
            }, None, None)
            .unwrap();
        assert_eq!(o1.logits.to_vec(), o2.logits.to_vec());
    }
}
