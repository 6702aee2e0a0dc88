//! Transformer building blocks: layer norm, multi-head attention,
//! position-wise feed-forward, and pre-norm encoder/decoder layers. The
//! encoder and decoder own a stack of *unique* layers; recurrent depth comes
//! from reapplying the stack, so parameter count is independent of the loop
//! count.

use std::cell::Cell;

use rand_chacha::ChaCha8Rng;

use super::init::{ones_param, xavier, zeros_param};
use crate::error::{Error, Result};
use crate::tensor::{DType, Tensor};

pub(crate) const MASK_OFF: f64 = -1e9;

/// Additive key mask from a `(B, T, 1)` validity mask: 0 on real positions,
/// a large negative value on padding; shaped `(B, 1, 1, T)` for broadcasting
/// over heads and query positions.
pub fn key_mask(valid: &Tensor) -> Result<Tensor> {
    let b = valid.shape()[0];
    let t = valid.shape()[1];
    let data: Vec<f64> = valid
        .data()
        .iter()
        .map(|&v| if v > 0.5 { 0.0 } else { MASK_OFF })
        .collect();
    Tensor::from_vec(data, &[b, 1, 1, t], valid.dtype())
}

/// Additive causal mask `(T, T)`: position `t` may attend to `<= t`.
pub fn causal_mask(t: usize, dtype: DType) -> Result<Tensor> {
    let mut data = vec![0.0; t * t];
    for q in 0..t {
        for k in (q + 1)..t {
            data[q * t + k] = MASK_OFF;
        }
    }
    Tensor::from_vec(data, &[t, t], dtype)
}

pub struct LayerNorm {
    gain: Tensor,
    bias: Tensor,
    eps: f64,
}

impl LayerNorm {
    pub fn new(d: usize, dtype: DType) -> Result<Self> {
        Ok(LayerNorm {
            gain: ones_param(&[d], dtype)?,
            bias: zeros_param(&[d], dtype)?,
            eps: 1e-5,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let last = x.shape().len() - 1;
        let mu = x.mean_axis(last, true)?;
        let centered = x.sub(&mu)?;
        let var = centered.square()?.mean_axis(last, true)?;
        let xhat = centered.div(&var.add_scalar(self.eps)?.sqrt()?)?;
        xhat.mul(&self.gain)?.add(&self.bias)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.gain"), self.gain.clone()));
        out.push((format!("{prefix}.bias"), self.bias.clone()));
    }

    pub fn detached(&self) -> LayerNorm {
        LayerNorm {
            gain: self.gain.detach(),
            bias: self.bias.detach(),
            eps: self.eps,
        }
    }
}

/// `0.5·x·(1 + tanh(√(2/π)(x + 0.044715 x³)))` — smooth everywhere, which
/// keeps finite-difference gradient checks clean.
pub fn gelu(x: &Tensor) -> Result<Tensor> {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let inner = x
        .square()?
        .mul(x)?
        .mul_scalar(0.044715)?
        .add(x)?
        .mul_scalar(c)?
        .tanh()?
        .add_scalar(1.0)?;
    x.mul_scalar(0.5)?.mul(&inner)
}

pub struct MultiHeadAttention {
    wq: Tensor,
    wk: Tensor,
    wv: Tensor,
    wo: Tensor,
    bq: Tensor,
    bk: Tensor,
    bv: Tensor,
    bo: Tensor,
    heads: usize,
    d_model: usize,
}

impl MultiHeadAttention {
    pub fn new(d_model: usize, heads: usize, rng: &mut ChaCha8Rng, dtype: DType) -> Result<Self> {
        if d_model % heads != 0 {
            return Err(Error::Config(format!(
                "d_model {d_model} not divisible by {heads} heads"
            )));
        }
        Ok(MultiHeadAttention {
            wq: xavier(rng, d_model, d_model, dtype)?,
            wk: xavier(rng, d_model, d_model, dtype)?,
            wv: xavier(rng, d_model, d_model, dtype)?,
            wo: xavier(rng, d_model, d_model, dtype)?,
            bq: zeros_param(&[d_model], dtype)?,
            bk: zeros_param(&[d_model], dtype)?,
            bv: zeros_param(&[d_model], dtype)?,
            bo: zeros_param(&[d_model], dtype)?,
            heads,
            d_model,
        })
    }

    fn split_heads(&self, x: &Tensor) -> Result<Tensor> {
        let (b, t) = (x.shape()[0], x.shape()[1]);
        let dk = self.d_model / self.heads;
        x.reshape(&[b, t, self.heads, dk])?.permute(&[0, 2, 1, 3])
    }

    /// `query (B,Tq,d)`, `keyval (B,Tk,d)`, optional additive mask
    /// broadcastable to `(B,H,Tq,Tk)`.
    pub fn forward(&self, query: &Tensor, keyval: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        let (b, tq) = (query.shape()[0], query.shape()[1]);
        let dk = self.d_model / self.heads;
        let q = self.split_heads(&query.matmul(&self.wq)?.add(&self.bq)?)?;
        let k = self.split_heads(&keyval.matmul(&self.wk)?.add(&self.bk)?)?;
        let v = self.split_heads(&keyval.matmul(&self.wv)?.add(&self.bv)?)?;
        let mut scores = q
            .matmul(&k.transpose_last2()?)?
            .mul_scalar(1.0 / (dk as f64).sqrt())?;
        if let Some(m) = mask {
            scores = scores.add(m)?;
        }
        let attn = scores.softmax_last()?;
        let ctx = attn
            .matmul(&v)?
            .permute(&[0, 2, 1, 3])?
            .reshape(&[b, tq, self.d_model])?;
        ctx.matmul(&self.wo)?.add(&self.bo)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        for (name, t) in [
            ("wq", &self.wq),
            ("wk", &self.wk),
            ("wv", &self.wv),
            ("wo", &self.wo),
            ("bq", &self.bq),
            ("bk", &self.bk),
            ("bv", &self.bv),
            ("bo", &self.bo),
        ] {
            out.push((format!("{prefix}.{name}"), t.clone()));
        }
    }

    pub fn detached(&self) -> MultiHeadAttention {
        MultiHeadAttention {
            wq: self.wq.detach(),
            wk: self.wk.detach(),
            wv: self.wv.detach(),
            wo: self.wo.detach(),
            bq: self.bq.detach(),
            bk: self.bk.detach(),
            bv: self.bv.detach(),
            bo: self.bo.detach(),
            heads: self.heads,
            d_model: self.d_model,
        }
    }
}

pub struct FeedForward {
    w1: Tensor,
    b1: Tensor,
    w2: Tensor,
    b2: Tensor,
}

impl FeedForward {
    pub fn new(d_model: usize, d_ffn: usize, rng: &mut ChaCha8Rng, dtype: DType) -> Result<Self> {
        Ok(FeedForward {
            w1: xavier(rng, d_model, d_ffn, dtype)?,
            b1: zeros_param(&[d_ffn], dtype)?,
            w2: xavier(rng, d_ffn, d_model, dtype)?,
            b2: zeros_param(&[d_model], dtype)?,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let h = gelu(&x.matmul(&self.w1)?.add(&self.b1)?)?;
        h.matmul(&self.w2)?.add(&self.b2)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.w1"), self.w1.clone()));
        out.push((format!("{prefix}.b1"), self.b1.clone()));
        out.push((format!("{prefix}.w2"), self.w2.clone()));
        out.push((format!("{prefix}.b2"), self.b2.clone()));
    }

    pub fn detached(&self) -> FeedForward {
        FeedForward {
            w1: self.w1.detach(),
            b1: self.b1.detach(),
            w2: self.w2.detach(),
            b2: self.b2.detach(),
        }
    }
}

/// Pre-norm encoder layer: `x + attn(ln1(x))`, then `x + ffn(ln2(x))`.
pub struct EncoderLayer {
    ln1: LayerNorm,
    attn: MultiHeadAttention,
    ln2: LayerNorm,
    ffn: FeedForward,
}

impl EncoderLayer {
    pub fn new(
        d_model: usize,
        heads: usize,
        d_ffn: usize,
        rng: &mut ChaCha8Rng,
        dtype: DType,
    ) -> Result<Self> {
        Ok(EncoderLayer {
            ln1: LayerNorm::new(d_model, dtype)?,
            attn: MultiHeadAttention::new(d_model, heads, rng, dtype)?,
            ln2: LayerNorm::new(d_model, dtype)?,
            ffn: FeedForward::new(d_model, d_ffn, rng, dtype)?,
        })
    }

    pub fn forward(&self, x: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        let n = self.ln1.forward(x)?;
        let x = x.add(&self.attn.forward(&n, &n, mask)?)?;
        let n = self.ln2.forward(&x)?;
        x.add(&self.ffn.forward(&n)?)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.ln1.collect_params(&format!("{prefix}.ln1"), out);
        self.attn.collect_params(&format!("{prefix}.attn"), out);
        self.ln2.collect_params(&format!("{prefix}.ln2"), out);
        self.ffn.collect_params(&format!("{prefix}.ffn"), out);
    }
}

/// Pre-norm decoder layer with causal self-attention and cross-attention
/// over the encoder memory.
pub struct DecoderLayer {
    ln1: LayerNorm,
    self_attn: MultiHeadAttention,
    ln2: LayerNorm,
    cross_attn: MultiHeadAttention,
    ln3: LayerNorm,
    ffn: FeedForward,
}

impl DecoderLayer {
    pub fn new(
        d_model: usize,
        heads: usize,
        d_ffn: usize,
        rng: &mut ChaCha8Rng,
        dtype: DType,
    ) -> Result<Self> {
        Ok(DecoderLayer {
            ln1: LayerNorm::new(d_model, dtype)?,
            self_attn: MultiHeadAttention::new(d_model, heads, rng, dtype)?,
            ln2: LayerNorm::new(d_model, dtype)?,
            cross_attn: MultiHeadAttention::new(d_model, heads, rng, dtype)?,
            ln3: LayerNorm::new(d_model, dtype)?,
            ffn: FeedForward::new(d_model, d_ffn, rng, dtype)?,
        })
    }

    pub fn forward(
        &self,
        x: &Tensor,
        memory: &Tensor,
        self_mask: Option<&Tensor>,
        mem_mask: Option<&Tensor>,
    ) -> Result<Tensor> {
        let n = self.ln1.forward(x)?;
        let x = x.add(&self.self_attn.forward(&n, &n, self_mask)?)?;
        let n = self.ln2.forward(&x)?;
        let x = x.add(&self.cross_attn.forward(&n, memory, mem_mask)?)?;
        let n = self.ln3.forward(&x)?;
        x.add(&self.ffn.forward(&n)?)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        self.ln1.collect_params(&format!("{prefix}.ln1"), out);
        self.self_attn.collect_params(&format!("{prefix}.self_attn"), out);
        self.ln2.collect_params(&format!("{prefix}.ln2"), out);
        self.cross_attn.collect_params(&format!("{prefix}.cross_attn"), out);
        self.ln3.collect_params(&format!("{prefix}.ln3"), out);
        self.ffn.collect_params(&format!("{prefix}.ffn"), out);
    }

    pub fn detached(&self) -> DecoderLayer {
        DecoderLayer {
            ln1: self.ln1.detached(),
            self_attn: self.self_attn.detached(),
            ln2: self.ln2.detached(),
            cross_attn: self.cross_attn.detached(),
            ln3: self.ln3.detached(),
            ffn: self.ffn.detached(),
        }
    }
}

/// Stack of unique encoder layers; one `forward` is one pass.
pub struct Encoder {
    layers: Vec<EncoderLayer>,
    invocations: Cell<usize>,
}

impl Encoder {
    pub fn new(
        n_layers: usize,
        d_model: usize,
        heads: usize,
        d_ffn: usize,
        rng: &mut ChaCha8Rng,
        dtype: DType,
    ) -> Result<Self> {
        let layers = (0..n_layers)
            .map(|_| EncoderLayer::new(d_model, heads, d_ffn, rng, dtype))
            .collect::<Result<_>>()?;
        Ok(Encoder {
            layers,
            invocations: Cell::new(0),
        })
    }

    pub fn forward(&self, x: &Tensor, mask: Option<&Tensor>) -> Result<Tensor> {
        self.invocations.set(self.invocations.get() + 1);
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.forward(&h, mask)?;
        }
        Ok(h)
    }

    pub fn reset_invocations(&self) {
        self.invocations.set(0);
    }

    pub fn invocations(&self) -> usize {
        self.invocations.get()
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        for (i, layer) in self.layers.iter().enumerate() {
            layer.collect_params(&format!("{prefix}.layer{i}"), out);
        }
    }
}

/// Stack of unique decoder layers; `detached` yields a parameter-detached
/// view for gradient-severed auxiliary passes.
pub struct Decoder {
    layers: Vec<DecoderLayer>,
}

impl Decoder {
    pub fn new(
        n_layers: usize,
        d_model: usize,
        heads: usize,
        d_ffn: usize,
        rng: &mut ChaCha8Rng,
        dtype: DType,
    ) -> Result<Self> {
        let layers = (0..n_layers)
            .map(|_| DecoderLayer::new(d_model, heads, d_ffn, rng, dtype))
            .collect::<Result<_>>()?;
        Ok(Decoder { layers })
    }

    pub fn forward(
        &self,
        x: &Tensor,
        memory: &Tensor,
        self_mask: Option<&Tensor>,
        mem_mask: Option<&Tensor>,
    ) -> Result<Tensor> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.forward(&h, memory, self_mask, mem_mask)?;
        }
        Ok(h)
    }

    pub fn detached(&self) -> Decoder {
        Decoder {
            layers: self.layers.iter().map(DecoderLayer::detached).collect(),
        }
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        for (i, layer) in self.layers.iter().enumerate() {
            layer.collect_params(&format!("{prefix}.layer{i}"), out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    #[test]
    fn head_divisibility_is_enforced() {
        let mut r = rng();
        assert!(matches!(
            MultiHeadAttention::new(10, 3, &mut r, DType::F64),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zeroed_output_projections_make_identity_layer() {
        let mut r = rng();
        let layer = EncoderLayer::new(8, 1, 16, &mut r, DType::F64).unwrap();
        // zero the attention output projection and the second FFN map
        layer.attn.wo.set_data(vec![0.0; 64]).unwrap();
        layer.attn.bo.set_data(vec![0.0; 8]).unwrap();
        layer.ffn.w2.set_data(vec![0.0; 16 * 8]).unwrap();
        layer.ffn.b2.set_data(vec![0.0; 8]).unwrap();
        let x = Tensor::from_vec((0..24).map(|v| 0.1 * v as f64).collect(), &[1, 3, 8], DType::F64).unwrap();
        let y = layer.forward(&x, None).unwrap();
        assert_eq!(x.to_vec(), y.to_vec());
    }

    #[test]
    fn causal_mask_blocks_future_positions() {
        let mut r = rng();
        let layer = DecoderLayer::new(8, 2, 16, &mut r, DType::F64).unwrap();
        let mem = Tensor::from_vec(vec![0.3; 2 * 4 * 8], &[2, 4, 8], DType::F64).unwrap();
        let x1 = Tensor::from_vec((0..2 * 3 * 8).map(|v| 0.05 * v as f64).collect(), &[2, 3, 8], DType::F64).unwrap();
        // perturb only the last position
        let mut d2 = x1.to_vec();
        for v in d2[2 * 8..3 * 8].iter_mut() {
            *v += 1.0;
        }
        for v in d2[(2 * 3 * 8 - 8)..].iter_mut() {
            *v += 1.0;
        }
        let x2 = Tensor::from_vec(d2, &[2, 3, 8], DType::F64).unwrap();
        let cm = causal_mask(3, DType::F64).unwrap();
        let y1 = layer.forward(&x1, &mem, Some(&cm), None).unwrap();
        let y2 = layer.forward(&x2, &mem, Some(&cm), None).unwrap();
        // positions 0 and 1 must be identical; position 2 differs
        let (a, b) = (y1.to_vec(), y2.to_vec());
        for s in 0..2 {
            let base = s * 3 * 8;
            assert_eq!(&a[base..base + 16], &b[base..base + 16]);
            assert_ne!(&a[base + 16..base + 24], &b[base + 16..base + 24]);
        }
    }

    #[test]
    fn key_mask_excludes_padded_keys() {
        let mut r = rng();
        let attn = MultiHeadAttention::new(8, 2, &mut r, DType::F64).unwrap();
        let q = Tensor::from_vec(vec![0.2; 8], &[1, 1, 8], DType::F64).unwrap();
        let kv1 = Tensor::from_vec((0..3 * 8).map(|v| 0.1 * v as f64).collect(), &[1, 3, 8], DType::F64).unwrap();
        let mut kv2_data = kv1.to_vec();
        for v in kv2_data[16..].iter_mut() {
            *v = 9.9; // perturb the padded key
        }
        let kv2 = Tensor::from_vec(kv2_data, &[1, 3, 8], DType::F64).unwrap();
        let valid = Tensor::from_vec(vec![1.0, 1.0, 0.0], &[1, 3, 1], DType::F64).unwrap();
        let mask = key_mask(&valid).unwrap();
        let y1 = attn.forward(&q, &kv1, Some(&mask)).unwrap();
        let y2 = attn.forward(&q, &kv2, Some(&mask)).unwrap();
        assert_eq!(y1.to_vec(), y2.to_vec());
    }

    #[test]
    fn layer_norm_normalises_rows() {
        let ln = LayerNorm::new(4, DType::F64).unwrap();
        let x = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[1, 4], DType::F64).unwrap();
        let y = ln.forward(&x).unwrap().to_vec();
        let mean: f64 = y.iter().sum::<f64>() / 4.0;
        let var: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-3);
    }
}
