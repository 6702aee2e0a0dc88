//! Token embedding with sinusoidal positions, and the vocabulary head.

use rand_chacha::ChaCha8Rng;

use super::init::{normal, xavier, zeros_param};
use crate::error::{Error, Result};
use crate::tensor::{DType, Tensor};

/// Fixed sinusoidal position table `(max_len, d)`.
pub fn sinusoidal_positions(max_len: usize, d: usize, dtype: DType) -> Result<Tensor> {
    let mut data = vec![0.0; max_len * d];
    for pos in 0..max_len {
        for i in 0..d {
            let angle = pos as f64 / 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            data[pos * d + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Tensor::from_vec(data, &[max_len, d], dtype)
}

/// Learned token embedding plus sinusoidal positional encoding.
pub struct TextEmbedding {
    table: Tensor,
    positions: Tensor,
    vocab: usize,
    d_model: usize,
}

impl TextEmbedding {
    pub fn new(
        vocab: usize,
        d_model: usize,
        max_text: usize,
        rng: &mut ChaCha8Rng,
        dtype: DType,
    ) -> Result<Self> {
        Ok(TextEmbedding {
            table: normal(rng, &[vocab, d_model], 0.05, dtype)?,
            positions: sinusoidal_positions(max_text, d_model, dtype)?,
            vocab,
            d_model,
        })
    }

    /// Equal-length token rows → `(B, T, d)` with positions added.
    pub fn forward(&self, tokens: &[Vec<usize>]) -> Result<Tensor> {
        let b = tokens.len();
        if b == 0 {
            return Err(Error::Contract("embed of empty batch".into()));
        }
        let t = tokens[0].len();
        if tokens.iter().any(|row| row.len() != t) {
            return Err(Error::Contract("ragged token batch".into()));
        }
        if t > self.positions.shape()[0] {
            return Err(Error::Config(format!(
                "text length {t} exceeds position table ({})",
                self.positions.shape()[0]
            )));
        }
        let flat: Vec<usize> = tokens.iter().flatten().cloned().collect();
        let emb = self.table.embedding(&flat)?.reshape(&[b, t, self.d_model])?;
        emb.add(&self.positions.slice(0, 0, t)?)
    }

    pub fn table(&self) -> &Tensor {
        &self.table
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.table"), self.table.clone()));
    }
}

/// Projection from model width to vocabulary logits; optionally tied to the
/// embedding table.
pub enum LmHead {
    Untied { w: Tensor, b: Tensor },
    Tied { b: Tensor },
}

impl LmHead {
    pub fn new(
        d_model: usize,
        vocab: usize,
        tied: bool,
        rng: &mut ChaCha8Rng,
        dtype: DType,
    ) -> Result<Self> {
        Ok(if tied {
            LmHead::Tied {
                b: zeros_param(&[vocab], dtype)?,
            }
        } else {
            LmHead::Untied {
                w: xavier(rng, d_model, vocab, dtype)?,
                b: zeros_param(&[vocab], dtype)?,
            }
        })
    }

    /// `(B, T, d)` → logits `(B, T, vocab)`.
    pub fn forward(&self, h: &Tensor, embedding: &TextEmbedding) -> Result<Tensor> {
        match self {
            LmHead::Untied { w, b } => h.matmul(w)?.add(b),
            LmHead::Tied { b } => h.matmul(&embedding.table().transpose_last2()?)?.add(b),
        }
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        match self {
            LmHead::Untied { w, b } => {
                out.push((format!("{prefix}.w"), w.clone()));
                out.push((format!("{prefix}.b"), b.clone()));
            }
            LmHead::Tied { b } => {
                out.push((format!("{prefix}.b"), b.clone()));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn embedding_shape_and_oov() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let emb = TextEmbedding::new(5, 8, 4, &mut rng, DType::F64).unwrap();
        let y = emb.forward(&[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(y.shape(), &[2, 2, 8]);
        assert!(emb.forward(&[vec![0, 7]]).is_err());
    }

    #[test]
    fn tied_head_uses_embedding_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let emb = TextEmbedding::new(5, 8, 4, &mut rng, DType::F64).unwrap();
        let head = LmHead::new(8, 5, true, &mut rng, DType::F64).unwrap();
        let mut n = Vec::new();
        head.collect_params("h", &mut n);
        assert_eq!(n.len(), 1); // bias only; weights are shared
        let h = Tensor::from_vec(vec![0.1; 8], &[1, 1, 8], DType::F64).unwrap();
        let logits = head.forward(&h, &emb).unwrap();
        assert_eq!(logits.shape(), &[1, 1, 5]);
    }

    #[test]
    fn positions_differ_by_position() {
        let pe = sinusoidal_positions(4, 6, DType::F64).unwrap().to_vec();
        assert_ne!(&pe[0..6], &pe[6..12]);
    }
}
