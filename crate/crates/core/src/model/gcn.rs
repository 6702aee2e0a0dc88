//! Part-wise skeleton encoding: one spatial graph convolution over a fixed
//! per-part adjacency (symmetric-normalised, with self-loops), one temporal
//! convolution over frames, then spatial mean-pooling — giving a
//! `(B, T, d_gcn)` trajectory per part. A linear fusion concatenates the
//! four parts and projects into the shared model width.

use rand_chacha::ChaCha8Rng;

use super::init::{xavier, zeros_param};
use crate::data::keypoint_count;
use crate::error::{Error, Result};
use crate::tensor::{DType, Tensor};

/// Skeleton edges per part. Hands follow the standard 21-keypoint kinematic
/// tree (wrist plus four joints per finger); body and face are chains.
pub fn part_edges(part: &str) -> Result<Vec<(usize, usize)>> {
    match part {
        "body" => Ok((0..8).map(|i| (i, i + 1)).collect()),
        "face" => Ok((0..17).map(|i| (i, i + 1)).collect()),
        "left" | "right" => {
            let mut e = Vec::with_capacity(20);
            for finger in 0..5 {
                let root = 1 + finger * 4;
                e.push((0, root));
                for j in 0..3 {
                    e.push((root + j, root + j + 1));
                }
            }
            Ok(e)
        }
        other => Err(Error::Config(format!("unknown skeleton part '{other}'"))),
    }
}

/// Symmetric-normalised adjacency with self-loops:
/// `Â = D^{-1/2} (A + I) D^{-1/2}`.
pub fn normalized_adjacency(part: &str, dtype: DType) -> Result<Tensor> {
    let n = keypoint_count(part)?;
    let mut a = vec![0.0f64; n * n];
    for i in 0..n {
        a[i * n + i] = 1.0;
    }
    for (i, j) in part_edges(part)? {
        a[i * n + j] = 1.0;
        a[j * n + i] = 1.0;
    }
    let deg: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j]).sum::<f64>())
        .collect();
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] /= (deg[i] * deg[j]).sqrt();
        }
    }
    Tensor::from_vec(a, &[n, n], dtype)
}

/// Spatial graph conv + temporal conv (kernel 3, zero-padded) + mean pool.
pub struct PartEncoder {
    adj: Tensor,
    w_spatial: Tensor,
    b_spatial: Tensor,
    w_temporal: [Tensor; 3],
    b_temporal: Tensor,
    n_keypoints: usize,
}

impl PartEncoder {
    pub fn new(part: &str, d_gcn: usize, rng: &mut ChaCha8Rng, dtype: DType) -> Result<Self> {
        Ok(PartEncoder {
            adj: normalized_adjacency(part, dtype)?,
            w_spatial: xavier(rng, 3, d_gcn, dtype)?,
            b_spatial: zeros_param(&[d_gcn], dtype)?,
            w_temporal: [
                xavier(rng, d_gcn, d_gcn, dtype)?,
                xavier(rng, d_gcn, d_gcn, dtype)?,
                xavier(rng, d_gcn, d_gcn, dtype)?,
            ],
            b_temporal: zeros_param(&[d_gcn], dtype)?,
            n_keypoints: keypoint_count(part)?,
        })
    }

    /// `x (B, T, N, 3)`, `frame_mask (B, T, 1)` → `(B, T, d_gcn)`.
    ///
    /// Padded frames are zeroed before the temporal convolution so frames
    /// near the padding boundary read exactly the zeros that an unpadded
    /// sequence would, and zeroed again afterwards.
    pub fn forward(&self, x: &Tensor, frame_mask: &Tensor) -> Result<Tensor> {
        let (b, t, n) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if n != self.n_keypoints {
            return Err(Error::Shape {
                op: "part_encoder",
                left: vec![self.n_keypoints],
                right: x.shape().to_vec(),
            });
        }
        let mask4 = frame_mask.reshape(&[b, t, 1, 1])?;
        // spatial: per frame, Â X W + b
        let h = self.adj.matmul(x)?;
        let h = h.matmul(&self.w_spatial)?.add(&self.b_spatial)?.tanh()?;
        let h = h.mul(&mask4)?;

        // temporal: kernel-3 conv over frames, zero padding
        let d = h.shape()[3];
        let zeros = Tensor::zeros(&[b, 1, n, d], h.dtype());
        let padded = Tensor::concat(&[&zeros, &h, &zeros], 1)?;
        let prev = padded.slice(1, 0, t)?;
        let cur = padded.slice(1, 1, t)?;
        let next = padded.slice(1, 2, t)?;
        let y = prev
            .matmul(&self.w_temporal[0])?
            .add(&cur.matmul(&self.w_temporal[1])?)?
            .add(&next.matmul(&self.w_temporal[2])?)?
            .add(&self.b_temporal)?
            .tanh()?
            .mul(&mask4)?;

        // spatial mean pool per frame
        y.mean_axis(2, false)
    }

    /// The frame-local spatial stage only (before the temporal conv);
    /// exposed for tests of frame-locality.
    pub fn spatial_features(&self, x: &Tensor) -> Result<Tensor> {
        let h = self.adj.matmul(x)?;
        h.matmul(&self.w_spatial)?.add(&self.b_spatial)?.tanh()
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.w_spatial"), self.w_spatial.clone()));
        out.push((format!("{prefix}.b_spatial"), self.b_spatial.clone()));
        for (i, w) in self.w_temporal.iter().enumerate() {
            out.push((format!("{prefix}.w_temporal{i}"), w.clone()));
        }
        out.push((format!("{prefix}.b_temporal"), self.b_temporal.clone()));
    }
}

/// Concatenate the four part trajectories on the feature axis and project
/// linearly into the shared width.
pub struct Fusion {
    w: Tensor,
    b: Tensor,
}

impl Fusion {
    pub fn new(d_gcn: usize, d_model: usize, rng: &mut ChaCha8Rng, dtype: DType) -> Result<Self> {
        Ok(Fusion {
            w: xavier(rng, 4 * d_gcn, d_model, dtype)?,
            b: zeros_param(&[d_model], dtype)?,
        })
    }

    pub fn forward(&self, parts: &[Tensor]) -> Result<Tensor> {
        let refs: Vec<&Tensor> = parts.iter().collect();
        let cat = Tensor::concat(&refs, 2)?;
        cat.matmul(&self.w)?.add(&self.b)
    }

    pub fn collect_params(&self, prefix: &str, out: &mut Vec<(String, Tensor)>) {
        out.push((format!("{prefix}.w"), self.w.clone()));
        out.push((format!("{prefix}.b"), self.b.clone()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn adjacency_is_symmetric_and_normalised() {
        for part in ["body", "face", "left", "right"] {
            let a = normalized_adjacency(part, DType::F64).unwrap();
            let n = a.shape()[0];
            let d = a.to_vec();
            for i in 0..n {
                for j in 0..n {
                    assert!((d[i * n + j] - d[j * n + i]).abs() < 1e-12);
                }
                assert!(d[i * n + i] > 0.0); // self loop
            }
        }
        assert!(normalized_adjacency("tail", DType::F64).is_err());
    }

    #[test]
    fn output_shape_contract() {
        let mut r = rng();
        let enc = PartEncoder::new("body", 32, &mut r, DType::F64).unwrap();
        let x = Tensor::zeros(&[1, 16, 9, 3], DType::F64);
        let mask = Tensor::full(&[1, 16, 1], 1.0, DType::F64);
        let y = enc.forward(&x, &mask).unwrap();
        assert_eq!(y.shape(), &[1, 16, 32]);
    }

    #[test]
    fn zero_input_yields_deterministic_bias_pattern() {
        let mut r = rng();
        let enc = PartEncoder::new("left", 8, &mut r, DType::F64).unwrap();
        // non-zero biases so the pattern is visible
        enc.b_spatial.set_data(vec![0.3; 8]).unwrap();
        enc.b_temporal.set_data(vec![-0.2; 8]).unwrap();
        let x = Tensor::zeros(&[1, 4, 21, 3], DType::F64);
        let mask = Tensor::full(&[1, 4, 1], 1.0, DType::F64);
        let y1 = enc.forward(&x, &mask).unwrap();
        let y2 = enc.forward(&x, &mask).unwrap();
        assert_eq!(y1.to_vec(), y2.to_vec());
        // interior frames all see the same (bias-driven) inputs
        let d = y1.to_vec();
        assert_eq!(&d[8..16], &d[16..24]);
    }

    #[test]
    fn spatial_stage_is_frame_local() {
        let mut r = rng();
        let enc = PartEncoder::new("body", 8, &mut r, DType::F64).unwrap();
        let x1 = Tensor::from_vec(
            (0..2 * 3 * 9 * 3).map(|v| (v as f64) * 0.01).collect(),
            &[2, 3, 9, 3],
            DType::F64,
        )
        .unwrap();
        // swap frames 0 and 2
        let mut data = x1.to_vec();
        let stride = 9 * 3;
        for s in 0..2 {
            let base = s * 3 * stride;
            for k in 0..stride {
                data.swap(base + k, base + 2 * stride + k);
            }
        }
        let x2 = Tensor::from_vec(data, &[2, 3, 9, 3], DType::F64).unwrap();
        let f1 = enc.spatial_features(&x1).unwrap().to_vec();
        let f2 = enc.spatial_features(&x2).unwrap().to_vec();
        let fs = 9 * 8;
        for s in 0..2 {
            let base = s * 3 * fs;
            assert_eq!(&f1[base..base + fs], &f2[base + 2 * fs..base + 3 * fs]);
            assert_eq!(&f1[base + 2 * fs..base + 3 * fs], &f2[base..base + fs]);
            assert_eq!(&f1[base + fs..base + 2 * fs], &f2[base + fs..base + 2 * fs]);
        }
    }

    #[test]
    fn fusion_shape_and_identity_init() {
        let mut r = rng();
        let fusion = Fusion::new(4, 16, &mut r, DType::F64).unwrap();
        let parts: Vec<Tensor> = (0..4)
            .map(|p| {
                Tensor::from_vec(
                    (0..2 * 3 * 4).map(|v| (v + p * 100) as f64 * 0.01).collect(),
                    &[2, 3, 4],
                    DType::F64,
                )
                .unwrap()
            })
            .collect();
        let y = fusion.forward(&parts).unwrap();
        assert_eq!(y.shape(), &[2, 3, 16]);

        // identity-initialised square projection reproduces concatenation
        let mut eye = vec![0.0; 16 * 16];
        for i in 0..16 {
            eye[i * 16 + i] = 1.0;
        }
        fusion.w.set_data(eye).unwrap();
        let y = fusion.forward(&parts).unwrap();
        let refs: Vec<&Tensor> = parts.iter().collect();
        let cat = Tensor::concat(&refs, 2).unwrap();
        assert_eq!(y.to_vec(), cat.to_vec());
    }

    #[test]
    fn fusion_rejects_frame_mismatch() {
        let mut r = rng();
        let fusion = Fusion::new(4, 16, &mut r, DType::F64).unwrap();
        let a = Tensor::zeros(&[1, 3, 4], DType::F64);
        let b = Tensor::zeros(&[1, 2, 4], DType::F64);
        let parts = vec![a.clone(), b, a.clone(), a];
        assert!(matches!(fusion.forward(&parts), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_fusion_input_repeats_bias_row() {
        let mut r = rng();
        let fusion = Fusion::new(2, 4, &mut r, DType::F64).unwrap();
        fusion.b.set_data(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let parts: Vec<Tensor> = (0..4).map(|_| Tensor::zeros(&[1, 3, 2], DType::F64)).collect();
        let y = fusion.forward(&parts).unwrap().to_vec();
        for t in 0..3 {
            assert_eq!(&y[t * 4..(t + 1) * 4], &[0.1, 0.2, 0.3, 0.4]);
        }
    }
}
