//! Training objectives: the geometry-aware contrastive alignment loss, the
//! language-modelling loss, and their joint combination with auxiliary
//! per-iteration terms.
//!
//! Alignment compares two pooled points per sample:
//!
//! - the **sign side** `μ`: per-frame features are projected by a shared
//!   linear map `W`, mapped onto the manifold with `exp₀`, and aggregated
//!   with a weighted Fréchet mean whose weights are a softmax over frames of
//!   a learned score on the pre-projection features;
//! - the **text side** `𝓗ᵗ`: token-aligned features are masked-mean-pooled
//!   in flat space, projected by the same `W`, and mapped with `exp₀`.
//!
//! The contrastive term anchors each sample's sign point against every text
//! point in the batch:
//!
//! ```text
//! L = −log exp(−d(μᵢ, 𝓗ᵢ)/τ) / Σ_k exp(−(d(μᵢ, 𝓗ₖ) + m·1[k≠i])/τ)
//! ```
//!
//! with learnable temperature `τ = exp(log τ)` and fixed margin `m ≥ 0`.
//! Note the margin inflates *negative* distances inside the denominator, so
//! the loss is non-increasing in `m`. A symmetric (bidirectional) variant is
//! available behind a flag and is off by default.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{frechet_mean, FrechetConfig, Geometry};
use crate::model::init::{xavier, zeros_param};
use crate::tensor::{DType, Tensor};

/// Projection + pooling + contrastive head for geometry-aware alignment.
pub struct AlignmentHead {
    /// Shared modality projection `(d_model, d_hyp)`.
    w: Tensor,
    geometry: Geometry,
    /// Temperature `τ = exp(log_tau)`, positive by construction.
    log_tau: Tensor,
    margin: f64,
    scorer_w: Tensor,
    scorer_b: Tensor,
    uniform_weights: bool,
    bidirectional: bool,
    frechet: FrechetConfig,
    dtype: DType,
}

/// Sign-side pooling result; the Fréchet convergence flag is surfaced so
/// training logs can record it.
pub struct PooledSign {
    pub point: Tensor,
    pub frechet_iterations: usize,
    pub frechet_converged: bool,
}

impl AlignmentHead {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d_model: usize,
        d_hyp: usize,
        geometry: Geometry,
        tau_init: f64,
        margin: f64,
        uniform_weights: bool,
        bidirectional: bool,
        frechet: FrechetConfig,
        rng: &mut ChaCha8Rng,
        dtype: DType,
    ) -> Result<Self> {
        if !(tau_init > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {tau_init}")));
        }
        if margin < 0.0 {
            return Err(Error::Config(format!("margin must be >= 0, got {margin}")));
        }
        Ok(AlignmentHead {
            w: xavier(rng, d_model, d_hyp, dtype)?,
            geometry,
            log_tau: Tensor::param(vec![tau_init.ln()], &[1], dtype)?,
            margin,
            scorer_w: zeros_param(&[d_model, 1], dtype)?,
            scorer_b: zeros_param(&[1], dtype)?,
            uniform_weights,
            bidirectional,
            frechet,
            dtype,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn tau(&self) -> f64 {
        self.log_tau.item().exp()
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn frechet_config(&self) -> &FrechetConfig {
        &self.frechet
    }

    pub fn set_frechet_config(&mut self, cfg: FrechetConfig) {
        self.frechet = cfg;
    }

    pub fn parameters(&self) -> Vec<(String, Tensor)> {
        let mut out = vec![
            ("align.w".to_string(), self.w.clone()),
            ("align.log_tau".to_string(), self.log_tau.clone()),
        ];
        if !self.uniform_weights {
            out.push(("align.scorer_w".into(), self.scorer_w.clone()));
            out.push(("align.scorer_b".into(), self.scorer_b.clone()));
        }
        if let Some(c) = self.geometry.curvature() {
            if c.is_adaptive() {
                out.push(("align.log_sigma".into(), c.log_scale().clone()));
            }
        }
        out
    }

    /// Frame weights: softmax over valid frames of the learned linear score
    /// on pre-projection features. A zero-initialised scorer yields uniform
    /// weights over valid frames.
    fn frame_weights(&self, sign_feats: &Tensor, frame_mask: &Tensor) -> Result<Tensor> {
        let (b, t) = (sign_feats.shape()[0], sign_feats.shape()[1]);
        let scores = if self.uniform_weights {
            Tensor::zeros(&[b, t], self.dtype)
        } else {
            sign_feats
                .matmul(&self.scorer_w)?
                .add(&self.scorer_b)?
                .reshape(&[b, t])?
        };
        let off: Vec<f64> = frame_mask
            .data()
            .iter()
            .map(|&v| if v > 0.5 { 0.0 } else { -1e9 })
            .collect();
        let mask = Tensor::from_vec(off, &[b, t], self.dtype)?;
        scores.add(&mask)?.softmax_last()
    }

    /// Sign side: per-frame projection onto the manifold, then the weighted
    /// Fréchet mean.
    pub fn pool_sign(&self, sign_feats: &Tensor, frame_mask: &Tensor) -> Result<PooledSign> {
        let projected = sign_feats.matmul(&self.w)?;
        let points = self.geometry.exp0(&projected)?;
        let weights = self.frame_weights(sign_feats, frame_mask)?;
        let res = frechet_mean(&points, &weights, &self.geometry, &self.frechet)?;
        Ok(PooledSign {
            point: res.mean,
            frechet_iterations: res.iterations,
            frechet_converged: res.converged,
        })
    }

    /// Text side: masked Euclidean mean pooling over tokens, then the same
    /// projection and `exp₀`.
    pub fn pool_text(&self, text_feats: &Tensor, text_mask: &Tensor) -> Result<Tensor> {
        let masked = text_feats.mul(text_mask)?;
        let sums = masked.sum_axis(1, false)?; // (B, d)
        let counts = text_mask.sum_axis(1, false)?; // (B, 1)
        let mean = sums.div(&counts.clamp_min(1.0)?)?;
        let projected = mean.matmul(&self.w)?;
        self.geometry.exp0(&projected)
    }

    /// Both pooling routes in one call.
    pub fn project_and_pool(
        &self,
        sign_feats: &Tensor,
        frame_mask: &Tensor,
        text_feats: &Tensor,
        text_mask: &Tensor,
    ) -> Result<(PooledSign, Tensor)> {
        Ok((
            self.pool_sign(sign_feats, frame_mask)?,
            self.pool_text(text_feats, text_mask)?,
        ))
    }

    /// Pairwise geodesic distances `(B, B)`: rows are sign anchors, columns
    /// text candidates.
    fn distance_matrix(&self, mu: &Tensor, h_text: &Tensor) -> Result<Tensor> {
        let (b, da) = (mu.shape()[0], mu.shape()[1]);
        let anchors = mu.reshape(&[b, 1, da])?;
        let cands = h_text.reshape(&[1, b, da])?;
        self.geometry.dist(&anchors, &cands)?.reshape(&[b, b])
    }

    /// Batch-mean contrastive loss between pooled sign and text points.
    pub fn ga_loss(&self, mu: &Tensor, h_text: &Tensor) -> Result<Tensor> {
        if mu.shape() != h_text.shape() {
            return Err(Error::Shape {
                op: "ga_loss",
                left: mu.shape().to_vec(),
                right: h_text.shape().to_vec(),
            });
        }
        let d = self.distance_matrix(mu, h_text)?;
        let tau = self.log_tau.exp()?;
        let per_anchor = contrastive_from_distances(&d, &tau, self.margin)?;
        let loss = per_anchor.mean_all()?;
        if self.bidirectional {
            let d_t = d.transpose_last2()?;
            let rev = contrastive_from_distances(&d_t, &tau, self.margin)?.mean_all()?;
            loss.add(&rev)?.mul_scalar(0.5)
        } else {
            Ok(loss)
        }
    }
}

/// Per-anchor contrastive losses from a distance matrix: anchor `i` against
/// candidates `k`, margin added to off-diagonal (negative) distances inside
/// the denominator.
pub fn contrastive_from_distances(d: &Tensor, tau: &Tensor, margin: f64) -> Result<Tensor> {
    let b = d.shape()[0];
    if d.shape() != [b, b] {
        return Err(Error::Contract(format!(
            "contrastive distances must be square, got {:?}",
            d.shape()
        )));
    }
    let mut off_diag = vec![margin; b * b];
    for i in 0..b {
        off_diag[i * b + i] = 0.0;
    }
    let margins = Tensor::from_vec(off_diag, &[b, b], d.dtype())?;
    let logits = d.add(&margins)?.neg()?.div(tau)?;
    let log_probs = logits.log_softmax_last()?;
    let diag: Vec<usize> = (0..b).collect();
    log_probs.gather_last(&diag)?.neg()?.reshape(&[b])
}

/// Mean negative log-likelihood over non-padded target tokens.
///
/// `logits (B, T, V)`, `targets` row-major token ids, `text_mask (B, T, 1)`
/// with zeros on padding.
pub fn lm_loss(logits: &Tensor, targets: &[Vec<usize>], text_mask: &Tensor) -> Result<Tensor> {
    let (b, t, _v) = (logits.shape()[0], logits.shape()[1], logits.shape()[2]);
    if targets.len() != b || targets.iter().any(|row| row.len() != t) {
        return Err(Error::Contract(format!(
            "targets {}x{} do not match logits {:?}",
            targets.len(),
            targets.first().map(|r| r.len()).unwrap_or(0),
            logits.shape()
        )));
    }
    let count: f64 = text_mask.data().iter().sum();
    if count == 0.0 {
        return Err(Error::Data("lm_loss: all target positions are padding".into()));
    }
    let flat: Vec<usize> = targets.iter().flatten().cloned().collect();
    let picked = logits.log_softmax_last()?.gather_last(&flat)?; // (B,T,1)
    picked
        .mul(text_mask)?
        .sum_all()?
        .mul_scalar(-1.0 / count)
}

/// How the mixing scalar α is realised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum AlphaMode {
    /// σ(raw) with `raw` trained in flat space; the value is the init.
    Learnable(f64),
    Fixed(f64),
}

/// Mixing scalar α ∈ (0, 1) between the LM and alignment objectives.
pub struct AlphaParam {
    raw: Option<Tensor>,
    fixed: f64,
}

impl AlphaParam {
    pub fn new(mode: AlphaMode, dtype: DType) -> Result<Self> {
        match mode {
            AlphaMode::Learnable(init) => {
                if !(0.0 < init && init < 1.0) {
                    return Err(Error::Config(format!("alpha init must be in (0,1), got {init}")));
                }
                let raw = (init / (1.0 - init)).ln();
                Ok(AlphaParam {
                    raw: Some(Tensor::param(vec![raw], &[1], dtype)?),
                    fixed: init,
                })
            }
            AlphaMode::Fixed(v) => {
                if !(0.0 < v && v < 1.0) {
                    return Err(Error::Config(format!("alpha must be in (0,1), got {v}")));
                }
                Ok(AlphaParam { raw: None, fixed: v })
            }
        }
    }

    pub fn value_tensor(&self, dtype: DType) -> Result<Tensor> {
        match &self.raw {
            // clamped away from the fp-saturated endpoints so alpha stays in
            // the open interval even for extreme raw values
            Some(raw) => raw.sigmoid()?.clamp(1e-7, 1.0 - 1e-7),
            None => Ok(Tensor::scalar(self.fixed, dtype)),
        }
    }

    pub fn value(&self) -> f64 {
        match &self.raw {
            Some(raw) => (1.0 / (1.0 + (-raw.item()).exp())).clamp(1e-7, 1.0 - 1e-7),
            None => self.fixed,
        }
    }

    pub fn parameters(&self) -> Vec<(String, Tensor)> {
        self.raw
            .as_ref()
            .map(|r| vec![("alpha.raw".to_string(), r.clone())])
            .unwrap_or_default()
    }
}

/// Per-step loss decomposition, serialised into the metrics stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub lm: f64,
    pub ga_final: f64,
    pub ga_aux: Vec<f64>,
    pub joint: f64,
    pub alpha: f64,
    pub w_aux: f64,
}

/// `α·lm + (1−α)·(ga_final + w_aux·Σ ga_aux)`, with `ga_aux` holding the
/// auxiliary alignment terms of iterations `1..L-1` (`loops − 1` entries).
pub fn joint_loss(
    lm: &Tensor,
    ga_final: &Tensor,
    ga_aux: &[Tensor],
    alpha: &AlphaParam,
    w_aux: f64,
    loops: usize,
) -> Result<(Tensor, LossBreakdown)> {
    if ga_aux.len() + 1 != loops {
        return Err(Error::Contract(format!(
            "joint_loss expects {} auxiliary terms for {loops} loops, got {}",
            loops - 1,
            ga_aux.len()
        )));
    }
    let dtype = lm.dtype();
    let alpha_t = alpha.value_tensor(dtype)?;
    let mut ga_total = ga_final.clone();
    if !ga_aux.is_empty() {
        let mut aux_sum = ga_aux[0].clone();
        for a in &ga_aux[1..] {
            aux_sum = aux_sum.add(a)?;
        }
        ga_total = ga_total.add(&aux_sum.mul_scalar(w_aux)?)?;
    }
    let one_minus = alpha_t.neg()?.add_scalar(1.0)?;
    let joint = alpha_t.mul(lm)?.add(&one_minus.mul(&ga_total)?)?;
    let breakdown = LossBreakdown {
        lm: lm.item(),
        ga_final: ga_final.item(),
        ga_aux: ga_aux.iter().map(Tensor::item).collect(),
        joint: joint.item(),
        alpha: alpha.value(),
        w_aux,
    };
    Ok((joint, breakdown))
}
