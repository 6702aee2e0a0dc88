//! Experiment harness: run configuration, the trainable state bundle,
//! optimisation, training/evaluation loops, ablation sweeps, checkpointing
//! and embedding export.

mod ablate;
mod checkpoint;
mod eval;
mod export;
mod optim;
mod train;

pub use ablate::{ablate, loop_param_audit, write_rows_csv, AblationAxis, AblationRow};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use eval::{evaluate, greedy_decode, metrics_from_pairs, EvalReport};
pub use export::export_embeddings;
pub use optim::{AdamW, OptimConfig};
pub use train::{train, TrainOutcome};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Batch;
use crate::error::{Error, Result};
use crate::losses::{joint_loss, lm_loss, AlignmentHead, AlphaMode, AlphaParam, LossBreakdown};
use crate::manifold::{Curvature, FrechetConfig, Geometry};

use crate::model::{Decoder, ForwardOutput, LoopConfig, ModelConfig, SignModel};
use crate::tensor::{DType, Tensor};

/// Embedding geometry selection, including the flat baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldChoice {
    Euclidean,
    Poincare,
    Lorentz,
    AdaptivePoincare,
    AdaptiveLorentz,
}

impl ManifoldChoice {
    pub const ALL: [ManifoldChoice; 5] = [
        ManifoldChoice::Euclidean,
        ManifoldChoice::Poincare,
        ManifoldChoice::Lorentz,
        ManifoldChoice::AdaptivePoincare,
        ManifoldChoice::AdaptiveLorentz,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldChoice::Euclidean => "euclidean",
            ManifoldChoice::Poincare => "poincare",
            ManifoldChoice::Lorentz => "lorentz",
            ManifoldChoice::AdaptivePoincare => "adaptive-poincare",
            ManifoldChoice::AdaptiveLorentz => "adaptive-lorentz",
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(
            self,
            ManifoldChoice::AdaptivePoincare | ManifoldChoice::AdaptiveLorentz
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn dtype(&self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

/// Full experiment configuration. Serialised as a single JSON document;
/// the CLI applies dotted-path overrides on top.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(rename = "loop")]
    pub loop_cfg: LoopConfig,
    pub manifold: ManifoldChoice,
    /// Base curvature c > 0 (ignored for Euclidean).
    pub curvature_c: f64,
    /// Initial curvature scale σ₀ (learnable iff the manifold is adaptive).
    pub initial_scale: f64,
    pub d_hyp: usize,
    pub tau_init: f64,
    pub margin: f64,
    pub alpha: AlphaMode,
    pub w_aux: f64,
    pub uniform_frechet_weights: bool,
    pub bidirectional_contrastive: bool,
    pub frechet_tol: f64,
    pub frechet_max_iters: usize,
    pub optim: OptimConfig,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub eval_every: usize,
    pub precision: Precision,
    /// Frame padding target for batches.
    pub pad_to: usize,
    pub data_dir: String,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelConfig::default(),
            loop_cfg: LoopConfig::default(),
            manifold: ManifoldChoice::AdaptivePoincare,
            curvature_c: 1.0,
            initial_scale: 1.0,
            d_hyp: 16,
            tau_init: 0.07,
            margin: 0.1,
            alpha: AlphaMode::Learnable(0.5),
            w_aux: 0.1,
            uniform_frechet_weights: false,
            bidirectional_contrastive: false,
            frechet_tol: 1e-6,
            frechet_max_iters: 100,
            optim: OptimConfig::default(),
            steps: 300,
            batch_size: 32,
            seed: 7,
            eval_every: 100,
            precision: Precision::F32,
            pad_to: 16,
            data_dir: "data".into(),
            out_dir: "runs/default".into(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.loop_cfg.validate()?;
        if self.manifold != ManifoldChoice::Euclidean && !(self.curvature_c > 0.0) {
            return Err(Error::Config(format!(
                "curvature_c must be positive, got {}",
                self.curvature_c
            )));
        }
        if self.w_aux < 0.0 {
            return Err(Error::Config("w_aux must be >= 0".into()));
        }
        if self.batch_size == 0 || self.steps == 0 {
            return Err(Error::Config("steps and batch_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Build the geometry for this run. Euclidean carries no curvature
    /// state at all, so scale/curvature learning is disabled by
    /// construction.
    pub fn geometry(&self) -> Result<Geometry> {
        let curv = |learnable| Curvature::with_scale(self.curvature_c, self.initial_scale, learnable);
        Ok(match self.manifold {
            ManifoldChoice::Euclidean => Geometry::euclidean(),
            ManifoldChoice::Poincare => Geometry::poincare(curv(false)?),
            ManifoldChoice::Lorentz => Geometry::lorentz(curv(false)?),
            ManifoldChoice::AdaptivePoincare => Geometry::poincare(curv(true)?),
            ManifoldChoice::AdaptiveLorentz => Geometry::lorentz(curv(true)?),
        })
    }
}

/// Everything trainable for one run: model, alignment head, and the mixing
/// scalar.
pub struct TrainState {
    pub model: SignModel,
    pub head: AlignmentHead,
    pub alpha: AlphaParam,
    pub w_aux: f64,
    dtype: DType,
}

/// Loss evaluation by-products that feed the metrics stream.
pub struct StepStats {
    pub frechet_iterations: usize,
    pub frechet_converged: bool,
}

impl TrainState {
    /// Builds model and head from the config with a seed-derived RNG. The
    /// `vocab` argument overrides `model.vocab` (it must match the dataset).
    pub fn new(cfg: &RunConfig, vocab: usize) -> Result<TrainState> {
        cfg.validate()?;
        let dtype = cfg.precision.dtype();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut model_cfg = cfg.model.clone();
        model_cfg.vocab = vocab;
        let model = SignModel::new(model_cfg, cfg.loop_cfg.clone(), &mut rng, dtype)?;
        let head = AlignmentHead::new(
            cfg.model.d_model,
            cfg.d_hyp,
            cfg.geometry()?,
            cfg.tau_init,
            cfg.margin,
            cfg.uniform_frechet_weights,
            cfg.bidirectional_contrastive,
            FrechetConfig {
                tol: cfg.frechet_tol,
                max_iters: cfg.frechet_max_iters,
            },
            &mut rng,
            dtype,
        )?;
        let alpha = AlphaParam::new(cfg.alpha, dtype)?;
        Ok(TrainState {
            model,
            head,
            alpha,
            w_aux: cfg.w_aux,
            dtype,
        })
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    /// All trainable parameters in stable order.
    pub fn parameters(&self) -> Vec<(String, Tensor)> {
        let mut out = self.model.parameters();
        out.extend(self.head.parameters());
        out.extend(self.alpha.parameters());
        out
    }

    /// Joint loss over a batch. `frozen_aux_decoder` pins the detached
    /// decoder used for intermediate encoder-variant snapshots (the
    /// gradient checker relies on this); `rng` only feeds noise-mode extra
    /// features.
    pub fn compute_loss(
        &self,
        batch: &Batch,
        frozen_aux_decoder: Option<&Decoder>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Tensor, LossBreakdown, StepStats)> {
        let out: ForwardOutput = self.model.forward(batch, frozen_aux_decoder, rng)?;
        let pooled = self.head.pool_sign(&out.sign_features, &batch.frame_mask)?;
        let mut ga_terms = Vec::with_capacity(out.state.snapshots.len());
        for snap in &out.state.snapshots {
            let h_text = self.head.pool_text(snap, &batch.text_mask)?;
            ga_terms.push(self.head.ga_loss(&pooled.point, &h_text)?);
        }
        let ga_final = ga_terms
            .pop()
            .ok_or_else(|| Error::Contract("loop produced no alignment snapshots".into()))?;
        let lm = lm_loss(&out.logits, &batch.tokens_out, &batch.text_mask)?;
        let (joint, breakdown) = joint_loss(
            &lm,
            &ga_final,
            &ga_terms,
            &self.alpha,
            self.w_aux,
            self.model.loop_cfg.loops,
        )?;
        Ok((
            joint,
            breakdown,
            StepStats {
                frechet_iterations: pooled.frechet_iterations,
                frechet_converged: pooled.frechet_converged,
            },
        ))
    }

    /// Current σ (curvature scale), when the geometry carries curvature.
    pub fn sigma(&self) -> Option<f64> {
        self.head.geometry().curvature().map(Curvature::sigma)
    }

    pub fn effective_curvature(&self) -> Option<f64> {
        self.head
            .geometry()
            .curvature()
            .map(Curvature::effective_value)
    }

    pub fn tau(&self) -> f64 {
        self.head.tau()
    }
}
