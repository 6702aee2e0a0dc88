//! The training loop: seeded batching, AdamW updates, an append-only
//! JSON-lines metrics stream, periodic evaluation, and a final checkpoint.
//!
//! A non-finite loss aborts the run with the offending batch id and the
//! current curvature/temperature values in the error.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{evaluate, save_checkpoint, AdamW, EvalReport, RunConfig, TrainState};
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::losses::LossBreakdown;
use crate::model::ExtraFeature;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

pub struct TrainOutcome {
    pub losses: Vec<LossBreakdown>,
    pub final_eval: Option<EvalReport>,
    pub state: TrainState,
}

struct MetricsStream {
    file: Option<std::fs::File>,
}

impl MetricsStream {
    fn create(path: Option<&Path>) -> Result<MetricsStream> {
        let file = match path {
            Some(p) => {
                if let Some(parent) = p.parent() {
                    std::fs::create_dir_all(parent)
                        .map_err(|e| Error::io(parent.display().to_string(), e))?;
                }
                Some(
                    std::fs::File::create(p)
                        .map_err(|e| Error::io(p.display().to_string(), e))?,
                )
            }
            None => None,
        };
        Ok(MetricsStream { file })
    }

    fn write(&mut self, value: &serde_json::Value) -> Result<()> {
        if let Some(f) = &mut self.file {
            writeln!(f, "{value}").map_err(|e| Error::io("metrics.jsonl", e))?;
        }
        Ok(())
    }
}

/// Train on the dataset's train split. When `out_dir` is given, writes
/// `metrics.jsonl` and `checkpoint.json` beneath it.
pub fn train(cfg: &RunConfig, dataset: &Dataset, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    cfg.validate()?;
    let vocab_len = dataset.vocabulary().len();
    let state = TrainState::new(cfg, vocab_len)?;
    let params = state.parameters();
    let mut opt = AdamW::new(cfg.optim.clone(), &params, cfg.steps);

    let train_indices = dataset.manifest().indices_of(Split::Train);
    if train_indices.is_empty() {
        return Err(Error::Data("no records in the train split".into()));
    }

    let mut metrics = MetricsStream::create(out_dir.map(|d| d.join("metrics.jsonl")).as_deref())?;
    metrics.write(&json!({
        "type": "meta",
        "schema_version": METRICS_SCHEMA_VERSION,
        "config": cfg,
        "vocab_size": vocab_len,
        "param_count": state.model.parameter_count(),
        "effective_depth": state.model.effective_depth(),
    }))?;

    // one seeded stream drives epoch shuffling and noise-mode injections
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5a17));
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0usize;

    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        if cursor + cfg.batch_size > order.len() {
            order = train_indices.clone();
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let take = cfg.batch_size.min(order.len());
        let batch_idx = &order[cursor..cursor + take];
        cursor += take;
        let batch = dataset.load_batch(batch_idx, cfg.pad_to, cfg.precision.dtype())?;

        let needs_rng = cfg.loop_cfg.extra == ExtraFeature::Noise;
        let (loss, breakdown, stats) =
            state.compute_loss(&batch, None, if needs_rng { Some(&mut rng) } else { None })?;
        if !breakdown.joint.is_finite() {
            return Err(Error::NonFiniteLoss {
                step,
                batch_id: batch.batch_id(),
                curvature: state.effective_curvature(),
                temperature: state.tau(),
            });
        }
        loss.backward()?;
        let lr = opt.step(&params)?;

        metrics.write(&json!({
            "type": "step",
            "step": step,
            "loss": breakdown,
            "lr": lr,
            "sigma": state.sigma(),
            "tau": state.tau(),
            "frechet_iterations": stats.frechet_iterations,
            "frechet_converged": stats.frechet_converged,
        }))?;
        losses.push(breakdown);

        if cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0 && step + 1 < cfg.steps {
            if let Ok(report) =
                evaluate(&state, dataset, Split::Val, cfg.pad_to, cfg.batch_size)
            {
                metrics.write(&json!({
                    "type": "eval",
                    "step": step,
                    "split": "val",
                    "p_i": report.p_i,
                    "p_c": report.p_c,
                }))?;
            }
        }
    }

    let final_eval = evaluate(&state, dataset, Split::Val, cfg.pad_to, cfg.batch_size).ok();
    if let Some(report) = &final_eval {
        metrics.write(&json!({
            "type": "eval",
            "step": cfg.steps,
            "split": "val",
            "p_i": report.p_i,
            "p_c": report.p_c,
        }))?;
    }
    if let Some(dir) = out_dir {
        save_checkpoint(
            &state,
            cfg,
            dataset.vocabulary(),
            &dir.join("checkpoint.json"),
        )?;
    }
    Ok(TrainOutcome {
        losses,
        final_eval,
        state,
    })
}
