//! Ablation sweeps: each axis trains a family of configs from a shared base
//! (same seed, same budget) and emits one CSV row per configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{evaluate, train, ManifoldChoice, RunConfig, TrainState};
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::losses::AlphaMode;
use crate::model::{ExtraFeature, Injection, LoopVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationAxis {
    /// Base(U×1) vs Loop(U×L) pairs at matched parameter count.
    Loop,
    /// Loop placement: encoder-decoder / decoder / encoder.
    Design,
    /// Euclidean / Poincaré / Lorentz / adaptive variants.
    Manifold,
    /// Initial base curvature sweep plus the learnable setting.
    Curvature,
    /// Initial projection scale sweep plus the learnable setting.
    Scale,
    /// Injection strategy: concat / add / attention.
    Injection,
    /// Extra feature injection: none / noise / temporal.
    ExtraFeature,
}

impl AblationAxis {
    pub fn parse(s: &str) -> Result<AblationAxis> {
        match s {
            "loop" => Ok(AblationAxis::Loop),
            "design" => Ok(AblationAxis::Design),
            "manifold" => Ok(AblationAxis::Manifold),
            "curvature" => Ok(AblationAxis::Curvature),
            "scale" => Ok(AblationAxis::Scale),
            "injection" => Ok(AblationAxis::Injection),
            "extra-feature" => Ok(AblationAxis::ExtraFeature),
            other => Err(Error::Config(format!("unknown ablation axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub method: String,
    pub unique_layers: usize,
    pub loops: usize,
    pub effective_depth: usize,
    pub param_count: usize,
    pub p_i: f64,
    pub p_c: f64,
}

fn named_configs(axis: AblationAxis, base: &RunConfig) -> Vec<(String, RunConfig)> {
    let mut out = Vec::new();
    match axis {
        AblationAxis::Loop => {
            // deep non-looped reference, then matched-parameter pairs
            for (u, l) in [(4, 1), (1, 1), (1, 4), (2, 1), (2, 2)] {
                let mut cfg = base.clone();
                cfg.model.enc_layers = u;
                cfg.model.dec_layers = u;
                cfg.loop_cfg.loops = l;
                let kind = if l == 1 { "base" } else { "loop" };
                out.push((format!("{kind}({u}x{l})"), cfg));
            }
        }
        AblationAxis::Design => {
            for (name, v) in [
                ("encoder-decoder", LoopVariant::EncoderDecoder),
                ("decoder", LoopVariant::Decoder),
                ("encoder", LoopVariant::Encoder),
            ] {
                let mut cfg = base.clone();
                cfg.loop_cfg.variant = v;
                out.push((name.to_string(), cfg));
            }
        }
        AblationAxis::Manifold => {
            for m in ManifoldChoice::ALL {
                let mut cfg = base.clone();
                cfg.manifold = m;
                out.push((m.name().to_string(), cfg));
            }
        }
        AblationAxis::Curvature => {
            for c in [0.5, 1.0, 1.5, 2.0] {
                let mut cfg = base.clone();
                cfg.manifold = ManifoldChoice::Poincare;
                cfg.curvature_c = c;
                out.push((format!("fixed-c={c}"), cfg));
            }
            let mut cfg = base.clone();
            cfg.manifold = ManifoldChoice::AdaptivePoincare;
            out.push(("learnable".to_string(), cfg));
        }
        AblationAxis::Scale => {
            for s in [0.5, 1.0, 2.0] {
                let mut cfg = base.clone();
                cfg.manifold = ManifoldChoice::Poincare;
                cfg.initial_scale = s;
                out.push((format!("fixed-scale={s}"), cfg));
            }
            let mut cfg = base.clone();
            cfg.manifold = ManifoldChoice::AdaptivePoincare;
            cfg.initial_scale = 1.0;
            out.push(("learnable".to_string(), cfg));
        }
        AblationAxis::Injection => {
            for (name, inj) in [
                ("concat", Injection::Concat),
                ("add", Injection::Add),
                ("attention", Injection::Attention),
            ] {
                let mut cfg = base.clone();
                cfg.loop_cfg.variant = LoopVariant::EncoderDecoder;
                cfg.loop_cfg.injection = inj;
                out.push((name.to_string(), cfg));
            }
        }
        AblationAxis::ExtraFeature => {
            for (name, e) in [
                ("none", ExtraFeature::None),
                ("noise", ExtraFeature::Noise),
                ("temporal", ExtraFeature::Temporal),
            ] {
                let mut cfg = base.clone();
                cfg.loop_cfg.extra = e;
                out.push((name.to_string(), cfg));
            }
        }
    }
    out
}

/// Run the sweep with a shared seed. Each row trains from scratch with the
/// axis-modified config and reports val-split accuracy.
pub fn ablate(axis: AblationAxis, base: &RunConfig, dataset: &Dataset) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for (name, mut cfg) in named_configs(axis, base) {
        cfg.seed = base.seed;
        // alpha scheduling interacts with every axis; keep it frozen unless
        // the base asked otherwise
        if matches!(axis, AblationAxis::Curvature | AblationAxis::Scale)
            && matches!(cfg.alpha, AlphaMode::Learnable(_))
        {
            cfg.alpha = base.alpha;
        }
        let outcome = train(&cfg, dataset, None)?;
        let report = evaluate(
            &outcome.state,
            dataset,
            Split::Val,
            cfg.pad_to,
            cfg.batch_size,
        )?;
        rows.push(AblationRow {
            method: name,
            unique_layers: cfg.model.enc_layers + cfg.model.dec_layers,
            loops: cfg.loop_cfg.loops,
            effective_depth: outcome.state.model.effective_depth(),
            param_count: outcome.state.model.parameter_count(),
            p_i: report.p_i,
            p_c: report.p_c,
        });
    }
    Ok(rows)
}

/// Plain CSV with a header row.
pub fn write_rows_csv(rows: &[AblationRow], path: &Path) -> Result<()> {
    let mut text = String::from("method,unique_layers,loops,effective_depth,param_count,p_i,p_c\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6}\n",
            r.method, r.unique_layers, r.loops, r.effective_depth, r.param_count, r.p_i, r.p_c
        ));
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parameter-count audit without training: builds the states and compares.
pub fn loop_param_audit(base: &RunConfig, vocab: usize) -> Result<Vec<(usize, usize, usize)>> {
    let mut out = Vec::new();
    for u in [1usize, 2, 3] {
        for l in [1usize, 2, 3] {
            let mut cfg = base.clone();
            cfg.model.enc_layers = u;
            cfg.model.dec_layers = u;
            cfg.loop_cfg.loops = l;
            let state = TrainState::new(&cfg, vocab)?;
            out.push((u, l, state.model.parameter_count()));
        }
    }
    Ok(out)
}
