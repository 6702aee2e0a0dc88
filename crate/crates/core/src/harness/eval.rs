//! Greedy decoding and Top-1 accuracy metrics.
//!
//! P-I (per-instance) is the fraction of samples whose decoded gloss
//! matches exactly; P-C (per-class) is the unweighted mean of per-class
//! accuracies over classes that appear in the evaluation set.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainState;
use crate::data::{Batch, Dataset, Split, BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::model::ExtraFeature;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub p_i: f64,
    pub p_c: f64,
    pub total: usize,
    pub correct: usize,
    /// Per class: (correct, total).
    pub per_class: BTreeMap<String, (usize, usize)>,
}

/// Metrics from (gold, predicted) gloss pairs.
pub fn metrics_from_pairs(pairs: &[(String, String)]) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::Data("cannot evaluate zero samples".into()));
    }
    let mut per_class: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut correct = 0;
    for (gold, pred) in pairs {
        let entry = per_class.entry(gold.clone()).or_insert((0, 0));
        entry.1 += 1;
        if gold == pred {
            entry.0 += 1;
            correct += 1;
        }
    }
    let p_i = correct as f64 / pairs.len() as f64;
    let p_c = per_class
        .values()
        .map(|(c, t)| *c as f64 / *t as f64)
        .sum::<f64>()
        / per_class.len() as f64;
    Ok(EvalReport {
        p_i,
        p_c,
        total: pairs.len(),
        correct,
        per_class,
    })
}

/// Greedy autoregressive decode of a batch: start from `<bos>` and extend
/// with the argmax of the final loop state's last position, the loop being
/// re-run on the growing prefix at every step.
pub fn greedy_decode(state: &TrainState, batch: &Batch, max_len: usize) -> Result<Vec<Vec<usize>>> {
    let b = batch.size();
    let mut prefixes: Vec<Vec<usize>> = vec![vec![BOS]; b];
    let mut done = vec![false; b];
    let s = state.model.encode_sign(&batch.parts, &batch.frame_mask)?;
    for _ in 0..max_len {
        // noise-mode extra features stay deterministic at eval time
        let mut eval_rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let rng = if state.model.loop_cfg.extra == ExtraFeature::Noise {
            Some(&mut eval_rng)
        } else {
            None
        };
        let out = state
            .model
            .run_loop(&s, &batch.frame_mask, &prefixes, None, rng)?;
        let logits = state
            .model
            .lm_head_forward(&out.h_s2t)?;
        let t = logits.shape()[1];
        let last = logits.slice(1, t - 1, 1)?;
        let picks = last.argmax_last();
        for (i, &tok) in picks.iter().enumerate() {
            if done[i] {
                prefixes[i].push(PAD);
            } else {
                prefixes[i].push(tok);
                if tok == EOS {
                    done[i] = true;
                }
            }
        }
        if done.iter().all(|&d| d) {
            break;
        }
    }
    Ok(prefixes.into_iter().map(|p| p[1..].to_vec()).collect())
}

/// Decode every record of a split and score exact gloss matches.
pub fn evaluate(
    state: &TrainState,
    dataset: &Dataset,
    split: Split,
    pad_to: usize,
    batch_size: usize,
) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::Data("empty manifest".into()));
    }
    let vocab = dataset.vocabulary();
    if vocab.len() != state.model.model_cfg.vocab {
        return Err(Error::Config(format!(
            "vocabulary mismatch: checkpoint has {}, dataset has {}",
            state.model.model_cfg.vocab,
            vocab.len()
        )));
    }
    let indices = dataset.manifest().indices_of(split);
    if indices.is_empty() {
        return Err(Error::Data(format!("no records in split {split:?}")));
    }
    let max_decode = state.model.model_cfg.max_text - 1;
    let mut pairs = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(batch_size.max(1)) {
        let batch = dataset.load_batch(chunk, pad_to, state.dtype())?;
        let decoded = greedy_decode(state, &batch, max_decode)?;
        for (tokens, gold) in decoded.iter().zip(&batch.glosses) {
            let pred = tokens
                .first()
                .and_then(|&t| vocab.token(t))
                .unwrap_or("<empty>")
                .to_string();
            pairs.push((gold.clone(), pred));
        }
    }
    metrics_from_pairs(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_one() {
        let pairs: Vec<(String, String)> = (0..5)
            .map(|i| (format!("g{}", i % 2), format!("g{}", i % 2)))
            .collect();
        let r = metrics_from_pairs(&pairs).unwrap();
        assert_eq!(r.p_i, 1.0);
        assert_eq!(r.p_c, 1.0);
    }

    #[test]
    fn worked_example_two_classes() {
        // classes with counts (3, 1); (3, 0) correct -> P-I 0.75, P-C 0.5
        let pairs = vec![
            ("a".to_string(), "a".to_string()),
            ("a".to_string(), "a".to_string()),
            ("a".to_string(), "a".to_string()),
            ("b".to_string(), "a".to_string()),
        ];
        let r = metrics_from_pairs(&pairs).unwrap();
        assert_eq!(r.p_i, 0.75);
        assert_eq!(r.p_c, 0.5);
    }

    #[test]
    fn empty_input_is_data_error() {
        assert!(matches!(metrics_from_pairs(&[]), Err(Error::Data(_))));
    }

    #[test]
    fn classes_without_instances_are_excluded() {
        // only class "a" appears; P-C averages over appearing classes
        let pairs = vec![("a".to_string(), "b".to_string())];
        let r = metrics_from_pairs(&pairs).unwrap();
        assert_eq!(r.p_c, 0.0);
        assert_eq!(r.per_class.len(), 1);
    }
}
