//! Embedding export: per-sample pooled sign points, log-mapped to the
//! tangent space at the origin, as CSV for external projection tools.
//! The Euclidean setting skips the log map (it is the identity there).

use std::path::Path;

use super::TrainState;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Writes `id,gloss,e0..e{d-1}` rows, one per manifest record. Returns the
/// row count.
pub fn export_embeddings(
    state: &TrainState,
    dataset: &Dataset,
    pad_to: usize,
    batch_size: usize,
    path: &Path,
) -> Result<usize> {
    if dataset.is_empty() {
        return Err(Error::Data("empty manifest".into()));
    }
    let indices: Vec<usize> = (0..dataset.len()).collect();
    let mut rows: Vec<String> = Vec::with_capacity(dataset.len() + 1);
    let mut dim_header: Option<usize> = None;
    for chunk in indices.chunks(batch_size.max(1)) {
        let batch = dataset.load_batch(chunk, pad_to, state.dtype())?;
        let s = state.model.encode_sign(&batch.parts, &batch.frame_mask)?;
        let pooled = state.head.pool_sign(&s, &batch.frame_mask)?;
        let tangent = state.head.geometry().log0(&pooled.point)?;
        let d = tangent.shape()[1];
        if dim_header.is_none() {
            let cols: Vec<String> = (0..d).map(|i| format!("e{i}")).collect();
            rows.push(format!("id,gloss,{}", cols.join(",")));
            dim_header = Some(d);
        }
        let data = tangent.to_vec();
        for (i, id) in batch.ids.iter().enumerate() {
            let coords: Vec<String> = data[i * d..(i + 1) * d]
                .iter()
                .map(|v| format!("{v:.8}"))
                .collect();
            rows.push(format!("{},{},{}", id, batch.glosses[i], coords.join(",")));
        }
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path, rows.join("\n") + "\n")
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(rows.len() - 1)
}
