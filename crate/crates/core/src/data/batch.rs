//! Batching: record lookup through the manifest, coordinate normalisation,
//! frame padding with masks, and teacher-forcing token streams.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{
    keypoint_count, read_jsonl, DatasetManifest, SkeletonSequence, Vocabulary, BOS, EOS, PAD,
    PART_NAMES,
};
use crate::error::{Error, Result};
use crate::tensor::{DType, Tensor};

/// An opened dataset: manifest plus parsed record storage.
pub struct Dataset {
    manifest: DatasetManifest,
    /// Parsed JSON-lines files keyed by relative path.
    files: HashMap<String, Vec<SkeletonSequence>>,
    root: PathBuf,
}

impl Dataset {
    /// Load every JSON-lines file referenced by the manifest.
    pub fn open(root: &Path, manifest: DatasetManifest) -> Result<Dataset> {
        manifest.validate()?;
        let mut files = HashMap::new();
        for rec in &manifest.records {
            if !files.contains_key(&rec.path) {
                let seqs = read_jsonl(&root.join(&rec.path))?;
                files.insert(rec.path.clone(), seqs);
            }
        }
        for rec in &manifest.records {
            let seqs = &files[&rec.path];
            if rec.line >= seqs.len() {
                return Err(Error::Data(format!(
                    "manifest points at line {} of {} but the file has {} records",
                    rec.line,
                    rec.path,
                    seqs.len()
                )));
            }
            if seqs[rec.line].id != rec.id {
                return Err(Error::Data(format!(
                    "manifest id '{}' does not match record id '{}' at {}:{}",
                    rec.id, seqs[rec.line].id, rec.path, rec.line
                )));
            }
        }
        Ok(Dataset {
            manifest,
            files,
            root: root.to_path_buf(),
        })
    }

    pub fn open_dir(root: &Path) -> Result<Dataset> {
        let manifest = DatasetManifest::load(&root.join("manifest.json"))?;
        Dataset::open(root, manifest)
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.manifest.vocabulary
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.manifest.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.records.is_empty()
    }

    pub fn record(&self, index: usize) -> Result<&SkeletonSequence> {
        let rec = self.manifest.records.get(index).ok_or_else(|| {
            Error::Contract(format!("record index {index} out of range ({})", self.len()))
        })?;
        Ok(&self.files[&rec.path][rec.line])
    }

    /// Assemble a padded batch from manifest indices. `pad_to` must cover
    /// the longest sequence in the batch.
    pub fn load_batch(&self, indices: &[usize], pad_to: usize, dtype: DType) -> Result<Batch> {
        let seqs: Vec<&SkeletonSequence> = indices
            .iter()
            .map(|&i| self.record(i))
            .collect::<Result<_>>()?;
        Batch::assemble(&seqs, pad_to, self.vocabulary(), dtype)
    }
}

/// Normalise one sample: translate so the per-frame body centroid sits at
/// the origin, then scale the whole sequence into [-1, 1]. Confidence is
/// untouched.
fn normalize(seq: &SkeletonSequence) -> Result<Vec<Vec<f64>>> {
    // per-frame body centroid
    let mut centroids = Vec::with_capacity(seq.frames);
    for frame in &seq.parts.body {
        let n = frame.len() as f64;
        let cx = frame.iter().map(|k| k[0]).sum::<f64>() / n;
        let cy = frame.iter().map(|k| k[1]).sum::<f64>() / n;
        centroids.push((cx, cy));
    }
    let mut max_abs = 0.0f64;
    for part in PART_NAMES {
        for (t, frame) in seq.parts.get(part)?.iter().enumerate() {
            for kp in frame {
                max_abs = max_abs.max((kp[0] - centroids[t].0).abs());
                max_abs = max_abs.max((kp[1] - centroids[t].1).abs());
            }
        }
    }
    let scale = max_abs.max(1e-6);

    let mut out = Vec::with_capacity(4);
    for part in PART_NAMES {
        let traj = seq.parts.get(part)?;
        let n = keypoint_count(part)?;
        let mut flat = Vec::with_capacity(seq.frames * n * 3);
        for (t, frame) in traj.iter().enumerate() {
            for kp in frame {
                flat.push((kp[0] - centroids[t].0) / scale);
                flat.push((kp[1] - centroids[t].1) / scale);
                flat.push(kp[2]);
            }
        }
        out.push(flat);
    }
    Ok(out)
}

/// A padded training batch.
pub struct Batch {
    /// Per part (canonical order): `(B, T_pad, N_p, 3)`; padded frames are
    /// all-zero.
    pub parts: Vec<Tensor>,
    /// `(B, T_pad, 1)` with 1 on real frames, 0 on padding.
    pub frame_mask: Tensor,
    pub frame_mask_bool: Vec<Vec<bool>>,
    /// Decoder input ids per sample: `[<bos>, gloss]` (padded with `<pad>`).
    pub tokens_in: Vec<Vec<usize>>,
    /// Teacher-forcing targets per sample: `[gloss, <eos>]`.
    pub tokens_out: Vec<Vec<usize>>,
    /// `(B, T_text, 1)` mask over target positions.
    pub text_mask: Tensor,
    pub ids: Vec<String>,
    pub glosses: Vec<String>,
}

impl Batch {
    pub fn assemble(
        seqs: &[&SkeletonSequence],
        pad_to: usize,
        vocab: &Vocabulary,
        dtype: DType,
    ) -> Result<Batch> {
        if seqs.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        let longest = seqs.iter().map(|s| s.frames).max().unwrap();
        if pad_to < longest {
            return Err(Error::Data(format!(
                "pad_to {pad_to} shorter than longest sequence in batch ({longest})"
            )));
        }
        let b = seqs.len();

        let mut part_bufs: Vec<Vec<f64>> = PART_NAMES
            .iter()
            .map(|p| vec![0.0; b * pad_to * keypoint_count(p).unwrap() * 3])
            .collect();
        let mut mask = vec![0.0; b * pad_to];
        let mut mask_bool = vec![vec![false; pad_to]; b];

        for (s, seq) in seqs.iter().enumerate() {
            let norm = normalize(seq)?;
            for (p, part) in PART_NAMES.iter().enumerate() {
                let n = keypoint_count(part)?;
                let stride = n * 3;
                let src = &norm[p];
                let dst = &mut part_bufs[p];
                for t in 0..seq.frames {
                    let d0 = (s * pad_to + t) * stride;
                    dst[d0..d0 + stride].copy_from_slice(&src[t * stride..(t + 1) * stride]);
                }
            }
            for t in 0..seq.frames {
                mask[s * pad_to + t] = 1.0;
                mask_bool[s][t] = true;
            }
        }

        let parts: Vec<Tensor> = part_bufs
            .into_iter()
            .zip(PART_NAMES)
            .map(|(buf, p)| {
                Tensor::from_vec(buf, &[b, pad_to, keypoint_count(p).unwrap(), 3], dtype)
            })
            .collect::<Result<_>>()?;
        let frame_mask = Tensor::from_vec(mask, &[b, pad_to, 1], dtype)?;

        let mut tokens_in = Vec::with_capacity(b);
        let mut tokens_out = Vec::with_capacity(b);
        for seq in seqs {
            let gid = vocab.id(&seq.gloss).ok_or_else(|| {
                Error::Data(format!("label '{}' missing from vocabulary", seq.gloss))
            })?;
            tokens_in.push(vec![BOS, gid]);
            tokens_out.push(vec![gid, EOS]);
        }
        let t_text = tokens_in[0].len();
        let text_mask_vals: Vec<f64> = tokens_out
            .iter()
            .flat_map(|row| row.iter().map(|&t| if t == PAD { 0.0 } else { 1.0 }))
            .collect();
        let text_mask = Tensor::from_vec(text_mask_vals, &[b, t_text, 1], dtype)?;

        Ok(Batch {
            parts,
            frame_mask,
            frame_mask_bool: mask_bool,
            tokens_in,
            tokens_out,
            text_mask,
            ids: seqs.iter().map(|s| s.id.clone()).collect(),
            glosses: seqs.iter().map(|s| s.gloss.clone()).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn pad_to(&self) -> usize {
        self.frame_mask.shape()[1]
    }

    /// A stable identifier for diagnostics: first and last record id.
    pub fn batch_id(&self) -> String {
        if self.ids.len() == 1 {
            self.ids[0].clone()
        } else {
            format!("{}..{}", self.ids[0], self.ids[self.ids.len() - 1])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticTaskSpec};

    fn tiny_dataset() -> (tempfile::TempDir, Dataset) {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticTaskSpec {
            classes: 2,
            frames: 10,
            samples_per_class: 4,
            noise: 0.1,
            seed: 3,
            train_fraction: 0.5,
        };
        generate_synthetic(&spec, dir.path()).unwrap();
        let ds = Dataset::open_dir(dir.path()).unwrap();
        (dir, ds)
    }

    #[test]
    fn single_sample_mask_is_all_true_up_to_frames() {
        let (_dir, ds) = tiny_dataset();
        let batch = ds.load_batch(&[0], 10, DType::F64).unwrap();
        assert_eq!(batch.frame_mask_bool[0], vec![true; 10]);
        assert_eq!(batch.parts[0].shape(), &[1, 10, 9, 3]);
    }

    #[test]
    fn padding_masks_cover_real_frames_only() {
        let (_dir, ds) = tiny_dataset();
        // record 0 has 10 frames; pad to 16
        let batch = ds.load_batch(&[0, 1], 16, DType::F64).unwrap();
        let m = &batch.frame_mask_bool[0];
        assert!(m[..10].iter().all(|&b| b));
        assert!(m[10..].iter().all(|&b| !b));
        // padded region is zeroed in every part tensor
        for part in &batch.parts {
            let shape = part.shape().to_vec();
            let stride = shape[2] * shape[3];
            let data = part.to_vec();
            for t in 10..16 {
                let at = (t * stride)..((t + 1) * stride);
                assert!(data[at].iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn pad_to_shorter_than_sequence_is_error() {
        let (_dir, ds) = tiny_dataset();
        assert!(matches!(
            ds.load_batch(&[0], 6, DType::F64),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn tokens_follow_teacher_forcing_layout() {
        let (_dir, ds) = tiny_dataset();
        let batch = ds.load_batch(&[0], 10, DType::F64).unwrap();
        let gid = ds.vocabulary().id(&batch.glosses[0]).unwrap();
        assert_eq!(batch.tokens_in[0], vec![BOS, gid]);
        assert_eq!(batch.tokens_out[0], vec![gid, EOS]);
    }

    #[test]
    fn normalization_centers_body_per_frame() {
        let (_dir, ds) = tiny_dataset();
        let batch = ds.load_batch(&[0], 10, DType::F64).unwrap();
        // body part: (1, 10, 9, 3); per-frame mean of x and y should be ~0
        let data = batch.parts[0].to_vec();
        for t in 0..10 {
            let mut mx = 0.0;
            let mut my = 0.0;
            for k in 0..9 {
                let base = (t * 9 + k) * 3;
                mx += data[base];
                my += data[base + 1];
            }
            assert!((mx / 9.0).abs() < 1e-9);
            assert!((my / 9.0).abs() < 1e-9);
        }
        // everything within [-1, 1]
        for part in &batch.parts {
            for chunk in part.to_vec().chunks(3) {
                assert!(chunk[0].abs() <= 1.0 + 1e-12 && chunk[1].abs() <= 1.0 + 1e-12);
            }
        }
    }
}
