//! Dataset format, vocabulary, and on-disk layout.
//!
//! Skeleton sequences are stored as JSON lines, one sample per line:
//!
//! ```json
//! {"id": "...", "gloss": "...", "frames": T,
//!  "parts": {"body": [[[x,y,c] × 9] × T], "face": [... × 18],
//!            "left": [... × 21], "right": [... × 21]}}
//! ```
//!
//! A `manifest.json` lists every record (relative path + line + label +
//! split) and the ordered vocabulary. Coordinates are normalised at load
//! time ([`batch`]), not on disk.

pub mod batch;
pub mod synthetic;

pub use batch::{Batch, Dataset};
pub use synthetic::{generate_synthetic, SyntheticTaskSpec};

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anatomical parts in canonical order.
pub const PART_NAMES: [&str; 4] = ["body", "face", "left", "right"];

/// Keypoints per part: body 9, face 18, each hand 21 (69 total).
pub fn keypoint_count(part: &str) -> Result<usize> {
    match part {
        "body" => Ok(9),
        "face" => Ok(18),
        "left" | "right" => Ok(21),
        other => Err(Error::Config(format!("unknown skeleton part '{other}'"))),
    }
}

/// Per-part keypoint trajectories; each entry is `[x, y, confidence]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parts {
    pub body: Vec<Vec<[f64; 3]>>,
    pub face: Vec<Vec<[f64; 3]>>,
    pub left: Vec<Vec<[f64; 3]>>,
    pub right: Vec<Vec<[f64; 3]>>,
}

impl Parts {
    pub fn get(&self, part: &str) -> Result<&Vec<Vec<[f64; 3]>>> {
        match part {
            "body" => Ok(&self.body),
            "face" => Ok(&self.face),
            "left" => Ok(&self.left),
            "right" => Ok(&self.right),
            other => Err(Error::Config(format!("unknown skeleton part '{other}'"))),
        }
    }
}

/// One labelled skeleton sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonSequence {
    pub id: String,
    pub gloss: String,
    pub frames: usize,
    pub parts: Parts,
}

impl SkeletonSequence {
    /// Checks frame counts, per-part keypoint counts, coordinate finiteness
    /// and the confidence range.
    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Data(format!("record '{}' has zero frames", self.id)));
        }
        for part in PART_NAMES {
            let traj = self.parts.get(part)?;
            let n = keypoint_count(part)?;
            if traj.len() != self.frames {
                return Err(Error::Data(format!(
                    "record '{}': part '{part}' has {} frames, expected {}",
                    self.id,
                    traj.len(),
                    self.frames
                )));
            }
            for (t, frame) in traj.iter().enumerate() {
                if frame.len() != n {
                    return Err(Error::Data(format!(
                        "record '{}': part '{part}' frame {t} has {} keypoints, expected {n}",
                        self.id,
                        frame.len()
                    )));
                }
                for kp in frame {
                    if !kp[0].is_finite() || !kp[1].is_finite() {
                        return Err(Error::Data(format!(
                            "record '{}': non-finite coordinate in part '{part}' frame {t}",
                            self.id
                        )));
                    }
                    if !(0.0..=1.0).contains(&kp[2]) {
                        return Err(Error::Data(format!(
                            "record '{}': confidence {} outside [0,1] in part '{part}' frame {t}",
                            self.id, kp[2]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Special tokens precede the gloss tokens in every vocabulary.
pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const SPECIAL_TOKENS: [&str; 3] = ["<pad>", "<bos>", "<eos>"];

/// Ordered token list: `<pad>`, `<bos>`, `<eos>`, then glosses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn from_glosses(glosses: &[String]) -> Vocabulary {
        let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        tokens.extend(glosses.iter().cloned());
        Vocabulary { tokens }
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary> {
        if tokens.len() < SPECIAL_TOKENS.len()
            || tokens[..3] != SPECIAL_TOKENS.map(String::from)
        {
            return Err(Error::Config(
                "vocabulary must start with <pad>, <bos>, <eos>".into(),
            ));
        }
        Ok(Vocabulary { tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t == token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    /// Path relative to the manifest's directory.
    pub path: String,
    /// Zero-based line within the JSON-lines file.
    pub line: usize,
    pub gloss: String,
    pub split: Split,
}

/// Index of a dataset: record references plus the vocabulary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub vocabulary: Vocabulary,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub const VERSION: u32 = 1;

    /// Every label must be in the vocabulary and record ids must be unique
    /// across splits.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Data(format!("duplicate record id '{}'", r.id)));
            }
            if self.vocabulary.id(&r.gloss).is_none() {
                return Err(Error::Data(format!(
                    "label '{}' of record '{}' missing from vocabulary",
                    r.gloss, r.id
                )));
            }
        }
        Ok(())
    }

    pub fn indices_of(&self, split: Split) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let m: DatasetManifest = serde_json::from_str(&text)?;
        if m.version != Self::VERSION {
            return Err(Error::Config(format!(
                "manifest version {} unsupported (expected {})",
                m.version,
                Self::VERSION
            )));
        }
        m.validate()?;
        Ok(m)
    }
}

/// Append skeleton records to a JSON-lines file, one record per line.
pub fn write_jsonl(path: &Path, records: &[SkeletonSequence]) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    for r in records {
        let line = serde_json::to_string(r)?;
        writeln!(file, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

/// Read and validate every record of a JSON-lines file.
pub fn read_jsonl(path: &Path) -> Result<Vec<SkeletonSequence>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let seq: SkeletonSequence =
            serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: line_no,
                msg: e.to_string(),
            })?;
        seq.validate().map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: line_no,
            msg: e.to_string(),
        })?;
        out.push(seq);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_seq(id: &str, gloss: &str, frames: usize) -> SkeletonSequence {
        let mk = |n: usize| -> Vec<Vec<[f64; 3]>> {
            (0..frames)
                .map(|t| {
                    (0..n)
                        .map(|k| [0.01 * t as f64 + 0.1 * k as f64, -0.02 * k as f64, 0.9])
                        .collect()
                })
                .collect()
        };
        SkeletonSequence {
            id: id.into(),
            gloss: gloss.into(),
            frames,
            parts: Parts {
                body: mk(9),
                face: mk(18),
                left: mk(21),
                right: mk(21),
            },
        }
    }

    #[test]
    fn jsonl_roundtrip_is_value_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        let records = vec![tiny_seq("a", "g0", 3), tiny_seq("b", "g1", 5)];
        write_jsonl(&path, &records).unwrap();
        let back = read_jsonl(&path).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = serde_json::to_string(&tiny_seq("a", "g", 2)).unwrap();
        std::fs::write(&path, format!("{good}\n{{not json\n")).unwrap();
        match read_jsonl(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_wrong_keypoint_count() {
        let mut seq = tiny_seq("a", "g", 2);
        seq.parts.body[1].pop();
        assert!(matches!(seq.validate(), Err(Error::Data(_))));
    }

    #[test]
    fn validate_rejects_bad_confidence() {
        let mut seq = tiny_seq("a", "g", 2);
        seq.parts.left[0][3][2] = 1.5;
        assert!(matches!(seq.validate(), Err(Error::Data(_))));
    }

    #[test]
    fn manifest_rejects_unknown_label_and_duplicate_id() {
        let vocab = Vocabulary::from_glosses(&["g0".into()]);
        let rec = |id: &str, gloss: &str| ManifestRecord {
            id: id.into(),
            path: "t.jsonl".into(),
            line: 0,
            gloss: gloss.into(),
            split: Split::Train,
        };
        let m = DatasetManifest {
            version: 1,
            vocabulary: vocab.clone(),
            records: vec![rec("a", "g1")],
        };
        assert!(m.validate().is_err());
        let m = DatasetManifest {
            version: 1,
            vocabulary: vocab,
            records: vec![rec("a", "g0"), rec("a", "g0")],
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn unknown_part_name_is_config_error() {
        assert!(matches!(keypoint_count("tail"), Err(Error::Config(_))));
    }
}
