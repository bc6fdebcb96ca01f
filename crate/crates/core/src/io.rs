//! Dataset files, manifests and content hashes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{GroundTruthLabel, MemoryCorpus, MemoryItem, Query, QueryType, Regime};
use crate::store::StoreSet;
use crate::synthgen::{Dataset, GeneratorConfig, Split};

pub const QUERIES_FILE: &str = "queries.jsonl";
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const SPLIT_FILE: &str = "split.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One line of the query file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub text: String,
    pub query_type: QueryType,
    pub answer: String,
    pub regime: Regime,
    pub ground_truth_stores: StoreSet,
}

impl QueryRecord {
    pub fn new(query: &Query, label: &GroundTruthLabel) -> Self {
        QueryRecord {
            id: query.id.clone(),
            text: query.text.clone(),
            query_type: query.query_type,
            answer: query.answer.clone(),
            regime: query.regime,
            ground_truth_stores: label.stores,
        }
    }

    pub fn into_parts(self) -> (Query, GroundTruthLabel) {
        let label = GroundTruthLabel {
            query_id: self.id.clone(),
            stores: self.ground_truth_stores,
        };
        let query = Query {
            id: self.id,
            text: self.text,
            query_type: self.query_type,
            answer: self.answer,
            regime: self.regime,
        };
        (query, label)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidDataset(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(row);
    }
    Ok(out)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Record of what produced a set of files: the command, its configuration,
/// input hashes and output hashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: impl Into<String>, config: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(Manifest {
            command: command.into(),
            config: serde_json::to_value(config)?,
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Hashes `dir/name` and records it under `name`.
    pub fn add_output(&mut self, dir: &Path, name: &str) -> Result<()> {
        self.outputs.insert(name.to_string(), sha256_file(&dir.join(name))?);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, self)?;
        Ok(path)
    }

    /// Checks every recorded output in `dir` against its hash.
    pub fn verify_outputs(&self, dir: &Path) -> Result<()> {
        for (name, expected) in &self.outputs {
            let path = dir.join(name);
            let actual = sha256_file(&path)?;
            if &actual != expected {
                return Err(Error::HashMismatch {
                    path,
                    expected: expected.clone(),
                    actual,
                });
            }
        }
        Ok(())
    }
}

/// Writes the query, corpus and split files plus a manifest into `dir`.
pub fn write_dataset(dir: &Path, dataset: &Dataset, config: &GeneratorConfig) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(
        &dir.join(QUERIES_FILE),
        dataset.queries.iter().zip(&dataset.labels).map(|(q, l)| QueryRecord::new(q, l)),
    )?;
    write_jsonl(&dir.join(CORPUS_FILE), &dataset.corpus.items)?;
    write_json(&dir.join(SPLIT_FILE), &dataset.split)?;
    let mut manifest = Manifest::new("generate", config, Some(config.seed))?;
    for name in [QUERIES_FILE, CORPUS_FILE, SPLIT_FILE] {
        manifest.add_output(dir, name)?;
    }
    manifest.write(dir)?;
    Ok(manifest)
}

/// A dataset directory as loaded from disk.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dir: PathBuf,
    pub dataset: Dataset,
    pub manifest: Manifest,
}

impl LoadedDataset {
    /// Generator configuration recorded in the manifest, when present.
    pub fn generator_config(&self) -> Option<GeneratorConfig> {
        serde_json::from_value(self.manifest.config.clone()).ok()
    }
}

/// Reads a dataset directory after checking file hashes against its manifest.
pub fn read_dataset(dir: &Path) -> Result<LoadedDataset> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
    manifest.verify_outputs(dir)?;
    let records: Vec<QueryRecord> = read_jsonl(&dir.join(QUERIES_FILE))?;
    let items: Vec<MemoryItem> = read_jsonl(&dir.join(CORPUS_FILE))?;
    let split_path = dir.join(SPLIT_FILE);
    let split: Split = if split_path.exists() {
        read_json(&split_path)?
    } else {
        Split {
            train: Vec::new(),
            test: records.iter().map(|r| r.id.clone()).collect(),
        }
    };
    let regime = records.first().map(|r| r.regime).unwrap_or(Regime::Short);
    let (queries, labels): (Vec<Query>, Vec<GroundTruthLabel>) = records.into_iter().map(QueryRecord::into_parts).unzip();
    if let Some(l) = labels.iter().find(|l| l.stores.is_empty()) {
        return Err(Error::InvalidDataset(format!("query {} has an empty label", l.query_id)));
    }
    Ok(LoadedDataset {
        dir: dir.to_path_buf(),
        dataset: Dataset {
            queries,
            labels,
            corpus: MemoryCorpus { regime, items },
            split,
        },
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::generate_dataset;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GeneratorConfig {
            n_queries: 21,
            ..Default::default()
        };
        let ds = generate_dataset(&cfg).unwrap();
        write_dataset(dir.path(), &ds, &cfg).unwrap();
        let loaded = read_dataset(dir.path()).unwrap();
        assert_eq!(loaded.dataset, ds);
        assert_eq!(loaded.generator_config(), Some(cfg));

        let first = fs::read_to_string(dir.path().join(QUERIES_FILE)).unwrap();
        let line: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
        let keys: Vec<&str> = line.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 6);
        for k in ["id", "text", "query_type", "answer", "regime", "ground_truth_stores"] {
            assert!(keys.contains(&k));
        }

        fs::write(dir.path().join(QUERIES_FILE), first.replacen('q', "x", 1)).unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::HashMismatch { .. })));
    }
}
