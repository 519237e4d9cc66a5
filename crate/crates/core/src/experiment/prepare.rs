use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::write_atomic;
use crate::data::{
    load_csv, split, split_train_val, subsample, Dataset, NormParams, OneHotEncoder, Schema,
    SplitSpec,
};
use crate::error::{Error, Result};

pub const PREPARED_FORMAT: &str = "aegr-prepared";
pub const PREPARED_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "prepared.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub file: String,
    pub rows: usize,
    pub anomalies: Option<usize>,
    pub content_hash: String,
}

impl SplitInfo {
    fn of(file: &str, data: &Dataset) -> Self {
        SplitInfo {
            file: file.into(),
            rows: data.n_rows(),
            anomalies: data
                .labels
                .as_ref()
                .map(|l| l.iter().filter(|&&y| y == 1).count()),
            content_hash: data.content_hash(),
        }
    }
}

/// Sidecar describing a prepared dataset directory.
///
/// The directory holds `train.csv`, `val.csv` and `test.csv` (normalized
/// features, header row of feature names, trailing `label` column when the
/// source is labelled) next to this manifest as `prepared.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedManifest {
    pub format: String,
    pub version: u32,
    /// Hash over the sources, schema and split settings.
    pub fingerprint: String,
    pub sources: Vec<SourceFile>,
    pub feature_names: Vec<String>,
    pub n_numeric: usize,
    pub categorical: Vec<(String, usize)>,
    pub norm: NormParams,
    pub train: SplitInfo,
    pub val: SplitInfo,
    pub test: SplitInfo,
}

impl PreparedManifest {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Hash of the three split hashes; identifies the exact model inputs.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for s in [&self.train, &self.val, &self.test] {
            h.update(s.content_hash.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

impl fmt::Display for PreparedManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cats: Vec<String> = self
            .categorical
            .iter()
            .map(|(name, k)| format!("{name}:{k}"))
            .collect();
        writeln!(
            f,
            "features: {} ({} numeric, {} one-hot{})",
            self.n_features(),
            self.n_numeric,
            self.n_features() - self.n_numeric,
            if cats.is_empty() {
                String::new()
            } else {
                format!(" from {}", cats.join(", "))
            }
        )?;
        for (name, s) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            match s.anomalies {
                Some(a) => writeln!(f, "{name:<5} {:>8} rows, {a} anomalies", s.rows)?,
                None => writeln!(f, "{name:<5} {:>8} rows", s.rows)?,
            }
        }
        write!(f, "content hash: {}", self.content_hash())
    }
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub manifest: PreparedManifest,
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

fn file_sha256(path: &Path) -> Result<SourceFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(SourceFile {
        name: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

fn fingerprint(sources: &[SourceFile], schema: &Schema, split: &SplitSpec) -> Result<String> {
    let mut h = Sha256::new();
    for s in sources {
        h.update(s.sha256.as_bytes());
    }
    h.update(serde_json::to_vec(schema)?);
    h.update(serde_json::to_vec(split)?);
    Ok(hex::encode(h.finalize()))
}

fn sources(cfg: &ExperimentConfig) -> Result<Vec<SourceFile>> {
    std::iter::once(&cfg.dataset)
        .chain(cfg.test_dataset.as_ref())
        .map(|p| file_sha256(p))
        .collect()
}

/// Encode, split, subsample and normalize the configured dataset.
///
/// Vocabularies are fitted on the (training) source file, normalization
/// on the final training split only.
pub fn prepare_splits(cfg: &ExperimentConfig) -> Result<(OneHotEncoder, NormParams, [Dataset; 3])> {
    cfg.check_inputs()?;
    let raw = load_csv(&cfg.dataset, &cfg.schema)?;
    let encoder = OneHotEncoder::fit(&raw);
    let encoded = encoder.transform(&raw)?;
    let sub = |d: Dataset| match cfg.split.subsample_fraction {
        Some(f) => subsample(&d, f, cfg.split.seed),
        None => Ok(d),
    };
    let (train, val, test) = match &cfg.test_dataset {
        Some(test_path) => {
            let test = encoder.transform(&load_csv(test_path, &cfg.schema)?)?;
            let pool = sub(encoded)?;
            let (train, val) = split_train_val(&pool, cfg.split.val_fraction, cfg.split.seed)?;
            (train, val, test)
        }
        None => {
            let (train, val, test) = split(&encoded, &cfg.split)?;
            (sub(train)?, val, test)
        }
    };
    let norm = NormParams::fit(&train)?;
    let splits = [norm.apply(&train)?, norm.apply(&val)?, norm.apply(&test)?];
    Ok((encoder, norm, splits))
}

/// Write the prepared splits and manifest under `<out>/prepared/`.
/// Identical inputs give byte-identical files.
pub fn cmd_prepare(cfg: &ExperimentConfig) -> Result<PreparedManifest> {
    let (encoder, norm, [train, val, test]) = prepare_splits(cfg)?;
    let dir = cfg.prepared_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (name, data) in [("train.csv", &train), ("val.csv", &val), ("test.csv", &test)] {
        write_atomic(&dir.join(name), |w| data.write_csv(w))?;
    }
    let sources = sources(cfg)?;
    let manifest = PreparedManifest {
        format: PREPARED_FORMAT.into(),
        version: PREPARED_VERSION,
        fingerprint: fingerprint(&sources, &cfg.schema, &cfg.split)?,
        sources,
        feature_names: encoder.feature_names().to_vec(),
        n_numeric: encoder.n_numeric(),
        categorical: encoder.cardinalities(),
        norm,
        train: SplitInfo::of("train.csv", &train),
        val: SplitInfo::of("val.csv", &val),
        test: SplitInfo::of("test.csv", &test),
    };
    write_atomic(&dir.join(MANIFEST_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        w.write_all(b"\n").map_err(|e| Error::io(MANIFEST_FILE, e))
    })?;
    log::info!("prepared {} features into {}", manifest.n_features(), dir.display());
    Ok(manifest)
}

/// Read back prepared splits, refusing caches that are stale or corrupt.
pub fn load_prepared(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let dir = cfg.prepared_dir();
    let manifest_path = dir.join(MANIFEST_FILE);
    let file = File::open(&manifest_path).map_err(|e| {
        Error::io(
            &manifest_path,
            std::io::Error::new(e.kind(), format!("{e}; run `prepare` first")),
        )
    })?;
    let manifest: PreparedManifest = serde_json::from_reader(BufReader::new(file))?;
    if manifest.format != PREPARED_FORMAT || manifest.version != PREPARED_VERSION {
        return Err(Error::Format(format!(
            "{}: expected {PREPARED_FORMAT} v{PREPARED_VERSION}, found {} v{}",
            manifest_path.display(),
            manifest.format,
            manifest.version
        )));
    }
    let current = fingerprint(&sources(cfg)?, &cfg.schema, &cfg.split)?;
    if current != manifest.fingerprint {
        return Err(Error::Config(format!(
            "prepared data in {} does not match the config; rerun `prepare`",
            dir.display()
        )));
    }
    let read = |info: &SplitInfo| -> Result<Dataset> {
        let path = dir.join(&info.file);
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let data = Dataset::read_csv(BufReader::new(f), info.anomalies.is_some())?;
        if data.content_hash() != info.content_hash {
            return Err(Error::Format(format!(
                "{} does not match its recorded hash",
                path.display()
            )));
        }
        Ok(data)
    };
    Ok(PreparedData {
        train: read(&manifest.train)?,
        val: read(&manifest.val)?,
        test: read(&manifest.test)?,
        manifest,
    })
}
