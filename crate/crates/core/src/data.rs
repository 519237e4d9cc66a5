//! Dataset ingestion and preprocessing.
//!
//! The flow for a single-file dataset is
//!
//! ```text
//! load_csv -> one_hot_encode -> split -> subsample(train) -> NormParams::fit(train) -> apply
//! ```
//!
//! Labels ride alongside the features and are only ever read by the
//! evaluation code. Training consumes `Dataset::features` alone.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Slack added before flooring `fraction * n` so that e.g. `0.29 * 100`
/// floors to 29 rather than 28.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
    /// Dropped at load time (ids, difficulty scores, ...).
    Skip,
}

/// Column-kind assignment for a CSV file.
///
/// `columns` keys are either header names or zero-based column indices
/// written as strings. Columns not listed get `default`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default = "default_numeric")]
    pub default: ColumnKind,
    #[serde(default)]
    pub columns: BTreeMap<String, ColumnKind>,
    /// Label values mapped to 1 (anomaly). Everything else maps to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly_labels: Option<Vec<String>>,
    /// Label values mapped to 0 (normal). Everything else maps to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_labels: Option<Vec<String>>,
}

fn default_true() -> bool {
    true
}

fn default_numeric() -> ColumnKind {
    ColumnKind::Numeric
}

impl Default for Schema {
    fn default() -> Self {
        Schema {
            has_header: true,
            default: ColumnKind::Numeric,
            columns: BTreeMap::new(),
            anomaly_labels: None,
            normal_labels: None,
        }
    }
}

impl Schema {
    pub fn with_column(mut self, key: impl Into<String>, kind: ColumnKind) -> Self {
        self.columns.insert(key.into(), kind);
        self
    }

    fn resolve(&self, names: &[String]) -> Result<Vec<ColumnKind>> {
        let mut kinds = vec![self.default; names.len()];
        for (key, kind) in &self.columns {
            let idx = match names.iter().position(|n| n == key) {
                Some(i) => i,
                None => match key.parse::<usize>() {
                    Ok(i) if i < names.len() => i,
                    _ => {
                        return Err(Error::Schema(format!(
                            "column '{key}' is neither a header name nor an index < {}",
                            names.len()
                        )))
                    }
                },
            };
            kinds[idx] = *kind;
        }
        let n_labels = kinds.iter().filter(|k| **k == ColumnKind::Label).count();
        if n_labels > 1 {
            return Err(Error::Schema(format!(
                "at most one label column allowed, found {n_labels}"
            )));
        }
        if self.anomaly_labels.is_some() && self.normal_labels.is_some() {
            return Err(Error::Schema(
                "set either anomaly_labels or normal_labels, not both".into(),
            ));
        }
        Ok(kinds)
    }

    fn label_value(&self, raw: &str, row: usize) -> Result<u8> {
        if let Some(pos) = &self.anomaly_labels {
            return Ok(pos.iter().any(|v| v == raw) as u8);
        }
        if let Some(neg) = &self.normal_labels {
            return Ok(!neg.iter().any(|v| v == raw) as u8);
        }
        match raw.parse::<f64>() {
            Ok(v) if v == 0.0 => Ok(0),
            Ok(v) if v == 1.0 => Ok(1),
            _ => Err(Error::Parse {
                row,
                column: "label".into(),
                value: raw.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Parsed CSV contents. Numeric columns hold `Value::Num`, categorical
/// columns `Value::Text`, and the label column its 0/1 code as `Value::Num`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl RawTable {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Value>>) -> Result<Self> {
        let n_labels = columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Label)
            .count();
        if n_labels > 1 {
            return Err(Error::Schema("at most one label column allowed".into()));
        }
        if columns.iter().any(|c| c.kind == ColumnKind::Skip) {
            return Err(Error::Schema("skip columns cannot appear in a table".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Arity {
                    row: i,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
        }
        Ok(RawTable { columns, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn label_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.kind == ColumnKind::Label)
    }
}

/// Read a CSV file under `schema`. Row indices in errors are zero-based
/// and count data rows only (the header is not row 0).
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, &path.display().to_string())
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema, source: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let first = match records.next() {
        Some(r) => r?,
        None => return Err(Error::NoRows(source.into())),
    };
    let width = first.len();
    let (names, pending): (Vec<String>, Option<csv::StringRecord>) = if schema.has_header {
        (first.iter().map(str::to_string).collect(), None)
    } else {
        ((0..width).map(|i| format!("c{i}")).collect(), Some(first))
    };
    let kinds = schema.resolve(&names)?;

    let columns: Vec<Column> = names
        .iter()
        .zip(&kinds)
        .filter(|(_, k)| **k != ColumnKind::Skip)
        .map(|(name, kind)| Column {
            name: name.clone(),
            kind: *kind,
        })
        .collect();

    let mut rows = Vec::new();
    for (row_idx, record) in pending.into_iter().map(Ok).chain(records).enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(Error::Arity {
                row: row_idx,
                expected: width,
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(columns.len());
        for ((field, kind), name) in record.iter().zip(&kinds).zip(&names) {
            match kind {
                ColumnKind::Skip => {}
                ColumnKind::Numeric => row.push(Value::Num(parse_number(field, row_idx, name)?)),
                ColumnKind::Categorical => {
                    if field.is_empty() {
                        return Err(Error::Parse {
                            row: row_idx,
                            column: name.clone(),
                            value: String::new(),
                        });
                    }
                    row.push(Value::Text(field.to_string()))
                }
                ColumnKind::Label => {
                    row.push(Value::Num(schema.label_value(field, row_idx)? as f64))
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::NoRows(source.into()));
    }
    RawTable::new(columns, rows)
}

fn parse_number(field: &str, row: usize, column: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row,
            column: column.into(),
            value: field.into(),
        }),
    }
}

/// Row-major feature matrix with optional binary labels (1 = anomaly).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Option<Vec<u8>>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Option<Vec<u8>>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if feature_names.len() != features.ncols() {
            return Err(Error::Dimension(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != features.nrows() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    features.nrows()
                )));
            }
            if labels.iter().any(|&l| l > 1) {
                return Err(Error::Schema("labels must be 0 or 1".into()));
            }
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("non-finite feature value".into()));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
        })
    }

    /// Unlabelled dataset with generated feature names `f0, f1, ...`.
    pub fn from_features(features: Array2<f64>) -> Self {
        let names = (0..features.ncols()).map(|i| format!("f{i}")).collect();
        Dataset {
            features,
            labels: None,
            feature_names: names,
        }
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        self.labels = Some(labels);
        Dataset::new(self.features, self.labels, self.feature_names)
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), idx),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Hex SHA-256 over shape, feature names, feature bits and labels.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_rows() as u64).to_le_bytes());
        h.update((self.n_features() as u64).to_le_bytes());
        for name in &self.feature_names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        for v in self.features.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        if let Some(labels) = &self.labels {
            h.update(labels);
        }
        hex::encode(h.finalize())
    }

    /// Write as CSV: a header of feature names (plus `label` when
    /// labelled), one row per point. Floats use shortest round-trip form.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.feature_names.clone();
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header)?;
        let mut buf = Vec::with_capacity(header.len());
        for (i, row) in self.features.rows().into_iter().enumerate() {
            buf.clear();
            buf.extend(row.iter().map(|v| v.to_string()));
            if let Some(labels) = &self.labels {
                buf.push(labels[i].to_string());
            }
            w.write_record(&buf)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Inverse of [`Dataset::write_csv`].
    pub fn read_csv<R: std::io::Read>(reader: R, labelled: bool) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if labelled {
            names.pop();
        }
        let m = names.len();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let expected = m + labelled as usize;
            if rec.len() != expected {
                return Err(Error::Arity {
                    row,
                    expected,
                    found: rec.len(),
                });
            }
            for (j, field) in rec.iter().take(m).enumerate() {
                values.push(parse_number(field, row, &names[j])?);
            }
            if labelled {
                let l = parse_number(&rec[m], row, "label")?;
                labels.push(if l == 1.0 { 1 } else { 0 });
            }
        }
        let n = values.len() / m.max(1);
        let features = Array2::from_shape_vec((n, m), values)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Dataset::new(features, labelled.then_some(labels), names)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum EncodedColumn {
    Numeric { source: usize },
    Categorical { source: usize, vocab: Vec<String> },
}

/// One-hot encoder with vocabularies fitted on a table. Categories are
/// ordered by first appearance. Categories unseen at fit time encode as an
/// all-zero block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotEncoder {
    columns: Vec<EncodedColumn>,
    feature_names: Vec<String>,
    source_names: Vec<String>,
}

impl OneHotEncoder {
    pub fn fit(table: &RawTable) -> Self {
        let mut columns = Vec::new();
        let mut feature_names = Vec::new();
        for (j, col) in table.columns.iter().enumerate() {
            match col.kind {
                ColumnKind::Numeric => {
                    columns.push(EncodedColumn::Numeric { source: j });
                    feature_names.push(col.name.clone());
                }
                ColumnKind::Categorical => {
                    let mut vocab: Vec<String> = Vec::new();
                    let mut seen: HashMap<&str, ()> = HashMap::new();
                    for row in &table.rows {
                        if let Value::Text(s) = &row[j] {
                            if seen.insert(s.as_str(), ()).is_none() {
                                vocab.push(s.clone());
                            }
                        }
                    }
                    feature_names.extend(vocab.iter().map(|v| format!("{}={v}", col.name)));
                    columns.push(EncodedColumn::Categorical { source: j, vocab });
                }
                ColumnKind::Label | ColumnKind::Skip => {}
            }
        }
        OneHotEncoder {
            columns,
            feature_names,
            source_names: table.columns.iter().map(|c| c.name.clone()).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_numeric(&self) -> usize {
        self.columns
            .iter()
            .filter(|c| matches!(c, EncodedColumn::Numeric { .. }))
            .count()
    }

    /// `(column name, vocabulary size)` for each categorical column.
    pub fn cardinalities(&self) -> Vec<(String, usize)> {
        self.columns
            .iter()
            .filter_map(|c| match c {
                EncodedColumn::Categorical { source, vocab } => {
                    Some((self.source_names[*source].clone(), vocab.len()))
                }
                EncodedColumn::Numeric { .. } => None,
            })
            .collect()
    }

    /// Encode `table`, which must have the same column layout as the table
    /// the encoder was fitted on.
    pub fn transform(&self, table: &RawTable) -> Result<Dataset> {
        let names: Vec<&str> = table.columns.iter().map(|c| c.name.as_str()).collect();
        if names.len() != self.source_names.len()
            || names.iter().zip(&self.source_names).any(|(a, b)| a != b)
        {
            return Err(Error::Schema(
                "table columns differ from the table the encoder was fitted on".into(),
            ));
        }
        let n = table.n_rows();
        let m = self.width();
        let mut features = Array2::<f64>::zeros((n, m));
        for (i, row) in table.rows.iter().enumerate() {
            let mut out = 0;
            for col in &self.columns {
                match col {
                    EncodedColumn::Numeric { source } => {
                        features[[i, out]] = match &row[*source] {
                            Value::Num(v) => *v,
                            Value::Text(t) => {
                                return Err(Error::Parse {
                                    row: i,
                                    column: self.source_names[*source].clone(),
                                    value: t.clone(),
                                })
                            }
                        };
                        out += 1;
                    }
                    EncodedColumn::Categorical { source, vocab } => {
                        let key = match &row[*source] {
                            Value::Text(t) => t.clone(),
                            Value::Num(v) => v.to_string(),
                        };
                        if let Some(k) = vocab.iter().position(|v| *v == key) {
                            features[[i, out + k]] = 1.0;
                        }
                        out += vocab.len();
                    }
                }
            }
        }
        let labels = table.label_index().map(|li| {
            table
                .rows
                .iter()
                .map(|r| match r[li] {
                    Value::Num(v) if v == 1.0 => 1u8,
                    _ => 0u8,
                })
                .collect()
        });
        Dataset::new(features, labels, self.feature_names.clone())
    }
}

/// Fit vocabularies on `table` and encode it.
pub fn one_hot_encode(table: &RawTable) -> Result<Dataset> {
    OneHotEncoder::fit(table).transform(table)
}

/// Per-feature min/max of a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormParams {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.n_rows() == 0 {
            return Err(Error::NoRows("normalization fit".into()));
        }
        let m = train.n_features();
        let mut min = vec![f64::INFINITY; m];
        let mut max = vec![f64::NEG_INFINITY; m];
        for row in train.features.rows() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(NormParams { min, max })
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    fn check(&self, data: &Dataset) -> Result<()> {
        if data.n_features() != self.width() {
            return Err(Error::Dimension(format!(
                "normalization fitted on {} features, data has {}",
                self.width(),
                data.n_features()
            )));
        }
        Ok(())
    }

    /// Map to `2(x - min)/(max - min) - 1`. No clipping; constant features map to 0.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        self.check(data)?;
        let mut out = data.clone();
        for mut row in out.features.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let span = self.max[j] - self.min[j];
                *v = if span > 0.0 {
                    2.0 * (*v - self.min[j]) / span - 1.0
                } else {
                    0.0
                };
            }
        }
        Ok(out)
    }

    /// Inverse map. Constant features come back as their training value.
    pub fn invert(&self, data: &Dataset) -> Result<Dataset> {
        self.check(data)?;
        let mut out = data.clone();
        for mut row in out.features.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let span = self.max[j] - self.min[j];
                *v = (*v + 1.0) / 2.0 * span + self.min[j];
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_fraction: Option<f64>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.6,
            val_fraction: 0.2,
            test_fraction: 0.2,
            seed: 0,
            subsample_fraction: None,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fr.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::Split("fractions must be finite and non-negative".into()));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!("fractions sum to {sum}, expected 1")));
        }
        if let Some(f) = self.subsample_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Split(format!("subsample fraction {f} not in (0, 1]")));
            }
        }
        Ok(())
    }
}

fn floor_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + FLOOR_SLACK).floor() as usize
}

/// Seeded random partition into (train, val, test). Validation and test
/// sizes are `floor(fraction * n)`; train takes the remainder. Each split
/// keeps the input's row order.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    let n = data.n_rows();
    if n < 3 {
        return Err(Error::Split(format!("need at least 3 rows, have {n}")));
    }
    let n_val = floor_count(spec.val_fraction, n);
    let n_test = floor_count(spec.test_fraction, n);
    let n_train = n.saturating_sub(n_val + n_test);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Split(format!(
            "empty split: train {n_train}, val {n_val}, test {n_test}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut parts = [
        idx[..n_train].to_vec(),
        idx[n_train..n_train + n_val].to_vec(),
        idx[n_train + n_val..].to_vec(),
    ];
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    Ok((
        data.select_rows(&parts[0]),
        data.select_rows(&parts[1]),
        data.select_rows(&parts[2]),
    ))
}

/// Seeded two-way (train, val) split for datasets that ship with their
/// own test file. `val_fraction` of the rows go to validation.
pub fn split_train_val(data: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = data.n_rows();
    let n_val = floor_count(val_fraction, n);
    if n_val == 0 || n_val >= n {
        return Err(Error::Split(format!(
            "empty split: train {}, val {n_val}",
            n.saturating_sub(n_val)
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut tr, mut va) = (idx[..n - n_val].to_vec(), idx[n - n_val..].to_vec());
    tr.sort_unstable();
    va.sort_unstable();
    Ok((data.select_rows(&tr), data.select_rows(&va)))
}

/// Seeded sample without replacement of `floor(fraction * n)` rows.
pub fn subsample(train: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Split(format!("subsample fraction {fraction} not in (0, 1]")));
    }
    let n = train.n_rows();
    let k = floor_count(fraction, n).min(n);
    if k == 0 {
        return Err(Error::Split(format!(
            "subsample of {n} rows at fraction {fraction} is empty"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(train.select_rows(&idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn table(csv: &str, schema: &Schema) -> Result<RawTable> {
        read_csv(csv.as_bytes(), schema, "inline")
    }

    #[test]
    fn loads_three_rows() {
        let schema = Schema::default().with_column("y", ColumnKind::Label);
        let t = table("a,b,y\n1,2,0\n3,4,1\n5,6,0\n", &schema).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.columns.len(), 3);
        assert_eq!(t.rows[1][0], Value::Num(3.0));
    }

    #[test]
    fn empty_file_has_no_rows() {
        let err = table("", &Schema::default()).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
        let err = table("a,b\n", &Schema::default()).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn short_row_names_its_index() {
        let err = table("a,b,c\n1,2,3\n4,5\n", &Schema::default()).unwrap_err();
        match err {
            Error::Arity { row, expected, found } => {
                assert_eq!((row, expected, found), (1, 3, 2));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_number_is_reported() {
        let err = table("a\n1\nx\n", &Schema::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }), "{err}");
        let err = table("a\nnan\n", &Schema::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 0, .. }), "{err}");
    }

    #[test]
    fn missing_file() {
        let err = load_csv("/definitely/not/here.csv", &Schema::default()).unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.csv"));
    }

    #[test]
    fn headerless_schema_by_index() {
        let schema = Schema {
            has_header: false,
            ..Schema::default()
        }
        .with_column("1", ColumnKind::Categorical)
        .with_column("2", ColumnKind::Skip);
        let t = table("1,tcp,99\n2,udp,98\n", &schema).unwrap();
        assert_eq!(t.columns.len(), 2);
        assert_eq!(t.columns[1].kind, ColumnKind::Categorical);
    }

    #[test]
    fn label_mapping() {
        let schema = Schema {
            normal_labels: Some(vec!["normal".into()]),
            ..Schema::default()
        }
        .with_column("class", ColumnKind::Label);
        let t = table("x,class\n1,normal\n2,neptune\n", &schema).unwrap();
        let ds = one_hot_encode(&t).unwrap();
        assert_eq!(ds.labels, Some(vec![0, 1]));
        assert_eq!(ds.n_features(), 1);
    }

    #[test]
    fn two_label_columns_rejected() {
        let schema = Schema::default()
            .with_column("a", ColumnKind::Label)
            .with_column("b", ColumnKind::Label);
        assert!(matches!(table("a,b\n0,1\n", &schema), Err(Error::Schema(_))));
    }

    #[test]
    fn one_hot_protocols() {
        let schema = Schema::default().with_column("proto", ColumnKind::Categorical);
        let t = table("proto\ntcp\nudp\nicmp\ntcp\n", &schema).unwrap();
        let ds = one_hot_encode(&t).unwrap();
        assert_eq!(ds.n_features(), 3);
        assert_eq!(ds.features.row(0).to_vec(), vec![1.0, 0.0, 0.0]);
        assert_eq!(ds.features.row(2).to_vec(), vec![0.0, 0.0, 1.0]);
        assert_eq!(ds.feature_names[1], "proto=udp");
    }

    #[test]
    fn numeric_only_passes_through() {
        let t = table("a,b\n1.5,2\n3,-4\n", &Schema::default()).unwrap();
        let ds = one_hot_encode(&t).unwrap();
        assert_eq!(ds.features, array![[1.5, 2.0], [3.0, -4.0]]);
    }

    #[test]
    fn unseen_category_is_all_zero() {
        let schema = Schema::default().with_column("p", ColumnKind::Categorical);
        let fit_t = table("p,x\ntcp,1\nudp,2\n", &schema).unwrap();
        let enc = OneHotEncoder::fit(&fit_t);
        let apply_t = table("p,x\nicmp,3\n", &schema).unwrap();
        let ds = enc.transform(&apply_t).unwrap();
        assert_eq!(ds.features.row(0).to_vec(), vec![0.0, 0.0, 3.0]);
    }

    #[test]
    fn normalize_examples() {
        let train = Dataset::from_features(array![[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]]);
        let p = NormParams::fit(&train).unwrap();
        let out = p.apply(&train).unwrap();
        assert_eq!(out.features.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(out.features.column(1).to_vec(), vec![0.0, 0.0, 0.0]);

        let p = NormParams {
            min: vec![0.0],
            max: vec![10.0],
        };
        let out = p.apply(&Dataset::from_features(array![[12.0]])).unwrap();
        assert!((out.features[[0, 0]] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn normalize_width_mismatch() {
        let p = NormParams {
            min: vec![0.0],
            max: vec![1.0],
        };
        let d = Dataset::from_features(array![[1.0, 2.0]]);
        assert!(matches!(p.apply(&d), Err(Error::Dimension(_))));
    }

    fn indexed(n: usize) -> Dataset {
        let f = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        Dataset::from_features(f)
    }

    #[test]
    fn split_sizes() {
        let spec = SplitSpec::default();
        let (tr, va, te) = split(&indexed(100), &spec).unwrap();
        assert_eq!((tr.n_rows(), va.n_rows(), te.n_rows()), (60, 20, 20));
        let (tr, va, te) = split(&indexed(10), &spec).unwrap();
        assert_eq!((tr.n_rows(), va.n_rows(), te.n_rows()), (6, 2, 2));
        let (tr, va, te) = split(&indexed(11), &spec).unwrap();
        assert_eq!((tr.n_rows(), va.n_rows(), te.n_rows()), (7, 2, 2));
    }

    #[test]
    fn split_errors() {
        let spec = SplitSpec::default();
        assert!(split(&indexed(2), &spec).is_err());
        // floor(0.2 * 4) == 0
        assert!(split(&indexed(4), &spec).is_err());
        let bad = SplitSpec {
            train_fraction: 0.7,
            ..spec
        };
        assert!(split(&indexed(100), &bad).is_err());
    }

    #[test]
    fn subsample_counts() {
        let d = indexed(1000);
        assert_eq!(subsample(&d, 0.1, 3).unwrap().n_rows(), 100);
        assert_eq!(subsample(&d, 0.1, 3).unwrap(), subsample(&d, 0.1, 3).unwrap());
        assert_eq!(subsample(&d, 1.0, 9).unwrap(), d);
        assert!(subsample(&indexed(5), 0.1, 0).is_err());
        assert!(subsample(&d, 0.0, 0).is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let d = Dataset::from_features(array![[0.1, -1.0 / 3.0], [1e-300, 2.5]])
            .with_labels(vec![0, 1])
            .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), true).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.content_hash(), d.content_hash());
    }
}
