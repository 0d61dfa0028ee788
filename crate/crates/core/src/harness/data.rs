//! CSV ingestion, seeded stratified splits and min-max scaling fitted on the
//! training rows only.

use super::HarnessError;
use crate::kde::{DataTuple, Dataset};
use crate::math::seeded_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

/// Which column carries the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("class".into())
    }
}

fn default_true() -> bool {
    true
}

fn default_missing() -> Vec<String> {
    ["", "?", "NA", "NaN", "nan"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn default_malformed() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default)]
    pub label: LabelColumn,
    /// Cell values read as missing.
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
    /// Largest tolerated fraction of rows with the wrong number of cells.
    #[serde(default = "default_malformed")]
    pub max_malformed_fraction: f64,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            has_header: true,
            label: LabelColumn::default(),
            missing: default_missing(),
            max_malformed_fraction: default_malformed(),
        }
    }
}

/// Raw, unscaled rows with labels mapped to `0..classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Rows dropped because a cell was missing.
    pub dropped_missing: usize,
    /// Rows dropped for having the wrong number of cells.
    pub malformed: usize,
}

impl Table {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn m(&self) -> usize {
        self.feature_names.len()
    }

    pub fn c(&self) -> usize {
        self.class_names.len()
    }

    pub fn subset(&self, idx: &[usize]) -> Table {
        Table {
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dropped_missing: 0,
            malformed: 0,
        }
    }
}

/// Labels that all parse as numbers sort numerically, otherwise
/// lexicographically.
fn order_classes(names: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = names.into_iter().collect();
    if v.iter().all(|s| s.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| {
            a.parse::<f64>()
                .unwrap()
                .total_cmp(&b.parse::<f64>().unwrap())
        });
    }
    v
}

pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Table, HarnessError> {
    let file = std::fs::File::open(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(input: R, schema: &CsvSchema) -> Result<Table, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = Vec::new();
    for r in reader.records() {
        records.push(r.map_err(|e| HarnessError::Csv(e.to_string()))?);
    }
    let header = if schema.has_header && !records.is_empty() {
        Some(records.remove(0))
    } else {
        None
    };
    let width = header.as_ref().or(records.first()).map_or(0, |r| r.len());
    if width < 2 {
        return Err(HarnessError::Csv(
            "need at least one feature and one label column".into(),
        ));
    }
    let label_idx = match &schema.label {
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(HarnessError::Csv(format!("label column {i} out of range")))
        }
        LabelColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| HarnessError::Csv(format!("no column named {name:?}")))?,
    };
    let feature_names: Vec<String> = (0..width)
        .filter(|&i| i != label_idx)
        .map(|i| {
            header
                .as_ref()
                .map_or(format!("f{i}"), |h| h[i].to_string())
        })
        .collect();

    let mut malformed = 0;
    let mut dropped_missing = 0;
    let mut parsed: Vec<(Vec<f64>, String)> = Vec::with_capacity(records.len());
    for (line, rec) in records.iter().enumerate() {
        if rec.len() != width {
            malformed += 1;
            continue;
        }
        if rec
            .iter()
            .any(|cell| schema.missing.iter().any(|m| m == cell))
        {
            dropped_missing += 1;
            continue;
        }
        let mut row = Vec::with_capacity(width - 1);
        for (i, cell) in rec.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| HarnessError::NonNumeric {
                row: line + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(HarnessError::NonNumeric {
                    row: line + 1,
                    value: cell.to_string(),
                });
            }
            row.push(v);
        }
        parsed.push((row, rec[label_idx].to_string()));
    }
    let total = records.len().max(1);
    if malformed as f64 > schema.max_malformed_fraction * total as f64 {
        return Err(HarnessError::Malformed {
            bad: malformed,
            total,
        });
    }
    if parsed.is_empty() {
        return Err(HarnessError::Csv("no usable rows".into()));
    }
    let class_names = order_classes(parsed.iter().map(|(_, l)| l.clone()).collect());
    let labels = parsed
        .iter()
        .map(|(_, l)| {
            class_names
                .iter()
                .position(|c| c == l)
                .expect("label collected")
        })
        .collect();
    Ok(Table {
        feature_names,
        class_names,
        rows: parsed.into_iter().map(|(r, _)| r).collect(),
        labels,
        dropped_missing,
        malformed,
    })
}

/// Header row, features in shortest round-trip form, label last.
pub fn write_csv<W: Write>(table: &Table, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = table.feature_names.clone();
    header.push("class".into());
    w.write_record(&header)
        .map_err(|e| HarnessError::Csv(e.to_string()))?;
    for (row, &label) in table.rows.iter().zip(&table.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(table.class_names[label].clone());
        w.write_record(&rec)
            .map_err(|e| HarnessError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

/// Per-feature affine map onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self, HarnessError> {
        let m = rows.first().map(|r| r.len()).ok_or(HarnessError::Empty)?;
        let mut min = vec![f64::INFINITY; m];
        let mut max = vec![f64::NEG_INFINITY; m];
        for r in rows {
            for (j, v) in r.iter().enumerate() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        Ok(Self { min, max })
    }

    /// Constant columns map to 0. Values outside the fitted range (test rows)
    /// are clamped so every output lies in `[0, 1]`.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    ((v - self.min[j]) / range).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn dataset(&self, table: &Table) -> Result<Dataset, HarnessError> {
        let tuples = table
            .rows
            .iter()
            .zip(&table.labels)
            .map(|(r, &l)| DataTuple::new(self.transform(r), l))
            .collect();
        Ok(Dataset::from_tuples(table.m(), table.c(), tuples)?)
    }
}

/// Scales a whole table with its own statistics (no held-out rows).
pub fn scaled_dataset(table: &Table) -> Result<Dataset, HarnessError> {
    MinMaxScaler::fit(&table.rows)?.dataset(table)
}

/// Row indices of a train/test partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per class, a seeded shuffle sends `round(test_fraction * n_class)` rows to
/// the test side. Both sides come back in ascending row order.
pub fn stratified_split(
    labels: &[usize],
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices, HarnessError> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(HarnessError::Config(format!(
            "test fraction {test_fraction} outside [0, 1)"
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = seeded_rng(seed);
    let mut split = SplitIndices {
        train: Vec::new(),
        test: Vec::new(),
    };
    for class in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (test_fraction * idx.len() as f64).round() as usize;
        split.test.extend_from_slice(&idx[..n_test]);
        split.train.extend_from_slice(&idx[n_test..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Seeded stratified assignment of rows to `folds` folds: each class is
/// shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = seeded_rng(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for class in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            out[next % folds].push(i);
            next += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

/// Train and test datasets scaled with training statistics.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub scaler: MinMaxScaler,
}

pub fn prepare(table: &Table, split: &SplitIndices) -> Result<Prepared, HarnessError> {
    let train_table = table.subset(&split.train);
    let scaler = MinMaxScaler::fit(&train_table.rows)?;
    Ok(Prepared {
        train: scaler.dataset(&train_table)?,
        test: scaler.dataset(&table.subset(&split.test))?,
        scaler,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "a,b,class\n1,10,x\n3,10,y\n2,10,x\n";

    #[test]
    fn three_rows() {
        let t = read_csv(TOY.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(
            t.rows,
            vec![vec![1.0, 10.0], vec![3.0, 10.0], vec![2.0, 10.0]]
        );
        assert_eq!(t.labels, vec![0, 1, 0]);
        assert_eq!(t.class_names, vec!["x", "y"]);
        let d = scaled_dataset(&t).unwrap();
        let f: Vec<&[f64]> = d.tuples().iter().map(|t| t.features.as_slice()).collect();
        assert_eq!(f, vec![&[0.0, 0.0][..], &[1.0, 0.0], &[0.5, 0.0]]);
    }

    #[test]
    fn label_by_index_without_header() {
        let s = CsvSchema {
            has_header: false,
            label: LabelColumn::Index(0),
            ..CsvSchema::default()
        };
        let t = read_csv("1,0.5,0.25\n0,0.1,0.2\n".as_bytes(), &s).unwrap();
        assert_eq!(t.labels, vec![1, 0]);
        assert_eq!(t.rows[0], vec![0.5, 0.25]);
        assert_eq!(t.feature_names, vec!["f1", "f2"]);
    }

    #[test]
    fn missing_rows_are_dropped_and_counted() {
        let t = read_csv(
            "a,class\n1,x\n?,y\n,x\n4,y\n".as_bytes(),
            &CsvSchema::default(),
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dropped_missing, 2);
    }

    #[test]
    fn rejects_bad_input() {
        let s = CsvSchema::default();
        assert!(matches!(
            read_csv("a,class\n1,x\nabc,y\n".as_bytes(), &s),
            Err(HarnessError::NonNumeric { row: 2, .. })
        ));
        assert!(matches!(
            read_csv("a,class\n1,x\n1,2,x\n3,y\n".as_bytes(), &s),
            Err(HarnessError::Malformed { bad: 1, total: 3 })
        ));
        let lax = CsvSchema {
            max_malformed_fraction: 0.5,
            ..s.clone()
        };
        assert_eq!(
            read_csv("a,class\n1,x\n1,2,x\n3,y\n".as_bytes(), &lax)
                .unwrap()
                .malformed,
            1
        );
        assert!(read_csv("a,label\n1,x\n".as_bytes(), &s).is_err());
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let t = read_csv(
            "a,class\n1,10\n2,9\n3,2\n".as_bytes(),
            &CsvSchema::default(),
        )
        .unwrap();
        assert_eq!(t.class_names, vec!["2", "9", "10"]);
        assert_eq!(t.labels, vec![2, 1, 0]);
    }

    #[test]
    fn round_trip() {
        let rows = "a,b,class\n0.1,1e-300,p\n-7.25,0.30000000000000004,q\n";
        let t = read_csv(rows.as_bytes(), &CsvSchema::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice(), &CsvSchema::default()).unwrap(), t);
    }

    #[test]
    fn constant_column_scales_to_zero() {
        let s = MinMaxScaler::fit(&[vec![3.0, 1.0], vec![3.0, 2.0]]).unwrap();
        assert_eq!(s.transform(&[3.0, 1.5]), vec![0.0, 0.5]);
        assert_eq!(s.transform(&[9.0, 5.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn split_is_stratified_seeded_and_disjoint() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i % 4 == 0)).collect();
        let a = stratified_split(&labels, 0.2, 7).unwrap();
        assert_eq!(a, stratified_split(&labels, 0.2, 7).unwrap());
        assert_ne!(a, stratified_split(&labels, 0.2, 8).unwrap());
        assert_eq!(a.test.len(), 20);
        assert_eq!(a.test.iter().filter(|&&i| labels[i] == 1).count(), 5);
        let mut all: Vec<usize> = a.train.iter().chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn scaling_uses_training_rows_only() {
        let table = Table {
            feature_names: vec!["a".into()],
            class_names: vec!["x".into()],
            rows: vec![vec![0.0], vec![10.0], vec![100.0]],
            labels: vec![0, 0, 0],
            dropped_missing: 0,
            malformed: 0,
        };
        let p = prepare(
            &table,
            &SplitIndices {
                train: vec![0, 1],
                test: vec![2],
            },
        )
        .unwrap();
        assert_eq!(p.scaler.max, vec![10.0]);
        assert_eq!(p.train.tuples()[1].features, vec![1.0]);
        assert_eq!(p.test.tuples()[0].features, vec![1.0]);
    }

    #[test]
    fn folds_partition_rows() {
        let labels: Vec<usize> = (0..23).map(|i| i % 3).collect();
        let f = stratified_folds(&labels, 5, 1);
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(f.iter().all(|x| x.len() == 4 || x.len() == 5));
    }
}
