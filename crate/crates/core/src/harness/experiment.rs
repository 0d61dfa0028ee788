//! Experiment configuration and the k-NN versus KDE comparison.

use super::data::{load_csv, prepare, stratified_split, CsvSchema, LabelColumn, Prepared, Table};
use super::eval::{
    accuracy_pct, agreement_pct, cross_validate, Algorithm, CvResult, DistanceMatrix, Hyper,
};
use super::HarnessError;
use crate::kde::Dataset;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn default_test_fraction() -> f64 {
    0.2
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Knn, Algorithm::Kde]
}

fn default_k_grid() -> Vec<usize> {
    vec![1, 3, 5, 7, 9, 11, 15, 21]
}

fn default_sigma_grid() -> Vec<f64> {
    vec![
        0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0,
    ]
}

fn default_folds() -> usize {
    5
}

fn default_key_bits() -> u32 {
    3072
}

fn default_queries() -> usize {
    1
}

/// Where the rows come from and how to parse them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    #[serde(default)]
    pub schema: CsvSchema,
}

/// Optional encrypted replay of some test queries through the full protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    #[serde(default = "default_key_bits")]
    pub key_bits: u32,
    /// Number of test queries sent through the protocol.
    #[serde(default = "default_queries")]
    pub queries: usize,
    #[serde(default)]
    pub s: Option<u32>,
    #[serde(default)]
    pub f: Option<u32>,
    #[serde(default)]
    pub f_corr: Option<u32>,
    #[serde(default)]
    pub lambda_gc: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Fixed `k`; cross-validated over `k_grid` when absent.
    #[serde(default)]
    pub k: Option<usize>,
    /// Fixed `sigma`; cross-validated over `sigma_grid` when absent.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<usize>,
    #[serde(default = "default_sigma_grid")]
    pub sigma_grid: Vec<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub seed: u64,
    /// Per-class multipliers on the KDE sums.
    #[serde(default)]
    pub class_weights: Option<Vec<f64>>,
    /// Caps on the train and test sides after splitting (stratified
    /// prefix of the seeded order).
    #[serde(default)]
    pub train_limit: Option<usize>,
    #[serde(default)]
    pub test_limit: Option<usize>,
    #[serde(default)]
    pub protocol: Option<ProtocolRun>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec, seed: u64) -> Self {
        Self {
            dataset,
            test_fraction: default_test_fraction(),
            algorithms: default_algorithms(),
            k: None,
            sigma: None,
            k_grid: default_k_grid(),
            sigma_grid: default_sigma_grid(),
            folds: default_folds(),
            seed,
            class_weights: None,
            train_limit: None,
            test_limit: None,
            protocol: None,
            output: None,
        }
    }

    /// Built-in settings for the four shipped datasets under `data_dir`.
    /// MNIST uses fixed `k = 5, sigma = 0.25` and a 2000/500 subset; the
    /// others cross-validate.
    pub fn preset(name: &str, data_dir: &Path, seed: u64) -> Result<Self, HarnessError> {
        let spec = |file: &str| DatasetSpec {
            name: name.to_string(),
            path: data_dir.join(file),
            schema: CsvSchema {
                label: LabelColumn::Name(if name == "mnist" { "label" } else { "class" }.into()),
                ..CsvSchema::default()
            },
        };
        Ok(match name {
            "cancer1" => Self::new(spec("cancer1.csv"), seed),
            "cancer2" => Self::new(spec("cancer2.csv"), seed),
            "diabetes" => Self::new(spec("diabetes.csv"), seed),
            "mnist" => Self {
                k: Some(5),
                sigma: Some(0.25),
                train_limit: Some(2000),
                test_limit: Some(500),
                ..Self::new(spec("mnist_subset.csv"), seed)
            },
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown dataset preset {other:?}"
                )))
            }
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(
            &std::fs::read_to_string(path).map_err(|e| HarnessError::Io(e.to_string()))?,
        )
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.algorithms.is_empty() {
            return Err(HarnessError::Config("no algorithms selected".into()));
        }
        let uses = |a| self.algorithms.contains(&a);
        if uses(Algorithm::Knn) && self.k.is_none() && self.k_grid.is_empty() {
            return Err(HarnessError::Config("k grid is empty".into()));
        }
        if uses(Algorithm::Kde) && self.sigma.is_none() && self.sigma_grid.is_empty() {
            return Err(HarnessError::Config("sigma grid is empty".into()));
        }
        if self.folds < 2 {
            return Err(HarnessError::Config("need at least 2 folds".into()));
        }
        Ok(())
    }
}

/// One classifier's result on the test side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgoResult {
    pub algo: Algorithm,
    pub params: Hyper,
    pub accuracy_pct: f64,
    /// Agreement with the other classifier of the report (100 if alone).
    pub agreement_pct: f64,
    pub cv: Option<CvResult>,
    pub predictions: Vec<usize>,
}

/// Encrypted replay outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolCheck {
    pub queries: usize,
    pub matches: usize,
    pub seconds_per_query: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub dataset: String,
    pub n_train: usize,
    pub n_test: usize,
    pub dropped_missing: usize,
    pub results: Vec<AlgoResult>,
    pub seconds: f64,
    pub protocol: Option<ProtocolCheck>,
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    dataset: &'a str,
    algo: String,
    accuracy_pct: String,
    agreement_pct: String,
    n_train: usize,
    n_test: usize,
    params: String,
}

impl ComparisonReport {
    pub fn result(&self, algo: Algorithm) -> Option<&AlgoResult> {
        self.results.iter().find(|r| r.algo == algo)
    }

    pub fn agreement_pct(&self) -> f64 {
        self.results.first().map_or(100.0, |r| r.agreement_pct)
    }

    /// Machine-readable rows; excludes timings so the output is a pure
    /// function of data, config and seed.
    pub fn write_csv<W: Write>(
        reports: &[ComparisonReport],
        out: W,
        header: bool,
    ) -> Result<(), HarnessError> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(header)
            .from_writer(out);
        for rep in reports {
            for r in &rep.results {
                w.serialize(CsvRow {
                    dataset: &rep.dataset,
                    algo: r.algo.to_string(),
                    accuracy_pct: format!("{:.2}", r.accuracy_pct),
                    agreement_pct: format!("{:.2}", r.agreement_pct),
                    n_train: rep.n_train,
                    n_test: rep.n_test,
                    params: r.params.to_string(),
                })
                .map_err(|e| HarnessError::Csv(e.to_string()))?;
            }
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))
    }

    pub fn table(reports: &[ComparisonReport]) -> String {
        let mut s = format!(
            "{:<10} {:<5} {:>10} {:>11} {:>8} {:>7}  {}\n",
            "dataset", "algo", "accuracy%", "agreement%", "n_train", "n_test", "params"
        );
        for rep in reports {
            for r in &rep.results {
                s += &format!(
                    "{:<10} {:<5} {:>10.2} {:>11.2} {:>8} {:>7}  {}\n",
                    rep.dataset,
                    r.algo,
                    r.accuracy_pct,
                    r.agreement_pct,
                    rep.n_train,
                    rep.n_test,
                    r.params
                );
            }
        }
        s
    }
}

fn truncate_stratified(data: &Dataset, limit: Option<usize>) -> Result<Dataset, HarnessError> {
    let Some(limit) = limit else {
        return Ok(data.clone());
    };
    if limit >= data.len() {
        return Ok(data.clone());
    }
    // Keep each class's share by taking the first rows of each class.
    let counts = data.class_counts();
    let mut quota: Vec<usize> = counts
        .iter()
        .map(|&c| (c as f64 * limit as f64 / data.len() as f64).floor() as usize)
        .collect();
    let mut left = limit - quota.iter().sum::<usize>();
    for (j, q) in quota.iter_mut().enumerate() {
        if left == 0 {
            break;
        }
        if *q < counts[j] {
            *q += 1;
            left -= 1;
        }
    }
    let mut out = Dataset::new(data.m(), data.c())?;
    let mut taken = vec![0; data.c()];
    for t in data.tuples() {
        if taken[t.label] < quota[t.label] {
            taken[t.label] += 1;
            out.push(t.clone())?;
        }
    }
    Ok(out)
}

/// Loads, splits and scales the configured dataset.
pub fn prepare_experiment(config: &ExperimentConfig) -> Result<(Table, Prepared), HarnessError> {
    let table = load_csv(&config.dataset.path, &config.dataset.schema)?;
    let split = stratified_split(&table.labels, config.test_fraction, config.seed)?;
    let mut prepared = prepare(&table, &split)?;
    prepared.train = truncate_stratified(&prepared.train, config.train_limit)?;
    prepared.test = truncate_stratified(&prepared.test, config.test_limit)?;
    if let Some(w) = &config.class_weights {
        prepared.train = prepared.train.with_class_weights(w.clone())?;
    }
    Ok((table, prepared))
}

/// Trains both classifiers on the same split and scores them on the same
/// test rows.
pub fn compare(config: &ExperimentConfig) -> Result<ComparisonReport, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    let (table, prepared) = prepare_experiment(config)?;
    let mut report = compare_prepared(&config.dataset.name, &prepared, config)?;
    report.dropped_missing = table.dropped_missing;
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// [`compare`] on already prepared data.
pub fn compare_prepared(
    name: &str,
    prepared: &Prepared,
    config: &ExperimentConfig,
) -> Result<ComparisonReport, HarnessError> {
    let start = Instant::now();
    let (train, test) = (&prepared.train, &prepared.test);
    let dm = DistanceMatrix::between(train, test);
    let mut results = Vec::new();
    for &algo in &config.algorithms {
        let (params, cv) = match (algo, config.k, config.sigma) {
            (Algorithm::Knn, Some(k), _) => (Hyper::K(k), None),
            (Algorithm::Kde, _, Some(s)) => (Hyper::Sigma(s), None),
            (Algorithm::Knn, None, _) => {
                let grid: Vec<Hyper> = config.k_grid.iter().map(|&k| Hyper::K(k)).collect();
                let cv = cross_validate(train, &grid, config.folds, config.seed)?;
                (cv.best, Some(cv))
            }
            (Algorithm::Kde, _, None) => {
                let grid: Vec<Hyper> = config.sigma_grid.iter().map(|&s| Hyper::Sigma(s)).collect();
                let cv = cross_validate(train, &grid, config.folds, config.seed)?;
                (cv.best, Some(cv))
            }
        };
        let predictions = dm.predict(train, params)?;
        results.push(AlgoResult {
            algo,
            params,
            accuracy_pct: accuracy_pct(&predictions, test),
            agreement_pct: 100.0,
            cv,
            predictions,
        });
    }
    if results.len() >= 2 {
        let a = agreement_pct(&results[0].predictions, &results[1].predictions);
        for r in &mut results {
            r.agreement_pct = a;
        }
    }
    let protocol = match &config.protocol {
        Some(run) => {
            let sigma = results
                .iter()
                .find_map(|r| match r.params {
                    Hyper::Sigma(s) => Some(s),
                    _ => None,
                })
                .ok_or_else(|| {
                    HarnessError::Config("protocol replay needs the kde algorithm".into())
                })?;
            Some(super::bench::protocol_replay(
                train,
                test,
                sigma,
                run,
                config.seed,
            )?)
        }
        None => None,
    };
    Ok(ComparisonReport {
        dataset: name.to_string(),
        n_train: train.len(),
        n_test: test.len(),
        dropped_missing: 0,
        results,
        seconds: start.elapsed().as_secs_f64(),
        protocol,
    })
}
