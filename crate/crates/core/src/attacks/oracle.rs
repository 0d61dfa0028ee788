//! Plaintext classification services an attacker can talk to with only the
//! data-owner and querier roles: insert tuples, submit queries, read outputs.

use super::AttackError;
use crate::kde::{
    kde_classify, knn_classify_all, knn_classify_majority, knn_neighbors, DataTuple, Dataset,
};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    /// Sorted labels of all k nearest neighbors.
    ReturnAllLabels,
    /// Majority label only.
    MajorityOnly,
    /// Labels plus plaintext distances: the broken construction.
    WithPlaintextDistance,
    /// Gaussian KDE argmax (not k-NN).
    KdeArgmax,
}

/// Handle to an attacker-inserted tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TupleHandle(u64);

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAnswer {
    pub labels: Vec<usize>,
    /// Only in [`OracleMode::WithPlaintextDistance`], nearest first.
    pub distances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub queries: u64,
    pub inserts: u64,
    pub deletes: u64,
}

/// What the attacker may do. Hidden coordinates are never reachable through
/// this interface.
pub trait ClassOracle {
    fn mode(&self) -> OracleMode;
    /// Public system parameter; 0 for KDE.
    fn k(&self) -> usize;
    fn classes(&self) -> usize;
    fn dim(&self) -> usize;
    fn deletion_allowed(&self) -> bool;
    fn counters(&self) -> Counters;
    fn insert(&mut self, tuple: DataTuple) -> Result<TupleHandle, AttackError>;
    fn delete(&mut self, handle: TupleHandle) -> Result<(), AttackError>;
    fn query(&mut self, q: &[f64]) -> Result<OracleAnswer, AttackError>;
}

/// Shared storage: hidden tuples first, attacker tuples after, so ties go to
/// hidden data.
#[derive(Debug, Clone)]
struct Store {
    hidden: Dataset,
    inserted: Vec<(TupleHandle, DataTuple)>,
    next_handle: u64,
    deletion_allowed: bool,
    counters: Counters,
}

impl Store {
    fn new(hidden: Dataset, deletion_allowed: bool) -> Self {
        Self {
            hidden,
            inserted: Vec::new(),
            next_handle: 0,
            deletion_allowed,
            counters: Counters::default(),
        }
    }

    fn insert(&mut self, tuple: DataTuple) -> Result<TupleHandle, AttackError> {
        // Validate shape against the hidden dataset.
        let mut probe = Dataset::new(self.hidden.m(), self.hidden.c())?;
        probe.push(tuple.clone())?;
        let h = TupleHandle(self.next_handle);
        self.next_handle += 1;
        self.inserted.push((h, tuple));
        self.counters.inserts += 1;
        Ok(h)
    }

    fn delete(&mut self, handle: TupleHandle) -> Result<(), AttackError> {
        if !self.deletion_allowed {
            return Err(AttackError::DeletionNotAllowed);
        }
        let pos = self
            .inserted
            .iter()
            .position(|(h, _)| *h == handle)
            .ok_or(AttackError::UnknownHandle)?;
        self.inserted.remove(pos);
        self.counters.deletes += 1;
        Ok(())
    }

    fn current(&self) -> Dataset {
        let mut all = self.hidden.clone();
        for (_, t) in &self.inserted {
            all.push(t.clone()).expect("validated on insert");
        }
        all
    }
}

#[derive(Debug, Clone)]
pub struct KnnOracle {
    store: Store,
    mode: OracleMode,
    k: usize,
}

impl KnnOracle {
    pub fn new(
        hidden: Dataset,
        mode: OracleMode,
        k: usize,
        deletion_allowed: bool,
    ) -> Result<Self, AttackError> {
        if mode == OracleMode::KdeArgmax {
            return Err(AttackError::Unsupported(
                "k-NN oracle cannot run in KDE mode",
            ));
        }
        if k == 0 {
            return Err(AttackError::Unsupported("k must be positive"));
        }
        Ok(Self {
            store: Store::new(hidden, deletion_allowed),
            mode,
            k,
        })
    }
}

impl ClassOracle for KnnOracle {
    fn mode(&self) -> OracleMode {
        self.mode
    }

    fn k(&self) -> usize {
        self.k
    }

    fn classes(&self) -> usize {
        self.store.hidden.c()
    }

    fn dim(&self) -> usize {
        self.store.hidden.m()
    }

    fn deletion_allowed(&self) -> bool {
        self.store.deletion_allowed
    }

    fn counters(&self) -> Counters {
        self.store.counters
    }

    fn insert(&mut self, tuple: DataTuple) -> Result<TupleHandle, AttackError> {
        self.store.insert(tuple)
    }

    fn delete(&mut self, handle: TupleHandle) -> Result<(), AttackError> {
        self.store.delete(handle)
    }

    fn query(&mut self, q: &[f64]) -> Result<OracleAnswer, AttackError> {
        self.store.counters.queries += 1;
        let data = self.store.current();
        let k = self.k.min(data.len());
        Ok(match self.mode {
            OracleMode::ReturnAllLabels => OracleAnswer {
                labels: knn_classify_all(&data, q, k)?,
                distances: None,
            },
            OracleMode::MajorityOnly => OracleAnswer {
                labels: vec![knn_classify_majority(&data, q, k)?],
                distances: None,
            },
            OracleMode::WithPlaintextDistance => {
                let nn = knn_neighbors(&data, q, k)?;
                OracleAnswer {
                    labels: nn.iter().map(|(i, _)| data.tuples()[*i].label).collect(),
                    distances: Some(nn.iter().map(|(_, d)| *d).collect()),
                }
            }
            OracleMode::KdeArgmax => unreachable!("rejected in new"),
        })
    }
}

/// Gaussian KDE behind the same interface, for the no-signal comparison.
#[derive(Debug, Clone)]
pub struct KdeOracle {
    store: Store,
    sigma: f64,
}

impl KdeOracle {
    pub fn new(hidden: Dataset, sigma: f64, deletion_allowed: bool) -> Self {
        Self {
            store: Store::new(hidden, deletion_allowed),
            sigma,
        }
    }
}

impl ClassOracle for KdeOracle {
    fn mode(&self) -> OracleMode {
        OracleMode::KdeArgmax
    }

    fn k(&self) -> usize {
        0
    }

    fn classes(&self) -> usize {
        self.store.hidden.c()
    }

    fn dim(&self) -> usize {
        self.store.hidden.m()
    }

    fn deletion_allowed(&self) -> bool {
        self.store.deletion_allowed
    }

    fn counters(&self) -> Counters {
        self.store.counters
    }

    fn insert(&mut self, tuple: DataTuple) -> Result<TupleHandle, AttackError> {
        self.store.insert(tuple)
    }

    fn delete(&mut self, handle: TupleHandle) -> Result<(), AttackError> {
        self.store.delete(handle)
    }

    fn query(&mut self, q: &[f64]) -> Result<OracleAnswer, AttackError> {
        self.store.counters.queries += 1;
        Ok(OracleAnswer {
            labels: vec![kde_classify(&self.store.current(), q, self.sigma)?],
            distances: None,
        })
    }
}
