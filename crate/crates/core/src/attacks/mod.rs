//! Adaptive distance-learning attacks on exact k-NN by a party holding both
//! the data-owner and querier roles, and the checks showing Gaussian KDE does
//! not hand out the same signal.

pub mod channel;
pub mod geometry;
pub mod oracle;
pub mod search;

use crate::kde::KdeError;
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

pub use channel::{
    attack_score_channel, distance_from_kernel_delta, guess_search_transcript,
    recover_via_score_channel, validate_no_signal, ExposedKde, NoSignalReport,
};
pub use geometry::{triangulate, Triangulation};
pub use oracle::{
    ClassOracle, Counters, KdeOracle, KnnOracle, OracleAnswer, OracleMode, TupleHandle,
};
pub use search::{
    attack_distance_1nn, attack_recover_tuple, establish_view, reduce_knn_to_1nn,
    reduce_majority_to_1nn, AttackConfig, AttackResult, DistanceEstimate, NnView, ProbeRegion,
    SearchStrategy,
};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Kde(#[from] KdeError),
    #[error("the oracle does not allow deletion")]
    DeletionNotAllowed,
    #[error("unknown tuple handle")]
    UnknownHandle,
    #[error("target lies beyond the search bound {bound}")]
    BoundTooSmall { bound: f64 },
    #[error("no unshadowed query point found")]
    Exhausted,
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("radii share no common point (misfit {residual})")]
    InconsistentRadii { residual: f64 },
    #[error("probes disagree on the nearest neighbor (misfit {residual})")]
    InconsistentProbes { residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("score increase {0} is not a kernel value")]
    ScoreDelta(f64),
    #[error("report: {0}")]
    Report(String),
}

/// One line of an attack report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReportRow {
    pub mode: OracleMode,
    pub k: usize,
    pub deletion: bool,
    pub strategy: SearchStrategy,
    pub dim: usize,
    pub epsilon: f64,
    pub error: f64,
    pub queries: u64,
    pub inserts: u64,
    pub success: bool,
}

pub fn write_attack_report<W: Write>(rows: &[AttackReportRow], out: W) -> Result<(), AttackError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| AttackError::Report(e.to_string()))?;
    }
    w.flush().map_err(|e| AttackError::Report(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_has_a_header_and_one_line_per_row() {
        let row = AttackReportRow {
            mode: OracleMode::MajorityOnly,
            k: 3,
            deletion: true,
            strategy: SearchStrategy::Binary,
            dim: 2,
            epsilon: 1e-3,
            error: 2e-4,
            queries: 30,
            inserts: 33,
            success: true,
        };
        let mut buf = Vec::new();
        write_attack_report(&[row.clone(), row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("mode,k,deletion,strategy"));
        assert!(lines[1].starts_with("majority_only,3,true,binary"));
    }
}
