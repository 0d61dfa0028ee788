//! Mechanical leakage checks over one query's transcript, the CSP's
//! decryption log and the data host's masks.

use super::messages::{Message, MessageKind};
use super::parties::{AuditPhase, CspAuditEntry, MaskRecord};
use super::transcript::{Role, Transcript};
use crate::fixedpoint::FixedPointParams;
use crate::paillier::{Ciphertext, PublicKey};
use rug::ops::RemRounding;
use rug::Integer;
use std::cmp::Ordering;

/// Plaintext ground truth for one query, known only to the test harness.
#[derive(Debug, Clone)]
pub struct PlainTruth {
    /// Quantized `q_j - x_ij`, per stored tuple and dimension.
    pub diffs: Vec<Vec<i64>>,
    /// Unmasked class sums `A_k`.
    pub scores: Vec<Integer>,
    /// Encrypted query components.
    pub query: Vec<Ciphertext>,
}

impl PlainTruth {
    pub fn squared_distances(&self) -> Vec<Integer> {
        self.diffs
            .iter()
            .map(|d| d.iter().map(|v| Integer::from(*v) * *v).sum())
            .collect()
    }
}

fn ciphertext_ok(pk: &PublicKey, c: &Ciphertext) -> bool {
    // A genuine ciphertext is a unit below n^2 and, with overwhelming
    // probability, not below n.
    c.key_id() == pk.id()
        && c.value() > pk.n()
        && c.value() < pk.n_squared()
        && Integer::from(c.value().gcd_ref(pk.n())) == 1
}

/// Everything the data host receives must be ciphertexts under the session
/// key or garbled-circuit material. Returns one line per violation.
pub fn audit_host_view(transcript: &Transcript, pk: &PublicKey) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, e) in transcript.received_by(Role::DataHost).enumerate() {
        let msg = match Message::decode(&e.payload, pk) {
            Ok(m) => m,
            Err(err) => {
                bad.push(format!("entry {i}: undecodable ({err})"));
                continue;
            }
        };
        let cts: &[Ciphertext] = match &msg {
            Message::SubmitTuple {
                features, class, ..
            } => {
                check_all(pk, features, i, &mut bad);
                class
            }
            Message::Query(c) | Message::SqDistSquared(c) | Message::ClassScaled(c) => c,
            Message::KernelAck | Message::OtReceiverMsg(_) | Message::GarbledOutput(_) => &[],
            other => {
                bad.push(format!("entry {i}: data host received {:?}", other.kind()));
                &[]
            }
        };
        check_all(pk, cts, i, &mut bad);
    }
    bad
}

fn check_all(pk: &PublicKey, cts: &[Ciphertext], entry: usize, bad: &mut Vec<String>) {
    for (j, c) in cts.iter().enumerate() {
        if !ciphertext_ok(pk, c) {
            bad.push(format!("entry {entry}: payload {j} is not a ciphertext"));
        }
    }
}

/// Every CSP plaintext must equal truth plus a mask from its declared domain,
/// no kernel-phase plaintext may equal an unmasked distance unless its mask
/// is zero, and no query ciphertext may ever reach the CSP's decryptor.
pub fn audit_csp_view(
    log: &[CspAuditEntry],
    record: &MaskRecord,
    truth: &PlainTruth,
    params: &FixedPointParams,
    pk: &PublicKey,
) -> Vec<String> {
    let mut bad = Vec::new();
    let n = pk.n();
    let m = truth.diffs.first().map_or(0, |d| d.len());
    let dists = truth.squared_distances();
    let gc_bound = Integer::from(1) << record.gc_mask_bits;
    for e in log {
        for q in &truth.query {
            if q.value() == &e.ciphertext {
                bad.push(format!(
                    "{:?} {}: query component decrypted",
                    e.phase, e.index
                ));
            }
        }
        match e.phase {
            AuditPhase::SquaredDistance => {
                let (i, j) = (e.index / m.max(1), e.index % m.max(1));
                let (Some(mu), Some(d)) = (
                    record.sq_dist.get(i).and_then(|r| r.get(j)),
                    truth.diffs.get(i).and_then(|r| r.get(j)),
                ) else {
                    bad.push(format!("SquaredDistance {}: no mask recorded", e.index));
                    continue;
                };
                if mu >= n || mu.cmp0() == Ordering::Less {
                    bad.push(format!("SquaredDistance {}: mask outside Z_n", e.index));
                }
                let expect = (Integer::from(*d) + mu).rem_euc(n.clone());
                if expect != e.plaintext {
                    bad.push(format!(
                        "SquaredDistance {}: plaintext is not diff + mask",
                        e.index
                    ));
                }
            }
            AuditPhase::KernelDistance => {
                let (Some(mu), Some(d)) = (record.kernel.get(e.index), dists.get(e.index)) else {
                    bad.push(format!("KernelDistance {}: no mask recorded", e.index));
                    continue;
                };
                if mu >= params.mask_bound() || mu.cmp0() == Ordering::Less {
                    bad.push(format!("KernelDistance {}: mask outside [0, B)", e.index));
                }
                if Integer::from(d + mu) != e.plaintext {
                    bad.push(format!(
                        "KernelDistance {}: plaintext is not distance + mask",
                        e.index
                    ));
                }
                if mu.cmp0() != Ordering::Equal && dists.contains(&e.plaintext) {
                    bad.push(format!(
                        "KernelDistance {}: plaintext equals an unmasked distance",
                        e.index
                    ));
                }
            }
            AuditPhase::MaskedScore => {
                let (Some(mu), Some(a)) = (record.gc.get(e.index), truth.scores.get(e.index))
                else {
                    bad.push(format!("MaskedScore {}: no mask recorded", e.index));
                    continue;
                };
                if *mu >= gc_bound || mu.cmp0() == Ordering::Less {
                    bad.push(format!("MaskedScore {}: mask outside [0, 2^L)", e.index));
                }
                if Integer::from(a + mu) != e.plaintext {
                    bad.push(format!(
                        "MaskedScore {}: plaintext is not score + mask",
                        e.index
                    ));
                }
            }
        }
    }
    bad
}

/// Kinds the CSP may legitimately receive.
pub fn csp_inbound_kinds() -> &'static [MessageKind] {
    &[
        MessageKind::SqDistMasked,
        MessageKind::KernelMasked,
        MessageKind::ClassMasked,
        MessageKind::GcSetup,
        MessageKind::OtSenderMsg,
        MessageKind::Shutdown,
    ]
}
