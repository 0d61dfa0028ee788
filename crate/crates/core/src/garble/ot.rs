//! Batched 1-of-2 oblivious transfer.
//!
//! The default is the Chou-Orlandi "simplest OT" over Ristretto:
//!
//! ```text
//! sender:   a <- Z_l,  A = aG                       -> A
//! receiver: b <- Z_l,  B = bG (choice 0) or A + bG  -> B
//! sender:   k0 = H(i, A, B, aB), k1 = H(i, A, B, a(B - A))
//!           e0 = m0 xor PRG(k0), e1 = m1 xor PRG(k1) -> (e0, e1)
//! receiver: k = H(i, A, B, bA), m_choice = e_choice xor PRG(k)
//! ```
//!
//! `OtKind::InsecureStub` sends the choice bits in the clear. It exists so
//! tests can exercise message flow cheaply and must never be used for privacy.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OtError {
    #[error("point encoding is not a valid group element")]
    InvalidPoint,
    #[error("expected {expected} transfers, got {found}")]
    Count { expected: usize, found: usize },
    #[error("payload pair {0} has unequal lengths")]
    PayloadLength(usize),
    #[error("malformed OT message")]
    Malformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtKind {
    #[default]
    ChouOrlandi,
    /// Not oblivious: the receiver reveals its choices.
    InsecureStub,
}

impl OtKind {
    pub fn to_byte(self) -> u8 {
        match self {
            OtKind::ChouOrlandi => 0,
            OtKind::InsecureStub => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self, OtError> {
        match b {
            0 => Ok(OtKind::ChouOrlandi),
            1 => Ok(OtKind::InsecureStub),
            _ => Err(OtError::Malformed),
        }
    }
}

fn decode_point(bytes: &[u8]) -> Result<RistrettoPoint, OtError> {
    let arr: [u8; 32] = bytes.try_into().map_err(|_| OtError::InvalidPoint)?;
    CompressedRistretto(arr)
        .decompress()
        .ok_or(OtError::InvalidPoint)
}

fn derive_key(
    index: usize,
    a: &RistrettoPoint,
    b: &RistrettoPoint,
    shared: &RistrettoPoint,
) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"ppkde-ot");
    h.update((index as u64).to_be_bytes());
    h.update(a.compress().as_bytes());
    h.update(b.compress().as_bytes());
    h.update(shared.compress().as_bytes());
    h.finalize().into()
}

/// `data xor SHA256(key || 0) || SHA256(key || 1) || ...`.
fn apply_stream(key: &[u8; 32], data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    for (block, chunk) in data.chunks(32).enumerate() {
        let mut h = Sha256::new();
        h.update(key);
        h.update((block as u64).to_be_bytes());
        let pad = h.finalize();
        out.extend(chunk.iter().zip(pad.iter()).map(|(d, p)| d ^ p));
    }
    out
}

pub struct OtSender {
    kind: OtKind,
    a: Scalar,
    big_a: RistrettoPoint,
    a_big_a: RistrettoPoint,
}

impl OtSender {
    /// Returns the sender state and its setup message.
    pub fn new<R: RngCore + CryptoRng + ?Sized>(kind: OtKind, rng: &mut R) -> (Self, Vec<u8>) {
        let mut wide = [0u8; 64];
        rng.fill_bytes(&mut wide);
        let a = Scalar::from_bytes_mod_order_wide(&wide);
        let big_a = &a * RISTRETTO_BASEPOINT_TABLE;
        let setup = match kind {
            OtKind::ChouOrlandi => big_a.compress().to_bytes().to_vec(),
            OtKind::InsecureStub => Vec::new(),
        };
        (
            Self {
                kind,
                a,
                big_a,
                a_big_a: a * big_a,
            },
            setup,
        )
    }

    /// One response per receiver message: `(e0, e1)`, or just the chosen
    /// payload for the stub.
    pub fn respond(
        &self,
        receiver_msgs: &[Vec<u8>],
        payloads: &[(Vec<u8>, Vec<u8>)],
    ) -> Result<Vec<(Vec<u8>, Vec<u8>)>, OtError> {
        if receiver_msgs.len() != payloads.len() {
            return Err(OtError::Count {
                expected: payloads.len(),
                found: receiver_msgs.len(),
            });
        }
        receiver_msgs
            .iter()
            .zip(payloads)
            .enumerate()
            .map(|(i, (msg, (m0, m1)))| {
                if m0.len() != m1.len() {
                    return Err(OtError::PayloadLength(i));
                }
                match self.kind {
                    OtKind::ChouOrlandi => {
                        let big_b = decode_point(msg)?;
                        let ab = self.a * big_b;
                        let k0 = derive_key(i, &self.big_a, &big_b, &ab);
                        let k1 = derive_key(i, &self.big_a, &big_b, &(ab - self.a_big_a));
                        Ok((apply_stream(&k0, m0), apply_stream(&k1, m1)))
                    }
                    OtKind::InsecureStub => match msg.as_slice() {
                        [0] => Ok((m0.clone(), Vec::new())),
                        [1] => Ok((Vec::new(), m1.clone())),
                        _ => Err(OtError::Malformed),
                    },
                }
            })
            .collect()
    }
}

pub struct OtReceiver {
    kind: OtKind,
    choices: Vec<bool>,
    scalars: Vec<Scalar>,
    big_a: Option<RistrettoPoint>,
    big_bs: Vec<RistrettoPoint>,
}

impl OtReceiver {
    /// Returns the receiver state and one message per choice.
    pub fn new<R: RngCore + CryptoRng + ?Sized>(
        kind: OtKind,
        setup: &[u8],
        choices: &[bool],
        rng: &mut R,
    ) -> Result<(Self, Vec<Vec<u8>>), OtError> {
        match kind {
            OtKind::ChouOrlandi => {
                let big_a = decode_point(setup)?;
                let mut scalars = Vec::with_capacity(choices.len());
                let mut big_bs = Vec::with_capacity(choices.len());
                let mut msgs = Vec::with_capacity(choices.len());
                for &c in choices {
                    let mut wide = [0u8; 64];
                    rng.fill_bytes(&mut wide);
                    let b = Scalar::from_bytes_mod_order_wide(&wide);
                    let bg = &b * RISTRETTO_BASEPOINT_TABLE;
                    let big_b = if c { big_a + bg } else { bg };
                    msgs.push(big_b.compress().to_bytes().to_vec());
                    scalars.push(b);
                    big_bs.push(big_b);
                }
                Ok((
                    Self {
                        kind,
                        choices: choices.to_vec(),
                        scalars,
                        big_a: Some(big_a),
                        big_bs,
                    },
                    msgs,
                ))
            }
            OtKind::InsecureStub => {
                if !setup.is_empty() {
                    return Err(OtError::Malformed);
                }
                let msgs = choices.iter().map(|c| vec![*c as u8]).collect();
                Ok((
                    Self {
                        kind,
                        choices: choices.to_vec(),
                        scalars: Vec::new(),
                        big_a: None,
                        big_bs: Vec::new(),
                    },
                    msgs,
                ))
            }
        }
    }

    pub fn finish(&self, responses: &[(Vec<u8>, Vec<u8>)]) -> Result<Vec<Vec<u8>>, OtError> {
        if responses.len() != self.choices.len() {
            return Err(OtError::Count {
                expected: self.choices.len(),
                found: responses.len(),
            });
        }
        responses
            .iter()
            .enumerate()
            .map(|(i, (e0, e1))| {
                let chosen = if self.choices[i] { e1 } else { e0 };
                match self.kind {
                    OtKind::ChouOrlandi => {
                        let big_a = self.big_a.expect("set for this kind");
                        let shared = self.scalars[i] * big_a;
                        let k = derive_key(i, &big_a, &self.big_bs[i], &shared);
                        Ok(apply_stream(&k, chosen))
                    }
                    OtKind::InsecureStub => Ok(chosen.clone()),
                }
            })
            .collect()
    }
}

/// Every message of one single-transfer run, for audits.
#[derive(Debug, Clone)]
pub struct OtTranscript {
    pub setup: Vec<u8>,
    pub receiver_msg: Vec<u8>,
    pub sender_msg: (Vec<u8>, Vec<u8>),
}

/// Runs one transfer end to end and returns `m_b` with the exchanged messages.
pub fn ot_transfer<R: RngCore + CryptoRng + ?Sized>(
    kind: OtKind,
    m0: &[u8],
    m1: &[u8],
    choice: bool,
    rng: &mut R,
) -> Result<(Vec<u8>, OtTranscript), OtError> {
    let (sender, setup) = OtSender::new(kind, rng);
    let (receiver, msgs) = OtReceiver::new(kind, &setup, &[choice], rng)?;
    let responses = sender.respond(&msgs, &[(m0.to_vec(), m1.to_vec())])?;
    let out = receiver.finish(&responses)?.pop().unwrap();
    Ok((
        out,
        OtTranscript {
            setup,
            receiver_msg: msgs[0].clone(),
            sender_msg: responses[0].clone(),
        },
    ))
}

/// Largest absolute two-proportion z statistic over bit positions, comparing
/// bit frequencies of two equal-length sample sets. Bit positions with zero
/// pooled variance (constant in both sets) contribute zero.
pub fn max_bit_z_score(a: &[Vec<u8>], b: &[Vec<u8>]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let bits = a[0].len() * 8;
    let count = |set: &[Vec<u8>], bit: usize| {
        set.iter()
            .filter(|s| (s[bit / 8] >> (bit % 8)) & 1 == 1)
            .count() as f64
    };
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut worst: f64 = 0.0;
    for bit in 0..bits {
        let (pa, pb) = (count(a, bit) / na, count(b, bit) / nb);
        let pooled = (pa * na + pb * nb) / (na + nb);
        let var = pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb);
        if var > 0.0 {
            worst = worst.max(((pa - pb) / var.sqrt()).abs());
        } else if pa != pb {
            return f64::INFINITY;
        }
    }
    worst
}
