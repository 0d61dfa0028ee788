//! Four-party outsourced classification: data owners and queriers encrypt,
//! the data host stores ciphertexts and drives every exchange, and the CSP
//! holds the secret key but only ever sees masked values.

pub mod audit;
pub mod messages;
pub mod parties;
pub mod session;
pub mod transcript;
pub mod transport;

use crate::codec::CodecError;
use crate::fixedpoint::FixedPointError;
use crate::garble::{GarbleError, OtError};
use crate::paillier::PaillierError;
use thiserror::Error;

pub use audit::{audit_csp_view, audit_host_view, PlainTruth};
pub use messages::{GcSetup, Message, MessageKind};
pub use parties::{
    encrypt_query, random_invertible_matrix, submit_tuple, AuditPhase, Csp, CspAuditEntry,
    DataHost, EncryptedTuple, HostOptions, MaskRecord,
};
pub use session::{run_session, ProtocolConfig, Session, SessionOptions};
pub use transcript::{Role, Transcript, TranscriptEntry};
pub use transport::{read_frame, write_frame, Link, TransportKind};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    Garble(#[from] GarbleError),
    #[error(transparent)]
    Ot(#[from] OtError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("class label {0} out of range")]
    Label(usize),
    #[error("the data host holds no tuples")]
    EmptyStore,
    #[error("store is full ({0} tuples)")]
    Capacity(u64),
    #[error("garbled-circuit width {width} does not fit a {modulus_bits}-bit modulus")]
    Headroom { width: u32, modulus_bits: u32 },
    #[error("expected {expected:?}, got {found:?}")]
    UnexpectedMessage {
        expected: MessageKind,
        found: MessageKind,
    },
    #[error("message out of order: {0}")]
    OutOfOrder(&'static str),
    #[error("unknown message tag {0:#04x}")]
    UnknownTag(u8),
    #[error("malformed message: {0}")]
    Malformed(&'static str),
    #[error("peer failure: {0}")]
    Remote(String),
    #[error("config: {0}")]
    Config(String),
}

impl ProtocolError {
    pub(crate) fn unexpected(expected: MessageKind, found: &Message) -> Self {
        if let Message::Failure(reason) = found {
            return ProtocolError::Remote(reason.clone());
        }
        ProtocolError::UnexpectedMessage {
            expected,
            found: found.kind(),
        }
    }
}
