//! Append-only, party-attributed record of every protocol message.

use super::messages::MessageKind;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    DataOwner(u64),
    Querier,
    DataHost,
    Csp,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::DataOwner(id) => write!(f, "owner#{id}"),
            Role::Querier => f.write_str("querier"),
            Role::DataHost => f.write_str("data-host"),
            Role::Csp => f.write_str("csp"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub sender: Role,
    pub receiver: Role,
    pub kind: MessageKind,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, sender: Role, receiver: Role, kind: MessageKind, payload: Vec<u8>) {
        self.entries.push(TranscriptEntry {
            sender,
            receiver,
            kind,
            payload,
        });
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn received_by(&self, role: Role) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries.iter().filter(move |e| e.receiver == role)
    }

    pub fn total_bytes(&self) -> usize {
        self.entries.iter().map(|e| e.payload.len()).sum()
    }
}
