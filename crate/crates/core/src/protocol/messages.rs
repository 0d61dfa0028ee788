//! Wire messages. Every message is one tagged sequence (see [`crate::codec`]);
//! ciphertexts travel as their fixed-width value bytes (twice the modulus
//! length) under the session key.
//!
//! | tag  | kind            | payloads                                              |
//! |------|-----------------|-------------------------------------------------------|
//! | 0x01 | SubmitTuple     | owner (u64), m (u32), c (u32), m feature cts, c class cts |
//! | 0x02 | Query           | m cts                                                 |
//! | 0x10 | SqDistMasked    | n*m cts                                               |
//! | 0x11 | SqDistSquared   | n*m cts                                               |
//! | 0x12 | KernelMasked    | n cts                                                 |
//! | 0x13 | KernelAck       | none                                                  |
//! | 0x14 | ClassMasked     | c (u32), n*c cts                                      |
//! | 0x15 | ClassScaled     | n*c cts                                               |
//! | 0x16 | GcSetup         | header, c cts, generator labels, OT setup, circuit... |
//! | 0x17 | OtReceiverMsg   | one message per evaluator input bit                   |
//! | 0x18 | OtSenderMsg     | e0, e1 per evaluator input bit                        |
//! | 0x19 | GarbledOutput   | one 17-byte label per output bit                      |
//! | 0x20 | ClassResult     | class (u32)                                           |
//! | 0x7e | Shutdown        | none                                                  |
//! | 0x7f | Failure         | UTF-8 reason                                          |

use super::ProtocolError;
use crate::codec::{self, CodecError, Tagged};
use crate::garble::{GarbledCircuit, OtKind, WireLabel};
use crate::paillier::{Ciphertext, PublicKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    SubmitTuple,
    Query,
    SqDistMasked,
    SqDistSquared,
    KernelMasked,
    KernelAck,
    ClassMasked,
    ClassScaled,
    GcSetup,
    OtReceiverMsg,
    OtSenderMsg,
    GarbledOutput,
    ClassResult,
    Shutdown,
    Failure,
}

impl MessageKind {
    pub fn tag(self) -> u8 {
        match self {
            MessageKind::SubmitTuple => 0x01,
            MessageKind::Query => 0x02,
            MessageKind::SqDistMasked => 0x10,
            MessageKind::SqDistSquared => 0x11,
            MessageKind::KernelMasked => 0x12,
            MessageKind::KernelAck => 0x13,
            MessageKind::ClassMasked => 0x14,
            MessageKind::ClassScaled => 0x15,
            MessageKind::GcSetup => 0x16,
            MessageKind::OtReceiverMsg => 0x17,
            MessageKind::OtSenderMsg => 0x18,
            MessageKind::GarbledOutput => 0x19,
            MessageKind::ClassResult => 0x20,
            MessageKind::Shutdown => 0x7e,
            MessageKind::Failure => 0x7f,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        use MessageKind::*;
        [
            SubmitTuple,
            Query,
            SqDistMasked,
            SqDistSquared,
            KernelMasked,
            KernelAck,
            ClassMasked,
            ClassScaled,
            GcSetup,
            OtReceiverMsg,
            OtSenderMsg,
            GarbledOutput,
            ClassResult,
            Shutdown,
            Failure,
        ]
        .into_iter()
        .find(|k| k.tag() == tag)
    }
}

/// Public material the data host sends to start the garbled argmax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GcSetup {
    pub classes: u32,
    pub width: u32,
    pub ot_kind: OtKind,
    pub masked_sums: Vec<Ciphertext>,
    pub generator_labels: Vec<WireLabel>,
    pub ot_setup: Vec<u8>,
    pub circuit: GarbledCircuit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    SubmitTuple {
        owner: u64,
        features: Vec<Ciphertext>,
        class: Vec<Ciphertext>,
    },
    Query(Vec<Ciphertext>),
    SqDistMasked(Vec<Ciphertext>),
    SqDistSquared(Vec<Ciphertext>),
    KernelMasked(Vec<Ciphertext>),
    KernelAck,
    ClassMasked {
        classes: u32,
        values: Vec<Ciphertext>,
    },
    ClassScaled(Vec<Ciphertext>),
    GcSetup(Box<GcSetup>),
    OtReceiverMsg(Vec<Vec<u8>>),
    OtSenderMsg(Vec<(Vec<u8>, Vec<u8>)>),
    GarbledOutput(Vec<WireLabel>),
    ClassResult(u32),
    Shutdown,
    Failure(String),
}

fn cts_out(
    pk: &PublicKey,
    cts: &[Ciphertext],
    out: &mut Vec<Vec<u8>>,
) -> Result<(), ProtocolError> {
    for c in cts {
        out.push(c.value_bytes(pk)?);
    }
    Ok(())
}

fn cts_in(pk: &PublicKey, payloads: &[Vec<u8>]) -> Result<Vec<Ciphertext>, ProtocolError> {
    payloads
        .iter()
        .map(|p| Ciphertext::from_value_bytes(pk, p).map_err(Into::into))
        .collect()
}

fn u32_in(p: &[u8]) -> Result<u32, ProtocolError> {
    Ok(codec::u32_from_field(p)?)
}

fn need(t: &Tagged, at_least: usize) -> Result<(), ProtocolError> {
    if t.payloads.len() < at_least {
        return Err(CodecError::PayloadCount {
            expected: at_least,
            found: t.payloads.len(),
        }
        .into());
    }
    Ok(())
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::SubmitTuple { .. } => MessageKind::SubmitTuple,
            Message::Query(_) => MessageKind::Query,
            Message::SqDistMasked(_) => MessageKind::SqDistMasked,
            Message::SqDistSquared(_) => MessageKind::SqDistSquared,
            Message::KernelMasked(_) => MessageKind::KernelMasked,
            Message::KernelAck => MessageKind::KernelAck,
            Message::ClassMasked { .. } => MessageKind::ClassMasked,
            Message::ClassScaled(_) => MessageKind::ClassScaled,
            Message::GcSetup(_) => MessageKind::GcSetup,
            Message::OtReceiverMsg(_) => MessageKind::OtReceiverMsg,
            Message::OtSenderMsg(_) => MessageKind::OtSenderMsg,
            Message::GarbledOutput(_) => MessageKind::GarbledOutput,
            Message::ClassResult(_) => MessageKind::ClassResult,
            Message::Shutdown => MessageKind::Shutdown,
            Message::Failure(_) => MessageKind::Failure,
        }
    }

    pub fn encode(&self, pk: &PublicKey) -> Result<Vec<u8>, ProtocolError> {
        let mut p: Vec<Vec<u8>> = Vec::new();
        match self {
            Message::SubmitTuple {
                owner,
                features,
                class,
            } => {
                p.push(owner.to_be_bytes().to_vec());
                p.push((features.len() as u32).to_be_bytes().to_vec());
                p.push((class.len() as u32).to_be_bytes().to_vec());
                cts_out(pk, features, &mut p)?;
                cts_out(pk, class, &mut p)?;
            }
            Message::Query(c)
            | Message::SqDistMasked(c)
            | Message::SqDistSquared(c)
            | Message::KernelMasked(c)
            | Message::ClassScaled(c) => cts_out(pk, c, &mut p)?,
            Message::KernelAck | Message::Shutdown => {}
            Message::ClassMasked { classes, values } => {
                p.push(classes.to_be_bytes().to_vec());
                cts_out(pk, values, &mut p)?;
            }
            Message::GcSetup(s) => {
                let mut header = Vec::with_capacity(9);
                header.extend_from_slice(&s.classes.to_be_bytes());
                header.extend_from_slice(&s.width.to_be_bytes());
                header.push(s.ot_kind.to_byte());
                p.push(header);
                cts_out(pk, &s.masked_sums, &mut p)?;
                p.push(
                    s.generator_labels
                        .iter()
                        .flat_map(|l| l.to_bytes())
                        .collect(),
                );
                p.push(s.ot_setup.clone());
                p.extend(s.circuit.to_payloads());
            }
            Message::OtReceiverMsg(m) => p.extend(m.iter().cloned()),
            Message::OtSenderMsg(pairs) => {
                for (e0, e1) in pairs {
                    p.push(e0.clone());
                    p.push(e1.clone());
                }
            }
            Message::GarbledOutput(labels) => {
                p.extend(labels.iter().map(|l| l.to_bytes().to_vec()))
            }
            Message::ClassResult(c) => p.push(c.to_be_bytes().to_vec()),
            Message::Failure(reason) => p.push(reason.as_bytes().to_vec()),
        }
        Ok(Tagged::new(self.kind().tag(), p).encode())
    }

    pub fn decode(bytes: &[u8], pk: &PublicKey) -> Result<Self, ProtocolError> {
        let t = Tagged::decode(bytes)?;
        let kind = MessageKind::from_tag(t.tag).ok_or(ProtocolError::UnknownTag(t.tag))?;
        let p = &t.payloads;
        Ok(match kind {
            MessageKind::SubmitTuple => {
                need(&t, 3)?;
                let owner = codec::u64_from_field(&p[0])?;
                let m = u32_in(&p[1])? as usize;
                let c = u32_in(&p[2])? as usize;
                t.expect_count(3 + m + c)?;
                Message::SubmitTuple {
                    owner,
                    features: cts_in(pk, &p[3..3 + m])?,
                    class: cts_in(pk, &p[3 + m..])?,
                }
            }
            MessageKind::Query => Message::Query(cts_in(pk, p)?),
            MessageKind::SqDistMasked => Message::SqDistMasked(cts_in(pk, p)?),
            MessageKind::SqDistSquared => Message::SqDistSquared(cts_in(pk, p)?),
            MessageKind::KernelMasked => Message::KernelMasked(cts_in(pk, p)?),
            MessageKind::KernelAck => {
                t.expect_count(0)?;
                Message::KernelAck
            }
            MessageKind::ClassMasked => {
                need(&t, 1)?;
                Message::ClassMasked {
                    classes: u32_in(&p[0])?,
                    values: cts_in(pk, &p[1..])?,
                }
            }
            MessageKind::ClassScaled => Message::ClassScaled(cts_in(pk, p)?),
            MessageKind::GcSetup => {
                need(&t, 1)?;
                if p[0].len() != 9 {
                    return Err(CodecError::FieldLength {
                        expected: 9,
                        found: p[0].len(),
                    }
                    .into());
                }
                let classes = u32_in(&p[0][..4])?;
                let width = u32_in(&p[0][4..8])?;
                let ot_kind = OtKind::from_byte(p[0][8])?;
                let c = classes as usize;
                need(&t, 3 + c)?;
                let masked_sums = cts_in(pk, &p[1..1 + c])?;
                let blob = &p[1 + c];
                if blob.len() % crate::garble::gc::LABEL_BYTES != 0 {
                    return Err(ProtocolError::Malformed("generator label blob"));
                }
                let generator_labels = blob
                    .chunks(crate::garble::gc::LABEL_BYTES)
                    .map(WireLabel::from_bytes)
                    .collect::<Result<Vec<_>, _>>()?;
                let ot_setup = p[2 + c].clone();
                let circuit = GarbledCircuit::from_payloads(&p[3 + c..])?;
                Message::GcSetup(Box::new(GcSetup {
                    classes,
                    width,
                    ot_kind,
                    masked_sums,
                    generator_labels,
                    ot_setup,
                    circuit,
                }))
            }
            MessageKind::OtReceiverMsg => Message::OtReceiverMsg(p.clone()),
            MessageKind::OtSenderMsg => {
                if p.len() % 2 != 0 {
                    return Err(ProtocolError::Malformed("odd OT response count"));
                }
                Message::OtSenderMsg(
                    p.chunks(2)
                        .map(|ch| (ch[0].clone(), ch[1].clone()))
                        .collect(),
                )
            }
            MessageKind::GarbledOutput => Message::GarbledOutput(
                p.iter()
                    .map(|b| WireLabel::from_bytes(b))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            MessageKind::ClassResult => {
                t.expect_count(1)?;
                Message::ClassResult(u32_in(&p[0])?)
            }
            MessageKind::Shutdown => {
                t.expect_count(0)?;
                Message::Shutdown
            }
            MessageKind::Failure => {
                t.expect_count(1)?;
                Message::Failure(String::from_utf8_lossy(&p[0]).into_owned())
            }
        })
    }
}
