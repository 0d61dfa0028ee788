//! Byte-level wire conventions shared by keys, ciphertexts, garbled tables and
//! protocol messages.
//!
//! Every integer travels as a big-endian byte string preceded by a 4-byte
//! big-endian length. Composite objects are *tagged sequences*:
//!
//! ```text
//! tag (1 byte) || count (4 bytes, BE) || count x (len (4 bytes, BE) || bytes)
//! ```

use rug::integer::Order;
use rug::Integer;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("input truncated: needed {needed} more bytes")]
    Truncated { needed: usize },
    #[error("{0} trailing bytes after a complete object")]
    TrailingBytes(usize),
    #[error("unexpected tag {found:#04x}, expected {expected:#04x}")]
    UnexpectedTag { expected: u8, found: u8 },
    #[error("expected {expected} payloads, found {found}")]
    PayloadCount { expected: usize, found: usize },
    #[error("integer does not fit in {width} bytes")]
    Oversized { width: usize },
    #[error("field has length {found}, expected {expected}")]
    FieldLength { expected: usize, found: usize },
}

/// Minimal-length big-endian encoding of a nonnegative integer (zero is empty).
pub fn integer_to_bytes(value: &Integer) -> Vec<u8> {
    debug_assert!(value.cmp0() != std::cmp::Ordering::Less);
    if value.cmp0() == std::cmp::Ordering::Equal {
        return Vec::new();
    }
    value.to_digits::<u8>(Order::Msf)
}

/// Fixed-width big-endian encoding, left-padded with zeros.
pub fn integer_to_fixed_bytes(value: &Integer, width: usize) -> Result<Vec<u8>, CodecError> {
    let digits = integer_to_bytes(value);
    if digits.len() > width {
        return Err(CodecError::Oversized { width });
    }
    let mut out = vec![0u8; width - digits.len()];
    out.extend_from_slice(&digits);
    Ok(out)
}

pub fn integer_from_bytes(bytes: &[u8]) -> Integer {
    Integer::from_digits(bytes, Order::Msf)
}

pub fn u32_from_field(bytes: &[u8]) -> Result<u32, CodecError> {
    let arr: [u8; 4] = bytes.try_into().map_err(|_| CodecError::FieldLength {
        expected: 4,
        found: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(arr))
}

pub fn u64_from_field(bytes: &[u8]) -> Result<u64, CodecError> {
    let arr: [u8; 8] = bytes.try_into().map_err(|_| CodecError::FieldLength {
        expected: 8,
        found: bytes.len(),
    })?;
    Ok(u64::from_be_bytes(arr))
}

/// A decoded tagged sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tagged {
    pub tag: u8,
    pub payloads: Vec<Vec<u8>>,
}

impl Tagged {
    pub fn new(tag: u8, payloads: Vec<Vec<u8>>) -> Self {
        Self { tag, payloads }
    }

    pub fn encode(&self) -> Vec<u8> {
        let body: usize = self.payloads.iter().map(|p| 4 + p.len()).sum();
        let mut out = Vec::with_capacity(5 + body);
        out.push(self.tag);
        out.extend_from_slice(&(self.payloads.len() as u32).to_be_bytes());
        for p in &self.payloads {
            out.extend_from_slice(&(p.len() as u32).to_be_bytes());
            out.extend_from_slice(p);
        }
        out
    }

    /// Decodes exactly one tagged sequence; trailing bytes are an error.
    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut cursor = Cursor { buf: bytes, pos: 0 };
        let tag = cursor.take(1)?[0];
        let count = u32_from_field(cursor.take(4)?)? as usize;
        let mut payloads = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = u32_from_field(cursor.take(4)?)? as usize;
            payloads.push(cursor.take(len)?.to_vec());
        }
        if cursor.pos != bytes.len() {
            return Err(CodecError::TrailingBytes(bytes.len() - cursor.pos));
        }
        Ok(Self { tag, payloads })
    }

    pub fn expect_tag(&self, expected: u8) -> Result<(), CodecError> {
        if self.tag != expected {
            return Err(CodecError::UnexpectedTag {
                expected,
                found: self.tag,
            });
        }
        Ok(())
    }

    pub fn expect_count(&self, expected: usize) -> Result<(), CodecError> {
        if self.payloads.len() != expected {
            return Err(CodecError::PayloadCount {
                expected,
                found: self.payloads.len(),
            });
        }
        Ok(())
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(CodecError::Truncated {
                needed: self.pos + len - self.buf.len(),
            }),
        }
    }
}
