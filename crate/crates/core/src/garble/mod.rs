//! Yao garbled circuits for the masked argmax, plus 1-of-2 oblivious transfer.

pub mod circuit;
pub mod gc;
pub mod ot;

pub use circuit::{build_argmax_circuit, decode_index, encode_values, index_bits, BooleanCircuit};
pub use gc::{evaluate, garble, GarbleError, GarbledCircuit, GarblerSecrets, LabelPair, WireLabel};
pub use ot::{ot_transfer, OtError, OtKind, OtReceiver, OtSender};
