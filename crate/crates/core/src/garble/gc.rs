//! Point-and-permute garbling with a SHA-256 dual-key cipher.
//!
//! A row for input labels `(A, B)` of gate `g` is
//! `SHA256("ppkde-gc" || g || row || A || B) xor (K_out || p_out || 0^15)`.
//! The fifteen zero bytes let the evaluator tell a wrong label from a right
//! one, so malformed inputs fail loudly instead of decoding to garbage.

use super::circuit::{BooleanCircuit, Gate, GateKind};
use crate::codec::{self, CodecError};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const LABEL_KEY_BYTES: usize = 16;
pub const LABEL_BYTES: usize = LABEL_KEY_BYTES + 1;
const ROW_BYTES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GarbleError {
    #[error("expected {expected} input labels, got {found}")]
    LabelCount { expected: usize, found: usize },
    #[error("no table row decrypts at gate {0}")]
    DecryptionFailure(usize),
    #[error("output wire {0} carries a label that matches neither value")]
    InvalidOutput(usize),
    #[error("malformed garbled circuit: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// A 128-bit wire key plus its permute bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WireLabel {
    pub key: [u8; LABEL_KEY_BYTES],
    pub pbit: bool,
}

impl WireLabel {
    fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut key = [0u8; LABEL_KEY_BYTES];
        rng.fill_bytes(&mut key);
        Self {
            key,
            pbit: rng.next_u32() & 1 == 1,
        }
    }

    fn xor(&self, other: &Self) -> Self {
        let mut key = self.key;
        for (k, o) in key.iter_mut().zip(&other.key) {
            *k ^= o;
        }
        Self {
            key,
            pbit: self.pbit ^ other.pbit,
        }
    }

    pub fn to_bytes(&self) -> [u8; LABEL_BYTES] {
        let mut out = [0u8; LABEL_BYTES];
        out[..LABEL_KEY_BYTES].copy_from_slice(&self.key);
        out[LABEL_KEY_BYTES] = self.pbit as u8;
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GarbleError> {
        if bytes.len() != LABEL_BYTES || bytes[LABEL_KEY_BYTES] > 1 {
            return Err(GarbleError::Malformed("wire label"));
        }
        let mut key = [0u8; LABEL_KEY_BYTES];
        key.copy_from_slice(&bytes[..LABEL_KEY_BYTES]);
        Ok(Self {
            key,
            pbit: bytes[LABEL_KEY_BYTES] == 1,
        })
    }
}

/// The two labels of a wire, by semantic value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelPair {
    pub zero: WireLabel,
    pub one: WireLabel,
}

impl LabelPair {
    pub fn select(&self, bit: bool) -> WireLabel {
        if bit {
            self.one
        } else {
            self.zero
        }
    }
}

/// What the evaluator receives: topology plus one 4-row table per
/// non-free gate, in gate order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GarbledCircuit {
    pub circuit: BooleanCircuit,
    pub free_xor: bool,
    pub tables: Vec<[[u8; ROW_BYTES]; 4]>,
}

/// What the generator keeps: input label pairs and the output decode map.
/// Only output-wire labels appear in `outputs`.
#[derive(Debug, Clone)]
pub struct GarblerSecrets {
    pub generator_inputs: Vec<LabelPair>,
    pub evaluator_inputs: Vec<LabelPair>,
    pub outputs: Vec<LabelPair>,
}

impl GarblerSecrets {
    pub fn generator_labels(&self, bits: &[bool]) -> Vec<WireLabel> {
        assert_eq!(bits.len(), self.generator_inputs.len());
        self.generator_inputs
            .iter()
            .zip(bits)
            .map(|(p, b)| p.select(*b))
            .collect()
    }

    /// Maps the evaluator's output labels back to bits.
    pub fn decode(&self, labels: &[WireLabel]) -> Result<Vec<bool>, GarbleError> {
        if labels.len() != self.outputs.len() {
            return Err(GarbleError::LabelCount {
                expected: self.outputs.len(),
                found: labels.len(),
            });
        }
        labels
            .iter()
            .zip(&self.outputs)
            .enumerate()
            .map(|(i, (l, p))| {
                if *l == p.zero {
                    Ok(false)
                } else if *l == p.one {
                    Ok(true)
                } else {
                    Err(GarbleError::InvalidOutput(i))
                }
            })
            .collect()
    }
}

fn row_pad(gate: usize, row: u8, a: &WireLabel, b: &WireLabel) -> [u8; ROW_BYTES] {
    let mut h = Sha256::new();
    h.update(b"ppkde-gc");
    h.update((gate as u64).to_be_bytes());
    h.update([row]);
    h.update(a.to_bytes());
    h.update(b.to_bytes());
    h.finalize().into()
}

fn seal(pad: [u8; ROW_BYTES], out: &WireLabel) -> [u8; ROW_BYTES] {
    let mut row = pad;
    for (r, k) in row.iter_mut().zip(&out.key) {
        *r ^= k;
    }
    row[LABEL_KEY_BYTES] ^= out.pbit as u8;
    row
}

fn open(pad: [u8; ROW_BYTES], row: &[u8; ROW_BYTES]) -> Option<WireLabel> {
    let mut plain = [0u8; ROW_BYTES];
    for i in 0..ROW_BYTES {
        plain[i] = pad[i] ^ row[i];
    }
    if plain[LABEL_BYTES..].iter().any(|b| *b != 0) {
        return None;
    }
    WireLabel::from_bytes(&plain[..LABEL_BYTES]).ok()
}

fn gate_table(
    index: usize,
    gate: &Gate,
    a: &LabelPair,
    b: &LabelPair,
    out: &LabelPair,
) -> [[u8; ROW_BYTES]; 4] {
    let mut table = [[0u8; ROW_BYTES]; 4];
    for va in [false, true] {
        for vb in [false, true] {
            let la = a.select(va);
            let lb = b.select(vb);
            let row = 2 * la.pbit as u8 + lb.pbit as u8;
            let v = match gate.kind {
                GateKind::And => va & vb,
                GateKind::Xor => va ^ vb,
                GateKind::Not => unreachable!(),
            };
            table[row as usize] = seal(row_pad(index, row, &la, &lb), &out.select(v));
        }
    }
    table
}

/// Garbles a circuit. With `free_xor` every pair satisfies
/// `one = zero xor Delta` (Delta's permute bit set) and XOR gates cost
/// nothing; otherwise XOR gets a table like AND. NOT swaps label roles.
pub fn garble<R: RngCore + CryptoRng + ?Sized>(
    circuit: &BooleanCircuit,
    rng: &mut R,
    free_xor: bool,
) -> (GarbledCircuit, GarblerSecrets) {
    let delta = {
        let mut d = WireLabel::random(rng);
        d.pbit = true;
        d
    };
    let fresh = |rng: &mut R| -> LabelPair {
        let zero = WireLabel::random(rng);
        let one = if free_xor {
            zero.xor(&delta)
        } else {
            loop {
                let mut one = WireLabel::random(rng);
                one.pbit = !zero.pbit;
                if one.key != zero.key {
                    break one;
                }
            }
        };
        LabelPair { zero, one }
    };

    let mut pairs: Vec<Option<LabelPair>> = vec![None; circuit.num_wires];
    for w in circuit
        .generator_inputs
        .iter()
        .chain(&circuit.evaluator_inputs)
    {
        pairs[*w] = Some(fresh(rng));
    }
    let mut tables = Vec::new();
    for (index, gate) in circuit.gates.iter().enumerate() {
        let a = pairs[gate.a].expect("gate reads an undefined wire");
        let out = match gate.kind {
            GateKind::Not => LabelPair {
                zero: a.one,
                one: a.zero,
            },
            GateKind::Xor if free_xor => {
                let b = pairs[gate.b].expect("gate reads an undefined wire");
                let zero = a.zero.xor(&b.zero);
                LabelPair {
                    zero,
                    one: zero.xor(&delta),
                }
            }
            GateKind::Xor | GateKind::And => {
                let b = pairs[gate.b].expect("gate reads an undefined wire");
                let out = fresh(rng);
                tables.push(gate_table(index, gate, &a, &b, &out));
                out
            }
        };
        pairs[gate.out] = Some(out);
    }
    let collect =
        |wires: &[usize]| -> Vec<LabelPair> { wires.iter().map(|w| pairs[*w].unwrap()).collect() };
    let secrets = GarblerSecrets {
        generator_inputs: collect(&circuit.generator_inputs),
        evaluator_inputs: collect(&circuit.evaluator_inputs),
        outputs: collect(&circuit.outputs),
    };
    (
        GarbledCircuit {
            circuit: circuit.clone(),
            free_xor,
            tables,
        },
        secrets,
    )
}

/// Evaluates with one label per input wire and returns the output labels.
pub fn evaluate(
    gc: &GarbledCircuit,
    generator_labels: &[WireLabel],
    evaluator_labels: &[WireLabel],
) -> Result<Vec<WireLabel>, GarbleError> {
    let c = &gc.circuit;
    for (expected, found) in [
        (c.generator_inputs.len(), generator_labels.len()),
        (c.evaluator_inputs.len(), evaluator_labels.len()),
    ] {
        if expected != found {
            return Err(GarbleError::LabelCount { expected, found });
        }
    }
    let mut labels: Vec<Option<WireLabel>> = vec![None; c.num_wires];
    for (w, l) in c.generator_inputs.iter().zip(generator_labels) {
        labels[*w] = Some(*l);
    }
    for (w, l) in c.evaluator_inputs.iter().zip(evaluator_labels) {
        labels[*w] = Some(*l);
    }
    let mut tables = gc.tables.iter();
    for (index, gate) in c.gates.iter().enumerate() {
        let a = labels[gate.a].ok_or(GarbleError::Malformed("undefined wire"))?;
        let out = match gate.kind {
            GateKind::Not => a,
            GateKind::Xor if gc.free_xor => {
                let b = labels[gate.b].ok_or(GarbleError::Malformed("undefined wire"))?;
                a.xor(&b)
            }
            GateKind::Xor | GateKind::And => {
                let b = labels[gate.b].ok_or(GarbleError::Malformed("undefined wire"))?;
                let table = tables
                    .next()
                    .ok_or(GarbleError::Malformed("missing gate table"))?;
                let row = 2 * a.pbit as u8 + b.pbit as u8;
                open(row_pad(index, row, &a, &b), &table[row as usize])
                    .ok_or(GarbleError::DecryptionFailure(index))?
            }
        };
        labels[gate.out] = Some(out);
    }
    if tables.next().is_some() {
        return Err(GarbleError::Malformed("surplus gate tables"));
    }
    c.outputs
        .iter()
        .map(|w| labels[*w].ok_or(GarbleError::Malformed("undefined output")))
        .collect()
}

const GATE_BYTES: usize = 1 + 3 * 4;

impl GarbledCircuit {
    /// Payloads: header (num_wires, #gen, #eval, #out, #gates, free_xor),
    /// gate list, output wire list, then one payload per table row in gate order.
    pub fn to_payloads(&self) -> Vec<Vec<u8>> {
        let c = &self.circuit;
        let mut header = Vec::with_capacity(21);
        for v in [
            c.num_wires,
            c.generator_inputs.len(),
            c.evaluator_inputs.len(),
            c.outputs.len(),
            c.gates.len(),
        ] {
            header.extend_from_slice(&(v as u32).to_be_bytes());
        }
        header.push(self.free_xor as u8);
        let mut wires = Vec::new();
        for w in c
            .generator_inputs
            .iter()
            .chain(&c.evaluator_inputs)
            .chain(&c.outputs)
        {
            wires.extend_from_slice(&(*w as u32).to_be_bytes());
        }
        let mut gates = Vec::with_capacity(c.gates.len() * GATE_BYTES);
        for g in &c.gates {
            gates.push(match g.kind {
                GateKind::And => 0,
                GateKind::Xor => 1,
                GateKind::Not => 2,
            });
            for v in [g.a, g.b, g.out] {
                gates.extend_from_slice(&(v as u32).to_be_bytes());
            }
        }
        let mut out = vec![header, wires, gates];
        for t in &self.tables {
            for row in t {
                out.push(row.to_vec());
            }
        }
        out
    }

    pub fn from_payloads(payloads: &[Vec<u8>]) -> Result<Self, GarbleError> {
        if payloads.len() < 3 || payloads[0].len() != 21 {
            return Err(GarbleError::Malformed("header"));
        }
        let h = &payloads[0];
        let field = |i: usize| codec::u32_from_field(&h[4 * i..4 * i + 4]).map(|v| v as usize);
        let (num_wires, n_gen, n_eval, n_out, n_gates) =
            (field(0)?, field(1)?, field(2)?, field(3)?, field(4)?);
        let free_xor = match h[20] {
            0 => false,
            1 => true,
            _ => return Err(GarbleError::Malformed("free-xor flag")),
        };
        let wires = &payloads[1];
        if wires.len() != 4 * (n_gen + n_eval + n_out) {
            return Err(GarbleError::Malformed("wire list"));
        }
        let ids: Vec<usize> = wires
            .chunks(4)
            .map(|ch| u32::from_be_bytes(ch.try_into().unwrap()) as usize)
            .collect();
        let gates_raw = &payloads[2];
        if gates_raw.len() != n_gates * GATE_BYTES {
            return Err(GarbleError::Malformed("gate list"));
        }
        let mut gates = Vec::with_capacity(n_gates);
        for ch in gates_raw.chunks(GATE_BYTES) {
            let kind = match ch[0] {
                0 => GateKind::And,
                1 => GateKind::Xor,
                2 => GateKind::Not,
                _ => return Err(GarbleError::Malformed("gate kind")),
            };
            let word = |i: usize| {
                u32::from_be_bytes(ch[1 + 4 * i..5 + 4 * i].try_into().unwrap()) as usize
            };
            gates.push(Gate {
                kind,
                a: word(0),
                b: word(1),
                out: word(2),
            });
        }
        let circuit = BooleanCircuit {
            num_wires,
            generator_inputs: ids[..n_gen].to_vec(),
            evaluator_inputs: ids[n_gen..n_gen + n_eval].to_vec(),
            outputs: ids[n_gen + n_eval..].to_vec(),
            gates,
        };
        if !circuit.is_well_formed() {
            return Err(GarbleError::Malformed("topology"));
        }
        let rows = &payloads[3..];
        if !rows.len().is_multiple_of(4) {
            return Err(GarbleError::Malformed("table rows"));
        }
        let mut tables = Vec::with_capacity(rows.len() / 4);
        for chunk in rows.chunks(4) {
            let mut t = [[0u8; ROW_BYTES]; 4];
            for (dst, src) in t.iter_mut().zip(chunk) {
                if src.len() != ROW_BYTES {
                    return Err(GarbleError::Malformed("table row length"));
                }
                dst.copy_from_slice(src);
            }
            tables.push(t);
        }
        let expected = circuit
            .gates
            .iter()
            .filter(|g| g.kind == GateKind::And || (g.kind == GateKind::Xor && !free_xor))
            .count();
        if tables.len() != expected {
            return Err(GarbleError::Malformed("table count"));
        }
        Ok(Self {
            circuit,
            free_xor,
            tables,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garble::circuit::{
        build_argmax_circuit, decode_index, encode_values, Bit, CircuitBuilder,
    };
    use crate::math::{random_bits, seeded_rng};
    use rug::Integer;

    fn garbled_run(
        circuit: &BooleanCircuit,
        gen: &[bool],
        eval: &[bool],
        free_xor: bool,
        seed: u64,
    ) -> Vec<bool> {
        let (gc, secrets) = garble(circuit, &mut seeded_rng(seed), free_xor);
        let gl = secrets.generator_labels(gen);
        let el: Vec<WireLabel> = secrets
            .evaluator_inputs
            .iter()
            .zip(eval)
            .map(|(p, b)| p.select(*b))
            .collect();
        secrets.decode(&evaluate(&gc, &gl, &el).unwrap()).unwrap()
    }

    #[test]
    fn single_gates_truth_tables() {
        for free_xor in [false, true] {
            for kind in ["and", "xor", "not"] {
                let mut b = CircuitBuilder::new();
                let x = b.generator_input();
                let y = b.evaluator_input();
                let out = match kind {
                    "and" => b.and(x, y),
                    "xor" => b.xor(x, y),
                    _ => b.not(y),
                };
                let c = b.finish(&[out]);
                for va in [false, true] {
                    for vb in [false, true] {
                        let want = c.evaluate(&[va], &[vb]);
                        assert_eq!(garbled_run(&c, &[va], &[vb], free_xor, 3), want, "{kind}");
                    }
                }
            }
        }
    }

    #[test]
    fn pass_through_wire() {
        let mut b = CircuitBuilder::new();
        let x = b.evaluator_input();
        let c = b.finish(&[x]);
        for v in [false, true] {
            assert_eq!(garbled_run(&c, &[], &[v], true, 1), vec![v]);
        }
    }

    #[test]
    fn wrong_label_is_detected() {
        let mut b = CircuitBuilder::new();
        let x = b.generator_input();
        let y = b.evaluator_input();
        let out = b.and(x, y);
        let c = b.finish(&[out]);
        let (gc, secrets) = garble(&c, &mut seeded_rng(9), true);
        let gl = secrets.generator_labels(&[true]);
        let mut forged = secrets.evaluator_inputs[0].one;
        forged.key[0] ^= 1;
        assert_eq!(
            evaluate(&gc, &gl, &[forged]),
            Err(GarbleError::DecryptionFailure(0))
        );
        let bogus = WireLabel {
            key: [7; 16],
            pbit: false,
        };
        assert_eq!(secrets.decode(&[bogus]), Err(GarbleError::InvalidOutput(0)));
    }

    #[test]
    fn labels_are_distinct_per_wire() {
        let c = build_argmax_circuit(3, 8);
        for free_xor in [false, true] {
            let (_, s) = garble(&c, &mut seeded_rng(2), free_xor);
            for p in s
                .generator_inputs
                .iter()
                .chain(&s.evaluator_inputs)
                .chain(&s.outputs)
            {
                assert_ne!(p.zero, p.one);
                assert_ne!(p.zero.pbit, p.one.pbit);
            }
        }
    }

    #[test]
    fn argmax_garbled_matches_plaintext() {
        let mut rng = seeded_rng(21);
        let (c, width) = (4, 20);
        let circuit = build_argmax_circuit(c, width);
        for round in 0..40 {
            let mus: Vec<Integer> = (0..c)
                .map(|_| random_bits(&mut rng, width as u32 - 1))
                .collect();
            let ins: Vec<Integer> = mus
                .iter()
                .map(|m| m + random_bits(&mut rng, width as u32 - 1))
                .collect();
            let gen = encode_values(&mus, width);
            let eval = encode_values(&ins, width);
            let want = circuit.evaluate(&gen, &eval);
            let got = garbled_run(&circuit, &gen, &eval, round % 2 == 0, round);
            assert_eq!(got, want);
            assert!(decode_index(&got) < c);
        }
    }

    #[test]
    fn serialization_round_trips() {
        let circuit = build_argmax_circuit(3, 5);
        for free_xor in [false, true] {
            let (gc, _) = garble(&circuit, &mut seeded_rng(4), free_xor);
            let back = GarbledCircuit::from_payloads(&gc.to_payloads()).unwrap();
            assert_eq!(back, gc);
        }
        let mut b = CircuitBuilder::new();
        let x = b.evaluator_input();
        let c = b.finish(&[Bit::Const(true), x]);
        let (gc, _) = garble(&c, &mut seeded_rng(4), false);
        let mut payloads = gc.to_payloads();
        payloads.pop();
        assert!(GarbledCircuit::from_payloads(&payloads).is_err());
    }
}
