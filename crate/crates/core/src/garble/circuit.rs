//! Boolean circuits over AND/XOR/NOT with a constant-folding builder, and the
//! masked-argmax circuit.

use rug::Integer;

pub type WireId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Xor,
    Not,
}

/// A gate; `b` is ignored for `Not`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub a: WireId,
    pub b: WireId,
    pub out: WireId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanCircuit {
    pub num_wires: usize,
    pub generator_inputs: Vec<WireId>,
    pub evaluator_inputs: Vec<WireId>,
    pub gates: Vec<Gate>,
    pub outputs: Vec<WireId>,
}

impl BooleanCircuit {
    /// Plaintext evaluation.
    pub fn evaluate(&self, generator_bits: &[bool], evaluator_bits: &[bool]) -> Vec<bool> {
        assert_eq!(generator_bits.len(), self.generator_inputs.len());
        assert_eq!(evaluator_bits.len(), self.evaluator_inputs.len());
        let mut values = vec![false; self.num_wires];
        for (w, v) in self.generator_inputs.iter().zip(generator_bits) {
            values[*w] = *v;
        }
        for (w, v) in self.evaluator_inputs.iter().zip(evaluator_bits) {
            values[*w] = *v;
        }
        for g in &self.gates {
            values[g.out] = match g.kind {
                GateKind::And => values[g.a] & values[g.b],
                GateKind::Xor => values[g.a] ^ values[g.b],
                GateKind::Not => !values[g.a],
            };
        }
        self.outputs.iter().map(|w| values[*w]).collect()
    }

    pub fn and_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| g.kind == GateKind::And)
            .count()
    }

    /// Structural checks: inputs and gate outputs each written exactly once,
    /// gates only read wires that are already defined.
    pub fn is_well_formed(&self) -> bool {
        let mut defined = vec![false; self.num_wires];
        for w in self.generator_inputs.iter().chain(&self.evaluator_inputs) {
            if *w >= self.num_wires || defined[*w] {
                return false;
            }
            defined[*w] = true;
        }
        for g in &self.gates {
            let reads_ok = defined.get(g.a).copied().unwrap_or(false)
                && (g.kind == GateKind::Not || defined.get(g.b).copied().unwrap_or(false));
            if !reads_ok || g.out >= self.num_wires || defined[g.out] {
                return false;
            }
            defined[g.out] = true;
        }
        self.outputs
            .iter()
            .all(|w| *w < self.num_wires && defined[*w])
    }
}

/// A builder-time bit: either a known constant or a circuit wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bit {
    Const(bool),
    Wire(WireId),
}

#[derive(Debug, Default)]
pub struct CircuitBuilder {
    num_wires: usize,
    gates: Vec<Gate>,
    generator_inputs: Vec<WireId>,
    evaluator_inputs: Vec<WireId>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> WireId {
        self.num_wires += 1;
        self.num_wires - 1
    }

    pub fn generator_input(&mut self) -> Bit {
        let w = self.fresh();
        self.generator_inputs.push(w);
        Bit::Wire(w)
    }

    pub fn evaluator_input(&mut self) -> Bit {
        let w = self.fresh();
        self.evaluator_inputs.push(w);
        Bit::Wire(w)
    }

    fn gate(&mut self, kind: GateKind, a: WireId, b: WireId) -> Bit {
        let out = self.fresh();
        self.gates.push(Gate { kind, a, b, out });
        Bit::Wire(out)
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => Bit::Const(x ^ y),
            (Bit::Const(false), w) | (w, Bit::Const(false)) => w,
            (Bit::Const(true), w) | (w, Bit::Const(true)) => self.not(w),
            (Bit::Wire(x), Bit::Wire(y)) if x == y => Bit::Const(false),
            (Bit::Wire(x), Bit::Wire(y)) => self.gate(GateKind::Xor, x, y),
        }
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => Bit::Const(x & y),
            (Bit::Const(false), _) | (_, Bit::Const(false)) => Bit::Const(false),
            (Bit::Const(true), w) | (w, Bit::Const(true)) => w,
            (Bit::Wire(x), Bit::Wire(y)) if x == y => Bit::Wire(x),
            (Bit::Wire(x), Bit::Wire(y)) => self.gate(GateKind::And, x, y),
        }
    }

    pub fn not(&mut self, a: Bit) -> Bit {
        match a {
            Bit::Const(x) => Bit::Const(!x),
            Bit::Wire(x) => self.gate(GateKind::Not, x, x),
        }
    }

    /// `c xor ((x xor c) and (y xor c))`, one AND.
    pub fn majority(&mut self, x: Bit, y: Bit, c: Bit) -> Bit {
        let xc = self.xor(x, c);
        let yc = self.xor(y, c);
        let t = self.and(xc, yc);
        self.xor(c, t)
    }

    /// `sel ? b : a`.
    pub fn mux(&mut self, sel: Bit, a: Bit, b: Bit) -> Bit {
        let d = self.xor(a, b);
        let t = self.and(sel, d);
        self.xor(a, t)
    }

    /// Little-endian difference `a - b` truncated to the operand width, plus
    /// the final borrow (set iff `a < b`).
    pub fn subtract(&mut self, a: &[Bit], b: &[Bit]) -> (Vec<Bit>, Bit) {
        assert_eq!(a.len(), b.len());
        let mut borrow = Bit::Const(false);
        let mut diff = Vec::with_capacity(a.len());
        for (x, y) in a.iter().zip(b) {
            let xy = self.xor(*x, *y);
            diff.push(self.xor(xy, borrow));
            // borrow' = maj(!x, y, borrow)
            let nx = self.not(*x);
            borrow = self.majority(nx, *y, borrow);
        }
        (diff, borrow)
    }

    /// Bit set iff `a > b` as unsigned little-endian integers.
    pub fn greater_than(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        assert_eq!(a.len(), b.len());
        let mut borrow = Bit::Const(false);
        for (x, y) in b.iter().zip(a) {
            let nx = self.not(*x);
            borrow = self.majority(nx, *y, borrow);
        }
        borrow
    }

    /// Materializes output bits; constants become `w xor w` / its negation
    /// over some existing wire so every output is a real wire.
    pub fn finish(mut self, outputs: &[Bit]) -> BooleanCircuit {
        let mut out_wires = Vec::with_capacity(outputs.len());
        for bit in outputs {
            let w = match *bit {
                Bit::Wire(w) => w,
                Bit::Const(v) => {
                    assert!(
                        self.num_wires > 0,
                        "constant output needs at least one input wire"
                    );
                    let zero = self.gate(GateKind::Xor, 0, 0);
                    let zero = match zero {
                        Bit::Wire(w) => w,
                        Bit::Const(_) => unreachable!(),
                    };
                    if v {
                        match self.gate(GateKind::Not, zero, zero) {
                            Bit::Wire(w) => w,
                            Bit::Const(_) => unreachable!(),
                        }
                    } else {
                        zero
                    }
                }
            };
            out_wires.push(w);
        }
        BooleanCircuit {
            num_wires: self.num_wires,
            generator_inputs: self.generator_inputs,
            evaluator_inputs: self.evaluator_inputs,
            gates: self.gates,
            outputs: out_wires,
        }
    }
}

/// Bits needed to name one of `c` classes (`ceil(log2 c)`).
pub fn index_bits(c: usize) -> usize {
    assert!(c >= 2);
    (usize::BITS - (c - 1).leading_zeros()) as usize
}

/// Circuit on `c` evaluator inputs `in_k` and `c` generator inputs `mu_k`,
/// each `width` bits little-endian (class-major). Outputs the little-endian
/// index of the largest `in_k - mu_k`, lowest index on ties. The subtraction
/// does not wrap: callers guarantee `in_k >= mu_k`.
pub fn build_argmax_circuit(c: usize, width: usize) -> BooleanCircuit {
    assert!(c >= 2 && width >= 1);
    let mut b = CircuitBuilder::new();
    let ins: Vec<Vec<Bit>> = (0..c)
        .map(|_| (0..width).map(|_| b.evaluator_input()).collect())
        .collect();
    let mus: Vec<Vec<Bit>> = (0..c)
        .map(|_| (0..width).map(|_| b.generator_input()).collect())
        .collect();
    let ib = index_bits(c);
    let mut level: Vec<(Vec<Bit>, Vec<Bit>)> = (0..c)
        .map(|k| {
            let (u, _) = b.subtract(&ins[k], &mus[k]);
            let idx = (0..ib).map(|i| Bit::Const((k >> i) & 1 == 1)).collect();
            (u, idx)
        })
        .collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(left) = it.next() {
            match it.next() {
                None => next.push(left),
                Some(right) => {
                    // Right wins only when strictly larger, so ties keep the lower index.
                    let gt = b.greater_than(&right.0, &left.0);
                    let value = left
                        .0
                        .iter()
                        .zip(&right.0)
                        .map(|(l, r)| b.mux(gt, *l, *r))
                        .collect();
                    let idx = left
                        .1
                        .iter()
                        .zip(&right.1)
                        .map(|(l, r)| b.mux(gt, *l, *r))
                        .collect();
                    next.push((value, idx));
                }
            }
        }
        level = next;
    }
    let (_, idx) = level.pop().unwrap();
    b.finish(&idx)
}

/// Little-endian bits of each value, `width` bits apiece, concatenated.
pub fn encode_values(values: &[Integer], width: usize) -> Vec<bool> {
    let mut bits = Vec::with_capacity(values.len() * width);
    for v in values {
        assert!(
            v.significant_bits() as usize <= width,
            "value exceeds circuit width"
        );
        bits.extend((0..width).map(|i| v.get_bit(i as u32)));
    }
    bits
}

pub fn decode_index(bits: &[bool]) -> usize {
    bits.iter()
        .enumerate()
        .map(|(i, b)| (*b as usize) << i)
        .sum()
}
