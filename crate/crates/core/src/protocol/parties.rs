//! Party state machines. Only the [`Csp`] holds the secret key; the
//! [`DataHost`] drives every exchange and never decrypts.

use super::messages::{GcSetup, Message, MessageKind};
use super::transport::Link;
use super::ProtocolError;
use crate::fixedpoint::FixedPointParams;
use crate::garble::{
    build_argmax_circuit, decode_index, encode_values, evaluate, garble, GarbledCircuit, OtKind,
    OtReceiver, OtSender, WireLabel,
};
use crate::kde::DataTuple;
use crate::math::{random_below, random_bits, ModMatrix};
use crate::paillier::{Ciphertext, PublicKey, SecretKey};
use rand::{CryptoRng, RngCore};
use rand_chacha::ChaCha20Rng;
use rug::Integer;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedTuple {
    pub owner: u64,
    pub enc_features: Vec<Ciphertext>,
    pub enc_class: Vec<Ciphertext>,
}

/// Quantizes and encrypts a tuple: features scaled by `2^s`, class as a
/// one-hot vector of length `c`.
pub fn submit_tuple<R: RngCore + CryptoRng + ?Sized>(
    owner: u64,
    tuple: &DataTuple,
    pk: &PublicKey,
    params: &FixedPointParams,
    rng: &mut R,
) -> Result<EncryptedTuple, ProtocolError> {
    if tuple.features.len() != params.m() {
        return Err(ProtocolError::Dimension {
            expected: params.m(),
            found: tuple.features.len(),
        });
    }
    if tuple.label >= params.c() {
        return Err(ProtocolError::Label(tuple.label));
    }
    let enc_features = tuple
        .features
        .iter()
        .map(|x| {
            let v = params.quantize_feature(*x)?;
            Ok(pk.encrypt(&Integer::from(v), rng)?)
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    let enc_class = (0..params.c())
        .map(|j| pk.encrypt(&Integer::from((j == tuple.label) as u32), rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EncryptedTuple {
        owner,
        enc_features,
        enc_class,
    })
}

pub fn encrypt_query<R: RngCore + CryptoRng + ?Sized>(
    q: &[f64],
    pk: &PublicKey,
    params: &FixedPointParams,
    rng: &mut R,
) -> Result<Vec<Ciphertext>, ProtocolError> {
    if q.len() != params.m() {
        return Err(ProtocolError::Dimension {
            expected: params.m(),
            found: q.len(),
        });
    }
    q.iter()
        .map(|x| {
            let v = params.quantize_feature(*x)?;
            Ok(pk.encrypt(&Integer::from(v), rng)?)
        })
        .collect()
}

/// Uniform invertible `c x c` matrix over `Z_n` and its inverse.
pub fn random_invertible_matrix<R: RngCore + ?Sized>(
    c: usize,
    n: &Integer,
    rng: &mut R,
) -> (ModMatrix, ModMatrix) {
    assert!(c >= 1);
    loop {
        let entries = (0..c * c).map(|_| random_below(rng, n)).collect();
        let m = ModMatrix { size: c, entries };
        if let Some(inv) = m.inverse(n) {
            return (m, inv);
        }
    }
}

/// `prod_j cts[j]^coeffs[j]`, decrypting to `sum_j coeffs[j] * m_j`.
fn linear_combination(
    pk: &PublicKey,
    cts: &[Ciphertext],
    coeffs: &[Integer],
) -> Result<Ciphertext, ProtocolError> {
    let mut acc: Option<Ciphertext> = None;
    for (c, k) in cts.iter().zip(coeffs) {
        let term = pk.hom_scale(c, k)?;
        acc = Some(match acc {
            None => term,
            Some(a) => pk.hom_add(&a, &term)?,
        });
    }
    Ok(acc.expect("nonempty combination"))
}

/// Every mask the data host drew for the most recent query. Held only by the
/// data host; exposed to callers for audits.
#[derive(Debug, Clone, Default)]
pub struct MaskRecord {
    /// Squared-distance masks, uniform over `Z_n`, per tuple and dimension.
    pub sq_dist: Vec<Vec<Integer>>,
    /// Kernel masks, uniform over `[0, B)`, per tuple.
    pub kernel: Vec<Integer>,
    /// Garbled-circuit masks, uniform over `[0, 2^L)`, per class.
    pub gc: Vec<Integer>,
    pub gc_mask_bits: u32,
    /// The encrypted class sums before garbled-circuit masking.
    pub scores: Vec<Ciphertext>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HostOptions {
    pub free_xor: bool,
    pub ot_kind: OtKind,
    /// Test mode: kernel masks fixed at zero.
    pub zero_kernel_masks: bool,
}

impl Default for HostOptions {
    fn default() -> Self {
        Self {
            free_xor: true,
            ot_kind: OtKind::ChouOrlandi,
            zero_kernel_masks: false,
        }
    }
}

pub struct DataHost {
    pk: PublicKey,
    params: FixedPointParams,
    store: Vec<EncryptedTuple>,
    rng: ChaCha20Rng,
    options: HostOptions,
    record: MaskRecord,
}

impl DataHost {
    pub fn new(
        pk: PublicKey,
        params: FixedPointParams,
        rng: ChaCha20Rng,
        options: HostOptions,
    ) -> Self {
        Self {
            pk,
            params,
            store: Vec::new(),
            rng,
            options,
            record: MaskRecord::default(),
        }
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }

    pub fn params(&self) -> &FixedPointParams {
        &self.params
    }

    pub fn store(&self) -> &[EncryptedTuple] {
        &self.store
    }

    pub fn mask_record(&self) -> &MaskRecord {
        &self.record
    }

    /// Accepts an owner's upload.
    pub fn accept(&mut self, tuple: EncryptedTuple) -> Result<(), ProtocolError> {
        if tuple.enc_features.len() != self.params.m() || tuple.enc_class.len() != self.params.c() {
            return Err(ProtocolError::Dimension {
                expected: self.params.m(),
                found: tuple.enc_features.len(),
            });
        }
        if self.store.len() as u64 >= self.params.config().n_max {
            return Err(ProtocolError::Capacity(self.params.config().n_max));
        }
        self.store.push(tuple);
        Ok(())
    }

    /// Drops every tuple uploaded by `owner`; returns how many were removed.
    pub fn remove_owner(&mut self, owner: u64) -> usize {
        let before = self.store.len();
        self.store.retain(|t| t.owner != owner);
        before - self.store.len()
    }

    /// Masked-squaring exchange for a batch of `(a, b)` vectors: returns
    /// `E(||a - b||^2)` for each pair.
    pub fn squared_distances(
        &mut self,
        link: &mut Link,
        pairs: &[(&[Ciphertext], &[Ciphertext])],
    ) -> Result<Vec<Ciphertext>, ProtocolError> {
        let pk = self.pk.clone();
        let mut xs = Vec::new();
        let mut masks = Vec::with_capacity(pairs.len());
        let mut ys = Vec::new();
        for (a, b) in pairs {
            if a.len() != b.len() {
                return Err(ProtocolError::Dimension {
                    expected: a.len(),
                    found: b.len(),
                });
            }
            let mut row = Vec::with_capacity(a.len());
            for (ai, bi) in a.iter().zip(b.iter()) {
                let x = pk.hom_add(ai, &pk.hom_neg(bi)?)?;
                let mu = random_below(&mut self.rng, pk.n());
                ys.push(pk.hom_add(&x, &pk.encrypt(&mu, &mut self.rng)?)?);
                xs.push(x);
                row.push(mu);
            }
            masks.push(row);
        }
        let squares = match link.call(&pk, Message::SqDistMasked(ys))? {
            Message::SqDistSquared(w) if w.len() == xs.len() => w,
            other => {
                return Err(ProtocolError::unexpected(
                    MessageKind::SqDistSquared,
                    &other,
                ))
            }
        };
        let mut out = Vec::with_capacity(pairs.len());
        let mut idx = 0;
        for row in &masks {
            let mut acc: Option<Ciphertext> = None;
            for mu in row {
                let two_mu = Integer::from(mu * 2u32);
                let unmask = pk.hom_scale(&xs[idx], &(-two_mu))?;
                let mu_sq = Integer::from(mu.square_ref()) % pk.n();
                let neg_mu_sq = pk.encrypt(&pk.encode_signed(&(-mu_sq)), &mut self.rng)?;
                let z = pk.hom_add(&pk.hom_add(&squares[idx], &unmask)?, &neg_mu_sq)?;
                acc = Some(match acc {
                    None => z,
                    Some(a) => pk.hom_add(&a, &z)?,
                });
                idx += 1;
            }
            out.push(acc.ok_or(ProtocolError::Dimension {
                expected: 1,
                found: 0,
            })?);
        }
        self.record.sq_dist = masks;
        Ok(out)
    }

    /// `E(||a - b||^2)` for one pair.
    pub fn squared_dist(
        &mut self,
        link: &mut Link,
        ea: &[Ciphertext],
        eb: &[Ciphertext],
    ) -> Result<Ciphertext, ProtocolError> {
        Ok(self.squared_distances(link, &[(ea, eb)])?.remove(0))
    }

    /// Squared distances to the query, masked into `[0, B)` and handed to the
    /// CSP, which keeps the resulting quantized kernels.
    pub fn kernel_values(
        &mut self,
        link: &mut Link,
        query: &[Ciphertext],
    ) -> Result<(), ProtocolError> {
        if self.store.is_empty() {
            return Err(ProtocolError::EmptyStore);
        }
        let store = std::mem::take(&mut self.store);
        let pairs: Vec<(&[Ciphertext], &[Ciphertext])> = store
            .iter()
            .map(|t| (query, t.enc_features.as_slice()))
            .collect();
        let dists = self.squared_distances(link, &pairs);
        self.store = store;
        let dists = dists?;
        let pk = self.pk.clone();
        let mut masks = Vec::with_capacity(dists.len());
        let mut masked = Vec::with_capacity(dists.len());
        for s in &dists {
            let mu = if self.options.zero_kernel_masks {
                Integer::new()
            } else {
                random_below(&mut self.rng, self.params.mask_bound())
            };
            masked.push(pk.hom_add(s, &pk.encrypt(&mu, &mut self.rng)?)?);
            masks.push(mu);
        }
        match link.call(&pk, Message::KernelMasked(masked))? {
            Message::KernelAck => {}
            other => return Err(ProtocolError::unexpected(MessageKind::KernelAck, &other)),
        }
        self.record.kernel = masks;
        Ok(())
    }

    /// Matrix-masked class vectors scaled by the CSP's kernels, unmasked and
    /// corrected, then summed per class: `E(A_k)`.
    pub fn class_scores(&mut self, link: &mut Link) -> Result<Vec<Ciphertext>, ProtocolError> {
        let pk = self.pk.clone();
        let c = self.params.c();
        let n = pk.n().clone();
        let mut inverses = Vec::with_capacity(self.store.len());
        let mut masked = Vec::with_capacity(self.store.len() * c);
        for t in &self.store {
            let (b, b_inv) = random_invertible_matrix(c, &n, &mut self.rng);
            for j in 0..c {
                let row: Vec<Integer> = (0..c).map(|k| b.get(j, k).clone()).collect();
                masked.push(linear_combination(&pk, &t.enc_class, &row)?);
            }
            inverses.push(b_inv);
        }
        let scaled = match link.call(
            &pk,
            Message::ClassMasked {
                classes: c as u32,
                values: masked,
            },
        )? {
            Message::ClassScaled(w) if w.len() == self.store.len() * c => w,
            other => return Err(ProtocolError::unexpected(MessageKind::ClassScaled, &other)),
        };
        let mut sums: Vec<Option<Ciphertext>> = vec![None; c];
        for (i, b_inv) in inverses.iter().enumerate() {
            let cf = self.params.correction_factor(&self.record.kernel[i])?;
            let w = &scaled[i * c..(i + 1) * c];
            for (k, sum) in sums.iter_mut().enumerate() {
                let row: Vec<Integer> = (0..c)
                    .map(|j| Integer::from(b_inv.get(k, j) * &cf) % &n)
                    .collect();
                let u = linear_combination(&pk, w, &row)?;
                *sum = Some(match sum.take() {
                    None => u,
                    Some(a) => pk.hom_add(&a, &u)?,
                });
            }
        }
        let scores: Vec<Ciphertext> = sums
            .into_iter()
            .map(|s| s.expect("store nonempty"))
            .collect();
        self.record.scores = scores.clone();
        Ok(scores)
    }

    /// Garbled argmax over `A_k + mu_k`; returns the decoded class index.
    pub fn garbled_argmax(
        &mut self,
        link: &mut Link,
        scores: &[Ciphertext],
    ) -> Result<usize, ProtocolError> {
        let pk = self.pk.clone();
        let c = self.params.c();
        let mask_bits = self.params.gc_mask_bits(self.store.len());
        let width = mask_bits + 1;
        if width >= pk.n().significant_bits() {
            return Err(ProtocolError::Headroom {
                width,
                modulus_bits: pk.n().significant_bits(),
            });
        }
        let mut mus = Vec::with_capacity(c);
        let mut masked_sums = Vec::with_capacity(c);
        for s in scores {
            let mu = random_bits(&mut self.rng, mask_bits);
            masked_sums.push(pk.hom_add(s, &pk.encrypt(&mu, &mut self.rng)?)?);
            mus.push(mu);
        }
        let circuit = build_argmax_circuit(c, width as usize);
        let (gc, secrets) = garble(&circuit, &mut self.rng, self.options.free_xor);
        let generator_labels = secrets.generator_labels(&encode_values(&mus, width as usize));
        let (sender, ot_setup) = OtSender::new(self.options.ot_kind, &mut self.rng);
        self.record.gc = mus;
        self.record.gc_mask_bits = mask_bits;
        let setup = GcSetup {
            classes: c as u32,
            width,
            ot_kind: self.options.ot_kind,
            masked_sums,
            generator_labels,
            ot_setup,
            circuit: gc,
        };
        let ot_msgs = match link.call(&pk, Message::GcSetup(Box::new(setup)))? {
            Message::OtReceiverMsg(m) => m,
            other => {
                return Err(ProtocolError::unexpected(
                    MessageKind::OtReceiverMsg,
                    &other,
                ))
            }
        };
        let payloads: Vec<(Vec<u8>, Vec<u8>)> = secrets
            .evaluator_inputs
            .iter()
            .map(|p| (p.zero.to_bytes().to_vec(), p.one.to_bytes().to_vec()))
            .collect();
        let responses = sender.respond(&ot_msgs, &payloads)?;
        let out = match link.call(&pk, Message::OtSenderMsg(responses))? {
            Message::GarbledOutput(labels) => labels,
            other => {
                return Err(ProtocolError::unexpected(
                    MessageKind::GarbledOutput,
                    &other,
                ))
            }
        };
        let index = decode_index(&secrets.decode(&out)?);
        if index >= c {
            return Err(ProtocolError::Malformed("decoded class index out of range"));
        }
        Ok(index)
    }

    /// Kernel and class-sum phases only: the encrypted score vector `E(A_k)`.
    pub fn encrypted_scores(
        &mut self,
        link: &mut Link,
        query: &[Ciphertext],
    ) -> Result<Vec<Ciphertext>, ProtocolError> {
        self.record = MaskRecord::default();
        self.kernel_values(link, query)?;
        self.class_scores(link)
    }

    /// Full classification of an encrypted query.
    pub fn classify(
        &mut self,
        link: &mut Link,
        query: &[Ciphertext],
    ) -> Result<usize, ProtocolError> {
        self.record = MaskRecord::default();
        self.kernel_values(link, query)?;
        let scores = self.class_scores(link)?;
        self.garbled_argmax(link, &scores)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditPhase {
    SquaredDistance,
    KernelDistance,
    MaskedScore,
}

/// One decryption performed by the CSP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspAuditEntry {
    pub phase: AuditPhase,
    pub index: usize,
    pub ciphertext: Integer,
    pub plaintext: Integer,
}

struct EvalState {
    circuit: GarbledCircuit,
    generator_labels: Vec<WireLabel>,
    receiver: OtReceiver,
}

pub struct Csp {
    sk: SecretKey,
    params: FixedPointParams,
    rng: ChaCha20Rng,
    audit: Vec<CspAuditEntry>,
    kernels: Option<Vec<Integer>>,
    eval: Option<EvalState>,
}

impl Csp {
    pub fn new(sk: SecretKey, params: FixedPointParams, rng: ChaCha20Rng) -> Self {
        Self {
            sk,
            params,
            rng,
            audit: Vec::new(),
            kernels: None,
            eval: None,
        }
    }

    pub fn public_key(&self) -> &PublicKey {
        self.sk.public_key()
    }

    /// Every plaintext this party has seen, in order.
    pub fn audit_log(&self) -> &[CspAuditEntry] {
        &self.audit
    }

    /// Drains the audit log.
    pub fn take_audit_log(&mut self) -> Vec<CspAuditEntry> {
        std::mem::take(&mut self.audit)
    }

    /// Quantized kernels from the latest kernel phase.
    pub fn last_kernels(&self) -> Option<&[Integer]> {
        self.kernels.as_deref()
    }

    fn open(
        &mut self,
        phase: AuditPhase,
        index: usize,
        c: &Ciphertext,
    ) -> Result<Integer, ProtocolError> {
        let plaintext = self.sk.decrypt(c)?;
        self.audit.push(CspAuditEntry {
            phase,
            index,
            ciphertext: c.value().clone(),
            plaintext: plaintext.clone(),
        });
        Ok(plaintext)
    }

    pub fn handle(&mut self, msg: Message) -> Result<Message, ProtocolError> {
        let pk = self.sk.public_key().clone();
        match msg {
            Message::SqDistMasked(ys) => {
                let mut out = Vec::with_capacity(ys.len());
                for (i, y) in ys.iter().enumerate() {
                    let v = self.open(AuditPhase::SquaredDistance, i, y)?;
                    let sq = Integer::from(v.square_ref()) % pk.n();
                    out.push(pk.encrypt(&sq, &mut self.rng)?);
                }
                Ok(Message::SqDistSquared(out))
            }
            Message::KernelMasked(es) => {
                let mut kernels = Vec::with_capacity(es.len());
                for (i, e) in es.iter().enumerate() {
                    let t = self.open(AuditPhase::KernelDistance, i, e)?;
                    kernels.push(self.params.kernel_of_sq_dist(&t)?);
                }
                self.kernels = Some(kernels);
                Ok(Message::KernelAck)
            }
            Message::ClassMasked { classes, values } => {
                let c = classes as usize;
                let kernels = self
                    .kernels
                    .as_ref()
                    .ok_or(ProtocolError::OutOfOrder("class vectors before kernels"))?;
                if c == 0 || values.len() != kernels.len() * c {
                    return Err(ProtocolError::Malformed("class vector count"));
                }
                let mut out = Vec::with_capacity(values.len());
                for (idx, v) in values.iter().enumerate() {
                    let scaled = pk.hom_scale(v, &kernels[idx / c])?;
                    let fresh = pk.encrypt(&Integer::new(), &mut self.rng)?;
                    out.push(pk.hom_add(&scaled, &fresh)?);
                }
                Ok(Message::ClassScaled(out))
            }
            Message::GcSetup(setup) => {
                let width = setup.width as usize;
                let mut inputs = Vec::with_capacity(setup.masked_sums.len());
                for (k, ct) in setup.masked_sums.iter().enumerate() {
                    let v = self.open(AuditPhase::MaskedScore, k, ct)?;
                    if v.significant_bits() as usize > width {
                        return Err(ProtocolError::Headroom {
                            width: setup.width,
                            modulus_bits: pk.n().significant_bits(),
                        });
                    }
                    inputs.push(v);
                }
                let choices = encode_values(&inputs, width);
                if choices.len() != setup.circuit.circuit.evaluator_inputs.len() {
                    return Err(ProtocolError::Malformed("evaluator input width"));
                }
                let (receiver, msgs) =
                    OtReceiver::new(setup.ot_kind, &setup.ot_setup, &choices, &mut self.rng)?;
                let setup = *setup;
                self.eval = Some(EvalState {
                    circuit: setup.circuit,
                    generator_labels: setup.generator_labels,
                    receiver,
                });
                Ok(Message::OtReceiverMsg(msgs))
            }
            Message::OtSenderMsg(responses) => {
                let state = self
                    .eval
                    .take()
                    .ok_or(ProtocolError::OutOfOrder("OT response before setup"))?;
                let labels = state
                    .receiver
                    .finish(&responses)?
                    .iter()
                    .map(|b| WireLabel::from_bytes(b))
                    .collect::<Result<Vec<_>, _>>()?;
                let out = evaluate(&state.circuit, &state.generator_labels, &labels)?;
                Ok(Message::GarbledOutput(out))
            }
            other => Err(ProtocolError::unexpected(MessageKind::SqDistMasked, &other)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::FixedPointConfig;
    use crate::math::seeded_rng;
    use crate::paillier::keygen;
    use std::sync::OnceLock;

    fn keys() -> &'static (PublicKey, SecretKey) {
        static KEYS: OnceLock<(PublicKey, SecretKey)> = OnceLock::new();
        KEYS.get_or_init(|| keygen(1024, &mut seeded_rng(21)).unwrap())
    }

    fn params(m: usize, c: usize) -> FixedPointParams {
        let cfg = FixedPointConfig {
            f: 160,
            f_corr: 160,
            ..FixedPointConfig::defaults(m, c, 64)
        };
        FixedPointParams::new(cfg, keys().0.n()).unwrap()
    }

    fn setup(m: usize, c: usize, options: HostOptions) -> (DataHost, Link) {
        let (pk, sk) = keys().clone();
        let p = params(m, c);
        let host = DataHost::new(pk, p.clone(), seeded_rng(1), options);
        let link = Link::in_process(Csp::new(sk, p, seeded_rng(2)));
        (host, link)
    }

    fn enc(v: &[i64]) -> Vec<Ciphertext> {
        let pk = &keys().0;
        let mut rng = seeded_rng(3);
        v.iter()
            .map(|x| pk.encrypt_signed(&Integer::from(*x), &mut rng).unwrap())
            .collect()
    }

    #[test]
    fn squared_dist_small_cases() {
        let (mut host, mut link) = setup(2, 2, HostOptions::default());
        let sk = &keys().1;
        let a = enc(&[7, -2]);
        let same = host.squared_dist(&mut link, &a, &a).unwrap();
        assert_eq!(sk.decrypt(&same).unwrap(), 0);
        let d = host
            .squared_dist(&mut link, &enc(&[0, 0]), &enc(&[3, 4]))
            .unwrap();
        assert_eq!(sk.decrypt(&d).unwrap(), 25);
    }

    #[test]
    fn squared_dist_rejects_ragged_input() {
        let (mut host, mut link) = setup(2, 2, HostOptions::default());
        let err = host
            .squared_dist(&mut link, &enc(&[1, 2]), &enc(&[1]))
            .unwrap_err();
        assert!(matches!(err, ProtocolError::Dimension { .. }));
    }

    #[test]
    fn invertible_matrix_round_trips() {
        let n = keys().0.n();
        let mut rng = seeded_rng(4);
        let (u, u_inv) = random_invertible_matrix(1, n, &mut rng);
        assert_eq!(u.mul(&u_inv, n), ModMatrix::identity(1));
        let (b, b_inv) = random_invertible_matrix(4, n, &mut rng);
        assert_eq!(b.mul(&b_inv, n), ModMatrix::identity(4));
        assert_eq!(b_inv.mul(&b, n), ModMatrix::identity(4));
    }

    #[test]
    fn matrix_mask_unmasks_basis_vector() {
        let (pk, sk) = keys();
        let mut rng = seeded_rng(5);
        let basis = enc(&[0, 0, 1]);
        let (b, b_inv) = random_invertible_matrix(3, pk.n(), &mut rng);
        let masked: Vec<Ciphertext> = (0..3)
            .map(|j| {
                let row: Vec<Integer> = (0..3).map(|k| b.get(j, k).clone()).collect();
                linear_combination(pk, &basis, &row).unwrap()
            })
            .collect();
        for k in 0..3 {
            let row: Vec<Integer> = (0..3).map(|j| b_inv.get(k, j).clone()).collect();
            let back = linear_combination(pk, &masked, &row).unwrap();
            assert_eq!(sk.decrypt(&back).unwrap(), (k == 2) as u32);
        }
    }

    #[test]
    fn submit_tuple_round_trips_and_rerandomizes() {
        let (pk, sk) = keys();
        let p = params(2, 3);
        let mut rng = seeded_rng(6);
        let t = DataTuple::new(vec![0.5, 1.0], 2);
        let a = submit_tuple(9, &t, pk, &p, &mut rng).unwrap();
        let b = submit_tuple(9, &t, pk, &p, &mut rng).unwrap();
        let feats: Vec<Integer> = a
            .enc_features
            .iter()
            .map(|c| sk.decrypt(c).unwrap())
            .collect();
        assert_eq!(feats, vec![Integer::from(2048), Integer::from(4096)]);
        let class: Vec<Integer> = a.enc_class.iter().map(|c| sk.decrypt(c).unwrap()).collect();
        assert_eq!(
            class,
            vec![Integer::from(0), Integer::from(0), Integer::from(1)]
        );
        assert_ne!(a.enc_features, b.enc_features);
        assert!(submit_tuple(9, &DataTuple::new(vec![1.5, 0.0], 0), pk, &p, &mut rng).is_err());
        assert!(submit_tuple(9, &DataTuple::new(vec![0.5, 0.0], 3), pk, &p, &mut rng).is_err());
    }

    #[test]
    fn zero_distance_kernel_is_the_peak() {
        let options = HostOptions {
            zero_kernel_masks: true,
            ..HostOptions::default()
        };
        let (mut host, mut link) = setup(2, 2, options);
        let (pk, _) = keys();
        let mut rng = seeded_rng(7);
        let t = DataTuple::new(vec![0.25, 0.75], 1);
        host.accept(submit_tuple(0, &t, pk, host.params(), &mut rng).unwrap())
            .unwrap();
        let q = encrypt_query(&[0.25, 0.75], pk, host.params(), &mut rng).unwrap();
        host.kernel_values(&mut link, &q).unwrap();
        let expect = host.params().max_kernel();
        assert_eq!(link.csp().unwrap().last_kernels().unwrap(), &[expect]);
    }

    #[test]
    fn single_tuple_store_returns_its_class() {
        let (mut host, mut link) = setup(2, 2, HostOptions::default());
        let (pk, _) = keys();
        let mut rng = seeded_rng(8);
        let t = DataTuple::new(vec![0.1, 0.9], 1);
        host.accept(submit_tuple(0, &t, pk, host.params(), &mut rng).unwrap())
            .unwrap();
        let q = encrypt_query(&[0.3, 0.3], pk, host.params(), &mut rng).unwrap();
        assert_eq!(host.classify(&mut link, &q).unwrap(), 1);
    }

    #[test]
    fn empty_store_and_capacity_are_errors() {
        let (mut host, mut link) = setup(1, 2, HostOptions::default());
        let (pk, _) = keys();
        let mut rng = seeded_rng(9);
        let q = encrypt_query(&[0.3], pk, host.params(), &mut rng).unwrap();
        assert!(matches!(
            host.classify(&mut link, &q),
            Err(ProtocolError::EmptyStore)
        ));
        let t = DataTuple::new(vec![0.5], 0);
        for i in 0..64 {
            host.accept(submit_tuple(i, &t, pk, host.params(), &mut rng).unwrap())
                .unwrap();
        }
        let extra = submit_tuple(64, &t, pk, host.params(), &mut rng).unwrap();
        assert!(matches!(
            host.accept(extra),
            Err(ProtocolError::Capacity(64))
        ));
        assert_eq!(host.remove_owner(3), 1);
        assert_eq!(host.store().len(), 63);
    }

    #[test]
    fn csp_rejects_out_of_order_messages() {
        let (_, sk) = keys().clone();
        let mut csp = Csp::new(sk, params(1, 2), seeded_rng(10));
        let err = csp
            .handle(Message::ClassMasked {
                classes: 2,
                values: enc(&[1, 0]),
            })
            .unwrap_err();
        assert!(matches!(err, ProtocolError::OutOfOrder(_)));
        assert!(csp.handle(Message::OtSenderMsg(Vec::new())).is_err());
        assert!(csp.handle(Message::KernelAck).is_err());
    }
}
