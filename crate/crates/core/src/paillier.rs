//! Paillier cryptosystem with `g = n + 1` and CRT decryption.
//!
//! Plaintexts live in `Z_n`. Signed values use the usual centred convention:
//! a residue `m` with `2m >= n` stands for `m - n`.

use crate::codec::{self, CodecError, Tagged};
use crate::math::random_unit;
use rand::{CryptoRng, RngCore};
use rug::integer::IsPrime;
use rug::ops::RemRounding;
use rug::Integer;
use sha2::{Digest, Sha256};
use std::cmp::Ordering;
use thiserror::Error;

pub const MIN_KEY_BITS: u32 = 1024;

const TAG_PUBLIC_KEY: u8 = 0x50;
const TAG_SECRET_KEY: u8 = 0x53;
const TAG_CIPHERTEXT: u8 = 0x43;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PaillierError {
    #[error("key size {0} rejected: must be even and at least {MIN_KEY_BITS}")]
    KeySize(u32),
    #[error("plaintext outside [0, n)")]
    PlaintextRange,
    #[error("ciphertext bound to key {found:016x}, expected {expected:016x}")]
    KeyMismatch { expected: u64, found: u64 },
    #[error("ciphertext is not a unit modulo n^2")]
    NotUnit,
    #[error("malformed key material: {0}")]
    MalformedKey(&'static str),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Binding between a ciphertext and the key it was produced under.
pub type KeyId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    n: Integer,
    n_squared: Integer,
    g: Integer,
    key_bits: u32,
    id: KeyId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey {
    public: PublicKey,
    p: Integer,
    q: Integer,
    p_squared: Integer,
    q_squared: Integer,
    hp: Integer,
    hq: Integer,
    q_inv_p: Integer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    value: Integer,
    key_id: KeyId,
}

fn key_id_of(n: &Integer) -> KeyId {
    let digest = Sha256::digest(codec::integer_to_bytes(n));
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}

fn random_prime<R: RngCore + ?Sized>(rng: &mut R, bits: u32) -> Integer {
    loop {
        let mut candidate = crate::math::random_bits(rng, bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        let prime = candidate.next_prime();
        if prime.significant_bits() == bits {
            return prime;
        }
    }
}

/// Generates a key pair with two balanced primes of `key_bits / 2` bits each.
///
/// The randomness source decides reproducibility: pass a seeded generator for
/// deterministic test keys and [`crate::math::secure_rng`] otherwise.
pub fn keygen<R: RngCore + CryptoRng + ?Sized>(
    key_bits: u32,
    rng: &mut R,
) -> Result<(PublicKey, SecretKey), PaillierError> {
    if key_bits < MIN_KEY_BITS || !key_bits.is_multiple_of(2) {
        return Err(PaillierError::KeySize(key_bits));
    }
    let half = key_bits / 2;
    loop {
        let p = random_prime(rng, half);
        let q = random_prime(rng, half);
        if p == q {
            continue;
        }
        // Top two bits set on both factors forces the product to full length.
        let n = Integer::from(&p * &q);
        debug_assert_eq!(n.significant_bits(), key_bits);
        let phi = Integer::from(&p - 1u32) * Integer::from(&q - 1u32);
        if Integer::from(n.gcd_ref(&phi)) != 1 {
            continue;
        }
        let sk = SecretKey::from_primes(p, q)?;
        return Ok((sk.public.clone(), sk));
    }
}

impl PublicKey {
    pub fn from_modulus(n: Integer) -> Result<Self, PaillierError> {
        let key_bits = n.significant_bits();
        if key_bits < MIN_KEY_BITS || !key_bits.is_multiple_of(2) || n.is_even() {
            return Err(PaillierError::MalformedKey("modulus size or parity"));
        }
        let n_squared = Integer::from(n.square_ref());
        let g = Integer::from(&n + 1u32);
        let id = key_id_of(&n);
        Ok(Self {
            n,
            n_squared,
            g,
            key_bits,
            id,
        })
    }

    pub fn n(&self) -> &Integer {
        &self.n
    }

    pub fn n_squared(&self) -> &Integer {
        &self.n_squared
    }

    pub fn g(&self) -> &Integer {
        &self.g
    }

    pub fn key_bits(&self) -> u32 {
        self.key_bits
    }

    pub fn id(&self) -> KeyId {
        self.id
    }

    /// Byte length of the serialized modulus; ciphertexts use twice this.
    pub fn modulus_bytes(&self) -> usize {
        self.key_bits.div_ceil(8) as usize
    }

    pub fn encrypt<R: RngCore + CryptoRng + ?Sized>(
        &self,
        plaintext: &Integer,
        rng: &mut R,
    ) -> Result<Ciphertext, PaillierError> {
        if plaintext.cmp0() == Ordering::Less || plaintext >= &self.n {
            return Err(PaillierError::PlaintextRange);
        }
        let r = random_unit(rng, &self.n);
        let rn = r
            .pow_mod(&self.n, &self.n_squared)
            .expect("modulus is positive");
        // g^m = 1 + m n (mod n^2) for g = n + 1.
        let gm = Integer::from(plaintext * &self.n) + 1u32;
        let value = (gm * rn) % &self.n_squared;
        Ok(Ciphertext {
            value,
            key_id: self.id,
        })
    }

    /// Encrypts a signed value using the centred encoding.
    pub fn encrypt_signed<R: RngCore + CryptoRng + ?Sized>(
        &self,
        value: &Integer,
        rng: &mut R,
    ) -> Result<Ciphertext, PaillierError> {
        self.encrypt(&self.encode_signed(value), rng)
    }

    pub fn encode_signed(&self, value: &Integer) -> Integer {
        value.clone().rem_euc(&self.n)
    }

    pub fn decode_signed(&self, residue: &Integer) -> Integer {
        if Integer::from(residue << 1u32) >= self.n {
            Integer::from(residue - &self.n)
        } else {
            residue.clone()
        }
    }

    fn check(&self, c: &Ciphertext) -> Result<(), PaillierError> {
        if c.key_id != self.id {
            return Err(PaillierError::KeyMismatch {
                expected: self.id,
                found: c.key_id,
            });
        }
        Ok(())
    }

    /// `E(a) * E(b) mod n^2`, decrypting to `a + b mod n`.
    pub fn hom_add(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext, PaillierError> {
        self.check(c1)?;
        self.check(c2)?;
        Ok(Ciphertext {
            value: Integer::from(&c1.value * &c2.value) % &self.n_squared,
            key_id: self.id,
        })
    }

    /// `E(a)^k mod n^2`, decrypting to `a k mod n`. Negative `k` goes through
    /// the inverse ciphertext whenever that gives the shorter exponent.
    pub fn hom_scale(&self, c: &Ciphertext, k: &Integer) -> Result<Ciphertext, PaillierError> {
        self.check(c)?;
        let k = k.clone().rem_euc(&self.n);
        let complement = Integer::from(&self.n - &k);
        let value = if complement < k {
            let inv = c
                .value
                .clone()
                .invert(&self.n_squared)
                .map_err(|_| PaillierError::NotUnit)?;
            inv.pow_mod(&complement, &self.n_squared).unwrap()
        } else {
            c.value.clone().pow_mod(&k, &self.n_squared).unwrap()
        };
        Ok(Ciphertext {
            value,
            key_id: self.id,
        })
    }

    pub fn hom_neg(&self, c: &Ciphertext) -> Result<Ciphertext, PaillierError> {
        self.hom_scale(c, &Integer::from(-1))
    }

    /// Serialized as tag `0x50`: `[key_bits (u32 BE), n]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        Tagged::new(
            TAG_PUBLIC_KEY,
            vec![
                self.key_bits.to_be_bytes().to_vec(),
                codec::integer_to_bytes(&self.n),
            ],
        )
        .encode()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PaillierError> {
        let t = Tagged::decode(bytes)?;
        t.expect_tag(TAG_PUBLIC_KEY)?;
        t.expect_count(2)?;
        let bits = codec::u32_from_field(&t.payloads[0])?;
        let pk = Self::from_modulus(codec::integer_from_bytes(&t.payloads[1]))?;
        if pk.key_bits != bits {
            return Err(PaillierError::MalformedKey(
                "declared size differs from modulus",
            ));
        }
        Ok(pk)
    }
}

fn l_function(x: &Integer, d: &Integer) -> Integer {
    Integer::from(x - 1u32) / d
}

impl SecretKey {
    pub fn from_primes(p: Integer, q: Integer) -> Result<Self, PaillierError> {
        if p == q
            || p.is_probably_prime(30) == IsPrime::No
            || q.is_probably_prime(30) == IsPrime::No
        {
            return Err(PaillierError::MalformedKey(
                "factors must be distinct primes",
            ));
        }
        let public = PublicKey::from_modulus(Integer::from(&p * &q))?;
        let p_squared = Integer::from(p.square_ref());
        let q_squared = Integer::from(q.square_ref());
        let h = |prime: &Integer, prime_sq: &Integer| -> Result<Integer, PaillierError> {
            let exp = Integer::from(prime - 1u32);
            let gp = Integer::from(public.g() % prime_sq)
                .pow_mod(&exp, prime_sq)
                .unwrap();
            l_function(&gp, prime)
                .invert(prime)
                .map_err(|_| PaillierError::MalformedKey("generator has no inverse"))
        };
        let hp = h(&p, &p_squared)?;
        let hq = h(&q, &q_squared)?;
        let q_inv_p = q
            .clone()
            .invert(&p)
            .map_err(|_| PaillierError::MalformedKey("factors not coprime"))?;
        Ok(Self {
            public,
            p,
            q,
            p_squared,
            q_squared,
            hp,
            hq,
            q_inv_p,
        })
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public
    }

    pub fn decrypt(&self, c: &Ciphertext) -> Result<Integer, PaillierError> {
        self.public.check(c)?;
        if c.value.cmp0() != Ordering::Greater
            || c.value >= self.public.n_squared
            || Integer::from(c.value.gcd_ref(&self.public.n)) != 1
        {
            return Err(PaillierError::NotUnit);
        }
        let half = |prime: &Integer, prime_sq: &Integer, h: &Integer| {
            let exp = Integer::from(prime - 1u32);
            let x = Integer::from(&c.value % prime_sq)
                .pow_mod(&exp, prime_sq)
                .unwrap();
            (l_function(&x, prime) * h) % prime
        };
        let mp = half(&self.p, &self.p_squared, &self.hp);
        let mq = half(&self.q, &self.q_squared, &self.hq);
        let diff = Integer::from(&mp - &mq) * &self.q_inv_p;
        let t = diff.rem_euc(&self.p);
        Ok(mq + t * &self.q)
    }

    pub fn decrypt_signed(&self, c: &Ciphertext) -> Result<Integer, PaillierError> {
        Ok(self.public.decode_signed(&self.decrypt(c)?))
    }

    /// Serialized as tag `0x53`: `[key_bits (u32 BE), p, q]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        Tagged::new(
            TAG_SECRET_KEY,
            vec![
                self.public.key_bits.to_be_bytes().to_vec(),
                codec::integer_to_bytes(&self.p),
                codec::integer_to_bytes(&self.q),
            ],
        )
        .encode()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PaillierError> {
        let t = Tagged::decode(bytes)?;
        t.expect_tag(TAG_SECRET_KEY)?;
        t.expect_count(3)?;
        let bits = codec::u32_from_field(&t.payloads[0])?;
        let sk = Self::from_primes(
            codec::integer_from_bytes(&t.payloads[1]),
            codec::integer_from_bytes(&t.payloads[2]),
        )?;
        if sk.public.key_bits != bits {
            return Err(PaillierError::MalformedKey(
                "declared size differs from modulus",
            ));
        }
        Ok(sk)
    }
}

impl Ciphertext {
    pub fn value(&self) -> &Integer {
        &self.value
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }

    /// Raw value bytes, fixed at twice the modulus length.
    pub fn value_bytes(&self, pk: &PublicKey) -> Result<Vec<u8>, PaillierError> {
        pk.check(self)?;
        Ok(codec::integer_to_fixed_bytes(
            &self.value,
            2 * pk.modulus_bytes(),
        )?)
    }

    pub fn from_value_bytes(pk: &PublicKey, bytes: &[u8]) -> Result<Self, PaillierError> {
        let width = 2 * pk.modulus_bytes();
        if bytes.len() != width {
            return Err(CodecError::FieldLength {
                expected: width,
                found: bytes.len(),
            }
            .into());
        }
        let value = codec::integer_from_bytes(bytes);
        if value >= *pk.n_squared() {
            return Err(PaillierError::NotUnit);
        }
        Ok(Self {
            value,
            key_id: pk.id,
        })
    }

    /// Serialized as tag `0x43`: `[key_id (u64 BE), value (2 x modulus bytes)]`.
    pub fn to_bytes(&self, pk: &PublicKey) -> Result<Vec<u8>, PaillierError> {
        Ok(Tagged::new(
            TAG_CIPHERTEXT,
            vec![self.key_id.to_be_bytes().to_vec(), self.value_bytes(pk)?],
        )
        .encode())
    }

    pub fn from_bytes(pk: &PublicKey, bytes: &[u8]) -> Result<Self, PaillierError> {
        let t = Tagged::decode(bytes)?;
        t.expect_tag(TAG_CIPHERTEXT)?;
        t.expect_count(2)?;
        let key_id = codec::u64_from_field(&t.payloads[0])?;
        if key_id != pk.id {
            return Err(PaillierError::KeyMismatch {
                expected: pk.id,
                found: key_id,
            });
        }
        Self::from_value_bytes(pk, &t.payloads[1])
    }
}
