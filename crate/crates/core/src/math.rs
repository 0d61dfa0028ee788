//! Small big-integer helpers: uniform sampling, modular linear algebra and
//! round-half-away-from-zero shifting.

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rug::integer::Order;
use rug::ops::RemRounding;
use rug::Integer;
use std::cmp::Ordering;

/// Deterministic generator for tests and reproducible runs.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Generator seeded from the operating system.
pub fn secure_rng() -> ChaCha20Rng {
    ChaCha20Rng::from_entropy()
}

/// Derives an independent child generator (one per party) from a parent.
pub fn fork_rng<R: RngCore>(parent: &mut R) -> ChaCha20Rng {
    let mut seed = [0u8; 32];
    parent.fill_bytes(&mut seed);
    ChaCha20Rng::from_seed(seed)
}

/// Uniform integer in `[0, 2^bits)`.
pub fn random_bits<R: RngCore + ?Sized>(rng: &mut R, bits: u32) -> Integer {
    if bits == 0 {
        return Integer::new();
    }
    let nbytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    let excess = nbytes as u32 * 8 - bits;
    buf[0] &= 0xffu8 >> excess;
    Integer::from_digits(&buf, Order::Msf)
}

/// Uniform integer in `[0, bound)` by rejection sampling.
pub fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &Integer) -> Integer {
    assert!(bound.cmp0() == Ordering::Greater, "empty sampling range");
    let bits = Integer::from(bound - 1u32).significant_bits();
    loop {
        let candidate = random_bits(rng, bits);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniform unit of `Z_n`.
pub fn random_unit<R: RngCore + CryptoRng + ?Sized>(rng: &mut R, n: &Integer) -> Integer {
    loop {
        let r = random_below(rng, n);
        if r.cmp0() != Ordering::Equal && Integer::from(r.gcd_ref(n)) == 1 {
            return r;
        }
    }
}

/// `round(value / 2^shift)` with ties away from zero; negative `shift`
/// multiplies instead.
pub fn round_shift(value: &Integer, shift: i64) -> Integer {
    if shift <= 0 {
        return Integer::from(value << (-shift) as u32);
    }
    let shift = shift as u32;
    let half = Integer::from(1) << (shift - 1);
    if value.cmp0() == Ordering::Less {
        let mag = Integer::from(-value);
        -((mag + &half) >> shift)
    } else {
        Integer::from(value + &half) >> shift
    }
}

/// Square matrix over `Z_n`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModMatrix {
    pub size: usize,
    pub entries: Vec<Integer>,
}

impl ModMatrix {
    pub fn identity(size: usize) -> Self {
        let mut entries = vec![Integer::new(); size * size];
        for i in 0..size {
            entries[i * size + i] = Integer::from(1);
        }
        Self { size, entries }
    }

    pub fn get(&self, row: usize, col: usize) -> &Integer {
        &self.entries[row * self.size + col]
    }

    pub fn mul(&self, other: &Self, n: &Integer) -> Self {
        assert_eq!(self.size, other.size);
        let s = self.size;
        let mut entries = Vec::with_capacity(s * s);
        for i in 0..s {
            for j in 0..s {
                let mut acc = Integer::new();
                for k in 0..s {
                    acc += Integer::from(self.get(i, k) * other.get(k, j));
                }
                entries.push(acc.rem_euc(n));
            }
        }
        Self { size: s, entries }
    }

    /// Gauss-Jordan inverse mod `n`. Returns `None` when some pivot column has
    /// no unit entry (the matrix is singular or shares a factor with `n`).
    pub fn inverse(&self, n: &Integer) -> Option<Self> {
        let s = self.size;
        let mut a: Vec<Integer> = self.entries.clone();
        let mut inv = Self::identity(s).entries;
        for col in 0..s {
            let pivot = (col..s).find(|&r| Integer::from(a[r * s + col].gcd_ref(n)) == 1)?;
            if pivot != col {
                for j in 0..s {
                    a.swap(pivot * s + j, col * s + j);
                    inv.swap(pivot * s + j, col * s + j);
                }
            }
            let p_inv = a[col * s + col].clone().invert(n).ok()?;
            for j in 0..s {
                a[col * s + j] = Integer::from(&a[col * s + j] * &p_inv).rem_euc(n);
                inv[col * s + j] = Integer::from(&inv[col * s + j] * &p_inv).rem_euc(n);
            }
            for r in 0..s {
                if r == col || a[r * s + col].cmp0() == Ordering::Equal {
                    continue;
                }
                let factor = a[r * s + col].clone();
                for j in 0..s {
                    let da = Integer::from(&factor * &a[col * s + j]);
                    a[r * s + j] = (&a[r * s + j] - da).rem_euc(n);
                    let di = Integer::from(&factor * &inv[col * s + j]);
                    inv[r * s + j] = (&inv[r * s + j] - di).rem_euc(n);
                }
            }
        }
        Some(Self {
            size: s,
            entries: inv,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_shift_ties_away_from_zero() {
        assert_eq!(round_shift(&Integer::from(3), 1), 2); // 1.5 -> 2
        assert_eq!(round_shift(&Integer::from(-3), 1), -2); // -1.5 -> -2
        assert_eq!(round_shift(&Integer::from(5), 2), 1); // 1.25 -> 1
        assert_eq!(round_shift(&Integer::from(6), 2), 2); // 1.5 -> 2
        assert_eq!(round_shift(&Integer::from(7), -3), 56);
    }

    #[test]
    fn random_below_stays_in_range() {
        let mut rng = seeded_rng(1);
        let bound = Integer::from(1000);
        let mut seen_high = false;
        for _ in 0..2000 {
            let v = random_below(&mut rng, &bound);
            assert!((0..1000).contains(&v));
            seen_high |= v > 900;
        }
        assert!(seen_high);
    }

    #[test]
    fn small_matrix_inverse() {
        let n = Integer::from(101);
        let m = ModMatrix {
            size: 2,
            entries: vec![2.into(), 3.into(), 5.into(), 7.into()],
        };
        let inv = m.inverse(&n).unwrap();
        assert_eq!(m.mul(&inv, &n), ModMatrix::identity(2));
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let n = Integer::from(101);
        let m = ModMatrix {
            size: 2,
            entries: vec![1.into(), 2.into(), 2.into(), 4.into()],
        };
        assert!(m.inverse(&n).is_none());
    }
}
