//! Quantization of features, kernel values and correction factors, plus the
//! integer-series exponential that keeps kernel math exact far below the
//! range of machine doubles.
//!
//! Rounding is half-away-from-zero throughout.

use crate::math::round_shift;
use rug::ops::DivRounding;
use rug::Integer;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixedPointError {
    #[error("feature {0} outside [0, 1]")]
    FeatureRange(f64),
    #[error("kernel value {0} must be positive and finite")]
    KernelRange(f64),
    #[error("mask {0} outside [0, B)")]
    MaskRange(Integer),
    #[error("masked squared distance {0} outside [0, D_max + B)")]
    DistanceRange(Integer),
    #[error("sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("invalid parameters: {0}")]
    Invalid(&'static str),
    #[error("precision: F = {have} but at least {need} kernel bits are required")]
    Precision { have: u32, need: u64 },
    #[error("headroom: worst-case sums need {need} bits, modulus leaves {have}")]
    Headroom { need: u32, have: u32 },
}

/// `mantissa * 2^exponent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtReal {
    pub mantissa: Integer,
    pub exponent: i64,
}

impl ExtReal {
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            mantissa: Integer::from(&self.mantissa * &other.mantissa),
            exponent: self.exponent + other.exponent,
        }
    }

    /// `round(value * 2^frac_bits)`.
    pub fn to_scaled(&self, frac_bits: u32) -> Integer {
        round_shift(&self.mantissa, -(self.exponent + frac_bits as i64))
    }

    pub fn ceil(&self) -> Integer {
        if self.exponent >= 0 {
            return Integer::from(&self.mantissa << self.exponent as u32);
        }
        let shift = (-self.exponent) as u32;
        let floor = Integer::from(&self.mantissa >> shift);
        if Integer::from(&floor << shift) == self.mantissa {
            floor
        } else {
            floor + 1u32
        }
    }

    /// Lossy; for diagnostics and float cross-checks only.
    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.significant_bits() as i64;
        let keep = 60.min(bits);
        let top = Integer::from(&self.mantissa >> (bits - keep) as u32).to_f64();
        let exp = self.exponent + bits - keep;
        top * 2f64.powi(exp.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
    }
}

/// Splits a finite positive double into `(odd mantissa, exponent)` with
/// `x = mantissa * 2^exponent` exactly.
pub fn decompose_f64(x: f64) -> (u64, i64) {
    assert!(x.is_finite() && x > 0.0);
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    let tz = mant.trailing_zeros();
    mant >>= tz;
    exp += tz as i64;
    (mant, exp)
}

/// `ln 2 * 2^bits` (error below one unit), from `sum 1 / (i 2^i)`.
pub fn ln2_fixed(bits: u32) -> Integer {
    let guard = 32;
    let b = bits + guard;
    let mut sum = Integer::new();
    for i in 1..=b {
        sum += (Integer::from(1) << (b - i)) / i;
    }
    sum >> guard
}

fn arctan_inv(x: u32, bits: u32) -> Integer {
    let x_sq = Integer::from(x) * x;
    let mut power = (Integer::from(1) << bits) / x;
    let mut sum = Integer::new();
    let mut k = 0u32;
    while power.cmp0() != Ordering::Equal {
        let term = Integer::from(&power / (2 * k + 1));
        if k.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x_sq;
        k += 1;
    }
    sum
}

/// `pi * 2^bits` (error below one unit), by Machin's formula.
pub fn pi_fixed(bits: u32) -> Integer {
    let guard = 32;
    let b = bits + guard;
    let pi = arctan_inv(5, b) * 16u32 - arctan_inv(239, b) * 4u32;
    pi >> guard
}

/// Exponentials of rationals with a cached `ln 2`.
#[derive(Debug, Clone)]
pub struct ExpEngine {
    work: u32,
    ln2_hi: Integer,
    sqrt_2pi: Integer,
}

const LN2_EXTRA: u32 = 40;

impl ExpEngine {
    /// Results carry relative error well below `2^-precision`.
    pub fn new(precision: u32) -> Self {
        let work = precision + 128;
        let ln2_hi = ln2_fixed(work + LN2_EXTRA);
        let two_pi = pi_fixed(2 * work) << 1u32;
        let sqrt_2pi = two_pi.sqrt();
        Self {
            work,
            ln2_hi,
            sqrt_2pi,
        }
    }

    /// `e^(num / den)` for `den > 0`.
    pub fn exp_ratio(&self, num: &Integer, den: &Integer) -> ExtReal {
        assert!(den.cmp0() == Ordering::Greater);
        let w = self.work;
        let x = Integer::from(num << w).div_floor(den);
        let x_hi = x << LN2_EXTRA;
        let (k, r_hi) = x_hi.div_rem_floor(self.ln2_hi.clone());
        let k = k.to_i64().expect("exponent argument out of range");
        let r = r_hi >> LN2_EXTRA;
        let one = Integer::from(1) << w;
        let mut sum = one.clone();
        let mut term = one;
        let mut i = 1u32;
        loop {
            term *= &r;
            term >>= w;
            term /= i;
            if term.cmp0() == Ordering::Equal {
                break;
            }
            sum += &term;
            i += 1;
        }
        ExtReal {
            mantissa: sum,
            exponent: k - w as i64,
        }
    }

    /// `1 / (sigma sqrt(2 pi))`.
    pub fn gaussian_peak(&self, sigma: f64) -> ExtReal {
        let (sm, se) = decompose_f64(sigma);
        let w = self.work;
        let num = Integer::from(1) << (2 * w);
        let den = Integer::from(&self.sqrt_2pi * sm);
        ExtReal {
            mantissa: num / den,
            exponent: -(w as i64) - se,
        }
    }
}

/// `round(x * 2^s)` for a feature in `[0, 1]`.
pub fn quantize_feature(x: f64, s: u32) -> Result<i64, FixedPointError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(FixedPointError::FeatureRange(x));
    }
    Ok((x * (1u64 << s) as f64).round() as i64)
}

/// `round(g * 2^frac_bits)`, exact for any positive double.
pub fn quantize_kernel(g: f64, frac_bits: u32) -> Result<Integer, FixedPointError> {
    if !(g.is_finite() && g > 0.0) {
        return Err(FixedPointError::KernelRange(g));
    }
    let (gm, ge) = decompose_f64(g);
    Ok(round_shift(&Integer::from(gm), -(ge + frac_bits as i64)))
}

/// Serializable part of the parameters; `mask_bound = None` means `D_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    pub s: u32,
    pub f: u32,
    pub f_corr: u32,
    pub lambda_gc: u32,
    #[serde(default)]
    pub mask_bound: Option<u64>,
    pub m: usize,
    pub c: usize,
    pub n_max: u64,
    pub sigma: f64,
}

impl FixedPointConfig {
    pub fn defaults(m: usize, c: usize, n_max: u64) -> Self {
        Self {
            s: 12,
            f: 1024,
            f_corr: 1024,
            lambda_gc: 40,
            mask_bound: None,
            m,
            c,
            n_max,
            sigma: 0.25,
        }
    }
}

/// Validated parameters bound to a Paillier modulus.
#[derive(Debug, Clone)]
pub struct FixedPointParams {
    config: FixedPointConfig,
    d_max: Integer,
    mask_bound: Integer,
    // t / (2 sigma^2 S^2) == (t * exp_num_shift) / exp_den
    exp_num_shift: u32,
    exp_den: Integer,
    engine: ExpEngine,
    peak: ExtReal,
}

impl FixedPointParams {
    pub fn new(config: FixedPointConfig, modulus: &Integer) -> Result<Self, FixedPointError> {
        let sigma = config.sigma;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(FixedPointError::Sigma(sigma));
        }
        if config.m == 0 || config.c == 0 || config.n_max == 0 {
            return Err(FixedPointError::Invalid("m, c and n_max must be positive"));
        }
        if config.s == 0 || config.s > 30 {
            return Err(FixedPointError::Invalid(
                "feature bits s must lie in 1..=30",
            ));
        }
        let scale_sq = Integer::from(1) << (2 * config.s);
        let d_max = scale_sq * config.m as u64;
        let mask_bound = match config.mask_bound {
            Some(0) => return Err(FixedPointError::Invalid("mask bound must be positive")),
            Some(b) => Integer::from(b),
            None => d_max.clone(),
        };

        let (sm, se) = decompose_f64(sigma);
        let e2 = 2 * se + 2 * config.s as i64 + 1;
        let sm_sq = Integer::from(sm) * sm;
        let (exp_num_shift, exp_den) = if e2 >= 0 {
            (0, sm_sq << e2 as u32)
        } else {
            ((-e2) as u32, sm_sq)
        };

        let span = Integer::from(&d_max + &mask_bound).to_f64();
        let denom = 2.0 * sigma * sigma * ((1u64 << (2 * config.s)) as f64);
        let need = (span / denom * std::f64::consts::LOG2_E).ceil() as u64 + 64;
        if (config.f as u64) < need {
            return Err(FixedPointError::Precision {
                have: config.f,
                need,
            });
        }

        let engine = ExpEngine::new(config.f.max(config.f_corr));
        let peak = engine.gaussian_peak(sigma);
        let params = Self {
            config,
            d_max,
            mask_bound,
            exp_num_shift,
            exp_den,
            engine,
            peak,
        };
        params.check_headroom(modulus)?;
        Ok(params)
    }

    /// `n_max * 2^(F+F') * ceil(e^(B/(2 sigma^2 S^2))) * ceil(peak) * 2^lambda < n/2`.
    ///
    /// The `ceil(peak)` factor covers kernels whose peak exceeds one.
    pub fn check_headroom(&self, modulus: &Integer) -> Result<(), FixedPointError> {
        let c = &self.config;
        let growth = self.exp_scaled_distance(&self.mask_bound, true).ceil();
        let lhs = Integer::from(c.n_max)
            * growth
            * self.peak.ceil()
            * (Integer::from(1) << (c.f + c.f_corr + c.lambda_gc));
        if Integer::from(&lhs << 1u32) >= *modulus {
            return Err(FixedPointError::Headroom {
                need: lhs.significant_bits() + 1,
                have: modulus.significant_bits(),
            });
        }
        Ok(())
    }

    pub fn config(&self) -> &FixedPointConfig {
        &self.config
    }

    pub fn s(&self) -> u32 {
        self.config.s
    }

    pub fn f(&self) -> u32 {
        self.config.f
    }

    pub fn f_corr(&self) -> u32 {
        self.config.f_corr
    }

    pub fn lambda_gc(&self) -> u32 {
        self.config.lambda_gc
    }

    pub fn sigma(&self) -> f64 {
        self.config.sigma
    }

    pub fn m(&self) -> usize {
        self.config.m
    }

    pub fn c(&self) -> usize {
        self.config.c
    }

    pub fn d_max(&self) -> &Integer {
        &self.d_max
    }

    pub fn mask_bound(&self) -> &Integer {
        &self.mask_bound
    }

    pub fn quantize_feature(&self, x: f64) -> Result<i64, FixedPointError> {
        quantize_feature(x, self.config.s)
    }

    fn exp_scaled_distance(&self, t: &Integer, positive: bool) -> ExtReal {
        let mut num = Integer::from(t << self.exp_num_shift);
        if !positive {
            num = -num;
        }
        self.engine.exp_ratio(&num, &self.exp_den)
    }

    /// `K~(t) = peak * e^(-t / (2 sigma^2 S^2))` in extended precision.
    pub fn kernel_real(&self, t: &Integer) -> ExtReal {
        self.peak.mul(&self.exp_scaled_distance(t, false))
    }

    /// Quantized kernel `round(K~(t) * 2^F)` of a (possibly masked) quantized
    /// squared distance. Zero means the influence vanished below `2^-F`.
    pub fn kernel_of_sq_dist(&self, t: &Integer) -> Result<Integer, FixedPointError> {
        if t.cmp0() == Ordering::Less || *t >= Integer::from(&self.d_max + &self.mask_bound) {
            return Err(FixedPointError::DistanceRange(t.clone()));
        }
        Ok(self.kernel_real(t).to_scaled(self.config.f))
    }

    /// `round(e^(mu / (2 sigma^2 S^2)) * 2^F')`.
    pub fn correction_factor(&self, mu: &Integer) -> Result<Integer, FixedPointError> {
        if mu.cmp0() == Ordering::Less || *mu >= self.mask_bound {
            return Err(FixedPointError::MaskRange(mu.clone()));
        }
        Ok(self
            .exp_scaled_distance(mu, true)
            .to_scaled(self.config.f_corr))
    }

    /// Largest quantized kernel value (distance zero, no mask).
    pub fn max_kernel(&self) -> Integer {
        self.peak.to_scaled(self.config.f)
    }

    pub fn max_correction(&self) -> Integer {
        let top = Integer::from(&self.mask_bound - 1u32);
        self.correction_factor(&top).expect("B - 1 is in range")
    }

    /// Upper bound on any unmasked class sum over `n_store` tuples.
    pub fn score_bound(&self, n_store: usize) -> Integer {
        self.max_kernel() * self.max_correction() * n_store as u64
    }

    /// Bit length `L` of the garbled-circuit masks: `bits(score bound) + lambda`.
    pub fn gc_mask_bits(&self, n_store: usize) -> u32 {
        self.score_bound(n_store).significant_bits() + self.config.lambda_gc
    }
}
