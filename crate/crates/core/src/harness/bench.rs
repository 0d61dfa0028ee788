//! Per-phase protocol timings and the encrypted replay used by experiments.

use super::experiment::{ProtocolCheck, ProtocolRun};
use super::HarnessError;
use crate::fixedpoint::{FixedPointConfig, FixedPointError, FixedPointParams};
use crate::kde::{kde_classify, Dataset};
use crate::math::{fork_rng, seeded_rng};
use crate::paillier::{keygen, PublicKey, SecretKey};
use crate::protocol::{ProtocolConfig, Session};
use rug::Integer;
use serde::Serialize;
use std::time::Instant;

/// Reference figure for encrypting a 32-bit integer, in milliseconds.
pub const REFERENCE_ENCRYPT_MS: f64 = 9.7;

/// Default fixed-point settings for the given shape. Unless pinned by `run`,
/// the precisions adapt to the key: `F` rises to the minimum the mask range
/// needs, and when the defaults overflow the modulus both `F` and `F'` drop
/// to that minimum (`F'` no lower than 128).
pub fn fit_fixed_point(
    m: usize,
    c: usize,
    n_max: u64,
    sigma: f64,
    run: Option<&ProtocolRun>,
    modulus: &Integer,
) -> Result<FixedPointParams, HarnessError> {
    let mut cfg = FixedPointConfig::defaults(m, c, n_max);
    cfg.sigma = sigma;
    let (mut pin_f, mut pin_corr) = (false, false);
    if let Some(r) = run {
        cfg.s = r.s.unwrap_or(cfg.s);
        cfg.lambda_gc = r.lambda_gc.unwrap_or(cfg.lambda_gc);
        if let Some(f) = r.f {
            cfg.f = f;
            pin_f = true;
        }
        if let Some(f) = r.f_corr {
            cfg.f_corr = f;
            pin_corr = true;
        }
    }
    let err = match FixedPointParams::new(cfg.clone(), modulus) {
        Ok(p) => return Ok(p),
        Err(e) => e,
    };
    if pin_f {
        return Err(err.into());
    }
    let need = match FixedPointParams::new(
        FixedPointConfig {
            f: 0,
            ..cfg.clone()
        },
        modulus,
    ) {
        Err(FixedPointError::Precision { need, .. }) => need as u32,
        _ => return Err(err.into()),
    };
    cfg.f = need;
    if matches!(err, FixedPointError::Precision { .. }) {
        match FixedPointParams::new(cfg.clone(), modulus) {
            Err(FixedPointError::Headroom { .. }) if !pin_corr => {}
            other => return Ok(other?),
        }
    }
    if !pin_corr {
        cfg.f_corr = need.max(128);
    }
    Ok(FixedPointParams::new(cfg, modulus)?)
}

/// Runs the first `run.queries` test rows through a fresh encrypted session
/// and counts agreement with plaintext KDE.
pub fn protocol_replay(
    train: &Dataset,
    test: &Dataset,
    sigma: f64,
    run: &ProtocolRun,
    seed: u64,
) -> Result<ProtocolCheck, HarnessError> {
    let mut rng = seeded_rng(seed);
    let (_, sk) = keygen(run.key_bits, &mut fork_rng(&mut rng))?;
    let params = fit_fixed_point(
        train.m(),
        train.c(),
        train.len() as u64,
        sigma,
        Some(run),
        sk.public_key().n(),
    )?;
    let mut pc = ProtocolConfig::new(params.config().clone());
    pc.key_bits = run.key_bits;
    let mut session = Session::start(sk, params, pc.options(), &mut rng)?;
    session.outsource_all(train)?;
    let queries = run.queries.min(test.len());
    let start = Instant::now();
    let mut matches = 0;
    for t in &test.tuples()[..queries] {
        if session.query(&t.features)? == kde_classify(train, &t.features, sigma)? {
            matches += 1;
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    session.finish()?;
    Ok(ProtocolCheck {
        queries,
        matches,
        seconds_per_query: if queries > 0 {
            seconds / queries as f64
        } else {
            0.0
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub key_bits: u32,
    pub n: usize,
    pub m: usize,
    pub c: usize,
    pub f: u32,
    pub keygen_s: f64,
    /// Mean time to encrypt one 32-bit integer.
    pub encrypt_ms: f64,
    pub decrypt_ms: f64,
    pub outsource_s_per_tuple: f64,
    pub query_encrypt_s: f64,
    pub squared_distance_s: f64,
    pub kernel_s: f64,
    pub class_score_s: f64,
    pub garbled_argmax_s: f64,
    pub query_total_s: f64,
    pub class: usize,
    pub plaintext_class: usize,
    pub transcript_bytes: usize,
}

impl BenchReport {
    /// Encryption is within a factor of 100 of the reference figure.
    pub fn encrypt_time_plausible(&self) -> bool {
        let r = self.encrypt_ms / REFERENCE_ENCRYPT_MS;
        (0.01..=100.0).contains(&r)
    }

    pub fn table(&self) -> String {
        let rows = [
            ("keygen", self.keygen_s * 1e3),
            ("encrypt 32-bit", self.encrypt_ms),
            ("decrypt", self.decrypt_ms),
            ("outsource / tuple", self.outsource_s_per_tuple * 1e3),
            ("query encrypt", self.query_encrypt_s * 1e3),
            ("squared distances", self.squared_distance_s * 1e3),
            ("kernel values", self.kernel_s * 1e3),
            ("class scores", self.class_score_s * 1e3),
            ("garbled argmax", self.garbled_argmax_s * 1e3),
            ("query total", self.query_total_s * 1e3),
        ];
        let mut s = format!(
            "key_bits={} n={} m={} c={} F={} class={} plaintext={} transcript={}B\n",
            self.key_bits,
            self.n,
            self.m,
            self.c,
            self.f,
            self.class,
            self.plaintext_class,
            self.transcript_bytes
        );
        for (name, ms) in rows {
            s += &format!("{name:<20} {ms:>12.3} ms\n");
        }
        s += &format!(
            "encrypt sanity (within 100x of {REFERENCE_ENCRYPT_MS} ms): {}\n",
            if self.encrypt_time_plausible() {
                "ok"
            } else {
                "OUT OF RANGE"
            }
        );
        s
    }
}

fn time<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

/// Mean milliseconds to encrypt and decrypt 32-bit integers.
pub fn paillier_timings(
    pk: &PublicKey,
    sk: &SecretKey,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64), HarnessError> {
    let mut rng = seeded_rng(seed);
    let reps = reps.max(1);
    let values: Vec<Integer> = (0..reps)
        .map(|i| Integer::from(0x9e37_79b9u32.wrapping_mul(i as u32 + 1)))
        .collect();
    let (cts, enc) = time(|| {
        values
            .iter()
            .map(|v| pk.encrypt(v, &mut rng))
            .collect::<Result<Vec<_>, _>>()
    });
    let cts = cts?;
    let (_, dec) = time(|| {
        cts.iter()
            .map(|c| sk.decrypt(c))
            .collect::<Result<Vec<_>, _>>()
    });
    Ok((enc * 1e3 / reps as f64, dec * 1e3 / reps as f64))
}

/// One keygen, one upload of `data` and one timed query, phase by phase.
pub fn bench(
    data: &Dataset,
    q: &[f64],
    sigma: f64,
    key_bits: u32,
    seed: u64,
) -> Result<BenchReport, HarnessError> {
    let mut rng = seeded_rng(seed);
    let (keys, keygen_s) = time(|| keygen(key_bits, &mut fork_rng(&mut rng)));
    let (pk, sk) = keys?;
    let (encrypt_ms, decrypt_ms) = paillier_timings(&pk, &sk, 20, seed ^ 1)?;
    let params = fit_fixed_point(data.m(), data.c(), data.len() as u64, sigma, None, pk.n())?;
    let f = params.f();
    let pc = ProtocolConfig::new(params.config().clone());
    let mut session = Session::start(sk, params.clone(), pc.options(), &mut rng)?;
    let (up, upload_s) = time(|| session.outsource_all(data));
    up?;

    let mut qrng = fork_rng(&mut rng);
    let (enc, query_encrypt_s) =
        time(|| crate::protocol::encrypt_query(q, &pk, &params, &mut qrng));
    let enc = enc?;
    let (host, link) = session.host_and_link();
    let store: Vec<_> = host.store().to_vec();
    let pairs: Vec<(&[_], &[_])> = store
        .iter()
        .map(|t| (enc.as_slice(), t.enc_features.as_slice()))
        .collect();
    let (r, squared_distance_s) = time(|| host.squared_distances(link, &pairs));
    r?;
    // The kernel phase repeats the distance exchange internally; report the
    // remainder.
    let (r, kernel_total) = time(|| host.kernel_values(link, &enc));
    r?;
    let (scores, class_score_s) = time(|| host.class_scores(link));
    let scores = scores?;
    let (class, garbled_argmax_s) = time(|| host.garbled_argmax(link, &scores));
    let class = class?;
    let (_, _, transcript) = session.finish()?;
    let kernel_s = (kernel_total - squared_distance_s).max(0.0);
    Ok(BenchReport {
        key_bits,
        n: data.len(),
        m: data.m(),
        c: data.c(),
        f,
        keygen_s,
        encrypt_ms,
        decrypt_ms,
        outsource_s_per_tuple: upload_s / data.len().max(1) as f64,
        query_encrypt_s,
        squared_distance_s,
        kernel_s,
        class_score_s,
        garbled_argmax_s,
        query_total_s: query_encrypt_s + kernel_total + class_score_s + garbled_argmax_s,
        class,
        plaintext_class: kde_classify(data, q, sigma)?,
        transcript_bytes: transcript.total_bytes(),
    })
}
