//! End-to-end orchestration: owners upload, a querier asks, the data host
//! and CSP run the three phases, and every hop lands in one transcript.

use super::messages::Message;
use super::parties::{encrypt_query, submit_tuple, Csp, DataHost, EncryptedTuple, HostOptions};
use super::transcript::{Role, Transcript};
use super::transport::{Link, TransportKind};
use super::ProtocolError;
use crate::fixedpoint::{FixedPointConfig, FixedPointParams};
use crate::garble::OtKind;
use crate::kde::{DataTuple, Dataset};
use crate::math::{fork_rng, secure_rng, seeded_rng};
use crate::paillier::{Ciphertext, PublicKey, SecretKey};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_key_bits() -> u32 {
    3072
}

fn default_true() -> bool {
    true
}

/// On-disk protocol configuration (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    #[serde(default = "default_key_bits")]
    pub key_bits: u32,
    #[serde(default)]
    pub transport: TransportKind,
    #[serde(default = "default_true")]
    pub free_xor: bool,
    #[serde(default)]
    pub ot_kind: OtKind,
    /// Test mode only.
    #[serde(default)]
    pub zero_kernel_masks: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    pub fixed_point: FixedPointConfig,
}

impl ProtocolConfig {
    pub fn new(fixed_point: FixedPointConfig) -> Self {
        Self {
            key_bits: default_key_bits(),
            transport: TransportKind::InProcess,
            free_xor: true,
            ot_kind: OtKind::ChouOrlandi,
            zero_kernel_masks: false,
            seed: None,
            fixed_point,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ProtocolError> {
        toml::from_str(text).map_err(|e| ProtocolError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ProtocolError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn options(&self) -> SessionOptions {
        SessionOptions {
            transport: self.transport,
            host: HostOptions {
                free_xor: self.free_xor,
                ot_kind: self.ot_kind,
                zero_kernel_masks: self.zero_kernel_masks,
            },
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        match self.seed {
            Some(seed) => seeded_rng(seed),
            None => secure_rng(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SessionOptions {
    pub transport: TransportKind,
    pub host: HostOptions,
}

/// A live deployment: one data host wired to one CSP, with owners and
/// queriers simulated in-process.
pub struct Session {
    pk: PublicKey,
    host: DataHost,
    link: Link,
    rng: ChaCha20Rng,
}

impl Session {
    /// The three party RNGs are forked from `rng` in a fixed order, so a
    /// seeded session replays byte-for-byte on either transport.
    pub fn start(
        sk: SecretKey,
        params: FixedPointParams,
        options: SessionOptions,
        rng: &mut ChaCha20Rng,
    ) -> Result<Self, ProtocolError> {
        let pk = sk.public_key().clone();
        let host_rng = fork_rng(rng);
        let csp_rng = fork_rng(rng);
        let party_rng = fork_rng(rng);
        let csp = Csp::new(sk, params.clone(), csp_rng);
        let link = Link::new(options.transport, csp)?;
        let host = DataHost::new(pk.clone(), params, host_rng, options.host);
        Ok(Self {
            pk,
            host,
            link,
            rng: party_rng,
        })
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }

    pub fn host(&self) -> &DataHost {
        &self.host
    }

    pub fn host_mut(&mut self) -> &mut DataHost {
        &mut self.host
    }

    pub fn link_mut(&mut self) -> &mut Link {
        &mut self.link
    }

    pub fn host_and_link(&mut self) -> (&mut DataHost, &mut Link) {
        (&mut self.host, &mut self.link)
    }

    pub fn transcript(&self) -> &Transcript {
        self.link.transcript()
    }

    /// The CSP, for in-process sessions.
    pub fn csp(&self) -> Option<&Csp> {
        self.link.csp()
    }

    /// Owner `owner` encrypts and uploads one tuple.
    pub fn outsource(&mut self, owner: u64, tuple: &DataTuple) -> Result<(), ProtocolError> {
        let et = submit_tuple(owner, tuple, &self.pk, self.host.params(), &mut self.rng)?;
        self.outsource_encrypted(et)
    }

    /// Relays an upload encrypted elsewhere (for instance read from disk).
    pub fn outsource_encrypted(&mut self, tuple: EncryptedTuple) -> Result<(), ProtocolError> {
        let msg = Message::SubmitTuple {
            owner: tuple.owner,
            features: tuple.enc_features,
            class: tuple.enc_class,
        };
        let from = Role::DataOwner(tuple.owner);
        match self.link.relay(&self.pk, from, Role::DataHost, &msg)? {
            Message::SubmitTuple {
                owner,
                features,
                class,
            } => self.host.accept(EncryptedTuple {
                owner,
                enc_features: features,
                enc_class: class,
            }),
            _ => unreachable!("relay preserves the message kind"),
        }
    }

    /// Uploads every tuple, the `i`-th from owner `i`.
    pub fn outsource_all(&mut self, data: &Dataset) -> Result<(), ProtocolError> {
        for (i, t) in data.tuples().iter().enumerate() {
            self.outsource(i as u64, t)?;
        }
        Ok(())
    }

    pub fn remove_owner(&mut self, owner: u64) -> usize {
        self.host.remove_owner(owner)
    }

    fn submit_query(&mut self, q: &[f64]) -> Result<Vec<Ciphertext>, ProtocolError> {
        let enc = encrypt_query(q, &self.pk, self.host.params(), &mut self.rng)?;
        match self.link.relay(
            &self.pk,
            Role::Querier,
            Role::DataHost,
            &Message::Query(enc),
        )? {
            Message::Query(enc) => Ok(enc),
            _ => unreachable!("relay preserves the message kind"),
        }
    }

    /// A querier's full round trip; returns the class it receives.
    pub fn query(&mut self, q: &[f64]) -> Result<usize, ProtocolError> {
        let enc = self.submit_query(q)?;
        let class = self.host.classify(&mut self.link, &enc)?;
        match self.link.relay(
            &self.pk,
            Role::DataHost,
            Role::Querier,
            &Message::ClassResult(class as u32),
        )? {
            Message::ClassResult(c) => Ok(c as usize),
            _ => unreachable!("relay preserves the message kind"),
        }
    }

    /// Test mode: stops before the garbled argmax and returns `E(A_k)`.
    pub fn query_scores(&mut self, q: &[f64]) -> Result<Vec<Ciphertext>, ProtocolError> {
        let enc = self.submit_query(q)?;
        self.host.encrypted_scores(&mut self.link, &enc)
    }

    /// Closes the transport, returning the CSP, the data host and the
    /// transcript.
    pub fn finish(self) -> Result<(Csp, DataHost, Transcript), ProtocolError> {
        let (csp, transcript) = self.link.close(&self.pk)?;
        Ok((csp, self.host, transcript))
    }
}

/// Outsources `data`, classifies `query` once, and returns the class with the
/// full transcript.
pub fn run_session(
    config: &ProtocolConfig,
    sk: &SecretKey,
    data: &Dataset,
    query: &[f64],
) -> Result<(usize, Transcript), ProtocolError> {
    let params = FixedPointParams::new(config.fixed_point.clone(), sk.public_key().n())?;
    let mut rng = config.rng();
    let mut session = Session::start(sk.clone(), params, config.options(), &mut rng)?;
    session.outsource_all(data)?;
    let class = session.query(query)?;
    let (_, _, transcript) = session.finish()?;
    Ok((class, transcript))
}
