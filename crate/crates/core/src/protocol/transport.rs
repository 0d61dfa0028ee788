//! Data host to CSP channel. Both transports serialize every message; the TCP
//! one moves the same bytes over a loopback socket with a `u32` length prefix.

use super::messages::{Message, MessageKind};
use super::parties::Csp;
use super::transcript::{Role, Transcript};
use super::ProtocolError;
use crate::paillier::PublicKey;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread::JoinHandle;

const MAX_FRAME: usize = 1 << 30;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    #[default]
    InProcess,
    Tcp,
}

enum Channel {
    InProcess(Box<Csp>),
    Tcp {
        stream: TcpStream,
        server: JoinHandle<Result<Csp, ProtocolError>>,
    },
}

/// The data host's handle to the CSP, recording every hop in a transcript.
pub struct Link {
    channel: Channel,
    transcript: Transcript,
}

pub fn write_frame<W: Write>(w: &mut W, bytes: &[u8]) -> std::io::Result<()> {
    let len = u32::try_from(bytes.len()).map_err(|_| std::io::Error::other("frame too large"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(bytes)?;
    w.flush()
}

pub fn read_frame<R: Read>(r: &mut R) -> std::io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(std::io::Error::other("frame exceeds limit"));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn serve(mut csp: Csp, listener: TcpListener) -> Result<Csp, ProtocolError> {
    let (mut stream, _) = listener.accept()?;
    let pk = csp.public_key().clone();
    loop {
        let bytes = read_frame(&mut stream)?;
        let reply = match Message::decode(&bytes, &pk) {
            Ok(Message::Shutdown) => {
                write_frame(&mut stream, &Message::Shutdown.encode(&pk)?)?;
                return Ok(csp);
            }
            Ok(msg) => csp
                .handle(msg)
                .unwrap_or_else(|e| Message::Failure(e.to_string())),
            Err(e) => Message::Failure(e.to_string()),
        };
        write_frame(&mut stream, &reply.encode(&pk)?)?;
    }
}

impl Link {
    pub fn in_process(csp: Csp) -> Self {
        Self {
            channel: Channel::InProcess(Box::new(csp)),
            transcript: Transcript::new(),
        }
    }

    /// Moves the CSP onto a server thread listening on an ephemeral loopback
    /// port and connects to it.
    pub fn tcp(csp: Csp) -> Result<Self, ProtocolError> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let server = std::thread::spawn(move || serve(csp, listener));
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self {
            channel: Channel::Tcp { stream, server },
            transcript: Transcript::new(),
        })
    }

    pub fn new(kind: TransportKind, csp: Csp) -> Result<Self, ProtocolError> {
        match kind {
            TransportKind::InProcess => Ok(Self::in_process(csp)),
            TransportKind::Tcp => Self::tcp(csp),
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// The CSP, when it lives in this process.
    pub fn csp(&self) -> Option<&Csp> {
        match &self.channel {
            Channel::InProcess(csp) => Some(csp),
            Channel::Tcp { .. } => None,
        }
    }

    /// Serializes a message between two non-CSP parties, records it and
    /// returns the decoded copy the receiver sees.
    pub fn relay(
        &mut self,
        pk: &PublicKey,
        sender: Role,
        receiver: Role,
        msg: &Message,
    ) -> Result<Message, ProtocolError> {
        let bytes = msg.encode(pk)?;
        let decoded = Message::decode(&bytes, pk)?;
        self.transcript.record(sender, receiver, msg.kind(), bytes);
        Ok(decoded)
    }

    /// Sends a request from the data host to the CSP and waits for the reply.
    pub fn call(&mut self, pk: &PublicKey, msg: Message) -> Result<Message, ProtocolError> {
        let bytes = msg.encode(pk)?;
        self.transcript
            .record(Role::DataHost, Role::Csp, msg.kind(), bytes.clone());
        let reply_bytes = match &mut self.channel {
            Channel::InProcess(csp) => {
                let reply = match Message::decode(&bytes, pk) {
                    Ok(m) => csp
                        .handle(m)
                        .unwrap_or_else(|e| Message::Failure(e.to_string())),
                    Err(e) => Message::Failure(e.to_string()),
                };
                reply.encode(pk)?
            }
            Channel::Tcp { stream, .. } => {
                write_frame(stream, &bytes)?;
                read_frame(stream)?
            }
        };
        let reply = Message::decode(&reply_bytes, pk)?;
        self.transcript
            .record(Role::Csp, Role::DataHost, reply.kind(), reply_bytes);
        match reply {
            Message::Failure(reason) => Err(ProtocolError::Remote(reason)),
            other => Ok(other),
        }
    }

    /// Shuts the channel down and hands back the CSP and the transcript.
    pub fn close(mut self, pk: &PublicKey) -> Result<(Csp, Transcript), ProtocolError> {
        let bye = Message::Shutdown.encode(pk)?;
        self.transcript.record(
            Role::DataHost,
            Role::Csp,
            MessageKind::Shutdown,
            bye.clone(),
        );
        match self.channel {
            Channel::InProcess(csp) => Ok((*csp, self.transcript)),
            Channel::Tcp { mut stream, server } => {
                write_frame(&mut stream, &bye)?;
                let _ack = read_frame(&mut stream)?;
                let csp = server
                    .join()
                    .map_err(|_| ProtocolError::Remote("CSP thread panicked".into()))??;
                Ok((csp, self.transcript))
            }
        }
    }
}
