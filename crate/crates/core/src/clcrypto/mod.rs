//! Classical cryptography: a pluggable homomorphic-encryption backend, computation
//! logs with replay, and message authentication.

pub mod codec;
pub mod he;
pub mod log;
pub mod mac;

use thiserror::Error;

use crate::bits::BitsError;
use codec::CodecError;
use log::ValueRef;

pub use he::{
    HeBackend, HeCiphertext, HeEvalKey, HeFunction, HeKeyPair, HeKeySet, HePublicKey, HeSecretKey, PublicKeys,
    TransparentHe,
};
pub use log::{check_log, replay, ComputationLog, FinalKey, LogEntry, Replay};
pub use mac::{mac_sign, mac_verify, MacKey, SignedMessage};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeError {
    #[error("epoch count {0} is negative")]
    NegativeEpochs(i64),
    #[error("no key set for epoch {0}")]
    NoSuchEpoch(u32),
    #[error("ciphertext at epoch {got}, expected {expected}")]
    EpochMismatch { expected: u32, got: u32 },
    #[error("ciphertext was not produced under this key")]
    WrongKey,
    #[error("ciphertext from backend {0}")]
    Backend(u8),
    #[error("{function}: expected {expected} values, got {got}")]
    Arity { function: &'static str, expected: usize, got: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Bits(#[from] BitsError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogError {
    #[error("entry {seq}: {msg}")]
    Replay { seq: u64, msg: String },
    #[error("reference {0} does not name a logged value")]
    Dangling(ValueRef),
    #[error("gate claims do not match the circuit")]
    Claims,
    #[error("log line {line}: {msg}")]
    Text { line: usize, msg: String },
    #[error(transparent)]
    Codec(#[from] CodecError),
}
