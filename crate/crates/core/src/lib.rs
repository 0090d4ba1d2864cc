//! Desk-scale simulator of verifiable quantum homomorphic encryption built on the
//! trap code: a state-vector engine, concatenated Steane codes, trap-code
//! authentication, a transparent classical HE backend with computation logs,
//! garden-hose T-gadgets, the full scheme and its security-game harness.

pub mod bits;
pub mod qsim;
pub mod codes;
pub mod circuit;
pub mod trapcode;
pub mod clcrypto;
pub mod gardenhose;
pub mod traptp;
pub mod games;
