//! Two-party delegation. The client runs KeyGen and Enc and sends HELLO, EVK,
//! CIPHERTEXT and CIRCUIT; the server evaluates and answers RESULT_CT and LOG; the
//! client runs VerDec locally and reports a VERDICT. Any failure is answered with an
//! ERROR frame, after which the connection is closed.

use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener};
use std::time::Duration;

use thiserror::Error;
use traptp_core::circuit::CircuitDesc;
use traptp_core::clcrypto::{ComputationLog, LogEntry, TransparentHe};
use traptp_core::codes::CssCode;
use traptp_core::qsim::{RngStream, StateVector};
use traptp_core::trapcode::BlockSystem;
use traptp_core::traptp::{self, Budgets, TrapTpError, Variant, VqfheCiphertext};

use crate::frame::{read_frame, write_frame, Frame, FrameError, Kind, VERSION};
use crate::wire::{self, VerdictMsg, WireError};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Scheme(#[from] TrapTpError),
    #[error("expected {expected:?}, got {got:?}")]
    Unexpected { expected: Kind, got: Kind },
    #[error("protocol version mismatch: {0:?}")]
    Version(Vec<u8>),
    #[error("peer error: {0}")]
    Remote(String),
    #[error("{0}")]
    Invalid(String),
}

fn expect(stream: &mut impl Read, kind: Kind, max: usize) -> Result<Vec<u8>, ProtocolError> {
    let f = read_frame(stream, max)?;
    if f.kind == Kind::Error {
        return Err(ProtocolError::Remote(String::from_utf8_lossy(&f.payload).into_owned()));
    }
    if f.kind != kind {
        return Err(ProtocolError::Unexpected { expected: kind, got: f.kind });
    }
    Ok(f.payload)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ServerOptions {
    pub seed: u64,
    pub max_frame: usize,
    /// Flip one byte of every log before sending it.
    pub tamper_log: bool,
}

/// What a finished session looked like from the server's side.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionSummary {
    pub gates: usize,
    pub verdict: Option<VerdictMsg>,
}

fn serve_inner<S: Read + Write>(stream: &mut S, opts: &ServerOptions) -> Result<SessionSummary, ProtocolError> {
    let hello = expect(stream, Kind::Hello, opts.max_frame)?;
    if hello != VERSION {
        return Err(ProtocolError::Version(hello));
    }
    write_frame(stream, &Frame::new(Kind::Hello, VERSION.to_vec()))?;
    let evk = wire::decode_evk(&expect(stream, Kind::Evk, opts.max_frame)?)?;
    let (mut sys, ct) = wire::decode_ciphertext(&expect(stream, Kind::Ciphertext, opts.max_frame)?)?;
    let c = wire::decode_circuit(&expect(stream, Kind::Circuit, opts.max_frame)?)?;
    let mut rng = RngStream::new(opts.seed);
    let (out, log) = traptp::eval(&mut sys, &TransparentHe, &evk, &ct, &c, &mut rng)?;
    let mut log = log.to_bytes();
    if opts.tamper_log {
        let at = rng.below(log.len());
        log[at] ^= 0x01;
    }
    write_frame(stream, &Frame::new(Kind::ResultCt, wire::encode_ciphertext(&sys, &out)))?;
    write_frame(stream, &Frame::new(Kind::Log, log))?;
    let verdict = match read_frame(stream, opts.max_frame) {
        Ok(f) if f.kind == Kind::Verdict => Some(VerdictMsg::from_bytes(&f.payload)?),
        Ok(f) => return Err(ProtocolError::Unexpected { expected: Kind::Verdict, got: f.kind }),
        Err(FrameError::Closed) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(SessionSummary { gates: c.len(), verdict })
}

/// Runs one session on `stream`. On failure the peer gets an ERROR frame first.
pub fn serve_session<S: Read + Write>(stream: &mut S, opts: &ServerOptions) -> Result<SessionSummary, ProtocolError> {
    let res = serve_inner(stream, opts);
    if let Err(e) = &res {
        if !matches!(e, ProtocolError::Remote(_) | ProtocolError::Frame(FrameError::Closed | FrameError::Io(_))) {
            let _ = write_frame(stream, &Frame::error(&e.to_string()));
        }
    }
    res
}

/// Accepts connections one at a time; stops after `sessions` if given. Session
/// failures are logged to stderr and do not stop the server.
pub fn serve(listener: &TcpListener, opts: &ServerOptions, sessions: Option<usize>) -> std::io::Result<()> {
    for (i, conn) in listener.incoming().enumerate() {
        let mut conn = conn?;
        let session_opts = ServerOptions { seed: opts.seed.wrapping_add(i as u64), ..*opts };
        match serve_session(&mut conn, &session_opts) {
            Ok(s) => eprintln!("session {i}: {} gates, verdict {:?}", s.gates, s.verdict.map(|v| v.accepted)),
            Err(e) => {
                eprintln!("session {i}: {e}");
                // drain what the client already sent so the ERROR frame is not lost to a reset
                let _ = conn.shutdown(Shutdown::Write);
                let _ = conn.set_read_timeout(Some(Duration::from_secs(1)));
                let _ = io::copy(&mut (&conn).take(1 << 30), &mut io::sink());
            }
        }
        if sessions.is_some_and(|n| i + 1 >= n) {
            break;
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ClientRequest {
    pub circuit: CircuitDesc,
    pub input: StateVector,
    pub level: u8,
    pub budgets: Budgets,
    pub seed: u64,
    pub max_frame: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClientReport {
    pub accepted: bool,
    pub reason: Option<String>,
    pub classical: Vec<(usize, bool)>,
    /// Joint state of the unmeasured output wires, in wire order.
    pub quantum: Option<(Vec<usize>, StateVector)>,
}

impl ClientReport {
    pub fn render(&self) -> String {
        let mut s = format!("verdict {}\n", if self.accepted { "acc" } else { "rej" });
        if let Some(r) = &self.reason {
            s += &format!("reason {r}\n");
        }
        for (w, b) in &self.classical {
            s += &format!("output {w} {}\n", *b as u8);
        }
        if let Some((wires, state)) = &self.quantum {
            s += &format!("state {wires:?}\n{}", state.dump());
        }
        s
    }
}

/// Client side of one session.
pub fn run_client<S: Read + Write>(stream: &mut S, req: &ClientRequest) -> Result<ClientReport, ProtocolError> {
    if req.input.n_qubits() != req.circuit.n_qubits() {
        return Err(ProtocolError::Invalid(format!(
            "input has {} qubits, circuit {}",
            req.input.n_qubits(),
            req.circuit.n_qubits()
        )));
    }
    let he = TransparentHe;
    let mut rng = RngStream::new(req.seed);
    let code = CssCode::steane(req.level as usize).map_err(|e| ProtocolError::Invalid(e.to_string()))?;
    let mut sys = BlockSystem::new(code);
    let (sk, evk, _) = traptp::keygen(&mut sys, &he, req.level, req.budgets, &mut rng)?;
    let qs = sys.quantum_mut().alloc_state(req.input.clone());
    let mut ct = VqfheCiphertext::default();
    traptp::encrypt(&sk, &he, &mut sys, &mut ct, &qs, &mut rng)?;

    write_frame(stream, &Frame::new(Kind::Hello, VERSION.to_vec()))?;
    let hello = expect(stream, Kind::Hello, req.max_frame)?;
    if hello != VERSION {
        return Err(ProtocolError::Version(hello));
    }
    write_frame(stream, &Frame::new(Kind::Evk, wire::encode_evk(&evk)))?;
    write_frame(stream, &Frame::new(Kind::Ciphertext, wire::encode_ciphertext(&sys, &ct)))?;
    write_frame(stream, &Frame::new(Kind::Circuit, wire::encode_circuit(&req.circuit)))?;
    let (mut sys, out) = wire::decode_ciphertext(&expect(stream, Kind::ResultCt, req.max_frame)?)?;
    let log_bytes = expect(stream, Kind::Log, req.max_frame)?;
    let log = ComputationLog::from_bytes(&log_bytes)
        .unwrap_or_else(|_| ComputationLog::from_entries(vec![LogEntry::Final { keys: Vec::new() }]));
    let v = traptp::verdec(&mut sys, &he, &sk, &out, &log, &req.circuit, Variant::Standard, None, &mut rng)?;
    let msg = VerdictMsg { accepted: v.accepted, reason: v.reason.clone().unwrap_or_default() };
    write_frame(stream, &Frame::new(Kind::Verdict, msg.to_bytes()))?;

    let quantum = if v.outputs.quantum.is_empty() {
        None
    } else {
        let wires = v.outputs.quantum.iter().map(|(w, _)| *w).collect();
        Some((wires, sys.quantum().state_of(&v.outputs.qubit_ids()).map_err(|e| ProtocolError::Invalid(e.to_string()))?))
    };
    Ok(ClientReport { accepted: v.accepted, reason: v.reason, classical: v.outputs.classical, quantum })
}
