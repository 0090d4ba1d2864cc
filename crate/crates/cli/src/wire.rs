//! Frame payloads. Quantum data crosses the wire as the full simulated register: each
//! component is its qubit count, its qubit handles, then its amplitude table as
//! little-endian binary64 (re, im) pairs.

use num_complex::Complex64;
use thiserror::Error;
use traptp_core::circuit::{CircuitDesc, CircuitError};
use traptp_core::clcrypto::codec::{CodecError, Reader, Writer};
use traptp_core::codes::CssCode;
use traptp_core::qsim::{QsimError, QuantumSystem, QubitId, RegisterSnapshot, StateVector, QUBIT_CAP};
use traptp_core::trapcode::{Block, BlockId, BlockSystem, TrapError};
use traptp_core::traptp::{EvalKey, VqfheCiphertext};

#[derive(Debug, Error)]
pub enum WireError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Sim(#[from] QsimError),
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("{0}")]
    Invalid(String),
}

pub fn encode_state(w: &mut Writer, s: &StateVector) {
    w.u32(s.n_qubits() as u32);
    for a in s.amplitudes() {
        w.f64(a.re).f64(a.im);
    }
}

pub fn decode_state(r: &mut Reader<'_>) -> Result<StateVector, WireError> {
    let n = r.u32()? as usize;
    if n > QUBIT_CAP {
        return Err(WireError::Invalid(format!("register of {n} qubits exceeds cap {QUBIT_CAP}")));
    }
    // bounds-checked before any allocation
    let raw = r.take((1usize << n) * 16)?;
    let amps = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    Ok(StateVector::from_amplitudes(amps)?)
}

pub fn encode_system(w: &mut Writer, sys: &BlockSystem) {
    w.u8(sys.code().level() as u8);
    let snap = sys.quantum().snapshot();
    w.u64(snap.next_qubit).u64(snap.ops).len(snap.components.len());
    for (qubits, state) in &snap.components {
        w.u32(qubits.len() as u32);
        for q in qubits {
            w.u64(q.0);
        }
        for a in state.amplitudes() {
            w.f64(a.re).f64(a.im);
        }
    }
    let blocks: Vec<(BlockId, &Block)> = sys.blocks().collect();
    w.len(blocks.len());
    for (id, b) in blocks {
        w.u64(id.0).u64(b.logical.0).perm(&b.layout).bits(&b.frame_x).bits(&b.frame_z);
    }
}

pub fn decode_system(r: &mut Reader<'_>) -> Result<BlockSystem, WireError> {
    let level = r.u8()? as usize;
    let code = CssCode::steane(level).map_err(|e| WireError::Invalid(e.to_string()))?;
    let next_qubit = r.u64()?;
    let ops = r.u64()?;
    let n = r.len()?;
    let mut components = Vec::new();
    for _ in 0..n {
        let k = r.u32()? as usize;
        if k > QUBIT_CAP {
            return Err(WireError::Invalid(format!("component of {k} qubits exceeds cap {QUBIT_CAP}")));
        }
        let qubits = (0..k).map(|_| r.u64().map(QubitId)).collect::<Result<Vec<_>, _>>()?;
        let raw = r.take((1usize << k) * 16)?;
        let amps = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        components.push((qubits, StateVector::from_amplitudes(amps)?));
    }
    let quantum = QuantumSystem::from_snapshot(RegisterSnapshot { next_qubit, ops, components })?;
    let mut sys = BlockSystem::new(code);
    let n = r.len()?;
    let mut last = None;
    let mut blocks = Vec::new();
    for _ in 0..n {
        let id = BlockId(r.u64()?);
        if last.is_some_and(|l| l >= id) {
            return Err(WireError::Invalid("block ids out of order".into()));
        }
        last = Some(id);
        let logical = QubitId(r.u64()?);
        if !quantum.contains(logical) {
            return Err(WireError::Invalid(format!("block {} refers to a missing qubit", id.0)));
        }
        let block = Block { logical, layout: r.perm()?, frame_x: r.bits()?, frame_z: r.bits()? };
        blocks.push((id, block));
    }
    sys.set_quantum(quantum);
    for (id, b) in blocks {
        sys.insert_block(id, b)?;
    }
    Ok(sys)
}

fn finish<T>(r: Reader<'_>, v: T) -> Result<T, WireError> {
    r.finish()?;
    Ok(v)
}

/// CIPHERTEXT and RESULT_CT: the register followed by the classical ciphertext.
pub fn encode_ciphertext(sys: &BlockSystem, ct: &VqfheCiphertext) -> Vec<u8> {
    let mut w = Writer::new();
    encode_system(&mut w, sys);
    ct.encode_into(&mut w);
    w.finish()
}

pub fn decode_ciphertext(bytes: &[u8]) -> Result<(BlockSystem, VqfheCiphertext), WireError> {
    let mut r = Reader::new(bytes);
    let sys = decode_system(&mut r)?;
    let ct = VqfheCiphertext::decode_from(&mut r)?;
    finish(r, (sys, ct))
}

pub fn encode_evk(evk: &EvalKey) -> Vec<u8> {
    let mut w = Writer::new();
    evk.encode_into(&mut w);
    w.finish()
}

pub fn decode_evk(bytes: &[u8]) -> Result<EvalKey, WireError> {
    let mut r = Reader::new(bytes);
    let evk = EvalKey::decode_from(&mut r)?;
    finish(r, evk)
}

pub fn encode_circuit(c: &CircuitDesc) -> Vec<u8> {
    c.to_text().into_bytes()
}

pub fn decode_circuit(bytes: &[u8]) -> Result<CircuitDesc, WireError> {
    let text = std::str::from_utf8(bytes).map_err(|_| WireError::Invalid("circuit is not UTF-8".into()))?;
    Ok(CircuitDesc::parse(text)?)
}

/// What the client reports back after verified decryption.
#[derive(Clone, Debug, PartialEq)]
pub struct VerdictMsg {
    pub accepted: bool,
    pub reason: String,
}

impl VerdictMsg {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bool(self.accepted).str(&self.reason);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader::new(bytes);
        let v = VerdictMsg { accepted: r.bool()?, reason: r.str()? };
        finish(r, v)
    }
}
