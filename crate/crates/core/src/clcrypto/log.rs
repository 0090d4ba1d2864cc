//! Computation logs: an append-only transcript of every classical step of an
//! evaluation, its binary and text encodings, and deterministic replay.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::codec::{fnv1a64, CodecError, Reader, Writer};
use super::he::{HeBackend, HeCiphertext, HeFunction, PublicKeys};
use super::mac::SignedMessage;
use super::LogError;
use crate::bits::Bits;
use crate::circuit::{CircuitDesc, CircuitGate};
use crate::qsim::Basis;

pub const LOG_HEADER: &str = "TRAPTP-LOG v1";

/// Output `index` of log entry `seq`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValueRef {
    pub seq: u64,
    pub index: u32,
}

impl ValueRef {
    pub fn new(seq: u64, index: u32) -> Self {
        ValueRef { seq, index }
    }
}

impl std::fmt::Display for ValueRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.seq, self.index)
    }
}

/// Final pad claims for one unmeasured slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FinalKey {
    pub slot: u32,
    pub x: ValueRef,
    pub z: ValueRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogEntry {
    Signed(SignedMessage),
    /// Fresh encryption under the public key of `epoch`, stored whole.
    Enc { epoch: u32, plaintext: Bits, nonce: u64, output: HeCiphertext },
    /// Homomorphic evaluation; outputs are kept as digests.
    Eval { epoch: u32, function: HeFunction, inputs: Vec<ValueRef>, nonces: Vec<u64>, outputs: Vec<u64> },
    /// Move `input` into `epoch` using `material`.
    Recrypt { epoch: u32, material: ValueRef, input: ValueRef, nonce: u64, output: u64 },
    /// Physical outcomes of measuring a whole block.
    Measurement { resource: String, basis: Basis, outcome: Bits },
    Claim { gate: CircuitGate },
    Final { keys: Vec<FinalKey> },
}

impl LogEntry {
    pub fn kind(&self) -> &'static str {
        match self {
            LogEntry::Signed(_) => "signed",
            LogEntry::Enc { .. } => "enc",
            LogEntry::Eval { .. } => "eval",
            LogEntry::Recrypt { .. } => "recrypt",
            LogEntry::Measurement { .. } => "measurement",
            LogEntry::Claim { .. } => "claim",
            LogEntry::Final { .. } => "final",
        }
    }

    pub fn output_count(&self) -> usize {
        match self {
            LogEntry::Signed(s) => s.ciphertexts.len(),
            LogEntry::Enc { .. } | LogEntry::Recrypt { .. } => 1,
            LogEntry::Eval { outputs, .. } => outputs.len(),
            _ => 0,
        }
    }

    pub fn input_refs(&self) -> Vec<ValueRef> {
        match self {
            LogEntry::Eval { inputs, .. } => inputs.clone(),
            LogEntry::Recrypt { material, input, .. } => vec![*material, *input],
            LogEntry::Final { keys } => keys.iter().flat_map(|k| [k.x, k.z]).collect(),
            _ => Vec::new(),
        }
    }

    pub fn function_id(&self) -> &'static str {
        match self {
            LogEntry::Eval { function, .. } => function.id(),
            _ => "-",
        }
    }

    pub fn encode_into(&self, w: &mut Writer) {
        let put_ref = |w: &mut Writer, r: &ValueRef| {
            w.u64(r.seq).u32(r.index);
        };
        match self {
            LogEntry::Signed(s) => {
                w.u8(0);
                s.encode_into(w);
            }
            LogEntry::Enc { epoch, plaintext, nonce, output } => {
                w.u8(1).u32(*epoch).bits(plaintext).u64(*nonce);
                output.encode_into(w);
            }
            LogEntry::Eval { epoch, function, inputs, nonces, outputs } => {
                w.u8(2).u32(*epoch);
                function.encode_into(w);
                w.len(inputs.len());
                for r in inputs {
                    put_ref(w, r);
                }
                w.len(nonces.len());
                for n in nonces {
                    w.u64(*n);
                }
                w.len(outputs.len());
                for d in outputs {
                    w.u64(*d);
                }
            }
            LogEntry::Recrypt { epoch, material, input, nonce, output } => {
                w.u8(3).u32(*epoch);
                put_ref(w, material);
                put_ref(w, input);
                w.u64(*nonce).u64(*output);
            }
            LogEntry::Measurement { resource, basis, outcome } => {
                w.u8(4).str(resource).u8(encode_basis(*basis)).bits(outcome);
            }
            LogEntry::Claim { gate } => {
                w.u8(5);
                encode_gate(w, gate);
            }
            LogEntry::Final { keys } => {
                w.u8(6).len(keys.len());
                for k in keys {
                    w.u32(k.slot);
                    put_ref(w, &k.x);
                    put_ref(w, &k.z);
                }
            }
        }
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let get_ref = |r: &mut Reader<'_>| -> Result<ValueRef, CodecError> { Ok(ValueRef::new(r.u64()?, r.u32()?)) };
        Ok(match r.u8()? {
            0 => LogEntry::Signed(SignedMessage::decode_from(r)?),
            1 => LogEntry::Enc {
                epoch: r.u32()?,
                plaintext: r.bits()?,
                nonce: r.u64()?,
                output: HeCiphertext::decode_from(r)?,
            },
            2 => {
                let epoch = r.u32()?;
                let function = HeFunction::decode_from(r)?;
                let n = r.len()?;
                let inputs = (0..n).map(|_| get_ref(r)).collect::<Result<Vec<_>, _>>()?;
                let n = r.len()?;
                let nonces = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
                let n = r.len()?;
                let outputs = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
                LogEntry::Eval { epoch, function, inputs, nonces, outputs }
            }
            3 => LogEntry::Recrypt {
                epoch: r.u32()?,
                material: get_ref(r)?,
                input: get_ref(r)?,
                nonce: r.u64()?,
                output: r.u64()?,
            },
            4 => LogEntry::Measurement { resource: r.str()?, basis: decode_basis(r)?, outcome: r.bits()? },
            5 => LogEntry::Claim { gate: decode_gate(r)? },
            6 => {
                let n = r.len()?;
                let keys = (0..n)
                    .map(|_| Ok(FinalKey { slot: r.u32()?, x: get_ref(r)?, z: get_ref(r)? }))
                    .collect::<Result<Vec<_>, CodecError>>()?;
                LogEntry::Final { keys }
            }
            _ => return r.invalid("log entry kind"),
        })
    }

    /// Canonical binary form.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_into(&mut w);
        w.finish()
    }

    /// Strict inverse of [`LogEntry::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let e = LogEntry::decode_from(&mut r)?;
        r.finish()?;
        Ok(e)
    }
}

pub fn encode_basis(b: Basis) -> u8 {
    match b {
        Basis::Z => 0,
        Basis::X => 1,
    }
}

pub fn decode_basis(r: &mut Reader<'_>) -> Result<Basis, CodecError> {
    match r.u8()? {
        0 => Ok(Basis::Z),
        1 => Ok(Basis::X),
        _ => r.invalid("basis"),
    }
}

pub fn encode_gate(w: &mut Writer, g: &CircuitGate) {
    match *g {
        CircuitGate::X(q) => w.u8(0).u32(q as u32),
        CircuitGate::Z(q) => w.u8(1).u32(q as u32),
        CircuitGate::Cnot(a, b) => w.u8(2).u32(a as u32).u32(b as u32),
        CircuitGate::P(q) => w.u8(3).u32(q as u32),
        CircuitGate::H(q) => w.u8(4).u32(q as u32),
        CircuitGate::T(q) => w.u8(5).u32(q as u32),
        CircuitGate::Measure(q, b) => w.u8(6).u32(q as u32).u8(encode_basis(b)),
        CircuitGate::CondX { target, control } => w.u8(7).u32(target as u32).u32(control as u32),
        CircuitGate::CondZ { target, control } => w.u8(8).u32(target as u32).u32(control as u32),
    };
}

pub fn decode_gate(r: &mut Reader<'_>) -> Result<CircuitGate, CodecError> {
    let tag = r.u8()?;
    let q = r.u32()? as usize;
    Ok(match tag {
        0 => CircuitGate::X(q),
        1 => CircuitGate::Z(q),
        2 => CircuitGate::Cnot(q, r.u32()? as usize),
        3 => CircuitGate::P(q),
        4 => CircuitGate::H(q),
        5 => CircuitGate::T(q),
        6 => CircuitGate::Measure(q, decode_basis(r)?),
        7 => CircuitGate::CondX { target: q, control: r.u32()? as usize },
        8 => CircuitGate::CondZ { target: q, control: r.u32()? as usize },
        _ => return r.invalid("gate tag"),
    })
}

/// Append-only transcript; an entry's sequence number is its position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComputationLog {
    entries: Vec<LogEntry>,
}

impl ComputationLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<LogEntry>) -> Self {
        ComputationLog { entries }
    }

    pub fn push(&mut self, e: LogEntry) -> u64 {
        self.entries.push(e);
        (self.entries.len() - 1) as u64
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    /// Mutable access, for adversaries and tests.
    pub fn entries_mut(&mut self) -> &mut Vec<LogEntry> {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn claims(&self) -> Vec<CircuitGate> {
        self.entries
            .iter()
            .filter_map(|e| if let LogEntry::Claim { gate } = e { Some(*gate) } else { None })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(LOG_HEADER.as_bytes()).len(self.entries.len());
        for e in &self.entries {
            w.bytes(&e.to_bytes());
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        if r.take(LOG_HEADER.len())? != LOG_HEADER.as_bytes() {
            return r.invalid("log header");
        }
        let n = r.len()?;
        let mut entries = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let at = r.pos();
            let raw = r.bytes()?;
            entries.push(LogEntry::from_bytes(&raw).map_err(|_| CodecError::Invalid { what: "log entry", at })?);
        }
        r.finish()?;
        Ok(ComputationLog { entries })
    }

    /// Text form: a header line, then `seq|kind|function-id|input-refs|digest|payload-hex`
    /// per entry, where the payload is the canonical entry encoding and the digest is
    /// its FNV-1a hash.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(LOG_HEADER);
        s.push('\n');
        for (seq, e) in self.entries.iter().enumerate() {
            let payload = e.to_bytes();
            let refs = e.input_refs();
            let refs = if refs.is_empty() {
                "-".to_string()
            } else {
                refs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
            };
            let hex: String = payload.iter().map(|b| format!("{b:02x}")).collect();
            let _ = writeln!(s, "{seq}|{}|{}|{refs}|{:016x}|{hex}", e.kind(), e.function_id(), fnv1a64(&payload));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, LogError> {
        let bad = |line: usize, msg: &str| LogError::Text { line, msg: msg.to_string() };
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(LOG_HEADER) {
            return Err(bad(1, "missing header"));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            let ln = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('|').collect();
            if cols.len() != 6 {
                return Err(bad(ln, "expected 6 columns"));
            }
            if cols[0].parse::<usize>().ok() != Some(entries.len()) {
                return Err(bad(ln, "sequence number out of order"));
            }
            let hex = cols[5];
            if !hex.len().is_multiple_of(2) {
                return Err(bad(ln, "odd payload length"));
            }
            let payload = (0..hex.len())
                .step_by(2)
                .map(|k| u8::from_str_radix(&hex[k..k + 2], 16))
                .collect::<Result<Vec<u8>, _>>()
                .map_err(|_| bad(ln, "bad hex"))?;
            let e = LogEntry::from_bytes(&payload).map_err(|err| bad(ln, &err.to_string()))?;
            if cols[1] != e.kind() || cols[2] != e.function_id() {
                return Err(bad(ln, "kind or function column disagrees with payload"));
            }
            if u64::from_str_radix(cols[4], 16).ok() != Some(fnv1a64(&payload)) {
                return Err(bad(ln, "digest column disagrees with payload"));
            }
            let refs = e.input_refs();
            let want = if refs.is_empty() {
                "-".to_string()
            } else {
                refs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
            };
            if cols[3] != want {
                return Err(bad(ln, "input refs column disagrees with payload"));
            }
            entries.push(e);
        }
        Ok(ComputationLog { entries })
    }
}

/// Values reconstructed by replay, plus the number of backend operations it took.
#[derive(Clone, Debug, Default)]
pub struct Replay {
    pub values: HashMap<ValueRef, HeCiphertext>,
    pub steps: u64,
}

impl Replay {
    pub fn get(&self, r: ValueRef) -> Result<&HeCiphertext, LogError> {
        self.values.get(&r).ok_or(LogError::Dangling(r))
    }
}

/// Re-executes every classical step from its recorded inputs and randomness and
/// compares each recomputed result with the log. An encryption that directly follows
/// a measurement record must encrypt exactly that record.
pub fn replay(log: &ComputationLog, backend: &dyn HeBackend, keys: &PublicKeys) -> Result<Replay, LogError> {
    let mut out = Replay::default();
    let mut pending_record: Option<&Bits> = None;
    for (seq, e) in log.entries().iter().enumerate() {
        let seq = seq as u64;
        let fail = |msg: String| LogError::Replay { seq, msg };
        let resolve = |out: &Replay, r: &ValueRef| -> Result<HeCiphertext, LogError> {
            if r.seq >= seq {
                return Err(LogError::Replay { seq, msg: format!("forward reference {r}") });
            }
            out.get(*r).cloned()
        };
        let record = pending_record.take();
        match e {
            LogEntry::Signed(s) => {
                for (i, c) in s.ciphertexts.iter().enumerate() {
                    out.values.insert(ValueRef::new(seq, i as u32), c.clone());
                }
            }
            LogEntry::Enc { epoch, plaintext, nonce, output } => {
                let pk = keys.pk(*epoch).map_err(|err| fail(err.to_string()))?;
                out.steps += 1;
                if backend.enc(pk, plaintext, *nonce) != *output {
                    return Err(fail("encryption does not match recorded output".into()));
                }
                if let Some(rec) = record {
                    if rec != plaintext {
                        return Err(fail("encrypted record differs from the measurement".into()));
                    }
                }
                out.values.insert(ValueRef::new(seq, 0), output.clone());
            }
            LogEntry::Eval { epoch, function, inputs, nonces, outputs } => {
                let evk = keys.evk(*epoch).map_err(|err| fail(err.to_string()))?;
                let ins = inputs.iter().map(|r| resolve(&out, r)).collect::<Result<Vec<_>, _>>()?;
                let refs: Vec<&HeCiphertext> = ins.iter().collect();
                out.steps += 1;
                let res = backend.eval(evk, function, &refs, nonces).map_err(|err| fail(err.to_string()))?;
                if res.len() != outputs.len() || res.iter().zip(outputs).any(|(c, d)| c.digest() != *d) {
                    return Err(fail(format!("{function} output digest mismatch")));
                }
                for (i, c) in res.into_iter().enumerate() {
                    out.values.insert(ValueRef::new(seq, i as u32), c);
                }
            }
            LogEntry::Recrypt { epoch, material, input, nonce, output } => {
                let evk = keys.evk(*epoch).map_err(|err| fail(err.to_string()))?;
                let m = resolve(&out, material)?;
                let c = resolve(&out, input)?;
                out.steps += 1;
                let res = backend.recrypt(evk, &m, &c, *nonce).map_err(|err| fail(err.to_string()))?;
                if res.digest() != *output {
                    return Err(fail("recryption digest mismatch".into()));
                }
                out.values.insert(ValueRef::new(seq, 0), res);
            }
            LogEntry::Measurement { outcome, .. } => pending_record = Some(outcome),
            LogEntry::Claim { .. } => {}
            LogEntry::Final { keys } => {
                for k in keys {
                    resolve(&out, &k.x)?;
                    resolve(&out, &k.z)?;
                }
            }
        }
        if record.is_some() && !matches!(e, LogEntry::Enc { .. }) {
            return Err(fail("measurement record is not followed by its encryption".into()));
        }
    }
    if pending_record.is_some() {
        return Err(LogError::Replay { seq: log.len() as u64, msg: "log ends after a measurement".into() });
    }
    Ok(out)
}

/// Replay plus the gate-claim check against `c`.
pub fn check_log(
    log: &ComputationLog,
    backend: &dyn HeBackend,
    keys: &PublicKeys,
    c: &CircuitDesc,
) -> Result<Replay, LogError> {
    if log.claims() != c.gates() {
        return Err(LogError::Claims);
    }
    replay(log, backend, keys)
}
