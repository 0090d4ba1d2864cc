//! Verifiable quantum homomorphic encryption over the trap code.
//!
//! Every quantum step of an evaluation acts transversally on trap-code blocks; every
//! classical step (pad updates, measurement checks, recryption) runs under the
//! classical HE backend and is written to a computation log. The evaluator and the
//! verifier share one gate-expansion program ([`program`]): the evaluator drives it with
//! a tape that performs and records each step, the verifier with a tape that reads the
//! log back and insists every step is the expected one.

mod eval;
mod program;
mod verify;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bits::{Bits, BitsError, Permutation};
use crate::circuit::CircuitError;
use crate::clcrypto::codec::{CodecError, Reader, Writer};
use crate::clcrypto::{HeBackend, HeCiphertext, HeError, HeKeySet, LogError, MacKey, PublicKeys, SignedMessage};
use crate::codes::CssCode;
use crate::qsim::{Gate, QsimError, QubitId, RngStream};
use crate::trapcode::{BlockId, BlockSystem, TrapError};

pub use eval::eval;
pub use program::resource_labels;
pub use verify::{verdec, Variant, Verdict};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrapTpError {
    #[error("{kind} budget of {limit} exhausted")]
    Budget { kind: &'static str, limit: usize },
    #[error("circuit uses wire {0}, ciphertext has fewer slots")]
    SlotOutOfRange(usize),
    #[error("wire {0} was already measured")]
    MeasuredSlot(usize),
    #[error("wire {0} has not been measured")]
    NotMeasured(usize),
    #[error("no resource named {0}")]
    UnknownResource(String),
    #[error("log structure: {0}")]
    Structure(String),
    #[error("backend offers no garden-hose gadget")]
    NoGardenHose,
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Sim(#[from] QsimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Bits(#[from] BitsError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Gate budgets fixed at key generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Budgets {
    pub t: usize,
    pub p: usize,
    pub h: usize,
}

impl Budgets {
    pub fn new(t: usize, p: usize, h: usize) -> Self {
        Budgets { t, p, h }
    }

    /// Parses `t,p,h`.
    pub fn parse(s: &str) -> Result<Self, TrapTpError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(TrapTpError::BadParameters(format!("budgets {s:?}: expected t,p,h")));
        }
        let mut v = [0usize; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| TrapTpError::BadParameters(format!("budget {p:?} is not a count")))?;
        }
        Ok(Budgets { t: v[0], p: v[1], h: v[2] })
    }

    pub fn encode_into(&self, w: &mut Writer) {
        w.u32(self.t as u32).u32(self.p as u32).u32(self.h as u32);
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(Budgets { t: r.u32()? as usize, p: r.u32()? as usize, h: r.u32()? as usize })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretKey {
    pub pi: Permutation,
    pub mac: MacKey,
    pub he: HeKeySet,
    pub level: u8,
    pub budgets: Budgets,
}

impl SecretKey {
    pub fn public(&self) -> PublicKeys {
        self.he.public()
    }
}

/// Everything the evaluator receives: public HE keys, signed pad records and the
/// quantum resources (magic states and gadgets) held as blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalKey {
    pub level: u8,
    pub budgets: Budgets,
    pub public: PublicKeys,
    /// Signed records in canonical order, starting with `keys`.
    pub records: Vec<SignedMessage>,
    pub resources: BTreeMap<String, BlockId>,
}

impl EvalKey {
    pub fn record(&self, label: &str) -> Option<&SignedMessage> {
        self.records.iter().find(|r| r.label == label)
    }

    pub fn encode_into(&self, w: &mut Writer) {
        w.u8(self.level);
        self.budgets.encode_into(w);
        self.public.encode_into(w);
        w.len(self.records.len());
        for r in &self.records {
            r.encode_into(w);
        }
        w.len(self.resources.len());
        for (label, id) in &self.resources {
            w.str(label).u64(id.0);
        }
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let level = r.u8()?;
        let budgets = Budgets::decode_from(r)?;
        let public = PublicKeys::decode_from(r)?;
        let n = r.len()?;
        let mut records = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            records.push(SignedMessage::decode_from(r)?);
        }
        let n = r.len()?;
        let mut resources = BTreeMap::new();
        for _ in 0..n {
            let label = r.str()?;
            resources.insert(label, BlockId(r.u64()?));
        }
        Ok(EvalKey { level, budgets, public, records, resources })
    }
}

/// Encrypted pad pair of one slot.
pub type PadPair = (HeCiphertext, HeCiphertext);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VqfheCiphertext {
    /// Block per slot; `None` once the slot has been measured.
    pub blocks: Vec<Option<BlockId>>,
    /// Claimed current pads per unmeasured slot.
    pub keys: Vec<Option<PadPair>>,
    /// The signed input-pad records `in{k}` produced by encryption.
    pub records: Vec<SignedMessage>,
    pub epoch: u32,
}

impl VqfheCiphertext {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn encode_into(&self, w: &mut Writer) {
        w.u32(self.epoch).len(self.blocks.len());
        for (b, k) in self.blocks.iter().zip(&self.keys) {
            match (b, k) {
                (Some(b), Some((x, z))) => {
                    w.u8(1).u64(b.0);
                    x.encode_into(w);
                    z.encode_into(w);
                }
                _ => {
                    w.u8(0);
                }
            }
        }
        w.len(self.records.len());
        for r in &self.records {
            r.encode_into(w);
        }
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let epoch = r.u32()?;
        let n = r.len()?;
        let mut ct = VqfheCiphertext { epoch, ..Default::default() };
        for _ in 0..n {
            match r.u8()? {
                0 => {
                    ct.blocks.push(None);
                    ct.keys.push(None);
                }
                1 => {
                    ct.blocks.push(Some(BlockId(r.u64()?)));
                    let x = HeCiphertext::decode_from(r)?;
                    let z = HeCiphertext::decode_from(r)?;
                    ct.keys.push(Some((x, z)));
                }
                _ => return r.invalid("slot tag"),
            }
        }
        let n = r.len()?;
        for _ in 0..n {
            ct.records.push(SignedMessage::decode_from(r)?);
        }
        Ok(ct)
    }
}

/// Copies of every signed record with its plaintexts, as leaked to the evaluator in the
/// side-channel variants of the scheme.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SideInfo {
    pub records: BTreeMap<String, SignedMessage>,
    pub plain: BTreeMap<String, Vec<Bits>>,
}

impl SideInfo {
    fn add(&mut self, record: SignedMessage, plain: Vec<Bits>) {
        self.plain.insert(record.label.clone(), plain);
        self.records.insert(record.label.clone(), record);
    }

    pub fn merge(&mut self, other: SideInfo) {
        self.records.extend(other.records);
        self.plain.extend(other.plain);
    }
}

/// Record payload shared by keygen and enc: fresh pads for `label`, encrypted under the
/// public key of `epoch` and signed.
#[allow(clippy::too_many_arguments)]
fn signed_pads(
    sk: &SecretKey,
    backend: &dyn HeBackend,
    label: &str,
    epoch: u32,
    plain: Vec<Bits>,
    extra: Vec<u8>,
    rng: &mut RngStream,
    side: &mut SideInfo,
) -> Result<SignedMessage, TrapTpError> {
    let pk = *sk.he.pair(epoch)?;
    let cts = plain.iter().map(|b| backend.enc(&pk.pk, b, rand::RngCore::next_u64(rng))).collect();
    let rec = SignedMessage::sign(&sk.mac, label, cts, extra);
    side.add(rec.clone(), plain);
    Ok(rec)
}

fn random_pads(len: usize, rng: &mut RngStream) -> (Bits, Bits) {
    (Bits::random(len, rng), Bits::random(len, rng))
}

/// Key generation: HE keys for epochs `0..=t`, the MAC key and permutation, `p` phase
/// states, `t` T states, `h` Hadamard pairs and `t` garden-hose gadgets, all encrypted
/// into `sys`.
pub fn keygen(
    sys: &mut BlockSystem,
    backend: &dyn HeBackend,
    level: u8,
    budgets: Budgets,
    rng: &mut RngStream,
) -> Result<(SecretKey, EvalKey, SideInfo), TrapTpError> {
    let code = CssCode::steane(level as usize).map_err(TrapError::from)?;
    if sys.code().m() != code.m() {
        return Err(TrapTpError::BadParameters(format!(
            "block system has {}-qubit codewords, level {level} needs {}",
            sys.code().m(),
            code.m()
        )));
    }
    let spec = if budgets.t > 0 { Some(backend.garden_hose().ok_or(TrapTpError::NoGardenHose)?) } else { None };
    let len = 3 * code.m();
    let sk = SecretKey {
        pi: Permutation::random(len, rng),
        mac: MacKey::random(rng),
        he: HeKeySet::generate(backend, budgets.t as i64, rng)?,
        level,
        budgets,
    };
    let public = sk.public();
    let mut side = SideInfo::default();
    let mut records = Vec::new();
    let mut resources = BTreeMap::new();

    let mut extra = Writer::new();
    public.encode_into(&mut extra);
    extra.u8(level);
    budgets.encode_into(&mut extra);
    records.push(signed_pads(&sk, backend, "keys", 0, vec![sk.pi.to_bits()], extra.finish(), rng, &mut side)?);

    // encrypts `q` as `label` under `pi`, pads signed at `epoch`
    let mut place = |sys: &mut BlockSystem,
                     label: String,
                     q: QubitId,
                     pi: &Permutation,
                     epoch: u32,
                     rng: &mut RngStream,
                     records: &mut Vec<SignedMessage>,
                     side: &mut SideInfo|
     -> Result<(), TrapTpError> {
        let (x, z) = random_pads(len, rng);
        let id = sys.encrypt(q, pi, &x, &z)?;
        records.push(signed_pads(&sk, backend, &label, epoch, vec![x, z], Vec::new(), rng, side)?);
        resources.insert(label, id);
        Ok(())
    };

    for i in 1..=budgets.p {
        let q = sys.quantum_mut().alloc('+')?;
        sys.quantum_mut().apply(q, Gate::P)?;
        place(sys, format!("P{i}"), q, &sk.pi, 0, rng, &mut records, &mut side)?;
    }
    for i in 1..=budgets.t {
        let q = sys.quantum_mut().alloc('+')?;
        sys.quantum_mut().apply(q, Gate::T)?;
        place(sys, format!("T{i}"), q, &sk.pi, 0, rng, &mut records, &mut side)?;
    }
    for i in 1..=budgets.h {
        let (a, b) = sys.quantum_mut().alloc_epr();
        sys.quantum_mut().apply(a, Gate::H)?;
        place(sys, format!("HA{i}"), a, &sk.pi, 0, rng, &mut records, &mut side)?;
        place(sys, format!("HB{i}"), b, &sk.pi, 0, rng, &mut records, &mut side)?;
    }
    if let Some(spec) = &spec {
        for i in 1..=budgets.t {
            let epoch = i as u32;
            let pi_i = Permutation::random(len, rng);
            let prev = sk.he.pair(epoch - 1)?.sk.to_bits();
            let info = prev.concat(&pi_i.to_bits());
            debug_assert_eq!(info.len(), program::info_len(len));
            records.push(signed_pads(&sk, backend, &format!("G{i}.info"), epoch, vec![info], Vec::new(), rng, &mut side)?);
            let mut sockets: Vec<Option<QubitId>> = vec![None; spec.sockets()];
            for l in &spec.links {
                let (a, b) = sys.quantum_mut().alloc_epr();
                if l.twisted {
                    sys.quantum_mut().apply(a, Gate::P)?;
                }
                sockets[l.a] = Some(a);
                sockets[l.b] = Some(b);
            }
            for (s, q) in sockets.into_iter().enumerate() {
                let q = q.ok_or_else(|| TrapTpError::BadParameters(format!("gadget socket {s} unlinked")))?;
                let (label, pi) = if s == spec.input_socket() {
                    (format!("G{i}.in"), &sk.pi)
                } else if s == spec.output_socket() {
                    (format!("G{i}.out"), &sk.pi)
                } else {
                    (format!("G{i}.m{s}"), &pi_i)
                };
                place(sys, label, q, pi, epoch, rng, &mut records, &mut side)?;
            }
        }
    }
    // gadget sockets were placed in socket order; put them in canonical order
    let order = resource_labels(budgets, 0, spec.as_ref());
    records.sort_by_key(|r| order.iter().position(|l| *l == r.label));
    let evk = EvalKey { level, budgets, public, records, resources };
    Ok((sk, evk, side))
}

/// Encrypts `qubits` into new slots appended to `ct`, with signed pad records `in{k}`.
pub fn encrypt(
    sk: &SecretKey,
    backend: &dyn HeBackend,
    sys: &mut BlockSystem,
    ct: &mut VqfheCiphertext,
    qubits: &[QubitId],
    rng: &mut RngStream,
) -> Result<SideInfo, TrapTpError> {
    if ct.epoch != 0 {
        return Err(TrapTpError::BadParameters("cannot extend an evaluated ciphertext".into()));
    }
    let mut side = SideInfo::default();
    let len = sk.pi.len();
    for &q in qubits {
        let k = ct.blocks.len();
        let (x, z) = random_pads(len, rng);
        let id = sys.encrypt(q, &sk.pi, &x, &z)?;
        let rec = signed_pads(sk, backend, &format!("in{k}"), 0, vec![x, z], Vec::new(), rng, &mut side)?;
        ct.blocks.push(Some(id));
        ct.keys.push(Some((rec.ciphertexts[0].clone(), rec.ciphertexts[1].clone())));
        ct.records.push(rec);
    }
    Ok(side)
}

#[cfg(test)]
mod tests;
