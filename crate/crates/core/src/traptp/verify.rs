//! Verified decryption. Ver checks the log (authenticity of signed records, gate
//! claims, replay, expansion structure, claimed final pads, every block measurement)
//! and recovers the plaintext keys; Dec then opens the output blocks.

use std::collections::HashMap;

use super::program::{Machine, PiSource, Tape};
use super::{SecretKey, SideInfo, TrapTpError, VqfheCiphertext};
use crate::bits::{Bits, Permutation};
use crate::circuit::{CircuitDesc, CircuitGate, WireOutputs};
use crate::clcrypto::he::SK_BITS;
use crate::clcrypto::log::ValueRef;
use crate::clcrypto::{check_log, ComputationLog, FinalKey, HeBackend, HeFunction, LogEntry, Replay};
use crate::codes::CssCode;
use crate::qsim::{Basis, QubitId, RngStream};
use crate::trapcode::{reject_outputs, verdec_measurement, BlockSystem, TrapError};

/// How the verifier trusts the signed records of a log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Variant {
    /// MAC check on every signed record; plaintexts by decryption.
    #[default]
    Standard,
    /// Signed records must equal the side-information copies; their plaintexts are
    /// taken from the side information.
    SideChannel,
    /// As `SideChannel`, and every logged value is additionally tracked in plaintext
    /// by a shadow replay, which supplies all plaintexts.
    PlaintextShadow,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Variant::Standard),
            "side-channel" => Ok(Variant::SideChannel),
            "shadow" => Ok(Variant::PlaintextShadow),
            _ => Err(format!("unknown verifier variant {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub accepted: bool,
    pub reason: Option<String>,
    pub outputs: WireOutputs,
    /// Classical steps spent by Ver.
    pub ver_steps: u64,
    /// Simulator operations spent by Dec.
    pub dec_ops: u64,
}

struct Opener<'a> {
    sk: &'a SecretKey,
    backend: &'a dyn HeBackend,
    replay: &'a Replay,
    known: HashMap<ValueRef, Bits>,
    /// When set, every plaintext must come from `known`.
    shadow_only: bool,
}

impl Opener<'_> {
    fn open(&self, r: ValueRef) -> Result<Bits, TrapTpError> {
        if let Some(b) = self.known.get(&r) {
            return Ok(b.clone());
        }
        if self.shadow_only {
            return Err(TrapTpError::Structure(format!("no shadow plaintext for {r}")));
        }
        let ct = self.replay.get(r)?;
        let pair = self.sk.he.pair(ct.epoch)?;
        Ok(self.backend.dec(&pair.sk, ct)?)
    }

    fn open_bit(&self, r: ValueRef) -> Result<bool, TrapTpError> {
        let b = self.open(r)?;
        if b.len() != 1 {
            return Err(TrapTpError::Structure(format!("{r} is not a single bit")));
        }
        Ok(b.get(0))
    }
}

/// Plaintexts of the signed records from side information.
fn side_plaintexts(log: &ComputationLog, side: &SideInfo) -> Result<HashMap<ValueRef, Bits>, TrapTpError> {
    let mut out = HashMap::new();
    for (seq, e) in log.entries().iter().enumerate() {
        if let LogEntry::Signed(s) = e {
            let plain = side
                .plain
                .get(&s.label)
                .ok_or_else(|| TrapTpError::Structure(format!("no side information for {}", s.label)))?;
            for (i, b) in plain.iter().enumerate() {
                out.insert(ValueRef::new(seq as u64, i as u32), b.clone());
            }
        }
    }
    Ok(out)
}

/// Plaintext replay of the whole log starting from the signed plaintexts.
fn shadow_replay(log: &ComputationLog, mut known: HashMap<ValueRef, Bits>) -> Result<HashMap<ValueRef, Bits>, TrapTpError> {
    for (seq, e) in log.entries().iter().enumerate() {
        let seq = seq as u64;
        let get = |known: &HashMap<ValueRef, Bits>, r: &ValueRef| {
            known.get(r).cloned().ok_or_else(|| TrapTpError::Structure(format!("shadow: no value {r}")))
        };
        match e {
            LogEntry::Enc { plaintext, .. } => {
                known.insert(ValueRef::new(seq, 0), plaintext.clone());
            }
            LogEntry::Eval { function, inputs, .. } => {
                let ins = inputs.iter().map(|r| get(&known, r)).collect::<Result<Vec<_>, _>>()?;
                for (i, b) in function.apply_plain(&ins)?.into_iter().enumerate() {
                    known.insert(ValueRef::new(seq, i as u32), b);
                }
            }
            LogEntry::Recrypt { input, .. } => {
                let b = get(&known, input)?;
                known.insert(ValueRef::new(seq, 0), b);
            }
            _ => {}
        }
    }
    Ok(known)
}

enum Auth<'a> {
    Mac(&'a SecretKey),
    Side(&'a SideInfo),
}

/// Reads the log back, requiring each entry to be exactly the next expected step.
struct Checker<'a> {
    entries: &'a [LogEntry],
    cursor: usize,
    auth: Auth<'a>,
    opener: &'a Opener<'a>,
    block_len: usize,
    steps: u64,
}

impl<'a> Checker<'a> {
    fn next(&mut self, what: &str) -> Result<(u64, &'a LogEntry), TrapTpError> {
        let seq = self.cursor;
        let e = self
            .entries
            .get(seq)
            .ok_or_else(|| TrapTpError::Structure(format!("log ends where {what} was expected")))?;
        self.cursor += 1;
        self.steps += 1;
        Ok((seq as u64, e))
    }
}

fn unexpected(seq: u64, e: &LogEntry, what: &str) -> TrapTpError {
    TrapTpError::Structure(format!("entry {seq}: found {} where {what} was expected", e.kind()))
}

impl Tape for Checker<'_> {
    fn signed(&mut self, label: &str, count: usize, epoch: u32) -> Result<Vec<ValueRef>, TrapTpError> {
        let (seq, e) = self.next(label)?;
        let LogEntry::Signed(s) = e else { return Err(unexpected(seq, e, label)) };
        if s.label != label || s.ciphertexts.len() != count || s.ciphertexts.iter().any(|c| c.epoch != epoch) {
            return Err(TrapTpError::Structure(format!("entry {seq}: record {} does not fit {label}", s.label)));
        }
        let ok = match self.auth {
            Auth::Mac(sk) => s.verify(&sk.mac),
            Auth::Side(side) => side.records.get(label) == Some(s),
        };
        if !ok {
            return Err(TrapTpError::Structure(format!("entry {seq}: record {label} is not authentic")));
        }
        Ok((0..count as u32).map(|i| ValueRef::new(seq, i)).collect())
    }

    fn claim(&mut self, gate: &CircuitGate) -> Result<(), TrapTpError> {
        let (seq, e) = self.next("a gate claim")?;
        match e {
            LogEntry::Claim { gate: g } if g == gate => Ok(()),
            _ => Err(unexpected(seq, e, &format!("claim {gate}"))),
        }
    }

    fn enc(&mut self, epoch: u32, bits: &Bits) -> Result<ValueRef, TrapTpError> {
        let (seq, e) = self.next("an encryption")?;
        match e {
            LogEntry::Enc { epoch: ep, plaintext, .. } if *ep == epoch && plaintext == bits => Ok(ValueRef::new(seq, 0)),
            _ => Err(unexpected(seq, e, "an encryption")),
        }
    }

    fn eval(&mut self, epoch: u32, f: &HeFunction, inputs: &[ValueRef]) -> Result<Vec<ValueRef>, TrapTpError> {
        let (seq, e) = self.next(f.id())?;
        match e {
            LogEntry::Eval { epoch: ep, function, inputs: ins, outputs, .. }
                if *ep == epoch && function == f && ins == inputs && outputs.len() == f.output_count() =>
            {
                Ok((0..outputs.len() as u32).map(|i| ValueRef::new(seq, i)).collect())
            }
            _ => Err(unexpected(seq, e, &format!("{f} at epoch {epoch}"))),
        }
    }

    fn recrypt(&mut self, epoch: u32, material: ValueRef, input: ValueRef) -> Result<ValueRef, TrapTpError> {
        let (seq, e) = self.next("a recryption")?;
        match e {
            LogEntry::Recrypt { epoch: ep, material: m, input: i, .. } if *ep == epoch && *m == material && *i == input => {
                Ok(ValueRef::new(seq, 0))
            }
            _ => Err(unexpected(seq, e, &format!("recryption of {input}"))),
        }
    }

    fn cnot(&mut self, _control: &str, _target: &str) -> Result<(), TrapTpError> {
        Ok(())
    }

    fn measure(&mut self, resource: &str, basis: Basis) -> Result<Bits, TrapTpError> {
        let (seq, e) = self.next("a measurement")?;
        match e {
            LogEntry::Measurement { resource: r, basis: b, outcome }
                if r == resource && *b == basis && outcome.len() == self.block_len =>
            {
                Ok(outcome.clone())
            }
            _ => Err(unexpected(seq, e, &format!("{} measurement of {resource}", basis.symbol()))),
        }
    }

    fn route(&mut self, b: ValueRef) -> Result<bool, TrapTpError> {
        self.opener.open_bit(b)
    }

    fn finish(&mut self, keys: &[FinalKey]) -> Result<(), TrapTpError> {
        let (seq, e) = self.next("the final keys")?;
        match e {
            LogEntry::Final { keys: k } if k == keys => {}
            _ => return Err(unexpected(seq, e, "the final keys")),
        }
        if self.cursor != self.entries.len() {
            return Err(TrapTpError::Structure(format!("{} entries after the final keys", self.entries.len() - self.cursor)));
        }
        Ok(())
    }
}

/// Output of a successful Ver: plaintext pads of the unmeasured slots and the logical
/// bits of the measured wires.
struct Opened {
    pads: Vec<Option<(Bits, Bits)>>,
    bits: HashMap<usize, bool>,
    steps: u64,
}

#[allow(clippy::too_many_arguments)]
fn ver(
    backend: &dyn HeBackend,
    sk: &SecretKey,
    ct: &VqfheCiphertext,
    log: &ComputationLog,
    c: &CircuitDesc,
    variant: Variant,
    side: Option<&SideInfo>,
    steps: &mut u64,
) -> Result<Opened, TrapTpError> {
    let code = CssCode::steane(sk.level as usize).map_err(TrapError::from)?;
    let side = match (variant, side) {
        (Variant::Standard, _) => None,
        (_, Some(s)) => Some(s),
        (_, None) => return Err(TrapTpError::BadParameters("variant needs side information".into())),
    };
    for e in log.entries() {
        if let LogEntry::Signed(s) = e {
            *steps += 1;
            let ok = match side {
                None => s.verify(&sk.mac),
                Some(side) => side.records.get(&s.label) == Some(s),
            };
            if !ok {
                return Err(TrapTpError::Structure(format!("record {} is not authentic", s.label)));
            }
        }
    }
    let public = sk.public();
    let replay = check_log(log, backend, &public, c)?;
    *steps += replay.steps;
    let known = match (variant, side) {
        (Variant::Standard, _) | (_, None) => HashMap::new(),
        (Variant::SideChannel, Some(s)) => side_plaintexts(log, s)?,
        (Variant::PlaintextShadow, Some(s)) => shadow_replay(log, side_plaintexts(log, s)?)?,
    };
    let opener = Opener { sk, backend, replay: &replay, known, shadow_only: variant == Variant::PlaintextShadow };
    let mut checker = Checker {
        entries: log.entries(),
        cursor: 0,
        auth: match side {
            None => Auth::Mac(sk),
            Some(s) => Auth::Side(s),
        },
        opener: &opener,
        block_len: 3 * code.m(),
        steps: 0,
    };
    let mc = Machine::run(&mut checker, sk.level, code.m(), sk.budgets, backend.garden_hose(), ct.len(), c);
    *steps += checker.steps;
    let mc = mc?;

    if ct.blocks.len() != mc.slots.len() || ct.keys.len() != mc.slots.len() {
        return Err(TrapTpError::Structure("ciphertext slot count differs from the log".into()));
    }
    let mut pads = Vec::with_capacity(mc.slots.len());
    for (k, slot) in mc.slots.iter().enumerate() {
        match (slot, &ct.blocks[k], &ct.keys[k]) {
            (None, None, None) => pads.push(None),
            (Some(label), Some(_), Some((cx, cz))) => {
                let r = mc.res[label];
                if replay.get(r.x)? != cx || replay.get(r.z)? != cz {
                    return Err(TrapTpError::Structure(format!("slot {k}: claimed pads differ from the log")));
                }
                pads.push(Some((opener.open(r.x)?, opener.open(r.z)?)));
            }
            _ => return Err(TrapTpError::Structure(format!("slot {k}: ciphertext and log disagree on measurement"))),
        }
    }

    for m in &mc.measurements {
        *steps += 1;
        let pi = match m.pi {
            PiSource::Global => sk.pi.clone(),
            PiSource::Gadget(i) => {
                let info = opener.open(mc.info[i - 1])?;
                Permutation::from_bits(&info.slice(SK_BITS, info.len()))?
            }
        };
        let v = verdec_measurement(&code, &pi, &opener.open(m.x)?, &opener.open(m.z)?, &m.outcome, m.basis)?;
        if !v.accepted {
            return Err(TrapTpError::Structure(format!("{} measurement of {} hit a trap", m.basis.symbol(), m.resource)));
        }
    }

    let mut bits = HashMap::new();
    for (&w, &r) in &mc.outcomes {
        bits.insert(w, opener.open_bit(r)?);
    }
    Ok(Opened { pads, bits, steps: *steps })
}

fn discard_all(sys: &mut BlockSystem, ct: &VqfheCiphertext, rng: &mut RngStream) -> Result<(), TrapTpError> {
    for id in ct.blocks.iter().flatten() {
        if sys.contains(*id) {
            sys.discard(*id, rng)?;
        }
    }
    Ok(())
}

/// Verified decryption of an evaluated ciphertext against circuit `c`. On reject the
/// outputs are the fixed reject state.
#[allow(clippy::too_many_arguments)]
pub fn verdec(
    sys: &mut BlockSystem,
    backend: &dyn HeBackend,
    sk: &SecretKey,
    ct: &VqfheCiphertext,
    log: &ComputationLog,
    c: &CircuitDesc,
    variant: Variant,
    side: Option<&SideInfo>,
    rng: &mut RngStream,
) -> Result<Verdict, TrapTpError> {
    let mut steps = 0;
    let opened = match ver(backend, sk, ct, log, c, variant, side, &mut steps) {
        Ok(o) => o,
        Err(TrapTpError::BadParameters(msg)) => return Err(TrapTpError::BadParameters(msg)),
        Err(e) => {
            discard_all(sys, ct, rng)?;
            return Ok(Verdict {
                accepted: false,
                reason: Some(e.to_string()),
                outputs: reject_outputs(sys, c)?,
                ver_steps: steps,
                dec_ops: 0,
            });
        }
    };

    let ops = sys.op_count();
    let mut decrypted: Vec<(usize, QubitId)> = Vec::new();
    let mut reason = None;
    for (k, pad) in opened.pads.iter().enumerate() {
        let (Some((x, z)), Some(id)) = (pad, ct.blocks[k]) else { continue };
        match sys.verdec_qubit(id, &sk.pi, x, z, rng) {
            Ok(Some(q)) => decrypted.push((k, q)),
            Ok(None) => reason = Some(format!("slot {k}: trap triggered")),
            Err(TrapError::UnknownBlock(_)) | Err(TrapError::LayoutMismatch) => {
                reason = Some(format!("slot {k}: block missing or relaid"));
                if sys.contains(id) {
                    sys.discard(id, rng)?;
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    if reason.is_some() {
        for (_, q) in decrypted {
            sys.quantum_mut().discard(q, rng)?;
        }
        let dec_ops = sys.op_count() - ops;
        return Ok(Verdict {
            accepted: false,
            reason,
            outputs: reject_outputs(sys, c)?,
            ver_steps: opened.steps,
            dec_ops,
        });
    }
    let mut outputs = WireOutputs::default();
    for (w, q) in decrypted {
        if c.outputs().contains(&w) {
            outputs.quantum.push((w, q));
        } else {
            sys.quantum_mut().discard(q, rng)?;
        }
    }
    let dec_ops = sys.op_count() - ops;
    outputs.quantum.sort_by_key(|(w, _)| c.outputs().iter().position(|o| o == w));
    for &o in c.outputs() {
        if let Some(b) = opened.bits.get(&o) {
            outputs.classical.push((o, *b));
        }
    }
    Ok(Verdict { accepted: true, reason: None, outputs, ver_steps: opened.steps, dec_ops })
}
