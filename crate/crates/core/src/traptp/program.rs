//! The gate-expansion program run by both evaluator and verifier.
//!
//! [`Machine`] tracks, for every live block, which logged values hold its pads and
//! which permutation it sits under. Each circuit gate expands into a fixed sequence of
//! tape calls; the two [`Tape`] implementations give that sequence its meaning.

use std::collections::{BTreeMap, HashMap};

use super::{Budgets, TrapTpError};
use crate::bits::{Bits, PERM_ENTRY_BITS};
use crate::circuit::{CircuitDesc, CircuitGate};
use crate::clcrypto::he::SK_BITS;
use crate::clcrypto::log::ValueRef;
use crate::clcrypto::{FinalKey, HeFunction};
use crate::gardenhose::GardenHoseSpec;
use crate::qsim::Basis;

/// One step interface; see the module docs.
pub(crate) trait Tape {
    fn signed(&mut self, label: &str, count: usize, epoch: u32) -> Result<Vec<ValueRef>, TrapTpError>;
    fn claim(&mut self, gate: &CircuitGate) -> Result<(), TrapTpError>;
    fn enc(&mut self, epoch: u32, bits: &Bits) -> Result<ValueRef, TrapTpError>;
    fn eval(&mut self, epoch: u32, f: &HeFunction, inputs: &[ValueRef]) -> Result<Vec<ValueRef>, TrapTpError>;
    fn recrypt(&mut self, epoch: u32, material: ValueRef, input: ValueRef) -> Result<ValueRef, TrapTpError>;
    fn cnot(&mut self, control: &str, target: &str) -> Result<(), TrapTpError>;
    /// Measures a whole block; the machine encrypts the record right after.
    fn measure(&mut self, resource: &str, basis: Basis) -> Result<Bits, TrapTpError>;
    /// Plaintext of a one-bit routing value.
    fn route(&mut self, b: ValueRef) -> Result<bool, TrapTpError>;
    fn finish(&mut self, keys: &[FinalKey]) -> Result<(), TrapTpError>;
}

/// Which permutation a block is laid out under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PiSource {
    Global,
    /// The gadget permutation of T gadget `i`, stored after the key material in its
    /// info record.
    Gadget(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ResState {
    pub x: ValueRef,
    pub z: ValueRef,
    pub pi: PiSource,
}

/// A block measurement made during the run, with the values needed to check it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementRef {
    pub resource: String,
    pub basis: Basis,
    pub outcome: Bits,
    pub x: ValueRef,
    pub z: ValueRef,
    pub pi: PiSource,
    pub bit: ValueRef,
    pub flag: ValueRef,
}

/// Canonical order of the signed records for `n` input slots.
pub fn resource_labels(b: Budgets, n: usize, spec: Option<&GardenHoseSpec>) -> Vec<String> {
    let mut out = vec!["keys".to_string()];
    out.extend((0..n).map(|k| format!("in{k}")));
    out.extend((1..=b.p).map(|i| format!("P{i}")));
    out.extend((1..=b.t).map(|i| format!("T{i}")));
    for i in 1..=b.h {
        out.push(format!("HA{i}"));
        out.push(format!("HB{i}"));
    }
    if let Some(spec) = spec {
        for i in 1..=b.t {
            out.push(format!("G{i}.info"));
            out.push(format!("G{i}.in"));
            out.push(format!("G{i}.out"));
            out.extend(spec.middle_sockets().map(|s| format!("G{i}.m{s}")));
        }
    }
    out
}

fn socket_label(spec: &GardenHoseSpec, i: usize, s: usize) -> String {
    if s == spec.input_socket() {
        format!("G{i}.in")
    } else if s == spec.output_socket() {
        format!("G{i}.out")
    } else {
        format!("G{i}.m{s}")
    }
}

pub(crate) struct Machine {
    level: u8,
    m: usize,
    budgets: Budgets,
    spec: Option<GardenHoseSpec>,
    pub res: BTreeMap<String, ResState>,
    pub slots: Vec<Option<String>>,
    /// Encrypted logical outcome of each measured wire.
    pub outcomes: BTreeMap<usize, ValueRef>,
    pub epoch: u32,
    epochs: HashMap<ValueRef, u32>,
    pub pi: ValueRef,
    /// Info record of gadget `i` at index `i - 1`.
    pub info: Vec<ValueRef>,
    used: Budgets,
    pub measurements: Vec<MeasurementRef>,
    pub final_keys: Vec<FinalKey>,
}

impl Machine {
    /// Runs `c` over `n_slots` encrypted inputs, driving `tape`.
    pub fn run<T: Tape>(
        tape: &mut T,
        level: u8,
        m: usize,
        budgets: Budgets,
        spec: Option<GardenHoseSpec>,
        n_slots: usize,
        c: &CircuitDesc,
    ) -> Result<Machine, TrapTpError> {
        if c.n_qubits() > n_slots {
            return Err(TrapTpError::SlotOutOfRange(c.n_qubits() - 1));
        }
        if budgets.t > 0 && spec.is_none() {
            return Err(TrapTpError::NoGardenHose);
        }
        let mut mc = Machine {
            level,
            m,
            budgets,
            spec,
            res: BTreeMap::new(),
            slots: Vec::new(),
            outcomes: BTreeMap::new(),
            epoch: 0,
            epochs: HashMap::new(),
            pi: ValueRef::new(0, 0),
            info: Vec::new(),
            used: Budgets::default(),
            measurements: Vec::new(),
            final_keys: Vec::new(),
        };
        mc.prologue(tape, n_slots)?;
        for g in c.gates() {
            tape.claim(g)?;
            mc.gate(tape, g)?;
        }
        for (k, s) in mc.slots.iter().enumerate() {
            if let Some(label) = s {
                let r = mc.res[label];
                mc.final_keys.push(FinalKey { slot: k as u32, x: r.x, z: r.z });
            }
        }
        tape.finish(&mc.final_keys)?;
        Ok(mc)
    }

    fn prologue<T: Tape>(&mut self, tape: &mut T, n_slots: usize) -> Result<(), TrapTpError> {
        for label in resource_labels(self.budgets, n_slots, self.spec.as_ref()) {
            let epoch = match label.strip_prefix('G') {
                Some(rest) => rest.split('.').next().and_then(|i| i.parse::<u32>().ok()).unwrap_or(0),
                None => 0,
            };
            let pi = if label.starts_with('G') && label.contains(".m") {
                PiSource::Gadget(epoch as usize)
            } else {
                PiSource::Global
            };
            if label == "keys" {
                self.pi = tape.signed(&label, 1, 0)?[0];
                self.epochs.insert(self.pi, 0);
                continue;
            }
            if label.ends_with(".info") {
                let r = tape.signed(&label, 1, epoch)?[0];
                self.epochs.insert(r, epoch);
                self.info.push(r);
                continue;
            }
            let refs = tape.signed(&label, 2, epoch)?;
            for r in &refs {
                self.epochs.insert(*r, epoch);
            }
            self.res.insert(label.clone(), ResState { x: refs[0], z: refs[1], pi });
        }
        self.slots = (0..n_slots).map(|k| Some(format!("in{k}"))).collect();
        Ok(())
    }

    fn slot(&self, q: usize) -> Result<String, TrapTpError> {
        match self.slots.get(q) {
            None => Err(TrapTpError::SlotOutOfRange(q)),
            Some(None) => Err(TrapTpError::MeasuredSlot(q)),
            Some(Some(l)) => Ok(l.clone()),
        }
    }

    fn get(&self, label: &str) -> Result<ResState, TrapTpError> {
        self.res.get(label).copied().ok_or_else(|| TrapTpError::UnknownResource(label.to_string()))
    }

    fn eval<T: Tape>(&mut self, tape: &mut T, f: HeFunction, inputs: &[ValueRef]) -> Result<Vec<ValueRef>, TrapTpError> {
        let out = tape.eval(self.epoch, &f, inputs)?;
        for r in &out {
            self.epochs.insert(*r, self.epoch);
        }
        Ok(out)
    }

    fn enc<T: Tape>(&mut self, tape: &mut T, bits: &Bits) -> Result<ValueRef, TrapTpError> {
        let r = tape.enc(self.epoch, bits)?;
        self.epochs.insert(r, self.epoch);
        Ok(r)
    }

    fn data_mask(&self) -> Bits {
        Bits::expand_bit(true, self.m, 2 * self.m)
    }

    /// Logical X or Z on a globally laid-out block, optionally conditioned on an
    /// encrypted bit.
    fn flip<T: Tape>(&mut self, tape: &mut T, label: &str, x_side: bool, cond: Option<ValueRef>) -> Result<(), TrapTpError> {
        let r = self.get(label)?;
        if r.pi != PiSource::Global {
            return Err(TrapTpError::Structure(format!("{label} is not under the global permutation")));
        }
        let pad = if x_side { r.x } else { r.z };
        let u = self.eval(tape, HeFunction::Unpermute, &[self.pi, pad])?[0];
        let v = match cond {
            None => self.eval(tape, HeFunction::FlipMask { mask: self.data_mask() }, &[u])?[0],
            Some(b) => {
                let e = self.eval(tape, HeFunction::ExpandBit { m: self.m as u32 }, &[b])?[0];
                self.eval(tape, HeFunction::Xor, &[u, e])?[0]
            }
        };
        let new = self.eval(tape, HeFunction::Permute, &[self.pi, v])?[0];
        let st = self.res.get_mut(label).expect("resource checked above");
        if x_side {
            st.x = new;
        } else {
            st.z = new;
        }
        Ok(())
    }

    fn cnot<T: Tape>(&mut self, tape: &mut T, a: &str, b: &str) -> Result<(), TrapTpError> {
        let ra = self.get(a)?;
        let rb = self.get(b)?;
        if ra.pi != rb.pi {
            return Err(TrapTpError::Structure(format!("{a} and {b} have different layouts")));
        }
        tape.cnot(a, b)?;
        let out = self.eval(tape, HeFunction::CnotKeyUpdate, &[ra.x, ra.z, rb.x, rb.z])?;
        self.res.insert(a.to_string(), ResState { x: out[0], z: out[1], pi: ra.pi });
        self.res.insert(b.to_string(), ResState { x: out[2], z: out[3], pi: rb.pi });
        Ok(())
    }

    /// Measures a block and checks it homomorphically; returns the encrypted logical bit.
    fn measure<T: Tape>(&mut self, tape: &mut T, label: &str, basis: Basis) -> Result<ValueRef, TrapTpError> {
        let r = self.get(label)?;
        let outcome = tape.measure(label, basis)?;
        let record = self.enc(tape, &outcome)?;
        let basis_bit = self.enc(tape, &Bits::from_bools(vec![basis == Basis::X]))?;
        let (src, offset) = match r.pi {
            PiSource::Global => (self.pi, 0),
            PiSource::Gadget(i) => (self.info[i - 1], SK_BITS as u32),
        };
        let f = HeFunction::VerDecMeasurement { level: self.level, pi_offset: offset };
        let out = self.eval(tape, f, &[src, r.x, r.z, record, basis_bit])?;
        self.res.remove(label);
        self.measurements.push(MeasurementRef {
            resource: label.to_string(),
            basis,
            outcome,
            x: r.x,
            z: r.z,
            pi: r.pi,
            bit: out[0],
            flag: out[1],
        });
        Ok(out[0])
    }

    fn take_budget(&mut self, kind: &'static str) -> Result<usize, TrapTpError> {
        let (used, limit) = match kind {
            "P" => (&mut self.used.p, self.budgets.p),
            "H" => (&mut self.used.h, self.budgets.h),
            _ => (&mut self.used.t, self.budgets.t),
        };
        if *used >= limit {
            return Err(TrapTpError::Budget { kind, limit });
        }
        *used += 1;
        Ok(*used)
    }

    fn gate<T: Tape>(&mut self, tape: &mut T, g: &CircuitGate) -> Result<(), TrapTpError> {
        match *g {
            CircuitGate::X(q) => self.flip(tape, &self.slot(q)?, true, None),
            CircuitGate::Z(q) => self.flip(tape, &self.slot(q)?, false, None),
            CircuitGate::CondX { target, control } | CircuitGate::CondZ { target, control } => {
                let b = *self.outcomes.get(&control).ok_or(TrapTpError::NotMeasured(control))?;
                let x_side = matches!(g, CircuitGate::CondX { .. });
                self.flip(tape, &self.slot(target)?, x_side, Some(b))
            }
            CircuitGate::Cnot(a, b) => {
                let (la, lb) = (self.slot(a)?, self.slot(b)?);
                self.cnot(tape, &la, &lb)
            }
            CircuitGate::Measure(q, basis) => {
                let bit = self.measure(tape, &self.slot(q)?, basis)?;
                self.outcomes.insert(q, bit);
                self.slots[q] = None;
                Ok(())
            }
            CircuitGate::P(q) => {
                let data = self.slot(q)?;
                let mu = format!("P{}", self.take_budget("P")?);
                self.cnot(tape, &mu, &data)?;
                let s = self.measure(tape, &data, Basis::Z)?;
                self.flip(tape, &mu, true, Some(s))?;
                self.flip(tape, &mu, false, Some(s))?;
                self.slots[q] = Some(mu);
                Ok(())
            }
            CircuitGate::H(q) => {
                let data = self.slot(q)?;
                let i = self.take_budget("H")?;
                let (ha, hb) = (format!("HA{i}"), format!("HB{i}"));
                self.cnot(tape, &data, &hb)?;
                let s = self.measure(tape, &data, Basis::X)?;
                let t = self.measure(tape, &hb, Basis::Z)?;
                self.flip(tape, &ha, true, Some(s))?;
                self.flip(tape, &ha, false, Some(t))?;
                self.slots[q] = Some(ha);
                Ok(())
            }
            CircuitGate::T(q) => self.t_gate(tape, q),
        }
    }

    fn t_gate<T: Tape>(&mut self, tape: &mut T, q: usize) -> Result<(), TrapTpError> {
        let data = self.slot(q)?;
        let i = self.take_budget("T")?;
        let spec = self.spec.clone().ok_or(TrapTpError::NoGardenHose)?;
        let mu = format!("T{i}");
        self.cnot(tape, &mu, &data)?;
        let b = self.measure(tape, &data, Basis::Z)?;
        self.flip(tape, &mu, true, Some(b))?;

        // move every live value into the next epoch; b stays behind
        let prev = self.epoch;
        self.epoch += 1;
        let material = self.info[i - 1];
        let mut live: Vec<ValueRef> = vec![self.pi];
        for r in self.res.values() {
            live.extend([r.x, r.z]);
        }
        live.extend(self.outcomes.values().copied());
        let mut moved: HashMap<ValueRef, ValueRef> = HashMap::new();
        for v in live {
            if self.epochs.get(&v) != Some(&prev) || moved.contains_key(&v) {
                continue;
            }
            let n = tape.recrypt(self.epoch, material, v)?;
            self.epochs.insert(n, self.epoch);
            moved.insert(v, n);
        }
        let fwd = |v: ValueRef| moved.get(&v).copied().unwrap_or(v);
        self.pi = fwd(self.pi);
        for r in self.res.values_mut() {
            r.x = fwd(r.x);
            r.z = fwd(r.z);
        }
        for v in self.outcomes.values_mut() {
            *v = fwd(*v);
        }

        let input = socket_label(&spec, i, spec.input_socket());
        let mut bell = Vec::new();
        self.cnot(tape, &mu, &input)?;
        bell.push(self.measure(tape, &mu, Basis::X)?);
        bell.push(self.measure(tape, &input, Basis::Z)?);
        let route = tape.route(b)?;
        for &(u, v) in &spec.routes[route as usize] {
            let (lu, lv) = (socket_label(&spec, i, u), socket_label(&spec, i, v));
            self.cnot(tape, &lu, &lv)?;
            bell.push(self.measure(tape, &lu, Basis::X)?);
            bell.push(self.measure(tape, &lv, Basis::Z)?);
        }
        let out = socket_label(&spec, i, spec.output_socket());
        let r = self.get(&out)?;
        let mut inputs = vec![r.x, r.z, self.pi, material];
        inputs.extend(bell);
        inputs.push(b);
        let upd = self.eval(tape, HeFunction::TKeyUpdate, &inputs)?;
        self.res.insert(out.clone(), ResState { x: upd[0], z: upd[1], pi: r.pi });
        self.slots[q] = Some(out);
        Ok(())
    }
}

/// Length of a gadget info plaintext for blocks of `len` qubits.
pub(crate) fn info_len(len: usize) -> usize {
    SK_BITS + len * PERM_ENTRY_BITS
}
