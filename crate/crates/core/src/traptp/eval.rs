//! Honest evaluation: runs the program against real blocks and writes the log.

use std::collections::{BTreeMap, HashMap};

use rand::RngCore;

use super::program::{Machine, Tape};
use super::{EvalKey, TrapTpError, VqfheCiphertext};
use crate::bits::Bits;
use crate::circuit::{CircuitDesc, CircuitGate};
use crate::clcrypto::log::ValueRef;
use crate::clcrypto::{ComputationLog, FinalKey, HeBackend, HeCiphertext, HeFunction, LogEntry, SignedMessage};
use crate::qsim::{Basis, RngStream};
use crate::trapcode::{BlockId, BlockSystem};

struct Recorder<'a> {
    sys: &'a mut BlockSystem,
    backend: &'a dyn HeBackend,
    evk: &'a EvalKey,
    records: BTreeMap<String, &'a SignedMessage>,
    blocks: HashMap<String, BlockId>,
    values: HashMap<ValueRef, HeCiphertext>,
    log: ComputationLog,
    rng: &'a mut RngStream,
}

impl Recorder<'_> {
    fn value(&self, r: ValueRef) -> Result<&HeCiphertext, TrapTpError> {
        self.values.get(&r).ok_or_else(|| TrapTpError::Structure(format!("no value {r}")))
    }

    fn block(&self, label: &str) -> Result<BlockId, TrapTpError> {
        self.blocks.get(label).copied().ok_or_else(|| TrapTpError::UnknownResource(label.to_string()))
    }
}

impl Tape for Recorder<'_> {
    fn signed(&mut self, label: &str, count: usize, _epoch: u32) -> Result<Vec<ValueRef>, TrapTpError> {
        let rec = *self.records.get(label).ok_or_else(|| TrapTpError::UnknownResource(label.to_string()))?;
        if rec.ciphertexts.len() != count {
            return Err(TrapTpError::Structure(format!("record {label} holds {} values", rec.ciphertexts.len())));
        }
        let seq = self.log.push(LogEntry::Signed(rec.clone()));
        Ok(rec
            .ciphertexts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let r = ValueRef::new(seq, i as u32);
                self.values.insert(r, c.clone());
                r
            })
            .collect())
    }

    fn claim(&mut self, gate: &CircuitGate) -> Result<(), TrapTpError> {
        self.log.push(LogEntry::Claim { gate: *gate });
        Ok(())
    }

    fn enc(&mut self, epoch: u32, bits: &Bits) -> Result<ValueRef, TrapTpError> {
        let nonce = self.rng.next_u64();
        let output = self.backend.enc(self.evk.public.pk(epoch)?, bits, nonce);
        let seq = self.log.push(LogEntry::Enc { epoch, plaintext: bits.clone(), nonce, output: output.clone() });
        let r = ValueRef::new(seq, 0);
        self.values.insert(r, output);
        Ok(r)
    }

    fn eval(&mut self, epoch: u32, f: &HeFunction, inputs: &[ValueRef]) -> Result<Vec<ValueRef>, TrapTpError> {
        let nonces: Vec<u64> = (0..f.output_count()).map(|_| self.rng.next_u64()).collect();
        let cts = inputs.iter().map(|r| self.value(*r)).collect::<Result<Vec<_>, _>>()?;
        let out = self.backend.eval(self.evk.public.evk(epoch)?, f, &cts, &nonces)?;
        let seq = self.log.push(LogEntry::Eval {
            epoch,
            function: f.clone(),
            inputs: inputs.to_vec(),
            nonces,
            outputs: out.iter().map(HeCiphertext::digest).collect(),
        });
        Ok(out
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let r = ValueRef::new(seq, i as u32);
                self.values.insert(r, c);
                r
            })
            .collect())
    }

    fn recrypt(&mut self, epoch: u32, material: ValueRef, input: ValueRef) -> Result<ValueRef, TrapTpError> {
        let nonce = self.rng.next_u64();
        let out = self.backend.recrypt(self.evk.public.evk(epoch)?, self.value(material)?, self.value(input)?, nonce)?;
        let seq = self.log.push(LogEntry::Recrypt { epoch, material, input, nonce, output: out.digest() });
        let r = ValueRef::new(seq, 0);
        self.values.insert(r, out);
        Ok(r)
    }

    fn cnot(&mut self, control: &str, target: &str) -> Result<(), TrapTpError> {
        let (c, t) = (self.block(control)?, self.block(target)?);
        self.sys.transversal_cnot(c, t)?;
        Ok(())
    }

    fn measure(&mut self, resource: &str, basis: Basis) -> Result<Bits, TrapTpError> {
        let id = self.block(resource)?;
        let outcome = self.sys.measure(id, basis, self.rng)?;
        self.blocks.remove(resource);
        self.log.push(LogEntry::Measurement { resource: resource.to_string(), basis, outcome: outcome.clone() });
        Ok(outcome)
    }

    fn route(&mut self, b: ValueRef) -> Result<bool, TrapTpError> {
        Ok(self.backend.route_bit(self.value(b)?)?)
    }

    fn finish(&mut self, keys: &[FinalKey]) -> Result<(), TrapTpError> {
        self.log.push(LogEntry::Final { keys: keys.to_vec() });
        Ok(())
    }
}

/// Honest evaluation of `c` on `ct`. Returns the evaluated ciphertext and the log.
pub fn eval(
    sys: &mut BlockSystem,
    backend: &dyn HeBackend,
    evk: &EvalKey,
    ct: &VqfheCiphertext,
    c: &CircuitDesc,
    rng: &mut RngStream,
) -> Result<(VqfheCiphertext, ComputationLog), TrapTpError> {
    let mut records: BTreeMap<String, &SignedMessage> = evk.records.iter().map(|r| (r.label.clone(), r)).collect();
    for r in &ct.records {
        records.insert(r.label.clone(), r);
    }
    let mut blocks: HashMap<String, BlockId> = evk.resources.iter().map(|(l, b)| (l.clone(), *b)).collect();
    for (k, b) in ct.blocks.iter().enumerate() {
        let b = b.ok_or(TrapTpError::MeasuredSlot(k))?;
        blocks.insert(format!("in{k}"), b);
    }
    let spec = backend.garden_hose();
    let m = sys.code().m();
    let mut tape = Recorder {
        sys,
        backend,
        evk,
        records,
        blocks,
        values: HashMap::new(),
        log: ComputationLog::new(),
        rng,
    };
    let mc = Machine::run(&mut tape, evk.level, m, evk.budgets, spec, ct.len(), c)?;
    let mut out = VqfheCiphertext { records: ct.records.clone(), epoch: mc.epoch, ..Default::default() };
    for slot in &mc.slots {
        match slot {
            Some(label) => {
                let r = mc.res[label];
                out.blocks.push(Some(tape.block(label)?));
                out.keys.push(Some((tape.value(r.x)?.clone(), tape.value(r.z)?.clone())));
            }
            None => {
                out.blocks.push(None);
                out.keys.push(None);
            }
        }
    }
    Ok((out, tape.log))
}
