//! The trap-code scheme: Pauli gates by key update, transversal CNOT, measurement by
//! recording all physical outcomes, and verified decryption along the claimed circuit.

use std::collections::HashMap;

use super::{keygen, verdec_measurement, BlockId, BlockSystem, KeyUpdateRule, TrapError, TrapKey};
use crate::bits::Bits;
use crate::circuit::{CircuitDesc, CircuitGate, WireOutputs};
use crate::codes::CssCode;
use crate::qsim::{Basis, QubitId, RngStream};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TcSlot {
    Quantum(BlockId),
    Measured { basis: Basis, record: Bits },
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TrapCiphertext {
    pub slots: Vec<TcSlot>,
}

impl TrapCiphertext {
    pub fn quantum_blocks(&self) -> Vec<BlockId> {
        self.slots
            .iter()
            .filter_map(|s| if let TcSlot::Quantum(b) = s { Some(*b) } else { None })
            .collect()
    }

    fn block(&self, i: usize) -> Result<BlockId, TrapError> {
        match self.slots.get(i) {
            None => Err(TrapError::SlotOutOfRange(i)),
            Some(TcSlot::Measured { .. }) => Err(TrapError::MeasuredSlot(i)),
            Some(TcSlot::Quantum(b)) => Ok(*b),
        }
    }
}

/// Result of verified decryption. On reject `outputs` holds the fixed dummy: fresh `|0>`
/// qubits for quantum outputs and 0 for classical ones.
#[derive(Clone, Debug, PartialEq)]
pub struct TcDecryption {
    pub accepted: bool,
    pub outputs: WireOutputs,
}

/// Scheme handle carrying the code.
#[derive(Clone, Debug)]
pub struct TrapCode {
    code: CssCode,
}

impl TrapCode {
    pub fn new(code: CssCode) -> Self {
        TrapCode { code }
    }

    pub fn code(&self) -> &CssCode {
        &self.code
    }

    pub fn keygen(&self, n: usize, rng: &mut RngStream) -> TrapKey {
        keygen(n, &self.code, rng)
    }

    /// Encrypts `logical` into slot `i` of `ct`.
    pub fn enc(
        &self,
        sys: &mut BlockSystem,
        key: &TrapKey,
        ct: &mut TrapCiphertext,
        i: usize,
        logical: QubitId,
    ) -> Result<BlockId, TrapError> {
        key.check_slot(i)?;
        if i != ct.slots.len() {
            return Err(if i < ct.slots.len() { TrapError::SlotReuse(i) } else { TrapError::SlotOutOfRange(i) });
        }
        let b = sys.encrypt(logical, &key.pi, &key.x[i], &key.z[i])?;
        ct.slots.push(TcSlot::Quantum(b));
        Ok(b)
    }

    /// Encrypts `qubits` into consecutive slots starting at the ciphertext's current length.
    pub fn encrypt_all(
        &self,
        sys: &mut BlockSystem,
        key: &TrapKey,
        ct: &mut TrapCiphertext,
        qubits: &[QubitId],
    ) -> Result<(), TrapError> {
        for q in qubits {
            self.enc(sys, key, ct, ct.slots.len(), *q)?;
        }
        Ok(())
    }

    pub fn eval_cnot(&self, sys: &mut BlockSystem, ct: &TrapCiphertext, i: usize, j: usize) -> Result<(), TrapError> {
        let (bi, bj) = (ct.block(i)?, ct.block(j)?);
        sys.transversal_cnot(bi, bj)
    }

    pub fn eval_measure(
        &self,
        sys: &mut BlockSystem,
        ct: &mut TrapCiphertext,
        i: usize,
        basis: Basis,
        rng: &mut RngStream,
    ) -> Result<(), TrapError> {
        let b = ct.block(i)?;
        let record = sys.measure(b, basis, rng)?;
        ct.slots[i] = TcSlot::Measured { basis, record };
        Ok(())
    }

    /// Honest evaluation. Pauli gates, conditional or not, leave the ciphertext alone.
    pub fn eval(
        &self,
        sys: &mut BlockSystem,
        ct: &mut TrapCiphertext,
        c: &CircuitDesc,
        rng: &mut RngStream,
    ) -> Result<(), TrapError> {
        if c.n_qubits() > ct.slots.len() {
            return Err(TrapError::SlotOutOfRange(c.n_qubits() - 1));
        }
        for g in c.gates() {
            match *g {
                CircuitGate::X(_) | CircuitGate::Z(_) | CircuitGate::CondX { .. } | CircuitGate::CondZ { .. } => {}
                CircuitGate::Cnot(a, b) => self.eval_cnot(sys, ct, a, b)?,
                CircuitGate::Measure(q, basis) => self.eval_measure(sys, ct, q, basis, rng)?,
                other => return Err(TrapError::UnsupportedGate(other.to_string())),
            }
        }
        Ok(())
    }

    /// Verified decryption along `c`: key updates gate by gate, classical verification
    /// of measured slots with the keys current at that point, trap checks on the rest.
    pub fn verdec(
        &self,
        sys: &mut BlockSystem,
        key: &TrapKey,
        ct: &TrapCiphertext,
        c: &CircuitDesc,
        rng: &mut RngStream,
    ) -> Result<TcDecryption, TrapError> {
        let n = c.n_qubits();
        if ct.slots.len() < n || key.slots() < n {
            return Err(TrapError::SlotOutOfRange(n.saturating_sub(1)));
        }
        let mut k = key.clone();
        let mut outcomes: HashMap<usize, bool> = HashMap::new();
        let mut accepted = true;
        for g in c.gates() {
            let rule = match *g {
                CircuitGate::X(q) => Some(KeyUpdateRule::X(q)),
                CircuitGate::Z(q) => Some(KeyUpdateRule::Z(q)),
                CircuitGate::Cnot(a, b) => Some(KeyUpdateRule::Cnot(a, b)),
                CircuitGate::CondX { target, control } => Some(KeyUpdateRule::CondX(target, outcomes[&control])),
                CircuitGate::CondZ { target, control } => Some(KeyUpdateRule::CondZ(target, outcomes[&control])),
                CircuitGate::Measure(q, basis) => {
                    match &ct.slots[q] {
                        TcSlot::Measured { basis: b, record } if *b == basis => {
                            let v = verdec_measurement(&self.code, &k.pi, &k.x[q], &k.z[q], record, basis)?;
                            accepted &= v.accepted;
                            outcomes.insert(q, v.bit);
                        }
                        _ => {
                            accepted = false;
                            outcomes.insert(q, false);
                        }
                    }
                    None
                }
                other => return Err(TrapError::UnsupportedGate(other.to_string())),
            };
            if let Some(r) = rule {
                r.apply(&mut k)?;
            }
        }

        let mut decrypted: Vec<(usize, QubitId)> = Vec::new();
        for (w, slot) in ct.slots.iter().enumerate().take(n) {
            if outcomes.contains_key(&w) {
                if let TcSlot::Quantum(b) = slot {
                    // measured in the circuit but still quantum in the ciphertext
                    accepted = false;
                    sys.discard(*b, rng)?;
                }
                continue;
            }
            match slot {
                TcSlot::Quantum(b) => match sys.verdec_qubit(*b, &k.pi, &k.x[w], &k.z[w], rng)? {
                    Some(q) => decrypted.push((w, q)),
                    None => accepted = false,
                },
                TcSlot::Measured { .. } => accepted = false,
            }
        }

        if !accepted {
            for (_, q) in decrypted {
                sys.quantum_mut().discard(q, rng)?;
            }
            return Ok(TcDecryption { accepted: false, outputs: reject_outputs(sys, c)? });
        }
        let mut outputs = WireOutputs::default();
        for (w, q) in decrypted {
            if c.outputs().contains(&w) {
                outputs.quantum.push((w, q));
            } else {
                sys.quantum_mut().discard(q, rng)?;
            }
        }
        outputs.quantum.sort_by_key(|(w, _)| c.outputs().iter().position(|o| o == w));
        for &o in c.outputs() {
            if let Some(b) = outcomes.get(&o) {
                outputs.classical.push((o, *b));
            }
        }
        Ok(TcDecryption { accepted: true, outputs })
    }
}

/// The fixed reject output: `|0>` on every unmeasured output wire, 0 on measured ones.
pub(crate) fn reject_outputs(sys: &mut BlockSystem, c: &CircuitDesc) -> Result<WireOutputs, TrapError> {
    let measured = c.measured_wires();
    let mut out = WireOutputs::default();
    for &o in c.outputs() {
        if measured.contains(&o) {
            out.classical.push((o, false));
        } else {
            out.quantum.push((o, sys.quantum_mut().alloc('0')?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{fidelity, Gate, StateVector, TOLERANCE};

    fn setup(init: &str, seed: u64) -> (TrapCode, BlockSystem, TrapKey, TrapCiphertext, RngStream) {
        let code = CssCode::steane(1).unwrap();
        let tc = TrapCode::new(code.clone());
        let mut rng = RngStream::new(seed);
        let key = tc.keygen(init.len(), &mut rng);
        let mut sys = BlockSystem::new(code);
        let qs = sys.quantum_mut().alloc_state(StateVector::new_register(init.len(), init).unwrap());
        let mut ct = TrapCiphertext::default();
        tc.encrypt_all(&mut sys, &key, &mut ct, &qs).unwrap();
        (tc, sys, key, ct, rng)
    }

    fn output_state(sys: &BlockSystem, d: &TcDecryption) -> StateVector {
        sys.quantum().state_of(&d.outputs.qubit_ids()).unwrap()
    }

    #[test]
    fn cnot_on_one_zero() {
        let (tc, mut sys, key, mut ct, mut rng) = setup("10", 1);
        let c = CircuitDesc::parse("CNOT 0 1").unwrap();
        tc.eval(&mut sys, &mut ct, &c, &mut rng).unwrap();
        let d = tc.verdec(&mut sys, &key, &ct, &c, &mut rng).unwrap();
        assert!(d.accepted);
        let s = output_state(&sys, &d);
        assert!((fidelity(&s, &StateVector::new_register(2, "11").unwrap()).unwrap() - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn x_cnot_measure() {
        for seed in 0..20 {
            let (tc, mut sys, key, mut ct, mut rng) = setup("00", seed);
            let c = CircuitDesc::parse("X 0; CNOT 0 1; MEAS 1 Z").unwrap();
            tc.eval(&mut sys, &mut ct, &c, &mut rng).unwrap();
            let d = tc.verdec(&mut sys, &key, &ct, &c, &mut rng).unwrap();
            assert!(d.accepted);
            assert_eq!(d.outputs.bit(1), Some(true));
        }
    }

    #[test]
    fn measurement_bases() {
        for seed in 0..100 {
            let (tc, mut sys, key, mut ct, mut rng) = setup("1", seed);
            let c = CircuitDesc::parse("MEAS 0 Z").unwrap();
            tc.eval(&mut sys, &mut ct, &c, &mut rng).unwrap();
            let d = tc.verdec(&mut sys, &key, &ct, &c, &mut rng).unwrap();
            assert!(d.accepted && d.outputs.bit(0) == Some(true));
        }
        let (tc, mut sys, key, mut ct, mut rng) = setup("+", 3);
        let c = CircuitDesc::parse("MEAS 0 X").unwrap();
        tc.eval(&mut sys, &mut ct, &c, &mut rng).unwrap();
        let d = tc.verdec(&mut sys, &key, &ct, &c, &mut rng).unwrap();
        assert!(d.accepted && d.outputs.bit(0) == Some(false));
    }

    #[test]
    fn claimed_x_without_work_applies_x() {
        let (tc, mut sys, key, ct, mut rng) = setup("0", 4);
        let c = CircuitDesc::parse("X 0").unwrap();
        let d = tc.verdec(&mut sys, &key, &ct, &c, &mut rng).unwrap();
        assert!(d.accepted);
        let s = output_state(&sys, &d);
        let mut want = StateVector::new_register(1, "0").unwrap();
        want.apply_gate(Gate::X, 0).unwrap();
        assert!((fidelity(&s, &want).unwrap() - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn measured_slot_errors() {
        let (tc, mut sys, _key, mut ct, mut rng) = setup("00", 5);
        tc.eval_measure(&mut sys, &mut ct, 0, Basis::Z, &mut rng).unwrap();
        assert_eq!(tc.eval_cnot(&mut sys, &ct, 0, 1), Err(TrapError::MeasuredSlot(0)));
        assert!(tc.eval_measure(&mut sys, &mut ct, 0, Basis::Z, &mut rng).is_err());
    }

    #[test]
    fn reject_gives_zero_state() {
        let (tc, mut sys, key, ct, mut rng) = setup("1", 6);
        let b = ct.quantum_blocks()[0];
        sys.apply_pauli_string(b, &Bits::ones(21), &Bits::zeros(21)).unwrap();
        let c = CircuitDesc::identity(1);
        let d = tc.verdec(&mut sys, &key, &ct, &c, &mut rng).unwrap();
        assert!(!d.accepted);
        let s = output_state(&sys, &d);
        assert!((fidelity(&s, &StateVector::new_register(1, "0").unwrap()).unwrap() - 1.0).abs() < TOLERANCE);
    }
}
