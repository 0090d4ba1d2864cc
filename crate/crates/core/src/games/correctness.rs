//! Honest end-to-end runs on random circuits, compared against direct simulation.

use std::collections::HashMap;

use super::GameError;
use crate::circuit::{apply_ideal, CircuitDesc, Outcomes};
use crate::clcrypto::TransparentHe;
use crate::codes::CssCode;
use crate::qsim::{fidelity, QuantumSystem, RngStream, StateVector};
use crate::trapcode::BlockSystem;
use crate::traptp::{self, Budgets, Variant, VqfheCiphertext};

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectnessRecord {
    pub trial: u64,
    pub gates: usize,
    pub t_gates: usize,
    pub accepted: bool,
    /// Fidelity of the decrypted outputs with the plaintext run that saw the same
    /// measurement outcomes; 0 on rejection.
    pub fidelity: f64,
}

/// Runs `c` on `input` through KeyGen, Enc, Eval and VerDec with budgets sized to `c`.
/// Every measured wire of `c` must be an output, so the comparison run can be forced
/// onto the same outcomes.
pub fn honest_run(
    c: &CircuitDesc,
    input: &StateVector,
    level: u8,
    rng: &mut RngStream,
) -> Result<CorrectnessRecord, GameError> {
    if let Some(w) = c.measured_wires().into_iter().find(|w| !c.outputs().contains(w)) {
        return Err(GameError::Invalid(format!("measured wire {w} is not an output")));
    }
    let counts = c.counts();
    let he = TransparentHe;
    let mut sys = BlockSystem::new(CssCode::steane(level as usize).map_err(|e| GameError::Invalid(e.to_string()))?);
    let (sk, evk, _) = traptp::keygen(&mut sys, &he, level, Budgets::new(counts.t, counts.p, counts.h), rng)?;
    let qs = sys.quantum_mut().alloc_state(input.clone());
    let mut ct = VqfheCiphertext::default();
    traptp::encrypt(&sk, &he, &mut sys, &mut ct, &qs, rng)?;
    let (ct, log) = traptp::eval(&mut sys, &he, &evk, &ct, c, rng)?;
    let v = traptp::verdec(&mut sys, &he, &sk, &ct, &log, c, Variant::Standard, None, rng)?;
    let mut rec = CorrectnessRecord { trial: 0, gates: c.len(), t_gates: counts.t, accepted: v.accepted, fidelity: 0.0 };
    if !v.accepted {
        return Ok(rec);
    }

    let forced: HashMap<usize, bool> = v.outputs.classical.iter().copied().collect();
    let mut plain = QuantumSystem::new();
    let wires = plain.alloc_state(input.clone());
    let expected = apply_ideal(&mut plain, &wires, c, Outcomes::Forced(&forced), &mut RngStream::new(0))?;
    if expected.classical != v.outputs.classical {
        return Ok(rec);
    }
    let got = sys.quantum().state_of(&v.outputs.qubit_ids())?;
    let want = plain.state_of(&expected.qubit_ids())?;
    rec.fidelity = fidelity(&got, &want)?;
    Ok(rec)
}

/// Trial `trial` of the random-circuit suite: up to `max_qubits` wires, up to
/// `max_t` T gates, a random input state.
pub fn correctness_trial(level: u8, max_qubits: usize, max_t: usize, seed: u64, trial: u64) -> Result<CorrectnessRecord, GameError> {
    let mut rng = RngStream::derive(seed, trial);
    let n = 1 + rng.below(max_qubits);
    let len = 1 + rng.below(12);
    let c = CircuitDesc::random(n, len, max_t, &mut rng);
    let input = StateVector::random(n, &mut rng)?;
    let mut rec = honest_run(&c, &input, level, &mut rng)?;
    rec.trial = trial;
    Ok(rec)
}
