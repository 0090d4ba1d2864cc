//! Built-in adversaries.

use super::{Adversary, Attack, GameError, VqfheScheme};
use crate::circuit::{CircuitDesc, WireOutputs};
use crate::qsim::{Gate, QubitId, RngStream, StateVector};
use crate::trapcode::BlockSystem;

/// How an adversary turns what it sees into a guess.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Guess {
    Random,
    Zero,
    /// Guess 0 exactly when the verifier accepted.
    ZeroIfAccepted,
}

impl Guess {
    fn apply(self, accepted: bool, rng: &mut RngStream) -> bool {
        match self {
            Guess::Random => rng.bit(),
            Guess::Zero => false,
            Guess::ZeroIfAccepted => !accepted,
        }
    }
}

fn random_inputs(sys: &mut BlockSystem, n: usize, rng: &mut RngStream) -> Result<Vec<QubitId>, GameError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(sys.quantum_mut().alloc_state(StateVector::random(n, rng)?))
}

/// Encrypts random states and evaluates honestly.
pub struct Honest {
    pub circuit: CircuitDesc,
    pub inputs: usize,
    /// Qubits of the second round in the two-round game.
    pub second: usize,
    pub rule: Guess,
    /// State of the quantum outputs handed to the last guess.
    pub observed: Option<StateVector>,
}

impl Honest {
    pub fn new(circuit: CircuitDesc, rule: Guess) -> Self {
        let inputs = circuit.n_qubits();
        Honest { circuit, inputs, second: 0, rule, observed: None }
    }

    /// Splits the circuit's wires over two rounds, the second picked from the first
    /// ciphertext.
    pub fn two_rounds(circuit: CircuitDesc, first: usize) -> Self {
        let n = circuit.n_qubits();
        Honest { circuit, inputs: first.min(n), second: n - first.min(n), rule: Guess::Random, observed: None }
    }
}

impl<S: VqfheScheme> Adversary<S> for Honest {
    fn name(&self) -> String {
        match self.rule {
            Guess::Random if self.second > 0 => "adaptive".into(),
            Guess::Random => "honest".into(),
            Guess::Zero => "always-0".into(),
            Guess::ZeroIfAccepted => "honest-flag".into(),
        }
    }

    fn choose(&mut self, sys: &mut BlockSystem, _evk: &S::EvalKey, rng: &mut RngStream) -> Result<Vec<QubitId>, GameError> {
        random_inputs(sys, self.inputs, rng)
    }

    fn choose_again(
        &mut self,
        scheme: &S,
        sys: &mut BlockSystem,
        ct: &S::Ciphertext,
        rng: &mut RngStream,
    ) -> Result<Vec<QubitId>, GameError> {
        let qs = random_inputs(sys, self.second, rng)?;
        // the second plaintext depends on the first ciphertext's handles
        let parity = scheme.blocks(ct).iter().fold(0u64, |a, b| a ^ b.0) & 1;
        if parity == 1 {
            for q in &qs {
                sys.quantum_mut().apply(*q, Gate::H)?;
            }
        }
        Ok(qs)
    }

    fn attack(
        &mut self,
        scheme: &S,
        sys: &mut BlockSystem,
        evk: &S::EvalKey,
        ct: S::Ciphertext,
        rng: &mut RngStream,
    ) -> Result<Attack<S::Ciphertext>, GameError> {
        let (ct, log) = scheme.eval(sys, evk, &ct, &self.circuit, rng)?;
        Ok(Attack { ct, circuit: self.circuit.clone(), log })
    }

    fn guess(&mut self, sys: &mut BlockSystem, outputs: &WireOutputs, accepted: bool, rng: &mut RngStream) -> Result<bool, GameError> {
        self.observed = if outputs.quantum.is_empty() { None } else { Some(sys.quantum().state_of(&outputs.qubit_ids())?) };
        Ok(self.rule.apply(accepted, rng))
    }
}

/// Honest evaluation, then X flips on `weight` distinct physical positions of one
/// output block. Weight 0 means one X or Z at a single random position.
pub struct PauliAttack {
    pub circuit: CircuitDesc,
    pub weight: usize,
}

impl PauliAttack {
    pub fn single(circuit: CircuitDesc) -> Self {
        PauliAttack { circuit, weight: 0 }
    }

    pub fn x_weight(circuit: CircuitDesc, weight: usize) -> Self {
        PauliAttack { circuit, weight }
    }
}

impl<S: VqfheScheme> Adversary<S> for PauliAttack {
    fn name(&self) -> String {
        if self.weight == 0 {
            "random-pauli".into()
        } else {
            format!("weight-{}", self.weight)
        }
    }

    fn choose(&mut self, sys: &mut BlockSystem, _evk: &S::EvalKey, rng: &mut RngStream) -> Result<Vec<QubitId>, GameError> {
        random_inputs(sys, self.circuit.n_qubits(), rng)
    }

    fn attack(
        &mut self,
        scheme: &S,
        sys: &mut BlockSystem,
        evk: &S::EvalKey,
        ct: S::Ciphertext,
        rng: &mut RngStream,
    ) -> Result<Attack<S::Ciphertext>, GameError> {
        let (ct, log) = scheme.eval(sys, evk, &ct, &self.circuit, rng)?;
        let blocks = scheme.blocks(&ct);
        if blocks.is_empty() {
            return Err(GameError::Adversary("no unmeasured block to attack".into()));
        }
        let id = blocks[rng.below(blocks.len())];
        let len = 3 * sys.code().m();
        if self.weight == 0 {
            let gate = if rng.bit() { Gate::X } else { Gate::Z };
            sys.apply_pauli(id, rng.below(len), gate)?;
        } else {
            if self.weight > len {
                return Err(GameError::Adversary(format!("weight {} exceeds block length {len}", self.weight)));
            }
            let mut positions: Vec<usize> = (0..len).collect();
            for i in 0..self.weight {
                let j = i + rng.below(len - i);
                positions.swap(i, j);
                sys.apply_pauli(id, positions[i], Gate::X)?;
            }
        }
        Ok(Attack { ct, circuit: self.circuit.clone(), log })
    }

    fn guess(&mut self, _sys: &mut BlockSystem, _outputs: &WireOutputs, accepted: bool, _rng: &mut RngStream) -> Result<bool, GameError> {
        Ok(Guess::ZeroIfAccepted.apply(accepted, _rng))
    }

    fn tampers(&self) -> bool {
        true
    }
}

/// Honest evaluation, then one log byte XORed with a random nonzero mask.
pub struct LogTamper {
    pub circuit: CircuitDesc,
}

impl<S: VqfheScheme> Adversary<S> for LogTamper {
    fn name(&self) -> String {
        "log-tamper".into()
    }

    fn choose(&mut self, sys: &mut BlockSystem, _evk: &S::EvalKey, rng: &mut RngStream) -> Result<Vec<QubitId>, GameError> {
        random_inputs(sys, self.circuit.n_qubits(), rng)
    }

    fn attack(
        &mut self,
        scheme: &S,
        sys: &mut BlockSystem,
        evk: &S::EvalKey,
        ct: S::Ciphertext,
        rng: &mut RngStream,
    ) -> Result<Attack<S::Ciphertext>, GameError> {
        let (ct, mut log) = scheme.eval(sys, evk, &ct, &self.circuit, rng)?;
        if log.is_empty() {
            return Err(GameError::Adversary("scheme produces no log".into()));
        }
        let at = rng.below(log.len());
        log[at] ^= 1 + rng.below(255) as u8;
        Ok(Attack { ct, circuit: self.circuit.clone(), log })
    }

    fn guess(&mut self, _sys: &mut BlockSystem, _outputs: &WireOutputs, accepted: bool, rng: &mut RngStream) -> Result<bool, GameError> {
        Ok(Guess::ZeroIfAccepted.apply(accepted, rng))
    }

    fn tampers(&self) -> bool {
        true
    }
}

/// Evaluates `applied` but announces `claimed`.
pub struct WrongCircuit {
    pub claimed: CircuitDesc,
    pub applied: CircuitDesc,
}

impl<S: VqfheScheme> Adversary<S> for WrongCircuit {
    fn name(&self) -> String {
        "wrong-circuit".into()
    }

    fn choose(&mut self, sys: &mut BlockSystem, _evk: &S::EvalKey, rng: &mut RngStream) -> Result<Vec<QubitId>, GameError> {
        random_inputs(sys, self.claimed.n_qubits().max(self.applied.n_qubits()), rng)
    }

    fn attack(
        &mut self,
        scheme: &S,
        sys: &mut BlockSystem,
        evk: &S::EvalKey,
        ct: S::Ciphertext,
        rng: &mut RngStream,
    ) -> Result<Attack<S::Ciphertext>, GameError> {
        let (ct, log) = scheme.eval(sys, evk, &ct, &self.applied, rng)?;
        Ok(Attack { ct, circuit: self.claimed.clone(), log })
    }

    fn guess(&mut self, _sys: &mut BlockSystem, _outputs: &WireOutputs, accepted: bool, rng: &mut RngStream) -> Result<bool, GameError> {
        Ok(Guess::ZeroIfAccepted.apply(accepted, rng))
    }

    fn tampers(&self) -> bool {
        true
    }
}

/// Honest evaluation, then one signed record altered under its original tag.
pub struct MacForgery {
    pub circuit: CircuitDesc,
}

impl<S: VqfheScheme> Adversary<S> for MacForgery {
    fn name(&self) -> String {
        "mac-forgery".into()
    }

    fn choose(&mut self, sys: &mut BlockSystem, _evk: &S::EvalKey, rng: &mut RngStream) -> Result<Vec<QubitId>, GameError> {
        random_inputs(sys, self.circuit.n_qubits(), rng)
    }

    fn attack(
        &mut self,
        scheme: &S,
        sys: &mut BlockSystem,
        evk: &S::EvalKey,
        ct: S::Ciphertext,
        rng: &mut RngStream,
    ) -> Result<Attack<S::Ciphertext>, GameError> {
        let (ct, log) = scheme.eval(sys, evk, &ct, &self.circuit, rng)?;
        let log = scheme
            .forge_signed(&log, rng)
            .ok_or_else(|| GameError::Adversary("log has no signed records".into()))?;
        Ok(Attack { ct, circuit: self.circuit.clone(), log })
    }

    fn guess(&mut self, _sys: &mut BlockSystem, _outputs: &WireOutputs, accepted: bool, rng: &mut RngStream) -> Result<bool, GameError> {
        Ok(Guess::ZeroIfAccepted.apply(accepted, rng))
    }

    fn tampers(&self) -> bool {
        true
    }
}

/// Names accepted by [`adversary_by_name`].
pub const ADVERSARY_NAMES: [&str; 9] = [
    "honest",
    "always-0",
    "adaptive",
    "random-pauli",
    "weight-2",
    "weight-3",
    "log-tamper",
    "wrong-circuit",
    "mac-forgery",
];

/// Looks up a built-in adversary; `weight-N` accepts any N >= 1. All of them run
/// `circuit`; the wrong-circuit adversary applies it with an extra X on wire 0.
pub fn adversary_by_name<S: VqfheScheme>(name: &str, circuit: &CircuitDesc) -> Result<Box<dyn Adversary<S>>, GameError> {
    let c = circuit.clone();
    Ok(match name {
        "honest" => Box::new(Honest::new(c, Guess::Random)),
        "always-0" => Box::new(Honest::new(c, Guess::Zero)),
        "adaptive" => {
            let first = c.n_qubits().div_ceil(2);
            Box::new(Honest::two_rounds(c, first))
        }
        "random-pauli" => Box::new(PauliAttack::single(c)),
        "log-tamper" => Box::new(LogTamper { circuit: c }),
        "mac-forgery" => Box::new(MacForgery { circuit: c }),
        "wrong-circuit" => {
            if c.n_qubits() == 0 {
                return Err(GameError::Adversary("wrong-circuit needs at least one wire".into()));
            }
            let mut gates = c.gates().to_vec();
            gates.push(crate::circuit::CircuitGate::X(0));
            let applied = CircuitDesc::new(c.n_qubits(), gates, Some(c.outputs().to_vec()))?;
            Box::new(WrongCircuit { claimed: c, applied })
        }
        _ => match name.strip_prefix("weight-").and_then(|w| w.parse::<usize>().ok()) {
            Some(w) if w >= 1 => Box::new(PauliAttack::x_weight(c, w)),
            _ => return Err(GameError::UnknownAdversary(name.into())),
        },
    })
}

pub fn builtin_adversaries<S: VqfheScheme>(circuit: &CircuitDesc) -> Vec<Box<dyn Adversary<S>>> {
    ADVERSARY_NAMES.iter().filter_map(|n| adversary_by_name(n, circuit).ok()).collect()
}
