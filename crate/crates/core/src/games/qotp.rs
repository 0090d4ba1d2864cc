//! One-time programs for classical-input/output circuits: the sender ships an
//! evaluation key, an encryption of its input bits and a single-use token wrapping
//! verified decryption for one circuit family.

use super::GameError;
use crate::circuit::{CircuitDesc, CircuitGate};
use crate::clcrypto::{ComputationLog, LogEntry, TransparentHe};
use crate::codes::CssCode;
use crate::qsim::{Basis, QubitId, RngStream};
use crate::trapcode::BlockSystem;
use crate::traptp::{self, Budgets, EvalKey, SecretKey, Variant, VqfheCiphertext};

/// AND of wires 0 and 1 into wire 2 through the Clifford+T Toffoli decomposition,
/// then a Z measurement of wire 2. T-dagger is written as T, P, Z.
pub fn and_circuit() -> CircuitDesc {
    use CircuitGate::*;
    let tdg = |q| [T(q), P(q), Z(q)];
    let (a, b, t) = (0, 1, 2);
    let mut g = vec![H(t), Cnot(b, t)];
    g.extend(tdg(t));
    g.extend([Cnot(a, t), T(t), Cnot(b, t)]);
    g.extend(tdg(t));
    g.extend([Cnot(a, t), T(b), T(t), H(t), Cnot(a, b), T(a)]);
    g.extend(tdg(b));
    g.extend([Cnot(a, b), Measure(t, Basis::Z)]);
    CircuitDesc::new(3, g, Some(vec![t])).expect("static circuit is valid")
}

/// Single-use verified decryption for circuits of the form "X on some receiver
/// wires, then `base`".
pub struct OneTimeToken {
    sk: SecretKey,
    base: CircuitDesc,
    receiver: std::ops::Range<usize>,
    consumed: bool,
}

impl OneTimeToken {
    pub fn is_consumed(&self) -> bool {
        self.consumed
    }

    fn in_family(&self, c: &CircuitDesc) -> bool {
        let k = c.len().saturating_sub(self.base.len());
        let (prefix, rest) = c.gates().split_at(k);
        c.n_qubits() == self.base.n_qubits()
            && c.outputs() == self.base.outputs()
            && rest == self.base.gates()
            && prefix.iter().all(|g| matches!(g, CircuitGate::X(w) if self.receiver.contains(w)))
    }

    /// Verifies and decrypts. `None` on rejection; refuses any second query.
    pub fn query(
        &mut self,
        sys: &mut BlockSystem,
        ct: &VqfheCiphertext,
        log: &[u8],
        c: &CircuitDesc,
        rng: &mut RngStream,
    ) -> Result<Option<Vec<(usize, bool)>>, GameError> {
        if self.consumed {
            return Err(GameError::TokenConsumed);
        }
        self.consumed = true;
        if !self.in_family(c) {
            return Ok(None);
        }
        let log = ComputationLog::from_bytes(log)
            .unwrap_or_else(|_| ComputationLog::from_entries(vec![LogEntry::Final { keys: Vec::new() }]));
        let v = traptp::verdec(sys, &TransparentHe, &self.sk, ct, &log, c, Variant::Standard, None, rng)?;
        for (_, q) in &v.outputs.quantum {
            sys.quantum_mut().discard(*q, rng)?;
        }
        Ok(v.accepted.then_some(v.outputs.classical))
    }
}

/// What the sender hands over.
pub struct QotpBundle {
    pub sys: BlockSystem,
    pub evk: EvalKey,
    pub ct: VqfheCiphertext,
    pub token: OneTimeToken,
}

/// Sender side: `c` reads the sender's bits on its first wires and the receiver's on
/// the next `receiver_wires`; the remaining wires start at 0.
pub fn qotp_prepare(
    c: &CircuitDesc,
    sender: &[bool],
    receiver_wires: usize,
    rng: &mut RngStream,
) -> Result<QotpBundle, GameError> {
    let n = c.n_qubits();
    if sender.len() + receiver_wires > n {
        return Err(GameError::Invalid(format!("{} input wires exceed the circuit's {n}", sender.len() + receiver_wires)));
    }
    if c.outputs().iter().any(|w| !c.measured_wires().contains(w)) {
        return Err(GameError::Invalid("one-time programs need classical outputs".into()));
    }
    let counts = c.counts();
    let budgets = Budgets::new(counts.t, counts.p, counts.h);
    let mut sys = BlockSystem::new(CssCode::steane(1).expect("level 1 exists"));
    let (sk, evk, _) = traptp::keygen(&mut sys, &TransparentHe, 1, budgets, rng)?;
    let init: String = (0..n).map(|i| if sender.get(i).copied().unwrap_or(false) { '1' } else { '0' }).collect();
    let qs: Vec<QubitId> = init.chars().map(|ch| sys.quantum_mut().alloc(ch)).collect::<Result<_, _>>()?;
    let mut ct = VqfheCiphertext::default();
    traptp::encrypt(&sk, &TransparentHe, &mut sys, &mut ct, &qs, rng)?;
    let start = sender.len();
    let token = OneTimeToken { sk, base: c.clone(), receiver: start..start + receiver_wires, consumed: false };
    Ok(QotpBundle { sys, evk, ct, token })
}

/// The receiver's circuit for its input bits.
pub fn receiver_circuit(base: &CircuitDesc, first_wire: usize, receiver: &[bool]) -> Result<CircuitDesc, GameError> {
    let mut gates: Vec<CircuitGate> =
        receiver.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| CircuitGate::X(first_wire + i)).collect();
    gates.extend_from_slice(base.gates());
    Ok(CircuitDesc::new(base.n_qubits(), gates, Some(base.outputs().to_vec()))?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QotpReport {
    /// Decrypted output bits, `None` if the token rejected.
    pub outputs: Option<Vec<(usize, bool)>>,
    /// Whether a second query on the same token was refused.
    pub second_query_refused: bool,
}

/// Full round trip: prepare, evaluate with the receiver's bits, query the token once,
/// then try again.
pub fn qotp_demo(c: &CircuitDesc, sender: &[bool], receiver: &[bool], seed: u64) -> Result<QotpReport, GameError> {
    let mut rng = RngStream::new(seed);
    let QotpBundle { mut sys, evk, ct, mut token } = qotp_prepare(c, sender, receiver.len(), &mut rng)?;
    let rc = receiver_circuit(c, sender.len(), receiver)?;
    let (out, log) = traptp::eval(&mut sys, &TransparentHe, &evk, &ct, &rc, &mut rng)?;
    let log = log.to_bytes();
    let outputs = token.query(&mut sys, &out, &log, &rc, &mut rng)?;
    let second = token.query(&mut sys, &out, &log, &rc, &mut rng);
    Ok(QotpReport { outputs, second_query_refused: matches!(second, Err(GameError::TokenConsumed)) })
}
