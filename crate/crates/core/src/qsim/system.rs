use std::collections::HashMap;

use super::{purify_rank_one, Basis, Gate, QsimError, RngStream, StateVector, QUBIT_CAP};
use crate::bits::Permutation;

/// Stable handle to a qubit held by a [`QuantumSystem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId(pub u64);

#[derive(Clone, Debug)]
struct Component {
    qubits: Vec<QubitId>,
    state: StateVector,
}

/// A register of many qubits stored as a product of independent pure-state components.
/// Components merge when a two-qubit gate joins them; measured qubits leave the system.
/// Every amplitude vector stays under the qubit cap.
#[derive(Clone, Debug, Default)]
pub struct QuantumSystem {
    next_qubit: u64,
    next_component: u64,
    components: HashMap<u64, Component>,
    owner: HashMap<QubitId, u64>,
    ops: u64,
}

impl QuantumSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of gate and measurement calls made so far.
    pub fn op_count(&self) -> u64 {
        self.ops
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.owner.contains_key(&q)
    }

    pub fn live_qubits(&self) -> usize {
        self.owner.len()
    }

    /// Largest component currently held.
    pub fn largest_component(&self) -> usize {
        self.components.values().map(|c| c.qubits.len()).max().unwrap_or(0)
    }

    fn insert(&mut self, qubits: Vec<QubitId>, state: StateVector) -> u64 {
        let id = self.next_component;
        self.next_component += 1;
        for q in &qubits {
            self.owner.insert(*q, id);
        }
        self.components.insert(id, Component { qubits, state });
        id
    }

    fn fresh_ids(&mut self, n: usize) -> Vec<QubitId> {
        let ids = (0..n as u64).map(|k| QubitId(self.next_qubit + k)).collect();
        self.next_qubit += n as u64;
        ids
    }

    /// Adds the qubits of `state` as one new component; handles follow qubit order.
    pub fn alloc_state(&mut self, state: StateVector) -> Vec<QubitId> {
        let ids = self.fresh_ids(state.n_qubits());
        if !ids.is_empty() {
            self.insert(ids.clone(), state);
        }
        ids
    }

    /// One fresh qubit in `|0>`, `|1>`, `|+>` or `|->`.
    pub fn alloc(&mut self, init: char) -> Result<QubitId, QsimError> {
        let s = StateVector::new_register(1, &init.to_string())?;
        Ok(self.alloc_state(s)[0])
    }

    pub fn alloc_epr(&mut self) -> (QubitId, QubitId) {
        let mut s = StateVector::zero(0).expect("empty register");
        s.make_epr().expect("two qubits fit");
        let ids = self.alloc_state(s);
        (ids[0], ids[1])
    }

    fn locate(&self, q: QubitId) -> Result<(u64, usize), QsimError> {
        let c = *self.owner.get(&q).ok_or(QsimError::UnknownQubit(q))?;
        let pos = self.components[&c].qubits.iter().position(|x| *x == q).expect("owner map consistent");
        Ok((c, pos))
    }

    fn merge(&mut self, a: u64, b: u64) -> Result<u64, QsimError> {
        if a == b {
            return Ok(a);
        }
        let total = self.components[&a].qubits.len() + self.components[&b].qubits.len();
        if total > QUBIT_CAP {
            return Err(QsimError::CapExceeded { requested: total, cap: QUBIT_CAP });
        }
        let ca = self.components.remove(&a).expect("component a");
        let cb = self.components.remove(&b).expect("component b");
        let state = ca.state.tensor(&cb.state)?;
        let mut qubits = ca.qubits;
        qubits.extend(cb.qubits);
        Ok(self.insert(qubits, state))
    }

    pub fn apply(&mut self, q: QubitId, gate: Gate) -> Result<(), QsimError> {
        let (c, pos) = self.locate(q)?;
        self.ops += 1;
        self.components.get_mut(&c).expect("component").state.apply_gate(gate, pos)
    }

    /// `X^x Z^z` on `q`, counted as one operation whatever the exponents.
    pub fn apply_pauli(&mut self, q: QubitId, x: bool, z: bool) -> Result<(), QsimError> {
        let (c, pos) = self.locate(q)?;
        self.ops += 1;
        let state = &mut self.components.get_mut(&c).expect("component").state;
        if z {
            state.apply_gate(Gate::Z, pos)?;
        }
        if x {
            state.apply_gate(Gate::X, pos)?;
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: QubitId, target: QubitId) -> Result<(), QsimError> {
        if control == target {
            return Err(QsimError::SameQubit(control.0 as usize));
        }
        let (ca, _) = self.locate(control)?;
        let (cb, _) = self.locate(target)?;
        self.merge(ca, cb)?;
        let (c, pc) = self.locate(control)?;
        let (_, pt) = self.locate(target)?;
        self.ops += 1;
        self.components.get_mut(&c).expect("component").state.apply_cnot(pc, pt)
    }

    /// Measures `q` and removes it from the system.
    pub fn measure(&mut self, q: QubitId, basis: Basis, rng: &mut RngStream) -> Result<bool, QsimError> {
        let (c, pos) = self.locate(q)?;
        self.ops += 1;
        let comp = self.components.get_mut(&c).expect("component");
        let bit = comp.state.measure(pos, basis, rng)?.bit;
        if basis == Basis::X {
            comp.state.apply_gate(Gate::H, pos)?;
        }
        comp.state = comp.state.remove_qubit(pos, bit)?;
        comp.qubits.remove(pos);
        self.owner.remove(&q);
        if comp.qubits.is_empty() {
            self.components.remove(&c);
        }
        Ok(bit)
    }

    /// Projects `q` onto outcome `bit` and removes it; returns the Born probability of
    /// that outcome. Fails when the outcome is impossible.
    pub fn postselect(&mut self, q: QubitId, basis: Basis, bit: bool) -> Result<f64, QsimError> {
        let (c, pos) = self.locate(q)?;
        self.ops += 1;
        let comp = self.components.get_mut(&c).expect("component");
        if basis == Basis::X {
            comp.state.apply_gate(Gate::H, pos)?;
        }
        let p1 = comp.state.prob_one(pos)?;
        let p = if bit { p1 } else { 1.0 - p1 };
        if p < 1e-12 {
            if basis == Basis::X {
                comp.state.apply_gate(Gate::H, pos)?;
            }
            return Err(QsimError::NotClassical(pos));
        }
        let scale = 1.0 / p.sqrt();
        let mask = 1usize << (comp.state.n_qubits() - 1 - pos);
        let amps = comp
            .state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| if (i & mask != 0) == bit { a * scale } else { num_complex::Complex64::new(0.0, 0.0) })
            .collect();
        comp.state = StateVector::from_amplitudes(amps)?.remove_qubit(pos, bit)?;
        comp.qubits.remove(pos);
        self.owner.remove(&q);
        if comp.qubits.is_empty() {
            self.components.remove(&c);
        }
        Ok(p)
    }

    /// Traces `q` out. Measuring and forgetting the outcome realizes the partial trace.
    pub fn discard(&mut self, q: QubitId, rng: &mut RngStream) -> Result<(), QsimError> {
        self.measure(q, Basis::Z, rng).map(|_| ())
    }

    fn gather(&self, qs: &[QubitId]) -> Result<(Vec<u64>, StateVector, Vec<QubitId>), QsimError> {
        let mut comps: Vec<u64> = Vec::new();
        for q in qs {
            let (c, _) = self.locate(*q)?;
            if !comps.contains(&c) {
                comps.push(c);
            }
        }
        let mut state = StateVector::zero(0)?;
        let mut order = Vec::new();
        for c in &comps {
            let comp = &self.components[c];
            state = state.tensor(&comp.state)?;
            order.extend(comp.qubits.iter().copied());
        }
        Ok((comps, state, order))
    }

    /// State of `qs` (in that order). Fails with [`QsimError::Entangled`] when the
    /// requested qubits are not in a pure product with the rest of the system.
    pub fn state_of(&self, qs: &[QubitId]) -> Result<StateVector, QsimError> {
        let (_, state, order) = self.gather(qs)?;
        let keep: Vec<usize> = qs.iter().map(|q| order.iter().position(|x| x == q).expect("gathered")).collect();
        if order.len() == qs.len() {
            let mut map = vec![0; order.len()];
            for (target, &src) in keep.iter().enumerate() {
                map[src] = target;
            }
            let perm = Permutation::from_vec(map).map_err(|_| QsimError::Entangled)?;
            return state.permute_qubits(&perm);
        }
        let rho = state.reduced_density_matrix(&keep)?;
        purify_rank_one(&rho).ok_or(QsimError::Entangled)
    }

    /// Like [`QuantumSystem::state_of`] but removes the qubits; any other qubit sharing
    /// a component with them is traced out by measurement.
    pub fn take(&mut self, qs: &[QubitId], rng: &mut RngStream) -> Result<StateVector, QsimError> {
        let s = self.state_of(qs)?;
        let (comps, _, order) = self.gather(qs)?;
        for q in order.iter().filter(|q| !qs.contains(q)) {
            self.discard(*q, rng)?;
        }
        for c in comps {
            if let Some(comp) = self.components.remove(&c) {
                for q in comp.qubits {
                    self.owner.remove(&q);
                }
            }
        }
        Ok(s)
    }

    /// Components ordered by their first handle, with the id and op counters.
    pub fn snapshot(&self) -> RegisterSnapshot {
        let mut components: Vec<(Vec<QubitId>, StateVector)> =
            self.components.values().map(|c| (c.qubits.clone(), c.state.clone())).collect();
        components.sort_by_key(|(qs, _)| qs[0]);
        RegisterSnapshot { next_qubit: self.next_qubit, ops: self.ops, components }
    }

    pub fn from_snapshot(snap: RegisterSnapshot) -> Result<Self, QsimError> {
        let mut sys = QuantumSystem { next_qubit: snap.next_qubit, ops: snap.ops, ..Default::default() };
        for (qubits, state) in snap.components {
            if qubits.is_empty() || qubits.len() != state.n_qubits() {
                return Err(QsimError::DimensionMismatch { left: qubits.len(), right: state.n_qubits() });
            }
            for q in &qubits {
                if q.0 >= snap.next_qubit || sys.owner.contains_key(q) {
                    return Err(QsimError::BadInit(format!("qubit handle {} reused or out of range", q.0)));
                }
                sys.owner.insert(*q, u64::MAX);
            }
            sys.insert(qubits, state);
        }
        Ok(sys)
    }
}

/// Plain contents of a [`QuantumSystem`], for serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct RegisterSnapshot {
    pub next_qubit: u64,
    pub ops: u64,
    pub components: Vec<(Vec<QubitId>, StateVector)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{fidelity, TOLERANCE};

    #[test]
    fn components_merge_and_split_out() {
        let mut rng = RngStream::new(4);
        let mut sys = QuantumSystem::new();
        let a = sys.alloc('+').unwrap();
        let b = sys.alloc('0').unwrap();
        let c = sys.alloc('1').unwrap();
        sys.apply_cnot(a, b).unwrap();
        assert_eq!(sys.largest_component(), 2);
        let ab = sys.state_of(&[a, b]).unwrap();
        let mut bell = StateVector::zero(0).unwrap();
        bell.make_epr().unwrap();
        assert!((fidelity(&ab, &bell).unwrap() - 1.0).abs() < TOLERANCE);
        assert!(matches!(sys.state_of(&[a]), Err(QsimError::Entangled)));
        let bit = sys.measure(a, Basis::Z, &mut rng).unwrap();
        let sb = sys.state_of(&[b]).unwrap();
        let expect = StateVector::new_register(1, if bit { "1" } else { "0" }).unwrap();
        assert!((fidelity(&sb, &expect).unwrap() - 1.0).abs() < TOLERANCE);
        let sc = sys.take(&[c], &mut rng).unwrap();
        assert!((fidelity(&sc, &StateVector::new_register(1, "1").unwrap()).unwrap() - 1.0).abs() < TOLERANCE);
        assert!(!sys.contains(c));
        assert_eq!(sys.live_qubits(), 1);
    }

    #[test]
    fn state_of_reorders() {
        let mut sys = QuantumSystem::new();
        let ids = sys.alloc_state(StateVector::new_register(2, "01").unwrap());
        let s = sys.state_of(&[ids[1], ids[0]]).unwrap();
        assert!((fidelity(&s, &StateVector::new_register(2, "10").unwrap()).unwrap() - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn unknown_handle() {
        let mut sys = QuantumSystem::new();
        assert!(matches!(sys.apply(QubitId(99), Gate::X), Err(QsimError::UnknownQubit(_))));
    }

    #[test]
    fn snapshot_roundtrip_and_validation() {
        let mut rng = RngStream::new(8);
        let mut sys = QuantumSystem::new();
        let qs = sys.alloc_state(StateVector::random(2, &mut rng).unwrap());
        let lone = sys.alloc('+').unwrap();
        let snap = sys.snapshot();
        let back = QuantumSystem::from_snapshot(snap.clone()).unwrap();
        assert_eq!(back.snapshot(), snap);
        assert!(fidelity(&back.state_of(&qs).unwrap(), &sys.state_of(&qs).unwrap()).unwrap() > 1.0 - TOLERANCE);

        let mut dup = snap.clone();
        dup.components[1].0 = vec![qs[0]];
        assert!(QuantumSystem::from_snapshot(dup).is_err());
        let mut far = snap.clone();
        far.next_qubit = lone.0;
        assert!(QuantumSystem::from_snapshot(far).is_err());
        let mut short = snap;
        short.components[0].0.pop();
        assert!(QuantumSystem::from_snapshot(short).is_err());
    }
}
