//! Exact frame representation of trap-code blocks.
//!
//! A physical block is `X^fx Z^fz · permute_layout(Enc(psi) ⊗ |0^m> ⊗ |+^m>)`. Its
//! logical qubit lives in a shared [`QuantumSystem`]; the layout and the Pauli frame
//! `(fx, fz)` are classical. Transversal CNOT between equal layouts, physical Paulis and
//! whole-block measurements act on this triple exactly, so blocks of 21 qubits never
//! need an amplitude vector of their own.

use std::collections::BTreeMap;

use super::{TrapError, TrapLayout};
use crate::bits::{Bits, Permutation};
use crate::codes::CssCode;
use crate::qsim::{Basis, Gate, QuantumSystem, QubitId, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub u64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub logical: QubitId,
    pub layout: Permutation,
    pub frame_x: Bits,
    pub frame_z: Bits,
}

/// All quantum data of a run: logical qubits plus the blocks that encode some of them.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    code: CssCode,
    quantum: QuantumSystem,
    blocks: BTreeMap<BlockId, Block>,
    next_block: u64,
    phys_ops: u64,
}

impl BlockSystem {
    pub fn new(code: CssCode) -> Self {
        BlockSystem { code, quantum: QuantumSystem::new(), blocks: BTreeMap::new(), next_block: 0, phys_ops: 0 }
    }

    pub fn code(&self) -> &CssCode {
        &self.code
    }

    pub fn layout(&self) -> TrapLayout {
        TrapLayout { m: self.code.m() }
    }

    pub fn quantum(&self) -> &QuantumSystem {
        &self.quantum
    }

    pub fn quantum_mut(&mut self) -> &mut QuantumSystem {
        &mut self.quantum
    }

    /// Simulator calls so far: physical block operations plus logical-register calls.
    pub fn op_count(&self) -> u64 {
        self.phys_ops + self.quantum.op_count()
    }

    pub fn block(&self, id: BlockId) -> Result<&Block, TrapError> {
        self.blocks.get(&id).ok_or(TrapError::UnknownBlock(id))
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.blocks.contains_key(&id)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (BlockId, &Block)> {
        self.blocks.iter().map(|(k, v)| (*k, v))
    }

    /// Installs a block verbatim; used by deserialization and cross-checks.
    pub fn insert_block(&mut self, id: BlockId, block: Block) -> Result<(), TrapError> {
        let len = self.layout().block_len();
        if block.layout.len() != len || block.frame_x.len() != len || block.frame_z.len() != len {
            return Err(TrapError::KeyShape(format!("block {id:?} is not {len} qubits wide")));
        }
        self.next_block = self.next_block.max(id.0 + 1);
        self.blocks.insert(id, block);
        Ok(())
    }

    /// Replaces the logical register wholesale; used by deserialization.
    pub fn set_quantum(&mut self, quantum: QuantumSystem) {
        self.quantum = quantum;
    }

    fn check_shape(&self, pi: &Permutation, x: &Bits, z: &Bits) -> Result<(), TrapError> {
        let len = self.layout().block_len();
        if pi.len() != len || x.len() != len || z.len() != len {
            return Err(TrapError::KeyShape(format!(
                "permutation {} / pads {} {} for {len}-qubit blocks",
                pi.len(),
                x.len(),
                z.len()
            )));
        }
        Ok(())
    }

    /// Encodes `logical`, adds traps, permutes by `pi` and pads with `X^x Z^z`.
    pub fn encrypt(&mut self, logical: QubitId, pi: &Permutation, x: &Bits, z: &Bits) -> Result<BlockId, TrapError> {
        self.check_shape(pi, x, z)?;
        if !self.quantum.contains(logical) {
            return Err(crate::qsim::QsimError::UnknownQubit(logical).into());
        }
        let id = BlockId(self.next_block);
        self.next_block += 1;
        self.phys_ops += 3 * self.layout().block_len() as u64;
        self.blocks.insert(id, Block { logical, layout: pi.clone(), frame_x: x.clone(), frame_z: z.clone() });
        Ok(id)
    }

    fn block_mut(&mut self, id: BlockId) -> Result<&mut Block, TrapError> {
        self.blocks.get_mut(&id).ok_or(TrapError::UnknownBlock(id))
    }

    /// Physical X, Y or Z on one position of a block.
    pub fn apply_pauli(&mut self, id: BlockId, pos: usize, gate: Gate) -> Result<(), TrapError> {
        let len = self.layout().block_len();
        if pos >= len {
            return Err(TrapError::BadPosition { pos, len });
        }
        let (fx, fz) = match gate {
            Gate::X => (true, false),
            Gate::Z => (false, true),
            Gate::Y => (true, true),
            other => return Err(TrapError::UnsupportedGate(format!("{other:?} on a physical position"))),
        };
        self.phys_ops += 1;
        let b = self.block_mut(id)?;
        if fx {
            b.frame_x.flip(pos);
        }
        if fz {
            b.frame_z.flip(pos);
        }
        Ok(())
    }

    /// `X^x Z^z` across a whole block.
    pub fn apply_pauli_string(&mut self, id: BlockId, x: &Bits, z: &Bits) -> Result<(), TrapError> {
        self.phys_ops += x.len() as u64;
        let b = self.block_mut(id)?;
        b.frame_x.xor_assign(x)?;
        b.frame_z.xor_assign(z)?;
        Ok(())
    }

    /// 3m physical CNOTs pairing equal positions. Equal layouts pair traps with traps and
    /// data with data, which is the case every honest evaluator produces.
    pub fn transversal_cnot(&mut self, control: BlockId, target: BlockId) -> Result<(), TrapError> {
        if control == target {
            return Err(crate::qsim::QsimError::SameQubit(control.0 as usize).into());
        }
        let c = self.block(control)?.clone();
        let t = self.block(target)?.clone();
        if c.layout != t.layout {
            return Err(TrapError::LayoutMismatch);
        }
        self.quantum.apply_cnot(c.logical, t.logical)?;
        self.phys_ops += self.layout().block_len() as u64;
        // CNOT conjugation: X on control spreads to target, Z on target spreads to control
        let new_tx = t.frame_x.xor(&c.frame_x)?;
        let new_cz = c.frame_z.xor(&t.frame_z)?;
        self.block_mut(target)?.frame_x = new_tx;
        self.block_mut(control)?.frame_z = new_cz;
        Ok(())
    }

    /// Measures every physical qubit of a block in `basis` and consumes it.
    pub fn measure(&mut self, id: BlockId, basis: Basis, rng: &mut RngStream) -> Result<Bits, TrapError> {
        let b = self.blocks.remove(&id).ok_or(TrapError::UnknownBlock(id))?;
        let layout = self.layout();
        let logical = self.quantum.measure(b.logical, basis, rng)?;
        let data = self.code.sample_codeword(logical, rng);
        // the trap family that is not an eigenstate of this basis reads uniformly
        let (zero_traps, plus_traps) = match basis {
            Basis::Z => (Bits::zeros(layout.m), Bits::random(layout.m, rng)),
            Basis::X => (Bits::random(layout.m, rng), Bits::zeros(layout.m)),
        };
        let pre = data.concat(&zero_traps).concat(&plus_traps);
        let physical = b.layout.permute(&pre)?;
        let pad = match basis {
            Basis::Z => &b.frame_x,
            Basis::X => &b.frame_z,
        };
        self.phys_ops += layout.block_len() as u64;
        Ok(physical.xor(pad)?)
    }

    /// Drops a block, tracing out its logical qubit.
    pub fn discard(&mut self, id: BlockId, rng: &mut RngStream) -> Result<(), TrapError> {
        let b = self.blocks.remove(&id).ok_or(TrapError::UnknownBlock(id))?;
        self.quantum.discard(b.logical, rng)?;
        Ok(())
    }

    /// Verified decryption of one block: undo the pad, unpermute, check both trap
    /// families, decode. Returns the logical qubit on accept; on reject the block's
    /// content is traced out and `None` is returned. The number of simulator calls is
    /// the same on both paths.
    pub fn verdec_qubit(
        &mut self,
        id: BlockId,
        pi: &Permutation,
        x: &Bits,
        z: &Bits,
        rng: &mut RngStream,
    ) -> Result<Option<QubitId>, TrapError> {
        self.check_shape(pi, x, z)?;
        let b = self.blocks.remove(&id).ok_or(TrapError::UnknownBlock(id))?;
        let layout = self.layout();
        if b.layout != *pi {
            // a key whose permutation differs from the block's places data and traps
            // on the wrong qubits; the frame model does not represent that state
            self.blocks.insert(id, b);
            return Err(TrapError::LayoutMismatch);
        }
        let rx = pi.unpermute(&b.frame_x.xor(x)?)?;
        let rz = pi.unpermute(&b.frame_z.xor(z)?)?;
        self.phys_ops += (layout.block_len() + 2 * layout.m) as u64;
        let zero_ok = layout.zero_traps().all(|k| !rx.get(k));
        let plus_ok = layout.plus_traps().all(|k| !rz.get(k));
        let flip_x = self.code.residual_logical(&rx.slice(0, layout.m))?;
        let flip_z = self.code.residual_logical(&rz.slice(0, layout.m))?;
        self.phys_ops += 2;
        if !(zero_ok && plus_ok) {
            self.quantum.discard(b.logical, rng)?;
            return Ok(None);
        }
        self.quantum.apply_pauli(b.logical, flip_x, flip_z)?;
        Ok(Some(b.logical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{fidelity, StateVector, TOLERANCE};
    use crate::trapcode::keygen;

    fn setup(init: &str, seed: u64) -> (BlockSystem, BlockId, crate::trapcode::TrapKey) {
        let code = CssCode::steane(1).unwrap();
        let key = keygen(1, &code, &mut RngStream::new(seed));
        let mut sys = BlockSystem::new(code);
        let q = sys.quantum_mut().alloc_state(StateVector::new_register(1, init).unwrap())[0];
        let b = sys.encrypt(q, &key.pi, &key.x[0], &key.z[0]).unwrap();
        (sys, b, key)
    }

    #[test]
    fn honest_roundtrip() {
        for seed in 0..20 {
            let (mut sys, b, key) = setup("+", seed);
            let q = sys.verdec_qubit(b, &key.pi, &key.x[0], &key.z[0], &mut RngStream::new(0)).unwrap().unwrap();
            let s = sys.quantum().state_of(&[q]).unwrap();
            assert!((fidelity(&s, &StateVector::new_register(1, "+").unwrap()).unwrap() - 1.0).abs() < TOLERANCE);
        }
    }

    #[test]
    fn all_position_x_always_rejected() {
        for seed in 0..20 {
            let (mut sys, b, key) = setup("0", seed);
            sys.apply_pauli_string(b, &Bits::ones(21), &Bits::zeros(21)).unwrap();
            assert!(sys.verdec_qubit(b, &key.pi, &key.x[0], &key.z[0], &mut RngStream::new(0)).unwrap().is_none());
        }
    }

    #[test]
    fn measurement_consumes_block() {
        let (mut sys, b, _) = setup("1", 1);
        let mut rng = RngStream::new(3);
        sys.measure(b, Basis::Z, &mut rng).unwrap();
        assert!(matches!(sys.measure(b, Basis::Z, &mut rng), Err(TrapError::UnknownBlock(_))));
    }

    #[test]
    fn cnot_needs_equal_layouts() {
        let code = CssCode::steane(1).unwrap();
        let mut rng = RngStream::new(2);
        let k1 = keygen(1, &code, &mut rng);
        let k2 = keygen(1, &code, &mut rng);
        let mut sys = BlockSystem::new(code);
        let q1 = sys.quantum_mut().alloc('0').unwrap();
        let q2 = sys.quantum_mut().alloc('0').unwrap();
        let b1 = sys.encrypt(q1, &k1.pi, &k1.x[0], &k1.z[0]).unwrap();
        let b2 = sys.encrypt(q2, &k2.pi, &k2.x[0], &k2.z[0]).unwrap();
        assert_eq!(sys.transversal_cnot(b1, b2), Err(TrapError::LayoutMismatch));
    }
}
