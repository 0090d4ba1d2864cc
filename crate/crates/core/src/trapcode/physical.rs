//! Explicit amplitude-vector route for one trap-code block (3m = 21 qubits at level 1).
//! Slow; used to cross-check the frame representation and for small demonstrations.

use super::{Block, TrapError, TrapLayout};
use crate::bits::{Bits, Permutation};
use crate::codes::CssCode;
use crate::qsim::{Basis, Gate, QuantumSystem, RngStream, StateVector};

/// `X^x Z^z · permute_pi(Enc(state) ⊗ |0^m> ⊗ |+^m>)` as a 3m-qubit state.
pub fn encrypt(
    code: &CssCode,
    state: &StateVector,
    pi: &Permutation,
    x: &Bits,
    z: &Bits,
) -> Result<StateVector, TrapError> {
    let m = code.m();
    let zeros = "0".repeat(m);
    let pluses = "+".repeat(m);
    let traps = StateVector::new_register(2 * m, &(zeros + &pluses))?;
    let pre = code.encode(state)?.tensor(&traps)?;
    let mut out = pre.permute_qubits(pi)?;
    out.apply_pauli_string(x, z)?;
    Ok(out)
}

/// Verified decryption on an explicit block: undo the pad, unpermute,
/// measure the zero traps in Z and the plus traps in X, then decode the data qubits.
/// Returns `None` on reject.
pub fn verdec(
    code: &CssCode,
    block: &StateVector,
    pi: &Permutation,
    x: &Bits,
    z: &Bits,
    rng: &mut RngStream,
) -> Result<Option<StateVector>, TrapError> {
    let layout = TrapLayout { m: code.m() };
    let mut s = block.clone();
    // Z acts first in apply_pauli_string, so applying it again undoes the pad up to phase
    s.apply_pauli_string(x, z)?;
    let mut s = s.permute_qubits(&pi.inverse())?;
    let mut ok = true;
    for k in layout.zero_traps() {
        ok &= !s.measure(k, Basis::Z, rng)?.bit;
    }
    for k in layout.plus_traps() {
        ok &= !s.measure(k, Basis::X, rng)?.bit;
    }
    if !ok {
        return Ok(None);
    }
    for k in layout.plus_traps().rev() {
        s.apply_gate(Gate::H, k)?;
        s = s.remove_qubit(k, false)?;
    }
    for k in layout.zero_traps().rev() {
        s = s.remove_qubit(k, false)?;
    }
    let (logical, _) = code.decode(&s, rng)?;
    Ok(Some(logical))
}

/// Measures every qubit of an explicit block in `basis`.
pub fn measure_all(block: &StateVector, basis: Basis, rng: &mut RngStream) -> Result<Bits, TrapError> {
    let mut s = block.clone();
    let mut out = Bits::zeros(s.n_qubits());
    for k in 0..s.n_qubits() {
        out.set(k, s.measure(k, basis, rng)?.bit);
    }
    Ok(out)
}

/// The explicit state described by a frame-model block. The block's logical qubit must
/// not be entangled with other qubits of `quantum`.
pub fn to_physical(code: &CssCode, quantum: &QuantumSystem, block: &Block) -> Result<StateVector, TrapError> {
    let logical = quantum.state_of(&[block.logical])?;
    encrypt(code, &logical, &block.layout, &block.frame_x, &block.frame_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{fidelity, TOLERANCE};
    use crate::trapcode::{keygen, BlockSystem};

    #[test]
    fn identity_key_layout() {
        let code = CssCode::steane(1).unwrap();
        let s = encrypt(
            &code,
            &StateVector::new_register(1, "0").unwrap(),
            &Permutation::identity(21),
            &Bits::zeros(21),
            &Bits::zeros(21),
        )
        .unwrap();
        let want = code.encode(&StateVector::new_register(1, "0").unwrap()).unwrap();
        let want = want.tensor(&StateVector::new_register(14, "0000000+++++++").unwrap()).unwrap();
        assert!((fidelity(&s, &want).unwrap() - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn honest_roundtrip() {
        let code = CssCode::steane(1).unwrap();
        let mut rng = RngStream::new(8);
        let psi = StateVector::random(1, &mut rng).unwrap();
        let k = keygen(1, &code, &mut rng);
        let ct = encrypt(&code, &psi, &k.pi, &k.x[0], &k.z[0]).unwrap();
        let out = verdec(&code, &ct, &k.pi, &k.x[0], &k.z[0], &mut rng).unwrap().unwrap();
        assert!((fidelity(&out, &psi).unwrap() - 1.0).abs() < TOLERANCE);
    }

    #[test]
    fn single_paulis_agree_with_frames() {
        let code = CssCode::steane(1).unwrap();
        let mut rng = RngStream::new(9);
        for trial in 0..12 {
            let psi = StateVector::random(1, &mut rng).unwrap();
            let k = keygen(1, &code, &mut rng);
            let pos = rng.below(21);
            let gate = [Gate::X, Gate::Z, Gate::Y][trial % 3];

            let mut sys = BlockSystem::new(code.clone());
            let q = sys.quantum_mut().alloc_state(psi.clone())[0];
            let b = sys.encrypt(q, &k.pi, &k.x[0], &k.z[0]).unwrap();
            let mut explicit = to_physical(&code, sys.quantum(), sys.block(b).unwrap()).unwrap();
            sys.apply_pauli(b, pos, gate).unwrap();
            explicit.apply_gate(gate, pos).unwrap();
            let framed = sys.verdec_qubit(b, &k.pi, &k.x[0], &k.z[0], &mut rng).unwrap();
            let direct = verdec(&code, &explicit, &k.pi, &k.x[0], &k.z[0], &mut rng).unwrap();
            assert_eq!(framed.is_some(), direct.is_some());
            if let (Some(fq), Some(d)) = (framed, direct) {
                let f = sys.quantum().state_of(&[fq]).unwrap();
                assert!((fidelity(&f, &d).unwrap() - 1.0).abs() < TOLERANCE);
            }
        }
    }

    #[test]
    fn measurement_records_verify() {
        let code = CssCode::steane(1).unwrap();
        let mut rng = RngStream::new(10);
        let k = keygen(1, &code, &mut rng);
        let ct = encrypt(&code, &StateVector::new_register(1, "1").unwrap(), &k.pi, &k.x[0], &k.z[0]).unwrap();
        let rec = measure_all(&ct, Basis::Z, &mut rng).unwrap();
        let v = crate::trapcode::verdec_measurement(&code, &k.pi, &k.x[0], &k.z[0], &rec, Basis::Z).unwrap();
        assert!(v.accepted && v.bit);
    }
}
