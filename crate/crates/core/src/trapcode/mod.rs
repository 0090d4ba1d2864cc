//! Trap-code authentication: each logical qubit is CSS-encoded, padded with m `|0>`
//! traps and m `|+>` traps, permuted, and one-time padded.
//!
//! Pre-permutation layout of a 3m-qubit block: `0..m` data, `m..2m` zero traps,
//! `2m..3m` plus traps.

mod blocks;
pub mod physical;
mod scheme;

use thiserror::Error;

use crate::bits::{Bits, BitsError, Permutation};
use crate::circuit::CircuitError;
use crate::codes::{CodeError, CssCode};
use crate::qsim::{Basis, QsimError, RngStream};

pub use blocks::{Block, BlockId, BlockSystem};
pub(crate) use scheme::reject_outputs;
pub use scheme::{TcDecryption, TcSlot, TrapCiphertext, TrapCode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrapError {
    #[error("unknown or consumed block {0:?}")]
    UnknownBlock(BlockId),
    #[error("transversal operation between blocks with different layouts")]
    LayoutMismatch,
    #[error("slot {0} is out of range")]
    SlotOutOfRange(usize),
    #[error("slot {0} is already in use")]
    SlotReuse(usize),
    #[error("slot {0} is measured")]
    MeasuredSlot(usize),
    #[error("gate {0} is outside the trap-code gate set")]
    UnsupportedGate(String),
    #[error("key shape mismatch: {0}")]
    KeyShape(String),
    #[error("physical position {pos} outside a {len}-qubit block")]
    BadPosition { pos: usize, len: usize },
    #[error(transparent)]
    Bits(#[from] BitsError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Sim(#[from] QsimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Positions of the three families inside an unpermuted block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrapLayout {
    pub m: usize,
}

impl TrapLayout {
    pub fn block_len(&self) -> usize {
        3 * self.m
    }

    pub fn data(&self) -> std::ops::Range<usize> {
        0..self.m
    }

    pub fn zero_traps(&self) -> std::ops::Range<usize> {
        self.m..2 * self.m
    }

    pub fn plus_traps(&self) -> std::ops::Range<usize> {
        2 * self.m..3 * self.m
    }

    /// `1^m 0^2m`: the pre-permutation support of a transversal logical Pauli.
    pub fn data_mask(&self) -> Bits {
        Bits::expand_bit(true, self.m, 2 * self.m)
    }
}

/// Physical positions of the data qubits under permutation `pi`.
pub fn logical_mask(pi: &Permutation, m: usize) -> Result<Bits, BitsError> {
    pi.permute(&TrapLayout { m }.data_mask())
}

/// Permutation plus per-slot one-time pads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrapKey {
    pub pi: Permutation,
    pub x: Vec<Bits>,
    pub z: Vec<Bits>,
}

impl TrapKey {
    pub fn slots(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.pi.len() / 3
    }

    fn check_slot(&self, i: usize) -> Result<(), TrapError> {
        if i >= self.slots() {
            return Err(TrapError::SlotOutOfRange(i));
        }
        Ok(())
    }
}

/// Uniform permutation of 3m positions and uniform pads for `n` slots.
pub fn keygen(n: usize, code: &CssCode, rng: &mut RngStream) -> TrapKey {
    let len = 3 * code.m();
    let pi = Permutation::random(len, rng);
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        x.push(Bits::random(len, rng));
        z.push(Bits::random(len, rng));
    }
    TrapKey { pi, x, z }
}

/// Effect of one circuit gate on the pads, applied during verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyUpdateRule {
    X(usize),
    Z(usize),
    Cnot(usize, usize),
    /// X on the slot when the carried bit is 1.
    CondX(usize, bool),
    CondZ(usize, bool),
}

impl KeyUpdateRule {
    pub fn apply(&self, key: &mut TrapKey) -> Result<(), TrapError> {
        let mask = logical_mask(&key.pi, key.m())?;
        match *self {
            KeyUpdateRule::X(i) | KeyUpdateRule::CondX(i, true) => {
                key.check_slot(i)?;
                key.x[i].xor_assign(&mask)?;
            }
            KeyUpdateRule::Z(i) | KeyUpdateRule::CondZ(i, true) => {
                key.check_slot(i)?;
                key.z[i].xor_assign(&mask)?;
            }
            KeyUpdateRule::CondX(i, false) | KeyUpdateRule::CondZ(i, false) => key.check_slot(i)?,
            KeyUpdateRule::Cnot(i, j) => {
                key.check_slot(i)?;
                key.check_slot(j)?;
                let (xi, zi, xj, zj) = (&key.x[i], &key.z[i], &key.x[j], &key.z[j]);
                let (nx, nz) = cnot_pad_update(xi, zi, xj, zj)?;
                key.x[i] = nx.0;
                key.z[i] = nz.0;
                key.x[j] = nx.1;
                key.z[j] = nz.1;
            }
        }
        Ok(())
    }
}

/// Pads of a (control, target) pair after a transversal CNOT:
/// `(x_c, z_c), (x_t, z_t) -> (x_c, z_c ^ z_t), (x_c ^ x_t, z_t)`.
/// Returned as `((x_c', x_t'), (z_c', z_t'))`.
#[allow(clippy::type_complexity)]
pub fn cnot_pad_update(xc: &Bits, zc: &Bits, xt: &Bits, zt: &Bits) -> Result<((Bits, Bits), (Bits, Bits)), BitsError> {
    Ok(((xc.clone(), xc.xor(xt)?), (zc.xor(zt)?, zt.clone())))
}

/// Applies a sequence of rules to a key.
pub fn key_update(rules: &[KeyUpdateRule], key: &TrapKey) -> Result<TrapKey, TrapError> {
    let mut k = key.clone();
    for r in rules {
        r.apply(&mut k)?;
    }
    Ok(k)
}

/// Outcome of classically verifying a measured block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasurementVerdict {
    pub bit: bool,
    pub accepted: bool,
}

/// Classical verification of a measured block. Z basis: strip the X pad, unpermute and
/// require the zero traps to read 0. X basis: strip the Z pad and require the plus
/// traps to read 0. Only the trap family that is deterministic in the measured basis is
/// checked. The logical bit is the classical decoding of the data positions.
pub fn verdec_measurement(
    code: &CssCode,
    pi: &Permutation,
    x: &Bits,
    z: &Bits,
    record: &Bits,
    basis: Basis,
) -> Result<MeasurementVerdict, TrapError> {
    let layout = TrapLayout { m: code.m() };
    let pad = match basis {
        Basis::Z => x,
        Basis::X => z,
    };
    let w = pi.unpermute(&pad.xor(record)?)?;
    let checked = match basis {
        Basis::Z => layout.zero_traps(),
        Basis::X => layout.plus_traps(),
    };
    let accepted = checked.clone().all(|k| !w.get(k));
    let bit = code.classical_decode(&w.slice(0, layout.m))?;
    Ok(MeasurementVerdict { bit, accepted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_bit_key(a: bool, b: bool, c: bool, d: bool) -> TrapKey {
        TrapKey {
            pi: Permutation::identity(1),
            x: vec![Bits::from_bools(vec![a]), Bits::from_bools(vec![c])],
            z: vec![Bits::from_bools(vec![b]), Bits::from_bools(vec![d])],
        }
    }

    #[test]
    fn cnot_rule_on_single_bits() {
        // (a, b, c, d) = (x_0, z_0, x_1, z_1) = (1, 0, 0, 1) -> (1, 1, 1, 1)
        let k = single_bit_key(true, false, false, true);
        let (nx, nz) = cnot_pad_update(&k.x[0], &k.z[0], &k.x[1], &k.z[1]).unwrap();
        assert_eq!((nx.0.get(0), nz.0.get(0), nx.1.get(0), nz.1.get(0)), (true, true, true, true));
    }

    #[test]
    fn keygen_is_deterministic_and_shaped() {
        let code = CssCode::steane(1).unwrap();
        let a = keygen(3, &code, &mut RngStream::new(42));
        let b = keygen(3, &code, &mut RngStream::new(42));
        assert_eq!(a, b);
        assert_eq!(a.x.len(), 3);
        assert!(a.x.iter().chain(&a.z).all(|p| p.len() == 21));
        let empty = keygen(0, &code, &mut RngStream::new(1));
        assert!(empty.x.is_empty() && empty.z.is_empty());
    }

    #[test]
    fn rules_compose() {
        let code = CssCode::steane(1).unwrap();
        let k = keygen(2, &code, &mut RngStream::new(5));
        assert_eq!(key_update(&[], &k).unwrap(), k);
        assert_eq!(key_update(&[KeyUpdateRule::X(1), KeyUpdateRule::X(1)], &k).unwrap(), k);
        let once = key_update(&[KeyUpdateRule::Z(0)], &k).unwrap();
        assert_eq!(once.z[0].xor(&k.z[0]).unwrap(), logical_mask(&k.pi, 7).unwrap());
        assert!(key_update(&[KeyUpdateRule::X(2)], &k).is_err());
    }

    #[test]
    fn trap_slot_frequency_is_one_third() {
        let code = CssCode::steane(1).unwrap();
        let mut rng = RngStream::new(10);
        let trials = 10_000;
        let mut hits = [0usize; 21];
        for _ in 0..trials {
            let k = keygen(1, &code, &mut rng);
            for j in 7..14 {
                hits[k.pi.image(j)] += 1;
            }
        }
        for h in hits {
            assert!((h as f64 / trials as f64 - 1.0 / 3.0).abs() < 0.02);
        }
    }
}
