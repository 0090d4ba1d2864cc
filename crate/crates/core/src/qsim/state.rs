use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64;

use super::{Basis, Gate, MeasOutcome, QsimError, RngStream, QUBIT_CAP, TOLERANCE};
use crate::bits::{Bits, Permutation};

/// Pure state on `n` qubits. Qubit 0 is the most significant bit of the amplitude index,
/// so `|q0 q1 ... q(n-1)>` reads left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

fn check_cap(n: usize) -> Result<(), QsimError> {
    if n > QUBIT_CAP {
        return Err(QsimError::CapExceeded { requested: n, cap: QUBIT_CAP });
    }
    Ok(())
}

impl StateVector {
    /// Product state from one character per qubit: `0`, `1`, `+` or `-`.
    pub fn new_register(n: usize, init: &str) -> Result<Self, QsimError> {
        check_cap(n)?;
        let chars: Vec<char> = init.chars().collect();
        if chars.len() != n {
            return Err(QsimError::BadInit(format!("{init:?} does not describe {n} qubits")));
        }
        let mut s = StateVector { n: 0, amps: vec![Complex64::new(1.0, 0.0)] };
        for c in chars {
            let one = match c {
                '0' => [1.0, 0.0],
                '1' => [0.0, 1.0],
                '+' => [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
                '-' => [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
                other => return Err(QsimError::BadInit(format!("character {other:?}"))),
            };
            let q = StateVector {
                n: 1,
                amps: vec![Complex64::new(one[0], 0.0), Complex64::new(one[1], 0.0)],
            };
            s = s.tensor(&q)?;
        }
        Ok(s)
    }

    pub fn zero(n: usize) -> Result<Self, QsimError> {
        check_cap(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Computational basis state `|index>` on `n` qubits.
    pub fn basis_state(n: usize, index: usize) -> Result<Self, QsimError> {
        let mut s = Self::zero(n)?;
        if index >= s.amps.len() {
            return Err(QsimError::QubitOutOfRange { qubit: index, n });
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Takes ownership of an amplitude table; its length must be a power of two and
    /// its norm 1 within tolerance.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, QsimError> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(QsimError::BadLength(amps.len()));
        }
        let n = amps.len().trailing_zeros() as usize;
        check_cap(n)?;
        let s = StateVector { n, amps };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(s)
    }

    /// Haar-like random state: normalized complex Gaussian amplitudes.
    pub fn random(n: usize, rng: &mut RngStream) -> Result<Self, QsimError> {
        check_cap(n)?;
        let mut amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        Ok(StateVector { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, q: usize) -> Result<usize, QsimError> {
        if q >= self.n {
            return Err(QsimError::QubitOutOfRange { qubit: q, n: self.n });
        }
        Ok(1 << (self.n - 1 - q))
    }

    /// Applies the 2x2 matrix `[[a, b], [c, d]]` to qubit `q`.
    fn apply_matrix(&mut self, q: usize, m: [[Complex64; 2]; 2]) -> Result<(), QsimError> {
        let mask = self.mask(q)?;
        for i0 in 0..self.amps.len() {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            let (a0, a1) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: Gate, q: usize) -> Result<(), QsimError> {
        self.apply_matrix(q, gate.matrix())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), QsimError> {
        if control == target {
            return Err(QsimError::SameQubit(control));
        }
        let cm = self.mask(control)?;
        let tm = self.mask(target)?;
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
        Ok(())
    }

    /// Applies `X^x Z^z` on every qubit at once (`Z` acts first).
    pub fn apply_pauli_string(&mut self, x: &Bits, z: &Bits) -> Result<(), QsimError> {
        if x.len() != self.n || z.len() != self.n {
            return Err(QsimError::DimensionMismatch { left: x.len().max(z.len()), right: self.n });
        }
        let xm = x.to_u64() as usize;
        let zm = z.to_u64() as usize;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let sign = if (i & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[i ^ xm] = a * sign;
        }
        self.amps = out;
        Ok(())
    }

    /// Probability that qubit `q` reads `1` in the computational basis.
    pub fn prob_one(&self, q: usize) -> Result<f64, QsimError> {
        let mask = self.mask(q)?;
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & mask != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    fn project(&mut self, q: usize, bit: bool, prob: f64) -> Result<(), QsimError> {
        let mask = self.mask(q)?;
        let scale = 1.0 / prob.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & mask != 0) == bit {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(())
    }

    /// Born-rule measurement. The qubit stays in the register, collapsed onto the
    /// eigenstate of the outcome (`|0>`/`|1>` for Z, `|+>`/`|->` for X).
    pub fn measure(&mut self, q: usize, basis: Basis, rng: &mut RngStream) -> Result<MeasOutcome, QsimError> {
        if basis == Basis::X {
            self.apply_gate(Gate::H, q)?;
        }
        let p1 = self.prob_one(q)?;
        let bit = rng.uniform() < p1;
        self.project(q, bit, if bit { p1 } else { 1.0 - p1 })?;
        if basis == Basis::X {
            self.apply_gate(Gate::H, q)?;
        }
        Ok(MeasOutcome { bit, basis })
    }

    /// Bell measurement: CNOT `q1 -> q2`, H on `q1`, then Z-measure both. Returns
    /// `(a, b)` with `a` the outcome of `q2` and `b` that of `q1`; a state teleported
    /// out of `q1` through a `|Phi+>` pair whose first half is `q2` is recovered by
    /// applying `X^a Z^b` to the other half. Both qubits are left in computational states.
    pub fn bell_measure(&mut self, q1: usize, q2: usize, rng: &mut RngStream) -> Result<(bool, bool), QsimError> {
        self.apply_cnot(q1, q2)?;
        self.apply_gate(Gate::H, q1)?;
        let a = self.measure(q2, Basis::Z, rng)?.bit;
        let b = self.measure(q1, Basis::Z, rng)?.bit;
        Ok((a, b))
    }

    /// Appends a `|Phi+>` pair and returns its two qubit indices.
    pub fn make_epr(&mut self) -> Result<(usize, usize), QsimError> {
        check_cap(self.n + 2)?;
        let h = FRAC_1_SQRT_2;
        let pair = StateVector {
            n: 2,
            amps: vec![
                Complex64::new(h, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(h, 0.0),
            ],
        };
        let n = self.n;
        *self = self.tensor(&pair)?;
        Ok((n, n + 1))
    }

    /// `self ⊗ other`; the qubits of `self` come first.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, QsimError> {
        check_cap(self.n + other.n)?;
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector { n: self.n + other.n, amps })
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64, QsimError> {
        if self.n != other.n {
            return Err(QsimError::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Moves qubit `j` to position `perm.image(j)`.
    pub fn permute_qubits(&self, perm: &Permutation) -> Result<StateVector, QsimError> {
        if perm.len() != self.n {
            return Err(QsimError::DimensionMismatch { left: perm.len(), right: self.n });
        }
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut k = 0usize;
            for j in 0..n {
                if i & (1 << (n - 1 - j)) != 0 {
                    k |= 1 << (n - 1 - perm.image(j));
                }
            }
            out[k] = *a;
        }
        Ok(StateVector { n, amps: out })
    }

    /// Drops qubit `q`, which must already be in the computational state `|bit>`.
    pub fn remove_qubit(&self, q: usize, bit: bool) -> Result<StateVector, QsimError> {
        let mask = self.mask(q)?;
        let low = mask - 1;
        let mut amps = Vec::with_capacity(self.amps.len() / 2);
        let mut leaked = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            if (i & mask != 0) == bit {
                amps.push((i, *a));
            } else {
                leaked += a.norm_sqr();
            }
        }
        if leaked > TOLERANCE {
            return Err(QsimError::NotClassical(q));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len() / 2];
        for (i, a) in amps {
            let k = ((i >> 1) & !low) | (i & low);
            out[k] = a;
        }
        Ok(StateVector { n: self.n - 1, amps: out })
    }

    /// Full density matrix `|psi><psi|`; intended for registers of a few qubits.
    pub fn density_matrix(&self) -> Vec<Vec<Complex64>> {
        self.amps.iter().map(|a| self.amps.iter().map(|b| a * b.conj()).collect()).collect()
    }

    /// Reduced density matrix on `keep` (in that order), tracing out the rest.
    pub fn reduced_density_matrix(&self, keep: &[usize]) -> Result<Vec<Vec<Complex64>>, QsimError> {
        for &q in keep {
            self.mask(q)?;
        }
        let rest: Vec<usize> = (0..self.n).filter(|q| !keep.contains(q)).collect();
        // reorder so kept qubits lead, then slice amplitudes by kept index
        let mut order = keep.to_vec();
        order.extend(&rest);
        let mut map = vec![0; self.n];
        for (pos, &q) in order.iter().enumerate() {
            map[q] = pos;
        }
        let perm = Permutation::from_vec(map).map_err(|e| QsimError::BadInit(e.to_string()))?;
        let moved = self.permute_qubits(&perm)?;
        let dk = 1usize << keep.len();
        let dr = 1usize << rest.len();
        let mut rho = vec![vec![Complex64::new(0.0, 0.0); dk]; dk];
        for (i, row) in rho.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for r in 0..dr {
                    *cell += moved.amps[i * dr + r] * moved.amps[j * dr + r].conj();
                }
            }
        }
        Ok(rho)
    }

    /// Debug dump, one `index re im` line per amplitude with 17 significant digits.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            let _ = writeln!(s, "{i} {:.16e} {:.16e}", a.re, a.im);
        }
        s
    }
}

/// `|<a|b>|^2`, blind to global phase.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64, QsimError> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Pure state from a rank-one density matrix, or `None` when the matrix is mixed.
pub fn purify_rank_one(rho: &[Vec<Complex64>]) -> Option<StateVector> {
    let purity: f64 = rho
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, v)| (v * rho[j][i]).re).sum::<f64>())
        .sum();
    if (purity - 1.0).abs() > 1e-7 {
        return None;
    }
    let k = (0..rho.len()).max_by(|&a, &b| rho[a][a].re.total_cmp(&rho[b][b].re))?;
    let scale = 1.0 / rho[k][k].re.sqrt();
    let amps: Vec<Complex64> = rho.iter().map(|row| row[k] * scale).collect();
    StateVector::from_amplitudes(amps).ok()
}

fn gaussian(rng: &mut RngStream) -> f64 {
    // Box-Muller; 1 - u keeps the log argument away from zero
    let u1 = 1.0 - rng.uniform();
    let u2 = rng.uniform();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
