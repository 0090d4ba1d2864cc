//! Concatenated Steane code: the [7,4,3] Hamming code used as a self-dual CSS code.
//!
//! Logical `|0>` is the uniform superposition of the even-weight Hamming codewords and
//! logical `|1>` of the odd-weight ones; logical X and Z are transversal.

use thiserror::Error;

use crate::bits::Bits;
use crate::qsim::{Gate, QsimError, RngStream, StateVector, TOLERANCE};

/// Parity-check rows of the Hamming code. The syndrome of a single flip at
/// position `j` (0-based) reads `j + 1` in binary, row 0 being the high bit.
pub const HAMMING_CHECKS: [[bool; 7]; 3] = [
    [false, false, false, true, true, true, true],
    [false, true, true, false, false, true, true],
    [true, false, true, false, true, false, true],
];

/// Deepest concatenation level accepted by [`CssCode::steane`].
pub const MAX_LEVEL: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("concatenation level {0} outside 1..={MAX_LEVEL}")]
    BadLevel(usize),
    #[error("expected {expected} bits, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("quantum operations need level 1 (7 physical qubits)")]
    QuantumLevel,
    #[error("state left the code space during decoding")]
    LeftCodeSpace,
    #[error(transparent)]
    Sim(#[from] QsimError),
}

/// Syndromes measured during a quantum decode and the single-qubit corrections applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SyndromeReport {
    pub x_syndrome: u8,
    pub z_syndrome: u8,
    pub x_corrected: Option<usize>,
    pub z_corrected: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CssCode {
    level: usize,
    m: usize,
    d: usize,
    d_c: usize,
}

fn hamming_syndrome(word: &[bool]) -> u8 {
    HAMMING_CHECKS.iter().fold(0u8, |acc, row| {
        let bit = row.iter().zip(word).filter(|(h, w)| **h && **w).count() % 2;
        (acc << 1) | bit as u8
    })
}

/// The eight words spanned by the parity-check rows (the even Hamming codewords).
fn even_codewords() -> Vec<[bool; 7]> {
    (0..8u8)
        .map(|k| {
            let mut w = [false; 7];
            for (r, row) in HAMMING_CHECKS.iter().enumerate() {
                if k >> (2 - r) & 1 == 1 {
                    for (b, h) in w.iter_mut().zip(row) {
                        *b ^= *h;
                    }
                }
            }
            w
        })
        .collect()
}

fn word_index(w: &[bool; 7]) -> usize {
    w.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize)
}

impl CssCode {
    pub fn steane(level: usize) -> Result<Self, CodeError> {
        if level == 0 || level > MAX_LEVEL {
            return Err(CodeError::BadLevel(level));
        }
        let d = 3usize.pow(level as u32);
        Ok(CssCode { level, m: 7usize.pow(level as u32), d, d_c: (d - 1) / 2 })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Physical qubits per logical qubit.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    /// Number of correctable errors.
    pub fn d_c(&self) -> usize {
        self.d_c
    }

    fn check_len(&self, bits: &Bits) -> Result<(), CodeError> {
        if bits.len() != self.m {
            return Err(CodeError::BadLength { expected: self.m, got: bits.len() });
        }
        Ok(())
    }

    /// Uniformly random classical codeword whose logical value is `logical`.
    pub fn sample_codeword(&self, logical: bool, rng: &mut RngStream) -> Bits {
        sample_at_level(self.level, logical, rng)
    }

    /// Nearest-codeword decoding of a measured string: syndrome lookup at level 1,
    /// exact minimum-distance recursion above it.
    pub fn classical_decode(&self, bits: &Bits) -> Result<bool, CodeError> {
        self.check_len(bits)?;
        if self.level == 1 {
            let mut w: Vec<bool> = bits.iter().collect();
            let s = hamming_syndrome(&w);
            if s != 0 {
                w[s as usize - 1] ^= true;
            }
            return Ok(w.iter().filter(|b| **b).count() % 2 == 1);
        }
        self.classical_decode_min_distance(bits)
    }

    /// Logical value of the closest codeword, computed by dynamic programming over the
    /// concatenation tree. Ties (impossible within `d_c` flips) resolve to 0.
    pub fn classical_decode_min_distance(&self, bits: &Bits) -> Result<bool, CodeError> {
        self.check_len(bits)?;
        let [c0, c1] = coset_costs(bits.as_slice(), self.level);
        Ok(c1 < c0)
    }

    /// Logical Pauli left behind by an error pattern after ideal decoding. Because the
    /// code is self-dual the same map serves X and Z components.
    pub fn residual_logical(&self, error: &Bits) -> Result<bool, CodeError> {
        self.classical_decode(error)
    }

    fn require_quantum(&self) -> Result<(), CodeError> {
        if self.level != 1 {
            return Err(CodeError::QuantumLevel);
        }
        Ok(())
    }

    /// Encodes a single-qubit state into an m-qubit block.
    pub fn encode(&self, state: &StateVector) -> Result<StateVector, CodeError> {
        if state.n_qubits() != 1 {
            return Err(CodeError::BadLength { expected: 1, got: state.n_qubits() });
        }
        self.encode_qubit(state, 0)
    }

    /// Replaces qubit `q` of `state` by its m-qubit encoding, occupying positions `q..q+m`.
    pub fn encode_qubit(&self, state: &StateVector, q: usize) -> Result<StateVector, CodeError> {
        self.require_quantum()?;
        let n = state.n_qubits();
        if q >= n {
            return Err(QsimError::QubitOutOfRange { qubit: q, n }.into());
        }
        let out_n = n + 6;
        if out_n > crate::qsim::QUBIT_CAP {
            return Err(QsimError::CapExceeded { requested: out_n, cap: crate::qsim::QUBIT_CAP }.into());
        }
        let low_bits = n - 1 - q;
        let words = even_codewords();
        let norm = 1.0 / (words.len() as f64).sqrt();
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 1 << out_n];
        for (i, a) in state.amplitudes().iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let v = (i >> low_bits) & 1 == 1;
            let high = i >> (low_bits + 1);
            let low = i & ((1 << low_bits) - 1);
            for w in &words {
                let cw = word_index(w) ^ if v { 0x7f } else { 0 };
                let k = (((high << 7) | cw) << low_bits) | low;
                amps[k] += a * norm;
            }
        }
        Ok(StateVector::from_amplitudes(amps)?)
    }

    /// Decodes an m-qubit block into one qubit.
    pub fn decode(&self, block: &StateVector, rng: &mut RngStream) -> Result<(StateVector, SyndromeReport), CodeError> {
        if block.n_qubits() != self.m {
            return Err(CodeError::BadLength { expected: self.m, got: block.n_qubits() });
        }
        self.decode_block(block, 0, rng)
    }

    /// Syndrome-measures, corrects and decodes qubits `start..start+m` of `state`,
    /// leaving the logical qubit at position `start`.
    pub fn decode_block(
        &self,
        state: &StateVector,
        start: usize,
        rng: &mut RngStream,
    ) -> Result<(StateVector, SyndromeReport), CodeError> {
        self.require_quantum()?;
        let n = state.n_qubits();
        if start + 7 > n {
            return Err(QsimError::QubitOutOfRange { qubit: start + 6, n }.into());
        }
        let mut s = state.clone();
        let mut report = SyndromeReport { x_syndrome: measure_checks(&mut s, start, rng)?, ..Default::default() };
        for q in start..start + 7 {
            s.apply_gate(Gate::H, q)?;
        }
        report.z_syndrome = measure_checks(&mut s, start, rng)?;
        for q in start..start + 7 {
            s.apply_gate(Gate::H, q)?;
        }
        if report.x_syndrome != 0 {
            let pos = report.x_syndrome as usize - 1;
            s.apply_gate(Gate::X, start + pos)?;
            report.x_corrected = Some(pos);
        }
        if report.z_syndrome != 0 {
            let pos = report.z_syndrome as usize - 1;
            s.apply_gate(Gate::Z, start + pos)?;
            report.z_corrected = Some(pos);
        }

        // project onto the logical basis: <v_L| on the block
        let low_bits = n - start - 7;
        let out_n = n - 6;
        let norm = 1.0 / 8f64.sqrt();
        let mut logical_of = [None; 128];
        for w in even_codewords() {
            logical_of[word_index(&w)] = Some(false);
            logical_of[word_index(&w) ^ 0x7f] = Some(true);
        }
        let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 1 << out_n];
        for (i, a) in s.amplitudes().iter().enumerate() {
            let cw = (i >> low_bits) & 0x7f;
            let Some(v) = logical_of[cw] else { continue };
            let high = i >> (low_bits + 7);
            let low = i & ((1 << low_bits) - 1);
            let k = (((high << 1) | v as usize) << low_bits) | low;
            amps[k] += a * norm;
        }
        let out_norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (out_norm - 1.0).abs() > TOLERANCE {
            return Err(CodeError::LeftCodeSpace);
        }
        Ok((StateVector::from_amplitudes(amps)?, report))
    }
}

/// Measures the three Z-type Hamming checks on qubits `start..start+7`; returns the syndrome.
fn measure_checks(s: &mut StateVector, start: usize, rng: &mut RngStream) -> Result<u8, CodeError> {
    let n = s.n_qubits();
    let low_bits = n - start - 7;
    let mut syndrome = 0u8;
    for row in HAMMING_CHECKS {
        let mask = row.iter().fold(0usize, |acc, h| (acc << 1) | *h as usize) << low_bits;
        let odd = |i: usize| (i & mask).count_ones() % 2 == 1;
        let p1: f64 = s.amplitudes().iter().enumerate().filter(|(i, _)| odd(*i)).map(|(_, a)| a.norm_sqr()).sum();
        let bit = rng.uniform() < p1;
        let keep = if bit { p1 } else { 1.0 - p1 };
        let scale = 1.0 / keep.sqrt();
        let amps: Vec<_> = s
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| if odd(i) == bit { a * scale } else { num_complex::Complex64::new(0.0, 0.0) })
            .collect();
        *s = StateVector::from_amplitudes(amps)?;
        syndrome = (syndrome << 1) | bit as u8;
    }
    Ok(syndrome)
}

fn sample_at_level(level: usize, logical: bool, rng: &mut RngStream) -> Bits {
    let words = even_codewords();
    let mut outer: Vec<bool> = words[rng.below(words.len())].to_vec();
    if logical {
        outer.iter_mut().for_each(|b| *b ^= true);
    }
    if level == 1 {
        return Bits::from_bools(outer);
    }
    let mut out = Vec::new();
    for v in outer {
        out.extend(sample_at_level(level - 1, v, rng).iter());
    }
    Bits::from_bools(out)
}

/// Minimum flips needed to reach a codeword of logical value 0 and 1.
fn coset_costs(bits: &[bool], level: usize) -> [usize; 2] {
    let words = even_codewords();
    let sub: Vec<[usize; 2]> = if level == 1 {
        bits.iter().map(|b| if *b { [1, 0] } else { [0, 1] }).collect()
    } else {
        let len = bits.len() / 7;
        bits.chunks(len).map(|c| coset_costs(c, level - 1)).collect()
    };
    let mut best = [usize::MAX; 2];
    for w in &words {
        for (v, flip) in [(0usize, false), (1, true)] {
            let cost: usize = w.iter().zip(&sub).map(|(b, c)| c[(*b ^ flip) as usize]).sum();
            best[v] = best[v].min(cost);
        }
    }
    best
}
