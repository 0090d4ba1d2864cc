//! Dense reference simulator shared by the integration tests. Qubit 0 is the most
//! significant bit of an amplitude index, matching the library.
#![allow(dead_code)]

use std::collections::HashMap;

use num_complex::Complex64;
use traptp_core::circuit::{CircuitDesc, CircuitGate};
use traptp_core::qsim::{Basis, StateVector};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub struct Dense {
    pub n: usize,
    pub amps: Vec<Complex64>,
}

impl Dense {
    pub fn from(s: &StateVector) -> Self {
        Dense { n: s.n_qubits(), amps: s.amplitudes().to_vec() }
    }

    pub fn bit(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    pub fn one(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let b = self.bit(q);
        for i in 0..self.amps.len() {
            if i & b == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | b]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | b] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn cnot(&mut self, ctl: usize, tgt: usize) {
        let (cb, tb) = (self.bit(ctl), self.bit(tgt));
        let old = self.amps.clone();
        for (i, a) in old.into_iter().enumerate() {
            let j = if i & cb != 0 { i ^ tb } else { i };
            self.amps[j] = a;
        }
    }

    /// Projects `q` onto `|v>` and renormalises; returns the outcome probability.
    pub fn project(&mut self, q: usize, v: bool) -> f64 {
        let b = self.bit(q);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & b != 0) != v {
                *a = c(0.0, 0.0);
            }
        }
        let p: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        if p > 0.0 {
            let k = 1.0 / p.sqrt();
            self.amps.iter_mut().for_each(|a| *a *= k);
        }
        p
    }
}

pub fn mat(name: char) -> [[Complex64; 2]; 2] {
    let (o, l, h) = (c(0.0, 0.0), c(1.0, 0.0), c(0.5f64.sqrt(), 0.0));
    match name {
        'X' => [[o, l], [l, o]],
        'Z' => [[l, o], [o, -l]],
        'H' => [[h, h], [h, -h]],
        'P' => [[l, o], [o, c(0.0, 1.0)]],
        'T' => [[l, o], [o, c(0.5f64.sqrt(), 0.5f64.sqrt())]],
        _ => unreachable!(),
    }
}

/// Runs `circ` on `input`, forcing every measurement to the reported bit. Returns the
/// joint state of the unmeasured wires (in wire order) and the smallest outcome
/// probability seen.
pub fn reference_run(circ: &CircuitDesc, input: &StateVector, forced: &HashMap<usize, bool>) -> Result<(Vec<Complex64>, f64), String> {
    let mut s = Dense::from(input);
    let mut bits: HashMap<usize, bool> = HashMap::new();
    let mut pmin: f64 = 1.0;
    for g in circ.gates() {
        match *g {
            CircuitGate::X(q) => s.one(q, mat('X')),
            CircuitGate::Z(q) => s.one(q, mat('Z')),
            CircuitGate::H(q) => s.one(q, mat('H')),
            CircuitGate::P(q) => s.one(q, mat('P')),
            CircuitGate::T(q) => s.one(q, mat('T')),
            CircuitGate::Cnot(a, b) => s.cnot(a, b),
            CircuitGate::Measure(q, basis) => {
                if basis == Basis::X {
                    s.one(q, mat('H'));
                }
                let v = *forced.get(&q).ok_or(format!("no outcome reported for wire {q}"))?;
                pmin = pmin.min(s.project(q, v));
                bits.insert(q, v);
            }
            CircuitGate::CondX { target, control } => {
                if bits[&control] {
                    s.one(target, mat('X'));
                }
            }
            CircuitGate::CondZ { target, control } => {
                if bits[&control] {
                    s.one(target, mat('Z'));
                }
            }
        }
    }
    // measured wires now sit in a computational basis state; read off the rest
    let live: Vec<usize> = (0..circ.n_qubits()).filter(|q| !bits.contains_key(q)).collect();
    let mut out = vec![c(0.0, 0.0); 1 << live.len()];
    let mut fixed = 0;
    for (&q, &v) in &bits {
        if v {
            fixed |= s.bit(q);
        }
    }
    for (k, slot) in out.iter_mut().enumerate() {
        let mut i = fixed;
        for (pos, &q) in live.iter().enumerate() {
            if k & (1 << (live.len() - 1 - pos)) != 0 {
                i |= s.bit(q);
            }
        }
        *slot = s.amps[i];
    }
    Ok((out, pmin))
}

pub fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

