//! Public circuit descriptions over {X, Z, CNOT, P, H, T, MEAS-Z, MEAS-X}, their text
//! format, and direct plaintext simulation (the ideal channel).

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::qsim::{Basis, Gate, QsimError, QuantumSystem, QubitId, RngStream, StateVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("gate {index} ({gate}): {msg}")]
    Malformed { index: usize, gate: String, msg: String },
    #[error("input has {got} qubits, circuit expects {expected}")]
    Arity { expected: usize, got: usize },
    #[error("forced outcome for wire {0} has probability zero")]
    ImpossibleOutcome(usize),
    #[error("no forced outcome supplied for wire {0}")]
    MissingOutcome(usize),
    #[error(transparent)]
    Sim(#[from] QsimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CircuitGate {
    X(usize),
    Z(usize),
    Cnot(usize, usize),
    P(usize),
    H(usize),
    T(usize),
    Measure(usize, Basis),
    /// X on `target` iff the earlier measurement of wire `control` gave 1.
    CondX { target: usize, control: usize },
    CondZ { target: usize, control: usize },
}

impl CircuitGate {
    /// Wires that must still be quantum when the gate runs.
    pub fn quantum_wires(&self) -> Vec<usize> {
        match *self {
            CircuitGate::X(q) | CircuitGate::Z(q) | CircuitGate::P(q) | CircuitGate::H(q) | CircuitGate::T(q) => {
                vec![q]
            }
            CircuitGate::Measure(q, _) => vec![q],
            CircuitGate::Cnot(a, b) => vec![a, b],
            CircuitGate::CondX { target, .. } | CircuitGate::CondZ { target, .. } => vec![target],
        }
    }

    pub fn is_pauli_or_cnot(&self) -> bool {
        !matches!(self, CircuitGate::P(_) | CircuitGate::H(_) | CircuitGate::T(_))
    }
}

impl fmt::Display for CircuitGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CircuitGate::X(q) => write!(f, "X {q}"),
            CircuitGate::Z(q) => write!(f, "Z {q}"),
            CircuitGate::Cnot(a, b) => write!(f, "CNOT {a} {b}"),
            CircuitGate::P(q) => write!(f, "P {q}"),
            CircuitGate::H(q) => write!(f, "H {q}"),
            CircuitGate::T(q) => write!(f, "T {q}"),
            CircuitGate::Measure(q, b) => write!(f, "MEAS {q} {}", b.symbol()),
            CircuitGate::CondX { target, control } => write!(f, "X {target} if {control}"),
            CircuitGate::CondZ { target, control } => write!(f, "Z {target} if {control}"),
        }
    }
}

/// A circuit on `n_qubits` wires with declared output wires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitDesc {
    n_qubits: usize,
    gates: Vec<CircuitGate>,
    outputs: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct GateCounts {
    pub t: usize,
    pub p: usize,
    pub h: usize,
}

impl CircuitDesc {
    /// Builds and validates a circuit; `outputs = None` declares every wire an output.
    pub fn new(n_qubits: usize, gates: Vec<CircuitGate>, outputs: Option<Vec<usize>>) -> Result<Self, CircuitError> {
        let c = CircuitDesc { n_qubits, gates, outputs: outputs.unwrap_or_else(|| (0..n_qubits).collect()) };
        c.validate()?;
        Ok(c)
    }

    pub fn identity(n_qubits: usize) -> Self {
        CircuitDesc { n_qubits, gates: Vec::new(), outputs: (0..n_qubits).collect() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[CircuitGate] {
        &self.gates
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            match g {
                CircuitGate::T(_) => c.t += 1,
                CircuitGate::P(_) => c.p += 1,
                CircuitGate::H(_) => c.h += 1,
                _ => {}
            }
        }
        c
    }

    /// Wires that end the circuit measured.
    pub fn measured_wires(&self) -> Vec<usize> {
        self.gates
            .iter()
            .filter_map(|g| if let CircuitGate::Measure(q, _) = g { Some(*q) } else { None })
            .collect()
    }

    fn validate(&self) -> Result<(), CircuitError> {
        let mut measured = vec![false; self.n_qubits];
        for (index, g) in self.gates.iter().enumerate() {
            let bad = |msg: &str| CircuitError::Malformed { index, gate: g.to_string(), msg: msg.to_string() };
            for q in g.quantum_wires() {
                if q >= self.n_qubits {
                    return Err(bad("wire out of range"));
                }
                if measured[q] {
                    return Err(bad("wire already measured"));
                }
            }
            match *g {
                CircuitGate::Cnot(a, b) if a == b => return Err(bad("control equals target")),
                CircuitGate::CondX { control, .. } | CircuitGate::CondZ { control, .. } => {
                    if control >= self.n_qubits || !measured[control] {
                        return Err(bad("control wire has not been measured"));
                    }
                }
                CircuitGate::Measure(q, _) => measured[q] = true,
                _ => {}
            }
        }
        let mut seen = vec![false; self.n_qubits];
        for &o in &self.outputs {
            if o >= self.n_qubits || seen[o] {
                return Err(CircuitError::Malformed {
                    index: self.gates.len(),
                    gate: "output".into(),
                    msg: format!("bad output wire {o}"),
                });
            }
            seen[o] = true;
        }
        Ok(())
    }

    /// Parses the line format: one gate per line (`;` also separates), `#` comments,
    /// optional `qubits N` and `output w1 w2 ...` lines.
    pub fn parse(text: &str) -> Result<Self, CircuitError> {
        let mut gates = Vec::new();
        let mut n_declared = None;
        let mut outputs = None;
        let mut max_wire = None::<usize>;
        for (line_no, raw_line) in text.lines().enumerate() {
            let line_no = line_no + 1;
            let without_comment = raw_line.split('#').next().unwrap_or("");
            for stmt in without_comment.split(';') {
                let toks: Vec<&str> = stmt.split_whitespace().collect();
                if toks.is_empty() {
                    continue;
                }
                let err = |msg: &str| CircuitError::Parse { line: line_no, msg: format!("{msg}: {:?}", stmt.trim()) };
                let num = |s: &str| s.parse::<usize>().map_err(|_| err("expected a wire number"));
                let mut track = |q: usize| max_wire = Some(max_wire.map_or(q, |m| m.max(q)));
                let g = match toks.as_slice() {
                    ["qubits", n] => {
                        n_declared = Some(num(n)?);
                        continue;
                    }
                    ["output", ws @ ..] => {
                        outputs = Some(ws.iter().map(|w| num(w)).collect::<Result<Vec<_>, _>>()?);
                        continue;
                    }
                    ["X", q] => CircuitGate::X(num(q)?),
                    ["Z", q] => CircuitGate::Z(num(q)?),
                    ["P", q] => CircuitGate::P(num(q)?),
                    ["H", q] => CircuitGate::H(num(q)?),
                    ["T", q] => CircuitGate::T(num(q)?),
                    ["CNOT", a, b] => CircuitGate::Cnot(num(a)?, num(b)?),
                    ["MEAS", q, "Z"] => CircuitGate::Measure(num(q)?, Basis::Z),
                    ["MEAS", q, "X"] => CircuitGate::Measure(num(q)?, Basis::X),
                    ["X", q, "if", c] => CircuitGate::CondX { target: num(q)?, control: num(c)? },
                    ["Z", q, "if", c] => CircuitGate::CondZ { target: num(q)?, control: num(c)? },
                    _ => return Err(err("unrecognized statement")),
                };
                for q in g.quantum_wires() {
                    track(q);
                }
                if let CircuitGate::CondX { control, .. } | CircuitGate::CondZ { control, .. } = g {
                    track(control);
                }
                gates.push(g);
            }
        }
        let n = n_declared.unwrap_or_else(|| max_wire.map_or(0, |m| m + 1));
        CircuitDesc::new(n, gates, outputs)
    }

    /// Text form accepted by [`CircuitDesc::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.n_qubits);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s.push_str("output");
        for o in &self.outputs {
            s.push_str(&format!(" {o}"));
        }
        s.push('\n');
        s
    }

    /// Random circuit over the full gate set. Measured wires receive no further gates;
    /// conditional Paulis appear only after some wire is measured.
    pub fn random(n_qubits: usize, len: usize, max_t: usize, rng: &mut RngStream) -> Self {
        let mut gates = Vec::new();
        let mut measured: Vec<usize> = Vec::new();
        let mut t_used = 0;
        while gates.len() < len {
            let live: Vec<usize> = (0..n_qubits).filter(|q| !measured.contains(q)).collect();
            if live.is_empty() {
                break;
            }
            let q = live[rng.below(live.len())];
            let g = match rng.below(10) {
                0 => CircuitGate::X(q),
                1 => CircuitGate::Z(q),
                2 if live.len() > 1 => {
                    let others: Vec<usize> = live.iter().copied().filter(|o| *o != q).collect();
                    CircuitGate::Cnot(q, others[rng.below(others.len())])
                }
                3 => CircuitGate::P(q),
                4 | 5 => CircuitGate::H(q),
                6 if t_used < max_t => {
                    t_used += 1;
                    CircuitGate::T(q)
                }
                7 => {
                    measured.push(q);
                    CircuitGate::Measure(q, if rng.bit() { Basis::Z } else { Basis::X })
                }
                8 if !measured.is_empty() => {
                    let c = measured[rng.below(measured.len())];
                    if rng.bit() {
                        CircuitGate::CondX { target: q, control: c }
                    } else {
                        CircuitGate::CondZ { target: q, control: c }
                    }
                }
                _ => CircuitGate::H(q),
            };
            gates.push(g);
        }
        CircuitDesc::new(n_qubits, gates, None).expect("generator emits valid circuits")
    }
}

/// Where measurement outcomes come from when simulating a circuit directly.
pub enum Outcomes<'a> {
    Sample(&'a mut RngStream),
    /// Post-select each wire on the given bit.
    Forced(&'a HashMap<usize, bool>),
}

/// Output wires of a run: unmeasured ones still in the system, measured ones as bits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WireOutputs {
    pub quantum: Vec<(usize, QubitId)>,
    pub classical: Vec<(usize, bool)>,
}

impl WireOutputs {
    pub fn qubit_ids(&self) -> Vec<QubitId> {
        self.quantum.iter().map(|(_, q)| *q).collect()
    }

    pub fn bit(&self, wire: usize) -> Option<bool> {
        self.classical.iter().find(|(w, _)| *w == wire).map(|(_, b)| *b)
    }
}

/// Applies the ideal channel of `c` to `wires` inside `sys`. Non-output wires are traced
/// out using `discard_rng`.
pub fn apply_ideal(
    sys: &mut QuantumSystem,
    wires: &[QubitId],
    c: &CircuitDesc,
    mut outcomes: Outcomes<'_>,
    discard_rng: &mut RngStream,
) -> Result<WireOutputs, CircuitError> {
    if wires.len() != c.n_qubits() {
        return Err(CircuitError::Arity { expected: c.n_qubits(), got: wires.len() });
    }
    let mut bits: HashMap<usize, bool> = HashMap::new();
    for g in c.gates() {
        match *g {
            CircuitGate::X(q) => sys.apply(wires[q], Gate::X)?,
            CircuitGate::Z(q) => sys.apply(wires[q], Gate::Z)?,
            CircuitGate::P(q) => sys.apply(wires[q], Gate::P)?,
            CircuitGate::H(q) => sys.apply(wires[q], Gate::H)?,
            CircuitGate::T(q) => sys.apply(wires[q], Gate::T)?,
            CircuitGate::Cnot(a, b) => sys.apply_cnot(wires[a], wires[b])?,
            CircuitGate::Measure(q, basis) => {
                let bit = match &mut outcomes {
                    Outcomes::Sample(rng) => sys.measure(wires[q], basis, rng)?,
                    Outcomes::Forced(map) => {
                        let bit = *map.get(&q).ok_or(CircuitError::MissingOutcome(q))?;
                        sys.postselect(wires[q], basis, bit).map_err(|_| CircuitError::ImpossibleOutcome(q))?;
                        bit
                    }
                };
                bits.insert(q, bit);
            }
            CircuitGate::CondX { target, control } => {
                if bits[&control] {
                    sys.apply(wires[target], Gate::X)?;
                }
            }
            CircuitGate::CondZ { target, control } => {
                if bits[&control] {
                    sys.apply(wires[target], Gate::Z)?;
                }
            }
        }
    }
    let mut out = WireOutputs::default();
    for (w, q) in wires.iter().enumerate() {
        if bits.contains_key(&w) {
            continue;
        }
        if c.outputs().contains(&w) {
            out.quantum.push((w, *q));
        } else {
            sys.discard(*q, discard_rng)?;
        }
    }
    out.quantum.sort_by_key(|(w, _)| c.outputs().iter().position(|o| o == w));
    for &o in c.outputs() {
        if let Some(b) = bits.get(&o) {
            out.classical.push((o, *b));
        }
    }
    Ok(out)
}

/// Convenience wrapper: runs `c` on a standalone input state and returns the state of the
/// unmeasured outputs (output order) with the measured output bits.
pub fn simulate(
    c: &CircuitDesc,
    input: &StateVector,
    outcomes: Outcomes<'_>,
    discard_rng: &mut RngStream,
) -> Result<(StateVector, Vec<(usize, bool)>), CircuitError> {
    let mut sys = QuantumSystem::new();
    let wires = sys.alloc_state(input.clone());
    let out = apply_ideal(&mut sys, &wires, c, outcomes, discard_rng)?;
    let state = sys.take(&out.qubit_ids(), discard_rng)?;
    Ok((state, out.classical))
}
