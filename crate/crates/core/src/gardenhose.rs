//! Garden-hose gadgets for the conditional phase correction of the T gate.
//!
//! A gadget is a set of EPR pairs over numbered sockets. Socket 0 receives the data by
//! a Bell measurement, the last socket is the output, and one link carries a phase gate
//! on one of its halves. Depending on a bit, Bell measurements between socket pairs
//! route the data through the twisted link or around it.

use std::fmt;

use thiserror::Error;

use crate::bits::{Bits, Permutation};
use crate::qsim::{Gate, QsimError, RngStream, StateVector};
use crate::trapcode::logical_mask;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GardenHoseError {
    #[error("gadget description line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid gadget: {0}")]
    Invalid(String),
    #[error("expected {expected} Bell outcomes, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("simulation: {0}")]
    Sim(String),
}

impl From<QsimError> for GardenHoseError {
    fn from(e: QsimError) -> Self {
        GardenHoseError::Sim(e.to_string())
    }
}

/// One EPR pair between two sockets; `twisted` puts the phase gate on socket `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub twisted: bool,
}

/// Correction carried by one Bell measurement: the receiver applies `X^x Z^z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct BellOutcome {
    pub x: bool,
    pub z: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GardenHoseSpec {
    pub pair_count: usize,
    pub links: Vec<Link>,
    /// Bell-measurement schedule over socket pairs for bit 0 and bit 1.
    pub routes: [Vec<(usize, usize)>; 2],
}

impl GardenHoseSpec {
    /// Three pairs: in-socket 0, out-socket 5, middle sockets 1..=4, twist on socket 3.
    pub fn minimal() -> Self {
        GardenHoseSpec {
            pair_count: 3,
            links: vec![
                Link { a: 0, b: 2, twisted: false },
                Link { a: 1, b: 5, twisted: false },
                Link { a: 3, b: 4, twisted: true },
            ],
            routes: [vec![(2, 1), (3, 4)], vec![(2, 3), (4, 1)]],
        }
    }

    pub fn sockets(&self) -> usize {
        2 * self.pair_count
    }

    pub fn input_socket(&self) -> usize {
        0
    }

    pub fn output_socket(&self) -> usize {
        self.sockets() - 1
    }

    /// Sockets strictly between input and output.
    pub fn middle_sockets(&self) -> std::ops::Range<usize> {
        1..self.output_socket()
    }

    pub fn partner(&self, s: usize) -> Option<(usize, bool)> {
        self.links.iter().find_map(|l| {
            if l.a == s {
                Some((l.b, l.twisted))
            } else if l.b == s {
                Some((l.a, l.twisted))
            } else {
                None
            }
        })
    }

    /// Number of Bell outcomes a run produces: the entry measurement plus one per
    /// scheduled pair. Both routes must have the same length.
    pub fn outcome_count(&self) -> usize {
        1 + self.routes[0].len()
    }

    /// Walks the route for `b`; returns the sequence of links the data crosses
    /// (as twist flags) and whether each scheduled pair carried the data.
    fn walk(&self, b: bool) -> Result<(Vec<bool>, Vec<bool>), GardenHoseError> {
        let (first, twist0) = self
            .partner(self.input_socket())
            .ok_or_else(|| GardenHoseError::Invalid("input socket unlinked".into()))?;
        let mut at = first;
        let mut crossed = vec![twist0];
        let mut carried = Vec::new();
        for &(u, v) in &self.routes[b as usize] {
            let from = if u == at {
                v
            } else if v == at {
                u
            } else {
                carried.push(false);
                continue;
            };
            let (next, twist) =
                self.partner(from).ok_or_else(|| GardenHoseError::Invalid(format!("socket {from} unlinked")))?;
            crossed.push(twist);
            carried.push(true);
            at = next;
        }
        if at != self.output_socket() {
            return Err(GardenHoseError::Invalid(format!("route {} ends at socket {at}", b as u8)));
        }
        Ok((crossed, carried))
    }

    /// Structural checks: sockets partitioned by links, one twisted link, equal route
    /// lengths, every route ending at the output with twist parity equal to its bit.
    pub fn validate(&self) -> Result<(), GardenHoseError> {
        let n = self.sockets();
        if self.links.len() != self.pair_count {
            return Err(GardenHoseError::Invalid("link count differs from pair count".into()));
        }
        let mut seen = vec![false; n];
        for l in &self.links {
            for s in [l.a, l.b] {
                if s >= n || seen[s] {
                    return Err(GardenHoseError::Invalid(format!("socket {s} reused or out of range")));
                }
                seen[s] = true;
            }
        }
        if self.links.iter().filter(|l| l.twisted).count() != 1 {
            return Err(GardenHoseError::Invalid("exactly one link must carry the phase gate".into()));
        }
        if self.routes[0].len() != self.routes[1].len() {
            return Err(GardenHoseError::Invalid("routes differ in length".into()));
        }
        for b in [false, true] {
            let mut used = vec![false; n];
            for &(u, v) in &self.routes[b as usize] {
                for s in [u, v] {
                    if !self.middle_sockets().contains(&s) || used[s] {
                        return Err(GardenHoseError::Invalid(format!("route {} measures socket {s} badly", b as u8)));
                    }
                    used[s] = true;
                }
            }
            let (crossed, _) = self.walk(b)?;
            let twists = crossed.iter().filter(|t| **t).count();
            if (twists % 2 == 1) != b {
                return Err(GardenHoseError::Invalid(format!("route {} crosses the twist {twists} times", b as u8)));
            }
        }
        Ok(())
    }

    /// Net Pauli `(x, z)` on the output relative to `P^b` applied to the input, given the
    /// Bell outcomes in measurement order. Outcomes of pairs that did not carry the data
    /// are ignored. Crossing the twisted link after a correction `X^x Z^z` turns it into
    /// `X^x Z^(x^z)`, since `P X = X Z P` up to phase.
    pub fn accumulate(&self, b: bool, outcomes: &[BellOutcome]) -> Result<(bool, bool), GardenHoseError> {
        if outcomes.len() != self.outcome_count() {
            return Err(GardenHoseError::Arity { expected: self.outcome_count(), got: outcomes.len() });
        }
        let (crossed, carried) = self.walk(b)?;
        let mut x = outcomes[0].x;
        let mut z = outcomes[0].z;
        let mut k = 1;
        if crossed[0] {
            z ^= x;
        }
        for (i, c) in carried.iter().enumerate() {
            if *c {
                x ^= outcomes[i + 1].x;
                z ^= outcomes[i + 1].z;
                if crossed[k] {
                    z ^= x;
                }
                k += 1;
            }
        }
        Ok((x, z))
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self, GardenHoseError> {
        let err = |line: usize, msg: &str| GardenHoseError::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.trim() == "GH v1" => {}
            _ => return Err(err(1, "missing GH v1 header")),
        }
        let mut pair_count = None;
        let mut links = Vec::new();
        let mut routes: [Option<Vec<(usize, usize)>>; 2] = [None, None];
        for (i, line) in lines {
            let ln = i + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(ln, "bad number"));
            match toks.as_slice() {
                ["pair", k] => pair_count = Some(num(k)?),
                ["link", a, b] => links.push(Link { a: num(a)?, b: num(b)?, twisted: false }),
                ["link", a, b, "P"] => links.push(Link { a: num(a)?, b: num(b)?, twisted: true }),
                ["route", head, rest @ ..] => {
                    let bit = match *head {
                        "0:" => 0,
                        "1:" => 1,
                        _ => return Err(err(ln, "route label must be 0: or 1:")),
                    };
                    if rest.len() % 2 != 0 || routes[bit].is_some() {
                        return Err(err(ln, "route needs socket pairs, once per bit"));
                    }
                    let socks = rest.iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
                    routes[bit] = Some(socks.chunks(2).map(|c| (c[0], c[1])).collect());
                }
                _ => return Err(err(ln, "unrecognized line")),
            }
        }
        let [r0, r1] = routes;
        let spec = GardenHoseSpec {
            pair_count: pair_count.ok_or_else(|| err(0, "missing pair line"))?,
            links,
            routes: [r0.ok_or_else(|| err(0, "missing route 0"))?, r1.ok_or_else(|| err(0, "missing route 1"))?],
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for GardenHoseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GH v1")?;
        writeln!(f, "pair {}", self.pair_count)?;
        for l in &self.links {
            writeln!(f, "link {} {}{}", l.a, l.b, if l.twisted { " P" } else { "" })?;
        }
        for (b, r) in self.routes.iter().enumerate() {
            write!(f, "route {b}:")?;
            for (u, v) in r {
                write!(f, " {u} {v}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Pads of the output block after a gadget run: the accumulated Pauli is flipped onto
/// the data positions of `x`/`z` under `pi`.
pub fn gh_key_update(
    spec: &GardenHoseSpec,
    b: bool,
    outcomes: &[BellOutcome],
    pi: &Permutation,
    x: &Bits,
    z: &Bits,
) -> Result<(Bits, Bits), GardenHoseError> {
    let (ax, az) = spec.accumulate(b, outcomes)?;
    let mask = logical_mask(pi, pi.len() / 3).map_err(|e| GardenHoseError::Invalid(e.to_string()))?;
    let mut x = x.clone();
    let mut z = z.clone();
    if ax {
        x.xor_assign(&mask).map_err(|e| GardenHoseError::Invalid(e.to_string()))?;
    }
    if az {
        z.xor_assign(&mask).map_err(|e| GardenHoseError::Invalid(e.to_string()))?;
    }
    Ok((x, z))
}

/// Unencrypted gadget state: `pair_count` EPR pairs laid out by socket number, with the
/// phase gate on the twisted half.
pub fn gadget_state(spec: &GardenHoseSpec) -> Result<StateVector, GardenHoseError> {
    let n = spec.sockets();
    let mut s = StateVector::zero(n)?;
    for l in &spec.links {
        s.apply_gate(Gate::H, l.a)?;
        s.apply_cnot(l.a, l.b)?;
        if l.twisted {
            s.apply_gate(Gate::P, l.a)?;
        }
    }
    Ok(s)
}

/// Runs a gadget on plain qubits: the data qubit is appended after the sockets, Bell
/// measured into the input socket, then routed for bit `b`. Returns the output qubit's
/// state without correction and the Bell outcomes.
pub fn run_plain(
    spec: &GardenHoseSpec,
    data: &StateVector,
    b: bool,
    rng: &mut RngStream,
) -> Result<(StateVector, Vec<BellOutcome>), GardenHoseError> {
    let n = spec.sockets();
    let mut s = gadget_state(spec)?.tensor(data)?;
    let mut outcomes = Vec::new();
    let (a, z) = s.bell_measure(n, spec.input_socket(), rng)?;
    outcomes.push(BellOutcome { x: a, z });
    for &(u, v) in &spec.routes[b as usize] {
        let (a, z) = s.bell_measure(u, v, rng)?;
        outcomes.push(BellOutcome { x: a, z });
    }
    let out = spec.output_socket();
    let keep = s.reduced_density_matrix(&[out])?;
    let state = crate::qsim::purify_rank_one(&keep).ok_or_else(|| GardenHoseError::Sim("output not pure".into()))?;
    Ok((state, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{fidelity, TOLERANCE};

    #[test]
    fn minimal_spec_is_valid_and_roundtrips() {
        let g = GardenHoseSpec::minimal();
        g.validate().unwrap();
        assert_eq!(g.pair_count, 3);
        assert_eq!(GardenHoseSpec::parse(&g.to_text()).unwrap(), g);
        assert!(g.to_text().starts_with("GH v1\npair 3\n"));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut g = GardenHoseSpec::minimal();
        g.routes[1] = vec![(2, 1), (3, 4)];
        assert!(g.validate().is_err());
        let mut g = GardenHoseSpec::minimal();
        g.links[2].twisted = false;
        assert!(g.validate().is_err());
        assert!(GardenHoseSpec::parse("GH v2\npair 3").is_err());
    }

    #[test]
    fn zero_outcomes_leave_keys() {
        let g = GardenHoseSpec::minimal();
        let pi = Permutation::identity(21);
        let x = Bits::parse("101010101010101010101").unwrap();
        let z = Bits::zeros(21);
        let zero = vec![BellOutcome::default(); 3];
        assert_eq!(gh_key_update(&g, false, &zero, &pi, &x, &z).unwrap(), (x.clone(), z.clone()));
        let one = vec![BellOutcome { x: true, z: false }, BellOutcome::default(), BellOutcome::default()];
        let (nx, nz) = gh_key_update(&g, false, &one, &pi, &x, &z).unwrap();
        assert_eq!(nx.xor(&x).unwrap(), logical_mask(&pi, 7).unwrap());
        assert_eq!(nz, z);
        assert!(gh_key_update(&g, false, &zero[..2], &pi, &x, &z).is_err());
    }

    #[test]
    fn plain_channel_is_conditional_phase() {
        let g = GardenHoseSpec::minimal();
        let mut rng = RngStream::new(17);
        for trial in 0..40 {
            let b = trial % 2 == 1;
            let psi = StateVector::random(1, &mut rng).unwrap();
            let (mut out, outcomes) = run_plain(&g, &psi, b, &mut rng).unwrap();
            let (ax, az) = g.accumulate(b, &outcomes).unwrap();
            if ax {
                out.apply_gate(Gate::X, 0).unwrap();
            }
            if az {
                out.apply_gate(Gate::Z, 0).unwrap();
            }
            let mut want = psi.clone();
            if b {
                want.apply_gate(Gate::P, 0).unwrap();
            }
            assert!((fidelity(&out, &want).unwrap() - 1.0).abs() < TOLERANCE);
        }
    }
}
