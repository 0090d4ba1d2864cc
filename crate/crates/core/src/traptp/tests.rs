use std::collections::HashMap;

use super::*;
use crate::circuit::{apply_ideal, CircuitDesc, Outcomes};
use crate::clcrypto::{ComputationLog, LogEntry, TransparentHe};
use crate::qsim::{fidelity, QuantumSystem, StateVector, TOLERANCE};

struct Run {
    sys: BlockSystem,
    sk: SecretKey,
    ct: VqfheCiphertext,
    log: ComputationLog,
    side: SideInfo,
    rng: RngStream,
}

fn evaluate(input: &StateVector, c: &CircuitDesc, budgets: Budgets, seed: u64) -> Result<Run, TrapTpError> {
    let he = TransparentHe;
    let mut rng = RngStream::new(seed);
    let mut sys = BlockSystem::new(CssCode::steane(1).unwrap());
    let (sk, evk, mut side) = keygen(&mut sys, &he, 1, budgets, &mut rng)?;
    let qs = sys.quantum_mut().alloc_state(input.clone());
    let mut ct = VqfheCiphertext::default();
    side.merge(encrypt(&sk, &he, &mut sys, &mut ct, &qs, &mut rng)?);
    let (ct, log) = eval(&mut sys, &he, &evk, &ct, c, &mut rng)?;
    Ok(Run { sys, sk, ct, log, side, rng })
}

fn check(run: &mut Run, c: &CircuitDesc, variant: Variant) -> Verdict {
    verdec(&mut run.sys, &TransparentHe, &run.sk, &run.ct, &run.log, c, variant, Some(&run.side), &mut run.rng).unwrap()
}

/// Ideal output for the accepted run, with measurements forced to the reported bits.
fn ideal(input: &StateVector, c: &CircuitDesc, v: &Verdict) -> StateVector {
    let forced: HashMap<usize, bool> = {
        // every measured wire's bit is needed, not just the outputs
        let mut m = HashMap::new();
        for (w, b) in &v.outputs.classical {
            m.insert(*w, *b);
        }
        m
    };
    let mut q = QuantumSystem::new();
    let wires = q.alloc_state(input.clone());
    let out = apply_ideal(&mut q, &wires, c, Outcomes::Forced(&forced), &mut RngStream::new(0)).unwrap();
    q.state_of(&out.qubit_ids()).unwrap()
}

fn got(run: &Run, v: &Verdict) -> StateVector {
    run.sys.quantum().state_of(&v.outputs.qubit_ids()).unwrap()
}

fn assert_honest(text: &str, n: usize, budgets: Budgets, seed: u64) {
    let c = CircuitDesc::parse(text).unwrap();
    let input = StateVector::random(n, &mut RngStream::new(seed ^ 0xabc)).unwrap();
    for variant in [Variant::Standard, Variant::SideChannel, Variant::PlaintextShadow] {
        let mut run = evaluate(&input, &c, budgets, seed).unwrap();
        let v = check(&mut run, &c, variant);
        assert!(v.accepted, "{text} {variant:?}: {:?}", v.reason);
        let f = fidelity(&got(&run, &v), &ideal(&input, &c, &v)).unwrap();
        assert!((f - 1.0).abs() < 1e-6, "{text} {variant:?}: fidelity {f}");
    }
}

#[test]
fn honest_single_gates() {
    let b = Budgets::new(1, 1, 1);
    assert_honest("qubits 1\n", 1, b, 1);
    assert_honest("qubits 1\nX 0\n", 1, b, 2);
    assert_honest("qubits 1\nZ 0\n", 1, b, 3);
    assert_honest("qubits 1\nP 0\n", 1, b, 4);
    assert_honest("qubits 1\nH 0\n", 1, b, 5);
    assert_honest("qubits 2\nCNOT 0 1\n", 2, b, 6);
}

#[test]
fn honest_t_gate_both_routes() {
    let c = CircuitDesc::parse("qubits 1\nT 0\n").unwrap();
    let mut routes = [false, false];
    for seed in 0..24 {
        let input = StateVector::random(1, &mut RngStream::new(seed)).unwrap();
        let mut run = evaluate(&input, &c, Budgets::new(1, 0, 0), seed).unwrap();
        let measured: Vec<&str> = run
            .log
            .entries()
            .iter()
            .filter_map(|e| match e {
                LogEntry::Measurement { resource, .. } => Some(resource.as_str()),
                _ => None,
            })
            .collect();
        let after = measured.iter().position(|r| *r == "G1.m2").unwrap() + 1;
        routes[(measured[after] == "G1.m3") as usize] = true;
        let v = check(&mut run, &c, Variant::Standard);
        assert!(v.accepted, "{:?}", v.reason);
        let f = fidelity(&got(&run, &v), &ideal(&input, &c, &v)).unwrap();
        assert!((f - 1.0).abs() < 1e-6, "seed {seed}: fidelity {f}");
    }
    assert!(routes[0] && routes[1]);
}

#[test]
fn honest_mixed_circuit_with_measurements() {
    assert_honest(
        "qubits 3\nH 0\nCNOT 0 1\nT 1\nMEAS 0 Z\nX 2 if 0\nP 2\nT 2\nZ 1 if 0\nH 1\noutput 0 1 2\n",
        3,
        Budgets::new(2, 1, 2),
        7,
    );
    assert_honest("qubits 2\nH 0\nCNOT 0 1\nMEAS 0 X\nZ 1 if 0\nH 1\n", 2, Budgets::new(0, 0, 2), 8);
}

#[test]
fn two_t_gates_cross_epochs() {
    assert_honest("qubits 2\nT 0\nH 1\nT 1\nCNOT 0 1\nT 0\n", 2, Budgets::new(3, 0, 1), 9);
}

#[test]
fn budget_exhaustion_is_an_error() {
    let input = StateVector::zero(1).unwrap();
    let c = CircuitDesc::parse("qubits 1\nP 0\nP 0\n").unwrap();
    let err = evaluate(&input, &c, Budgets::new(0, 1, 0), 1).err().unwrap();
    assert_eq!(err, TrapTpError::Budget { kind: "P", limit: 1 });
    let c = CircuitDesc::parse("qubits 1\nT 0\n").unwrap();
    assert!(matches!(evaluate(&input, &c, Budgets::default(), 1), Err(TrapTpError::Budget { kind: "T", .. })));
}

#[test]
fn circuit_wider_than_ciphertext_is_an_error() {
    let input = StateVector::zero(1).unwrap();
    let c = CircuitDesc::parse("qubits 3\nX 2\n").unwrap();
    assert!(matches!(evaluate(&input, &c, Budgets::default(), 1), Err(TrapTpError::SlotOutOfRange(_))));
}

#[test]
fn empty_circuit_log_holds_records_and_final() {
    let c = CircuitDesc::identity(1);
    let mut run = evaluate(&StateVector::zero(1).unwrap(), &c, Budgets::default(), 3).unwrap();
    let kinds: Vec<&str> = run.log.entries().iter().map(LogEntry::kind).collect();
    assert_eq!(kinds, ["signed", "signed", "final"]);
    assert!(check(&mut run, &c, Variant::Standard).accepted);
}

#[test]
fn tampering_is_rejected() {
    let c = CircuitDesc::parse("qubits 2\nH 0\nCNOT 0 1\nT 1\n").unwrap();
    let input = StateVector::zero(2).unwrap();
    let b = Budgets::new(1, 0, 1);

    // dropped entry
    let mut run = evaluate(&input, &c, b, 11).unwrap();
    run.log.entries_mut().remove(20);
    assert!(!check(&mut run, &c, Variant::Standard).accepted);

    // forged signed record
    let mut run = evaluate(&input, &c, b, 11).unwrap();
    if let LogEntry::Signed(s) = &mut run.log.entries_mut()[1] {
        s.tag[0] ^= 1;
    }
    let v = check(&mut run, &c, Variant::Standard);
    assert!(!v.accepted && v.reason.unwrap().contains("authentic"));

    // claims for a different circuit
    let mut run = evaluate(&input, &c, b, 11).unwrap();
    let other = CircuitDesc::parse("qubits 2\nH 0\nCNOT 0 1\nT 0\n").unwrap();
    assert!(!check(&mut run, &other, Variant::Standard).accepted);

    // flipped bit in a recorded measurement
    let mut run = evaluate(&input, &c, b, 11).unwrap();
    for e in run.log.entries_mut() {
        if let LogEntry::Measurement { outcome, .. } = e {
            outcome.flip(0);
            break;
        }
    }
    assert!(!check(&mut run, &c, Variant::Standard).accepted);
}

#[test]
fn reject_outputs_are_fixed() {
    let c = CircuitDesc::parse("qubits 2\nMEAS 0 Z\nX 1\noutput 0 1\n").unwrap();
    let mut run = evaluate(&StateVector::new_register(2, "11").unwrap(), &c, Budgets::default(), 12).unwrap();
    let last = run.log.len() - 2;
    run.log.entries_mut().swap(last, last - 1);
    let v = check(&mut run, &c, Variant::Standard);
    assert!(!v.accepted);
    assert_eq!(v.outputs.classical, vec![(0, false)]);
    let s = got(&run, &v);
    assert!((fidelity(&s, &StateVector::zero(1).unwrap()).unwrap() - 1.0).abs() < TOLERANCE);
}

#[test]
fn data_attack_on_all_positions_is_caught() {
    let c = CircuitDesc::identity(1);
    let mut run = evaluate(&StateVector::zero(1).unwrap(), &c, Budgets::default(), 13).unwrap();
    let id = run.ct.blocks[0].unwrap();
    for pos in 0..21 {
        run.sys.apply_pauli(id, pos, crate::qsim::Gate::X).unwrap();
    }
    assert!(!check(&mut run, &c, Variant::Standard).accepted);
}

#[test]
fn dec_cost_is_independent_of_circuit() {
    let mut costs = Vec::new();
    for text in ["qubits 1\n", "qubits 1\nH 0\nT 0\nP 0\nX 0\nH 0\n"] {
        let c = CircuitDesc::parse(text).unwrap();
        let mut run = evaluate(&StateVector::zero(1).unwrap(), &c, Budgets::new(1, 1, 2), 14).unwrap();
        let v = check(&mut run, &c, Variant::Standard);
        assert!(v.accepted);
        costs.push((v.dec_ops, v.ver_steps));
    }
    assert_eq!(costs[0].0, costs[1].0);
    assert!(costs[1].1 > costs[0].1);
}

#[test]
fn keys_serialize() {
    let he = TransparentHe;
    let mut rng = RngStream::new(5);
    let mut sys = BlockSystem::new(CssCode::steane(1).unwrap());
    let (sk, evk, _) = keygen(&mut sys, &he, 1, Budgets::new(1, 1, 1), &mut rng).unwrap();
    let mut w = Writer::new();
    evk.encode_into(&mut w);
    let bytes = w.finish();
    let mut r = Reader::new(&bytes);
    assert_eq!(EvalKey::decode_from(&mut r).unwrap(), evk);
    let q = sys.quantum_mut().alloc('0').unwrap();
    let mut ct = VqfheCiphertext::default();
    encrypt(&sk, &he, &mut sys, &mut ct, &[q], &mut rng).unwrap();
    let mut w = Writer::new();
    ct.encode_into(&mut w);
    let bytes = w.finish();
    assert_eq!(VqfheCiphertext::decode_from(&mut Reader::new(&bytes)).unwrap(), ct);
    assert_eq!(Budgets::parse("3, 1,2").unwrap(), Budgets::new(3, 1, 2));
    assert!(Budgets::parse("1,2").is_err());
}
