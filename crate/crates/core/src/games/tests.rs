use super::*;
use crate::qsim::{fidelity, StateVector, TOLERANCE};
use crate::traptp::{Budgets, Variant};

fn hz() -> CircuitDesc {
    CircuitDesc::parse("qubits 1\nH 0\nZ 0\n").unwrap()
}

fn scheme() -> TrapTpScheme {
    TrapTpScheme::new(1, Budgets::new(0, 0, 1))
}

#[test]
fn honest_branches_deliver_the_same_state() {
    for trial in 0..6 {
        let mut states = Vec::new();
        for r in [false, true] {
            let mut adv = Honest::new(hz(), Guess::Random);
            let rec = run_trial(&scheme(), &mut adv, GameKind::IndVer, 77, trial, Some(r)).unwrap();
            assert!(rec.accept);
            states.push(adv.observed.unwrap());
        }
        let f = fidelity(&states[0], &states[1]).unwrap();
        assert!((f - 1.0).abs() < TOLERANCE, "trial {trial}: {f}");
    }
}

/// Tampers with the log and keeps what it is handed.
struct Recorder {
    inner: LogTamper,
    seen: Option<StateVector>,
}

impl Adversary<TrapTpScheme> for Recorder {
    fn name(&self) -> String {
        "recorder".into()
    }

    fn choose(&mut self, sys: &mut BlockSystem, evk: &crate::traptp::EvalKey, rng: &mut RngStream) -> Result<Vec<QubitId>, GameError> {
        Adversary::<TrapTpScheme>::choose(&mut self.inner, sys, evk, rng)
    }

    fn attack(
        &mut self,
        scheme: &TrapTpScheme,
        sys: &mut BlockSystem,
        evk: &crate::traptp::EvalKey,
        ct: crate::traptp::VqfheCiphertext,
        rng: &mut RngStream,
    ) -> Result<Attack<crate::traptp::VqfheCiphertext>, GameError> {
        self.inner.attack(scheme, sys, evk, ct, rng)
    }

    fn guess(&mut self, sys: &mut BlockSystem, outputs: &WireOutputs, _accepted: bool, _rng: &mut RngStream) -> Result<bool, GameError> {
        self.seen = Some(sys.quantum().state_of(&outputs.qubit_ids())?);
        Ok(false)
    }
}

#[test]
fn reject_branch_hands_over_the_fixed_state() {
    for r in [false, true] {
        let mut adv = Recorder { inner: LogTamper { circuit: hz() }, seen: None };
        let rec = run_trial(&scheme(), &mut adv, GameKind::IndVer, 5, 0, Some(r)).unwrap();
        assert!(!rec.accept);
        let f = fidelity(&adv.seen.unwrap(), &StateVector::zero(1).unwrap()).unwrap();
        assert!((f - 1.0).abs() < TOLERANCE);
    }
}

#[test]
fn honest_adversary_guesses_at_chance() {
    let mut adv = Honest::new(hz(), Guess::Random);
    let stats = run_indver(&scheme(), &mut adv, 200, 3).unwrap();
    assert_eq!(stats.accepts(), 200);
    assert!(stats.win_rate().contains(0.5), "{}", stats.summary());
}

#[test]
fn tampering_adversaries_are_always_detected() {
    for name in ["log-tamper", "mac-forgery", "wrong-circuit"] {
        let mut adv = adversary_by_name::<TrapTpScheme>(name, &hz()).unwrap();
        let stats = run_indver(&scheme(), adv.as_mut(), 40, 9).unwrap();
        assert_eq!(stats.detections(), 40, "{name}");
    }
}

#[test]
fn two_round_and_hybrid_games_run() {
    let c = CircuitDesc::parse("qubits 2\nCNOT 0 1\nH 1\n").unwrap();
    let mut adv = adversary_by_name::<TrapTpScheme>("adaptive", &c).unwrap();
    let stats = run_indver2(&TrapTpScheme::new(1, Budgets::new(0, 0, 1)), adv.as_mut(), 20, 1).unwrap();
    assert_eq!(stats.accepts(), 20);

    for variant in [Variant::SideChannel, Variant::PlaintextShadow] {
        let s = scheme().with_variant(variant);
        let mut a = Honest::new(hz(), Guess::Random);
        let mut b = Honest::new(hz(), Guess::Random);
        assert_eq!(run_hybrid(&s, &mut a, 20, 4).unwrap().records, run_indver(&scheme(), &mut b, 20, 4).unwrap().records);
    }
}

#[test]
fn trap_code_scheme_plays_too() {
    let c = CircuitDesc::parse("qubits 2\nCNOT 0 1\nX 1\n").unwrap();
    let s = TrapCodeScheme::new(1, 2);
    let mut adv = Honest::new(c.clone(), Guess::Random);
    assert_eq!(run_indver(&s, &mut adv, 20, 2).unwrap().accepts(), 20);
    let mut adv = adversary_by_name::<TrapCodeScheme>("weight-21", &c).unwrap();
    assert_eq!(run_indver(&s, adv.as_mut(), 20, 2).unwrap().accepts(), 0);
    assert!(adversary_by_name::<TrapCodeScheme>("nobody", &c).is_err());
}

#[test]
fn one_time_program_computes_and() {
    let c = and_circuit();
    assert_eq!(c.counts().t, 7);
    for (x, y) in [(false, false), (false, true), (true, false), (true, true)] {
        let report = qotp_demo(&c, &[x], &[y], 10 + 2 * x as u64 + y as u64).unwrap();
        assert_eq!(report.outputs, Some(vec![(2, x && y)]), "{x} {y}");
        assert!(report.second_query_refused);
    }
}

#[test]
fn one_time_token_rejects_tampering_and_foreign_circuits() {
    let c = and_circuit();
    let mut rng = RngStream::new(1);
    let QotpBundle { mut sys, evk, ct, mut token } = qotp_prepare(&c, &[true], 1, &mut rng).unwrap();
    let rc = receiver_circuit(&c, 1, &[true]).unwrap();
    let (out, log) = crate::traptp::eval(&mut sys, &crate::clcrypto::TransparentHe, &evk, &ct, &rc, &mut rng).unwrap();
    let mut bytes = log.to_bytes();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    assert_eq!(token.query(&mut sys, &out, &bytes, &rc, &mut rng).unwrap(), None);
    assert!(token.is_consumed());

    // X on the sender's wire is outside the family
    let QotpBundle { mut sys, evk, ct, mut token } = qotp_prepare(&c, &[false], 1, &mut rng).unwrap();
    let forged = receiver_circuit(&c, 0, &[true]).unwrap();
    let (out, log) = crate::traptp::eval(&mut sys, &crate::clcrypto::TransparentHe, &evk, &ct, &forged, &mut rng).unwrap();
    assert_eq!(token.query(&mut sys, &out, &log.to_bytes(), &forged, &mut rng).unwrap(), None);
}

#[test]
fn random_circuits_decrypt_correctly() {
    for trial in 0..20 {
        let rec = correctness_trial(1, 2, 2, 21, trial).unwrap();
        assert!(rec.accepted && (rec.fidelity - 1.0).abs() < 1e-9, "{rec:?}");
    }
}
