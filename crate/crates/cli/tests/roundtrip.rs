use traptp_cli::wire;
use traptp_core::circuit::CircuitDesc;
use traptp_core::clcrypto::{ComputationLog, TransparentHe};
use traptp_core::codes::CssCode;
use traptp_core::qsim::{RngStream, StateVector};
use traptp_core::trapcode::BlockSystem;
use traptp_core::traptp::{encrypt, eval, keygen, Budgets, VqfheCiphertext};

#[test]
fn ciphertexts_circuits_and_logs_roundtrip_byte_exact() {
    for i in 0..1000u64 {
        let mut rng = RngStream::derive(99, i);
        let n = 1 + rng.below(2);
        let c = CircuitDesc::random(n, 1 + rng.below(8), 1, &mut rng);
        let text = wire::encode_circuit(&c);
        assert_eq!(wire::decode_circuit(&text).unwrap(), c);
        assert_eq!(wire::encode_circuit(&wire::decode_circuit(&text).unwrap()), text);

        let counts = c.counts();
        let mut sys = BlockSystem::new(CssCode::steane(1).unwrap());
        let (sk, evk, _) = keygen(&mut sys, &TransparentHe, 1, Budgets::new(counts.t, counts.p, counts.h), &mut rng).unwrap();
        let qs = sys.quantum_mut().alloc_state(StateVector::random(n, &mut rng).unwrap());
        let mut ct = VqfheCiphertext::default();
        encrypt(&sk, &TransparentHe, &mut sys, &mut ct, &qs, &mut rng).unwrap();

        let bytes = wire::encode_ciphertext(&sys, &ct);
        let (sys2, ct2) = wire::decode_ciphertext(&bytes).unwrap();
        assert_eq!(ct2, ct);
        assert_eq!(wire::encode_ciphertext(&sys2, &ct2), bytes);
        let k = wire::encode_evk(&evk);
        assert_eq!(wire::decode_evk(&k).unwrap(), evk);

        let (out, log) = eval(&mut sys, &TransparentHe, &evk, &ct, &c, &mut rng).unwrap();
        let lb = log.to_bytes();
        assert_eq!(ComputationLog::from_bytes(&lb).unwrap(), log);
        assert_eq!(ComputationLog::from_bytes(&lb).unwrap().to_bytes(), lb);
        let rb = wire::encode_ciphertext(&sys, &out);
        let (s3, o3) = wire::decode_ciphertext(&rb).unwrap();
        assert_eq!(wire::encode_ciphertext(&s3, &o3), rb);
    }
}

#[test]
fn decoded_register_keeps_amplitudes() {
    let mut rng = RngStream::new(3);
    let mut sys = BlockSystem::new(CssCode::steane(1).unwrap());
    let s = StateVector::random(3, &mut rng).unwrap();
    let qs = sys.quantum_mut().alloc_state(s.clone());
    let mut w = traptp_core::clcrypto::codec::Writer::new();
    wire::encode_system(&mut w, &sys);
    let bytes = w.finish();
    let back = wire::decode_system(&mut traptp_core::clcrypto::codec::Reader::new(&bytes)).unwrap();
    assert_eq!(back.quantum().state_of(&qs).unwrap(), s);

    // truncation anywhere is an error, never a panic
    for cut in 0..bytes.len() {
        assert!(wire::decode_system(&mut traptp_core::clcrypto::codec::Reader::new(&bytes[..cut])).is_err());
    }
}
