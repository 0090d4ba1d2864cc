//! Subcommand bodies. Each returns its full text output so runs can be compared byte
//! for byte.

use std::fmt::Write as _;

use traptp_core::circuit::CircuitDesc;
use traptp_core::bits::Bits;
use traptp_core::clcrypto::mac::check_vectors;
use traptp_core::codes::CssCode;
use traptp_core::games::{
    adversary_by_name, and_circuit, correctness_trial, qotp_demo, run_hybrid, run_indver, run_indver2, run_trial,
    wilson, GameError, GameKind, Guess, Honest, LogTamper, PauliAttack, TrapCodeScheme, TrapTpScheme, TrialStats,
};
use traptp_core::gardenhose::{run_plain, GardenHoseSpec};
use traptp_core::qsim::{fidelity, Gate, RngStream, StateVector, TOLERANCE};
use traptp_core::traptp::{Budgets, Variant};

use crate::config::Config;
use crate::wire;

pub const DEFAULT_GAME_CIRCUIT: &str = "qubits 1\nH 0\nZ 0\n";

/// Text output of a command and whether everything it checked held.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub csv: String,
    pub summary: String,
    pub ok: bool,
}

impl Report {
    pub fn text(&self) -> String {
        format!("{}{}", self.csv, self.summary)
    }
}

type Check = fn(u64) -> Result<String, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn close(a: &StateVector, b: &StateVector) -> Result<bool, String> {
    Ok((fidelity(a, b).map_err(err)? - 1.0).abs() < TOLERANCE)
}

fn check_gate_algebra(seed: u64) -> Result<String, String> {
    let mut rng = RngStream::new(seed);
    let psi = StateVector::random(2, &mut rng).map_err(err)?;
    for (g, k) in [(Gate::H, 2), (Gate::P, 4), (Gate::X, 2), (Gate::Z, 2), (Gate::T, 8)] {
        let mut s = psi.clone();
        for _ in 0..k {
            s.apply_gate(g, 1).map_err(err)?;
        }
        if !close(&s, &psi)? {
            return Err(format!("{g:?}^{k} is not the identity"));
        }
    }
    let (mut a, mut b) = (psi.clone(), psi.clone());
    for g in [Gate::H, Gate::Z, Gate::H] {
        a.apply_gate(g, 0).map_err(err)?;
    }
    b.apply_gate(Gate::X, 0).map_err(err)?;
    if !close(&a, &b)? {
        return Err("HZH differs from X".into());
    }
    Ok("5 powers, 1 conjugation".into())
}

fn check_steane(seed: u64) -> Result<String, String> {
    let mut rng = RngStream::new(seed);
    let code = CssCode::steane(1).map_err(err)?;
    for _ in 0..4 {
        let psi = StateVector::random(1, &mut rng).map_err(err)?;
        let (back, _) = code.decode(&code.encode(&psi).map_err(err)?, &mut rng).map_err(err)?;
        if !close(&back, &psi)? {
            return Err("encode then decode changed the state".into());
        }
    }
    Ok("4 roundtrips".into())
}

fn check_garden_hose(seed: u64) -> Result<String, String> {
    let mut rng = RngStream::new(seed);
    let g = GardenHoseSpec::minimal();
    for trial in 0..8 {
        let b = trial % 2 == 1;
        let psi = StateVector::random(1, &mut rng).map_err(err)?;
        let (mut out, outcomes) = run_plain(&g, &psi, b, &mut rng).map_err(err)?;
        let (x, z) = g.accumulate(b, &outcomes).map_err(err)?;
        out.apply_pauli_string(&Bits::from_bools(vec![x]), &Bits::from_bools(vec![z])).map_err(err)?;
        let mut want = psi;
        if b {
            want.apply_gate(Gate::P, 0).map_err(err)?;
        }
        if !close(&out, &want)? {
            return Err(format!("trial {trial}: output is not P^{}", b as u8));
        }
    }
    Ok("8 runs".into())
}

fn check_trapcode(seed: u64) -> Result<String, String> {
    let c = CircuitDesc::parse("qubits 2\nCNOT 0 1\nX 1\nMEAS 0 Z\n").map_err(err)?;
    let s = TrapCodeScheme::new(1, 2);
    let stats = run_indver(&s, &mut Honest::new(c, Guess::Random), 10, seed).map_err(err)?;
    if stats.accepts() != 10 {
        return Err(format!("{} of 10 honest runs accepted", stats.accepts()));
    }
    Ok("10 honest runs accepted".into())
}

fn check_traptp(seed: u64) -> Result<String, String> {
    for trial in 0..10 {
        let r = correctness_trial(1, 2, 2, seed, trial).map_err(err)?;
        if !r.accepted || (r.fidelity - 1.0).abs() > 1e-9 {
            return Err(format!("trial {trial}: accepted {} fidelity {}", r.accepted, r.fidelity));
        }
    }
    Ok("10 random circuits".into())
}

fn check_tampering(seed: u64) -> Result<String, String> {
    let c = CircuitDesc::parse(DEFAULT_GAME_CIRCUIT).map_err(err)?;
    let s = TrapTpScheme::new(1, Budgets::new(0, 0, 1));
    for name in ["log-tamper", "mac-forgery", "wrong-circuit"] {
        let mut adv = adversary_by_name::<TrapTpScheme>(name, &c).map_err(err)?;
        let stats = run_indver(&s, adv.as_mut(), 10, seed).map_err(err)?;
        if stats.detections() != 10 {
            return Err(format!("{name}: {} of 10 detected", stats.detections()));
        }
    }
    Ok("3 attacks x 10 runs detected".into())
}

fn check_game_wiring(seed: u64) -> Result<String, String> {
    let c = CircuitDesc::parse(DEFAULT_GAME_CIRCUIT).map_err(err)?;
    let s = TrapTpScheme::new(1, Budgets::new(0, 0, 1));
    let mut seen = Vec::new();
    for r in [false, true] {
        let mut adv = Honest::new(c.clone(), Guess::Random);
        run_trial(&s, &mut adv, GameKind::IndVer, seed, 0, Some(r)).map_err(err)?;
        seen.push(adv.observed.ok_or("no state observed")?);
    }
    if !close(&seen[0], &seen[1])? {
        return Err("branches differ".into());
    }
    let mut adv = LogTamper { circuit: c };
    let rec = run_trial(&s, &mut adv, GameKind::IndVer, seed, 1, Some(true)).map_err(err)?;
    if rec.accept {
        return Err("tampered run accepted".into());
    }
    Ok("branches match".into())
}

fn check_qotp(seed: u64) -> Result<String, String> {
    let c = and_circuit();
    for k in 0..4u64 {
        let (x, y) = (k & 2 != 0, k & 1 != 0);
        let r = qotp_demo(&c, &[x], &[y], seed.wrapping_add(k)).map_err(err)?;
        if r.outputs != Some(vec![(2, x && y)]) || !r.second_query_refused {
            return Err(format!("inputs {} {}: {r:?}", x as u8, y as u8));
        }
    }
    Ok("AND on 4 inputs".into())
}

fn check_wire(seed: u64) -> Result<String, String> {
    use traptp_core::clcrypto::TransparentHe;
    use traptp_core::trapcode::BlockSystem;
    use traptp_core::traptp::{encrypt, keygen, VqfheCiphertext};
    let mut rng = RngStream::new(seed);
    let mut sys = BlockSystem::new(CssCode::steane(1).map_err(err)?);
    let (sk, evk, _) = keygen(&mut sys, &TransparentHe, 1, Budgets::new(1, 1, 1), &mut rng).map_err(err)?;
    let qs = sys.quantum_mut().alloc_state(StateVector::random(2, &mut rng).map_err(err)?);
    let mut ct = VqfheCiphertext::default();
    encrypt(&sk, &TransparentHe, &mut sys, &mut ct, &qs, &mut rng).map_err(err)?;
    let bytes = wire::encode_ciphertext(&sys, &ct);
    let (sys2, ct2) = wire::decode_ciphertext(&bytes).map_err(err)?;
    if wire::encode_ciphertext(&sys2, &ct2) != bytes || wire::encode_evk(&wire::decode_evk(&wire::encode_evk(&evk)).map_err(err)?) != wire::encode_evk(&evk) {
        return Err("re-encoding differs".into());
    }
    Ok(format!("{} byte ciphertext", bytes.len()))
}

/// Runs every module's quick invariant checks; `vectors` is the MAC vector file.
pub fn selftest(vectors: &str, seed: u64) -> Report {
    let mut checks: Vec<(&str, Result<String, String>)> =
        vec![("mac-vectors", check_vectors(vectors).map(|n| format!("{n} vectors")))];
    let rest: [(&str, Check); 9] = [
        ("gate-algebra", check_gate_algebra),
        ("steane-roundtrip", check_steane),
        ("garden-hose", check_garden_hose),
        ("trapcode-honest", check_trapcode),
        ("traptp-honest", check_traptp),
        ("log-integrity", check_tampering),
        ("game-wiring", check_game_wiring),
        ("one-time-program", check_qotp),
        ("wire-roundtrip", check_wire),
    ];
    for (i, (name, f)) in rest.into_iter().enumerate() {
        checks.push((name, f(seed.wrapping_add(i as u64))));
    }
    let mut summary = String::new();
    let mut ok = true;
    for (name, res) in checks {
        match res {
            Ok(d) => writeln!(summary, "ok   {name}: {d}"),
            Err(e) => {
                ok = false;
                writeln!(summary, "FAIL {name}: {e}")
            }
        }
        .expect("writing to a string");
    }
    writeln!(summary, "{}", if ok { "selftest passed" } else { "selftest FAILED" }).expect("writing to a string");
    Report { csv: String::new(), summary, ok }
}

/// Random circuits on up to two qubits with up to two T gates.
pub fn run_correctness(cfg: &Config) -> Result<Report, GameError> {
    let trials = cfg.trials_or(200);
    let mut csv = String::from("trial,gates,t_gates,accept,fidelity\n");
    let (mut accepted, mut min_f) = (0u64, 1.0f64);
    for t in 0..trials {
        let r = correctness_trial(cfg.level, 2, 2, cfg.seed, t)?;
        writeln!(csv, "{},{},{},{},{:.12}", r.trial, r.gates, r.t_gates, r.accepted as u8, r.fidelity).expect("string");
        accepted += r.accepted as u64;
        min_f = min_f.min(r.fidelity);
    }
    let ok = accepted == trials && min_f >= 1.0 - 1e-9;
    let summary = format!("correctness trials {trials}\naccepted {accepted}/{trials}\nmin fidelity {min_f:.12}\n");
    Ok(Report { csv, summary, ok })
}

/// The named security game against the configured adversary.
pub fn run_game(cfg: &Config, kind: GameKind, variant: Variant, circuit: &CircuitDesc) -> Result<Report, GameError> {
    let scheme = TrapTpScheme::new(cfg.level, cfg.budgets).with_variant(variant);
    let mut adv = adversary_by_name::<TrapTpScheme>(&cfg.adversary, circuit)?;
    let trials = cfg.trials_or(1000);
    let stats = match kind {
        GameKind::IndVer => run_indver(&scheme, adv.as_mut(), trials, cfg.seed)?,
        GameKind::IndVer2 => run_indver2(&scheme, adv.as_mut(), trials, cfg.seed)?,
        GameKind::Hybrid => run_hybrid(&scheme, adv.as_mut(), trials, cfg.seed)?,
    };
    Ok(Report { csv: stats.to_csv(), summary: stats.summary(), ok: true })
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Weight-`w` X attacks on one unmeasured block; `w = 0` means a single X or Z.
pub fn run_attack_stats(cfg: &Config, weight: usize, circuit: &CircuitDesc) -> Result<Report, GameError> {
    let scheme = TrapTpScheme::new(cfg.level, cfg.budgets);
    let mut adv = if weight == 0 { PauliAttack::single(circuit.clone()) } else { PauliAttack::x_weight(circuit.clone(), weight) };
    let stats: TrialStats = run_indver(&scheme, &mut adv, cfg.trials_or(10_000), cfg.seed)?;
    let m = CssCode::steane(cfg.level as usize).map_err(|e| GameError::Invalid(e.to_string()))?.m() as u64;
    // an X survives only on data or plus traps; a single X or Z is caught by a third of positions
    let expected_reject = if weight == 0 { 1.0 / 3.0 } else { 1.0 - binomial(2 * m, weight as u64) / binomial(3 * m, weight as u64) };
    let reject = wilson(stats.trials() - stats.accepts(), stats.trials());
    let mut summary = stats.summary();
    writeln!(
        summary,
        "reject rate: {:.4} [{:.4}, {:.4}]\nexpected reject rate: {expected_reject:.4}",
        reject.estimate, reject.lo, reject.hi
    )
    .expect("string");
    Ok(Report { csv: stats.to_csv(), summary, ok: reject.contains(expected_reject) })
}
