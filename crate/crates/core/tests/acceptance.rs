//! Acceptance checks, one line per criterion. Every expected value is recomputed here
//! from first principles rather than taken from the library.

use std::collections::{BTreeSet, HashMap};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use traptp_core::bits::Bits;
use traptp_core::circuit::CircuitDesc;
use traptp_core::clcrypto::TransparentHe;
use traptp_core::codes::CssCode;
use traptp_core::games::{
    and_circuit, qotp_demo, run_hybrid, run_indver, run_trial, GameKind, Guess, Honest, LogTamper, MacForgery,
    PauliAttack, TrapTpScheme, WrongCircuit,
};
use traptp_core::gardenhose::{run_plain, GardenHoseSpec};
use traptp_core::qsim::{RngStream, StateVector};
use traptp_core::trapcode::BlockSystem;
use traptp_core::traptp::{self, Budgets, Variant, Verdict, VqfheCiphertext};

mod common;

use common::{mat, overlap, reference_run, Dense};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const SEED: u64 = 20_240_601;
const TOL: f64 = 1e-9;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Fraction of `w`-subsets of the `3m` positions of a block that avoid every trap
/// detecting the flip, by enumeration. `m` positions detect a flip.
fn undetected_fraction(m: usize, w: usize) -> f64 {
    let n = 3 * m;
    // positions 0..m detect; the rest do not
    let (mut total, mut hidden) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != w {
            continue;
        }
        total += 1;
        if mask & ((1 << m) - 1) == 0 {
            hidden += 1;
        }
    }
    hidden as f64 / total as f64
}

fn steane_m() -> Result<usize, String> {
    Ok(CssCode::steane(1).map_err(err)?.m())
}

/// Runs the full KeyGen, Enc, Eval, VerDec pipeline honestly.
fn pipeline(circ: &CircuitDesc, input: &StateVector, rng: &mut RngStream) -> Result<(BlockSystem, Verdict), String> {
    let counts = circ.counts();
    let he = TransparentHe;
    let mut sys = BlockSystem::new(CssCode::steane(1).map_err(err)?);
    let (sk, evk, _) = traptp::keygen(&mut sys, &he, 1, Budgets::new(counts.t, counts.p, counts.h), rng).map_err(err)?;
    let qs = sys.quantum_mut().alloc_state(input.clone());
    let mut ct = VqfheCiphertext::default();
    traptp::encrypt(&sk, &he, &mut sys, &mut ct, &qs, rng).map_err(err)?;
    let (out, log) = traptp::eval(&mut sys, &he, &evk, &ct, circ, rng).map_err(err)?;
    let v = traptp::verdec(&mut sys, &he, &sk, &out, &log, circ, Variant::Standard, None, rng).map_err(err)?;
    Ok((sys, v))
}

fn game_circuit() -> CircuitDesc {
    CircuitDesc::parse("qubits 1\nH 0\nZ 0\n").expect("valid circuit")
}

fn game_scheme() -> TrapTpScheme {
    TrapTpScheme::new(1, Budgets::new(0, 0, 1))
}

// ---- criteria ----

fn end_to_end_correctness() -> Check {
    let (mut worst, mut t_total) = (1.0f64, 0);
    for trial in 0..200u64 {
        let mut rng = RngStream::derive(SEED, trial);
        let n = 1 + rng.below(2);
        let circ = CircuitDesc::random(n, 1 + rng.below(12), 2, &mut rng);
        let input = StateVector::random(n, &mut rng).map_err(err)?;
        let (sys, v) = pipeline(&circ, &input, &mut rng)?;
        if !v.accepted {
            return Err(format!("trial {trial} rejected: {:?}\n{}", v.reason, circ.to_text()));
        }
        let forced: HashMap<usize, bool> = v.outputs.classical.iter().copied().collect();
        let (want, pmin) = reference_run(&circ, &input, &forced)?;
        if pmin < 1e-12 {
            return Err(format!("trial {trial}: reported outcome has probability {pmin}"));
        }
        let f = if v.outputs.quantum.is_empty() {
            1.0
        } else {
            let got = sys.quantum().state_of(&v.outputs.qubit_ids()).map_err(err)?;
            overlap(got.amplitudes(), &want)
        };
        worst = worst.min(f);
        t_total += circ.counts().t;
        if f < 1.0 - TOL {
            return Err(format!("trial {trial}: fidelity {f}\n{}", circ.to_text()));
        }
    }
    Ok(format!("200/200 accepted, min fidelity {worst:.12}, {t_total} T gates"))
}

fn weight_one_detection() -> Check {
    let m = steane_m()?;
    let expected = undetected_fraction(m, 1);
    let expected_reject = 1.0 - expected;
    // detection needs a trap of the matching kind: m of the 3m positions
    let oracle = m as f64 / (3 * m) as f64;
    let mut adv = PauliAttack::single(game_circuit());
    let stats = run_indver(&game_scheme(), &mut adv, 10_000, SEED).map_err(err)?;
    let rate = 1.0 - stats.accepts() as f64 / stats.trials() as f64;
    if (rate - oracle).abs() > 0.02 || (expected_reject - oracle).abs() > 1e-12 {
        return Err(format!("reject rate {rate:.4}, oracle {oracle:.4}"));
    }
    Ok(format!("reject rate {rate:.4} vs {oracle:.4} over 10^4"))
}

fn weight_w_detection() -> Check {
    let m = steane_m()? as u64;
    let mut parts = Vec::new();
    for w in [2usize, 3] {
        let hyper = binomial(2 * m, w as u64) as f64 / binomial(3 * m, w as u64) as f64;
        let enumerated = undetected_fraction(m as usize, w);
        if (hyper - enumerated).abs() > 1e-12 {
            return Err(format!("w={w}: oracles disagree {hyper} vs {enumerated}"));
        }
        let mut adv = PauliAttack::x_weight(game_circuit(), w);
        let stats = run_indver(&game_scheme(), &mut adv, 10_000, SEED + w as u64).map_err(err)?;
        let rate = stats.accepts() as f64 / stats.trials() as f64;
        let bound = (2.0f64 / 3.0).powi(w.div_ceil(2) as i32);
        if (rate - hyper).abs() > 0.02 || rate > bound {
            return Err(format!("w={w}: accept rate {rate:.4}, oracle {hyper:.4}, bound {bound:.4}"));
        }
        parts.push(format!("w={w} accept {rate:.4} vs {hyper:.4}"));
    }
    Ok(parts.join(", "))
}

fn pauli_twirl() -> Check {
    let mut rng = RngStream::new(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let psi = StateVector::random(2, &mut rng).map_err(err)?;
        let mut avg = vec![vec![Complex64::new(0.0, 0.0); 4]; 4];
        for key in 0..16u32 {
            let x = Bits::from_bools(vec![key & 1 != 0, key & 2 != 0]);
            let z = Bits::from_bools(vec![key & 4 != 0, key & 8 != 0]);
            let mut s = psi.clone();
            s.apply_pauli_string(&x, &z).map_err(err)?;
            let a = s.amplitudes();
            for i in 0..4 {
                for j in 0..4 {
                    avg[i][j] += a[i] * a[j].conj() / 16.0;
                }
            }
        }
        for (i, row) in avg.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 0.25 } else { 0.0 };
                worst = worst.max((v - Complex64::new(want, 0.0)).norm());
            }
        }
    }
    if worst > TOL {
        return Err(format!("max deviation from I/4 is {worst:e}"));
    }
    Ok(format!("10 states, max deviation {worst:.1e}"))
}

fn indver_sanity() -> Check {
    let s = game_scheme();
    let mut parts = Vec::new();
    for (name, rule) in [("honest", Guess::Random), ("always-0", Guess::Zero)] {
        let stats = run_indver(&s, &mut Honest::new(game_circuit(), rule), 10_000, SEED).map_err(err)?;
        let w = stats.wins() as f64 / stats.trials() as f64;
        if !(0.48..=0.52).contains(&w) {
            return Err(format!("{name} wins {w:.4}"));
        }
        parts.push(format!("{name} {w:.4}"));
    }
    let stats = run_indver(&s, &mut PauliAttack::single(game_circuit()), 10_000, SEED).map_err(err)?;
    let w = stats.wins() as f64 / stats.trials() as f64;
    let bound = 0.5 + 0.5 * (2.0f64 / 3.0) + 0.02;
    if w > bound {
        return Err(format!("single-pauli wins {w:.4} > {bound:.4}"));
    }
    parts.push(format!("single-pauli {w:.4} <= {bound:.4}"));
    Ok(parts.join(", "))
}

fn compactness() -> Check {
    let short = CircuitDesc::parse("qubits 1\nH 0\nX 0\nP 0\nZ 0\nH 0\n").map_err(err)?;
    let mut text = String::from("qubits 1\n");
    for i in 0..50 {
        text += ["H 0\n", "X 0\n", "P 0\n", "Z 0\n", "H 0\n"][i % 5];
    }
    let long = CircuitDesc::parse(&text).map_err(err)?;
    let mut results = Vec::new();
    for circ in [&short, &long] {
        let mut rng = RngStream::new(SEED);
        let input = StateVector::random(1, &mut rng).map_err(err)?;
        let (_, v) = pipeline(circ, &input, &mut rng)?;
        if !v.accepted {
            return Err(format!("{}-gate run rejected", circ.len()));
        }
        results.push((circ.len(), v.dec_ops, v.ver_steps));
    }
    let (a, b) = (results[0], results[1]);
    if a.1 != b.1 || b.2 <= a.2 {
        return Err(format!("{a:?} vs {b:?} (gates, dec ops, ver steps)"));
    }
    Ok(format!("dec ops {} for both; ver steps {} < {}", a.1, a.2, b.2))
}

fn log_integrity() -> Check {
    let s = game_scheme();
    let circ = game_circuit();
    let mut wrong = circ.to_text();
    wrong += "X 0\n";
    let wrong = CircuitDesc::parse(&wrong).map_err(err)?;
    let mut parts = Vec::new();
    let runs = [
        ("byte-tamper", run_indver(&s, &mut LogTamper { circuit: circ.clone() }, 1000, SEED)),
        ("mac-forgery", run_indver(&s, &mut MacForgery { circuit: circ.clone() }, 1000, SEED)),
        ("wrong-circuit", run_indver(&s, &mut WrongCircuit { claimed: circ.clone(), applied: wrong }, 1000, SEED)),
    ];
    for (name, stats) in runs {
        let stats = stats.map_err(err)?;
        if stats.accepts() != 0 {
            return Err(format!("{name}: {} of 1000 accepted", stats.accepts()));
        }
        parts.push(name);
    }
    let honest = run_indver(&s, &mut Honest::new(circ, Guess::Random), 1000, SEED).map_err(err)?;
    if honest.accepts() != 1000 {
        return Err(format!("honest: {} of 1000 rejected", 1000 - honest.accepts()));
    }
    Ok(format!("{} all rejected; honest 1000/1000 accepted", parts.join(", ")))
}

fn hybrid_consistency() -> Check {
    let s = game_scheme();
    let circ = game_circuit();
    let a = run_indver(&s, &mut Honest::new(circ.clone(), Guess::Random), 500, SEED).map_err(err)?;
    let b = run_hybrid(&s, &mut Honest::new(circ.clone(), Guess::Random), 500, SEED).map_err(err)?;
    let pa = run_indver(&s, &mut PauliAttack::single(circ.clone()), 500, SEED).map_err(err)?;
    let pb = run_hybrid(&s, &mut PauliAttack::single(circ.clone()), 500, SEED).map_err(err)?;
    if a.records != b.records || pa.records != pb.records {
        return Err("indver and hybrid records differ".into());
    }
    for trial in 0..200 {
        let mut seen = Vec::new();
        for variant in [Variant::Standard, Variant::SideChannel, Variant::PlaintextShadow] {
            let scheme = game_scheme().with_variant(variant);
            let mut adv = Honest::new(circ.clone(), Guess::Random);
            let rec = run_trial(&scheme, &mut adv, GameKind::Hybrid, SEED, trial, None).map_err(err)?;
            seen.push((rec, adv.observed.ok_or("no output state")?));
        }
        for (rec, st) in &seen[1..] {
            let f = overlap(st.amplitudes(), seen[0].1.amplitudes());
            if *rec != seen[0].0 || f < 1.0 - TOL {
                return Err(format!("trial {trial}: variant disagrees ({rec:?}, fidelity {f})"));
            }
        }
    }
    Ok("500 trials x 2 adversaries identical; 3 variants agree on 200 seeds".into())
}

fn garden_hose_channel() -> Check {
    let g = GardenHoseSpec::minimal();
    let mut classes: [BTreeSet<(bool, bool)>; 2] = Default::default();
    for b in [false, true] {
        for seed in 0..50u64 {
            let mut rng = RngStream::derive(SEED, seed);
            let psi = StateVector::random(1, &mut rng).map_err(err)?;
            let (out, outcomes) = run_plain(&g, &psi, b, &mut rng).map_err(err)?;
            let (x, z) = g.accumulate(b, &outcomes).map_err(err)?;
            classes[b as usize].insert((x, z));
            let mut fixed = Dense::from(&out);
            // undo X^x Z^z
            if x {
                fixed.one(0, mat('X'));
            }
            if z {
                fixed.one(0, mat('Z'));
            }
            let mut want = Dense::from(&psi);
            if b {
                want.one(0, mat('P'));
            }
            let f = overlap(&fixed.amps, &want.amps);
            if f < 1.0 - TOL {
                return Err(format!("b={} seed {seed}: fidelity {f}", b as u8));
            }
        }
    }
    if classes.iter().any(|c| c.len() != 4) {
        return Err(format!("correction classes seen: {classes:?}"));
    }
    Ok("P^b exact for b=0,1 over 50 seeds; all 4 correction classes hit".into())
}

fn one_time_program() -> Check {
    let circ = and_circuit();
    for k in 0..4u64 {
        let (x, y) = (k & 2 != 0, k & 1 != 0);
        let r = qotp_demo(&circ, &[x], &[y], SEED + k).map_err(err)?;
        let want = Some(vec![(2, x & y)]);
        if r.outputs != want {
            return Err(format!("inputs {} {}: got {:?}", x as u8, y as u8, r.outputs));
        }
        if !r.second_query_refused {
            return Err("second query answered".into());
        }
    }
    Ok("AND correct on 00 01 10 11; second query refused".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("end-to-end correctness", end_to_end_correctness),
        ("weight-1 trap detection", weight_one_detection),
        ("weight-w trap detection", weight_w_detection),
        ("pauli twirl", pauli_twirl),
        ("ind-ver sanity", indver_sanity),
        ("compactness", compactness),
        ("log integrity", log_integrity),
        ("hybrid consistency", hybrid_consistency),
        ("garden-hose channel", garden_hose_channel),
        ("one-time program", one_time_program),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("PASS {:>2} {name}: {d} ({secs:.1}s)", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {e} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
