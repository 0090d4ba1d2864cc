use std::collections::HashSet;

use proptest::prelude::*;
use traptp_core::circuit::{CircuitDesc, CircuitGate};
use traptp_core::clcrypto::{ComputationLog, LogEntry, TransparentHe};
use traptp_core::codes::CssCode;
use traptp_core::qsim::{RngStream, StateVector};
use traptp_core::trapcode::BlockSystem;
use traptp_core::traptp::{self, Budgets, Variant, VqfheCiphertext};

fn honest_log(c: &CircuitDesc, budgets: Budgets, seed: u64) -> (ComputationLog, bool) {
    let mut rng = RngStream::new(seed);
    let he = TransparentHe;
    let mut sys = BlockSystem::new(CssCode::steane(1).unwrap());
    let (sk, evk, _) = traptp::keygen(&mut sys, &he, 1, budgets, &mut rng).unwrap();
    let qs = sys.quantum_mut().alloc_state(StateVector::random(c.n_qubits(), &mut rng).unwrap());
    let mut ct = VqfheCiphertext::default();
    traptp::encrypt(&sk, &he, &mut sys, &mut ct, &qs, &mut rng).unwrap();
    let (out, log) = traptp::eval(&mut sys, &he, &evk, &ct, c, &mut rng).unwrap();
    let v = traptp::verdec(&mut sys, &he, &sk, &out, &log, c, Variant::Standard, None, &mut rng).unwrap();
    (log, v.accepted)
}

/// Index from a resource label such as `T3` or `G2.in`; H gates draw on `HA` and `HB`.
fn index_of(label: &str, prefix: &str) -> Option<usize> {
    let rest = label.strip_prefix(prefix)?;
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() || !(rest.len() == digits.len() || rest[digits.len()..].starts_with('.')) {
        return None;
    }
    digits.parse().ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn resources_are_consumed_once_within_budget(seed in any::<u64>(), slack in (0usize..2, 0usize..2, 0usize..2)) {
        let mut rng = RngStream::new(seed);
        let n = 1 + rng.below(2);
        let c = CircuitDesc::random(n, 1 + rng.below(12), 2, &mut rng);
        let k = c.counts();
        let budgets = Budgets::new(k.t + slack.0, k.p + slack.1, k.h + slack.2);
        let (log, accepted) = honest_log(&c, budgets, seed);
        prop_assert!(accepted);

        let measured: Vec<&str> = log
            .entries()
            .iter()
            .filter_map(|e| if let LogEntry::Measurement { resource, .. } = e { Some(resource.as_str()) } else { None })
            .collect();
        let unique: HashSet<&str> = measured.iter().copied().collect();
        prop_assert_eq!(unique.len(), measured.len(), "a resource was measured twice: {:?}", measured);

        // a magic state is measured once its wire moves on; each wire's last carrier may
        // survive as an output
        for (prefix, used, budget) in
            [("T", k.t, budgets.t), ("P", k.p, budgets.p), ("H", k.h, budgets.h), ("G", k.t, budgets.t)]
        {
            let mut order: Vec<usize> = Vec::new();
            for r in &measured {
                let hit = if prefix == "H" { index_of(r, "HA").or_else(|| index_of(r, "HB")) } else { index_of(r, prefix) };
                if let Some(i) = hit {
                    if !order.contains(&i) {
                        order.push(i);
                    }
                }
            }
            // across wires a carrier can outlive later gates, so order is global only for one wire
            if n == 1 {
                prop_assert!(order.windows(2).all(|w| w[0] < w[1]), "{} resources used as {:?}", prefix, order);
            }
            prop_assert!(order.iter().all(|i| *i <= used && *i <= budget), "{} beyond {} gates: {:?}", prefix, used, order);
            prop_assert!(order.len() + n >= used, "{} resources skipped: {:?}", prefix, order);
            if prefix == "G" {
                let all: Vec<usize> = (1..=used).collect();
                prop_assert_eq!(&order, &all);
            }
        }
    }

    #[test]
    fn epochs_rise_only_at_t_gates(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let n = 1 + rng.below(2);
        let c = CircuitDesc::random(n, 1 + rng.below(12), 2, &mut rng);
        let k = c.counts();
        let (log, _) = honest_log(&c, Budgets::new(k.t, k.p, k.h), seed);
        let mut current = 0u32;
        let mut t_claims = 0u32;
        for e in log.entries() {
            match e {
                LogEntry::Claim { gate: CircuitGate::T(_) } => t_claims += 1,
                LogEntry::Eval { epoch, .. } | LogEntry::Recrypt { epoch, .. } => {
                    prop_assert!(*epoch >= current, "epoch fell from {} to {}", current, epoch);
                    // a rise belongs to the T gate being processed
                    prop_assert!(*epoch <= t_claims + 1 && *epoch <= k.t as u32);
                    if *epoch > current {
                        prop_assert_eq!(*epoch, current + 1);
                    }
                    current = *epoch;
                }
                _ => {}
            }
        }
        prop_assert_eq!(current as usize, k.t);
    }
}

