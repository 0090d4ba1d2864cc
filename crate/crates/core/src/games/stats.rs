//! Per-trial records, aggregate rates and Wilson score intervals.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u64,
    pub r: bool,
    pub r_prime: bool,
    pub accept: bool,
    pub detected: bool,
}

impl TrialRecord {
    pub fn win(&self) -> bool {
        self.r == self.r_prime
    }
}

/// 95% score interval for a binomial rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        (self.hi - self.lo) / 2.0
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

pub fn wilson(successes: u64, n: u64) -> Interval {
    if n == 0 {
        return Interval { estimate: 0.0, lo: 0.0, hi: 1.0 };
    }
    let z = 1.959_963_984_540_054_f64;
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let center = (p + z * z / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    Interval { estimate: p, lo: (center - half).max(0.0), hi: (center + half).min(1.0) }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub scheme: String,
    pub adversary: String,
    pub game: String,
    pub records: Vec<TrialRecord>,
}

impl TrialStats {
    pub fn new(scheme: impl Into<String>, adversary: impl Into<String>, game: impl Into<String>) -> Self {
        TrialStats { scheme: scheme.into(), adversary: adversary.into(), game: game.into(), records: Vec::new() }
    }

    pub fn trials(&self) -> u64 {
        self.records.len() as u64
    }

    fn count(&self, f: impl Fn(&TrialRecord) -> bool) -> u64 {
        self.records.iter().filter(|r| f(r)).count() as u64
    }

    pub fn wins(&self) -> u64 {
        self.count(TrialRecord::win)
    }

    pub fn accepts(&self) -> u64 {
        self.count(|r| r.accept)
    }

    pub fn detections(&self) -> u64 {
        self.count(|r| r.detected)
    }

    pub fn win_rate(&self) -> Interval {
        wilson(self.wins(), self.trials())
    }

    pub fn accept_rate(&self) -> Interval {
        wilson(self.accepts(), self.trials())
    }

    pub fn reject_rate(&self) -> Interval {
        wilson(self.trials() - self.accepts(), self.trials())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,r,r_prime,accept,detected\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{},{}", r.trial, r.r as u8, r.r_prime as u8, r.accept as u8, r.detected as u8);
        }
        s
    }

    pub fn summary(&self) -> String {
        let line = |name: &str, i: Interval| format!("{name}: {:.4} [{:.4}, {:.4}]\n", i.estimate, i.lo, i.hi);
        let mut s = format!("game {} scheme {} adversary {} trials {}\n", self.game, self.scheme, self.adversary, self.trials());
        s += &line("win rate", self.win_rate());
        s += &line("accept rate", self.accept_rate());
        s += &line("detection rate", wilson(self.detections(), self.trials()));
        s
    }
}
