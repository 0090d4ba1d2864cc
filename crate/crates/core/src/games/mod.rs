//! Security-game harness: indistinguishable verification in one and two rounds, the
//! hybrid game with side channels from KeyGen and Enc to VerDec, pluggable staged
//! adversaries, trial statistics and a one-time-program demo.

mod adversary;
mod correctness;
mod qotp;
mod scheme;
mod stats;

use thiserror::Error;

use crate::circuit::{apply_ideal, CircuitDesc, CircuitError, Outcomes, WireOutputs};
use crate::qsim::{QsimError, QubitId, RngStream};
use crate::trapcode::{BlockSystem, TrapError};
use crate::traptp::{SideInfo, TrapTpError};

pub use adversary::{adversary_by_name, builtin_adversaries, Guess, Honest, LogTamper, MacForgery, PauliAttack, WrongCircuit, ADVERSARY_NAMES};
pub use correctness::{correctness_trial, honest_run, CorrectnessRecord};
pub use qotp::{and_circuit, qotp_demo, qotp_prepare, receiver_circuit, OneTimeToken, QotpBundle, QotpReport};
pub use scheme::{Decrypted, TrapCodeScheme, TrapTpScheme, VqfheScheme};
pub use stats::{wilson, Interval, TrialRecord, TrialStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("adversary: {0}")]
    Adversary(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("unknown adversary {0:?}")]
    UnknownAdversary(String),
    #[error("one-time token already used")]
    TokenConsumed,
    #[error(transparent)]
    Scheme(#[from] TrapTpError),
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Sim(#[from] QsimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// What the adversary hands back after evaluation: a ciphertext, the circuit it claims
/// to have applied and the log.
pub struct Attack<C> {
    pub ct: C,
    pub circuit: CircuitDesc,
    pub log: Vec<u8>,
}

/// A staged adversary. Each stage runs once per trial, in order: `choose` (A1, or A0
/// in the two-round game), `choose_again` (A1 of the two-round game), `attack` (A2),
/// `guess` (A3).
pub trait Adversary<S: VqfheScheme> {
    fn name(&self) -> String;

    /// Plaintext qubits to encrypt, allocated in `sys`.
    fn choose(&mut self, sys: &mut BlockSystem, evk: &S::EvalKey, rng: &mut RngStream)
        -> Result<Vec<QubitId>, GameError>;

    /// Second-round plaintext, chosen after seeing the first-round ciphertext.
    fn choose_again(
        &mut self,
        _scheme: &S,
        _sys: &mut BlockSystem,
        _ct: &S::Ciphertext,
        _rng: &mut RngStream,
    ) -> Result<Vec<QubitId>, GameError> {
        Ok(Vec::new())
    }

    fn attack(
        &mut self,
        scheme: &S,
        sys: &mut BlockSystem,
        evk: &S::EvalKey,
        ct: S::Ciphertext,
        rng: &mut RngStream,
    ) -> Result<Attack<S::Ciphertext>, GameError>;

    /// Guess for the coin; receives the (possibly swapped-back) outputs and the flag.
    fn guess(&mut self, sys: &mut BlockSystem, outputs: &WireOutputs, accepted: bool, rng: &mut RngStream)
        -> Result<bool, GameError>;

    /// Whether this adversary deviates from honest evaluation.
    fn tampers(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameKind {
    IndVer,
    IndVer2,
    /// IND-VER with the KeyGen and Enc side channels wired to VerDec.
    Hybrid,
}

impl GameKind {
    pub fn name(self) -> &'static str {
        match self {
            GameKind::IndVer => "indver",
            GameKind::IndVer2 => "indver2",
            GameKind::Hybrid => "hybrid",
        }
    }
}

/// One trial on its own stream `RngStream::derive(seed, trial)`. `forced_r` pins the
/// coin, which otherwise is the stream's first bit.
pub fn run_trial<S: VqfheScheme, A: Adversary<S> + ?Sized>(
    scheme: &S,
    adv: &mut A,
    kind: GameKind,
    seed: u64,
    trial: u64,
    forced_r: Option<bool>,
) -> Result<TrialRecord, GameError> {
    let mut rng = RngStream::derive(seed, trial);
    let coin = rng.bit();
    let r = forced_r.unwrap_or(coin);
    let mut sys = BlockSystem::new(scheme.code());
    let (sk, evk, mut side) = scheme.keygen(&mut sys, &mut rng)?;

    let mut ct = S::Ciphertext::default();
    let mut withheld: Vec<QubitId> = Vec::new();
    let mut round = |sys: &mut BlockSystem,
                     ct: &mut S::Ciphertext,
                     plain: Vec<QubitId>,
                     side: &mut SideInfo,
                     rng: &mut RngStream|
     -> Result<(), GameError> {
        let input = if r {
            let zeros = (0..plain.len()).map(|_| sys.quantum_mut().alloc('0')).collect::<Result<Vec<_>, _>>()?;
            withheld.extend(plain);
            zeros
        } else {
            plain
        };
        side.merge(scheme.encrypt(sys, &sk, ct, &input, rng)?);
        Ok(())
    };

    let first = adv.choose(&mut sys, &evk, &mut rng)?;
    round(&mut sys, &mut ct, first, &mut side, &mut rng)?;
    if kind == GameKind::IndVer2 {
        let second = adv.choose_again(scheme, &mut sys, &ct, &mut rng)?;
        round(&mut sys, &mut ct, second, &mut side, &mut rng)?;
    }

    let attack = adv.attack(scheme, &mut sys, &evk, ct, &mut rng)?;
    let channel = if kind == GameKind::Hybrid { Some(&side) } else { None };
    let dec = scheme.verdec(&mut sys, &sk, &attack.ct, &attack.log, &attack.circuit, channel, &mut rng)?;

    let outputs = if r {
        if dec.accepted {
            // swap back: the adversary's real plaintext goes through the ideal channel
            for (_, q) in &dec.outputs.quantum {
                sys.quantum_mut().discard(*q, &mut rng)?;
            }
            let c = &attack.circuit;
            if c.n_qubits() > withheld.len() {
                return Err(GameError::Adversary("claimed circuit is wider than the plaintext".into()));
            }
            for q in withheld.drain(c.n_qubits()..) {
                sys.quantum_mut().discard(q, &mut rng)?;
            }
            let mut discard_rng = rng.split();
            apply_ideal(sys.quantum_mut(), &withheld, c, Outcomes::Sample(&mut rng), &mut discard_rng)?
        } else {
            for q in withheld.drain(..) {
                sys.quantum_mut().discard(q, &mut rng)?;
            }
            dec.outputs
        }
    } else {
        dec.outputs
    };
    let guess = adv.guess(&mut sys, &outputs, dec.accepted, &mut rng)?;
    Ok(TrialRecord { trial, r, r_prime: guess, accept: dec.accepted, detected: adv.tampers() && !dec.accepted })
}

fn run_game<S: VqfheScheme, A: Adversary<S> + ?Sized>(
    scheme: &S,
    adv: &mut A,
    kind: GameKind,
    trials: u64,
    seed: u64,
) -> Result<TrialStats, GameError> {
    let mut stats = TrialStats::new(scheme.name(), adv.name(), kind.name());
    for t in 0..trials {
        stats.records.push(run_trial(scheme, adv, kind, seed, t, None)?);
    }
    Ok(stats)
}

/// Single-round indistinguishable verification.
pub fn run_indver<S: VqfheScheme, A: Adversary<S> + ?Sized>(
    scheme: &S,
    adv: &mut A,
    trials: u64,
    seed: u64,
) -> Result<TrialStats, GameError> {
    run_game(scheme, adv, GameKind::IndVer, trials, seed)
}

/// Two encryption rounds under one coin.
pub fn run_indver2<S: VqfheScheme, A: Adversary<S> + ?Sized>(
    scheme: &S,
    adv: &mut A,
    trials: u64,
    seed: u64,
) -> Result<TrialStats, GameError> {
    run_game(scheme, adv, GameKind::IndVer2, trials, seed)
}

/// The hybrid game; the scheme's variant decides whether the side channels are used.
pub fn run_hybrid<S: VqfheScheme, A: Adversary<S> + ?Sized>(
    scheme: &S,
    adv: &mut A,
    trials: u64,
    seed: u64,
) -> Result<TrialStats, GameError> {
    run_game(scheme, adv, GameKind::Hybrid, trials, seed)
}

#[cfg(test)]
mod tests;
