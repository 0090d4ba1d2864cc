//! Uniform interface over the schemes the games run against.

use super::GameError;
use crate::circuit::{CircuitDesc, WireOutputs};
use crate::clcrypto::{ComputationLog, LogEntry, TransparentHe};
use crate::codes::CssCode;
use crate::qsim::{QubitId, RngStream};
use crate::trapcode::{BlockId, BlockSystem, TrapCiphertext, TrapCode, TrapKey};
use crate::traptp::{self, Budgets, EvalKey, SecretKey, SideInfo, Variant, VqfheCiphertext};

/// Result of verified decryption as seen by a game.
#[derive(Clone, Debug, PartialEq)]
pub struct Decrypted {
    pub accepted: bool,
    pub outputs: WireOutputs,
    pub ver_steps: u64,
    pub dec_ops: u64,
}

/// KeyGen, Enc, Eval and VerDec with logs crossing the adversary boundary as bytes.
pub trait VqfheScheme {
    type SecretKey;
    type EvalKey;
    type Ciphertext: Clone + Default;

    fn name(&self) -> String;
    fn code(&self) -> CssCode;
    fn keygen(&self, sys: &mut BlockSystem, rng: &mut RngStream)
        -> Result<(Self::SecretKey, Self::EvalKey, SideInfo), GameError>;
    /// Appends slots for `qubits` to `ct`.
    fn encrypt(
        &self,
        sys: &mut BlockSystem,
        sk: &Self::SecretKey,
        ct: &mut Self::Ciphertext,
        qubits: &[QubitId],
        rng: &mut RngStream,
    ) -> Result<SideInfo, GameError>;
    fn eval(
        &self,
        sys: &mut BlockSystem,
        evk: &Self::EvalKey,
        ct: &Self::Ciphertext,
        c: &CircuitDesc,
        rng: &mut RngStream,
    ) -> Result<(Self::Ciphertext, Vec<u8>), GameError>;
    /// `side` carries the extra KeyGen/Enc channels of the hybrid game; schemes that
    /// do not use them ignore it.
    #[allow(clippy::too_many_arguments)]
    fn verdec(
        &self,
        sys: &mut BlockSystem,
        sk: &Self::SecretKey,
        ct: &Self::Ciphertext,
        log: &[u8],
        c: &CircuitDesc,
        side: Option<&SideInfo>,
        rng: &mut RngStream,
    ) -> Result<Decrypted, GameError>;
    /// Blocks of the still-quantum slots.
    fn blocks(&self, ct: &Self::Ciphertext) -> Vec<BlockId>;
    /// A copy of `log` with one signed record altered but its tag kept, if the log
    /// has any signed records.
    fn forge_signed(&self, log: &[u8], rng: &mut RngStream) -> Option<Vec<u8>>;
}

/// The full scheme with the transparent HE backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrapTpScheme {
    pub level: u8,
    pub budgets: Budgets,
    pub variant: Variant,
}

impl TrapTpScheme {
    pub fn new(level: u8, budgets: Budgets) -> Self {
        TrapTpScheme { level, budgets, variant: Variant::Standard }
    }

    pub fn with_variant(self, variant: Variant) -> Self {
        TrapTpScheme { variant, ..self }
    }
}

impl VqfheScheme for TrapTpScheme {
    type SecretKey = SecretKey;
    type EvalKey = EvalKey;
    type Ciphertext = VqfheCiphertext;

    fn name(&self) -> String {
        match self.variant {
            Variant::Standard => "traptp".into(),
            Variant::SideChannel => "traptp-side".into(),
            Variant::PlaintextShadow => "traptp-shadow".into(),
        }
    }

    fn code(&self) -> CssCode {
        CssCode::steane(self.level as usize).expect("level validated by the caller")
    }

    fn keygen(&self, sys: &mut BlockSystem, rng: &mut RngStream) -> Result<(SecretKey, EvalKey, SideInfo), GameError> {
        Ok(traptp::keygen(sys, &TransparentHe, self.level, self.budgets, rng)?)
    }

    fn encrypt(
        &self,
        sys: &mut BlockSystem,
        sk: &SecretKey,
        ct: &mut VqfheCiphertext,
        qubits: &[QubitId],
        rng: &mut RngStream,
    ) -> Result<SideInfo, GameError> {
        Ok(traptp::encrypt(sk, &TransparentHe, sys, ct, qubits, rng)?)
    }

    fn eval(
        &self,
        sys: &mut BlockSystem,
        evk: &EvalKey,
        ct: &VqfheCiphertext,
        c: &CircuitDesc,
        rng: &mut RngStream,
    ) -> Result<(VqfheCiphertext, Vec<u8>), GameError> {
        let (ct, log) = traptp::eval(sys, &TransparentHe, evk, ct, c, rng)?;
        Ok((ct, log.to_bytes()))
    }

    fn verdec(
        &self,
        sys: &mut BlockSystem,
        sk: &SecretKey,
        ct: &VqfheCiphertext,
        log: &[u8],
        c: &CircuitDesc,
        side: Option<&SideInfo>,
        rng: &mut RngStream,
    ) -> Result<Decrypted, GameError> {
        let variant = if side.is_some() { self.variant } else { Variant::Standard };
        let log = ComputationLog::from_bytes(log).unwrap_or_else(|_| {
            // undecodable logs are rejected like any other malformed log
            ComputationLog::from_entries(vec![LogEntry::Final { keys: Vec::new() }])
        });
        let v = traptp::verdec(sys, &TransparentHe, sk, ct, &log, c, variant, side, rng)?;
        Ok(Decrypted { accepted: v.accepted, outputs: v.outputs, ver_steps: v.ver_steps, dec_ops: v.dec_ops })
    }

    fn blocks(&self, ct: &VqfheCiphertext) -> Vec<BlockId> {
        ct.blocks.iter().flatten().copied().collect()
    }

    fn forge_signed(&self, log: &[u8], rng: &mut RngStream) -> Option<Vec<u8>> {
        let mut log = ComputationLog::from_bytes(log).ok()?;
        let signed: Vec<usize> =
            log.entries().iter().enumerate().filter(|(_, e)| matches!(e, LogEntry::Signed(_))).map(|(i, _)| i).collect();
        if signed.is_empty() {
            return None;
        }
        let at = signed[rng.below(signed.len())];
        let LogEntry::Signed(s) = &mut log.entries_mut()[at] else { unreachable!() };
        let c = s.ciphertexts.first_mut()?;
        let last = c.payload.len().checked_sub(1)?;
        c.payload[last] ^= 1;
        Some(log.to_bytes())
    }
}

/// The trap code alone: Pauli, CNOT and measurement circuits, no logs.
#[derive(Clone, Debug)]
pub struct TrapCodeScheme {
    pub level: u8,
    /// Slots the key covers.
    pub max_slots: usize,
}

impl TrapCodeScheme {
    pub fn new(level: u8, max_slots: usize) -> Self {
        TrapCodeScheme { level, max_slots }
    }

    fn tc(&self) -> TrapCode {
        TrapCode::new(self.code())
    }
}

impl VqfheScheme for TrapCodeScheme {
    type SecretKey = TrapKey;
    type EvalKey = ();
    type Ciphertext = TrapCiphertext;

    fn name(&self) -> String {
        "trapcode".into()
    }

    fn code(&self) -> CssCode {
        CssCode::steane(self.level as usize).expect("level validated by the caller")
    }

    fn keygen(&self, _sys: &mut BlockSystem, rng: &mut RngStream) -> Result<(TrapKey, (), SideInfo), GameError> {
        Ok((self.tc().keygen(self.max_slots, rng), (), SideInfo::default()))
    }

    fn encrypt(
        &self,
        sys: &mut BlockSystem,
        sk: &TrapKey,
        ct: &mut TrapCiphertext,
        qubits: &[QubitId],
        _rng: &mut RngStream,
    ) -> Result<SideInfo, GameError> {
        self.tc().encrypt_all(sys, sk, ct, qubits)?;
        Ok(SideInfo::default())
    }

    fn eval(
        &self,
        sys: &mut BlockSystem,
        _evk: &(),
        ct: &TrapCiphertext,
        c: &CircuitDesc,
        rng: &mut RngStream,
    ) -> Result<(TrapCiphertext, Vec<u8>), GameError> {
        let mut out = ct.clone();
        self.tc().eval(sys, &mut out, c, rng)?;
        Ok((out, Vec::new()))
    }

    fn verdec(
        &self,
        sys: &mut BlockSystem,
        sk: &TrapKey,
        ct: &TrapCiphertext,
        _log: &[u8],
        c: &CircuitDesc,
        _side: Option<&SideInfo>,
        rng: &mut RngStream,
    ) -> Result<Decrypted, GameError> {
        let before = sys.op_count();
        let d = self.tc().verdec(sys, sk, ct, c, rng)?;
        Ok(Decrypted { accepted: d.accepted, outputs: d.outputs, ver_steps: 0, dec_ops: sys.op_count() - before })
    }

    fn blocks(&self, ct: &TrapCiphertext) -> Vec<BlockId> {
        ct.quantum_blocks()
    }

    fn forge_signed(&self, _log: &[u8], _rng: &mut RngStream) -> Option<Vec<u8>> {
        None
    }
}
