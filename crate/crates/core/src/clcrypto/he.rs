//! Classical homomorphic encryption behind a backend trait, with the function registry
//! the scheme evaluates.
//!
//! [`TransparentHe`] is the reference backend. Its ciphertexts carry the plaintext in
//! the clear next to a key fingerprint and a nonce; it honors epochs, key separation,
//! recryption and evaluation exactly, and offers no secrecy whatsoever.

use std::fmt;

use super::codec::{CodecError, Reader, Writer};
use super::HeError;
use crate::bits::{Bits, Permutation, PERM_ENTRY_BITS};
use crate::codes::CssCode;
use crate::gardenhose::{BellOutcome, GardenHoseSpec};
use crate::qsim::{Basis, RngStream};
use crate::trapcode::{cnot_pad_update, logical_mask, verdec_measurement};

/// Bits of secret-key material a backend exposes for recryption and gadget descriptions.
pub const SK_BITS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeCiphertext {
    pub backend: u8,
    pub epoch: u32,
    pub payload: Vec<u8>,
}

impl HeCiphertext {
    pub fn encode_into(&self, w: &mut Writer) {
        w.u8(self.backend).u32(self.epoch).bytes(&self.payload);
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(HeCiphertext { backend: r.u8()?, epoch: r.u32()?, payload: r.bytes()? })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_into(&mut w);
        w.finish()
    }

    /// 64-bit digest of the canonical encoding.
    pub fn digest(&self) -> u64 {
        super::codec::fnv1a64(&self.to_bytes())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeSecretKey {
    pub epoch: u32,
    pub key: u64,
}

impl HeSecretKey {
    pub fn to_bits(&self) -> Bits {
        Bits::from_u64(self.key, SK_BITS)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HePublicKey {
    pub epoch: u32,
    pub key: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeEvalKey {
    pub epoch: u32,
    pub key: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeKeyPair {
    pub sk: HeSecretKey,
    pub pk: HePublicKey,
    pub evk: HeEvalKey,
}

/// Key sets for epochs `0..=t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeKeySet {
    pub pairs: Vec<HeKeyPair>,
}

impl HeKeySet {
    pub fn generate(backend: &dyn HeBackend, t: i64, rng: &mut RngStream) -> Result<Self, HeError> {
        if t < 0 {
            return Err(HeError::NegativeEpochs(t));
        }
        Ok(HeKeySet { pairs: (0..=t as u32).map(|i| backend.keygen(i, rng)).collect() })
    }

    pub fn epochs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair(&self, epoch: u32) -> Result<&HeKeyPair, HeError> {
        self.pairs.get(epoch as usize).ok_or(HeError::NoSuchEpoch(epoch))
    }

    pub fn public(&self) -> PublicKeys {
        PublicKeys { pk: self.pairs.iter().map(|p| p.pk).collect(), evk: self.pairs.iter().map(|p| p.evk).collect() }
    }
}

/// Public and evaluation keys of every epoch, as handed to the evaluator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKeys {
    pub pk: Vec<HePublicKey>,
    pub evk: Vec<HeEvalKey>,
}

impl PublicKeys {
    pub fn pk(&self, epoch: u32) -> Result<&HePublicKey, HeError> {
        self.pk.get(epoch as usize).ok_or(HeError::NoSuchEpoch(epoch))
    }

    pub fn evk(&self, epoch: u32) -> Result<&HeEvalKey, HeError> {
        self.evk.get(epoch as usize).ok_or(HeError::NoSuchEpoch(epoch))
    }

    pub fn encode_into(&self, w: &mut Writer) {
        w.len(self.pk.len());
        for (p, e) in self.pk.iter().zip(&self.evk) {
            w.u32(p.epoch).u64(p.key).u32(e.epoch).u64(e.key);
        }
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let n = r.len()?;
        let mut out = PublicKeys { pk: Vec::new(), evk: Vec::new() };
        for _ in 0..n {
            out.pk.push(HePublicKey { epoch: r.u32()?, key: r.u64()? });
            out.evk.push(HeEvalKey { epoch: r.u32()?, key: r.u64()? });
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_into(&mut w);
        w.finish()
    }
}

/// Functions the evaluator may apply homomorphically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HeFunction {
    /// `[a, b] -> [a ^ b]`
    Xor,
    /// `[a] -> [a ^ mask]`
    FlipMask { mask: Bits },
    /// `[pi, a] -> [permute_pi(a)]`
    Permute,
    /// `[pi, a] -> [unpermute_pi(a)]`
    Unpermute,
    /// `[x_c, z_c, x_t, z_t] -> [x_c, z_c ^ z_t, x_c ^ x_t, z_t]`
    CnotKeyUpdate,
    /// `[x_out, z_out, pi, gadget, bell bits..., b] -> [x_out', z_out']`; `b` sits one
    /// epoch behind and is opened with the key material inside `gadget`.
    TKeyUpdate,
    /// `[pi source, x, z, record, basis] -> [bit, accept]`; the permutation is read from
    /// the pi source starting at `pi_offset`.
    VerDecMeasurement { level: u8, pi_offset: u32 },
    /// `[b] -> [b^m 0^2m]`
    ExpandBit { m: u32 },
}

impl HeFunction {
    pub fn id(&self) -> &'static str {
        match self {
            HeFunction::Xor => "xor",
            HeFunction::FlipMask { .. } => "flip-mask",
            HeFunction::Permute => "permute",
            HeFunction::Unpermute => "unpermute",
            HeFunction::CnotKeyUpdate => "cnot-key-update",
            HeFunction::TKeyUpdate => "t-key-update",
            HeFunction::VerDecMeasurement { .. } => "verdec-measurement",
            HeFunction::ExpandBit { .. } => "expand-bit",
        }
    }

    pub fn output_count(&self) -> usize {
        match self {
            HeFunction::CnotKeyUpdate => 4,
            HeFunction::TKeyUpdate | HeFunction::VerDecMeasurement { .. } => 2,
            _ => 1,
        }
    }

    pub fn input_count(&self) -> Option<usize> {
        match self {
            HeFunction::Xor | HeFunction::Permute | HeFunction::Unpermute => Some(2),
            HeFunction::FlipMask { .. } | HeFunction::ExpandBit { .. } => Some(1),
            HeFunction::CnotKeyUpdate => Some(4),
            HeFunction::VerDecMeasurement { .. } => Some(5),
            HeFunction::TKeyUpdate => None,
        }
    }

    pub fn encode_into(&self, w: &mut Writer) {
        match self {
            HeFunction::Xor => {
                w.u8(0);
            }
            HeFunction::FlipMask { mask } => {
                w.u8(1).bits(mask);
            }
            HeFunction::Permute => {
                w.u8(2);
            }
            HeFunction::Unpermute => {
                w.u8(3);
            }
            HeFunction::CnotKeyUpdate => {
                w.u8(4);
            }
            HeFunction::TKeyUpdate => {
                w.u8(5);
            }
            HeFunction::VerDecMeasurement { level, pi_offset } => {
                w.u8(6).u8(*level).u32(*pi_offset);
            }
            HeFunction::ExpandBit { m } => {
                w.u8(7).u32(*m);
            }
        }
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        Ok(match r.u8()? {
            0 => HeFunction::Xor,
            1 => HeFunction::FlipMask { mask: r.bits()? },
            2 => HeFunction::Permute,
            3 => HeFunction::Unpermute,
            4 => HeFunction::CnotKeyUpdate,
            5 => HeFunction::TKeyUpdate,
            6 => HeFunction::VerDecMeasurement { level: r.u8()?, pi_offset: r.u32()? },
            7 => HeFunction::ExpandBit { m: r.u32()? },
            _ => return r.invalid("function tag"),
        })
    }

    /// The function on plaintexts.
    pub fn apply_plain(&self, inputs: &[Bits]) -> Result<Vec<Bits>, HeError> {
        if let Some(n) = self.input_count() {
            if inputs.len() != n {
                return Err(HeError::Arity { function: self.id(), expected: n, got: inputs.len() });
            }
        }
        let one_bit = |b: &Bits| -> Result<bool, HeError> {
            if b.len() != 1 {
                return Err(HeError::Malformed(format!("{}: expected a single bit", self.id())));
            }
            Ok(b.get(0))
        };
        let perm = |b: &Bits| Permutation::from_bits(b).map_err(HeError::from);
        Ok(match self {
            HeFunction::Xor => vec![inputs[0].xor(&inputs[1])?],
            HeFunction::FlipMask { mask } => vec![inputs[0].xor(mask)?],
            HeFunction::Permute => vec![perm(&inputs[0])?.permute(&inputs[1])?],
            HeFunction::Unpermute => vec![perm(&inputs[0])?.unpermute(&inputs[1])?],
            HeFunction::CnotKeyUpdate => {
                let ((xc, xt), (zc, zt)) = cnot_pad_update(&inputs[0], &inputs[1], &inputs[2], &inputs[3])?;
                vec![xc, zc, xt, zt]
            }
            HeFunction::TKeyUpdate => {
                let spec = GardenHoseSpec::minimal();
                let want = 5 + 2 * spec.outcome_count();
                if inputs.len() != want {
                    return Err(HeError::Arity { function: self.id(), expected: want, got: inputs.len() });
                }
                let pi = perm(&inputs[2])?;
                let mut outcomes = Vec::new();
                for k in 0..spec.outcome_count() {
                    // each Bell measurement contributes (X-measured half, Z-measured half)
                    let z = one_bit(&inputs[4 + 2 * k])?;
                    let x = one_bit(&inputs[5 + 2 * k])?;
                    outcomes.push(BellOutcome { x, z });
                }
                let b = one_bit(&inputs[want - 1])?;
                let (ax, az) = spec.accumulate(b, &outcomes).map_err(|e| HeError::Malformed(e.to_string()))?;
                let mask = logical_mask(&pi, pi.len() / 3)?;
                let mut x = inputs[0].clone();
                let mut z = inputs[1].clone();
                if ax {
                    x.xor_assign(&mask)?;
                }
                if az {
                    z.xor_assign(&mask)?;
                }
                vec![x, z]
            }
            HeFunction::VerDecMeasurement { level, pi_offset } => {
                let code = CssCode::steane(*level as usize).map_err(|e| HeError::Malformed(e.to_string()))?;
                let len = 3 * code.m();
                let start = *pi_offset as usize;
                let end = start + len * PERM_ENTRY_BITS;
                if inputs[0].len() < end {
                    return Err(HeError::Malformed("permutation source too short".into()));
                }
                let pi = perm(&inputs[0].slice(start, end))?;
                let basis = if one_bit(&inputs[4])? { Basis::X } else { Basis::Z };
                let v = verdec_measurement(&code, &pi, &inputs[1], &inputs[2], &inputs[3], basis)
                    .map_err(|e| HeError::Malformed(e.to_string()))?;
                vec![Bits::from_bools(vec![v.bit]), Bits::from_bools(vec![v.accepted])]
            }
            HeFunction::ExpandBit { m } => {
                let b = one_bit(&inputs[0])?;
                vec![Bits::expand_bit(b, *m as usize, 2 * *m as usize)]
            }
        })
    }
}

impl fmt::Display for HeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Capability interface of a classical HE backend.
pub trait HeBackend {
    fn tag(&self) -> u8;
    fn name(&self) -> &'static str;
    fn keygen(&self, epoch: u32, rng: &mut RngStream) -> HeKeyPair;
    fn enc(&self, pk: &HePublicKey, bits: &Bits, nonce: u64) -> HeCiphertext;
    fn dec(&self, sk: &HeSecretKey, ct: &HeCiphertext) -> Result<Bits, HeError>;
    fn eval(
        &self,
        evk: &HeEvalKey,
        f: &HeFunction,
        inputs: &[&HeCiphertext],
        nonces: &[u64],
    ) -> Result<Vec<HeCiphertext>, HeError>;
    /// Moves `ct` from epoch `evk.epoch - 1` to `evk.epoch`. `material` is an encryption
    /// under the new epoch whose first [`SK_BITS`] bits are the previous secret key.
    fn recrypt(&self, evk: &HeEvalKey, material: &HeCiphertext, ct: &HeCiphertext, nonce: u64)
        -> Result<HeCiphertext, HeError>;
    /// Routing table for this backend's decryption, if it has one.
    fn garden_hose(&self) -> Option<GardenHoseSpec>;
    /// The routing choice a ciphertext of one bit dictates.
    fn route_bit(&self, ct: &HeCiphertext) -> Result<bool, HeError>;
}

/// Reference backend; see the module docs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TransparentHe;

impl TransparentHe {
    pub const TAG: u8 = 1;

    fn open(&self, ct: &HeCiphertext) -> Result<(u64, Bits), HeError> {
        if ct.backend != Self::TAG {
            return Err(HeError::Backend(ct.backend));
        }
        let mut r = Reader::new(&ct.payload);
        let key = r.u64()?;
        let _nonce = r.u64()?;
        let n = r.u32()? as usize;
        let at = r.pos();
        let raw = r.take(n.div_ceil(8))?;
        let bits = Bits::from_bytes(raw, n).ok_or(CodecError::Invalid { what: "bit padding", at })?;
        r.finish()?;
        Ok((key, bits))
    }

    fn seal(&self, epoch: u32, key: u64, bits: &Bits, nonce: u64) -> HeCiphertext {
        let mut w = Writer::new();
        w.u64(key).u64(nonce).u32(bits.len() as u32).raw(&bits.to_bytes());
        HeCiphertext { backend: Self::TAG, epoch, payload: w.finish() }
    }

    fn open_at(&self, ct: &HeCiphertext, epoch: u32, key: u64) -> Result<Bits, HeError> {
        if ct.epoch != epoch {
            return Err(HeError::EpochMismatch { expected: epoch, got: ct.epoch });
        }
        let (k, bits) = self.open(ct)?;
        if k != key {
            return Err(HeError::WrongKey);
        }
        Ok(bits)
    }
}

impl HeBackend for TransparentHe {
    fn tag(&self) -> u8 {
        Self::TAG
    }

    fn name(&self) -> &'static str {
        "transparent"
    }

    fn keygen(&self, epoch: u32, rng: &mut RngStream) -> HeKeyPair {
        let key = rand::RngCore::next_u64(rng);
        HeKeyPair {
            sk: HeSecretKey { epoch, key },
            pk: HePublicKey { epoch, key },
            evk: HeEvalKey { epoch, key },
        }
    }

    fn enc(&self, pk: &HePublicKey, bits: &Bits, nonce: u64) -> HeCiphertext {
        self.seal(pk.epoch, pk.key, bits, nonce)
    }

    fn dec(&self, sk: &HeSecretKey, ct: &HeCiphertext) -> Result<Bits, HeError> {
        self.open_at(ct, sk.epoch, sk.key)
    }

    fn eval(
        &self,
        evk: &HeEvalKey,
        f: &HeFunction,
        inputs: &[&HeCiphertext],
        nonces: &[u64],
    ) -> Result<Vec<HeCiphertext>, HeError> {
        if nonces.len() != f.output_count() {
            return Err(HeError::Arity { function: f.id(), expected: f.output_count(), got: nonces.len() });
        }
        let mut plain = Vec::with_capacity(inputs.len());
        for (k, ct) in inputs.iter().enumerate() {
            let lagging = matches!(f, HeFunction::TKeyUpdate) && k + 1 == inputs.len() && k > 3;
            if lagging {
                let prev = evk.epoch.checked_sub(1).ok_or(HeError::NoSuchEpoch(0))?;
                let gadget = plain.get(3).ok_or(HeError::Malformed("gadget input missing".into()))?;
                let sk_prev = crate::bits::Bits::slice(gadget, 0, SK_BITS.min(gadget.len())).to_u64();
                plain.push(self.open_at(ct, prev, sk_prev)?);
            } else {
                plain.push(self.open_at(ct, evk.epoch, evk.key)?);
            }
        }
        let out = f.apply_plain(&plain)?;
        Ok(out.iter().zip(nonces).map(|(b, n)| self.seal(evk.epoch, evk.key, b, *n)).collect())
    }

    fn recrypt(
        &self,
        evk: &HeEvalKey,
        material: &HeCiphertext,
        ct: &HeCiphertext,
        nonce: u64,
    ) -> Result<HeCiphertext, HeError> {
        let prev = evk.epoch.checked_sub(1).ok_or(HeError::NoSuchEpoch(0))?;
        if ct.epoch != prev {
            return Err(HeError::EpochMismatch { expected: prev, got: ct.epoch });
        }
        let m = self.open_at(material, evk.epoch, evk.key)?;
        if m.len() < SK_BITS {
            return Err(HeError::Malformed("recryption material too short".into()));
        }
        let bits = self.open_at(ct, prev, m.slice(0, SK_BITS).to_u64())?;
        Ok(self.seal(evk.epoch, evk.key, &bits, nonce))
    }

    fn garden_hose(&self) -> Option<GardenHoseSpec> {
        Some(GardenHoseSpec::minimal())
    }

    fn route_bit(&self, ct: &HeCiphertext) -> Result<bool, HeError> {
        let (_, bits) = self.open(ct)?;
        if bits.len() != 1 {
            return Err(HeError::Malformed("route ciphertext is not one bit".into()));
        }
        Ok(bits.get(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(t: i64, seed: u64) -> HeKeySet {
        HeKeySet::generate(&TransparentHe, t, &mut RngStream::new(seed)).unwrap()
    }

    #[test]
    fn roundtrips_and_degenerate_inputs() {
        let he = TransparentHe;
        let k = keys(0, 1);
        assert_eq!(k.epochs(), 1);
        let p = k.pair(0).unwrap();
        for s in ["1011", "0", ""] {
            let b = Bits::parse(s).unwrap();
            assert_eq!(he.dec(&p.sk, &he.enc(&p.pk, &b, 5)).unwrap(), b);
        }
        let b = Bits::parse("0").unwrap();
        assert_ne!(he.enc(&p.pk, &b, 1).payload, he.enc(&p.pk, &b, 2).payload);
        assert_eq!(keys(2, 9), keys(2, 9));
        assert!(matches!(
            HeKeySet::generate(&he, -1, &mut RngStream::new(0)),
            Err(HeError::NegativeEpochs(-1))
        ));
    }

    #[test]
    fn xor_and_permutation_roundtrip() {
        let he = TransparentHe;
        let k = keys(0, 2);
        let p = k.pair(0).unwrap();
        let one = he.enc(&p.pk, &Bits::parse("1").unwrap(), 1);
        let out = he.eval(&p.evk, &HeFunction::Xor, &[&one, &one], &[3]).unwrap();
        assert_eq!(he.dec(&p.sk, &out[0]).unwrap(), Bits::parse("0").unwrap());

        let mut rng = RngStream::new(3);
        for _ in 0..50 {
            let pi = Permutation::random(21, &mut rng);
            let a = Bits::random(21, &mut rng);
            let cpi = he.enc(&p.pk, &pi.to_bits(), 1);
            let ca = he.enc(&p.pk, &a, 2);
            let u = he.eval(&p.evk, &HeFunction::Permute, &[&cpi, &ca], &[4]).unwrap();
            let v = he.eval(&p.evk, &HeFunction::Unpermute, &[&cpi, &u[0]], &[5]).unwrap();
            assert_eq!(he.dec(&p.sk, &v[0]).unwrap(), a);
        }
    }

    #[test]
    fn recryption_chain_and_epoch_skip() {
        let he = TransparentHe;
        let k = keys(2, 4);
        let (p0, p1, p2) = (k.pair(0).unwrap(), k.pair(1).unwrap(), k.pair(2).unwrap());
        let ct = he.enc(&p0.pk, &Bits::parse("101").unwrap(), 1);
        let m1 = he.enc(&p1.pk, &p0.sk.to_bits(), 2);
        let m2 = he.enc(&p2.pk, &p1.sk.to_bits(), 3);
        let c1 = he.recrypt(&p1.evk, &m1, &ct, 4).unwrap();
        assert_eq!(he.dec(&p1.sk, &c1).unwrap(), Bits::parse("101").unwrap());
        let c2 = he.recrypt(&p2.evk, &m2, &c1, 5).unwrap();
        assert_eq!(he.dec(&p2.sk, &c2).unwrap(), Bits::parse("101").unwrap());
        assert!(matches!(he.recrypt(&p2.evk, &m2, &ct, 6), Err(HeError::EpochMismatch { .. })));
        assert!(he.dec(&p0.sk, &c1).is_err());
    }

    #[test]
    fn eval_rejects_mixed_epochs() {
        let he = TransparentHe;
        let k = keys(1, 5);
        let a = he.enc(&k.pair(0).unwrap().pk, &Bits::parse("1").unwrap(), 1);
        let b = he.enc(&k.pair(1).unwrap().pk, &Bits::parse("1").unwrap(), 1);
        assert!(he.eval(&k.pair(1).unwrap().evk, &HeFunction::Xor, &[&a, &b], &[0]).is_err());
    }

    #[test]
    fn function_codec_roundtrip() {
        let fs = [
            HeFunction::Xor,
            HeFunction::FlipMask { mask: Bits::parse("1100").unwrap() },
            HeFunction::Permute,
            HeFunction::Unpermute,
            HeFunction::CnotKeyUpdate,
            HeFunction::TKeyUpdate,
            HeFunction::VerDecMeasurement { level: 1, pi_offset: 64 },
            HeFunction::ExpandBit { m: 7 },
        ];
        for f in fs {
            let mut w = Writer::new();
            f.encode_into(&mut w);
            let buf = w.finish();
            let mut r = Reader::new(&buf);
            assert_eq!(HeFunction::decode_from(&mut r).unwrap(), f);
            r.finish().unwrap();
        }
    }
}
