//! Message authentication: HMAC-SHA256 truncated to 128 bits, plus signed records that
//! bind a label to a list of HE ciphertexts and opaque extra bytes.

use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::codec::{CodecError, Reader, Writer};
use super::he::HeCiphertext;
use crate::qsim::RngStream;

pub const TAG_LEN: usize = 16;

/// Test vectors shipped with the crate: `key_hex msg_hex tag_hex` per line, `-` for an
/// empty message.
pub const DEFAULT_VECTORS: &str = include_str!("../../testdata/mac_vectors.txt");

type HmacSha256 = Hmac<Sha256>;

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct MacKey(pub [u8; 16]);

impl std::fmt::Debug for MacKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MacKey(..)")
    }
}

impl MacKey {
    pub fn random(rng: &mut RngStream) -> Self {
        let mut k = [0u8; 16];
        rand::RngCore::fill_bytes(rng, &mut k);
        MacKey(k)
    }

    fn mac(&self) -> HmacSha256 {
        <HmacSha256 as Mac>::new_from_slice(&self.0).expect("hmac accepts any key length")
    }

    pub fn tag(&self, msg: &[u8]) -> [u8; TAG_LEN] {
        let mut m = self.mac();
        m.update(msg);
        let full = m.finalize().into_bytes();
        let mut t = [0u8; TAG_LEN];
        t.copy_from_slice(&full[..TAG_LEN]);
        t
    }

    /// Constant-time comparison against a truncated tag.
    pub fn verify(&self, msg: &[u8], tag: &[u8]) -> bool {
        if tag.len() != TAG_LEN {
            return false;
        }
        let mut m = self.mac();
        m.update(msg);
        m.verify_truncated_left(tag).is_ok()
    }
}

/// `(m, tag(m))`
pub fn mac_sign(k: &MacKey, msg: &[u8]) -> (Vec<u8>, [u8; TAG_LEN]) {
    (msg.to_vec(), k.tag(msg))
}

pub fn mac_verify(k: &MacKey, msg: &[u8], tag: &[u8]) -> bool {
    k.verify(msg, tag)
}

/// A labelled, authenticated record of ciphertexts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedMessage {
    pub label: String,
    pub ciphertexts: Vec<HeCiphertext>,
    pub extra: Vec<u8>,
    pub tag: [u8; TAG_LEN],
}

impl SignedMessage {
    fn body(label: &str, ciphertexts: &[HeCiphertext], extra: &[u8]) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(label).len(ciphertexts.len());
        for c in ciphertexts {
            c.encode_into(&mut w);
        }
        w.bytes(extra);
        w.finish()
    }

    pub fn sign(k: &MacKey, label: &str, ciphertexts: Vec<HeCiphertext>, extra: Vec<u8>) -> Self {
        let tag = k.tag(&Self::body(label, &ciphertexts, &extra));
        SignedMessage { label: label.to_string(), ciphertexts, extra, tag }
    }

    pub fn verify(&self, k: &MacKey) -> bool {
        k.verify(&Self::body(&self.label, &self.ciphertexts, &self.extra), &self.tag)
    }

    pub fn encode_into(&self, w: &mut Writer) {
        w.raw(&Self::body(&self.label, &self.ciphertexts, &self.extra)).raw(&self.tag);
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        let label = r.str()?;
        let n = r.len()?;
        let mut ciphertexts = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            ciphertexts.push(HeCiphertext::decode_from(r)?);
        }
        let extra = r.bytes()?;
        let mut tag = [0u8; TAG_LEN];
        tag.copy_from_slice(r.take(TAG_LEN)?);
        Ok(SignedMessage { label, ciphertexts, extra, tag })
    }
}

fn unhex(s: &str) -> Option<Vec<u8>> {
    if s == "-" {
        return Some(Vec::new());
    }
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len()).step_by(2).map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok()).collect()
}

/// Checks every vector in `text`; returns how many passed or the first failing line.
pub fn check_vectors(text: &str) -> Result<usize, String> {
    let mut n = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let parsed = match f.as_slice() {
            [k, m, t] => unhex(k).zip(unhex(m)).zip(unhex(t)),
            _ => None,
        };
        let ((k, m), t) = parsed.ok_or_else(|| format!("line {}: malformed vector", i + 1))?;
        let key: [u8; 16] = k.try_into().map_err(|_| format!("line {}: key must be 16 bytes", i + 1))?;
        if !MacKey(key).verify(&m, &t) {
            return Err(format!("line {}: tag mismatch", i + 1));
        }
        n += 1;
    }
    if n == 0 {
        return Err("no vectors".into());
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_vectors_pass() {
        assert_eq!(check_vectors(DEFAULT_VECTORS).unwrap(), 6);
        let broken = DEFAULT_VECTORS.replace("492ce020", "492ce021");
        assert!(check_vectors(&broken).is_err());
    }

    #[test]
    fn every_single_bit_flip_rejected() {
        let k = MacKey([7u8; 16]);
        let (m, t) = mac_sign(&k, b"abcd");
        assert!(mac_verify(&k, &m, &t));
        for i in 0..m.len() * 8 {
            let mut m2 = m.clone();
            m2[i / 8] ^= 1 << (i % 8);
            assert!(!mac_verify(&k, &m2, &t));
        }
        for i in 0..TAG_LEN * 8 {
            let mut t2 = t;
            t2[i / 8] ^= 1 << (i % 8);
            assert!(!mac_verify(&k, &m, &t2));
        }
        let (e, te) = mac_sign(&k, b"");
        assert!(mac_verify(&k, &e, &te));
    }

    #[test]
    fn signed_record_binds_label() {
        let k = MacKey([1u8; 16]);
        let ct = HeCiphertext { backend: 1, epoch: 0, payload: vec![1, 2, 3] };
        let s = SignedMessage::sign(&k, "in0", vec![ct], vec![9]);
        assert!(s.verify(&k));
        let mut moved = s.clone();
        moved.label = "in1".into();
        assert!(!moved.verify(&k));
        let mut w = Writer::new();
        s.encode_into(&mut w);
        let buf = w.finish();
        let mut r = Reader::new(&buf);
        assert_eq!(SignedMessage::decode_from(&mut r).unwrap(), s);
        r.finish().unwrap();
    }
}
