//! Strict little binary codec used for MAC inputs, log entries and wire payloads.
//! Integers are big-endian; byte strings and lists carry a u32 length prefix.

use thiserror::Error;

use crate::bits::{Bits, Permutation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("truncated input at byte {0}")]
    Truncated(usize),
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("invalid {what} at byte {at}")]
    Invalid { what: &'static str, at: usize },
    #[error("length {len} exceeds limit {limit}")]
    TooLong { len: usize, limit: usize },
}

/// Longest byte string or list accepted by [`Reader`].
pub const MAX_LEN: usize = 1 << 26;

#[derive(Default, Debug, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(v as u8)
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn len(&mut self, n: usize) -> &mut Self {
        self.u32(n as u32)
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.len(b.len());
        self.buf.extend_from_slice(b);
        self
    }

    pub fn raw(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn bits(&mut self, b: &Bits) -> &mut Self {
        self.len(b.len());
        self.buf.extend_from_slice(&b.to_bytes());
        self
    }

    pub fn perm(&mut self, p: &Permutation) -> &mut Self {
        self.len(p.len());
        for &v in p.as_slice() {
            self.u32(v as u32);
        }
        self
    }
}

#[derive(Debug)]
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.data.len()
    }

    pub fn finish(&self) -> Result<(), CodecError> {
        if !self.is_done() {
            return Err(CodecError::Trailing(self.data.len() - self.pos));
        }
        Ok(())
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.data.len() - self.pos < n {
            return Err(CodecError::Truncated(self.pos));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn invalid<T>(&self, what: &'static str) -> Result<T, CodecError> {
        Err(CodecError::Invalid { what, at: self.pos })
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn bool(&mut self) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => self.invalid("bool"),
        }
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&mut self) -> Result<usize, CodecError> {
        let n = self.u32()? as usize;
        if n > MAX_LEN {
            return Err(CodecError::TooLong { len: n, limit: MAX_LEN });
        }
        Ok(n)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, CodecError> {
        let n = self.len()?;
        Ok(self.take(n)?.to_vec())
    }

    pub fn str(&mut self) -> Result<String, CodecError> {
        let at = self.pos;
        String::from_utf8(self.bytes()?).map_err(|_| CodecError::Invalid { what: "utf-8", at })
    }

    pub fn bits(&mut self) -> Result<Bits, CodecError> {
        let n = self.len()?;
        let at = self.pos;
        let raw = self.take(n.div_ceil(8))?;
        Bits::from_bytes(raw, n).ok_or(CodecError::Invalid { what: "bit padding", at })
    }

    pub fn perm(&mut self) -> Result<Permutation, CodecError> {
        let n = self.len()?;
        let at = self.pos;
        let mut map = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            map.push(self.u32()? as usize);
        }
        Permutation::from_vec(map).map_err(|_| CodecError::Invalid { what: "permutation", at })
    }
}

/// 64-bit FNV-1a; a non-cryptographic digest for log intermediates.
pub fn fnv1a64(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in data {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 64 test values
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn roundtrip_and_strictness() {
        let mut w = Writer::new();
        w.u8(7).u32(9).u64(1 << 40).str("hi").bits(&Bits::parse("10110").unwrap()).bool(true);
        let buf = w.finish();
        let mut r = Reader::new(&buf);
        assert_eq!(r.u8().unwrap(), 7);
        assert_eq!(r.u32().unwrap(), 9);
        assert_eq!(r.u64().unwrap(), 1 << 40);
        assert_eq!(r.str().unwrap(), "hi");
        assert_eq!(r.bits().unwrap(), Bits::parse("10110").unwrap());
        assert!(r.bool().unwrap());
        r.finish().unwrap();

        let mut r = Reader::new(&buf[..buf.len() - 1]);
        r.u8().unwrap();
        r.u32().unwrap();
        r.u64().unwrap();
        r.str().unwrap();
        r.bits().unwrap();
        assert!(r.bool().is_err());
    }

    #[test]
    fn bad_padding_rejected() {
        let buf = [0, 0, 0, 3, 0b1110_0001];
        assert!(Reader::new(&buf).bits().is_err());
    }
}
