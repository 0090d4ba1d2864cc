//! Bit strings and permutations shared by the code, key and log layers.

use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid bit character {0:?}")]
    BadChar(char),
    #[error("not a permutation: {0}")]
    NotPermutation(String),
}

/// A fixed-length string of bits, index 0 first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Bits(Vec<bool>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Bits(vec![true; len])
    }

    pub fn from_bools(v: Vec<bool>) -> Self {
        Bits(v)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Bits((0..len).map(|_| rng.random::<bool>()).collect())
    }

    /// `b` repeated `ones` times followed by `zeros` zero bits.
    pub fn expand_bit(b: bool, ones: usize, zeros: usize) -> Self {
        let mut v = vec![b; ones];
        v.resize(ones + zeros, false);
        Bits(v)
    }

    pub fn parse(s: &str) -> Result<Self, BitsError> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitsError::BadChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.0[i] = v;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] ^= true;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn parity(&self) -> bool {
        self.weight() % 2 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|b| !b)
    }

    pub fn slice(&self, start: usize, end: usize) -> Bits {
        Bits(self.0[start..end].to_vec())
    }

    pub fn concat(&self, other: &Bits) -> Bits {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bits(v)
    }

    pub fn xor(&self, other: &Bits) -> Result<Bits, BitsError> {
        if self.len() != other.len() {
            return Err(BitsError::LengthMismatch { left: self.len(), right: other.len() });
        }
        Ok(Bits(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }

    pub fn xor_assign(&mut self, other: &Bits) -> Result<(), BitsError> {
        if self.len() != other.len() {
            return Err(BitsError::LengthMismatch { left: self.len(), right: other.len() });
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= *b;
        }
        Ok(())
    }

    /// Packs the bits MSB-first into bytes; the last byte is zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len().div_ceil(8)];
        for (i, b) in self.0.iter().enumerate() {
            if *b {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    /// Inverse of [`Bits::to_bytes`]. Returns `None` when the byte count is wrong or
    /// padding bits are set, so every encoding has exactly one preimage.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Option<Bits> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let v: Vec<bool> = (0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect();
        let bits = Bits(v);
        if bits.to_bytes() != bytes {
            return None;
        }
        Some(bits)
    }

    pub fn to_u64(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, b| (acc << 1) | *b as u64)
    }

    pub fn from_u64(value: u64, len: usize) -> Bits {
        Bits((0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1).collect())
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for Bits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Bits(iter.into_iter().collect())
    }
}

/// A bijection on `0..n`. Element `j` of the source is sent to position `map[j]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

/// Width of one encoded permutation entry when a permutation travels inside a bit string.
pub const PERM_ENTRY_BITS: usize = 8;

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { map: (0..n).collect() }
    }

    pub fn from_vec(map: Vec<usize>) -> Result<Self, BitsError> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || seen[v] {
                return Err(BitsError::NotPermutation(format!("{map:?}")));
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    /// Uniform permutation by Fisher-Yates.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            map.swap(i, j);
        }
        Permutation { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Where source index `j` lands.
    pub fn image(&self, j: usize) -> usize {
        self.map[j]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (j, &p) in self.map.iter().enumerate() {
            inv[p] = j;
        }
        Permutation { map: inv }
    }

    /// `out[map[j]] = bits[j]`.
    pub fn permute(&self, bits: &Bits) -> Result<Bits, BitsError> {
        if bits.len() != self.len() {
            return Err(BitsError::LengthMismatch { left: bits.len(), right: self.len() });
        }
        let mut out = Bits::zeros(bits.len());
        for (j, &p) in self.map.iter().enumerate() {
            out.set(p, bits.get(j));
        }
        Ok(out)
    }

    /// `out[j] = bits[map[j]]`, the inverse of [`Permutation::permute`].
    pub fn unpermute(&self, bits: &Bits) -> Result<Bits, BitsError> {
        if bits.len() != self.len() {
            return Err(BitsError::LengthMismatch { left: bits.len(), right: self.len() });
        }
        Ok(self.map.iter().map(|&p| bits.get(p)).collect())
    }

    pub fn to_bits(&self) -> Bits {
        let mut v = Vec::with_capacity(self.len() * PERM_ENTRY_BITS);
        for &p in &self.map {
            v.extend(Bits::from_u64(p as u64, PERM_ENTRY_BITS).iter());
        }
        Bits::from_bools(v)
    }

    pub fn from_bits(bits: &Bits) -> Result<Self, BitsError> {
        if !bits.len().is_multiple_of(PERM_ENTRY_BITS) {
            return Err(BitsError::NotPermutation(format!("{} bits", bits.len())));
        }
        let map = (0..bits.len() / PERM_ENTRY_BITS)
            .map(|k| bits.slice(k * PERM_ENTRY_BITS, (k + 1) * PERM_ENTRY_BITS).to_u64() as usize)
            .collect();
        Permutation::from_vec(map)
    }
}
