//! Length-prefixed frames: 4-byte big-endian payload length, one kind byte, payload.

use std::io::{self, Read, Write};

use thiserror::Error;

/// Protocol version carried by HELLO.
pub const VERSION: &[u8; 4] = b"TTP1";

/// Default ceiling on a single payload.
pub const DEFAULT_MAX_FRAME: usize = 64 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    Hello = 0,
    Evk = 1,
    Ciphertext = 2,
    Circuit = 3,
    ResultCt = 4,
    Log = 5,
    Verdict = 6,
    Error = 7,
}

impl Kind {
    pub fn from_u8(b: u8) -> Option<Kind> {
        use Kind::*;
        [Hello, Evk, Ciphertext, Circuit, ResultCt, Log, Verdict, Error].get(b as usize).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: Kind,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: Kind, payload: Vec<u8>) -> Self {
        Frame { kind, payload }
    }

    pub fn error(msg: &str) -> Self {
        Frame::new(Kind::Error, msg.as_bytes().to_vec())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.payload.len());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.payload);
        out
    }
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("stream closed")]
    Closed,
    #[error("truncated frame: wanted {wanted} bytes, got {got}")]
    Truncated { wanted: usize, got: usize },
    #[error("frame of {len} bytes exceeds the {max}-byte limit")]
    Oversized { len: usize, max: usize },
    #[error("unknown frame kind {0}")]
    UnknownKind(u8),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses one frame from the front of `data`; returns it with the bytes consumed.
pub fn parse_frame(data: &[u8], max: usize) -> Result<(Frame, usize), FrameError> {
    if data.is_empty() {
        return Err(FrameError::Closed);
    }
    if data.len() < 5 {
        return Err(FrameError::Truncated { wanted: 5, got: data.len() });
    }
    let len = u32::from_be_bytes(data[..4].try_into().expect("4 bytes")) as usize;
    if len > max {
        return Err(FrameError::Oversized { len, max });
    }
    let kind = Kind::from_u8(data[4]).ok_or(FrameError::UnknownKind(data[4]))?;
    let end = 5 + len;
    if data.len() < end {
        return Err(FrameError::Truncated { wanted: end, got: data.len() });
    }
    Ok((Frame::new(kind, data[5..end].to_vec()), end))
}

fn read_full(r: &mut impl Read, buf: &mut [u8]) -> Result<usize, io::Error> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

/// Reads one frame. The length is checked against `max` before the payload is read.
pub fn read_frame(r: &mut impl Read, max: usize) -> Result<Frame, FrameError> {
    let mut head = [0u8; 5];
    let got = read_full(r, &mut head)?;
    if got == 0 {
        return Err(FrameError::Closed);
    }
    if got < 5 {
        return Err(FrameError::Truncated { wanted: 5, got });
    }
    let len = u32::from_be_bytes(head[..4].try_into().expect("4 bytes")) as usize;
    if len > max {
        return Err(FrameError::Oversized { len, max });
    }
    let kind = Kind::from_u8(head[4]).ok_or(FrameError::UnknownKind(head[4]))?;
    let mut payload = vec![0u8; len];
    let got = read_full(r, &mut payload)?;
    if got < len {
        return Err(FrameError::Truncated { wanted: len, got });
    }
    Ok(Frame::new(kind, payload))
}

pub fn write_frame(w: &mut impl Write, f: &Frame) -> Result<(), FrameError> {
    w.write_all(&f.to_bytes())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_limits() {
        let f = Frame::new(Kind::Log, vec![1, 2, 3]);
        let bytes = f.to_bytes();
        assert_eq!(bytes, [0, 0, 0, 3, 5, 1, 2, 3]);
        assert_eq!(parse_frame(&bytes, 16).unwrap(), (f.clone(), 8));
        assert_eq!(read_frame(&mut &bytes[..], 16).unwrap(), f);
        assert!(matches!(parse_frame(&bytes, 2), Err(FrameError::Oversized { len: 3, max: 2 })));
        assert!(matches!(parse_frame(&[0, 0, 0, 0, 8], 16), Err(FrameError::UnknownKind(8))));
        assert!(matches!(read_frame(&mut &bytes[..6], 16), Err(FrameError::Truncated { .. })));
        assert!(matches!(read_frame(&mut &[][..], 16), Err(FrameError::Closed)));
    }
}
