//! Canonical binary encoding used for everything that is hashed or signed.
//!
//! Layout rules:
//!
//! * integers are fixed-width big-endian (`u8`, `u64`, `u128`),
//! * fixed-size arrays (digests, addresses, keys, signatures) are written raw,
//! * variable-length byte strings and text carry a `u32` big-endian length prefix,
//! * sequences carry a `u32` big-endian element count followed by the elements.
//!
//! Decoding is strict: every read is bounds-checked and [`Decoder::finish`]
//! rejects trailing bytes, so one encoding maps to exactly one value.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("unexpected end of input: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("{0} trailing bytes after value")]
    Trailing(usize),
    #[error("invalid tag {tag} for {what}")]
    InvalidTag { what: &'static str, tag: u8 },
    #[error("invalid utf-8 text")]
    Utf8,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn fixed(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.u32(bytes.len() as u32);
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Decoder<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Self { input, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.input.len());
        match end {
            Some(end) => {
                let out = &self.input[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(DecodeError::Truncated {
                offset: self.pos,
                needed: n,
            }),
        }
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn u128(&mut self) -> Result<u128, DecodeError> {
        Ok(u128::from_be_bytes(self.array()?))
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let slice = self.take(N)?;
        let mut out = [0u8; N];
        out.copy_from_slice(slice);
        Ok(out)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn string(&mut self) -> Result<String, DecodeError> {
        let raw = self.bytes()?;
        String::from_utf8(raw.to_vec()).map_err(|_| DecodeError::Utf8)
    }

    pub fn remaining(&self) -> usize {
        self.input.len() - self.pos
    }

    pub fn finish(self) -> Result<(), DecodeError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_big_endian_and_length_prefixed() {
        let mut enc = Encoder::new();
        enc.u8(1).u64(2).bytes(b"ab");
        assert_eq!(enc.finish(), vec![1, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 2, b'a', b'b']);
    }

    #[test]
    fn truncated_and_trailing_inputs_are_rejected() {
        let mut dec = Decoder::new(&[0, 0, 0, 5, 1]);
        assert!(matches!(dec.bytes(), Err(DecodeError::Truncated { .. })));

        let dec = Decoder::new(&[1]);
        assert_eq!(dec.finish(), Err(DecodeError::Trailing(1)));
    }

    proptest! {
        #[test]
        fn values_round_trip(a in any::<u64>(), b in any::<u128>(), s in ".*", raw in proptest::collection::vec(any::<u8>(), 0..64)) {
            let mut enc = Encoder::new();
            enc.u64(a).u128(b).str(&s).bytes(&raw);
            let buf = enc.finish();
            let mut dec = Decoder::new(&buf);
            prop_assert_eq!(dec.u64().unwrap(), a);
            prop_assert_eq!(dec.u128().unwrap(), b);
            prop_assert_eq!(dec.string().unwrap(), s);
            prop_assert_eq!(dec.bytes().unwrap(), &raw[..]);
            prop_assert!(dec.finish().is_ok());
        }
    }
}
