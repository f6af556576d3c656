//! Length-prefixed framing used wherever fields are concatenated.
//!
//! Every field is written as a 4-byte big-endian length followed by the
//! field bytes, so a concatenation of framed fields parses back uniquely.

use crate::error::{Error, Result};

/// Builds a byte string out of framed fields.
#[derive(Debug, Default, Clone)]
pub struct Framer {
    buf: Vec<u8>,
}

impl Framer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, bytes: &[u8]) -> Self {
        self.push(bytes);
        self
    }

    pub fn push(&mut self, bytes: &[u8]) {
        let len = u32::try_from(bytes.len()).expect("framed field exceeds u32::MAX bytes");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Frames each field in order and concatenates the results.
pub fn frame(fields: &[&[u8]]) -> Vec<u8> {
    let mut f = Framer::new();
    for field in fields {
        f.push(field);
    }
    f.finish()
}

/// Reads framed fields back out of a byte string.
pub struct Unframer<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Unframer<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        Self { input, pos: 0 }
    }

    pub fn next_field(&mut self) -> Result<&'a [u8]> {
        let rest = &self.input[self.pos..];
        if rest.len() < 4 {
            return Err(Error::MalformedEncoding(format!(
                "truncated length prefix at byte {}",
                self.pos
            )));
        }
        let len = u32::from_be_bytes(rest[..4].try_into().unwrap()) as usize;
        let body = rest.get(4..4 + len).ok_or_else(|| {
            Error::MalformedEncoding(format!("truncated field at byte {}", self.pos))
        })?;
        self.pos += 4 + len;
        Ok(body)
    }

    pub fn next_fixed<const N: usize>(&mut self) -> Result<[u8; N]> {
        let at = self.pos;
        self.next_field()?
            .try_into()
            .map_err(|_| Error::MalformedEncoding(format!("field at byte {at} is not {N} bytes")))
    }

    pub fn finish(self) -> Result<()> {
        if self.pos == self.input.len() {
            Ok(())
        } else {
            Err(Error::MalformedEncoding(format!(
                "{} trailing bytes",
                self.input.len() - self.pos
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_layout() {
        assert_eq!(
            frame(&[b"ab", b""]),
            vec![0, 0, 0, 2, b'a', b'b', 0, 0, 0, 0]
        );
    }

    #[test]
    fn splice_ambiguity_is_gone() {
        assert_ne!(frame(&[b"ab", b"c"]), frame(&[b"a", b"bc"]));
    }

    #[test]
    fn unframe_rejects_trailing_and_truncated() {
        let mut bytes = frame(&[b"xyz"]);
        bytes.push(0);
        let mut u = Unframer::new(&bytes);
        assert_eq!(u.next_field().unwrap(), b"xyz");
        assert!(u.finish().is_err());

        let bytes = frame(&[b"xyz"]);
        let mut u = Unframer::new(&bytes[..5]);
        assert!(u.next_field().is_err());
    }
}
