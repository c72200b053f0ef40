//! Canonical length-prefixed binary encoding.
//!
//! Every field is written as a big-endian `u32` length followed by its bytes.
//! Integers are fixed-width big-endian, floats are their IEEE-754 bit pattern.
//! This is the byte form that gets hashed into commitments, so it must never
//! depend on map iteration order or platform details.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("unexpected end of input at offset {0}")]
    Truncated(usize),
    #[error("field at offset {offset} has length {len}, expected {expected}")]
    BadLength {
        offset: usize,
        len: usize,
        expected: usize,
    },
    #[error("invalid utf-8 in string field")]
    Utf8,
    #[error("invalid tag {0}")]
    BadTag(u8),
    #[error("{0} trailing bytes")]
    Trailing(usize),
}

#[derive(Debug, Default, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        let len = u32::try_from(b.len()).expect("field longer than u32::MAX");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(b);
        self
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.bytes(&[v])
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_be_bytes())
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.bytes(&v.to_bits().to_be_bytes())
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.u8(u8::from(v))
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    /// Writes a nested encoding as a single length-prefixed field.
    pub fn nested(&mut self, inner: &Writer) -> &mut Self {
        self.bytes(&inner.buf)
    }

    pub fn f64s(&mut self, vs: &[f64]) -> &mut Self {
        let mut inner = Writer::new();
        inner.u32(vs.len() as u32);
        for v in vs {
            inner.f64(*v);
        }
        self.nested(&inner)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.buf
    }
}

#[derive(Debug, Clone)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], DecodeError> {
        let start = self.pos;
        let len_end = start.checked_add(4).ok_or(DecodeError::Truncated(start))?;
        if len_end > self.buf.len() {
            return Err(DecodeError::Truncated(start));
        }
        let len = u32::from_be_bytes(self.buf[start..len_end].try_into().unwrap()) as usize;
        let end = len_end
            .checked_add(len)
            .ok_or(DecodeError::Truncated(start))?;
        if end > self.buf.len() {
            return Err(DecodeError::Truncated(start));
        }
        self.pos = end;
        Ok(&self.buf[len_end..end])
    }

    fn fixed<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let offset = self.pos;
        let b = self.bytes()?;
        b.try_into().map_err(|_| DecodeError::BadLength {
            offset,
            len: b.len(),
            expected: N,
        })
    }

    pub fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.fixed::<1>()?[0])
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.fixed()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.fixed()?))
    }

    pub fn f64(&mut self) -> Result<f64, DecodeError> {
        Ok(f64::from_bits(u64::from_be_bytes(self.fixed()?)))
    }

    pub fn bool(&mut self) -> Result<bool, DecodeError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            t => Err(DecodeError::BadTag(t)),
        }
    }

    pub fn str(&mut self) -> Result<&'a str, DecodeError> {
        std::str::from_utf8(self.bytes()?).map_err(|_| DecodeError::Utf8)
    }

    pub fn array32(&mut self) -> Result<[u8; 32], DecodeError> {
        self.fixed()
    }

    pub fn nested(&mut self) -> Result<Reader<'a>, DecodeError> {
        Ok(Reader::new(self.bytes()?))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>, DecodeError> {
        let mut inner = self.nested()?;
        let n = inner.u32()? as usize;
        let mut out = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            out.push(inner.f64()?);
        }
        inner.finish()?;
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    /// Fails if any input is left over.
    pub fn finish(self) -> Result<(), DecodeError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(DecodeError::Trailing(n)),
        }
    }
}
