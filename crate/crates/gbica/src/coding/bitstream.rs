//! Bit-exact stream primitives shared by every coder in the crate.
//!
//! Bits are appended most-significant-bit-first within each byte. The final
//! partial byte is zero-padded; the exact bit length travels in whatever
//! header wraps the stream.

use crate::error::{Error, Result};

/// An immutable sequence of bits backed by a byte buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    bytes: Vec<u8>,
    nbits: usize,
}

impl BitStream {
    pub fn from_parts(bytes: Vec<u8>, nbits: usize) -> Result<Self> {
        if nbits > bytes.len() * 8 || (nbits + 7) / 8 < bytes.len() {
            return Err(Error::CorruptStream(format!(
                "bit length {nbits} does not match {} bytes",
                bytes.len()
            )));
        }
        Ok(Self { bytes, nbits })
    }

    pub fn len(&self) -> usize {
        self.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.nbits == 0
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.nbits);
        self.bytes[i / 8] >> (7 - i % 8) & 1 == 1
    }
}

/// Append-only bit sink.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    nbits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.nbits == 0
    }

    #[inline]
    pub fn write_bit(&mut self, bit: bool) {
        if self.nbits % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 1 << (7 - self.nbits % 8);
        }
        self.nbits += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value < (1u64 << width).max(1));
        for i in (0..width).rev() {
            self.write_bit(value >> i & 1 == 1);
        }
    }

    /// LEB128-style varint, seven bits per group.
    pub fn write_varint(&mut self, mut value: u64) {
        loop {
            let group = (value & 0x7f) as u64;
            value >>= 7;
            self.write_bit(value != 0);
            self.write_bits(group, 7);
            if value == 0 {
                break;
            }
        }
    }

    pub fn finish(self) -> BitStream {
        BitStream {
            bytes: self.bytes,
            nbits: self.nbits,
        }
    }
}

/// Cursor over a [`BitStream`]. Reads past the end return
/// [`Error::TruncatedStream`].
#[derive(Debug)]
pub struct BitReader<'a> {
    stream: &'a BitStream,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(stream: &'a BitStream) -> Self {
        Self { stream, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.stream.len() - self.pos
    }

    #[inline]
    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.stream.len() {
            return Err(Error::TruncatedStream);
        }
        let b = self.stream.bit(self.pos);
        self.pos += 1;
        Ok(b)
    }

    /// Reads a bit, treating exhaustion as an endless run of zeros. The
    /// arithmetic decoder uses this for its tail padding.
    #[inline]
    pub fn read_bit_padded(&mut self) -> bool {
        if self.pos >= self.stream.len() {
            self.pos += 1;
            return false;
        }
        let b = self.stream.bit(self.pos);
        self.pos += 1;
        b
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = v << 1 | self.read_bit()? as u64;
        }
        Ok(v)
    }

    pub fn read_varint(&mut self) -> Result<u64> {
        let mut value = 0u64;
        let mut shift = 0u32;
        loop {
            let more = self.read_bit()?;
            let group = self.read_bits(7)?;
            if shift >= 64 {
                return Err(Error::CorruptStream("varint overflow".into()));
            }
            value |= group << shift;
            shift += 7;
            if !more {
                return Ok(value);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_read_roundtrip() {
        let mut w = BitWriter::new();
        w.write_bit(true);
        w.write_bits(0b1011, 4);
        w.write_bits(0xdead_beef, 32);
        w.write_varint(0);
        w.write_varint(127);
        w.write_varint(128);
        w.write_varint(u64::MAX);
        let s = w.finish();
        let mut r = BitReader::new(&s);
        assert!(r.read_bit().unwrap());
        assert_eq!(r.read_bits(4).unwrap(), 0b1011);
        assert_eq!(r.read_bits(32).unwrap(), 0xdead_beef);
        assert_eq!(r.read_varint().unwrap(), 0);
        assert_eq!(r.read_varint().unwrap(), 127);
        assert_eq!(r.read_varint().unwrap(), 128);
        assert_eq!(r.read_varint().unwrap(), u64::MAX);
        assert_eq!(r.remaining(), 0);
        assert!(matches!(r.read_bit(), Err(Error::TruncatedStream)));
    }

    #[test]
    fn padding_is_zero() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        let s = w.finish();
        assert_eq!(s.len(), 3);
        assert_eq!(s.bytes(), &[0b1010_0000]);
    }

    #[test]
    fn empty_stream() {
        let s = BitWriter::new().finish();
        assert!(s.is_empty());
        let mut r = BitReader::new(&s);
        assert!(!r.read_bit_padded());
    }
}
