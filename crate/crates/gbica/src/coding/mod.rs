//! Bit-exact entropy coders and their self-contained stream containers.
//!
//! Container layout (bit-packed, see [`bitstream`]):
//!
//! ```text
//! magic "GB" (16 bits) | version (8) | coder id (8) | m varint | n varint
//!   coder 0 (canonical Huffman): serialized codebook, then payload
//!   coder 1 (static arithmetic): m quantized frequency varints, then payload
//!   coder 2 (adaptive arithmetic): payload only
//! payload: varint bit count, then that many bits
//! ```

pub mod arithmetic;
pub mod bitstream;
pub mod huffman;

pub use arithmetic::{
    adaptive_decode, adaptive_encode, arithmetic_decode, arithmetic_encode, AdaptiveKtModel,
    ArithmeticDecoder, ArithmeticEncoder, StaticModel, SymbolModel,
};
pub use bitstream::{BitReader, BitStream, BitWriter};
pub use huffman::{
    canonicalize, prefix_decode, prefix_encode, CanonicalCodebook, HuffmanCodebook,
};

use crate::error::{Error, Result};
use crate::prob::empirical_distribution;

const MAGIC: u64 = 0x4742; // "GB"
const VERSION: u64 = 1;

/// Coder identifiers used in container headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoderId {
    Huffman = 0,
    ArithmeticStatic = 1,
    ArithmeticAdaptive = 2,
}

impl CoderId {
    fn from_u64(v: u64) -> Result<Self> {
        match v {
            0 => Ok(Self::Huffman),
            1 => Ok(Self::ArithmeticStatic),
            2 => Ok(Self::ArithmeticAdaptive),
            other => Err(Error::CorruptStream(format!("unknown coder id {other}"))),
        }
    }
}

fn write_header(w: &mut BitWriter, coder: CoderId, m: usize, n: usize) {
    w.write_bits(MAGIC, 16);
    w.write_bits(VERSION, 8);
    w.write_bits(coder as u64, 8);
    w.write_varint(m as u64);
    w.write_varint(n as u64);
}

fn read_header(r: &mut BitReader<'_>) -> Result<(CoderId, usize, usize)> {
    if r.read_bits(16)? != MAGIC {
        return Err(Error::CorruptStream("bad magic".into()));
    }
    let version = r.read_bits(8)?;
    if version != VERSION {
        return Err(Error::CorruptStream(format!("unsupported version {version}")));
    }
    let coder = CoderId::from_u64(r.read_bits(8)?)?;
    let m = r.read_varint()? as usize;
    let n = r.read_varint()? as usize;
    Ok((coder, m, n))
}

fn write_payload(w: &mut BitWriter, payload: &BitStream) {
    w.write_varint(payload.len() as u64);
    for i in 0..payload.len() {
        w.write_bit(payload.bit(i));
    }
}

fn read_payload(r: &mut BitReader<'_>) -> Result<BitStream> {
    let nbits = r.read_varint()? as usize;
    if nbits > r.remaining() {
        return Err(Error::TruncatedStream);
    }
    let mut w = BitWriter::new();
    for _ in 0..nbits {
        w.write_bit(r.read_bit()?);
    }
    Ok(w.finish())
}

fn bytes_to_stream(bytes: &[u8]) -> Result<BitStream> {
    BitStream::from_parts(bytes.to_vec(), bytes.len() * 8)
}

/// Compresses a symbol sequence with a canonical Huffman code built from
/// its empirical counts; the codebook travels in the header.
pub fn huffman_compress(samples: &[u32], m: usize) -> Result<Vec<u8>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (counts, _) = empirical_distribution(samples, m)?;
    let cb = canonicalize(&HuffmanCodebook::build_from_counts(&counts.counts)?);
    let payload = prefix_encode(samples, &cb)?;
    let mut w = BitWriter::new();
    write_header(&mut w, CoderId::Huffman, m, samples.len());
    cb.write(&mut w);
    write_payload(&mut w, &payload);
    Ok(w.finish().bytes().to_vec())
}

/// Compresses with a static arithmetic coder; the quantized model travels
/// in the header.
pub fn arithmetic_compress(samples: &[u32], m: usize) -> Result<Vec<u8>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (counts, _) = empirical_distribution(samples, m)?;
    let probs: Vec<f64> = counts
        .counts
        .iter()
        .map(|&c| c as f64 / counts.n as f64)
        .collect();
    let model = StaticModel::from_probs(&probs)?;
    let payload = arithmetic_encode(samples, &model)?;
    let mut w = BitWriter::new();
    write_header(&mut w, CoderId::ArithmeticStatic, m, samples.len());
    for &f in model.freqs() {
        w.write_varint(f);
    }
    write_payload(&mut w, &payload);
    Ok(w.finish().bytes().to_vec())
}

/// Compresses with the adaptive KT arithmetic coder; no model in the
/// header.
pub fn adaptive_compress(samples: &[u32], m: usize) -> Result<Vec<u8>> {
    let payload = adaptive_encode(samples, m)?;
    let mut w = BitWriter::new();
    write_header(&mut w, CoderId::ArithmeticAdaptive, m, samples.len());
    write_payload(&mut w, &payload);
    Ok(w.finish().bytes().to_vec())
}

/// Decompresses any container produced by the functions above.
pub fn decompress(bytes: &[u8]) -> Result<Vec<u32>> {
    let stream = bytes_to_stream(bytes)?;
    let mut r = BitReader::new(&stream);
    let (coder, m, n) = read_header(&mut r)?;
    match coder {
        CoderId::Huffman => {
            let cb = CanonicalCodebook::read(&mut r)?;
            let payload = read_payload(&mut r)?;
            prefix_decode(&payload, &cb, n)
        }
        CoderId::ArithmeticStatic => {
            let mut freqs = Vec::with_capacity(m);
            for _ in 0..m {
                freqs.push(r.read_varint()?);
            }
            let model = StaticModel::from_freqs(freqs)?;
            let payload = read_payload(&mut r)?;
            arithmetic_decode(&payload, &model, n)
        }
        CoderId::ArithmeticAdaptive => {
            let payload = read_payload(&mut r)?;
            adaptive_decode(&payload, m, n)
        }
    }
}
