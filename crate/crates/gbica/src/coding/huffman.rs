//! Huffman codes, canonical form, and the compact codebook serialization.
//!
//! The canonical form keeps each symbol's Huffman length but reassigns
//! codewords so that, scanning symbols by (length, symbol index), each
//! codeword is the next binary number in sequence. A canonical codebook is
//! fully reconstructible from its length histogram plus the symbol order,
//! which is what [`CanonicalCodebook::serialize`] stores.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::coding::bitstream::{BitReader, BitStream, BitWriter};
use crate::error::{Error, Result};

/// Per-symbol code lengths and bits produced by the Huffman construction.
/// Symbols with zero weight carry length 0 and have no code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanCodebook {
    lens: Vec<u8>,
    codes: Vec<u64>,
}

/// Total-ordered f64 wrapper for the construction heap.
#[derive(PartialEq)]
struct Weight(f64);
impl Eq for Weight {}
impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Weight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl HuffmanCodebook {
    /// Builds an optimal prefix code for the given non-negative weights
    /// (probabilities or counts). Ties are broken by node creation order so
    /// identical inputs always yield identical codebooks.
    pub fn build(weights: &[f64]) -> Result<Self> {
        let m = weights.len();
        if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParameter(format!("bad weight {w}")));
        }
        let support: Vec<usize> = (0..m).filter(|&i| weights[i] > 0.0).collect();
        if support.is_empty() {
            return Err(Error::InvalidParameter(
                "all weights are zero; nothing to code".into(),
            ));
        }

        let mut lens = vec![0u8; m];
        if support.len() == 1 {
            // Degenerate single-symbol alphabet: emit one bit per symbol.
            lens[support[0]] = 1;
        } else {
            // parent links over leaves + internal nodes
            let mut parent = vec![usize::MAX; support.len()];
            let mut heap: BinaryHeap<Reverse<(Weight, usize)>> = support
                .iter()
                .enumerate()
                .map(|(node, &sym)| Reverse((Weight(weights[sym]), node)))
                .collect();
            while heap.len() > 1 {
                let Reverse((wa, a)) = heap.pop().unwrap();
                let Reverse((wb, b)) = heap.pop().unwrap();
                let node = parent.len();
                parent.push(usize::MAX);
                parent[a] = node;
                parent[b] = node;
                heap.push(Reverse((Weight(wa.0 + wb.0), node)));
            }
            for (node, &sym) in support.iter().enumerate() {
                let mut depth = 0u8;
                let mut cur = node;
                while parent[cur] != usize::MAX {
                    cur = parent[cur];
                    depth += 1;
                }
                lens[sym] = depth;
            }
        }

        let codes = canonical_codes(&lens);
        Ok(Self { lens, codes })
    }

    pub fn build_from_counts(counts: &[u64]) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        Self::build(&weights)
    }

    /// Number of symbols in the alphabet (including uncoded ones).
    pub fn alphabet_size(&self) -> usize {
        self.lens.len()
    }

    pub fn lens(&self) -> &[u8] {
        &self.lens
    }

    /// Average codeword length under `probs`, in bits.
    pub fn average_length(&self, probs: &[f64]) -> f64 {
        probs
            .iter()
            .zip(&self.lens)
            .map(|(&p, &l)| p * l as f64)
            .sum()
    }

    /// Kraft sum over coded symbols.
    pub fn kraft_sum(&self) -> f64 {
        self.lens
            .iter()
            .filter(|&&l| l > 0)
            .map(|&l| (-(l as f64)).exp2())
            .sum()
    }

    /// Structural prefix-freeness check over the coded symbols.
    pub fn is_prefix_free(&self) -> bool {
        let mut coded: Vec<(u8, u64)> = self
            .lens
            .iter()
            .zip(&self.codes)
            .filter(|(&l, _)| l > 0)
            .map(|(&l, &c)| (l, c))
            .collect();
        coded.sort();
        for i in 0..coded.len() {
            for j in i + 1..coded.len() {
                let (la, ca) = coded[i];
                let (lb, cb) = coded[j];
                if cb >> (lb - la) == ca {
                    return false;
                }
            }
        }
        true
    }
}

/// Canonical codeword assignment from a length vector: symbols scanned by
/// (length, index) receive consecutive binary numbers.
fn canonical_codes(lens: &[u8]) -> Vec<u64> {
    let max_len = lens.iter().copied().max().unwrap_or(0);
    let mut count_per_len = vec![0u64; max_len as usize + 1];
    for &l in lens {
        if l > 0 {
            count_per_len[l as usize] += 1;
        }
    }
    let mut next = vec![0u64; max_len as usize + 1];
    let mut code = 0u64;
    for l in 1..=max_len as usize {
        code = (code + count_per_len[l - 1]) << 1;
        next[l] = code;
    }
    let mut codes = vec![0u64; lens.len()];
    for (sym, &l) in lens.iter().enumerate() {
        if l > 0 {
            codes[sym] = next[l as usize];
            next[l as usize] += 1;
        }
    }
    codes
}

/// A canonical Huffman codebook: the length histogram plus the symbols in
/// (length, canonical-rank) order reconstruct every codeword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalCodebook {
    alphabet_size: usize,
    max_len: u8,
    /// `len_counts[l-1]` = number of symbols with code length `l`.
    len_counts: Vec<u64>,
    /// Symbols in (length, canonical-rank) order.
    symbols: Vec<u32>,
    lens: Vec<u8>,
    codes: Vec<u64>,
}

/// Reassigns canonical codewords to an existing codebook's lengths.
pub fn canonicalize(cb: &HuffmanCodebook) -> CanonicalCodebook {
    CanonicalCodebook::from_lens(cb.lens().to_vec())
}

impl CanonicalCodebook {
    pub fn from_lens(lens: Vec<u8>) -> Self {
        let codes = canonical_codes(&lens);
        let max_len = lens.iter().copied().max().unwrap_or(0);
        let mut len_counts = vec![0u64; max_len as usize];
        let mut symbols: Vec<u32> = (0..lens.len() as u32).filter(|&s| lens[s as usize] > 0).collect();
        symbols.sort_by_key(|&s| (lens[s as usize], s));
        for &l in &lens {
            if l > 0 {
                len_counts[l as usize - 1] += 1;
            }
        }
        Self {
            alphabet_size: lens.len(),
            max_len,
            len_counts,
            symbols,
            lens,
            codes,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn lens(&self) -> &[u8] {
        &self.lens
    }

    pub fn code(&self, sym: u32) -> Option<(u64, u8)> {
        let l = *self.lens.get(sym as usize)?;
        if l == 0 {
            None
        } else {
            Some((self.codes[sym as usize], l))
        }
    }

    pub fn average_length(&self, probs: &[f64]) -> f64 {
        probs
            .iter()
            .zip(&self.lens)
            .map(|(&p, &l)| p * l as f64)
            .sum()
    }

    /// Compact serialization: alphabet size, max length, the per-length
    /// histogram, then the symbols in canonical order. Strictly smaller
    /// than the explicit (length byte + 4-byte code) table for `m >= 4`.
    pub fn serialize(&self) -> Vec<u8> {
        let mut w = BitWriter::new();
        w.write_varint(self.alphabet_size as u64);
        w.write_bits(self.max_len as u64, 8);
        for &c in &self.len_counts {
            w.write_varint(c);
        }
        for &s in &self.symbols {
            w.write_varint(s as u64);
        }
        w.finish().bytes().to_vec()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let stream = BitStream::from_parts(bytes.to_vec(), bytes.len() * 8)?;
        let mut r = BitReader::new(&stream);
        Self::read(&mut r)
    }

    pub(crate) fn write(&self, w: &mut BitWriter) {
        w.write_varint(self.alphabet_size as u64);
        w.write_bits(self.max_len as u64, 8);
        for &c in &self.len_counts {
            w.write_varint(c);
        }
        for &s in &self.symbols {
            w.write_varint(s as u64);
        }
    }

    pub(crate) fn read(r: &mut BitReader<'_>) -> Result<Self> {
        let alphabet_size = r.read_varint()? as usize;
        let max_len = r.read_bits(8)? as u8;
        if max_len as usize > 64 {
            return Err(Error::CorruptStream("code length above 64".into()));
        }
        let mut len_counts = vec![0u64; max_len as usize];
        let mut total = 0u64;
        for c in len_counts.iter_mut() {
            *c = r.read_varint()?;
            total += *c;
        }
        if total > alphabet_size as u64 {
            return Err(Error::CorruptStream("histogram exceeds alphabet".into()));
        }
        let mut lens = vec![0u8; alphabet_size];
        let mut symbols = Vec::with_capacity(total as usize);
        for (i, &c) in len_counts.iter().enumerate() {
            for _ in 0..c {
                let s = r.read_varint()?;
                if s >= alphabet_size as u64 {
                    return Err(Error::CorruptStream(format!("symbol {s} out of range")));
                }
                if lens[s as usize] != 0 {
                    return Err(Error::CorruptStream(format!("symbol {s} listed twice")));
                }
                lens[s as usize] = i as u8 + 1;
                symbols.push(s as u32);
            }
        }
        let codes = canonical_codes(&lens);
        Ok(Self {
            alphabet_size,
            max_len,
            len_counts,
            symbols,
            lens,
            codes,
        })
    }

    /// Decodes one symbol by walking the canonical first-code ladder.
    fn decode_symbol(&self, r: &mut BitReader<'_>) -> Result<u32> {
        let mut code = 0u64;
        let mut first = 0u64;
        let mut index = 0u64;
        for l in 1..=self.max_len as usize {
            code = code << 1 | r.read_bit()? as u64;
            let count = self.len_counts[l - 1];
            if code < first + count {
                return Ok(self.symbols[(index + (code - first)) as usize]);
            }
            index += count;
            first = (first + count) << 1;
        }
        Err(Error::CorruptStream("invalid prefix code".into()))
    }
}

/// Encodes samples with a canonical prefix code; payload bits only.
pub fn prefix_encode(samples: &[u32], cb: &CanonicalCodebook) -> Result<BitStream> {
    let mut w = BitWriter::new();
    for &s in samples {
        let (code, len) = cb.code(s).ok_or(Error::UnknownSymbol {
            symbol: s as u64,
            m: cb.alphabet_size(),
        })?;
        w.write_bits(code, len as u32);
    }
    Ok(w.finish())
}

/// Decodes `n` symbols from a prefix-coded payload.
pub fn prefix_decode(stream: &BitStream, cb: &CanonicalCodebook, n: usize) -> Result<Vec<u32>> {
    let mut r = BitReader::new(stream);
    (0..n).map(|_| cb.decode_symbol(&mut r)).collect()
}
