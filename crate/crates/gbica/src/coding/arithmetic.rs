//! Integer arithmetic coding with E1/E2/E3 renormalization, plus the
//! frequency models that drive it.
//!
//! The coder keeps a 48-bit interval so that quantization loss against the
//! model's ideal code length is far below a bit even for million-symbol
//! streams; frequency totals are capped and halved so interval products
//! stay exact in 128-bit intermediates. Encoder and decoder are exact
//! mirrors: identical inputs always produce identical bitstreams.

use crate::coding::bitstream::{BitReader, BitStream, BitWriter};
use crate::error::{Error, Result};
use crate::prob::JointDistribution;

const STATE_BITS: u32 = 48;
const MASK: u64 = (1 << STATE_BITS) - 1;
const HALF: u64 = 1 << (STATE_BITS - 1);
const QUARTER: u64 = 1 << (STATE_BITS - 2);
const THREE_QUARTERS: u64 = HALF + QUARTER;

/// Frequency totals are halved when they reach this cap.
pub const MAX_TOTAL: u64 = 1 << 24;

/// Scale used when quantizing a probability model to integer frequencies.
pub const STATIC_SCALE: u64 = 1 << 16;

/// A cumulative-frequency model the coder can consume.
pub trait SymbolModel {
    fn alphabet_size(&self) -> usize;
    fn total(&self) -> u64;
    /// Cumulative interval `[lo, hi)` of `sym`; errors on zero frequency.
    fn interval(&self, sym: u32) -> Result<(u64, u64)>;
    /// Symbol whose interval contains `target`, with that interval.
    fn lookup(&self, target: u64) -> (u32, u64, u64);
    /// Observes one emitted symbol (no-op for static models).
    fn update(&mut self, _sym: u32) {}
}

/// Fixed model quantized from a probability vector.
#[derive(Debug, Clone)]
pub struct StaticModel {
    freqs: Vec<u64>,
    cum: Vec<u64>,
}

impl StaticModel {
    /// Quantizes probabilities to integer frequencies at [`STATIC_SCALE`].
    /// Every positive-probability symbol keeps a frequency of at least 1;
    /// zero-probability symbols get none and cannot be coded.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let freqs: Vec<u64> = probs
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    ((p * STATIC_SCALE as f64).round() as u64).max(1)
                } else {
                    0
                }
            })
            .collect();
        Self::from_freqs(freqs)
    }

    pub fn from_dist(dist: &JointDistribution) -> Result<Self> {
        Self::from_probs(dist.probs())
    }

    pub fn from_freqs(freqs: Vec<u64>) -> Result<Self> {
        let total: u64 = freqs.iter().sum();
        if total == 0 {
            return Err(Error::InvalidParameter("model has no mass".into()));
        }
        if total > MAX_TOTAL {
            return Err(Error::InvalidParameter(format!(
                "frequency total {total} above cap {MAX_TOTAL}"
            )));
        }
        let mut cum = Vec::with_capacity(freqs.len() + 1);
        let mut acc = 0u64;
        cum.push(0);
        for &f in &freqs {
            acc += f;
            cum.push(acc);
        }
        Ok(Self { freqs, cum })
    }

    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    /// Ideal code length of a sequence under this quantized model:
    /// `-sum log2(freq/total)`. This is the `-log2 P` that the payload
    /// bound is stated against.
    pub fn ideal_length_bits(&self, samples: &[u32]) -> Result<f64> {
        let total = self.total() as f64;
        let mut bits = 0.0;
        for &s in samples {
            let f = *self.freqs.get(s as usize).ok_or(Error::UnknownSymbol {
                symbol: s as u64,
                m: self.freqs.len(),
            })?;
            if f == 0 {
                return Err(Error::UnknownSymbol {
                    symbol: s as u64,
                    m: self.freqs.len(),
                });
            }
            bits -= (f as f64 / total).log2();
        }
        Ok(bits)
    }
}

impl SymbolModel for StaticModel {
    fn alphabet_size(&self) -> usize {
        self.freqs.len()
    }

    fn total(&self) -> u64 {
        *self.cum.last().unwrap()
    }

    fn interval(&self, sym: u32) -> Result<(u64, u64)> {
        let i = sym as usize;
        if i >= self.freqs.len() || self.freqs[i] == 0 {
            return Err(Error::UnknownSymbol {
                symbol: sym as u64,
                m: self.freqs.len(),
            });
        }
        Ok((self.cum[i], self.cum[i + 1]))
    }

    fn lookup(&self, target: u64) -> (u32, u64, u64) {
        // partition_point: first index with cum[i+1] > target
        let sym = self.cum[1..].partition_point(|&c| c <= target);
        (sym as u32, self.cum[sym], self.cum[sym + 1])
    }
}

/// Adaptive Krichevsky–Trofimov model: symbol frequencies `2 c + 1` over a
/// Fenwick tree, so per-symbol probability is `(c + 1/2) / (n + m/2)`.
#[derive(Debug, Clone)]
pub struct AdaptiveKtModel {
    m: usize,
    freqs: Vec<u64>,
    fenwick: Vec<u64>,
    total: u64,
}

impl AdaptiveKtModel {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("empty alphabet".into()));
        }
        if m as u64 >= MAX_TOTAL {
            return Err(Error::InvalidParameter(format!(
                "alphabet size {m} at or above frequency cap {MAX_TOTAL}"
            )));
        }
        let mut model = Self {
            m,
            freqs: vec![1; m],
            fenwick: vec![0; m + 1],
            total: 0,
        };
        model.rebuild();
        Ok(model)
    }

    fn rebuild(&mut self) {
        self.fenwick.iter_mut().for_each(|v| *v = 0);
        for i in 0..self.m {
            self.add(i, self.freqs[i] as i64);
        }
        self.total = self.prefix(self.m);
    }

    fn add(&mut self, i: usize, delta: i64) {
        let mut j = i + 1;
        while j <= self.m {
            self.fenwick[j] = (self.fenwick[j] as i64 + delta) as u64;
            j += j & j.wrapping_neg();
        }
    }

    /// Sum of frequencies of symbols `< i`.
    fn prefix(&self, i: usize) -> u64 {
        let mut j = i;
        let mut s = 0;
        while j > 0 {
            s += self.fenwick[j];
            j -= j & j.wrapping_neg();
        }
        s
    }

    fn halve(&mut self) {
        for f in self.freqs.iter_mut() {
            // keep the KT shape 2c+1 with c -> floor(c/2)
            let c = (*f - 1) / 2;
            *f = 2 * (c / 2) + 1;
        }
        self.rebuild();
    }
}

impl SymbolModel for AdaptiveKtModel {
    fn alphabet_size(&self) -> usize {
        self.m
    }

    fn total(&self) -> u64 {
        self.total
    }

    fn interval(&self, sym: u32) -> Result<(u64, u64)> {
        let i = sym as usize;
        if i >= self.m {
            return Err(Error::UnknownSymbol {
                symbol: sym as u64,
                m: self.m,
            });
        }
        let lo = self.prefix(i);
        Ok((lo, lo + self.freqs[i]))
    }

    fn lookup(&self, target: u64) -> (u32, u64, u64) {
        // Fenwick descent: largest i with prefix(i) <= target.
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = self.m.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.m && self.fenwick[next] <= rem {
                rem -= self.fenwick[next];
                pos = next;
            }
            step >>= 1;
        }
        let lo = target - rem;
        (pos as u32, lo, lo + self.freqs[pos])
    }

    fn update(&mut self, sym: u32) {
        self.add(sym as usize, 2);
        self.freqs[sym as usize] += 2;
        self.total += 2;
        if self.total >= MAX_TOTAL {
            self.halve();
        }
    }
}

/// Streaming arithmetic encoder over an externally supplied model.
pub struct ArithmeticEncoder {
    low: u64,
    high: u64,
    pending: u64,
    writer: BitWriter,
}

impl Default for ArithmeticEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl ArithmeticEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            high: MASK,
            pending: 0,
            writer: BitWriter::new(),
        }
    }

    fn emit(&mut self, bit: bool) {
        self.writer.write_bit(bit);
        for _ in 0..self.pending {
            self.writer.write_bit(!bit);
        }
        self.pending = 0;
    }

    /// Narrows the interval to `[cum_lo, cum_hi) / total` and renormalizes.
    pub fn encode(&mut self, cum_lo: u64, cum_hi: u64, total: u64) {
        debug_assert!(cum_lo < cum_hi && cum_hi <= total);
        let range = (self.high - self.low + 1) as u128;
        let t = total as u128;
        self.high = self.low + (range * cum_hi as u128 / t) as u64 - 1;
        self.low += (range * cum_lo as u128 / t) as u64;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = self.high << 1 | 1;
        }
    }

    /// Encodes `sym` under `model` and advances the model.
    pub fn encode_symbol(&mut self, sym: u32, model: &mut dyn SymbolModel) -> Result<()> {
        let (lo, hi) = model.interval(sym)?;
        self.encode(lo, hi, model.total());
        model.update(sym);
        Ok(())
    }

    /// Flushes the disambiguation bits and returns the payload.
    pub fn finish(mut self) -> BitStream {
        self.pending += 1;
        if self.low < QUARTER {
            self.emit(false);
        } else {
            self.emit(true);
        }
        self.writer.finish()
    }
}

/// Mirror-image decoder; reads padded zeros past the payload end.
pub struct ArithmeticDecoder<'a> {
    low: u64,
    high: u64,
    code: u64,
    reader: BitReader<'a>,
}

impl<'a> ArithmeticDecoder<'a> {
    pub fn new(stream: &'a BitStream) -> Self {
        let mut reader = BitReader::new(stream);
        let mut code = 0u64;
        for _ in 0..STATE_BITS {
            code = code << 1 | reader.read_bit_padded() as u64;
        }
        Self {
            low: 0,
            high: MASK,
            code,
            reader,
        }
    }

    /// Scaled target to hand to the model's `lookup`.
    pub fn target(&self, total: u64) -> u64 {
        let range = (self.high - self.low + 1) as u128;
        (((self.code - self.low + 1) as u128 * total as u128 - 1) / range) as u64
    }

    /// Consumes the interval chosen by the model; must mirror `encode`.
    pub fn consume(&mut self, cum_lo: u64, cum_hi: u64, total: u64) {
        let range = (self.high - self.low + 1) as u128;
        let t = total as u128;
        self.high = self.low + (range * cum_hi as u128 / t) as u64 - 1;
        self.low += (range * cum_lo as u128 / t) as u64;
        loop {
            if self.high < HALF {
                // nothing
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.code -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.code -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = self.high << 1 | 1;
            self.code = self.code << 1 | self.reader.read_bit_padded() as u64;
        }
    }

    /// Decodes one symbol under `model` and advances the model.
    pub fn decode_symbol(&mut self, model: &mut dyn SymbolModel) -> u32 {
        let total = model.total();
        let (sym, lo, hi) = model.lookup(self.target(total));
        self.consume(lo, hi, total);
        model.update(sym);
        sym
    }
}

/// Encodes samples under a fixed model; returns the payload bits.
pub fn arithmetic_encode(samples: &[u32], model: &StaticModel) -> Result<BitStream> {
    let mut model = model.clone();
    let mut enc = ArithmeticEncoder::new();
    for &s in samples {
        enc.encode_symbol(s, &mut model)?;
    }
    Ok(enc.finish())
}

/// Decodes `n` symbols coded by [`arithmetic_encode`] under the same model.
pub fn arithmetic_decode(stream: &BitStream, model: &StaticModel, n: usize) -> Result<Vec<u32>> {
    let mut model = model.clone();
    let mut dec = ArithmeticDecoder::new(stream);
    Ok((0..n).map(|_| dec.decode_symbol(&mut model)).collect())
}

/// Adaptive KT-coded payload over an alphabet of size `m`.
pub fn adaptive_encode(samples: &[u32], m: usize) -> Result<BitStream> {
    let mut model = AdaptiveKtModel::new(m)?;
    let mut enc = ArithmeticEncoder::new();
    for &s in samples {
        enc.encode_symbol(s, &mut model)?;
    }
    Ok(enc.finish())
}

/// Decodes `n` symbols coded by [`adaptive_encode`] with the same `m`.
pub fn adaptive_decode(stream: &BitStream, m: usize, n: usize) -> Result<Vec<u32>> {
    let mut model = AdaptiveKtModel::new(m)?;
    let mut dec = ArithmeticDecoder::new(stream);
    Ok((0..n).map(|_| dec.decode_symbol(&mut model)).collect())
}
