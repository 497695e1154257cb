//! Permutation-coded entropy coding: fixed and adaptive order-permutation
//! schemes with marginal or block component coding, the sliding-window
//! variant, and the plain windowed-arithmetic baseline.
//!
//! All schemes share one container:
//!
//! ```text
//! magic "GBIC" (32 bits) | version (8) | scheme (8) | mode (8)
//!   | d varint | n varint
//!   | scheme 0 (fixed):  reference hash (64 bits)
//!   | scheme 2 (window): window length varint
//! payload: varint bit count, then bits
//! ```
//!
//! The adaptive scheme is the window scheme at `l = 1`: before each window
//! both sides rebuild the order permutation of the empirical distribution
//! of everything already transmitted, so no permutation ever travels in
//! the stream.

use std::collections::HashMap;

use crate::coding::arithmetic::{
    AdaptiveKtModel, ArithmeticDecoder, ArithmeticEncoder, StaticModel, SymbolModel,
};
use crate::coding::bitstream::{BitReader, BitStream, BitWriter};
use crate::error::{Error, Result};
use crate::prob::JointDistribution;
use crate::transforms::order_permutation;

const MAGIC: u64 = 0x4742_4943; // "GBIC"
const VERSION: u64 = 1;

/// Transform source for permutation-coded streams.
pub enum PermScheme<'a> {
    /// A shared reference distribution; its order permutation is applied
    /// once and identified in the header by hash.
    Fixed(&'a JointDistribution),
    /// Per-symbol adaptive order permutation.
    Adaptive,
}

/// How the transformed word is split for component coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermMode {
    /// Each of the `d` bits gets its own adaptive binary coder.
    Marginal,
    /// The word splits into two halves, each with its own adaptive coder.
    Block,
}

impl PermMode {
    fn to_byte(self) -> u64 {
        match self {
            PermMode::Marginal => 0,
            PermMode::Block => 1,
        }
    }

    fn from_byte(b: u64) -> Result<Self> {
        match b {
            0 => Ok(PermMode::Marginal),
            1 => Ok(PermMode::Block),
            other => Err(Error::CorruptStream(format!("unknown mode {other}"))),
        }
    }
}

/// Incrementally maintained ascending-count ordering of the symbols seen
/// so far. `rank_of` is the current order-permutation table (rank 0 =
/// least frequent). Count bumps move a symbol to the end of its old count
/// run, an O(1) swap, so ties are ordered by bump history rather than by
/// symbol index; encoder and decoder replay identical histories.
struct OrderTracker {
    counts: Vec<u64>,
    rank_of: Vec<u32>,
    sym_at: Vec<u32>,
    run_end: HashMap<u64, u32>,
}

impl OrderTracker {
    fn new(m: usize) -> Self {
        let mut run_end = HashMap::new();
        run_end.insert(0, m as u32 - 1);
        Self {
            counts: vec![0; m],
            rank_of: (0..m as u32).collect(),
            sym_at: (0..m as u32).collect(),
            run_end,
        }
    }

    fn observe(&mut self, sym: u32) {
        let c = self.counts[sym as usize];
        let r = self.rank_of[sym as usize];
        let t = *self.run_end.get(&c).expect("symbol's count run exists");
        // move sym to the end of its count run
        let other = self.sym_at[t as usize];
        self.sym_at.swap(r as usize, t as usize);
        self.rank_of[sym as usize] = t;
        self.rank_of[other as usize] = r;
        // shrink the old run, grow the new one
        if t > 0 && self.counts[self.sym_at[t as usize - 1] as usize] == c {
            self.run_end.insert(c, t - 1);
        } else {
            self.run_end.remove(&c);
        }
        self.counts[sym as usize] = c + 1;
        self.run_end.entry(c + 1).or_insert(t);
    }
}

/// Component coders for one scheme/mode pair, sharing one arithmetic
/// stream.
enum ComponentCoders {
    Marginal(Vec<AdaptiveKtModel>),
    Block {
        hi_bits: u32,
        lo_bits: u32,
        hi: AdaptiveKtModel,
        lo: AdaptiveKtModel,
    },
}

impl ComponentCoders {
    fn new(d: u32, mode: PermMode) -> Result<Self> {
        Ok(match mode {
            PermMode::Marginal => {
                ComponentCoders::Marginal((0..d).map(|_| AdaptiveKtModel::new(2)).collect::<Result<_>>()?)
            }
            PermMode::Block => {
                let hi_bits = d / 2;
                let lo_bits = d - hi_bits;
                ComponentCoders::Block {
                    hi_bits,
                    lo_bits,
                    hi: AdaptiveKtModel::new(1 << hi_bits.max(1))?,
                    lo: AdaptiveKtModel::new(1 << lo_bits)?,
                }
            }
        })
    }

    fn encode(&mut self, enc: &mut ArithmeticEncoder, word: u32, d: u32) -> Result<()> {
        match self {
            ComponentCoders::Marginal(models) => {
                for j in 0..d {
                    let bit = word >> (d - 1 - j) & 1;
                    enc.encode_symbol(bit, &mut models[j as usize])?;
                }
            }
            ComponentCoders::Block {
                hi_bits: _,
                lo_bits,
                hi,
                lo,
            } => {
                enc.encode_symbol(word >> *lo_bits, hi)?;
                enc.encode_symbol(word & ((1 << *lo_bits) - 1), lo)?;
            }
        }
        Ok(())
    }

    fn decode(&mut self, dec: &mut ArithmeticDecoder<'_>, d: u32) -> u32 {
        match self {
            ComponentCoders::Marginal(models) => {
                let mut word = 0u32;
                for j in 0..d {
                    let bit = dec.decode_symbol(&mut models[j as usize]);
                    word |= bit << (d - 1 - j);
                }
                word
            }
            ComponentCoders::Block {
                hi_bits: _,
                lo_bits,
                hi,
                lo,
            } => {
                let h = dec.decode_symbol(hi);
                let l = dec.decode_symbol(lo);
                h << *lo_bits | l
            }
        }
    }
}

/// Payload of the permutation schemes: `window = n` (or larger) freezes the
/// initial identity order, `window = 1` is fully adaptive, and a fixed
/// table skips tracking entirely.
fn perm_payload_encode(
    samples: &[u32],
    d: u32,
    mode: PermMode,
    window: usize,
    fixed_table: Option<&[u32]>,
) -> Result<BitStream> {
    let m = 1usize << d;
    let mut coders = ComponentCoders::new(d, mode)?;
    let mut enc = ArithmeticEncoder::new();
    match fixed_table {
        Some(table) => {
            for &x in samples {
                let y = *table.get(x as usize).ok_or(Error::UnknownSymbol {
                    symbol: x as u64,
                    m,
                })?;
                coders.encode(&mut enc, y, d)?;
            }
        }
        None => {
            let mut tracker = OrderTracker::new(m);
            let mut snapshot = tracker.rank_of.clone();
            for (i, &x) in samples.iter().enumerate() {
                if i % window == 0 {
                    snapshot.copy_from_slice(&tracker.rank_of);
                }
                let y = *snapshot.get(x as usize).ok_or(Error::UnknownSymbol {
                    symbol: x as u64,
                    m,
                })?;
                coders.encode(&mut enc, y, d)?;
                tracker.observe(x);
            }
        }
    }
    Ok(enc.finish())
}

fn perm_payload_decode(
    payload: &BitStream,
    d: u32,
    mode: PermMode,
    n: usize,
    window: usize,
    fixed_inverse: Option<&[u32]>,
) -> Result<Vec<u32>> {
    let m = 1usize << d;
    let mut coders = ComponentCoders::new(d, mode)?;
    let mut dec = ArithmeticDecoder::new(payload);
    let mut out = Vec::with_capacity(n);
    match fixed_inverse {
        Some(inverse) => {
            for _ in 0..n {
                let y = coders.decode(&mut dec, d);
                let x = *inverse.get(y as usize).ok_or(Error::CorruptStream(
                    "decoded word outside the alphabet".into(),
                ))?;
                out.push(x);
            }
        }
        None => {
            let mut tracker = OrderTracker::new(m);
            let mut snapshot = tracker.sym_at.clone();
            for i in 0..n {
                if i % window == 0 {
                    snapshot.copy_from_slice(&tracker.sym_at);
                }
                let y = coders.decode(&mut dec, d);
                let x = *snapshot.get(y as usize).ok_or(Error::CorruptStream(
                    "decoded rank outside the alphabet".into(),
                ))?;
                out.push(x);
                tracker.observe(x);
            }
        }
    }
    Ok(out)
}

fn reference_hash(dist: &JointDistribution) -> u64 {
    // FNV-1a over the probability bit patterns.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &p in dist.probs() {
        for b in p.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
    }
    h
}

fn write_container(
    scheme: u64,
    mode: PermMode,
    d: u32,
    n: usize,
    extra: impl FnOnce(&mut BitWriter),
    payload: &BitStream,
) -> Vec<u8> {
    let mut w = BitWriter::new();
    w.write_bits(MAGIC, 32);
    w.write_bits(VERSION, 8);
    w.write_bits(scheme, 8);
    w.write_bits(mode.to_byte(), 8);
    w.write_varint(d as u64);
    w.write_varint(n as u64);
    extra(&mut w);
    w.write_varint(payload.len() as u64);
    for i in 0..payload.len() {
        w.write_bit(payload.bit(i));
    }
    w.finish().bytes().to_vec()
}

/// Encodes `d`-bit symbols with a permutation-coded scheme.
pub fn permutation_coded_encode(
    samples: &[u32],
    d: u32,
    scheme: PermScheme<'_>,
    mode: PermMode,
) -> Result<Vec<u8>> {
    if d == 0 || d > 24 {
        return Err(Error::InvalidParameter(format!("need 1 <= d <= 24, got {d}")));
    }
    match scheme {
        PermScheme::Fixed(reference) => {
            if reference.m() != 1usize << d {
                return Err(Error::InvalidParameter(
                    "reference alphabet does not match d".into(),
                ));
            }
            let table = order_permutation(reference);
            let payload = perm_payload_encode(samples, d, mode, 1, Some(table.table()))?;
            Ok(write_container(
                0,
                mode,
                d,
                samples.len(),
                |w| w.write_bits(reference_hash(reference), 64),
                &payload,
            ))
        }
        PermScheme::Adaptive => {
            let payload = perm_payload_encode(samples, d, mode, 1, None)?;
            Ok(write_container(1, mode, d, samples.len(), |_| {}, &payload))
        }
    }
}

/// Sliding-window variant: each non-overlapping window of `l` symbols is
/// transformed by the order permutation of everything before it.
pub fn sliding_window_encode(
    samples: &[u32],
    d: u32,
    l: usize,
    mode: PermMode,
) -> Result<Vec<u8>> {
    if d == 0 || d > 24 {
        return Err(Error::InvalidParameter(format!("need 1 <= d <= 24, got {d}")));
    }
    if l == 0 {
        return Err(Error::InvalidParameter("window length must be >= 1".into()));
    }
    let payload = perm_payload_encode(samples, d, mode, l, None)?;
    Ok(write_container(
        2,
        mode,
        d,
        samples.len(),
        |w| w.write_varint(l as u64),
        &payload,
    ))
}

/// Decodes any container written by the permutation-coded encoders. The
/// fixed scheme needs the same reference distribution; its hash is
/// verified against the header.
pub fn permutation_coded_decode(
    bytes: &[u8],
    reference: Option<&JointDistribution>,
) -> Result<Vec<u32>> {
    let stream = BitStream::from_parts(bytes.to_vec(), bytes.len() * 8)?;
    let mut r = BitReader::new(&stream);
    if r.read_bits(32)? != MAGIC {
        return Err(Error::CorruptStream("bad magic".into()));
    }
    if r.read_bits(8)? != VERSION {
        return Err(Error::CorruptStream("unsupported version".into()));
    }
    let scheme = r.read_bits(8)?;
    let mode = PermMode::from_byte(r.read_bits(8)?)?;
    let d = r.read_varint()? as u32;
    let n = r.read_varint()? as usize;
    if d == 0 || d > 24 {
        return Err(Error::CorruptStream(format!("bad dimension {d}")));
    }

    let mut fixed_inverse: Option<Vec<u32>> = None;
    let mut window = 1usize;
    match scheme {
        0 => {
            let want = r.read_bits(64)?;
            let reference = reference.ok_or_else(|| {
                Error::InvalidParameter("fixed scheme needs the shared reference".into())
            })?;
            if reference_hash(reference) != want {
                return Err(Error::CorruptStream(
                    "reference distribution does not match the stream hash".into(),
                ));
            }
            fixed_inverse = Some(order_permutation(reference).invert().table().to_vec());
        }
        1 => {}
        2 => {
            window = r.read_varint()? as usize;
            if window == 0 {
                return Err(Error::CorruptStream("zero window".into()));
            }
        }
        other => return Err(Error::CorruptStream(format!("unknown scheme {other}"))),
    }

    let nbits = r.read_varint()? as usize;
    if nbits > r.remaining() {
        return Err(Error::TruncatedStream);
    }
    let mut pw = BitWriter::new();
    for _ in 0..nbits {
        pw.write_bit(r.read_bit()?);
    }
    let payload = pw.finish();
    perm_payload_decode(&payload, d, mode, n, window, fixed_inverse.as_deref())
}

/// Plain windowed arithmetic baseline over the whole alphabet: window `t`
/// is coded with a static model frozen from the counts of everything
/// before it (KT-smoothed so unseen symbols stay codable).
pub fn windowed_arithmetic_encode(samples: &[u32], m: usize, l: usize) -> Result<BitStream> {
    if l == 0 {
        return Err(Error::InvalidParameter("window length must be >= 1".into()));
    }
    let mut counts = vec![0u64; m];
    let mut enc = ArithmeticEncoder::new();
    for chunk in samples.chunks(l) {
        let freqs: Vec<u64> = counts.iter().map(|&c| 2 * c + 1).collect();
        let model = StaticModel::from_freqs(freqs)?;
        for &x in chunk {
            let (lo, hi) = model.interval(x)?;
            enc.encode(lo, hi, model.total());
        }
        for &x in chunk {
            counts[x as usize] += 1;
        }
    }
    Ok(enc.finish())
}

/// Decoder for [`windowed_arithmetic_encode`].
pub fn windowed_arithmetic_decode(
    payload: &BitStream,
    m: usize,
    l: usize,
    n: usize,
) -> Result<Vec<u32>> {
    if l == 0 {
        return Err(Error::InvalidParameter("window length must be >= 1".into()));
    }
    let mut counts = vec![0u64; m];
    let mut dec = ArithmeticDecoder::new(payload);
    let mut out: Vec<u32> = Vec::with_capacity(n);
    let mut done = 0;
    while done < n {
        let take = l.min(n - done);
        let freqs: Vec<u64> = counts.iter().map(|&c| 2 * c + 1).collect();
        let model = StaticModel::from_freqs(freqs)?;
        for _ in 0..take {
            let target = dec.target(model.total());
            let (sym, lo, hi) = model.lookup(target);
            dec.consume(lo, hi, model.total());
            out.push(sym);
        }
        for &x in &out[done..done + take] {
            counts[x as usize] += 1;
        }
        done += take;
    }
    Ok(out)
}

/// Final adaptive order table after observing `samples`: rank of each
/// symbol in the tracker's ascending-count order. Exposed for tests and
/// experiments.
pub fn adaptive_final_order(samples: &[u32], m: usize) -> Vec<u32> {
    let mut tracker = OrderTracker::new(m);
    for &x in samples {
        tracker.observe(x);
    }
    tracker.rank_of
}
