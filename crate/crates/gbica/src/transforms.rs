//! Invertible symbol relabelings and the order-permutation theory.
//!
//! A [`PermutationTransform`] is a bijection on the `m` words of a
//! distribution. The central cost functional is
//! `C(p, g) = sum_j H(Y_j) - H(X)` where `Y = g(X)`: the price of coding
//! the components of the relabeled vector independently. The order
//! permutation (`i`-th smallest probability onto binary word `i`) greedily
//! minimizes the marginal entropy bit by bit, most significant bit first.

use crate::coding::bitstream::{BitReader, BitWriter};
use crate::error::{Error, Result};
use crate::math::{compensated_sum, digamma, harmonic};
use crate::prob::{binary_entropy_unchecked, JointDistribution};

const LN_2: f64 = std::f64::consts::LN_2;

/// What produced the relabeling; all kinds materialize an explicit table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransformKind {
    Explicit,
    Order,
    BlockOrder { b: u32 },
    /// Rows of an invertible GF(2) matrix, one mask per output bit, most
    /// significant output bit first.
    Linear { rows: Vec<u64> },
}

/// An invertible relabeling of the `m` symbols of a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationTransform {
    kind: TransformKind,
    table: Vec<u32>,
}

impl PermutationTransform {
    /// Wraps an explicit symbol table, validating that it is a bijection.
    pub fn from_table(table: Vec<u32>) -> Result<Self> {
        Self::with_kind(TransformKind::Explicit, table)
    }

    fn with_kind(kind: TransformKind, table: Vec<u32>) -> Result<Self> {
        let m = table.len();
        let mut seen = vec![false; m];
        for &y in &table {
            let y = y as usize;
            if y >= m || seen[y] {
                return Err(Error::InvalidParameter(format!(
                    "table is not a bijection on [0, {m})"
                )));
            }
            seen[y] = true;
        }
        Ok(Self { kind, table })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            kind: TransformKind::Explicit,
            table: (0..m as u32).collect(),
        }
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Image of a single symbol.
    #[inline]
    pub fn map(&self, symbol: u32) -> u32 {
        self.table[symbol as usize]
    }

    /// Permutes the probability vector: `out[g(x)] = p[x]`.
    pub fn apply(&self, dist: &JointDistribution) -> JointDistribution {
        assert_eq!(self.table.len(), dist.m(), "transform/distribution size mismatch");
        let mut probs = vec![0.0; dist.m()];
        for (x, &p) in dist.probs().iter().enumerate() {
            probs[self.table[x] as usize] = p;
        }
        JointDistribution::new(dist.q(), dist.d(), probs)
            .expect("permuting probabilities preserves validity")
    }

    /// The inverse relabeling; `invert(apply(t, d)) = d` bit-exactly.
    pub fn invert(&self) -> PermutationTransform {
        let mut inv = vec![0u32; self.table.len()];
        for (x, &y) in self.table.iter().enumerate() {
            inv[y as usize] = x as u32;
        }
        PermutationTransform {
            kind: TransformKind::Explicit,
            table: inv,
        }
    }

    /// Composition `other ∘ self` (apply `self` first).
    pub fn then(&self, other: &PermutationTransform) -> PermutationTransform {
        assert_eq!(self.len(), other.len());
        PermutationTransform {
            kind: TransformKind::Explicit,
            table: self.table.iter().map(|&y| other.table[y as usize]).collect(),
        }
    }

    /// Binary descriptor: tag byte, then a kind-specific payload.
    ///
    /// Layout (bit-packed, lengths little-endian varints):
    /// - tag 0 explicit: varint `m`, then `m` entries of `ceil(log2 m)` bits
    /// - tag 1 order: no payload (both sides derive it from shared context)
    /// - tag 2 block-order: one byte `b`
    /// - tag 3 linear: one byte `d`, then `d` row masks of `d` bits each
    pub fn encode_descriptor(&self, w: &mut BitWriter) {
        match &self.kind {
            TransformKind::Explicit => {
                w.write_bits(0, 8);
                let m = self.table.len() as u64;
                w.write_varint(m);
                let width = bit_width(m);
                for &y in &self.table {
                    w.write_bits(y as u64, width);
                }
            }
            TransformKind::Order => {
                w.write_bits(1, 8);
            }
            TransformKind::BlockOrder { b } => {
                w.write_bits(2, 8);
                w.write_bits(*b as u64, 8);
            }
            TransformKind::Linear { rows } => {
                w.write_bits(3, 8);
                w.write_bits(rows.len() as u64, 8);
                for &r in rows {
                    w.write_bits(r, rows.len() as u32);
                }
            }
        }
    }

    /// Decodes a descriptor written by [`encode_descriptor`]. Derived kinds
    /// (order, block order) need the shared reference distribution to
    /// materialize their tables.
    pub fn decode_descriptor(
        r: &mut BitReader<'_>,
        reference: Option<&JointDistribution>,
    ) -> Result<Self> {
        let tag = r.read_bits(8)?;
        match tag {
            0 => {
                let m = r.read_varint()?;
                let width = bit_width(m);
                let mut table = Vec::with_capacity(m as usize);
                for _ in 0..m {
                    table.push(r.read_bits(width)? as u32);
                }
                Self::from_table(table)
            }
            1 => {
                let dist = reference.ok_or_else(|| {
                    Error::CorruptStream("order descriptor needs a reference distribution".into())
                })?;
                Ok(order_permutation(dist))
            }
            2 => {
                let b = r.read_bits(8)? as u32;
                let dist = reference.ok_or_else(|| {
                    Error::CorruptStream("block-order descriptor needs a reference".into())
                })?;
                block_order_permutation(dist, b)
            }
            3 => {
                let d = r.read_bits(8)? as u32;
                let mut rows = Vec::with_capacity(d as usize);
                for _ in 0..d {
                    rows.push(r.read_bits(d)?);
                }
                linear_transform(&rows)
            }
            t => Err(Error::CorruptStream(format!("unknown transform tag {t}"))),
        }
    }
}

fn bit_width(m: u64) -> u32 {
    if m <= 1 {
        1
    } else {
        64 - (m - 1).leading_zeros()
    }
}

/// The order permutation `g_ord`: the `i`-th smallest probability is mapped
/// to binary word `i`. Ties break by ascending original symbol index.
pub fn order_permutation(dist: &JointDistribution) -> PermutationTransform {
    let mut symbols: Vec<u32> = (0..dist.m() as u32).collect();
    symbols.sort_by(|&a, &b| {
        dist.probs()[a as usize]
            .partial_cmp(&dist.probs()[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut table = vec![0u32; dist.m()];
    for (rank, &sym) in symbols.iter().enumerate() {
        table[sym as usize] = rank as u32;
    }
    PermutationTransform {
        kind: TransformKind::Order,
        table,
    }
}

/// The block order permutation `g_ord,b`: an order permutation applied
/// independently inside each of the `m / 2^b` contiguous word blocks.
/// Probabilities never leave their block.
pub fn block_order_permutation(dist: &JointDistribution, b: u32) -> Result<PermutationTransform> {
    let d = dist.d();
    if b == 0 || b > d {
        return Err(Error::InvalidParameter(format!(
            "block log-size b={b} must satisfy 1 <= b <= d={d}"
        )));
    }
    let mb = 1usize << b;
    let mut table = vec![0u32; dist.m()];
    let mut block: Vec<u32> = Vec::with_capacity(mb);
    for start in (0..dist.m()).step_by(mb) {
        block.clear();
        block.extend(start as u32..(start + mb) as u32);
        block.sort_by(|&a, &b| {
            dist.probs()[a as usize]
                .partial_cmp(&dist.probs()[b as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        for (rank, &sym) in block.iter().enumerate() {
            table[sym as usize] = (start + rank) as u32;
        }
    }
    Ok(PermutationTransform {
        kind: TransformKind::BlockOrder { b },
        table,
    })
}

/// Transform induced by an invertible GF(2) matrix given as row masks
/// (row `j` produces output bit `j`, most significant first). Fails if the
/// rows are not linearly independent.
pub fn linear_transform(rows: &[u64]) -> Result<PermutationTransform> {
    let d = rows.len() as u32;
    if d == 0 || d > 32 {
        return Err(Error::InvalidParameter(format!(
            "linear transform needs 1..=32 rows, got {d}"
        )));
    }
    let m = 1usize << d;
    let table: Vec<u32> = (0..m)
        .map(|x| {
            let mut y = 0u32;
            for (j, &row) in rows.iter().enumerate() {
                let bit = ((x as u64 & row).count_ones() & 1) as u32;
                y |= bit << (d - 1 - j as u32);
            }
            y
        })
        .collect();
    PermutationTransform::with_kind(TransformKind::Linear { rows: rows.to_vec() }, table)
        .map_err(|_| Error::InvalidParameter("matrix is singular over GF(2)".into()))
}

/// Cost of coding the transformed components independently:
/// `C(p, g) = sum_j H(Y_j) - H(X)` with `Y = g(X)`. Always non-negative.
pub fn cost(dist: &JointDistribution, transform: &PermutationTransform) -> f64 {
    transform.apply(dist).sum_marginal_entropies() - dist.entropy()
}

/// The worst-case distribution from the order-permutation analysis:
/// `p_1 = ... = p_{m-1} = 1/(3(m-1))`, `p_m = 2/3`. Already ascending, so
/// the order permutation is the identity on it, and every bit marginal
/// equals `m / (6(m-1))`.
pub fn worst_case_distribution(m: usize) -> Result<JointDistribution> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "worst-case distribution needs m = 2^d >= 2, got {m}"
        )));
    }
    let small = 1.0 / (3.0 * (m - 1) as f64);
    let mut probs = vec![small; m];
    probs[m - 1] = 2.0 / 3.0;
    JointDistribution::from_binary_probs(probs)
}

/// Closed form for the worst-case cost `C(p~, g_ord)` at alphabet size `m`:
/// `log2(m) h_b(m/(6(m-1))) - (1/3) log2(3(m-1)) + (2/3) log2(2/3)`.
pub fn worst_case_cost_closed_form(m: usize) -> f64 {
    let d = (m as f64).log2();
    let pi = m as f64 / (6.0 * (m as f64 - 1.0));
    let small = 1.0 / (3.0 * (m as f64 - 1.0));
    let joint = -((m - 1) as f64) * small * small.log2() - (2.0 / 3.0) * (2.0f64 / 3.0).log2();
    d * binary_entropy_unchecked(pi) - joint
}

/// Expected joint entropy over the uniform simplex:
/// `(psi(m+1) - psi(2)) / ln 2`.
pub fn expected_joint_entropy(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    (digamma(m as f64 + 1.0) - digamma(2.0)) / LN_2
}

/// Expected `i`-th smallest coordinate of a uniform simplex draw:
/// `(K_m - K_{m-i}) / m` with `K` the harmonic numbers.
pub fn expected_order_stat(m: u64, i: u64) -> Result<f64> {
    if i == 0 || i > m {
        return Err(Error::InvalidParameter(format!(
            "order statistic index must satisfy 1 <= i <= m, got i={i}, m={m}"
        )));
    }
    Ok((harmonic(m) - harmonic(m - i)) / m as f64)
}

/// Asymptotic upper bound on the expected marginal entropy of bit `j`
/// (counted from the least significant bit, `j = 1`) after the order
/// permutation, over the uniform simplex:
/// `h_b( sum_{i=1}^{2^j - 1} (-1)^{i+1} (i/2^j) ln(i/2^j) + 1/2 )`.
pub fn avg_case_marginal_bound(j: u32) -> f64 {
    assert!(j >= 1 && j < 63, "bit index out of range");
    let n = 1u64 << j;
    let arg = compensated_sum((1..n).map(|i| {
        let x = i as f64 / n as f64;
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        sign * x * x.ln()
    })) + 0.5;
    binary_entropy_unchecked(arg)
}

/// Asymptotic upper bound on the expected order-permutation cost at
/// dimension `d >= 10`: the first ten per-bit bounds, one bit for each
/// remaining component, minus the expected joint entropy. Converges to
/// 0.0162 as `d` grows.
pub fn avg_case_cost_bound(d: u32) -> Result<f64> {
    if d < 10 {
        return Err(Error::InvalidParameter(format!(
            "the average-case cost bound is only valid for d >= 10, got d={d}"
        )));
    }
    let head: f64 = (1..=10).map(avg_case_marginal_bound).sum();
    Ok(head + (d - 10) as f64 - expected_joint_entropy(1usize << d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{gen_uniform_simplex, gen_zipf};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(probs: &[f64]) -> JointDistribution {
        JointDistribution::from_binary_probs(probs.to_vec()).unwrap()
    }

    #[test]
    fn order_permutation_examples() {
        // Already ascending -> identity table.
        let d = dist(&[0.1, 0.2, 0.3, 0.4]);
        let t = order_permutation(&d);
        assert_eq!(t.table(), &[0, 1, 2, 3]);

        // After the transform, word i carries the i-th smallest probability.
        let d = dist(&[0.3, 0.05, 0.4, 0.25]);
        let t = order_permutation(&d);
        let y = t.apply(&d);
        let mut sorted = d.probs().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(y.probs(), &sorted[..]);

        // cost(g_ord) <= cost(identity) on the worked d=2 instance.
        let d = dist(&[0.4, 0.1, 0.3, 0.2]);
        let id = PermutationTransform::identity(4);
        assert!(cost(&d, &order_permutation(&d)) <= cost(&d, &id) + 1e-12);
    }

    #[test]
    fn order_permutation_msb_marginal_is_smallest_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d = gen_uniform_simplex(16, &mut rng);
            let y = order_permutation(&d).apply(&d);
            let pi1 = y.marginal_bit_probs()[0];
            let mut sorted = d.probs().to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let smallest_half: f64 = sorted[..8].iter().sum();
            assert!((pi1 - smallest_half).abs() < 1e-12);
        }
    }

    #[test]
    fn block_order_examples() {
        // b = d reduces to the plain order permutation.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = gen_uniform_simplex(8, &mut rng);
        assert_eq!(
            block_order_permutation(&d, 3).unwrap().table(),
            order_permutation(&d).table()
        );

        // Worked d=3, b=2 table: {p6,p3,p1,p8 | p2,p5,p4,p7} sorts to
        // {p1,p3,p6,p8 | p2,p4,p5,p7} within each half.
        let p: Vec<f64> = [6, 3, 1, 8, 2, 5, 4, 7]
            .iter()
            .map(|&i| i as f64 / 36.0)
            .collect();
        let d3 = dist(&p);
        let y = block_order_permutation(&d3, 2).unwrap().apply(&d3);
        let want: Vec<f64> = [1, 3, 6, 8, 2, 4, 5, 7]
            .iter()
            .map(|&i| i as f64 / 36.0)
            .collect();
        for (a, b) in y.probs().iter().zip(&want) {
            assert!((a - b).abs() < 1e-15);
        }

        // b=1: within each pair the smaller probability gets the 0 lsb.
        let d = dist(&[0.3, 0.1, 0.2, 0.4]);
        let y = block_order_permutation(&d, 1).unwrap().apply(&d);
        assert_eq!(y.probs(), &[0.1, 0.3, 0.2, 0.4]);

        assert!(block_order_permutation(&d, 0).is_err());
        assert!(block_order_permutation(&d, 3).is_err());
    }

    #[test]
    fn block_order_never_mixes_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let d = gen_uniform_simplex(64, &mut rng);
            for b in 1..=6 {
                let t = block_order_permutation(&d, b).unwrap();
                for (x, &y) in t.table().iter().enumerate() {
                    assert_eq!(x >> b, (y as usize) >> b, "b={b} moved a symbol across blocks");
                }
            }
        }
    }

    #[test]
    fn apply_invert_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = gen_uniform_simplex(32, &mut rng);
        let id = PermutationTransform::identity(32);
        assert_eq!(id.apply(&d).probs(), d.probs());

        let mut table: Vec<u32> = (0..32).collect();
        table.shuffle(&mut rng);
        let t = PermutationTransform::from_table(table).unwrap();
        let back = t.invert().apply(&t.apply(&d));
        assert_eq!(back.probs(), d.probs());
        assert!((t.apply(&d).entropy() - d.entropy()).abs() < 1e-12);
    }

    #[test]
    fn cost_is_nonnegative_and_zero_cases() {
        let u = JointDistribution::uniform(3);
        let t = order_permutation(&u);
        assert!(cost(&u, &t).abs() < 1e-12);

        let mut p = vec![0.0; 8];
        p[5] = 1.0;
        let point = dist(&p);
        assert!(cost(&point, &order_permutation(&point)).abs() < 1e-12);

        // Independent Bernoulli product under identity -> cost 0.
        let (a, b) = (0.2, 0.35);
        let prod = dist(&[
            a * b,
            a * (1.0 - b),
            (1.0 - a) * b,
            (1.0 - a) * (1.0 - b),
        ]);
        assert!(cost(&prod, &PermutationTransform::identity(4)).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let d = gen_uniform_simplex(16, &mut rng);
            let mut table: Vec<u32> = (0..16).collect();
            table.shuffle(&mut rng);
            let t = PermutationTransform::from_table(table).unwrap();
            assert!(cost(&d, &t) >= -1e-12);
        }
    }

    #[test]
    fn worst_case_distribution_properties() {
        let w2 = worst_case_distribution(2).unwrap();
        assert!((w2.probs()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((w2.probs()[1] - 2.0 / 3.0).abs() < 1e-15);

        for &m in &[4usize, 16, 64, 256] {
            let w = worst_case_distribution(m).unwrap();
            let y = order_permutation(&w).apply(&w);
            let want = m as f64 / (6.0 * (m as f64 - 1.0));
            for pi in y.marginal_bit_probs() {
                assert!((pi - want).abs() < 1e-12, "m={m}");
            }
        }

        // Frozen oracle: 3 h_b(4/21) - H(p~) at m=8, evaluated in high
        // precision.
        let w8 = worst_case_distribution(8).unwrap();
        let c = cost(&w8, &order_permutation(&w8));
        assert!((c - 0.253_318_845_797_48).abs() < 1e-12);
        assert!((c - worst_case_cost_closed_form(8)).abs() < 1e-12);

        // C / log2 m approaches h_b(1/6) - 1/3 = 0.31669 from below.
        let m = 1usize << 16;
        let ratio = worst_case_cost_closed_form(m) / 16.0;
        let limit = binary_entropy_unchecked(1.0 / 6.0) - 1.0 / 3.0;
        assert!((limit - 0.316_689_088_315_020_9).abs() < 1e-12);
        assert!((ratio - limit).abs() < 0.06, "ratio {ratio} limit {limit}");
    }

    #[test]
    fn expected_joint_entropy_values() {
        assert_eq!(expected_joint_entropy(1), 0.0);
        // psi(3) - psi(2) = 1/2.
        assert!((expected_joint_entropy(2) - 0.721_347_520_444_481_7).abs() < 1e-12);
        // log2 m - E[H] -> psi(2)/ln 2 = 0.6099.
        let m = 1usize << 20;
        let gap = 20.0 - expected_joint_entropy(m);
        assert!((gap - 0.609_948_863_612_096_3).abs() < 1e-4);
    }

    #[test]
    fn expected_order_stat_values() {
        // (K_4 - K_3)/4 = 1/16.
        assert!((expected_order_stat(4, 1).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        // i = m endpoint: K_m / m.
        assert!((expected_order_stat(4, 4).unwrap() - harmonic(4) / 4.0).abs() < 1e-15);
        // Telescoping sum equals 1.
        let m = 128;
        let total: f64 = (1..=m).map(|i| expected_order_stat(m, i).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert!(expected_order_stat(4, 0).is_err());
        assert!(expected_order_stat(4, 5).is_err());
    }

    #[test]
    fn avg_case_bounds() {
        // j=1: h_b((1/2) ln(1/2) + 1/2), frozen from the closed form.
        assert!((avg_case_marginal_bound(1) - 0.618_348_885_688_041_4).abs() < 1e-12);
        // Sum over the first ten bits: 9.4063 +- 0.0005.
        let head: f64 = (1..=10).map(avg_case_marginal_bound).sum();
        assert!((head - 9.4063).abs() < 5e-4, "head {head}");
        // d=20 cost bound within the theorem's constant.
        let b = avg_case_cost_bound(20).unwrap();
        assert!(b <= 0.0162 + 1e-4, "bound {b}");
        assert!(avg_case_cost_bound(9).is_err());
    }

    #[test]
    fn cost_invariant_to_bit_flips_and_bit_relabelings() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let d = gen_uniform_simplex(16, &mut rng);
        let t = order_permutation(&d);
        let base = cost(&d, &t);

        for mask in 1u32..16 {
            let flip = PermutationTransform::from_table(
                (0..16u32).map(|x| x ^ mask).collect(),
            )
            .unwrap();
            let flipped = t.then(&flip);
            assert!((cost(&d, &flipped) - base).abs() < 1e-12, "mask {mask}");
        }

        // Swap the two middle bit positions of the output word.
        let swap = PermutationTransform::from_table(
            (0..16u32)
                .map(|x| {
                    let b3 = (x >> 3) & 1;
                    let b2 = (x >> 2) & 1;
                    let b1 = (x >> 1) & 1;
                    let b0 = x & 1;
                    (b3 << 3) | (b1 << 2) | (b2 << 1) | b0
                })
                .collect(),
        )
        .unwrap();
        assert!((cost(&d, &t.then(&swap)) - base).abs() < 1e-12);
    }

    #[test]
    fn linear_transform_rank_check() {
        assert!(linear_transform(&[0b10, 0b01]).is_ok());
        assert!(linear_transform(&[0b11, 0b11]).is_err());
        assert!(linear_transform(&[0b00, 0b01]).is_err());
        let t = linear_transform(&[0b11, 0b01]).unwrap();
        // y_msb = x_msb ^ x_lsb, y_lsb = x_lsb.
        assert_eq!(t.map(0b10), 0b10);
        assert_eq!(t.map(0b01), 0b11);
        assert_eq!(t.map(0b11), 0b01);
    }

    #[test]
    fn descriptor_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let d = gen_uniform_simplex(16, &mut rng);

        let mut table: Vec<u32> = (0..16).collect();
        table.shuffle(&mut rng);
        let explicit = PermutationTransform::from_table(table).unwrap();
        let order = order_permutation(&d);
        let block = block_order_permutation(&d, 2).unwrap();
        let linear = linear_transform(&[0b1000, 0b1100, 0b0010, 0b0011]).unwrap();

        for t in [&explicit, &order, &block, &linear] {
            let mut w = BitWriter::new();
            t.encode_descriptor(&mut w);
            let stream = w.finish();
            let mut r = BitReader::new(&stream);
            let back = PermutationTransform::decode_descriptor(&mut r, Some(&d)).unwrap();
            assert_eq!(back.table(), t.table());
        }
    }

    #[test]
    fn monte_carlo_average_case() {
        // Smaller-scale companions of the acceptance runs.
        let trials = 300;
        let d = 10u32;
        let m = 1usize << d;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut sum_ord = 0.0;
        let mut sum_raw = 0.0;
        for _ in 0..trials {
            let p = gen_uniform_simplex(m, &mut rng);
            sum_ord += cost(&p, &order_permutation(&p));
            sum_raw += p.sum_marginal_entropies() - p.entropy();
        }
        let mean_ord = sum_ord / trials as f64;
        let mean_raw = sum_raw / trials as f64;
        assert!(mean_ord <= 0.0162 + 0.01, "mean order cost {mean_ord}");
        assert!(
            (0.5..0.65).contains(&mean_raw),
            "no-transform gap {mean_raw} should be near 0.6099"
        );
    }

    #[test]
    fn zipf_order_costs_sane() {
        let z = gen_zipf(1 << 8, 1.0).unwrap();
        let c = cost(&z, &order_permutation(&z));
        assert!(c >= 0.0 && c < 1.0, "order cost on zipf: {c}");
    }
}
