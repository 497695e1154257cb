//! Linear BICA over GF(2): the XOR-subset entropy table, a naive lower
//! bound, and the no-regret greedy full-rank heuristic.
//!
//! For every mask `i` the table holds `H(U_i)` where `U_i` is the XOR of
//! the masked bits. An invertible matrix has `d` linearly independent
//! nonzero rows, so summing the `d` smallest nonzero-mask entries is a
//! floor under every linear transform's marginal-entropy sum; the greedy
//! heuristic takes rows in ascending-entropy order, skipping rows that are
//! GF(2)-dependent on those already chosen.

use crate::error::{Error, Result};
use crate::prob::{binary_entropy_unchecked, JointDistribution};
use crate::transforms::{cost, linear_transform, PermutationTransform};

/// A `d x d` bit matrix over GF(2); rows are stored as bit masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: Vec<u64>,
}

impl BinaryMatrix {
    pub fn new(rows: Vec<u64>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// GF(2) rank by incremental row reduction over 64-bit words.
    pub fn rank(&self) -> usize {
        let mut basis: Vec<u64> = Vec::new();
        for &row in &self.rows {
            let mut r = row;
            for &b in &basis {
                r = r.min(r ^ b);
            }
            if r != 0 {
                basis.push(r);
                basis.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        basis.len()
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.dim()
    }

    /// The induced symbol permutation; fails on singular matrices.
    pub fn to_transform(&self) -> Result<PermutationTransform> {
        linear_transform(&self.rows)
    }
}

/// Reduces `row` against a growing GF(2) basis; returns the reduced value
/// (0 means dependent) and inserts it when independent.
fn reduce_and_insert(basis: &mut Vec<u64>, row: u64) -> bool {
    let mut r = row;
    for &b in basis.iter() {
        r = r.min(r ^ b);
    }
    if r == 0 {
        false
    } else {
        basis.push(r);
        basis.sort_unstable_by(|a, b| b.cmp(a));
        true
    }
}

/// `H(U_i)` for every subset mask `i` in `0..2^d`, where `U_i` is the XOR
/// of the bits selected by `i`. Mask 0 yields `H = 0`.
///
/// Computed with a Walsh-Hadamard-style butterfly over the sign domain:
/// the transform of the probability vector gives the biases
/// `E[(-1)^{<i, x>}] = 2 P(U_i = 0) - 1` in `O(d 2^d)`.
pub fn xor_entropy_table(dist: &JointDistribution) -> Vec<f64> {
    let biases = xor_biases(dist);
    biases
        .into_iter()
        .map(|b| binary_entropy_unchecked((1.0 + b) / 2.0))
        .collect()
}

fn xor_biases(dist: &JointDistribution) -> Vec<f64> {
    assert!(dist.is_binary(), "XOR tables need a binary alphabet");
    let m = dist.m();
    let mut a = dist.probs().to_vec();
    let mut len = 1;
    while len < m {
        for start in (0..m).step_by(2 * len) {
            for i in start..start + len {
                let (x, y) = (a[i], a[i + len]);
                a[i] = x + y;
                a[i + len] = x - y;
            }
        }
        len *= 2;
    }
    // index i of the butterfly corresponds to mask over (lsb-first) bit
    // positions; our masks select symbol bits directly, which matches
    // because the symbol's bit weights are the butterfly strides.
    a
}

/// Reference implementation by direct subset-parity marginalization,
/// `O(4^d)`; kept as the independent route for cross-checking.
pub fn xor_entropy_table_direct(dist: &JointDistribution) -> Vec<f64> {
    let m = dist.m();
    (0..m as u64)
        .map(|mask| {
            let p0: f64 = dist
                .probs()
                .iter()
                .enumerate()
                .filter(|(x, _)| (*x as u64 & mask).count_ones() % 2 == 0)
                .map(|(_, &p)| p)
                .sum();
            binary_entropy_unchecked(p0)
        })
        .collect()
}

/// Sum of the `d` smallest XOR entropies over nonzero masks: a floor on
/// `sum_j H(Y_j)` for every invertible linear transform. The zero mask is
/// excluded because an invertible matrix has no zero row.
pub fn linear_lower_bound(dist: &JointDistribution) -> f64 {
    let table = xor_entropy_table(dist);
    let mut vals: Vec<f64> = table[1..].to_vec();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals[..dist.d() as usize].iter().sum()
}

/// Greedy linear BICA: rows taken in ascending `H(U_i)` order (ties by
/// mask value), skipping rows dependent on those already chosen, until the
/// matrix reaches full rank. Returns the matrix and its true cost.
pub fn greedy_linear_bica(dist: &JointDistribution) -> Result<(BinaryMatrix, f64)> {
    let d = dist.d() as usize;
    let table = xor_entropy_table(dist);
    let mut masks: Vec<u64> = (1..dist.m() as u64).collect();
    masks.sort_by(|&a, &b| {
        table[a as usize]
            .partial_cmp(&table[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut basis: Vec<u64> = Vec::new();
    let mut rows: Vec<u64> = Vec::new();
    for &mask in &masks {
        if reduce_and_insert(&mut basis, mask) {
            rows.push(mask);
            if rows.len() == d {
                break;
            }
        }
    }
    debug_assert_eq!(rows.len(), d, "full rank is always reachable");
    let matrix = BinaryMatrix::new(rows);
    let transform = matrix.to_transform()?;
    Ok((matrix, cost(dist, &transform)))
}

/// Expected number of uniform row draws (with replacement) needed to
/// assemble a full-rank `d x d` GF(2) matrix:
/// `sum_{k=0}^{d-1} 2^d / (2^d - 2^k)`. The excess over `d` is at most 2
/// and tends to 1.6067.
pub fn expected_row_draws(d: u32) -> f64 {
    assert!(d >= 1 && d <= 63);
    let m = (1u64 << d) as f64;
    (0..d).map(|k| m / (m - (1u64 << k) as f64)).sum()
}
