//! Exact solvers: recovery of underlying independent components, and a
//! branch-and-bound search for the globally optimal permutation.
//!
//! Recovery peels one Bernoulli parameter per level. With the sorted word
//! probabilities `p_1 <= ... <= p_m`, the set `Λ_k` holds the probabilities
//! of all words whose bits above `k` are zero; the smallest sorted entry
//! not yet in `Λ_k` exposes the ratio `(1 - π_{k+1}) / π_{k+1}`, and `Λ_k`
//! doubles by a single sorted merge.
//!
//! The search tree allocates the ascending probabilities to words along
//! the zero-bit-set partial order: a word may receive the next probability
//! only once every word whose zero-bit set strictly contains its own has
//! been filled. The optimum over all `m!` permutations lies on such an
//! allocation, so branch and bound over this tree is exact.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::prob::{binary_entropy_unchecked, JointDistribution};
use crate::transforms::PermutationTransform;

/// Relative tolerance used when matching floating-point products against
/// list entries during recovery.
pub const RECOVERY_REL_TOL: f64 = 1e-9;

/// Default dimension cap for the branch-and-bound solver; the allocation
/// tree grows super-exponentially in `d`.
pub const BNB_DEFAULT_MAX_D: u32 = 4;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= RECOVERY_REL_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Recovers the parameters of underlying independent Bernoulli components,
/// assuming the distribution is an invertible mixing of such a product.
///
/// Returns the parameters sorted ascending (each in `(0, 1/2]`) and the
/// transform mapping the input onto the product form (parameter `j` is the
/// zero-probability of output bit `j`, most significant first).
pub fn recover_independent_components(
    dist: &JointDistribution,
) -> Result<(Vec<f64>, PermutationTransform)> {
    if !dist.is_binary() {
        return Err(Error::InvalidParameter(
            "component recovery runs on binary alphabets".into(),
        ));
    }
    let d = dist.d() as usize;
    let m = dist.m();
    if d == 0 {
        return Err(Error::InvalidParameter("need at least one component".into()));
    }

    // symbols sorted by ascending probability
    let mut order: Vec<u32> = (0..m as u32).collect();
    order.sort_by(|&a, &b| {
        dist.probs()[a as usize]
            .partial_cmp(&dist.probs()[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    let sorted: Vec<f64> = order.iter().map(|&s| dist.probs()[s as usize]).collect();

    if sorted[0] <= 0.0 {
        return Err(Error::NotDecomposable(
            "a zero word probability implies a degenerate component".into(),
        ));
    }

    let p1 = sorted[0];
    let mut params = Vec::with_capacity(d);
    // Λ_k, sorted ascending; starts as {p_1}.
    let mut lambda = vec![p1];

    for _level in 0..d {
        // Smallest sorted probability not currently matched by Λ, walking
        // both sorted lists as multisets.
        let mut li = 0;
        let mut novel = None;
        for &p in &sorted {
            if li < lambda.len() && close(p, lambda[li]) {
                li += 1;
            } else {
                novel = Some(p);
                break;
            }
        }
        let v = novel.ok_or_else(|| {
            Error::NotDecomposable("ran out of candidates before recovering all parameters".into())
        })?;
        // v = p_1 (1 - π) / π  =>  π = p_1 / (p_1 + v)
        let pi = p1 / (p1 + v);
        if !(pi > 0.0 && pi <= 0.5 + RECOVERY_REL_TOL) {
            return Err(Error::NotDecomposable(format!(
                "candidate parameter {pi} outside (0, 1/2]"
            )));
        }
        params.push(pi.min(0.5));
        // Λ_{k+1} = merge(Λ_k, Λ_k * (1-π)/π), both already sorted.
        let ratio = v / p1;
        let scaled: Vec<f64> = lambda.iter().map(|&x| x * ratio).collect();
        let mut merged = Vec::with_capacity(lambda.len() * 2);
        let (mut i, mut j) = (0, 0);
        while i < lambda.len() || j < scaled.len() {
            if j >= scaled.len() || (i < lambda.len() && lambda[i] <= scaled[j]) {
                merged.push(lambda[i]);
                i += 1;
            } else {
                merged.push(scaled[j]);
                j += 1;
            }
        }
        lambda = merged;
    }

    // Final validation: the 2^d products must reproduce the sorted input.
    for (a, b) in lambda.iter().zip(&sorted) {
        if !close(*a, *b) {
            return Err(Error::NotDecomposable(format!(
                "recovered products do not reproduce the distribution ({a} vs {b})"
            )));
        }
    }

    // params came out largest-first (π_1 >= π_2 >= ...); report ascending
    // as π_d <= ... <= π_1.
    params.reverse();

    // Map the i-th smallest input symbol to the word whose product
    // probability has rank i in the product distribution.
    let product = product_distribution(&params)?;
    let mut prod_order: Vec<u32> = (0..m as u32).collect();
    prod_order.sort_by(|&a, &b| {
        product.probs()[a as usize]
            .partial_cmp(&product.probs()[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut table = vec![0u32; m];
    for (rank, &sym) in order.iter().enumerate() {
        table[sym as usize] = prod_order[rank];
    }
    let transform = PermutationTransform::from_table(table)?;
    Ok((params, transform))
}

/// Product distribution of independent Bernoulli components; `params[j]`
/// is the probability that bit `j` (most significant first) equals 0.
pub fn product_distribution(params: &[f64]) -> Result<JointDistribution> {
    let d = params.len() as u32;
    if d == 0 || d > 30 {
        return Err(Error::InvalidParameter("need 1..=30 parameters".into()));
    }
    if let Some(&p) = params.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    let m = 1usize << d;
    let probs: Vec<f64> = (0..m)
        .map(|sym| {
            params
                .iter()
                .enumerate()
                .map(|(j, &pi)| {
                    if sym >> (d as usize - 1 - j) & 1 == 0 {
                        pi
                    } else {
                        1.0 - pi
                    }
                })
                .product()
        })
        .collect();
    JointDistribution::from_binary_probs(probs)
}

struct OrdF64(f64);
impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.0.total_cmp(&other.0))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Globally minimal `sum_j H(Y_j)` over all permutations, by best-first
/// branch and bound over partial-order-respecting allocations. Returns the
/// optimal transform and its cost `sum H(Y_j) - H(X)`.
pub fn branch_and_bound_optimal(
    dist: &JointDistribution,
) -> Result<(PermutationTransform, f64)> {
    branch_and_bound_with_limit(dist, BNB_DEFAULT_MAX_D, true)
}

pub(crate) fn branch_and_bound_with_limit(
    dist: &JointDistribution,
    max_d: u32,
    prune: bool,
) -> Result<(PermutationTransform, f64)> {
    if !dist.is_binary() {
        return Err(Error::InvalidParameter(
            "branch and bound runs on binary alphabets".into(),
        ));
    }
    let d = dist.d();
    if d > max_d {
        return Err(Error::SizeLimit(format!(
            "branch and bound is limited to d <= {max_d} (the allocation tree over m = 2^d \
             words grows super-exponentially); got d = {d}"
        )));
    }
    let m = dist.m();

    let mut order: Vec<u32> = (0..m as u32).collect();
    order.sort_by(|&a, &b| {
        dist.probs()[a as usize]
            .partial_cmp(&dist.probs()[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    let sorted: Vec<f64> = order.iter().map(|&s| dist.probs()[s as usize]).collect();
    let mut prefix = vec![0.0; m + 1];
    for (i, &p) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + p;
    }
    let half = m / 2;

    // Lower bound of a partial allocation: give every bit the smallest
    // unallocated probabilities for all of its remaining zero words. Each
    // final marginal stays <= 1/2 on this tree, and h_b is increasing
    // there, so the sum of h_b of these optimistic marginals never exceeds
    // the objective of any completion.
    let lower_bound = |assignment: &[u32], partial: &[f64]| -> f64 {
        let next_rank = assignment.len();
        (0..d as usize)
            .map(|j| {
                let zeros_used = assignment
                    .iter()
                    .filter(|&&w| w as usize >> (d as usize - 1 - j) & 1 == 0)
                    .count();
                let remaining = half - zeros_used;
                let optimistic = partial[j] + (prefix[next_rank + remaining] - prefix[next_rank]);
                binary_entropy_unchecked(optimistic.min(0.5))
            })
            .sum()
    };

    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut heap: BinaryHeap<Reverse<(OrdF64, Vec<u32>)>> = BinaryHeap::new();
    heap.push(Reverse((OrdF64(lower_bound(&[], &vec![0.0; d as usize])), Vec::new())));

    while let Some(Reverse((OrdF64(bound), assignment))) = heap.pop() {
        if let Some((best_obj, _)) = &best {
            if prune && bound >= *best_obj - 1e-15 {
                continue;
            }
        }
        let rank = assignment.len();
        if rank == m {
            let obj = final_objective(&assignment, &sorted, d);
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, assignment));
            }
            continue;
        }
        let allocated: u64 = assignment.iter().fold(0, |acc, &w| acc | 1 << w);
        // Frontier: unallocated words whose every parent (one 1-bit
        // cleared) is already allocated.
        for w in 0..m as u32 {
            if allocated >> w & 1 == 1 {
                continue;
            }
            let mut ready = true;
            for j in 0..d {
                let bit = 1u32 << j;
                if w & bit != 0 && allocated >> (w ^ bit) & 1 == 0 {
                    ready = false;
                    break;
                }
            }
            if !ready {
                continue;
            }
            let mut child = assignment.clone();
            child.push(w);
            let partial = partials(&child, &sorted, d);
            let child_bound = lower_bound(&child, &partial);
            if let Some((best_obj, _)) = &best {
                if prune && child_bound >= *best_obj - 1e-15 {
                    continue;
                }
            }
            heap.push(Reverse((OrdF64(child_bound), child)));
        }
    }

    let (best_obj, assignment) = best.expect("the allocation tree always has leaves");
    let mut table = vec![0u32; m];
    for (rank, &word) in assignment.iter().enumerate() {
        table[order[rank] as usize] = word;
    }
    let transform = PermutationTransform::from_table(table)?;
    Ok((transform, best_obj - dist.entropy()))
}

fn partials(assignment: &[u32], sorted: &[f64], d: u32) -> Vec<f64> {
    let mut partial = vec![0.0; d as usize];
    for (rank, &w) in assignment.iter().enumerate() {
        for (j, p) in partial.iter_mut().enumerate() {
            if w >> (d as usize - 1 - j) & 1 == 0 {
                *p += sorted[rank];
            }
        }
    }
    partial
}

fn final_objective(assignment: &[u32], sorted: &[f64], d: u32) -> f64 {
    partials(assignment, sorted, d)
        .into_iter()
        .map(binary_entropy_unchecked)
        .sum()
}
