//! Entropy-constrained vector quantization and its marginal-coding
//! variant.
//!
//! ECVQ alternates three steps on the Lagrangian `E{D} + λ E{l}`: biased
//! nearest-centroid assignment, ideal code lengths `-log2 p_i`, and
//! centroid updates. Each step minimizes the Lagrangian with the others
//! fixed, so the recorded trace never increases. The variant replaces the
//! length step: cluster indices are relabeled (order permutation by
//! default, the piecewise-linear relaxation when `k` is given) and each
//! cluster is charged the sum of its bits' marginal code lengths; a
//! keep-best rule against the previous relabeling preserves monotonicity.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bica::relax::relaxed_bica_binary;
use crate::error::{Error, Result};
use crate::prob::{binary_entropy_unchecked, JointDistribution};
use crate::transforms::{order_permutation, PermutationTransform};

/// Convergence threshold on the Lagrangian improvement.
pub const CONVERGENCE_TOL: f64 = 1e-9;

/// Clusters, centroids, code lengths and the Lagrangian trace of a solved
/// quantizer.
#[derive(Debug, Clone)]
pub struct QuantizerModel {
    /// Per-sample cluster index.
    pub assignments: Vec<usize>,
    /// Cluster centroids; dead clusters keep their last position.
    pub centroids: Vec<Vec<f64>>,
    /// Codeword lengths in bits (possibly non-integer); infinite for dead
    /// clusters.
    pub lengths: Vec<f64>,
    /// Cluster occupancy probabilities.
    pub probs: Vec<f64>,
    /// Lagrangian after every α/γ/β step, three entries per sweep.
    pub trace: Vec<f64>,
    /// Mean squared error per sample (summed over dimensions).
    pub distortion: f64,
    /// Mean codeword length per sample, bits.
    pub rate: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Sweep<'a> {
    samples: &'a [Vec<f64>],
    lambda: f64,
    assignments: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    lengths: Vec<f64>,
    probs: Vec<f64>,
    trace: Vec<f64>,
}

impl<'a> Sweep<'a> {
    fn new(
        samples: &'a [Vec<f64>],
        m: usize,
        lambda: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if m == 0 {
            return Err(Error::InvalidParameter("need at least one cluster".into()));
        }
        let dim = samples[0].len();
        if samples.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidParameter("ragged sample dimensions".into()));
        }
        // Centroids seeded from distinct random samples.
        let mut idx: Vec<usize> = (0..samples.len()).collect();
        idx.shuffle(rng);
        let centroids: Vec<Vec<f64>> = idx
            .iter()
            .take(m)
            .map(|&i| samples[i].clone())
            .collect();
        let m_actual = centroids.len();
        Ok(Self {
            samples,
            lambda,
            assignments: vec![0; samples.len()],
            centroids,
            lengths: vec![(m_actual as f64).log2().max(0.0); m_actual],
            probs: vec![0.0; m_actual],
            trace: Vec::new(),
        })
    }

    fn lagrangian(&self) -> f64 {
        let n = self.samples.len() as f64;
        let d: f64 = self
            .samples
            .iter()
            .zip(&self.assignments)
            .map(|(x, &i)| dist2(x, &self.centroids[i]))
            .sum();
        let l: f64 = self
            .assignments
            .iter()
            .map(|&i| self.lengths[i])
            .sum();
        d / n + self.lambda * l / n
    }

    /// α step: biased nearest-centroid assignment.
    fn assign(&mut self) {
        for (x, a) in self.samples.iter().zip(self.assignments.iter_mut()) {
            let mut best = f64::INFINITY;
            let mut best_i = *a;
            for (i, c) in self.centroids.iter().enumerate() {
                if self.lengths[i].is_infinite() {
                    continue;
                }
                let v = dist2(x, c) + self.lambda * self.lengths[i];
                if v < best {
                    best = v;
                    best_i = i;
                }
            }
            *a = best_i;
        }
        self.trace.push(self.lagrangian());
    }

    fn occupancy(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.centroids.len()];
        for &a in &self.assignments {
            counts[a] += 1;
        }
        counts
    }

    /// β step: centroids move to cluster means.
    fn recenter(&mut self) {
        let dim = self.samples[0].len();
        let counts = self.occupancy();
        let mut sums = vec![vec![0.0; dim]; self.centroids.len()];
        for (x, &a) in self.samples.iter().zip(&self.assignments) {
            for (s, v) in sums[a].iter_mut().zip(x) {
                *s += v;
            }
        }
        for (i, c) in self.centroids.iter_mut().enumerate() {
            if counts[i] > 0 {
                for (cc, s) in c.iter_mut().zip(&sums[i]) {
                    *cc = s / counts[i] as f64;
                }
            }
        }
        self.trace.push(self.lagrangian());
    }

    fn finish(mut self) -> QuantizerModel {
        let n = self.samples.len() as f64;
        let counts = self.occupancy();
        self.probs = counts.iter().map(|&c| c as f64 / n).collect();
        let distortion = self
            .samples
            .iter()
            .zip(&self.assignments)
            .map(|(x, &i)| dist2(x, &self.centroids[i]))
            .sum::<f64>()
            / n;
        let rate = self
            .assignments
            .iter()
            .map(|&i| self.lengths[i])
            .sum::<f64>()
            / n;
        QuantizerModel {
            assignments: self.assignments,
            centroids: self.centroids,
            lengths: self.lengths,
            probs: self.probs,
            trace: self.trace,
            distortion,
            rate,
        }
    }
}

/// Plain ECVQ: ideal joint code lengths `-log2 p_i`; empty clusters are
/// dropped (infinite length) and never reseeded, which keeps the
/// Lagrangian monotone.
pub fn ecvq(
    samples: &[Vec<f64>],
    m_clusters: usize,
    lambda: f64,
    max_iters: usize,
    rng: &mut impl Rng,
) -> Result<QuantizerModel> {
    let mut sweep = Sweep::new(samples, m_clusters, lambda, rng)?;
    let n = samples.len() as f64;
    let mut last = f64::INFINITY;
    for _ in 0..max_iters {
        sweep.assign();
        // γ step: ideal lengths from occupancy.
        let counts = sweep.occupancy();
        for (len, &c) in sweep.lengths.iter_mut().zip(&counts) {
            *len = if c > 0 {
                -((c as f64 / n).log2())
            } else {
                f64::INFINITY
            };
        }
        sweep.trace.push(sweep.lagrangian());
        sweep.recenter();
        let j = *sweep.trace.last().unwrap();
        if last - j < CONVERGENCE_TOL {
            break;
        }
        last = j;
    }
    Ok(sweep.finish())
}

/// Per-cluster marginal code lengths for a relabeling of the cluster
/// indices: cluster `i` costs the sum over bit positions of
/// `-log2 P(bit of g(i))` under the relabeled occupancy.
fn marginal_lengths(probs: &[f64], relabel: &PermutationTransform) -> Vec<f64> {
    let m = probs.len();
    let b = m.trailing_zeros();
    let mut relabeled = vec![0.0; m];
    for (i, &p) in probs.iter().enumerate() {
        relabeled[relabel.map(i as u32) as usize] = p;
    }
    // bit marginals of the relabeled occupancy
    let mut q = vec![0.0; b as usize];
    for (w, &p) in relabeled.iter().enumerate() {
        for (j, qj) in q.iter_mut().enumerate() {
            if w >> (b as usize - 1 - j) & 1 == 0 {
                *qj += p;
            }
        }
    }
    (0..m)
        .map(|i| {
            if probs[i] == 0.0 {
                return f64::INFINITY;
            }
            let w = relabel.map(i as u32) as usize;
            q.iter()
                .enumerate()
                .map(|(j, &qj)| {
                    let p_bit = if w >> (b as usize - 1 - j) & 1 == 0 {
                        qj
                    } else {
                        1.0 - qj
                    };
                    -p_bit.log2()
                })
                .sum()
        })
        .collect()
}

/// Expected marginal length `sum_i p_i len_i` of a relabeling; equals the
/// sum of bit-marginal entropies of the relabeled occupancy.
fn expected_marginal_length(probs: &[f64], relabel: &PermutationTransform) -> f64 {
    let m = probs.len();
    let b = m.trailing_zeros();
    let mut relabeled = vec![0.0; m];
    for (i, &p) in probs.iter().enumerate() {
        relabeled[relabel.map(i as u32) as usize] = p;
    }
    (0..b as usize)
        .map(|j| {
            let q: f64 = relabeled
                .iter()
                .enumerate()
                .filter(|(w, _)| w >> (b as usize - 1 - j) & 1 == 0)
                .map(|(_, &p)| p)
                .sum();
            binary_entropy_unchecked(q)
        })
        .sum()
}

/// ECVQ with component-wise coding of the cluster index: the γ step
/// relabels the `2^b` cluster indices and charges marginal code lengths.
/// Requires a power-of-two cluster count.
pub fn bica_ecvq(
    samples: &[Vec<f64>],
    m_clusters: usize,
    lambda: f64,
    k: Option<usize>,
    max_iters: usize,
    rng: &mut impl Rng,
) -> Result<QuantizerModel> {
    if !m_clusters.is_power_of_two() || m_clusters < 2 {
        return Err(Error::InvalidParameter(format!(
            "component coding needs a power-of-two cluster count, got {m_clusters}"
        )));
    }
    let mut sweep = Sweep::new(samples, m_clusters, lambda, rng)?;
    if sweep.centroids.len() < m_clusters {
        return Err(Error::InvalidParameter(format!(
            "need at least {m_clusters} samples to seed the clusters"
        )));
    }
    let n = samples.len() as f64;
    let mut relabel = PermutationTransform::identity(m_clusters);
    let mut last = f64::INFINITY;
    for _ in 0..max_iters {
        sweep.assign();
        // γ step: relabel cluster indices, keep-best against the previous
        // relabeling, then charge marginal code lengths.
        let counts = sweep.occupancy();
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        let dist = JointDistribution::from_binary_probs(probs.clone())?;
        let candidate = match k {
            Some(k) => relaxed_bica_binary(&dist, k)?.transform,
            None => order_permutation(&dist),
        };
        if expected_marginal_length(&probs, &candidate)
            <= expected_marginal_length(&probs, &relabel)
        {
            relabel = candidate;
        }
        sweep.lengths = marginal_lengths(&probs, &relabel);
        sweep.trace.push(sweep.lagrangian());
        sweep.recenter();
        let j = *sweep.trace.last().unwrap();
        if last - j < CONVERGENCE_TOL {
            break;
        }
        last = j;
    }
    Ok(sweep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gaussian_mixture(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        // Two-component 2D mixture: standard normals around (-2,0), (2,1).
        (0..n)
            .map(|_| {
                let (cx, cy) = if rng.random::<f64>() < 0.5 { (-2.0, 0.0) } else { (2.0, 1.0) };
                let u1: f64 = rng.random::<f64>().max(1e-12);
                let u2: f64 = rng.random();
                let r = (-2.0 * u1.ln()).sqrt();
                let theta = 2.0 * std::f64::consts::PI * u2;
                vec![cx + r * theta.cos(), cy + r * theta.sin()]
            })
            .collect()
    }

    #[test]
    fn lagrangian_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let samples = gaussian_mixture(500, &mut rng);
        for lambda in [0.0, 0.1, 1.0] {
            let model = ecvq(&samples, 8, lambda, 30, &mut rng).unwrap();
            for w in model.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "trace increased: {} -> {}", w[0], w[1]);
            }
        }
    }

    /// Plain Lloyd/k-means with the same init draw and tie rules.
    fn lloyd(samples: &[Vec<f64>], m: usize, iters: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut sweep = Sweep::new(samples, m, 0.0, rng).unwrap();
        for _ in 0..iters {
            sweep.assign();
            sweep.trace.push(sweep.lagrangian());
            sweep.recenter();
        }
        sweep.trace
    }

    #[test]
    fn lambda_zero_is_lloyd() {
        let mut rng1 = ChaCha8Rng::seed_from_u64(109);
        let mut rng2 = ChaCha8Rng::seed_from_u64(109);
        let samples = gaussian_mixture(400, &mut rng1);
        let samples2 = samples.clone();
        let iters = 12;
        let a = ecvq(&samples, 6, 0.0, iters, &mut rng1).unwrap();
        let b = lloyd(&samples2, 6, iters, &mut rng2);
        // Same initialization draw, so identical distortion traces. The
        // ecvq run may stop early on convergence; compare the prefix.
        for (x, y) in a.trace.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn huge_lambda_collapses_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let samples = gaussian_mixture(400, &mut rng);
        let model = ecvq(&samples, 8, 1e6, 50, &mut rng).unwrap();
        assert!(model.rate < 0.2, "rate {} should collapse", model.rate);
    }

    #[test]
    fn sweep_trades_rate_for_distortion() {
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        let samples = gaussian_mixture(600, &mut rng);
        let low = ecvq(&samples, 16, 0.0, 40, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let high = ecvq(&samples, 16, 5.0, 40, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(high.rate <= low.rate + 1e-9);
        assert!(high.distortion >= low.distortion - 1e-9);
    }

    #[test]
    fn marginal_lengths_match_joint_on_product_occupancy() {
        // Independent index bits: sum of marginal lengths equals the joint
        // ideal length for every cluster.
        let (a, b) = (0.3, 0.45);
        let probs = vec![
            a * b,
            a * (1.0 - b),
            (1.0 - a) * b,
            (1.0 - a) * (1.0 - b),
        ];
        let id = PermutationTransform::identity(4);
        let lens = marginal_lengths(&probs, &id);
        for (i, &p) in probs.iter().enumerate() {
            assert!((lens[i] - (-p.log2())).abs() < 1e-9, "cluster {i}");
        }
        let e = expected_marginal_length(&probs, &id);
        let joint: f64 = probs.iter().map(|&p| -p * p.log2()).sum();
        assert!((e - joint).abs() < 1e-9);
    }

    #[test]
    fn bica_variant_keep_best_monotone_and_close_to_plain() {
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        let samples = gaussian_mixture(600, &mut rng);
        for lambda in [0.05, 0.5, 2.0] {
            let plain = ecvq(&samples, 16, lambda, 40, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
            let variant =
                bica_ecvq(&samples, 16, lambda, None, 40, &mut ChaCha8Rng::seed_from_u64(7))
                    .unwrap();
            for w in variant.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "variant trace increased");
            }
            assert!(
                (variant.rate - plain.rate).abs() < 0.35,
                "lambda={lambda}: rates {} vs {}",
                variant.rate,
                plain.rate
            );
        }
    }

    #[test]
    fn bica_variant_needs_power_of_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(137);
        let samples = gaussian_mixture(100, &mut rng);
        assert!(bica_ecvq(&samples, 6, 0.1, None, 5, &mut rng).is_err());
    }
}
