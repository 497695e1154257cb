//! Probability distributions over finite alphabets, their entropies and
//! bit-marginals, and the synthetic source generators used by the
//! experiment harness.
//!
//! A [`JointDistribution`] stores the law of a `d`-component random vector
//! where each component takes `q` values, as a flat vector over the
//! `m = q^d` words. Symbol `i` is read as its `d`-digit base-`q` expansion;
//! for the binary case (`q = 2`) component `j = 0` is the **most
//! significant** bit. All transforms in this crate follow that convention.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::compensated_sum;

/// Normalization tolerance enforced on every constructed distribution.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Binary entropy `h_b(p) = -p log2 p - (1-p) log2 (1-p)`, with
/// `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(binary_entropy_unchecked(p))
}

/// `h_b` without the domain check, for hot loops that already guarantee
/// `p` is a probability. Clamps tiny negative rounding residue to zero.
#[inline]
pub fn binary_entropy_unchecked(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h
}

/// Entropy of an arbitrary probability slice, in bits, with compensated
/// accumulation. Zero entries contribute nothing.
pub fn entropy_of(probs: &[f64]) -> f64 {
    compensated_sum(probs.iter().map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 }))
}

/// A probability distribution over `m = q^d` words.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    q: u32,
    d: u32,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Builds a distribution over `q^d` words, validating non-negativity
    /// and normalization to within [`NORMALIZATION_TOL`].
    pub fn new(q: u32, d: u32, probs: Vec<f64>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!(
                "component alphabet size must be >= 2, got {q}"
            )));
        }
        let m = (q as u128).checked_pow(d).ok_or_else(|| {
            Error::InvalidParameter(format!("alphabet size q^d overflows: q={q} d={d}"))
        })?;
        if m != probs.len() as u128 {
            return Err(Error::InvalidDistribution(format!(
                "expected {m} probabilities for q={q}, d={d}, got {}",
                probs.len()
            )));
        }
        if let Some(&bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "negative or non-finite probability {bad}"
            )));
        }
        let sum = compensated_sum(probs.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}, expected 1 within {NORMALIZATION_TOL}"
            )));
        }
        Ok(Self { q, d, probs })
    }

    /// Binary distribution over `m = 2^d` words; `m` must be a power of two.
    pub fn from_binary_probs(probs: Vec<f64>) -> Result<Self> {
        let m = probs.len();
        if m == 0 || !m.is_power_of_two() {
            return Err(Error::InvalidDistribution(format!(
                "binary alphabet size must be a power of two, got {m}"
            )));
        }
        Self::new(2, m.trailing_zeros(), probs)
    }

    /// Uniform distribution over `2^d` words.
    pub fn uniform(d: u32) -> Self {
        let m = 1usize << d;
        Self {
            q: 2,
            d,
            probs: vec![1.0 / m as f64; m],
        }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Number of components.
    pub fn d(&self) -> u32 {
        self.d
    }

    /// Alphabet size `q^d`.
    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_binary(&self) -> bool {
        self.q == 2
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// Digit `j` of `symbol` in the base-`q` expansion; digit 0 is the most
    /// significant.
    #[inline]
    pub fn digit(&self, symbol: usize, j: u32) -> u32 {
        debug_assert!(j < self.d);
        (symbol / (self.q as usize).pow(self.d - 1 - j) % self.q as usize) as u32
    }

    /// Marginal probabilities `pi_j = P(Y_j = 0)` of each of the `d` bits,
    /// most significant first. Binary distributions only.
    pub fn marginal_bit_probs(&self) -> Vec<f64> {
        assert!(self.is_binary(), "bit marginals require a binary alphabet");
        let d = self.d;
        (0..d)
            .map(|j| {
                let bit = 1usize << (d - 1 - j);
                compensated_sum(
                    self.probs
                        .iter()
                        .enumerate()
                        .filter(|(sym, _)| sym & bit == 0)
                        .map(|(_, &p)| p),
                )
            })
            .collect()
    }

    /// Marginal distribution of component `j` over its `q` values.
    pub fn digit_marginal(&self, j: u32) -> Vec<f64> {
        let mut marg = vec![0.0; self.q as usize];
        for (sym, &p) in self.probs.iter().enumerate() {
            marg[self.digit(sym, j) as usize] += p;
        }
        marg
    }

    /// Sum of the component marginal entropies `sum_j H(Y_j)`. For binary
    /// alphabets this is `sum_j h_b(pi_j)`.
    pub fn sum_marginal_entropies(&self) -> f64 {
        if self.is_binary() {
            self.marginal_bit_probs()
                .into_iter()
                .map(binary_entropy_unchecked)
                .sum()
        } else {
            (0..self.d).map(|j| entropy_of(&self.digit_marginal(j))).sum()
        }
    }

    /// Draws `n` i.i.d. symbols by inverse-CDF sampling.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<u32> {
        let mut cdf = Vec::with_capacity(self.m());
        let mut acc = 0.0;
        for &p in &self.probs {
            acc += p;
            cdf.push(acc);
        }
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                match cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
                    Ok(i) | Err(i) => (i.min(self.m() - 1)) as u32,
                }
            })
            .collect()
    }
}

/// Observed symbol counts together with the sample size and the number of
/// distinct observed symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalCounts {
    pub counts: Vec<u64>,
    pub n: u64,
    pub n0: usize,
}

/// Zipf distribution `P(k) = k^-s / sum_{l=1..m} l^-s`, symbol `k-1`
/// carrying the mass of rank `k`. `s = 0` gives the uniform distribution.
pub fn gen_zipf(m: usize, s: f64) -> Result<JointDistribution> {
    if m == 0 {
        return Err(Error::InvalidParameter("alphabet size must be >= 1".into()));
    }
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "skewness must be non-negative, got {s}"
        )));
    }
    let weights: Vec<f64> = (1..=m).map(|k| (k as f64).powf(-s)).collect();
    let total = compensated_sum(weights.iter().copied());
    let probs: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
    if m.is_power_of_two() && m > 1 {
        JointDistribution::from_binary_probs(probs)
    } else {
        JointDistribution::new(m as u32, 1, probs)
    }
}

/// A draw from the uniform (flat Dirichlet) simplex over `m` symbols, via
/// normalized exponential spacings.
pub fn gen_uniform_simplex(m: usize, rng: &mut impl Rng) -> JointDistribution {
    assert!(m >= 1 && m.is_power_of_two(), "simplex draws require m = 2^d");
    let mut v: Vec<f64> = (0..m)
        .map(|_| {
            let u: f64 = rng.random();
            // -ln of a uniform in (0, 1]; flipping to 1-u avoids ln(0).
            -(1.0 - u).ln()
        })
        .collect();
    let total = compensated_sum(v.iter().copied());
    for x in &mut v {
        *x /= total;
    }
    JointDistribution::from_binary_probs(v).expect("normalized spacings form a distribution")
}

/// Joint law of `d` consecutive bits of a stationary symmetric binary
/// Markov chain with flip probability `alpha`.
pub fn gen_markov_symmetric(d: u32, alpha: f64) -> Result<JointDistribution> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "flip probability must lie in (0, 1), got {alpha}"
        )));
    }
    let m = 1usize << d;
    let probs: Vec<f64> = (0..m)
        .map(|sym| {
            // The word probability depends only on the transition count;
            // computing it canonically keeps equal-probability words
            // bit-identical.
            let mut transitions = 0;
            for j in 1..d {
                let prev = (sym >> (d - j)) & 1;
                let cur = (sym >> (d - 1 - j)) & 1;
                if prev != cur {
                    transitions += 1;
                }
            }
            0.5 * alpha.powi(transitions) * (1.0 - alpha).powi(d as i32 - 1 - transitions)
        })
        .collect();
    JointDistribution::from_binary_probs(probs)
}

/// Counts and maximum-likelihood probabilities of an observed sequence.
pub fn empirical_distribution(
    samples: &[u32],
    m: usize,
) -> Result<(EmpiricalCounts, JointDistribution)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = vec![0u64; m];
    for &s in samples {
        let s = s as usize;
        if s >= m {
            return Err(Error::UnknownSymbol {
                symbol: s as u64,
                m,
            });
        }
        counts[s] += 1;
    }
    let n = samples.len() as u64;
    let n0 = counts.iter().filter(|&&c| c > 0).count();
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let dist = if m.is_power_of_two() && m > 1 {
        JointDistribution::from_binary_probs(probs)?
    } else {
        JointDistribution::new(m as u32, 1, probs)?
    };
    Ok((EmpiricalCounts { counts, n, n0 }, dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // High-precision evaluation of the formula at p = 1/4.
        assert!((binary_entropy(0.25).unwrap() - 0.811_278_124_459_132_9).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn entropy_examples() {
        let u = JointDistribution::uniform(2);
        assert!((u.entropy() - 2.0).abs() < 1e-15);

        let dyadic =
            JointDistribution::from_binary_probs(vec![0.5, 0.25, 0.25, 0.0]).unwrap();
        assert!((dyadic.entropy() - 1.5).abs() < 1e-15);

        let d = JointDistribution::from_binary_probs(vec![0.6, 0.3, 0.1, 0.0]).unwrap();
        assert!((d.entropy() - 1.295_461_844_238_321_8).abs() < 1e-12);
    }

    #[test]
    fn marginals_examples() {
        let u = JointDistribution::uniform(3);
        for pi in u.marginal_bit_probs() {
            assert!((pi - 0.5).abs() < 1e-15);
        }
        assert!((u.sum_marginal_entropies() - 3.0).abs() < 1e-12);

        let mut point = vec![0.0; 8];
        point[0] = 1.0;
        let point = JointDistribution::from_binary_probs(point).unwrap();
        for pi in point.marginal_bit_probs() {
            assert_eq!(pi, 1.0);
        }
        assert_eq!(point.sum_marginal_entropies(), 0.0);

        // d=2 worked example: p(00)=0.1 p(01)=0.2 p(10)=0.3 p(11)=0.4.
        let d = JointDistribution::from_binary_probs(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let pi = d.marginal_bit_probs();
        assert!((pi[0] - 0.3).abs() < 1e-15, "msb marginal");
        assert!((pi[1] - 0.4).abs() < 1e-15, "lsb marginal");
        assert!((d.sum_marginal_entropies() - 1.852_241_493_685_361_3).abs() < 1e-12);
    }

    #[test]
    fn zipf_examples() {
        let u = gen_zipf(8, 0.0).unwrap();
        for &p in u.probs() {
            assert!((p - 0.125).abs() < 1e-15);
        }

        let z2 = gen_zipf(2, 1.0).unwrap();
        assert!((z2.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((z2.probs()[1] - 1.0 / 3.0).abs() < 1e-15);

        let z4 = gen_zipf(4, 1.0).unwrap();
        for (p, want) in z4.probs().iter().zip([0.48, 0.24, 0.16, 0.12]) {
            assert!((p - want).abs() < 1e-15);
        }

        // Monotone non-increasing in the symbol index.
        let z = gen_zipf(1 << 10, 1.2).unwrap();
        for w in z.probs().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn simplex_mean_and_min_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 8;
        let trials = 100_000;
        let mut sum_first = 0.0;
        let mut sum_min = 0.0;
        for _ in 0..trials {
            let d = gen_uniform_simplex(m, &mut rng);
            assert!((compensated_sum(d.probs().iter().copied()) - 1.0).abs() < 1e-12);
            assert!(d.probs().iter().all(|&p| p >= 0.0));
            sum_first += d.probs()[0];
            sum_min += d.probs().iter().cloned().fold(f64::INFINITY, f64::min);
        }
        let mean_first = sum_first / trials as f64;
        let mean_min = sum_min / trials as f64;
        // E[coordinate] = 1/m; sigma of the estimator ~ (1/m)/sqrt(trials).
        assert!(
            (mean_first - 1.0 / m as f64).abs() < 3.0 * (1.0 / m as f64) / (trials as f64).sqrt(),
            "mean coordinate {mean_first}"
        );
        // E[min] = 1/m^2 (order-statistics expectation at i=1).
        assert!(
            (mean_min - 1.0 / (m * m) as f64).abs() < 1e-3,
            "mean min coordinate {mean_min}"
        );
    }

    #[test]
    fn markov_examples() {
        let m = gen_markov_symmetric(2, 0.1).unwrap();
        assert!((m.probs()[0] - 0.45).abs() < 1e-15);
        assert!((m.probs()[1] - 0.05).abs() < 1e-15);
        assert!((m.probs()[2] - 0.05).abs() < 1e-15);
        assert!((m.probs()[3] - 0.45).abs() < 1e-15);

        let u = gen_markov_symmetric(3, 0.5).unwrap();
        for &p in u.probs() {
            assert!((p - 0.125).abs() < 1e-15);
        }

        // A symmetric chain's word probability depends only on the
        // transition count, so d=4 yields d = 4 distinct values; the
        // class-count bound d(d-1)+2 = 14 from the general stationary
        // analysis still holds as an upper bound.
        let m4 = gen_markov_symmetric(4, 0.3).unwrap();
        let mut vals: Vec<u64> = m4.probs().iter().map(|p| p.to_bits()).collect();
        vals.sort();
        vals.dedup();
        assert_eq!(vals.len(), 4);
        assert!(vals.len() <= 4 * 3 + 2);
    }

    #[test]
    fn empirical_examples() {
        let (c, d) = empirical_distribution(&[0, 0, 1, 1], 2).unwrap();
        assert_eq!(c.n, 4);
        assert_eq!(c.n0, 2);
        assert_eq!(d.probs(), &[0.5, 0.5]);
        assert!((d.entropy() - 1.0).abs() < 1e-15);

        let (c, d) = empirical_distribution(&[0], 4).unwrap();
        assert_eq!(c.n0, 1);
        assert_eq!(d.entropy(), 0.0);

        assert!(matches!(empirical_distribution(&[], 4), Err(Error::EmptyInput)));
        assert!(empirical_distribution(&[4], 4).is_err());
    }

    #[test]
    fn empirical_entropy_converges_on_zipf() {
        let m = 1 << 12;
        let z = gen_zipf(m, 1.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let samples = z.sample(100_000, &mut rng);
        let (_, emp) = empirical_distribution(&samples, m).unwrap();
        assert!(
            (emp.entropy() - z.entropy()).abs() < 0.1,
            "empirical {} vs true {}",
            emp.entropy(),
            z.entropy()
        );
    }

    #[test]
    fn total_correlation_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d = gen_uniform_simplex(16, &mut rng);
            let h = d.entropy();
            let s = d.sum_marginal_entropies();
            assert!(h >= -1e-12 && h <= 4.0 + 1e-12);
            assert!(s >= -1e-12 && s <= 4.0 + 1e-12);
            assert!(s >= h - 1e-9, "sum marginals {s} < joint {h}");
        }
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(JointDistribution::from_binary_probs(vec![0.5, 0.6]).is_err());
        assert!(JointDistribution::from_binary_probs(vec![0.5, -0.5, 0.5, 0.5]).is_err());
        assert!(JointDistribution::from_binary_probs(vec![0.5, 0.2, 0.3]).is_err());
    }
}
