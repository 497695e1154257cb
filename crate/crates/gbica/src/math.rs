//! Small numeric helpers: compensated summation, digamma, harmonic numbers.

/// Neumaier-compensated sum. Accurate enough to validate distributions
/// against a 1e-12 normalization tolerance even at 2^20 entries.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Digamma function via the usual recurrence-plus-asymptotic-series scheme.
///
/// Arguments are shifted up until `x >= 12`, where the asymptotic expansion
/// in inverse even powers is accurate to well below 1e-13.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma requires a positive argument, got {x}");
    let mut x = x;
    let mut result = 0.0;
    while x < 12.0 {
        result -= 1.0 / x;
        x += 1.0;
    }
    // psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    result += x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2
                    * (1.0 / 120.0
                        - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    result
}

/// Harmonic number `K_m = sum_{k=1..m} 1/k`, compensated.
pub fn harmonic(m: u64) -> f64 {
    // Summed smallest-first so the compensation has little to do.
    compensated_sum((1..=m).rev().map(|k| 1.0 / k as f64))
}

/// `ceil(log2(d!))` — the bit cost of describing a permutation of `d` items.
pub fn log2_factorial_ceil(d: u32) -> u64 {
    if d <= 1 {
        return 0;
    }
    if d <= 33 {
        // 33! < 2^123 fits in u128; take the exact ceiling.
        let mut f: u128 = 1;
        for i in 2..=d as u128 {
            f *= i;
        }
        let bits = 128 - f.leading_zeros() as u64;
        if f.is_power_of_two() {
            bits - 1
        } else {
            bits
        }
    } else {
        (2..=d as u64).map(|i| (i as f64).log2()).sum::<f64>().ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digamma_known_values() {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-12);
        assert!((digamma(2.0) - (1.0 - EULER_GAMMA)).abs() < 1e-12);
        // psi(x+1) = psi(x) + 1/x
        for &x in &[0.3, 1.7, 4.2, 11.0] {
            assert!((digamma(x + 1.0) - digamma(x) - 1.0 / x).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_matches_digamma() {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        for &m in &[1u64, 2, 10, 1000, 1 << 16] {
            let via_psi = digamma(m as f64 + 1.0) + EULER_GAMMA;
            assert!(
                (harmonic(m) - via_psi).abs() < 1e-10,
                "m={m}: {} vs {}",
                harmonic(m),
                via_psi
            );
        }
    }

    #[test]
    fn log2_factorial_small() {
        assert_eq!(log2_factorial_ceil(0), 0);
        assert_eq!(log2_factorial_ceil(1), 0);
        assert_eq!(log2_factorial_ceil(2), 1);
        assert_eq!(log2_factorial_ceil(3), 3); // log2(6) = 2.585
        assert_eq!(log2_factorial_ceil(4), 5); // log2(24) = 4.585
        assert_eq!(log2_factorial_ceil(12), 29); // log2(479001600) = 28.835
    }

    #[test]
    fn compensated_sum_is_stable() {
        let n = 1 << 20;
        let v = vec![1.0 / n as f64; n];
        assert!((compensated_sum(v) - 1.0).abs() < 1e-14);
    }
}
