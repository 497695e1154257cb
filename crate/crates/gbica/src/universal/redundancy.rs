//! Worst-case minimax redundancy formulas for large-alphabet universal
//! coding, plus the patterns (dictionary + pattern) bound and the
//! block-wise size accounting.

use crate::error::{Error, Result};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Which asymptotic regime a redundancy figure was computed under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// `m = o(n)`: alphabet small next to the sequence.
    MSmall,
    /// `n = o(m)`: alphabet large next to the sequence.
    NSmall,
    /// `m = alpha n + l(n)`.
    Theta { alpha: f64, l: f64 },
    /// Pick by the m/n ratio: `m/n <= 0.1` small, `>= 10` large, otherwise
    /// Theta with `alpha = m/n`, `l = 0`.
    Auto,
}

/// Bits of overhead under a named regime or method, with its inputs echoed.
#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyEstimate {
    pub bits: f64,
    pub method: String,
    pub m: u64,
    pub n: u64,
}

/// Leading-term worst-case minimax redundancy of i.i.d. coding at alphabet
/// size `m` and sequence length `n`.
///
/// - `m = o(n)`: `(m-1)/2 log2(n/m) + (m/2) log2 e + (m log2 e / 3) sqrt(m/n)`
/// - `n = o(m)`: `n log2(m/n) + (3/2)(n^2/m) log2 e - (3/2)(n/m) log2 e`
/// - `m = alpha n + l(n)`: `n log2 B_a + l log2 C_a - log2 sqrt(A_a)` with
///   `C_a = 1/2 + sqrt(1 + 4/alpha)/2`, `A_a = C_a + 2/alpha`,
///   `B_a = alpha C_a^(alpha+2) e^(-1/C_a)`.
pub fn minimax_redundancy(m: u64, n: u64, regime: Regime) -> Result<RedundancyEstimate> {
    if m < 2 || n < 1 {
        return Err(Error::InvalidParameter(format!(
            "need m >= 2 and n >= 1, got m={m}, n={n}"
        )));
    }
    let mf = m as f64;
    let nf = n as f64;
    let (bits, method) = match regime {
        Regime::MSmall => {
            let bits = (mf - 1.0) / 2.0 * (nf / mf).log2()
                + mf / 2.0 * LOG2_E
                + mf * LOG2_E / 3.0 * (mf / nf).sqrt();
            (bits, "m=o(n)".to_string())
        }
        Regime::NSmall => {
            let bits = nf * (mf / nf).log2() + 1.5 * nf * nf / mf * LOG2_E
                - 1.5 * nf / mf * LOG2_E;
            (bits, "n=o(m)".to_string())
        }
        Regime::Theta { alpha, l } => {
            if alpha <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "alpha must be positive, got {alpha}"
                )));
            }
            let c = 0.5 + 0.5 * (1.0 + 4.0 / alpha).sqrt();
            let a = c + 2.0 / alpha;
            let log2_b = alpha.log2() + (alpha + 2.0) * c.log2() - LOG2_E / c;
            let bits = nf * log2_b + l * c.log2() - a.sqrt().log2();
            (bits, format!("m=theta(n), alpha={alpha}"))
        }
        Regime::Auto => {
            let ratio = mf / nf;
            let auto = if ratio <= 0.1 {
                Regime::MSmall
            } else if ratio >= 10.0 {
                Regime::NSmall
            } else {
                Regime::Theta {
                    alpha: ratio,
                    l: 0.0,
                }
            };
            return minimax_redundancy(m, n, auto);
        }
    };
    Ok(RedundancyEstimate {
        bits,
        method,
        m,
        n,
    })
}

/// Which pattern-term constant to use in [`patterns_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternsMode {
    /// `n0 log2 m + (3/2)(log2 e) n^(1/3)` — the stated pattern-redundancy
    /// constant.
    Default,
    /// `n0 log2 m + n^(1/3)` — the constant-free form used in the worked
    /// numerical example.
    PaperExample,
}

/// Dictionary-plus-pattern redundancy bound: describing the `n0` observed
/// symbols costs `n0 log2 m` bits, and the appearance pattern compresses
/// within a term cubic-root in `n`.
pub fn patterns_bound(
    n: u64,
    n0: u64,
    m: u64,
    mode: PatternsMode,
) -> Result<RedundancyEstimate> {
    if n0 > n.min(m) {
        return Err(Error::InvalidParameter(format!(
            "n0={n0} cannot exceed min(n={n}, m={m})"
        )));
    }
    let dict = n0 as f64 * (m as f64).log2();
    let pattern = match mode {
        PatternsMode::Default => 1.5 * LOG2_E * (n as f64).cbrt(),
        PatternsMode::PaperExample => (n as f64).cbrt(),
    };
    Ok(RedundancyEstimate {
        bits: dict + pattern,
        method: format!("patterns ({mode:?})"),
        m,
        n,
    })
}

/// Total block-wise compressed size in bits:
/// `n sum_v H(X^(v)) + B (2^b - 1)/2 log2(n / 2^b)`.
///
/// The redundancy term assumes each `2^b`-ary block is small next to `n`;
/// when it is not, the figure is still computed but logged as out of
/// regime.
pub fn total_size_blocks(n: u64, b: u32, block_entropies: &[f64]) -> Result<f64> {
    if block_entropies.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mb = 1u64 << b;
    if mb >= n {
        log::warn!(
            "block alphabet 2^{b} = {mb} is not small next to n = {n}; \
             the redundancy term is out of its regime"
        );
    }
    let big_b = block_entropies.len() as f64;
    let data: f64 = n as f64 * block_entropies.iter().sum::<f64>();
    let redundancy = big_b * (mb as f64 - 1.0) / 2.0 * (n as f64 / mb as f64).log2();
    Ok(data + redundancy)
}
