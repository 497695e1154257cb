//! Piecewise-linear relaxation of the concave marginal-entropy objective.
//!
//! The binary entropy over `[0, 1/2]` is replaced by `k` secant pieces on
//! equal-width intervals. Because `h_b` is concave, each chord lies below
//! the curve inside its own interval and above every other chord there, so
//! for a fixed placement of the `d` components into regions the objective
//! is linear in the allocated probabilities and is minimized by a sort:
//! largest probability onto smallest coefficient. Solutions that violate
//! their assumed regions are discarded — the placement they actually fall
//! into dominates them — and every surviving solution is scored by the true
//! objective `sum_j H(Y_j)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::prob::{binary_entropy_unchecked, entropy_of, JointDistribution};
use crate::transforms::PermutationTransform;

/// Default piece count; empirically sufficient for exact parameter
/// recovery on product sources.
pub const DEFAULT_K: usize = 8;

/// Default dimension limit for the exhaustive binary enumeration.
pub const BINARY_DEFAULT_MAX_D: u32 = 16;

/// Element budget for materialized coefficient matrices.
pub const COEFF_BUDGET: usize = 1 << 24;

const REGION_TOL: f64 = 1e-9;

/// A `k`-piece secant approximation of `h_b` over `[0, 1/2]`: piece `v`
/// interpolates the curve at breakpoints `v/(2k)` and `(v+1)/(2k)`. The
/// approximation is tight at the breakpoints and lies at or below the
/// curve everywhere in between.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearBound {
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
}

impl PiecewiseLinearBound {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("need at least one piece".into()));
        }
        let breakpoints: Vec<f64> = (0..=k).map(|i| i as f64 / (2 * k) as f64).collect();
        let mut slopes = Vec::with_capacity(k);
        let mut intercepts = Vec::with_capacity(k);
        for v in 0..k {
            let (x0, x1) = (breakpoints[v], breakpoints[v + 1]);
            let (y0, y1) = (binary_entropy_unchecked(x0), binary_entropy_unchecked(x1));
            let a = (y1 - y0) / (x1 - x0);
            slopes.push(a);
            intercepts.push(y0 - a * x0);
        }
        Ok(Self {
            breakpoints,
            slopes,
            intercepts,
        })
    }

    pub fn k(&self) -> usize {
        self.slopes.len()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slope(&self, region: usize) -> f64 {
        self.slopes[region]
    }

    pub fn intercept(&self, region: usize) -> f64 {
        self.intercepts[region]
    }

    /// Region index of `p`, clamping anything at or above 1/2 into the
    /// last piece.
    pub fn region_of(&self, p: f64) -> usize {
        let k = self.k();
        (((p.max(0.0)) * (2 * k) as f64) as usize).min(k - 1)
    }

    /// Whether `p` lies in `region`, up to a boundary tolerance.
    pub fn in_region(&self, p: f64, region: usize) -> bool {
        p >= self.breakpoints[region] - REGION_TOL && p <= self.breakpoints[region + 1] + REGION_TOL
    }

    /// Value of the piecewise secant function at `p` in `[0, 1/2]`.
    pub fn eval(&self, p: f64) -> f64 {
        let r = self.region_of(p.min(0.5));
        self.slopes[r] * p + self.intercepts[r]
    }
}

/// Builds the `k`-piece secant bound over `[0, 1/2]`.
pub fn build_pwl_bound(k: usize) -> Result<PiecewiseLinearBound> {
    PiecewiseLinearBound::new(k)
}

/// A placement of the `d` exchangeable components into the `k` regions,
/// kept in canonical (sorted, 0-based) form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionAssignment(pub Vec<u8>);

/// Enumerates all multisets of `d` regions out of `k`:
/// `C(d + k - 1, k - 1)` assignments.
pub fn enumerate_assignments(d: usize, k: usize) -> Vec<RegionAssignment> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; d];
    loop {
        out.push(RegionAssignment(cur.clone()));
        // next non-decreasing vector
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if (cur[i] as usize) < k - 1 {
                let v = cur[i] + 1;
                for c in cur.iter_mut().skip(i) {
                    *c = v;
                }
                break;
            }
        }
    }
}

/// Outcome of a relaxation solve.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub transform: PermutationTransform,
    /// True cost `sum_j H(Y_j) - H(X)` of the returned permutation.
    pub cost: f64,
    /// Piecewise-linear objective value of the returned placement.
    pub pwl_value: f64,
    /// Recovered per-component parameters `pi_j = P(Y_j = 0)`.
    pub pi: Vec<f64>,
}

/// Solves the relaxed binary problem by enumerating every region
/// assignment, solving its unconstrained sorted-allocation problem, and
/// keeping the best region-feasible solution under the true objective.
pub fn relaxed_bica_binary(dist: &JointDistribution, k: usize) -> Result<RelaxedSolution> {
    relaxed_bica_binary_with_limit(dist, k, BINARY_DEFAULT_MAX_D)
}

pub fn relaxed_bica_binary_with_limit(
    dist: &JointDistribution,
    k: usize,
    max_d: u32,
) -> Result<RelaxedSolution> {
    if !dist.is_binary() {
        return Err(Error::InvalidParameter(
            "the binary relaxation needs a binary alphabet".into(),
        ));
    }
    let d = dist.d();
    if d > max_d {
        return Err(Error::SizeLimit(format!(
            "exhaustive relaxation is limited to d <= {max_d}, got {d}"
        )));
    }
    let bound = PiecewiseLinearBound::new(k)?;
    let m = dist.m();

    // Probabilities sorted descending, stable by symbol index.
    let mut desc: Vec<u32> = (0..m as u32).collect();
    desc.sort_by(|&a, &b| {
        dist.probs()[b as usize]
            .partial_cmp(&dist.probs()[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut best: Option<RelaxedSolution> = None;
    let mut scratch_coeffs: Vec<(f64, u32)> = Vec::with_capacity(m);

    for assignment in enumerate_assignments(d as usize, k) {
        let candidate = solve_assignment(dist, &bound, &assignment, &desc, &mut scratch_coeffs)?;
        if let Some(sol) = candidate {
            if best.as_ref().is_none_or(|b| sol.cost < b.cost) {
                best = Some(sol);
            }
        }
    }

    best.ok_or_else(|| {
        Error::InvalidParameter(
            "no feasible region assignment; the piecewise bound should cover [0, 1/2]".into(),
        )
    })
}

/// Solves one assignment's unconstrained linear problem; returns the
/// solution when it satisfies its own region constraints.
fn solve_assignment(
    dist: &JointDistribution,
    bound: &PiecewiseLinearBound,
    assignment: &RegionAssignment,
    desc: &[u32],
    coeffs: &mut Vec<(f64, u32)>,
) -> Result<Option<RelaxedSolution>> {
    let d = dist.d() as usize;
    let m = dist.m();
    let slopes: Vec<f64> = assignment.0.iter().map(|&r| bound.slope(r as usize)).collect();

    coeffs.clear();
    for w in 0..m as u32 {
        let mut c = 0.0;
        for (j, &s) in slopes.iter().enumerate() {
            if w >> (d - 1 - j) & 1 == 0 {
                c += s;
            }
        }
        coeffs.push((c, w));
    }
    // Ascending coefficients, ties by word index; largest probability goes
    // to the smallest coefficient (rearrangement minimum).
    coeffs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut table = vec![0u32; m];
    for (rank, &(_, w)) in coeffs.iter().enumerate() {
        table[desc[rank] as usize] = w;
    }
    let transform = PermutationTransform::from_table(table)?;
    let y = transform.apply(dist);
    let pi = y.marginal_bit_probs();

    // Components are exchangeable, so compare the sorted marginals against
    // the sorted assignment.
    let mut sorted_pi = pi.clone();
    sorted_pi.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ordered_regions: Vec<u8> = assignment.0.clone();
    ordered_regions.sort_unstable();
    let feasible = sorted_pi
        .iter()
        .zip(&ordered_regions)
        .all(|(&p, &r)| bound.in_region(p, r as usize));
    if !feasible {
        return Ok(None);
    }

    let pwl_value: f64 = sorted_pi
        .iter()
        .zip(&ordered_regions)
        .map(|(&p, &r)| bound.slope(r as usize) * p + bound.intercept(r as usize))
        .sum();
    let cost = y.sum_marginal_entropies() - dist.entropy();
    Ok(Some(RelaxedSolution {
        transform,
        cost,
        pwl_value,
        pi,
    }))
}

/// The deduplicated coefficient matrix: one row per region assignment,
/// one column per word. Materializing it is the matrix-vector view of the
/// relaxation, so a budget guards the allocation.
pub struct CoefficientMatrix {
    pub assignments: Vec<RegionAssignment>,
    pub rows: Vec<Vec<f64>>,
}

pub fn coefficient_rows(d: usize, k: usize, bound: &PiecewiseLinearBound) -> Result<CoefficientMatrix> {
    let assignments = enumerate_assignments(d, k);
    let m = 1usize << d;
    let elements = assignments.len().saturating_mul(m);
    if elements > COEFF_BUDGET {
        return Err(Error::MemoryBudget(format!(
            "{} assignments x {m} words = {elements} elements exceeds the {COEFF_BUDGET} budget",
            assignments.len()
        )));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
    let mut kept = Vec::new();
    for assignment in assignments {
        let slopes: Vec<f64> = assignment.0.iter().map(|&r| bound.slope(r as usize)).collect();
        let row: Vec<f64> = (0..m)
            .map(|w| {
                slopes
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| w >> (d - 1 - j) & 1 == 0)
                    .map(|(_, &s)| s)
                    .sum()
            })
            .collect();
        let key: Vec<u64> = row.iter().map(|x| x.to_bits()).collect();
        if seen.insert(key) {
            rows.push(row);
            kept.push(assignment);
        }
    }
    Ok(CoefficientMatrix {
        assignments: kept,
        rows,
    })
}

/// One component's cell: the regions of its `q - 1` free parameters,
/// canonically sorted.
type Cell = Vec<u8>;

/// Objective-descent search for general `q`-ary alphabets: from a random
/// placement of components into cells, repeatedly solve the unconstrained
/// allocation and move to the cell the solution actually lies in, until a
/// fixed point; restart `n_init` times and keep the best fixed point under
/// the true objective.
pub fn objective_descent_qary(
    dist: &JointDistribution,
    k: usize,
    n_init: usize,
    rng: &mut impl Rng,
) -> Result<RelaxedSolution> {
    let q = dist.q() as usize;
    let d = dist.d() as usize;
    if n_init == 0 {
        return Err(Error::InvalidParameter("need at least one restart".into()));
    }
    let bound = PiecewiseLinearBound::new(k)?;
    let m = dist.m();
    // Guard against unrepresentable cell spaces.
    if (k as f64).powi(q as i32 - 1) > 1e12 {
        return Err(Error::SizeLimit(format!(
            "cell space k^(q-1) = {k}^{} is not representable",
            q - 1
        )));
    }

    let mut desc: Vec<u32> = (0..m as u32).collect();
    desc.sort_by(|&a, &b| {
        dist.probs()[b as usize]
            .partial_cmp(&dist.probs()[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });

    // digit lookup: digits[w][j]
    let digits: Vec<Vec<u8>> = (0..m)
        .map(|w| (0..d).map(|j| dist.digit(w, j as u32) as u8).collect())
        .collect();

    let max_moves = 64 * (d + 1);
    let mut best: Option<RelaxedSolution> = None;

    for _ in 0..n_init {
        let mut cells: Vec<Cell> = (0..d)
            .map(|_| {
                let mut c: Cell = (0..q - 1)
                    .map(|_| rng.random_range(0..k) as u8)
                    .collect();
                c.sort_unstable();
                c
            })
            .collect();

        for _move in 0..max_moves {
            let (transform, theta) = solve_qary_cells(dist, &bound, &cells, &desc, &digits)?;
            // Cells the solution actually falls into.
            let actual: Vec<Cell> = theta
                .iter()
                .map(|t| {
                    let mut c: Cell =
                        t.iter().map(|&p| bound.region_of(p.min(0.5)) as u8).collect();
                    c.sort_unstable();
                    c
                })
                .collect();
            if actual == cells {
                let y = transform.apply(dist);
                let cost = y.sum_marginal_entropies() - dist.entropy();
                let pwl_value: f64 = theta
                    .iter()
                    .flatten()
                    .map(|&p| bound.eval(p.min(0.5)))
                    .sum();
                let pi = theta.iter().flatten().copied().collect();
                let sol = RelaxedSolution {
                    transform,
                    cost,
                    pwl_value,
                    pi,
                };
                if best.as_ref().is_none_or(|b| sol.cost < b.cost) {
                    best = Some(sol);
                }
                break;
            }
            cells = actual;
        }
    }

    best.ok_or_else(|| {
        Error::InvalidParameter("descent never reached a fixed point; raise n_init".into())
    })
}

/// Unconstrained allocation for a fixed cell placement: coefficients are
/// sums of the slopes attached to each word's non-zero digits.
fn solve_qary_cells(
    dist: &JointDistribution,
    bound: &PiecewiseLinearBound,
    cells: &[Cell],
    desc: &[u32],
    digits: &[Vec<u8>],
) -> Result<(PermutationTransform, Vec<Vec<f64>>)> {
    let q = dist.q() as usize;
    let d = dist.d() as usize;
    let m = dist.m();

    let mut coeffs: Vec<(f64, u32)> = (0..m as u32)
        .map(|w| {
            let mut c = 0.0;
            for j in 0..d {
                let v = digits[w as usize][j] as usize;
                if v >= 1 {
                    c += bound.slope(cells[j][v - 1] as usize);
                }
            }
            (c, w)
        })
        .collect();
    coeffs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut table = vec![0u32; m];
    for (rank, &(_, w)) in coeffs.iter().enumerate() {
        table[desc[rank] as usize] = w;
    }
    let transform = PermutationTransform::from_table(table)?;
    let y = transform.apply(dist);

    // theta[j][v-1] = P(Y_j = v)
    let theta: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let marg = y.digit_marginal(j as u32);
            (1..q).map(|v| marg[v]).collect()
        })
        .collect();
    Ok((transform, theta))
}

/// True sum of marginal entropies `sum_j H(Y_j)` of a q-ary distribution;
/// convenience for tests and experiments.
pub fn sum_marginals(dist: &JointDistribution) -> f64 {
    if dist.is_binary() {
        dist.sum_marginal_entropies()
    } else {
        (0..dist.d())
            .map(|j| entropy_of(&dist.digit_marginal(j)))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bica::exact::{branch_and_bound_optimal, product_distribution};
    use crate::prob::gen_uniform_simplex;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pwl_k1_is_the_two_p_chord() {
        let b = PiecewiseLinearBound::new(1).unwrap();
        for p in [0.0, 0.1, 0.25, 0.5] {
            assert!((b.eval(p) - 2.0 * p).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn pwl_k2_interpolates_quarter_point() {
        let b = PiecewiseLinearBound::new(2).unwrap();
        assert_eq!(b.breakpoints(), &[0.0, 0.25, 0.5]);
        assert!((b.eval(0.0)).abs() < 1e-12);
        assert!((b.eval(0.25) - 0.811_278_124_459_132_9).abs() < 1e-12);
        assert!((b.eval(0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pwl_lies_at_or_below_entropy_tight_at_breakpoints() {
        for k in [1usize, 2, 4, 8, 16] {
            let b = PiecewiseLinearBound::new(k).unwrap();
            let n = 100_000;
            let mut max_signed = f64::NEG_INFINITY;
            for i in 0..=n {
                let p = 0.5 * i as f64 / n as f64;
                let diff = b.eval(p) - binary_entropy_unchecked(p);
                max_signed = max_signed.max(diff);
                assert!(diff <= 1e-12, "k={k}, p={p}: chord above curve by {diff}");
            }
            // Signed gap never exceeds the stated k=8 budget.
            assert!(max_signed <= 0.011);
            for &bp in b.breakpoints() {
                assert!((b.eval(bp) - binary_entropy_unchecked(bp)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn assignment_count_is_stars_and_bars() {
        // C(d + k - 1, k - 1)
        assert_eq!(enumerate_assignments(3, 2).len(), 4);
        assert_eq!(enumerate_assignments(3, 8).len(), 120);
        assert_eq!(enumerate_assignments(6, 8).len(), 1716);
        for a in enumerate_assignments(4, 3) {
            assert!(a.0.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn uniform_gets_zero_cost_any_k() {
        let u = JointDistribution::uniform(3);
        for k in [1usize, 2, 8] {
            let sol = relaxed_bica_binary(&u, k).unwrap();
            assert!(sol.cost.abs() < 1e-12, "k={k}: {}", sol.cost);
            for &pi in &sol.pi {
                assert!((pi - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn recovers_product_parameters_k8() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut hits = 0;
        let trials = 20;
        for _ in 0..trials {
            let params: Vec<f64> = (0..10)
                .map(|_| rand::Rng::random_range(&mut rng, 0.05..0.5))
                .collect();
            let prod = product_distribution(&params).unwrap();
            let mut table: Vec<u32> = (0..1024).collect();
            table.shuffle(&mut rng);
            let mixed = PermutationTransform::from_table(table).unwrap().apply(&prod);
            let sol = relaxed_bica_binary(&mixed, 8).unwrap();
            let mut want = params.clone();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut got = sol.pi.clone();
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if want
                .iter()
                .zip(&got)
                .all(|(a, b)| (a - b).abs() < 1e-9)
            {
                hits += 1;
            }
        }
        assert!(hits * 10 >= trials * 9, "recovered {hits}/{trials}");
    }

    #[test]
    fn close_to_branch_and_bound_d3() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut within = 0;
        let trials = 30;
        for _ in 0..trials {
            let dist = gen_uniform_simplex(8, &mut rng);
            let (_, opt) = branch_and_bound_optimal(&dist).unwrap();
            let sol = relaxed_bica_binary(&dist, 8).unwrap();
            assert!(sol.cost >= opt - 1e-9, "relaxed below optimum");
            if sol.cost - opt <= 0.05 {
                within += 1;
            }
        }
        assert!(within * 10 >= trials * 9, "{within}/{trials} within 0.05");
    }

    #[test]
    fn pwl_value_consistent_with_true_cost() {
        // The secant value of the chosen placement never exceeds the true
        // marginal-entropy sum (chords sit below the curve).
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..20 {
            let dist = gen_uniform_simplex(16, &mut rng);
            let sol = relaxed_bica_binary(&dist, 4).unwrap();
            let true_sum = sol.cost + dist.entropy();
            assert!(sol.pwl_value <= true_sum + 1e-9);
        }
    }

    #[test]
    fn monotone_in_k_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let trials = 60;
        let (mut sum2, mut sum8) = (0.0, 0.0);
        for _ in 0..trials {
            let dist = gen_uniform_simplex(64, &mut rng);
            sum2 += relaxed_bica_binary(&dist, 2).unwrap().cost;
            sum8 += relaxed_bica_binary(&dist, 8).unwrap().cost;
        }
        assert!(
            sum8 <= sum2 + 1e-9,
            "mean cost k=8 {} vs k=2 {}",
            sum8 / trials as f64,
            sum2 / trials as f64
        );
    }

    #[test]
    fn coefficient_rows_worked_example() {
        // d=3, two components in R1 (slope a1), one in R2 (slope a2):
        // row sums follow the 8x3 slope matrix.
        let bound = PiecewiseLinearBound::new(2).unwrap();
        let (a1, a2) = (bound.slope(0), bound.slope(1));
        let mat = coefficient_rows(3, 2, &bound).unwrap();
        let target: Vec<f64> = vec![
            2.0 * a1 + a2,
            2.0 * a1,
            a1 + a2,
            a1,
            a1 + a2,
            a1,
            a2,
            0.0,
        ];
        let found = mat.rows.iter().any(|row| {
            row.iter()
                .zip(&target)
                .all(|(x, y)| (x - y).abs() < 1e-12)
        });
        assert!(found, "worked matrix row missing");

        // Unique coefficient analysis: distinct nonzero entries of each row
        // <= prod(l_v + 1) - 1 <= (d/k + 1)^k.
        for (assignment, row) in mat.assignments.iter().zip(&mat.rows) {
            let mut l = vec![0usize; 2];
            for &r in &assignment.0 {
                l[r as usize] += 1;
            }
            let bound_count: usize = l.iter().map(|&x| x + 1).product::<usize>() - 1;
            let mut nonzero: Vec<u64> = row
                .iter()
                .filter(|&&x| x != 0.0)
                .map(|x| x.to_bits())
                .collect();
            nonzero.sort();
            nonzero.dedup();
            assert!(nonzero.len() <= bound_count);
        }
    }

    #[test]
    fn coefficient_rows_k1_degenerate() {
        let bound = PiecewiseLinearBound::new(1).unwrap();
        let mat = coefficient_rows(3, 1, &bound).unwrap();
        assert_eq!(mat.rows.len(), 1);
        // Single slope: coefficient = slope * (zero-bit count), at most
        // d + 1 distinct values.
        let mut vals: Vec<u64> = mat.rows[0].iter().map(|x| x.to_bits()).collect();
        vals.sort();
        vals.dedup();
        assert!(vals.len() <= 4);
    }

    #[test]
    fn coefficient_budget_guard() {
        let bound = PiecewiseLinearBound::new(8).unwrap();
        assert!(matches!(
            coefficient_rows(24, 8, &bound),
            Err(Error::MemoryBudget(_))
        ));
    }

    #[test]
    fn descent_q2_contains_binary_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..10 {
            let dist = gen_uniform_simplex(16, &mut rng);
            let exhaustive = relaxed_bica_binary(&dist, 4).unwrap();
            let descent = objective_descent_qary(&dist, 4, 40, &mut rng).unwrap();
            assert!(
                descent.cost >= exhaustive.cost - 1e-9,
                "descent {} below exhaustive {}",
                descent.cost,
                exhaustive.cost
            );
        }
    }

    #[test]
    fn descent_trace_reaches_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let dist = gen_uniform_simplex(16, &mut rng);
        let sol = objective_descent_qary(&dist, 8, 1, &mut rng).unwrap();
        assert!(sol.cost >= -1e-9);
    }
}
