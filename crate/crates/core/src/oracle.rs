//! Independent references: truncated solves of the configuration-chain
//! recurrences and exact enumeration of short paths.
//!
//! The truncated system for levels `0..=L` reads
//!
//! ```text
//! q_0 = 1/2 + q_1/2
//! q_ℓ = (p/2)² q_{ℓ-1} + (1-p/2)² q_{ℓ+1} + p(1-p/2) r_{ℓ-1}     1 <= ℓ <= L
//! r_0 = (1+p)/2 + (1-p)/2 · r_1
//! r_ℓ = p r_{ℓ-1} + (1-p) r_{ℓ+1}                                1 <= ℓ <= L
//! ```
//!
//! with `q_{L+1}` and `r_{L+1}` fixed by a boundary rule. The solution is
//! the expected payoff of the chain stopped at level `L+1` with the
//! boundary value as payoff, so a lower boundary value gives a lower bound.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::simulate::ModelParams;
use crate::state::{ConfigClass, SystemState};
use crate::weights::{draw_distribution, WeightSequence};

/// Solves a tridiagonal system by forward elimination and back substitution.
/// `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(invalid("tridiagonal bands must have equal length"));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let lower = if i > 0 { sub[i] } else { 0.0 };
        let denom = diag[i] - if i > 0 { lower * c[i - 1] } else { 0.0 };
        if denom.abs() < 1e-300 || !denom.is_finite() {
            return Err(Error::Singular(i));
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - if i > 0 { lower * d[i - 1] } else { 0.0 }) / denom;
    }
    let mut x = d;
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Value assigned to `q_{L+1}` and `r_{L+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Zero,
    One,
    /// `q_{L+1} = 1` and `r_{L+1} = (p/(1-p))^{L+1}`, the probability that
    /// the phase-2 walk ever returns to zero from level `L+1`.
    RuinBound,
}

impl Boundary {
    fn values(self, p: f64, levels: usize) -> (f64, f64) {
        match self {
            Boundary::Zero => (0.0, 0.0),
            Boundary::One => (1.0, 1.0),
            Boundary::RuinBound => (1.0, (p / (1.0 - p)).powi(levels as i32 + 1)),
        }
    }
}

/// `q_0..=q_L` and `r_0..=r_L` for one boundary rule.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSolution {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

pub fn truncated_solve(p: f64, levels: usize, boundary: Boundary) -> Result<TruncatedSolution> {
    if !(0.0..0.5).contains(&p) {
        return Err(invalid(format!("truncated solve needs p in [0, 1/2), got {p}")));
    }
    if levels < 2 {
        return Err(invalid("truncation level must be at least 2"));
    }
    let n = levels + 1;
    let (q_edge, r_edge) = boundary.values(p, levels);

    let mut sub = vec![-p; n];
    let diag = vec![1.0; n];
    let mut sup = vec![-(1.0 - p); n];
    let mut rhs = vec![0.0; n];
    sup[0] = -(1.0 - p) / 2.0;
    rhs[0] = (1.0 + p) / 2.0;
    rhs[n - 1] += (1.0 - p) * r_edge;
    sub[0] = 0.0;
    let r = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;

    let down = (p / 2.0).powi(2);
    let up = (1.0 - p / 2.0).powi(2);
    let side = p * (1.0 - p / 2.0);
    let sub = vec![-down; n];
    let mut sup = vec![-up; n];
    let mut rhs: Vec<f64> = (0..n).map(|l| if l == 0 { 0.5 } else { side * r[l - 1] }).collect();
    sup[0] = -0.5;
    rhs[n - 1] += up * q_edge;
    let q = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    Ok(TruncatedSolution { q, r })
}

/// Lower and upper truncation brackets on `q_ℓ` and `r_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationTable {
    pub p: f64,
    pub levels: usize,
    pub q_lower: Vec<f64>,
    pub q_upper: Vec<f64>,
    pub r_lower: Vec<f64>,
    pub r_upper: Vec<f64>,
}

impl FixationTable {
    pub fn q0_width(&self) -> f64 {
        self.q_upper[0] - self.q_lower[0]
    }

    pub fn q_contains(&self, ell: usize, value: f64, tol: f64) -> bool {
        self.q_lower[ell] - tol <= value && value <= self.q_upper[ell] + tol
    }

    pub fn r_contains(&self, ell: usize, value: f64, tol: f64) -> bool {
        self.r_lower[ell] - tol <= value && value <= self.r_upper[ell] + tol
    }
}

pub fn fixation_table(p: f64, levels: usize) -> Result<FixationTable> {
    let lo = truncated_solve(p, levels, Boundary::Zero)?;
    let hi = truncated_solve(p, levels, Boundary::RuinBound)?;
    Ok(FixationTable { p, levels, q_lower: lo.q, q_upper: hi.q, r_lower: lo.r, r_upper: hi.r })
}

/// Simplest rational within float precision of `x`.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    let r: Ratio<i64> = Ratio::approximate_float(x).ok_or_else(|| invalid(format!("{x} has no rational form")))?;
    Ok(BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
}

/// Draw distribution of a pool in exact arithmetic.
pub fn exact_draw_distribution(w: &WeightSequence, counts: &[u64]) -> Result<Vec<BigRational>> {
    let max = counts.iter().copied().max().ok_or_else(|| invalid("a pool needs at least one color"))?;
    match w {
        WeightSequence::GeneralizedPower => {
            let ties = counts.iter().filter(|&&c| c == max).count();
            let share = BigRational::new(BigInt::one(), BigInt::from(ties));
            Ok(counts.iter().map(|&c| if c == max { share.clone() } else { BigRational::zero() }).collect())
        }
        WeightSequence::Classical { rho } => {
            let rho = rational_from_f64(*rho)?;
            let min = counts.iter().copied().min().unwrap_or(0);
            let weights: Vec<BigRational> = counts.iter().map(|&c| num_traits::pow(rho.clone(), (c - min) as usize)).collect();
            let total: BigRational = weights.iter().cloned().sum();
            Ok(weights.into_iter().map(|x| x / &total).collect())
        }
        WeightSequence::Table(_) => Err(Error::Unsupported("exact arithmetic for weight tables".into())),
    }
}

pub fn exact_draw_prob(w: &WeightSequence, counts: &[u64], k: usize) -> Result<BigRational> {
    exact_draw_distribution(w, counts)?
        .into_iter()
        .nth(k)
        .ok_or_else(|| invalid(format!("color index {k} out of range")))
}

/// Model with an exact interaction parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactModel {
    pub urns: usize,
    pub colors: usize,
    pub p: BigRational,
    pub weights: WeightSequence,
}

impl ExactModel {
    pub fn new(urns: usize, colors: usize, p: BigRational, weights: WeightSequence) -> Result<Self> {
        if p < BigRational::zero() || p > BigRational::one() {
            return Err(invalid("p must lie in [0, 1]"));
        }
        ModelParams::new(urns, colors, p.to_f64().unwrap_or(0.0), weights.clone())?;
        Ok(Self { urns, colors, p, weights })
    }

    /// Converts `p` to the simplest rational within float precision.
    pub fn from_params(params: &ModelParams) -> Result<Self> {
        Self::new(params.urns, params.colors, rational_from_f64(params.p)?, params.weights.clone())
    }
}

pub const MAX_DEPTH: usize = 12;
pub const DEFAULT_BUDGET: usize = 2_000_000;

/// Exact law of `(class history, current state)` after a number of steps.
///
/// Pool choices are summed out. Class histories are only kept for two urns
/// and two colors; otherwise they are empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathDistribution {
    pub entries: BTreeMap<(Vec<ConfigClass>, SystemState), BigRational>,
}

impl PathDistribution {
    pub fn total(&self) -> BigRational {
        self.entries.values().cloned().sum()
    }

    pub fn class_histories(&self) -> BTreeMap<Vec<ConfigClass>, BigRational> {
        let mut out: BTreeMap<Vec<ConfigClass>, BigRational> = BTreeMap::new();
        for ((h, _), pr) in &self.entries {
            *out.entry(h.clone()).or_insert_with(BigRational::zero) += pr;
        }
        out
    }

    pub fn final_classes(&self) -> BTreeMap<ConfigClass, BigRational> {
        let mut out: BTreeMap<ConfigClass, BigRational> = BTreeMap::new();
        for ((h, _), pr) in &self.entries {
            if let Some(c) = h.last() {
                *out.entry(*c).or_insert_with(BigRational::zero) += pr;
            }
        }
        out
    }

    pub fn final_states(&self) -> BTreeMap<SystemState, BigRational> {
        let mut out: BTreeMap<SystemState, BigRational> = BTreeMap::new();
        for ((_, s), pr) in &self.entries {
            *out.entry(s.clone()).or_insert_with(BigRational::zero) += pr;
        }
        out
    }
}

/// Enumerates every outcome of `depth` steps from `start`.
pub fn enumerate_paths(model: &ExactModel, start: &SystemState, depth: usize, budget: usize) -> Result<PathDistribution> {
    if depth > MAX_DEPTH {
        return Err(Error::BudgetExceeded(format!("depth {depth} exceeds {MAX_DEPTH}")));
    }
    if start.urns() != model.urns || start.colors() != model.colors {
        return Err(invalid("start state does not match the model"));
    }
    let track = model.urns == 2 && model.colors == 2;
    let history = if track { vec![start.classify()?] } else { Vec::new() };
    let mut frontier = PathDistribution::default();
    frontier.entries.insert((history, start.clone()), BigRational::one());
    let q = BigRational::one() - &model.p;

    for _ in 0..depth {
        let mut next = PathDistribution::default();
        for ((hist, state), prob) in &frontier.entries {
            let own_pool = |u: usize| exact_draw_distribution(&model.weights, state.urn(u));
            let combined = exact_draw_distribution(&model.weights, &state.combined())?;
            // per-urn color marginals with the pool summed out
            let mut per_urn = Vec::with_capacity(model.urns);
            for u in 0..model.urns {
                let own = own_pool(u)?;
                let dist: Vec<(usize, BigRational)> = own
                    .iter()
                    .zip(&combined)
                    .map(|(a, b)| &q * a + &model.p * b)
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .collect();
                per_urn.push(dist);
            }
            let mut joint: Vec<(Vec<usize>, BigRational)> = vec![(Vec::new(), prob.clone())];
            for dist in &per_urn {
                let mut grown = Vec::with_capacity(joint.len() * dist.len());
                for (colors, pr) in &joint {
                    for (k, pk) in dist {
                        let mut c = colors.clone();
                        c.push(*k);
                        grown.push((c, pr * pk));
                    }
                }
                joint = grown;
            }
            for (colors, pr) in joint {
                let mut s = state.clone();
                for (u, &k) in colors.iter().enumerate() {
                    s.add_ball(u, k);
                }
                let mut h = hist.clone();
                if track {
                    h.push(s.classify()?);
                }
                *next.entries.entry((h, s)).or_insert_with(BigRational::zero) += pr;
            }
            if next.entries.len() > budget {
                return Err(Error::BudgetExceeded(format!("more than {budget} distinct paths")));
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

/// Exact law of the first `steps` colors drawn by a single two-color urn,
/// by enumerating all `2^steps` sequences.
pub fn single_urn_sequence_law(w: &WeightSequence, steps: usize) -> Result<BTreeMap<Vec<usize>, f64>> {
    let mut out = BTreeMap::new();
    let mut dist = [0.0; 2];
    for mask in 0..(1u64 << steps) {
        let seq: Vec<usize> = (0..steps).map(|i| ((mask >> i) & 1) as usize).collect();
        let mut counts = [0u64; 2];
        let mut prob = 1.0;
        for &c in &seq {
            draw_distribution(w, &counts, &mut dist)?;
            prob *= dist[c];
            counts[c] += 1;
        }
        if prob > 0.0 {
            out.insert(seq, prob);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn tridiagonal_matches_dense() {
        // 4x4 system with known solution (1, 2, 3, 4)
        let sub = [0.0, 1.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [1.0, 1.0, 1.0, 0.0];
        let rhs = [6.0, 12.0, 18.0, 19.0];
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs).unwrap();
        for (a, b) in x.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(solve_tridiagonal(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]), Err(Error::Singular(0)));
    }

    #[test]
    fn p_zero_decouples() {
        let s = truncated_solve(0.0, 10, Boundary::Zero).unwrap();
        assert_eq!(s.q[0], 0.5);
        assert_eq!(s.r[0], 0.5);
        assert!(s.q[1..].iter().chain(&s.r[1..]).all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(truncated_solve(0.5, 10, Boundary::Zero).is_err());
        assert!(truncated_solve(0.3, 1, Boundary::Zero).is_err());
    }

    #[test]
    fn brackets_contain_closed_form() {
        let t = fixation_table(0.3, 400).unwrap();
        assert!(t.q0_width() < 1e-8);
        assert!(t.q_contains(0, analytic::q0(0.3).unwrap(), 1e-12));
        for l in 0..=20u32 {
            assert!((t.r_lower[l as usize] - analytic::r_ell(0.3, l).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn width_shrinks_with_level() {
        for p in [0.05, 0.25, 0.45] {
            let a = fixation_table(p, 50).unwrap().q0_width();
            let b = fixation_table(p, 100).unwrap().q0_width();
            assert!(b < a, "p={p}: {b} !< {a}");
            assert!(fixation_table(p, 400).unwrap().q0_width() < 1e-8);
        }
    }

    #[test]
    fn one_boundary_is_a_valid_but_loose_bound() {
        let lo = truncated_solve(0.3, 100, Boundary::Zero).unwrap();
        let hi = truncated_solve(0.3, 100, Boundary::One).unwrap();
        assert!(hi.q[0] >= lo.q[0]);
        assert!((hi.r[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_classical_draw() {
        let w = WeightSequence::classical(2.0).unwrap();
        assert_eq!(exact_draw_prob(&w, &[4, 8], 0).unwrap(), ratio(1, 17));
        let float = crate::weights::draw_prob(&w, &[4, 8], 0).unwrap();
        assert!((float - 1.0 / 17.0).abs() < 1e-16);
    }

    #[test]
    fn rational_conversion() {
        assert_eq!(rational_from_f64(0.4).unwrap(), ratio(2, 5));
        assert_eq!(rational_from_f64(0.3).unwrap(), ratio(3, 10));
    }

    #[test]
    fn one_step_from_empty() {
        let model = ExactModel::new(2, 2, ratio(3, 10), WeightSequence::GeneralizedPower).unwrap();
        let start = SystemState::empty(2, 2).unwrap();
        let d = enumerate_paths(&model, &start, 1, DEFAULT_BUDGET).unwrap();
        let fc = d.final_classes();
        assert_eq!(fc[&ConfigClass::C3], ratio(1, 2));
        assert_eq!(fc[&ConfigClass::C1(1)], ratio(1, 2));
    }

    #[test]
    fn one_step_from_c1_one_is_exact() {
        let model = ExactModel::new(2, 2, ratio(2, 5), WeightSequence::GeneralizedPower).unwrap();
        let d = enumerate_paths(&model, &SystemState::two_by_two(1, 0, 0, 1), 1, DEFAULT_BUDGET).unwrap();
        let fc = d.final_classes();
        assert_eq!(fc.len(), 3);
        assert_eq!(fc[&ConfigClass::C1(0)], ratio(1, 25));
        assert_eq!(fc[&ConfigClass::C1(2)], ratio(16, 25));
        assert_eq!(fc[&ConfigClass::C2(0)], ratio(8, 25));
    }

    #[test]
    fn total_probability_is_one() {
        for w in [WeightSequence::GeneralizedPower, WeightSequence::classical(3.0).unwrap()] {
            let model = ExactModel::new(2, 2, ratio(1, 3), w.clone()).unwrap();
            let d = enumerate_paths(&model, &SystemState::empty(2, 2).unwrap(), 6, DEFAULT_BUDGET).unwrap();
            assert_eq!(d.total(), BigRational::one());
            let model = ExactModel::new(3, 3, ratio(1, 4), w).unwrap();
            let d = enumerate_paths(&model, &SystemState::empty(3, 3).unwrap(), 3, DEFAULT_BUDGET).unwrap();
            assert_eq!(d.total(), BigRational::one());
        }
    }

    #[test]
    fn budget_and_depth_limits() {
        let model = ExactModel::new(2, 2, ratio(1, 3), WeightSequence::classical(2.0).unwrap()).unwrap();
        let start = SystemState::empty(2, 2).unwrap();
        assert!(matches!(enumerate_paths(&model, &start, 13, DEFAULT_BUDGET), Err(Error::BudgetExceeded(_))));
        assert!(matches!(enumerate_paths(&model, &start, 8, 50), Err(Error::BudgetExceeded(_))));
        let table = WeightSequence::table(vec![crate::weights::WeightTerm { log_u: 0.0, v: 0.0 }; 4]).unwrap();
        let model = ExactModel::new(2, 2, ratio(1, 3), table).unwrap();
        assert!(matches!(enumerate_paths(&model, &start, 1, 10), Err(Error::Unsupported(_))));
    }

    #[test]
    fn phases_never_regress_in_exact_histories() {
        let model = ExactModel::new(2, 2, ratio(3, 10), WeightSequence::GeneralizedPower).unwrap();
        let d = enumerate_paths(&model, &SystemState::empty(2, 2).unwrap(), 10, DEFAULT_BUDGET).unwrap();
        for h in d.class_histories().keys() {
            assert!(h.windows(2).all(|w| w[0].phase() <= w[1].phase()));
        }
    }

    #[test]
    fn sequence_law_sums_to_one() {
        let w = WeightSequence::classical(2.0).unwrap();
        let law = single_urn_sequence_law(&w, 5).unwrap();
        assert!((law.values().sum::<f64>() - 1.0).abs() < 1e-14);
        let law = single_urn_sequence_law(&WeightSequence::GeneralizedPower, 4).unwrap();
        assert_eq!(law.len(), 2);
    }
}
