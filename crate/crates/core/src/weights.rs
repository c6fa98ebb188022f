//! Generalized reinforcement weights `u·∞^v` and the draw kernel.
//!
//! A weight is stored as `(ln u, v)`. In a draw only the colors whose
//! current weight attains the largest `v` compete, with odds proportional
//! to `u`. Classical weights `ρ^i` carry a constant `v`, so they reduce to
//! the usual ratio of weights; the formal sequence `∞^i` makes every pool
//! draw its strict-majority color and split ties uniformly.

use crate::error::{invalid, Error, Result};

/// One generalized weight `u·∞^v`, magnitude kept in log-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightTerm {
    pub log_u: f64,
    pub v: f64,
}

impl WeightTerm {
    pub fn new(log_u: f64, v: f64) -> Result<Self> {
        if !log_u.is_finite() {
            return Err(invalid(format!("log magnitude must be finite, got {log_u}")));
        }
        if v.is_nan() {
            return Err(invalid("exponent of infinity must not be NaN"));
        }
        Ok(Self { log_u, v })
    }

    /// Builds a term from a plain magnitude `u > 0`.
    pub fn from_magnitude(u: f64, v: f64) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(invalid(format!("magnitude must be positive and finite, got {u}")));
        }
        Self::new(u.ln(), v)
    }

    pub fn magnitude(&self) -> f64 {
        self.log_u.exp()
    }
}

/// Rule producing the weight `w_i` for every ball count `i`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSequence {
    /// `w_i = ρ^i` with `ρ > 1`.
    Classical { rho: f64 },
    /// `w_i = ∞^i`, the `ρ → ∞` limit.
    GeneralizedPower,
    /// Explicit finite list; indices past the end are an error.
    Table(Vec<WeightTerm>),
}

impl WeightSequence {
    pub fn classical(rho: f64) -> Result<Self> {
        if !(rho > 1.0 && rho.is_finite()) {
            return Err(invalid(format!("classical weights need a finite rho > 1, got {rho}")));
        }
        Ok(WeightSequence::Classical { rho })
    }

    pub fn table(terms: Vec<WeightTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("weight table must not be empty"));
        }
        for t in &terms {
            WeightTerm::new(t.log_u, t.v)?;
        }
        Ok(WeightSequence::Table(terms))
    }

    /// Weight of the `i`-th ball count.
    pub fn term(&self, i: u64) -> Result<WeightTerm> {
        match self {
            WeightSequence::Classical { rho } => Ok(WeightTerm {
                log_u: i as f64 * rho.ln(),
                v: 0.0,
            }),
            WeightSequence::GeneralizedPower => Ok(WeightTerm {
                log_u: 0.0,
                v: i as f64,
            }),
            WeightSequence::Table(terms) => terms
                .get(i as usize)
                .copied()
                .ok_or(Error::TableOverrun { index: i, len: terms.len() }),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, WeightSequence::GeneralizedPower)
    }

    /// `Some(ρ)` for classical weights.
    pub fn rho(&self) -> Option<f64> {
        match self {
            WeightSequence::Classical { rho } => Some(*rho),
            _ => None,
        }
    }
}

/// Probability that a pool with color counts `counts` yields color `k`.
pub fn draw_prob(w: &WeightSequence, counts: &[u64], k: usize) -> Result<f64> {
    if counts.is_empty() {
        return Err(invalid("a pool needs at least one color"));
    }
    if k >= counts.len() {
        return Err(invalid(format!("color index {k} out of range for {} colors", counts.len())));
    }
    let mut dist = vec![0.0; counts.len()];
    draw_distribution(w, counts, &mut dist)?;
    Ok(dist[k])
}

/// Fills `out` with the draw distribution over all colors of a pool.
pub fn draw_distribution(w: &WeightSequence, counts: &[u64], out: &mut [f64]) -> Result<()> {
    debug_assert_eq!(counts.len(), out.len());
    match w {
        WeightSequence::GeneralizedPower => {
            let max = counts.iter().copied().max().unwrap_or(0);
            let ties = counts.iter().filter(|&&c| c == max).count() as f64;
            for (o, &c) in out.iter_mut().zip(counts) {
                *o = if c == max { 1.0 / ties } else { 0.0 };
            }
            Ok(())
        }
        WeightSequence::Classical { rho } => {
            let ln_rho = rho.ln();
            let max = counts.iter().copied().max().unwrap_or(0);
            let mut total = 0.0;
            for (o, &c) in out.iter_mut().zip(counts) {
                // c <= max, so every exponent is <= 0
                *o = ((c as f64 - max as f64) * ln_rho).exp();
                total += *o;
            }
            out.iter_mut().for_each(|o| *o /= total);
            Ok(())
        }
        WeightSequence::Table(_) => {
            let terms = counts
                .iter()
                .map(|&c| w.term(c))
                .collect::<Result<Vec<_>>>()?;
            let v_max = terms.iter().map(|t| t.v).fold(f64::NEG_INFINITY, f64::max);
            let log_max = terms
                .iter()
                .filter(|t| t.v == v_max)
                .map(|t| t.log_u)
                .fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (o, t) in out.iter_mut().zip(&terms) {
                *o = if t.v == v_max { (t.log_u - log_max).exp() } else { 0.0 };
                total += *o;
            }
            out.iter_mut().for_each(|o| *o /= total);
            Ok(())
        }
    }
}
