//! Urn system state, pair reduction and the two-urn configuration classes.

use std::fmt;

use crate::error::{invalid, Error, Result};

/// Ball counts of `urns` urns over `colors` colors, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    urns: usize,
    colors: usize,
    counts: Vec<u64>,
}

impl SystemState {
    pub fn empty(urns: usize, colors: usize) -> Result<Self> {
        if urns == 0 {
            return Err(invalid("need at least one urn"));
        }
        if colors < 2 {
            return Err(invalid("need at least two colors"));
        }
        Ok(Self { urns, colors, counts: vec![0; urns * colors] })
    }

    /// Builds a state from per-urn count rows.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let colors = rows.first().map(Vec::len).unwrap_or(0);
        let mut state = Self::empty(rows.len(), colors)?;
        for (u, row) in rows.iter().enumerate() {
            if row.len() != colors {
                return Err(invalid("all urns must have the same number of colors"));
            }
            state.counts[u * colors..(u + 1) * colors].copy_from_slice(row);
        }
        Ok(state)
    }

    /// Two urns, two colors: `(B1, W1, B2, W2)`. Color 0 is black.
    pub fn two_by_two(b1: u64, w1: u64, b2: u64, w2: u64) -> Self {
        Self { urns: 2, colors: 2, counts: vec![b1, w1, b2, w2] }
    }

    pub fn urns(&self) -> usize {
        self.urns
    }

    pub fn colors(&self) -> usize {
        self.colors
    }

    pub fn urn(&self, u: usize) -> &[u64] {
        &self.counts[u * self.colors..(u + 1) * self.colors]
    }

    pub fn count(&self, u: usize, k: usize) -> u64 {
        self.counts[u * self.colors + k]
    }

    pub fn add_ball(&mut self, u: usize, k: usize) {
        self.counts[u * self.colors + k] += 1;
    }

    /// Combined count `N_k^*` of every color over all urns.
    pub fn combined(&self) -> Vec<u64> {
        let mut out = vec![0; self.colors];
        for u in 0..self.urns {
            for (o, c) in out.iter_mut().zip(self.urn(u)) {
                *o += c;
            }
        }
        out
    }

    pub fn urn_total(&self, u: usize) -> u64 {
        self.urn(u).iter().sum()
    }

    /// Classifies a two-urn, two-color state.
    pub fn classify(&self) -> Result<ConfigClass> {
        if self.urns != 2 || self.colors != 2 {
            return Err(Error::NotTwoByTwo { urns: self.urns, colors: self.colors });
        }
        let (b1, w1, b2, w2) = (self.counts[0], self.counts[1], self.counts[2], self.counts[3]);
        Ok(classify(b1, w1, b2, w2))
    }

    /// True when every pool (each urn and the combined pool) has the same
    /// strict-majority color. For two urns and two colors this is `C3`.
    pub fn is_absorbing(&self) -> bool {
        self.consensus_color().is_some()
    }

    /// The color every pool strictly favors, if there is one.
    pub fn consensus_color(&self) -> Option<usize> {
        let g = strict_argmax(&self.combined())?;
        (0..self.urns)
            .all(|u| strict_argmax(self.urn(u)) == Some(g))
            .then_some(g)
    }

    /// Smallest lead of the consensus color over any other color, across
    /// all pools. `None` when the state is not absorbing.
    pub fn consensus_margin(&self) -> Option<u64> {
        let g = self.consensus_color()?;
        let lead = |pool: &[u64]| {
            pool.iter()
                .enumerate()
                .filter(|&(k, _)| k != g)
                .map(|(_, &c)| pool[g] - c)
                .min()
                .unwrap_or(u64::MAX)
        };
        let mut margin = lead(&self.combined());
        for u in 0..self.urns {
            margin = margin.min(lead(self.urn(u)));
        }
        Some(margin)
    }

    /// Deficits of the urns that do not strictly favor the global
    /// strict-majority color `g`: `max_k N_k^u - N_g^u` for each such urn.
    /// `None` when the combined pool has no strict majority.
    pub fn nonconforming_deficits(&self) -> Option<(usize, Vec<(usize, u64)>)> {
        let g = strict_argmax(&self.combined())?;
        let out = (0..self.urns)
            .filter(|&u| strict_argmax(self.urn(u)) != Some(g))
            .map(|u| {
                let row = self.urn(u);
                let max = row.iter().copied().max().unwrap_or(0);
                (u, max - row[g])
            })
            .collect();
        Some((g, out))
    }
}

/// Index of the unique largest entry, if it is unique.
pub fn strict_argmax(counts: &[u64]) -> Option<usize> {
    let max = *counts.iter().max()?;
    let mut it = counts.iter().enumerate().filter(|&(_, &c)| c == max);
    let (k, _) = it.next()?;
    it.next().is_none().then_some(k)
}

/// Removes one ball of each color while both are present.
pub fn reduce_pair(b: u64, w: u64) -> (u64, u64) {
    let m = b.min(w);
    (b - m, w - m)
}

/// Configuration class of two urns holding two colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConfigClass {
    /// Balanced totals; each urn is `ell` balls away from a tie.
    C1(u64),
    /// Unbalanced totals with one urn not favoring the global majority,
    /// `ell` balls short of it.
    C2(u64),
    /// Global and per-urn majorities agree.
    C3,
}

impl ConfigClass {
    /// 1, 2 or 3.
    pub fn phase(&self) -> u8 {
        match self {
            ConfigClass::C1(_) => 1,
            ConfigClass::C2(_) => 2,
            ConfigClass::C3 => 3,
        }
    }
}

impl fmt::Display for ConfigClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigClass::C1(l) => write!(f, "C1({l})"),
            ConfigClass::C2(l) => write!(f, "C2({l})"),
            ConfigClass::C3 => write!(f, "C3"),
        }
    }
}

/// Classifies `(B1, W1, B2, W2)`.
pub fn classify(b1: u64, w1: u64, b2: u64, w2: u64) -> ConfigClass {
    let (b, w) = (b1 + b2, w1 + w2);
    if b == w {
        return ConfigClass::C1(b1.abs_diff(w1));
    }
    // (majority, minority) counts per urn, seen from the global majority color
    let (u1, u2) = if b > w { ((b1, w1), (b2, w2)) } else { ((w1, b1), (w2, b2)) };
    match (u1.0 > u1.1, u2.0 > u2.1) {
        (true, true) => ConfigClass::C3,
        (true, false) => ConfigClass::C2(u2.1 - u2.0),
        (false, true) => ConfigClass::C2(u1.1 - u1.0),
        (false, false) => unreachable!("both urns weakly favor the global minority"),
    }
}
