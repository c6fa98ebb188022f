//! Discrete-time simulation of interacting urns.
//!
//! Every step, each urn independently picks its pool (itself with
//! probability `1-p`, all urns combined with probability `p`), draws a
//! color from that pool's current counts, and after all urns have drawn
//! each adds one ball of its drawn color to itself.

mod estimate;
mod rubin;
mod trajectory;

pub use estimate::{
    ai_draw_rate, campaign, estimate_fixation, run_resolved, wilson_halfwidth, AiDrawRate,
    CampaignTally, EstimateMode, FixationEstimate, ResolveOptions, ResolvedRun, UrnFate,
};
pub use rubin::{direct_single_urn, rubin_single_urn};
pub use trajectory::{run, EscapeRule, Fixation, Horizon, RunOptions, StopRule, Trajectory};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::state::SystemState;
use crate::weights::{draw_distribution, WeightSequence};

/// Parameters of an interacting urn model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub urns: usize,
    pub colors: usize,
    pub p: f64,
    pub weights: WeightSequence,
}

impl ModelParams {
    pub fn new(urns: usize, colors: usize, p: f64, weights: WeightSequence) -> Result<Self> {
        if urns == 0 {
            return Err(invalid("need at least one urn"));
        }
        if colors < 2 {
            return Err(invalid("need at least two colors"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(Self { urns, colors, p, weights })
    }

    /// Two urns, two colors, `∞^i` weights.
    pub fn two_urn_infinite(p: f64) -> Result<Self> {
        Self::new(2, 2, p, WeightSequence::GeneralizedPower)
    }

    /// Checks the setting covered by the two-urn closed form.
    pub fn check_closed_form_setting(&self) -> Result<()> {
        if self.urns != 2 || self.colors != 2 || self.p > 0.5 {
            return Err(invalid("closed-form comparisons need 2 urns, 2 colors and p <= 1/2"));
        }
        Ok(())
    }

    pub fn is_infinite(&self) -> bool {
        self.weights.is_infinite()
    }
}

/// Deterministic random stream for one replica.
///
/// The sequence depends only on `(seed, replica_id)`, so replicas can run
/// in any order or in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub replica_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, replica_id: u64) -> Self {
        Self { seed, replica_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replica_id);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pool {
    Own,
    Combined,
}

/// What one urn did during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UrnDraw {
    pub pool: Pool,
    pub color: usize,
    /// The drawn color was not among the most numerous in its pool.
    pub ai_draw: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepRecord {
    pub draws: Vec<UrnDraw>,
}

impl StepRecord {
    pub fn has_ai_draw(&self) -> bool {
        self.draws.iter().any(|d| d.ai_draw)
    }
}

/// Advances the system by one synchronous step.
pub fn step<R: Rng + ?Sized>(
    state: &SystemState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<(SystemState, StepRecord)> {
    if state.urns() != params.urns || state.colors() != params.colors {
        return Err(invalid("state shape does not match the model parameters"));
    }
    let mut next = state.clone();
    let mut record = StepRecord::default();
    step_in_place(&mut next, params, rng, None, &mut record)?;
    Ok((next, record))
}

/// In-place step. `combined_prob` overrides `p` per urn; variates are
/// consumed in urn order, pool flip first, then the color.
pub(crate) fn step_in_place<R: Rng + ?Sized>(
    state: &mut SystemState,
    params: &ModelParams,
    rng: &mut R,
    combined_prob: Option<&[f64]>,
    record: &mut StepRecord,
) -> Result<()> {
    let combined = state.combined();
    let mut dist = vec![0.0; params.colors];
    record.draws.clear();
    for u in 0..params.urns {
        let pc = combined_prob.map_or(params.p, |c| c[u]);
        let pool = if rng.random::<f64>() < pc { Pool::Combined } else { Pool::Own };
        let counts = match pool {
            Pool::Own => state.urn(u),
            Pool::Combined => &combined[..],
        };
        draw_distribution(&params.weights, counts, &mut dist)?;
        let color = sample_index(&dist, rng.random::<f64>());
        let max = counts.iter().copied().max().unwrap_or(0);
        record.draws.push(UrnDraw { pool, color, ai_draw: counts[color] < max });
    }
    for (u, d) in record.draws.iter().enumerate() {
        state.add_ball(u, d.color);
    }
    Ok(())
}

/// Inverse-CDF pick; never returns a zero-probability index.
fn sample_index(dist: &[f64], x: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &pk) in dist.iter().enumerate() {
        if pk > 0.0 {
            acc += pk;
            last = k;
            if x < acc {
                return k;
            }
        }
    }
    last
}
