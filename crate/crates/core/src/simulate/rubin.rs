//! Single two-color urn: direct sequential sampler and Rubin's
//! exponential-clock construction.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{step_in_place, ModelParams, StepRecord};
use crate::error::{invalid, Result};
use crate::state::SystemState;
use crate::weights::WeightSequence;

/// Colors drawn by a single urn over `horizon` steps, sampled step by step.
pub fn direct_single_urn<R: Rng + ?Sized>(w: &WeightSequence, horizon: usize, rng: &mut R) -> Result<Vec<usize>> {
    let params = ModelParams::new(1, 2, 0.0, w.clone())?;
    let mut state = SystemState::empty(1, 2)?;
    let mut record = StepRecord::default();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        step_in_place(&mut state, &params, rng, None, &mut record)?;
        out.push(record.draws[0].color);
    }
    Ok(out)
}

/// Colors drawn by a single urn, realized from exponential clocks.
///
/// When the two current weights differ in `v` the larger one is drawn
/// outright. Otherwise each color holds a clock that rings after an
/// `Exp(u)` time at its current count; the first to ring is drawn and
/// restarts at its new count, while the other keeps its pending ring time.
pub fn rubin_single_urn<R: Rng + ?Sized>(w: &WeightSequence, horizon: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut counts = [0u64; 2];
    let mut ring: [Option<f64>; 2] = [None, None];
    let mut now = 0.0f64;
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let terms = [w.term(counts[0])?, w.term(counts[1])?];
        let color = if terms[0].v != terms[1].v {
            if terms[0].v > terms[1].v { 0 } else { 1 }
        } else {
            for k in 0..2 {
                if ring[k].is_none() {
                    let clock = Exp::new(terms[k].magnitude()).map_err(|e| invalid(format!("clock rate: {e}")))?;
                    ring[k] = Some(now + clock.sample(rng));
                }
            }
            let (a, b) = (ring[0].unwrap(), ring[1].unwrap());
            now = a.min(b);
            if a <= b { 0 } else { 1 }
        };
        ring[color] = None;
        counts[color] += 1;
        out.push(color);
    }
    Ok(out)
}
