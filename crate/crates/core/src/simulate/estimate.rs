//! Monte Carlo campaigns over independent replicas.

use rand::Rng;
use rayon::prelude::*;

use super::trajectory::{run_with, Fixation, Horizon, RunOptions, StopRule};
use super::{step_in_place, ModelParams, RngStream, StepRecord};
use crate::error::{invalid, Result};
use crate::state::{strict_argmax, SystemState};

/// Half-width of the Wilson score interval at one standard deviation.
pub fn wilson_halfwidth(fraction: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let n = n as f64;
    (fraction * (1.0 - fraction) / n + 1.0 / (4.0 * n * n)).sqrt() / (1.0 + 1.0 / n)
}

/// Counts merged over replicas. Merging is associative and commutative on
/// the integer fields; the float sum is accumulated in replica order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CampaignTally {
    pub replicas: u64,
    pub fixated: u64,
    pub escaped: u64,
    pub unresolved: u64,
    /// Fixated runs that contained at least one AI-draw.
    pub fixated_with_ai: u64,
    /// Sum over escaped runs of their return-probability bound.
    pub escaped_bound: f64,
}

impl CampaignTally {
    fn push(&mut self, fixation: Fixation, ai: bool, bound: f64) {
        self.replicas += 1;
        match fixation {
            Fixation::Fixated(_) => {
                self.fixated += 1;
                if ai {
                    self.fixated_with_ai += 1;
                }
            }
            Fixation::Escaped => {
                self.escaped += 1;
                self.escaped_bound += bound;
            }
            Fixation::Unresolved => self.unresolved += 1,
        }
    }

    /// `[lower, upper]` bracket on the fixation probability.
    pub fn bracket(&self) -> (f64, f64) {
        let n = self.replicas as f64;
        let lower = self.fixated as f64 / n;
        let upper = (self.fixated as f64 + self.unresolved as f64 + self.escaped_bound) / n;
        (lower, upper.min(1.0))
    }

    pub fn estimate(&self) -> FixationEstimate {
        let (lower, upper) = self.bracket();
        let point = 0.5 * (lower + upper);
        FixationEstimate {
            replicas: self.replicas,
            fixated: self.fixated,
            escaped: self.escaped,
            unresolved: self.unresolved,
            lower,
            upper,
            point,
            stderr: wilson_halfwidth(point, self.replicas),
        }
    }

    pub fn ai_draw_rate(&self) -> AiDrawRate {
        let rate = self.fixated_with_ai as f64 / self.replicas as f64;
        AiDrawRate { rate, stderr: wilson_halfwidth(rate, self.replicas) }
    }
}

/// Runs `replicas` trajectories in parallel; replica `i` uses stream `(seed, i)`.
pub fn campaign(params: &ModelParams, replicas: u64, seed: u64, options: &RunOptions) -> Result<CampaignTally> {
    if replicas == 0 {
        return Err(invalid("need at least one replica"));
    }
    let summaries = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let tr = run_with(params, &mut RngStream::new(seed, i).rng(), options)?;
            let ai = tr.tau.is_some();
            Ok((tr.fixation, ai, tr.return_bound))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally = CampaignTally::default();
    for (f, ai, bound) in summaries {
        tally.push(f, ai, bound);
    }
    Ok(tally)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimateMode {
    /// Lower bound counts runs settled in the absorbing class; upper bound
    /// adds unresolved runs and the ruin bound of escaped ones.
    Bracket(Horizon),
    /// `∞^i` weights and `p < 1/2` only: deep excursions of the deficit walk
    /// are decided by sampling the gambler's-ruin return probability.
    RuinShortcut,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixationEstimate {
    pub replicas: u64,
    pub fixated: u64,
    pub escaped: u64,
    pub unresolved: u64,
    pub lower: f64,
    pub upper: f64,
    pub point: f64,
    pub stderr: f64,
}

/// Estimates the probability that all urns end up drawing one color.
pub fn estimate_fixation(params: &ModelParams, replicas: u64, seed: u64, mode: EstimateMode) -> Result<FixationEstimate> {
    match mode {
        EstimateMode::Bracket(horizon) => {
            let options = RunOptions { horizon, stop_rule: StopRule::AtHorizon, ..RunOptions::default() };
            Ok(campaign(params, replicas, seed, &options)?.estimate())
        }
        EstimateMode::RuinShortcut => {
            check_ruin(params)?;
            if replicas == 0 {
                return Err(invalid("need at least one replica"));
            }
            let opts = ResolveOptions::default();
            let runs = (0..replicas)
                .into_par_iter()
                .map(|i| run_resolved(params, RngStream::new(seed, i), &opts).map(|r| r.outcome))
                .collect::<Result<Vec<_>>>()?;
            let mut tally = CampaignTally::default();
            for f in runs {
                tally.push(f, false, 0.0);
            }
            Ok(tally.estimate())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiDrawRate {
    /// Fraction of runs that fixate and contain an AI-draw.
    pub rate: f64,
    pub stderr: f64,
}

pub fn ai_draw_rate(params: &ModelParams, replicas: u64, seed: u64, horizon: Horizon) -> Result<AiDrawRate> {
    let options = RunOptions { horizon, ..RunOptions::default() };
    Ok(campaign(params, replicas, seed, &options)?.ai_draw_rate())
}

fn check_ruin(params: &ModelParams) -> Result<()> {
    if !params.is_infinite() {
        return Err(invalid("the ruin shortcut needs infinite (generalized power) weights"));
    }
    if params.p >= 0.5 {
        return Err(invalid(format!("the ruin shortcut needs p < 1/2, got {}", params.p)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolveOptions {
    /// Deficit at which an excursion is decided by the ruin probability.
    pub level: u64,
    pub cap: u64,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        Self { level: 30, cap: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UrnFate {
    Conforming,
    Escaped,
    Pending,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub fates: Vec<UrnFate>,
    pub majority: Option<usize>,
    pub outcome: Fixation,
    pub steps: u64,
}

impl ResolvedRun {
    pub fn nonconformists(&self) -> usize {
        self.fates.iter().filter(|f| **f == UrnFate::Escaped).count()
    }
}

/// Runs one replica under `∞^i` weights until every urn's fate is decided.
///
/// Once the combined majority color `g` can no longer lose its lead, a
/// non-conforming urn at deficit `d` performs a walk that steps down with
/// probability `p` and up with `1-p`. When `d` reaches `options.level` its
/// return to zero is sampled with probability `(p/(1-p))^d`. A returning
/// walk is continued under the conditioned law (down with probability
/// `1-p`) until it hits zero; an escaping urn is marked and only draws
/// from itself afterwards.
pub fn run_resolved(params: &ModelParams, stream: RngStream, options: &ResolveOptions) -> Result<ResolvedRun> {
    check_ruin(params)?;
    let mut rng = stream.rng();
    resolve_with(params, &mut rng, options)
}

fn resolve_with<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R, options: &ResolveOptions) -> Result<ResolvedRun> {
    let p = params.p;
    let ratio = p / (1.0 - p);
    let urns = params.urns;
    let mut state = SystemState::empty(urns, params.colors)?;
    let mut pool_prob = vec![p; urns];
    let mut conditioned = vec![false; urns];
    let mut escaped = vec![false; urns];
    let mut record = StepRecord::default();

    let finish = |state: &SystemState, escaped: &[bool], outcome: Fixation, steps: u64| {
        let majority = strict_argmax(&state.combined());
        let fates = (0..urns)
            .map(|u| {
                if escaped[u] {
                    UrnFate::Escaped
                } else if majority.is_some() && strict_argmax(state.urn(u)) == majority {
                    UrnFate::Conforming
                } else {
                    UrnFate::Pending
                }
            })
            .collect();
        ResolvedRun { fates, majority, outcome, steps }
    };

    for t in 0..=options.cap {
        if let Some(g) = state.consensus_color() {
            return Ok(finish(&state, &escaped, Fixation::Fixated(g), t));
        }
        if p == 0.0 && t > 0 && (0..urns).all(|u| strict_argmax(state.urn(u)).is_some()) {
            let majority = strict_argmax(&state.combined());
            for (u, e) in escaped.iter_mut().enumerate() {
                *e = majority.is_none() || strict_argmax(state.urn(u)) != majority;
            }
            return Ok(finish(&state, &escaped, Fixation::Escaped, t));
        }
        if let Some((_, nonconf)) = state.nonconforming_deficits() {
            // the majority lead can only grow while conforming urns are not outnumbered
            if urns - nonconf.len() >= nonconf.len() {
                for &(u, d) in &nonconf {
                    if conditioned[u] && d == 0 {
                        conditioned[u] = false;
                        pool_prob[u] = p;
                    }
                    if !conditioned[u] && !escaped[u] && d >= options.level {
                        if rng.random::<f64>() < ratio.powi(d as i32) {
                            conditioned[u] = true;
                            pool_prob[u] = 1.0 - p;
                        } else {
                            escaped[u] = true;
                            pool_prob[u] = 0.0;
                        }
                    }
                }
                if nonconf.iter().all(|&(u, _)| escaped[u]) {
                    return Ok(finish(&state, &escaped, Fixation::Escaped, t));
                }
            }
        }
        if t == options.cap {
            break;
        }
        step_in_place(&mut state, params, rng, Some(&pool_prob), &mut record)?;
    }
    Ok(finish(&state, &escaped, Fixation::Unresolved, options.cap))
}
