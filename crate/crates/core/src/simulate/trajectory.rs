//! Single trajectories with stopping times and fixation status.

use rand::Rng;

use super::{step_in_place, ModelParams, RngStream, StepRecord};
use crate::error::{invalid, Result};
use crate::state::{strict_argmax, ConfigClass, SystemState};

/// When a run stops, in addition to its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    AtHorizon,
    AtSigma3,
    AtTauOrSigma3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// Exactly this many steps at most.
    Fixed(u64),
    /// Stop once settled in the absorbing class or clearly escaped, or at `cap`.
    Auto { cap: u64 },
}

impl Horizon {
    pub fn limit(&self) -> u64 {
        match *self {
            Horizon::Fixed(n) => n,
            Horizon::Auto { cap } => cap,
        }
    }
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon::Auto { cap: 100_000 }
    }
}

/// A run counts as escaped once every non-conforming urn has stayed at
/// deficit `>= level` for `hold` consecutive steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EscapeRule {
    pub level: u64,
    pub hold: u64,
}

impl Default for EscapeRule {
    fn default() -> Self {
        Self { level: 30, hold: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub horizon: Horizon,
    pub stop_rule: StopRule,
    pub escape: EscapeRule,
    /// Under finite weights an absorbing state counts as settled once every
    /// pool leads by this many balls.
    pub settle_margin: u64,
    /// Keep per-step records and the class sequence.
    pub record_steps: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            horizon: Horizon::default(),
            stop_rule: StopRule::AtHorizon,
            escape: EscapeRule::default(),
            settle_margin: 30,
            record_steps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixation {
    Fixated(usize),
    Escaped,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// Class of `S_0, S_1, ...` (two urns, two colors only).
    pub classes: Vec<ConfigClass>,
    pub sigma2: Option<u64>,
    pub sigma3: Option<u64>,
    /// First step containing an AI-draw.
    pub tau: Option<u64>,
    pub fixation: Fixation,
    /// `Y_n`: index of `C2(Y_n)` at each time spent in phase 2.
    pub deficit_series: Vec<u64>,
    pub steps: u64,
    pub final_state: SystemState,
    /// Upper bound on the probability that an escaped run would still fixate.
    pub return_bound: f64,
}

/// Runs one replica from the empty state.
pub fn run(params: &ModelParams, stream: RngStream, options: &RunOptions) -> Result<Trajectory> {
    let mut rng = stream.rng();
    run_with(params, &mut rng, options)
}

pub(crate) fn run_with<R: Rng + ?Sized>(
    params: &ModelParams,
    rng: &mut R,
    options: &RunOptions,
) -> Result<Trajectory> {
    if options.horizon.limit() == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let two_by_two = params.urns == 2 && params.colors == 2;
    let infinite = params.is_infinite();
    let auto = matches!(options.horizon, Horizon::Auto { .. });

    let mut state = SystemState::empty(params.urns, params.colors)?;
    let mut record = StepRecord::default();
    let mut traj = Trajectory {
        records: Vec::new(),
        classes: Vec::new(),
        sigma2: None,
        sigma3: None,
        tau: None,
        fixation: Fixation::Unresolved,
        deficit_series: Vec::new(),
        steps: 0,
        final_state: state.clone(),
        return_bound: 1.0,
    };
    let mut held = 0u64;
    let mut t = 0u64;
    loop {
        let consensus = state.consensus_color();
        if two_by_two {
            let class = state.classify()?;
            if let ConfigClass::C2(l) = class {
                traj.sigma2.get_or_insert(t);
                traj.deficit_series.push(l);
            }
            if options.record_steps {
                traj.classes.push(class);
            }
        }
        if consensus.is_some() {
            traj.sigma3.get_or_insert(t);
        }

        let stop_event = match options.stop_rule {
            StopRule::AtHorizon => false,
            StopRule::AtSigma3 => traj.sigma3.is_some(),
            StopRule::AtTauOrSigma3 => traj.sigma3.is_some() || traj.tau.is_some(),
        };
        if stop_event {
            break;
        }
        if auto {
            if let Some(g) = consensus {
                let margin = state.consensus_margin().unwrap_or(0);
                if infinite || margin >= options.settle_margin {
                    traj.fixation = Fixation::Fixated(g);
                    break;
                }
            }
            if infinite && params.p == 0.0 && frozen(&state) {
                // every urn only ever draws its own strict majority from here on
                traj.fixation = Fixation::Escaped;
                traj.return_bound = 0.0;
                break;
            }
            match escape_depth(&state) {
                Some((n_nonconf, depth)) if depth >= options.escape.level => {
                    held += 1;
                    if held >= options.escape.hold {
                        traj.fixation = Fixation::Escaped;
                        traj.return_bound = ruin_bound(params.p, options.escape.level, n_nonconf);
                        break;
                    }
                }
                _ => held = 0,
            }
        }
        if t >= options.horizon.limit() {
            break;
        }
        step_in_place(&mut state, params, rng, None, &mut record)?;
        t += 1;
        if traj.tau.is_none() && record.has_ai_draw() {
            traj.tau = Some(t);
        }
        if options.record_steps {
            traj.records.push(record.clone());
        }
    }
    if traj.fixation == Fixation::Unresolved {
        if let Some(g) = state.consensus_color() {
            traj.fixation = Fixation::Fixated(g);
        }
    }
    traj.steps = t;
    traj.final_state = state;
    Ok(traj)
}

/// Each urn has a strict majority of its own.
fn frozen(state: &SystemState) -> bool {
    (0..state.urns()).all(|u| strict_argmax(state.urn(u)).is_some())
}

/// `(non-conforming urns, smallest deficit among them)` when the global
/// majority cannot shrink; `None` otherwise.
pub(crate) fn escape_depth(state: &SystemState) -> Option<(usize, u64)> {
    let (_, nonconf) = state.nonconforming_deficits()?;
    let conforming = state.urns() - nonconf.len();
    if nonconf.is_empty() || conforming < nonconf.len() {
        return None;
    }
    Some((nonconf.len(), nonconf.iter().map(|&(_, d)| d).min()?))
}

/// Gambler's-ruin bound on returning from depth `level` for `n` walks.
pub(crate) fn ruin_bound(p: f64, level: u64, n: usize) -> f64 {
    if p >= 0.5 {
        return 1.0;
    }
    (n as f64 * (p / (1.0 - p)).powi(level as i32)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightSequence;

    fn recorded(horizon: u64) -> RunOptions {
        RunOptions { horizon: Horizon::Fixed(horizon), record_steps: true, ..RunOptions::default() }
    }

    #[test]
    fn phases_are_monotone_at_infinity() {
        for p in [0.0, 0.1, 0.3, 0.5, 0.8] {
            let params = ModelParams::two_urn_infinite(p).unwrap();
            for i in 0..300 {
                let tr = run(&params, RngStream::new(42, i), &recorded(300)).unwrap();
                assert_eq!(tr.classes.len() as u64, tr.steps + 1);
                assert!(tr.classes.windows(2).all(|w| w[0].phase() <= w[1].phase()));
                assert_eq!(tr.tau, None);
                if let (Some(s2), Some(s3)) = (tr.sigma2, tr.sigma3) {
                    assert!(s2 <= s3);
                }
                assert_eq!(tr.sigma3.is_some(), matches!(tr.fixation, Fixation::Fixated(_)));
                let phase2 = tr.classes.iter().filter(|c| c.phase() == 2).count();
                assert_eq!(tr.deficit_series.len(), phase2);
            }
        }
    }

    #[test]
    fn deficit_walk_moves_by_one() {
        let params = ModelParams::two_urn_infinite(0.3).unwrap();
        for i in 0..200 {
            let tr = run(&params, RngStream::new(9, i), &recorded(400)).unwrap();
            assert!(tr.deficit_series.windows(2).all(|w| w[0].abs_diff(w[1]) == 1));
        }
    }

    #[test]
    fn stop_rules() {
        let params = ModelParams::two_urn_infinite(0.3).unwrap();
        let opts = RunOptions { horizon: Horizon::Fixed(10_000), stop_rule: StopRule::AtSigma3, ..Default::default() };
        for i in 0..100 {
            let tr = run(&params, RngStream::new(1, i), &opts).unwrap();
            if let Some(s3) = tr.sigma3 {
                assert_eq!(tr.steps, s3);
            }
        }
        let finite = ModelParams::new(2, 2, 0.3, WeightSequence::classical(2.0).unwrap()).unwrap();
        let opts = RunOptions { horizon: Horizon::Fixed(500), stop_rule: StopRule::AtTauOrSigma3, ..Default::default() };
        for i in 0..100 {
            let tr = run(&finite, RngStream::new(1, i), &opts).unwrap();
            let first = match (tr.tau, tr.sigma3) {
                (Some(a), Some(b)) => a.min(b),
                (a, b) => a.or(b).unwrap_or(500),
            };
            assert_eq!(tr.steps, first);
        }
    }

    #[test]
    fn finite_rho_sees_ai_draws() {
        let params = ModelParams::new(2, 2, 0.3, WeightSequence::classical(2.0).unwrap()).unwrap();
        let opts = RunOptions { horizon: Horizon::Fixed(200), ..Default::default() };
        let hits = (0..2000)
            .filter(|&i| run(&params, RngStream::new(3, i), &opts).unwrap().tau.is_some())
            .count();
        assert!(hits > 0);
    }

    #[test]
    fn p_zero_freezes_after_first_step() {
        let params = ModelParams::two_urn_infinite(0.0).unwrap();
        let opts = RunOptions::default();
        for i in 0..200 {
            let tr = run(&params, RngStream::new(8, i), &opts).unwrap();
            assert_eq!(tr.steps, 1);
            assert!(matches!(tr.fixation, Fixation::Fixated(_) | Fixation::Escaped));
        }
    }

    #[test]
    fn zero_horizon_rejected() {
        let params = ModelParams::two_urn_infinite(0.3).unwrap();
        let opts = RunOptions { horizon: Horizon::Fixed(0), ..Default::default() };
        assert!(run(&params, RngStream::new(0, 0), &opts).is_err());
    }

    #[test]
    fn identical_streams_identical_trajectories() {
        let params = ModelParams::new(2, 2, 0.3, WeightSequence::classical(8.0).unwrap()).unwrap();
        let opts = RunOptions { horizon: Horizon::Fixed(300), record_steps: true, ..Default::default() };
        let a = run(&params, RngStream::new(77, 5), &opts).unwrap();
        let b = run(&params, RngStream::new(77, 5), &opts).unwrap();
        assert_eq!(a, b);
    }
}
