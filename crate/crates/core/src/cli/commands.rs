//! One function per subcommand, each returning a CSV table.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;

use super::{PmfMode, Rho, Sampler, SimMode, SimulateArgs};
use crate::analytic;
use crate::error::{invalid, Result};
use crate::oracle::{fixation_table, single_urn_sequence_law};
use crate::simulate::{
    campaign, direct_single_urn, estimate_fixation, rubin_single_urn, run_resolved, EstimateMode, Fixation, Horizon,
    ModelParams, ResolveOptions, RngStream, RunOptions,
};
use crate::weights::WeightSequence;

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Parses the column named `name` as floats; blank cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn need_replicas(replicas: u64) -> Result<()> {
    if replicas == 0 {
        return Err(invalid("need at least one replica"));
    }
    Ok(())
}

pub fn cmd_analytic(p: f64, ell_max: u32) -> Result<Table> {
    let cf = analytic::ClosedForm::new(p)?;
    let (lm, lp) = analytic::lambda_pm(p)?;
    let mut t = Table::new(&["p", "ell", "lambda_minus", "lambda_plus", "c", "a", "q0", "q_ell", "r_ell"]);
    for ell in 0..=ell_max {
        let r = if p < 0.5 { num(analytic::r_ell(p, ell)?) } else { String::new() };
        t.rows.push(vec![
            num(p),
            ell.to_string(),
            num(lm),
            num(lp),
            num(cf.c),
            num(cf.a),
            num(cf.q0),
            num(analytic::q_ell(p, ell)?),
            r,
        ]);
    }
    Ok(t)
}

pub fn cmd_oracle(p: f64, levels: usize, ell_max: usize) -> Result<Table> {
    if ell_max > levels {
        return Err(invalid(format!("ell-max {ell_max} exceeds the truncation level {levels}")));
    }
    let table = fixation_table(p, levels)?;
    let mut t = Table::new(&["p", "levels", "ell", "q_lower", "q_upper", "r_lower", "r_upper"]);
    for ell in 0..=ell_max {
        let (rl, ru) = if ell == 0 {
            (String::new(), String::new())
        } else {
            (num(table.r_lower[ell]), num(table.r_upper[ell]))
        };
        t.rows.push(vec![
            num(p),
            levels.to_string(),
            ell.to_string(),
            num(table.q_lower[ell]),
            num(table.q_upper[ell]),
            rl,
            ru,
        ]);
    }
    Ok(t)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Table> {
    let params = ModelParams::new(args.urns, args.colors, args.p, args.rho.weights.clone())?;
    let mode = match args.mode {
        SimMode::Bracket => EstimateMode::Bracket(args.horizon),
        SimMode::Ruin => EstimateMode::RuinShortcut,
    };
    let est = estimate_fixation(&params, args.common.replicas, args.common.seed, mode)?;
    let mut t = Table::new(&[
        "p", "rho", "urns", "colors", "mode", "replicas", "fixated", "escaped", "unresolved", "lower", "upper",
        "point", "stderr",
    ]);
    t.rows.push(vec![
        num(args.p),
        args.rho.text.clone(),
        args.urns.to_string(),
        args.colors.to_string(),
        match args.mode {
            SimMode::Bracket => "bracket".into(),
            SimMode::Ruin => "ruin".into(),
        },
        est.replicas.to_string(),
        est.fixated.to_string(),
        est.escaped.to_string(),
        est.unresolved.to_string(),
        num(est.lower),
        num(est.upper),
        num(est.point),
        num(est.stderr),
    ]);
    Ok(t)
}

/// Grid point `i` uses campaign seed `seed + i`.
pub fn cmd_sweep_p(p_min: f64, p_max: f64, points: usize, replicas: u64, seed: u64) -> Result<Table> {
    if points < 2 {
        return Err(invalid("sweep needs at least two grid points"));
    }
    if !(0.0..=0.5).contains(&p_min) || !(0.0..=0.5).contains(&p_max) || p_min >= p_max {
        return Err(invalid(format!("grid must satisfy 0 <= p-min < p-max <= 0.5, got [{p_min}, {p_max}]")));
    }
    need_replicas(replicas)?;
    let mut t = Table::new(&["p", "q0_analytic", "mc_lower", "mc_upper", "stderr"]);
    for i in 0..points {
        let p = p_min + (p_max - p_min) * i as f64 / (points - 1) as f64;
        let params = ModelParams::two_urn_infinite(p)?;
        let mode = if p < 0.5 { EstimateMode::RuinShortcut } else { EstimateMode::Bracket(Horizon::default()) };
        let est = estimate_fixation(&params, replicas, seed.wrapping_add(i as u64), mode)?;
        t.rows.push(vec![num(p), num(analytic::q0(p)?), num(est.lower), num(est.upper), num(est.stderr)]);
    }
    Ok(t)
}

/// Row `i` uses campaign seed `seed + i`.
pub fn cmd_sweep_rho(p: f64, rho_list: &str, replicas: u64, horizon: Horizon, seed: u64) -> Result<Table> {
    need_replicas(replicas)?;
    let rhos = rho_list
        .split(',')
        .map(|s| super::parse_rho(s).map_err(invalid))
        .collect::<Result<Vec<Rho>>>()?;
    if rhos.is_empty() {
        return Err(invalid("empty rho list"));
    }
    let mut previous = 1.0;
    for r in &rhos {
        let Some(rho) = r.weights.rho() else {
            return Err(invalid("rho list must hold finite values"));
        };
        if rho <= previous {
            return Err(invalid("rho list must be strictly ascending"));
        }
        previous = rho;
    }
    let reference = analytic::q0(p)?;
    let options = RunOptions { horizon, ..RunOptions::default() };
    let mut t = Table::new(&[
        "rho",
        "estimate_lower",
        "estimate_upper",
        "midpoint",
        "deviation",
        "ai_draw_rate",
        "ai_stderr",
        "stderr",
    ]);
    for (i, r) in rhos.iter().enumerate() {
        let params = ModelParams::new(2, 2, p, r.weights.clone())?;
        let tally = campaign(&params, replicas, seed.wrapping_add(i as u64), &options)?;
        let est = tally.estimate();
        let ai = tally.ai_draw_rate();
        t.rows.push(vec![
            r.text.clone(),
            num(est.lower),
            num(est.upper),
            num(est.point),
            num((est.point - reference).abs()),
            num(ai.rate),
            num(ai.stderr),
            num(est.stderr),
        ]);
    }
    Ok(t)
}

/// Law of the number of urns left in the minority. The `mc` mode runs the
/// ruin-resolved simulation under `∞^i` weights.
pub fn cmd_nonconformist(urns: u32, p: f64, mode: PmfMode, replicas: u64, seed: u64) -> Result<Table> {
    let exact = analytic::nonconformist_pmf(urns, p)?;
    let pmf = match mode {
        PmfMode::Exact => exact,
        PmfMode::Mc => {
            need_replicas(replicas)?;
            let params = ModelParams::new(urns as usize, 2, p, WeightSequence::GeneralizedPower)?;
            let opts = ResolveOptions::default();
            let counts = (0..replicas)
                .into_par_iter()
                .map(|i| {
                    let run = run_resolved(&params, RngStream::new(seed, i), &opts)?;
                    Ok(match run.outcome {
                        Fixation::Unresolved => None,
                        _ => Some(run.nonconformists()),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut hist = vec![0u64; exact.len().max(1)];
            let mut resolved = 0u64;
            for n in counts.into_iter().flatten() {
                if n >= hist.len() {
                    hist.resize(n + 1, 0);
                }
                hist[n] += 1;
                resolved += 1;
            }
            if resolved == 0 {
                return Err(crate::Error::BudgetExceeded("no replica resolved its non-conformists".into()));
            }
            hist.iter().map(|&c| c as f64 / resolved as f64).collect()
        }
    };
    let mut t = Table::new(&["n", "probability"]);
    for (n, prob) in pmf.iter().enumerate() {
        t.rows.push(vec![n.to_string(), num(*prob)]);
    }
    Ok(t)
}

fn sequence_label(colors: &[usize]) -> String {
    colors.iter().map(|&c| if c == 0 { 'B' } else { 'W' }).collect()
}

/// Longest horizon for which the exact column is filled in.
const EXACT_HORIZON: usize = 16;

/// Empirical law of the first `horizon` colors (B = color 0). The `exact`
/// column holds the enumerated probability when the horizon is small.
pub fn cmd_single_urn(w: &WeightSequence, sampler: Sampler, horizon: usize, replicas: u64, seed: u64) -> Result<Table> {
    need_replicas(replicas)?;
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    let seqs = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i).rng();
            match sampler {
                Sampler::Direct => direct_single_urn(w, horizon, &mut rng),
                Sampler::Rubin => rubin_single_urn(w, horizon, &mut rng),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hist: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for s in seqs {
        *hist.entry(s).or_default() += 1;
    }
    let exact = if horizon <= EXACT_HORIZON { Some(single_urn_sequence_law(w, horizon)?) } else { None };
    let mut keys: Vec<Vec<usize>> = hist.keys().cloned().collect();
    if let Some(law) = &exact {
        keys.extend(law.iter().filter(|(_, &pr)| pr > 0.0).map(|(k, _)| k.clone()));
        keys.sort();
        keys.dedup();
    }
    let mut t = Table::new(&["sequence", "count", "frequency", "exact"]);
    for k in keys {
        let count = hist.get(&k).copied().unwrap_or(0);
        let ex = exact.as_ref().map(|law| num(law.get(&k).copied().unwrap_or(0.0))).unwrap_or_default();
        t.rows.push(vec![sequence_label(&k), count.to_string(), num(count as f64 / replicas as f64), ex]);
    }
    Ok(t)
}
