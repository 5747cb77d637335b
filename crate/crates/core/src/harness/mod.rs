//! Monte Carlo campaigns, fixed-budget evaluation and their CSV output.
//!
//! # Campaign CSV
//!
//! One header, two kinds of rows:
//!
//! ```text
//! kind,delta,trial,seed,tau,correct,capped,mean_tau,q10,q90,error_rate,pull_1,...,pull_K
//! ```
//!
//! `kind=trial` rows fill `delta..capped` and the pull counts. `kind=summary`
//! rows (one per delta, after that delta's trials) fill `delta`, `trial` (the
//! number of trials), `capped` (number of capped trials) and the statistics.
//! Quantiles interpolate linearly between order statistics. With `timing`
//! enabled a trailing `wall_ms` column is added; it is the only column that
//! is not reproducible.
//!
//! Trial seeds are `base_seed ^ mix(delta_index, trial_index)` (see
//! [`trial_seed`]), so any single trial can be replayed with `run --seed`.

pub mod par;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, BanditInstance};
use crate::tracker::{self, Sampler, SamplingRule, TrackerConfig, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    TrackAndStop,
    UniformSampling,
}

impl Algorithm {
    pub fn sampling_rule(self) -> SamplingRule {
        match self {
            Algorithm::TrackAndStop => SamplingRule::CTracking,
            Algorithm::UniformSampling => SamplingRule::RoundRobin,
        }
    }
}

/// Settings shared by every run of a campaign, apart from delta.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub lazy_period: Option<u64>,
    pub max_solver_iterations: u64,
    pub tau_max: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        let d = TrackerConfig::default();
        Self {
            lazy_period: d.lazy_period,
            max_solver_iterations: d.max_solver_iterations,
            tau_max: d.tau_max,
        }
    }
}

impl RunSettings {
    pub fn tracker_config(&self, delta: f64, algorithm: Algorithm) -> TrackerConfig {
        TrackerConfig {
            delta,
            sampling: algorithm.sampling_rule(),
            lazy_period: self.lazy_period,
            max_solver_iterations: self.max_solver_iterations,
            tau_max: self.tau_max,
            check_every: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub instance: BanditInstance,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub threads: usize,
    pub algorithm: Algorithm,
    pub settings: RunSettings,
}

impl Campaign {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(Error::InvalidConfig("delta grid is empty".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
            return Err(Error::InvalidConfig(format!("delta {d} is outside (0, 1)")));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial_index` at grid position `delta_index`:
/// `base ^ splitmix64(splitmix64(delta_index) ^ trial_index)`.
pub fn trial_seed(base_seed: u64, delta_index: usize, trial_index: usize) -> u64 {
    base_seed ^ splitmix64(splitmix64(delta_index as u64) ^ trial_index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub delta: f64,
    pub trials: usize,
    pub mean_tau: f64,
    pub q10: f64,
    pub q90: f64,
    pub error_rate: f64,
    pub capped: usize,
}

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub delta_index: usize,
    pub delta: f64,
    pub trial: usize,
    pub record: TrialRecord,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub num_arms: usize,
    pub rows: Vec<TrialRow>,
    pub summaries: Vec<DeltaSummary>,
}

/// Linear interpolation between order statistics (`q` in `[0, 1]`).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(delta: f64, records: &[&TrialRecord]) -> DeltaSummary {
    let mut taus: Vec<f64> = records.iter().map(|r| r.stopping_time as f64).collect();
    taus.sort_by(f64::total_cmp);
    let n = records.len();
    DeltaSummary {
        delta,
        trials: n,
        mean_tau: taus.iter().sum::<f64>() / n as f64,
        q10: quantile(&taus, 0.1),
        q90: quantile(&taus, 0.9),
        error_rate: records.iter().filter(|r| !r.correct).count() as f64 / n as f64,
        capped: records.iter().filter(|r| r.capped).count(),
    }
}

/// Runs every (delta, trial) pair; trials are independent jobs.
pub fn run_campaign(campaign: &Campaign) -> Result<CampaignResult> {
    campaign.validate()?;
    let jobs: Vec<(usize, usize)> = (0..campaign.deltas.len())
        .flat_map(|d| (0..campaign.trials).map(move |t| (d, t)))
        .collect();
    let run_job = |&(d, t): &(usize, usize)| -> Result<TrialRow> {
        let delta = campaign.deltas[d];
        let config = campaign.settings.tracker_config(delta, campaign.algorithm);
        let seed = trial_seed(campaign.base_seed, d, t);
        let record = tracker::run(&campaign.instance, &config, seed)?;
        Ok(TrialRow {
            delta_index: d,
            delta,
            trial: t,
            record,
        })
    };
    let rows = par::map_parallel(&jobs, campaign.threads, run_job)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let summaries = campaign
        .deltas
        .iter()
        .enumerate()
        .map(|(d, &delta)| {
            let recs: Vec<&TrialRecord> = rows
                .iter()
                .filter(|r| r.delta_index == d)
                .map(|r| &r.record)
                .collect();
            summarize(delta, &recs)
        })
        .collect();
    Ok(CampaignResult {
        num_arms: campaign.instance.num_arms(),
        rows,
        summaries,
    })
}

pub fn write_campaign_csv<W: Write>(result: &CampaignResult, timing: bool, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "kind",
        "delta",
        "trial",
        "seed",
        "tau",
        "correct",
        "capped",
        "mean_tau",
        "q10",
        "q90",
        "error_rate",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=result.num_arms).map(|a| format!("pull_{a}")));
    if timing {
        header.push("wall_ms".into());
    }
    wtr.write_record(&header)?;

    let empty_pulls = || std::iter::repeat_n(String::new(), result.num_arms);
    for (d, summary) in result.summaries.iter().enumerate() {
        for row in result.rows.iter().filter(|r| r.delta_index == d) {
            let r = &row.record;
            let mut rec = vec![
                "trial".to_string(),
                row.delta.to_string(),
                row.trial.to_string(),
                r.seed.to_string(),
                r.stopping_time.to_string(),
                u8::from(r.correct).to_string(),
                u8::from(r.capped).to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ];
            rec.extend(r.pull_counts.iter().map(|n| n.to_string()));
            if timing {
                rec.push(format!("{:.3}", r.wall_time.as_secs_f64() * 1e3));
            }
            wtr.write_record(&rec)?;
        }
        let mut rec = vec![
            "summary".to_string(),
            summary.delta.to_string(),
            summary.trials.to_string(),
            String::new(),
            String::new(),
            String::new(),
            summary.capped.to_string(),
            summary.mean_tau.to_string(),
            summary.q10.to_string(),
            summary.q90.to_string(),
            summary.error_rate.to_string(),
        ];
        rec.extend(empty_pulls());
        if timing {
            rec.push(String::new());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Precision, recall and F1 of an estimated good set against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1_score(estimate: &[usize], truth: &[usize]) -> SetScore {
    let hits = estimate.iter().filter(|a| truth.contains(a)).count() as f64;
    let precision = if estimate.is_empty() {
        0.0
    } else {
        hits / estimate.len() as f64
    };
    let recall = if truth.is_empty() {
        0.0
    } else {
        hits / truth.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    SetScore {
        precision,
        recall,
        f1,
    }
}

/// Round-robin comparator: after `t` pulls the next arm is `t mod K`.
pub fn uniform_baseline_step(t: u64, k: usize) -> usize {
    tracker::round_robin_arm(t, k)
}

#[derive(Debug, Clone)]
pub struct BudgetRun {
    pub instance: BanditInstance,
    pub budget: u64,
    pub stride: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub settings: RunSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetPoint {
    pub t: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Runs the sampling rule alone until the budget is spent, scoring the
/// empirical good set at `t = K`, every `stride` pulls after that, and at the
/// budget.
pub fn budget_run(run: &BudgetRun) -> Result<Vec<BudgetPoint>> {
    let k = run.instance.num_arms();
    if run.budget < k as u64 {
        return Err(Error::InvalidConfig(format!(
            "budget {} is below K = {k}",
            run.budget
        )));
    }
    if run.stride == 0 {
        return Err(Error::InvalidConfig("stride must be at least 1".into()));
    }
    // delta is irrelevant without a stopping rule
    let config = run.settings.tracker_config(0.5, run.algorithm);
    let mut sampler = Sampler::new(k, run.instance.epsilon(), run.instance.mode(), config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let truth = run.instance.good_set();
    let mut points = Vec::new();
    let snapshot = |s: &Sampler| {
        let score = f1_score(&s.answer(), &truth);
        BudgetPoint {
            t: s.state().t(),
            precision: score.precision,
            recall: score.recall,
            f1: score.f1,
        }
    };
    while sampler.state().t() < run.budget {
        let arm = sampler.choose()?;
        let reward = model::sample_reward(&mut rng, &run.instance, arm);
        sampler.observe(arm, reward);
        let t = sampler.state().t();
        if t >= k as u64 && ((t - k as u64).is_multiple_of(run.stride) || t == run.budget) {
            points.push(snapshot(&sampler));
        }
    }
    Ok(points)
}

/// Mean final F1 of `budget_run` over several seeds.
pub fn mean_final_f1(run: &BudgetRun, seeds: &[u64], threads: usize) -> Result<f64> {
    let finals = par::map_parallel(seeds, threads, |&seed| {
        let r = BudgetRun {
            seed,
            ..run.clone()
        };
        budget_run(&r).map(|pts| pts.last().map_or(0.0, |p| p.f1))
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(finals.iter().sum::<f64>() / finals.len() as f64)
}

pub fn write_budget_csv<W: Write>(points: &[BudgetPoint], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "precision", "recall", "f1"])?;
    for p in points {
        wtr.write_record([
            p.t.to_string(),
            p.precision.to_string(),
            p.recall.to_string(),
            p.f1.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_definitions() {
        let s = f1_score(&[0, 1], &[0, 1]);
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = f1_score(&[0, 1, 2, 3], &[0, 1]);
        assert_eq!(s.precision, 0.5);
        assert_eq!(s.recall, 1.0);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(&[2], &[0]).f1, 0.0);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0];
        assert_eq!(quantile(&v, 0.1), 2.0);
        assert_eq!(quantile(&v, 0.9), 10.0);
        assert_eq!(quantile(&[4.0, 8.0], 0.5), 6.0);
    }

    #[test]
    fn seeds_differ_across_grid() {
        let a = trial_seed(42, 0, 0);
        assert_ne!(a, trial_seed(42, 0, 1));
        assert_ne!(a, trial_seed(42, 1, 0));
        assert_eq!(a, trial_seed(42, 0, 0));
    }

    #[test]
    fn uniform_baseline_cycles() {
        assert_eq!(uniform_baseline_step(5, 5), 0);
        let k = 3;
        let mut counts = vec![0u64; k];
        for t in 0..(4 * k as u64) {
            counts[uniform_baseline_step(t, k)] += 1;
        }
        assert_eq!(counts, vec![4, 4, 4]);
    }

    #[test]
    fn budget_equal_to_k_is_burn_in_only() {
        let inst = BanditInstance::additive(vec![0.9, 0.6, 0.1], 0.1).unwrap();
        let run = BudgetRun {
            instance: inst,
            budget: 3,
            stride: 10,
            seed: 1,
            algorithm: Algorithm::TrackAndStop,
            settings: RunSettings::default(),
        };
        let pts = budget_run(&run).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].t, 3);
    }

    #[test]
    fn budget_points_follow_stride() {
        let inst = BanditInstance::multiplicative(vec![0.9, 0.6, 0.1, 0.5], 0.5).unwrap();
        let run = BudgetRun {
            instance: inst,
            budget: 103,
            stride: 25,
            seed: 3,
            algorithm: Algorithm::UniformSampling,
            settings: RunSettings::default(),
        };
        let ts: Vec<u64> = budget_run(&run).unwrap().iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![4, 29, 54, 79, 103]);
    }

    #[test]
    fn campaign_validation() {
        let inst = BanditInstance::additive(vec![0.9, 0.6], 0.05).unwrap();
        let mut c = Campaign {
            instance: inst,
            deltas: vec![0.1],
            trials: 0,
            base_seed: 1,
            threads: 1,
            algorithm: Algorithm::TrackAndStop,
            settings: RunSettings::default(),
        };
        assert!(run_campaign(&c).is_err());
        c.trials = 1;
        c.deltas = vec![1.5];
        assert!(run_campaign(&c).is_err());
    }
}
