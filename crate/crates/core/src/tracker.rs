//! Track-and-Stop: C-tracking sampling, GLR stopping and a single-run driver.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{self, good_set_of, BanditInstance, Mode, SimplexWeights};
use crate::oracle::Oracle;
use crate::solver::{mirror_ascent, SolveConfig};

/// Stopping threshold `log(1/delta) + (K/2) log(log(e + t/delta))`.
pub fn threshold(t: u64, delta: f64, k: usize) -> f64 {
    (1.0 / delta).ln() + 0.5 * k as f64 * (std::f64::consts::E + t as f64 / delta).ln().ln()
}

/// How the next arm is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingRule {
    /// Track the floored near-optimal allocation of the empirical instance.
    CTracking,
    /// Cycle through the arms.
    RoundRobin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub delta: f64,
    pub sampling: SamplingRule,
    /// Steps between weight recomputations; `None` means `100 * K`.
    pub lazy_period: Option<u64>,
    /// Iteration cap for each weight recomputation.
    pub max_solver_iterations: u64,
    /// Safety cap on the number of pulls.
    pub tau_max: u64,
    /// Evaluate the stopping rule every this many pulls.
    pub check_every: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            sampling: SamplingRule::CTracking,
            lazy_period: None,
            max_solver_iterations: 1_000_000,
            tau_max: 100_000_000,
            check_every: 1,
        }
    }
}

impl TrackerConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }

    pub fn lazy_period_for(&self, k: usize) -> u64 {
        self.lazy_period.unwrap_or(100 * k as u64).max(1)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.max_solver_iterations == 0 || self.check_every == 0 {
            return Err(Error::InvalidConfig(
                "iteration counts must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Sufficient statistics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    t: u64,
    pull_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    cumulative_weights: Vec<f64>,
    cached_weights: SimplexWeights,
    cache_age: u64,
}

impl TrackerState {
    pub fn new(k: usize) -> Self {
        Self {
            t: 0,
            pull_counts: vec![0; k],
            reward_sums: vec![0.0; k],
            cumulative_weights: vec![0.0; k],
            cached_weights: SimplexWeights::uniform(k),
            cache_age: 0,
        }
    }

    /// Builds a state directly from counts and cumulative allocations.
    pub fn from_parts(
        pull_counts: Vec<u64>,
        reward_sums: Vec<f64>,
        cumulative_weights: Vec<f64>,
    ) -> Result<Self> {
        let k = pull_counts.len();
        if reward_sums.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: reward_sums.len(),
            });
        }
        if cumulative_weights.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: cumulative_weights.len(),
            });
        }
        Ok(Self {
            t: pull_counts.iter().sum(),
            pull_counts,
            reward_sums,
            cumulative_weights,
            cached_weights: SimplexWeights::uniform(k),
            cache_age: 0,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.pull_counts.len()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    pub fn cumulative_weights(&self) -> &[f64] {
        &self.cumulative_weights
    }

    pub fn cached_weights(&self) -> &SimplexWeights {
        &self.cached_weights
    }

    pub fn empirical_means(&self) -> Vec<f64> {
        self.reward_sums
            .iter()
            .zip(&self.pull_counts)
            .map(|(s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
            .collect()
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.pull_counts[arm] += 1;
        self.reward_sums[arm] += reward;
        self.t += 1;
    }

    fn accumulate(&mut self, w: &[f64]) {
        for (c, x) in self.cumulative_weights.iter_mut().zip(w) {
            *c += x;
        }
    }

    /// Largest `|N_a(t) - sum of tracked weights|`.
    pub fn tracking_deviation(&self) -> f64 {
        self.pull_counts
            .iter()
            .zip(&self.cumulative_weights)
            .map(|(&n, c)| (n as f64 - c).abs())
            .fold(0.0, f64::max)
    }
}

/// GLR statistic `t * T(mu_hat, N/t)^{-1} / variance`.
///
/// Returns 0 when the empirical means do not form a valid instance (a
/// non-positive empirical mean in multiplicative mode): the run cannot stop
/// on such a sample.
pub fn z_statistic(state: &TrackerState, epsilon: f64, mode: Mode, variance: f64) -> Result<f64> {
    if let Some(index) = state.pull_counts.iter().position(|&n| n == 0) {
        return Err(Error::ZeroWeight { index });
    }
    let Ok(empirical) = BanditInstance::new(state.empirical_means(), epsilon, mode) else {
        return Ok(0.0);
    };
    let t = state.t as f64;
    let proportions: Vec<f64> = state.pull_counts.iter().map(|&n| n as f64 / t).collect();
    let value = Oracle::new(&empirical).value(&proportions)?;
    Ok(t * value / variance)
}

/// C-tracking choice: the arm furthest behind its cumulative allocation,
/// lowest index on ties.
pub fn next_arm(state: &TrackerState) -> usize {
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (a, (&n, c)) in state
        .pull_counts
        .iter()
        .zip(&state.cumulative_weights)
        .enumerate()
    {
        let gap = n as f64 - c;
        if gap < best_gap {
            best = a;
            best_gap = gap;
        }
    }
    best
}

/// Round-robin comparator: arm `t mod K`.
pub fn round_robin_arm(t: u64, k: usize) -> usize {
    (t % k as u64) as usize
}

/// Counters for the C-tracking guarantees checked after every pull.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct InvariantReport {
    /// Steps where some `N_a(t) < sqrt(t + K^2) - 2K`.
    pub min_count_violations: u64,
    /// Steps where the tracking deviation exceeded `K (1 + sqrt(t))`.
    pub tracking_violations: u64,
    /// Largest observed `deviation / (K (1 + sqrt(t)))`.
    pub worst_tracking_ratio: f64,
    pub steps_checked: u64,
}

impl InvariantReport {
    pub fn clean(&self) -> bool {
        self.min_count_violations == 0 && self.tracking_violations == 0
    }

    fn check(&mut self, state: &TrackerState) {
        let k = state.num_arms() as f64;
        let t = state.t as f64;
        let floor = (t + k * k).sqrt() - 2.0 * k;
        if state.pull_counts.iter().any(|&n| (n as f64) < floor) {
            self.min_count_violations += 1;
        }
        let bound = k * (1.0 + t.sqrt());
        let dev = state.tracking_deviation();
        if dev > bound {
            self.tracking_violations += 1;
        }
        self.worst_tracking_ratio = self.worst_tracking_ratio.max(dev / bound);
        self.steps_checked += 1;
    }
}

/// The sampling half of Track-and-Stop, shared by fixed-confidence runs and
/// fixed-budget evaluation.
#[derive(Debug, Clone)]
pub struct Sampler {
    epsilon: f64,
    mode: Mode,
    config: TrackerConfig,
    state: TrackerState,
    invariants: InvariantReport,
    solves: u64,
    uncertified_solves: u64,
}

impl Sampler {
    pub fn new(k: usize, epsilon: f64, mode: Mode, config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        if k < 2 {
            return Err(Error::TooFewArms(k));
        }
        Ok(Self {
            epsilon,
            mode,
            config,
            state: TrackerState::new(k),
            invariants: InvariantReport::default(),
            solves: 0,
            uncertified_solves: 0,
        })
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn invariants(&self) -> &InvariantReport {
        &self.invariants
    }

    pub fn solves(&self) -> (u64, u64) {
        (self.solves, self.uncertified_solves)
    }

    pub fn in_burn_in(&self) -> bool {
        self.state.t < self.state.num_arms() as u64
    }

    /// Picks the next arm. During burn-in every arm is pulled once, which is
    /// exactly what C-tracking does with uniform weights.
    pub fn choose(&mut self) -> Result<usize> {
        let k = self.state.num_arms();
        if self.in_burn_in() {
            let u = 1.0 / k as f64;
            self.state
                .cumulative_weights
                .iter_mut()
                .for_each(|c| *c += u);
            return Ok(next_arm(&self.state));
        }
        match self.config.sampling {
            SamplingRule::RoundRobin => {
                let u = 1.0 / k as f64;
                self.state
                    .cumulative_weights
                    .iter_mut()
                    .for_each(|c| *c += u);
                Ok(round_robin_arm(self.state.t, k))
            }
            SamplingRule::CTracking => {
                self.refresh_weights()?;
                let eta = model::exploration_rate(self.state.t, k);
                let floored = model::project_floor(&self.state.cached_weights, eta)?;
                self.state.accumulate(floored.as_slice());
                Ok(next_arm(&self.state))
            }
        }
    }

    fn refresh_weights(&mut self) -> Result<()> {
        let k = self.state.num_arms();
        let first = self.state.t == k as u64;
        if !first && self.state.cache_age < self.config.lazy_period_for(k) {
            self.state.cache_age += 1;
            return Ok(());
        }
        self.state.cache_age = 1;
        let Ok(empirical) =
            BanditInstance::new(self.state.empirical_means(), self.epsilon, self.mode)
        else {
            // keep the previous allocation until the empirical instance is valid again
            return Ok(());
        };
        let solve_config = SolveConfig {
            target_accuracy: 1.0 / (self.state.t as f64).sqrt(),
            max_iterations: self.config.max_solver_iterations,
            floor: 1e-12,
        };
        let res = mirror_ascent(&empirical, &solve_config)?;
        self.solves += 1;
        if !res.certified {
            self.uncertified_solves += 1;
        }
        self.state.cached_weights = res.weights;
        Ok(())
    }

    pub fn observe(&mut self, arm: usize, reward: f64) {
        self.state.record(arm, reward);
        self.invariants.check(&self.state);
    }

    pub fn z_statistic(&self, variance: f64) -> Result<f64> {
        z_statistic(&self.state, self.epsilon, self.mode, variance)
    }

    pub fn answer(&self) -> Vec<usize> {
        good_set_of(&self.state.empirical_means(), self.epsilon, self.mode)
    }
}

/// Outcome of one fixed-confidence run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub stopping_time: u64,
    /// Returned epsilon-good set (0-based).
    pub answer: Vec<usize>,
    pub correct: bool,
    pub seed: u64,
    pub pull_counts: Vec<u64>,
    #[serde(skip)]
    pub wall_time: Duration,
    /// The safety cap was hit before the stopping rule fired.
    pub capped: bool,
    pub invariants: InvariantReport,
    pub solves: u64,
    pub uncertified_solves: u64,
}

/// Serialisable view with 1-based arm indices and wall time in milliseconds.
#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub stopping_time: u64,
    pub answer: Vec<usize>,
    pub correct: bool,
    pub seed: u64,
    pub pull_counts: Vec<u64>,
    pub wall_ms: f64,
    pub capped: bool,
    pub invariants: InvariantReport,
    pub solves: u64,
    pub uncertified_solves: u64,
}

impl TrialRecord {
    pub fn report(&self) -> TrialReport {
        TrialReport {
            stopping_time: self.stopping_time,
            answer: self.answer.iter().map(|a| a + 1).collect(),
            correct: self.correct,
            seed: self.seed,
            pull_counts: self.pull_counts.clone(),
            wall_ms: self.wall_time.as_secs_f64() * 1e3,
            capped: self.capped,
            invariants: self.invariants,
            solves: self.solves,
            uncertified_solves: self.uncertified_solves,
        }
    }
}

/// Runs Track-and-Stop (or the round-robin comparator with the same stopping
/// rule) on `instance` with a ChaCha8 stream seeded from `seed`.
pub fn run(instance: &BanditInstance, config: &TrackerConfig, seed: u64) -> Result<TrialRecord> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = instance.num_arms();
    let mut sampler = Sampler::new(k, instance.epsilon(), instance.mode(), config.clone())?;
    let mut capped = false;
    loop {
        let arm = sampler.choose()?;
        let reward = model::sample_reward(&mut rng, instance, arm);
        sampler.observe(arm, reward);
        let t = sampler.state().t();
        if t < k as u64 {
            continue;
        }
        if (t - k as u64).is_multiple_of(config.check_every) {
            let z = sampler.z_statistic(instance.variance())?;
            if z > threshold(t, config.delta, k) {
                break;
            }
        }
        if t >= config.tau_max {
            capped = true;
            break;
        }
    }
    let answer = sampler.answer();
    let (solves, uncertified_solves) = sampler.solves();
    Ok(TrialRecord {
        stopping_time: sampler.state().t(),
        correct: answer == instance.good_set(),
        answer,
        seed,
        pull_counts: sampler.state().pull_counts().to_vec(),
        wall_time: start.elapsed(),
        capped,
        invariants: *sampler.invariants(),
        solves,
        uncertified_solves,
    })
}
