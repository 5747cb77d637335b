//! Bandit instances, epsilon-good sets, margins and simplex helpers.
//!
//! Arm indices are 0-based everywhere in the library. Anything printed for a
//! user (CLI JSON, CSV headers) is shifted to 1-based at the boundary.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the epsilon-good threshold is derived from the best mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Good iff `mu_a >= max mu - epsilon`.
    #[default]
    Additive,
    /// Good iff `mu_a >= (1 - epsilon) * max mu`.
    Multiplicative,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    means: Vec<f64>,
    epsilon: f64,
    #[serde(default)]
    mode: Mode,
    #[serde(default = "unit_variance")]
    variance: f64,
}

fn unit_variance() -> f64 {
    1.0
}

/// A Gaussian bandit problem together with the accuracy parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct BanditInstance {
    means: Vec<f64>,
    epsilon: f64,
    mode: Mode,
    variance: f64,
}

impl TryFrom<RawInstance> for BanditInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        BanditInstance::new(raw.means, raw.epsilon, raw.mode)?.with_variance(raw.variance)
    }
}

impl BanditInstance {
    /// Builds a unit-variance instance, validating every invariant.
    pub fn new(means: Vec<f64>, epsilon: f64, mode: Mode) -> Result<Self> {
        validate_means(&means, mode)?;
        let eps_ok = match mode {
            Mode::Additive => epsilon.is_finite() && epsilon > 0.0,
            Mode::Multiplicative => epsilon > 0.0 && epsilon < 1.0,
        };
        if !eps_ok {
            return Err(Error::InvalidEpsilon { epsilon, mode });
        }
        Ok(Self {
            means,
            epsilon,
            mode,
            variance: 1.0,
        })
    }

    pub fn additive(means: Vec<f64>, epsilon: f64) -> Result<Self> {
        Self::new(means, epsilon, Mode::Additive)
    }

    pub fn multiplicative(means: Vec<f64>, epsilon: f64) -> Result<Self> {
        Self::new(means, epsilon, Mode::Multiplicative)
    }

    pub fn with_variance(mut self, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidVariance(variance));
        }
        self.variance = variance;
        Ok(self)
    }

    /// Same epsilon, mode and variance, different means.
    pub fn with_means(&self, means: Vec<f64>) -> Result<Self> {
        validate_means(&means, self.mode)?;
        if means.len() != self.means.len() {
            return Err(Error::LengthMismatch {
                expected: self.means.len(),
                got: means.len(),
            });
        }
        Ok(Self {
            means,
            ..self.clone()
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn max_mean(&self) -> f64 {
        max_of(&self.means)
    }

    /// The value an arm must reach to be epsilon-good.
    pub fn threshold(&self) -> f64 {
        good_threshold(self.max_mean(), self.epsilon, self.mode)
    }

    pub fn good_set(&self) -> Vec<usize> {
        good_set_of(&self.means, self.epsilon, self.mode)
    }

    pub fn is_good(&self, arm: usize) -> bool {
        self.means[arm] >= self.threshold()
    }
}

fn validate_means(means: &[f64], mode: Mode) -> Result<()> {
    if means.len() < 2 {
        return Err(Error::TooFewArms(means.len()));
    }
    for (index, &m) in means.iter().enumerate() {
        if !m.is_finite() {
            return Err(Error::NonFiniteMean { index });
        }
        if mode == Mode::Multiplicative && m <= 0.0 {
            return Err(Error::NonPositiveMean { index, value: m });
        }
    }
    Ok(())
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn good_threshold(max_mean: f64, epsilon: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Additive => max_mean - epsilon,
        Mode::Multiplicative => (1.0 - epsilon) * max_mean,
    }
}

/// Epsilon-good set of an arbitrary mean vector, sorted ascending.
///
/// Works on raw slices so it can classify empirical means that would not pass
/// instance validation (e.g. a negative empirical mean in multiplicative mode).
/// Arms exactly on the threshold are good.
pub fn good_set_of(means: &[f64], epsilon: f64, mode: Mode) -> Vec<usize> {
    let threshold = good_threshold(max_of(means), epsilon, mode);
    (0..means.len())
        .filter(|&a| means[a] >= threshold)
        .collect()
}

pub fn good_set(instance: &BanditInstance) -> Vec<usize> {
    instance.good_set()
}

/// Upper and lower margins of an additive instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    /// Slack of the worst good arm above the threshold.
    pub alpha: f64,
    /// Slack of the best bad arm below the threshold; `None` when every arm is good.
    pub beta: Option<f64>,
}

pub fn margins(instance: &BanditInstance) -> Result<Margins> {
    if instance.mode() != Mode::Additive {
        return Err(Error::UnsupportedMode);
    }
    let threshold = instance.threshold();
    let mut alpha = f64::INFINITY;
    let mut beta: Option<f64> = None;
    for &m in instance.means() {
        if m >= threshold {
            alpha = alpha.min(m - threshold);
        } else {
            let gap = threshold - m;
            beta = Some(beta.map_or(gap, |b| b.min(gap)));
        }
    }
    Ok(Margins { alpha, beta })
}

/// Descending stable ordering of the arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmOrder {
    order: Vec<usize>,
    sorted: Vec<f64>,
}

impl ArmOrder {
    pub fn new(means: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..means.len()).collect();
        // sort_by is stable: equal means keep their original relative order.
        order.sort_by(|&a, &b| means[b].total_cmp(&means[a]));
        let sorted = order.iter().map(|&a| means[a]).collect();
        Self { order, sorted }
    }

    /// `order()[rank]` is the original index of the arm with that rank.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted_means(&self) -> &[f64] {
        &self.sorted
    }

    /// Inverse permutation: `ranks()[arm]` is the rank of `arm`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (rank, &arm) in self.order.iter().enumerate() {
            ranks[arm] = rank;
        }
        ranks
    }

    /// Scatters sorted values back to original arm order.
    pub fn unsort(&self, sorted_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.order.len()];
        for (rank, &arm) in self.order.iter().enumerate() {
            out[arm] = sorted_values[rank];
        }
        out
    }
}

/// A probability vector over arms.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexWeights(Vec<f64>);

const SIMPLEX_TOL: f64 = 1e-9;

impl SimplexWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "entry {i} is {}",
                weights[i]
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidWeights(format!("entries sum to {sum}")));
        }
        Ok(Self(weights))
    }

    /// Rescales a nonnegative vector with positive mass onto the simplex.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidWeights("cannot normalize".into()));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(weights)
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    /// Empirical proportions `N_a / t`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        Self::normalized(counts.iter().map(|&c| c as f64).collect())
    }

    /// Caller guarantees the simplex invariants.
    pub(crate) fn from_vec_unchecked(weights: Vec<f64>) -> Self {
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        Self(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Projects onto `{w in simplex : w_a >= eta}`.
///
/// Coordinates below the floor are lifted to `eta`; the remaining mass is
/// taken from the free coordinates proportionally. Repeats until no free
/// coordinate is pushed under the floor.
pub fn project_floor(w: &SimplexWeights, eta: f64) -> Result<SimplexWeights> {
    let k = w.len();
    if !(eta > 0.0 && eta <= 1.0 / k as f64 + 1e-15) {
        return Err(Error::InfeasibleFloor { eta, arms: k });
    }
    let src = w.as_slice();
    let mut pinned = vec![false; k];
    loop {
        let n_pinned = pinned.iter().filter(|p| **p).count();
        let free_mass: f64 = (0..k).filter(|&a| !pinned[a]).map(|a| src[a]).sum();
        let budget = 1.0 - n_pinned as f64 * eta;
        let mut changed = false;
        for a in 0..k {
            if pinned[a] {
                continue;
            }
            let scaled = if free_mass > 0.0 {
                src[a] * budget / free_mass
            } else {
                0.0
            };
            if scaled < eta {
                pinned[a] = true;
                changed = true;
            }
        }
        if !changed {
            let out = (0..k)
                .map(|a| {
                    if pinned[a] {
                        eta
                    } else {
                        src[a] * budget / free_mass
                    }
                })
                .collect();
            return Ok(SimplexWeights::from_vec_unchecked(out));
        }
        if pinned.iter().all(|p| *p) {
            return Ok(SimplexWeights::from_vec_unchecked(vec![1.0 / k as f64; k]));
        }
    }
}

/// Minimal exploration rate `1 / (2 sqrt(K^2 + t))`.
pub fn exploration_rate(t: u64, k: usize) -> f64 {
    let k = k as f64;
    1.0 / (2.0 * (k * k + t as f64).sqrt())
}

/// One Gaussian reward for `arm`.
pub fn sample_reward<R: Rng + ?Sized>(rng: &mut R, instance: &BanditInstance, arm: usize) -> f64 {
    let normal = Normal::new(instance.means[arm], instance.variance.sqrt())
        .expect("validated variance is positive");
    normal.sample(rng)
}
