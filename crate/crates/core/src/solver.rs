//! Entropic mirror ascent for the max-min allocation problem.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BanditInstance, Mode, SimplexWeights};
use crate::oracle::Oracle;

/// Values at or below this are treated as a degenerate (boundary) instance.
pub const DEGENERATE_VALUE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Target suboptimality of the averaged iterate, in game-value units.
    pub target_accuracy: f64,
    pub max_iterations: u64,
    /// Numerical floor applied to every iterate before renormalising.
    pub floor: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            target_accuracy: 1e-4,
            max_iterations: 1_000_000,
            floor: 1e-12,
        }
    }
}

impl SolveConfig {
    pub fn with_accuracy(target_accuracy: f64) -> Self {
        Self {
            target_accuracy,
            ..Self::default()
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if !(self.target_accuracy.is_finite() && self.target_accuracy > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "target accuracy must be finite and positive, got {}",
                self.target_accuracy
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.floor >= 0.0 && self.floor < 1.0 / k as f64) {
            return Err(Error::InvalidConfig(format!(
                "floor {} must lie in [0, 1/K)",
                self.floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    /// Average of the mirror ascent iterates.
    pub weights: SimplexWeights,
    /// Game value at `weights`.
    pub value: f64,
    /// `L * sqrt(2 log K / N)`: the optimum is at most `value + certified_gap`.
    pub certified_gap: f64,
    /// A posteriori upper bound on the optimum: the smaller of
    /// `value + certified_gap` and the largest coordinate of the averaged
    /// supergradients. Every supergradient `d` satisfies `F(w) <= <d, w>` on
    /// the simplex, hence `F(w*) <= max_a d_a` for any average of them.
    pub value_upper: f64,
    pub iterations: u64,
    /// False when the iteration cap stopped the run before the target accuracy was certified.
    pub certified: bool,
}

/// Lipschitz constant of `w -> T(mu, w)^{-1}` with respect to the l1 norm.
pub fn lipschitz_constant(instance: &BanditInstance) -> f64 {
    let means = instance.means();
    let eps = instance.epsilon();
    let mut best = 0.0f64;
    for &a in means {
        for &b in means {
            let v = match instance.mode() {
                Mode::Additive => (a - b + eps).powi(2) / 2.0,
                Mode::Multiplicative => {
                    let c = 1.0 - eps;
                    (a - b * c).powi(2) / (2.0 * c * c)
                }
            };
            best = best.max(v);
        }
    }
    best
}

/// Step size at iteration `n` (1-based).
pub fn learning_rate(lipschitz: f64, k: usize, n: u64) -> f64 {
    (2.0 * (k as f64).ln() / n as f64).sqrt() / lipschitz
}

/// Number of iterations needed to certify `accuracy`, before any cap.
pub fn iterations_for_accuracy(lipschitz: f64, k: usize, accuracy: f64) -> u64 {
    let n = (2.0 * lipschitz * lipschitz * (k as f64).ln() / (accuracy * accuracy)).ceil();
    if n >= u64::MAX as f64 {
        u64::MAX
    } else {
        (n as u64).max(1)
    }
}

pub fn certified_gap(lipschitz: f64, k: usize, iterations: u64) -> f64 {
    lipschitz * (2.0 * (k as f64).ln() / iterations as f64).sqrt()
}

/// Maximises the game value over the simplex by mirror ascent with the
/// negative-entropy mirror map, started from the uniform allocation.
pub fn mirror_ascent(instance: &BanditInstance, config: &SolveConfig) -> Result<SolveResult> {
    let k = instance.num_arms();
    config.validate(k)?;
    let oracle = Oracle::new(instance);
    let lipschitz = lipschitz_constant(instance);
    let needed = iterations_for_accuracy(lipschitz, k, config.target_accuracy);
    let iterations = needed.min(config.max_iterations);

    let mut w = vec![1.0 / k as f64; k];
    let mut avg = vec![0.0; k];
    let mut grad = vec![0.0; k];
    let mut grad_avg = vec![0.0; k];
    for n in 1..=iterations {
        let inv = 1.0 / n as f64;
        for (m, x) in avg.iter_mut().zip(&w) {
            *m += (x - *m) * inv;
        }
        if n == iterations {
            break;
        }
        oracle.value_and_supergradient(&w, &mut grad)?;
        for (m, g) in grad_avg.iter_mut().zip(&grad) {
            *m += (g - *m) * inv;
        }
        let step = learning_rate(lipschitz, k, n);
        let top = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (x, g) in w.iter_mut().zip(&grad) {
            *x *= (step * (g - top)).exp();
            total += *x;
        }
        let mut total_floored = 0.0;
        for x in w.iter_mut() {
            *x = (*x / total).max(config.floor);
            total_floored += *x;
        }
        w.iter_mut().for_each(|x| *x /= total_floored);
    }

    let sum: f64 = avg.iter().sum();
    avg.iter_mut().for_each(|x| *x /= sum);
    let value = oracle.value_and_supergradient(&avg, &mut grad)?;
    let gap = certified_gap(lipschitz, k, iterations);
    let max_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut value_upper = (value + gap).min(max_of(&grad));
    if iterations > 1 {
        value_upper = value_upper.min(max_of(&grad_avg));
    }
    Ok(SolveResult {
        weights: SimplexWeights::from_vec_unchecked(avg),
        value,
        certified_gap: gap,
        value_upper,
        iterations,
        certified: iterations >= needed,
    })
}

/// Characteristic time together with the solve that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicTime {
    /// `variance / value`: an upper estimate of the characteristic time.
    pub t_star: f64,
    /// Lower end of the certified bracket, `variance / value_upper`.
    pub t_star_lower: f64,
    pub solve: SolveResult,
}

pub fn solve_characteristic_time(
    instance: &BanditInstance,
    config: &SolveConfig,
) -> Result<CharacteristicTime> {
    let solve = mirror_ascent(instance, config)?;
    if solve.value <= DEGENERATE_VALUE {
        return Err(Error::DegenerateInstance(solve.value));
    }
    let var = instance.variance();
    Ok(CharacteristicTime {
        t_star: var / solve.value,
        t_star_lower: var / solve.value_upper,
        solve,
    })
}

pub fn characteristic_time(instance: &BanditInstance, config: &SolveConfig) -> Result<f64> {
    Ok(solve_characteristic_time(instance, config)?.t_star)
}
