//! Closed-form lower bounds and diagnostics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{good_set_of, margins, BanditInstance, Mode};

/// Bernoulli KL divergence `kl(p, q)`.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    let inside = |x: f64| x > 0.0 && x < 1.0;
    if !inside(p) || !inside(q) {
        return Err(Error::Domain(format!(
            "kl_bernoulli needs p, q in (0, 1), got ({p}, {q})"
        )));
    }
    Ok(p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln())
}

/// Asymptotic lower bound on the expected stopping time, `T* log(1 / (2.4 delta))`.
pub fn asymptotic_bound(t_star: f64, delta: f64) -> f64 {
    t_star * (1.0 / (2.4 * delta)).ln()
}

/// Moderate-confidence lower bound averaged over permuted instances:
/// `sum_b 1 / (mu_1 - mu_b + beta)^2 / (12 |G_beta|^3)`.
pub fn moderate_confidence_bound(instance: &BanditInstance) -> Result<f64> {
    let beta = margins(instance)?.beta.ok_or(Error::NoBadArm)?;
    let means = instance.means();
    let top = instance.max_mean();
    let g = good_set_of(means, beta, Mode::Additive).len() as f64;
    let sum: f64 = means.iter().map(|m| 1.0 / (top - m + beta).powi(2)).sum();
    Ok(sum / (12.0 * g * g * g))
}

/// The single-arm change-of-measure lower-bound constant of the upper/lower
/// margin construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginBound {
    /// `2 sum_a max(...)` keeping, for each arm, only the terms whose move of
    /// that single arm actually changes the good set. Always `<= T*`.
    pub value: f64,
    /// `2 sum_a max(1/(mu_1 - eps - mu_a)^2, 1/(mu_1 + alpha - mu_a)^2)` over
    /// every arm, exactly as the formula reads.
    pub as_printed: f64,
    /// Some denominator was exactly zero; those terms were skipped.
    pub degenerate: bool,
    /// `value` and `as_printed` differ by more than 1%.
    pub interpretation_differs: bool,
}

/// Evaluates the margin-based bound `f`.
///
/// Every term `1/d^2` corresponds to moving one arm `a` by `d`, to the
/// threshold `mu_1 - eps` or to `mu_1 + alpha`. A term only yields a valid
/// lower bound when that single move leaves the set of alternatives reachable,
/// which fails for example for the unique best arm. `value` keeps the valid
/// terms; `as_printed` keeps all of them.
pub fn margin_bound(instance: &BanditInstance) -> Result<MarginBound> {
    let alpha = margins(instance)?.alpha;
    let means = instance.means();
    let eps = instance.epsilon();
    let top = instance.max_mean();
    let reference = instance.good_set();
    let targets = [top - eps, top + alpha];

    let mut degenerate = false;
    let mut valid_sum = 0.0;
    let mut printed_sum = 0.0;
    for (a, &m) in means.iter().enumerate() {
        let mut printed = 0.0f64;
        let mut valid = 0.0f64;
        for target in targets {
            let d = target - m;
            if d == 0.0 {
                degenerate = true;
                continue;
            }
            let term = 1.0 / (d * d);
            printed = printed.max(term);
            if single_move_changes_answer(means, a, target, eps, &reference) {
                valid = valid.max(term);
            }
        }
        printed_sum += printed;
        valid_sum += valid;
    }
    let value = 2.0 * valid_sum;
    let as_printed = 2.0 * printed_sum;
    Ok(MarginBound {
        value,
        as_printed,
        degenerate,
        interpretation_differs: (as_printed - value).abs()
            > 0.01 * value.abs().max(f64::MIN_POSITIVE),
    })
}

/// Whether moving arm `a` to `target` (and infinitesimally past it) yields
/// an instance with a different additive good set.
fn single_move_changes_answer(
    means: &[f64],
    a: usize,
    target: f64,
    eps: f64,
    reference: &[usize],
) -> bool {
    let direction = (target - means[a]).signum();
    let scale = means.iter().fold(eps, |s, m| s.max(m.abs()));
    let nudge = 1e-9 * scale;
    let mut moved = means.to_vec();
    moved[a] = target + direction * nudge;
    good_set_of(&moved, eps, Mode::Additive) != reference
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub t_star: Option<f64>,
    pub asymptotic: Option<f64>,
    pub moderate_confidence: Option<f64>,
    pub margin_bound: Option<f64>,
    pub margin_as_printed: Option<f64>,
    pub flags: Vec<String>,
}
