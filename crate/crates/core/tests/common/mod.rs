//! Shared helpers for the integration and acceptance tests: random instance
//! generation and a brute-force best-response oracle that does not share any
//! code with the library's sorted-prefix search.

#![allow(dead_code)]

use epsgood::model::good_set_of;
use epsgood::{BanditInstance, Mode, SimplexWeights};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Level an arm must reach to dominate an arm sitting at `t`.
fn raised(t: f64, eps: f64, mode: Mode) -> f64 {
    match mode {
        Mode::Additive => t + eps,
        Mode::Multiplicative => t / (1.0 - eps),
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Minimizes a convex function of one variable on `[lo, hi]`: dense grid,
/// then golden-section refinement around the best grid point.
pub fn minimize_convex(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    let step = (hi - lo) / points as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=points {
        let v = f(lo + step * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if f(c) <= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.min(f(0.5 * (a + b)))
}

/// Minimum of `sum_i w_i (mu_i - lambda_i)^2 / 2` over the closure of the set
/// of mean vectors whose good set differs from that of `means`.
///
/// Every alternative either demotes a good arm `k` (some `l` must climb to
/// `raised(lambda_k)`) or promotes a bad arm `k` (every other arm must sit at
/// or below `raised(lambda_k)`). For a fixed target arm both families are
/// one-dimensional convex problems in the level `t` of arm `k`.
pub fn brute_force_value(means: &[f64], eps: f64, mode: Mode, w: &[f64]) -> f64 {
    let good = good_set_of(means, eps, mode);
    let k_arms = means.len();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * eps - 1.0;
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * eps + 1.0;
    let lo = if mode == Mode::Multiplicative {
        lo.max(0.0)
    } else {
        lo
    };
    let points = 20_000;
    let mut best = f64::INFINITY;
    for k in 0..k_arms {
        if good.contains(&k) {
            for l in (0..k_arms).filter(|&l| l != k) {
                let f = |t: f64| {
                    0.5 * w[k] * pos(means[k] - t).powi(2)
                        + 0.5 * w[l] * pos(raised(t, eps, mode) - means[l]).powi(2)
                };
                best = best.min(minimize_convex(f, lo, hi, points));
            }
        } else {
            let f = |t: f64| {
                let r = raised(t, eps, mode);
                let mut s = 0.5 * w[k] * pos(t - means[k]).powi(2);
                for i in (0..k_arms).filter(|&i| i != k) {
                    s += 0.5 * w[i] * pos(means[i] - r).powi(2);
                }
                s
            };
            best = best.min(minimize_convex(f, lo, hi, points));
        }
    }
    best
}

/// Whether `lambda` lies in the closure of the alternative set: pushing it a
/// little further away from `means` changes the good set.
pub fn in_alt_closure(means: &[f64], eps: f64, mode: Mode, lambda: &[f64]) -> bool {
    let reference = good_set_of(means, eps, mode);
    [1e-9, 1e-7, 1e-5].iter().any(|s| {
        let pushed: Vec<f64> = means
            .iter()
            .zip(lambda)
            .map(|(m, l)| m + (1.0 + s) * (l - m))
            .collect();
        good_set_of(&pushed, eps, mode) != reference
    })
}

pub fn weighted_cost(means: &[f64], lambda: &[f64], w: &[f64]) -> f64 {
    means
        .iter()
        .zip(lambda)
        .zip(w)
        .map(|((m, l), w)| 0.5 * w * (m - l).powi(2))
        .sum()
}

/// Random simplex point with every coordinate at least `floor`.
pub fn random_weights<R: Rng>(rng: &mut R, k: usize, floor: f64) -> SimplexWeights {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    let scale = 1.0 - floor * k as f64;
    SimplexWeights::normalized(raw.iter().map(|x| floor + scale * x / s).collect()).unwrap()
}

/// Random instance with means in `[0, 1]` (multiplicative: `(0.05, 1]`) whose
/// arms all stay at least `gap` away from the threshold, so the game value is
/// bounded away from zero.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    k: usize,
    eps: f64,
    mode: Mode,
    gap: f64,
) -> BanditInstance {
    loop {
        let means: Vec<f64> = (0..k)
            .map(|_| match mode {
                Mode::Additive => rng.random::<f64>(),
                Mode::Multiplicative => 0.05 + 0.95 * rng.random::<f64>(),
            })
            .collect();
        let inst = BanditInstance::new(means, eps, mode).unwrap();
        let th = inst.threshold();
        if inst.means().iter().all(|m| (m - th).abs() >= gap) {
            return inst;
        }
    }
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}
