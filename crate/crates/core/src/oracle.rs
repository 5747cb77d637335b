//! Best-response oracle for the inner minimisation over alternative instances.
//!
//! For fixed sampling weights the cheapest alternative either pushes one good
//! arm below the threshold (raising one other good arm to set the new maximum)
//! or lifts one bad arm onto the threshold (lowering a prefix of the best arms
//! onto the new maximum). Both families are finite, so the minimum is found by
//! enumeration in `O(K^2)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ArmOrder, BanditInstance, Mode, SimplexWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// A good arm `k` is lowered to `t_bar` while arm `l` is raised to the
    /// level that makes `k` sit on the new threshold.
    GoodMadeBad,
    /// A bad arm `k` is raised to `t_bar` while the `l` best arms are lowered
    /// to the level that makes `k` sit on the new threshold.
    BadMadeGood,
}

/// The minimising alternative for a given allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub case: Case,
    /// Arm whose class flips (0-based, original order).
    pub k: usize,
    /// `GoodMadeBad`: the raised arm (0-based, original order).
    /// `BadMadeGood`: number of top arms lowered.
    pub l: usize,
    pub t_bar: f64,
    /// Alternative means in original arm order.
    pub lambda: Vec<f64>,
    pub cost: f64,
}

/// Serialisable view of a [`BestResponse`] with 1-based arm indices.
#[derive(Debug, Clone, Serialize)]
pub struct BestResponseReport {
    pub case: Case,
    pub k: usize,
    pub l: usize,
    pub t_bar: f64,
    pub lambda: Vec<f64>,
    pub cost: f64,
}

impl BestResponse {
    pub fn report(&self) -> BestResponseReport {
        BestResponseReport {
            case: self.case,
            k: self.k + 1,
            l: match self.case {
                Case::GoodMadeBad => self.l + 1,
                Case::BadMadeGood => self.l,
            },
            t_bar: self.t_bar,
            lambda: self.lambda.clone(),
            cost: self.cost,
        }
    }

    /// Per-arm transport cost `(lambda_a - mu_a)^2 / 2`, a supergradient of the
    /// game value at the allocation that produced this response.
    pub fn supergradient(&self, means: &[f64]) -> Vec<f64> {
        self.lambda
            .iter()
            .zip(means)
            .map(|(l, m)| 0.5 * (l - m) * (l - m))
            .collect()
    }
}

/// `T_eps(mu, w)^{-1}`: the value of the inner minimisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameValue {
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    case: Case,
    /// rank of k in sorted order
    k_rank: usize,
    /// GoodMadeBad: rank of the raised arm; BadMadeGood: prefix length
    l: usize,
    /// original-index key for tie breaking
    key: (usize, usize),
    t: f64,
    cost: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        self.cost < other.cost || (self.cost == other.cost && self.key < other.key)
    }
}

/// Oracle with the sort and classification of an instance precomputed, so
/// repeated queries (mirror ascent) only pay for the enumeration.
#[derive(Debug, Clone)]
pub struct Oracle {
    order: ArmOrder,
    means: Vec<f64>,
    epsilon: f64,
    mode: Mode,
    /// good arms occupy ranks `0..n_good`
    n_good: usize,
}

impl Oracle {
    pub fn new(instance: &BanditInstance) -> Self {
        let order = ArmOrder::new(instance.means());
        let threshold = instance.threshold();
        let n_good = order
            .sorted_means()
            .iter()
            .take_while(|&&m| m >= threshold)
            .count();
        Self {
            order,
            means: instance.means().to_vec(),
            epsilon: instance.epsilon(),
            mode: instance.mode(),
            n_good,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Level the raised arms are moved to when `k` sits at `t`.
    #[inline]
    fn raised(&self, t: f64) -> f64 {
        match self.mode {
            Mode::Additive => t + self.epsilon,
            Mode::Multiplicative => t / (1.0 - self.epsilon),
        }
    }

    /// Optimal `t` and cost when arm `k` (weight `wk`, mean `mk`) moves to `t`
    /// and a group with total weight `w`, weighted mean `m` and weighted sum of
    /// squared deviations `m2` moves to `raised(t)`.
    #[inline]
    fn solve_pair(&self, wk: f64, mk: f64, w: f64, m: f64, m2: f64) -> (f64, f64) {
        match self.mode {
            Mode::Additive => {
                let e = self.epsilon;
                let t = (wk * mk + w * (m - e)) / (wk + w);
                let dk = t - mk;
                let dg = m - e - t;
                (t, 0.5 * (wk * dk * dk + m2 + w * dg * dg))
            }
            Mode::Multiplicative => {
                let c = 1.0 - self.epsilon;
                let t = (c * c * wk * mk + c * w * m) / (c * c * wk + w);
                let dk = t - mk;
                let dg = m - t / c;
                (t, 0.5 * (wk * dk * dk + m2 + w * dg * dg))
            }
        }
    }

    fn check_weights(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.means.len() {
            return Err(Error::LengthMismatch {
                expected: self.means.len(),
                got: w.len(),
            });
        }
        if let Some(index) = w.iter().position(|&x| x <= 0.0) {
            return Err(Error::ZeroWeight { index });
        }
        Ok(())
    }

    fn search(&self, w: &[f64]) -> Result<Candidate> {
        self.check_weights(w)?;
        let order = self.order.order();
        let sorted = self.order.sorted_means();
        let k_arms = sorted.len();
        let g = self.n_good;
        let mut best: Option<Candidate> = None;
        let mut offer = |c: Candidate| {
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        };

        for kr in 0..g {
            let (wk, mk) = (w[order[kr]], sorted[kr]);
            for lr in (0..g).filter(|&lr| lr != kr) {
                let (t, cost) = self.solve_pair(wk, mk, w[order[lr]], sorted[lr], 0.0);
                offer(Candidate {
                    case: Case::GoodMadeBad,
                    k_rank: kr,
                    l: lr,
                    key: (order[kr], order[lr]),
                    t,
                    cost,
                });
            }
        }

        if g < k_arms {
            // Weighted running moments of the prefix of length `l`.
            let (mut pw, mut pm, mut pm2) = (0.0f64, 0.0f64, 0.0f64);
            for l in 1..k_arms {
                let x = sorted[l - 1];
                let wx = w[order[l - 1]];
                let new_w = pw + wx;
                let delta = x - pm;
                pm += delta * wx / new_w;
                pm2 += wx * delta * (x - pm);
                pw = new_w;

                for kr in g.max(l)..k_arms {
                    let (t, cost) = self.solve_pair(w[order[kr]], sorted[kr], pw, pm, pm2);
                    let r = self.raised(t);
                    if sorted[l - 1] >= r && r > sorted[l] {
                        offer(Candidate {
                            case: Case::BadMadeGood,
                            k_rank: kr,
                            l,
                            key: (order[kr], l),
                            t,
                            cost,
                        });
                    }
                }
            }
        }

        best.ok_or(Error::DegenerateAlternative)
    }

    fn lambda_of(&self, c: &Candidate) -> Vec<f64> {
        let order = self.order.order();
        let mut lambda = self.means.clone();
        let r = self.raised(c.t);
        lambda[order[c.k_rank]] = c.t;
        match c.case {
            Case::GoodMadeBad => lambda[order[c.l]] = r,
            Case::BadMadeGood => {
                for &arm in &order[..c.l] {
                    lambda[arm] = r;
                }
            }
        }
        lambda
    }

    pub fn best_response(&self, w: &SimplexWeights) -> Result<BestResponse> {
        let c = self.search(w.as_slice())?;
        let order = self.order.order();
        Ok(BestResponse {
            case: c.case,
            k: order[c.k_rank],
            l: match c.case {
                Case::GoodMadeBad => order[c.l],
                Case::BadMadeGood => c.l,
            },
            t_bar: c.t,
            lambda: self.lambda_of(&c),
            cost: c.cost,
        })
    }

    pub fn value(&self, w: &[f64]) -> Result<f64> {
        Ok(self.search(w)?.cost)
    }

    /// Game value at `w`; writes the supergradient into `grad` (zeros for
    /// arms the best response leaves in place).
    pub fn value_and_supergradient(&self, w: &[f64], grad: &mut [f64]) -> Result<f64> {
        let c = self.search(w)?;
        let order = self.order.order();
        let sorted = self.order.sorted_means();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let r = self.raised(c.t);
        let dk = c.t - sorted[c.k_rank];
        grad[order[c.k_rank]] = 0.5 * dk * dk;
        let lifted = match c.case {
            Case::GoodMadeBad => c.l..c.l + 1,
            Case::BadMadeGood => 0..c.l,
        };
        for rank in lifted {
            let d = r - sorted[rank];
            grad[order[rank]] = 0.5 * d * d;
        }
        Ok(c.cost)
    }
}

pub fn best_response(instance: &BanditInstance, w: &SimplexWeights) -> Result<BestResponse> {
    Oracle::new(instance).best_response(w)
}

pub fn game_value(instance: &BanditInstance, w: &SimplexWeights) -> Result<GameValue> {
    Ok(GameValue {
        value: Oracle::new(instance).value(w.as_slice())?,
    })
}

pub fn supergradient(instance: &BanditInstance, w: &SimplexWeights) -> Result<Vec<f64>> {
    let oracle = Oracle::new(instance);
    let mut grad = vec![0.0; instance.num_arms()];
    oracle.value_and_supergradient(w.as_slice(), &mut grad)?;
    Ok(grad)
}
