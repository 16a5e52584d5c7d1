//! Exact discounted evaluation of a fixed policy pair.
//!
//! Fixing π₁ʲ and π₂ᵏ turns the game into a Markov reward process with
//! transition matrix `P` and per-player expected rewards `r_i`. The discounted
//! values solve `(I - γP) V_i = r_i`, which we factorize densely once per
//! type pair.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{Game, Player};
use crate::policy::{softmax, PolicyParams};

/// Markov reward process induced by one policy pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JointChain {
    pub transition: DMatrix<f64>,
    pub rewards: [DVector<f64>; 2],
}

/// Exact utilities `u_i[j][k]` for every type pair, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    num_types: usize,
    values: [Vec<f64>; 2],
}

impl UtilityMatrix {
    pub fn from_rows(num_types: usize, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        for u in [&u1, &u2] {
            if u.len() != num_types * num_types {
                return Err(Error::ShapeMismatch {
                    expected: num_types * num_types,
                    got: u.len(),
                });
            }
        }
        Ok(UtilityMatrix {
            num_types,
            values: [u1, u2],
        })
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn get(&self, player: Player, j: usize, k: usize) -> f64 {
        self.values[player.index()][j * self.num_types + k]
    }

    /// Row-major `K×K` utilities of one player.
    pub fn player(&self, player: Player) -> &[f64] {
        &self.values[player.index()]
    }

    /// Per-pair social welfare `(u1 + u2) / 2`, row-major.
    pub fn social_welfare(&self) -> Vec<f64> {
        self.values[0]
            .iter()
            .zip(&self.values[1])
            .map(|(a, b)| (a + b) / 2.0)
            .collect()
    }
}

/// Per-state action distributions of player 1 (type `j`) and player 2 (type `k`).
pub(crate) fn pair_policies(
    theta: &PolicyParams,
    num_states: usize,
    j: usize,
    k: usize,
) -> [Vec<Vec<f64>>; 2] {
    let pi1 = (0..num_states)
        .map(|s| softmax(theta.row(Player::One, j, s)))
        .collect();
    let pi2 = (0..num_states)
        .map(|s| softmax(theta.row(Player::Two, k, s)))
        .collect();
    [pi1, pi2]
}

fn check_inputs(g: &Game, theta: &PolicyParams, j: usize, k: usize) -> Result<()> {
    if !theta.fits(g) {
        return Err(Error::ShapeMismatch {
            expected: PolicyParams::zeros_for(g).len(),
            got: theta.len(),
        });
    }
    g.check_type(j)?;
    g.check_type(k)
}

fn chain_from_policies(g: &Game, j: usize, k: usize, pi: &[Vec<Vec<f64>>; 2]) -> JointChain {
    let n = g.num_states;
    let [n1, n2] = g.num_actions;
    let mut transition = DMatrix::zeros(n, n);
    let mut r1 = DVector::zeros(n);
    let mut r2 = DVector::zeros(n);
    for s in 0..n {
        for a1 in 0..n1 {
            for a2 in 0..n2 {
                let w = pi[0][s][a1] * pi[1][s][a2];
                r1[s] += w * g.reward(Player::One, j, s, a1, a2);
                r2[s] += w * g.reward(Player::Two, k, s, a1, a2);
                for (s2, &p) in g.transition_row(s, a1, a2).iter().enumerate() {
                    transition[(s, s2)] += w * p;
                }
            }
        }
    }
    JointChain {
        transition,
        rewards: [r1, r2],
    }
}

/// Markov chain induced by player 1 acting as type `j` and player 2 as type `k`.
pub fn build_joint_chain(g: &Game, theta: &PolicyParams, j: usize, k: usize) -> Result<JointChain> {
    check_inputs(g, theta, j, k)?;
    let pi = pair_policies(theta, g.num_states, j, k);
    Ok(chain_from_policies(g, j, k, &pi))
}

fn resolvent_system(chain: &JointChain, gamma: f64) -> DMatrix<f64> {
    let n = chain.transition.nrows();
    DMatrix::identity(n, n) - chain.transition.scale(gamma)
}

/// Discounted utilities `init · V_i` of both players on `chain`.
pub fn evaluate_pair(chain: &JointChain, gamma: f64, init: &[f64]) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidDiscount(gamma));
    }
    let n = chain.transition.nrows();
    if init.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: init.len(),
        });
    }
    let lu = resolvent_system(chain, gamma).lu();
    let init = DVector::from_column_slice(init);
    let mut out = [0.0; 2];
    for (u, r) in out.iter_mut().zip(&chain.rewards) {
        let v = lu.solve(r).ok_or(Error::SingularSystem(0, 0))?;
        *u = init.dot(&v);
    }
    Ok((out[0], out[1]))
}

/// Everything the gradient code needs about one type pair.
#[derive(Debug, Clone)]
pub(crate) struct PairSolution {
    /// `[player][state][action]`
    pub policies: [Vec<Vec<f64>>; 2],
    pub values: [DVector<f64>; 2],
    /// Discounted state-visitation weights `(I - γP)^{-T} init`.
    pub occupancy: DVector<f64>,
    pub utilities: [f64; 2],
}

pub(crate) fn solve_pair(g: &Game, theta: &PolicyParams, j: usize, k: usize) -> Result<PairSolution> {
    let policies = pair_policies(theta, g.num_states, j, k);
    let chain = chain_from_policies(g, j, k, &policies);
    let system = resolvent_system(&chain, g.discount);
    let init = DVector::from_column_slice(&g.initial_state_dist);
    let occupancy = system
        .transpose()
        .lu()
        .solve(&init)
        .ok_or(Error::SingularSystem(j, k))?;
    let lu = system.lu();
    let v1 = lu.solve(&chain.rewards[0]).ok_or(Error::SingularSystem(j, k))?;
    let v2 = lu.solve(&chain.rewards[1]).ok_or(Error::SingularSystem(j, k))?;
    let utilities = [init.dot(&v1), init.dot(&v2)];
    Ok(PairSolution {
        policies,
        values: [v1, v2],
        occupancy,
        utilities,
    })
}

/// Solves every type pair, row-major over `(j, k)`.
pub(crate) fn solve_all_pairs(g: &Game, theta: &PolicyParams) -> Result<Vec<PairSolution>> {
    check_inputs(g, theta, 0, 0)?;
    let k = g.num_types;
    (0..k * k)
        .map(|m| solve_pair(g, theta, m / k, m % k))
        .collect()
}

pub fn utility_matrix(g: &Game, theta: &PolicyParams) -> Result<UtilityMatrix> {
    check_inputs(g, theta, 0, 0)?;
    let k = g.num_types;
    let mut u1 = Vec::with_capacity(k * k);
    let mut u2 = Vec::with_capacity(k * k);
    for j in 0..k {
        for kk in 0..k {
            let chain = build_joint_chain(g, theta, j, kk)?;
            let (a, b) = evaluate_pair(&chain, g.discount, &g.initial_state_dist)
                .map_err(|e| match e {
                    Error::SingularSystem(..) => Error::SingularSystem(j, kk),
                    other => other,
                })?;
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite("utility matrix"));
            }
            u1.push(a);
            u2.push(b);
        }
    }
    UtilityMatrix::from_rows(k, u1, u2)
}

/// Prior-weighted utilities `(Σ ξ[j][k] u1[j][k], Σ ξ[j][k] u2[j][k])`.
pub fn expected_utility(um: &UtilityMatrix, xi: &[f64]) -> Result<(f64, f64)> {
    let n = um.num_types * um.num_types;
    if xi.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: xi.len(),
        });
    }
    let dot = |u: &[f64]| u.iter().zip(xi).map(|(u, p)| u * p).sum::<f64>();
    Ok((dot(&um.values[0]), dot(&um.values[1])))
}

/// Monte-Carlo rollout estimates, used as an independent oracle in tests.
pub mod monte_carlo {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::JointChain;
    use crate::game::{Game, Player};
    use crate::policy::{softmax, PolicyParams};

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Estimate {
        pub mean: [f64; 2],
        pub std_err: [f64; 2],
    }

    /// Smallest horizon `H` with `γ^H · max_abs_reward / (1 - γ) < tail_tol`.
    pub fn truncation_horizon(gamma: f64, max_abs_reward: f64, tail_tol: f64) -> usize {
        if gamma == 0.0 || max_abs_reward == 0.0 {
            return 1;
        }
        let ratio = tail_tol * (1.0 - gamma) / max_abs_reward;
        if ratio >= 1.0 {
            return 1;
        }
        (ratio.ln() / gamma.ln()).floor() as usize + 1
    }

    fn sample(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    fn cumulative(probs: &[f64]) -> Vec<f64> {
        let mut acc = 0.0;
        probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    /// Same draw as [`sample`] on the running sums of its probabilities.
    fn sample_cdf(rng: &mut ChaCha8Rng, cdf: &[f64]) -> usize {
        let u: f64 = rng.random();
        // cdf is nondecreasing, so this count is the first index with u < cdf[i]
        let below = cdf.iter().map(|&c| usize::from(c <= u)).sum::<usize>();
        below.min(cdf.len() - 1)
    }

    #[derive(Default)]
    struct Moments {
        sum: [f64; 2],
        sum_sq: [f64; 2],
        n: usize,
    }

    impl Moments {
        fn add(&mut self, ret: [f64; 2]) {
            for i in 0..2 {
                self.sum[i] += ret[i];
                self.sum_sq[i] += ret[i] * ret[i];
            }
            self.n += 1;
        }

        fn finish(self) -> Estimate {
            let n = self.n as f64;
            let mut est = Estimate {
                mean: [0.0; 2],
                std_err: [0.0; 2],
            };
            for i in 0..2 {
                let mean = self.sum[i] / n;
                let var = ((self.sum_sq[i] / n - mean * mean) * n / (n - 1.0)).max(0.0);
                est.mean[i] = mean;
                est.std_err[i] = (var / n).sqrt();
            }
            est
        }
    }

    /// Simulates the game itself: actions from the softmax policies, next
    /// states from the transition kernel, realized rewards from the tables.
    pub fn rollout_game(
        g: &Game,
        theta: &PolicyParams,
        j: usize,
        k: usize,
        rollouts: usize,
        horizon: usize,
        seed: u64,
    ) -> Estimate {
        let [n1, n2] = g.num_actions;
        let pi1: Vec<Vec<f64>> = (0..g.num_states)
            .map(|s| cumulative(&softmax(theta.row(Player::One, j, s))))
            .collect();
        let pi2: Vec<Vec<f64>> = (0..g.num_states)
            .map(|s| cumulative(&softmax(theta.row(Player::Two, k, s))))
            .collect();
        // (rewards, next-state cdf) per (state, a1, a2)
        let cells: Vec<([f64; 2], Vec<f64>)> = (0..g.num_states)
            .flat_map(|s| (0..n1).flat_map(move |a1| (0..n2).map(move |a2| (s, a1, a2))))
            .map(|(s, a1, a2)| {
                (
                    [g.reward(Player::One, j, s, a1, a2), g.reward(Player::Two, k, s, a1, a2)],
                    cumulative(g.transition_row(s, a1, a2)),
                )
            })
            .collect();
        let init = cumulative(&g.initial_state_dist);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut moments = Moments::default();
        for _ in 0..rollouts {
            let mut s = sample_cdf(&mut rng, &init);
            let mut ret = [0.0; 2];
            let mut disc = 1.0;
            for _ in 0..horizon {
                let a1 = sample_cdf(&mut rng, &pi1[s]);
                let a2 = sample_cdf(&mut rng, &pi2[s]);
                let (r, next) = &cells[(s * n1 + a1) * n2 + a2];
                ret[0] += disc * r[0];
                ret[1] += disc * r[1];
                disc *= g.discount;
                s = sample_cdf(&mut rng, next);
            }
            moments.add(ret);
        }
        moments.finish()
    }

    /// Simulates a Markov reward process directly.
    pub fn rollout_chain(
        chain: &JointChain,
        gamma: f64,
        init: &[f64],
        rollouts: usize,
        horizon: usize,
        seed: u64,
    ) -> Estimate {
        let n = chain.transition.nrows();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|s| chain.transition.row(s).iter().copied().collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut moments = Moments::default();
        for _ in 0..rollouts {
            let mut s = sample(&mut rng, init);
            let mut ret = [0.0; 2];
            let mut disc = 1.0;
            for _ in 0..horizon {
                ret[0] += disc * chain.rewards[0][s];
                ret[1] += disc * chain.rewards[1][s];
                disc *= gamma;
                s = sample(&mut rng, &rows[s]);
            }
            moments.add(ret);
        }
        moments.finish()
    }
}
