//! Exact policy gradients of type-pair utilities and risk-adjusted objectives.
//!
//! Differentiating `(I - γP) V = r` gives
//!
//! ```text
//! dU = init · (I - γP)^{-1} (dr + γ dP V) = d · (dr + γ dP V)
//! ```
//!
//! with `d = (I - γP)^{-T} init` the discounted occupancy. For a logit of
//! player 1 in state `s` this collapses to `d_s · π(a) · (q(a) - Σ_b π(b) q(b))`
//! where `q(a1) = Σ_{a2} π₂(a2|s) (R(s,a1,a2) + γ Σ_{s'} T(s'|s,a1,a2) V(s'))`,
//! and symmetrically for player 2.

use crate::error::{Error, Result};
use crate::evaluation::{solve_all_pairs, utility_matrix, PairSolution, UtilityMatrix};
use crate::game::{Game, Player};
use crate::policy::{GradTensor, PolicyParams};
use crate::risk::{dist_from_matrix, RiskMeasure};

/// Solved type pairs for one parameter setting, shared between objectives
/// and gradients of both players.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    num_types: usize,
    pairs: Vec<PairSolution>,
}

impl PolicyEvaluation {
    pub fn new(g: &Game, theta: &PolicyParams) -> Result<Self> {
        let pairs = solve_all_pairs(g, theta)?;
        for p in &pairs {
            if !p.utilities.iter().all(|u| u.is_finite()) {
                return Err(Error::NonFinite("utility matrix"));
            }
        }
        Ok(PolicyEvaluation {
            num_types: g.num_types,
            pairs,
        })
    }

    pub fn utilities(&self, player: Player) -> Vec<f64> {
        self.pairs.iter().map(|p| p.utilities[player.index()]).collect()
    }

    pub fn utility_matrix(&self) -> UtilityMatrix {
        UtilityMatrix::from_rows(
            self.num_types,
            self.utilities(Player::One),
            self.utilities(Player::Two),
        )
        .expect("pair count matches type count")
    }

    /// Risk-adjusted objective of `player` and the per-pair weights realizing it.
    pub fn objective_weights(
        &self,
        g: &Game,
        player: Player,
        rm: &RiskMeasure,
    ) -> Result<(f64, Vec<f64>)> {
        let d = dist_from_matrix(&self.utilities(player), &g.type_prior)?;
        rm.apply(&d)
    }

    pub fn objective(&self, g: &Game, player: Player, rm: &RiskMeasure) -> Result<f64> {
        self.objective_weights(g, player, rm).map(|(v, _)| v)
    }

    /// Objective of `player` and its gradient with the risk weights held fixed.
    pub fn objective_grad(
        &self,
        g: &Game,
        player: Player,
        rm: &RiskMeasure,
    ) -> Result<(f64, GradTensor)> {
        let (value, weights) = self.objective_weights(g, player, rm)?;
        let mut grad = GradTensor::zeros_for(g);
        self.accumulate(g, player, &weights, 1.0, &mut grad);
        Ok((value, grad))
    }

    /// `out += scale · Σ_m weights[m] ∇U_player^{pair m}`.
    pub(crate) fn accumulate(
        &self,
        g: &Game,
        player: Player,
        weights: &[f64],
        scale: f64,
        out: &mut GradTensor,
    ) {
        let k = self.num_types;
        for (m, (sol, &w)) in self.pairs.iter().zip(weights).enumerate() {
            if w != 0.0 {
                add_pair_grad(g, sol, m / k, m % k, player, w * scale, out);
            }
        }
    }
}

fn add_pair_grad(
    g: &Game,
    sol: &PairSolution,
    j: usize,
    k: usize,
    player: Player,
    weight: f64,
    out: &mut GradTensor,
) {
    let [n1, n2] = g.num_actions;
    let own_type = match player {
        Player::One => j,
        Player::Two => k,
    };
    let values = &sol.values[player.index()];
    let mut q_joint = vec![0.0; n1 * n2];
    let mut q1 = vec![0.0; n1];
    let mut q2 = vec![0.0; n2];
    for s in 0..g.num_states {
        let occ = sol.occupancy[s] * weight;
        if occ == 0.0 {
            continue;
        }
        let rewards = g.reward_table(player, own_type, s);
        for a1 in 0..n1 {
            for a2 in 0..n2 {
                let next: f64 = g
                    .transition_row(s, a1, a2)
                    .iter()
                    .zip(values.iter())
                    .map(|(p, v)| p * v)
                    .sum();
                q_joint[a1 * n2 + a2] = rewards[a1 * n2 + a2] + g.discount * next;
            }
        }
        let pi1 = &sol.policies[0][s];
        let pi2 = &sol.policies[1][s];
        q1.fill(0.0);
        q2.fill(0.0);
        for a1 in 0..n1 {
            for a2 in 0..n2 {
                let q = q_joint[a1 * n2 + a2];
                q1[a1] += pi2[a2] * q;
                q2[a2] += pi1[a1] * q;
            }
        }
        softmax_backprop(pi1, &q1, occ, out.row_mut(Player::One, j, s));
        softmax_backprop(pi2, &q2, occ, out.row_mut(Player::Two, k, s));
    }
}

/// `row[a] += scale · π(a) (q(a) - Σ_b π(b) q(b))`.
fn softmax_backprop(pi: &[f64], q: &[f64], scale: f64, row: &mut [f64]) {
    let baseline: f64 = pi.iter().zip(q).map(|(p, q)| p * q).sum();
    for ((r, p), qa) in row.iter_mut().zip(pi).zip(q) {
        *r += scale * p * (qa - baseline);
    }
}

/// Exact gradient of `U_player^{j,k}` with respect to every logit.
pub fn pair_utility_grad(
    g: &Game,
    theta: &PolicyParams,
    j: usize,
    k: usize,
    player: Player,
) -> Result<GradTensor> {
    g.check_type(j)?;
    g.check_type(k)?;
    let eval = PolicyEvaluation::new(g, theta)?;
    let mut grad = GradTensor::zeros_for(g);
    add_pair_grad(g, &eval.pairs[j * g.num_types + k], j, k, player, 1.0, &mut grad);
    Ok(grad)
}

pub fn objective_grad(
    g: &Game,
    theta: &PolicyParams,
    player: Player,
    rm: &RiskMeasure,
) -> Result<(f64, GradTensor)> {
    rm.validate()?;
    PolicyEvaluation::new(g, theta)?.objective_grad(g, player, rm)
}

/// Zeroes every entry outside `player` (and outside type `ty`, when given).
pub fn restricted_grad(full: &GradTensor, player: Player, ty: Option<usize>) -> Result<GradTensor> {
    if let Some(ty) = ty {
        if ty >= full.num_types() {
            return Err(Error::IndexOutOfRange {
                what: "type",
                index: ty,
                limit: full.num_types(),
            });
        }
    }
    let mut out = GradTensor::zeros(full.num_types(), full.num_states(), full.num_actions());
    match ty {
        None => out.set_player_block(player, full.player_block(player))?,
        Some(ty) => out
            .type_block_mut(player, ty)
            .copy_from_slice(full.type_block(player, ty)),
    }
    Ok(out)
}

/// Risk-adjusted objective recomputed from scratch through [`utility_matrix`].
pub fn objective_value(
    g: &Game,
    theta: &PolicyParams,
    player: Player,
    rm: &RiskMeasure,
) -> Result<f64> {
    let um = utility_matrix(g, theta)?;
    rm.value(&dist_from_matrix(um.player(player), &g.type_prior)?)
}

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Central finite differences of [`objective_value`] over every logit.
pub fn finite_diff_grad(
    g: &Game,
    theta: &PolicyParams,
    player: Player,
    rm: &RiskMeasure,
    h: f64,
) -> Result<GradTensor> {
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("finite-difference step must be positive, got {h}")));
    }
    let mut grad = GradTensor::zeros_for(g);
    let mut probe = theta.clone();
    for p in Player::BOTH {
        for i in 0..theta.player_block(p).len() {
            let orig = theta.player_block(p)[i];
            probe.player_block_mut(p)[i] = orig + h;
            let up = objective_value(g, &probe, player, rm)?;
            probe.player_block_mut(p)[i] = orig - h;
            let down = objective_value(g, &probe, player, rm)?;
            probe.player_block_mut(p)[i] = orig;
            grad.player_block_mut(p)[i] = (up - down) / (2.0 * h);
        }
    }
    Ok(grad)
}
