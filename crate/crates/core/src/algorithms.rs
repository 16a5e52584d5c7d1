//! Policy optimization loops: iterated best response, fictitious play, dual
//! ascent, and the backward-induction baselines.
//!
//! The gradient solvers ascend the configured [`RiskMeasure`] of each player's
//! type-pair utility distribution. With `RiskMeasure::Expectation` they are
//! the risk-neutral variants, with `Cvar` the risk-sensitive ones.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::expected_utility;
use crate::game::{Game, Player};
use crate::gradients::PolicyEvaluation;
use crate::policy::{FpAverage, GradTensor, PolicyParams};
use crate::risk::{dot, DiscreteUtilityDist, RiskMeasure};

/// Logit magnitude used to encode pure strategies.
pub const PURE_LOGIT: f64 = 50.0;

pub const DEFAULT_MMBI_HORIZON: usize = 50;

/// Largest number of type-conditional decision rules MMBI will enumerate per state.
pub const MAX_DECISION_RULES: usize = 1 << 16;

const INIT_JITTER_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eta1: f64,
    pub eta2: f64,
    pub risk: RiskMeasure,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub grad_tol: f64,
    pub seed: u64,
    /// Start from N(0, 0.01²) logits drawn from `seed` instead of all zeros.
    pub init_jitter: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eta1: 0.3,
            eta2: 0.3,
            risk: RiskMeasure::Expectation,
            outer_iters: 200,
            inner_iters: 50,
            grad_tol: 1e-6,
            seed: 0,
            init_jitter: false,
        }
    }
}

impl SolverConfig {
    pub fn with_risk(mut self, risk: RiskMeasure) -> Self {
        self.risk = risk;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {x}")))
            }
        };
        positive("eta1", self.eta1)?;
        positive("eta2", self.eta2)?;
        positive("grad_tol", self.grad_tol)?;
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::InvalidConfig("iteration counts must be at least 1".into()));
        }
        self.risk.validate()
    }
}

/// Objectives after one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub u1: f64,
    pub u2: f64,
    pub rho1: f64,
    pub rho2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub theta: PolicyParams,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub iterations_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Mmbi,
    Ibr,
    Fp,
    Dapg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Mmbi, SolverKind::Ibr, SolverKind::Fp, SolverKind::Dapg];

    pub fn label(self) -> &'static str {
        match self {
            SolverKind::Mmbi => "MMBI",
            SolverKind::Ibr => "IBR",
            SolverKind::Fp => "FP",
            SolverKind::Dapg => "DAPG",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mmbi" => Ok(SolverKind::Mmbi),
            "ibr" => Ok(SolverKind::Ibr),
            "fp" => Ok(SolverKind::Fp),
            "dapg" => Ok(SolverKind::Dapg),
            other => Err(Error::InvalidConfig(format!("unknown solver `{other}`"))),
        }
    }
}

/// Runs `kind` with `cfg`; `mmbi_horizon` is only read by MMBI.
pub fn solve(kind: SolverKind, g: &Game, cfg: &SolverConfig, mmbi_horizon: usize) -> Result<SolveResult> {
    match kind {
        SolverKind::Mmbi => solve_mmbi(g, cfg, mmbi_horizon),
        SolverKind::Ibr => solve_ibr(g, cfg),
        SolverKind::Fp => solve_fp(g, cfg),
        SolverKind::Dapg => solve_dapg(g, cfg),
    }
}

pub fn initial_theta(g: &Game, cfg: &SolverConfig) -> PolicyParams {
    let mut theta = PolicyParams::zeros_for(g);
    if cfg.init_jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, INIT_JITTER_STD).expect("valid normal");
        for x in theta.iter_mut() {
            *x = normal.sample(&mut rng);
        }
    }
    theta
}

fn evaluate(g: &Game, theta: &PolicyParams, iterations: usize) -> Result<PolicyEvaluation> {
    PolicyEvaluation::new(g, theta).map_err(|e| match e {
        Error::NonFinite(_) | Error::SingularSystem(..) => Error::NonFiniteObjective { iterations },
        other => other,
    })
}

fn trace_entry(g: &Game, theta: &PolicyParams, rm: &RiskMeasure, iterations: usize) -> Result<TraceEntry> {
    let eval = evaluate(g, theta, iterations)?;
    let (u1, u2) = expected_utility(&eval.utility_matrix(), &g.type_prior)?;
    let entry = TraceEntry {
        u1,
        u2,
        rho1: eval.objective(g, Player::One, rm)?,
        rho2: eval.objective(g, Player::Two, rm)?,
    };
    if [entry.u1, entry.u2, entry.rho1, entry.rho2].iter().all(|x| x.is_finite()) {
        Ok(entry)
    } else {
        Err(Error::NonFiniteObjective { iterations })
    }
}

fn check_finite(theta: &PolicyParams, iterations: usize) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteObjective { iterations })
    }
}

/// Inner gradient-ascent loop on `player`'s own logits with the opponent fixed.
/// Returns the gradient norm at the first inner step.
fn ascend_player(
    g: &Game,
    theta: &mut PolicyParams,
    player: Player,
    eta: f64,
    cfg: &SolverConfig,
    outer: usize,
) -> Result<f64> {
    let mut first_norm = None;
    for _ in 0..cfg.inner_iters {
        let (value, grad) = evaluate(g, theta, outer)?.objective_grad(g, player, &cfg.risk)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective { iterations: outer });
        }
        let norm = grad.block_norm(player);
        first_norm.get_or_insert(norm);
        if norm < cfg.grad_tol {
            break;
        }
        for (t, d) in theta
            .player_block_mut(player)
            .iter_mut()
            .zip(grad.player_block(player))
        {
            *t += eta * d;
        }
    }
    check_finite(theta, outer)?;
    Ok(first_norm.unwrap_or(0.0))
}

fn solve_best_response(g: &Game, cfg: &SolverConfig, fictitious: bool) -> Result<SolveResult> {
    g.validate()?;
    cfg.validate()?;
    let mut theta = initial_theta(g, cfg);
    let mut average = FpAverage::new(theta.player_block(Player::One).len());
    average.push(theta.player_block(Player::One))?;

    let mut trace = Vec::with_capacity(cfg.outer_iters);
    let mut converged = false;
    for outer in 0..cfg.outer_iters {
        let norm1 = ascend_player(g, &mut theta, Player::One, cfg.eta1, cfg, outer)?;
        let norm2 = if fictitious {
            average.push(theta.player_block(Player::One))?;
            let mut against_average = theta.clone();
            against_average.set_player_block(Player::One, average.mean())?;
            let norm = ascend_player(g, &mut against_average, Player::Two, cfg.eta2, cfg, outer)?;
            theta.set_player_block(Player::Two, against_average.player_block(Player::Two))?;
            norm
        } else {
            ascend_player(g, &mut theta, Player::Two, cfg.eta2, cfg, outer)?
        };
        trace.push(trace_entry(g, &theta, &cfg.risk, outer)?);
        if norm1 < cfg.grad_tol && norm2 < cfg.grad_tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        theta,
        iterations_used: trace.len(),
        trace,
        converged,
    })
}

/// Iterated best response: player 1 ascends with player 2 fixed, then
/// player 2 ascends against the updated player 1.
pub fn solve_ibr(g: &Game, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_best_response(g, cfg, false)
}

/// Fictitious play: like [`solve_ibr`], but player 2 responds to the running
/// mean of player 1's outer-iteration parameters (initial parameters included).
pub fn solve_fp(g: &Game, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_best_response(g, cfg, true)
}

/// Dual ascent: every type slice of both players moves along the gradient of
/// `ρ(U1) + ρ(U2)`, all slices evaluated at the iteration-start parameters.
pub fn solve_dapg(g: &Game, cfg: &SolverConfig) -> Result<SolveResult> {
    g.validate()?;
    cfg.validate()?;
    let mut theta = initial_theta(g, cfg);
    let mut trace = Vec::with_capacity(cfg.outer_iters);
    let mut converged = false;
    for outer in 0..cfg.outer_iters {
        let eval = evaluate(g, &theta, outer)?;
        let mut grad = GradTensor::zeros_for(g);
        for player in Player::BOTH {
            let (value, weights) = eval.objective_weights(g, player, &cfg.risk)?;
            if !value.is_finite() {
                return Err(Error::NonFiniteObjective { iterations: outer });
            }
            eval.accumulate(g, player, &weights, 1.0, &mut grad);
        }
        let small = grad.norm() < cfg.grad_tol;
        if !small {
            for ty in 0..g.num_types {
                for (player, eta) in [(Player::One, cfg.eta1), (Player::Two, cfg.eta2)] {
                    let step = grad.type_block(player, ty);
                    for (t, d) in theta.type_block_mut(player, ty).iter_mut().zip(step) {
                        *t += eta * d;
                    }
                }
            }
            check_finite(&theta, outer)?;
        }
        trace.push(trace_entry(g, &theta, &cfg.risk, outer)?);
        if small {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        theta,
        iterations_used: trace.len(),
        trace,
        converged,
    })
}

/// One action per own type for each player: `(a1 for type j)_j, (a2 for type k)_k`.
struct DecisionRules {
    num_types: usize,
    num_actions: [usize; 2],
    count: usize,
}

impl DecisionRules {
    fn new(g: &Game) -> Result<Self> {
        let per_player = |n: usize| n.checked_pow(g.num_types as u32);
        let count = per_player(g.num_actions[0])
            .zip(per_player(g.num_actions[1]))
            .and_then(|(a, b)| a.checked_mul(b))
            .filter(|&c| c <= MAX_DECISION_RULES)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "backward induction would enumerate more than {MAX_DECISION_RULES} decision rules per state"
                ))
            })?;
        Ok(DecisionRules {
            num_types: g.num_types,
            num_actions: g.num_actions,
            count,
        })
    }

    /// Decodes rule `r` into per-type actions of both players.
    fn decode(&self, mut r: usize, out: &mut [Vec<usize>; 2]) {
        for p in 0..2 {
            for ty in 0..self.num_types {
                out[p][ty] = r % self.num_actions[p];
                r /= self.num_actions[p];
            }
        }
    }
}

/// Backward-induction baseline producing pure type-conditional policies.
///
/// Works on the social-welfare reward `(r1 + r2) / 2`. At every stage and
/// state it enumerates decision rules (one action per player per own type),
/// forms the value atom of every type pair under that rule, and keeps the rule
/// whose atoms score best under `cfg.risk` with masses `ξ`. The first-stage
/// rules become a stationary policy encoded with ±[`PURE_LOGIT`] logits.
pub fn solve_mmbi(g: &Game, cfg: &SolverConfig, horizon: usize) -> Result<SolveResult> {
    g.validate()?;
    cfg.risk.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let rules = DecisionRules::new(g)?;
    let k = g.num_types;
    let pairs = k * k;
    let n = g.num_states;

    // values[m * n + s]: stage value of type pair m from state s
    let mut values = vec![0.0; pairs * n];
    let mut next_values = vec![0.0; pairs * n];
    let mut chosen = vec![0usize; n];
    let mut actions = [vec![0; k], vec![0; k]];
    let mut atoms = vec![0.0; pairs];
    for _stage in (1..=horizon).rev() {
        for s in 0..n {
            let mut best: Option<(f64, usize)> = None;
            for r in 0..rules.count {
                rules.decode(r, &mut actions);
                for (m, atom) in atoms.iter_mut().enumerate() {
                    let (j, kk) = (m / k, m % k);
                    let (a1, a2) = (actions[0][j], actions[1][kk]);
                    let welfare = 0.5
                        * (g.reward(Player::One, j, s, a1, a2) + g.reward(Player::Two, kk, s, a1, a2));
                    let future: f64 = dot(g.transition_row(s, a1, a2), &values[m * n..(m + 1) * n]);
                    *atom = welfare + g.discount * future;
                }
                let score = rule_score(&cfg.risk, &atoms, &g.type_prior)?;
                if best.is_none_or(|(b, _)| score > b) {
                    best = Some((score, r));
                }
            }
            let (_, r) = best.expect("at least one decision rule");
            chosen[s] = r;
            rules.decode(r, &mut actions);
            for m in 0..pairs {
                let (j, kk) = (m / k, m % k);
                let (a1, a2) = (actions[0][j], actions[1][kk]);
                let welfare =
                    0.5 * (g.reward(Player::One, j, s, a1, a2) + g.reward(Player::Two, kk, s, a1, a2));
                next_values[m * n + s] =
                    welfare + g.discount * dot(g.transition_row(s, a1, a2), &values[m * n..(m + 1) * n]);
            }
        }
        std::mem::swap(&mut values, &mut next_values);
    }

    let mut theta = PolicyParams::zeros_for(g);
    for (s, &r) in chosen.iter().enumerate() {
        rules.decode(r, &mut actions);
        for player in Player::BOTH {
            for ty in 0..k {
                let best = actions[player.index()][ty];
                for (a, logit) in theta.row_mut(player, ty, s).iter_mut().enumerate() {
                    *logit = if a == best { PURE_LOGIT } else { -PURE_LOGIT };
                }
            }
        }
    }
    let trace = vec![trace_entry(g, &theta, &cfg.risk, horizon)?];
    Ok(SolveResult {
        theta,
        trace,
        converged: true,
        iterations_used: horizon,
    })
}

fn rule_score(rm: &RiskMeasure, atoms: &[f64], xi: &[f64]) -> Result<f64> {
    match rm {
        RiskMeasure::Expectation => Ok(dot(atoms, xi)),
        RiskMeasure::Cvar { .. } => rm.value(&DiscreteUtilityDist::new(atoms.to_vec(), xi.to_vec())?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::softmax_policy;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn stochastic(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let t: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / t).collect()
    }

    fn random_game(seed: u64, s: usize, k: usize) -> Game {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rewards = (0..2 * k * s * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let transition = (0..s * 4).flat_map(|_| stochastic(&mut rng, s)).collect();
        Game::new(s, [2, 2], k, rewards, transition, vec![1.0 / (k * k) as f64; k * k], 0.9).unwrap()
    }

    /// One state; player 1 earns `r1[a1]`, player 2 earns `r2[a2]`.
    fn decoupled_bandit(r1: [f64; 2], r2: [f64; 2]) -> Game {
        let mut rewards = vec![];
        for a1 in 0..2 {
            for _ in 0..2 {
                rewards.push(r1[a1]);
            }
        }
        for _ in 0..2 {
            for a2 in 0..2 {
                rewards.push(r2[a2]);
            }
        }
        Game::new(1, [2, 2], 1, rewards, vec![1.0; 4], vec![1.0], 0.9).unwrap()
    }

    fn fast_cfg() -> SolverConfig {
        SolverConfig {
            outer_iters: 60,
            inner_iters: 20,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn ibr_finds_decoupled_best_responses() {
        let g = decoupled_bandit([0.0, 1.0], [1.0, -1.0]);
        let res = solve_ibr(&g, &fast_cfg()).unwrap();
        let p1 = softmax_policy(&res.theta, Player::One, 0, 0).unwrap();
        let p2 = softmax_policy(&res.theta, Player::Two, 0, 0).unwrap();
        assert!(p1[1] > 0.99, "{p1:?}");
        assert!(p2[0] > 0.99, "{p2:?}");
        assert_eq!(res.trace.len(), res.iterations_used);
    }

    #[test]
    fn fp_matches_ibr_on_decoupled_bandit() {
        let g = decoupled_bandit([0.0, 1.0], [1.0, -1.0]);
        let ibr = solve_ibr(&g, &fast_cfg()).unwrap();
        let fp = solve_fp(&g, &fast_cfg()).unwrap();
        for p in Player::BOTH {
            let a = softmax_policy(&ibr.theta, p, 0, 0).unwrap();
            let b = softmax_policy(&fp.theta, p, 0, 0).unwrap();
            let tv = 0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>();
            assert!(tv < 1e-3, "{p:?}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn zero_rewards_leave_theta_unchanged() {
        let mut g = random_game(1, 3, 2);
        g.rewards.fill(0.0);
        let cfg = SolverConfig {
            init_jitter: true,
            seed: 5,
            ..fast_cfg()
        };
        let start = initial_theta(&g, &cfg);
        for kind in [SolverKind::Ibr, SolverKind::Fp, SolverKind::Dapg] {
            let res = solve(kind, &g, &cfg, 1).unwrap();
            assert_eq!(res.theta, start, "{kind}");
            assert!(res.converged);
            assert_eq!(res.iterations_used, 1);
        }
    }

    #[test]
    fn fp_second_player_sees_two_term_mean() {
        // One outer iteration: player 2 must respond to (θ₁,₀ + θ₁,₁)/2.
        let g = random_game(2, 2, 2);
        let cfg = SolverConfig {
            outer_iters: 1,
            inner_iters: 3,
            init_jitter: true,
            seed: 3,
            ..SolverConfig::default()
        };
        let res = solve_fp(&g, &cfg).unwrap();

        let theta0 = initial_theta(&g, &cfg);
        let mut manual = theta0.clone();
        ascend_player(&g, &mut manual, Player::One, cfg.eta1, &cfg, 0).unwrap();
        let mean: Vec<f64> = theta0
            .player_block(Player::One)
            .iter()
            .zip(manual.player_block(Player::One))
            .map(|(a, b)| (a + b) / 2.0)
            .collect();
        let mut vs_mean = theta0.clone();
        vs_mean.set_player_block(Player::One, &mean).unwrap();
        ascend_player(&g, &mut vs_mean, Player::Two, cfg.eta2, &cfg, 0).unwrap();

        assert_eq!(res.theta.player_block(Player::One), manual.player_block(Player::One));
        assert_eq!(res.theta.player_block(Player::Two), vs_mean.player_block(Player::Two));
        // reported utilities are against the current θ₁, not the mean
        let expected = trace_entry(&g, &res.theta, &cfg.risk, 0).unwrap();
        assert_eq!(res.trace[0], expected);
    }

    #[test]
    fn ibr_inner_loop_only_moves_active_player() {
        let g = random_game(4, 3, 2);
        let cfg = fast_cfg();
        let start = initial_theta(&g, &cfg);
        let mut theta = start.clone();
        ascend_player(&g, &mut theta, Player::One, cfg.eta1, &cfg, 0).unwrap();
        assert_eq!(theta.player_block(Player::Two), start.player_block(Player::Two));
        assert_ne!(theta.player_block(Player::One), start.player_block(Player::One));
    }

    #[test]
    fn matching_pennies_stays_finite() {
        // player 1 wants to match, player 2 wants to mismatch
        let mut rewards = vec![1.0, -1.0, -1.0, 1.0];
        rewards.extend([-1.0, 1.0, 1.0, -1.0]);
        let g = Game::new(1, [2, 2], 1, rewards, vec![1.0; 4], vec![1.0], 0.9).unwrap();
        let cfg = SolverConfig {
            outer_iters: 500,
            inner_iters: 5,
            eta1: 0.1,
            eta2: 0.1,
            ..SolverConfig::default()
        };
        for kind in [SolverKind::Ibr, SolverKind::Fp] {
            let res = solve(kind, &g, &cfg, 1).unwrap();
            assert!(res.theta.is_finite());
            for e in &res.trace {
                assert!(e.u1.abs() <= 10.0 + 1e-9 && e.u2.abs() <= 10.0 + 1e-9);
            }
        }
    }

    #[test]
    fn dapg_ascends_cooperative_objective() {
        for seed in 0..10 {
            let mut g = random_game(10 + seed, 3, 2);
            let half = g.rewards.len() / 2;
            let (p1, p2) = g.rewards.split_at_mut(half);
            p2.copy_from_slice(p1);
            let cfg = SolverConfig {
                outer_iters: 100,
                eta1: 0.01,
                eta2: 0.01,
                ..SolverConfig::default()
            };
            let res = solve_dapg(&g, &cfg).unwrap();
            for w in res.trace.windows(2) {
                let before = w[0].rho1 + w[0].rho2;
                let after = w[1].rho1 + w[1].rho2;
                assert!(after >= before - 1e-6, "seed {seed}: {before} -> {after}");
            }
        }
    }

    #[test]
    fn dapg_with_one_type_is_joint_ascent() {
        let g = random_game(21, 2, 1);
        let cfg = SolverConfig {
            outer_iters: 1,
            ..SolverConfig::default()
        };
        let res = solve_dapg(&g, &cfg).unwrap();
        let theta0 = initial_theta(&g, &cfg);
        let eval = PolicyEvaluation::new(&g, &theta0).unwrap();
        let (_, g1) = eval.objective_grad(&g, Player::One, &cfg.risk).unwrap();
        let (_, g2) = eval.objective_grad(&g, Player::Two, &cfg.risk).unwrap();
        let mut expected = theta0.clone();
        expected.add_scaled(cfg.eta1, &g1);
        expected.add_scaled(cfg.eta1, &g2);
        assert!(res.theta.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn unit_alpha_traces_match_risk_neutral() {
        let g = random_game(30, 3, 2);
        let neutral = fast_cfg();
        let rs = fast_cfg().with_risk(RiskMeasure::cvar(1.0).unwrap());
        for kind in SolverKind::ALL {
            let a = solve(kind, &g, &neutral, 10).unwrap();
            let b = solve(kind, &g, &rs, 10).unwrap();
            assert_eq!(a.trace.len(), b.trace.len());
            for (x, y) in a.trace.iter().zip(&b.trace) {
                assert_abs_diff_eq!(x.u1, y.u1, epsilon = 1e-10);
                assert_abs_diff_eq!(x.rho2, y.rho2, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn solvers_are_deterministic_and_leave_game_alone() {
        let g = random_game(31, 3, 2);
        let before = g.clone();
        let cfg = SolverConfig {
            init_jitter: true,
            seed: 11,
            ..fast_cfg()
        };
        for kind in SolverKind::ALL {
            let a = solve(kind, &g, &cfg, 5).unwrap();
            let b = solve(kind, &g, &cfg, 5).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(g, before);
    }

    #[test]
    fn divergent_step_is_reported() {
        let mut g = random_game(32, 2, 1);
        g.rewards.iter_mut().for_each(|r| *r *= 10.0);
        let cfg = SolverConfig {
            eta1: f64::MAX,
            eta2: f64::MAX,
            ..fast_cfg()
        };
        assert!(matches!(
            solve_ibr(&g, &cfg),
            Err(Error::NonFiniteObjective { .. })
        ));
    }

    #[test]
    fn mmbi_single_state_picks_best_welfare_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let rewards: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = Game::new(1, [2, 2], 1, rewards, vec![1.0; 4], vec![1.0], 0.9).unwrap();
        let res = solve_mmbi(&g, &SolverConfig::default(), DEFAULT_MMBI_HORIZON).unwrap();
        let best = (0..4)
            .map(|c| 0.5 * (g.rewards[c] + g.rewards[4 + c]))
            .fold(f64::NEG_INFINITY, f64::max);
        let entry = res.trace[0];
        assert_abs_diff_eq!((entry.u1 + entry.u2) / 2.0, best / (1.0 - 0.9), epsilon = 1e-9);
    }

    #[test]
    fn mmbi_single_state_two_types_uses_prior_marginal() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let rewards: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0)).collect();
        let prior = vec![0.1, 0.2, 0.3, 0.4];
        let g = Game::new(1, [2, 2], 2, rewards, vec![1.0; 4], prior.clone(), 0.9).unwrap();
        let res = solve_mmbi(&g, &SolverConfig::default(), 20).unwrap();
        // brute force over all pure type-conditional profiles
        let mut best = f64::NEG_INFINITY;
        for rule in 0..16usize {
            let a1 = [rule & 1, (rule >> 1) & 1];
            let a2 = [(rule >> 2) & 1, (rule >> 3) & 1];
            let mut v = 0.0;
            for j in 0..2 {
                for k in 0..2 {
                    let w = 0.5
                        * (g.reward(Player::One, j, 0, a1[j], a2[k])
                            + g.reward(Player::Two, k, 0, a1[j], a2[k]));
                    v += prior[j * 2 + k] * w;
                }
            }
            best = best.max(v);
        }
        let e = res.trace[0];
        assert_abs_diff_eq!((e.u1 + e.u2) / 2.0, best / 0.1, epsilon = 1e-9);
    }

    #[test]
    fn mmbi_horizon_one_is_myopic() {
        let g = random_game(42, 3, 2);
        let res = solve_mmbi(&g, &SolverConfig::default(), 1).unwrap();
        for s in 0..3 {
            let mut best = (f64::NEG_INFINITY, [0usize; 4]);
            for rule in 0..16usize {
                let a1 = [rule & 1, (rule >> 1) & 1];
                let a2 = [(rule >> 2) & 1, (rule >> 3) & 1];
                let mut v = 0.0;
                for j in 0..2 {
                    for k in 0..2 {
                        v += g.prior(j, k)
                            * 0.5
                            * (g.reward(Player::One, j, s, a1[j], a2[k])
                                + g.reward(Player::Two, k, s, a1[j], a2[k]));
                    }
                }
                if v > best.0 {
                    best = (v, [a1[0], a1[1], a2[0], a2[1]]);
                }
            }
            let picks = [
                argmax(res.theta.row(Player::One, 0, s)),
                argmax(res.theta.row(Player::One, 1, s)),
                argmax(res.theta.row(Player::Two, 0, s)),
                argmax(res.theta.row(Player::Two, 1, s)),
            ];
            assert_eq!(picks, best.1, "state {s}");
        }
    }

    fn argmax(xs: &[f64]) -> usize {
        xs.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    }

    #[test]
    fn mmbi_policies_are_pure() {
        let g = random_game(43, 3, 2);
        for risk in [RiskMeasure::Expectation, RiskMeasure::cvar(0.25).unwrap()] {
            let res = solve_mmbi(&g, &SolverConfig::default().with_risk(risk), 50).unwrap();
            for p in Player::BOTH {
                for ty in 0..2 {
                    for s in 0..3 {
                        let pi = softmax_policy(&res.theta, p, ty, s).unwrap();
                        assert!(pi.iter().copied().fold(0.0, f64::max) > 0.999);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let g = random_game(44, 2, 1);
        let cfg = SolverConfig {
            outer_iters: 0,
            ..SolverConfig::default()
        };
        assert!(matches!(solve_dapg(&g, &cfg), Err(Error::InvalidConfig(_))));
        assert!(matches!(
            solve_mmbi(&g, &SolverConfig::default(), 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn solver_names_parse() {
        assert_eq!("DAPG".parse::<SolverKind>().unwrap(), SolverKind::Dapg);
        assert_eq!("mmbi".parse::<SolverKind>().unwrap(), SolverKind::Mmbi);
        assert!("ppo".parse::<SolverKind>().is_err());
    }
}
