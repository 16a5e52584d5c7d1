//! Two-player Bayesian stochastic games.
//!
//! A [`Game`] stores every tensor flat in row-major order:
//!
//! ```text
//! rewards      [player][type][state][a1][a2]
//! transition   [state][a1][a2][next_state]
//! type_prior   [type_1][type_2]
//! ```
//!
//! On disk a game is a `bayes-game-v1` JSON document holding the same
//! tensors as nested arrays (see [`GameDocument`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-9;

pub const FORMAT_VERSION: &str = "bayes-game-v1";

/// One of the two players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    pub num_states: usize,
    pub num_actions: [usize; 2],
    pub num_types: usize,
    pub rewards: Vec<f64>,
    pub transition: Vec<f64>,
    pub type_prior: Vec<f64>,
    pub discount: f64,
    pub initial_state_dist: Vec<f64>,
}

impl Game {
    /// Builds a game starting deterministically in state 0 and validates it.
    pub fn new(
        num_states: usize,
        num_actions: [usize; 2],
        num_types: usize,
        rewards: Vec<f64>,
        transition: Vec<f64>,
        type_prior: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        let mut initial_state_dist = vec![0.0; num_states];
        if let Some(first) = initial_state_dist.first_mut() {
            *first = 1.0;
        }
        let game = Game {
            num_states,
            num_actions,
            num_types,
            rewards,
            transition,
            type_prior,
            discount,
            initial_state_dist,
        };
        game.validate()?;
        Ok(game)
    }

    pub fn with_initial_state_dist(mut self, dist: Vec<f64>) -> Result<Self> {
        self.initial_state_dist = dist;
        self.validate()?;
        Ok(self)
    }

    pub fn num_joint_actions(&self) -> usize {
        self.num_actions[0] * self.num_actions[1]
    }

    fn reward_offset(&self, player: Player, ty: usize, state: usize) -> usize {
        ((player.index() * self.num_types + ty) * self.num_states + state) * self.num_joint_actions()
    }

    #[inline]
    pub fn reward(&self, player: Player, ty: usize, state: usize, a1: usize, a2: usize) -> f64 {
        self.rewards[self.reward_offset(player, ty, state) + a1 * self.num_actions[1] + a2]
    }

    /// Reward table `[a1][a2]` (flat) for one player, type and state.
    pub fn reward_table(&self, player: Player, ty: usize, state: usize) -> &[f64] {
        let start = self.reward_offset(player, ty, state);
        &self.rewards[start..start + self.num_joint_actions()]
    }

    #[inline]
    pub fn transition_row(&self, state: usize, a1: usize, a2: usize) -> &[f64] {
        let n = self.num_states;
        let start = ((state * self.num_actions[0] + a1) * self.num_actions[1] + a2) * n;
        &self.transition[start..start + n]
    }

    #[inline]
    pub fn prior(&self, j: usize, k: usize) -> f64 {
        self.type_prior[j * self.num_types + k]
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    pub fn check_type(&self, ty: usize) -> Result<()> {
        if ty >= self.num_types {
            return Err(Error::IndexOutOfRange {
                what: "type",
                index: ty,
                limit: self.num_types,
            });
        }
        Ok(())
    }

    /// Checks dimensions, stochasticity of every distribution and the discount.
    pub fn validate(&self) -> Result<()> {
        let s = self.num_states;
        let [n1, n2] = self.num_actions;
        let k = self.num_types;
        for (what, dim) in [
            ("num_states", s),
            ("num_actions[0]", n1),
            ("num_actions[1]", n2),
            ("num_types", k),
        ] {
            if dim == 0 {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: 1,
                    got: 0,
                });
            }
        }
        check_len("rewards", 2 * k * s * n1 * n2, self.rewards.len())?;
        check_len("transition", s * n1 * n2 * s, self.transition.len())?;
        check_len("type_prior", k * k, self.type_prior.len())?;
        check_len("initial_state_dist", s, self.initial_state_dist.len())?;

        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidDiscount(self.discount));
        }
        if self.rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("rewards"));
        }
        for state in 0..s {
            for a1 in 0..n1 {
                for a2 in 0..n2 {
                    check_distribution(
                        "transition",
                        vec![state, a1, a2],
                        self.transition_row(state, a1, a2),
                    )?;
                }
            }
        }
        check_distribution("type_prior", vec![], &self.type_prior)?;
        check_distribution("initial_state_dist", vec![], &self.initial_state_dist)?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GameDocument::from(self))
            .expect("game document serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GameDocument = serde_json::from_str(text)?;
        Game::try_from(doc)
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

fn check_distribution(what: &'static str, index: Vec<usize>, probs: &[f64]) -> Result<()> {
    let sum: f64 = probs.iter().sum();
    let bad_entry = probs.iter().any(|p| !p.is_finite() || *p < 0.0);
    if bad_entry || (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::NonStochasticRow { what, index, sum });
    }
    Ok(())
}

/// On-disk form of a [`Game`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    pub version: String,
    pub num_states: usize,
    pub num_actions: [usize; 2],
    pub num_types: usize,
    /// `[player][type][state][a1][a2]`
    pub rewards: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
    /// `[state][a1][a2][next_state]`
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[type_1][type_2]`
    pub type_prior: Vec<Vec<f64>>,
    pub discount: f64,
    pub initial_state_dist: Vec<f64>,
}

impl From<&Game> for GameDocument {
    fn from(g: &Game) -> Self {
        let [n1, n2] = g.num_actions;
        let s = g.num_states;
        let k = g.num_types;
        let rewards = Player::BOTH
            .iter()
            .map(|&p| {
                (0..k)
                    .map(|ty| {
                        (0..s)
                            .map(|st| {
                                g.reward_table(p, ty, st)
                                    .chunks(n2)
                                    .map(<[f64]>::to_vec)
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let transition = (0..s)
            .map(|st| {
                (0..n1)
                    .map(|a1| (0..n2).map(|a2| g.transition_row(st, a1, a2).to_vec()).collect())
                    .collect()
            })
            .collect();
        let type_prior = g.type_prior.chunks(k).map(<[f64]>::to_vec).collect();
        GameDocument {
            version: FORMAT_VERSION.to_string(),
            num_states: s,
            num_actions: g.num_actions,
            num_types: k,
            rewards,
            transition,
            type_prior,
            discount: g.discount,
            initial_state_dist: g.initial_state_dist.clone(),
        }
    }
}

impl TryFrom<GameDocument> for Game {
    type Error = Error;

    fn try_from(doc: GameDocument) -> Result<Self> {
        if doc.version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(doc.version));
        }
        let [n1, n2] = doc.num_actions;
        let s = doc.num_states;
        let k = doc.num_types;

        let mut rewards = Vec::with_capacity(2 * k * s * n1 * n2);
        check_len("rewards[player]", 2, doc.rewards.len())?;
        for per_player in &doc.rewards {
            check_len("rewards[player][type]", k, per_player.len())?;
            for per_type in per_player {
                check_len("rewards[..][state]", s, per_type.len())?;
                for per_state in per_type {
                    check_len("rewards[..][a1]", n1, per_state.len())?;
                    for row in per_state {
                        check_len("rewards[..][a2]", n2, row.len())?;
                        rewards.extend_from_slice(row);
                    }
                }
            }
        }

        let mut transition = Vec::with_capacity(s * n1 * n2 * s);
        check_len("transition[state]", s, doc.transition.len())?;
        for per_state in &doc.transition {
            check_len("transition[..][a1]", n1, per_state.len())?;
            for per_a1 in per_state {
                check_len("transition[..][a2]", n2, per_a1.len())?;
                for row in per_a1 {
                    check_len("transition[..][next_state]", s, row.len())?;
                    transition.extend_from_slice(row);
                }
            }
        }

        let mut type_prior = Vec::with_capacity(k * k);
        check_len("type_prior", k, doc.type_prior.len())?;
        for row in &doc.type_prior {
            check_len("type_prior[type_1]", k, row.len())?;
            type_prior.extend_from_slice(row);
        }

        let game = Game {
            num_states: s,
            num_actions: doc.num_actions,
            num_types: k,
            rewards,
            transition,
            type_prior,
            discount: doc.discount,
            initial_state_dist: doc.initial_state_dist,
        };
        game.validate()?;
        Ok(game)
    }
}
