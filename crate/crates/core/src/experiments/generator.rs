use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiMode {
    Uniform,
    Dirichlet,
}

/// Distribution of random games.
///
/// Transition rows are Dirichlet(`dirichlet_alpha`) draws, reward cells are
/// Normal(`reward_mean`, `reward_std`) draws, and the type prior is either
/// uniform or a single Dirichlet draw over all `K²` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub num_states: usize,
    pub num_actions: [usize; 2],
    pub num_types: usize,
    pub dirichlet_alpha: f64,
    pub reward_mean: f64,
    pub reward_std: f64,
    pub xi_mode: XiMode,
    pub discount: f64,
    pub master_seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            num_states: 3,
            num_actions: [2, 2],
            num_types: 2,
            dirichlet_alpha: 1.0,
            reward_mean: 0.0,
            reward_std: 1.0,
            xi_mode: XiMode::Uniform,
            discount: 0.9,
            master_seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.num_types == 0 || self.num_actions.contains(&0) {
            return Err(Error::InvalidConfig("game dimensions must be positive".into()));
        }
        if !(self.dirichlet_alpha > 0.0 && self.dirichlet_alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dirichlet_alpha must be positive, got {}",
                self.dirichlet_alpha
            )));
        }
        if !(self.reward_std > 0.0 && self.reward_std.is_finite()) || !self.reward_mean.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "reward distribution N({}, {}) is invalid",
                self.reward_mean, self.reward_std
            )));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidDiscount(self.discount));
        }
        Ok(())
    }
}

fn dirichlet(rng: &mut ChaCha20Rng, gamma: &Gamma<f64>, n: usize) -> Vec<f64> {
    let mut draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        for d in &mut draws {
            *d /= total;
        }
    } else {
        // every gamma draw underflowed; fall back to a uniformly chosen vertex
        let hit = rng.random_range(0..n);
        draws.iter_mut().enumerate().for_each(|(i, d)| *d = f64::from(u8::from(i == hit)));
    }
    draws
}

/// Game number `index` of the stream keyed by `spec.master_seed`.
///
/// Each index owns its own ChaCha stream, so games can be generated in any
/// order or in parallel and always come out identical.
pub fn generate_game(spec: &GeneratorSpec, index: u64) -> Result<Game> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.master_seed);
    rng.set_stream(index);

    let s = spec.num_states;
    let [n1, n2] = spec.num_actions;
    let k = spec.num_types;
    let gamma = Gamma::new(spec.dirichlet_alpha, 1.0).expect("validated concentration");
    let normal = Normal::new(spec.reward_mean, spec.reward_std).expect("validated std");

    let transition: Vec<f64> = (0..s * n1 * n2)
        .flat_map(|_| dirichlet(&mut rng, &gamma, s))
        .collect();
    let rewards: Vec<f64> = (0..2 * k * s * n1 * n2).map(|_| normal.sample(&mut rng)).collect();
    let type_prior = match spec.xi_mode {
        XiMode::Uniform => vec![1.0 / (k * k) as f64; k * k],
        XiMode::Dirichlet => dirichlet(&mut rng, &gamma, k * k),
    };
    Game::new(s, spec.num_actions, k, rewards, transition, type_prior, spec.discount)
}
