//! Softmax policy parameters and the fictitious-play running average.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, Player};

/// A real tensor indexed by `(player, type, state, action)`.
///
/// Player 1 and player 2 may have different action counts, so each player's
/// block is stored separately, row-major over `(type, state, action)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTensor {
    num_types: usize,
    num_states: usize,
    num_actions: [usize; 2],
    data: [Vec<f64>; 2],
}

/// Softmax logits θ.
pub type PolicyParams = ParamTensor;

/// Gradient of a scalar objective with respect to θ.
pub type GradTensor = ParamTensor;

impl ParamTensor {
    pub fn zeros(num_types: usize, num_states: usize, num_actions: [usize; 2]) -> Self {
        let data = [0, 1].map(|p| vec![0.0; num_types * num_states * num_actions[p]]);
        ParamTensor {
            num_types,
            num_states,
            num_actions,
            data,
        }
    }

    pub fn zeros_for(game: &Game) -> Self {
        Self::zeros(game.num_types, game.num_states, game.num_actions)
    }

    /// Builds a tensor from per-player flat blocks laid out `[type][state][action]`.
    pub fn from_blocks(
        num_types: usize,
        num_states: usize,
        num_actions: [usize; 2],
        blocks: [Vec<f64>; 2],
    ) -> Result<Self> {
        for p in 0..2 {
            let expected = num_types * num_states * num_actions[p];
            if blocks[p].len() != expected {
                return Err(Error::ShapeMismatch {
                    expected,
                    got: blocks[p].len(),
                });
            }
        }
        let t = ParamTensor {
            num_types,
            num_states,
            num_actions,
            data: blocks,
        };
        if !t.is_finite() {
            return Err(Error::NonFinite("policy parameters"));
        }
        Ok(t)
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> [usize; 2] {
        self.num_actions
    }

    pub fn fits(&self, game: &Game) -> bool {
        self.num_types == game.num_types
            && self.num_states == game.num_states
            && self.num_actions == game.num_actions
    }

    pub fn same_shape(&self, other: &ParamTensor) -> bool {
        self.num_types == other.num_types
            && self.num_states == other.num_states
            && self.num_actions == other.num_actions
    }

    pub fn check_row(&self, ty: usize, state: usize) -> Result<()> {
        if ty >= self.num_types {
            return Err(Error::IndexOutOfRange {
                what: "type",
                index: ty,
                limit: self.num_types,
            });
        }
        if state >= self.num_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: state,
                limit: self.num_states,
            });
        }
        Ok(())
    }

    fn row_start(&self, player: Player, ty: usize, state: usize) -> usize {
        (ty * self.num_states + state) * self.num_actions[player.index()]
    }

    #[inline]
    pub fn row(&self, player: Player, ty: usize, state: usize) -> &[f64] {
        let start = self.row_start(player, ty, state);
        &self.data[player.index()][start..start + self.num_actions[player.index()]]
    }

    #[inline]
    pub fn row_mut(&mut self, player: Player, ty: usize, state: usize) -> &mut [f64] {
        let start = self.row_start(player, ty, state);
        let n = self.num_actions[player.index()];
        &mut self.data[player.index()][start..start + n]
    }

    /// All of one player's entries, laid out `[type][state][action]`.
    pub fn player_block(&self, player: Player) -> &[f64] {
        &self.data[player.index()]
    }

    pub fn player_block_mut(&mut self, player: Player) -> &mut [f64] {
        &mut self.data[player.index()]
    }

    pub fn set_player_block(&mut self, player: Player, block: &[f64]) -> Result<()> {
        let dst = &mut self.data[player.index()];
        if dst.len() != block.len() {
            return Err(Error::ShapeMismatch {
                expected: dst.len(),
                got: block.len(),
            });
        }
        dst.copy_from_slice(block);
        Ok(())
    }

    /// The `[state][action]` entries of one player's type.
    pub fn type_block(&self, player: Player, ty: usize) -> &[f64] {
        let len = self.num_states * self.num_actions[player.index()];
        &self.data[player.index()][ty * len..(ty + 1) * len]
    }

    pub fn type_block_mut(&mut self, player: Player, ty: usize) -> &mut [f64] {
        let len = self.num_states * self.num_actions[player.index()];
        &mut self.data[player.index()][ty * len..(ty + 1) * len]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data[0].iter().chain(self.data[1].iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        let [a, b] = &mut self.data;
        a.iter_mut().chain(b.iter_mut())
    }

    pub fn len(&self) -> usize {
        self.data[0].len() + self.data[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn block_norm(&self, player: Player) -> f64 {
        self.player_block(player)
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: f64, other: &ParamTensor) {
        debug_assert!(self.same_shape(other));
        for (dst, src) in self.iter_mut().zip(other.iter()) {
            *dst += scale * src;
        }
    }

    pub fn max_abs_diff(&self, other: &ParamTensor) -> f64 {
        self.iter()
            .zip(other.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Nested `[player][type][state][action]` arrays.
    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        Player::BOTH
            .iter()
            .map(|&p| {
                (0..self.num_types)
                    .map(|ty| {
                        (0..self.num_states)
                            .map(|s| self.row(p, ty, s).to_vec())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Numerically safe softmax of `logits` into `out`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    debug_assert_eq!(logits.len(), out.len());
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    out
}

/// Action distribution π(·|state) of `player` with type `ty`.
pub fn softmax_policy(
    theta: &PolicyParams,
    player: Player,
    ty: usize,
    state: usize,
) -> Result<Vec<f64>> {
    theta.check_row(ty, state)?;
    Ok(softmax(theta.row(player, ty, state)))
}

/// Running arithmetic mean of equally shaped parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FpAverage {
    running_mean: Vec<f64>,
    count: usize,
}

impl FpAverage {
    pub fn new(len: usize) -> Self {
        FpAverage {
            running_mean: vec![0.0; len],
            count: 0,
        }
    }

    pub fn push(&mut self, block: &[f64]) -> Result<()> {
        if block.len() != self.running_mean.len() {
            return Err(Error::ShapeMismatch {
                expected: self.running_mean.len(),
                got: block.len(),
            });
        }
        let n = self.count as f64;
        for (m, &x) in self.running_mean.iter_mut().zip(block) {
            *m = (n * *m + x) / (n + 1.0);
        }
        self.count += 1;
        Ok(())
    }

    pub fn mean(&self) -> &[f64] {
        &self.running_mean
    }

    pub fn count(&self) -> usize {
        self.count
    }
}
