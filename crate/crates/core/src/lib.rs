//! Exact evaluation and risk-sensitive policy optimization for finite
//! two-player Bayesian stochastic games.
//!
//! Each player holds one softmax policy per own type. For a fixed profile the
//! utility of every type pair is computed exactly, the type prior turns those
//! utilities into a discrete distribution, and an expectation or CVaR of that
//! distribution is the objective the solvers ascend.

pub mod algorithms;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod game;
pub mod gradients;
pub mod policy;
pub mod risk;

pub use error::{Error, Result};
pub use evaluation::{build_joint_chain, evaluate_pair, expected_utility, utility_matrix, JointChain, UtilityMatrix};
pub use game::{Game, Player};
pub use gradients::{finite_diff_grad, objective_grad, pair_utility_grad, restricted_grad, PolicyEvaluation};
pub use policy::{softmax_policy, FpAverage, GradTensor, ParamTensor, PolicyParams};
pub use risk::{cvar, dist_from_matrix, distortion_weights, DiscreteUtilityDist, RiskMeasure};
