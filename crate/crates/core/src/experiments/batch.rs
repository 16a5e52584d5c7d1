use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::{generate_game, GeneratorSpec};
use crate::algorithms::{solve, SolverConfig, SolverKind, DEFAULT_MMBI_HORIZON};
use crate::error::{Error, Result};
use crate::evaluation::{expected_utility, utility_matrix};
use crate::game::{Game, Player};
use crate::policy::PolicyParams;
use crate::risk::{cvar, dist_from_matrix, RiskMeasure, DEFAULT_ALPHA};

/// A solver together with its objective: risk-neutral, or CVaR at the batch α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Algorithm {
    pub kind: SolverKind,
    pub risk_sensitive: bool,
}

impl Algorithm {
    pub const fn new(kind: SolverKind, risk_sensitive: bool) -> Self {
        Algorithm {
            kind,
            risk_sensitive,
        }
    }

    /// MMBI, IBR, FP, DAPG followed by their risk-sensitive versions.
    pub fn default_set() -> Vec<Algorithm> {
        [false, true]
            .into_iter()
            .flat_map(|rs| SolverKind::ALL.into_iter().map(move |k| Algorithm::new(k, rs)))
            .collect()
    }

    pub fn risk(&self, alpha: f64) -> RiskMeasure {
        if self.risk_sensitive {
            RiskMeasure::Cvar { alpha }
        } else {
            RiskMeasure::Expectation
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.risk_sensitive {
            f.write_str("RS-")?;
        }
        f.write_str(self.kind.label())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        match upper.strip_prefix("RS-") {
            Some(rest) => Ok(Algorithm::new(rest.parse()?, true)),
            None => Ok(Algorithm::new(upper.parse()?, false)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    /// Shared solver settings; the risk measure is set per algorithm.
    pub solver: SolverConfig,
    /// CVaR level for risk-sensitive solvers and for the CVaR metrics.
    pub alpha: f64,
    pub mmbi_horizon: usize,
    pub num_games: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            solver: SolverConfig::default(),
            alpha: DEFAULT_ALPHA,
            mmbi_horizon: DEFAULT_MMBI_HORIZON,
            num_games: 100,
        }
    }
}

/// Final metrics of one solver on one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_index: u64,
    pub solver: String,
    #[serde(rename = "U1")]
    pub u1: f64,
    #[serde(rename = "U2")]
    pub u2: f64,
    #[serde(rename = "SW")]
    pub sw: f64,
    #[serde(rename = "CVaR_U1")]
    pub cvar_u1: f64,
    #[serde(rename = "CVaR_U2")]
    pub cvar_u2: f64,
    #[serde(rename = "CVaR_SW")]
    pub cvar_sw: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GameRecord {
    /// Metric columns by their CSV header name.
    pub fn metric(&self, column: &str) -> Option<f64> {
        match column {
            "U1" => Some(self.u1),
            "U2" => Some(self.u2),
            "SW" => Some(self.sw),
            "CVaR_U1" => Some(self.cvar_u1),
            "CVaR_U2" => Some(self.cvar_u2),
            "CVaR_SW" => Some(self.cvar_sw),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub game_index: u64,
    pub solver: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and population standard deviation.
    pub fn of(xs: &[f64]) -> Stat {
        if xs.is_empty() {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Stat {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub algorithm: String,
    pub social_welfare: Stat,
    pub cvar_social_welfare: Stat,
    pub u1: Stat,
    pub u2: Stat,
    pub cvar_u1: Stat,
    pub cvar_u2: Stat,
    pub games: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub rows: Vec<MetricRow>,
    pub records: Vec<GameRecord>,
    pub failures: Vec<Failure>,
}

impl BatchReport {
    pub fn row(&self, algorithm: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }
}

/// Risk-neutral and CVaR metrics of one policy profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetrics {
    #[serde(rename = "U1")]
    pub u1: f64,
    #[serde(rename = "U2")]
    pub u2: f64,
    #[serde(rename = "SW")]
    pub sw: f64,
    #[serde(rename = "CVaR_U1")]
    pub cvar_u1: f64,
    #[serde(rename = "CVaR_U2")]
    pub cvar_u2: f64,
    #[serde(rename = "CVaR_SW")]
    pub cvar_sw: f64,
}

impl PolicyMetrics {
    /// All metrics are read off a single utility matrix of `theta`.
    pub fn compute(g: &Game, theta: &PolicyParams, alpha: f64) -> Result<Self> {
        let um = utility_matrix(g, theta)?;
        let (u1, u2) = expected_utility(&um, &g.type_prior)?;
        let cvar_of = |values: &[f64]| cvar(&dist_from_matrix(values, &g.type_prior)?, alpha);
        Ok(PolicyMetrics {
            u1,
            u2,
            sw: (u1 + u2) / 2.0,
            cvar_u1: cvar_of(um.player(Player::One))?,
            cvar_u2: cvar_of(um.player(Player::Two))?,
            cvar_sw: cvar_of(&um.social_welfare())?,
        })
    }
}

fn run_cell(g: &Game, index: u64, alg: Algorithm, cfg: &BatchConfig) -> Result<GameRecord> {
    let solver_cfg = cfg.solver.with_risk(alg.risk(cfg.alpha));
    let res = solve(alg.kind, g, &solver_cfg, cfg.mmbi_horizon)?;
    let m = PolicyMetrics::compute(g, &res.theta, cfg.alpha)?;
    Ok(GameRecord {
        game_index: index,
        solver: alg.to_string(),
        u1: m.u1,
        u2: m.u2,
        sw: m.sw,
        cvar_u1: m.cvar_u1,
        cvar_u2: m.cvar_u2,
        cvar_sw: m.cvar_sw,
        iterations: res.iterations_used,
        converged: res.converged,
    })
}

/// Runs every algorithm on the same `cfg.num_games` games.
///
/// Cells run on the current rayon pool; results are joined in
/// `(game index, algorithm)` order so the report does not depend on scheduling.
pub fn run_batch(spec: &GeneratorSpec, algorithms: &[Algorithm], cfg: &BatchConfig) -> Result<BatchReport> {
    spec.validate()?;
    cfg.solver.validate()?;
    RiskMeasure::cvar(cfg.alpha)?;
    if cfg.num_games == 0 {
        return Err(Error::InvalidConfig("num_games must be at least 1".into()));
    }
    let games: Vec<Game> = (0..cfg.num_games as u64)
        .into_par_iter()
        .map(|i| generate_game(spec, i))
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, Algorithm)> = (0..games.len())
        .flat_map(|i| algorithms.iter().map(move |&a| (i, a)))
        .collect();
    let outcomes: Vec<Result<GameRecord>> = cells
        .par_iter()
        .map(|&(i, alg)| run_cell(&games[i], i as u64, alg, cfg))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((i, alg), outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(Failure {
                game_index: *i as u64,
                solver: alg.to_string(),
                error: e.to_string(),
            }),
        }
    }

    let rows = algorithms
        .iter()
        .map(|alg| {
            let name = alg.to_string();
            let mine: Vec<&GameRecord> = records.iter().filter(|r| r.solver == name).collect();
            let stat = |f: fn(&GameRecord) -> f64| Stat::of(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            MetricRow {
                social_welfare: stat(|r| r.sw),
                cvar_social_welfare: stat(|r| r.cvar_sw),
                u1: stat(|r| r.u1),
                u2: stat(|r| r.u2),
                cvar_u1: stat(|r| r.cvar_u1),
                cvar_u2: stat(|r| r.cvar_u2),
                games: mine.len(),
                failures: failures.iter().filter(|f| f.solver == name).count(),
                algorithm: name,
            }
        })
        .collect();

    Ok(BatchReport {
        rows,
        records,
        failures,
    })
}
