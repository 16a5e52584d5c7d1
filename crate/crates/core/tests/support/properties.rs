//! Property checks shared by the core invariant suite and the acceptance target.
//!
//! Every check runs a deterministic proptest runner and reports the first
//! minimal counterexample as a string.

use brg_core::evaluation::{expected_utility, utility_matrix};
use brg_core::experiments::{generate_game, pareto_front, GeneratorSpec, ParetoPoint, XiMode};
use brg_core::policy::softmax;
use brg_core::{
    cvar, distortion_weights, objective_grad, pair_utility_grad, DiscreteUtilityDist, FpAverage, Game,
    Player, PolicyParams, RiskMeasure,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Check = fn() -> Result<(), String>;

/// Name and check of every invariant, in reporting order.
pub const ALL: [(&str, Check); 16] = [
    ("softmax shift invariance", softmax_shift_invariance),
    ("softmax finite at large logits", softmax_large_logits_finite),
    ("fp average equals direct mean", fp_average_is_mean),
    ("generator output validates", generator_output_validates),
    ("generator distributions", generator_distributions),
    ("discounted-return bound", evaluation_bound),
    ("utility shift invariance", utility_shift_invariance),
    ("expected utility linear in prior", expected_utility_linear_in_prior),
    ("cvar at most mean", cvar_at_most_mean),
    ("cvar monotone in alpha", cvar_monotone_in_alpha),
    ("distortion weights", distortion_weights_shape),
    ("cvar homogeneity and translation", cvar_homogeneous_and_translation_invariant),
    ("gradient row sums zero", gradient_rows_sum_to_zero),
    ("pair gradient sparsity", pair_gradient_sparsity),
    ("objective gradient linear in prior", objective_grad_linearity),
    ("pareto front reorder invariance", pareto_reorder_invariance),
];

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

/// Game drawn from the experiment generator with small random dimensions.
fn small_game(seed: u64, dims: (usize, usize, usize, usize), dirichlet_prior: bool) -> Game {
    let spec = GeneratorSpec {
        num_states: dims.0,
        num_actions: [dims.1, dims.2],
        num_types: dims.3,
        xi_mode: if dirichlet_prior { XiMode::Dirichlet } else { XiMode::Uniform },
        master_seed: seed,
        ..GeneratorSpec::default()
    };
    generate_game(&spec, 0).expect("valid generator spec")
}

fn random_theta(g: &Game, seed: u64, scale: f64) -> PolicyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = PolicyParams::zeros_for(g);
    for x in theta.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *x = scale * z;
    }
    theta
}

fn game_inputs() -> impl Strategy<Value = (u64, (usize, usize, usize, usize), bool)> {
    (any::<u64>(), (1usize..=4, 1usize..=3, 1usize..=3, 1usize..=3), any::<bool>())
}

fn distribution() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=16).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(0.0f64..1.0, n),
        )
            .prop_filter_map("zero total mass", |(values, raw)| {
                let total: f64 = raw.iter().sum();
                (total > 1e-6).then(|| (values, raw.iter().map(|p| p / total).collect()))
            })
    })
}

fn dist(values: Vec<f64>, probs: Vec<f64>) -> DiscreteUtilityDist {
    DiscreteUtilityDist::new(values, probs).expect("normalised distribution")
}

pub fn softmax_shift_invariance() -> Result<(), String> {
    run(
        512,
        (prop::collection::vec(-50.0f64..50.0, 1..8), -1e3f64..1e3),
        |(logits, c)| {
            let shifted: Vec<f64> = logits.iter().map(|x| x + c).collect();
            for (a, b) in softmax(&logits).iter().zip(softmax(&shifted)) {
                prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
            Ok(())
        },
    )
}

pub fn softmax_large_logits_finite() -> Result<(), String> {
    run(512, prop::collection::vec(-1e4f64..1e4, 1..8), |logits| {
        let p = softmax(&logits);
        prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        Ok(())
    })
}

pub fn fp_average_is_mean() -> Result<(), String> {
    run(48, (1usize..=1000, 1usize..=12, any::<u64>()), |(n, len, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut avg = FpAverage::new(len);
        let mut sum = vec![0.0; len];
        for _ in 0..n {
            let block: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
            for (s, b) in sum.iter_mut().zip(&block) {
                *s += b;
            }
            ok(avg.push(&block))?;
        }
        prop_assert_eq!(avg.count(), n);
        for (m, s) in avg.mean().iter().zip(&sum) {
            prop_assert!((m - s / n as f64).abs() <= 1e-10, "{m} vs {}", s / n as f64);
        }
        Ok(())
    })
}

pub fn generator_output_validates() -> Result<(), String> {
    run(
        256,
        (any::<u64>(), 0u64..1000, (1usize..=5, 1usize..=4, 1usize..=4, 1usize..=4), 0.05f64..5.0, any::<bool>()),
        |(seed, index, dims, conc, dirichlet)| {
            let spec = GeneratorSpec {
                num_states: dims.0,
                num_actions: [dims.1, dims.2],
                num_types: dims.3,
                dirichlet_alpha: conc,
                xi_mode: if dirichlet { XiMode::Dirichlet } else { XiMode::Uniform },
                master_seed: seed,
                ..GeneratorSpec::default()
            };
            let g = ok(generate_game(&spec, index))?;
            ok(g.validate())?;
            prop_assert_eq!(g.num_states, dims.0);
            prop_assert_eq!(g.num_actions, [dims.1, dims.2]);
            prop_assert_eq!(g.num_types, dims.3);
            Ok(())
        },
    )
}

/// Sample moments of generated games against their target distributions.
///
/// Means must fall within five standard errors; variances within 15%.
pub fn generator_distributions() -> Result<(), String> {
    let spec = GeneratorSpec {
        reward_mean: 0.5,
        reward_std: 2.0,
        dirichlet_alpha: 0.7,
        xi_mode: XiMode::Dirichlet,
        master_seed: 99,
        ..GeneratorSpec::default()
    };
    let games: Vec<Game> = (0..2000).map(|i| generate_game(&spec, i).map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    let within = |what: &str, xs: &[f64], mean: f64, var: f64| -> Result<(), String> {
        let n = xs.len() as f64;
        let sample_mean = xs.iter().sum::<f64>() / n;
        let sample_var = xs.iter().map(|x| (x - sample_mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        if (sample_mean - mean).abs() > 5.0 * se {
            return Err(format!("{what}: sample mean {sample_mean} vs {mean} (se {se})"));
        }
        if (sample_var / var - 1.0).abs() > 0.15 {
            return Err(format!("{what}: sample variance {sample_var} vs {var}"));
        }
        Ok(())
    };

    let rewards: Vec<f64> = games.iter().flat_map(|g| g.rewards.iter().copied()).collect();
    within("rewards", &rewards, 0.5, 4.0)?;

    // Marginal of Dirichlet(a,…,a) over n outcomes is Beta(a, (n-1)a).
    let n = spec.num_states as f64;
    let a = spec.dirichlet_alpha;
    let beta_var = |n: f64, a: f64| (n - 1.0) / (n * n * (n * a + 1.0));
    for next in 0..spec.num_states {
        let entries: Vec<f64> = games
            .iter()
            .flat_map(|g| g.transition.iter().skip(next).step_by(spec.num_states).copied())
            .collect();
        within(&format!("transition to state {next}"), &entries, 1.0 / n, beta_var(n, a))?;
    }
    let k2 = (spec.num_types * spec.num_types) as f64;
    for cell in 0..spec.num_types * spec.num_types {
        let entries: Vec<f64> = games.iter().map(|g| g.type_prior[cell]).collect();
        within(&format!("type prior cell {cell}"), &entries, 1.0 / k2, beta_var(k2, a))?;
    }

    let uniform = generate_game(&GeneratorSpec::default(), 3).map_err(|e| e.to_string())?;
    if uniform.type_prior.iter().any(|&p| p != 0.25) {
        return Err(format!("uniform prior is {:?}", uniform.type_prior));
    }
    Ok(())
}

pub fn evaluation_bound() -> Result<(), String> {
    run(128, (game_inputs(), any::<u64>()), |((seed, dims, dp), ts)| {
        let g = small_game(seed, dims, dp);
        let um = ok(utility_matrix(&g, &random_theta(&g, ts, 3.0)))?;
        let bound = g.max_abs_reward() / (1.0 - g.discount);
        for p in Player::BOTH {
            for &u in um.player(p) {
                prop_assert!(u.is_finite() && u.abs() <= bound + 1e-9, "{u} exceeds {bound}");
            }
        }
        Ok(())
    })
}

pub fn utility_shift_invariance() -> Result<(), String> {
    run(
        128,
        (game_inputs(), any::<u64>(), any::<prop::sample::Index>(), -20.0f64..20.0),
        |((seed, dims, dp), ts, row_pick, c)| {
            let g = small_game(seed, dims, dp);
            let theta = random_theta(&g, ts, 1.0);
            let player = if row_pick.index(2) == 0 { Player::One } else { Player::Two };
            let ty = row_pick.index(g.num_types);
            let state = row_pick.index(g.num_states);
            let mut shifted = theta.clone();
            for x in shifted.row_mut(player, ty, state) {
                *x += c;
            }
            let a = ok(utility_matrix(&g, &theta))?;
            let b = ok(utility_matrix(&g, &shifted))?;
            for p in Player::BOTH {
                for (x, y) in a.player(p).iter().zip(b.player(p)) {
                    prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
                }
            }
            Ok(())
        },
    )
}

pub fn expected_utility_linear_in_prior() -> Result<(), String> {
    run(128, (game_inputs(), any::<u64>(), any::<u64>(), 0.0f64..1.0), |((seed, dims, _), ts, xs, lambda)| {
        let g = small_game(seed, dims, false);
        let um = ok(utility_matrix(&g, &random_theta(&g, ts, 1.0)))?;
        let k2 = g.num_types * g.num_types;
        let mut rng = ChaCha8Rng::seed_from_u64(xs);
        let mut draw = || {
            let raw: Vec<f64> = (0..k2).map(|_| rng.random::<f64>() + 1e-3).collect();
            let t: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / t).collect::<Vec<f64>>()
        };
        let (xa, xb) = (draw(), draw());
        let mixed: Vec<f64> = xa.iter().zip(&xb).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let ua = ok(expected_utility(&um, &xa))?;
        let ub = ok(expected_utility(&um, &xb))?;
        let um_mixed = ok(expected_utility(&um, &mixed))?;
        prop_assert!((um_mixed.0 - (lambda * ua.0 + (1.0 - lambda) * ub.0)).abs() <= 1e-12);
        prop_assert!((um_mixed.1 - (lambda * ua.1 + (1.0 - lambda) * ub.1)).abs() <= 1e-12);
        Ok(())
    })
}

pub fn cvar_at_most_mean() -> Result<(), String> {
    run(1024, (distribution(), 1e-6f64..=1.0), |((v, p), alpha)| {
        let d = dist(v, p);
        let c = ok(cvar(&d, alpha))?;
        prop_assert!(c <= d.mean() + 1e-12, "cvar {c} > mean {}", d.mean());
        Ok(())
    })
}

pub fn cvar_monotone_in_alpha() -> Result<(), String> {
    run(1024, (distribution(), 1e-6f64..=1.0, 1e-6f64..=1.0), |((v, p), a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let d = dist(v, p);
        let (c_lo, c_hi) = (ok(cvar(&d, lo))?, ok(cvar(&d, hi))?);
        prop_assert!(c_lo <= c_hi + 1e-12, "cvar({lo}) = {c_lo} > cvar({hi}) = {c_hi}");
        Ok(())
    })
}

pub fn distortion_weights_shape() -> Result<(), String> {
    run(1024, (distribution(), 1e-6f64..=1.0), |((v, p), alpha)| {
        let d = dist(v, p);
        let w = ok(distortion_weights(&d, alpha))?;
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        // Value boundary: the largest value still carrying tail weight.
        let boundary = d
            .values()
            .iter()
            .zip(&w)
            .filter(|(_, &x)| x > 0.0)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut below = 0.0;
        for (v, q) in d.values().iter().zip(d.probs()) {
            if *v < boundary {
                below += q;
            }
        }
        prop_assert!(below <= alpha + 1e-12, "mass {below} strictly below the boundary exceeds alpha {alpha}");
        Ok(())
    })
}

pub fn cvar_homogeneous_and_translation_invariant() -> Result<(), String> {
    run(1024, (distribution(), 1e-3f64..=1.0, 0.01f64..100.0, -100.0f64..100.0), |((v, p), alpha, c, b)| {
        let d = dist(v.clone(), p.clone());
        let base = ok(cvar(&d, alpha))?;
        let scaled = ok(cvar(&dist(v.iter().map(|x| c * x).collect(), p.clone()), alpha))?;
        let shifted = ok(cvar(&dist(v.iter().map(|x| x + b).collect(), p), alpha))?;
        let tol = 1e-9 * (1.0 + base.abs() * c.max(1.0) + b.abs());
        prop_assert!((scaled - c * base).abs() <= tol, "{scaled} vs {}", c * base);
        prop_assert!((shifted - (base + b)).abs() <= tol, "{shifted} vs {}", base + b);
        Ok(())
    })
}

pub fn gradient_rows_sum_to_zero() -> Result<(), String> {
    run(96, (game_inputs(), any::<u64>(), 0.05f64..=1.0), |((seed, dims, dp), ts, alpha)| {
        let g = small_game(seed, dims, dp);
        let theta = random_theta(&g, ts, 1.0);
        for rm in [RiskMeasure::Expectation, RiskMeasure::Cvar { alpha }] {
            for p in Player::BOTH {
                let (_, grad) = ok(objective_grad(&g, &theta, p, &rm))?;
                prop_assert!(grad.is_finite());
                for q in Player::BOTH {
                    for ty in 0..g.num_types {
                        for s in 0..g.num_states {
                            let total: f64 = grad.row(q, ty, s).iter().sum();
                            prop_assert!(total.abs() <= 1e-8, "row ({q:?},{ty},{s}) sums to {total}");
                        }
                    }
                }
            }
        }
        Ok(())
    })
}

pub fn pair_gradient_sparsity() -> Result<(), String> {
    run(96, (game_inputs(), any::<u64>(), any::<prop::sample::Index>()), |((seed, dims, dp), ts, pick)| {
        let g = small_game(seed, dims, dp);
        let theta = random_theta(&g, ts, 1.0);
        let (j, k) = (pick.index(g.num_types), pick.index(g.num_types * 7) % g.num_types);
        let player = if pick.index(2) == 0 { Player::One } else { Player::Two };
        let grad = ok(pair_utility_grad(&g, &theta, j, k, player))?;
        for q in Player::BOTH {
            let own = if q == Player::One { j } else { k };
            for ty in 0..g.num_types {
                if ty != own {
                    prop_assert!(grad.type_block(q, ty).iter().all(|&x| x == 0.0));
                }
            }
        }
        Ok(())
    })
}

pub fn objective_grad_linearity() -> Result<(), String> {
    run(96, (game_inputs(), any::<u64>()), |((seed, dims, dp), ts)| {
        let g = small_game(seed, dims, dp);
        let theta = random_theta(&g, ts, 1.0);
        for p in Player::BOTH {
            let (_, full) = ok(objective_grad(&g, &theta, p, &RiskMeasure::Expectation))?;
            let mut sum = PolicyParams::zeros_for(&g);
            for j in 0..g.num_types {
                for k in 0..g.num_types {
                    sum.add_scaled(g.prior(j, k), &ok(pair_utility_grad(&g, &theta, j, k, p))?);
                }
            }
            prop_assert!(full.max_abs_diff(&sum) <= 1e-10);
        }
        Ok(())
    })
}

pub fn pareto_reorder_invariance() -> Result<(), String> {
    let coords = prop::collection::vec((-5i32..5, -5i32..5), 0..40);
    run(512, (coords, any::<u64>()), |(coords, shuffle_seed)| {
        let points: Vec<ParetoPoint> = coords
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| ParetoPoint::new(format!("p{i}"), "U1/U2", x as f64 / 2.0, y as f64 / 2.0))
            .collect();
        let front = ok(pareto_front(&points))?;
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<ParetoPoint> = order.iter().map(|&i| points[i].clone()).collect();
        let permuted_front = ok(pareto_front(&permuted))?;
        for (pos, &i) in order.iter().enumerate() {
            prop_assert_eq!(permuted_front[pos], front[i]);
        }
        Ok(())
    })
}
