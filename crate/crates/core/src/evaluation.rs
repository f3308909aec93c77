//! Discounted cost functionals: exact evaluation, a seeded Monte Carlo
//! oracle, and feasibility tests.
//!
//! For a stationary profile the discounted functional of player `i` on
//! layer `ℓ` is `J = (1 − α) · E[ Σ_{t ≥ 1} α^{t−1} c(x^t, a^t) ]`. The
//! `(1 − α)` normalization makes `J` a weighted *average* of stage costs —
//! `(1 − α) Σ α^{t−1} = 1` — so `|J|` never exceeds the largest cost entry.

use nalgebra::{DMatrix, DVector};

use crate::error::CsgError;
use crate::model::{decode_profile, profile_count, GameSpec, MultiStrategy, COMPUTED_TOL};
use crate::rng::{sample_index, substream};

/// Exact discounted costs of a profile, with feasibility slacks.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    /// `j[i][layer]`, layer `0` the objective.
    pub j: Vec<Vec<f64>>,
    /// `slack[i][layer - 1] = kappa[i][layer - 1] − j[i][layer]`.
    pub slack: Vec<Vec<f64>>,
}

/// Per-player feasibility verdicts with the slacks they rest on.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: Vec<bool>,
    pub slack: Vec<Vec<f64>>,
}

/// Monte Carlo estimate of the discounted costs.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    /// `estimate[i][layer]`.
    pub estimate: Vec<Vec<f64>>,
    /// Standard error of each estimate (zero only for degenerate payoffs).
    pub std_error: Vec<Vec<f64>>,
    pub episodes: u64,
    /// Episode length: smallest `T` with `α^T · max|C| < 1e-10`.
    pub horizon: u64,
    pub seed: u64,
}

/// Strategy-averaged weights of every joint profile at every state.
fn profile_weights(spec: &GameSpec, phi: &MultiStrategy) -> Vec<Vec<f64>> {
    let mut joint = Vec::new();
    (0..spec.num_states())
        .map(|x| {
            let counts = spec.action_counts(x);
            joint.resize(counts.len(), 0);
            (0..profile_count(&counts))
                .map(|j| {
                    decode_profile(&counts, j, &mut joint);
                    joint
                        .iter()
                        .enumerate()
                        .map(|(i, &a)| phi.strategies[i].rows[x][a])
                        .product()
                })
                .collect()
        })
        .collect()
}

/// Largest magnitude over every cost entry of every player and layer.
fn max_cost_magnitude(spec: &GameSpec) -> f64 {
    spec.costs
        .iter()
        .flatten()
        .flatten()
        .flatten()
        .fold(0.0, |acc, &c| acc.max(c.abs()))
}

/// Evaluate every `J[i][layer]` exactly.
///
/// Solves `(I − α P_φ) v = c_φ` by dense LU for each player and layer, where
/// `P_φ` and `c_φ` are the strategy-averaged kernel and cost, and returns
/// `J = (1 − α) ηᵀ v`. The system is always nonsingular (the spectral radius
/// of `α P_φ` is below one); each solve is still residual-checked against
/// `1e-10 · S` and reported as a numerical failure if it strays.
pub fn evaluate_exact(spec: &GameSpec, phi: &MultiStrategy) -> Result<CostReport, CsgError> {
    phi.validate_for(spec)?;
    let states = spec.num_states();
    let weights = profile_weights(spec, phi);

    let mut p = DMatrix::<f64>::zeros(states, states);
    for x in 0..states {
        for (j, &w) in weights[x].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (y, &prob) in spec.transition[x][j].iter().enumerate() {
                p[(x, y)] += w * prob;
            }
        }
    }
    let a = DMatrix::<f64>::identity(states, states) - spec.alpha * &p;
    let lu = a.clone().lu();
    let residual_bound = 1e-10 * states as f64;

    let layers = spec.num_layers();
    let mut j_all = Vec::with_capacity(spec.players);
    for i in 0..spec.players {
        let mut per_layer = Vec::with_capacity(layers);
        for layer in 0..layers {
            let mut c = DVector::<f64>::zeros(states);
            for x in 0..states {
                c[x] = weights[x]
                    .iter()
                    .enumerate()
                    .map(|(j, &w)| w * spec.costs[i][layer][x][j])
                    .sum();
            }
            let v = lu
                .solve(&c)
                .ok_or(CsgError::NumericalFailure {
                    context: "policy evaluation solve",
                    residual: f64::INFINITY,
                    bound: residual_bound,
                })?;
            let residual = (&a * &v - &c).amax();
            if residual > residual_bound {
                return Err(CsgError::NumericalFailure {
                    context: "policy evaluation solve",
                    residual,
                    bound: residual_bound,
                });
            }
            let j_val = (1.0 - spec.alpha) * spec.eta.iter().zip(v.iter()).map(|(&e, &vx)| e * vx).sum::<f64>();
            per_layer.push(j_val);
        }
        j_all.push(per_layer);
    }

    let slack = slacks(spec, &j_all);
    Ok(CostReport { j: j_all, slack })
}

fn slacks(spec: &GameSpec, j: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..spec.players)
        .map(|i| {
            spec.kappa[i]
                .iter()
                .enumerate()
                .map(|(layer, &k)| k - j[i][layer + 1])
                .collect()
        })
        .collect()
}

/// Per-player feasibility: `J[i][layer] ≤ kappa + 1e-9` on every constraint
/// layer. Games without constraints are vacuously feasible.
pub fn feasible(spec: &GameSpec, phi: &MultiStrategy) -> Result<FeasibilityReport, CsgError> {
    let report = evaluate_exact(spec, phi)?;
    let feasible = report
        .slack
        .iter()
        .map(|row| row.iter().all(|&s| s >= -COMPUTED_TOL))
        .collect();
    Ok(FeasibilityReport {
        feasible,
        slack: report.slack,
    })
}

/// Deterministic pairwise summation: independent of thread count and robust
/// to cancellation at the episode counts used here.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Smallest horizon `T ≥ 1` with `α^T · cmax < 1e-10`.
fn mc_horizon(alpha: f64, cmax: f64) -> u64 {
    if cmax == 0.0 {
        return 1;
    }
    let mut t = ((1e-10 / cmax).ln() / alpha.ln()).ceil().max(1.0) as u64;
    while alpha.powi(t as i32) * cmax >= 1e-10 {
        t += 1;
    }
    t
}

/// Monte Carlo estimate of every `J[i][layer]` from `episodes` independent
/// rollouts; sequential reference implementation of [`evaluate_mc_threads`].
pub fn evaluate_mc(
    spec: &GameSpec,
    phi: &MultiStrategy,
    episodes: u64,
    seed: u64,
) -> Result<McEstimate, CsgError> {
    evaluate_mc_threads(spec, phi, episodes, seed, 1)
}

/// Monte Carlo estimate with episodes fanned out over `threads` workers.
///
/// Episode `e` draws exclusively from the substream `(seed, e)` and each
/// worker writes into its own slice of the episode buffer, so the result is
/// bit-identical for every thread count. Per-episode draw order: initial
/// state, then at every stage one action per player in player order followed
/// by the transition.
pub fn evaluate_mc_threads(
    spec: &GameSpec,
    phi: &MultiStrategy,
    episodes: u64,
    seed: u64,
    threads: usize,
) -> Result<McEstimate, CsgError> {
    if episodes == 0 {
        return Err(CsgError::InvalidArgument(
            "Monte Carlo evaluation needs at least one episode".into(),
        ));
    }
    phi.validate_for(spec)?;
    let threads = threads.max(1);
    let cmax = max_cost_magnitude(spec);
    let horizon = mc_horizon(spec.alpha, cmax);

    let layers = spec.num_layers();
    let slots = spec.players * layers;
    let episodes_usize = usize::try_from(episodes)
        .map_err(|_| CsgError::InvalidArgument("episode count exceeds the address space".into()))?;
    let mut buffer = vec![0.0_f64; episodes_usize * slots];

    let run_episode = |episode: u64, out: &mut [f64]| {
        let mut rng = substream(seed, episode);
        let mut x = sample_index(&mut rng, &spec.eta);
        let mut discount = 1.0;
        let mut joint = vec![0usize; spec.players];
        for _ in 0..horizon {
            let counts = spec.action_counts(x);
            for (i, slot) in joint.iter_mut().enumerate() {
                *slot = sample_index(&mut rng, &phi.strategies[i].rows[x]);
            }
            let j = crate::model::encode_profile(&counts, &joint);
            for i in 0..spec.players {
                for layer in 0..layers {
                    out[i * layers + layer] += discount * spec.costs[i][layer][x][j];
                }
            }
            x = sample_index(&mut rng, &spec.transition[x][j]);
            discount *= spec.alpha;
        }
        for v in out.iter_mut() {
            *v *= 1.0 - spec.alpha;
        }
    };

    if threads == 1 {
        for e in 0..episodes_usize {
            run_episode(e as u64, &mut buffer[e * slots..(e + 1) * slots]);
        }
    } else {
        let chunk_len = episodes_usize.div_ceil(threads);
        std::thread::scope(|scope| {
            let mut rest = buffer.as_mut_slice();
            let mut start = 0usize;
            while !rest.is_empty() {
                let take = (chunk_len * slots).min(rest.len());
                let (head, tail) = rest.split_at_mut(take);
                let first_episode = start;
                scope.spawn(move || {
                    for (offset, out) in head.chunks_mut(slots).enumerate() {
                        run_episode((first_episode + offset) as u64, out);
                    }
                });
                start += take / slots;
                rest = tail;
            }
        });
    }

    let mut estimate = vec![vec![0.0; layers]; spec.players];
    let mut std_error = vec![vec![0.0; layers]; spec.players];
    let mut scratch = vec![0.0_f64; episodes_usize];
    for i in 0..spec.players {
        for layer in 0..layers {
            let slot = i * layers + layer;
            for (e, v) in scratch.iter_mut().enumerate() {
                *v = buffer[e * slots + slot];
            }
            let mean = pairwise_sum(&scratch) / episodes as f64;
            estimate[i][layer] = mean;
            if episodes > 1 {
                for v in &mut scratch {
                    let d = *v - mean;
                    *v = d * d;
                }
                let ss = pairwise_sum(&scratch);
                std_error[i][layer] = (ss / ((episodes * (episodes - 1)) as f64)).sqrt();
            }
        }
    }

    Ok(McEstimate {
        estimate,
        std_error,
        episodes,
        horizon,
        seed,
    })
}
