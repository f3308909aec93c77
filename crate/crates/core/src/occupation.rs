//! Occupation measures over state–action pairs.
//!
//! For player `i` facing the reduced process `p̄`, the occupation measure of
//! a strategy `φ` assigns each pair `(x, a)` the normalized discounted
//! visitation mass. Its marginal satisfies the flow-balance identity
//!
//! `μ̂(x) = (1 − α) η(x) + α Σ_z Σ_a p̄(x | z, a) μ(z, a)`
//!
//! and pairing a measure with a cost table reproduces the discounted
//! functional exactly: `J = Σ_{x,a} c̄(x, a) μ(x, a)`. The set of
//! flow-feasible measures is convex, which is what makes damped
//! best-response updates safe to perform in measure space.

use crate::error::CsgError;
use crate::model::{
    decode_profile, profile_count, GameSpec, ReducedMdp, StationaryStrategy, INPUT_SUM_TOL,
};

use nalgebra::{DMatrix, DVector};

/// Largest negative dust tolerated in raw weights before construction fails.
const NEGATIVE_DUST_TOL: f64 = 1e-9;

/// Occupation measure of one player: weights over its state–action pairs
/// plus the cached state marginal.
///
/// Construction clamps negative dust to zero and rescales so the total mass
/// is exactly one; the accessors therefore always expose a clean probability
/// measure.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    player: usize,
    weights: Vec<Vec<f64>>,
    marginal: Vec<f64>,
}

impl OccupationMeasure {
    /// Build a measure from raw weights (for instance a linear-program
    /// solution vector).
    ///
    /// Entries in `[−1e-9, 0)` are clamped to zero; anything more negative,
    /// or a total mass away from one by more than `1e-6`, indicates a caller
    /// bug and panics.
    pub fn new(player: usize, mut weights: Vec<Vec<f64>>) -> Self {
        for row in &mut weights {
            for w in row.iter_mut() {
                assert!(
                    *w >= -NEGATIVE_DUST_TOL,
                    "occupation weight {w} below the negative-dust tolerance"
                );
                if *w < 0.0 {
                    *w = 0.0;
                }
            }
        }
        let mass: f64 = weights.iter().flatten().sum();
        assert!(
            (mass - 1.0).abs() <= 1e-6,
            "occupation mass {mass} too far from 1 to renormalize"
        );
        if (mass - 1.0).abs() > 1e-15 {
            for row in &mut weights {
                for w in row.iter_mut() {
                    *w /= mass;
                }
            }
        }
        let marginal = weights.iter().map(|row| row.iter().sum()).collect();
        Self {
            player,
            weights,
            marginal,
        }
    }

    pub fn player(&self) -> usize {
        self.player
    }

    /// `weights()[x][a]` — visitation mass of pair `(x, a)`.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight(&self, x: usize, a: usize) -> f64 {
        self.weights[x][a]
    }

    /// Cached state marginal `μ̂(x) = Σ_a μ(x, a)`.
    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }

    fn same_shape(&self, other: &OccupationMeasure) -> bool {
        self.player == other.player
            && self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.len() == b.len())
    }
}

/// Occupation measure over *joint* profiles, as induced by correlated play.
///
/// Carries the per-state menu sizes of every player so that single-player
/// projections need no further context.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedOccupation {
    weights: Vec<Vec<f64>>,
    counts: Vec<Vec<usize>>,
}

impl CorrelatedOccupation {
    /// Build from per-state profile weights shaped like `spec`.
    pub fn new(spec: &GameSpec, mut weights: Vec<Vec<f64>>) -> Result<Self, CsgError> {
        if weights.len() != spec.num_states() {
            return Err(CsgError::InvalidArgument(format!(
                "correlated measure has {} state rows, spec has {} states",
                weights.len(),
                spec.num_states()
            )));
        }
        for (x, row) in weights.iter_mut().enumerate() {
            let expected = spec.profiles(x);
            if row.len() != expected {
                return Err(CsgError::InvalidArgument(format!(
                    "correlated measure at state {} has {} profile entries, expected {expected}",
                    spec.states[x],
                    row.len()
                )));
            }
            for w in row.iter_mut() {
                if !w.is_finite() || *w < -NEGATIVE_DUST_TOL {
                    return Err(CsgError::InvalidArgument(format!(
                        "correlated weight {w} at state {} is negative or non-finite",
                        spec.states[x]
                    )));
                }
                if *w < 0.0 {
                    *w = 0.0;
                }
            }
        }
        let mass: f64 = weights.iter().flatten().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(CsgError::InvalidArgument(format!(
                "correlated measure has mass {mass}, expected 1 within 1e-9"
            )));
        }
        if (mass - 1.0).abs() > 1e-15 {
            for row in &mut weights {
                for w in row.iter_mut() {
                    *w /= mass;
                }
            }
        }
        let counts = (0..spec.num_states()).map(|x| spec.action_counts(x)).collect();
        Ok(Self { weights, counts })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn num_players(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }
}

/// Occupation measure of `phi` in the reduced process.
///
/// Solves the flow-balance system `(I − α K̄ᵀ) μ̂ = (1 − α) η` with
/// `K̄(z → x) = Σ_a p̄(x | z, a) φ(a | z)` — always nonsingular for
/// `α < 1` — then splits the marginal by `φ`. The result's flow residual is
/// verified to stay below `1e-10`.
pub fn occupation_from_strategy(
    reduced: &ReducedMdp,
    phi: &StationaryStrategy,
) -> Result<OccupationMeasure, CsgError> {
    let states = reduced.num_states();
    if phi.rows.len() != states {
        return Err(CsgError::InvalidArgument(format!(
            "strategy has {} rows, reduced process has {states} states",
            phi.rows.len()
        )));
    }
    for (x, row) in phi.rows.iter().enumerate() {
        let k = reduced.action_count(x);
        if row.len() != k {
            return Err(CsgError::InvalidArgument(format!(
                "strategy row at state index {x} has {} entries, menu has {k}",
                row.len()
            )));
        }
        if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(CsgError::InvalidArgument(format!(
                "strategy row at state index {x} has a negative or non-finite entry"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > INPUT_SUM_TOL {
            return Err(CsgError::InvalidArgument(format!(
                "strategy row at state index {x} sums to {sum:.17}, expected 1"
            )));
        }
    }

    // a[(x, z)] = δ_{x=z} − α · K̄(z → x).
    let mut a = DMatrix::<f64>::identity(states, states);
    for z in 0..states {
        for (act, kernel_row) in reduced.kernel[z].iter().enumerate() {
            let p = phi.rows[z][act];
            if p == 0.0 {
                continue;
            }
            for (x, &prob) in kernel_row.iter().enumerate() {
                a[(x, z)] -= reduced.alpha * p * prob;
            }
        }
    }
    let b = DVector::from_iterator(
        states,
        reduced.eta.iter().map(|&e| (1.0 - reduced.alpha) * e),
    );
    let marginal = a.clone().lu().solve(&b).ok_or(CsgError::NumericalFailure {
        context: "occupation flow solve",
        residual: f64::INFINITY,
        bound: 1e-10,
    })?;

    let weights = (0..states)
        .map(|x| phi.rows[x].iter().map(|&p| marginal[x] * p).collect())
        .collect();
    let mu = OccupationMeasure::new(reduced.player, weights);
    let residual = flow_residual(&mu, reduced);
    if residual > 1e-10 {
        return Err(CsgError::NumericalFailure {
            context: "occupation flow solve",
            residual,
            bound: 1e-10,
        });
    }
    Ok(mu)
}

/// Worst absolute violation of the flow-balance identity:
/// `max_x |μ̂(x) − (1 − α) η(x) − α Σ_z Σ_a p̄(x | z, a) μ(z, a)|`.
pub fn flow_residual(mu: &OccupationMeasure, reduced: &ReducedMdp) -> f64 {
    let states = reduced.num_states();
    assert_eq!(mu.weights.len(), states, "measure and reduced process disagree on the state count");
    let mut inflow = vec![0.0; states];
    for z in 0..states {
        debug_assert_eq!(mu.weights[z].len(), reduced.action_count(z));
        for (a, &w) in mu.weights[z].iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (x, &prob) in reduced.kernel[z][a].iter().enumerate() {
                inflow[x] += prob * w;
            }
        }
    }
    (0..states)
        .map(|x| {
            (mu.marginal[x] - (1.0 - reduced.alpha) * reduced.eta[x] - reduced.alpha * inflow[x])
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Pair a measure with a per-pair cost table: `Σ_{x,a} c̄(x, a) μ(x, a)`.
pub fn pair_cost(mu: &OccupationMeasure, cbar: &[Vec<f64>]) -> f64 {
    assert_eq!(mu.weights.len(), cbar.len(), "measure and cost table disagree on the state count");
    mu.weights
        .iter()
        .zip(cbar)
        .map(|(wrow, crow)| {
            debug_assert_eq!(wrow.len(), crow.len());
            wrow.iter().zip(crow).map(|(&w, &c)| w * c).sum::<f64>()
        })
        .sum()
}

/// Split a measure into its marginal and the strategy it induces.
///
/// Where the marginal exceeds `1e-12` the strategy row is the ratio
/// `μ(x, ·) / μ̂(x)`; where the state is (numerically) never visited the
/// row is uniform — any row works there, and the uniform choice keeps the
/// map deterministic.
pub fn disaggregate(mu: &OccupationMeasure) -> (Vec<f64>, StationaryStrategy) {
    let rows = mu
        .weights
        .iter()
        .zip(&mu.marginal)
        .map(|(row, &mass)| {
            if mass > 1e-12 {
                row.iter().map(|&w| w / mass).collect()
            } else {
                vec![1.0 / row.len() as f64; row.len()]
            }
        })
        .collect();
    (mu.marginal.clone(), StationaryStrategy { rows })
}

/// Convex combination `λ·mu1 + (1 − λ)·mu2` of two measures of the same
/// player and shape.
///
/// Flow feasibility is preserved: the balance identity is affine in the
/// measure, so the mix's residual never exceeds the worse input residual
/// plus rounding dust.
pub fn mix(mu1: &OccupationMeasure, mu2: &OccupationMeasure, lambda: f64) -> OccupationMeasure {
    assert!((0.0..=1.0).contains(&lambda), "mixing weight {lambda} outside [0, 1]");
    assert!(mu1.same_shape(mu2), "occupation measures of different players or shapes");
    let weights = mu1
        .weights
        .iter()
        .zip(&mu2.weights)
        .map(|(r1, r2)| {
            r1.iter()
                .zip(r2)
                .map(|(&a, &b)| lambda * a + (1.0 - lambda) * b)
                .collect()
        })
        .collect();
    OccupationMeasure::new(mu1.player, weights)
}

/// Project a correlated measure onto player `i`'s pairs:
/// `μ(x, aᵢ) = Σ_{j : jᵢ = aᵢ} ρ(x, j)`. Mass is preserved exactly.
pub fn project(rho: &CorrelatedOccupation, player: usize) -> Result<OccupationMeasure, CsgError> {
    let players = rho.num_players();
    if player >= players {
        return Err(CsgError::PlayerIndex { player, players });
    }
    let mut joint = vec![0usize; players];
    let weights = rho
        .weights
        .iter()
        .zip(&rho.counts)
        .map(|(row, counts)| {
            let mut out = vec![0.0; counts[player]];
            for (j, &w) in row.iter().enumerate() {
                decode_profile(counts, j, &mut joint);
                out[joint[player]] += w;
            }
            debug_assert_eq!(row.len(), profile_count(counts));
            out
        })
        .collect();
    Ok(OccupationMeasure::new(player, weights))
}
