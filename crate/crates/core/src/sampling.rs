//! Seeded random games and strategies for experiments and randomized checks.
//!
//! Everything here is a pure function of the generator handed in, so callers
//! control reproducibility through [`crate::rng::substream`]. Two generators
//! guarantee feasibility structurally rather than by rejection:
//!
//! * [`random_feasible_single`] rejects until the Slater slack clears a
//!   requested floor (cheap for single-player instances);
//! * [`random_two_player_constrained`] reserves action `0` of every player
//!   as a *safe action* whose constraint cost never exceeds `0.1`, so with
//!   bound `0.4` every player keeps a Slater slack of at least `0.3`
//!   against every opponent profile.

use rand::Rng;

use crate::cop::{slater_check, SlaterSlack};
use crate::model::{decode_profile, profile_count, GameSpec, MultiStrategy, StationaryStrategy};
use crate::rng::simplex_row;

/// Shape and range parameters of [`random_game`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    pub players: usize,
    /// States drawn uniformly from `1..=max_states`.
    pub max_states: usize,
    /// Menu sizes drawn uniformly from `1..=max_actions`, per player and state.
    pub max_actions: usize,
    /// Constraint layers (objective excluded); bounds default to `1`, which
    /// any cost in `[0, 1]` satisfies.
    pub constraint_layers: usize,
    /// Discount factor drawn uniformly from this interval.
    pub alpha_range: (f64, f64),
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            players: 1,
            max_states: 5,
            max_actions: 3,
            constraint_layers: 0,
            alpha_range: (0.3, 0.8),
        }
    }
}

/// Dirichlet(1, …, 1) rows over every menu of `player`.
pub fn random_strategy<R: Rng + ?Sized>(
    spec: &GameSpec,
    player: usize,
    rng: &mut R,
) -> StationaryStrategy {
    let rows = (0..spec.num_states())
        .map(|x| simplex_row(rng, spec.actions[player][x].len()))
        .collect();
    StationaryStrategy { rows }
}

/// Independent random strategies for every player.
pub fn random_multi_strategy<R: Rng + ?Sized>(spec: &GameSpec, rng: &mut R) -> MultiStrategy {
    let strategies = (0..spec.players)
        .map(|i| random_strategy(spec, i, rng))
        .collect();
    MultiStrategy { strategies }
}

/// Random valid game: uniform shapes per `cfg`, Dirichlet transition rows
/// and initial distribution, costs uniform in `[0, 1]`.
pub fn random_game<R: Rng + ?Sized>(rng: &mut R, cfg: &SampleConfig) -> GameSpec {
    assert!(cfg.players >= 1 && cfg.max_states >= 1 && cfg.max_actions >= 1);
    let states_n = rng.random_range(1..=cfg.max_states);
    let states: Vec<String> = (0..states_n).map(|x| format!("s{x}")).collect();

    let actions: Vec<Vec<Vec<String>>> = (0..cfg.players)
        .map(|_| {
            (0..states_n)
                .map(|_| {
                    let k = rng.random_range(1..=cfg.max_actions);
                    (0..k).map(|a| format!("a{a}")).collect()
                })
                .collect()
        })
        .collect();
    let counts: Vec<Vec<usize>> = (0..states_n)
        .map(|x| (0..cfg.players).map(|i| actions[i][x].len()).collect())
        .collect();

    let transition = (0..states_n)
        .map(|x| {
            (0..profile_count(&counts[x]))
                .map(|_| simplex_row(rng, states_n))
                .collect()
        })
        .collect();

    let layers = cfg.constraint_layers + 1;
    let costs = (0..cfg.players)
        .map(|_| {
            (0..layers)
                .map(|_| {
                    (0..states_n)
                        .map(|x| {
                            (0..profile_count(&counts[x]))
                                .map(|_| rng.random::<f64>())
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let (lo, hi) = cfg.alpha_range;
    let spec = GameSpec {
        players: cfg.players,
        states,
        actions,
        transition,
        costs,
        kappa: vec![vec![1.0; cfg.constraint_layers]; cfg.players],
        alpha: lo + (hi - lo) * rng.random::<f64>(),
        eta: simplex_row(rng, states_n),
    };
    debug_assert!(spec.validate().is_empty());
    spec
}

/// Random single-player constrained game (one constraint layer, bound drawn
/// from `[0.2, 0.8]`) whose Slater slack is at least `min_slack`.
///
/// Rejection-samples; the acceptance region is wide for costs in `[0, 1]`,
/// so the attempt guard of 1000 is far from binding in practice.
pub fn random_feasible_single<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SampleConfig,
    min_slack: f64,
) -> GameSpec {
    assert_eq!(cfg.players, 1, "this generator builds single-player games");
    let cfg = SampleConfig {
        constraint_layers: 1,
        ..cfg.clone()
    };
    for _ in 0..1000 {
        let mut spec = random_game(rng, &cfg);
        spec.kappa[0][0] = 0.2 + 0.6 * rng.random::<f64>();
        let report = slater_check(&spec, 0, &MultiStrategy::uniform(&spec))
            .expect("slack program on a valid spec");
        if let SlaterSlack::Finite(s) = report.slack {
            if s >= min_slack {
                return spec;
            }
        }
    }
    unreachable!("the acceptance region has substantial probability mass");
}

/// Random two-player game with one constraint layer and a reserved safe
/// action: whenever player `i` plays its action `0`, its constraint cost
/// lies in `[0, 0.1]`; the bound is `0.4` for both players.
///
/// Consequently the pure safe-action strategy certifies a Slater slack of
/// at least `0.3` for every player against *every* opponent profile.
pub fn random_two_player_constrained<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SampleConfig,
) -> GameSpec {
    assert_eq!(cfg.players, 2, "this generator builds two-player games");
    let cfg = SampleConfig {
        constraint_layers: 1,
        ..cfg.clone()
    };
    let mut spec = random_game(rng, &cfg);
    let mut joint = vec![0usize; 2];
    for x in 0..spec.num_states() {
        let counts = spec.action_counts(x);
        for j in 0..profile_count(&counts) {
            decode_profile(&counts, j, &mut joint);
            for (i, &own_action) in joint.iter().enumerate() {
                if own_action == 0 {
                    spec.costs[i][1][x][j] *= 0.1;
                }
            }
        }
    }
    spec.kappa = vec![vec![0.4], vec![0.4]];
    debug_assert!(spec.validate().is_empty());
    spec
}
