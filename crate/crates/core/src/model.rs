//! Finite constrained stochastic games: specification, validation,
//! strategies, and the per-player reduction to a marginalized decision
//! process.
//!
//! A specification couples `n` players on a finite state space. At state `x`
//! every player `i` picks an action from its finite menu; the joint choice
//! selects one transition row and one cost entry per player and layer.
//! Layer `0` is the objective; layers `1..=l` are constraint costs paired
//! with the bounds in `kappa`. Discounting uses `alpha` in `(0, 1)` and play
//! starts from the initial distribution `eta`.
//!
//! Joint actions are flattened to a single *profile index*, row-major over
//! `(a_1, …, a_n)` with the **last player varying fastest**. Every tensor in
//! this crate and in the JSON file format relies on that order; the encoding
//! is pinned by [`encode_profile`] / [`decode_profile`].

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::CsgError;

/// Tolerance on probability rows and distributions supplied as *input*.
pub const INPUT_SUM_TOL: f64 = 1e-12;
/// Tolerance on *computed* sums and residual-style quantities.
pub const COMPUTED_TOL: f64 = 1e-9;

/// Full description of a finite constrained stochastic game.
///
/// Index conventions, used everywhere without further comment:
///
/// * `actions[i][x][k]` — id of the `k`-th action of player `i` at state `x`;
/// * `transition[x][j][y]` — probability of moving to state `y` from state
///   `x` under joint-action profile `j`;
/// * `costs[i][layer][x][j]` — stage cost of player `i` on `layer`
///   (`0` = objective, `1..=l` = constraints);
/// * `kappa[i][layer - 1]` — constraint bound paired with `costs[i][layer]`;
/// * `eta[x]` — initial probability of state `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub players: usize,
    pub states: Vec<String>,
    pub actions: Vec<Vec<Vec<String>>>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub costs: Vec<Vec<Vec<Vec<f64>>>>,
    pub kappa: Vec<Vec<f64>>,
    pub alpha: f64,
    pub eta: Vec<f64>,
}

impl GameSpec {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_players(&self) -> usize {
        self.players
    }

    /// Number of constraint layers `l` (zero when the game is unconstrained).
    pub fn num_constraints(&self) -> usize {
        self.kappa.first().map_or(0, Vec::len)
    }

    /// Total number of cost layers, objective included.
    pub fn num_layers(&self) -> usize {
        self.costs.first().map_or(0, Vec::len)
    }

    /// Menu sizes of all players at state `x`.
    pub fn action_counts(&self, x: usize) -> Vec<usize> {
        (0..self.players).map(|i| self.actions[i][x].len()).collect()
    }

    /// Number of joint-action profiles at state `x`.
    pub fn profiles(&self, x: usize) -> usize {
        profile_count(&self.action_counts(x))
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.iter().position(|s| s == id)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_spec(self)
    }

    /// Validation as a hard gate: `Err` carries the full report.
    pub fn require_valid(&self) -> Result<(), CsgError> {
        let report = self.validate();
        if report.is_empty() {
            Ok(())
        } else {
            Err(CsgError::InvalidSpec(report))
        }
    }

    /// Copy of the game with a different initial distribution.
    ///
    /// Discounted costs are linear in `eta`, so comparisons across initial
    /// distributions reuse everything else unchanged.
    pub fn with_eta(&self, eta: Vec<f64>) -> GameSpec {
        let mut spec = self.clone();
        spec.eta = eta;
        spec
    }
}

/// Number of joint profiles for the given per-player menu sizes.
pub fn profile_count(counts: &[usize]) -> usize {
    counts.iter().product()
}

/// Flatten a joint action `(a_1, …, a_n)` to its profile index.
///
/// Row-major with the last player varying fastest:
/// `j = ((a_1 · k_2 + a_2) · k_3 + a_3) …`.
pub fn encode_profile(counts: &[usize], actions: &[usize]) -> usize {
    debug_assert_eq!(counts.len(), actions.len());
    let mut j = 0;
    for (&k, &a) in counts.iter().zip(actions) {
        debug_assert!(a < k, "action {a} out of range for a menu of {k}");
        j = j * k + a;
    }
    j
}

/// Inverse of [`encode_profile`]; writes the joint action into `out`.
pub fn decode_profile(counts: &[usize], mut j: usize, out: &mut [usize]) {
    debug_assert_eq!(counts.len(), out.len());
    for i in (0..counts.len()).rev() {
        out[i] = j % counts[i];
        j /= counts[i];
    }
    debug_assert_eq!(j, 0, "profile index out of range");
}

/// One violated invariant, with its location in original identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Stable machine-readable name of the invariant that failed.
    pub invariant: String,
    /// Where it failed, in the specification's own identifiers.
    pub location: String,
    /// Human-readable detail (observed value, expected range).
    pub detail: String,
}

/// Every violated invariant of a specification, or empty when it is valid.
///
/// Violations are grouped by invariant name (ascending) and, within a name,
/// ordered by position in the specification, so reports are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    fn push(&mut self, invariant: &str, location: String, detail: String) {
        self.violations.push(Violation {
            invariant: invariant.to_owned(),
            location,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "(no violations)");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{} @ {}: {}", v.invariant, v.location, v.detail)?;
        }
        Ok(())
    }
}

fn is_distribution_entry(p: f64) -> bool {
    p.is_finite() && p >= 0.0
}

/// Check every structural and numerical invariant of a specification.
///
/// The checks never panic on ragged input: a shape violation suppresses the
/// deeper checks that would index out of bounds, and everything found is
/// reported together.
pub fn validate_spec(spec: &GameSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let states = spec.states.len();

    if spec.players == 0 {
        report.push("player-count", "players".into(), "game needs at least one player".into());
    }
    if states == 0 {
        report.push("state-set", "states".into(), "state set is empty".into());
    }
    {
        let mut seen = BTreeSet::new();
        for (x, id) in spec.states.iter().enumerate() {
            if !seen.insert(id) {
                report.push("state-set", format!("state {x}"), format!("duplicate state id {id:?}"));
            }
        }
    }

    // Human-readable state label, robust to the state list itself being broken.
    let state_label = |x: usize| -> String {
        spec.states
            .get(x)
            .map_or_else(|| format!("state #{x}"), |id| format!("state {id}"))
    };

    // Action menus: outer shape, then per-menu invariants.
    let mut actions_shaped = spec.actions.len() == spec.players;
    if !actions_shaped {
        report.push(
            "tensor-shape",
            "actions".into(),
            format!("expected one action table per player ({}), found {}", spec.players, spec.actions.len()),
        );
    }
    for (i, per_state) in spec.actions.iter().enumerate() {
        if per_state.len() != states {
            actions_shaped = false;
            report.push(
                "tensor-shape",
                format!("player {}, actions", i + 1),
                format!("expected one menu per state ({states}), found {}", per_state.len()),
            );
            continue;
        }
        for (x, menu) in per_state.iter().enumerate() {
            if menu.is_empty() {
                report.push(
                    "action-set",
                    format!("player {}, {}", i + 1, state_label(x)),
                    "action menu is empty".into(),
                );
            }
            let mut seen = BTreeSet::new();
            for id in menu {
                if !seen.insert(id) {
                    report.push(
                        "action-set",
                        format!("player {}, {}", i + 1, state_label(x)),
                        format!("duplicate action id {id:?}"),
                    );
                }
            }
        }
    }

    // Profile counts are only meaningful once the action tables are shaped.
    let profiles_at = |x: usize| -> Option<usize> {
        if actions_shaped {
            Some(profile_count(&spec.action_counts(x)))
        } else {
            None
        }
    };

    // Transition tensor.
    if spec.transition.len() != states {
        report.push(
            "tensor-shape",
            "transition".into(),
            format!("expected one profile table per state ({states}), found {}", spec.transition.len()),
        );
    }
    for (x, rows) in spec.transition.iter().enumerate().take(states) {
        if let Some(expected) = profiles_at(x) {
            if rows.len() != expected {
                report.push(
                    "tensor-shape",
                    format!("transition, {}", state_label(x)),
                    format!("expected {expected} profile rows, found {}", rows.len()),
                );
                continue;
            }
        }
        for (j, row) in rows.iter().enumerate() {
            if row.len() != states {
                report.push(
                    "tensor-shape",
                    format!("transition, {}, profile {j}", state_label(x)),
                    format!("expected {states} targets, found {}", row.len()),
                );
                continue;
            }
            let mut ok = true;
            for (y, &p) in row.iter().enumerate() {
                if !is_distribution_entry(p) {
                    ok = false;
                    let target = spec.states.get(y).map_or_else(|| format!("#{y}"), Clone::clone);
                    report.push(
                        "row-stochastic",
                        format!("{}, profile {j}, target {target}", state_label(x)),
                        format!("probability {p} is not finite and nonnegative"),
                    );
                }
            }
            if ok {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > INPUT_SUM_TOL {
                    report.push(
                        "row-stochastic",
                        format!("{}, profile {j}", state_label(x)),
                        format!("row sums to {sum:.17}, expected 1 within {INPUT_SUM_TOL:.0e}"),
                    );
                }
            }
        }
    }

    // Cost tensor: every player carries the same number of layers, at least one.
    if spec.costs.len() != spec.players {
        report.push(
            "tensor-shape",
            "costs".into(),
            format!("expected one cost table per player ({}), found {}", spec.players, spec.costs.len()),
        );
    }
    let layers = spec.num_layers();
    if spec.costs.first().is_some_and(|c| c.is_empty()) {
        report.push(
            "tensor-shape",
            "player 1, costs".into(),
            "at least the objective layer is required".into(),
        );
    }
    for (i, per_layer) in spec.costs.iter().enumerate() {
        if per_layer.len() != layers {
            report.push(
                "tensor-shape",
                format!("player {}, costs", i + 1),
                format!("expected {layers} layers, found {}", per_layer.len()),
            );
            continue;
        }
        for (layer, per_state) in per_layer.iter().enumerate() {
            if per_state.len() != states {
                report.push(
                    "tensor-shape",
                    format!("player {}, costs, layer {layer}", i + 1),
                    format!("expected one row per state ({states}), found {}", per_state.len()),
                );
                continue;
            }
            for (x, row) in per_state.iter().enumerate() {
                if let Some(expected) = profiles_at(x) {
                    if row.len() != expected {
                        report.push(
                            "tensor-shape",
                            format!("player {}, costs, layer {layer}, {}", i + 1, state_label(x)),
                            format!("expected {expected} profile entries, found {}", row.len()),
                        );
                        continue;
                    }
                }
                for (j, &c) in row.iter().enumerate() {
                    if !c.is_finite() {
                        report.push(
                            "cost-entry",
                            format!("player {}, layer {layer}, {}, profile {j}", i + 1, state_label(x)),
                            format!("cost {c} is not finite"),
                        );
                    }
                }
            }
        }
    }

    // Constraint bounds: one per player per constraint layer.
    if spec.kappa.len() != spec.players {
        report.push(
            "tensor-shape",
            "kappa".into(),
            format!("expected one bound row per player ({}), found {}", spec.players, spec.kappa.len()),
        );
    }
    let constraint_layers = layers.saturating_sub(1);
    for (i, row) in spec.kappa.iter().enumerate() {
        if row.len() != constraint_layers {
            report.push(
                "tensor-shape",
                format!("player {}, kappa", i + 1),
                format!("expected {constraint_layers} bounds, found {}", row.len()),
            );
            continue;
        }
        for (layer, &k) in row.iter().enumerate() {
            if !k.is_finite() {
                report.push(
                    "kappa-entry",
                    format!("player {}, layer {}", i + 1, layer + 1),
                    format!("bound {k} is not finite"),
                );
            }
        }
    }

    // Discount factor.
    if !(spec.alpha.is_finite() && spec.alpha > 0.0 && spec.alpha < 1.0) {
        report.push(
            "alpha-range",
            "alpha".into(),
            format!("discount factor {} must lie strictly inside (0, 1)", spec.alpha),
        );
    }

    // Initial distribution.
    if spec.eta.len() != states {
        report.push(
            "tensor-shape",
            "eta".into(),
            format!("expected {states} entries, found {}", spec.eta.len()),
        );
    } else {
        let mut ok = true;
        for (x, &p) in spec.eta.iter().enumerate() {
            if !is_distribution_entry(p) {
                ok = false;
                report.push(
                    "initial-distribution",
                    state_label(x),
                    format!("probability {p} is not finite and nonnegative"),
                );
            }
        }
        if ok {
            let sum: f64 = spec.eta.iter().sum();
            if (sum - 1.0).abs() > INPUT_SUM_TOL {
                report.push(
                    "initial-distribution",
                    "eta".into(),
                    format!("distribution sums to {sum:.17}, expected 1 within {INPUT_SUM_TOL:.0e}"),
                );
            }
        }
    }

    // Group by invariant name; insertion order is position-ascending already,
    // and the sort is stable, so the result is ordered by (invariant, index).
    report.violations.sort_by(|a, b| a.invariant.cmp(&b.invariant));
    report
}

/// Randomized stationary strategy of a single player.
///
/// `rows[x][k]` is the probability of the `k`-th menu entry at state `x`;
/// every row is a probability distribution over that player's menu.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryStrategy {
    pub rows: Vec<Vec<f64>>,
}

impl StationaryStrategy {
    /// Uniform randomization over every menu.
    pub fn uniform(spec: &GameSpec, player: usize) -> Result<Self, CsgError> {
        check_player(spec, player)?;
        let rows = (0..spec.num_states())
            .map(|x| {
                let k = spec.actions[player][x].len();
                vec![1.0 / k as f64; k]
            })
            .collect();
        Ok(Self { rows })
    }

    /// Deterministic strategy playing `choices[x]` at state `x`.
    pub fn pure(spec: &GameSpec, player: usize, choices: &[usize]) -> Result<Self, CsgError> {
        check_player(spec, player)?;
        if choices.len() != spec.num_states() {
            return Err(CsgError::InvalidArgument(format!(
                "expected one action choice per state ({}), found {}",
                spec.num_states(),
                choices.len()
            )));
        }
        let mut rows = Vec::with_capacity(choices.len());
        for (x, &a) in choices.iter().enumerate() {
            let k = spec.actions[player][x].len();
            if a >= k {
                return Err(CsgError::InvalidArgument(format!(
                    "action choice {a} out of range at state {} (menu has {k} entries)",
                    spec.states[x]
                )));
            }
            let mut row = vec![0.0; k];
            row[a] = 1.0;
            rows.push(row);
        }
        Ok(Self { rows })
    }

    /// Check shape and row-stochasticity against `spec` for `player`.
    pub fn validate_for(&self, spec: &GameSpec, player: usize) -> Result<(), CsgError> {
        check_player(spec, player)?;
        if self.rows.len() != spec.num_states() {
            return Err(CsgError::InvalidArgument(format!(
                "strategy of player {} has {} rows, expected one per state ({})",
                player + 1,
                self.rows.len(),
                spec.num_states()
            )));
        }
        for (x, row) in self.rows.iter().enumerate() {
            let k = spec.actions[player][x].len();
            if row.len() != k {
                return Err(CsgError::InvalidArgument(format!(
                    "strategy of player {} at state {} has {} entries, menu has {k}",
                    player + 1,
                    spec.states[x],
                    row.len()
                )));
            }
            if row.iter().any(|&p| !is_distribution_entry(p)) {
                return Err(CsgError::InvalidArgument(format!(
                    "strategy of player {} at state {} has a negative or non-finite entry",
                    player + 1,
                    spec.states[x]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > INPUT_SUM_TOL {
                return Err(CsgError::InvalidArgument(format!(
                    "strategy of player {} at state {} sums to {sum:.17}, expected 1 within {INPUT_SUM_TOL:.0e}",
                    player + 1,
                    spec.states[x]
                )));
            }
        }
        Ok(())
    }
}

/// Joint stationary profile: one [`StationaryStrategy`] per player, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStrategy {
    pub strategies: Vec<StationaryStrategy>,
}

impl MultiStrategy {
    pub fn uniform(spec: &GameSpec) -> Self {
        let strategies = (0..spec.players)
            .map(|i| StationaryStrategy::uniform(spec, i).expect("player index in range"))
            .collect();
        Self { strategies }
    }

    pub fn validate_for(&self, spec: &GameSpec) -> Result<(), CsgError> {
        if self.strategies.len() != spec.players {
            return Err(CsgError::InvalidArgument(format!(
                "profile has {} strategies, game has {} players",
                self.strategies.len(),
                spec.players
            )));
        }
        for (i, phi) in self.strategies.iter().enumerate() {
            phi.validate_for(spec, i)?;
        }
        Ok(())
    }
}

/// Single-player decision process obtained by averaging the opponents out.
///
/// For a fixed player `i` and opponent strategies `phi_{-i}`, the kernel and
/// costs are the opponent-weighted averages
/// `p̄(y | x, a) = Σ_{a_{-i}} Π_{r ≠ i} phi_r(a_r | x) · p(y | x, a, a_{-i})`
/// and likewise for every cost layer. Both are linear in each opponent's
/// rows, and every kernel row stays a probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMdp {
    pub player: usize,
    pub alpha: f64,
    pub eta: Vec<f64>,
    /// Constraint bounds of the reduced player (layer `l` at index `l - 1`).
    pub kappa: Vec<f64>,
    /// `costs[layer][x][a]`, layer `0` the objective.
    pub costs: Vec<Vec<Vec<f64>>>,
    /// `kernel[x][a][y]`.
    pub kernel: Vec<Vec<Vec<f64>>>,
}

impl ReducedMdp {
    pub fn num_states(&self) -> usize {
        self.kernel.len()
    }

    pub fn num_layers(&self) -> usize {
        self.costs.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.kappa.len()
    }

    pub fn action_count(&self, x: usize) -> usize {
        self.kernel[x].len()
    }

    /// Total number of state-action pairs (the variable count of the
    /// induced linear program).
    pub fn num_pairs(&self) -> usize {
        (0..self.num_states()).map(|x| self.action_count(x)).sum()
    }
}

fn check_player(spec: &GameSpec, player: usize) -> Result<(), CsgError> {
    if player >= spec.players {
        Err(CsgError::PlayerIndex {
            player,
            players: spec.players,
        })
    } else {
        Ok(())
    }
}

/// Average the opponents out of `spec` for `player` under `profile`.
///
/// `profile` must carry a valid strategy for every player; the row of
/// `player` itself is ignored (only the opponents' randomization enters).
pub fn reduce(spec: &GameSpec, player: usize, profile: &MultiStrategy) -> Result<ReducedMdp, CsgError> {
    check_player(spec, player)?;
    profile.validate_for(spec)?;

    let states = spec.num_states();
    let layers = spec.num_layers();
    let mut kernel = Vec::with_capacity(states);
    let mut costs = vec![Vec::with_capacity(states); layers];

    let mut joint = Vec::new();
    for x in 0..states {
        let counts = spec.action_counts(x);
        let own_k = counts[player];
        let mut state_kernel = vec![vec![0.0; states]; own_k];
        let mut state_costs = vec![vec![0.0; own_k]; layers];
        joint.resize(counts.len(), 0);

        for j in 0..profile_count(&counts) {
            decode_profile(&counts, j, &mut joint);
            let mut weight = 1.0;
            for (i, &a) in joint.iter().enumerate() {
                if i != player {
                    weight *= profile.strategies[i].rows[x][a];
                }
            }
            if weight == 0.0 {
                continue;
            }
            let own = joint[player];
            for (target, &p) in spec.transition[x][j].iter().enumerate() {
                state_kernel[own][target] += weight * p;
            }
            for (layer, per_layer) in state_costs.iter_mut().enumerate() {
                per_layer[own] += weight * spec.costs[player][layer][x][j];
            }
        }

        kernel.push(state_kernel);
        for (layer, per_layer) in state_costs.into_iter().enumerate() {
            costs[layer].push(per_layer);
        }
    }

    Ok(ReducedMdp {
        player,
        alpha: spec.alpha,
        eta: spec.eta.clone(),
        kappa: spec.kappa[player].clone(),
        costs,
        kernel,
    })
}

/// Small closed-form games used as fixtures throughout the crate.
pub mod canonical {
    use super::GameSpec;

    /// One player, two states `s0 → s1 → s1`, a single action, unit cost at
    /// `s0` only, discount `1/2`, start at `s0`.
    ///
    /// The discounted objective is `(1 − α) · 1 = 0.5` and the occupation
    /// measure splits evenly between the two states.
    pub fn g1() -> GameSpec {
        GameSpec {
            players: 1,
            states: vec!["s0".into(), "s1".into()],
            actions: vec![vec![vec!["a".into()], vec!["a".into()]]],
            transition: vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]],
            costs: vec![vec![vec![vec![1.0], vec![0.0]]]],
            kappa: vec![vec![]],
            alpha: 0.5,
            eta: vec![1.0, 0.0],
        }
    }

    /// One player, one state, two actions: objective cost `(0, 1)` on
    /// `(a, b)`, one constraint layer with cost `(1, 0)` and bound `kappa`.
    ///
    /// The single flow equation forces total mass 1, so the constrained
    /// optimum trades the two layers directly against each other.
    pub fn g2(alpha: f64, kappa: f64) -> GameSpec {
        GameSpec {
            players: 1,
            states: vec!["s0".into()],
            actions: vec![vec![vec!["a".into(), "b".into()]]],
            transition: vec![vec![vec![1.0], vec![1.0]]],
            costs: vec![vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]]],
            kappa: vec![vec![kappa]],
            alpha,
            eta: vec![1.0],
        }
    }

    /// Two players, one state, menus `{a, b}` each, no constraints.
    ///
    /// `cost1`/`cost2` list each player's objective over the four profiles in
    /// the canonical order `(a,a), (a,b), (b,a), (b,b)` (player 2 fastest).
    pub fn g3(alpha: f64, cost1: [f64; 4], cost2: [f64; 4]) -> GameSpec {
        GameSpec {
            players: 2,
            states: vec!["s0".into()],
            actions: vec![
                vec![vec!["a".into(), "b".into()]],
                vec![vec!["a".into(), "b".into()]],
            ],
            transition: vec![vec![vec![1.0]; 4]],
            costs: vec![vec![vec![cost1.to_vec()]], vec![vec![cost2.to_vec()]]],
            kappa: vec![vec![], vec![]],
            alpha,
            eta: vec![1.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_games_validate_cleanly() {
        assert!(canonical::g1().validate().is_empty());
        assert!(canonical::g2(0.5, 0.5).validate().is_empty());
        assert!(canonical::g3(0.5, [0.0; 4], [0.0; 4]).validate().is_empty());
    }

    #[test]
    fn broken_transition_row_is_reported_once() {
        let mut spec = canonical::g1();
        spec.transition[0][0][0] = 0.5; // row now sums to 1.5
        let report = spec.validate();
        assert_eq!(report.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.invariant, "row-stochastic");
        assert_eq!(v.location, "state s0, profile 0");
    }

    #[test]
    fn alpha_on_the_boundary_is_rejected() {
        let mut spec = canonical::g1();
        spec.alpha = 1.0;
        let report = spec.validate();
        assert_eq!(report.len(), 1);
        assert_eq!(report.violations[0].invariant, "alpha-range");
    }

    #[test]
    fn eta_sum_violation_is_reported() {
        let mut spec = canonical::g1();
        spec.eta = vec![0.6, 0.6];
        let report = spec.validate();
        assert_eq!(report.len(), 1);
        assert_eq!(report.violations[0].invariant, "initial-distribution");
    }

    #[test]
    fn negative_probability_is_a_row_violation() {
        let mut spec = canonical::g1();
        spec.transition[0][0] = vec![-0.5, 1.5];
        let report = spec.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| v.invariant == "row-stochastic" && v.location.contains("target s0")));
    }

    #[test]
    fn ragged_tensors_produce_shape_violations_without_panicking() {
        let mut spec = canonical::g3(0.5, [0.0; 4], [0.0; 4]);
        spec.transition[0].pop(); // drop one profile row
        spec.costs[1][0][0].pop(); // drop one cost entry
        spec.kappa.pop(); // drop player 2's bound row
        let report = spec.validate();
        assert!(report.violations.iter().all(|v| v.invariant == "tensor-shape"));
        assert_eq!(report.len(), 3);
    }

    #[test]
    fn violations_are_grouped_by_invariant() {
        let mut spec = canonical::g1();
        spec.alpha = 2.0;
        spec.transition[0][0][0] = 0.5;
        spec.eta = vec![0.9, 0.2];
        let report = spec.validate();
        let names: Vec<&str> = report.violations.iter().map(|v| v.invariant.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        assert_eq!(report.len(), 3);
    }

    #[test]
    fn profile_order_puts_the_last_player_fastest() {
        let counts = [2, 3];
        assert_eq!(profile_count(&counts), 6);
        assert_eq!(encode_profile(&counts, &[0, 0]), 0);
        assert_eq!(encode_profile(&counts, &[0, 1]), 1);
        assert_eq!(encode_profile(&counts, &[1, 0]), 3);
        assert_eq!(encode_profile(&counts, &[1, 2]), 5);
        let mut out = [0usize; 2];
        for j in 0..6 {
            decode_profile(&counts, j, &mut out);
            assert_eq!(encode_profile(&counts, &out), j);
        }
    }

    #[test]
    fn single_player_reduction_is_the_identity() {
        let spec = canonical::g2(0.5, 0.5);
        let profile = MultiStrategy::uniform(&spec);
        let reduced = reduce(&spec, 0, &profile).unwrap();
        assert_eq!(reduced.kernel, vec![vec![vec![1.0], vec![1.0]]]);
        assert_eq!(reduced.costs[0], vec![vec![0.0, 1.0]]);
        assert_eq!(reduced.costs[1], vec![vec![1.0, 0.0]]);
        assert_eq!(reduced.kappa, vec![0.5]);
        assert_eq!(reduced.eta, vec![1.0]);
    }

    #[test]
    fn uniform_opponent_averages_the_profile_rows() {
        // Player 1's cost over (a,a), (a,b), (b,a), (b,b).
        let spec = canonical::g3(0.5, [0.0, 2.0, 4.0, 6.0], [0.0; 4]);
        let profile = MultiStrategy::uniform(&spec);
        let reduced = reduce(&spec, 0, &profile).unwrap();
        // Against the uniform opponent, costs average over player 2's column.
        assert_eq!(reduced.costs[0][0], vec![1.0, 5.0]);
        assert!((reduced.kernel[0][0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_opponent_selects_a_profile_column() {
        let spec = canonical::g3(0.5, [0.0, 2.0, 4.0, 6.0], [0.0; 4]);
        let pure_b = StationaryStrategy::pure(&spec, 1, &[1]).unwrap();
        let profile = MultiStrategy {
            strategies: vec![StationaryStrategy::uniform(&spec, 0).unwrap(), pure_b],
        };
        let reduced = reduce(&spec, 0, &profile).unwrap();
        assert_eq!(reduced.costs[0][0], vec![2.0, 6.0]);
    }

    #[test]
    fn reduction_is_linear_in_the_opponent_rows() {
        let spec = canonical::g3(0.6, [1.0, -2.0, 0.5, 3.0], [0.0; 4]);
        let me = StationaryStrategy::uniform(&spec, 0).unwrap();
        let opp = |p: f64| StationaryStrategy {
            rows: vec![vec![1.0 - p, p]],
        };
        let at = |p: f64| {
            let profile = MultiStrategy {
                strategies: vec![me.clone(), opp(p)],
            };
            reduce(&spec, 0, &profile).unwrap()
        };
        let lambda = 0.3;
        let blend = at(lambda * 0.8 + (1.0 - lambda) * 0.1);
        let left = at(0.8);
        let right = at(0.1);
        for a in 0..2 {
            let mixed = lambda * left.costs[0][0][a] + (1.0 - lambda) * right.costs[0][0][a];
            assert!((blend.costs[0][0][a] - mixed).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_kernel_rows_stay_stochastic() {
        // Two states, two players, asymmetric menus, handmade kernel.
        let spec = GameSpec {
            players: 2,
            states: vec!["u".into(), "v".into()],
            actions: vec![
                vec![vec!["a".into(), "b".into()], vec!["a".into()]],
                vec![vec!["x".into()], vec!["x".into(), "y".into(), "z".into()]],
            ],
            transition: vec![
                vec![vec![0.25, 0.75], vec![0.5, 0.5]],
                vec![vec![0.1, 0.9], vec![0.3, 0.7], vec![1.0, 0.0]],
            ],
            costs: vec![
                vec![vec![vec![1.0, 2.0], vec![0.0, 1.0, 2.0]]],
                vec![vec![vec![3.0, 4.0], vec![5.0, 6.0, 7.0]]],
            ],
            kappa: vec![vec![], vec![]],
            alpha: 0.5,
            eta: vec![0.5, 0.5],
        };
        assert!(spec.validate().is_empty());
        let profile = MultiStrategy::uniform(&spec);
        for player in 0..2 {
            let reduced = reduce(&spec, player, &profile).unwrap();
            for x in 0..reduced.num_states() {
                for a in 0..reduced.action_count(x) {
                    let sum: f64 = reduced.kernel[x][a].iter().sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn reduce_rejects_a_bad_player_index() {
        let spec = canonical::g1();
        let profile = MultiStrategy::uniform(&spec);
        match reduce(&spec, 1, &profile) {
            Err(CsgError::PlayerIndex { player: 1, players: 1 }) => {}
            other => panic!("expected a player index error, got {other:?}"),
        }
    }

    #[test]
    fn strategy_validation_rejects_bad_rows() {
        let spec = canonical::g2(0.5, 0.5);
        let short = StationaryStrategy { rows: vec![vec![1.0]] };
        assert!(matches!(
            short.validate_for(&spec, 0),
            Err(CsgError::InvalidArgument(_))
        ));
        let unnormalized = StationaryStrategy {
            rows: vec![vec![0.6, 0.6]],
        };
        assert!(matches!(
            unnormalized.validate_for(&spec, 0),
            Err(CsgError::InvalidArgument(_))
        ));
        let negative = StationaryStrategy {
            rows: vec![vec![1.5, -0.5]],
        };
        assert!(matches!(
            negative.validate_for(&spec, 0),
            Err(CsgError::InvalidArgument(_))
        ));
    }

    #[test]
    fn pure_strategy_chooses_the_requested_action() {
        let spec = canonical::g2(0.5, 0.5);
        let phi = StationaryStrategy::pure(&spec, 0, &[1]).unwrap();
        assert_eq!(phi.rows, vec![vec![0.0, 1.0]]);
        assert!(StationaryStrategy::pure(&spec, 0, &[2]).is_err());
    }

    #[test]
    fn with_eta_replaces_only_the_initial_distribution() {
        let spec = canonical::g1();
        let moved = spec.with_eta(vec![0.0, 1.0]);
        assert_eq!(moved.eta, vec![0.0, 1.0]);
        assert_eq!(moved.transition, spec.transition);
        assert_eq!(moved.costs, spec.costs);
    }
}
