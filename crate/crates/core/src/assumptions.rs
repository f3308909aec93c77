//! Checkable certificates for the hypotheses the solver's guarantees rest
//! on, plus a built-in countable family (`example1`) whose certificates
//! have closed forms.
//!
//! Three kinds of checks live here:
//!
//! - **Exact scans** over a state prefix: the weighted one-step drift bound
//!   `Σ_y w(y)p(y|x,·) ≤ δ·w(x)` (useful when `δ·α < 1`), its squared
//!   variant, and the cost-domination bound `|c(x,·)| ≤ w(x)`. On finite
//!   models the scan is complete and the verdict exact; on countable models
//!   it covers the first `N` states and every report says so (`partial`).
//! - **Trivial scans**: strict positivity of an initial law.
//! - **Sampled evidence**: the strict-feasibility (Slater) probe, which
//!   samples opponent profiles. Sampling can refute but never certify a
//!   universally quantified condition, and the report schema says so
//!   explicitly.

use std::collections::BTreeMap;

use crate::cop::{slater_check_reduced, SlaterSlack};
use crate::error::CsgError;
use crate::model::{decode_profile, profile_count, GameSpec, MultiStrategy};
use crate::rng::substream;
use crate::sampling::random_multi_strategy;
use crate::truncation::CountableModel;

/// Default prefix length for scans over countable models.
pub const DEFAULT_CHECK_STATES: usize = 10_000;

/// Result of the cost-domination scan `|c(x, profile)| ≤ w(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBoundReport {
    /// Largest `|c(x, profile)| / w(x)` seen; the bound holds iff ≤ 1.
    pub worst_ratio: f64,
    pub holds: bool,
    /// (state id, profile index) attaining the worst ratio.
    pub witness: Option<(String, usize)>,
    pub states_checked: usize,
    /// True when only a prefix of a countable model was scanned.
    pub partial: bool,
}

/// Result of the weighted drift scan.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    /// Smallest admissible drift constant:
    /// `max over (x, profile) of Σ_y w(y)p(y|x,·) / w(x)`.
    pub delta_min: f64,
    /// The discount factor the verdict was judged against.
    pub alpha: f64,
    /// `delta_min · alpha < 1`.
    pub holds: bool,
    /// (state id, profile index) attaining `delta_min`.
    pub witness: Option<(String, usize)>,
    /// Worst ratio per joint action label (players joined by `,`).
    pub per_action: BTreeMap<String, f64>,
    pub states_checked: usize,
    pub partial: bool,
    /// Prefix sum `Σ_x w(x)·η(x)`; partial on countable models.
    pub eta_weight_sum: f64,
}

/// Result of the squared-weight drift scan
/// `Σ_y w²(y)p(y|x,·) ≤ β²·w²(x)`.
///
/// Whenever this holds with `α·β² < 1`, the plain drift scan with weight
/// `w²` holds with the same constant — the squared check is exactly a
/// drift check on `w²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDriftReport {
    /// Smallest admissible `β²`.
    pub beta_sq_min: f64,
    pub alpha: f64,
    /// `beta_sq_min · alpha < 1`.
    pub holds: bool,
    pub witness: Option<(String, usize)>,
    pub states_checked: usize,
    pub partial: bool,
}

/// Which states carry no initial mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositivityReport {
    pub all_positive: bool,
    /// Indices with `η(x) ≤ 0`.
    pub null_states: Vec<usize>,
}

/// Sampled evidence about strict feasibility of every player's constraint
/// set across opponent profiles. Evidence only: the underlying condition
/// quantifies over *all* profiles, which sampling can refute but never
/// certify.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterSampleReport {
    /// Profiles examined (the uniform profile plus the random samples).
    pub samples_checked: usize,
    /// Smallest strict-feasibility slack over players × profiles; `None`
    /// when no player has constraints (vacuously satisfied).
    pub min_slack: Option<f64>,
    /// (player, sample index) attaining the minimum; sample 0 is the
    /// uniform profile.
    pub witness: Option<(usize, usize)>,
    /// True when the minimum slack is ≤ 1e-9: strict feasibility likely
    /// fails somewhere.
    pub flagged: bool,
    /// Fixed schema note spelling out the evidential status.
    pub note: String,
}

fn checked_prefix(model: &dyn CountableModel, states: usize) -> (usize, bool) {
    match model.finite_size() {
        Some(size) => (states.min(size), states < size),
        None => (states, true),
    }
}

fn profile_label(model: &dyn CountableModel, state: usize, profile: &[usize]) -> String {
    profile
        .iter()
        .enumerate()
        .map(|(i, &a)| model.actions(i, state)[a].clone())
        .collect::<Vec<_>>()
        .join(",")
}

/// Scan `|cᵢℓ(x, profile)| ≤ w(x)` over the first `states` states.
///
/// The weight must satisfy `w(x) ≥ 1` on every checked state; anything
/// smaller is rejected as an invalid weight rather than reported as a
/// failed bound.
pub fn check_cost_bound(
    model: &dyn CountableModel,
    w: &dyn Fn(usize) -> f64,
    states: usize,
) -> Result<CostBoundReport, CsgError> {
    let (checked, partial) = checked_prefix(model, states);
    let players = model.players();
    let layers = model.kappa().first().map_or(0, Vec::len) + 1;
    let mut worst_ratio = 0.0_f64;
    let mut witness = None;
    for x in 0..checked {
        let wx = w(x);
        if wx < 1.0 {
            return Err(CsgError::InvalidArgument(format!(
                "weight at state index {x} is {wx}, below the required minimum of 1"
            )));
        }
        let counts: Vec<usize> = (0..players).map(|i| model.actions(i, x).len()).collect();
        let mut profile = vec![0_usize; players];
        for j in 0..profile_count(&counts) {
            decode_profile(&counts, j, &mut profile);
            for i in 0..players {
                for l in 0..layers {
                    let ratio = model.cost(i, l, x, &profile).abs() / wx;
                    if ratio > worst_ratio {
                        worst_ratio = ratio;
                        witness = Some((model.state_id(x), j));
                    }
                }
            }
        }
    }
    Ok(CostBoundReport {
        worst_ratio,
        holds: worst_ratio <= 1.0,
        witness,
        states_checked: checked,
        partial,
    })
}

/// Shared scan for the drift checks: worst one-step ratio of the given
/// weight, overall and per joint action label.
#[allow(clippy::type_complexity)]
fn scan_drift(
    model: &dyn CountableModel,
    w: &dyn Fn(usize) -> f64,
    checked: usize,
) -> Result<(f64, Option<(String, usize)>, BTreeMap<String, f64>), CsgError> {
    let players = model.players();
    let mut delta = 0.0_f64;
    let mut witness = None;
    let mut per_action: BTreeMap<String, f64> = BTreeMap::new();
    for x in 0..checked {
        let wx = w(x);
        if wx <= 0.0 || wx.is_nan() {
            return Err(CsgError::InvalidArgument(format!(
                "weight at state index {x} is {wx}, but drift ratios need \
                 strictly positive weights"
            )));
        }
        let counts: Vec<usize> = (0..players).map(|i| model.actions(i, x).len()).collect();
        let mut profile = vec![0_usize; players];
        for j in 0..profile_count(&counts) {
            decode_profile(&counts, j, &mut profile);
            let moved: f64 = model
                .transition(x, &profile)
                .iter()
                .map(|&(y, p)| w(y) * p)
                .sum();
            let ratio = moved / wx;
            if ratio > delta {
                delta = ratio;
                witness = Some((model.state_id(x), j));
            }
            let label = profile_label(model, x, &profile);
            let entry = per_action.entry(label).or_insert(0.0);
            if ratio > *entry {
                *entry = ratio;
            }
        }
    }
    Ok((delta, witness, per_action))
}

/// Scan the weighted one-step drift bound over the first `states` states
/// and judge it against the discount factor: useful iff
/// `delta_min · alpha < 1`.
pub fn check_drift(
    model: &dyn CountableModel,
    w: &dyn Fn(usize) -> f64,
    alpha: f64,
    states: usize,
) -> Result<DriftReport, CsgError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CsgError::InvalidArgument(format!(
            "discount factor {alpha} must lie strictly between 0 and 1"
        )));
    }
    let (checked, partial) = checked_prefix(model, states);
    let (delta_min, witness, per_action) = scan_drift(model, w, checked)?;
    let eta_weight_sum = (0..checked).map(|x| w(x) * model.eta(x)).sum();
    Ok(DriftReport {
        delta_min,
        alpha,
        holds: delta_min * alpha < 1.0,
        witness,
        per_action,
        states_checked: checked,
        partial,
        eta_weight_sum,
    })
}

/// Scan the squared-weight drift bound (a drift scan on `w²`) and judge
/// `beta_sq_min · alpha < 1`.
pub fn check_squared_drift(
    model: &dyn CountableModel,
    w: &dyn Fn(usize) -> f64,
    alpha: f64,
    states: usize,
) -> Result<SquaredDriftReport, CsgError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CsgError::InvalidArgument(format!(
            "discount factor {alpha} must lie strictly between 0 and 1"
        )));
    }
    let (checked, partial) = checked_prefix(model, states);
    let squared = |x: usize| {
        let wx = w(x);
        wx * wx
    };
    let (beta_sq_min, witness, _) = scan_drift(model, &squared, checked)?;
    Ok(SquaredDriftReport {
        beta_sq_min,
        alpha,
        holds: beta_sq_min * alpha < 1.0,
        witness,
        states_checked: checked,
        partial,
    })
}

/// Does the initial law charge every state?
pub fn check_positivity(eta: &[f64]) -> PositivityReport {
    let null_states: Vec<usize> = eta
        .iter()
        .enumerate()
        .filter(|&(_, &e)| e <= 0.0)
        .map(|(x, _)| x)
        .collect();
    PositivityReport {
        all_positive: null_states.is_empty(),
        null_states,
    }
}

/// Probe strict feasibility of each player's constraint set against the
/// uniform profile plus `samples` seeded random opponent profiles.
pub fn check_slater(
    spec: &GameSpec,
    samples: usize,
    seed: u64,
) -> Result<SlaterSampleReport, CsgError> {
    spec.require_valid()?;
    let mut profiles = Vec::with_capacity(samples + 1);
    profiles.push(MultiStrategy::uniform(spec));
    for k in 0..samples {
        let mut rng = substream(seed, k as u64);
        profiles.push(random_multi_strategy(spec, &mut rng));
    }

    let mut min_slack: Option<f64> = None;
    let mut witness = None;
    for (k, profile) in profiles.iter().enumerate() {
        for i in 0..spec.players {
            let reduced = crate::model::reduce(spec, i, profile)?;
            match slater_check_reduced(&reduced)?.slack {
                SlaterSlack::NoConstraints => {}
                SlaterSlack::Finite(s) => {
                    if min_slack.is_none_or(|cur| s < cur) {
                        min_slack = Some(s);
                        witness = Some((i, k));
                    }
                }
            }
        }
    }
    Ok(SlaterSampleReport {
        samples_checked: profiles.len(),
        min_slack,
        witness,
        flagged: min_slack.is_some_and(|s| s <= 1e-9),
        note: "sampled evidence only: strict feasibility quantifies over all \
               opponent profiles, and a finite sample can refute but never \
               certify it"
            .into(),
    })
}

// ---------------------------------------------------------------------------
// Built-in countable family: a stop-or-climb chain in two copies.
// ---------------------------------------------------------------------------

/// Parameters of the built-in countable family.
///
/// The state space is two interleaved copies of the positive integers:
/// *active* levels `1, 2, 3, …` and *starred* levels `1*, 2*, 3*, …`,
/// enumerated `1, 1*, 2, 2*, …`. At an active level the player chooses
/// `c` (climb: to `1*` with probability `q`, else one level up) or `s`
/// (stop: to the next starred level, surely). A starred level has only
/// `s` and falls to the absorbing, cost-free `1*`. Initial mass is
/// geometric with ratio `g` over the active levels.
///
/// Costs: `cost_scale ∈ [0, 1]` at every active level, and
/// `starred_slope · n` at starred level `n ≥ 2` (level `1*` is free), so
/// with `starred_slope ∈ [0, 1]` the cost at `n*` never exceeds `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Params {
    /// Probability that a climb falls to `1*` instead of rising.
    pub q: f64,
    /// Geometric ratio of the initial law over active levels.
    pub g: f64,
    pub alpha: f64,
    /// Weight shift `d ≥ 0` used by [`example1_weight_shifted`].
    pub d: f64,
    /// Cost at every active level, in `[0, 1]`.
    pub cost_scale: f64,
    /// Slope of the starred-level cost, in `[0, 1]`.
    pub starred_slope: f64,
}

impl Default for Example1Params {
    fn default() -> Self {
        Self {
            q: 0.5,
            g: 0.5,
            alpha: 0.5,
            d: 0.0,
            cost_scale: 1.0,
            starred_slope: 1.0,
        }
    }
}

impl Example1Params {
    fn validate(&self) -> Result<(), CsgError> {
        let checks = [
            ("q", self.q, 0.0, 1.0),
            ("g", self.g, f64::MIN_POSITIVE, 1.0 - 1e-12),
            ("alpha", self.alpha, f64::MIN_POSITIVE, 1.0 - 1e-12),
            ("cost_scale", self.cost_scale, 0.0, 1.0),
            ("starred_slope", self.starred_slope, 0.0, 1.0),
        ];
        for (name, value, lo, hi) in checks {
            if !(value >= lo && value <= hi) || !value.is_finite() {
                return Err(CsgError::InvalidArgument(format!(
                    "{name} = {value} is outside its valid range"
                )));
            }
        }
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(CsgError::InvalidArgument(format!(
                "weight shift d = {} must be non-negative",
                self.d
            )));
        }
        Ok(())
    }
}

/// The built-in countable stop-or-climb model. See [`Example1Params`].
pub struct Example1 {
    params: Example1Params,
}

impl Example1 {
    pub fn params(&self) -> &Example1Params {
        &self.params
    }
}

/// Level (1-based) of the enumerated state at `idx`.
fn level(idx: usize) -> usize {
    idx / 2 + 1
}

/// Whether the enumerated state at `idx` is a starred level.
fn starred(idx: usize) -> bool {
    idx % 2 == 1
}

/// Validate the parameters and build the model.
pub fn build_example1(params: Example1Params) -> Result<Example1, CsgError> {
    params.validate()?;
    Ok(Example1 { params })
}

impl CountableModel for Example1 {
    fn players(&self) -> usize {
        1
    }
    fn alpha(&self) -> f64 {
        self.params.alpha
    }
    fn kappa(&self) -> Vec<Vec<f64>> {
        vec![vec![]]
    }
    fn state_id(&self, idx: usize) -> String {
        if starred(idx) {
            format!("{}*", level(idx))
        } else {
            level(idx).to_string()
        }
    }
    fn actions(&self, _player: usize, state: usize) -> Vec<String> {
        if starred(state) {
            vec!["s".into()]
        } else {
            vec!["c".into(), "s".into()]
        }
    }
    fn transition(&self, state: usize, profile: &[usize]) -> Vec<(usize, f64)> {
        if starred(state) {
            return vec![(1, 1.0)]; // fall to the absorbing 1*
        }
        match profile[0] {
            0 => {
                // climb: to 1* with probability q, one level up otherwise
                let q = self.params.q;
                let mut out = Vec::with_capacity(2);
                if q > 0.0 {
                    out.push((1, q));
                }
                if q < 1.0 {
                    out.push((state + 2, 1.0 - q));
                }
                out
            }
            _ => vec![(state + 3, 1.0)], // stop: to the next starred level
        }
    }
    fn cost(&self, _player: usize, _layer: usize, state: usize, _profile: &[usize]) -> f64 {
        if starred(state) {
            let n = level(state);
            if n == 1 {
                0.0
            } else {
                self.params.starred_slope * n as f64
            }
        } else {
            self.params.cost_scale
        }
    }
    fn eta(&self, state: usize) -> f64 {
        if starred(state) {
            0.0
        } else {
            let g = self.params.g;
            (1.0 - g) * g.powi(level(state) as i32 - 1)
        }
    }
    fn eta_tail_mass(&self, n: usize) -> Option<f64> {
        // Active levels at enumeration positions ≥ n start at level
        // ⌈n/2⌉ + 1, so the geometric tail is g^⌈n/2⌉.
        Some(self.params.g.powi(n.div_ceil(2) as i32))
    }
}

/// The simplest dominating weight for the family: 1 at active levels, `n`
/// at starred level `n`. Dominates the costs, but admits no finite drift
/// constant (the stop action jumps the weight from 1 to `n + 1`).
pub fn example1_weight_simple(idx: usize) -> f64 {
    if starred(idx) {
        level(idx) as f64
    } else {
        1.0
    }
}

/// The shifted linear weight: `level + d` everywhere except weight 1 at the
/// absorbing `1*`. Its exact drift constant is `1 + 1/(1 + d)`, so a large
/// enough shift certifies any discount factor below 1.
pub fn example1_weight_shifted(d: f64) -> impl Fn(usize) -> f64 {
    move |idx: usize| {
        if idx == 1 {
            1.0
        } else {
            level(idx) as f64 + d
        }
    }
}

/// Closed-form ceiling on the discounted weight mass beyond level `n`
/// under the shifted-linear weight at `d = 0`:
/// `[αⁿ⁻¹(n−1)(1−α) + αⁿ]/(1−α)² + αⁿ⁻¹/(g(1−α))`.
///
/// Strictly decreasing in `n` (for `n ≥ 2`) with limit 0, so it witnesses
/// that far levels contribute arbitrarily little.
pub fn example1_tail_bound(n: u32, alpha: f64, g: f64) -> f64 {
    assert!(n >= 1, "the tail starts at level 1");
    let a_pow = alpha.powi(n as i32 - 1);
    let numerator = a_pow * (n as f64 - 1.0) * (1.0 - alpha) + a_pow * alpha;
    numerator / ((1.0 - alpha) * (1.0 - alpha)) + a_pow / (g * (1.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical;
    use crate::truncation::{build_mcsg, CutoffPolicy, FiniteCountable, McsgParams};

    fn model() -> Example1 {
        build_example1(Example1Params::default()).unwrap()
    }

    #[test]
    fn enumeration_interleaves_active_and_starred_levels() {
        let m = model();
        let ids: Vec<String> = (0..6).map(|i| m.state_id(i)).collect();
        assert_eq!(ids, ["1", "1*", "2", "2*", "3", "3*"]);
    }

    #[test]
    fn the_first_starred_level_absorbs_at_no_cost() {
        let m = model();
        assert_eq!(m.transition(1, &[0]), vec![(1, 1.0)]);
        assert_eq!(m.cost(0, 0, 1, &[0]), 0.0);
        // every other starred level falls into it
        assert_eq!(m.transition(3, &[0]), vec![(1, 1.0)]);
        assert_eq!(m.transition(5, &[0]), vec![(1, 1.0)]);
    }

    #[test]
    fn climbing_walks_up_when_it_never_falls() {
        let m = build_example1(Example1Params {
            q: 0.0,
            ..Example1Params::default()
        })
        .unwrap();
        assert_eq!(m.transition(0, &[0]), vec![(2, 1.0)]);
        assert_eq!(m.transition(2, &[0]), vec![(4, 1.0)]);

        let m = build_example1(Example1Params {
            q: 1.0,
            ..Example1Params::default()
        })
        .unwrap();
        assert_eq!(m.transition(0, &[0]), vec![(1, 1.0)]);
    }

    #[test]
    fn stopping_moves_to_the_next_starred_level() {
        let m = model();
        assert_eq!(m.transition(0, &[1]), vec![(3, 1.0)]); // 1 → 2*
        assert_eq!(m.transition(4, &[1]), vec![(7, 1.0)]); // 3 → 4*
    }

    #[test]
    fn initial_law_is_geometric_over_active_levels() {
        let m = model();
        assert_eq!(m.eta(0), 0.5);
        assert_eq!(m.eta(1), 0.0);
        assert_eq!(m.eta(2), 0.25);
        assert_eq!(m.eta_tail_mass(59), Some(0.5_f64.powi(30)));
        assert_eq!(m.eta_tail_mass(58), Some(0.5_f64.powi(29)));
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        for params in [
            Example1Params {
                q: 1.5,
                ..Example1Params::default()
            },
            Example1Params {
                g: 0.0,
                ..Example1Params::default()
            },
            Example1Params {
                d: -1.0,
                ..Example1Params::default()
            },
            Example1Params {
                starred_slope: 2.0,
                ..Example1Params::default()
            },
        ] {
            assert!(matches!(
                build_example1(params),
                Err(CsgError::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn linear_weight_certifies_discounts_below_one_half() {
        let m = model(); // q = 0.5
        let w = example1_weight_shifted(0.0);
        let report = check_drift(&m, &w, 0.4, DEFAULT_CHECK_STATES).unwrap();
        assert!((report.delta_min - 2.0).abs() < 1e-12);
        assert!(report.holds);
        assert!(report.partial);
        assert_eq!(report.states_checked, DEFAULT_CHECK_STATES);
        // worst case is the stop action at level 1
        assert_eq!(report.witness, Some(("1".into(), 1)));
        assert!((report.per_action["s"] - 2.0).abs() < 1e-12);
        assert!((report.per_action["c"] - 1.5).abs() < 1e-12);

        let report = check_drift(&m, &w, 0.6, DEFAULT_CHECK_STATES).unwrap();
        assert!(!report.holds);
    }

    #[test]
    fn climb_ratio_shrinks_with_the_fall_probability() {
        for q in [0.0, 0.3, 0.9] {
            let m = build_example1(Example1Params {
                q,
                ..Example1Params::default()
            })
            .unwrap();
            let w = example1_weight_shifted(0.0);
            let report = check_drift(&m, &w, 0.4, 1000).unwrap();
            assert!((report.per_action["c"] - (2.0 - q)).abs() < 1e-12);
        }
    }

    #[test]
    fn shifting_the_weight_certifies_any_discount() {
        let m = model();
        let w = example1_weight_shifted(3.0);
        let report = check_drift(&m, &w, 0.75, DEFAULT_CHECK_STATES).unwrap();
        assert!((report.delta_min - 1.25).abs() < 1e-12);
        assert!(report.holds); // 1.25 · 0.75 < 1

        // any target discount can be certified by a large enough shift
        let alpha = 0.95;
        let d = 30.0; // 1 + 1/31 ≈ 1.032, and 1.032 · 0.95 < 1
        let w = example1_weight_shifted(d);
        let report = check_drift(&m, &w, alpha, 1000).unwrap();
        assert!((report.delta_min - (1.0 + 1.0 / (1.0 + d))).abs() < 1e-12);
        assert!(report.holds);
    }

    #[test]
    fn the_simple_weight_admits_no_finite_drift_constant() {
        let m = model();
        for levels in [10_usize, 100] {
            let report =
                check_drift(&m, &example1_weight_simple, 0.4, 2 * levels).unwrap();
            // stopping at the last checked level jumps the weight from 1 to
            // levels + 1, so the minimal constant grows without bound
            assert!((report.delta_min - (levels as f64 + 1.0)).abs() < 1e-12);
            assert!(report.delta_min > levels as f64);
            assert!(!report.holds);
        }
    }

    #[test]
    fn the_simple_weight_still_dominates_the_costs() {
        let m = model();
        let report =
            check_cost_bound(&m, &example1_weight_simple, DEFAULT_CHECK_STATES).unwrap();
        assert!(report.holds);
        assert!((report.worst_ratio - 1.0).abs() < 1e-12);
        assert!(report.partial);
    }

    #[test]
    fn weights_below_one_are_rejected() {
        let spec = canonical::g2(0.5, 0.5);
        let finite = FiniteCountable::new(&spec);
        let err = check_cost_bound(&finite, &|_| 0.5, 10).unwrap_err();
        assert!(matches!(err, CsgError::InvalidArgument(_)));
    }

    #[test]
    fn finite_scans_are_complete_and_say_so() {
        let spec = canonical::g1();
        let finite = FiniteCountable::new(&spec);
        let report = check_cost_bound(&finite, &|_| 1.0, DEFAULT_CHECK_STATES).unwrap();
        assert!(!report.partial);
        assert_eq!(report.states_checked, 2);
        assert!(report.holds);
    }

    #[test]
    fn constant_weights_give_unit_squared_drift() {
        let spec = canonical::g1();
        let finite = FiniteCountable::new(&spec);
        let report = check_squared_drift(&finite, &|_| 1.0, 0.99, 10).unwrap();
        assert!((report.beta_sq_min - 1.0).abs() < 1e-12);
        assert!(report.holds);
    }

    #[test]
    fn squared_drift_squares_the_linear_constant() {
        let m = model();
        let w = example1_weight_shifted(0.0);
        let report = check_squared_drift(&m, &w, 0.2, DEFAULT_CHECK_STATES).unwrap();
        assert!((report.beta_sq_min - 4.0).abs() < 1e-12);
        assert!(report.holds); // 4 · 0.2 < 1
        let report = check_squared_drift(&m, &w, 0.3, 1000).unwrap();
        assert!(!report.holds); // 4 · 0.3 > 1
    }

    #[test]
    fn squared_drift_is_exactly_drift_of_the_squared_weight() {
        let m = model();
        let w = example1_weight_shifted(1.0);
        let sq = check_squared_drift(&m, &w, 0.2, 500).unwrap();
        let w2 = move |x: usize| w(x) * w(x);
        let plain = check_drift(&m, &w2, 0.2, 500).unwrap();
        assert!((sq.beta_sq_min - plain.delta_min).abs() < 1e-12);
        assert_eq!(sq.witness, plain.witness);
    }

    #[test]
    fn positivity_lists_the_null_states() {
        assert!(check_positivity(&[0.5, 0.5]).all_positive);
        let report = check_positivity(&[1.0, 0.0]);
        assert!(!report.all_positive);
        assert_eq!(report.null_states, vec![1]);
    }

    #[test]
    fn feasibility_probe_reports_the_known_slack() {
        let spec = canonical::g2(0.5, 0.5);
        let report = check_slater(&spec, 5, 7).unwrap();
        assert_eq!(report.samples_checked, 6);
        let slack = report.min_slack.unwrap();
        assert!((slack - 0.5).abs() < 1e-9);
        assert!(!report.flagged);

        let tight = canonical::g2(0.5, 0.0);
        let report = check_slater(&tight, 5, 7).unwrap();
        assert!(report.min_slack.unwrap().abs() < 1e-9);
        assert!(report.flagged);
    }

    #[test]
    fn unconstrained_games_are_vacuously_feasible() {
        let spec = canonical::g1();
        let report = check_slater(&spec, 3, 0).unwrap();
        assert_eq!(report.min_slack, None);
        assert!(!report.flagged);
        assert!(report.note.contains("evidence"));
    }

    #[test]
    fn tail_bound_matches_the_closed_form_and_decreases() {
        assert!((example1_tail_bound(1, 0.5, 0.5) - 6.0).abs() < 1e-12);
        assert!(example1_tail_bound(30, 0.5, 0.5) < 1e-6);
        let mut prev = example1_tail_bound(2, 0.5, 0.5);
        for n in 3..40 {
            let next = example1_tail_bound(n, 0.5, 0.5);
            assert!(next < prev, "bound must strictly decrease at n = {n}");
            prev = next;
        }
        assert!(prev < 1e-8);
    }

    #[test]
    fn default_truncation_keeps_fifty_nine_states() {
        let m = model();
        let (spec, diag) = build_mcsg(&m, &McsgParams::new(4)).unwrap();
        assert_eq!(diag.retained_states, 59);
        assert_eq!(diag.eta_tail_mass, 0.5_f64.powi(30));
        assert!(diag.has_boundary);
        // the perturbed initial law charges every state, starred included
        assert!(check_positivity(&spec.eta).all_positive);
        assert!((spec.eta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn explicit_cutoffs_control_the_retained_count() {
        let m = model();
        let params = McsgParams {
            cutoff: CutoffPolicy::MaxStates(10),
            ..McsgParams::new(4)
        };
        let (spec, diag) = build_mcsg(&m, &params).unwrap();
        assert_eq!(diag.retained_states, 10);
        assert_eq!(spec.num_states(), 11);
        assert_eq!(diag.eta_tail_mass, 0.5_f64.powi(5));
    }
}
