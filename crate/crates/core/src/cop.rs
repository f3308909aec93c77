//! Each player's constrained optimization problem (COP) over occupation
//! measures, and the Slater-condition check.
//!
//! With the opponents fixed, player `i`'s best constrained response is the
//! linear program
//!
//! ```text
//! minimize    Σ_{x,a} c̄⁰(x, a) μ(x, a)
//! subject to  Σ_a μ(x, a) − α Σ_{z,a} p̄(x | z, a) μ(z, a) = (1 − α) η(x)   for every x
//!             Σ_{x,a} c̄ℓ(x, a) μ(x, a) ≤ κℓ                                for every ℓ
//!             μ ≥ 0
//! ```
//!
//! whose feasible set is exactly the flow polytope of occupation measures
//! intersected with the constraint half-spaces. Optima are disaggregated
//! into stationary strategies; the reported value is the cost pairing of the
//! cleaned-up measure, cross-checked against the solver's own value.

use crate::error::CsgError;
use crate::model::{reduce, GameSpec, MultiStrategy, ReducedMdp, StationaryStrategy};
use crate::occupation::{disaggregate, flow_residual, pair_cost, OccupationMeasure};
pub use crate::simplex::{solve_lp, LinearProgram, LpOptimum, LpOutcome};

/// Flow-residual bound accepted on solver outputs (looser than the
/// `1e-10` achieved by direct construction, since the measure passed
/// through a pivoted tableau).
pub const LP_FLOW_TOL: f64 = 1e-8;

/// Certified solution of a player's COP.
#[derive(Debug, Clone, PartialEq)]
pub struct CopOptimum {
    /// Optimal objective `J⁰`, equal to the cost pairing of `mu`.
    pub value: f64,
    /// Optimal occupation measure.
    pub mu: OccupationMeasure,
    /// Strategy disaggregated from `mu`.
    pub strategy: StationaryStrategy,
    /// One multiplier per constraint layer, `≤ 0` in this orientation
    /// (relaxing a bound can only lower the optimum).
    pub constraint_duals: Vec<f64>,
}

/// A COP either has a certified optimum or an empty feasible set.
#[derive(Debug, Clone, PartialEq)]
pub enum CopSolution {
    Optimal(CopOptimum),
    Infeasible,
}

impl CopSolution {
    pub fn optimum(&self) -> Option<&CopOptimum> {
        match self {
            CopSolution::Optimal(opt) => Some(opt),
            CopSolution::Infeasible => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.optimum().is_some()
    }
}

/// Best slack achievable inside the constraint set.
#[derive(Debug, Clone, PartialEq)]
pub enum SlaterSlack {
    /// The game has no constraint layers; the condition is vacuous.
    NoConstraints,
    /// Maximal `s` with `Σ c̄ℓ μ ≤ κℓ − s` feasible; positive iff a strictly
    /// feasible measure exists, negative iff the COP itself is infeasible.
    Finite(f64),
}

/// Result of the Slater check, with a strictly feasible witness when one
/// exists.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterReport {
    pub slack: SlaterSlack,
    /// Strategy achieving the maximal slack; present only when the slack is
    /// meaningfully positive (`> 1e-9`).
    pub witness: Option<StationaryStrategy>,
}

/// Index of the variable for pair `(x, a)` in the LP's variable order.
fn pair_offsets(reduced: &ReducedMdp) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(reduced.num_states() + 1);
    let mut acc = 0;
    for x in 0..reduced.num_states() {
        offsets.push(acc);
        acc += reduced.action_count(x);
    }
    offsets.push(acc);
    offsets
}

/// Assemble the COP of a reduced process as an explicit linear program.
///
/// Variables are the pair weights `μ(x, a)`, ordered by state and then by
/// action. Equality row `x` encodes flow balance at `x`; inequality row `ℓ`
/// encodes the `ℓ`-th cost constraint.
pub fn build_cop(reduced: &ReducedMdp) -> LinearProgram {
    let states = reduced.num_states();
    let offsets = pair_offsets(reduced);
    let nv = offsets[states];

    let mut objective = vec![0.0; nv];
    for x in 0..states {
        for a in 0..reduced.action_count(x) {
            objective[offsets[x] + a] = reduced.costs[0][x][a];
        }
    }

    let mut eq_rows = vec![vec![0.0; nv]; states];
    for z in 0..states {
        for a in 0..reduced.action_count(z) {
            let col = offsets[z] + a;
            eq_rows[z][col] += 1.0;
            for (x, &p) in reduced.kernel[z][a].iter().enumerate() {
                eq_rows[x][col] -= reduced.alpha * p;
            }
        }
    }
    let eq_rhs = reduced
        .eta
        .iter()
        .map(|&e| (1.0 - reduced.alpha) * e)
        .collect();

    let layers = reduced.num_constraints();
    let mut ub_rows = vec![vec![0.0; nv]; layers];
    for (ell, row) in ub_rows.iter_mut().enumerate() {
        for x in 0..states {
            for a in 0..reduced.action_count(x) {
                row[offsets[x] + a] = reduced.costs[ell + 1][x][a];
            }
        }
    }

    LinearProgram {
        objective,
        eq_rows,
        eq_rhs,
        ub_rows,
        ub_rhs: reduced.kappa.clone(),
    }
}

fn weights_from_vector(reduced: &ReducedMdp, x: &[f64]) -> Vec<Vec<f64>> {
    let offsets = pair_offsets(reduced);
    (0..reduced.num_states())
        .map(|s| x[offsets[s]..offsets[s] + reduced.action_count(s)].to_vec())
        .collect()
}

/// Solve the COP of an already-reduced process.
///
/// On optimality the measure is re-verified end to end: flow residual below
/// `1e-8`, every constraint within `1e-8` of its bound, and the reported
/// value — the cost pairing of the cleaned measure — consistent with the
/// solver's optimum. Any breach surfaces as a solver failure.
pub fn solve_cop_reduced(reduced: &ReducedMdp) -> Result<CopSolution, CsgError> {
    let lp = build_cop(reduced);
    let opt = match solve_lp(&lp)? {
        LpOutcome::Optimal(opt) => opt,
        LpOutcome::Infeasible => return Ok(CopSolution::Infeasible),
        LpOutcome::Unbounded => {
            return Err(CsgError::SolverFailure(
                "the flow polytope is bounded; an unbounded report signals numerical corruption".into(),
            ))
        }
    };

    let mu = OccupationMeasure::new(reduced.player, weights_from_vector(reduced, &opt.x));
    let residual = flow_residual(&mu, reduced);
    if residual > LP_FLOW_TOL {
        return Err(CsgError::NumericalFailure {
            context: "constrained best-response measure",
            residual,
            bound: LP_FLOW_TOL,
        });
    }
    let value = pair_cost(&mu, &reduced.costs[0]);
    if (value - opt.value).abs() > 1e-8 * (1.0 + opt.value.abs()) {
        return Err(CsgError::SolverFailure(format!(
            "optimum value {:.17} disagrees with the measure pairing {:.17}",
            opt.value, value
        )));
    }
    for (ell, &kappa) in reduced.kappa.iter().enumerate() {
        let cost = pair_cost(&mu, &reduced.costs[ell + 1]);
        if cost > kappa + LP_FLOW_TOL {
            return Err(CsgError::SolverFailure(format!(
                "constraint layer {} violated by {:.3e} after cleanup",
                ell + 1,
                cost - kappa
            )));
        }
    }

    let (_, strategy) = disaggregate(&mu);
    Ok(CopSolution::Optimal(CopOptimum {
        value,
        mu,
        strategy,
        constraint_duals: opt.ub_duals,
    }))
}

/// Solve player `player`'s COP against the opponents in `profile` (the row
/// of `player` itself is ignored).
pub fn solve_cop(
    spec: &GameSpec,
    player: usize,
    profile: &MultiStrategy,
) -> Result<CopSolution, CsgError> {
    let reduced = reduce(spec, player, profile)?;
    solve_cop_reduced(&reduced)
}

/// Maximal constraint slack of an already-reduced process.
///
/// Solves `max s` over flow-feasible `μ` with `Σ c̄ℓ μ + s ≤ κℓ` for every
/// layer, modelling the free variable `s` as `s⁺ − s⁻`.
pub fn slater_check_reduced(reduced: &ReducedMdp) -> Result<SlaterReport, CsgError> {
    let layers = reduced.num_constraints();
    if layers == 0 {
        return Ok(SlaterReport {
            slack: SlaterSlack::NoConstraints,
            witness: None,
        });
    }
    let mut lp = build_cop(reduced);
    let nv = lp.objective.len();
    // Two extra columns: s⁺ and s⁻. Maximize s = minimize −s⁺ + s⁻.
    lp.objective = vec![0.0; nv + 2];
    lp.objective[nv] = -1.0;
    lp.objective[nv + 1] = 1.0;
    for row in &mut lp.eq_rows {
        row.extend_from_slice(&[0.0, 0.0]);
    }
    for row in &mut lp.ub_rows {
        row.extend_from_slice(&[1.0, -1.0]);
    }

    let opt = match solve_lp(&lp)? {
        LpOutcome::Optimal(opt) => opt,
        LpOutcome::Infeasible => {
            return Err(CsgError::SolverFailure(
                "the slack program contains the whole flow polytope and cannot be infeasible".into(),
            ))
        }
        LpOutcome::Unbounded => {
            return Err(CsgError::SolverFailure(
                "the slack program is bounded by any constraint row and cannot be unbounded".into(),
            ))
        }
    };

    let slack = opt.x[nv] - opt.x[nv + 1];
    let witness = if slack > 1e-9 {
        let mu = OccupationMeasure::new(reduced.player, weights_from_vector(reduced, &opt.x[..nv]));
        Some(disaggregate(&mu).1)
    } else {
        None
    };
    Ok(SlaterReport {
        slack: SlaterSlack::Finite(slack),
        witness,
    })
}

/// Slater check for `player` against the opponents in `profile`.
pub fn slater_check(
    spec: &GameSpec,
    player: usize,
    profile: &MultiStrategy,
) -> Result<SlaterReport, CsgError> {
    let reduced = reduce(spec, player, profile)?;
    slater_check_reduced(&reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::evaluate_exact;
    use crate::model::canonical;

    fn g2_cop(kappa: f64) -> Result<CopSolution, CsgError> {
        let spec = canonical::g2(0.5, kappa);
        solve_cop(&spec, 0, &MultiStrategy::uniform(&spec))
    }

    #[test]
    fn g1_unconstrained_cop_matches_the_only_policy() {
        let spec = canonical::g1();
        let sol = solve_cop(&spec, 0, &MultiStrategy::uniform(&spec)).unwrap();
        let opt = sol.optimum().expect("G1 is trivially feasible");
        assert!((opt.value - 0.5).abs() < 1e-9);
        assert!(opt.constraint_duals.is_empty());
    }

    #[test]
    fn g2_binding_constraint_splits_the_actions() {
        let sol = g2_cop(0.5).unwrap();
        let opt = sol.optimum().expect("kappa = 0.5 is feasible");
        assert!((opt.value - 0.5).abs() < 1e-9);
        assert!((opt.strategy.rows[0][1] - 0.5).abs() < 1e-9);
        assert!((opt.mu.weight(0, 0) - 0.5).abs() < 1e-9);
        // The binding constraint carries a negative multiplier: raising
        // kappa by δ lowers the optimum by δ.
        assert!((opt.constraint_duals[0] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn g2_loose_constraint_frees_the_cheap_action() {
        let sol = g2_cop(2.0).unwrap();
        let opt = sol.optimum().expect("kappa = 2 is slack");
        assert!(opt.value.abs() < 1e-9);
        assert!(opt.strategy.rows[0][1].abs() < 1e-9);
        // A slack constraint carries a zero multiplier (complementarity).
        assert!(opt.constraint_duals[0].abs() < 1e-8);
    }

    #[test]
    fn g2_impossible_bound_is_infeasible() {
        assert_eq!(g2_cop(-1.0).unwrap(), CopSolution::Infeasible);
    }

    #[test]
    fn cop_optimum_is_feasible_for_the_original_game() {
        let spec = canonical::g2(0.5, 0.5);
        let sol = solve_cop(&spec, 0, &MultiStrategy::uniform(&spec)).unwrap();
        let opt = sol.optimum().unwrap();
        let profile = MultiStrategy {
            strategies: vec![opt.strategy.clone()],
        };
        let report = evaluate_exact(&spec, &profile).unwrap();
        assert!((report.j[0][0] - opt.value).abs() < 1e-9);
        assert!(report.j[0][1] <= 0.5 + 1e-9);
    }

    #[test]
    fn g2_slater_slack_is_half_with_a_witness() {
        let spec = canonical::g2(0.5, 0.5);
        let report = slater_check(&spec, 0, &MultiStrategy::uniform(&spec)).unwrap();
        match report.slack {
            SlaterSlack::Finite(s) => assert!((s - 0.5).abs() < 1e-9),
            other => panic!("expected a finite slack, got {other:?}"),
        }
        let witness = report.witness.expect("slack 0.5 has a witness");
        // Maximal slack comes from playing b only: J¹ = 0 = κ − 0.5.
        assert!((witness.rows[0][1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn g2_zero_bound_has_zero_slack_and_no_witness() {
        let spec = canonical::g2(0.5, 0.0);
        let report = slater_check(&spec, 0, &MultiStrategy::uniform(&spec)).unwrap();
        match report.slack {
            SlaterSlack::Finite(s) => assert!(s.abs() <= 1e-9),
            other => panic!("expected a finite slack, got {other:?}"),
        }
        assert!(report.witness.is_none());
    }

    #[test]
    fn g2_impossible_bound_has_negative_slack() {
        let spec = canonical::g2(0.5, -1.0);
        let report = slater_check(&spec, 0, &MultiStrategy::uniform(&spec)).unwrap();
        match report.slack {
            SlaterSlack::Finite(s) => assert!((s + 1.0).abs() < 1e-9),
            other => panic!("expected a finite slack, got {other:?}"),
        }
        assert!(report.witness.is_none());
    }

    #[test]
    fn unconstrained_games_report_a_vacuous_condition() {
        let spec = canonical::g1();
        let report = slater_check(&spec, 0, &MultiStrategy::uniform(&spec)).unwrap();
        assert_eq!(report.slack, SlaterSlack::NoConstraints);
        assert!(report.witness.is_none());
    }

    #[test]
    fn cop_against_an_opponent_uses_the_reduced_costs() {
        // Player 1 minimizes; the opponent's mixture shifts the column.
        let spec = canonical::g3(0.5, [0.0, 2.0, 1.0, 0.0], [0.0; 4]);
        let pure_a = StationaryStrategy::pure(&spec, 1, &[0]).unwrap();
        let profile = MultiStrategy {
            strategies: vec![StationaryStrategy::uniform(&spec, 0).unwrap(), pure_a],
        };
        let sol = solve_cop(&spec, 0, &profile).unwrap();
        let opt = sol.optimum().unwrap();
        // Against pure a the costs are (0, 1): play a.
        assert!(opt.value.abs() < 1e-9);
        assert!((opt.strategy.rows[0][0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_state_cop_respects_flow_balance() {
        let spec = canonical::g1();
        let sol = solve_cop(&spec, 0, &MultiStrategy::uniform(&spec)).unwrap();
        let opt = sol.optimum().unwrap();
        let reduced = reduce(&spec, 0, &MultiStrategy::uniform(&spec)).unwrap();
        assert!(flow_residual(&opt.mu, &reduced) <= LP_FLOW_TOL);
        assert!((opt.mu.weight(0, 0) - 0.5).abs() < 1e-9);
        assert!((opt.mu.weight(1, 0) - 0.5).abs() < 1e-9);
    }
}
