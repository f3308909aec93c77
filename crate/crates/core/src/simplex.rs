//! Embedded dense two-phase primal simplex solver.
//!
//! Standard form: minimize `cᵀx` subject to `A_eq x = b_eq`, `A_ub x ≤ b_ub`,
//! `x ≥ 0`. The pivot rule is Bland's smallest-index rule throughout — the
//! smallest-index column with reduced cost below `−1e-10` enters, and ratio
//! ties leave by the smallest basic variable index — which makes the solver
//! deterministic and immune to cycling. Each phase is capped at
//! `50 · (rows + columns)` pivots as a hard stall guard.
//!
//! Optimal results are never returned unchecked: the solver certifies primal
//! feasibility (residual ≤ 1e-9), dual feasibility (≤ 1e-9), and the strong
//! duality gap (≤ 1e-8) on its own output, and reports a solver failure when
//! the certificate does not hold.

use crate::error::CsgError;

/// Reduced costs below `−PIVOT_TOL` are considered improving; pivot elements
/// must exceed `PIVOT_TOL` in magnitude.
pub const PIVOT_TOL: f64 = 1e-10;
/// Primal residual bound of the optimality certificate.
pub const PRIMAL_TOL: f64 = 1e-9;
/// Dual feasibility bound of the optimality certificate.
pub const DUAL_TOL: f64 = 1e-9;
/// Strong duality gap bound of the optimality certificate.
pub const GAP_TOL: f64 = 1e-8;

/// A linear program in standard form (`x ≥ 0` implicit).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_rows: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
}

impl LinearProgram {
    fn validate(&self) -> Result<(), CsgError> {
        let n = self.objective.len();
        if self.eq_rows.len() != self.eq_rhs.len() {
            return Err(CsgError::InvalidArgument(format!(
                "{} equality rows but {} right-hand sides",
                self.eq_rows.len(),
                self.eq_rhs.len()
            )));
        }
        if self.ub_rows.len() != self.ub_rhs.len() {
            return Err(CsgError::InvalidArgument(format!(
                "{} inequality rows but {} right-hand sides",
                self.ub_rows.len(),
                self.ub_rhs.len()
            )));
        }
        for (label, rows) in [("equality", &self.eq_rows), ("inequality", &self.ub_rows)] {
            for (r, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(CsgError::InvalidArgument(format!(
                        "{label} row {r} has {} coefficients, objective has {n}",
                        row.len()
                    )));
                }
            }
        }
        let finite = self
            .objective
            .iter()
            .chain(self.eq_rows.iter().flatten())
            .chain(self.eq_rhs.iter())
            .chain(self.ub_rows.iter().flatten())
            .chain(self.ub_rhs.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(CsgError::InvalidArgument(
                "linear program contains a non-finite coefficient".into(),
            ));
        }
        Ok(())
    }
}

/// Certified primal-dual optimum.
///
/// Sign conventions: equality duals are free; inequality duals are `≤ 0`
/// for this minimization form, so a binding constraint `aᵀx ≤ b` carries a
/// nonpositive multiplier and the strong duality identity reads
/// `cᵀx = b_eqᵀ y_eq + b_ubᵀ y_ub`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpOptimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub eq_duals: Vec<f64>,
    pub ub_duals: Vec<f64>,
}

/// Outcome of a solve: certified optimum, proven infeasibility, or an
/// unbounded objective.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpOptimum),
    Infeasible,
    Unbounded,
}

/// Dense simplex tableau with explicit artificial columns.
///
/// Column layout: original variables, then one slack per inequality row,
/// then one artificial per row (equalities first). Rows whose right-hand
/// side is negative are sign-flipped on entry; `sign[r]` remembers the flip
/// so duals can be mapped back to the caller's orientation.
struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    zrow: Vec<f64>,
    obj: f64,
    basis: Vec<usize>,
    sign: Vec<f64>,
    nv: usize,
    art_start: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let nv = lp.objective.len();
        let me = lp.eq_rows.len();
        let mu = lp.ub_rows.len();
        let m = me + mu;
        let slack_start = nv;
        let art_start = nv + mu;
        let ncols = nv + mu + m;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut sign = Vec::with_capacity(m);

        for r in 0..m {
            let (coeffs, b, slack) = if r < me {
                (&lp.eq_rows[r], lp.eq_rhs[r], None)
            } else {
                (&lp.ub_rows[r - me], lp.ub_rhs[r - me], Some(slack_start + (r - me)))
            };
            let s = if b < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; ncols];
            for (v, &a) in row.iter_mut().zip(coeffs) {
                *v = s * a;
            }
            if let Some(sc) = slack {
                row[sc] = s;
            }
            row[art_start + r] = 1.0;
            // A slack with positive sign is already a feasible basic variable;
            // otherwise the artificial starts in the basis.
            let basic = match slack {
                Some(sc) if s > 0.0 => sc,
                _ => art_start + r,
            };
            rows.push(row);
            rhs.push(s * b);
            basis.push(basic);
            sign.push(s);
        }

        Tableau {
            rows,
            rhs,
            zrow: vec![0.0; ncols],
            obj: 0.0,
            basis,
            sign,
            nv,
            art_start,
        }
    }

    fn ncols(&self) -> usize {
        self.zrow.len()
    }

    fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Recompute reduced costs and objective for the cost vector `costs`
    /// (indexed over all tableau columns) under the current basis.
    fn set_objective(&mut self, costs: &[f64]) {
        self.zrow.copy_from_slice(costs);
        self.obj = 0.0;
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb == 0.0 {
                continue;
            }
            let row = &self.rows[r];
            for (v, &a) in self.zrow.iter_mut().zip(row) {
                *v -= cb * a;
            }
            self.obj += cb * self.rhs[r];
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let piv = self.rows[r][e];
        debug_assert!(piv.abs() > PIVOT_TOL);
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        // Keep the freshly normalized pivot row out of the borrow of `rows`.
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let pivot_rhs = self.rhs[r];
        for r2 in 0..self.nrows() {
            if r2 == r {
                continue;
            }
            let f = self.rows[r2][e];
            if f == 0.0 {
                continue;
            }
            let row2 = &mut self.rows[r2];
            for (v, &p) in row2.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row2[e] = 0.0;
            self.rhs[r2] -= f * pivot_rhs;
        }
        let fz = self.zrow[e];
        if fz != 0.0 {
            for (v, &p) in self.zrow.iter_mut().zip(&pivot_row) {
                *v -= fz * p;
            }
            self.zrow[e] = 0.0;
            self.obj += fz * pivot_rhs;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = e;
    }

    /// Run Bland-rule pivots until optimal or unbounded. Artificial columns
    /// never enter. Returns `Ok(true)` at an optimum, `Ok(false)` when the
    /// objective is unbounded below.
    fn run(&mut self) -> Result<bool, CsgError> {
        let cap = 50 * (self.nrows() + self.ncols());
        for _ in 0..cap {
            // Bland entering rule: smallest improving column index.
            let entering = (0..self.art_start).find(|&j| self.zrow[j] < -PIVOT_TOL);
            let Some(e) = entering else {
                return Ok(true);
            };
            // Minimum-ratio leaving rule; ties by smallest basic index.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.nrows() {
                let a = self.rows[r][e];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[r] / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        if ratio < best - 1e-15
                            || ((ratio - best).abs() <= 1e-15 && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, e),
                None => return Ok(false),
            }
        }
        Err(CsgError::SolverFailure(format!(
            "simplex exceeded the pivot guard of {cap} iterations"
        )))
    }

    /// After phase one, pivot basic artificials out wherever a genuine
    /// column is available; rows that admit none are redundant and keep a
    /// zero-valued artificial harmlessly in the basis.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.nrows() {
            if self.basis[r] < self.art_start {
                continue;
            }
            let entering = (0..self.art_start).find(|&j| self.rows[r][j].abs() > PIVOT_TOL);
            if let Some(e) = entering {
                self.pivot(r, e);
            }
        }
    }
}

/// Solve a linear program; every `Optimal` outcome is certified.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, CsgError> {
    lp.validate()?;
    let mut t = Tableau::build(lp);
    let ncols = t.ncols();

    // Phase one: minimize the total artificial mass.
    let mut phase1 = vec![0.0; ncols];
    for c in &mut phase1[t.art_start..] {
        *c = 1.0;
    }
    t.set_objective(&phase1);
    if !t.run()? {
        return Err(CsgError::SolverFailure(
            "phase one is bounded by construction, yet reported unbounded".into(),
        ));
    }
    if t.obj > PIVOT_TOL {
        return Ok(LpOutcome::Infeasible);
    }
    t.drive_out_artificials();

    // Phase two: the real objective over the feasible basis.
    let mut phase2 = vec![0.0; ncols];
    phase2[..t.nv].copy_from_slice(&lp.objective);
    t.set_objective(&phase2);
    if !t.run()? {
        return Ok(LpOutcome::Unbounded);
    }

    // Primal solution.
    let mut x = vec![0.0; t.nv];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < t.nv {
            x[b] = t.rhs[r];
        }
    }
    let value: f64 = lp.objective.iter().zip(&x).map(|(&c, &xv)| c * xv).sum();

    // Duals: the reduced cost of artificial `r` is `−y_r` in the tableau's
    // row orientation; map back through the recorded sign flips.
    let me = lp.eq_rows.len();
    let duals: Vec<f64> = (0..t.nrows())
        .map(|r| t.sign[r] * -t.zrow[t.art_start + r])
        .collect();
    let optimum = LpOptimum {
        x,
        value,
        eq_duals: duals[..me].to_vec(),
        ub_duals: duals[me..].to_vec(),
    };
    certify(lp, &optimum)?;
    Ok(LpOutcome::Optimal(optimum))
}

/// Verify the primal-dual certificate of an optimum; any breach is a solver
/// failure (never silently returned).
fn certify(lp: &LinearProgram, opt: &LpOptimum) -> Result<(), CsgError> {
    let fail = |what: String| Err(CsgError::SolverFailure(what));

    for (j, &xv) in opt.x.iter().enumerate() {
        if xv < -PRIMAL_TOL {
            return fail(format!("certificate: x[{j}] = {xv:.3e} is negative"));
        }
    }
    for (r, (row, &b)) in lp.eq_rows.iter().zip(&lp.eq_rhs).enumerate() {
        let lhs: f64 = row.iter().zip(&opt.x).map(|(&a, &xv)| a * xv).sum();
        if (lhs - b).abs() > PRIMAL_TOL {
            return fail(format!(
                "certificate: equality row {r} residual {:.3e} exceeds {PRIMAL_TOL:.0e}",
                (lhs - b).abs()
            ));
        }
    }
    for (r, (row, &b)) in lp.ub_rows.iter().zip(&lp.ub_rhs).enumerate() {
        let lhs: f64 = row.iter().zip(&opt.x).map(|(&a, &xv)| a * xv).sum();
        if lhs - b > PRIMAL_TOL {
            return fail(format!(
                "certificate: inequality row {r} violated by {:.3e}",
                lhs - b
            ));
        }
    }

    // Dual feasibility: multipliers of ≤-rows nonpositive, reduced costs of
    // the original columns nonnegative.
    for (r, &y) in opt.ub_duals.iter().enumerate() {
        if y > DUAL_TOL {
            return fail(format!("certificate: inequality dual {r} = {y:.3e} is positive"));
        }
    }
    for j in 0..lp.objective.len() {
        let mut reduced = lp.objective[j];
        for (row, &y) in lp.eq_rows.iter().zip(&opt.eq_duals) {
            reduced -= y * row[j];
        }
        for (row, &y) in lp.ub_rows.iter().zip(&opt.ub_duals) {
            reduced -= y * row[j];
        }
        if reduced < -DUAL_TOL {
            return fail(format!(
                "certificate: reduced cost of column {j} is {reduced:.3e}"
            ));
        }
    }

    // Strong duality gap.
    let dual_value: f64 = lp
        .eq_rhs
        .iter()
        .zip(&opt.eq_duals)
        .chain(lp.ub_rhs.iter().zip(&opt.ub_duals))
        .map(|(&b, &y)| b * y)
        .sum();
    if (opt.value - dual_value).abs() > GAP_TOL {
        return fail(format!(
            "certificate: duality gap {:.3e} exceeds {GAP_TOL:.0e}",
            (opt.value - dual_value).abs()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expect_optimal(outcome: LpOutcome) -> LpOptimum {
        match outcome {
            LpOutcome::Optimal(opt) => opt,
            other => panic!("expected an optimum, got {other:?}"),
        }
    }

    #[test]
    fn box_constrained_minimum_sits_at_the_corner() {
        // min −x1 − 2x2 s.t. x1 + x2 ≤ 4, x2 ≤ 2.
        let lp = LinearProgram {
            objective: vec![-1.0, -2.0],
            ub_rows: vec![vec![1.0, 1.0], vec![0.0, 1.0]],
            ub_rhs: vec![4.0, 2.0],
            ..Default::default()
        };
        let opt = expect_optimal(solve_lp(&lp).unwrap());
        assert!((opt.value + 6.0).abs() < 1e-12);
        assert!((opt.x[0] - 2.0).abs() < 1e-12);
        assert!((opt.x[1] - 2.0).abs() < 1e-12);
        assert!((opt.ub_duals[0] + 1.0).abs() < 1e-12);
        assert!((opt.ub_duals[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn equality_simplex_finds_the_cheap_vertex() {
        // min x1 on x1 + x2 = 1, x ≥ 0.
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            eq_rows: vec![vec![1.0, 1.0]],
            eq_rhs: vec![1.0],
            ..Default::default()
        };
        let opt = expect_optimal(solve_lp(&lp).unwrap());
        assert!(opt.value.abs() < 1e-12);
        assert!(opt.x[0].abs() < 1e-12);
        assert!((opt.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities_are_harmless() {
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            eq_rows: vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![2.0, 2.0]],
            eq_rhs: vec![1.0, 1.0, 2.0],
            ..Default::default()
        };
        let opt = expect_optimal(solve_lp(&lp).unwrap());
        assert!(opt.value.abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let lp = LinearProgram {
            objective: vec![1.0],
            eq_rows: vec![vec![1.0], vec![1.0]],
            eq_rhs: vec![1.0, 2.0],
            ..Default::default()
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn empty_feasible_interval_is_infeasible() {
        // x ≤ 1 and x ≥ 2 (as −x ≤ −2).
        let lp = LinearProgram {
            objective: vec![0.0],
            ub_rows: vec![vec![1.0], vec![-1.0]],
            ub_rhs: vec![1.0, -2.0],
            ..Default::default()
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn negative_rhs_rows_are_handled_by_sign_flipping() {
        // min x s.t. x ≥ 1, i.e. −x ≤ −1.
        let lp = LinearProgram {
            objective: vec![1.0],
            ub_rows: vec![vec![-1.0]],
            ub_rhs: vec![-1.0],
            ..Default::default()
        };
        let opt = expect_optimal(solve_lp(&lp).unwrap());
        assert!((opt.value - 1.0).abs() < 1e-12);
        // The binding lower bound carries dual −1 in the caller's orientation
        // (pushing the bound up by δ raises the optimum by δ).
        assert!((opt.ub_duals[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_objective_is_detected() {
        // min −x with only x ≥ 0.
        let lp = LinearProgram {
            objective: vec![-1.0],
            ..Default::default()
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn duality_gap_closes_on_a_mixed_program() {
        // min x1 + 2x2 + 3x3, x1 + x2 + x3 = 1, x2 + 2x3 ≤ 0.5.
        let lp = LinearProgram {
            objective: vec![1.0, 2.0, 3.0],
            eq_rows: vec![vec![1.0, 1.0, 1.0]],
            eq_rhs: vec![1.0],
            ub_rows: vec![vec![0.0, 1.0, 2.0]],
            ub_rhs: vec![0.5],
        };
        let opt = expect_optimal(solve_lp(&lp).unwrap());
        assert!((opt.value - 1.0).abs() < 1e-12);
        let dual = opt.eq_duals[0] + 0.5 * opt.ub_duals[0];
        assert!((opt.value - dual).abs() < 1e-8);
    }

    #[test]
    fn degenerate_vertices_do_not_cycle() {
        // A classic degenerate configuration: three planes through a vertex.
        let lp = LinearProgram {
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            ub_rows: vec![
                vec![0.25, -60.0, -0.04, 9.0],
                vec![0.5, -90.0, -0.02, 3.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            ub_rhs: vec![0.0, 0.0, 1.0],
            ..Default::default()
        };
        let opt = expect_optimal(solve_lp(&lp).unwrap());
        assert!((opt.value + 0.05).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            eq_rows: vec![vec![1.0]],
            eq_rhs: vec![1.0],
            ..Default::default()
        };
        assert!(matches!(solve_lp(&lp), Err(CsgError::InvalidArgument(_))));
    }
}
