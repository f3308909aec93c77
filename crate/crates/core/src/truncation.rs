//! Finite approximations of countable-state games.
//!
//! A countable-state model cannot be solved directly; the approximation at
//! level `m` (an *m-approximation* here) replaces it by a finite game in
//! four coupled moves:
//!
//! 1. **State cutoff** — keep the first `M` enumerated states and add one
//!    zero-cost absorbing boundary state; transition mass that would leave
//!    the retained set is redirected to the boundary and *reported*, never
//!    hidden (redirected mass is not bounded a priori — a deterministic
//!    upward drift redirects everything).
//! 2. **Initial-law perturbation** — `η(m) = (1 − 1/m)η + (1/m)η̃` with `η̃`
//!    supported on the η-null states, so every retained state is reachable
//!    at time 1 and strategy disaggregation is well posed.
//! 3. **Cost clipping** — costs clamped to `[−√m, √m]`, which bounds the
//!    normalized values by `√m` and hence the initial-law sensitivity by
//!    `√m · Σ|Δη| ≤ 2/√m`.
//! 4. **Bound relaxation** — `κ ↦ (1 − 1/m)κ + 1/√m`, keeping strategies
//!    feasible for the original game feasible in the approximation once
//!    `m ≥ κ²`.
//!
//! The three uses of `m` default to a single coupled index but may be
//! decoupled through [`McsgParams`]; no claim is made about which converges
//! faster.

use crate::error::CsgError;
use crate::evaluation::evaluate_exact;
use crate::model::{decode_profile, profile_count, GameSpec, INPUT_SUM_TOL};
use crate::nash::{solve_nash, NashOptions, NashReport};

/// Identifier of the absorbing boundary state a truncation appends.
pub const BOUNDARY_STATE: &str = "__boundary__";
/// The single action every player holds at the boundary state.
pub const BOUNDARY_ACTION: &str = "stay";
/// Hard ceiling on cutoff resolution by tail mass.
const MAX_ENUMERATED: usize = 1_000_000;

/// A countable-state constrained game described by local rules: everything
/// is indexed by the enumeration position, and only finite prefixes are
/// ever materialized.
///
/// `layer` 0 is the objective cost; layers `1..=L` are the constraint
/// costs, `L` the per-player bound count from [`kappa`](Self::kappa).
pub trait CountableModel {
    fn players(&self) -> usize;
    fn alpha(&self) -> f64;
    /// Constraint bounds per player; all rows must have equal length.
    fn kappa(&self) -> Vec<Vec<f64>>;
    /// Identifier of the state at enumeration position `idx`.
    fn state_id(&self, idx: usize) -> String;
    /// Total state count when the model is finite; `None` when unbounded.
    fn finite_size(&self) -> Option<usize> {
        None
    }
    /// Action labels of `player` at the given state.
    fn actions(&self, player: usize, state: usize) -> Vec<String>;
    /// Finite transition support under the given action profile (one action
    /// index per player); probabilities must sum to 1 within 1e-12.
    fn transition(&self, state: usize, profile: &[usize]) -> Vec<(usize, f64)>;
    fn cost(&self, player: usize, layer: usize, state: usize, profile: &[usize]) -> f64;
    /// Initial probability of the state at position `idx`.
    fn eta(&self, state: usize) -> f64;
    /// Mass of the initial distribution beyond the first `n` states, when
    /// computable in closed form.
    fn eta_tail_mass(&self, n: usize) -> Option<f64>;
    /// Whether the model supplies an auxiliary distribution on the η-null
    /// states (used to perturb the initial law).
    fn has_eta_tilde(&self) -> bool {
        false
    }
    /// The auxiliary distribution, meaningful only when
    /// [`has_eta_tilde`](Self::has_eta_tilde) is true.
    fn eta_tilde(&self, state: usize) -> f64 {
        let _ = state;
        0.0
    }
}

/// Adapter presenting a finite [`GameSpec`] through the countable-model
/// interface, so finite games flow through the same truncation pipeline.
pub struct FiniteCountable<'a> {
    spec: &'a GameSpec,
}

impl<'a> FiniteCountable<'a> {
    pub fn new(spec: &'a GameSpec) -> Self {
        Self { spec }
    }
}

impl CountableModel for FiniteCountable<'_> {
    fn players(&self) -> usize {
        self.spec.players
    }
    fn alpha(&self) -> f64 {
        self.spec.alpha
    }
    fn kappa(&self) -> Vec<Vec<f64>> {
        self.spec.kappa.clone()
    }
    fn state_id(&self, idx: usize) -> String {
        self.spec.states[idx].clone()
    }
    fn finite_size(&self) -> Option<usize> {
        Some(self.spec.num_states())
    }
    fn actions(&self, player: usize, state: usize) -> Vec<String> {
        self.spec.actions[player][state].clone()
    }
    fn transition(&self, state: usize, profile: &[usize]) -> Vec<(usize, f64)> {
        let counts = self.spec.action_counts(state);
        let j = crate::model::encode_profile(&counts, profile);
        self.spec.transition[state][j]
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p != 0.0)
            .collect()
    }
    fn cost(&self, player: usize, layer: usize, state: usize, profile: &[usize]) -> f64 {
        let counts = self.spec.action_counts(state);
        let j = crate::model::encode_profile(&counts, profile);
        self.spec.costs[player][layer][state][j]
    }
    fn eta(&self, state: usize) -> f64 {
        self.spec.eta[state]
    }
    fn eta_tail_mass(&self, n: usize) -> Option<f64> {
        if n >= self.spec.eta.len() {
            return Some(0.0);
        }
        Some(self.spec.eta[n..].iter().sum::<f64>().max(0.0))
    }
}

/// Deterministic upward drift `p(x+2 | x) = 1`: the canonical witness that
/// redirected transition mass can be total no matter how many states are
/// retained. Single player, single action, zero costs, geometric initial
/// law.
pub struct DriftChain {
    pub alpha: f64,
}

impl CountableModel for DriftChain {
    fn players(&self) -> usize {
        1
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn kappa(&self) -> Vec<Vec<f64>> {
        vec![vec![]]
    }
    fn state_id(&self, idx: usize) -> String {
        format!("x{idx}")
    }
    fn actions(&self, _player: usize, _state: usize) -> Vec<String> {
        vec!["step".into()]
    }
    fn transition(&self, state: usize, _profile: &[usize]) -> Vec<(usize, f64)> {
        vec![(state + 2, 1.0)]
    }
    fn cost(&self, _player: usize, _layer: usize, _state: usize, _profile: &[usize]) -> f64 {
        0.0
    }
    fn eta(&self, state: usize) -> f64 {
        0.5_f64.powi(state as i32 + 1)
    }
    fn eta_tail_mass(&self, n: usize) -> Option<f64> {
        Some(0.5_f64.powi(n as i32))
    }
}

/// How the finite state cutoff is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffPolicy {
    /// Keep exactly this many enumerated states (capped at the model size).
    MaxStates(usize),
    /// Keep the shortest prefix whose initial-law tail mass is at most the
    /// threshold.
    TailMass(f64),
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy::TailMass(1e-9)
    }
}

/// Approximation parameters: the level `m` with an optional decoupling of
/// its three roles, plus the state cutoff policy.
#[derive(Debug, Clone, PartialEq)]
pub struct McsgParams {
    /// Coupled approximation level (clipping, initial law, bounds).
    pub m: u64,
    pub cutoff: CutoffPolicy,
    /// Override of `m` for cost clipping only.
    pub m_clip: Option<u64>,
    /// Override of `m` for the initial-law perturbation only.
    pub m_eta: Option<u64>,
    /// Override of `m` for the bound relaxation only.
    pub m_kappa: Option<u64>,
}

impl McsgParams {
    pub fn new(m: u64) -> Self {
        Self {
            m,
            cutoff: CutoffPolicy::default(),
            m_clip: None,
            m_eta: None,
            m_kappa: None,
        }
    }

    fn validate(&self) -> Result<(), CsgError> {
        for (name, value) in [
            ("m", Some(self.m)),
            ("m_clip", self.m_clip),
            ("m_eta", self.m_eta),
            ("m_kappa", self.m_kappa),
        ] {
            if value == Some(0) {
                return Err(CsgError::InvalidArgument(format!(
                    "approximation level {name} must be at least 1"
                )));
            }
        }
        if let CutoffPolicy::TailMass(tau) = self.cutoff {
            if tau <= 0.0 || tau.is_nan() {
                return Err(CsgError::InvalidArgument(format!(
                    "tail-mass threshold {tau} must be positive"
                )));
            }
        }
        if let CutoffPolicy::MaxStates(0) = self.cutoff {
            return Err(CsgError::InvalidArgument(
                "state cutoff must retain at least one state".into(),
            ));
        }
        Ok(())
    }

    fn clip_level(&self) -> u64 {
        self.m_clip.unwrap_or(self.m)
    }
    fn eta_level(&self) -> u64 {
        self.m_eta.unwrap_or(self.m)
    }
    fn kappa_level(&self) -> u64 {
        self.m_kappa.unwrap_or(self.m)
    }
}

/// What the truncation actually did, reported as first-class data.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationDiagnostics {
    /// Coupled approximation level.
    pub m: u64,
    pub sqrt_m: f64,
    /// Enumerated states retained (excluding any boundary state).
    pub retained_states: usize,
    /// Whether an absorbing boundary state was appended.
    pub has_boundary: bool,
    /// Initial-law mass beyond the retained states.
    pub eta_tail_mass: f64,
    /// Mass the *perturbed* initial law places on the boundary state.
    pub eta_boundary_mass: f64,
    /// Largest transition mass redirected to the boundary over all retained
    /// (state, profile) pairs.
    pub redirected_max: f64,
    /// A (state id, profile index) attaining `redirected_max`, when any
    /// mass was redirected.
    pub redirected_witness: Option<(String, usize)>,
    /// The unperturbed initial law restricted to the built state space
    /// (tail mass on the boundary state when present), for sensitivity
    /// comparisons.
    pub eta_restricted: Vec<f64>,
}

/// Blend the initial law with an auxiliary distribution on its null states:
/// `η(m)(x) = (1 − 1/m)η(x) + (1/m)η̃(x)`.
///
/// `eta_tilde` must be supported where `eta` vanishes. An all-zero
/// `eta_tilde` (no null states to cover) leaves `eta` unchanged. For
/// `m ≥ 2` the blend is strictly positive wherever either input is.
pub fn perturb_eta(eta: &[f64], eta_tilde: &[f64], m: u64) -> Result<Vec<f64>, CsgError> {
    if m == 0 {
        return Err(CsgError::InvalidArgument(
            "approximation level m must be at least 1".into(),
        ));
    }
    if eta.len() != eta_tilde.len() {
        return Err(CsgError::InvalidArgument(format!(
            "initial law has {} states but the auxiliary law has {}",
            eta.len(),
            eta_tilde.len()
        )));
    }
    let tilde_mass: f64 = eta_tilde.iter().sum();
    if tilde_mass.abs() <= INPUT_SUM_TOL {
        return Ok(eta.to_vec());
    }
    if (tilde_mass - 1.0).abs() > INPUT_SUM_TOL {
        return Err(CsgError::InvalidArgument(format!(
            "auxiliary initial law sums to {tilde_mass}, expected 1"
        )));
    }
    for (x, (&e, &t)) in eta.iter().zip(eta_tilde).enumerate() {
        if t < 0.0 {
            return Err(CsgError::InvalidArgument(format!(
                "auxiliary initial law is negative ({t}) at state index {x}"
            )));
        }
        if t > 0.0 && e > 0.0 {
            return Err(CsgError::InvalidArgument(format!(
                "auxiliary initial law puts mass {t} at state index {x} \
                 where the initial law is already positive"
            )));
        }
    }
    let lambda = 1.0 / m as f64;
    Ok(eta
        .iter()
        .zip(eta_tilde)
        .map(|(&e, &t)| (1.0 - lambda) * e + lambda * t)
        .collect())
}

/// Clamp one cost entry to `[−√m, √m]`.
pub fn clip_value(c: f64, m: u64) -> f64 {
    let bound = (m as f64).sqrt();
    c.clamp(-bound, bound)
}

/// A copy of the spec with every cost entry clamped to `[−√m, √m]`.
pub fn clip_costs(spec: &GameSpec, m: u64) -> GameSpec {
    let mut out = spec.clone();
    for per_player in &mut out.costs {
        for per_state in per_player {
            for per_profile in per_state {
                for c in per_profile {
                    *c = clip_value(*c, m);
                }
            }
        }
    }
    out
}

/// The relaxed constraint bound `(1 − 1/m)κ + 1/√m`.
///
/// For `m ≥ κ²` this is at least `κ`, so original-game feasibility is
/// preserved; for smaller `m` it can tighten instead.
pub fn relax_kappa(kappa: f64, m: u64) -> f64 {
    let mf = m as f64;
    (1.0 - 1.0 / mf) * kappa + 1.0 / mf.sqrt()
}

/// Resolve the cutoff policy to a retained-state count.
fn resolve_cutoff(model: &dyn CountableModel, policy: CutoffPolicy) -> Result<usize, CsgError> {
    match policy {
        CutoffPolicy::MaxStates(m0) => {
            Ok(model.finite_size().map_or(m0, |size| m0.min(size)))
        }
        CutoffPolicy::TailMass(tau) => {
            let cap = model.finite_size().unwrap_or(MAX_ENUMERATED).min(MAX_ENUMERATED);
            for n in 1..=cap {
                let tail = model.eta_tail_mass(n).ok_or_else(|| {
                    CsgError::InvalidModel(
                        "initial-law tail mass is not computable; \
                         use an explicit state cutoff"
                            .into(),
                    )
                })?;
                if tail <= tau {
                    return Ok(n);
                }
            }
            Err(CsgError::InvalidModel(format!(
                "initial-law tail mass does not fall below {tau} within \
                 {MAX_ENUMERATED} states"
            )))
        }
    }
}

/// Build the finite approximation at level `params.m`.
///
/// Retains the first `M` enumerated states per the cutoff policy; when
/// truncation actually cuts something off (or the model is unbounded), an
/// absorbing zero-cost boundary state absorbs both redirected transition
/// mass and initial-law tail mass. Costs are clipped, bounds relaxed, and
/// the initial law perturbed by the model's auxiliary distribution — or,
/// absent one, a geometric distribution over the retained η-null states.
pub fn build_mcsg(
    model: &dyn CountableModel,
    params: &McsgParams,
) -> Result<(GameSpec, TruncationDiagnostics), CsgError> {
    params.validate()?;
    let retained = resolve_cutoff(model, params.cutoff)?;
    if retained == 0 {
        return Err(CsgError::InvalidArgument(
            "state cutoff must retain at least one state".into(),
        ));
    }
    let fully_retained = model.finite_size().is_some_and(|size| retained >= size);
    let has_boundary = !fully_retained;
    let total = retained + usize::from(has_boundary);

    let players = model.players();
    let kappa_rows = model.kappa();
    if kappa_rows.len() != players {
        return Err(CsgError::InvalidModel(format!(
            "model reports {players} players but {} bound rows",
            kappa_rows.len()
        )));
    }
    let constraints = kappa_rows.first().map_or(0, Vec::len);
    let layers = constraints + 1;

    let mut states: Vec<String> = (0..retained).map(|x| model.state_id(x)).collect();
    if states.iter().any(|s| s == BOUNDARY_STATE) {
        return Err(CsgError::InvalidModel(format!(
            "a model state is named {BOUNDARY_STATE}, which is reserved \
             for the truncation boundary"
        )));
    }
    if has_boundary {
        states.push(BOUNDARY_STATE.into());
    }

    let mut actions: Vec<Vec<Vec<String>>> = vec![Vec::with_capacity(total); players];
    for (i, per_player) in actions.iter_mut().enumerate() {
        for x in 0..retained {
            per_player.push(model.actions(i, x));
        }
        if has_boundary {
            per_player.push(vec![BOUNDARY_ACTION.into()]);
        }
    }

    let m_clip = params.clip_level();
    let mut transition: Vec<Vec<Vec<f64>>> = Vec::with_capacity(total);
    let mut costs: Vec<Vec<Vec<Vec<f64>>>> =
        vec![vec![Vec::with_capacity(total); layers]; players];
    let mut redirected_max = 0.0_f64;
    let mut redirected_witness = None;

    for x in 0..retained {
        let counts: Vec<usize> = (0..players).map(|i| actions[i][x].len()).collect();
        let profiles = profile_count(&counts);
        let mut rows = Vec::with_capacity(profiles);
        let mut cost_x: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; profiles]; layers]; players];
        let mut profile = vec![0_usize; players];
        for j in 0..profiles {
            decode_profile(&counts, j, &mut profile);
            let mut row = vec![0.0; total];
            let mut redirected = 0.0;
            for (y, p) in model.transition(x, &profile) {
                if y < retained {
                    row[y] += p;
                } else {
                    redirected += p;
                }
            }
            if redirected > 0.0 {
                if !has_boundary {
                    return Err(CsgError::InvalidModel(format!(
                        "transition mass {redirected} leaves a fully \
                         retained finite model from state {}",
                        states[x]
                    )));
                }
                row[retained] += redirected;
                if redirected > redirected_max {
                    redirected_max = redirected;
                    redirected_witness = Some((states[x].clone(), j));
                }
            }
            rows.push(row);
            for (i, per_player) in cost_x.iter_mut().enumerate() {
                for (l, per_layer) in per_player.iter_mut().enumerate() {
                    per_layer[j] = clip_value(model.cost(i, l, x, &profile), m_clip);
                }
            }
        }
        transition.push(rows);
        for (i, per_player) in cost_x.into_iter().enumerate() {
            for (l, per_layer) in per_player.into_iter().enumerate() {
                costs[i][l].push(per_layer);
            }
        }
    }
    if has_boundary {
        let mut row = vec![0.0; total];
        row[retained] = 1.0;
        transition.push(vec![row]);
        for per_player in &mut costs {
            for per_layer in per_player {
                per_layer.push(vec![0.0]);
            }
        }
    }

    // Initial law restricted to the built space: enumerated prefix plus the
    // tail mass on the boundary.
    let mut eta_restricted: Vec<f64> = (0..retained).map(|x| model.eta(x)).collect();
    let prefix_mass: f64 = eta_restricted.iter().sum();
    let tail = model
        .eta_tail_mass(retained)
        .unwrap_or_else(|| (1.0 - prefix_mass).max(0.0));
    if has_boundary {
        eta_restricted.push(tail);
    } else if tail > 1e-9 {
        return Err(CsgError::InvalidModel(format!(
            "initial-law mass {tail} lies beyond a fully retained finite model"
        )));
    }

    // Auxiliary law over the η-null states of the built space.
    let null_states: Vec<usize> = eta_restricted
        .iter()
        .enumerate()
        .filter(|&(_, &e)| e <= 0.0)
        .map(|(x, _)| x)
        .collect();
    let mut eta_tilde = vec![0.0; total];
    if !null_states.is_empty() {
        if model.has_eta_tilde() {
            for &x in &null_states {
                if x < retained {
                    eta_tilde[x] = model.eta_tilde(x);
                }
            }
        }
        let provided: f64 = eta_tilde.iter().sum();
        if provided > INPUT_SUM_TOL {
            for t in &mut eta_tilde {
                *t /= provided;
            }
        } else {
            // Geometric with ratio 1/2 over the null states in enumeration
            // order, renormalized: deterministic and strictly positive.
            for (k, &x) in null_states.iter().enumerate() {
                eta_tilde[x] = 0.5_f64.powi(k as i32 + 1);
            }
            let mass: f64 = eta_tilde.iter().sum();
            for t in &mut eta_tilde {
                *t /= mass;
            }
        }
    }

    let eta = perturb_eta(&eta_restricted, &eta_tilde, params.eta_level())?;
    let eta_boundary_mass = if has_boundary { eta[retained] } else { 0.0 };

    let kappa: Vec<Vec<f64>> = kappa_rows
        .iter()
        .map(|row| {
            if row.len() != constraints {
                return Err(CsgError::InvalidModel(
                    "players disagree on the number of constraint bounds".into(),
                ));
            }
            Ok(row.iter().map(|&k| relax_kappa(k, params.kappa_level())).collect())
        })
        .collect::<Result<_, _>>()?;

    let spec = GameSpec {
        players,
        states,
        actions,
        transition,
        costs,
        kappa,
        alpha: model.alpha(),
        eta,
    };
    spec.require_valid()?;

    let diagnostics = TruncationDiagnostics {
        m: params.m,
        sqrt_m: (params.m as f64).sqrt(),
        retained_states: retained,
        has_boundary,
        eta_tail_mass: tail,
        eta_boundary_mass,
        redirected_max,
        redirected_witness,
        eta_restricted,
    };
    Ok((spec, diagnostics))
}

/// One entry of a [`truncation_sweep`]: the level and either the solved
/// record or the error that stopped it (other levels still run).
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub m: u64,
    pub outcome: Result<McsgRun, String>,
}

/// Solved approximation at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct McsgRun {
    pub diagnostics: TruncationDiagnostics,
    pub report: NashReport,
    /// Costs of the reported profile under the perturbed initial law (the
    /// approximation's own), per player per layer.
    pub j_perturbed: Vec<Vec<f64>>,
    /// Costs of the same profile under the restricted unperturbed law.
    pub j_restricted: Vec<Vec<f64>>,
    /// Largest per-entry difference between the two evaluations.
    pub initial_gap: f64,
    /// Certified ceiling `√m_clip · Σ|Δη|` (plus numerical headroom) the
    /// gap was checked against.
    pub initial_gap_bound: f64,
}

/// Build and solve the approximation at each level of `ms` (strictly
/// increasing), recording equilibrium reports, both initial-law
/// evaluations, and the certified sensitivity bound. A failed level is
/// recorded and skipped, not fatal.
pub fn truncation_sweep(
    model: &dyn CountableModel,
    ms: &[u64],
    cutoff: CutoffPolicy,
    opts: &NashOptions,
) -> Result<Vec<SweepRecord>, CsgError> {
    if ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CsgError::InvalidArgument(
            "approximation levels must be strictly increasing".into(),
        ));
    }
    let mut records = Vec::with_capacity(ms.len());
    for &m in ms {
        let outcome = run_level(model, m, cutoff, opts).map_err(|e| e.to_string());
        records.push(SweepRecord { m, outcome });
    }
    Ok(records)
}

fn run_level(
    model: &dyn CountableModel,
    m: u64,
    cutoff: CutoffPolicy,
    opts: &NashOptions,
) -> Result<McsgRun, CsgError> {
    let params = McsgParams {
        cutoff,
        ..McsgParams::new(m)
    };
    let (spec, diagnostics) = build_mcsg(model, &params)?;
    let report = solve_nash(&spec, opts)?;
    let j_perturbed = evaluate_exact(&spec, &report.profile)?.j;
    let restricted = spec.with_eta(diagnostics.eta_restricted.clone());
    let j_restricted = evaluate_exact(&restricted, &report.profile)?.j;

    let tv: f64 = spec
        .eta
        .iter()
        .zip(&diagnostics.eta_restricted)
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    let initial_gap = j_perturbed
        .iter()
        .flatten()
        .zip(j_restricted.iter().flatten())
        .map(|(&a, &b)| (a - b).abs())
        .fold(0.0, f64::max);
    let initial_gap_bound = (params.clip_level() as f64).sqrt() * tv + 1e-9;
    if initial_gap > initial_gap_bound {
        return Err(CsgError::NumericalFailure {
            context: "initial-law sensitivity bound",
            residual: initial_gap,
            bound: initial_gap_bound,
        });
    }
    Ok(McsgRun {
        diagnostics,
        report,
        j_perturbed,
        j_restricted,
        initial_gap,
        initial_gap_bound,
    })
}
