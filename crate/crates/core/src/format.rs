//! Versioned JSON file formats and canonical rendering.
//!
//! Two document kinds are supported, both strict (unknown keys rejected)
//! and versioned by a mandatory `format` field:
//!
//! * **Game documents** (`"format": "csg-1"`): players, state and action
//!   identifiers, a transition table keyed by state with one sparse
//!   `{target: probability}` map per joint-action profile, a cost table
//!   keyed by state with one `[player][layer]` matrix per profile, bounds,
//!   discount factor, and initial distribution.
//! * **Strategy documents** (`"format": "csg-strategy-1"`): one
//!   `{state: {action: probability}}` map per player; absent actions carry
//!   probability zero.
//!
//! Canonical rendering makes equal data produce equal bytes: object keys
//! sorted, every float printed as `{:.16e}` (17 significant digits, exact
//! round-trip), integers printed plain, negative zero normalized to zero.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::CsgError;
use crate::model::{
    GameSpec, MultiStrategy, StationaryStrategy, ValidationReport, Violation,
};

/// Version tag of game documents.
pub const GAME_FORMAT: &str = "csg-1";
/// Version tag of strategy documents.
pub const STRATEGY_FORMAT: &str = "csg-strategy-1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameDoc {
    format: String,
    players: usize,
    states: Vec<String>,
    actions: Vec<Vec<Vec<String>>>,
    transition: BTreeMap<String, Vec<BTreeMap<String, f64>>>,
    costs: BTreeMap<String, Vec<Vec<Vec<f64>>>>,
    kappa: Vec<Vec<f64>>,
    alpha: f64,
    eta: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyDoc {
    format: String,
    strategies: Vec<BTreeMap<String, BTreeMap<String, f64>>>,
}

fn file_violation(location: &str, detail: String) -> Violation {
    Violation {
        invariant: "file-format".into(),
        location: location.to_owned(),
        detail,
    }
}

/// Parse and fully validate a game document.
///
/// Syntactic problems (malformed JSON, unknown keys) surface as
/// invalid-argument errors; structural problems (wrong version, unknown
/// state identifiers) and semantic problems (non-stochastic rows, discount
/// out of range) surface as a validation report.
pub fn parse_game(text: &str) -> Result<GameSpec, CsgError> {
    let doc: GameDoc = serde_json::from_str(text)
        .map_err(|e| CsgError::InvalidArgument(format!("game document does not parse: {e}")))?;
    let mut report = ValidationReport::default();

    if doc.format != GAME_FORMAT {
        report.violations.push(file_violation(
            "format",
            format!("expected {GAME_FORMAT:?}, found {:?}", doc.format),
        ));
    }
    let mut seen = std::collections::BTreeSet::new();
    for id in &doc.states {
        if !seen.insert(id.clone()) {
            report.violations.push(file_violation(
                "states",
                format!("duplicate state id {id:?} breaks the keyed tables"),
            ));
        }
    }
    for key in doc.transition.keys() {
        if !doc.states.contains(key) {
            report.violations.push(file_violation(
                "transition",
                format!("unknown state id {key:?}"),
            ));
        }
    }
    for key in doc.costs.keys() {
        if !doc.states.contains(key) {
            report
                .violations
                .push(file_violation("costs", format!("unknown state id {key:?}")));
        }
    }

    // Assemble dense tensors; structural issues abort before semantics.
    let index: BTreeMap<&str, usize> = doc
        .states
        .iter()
        .enumerate()
        .map(|(x, id)| (id.as_str(), x))
        .collect();
    let states = doc.states.len();

    let mut transition = Vec::with_capacity(states);
    for id in &doc.states {
        let Some(rows) = doc.transition.get(id) else {
            report.violations.push(file_violation(
                "transition",
                format!("missing entry for state {id:?}"),
            ));
            continue;
        };
        let mut dense_rows = Vec::with_capacity(rows.len());
        for (j, sparse) in rows.iter().enumerate() {
            let mut dense = vec![0.0; states];
            for (target, &p) in sparse {
                match index.get(target.as_str()) {
                    Some(&y) => dense[y] = p,
                    None => report.violations.push(file_violation(
                        "transition",
                        format!("state {id:?}, profile {j}: unknown target {target:?}"),
                    )),
                }
            }
            dense_rows.push(dense);
        }
        transition.push(dense_rows);
    }

    // Cost layer count: taken from the first entry, enforced everywhere.
    let layers = doc
        .costs
        .values()
        .flat_map(|rows| rows.iter())
        .flat_map(|profile| profile.iter())
        .map(Vec::len)
        .next()
        .unwrap_or(1);
    let mut costs = vec![vec![vec![Vec::new(); states]; layers]; doc.players.max(1)];
    for (x, id) in doc.states.iter().enumerate() {
        let Some(rows) = doc.costs.get(id) else {
            report
                .violations
                .push(file_violation("costs", format!("missing entry for state {id:?}")));
            continue;
        };
        for (j, per_player) in rows.iter().enumerate() {
            if per_player.len() != doc.players {
                report.violations.push(file_violation(
                    "costs",
                    format!(
                        "state {id:?}, profile {j}: {} player entries, expected {}",
                        per_player.len(),
                        doc.players
                    ),
                ));
                continue;
            }
            for (i, per_layer) in per_player.iter().enumerate() {
                if per_layer.len() != layers {
                    report.violations.push(file_violation(
                        "costs",
                        format!(
                            "state {id:?}, profile {j}, player {}: {} layers, expected {layers}",
                            i + 1,
                            per_layer.len()
                        ),
                    ));
                    continue;
                }
                for (layer, &c) in per_layer.iter().enumerate() {
                    costs[i][layer][x].push(c);
                }
            }
        }
    }

    if !report.is_empty() {
        return Err(CsgError::InvalidSpec(report));
    }

    let spec = GameSpec {
        players: doc.players,
        states: doc.states,
        actions: doc.actions,
        transition,
        costs,
        kappa: doc.kappa,
        alpha: doc.alpha,
        eta: doc.eta,
    };
    spec.require_valid()?;
    Ok(spec)
}

/// Parse a strategy document against a spec.
pub fn parse_multi_strategy(text: &str, spec: &GameSpec) -> Result<MultiStrategy, CsgError> {
    let doc: StrategyDoc = serde_json::from_str(text)
        .map_err(|e| CsgError::InvalidArgument(format!("strategy document does not parse: {e}")))?;
    if doc.format != STRATEGY_FORMAT {
        return Err(CsgError::InvalidArgument(format!(
            "expected format {STRATEGY_FORMAT:?}, found {:?}",
            doc.format
        )));
    }
    if doc.strategies.len() != spec.players {
        return Err(CsgError::InvalidArgument(format!(
            "document carries {} strategies, game has {} players",
            doc.strategies.len(),
            spec.players
        )));
    }
    let mut strategies = Vec::with_capacity(spec.players);
    for (i, per_state) in doc.strategies.iter().enumerate() {
        for key in per_state.keys() {
            if spec.state_index(key).is_none() {
                return Err(CsgError::InvalidArgument(format!(
                    "player {}: unknown state id {key:?}",
                    i + 1
                )));
            }
        }
        let mut rows = Vec::with_capacity(spec.num_states());
        for (x, id) in spec.states.iter().enumerate() {
            let Some(sparse) = per_state.get(id) else {
                return Err(CsgError::InvalidArgument(format!(
                    "player {}: missing row for state {id:?}",
                    i + 1
                )));
            };
            let menu = &spec.actions[i][x];
            let mut row = vec![0.0; menu.len()];
            for (action, &p) in sparse {
                match menu.iter().position(|a| a == action) {
                    Some(k) => row[k] = p,
                    None => {
                        return Err(CsgError::InvalidArgument(format!(
                            "player {}, state {id:?}: unknown action {action:?}",
                            i + 1
                        )))
                    }
                }
            }
            rows.push(row);
        }
        strategies.push(StationaryStrategy { rows });
    }
    let multi = MultiStrategy { strategies };
    multi.validate_for(spec)?;
    Ok(multi)
}

/// Render a spec as a game-document value (sparse transition rows).
pub fn game_to_value(spec: &GameSpec) -> Value {
    let transition: Map<String, Value> = spec
        .states
        .iter()
        .enumerate()
        .map(|(x, id)| {
            let rows: Vec<Value> = spec.transition[x]
                .iter()
                .map(|row| {
                    let sparse: Map<String, Value> = row
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(y, &p)| (spec.states[y].clone(), Value::from(p)))
                        .collect();
                    Value::Object(sparse)
                })
                .collect();
            (id.clone(), Value::Array(rows))
        })
        .collect();

    let costs: Map<String, Value> = spec
        .states
        .iter()
        .enumerate()
        .map(|(x, id)| {
            let rows: Vec<Value> = (0..spec.profiles(x))
                .map(|j| {
                    let per_player: Vec<Value> = (0..spec.players)
                        .map(|i| {
                            let per_layer: Vec<Value> = (0..spec.num_layers())
                                .map(|layer| Value::from(spec.costs[i][layer][x][j]))
                                .collect();
                            Value::Array(per_layer)
                        })
                        .collect();
                    Value::Array(per_player)
                })
                .collect();
            (id.clone(), Value::Array(rows))
        })
        .collect();

    json!({
        "format": GAME_FORMAT,
        "players": spec.players,
        "states": spec.states,
        "actions": spec.actions,
        "transition": Value::Object(transition),
        "costs": Value::Object(costs),
        "kappa": spec.kappa,
        "alpha": spec.alpha,
        "eta": spec.eta,
    })
}

/// Render a profile as a strategy-document value.
pub fn strategy_to_value(spec: &GameSpec, multi: &MultiStrategy) -> Value {
    let strategies: Vec<Value> = multi
        .strategies
        .iter()
        .enumerate()
        .map(|(i, phi)| {
            let per_state: Map<String, Value> = spec
                .states
                .iter()
                .enumerate()
                .map(|(x, id)| {
                    let row: Map<String, Value> = spec.actions[i][x]
                        .iter()
                        .zip(&phi.rows[x])
                        .map(|(action, &p)| (action.clone(), Value::from(p)))
                        .collect();
                    (id.clone(), Value::Object(row))
                })
                .collect();
            Value::Object(per_state)
        })
        .collect();
    json!({
        "format": STRATEGY_FORMAT,
        "strategies": strategies,
    })
}

fn push_canonical_float(out: &mut String, x: f64) {
    debug_assert!(x.is_finite(), "canonical output only carries finite numbers");
    // Normalize negative zero so equal values render equal bytes.
    let x = if x == 0.0 { 0.0 } else { x };
    out.push_str(&format!("{x:.16e}"));
}

fn push_canonical(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                push_canonical_float(out, n.as_f64().expect("numeric JSON value"));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"));
        }
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                push_canonical(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_unstable();
            out.push('{');
            for (k, key) in keys.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("strings always serialize"));
                out.push(':');
                push_canonical(out, &map[key.as_str()]);
            }
            out.push('}');
        }
    }
}

/// Canonical single-line rendering: sorted keys, floats as `{:.16e}`,
/// integers plain, negative zero normalized. Equal values produce equal
/// bytes; the caller appends the trailing newline when writing a document.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    push_canonical(&mut out, value);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical;

    fn g1_text() -> String {
        canonical_json(&game_to_value(&canonical::g1()))
    }

    #[test]
    fn game_documents_round_trip() {
        let spec = canonical::g1();
        let parsed = parse_game(&g1_text()).unwrap();
        assert_eq!(parsed, spec);
        // A second render of the parsed spec is byte-identical.
        assert_eq!(canonical_json(&game_to_value(&parsed)), g1_text());
    }

    #[test]
    fn two_player_documents_round_trip() {
        let spec = canonical::g3(0.25, [1.0, 2.0, 3.0, 4.0], [4.0, 3.0, 2.0, 1.0]);
        let text = canonical_json(&game_to_value(&spec));
        assert_eq!(parse_game(&text).unwrap(), spec);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut value = game_to_value(&canonical::g1());
        value["surprise"] = json!(1);
        let text = canonical_json(&value);
        assert!(matches!(parse_game(&text), Err(CsgError::InvalidArgument(_))));
    }

    #[test]
    fn wrong_version_tag_is_reported() {
        let mut value = game_to_value(&canonical::g1());
        value["format"] = json!("csg-0");
        match parse_game(&canonical_json(&value)) {
            Err(CsgError::InvalidSpec(report)) => {
                assert!(report.violations.iter().any(|v| v.invariant == "file-format"));
            }
            other => panic!("expected a validation report, got {other:?}"),
        }
    }

    #[test]
    fn unknown_transition_target_is_reported() {
        let mut value = game_to_value(&canonical::g1());
        value["transition"]["s0"][0] = json!({"elsewhere": 1.0});
        match parse_game(&canonical_json(&value)) {
            Err(CsgError::InvalidSpec(report)) => {
                assert!(report
                    .violations
                    .iter()
                    .any(|v| v.invariant == "file-format" && v.detail.contains("elsewhere")));
            }
            other => panic!("expected a validation report, got {other:?}"),
        }
    }

    #[test]
    fn semantic_violations_flow_through_the_spec_validator() {
        let mut spec = canonical::g1();
        spec.alpha = 0.5; // valid here; break the document instead
        let mut value = game_to_value(&spec);
        value["alpha"] = json!(1.5);
        match parse_game(&canonical_json(&value)) {
            Err(CsgError::InvalidSpec(report)) => {
                assert!(report.violations.iter().any(|v| v.invariant == "alpha-range"));
            }
            other => panic!("expected a validation report, got {other:?}"),
        }
    }

    #[test]
    fn sparse_transition_rows_default_to_zero() {
        // G1's document only lists the nonzero target s1.
        let value = game_to_value(&canonical::g1());
        let row = &value["transition"]["s0"][0];
        assert!(row.get("s0").is_none());
        let spec = parse_game(&canonical_json(&value)).unwrap();
        assert_eq!(spec.transition[0][0], vec![0.0, 1.0]);
    }

    #[test]
    fn strategy_documents_round_trip() {
        let spec = canonical::g2(0.5, 0.5);
        let multi = MultiStrategy {
            strategies: vec![StationaryStrategy {
                rows: vec![vec![0.25, 0.75]],
            }],
        };
        let text = canonical_json(&strategy_to_value(&spec, &multi));
        let parsed = parse_multi_strategy(&text, &spec).unwrap();
        assert_eq!(parsed, multi);
    }

    #[test]
    fn strategy_rows_must_cover_every_state() {
        let spec = canonical::g1();
        let text = r#"{"format":"csg-strategy-1","strategies":[{"s0":{"a":1.0}}]}"#;
        assert!(matches!(
            parse_multi_strategy(text, &spec),
            Err(CsgError::InvalidArgument(_))
        ));
    }

    #[test]
    fn strategy_unknown_action_is_rejected() {
        let spec = canonical::g1();
        let text = r#"{"format":"csg-strategy-1","strategies":[{"s0":{"z":1.0},"s1":{"a":1.0}}]}"#;
        assert!(matches!(
            parse_multi_strategy(text, &spec),
            Err(CsgError::InvalidArgument(_))
        ));
    }

    #[test]
    fn strategy_rows_must_sum_to_one() {
        let spec = canonical::g2(0.5, 0.5);
        let text = r#"{"format":"csg-strategy-1","strategies":[{"s0":{"a":0.4,"b":0.4}}]}"#;
        assert!(matches!(
            parse_multi_strategy(text, &spec),
            Err(CsgError::InvalidArgument(_))
        ));
    }

    #[test]
    fn canonical_rendering_sorts_keys_and_pins_floats() {
        let value = json!({
            "zebra": 1,
            "apple": 0.5,
            "mixed": [1, 2.0, true, null, "text"],
            "nested": {"b": -0.0, "a": 1e300},
        });
        let text = canonical_json(&value);
        assert_eq!(
            text,
            "{\"apple\":5.0000000000000000e-1,\"mixed\":[1,2.0000000000000000e0,true,null,\"text\"],\
             \"nested\":{\"a\":1.0000000000000001e300,\"b\":0.0000000000000000e0},\"zebra\":1}"
        );
    }

    #[test]
    fn canonical_floats_round_trip_exactly() {
        for &x in &[0.1, 1.0 / 3.0, 2.0_f64.powi(-30), 6.02e23, -1.2345678901234567e-8] {
            let mut out = String::new();
            push_canonical_float(&mut out, x);
            let back: f64 = out.parse().unwrap();
            assert_eq!(back, x, "{out} does not round-trip");
        }
    }

    #[test]
    fn string_escaping_matches_json() {
        let value = json!({"key\n": "va\"lue\\"});
        let text = canonical_json(&value);
        assert_eq!(text, r#"{"key\n":"va\"lue\\"}"#);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, value);
    }
}
