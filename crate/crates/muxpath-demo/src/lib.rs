//! Browser bindings: each function takes text inputs and returns a JSON
//! string, `{"error": ...}` on bad input.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use muxpath::acceptance::eval_query_automaton;
use muxpath::emptiness::EmptinessOptions;
use muxpath::query::{validate_query, MuXPathQuery};
use muxpath::reasoning::{contained, satisfiable, Containment, RootConstraint, SatVerdict, Witness};
use muxpath::tree::{parse_tree, render_tree, SiblingTree};
use muxpath::twata::compile_query;

/// Kept well below the command-line default so the page stays responsive.
pub const DEMO_MAX_STATES: usize = 200_000;

fn load_query(text: &str) -> Result<MuXPathQuery, String> {
    let q = RootConstraint::parse(text).map_err(|e| e.to_string())?.query;
    validate_query(&q).map_err(|e| e.to_string())?;
    Ok(q)
}

fn budget(max_states: u32) -> EmptinessOptions {
    let max_states = if max_states == 0 { DEMO_MAX_STATES } else { max_states as usize };
    EmptinessOptions { max_states }
}

/// Preorder rows `{address, depth, label}` for drawing an outline.
fn outline(t: &SiblingTree) -> Vec<Value> {
    let mut rows = Vec::new();
    let mut stack = vec![(t.root(), 0usize)];
    while let Some((x, depth)) = stack.pop() {
        let label: Vec<&str> = t.label(x).iter().map(String::as_str).collect();
        rows.push(json!({ "address": t.address(x).to_string(), "depth": depth, "label": label }));
        for &c in t.children(x).iter().rev() {
            stack.push((c, depth + 1));
        }
    }
    rows
}

fn witness_json(w: &Witness) -> Value {
    json!({
        "witness": render_tree(&w.tree),
        "witness_node": w.node.to_string(),
        "outline": outline(&w.tree),
    })
}

fn finish(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

/// Nodes of `tree` selected by `query`, evaluated with the automaton.
#[wasm_bindgen]
pub fn eval_query(tree: &str, query: &str) -> String {
    finish((|| {
        let t = parse_tree(tree).map_err(|e| e.to_string())?;
        let q = load_query(query)?;
        let a = compile_query(&validate_query(&q).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let nodes: Vec<String> = eval_query_automaton(&a, &t).iter().map(|n| n.to_string()).collect();
        Ok(json!({
            "verdict": if nodes.is_empty() { "NONE" } else { "SELECTED" },
            "nodes": nodes,
            "outline": outline(&t),
            "stats": { "states": a.len() },
        }))
    })())
}

/// Satisfiability with a witness; `max_states` 0 means the demo default.
#[wasm_bindgen]
pub fn check_sat(query: &str, max_states: u32) -> String {
    finish((|| {
        let r = satisfiable(&load_query(query)?, budget(max_states)).map_err(|e| e.to_string())?;
        let stats = json!({ "states": r.stats.automaton_states, "nta_states": r.stats.search.interfaces });
        Ok(match r.verdict {
            SatVerdict::Sat(w) => merge(json!({ "verdict": "SAT", "stats": stats }), witness_json(&w)),
            SatVerdict::Unsat => json!({ "verdict": "UNSAT", "stats": stats }),
        })
    })())
}

/// Whether `q1` is contained in `q2`, with a counterexample otherwise.
#[wasm_bindgen]
pub fn check_containment(q1: &str, q2: &str, max_states: u32) -> String {
    finish((|| {
        let r = contained(&load_query(q1)?, &load_query(q2)?, budget(max_states)).map_err(|e| e.to_string())?;
        let stats = json!({ "states": r.stats.automaton_states, "nta_states": r.stats.search.interfaces });
        Ok(match r.verdict {
            Containment::Contained => json!({ "verdict": "CONTAINED", "stats": stats }),
            Containment::NotContained(w) => {
                merge(json!({ "verdict": "NOT CONTAINED", "stats": stats }), witness_json(&w))
            }
        })
    })())
}
