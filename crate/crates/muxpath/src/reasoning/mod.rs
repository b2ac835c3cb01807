//! Decision procedures reduced to automaton nonemptiness: satisfiability,
//! containment, root constraints and view-based answering.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::direct::eval_query_direct;
use crate::emptiness::{twata_nonempty, EmptinessError, EmptinessOptions, EmptinessStats, Nonemptiness};
use crate::query::{validate_query, Equation, FixKind, FixpointBlock, MuXPathQuery, NodeExpr, PathExpr, QueryError};
use crate::query::Axis;
use crate::tree::{decode_binary, NodeAddress, SiblingTree};
use crate::twata::{build_wf_automaton, TwataError};

mod builders;
mod views;

pub use builders::{dtd_rule_constraint, nominal_constraint, parse_dtd_rule, DtdRule, Particle};
pub use views::{certain_answer, parse_views, Certainty, NodeRef, ViewSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReasoningError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Automaton(#[from] TwataError),
    #[error(transparent)]
    Search(#[from] EmptinessError),
    #[error("internal error: {0}")]
    Verification(String),
    #[error("{0}")]
    Input(String),
}

/// A query read at the root: satisfied by a tree when it selects the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootConstraint {
    pub query: MuXPathQuery,
}

impl RootConstraint {
    pub fn new(query: MuXPathQuery) -> Self {
        RootConstraint { query }
    }

    /// Parses a query (`$X : ...`) or a bare node expression, which is
    /// lowered to a query.
    pub fn parse(text: &str) -> Result<Self, QueryError> {
        let body = text.lines().map(|l| l.trim_start()).find(|l| !l.is_empty() && !l.starts_with('#'));
        if body.is_some_and(|l| l.starts_with('$')) {
            crate::query::parse_query(text).map(RootConstraint::new)
        } else {
            crate::query::parse_node_expr(text).map(|e| RootConstraint::new(crate::rxpath::lower_paths(&e)))
        }
    }

    pub fn holds_on(&self, t: &SiblingTree) -> Result<bool, QueryError> {
        Ok(eval_query_direct(&self.query, t)?.contains(&NodeAddress::root()))
    }
}

/// A tree and one of its nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub tree: SiblingTree,
    pub node: NodeAddress,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatVerdict {
    Sat(Witness),
    Unsat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Containment {
    Contained,
    NotContained(Witness),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Implication {
    Implied,
    NotImplied { countermodel: SiblingTree, explanation: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReasoningStats {
    /// States of the automaton whose nonemptiness was decided.
    pub automaton_states: usize,
    pub search: EmptinessStats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report<V> {
    pub verdict: V,
    pub stats: ReasoningStats,
}

fn verify(ok: bool, what: impl FnOnce() -> String) -> Result<(), ReasoningError> {
    if ok {
        Ok(())
    } else {
        Err(ReasoningError::Verification(what()))
    }
}

/// Variables of a query, for picking fresh names.
fn used_vars(q: &MuXPathQuery) -> BTreeSet<String> {
    let mut used: BTreeSet<String> = q.defined_vars().map(String::from).collect();
    for eq in q.blocks.iter().flat_map(|b| &b.equations) {
        used.extend(eq.body.vars());
    }
    used.insert(q.goal.clone());
    used
}

fn fresh_var(used: &BTreeSet<String>, base: &str) -> String {
    let mut v = base.to_string();
    while used.contains(&v) {
        v.push('~');
    }
    v
}

fn suffixed(q: &MuXPathQuery, suffix: &str) -> MuXPathQuery {
    q.rename_vars(&|v| format!("{v}#{suffix}"))
}

/// `$goal : F_1 ∪ … ∪ lfp { $goal = body }` with the parts' blocks
/// appended as they are.
fn combine(goal: &str, body: NodeExpr, parts: &[MuXPathQuery]) -> MuXPathQuery {
    let mut blocks: Vec<FixpointBlock> = parts.iter().flat_map(|q| q.blocks.iter().cloned()).collect();
    blocks.push(FixpointBlock {
        kind: FixKind::Lfp,
        equations: vec![Equation { var: goal.to_string(), body }],
    });
    MuXPathQuery { goal: goal.to_string(), blocks }
}

/// Decides whether some tree has a node selected by `q`; a witness is
/// checked with the direct evaluator.
pub fn satisfiable(q: &MuXPathQuery, opts: EmptinessOptions) -> Result<Report<SatVerdict>, ReasoningError> {
    let nq = validate_query(q)?;
    let a = build_wf_automaton(&nq)?;
    let r = twata_nonempty(&a, opts)?;
    let stats = ReasoningStats { automaton_states: a.len(), search: r.stats };
    let verdict = match r.result {
        Nonemptiness::Empty => SatVerdict::Unsat,
        Nonemptiness::Witness(b) => {
            let tree = decode_binary(&b.flag_core())
                .map_err(|e| ReasoningError::Verification(format!("witness is not a tree encoding: {e}")))?;
            let selected = eval_query_direct(q, &tree)?;
            let node = selected
                .into_iter()
                .next()
                .ok_or_else(|| ReasoningError::Verification(format!("witness {tree} has no selected node")))?;
            SatVerdict::Sat(Witness { tree, node })
        }
    };
    Ok(Report { verdict, stats })
}

/// The query selecting the nodes of `q1` that `q2` does not select.
pub fn difference_query(q1: &MuXPathQuery, q2: &MuXPathQuery) -> MuXPathQuery {
    let (a, b) = (suffixed(q1, "1"), suffixed(q2, "2"));
    let body = NodeExpr::and(NodeExpr::var(&a.goal), NodeExpr::not(NodeExpr::var(&b.goal)));
    combine("X#0", body, &[a, b])
}

/// Decides `q1 ⊑ q2` on all trees.
pub fn contained(q1: &MuXPathQuery, q2: &MuXPathQuery, opts: EmptinessOptions) -> Result<Report<Containment>, ReasoningError> {
    validate_query(q1)?;
    validate_query(q2)?;
    let r = satisfiable(&difference_query(q1, q2), opts)?;
    let verdict = match r.verdict {
        SatVerdict::Unsat => Containment::Contained,
        SatVerdict::Sat(w) => {
            let in1 = eval_query_direct(q1, &w.tree)?.contains(&w.node);
            let in2 = eval_query_direct(q2, &w.tree)?.contains(&w.node);
            verify(in1 && !in2, || format!("node {} of {} does not separate the queries", w.node, w.tree))?;
            Containment::NotContained(w)
        }
    };
    Ok(Report { verdict, stats: r.stats })
}

fn no_parent() -> NodeExpr {
    NodeExpr::and(
        NodeExpr::boxed(PathExpr::ax(Axis::FchildInv), NodeExpr::False),
        NodeExpr::boxed(PathExpr::ax(Axis::RightInv), NodeExpr::False),
    )
}

/// One query selecting the root exactly when every constraint holds there.
/// Constraint `i` has its variables suffixed with `#i` (from 1).
pub fn constraints_to_query(gamma: &[RootConstraint]) -> MuXPathQuery {
    let parts: Vec<MuXPathQuery> =
        gamma.iter().enumerate().map(|(i, c)| suffixed(&c.query, &(i + 1).to_string())).collect();
    let body = NodeExpr::and_all(
        std::iter::once(no_parent()).chain(parts.iter().map(|q| NodeExpr::var(&q.goal))),
    );
    combine("X#r", body, &parts)
}

/// The constraint holding at the root exactly when `q` selects some node.
pub fn query_to_constraint(q: &MuXPathQuery) -> RootConstraint {
    let x = fresh_var(&used_vars(q), "X#q");
    let body = NodeExpr::or_all([
        NodeExpr::var(&q.goal),
        NodeExpr::dia(PathExpr::ax(Axis::Fchild), NodeExpr::var(&x)),
        NodeExpr::dia(PathExpr::ax(Axis::Right), NodeExpr::var(&x)),
    ]);
    RootConstraint::new(combine(&x, body, std::slice::from_ref(q)))
}

/// The constraint holding at a node exactly when `c` does not.
pub fn negate_constraint(c: &RootConstraint) -> RootConstraint {
    let x = fresh_var(&used_vars(&c.query), "X#n");
    let body = NodeExpr::not(NodeExpr::var(&c.query.goal));
    RootConstraint::new(combine(&x, body, std::slice::from_ref(&c.query)))
}

/// Finds a tree satisfying every constraint; the tree is checked against
/// each constraint.
pub fn constraints_satisfiable(
    gamma: &[RootConstraint],
    opts: EmptinessOptions,
) -> Result<Report<Option<SiblingTree>>, ReasoningError> {
    for c in gamma {
        validate_query(&c.query)?;
    }
    let r = satisfiable(&constraints_to_query(gamma), opts)?;
    let verdict = match r.verdict {
        SatVerdict::Unsat => None,
        SatVerdict::Sat(w) => {
            verify(w.node.is_root(), || format!("combined constraint selected {} in {}", w.node, w.tree))?;
            for (i, c) in gamma.iter().enumerate() {
                verify(c.holds_on(&w.tree)?, || format!("constraint {} fails on {}", i + 1, w.tree))?;
            }
            Some(w.tree)
        }
    };
    Ok(Report { verdict, stats: r.stats })
}

/// Decides `gamma ⊨ phi`.
pub fn implies(gamma: &[RootConstraint], phi: &RootConstraint, opts: EmptinessOptions) -> Result<Report<Implication>, ReasoningError> {
    validate_query(&phi.query)?;
    let mut all = gamma.to_vec();
    all.push(negate_constraint(phi));
    let r = constraints_satisfiable(&all, opts)?;
    let verdict = match r.verdict {
        None => Implication::Implied,
        Some(tree) => {
            verify(!phi.holds_on(&tree)?, || format!("countermodel {tree} satisfies the implied constraint"))?;
            let explanation = if gamma.is_empty() {
                "the constraint fails at the root".to_string()
            } else {
                format!("all {} premises hold at the root but the constraint fails there", gamma.len())
            };
            Implication::NotImplied { countermodel: tree, explanation }
        }
    };
    Ok(Report { verdict, stats: r.stats })
}

/// Splits a constraints file into stanzas separated by blank lines.
pub fn parse_constraints(text: &str) -> Result<Vec<RootConstraint>, QueryError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for line in text.lines().chain(std::iter::once("")) {
        if line.trim().is_empty() {
            let has_content = cur.lines().any(|l| {
                let l = l.trim();
                !l.is_empty() && !l.starts_with('#')
            });
            if has_content {
                out.push(RootConstraint::parse(&cur)?);
            }
            cur.clear();
        } else {
            cur.push_str(line);
            cur.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
