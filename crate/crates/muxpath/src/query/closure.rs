use std::collections::{HashMap, HashSet};

use super::ast::NodeExpr;
use super::normalize::{nnf, NormalizedQuery};
use crate::tree::FLAGS;

/// The syntactic closure of a normalized query, in discovery order.
///
/// The four structural flags come first, then equation heads and bodies in
/// block order, then everything reached by the closure rules.
#[derive(Clone, Debug, Default)]
pub struct ClosureSet {
    exprs: Vec<NodeExpr>,
    index: HashMap<NodeExpr, usize>,
}

impl ClosureSet {
    pub fn len(&self) -> usize {
        self.exprs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exprs.is_empty()
    }

    pub fn exprs(&self) -> &[NodeExpr] {
        &self.exprs
    }

    pub fn index_of(&self, e: &NodeExpr) -> Option<usize> {
        self.index.get(e).copied()
    }

    pub fn contains(&self, e: &NodeExpr) -> bool {
        self.index.contains_key(e)
    }

    fn insert(&mut self, e: NodeExpr) -> bool {
        if self.index.contains_key(&e) {
            return false;
        }
        self.index.insert(e.clone(), self.exprs.len());
        self.exprs.push(e);
        true
    }
}

fn is_flag(e: &NodeExpr) -> bool {
    matches!(e, NodeExpr::Prop(p) if crate::tree::is_reserved(p))
}

fn has_var(e: &NodeExpr) -> bool {
    let mut hit = false;
    e.collect(&mut |x| hit |= matches!(x, NodeExpr::Var(_)));
    hit
}

/// Expressions one rule application away from `e`.
fn rule_successors(e: &NodeExpr) -> Vec<NodeExpr> {
    let mut out = Vec::new();
    // The negation rule is only applied to variable-free expressions: a
    // negated variable has no transitions.
    if !matches!(e, NodeExpr::Not(_)) && !has_var(e) && !is_flag(e) {
        out.push(nnf(&NodeExpr::not(e.clone())));
    }
    match e {
        NodeExpr::Not(x) => out.push((**x).clone()),
        NodeExpr::And(a, b) | NodeExpr::Or(a, b) => {
            out.push((**a).clone());
            out.push((**b).clone());
        }
        NodeExpr::Diamond(_, x) | NodeExpr::Box(_, x) => out.push((**x).clone()),
        _ => {}
    }
    out
}

/// Closure of a normalized query: the flags plus the closure of its blocks.
pub fn closure(q: &NormalizedQuery) -> ClosureSet {
    let mut cl = ClosureSet::default();
    for f in FLAGS {
        cl.insert(NodeExpr::prop(f));
    }
    let mut queue = Vec::new();
    for b in q.blocks() {
        for eq in &b.equations {
            queue.push(NodeExpr::var(&eq.var));
            queue.push(eq.body.clone());
        }
    }
    let mut i = 0;
    while i < queue.len() {
        let e = queue[i].clone();
        i += 1;
        if cl.insert(e.clone()) {
            queue.extend(rule_successors(&e));
        }
    }
    cl
}

/// One round of the closure rules applied to every member.
pub fn closure_rule_step(cl: &ClosureSet) -> HashSet<NodeExpr> {
    let mut out: HashSet<NodeExpr> = cl.exprs.iter().cloned().collect();
    for e in &cl.exprs {
        out.extend(rule_successors(e));
    }
    out
}

/// Distinct node subexpressions of the equation heads and bodies.
pub fn subexpression_count(q: &NormalizedQuery) -> usize {
    let mut seen = HashSet::new();
    for b in q.blocks() {
        for eq in &b.equations {
            seen.insert(NodeExpr::var(&eq.var));
            eq.body.collect(&mut |x| {
                seen.insert(x.clone());
            });
        }
    }
    seen.len()
}
