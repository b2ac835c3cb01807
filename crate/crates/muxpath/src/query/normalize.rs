use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::{Equation, FixpointBlock, MuXPathQuery, NodeExpr, PathExpr};
use super::render::render_expr;
use super::{check_definitions, QueryError};
use crate::rxpath;

/// Negation normal form: negation only on propositions and variables,
/// implications removed, modalities dualized. Path tests are normalized too.
pub fn nnf(e: &NodeExpr) -> NodeExpr {
    pos(e)
}

fn nnf_path(p: &PathExpr) -> PathExpr {
    p.map_tests(&pos)
}

fn pos(e: &NodeExpr) -> NodeExpr {
    match e {
        NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) | NodeExpr::Var(_) => e.clone(),
        NodeExpr::Not(x) => neg(x),
        NodeExpr::And(a, b) => NodeExpr::and(pos(a), pos(b)),
        NodeExpr::Or(a, b) => NodeExpr::or(pos(a), pos(b)),
        NodeExpr::Implies(a, b) => NodeExpr::or(neg(a), pos(b)),
        NodeExpr::Diamond(p, x) => NodeExpr::dia(nnf_path(p), pos(x)),
        NodeExpr::Box(p, x) => NodeExpr::boxed(nnf_path(p), pos(x)),
    }
}

fn neg(e: &NodeExpr) -> NodeExpr {
    match e {
        NodeExpr::True => NodeExpr::False,
        NodeExpr::False => NodeExpr::True,
        NodeExpr::Prop(_) | NodeExpr::Var(_) => NodeExpr::not(e.clone()),
        NodeExpr::Not(x) => pos(x),
        NodeExpr::And(a, b) => NodeExpr::or(neg(a), neg(b)),
        NodeExpr::Or(a, b) => NodeExpr::and(neg(a), neg(b)),
        NodeExpr::Implies(a, b) => NodeExpr::and(pos(a), neg(b)),
        NodeExpr::Diamond(p, x) => NodeExpr::boxed(nnf_path(p), neg(x)),
        NodeExpr::Box(p, x) => NodeExpr::dia(nnf_path(p), neg(x)),
    }
}

fn visit_polarity(e: &NodeExpr, positive: bool, f: &mut dyn FnMut(&str, bool)) {
    match e {
        NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) => {}
        NodeExpr::Var(v) => f(v, positive),
        NodeExpr::Not(x) => visit_polarity(x, !positive, f),
        NodeExpr::And(a, b) | NodeExpr::Or(a, b) => {
            visit_polarity(a, positive, f);
            visit_polarity(b, positive, f);
        }
        NodeExpr::Implies(a, b) => {
            visit_polarity(a, !positive, f);
            visit_polarity(b, positive, f);
        }
        NodeExpr::Diamond(p, x) => {
            visit_path_polarity(p, positive, f);
            visit_polarity(x, positive, f);
        }
        NodeExpr::Box(p, x) => {
            visit_path_polarity(p, !positive, f);
            visit_polarity(x, positive, f);
        }
    }
}

fn visit_path_polarity(p: &PathExpr, positive: bool, f: &mut dyn FnMut(&str, bool)) {
    match p {
        PathExpr::Ax(_) => {}
        PathExpr::Test(e) => visit_polarity(e, positive, f),
        PathExpr::Inverse(x) | PathExpr::Star(x) => visit_path_polarity(x, positive, f),
        PathExpr::Seq(a, b) | PathExpr::Union(a, b) => {
            visit_path_polarity(a, positive, f);
            visit_path_polarity(b, positive, f);
        }
    }
}

/// Rejects a block variable occurring negatively in a body of its own block.
pub fn check_monotone(q: &MuXPathQuery) -> Result<(), QueryError> {
    for b in &q.blocks {
        let own: HashSet<&str> = b.equations.iter().map(|e| e.var.as_str()).collect();
        for eq in &b.equations {
            let mut bad = None;
            visit_polarity(&eq.body, true, &mut |v, positive| {
                if !positive && own.contains(v) && bad.is_none() {
                    bad = Some(v.to_string());
                }
            });
            if let Some(var) = bad {
                return Err(QueryError::NotMonotone {
                    var,
                    equation: eq.var.clone(),
                    occurrence: render_expr(&eq.body),
                });
            }
        }
    }
    Ok(())
}

/// Topological order of blocks (dependencies first), breaking ties by the
/// lowest block index.
pub fn block_order(q: &MuXPathQuery) -> Result<Vec<usize>, QueryError> {
    let n = q.blocks.len();
    let mut owner = HashMap::new();
    for (i, b) in q.blocks.iter().enumerate() {
        for e in &b.equations {
            owner.insert(e.var.as_str(), i);
        }
    }
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut indeg = vec![0usize; n];
    for (i, b) in q.blocks.iter().enumerate() {
        let deps: BTreeSet<usize> = b
            .equations
            .iter()
            .flat_map(|e| e.body.vars())
            .filter_map(|v| owner.get(v.as_str()).copied())
            .filter(|&j| j != i)
            .collect();
        for j in deps {
            if succ[j].insert(i) {
                indeg[i] += 1;
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&i) = ready.iter().next() {
        ready.remove(&i);
        order.push(i);
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if order.len() < n {
        let stuck: Vec<usize> = (0..n).filter(|i| !order.contains(i)).collect();
        return Err(QueryError::CyclicBlocks(stuck));
    }
    Ok(order)
}

fn negated_vars(e: &NodeExpr, out: &mut BTreeSet<String>) {
    e.collect(&mut |x| {
        if let NodeExpr::Not(inner) = x {
            if let NodeExpr::Var(v) = &**inner {
                out.insert(v.clone());
            }
        }
    });
}

fn replace_negated(e: &NodeExpr, dual: &HashMap<String, String>) -> NodeExpr {
    match e {
        NodeExpr::Not(inner) => match &**inner {
            NodeExpr::Var(v) => NodeExpr::Var(dual[v].clone()),
            _ => NodeExpr::not(replace_negated(inner, dual)),
        },
        NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) | NodeExpr::Var(_) => e.clone(),
        NodeExpr::And(a, b) => NodeExpr::and(replace_negated(a, dual), replace_negated(b, dual)),
        NodeExpr::Or(a, b) => NodeExpr::or(replace_negated(a, dual), replace_negated(b, dual)),
        NodeExpr::Implies(a, b) => NodeExpr::implies(replace_negated(a, dual), replace_negated(b, dual)),
        NodeExpr::Diamond(p, x) => {
            NodeExpr::dia(p.map_tests(&|t| replace_negated(t, dual)), replace_negated(x, dual))
        }
        NodeExpr::Box(p, x) => {
            NodeExpr::boxed(p.map_tests(&|t| replace_negated(t, dual)), replace_negated(x, dual))
        }
    }
}

/// Removes negated variable occurrences from an NNF query by adding, for each
/// block whose variables occur negated, a dual block of the opposite kind.
/// The dual of `$X` is named `$X~`.
pub fn dualize(q: &MuXPathQuery) -> MuXPathQuery {
    let mut blocks = q.blocks.clone();
    let mut names: HashSet<String> = q.defined_vars().map(str::to_string).collect();
    let mut dual: HashMap<String, String> = HashMap::new();
    let mut pending: BTreeSet<String> = BTreeSet::new();
    for b in &blocks {
        for e in &b.equations {
            negated_vars(&e.body, &mut pending);
        }
    }
    while let Some(v) = pending.pop_first() {
        if dual.contains_key(&v) {
            continue;
        }
        let bi = blocks
            .iter()
            .position(|b| b.equations.iter().any(|e| e.var == v))
            .expect("negated variable is defined");
        let src = blocks[bi].clone();
        for e in &src.equations {
            let mut name = format!("{}~", e.var);
            while names.contains(&name) {
                name.push('~');
            }
            names.insert(name.clone());
            dual.insert(e.var.clone(), name);
        }
        let equations: Vec<Equation> = src
            .equations
            .iter()
            .map(|e| {
                let body = nnf(&NodeExpr::not(e.body.clone()));
                negated_vars(&body, &mut pending);
                Equation { var: dual[&e.var].clone(), body }
            })
            .collect();
        blocks.push(FixpointBlock { kind: src.kind.dual(), equations });
    }
    let blocks = blocks
        .into_iter()
        .map(|b| FixpointBlock {
            kind: b.kind,
            equations: b
                .equations
                .into_iter()
                .map(|e| Equation { var: e.var, body: replace_negated(&e.body, &dual) })
                .collect(),
        })
        .collect();
    MuXPathQuery { goal: q.goal.clone(), blocks }
}

/// A validated query over the binary axes only, in negation normal form,
/// without negated variables, with blocks in dependency order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedQuery {
    query: MuXPathQuery,
}

impl NormalizedQuery {
    pub fn query(&self) -> &MuXPathQuery {
        &self.query
    }

    pub fn into_query(self) -> MuXPathQuery {
        self.query
    }

    pub fn goal(&self) -> &str {
        &self.query.goal
    }

    pub fn blocks(&self) -> &[FixpointBlock] {
        &self.query.blocks
    }
}

/// Checks definitions, monotonicity and block acyclicity, then lowers paths
/// and the child axis, puts bodies in NNF, adds dual blocks and sorts blocks.
pub fn validate_query(q: &MuXPathQuery) -> Result<NormalizedQuery, QueryError> {
    check_definitions(q)?;
    check_monotone(q)?;
    block_order(q)?;
    let lowered = rxpath::lower_query(q)?;
    let dual = dualize(&lowered);
    let order = block_order(&dual)?;
    let blocks = order.into_iter().map(|i| dual.blocks[i].clone()).collect();
    Ok(NormalizedQuery { query: MuXPathQuery { goal: dual.goal, blocks } })
}
