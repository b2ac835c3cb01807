//! Reference semantics: µXPath evaluated by plain fixpoint iteration over a
//! sibling tree, and path expressions evaluated as binary relations.
//!
//! Nothing here depends on the automata; the other engines are tested
//! against it.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use crate::query::{block_order, Axis, FixKind, MuXPathQuery, NodeExpr, PathExpr, QueryError};
use crate::tree::{NodeAddress, SiblingTree, HFC, HRS, IFC, IRS};

/// A set of node ids of one tree.
pub type NodeSet = FixedBitSet;

/// Assignment of node sets to variables.
pub type Valuation = HashMap<String, NodeSet>;

/// Successor sets, indexed by node id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    succ: Vec<NodeSet>,
}

impl Relation {
    fn empty(n: usize) -> Self {
        Relation { succ: vec![NodeSet::with_capacity(n); n] }
    }

    fn identity_on(set: &NodeSet, n: usize) -> Self {
        let mut r = Relation::empty(n);
        for x in set.ones() {
            r.succ[x].insert(x);
        }
        r
    }

    pub fn successors(&self, x: usize) -> &NodeSet {
        &self.succ[x]
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (x, s) in self.succ.iter().enumerate() {
            out.extend(s.ones().map(|y| (x, y)));
        }
        out
    }

    fn compose(&self, other: &Relation) -> Relation {
        let n = self.succ.len();
        let mut r = Relation::empty(n);
        for x in 0..n {
            for y in self.succ[x].ones() {
                r.succ[x].union_with(&other.succ[y]);
            }
        }
        r
    }

    fn union(mut self, other: &Relation) -> Relation {
        for (a, b) in self.succ.iter_mut().zip(&other.succ) {
            a.union_with(b);
        }
        self
    }

    fn transpose(&self) -> Relation {
        let n = self.succ.len();
        let mut r = Relation::empty(n);
        for (x, y) in self.pairs() {
            r.succ[y].insert(x);
        }
        r
    }

    fn reflexive_transitive(&self) -> Relation {
        let n = self.succ.len();
        let mut r = Relation::empty(n);
        for x in 0..n {
            let mut seen = NodeSet::with_capacity(n);
            seen.insert(x);
            let mut stack = vec![x];
            while let Some(y) = stack.pop() {
                for z in self.succ[y].ones() {
                    if !seen.put(z) {
                        stack.push(z);
                    }
                }
            }
            r.succ[x] = seen;
        }
        r
    }
}

fn axis_targets(t: &SiblingTree, a: Axis, x: usize) -> Vec<usize> {
    match a {
        Axis::Child => t.children(x).to_vec(),
        Axis::ChildInv => t.parent(x).into_iter().collect(),
        Axis::Fchild => t.first_child(x).into_iter().collect(),
        Axis::FchildInv => match t.parent(x) {
            Some(p) if t.index(x) == 1 => vec![p],
            _ => vec![],
        },
        Axis::Right => t.next_sibling(x).into_iter().collect(),
        Axis::RightInv => t.prev_sibling(x).into_iter().collect(),
    }
}

fn axis_relation(t: &SiblingTree, a: Axis) -> Relation {
    let mut r = Relation::empty(t.len());
    for x in 0..t.len() {
        for y in axis_targets(t, a, x) {
            r.succ[x].insert(y);
        }
    }
    r
}

struct Evaluator<'a> {
    t: &'a SiblingTree,
    n: usize,
}

impl Evaluator<'_> {
    fn full(&self) -> NodeSet {
        let mut s = NodeSet::with_capacity(self.n);
        s.insert_range(..);
        s
    }

    fn prop(&self, p: &str) -> NodeSet {
        let t = self.t;
        let mut s = NodeSet::with_capacity(self.n);
        for x in 0..self.n {
            let holds = match p {
                IFC => t.parent(x).is_some() && t.index(x) == 1,
                IRS => t.parent(x).is_some() && t.index(x) > 1,
                HFC => !t.children(x).is_empty(),
                HRS => t.next_sibling(x).is_some(),
                _ => t.label(x).contains(p),
            };
            s.set(x, holds);
        }
        s
    }

    fn expr(&self, e: &NodeExpr, rho: &Valuation) -> NodeSet {
        match e {
            NodeExpr::True => self.full(),
            NodeExpr::False => NodeSet::with_capacity(self.n),
            NodeExpr::Prop(p) => self.prop(p),
            NodeExpr::Var(v) => rho
                .get(v)
                .cloned()
                .unwrap_or_else(|| panic!("variable ${v} evaluated before its block")),
            NodeExpr::Not(x) => {
                let mut s = self.expr(x, rho);
                s.toggle_range(..);
                s
            }
            NodeExpr::And(a, b) => {
                let mut s = self.expr(a, rho);
                s.intersect_with(&self.expr(b, rho));
                s
            }
            NodeExpr::Or(a, b) => {
                let mut s = self.expr(a, rho);
                s.union_with(&self.expr(b, rho));
                s
            }
            NodeExpr::Implies(a, b) => {
                let mut s = self.expr(a, rho);
                s.toggle_range(..);
                s.union_with(&self.expr(b, rho));
                s
            }
            NodeExpr::Diamond(p, x) => {
                let target = self.expr(x, rho);
                let mut s = NodeSet::with_capacity(self.n);
                match p {
                    PathExpr::Ax(a) => {
                        for y in 0..self.n {
                            s.set(y, axis_targets(self.t, *a, y).iter().any(|&z| target.contains(z)));
                        }
                    }
                    _ => {
                        let r = self.path(p, rho);
                        for y in 0..self.n {
                            s.set(y, r.succ[y].intersection(&target).next().is_some());
                        }
                    }
                }
                s
            }
            NodeExpr::Box(p, x) => {
                let target = self.expr(x, rho);
                let mut s = NodeSet::with_capacity(self.n);
                match p {
                    PathExpr::Ax(a) => {
                        for y in 0..self.n {
                            s.set(y, axis_targets(self.t, *a, y).iter().all(|&z| target.contains(z)));
                        }
                    }
                    _ => {
                        let r = self.path(p, rho);
                        for y in 0..self.n {
                            s.set(y, r.succ[y].is_subset(&target));
                        }
                    }
                }
                s
            }
        }
    }

    fn path(&self, p: &PathExpr, rho: &Valuation) -> Relation {
        match p {
            PathExpr::Ax(a) => axis_relation(self.t, *a),
            PathExpr::Inverse(x) => self.path(x, rho).transpose(),
            PathExpr::Test(e) => Relation::identity_on(&self.expr(e, rho), self.n),
            PathExpr::Seq(a, b) => self.path(a, rho).compose(&self.path(b, rho)),
            PathExpr::Union(a, b) => self.path(a, rho).union(&self.path(b, rho)),
            PathExpr::Star(x) => self.path(x, rho).reflexive_transitive(),
        }
    }

    /// Solves one block by simultaneous iteration; returns the round count.
    fn block(&self, kind: FixKind, eqs: &[(String, NodeExpr)], rho: &mut Valuation) -> usize {
        let start = match kind {
            FixKind::Lfp => NodeSet::with_capacity(self.n),
            FixKind::Gfp => self.full(),
        };
        for (v, _) in eqs {
            rho.insert(v.clone(), start.clone());
        }
        let mut rounds = 0;
        loop {
            rounds += 1;
            let next: Vec<NodeSet> = eqs.iter().map(|(_, e)| self.expr(e, rho)).collect();
            let mut changed = false;
            for ((v, _), s) in eqs.iter().zip(next) {
                let slot = rho.get_mut(v).expect("initialized");
                if *slot != s {
                    *slot = s;
                    changed = true;
                }
            }
            if !changed {
                return rounds;
            }
        }
    }
}

/// Evaluates every variable of the query; blocks are solved in dependency
/// order. Also returns the number of rounds used per block.
pub fn eval_valuation(q: &MuXPathQuery, t: &SiblingTree) -> Result<(Valuation, Vec<usize>), QueryError> {
    let ev = Evaluator { t, n: t.len() };
    let mut rho = Valuation::new();
    let mut rounds = Vec::new();
    for i in block_order(q)? {
        let b = &q.blocks[i];
        let eqs: Vec<(String, NodeExpr)> = b.equations.iter().map(|e| (e.var.clone(), e.body.clone())).collect();
        rounds.push(ev.block(b.kind, &eqs, &mut rho));
    }
    Ok((rho, rounds))
}

/// Node ids selected by the query.
pub fn eval_query_ids(q: &MuXPathQuery, t: &SiblingTree) -> Result<NodeSet, QueryError> {
    let (mut rho, _) = eval_valuation(q, t)?;
    rho.remove(&q.goal).ok_or_else(|| QueryError::Undefined(q.goal.clone()))
}

/// Addresses of the nodes selected by the query.
pub fn eval_query_direct(q: &MuXPathQuery, t: &SiblingTree) -> Result<BTreeSet<NodeAddress>, QueryError> {
    Ok(eval_query_ids(q, t)?.ones().map(|x| t.address(x)).collect())
}

/// Evaluates a node expression under a valuation of its free variables.
pub fn eval_expr_direct(e: &NodeExpr, t: &SiblingTree, rho: &Valuation) -> NodeSet {
    Evaluator { t, n: t.len() }.expr(e, rho)
}

/// The relation denoted by a (variable-free) path expression.
pub fn eval_path_relation(p: &PathExpr, t: &SiblingTree) -> BTreeSet<(NodeAddress, NodeAddress)> {
    let r = Evaluator { t, n: t.len() }.path(p, &Valuation::new());
    r.pairs().into_iter().map(|(x, y)| (t.address(x), t.address(y))).collect()
}

pub fn eval_path_ids(p: &PathExpr, t: &SiblingTree, rho: &Valuation) -> Relation {
    Evaluator { t, n: t.len() }.path(p, rho)
}
