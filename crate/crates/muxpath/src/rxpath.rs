//! Lowering of regular path expressions and the `child` axis to core µXPath
//! over `fchild`, `right` and their inverses.

use std::collections::{BTreeSet, HashSet};

use crate::query::{
    nnf, Axis, Equation, FixKind, FixpointBlock, MuXPathQuery, NodeExpr, PathExpr, QueryError,
};

/// Pushes `^-` down to the axes.
pub fn push_inverses(p: &PathExpr) -> PathExpr {
    push(p, false)
}

fn push(p: &PathExpr, inv: bool) -> PathExpr {
    match p {
        PathExpr::Ax(a) => PathExpr::Ax(if inv { a.inverse() } else { *a }),
        PathExpr::Inverse(x) => push(x, !inv),
        PathExpr::Test(e) => PathExpr::test(push_inverses_expr(e)),
        PathExpr::Seq(a, b) => {
            if inv {
                PathExpr::seq(push(b, true), push(a, true))
            } else {
                PathExpr::seq(push(a, false), push(b, false))
            }
        }
        PathExpr::Union(a, b) => PathExpr::union(push(a, inv), push(b, inv)),
        PathExpr::Star(x) => PathExpr::star(push(x, inv)),
    }
}

fn map_paths(e: &NodeExpr, f: &dyn Fn(&PathExpr) -> PathExpr) -> NodeExpr {
    match e {
        NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) | NodeExpr::Var(_) => e.clone(),
        NodeExpr::Not(x) => NodeExpr::not(map_paths(x, f)),
        NodeExpr::And(a, b) => NodeExpr::and(map_paths(a, f), map_paths(b, f)),
        NodeExpr::Or(a, b) => NodeExpr::or(map_paths(a, f), map_paths(b, f)),
        NodeExpr::Implies(a, b) => NodeExpr::implies(map_paths(a, f), map_paths(b, f)),
        NodeExpr::Diamond(p, x) => NodeExpr::dia(f(p), map_paths(x, f)),
        NodeExpr::Box(p, x) => NodeExpr::boxed(f(p), map_paths(x, f)),
    }
}

pub fn push_inverses_expr(e: &NodeExpr) -> NodeExpr {
    map_paths(e, &push_inverses)
}

/// Replaces `child` by `fchild/right*` and `child^-` by `right^-*/fchild^-`.
/// Expects inverses to be pushed already.
pub fn lower_child_axis(p: &PathExpr) -> PathExpr {
    match p {
        PathExpr::Ax(Axis::Child) => {
            PathExpr::seq(PathExpr::Ax(Axis::Fchild), PathExpr::star(PathExpr::Ax(Axis::Right)))
        }
        PathExpr::Ax(Axis::ChildInv) => {
            PathExpr::seq(PathExpr::star(PathExpr::Ax(Axis::RightInv)), PathExpr::Ax(Axis::FchildInv))
        }
        PathExpr::Ax(a) => PathExpr::Ax(*a),
        PathExpr::Inverse(x) => PathExpr::inverse(lower_child_axis(x)),
        PathExpr::Test(e) => PathExpr::test(lower_child_axis_expr(e)),
        PathExpr::Seq(a, b) => PathExpr::seq(lower_child_axis(a), lower_child_axis(b)),
        PathExpr::Union(a, b) => PathExpr::union(lower_child_axis(a), lower_child_axis(b)),
        PathExpr::Star(x) => PathExpr::star(lower_child_axis(x)),
    }
}

pub fn lower_child_axis_expr(e: &NodeExpr) -> NodeExpr {
    map_paths(e, &lower_child_axis)
}

fn lower_axes(e: &NodeExpr) -> NodeExpr {
    lower_child_axis_expr(&push_inverses_expr(e))
}

/// Deterministic fresh variable names `_1`, `_2`, ... avoiding `used`.
struct Fresh {
    next: usize,
    used: HashSet<String>,
}

impl Fresh {
    fn new(used: HashSet<String>) -> Self {
        Fresh { next: 1, used }
    }

    fn var(&mut self) -> String {
        loop {
            let name = format!("_{}", self.next);
            self.next += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

/// Rewrites to the ¬ / ∧ / ⟨P⟩ basis used by the τ translation.
fn to_basis(e: &NodeExpr) -> NodeExpr {
    let basis_path = |p: &PathExpr| p.map_tests(&to_basis);
    match e {
        NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) | NodeExpr::Var(_) => e.clone(),
        NodeExpr::Not(x) => NodeExpr::not(to_basis(x)),
        NodeExpr::And(a, b) => NodeExpr::and(to_basis(a), to_basis(b)),
        NodeExpr::Or(a, b) => NodeExpr::not(NodeExpr::and(
            NodeExpr::not(to_basis(a)),
            NodeExpr::not(to_basis(b)),
        )),
        NodeExpr::Implies(a, b) => NodeExpr::not(NodeExpr::and(to_basis(a), NodeExpr::not(to_basis(b)))),
        NodeExpr::Diamond(p, x) => NodeExpr::dia(basis_path(p), to_basis(x)),
        NodeExpr::Box(p, x) => NodeExpr::not(NodeExpr::dia(basis_path(p), NodeExpr::not(to_basis(x)))),
    }
}

struct Tau<'a> {
    fresh: &'a mut Fresh,
    blocks: Vec<FixpointBlock>,
}

impl Tau<'_> {
    fn lfp(&mut self, equations: Vec<Equation>) {
        self.blocks.push(FixpointBlock { kind: FixKind::Lfp, equations });
    }

    fn single(&mut self, body: NodeExpr) -> String {
        let x = self.fresh.var();
        self.lfp(vec![Equation { var: x.clone(), body }]);
        x
    }

    /// τ on an expression in the basis; returns the variable denoting it.
    fn tau(&mut self, e: &NodeExpr) -> String {
        match e {
            NodeExpr::Var(v) => v.clone(),
            NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) => self.single(e.clone()),
            NodeExpr::Not(x) => {
                let inner = self.tau(x);
                self.single(NodeExpr::not(NodeExpr::Var(inner)))
            }
            NodeExpr::And(a, b) => {
                let xa = self.tau(a);
                let xb = self.tau(b);
                self.single(NodeExpr::and(NodeExpr::Var(xa), NodeExpr::Var(xb)))
            }
            NodeExpr::Diamond(p, x) => {
                let target = self.tau(x);
                let mut eqs = Vec::new();
                let v = self.tau_p(p, target, &mut eqs);
                self.lfp(eqs);
                v
            }
            NodeExpr::Or(..) | NodeExpr::Implies(..) | NodeExpr::Box(..) => {
                unreachable!("τ expects the ¬/∧/⟨⟩ basis")
            }
        }
    }

    /// τ_p for `<p> target`; equations go to `eqs`, test blocks to `self`.
    fn tau_p(&mut self, p: &PathExpr, target: String, eqs: &mut Vec<Equation>) -> String {
        let z = self.fresh.var();
        let body = match p {
            PathExpr::Ax(a) => NodeExpr::dia(PathExpr::Ax(*a), NodeExpr::Var(target)),
            PathExpr::Test(t) => {
                let xt = self.tau(t);
                NodeExpr::and(NodeExpr::Var(xt), NodeExpr::Var(target))
            }
            PathExpr::Seq(a, b) => {
                let inner = self.tau_p(b, target, eqs);
                NodeExpr::Var(self.tau_p(a, inner, eqs))
            }
            PathExpr::Union(a, b) => {
                let xa = self.tau_p(a, target.clone(), eqs);
                let xb = self.tau_p(b, target, eqs);
                NodeExpr::or(NodeExpr::Var(xa), NodeExpr::Var(xb))
            }
            PathExpr::Star(x) => {
                let step = self.tau_p(x, z.clone(), eqs);
                NodeExpr::or(NodeExpr::Var(target), NodeExpr::Var(step))
            }
            PathExpr::Inverse(_) => unreachable!("inverses are pushed before τ"),
        };
        eqs.push(Equation { var: z.clone(), body });
        z
    }
}

/// The τ translation of an RXPath node expression into a query whose goal
/// denotes the expression. Variables in `e` are kept as free references.
pub fn lower_paths(e: &NodeExpr) -> MuXPathQuery {
    let mut used = HashSet::new();
    e.collect(&mut |x| {
        if let NodeExpr::Var(v) = x {
            used.insert(v.clone());
        }
    });
    let mut fresh = Fresh::new(used);
    let mut t = Tau { fresh: &mut fresh, blocks: Vec::new() };
    let goal = t.tau(&to_basis(&lower_axes(e)));
    let mut blocks = t.blocks;
    let goal = if blocks.iter().any(|b| b.equations.iter().any(|q| q.var == goal)) {
        goal
    } else {
        let g = fresh.var();
        blocks.push(FixpointBlock {
            kind: FixKind::Lfp,
            equations: vec![Equation { var: g.clone(), body: NodeExpr::Var(goal) }],
        });
        g
    };
    MuXPathQuery { goal, blocks }
}

#[derive(Clone, Copy, Default)]
struct PathShape {
    nullable: bool,
    forward: bool,
    backward: bool,
}

fn path_shape(p: &PathExpr) -> PathShape {
    match p {
        PathExpr::Ax(a) => PathShape { nullable: false, forward: a.is_forward(), backward: !a.is_forward() },
        PathExpr::Test(_) => PathShape { nullable: true, ..Default::default() },
        PathExpr::Inverse(x) => {
            let s = path_shape(x);
            PathShape { forward: s.backward, backward: s.forward, ..s }
        }
        PathExpr::Seq(a, b) | PathExpr::Union(a, b) => {
            let (sa, sb) = (path_shape(a), path_shape(b));
            let nullable = if matches!(p, PathExpr::Seq(..)) {
                sa.nullable && sb.nullable
            } else {
                sa.nullable || sb.nullable
            };
            PathShape { nullable, forward: sa.forward || sb.forward, backward: sa.backward || sb.backward }
        }
        PathExpr::Star(x) => PathShape { nullable: true, ..path_shape(x) },
    }
}

/// Every step of the path strictly moves in one vertical direction, so
/// iterating it cannot cycle on a finite tree.
pub(crate) fn well_founded(p: &PathExpr) -> bool {
    let s = path_shape(p);
    !s.nullable && !(s.forward && s.backward)
}

fn has_complex_path(e: &NodeExpr) -> bool {
    let mut hit = false;
    e.collect(&mut |x| {
        if let NodeExpr::Diamond(p, _) | NodeExpr::Box(p, _) = x {
            hit |= p.as_core_axis().is_none();
        }
    });
    hit
}

fn is_atomic(e: &NodeExpr) -> bool {
    match e {
        NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) | NodeExpr::Var(_) => true,
        NodeExpr::Not(x) => is_atomic(x),
        _ => false,
    }
}

struct BodyLowering<'a> {
    fresh: &'a mut Fresh,
    own: &'a BTreeSet<String>,
    kind: FixKind,
    head: String,
    equations: Vec<Equation>,
    hoisted: Vec<FixpointBlock>,
}

impl BodyLowering<'_> {
    fn lower(&mut self, e: &NodeExpr) -> Result<NodeExpr, QueryError> {
        if !has_complex_path(e) {
            return Ok(e.clone());
        }
        if !e.mentions_any(self.own) {
            let mut t = Tau { fresh: self.fresh, blocks: Vec::new() };
            let v = t.tau(&to_basis(e));
            self.hoisted.extend(t.blocks);
            return Ok(NodeExpr::Var(v));
        }
        Ok(match e {
            NodeExpr::And(a, b) => NodeExpr::and(self.lower(a)?, self.lower(b)?),
            NodeExpr::Or(a, b) => NodeExpr::or(self.lower(a)?, self.lower(b)?),
            NodeExpr::Diamond(p, x) => {
                let t = self.lower(x)?;
                self.dia(p, t)?
            }
            NodeExpr::Box(p, x) => {
                let t = self.lower(x)?;
                self.boxed(p, t)?
            }
            _ => e.clone(),
        })
    }

    fn bind(&mut self, t: NodeExpr) -> NodeExpr {
        if is_atomic(&t) {
            return t;
        }
        let z = self.fresh.var();
        self.equations.push(Equation { var: z.clone(), body: t });
        NodeExpr::Var(z)
    }

    fn mismatch(&self, p: &PathExpr, modality: &str) -> QueryError {
        QueryError::Alternation {
            var: self.head.clone(),
            detail: format!(
                "{modality}({p})* in a {} block would need a fixpoint of the other kind",
                self.kind.keyword()
            ),
        }
    }

    fn dia(&mut self, p: &PathExpr, t: NodeExpr) -> Result<NodeExpr, QueryError> {
        Ok(match p {
            PathExpr::Ax(a) => NodeExpr::dia(PathExpr::Ax(*a), t),
            PathExpr::Test(phi) => NodeExpr::and(self.lower(phi)?, t),
            PathExpr::Seq(a, b) => {
                let inner = self.dia(b, t)?;
                self.dia(a, inner)?
            }
            PathExpr::Union(a, b) => {
                let t = self.bind(t);
                NodeExpr::or(self.dia(a, t.clone())?, self.dia(b, t)?)
            }
            PathExpr::Star(x) => {
                if self.kind == FixKind::Gfp && !well_founded(x) {
                    return Err(self.mismatch(x, "<>"));
                }
                let z = self.fresh.var();
                let step = self.dia(x, NodeExpr::Var(z.clone()))?;
                self.equations.push(Equation { var: z.clone(), body: NodeExpr::or(t, step) });
                NodeExpr::Var(z)
            }
            PathExpr::Inverse(_) => unreachable!("inverses are pushed before lowering"),
        })
    }

    fn boxed(&mut self, p: &PathExpr, t: NodeExpr) -> Result<NodeExpr, QueryError> {
        Ok(match p {
            PathExpr::Ax(a) => NodeExpr::boxed(PathExpr::Ax(*a), t),
            PathExpr::Test(phi) => {
                let neg = nnf(&NodeExpr::not((**phi).clone()));
                NodeExpr::or(self.lower(&neg)?, t)
            }
            PathExpr::Seq(a, b) => {
                let inner = self.boxed(b, t)?;
                self.boxed(a, inner)?
            }
            PathExpr::Union(a, b) => {
                let t = self.bind(t);
                NodeExpr::and(self.boxed(a, t.clone())?, self.boxed(b, t)?)
            }
            PathExpr::Star(x) => {
                if self.kind == FixKind::Lfp && !well_founded(x) {
                    return Err(self.mismatch(x, "[]"));
                }
                let z = self.fresh.var();
                let step = self.boxed(x, NodeExpr::Var(z.clone()))?;
                self.equations.push(Equation { var: z.clone(), body: NodeExpr::and(t, step) });
                NodeExpr::Var(z)
            }
            PathExpr::Inverse(_) => unreachable!("inverses are pushed before lowering"),
        })
    }
}

/// Lowers every body of a monotone query to core axes in negation normal
/// form. Subformulas independent of their own block are translated with τ
/// into new blocks; the rest is unfolded in place with fresh variables of the
/// block's own kind.
pub fn lower_query(q: &MuXPathQuery) -> Result<MuXPathQuery, QueryError> {
    let used: HashSet<String> = q.defined_vars().map(str::to_string).collect();
    let mut fresh = Fresh::new(used);
    let mut blocks = Vec::new();
    let mut hoisted = Vec::new();
    for b in &q.blocks {
        let own: BTreeSet<String> = b.equations.iter().map(|e| e.var.clone()).collect();
        let mut equations = Vec::new();
        for eq in &b.equations {
            let body = nnf(&lower_axes(&eq.body));
            let mut l = BodyLowering {
                fresh: &mut fresh,
                own: &own,
                kind: b.kind,
                head: eq.var.clone(),
                equations: Vec::new(),
                hoisted: Vec::new(),
            };
            let lowered = l.lower(&body)?;
            let (extra, more) = (l.equations, l.hoisted);
            equations.push(Equation { var: eq.var.clone(), body: lowered });
            equations.extend(extra);
            hoisted.extend(more);
        }
        blocks.push(FixpointBlock { kind: b.kind, equations });
    }
    // τ output is in the ¬/∧ basis; bring it back to NNF
    for b in hoisted.iter_mut() {
        for e in b.equations.iter_mut() {
            e.body = nnf(&e.body);
        }
    }
    blocks.extend(hoisted);
    Ok(MuXPathQuery { goal: q.goal.clone(), blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{parse_node_expr, parse_query, render_query, validate_query};

    fn path(src: &str) -> PathExpr {
        match parse_node_expr(&format!("<{src}>true")).unwrap() {
            NodeExpr::Diamond(p, _) => p,
            _ => unreachable!(),
        }
    }

    #[test]
    fn pushes_inverses() {
        assert_eq!(push_inverses(&path("(fchild/right)^-")), path("right^-/fchild^-"));
        assert_eq!(push_inverses(&PathExpr::inverse(path("?(a)"))), path("?(a)"));
        assert_eq!(push_inverses(&path("(right*)^-")), path("right^-*"));
        assert_eq!(push_inverses(&path("((fchild | right)^-)^-")), path("fchild | right"));
    }

    #[test]
    fn lowers_child_axis() {
        let e = lower_child_axis_expr(&parse_node_expr("<child>a").unwrap());
        assert_eq!(e, parse_node_expr("<fchild/right*>a").unwrap());
        let e = lower_child_axis_expr(&parse_node_expr("[child]a").unwrap());
        assert_eq!(e, parse_node_expr("[fchild/right*]a").unwrap());
        let e = lower_child_axis_expr(&push_inverses_expr(&parse_node_expr("<child^->a").unwrap()));
        assert_eq!(e, parse_node_expr("<right^-*/fchild^->a").unwrap());
        let same = parse_node_expr("<fchild>a & [right^-]b").unwrap();
        assert_eq!(lower_child_axis_expr(&same), same);
    }

    #[test]
    fn tau_of_right_star() {
        let q = lower_paths(&parse_node_expr("<right*>a").unwrap());
        // X_a = a, then Z = X_a | W, W = <right>Z in one lfp block
        assert_eq!(q.blocks.len(), 2);
        assert_eq!(render_query(&q), "$_2 : lfp { $_1 = a } lfp { $_3 = <right>$_2; $_2 = $_1 | $_3 }");
    }

    #[test]
    fn tau_of_box_right_star_has_two_lfp_blocks_and_negation() {
        let q = lower_paths(&parse_node_expr("[right*]a").unwrap());
        assert!(q.blocks.iter().all(|b| b.kind == FixKind::Lfp));
        let goal = q.equation(&q.goal).unwrap();
        assert!(matches!(goal.body, NodeExpr::Not(_)));
    }

    #[test]
    fn tau_of_test() {
        let q = lower_paths(&parse_node_expr("<?(b)>a").unwrap());
        let goal = q.equation(&q.goal).unwrap();
        assert!(matches!(&goal.body, NodeExpr::And(x, y)
            if matches!(**x, NodeExpr::Var(_)) && matches!(**y, NodeExpr::Var(_))));
    }

    #[test]
    fn inline_star_in_own_block() {
        let q = parse_query("$X : lfp { $X = red | <child>$X }").unwrap();
        let l = lower_query(&q).unwrap();
        assert_eq!(l.blocks.len(), 1);
        assert_eq!(render_query(&l), "$X : lfp { $X = red | <fchild>$_1; $_1 = $X | <right>$_1 }");
    }

    #[test]
    fn mismatched_star_is_rejected_unless_well_founded() {
        let bad = parse_query("$X : gfp { $X = <(fchild | fchild^-)*>$X }").unwrap();
        assert!(matches!(validate_query(&bad), Err(QueryError::Alternation { .. })));
        let bad = parse_query("$X : gfp { $X = a & <(fchild | ?(b))*>$X }").unwrap();
        assert!(matches!(validate_query(&bad), Err(QueryError::Alternation { .. })));
        let bad = parse_query("$X : lfp { $X = a | [(right | right^-)*]$X }").unwrap();
        assert!(matches!(validate_query(&bad), Err(QueryError::Alternation { .. })));
        let ok = parse_query("$X : gfp { $X = a & <fchild*>$X }").unwrap();
        assert!(validate_query(&ok).is_ok());
        let ok = parse_query("$X : gfp { $X = a & <(fchild/right)*>$X }").unwrap();
        assert!(validate_query(&ok).is_ok());
    }

    #[test]
    fn lowered_size_is_linear() {
        for src in ["<(fchild | right)*/?(a)/right^->b", "[u](a -> <fchild/?(b)/(right/?(c))*>[right]false)"] {
            let e = parse_node_expr(src).unwrap();
            let q = lower_paths(&e);
            assert!(q.size() <= 12 * e.size(), "{src}: {} vs {}", q.size(), e.size());
        }
    }
}
