use std::collections::HashMap;

use super::{Pbf, Twata, TwataError};
use crate::query::{closure, render_expr, Axis, FixKind, NodeExpr, NormalizedQuery, PathExpr};
use crate::tree::{HFC, HRS, IFC, IRS};

/// Compiles a normalized query into a 2WATA whose states are the closure of
/// the query. The automaton accepts from a node exactly when the query
/// selects it.
pub fn compile_query(q: &NormalizedQuery) -> Result<Twata, TwataError> {
    let cl = closure(q);
    let props = Twata::prop_list(q.query().props())?;
    let prop = |p: &str| props.iter().position(|x| x == p).expect("prop collected");
    let state = |e: &NodeExpr| cl.index_of(e).expect("closure is closed");

    let mut block_pos = HashMap::new();
    for (i, b) in q.blocks().iter().enumerate() {
        for eq in &b.equations {
            block_pos.insert(eq.var.as_str(), i);
        }
    }
    let body: HashMap<&str, &NodeExpr> =
        q.blocks().iter().flat_map(|b| b.equations.iter().map(|e| (e.var.as_str(), &e.body))).collect();

    let mut delta = Vec::with_capacity(cl.len());
    let mut partition = vec![Vec::new(); q.blocks().len() + 1];
    for (s, e) in cl.exprs().iter().enumerate() {
        let f = match e {
            NodeExpr::True => Pbf::True,
            NodeExpr::False => Pbf::False,
            NodeExpr::Prop(p) => Pbf::Label(prop(p), true),
            NodeExpr::Not(x) => match &**x {
                NodeExpr::Prop(p) => Pbf::Label(prop(p), false),
                other => unreachable!("negation of {other} in normal form"),
            },
            NodeExpr::Var(v) => Pbf::Move(0, state(body[v.as_str()])),
            NodeExpr::And(a, b) => Pbf::And(vec![Pbf::Move(0, state(a)), Pbf::Move(0, state(b))]),
            NodeExpr::Or(a, b) => Pbf::Or(vec![Pbf::Move(0, state(a)), Pbf::Move(0, state(b))]),
            NodeExpr::Diamond(p, x) | NodeExpr::Box(p, x) => {
                let ax = match p {
                    PathExpr::Ax(a) => *a,
                    other => unreachable!("non-core path {other} after normalization"),
                };
                let (flag, dir) = match ax {
                    Axis::Fchild => (HFC, 1),
                    Axis::Right => (HRS, 2),
                    Axis::FchildInv => (IFC, -1),
                    Axis::RightInv => (IRS, -1),
                    Axis::Child | Axis::ChildInv => unreachable!("child axis after normalization"),
                };
                let mv = Pbf::Move(dir, state(x));
                if matches!(e, NodeExpr::Diamond(..)) {
                    Pbf::And(vec![Pbf::Label(prop(flag), true), mv])
                } else {
                    Pbf::Or(vec![Pbf::Label(prop(flag), false), mv])
                }
            }
            NodeExpr::Implies(..) => unreachable!("implication in normal form"),
        };
        delta.push(f);
        let class = e.vars().iter().map(|v| block_pos[v.as_str()] + 1).max().unwrap_or(0);
        partition[class].push(s);
    }
    let mut alpha = vec![false; cl.len()];
    for (i, b) in q.blocks().iter().enumerate() {
        if b.kind == FixKind::Gfp {
            for &s in &partition[i + 1] {
                alpha[s] = true;
            }
        }
    }
    Ok(Twata {
        props,
        states: cl.exprs().iter().map(render_expr).collect(),
        initial: state(&NodeExpr::var(q.goal())),
        delta,
        alpha,
        partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{parse_query, validate_query};
    use crate::random::{random_query, QueryShape};
    use proptest::prelude::*;

    fn compile(src: &str) -> Twata {
        compile_query(&validate_query(&parse_query(src).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn fchild_diamond_guards_with_hfc() {
        let a = compile("$X : lfp { $X = <fchild>red }");
        let s = a.states.iter().position(|n| n == "<fchild>red").unwrap();
        let red = a.states.iter().position(|n| n == "red").unwrap();
        let hfc = a.prop_index("hfc").unwrap();
        assert_eq!(a.delta[s].resolve(1 << hfc), Pbf::Move(1, red));
        assert_eq!(a.delta[s].resolve(0), Pbf::False);
        let r = a.prop_index("red").unwrap();
        assert_eq!(a.delta[red].resolve(1 << r), Pbf::True);
        assert_eq!(a.delta[red].resolve(0), Pbf::False);
    }

    #[test]
    fn box_right_inverse_defaults_to_true_without_irs() {
        let a = compile("$X : gfp { $X = [right^-]$X }");
        let s = a.states.iter().position(|n| n == "[right^-]$X").unwrap();
        let x = a.states.iter().position(|n| n == "$X").unwrap();
        assert_eq!(a.delta[s].resolve(0), Pbf::True);
        assert_eq!(a.delta[s].resolve(1 << a.prop_index("irs").unwrap()), Pbf::Move(-1, x));
        assert!(a.alpha[s] && a.alpha[x]);
    }

    #[test]
    fn classes_follow_blocks() {
        let a = compile("$Y : gfp { $Y = red & [child]$Y } lfp { $X = $Y | <child>$X }");
        a.validate_weakness().unwrap();
        assert_eq!(a.partition.len(), 3);
        let y = a.states.iter().position(|n| n == "$Y").unwrap();
        let x = a.states.iter().position(|n| n == "$X").unwrap();
        assert!(a.alpha[y]);
        assert!(!a.alpha[x]);
        assert_eq!(a.states[a.initial], "$Y");
    }

    proptest! {
        #[test]
        fn compiled_automata_are_weak(seed in any::<u64>()) {
            let q = validate_query(&random_query(seed, &QueryShape::default())).unwrap();
            let a = compile_query(&q).unwrap();
            prop_assert!(a.validate_weakness().is_ok(), "{:?}", a.validate_weakness());
            prop_assert_eq!(a.len(), closure(&q).len());
        }
    }
}
